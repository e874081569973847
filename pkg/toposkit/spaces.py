"""
Finite topological spaces, their frames of opens, sheaves on them and étale bundles.

A point `x` specializes to `y` (`x <= y`) when every open containing `x` also contains `y`;
opens are exactly the up-sets of this preorder.
"""

import logging
from collections.abc import Hashable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property, lru_cache
from itertools import combinations
from itertools import product as cartesian

import networkx
from networkx.algorithms.isomorphism import DiGraphMatcher

from toposkit.classifier import Sieve, sieves_on, subobjects
from toposkit.config import EnumerationGuard
from toposkit.errors import ToposkitError
from toposkit.fincat import FinCategory, FinFunctor, leq_id, poset_category
from toposkit.psh import Presheaf, terminal
from toposkit.reports import ValidationReport
from toposkit.sites import GrothendieckTopology, Site, is_sheaf

log = logging.getLogger(__name__)

Open = frozenset[str]


class DiscontinuousMapError(ToposkitError):
    def __init__(self, witness: Open):
        self.witness = witness
        super().__init__(f"Preimage of open {format_open(witness)} is not open")


def format_open(u: Iterable[str]) -> str:
    return "{" + ",".join(sorted(u)) + "}"


@dataclass(frozen=True, eq=False, kw_only=True)
class FinSpace:
    name: str
    points: tuple[str, ...]
    opens: tuple[Open, ...]

    @classmethod
    def build(cls, name: str, points: Iterable[str], opens: Iterable[Iterable[str]]) -> "FinSpace":
        """Opens as given plus the empty set and the whole space, canonically sorted."""
        points = tuple(points)
        order = {p: i for i, p in enumerate(points)}
        family = {frozenset(u) for u in opens} | {frozenset(), frozenset(points)}
        return cls(
            name=name,
            points=points,
            opens=tuple(
                sorted(family, key=lambda u: (len(u), sorted(order.get(p, -1) for p in u)))
            ),
        )

    @classmethod
    def generated(
        cls, name: str, points: Iterable[str], subbasis: Iterable[Iterable[str]]
    ) -> "FinSpace":
        """The coarsest topology containing `subbasis`."""
        points = tuple(points)
        family = {frozenset(u) for u in subbasis} | {frozenset(), frozenset(points)}
        changed = True
        while changed:
            changed = False
            for u, v in list(combinations(family, 2)):
                for w in (u | v, u & v):
                    if w not in family:
                        family.add(w)
                        changed = True
        return cls.build(name, points, family)

    @cached_property
    def _point_index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.points)}

    def open_key(self, u: Open) -> tuple:
        return (len(u), tuple(sorted(self._point_index[p] for p in u)))

    def is_open(self, u: Iterable[str]) -> bool:
        return frozenset(u) in self._open_set

    @cached_property
    def _open_set(self) -> frozenset[Open]:
        return frozenset(self.opens)

    @property
    def whole(self) -> Open:
        return frozenset(self.points)

    def validate(self) -> ValidationReport:
        report = ValidationReport(f"space {self.name}")
        whole = self.whole
        if len(whole) != len(self.points):
            report.add("points", "duplicate points")
        for u in self.opens:
            if not u <= whole:
                report.add("opens", f"open {format_open(u)} has unknown points", format_open(u))
        if frozenset() not in self._open_set:
            report.add("opens", "the empty set is not open")
        if whole not in self._open_set:
            report.add("opens", "the whole space is not open")
        for u, v in combinations(self.opens, 2):
            if u | v not in self._open_set:
                report.add(
                    "union",
                    f"{format_open(u)} u {format_open(v)} is not open",
                    format_open(u),
                    format_open(v),
                )
            if u & v not in self._open_set:
                report.add(
                    "intersection",
                    f"{format_open(u)} n {format_open(v)} is not open",
                    format_open(u),
                    format_open(v),
                )
        return report

    def minimal_neighbourhood(self, x: str) -> Open:
        return frozenset.intersection(*(u for u in self.opens if x in u))

    def closure(self, subset: Iterable[str]) -> frozenset[str]:
        subset = frozenset(subset)
        return self.whole - frozenset().union(*(u for u in self.opens if not u & subset))

    def closed_sets(self) -> list[frozenset[str]]:
        return [self.whole - u for u in reversed(self.opens)]

    def key(self) -> tuple:
        return (self.points, tuple(self.open_key(u) for u in self.opens))

    def __eq__(self, other):
        if not isinstance(other, FinSpace):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"FinSpace({self.name}, {len(self.points)} points, {len(self.opens)} opens)"


def point_space() -> FinSpace:
    return FinSpace.build("point", ["0"], [])


def sierpinski() -> FinSpace:
    return FinSpace.build("sierpinski", ["0", "1"], [["1"]])


def discrete_space(n: int) -> FinSpace:
    points = [str(i) for i in range(n)]
    return FinSpace.generated(f"discrete{n}", points, [[p] for p in points])


def indiscrete_space(n: int) -> FinSpace:
    return FinSpace.build(f"indiscrete{n}", [str(i) for i in range(n)], [])


def all_spaces(n: int) -> Iterator[FinSpace]:
    """Every topology on the points 0..n-1, one per specialization preorder."""
    points = [str(i) for i in range(n)]
    pairs = [(x, y) for x in points for y in points if x != y]
    subsets = [frozenset(c) for k in range(n + 1) for c in combinations(points, k)]
    count = 0
    for bits in cartesian((False, True), repeat=len(pairs)):
        relation = {pair for pair, bit in zip(pairs, bits) if bit}
        if any(
            (x, z) not in relation for x, y in relation for y2, z in relation if y == y2 and x != z
        ):
            continue
        opens = [u for u in subsets if all(y in u for x, y in relation if x in u)]
        yield FinSpace.build(f"T{n}.{count}", points, opens)
        count += 1


def specialization(space: FinSpace) -> networkx.DiGraph:
    """Edge `x -> y` when `x` lies in the closure of `y`."""
    graph = networkx.DiGraph()
    graph.add_nodes_from(space.points)
    for x in space.points:
        for y in space.points:
            if x != y and y in space.minimal_neighbourhood(x):
                graph.add_edge(x, y)
    return graph


def is_t0(space: FinSpace) -> bool:
    graph = specialization(space)
    return not any(graph.has_edge(y, x) for x, y in graph.edges)


def irreducible_closed_sets(space: FinSpace) -> list[frozenset[str]]:
    closed = space.closed_sets()
    return [
        c
        for c in closed
        if c and not any(d < c and e < c and d | e == c for d in closed for e in closed)
    ]


@dataclass(kw_only=True)
class SobrietyReport:
    is_sober: bool
    # (irreducible closed set, its generic points) for every irreducible set without exactly one
    witnesses: list[tuple[frozenset[str], list[str]]] = field(default_factory=list)


def is_sober(space: FinSpace) -> SobrietyReport:
    witnesses = []
    for c in irreducible_closed_sets(space):
        generic = [x for x in space.points if space.closure({x}) == c]
        if len(generic) != 1:
            witnesses.append((c, generic))
    return SobrietyReport(is_sober=not witnesses, witnesses=witnesses)


class LocaleRole(StrEnum):
    FRAME = "frame"
    LOCALE = "locale"


@dataclass(frozen=True, eq=False, kw_only=True)
class Frame:
    """
    A finite lattice on `elements` with `leq[i][j]` meaning element i <= element j.
    The same data serves as a locale; `role` only records which way maps are read.
    """

    name: str
    elements: tuple[Hashable, ...]
    leq: tuple[tuple[bool, ...], ...]
    role: LocaleRole = LocaleRole.FRAME

    @classmethod
    def from_opens(cls, name: str, opens: Sequence[Open]) -> "Frame":
        return cls(
            name=name,
            elements=tuple(format_open(u) for u in opens),
            leq=tuple(tuple(u <= v for v in opens) for u in opens),
        )

    def __len__(self):
        return len(self.elements)

    def as_locale(self) -> "Frame":
        return Frame(name=self.name, elements=self.elements, leq=self.leq, role=LocaleRole.LOCALE)

    def _bound(self, candidates: list[int], lower: bool) -> int | None:
        for c in candidates:
            if all((self.leq[c][d] if lower else self.leq[d][c]) for d in candidates):
                return c
        return None

    def join_of(self, items: Iterable[int]) -> int | None:
        items = list(items)
        uppers = [c for c in range(len(self)) if all(self.leq[i][c] for i in items)]
        return self._bound(uppers, lower=True)

    def meet_of(self, items: Iterable[int]) -> int | None:
        items = list(items)
        lowers = [c for c in range(len(self)) if all(self.leq[c][i] for i in items)]
        return self._bound(lowers, lower=False)

    @cached_property
    def join_table(self) -> tuple[tuple[int | None, ...], ...]:
        n = len(self)
        return tuple(tuple(self.join_of((i, j)) for j in range(n)) for i in range(n))

    @cached_property
    def meet_table(self) -> tuple[tuple[int | None, ...], ...]:
        n = len(self)
        return tuple(tuple(self.meet_of((i, j)) for j in range(n)) for i in range(n))

    def join(self, i: int, j: int) -> int:
        return self.join_table[i][j]

    def meet(self, i: int, j: int) -> int:
        return self.meet_table[i][j]

    @property
    def top(self) -> int:
        return self.join_of(range(len(self)))

    @property
    def bottom(self) -> int:
        return self.join_of(())

    def implies(self, i: int, j: int) -> int:
        """Heyting implication: the largest c with c /\\ i <= j."""
        return self.join_of(c for c in range(len(self)) if self.leq[self.meet(c, i)][j])

    def negation(self, i: int) -> int:
        return self.implies(i, self.bottom)

    def validate(self) -> ValidationReport:
        report = ValidationReport(f"frame {self.name}")
        n = len(self)
        for i in range(n):
            if not self.leq[i][i]:
                report.add("order", f"{self.elements[i]} is not <= itself", i)
            for j in range(n):
                if i != j and self.leq[i][j] and self.leq[j][i]:
                    report.add("order", "order is not antisymmetric", i, j)
                for k in range(n):
                    if self.leq[i][j] and self.leq[j][k] and not self.leq[i][k]:
                        report.add("order", "order is not transitive", i, j, k)
        if not report.ok:
            return report
        if self.bottom is None or self.meet_of(range(n)) is None:
            report.add("bounds", "missing bottom or top")
        for i in range(n):
            for j in range(n):
                if self.join(i, j) is None or self.meet(i, j) is None:
                    x, y = self.elements[i], self.elements[j]
                    report.add("lattice", f"{x} and {y} lack a join or meet", i, j)
        if not report.ok:
            return report
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    if self.meet(a, self.join(b, c)) != self.join(self.meet(a, b), self.meet(a, c)):
                        report.add(
                            "distributivity", "finite meets do not distribute over joins", a, b, c
                        )
                        return report
        return report

    def graph(self) -> networkx.DiGraph:
        n = len(self)
        graph = networkx.DiGraph()
        graph.add_nodes_from(range(n))
        graph.add_edges_from(
            (i, j) for i in range(n) for j in range(n) if i != j and self.leq[i][j]
        )
        return graph

    def __repr__(self):
        return f"Frame({self.name}, {len(self)} elements, {self.role})"


def two_element_frame() -> Frame:
    return Frame(name="2", elements=("0", "1"), leq=((True, True), (False, True)))


@dataclass(frozen=True, eq=False, kw_only=True)
class FrameMap:
    source: Frame
    target: Frame
    mapping: tuple[int, ...]

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def validate(self) -> ValidationReport:
        report = ValidationReport(f"frame map {self.source.name} -> {self.target.name}")
        src, tgt = self.source, self.target
        if len(self.mapping) != len(src) or any(not 0 <= v < len(tgt) for v in self.mapping):
            report.add("typing", "mapping is not a function between the frames")
            return report
        if self(src.bottom) != tgt.bottom:
            report.add("joins", "bottom is not preserved")
        if self(src.top) != tgt.top:
            report.add("meets", "top is not preserved")
        for i in range(len(src)):
            for j in range(len(src)):
                if src.leq[i][j] and not tgt.leq[self(i)][self(j)]:
                    report.add("order", "order is not preserved", i, j)
                if self(src.join(i, j)) != tgt.join(self(i), self(j)):
                    pair = f"{src.elements[i]}, {src.elements[j]}"
                    report.add("joins", f"join of {pair} is not preserved", i, j)
                if self(src.meet(i, j)) != tgt.meet(self(i), self(j)):
                    pair = f"{src.elements[i]}, {src.elements[j]}"
                    report.add("meets", f"meet of {pair} is not preserved", i, j)
        return report

    @property
    def is_bijective(self) -> bool:
        same_size = len(self.source) == len(self.target)
        return same_size and sorted(self.mapping) == list(range(len(self.target)))


def frame_isomorphism(source: Frame, target: Frame) -> FrameMap | None:
    """An order isomorphism, which for lattices preserves joins and meets."""
    if len(source) != len(target):
        return None
    matcher = DiGraphMatcher(source.graph(), target.graph())
    for mapping in matcher.isomorphisms_iter():
        table = tuple(mapping[i] for i in range(len(source)))
        return FrameMap(source=source, target=target, mapping=table)
    return None


@dataclass(frozen=True, eq=False, kw_only=True)
class OpenFrame:
    """Open(X) both as a frame and as a thin category with an object per open."""

    space: FinSpace
    frame: Frame
    category: FinCategory

    def object_of(self, u: Iterable[str]) -> str:
        return format_open(u)

    @cached_property
    def _opens(self) -> dict[str, Open]:
        return {format_open(u): u for u in self.space.opens}

    def open_of(self, obj: str) -> Open:
        return self._opens[obj]

    def inclusion(self, u: Iterable[str], v: Iterable[str]) -> str:
        return leq_id(format_open(u), format_open(v))

    def canonical_topology(self) -> Site:
        return canonical_topology(self.space)


def open_frame(space: FinSpace) -> OpenFrame:
    return _open_frame(space.name, space)


# spaces compare by topology alone, so the name is part of the cache key
@lru_cache(maxsize=None)
def _open_frame(name: str, space: FinSpace) -> OpenFrame:
    names = [format_open(u) for u in space.opens]
    relations = [
        (format_open(u), format_open(v)) for u in space.opens for v in space.opens if u < v
    ]
    return OpenFrame(
        space=space,
        frame=Frame.from_opens(f"Open({space.name})", space.opens),
        category=poset_category(f"Open({space.name})", names, relations),
    )


def sieve_union(frame: OpenFrame, sieve: Sieve) -> Open:
    return frozenset().union(*(frame.open_of(frame.category.dom(f)) for f in sieve.members))


def canonical_topology(space: FinSpace) -> Site:
    """A sieve on U covers iff the domains of its members have union U."""
    return _canonical_topology(space.name, space)


@lru_cache(maxsize=None)
def _canonical_topology(name: str, space: FinSpace) -> Site:
    frame = open_frame(space)
    category = frame.category
    covers = {}
    for obj in category.objects:
        u = frame.open_of(obj)
        covers[obj] = frozenset(s for s in sieves_on(category, obj) if sieve_union(frame, s) == u)
    topology = GrothendieckTopology(base=category, covers=covers, name=f"canonical({space.name})")
    return Site(base=category, topology=topology, name=topology.name)


@dataclass(frozen=True, eq=False, kw_only=True)
class ContinuousMap:
    source: FinSpace
    target: FinSpace
    mapping: Mapping[str, str]

    def __call__(self, x: str) -> str:
        return self.mapping[x]

    def preimage(self, v: Iterable[str]) -> Open:
        v = frozenset(v)
        return frozenset(x for x in self.source.points if self.mapping[x] in v)

    def image(self, u: Iterable[str]) -> frozenset[str]:
        return frozenset(self.mapping[x] for x in u)

    def discontinuity(self) -> Open | None:
        for v in self.target.opens:
            if not self.source.is_open(self.preimage(v)):
                return v
        return None

    @property
    def is_open_map(self) -> bool:
        return all(self.target.is_open(self.image(u)) for u in self.source.opens)


def continuous_map(source: FinSpace, target: FinSpace, mapping: Mapping[str, str]) -> ContinuousMap:
    """Raises `DiscontinuousMapError` with the first open whose preimage is not open."""
    f = ContinuousMap(source=source, target=target, mapping=dict(mapping))
    witness = f.discontinuity()
    if witness is not None:
        raise DiscontinuousMapError(witness)
    return f


def open_functor(f: ContinuousMap) -> FrameMap:
    """`f^-1: Open(Y) -> Open(X)`."""
    witness = f.discontinuity()
    if witness is not None:
        raise DiscontinuousMapError(witness)
    source, target = f.target.opens, f.source.opens
    position = {u: i for i, u in enumerate(target)}
    return FrameMap(
        source=open_frame(f.target).frame,
        target=open_frame(f.source).frame,
        mapping=tuple(position[f.preimage(v)] for v in source),
    )


def preimage_functor(f: ContinuousMap) -> FinFunctor:
    """`f^-1` as a functor between the categories of opens."""
    source, target = open_frame(f.target), open_frame(f.source)
    objects = {format_open(v): format_open(f.preimage(v)) for v in f.target.opens}
    morphisms = {}
    for m in source.category.morphisms:
        morphisms[m.id] = leq_id(objects[m.dom], objects[m.cod])
    return FinFunctor(
        name=f"{f.source.name}<-{f.target.name}",
        source=source.category,
        target=target.category,
        object_map=objects,
        morphism_map=morphisms,
    )


def image_functor(f: ContinuousMap) -> FinFunctor:
    """Direct image of opens, defined when `f` is an open map; left adjoint to preimage."""
    if not f.is_open_map:
        raise ValueError(f"{f.source.name} -> {f.target.name} is not an open map")
    source, target = open_frame(f.source), open_frame(f.target)
    objects = {format_open(u): format_open(f.image(u)) for u in f.source.opens}
    return FinFunctor(
        name=f"{f.source.name}->{f.target.name}",
        source=source.category,
        target=target.category,
        object_map=objects,
        morphism_map={
            m.id: leq_id(objects[m.dom], objects[m.cod]) for m in source.category.morphisms
        },
    )


@dataclass(frozen=True, eq=False, kw_only=True)
class Bundle:
    name: str
    total: FinSpace
    base: FinSpace
    projection: Mapping[str, str]

    @cached_property
    def map(self) -> ContinuousMap:
        return ContinuousMap(source=self.total, target=self.base, mapping=self.projection)

    def fibre(self, x: str) -> list[str]:
        return [y for y in self.total.points if self.projection[y] == x]

    def validate(self) -> ValidationReport:
        report = ValidationReport(f"bundle {self.name}")
        for y in self.total.points:
            if self.projection.get(y) not in self.base.points:
                report.add("projection", f"point {y} has no image in {self.base.name}", y)
        if report.ok:
            witness = self.map.discontinuity()
            if witness is not None:
                shown = format_open(witness)
                report.add("continuity", f"preimage of {shown} is not open", shown)
        return report


def identity_bundle(space: FinSpace) -> Bundle:
    return Bundle(
        name=f"id({space.name})",
        total=space,
        base=space,
        projection={x: x for x in space.points},
    )


def _sections(bundle: Bundle, u: Open, guard: EnumerationGuard) -> list[tuple[str, ...]]:
    domain = [x for x in bundle.base.points if x in u]
    found = []
    for choice in cartesian(*(bundle.fibre(x) for x in domain)):
        guard.tick()
        s = dict(zip(domain, choice))
        if all(bundle.base.is_open(x for x in domain if s[x] in w) for w in bundle.total.opens):
            found.append(tuple(choice))
    return found


def sections_sheaf(bundle: Bundle, guard: EnumerationGuard | None = None) -> Presheaf:
    """F(U) = continuous sections over U, labelled by their values in point order."""
    guard = guard or EnumerationGuard(what="sections")
    frame = open_frame(bundle.base)
    category = frame.category
    points = {
        obj: [x for x in bundle.base.points if x in frame.open_of(obj)] for obj in category.objects
    }
    labels = {obj: _sections(bundle, frame.open_of(obj), guard) for obj in category.objects}
    position = {obj: {s: k for k, s in enumerate(labels[obj])} for obj in category.objects}
    actions = {}
    for m in category.morphisms:
        keep = [points[m.cod].index(x) for x in points[m.dom]]
        actions[m.id] = tuple(position[m.dom][tuple(s[i] for i in keep)] for s in labels[m.cod])
    return Presheaf(
        base=category,
        sets={obj: len(labels[obj]) for obj in category.objects},
        actions=actions,
        labels={obj: tuple(labels[obj]) for obj in category.objects},
        name=f"Gamma({bundle.name})",
    )


def etale_space(sheaf: Presheaf, space: FinSpace) -> Bundle:
    """
    Germs of `sheaf` over `space`. Germs at x are the sections over the minimal
    neighbourhood of x; the total space carries the topology generated by the sets
    `{germ_x(s) | x in U}` for every section s over U.
    """
    frame = open_frame(space)
    category = frame.category
    neighbourhood = {x: frame.object_of(space.minimal_neighbourhood(x)) for x in space.points}

    def germ(obj: str, s: int, x: str) -> str:
        local = neighbourhood[x]
        return f"{x}.{sheaf.act(leq_id(local, obj), s)}"

    points = [f"{x}.{k}" for x in space.points for k in range(sheaf.size(neighbourhood[x]))]
    basic = [
        [germ(obj, s, x) for x in frame.open_of(obj)]
        for obj in category.objects
        for s in sheaf.elements(obj)
    ]
    total = FinSpace.generated(f"Et({sheaf.name or 'F'})", points, basic)
    projection = {p: p.rsplit(".", 1)[0] for p in points}
    log.debug(f"Etale space of {sheaf.name} has {len(points)} germs and {len(total.opens)} opens")
    return Bundle(name=total.name, total=total, base=space, projection=projection)


def is_etale(bundle: Bundle) -> bool:
    """Every point has an open neighbourhood mapped homeomorphically onto an open of the base."""
    p = bundle.map
    for y in bundle.total.points:
        if not any(_is_local_homeomorphism(bundle, p, w) for w in bundle.total.opens if y in w):
            return False
    return True


def _is_local_homeomorphism(bundle: Bundle, p: ContinuousMap, w: Open) -> bool:
    if len(p.image(w)) != len(w) or not bundle.base.is_open(p.image(w)):
        return False
    return all(bundle.base.is_open(p.image(o & w)) for o in bundle.total.opens)


def bundle_maps(
    source: Bundle, target: Bundle, guard: EnumerationGuard | None = None
) -> Iterator[ContinuousMap]:
    """Continuous maps between total spaces commuting with the projections."""
    guard = guard or EnumerationGuard(what="bundle maps")
    points = source.total.points
    for choice in cartesian(*(target.fibre(source.projection[y]) for y in points)):
        guard.tick()
        h = ContinuousMap(
            source=source.total, target=target.total, mapping=dict(zip(points, choice))
        )
        if h.discontinuity() is None:
            yield h


def find_bundle_isomorphism(source: Bundle, target: Bundle) -> ContinuousMap | None:
    if len(source.total.points) != len(target.total.points):
        return None
    for h in bundle_maps(source, target):
        if len(set(h.mapping.values())) != len(h.mapping):
            continue
        inverse = ContinuousMap(
            source=target.total, target=source.total, mapping={v: k for k, v in h.mapping.items()}
        )
        if inverse.discontinuity() is None:
            return h
    return None


@dataclass(frozen=True, eq=False, kw_only=True)
class LocaleRecovery:
    frame: Frame
    # recovered element -> open, an order isomorphism onto open_frame(space).frame
    iso: FrameMap


def recover_locale(space: FinSpace, guard: EnumerationGuard | None = None) -> LocaleRecovery:
    """
    Sub(1) in Sh(X): the subobjects of the terminal presheaf on Open(X) that are sheaves
    for the canonical topology, ordered by inclusion. Each one is sent to the union of
    the opens where it is inhabited.
    """
    site = canonical_topology(space)
    frame = open_frame(space)
    one = terminal(site.base)
    subsheaves = [
        s
        for s in subobjects(one, guard)
        if is_sheaf(s.presheaf(), site.topology, guard).is_sheaf
    ]
    recovered = Frame(
        name=f"Sub(1) in Sh({space.name})",
        elements=tuple(str(s) for s in subsheaves),
        leq=tuple(tuple(s <= t for t in subsheaves) for s in subsheaves),
    )
    position = {u: i for i, u in enumerate(space.opens)}
    mapping = []
    for s in subsheaves:
        inhabited = [frame.open_of(obj) for obj, part in s.as_dict().items() if part]
        mapping.append(position[frozenset().union(*inhabited)])
    log.debug(f"Recovered {len(subsheaves)} subterminal sheaves over {space.name}")
    iso = FrameMap(source=recovered, target=frame.frame, mapping=tuple(mapping))
    return LocaleRecovery(frame=recovered, iso=iso)


def frame_points(frame: Frame, guard: EnumerationGuard | None = None) -> list[FrameMap]:
    """Frame maps to the two-element frame, in lexicographic order of their tables."""
    guard = guard or EnumerationGuard(what="frame points")
    two = two_element_frame()
    guard.expect(2 ** len(frame))
    found = []
    for table in cartesian((0, 1), repeat=len(frame)):
        guard.tick()
        candidate = FrameMap(source=frame, target=two, mapping=table)
        if candidate.validate().ok:
            found.append(candidate)
    return found


def is_spatial(frame: Frame) -> bool:
    """Distinct elements are separated by some point."""
    points = frame_points(frame)
    return all(
        any(p(i) != p(j) for p in points)
        for i in range(len(frame))
        for j in range(i + 1, len(frame))
    )
