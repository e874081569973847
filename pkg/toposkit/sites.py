import logging
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, replace
from enum import StrEnum
from functools import cached_property, lru_cache
from itertools import product as cartesian

from networkx.utils import UnionFind

from toposkit.classifier import Sieve, omega, sieves_on
from toposkit.config import EnumerationGuard
from toposkit.fincat import FinCategory
from toposkit.psh import (
    Presheaf,
    PresheafMap,
    compose_maps,
    iter_maps,
    product,
    product_of_maps,
    representable,
    subpresheaf,
)
from toposkit.reports import ValidationReport
from toposkit.search import propagating_search

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False, kw_only=True)
class GrothendieckTopology:
    base: FinCategory
    covers: Mapping[str, frozenset[Sieve]]
    name: str = ""

    @classmethod
    def from_covers(
        cls, base: FinCategory, covers: Mapping[str, Iterable[Sieve]], name: str = ""
    ) -> "GrothendieckTopology":
        """Covers as listed, plus the maximal sieve on every object."""
        return cls(
            base=base,
            covers={
                a: frozenset(covers.get(a, ())) | {Sieve.maximal(base, a)} for a in base.objects
            },
            name=name,
        )

    def covering(self, a: str) -> list[Sieve]:
        return sorted(self.covers[a], key=Sieve.key)

    def is_cover(self, sieve: Sieve) -> bool:
        return sieve in self.covers[sieve.apex]

    def validate(self) -> ValidationReport:
        report = ValidationReport(f"topology {self.name or '?'} over {self.base.name}")
        base = self.base
        for a in base.objects:
            if Sieve.maximal(base, a) not in self.covers[a]:
                report.add("maximality", f"maximal sieve on {a} does not cover", a)
            for s in self.covers[a]:
                if not s.is_closed():
                    report.add("sieve", f"{s} on {a} is not a sieve", a, str(s))
        if not report.ok:
            return report
        for a in base.objects:
            for s in self.covering(a):
                for f in base.into(a):
                    if not self.is_cover(s.pullback(f)):
                        report.add(
                            "stability", f"pullback of {s} along {f} does not cover", a, str(s), f
                        )
        for a in base.objects:
            for r in sieves_on(base, a):
                if self.is_cover(r):
                    continue
                for s in self.covering(a):
                    if all(self.is_cover(r.pullback(f)) for f in s.members):
                        report.add(
                            "transitivity",
                            f"{r} is locally covering along {s} but does not cover",
                            a,
                            str(r),
                        )
                        break
        return report

    def key(self) -> tuple:
        return tuple(tuple(s.key() for s in self.covering(a)) for a in self.base.objects)

    def __eq__(self, other):
        if not isinstance(other, GrothendieckTopology):
            return NotImplemented
        return self.key() == other.key() and self.base == other.base

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        counts = ", ".join(f"{a}:{len(self.covers[a])}" for a in self.base.objects)
        return f"GrothendieckTopology({self.name or '?'}; covers {counts})"


def trivial_topology(base: FinCategory) -> GrothendieckTopology:
    return GrothendieckTopology.from_covers(base, {}, name="trivial")


def largest_topology(base: FinCategory) -> GrothendieckTopology:
    return GrothendieckTopology(
        base=base, covers={a: frozenset(sieves_on(base, a)) for a in base.objects}, name="largest"
    )


def _upward_families(
    sieves: tuple[Sieve, ...], guard: EnumerationGuard
) -> Iterator[frozenset[Sieve]]:
    """Upward-closed families of sieves containing the largest one."""
    descending = sorted(sieves, key=lambda s: -len(s.members))

    def extend(k: int, chosen: frozenset[Sieve]) -> Iterator[frozenset[Sieve]]:
        if k == len(descending):
            yield chosen
            return
        s = descending[k]
        guard.tick()
        supersets = [t for t in descending[:k] if s.members < t.members]
        if all(t in chosen for t in supersets):
            yield from extend(k + 1, chosen | {s})
        if k > 0:
            yield from extend(k + 1, chosen)

    yield from extend(0, frozenset())


def enumerate_topologies(
    base: FinCategory, guard: EnumerationGuard | None = None
) -> list[GrothendieckTopology]:
    """Every Grothendieck topology on `base`, by filtering upward-closed cover assignments."""
    guard = guard or EnumerationGuard(what="cover assignments")
    per_object = [list(_upward_families(sieves_on(base, a), guard)) for a in base.objects]
    found = []
    for choice in cartesian(*per_object):
        guard.tick()
        topology = GrothendieckTopology(base=base, covers=dict(zip(base.objects, choice)))
        if topology.validate().ok:
            found.append(topology)
    found.sort(key=GrothendieckTopology.key)
    found = [replace(topology, name=f"J{n}") for n, topology in enumerate(found)]
    log.debug(f"{len(found)} topologies on {base.name}")
    return found


@lru_cache(maxsize=None)
def meet_map(base: FinCategory) -> PresheafMap:
    """Intersection of sieves, `Omega x Omega -> Omega`."""
    classifier = omega(base)
    cone = product(classifier.omega, classifier.omega)
    components = {}
    for a in base.objects:
        components[a] = tuple(
            classifier.index(classifier.sieve(a, s).intersection(classifier.sieve(a, t)))
            for s, t in cone.apex.labels[a]
        )
    return PresheafMap(
        source=cone.apex, target=classifier.omega, components=components, name="meet"
    )


@dataclass(frozen=True, eq=False, kw_only=True)
class LTOperator:
    j: PresheafMap

    @property
    def base(self) -> FinCategory:
        return self.j.base

    def apply(self, sieve: Sieve) -> Sieve:
        classifier = omega(self.base)
        return classifier.sieve(sieve.apex, self.j(sieve.apex, classifier.index(sieve)))

    def validate(self) -> ValidationReport:
        report = ValidationReport("Lawvere-Tierney operator")
        classifier = omega(self.base)
        report.extend(self.j.validate())
        if not report.ok:
            return report
        if compose_maps(self.j, classifier.truth).key() != classifier.truth.key():
            report.add("truth", "j . true != true")
        if compose_maps(self.j, self.j).key() != self.j.key():
            report.add("idempotence", "j . j != j")
        meet = meet_map(self.base)
        if (
            compose_maps(self.j, meet).key()
            != compose_maps(meet, product_of_maps(self.j, self.j)).key()
        ):
            report.add("meet", "j . meet != meet . (j x j)")
        return report

    def key(self) -> tuple:
        return self.j.key()

    def __eq__(self, other):
        if not isinstance(other, LTOperator):
            return NotImplemented
        return self.j == other.j

    def __hash__(self):
        return hash(self.key())


def enumerate_lt_operators(
    base: FinCategory, guard: EnumerationGuard | None = None
) -> list[LTOperator]:
    """Brute force over Hom(Omega, Omega), kept when the three equations hold."""
    classifier = omega(base)
    found = [
        LTOperator(j=j)
        for j in iter_maps(classifier.omega, classifier.omega, guard)
        if LTOperator(j=j).validate().ok
    ]
    log.debug(f"{len(found)} Lawvere-Tierney operators on {base.name}")
    return found


def topology_to_j(topology: GrothendieckTopology) -> LTOperator:
    """`j_a(S) = {f: b -> a | f*(S) covers b}`."""
    base = topology.base
    classifier = omega(base)
    components = {}
    for a in base.objects:
        row = []
        for s in sieves_on(base, a):
            closure = frozenset(f for f in base.into(a) if topology.is_cover(s.pullback(f)))
            row.append(classifier.index(Sieve(base=base, apex=a, members=closure)))
        components[a] = tuple(row)
    return LTOperator(
        j=PresheafMap(
            source=classifier.omega, target=classifier.omega, components=components, name="j"
        )
    )


def j_to_topology(operator: LTOperator) -> GrothendieckTopology:
    """`J(a) = {S | j_a(S) is maximal}`."""
    base = operator.base
    return GrothendieckTopology(
        base=base,
        covers={
            a: frozenset(s for s in sieves_on(base, a) if operator.apply(s).is_maximal)
            for a in base.objects
        },
    )


@dataclass(frozen=True, eq=False, kw_only=True)
class Site:
    base: FinCategory
    topology: GrothendieckTopology
    name: str = ""


def matching_families(
    presheaf: Presheaf, sieve: Sieve, guard: EnumerationGuard | None = None
) -> list[tuple[int, ...]]:
    """
    Families `(x_f)` over the members of `sieve` (sorted) with `x_{f.g} = P(g)(x_f)`,
    in lexicographic order.
    """
    base = presheaf.base
    members = sieve.sorted_members()

    def forced(f, v, assignment):
        return [(base.compose(f, g), presheaf.act(g, v)) for g in base.into(base.dom(f))]

    return [
        tuple(assignment[f] for f in members)
        for assignment in propagating_search(
            members,
            lambda f: presheaf.size(base.dom(f)),
            forced,
            guard or EnumerationGuard(what="matching families"),
        )
    ]


def restrict_to_family(presheaf: Presheaf, sieve: Sieve, x: int) -> tuple[int, ...]:
    return tuple(presheaf.act(f, x) for f in sieve.sorted_members())


class GluingFailure(StrEnum):
    NOT_SEPARATED = "not-separated"
    NO_AMALGAMATION = "no-amalgamation"


@dataclass(kw_only=True)
class SheafReport:
    is_sheaf: bool
    object: str | None = None
    sieve: Sieve | None = None
    failure: GluingFailure | None = None
    witness: tuple = ()

    def __str__(self):
        if self.is_sheaf:
            return "sheaf"
        return (
            f"not a sheaf: cover {self.sieve} of {self.object} ({self.failure})"
            f" witness {self.witness}"
        )


def is_sheaf(
    presheaf: Presheaf, topology: GrothendieckTopology, guard: EnumerationGuard | None = None
) -> SheafReport:
    """
    P is a sheaf iff, for every covering sieve S, restriction P(a) -> MatchingFamilies(S, P)
    is a bijection. The report names the first failing cover in canonical order.
    """
    base = presheaf.base
    for a in base.objects:
        for s in topology.covering(a):
            families = matching_families(presheaf, s, guard)
            hit: dict[tuple[int, ...], int] = {}
            for x in presheaf.elements(a):
                family = restrict_to_family(presheaf, s, x)
                if family in hit:
                    return SheafReport(
                        is_sheaf=False,
                        object=a,
                        sieve=s,
                        failure=GluingFailure.NOT_SEPARATED,
                        witness=(hit[family], x),
                    )
                hit[family] = x
            for family in families:
                if family not in hit:
                    return SheafReport(
                        is_sheaf=False,
                        object=a,
                        sieve=s,
                        failure=GluingFailure.NO_AMALGAMATION,
                        witness=family,
                    )
    return SheafReport(is_sheaf=True)


def is_sheaf_by_dense_monos(presheaf: Presheaf, topology: GrothendieckTopology) -> bool:
    """
    Cross-check: for every covering sieve S on a, seen as a subobject of y(a),
    restriction Hom(y(a), P) -> Hom(S, P) is a bijection.
    """
    base = presheaf.base
    for a in base.objects:
        yoneda = representable(base, a)
        for s in topology.covering(a):
            parts = {
                b: [yoneda.index_of(b, f) for f in s.members if base.dom(f) == b]
                for b in base.objects
            }
            carrier, inclusion = subpresheaf(yoneda, parts)
            restricted = set()
            for x in presheaf.elements(a):
                element = PresheafMap(
                    source=yoneda,
                    target=presheaf,
                    components={
                        b: tuple(presheaf.act(g, x) for g in yoneda.labels[b])
                        for b in base.objects
                    },
                )
                restricted.add(compose_maps(element, inclusion).key())
            if len(restricted) != presheaf.size(a):
                return False
            if restricted != {h.key() for h in iter_maps(carrier, presheaf)}:
                return False
    return True


@dataclass(frozen=True, eq=False, kw_only=True)
class PlusStage:
    """
    `P+(a)`: matching families over covers of a, two identified when their agreement sieve
    covers. `classes[a]` holds the representative `(cover, family)` of each element.
    """

    topology: GrothendieckTopology
    source: Presheaf
    presheaf: Presheaf
    unit: PresheafMap
    classes: Mapping[str, tuple[tuple[Sieve, tuple[int, ...]], ...]]

    def lift(self, h: PresheafMap) -> PresheafMap:
        """
        Extend `h: source -> Q` along the unit, for a sheaf Q: a class `(S, x)` goes to the
        amalgamation of `h(x_f)`. Raises `ValueError` if Q fails to glue.
        """
        target = h.target
        base = self.presheaf.base
        components = {}
        for a in base.objects:
            row = []
            for sieve, family in self.classes[a]:
                wanted = [
                    (f, h(base.dom(f), x)) for f, x in zip(sieve.sorted_members(), family)
                ]
                glued = [
                    q for q in target.elements(a) if all(target.act(f, q) == v for f, v in wanted)
                ]
                if len(glued) != 1:
                    raise ValueError(
                        f"{target.name} has {len(glued)} amalgamations over {sieve} at {a}"
                    )
                row.append(glued[0])
            components[a] = tuple(row)
        return PresheafMap(source=self.presheaf, target=target, components=components)


def plus(
    presheaf: Presheaf, topology: GrothendieckTopology, guard: EnumerationGuard | None = None
) -> PlusStage:
    base = presheaf.base
    guard = guard or EnumerationGuard(what="plus construction")
    nodes: dict[str, list[tuple[Sieve, tuple[int, ...]]]] = {}
    class_of: dict[str, dict[tuple[Sieve, tuple[int, ...]], int]] = {}
    classes: dict[str, tuple[tuple[Sieve, tuple[int, ...]], ...]] = {}
    for a in base.objects:
        nodes[a] = [
            (s, family)
            for s in topology.covering(a)
            for family in matching_families(presheaf, s, guard)
        ]
        union = UnionFind(range(len(nodes[a])))
        for i, (s, x) in enumerate(nodes[a]):
            xs = dict(zip(s.sorted_members(), x))
            for k in range(i + 1, len(nodes[a])):
                guard.tick()
                t, y = nodes[a][k]
                ys = dict(zip(t.sorted_members(), y))
                agreement = frozenset(f for f in s.members & t.members if xs[f] == ys[f])
                if topology.is_cover(Sieve(base=base, apex=a, members=agreement)):
                    union.union(i, k)
        blocks = sorted(sorted(block) for block in union.to_sets())
        classes[a] = tuple(nodes[a][block[0]] for block in blocks)
        class_of[a] = {nodes[a][i]: n for n, block in enumerate(blocks) for i in block}

    actions = {}
    for m in base.morphisms:
        row = []
        for s, x in classes[m.cod]:
            xs = dict(zip(s.sorted_members(), x))
            pulled = s.pullback(m.id)
            family = tuple(xs[base.compose(m.id, g)] for g in pulled.sorted_members())
            row.append(class_of[m.dom][(pulled, family)])
        actions[m.id] = tuple(row)
    result = Presheaf(
        base=base,
        sets={a: len(classes[a]) for a in base.objects},
        actions=actions,
        labels={a: tuple((str(s), family) for s, family in classes[a]) for a in base.objects},
        name=f"{presheaf.name}+",
    )
    unit = {}
    for a in base.objects:
        top = Sieve.maximal(base, a)
        unit[a] = tuple(
            class_of[a][(top, restrict_to_family(presheaf, top, x))]
            for x in presheaf.elements(a)
        )
    log.debug(f"Plus construction of {presheaf.name}: sizes {presheaf.sizes()} -> {result.sizes()}")
    return PlusStage(
        topology=topology,
        source=presheaf,
        presheaf=result,
        unit=PresheafMap(source=presheaf, target=result, components=unit, name="eta+"),
        classes=classes,
    )


@dataclass(frozen=True, eq=False, kw_only=True)
class Sheafification:
    first: PlusStage
    second: PlusStage

    @property
    def presheaf(self) -> Presheaf:
        return self.second.presheaf

    @cached_property
    def unit(self) -> PresheafMap:
        unit = compose_maps(self.second.unit, self.first.unit)
        return PresheafMap(
            source=unit.source, target=unit.target, components=unit.components, name="eta"
        )

    def lift(self, h: PresheafMap) -> PresheafMap:
        """The unique map `P# -> Q` through which `h: P -> Q` factors, for a sheaf Q."""
        return self.second.lift(self.first.lift(h))


def sheafify(
    presheaf: Presheaf, topology: GrothendieckTopology, guard: EnumerationGuard | None = None
) -> Sheafification:
    first = plus(presheaf, topology, guard)
    second = plus(first.presheaf, topology, guard)
    sheaf = second.presheaf.renamed(f"a({presheaf.name})")
    second = PlusStage(
        topology=topology,
        source=second.source,
        presheaf=sheaf,
        unit=PresheafMap(
            source=second.unit.source, target=sheaf, components=second.unit.components
        ),
        classes=second.classes,
    )
    return Sheafification(first=first, second=second)


def closed_sieve_classifier(topology: GrothendieckTopology) -> tuple[Presheaf, PresheafMap]:
    """Omega_J: the j-closed sieves, the subobject classifier of the sheaf subtopos."""
    operator = topology_to_j(topology)
    classifier = omega(topology.base)
    parts = {
        a: [k for k, s in enumerate(classifier.omega.labels[a]) if operator.apply(s) == s]
        for a in topology.base.objects
    }
    return subpresheaf(classifier.omega, parts, name="Omega_J")
