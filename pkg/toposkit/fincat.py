import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from typing import TYPE_CHECKING

import networkx

from toposkit.errors import ToposkitError
from toposkit.reports import ValidationReport

if TYPE_CHECKING:
    from toposkit.psh import Presheaf

log = logging.getLogger(__name__)

OP_SUFFIX = "^op"


class MissingLimitError(ToposkitError):
    def __init__(self, kind: str, witness: tuple):
        self.kind = kind
        self.witness = witness
        super().__init__(f"No {kind} for {witness}")


def identity_id(obj: str) -> str:
    return f"id_{obj}"


def leq_id(lower: str, upper: str) -> str:
    """Morphism id of `lower <= upper` in a poset category."""
    return identity_id(lower) if lower == upper else f"{lower}<={upper}"


@dataclass(frozen=True, kw_only=True)
class Morphism:
    id: str
    dom: str
    cod: str


@dataclass(frozen=True, eq=False, kw_only=True)
class FinCategory:
    """
    A finite category given by explicit object and morphism lists and a complete
    composition table: `composition[(g, f)]` is `g . f`, defined iff `cod(f) == dom(g)`.

    Identities are ordinary morphisms listed in `morphisms`; `identities` maps each object
    to the id of its identity. List order is the canonical order used by every enumeration.
    """

    name: str
    objects: tuple[str, ...]
    morphisms: tuple[Morphism, ...]
    identities: Mapping[str, str]
    composition: Mapping[tuple[str, str], str]

    @classmethod
    def build(
        cls,
        name: str,
        objects: Iterable[str],
        morphisms: Iterable[tuple[str, str, str]] = (),
        composites: Mapping[tuple[str, str], str] | None = None,
    ) -> "FinCategory":
        """
        Build a category from its non-identity morphisms `(id, dom, cod)` and the composites
        of non-identity pairs. Identities `id_<obj>` and their composites are added.
        """
        objects = tuple(objects)
        identities = {a: identity_id(a) for a in objects}
        all_morphisms = [Morphism(id=identities[a], dom=a, cod=a) for a in objects]
        all_morphisms += [Morphism(id=m, dom=d, cod=c) for m, d, c in morphisms]
        composition: dict[tuple[str, str], str] = {}
        for m in all_morphisms:
            if m.dom in identities:
                composition[(m.id, identities[m.dom])] = m.id
            if m.cod in identities:
                composition[(identities[m.cod], m.id)] = m.id
        composition.update(composites or {})
        return cls(
            name=name,
            objects=objects,
            morphisms=tuple(all_morphisms),
            identities=identities,
            composition=composition,
        )

    @cached_property
    def _by_id(self) -> dict[str, Morphism]:
        return {m.id: m for m in self.morphisms}

    @cached_property
    def _morphism_index(self) -> dict[str, int]:
        return {m.id: i for i, m in enumerate(self.morphisms)}

    @cached_property
    def _object_index(self) -> dict[str, int]:
        return {a: i for i, a in enumerate(self.objects)}

    @cached_property
    def _into(self) -> dict[str, tuple[str, ...]]:
        into: dict[str, list[str]] = {a: [] for a in self.objects}
        for m in self.morphisms:
            into.setdefault(m.cod, []).append(m.id)
        return {a: tuple(ms) for a, ms in into.items()}

    @cached_property
    def _out_of(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {a: [] for a in self.objects}
        for m in self.morphisms:
            out.setdefault(m.dom, []).append(m.id)
        return {a: tuple(ms) for a, ms in out.items()}

    @cached_property
    def _hom(self) -> dict[tuple[str, str], tuple[str, ...]]:
        hom: dict[tuple[str, str], list[str]] = {}
        for m in self.morphisms:
            hom.setdefault((m.dom, m.cod), []).append(m.id)
        return {k: tuple(v) for k, v in hom.items()}

    def morphism(self, f: str) -> Morphism:
        return self._by_id[f]

    def has_morphism(self, f: str) -> bool:
        return f in self._by_id

    def dom(self, f: str) -> str:
        return self._by_id[f].dom

    def cod(self, f: str) -> str:
        return self._by_id[f].cod

    def identity(self, a: str) -> str:
        return self.identities[a]

    def is_identity(self, f: str) -> bool:
        m = self._by_id[f]
        return self.identities.get(m.dom) == f

    def compose(self, g: str, f: str) -> str:
        """`g . f`; raises `KeyError` on non-composable pairs."""
        return self.composition[(g, f)]

    def hom(self, a: str, b: str) -> tuple[str, ...]:
        return self._hom.get((a, b), ())

    def into(self, a: str) -> tuple[str, ...]:
        return self._into.get(a, ())

    def out_of(self, a: str) -> tuple[str, ...]:
        return self._out_of.get(a, ())

    def index(self, f: str) -> int:
        return self._morphism_index[f]

    def object_index(self, a: str) -> int:
        return self._object_index[a]

    def terminal_objects(self) -> list[str]:
        return [t for t in self.objects if all(len(self.hom(x, t)) == 1 for x in self.objects)]

    def initial_objects(self) -> list[str]:
        return [i for i in self.objects if all(len(self.hom(i, x)) == 1 for x in self.objects)]

    def _structure(self):
        return (
            self.objects,
            self.morphisms,
            tuple(sorted(self.identities.items())),
            tuple(sorted(self.composition.items())),
        )

    def __eq__(self, other):
        if not isinstance(other, FinCategory):
            return NotImplemented
        return self is other or self._structure() == other._structure()

    def __hash__(self):
        return hash((self.objects, self.morphisms))

    def __repr__(self):
        return (
            f"FinCategory({self.name!r}, {len(self.objects)} objects,"
            f" {len(self.morphisms)} morphisms)"
        )


def validate_category(raw: FinCategory) -> ValidationReport:
    """
    Check totality, identity and associativity laws. Malformed input produces violations,
    never an exception.
    """
    report = ValidationReport(f"category {raw.name}")
    objects = set(raw.objects)
    if len(objects) != len(raw.objects):
        report.add("objects", "duplicate object identifiers")
    by_id: dict[str, Morphism] = {}
    for m in raw.morphisms:
        if m.id in by_id:
            report.add("morphisms", f"duplicate morphism id {m.id}", m.id)
        by_id[m.id] = m
        for end in (m.dom, m.cod):
            if end not in objects:
                report.add("morphisms", f"morphism {m.id} references unknown object {end}", m.id)

    for a in raw.objects:
        ida = raw.identities.get(a)
        if ida is None or ida not in by_id:
            report.add("identity", f"object {a} has no identity morphism", a)
        elif by_id[ida].dom != a or by_id[ida].cod != a:
            report.add("identity", f"identity {ida} of {a} is not an endomorphism of {a}", a)

    for (g, f), h in raw.composition.items():
        if g not in by_id or f not in by_id or h not in by_id:
            report.add("totality", f"composite {g} . {f} = {h} names an unknown morphism", g, f)
            continue
        if by_id[f].cod != by_id[g].dom:
            report.add("totality", f"composite on non-composable pair {g} . {f}", g, f)
            continue
        if by_id[h].dom != by_id[f].dom or by_id[h].cod != by_id[g].cod:
            report.add("totality", f"composite {g} . {f} = {h} has the wrong type", g, f, h)

    morphisms = [m for m in raw.morphisms if m.dom in objects and m.cod in objects]
    for f in morphisms:
        for g in morphisms:
            if f.cod == g.dom and (g.id, f.id) not in raw.composition:
                report.add("totality", f"missing composite {g.id} . {f.id}", g.id, f.id)
    if not report.ok:
        log.debug(f"Category {raw.name} fails structural checks, skipping laws")
        return report

    for f in raw.morphisms:
        if raw.composition[(raw.identities[f.cod], f.id)] != f.id:
            report.add("identity", f"id . {f.id} != {f.id}", f.id)
        if raw.composition[(f.id, raw.identities[f.dom])] != f.id:
            report.add("identity", f"{f.id} . id != {f.id}", f.id)

    for f in raw.morphisms:
        for g in raw.out_of(f.cod):
            gf = raw.composition[(g, f.id)]
            for h in raw.out_of(raw.cod(g)):
                if raw.composition[(h, gf)] != raw.composition[(raw.composition[(h, g)], f.id)]:
                    report.add(
                        "associativity",
                        f"({h} . {g}) . {f.id} != {h} . ({g} . {f.id})",
                        h,
                        g,
                        f.id,
                    )
    return report


def opposite(category: FinCategory) -> FinCategory:
    if category.name.endswith(OP_SUFFIX):
        name = category.name[: -len(OP_SUFFIX)]
    else:
        name = f"{category.name}{OP_SUFFIX}"
    return FinCategory(
        name=name,
        objects=category.objects,
        morphisms=tuple(Morphism(id=m.id, dom=m.cod, cod=m.dom) for m in category.morphisms),
        identities=dict(category.identities),
        composition={(f, g): h for (g, f), h in category.composition.items()},
    )


def terminal_category() -> FinCategory:
    return FinCategory.build("1", ["*"])


def walking_arrow() -> FinCategory:
    return FinCategory.build("arrow", ["a", "b"], [("u", "a", "b")])


def discrete(names: int | Iterable[str], name: str | None = None) -> FinCategory:
    if isinstance(names, int):
        names = [str(i) for i in range(names)]
    names = list(names)
    return FinCategory.build(name or f"discrete{len(names)}", names)


def poset_category(
    name: str, elements: Iterable[str], relations: Iterable[tuple[str, str]]
) -> FinCategory:
    """
    Thin category of the preorder generated by `relations` (pairs `lower, upper`).
    """
    elements = list(elements)
    graph = networkx.DiGraph()
    graph.add_nodes_from(elements)
    graph.add_edges_from(relations)
    closure = networkx.transitive_closure(graph, reflexive=True)
    leq = {(x, y) for x, y in closure.edges}
    morphisms = [
        (leq_id(x, y), x, y) for x in elements for y in elements if x != y and (x, y) in leq
    ]
    composites = {}
    for _, x, y in morphisms:
        for _, y2, z in morphisms:
            if y2 == y:
                composites[(leq_id(y, z), leq_id(x, y))] = leq_id(x, z)
    return FinCategory.build(name, elements, morphisms, composites)


def chain(n: int) -> FinCategory:
    elements = [str(i) for i in range(n)]
    return poset_category(f"chain{n}", elements, zip(elements, elements[1:]))


def commutative_square() -> FinCategory:
    """The poset bot < x, y < top: a cospan x -> top <- y completed to finite limits."""
    return poset_category(
        "square", ["bot", "x", "y", "top"], [("bot", "x"), ("bot", "y"), ("x", "top"), ("y", "top")]
    )


def group_category(name: str, elements: list[str], multiply, unit: str) -> FinCategory:
    """
    One-object category `*` of a finite group; `multiply(g, h)` is `g . h`.
    The unit element becomes `id_*`.
    """
    rename = {g: (identity_id("*") if g == unit else g) for g in elements}
    morphisms = [(g, "*", "*") for g in elements if g != unit]
    composites = {
        (rename[g], rename[h]): rename[multiply(g, h)] for g in elements for h in elements
    }
    return FinCategory.build(name, ["*"], morphisms, composites)


def cyclic_group(n: int) -> FinCategory:
    elements = [f"g{k}" for k in range(n)]
    return group_category(
        f"Z{n}", elements, lambda g, h: f"g{(int(g[1:]) + int(h[1:])) % n}", "g0"
    )


@dataclass(frozen=True, kw_only=True)
class FinFunctor:
    name: str
    source: FinCategory
    target: FinCategory
    object_map: Mapping[str, str]
    morphism_map: Mapping[str, str]

    def ob(self, a: str) -> str:
        return self.object_map[a]

    def mor(self, f: str) -> str:
        return self.morphism_map[f]

    def validate(self) -> ValidationReport:
        report = ValidationReport(f"functor {self.name}")
        src, tgt = self.source, self.target
        for a in src.objects:
            if self.object_map.get(a) not in tgt.objects:
                report.add("objects", f"object {a} is not sent to an object of {tgt.name}", a)
        for m in src.morphisms:
            image = self.morphism_map.get(m.id)
            if image is None or not tgt.has_morphism(image):
                report.add(
                    "morphisms", f"morphism {m.id} is not sent to a morphism of {tgt.name}", m.id
                )
        if not report.ok:
            return report
        for m in src.morphisms:
            image = tgt.morphism(self.mor(m.id))
            if image.dom != self.ob(m.dom) or image.cod != self.ob(m.cod):
                report.add(
                    "typing", f"F({m.id}) = {image.id} has the wrong domain or codomain", m.id
                )
        for a in src.objects:
            if self.mor(src.identity(a)) != tgt.identity(self.ob(a)):
                report.add("identity", f"F(id_{a}) is not an identity", a)
        if not report.ok:
            return report
        for (g, f), h in src.composition.items():
            if tgt.compose(self.mor(g), self.mor(f)) != self.mor(h):
                report.add("composition", f"F({g} . {f}) != F({g}) . F({f})", g, f)
        return report


def identity_functor(category: FinCategory) -> FinFunctor:
    return FinFunctor(
        name=f"id[{category.name}]",
        source=category,
        target=category,
        object_map={a: a for a in category.objects},
        morphism_map={m.id: m.id for m in category.morphisms},
    )


def compose_functors(g: FinFunctor, f: FinFunctor) -> FinFunctor:
    """`g . f`."""
    return FinFunctor(
        name=f"{g.name}.{f.name}",
        source=f.source,
        target=g.target,
        object_map={a: g.ob(f.ob(a)) for a in f.source.objects},
        morphism_map={m.id: g.mor(f.mor(m.id)) for m in f.source.morphisms},
    )


@dataclass(frozen=True, kw_only=True)
class NatTransform:
    source: FinFunctor
    target: FinFunctor
    components: Mapping[str, str]

    def validate(self) -> ValidationReport:
        report = ValidationReport(f"transformation {self.source.name} => {self.target.name}")
        F, G = self.source, self.target
        if F.source != G.source or F.target != G.target:
            report.add("typing", "functors do not share source and target")
            return report
        cat = F.target
        for a in F.source.objects:
            alpha = self.components.get(a)
            if alpha is None or not cat.has_morphism(alpha):
                report.add("components", f"no component at {a}", a)
            elif cat.dom(alpha) != F.ob(a) or cat.cod(alpha) != G.ob(a):
                report.add("components", f"component {alpha} at {a} has the wrong type", a)
        if not report.ok:
            return report
        for m in F.source.morphisms:
            lhs = cat.compose(G.mor(m.id), self.components[m.dom])
            rhs = cat.compose(self.components[m.cod], F.mor(m.id))
            if lhs != rhs:
                report.add("naturality", f"square at {m.id} does not commute", m.id)
        return report


class ElementsOrientation(StrEnum):
    # (a, x) -> (b, y) over f: a -> b with P(f)(y) = x, for a presheaf P
    CONTRAVARIANT = "contravariant"
    # (a, x) -> (b, F(f)(x)), for a covariant F given as a presheaf on the opposite category
    COVARIANT = "covariant"


@dataclass(frozen=True, kw_only=True)
class ElementsCategory:
    category: FinCategory
    projection: FinFunctor
    elements: tuple[tuple[str, int], ...]
    orientation: ElementsOrientation

    def object_of(self, a: str, x: int) -> str:
        return f"{a}:{x}"


def category_of_elements(
    presheaf: "Presheaf", orientation: ElementsOrientation = ElementsOrientation.CONTRAVARIANT
) -> ElementsCategory:
    """
    Category of elements of a presheaf P over C, with its projection to C.

    With `COVARIANT`, P is read as a covariant functor on `opposite(P.base)` and the result
    (the opposite of the contravariant one) lies over that category; this is the
    orientation whose cofilteredness defines flatness.
    """
    base = presheaf.base
    elements = tuple((a, x) for a in base.objects for x in range(presheaf.size(a)))
    objects = [f"{a}:{x}" for a, x in elements]
    morphisms = []
    morphism_map = {}
    for m in base.morphisms:
        for y in range(presheaf.size(m.cod)):
            x = presheaf.act(m.id, y)
            mid = f"{m.id}:{y}"
            if m.id == base.identity(m.dom):
                morphism_map[mid] = m.id
                continue
            morphisms.append((mid, f"{m.dom}:{x}", f"{m.cod}:{y}"))
            morphism_map[mid] = m.id
    composites = {}
    for (g, f), h in base.composition.items():
        if base.is_identity(g) or base.is_identity(f):
            continue
        for z in range(presheaf.size(base.cod(g))):
            y = presheaf.act(g, z)
            composites[(f"{g}:{z}", f"{f}:{y}")] = f"{h}:{z}"
    elements_category = FinCategory.build(
        f"el({presheaf.name or 'P'})", objects, morphisms, composites
    )
    # identities built by FinCategory.build are named id_<a>:<x>, which is f"{id_a}:{x}"
    projection = FinFunctor(
        name=f"pi[{presheaf.name or 'P'}]",
        source=elements_category,
        target=base,
        object_map={f"{a}:{x}": a for a, x in elements},
        morphism_map={m.id: morphism_map[m.id] for m in elements_category.morphisms},
    )
    if orientation == ElementsOrientation.CONTRAVARIANT:
        return ElementsCategory(
            category=elements_category,
            projection=projection,
            elements=elements,
            orientation=orientation,
        )
    flipped = opposite(elements_category)
    return ElementsCategory(
        category=flipped,
        projection=FinFunctor(
            name=projection.name,
            source=flipped,
            target=opposite(base),
            object_map=projection.object_map,
            morphism_map=projection.morphism_map,
        ),
        elements=elements,
        orientation=orientation,
    )


@dataclass(frozen=True, kw_only=True)
class LimitStructure:
    """Chosen finite limits of a category: terminal object, binary products, equalizers."""

    category: FinCategory
    terminal: str
    # (a, b) -> (p, p_a, p_b)
    products: Mapping[tuple[str, str], tuple[str, str, str]]
    # (f, g) -> (q, e)
    equalizers: Mapping[tuple[str, str], tuple[str, str]]


def _unique(candidates: list) -> bool:
    return len(candidates) == 1


def _find_product(category: FinCategory, a: str, b: str) -> tuple[str, str, str] | None:
    cones = [
        (x, f, g) for x in category.objects for f in category.hom(x, a) for g in category.hom(x, b)
    ]
    for p in category.objects:
        for pa in category.hom(p, a):
            for pb in category.hom(p, b):
                if all(
                    _unique(
                        [
                            u
                            for u in category.hom(x, p)
                            if category.compose(pa, u) == f and category.compose(pb, u) == g
                        ]
                    )
                    for x, f, g in cones
                ):
                    return p, pa, pb
    return None


def _find_equalizer(category: FinCategory, f: str, g: str) -> tuple[str, str] | None:
    a = category.dom(f)
    forks = [
        (x, h)
        for x in category.objects
        for h in category.hom(x, a)
        if category.compose(f, h) == category.compose(g, h)
    ]
    for q, e in forks:
        if all(
            _unique([u for u in category.hom(x, q) if category.compose(e, u) == h])
            for x, h in forks
        ):
            return q, e
    return None


def finite_limit_structure(category: FinCategory) -> LimitStructure:
    """
    Find a terminal object, every binary product and every equalizer by exhaustive
    universal-cone search. Raises `MissingLimitError` naming the first missing limit.
    """
    terminals = category.terminal_objects()
    if not terminals:
        raise MissingLimitError("terminal object", (category.name,))
    products = {}
    for a in category.objects:
        for b in category.objects:
            product = _find_product(category, a, b)
            if product is None:
                raise MissingLimitError("product", (a, b))
            products[(a, b)] = product
    equalizers = {}
    for a in category.objects:
        for b in category.objects:
            for f in category.hom(a, b):
                for g in category.hom(a, b):
                    equalizer = _find_equalizer(category, f, g)
                    if equalizer is None:
                        raise MissingLimitError("equalizer", (f, g))
                    equalizers[(f, g)] = equalizer
    log.debug(f"Category {category.name} has finite limits (terminal {terminals[0]})")
    return LimitStructure(
        category=category, terminal=terminals[0], products=products, equalizers=equalizers
    )


def has_finite_limits(category: FinCategory) -> bool:
    try:
        finite_limit_structure(category)
    except MissingLimitError:
        return False
    return True
