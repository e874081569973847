"""
The presheaf topos over a finite category.

Finite sets are index ranges `0..n-1`; functions between them are tuples. Every
enumeration runs in canonical order (objects, then element indices) so results are
reproducible from run to run.
"""

import logging
from collections.abc import Hashable, Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import StrEnum
from functools import cached_property
from itertools import product as cartesian

from networkx.utils import UnionFind

from toposkit.config import EnumerationGuard
from toposkit.fincat import FinCategory
from toposkit.reports import ValidationReport
from toposkit.search import Conflict, propagating_search

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False, kw_only=True)
class Presheaf:
    """
    A functor `C^op -> FinSet`. `sets[a]` is the size of P(a); for `f: a -> b`,
    `actions[f]` is the function P(b) -> P(a) as a tuple indexed by P(b).
    `labels` only affect display and parsing, never equality.
    """

    base: FinCategory
    sets: Mapping[str, int]
    actions: Mapping[str, tuple[int, ...]]
    labels: Mapping[str, tuple[Hashable, ...]] | None = None
    name: str = ""

    @classmethod
    def build(
        cls,
        base: FinCategory,
        sets: Mapping[str, Sequence[Hashable]],
        actions: Mapping[str, Mapping[Hashable, Hashable]],
        name: str = "",
    ) -> "Presheaf":
        """
        Build from labelled elements. Objects missing from `sets` get the empty set;
        identity actions are implicit and the action of a morphism that is a composite of
        given ones is derived. Unresolvable references raise `KeyError`.
        """
        labels = {a: tuple(sets.get(a, ())) for a in base.objects}
        index = {a: {label: i for i, label in enumerate(labels[a])} for a in base.objects}
        table: dict[str, tuple[int, ...]] = {}
        for a in base.objects:
            table[base.identity(a)] = tuple(range(len(labels[a])))
        for f, mapping in actions.items():
            a, b = base.dom(f), base.cod(f)
            table[f] = tuple(index[a][mapping[y]] for y in labels[b])
        changed = True
        while changed:
            changed = False
            for (g, f), h in base.composition.items():
                if h not in table and g in table and f in table:
                    table[h] = tuple(table[f][table[g][z]] for z in range(len(labels[base.cod(g)])))
                    changed = True
        missing = [m.id for m in base.morphisms if m.id not in table]
        if missing:
            raise KeyError(f"no action given for morphism(s) {', '.join(missing)}")
        return cls(
            base=base,
            sets={a: len(labels[a]) for a in base.objects},
            actions=table,
            labels=labels,
            name=name,
        )

    def size(self, a: str) -> int:
        return self.sets[a]

    def elements(self, a: str) -> range:
        return range(self.sets[a])

    def act(self, f: str, y: int) -> int:
        return self.actions[f][y]

    def label(self, a: str, x: int) -> Hashable:
        if self.labels is None:
            return x
        return self.labels[a][x]

    def index_of(self, a: str, label: Hashable) -> int:
        if self.labels is None:
            return int(label)
        return self._label_index[a][label]

    @cached_property
    def _label_index(self) -> dict[str, dict[Hashable, int]]:
        return {
            a: {label: i for i, label in enumerate(ls)} for a, ls in (self.labels or {}).items()
        }

    @property
    def total(self) -> int:
        return sum(self.sets.values())

    def sizes(self) -> list[int]:
        return [self.sets[a] for a in self.base.objects]

    def renamed(self, name: str) -> "Presheaf":
        return replace(self, name=name)

    def validate(self) -> ValidationReport:
        report = ValidationReport(f"presheaf {self.name or '?'} over {self.base.name}")
        base = self.base
        for a in base.objects:
            if self.sets.get(a, -1) < 0:
                report.add("sets", f"no set at object {a}", a)
        if not report.ok:
            return report
        for m in base.morphisms:
            action = self.actions.get(m.id)
            if action is None or len(action) != self.sets[m.cod]:
                report.add("actions", f"action of {m.id} is not a function on P({m.cod})", m.id)
            elif any(not 0 <= v < self.sets[m.dom] for v in action):
                report.add("actions", f"action of {m.id} leaves P({m.dom})", m.id)
        if not report.ok:
            return report
        for a in base.objects:
            if self.actions[base.identity(a)] != tuple(range(self.sets[a])):
                report.add("identity", f"P(id_{a}) is not the identity", a)
        for (g, f), h in base.composition.items():
            for z in range(self.sets[base.cod(g)]):
                if self.act(h, z) != self.act(f, self.act(g, z)):
                    report.add(
                        "functoriality",
                        f"P({g} . {f}) != P({f}) . P({g}) at element {z}",
                        g,
                        f,
                        z,
                    )
                    break
        return report

    def key(self) -> tuple:
        return (
            tuple(self.sets[a] for a in self.base.objects),
            tuple(self.actions[m.id] for m in self.base.morphisms),
        )

    def __eq__(self, other):
        if not isinstance(other, Presheaf):
            return NotImplemented
        return self is other or (self.key() == other.key() and self.base == other.base)

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        sizes = ", ".join(f"{a}:{self.sets[a]}" for a in self.base.objects)
        return f"Presheaf({self.name or '?'} over {self.base.name}; {sizes})"


def terminal(base: FinCategory) -> Presheaf:
    return constant(base, 1, name="1")


def initial(base: FinCategory) -> Presheaf:
    return constant(base, 0, name="0")


def constant(base: FinCategory, n: int, name: str = "") -> Presheaf:
    return Presheaf(
        base=base,
        sets={a: n for a in base.objects},
        actions={m.id: tuple(range(n)) for m in base.morphisms},
        name=name or str(n),
    )


def representable(base: FinCategory, a: str) -> Presheaf:
    """y(a) = Hom(-, a); elements are labelled by morphism ids, acting by precomposition."""
    labels = {b: base.hom(b, a) for b in base.objects}
    position = {b: {g: i for i, g in enumerate(labels[b])} for b in base.objects}
    actions = {}
    for m in base.morphisms:
        actions[m.id] = tuple(position[m.dom][base.compose(g, m.id)] for g in labels[m.cod])
    return Presheaf(
        base=base,
        sets={b: len(labels[b]) for b in base.objects},
        actions=actions,
        labels=labels,
        name=f"y({a})",
    )


@dataclass(frozen=True, eq=False, kw_only=True)
class PresheafMap:
    """A natural transformation; `components[a]` is a tuple indexed by `source(a)`."""

    source: Presheaf
    target: Presheaf
    components: Mapping[str, tuple[int, ...]]
    name: str = ""

    @classmethod
    def build(
        cls,
        source: Presheaf,
        target: Presheaf,
        mapping: Mapping[str, Mapping[Hashable, Hashable]],
        name: str = "",
    ) -> "PresheafMap":
        components = {}
        for a in source.base.objects:
            table = mapping.get(a, {})
            components[a] = tuple(
                target.index_of(a, table[source.label(a, x)]) for x in source.elements(a)
            )
        return cls(source=source, target=target, components=components, name=name)

    def __call__(self, a: str, x: int) -> int:
        return self.components[a][x]

    @property
    def base(self) -> FinCategory:
        return self.source.base

    def validate(self) -> ValidationReport:
        report = ValidationReport(
            f"map {self.name or '?'}: {self.source.name} -> {self.target.name}"
        )
        if self.source.base != self.target.base:
            report.add("typing", "source and target live over different categories")
            return report
        base = self.base
        for a in base.objects:
            component = self.components.get(a)
            if component is None or len(component) != self.source.size(a):
                report.add("components", f"component at {a} is not a function on the source", a)
            elif any(not 0 <= v < self.target.size(a) for v in component):
                report.add("components", f"component at {a} leaves the target", a)
        if not report.ok:
            return report
        for m in base.morphisms:
            for y in self.source.elements(m.cod):
                if self(m.dom, self.source.act(m.id, y)) != self.target.act(m.id, self(m.cod, y)):
                    report.add("naturality", f"square at {m.id} fails on element {y}", m.id, y)
                    break
        return report

    def key(self) -> tuple:
        return tuple(self.components[a] for a in self.base.objects)

    def __eq__(self, other):
        if not isinstance(other, PresheafMap):
            return NotImplemented
        return (
            self.key() == other.key()
            and self.source == other.source
            and self.target == other.target
        )

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"PresheafMap({self.name or '?'}: {self.source.name} -> {self.target.name})"


def identity_map(presheaf: Presheaf) -> PresheafMap:
    return PresheafMap(
        source=presheaf,
        target=presheaf,
        components={a: tuple(presheaf.elements(a)) for a in presheaf.base.objects},
        name=f"id[{presheaf.name}]",
    )


def compose_maps(g: PresheafMap, f: PresheafMap) -> PresheafMap:
    """`g . f`."""
    return PresheafMap(
        source=f.source,
        target=g.target,
        components={a: tuple(g(a, f(a, x)) for x in f.source.elements(a)) for a in f.base.objects},
        name=f"{g.name}.{f.name}" if g.name and f.name else "",
    )


def unique_map_to_terminal(presheaf: Presheaf) -> PresheafMap:
    target = terminal(presheaf.base)
    return PresheafMap(
        source=presheaf,
        target=target,
        components={a: (0,) * presheaf.size(a) for a in presheaf.base.objects},
        name=f"!{presheaf.name}",
    )


def map_from_initial(presheaf: Presheaf) -> PresheafMap:
    return PresheafMap(
        source=initial(presheaf.base),
        target=presheaf,
        components={a: () for a in presheaf.base.objects},
        name=f"0->{presheaf.name}",
    )


def iter_maps(
    source: Presheaf,
    target: Presheaf,
    guard: EnumerationGuard | None = None,
    injective: bool = False,
) -> Iterator[PresheafMap]:
    """
    Enumerate Hom(source, target) in canonical order.

    Variables are the source elements `(a, x)`; setting `(b, y) = v` forces
    `(a, source(f)(y)) = target(f)(v)` for every `f: a -> b`, which is exactly naturality.
    With `injective`, components are additionally required to be injective.
    """
    base = source.base
    variables = [(a, x) for a in base.objects for x in source.elements(a)]
    incoming = {b: [f for f in base.into(b) if not base.is_identity(f)] for b in base.objects}

    def forced(var, value, assignment):
        b, y = var
        if injective:
            for x in source.elements(b):
                if x != y and assignment.get((b, x)) == value:
                    raise Conflict()
        return [
            ((base.dom(f), source.act(f, y)), target.act(f, value)) for f in incoming[b]
        ]

    for assignment in propagating_search(
        variables, lambda var: target.size(var[0]), forced, guard or EnumerationGuard(what="maps")
    ):
        yield PresheafMap(
            source=source,
            target=target,
            components={
                a: tuple(assignment[(a, x)] for x in source.elements(a)) for a in base.objects
            },
        )


def find_isomorphisms(
    source: Presheaf, target: Presheaf, guard: EnumerationGuard | None = None
) -> Iterator[PresheafMap]:
    if source.sizes() != target.sizes():
        return iter(())
    return iter_maps(source, target, guard, injective=True)


def is_isomorphic(source: Presheaf, target: Presheaf) -> bool:
    return next(find_isomorphisms(source, target), None) is not None


def inverse_map(iso: PresheafMap) -> PresheafMap:
    components = {}
    for a in iso.base.objects:
        inverse = [0] * iso.target.size(a)
        for x, y in enumerate(iso.components[a]):
            inverse[y] = x
        components[a] = tuple(inverse)
    return PresheafMap(source=iso.target, target=iso.source, components=components)


@dataclass(frozen=True, eq=False, kw_only=True)
class Diagram:
    """
    A functor from a finite `shape` into presheaves over `base`. `maps` covers the
    non-identity shape morphisms; `maps[s]` goes from `objects[dom s]` to `objects[cod s]`.
    """

    base: FinCategory
    shape: FinCategory
    objects: Mapping[str, Presheaf]
    maps: Mapping[str, PresheafMap] = field(default_factory=dict)

    def map(self, s: str) -> PresheafMap:
        if self.shape.is_identity(s):
            return identity_map(self.objects[self.shape.dom(s)])
        return self.maps[s]

    def validate(self) -> ValidationReport:
        report = ValidationReport(f"diagram of shape {self.shape.name}")
        for i in self.shape.objects:
            if self.objects[i].base != self.base:
                report.add("typing", f"object {i} lives over another category", i)
        for m in self.shape.morphisms:
            if self.shape.is_identity(m.id):
                continue
            h = self.maps.get(m.id)
            if h is None:
                report.add("maps", f"no map for shape morphism {m.id}", m.id)
            elif h.source != self.objects[m.dom] or h.target != self.objects[m.cod]:
                report.add("maps", f"map for {m.id} has the wrong type", m.id)
        if not report.ok:
            return report
        for (t, s), u in self.shape.composition.items():
            if compose_maps(self.map(t), self.map(s)).key() != self.map(u).key():
                report.add("functoriality", f"D({t} . {s}) != D({t}) . D({s})", t, s)
        return report


@dataclass(frozen=True, eq=False, kw_only=True)
class Cone:
    diagram: Diagram
    apex: Presheaf
    legs: Mapping[str, PresheafMap]

    def mediate(self, legs: Mapping[str, PresheafMap]) -> PresheafMap | None:
        """The unique map into the apex commuting with `legs`, or None if they are no cone."""
        shape = self.diagram.shape
        source = next(iter(legs.values())).source if legs else None
        if source is None:
            raise ValueError("mediate needs at least one leg; use unique_map_to_terminal")
        components = {}
        for a in self.apex.base.objects:
            values = []
            for x in source.elements(a):
                label = tuple(legs[i](a, x) for i in shape.objects)
                try:
                    values.append(self.apex.index_of(a, label))
                except KeyError:
                    return None
            components[a] = tuple(values)
        return PresheafMap(source=source, target=self.apex, components=components)


@dataclass(frozen=True, eq=False, kw_only=True)
class Cocone:
    diagram: Diagram
    apex: Presheaf
    legs: Mapping[str, PresheafMap]

    def mediate(self, legs: Mapping[str, PresheafMap], target: Presheaf) -> PresheafMap | None:
        """The unique map out of the apex commuting with `legs`, or None if they are no cocone."""
        components = {}
        for a in self.apex.base.objects:
            values: list[int | None] = [None] * self.apex.size(a)
            for i in self.diagram.shape.objects:
                for x in self.diagram.objects[i].elements(a):
                    k = self.legs[i](a, x)
                    v = legs[i](a, x)
                    if values[k] is None:
                        values[k] = v
                    elif values[k] != v:
                        return None
            components[a] = tuple(values)
        return PresheafMap(source=self.apex, target=target, components=components)


def finite_limit(diagram: Diagram, guard: EnumerationGuard | None = None) -> Cone:
    """
    Pointwise limit: at each object, the compatible families `(x_i)` over the shape in
    lexicographic order. Apex elements are labelled by these index tuples.
    """
    base, shape = diagram.base, diagram.shape
    guard = guard or EnumerationGuard(what="limit elements")
    outgoing = {i: [s for s in shape.out_of(i) if not shape.is_identity(s)] for i in shape.objects}
    families: dict[str, list[tuple[int, ...]]] = {}
    for a in base.objects:

        def forced(i, x, assignment, a=a):
            return [(shape.cod(s), diagram.maps[s](a, x)) for s in outgoing[i]]

        families[a] = [
            tuple(assignment[i] for i in shape.objects)
            for assignment in propagating_search(
                list(shape.objects), lambda i, a=a: diagram.objects[i].size(a), forced, guard
            )
        ]
    index = {a: {t: k for k, t in enumerate(families[a])} for a in base.objects}
    actions = {}
    for m in base.morphisms:
        actions[m.id] = tuple(
            index[m.dom][
                tuple(diagram.objects[i].act(m.id, t[n]) for n, i in enumerate(shape.objects))
            ]
            for t in families[m.cod]
        )
    apex = Presheaf(
        base=base,
        sets={a: len(families[a]) for a in base.objects},
        actions=actions,
        labels={a: tuple(families[a]) for a in base.objects},
        name=f"lim[{shape.name}]",
    )
    legs = {
        i: PresheafMap(
            source=apex,
            target=diagram.objects[i],
            components={a: tuple(t[n] for t in families[a]) for a in base.objects},
            name=f"p{i}",
        )
        for n, i in enumerate(shape.objects)
    }
    log.debug(f"Limit of shape {shape.name} has sizes {apex.sizes()}")
    return Cone(diagram=diagram, apex=apex, legs=legs)


def finite_colimit(diagram: Diagram) -> Cocone:
    """
    Pointwise colimit: the disjoint union of the `(i, x)` quotiented by the zig-zag
    relation, via union-find. Each class is represented, and labelled, by its least
    member in shape-object order.
    """
    base, shape = diagram.base, diagram.shape
    order = {i: n for n, i in enumerate(shape.objects)}
    classes: dict[str, list[tuple[str, int]]] = {}
    class_of: dict[str, dict[tuple[str, int], int]] = {}
    for a in base.objects:
        nodes = [(i, x) for i in shape.objects for x in diagram.objects[i].elements(a)]
        union = UnionFind(nodes)
        for s, h in diagram.maps.items():
            i = shape.dom(s)
            for x in diagram.objects[i].elements(a):
                union.union((i, x), (shape.cod(s), h(a, x)))
        blocks = [sorted(block, key=lambda n: (order[n[0]], n[1])) for block in union.to_sets()]
        blocks.sort(key=lambda block: (order[block[0][0]], block[0][1]))
        classes[a] = [block[0] for block in blocks]
        class_of[a] = {node: k for k, block in enumerate(blocks) for node in block}
    actions = {}
    for m in base.morphisms:
        actions[m.id] = tuple(
            class_of[m.dom][(i, diagram.objects[i].act(m.id, y))] for i, y in classes[m.cod]
        )
    apex = Presheaf(
        base=base,
        sets={a: len(classes[a]) for a in base.objects},
        actions=actions,
        labels={a: tuple(classes[a]) for a in base.objects},
        name=f"colim[{shape.name}]",
    )
    legs = {
        i: PresheafMap(
            source=diagram.objects[i],
            target=apex,
            components={
                a: tuple(class_of[a][(i, x)] for x in diagram.objects[i].elements(a))
                for a in base.objects
            },
            name=f"q{i}",
        )
        for i in shape.objects
    }
    log.debug(f"Colimit of shape {shape.name} has sizes {apex.sizes()}")
    return Cocone(diagram=diagram, apex=apex, legs=legs)


def _discrete_shape(n: int) -> FinCategory:
    return FinCategory.build(f"discrete{n}", [str(i) for i in range(n)])


def _parallel_shape() -> FinCategory:
    return FinCategory.build("parallel", ["0", "1"], [("f", "0", "1"), ("g", "0", "1")])


def _cospan_shape() -> FinCategory:
    return FinCategory.build("cospan", ["0", "1", "2"], [("f", "0", "2"), ("g", "1", "2")])


def _span_shape() -> FinCategory:
    return FinCategory.build("span", ["0", "1", "2"], [("f", "2", "0"), ("g", "2", "1")])


def product(*factors: Presheaf) -> Cone:
    base = factors[0].base if factors else None
    if base is None:
        raise ValueError("product of no factors needs a base; use terminal")
    shape = _discrete_shape(len(factors))
    objects = {str(n): p for n, p in enumerate(factors)}
    cone = finite_limit(Diagram(base=base, shape=shape, objects=objects))
    name = " x ".join(p.name or "?" for p in factors)
    apex = cone.apex.renamed(name)
    return replace(cone, apex=apex, legs=_retarget(cone.legs, apex))


def _retarget(legs: Mapping[str, PresheafMap], apex: Presheaf) -> dict[str, PresheafMap]:
    return {i: replace(leg, source=apex) for i, leg in legs.items()}


def equalizer(f: PresheafMap, g: PresheafMap) -> Cone:
    return finite_limit(
        Diagram(
            base=f.base,
            shape=_parallel_shape(),
            objects={"0": f.source, "1": f.target},
            maps={"f": f, "g": g},
        )
    )


def pullback(f: PresheafMap, g: PresheafMap) -> Cone:
    """Pullback of `f: P -> R` and `g: Q -> R`; legs "0" and "1" go to P and Q."""
    return finite_limit(
        Diagram(
            base=f.base,
            shape=_cospan_shape(),
            objects={"0": f.source, "1": g.source, "2": f.target},
            maps={"f": f, "g": g},
        )
    )


def coproduct(*summands: Presheaf) -> Cocone:
    base = summands[0].base
    shape = _discrete_shape(len(summands))
    return finite_colimit(
        Diagram(base=base, shape=shape, objects={str(n): p for n, p in enumerate(summands)})
    )


def coequalizer(f: PresheafMap, g: PresheafMap) -> Cocone:
    return finite_colimit(
        Diagram(
            base=f.base,
            shape=_parallel_shape(),
            objects={"0": f.source, "1": f.target},
            maps={"f": f, "g": g},
        )
    )


def pushout(f: PresheafMap, g: PresheafMap) -> Cocone:
    """Pushout of `f: R -> P` and `g: R -> Q`; legs "0" and "1" come from P and Q."""
    return finite_colimit(
        Diagram(
            base=f.base,
            shape=_span_shape(),
            objects={"0": f.target, "1": g.target, "2": f.source},
            maps={"f": f, "g": g},
        )
    )


def pairing(cone: Cone, maps: Sequence[PresheafMap]) -> PresheafMap:
    """`<f0, f1, ...>` into a product cone."""
    mediated = cone.mediate({str(n): m for n, m in enumerate(maps)})
    if mediated is None:
        raise ValueError("maps do not form a cone")
    return mediated


def product_of_maps(f: PresheafMap, g: PresheafMap) -> PresheafMap:
    """`f x g` between the canonical products of sources and of targets."""
    source, target = product(f.source, g.source), product(f.target, g.target)
    return pairing(target, [compose_maps(f, source.legs["0"]), compose_maps(g, source.legs["1"])])


def copairing(cocone: Cocone, maps: Sequence[PresheafMap]) -> PresheafMap:
    """`[f0, f1, ...]` out of a coproduct cocone."""
    mediated = cocone.mediate({str(n): m for n, m in enumerate(maps)}, maps[0].target)
    if mediated is None:
        raise ValueError("maps do not form a cocone")
    return mediated


@dataclass(frozen=True, eq=False, kw_only=True)
class Exponential:
    """
    `Y^X` with `(Y^X)(a) = Hom(y(a) x X, Y)`; `maps[a]` lists those transformations in
    canonical order. `evaluation` goes out of `pairing.apex` = `Y^X x X`.
    """

    base_object: Presheaf
    exponent: Presheaf
    apex: Presheaf
    maps: Mapping[str, tuple[PresheafMap, ...]]
    pairing: Cone
    evaluation: PresheafMap

    def _theta_index(self, c: str, components) -> int:
        return self._lookup[c][components]

    @cached_property
    def _lookup(self) -> dict[str, dict[tuple, int]]:
        return {c: {m.key(): k for k, m in enumerate(ms)} for c, ms in self.maps.items()}

    @cached_property
    def _shapes(self) -> dict[str, Cone]:
        base = self.apex.base
        return {c: product(representable(base, c), self.exponent) for c in base.objects}

    def transpose(self, h: PresheafMap, z_object: Presheaf) -> PresheafMap:
        """
        Curry `h: Z x X -> Y` (with `h.source` the canonical product of `z_object` and the
        exponent) into `Z -> Y^X`: `theta_d(g, x) = h_d(Z(g) z, x)`.
        """
        base = self.apex.base
        source_product = h.source
        components = {}
        for c in base.objects:
            shape = self._shapes[c].apex
            column = []
            for z in z_object.elements(c):
                theta = {}
                for d in base.objects:
                    row = []
                    for g_index, x in shape.labels[d]:
                        zg = z_object.act(representable_label(base, c, d, g_index), z)
                        row.append(h(d, source_product.index_of(d, (zg, x))))
                    theta[d] = tuple(row)
                column.append(self._theta_index(c, tuple(theta[d] for d in base.objects)))
            components[c] = tuple(column)
        return PresheafMap(
            source=z_object, target=self.apex, components=components, name="transpose"
        )

    def uncurry(self, k: PresheafMap) -> PresheafMap:
        """Inverse of `transpose`: `(z, x) |-> k(z)(id, x)`."""
        base = self.apex.base
        z_object = k.source
        cone = product(z_object, self.exponent)
        components = {}
        for c in base.objects:
            shape = self._shapes[c].apex
            id_index = base.hom(c, c).index(base.identity(c))
            row = []
            for z, x in cone.apex.labels[c]:
                theta = self.maps[c][k(c, z)]
                row.append(theta(c, shape.index_of(c, (id_index, x))))
            components[c] = tuple(row)
        return PresheafMap(
            source=cone.apex, target=self.base_object, components=components, name="uncurry"
        )


def representable_label(base: FinCategory, a: str, b: str, index: int) -> str:
    """The morphism id of element `index` of y(a)(b)."""
    return base.hom(b, a)[index]


def exponential(
    exponent: Presheaf, target: Presheaf, guard: EnumerationGuard | None = None
) -> Exponential:
    """`target ^ exponent` by the representable-hom formula."""
    base = target.base
    guard = guard or EnumerationGuard(what="exponential elements")
    shapes = {c: product(representable(base, c), exponent) for c in base.objects}
    maps = {c: tuple(iter_maps(shapes[c].apex, target, guard)) for c in base.objects}
    lookup = {c: {m.key(): k for k, m in enumerate(ms)} for c, ms in maps.items()}
    actions = {}
    for f in base.morphisms:
        b, a = f.dom, f.cod
        row = []
        for theta in maps[a]:
            restricted = []
            for c in base.objects:
                values = []
                for g_index, x in shapes[b].apex.labels[c]:
                    fg = base.compose(f.id, base.hom(c, b)[g_index])
                    fg_index = base.hom(c, a).index(fg)
                    values.append(theta(c, shapes[a].apex.index_of(c, (fg_index, x))))
                restricted.append(tuple(values))
            row.append(lookup[b][tuple(restricted)])
        actions[f.id] = tuple(row)
    apex = Presheaf(
        base=base,
        sets={c: len(maps[c]) for c in base.objects},
        actions=actions,
        name=f"{target.name}^{exponent.name}",
    )
    pair = product(apex, exponent)
    evaluation = {}
    for c in base.objects:
        id_index = base.hom(c, c).index(base.identity(c))
        evaluation[c] = tuple(
            maps[c][theta](c, shapes[c].apex.index_of(c, (id_index, x)))
            for theta, x in pair.apex.labels[c]
        )
    log.debug(f"Exponential {apex.name} has sizes {apex.sizes()}")
    return Exponential(
        base_object=target,
        exponent=exponent,
        apex=apex,
        maps=maps,
        pairing=pair,
        evaluation=PresheafMap(source=pair.apex, target=target, components=evaluation, name="ev"),
    )


def verify_transpose(
    exp: Exponential, z_object: Presheaf, guard: EnumerationGuard | None = None
) -> bool:
    """Exhaustively check that transpose is a bijection Hom(Z x X, Y) -> Hom(Z, Y^X)."""
    cone = product(z_object, exp.exponent)
    curried = set()
    for h in iter_maps(cone.apex, exp.base_object, guard):
        k = exp.transpose(h, z_object)
        if exp.uncurry(k).key() != h.key():
            return False
        curried.add(k.key())
    return curried == {k.key() for k in iter_maps(z_object, exp.apex, guard)}


class MapKind(StrEnum):
    ISO = "iso"
    MONO = "mono"
    EPI = "epi"
    NEITHER = "neither"


@dataclass(frozen=True, kw_only=True)
class MapClass:
    mono: bool
    epi: bool

    @property
    def iso(self) -> bool:
        return self.mono and self.epi

    @property
    def kind(self) -> MapKind:
        if self.iso:
            return MapKind.ISO
        if self.mono:
            return MapKind.MONO
        if self.epi:
            return MapKind.EPI
        return MapKind.NEITHER


def classify_map(h: PresheafMap) -> MapClass:
    mono = all(len(set(h.components[a])) == len(h.components[a]) for a in h.base.objects)
    epi = all(set(h.components[a]) == set(h.target.elements(a)) for a in h.base.objects)
    return MapClass(mono=mono, epi=epi)


def is_mono(h: PresheafMap) -> bool:
    return classify_map(h).mono


def is_epi(h: PresheafMap) -> bool:
    return classify_map(h).epi


def is_mono_by_kernel_pair(h: PresheafMap) -> bool:
    """Categorical criterion: the two legs of the kernel pair coincide."""
    cone = pullback(h, h)
    return cone.legs["0"].key() == cone.legs["1"].key()


def is_epi_by_cokernel_pair(h: PresheafMap) -> bool:
    """Categorical criterion: the two legs of the cokernel pair coincide."""
    cocone = pushout(h, h)
    return cocone.legs["0"].key() == cocone.legs["1"].key()


def cancellation_witness(
    h: PresheafMap, probes: Iterable[Presheaf], guard: EnumerationGuard | None = None
) -> tuple[PresheafMap, PresheafMap] | None:
    """A pair `u != v` into `h.source` with `h.u == h.v`, searched over maps out of `probes`."""
    for probe in probes:
        seen: dict[tuple, PresheafMap] = {}
        for u in iter_maps(probe, h.source, guard):
            image = compose_maps(h, u).key()
            if image in seen:
                return seen[image], u
            seen[image] = u
    return None


def subpresheaf(
    target: Presheaf, parts: Mapping[str, Iterable[int]], name: str = ""
) -> tuple[Presheaf, PresheafMap]:
    """
    The subpresheaf with the given (action-closed) parts, and its inclusion.
    Raises `ValueError` when the parts are not closed under the action.
    """
    base = target.base
    members = {a: tuple(sorted(set(parts.get(a, ())))) for a in base.objects}
    position = {a: {x: k for k, x in enumerate(members[a])} for a in base.objects}
    actions = {}
    for m in base.morphisms:
        try:
            actions[m.id] = tuple(position[m.dom][target.act(m.id, y)] for y in members[m.cod])
        except KeyError:
            raise ValueError(f"parts are not closed under the action of {m.id}")
    carrier = Presheaf(
        base=base,
        sets={a: len(members[a]) for a in base.objects},
        actions=actions,
        labels={a: tuple(target.label(a, x) for x in members[a]) for a in base.objects},
        name=name,
    )
    inclusion = PresheafMap(source=carrier, target=target, components=members, name="incl")
    return carrier, inclusion


@dataclass(frozen=True, eq=False, kw_only=True)
class Factorization:
    image: Presheaf
    epi: PresheafMap
    mono: PresheafMap


def factor_epi_mono(h: PresheafMap) -> Factorization:
    image, mono = subpresheaf(
        h.target,
        {a: h.components[a] for a in h.base.objects},
        name=f"im({h.name})" if h.name else "im",
    )
    epi = PresheafMap(
        source=h.source,
        target=image,
        components={
            a: tuple(mono.components[a].index(y) for y in h.components[a]) for a in h.base.objects
        },
    )
    return Factorization(image=image, epi=epi, mono=mono)


def enumerate_presheaves(
    base: FinCategory, bound: int, guard: EnumerationGuard | None = None
) -> Iterator[Presheaf]:
    """
    Every presheaf on `base` with all sets of size at most `bound`, sizes in lexicographic
    order, actions found by propagating the composition law.
    """
    guard = guard or EnumerationGuard(what="presheaves")
    movers = [m.id for m in base.morphisms if not base.is_identity(m.id)]
    laws = [
        (g, f, h)
        for (g, f), h in base.composition.items()
        if not base.is_identity(g) and not base.is_identity(f)
    ]
    laws_by = {m: [law for law in laws if m in law] for m in movers}

    for sizes in cartesian(range(bound + 1), repeat=len(base.objects)):
        size = dict(zip(base.objects, sizes))

        def value(m, z, assignment):
            return z if base.is_identity(m) else assignment.get((m, z))

        def check(g, f, h, z, assignment):
            w = value(g, z, assignment)
            if w is None:
                return []
            u, t = value(f, w, assignment), value(h, z, assignment)
            if u is None and t is None:
                return []
            if u is None:
                return [((f, w), t)]
            if t is None:
                return [((h, z), u)]
            if u != t:
                raise Conflict()
            return []

        def forced(var, v, assignment, size=size):
            m, y = var
            out = []
            for g, f, h in laws_by[m]:
                if m == g or m == h:
                    out += check(g, f, h, y, assignment)
                if m == f:
                    for z in range(size[base.cod(g)]):
                        if value(g, z, assignment) == y:
                            out += check(g, f, h, z, assignment)
            return out

        variables = [(m, y) for m in movers for y in range(size[base.cod(m)])]
        for assignment in propagating_search(
            variables, lambda var, size=size: size[base.dom(var[0])], forced, guard
        ):
            actions = {m.id: tuple(range(size[m.dom])) for m in base.morphisms}
            for m in movers:
                actions[m] = tuple(assignment[(m, y)] for y in range(size[base.cod(m)]))
            name = "P" + "".join(map(str, sizes))
            yield Presheaf(base=base, sets=size, actions=actions, name=name)
