"""
Geometric morphisms between presheaf and sheaf toposes.

A topos has infinitely many objects, so functors between toposes are evaluated on
demand and every certificate here is relative to an explicit finite corpus of objects.
"""

import logging
from collections.abc import Callable, Hashable, Iterable, Sequence
from dataclasses import dataclass, field
from itertools import islice

from networkx.utils import UnionFind

from toposkit.config import EnumerationGuard
from toposkit.errors import ToposkitError
from toposkit.fincat import (
    ElementsCategory,
    ElementsOrientation,
    FinCategory,
    FinFunctor,
    MissingLimitError,
    category_of_elements,
    finite_limit_structure,
    opposite,
)
from toposkit.psh import (
    Diagram,
    Presheaf,
    PresheafMap,
    classify_map,
    compose_maps,
    constant,
    enumerate_presheaves,
    equalizer,
    find_isomorphisms,
    identity_map,
    initial,
    is_isomorphic,
    iter_maps,
    product,
    representable,
    terminal,
)
from toposkit.reports import Certificate
from toposkit.sites import GrothendieckTopology, Sheafification, is_sheaf, sheafify
from toposkit.spaces import ContinuousMap, canonical_topology, image_functor, preimage_functor

log = logging.getLogger(__name__)


class NotLexError(ToposkitError):
    def __init__(self, probe: str, witness: tuple):
        self.probe = probe
        self.witness = witness
        super().__init__(f"Finite limits not preserved: {probe} probe fails at {witness}")


def quotient(
    nodes: Sequence[Hashable], relations: Iterable[tuple[Hashable, Hashable]]
) -> tuple[list, dict]:
    """
    Classes of the equivalence generated by `relations`, each represented by its first
    node in `nodes` order, classes ordered by their representatives.
    """
    position = {node: i for i, node in enumerate(nodes)}
    union = UnionFind(nodes)
    for a, b in relations:
        union.union(a, b)
    blocks = sorted(
        (sorted(block, key=position.__getitem__) for block in union.to_sets()),
        key=lambda b: position[b[0]],
    )
    class_of = {node: k for k, block in enumerate(blocks) for node in block}
    return [block[0] for block in blocks], class_of


class ToposFunctor:
    """A functor between presheaf toposes, memoized on the objects it has seen."""

    def __init__(self, name: str, source_base: FinCategory, target_base: FinCategory):
        self.name = name
        self.source_base = source_base
        self.target_base = target_base
        self._objects: dict[Presheaf, Presheaf] = {}

    def __call__(self, presheaf: Presheaf) -> Presheaf:
        if presheaf not in self._objects:
            self._objects[presheaf] = self._build(presheaf)
        return self._objects[presheaf]

    def _build(self, presheaf: Presheaf) -> Presheaf:
        raise NotImplementedError

    def on_map(self, h: PresheafMap) -> PresheafMap:
        raise NotImplementedError

    def __repr__(self):
        source, target = self.source_base.name, self.target_base.name
        return f"{self.__class__.__name__}({self.name}: {source} -> {target})"


class IdentityFunctor(ToposFunctor):
    def __init__(self, base: FinCategory):
        super().__init__(f"id[{base.name}]", base, base)

    def _build(self, presheaf: Presheaf) -> Presheaf:
        return presheaf

    def on_map(self, h: PresheafMap) -> PresheafMap:
        return h


class Composite(ToposFunctor):
    """`outer . inner`."""

    def __init__(self, outer: ToposFunctor, inner: ToposFunctor):
        super().__init__(f"{outer.name}.{inner.name}", inner.source_base, outer.target_base)
        self.outer = outer
        self.inner = inner

    def _build(self, presheaf: Presheaf) -> Presheaf:
        return self.outer(self.inner(presheaf))

    def on_map(self, h: PresheafMap) -> PresheafMap:
        return self.outer.on_map(self.inner.on_map(h))


class Restriction(ToposFunctor):
    """`f*`: precomposition with `f: C -> D`, from Psh(D) to Psh(C)."""

    def __init__(self, functor: FinFunctor):
        super().__init__(f"{functor.name}*", functor.target, functor.source)
        self.functor = functor

    def _build(self, presheaf: Presheaf) -> Presheaf:
        f = self.functor
        return Presheaf(
            base=f.source,
            sets={c: presheaf.size(f.ob(c)) for c in f.source.objects},
            actions={m.id: presheaf.actions[f.mor(m.id)] for m in f.source.morphisms},
            labels=(
                {c: presheaf.labels[f.ob(c)] for c in f.source.objects} if presheaf.labels else None
            ),
            name=f"{f.name}*{presheaf.name}",
        )

    def on_map(self, h: PresheafMap) -> PresheafMap:
        f = self.functor
        return PresheafMap(
            source=self(h.source),
            target=self(h.target),
            components={c: h.components[f.ob(c)] for c in f.source.objects},
        )


class LeftKanExtension(ToposFunctor):
    """
    `f_!`, left adjoint to `f*`: `(f_! P)(d)` is the coend of `D(d, f c) x P(c)`, with
    `(c', f(g).u, x') ~ (c, u, P(g)(x'))` for `g: c -> c'`.
    """

    def __init__(self, functor: FinFunctor):
        super().__init__(f"{functor.name}_!", functor.source, functor.target)
        self.functor = functor
        self.classes: dict[Presheaf, dict[str, list]] = {}
        self.class_of: dict[Presheaf, dict[str, dict]] = {}

    def _build(self, presheaf: Presheaf) -> Presheaf:
        f, C, D = self.functor, self.functor.source, self.functor.target
        classes, class_of = {}, {}
        for d in D.objects:
            nodes = [
                (c, u, x)
                for c in C.objects
                for u in D.hom(d, f.ob(c))
                for x in presheaf.elements(c)
            ]
            relations = [
                ((g.cod, D.compose(f.mor(g.id), u), x), (g.dom, u, presheaf.act(g.id, x)))
                for g in C.morphisms
                if not C.is_identity(g.id)
                for u in D.hom(d, f.ob(g.dom))
                for x in presheaf.elements(g.cod)
            ]
            classes[d], class_of[d] = quotient(nodes, relations)
        self.classes[presheaf], self.class_of[presheaf] = classes, class_of
        actions = {
            k.id: tuple(class_of[k.dom][(c, D.compose(u, k.id), x)] for c, u, x in classes[k.cod])
            for k in D.morphisms
        }
        return Presheaf(
            base=D,
            sets={d: len(classes[d]) for d in D.objects},
            actions=actions,
            labels={d: tuple(classes[d]) for d in D.objects},
            name=f"{f.name}_!{presheaf.name}",
        )

    def on_map(self, h: PresheafMap) -> PresheafMap:
        source, target = self(h.source), self(h.target)
        reps, lookup = self.classes[h.source], self.class_of[h.target]
        return PresheafMap(
            source=source,
            target=target,
            components={
                d: tuple(lookup[d][(c, u, h(c, x))] for c, u, x in reps[d])
                for d in source.base.objects
            },
        )

    def unit(self, presheaf: Presheaf, restriction: Restriction) -> PresheafMap:
        """`P -> f* f_! P`, `x |-> [c, id, x]`."""
        f, D = self.functor, self.functor.target
        extended = self(presheaf)
        lookup = self.class_of[presheaf]
        return PresheafMap(
            source=presheaf,
            target=restriction(extended),
            components={
                c: tuple(lookup[f.ob(c)][(c, D.identity(f.ob(c)), x)] for x in presheaf.elements(c))
                for c in f.source.objects
            },
        )

    def counit(self, presheaf: Presheaf, restriction: Restriction) -> PresheafMap:
        """`f_! f* Q -> Q`, `[c, u, y] |-> Q(u)(y)`."""
        restricted = restriction(presheaf)
        extended = self(restricted)
        reps = self.classes[restricted]
        return PresheafMap(
            source=extended,
            target=presheaf,
            components={
                d: tuple(presheaf.act(u, y) for _, u, y in reps[d]) for d in presheaf.base.objects
            },
        )


class RightKanExtension(ToposFunctor):
    """`f_*`, right adjoint to `f*`: `(f_* P)(d) = Hom(f* y(d), P)`."""

    def __init__(
        self, functor: FinFunctor, restriction: Restriction, guard: EnumerationGuard | None = None
    ):
        super().__init__(f"{functor.name}_*", functor.source, functor.target)
        self.functor = functor
        self.restriction = restriction
        self.guard = guard
        self.maps: dict[Presheaf, dict[str, tuple[PresheafMap, ...]]] = {}
        self.lookup: dict[Presheaf, dict[str, dict[tuple, int]]] = {}
        self._shapes: dict[str, Presheaf] = {}

    def shape(self, d: str) -> Presheaf:
        """`f* y(d)`, elements labelled by the morphisms `f c -> d`."""
        if d not in self._shapes:
            self._shapes[d] = self.restriction._build(representable(self.functor.target, d))
        return self._shapes[d]

    def _build(self, presheaf: Presheaf) -> Presheaf:
        C, D = self.functor.source, self.functor.target
        maps = {d: tuple(iter_maps(self.shape(d), presheaf, self.guard)) for d in D.objects}
        lookup = {d: {m.key(): i for i, m in enumerate(maps[d])} for d in D.objects}
        self.maps[presheaf], self.lookup[presheaf] = maps, lookup
        actions = {}
        for k in D.morphisms:
            source, target = self.shape(k.dom), self.shape(k.cod)
            row = []
            for theta in maps[k.cod]:
                restricted = tuple(
                    tuple(
                        theta(c, target.index_of(c, D.compose(k.id, v))) for v in source.labels[c]
                    )
                    for c in C.objects
                )
                row.append(lookup[k.dom][restricted])
            actions[k.id] = tuple(row)
        return Presheaf(
            base=D,
            sets={d: len(maps[d]) for d in D.objects},
            actions=actions,
            name=f"{self.functor.name}_*{presheaf.name}",
        )

    def on_map(self, h: PresheafMap) -> PresheafMap:
        source, target = self(h.source), self(h.target)
        maps, lookup = self.maps[h.source], self.lookup[h.target]
        return PresheafMap(
            source=source,
            target=target,
            components={
                d: tuple(lookup[d][compose_maps(h, theta).key()] for theta in maps[d])
                for d in source.base.objects
            },
        )

    def unit(self, presheaf: Presheaf) -> PresheafMap:
        """`Q -> f_* f* Q`, `y |-> (u |-> Q(u)(y))`."""
        f, C = self.functor, self.functor.source
        restricted = self.restriction(presheaf)
        extended = self(restricted)
        lookup = self.lookup[restricted]
        components = {}
        for d in presheaf.base.objects:
            shape = self.shape(d)
            components[d] = tuple(
                lookup[d][
                    tuple(tuple(presheaf.act(u, y) for u in shape.labels[c]) for c in C.objects)
                ]
                for y in presheaf.elements(d)
            )
        return PresheafMap(source=presheaf, target=extended, components=components)

    def counit(self, presheaf: Presheaf) -> PresheafMap:
        """`f* f_* P -> P`, `theta |-> theta_c(id)`."""
        f, D = self.functor, self.functor.target
        extended = self(presheaf)
        maps = self.maps[presheaf]
        components = {}
        for c in f.source.objects:
            d = f.ob(c)
            at = self.shape(d).index_of(c, D.identity(d))
            components[c] = tuple(theta(c, at) for theta in maps[d])
        return PresheafMap(
            source=self.restriction(extended), target=presheaf, components=components
        )


class Sheafify(ToposFunctor):
    """Associated sheaf functor for a topology, with maps extended by the universal property."""

    def __init__(self, topology: GrothendieckTopology, guard: EnumerationGuard | None = None):
        super().__init__(f"a[{topology.name}]", topology.base, topology.base)
        self.topology = topology
        self.guard = guard
        self.sheafifications: dict[Presheaf, Sheafification] = {}

    def sheafification(self, presheaf: Presheaf) -> Sheafification:
        if presheaf not in self.sheafifications:
            self.sheafifications[presheaf] = sheafify(presheaf, self.topology, self.guard)
        return self.sheafifications[presheaf]

    def _build(self, presheaf: Presheaf) -> Presheaf:
        return self.sheafification(presheaf).presheaf

    def on_map(self, h: PresheafMap) -> PresheafMap:
        self(h.source)
        into = compose_maps(self.unit(h.target), h)
        return self.sheafification(h.source).lift(into)

    def unit(self, presheaf: Presheaf) -> PresheafMap:
        self(presheaf)
        return self.sheafification(presheaf).unit

    def counit(self, sheaf: Presheaf) -> PresheafMap:
        """`a(F) -> F` for a sheaf F."""
        self(sheaf)
        return self.sheafification(sheaf).lift(identity_map(sheaf))


@dataclass(kw_only=True)
class Adjunction:
    left: ToposFunctor
    right: ToposFunctor
    # X -> right(left(X)) for X in the source of `left`
    unit: Callable[[Presheaf], PresheafMap]
    # left(right(Y)) -> Y for Y in the source of `right`
    counit: Callable[[Presheaf], PresheafMap]

    def verify(
        self, left_corpus: Iterable[Presheaf], right_corpus: Iterable[Presheaf], cert: Certificate
    ) -> bool:
        """Triangle identities on both corpora; records every check into `cert`."""
        ok = True
        for x in left_corpus:
            lx = self.left(x)
            composite = compose_maps(self.counit(lx), self.left.on_map(self.unit(x)))
            ok &= cert.check(
                "triangle-left",
                composite.key() == identity_map(lx).key(),
                f"counit . {self.left.name}(unit) = id at {x.name}",
                witness=x.name,
            )
        for y in right_corpus:
            ry = self.right(y)
            composite = compose_maps(self.right.on_map(self.counit(y)), self.unit(ry))
            ok &= cert.check(
                "triangle-right",
                composite.key() == identity_map(ry).key(),
                f"{self.right.name}(counit) . unit = id at {y.name}",
                witness=y.name,
            )
        return ok


@dataclass(kw_only=True)
class GeometricMorphism:
    """
    `f: E -> F` with inverse image `f*: F -> E` left adjoint to direct image `f_*: E -> F`.
    `domain_corpus` lists objects of E, `codomain_corpus` objects of F.
    """

    name: str
    inverse_image: ToposFunctor
    direct_image: ToposFunctor
    adjunction: Adjunction
    domain_corpus: list[Presheaf]
    codomain_corpus: list[Presheaf]


def probe_corpus(base: FinCategory) -> list[Presheaf]:
    return [
        terminal(base),
        initial(base),
        *(representable(base, a) for a in base.objects),
        constant(base, 2),
    ]


def _equalizer_probes(
    corpus: list[Presheaf], max_maps: int
) -> list[tuple[PresheafMap, PresheafMap]]:
    probes = []
    for a in corpus:
        for b in corpus:
            maps = list(islice(iter_maps(a, b), max_maps))
            probes += [(u, v) for i, u in enumerate(maps) for v in maps[i + 1 :]]
    return probes


def verify_left_exact(
    functor: ToposFunctor, corpus: list[Presheaf], cert: Certificate, max_maps: int = 3
) -> bool:
    """Terminal, binary product and equalizer probes, compared through the canonical maps."""
    one = functor(terminal(functor.source_base))
    if not cert.check(
        "lex-terminal",
        all(one.size(a) == 1 for a in one.base.objects),
        f"{functor.name}(1) is terminal",
        witness=one.sizes(),
    ):
        return False
    for a in corpus:
        for b in corpus:
            cone = product(a, b)
            image = product(functor(a), functor(b))
            comparison = image.mediate(
                {"0": functor.on_map(cone.legs["0"]), "1": functor.on_map(cone.legs["1"])}
            )
            if not cert.check(
                "lex-product",
                comparison is not None and classify_map(comparison).iso,
                f"{functor.name}({a.name} x {b.name})",
                witness=(a.name, b.name),
            ):
                return False
    for u, v in _equalizer_probes(corpus, max_maps):
        cone = equalizer(u, v)
        image = equalizer(functor.on_map(u), functor.on_map(v))
        leg = functor.on_map(cone.legs["0"])
        comparison = image.mediate({"0": leg, "1": compose_maps(functor.on_map(u), leg)})
        if not cert.check(
            "lex-equalizer",
            comparison is not None and classify_map(comparison).iso,
            f"{functor.name}(eq) for a pair {u.source.name} => {u.target.name}",
            witness=(u.source.name, u.target.name, u.key(), v.key()),
        ):
            return False
    return True


def verify_geometric(morphism: GeometricMorphism, max_maps: int = 3) -> Certificate:
    cert = Certificate(subject=f"geometric morphism {morphism.name}")
    morphism.adjunction.verify(morphism.codomain_corpus, morphism.domain_corpus, cert)
    if cert.ok:
        verify_left_exact(morphism.inverse_image, morphism.codomain_corpus, cert, max_maps)
    log.debug(f"{cert}")
    return cert


@dataclass(kw_only=True)
class EmbeddingReport:
    is_embedding: bool
    witness: str | None = None


def is_embedding(morphism: GeometricMorphism) -> EmbeddingReport:
    """
    The direct image is full and faithful iff the counit is an iso, checked on the
    domain corpus.
    """
    for x in morphism.domain_corpus:
        if not classify_map(morphism.adjunction.counit(x)).iso:
            return EmbeddingReport(is_embedding=False, witness=x.name)
    return EmbeddingReport(is_embedding=True)


def identity_morphism(base: FinCategory, corpus: list[Presheaf] | None = None) -> GeometricMorphism:
    identity = IdentityFunctor(base)
    corpus = corpus if corpus is not None else probe_corpus(base)
    return GeometricMorphism(
        name=f"id[{base.name}]",
        inverse_image=identity,
        direct_image=identity,
        adjunction=Adjunction(
            left=identity, right=identity, unit=identity_map, counit=identity_map
        ),
        domain_corpus=corpus,
        codomain_corpus=corpus,
    )


@dataclass(kw_only=True)
class AdjointTriple:
    functor: FinFunctor
    lower: LeftKanExtension
    middle: Restriction
    upper: RightKanExtension
    left: Adjunction
    right: Adjunction

    def morphism(
        self, source_corpus: list[Presheaf], target_corpus: list[Presheaf]
    ) -> GeometricMorphism:
        """Psh(C) -> Psh(D) with inverse image `f*` and direct image `f_*`."""
        return GeometricMorphism(
            name=f"({self.functor.name}*, {self.functor.name}_*)",
            inverse_image=self.middle,
            direct_image=self.upper,
            adjunction=self.right,
            domain_corpus=source_corpus,
            codomain_corpus=target_corpus,
        )

    def essential_pair(
        self, source_corpus: list[Presheaf], target_corpus: list[Presheaf]
    ) -> GeometricMorphism:
        """`f_! -| f*` packaged like a geometric morphism; `f_!` need not be left exact."""
        return GeometricMorphism(
            name=f"({self.functor.name}_!, {self.functor.name}*)",
            inverse_image=self.lower,
            direct_image=self.middle,
            adjunction=self.left,
            domain_corpus=target_corpus,
            codomain_corpus=source_corpus,
        )

    def verify(
        self,
        source_corpus: list[Presheaf] | None = None,
        target_corpus: list[Presheaf] | None = None,
    ) -> Certificate:
        if source_corpus is None:
            source_corpus = probe_corpus(self.functor.source)
        if target_corpus is None:
            target_corpus = probe_corpus(self.functor.target)
        cert = Certificate(subject=f"adjoint triple of {self.functor.name}")
        self.left.verify(source_corpus, target_corpus, cert)
        self.right.verify(target_corpus, source_corpus, cert)
        verify_left_exact(self.middle, target_corpus, cert)
        return cert


def adjoint_triple(functor: FinFunctor, guard: EnumerationGuard | None = None) -> AdjointTriple:
    """`f_! -| f* -| f_*` for `f: C -> D`, between Psh(C) and Psh(D)."""
    restriction = Restriction(functor)
    lower = LeftKanExtension(functor)
    upper = RightKanExtension(functor, restriction, guard)
    return AdjointTriple(
        functor=functor,
        lower=lower,
        middle=restriction,
        upper=upper,
        left=Adjunction(
            left=lower,
            right=restriction,
            unit=lambda p: lower.unit(p, restriction),
            counit=lambda q: lower.counit(q, restriction),
        ),
        right=Adjunction(left=restriction, right=upper, unit=upper.unit, counit=upper.counit),
    )


def sheaf_inclusion(
    topology: GrothendieckTopology,
    presheaves: list[Presheaf] | None = None,
    guard: EnumerationGuard | None = None,
) -> GeometricMorphism:
    """Sh(C, J) -> Psh(C): sheafification as inverse image, the inclusion as direct image."""
    base = topology.base
    associated = Sheafify(topology, guard)
    presheaves = presheaves if presheaves is not None else probe_corpus(base)
    sheaves = []
    for p in presheaves:
        sheaf = associated(p) if not is_sheaf(p, topology, guard).is_sheaf else p
        if sheaf not in sheaves:
            sheaves.append(sheaf)
    return GeometricMorphism(
        name=f"Sh({base.name}, {topology.name}) -> Psh({base.name})",
        inverse_image=associated,
        direct_image=IdentityFunctor(base),
        adjunction=Adjunction(
            left=associated,
            right=IdentityFunctor(base),
            unit=associated.unit,
            counit=associated.counit,
        ),
        domain_corpus=sheaves,
        codomain_corpus=presheaves,
    )


def space_morphism(f: ContinuousMap, guard: EnumerationGuard | None = None) -> GeometricMorphism:
    """
    Sh(X) -> Sh(Y) for continuous `f: X -> Y`: `f_* F = F . f^-1` and `f* G` is the
    sheafified left Kan extension along `f^-1: Open(Y) -> Open(X)`.
    """
    inverse = preimage_functor(f)
    restriction = Restriction(inverse)
    lower = LeftKanExtension(inverse)
    associated = Sheafify(canonical_topology(f.source).topology, guard)
    inverse_image = Composite(associated, lower)

    def unit(g: Presheaf) -> PresheafMap:
        extended = lower(g)
        return compose_maps(
            restriction.on_map(associated.unit(extended)), lower.unit(g, restriction)
        )

    def counit(sheaf: Presheaf) -> PresheafMap:
        extended = lower(restriction(sheaf))
        associated(extended)
        return associated.sheafification(extended).lift(lower.counit(sheaf, restriction))

    x_base, y_base = inverse.target, inverse.source
    return GeometricMorphism(
        name=f"{f.source.name} -> {f.target.name}",
        inverse_image=inverse_image,
        direct_image=restriction,
        adjunction=Adjunction(left=inverse_image, right=restriction, unit=unit, counit=counit),
        domain_corpus=[terminal(x_base), *(representable(x_base, u) for u in x_base.objects)],
        codomain_corpus=[terminal(y_base), *(representable(y_base, v) for v in y_base.objects)],
    )


def open_map_triple(f: ContinuousMap, guard: EnumerationGuard | None = None) -> AdjointTriple:
    """The adjoint triple of the image functor Open(X) -> Open(Y) of an open map."""
    return adjoint_triple(image_functor(f), guard)


def is_cofiltered(category: FinCategory) -> tuple[bool, dict]:
    """
    Witness search for cofilteredness: an object, a cone over every pair of objects and
    a fork equalizing every parallel pair. Returns the verdict and the witnesses found,
    with the first failing requirement under "failure".
    """
    witnesses: dict = {"spans": {}, "forks": {}}
    if not category.objects:
        witnesses["failure"] = ("empty",)
        return False, witnesses
    witnesses["object"] = category.objects[0]
    objects = category.objects
    for i, x in enumerate(objects):
        for y in objects[i:]:
            span = next(
                (
                    (z, f, g)
                    for z in objects
                    for f in category.hom(z, x)
                    for g in category.hom(z, y)
                ),
                None,
            )
            if span is None:
                witnesses["failure"] = ("span", x, y)
                return False, witnesses
            witnesses["spans"][(x, y)] = span
    for x in objects:
        for y in objects:
            parallel = category.hom(x, y)
            for i, u in enumerate(parallel):
                for v in parallel[i + 1 :]:
                    fork = next(
                        (
                            (z, w)
                            for z in objects
                            for w in category.hom(z, x)
                            if category.compose(u, w) == category.compose(v, w)
                        ),
                        None,
                    )
                    if fork is None:
                        witnesses["failure"] = ("fork", u, v)
                        return False, witnesses
                    witnesses["forks"][(u, v)] = fork
    return True, witnesses


@dataclass(kw_only=True)
class FlatnessCertificate:
    """A functor `C -> FinSet` as a presheaf on the opposite of C, with flatness witnesses."""

    functor: Presheaf
    elements: ElementsCategory
    flat: bool
    witnesses: dict = field(default_factory=dict)

    @property
    def failure(self) -> tuple | None:
        return self.witnesses.get("failure")


def check_flat(functor: Presheaf) -> FlatnessCertificate:
    """Flat iff its category of elements (covariant orientation) is cofiltered."""
    elements = category_of_elements(functor, ElementsOrientation.COVARIANT)
    flat, witnesses = is_cofiltered(elements.category)
    return FlatnessCertificate(functor=functor, elements=elements, flat=flat, witnesses=witnesses)


def _up_to_iso(candidates: Iterable[Presheaf]) -> list[Presheaf]:
    representatives: list[Presheaf] = []
    for p in candidates:
        if not any(is_isomorphic(p, q) for q in representatives):
            representatives.append(p)
    return representatives


def points(
    base: FinCategory, bound: int, guard: EnumerationGuard | None = None
) -> list[FlatnessCertificate]:
    """
    Points of Psh(C): flat functors `C -> FinSet` with every set of size at most `bound`,
    one per isomorphism class.
    """
    covariant = opposite(base)
    found = [
        cert for cert in map(check_flat, enumerate_presheaves(covariant, bound, guard)) if cert.flat
    ]
    representatives = _up_to_iso(cert.functor for cert in found)
    result = [cert for cert in found if any(cert.functor is p for p in representatives)]
    log.debug(f"{len(result)} points of Psh({base.name}) at bound {bound}")
    return result


def lex_failure(base: FinCategory, functor: Presheaf) -> tuple | None:
    """
    First finite-limit probe that a functor `C -> FinSet` (a presheaf on the opposite of C)
    fails to preserve, or None. Raises `MissingLimitError` when C lacks finite limits.
    """
    limits = finite_limit_structure(base)
    if functor.size(limits.terminal) != 1:
        return ("terminal", limits.terminal)
    for (a, b), (p, pa, pb) in limits.products.items():
        pairs = [(functor.act(pa, x), functor.act(pb, x)) for x in functor.elements(p)]
        if len(set(pairs)) != len(pairs) or len(pairs) != functor.size(a) * functor.size(b):
            return ("product", a, b)
    for (f, g), (q, e) in limits.equalizers.items():
        a = base.dom(f)
        image = [functor.act(e, x) for x in functor.elements(q)]
        fixed = {y for y in functor.elements(a) if functor.act(f, y) == functor.act(g, y)}
        if len(set(image)) != len(image) or set(image) != fixed:
            return ("equalizer", f, g)
    return None


def lex_functors(
    base: FinCategory, bound: int, guard: EnumerationGuard | None = None
) -> list[Presheaf]:
    """Finite-limit preserving functors `C -> FinSet` up to iso, sets bounded by `bound`."""
    covariant = opposite(base)
    finite_limit_structure(base)
    return _up_to_iso(
        p for p in enumerate_presheaves(covariant, bound, guard) if lex_failure(base, p) is None
    )


def yoneda_diagram(base: FinCategory) -> Diagram:
    """`c |-> y(c)` as a diagram of shape C in Psh(C)."""
    objects = {c: representable(base, c) for c in base.objects}
    maps = {}
    for g in base.morphisms:
        if base.is_identity(g.id):
            continue
        source, target = objects[g.dom], objects[g.cod]
        maps[g.id] = PresheafMap(
            source=source,
            target=target,
            components={
                b: tuple(target.index_of(b, base.compose(g.id, u)) for u in source.labels[b])
                for b in base.objects
            },
        )
    return Diagram(base=base, shape=base, objects=objects, maps=maps)


class HomFrom(ToposFunctor):
    """`Q |-> Hom(M(-), Q)` from Psh(D) to Psh(C), for a diagram M of shape C in Psh(D)."""

    def __init__(self, model: Diagram, guard: EnumerationGuard | None = None):
        super().__init__("Hom(M,-)", model.base, model.shape)
        self.model = model
        self.guard = guard
        self.maps: dict[Presheaf, dict[str, tuple[PresheafMap, ...]]] = {}
        self.lookup: dict[Presheaf, dict[str, dict[tuple, int]]] = {}

    def _build(self, presheaf: Presheaf) -> Presheaf:
        C, M = self.model.shape, self.model
        maps = {c: tuple(iter_maps(M.objects[c], presheaf, self.guard)) for c in C.objects}
        lookup = {c: {m.key(): i for i, m in enumerate(maps[c])} for c in C.objects}
        self.maps[presheaf], self.lookup[presheaf] = maps, lookup
        actions = {
            g.id: tuple(
                lookup[g.dom][compose_maps(theta, M.map(g.id)).key()] for theta in maps[g.cod]
            )
            for g in C.morphisms
        }
        return Presheaf(
            base=C,
            sets={c: len(maps[c]) for c in C.objects},
            actions=actions,
            name=f"Hom(M,{presheaf.name})",
        )

    def on_map(self, h: PresheafMap) -> PresheafMap:
        source, target = self(h.source), self(h.target)
        maps, lookup = self.maps[h.source], self.lookup[h.target]
        return PresheafMap(
            source=source,
            target=target,
            components={
                c: tuple(lookup[c][compose_maps(h, theta).key()] for theta in maps[c])
                for c in source.base.objects
            },
        )


class Tensor(ToposFunctor):
    """
    `P |-> P (x) M` from Psh(C) to Psh(D): at d, the coend of `P(c) x M(c)(d)` with
    `(c, P(g)(x'), m) ~ (c', x', M(g)(m))` for `g: c -> c'`.
    """

    def __init__(self, model: Diagram):
        super().__init__("-(x)M", model.shape, model.base)
        self.model = model
        self.classes: dict[Presheaf, dict[str, list]] = {}
        self.class_of: dict[Presheaf, dict[str, dict]] = {}

    def _build(self, presheaf: Presheaf) -> Presheaf:
        C, D, M = self.model.shape, self.model.base, self.model
        classes, class_of = {}, {}
        for d in D.objects:
            nodes = [
                (c, x, m)
                for c in C.objects
                for x in presheaf.elements(c)
                for m in M.objects[c].elements(d)
            ]
            relations = [
                ((g.dom, presheaf.act(g.id, x), m), (g.cod, x, M.maps[g.id](d, m)))
                for g in C.morphisms
                if not C.is_identity(g.id)
                for x in presheaf.elements(g.cod)
                for m in M.objects[g.dom].elements(d)
            ]
            classes[d], class_of[d] = quotient(nodes, relations)
        self.classes[presheaf], self.class_of[presheaf] = classes, class_of
        actions = {
            k.id: tuple(
                class_of[k.dom][(c, x, M.objects[c].act(k.id, m))] for c, x, m in classes[k.cod]
            )
            for k in D.morphisms
        }
        return Presheaf(
            base=D,
            sets={d: len(classes[d]) for d in D.objects},
            actions=actions,
            labels={d: tuple(classes[d]) for d in D.objects},
            name=f"{presheaf.name}(x)M",
        )

    def on_map(self, h: PresheafMap) -> PresheafMap:
        source, target = self(h.source), self(h.target)
        reps, lookup = self.classes[h.source], self.class_of[h.target]
        return PresheafMap(
            source=source,
            target=target,
            components={
                d: tuple(lookup[d][(c, h(c, x), m)] for c, x, m in reps[d])
                for d in source.base.objects
            },
        )


def check_lex_model(model: Diagram) -> None:
    """Raises `NotLexError` unless the shape has finite limits and the model preserves them."""
    C = model.shape
    try:
        limits = finite_limit_structure(C)
    except MissingLimitError as e:
        raise NotLexError(f"missing {e.kind}", e.witness)
    if any(size != 1 for size in model.objects[limits.terminal].sizes()):
        raise NotLexError("terminal", (limits.terminal,))
    for (a, b), (p, pa, pb) in limits.products.items():
        cone = product(model.objects[a], model.objects[b])
        comparison = cone.mediate({"0": model.map(pa), "1": model.map(pb)})
        if comparison is None or not classify_map(comparison).iso:
            raise NotLexError("product", (a, b))
    for (f, g), (q, e) in limits.equalizers.items():
        cone = equalizer(model.map(f), model.map(g))
        comparison = cone.mediate(
            {"0": model.map(e), "1": compose_maps(model.map(f), model.map(e))}
        )
        if comparison is None or not classify_map(comparison).iso:
            raise NotLexError("equalizer", (f, g))


@dataclass(kw_only=True)
class LexClassification:
    morphism: GeometricMorphism
    # y(c) (x) M -> M(c), one per object of C
    comparison: dict[str, PresheafMap]
    certificate: Certificate


def classify_lex(
    model: Diagram,
    shape_corpus: list[Presheaf] | None = None,
    base_corpus: list[Presheaf] | None = None,
    guard: EnumerationGuard | None = None,
) -> LexClassification:
    """
    The geometric morphism Psh(D) -> Psh(C) classifying a lex `M: C -> Psh(D)`: inverse
    image `P |-> P (x) M`, direct image `Q |-> Hom(M(-), Q)`. The certificate covers the
    adjunction, left exactness and the round trip `y(c) (x) M ~ M(c)`.
    """
    check_lex_model(model)
    C, D = model.shape, model.base
    tensor = Tensor(model)
    hom = HomFrom(model, guard)

    def unit(p: Presheaf) -> PresheafMap:
        extended = tensor(p)
        hom_of = hom(extended)
        lookup = tensor.class_of[p]
        components = {}
        for c in C.objects:
            row = []
            for x in p.elements(c):
                theta = tuple(
                    tuple(lookup[d][(c, x, m)] for m in model.objects[c].elements(d))
                    for d in D.objects
                )
                row.append(hom.lookup[extended][c][theta])
            components[c] = tuple(row)
        return PresheafMap(source=p, target=hom_of, components=components)

    def counit(q: Presheaf) -> PresheafMap:
        hom_of = hom(q)
        extended = tensor(hom_of)
        maps = hom.maps[q]
        return PresheafMap(
            source=extended,
            target=q,
            components={
                d: tuple(maps[c][theta](d, m) for c, theta, m in tensor.classes[hom_of][d])
                for d in D.objects
            },
        )

    shape_corpus = shape_corpus if shape_corpus is not None else probe_corpus(C)
    base_corpus = base_corpus if base_corpus is not None else [terminal(D), *model.objects.values()]
    morphism = GeometricMorphism(
        name=f"classifier of M: {C.name} -> Psh({D.name})",
        inverse_image=tensor,
        direct_image=hom,
        adjunction=Adjunction(left=tensor, right=hom, unit=unit, counit=counit),
        domain_corpus=base_corpus,
        codomain_corpus=shape_corpus,
    )
    certificate = verify_geometric(morphism)

    comparison = {}
    for c in C.objects:
        yc = representable(C, c)
        extended = tensor(yc)
        target = model.objects[c]
        comparison[c] = PresheafMap(
            source=extended,
            target=target,
            components={
                d: tuple(model.map(yc.label(b, u))(d, m) for b, u, m in tensor.classes[yc][d])
                for d in D.objects
            },
        )
        certificate.check(
            "round-trip",
            classify_map(comparison[c]).iso,
            f"y({c}) (x) M ~ M({c})",
            witness=c,
        )
    yoneda = yoneda_diagram(C)
    for g in C.morphisms:
        if C.is_identity(g.id):
            continue
        lhs = compose_maps(comparison[g.cod], tensor.on_map(yoneda.maps[g.id]))
        rhs = compose_maps(model.maps[g.id], comparison[g.dom])
        certificate.check(
            "round-trip-natural",
            lhs.key() == rhs.key(),
            f"comparison is natural at {g.id}",
            witness=g.id,
        )
    return LexClassification(morphism=morphism, comparison=comparison, certificate=certificate)


def round_trip_isomorphisms(result: LexClassification) -> dict[str, PresheafMap | None]:
    """An explicit iso `y(c) (x) M -> M(c)` per object, found by search, as an independent check."""
    return {
        c: next(find_isomorphisms(m.source, m.target), None) for c, m in result.comparison.items()
    }
