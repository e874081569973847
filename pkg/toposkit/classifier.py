import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

from toposkit.config import EnumerationGuard
from toposkit.errors import ToposkitError
from toposkit.fincat import FinCategory
from toposkit.psh import (
    Presheaf,
    PresheafMap,
    constant,
    initial,
    is_mono,
    iter_maps,
    pullback,
    representable,
    subpresheaf,
    terminal,
)
from toposkit.reports import Certificate

log = logging.getLogger(__name__)


class NotMonoError(ToposkitError):
    def __init__(self, obj: str, x: int, y: int):
        self.obj = obj
        self.pair = (x, y)
        super().__init__(f"Map is not mono: elements {x} and {y} of {obj} have the same image")


@dataclass(frozen=True, kw_only=True)
class Sieve:
    base: FinCategory = field(compare=False, repr=False)
    apex: str
    members: frozenset[str]

    @classmethod
    def maximal(cls, base: FinCategory, apex: str) -> "Sieve":
        return cls(base=base, apex=apex, members=frozenset(base.into(apex)))

    @classmethod
    def empty(cls, base: FinCategory, apex: str) -> "Sieve":
        return cls(base=base, apex=apex, members=frozenset())

    @classmethod
    def principal(cls, base: FinCategory, f: str) -> "Sieve":
        """The sieve generated by `f`: every `f . g`."""
        return cls(
            base=base,
            apex=base.cod(f),
            members=frozenset(base.compose(f, g) for g in base.into(base.dom(f))),
        )

    def pullback(self, f: str) -> "Sieve":
        """`f*(S) = {g | f . g in S}` for `f: b -> apex`."""
        b = self.base.dom(f)
        return Sieve(
            base=self.base,
            apex=b,
            members=frozenset(
                g for g in self.base.into(b) if self.base.compose(f, g) in self.members
            ),
        )

    def intersection(self, other: "Sieve") -> "Sieve":
        return Sieve(base=self.base, apex=self.apex, members=self.members & other.members)

    def union(self, other: "Sieve") -> "Sieve":
        return Sieve(base=self.base, apex=self.apex, members=self.members | other.members)

    @property
    def is_maximal(self) -> bool:
        return self.base.identity(self.apex) in self.members

    def is_closed(self) -> bool:
        return all(
            self.base.compose(f, g) in self.members
            for f in self.members
            for g in self.base.into(self.base.dom(f))
        )

    def sorted_members(self) -> list[str]:
        return sorted(self.members, key=self.base.index)

    def key(self) -> tuple:
        return (len(self.members), tuple(sorted(self.base.index(f) for f in self.members)))

    def __str__(self):
        return "{" + ", ".join(self.sorted_members()) + "}"


@lru_cache(maxsize=None)
def sieves_on(base: FinCategory, apex: str) -> tuple[Sieve, ...]:
    """
    Every sieve on `apex`, ordered by (size, member indices). Sieves are the unions of
    principal sieves, so closing the empty sieve under union with principals finds them all.
    """
    guard = EnumerationGuard(what=f"sieves on {apex}")
    principals = [Sieve.principal(base, f) for f in base.into(apex)]
    found = {Sieve.empty(base, apex)}
    frontier = list(found)
    while frontier:
        sieve = frontier.pop()
        for p in principals:
            guard.tick()
            bigger = sieve.union(p)
            if bigger not in found:
                found.add(bigger)
                frontier.append(bigger)
    log.debug(f"{len(found)} sieves on {apex} in {base.name}")
    return tuple(sorted(found, key=Sieve.key))


@dataclass(frozen=True, eq=False, kw_only=True)
class SubobjectClassifier:
    omega: Presheaf
    truth: PresheafMap

    @property
    def base(self) -> FinCategory:
        return self.omega.base

    def sieve(self, a: str, index: int) -> Sieve:
        return self.omega.labels[a][index]

    def index(self, sieve: Sieve) -> int:
        return self.omega.index_of(sieve.apex, sieve)

    def top(self, a: str) -> int:
        return self.index(Sieve.maximal(self.base, a))

    def bottom(self, a: str) -> int:
        return self.index(Sieve.empty(self.base, a))


@lru_cache(maxsize=None)
def omega(base: FinCategory) -> SubobjectClassifier:
    """Omega(a) = sieves on a, acting by pullback; truth picks the maximal sieve."""
    labels = {a: sieves_on(base, a) for a in base.objects}
    position = {a: {s: k for k, s in enumerate(labels[a])} for a in base.objects}
    actions = {
        m.id: tuple(position[m.dom][s.pullback(m.id)] for s in labels[m.cod])
        for m in base.morphisms
    }
    presheaf = Presheaf(
        base=base,
        sets={a: len(labels[a]) for a in base.objects},
        actions=actions,
        labels=labels,
        name="Omega",
    )
    truth = PresheafMap(
        source=terminal(base),
        target=presheaf,
        components={a: (position[a][Sieve.maximal(base, a)],) for a in base.objects},
        name="true",
    )
    return SubobjectClassifier(omega=presheaf, truth=truth)


@dataclass(frozen=True, kw_only=True)
class Subobject:
    """A subpresheaf stored as its canonical pointwise subsets, one per object in order."""

    carrier: Presheaf = field(compare=False, repr=False)
    parts: tuple[frozenset[int], ...]

    @classmethod
    def from_parts(cls, carrier: Presheaf, parts) -> "Subobject":
        return cls(
            carrier=carrier,
            parts=tuple(frozenset(parts.get(a, ())) for a in carrier.base.objects),
        )

    def part(self, a: str) -> frozenset[int]:
        return self.parts[self.carrier.base.object_index(a)]

    def as_dict(self) -> dict[str, frozenset[int]]:
        return dict(zip(self.carrier.base.objects, self.parts))

    @cached_property
    def _embedding(self) -> tuple[Presheaf, PresheafMap]:
        return subpresheaf(self.carrier, self.as_dict(), name=f"S<{self.carrier.name}")

    def presheaf(self) -> Presheaf:
        return self._embedding[0]

    def inclusion(self) -> PresheafMap:
        return self._embedding[1]

    def __le__(self, other: "Subobject") -> bool:
        return all(p <= q for p, q in zip(self.parts, other.parts))

    @property
    def size(self) -> int:
        return sum(len(p) for p in self.parts)

    def key(self) -> tuple:
        return (self.size, tuple(tuple(sorted(p)) for p in self.parts))

    def __str__(self):
        parts = "; ".join(
            f"{a}: {{{' '.join(str(self.carrier.label(a, x)) for x in sorted(p))}}}"
            for a, p in zip(self.carrier.base.objects, self.parts)
        )
        return f"[{parts}]"


def image_subobject(m: PresheafMap) -> Subobject:
    return Subobject.from_parts(m.target, {a: m.components[a] for a in m.base.objects})


def _classify(carrier: Presheaf, parts: Subobject, classifier: SubobjectClassifier) -> PresheafMap:
    base = carrier.base
    components = {}
    for a in base.objects:
        row = []
        for x in carrier.elements(a):
            members = frozenset(
                f for f in base.into(a) if carrier.act(f, x) in parts.part(base.dom(f))
            )
            row.append(classifier.index(Sieve(base=base, apex=a, members=members)))
        components[a] = tuple(row)
    return PresheafMap(source=carrier, target=classifier.omega, components=components, name="chi")


def characteristic(m: PresheafMap) -> PresheafMap:
    """
    The map `chi: X -> Omega` classifying a mono `m: A -> X`:
    `chi_a(x) = {f: c -> a | X(f)(x) in image m_c}`.
    """
    for a in m.base.objects:
        seen: dict[int, int] = {}
        for x, y in enumerate(m.components[a]):
            if y in seen:
                raise NotMonoError(a, seen[y], x)
            seen[y] = x
    return _classify(m.target, image_subobject(m), omega(m.base))


def characteristic_of(subobject: Subobject) -> PresheafMap:
    return _classify(subobject.carrier, subobject, omega(subobject.carrier.base))


def pull_back_truth(chi: PresheafMap) -> Subobject:
    """The subobject of `chi.source` classified by `chi: X -> Omega`."""
    classifier = omega(chi.base)
    return Subobject.from_parts(
        chi.source,
        {
            a: [x for x in chi.source.elements(a) if chi(a, x) == classifier.top(a)]
            for a in chi.base.objects
        },
    )


def pull_back_subobject(h: PresheafMap, subobject: Subobject) -> Subobject:
    """`h*(S)` for `h: X' -> X` and S a subobject of X."""
    return Subobject.from_parts(
        h.source,
        {
            a: [x for x in h.source.elements(a) if h(a, x) in subobject.part(a)]
            for a in h.base.objects
        },
    )


def generated_subobject(carrier: Presheaf, a: str, x: int) -> Subobject:
    parts: dict[str, set[int]] = {b: set() for b in carrier.base.objects}
    for f in carrier.base.into(a):
        parts[carrier.base.dom(f)].add(carrier.act(f, x))
    return Subobject.from_parts(carrier, parts)


def pseudo_complement(s: Subobject) -> Subobject:
    """`not S`: the elements whose characteristic sieve is empty."""
    chi = characteristic_of(s)
    classifier = omega(s.carrier.base)
    return Subobject.from_parts(
        s.carrier,
        {
            a: [x for x in s.carrier.elements(a) if chi(a, x) == classifier.bottom(a)]
            for a in s.carrier.base.objects
        },
    )


class SubobjectLattice:
    """Sub(X): every subpresheaf of X, canonically ordered, with its Heyting operations."""

    def __init__(self, carrier: Presheaf, elements: Sequence[Subobject]):
        self.carrier = carrier
        self.elements = list(elements)
        self._position = {s: k for k, s in enumerate(self.elements)}

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, k: int) -> Subobject:
        return self.elements[k]

    def index(self, subobject: Subobject) -> int:
        return self._position[subobject]

    @cached_property
    def order(self) -> list[list[bool]]:
        return [[s <= t for t in self.elements] for s in self.elements]

    @property
    def top(self) -> Subobject:
        carrier = self.carrier
        return Subobject.from_parts(carrier, {a: carrier.elements(a) for a in carrier.base.objects})

    @property
    def bottom(self) -> Subobject:
        return Subobject.from_parts(self.carrier, {})

    def meet(self, s: Subobject, t: Subobject) -> Subobject:
        return Subobject(carrier=self.carrier, parts=tuple(p & q for p, q in zip(s.parts, t.parts)))

    def join(self, s: Subobject, t: Subobject) -> Subobject:
        return Subobject(carrier=self.carrier, parts=tuple(p | q for p, q in zip(s.parts, t.parts)))

    def implies(self, s: Subobject, t: Subobject) -> Subobject:
        """`x in (S => T)(a)` iff every restriction of x lying in S lies in T."""
        base = self.carrier.base
        parts = {}
        for a in base.objects:
            parts[a] = [
                x
                for x in self.carrier.elements(a)
                if all(
                    self.carrier.act(f, x) in t.part(base.dom(f))
                    for f in base.into(a)
                    if self.carrier.act(f, x) in s.part(base.dom(f))
                )
            ]
        return Subobject.from_parts(self.carrier, parts)

    def negation(self, s: Subobject) -> Subobject:
        return pseudo_complement(s)

    def __repr__(self):
        return f"SubobjectLattice({self.carrier.name}, {len(self.elements)} elements)"


def subobjects(carrier: Presheaf, guard: EnumerationGuard | None = None) -> SubobjectLattice:
    """
    Every subpresheaf, found as the unions of the subobjects generated by single elements.
    """
    guard = guard or EnumerationGuard(what="subobjects")
    generators = []
    for a in carrier.base.objects:
        for x in carrier.elements(a):
            g = generated_subobject(carrier, a, x)
            if g not in generators:
                generators.append(g)
    empty = Subobject.from_parts(carrier, {})
    found = {empty}
    frontier = [empty]
    while frontier:
        current = frontier.pop()
        for g in generators:
            if g <= current:
                continue
            guard.tick()
            parts = tuple(p | q for p, q in zip(current.parts, g.parts))
            bigger = Subobject(carrier=carrier, parts=parts)
            if bigger not in found:
                found.add(bigger)
                frontier.append(bigger)
    log.debug(f"Sub({carrier.name}) has {len(found)} elements")
    return SubobjectLattice(carrier, sorted(found, key=Subobject.key))


def default_corpus(base: FinCategory) -> list[Presheaf]:
    return [
        terminal(base),
        initial(base),
        *(representable(base, a) for a in base.objects),
        constant(base, 2),
        omega(base).omega,
    ]


def verify_classifier(
    base: FinCategory,
    corpus: Iterable[Presheaf] | None = None,
    guard: EnumerationGuard | None = None,
) -> Certificate:
    """
    Certify Omega on a corpus of presheaves: every subobject has exactly one classifying map
    and its square is a pullback, Sub(X) -> Hom(X, Omega) is a bijection, the domain of
    `true` is terminal and `true` is mono. Records stop at the first failing witness.
    """
    classifier = omega(base)
    cert = Certificate(subject=f"classifier over {base.name}")
    corpus = list(corpus) if corpus is not None else default_corpus(base)
    guard = guard or EnumerationGuard(what="classifier checks")

    if not cert.check("truth-is-mono", is_mono(classifier.truth), "true: 1 -> Omega"):
        return cert

    one = classifier.truth.source
    for x in corpus:
        count = sum(1 for _ in iter_maps(x, one, guard))
        if not cert.check("terminal", count == 1, f"|Hom({x.name}, 1)| = {count}", witness=x.name):
            return cert

    for x in corpus:
        lattice = subobjects(x, guard)
        classified: dict[Subobject, list[PresheafMap]] = {}
        homs = 0
        for chi in iter_maps(x, classifier.omega, guard):
            homs += 1
            classified.setdefault(pull_back_truth(chi), []).append(chi)
        detail = f"|Sub({x.name})| = {len(lattice)}, |Hom({x.name}, Omega)| = {homs}"
        bijective = homs == len(lattice) == len(classified)
        if not cert.check("sub-hom-bijection", bijective, detail, witness=x.name):
            return cert
        for s in lattice:
            chi = characteristic(s.inclusion())
            candidates = classified.get(s, [])
            if not cert.check(
                "unique-characteristic",
                len(candidates) == 1 and candidates[0] == chi,
                f"{len(candidates)} classifying map(s) for {s} in {x.name}",
                witness=(x.name, str(s)),
            ):
                return cert
            cone = pullback(chi, classifier.truth)
            leg = cone.legs["0"]
            if not cert.check(
                "pullback-square",
                is_mono(leg) and image_subobject(leg) == s,
                f"pullback of true along chi recovers {s}",
                witness=(x.name, str(s)),
            ):
                return cert
    log.debug(f"Classifier certificate over {base.name}: {cert}")
    return cert
