"""
Audits of the elementary axioms of sets (well-pointedness, choice, natural numbers) on a
finite window of a topos. A pass only speaks for the corpus it was run on; a failure
carries a witness that `AuditCertificate.recheck` verifies from scratch.
"""

import hashlib
import logging
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any

from toposkit.config import EnumerationGuard
from toposkit.fincat import FinCategory
from toposkit.psh import (
    Presheaf,
    PresheafMap,
    compose_maps,
    enumerate_presheaves,
    identity_map,
    initial,
    is_epi,
    is_isomorphic,
    iter_maps,
    terminal,
)
from toposkit.sites import GrothendieckTopology, is_sheaf, sheafify

log = logging.getLogger(__name__)


@dataclass(kw_only=True)
class ToposCorpus:
    """
    Finitely many objects of Psh(C), or of Sh(C, J) when a topology is given, together
    with the topos' terminal and initial objects.
    """

    base: FinCategory
    presheaves: list[Presheaf]
    terminal: Presheaf
    initial: Presheaf
    topology: GrothendieckTopology | None = None
    name: str = ""

    @classmethod
    def of(
        cls,
        base: FinCategory,
        presheaves: Iterable[Presheaf],
        name: str = "",
        topology: GrothendieckTopology | None = None,
        guard: EnumerationGuard | None = None,
    ) -> "ToposCorpus":
        """Members after 1 and 0; with a topology, 0 is the sheafified empty presheaf."""
        one = terminal(base)
        if topology is None:
            zero = initial(base)
        else:
            zero = sheafify(initial(base), topology, guard).presheaf.renamed("0")
        members = _dedupe([one, zero, *presheaves])
        return cls(
            base=base,
            presheaves=members,
            terminal=one,
            initial=zero,
            topology=topology,
            name=name,
        )

    def hash(self) -> str:
        digest = hashlib.sha256()
        morphisms = [(m.id, m.dom, m.cod) for m in self.base.morphisms]
        digest.update(repr((self.base.objects, morphisms)).encode())
        for p in self.presheaves:
            digest.update(repr(p.key()).encode())
        if self.topology is not None:
            digest.update(repr(self.topology.key()).encode())
        return digest.hexdigest()


def _dedupe(presheaves: Iterable[Presheaf]) -> list[Presheaf]:
    seen: list[Presheaf] = []
    for p in presheaves:
        if p not in seen:
            seen.append(p)
    return seen


def full_corpus(
    base: FinCategory,
    max_size: int,
    topology: GrothendieckTopology | None = None,
    guard: EnumerationGuard | None = None,
) -> ToposCorpus:
    """
    Every presheaf with sets of size at most `max_size`. With a topology only the sheaves
    are kept and the initial object is the sheafified empty presheaf.
    """
    found = list(enumerate_presheaves(base, max_size, guard))
    name = f"Psh({base.name})<={max_size}"
    if topology is None:
        return ToposCorpus.of(base, found, name=name)
    sheaves = [p for p in found if is_sheaf(p, topology, guard).is_sheaf]
    name = f"Sh({base.name}, {topology.name})<={max_size}"
    return ToposCorpus.of(base, sheaves, name, topology, guard)


def global_elements(presheaf: Presheaf, guard: EnumerationGuard | None = None) -> list[PresheafMap]:
    """Every map `1 -> X`."""
    return list(iter_maps(terminal(presheaf.base), presheaf, guard))


class Audit(StrEnum):
    WELL_POINTED = "well-pointed"
    CHOICE = "choice"
    NNO = "nno"
    GLOBAL = "global"


class AuditVerdict(StrEnum):
    PASS = "pass"
    FAIL = "fail"
    REFUTED = "refuted"
    CONSISTENT_UP_TO_CORPUS = "consistent-up-to-corpus"
    COMPUTED = "computed"


@dataclass(kw_only=True)
class NnoCandidate:
    carrier: Presheaf
    zero: PresheafMap
    succ: PresheafMap

    def __str__(self):
        return f"({self.carrier.name}, {self.zero.key()}, {self.succ.key()})"


@dataclass(kw_only=True)
class RecursionTriple:
    """`(X, x: 1 -> X, r: X -> X)`, a test of the recursion property."""

    target: Presheaf
    point: PresheafMap
    step: PresheafMap

    def __str__(self):
        return f"({self.target.name}, {self.point.key()}, {self.step.key()})"


@dataclass(kw_only=True)
class AuditCertificate:
    audit: Audit
    verdict: AuditVerdict
    corpus_hash: str
    witness: Any = None
    detail: str = ""
    corpus: ToposCorpus = field(repr=False)
    candidate: NnoCandidate | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.verdict not in (AuditVerdict.FAIL, AuditVerdict.REFUTED)

    def recheck(self) -> bool:
        """Re-verify the witness, or for a pass re-run the audit, on the recorded corpus."""
        if self.corpus.hash() != self.corpus_hash:
            return False
        match self.audit, self.verdict:
            case Audit.WELL_POINTED, AuditVerdict.FAIL if self.witness == "degenerate":
                return is_isomorphic(self.corpus.initial, self.corpus.terminal)
            case Audit.WELL_POINTED, AuditVerdict.FAIL:
                f, g = self.witness
                return f.key() != g.key() and not _separated(f, g, global_elements(f.source))
            case Audit.CHOICE, AuditVerdict.FAIL:
                return is_epi(self.witness) and _section(self.witness) is None
            case Audit.NNO, AuditVerdict.REFUTED if self.candidate is not None:
                return len(recursion_solutions(self.candidate, self.witness)) != 1
        return rerun(self).verdict == self.verdict


def _separated(f: PresheafMap, g: PresheafMap, points: list[PresheafMap]) -> bool:
    return any(compose_maps(f, x).key() != compose_maps(g, x).key() for x in points)


def _section(epi: PresheafMap, guard: EnumerationGuard | None = None) -> PresheafMap | None:
    identity = identity_map(epi.target).key()
    sections = iter_maps(epi.target, epi.source, guard)
    return next((s for s in sections if compose_maps(epi, s).key() == identity), None)


def _certificate(
    corpus: ToposCorpus, audit: Audit, verdict: AuditVerdict, **kwargs
) -> AuditCertificate:
    cert = AuditCertificate(
        audit=audit, verdict=verdict, corpus_hash=corpus.hash(), corpus=corpus, **kwargs
    )
    log.debug(f"{audit} on {corpus.name}: {verdict}")
    return cert


def check_well_pointed(
    corpus: ToposCorpus, guard: EnumerationGuard | None = None
) -> AuditCertificate:
    """
    The terminal object separates every parallel pair of corpus maps, and 0 is not
    isomorphic to 1. The first pair agreeing on all global elements is the witness.
    """
    for x in corpus.presheaves:
        points = global_elements(x, guard)
        for y in corpus.presheaves:
            maps = list(iter_maps(x, y, guard))
            for i, f in enumerate(maps):
                for g in maps[i + 1 :]:
                    if not _separated(f, g, points):
                        return _certificate(
                            corpus,
                            Audit.WELL_POINTED,
                            AuditVerdict.FAIL,
                            witness=(f, g),
                            detail=(
                                f"two maps {x.name} -> {y.name} agree"
                                f" on all {len(points)} global element(s)"
                            ),
                        )
    if is_isomorphic(corpus.initial, corpus.terminal):
        return _certificate(
            corpus,
            Audit.WELL_POINTED,
            AuditVerdict.FAIL,
            witness="degenerate",
            detail="0 is isomorphic to 1",
        )
    return _certificate(
        corpus, Audit.WELL_POINTED, AuditVerdict.PASS, detail=f"{len(corpus.presheaves)} objects"
    )


def check_choice(corpus: ToposCorpus, guard: EnumerationGuard | None = None) -> AuditCertificate:
    """Every epi between corpus objects has a section."""
    for x in corpus.presheaves:
        for y in corpus.presheaves:
            for e in iter_maps(x, y, guard):
                if is_epi(e) and _section(e, guard) is None:
                    return _certificate(
                        corpus,
                        Audit.CHOICE,
                        AuditVerdict.FAIL,
                        witness=e,
                        detail=f"an epi {x.name} -> {y.name} has no section",
                    )
    return _certificate(
        corpus, Audit.CHOICE, AuditVerdict.PASS, detail=f"{len(corpus.presheaves)} objects"
    )


def recursion_solutions(candidate: NnoCandidate, triple: RecursionTriple) -> list[PresheafMap]:
    """Every `f: N -> X` with `f . zero = x` and `f . succ = r . f`."""
    point = triple.point.key()
    return [
        f
        for f in iter_maps(candidate.carrier, triple.target)
        if compose_maps(f, candidate.zero).key() == point
        and compose_maps(f, candidate.succ).key() == compose_maps(triple.step, f).key()
    ]


def recursion_triples(
    corpus: ToposCorpus, guard: EnumerationGuard | None = None
) -> Iterator[RecursionTriple]:
    for x in corpus.presheaves:
        steps = list(iter_maps(x, x, guard))
        for point in global_elements(x, guard):
            for step in steps:
                yield RecursionTriple(target=x, point=point, step=step)


def check_nno_candidate(
    corpus: ToposCorpus,
    candidate: NnoCandidate,
    triples: Iterable[RecursionTriple] | None = None,
    guard: EnumerationGuard | None = None,
) -> AuditCertificate:
    """
    Refuted by the first test triple admitting zero or several recursion solutions;
    otherwise only consistent with the triples tried, never proved.
    """
    triples = recursion_triples(corpus, guard) if triples is None else triples
    tried = 0
    for triple in triples:
        tried += 1
        solutions = recursion_solutions(candidate, triple)
        if len(solutions) != 1:
            return _certificate(
                corpus,
                Audit.NNO,
                AuditVerdict.REFUTED,
                witness=triple,
                candidate=candidate,
                detail=(
                    f"{len(solutions)} maps {candidate.carrier.name} -> {triple.target.name}"
                    f" solve {triple}"
                ),
            )
    return _certificate(
        corpus,
        Audit.NNO,
        AuditVerdict.CONSISTENT_UP_TO_CORPUS,
        candidate=candidate,
        detail=f"unique solutions for {tried} triple(s)",
    )


def nno_candidates(
    corpus: ToposCorpus, guard: EnumerationGuard | None = None
) -> Iterator[NnoCandidate]:
    for n in corpus.presheaves:
        steps = list(iter_maps(n, n, guard))
        for zero in global_elements(n, guard):
            for succ in steps:
                yield NnoCandidate(carrier=n, zero=zero, succ=succ)


def check_nno_corpus(
    corpus: ToposCorpus, guard: EnumerationGuard | None = None
) -> AuditCertificate:
    """Every candidate `1 -> N -> N` among the corpus objects, tested against the corpus triples."""
    triples = list(recursion_triples(corpus, guard))
    count = 0
    for candidate in nno_candidates(corpus, guard):
        count += 1
        cert = check_nno_candidate(corpus, candidate, triples, guard)
        if cert.ok:
            return _certificate(
                corpus,
                Audit.NNO,
                AuditVerdict.CONSISTENT_UP_TO_CORPUS,
                candidate=candidate,
                detail=f"candidate {candidate} survives {len(triples)} triple(s)",
            )
    return _certificate(
        corpus,
        Audit.NNO,
        AuditVerdict.REFUTED,
        witness=count,
        detail=f"all {count} candidate(s) refuted",
    )


def count_global_elements(
    corpus: ToposCorpus, guard: EnumerationGuard | None = None
) -> AuditCertificate:
    counts = {p.name or repr(p): len(global_elements(p, guard)) for p in corpus.presheaves}
    return _certificate(corpus, Audit.GLOBAL, AuditVerdict.COMPUTED, witness=counts)


def rerun(cert: AuditCertificate) -> AuditCertificate:
    if cert.audit == Audit.NNO and cert.candidate is not None:
        return check_nno_candidate(cert.corpus, cert.candidate)
    return run_audits(cert.corpus, [cert.audit])[0]


def run_audits(
    corpus: ToposCorpus,
    checks: Iterable[Audit | str],
    candidate: NnoCandidate | None = None,
    guard: EnumerationGuard | None = None,
) -> list[AuditCertificate]:
    """Run the named audits in the given order."""
    results = []
    for check in map(Audit, checks):
        match check:
            case Audit.WELL_POINTED:
                results.append(check_well_pointed(corpus, guard))
            case Audit.CHOICE:
                results.append(check_choice(corpus, guard))
            case Audit.NNO if candidate is not None:
                results.append(check_nno_candidate(corpus, candidate, guard=guard))
            case Audit.NNO:
                results.append(check_nno_corpus(corpus, guard))
            case Audit.GLOBAL:
                results.append(count_global_elements(corpus, guard))
    return results
