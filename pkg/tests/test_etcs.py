import pytest

from toposkit.classifier import omega
from toposkit.etcs import (
    Audit,
    AuditVerdict,
    NnoCandidate,
    ToposCorpus,
    check_nno_candidate,
    full_corpus,
    run_audits,
)
from toposkit.fincat import FinCategory
from toposkit.psh import Presheaf, PresheafMap, constant, identity_map, terminal
from toposkit.sites import is_sheaf
from toposkit.spaces import FinSpace, canonical_topology


@pytest.fixture
def regular(z2: FinCategory) -> Presheaf:
    """Z/2 acting on itself"""
    return Presheaf(
        base=z2, sets={"*": 2}, actions={"id_*": (0, 1), "g1": (1, 0)}, name="regular"
    )


def test_full_corpus(point: FinCategory):
    corpus = full_corpus(point, 3)
    assert [p.sizes() for p in corpus.presheaves] == [[1], [0], [2], [3]]
    assert corpus.name == "Psh(1)<=3"
    assert corpus.hash() == full_corpus(point, 3).hash()
    assert corpus.hash() != full_corpus(point, 2).hash()


def test_finite_sets_are_well_pointed_with_choice(point: FinCategory):
    certificates = run_audits(full_corpus(point, 4), [Audit.WELL_POINTED, "choice"])
    assert [c.verdict for c in certificates] == [AuditVerdict.PASS, AuditVerdict.PASS]
    assert all(c.ok and c.recheck() for c in certificates)


def test_group_actions_are_not_well_pointed(z2: FinCategory):
    well_pointed, choice = run_audits(full_corpus(z2, 2), ["well-pointed", "choice"])
    assert well_pointed.verdict == AuditVerdict.FAIL
    f, g = well_pointed.witness
    assert f.key() != g.key()
    assert well_pointed.recheck()
    assert choice.verdict == AuditVerdict.FAIL
    assert choice.recheck()


def test_terminal_nno_candidate_is_refuted(point: FinCategory):
    corpus = full_corpus(point, 3)
    one = terminal(point)
    candidate = NnoCandidate(carrier=one, zero=identity_map(one), succ=identity_map(one))
    cert = check_nno_candidate(corpus, candidate)
    assert cert.verdict == AuditVerdict.REFUTED
    assert not cert.ok
    assert cert.recheck()
    (via_run,) = run_audits(corpus, [Audit.NNO], candidate=candidate)
    assert via_run.verdict == AuditVerdict.REFUTED


def counter(base: FinCategory, n: int, step) -> NnoCandidate:
    """`1 -> n -> n` on a constant presheaf, starting at 0 and moving by `step`"""
    carrier = constant(base, n)
    zero = PresheafMap(
        source=terminal(base), target=carrier, components={a: (0,) for a in base.objects}
    )
    succ = PresheafMap(
        source=carrier,
        target=carrier,
        components={a: tuple(step(k) for k in range(n)) for a in base.objects},
    )
    return NnoCandidate(carrier=carrier, zero=zero, succ=succ)


@pytest.mark.parametrize(
    "size, step",
    [
        (2, lambda k: k),
        (2, lambda k: 1 - k),
        (3, lambda k: (k + 1) % 3),
        (3, lambda k: min(k + 1, 2)),
    ],
    ids=["fixed", "swap", "cycle", "saturating"],
)
def test_finite_counters_are_refuted(point: FinCategory, size: int, step):
    cert = check_nno_candidate(full_corpus(point, 3), counter(point, size, step))
    assert cert.verdict == AuditVerdict.REFUTED
    assert cert.recheck()


@pytest.mark.parametrize("fixture", ["arrow", "z2"])
def test_nno_candidates_over_other_bases_are_refuted(request, fixture: str):
    base = request.getfixturevalue(fixture)
    corpus = full_corpus(base, 2)
    for candidate in [counter(base, 1, lambda k: k), counter(base, 2, lambda k: 1 - k)]:
        cert = check_nno_candidate(corpus, candidate)
        assert cert.verdict == AuditVerdict.REFUTED
        assert cert.recheck()
    (cert,) = run_audits(corpus, [Audit.NNO])
    assert cert.verdict == AuditVerdict.REFUTED


def test_global_elements(z2: FinCategory, regular: Presheaf, point: FinCategory):
    (cert,) = run_audits(ToposCorpus.of(z2, [regular]), [Audit.GLOBAL])
    assert cert.verdict == AuditVerdict.COMPUTED
    assert cert.witness == {"1": 1, "0": 0, "regular": 0}
    (cert,) = run_audits(ToposCorpus.of(point, [omega(point).omega]), [Audit.GLOBAL])
    assert cert.witness["Omega"] == 2


def test_sheaf_corpus(sierpinski_space: FinSpace):
    topology = canonical_topology(sierpinski_space).topology
    corpus = full_corpus(topology.base, 2, topology)
    assert corpus.initial.sizes() == [1, 0, 0]
    assert corpus.name == "Sh(Open(sierpinski), canonical(sierpinski))<=2"
    assert all(is_sheaf(p, topology).is_sheaf for p in corpus.presheaves)


def test_unknown_audit(point: FinCategory):
    with pytest.raises(ValueError):
        run_audits(full_corpus(point, 1), ["compactness"])
