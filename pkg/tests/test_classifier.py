import pytest

from toposkit.classifier import (
    NotMonoError,
    Sieve,
    Subobject,
    characteristic,
    omega,
    pseudo_complement,
    pull_back_truth,
    sieves_on,
    subobjects,
    verify_classifier,
)
from toposkit.fincat import FinCategory, discrete
from toposkit.psh import Presheaf, PresheafMap, constant, iter_maps, representable


@pytest.mark.parametrize(
    "fixture,sizes",
    [("point", [2]), ("arrow", [2, 3]), ("z2", [2]), ("chain3", [2, 3, 4])],
)
def test_omega_sizes(request, fixture: str, sizes: list[int]):
    base = request.getfixturevalue(fixture)
    classifier = omega(base)
    assert classifier.omega.sizes() == sizes
    assert classifier.omega.validate().ok
    assert classifier.truth.validate().ok


def test_omega_on_discrete_is_pointwise_boolean():
    assert omega(discrete(3)).omega.sizes() == [2, 2, 2]


def test_sieves(arrow: FinCategory):
    on_b = sieves_on(arrow, "b")
    assert [str(s) for s in on_b] == ["{}", "{u}", "{id_b, u}"]
    principal = Sieve.principal(arrow, "u")
    assert str(principal) == "{u}"
    assert principal.pullback("u").is_maximal
    assert not principal.is_maximal
    assert all(s.is_closed() for s in on_b)


def test_subobjects_of_representable(arrow: FinCategory):
    lattice = subobjects(representable(arrow, "b"))
    assert len(lattice) == 3
    assert lattice[0] == lattice.bottom
    assert lattice[-1] == lattice.top


def test_subobject_lattice(arrow_presheaf: Presheaf):
    lattice = subobjects(arrow_presheaf)
    assert len(lattice) == 6
    assert all(lattice.bottom <= s <= lattice.top for s in lattice)
    for s in lattice:
        for t in lattice:
            assert lattice.meet(s, t) <= s
            assert s <= lattice.join(s, t)


def test_pseudo_complement(arrow_presheaf: Presheaf):
    """`not {y}` is everything that never restricts into `{y}`"""
    lattice = subobjects(arrow_presheaf)
    s = Subobject.from_parts(arrow_presheaf, {"a": [1]})
    negation = pseudo_complement(s)
    assert negation.as_dict() == {"a": frozenset({0}), "b": frozenset({0})}
    assert lattice.implies(s, lattice.bottom) == negation
    assert lattice.meet(s, negation) == lattice.bottom


def test_characteristic_round_trip(arrow_presheaf: Presheaf):
    """Pulling `true` back along every `chi` recovers a distinct subobject"""
    classifier = omega(arrow_presheaf.base)
    pulled = {pull_back_truth(chi) for chi in iter_maps(arrow_presheaf, classifier.omega)}
    assert pulled == set(subobjects(arrow_presheaf))
    for s in subobjects(arrow_presheaf):
        assert pull_back_truth(characteristic(s.inclusion())) == s


def test_characteristic_needs_a_mono(arrow_presheaf: Presheaf):
    target = constant(arrow_presheaf.base, 1)
    collapse = PresheafMap(
        source=arrow_presheaf, target=target, components={"a": (0, 0), "b": (0,)}
    )
    with pytest.raises(NotMonoError) as error:
        characteristic(collapse)
    assert error.value.obj == "a"
    assert error.value.pair == (0, 1)


def test_verify_classifier(fixture_category: FinCategory):
    cert = verify_classifier(fixture_category)
    assert cert.ok, cert.first_failure
    assert {r.name for r in cert.passed()} >= {"truth-is-mono", "terminal", "sub-hom-bijection"}


def test_verify_classifier_on_custom_corpus(arrow: FinCategory, arrow_presheaf: Presheaf):
    cert = verify_classifier(arrow, [arrow_presheaf])
    assert cert.ok
    assert "pullback-square" in {r.name for r in cert.passed()}
