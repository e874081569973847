import pytest

from toposkit.classifier import Sieve
from toposkit.fincat import FinCategory
from toposkit.psh import (
    compose_maps,
    constant,
    enumerate_presheaves,
    equalizer,
    identity_map,
    is_isomorphic,
    iter_maps,
    product,
    terminal,
)
from toposkit.sites import (
    GluingFailure,
    GrothendieckTopology,
    closed_sieve_classifier,
    enumerate_lt_operators,
    enumerate_topologies,
    is_sheaf,
    is_sheaf_by_dense_monos,
    j_to_topology,
    largest_topology,
    sheafify,
    topology_to_j,
    trivial_topology,
)
from toposkit.spaces import FinSpace, canonical_topology


@pytest.fixture
def canonical(sierpinski_space: FinSpace) -> GrothendieckTopology:
    return canonical_topology(sierpinski_space).topology


def test_topologies_on_the_point(point: FinCategory):
    topologies = enumerate_topologies(point)
    assert [t.name for t in topologies] == ["J0", "J1"]
    assert set(topologies) == {trivial_topology(point), largest_topology(point)}
    assert len(enumerate_lt_operators(point)) == 2


@pytest.mark.parametrize("fixture", ["point", "arrow", "z2", "chain3"])
def test_topologies_match_lt_operators(request, fixture: str):
    """Topologies and Lawvere-Tierney operators correspond one to one"""
    base = request.getfixturevalue(fixture)
    topologies = enumerate_topologies(base)
    operators = enumerate_lt_operators(base)
    assert len(topologies) == len(operators)
    assert all(t.validate().ok for t in topologies)
    for topology in topologies:
        assert j_to_topology(topology_to_j(topology)) == topology
    for operator in operators:
        assert topology_to_j(j_to_topology(operator)) == operator
    assert {topology_to_j(t) for t in topologies} == set(operators)


def test_unstable_covers_are_rejected(arrow: FinCategory):
    """Covering `{}` on `b` without covering `{}` on `a` breaks stability"""
    topology = GrothendieckTopology.from_covers(arrow, {"b": [Sieve.empty(arrow, "b")]})
    assert "stability" in {v.law for v in topology.validate().violations}


def test_constant_presheaf_is_not_a_canonical_sheaf(sierpinski_space, canonical):
    two = constant(canonical.base, 2)
    report = is_sheaf(two, canonical)
    assert not report.is_sheaf
    assert report.object == "{}"
    assert report.failure == GluingFailure.NOT_SEPARATED
    assert report.witness == (0, 1)
    assert not is_sheaf_by_dense_monos(two, canonical)


def test_sheafification(canonical):
    two = constant(canonical.base, 2)
    result = sheafify(two, canonical)
    assert result.presheaf.sizes() == [1, 2, 2]
    assert result.presheaf.validate().ok
    assert result.unit.validate().ok
    assert is_sheaf(result.presheaf, canonical).is_sheaf


def test_sheafification_lifts_uniquely(canonical):
    """The unit lifts to the identity of the associated sheaf"""
    result = sheafify(constant(canonical.base, 2), canonical)
    lifted = result.lift(result.unit)
    assert lifted.key() == identity_map(result.presheaf).key()


def test_sheafifying_a_sheaf_changes_nothing(canonical):
    one = terminal(canonical.base)
    assert sheafify(one, canonical).presheaf.sizes() == one.sizes()


def test_trivial_and_largest_topologies(arrow: FinCategory):
    for presheaf in enumerate_presheaves(arrow, 2):
        assert is_sheaf(presheaf, trivial_topology(arrow)).is_sheaf
        assert is_sheaf(presheaf, largest_topology(arrow)).is_sheaf == (presheaf.sizes() == [1, 1])


@pytest.mark.parametrize("fixture", ["arrow", "z2"])
def test_sheaf_criteria_agree(request, fixture: str):
    """Matching families and dense monos give the same verdict"""
    base = request.getfixturevalue(fixture)
    for topology in enumerate_topologies(base):
        for presheaf in enumerate_presheaves(base, 2):
            by_dense_monos = is_sheaf_by_dense_monos(presheaf, topology)
            assert is_sheaf(presheaf, topology).is_sheaf == by_dense_monos


def test_closed_sieves(arrow: FinCategory):
    carrier, inclusion = closed_sieve_classifier(largest_topology(arrow))
    assert carrier.sizes() == [1, 1]
    carrier, _ = closed_sieve_classifier(trivial_topology(arrow))
    assert carrier.sizes() == [2, 3]


@pytest.mark.parametrize("fixture", ["arrow", "z2", "chain3"])
def test_sheafification_is_idempotent(request, fixture: str):
    base = request.getfixturevalue(fixture)
    one = terminal(base)
    for topology in enumerate_topologies(base):
        assert is_isomorphic(sheafify(one, topology).presheaf, one)
        for presheaf in enumerate_presheaves(base, 2):
            sheaf = sheafify(presheaf, topology).presheaf
            assert is_sheaf(sheaf, topology).is_sheaf
            assert is_isomorphic(sheafify(sheaf, topology).presheaf, sheaf)


@pytest.mark.parametrize("fixture", ["arrow", "z2"])
def test_sheafification_preserves_products(request, fixture: str):
    base = request.getfixturevalue(fixture)
    presheaves = list(enumerate_presheaves(base, 2))
    for topology in enumerate_topologies(base):
        sheaves = [sheafify(p, topology).presheaf for p in presheaves]
        for i, p in enumerate(presheaves):
            for k in range(i, len(presheaves)):
                together = sheafify(product(p, presheaves[k]).apex, topology).presheaf
                assert is_isomorphic(together, product(sheaves[i], sheaves[k]).apex)


@pytest.mark.parametrize("fixture", ["arrow", "z2"])
def test_sheafification_preserves_equalizers(request, fixture: str):
    """a(Eq(f, g)) is the equalizer of the induced maps between associated sheaves"""
    base = request.getfixturevalue(fixture)
    for topology in enumerate_topologies(base):
        for presheaf in enumerate_presheaves(base, 2):
            result = sheafify(presheaf, topology)
            endos = list(iter_maps(presheaf, presheaf))
            induced = [result.lift(compose_maps(result.unit, f)) for f in endos]
            for i, f in enumerate(endos):
                for k in range(i + 1, len(endos)):
                    sheaf = sheafify(equalizer(f, endos[k]).apex, topology).presheaf
                    assert is_isomorphic(sheaf, equalizer(induced[i], induced[k]).apex)
