import pytest

from toposkit.fincat import FinCategory, FinFunctor, identity_functor
from toposkit.geom import (
    NotLexError,
    adjoint_triple,
    check_flat,
    classify_lex,
    identity_morphism,
    is_cofiltered,
    is_embedding,
    lex_failure,
    lex_functors,
    points,
    round_trip_isomorphisms,
    sheaf_inclusion,
    space_morphism,
    verify_geometric,
    yoneda_diagram,
)
from toposkit.psh import Presheaf, constant
from toposkit.spaces import FinSpace, canonical_topology, continuous_map, point_space


@pytest.fixture
def pick(sierpinski_space: FinSpace):
    """The open point `1` of Sierpinski space"""
    return continuous_map(point_space(), sierpinski_space, {"0": "1"})


@pytest.fixture
def collapse_all(sierpinski_space: FinSpace):
    return continuous_map(sierpinski_space, point_space(), {"0": "0", "1": "0"})


def test_identity_morphism(arrow: FinCategory):
    cert = verify_geometric(identity_morphism(arrow))
    assert cert.ok, cert.first_failure
    assert is_embedding(identity_morphism(arrow)).is_embedding


def test_identity_triple(arrow: FinCategory):
    triple = adjoint_triple(identity_functor(arrow))
    cert = triple.verify()
    assert cert.ok, cert.first_failure


def test_evaluation_triple(point: FinCategory, arrow: FinCategory):
    """Restriction along `* |-> b` is evaluation at `b`, with adjoints on both sides"""
    pick_b = FinFunctor(
        name="b", source=point, target=arrow, object_map={"*": "b"}, morphism_map={"id_*": "id_b"}
    )
    triple = adjoint_triple(pick_b)
    cert = triple.verify()
    assert cert.ok, cert.first_failure
    assert triple.middle(constant(arrow, 2)).sizes() == [2]
    assert verify_geometric(triple.morphism([constant(point, 2)], [constant(arrow, 2)])).ok


def test_sheaf_inclusion_is_an_embedding(sierpinski_space: FinSpace):
    morphism = sheaf_inclusion(canonical_topology(sierpinski_space).topology)
    cert = verify_geometric(morphism)
    assert cert.ok, cert.first_failure
    assert is_embedding(morphism).is_embedding


def test_open_point_is_an_embedding(pick):
    morphism = space_morphism(pick)
    assert verify_geometric(morphism).ok
    assert is_embedding(morphism).is_embedding


def test_collapse_is_not_an_embedding(collapse_all):
    morphism = space_morphism(collapse_all)
    assert verify_geometric(morphism).ok
    report = is_embedding(morphism)
    assert not report.is_embedding
    assert report.witness is not None


def test_cofiltered(point: FinCategory, two_points: FinCategory):
    assert is_cofiltered(point)[0]
    flat, witnesses = is_cofiltered(two_points)
    assert not flat
    assert witnesses["failure"][0] == "span"


def test_points_of_a_group(z2: FinCategory):
    """The only point of the classifying topos of Z/2 is the regular action"""
    found = points(z2, 4)
    assert len(found) == 1
    assert found[0].functor.sizes() == [2]
    assert not check_flat(constant(z2, 2)).flat


def test_points_agree_with_lex_functors(arrow: FinCategory, chain3: FinCategory):
    for base in (arrow, chain3):
        assert len(points(base, 3)) == len(lex_functors(base, 3))
    assert len(points(arrow, 3)) == 2


def test_lex_failure(arrow: FinCategory):
    """`b` is terminal in the arrow, so a flat functor sends it to a singleton"""
    two = constant(arrow, 2)
    assert lex_failure(arrow, two) == ("terminal", "b")


def test_classify_yoneda(arrow: FinCategory):
    result = classify_lex(yoneda_diagram(arrow))
    assert result.certificate.ok, result.certificate.first_failure
    assert all(iso is not None for iso in round_trip_isomorphisms(result).values())


def test_model_without_finite_limits(z2: FinCategory):
    with pytest.raises(NotLexError) as error:
        classify_lex(yoneda_diagram(z2))
    assert error.value.probe == "missing terminal object"


def test_sheafify_as_inverse_image(sierpinski_space: FinSpace):
    topology = canonical_topology(sierpinski_space).topology
    morphism = sheaf_inclusion(topology, [constant(topology.base, 2)])
    assert [p.sizes() for p in morphism.domain_corpus] == [[1, 2, 2]]
    assert isinstance(morphism.codomain_corpus[0], Presheaf)
