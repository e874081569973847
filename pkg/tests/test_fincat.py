import pytest

from toposkit.fincat import (
    ElementsOrientation,
    FinCategory,
    FinFunctor,
    MissingLimitError,
    NatTransform,
    category_of_elements,
    chain,
    compose_functors,
    cyclic_group,
    discrete,
    finite_limit_structure,
    has_finite_limits,
    identity_functor,
    opposite,
    validate_category,
)
from toposkit.psh import Presheaf


def laws(report) -> set[str]:
    return {v.law for v in report.violations}


def test_fixture_categories_validate(fixture_category: FinCategory):
    """Every builder produces a lawful category"""
    report = validate_category(fixture_category)
    assert report.ok, str(report)


def test_missing_composite_is_a_totality_violation():
    """An endomorphism without `e . e` breaks totality and skips the law checks"""
    category = FinCategory.build("broken", ["a"], [("e", "a", "a")])
    assert laws(validate_category(category)) == {"totality"}


def test_non_associative_table():
    """`(f . e) . f != f . (e . f)` is reported as an associativity violation"""
    category = FinCategory.build(
        "skew",
        ["a"],
        [("e", "a", "a"), ("f", "a", "a")],
        {("e", "e"): "e", ("e", "f"): "e", ("f", "e"): "f", ("f", "f"): "e"},
    )
    report = validate_category(category)
    assert "associativity" in laws(report)
    assert not report.ok


def test_chain_morphisms():
    """`chain(3)` is the poset 0 <= 1 <= 2 with its three strict relations"""
    category = chain(3)
    assert len(category.morphisms) == 6
    assert category.hom("0", "2") == ("0<=2",)
    assert category.compose("1<=2", "0<=1") == "0<=2"
    assert category.hom("2", "0") == ()


def test_cyclic_group(z3: FinCategory):
    assert z3.objects == ("*",)
    assert len(z3.morphisms) == 3
    assert z3.compose("g1", "g2") == "id_*"
    assert z3.compose("g1", "g1") == "g2"


def test_opposite_is_an_involution(fixture_category: FinCategory):
    twice = opposite(opposite(fixture_category))
    assert twice == fixture_category
    assert twice.name == fixture_category.name


def test_opposite_flips_arrows(arrow: FinCategory):
    flipped = opposite(arrow)
    assert flipped.name == "arrow^op"
    assert flipped.hom("b", "a") == ("u",)
    assert flipped.hom("a", "b") == ()


def test_structural_equality_ignores_name(arrow: FinCategory):
    renamed = FinCategory.build("other", ["a", "b"], [("u", "a", "b")])
    assert renamed == arrow
    assert renamed != FinCategory.build("other", ["b", "a"], [("u", "a", "b")])


def test_functor_validation(arrow: FinCategory):
    assert identity_functor(arrow).validate().ok
    collapse = FinFunctor(
        name="collapse",
        source=arrow,
        target=arrow,
        object_map={"a": "a", "b": "a"},
        morphism_map={"id_a": "id_a", "id_b": "id_a", "u": "u"},
    )
    assert laws(collapse.validate()) == {"typing"}


def test_functor_composition(arrow: FinCategory):
    identity = identity_functor(arrow)
    composite = compose_functors(identity, identity)
    assert composite.object_map == identity.object_map
    assert composite.morphism_map == identity.morphism_map
    assert composite.validate().ok


def test_identity_transformation(arrow: FinCategory):
    identity = identity_functor(arrow)
    alpha = NatTransform(source=identity, target=identity, components={"a": "id_a", "b": "id_b"})
    assert alpha.validate().ok
    wrong = NatTransform(source=identity, target=identity, components={"a": "u", "b": "id_b"})
    assert laws(wrong.validate()) == {"components"}


def test_category_of_elements(arrow_presheaf: Presheaf):
    """Three elements and one non-identity arrow `a:0 -> b:0` lying over `u`"""
    elements = category_of_elements(arrow_presheaf)
    category = elements.category
    assert validate_category(category).ok
    assert category.objects == ("a:0", "a:1", "b:0")
    assert category.hom("a:0", "b:0") == ("u:0",)
    assert category.hom("a:1", "b:0") == ()
    assert elements.projection.validate().ok


def test_covariant_elements_lie_over_the_opposite(arrow_presheaf: Presheaf):
    elements = category_of_elements(arrow_presheaf, ElementsOrientation.COVARIANT)
    assert elements.category.hom("b:0", "a:0") == ("u:0",)
    assert elements.projection.target == opposite(arrow_presheaf.base)
    assert elements.projection.validate().ok


def test_finite_limit_structure(arrow: FinCategory, square: FinCategory):
    structure = finite_limit_structure(arrow)
    assert structure.terminal == "b"
    assert structure.products[("a", "b")][0] == "a"
    assert finite_limit_structure(square).terminal == "top"
    assert finite_limit_structure(square).products[("x", "y")][0] == "bot"


@pytest.mark.parametrize(
    "category,kind",
    [(discrete(2), "terminal object"), (cyclic_group(2), "terminal object")],
)
def test_missing_limits(category: FinCategory, kind: str):
    with pytest.raises(MissingLimitError) as error:
        finite_limit_structure(category)
    assert error.value.kind == kind
    assert not has_finite_limits(category)
