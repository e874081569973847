import pytest

from toposkit.errors import ValidationError
from toposkit.fincat import FinCategory
from toposkit.internal import (
    ExpressionSyntaxError,
    FieldAxiom,
    FieldVariant,
    IdentityMethod,
    InternalGroup,
    InternalRing,
    Mul,
    Var,
    check_field,
    check_field_variant,
    check_group,
    check_identity,
    check_ring,
    cyclic,
    parse_expression,
    parse_statement,
    symmetric,
    units_subobject,
)
from toposkit.psh import constant

PRIMES = {2, 3, 5, 7, 11}


@pytest.fixture
def s3() -> InternalGroup:
    return symmetric(3)


@pytest.fixture
def z3_over_arrow(arrow: FinCategory) -> InternalGroup:
    return cyclic(3, arrow)


def test_parse_expression():
    assert parse_expression("(* x y z)") == Mul(Mul(Var("x"), Var("y")), Var("z"))
    assert str(parse_expression("(inv (* x e))")) == "(inv (* x e))"


@pytest.mark.parametrize("text", ["(* x)", "(inv x y)", "(* x y", "x)", ""])
def test_malformed_expressions(text: str):
    with pytest.raises(ExpressionSyntaxError):
        parse_expression(text)


def test_parse_guarded_statement():
    statement = parse_statement("(* x x) = e => x = e")
    assert statement.variables() == ["x"]
    assert len(statement.premises) == 1
    assert str(statement) == "(* x x) = e => x = e"


def test_standard_groups_are_groups(arrow: FinCategory):
    assert check_group(symmetric(3)).ok
    assert check_group(cyclic(3, arrow)).ok


def test_broken_group(point: FinCategory):
    """A constant zero product has no unit for the second element"""
    broken = InternalGroup.pointwise(
        "broken",
        constant(point, 2),
        multiply=lambda a, x, y: 0,
        inverse=lambda a, x: x,
        one=lambda a: 0,
    )
    report = check_group(broken)
    assert {v.law for v in report.violations} == {"unit"}


@pytest.mark.parametrize("method", list(IdentityMethod))
def test_inverse_of_a_product(method: IdentityMethod):
    statement = parse_statement("(* (inv y) (inv x)) = (inv (* x y))")
    verdict = check_identity(statement, symmetric(3), method)
    assert verdict.holds
    assert verdict.assignments == 36


@pytest.mark.parametrize("method", list(IdentityMethod))
def test_commutativity_fails_on_s3(method: IdentityMethod):
    verdict = check_identity(parse_statement("(* x y) = (* y x)"), symmetric(3), method)
    assert not verdict.holds
    assert verdict.witness is not None
    assert set(verdict.witness[1]) == {"x", "y"}


def test_guarded_identity(point: FinCategory):
    statement = parse_statement("(* x x) = e => x = e")
    assert check_identity(statement, cyclic(3)).holds
    verdict = check_identity(statement, cyclic(2), IdentityMethod.POINTWISE)
    assert not verdict.holds
    assert verdict.witness == ("*", {"x": 1})


@pytest.mark.parametrize("method", list(IdentityMethod))
@pytest.mark.parametrize("group, assignments", [("s3", 216), ("z3_over_arrow", 54)])
def test_right_cancellation(request, group: str, assignments: int, method: IdentityMethod):
    """x a = y a forces x = y, pointwise and for generalized elements"""
    statement = parse_statement("(* x a) = (* y a) => x = y")
    verdict = check_identity(statement, request.getfixturevalue(group), method)
    assert verdict.holds
    assert verdict.assignments == assignments


def test_generalized_elements_over_the_arrow(arrow: FinCategory):
    """Each representable stage contributes its own assignments"""
    verdict = check_identity(parse_statement("(* x y) = (* y x)"), cyclic(3, arrow))
    assert verdict.holds
    assert verdict.assignments == 18


def test_integers_are_rings():
    for n in range(1, 8):
        assert check_ring(InternalRing.integers(n)).ok


@pytest.mark.parametrize("n", range(2, 13))
def test_integers_field_iff_prime(n: int):
    ring = InternalRing.integers(n)
    assert check_field(ring).is_field == (n in PRIMES)
    assert check_field_variant(ring).is_field == (n in PRIMES)


def test_z4_is_not_a_field():
    ring = InternalRing.integers(4)
    assert units_subobject(ring).subobject.part("*") == frozenset({1, 3})
    verdict = check_field(ring)
    assert verdict.variant == FieldVariant.COVER
    assert verdict.failed == FieldAxiom.ZERO_OR_UNIT
    assert verdict.witness == ("*", 2)
    variant = check_field_variant(ring)
    assert variant.failed == FieldAxiom.NON_UNIT_IS_ZERO
    assert variant.witness == ("*", 2)


def test_zero_ring_is_not_a_field():
    """In the zero ring every element is a unit, but `0 = 1`"""
    ring = InternalRing.integers(1)
    assert units_subobject(ring).subobject.part("*") == frozenset({0})
    for verdict in (check_field(ring), check_field_variant(ring)):
        assert not verdict.is_field
        assert verdict.failed == FieldAxiom.NONTRIVIAL


def test_constant_field_over_a_base(arrow: FinCategory):
    ring = InternalRing.integers(5, arrow)
    assert check_field(ring).is_field
    assert check_field_variant(ring).is_field


def test_field_check_needs_a_ring(point: FinCategory):
    broken = InternalRing.pointwise(
        "broken",
        constant(point, 2),
        add=lambda a, x, y: 0,
        mul=lambda a, x, y: x,
        neg=lambda a, x: x,
        zero=lambda a: 0,
        one=lambda a: 1,
    )
    assert not check_ring(broken).ok
    with pytest.raises(ValidationError):
        check_field(broken)
