"""
Internal algebra: groups and rings whose carriers are presheaves, equations checked by
generalized elements, and the two readings of "R is a field".
"""

import logging
import re
from collections.abc import Callable, Hashable, Iterator, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from itertools import permutations, product as cartesian

from toposkit.classifier import Subobject, image_subobject, pseudo_complement
from toposkit.config import EnumerationGuard
from toposkit.errors import ToposkitError, ValidationError
from toposkit.fincat import FinCategory, terminal_category
from toposkit.psh import (
    Cone,
    Factorization,
    Presheaf,
    PresheafMap,
    compose_maps,
    copairing,
    coproduct,
    equalizer,
    factor_epi_mono,
    is_epi,
    iter_maps,
    product,
    pullback,
    representable,
    terminal,
    unique_map_to_terminal,
)
from toposkit.reports import ValidationReport

log = logging.getLogger(__name__)


class ExpressionSyntaxError(ToposkitError):
    pass


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Unit:
    def __str__(self):
        return "e"


@dataclass(frozen=True)
class Inv:
    arg: "GroupExpression"

    def __str__(self):
        return f"(inv {self.arg})"


@dataclass(frozen=True)
class Mul:
    left: "GroupExpression"
    right: "GroupExpression"

    def __str__(self):
        return f"(* {self.left} {self.right})"


GroupExpression = Var | Unit | Inv | Mul


def variables(expression: GroupExpression) -> set[str]:
    match expression:
        case Var(name):
            return {name}
        case Unit():
            return set()
        case Inv(arg):
            return variables(arg)
        case Mul(left, right):
            return variables(left) | variables(right)


TOKEN = re.compile(r"\(|\)|[^\s()]+")
UNIT_NAMES = {"e", "1"}


def parse_expression(text: str) -> GroupExpression:
    """
    Prefix terms: a variable, `e` for the unit, `(inv t)` or `(* t1 t2 ...)`,
    products of more than two factors associating to the left.
    """
    tokens = TOKEN.findall(text)
    expression, rest = _parse(tokens, text)
    if rest:
        raise ExpressionSyntaxError(f"trailing tokens in {text!r}: {' '.join(rest)}")
    return expression


def _parse(tokens: list[str], text: str) -> tuple[GroupExpression, list[str]]:
    if not tokens:
        raise ExpressionSyntaxError(f"unexpected end of {text!r}")
    head, rest = tokens[0], tokens[1:]
    if head == ")":
        raise ExpressionSyntaxError(f"unbalanced ')' in {text!r}")
    if head != "(":
        return (Unit() if head in UNIT_NAMES else Var(head)), rest
    if not rest:
        raise ExpressionSyntaxError(f"unexpected end of {text!r}")
    op, rest = rest[0], rest[1:]
    args = []
    while rest and rest[0] != ")":
        arg, rest = _parse(rest, text)
        args.append(arg)
    if not rest:
        raise ExpressionSyntaxError(f"missing ')' in {text!r}")
    rest = rest[1:]
    if op == "inv" and len(args) == 1:
        return Inv(args[0]), rest
    if op == "*" and len(args) >= 2:
        term = args[0]
        for arg in args[1:]:
            term = Mul(term, arg)
        return term, rest
    raise ExpressionSyntaxError(
        f"bad operator application ({op} ...) with {len(args)} argument(s) in {text!r}"
    )


Equation = tuple[GroupExpression, GroupExpression]


@dataclass(frozen=True, kw_only=True)
class Statement:
    """`premises => conclusion`, all equations between terms in the same variables."""

    conclusion: Equation
    premises: tuple[Equation, ...] = ()

    def variables(self) -> list[str]:
        names = set()
        for lhs, rhs in (*self.premises, self.conclusion):
            names |= variables(lhs) | variables(rhs)
        return sorted(names)

    def __str__(self):
        equations = [f"{lhs} = {rhs}" for lhs, rhs in (*self.premises, self.conclusion)]
        if self.premises:
            return f"{' & '.join(equations[:-1])} => {equations[-1]}"
        return equations[-1]


def _parse_equation(text: str) -> Equation:
    sides = text.split("=")
    if len(sides) != 2:
        raise ExpressionSyntaxError(f"expected one '=' in {text!r}")
    return parse_expression(sides[0]), parse_expression(sides[1])


def parse_statement(text: str) -> Statement:
    """`lhs = rhs`, optionally preceded by `p1 = q1 & p2 = q2 =>`."""
    if "=>" in text:
        head, conclusion = text.split("=>", 1)
        premises = tuple(_parse_equation(part) for part in head.split("&"))
        return Statement(premises=premises, conclusion=_parse_equation(conclusion))
    return Statement(conclusion=_parse_equation(text))


def _pointwise_map(
    source: Presheaf, target: Presheaf, value: Callable[[str, int], int], name: str
) -> PresheafMap:
    return PresheafMap(
        source=source,
        target=target,
        components={a: tuple(value(a, x) for x in source.elements(a)) for a in source.base.objects},
        name=name,
    )


def _binary(
    square: Cone, target: Presheaf, op: Callable[[str, int, int], int], name: str
) -> PresheafMap:
    apex = square.apex
    return _pointwise_map(apex, target, lambda a, k: op(a, *apex.label(a, k)), name)


def _constant_carrier(base: FinCategory, name: str, elements: Sequence[Hashable]) -> Presheaf:
    n = len(elements)
    return Presheaf(
        base=base,
        sets={a: n for a in base.objects},
        actions={m.id: tuple(range(n)) for m in base.morphisms},
        labels={a: tuple(elements) for a in base.objects},
        name=name,
    )


@dataclass(frozen=True, eq=False, kw_only=True)
class InternalGroup:
    """A group object: `mult: G x G -> G`, `inv: G -> G`, `unit: 1 -> G`."""

    name: str
    carrier: Presheaf
    square: Cone
    mult: PresheafMap
    inv: PresheafMap
    unit: PresheafMap

    @classmethod
    def pointwise(
        cls,
        name: str,
        carrier: Presheaf,
        multiply: Callable[[str, int, int], int],
        inverse: Callable[[str, int], int],
        one: Callable[[str], int],
    ) -> "InternalGroup":
        square = product(carrier, carrier)
        return cls(
            name=name,
            carrier=carrier,
            square=square,
            mult=_binary(square, carrier, multiply, "m"),
            inv=_pointwise_map(carrier, carrier, inverse, "i"),
            unit=_pointwise_map(terminal(carrier.base), carrier, lambda a, _: one(a), "e"),
        )

    def multiply(self, a: str, x: int, y: int) -> int:
        return self.mult(a, self.square.apex.index_of(a, (x, y)))

    def inverse(self, a: str, x: int) -> int:
        return self.inv(a, x)

    def one(self, a: str) -> int:
        return self.unit(a, 0)


def constant_group(
    base: FinCategory,
    name: str,
    elements: Sequence[Hashable],
    multiply: Callable[[Hashable, Hashable], Hashable],
) -> InternalGroup:
    """An ordinary finite group, as a constant presheaf with componentwise operations."""
    elements = list(elements)
    index = {g: i for i, g in enumerate(elements)}
    table = [[index[multiply(g, h)] for h in elements] for g in elements]
    size = len(elements)
    one = next(e for e in range(size) if all(table[e][x] == x for x in range(size)))
    inverse = [next(y for y in range(size) if table[x][y] == one) for x in range(size)]
    return InternalGroup.pointwise(
        name,
        _constant_carrier(base, name, elements),
        multiply=lambda a, x, y: table[x][y],
        inverse=lambda a, x: inverse[x],
        one=lambda a: one,
    )


def cyclic(n: int, base: FinCategory | None = None) -> InternalGroup:
    base = base or terminal_category()
    return constant_group(base, f"Z/{n}", list(range(n)), lambda x, y: (x + y) % n)


def symmetric(k: int, base: FinCategory | None = None) -> InternalGroup:
    """S_k on `range(k)`; the product `p q` applies q first."""
    base = base or terminal_category()
    return constant_group(
        base, f"S{k}", sorted(permutations(range(k))), lambda p, q: tuple(p[q[i]] for i in range(k))
    )


def check_group(group: InternalGroup) -> ValidationReport:
    """Group axioms diagram by diagram, evaluated pointwise; witnesses are `(object, elements)`."""
    report = ValidationReport(f"group {group.name}")
    for label, m in (("mult", group.mult), ("inv", group.inv), ("unit", group.unit)):
        sub = m.validate()
        for v in sub.violations:
            report.add("typing", f"{label}: {v.message}", *v.witness)
    if not report.ok:
        return report
    G = group.carrier
    for a in G.base.objects:
        e = group.one(a)
        elements = list(G.elements(a))
        for x in elements:
            if group.multiply(a, x, e) != x or group.multiply(a, e, x) != x:
                report.add("unit", f"e is not a unit for {G.label(a, x)} at {a}", a, x)
            if (
                group.multiply(a, x, group.inverse(a, x)) != e
                or group.multiply(a, group.inverse(a, x), x) != e
            ):
                report.add("inverse", f"inv({G.label(a, x)}) is not an inverse at {a}", a, x)
        for x, y, z in cartesian(elements, repeat=3):
            lhs = group.multiply(a, group.multiply(a, x, y), z)
            rhs = group.multiply(a, x, group.multiply(a, y, z))
            if lhs != rhs:
                report.add(
                    "associativity",
                    f"m(m(x, y), z) != m(x, m(y, z)) at {a}"
                    f" for {G.label(a, x)}, {G.label(a, y)}, {G.label(a, z)}",
                    a,
                    x,
                    y,
                    z,
                )
                break
    return report


class IdentityMethod(StrEnum):
    POINTWISE = "pointwise"
    GENERALIZED = "generalized"


@dataclass(kw_only=True)
class IdentityVerdict:
    statement: Statement
    method: IdentityMethod
    holds: bool
    assignments: int
    # (stage, {variable: value}) of the first failing assignment
    witness: tuple[str, dict] | None = None

    def __str__(self):
        verdict = "holds" if self.holds else f"fails at {self.witness[0]} with {self.witness[1]}"
        return f"{self.statement} [{self.method}]: {verdict} ({self.assignments} assignments)"


def evaluate_pointwise(
    expression: GroupExpression, group: InternalGroup, a: str, env: dict[str, int]
) -> int:
    match expression:
        case Var(name):
            return env[name]
        case Unit():
            return group.one(a)
        case Inv(arg):
            return group.inverse(a, evaluate_pointwise(arg, group, a, env))
        case Mul(left, right):
            return group.multiply(
                a, evaluate_pointwise(left, group, a, env), evaluate_pointwise(right, group, a, env)
            )


def evaluate_generalized(
    expression: GroupExpression, group: InternalGroup, shape: Presheaf, env: dict[str, PresheafMap]
) -> PresheafMap:
    """Evaluate on generalized elements `s: X -> G` of one shape X."""
    match expression:
        case Var(name):
            return env[name]
        case Unit():
            return compose_maps(group.unit, unique_map_to_terminal(shape))
        case Inv(arg):
            return compose_maps(group.inv, evaluate_generalized(arg, group, shape, env))
        case Mul(left, right):
            paired = group.square.mediate(
                {
                    "0": evaluate_generalized(left, group, shape, env),
                    "1": evaluate_generalized(right, group, shape, env),
                }
            )
            return compose_maps(group.mult, paired)


def _assignments(names: list[str], values: Sequence, guard: EnumerationGuard) -> Iterator[dict]:
    for choice in cartesian(values, repeat=len(names)):
        guard.tick()
        yield dict(zip(names, choice))


def check_identity(
    statement: Statement,
    group: InternalGroup,
    method: IdentityMethod = IdentityMethod.GENERALIZED,
    guard: EnumerationGuard | None = None,
) -> IdentityVerdict:
    """
    Check a (guarded) equation for all values of its variables. Generalized elements
    range over maps out of each representable, pointwise values over each G(a).
    """
    guard = guard or EnumerationGuard(what="assignments")
    names = statement.variables()
    base = group.carrier.base
    count = 0
    for a in base.objects:
        if method == IdentityMethod.POINTWISE:
            stage = a
            values = list(group.carrier.elements(a))

            def value(t, env, a=a):
                return evaluate_pointwise(t, group, a, env)

            def show(env, a=a):
                return {k: group.carrier.label(a, x) for k, x in env.items()}

        else:
            shape = representable(base, a)
            stage = f"y({a})"
            values = list(iter_maps(shape, group.carrier, guard))

            def value(t, env, shape=shape):
                return evaluate_generalized(t, group, shape, env).key()

            def show(env):
                return {k: s.key() for k, s in env.items()}

        for env in _assignments(names, values, guard):
            count += 1
            if not all(value(lhs, env) == value(rhs, env) for lhs, rhs in statement.premises):
                continue
            lhs, rhs = statement.conclusion
            if value(lhs, env) != value(rhs, env):
                verdict = IdentityVerdict(
                    statement=statement,
                    method=method,
                    holds=False,
                    assignments=count,
                    witness=(stage, show(env)),
                )
                log.debug(f"{verdict}")
                return verdict
    return IdentityVerdict(statement=statement, method=method, holds=True, assignments=count)


@dataclass(frozen=True, eq=False, kw_only=True)
class InternalRing:
    """A commutative ring object with `add`, `mul: R x R -> R`, `neg` and `zero`, `one: 1 -> R`."""

    name: str
    carrier: Presheaf
    square: Cone
    add: PresheafMap
    mul: PresheafMap
    neg: PresheafMap
    zero: PresheafMap
    one: PresheafMap

    def plus(self, a: str, x: int, y: int) -> int:
        return self.add(a, self.square.apex.index_of(a, (x, y)))

    def times(self, a: str, x: int, y: int) -> int:
        return self.mul(a, self.square.apex.index_of(a, (x, y)))

    @classmethod
    def constant(
        cls,
        base: FinCategory,
        name: str,
        elements: Sequence[Hashable],
        add: Callable[[Hashable, Hashable], Hashable],
        mul: Callable[[Hashable, Hashable], Hashable],
    ) -> "InternalRing":
        elements = list(elements)
        index = {g: i for i, g in enumerate(elements)}
        n = len(elements)
        plus = [[index[add(x, y)] for y in elements] for x in elements]
        times = [[index[mul(x, y)] for y in elements] for x in elements]
        zero = next(z for z in range(n) if all(plus[z][x] == x for x in range(n)))
        one = next(u for u in range(n) if all(times[u][x] == x for x in range(n)))
        neg = [next(y for y in range(n) if plus[x][y] == zero) for x in range(n)]
        return cls.pointwise(
            name,
            _constant_carrier(base, name, elements),
            add=lambda a, x, y: plus[x][y],
            mul=lambda a, x, y: times[x][y],
            neg=lambda a, x: neg[x],
            zero=lambda a: zero,
            one=lambda a: one,
        )

    @classmethod
    def pointwise(
        cls,
        name: str,
        carrier: Presheaf,
        add: Callable[[str, int, int], int],
        mul: Callable[[str, int, int], int],
        neg: Callable[[str, int], int],
        zero: Callable[[str], int],
        one: Callable[[str], int],
    ) -> "InternalRing":
        square = product(carrier, carrier)
        one_object = terminal(carrier.base)
        return cls(
            name=name,
            carrier=carrier,
            square=square,
            add=_binary(square, carrier, add, "+"),
            mul=_binary(square, carrier, mul, "*"),
            neg=_pointwise_map(carrier, carrier, neg, "-"),
            zero=_pointwise_map(one_object, carrier, lambda a, _: zero(a), "0"),
            one=_pointwise_map(one_object, carrier, lambda a, _: one(a), "1"),
        )

    @classmethod
    def integers(cls, n: int, base: FinCategory | None = None) -> "InternalRing":
        """Z/n as a constant ring; n = 1 is the zero ring."""
        return cls.constant(
            base or terminal_category(),
            f"Z/{n}",
            list(range(n)),
            lambda x, y: (x + y) % n,
            lambda x, y: (x * y) % n,
        )


def check_ring(ring: InternalRing) -> ValidationReport:
    report = ValidationReport(f"ring {ring.name}")
    for label in ("add", "mul", "neg", "zero", "one"):
        for v in getattr(ring, label).validate().violations:
            report.add("typing", f"{label}: {v.message}", *v.witness)
    if not report.ok:
        return report
    R = ring.carrier
    p, t = ring.plus, ring.times
    laws: list[tuple[str, int, Callable[..., bool]]] = [
        ("add-associativity", 3, lambda a, x, y, z: p(a, p(a, x, y), z) == p(a, x, p(a, y, z))),
        ("add-commutativity", 2, lambda a, x, y: p(a, x, y) == p(a, y, x)),
        ("zero", 1, lambda a, x: p(a, x, ring.zero(a, 0)) == x),
        ("negation", 1, lambda a, x: p(a, x, ring.neg(a, x)) == ring.zero(a, 0)),
        ("mul-associativity", 3, lambda a, x, y, z: t(a, t(a, x, y), z) == t(a, x, t(a, y, z))),
        ("mul-commutativity", 2, lambda a, x, y: t(a, x, y) == t(a, y, x)),
        ("one", 1, lambda a, x: t(a, x, ring.one(a, 0)) == x),
        (
            "distributivity",
            3,
            lambda a, x, y, z: t(a, x, p(a, y, z)) == p(a, t(a, x, y), t(a, x, z)),
        ),
    ]
    for a in R.base.objects:
        for law, arity, holds in laws:
            witness = next(
                (xs for xs in cartesian(R.elements(a), repeat=arity) if not holds(a, *xs)), None
            )
            if witness is not None:
                report.add(
                    law, f"{law} fails at {a} for {[R.label(a, x) for x in witness]}", a, *witness
                )
    return report


@dataclass(frozen=True, eq=False, kw_only=True)
class Units:
    """`P = {(x, y) | xy = 1}` as a pullback of `mul` along `one`, and its image `U` in R."""

    pairs: Cone
    projection: PresheafMap
    factorization: Factorization

    @property
    def mono(self) -> PresheafMap:
        return self.factorization.mono

    @property
    def subobject(self) -> Subobject:
        return image_subobject(self.mono)


def units_subobject(ring: InternalRing) -> Units:
    pairs = pullback(ring.mul, ring.one)
    projection = compose_maps(ring.square.legs["0"], pairs.legs["0"])
    return Units(pairs=pairs, projection=projection, factorization=factor_epi_mono(projection))


class FieldAxiom(StrEnum):
    NONTRIVIAL = "zero-is-not-one"
    ZERO_OR_UNIT = "zero-or-unit"
    NON_UNIT_IS_ZERO = "non-unit-is-zero"


class FieldVariant(StrEnum):
    # 1 + U -> R is epi
    COVER = "cover"
    # not U <= {0}
    NEGATION = "negation"


@dataclass(kw_only=True)
class FieldVerdict:
    ring: str
    variant: FieldVariant
    is_field: bool
    failed: FieldAxiom | None = None
    witness: tuple = field(default_factory=tuple)

    def __str__(self):
        if self.is_field:
            return f"{self.ring} is a field ({self.variant})"
        return f"{self.ring} is not a field ({self.variant}): {self.failed} fails at {self.witness}"


def _require_ring(ring: InternalRing) -> None:
    report = check_ring(ring)
    if not report.ok:
        raise ValidationError(report)


def _nontrivial(ring: InternalRing) -> tuple | None:
    """The equalizer of `zero, one: 1 -> R` must be initial.

    Returns the first object where it is not.
    """
    apex = equalizer(ring.zero, ring.one).apex
    return next(((a,) for a in apex.base.objects if apex.size(a)), None)


def check_field(ring: InternalRing) -> FieldVerdict:
    """`0 != 1` and `1 + U -> R` (zero, then the units) is epi."""
    _require_ring(ring)
    verdict = FieldVerdict(ring=ring.name, variant=FieldVariant.COVER, is_field=False)
    if (witness := _nontrivial(ring)) is not None:
        verdict.failed, verdict.witness = FieldAxiom.NONTRIVIAL, witness
        return verdict
    units = units_subobject(ring)
    cover = copairing(
        coproduct(ring.zero.source, units.factorization.image), [ring.zero, units.mono]
    )
    if not is_epi(cover):
        R = ring.carrier
        a, x = next(
            (a, x) for a in R.base.objects for x in R.elements(a) if x not in cover.components[a]
        )
        verdict.failed, verdict.witness = FieldAxiom.ZERO_OR_UNIT, (a, R.label(a, x))
        return verdict
    verdict.is_field = True
    log.debug(f"{verdict}")
    return verdict


def check_field_variant(ring: InternalRing) -> FieldVerdict:
    """`0 != 1` and every element that is not a unit is zero, read as `not U <= {0}`."""
    _require_ring(ring)
    verdict = FieldVerdict(ring=ring.name, variant=FieldVariant.NEGATION, is_field=False)
    if (witness := _nontrivial(ring)) is not None:
        verdict.failed, verdict.witness = FieldAxiom.NONTRIVIAL, witness
        return verdict
    non_units = pseudo_complement(units_subobject(ring).subobject)
    zero = image_subobject(ring.zero)
    if not non_units <= zero:
        R = ring.carrier
        a, x = next(
            (a, x)
            for a in R.base.objects
            for x in sorted(non_units.part(a))
            if x not in zero.part(a)
        )
        verdict.failed, verdict.witness = FieldAxiom.NON_UNIT_IS_ZERO, (a, R.label(a, x))
        return verdict
    verdict.is_field = True
    return verdict
