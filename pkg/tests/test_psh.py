import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from toposkit.config import EnumerationGuard
from toposkit.errors import ResourceLimitError
from toposkit.fincat import FinCategory, walking_arrow
from toposkit.psh import (
    Diagram,
    Presheaf,
    PresheafMap,
    compose_maps,
    constant,
    coproduct,
    copairing,
    enumerate_presheaves,
    equalizer,
    exponential,
    factor_epi_mono,
    find_isomorphisms,
    identity_map,
    is_epi,
    is_isomorphic,
    is_mono,
    is_mono_by_kernel_pair,
    iter_maps,
    product,
    pullback,
    representable,
    subpresheaf,
    terminal,
    verify_transpose,
)

ARROW = walking_arrow()
SMALL = list(enumerate_presheaves(ARROW, 2))
MAPS = [h for source in SMALL for target in SMALL for h in iter_maps(source, target)]
MONOS = [h for h in MAPS if is_mono(h)]


def collapse(arrow_presheaf: Presheaf) -> PresheafMap:
    target = Presheaf.build(
        arrow_presheaf.base, {"a": ["x"], "b": ["z"]}, {"u": {"z": "x"}}, name="Q"
    )
    return PresheafMap.build(
        arrow_presheaf, target, {"a": {"x": "x", "y": "x"}, "b": {"z": "z"}}, name="collapse"
    )


def test_build_derives_composite_actions(chain3: FinCategory):
    """Only generating actions are given; `0<=2` is derived from the composition table"""
    presheaf = Presheaf.build(
        chain3,
        {"0": ["p", "q"], "1": ["r"], "2": ["s"]},
        {"0<=1": {"r": "q"}, "1<=2": {"s": "r"}},
    )
    assert presheaf.validate().ok
    assert presheaf.act("0<=2", 0) == presheaf.index_of("0", "q")


def test_build_missing_action(arrow: FinCategory):
    with pytest.raises(KeyError):
        Presheaf.build(arrow, {"a": ["x"], "b": ["z"]}, {})


def test_functoriality_violation(z2: FinCategory):
    """`g1 . g1 = id` forces `P(g1)` to be an involution"""
    broken = Presheaf(
        base=z2, sets={"*": 3}, actions={"id_*": (0, 1, 2), "g1": (1, 2, 0)}, name="cycle"
    )
    assert {v.law for v in broken.validate().violations} == {"functoriality"}


def test_representables(arrow: FinCategory):
    assert representable(arrow, "b").sizes() == [1, 1]
    assert representable(arrow, "a").sizes() == [1, 0]
    assert representable(arrow, "b").labels["a"] == ("u",)


def test_maps_between_constants(arrow: FinCategory):
    """Naturality forces equal components, leaving the four self-maps of a two-element set"""
    two = constant(arrow, 2)
    maps = list(iter_maps(two, two))
    assert len(maps) == 4
    assert all(h.validate().ok for h in maps)
    assert len(list(find_isomorphisms(two, two))) == 2


def test_isomorphism_respects_actions(z2: FinCategory):
    regular = Presheaf(base=z2, sets={"*": 2}, actions={"id_*": (0, 1), "g1": (1, 0)})
    assert not is_isomorphic(regular, constant(z2, 2))
    assert is_isomorphic(regular, regular)


def test_enumerate_presheaves(point: FinCategory, arrow: FinCategory):
    assert len(list(enumerate_presheaves(point, 3))) == 4
    assert [p.sizes() for p in enumerate_presheaves(arrow, 1)] == [[0, 0], [1, 0], [1, 1]]
    assert len(SMALL) == 11
    assert all(p.validate().ok for p in SMALL)


def test_enumeration_guard(arrow: FinCategory):
    with pytest.raises(ResourceLimitError):
        list(enumerate_presheaves(arrow, 3, EnumerationGuard(limit=5)))


def test_product_and_coproduct(arrow_presheaf: Presheaf, arrow: FinCategory):
    cone = product(arrow_presheaf, representable(arrow, "b"))
    assert cone.apex.sizes() == [2, 1]
    assert cone.apex.validate().ok
    assert all(leg.validate().ok for leg in cone.legs.values())
    cocone = coproduct(arrow_presheaf, terminal(arrow))
    assert cocone.apex.sizes() == [3, 2]
    both = copairing(cocone, [identity_map(arrow_presheaf), base_point(arrow_presheaf)])
    assert both.validate().ok


def base_point(arrow_presheaf: Presheaf) -> PresheafMap:
    """The point `(x, z)` of P as a map out of the terminal presheaf"""
    return PresheafMap(
        source=terminal(arrow_presheaf.base),
        target=arrow_presheaf,
        components={"a": (0,), "b": (0,)},
    )


def test_equalizer(arrow_presheaf: Presheaf):
    identity = identity_map(arrow_presheaf)
    swap = compose_maps(collapse_back(arrow_presheaf), collapse(arrow_presheaf))
    cone = equalizer(identity, swap)
    assert cone.apex.sizes() == [1, 1]
    assert is_mono(cone.legs["0"])


def collapse_back(arrow_presheaf: Presheaf) -> PresheafMap:
    q = collapse(arrow_presheaf).target
    return PresheafMap(source=q, target=arrow_presheaf, components={"a": (0,), "b": (0,)})


def test_pullback_of_mono(arrow_presheaf: Presheaf):
    h = collapse(arrow_presheaf)
    assert not is_mono(h)
    assert not is_mono_by_kernel_pair(h)
    assert is_epi(h)
    cone = pullback(h, h)
    assert cone.apex.sizes() == [4, 1]


def test_epi_mono_factorization(arrow_presheaf: Presheaf):
    h = collapse(arrow_presheaf)
    factors = factor_epi_mono(h)
    assert is_epi(factors.epi)
    assert is_mono(factors.mono)
    assert compose_maps(factors.mono, factors.epi).key() == h.key()


def test_subpresheaf_must_be_closed(arrow_presheaf: Presheaf):
    with pytest.raises(ValueError):
        subpresheaf(arrow_presheaf, {"a": [1], "b": [0]})
    carrier, inclusion = subpresheaf(arrow_presheaf, {"a": [0], "b": [0]})
    assert carrier.sizes() == [1, 1]
    assert is_mono(inclusion)


def test_exponential_transpose(point: FinCategory, arrow: FinCategory):
    two = constant(point, 2)
    assert exponential(two, two).apex.sizes() == [4]
    exp = exponential(representable(arrow, "b"), constant(arrow, 2))
    assert exp.apex.validate().ok
    assert verify_transpose(exp, terminal(arrow))


def test_diagram_validation(arrow_presheaf: Presheaf, arrow: FinCategory):
    shape = walking_arrow()
    missing = Diagram(base=arrow, shape=shape, objects={"a": arrow_presheaf, "b": arrow_presheaf})
    assert {v.law for v in missing.validate().violations} == {"maps"}


@seed(20240101)
@settings(derandomize=True, max_examples=200, deadline=None)
@given(st.data())
def test_pullback_preserves_monos(data):
    """Pulling a mono back along any map with the same codomain gives a mono"""
    m = data.draw(st.sampled_from(MONOS))
    candidates = [h for h in MAPS if h.target == m.target]
    f = data.draw(st.sampled_from(candidates))
    cone = pullback(m, f)
    assert is_mono(cone.legs["1"])


@seed(20240101)
@settings(derandomize=True, max_examples=200, deadline=None)
@given(st.sampled_from(MAPS))
def test_every_map_factors(h: PresheafMap):
    factors = factor_epi_mono(h)
    assert is_epi(factors.epi) and is_mono(factors.mono)
    assert compose_maps(factors.mono, factors.epi).key() == h.key()
