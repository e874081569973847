import pytest

from toposkit.etcs import full_corpus
from toposkit.psh import is_isomorphic
from toposkit.sites import is_sheaf
from toposkit.spaces import (
    Bundle,
    DiscontinuousMapError,
    FinSpace,
    all_spaces,
    canonical_topology,
    continuous_map,
    discrete_space,
    etale_space,
    find_bundle_isomorphism,
    frame_isomorphism,
    frame_points,
    identity_bundle,
    image_functor,
    indiscrete_space,
    is_etale,
    is_sober,
    is_spatial,
    is_t0,
    open_frame,
    open_functor,
    point_space,
    preimage_functor,
    recover_locale,
    sections_sheaf,
    sierpinski,
)


@pytest.fixture
def two_sheets() -> Bundle:
    """Two copies of the point lying over the point"""
    return Bundle(
        name="sheets",
        total=discrete_space(2),
        base=point_space(),
        projection={"0": "0", "1": "0"},
    )


def test_spaces_are_hashable(sierpinski_space: FinSpace):
    same = FinSpace.build("s", ["0", "1"], [["1"]])
    assert hash(same) == hash(sierpinski_space)
    assert len({sierpinski_space, same, point_space()}) == 2


def test_equal_spaces_keep_their_names(sierpinski_space: FinSpace):
    same = FinSpace.build("s", ["0", "1"], [["1"]])
    assert open_frame(same).frame.name == "Open(s)"
    assert open_frame(sierpinski_space).frame.name == "Open(sierpinski)"
    assert canonical_topology(same).name == "canonical(s)"
    assert canonical_topology(sierpinski_space).name == "canonical(sierpinski)"


def test_sierpinski(sierpinski_space: FinSpace):
    assert sierpinski_space.validate().ok
    assert [str(o) for o in open_frame(sierpinski_space).category.objects] == ["{}", "{1}", "{0,1}"]
    assert is_t0(sierpinski_space)
    assert is_sober(sierpinski_space).is_sober


def test_indiscrete_space_is_not_sober():
    space = indiscrete_space(2)
    assert not is_t0(space)
    report = is_sober(space)
    assert not report.is_sober
    assert report.witnesses == [(frozenset({"0", "1"}), ["0", "1"])]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_finite_spaces_are_sober_iff_t0(n: int):
    for space in all_spaces(n):
        assert space.validate().ok
        assert is_sober(space).is_sober == is_t0(space)


def test_all_spaces_counts():
    """One topology per preorder on the points"""
    assert len(list(all_spaces(2))) == 4
    assert len(list(all_spaces(3))) == 29


def test_generated_topology_closes_under_unions_and_intersections():
    space = FinSpace.generated("s", ["0", "1", "2"], [["0", "1"], ["1", "2"]])
    assert space.is_open(["1"])
    assert space.is_open(["0", "1", "2"])
    assert not space.is_open(["0"])
    assert space.validate().ok


def test_discontinuous_map(sierpinski_space: FinSpace):
    with pytest.raises(DiscontinuousMapError) as error:
        continuous_map(sierpinski_space, sierpinski_space, {"0": "1", "1": "0"})
    assert error.value.witness == frozenset({"1"})


def test_open_functors(sierpinski_space: FinSpace):
    pick = continuous_map(point_space(), sierpinski_space, {"0": "1"})
    assert open_functor(pick).mapping == (0, 1, 1)
    assert open_functor(pick).validate().ok
    assert preimage_functor(pick).validate().ok
    assert image_functor(pick).validate().ok


def test_image_needs_an_open_map(sierpinski_space: FinSpace):
    inclusion = continuous_map(discrete_space(2), sierpinski_space, {"0": "0", "1": "1"})
    with pytest.raises(ValueError):
        image_functor(inclusion)


def fixture_spaces() -> list[FinSpace]:
    named = [point_space(), sierpinski(), discrete_space(2), indiscrete_space(2)]
    return named + [space for n in (1, 2, 3) for space in all_spaces(n)]


def two_sheeted(space: FinSpace) -> Bundle:
    """Two disjoint copies of `space` over itself"""
    points = [f"{x}.{k}" for x in space.points for k in (0, 1)]
    copies = [[f"{x}.{k}" for x in u] for u in space.opens for k in (0, 1)]
    return Bundle(
        name=f"2x{space.name}",
        total=FinSpace.generated(f"2x{space.name}", points, copies),
        base=space,
        projection={p: p.rsplit(".", 1)[0] for p in points},
    )


def test_recover_locale():
    """Subterminal sheaves form a frame isomorphic to the opens"""
    for space in fixture_spaces():
        recovery = recover_locale(space)
        assert recovery.iso.is_bijective
        assert recovery.iso.validate().ok
        assert frame_isomorphism(recovery.frame, open_frame(space).frame) is not None
    assert len(recover_locale(discrete_space(2)).frame) == 4


def test_indiscrete_space_has_the_locale_of_a_point():
    blob = recover_locale(indiscrete_space(2)).frame
    assert frame_isomorphism(blob, recover_locale(point_space()).frame) is not None


def test_frame_points(sierpinski_space: FinSpace):
    """A sober space has as many frame points as points"""
    frame = open_frame(sierpinski_space).frame
    assert frame.validate().ok
    assert len(frame_points(frame)) == 2
    assert is_spatial(frame)


def test_sections_sheaf(sierpinski_space: FinSpace, two_sheets: Bundle):
    gamma = sections_sheaf(identity_bundle(sierpinski_space))
    assert gamma.sizes() == [1, 1, 1]
    assert is_sheaf(gamma, canonical_topology(sierpinski_space).topology).is_sheaf
    sheets = sections_sheaf(two_sheets)
    assert sheets.sizes() == [1, 2]
    assert sheets.name == "Gamma(sheets)"


def test_etale_space_round_trip(two_sheets: Bundle):
    assert is_etale(two_sheets)
    germs = etale_space(sections_sheaf(two_sheets), point_space())
    assert germs.validate().ok
    assert is_etale(germs)
    assert find_bundle_isomorphism(germs, two_sheets) is not None


def test_collapse_is_not_etale(sierpinski_space: FinSpace):
    bundle = Bundle(
        name="collapse", total=sierpinski_space, base=point_space(), projection={"0": "0", "1": "0"}
    )
    assert bundle.validate().ok
    assert not is_etale(bundle)



@pytest.mark.parametrize("n", [1, 2, 3])
def test_etale_round_trips(n: int):
    """Sheaves come back from their germs, etale bundles from their sections"""
    for space in all_spaces(n):
        topology = canonical_topology(space).topology
        bundles = [identity_bundle(space), two_sheeted(space)]
        sheaves = full_corpus(topology.base, 1, topology).presheaves
        for sheaf in [*sheaves, *(sections_sheaf(b) for b in bundles)]:
            germs = etale_space(sheaf, space)
            assert is_etale(germs)
            assert is_isomorphic(sections_sheaf(germs), sheaf)
        for bundle in bundles:
            assert is_etale(bundle)
            germs = etale_space(sections_sheaf(bundle), space)
            assert find_bundle_isomorphism(germs, bundle) is not None
