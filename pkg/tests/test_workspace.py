from pathlib import Path

import pytest
from conftest import fixture_path

from toposkit.internal import check_field, check_group
from toposkit.sites import is_sheaf
from toposkit.spaces import canonical_topology
from toposkit.workspace import ArtifactKind, Workspace, WorkspaceError, parse_workspace


def parse_error(text: str) -> WorkspaceError:
    with pytest.raises(WorkspaceError) as error:
        Workspace().parse_text(text)
    return error.value


def test_demo_workspace(demo: Workspace):
    """Every artifact of the demo and of its includes is loaded once"""
    assert len(demo) == 22
    assert [a.name for a in demo.of_kind(ArtifactKind.SPACE)] == ["sierpinski", "here", "doubled"]
    assert [a.name for a in demo.of_kind(ArtifactKind.PRESHEAF)] == ["P", "Q", "regular"]
    assert demo.artifacts["regular"].line == 44
    assert demo.get("P", ArtifactKind.PRESHEAF).sizes() == [2, 1]


def test_loading_twice_is_a_no_op(demo: Workspace):
    loaded = demo.load(fixture_path("demo.fw"))
    assert len(loaded) == 22
    assert len(demo) == 22


def test_resolve_a_file():
    """A path resolves to the first matching artifact defined in the file itself"""
    workspace = Workspace()
    assert workspace.resolve(fixture_path("arrow.fm"), ArtifactKind.PRESHEAF_MAP).name == "m"
    assert workspace.resolve(fixture_path("arrow.fm"), ArtifactKind.PRESHEAF).name == "P"
    assert workspace.resolve("Q", ArtifactKind.PRESHEAF).sizes() == [1, 1]
    with pytest.raises(WorkspaceError):
        workspace.resolve(fixture_path("arrow.fm"), ArtifactKind.SPACE)


def test_derived_names(demo: Workspace):
    opens = demo.get("open(sierpinski)", ArtifactKind.CATEGORY)
    assert list(opens.objects) == ["{}", "{1}", "{0,1}"]
    canonical = demo.get("canonical(sierpinski)", ArtifactKind.TOPOLOGY)
    assert canonical.name == "canonical(sierpinski)"
    with pytest.raises(WorkspaceError):
        demo.get("open(nowhere)", ArtifactKind.CATEGORY)


def test_spelled_out_topology_is_canonical():
    workspace = parse_workspace([fixture_path("sierpinski.fj"), fixture_path("bad.fp")])
    spelled = workspace.get("J", ArtifactKind.TOPOLOGY)
    canonical = canonical_topology(workspace.get("sierpinski", ArtifactKind.SPACE)).topology
    assert spelled.key() == canonical.key()
    assert not is_sheaf(workspace.get("bad", ArtifactKind.PRESHEAF), spelled).is_sheaf


def test_unknown_reference():
    error = parse_error("category arrow = arrow\npresheaf X over nowhere = terminal\n")
    assert error.line == 2
    assert str(error) == "<string>:2: unknown category nowhere"


def test_reference_of_the_wrong_kind():
    error = parse_error("category arrow = arrow\ncorpus c over arrow\nmember arrow\n")
    assert error.line == 3
    assert "(it is a category)" in error.message


def test_duplicate_name():
    error = parse_error("category a = terminal\n\ncategory a = arrow\n")
    assert error.line == 3
    assert error.message.startswith("duplicate name a")


def test_body_outside_of_a_block():
    error = parse_error("# comment\nobject a\n")
    assert error.line == 2


def test_category_laws_are_checked():
    """`g . f` is missing, so composition is not total"""
    text = "category c\nobject a\nobject b\nobject c\nmorphism f : a -> b\nmorphism g : b -> c\n"
    error = parse_error(text)
    assert error.line == 1
    assert "totality" in error.message


def test_discontinuous_map_is_rejected():
    text = "space s = sierpinski\ncontinuous swap : s -> s\nsend 0 -> 1\nsend 1 -> 0\n"
    error = parse_error(text)
    assert error.line == 2
    assert "not open" in error.message


def test_malformed_line():
    error = parse_error("category arrow = arrow\npresheaf P over arrow\nset a = x, y\n")
    assert error.line == 3
    assert error.message.startswith("malformed set line")


def test_include_cycle(tmp_path: Path):
    (tmp_path / "a.fw").write_text("include b.fw\n")
    (tmp_path / "b.fw").write_text("include a.fw\n")
    with pytest.raises(WorkspaceError) as error:
        Workspace().load(tmp_path / "a.fw")
    assert error.value.message == "include cycle"


def test_missing_file(tmp_path: Path):
    with pytest.raises(WorkspaceError) as error:
        Workspace().load(tmp_path / "missing.fc")
    assert error.value.message.startswith("cannot read file")


def test_groups():
    workspace = parse_workspace([fixture_path("groups.fa")])
    for name in ("S3", "Z3", "flip"):
        assert check_group(workspace.get(name, ArtifactKind.GROUP)).ok
    broken = check_group(workspace.get("broken", ArtifactKind.GROUP))
    assert "unit" in {v.law for v in broken.violations}


def test_incomplete_group_table():
    text = "category p = terminal\npresheaf two over p = constant 2\ngroup g on two\nunit * : 0\n"
    error = parse_error(text)
    assert error.line == 3
    assert "no inv entry" in error.message


def test_rings():
    workspace = parse_workspace([fixture_path("rings.fa")])
    verdicts = {
        name: check_field(workspace.get(name, ArtifactKind.RING)).is_field
        for name in ("Z1", "Z4", "Z5", "field2")
    }
    assert verdicts == {"Z1": False, "Z4": False, "Z5": True, "field2": True}


def test_corpora():
    workspace = parse_workspace([fixture_path("corpus.fw")])
    sets = workspace.get("sets", ArtifactKind.CORPUS)
    assert [p.sizes() for p in sets.presheaves] == [[1], [0], [2], [3]]
    assert sets.name == "sets"
    assert workspace.sources[fixture_path("corpus.fw")]
