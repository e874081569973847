import json
from pathlib import Path

import pytest
from click.testing import CliRunner
from conftest import fixture_path

from toposkit.cli import cli


def run(*args: str):
    return CliRunner().invoke(cli, list(args))


def without_timing(output: str) -> list[str]:
    return [line for line in output.splitlines() if not line.startswith("timing:")]


def test_omega():
    result = run("omega", fixture_path("arrow.fc"))
    assert result.exit_code == 0, result.output
    lines = result.stdout.splitlines()
    assert "sizes: [2, 3]" in lines
    assert lines[0] == "command: omega"
    assert lines[-2] == "verdict: ok"
    assert lines[-1].startswith("timing: ")


def test_output_is_deterministic():
    first = run("omega", fixture_path("chain3.fc"))
    second = run("omega", fixture_path("chain3.fc"))
    assert without_timing(first.stdout) == without_timing(second.stdout)


def test_json_report():
    result = run("--json", "omega", fixture_path("arrow.fc"))
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["schema"] == 1
    assert payload["command"] == "omega"
    assert payload["data"]["sizes"] == [2, 3]
    assert payload["inputs"][0]["name"] == fixture_path("arrow.fc")
    assert len(payload["inputs"][0]["sha256"]) == 64


def test_validate():
    result = run("validate", fixture_path("demo.fw"))
    assert result.exit_code == 0, result.output
    assert "artifacts: 22" in result.stdout


@pytest.mark.parametrize("fixture", ["terminal.fc", "arrow.fc", "z2.fc"])
def test_verify_classifier(fixture: str):
    result = run("verify-classifier", fixture_path(fixture))
    assert result.exit_code == 0, result.output
    assert "[FAIL]" not in result.stdout


def test_sub():
    result = run("sub", fixture_path("arrow.fp"))
    assert result.exit_code == 0, result.output
    assert "|Sub(P)| = 6" in result.stdout
    assert "|Hom(P, Omega)| = 6" in result.stdout


def test_enumeration_guard():
    result = run("--max-enum", "1", "sub", fixture_path("arrow.fp"))
    assert result.exit_code == 2
    assert "--max-enum" in result.output


def test_topologies():
    result = run("topologies", fixture_path("terminal.fc"))
    assert result.exit_code == 0, result.output
    assert "topologies: 2" in result.stdout
    assert "lt-operators: 2" in result.stdout


def test_not_a_sheaf():
    result = run("is-sheaf", fixture_path("bad.fp"), "canonical(sierpinski)")
    assert result.exit_code == 1
    assert "verdict: not a sheaf" in result.stdout
    assert "(not-separated)" in result.stdout


def test_sheafify():
    result = run("sheafify", fixture_path("bad.fp"), "canonical(sierpinski)")
    assert result.exit_code == 0, result.output
    (sizes,) = [line for line in result.stdout.splitlines() if line.startswith("sizes: ")]
    assert sizes.startswith("sizes: [2, 2, 2] -> ")
    assert sizes.endswith("-> [1, 2, 2]")


def test_malformed_input(tmp_path: Path):
    path = tmp_path / "broken.fc"
    path.write_text("category c\nobject a\nbogus line\n")
    result = run("omega", str(path))
    assert result.exit_code == 2
    assert f"{path}:3: unexpected 'bogus'" in result.output


def test_unknown_name():
    result = run("omega", "nowhere")
    assert result.exit_code == 2
    assert "unknown category nowhere" in result.output


def test_not_sober(tmp_path: Path):
    path = tmp_path / "blob.fs"
    path.write_text("space blob = indiscrete 2\n")
    result = run("sober", str(path))
    assert result.exit_code == 1
    assert "sober: False" in result.stdout
    assert "verdict: not sober" in result.stdout


def test_groups():
    groups = fixture_path("groups.fa")
    assert run("-w", groups, "check-group", "S3").exit_code == 0
    assert run("-w", groups, "check-group", "broken").exit_code == 1
    assert run("-w", groups, "check-id", "S3", "(* (inv y) (inv x)) = (inv (* x y))").exit_code == 0
    result = run("-w", groups, "check-id", "S3", "(* x y) = (* y x)")
    assert result.exit_code == 1
    assert "witness:" in result.stdout


def test_bad_statement():
    result = run("-w", fixture_path("groups.fa"), "check-id", "S3", "(* x y = x")
    assert result.exit_code == 2


def test_fields():
    rings = fixture_path("rings.fa")
    assert run("-w", rings, "check-field", "Z5").exit_code == 0
    assert run("-w", rings, "check-field", "field2").exit_code == 0
    result = run("-w", rings, "check-field", "Z4", "--variant", "negation")
    assert result.exit_code == 1


def test_etcs_audit():
    corpus = fixture_path("corpus.fw")
    result = run("-w", corpus, "etcs", "audit", "sets", "--checks", "well-pointed,choice")
    assert result.exit_code == 0, result.output
    assert result.stdout.splitlines()[0] == "command: etcs audit"
    assert run("-w", corpus, "etcs", "audit", "z2sets", "--checks", "well-pointed").exit_code == 1
    assert run("-w", corpus, "etcs", "audit", "sets", "--checks", "compactness").exit_code == 2


def test_spaces():
    demo = fixture_path("demo.fw")
    assert run("-w", demo, "sober", "sierpinski").exit_code == 0
    assert run("-w", demo, "recover-locale", "sierpinski").exit_code == 0
    result = run("-w", demo, "spatial", "opens")
    assert result.exit_code == 0, result.output
    assert "points: 2" in result.stdout
    assert run("-w", demo, "sections", "cover_twice").exit_code == 0


def test_geometric_morphisms():
    demo = fixture_path("demo.fw")
    result = run("-w", demo, "verify-gm", "pick")
    assert result.exit_code == 0, result.output
    assert "embedding: True" in result.stdout
    result = run("-w", demo, "verify-gm", "everything")
    assert result.exit_code == 0, result.output


def test_classify_lex():
    result = run("-w", fixture_path("demo.fw"), "classify-lex", "yoneda_arrow")
    assert result.exit_code == 0, result.output


def test_laws_are_seeded():
    first = run("--seed", "7", "laws", fixture_path("arrow.fc"), "--samples", "20")
    second = run("--seed", "7", "laws", fixture_path("arrow.fc"), "--samples", "20")
    assert first.exit_code == 0, first.output
    assert without_timing(first.stdout) == without_timing(second.stdout)


def test_json_map_witness():
    corpus = fixture_path("corpus.fw")
    result = run("--json", "-w", corpus, "etcs", "audit", "z2sets", "--checks", "well-pointed")
    assert result.exit_code == 1
    payload = json.loads(result.stdout)
    assert payload["ok"] is False
    f, g = payload["witness"]
    assert set(f) == {"map", "source", "target", "components"}
    assert f["source"] == g["source"]
    assert f["components"] != g["components"]
