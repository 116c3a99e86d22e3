import json

from edqd.fixtures import (
    SMOKE_ANALYSIS_FILES,
    SMOKE_COMPARED_FILES,
    data_dir,
    verify_fixtures,
)


def test_all_fixtures_pass():
    results = verify_fixtures()
    failed = [r.describe() for r in results if not r.passed]
    assert not failed, failed


def test_fixture_set_covers_every_operation_family():
    names = [r.name for r in verify_fixtures()]
    for family in ("bin/", "insert/", "merge/", "stats/", "smoke/"):
        assert any(n.startswith(family) for n in names), family


def test_every_fixture_carries_a_provenance_label():
    root = data_dir()
    for meta_path in root.rglob("meta.json"):
        assert json.loads(meta_path.read_text()).get("provenance")
    for case in json.loads((root / "bin" / "cases.json").read_text()):
        assert case.get("provenance")
    for case in json.loads((root / "stats" / "branches.json").read_text()):
        assert case.get("provenance")


def test_smoke_expectations_are_complete():
    expected = data_dir() / "smoke" / "expected"
    for rel in SMOKE_COMPARED_FILES:
        assert (expected / rel).exists(), rel
    for rel in SMOKE_ANALYSIS_FILES:
        assert (expected / "analysis" / rel).exists(), rel


def test_smoke_run_exercised_the_swarm():
    # The golden run must be a lively one: robots forage, maps fill.
    summary = (data_dir() / "smoke" / "expected" / "summary.csv").read_text().splitlines()
    final = summary[-1].split(",")
    assert int(final[1]) > 0      # robots still active at the last generation
    assert int(final[3]) >= 10    # the swarm-map accumulated cells
