"""Golden fixtures: tiny frozen inputs replayed through the public API.

Fixture files live in ``edqd/fixture_data``. Three families:

* archive fixtures (bin/insert/merge): hand-computed cases replayed
  through bin_descriptor, try_insert and merge_from, compared byte-exact
  against stored dumps;
* stats fixtures: published datasets whose normality verdicts route
  compare() into a known branch;
* a smoke-run fixture: a fully configured miniature experiment whose
  artifacts were frozen from the first verified run; replaying it guards
  the end-to-end determinism contract.

Expectations are regenerated only through the explicit ``--bless`` flow
(``edqd verify-fixtures --bless``), which reports per-file differences so
an accidental contract change cannot slip through silently.
"""

from __future__ import annotations

import json
import shutil
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .archive import BehaviourDescriptor, Elite, MapArchive, bin_descriptor
from .config import RunConfig, parse_config_file
from .stats import compare

SMOKE_COMPARED_FILES = (
    "generations.csv",
    "summary.csv",
    "expressed.map",
    "maps/robot_000.map",
    "maps/robot_001.map",
    "maps/robot_002.map",
    "maps/robot_003.map",
    "maps/robot_004.map",
)
# The analysis of the smoke run is golden too: it exercises the swarm-map
# merge, the reference map and the precision metrics byte-exactly.
SMOKE_ANALYSIS_FILES = ("metrics.csv", "reference.map")
# Fixed relative location so run labels inside metrics.csv are stable.
_SMOKE_BATCH = "smokebatch"


@dataclass
class FixtureResult:
    name: str
    passed: bool
    detail: str = ""

    def describe(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        suffix = f" ({self.detail})" if self.detail else ""
        return f"{status}  {self.name}{suffix}"


def data_dir() -> Path:
    return Path(resources.files("edqd") / "fixture_data")


def _check_bin_cases(root: Path) -> list[FixtureResult]:
    cases = json.loads((root / "bin" / "cases.json").read_text())
    results = []
    for n, case in enumerate(cases):
        desc = BehaviourDescriptor(case["trait1"], case["trait2"])
        got = bin_descriptor(desc, case["bound"], case.get("bins", 15))
        expected = tuple(case["expected"])
        results.append(FixtureResult(
            f"bin/case_{n}", got == expected,
            "" if got == expected else f"got {got}, expected {expected}"))
    return results


def _check_insert_cases(root: Path) -> list[FixtureResult]:
    results = []
    for case_dir in sorted((root / "insert").iterdir()):
        if not case_dir.is_dir():
            continue
        meta = json.loads((case_dir / "meta.json").read_text())
        archive = MapArchive.from_text((case_dir / "start.map").read_text(),
                                       meta.get("bins", 15), meta["bound"])
        cand = meta["candidate"]
        inserted = archive.try_insert(Elite(
            None, cand["fitness"], BehaviourDescriptor(cand["trait1"], cand["trait2"])))
        ok = (inserted == meta["inserted"]
              and archive.dump_text() == (case_dir / "expected.map").read_text())
        results.append(FixtureResult(f"insert/{case_dir.name}", ok,
                                     "" if ok else "result map or flag mismatch"))
    return results


def _check_merge_cases(root: Path) -> list[FixtureResult]:
    results = []
    for case_dir in sorted((root / "merge").iterdir()):
        if not case_dir.is_dir():
            continue
        meta = json.loads((case_dir / "meta.json").read_text())
        bins, bound = meta.get("bins", 15), meta["bound"]
        dst = MapArchive.from_text((case_dir / "a.map").read_text(), bins, bound)
        src = MapArchive.from_text((case_dir / "b.map").read_text(), bins, bound)
        dst.merge_from(src)
        ok = dst.dump_text() == (case_dir / "expected.map").read_text()
        results.append(FixtureResult(f"merge/{case_dir.name}", ok,
                                     "" if ok else "merged map mismatch"))
    return results


def _check_stats_cases(root: Path) -> list[FixtureResult]:
    stats_dir = root / "stats"
    branches = json.loads((stats_dir / "branches.json").read_text())
    results = []
    for case in branches:
        a = [float(x) for x in (stats_dir / case["a"]).read_text().split()]
        b = [float(x) for x in (stats_dir / case["b"]).read_text().split()]
        got = compare(a, b).test_used
        ok = got == case["expected_test"]
        results.append(FixtureResult(
            f"stats/{case['a']}__{case['b']}", ok,
            "" if ok else f"routed to {got}, expected {case['expected_test']}"))
    return results


def _smoke_config(root: Path) -> RunConfig:
    return RunConfig(**parse_config_file(root / "smoke" / "config.txt"))


def _run_smoke_and_analysis(root: Path, tmp: Path) -> tuple[Path, Path]:
    from .cli import analyze
    from .evolution import run_experiment

    run_dir = tmp / _SMOKE_BATCH / "run_000"
    run_experiment(_smoke_config(root), run_dir)
    analysis = analyze([tmp / _SMOKE_BATCH], tmp / "analysis")
    return run_dir, analysis


def _smoke_pairs(root, run_dir, analysis):
    expected_dir = root / "smoke" / "expected"
    for rel in SMOKE_COMPARED_FILES:
        yield f"smoke/{rel}", run_dir / rel, expected_dir / rel
    for rel in SMOKE_ANALYSIS_FILES:
        yield f"smoke/analysis/{rel}", analysis / rel, expected_dir / "analysis" / rel


def _check_smoke(root: Path) -> list[FixtureResult]:
    results = []
    with tempfile.TemporaryDirectory() as tmp:
        run_dir, analysis = _run_smoke_and_analysis(root, Path(tmp))
        for name, got_path, want_path in _smoke_pairs(root, run_dir, analysis):
            if not want_path.exists():
                results.append(FixtureResult(name, False, "expectation missing"))
                continue
            ok = got_path.read_bytes() == want_path.read_bytes()
            results.append(FixtureResult(name, ok, "" if ok else "bytes differ"))
    return results


def _bless_smoke(root: Path) -> list[FixtureResult]:
    results = []
    with tempfile.TemporaryDirectory() as tmp:
        run_dir, analysis = _run_smoke_and_analysis(root, Path(tmp))
        for name, src, dst in _smoke_pairs(root, run_dir, analysis):
            changed = not dst.exists() or dst.read_bytes() != src.read_bytes()
            dst.parent.mkdir(parents=True, exist_ok=True)
            shutil.copyfile(src, dst)
            results.append(FixtureResult(
                f"bless {name}", True, "updated" if changed else "unchanged"))
    return results


def verify_fixtures(bless: bool = False) -> list[FixtureResult]:
    """Replay every fixture; with ``bless`` the smoke expectations are
    rewritten from a fresh run instead of compared (hand-computed archive
    and stats fixtures are never blessed; they are the oracle)."""
    root = data_dir()
    results = []
    results += _check_bin_cases(root)
    results += _check_insert_cases(root)
    results += _check_merge_cases(root)
    results += _check_stats_cases(root)
    if bless:
        results += _bless_smoke(root)
    else:
        results += _check_smoke(root)
    return results
