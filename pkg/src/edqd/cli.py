"""Command line entry points: replicate batches, analysis, fixtures.

Exit codes: 0 success, 2 configuration error, 3 I/O error (including an
output-directory collision without --force and an analysis where every
run directory had to be skipped).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time
from pathlib import Path

from . import __version__
from .config import RunConfig, build_config, software_versions
from .errors import ConfigurationError, DataInconsistencyError
from .evolution import parse_variant, run_experiment
from .metrics import ReferenceMap, median_local_precision, precision, write_pgm
from .archive import MapArchive, merge_maps
from .stats import write_pairwise_csv


def run_batch(cfg: RunConfig) -> Path:
    """Launch ``cfg.replicates`` runs with splitmix-derived seeds, one
    subdirectory each, plus a manifest recording config hash, seeds and
    software versions. Timestamps live only in the manifest."""
    out = Path(cfg.out_dir)
    if out.exists() and any(out.iterdir()) and not cfg.force:
        raise FileExistsError(f"output directory {out} is not empty (use --force to reuse)")
    out.mkdir(parents=True, exist_ok=True)

    seeds = [cfg.replicate_seed(i) for i in range(cfg.replicates)]
    manifest = {
        "config_hash": cfg.config_hash(),
        "variant": cfg.variant,
        "master_seed": cfg.seed,
        "replicate_seeds": seeds,
        "software": software_versions(),
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    jobs = [(cfg.replicate_config(i), out / f"run_{i:03d}") for i in range(cfg.replicates)]
    workers = cfg.workers or os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_experiment, job_cfg, job_dir) for job_cfg, job_dir in jobs]
            for fut in futures:
                fut.result()
    else:
        for job_cfg, job_dir in jobs:
            run_experiment(job_cfg, job_dir)
    return out


# -- analysis -----------------------------------------------------------------

class RunArtifacts:
    """View over one completed run directory; dumps parse once."""

    def __init__(self, path: Path):
        self.path = Path(path)
        info = json.loads((self.path / "run_info.json").read_text())
        self.variant = info["variant"]
        self.bins = info["config"]["map_bins"]
        bound = info["config"]["distance_bound"]
        self.distance_bound = bound if bound is not None else info["config"]["arena_diameter"]
        self.label = f"{self.path.parent.name}/{self.path.name}"
        self.uses_maps = parse_variant(self.variant).value != "medea-fps"
        self._expressed = None
        self._local_maps = None

    def expressed(self) -> MapArchive:
        if self._expressed is None:
            self._expressed = MapArchive.from_text(
                (self.path / "expressed.map").read_text(), self.bins, self.distance_bound)
        return self._expressed

    def local_maps(self) -> list[MapArchive]:
        if self._local_maps is None:
            maps_dir = self.path / "maps"
            paths = sorted(maps_dir.glob("robot_*.map"))
            if not paths:
                raise FileNotFoundError(f"{maps_dir} holds no robot map dumps")
            self._local_maps = [
                MapArchive.from_text(p.read_text(), self.bins, self.distance_bound)
                for p in paths
            ]
        return self._local_maps

    def best_known(self) -> MapArchive:
        """This run's contribution to the reference: the swarm-map for
        archive variants, the expressed map for the genome baseline."""
        if self.uses_maps:
            return merge_maps(self.local_maps())
        return self.expressed()


def discover_runs(dirs: list[Path]) -> list[RunArtifacts]:
    runs = []
    skipped = 0
    seen = set()
    for d in dirs:
        d = Path(d)
        candidates = [d] if (d / "run_info.json").exists() else sorted(
            child for child in d.iterdir() if child.is_dir()
        )
        for c in candidates:
            if c in seen:
                continue
            seen.add(c)
            if not (c / "run_info.json").exists():
                continue
            try:
                run = RunArtifacts(c)
                run.best_known()  # force dump validation now
            except (OSError, ValueError, KeyError) as e:
                print(f"warning: skipping {c}: {e}", file=sys.stderr)
                skipped += 1
                continue
            runs.append(run)
    if not runs:
        raise FileNotFoundError(
            f"no usable run directories found ({skipped} skipped)" if skipped
            else "no run directories found")
    return runs


METRICS_CSV_HEADER = ["run", "treatment", "n_occ", "medianPrecision",
                      "swarmMapOcc", "swarmMapPrecision"]


def analyze(dirs: list[Path], out_dir: Path) -> Path:
    """Cross-run analysis: reference map, metrics.csv, pairwise stats
    tables and P2 heatmaps for expressed maps and swarm-maps."""
    import csv

    runs = discover_runs(dirs)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    heat_dir = out / "heatmaps"
    heat_dir.mkdir(exist_ok=True)

    bins = runs[0].bins
    ref = ReferenceMap.from_maps((r.best_known() for r in runs), bins=bins)
    (out / "reference.map").write_text(ref.dump_text())

    per_treatment: dict[str, dict[str, list[float]]] = {}
    with open(out / "metrics.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(METRICS_CSV_HEADER)
        for run in runs:
            expressed = run.expressed()
            n_occ = expressed.occupied_count
            if run.uses_maps:
                local = run.local_maps()
                swarm = merge_maps(local)
                med_prec = median_local_precision(local, ref)
                swarm_occ = swarm.occupied_count
                swarm_prec = precision(swarm, ref)
                write_pgm(swarm, heat_dir / f"{_safe(run.label)}_swarm.pgm")
            else:
                # The baseline has no archives; its expressed map plays
                # both roles, mirroring how it is compared against swarms.
                med_prec = precision(expressed, ref)
                swarm_occ = expressed.occupied_count
                swarm_prec = med_prec
            write_pgm(expressed, heat_dir / f"{_safe(run.label)}_expressed.pgm")
            w.writerow([run.label, run.variant, n_occ, repr(med_prec),
                        swarm_occ, repr(swarm_prec)])
            bucket = per_treatment.setdefault(run.variant, {
                "n_occ": [], "medianPrecision": [], "swarmMapPrecision": []})
            bucket["n_occ"].append(n_occ)
            bucket["medianPrecision"].append(med_prec)
            bucket["swarmMapPrecision"].append(swarm_prec)

    for metric, filename in (("n_occ", "stats_diversity.csv"),
                             ("medianPrecision", "stats_local_precision.csv"),
                             ("swarmMapPrecision", "stats_swarm_precision.csv")):
        eligible = {t: v[metric] for t, v in per_treatment.items() if len(v[metric]) >= 3}
        if len(eligible) >= 2:
            write_pairwise_csv(eligible, out / filename)
        else:
            print(f"warning: not enough treatments with >=3 runs for {filename}",
                  file=sys.stderr)
    return out


def _safe(label: str) -> str:
    return label.replace("/", "__")


# -- argument parsing ---------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edqd",
        description="Decentralised quality-diversity swarm evolution harness",
    )
    parser.add_argument("--version", action="version", version=f"edqd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    batch = sub.add_parser("batch", help="run a batch of replicate experiments")
    batch.add_argument("--variant", choices=["R", "M1", "M2", "M3", "medea-fps"])
    batch.add_argument("--seed", type=int)
    batch.add_argument("--replicates", type=int)
    batch.add_argument("--generations", type=int)
    batch.add_argument("--population", type=int)
    batch.add_argument("--lifetime", type=int)
    batch.add_argument("--map-bins", type=int, dest="map_bins")
    batch.add_argument("--out", dest="out_dir")
    batch.add_argument("--config", type=Path, help="flat key = value config file")
    batch.add_argument("--workers", type=int)
    batch.add_argument("--dump-genomes", action=argparse.BooleanOptionalAction,
                       default=None, dest="dump_genomes")
    batch.add_argument("--trace", action=argparse.BooleanOptionalAction, default=None)
    batch.add_argument("--force", action=argparse.BooleanOptionalAction, default=None)

    an = sub.add_parser("analyze", help="post-process completed run directories")
    an.add_argument("dirs", nargs="+", type=Path,
                    help="run directories or batch directories containing them")
    an.add_argument("--out", dest="out_dir", type=Path, default=Path("analysis"))

    fx = sub.add_parser("verify-fixtures", help="replay golden fixtures byte-exactly")
    fx.add_argument("--bless", action="store_true",
                    help="regenerate fixture expectations, printing a diff summary")
    return parser


_BATCH_FIELDS = ("variant", "seed", "replicates", "generations", "population",
                 "lifetime", "map_bins", "out_dir", "workers", "dump_genomes",
                 "trace", "force")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "batch":
            cli_values = {k: getattr(args, k) for k in _BATCH_FIELDS}
            cfg = build_config(cli_values, args.config)
            out = run_batch(cfg)
            print(f"batch complete: {cfg.replicates} runs in {out}")
        elif args.command == "analyze":
            out = analyze(args.dirs, args.out_dir)
            print(f"analysis written to {out}")
        elif args.command == "verify-fixtures":
            from .fixtures import verify_fixtures

            results = verify_fixtures(bless=args.bless)
            failed = [r for r in results if not r.passed]
            for r in results:
                print(r.describe())
            if failed:
                print(f"{len(failed)} of {len(results)} fixtures failed")
                return 1
            print(f"all {len(results)} fixtures passed")
        return 0
    except (ConfigurationError, DataInconsistencyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
