"""Command-line experiment runner writing per-repetition and summary CSV tables."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import logging
import sys
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .driver import SamplerConfig, run
from .problems import get_problem, reference_moments

log = logging.getLogger(__name__)

RESULT_COLUMNS = ["rep", "seed", "estimate", "v_hat", "n_strata", "evals", "alpha_final", "wall_ms"]
SUMMARY_COLUMNS = ["problem", "geometry", "alpha_mode", "c", "n_max", "reps", "mean_estimate",
                   "var_estimator", "ref_var_q", "speedup"]


@dataclass(frozen=True)
class ExperimentConfig:
    problem: str = "hypersphere2"
    geometry: str = "hyperrect"
    alpha: str = "0.9"
    tau: float = 0.5
    c: int = 10
    n_max: int = 10_000
    reps: int = 100
    seed: int = 0
    min_samples: int | None = None
    reserve_one: bool | None = None
    out: str = "results.csv"
    cache_dir: str | None = None
    timing: bool = False

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.alpha != "dynamic":
            a = float(self.alpha)
            if not 0.0 <= a <= 0.95:
                raise ValueError("fixed alpha must lie in [0, 0.95]")

    @property
    def alpha_value(self) -> float | str:
        return "dynamic" if self.alpha == "dynamic" else float(self.alpha)

    @property
    def alpha_label(self) -> str:
        return "dynamic" if self.alpha == "dynamic" else f"{float(self.alpha):g}"

    def sampler(self, dim: int, seed: int) -> SamplerConfig:
        return SamplerConfig(dim=dim, n_max=self.n_max, geometry=self.geometry, alpha=self.alpha_value,
                             tau=self.tau, c=self.c, seed=seed, min_samples=self.min_samples,
                             reserve_one=self.reserve_one)


@dataclass(frozen=True)
class ResultRow:
    rep: int
    seed: int
    estimate: float
    v_hat: float
    n_strata: int
    evals: int
    alpha_final: float
    wall_ms: float | None


@dataclass(frozen=True)
class Summary:
    problem: str
    geometry: str
    alpha_mode: str
    c: int
    n_max: int
    reps: int
    mean_estimate: float
    var_estimator: float | None
    ref_var_q: float
    speedup: float | None

    def as_row(self) -> list[str]:
        return [_fmt(getattr(self, f.name)) for f in fields(self)]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())


def summary_path(out: Path) -> Path:
    return out.with_name(out.stem + "_summary" + out.suffix)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> tuple[list[ResultRow], Summary]:
    """Repeated adaptive runs of one configuration with seeds ``seed + rep``."""
    problem = get_problem(cfg.problem)
    _, var_q = reference_moments(problem, cfg.cache_dir)
    rows = []
    for rep in range(cfg.reps):
        seed = cfg.seed + rep
        t0 = time.perf_counter()
        report = run(cfg.sampler(problem.dim, seed), problem.model())
        wall = (time.perf_counter() - t0) * 1e3 if cfg.timing else None
        rows.append(ResultRow(rep, seed, report.estimate, report.v_hat, report.n_strata,
                              report.evaluations, report.alpha_final, wall))
    est = np.array([r.estimate for r in rows])
    var_est = float(np.var(est, ddof=1)) if cfg.reps > 1 else None
    if var_est is None:
        speed = None
    elif var_est == 0.0:
        speed = float("inf")
    else:
        speed = (var_q / cfg.n_max) / var_est
    summary = Summary(cfg.problem, cfg.geometry, cfg.alpha_label, cfg.c, cfg.n_max, cfg.reps,
                      float(est.mean()), var_est, float(var_q), speed)
    if write:
        out = Path(cfg.out)
        _write_csv(out, RESULT_COLUMNS, ([_fmt(getattr(r, c)) for c in RESULT_COLUMNS] for r in rows))
        _write_csv(summary_path(out), SUMMARY_COLUMNS, [summary.as_row()])
    return rows, summary


def cell_filename(cfg: ExperimentConfig) -> str:
    return f"{cfg.problem}_{cfg.geometry}_{cfg.alpha_label}_{cfg.c}_{cfg.n_max}.csv"


def run_sweep(base: ExperimentConfig, grid: dict[str, list], out_dir: Path | str) -> tuple[list[Summary], int]:
    """Run every combination of ``grid`` values; returns summaries and the failure count.

    Each cell writes ``problem_geometry_alpha_c_Nmax.csv`` plus its summary;
    ``merged.csv`` collects all summaries in grid order.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("sweep grid is empty")
    out_dir = Path(out_dir)
    keys = list(grid)
    summaries, failures = [], 0
    for combo in itertools.product(*(grid[k] for k in keys)):
        cfg = replace(base, **dict(zip(keys, combo)))
        cfg = replace(cfg, out=str(out_dir / cell_filename(cfg)))
        try:
            summaries.append(run_experiment(cfg)[1])
        except Exception as exc:  # noqa: BLE001 - a failed cell must not stop the sweep
            log.error("cell %s failed: %s", cell_filename(cfg), exc)
            failures += 1
    _write_csv(out_dir / "merged.csv", SUMMARY_COLUMNS, (s.as_row() for s in summaries))
    return summaries, failures


_CONFIG_KEYS = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _coerce(key: str, text: str):
    text = text.strip()
    if key in ("tau",):
        return float(text)
    if key in ("c", "n_max", "reps", "seed"):
        return int(text)
    if key == "min_samples":
        return None if text in ("", "none", "auto") else int(text)
    if key in ("reserve_one",):
        return None if text in ("", "none", "auto") else _parse_bool(text)
    if key == "timing":
        return _parse_bool(text)
    return text


def read_config_file(path: Path | str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; dashes in keys are allowed."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS and key not in ("sweep_n_max", "sweep_c", "sweep_alpha", "sweep_geometry"):
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = val
    return values


def _list(text: str, conv) -> list:
    return [conv(t) for t in text.replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="adastrat", description="Adaptive stratified sampling experiments.")
    ap.add_argument("--config", help="key=value file; flags override its entries")
    ap.add_argument("--problem")
    ap.add_argument("--geometry", choices=["hyperrect", "simplex"])
    ap.add_argument("--alpha", help='fixed value in [0, 0.95] or "dynamic"')
    ap.add_argument("--tau", type=float)
    ap.add_argument("--c", type=int)
    ap.add_argument("--n-max", type=int)
    ap.add_argument("--reps", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--min-samples", type=int)
    ap.add_argument("--reserve-one", action=argparse.BooleanOptionalAction, default=None)
    ap.add_argument("--out", help="per-repetition CSV, or the output directory for a sweep")
    ap.add_argument("--cache-dir", help="where reference Var(Q) files live")
    ap.add_argument("--timing", action="store_true", default=None, help="record wall time per repetition")
    ap.add_argument("--sweep-n-max", help="comma-separated N_max values")
    ap.add_argument("--sweep-c", help="comma-separated c values")
    ap.add_argument("--sweep-alpha", help='comma-separated alpha values, "dynamic" allowed')
    ap.add_argument("--sweep-geometry", help="comma-separated geometries")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def config_from_args(args: argparse.Namespace) -> tuple[ExperimentConfig, dict[str, list]]:
    merged = read_config_file(args.config) if args.config else {}
    for key in list(_CONFIG_KEYS) + ["sweep_n_max", "sweep_c", "sweep_alpha", "sweep_geometry"]:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val if isinstance(val, str) else str(val)
    sweep_text = {k: merged.pop(k) for k in list(merged) if k.startswith("sweep_")}
    kwargs = {k: _coerce(k, v) for k, v in merged.items()}
    cfg = ExperimentConfig(**kwargs)
    grid = {}
    if "sweep_geometry" in sweep_text:
        grid["geometry"] = _list(sweep_text["sweep_geometry"], str)
    if "sweep_alpha" in sweep_text:
        grid["alpha"] = _list(sweep_text["sweep_alpha"], str)
    if "sweep_c" in sweep_text:
        grid["c"] = _list(sweep_text["sweep_c"], int)
    if "sweep_n_max" in sweep_text:
        grid["n_max"] = _list(sweep_text["sweep_n_max"], int)
    return cfg, grid


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg, grid = config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if grid:
        try:
            summaries, failures = run_sweep(cfg, grid, cfg.out)
        except (ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(f"{len(summaries)} cells completed, {failures} failed")
        return 1 if failures else 0
    try:
        _, summary = run_experiment(cfg)
    except (KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    w.writerow(summary.as_row())
    return 0


if __name__ == "__main__":
    sys.exit(main())
