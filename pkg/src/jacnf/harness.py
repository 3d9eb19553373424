"""Monte-Carlo sweeps, CRLB tables and the runtime-scaling benchmark.

Every trial draws from its own generator seeded by
``SeedSequence(master_seed, spawn_key=(value_index, trial_index))``, so the
output does not depend on execution order or on the worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
import csv
import io
import json
import logging
import math
import time

import numpy as np
import yaml

from .array_model import (ArrayConfig, MODEL_TAGS, SourcePosition, params_from_position,
                          rayleigh_distance, snr_to_sigma2, synthesize_received)
from .crlb import SingularFimError, crlb_closed_form, crlb_numeric_fim, compare_reports, unit_symbols
from .jac_estimators import GdConfig, IsfConfig, jac_estimate
from .metrics import achievable_rate, nmse, rate_max
from .music import MusicConfig, PowerIterationError
from .polar_grid import build_polar_grid, estimate_polar_grid

log = logging.getLogger(__name__)

SWEEP_VARS = ("snr_db", "snapshots", "distance_m", "n_antennas")
METHODS = ("jac_isf", "jac_gd", "music_only", "polar_grid")
SWEEP_HEADER = ["sweep_var", "value", "method", "metric", "mean", "std", "trials", "seed"]
CRLB_HEADER = ["theta_deg", "r_m", "snr_db", "T", "crlb_theta", "crlb_r", "crlb_p1", "crlb_p2",
               "source_tag"]


class SpecError(ValueError):
    """Invalid sweep or grid configuration."""


@dataclass(frozen=True)
class SweepSpec:
    """One sweep. Loaded from a flat YAML mapping with these keys.

    ``r_m`` / ``theta_deg`` fix the user position; otherwise ``r_range`` and
    ``theta_range_deg`` are sampled uniformly. ``theta_deg: 0`` puts the user
    on the broadside (z) axis.
    """

    sweep_var: str
    values: tuple
    n_antennas: int = 200
    snapshots: int = 32
    snr_db: float = 5.0
    r_m: float | None = None
    r_range: tuple = (10.0, 50.0)
    theta_deg: float | None = None
    theta_range_deg: tuple = (-60.0, 60.0)
    model_tag: str = "exact"
    methods: tuple = ("jac_isf", "jac_gd", "music_only")
    trials: int = 200
    seed: int = 0
    carrier_hz: float = 30e9
    ideal_c: bool = True
    normalize: str = "none"
    music_grid: int = 4096
    polar_angles: int = 256
    polar_ranges: int = 16
    polar_r_min: float | None = None
    polar_r_max: float | None = None
    crlb: bool = True

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARS:
            raise SpecError(f"sweep_var must be one of {SWEEP_VARS}, got {self.sweep_var!r}")
        if not self.values:
            raise SpecError("values must be non-empty")
        if self.trials < 1:
            raise SpecError("trials must be >= 1")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise SpecError(f"unknown methods {sorted(bad)}; choose from {METHODS}")
        if self.model_tag not in MODEL_TAGS:
            raise SpecError(f"model_tag must be one of {MODEL_TAGS}")
        lo, hi = self.r_range
        if not 0 < lo <= hi:
            raise SpecError(f"bad r_range {self.r_range}")
        if self.sweep_var in ("snapshots", "n_antennas") and any(int(v) != v or v < 1 for v in self.values):
            raise SpecError(f"{self.sweep_var} values must be positive integers")

    @classmethod
    def from_mapping(cls, data: dict) -> "SweepSpec":
        if not isinstance(data, dict):
            raise SpecError("sweep config must be a key/value mapping")
        known = {f.name: f for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise SpecError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for key, val in data.items():
            if key in ("values", "methods", "r_range", "theta_range_deg"):
                if isinstance(val, str):
                    val = [v.strip() for v in val.split(",") if v.strip()]
                if not isinstance(val, (list, tuple)):
                    val = [val]
                if key != "methods":
                    try:
                        val = [float(v) for v in val]
                    except (TypeError, ValueError) as exc:
                        raise SpecError(f"{key}: expected numbers") from exc
                val = tuple(val)
            elif key in ("n_antennas", "snapshots", "trials", "seed", "music_grid", "polar_angles",
                         "polar_ranges"):
                if isinstance(val, bool) or not isinstance(val, (int, float)) or int(val) != val:
                    raise SpecError(f"{key}: expected an integer")
                val = int(val)
            elif key in ("ideal_c", "crlb"):
                if not isinstance(val, bool):
                    raise SpecError(f"{key}: expected true/false")
            elif key in ("sweep_var", "model_tag", "normalize"):
                val = str(val)
            elif val is not None:
                try:
                    val = float(val)
                except (TypeError, ValueError) as exc:
                    raise SpecError(f"{key}: expected a number") from exc
            kw[key] = val
        missing = {"sweep_var", "values"} - set(kw)
        if missing:
            raise SpecError(f"missing required keys: {sorted(missing)}")
        return cls(**kw)

    @classmethod
    def from_yaml(cls, text: str) -> "SweepSpec":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise SpecError(f"cannot parse sweep config: {exc}") from exc
        return cls.from_mapping(data)


def trial_seed(master_seed: int, value_index: int, trial_index: int) -> int:
    ss = np.random.SeedSequence(master_seed, spawn_key=(value_index, trial_index))
    return int(ss.generate_state(1, np.uint64)[0])


def plan(spec: SweepSpec) -> list[tuple[int, float, int, int]]:
    """``(value_index, value, trial_index, seed)`` for every trial, in output order."""
    return [(vi, v, ti, trial_seed(spec.seed, vi, ti))
            for vi, v in enumerate(spec.values) for ti in range(spec.trials)]


@dataclass(frozen=True)
class _Setting:
    cfg: ArrayConfig
    snapshots: int
    snr_db: float
    r_m: float | None


def _setting(spec: SweepSpec, value) -> _Setting:
    cfg = ArrayConfig(spec.n_antennas, spec.carrier_hz, None, spec.ideal_c)
    t, snr, r = spec.snapshots, spec.snr_db, spec.r_m
    if spec.sweep_var == "snr_db":
        snr = float(value)
    elif spec.sweep_var == "snapshots":
        t = int(value)
    elif spec.sweep_var == "distance_m":
        r = float(value)
    elif spec.sweep_var == "n_antennas":
        cfg = cfg.with_antennas(int(value))
    return _Setting(cfg, t, snr, r)


def _draw_position(spec: SweepSpec, setting: _Setting, rng: np.random.Generator) -> SourcePosition:
    r = setting.r_m if setting.r_m is not None else rng.uniform(*spec.r_range)
    if spec.theta_deg is not None:
        theta = math.radians(spec.theta_deg)
    else:
        theta = math.radians(rng.uniform(*spec.theta_range_deg))
    return SourcePosition(float(r), theta)


def _polar_grid_for(spec: SweepSpec, cfg: ArrayConfig):
    r_min = spec.polar_r_min if spec.polar_r_min is not None else 0.5 * spec.r_range[0]
    r_max = spec.polar_r_max if spec.polar_r_max is not None else rayleigh_distance(cfg)
    return build_polar_grid(cfg, spec.polar_angles, spec.polar_ranges, r_min, max(r_max, 2 * r_min))


def _run_trial(args):
    spec, vi, ti = args
    setting = _setting(spec, spec.values[vi])
    rng = np.random.default_rng(trial_seed(spec.seed, vi, ti))
    pos = _draw_position(spec, setting, rng)
    sig = synthesize_received(setting.cfg, pos, setting.snapshots, setting.snr_db, rng,
                              spec.model_tag)
    h = sig.meta["channel"]
    sigma2 = sig.sigma2 if sig.sigma2 > 0 else snr_to_sigma2(300.0)
    mcfg = MusicConfig(grid_size=spec.music_grid)
    out = {"r": pos.r_m, "theta": pos.theta_rad, "sigma2": sig.sigma2, "methods": {}}
    for method in spec.methods:
        try:
            if method == "polar_grid":
                est = estimate_polar_grid(sig.samples, _polar_grid_for(spec, setting.cfg))
            else:
                kind = {"jac_isf": "isf", "jac_gd": "gd", "music_only": "music"}[method]
                est = jac_estimate(sig.samples, setting.cfg, kind, IsfConfig(), GdConfig(), mcfg,
                                   normalize=spec.normalize)
        except (PowerIterationError, FloatingPointError, np.linalg.LinAlgError) as exc:
            log.warning("trial (%d, %d) method %s failed: %s", vi, ti, method, exc)
            out["methods"][method] = None
            continue
        rec = {
            "rate": achievable_rate(h, est.h_hat, 1.0, sigma2),
            "nmse": nmse(h, est.h_hat),
            "theta_err": est.theta_hat - pos.theta_rad,
            "r_err": None if est.r_hat is None else est.r_hat - pos.r_m,
            "pos_err2": None,
        }
        if est.r_hat is not None:
            px, pz = pos.cartesian
            qx, qz = est.position.cartesian
            rec["pos_err2"] = (px - qx) ** 2 + (pz - qz) ** 2
        out["methods"][method] = rec
    return out


def run_trials(spec: SweepSpec, threads: int = 1) -> list[dict]:
    jobs = [(spec, vi, ti) for vi, _, ti, _ in plan(spec)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_run_trial, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    return [_run_trial(j) for j in jobs]


def _stats(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    return float(np.mean(arr)), float(np.std(arr))


def _rms(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return math.nan, math.nan
    return float(np.sqrt(np.mean(arr**2))), float(np.std(np.abs(arr)))


def aggregate(spec: SweepSpec, trials: list[dict]) -> list[dict]:
    """Reduce per-trial records to ``SWEEP_HEADER`` rows in (value, method, metric) order.

    Means of ``rmse_*`` rows are root-mean-square errors and their std is
    the spread of per-trial absolute errors; ``nmse_db`` is 10 log10 of the
    mean NMSE with the std of per-trial NMSE in dB. Rows with method
    ``crlb`` give ``sqrt(CRLB)`` at the trial-mean geometry next to the
    matching ``rmse_*`` metric.
    """
    rows = []
    per_value = spec.trials
    for vi, value in enumerate(spec.values):
        chunk = trials[vi * per_value:(vi + 1) * per_value]
        setting = _setting(spec, value)

        def row(method, metric, mean, std, n):
            rows.append({"sweep_var": spec.sweep_var, "value": value, "method": method,
                         "metric": metric, "mean": mean, "std": std, "trials": n,
                         "seed": spec.seed})

        sigma2 = snr_to_sigma2(setting.snr_db)
        rmax = rate_max(1.0, sigma2, setting.cfg.n_antennas) if sigma2 > 0 else math.inf
        for method in spec.methods:
            recs = [t["methods"][method] for t in chunk if t["methods"][method] is not None]
            failures = len(chunk) - len(recs)
            row(method, "rate", *_stats([r["rate"] for r in recs]), len(recs))
            row(method, "rate_max", rmax, 0.0, len(recs))
            nm = [r["nmse"] for r in recs]
            nm_db = [10 * math.log10(max(v, 1e-300)) for v in nm]
            row(method, "nmse_db", 10 * math.log10(max(np.mean(nm), 1e-300)) if nm else math.nan,
                _stats(nm_db)[1], len(recs))
            resolved = [r for r in recs if r["pos_err2"] is not None]
            pos_err = [math.sqrt(r["pos_err2"]) for r in resolved]
            row(method, "rmse_pos_m", *_rms(pos_err), len(resolved))
            row(method, "rmse_theta_rad", *_rms([r["theta_err"] for r in recs]), len(recs))
            row(method, "rmse_r_m", *_rms([r["r_err"] for r in resolved]), len(resolved))
            row(method, "mse_position", *_stats([r["pos_err2"] for r in resolved]), len(resolved))
            row(method, "farfield_count", float(len(recs) - len(resolved)), 0.0, len(recs))
            row(method, "failures", float(failures), 0.0, len(chunk))
        if spec.crlb and sigma2 > 0:
            r_mean = float(np.mean([t["r"] for t in chunk]))
            th_mean = float(np.mean([t["theta"] for t in chunk]))
            try:
                rep = crlb_numeric_fim(setting.cfg, th_mean, r_mean,
                                       unit_symbols(setting.snapshots), sigma2)
                row("crlb", "rmse_theta_rad", math.sqrt(rep.crlb_theta), 0.0, len(chunk))
                row("crlb", "rmse_r_m", math.sqrt(rep.crlb_r), 0.0, len(chunk))
            except SingularFimError as exc:
                log.warning("CRLB skipped for value %r: %s", value, exc)
    return rows


def run_sweep(spec: SweepSpec, threads: int = 1) -> list[dict]:
    return aggregate(spec, run_trials(spec, threads))


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def rows_to_csv(rows: list[dict], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[h]) for h in header])
    return buf.getvalue()


def rows_to_json(rows: list[dict]) -> str:
    def clean(v):
        return None if isinstance(v, float) and not math.isfinite(v) else v
    return json.dumps([{k: clean(v) for k, v in r.items()} for r in rows], indent=1) + "\n"


# --- CRLB tables ------------------------------------------------------------

@dataclass(frozen=True)
class CrlbGrid:
    theta_deg: tuple = (0.0,)
    r_m: tuple = (10.0, 20.0, 50.0, 100.0, 200.0)
    snr_db: tuple = (5.0,)
    snapshots: tuple = (8,)
    n_antennas: int = 200
    carrier_hz: float = 30e9
    ideal_c: bool = True
    closed_form: bool = True


def crlb_rows(grid: CrlbGrid) -> list[dict]:
    cfg = ArrayConfig(grid.n_antennas, grid.carrier_hz, None, grid.ideal_c)
    rows = []
    for th in grid.theta_deg:
        for r in grid.r_m:
            for snr in grid.snr_db:
                for t in grid.snapshots:
                    sigma2 = snr_to_sigma2(snr)
                    num = crlb_numeric_fim(cfg, math.radians(th), r, unit_symbols(int(t)), sigma2)
                    reps = [num]
                    if grid.closed_form:
                        cf = crlb_closed_form(cfg, math.radians(th), r, sigma2, float(t))
                        reps.insert(0, compare_reports(cf, num))
                    for rep in reps:
                        rows.append({"theta_deg": th, "r_m": r, "snr_db": snr, "T": int(t),
                                     **rep.as_row()})
    return rows


# --- runtime scaling --------------------------------------------------------

@dataclass(frozen=True)
class BenchConfig:
    snapshots: int = 64
    reps: int = 5
    music_grid_per_antenna: int = 8
    polar_angles: int = 128
    antennas_per_range: int = 32
    snr_db: float = 10.0
    seed: int = 0
    min_total_s: float = 0.5


def _bench_callable(method: str, cfg: ArrayConfig, bc: BenchConfig):
    if method in ("jac_isf", "jac_gd"):
        mcfg = MusicConfig(grid_size=max(16, bc.music_grid_per_antenna * cfg.n_antennas))
        kind = method.split("_")[1]
        return lambda y: jac_estimate(y, cfg, kind, music_cfg=mcfg)
    if method == "polar_grid":
        grid = build_polar_grid(cfg, bc.polar_angles, max(1, cfg.n_antennas // bc.antennas_per_range),
                                5.0, rayleigh_distance(cfg))
        return lambda y: estimate_polar_grid(y, grid)
    raise SpecError(f"unknown bench method {method!r}")


def run_complexity_bench(n_list, snapshots: int | None = None, method: str = "jac_isf",
                         bench: BenchConfig | None = None) -> list[dict]:
    """Median estimator wall-clock per array size; signal synthesis is not timed.

    For ``polar_grid`` the number of range rings grows as ``N / antennas_per_range``.
    Each size runs at least ``reps`` times and at least ``min_total_s`` seconds.
    """
    bc = bench or BenchConfig()
    if snapshots is not None:
        bc = replace(bc, snapshots=snapshots)
    n_list = [int(n) for n in n_list]
    if n_list != sorted(n_list):
        raise SpecError("N list must be ascending")
    rows, prev = [], None
    for n in n_list:
        cfg = ArrayConfig(n, ideal_c=True)
        y = synthesize_received(cfg, SourcePosition.from_degrees(20.0, 20.0), bc.snapshots,
                                bc.snr_db, bc.seed).samples
        fn = _bench_callable(method, cfg, bc)
        fn(y)  # warm-up
        times = []
        # at least `reps` calls, more for fast sizes so the median is not timer noise
        while len(times) < bc.reps or sum(times) < bc.min_total_s * 1e9:
            t0 = time.perf_counter_ns()
            fn(y)
            times.append(time.perf_counter_ns() - t0)
        med = int(np.median(times))
        rows.append({"method": method, "N": n, "median_ns": med,
                     "ratio": math.nan if prev is None else med / prev})
        prev = med
    return rows
