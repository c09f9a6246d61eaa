"""Synthetic labeled p-value streams and Monte-Carlo experiment sweeps.

Observations are drawn from a two-component mixture: standard normal
background, and with probability pi1 an anomalous component that is either
a mean shift (N(effect, 1)) or a scale shift (N(0, effect**2)).  P-values
are computed under the null via the standard normal CDF, so with pi1 = 0
they are exactly uniform.  An optional moving-average injector correlates
neighbouring observations (order ``ma_lag``) while keeping the marginal
distribution standard normal, which is what the lag-aware rules are for.

All randomness flows through numpy's seeded PCG64 generator with a fixed
draw order (labels, then innovations), so identical configurations produce
byte-identical streams on any platform.  Sweep replications are seeded as
``seed_base + replication`` and share streams across methods, which makes
per-seed comparisons between methods paired.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr

from . import controllers, metrics
from .controllers import ControllerConfig, UNDECAYED_RULES
from .metrics import StreamRecord

SIDEDNESS = ("two", "upper", "lower")
ALTERNATIVES = ("mean", "scale")


def to_pvalue(z, sidedness: str = "two"):
    """P-value of z under the standard normal null.

    two:   2 * min(F(z), 1 - F(z)), evaluated through the lower tail of -|z|
           so extreme values keep full relative accuracy
    upper: 1 - F(z);  lower: F(z)
    """
    z = np.asarray(z, dtype=np.float64)
    if sidedness == "two":
        p = 2.0 * ndtr(-np.abs(z))
    elif sidedness == "upper":
        p = ndtr(-z)
    elif sidedness == "lower":
        p = ndtr(z)
    else:
        raise ValueError(f"sidedness must be one of {SIDEDNESS}")
    return float(p) if p.ndim == 0 else p


@dataclass
class GeneratorConfig:
    length: int = 20000
    pi1: float = 0.01
    alternative: str = "mean"
    effect: float = 3.0
    sidedness: str = "two"
    seed: int = 0
    ma_lag: int = 0

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be positive")
        if not 0.0 <= self.pi1 <= 1.0:
            raise ValueError("pi1 must lie in [0, 1]")
        if self.alternative not in ALTERNATIVES:
            raise ValueError(f"alternative must be one of {ALTERNATIVES}")
        if self.alternative == "scale" and self.effect <= 0.0:
            raise ValueError("scale-shift effect must be positive")
        if self.sidedness not in SIDEDNESS:
            raise ValueError(f"sidedness must be one of {SIDEDNESS}")
        if self.ma_lag < 0:
            raise ValueError("ma_lag must be nonnegative")


@dataclass
class Stream:
    """A generated stream; behaves as a sequence of StreamRecord."""

    z: np.ndarray
    p: np.ndarray
    is_null: np.ndarray

    def __len__(self):
        return int(self.p.size)

    def __getitem__(self, i) -> StreamRecord:
        if isinstance(i, slice):
            raise TypeError("Stream does not support slicing")
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        return StreamRecord(i + 1, float(self.p[i]), bool(self.is_null[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def n_alternatives(self) -> int:
        return int((~self.is_null).sum())


def _ma_background(rng, length: int, lag: int) -> np.ndarray:
    eps = rng.standard_normal(length + lag)
    if lag == 0:
        return eps
    kernel = np.ones(lag + 1) / math.sqrt(lag + 1)
    return np.convolve(eps, kernel, mode="valid")


def generate_stream(config: GeneratorConfig) -> Stream:
    """Labeled mixture stream; deterministic given the seed."""
    rng = np.random.default_rng(config.seed)
    is_alt = rng.random(config.length) < config.pi1
    base = _ma_background(rng, config.length, config.ma_lag)
    if config.alternative == "mean":
        z = base + config.effect * is_alt
    else:
        z = base * np.where(is_alt, config.effect, 1.0)
    p = to_pvalue(z, config.sidedness)
    return Stream(z=z, p=p, is_null=~is_alt)


@dataclass
class BurstConfig:
    """Two anomaly bursts separated by a long quiet gap.

    The shape behind the alpha-death comparisons: without memory decay a
    rule that spends its budget on the first burst cannot recover in time
    for the second.  Anomalies arrive at a regular cadence inside each
    burst (burst_length // burst_anomalies steps apart); only the
    observation noise varies with the seed.
    """

    burst_length: int = 1000
    burst_anomalies: int = 50
    gap: int = 10000
    effect: float = 3.0
    alternative: str = "mean"
    sidedness: str = "two"
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.burst_anomalies <= self.burst_length:
            raise ValueError("burst_anomalies must fit inside the burst")
        if self.gap < 0:
            raise ValueError("gap must be nonnegative")

    @property
    def length(self) -> int:
        return 2 * self.burst_length + self.gap

    def windows(self) -> dict:
        b, g = self.burst_length, self.gap
        return {"burst1": (0, b), "gap": (b, b + g),
                "burst2": (b + g, 2 * b + g)}


def generate_burst_stream(config: BurstConfig) -> Stream:
    rng = np.random.default_rng(config.seed)
    n = config.length
    is_alt = np.zeros(n, dtype=bool)
    if config.burst_anomalies:
        step = config.burst_length // config.burst_anomalies
        positions = np.arange(0, config.burst_length, step)[:config.burst_anomalies]
        is_alt[positions] = True
        is_alt[config.burst_length + config.gap + positions] = True
    base = rng.standard_normal(n)
    if config.alternative == "mean":
        z = base + config.effect * is_alt
    else:
        z = base * np.where(is_alt, config.effect, 1.0)
    return Stream(z=z, p=to_pvalue(z, config.sidedness), is_null=~is_alt)


def method_config(method: str, alpha: float = 0.1, delta: float = 0.99,
                  eta: float = 1.0, lag: int = 0, **overrides) -> ControllerConfig:
    """ControllerConfig with sweep-level knobs and per-rule defaults.

    ``delta`` is only forwarded to decay rules and ``lag`` only to the
    dependency-aware ones, so building undecayed baselines stays silent.
    """
    kwargs = dict(alpha=alpha, eta=eta)
    if method not in UNDECAYED_RULES and method != "fixed":
        kwargs["delta"] = delta
    if method in controllers.DEP_RULES:
        kwargs["lag"] = lag
    kwargs.update(overrides)
    return ControllerConfig(rule=method, **kwargs)


@dataclass
class SweepConfig:
    methods: Sequence[str] = ("lord", "saffron", "addis", "lord-decay",
                              "saffron-decay")
    pi1_grid: Sequence[float] = (1e-4, 1e-3, 1e-2, 1e-1, 0.5, 0.9)
    length: int = 20000
    reps: int = 20
    alpha: float = 0.1
    delta: float = 0.99
    eta: float = 1.0
    lag: int = 0
    alternative: str = "mean"
    effect: float = 3.0
    sidedness: str = "two"
    ma_lag: int = 0
    seed_base: int = 0
    workers: int = 1

    def __post_init__(self):
        self.methods = tuple(self.methods)
        self.pi1_grid = tuple(float(x) for x in self.pi1_grid)
        for m in self.methods:
            if m not in controllers.RULES:
                raise ValueError(f"unknown method {m!r}")
        if self.reps < 1:
            raise ValueError("reps must be positive")
        if self.workers < 1:
            raise ValueError("workers must be positive")


@dataclass
class SweepResult:
    raw: list
    aggregate: list
    errors: list = field(default_factory=list)


_RAW_COLUMNS = ("method", "alpha_target", "delta", "eta", "pi1", "seed", "T",
                "R", "V", "fdp", "fdp_delta", "sfdp_delta", "power",
                "precision", "min_surplus")


def _sweep_cell(cfg: SweepConfig, pi1: float, rep: int) -> list:
    seed = cfg.seed_base + rep
    stream = generate_stream(GeneratorConfig(
        length=cfg.length, pi1=pi1, alternative=cfg.alternative,
        effect=cfg.effect, sidedness=cfg.sidedness, seed=seed,
        ma_lag=cfg.ma_lag))
    rows = []
    for method in cfg.methods:
        config = method_config(method, alpha=cfg.alpha, delta=cfg.delta,
                               eta=cfg.eta, lag=cfg.lag)
        log = metrics.run_log(controllers.make_controller(config), stream.p,
                              is_null=stream.is_null)
        row = metrics.summarize_log(log, config, delta=cfg.delta, eta=cfg.eta)
        row.update({"method": method, "pi1": pi1, "seed": seed})
        rows.append(row)
    return rows


def _sweep_task(args):
    # failures are reported per cell, never silently dropped
    cfg, pi1, rep = args
    try:
        return _sweep_cell(cfg, pi1, rep)
    except Exception as exc:
        return [{"error": f"{type(exc).__name__}: {exc}",
                 "pi1": pi1, "seed": cfg.seed_base + rep}]


_AGG_METRICS = ("fdp", "fdp_delta", "sfdp_delta", "power", "precision")
_AGG_COLUMNS = (("method", "pi1", "alpha_target", "delta", "eta", "reps")
                + tuple(f"{m}_{s}" for m in _AGG_METRICS for s in ("mean", "se"))
                + ("r_mean", "v_mean", "mfdr"))


def _mean_se(values) -> tuple:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
    return mean, se


def aggregate_rows(raw: list, eta: float) -> list:
    """Mean and standard error per (method, pi1) cell, in first-seen order."""
    order = []
    groups = {}
    for row in raw:
        key = (row["method"], row["pi1"])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for method, pi1 in order:
        rows = groups[(method, pi1)]
        agg = {"method": method, "pi1": pi1,
               "alpha_target": rows[0]["alpha_target"],
               "delta": rows[0]["delta"], "eta": rows[0]["eta"],
               "reps": len(rows)}
        for name in _AGG_METRICS:
            mean, se = _mean_se([r[name] for r in rows])
            agg[f"{name}_mean"] = mean
            agg[f"{name}_se"] = se
        agg["r_mean"] = float(np.mean([r["R"] for r in rows]))
        agg["v_mean"] = float(np.mean([r["V"] for r in rows]))
        agg["mfdr"] = metrics.mfdr_estimate(
            [(r["v_delta"], r["r_delta"]) for r in rows], eta=eta)
        out.append(agg)
    return out


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """One metrics row per (pi1, method, replication) plus aggregate rows.

    Cells that raise are collected in ``result.errors`` with their grid
    coordinates; surviving cells are aggregated normally.
    """
    tasks = [(cfg, pi1, rep) for pi1 in cfg.pi1_grid for rep in range(cfg.reps)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            cells = list(pool.map(_sweep_task, tasks, chunksize=1))
    else:
        cells = [_sweep_task(t) for t in tasks]
    raw, errors = [], []
    for cell in cells:
        for row in cell:
            (errors if "error" in row else raw).append(row)
    return SweepResult(raw=raw, aggregate=aggregate_rows(raw, cfg.eta),
                       errors=errors)


@dataclass
class FrontierConfig:
    """Precision-recall frontier study on the burst scenario."""

    burst: BurstConfig = field(default_factory=BurstConfig)
    method: str = "lord-decay"
    alpha_grid: Sequence[float] = (0.01, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5)
    threshold_grid: Sequence[float] = tuple(
        float(x) for x in np.geomspace(3e-5, 0.5, 28))
    delta: float = 0.99
    eta: float = 1.0
    reps: int = 20
    seed_base: int = 0
    workers: int = 1

    def __post_init__(self):
        self.alpha_grid = tuple(float(a) for a in self.alpha_grid)
        self.threshold_grid = tuple(float(c) for c in self.threshold_grid)


def _frontier_task(args):
    cfg, rep = args
    stream = generate_burst_stream(replace(cfg.burst, seed=cfg.burst.seed + rep))
    rows = []
    for alpha in cfg.alpha_grid:
        config = method_config(cfg.method, alpha=alpha, delta=cfg.delta,
                               eta=cfg.eta)
        log = metrics.run_log(controllers.make_controller(config), stream.p,
                              is_null=stream.is_null)
        row = metrics.summarize_log(log, config, delta=cfg.delta, eta=cfg.eta)
        rows.append({"kind": cfg.method, "param": alpha, "seed": rep,
                     "fdp": row["fdp"], "power": row["power"]})
    for c in cfg.threshold_grid:
        config = ControllerConfig(rule="fixed", alpha=c)
        log = metrics.run_log(controllers.make_controller(config), stream.p,
                              is_null=stream.is_null)
        row = metrics.summarize_log(log, config, delta=cfg.delta, eta=cfg.eta)
        rows.append({"kind": "fixed", "param": c, "seed": rep,
                     "fdp": row["fdp"], "power": row["power"]})
    return rows


def fixed_threshold_frontier(cfg: FrontierConfig) -> SweepResult:
    """Trace (realized FDP, power) for the decay rule and a threshold sweep."""
    tasks = [(cfg, rep) for rep in range(cfg.reps)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            cells = list(pool.map(_frontier_task, tasks, chunksize=1))
    else:
        cells = [_frontier_task(t) for t in tasks]
    raw = [row for cell in cells for row in cell]
    order = []
    groups = {}
    for row in raw:
        key = (row["kind"], row["param"])
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    agg = []
    for kind, param in order:
        rows = groups[(kind, param)]
        fdp_mean, fdp_se = _mean_se([r["fdp"] for r in rows])
        pow_mean, pow_se = _mean_se([r["power"] for r in rows])
        agg.append({"kind": kind, "param": param, "reps": len(rows),
                    "fdp_mean": fdp_mean, "fdp_se": fdp_se,
                    "power_mean": pow_mean, "power_se": pow_se})
    return SweepResult(raw=raw, aggregate=agg)
