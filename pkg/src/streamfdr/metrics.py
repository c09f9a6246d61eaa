"""Evaluation quantities and the independent oracle/surplus verifier.

The accumulator tracks both plain counts (rejections R, false positives V)
and their exponentially discounted versions R_delta, V_delta, maintained
through the exact recurrence X <- delta * X + increment.  From these it
derives the three false-discovery proportions reported everywhere:

    FDP        = V / max(R, 1)
    FDP_delta  = V_delta / max(R_delta, 1)
    sFDP_delta = V_delta / (R_delta + eta)

``verify_oracle_and_surplus`` is the test-suite backbone: given a decision
log and the rule configuration it recomputes, independently of the
controller's internal accumulators, the rule's oracle FDP estimate and the
surplus

    P(T) = alpha * denominator(T) - discounted spend(T)

at every prefix T.  The rule is certified iff the oracle never exceeds
alpha and the surplus never dips below zero.  In "scratch" mode every
prefix is recomputed from raw arrays (quadratic, the honest brute force);
"recurrence" mode replays the exact linear recurrences instead and is used
where quadratic cost is prohibitive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import controllers
from .controllers import ControllerConfig


@dataclass(slots=True)
class StreamRecord:
    """One observation: 1-based index, p-value, optional ground truth.

    ``is_null`` is True when the index is truly null (not an anomaly);
    None when unlabeled.
    """

    index: int
    p_value: float
    is_null: Optional[bool] = None


@dataclass
class DecisionLog:
    """Column-oriented record of a finished run, as written to decision CSVs."""

    p: np.ndarray
    alpha: np.ndarray
    rejected: np.ndarray
    oracle: Optional[np.ndarray] = None
    is_null: Optional[np.ndarray] = None

    def __len__(self):
        return int(self.p.size)


def run_log(controller, pvalues, is_null=None) -> DecisionLog:
    """Drive ``controller`` over a p-value sequence and collect the log."""
    p = np.asarray(pvalues, dtype=np.float64)
    n = p.size
    alpha = np.empty(n, dtype=np.float64)
    rejected = np.empty(n, dtype=bool)
    oracle = np.empty(n, dtype=np.float64)
    step = controller.step
    for i in range(n):
        d = step(p[i])
        alpha[i] = d.threshold
        rejected[i] = d.rejected
        oracle[i] = d.oracle_value
    labels = None if is_null is None else np.asarray(is_null, dtype=bool)
    return DecisionLog(p=p, alpha=alpha, rejected=rejected, oracle=oracle,
                       is_null=labels)


class MetricsAccumulator:
    """Running counts over a labeled stream; one owner, strictly sequential."""

    def __init__(self, delta: float = 0.99, eta: float = 1.0):
        if not 0.0 < delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if eta <= 0.0:
            raise ValueError("eta must be positive")
        self.delta = delta
        self.eta = eta
        self.steps = 0
        self.rejections = 0
        self.false_positives = 0
        self.r_delta = 0.0
        self.v_delta = 0.0
        self.alternatives = 0
        self.true_positives = 0
        self._labeled = True

    def update(self, record: StreamRecord, decision) -> "MetricsAccumulator":
        if record.index != self.steps + 1:
            raise ValueError(
                f"out-of-order stream record: expected index {self.steps + 1}, "
                f"got {record.index}")
        r = 1.0 if decision.rejected else 0.0
        null = record.is_null
        if null is None:
            self._labeled = False
        self.r_delta = self.delta * self.r_delta + r
        self.v_delta = self.delta * self.v_delta + (r if null else 0.0)
        self.rejections += decision.rejected
        if null is not None:
            if null:
                self.false_positives += decision.rejected
            else:
                self.alternatives += 1
                self.true_positives += decision.rejected
        self.steps += 1
        return self

    def _require_labels(self):
        if not self._labeled:
            raise ValueError("stream was not fully labeled")

    def fdp_variants(self) -> dict:
        """FDP, FDP_delta and sFDP_delta at the current step."""
        self._require_labels()
        return {
            "fdp": self.false_positives / max(self.rejections, 1),
            "fdp_delta": self.v_delta / max(self.r_delta, 1.0),
            "sfdp_delta": self.v_delta / (self.r_delta + self.eta),
        }

    def power_precision(self) -> dict:
        """Recall over true anomalies and 1 - FDP.

        Power is defined as 0 when the stream contains no alternatives so
        that sweep tables stay total; that convention is flagged through
        the ``degenerate_power`` key.
        """
        self._require_labels()
        degenerate = self.alternatives == 0
        power = 0.0 if degenerate else self.true_positives / self.alternatives
        precision = 1.0 - self.false_positives / max(self.rejections, 1)
        return {"power": power, "precision": precision,
                "degenerate_power": degenerate}


def mfdr_estimate(summaries, eta: float = 1.0) -> float:
    """mean(V_delta) / (mean(R_delta) + eta) across replication summaries.

    Accepts an iterable of (v_delta, r_delta) pairs or of accumulators.
    """
    vs, rs = [], []
    for item in summaries:
        if isinstance(item, MetricsAccumulator):
            vs.append(item.v_delta)
            rs.append(item.r_delta)
        else:
            v, r = item
            vs.append(float(v))
            rs.append(float(r))
    if not vs:
        raise ValueError("mfdr_estimate needs at least one replication")
    return float(np.mean(vs) / (np.mean(rs) + eta))


@dataclass
class VerificationReport:
    rule: str
    steps: int
    min_surplus: float
    min_surplus_at: int
    max_oracle: float
    max_oracle_at: int
    oracle_bound: float
    consistent: bool
    first_violation_at: Optional[int]
    passed: bool

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        line = (f"{status}: rule={self.rule} steps={self.steps} "
                f"min_surplus={self.min_surplus:.6e} (T={self.min_surplus_at}) "
                f"max_oracle={self.max_oracle:.6e} (T={self.max_oracle_at})")
        if not self.passed and self.first_violation_at is not None:
            line += f" first_offending_T={self.first_violation_at}"
        return line


def _oracle_numerator(log: DecisionLog, config: ControllerConfig) -> np.ndarray:
    if controllers.oracle_numerator_kind(config.rule) == "plain":
        return log.alpha
    inside = (config.lam < log.p) & (log.p <= config.tau)
    return np.where(inside, log.alpha / (config.tau - config.lam), 0.0)


def _discounted_prefixes(values: np.ndarray, delta: float,
                         method: str) -> np.ndarray:
    """d(T) = sum_{t<=T} delta**(T-t) * values_t for every prefix T."""
    n = values.size
    if method == "recurrence":
        out = np.empty(n, dtype=np.float64)
        acc = 0.0
        for i in range(n):
            acc = delta * acc + values[i]
            out[i] = acc
        return out
    if method != "scratch":
        raise ValueError(f"unknown verification method {method!r}")
    if delta == 1.0:
        # prefix sums of raw values; no discounting to redo per step
        return np.cumsum(values)
    powers = delta ** np.arange(n, dtype=np.float64)
    rev = values[::-1].copy()
    out = np.empty(n, dtype=np.float64)
    for T in range(1, n + 1):
        out[T - 1] = np.dot(rev[n - T:], powers[:T])
    return out


def verify_oracle_and_surplus(log: DecisionLog, config: ControllerConfig,
                              tol: float = 1e-10,
                              method: str = "scratch") -> VerificationReport:
    """Recompute the rule oracle and surplus P(T) at every prefix of a log."""
    if config.rule not in controllers.ORACLE_RULES:
        raise ValueError(f"rule {config.rule!r} carries no oracle to verify")
    n = len(log)
    alpha = config.alpha
    smooth = controllers.oracle_denominator_kind(config.rule) == "smooth"
    if n == 0:
        base = alpha * (config.eta if smooth else 1.0)
        return VerificationReport(config.rule, 0, base, 0, 0.0, 0,
                                  alpha + tol, True, None, True)
    num = _oracle_numerator(log, config)
    spend = _discounted_prefixes(num, config.delta, method)
    rdelta = _discounted_prefixes(log.rejected.astype(np.float64),
                                  config.delta, method)
    if smooth:
        denom = rdelta + config.eta
    else:
        denom = np.maximum(rdelta, 1.0)
    oracle = spend / denom
    surplus = alpha * denom - spend

    consistent = bool(np.array_equal(log.rejected, log.p <= log.alpha))
    i_min = int(np.argmin(surplus))
    i_max = int(np.argmax(oracle))
    bad = (surplus < -tol) | (oracle > alpha + tol)
    first = int(np.argmax(bad)) + 1 if bad.any() else None
    passed = first is None and consistent
    return VerificationReport(
        rule=config.rule,
        steps=n,
        min_surplus=float(surplus[i_min]),
        min_surplus_at=i_min + 1,
        max_oracle=float(oracle[i_max]),
        max_oracle_at=i_max + 1,
        oracle_bound=alpha + tol,
        consistent=consistent,
        first_violation_at=first,
        passed=passed,
    )


def truncate_log(log: DecisionLog, upto: int) -> DecisionLog:
    """Prefix of a log through step ``upto`` (for time-sliced curves)."""
    if not 0 <= upto <= len(log):
        raise ValueError(f"upto must lie in [0, {len(log)}]")
    return DecisionLog(
        p=log.p[:upto], alpha=log.alpha[:upto], rejected=log.rejected[:upto],
        oracle=None if log.oracle is None else log.oracle[:upto],
        is_null=None if log.is_null is None else log.is_null[:upto])


def summarize_log(log: DecisionLog, config: ControllerConfig,
                  delta: Optional[float] = None,
                  eta: Optional[float] = None,
                  upto: Optional[int] = None) -> dict:
    """Metrics row for one run, evaluated at end of stream by default.

    Pass ``upto`` to evaluate at an earlier step instead.  Labels are
    optional; unlabeled fields come back as None.
    """
    if upto is not None:
        log = truncate_log(log, upto)
    delta = config.delta if delta is None else delta
    eta = config.eta if eta is None else eta
    n = len(log)
    rej = log.rejected
    r = int(rej.sum())
    row = {"T": n, "R": r, "alpha_target": config.alpha,
           "delta": delta, "eta": eta}
    weights = delta ** np.arange(n - 1, -1, -1, dtype=np.float64) if n else np.zeros(0)
    r_delta = float(np.dot(weights, rej)) if n else 0.0
    row["r_delta"] = r_delta
    if log.is_null is not None:
        null = log.is_null
        v = int((rej & null).sum())
        v_delta = float(np.dot(weights, rej & null)) if n else 0.0
        alternatives = int((~null).sum())
        tp = int((rej & ~null).sum())
        row.update({
            "V": v,
            "v_delta": v_delta,
            "fdp": v / max(r, 1),
            "fdp_delta": v_delta / max(r_delta, 1.0),
            "sfdp_delta": v_delta / (r_delta + eta),
            "power": (tp / alternatives) if alternatives else 0.0,
            "precision": 1.0 - v / max(r, 1),
        })
    else:
        row.update({"V": None, "v_delta": None, "fdp": None, "fdp_delta": None,
                    "sfdp_delta": None, "power": None, "precision": None})
    if config.rule in controllers.ORACLE_RULES:
        report = verify_oracle_and_surplus(log, config, method="recurrence")
        row["min_surplus"] = report.min_surplus
        row["max_oracle"] = report.max_oracle
    else:
        row["min_surplus"] = None
        row["max_oracle"] = None
    return row


def accumulate_stream(log: DecisionLog, delta: float, eta: float) -> MetricsAccumulator:
    """Replay a labeled log through a MetricsAccumulator (testing helper)."""
    if log.is_null is None:
        raise ValueError("labels are required")
    acc = MetricsAccumulator(delta=delta, eta=eta)
    for i in range(len(log)):
        record = StreamRecord(i + 1, float(log.p[i]), bool(log.is_null[i]))
        decision = controllers.Decision(i + 1, float(log.alpha[i]),
                                        bool(log.rejected[i]), math.nan, False)
        acc.update(record, decision)
    return acc
