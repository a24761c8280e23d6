"""District load-profile cost components and baseline normalization."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

COMPONENTS = ("ramping", "one_minus_load_factor", "avg_daily_peak", "peak_demand", "net_consumption")
TABLE_HEADER = [
    "climate_zone",
    "ramping",
    "one_minus_load_factor",
    "avg_daily_peak",
    "peak_demand",
    "net_consumption",
    "avg_score",
]


class MetricError(ValueError):
    pass


class TooShort(MetricError):
    pass


class Empty(MetricError):
    pass


class NotDayAligned(MetricError):
    pass


class ZeroPeakMonth(MetricError):
    pass


class ZeroBaselineComponent(UserWarning):
    """A baseline component is zero; its ratio is reported as 1."""


def _as_trace(trace):
    x = np.asarray(trace, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise Empty("trace must be a non-empty 1-D series")
    return x


def ramping(trace):
    x = np.asarray(trace, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise TooShort("ramping needs at least two steps")
    return float(np.abs(np.diff(x)).sum())


def one_minus_load_factor(trace, month_blocks):
    """One minus the mean over months of (month mean / month max)."""
    x = _as_trace(trace)
    factors = []
    for lo, hi in month_blocks:
        block = x[lo:hi]
        if block.size == 0:
            raise MetricError(f"empty month block [{lo}, {hi})")
        peak = block.max()
        if not peak > 0:
            raise ZeroPeakMonth(f"month block [{lo}, {hi}) has no positive peak")
        factors.append(block.mean() / peak)
    if sum(hi - lo for lo, hi in month_blocks) != x.size:
        raise MetricError("month blocks do not cover the trace")
    return float(1.0 - np.mean(factors))


def avg_daily_peak(trace):
    x = _as_trace(trace)
    if x.size % 24:
        raise NotDayAligned(f"trace length {x.size} is not a whole number of days")
    return float(x.reshape(-1, 24).max(axis=1).mean())


def peak_demand(trace):
    return float(_as_trace(trace).max())


def net_consumption(trace):
    return float(_as_trace(trace).sum())


def components(trace, month_blocks):
    """The five raw cost components of ``trace``, in table order."""
    return {
        "ramping": ramping(trace),
        "one_minus_load_factor": one_minus_load_factor(trace, month_blocks),
        "avg_daily_peak": avg_daily_peak(trace),
        "peak_demand": peak_demand(trace),
        "net_consumption": net_consumption(trace),
    }


@dataclass
class CostReport:
    ramping: float
    one_minus_load_factor: float
    avg_daily_peak: float
    peak_demand: float
    net_consumption: float
    ratios: dict
    avg_score: float
    zero_baseline: list = field(default_factory=list)

    @property
    def ratio_values(self):
        return [self.ratios[k] for k in COMPONENTS]

    def table_row(self, label=""):
        return [label] + [_fmt(v) for v in self.ratio_values] + [_fmt(self.avg_score)]

    def write_csv(self, path, label=""):
        write_score_table(path, [(label, self)], average_row=False)


def _fmt(v):
    return repr(float(v))


def score_from_components(agent, baseline):
    ratios = {}
    flagged = []
    for k in COMPONENTS:
        if baseline[k] == 0:
            flagged.append(k)
            warnings.warn(f"baseline {k} is zero; reporting ratio 1", ZeroBaselineComponent, stacklevel=3)
            ratios[k] = 1.0
        else:
            ratios[k] = agent[k] / baseline[k]
    avg = sum(ratios[k] for k in COMPONENTS) / len(COMPONENTS)
    return CostReport(**agent, ratios=ratios, avg_score=avg, zero_baseline=flagged)


def score(agent_trace, baseline_trace, month_blocks):
    """Five components of ``agent_trace`` normalized by ``baseline_trace``."""
    a = _as_trace(agent_trace)
    b = _as_trace(baseline_trace)
    if a.shape != b.shape:
        raise MetricError(f"trace lengths differ: {a.size} vs {b.size}")
    return score_from_components(components(a, month_blocks), components(b, month_blocks))


def write_score_table(path, rows, average_row=True):
    """One row per ``(label, CostReport)``; optional trailing "Avg. Score" row."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_HEADER)
        for label, report in rows:
            w.writerow(report.table_row(label))
        if average_row and rows:
            avg = sum(r.avg_score for _, r in rows) / len(rows)
            w.writerow(["Avg. Score", "", "", "", "", "", _fmt(avg)])


def read_score_table(path):
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))
