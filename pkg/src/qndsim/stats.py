"""Statistics over measurement records: empirical survival curves, decay-rate
fits, dwell-time decompositions, ergodic time averages, and a two-sample
distribution test.

Error models are standard frequentist choices: binomial standard errors on
survival points and the weighted-regression covariance for fitted rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .protocol import MeasurementRecord


class FitError(ValueError):
    """The survival curve has too few usable points or does not decay."""


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    """Fraction of an ensemble still reporting the target bin at every step.

    ``survivors[i]`` counts the records whose first i outcomes all equal the
    target (so the step-0 baseline is the ensemble size); for synthetic
    curves it holds expected counts instead.  ``stderr`` is the pointwise
    binomial standard error sqrt(p(1-p)/total).
    """

    times: np.ndarray
    survivors: np.ndarray
    total: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        survivors = np.asarray(self.survivors, dtype=float)
        if times.shape != survivors.shape or times.ndim != 1:
            raise ValueError("times and survivors must be matching 1-D arrays")
        if self.total <= 0:
            raise ValueError("total must be positive")
        if np.any(np.diff(survivors) > 0.0):
            raise ValueError("survivor counts must be non-increasing")
        for name, arr in (("times", times), ("survivors", survivors)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def survival(self) -> np.ndarray:
        return self.survivors / self.total

    @property
    def stderr(self) -> np.ndarray:
        p = self.survival
        return np.sqrt(p * (1.0 - p) / self.total)

    @classmethod
    def from_probabilities(cls, times, survival, total: float = 1e6) -> "SurvivalCurve":
        """Wrap an exact survival law as a curve with nominal counts."""
        survival = np.asarray(survival, dtype=float)
        return cls(np.asarray(times, dtype=float), survival * total, total)


def estimate_survival(records: list[MeasurementRecord], k: int) -> SurvivalCurve:
    """Empirical survival in bin ``k``: a record survives step i if its first
    i outcomes all equal k.

    All records must share one schedule.  The curve estimates the repeated-
    measurement survival law only when the records start pure in bin k; that
    is the caller's responsibility.
    """
    if not records:
        raise ValueError("empty ensemble")
    schedule = records[0].schedule
    if any(r.schedule != schedule for r in records):
        raise ValueError("records do not share a single schedule")
    outcomes = np.stack([r.outcomes for r in records])
    alive = np.logical_and.accumulate(outcomes == k, axis=1)
    survivors = np.concatenate(([len(records)], alive.sum(axis=0))).astype(float)
    times = schedule.dt * np.arange(schedule.steps + 1)
    return SurvivalCurve(times, survivors, float(len(records)))


@dataclass(frozen=True)
class FitWindow:
    """Points admitted to a decay fit: survival floor, minimum survivor
    count, and the resulting time range."""

    floor: float
    min_survivors: float
    n_points: int
    t_min: float
    t_max: float


@dataclass(frozen=True)
class FitResult:
    rate: float
    stderr: float
    window: FitWindow


def fit_decay(curve: SurvivalCurve, floor: float = 0.05, min_survivors: float = 10.0) -> FitResult:
    """Weighted least-squares fit of ``ln(survival)`` against time.

    Only points with survival >= floor and at least ``min_survivors``
    survivors qualify (log-linear fitting is ill-conditioned in the deep
    tail).  Weights are the inverse variances of ln(p̂),
    ``survivors*p/(1-p)``, with 1-p floored at half a count to cap the
    weight of points at p = 1.  Returns the decay rate (-slope) and its
    standard error; raises :class:`FitError` if fewer than three points
    qualify or the curve does not decay.
    """
    p = curve.survival
    keep = (p >= floor) & (p > 0.0) & (curve.survivors >= min_survivors)
    if keep.sum() < 3:
        raise FitError(f"only {int(keep.sum())} usable points (need 3)")
    t = curve.times[keep]
    pk = p[keep]
    if pk.max() == pk.min():
        raise FitError("survival curve does not decay over the fit window")
    y = np.log(pk)
    w = curve.survivors[keep] * pk / np.maximum(1.0 - pk, 0.5 / curve.total)
    t_bar = (w * t).sum() / w.sum()
    y_bar = (w * y).sum() / w.sum()
    s_tt = (w * (t - t_bar) ** 2).sum()
    slope = (w * (t - t_bar) * (y - y_bar)).sum() / s_tt
    if slope >= 0.0:
        raise FitError(f"fitted rate is not positive (slope = {slope!r})")
    window = FitWindow(floor, min_survivors, int(keep.sum()), float(t.min()), float(t.max()))
    return FitResult(-slope, math.sqrt(1.0 / s_tt), window)


@dataclass(frozen=True, eq=False)
class DwellStats:
    """Run-length decomposition of a fine-partition record.

    ``counts[n]`` is the number of outcomes equal to n (so the per-level dwell
    times are ``counts*dt`` and sum exactly to the record duration
    ``steps*dt``).  ``dwell_lengths[n]`` lists the maximal constant runs of n
    in record order, in units of dt; ``interior_dwell_lengths`` excludes the
    first and last run of the record, whose true extent is censored by the
    record boundaries.
    """

    steps: int
    dt: float
    counts: np.ndarray
    dwell_lengths: tuple[np.ndarray, ...]
    interior_dwell_lengths: tuple[np.ndarray, ...]

    @property
    def total_time(self) -> float:
        return self.steps * self.dt

    @property
    def time_per_bin(self) -> np.ndarray:
        return self.counts * self.dt

    @property
    def fractions(self) -> np.ndarray:
        return self.counts / self.steps


def dwell_statistics(record: MeasurementRecord) -> DwellStats:
    """Dwell-time statistics of one record (fine partitions only)."""
    partition = record.schedule.partition
    if not partition.is_fine:
        raise ValueError("dwell statistics require a fine partition")
    outcomes = record.outcomes
    counts = np.bincount(outcomes, minlength=partition.n_bins)
    ends = np.flatnonzero(np.diff(outcomes))
    starts = np.concatenate(([0], ends + 1))
    lengths = np.diff(np.concatenate((starts, [outcomes.size])))
    values = outcomes[starts]
    dwell = tuple(lengths[values == n] for n in range(partition.n_bins))
    interior_mask = np.ones(values.size, dtype=bool)
    interior_mask[0] = interior_mask[-1] = False
    interior = tuple(
        lengths[interior_mask & (values == n)] for n in range(partition.n_bins)
    )
    return DwellStats(record.schedule.steps, record.schedule.dt, counts, dwell, interior)


def time_average(record: MeasurementRecord, n: int) -> float:
    """Fraction of the record's outcomes equal to level ``n`` -- the discrete
    time average of the level-n occupation.  Equals
    ``dwell_statistics(record).fractions[n]`` exactly."""
    if not record.schedule.partition.is_fine:
        raise ValueError("time averages require a fine partition")
    return int(np.count_nonzero(record.outcomes == n)) / record.schedule.steps


def ks_distance(a, b) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    result = sps.ks_2samp(a, b, method="asymp")
    return float(result.statistic), float(result.pvalue)
