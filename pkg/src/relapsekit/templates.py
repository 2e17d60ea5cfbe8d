"""Daily 24-point signal templates and their window-level aggregates.

A daily template holds the hourly averages of one signal for one
patient-day. Over a feature window the daily templates are aggregated
hour-by-hour into a mean template, a deviation template, and a maximum
template, from which all rhythm statistics derive. Missing hours stay
missing (NaN) throughout; statistics use present slots only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date as Date
from typing import Iterable, Sequence

import numpy as np

from .model import HourlySample, Signal

HOURS_PER_DAY = 24

# Inclusive hour bounds of the weighted (daytime) distance: 9 AM - 9 PM.
DAYTIME_HOURS = (9, 21)


@dataclass(frozen=True)
class DailyTemplate:
    """Hourly averages of one signal for one patient-day; NaN = no samples."""

    patient_id: str
    date: Date
    signal: Signal
    hours: np.ndarray

    def __post_init__(self) -> None:
        if self.hours.shape != (HOURS_PER_DAY,):
            raise ValueError(f"template needs {HOURS_PER_DAY} slots, got {self.hours.shape}")


@dataclass(frozen=True)
class WindowTemplates:
    """Per-hour mean / deviation / maximum templates over one feature window."""

    signal: Signal
    mdt: np.ndarray
    ddt: np.ndarray
    mxdt: np.ndarray
    days_present: int


def build_daily_template(
    samples: Iterable[HourlySample],
    *,
    patient_id: str | None = None,
    date: Date | None = None,
    signal: Signal | None = None,
) -> DailyTemplate:
    """Average hourly samples of one patient-day-signal into a 24-slot template.

    All samples must share the same key; key arguments are only required when
    `samples` is empty (a known day with no recordings).
    """
    samples = list(samples)
    if samples:
        first = samples[0]
        patient_id, date, signal = first.patient_id, first.date, first.signal
        for s in samples[1:]:
            if (s.patient_id, s.date, s.signal) != (patient_id, date, signal):
                raise ValueError(
                    f"mixed sample keys: ({s.patient_id}, {s.date}, {s.signal.value}) vs "
                    f"({patient_id}, {date}, {signal.value})"
                )
    elif patient_id is None or date is None or signal is None:
        raise ValueError("empty input requires explicit patient_id, date, and signal")

    totals = np.zeros(HOURS_PER_DAY)
    counts = np.zeros(HOURS_PER_DAY)
    for s in samples:
        totals[s.hour] += s.value
        counts[s.hour] += 1
    hours = np.full(HOURS_PER_DAY, np.nan)
    present = counts > 0
    hours[present] = totals[present] / counts[present]
    return DailyTemplate(patient_id=patient_id, date=date, signal=signal, hours=hours)


def compute_window_templates(
    daily_templates: Sequence[DailyTemplate], signal: Signal
) -> WindowTemplates:
    """Aggregate a window's daily templates hour-by-hour.

    Per hour, over the days where that hour is present: mean, population
    standard deviation, and maximum. A slot is missing iff no contributing
    day has it. Empty input yields all-missing templates.
    """
    for t in daily_templates:
        if t.signal != signal:
            raise ValueError(f"template signal {t.signal.value} does not match {signal.value}")
    if not daily_templates:
        empty = np.full(HOURS_PER_DAY, np.nan)
        return WindowTemplates(signal, empty.copy(), empty.copy(), empty.copy(), 0)

    stack = np.stack([t.hours for t in daily_templates])
    present = ~np.isnan(stack)
    counts = present.sum(axis=0)
    filled = np.where(present, stack, 0.0)

    with np.errstate(invalid="ignore", divide="ignore"):
        mdt = np.where(counts > 0, filled.sum(axis=0) / counts, np.nan)
        centered_sq = np.where(present, (stack - mdt) ** 2, 0.0)
        ddt = np.where(counts > 0, np.sqrt(centered_sq.sum(axis=0) / counts), np.nan)
    mxdt = np.where(counts > 0, np.where(present, stack, -np.inf).max(axis=0), np.nan)
    # Hourly means can overshoot the hourly max by float rounding; clamp so
    # the mxdt >= mdt invariant holds exactly.
    mdt = np.where(counts > 0, np.minimum(mdt, mxdt), np.nan)

    days_present = int(present.any(axis=1).sum())
    return WindowTemplates(signal, mdt, ddt, mxdt, days_present)


def mdt_stats(template: np.ndarray) -> np.ndarray:
    """Mean, population std, max, range, skewness, and excess kurtosis.

    Computed over present slots only; all six are NaN for an all-missing
    template. Skewness and kurtosis are 0 for a constant template.
    """
    values = template[~np.isnan(template)]
    if values.size == 0:
        return np.full(6, np.nan)
    mean = float(values.mean())
    maximum = float(values.max())
    minimum = float(values.min())
    rng = maximum - minimum
    if maximum == minimum:
        return np.array([mean, 0.0, maximum, 0.0, 0.0, 0.0])
    centered = values - mean
    m2 = max(float((centered**2).mean()), 0.0)
    if m2 == 0.0:
        return np.array([mean, 0.0, maximum, rng, 0.0, 0.0])
    skew = float((centered**3).mean()) / m2**1.5
    kurt = float((centered**4).mean()) / m2**2 - 3.0
    return np.array([mean, math.sqrt(m2), maximum, rng, skew, kurt])


def ddt_mean(template: np.ndarray) -> float:
    """Mean of the deviation template over present slots; NaN if none."""
    values = template[~np.isnan(template)]
    return float(values.mean()) if values.size else float("nan")


def max_abs_diff(mdt: np.ndarray, mxdt: np.ndarray) -> float:
    """Largest |mdt - mxdt| over hours present in both; NaN if none shared."""
    both = ~np.isnan(mdt) & ~np.isnan(mxdt)
    if not both.any():
        return float("nan")
    return float(np.abs(mdt[both] - mxdt[both]).max())


def normalize_template(template: np.ndarray) -> np.ndarray:
    """Divide present slots by their maximum; a non-positive maximum maps
    every present slot to 0. Missing slots stay missing."""
    out = template.astype(float).copy()
    present = ~np.isnan(out)
    if not present.any():
        return out
    peak = out[present].max()
    if peak <= 0:
        out[present] = 0.0
    else:
        out[present] = out[present] / peak
    return out


def template_distance(
    curr: np.ndarray, prev: np.ndarray, hour_lo: int = 0, hour_hi: int = HOURS_PER_DAY - 1
) -> float:
    """Sum of squared slot differences over [hour_lo, hour_hi].

    Slots missing in either template contribute 0; NaN when the two
    templates share no present hour in the range. Inputs are expected to be
    normalized when used as distance features.
    """
    if not 0 <= hour_lo <= hour_hi <= HOURS_PER_DAY - 1:
        raise ValueError(f"invalid hour range [{hour_lo}, {hour_hi}]")
    c = curr[hour_lo : hour_hi + 1]
    p = prev[hour_lo : hour_hi + 1]
    both = ~np.isnan(c) & ~np.isnan(p)
    if not both.any():
        return float("nan")
    diff = c[both] - p[both]
    return float((diff**2).sum())


def daily_average_stats(daily_templates: Sequence[DailyTemplate]) -> tuple[float, float]:
    """Mean and population std of the per-day signal averages.

    A day's average is the mean of its present slots; days with no samples
    are skipped. Returns (NaN, NaN) when no day has data.
    """
    averages = []
    for t in daily_templates:
        values = t.hours[~np.isnan(t.hours)]
        if values.size:
            averages.append(values.mean())
    if not averages:
        return float("nan"), float("nan")
    arr = np.array(averages)
    return float(arr.mean()), float(arr.std())
