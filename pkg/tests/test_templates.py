from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import day
from relapsekit.model import HourlySample, Signal
from relapsekit.templates import (
    DailyTemplate,
    build_daily_template,
    compute_window_templates,
    daily_average_stats,
    ddt_mean,
    max_abs_diff,
    mdt_stats,
    normalize_template,
    template_distance,
)

CALL = Signal.CALL_DURATION


def template_of(present: dict[int, float], d: int = 0) -> DailyTemplate:
    hours = np.full(24, np.nan)
    for h, v in present.items():
        hours[h] = v
    return DailyTemplate("p1", day(d), CALL, hours)


def hours_array(present: dict[int, float]) -> np.ndarray:
    hours = np.full(24, np.nan)
    for h, v in present.items():
        hours[h] = v
    return hours


# -- build_daily_template ----------------------------------------------------


def test_single_sample_fills_one_slot():
    t = build_daily_template([HourlySample("p1", day(0), 3, CALL, 5.0)])
    assert t.hours[3] == 5.0
    assert np.isnan(np.delete(t.hours, 3)).all()


def test_duplicate_hours_are_averaged():
    t = build_daily_template(
        [
            HourlySample("p1", day(0), 3, CALL, 2.0),
            HourlySample("p1", day(0), 3, CALL, 4.0),
        ]
    )
    assert t.hours[3] == 3.0


def test_empty_input_for_known_day_is_all_missing():
    t = build_daily_template([], patient_id="p1", date=day(0), signal=CALL)
    assert np.isnan(t.hours).all()


def test_empty_input_without_key_rejected():
    with pytest.raises(ValueError):
        build_daily_template([])


def test_mixed_keys_rejected():
    with pytest.raises(ValueError, match="mixed"):
        build_daily_template(
            [
                HourlySample("p1", day(0), 3, CALL, 2.0),
                HourlySample("p1", day(1), 3, CALL, 4.0),
            ]
        )


# -- compute_window_templates ------------------------------------------------


def test_two_day_aggregates_match_hand_computation():
    # hour 3 values {2, 4}: mean 3, population std 1, max 4
    wt = compute_window_templates([template_of({3: 2.0}), template_of({3: 4.0}, d=1)], CALL)
    assert wt.mdt[3] == 3.0
    assert wt.ddt[3] == 1.0
    assert wt.mxdt[3] == 4.0
    assert wt.days_present == 2
    assert np.isnan(wt.mdt[4])


def test_single_day_window_has_zero_deviation():
    wt = compute_window_templates([template_of({3: 2.0, 9: 7.0})], CALL)
    present = ~np.isnan(wt.ddt)
    assert (wt.ddt[present] == 0.0).all()
    assert np.array_equal(wt.mxdt[present], wt.mdt[present])


def test_empty_window_is_all_missing():
    wt = compute_window_templates([], CALL)
    assert np.isnan(wt.mdt).all() and np.isnan(wt.ddt).all() and np.isnan(wt.mxdt).all()
    assert wt.days_present == 0


def test_window_templates_reject_other_signal():
    with pytest.raises(ValueError):
        compute_window_templates([template_of({3: 1.0})], Signal.SOUND_LEVEL)


# -- mdt_stats ----------------------------------------------------------------


def test_constant_template_stats():
    stats = mdt_stats(np.full(24, 5.0))
    assert stats.tolist() == [5.0, 0.0, 5.0, 0.0, 0.0, 0.0]


def test_hour_index_template_stats_match_direct_moments():
    # Oracle: direct moment computation on 0..23 with pure-python loops.
    values = list(range(24))
    mean = sum(values) / 24
    m2 = sum((v - mean) ** 2 for v in values) / 24
    m3 = sum((v - mean) ** 3 for v in values) / 24
    m4 = sum((v - mean) ** 4 for v in values) / 24
    expected = [mean, math.sqrt(m2), 23.0, 23.0, m3 / m2**1.5, m4 / m2**2 - 3.0]

    stats = mdt_stats(np.arange(24, dtype=float))
    assert stats[0] == pytest.approx(11.5)
    assert stats[2] == 23.0
    assert stats[3] == 23.0
    np.testing.assert_allclose(stats, expected, rtol=1e-12)


def test_single_slot_stats():
    stats = mdt_stats(hours_array({5: 7.0}))
    assert stats.tolist() == [7.0, 0.0, 7.0, 0.0, 0.0, 0.0]


def test_all_missing_stats_are_missing():
    assert np.isnan(mdt_stats(np.full(24, np.nan))).all()


# -- ddt_mean / max_abs_diff ---------------------------------------------------


def test_ddt_mean_examples():
    assert ddt_mean(np.zeros(24)) == 0.0
    assert ddt_mean(hours_array({0: 1.0, 1: 3.0})) == 2.0
    assert math.isnan(ddt_mean(np.full(24, np.nan)))


def test_max_abs_diff_examples():
    t = np.full(24, 3.0)
    assert max_abs_diff(t, t) == 0.0
    assert max_abs_diff(hours_array({3: 3.0}), hours_array({3: 4.0})) == 1.0
    assert math.isnan(max_abs_diff(hours_array({3: 3.0}), hours_array({5: 4.0})))


# -- normalize_template ---------------------------------------------------------


def test_normalize_examples():
    out = normalize_template(hours_array({0: 2.0, 1: 4.0}))
    assert out[0] == 0.5 and out[1] == 1.0
    assert np.isnan(out[2])

    assert (normalize_template(np.zeros(24)) == 0.0).all()
    assert (normalize_template(np.full(24, 3.0)) == 1.0).all()


def test_normalize_preserves_missing_and_input():
    t = hours_array({0: 2.0, 1: 4.0})
    before = t.copy()
    normalize_template(t)
    np.testing.assert_array_equal(np.isnan(t), np.isnan(before))
    np.testing.assert_array_equal(t[~np.isnan(t)], before[~np.isnan(before)])


# -- template_distance ----------------------------------------------------------


def test_distance_zero_for_identical():
    t = normalize_template(np.arange(24, dtype=float))
    assert template_distance(t, t) == 0.0


def test_distance_unit_terms():
    assert template_distance(np.ones(24), np.zeros(24)) == 24.0
    assert template_distance(np.ones(24), np.zeros(24), 9, 21) == 13.0


def test_distance_missing_slot_contributes_zero():
    curr = np.ones(24)
    prev = np.zeros(24)
    prev[5] = np.nan
    assert template_distance(curr, prev) == 23.0


def test_distance_no_overlap_is_missing():
    assert math.isnan(template_distance(hours_array({0: 1.0}), hours_array({1: 1.0})))


def test_distance_invalid_range_rejected():
    with pytest.raises(ValueError):
        template_distance(np.ones(24), np.ones(24), 5, 3)


# -- daily_average_stats ----------------------------------------------------------


def test_daily_average_stats_examples():
    two = [template_of({0: 2.0}), template_of({0: 4.0}, d=1)]
    assert daily_average_stats(two) == (3.0, 1.0)

    one = [template_of({0: 2.0, 5: 4.0})]
    assert daily_average_stats(one) == (3.0, 0.0)

    mean, std = daily_average_stats([])
    assert math.isnan(mean) and math.isnan(std)


# -- randomized property suite -------------------------------------------------


def random_window(rng: np.random.Generator, n_days: int | None = None) -> list[DailyTemplate]:
    n_days = int(rng.integers(0, 29)) if n_days is None else n_days
    out = []
    for d in range(n_days):
        hours = rng.gamma(2.0, 2.0, size=24)
        hours[rng.random(24) < rng.uniform(0.0, 0.6)] = np.nan
        out.append(DailyTemplate("p1", day(d), CALL, hours))
    return out


def check_window_invariants(daily: list[DailyTemplate]) -> None:
    wt = compute_window_templates(daily, CALL)
    both = ~np.isnan(wt.mdt)
    assert np.array_equal(both, ~np.isnan(wt.ddt))
    assert np.array_equal(both, ~np.isnan(wt.mxdt))
    assert (wt.mxdt[both] >= wt.mdt[both]).all()
    assert (wt.mdt[both] >= 0.0).all()
    assert (wt.ddt[both] >= 0.0).all()

    norm = normalize_template(wt.mdt)
    present = ~np.isnan(norm)
    if present.any():
        assert (norm[present] >= 0.0).all() and (norm[present] <= 1.0).all()
        if np.nanmax(wt.mdt) > 0:
            assert norm[present].max() == 1.0


def test_randomized_window_invariants(rng):
    for _ in range(300):
        check_window_invariants(random_window(rng))


def test_distance_symmetry_and_zero_iff_equal(rng):
    for _ in range(200):
        a = normalize_template(random_window(rng, 5)[0].hours if rng.random() < 0.5 else rng.gamma(2, 2, 24))
        b = normalize_template(rng.gamma(2.0, 2.0, size=24))
        d_ab = template_distance(a, b)
        d_ba = template_distance(b, a)
        assert d_ab == d_ba
        overlap = ~np.isnan(a) & ~np.isnan(b)
        if overlap.any():
            agrees = np.array_equal(a[overlap], b[overlap])
            assert (d_ab == 0.0) == agrees
        w = template_distance(a, b, 9, 21)
        if not math.isnan(w) and not math.isnan(d_ab):
            assert w <= d_ab + 1e-12


def test_statistics_invariant_under_reordering(rng):
    # Reordering permutes float summation order, so compare at 1e-12 rather
    # than bit-for-bit; the pipeline itself always passes date-ordered days.
    daily = random_window(rng, 10)
    shuffled = list(daily)
    rng.shuffle(shuffled)
    a = compute_window_templates(daily, CALL)
    b = compute_window_templates(shuffled, CALL)
    np.testing.assert_allclose(a.mdt, b.mdt, rtol=1e-12, equal_nan=True)
    np.testing.assert_allclose(a.ddt, b.ddt, rtol=1e-12, atol=1e-12, equal_nan=True)
    np.testing.assert_array_equal(a.mxdt, b.mxdt)
    assert a.days_present == b.days_present


def test_scaling_samples_scales_aggregates_but_not_normalized(rng):
    for _ in range(50):
        daily = random_window(rng, 8)
        if not daily:
            continue
        c = float(rng.uniform(0.1, 10.0))
        scaled = [
            DailyTemplate(t.patient_id, t.date, t.signal, t.hours * c) for t in daily
        ]
        a = compute_window_templates(daily, CALL)
        b = compute_window_templates(scaled, CALL)
        np.testing.assert_allclose(b.mdt, a.mdt * c, rtol=1e-9, equal_nan=True)
        np.testing.assert_allclose(b.ddt, a.ddt * c, rtol=1e-9, atol=1e-12, equal_nan=True)
        np.testing.assert_allclose(b.mxdt, a.mxdt * c, rtol=1e-9, equal_nan=True)
        na = normalize_template(a.mdt)
        nb = normalize_template(b.mdt)
        np.testing.assert_allclose(nb, na, rtol=1e-9, equal_nan=True)
