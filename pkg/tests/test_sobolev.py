import math

import numpy as np
import pytest

from heatwave.core import Field, TraceSeries, make_grids
from heatwave.sobolev import (EstimationError, dyadic_energies, estimate_regularity,
                              parabolic_norm, sine_coeffs, sine_eval, sobolev_norm, synthesize,
                              time_trace_coeffs, trace_regularity, v_norm)


def test_parabola_coefficients_match_closed_form():
    # x(1-x) = sum_k 2 sqrt2 (1 - (-1)^k) / (k pi)^3 * sqrt2 sin(k pi x)
    errs = []
    for n in (64, 256, 1024):
        x = np.linspace(0, 1, n + 1)
        c = sine_coeffs(x * (1 - x))
        k = np.arange(1, n)
        exact = 2 * math.sqrt(2) * (1 - (-1.0) ** k) / (k * np.pi) ** 3
        errs.append(np.max(np.abs(c - exact)))
    assert errs[0] < 1e-6
    assert errs[2] < 1e-9
    assert errs[0] > errs[1] > errs[2]


def test_sine_round_trip():
    rng = np.random.default_rng(3)
    c = rng.normal(size=63)
    np.testing.assert_allclose(sine_coeffs(sine_eval(c, 64)), c, atol=1e-12)


def test_sine_coeffs_rejects_nonzero_ends():
    with pytest.raises(ValueError):
        sine_coeffs(np.ones(9))


def test_synthesized_series_is_rough_at_target():
    # H^2 data with margin 1/4: critical exponent 2.25
    for seed in (0, 1, 2):
        est = estimate_regularity(synthesize(2.0, 64, seed).coeffs)
        assert abs(est.s_hat - 2.25) <= 0.25


def test_l2_converges_but_half_norm_diverges_at_zero():
    data = synthesize(0.0, 1024, 7)
    a = data.coeffs
    k = np.arange(1, len(a) + 1)
    l2 = [np.sum(a[:m] ** 2) for m in (256, 512, 1024)]
    half = [np.sum(k[:m] * a[:m] ** 2) for m in (256, 512, 1024)]
    assert l2[2] - l2[1] < 0.75 * (l2[1] - l2[0])
    assert half[2] - half[1] > 1.3 * (half[1] - half[0])


def test_norm_converges_below_and_grows_above_critical():
    data = synthesize(1.5, 1024, 3)
    below = [sobolev_norm(data.coeffs[:m], 1.4) for m in (256, 512, 1024)]
    above = [sobolev_norm(data.coeffs[:m], 1.8) for m in (256, 512, 1024)]
    assert below[2] == pytest.approx(7.371, abs=5e-3)
    assert below[2] - below[1] < below[1] - below[0]
    assert above[2] - above[1] > 1.0 and above[1] - above[0] > 1.0


def test_synthesized_data_vanish_with_odd_derivatives():
    data = synthesize(2.0, 512, 0)
    assert abs(data(0.0)) < 1e-10 and abs(data(1.0)) < 1e-10
    assert abs(data.evaluate(np.array([0.0]), 1)[0]) < 1e-8
    assert data.critical_s == 2.25


def test_power_law_estimates():
    k = np.arange(1, 2049, dtype=float)
    assert estimate_regularity(k ** -2.0).s_hat == pytest.approx(1.5, abs=0.05)
    assert estimate_regularity(k ** -0.5).s_hat == pytest.approx(0.0, abs=0.05)
    with pytest.raises(EstimationError):
        estimate_regularity(np.ones(8))


def test_dyadic_blocks_are_complete():
    e = dyadic_energies(np.ones(10))
    np.testing.assert_array_equal(e, [1, 2, 4])


def test_smooth_taper_traces_read_high():
    _, _, tg = make_grids(1024)
    for func in (lambda t: np.sin(np.pi * t), lambda t: t):
        est = estimate_regularity(time_trace_coeffs(TraceSeries.from_function(tg, func)))
        assert est.s_hat >= 2
        with pytest.raises(EstimationError):
            trace_regularity(TraceSeries.from_function(tg, func))


def test_trace_must_start_at_zero():
    _, _, tg = make_grids(64)
    with pytest.raises(ValueError):
        time_trace_coeffs(TraceSeries.from_function(tg, lambda t: 1 + t))


@pytest.mark.parametrize("alpha", [0.25, 0.75, 1.25, 1.75, 2.25])
def test_power_trace_exponent(alpha):
    # t^alpha lies in H^s_00(0, 1) exactly for s < alpha + 1/2
    _, _, tg = make_grids(1024)
    est = trace_regularity(TraceSeries.from_function(tg, lambda t: t ** alpha))
    assert est.window == "start"
    assert est.r_squared >= 0.98
    assert abs(est.s_hat - (alpha + 0.5)) <= 0.2


def test_trace_too_short():
    _, _, tg = make_grids(32)
    with pytest.raises(EstimationError):
        trace_regularity(TraceSeries.zeros(tg))


def test_parabolic_norm_of_eigenmode():
    exact = math.sqrt((1 - math.exp(-np.pi**2 / 2)) / np.pi**2)
    vals = []
    for n in (64, 128, 256):
        sg, _, tg = make_grids(n)
        u = np.exp(-np.pi**2 * tg.t[:, None] / 4) * np.sin(np.pi * (sg.x[None, :] + 1) / 2)
        vals.append(parabolic_norm(Field(sg, tg, u), 0.0))
    errs = [abs(v - exact) for v in vals]
    assert errs[-1] < 1e-4
    assert errs[0] > errs[1] > errs[2]


def test_wave_norm_of_standing_wave():
    exact = math.sqrt((1 + np.pi**2) / 2) + np.pi / math.sqrt(2)
    vals = []
    for n in (64, 128, 256):
        _, wg, tg = make_grids(n)
        v = np.sin(np.pi * wg.x[None, :]) * np.cos(np.pi * tg.t[:, None])
        vals.append(v_norm(Field(wg, tg, v), 1.0))
    assert abs(vals[-1] - exact) < 5e-4
    assert abs(vals[0] - exact) > abs(vals[-1] - exact)
    _, wg, tg = make_grids(64)
    v = np.sin(np.pi * wg.x[None, :]) * np.cos(np.pi * tg.t[:, None])
    assert v_norm(Field(wg, tg, v), 0.0) == pytest.approx(math.sqrt(0.5), abs=1e-3)


def test_parabolic_norm_smooth_field_with_flux():
    # a smooth field with nonzero flux at x = 0 keeps a bounded norm under refinement
    vals = []
    for n in (64, 128, 256):
        sg, _, tg = make_grids(n)
        u = np.sin(np.pi * tg.t[:, None] / 2) * np.sin(np.pi * (sg.x[None, :] + 1) / 4)
        vals.append(parabolic_norm(Field(sg, tg, u), 1.5))
    assert abs(vals[2] - vals[1]) < abs(vals[1] - vals[0])
    assert abs(vals[2] - vals[1]) < 1e-2 * vals[2]
