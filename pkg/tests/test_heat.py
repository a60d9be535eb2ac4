import numpy as np
import pytest

from heatwave.core import TraceSeries
from heatwave.experiments import heat_data, heat_eigen_error
from heatwave.heat import (HeatOperator, energy_identity_residual, flux_trace, ntd_apply,
                           ntd_free, ntd_matrix, solve_heat)
from heatwave.sobolev import trace_regularity


def _flux_t(n):
    op = HeatOperator(n)
    return ntd_apply(op, np.zeros(n + 1), TraceSeries.from_function(op.tgrid, lambda t: t)).values


def test_eigenmode_trace():
    errs = [heat_eigen_error(n) for n in (128, 256, 512)]
    assert errs[1] <= 5e-4
    assert np.log2(errs[0] / errs[1]) >= 1.8 and np.log2(errs[1] / errs[2]) >= 1.8


def test_linear_flux_self_convergence():
    # compare against a four times finer run; order 3/2 from the flux switch-on at t = 0
    errs = [np.max(np.abs(_flux_t(n) - _flux_t(4 * n)[::4])) for n in (64, 128, 256)]
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert errs[2] < 2e-5
    assert np.all(orders >= 1.4)


def test_energy_identity_first_order():
    res = []
    for n in (64, 128, 256):
        op = HeatOperator(n)
        u0 = np.sin(np.pi * (op.sgrid.x + 1) / 2)
        g = TraceSeries.from_function(op.tgrid, lambda t: np.sin(3 * t))
        res.append(np.max(np.abs(energy_identity_residual(solve_heat(op, u0, g), g))))
    orders = np.log2(np.array(res[:-1]) / res[1:])
    assert np.all(orders >= 0.95)


def test_crank_nicolson_midpoint_identity():
    # Crank-Nicolson conserves its own averaged energy identity up to the flux-node quadrature
    op = HeatOperator(128)
    u0 = np.sin(np.pi * (op.sgrid.x + 1) / 2)
    g = TraceSeries.zeros(op.tgrid)
    mid = np.max(np.abs(energy_identity_residual(solve_heat(op, u0, g), g, midpoint=True)))
    rect = np.max(np.abs(energy_identity_residual(solve_heat(op, u0, g), g)))
    assert mid < rect


def test_implicit_euler_maximum_principle():
    op = HeatOperator(64, scheme="implicit_euler")
    u0 = np.abs(np.sin(3 * np.pi * op.sgrid.x))
    u = solve_heat(op, u0).values
    assert u.max() <= u0.max() + 1e-14 and u.min() >= -1e-14


def test_ntd_matrix_is_lower_toeplitz():
    op = HeatOperator(32)
    mat = ntd_matrix(op)
    assert np.allclose(np.triu(mat, 1), 0)
    assert np.allclose(np.diag(mat), op.lam) and op.lam > 0
    for d in range(1, 5):
        diag = np.diag(mat, -d)
        assert np.allclose(diag, diag[0])


def test_ntd_matrix_matches_marching():
    op = HeatOperator(32)
    rng = np.random.default_rng(0)
    g = np.concatenate([[0.0], rng.normal(size=32)])
    direct = ntd_apply(op, np.zeros(33), g).values
    np.testing.assert_allclose(ntd_matrix(op) @ g[1:], direct[1:], atol=1e-12)


def test_flux_trace_returns_prescribed_flux():
    op = HeatOperator(256)
    g = TraceSeries.from_function(op.tgrid, lambda t: np.sin(2 * t))
    u0 = np.zeros(257)
    got = flux_trace(solve_heat(op, u0, g)).values
    assert np.max(np.abs(got[10:] - g.values[10:])) < 5e-2


def test_input_validation():
    op = HeatOperator(16)
    with pytest.raises(ValueError):
        ntd_apply(op, np.ones(17))
    with pytest.raises(ValueError):
        ntd_apply(op, np.zeros(10))
    with pytest.raises(ValueError):
        HeatOperator(16, scheme="explicit")


def test_free_trace_regularity():
    # u0 in H^{3/2} gives a free trace with exponent r1/2 + 1/4 = 1
    n = 2048
    op = HeatOperator(n, scheme="implicit_euler")
    est = trace_regularity(ntd_free(op, heat_data(1.5, n, n, 0, 0.05)))
    assert abs(est.s_hat - 1.0) <= 0.3
    assert est.r_squared >= 0.9
