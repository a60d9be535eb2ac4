"""Data of prescribed Sobolev regularity and spectral regularity estimates.

Everything is expressed in the orthonormal sine basis sqrt(2) sin(k pi x) on
a unit interval.  A function with coefficients decaying like k^(-p) lies in
H^s exactly for s < p - 1/2, which is what the dyadic block estimator
measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import dst

from .core import Field, HEAT, TraceSeries

ENDPOINT_TOL = 1e-10


class EstimationError(RuntimeError):
    """Too few usable dyadic blocks to fit a decay rate."""


# --- smooth cutoffs -------------------------------------------------------


def _psi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _dpsi(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos]) / x[pos] ** 2
    return out


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, all derivatives flat at both ends."""
    a, b = _psi(x), _psi(1.0 - np.asarray(x, dtype=float))
    return a / (a + b)


def _smooth_step_deriv(x):
    x = np.asarray(x, dtype=float)
    a, b = _psi(x), _psi(1.0 - x)
    da, db = _dpsi(x), -_dpsi(1.0 - x)
    return (da * b - a * db) / (a + b) ** 2


def taper_window(t, t_end: float = 1.0, plateau: float = 0.8):
    """Equal to 1 on [0, plateau*t_end], decays smoothly to 0 at t_end."""
    t = np.asarray(t, dtype=float)
    return 1.0 - smooth_step((t / t_end - plateau) / (1.0 - plateau))


# Boundary correctors y^j/j! * exp(-y^2 / (2 sigma^2)).  A Gaussian factor
# keeps the corrector spectrum negligible beyond a few modes, unlike a compactly
# supported cutoff whose transition leaks energy into the mid-range modes that
# the regularity fit relies on.  At the far end it is below 1e-15.
_CORRECTOR_WIDTH = 0.12


def _corrector(y, order, derivative=0):
    """y^order/order! times the Gaussian factor, or its first derivative."""
    y = np.asarray(y, dtype=float)
    gauss = np.exp(-0.5 * (y / _CORRECTOR_WIDTH) ** 2)
    mono = y**order / math.factorial(order)
    if derivative == 0:
        return mono * gauss
    dmono = y ** (order - 1) / math.factorial(order - 1)
    return (dmono - y * mono / _CORRECTOR_WIDTH**2) * gauss


def _corrector_jet(order, m):
    """m-th derivative at 0 of the corrector of the given order."""
    if m < order or (m - order) % 2:
        return 0.0
    i = (m - order) // 2
    coef = (-0.5 / _CORRECTOR_WIDTH**2) ** i / (math.factorial(i) * math.factorial(order))
    return coef * math.factorial(m)


# --- synthesized data -----------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Sine series sum_k a_k sqrt(2) sin(k pi x) on (0, 1), made H^s_0 at the ends.

    A raw sine series has vanishing even derivatives at 0 and 1 but generic
    odd ones.  For s > 3/2 membership in H^s_0 also needs the odd
    derivatives of order j < s - 1/2 to vanish, so those are removed with
    odd Taylor correctors ``y^j/j! * exp(-y^2 / (2 sigma^2))``.  The
    correctors are smooth, so the critical exponent is unchanged.
    """

    coeffs: np.ndarray
    target_s: float
    margin_delta: float
    corrected_orders: tuple = ()
    left_jets: tuple = ()
    right_jets: tuple = ()

    @property
    def n_modes(self) -> int:
        return len(self.coeffs)

    @property
    def critical_s(self) -> float:
        return self.target_s + self.margin_delta

    def series(self, x, derivative: int = 0) -> np.ndarray:
        """Raw sine series (no correctors) or its first derivative."""
        x = np.asarray(x, dtype=float)
        k = np.arange(1, self.n_modes + 1)
        out = np.zeros(x.shape)
        # chunk over modes to bound memory for long x
        for lo in range(0, self.n_modes, 256):
            kk = k[lo:lo + 256]
            arg = np.pi * np.multiply.outer(x, kk)
            a = self.coeffs[lo:lo + 256] * math.sqrt(2.0)
            if derivative == 0:
                out += np.sin(arg) @ a
            else:
                out += np.cos(arg) @ (a * np.pi * kk)
        return out

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)

    def evaluate(self, x, derivative: int = 0) -> np.ndarray:
        if derivative not in (0, 1):
            raise ValueError("only derivative 0 or 1 is supported")
        x = np.asarray(x, dtype=float)
        out = self.series(x, derivative)
        for order, d0, d1 in zip(self.corrected_orders, self.left_jets, self.right_jets):
            out -= d0 * _corrector(x, order, derivative)
            # corrector mirrored at x=1; odd order flips sign of the jet
            sign = 1.0 if derivative == 0 else -1.0
            out += sign * d1 * _corrector(1.0 - x, order, derivative)
        return out

    def on_heat_grid(self, x) -> np.ndarray:
        """Evaluate on (-1, 0) through the shift y = x + 1."""
        return self.evaluate(np.asarray(x) + 1.0)


def _odd_jets(coeffs, order):
    k = np.arange(1, len(coeffs) + 1)
    base = math.sqrt(2.0) * coeffs * (k * np.pi) ** order * (-1.0) ** ((order - 1) // 2)
    left = float(np.sum(base))
    right = float(np.sum(base * (-1.0) ** k))
    return left, right


def _corrector_weights(jets, orders):
    """Weights d_j with sum_l d_l * C_l^{(j)}(0) = jet_j; triangular since C_j^{(j)}(0) = 1."""
    weights = []
    for j, jet in zip(orders, jets):
        weights.append(jet - sum(d * _corrector_jet(l, j) for l, d in zip(orders, weights)))
    return weights


def synthesize(target_s: float, n_modes: int, seed: int, margin_delta: float = 0.25,
               h0_correct: bool = True, signs: str = "random") -> SpectralData:
    """Sine series with |a_k| = k^(-target_s - 1/2 - margin_delta).

    The result lies in H^sigma_0 for sigma < target_s + margin_delta and in no
    H^sigma beyond.  With ``signs="random"`` the signs come from
    ``numpy.random.default_rng(seed)`` and the first mode is always +1; the
    roughness is then spread over the whole interval.  ``signs="coherent"``
    uses (-1)^(k+1), which concentrates the whole singularity at x = 1.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be positive")
    if target_s < -2:
        raise ValueError("target_s below -2 is not supported")
    rng = np.random.default_rng(seed)
    k = np.arange(1, n_modes + 1, dtype=float)
    if signs == "random":
        sign = rng.choice([-1.0, 1.0], size=n_modes)
        sign[0] = 1.0
    elif signs == "coherent":
        sign = (-1.0) ** (k + 1)
    else:
        raise ValueError(f"unknown sign pattern {signs!r}")
    coeffs = sign * k ** (-target_s - 0.5 - margin_delta)
    orders, lefts, rights = [], [], []
    if h0_correct:
        crit = target_s + margin_delta
        order = 1
        while order < crit - 0.5:
            orders.append(order)
            order += 2
        jets = [_odd_jets(coeffs, j) for j in orders]
        lefts = _corrector_weights([a for a, _ in jets], orders)
        rights = _corrector_weights([b for _, b in jets], orders)
    coeffs.setflags(write=False)
    return SpectralData(coeffs, float(target_s), float(margin_delta),
                        tuple(orders), tuple(lefts), tuple(rights))


# --- transforms and norms -------------------------------------------------


def sine_coeffs(samples, check_endpoints: bool = True) -> np.ndarray:
    """Orthonormal DST-I coefficients of nodal samples on [0, 1].

    ``samples`` holds N+1 values including both endpoints; the N-1 returned
    coefficients satisfy f_j = sum_k c_k sqrt(2) sin(k pi j / N).
    """
    f = np.asarray(samples, dtype=float)
    if f.ndim != 1 or len(f) < 3:
        raise ValueError("need at least three samples")
    if check_endpoints and (abs(f[0]) > ENDPOINT_TOL or abs(f[-1]) > ENDPOINT_TOL):
        raise ValueError(f"samples must vanish at both endpoints, got {f[0]:.3e}, {f[-1]:.3e}")
    n = len(f) - 1
    return dst(f[1:-1], type=1, norm="ortho") / math.sqrt(n)


def sine_eval(coeffs, n: int) -> np.ndarray:
    """Inverse of :func:`sine_coeffs` on the n-cell grid (endpoints included)."""
    c = np.zeros(n - 1)
    m = min(len(coeffs), n - 1)
    c[:m] = coeffs[:m]
    out = np.zeros(n + 1)
    out[1:-1] = dst(c, type=1, norm="ortho") * math.sqrt(n)
    return out


def sobolev_norm(coeffs, s: float, length: float = 1.0) -> float:
    """( sum_k (1 + (k pi / length)^2)^s |c_k|^2 )^(1/2)."""
    if not -2 <= s <= 6:
        raise ValueError(f"s={s} outside [-2, 6]")
    c = np.asarray(coeffs, dtype=float)
    k = np.arange(1, len(c) + 1)
    weights = (1.0 + (k * np.pi / length) ** 2) ** s
    return float(math.sqrt(np.sum(weights * c**2)))


@dataclass(frozen=True)
class RegularityEstimate:
    s_hat: float
    slope: float
    r_squared: float
    blocks_used: int
    block_energies: tuple = ()
    window: str = ""


def dyadic_energies(coeffs) -> np.ndarray:
    """E_j = sum of c_k^2 over 2^j <= k < 2^(j+1), complete blocks only."""
    c = np.asarray(coeffs, dtype=float)
    n_blocks = int(math.floor(math.log2(len(c) + 1)))
    energies = np.empty(n_blocks)
    for j in range(n_blocks):
        energies[j] = np.sum(c[2**j - 1:2 ** (j + 1) - 1] ** 2)
    return energies


def estimate_regularity(coeffs, j_min: int = 2, j_max: int | None = None,
                        floor: float = 1e-28, rel_floor: float = 1e-26) -> RegularityEstimate:
    """Fit log2 E_j = a + beta j and report s_hat = -beta/2.

    For c_k ~ k^(-p) the block energies scale like 2^(j(1-2p)), so -beta/2
    equals p - 1/2, the critical Sobolev exponent.  ``j_min``/``j_max``
    restrict the fit to an index window; the first two blocks (k < 4) are
    skipped by default because their sums are far from the asymptotic
    integral and bias steep decay rates upward.  Blocks below ``floor`` or
    below ``rel_floor`` times the largest block are round-off and dropped.
    """
    c = np.asarray(coeffs, dtype=float)
    if len(c) < 32:
        raise EstimationError(f"need at least 32 coefficients, got {len(c)}")
    return fit_block_energies(dyadic_energies(c), j_min, j_max, floor, rel_floor)


def fit_block_energies(energies, j_min: int = 2, j_max: int | None = None,
                       floor: float = 1e-28, rel_floor: float = 1e-26,
                       noise=None) -> RegularityEstimate:
    """Least-squares slope of log2 block energies; ``noise`` is a per-block round-off level."""
    energies = np.asarray(energies, dtype=float)
    j = np.arange(len(energies))
    cut = max(floor, rel_floor * float(np.max(energies)))
    use = (energies > cut) & (j >= j_min)
    if noise is not None:
        use &= energies > NOISE_MARGIN * np.asarray(noise, dtype=float)
    if j_max is not None:
        use &= j <= j_max
    if use.sum() < 3:
        raise EstimationError(f"only {int(use.sum())} usable dyadic blocks")
    x, y = j[use].astype(float), np.log2(energies[use])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return RegularityEstimate(
        s_hat=float(-slope / 2.0),
        slope=float(slope),
        r_squared=float(min(max(r2, 0.0), 1.0)),
        blocks_used=int(use.sum()),
        block_energies=tuple(float(e) for e in energies),
    )


# Localization windows for time traces on (0, T), as fractions of T.  All are
# Gaussians: their spectra die out within the first few dyadic blocks, so the
# fitted blocks see the trace and not the window.  The interior family is
# averaged (block energies summed) to tame the scatter of a single window
# over a random-sign trace.
START_WIDTH = 0.1
# traces carry round-off of roughly this size relative to their maximum;
# blocks within NOISE_MARGIN of the matching white-noise energy are dropped
NOISE_REL = 1e-12
NOISE_MARGIN = 100.0
INTERIOR_CENTERS = (0.4, 0.5, 0.6)
INTERIOR_WIDTH = 0.06
# a window whose fitted blocks carry less than this fraction of the dominant
# window's energy only sees leakage from elsewhere and does not compete
WINDOW_REL = 1e-8
TRACE_WINDOWS = ("start", "interior")
# first fitted block per window kind: a Gaussian of width w still carries
# about exp(-(pi k w)^2 / 2) at wavenumber k, so the narrower interior
# windows pollute one more block than the start window
FIRST_BLOCK = {"start": 4, "interior": 5, "taper": 4}


def _gauss(t, center, width):
    return np.exp(-0.5 * ((t - center) / width) ** 2)


def trace_windows(t, t_end: float = 1.0, kind: str = "start") -> list:
    """``start`` localizes at t = 0, ``interior`` inside (0, T), ``taper`` only cuts off t = T."""
    t = np.asarray(t, dtype=float) / t_end
    if kind == "start":
        return [_gauss(t, 0.0, START_WIDTH)]
    if kind == "interior":
        return [_gauss(t, c, INTERIOR_WIDTH) for c in INTERIOR_CENTERS]
    if kind == "taper":
        return [taper_window(t)]
    raise ValueError(f"unknown window {kind!r}")


def time_trace_coeffs(trace: TraceSeries, window: str = "taper",
                      check_start: bool = True) -> np.ndarray:
    """Sine coefficients of a time trace times a smooth window, one row per window.

    The odd extension at t = 0 makes the coefficients see the trace as an
    H^s_00 function.  A trace that does not vanish at t = 0 is rejected
    unless ``check_start`` is off; it then shows up as a jump, which caps
    the exponent at 1/2.  Single-window kinds return a 1-D array.
    """
    v = np.asarray(trace.values, dtype=float)
    if check_start and abs(v[0]) > ENDPOINT_TOL:
        raise ValueError(f"trace must vanish at t = 0, got {v[0]:.3e}")
    rows = []
    for w in trace_windows(trace.grid.t, trace.grid.t_end, window):
        windowed = v * w
        windowed[0] = 0.0
        windowed[-1] = 0.0
        rows.append(sine_coeffs(windowed))
    return rows[0] if len(rows) == 1 else np.array(rows)


def window_energies(trace: TraceSeries, window: str) -> np.ndarray:
    coeffs = np.atleast_2d(time_trace_coeffs(trace, window, check_start=False))
    return np.sum([dyadic_energies(row) for row in coeffs], axis=0)


def trace_regularity(trace: TraceSeries, j_min: int | None = None, skip_top: int = 2,
                     windows=TRACE_WINDOWS) -> RegularityEstimate:
    """Critical Sobolev exponent of a time trace in H^s_00(0, T).

    Regularity is local: a function lies in H^s exactly when each piece of
    a smooth partition of unity does.  The estimate is therefore the
    smallest of the per-window estimates (t = 0 and interior).  The top
    ``skip_top`` dyadic blocks are left out because the time discretization
    distorts modes within a few steps of the Nyquist frequency.  A window
    whose spectrum drops to round-off before three blocks are available is
    smooth at this resolution and does not compete.  ``j_min`` overrides the
    per-window first block of ``FIRST_BLOCK``.
    """
    if len(trace) < 64:
        raise EstimationError("trace too short for a dyadic fit")
    v = np.asarray(trace.values, dtype=float)
    eps = NOISE_REL * float(np.max(np.abs(v)))
    n = len(v) - 1
    fits = []
    for kind in windows:
        energies = window_energies(trace, kind)
        n_windows = len(trace_windows(trace.grid.t, trace.grid.t_end, kind))
        # white noise of size eps has DST energy eps^2 / n per coefficient
        noise = n_windows * 2.0 ** np.arange(len(energies)) * eps**2 / n
        j_max = len(energies) - 1 - skip_top
        first = FIRST_BLOCK[kind] if j_min is None else j_min
        try:
            est = fit_block_energies(energies, j_min=first, j_max=j_max, noise=noise)
        except EstimationError:
            continue
        fitted = float(np.sum(energies[first:j_max + 1]))
        fits.append((fitted, RegularityEstimate(est.s_hat, est.slope, est.r_squared,
                                                est.blocks_used, est.block_energies, kind)))
    best = None
    if fits:
        top = max(f for f, _ in fits)
        for fitted, est in fits:
            if fitted >= WINDOW_REL * top and (best is None or est.s_hat < best.s_hat):
                best = est
    if best is None:
        raise EstimationError("no window produced a usable fit")
    return best


# --- space-time norms -------------------------------------------------------


def _heat_slice_coeffs(u_row: np.ndarray, odd: bool = False) -> np.ndarray:
    """Sine coefficients of a heat slice reflected about x = 0.

    The reflected function lives on (-1, 1), vanishes at both ends and is
    rescaled to the unit interval, so mode k carries wavenumber k pi / 2.
    """
    mirror = -u_row[-2::-1] if odd else u_row[-2::-1]
    return sine_coeffs(np.concatenate([u_row, mirror]), check_endpoints=False)


def _flux_lift(x: np.ndarray) -> np.ndarray:
    """x * chi(x) with chi = 1 near x = 0 and 0 near x = -1: unit slope at 0."""
    return x * (1.0 - smooth_step((-x - 0.25) / 0.5))


def _heat_slice_norms(u: np.ndarray, dx: float, s: float) -> np.ndarray:
    """H^s norms of the heat slices u(t_n, .) on (-1, 0).

    The flux g = d_x u(t, 0) is removed with a smooth lift before the even
    reflection (a nonzero flux would leave a kink at x = 0), and the lift's
    own norm, taken from its smooth odd reflection, is added back.
    """
    x = np.linspace(-1.0, 0.0, u.shape[1])
    lift = _flux_lift(x)
    g = (3.0 * u[:, -1] - 4.0 * u[:, -2] + u[:, -3]) / (2.0 * dx)
    lift_norm = sobolev_norm(_heat_slice_coeffs(lift, odd=True), s, length=2.0) / math.sqrt(2.0)
    # factor 1/sqrt2: the doubled function has twice the L^2 mass
    rest = np.array([sobolev_norm(_heat_slice_coeffs(row - gn * lift), s, length=2.0)
                     for row, gn in zip(u, g)]) / math.sqrt(2.0)
    return rest + np.abs(g) * lift_norm


def _trap_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    return w


def parabolic_norm(field: Field, s: float) -> float:
    """Discrete norm of H^{s,2s} on (0,T) x (-1,0).

    Maximum of the L^2(0,T; H^{2s}) part (spatial norms from
    :func:`_heat_slice_norms`) and the H^s(0,T; L^2) part.
    The latter is the space-time L^2 norm plus, per node, the fractional
    seminorm of the tapered time trace u(., x) - u(0, x).
    """
    if field.sgrid.domain != HEAT:
        raise ValueError("parabolic_norm expects a heat-domain field")
    if not 0 <= s <= 3:
        raise ValueError("s must lie in [0, 3]")
    u = np.asarray(field.values)
    tg, sg = field.tgrid, field.sgrid
    wt = _trap_weights(tg.n_steps, tg.dt)
    wx = _trap_weights(sg.n_cells, sg.dx)
    slice_sq = _heat_slice_norms(u, sg.dx, 2 * s) ** 2
    space_part = math.sqrt(float(wt @ slice_sq))

    l2_sq = float(wt @ (u**2 @ wx))
    semi_sq = 0.0
    if s > 0:
        k = np.arange(1, tg.n_steps)
        weights = (1.0 + (k * np.pi / tg.t_end) ** 2) ** s - 1.0
        for i in range(sg.n_cells + 1):
            col = u[:, i] - u[0, i]
            c = time_trace_coeffs(TraceSeries(tg, col))
            semi_sq += wx[i] * tg.t_end * float(weights @ c**2)
    time_part = math.sqrt(l2_sq + semi_sq)
    return max(space_part, time_part)


def _wave_slice_norm(row: np.ndarray, s: float) -> float:
    """H^s norm of a wave slice; the linear boundary lift is handled exactly."""
    n = len(row) - 1
    x = np.linspace(0.0, 1.0, n + 1)
    lift = row[0] * (1.0 - x) + row[-1] * x
    c = sine_coeffs(row - lift, check_endpoints=False)
    a, b = row[0], row[-1] - row[0]
    lift_l2 = a * a + a * b + b * b / 3.0
    # linear functions: L^2 part plus min(s, 1) times the H^1 seminorm
    lift_sq = lift_l2 + min(s, 1.0) * b * b
    return math.sqrt(sobolev_norm(c, s) ** 2 + lift_sq)


def v_norm(field: Field, s: float) -> float:
    """Discrete norm of V^s: sup_t ||v||_{H^s} + sum_k sup_t ||d_t^k v||_{H^{s-k}}.

    Time derivatives are k-th central differences on interior levels.
    """
    if field.sgrid.domain == HEAT:
        raise ValueError("v_norm expects a wave-domain field")
    if not 0 <= s <= 3:
        raise ValueError("s must lie in [0, 3]")
    v = np.asarray(field.values)
    dt = field.tgrid.dt
    total = max(_wave_slice_norm(row, s) for row in v)
    stencils = {
        1: lambda a: (a[2:] - a[:-2]) / (2 * dt),
        2: lambda a: (a[2:] - 2 * a[1:-1] + a[:-2]) / dt**2,
        3: lambda a: (a[4:] - 2 * a[3:-1] + 2 * a[1:-3] - a[:-4]) / (2 * dt**3),
    }
    for k in range(1, int(math.floor(s)) + 1):
        deriv = stencils[k](v)
        if len(deriv) == 0:
            break
        total += max(_wave_slice_norm(row, s - k) for row in deriv)
    return total
