"""Partial Legendre transform in the minus variable and the conjugation
check against the real parabolic Monge-Ampere structure.

Works on the imaginary-translation-invariant reduction of a k = l = 1
grid: two real coordinates (x_plus, x_minus).  The transform conjugates
the minus variable only,

    v(x_plus, p, t) = max over x_minus of [ u - p * x_minus ],

which takes strictly concave-in-x_minus data to convex-in-p data and obeys
the envelope identities du/dx_minus = p, dv/dp = -x_minus,
d2v/dp2 = -1 / d2u/dx_minus2.

Conjugated equation.  For the reduced flow on the identity background,

    u_t = log(1 + u_pp'/4) - log(1 - u_mm/4) - F(x_plus, t)

(u_pp' the plus-plus second derivative, u_mm the minus one), pushing the
envelope identities through the chain rule gives

    v_t = log(1 + (v_xx - v_xp^2 / v_pp) / 4)
          - log(1 + 1 / (4 v_pp)) - F(x_plus, t).

This functional is validated on manufactured solutions in the test suite
and frozen here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConcavityViolated, NotReducible
from .grid import ScalarField

__all__ = [
    "ReducedField",
    "reduce_field",
    "lift_field",
    "partial_legendre",
    "inverse_partial_legendre",
    "conjugate_slice_bruteforce",
    "legendre_roundtrip_error",
    "transformed_residual",
    "untransformed_residual",
]


@dataclass
class ReducedField:
    """2D field u(x_plus, second) with x_plus periodic.

    ``second`` is the minus coordinate for primal fields and the momentum
    for conjugates; ``range_clipped`` records a momentum grid that failed
    to cover the full gradient range (reported, not fatal).
    """

    x_plus: np.ndarray
    second: np.ndarray
    values: np.ndarray
    conjugate: bool = False
    range_clipped: bool = field(default=False, compare=False)

    def __post_init__(self):
        self.x_plus = np.asarray(self.x_plus, dtype=np.float64)
        self.second = np.asarray(self.second, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.x_plus), len(self.second)):
            raise ValueError("values must be (len(x_plus), len(second))")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("reduced field contains non-finite values")
        if np.any(np.diff(self.second) <= 0):
            raise ValueError("second coordinate must be strictly increasing")

    def second_spacing(self):
        return float(self.second[1] - self.second[0])

    def concavity_margin(self):
        """m > 0 iff strictly concave in the second variable (interior)."""
        v = self.values
        h = self.second_spacing()
        d2 = (v[:, 2:] - 2.0 * v[:, 1:-1] + v[:, :-2]) / (h * h)
        return float(-d2.max())


def reduce_field(u, tol=1e-12):
    """Restrict a y-invariant k = l = 1 field to its (x_plus, x_minus) plane."""
    grid = u.grid
    if grid.k != 1 or grid.l != 1:
        raise NotReducible("reduction is defined for k = l = 1 grids")
    span = max(float(np.ptp(u.values, axis=1).max()),
               float(np.ptp(u.values, axis=3).max()))
    if span > tol * (1.0 + np.abs(u.values).max()):
        raise NotReducible(f"field varies along imaginary axes (span {span:.3e})")
    return ReducedField(grid.axis_coords(0), grid.axis_coords(2),
                        u.values[:, 0, :, 0].copy())


def lift_field(rf, grid):
    """Inverse of reduce_field onto a matching k = l = 1 grid."""
    if grid.k != 1 or grid.l != 1:
        raise NotReducible("lift targets k = l = 1 grids")
    if rf.values.shape != (grid.n_points[0], grid.n_points[2]):
        raise ValueError("reduced shape does not match the grid")
    vals = np.broadcast_to(rf.values[:, None, :, None], grid.shape)
    return ScalarField(grid, vals.copy())


def _lower_envelope(xs, fs, qs):
    """min_i (q * xs[i] + fs[i]) for each q in the sorted array qs.

    Linear time: only vertices of the lower convex hull of (xs, fs) can
    attain the minimum, and the optimal vertex index is monotone in q.
    """
    hull = []
    for i in range(len(xs)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            # keep only convex turns of the lower hull
            if ((fs[i1] - fs[i0]) * (xs[i] - xs[i1])
                    >= (fs[i] - fs[i1]) * (xs[i1] - xs[i0])):
                hull.pop()
            else:
                break
        hull.append(i)
    hx = xs[hull]
    hf = fs[hull]
    slopes = np.diff(hf) / np.diff(hx)
    out = np.empty(len(qs))
    j = len(hull) - 1
    for m, q in enumerate(qs):
        while j > 0 and -q < slopes[j - 1]:
            j -= 1
        out[m] = q * hx[j] + hf[j]
    return out


def conjugate_slice_bruteforce(xs, us, ps):
    """Naive O(N M) oracle for max_x (u - p x)."""
    return (us[None, :] - np.outer(ps, xs)).max(axis=1)


def _gradient_range(rf):
    g = np.gradient(rf.values, rf.second, axis=1, edge_order=2)
    return float(g.min()), float(g.max())


def partial_legendre(rf, p_grid=None, min_margin=1e-10):
    """Conjugate the minus variable; output is convex in the momentum."""
    if rf.conjugate:
        raise ValueError("input is already a conjugate field")
    margin = rf.concavity_margin()
    if margin <= min_margin:
        raise ConcavityViolated(
            f"need strict concavity in x_minus (margin {margin:.3e})")
    gmin, gmax = _gradient_range(rf)
    clipped = False
    if p_grid is None:
        p_grid = np.linspace(gmin, gmax, len(rf.second))
    else:
        p_grid = np.asarray(p_grid, dtype=np.float64)
        clipped = p_grid[0] > gmin or p_grid[-1] < gmax
    xs = rf.second
    out = np.empty((len(rf.x_plus), len(p_grid)))
    for i in range(len(rf.x_plus)):
        # max_x(u - p x) = -min_x(p x - u)
        out[i] = -_lower_envelope(xs, -rf.values[i], p_grid)
    return ReducedField(rf.x_plus, p_grid, out, conjugate=True,
                        range_clipped=clipped)


def inverse_partial_legendre(vf, x_grid=None):
    """Recover the primal field: u(x) = min_p (v + p x)."""
    if not vf.conjugate:
        raise ValueError("input is not a conjugate field")
    if x_grid is None:
        g = np.gradient(vf.values, vf.second, axis=1, edge_order=2)
        # dv/dp = -x_minus, so the recoverable x range is -grad reversed
        x_grid = np.linspace(float(-g.max()), float(-g.min()), len(vf.second))
    else:
        x_grid = np.asarray(x_grid, dtype=np.float64)
    out = np.empty((len(vf.x_plus), len(x_grid)))
    for i in range(len(vf.x_plus)):
        out[i] = _lower_envelope(vf.second, vf.values[i], x_grid)
    return ReducedField(vf.x_plus, x_grid, out, conjugate=False)


def legendre_roundtrip_error(rf, trim=None):
    """max |u - L^{-1}(L(u))| over interior minus points."""
    nx = len(rf.second)
    if trim is None:
        trim = max(2, nx // 16)
    vf = partial_legendre(rf)
    back = inverse_partial_legendre(vf, x_grid=rf.second)
    err = np.abs(back.values - rf.values)[:, trim:nx - trim]
    return float(err.max())


def _check_slices(u_slices, times):
    times = np.asarray(times, dtype=np.float64)
    if len(u_slices) != len(times) or len(times) < 3:
        raise ValueError("need one slice per time and at least three times")
    dts = np.diff(times)
    if not np.allclose(dts, dts[0]):
        raise ValueError("uniform time spacing required")
    base = u_slices[0]
    for s in u_slices[1:]:
        if not (np.array_equal(s.x_plus, base.x_plus)
                and np.array_equal(s.second, base.second)):
            raise ValueError("slices must share coordinates")
    return times, float(dts[0])


def _d1_periodic(v, h, axis=0):
    return (np.roll(v, -1, axis) - np.roll(v, 1, axis)) / (2.0 * h)


def _d2_periodic(v, h, axis=0):
    return (np.roll(v, -1, axis) - 2.0 * v + np.roll(v, 1, axis)) / (h * h)


def untransformed_residual(u_slices, times, F=None):
    """Discrete residual of the reduced flow on the identity background.

    Returns (max_residual, stack of interior-time residual arrays).
    Spatial interior in x_minus only; x_plus is periodic.
    """
    times, dt = _check_slices(u_slices, times)
    hx = float(u_slices[0].x_plus[1] - u_slices[0].x_plus[0])
    hm = u_slices[0].second_spacing()
    res = []
    for n in range(1, len(times) - 1):
        u = u_slices[n].values
        u_t = (u_slices[n + 1].values - u_slices[n - 1].values) / (2.0 * dt)
        u_xx = _d2_periodic(u, hx, axis=0)
        u_mm = (u[:, 2:] - 2.0 * u[:, 1:-1] + u[:, :-2]) / (hm * hm)
        rhs = np.log1p(0.25 * u_xx[:, 1:-1]) - np.log1p(-0.25 * u_mm)
        if F is not None:
            rhs = rhs - F(u_slices[n].x_plus[:, None], times[n])
        res.append(u_t[:, 1:-1] - rhs)
    res = np.stack(res)
    return float(np.abs(res).max()), res


def transformed_residual(u_slices, times, F=None, p_grid=None):
    """Residual of the frozen conjugated equation along the transform of u.

    The slices are conjugated on a shared momentum grid (intersection of
    per-slice gradient ranges unless given); derivatives are central, with
    the momentum treated as non-periodic interior.
    """
    times, dt = _check_slices(u_slices, times)
    if p_grid is None:
        los, his = zip(*(_gradient_range(s) for s in u_slices))
        p_grid = np.linspace(max(los), min(his), len(u_slices[0].second))
    v_slices = [partial_legendre(s, p_grid=p_grid) for s in u_slices]
    hx = float(u_slices[0].x_plus[1] - u_slices[0].x_plus[0])
    hp = float(p_grid[1] - p_grid[0])
    res = []
    for n in range(1, len(times) - 1):
        v = v_slices[n].values
        v_t = (v_slices[n + 1].values - v_slices[n - 1].values) / (2.0 * dt)
        v_xx = _d2_periodic(v, hx, axis=0)
        v_xp = _d1_periodic((v[:, 2:] - v[:, :-2]) / (2.0 * hp), hx, axis=0)
        v_pp = (v[:, 2:] - 2.0 * v[:, 1:-1] + v[:, :-2]) / (hp * hp)
        if v_pp.min() <= 0:
            raise ConcavityViolated("conjugate lost convexity in momentum")
        arg = v_xx[:, 1:-1] - v_xp ** 2 / v_pp
        rhs = np.log1p(0.25 * arg) - np.log1p(0.25 / v_pp)
        if F is not None:
            rhs = rhs - F(u_slices[n].x_plus[:, None], times[n])
        res.append(v_t[:, 1:-1] - rhs)
    res = np.stack(res)
    return float(np.abs(res).max()), res
