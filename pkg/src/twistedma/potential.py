"""Constructive inversion of the mixed-signature potential operator
square(f) = i(d+ dbar+ - d- dbar-) f on the periodic lattice.

The inversion works in frequency space: every discrete stencil is a
convolution, so each Fourier mode decouples.  Modes carrying a nonzero
plus-block frequency are determined by the plus form, modes carrying a
nonzero minus-block frequency by the minus form; where both apply the two
answers must agree (the discrete shadow of the slice-correction
bookkeeping in the analytic construction).  Periodic harmonics are
constants, so fixing the grid mean of f to zero is a complete gauge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

from .errors import IncompatibleData, NonzeroMeanObstruction
from .forms import cross_residual_values
from .grid import HermitianMatrixField, ScalarField, hermitian_hessian

__all__ = [
    "SquareDecomposition",
    "square_operator",
    "solve_square",
    "compatibility_residual",
]

_symbol_cache = {}


@dataclass
class SquareDecomposition:
    f: ScalarField
    residual_plus: float
    residual_minus: float
    kernel_note: str

    def __post_init__(self):
        if self.residual_plus < 0 or self.residual_minus < 0:
            raise ValueError("residuals are max norms, must be >= 0")


def square_operator(f):
    """Blocks of square(f): (hess_plus f, -hess_minus f).

    The minus block is stored so that its positivity means the potential
    is plurisuperharmonic relative to background in the minus variables.
    """
    plus = hermitian_hessian(f, "plus")
    minus_vals = -hermitian_hessian(f, "minus").values
    return plus, HermitianMatrixField(f.grid, "minus", minus_vals, check=False)


def compatibility_residual(omega_plus, omega_minus):
    """Max norm of the fourth-order cross condition the inversion needs."""
    return float(np.abs(cross_residual_values(omega_plus, omega_minus)).max())


def _grid_symbols(grid):
    """Per-entry Fourier symbols of the two block Hessian stencils.

    Returns (sym_plus, sym_minus): arrays of shape grid.shape + (m, m)
    with the exact symbol of ``hermitian_hessian(., block)`` so that
    hat(hess u)[xi]_{ij} = sym[xi]_{ij} * hat(u)[xi].
    """
    key = (grid.k, grid.l, grid.n_points, grid.spacing)
    if key in _symbol_cache:
        return _symbol_cache[key]
    n_axes = grid.real_dim
    # broadcastable 1d symbol pieces per axis
    theta = []
    for a in range(n_axes):
        n = grid.n_points[a]
        th = 2.0 * np.pi * np.fft.fftfreq(n)
        shape = [1] * n_axes
        shape[a] = n
        theta.append(th.reshape(shape))

    def d2_symbol(a, b):
        ha, hb = grid.spacing[a], grid.spacing[b]
        if a == b:
            return -4.0 * np.sin(theta[a] / 2.0) ** 2 / (ha * ha)
        return -np.sin(theta[a]) * np.sin(theta[b]) / (ha * hb)

    out = []
    for block in ("plus", "minus"):
        axes = grid.block_axes(block)
        m = len(axes)
        sym = np.zeros(grid.shape + (m, m), dtype=np.complex128)
        for i, (xi, yi) in enumerate(axes):
            for j, (xj, yj) in enumerate(axes):
                if j < i:
                    continue
                re = d2_symbol(xi, xj) + d2_symbol(yi, yj)
                if i == j:
                    sym[..., i, i] = 0.25 * np.broadcast_to(re, grid.shape)
                else:
                    im = d2_symbol(xi, yj) - d2_symbol(yi, xj)
                    sym[..., i, j] = 0.25 * np.broadcast_to(re + 1j * im, grid.shape)
                    sym[..., j, i] = 0.25 * np.broadcast_to(re - 1j * im, grid.shape)
        out.append(sym)
    _symbol_cache[key] = tuple(out)
    return _symbol_cache[key]


def _entry_ffts(omega, axes):
    """hat(omega_ij) for every matrix entry, as a nested list."""
    m = omega.values.shape[-1]
    return [[scipy.fft.fftn(omega.values[..., i, j], axes=axes)
             for j in range(m)] for i in range(m)]


def _block_estimate(w_hat, sym, grid):
    """Least-squares mode estimate of hat(f) from one block, plus mask.

    num = sum_ij conj(s_ij) hat(omega_ij), den = sum_ij |s_ij|^2; the mask
    (den > 0) is exact: all symbols vanish iff the block frequency is zero.
    """
    m = sym.shape[-1]
    num = np.zeros(grid.shape, dtype=np.complex128)
    den = np.zeros(grid.shape, dtype=np.float64)
    content = np.zeros(grid.shape, dtype=np.float64)
    for i in range(m):
        for j in range(m):
            s = sym[..., i, j]
            num += np.conj(s) * w_hat[i][j]
            den += np.abs(s) ** 2
            content = np.maximum(content, np.abs(w_hat[i][j]))
    mask = den > 0.0
    est = np.zeros_like(num)
    np.divide(num, den, out=est, where=mask)
    return est, mask, content


def solve_square(omega_plus, omega_minus, tol_compat=1e-8):
    """Invert square(f) = omega for the zero-mean potential f.

    Raises IncompatibleData when the cross condition or the overlap
    consistency fails, NonzeroMeanObstruction when a block mean is not
    representable (constants are class data, not potential data).

    All checks run in frequency space; the symbols are the exact Fourier
    multipliers of the stencils, so the spectral evaluations agree with
    the direct ones to roundoff.
    """
    grid = omega_plus.grid
    if omega_minus.grid != grid:
        raise ValueError("blocks must share one grid")
    scale = max(float(np.abs(omega_plus.values).max()),
                float(np.abs(omega_minus.values).max()), 1.0)

    axes = tuple(range(grid.real_dim))
    sym_plus, sym_minus = _grid_symbols(grid)
    hat_p = _entry_ffts(omega_plus, axes)
    hat_m = _entry_ffts(omega_minus, axes)

    # cross condition hess_minus(w+[a,b]) + hess_plus(w-[c,d]), spectrally
    compat = 0.0
    for a in range(grid.k):
        for b in range(grid.k):
            for c in range(grid.l):
                for d in range(grid.l):
                    r_hat = (sym_minus[..., c, d] * hat_p[a][b]
                             + sym_plus[..., a, b] * hat_m[c][d])
                    compat = max(compat, float(np.abs(
                        scipy.fft.ifftn(r_hat, axes=axes)).max()))
    if compat > tol_compat * scale:
        raise IncompatibleData(
            f"cross compatibility residual {compat:.3e} exceeds tolerance "
            f"{tol_compat * scale:.3e}")

    # the minus block stores -hess_minus f, so negate its symbols
    est_p, mask_p, content_p = _block_estimate(hat_p, sym_plus, grid)
    est_m, mask_m, content_m = _block_estimate(hat_m, -sym_minus, grid)

    npts = grid.size
    zero_mode = (0,) * grid.real_dim
    mean_tol = tol_compat * scale * npts
    if content_p[zero_mode] > mean_tol or content_m[zero_mode] > mean_tol:
        raise NonzeroMeanObstruction(
            "block mean is not in the image of the potential operator; "
            "handle constants as the class representative")

    # plus form content on modes invisible to the plus stencil (and dually)
    stray_p = content_p[~mask_p].max() if (~mask_p).any() else 0.0
    stray_m = content_m[~mask_m].max() if (~mask_m).any() else 0.0
    if max(stray_p, stray_m) > mean_tol:
        raise IncompatibleData(
            "block data varies across slices where its stencil has no reach "
            f"(stray content {max(stray_p, stray_m) / npts:.3e} per point)")

    overlap = mask_p & mask_m
    if overlap.any():
        mismatch = np.abs(est_p[overlap] - est_m[overlap]).max() / npts
        if mismatch > tol_compat * scale:
            raise IncompatibleData(
                f"plus/minus determinations disagree on overlap frequencies "
                f"({mismatch:.3e} per point)")

    f_hat = np.where(mask_p, est_p, est_m)
    f_hat[zero_mode] = 0.0
    f_vals = scipy.fft.ifftn(f_hat, axes=axes).real
    f = ScalarField(grid, f_vals)

    # residuals of the re-applied operator, spectrally (exact symbols)
    residual_plus = 0.0
    residual_minus = 0.0
    for i in range(grid.k):
        for j in range(grid.k):
            back = scipy.fft.ifftn(sym_plus[..., i, j] * f_hat, axes=axes)
            residual_plus = max(residual_plus, float(np.abs(
                back - omega_plus.values[..., i, j]).max()))
    for i in range(grid.l):
        for j in range(grid.l):
            back = scipy.fft.ifftn(-sym_minus[..., i, j] * f_hat, axes=axes)
            residual_minus = max(residual_minus, float(np.abs(
                back - omega_minus.values[..., i, j]).max()))
    return SquareDecomposition(
        f=f,
        residual_plus=residual_plus,
        residual_minus=residual_minus,
        kernel_note=("zero grid mean; periodic harmonics are constants, "
                     "so the gauge is complete"),
    )
