"""Fourier-side diagnostics: Littlewood-Paley blocks, energy dispersion,
Leray projection, the bilinear null-form symbol Q, and the quadratic
temporal-potential consistency check.

The Q form acts on two 4-vectors of algebra-valued fields as the bilinear
multiplier

    Q(A, B)(x) = Sum_{xi + eta = zeta} m(xi, eta) [Ahat^l(xi), Bhat_l(eta)]
    m(xi, eta) = (xi^2 - eta^2) / (2 (xi^2 + eta^2))

computed by a direct double Fourier sum; grids larger than n = 8 are
rejected (the sum is a correctness check, not a production kernel).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import algebra
from .gaugefield import ConnectionField, CurvatureField
from .grid import Grid4

Q_MAX_N = 8


class SpectralError(ValueError):
    pass


# -- Littlewood-Paley blocks -------------------------------------------------


def _taper(x: np.ndarray) -> np.ndarray:
    """Radial low-pass profile: 1 for x <= 1, 0 for x >= sqrt(2), cosine
    taper across the half octave in between."""
    out = np.ones_like(x)
    out[x >= np.sqrt(2.0)] = 0.0
    mid = (x > 1.0) & (x < np.sqrt(2.0))
    out[mid] = np.cos(np.pi * np.log2(x[mid])) ** 2
    return out


@dataclass(frozen=True)
class LPBlockSet:
    """Dyadic annular windows psi_k on the grid's Fourier modes.

    k indexes the absolute dyadic ladder |kappa| ~ 2^k (kappa in radians per
    length), so rescaling a field by a factor of two shifts content by one
    index.  The lowest block is the full low-pass; the windows telescope to
    an exact partition of unity on all resolvable modes.
    """

    grid: Grid4
    k_min: int
    k_max: int

    def window(self, k: int) -> np.ndarray:
        if not self.k_min <= k <= self.k_max:
            raise SpectralError(f"block index {k} outside [{self.k_min}, {self.k_max}]")
        r = _mode_radius(self.grid)
        if k == self.k_min:
            return _taper(r / 2.0**k)
        return _taper(r / 2.0**k) - _taper(r / 2.0 ** (k - 1))


def _mode_radius(grid: Grid4) -> np.ndarray:
    kap = grid.wavenumbers1d()
    r2 = np.zeros(grid.shape)
    for j in range(1, 5):
        shape = [1, 1, 1, 1]
        shape[grid.axis(j)] = grid.n
        r2 = r2 + (kap**2).reshape(shape)
    return np.sqrt(r2)


def make_blocks(grid: Grid4) -> LPBlockSet:
    kappa_min = 2.0 * np.pi / grid.extent
    r_max = float(np.sqrt(4.0) * np.pi / grid.h)
    k_min = int(np.floor(np.log2(kappa_min)))
    k_max = int(np.ceil(np.log2(r_max)))
    return LPBlockSet(grid, k_min, k_max)


def lp_project(blocks: LPBlockSet, f: np.ndarray, k: int) -> np.ndarray:
    """Apply the annular window psi_k; component axes pass through."""
    return _apply_multiplier(blocks.grid, f, blocks.window(k))


def _apply_multiplier(g: Grid4, f: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Multiply the Fourier transform over the spatial axes by w.

    Accepts (n,n,n,n), (n,n,n,n,d), or (C,n,n,n,n,d) layouts.
    """
    if f.shape[:4] == g.shape:
        fhat = g.fft(f)
        wfull = w.reshape(w.shape + (1,) * (f.ndim - 4))
        return np.real(g.ifft(fhat * wfull))
    if f.shape[1:5] == g.shape:
        out = np.empty_like(f)
        for c in range(f.shape[0]):
            out[c] = _apply_multiplier(g, f[c], w)
        return out
    raise SpectralError(f"cannot locate grid axes in shape {f.shape}")


def _component_stack(F: CurvatureField) -> np.ndarray:
    if F.e is None:
        return F.f
    return np.concatenate([F.f, F.e], axis=0)


def ed_norm(F: CurvatureField, blocks: Optional[LPBlockSet] = None) -> float:
    """sup_k 2^{-2k} |P_k F|_Linf with the pointwise inner-product norm."""
    if blocks is None:
        blocks = make_blocks(F.grid)
    stack = _component_stack(F)
    best = 0.0
    for k in range(blocks.k_min, blocks.k_max + 1):
        block = _apply_multiplier(F.grid, stack, blocks.window(k))
        pointwise = np.sqrt(np.einsum("c...a,c...a->...", block, block))
        best = max(best, 2.0 ** (-2 * k) * float(np.max(pointwise)))
    return best


def ed_norm_truncated(F: CurvatureField, m: int, blocks: Optional[LPBlockSet] = None) -> float:
    """The sup restricted to block indices k > m."""
    if blocks is None:
        blocks = make_blocks(F.grid)
    stack = _component_stack(F)
    best = 0.0
    for k in range(max(blocks.k_min, m + 1), blocks.k_max + 1):
        block = _apply_multiplier(F.grid, stack, blocks.window(k))
        pointwise = np.sqrt(np.einsum("c...a,c...a->...", block, block))
        best = max(best, 2.0 ** (-2 * k) * float(np.max(pointwise)))
    return best


# -- Leray projection --------------------------------------------------------


def leray_project(g: Grid4, v: np.ndarray) -> np.ndarray:
    """Project a 4-vector field (4, n,n,n,n, d) onto its divergence-free
    part, using the grid's own first-derivative symbols so that the discrete
    divergence of the output vanishes on all nonzero-symbol modes."""
    s = [g.deriv_symbol(j) for j in range(1, 5)]
    s2 = np.zeros(g.shape)
    for sj in s:
        s2 = s2 + np.broadcast_to(sj**2, g.shape)
    vhat = np.stack([g.fft(v[j]) for j in range(4)])
    div = np.zeros_like(vhat[0])
    for j in range(4):
        div = div + s[j][..., None] * vhat[j]
    safe = np.where(s2 > 0.0, s2, 1.0)[..., None]
    out = np.empty_like(v)
    for j in range(4):
        proj = vhat[j] - np.where(
            (s2 > 0.0)[..., None], s[j][..., None] * div / safe, 0.0
        )
        out[j] = np.real(g.ifft(proj))
    return out


# -- the Q bilinear form -----------------------------------------------------


def _check_small_grid(g: Grid4) -> None:
    if g.n > Q_MAX_N:
        raise SpectralError(
            f"the mode-pair double sum is restricted to n <= {Q_MAX_N}; "
            "use the small-grid pathway"
        )


def q_symbol_value(xi2: np.ndarray, eta2: np.ndarray) -> np.ndarray:
    """m(xi, eta) = (xi^2 - eta^2) / (2 (xi^2 + eta^2)), 0 at xi = eta = 0."""
    denom = xi2 + eta2
    return np.where(denom > 0.0, (xi2 - eta2) / np.where(denom > 0.0, 2.0 * denom, 1.0), 0.0)


def _mode_s2(g: Grid4) -> np.ndarray:
    """Squared first-derivative symbol magnitude per mode (grid-consistent
    stand-in for |xi|^2)."""
    s2 = np.zeros(g.shape)
    for j in range(1, 5):
        s2 = s2 + np.broadcast_to(g.deriv_symbol(j) ** 2, g.shape)
    return s2


def bilinear_multiplier(g: Grid4, spec, A: np.ndarray, B: np.ndarray, symbol) -> np.ndarray:
    """Direct double Fourier sum of a bracket-valued bilinear multiplier.

    A, B: (4, n,n,n,n, d); symbol(xi2, eta2) is evaluated on the grid's
    squared derivative-symbol magnitudes.  Contraction over the vector
    index: Sum_l [Ahat^l(xi), Bhat_l(eta)].
    """
    _check_small_grid(g)
    n = g.n
    Ahat = np.stack([g.fft(A[l]) for l in range(4)]) / n**4
    Bhat = np.stack([g.fft(B[l]) for l in range(4)]) / n**4
    s2 = _mode_s2(g)
    chat = np.zeros(g.shape + (spec.dim,), dtype=complex)
    # iterate over the active xi modes of A; for each, eta = zeta - xi is a
    # lattice shift, realized by rolling the B arrays.  The activity cut is
    # relative: FFT round-off populates every mode at ~1e-16 of the peak,
    # and those must not count as sources.
    amps = np.einsum("l...a->...", np.abs(Ahat))
    active = np.argwhere(amps > 1e-13 * max(float(amps.max()), 1e-300))
    for idx in active:
        idx = tuple(idx)
        shift = idx
        xi2 = s2[idx]
        eta2 = np.roll(s2, shift, axis=(0, 1, 2, 3))
        m = symbol(xi2, eta2)
        acc = np.zeros(g.shape + (spec.dim,), dtype=complex)
        for l in range(4):
            b_shift = np.roll(Bhat[l], shift, axis=(0, 1, 2, 3))
            acc += algebra.bracket_arr(spec, np.broadcast_to(Ahat[l][idx], b_shift.shape), b_shift)
        chat += m[..., None] * acc
    return np.real(g.ifft(chat * n**4))


def q_bilinear(g: Grid4, spec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """The null-form bilinear Q(A, B) with vector-index contraction."""
    return bilinear_multiplier(g, spec, A, B, q_symbol_value)


def q_bilinear_oracle(g: Grid4, spec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Independent physical-space evaluation of the same operator.

    For every pair of source sites (y, z) and output site x, the double
    Fourier sum collapses to translated convolution kernels; here it is
    evaluated mode pair by mode pair with explicit exponentials, no FFTs
    and no rolls, as a cross-check oracle.  O(n^8 d); n <= 6 advised.
    """
    _check_small_grid(g)
    n = g.n
    d = spec.dim
    # explicit DFT
    sites = g.coords1d()
    kap = g.wavenumbers1d()
    phase = np.exp(-1j * np.outer(kap, sites))  # (mode, site)

    def dft4(f):
        out = f.astype(complex)
        for ax in range(4):
            out = np.moveaxis(np.tensordot(phase, out, axes=(1, ax)), 0, ax)
        return out / n**4

    def idft4(fhat):
        out = fhat
        conj = np.conj(phase).T  # (site, mode)
        for ax in range(4):
            out = np.moveaxis(np.tensordot(conj, out, axes=(1, ax)), 0, ax)
        return np.real(out)

    Ahat = np.stack([dft4(A[l]) for l in range(4)])
    Bhat = np.stack([dft4(B[l]) for l in range(4)])
    s2 = _mode_s2(g)
    # honest quadruple loop over mode pairs; the activity cut is relative
    # (DFT round-off populates every mode at ~1e-16 of the peak)
    cut_a = 1e-13 * max(float(np.max(np.abs(Ahat))), 1e-300)
    cut_b = 1e-13 * max(float(np.max(np.abs(Bhat))), 1e-300)
    chat = np.zeros(g.shape + (d,), dtype=complex)
    idxs = list(np.ndindex(g.shape))
    for xi in idxs:
        amp_a = Ahat[(slice(None),) + xi]
        if np.max(np.abs(amp_a)) < cut_a:
            continue
        for eta in idxs:
            amp_b = Bhat[(slice(None),) + eta]
            if np.max(np.abs(amp_b)) < cut_b:
                continue
            m = q_symbol_value(np.asarray(s2[xi]), np.asarray(s2[eta]))
            if m == 0.0:
                continue
            zeta = tuple((xi[i] + eta[i]) % n for i in range(4))
            val = np.zeros(d, dtype=complex)
            for l in range(4):
                val += algebra.bracket_arr(spec, amp_a[l], amp_b[l])
            chat[zeta] += m * val
    return idft4(chat)


def a0_quadratic_form(g: Grid4, spec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """A0^2(A, B) = Lap^{-1}[A^l, B_l] + 2 Lap^{-1} Q(A, B)."""
    bracket = np.zeros(g.shape + (spec.dim,))
    for l in range(4):
        bracket += algebra.bracket_arr(spec, A[l], B[l])
    q = q_bilinear(g, spec, A, B)
    return g.laplace_inverse(bracket + 2.0 * q, zero_mean=True)


def da0_quadratic_form(g: Grid4, spec, B: np.ndarray) -> np.ndarray:
    """DA0^2(B, B) = -2 Lap^{-1} Q(B, B): same kernel, one argument pair."""
    return -2.0 * g.laplace_inverse(q_bilinear(g, spec, B, B), zero_mean=True)


def tangency_enforce(g: Grid4, spec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Adjust b so the discrete divergence relation div b = 2 Q(a, b) holds.

    One fixed-point sweep: strip the gradient part of b, then graft on the
    gradient whose divergence equals twice the bilinear form of the
    divergence-free remainder.  The relation's defect after the sweep is
    cubic in the field size; the construction is exact at the level of the
    grid's own derivative symbols (kernel modes of the symbol excluded on
    both sides).
    """
    div_b = sum(g.partial(b[j - 1], j) for j in range(1, 5))
    phi = g.laplace_inverse(div_b, zero_mean=True)
    b0 = np.stack([b[j - 1] - g.partial(phi, j) for j in range(1, 5)])
    psi = g.laplace_inverse(2.0 * q_bilinear(g, spec, a, b0), zero_mean=True)
    return np.stack([b0[j - 1] + g.partial(psi, j) for j in range(1, 5)])


def a0_quadratic_check(
    a_shape: ConnectionField,
    b_shape: np.ndarray,
    eps_sweep: List[float],
    renormalize: bool = True,
):
    """Cubic-remainder check for the quadratic temporal potential.

    For each amplitude eps the tangent field is renormalized so the pair
    (eps*a, b_eps) satisfies the divergence relation div b = 2 Q(a, b) --
    plain scaling leaves an order-eps^2 divergence mismatch that floors
    the slope at 2.  The temporal potential solves the covariant elliptic
    equation

        D^j D_j A0 = D^j B_j

    (divergence source included: it is quadratically small by the enforced
    relation, and cancels the Q part of the bilinear form).  Returns
    (slope, eps list, residual list) where residual = |A0 - A0^2(a, b)|_2.
    """
    from .gaugefield import covariant_divergence, covariant_poisson

    _check_small_grid(a_shape.grid)
    g = a_shape.grid
    spec = a_shape.spec
    residuals = []
    for eps in eps_sweep:
        a_eps = ConnectionField(g, spec, eps * a_shape.a)
        b_eps = eps * b_shape
        if renormalize:
            b_eps = tangency_enforce(g, spec, a_eps.a, b_eps)
        # deflated solve: on the torus the covariant Laplacian is nearly
        # singular on the flat-kernel modes, and the explicit bilinear form
        # is built from the spectral inverse which zeroes exactly those
        a0 = covariant_poisson(a_eps, covariant_divergence(a_eps, b_eps), deflate=True)
        form = a0_quadratic_form(g, spec, a_eps.a, b_eps)
        residuals.append(g.l2norm(a0 - form))
    eps_arr = np.asarray(eps_sweep, dtype=float)
    res_arr = np.asarray(residuals)
    if np.all(res_arr == 0.0):
        return float("nan"), list(eps_arr), residuals
    slope = float(np.polyfit(np.log(eps_arr), np.log(np.maximum(res_arr, 1e-300)), 1)[0])
    return slope, list(eps_arr), residuals
