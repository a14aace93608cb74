"""Linearized heat flow, tangent-space membership, div-curl decomposition.

A tangent direction b at a connection a is certified by co-evolving a under
the heat flow and b under the linearized flow

    ds B_k = [B^j, F_{jk}] + D^j (D_j B_k - D_k B_j)

and checking that B decays.  The div-curl decomposition e = b - D a0 is
produced from the electric parabolic flow

    ds E_j = Lap_A E_j + 2 [F_j^l, E_l],     E(0) = e,

with a0 = Integral_0^{s_max} D^l E_l(s) ds accumulated by the trapezoid
rule along the co-evolution (in the flat case this reproduces the Helmholtz
potential -Lap^{-1} div e, so b is the divergence-free part of e).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import algebra
from .errors import BlowUpError
from .gaugefield import (
    ConnectionField,
    CurvatureField,
    covariant_derivative,
    covariant_divergence,
    curvature,
    pair_component,
)
from .heatflow import HeatParams, _step


@dataclass
class TangentVector:
    """Candidate tangent direction b at a caloric base connection."""

    base: ConnectionField
    b: np.ndarray  # (4, n, n, n, n, d)
    tangent_residual: float = field(default=np.nan)


@dataclass
class CaloricDataSet:
    """Caloric-gauge initial data (a, b) with its temporal potential a0."""

    a: ConnectionField
    b: TangentVector
    a0: np.ndarray  # (n, n, n, n, d)
    tail_flagged: bool = False


def _check_finite(B: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(B)):
        raise BlowUpError(f"{what} produced non-finite values")


def linearized_rhs(B: np.ndarray, a_s: ConnectionField, F_s: CurvatureField) -> np.ndarray:
    """Derivative of the heat-flow tension D^j F_{jk} in the direction B:
    ds B_k = [B^j, F_{jk}] + D^j (D_j B_k - D_k B_j)."""
    g = a_s.grid
    if not a_s.a.any():
        # zero background: covariant derivatives reduce to plain partials
        div_B = sum(g.partial(B[j - 1], j) for j in range(1, 5))
        out = np.stack(
            [g.laplacian(B[k - 1]) - g.partial(div_B, k) for k in range(1, 5)]
        )
        if F_s.f.any():
            for k in range(1, 5):
                for j in range(1, 5):
                    if j != k:
                        out[k - 1] += algebra.bracket_arr(
                            a_s.spec, B[j - 1], pair_component(F_s.f, j, k)
                        )
        return out
    out = np.zeros_like(B)
    for k in range(1, 5):
        acc = out[k - 1]
        for j in range(1, 5):
            if j != k:
                acc += algebra.bracket_arr(a_s.spec, B[j - 1], pair_component(F_s.f, j, k))
            g_jk = covariant_derivative(a_s, B[k - 1], j) - covariant_derivative(
                a_s, B[j - 1], k
            )
            acc += covariant_derivative(a_s, g_jk, j)
    return out


def linearized_heat_step(
    B: np.ndarray,
    a_s: ConnectionField,
    F_s: CurvatureField,
    ds: float,
    a_mid: Optional[ConnectionField] = None,
    F_mid: Optional[CurvatureField] = None,
) -> np.ndarray:
    """One RK2 step of the linearized flow on the (frozen) background.

    When midpoint background fields are supplied the second stage is
    evaluated on them; otherwise the background is frozen across the step.
    """
    k1 = linearized_rhs(B, a_s, F_s)
    if a_mid is None:
        a_mid, F_mid = a_s, F_s
    elif F_mid is None:
        F_mid = curvature(a_mid)
    k2 = linearized_rhs(B + 0.5 * ds * k1, a_mid, F_mid)
    new = B + ds * k2
    _check_finite(new, "linearized heat step")
    return new


def electric_rhs(E: np.ndarray, a_s: ConnectionField, F_s: CurvatureField) -> np.ndarray:
    g = a_s.grid
    if not a_s.a.any():
        # zero background: the covariant Laplacian is the plain one
        out = np.stack([g.laplacian(E[j - 1]) for j in range(1, 5)])
        if F_s.f.any():
            for j in range(1, 5):
                for l in range(1, 5):
                    if l != j:
                        out[j - 1] += 2.0 * algebra.bracket_arr(
                            a_s.spec, pair_component(F_s.f, j, l), E[l - 1]
                        )
        return out
    out = np.zeros_like(E)
    for j in range(1, 5):
        acc = out[j - 1]
        for l in range(1, 5):
            acc += covariant_derivative(a_s, covariant_derivative(a_s, E[j - 1], l), l)
            if l != j:
                acc += 2.0 * algebra.bracket_arr(
                    a_s.spec, pair_component(F_s.f, j, l), E[l - 1]
                )
    return out


def electric_parabolic_step(
    E: np.ndarray,
    a_s: ConnectionField,
    F_s: CurvatureField,
    ds: float,
    a_mid: Optional[ConnectionField] = None,
    F_mid: Optional[CurvatureField] = None,
) -> np.ndarray:
    """One RK2 step of the covariant parabolic electric-field flow."""
    k1 = electric_rhs(E, a_s, F_s)
    if a_mid is None:
        a_mid, F_mid = a_s, F_s
    elif F_mid is None:
        F_mid = curvature(a_mid)
    k2 = electric_rhs(E + 0.5 * ds * k1, a_mid, F_mid)
    new = E + ds * k2
    _check_finite(new, "electric parabolic step")
    return new


def _coevolve(a: ConnectionField, V: np.ndarray, p: HeatParams, rhs):
    """March a by the heat flow and V by the supplied linear rhs in lockstep.

    Returns (V(s) per step generator exhausted) via a callback-free loop:
    yields (s, a_s, F_s, V_s) at every step boundary including s = 0.
    """
    p.check_stability(a.grid.h)
    n_steps = int(np.ceil(p.s_max / p.ds - 1e-12))
    state = a
    F = curvature(state)
    static = not state.a.any()  # the zero connection is a heat-flow fixed point
    yield 0.0, state, F, V
    for k in range(1, n_steps + 1):
        if static:
            new_state, a_mid, F_mid, F_new = state, state, F, F
        else:
            new_state = _step(state, p.ds, p.integrator, de_turck=False)
            a_mid = ConnectionField(state.grid, state.spec, 0.5 * (state.a + new_state.a))
            F_mid = curvature(a_mid)
            F_new = None
        k1 = rhs(V, state, F)
        k2 = rhs(V + 0.5 * p.ds * k1, a_mid, F_mid)
        V = V + p.ds * k2
        _check_finite(V, "co-evolved linear flow")
        state = new_state
        F = curvature(state) if F_new is None else F_new
        yield k * p.ds, state, F, V


def _flat_mode_factors(g, p: HeatParams):
    """Per-mode RK2 amplification and trapezoid weight on a zero background.

    On a zero background both co-evolved flows are constant-coefficient and
    diagonal in Fourier space, so one RK2 step is multiplication by
    g(lam) = 1 - lam*ds + (lam*ds)^2/2 per eigenvalue lam of the (positive)
    spatial operator, and the trapezoid sum of N iterates collapses to the
    geometric sum ds*(1/2 + g + ... + g^{N-1} + g^N/2).  Returns
    (n_steps, lam, g^N, trapezoid weight) with lam = -laplace symbol.
    """
    p.check_stability(g.h)
    n_steps = int(np.ceil(p.s_max / p.ds - 1e-12))
    lam = -g.laplace_symbol()
    x = lam * p.ds
    gfac = 1.0 - x + 0.5 * x * x
    g_n = gfac**n_steps
    denom = np.where(gfac != 1.0, 1.0 - gfac, 1.0)
    trapz = p.ds * np.where(
        gfac != 1.0,
        0.5 * (1.0 + g_n) + (gfac - g_n) / denom,
        float(n_steps),
    )
    return n_steps, lam, g_n, trapz


def _flat_tangent_terminal(b: np.ndarray, g, p: HeatParams) -> np.ndarray:
    """Terminal value of the co-evolved linearized flow on a zero background.

    The flow symbol is -(lam I - s s^T): the gradient part of each mode is
    frozen and the orthogonal part contracts by g(lam) per step.
    """
    _, lam, g_n, _ = _flat_mode_factors(g, p)
    bhat = [g.fft(b[j - 1]) for j in range(1, 5)]
    syms = [g.deriv_symbol(j)[..., None] for j in range(1, 5)]
    s_dot_b = sum(s * bh for s, bh in zip(syms, bhat))
    lam_e = lam[..., None]
    safe = np.where(lam_e > 0.0, lam_e, 1.0)
    g_n_e = g_n[..., None]
    out = np.empty_like(b)
    for j in range(1, 5):
        par = syms[j - 1] * s_dot_b / safe
        term = np.where(lam_e > 0.0, par + g_n_e * (bhat[j - 1] - par), bhat[j - 1])
        out[j - 1] = np.real(g.ifft(term))
    return out


def tangent_residual(
    b: np.ndarray, a: ConnectionField, p: HeatParams, fast_flat: bool = True
) -> float:
    """|B(s_max)|_2 / |b|_2 after co-evolving the linearized flow.

    With fast_flat (default) a zero background is marched mode-wise in
    Fourier space; this evaluates the very same RK2 iteration in closed
    form and agrees with the step loop to round-off.
    """
    g = a.grid
    b_norm = g.l2norm(b)
    if b_norm == 0.0:
        return 0.0
    if fast_flat and not a.a.any() and a.grid.boundary == "periodic":
        return g.l2norm(_flat_tangent_terminal(b, g, p)) / b_norm
    V = b
    for _, _, _, V in _coevolve(a, b, p, linearized_rhs):
        pass
    return g.l2norm(V) / b_norm


def div_curl_decompose(
    a: ConnectionField, e: np.ndarray, p: HeatParams, fast_flat: bool = True
) -> CaloricDataSet:
    """Decompose e = b - D a0 through the dynamic heat flow.

    Co-evolves the background and the electric field, accumulates
    a0 = Integral D^l E_l ds (trapezoid), sets b_j = e_j + D_j a0, and
    fills the tangent residual of b.  The tail flag records whether the
    electric field had decayed below stop_F_tol by s_max.

    With fast_flat (default) a zero background is handled mode-wise in
    Fourier space, evaluating the identical RK2 + trapezoid iteration in
    closed form (the flow is constant-coefficient and diagonal there);
    results agree with the step loop to round-off at any step count.
    """
    g = a.grid
    if fast_flat and not a.a.any() and g.boundary == "periodic":
        _, _, g_n, trapz = _flat_mode_factors(g, p)
        ehat = [g.fft(e[j - 1]) for j in range(1, 5)]
        div_hat = sum(
            1j * g.deriv_symbol(j)[..., None] * eh for j, eh in zip(range(1, 5), ehat)
        )
        a0 = np.real(g.ifft(trapz[..., None] * div_hat))
        g_n_e = g_n[..., None]
        terminal_E = np.stack([np.real(g.ifft(g_n_e * eh)) for eh in ehat])
    else:
        a0 = np.zeros(g.shape + (a.spec.dim,))
        prev_div = None
        terminal_E = e
        for s, a_s, F_s, E in _coevolve(a, e, p, electric_rhs):
            div_E = covariant_divergence(a_s, E)
            if prev_div is not None:
                a0 += 0.5 * p.ds * (prev_div + div_E)
            prev_div = div_E
            terminal_E = E
    b = np.empty_like(e)
    for j in range(1, 5):
        b[j - 1] = e[j - 1] + covariant_derivative(a, a0, j)
    tv = TangentVector(a, b)
    tv.tangent_residual = tangent_residual(b, a, p, fast_flat=fast_flat)
    e_scale = max(g.l2norm(e), 1e-300)
    tail = g.l2norm(terminal_E) / e_scale > p.stop_F_tol
    return CaloricDataSet(a, tv, a0, tail_flagged=tail)
