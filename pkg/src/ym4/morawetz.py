"""Energy-momentum tensor, null decomposition, and the hyperboloidal
weighted-energy monotonicity diagnostics.

Conventions: Minkowski signature (-, +, +, +, +); temporal-gauge states
supply F_{0j} = adot_j.  The multiplier vector field is

    X_eps = (1 / rho_eps) ((t + eps) dt + x . dx),
    rho_eps = sqrt((t + eps)^2 - r^2),

whose contracted momentum P_alpha = T_{alpha beta} X^beta satisfies the
divergence identity with nonnegative bulk density (2 / rho_eps)|iota_X F|^2.
The names keep the curvature null component (varrho) and the hyperboloidal
weight (rho_eps) fully spelled out.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .gaugefield import FieldError, energy_density
from .wave import WaveState


@dataclass
class NullFrame:
    """Per-site radial direction, tangential triad, and validity mask."""

    nhat: np.ndarray  # (4, n,n,n,n)
    tangent: np.ndarray  # (3, 4, n,n,n,n)
    mask: np.ndarray  # (n,n,n,n) bool, True where r >= 2h


@dataclass
class NullComponents:
    alpha: np.ndarray  # (3, ..., d)
    alphabar: np.ndarray  # (3, ..., d)
    varrho: np.ndarray  # (..., d)
    sigma: np.ndarray  # (3, ..., d): tangent pairs (1,2), (1,3), (2,3)
    mask: np.ndarray


def null_frame(grid, center=(0.0, 0.0, 0.0, 0.0)) -> NullFrame:
    """Radial/tangential orthonormal frame about a spatial center.

    The tangential triad comes from Gram-Schmidt on the coordinate axes
    with the axis of largest |nhat| component dropped; sites with r < 2h
    are masked out.
    """
    x = np.stack([grid.coordinate_field(j) - center[j - 1] for j in range(1, 5)])
    r = np.sqrt(np.einsum("j...,j...->...", x, x))
    mask = r >= 2.0 * grid.h - 1e-12
    safe_r = np.where(r > 0.0, r, 1.0)
    nhat = x / safe_r

    drop = np.argmax(np.abs(nhat), axis=0)  # (n,n,n,n)
    tangent = np.zeros((3, 4) + grid.shape)
    for m in range(4):
        sel = drop == m
        if not np.any(sel):
            continue
        axes = [ax for ax in range(4) if ax != m]
        prev = [nhat[:, sel]]  # list of (4, nsel) unit vectors
        for slot, ax in enumerate(axes):
            v = np.zeros((4, int(sel.sum())))
            v[ax] = 1.0
            for u in prev:
                v -= np.einsum("js,js->s", u, v) * u
            v /= np.sqrt(np.einsum("js,js->s", v, v))
            prev.append(v)
            tangent[slot, :, sel] = v.T
    return NullFrame(nhat, tangent, mask)


def rotate_frame(frame: NullFrame, theta: float) -> NullFrame:
    """Rotate the tangential triad by theta in the (e_1, e_2) plane.

    The null norms reported downstream are frame-covariant, so this only
    exists to verify that invariance.
    """
    c, s = np.cos(theta), np.sin(theta)
    tangent = frame.tangent.copy()
    tangent[0] = c * frame.tangent[0] + s * frame.tangent[1]
    tangent[1] = -s * frame.tangent[0] + c * frame.tangent[1]
    return NullFrame(frame.nhat, tangent, frame.mask)


def null_decompose(
    w: WaveState, center=(0.0, 0.0, 0.0, 0.0), frame: Optional[NullFrame] = None
) -> NullComponents:
    """Contract the curvature with the null frame (L, Lbar, e_a)."""
    g = w.a.grid
    if frame is None:
        frame = null_frame(g, center)
    F = w.curvature()
    e = F.e
    # b_k = nhat^j f_{jk}
    b = np.zeros_like(e)
    from .gaugefield import pair_component

    for k in range(1, 5):
        for j in range(1, 5):
            if j == k:
                continue
            b[k - 1] += frame.nhat[j - 1][..., None] * pair_component(F.f, j, k)
    wplus = e + b
    wminus = e - b
    alpha = np.einsum("ak...,k...c->a...c", frame.tangent, wplus)
    alphabar = np.einsum("ak...,k...c->a...c", frame.tangent, wminus)
    varrho = -np.einsum("k...,k...c->...c", frame.nhat, e)
    sigma = np.zeros_like(alpha)
    # sigma_ab = f_{jk} e_a^j e_b^k for tangent pairs (1,2), (1,3), (2,3)
    f_on_tangent = np.zeros((3, 4) + g.shape + (w.a.spec.dim,))
    for a_idx in range(3):
        for k in range(1, 5):
            acc = np.zeros(g.shape + (w.a.spec.dim,))
            for j in range(1, 5):
                if j == k:
                    continue
                acc += frame.tangent[a_idx, j - 1][..., None] * pair_component(F.f, j, k)
            f_on_tangent[a_idx, k - 1] = acc
    pairs = [(0, 1), (0, 2), (1, 2)]
    for s_idx, (a_idx, b_idx) in enumerate(pairs):
        sigma[s_idx] = np.einsum(
            "k...,k...c->...c", frame.tangent[b_idx], f_on_tangent[a_idx]
        )
    m = frame.mask[..., None]
    return NullComponents(
        alpha * m, alphabar * m, varrho * m, sigma * m, frame.mask
    )


def energy_momentum(w: WaveState) -> np.ndarray:
    """T_{alpha beta}, shape (5, 5, n, n, n, n), symmetric in (alpha, beta)."""
    g = w.a.grid
    F = w.curvature()
    e, f = F.e, F.f
    from .gaugefield import pair_component

    T = np.zeros((5, 5) + g.shape)
    e2 = np.einsum("k...a,k...a->...", e, e)
    f2 = np.einsum("k...a,k...a->...", f, f)
    ff = 2.0 * f2 - 2.0 * e2  # <F, F> = F_{ab} F^{ab}
    T[0, 0] = e2 + f2
    for j in range(1, 5):
        acc = np.zeros(g.shape)
        for k in range(1, 5):
            if k == j:
                continue
            acc += np.einsum("...a,...a->...", e[k - 1], pair_component(f, j, k))
        T[0, j] = 2.0 * acc
        T[j, 0] = T[0, j]
    for i in range(1, 5):
        for j in range(i, 5):
            acc = -np.einsum("...a,...a->...", e[i - 1], e[j - 1])
            for k in range(1, 5):
                acc += np.einsum(
                    "...a,...a->...", pair_component(f, i, k), pair_component(f, j, k)
                )
            T[i, j] = 2.0 * acc - (0.5 * ff if i == j else 0.0)
            T[j, i] = T[i, j]
    return T


# -- the X_eps multiplier machinery -----------------------------------------


def _cone_geometry(w: WaveState, vertex, eps: float):
    g = w.a.grid
    t0, x0 = vertex[0], vertex[1:]
    t = w.t - t0
    x = np.stack([g.coordinate_field(j) - x0[j - 1] for j in range(1, 5)])
    r = np.sqrt(np.einsum("j...,j...->...", x, x))
    rho2 = (t + eps) ** 2 - r**2
    mask = rho2 >= (2.0 * g.h) ** 2
    rho = np.sqrt(np.where(mask, rho2, 1.0))
    return t, x, r, rho, mask


def iota_xf(w: WaveState, eps: float, vertex=(0.0, 0.0, 0.0, 0.0, 0.0)) -> np.ndarray:
    """(iota_X F)_beta = X^alpha F_{alpha beta}, shape (5, ..., d).

    Component 0 is temporal; sites with rho_eps < 2h are zeroed.
    """
    g = w.a.grid
    t, x, r, rho, mask = _cone_geometry(w, vertex, eps)
    F = w.curvature()
    e = F.e
    from .gaugefield import pair_component

    out = np.zeros((5,) + g.shape + (w.a.spec.dim,))
    xe = np.einsum("j...,j...c->...c", x, e)
    out[0] = -xe / rho[..., None]
    for k in range(1, 5):
        acc = (t + eps) * e[k - 1]
        for j in range(1, 5):
            if j == k:
                continue
            acc = acc + x[j - 1][..., None] * pair_component(F.f, j, k)
        out[k] = acc / rho[..., None]
    return out * mask[..., None]


def interior_dissipation(w: WaveState, eps: float, vertex, gamma: float = 1.0) -> float:
    """Integral over the cone section of (2 / rho_eps)|iota_X F|^2."""
    g = w.a.grid
    t, x, r, rho, mask = _cone_geometry(w, vertex, eps)
    iota = iota_xf(w, eps, vertex)
    dens = np.einsum("b...c,b...c->...", iota, iota)
    inside = mask & (r <= gamma * abs(t))
    return g.integrate(np.where(inside, 2.0 * dens / rho, 0.0))


def weighted_energy(w: WaveState, vertex, eps: float) -> float:
    """The hyperboloidal weighted energy over the cone section S_t.

    Integrand (1/2) w+ (|alpha|^2 + |varrho|^2 + |sigma|^2)
            + (1/2) w- (|alphabar|^2 + |varrho|^2 + |sigma|^2),
    w+- = ((t + eps +- r) / (t + eps -+ r))^{1/2}; sites masked out of the
    null frame contribute the plain energy density with the mean weight.
    """
    g = w.a.grid
    t0, x0 = vertex[0], vertex[1:]
    t = w.t - t0
    if t <= 0:
        raise FieldError("cone section requires t > vertex time")
    if max(abs(c) for c in x0) + t > g.extent / 4.0 + 1e-12:
        raise FieldError("cone section leaves the inner half-box validity region")
    r = g.radius(center=x0)
    inside = r <= t
    strict = r < t + eps
    if not np.all(strict | ~inside):
        raise FieldError("cone section touches the characteristic r = t + eps")
    wp = np.sqrt(np.where(inside, (t + eps + r) / np.maximum(t + eps - r, 1e-300), 1.0))
    wm = 1.0 / wp
    nc = null_decompose(w, center=x0)

    def sq(v):
        return np.einsum("...c,...c->...", v, v)

    def sq3(v):
        return np.einsum("a...c,a...c->...", v, v)

    good = sq(nc.varrho) + sq3(nc.sigma)
    integrand = 0.5 * wp * (sq3(nc.alpha) + good) + 0.5 * wm * (sq3(nc.alphabar) + good)
    # masked (small-r) sites: null frame unavailable; reconstruction identity
    # lets the plain density stand in, with the mean weight
    dens = energy_density(w.curvature())
    integrand = np.where(nc.mask, integrand, 0.5 * (wp + wm) * dens)
    return g.integrate(np.where(inside, integrand, 0.0))


@dataclass
class MorawetzReport:
    t: float
    eps: float
    weighted_energy_start: float
    weighted_energy: float
    interior_dissipation_accum: float
    boundary_term: float
    identity_residual: float


def _boundary_flux(w: WaveState, vertex, eps: float) -> float:
    """Lateral cone-boundary integrand: shell sum of P_0 + nhat^j P_j.

    P_alpha = T_{alpha beta} X^beta; the shell is one cell thick around
    r = t - t0, volume-summed and divided by the thickness h.
    """
    g = w.a.grid
    t0, x0 = vertex[0], vertex[1:]
    t = w.t - t0
    x = np.stack([g.coordinate_field(j) - x0[j - 1] for j in range(1, 5)])
    r = g.radius(center=x0)
    rho = np.sqrt(np.maximum((t + eps) ** 2 - r**2, 1e-300))
    T = energy_momentum(w)
    X = np.zeros((5,) + g.shape)
    X[0] = (t + eps) / rho
    for j in range(1, 5):
        X[j] = x[j - 1] / rho
    P = np.einsum("ab...,b...->a...", T, X)
    nhat = x / np.where(r > 0.0, r, 1.0)
    flux = P[0] + np.einsum("j...,j...->...", nhat, P[1:])
    shell = np.abs(r - t) <= 0.5 * g.h
    return g.integrate(np.where(shell, flux, 0.0)) / g.h


def morawetz_identity_residual(
    snapshots: List[WaveState],
    vertex,
    eps: float,
    t1: float,
    t2: float,
) -> MorawetzReport:
    """Assemble both sides of the integrated monotonicity identity.

    LHS: weighted energy at t2 plus the time-integrated interior
    dissipation; RHS: weighted energy at t1 plus the time-integrated
    lateral boundary flux.  Time integrals by the trapezoid rule over the
    snapshots falling in [t1, t2].
    """
    sel = [w for w in snapshots if t1 - 1e-12 <= w.t <= t2 + 1e-12]
    if len(sel) < 2:
        raise FieldError("need at least two snapshots in [t1, t2]")
    times = np.array([w.t for w in sel])
    diss = np.array([interior_dissipation(w, eps, vertex) for w in sel])
    flux = np.array([_boundary_flux(w, vertex, eps) for w in sel])
    diss_int = float(np.trapezoid(diss, times))
    flux_int = float(np.trapezoid(flux, times))
    we1 = weighted_energy(sel[0], vertex, eps)
    we2 = weighted_energy(sel[-1], vertex, eps)
    lhs = we2 + diss_int
    rhs = we1 + flux_int
    residual = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-300)
    return MorawetzReport(
        t=sel[-1].t,
        eps=eps,
        weighted_energy_start=we1,
        weighted_energy=we2,
        interior_dissipation_accum=diss_int,
        boundary_term=flux_int,
        identity_residual=residual,
    )
