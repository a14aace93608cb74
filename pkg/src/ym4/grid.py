"""Periodic 4D grid infrastructure.

Fields are plain numpy arrays with spatial shape (n, n, n, n), stored
site-major with x4 slowest and x1 fastest; coordinate axis j (1..4) lives on
numpy axis 4 - j.  Lie-algebra-valued fields append the algebra index as a
trailing axis.  Coordinates run over [-L/2, L/2) with L = n*h.

Derivative backends:
  - "stencil4": fourth-order central differences (default).
  - "spectral": exact i*kappa Fourier symbol with the Nyquist mode zeroed;
    used by the small-grid symbol checks where stencil symbols are not
    additive across frequency pairs.

Boundary modes:
  - "periodic" (default): wrap-around stencils, FFT machinery available.
  - "open": one-sided fourth-order stencils at the box faces, for sampled
    whole-space fields that do not close up across the seam; spectral
    operations are unavailable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft

# scipy.fft worker count is pinned so reductions and transforms are
# bitwise reproducible regardless of the requested thread budget
_FFT_WORKERS = 1


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid4:
    """Uniform 4D grid, n points per axis, spacing h."""

    n: int
    h: float
    boundary: str = "periodic"
    deriv: str = "stencil4"

    def __post_init__(self):
        if self.n < 8 or self.n % 2:
            raise GridError("n must be even and >= 8")
        if self.h <= 0:
            raise GridError("h must be positive")
        if self.boundary not in ("periodic", "open"):
            raise GridError(f"unknown boundary mode {self.boundary!r}")
        if self.deriv not in ("stencil4", "spectral"):
            raise GridError(f"unknown derivative mode {self.deriv!r}")
        if self.deriv == "spectral" and self.boundary != "periodic":
            raise GridError("spectral derivatives require a periodic grid")

    @property
    def extent(self) -> float:
        return self.n * self.h

    @property
    def shape(self) -> tuple:
        return (self.n,) * 4

    def axis(self, j: int) -> int:
        """Numpy axis carrying coordinate direction j (1..4)."""
        if j not in (1, 2, 3, 4):
            raise GridError(f"axis must be 1..4, got {j}")
        return 4 - j

    def coords1d(self) -> np.ndarray:
        return np.arange(self.n) * self.h - self.extent / 2.0

    def coordinate_field(self, j: int) -> np.ndarray:
        """Coordinate x_j as a full (n,n,n,n) array."""
        c = self.coords1d()
        shape = [1, 1, 1, 1]
        shape[self.axis(j)] = self.n
        return np.broadcast_to(c.reshape(shape), self.shape).copy()

    def radius(self, center=(0.0, 0.0, 0.0, 0.0)) -> np.ndarray:
        r2 = np.zeros(self.shape)
        for j in range(1, 5):
            r2 += (self.coordinate_field(j) - center[j - 1]) ** 2
        return np.sqrt(r2)

    # -- Fourier machinery --------------------------------------------------

    def _require_periodic(self, what: str) -> None:
        if self.boundary != "periodic":
            raise GridError(f"{what} requires a periodic grid")

    def fft(self, f: np.ndarray) -> np.ndarray:
        self._require_periodic("fft")
        return scipy.fft.fftn(f, axes=(0, 1, 2, 3), workers=_FFT_WORKERS)

    def ifft(self, fhat: np.ndarray) -> np.ndarray:
        self._require_periodic("ifft")
        return scipy.fft.ifftn(fhat, axes=(0, 1, 2, 3), workers=_FFT_WORKERS)

    def wavenumbers1d(self) -> np.ndarray:
        """kappa values in FFT order for one axis."""
        return 2.0 * np.pi * scipy.fft.fftfreq(self.n, d=self.h)

    def deriv_symbol1d(self) -> np.ndarray:
        """Imaginary part of the first-derivative symbol per mode, one axis.

        stencil4: s(kappa) = (8 sin(kappa h) - sin(2 kappa h)) / (6h); this
        vanishes at Nyquist.  spectral: kappa itself, Nyquist zeroed (the
        Nyquist derivative sign is ambiguous on a real grid).
        """
        kappa = self.wavenumbers1d()
        if self.deriv == "stencil4":
            kh = kappa * self.h
            s = (8.0 * np.sin(kh) - np.sin(2.0 * kh)) / (6.0 * self.h)
            # sin(pi) evaluates to ~1e-16, not 0; snap the Nyquist entry so
            # zero-symbol guards (inverse Laplacian, deflation) engage exactly.
            s[self.n // 2] = 0.0
            return s
        s = kappa.copy()
        s[self.n // 2] = 0.0
        return s

    def deriv_symbol(self, j: int) -> np.ndarray:
        """Broadcastable (along the j-axis) symbol array for direction j."""
        s = self.deriv_symbol1d()
        shape = [1, 1, 1, 1]
        shape[self.axis(j)] = self.n
        return s.reshape(shape)

    def laplace_symbol(self) -> np.ndarray:
        """Symbol of the discrete Laplacian Sum_j partial_j partial_j (<= 0)."""
        s = self.deriv_symbol1d()
        out = np.zeros(self.shape)
        for j in range(1, 5):
            shape = [1, 1, 1, 1]
            shape[self.axis(j)] = self.n
            out = out - (s**2).reshape(shape)
        return out

    # -- derivatives --------------------------------------------------------

    def partial(self, f: np.ndarray, j: int) -> np.ndarray:
        """d f / d x_j; extra trailing axes (algebra index) pass through."""
        ax = self.axis(j)
        if self.deriv == "spectral":
            sym = self.deriv_symbol(j)
            if f.ndim > 4:
                sym = sym.reshape(sym.shape + (1,) * (f.ndim - 4))
            return np.real(self.ifft(self.fft(f) * (1j * sym)))
        if self.boundary == "periodic":
            return (
                8.0 * (np.roll(f, -1, axis=ax) - np.roll(f, 1, axis=ax))
                - (np.roll(f, -2, axis=ax) - np.roll(f, 2, axis=ax))
            ) / (12.0 * self.h)
        return self._partial_open(f, ax)

    def _partial_open(self, f: np.ndarray, ax: int) -> np.ndarray:
        g = np.moveaxis(f, ax, 0)
        out = np.empty_like(g)
        out[2:-2] = (8.0 * (g[3:-1] - g[1:-3]) - (g[4:] - g[:-4])) / (12.0 * self.h)
        c0 = np.array([-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25]) / self.h
        c1 = np.array([-0.25, -5.0 / 6.0, 1.5, -0.5, 1.0 / 12.0]) / self.h
        out[0] = np.tensordot(c0, g[:5], axes=(0, 0))
        out[1] = np.tensordot(c1, g[:5], axes=(0, 0))
        out[-1] = -np.tensordot(c0, g[-5:][::-1], axes=(0, 0))
        out[-2] = -np.tensordot(c1, g[-5:][::-1], axes=(0, 0))
        return np.moveaxis(out, 0, ax)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        out = np.zeros_like(f)
        for j in range(1, 5):
            out += self.partial(self.partial(f, j), j)
        return out

    def laplace_inverse(self, f: np.ndarray, zero_mean: bool = False) -> np.ndarray:
        """Spectral inverse of the discrete Laplacian.

        Modes where the discrete symbol vanishes (the mean and, for the
        stencil backend, pure Nyquist combinations) are set to zero, so the
        round trip laplacian(laplace_inverse(f)) reproduces f minus exactly
        those modes.
        """
        self._require_periodic("laplace_inverse")
        if zero_mean:
            f = f - f.mean(axis=(0, 1, 2, 3), keepdims=True)
        sym = self.laplace_symbol()
        if f.ndim > 4:
            sym = sym.reshape(sym.shape + (1,) * (f.ndim - 4))
        inv = np.where(sym != 0.0, sym, 1.0)
        fhat = self.fft(f) / inv
        fhat = np.where(sym != 0.0, fhat, 0.0)
        return np.real(self.ifft(fhat))

    # -- reductions ---------------------------------------------------------

    def integrate(self, f: np.ndarray) -> float:
        """h^4 * Sum over sites (numpy pairwise sum: deterministic)."""
        return float(np.sum(f) * self.h**4)

    def l2norm(self, f: np.ndarray) -> float:
        """L2(dx) norm; trailing component axes are summed in quadrature."""
        return float(np.sqrt(np.sum(np.asarray(f) ** 2) * self.h**4))

    def max_norm(self, f: np.ndarray) -> float:
        return float(np.max(np.abs(f)))

    # -- band-limited resampling -------------------------------------------

    def fourier_resample(self, f: np.ndarray, scale: float, center) -> np.ndarray:
        """Sample the band-limited interpolant of f at center + scale * x.

        The target points form a uniform grid, so the evaluation is separable:
        one n x n complex evaluation matrix per axis, contracted in sequence.
        Trailing component axes pass through.
        """
        self._require_periodic("fourier_resample")
        fhat = self.fft(f) / self.n**4
        kappa = self.wavenumbers1d()
        y = self.coords1d()
        out = fhat
        for ax in range(4):
            j = 4 - ax
            x_eval = center[j - 1] + scale * y
            # the FFT phases are relative to the first sample at -L/2
            phase = x_eval + self.extent / 2.0
            emat = np.exp(1j * np.outer(kappa, phase))
            # real interpolant: the Nyquist mode is the cosine, not e^{i kappa x}
            # (its sine partner is invisible to the samples); this keeps
            # lattice-aligned evaluations exact
            emat[self.n // 2, :] = np.cos(kappa[self.n // 2] * phase)
            out = np.moveaxis(np.tensordot(emat, out, axes=(0, ax)), 0, ax)
        return np.real(out)
