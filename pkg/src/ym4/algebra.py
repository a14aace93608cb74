"""Lie algebra / Lie group kernel.

The algebra is described by structure constants c[a,b,c] in an orthonormal
basis, so the inner product of coefficient vectors is the plain Euclidean dot
product and bi-invariance is equivalent to total antisymmetry of c.

The default group is su(2) with basis e_a = -i sigma_a / 2, for which
[e_a, e_b] = eps_{abc} e_c and group elements are unit quaternions.
Table-loaded generic groups store elements in the adjoint representation
(real orthogonal d x d matrices).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class AlgebraError(ValueError):
    """Raised for invalid structure constants or mismatched specs."""


def _su2_structure_constants() -> np.ndarray:
    c = np.zeros((3, 3, 3))
    for a, b, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[a, b, k] = 1.0
        c[b, a, k] = -1.0
    return c


@dataclass(frozen=True)
class LieGroupSpec:
    """Structure constants of a compact Lie algebra in an orthonormal basis."""

    name: str
    dim: int
    structure_constants: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.structure_constants, dtype=float)
        if c.shape != (self.dim, self.dim, self.dim):
            raise AlgebraError(
                f"structure constants must be ({self.dim},)*3, got {c.shape}"
            )
        object.__setattr__(self, "structure_constants", c)
        self.validate()

    def validate(self, tol: float = 1e-12) -> None:
        c = self.structure_constants
        if np.max(np.abs(c + np.swapaxes(c, 0, 1))) > tol:
            raise AlgebraError("structure constants not antisymmetric in (a,b)")
        # total antisymmetry <=> bi-invariance of the Euclidean inner product
        if np.max(np.abs(c + np.swapaxes(c, 1, 2))) > tol:
            raise AlgebraError("structure constants not totally antisymmetric")
        # Jacobi: sum_m c[a,b,m] c[m,k,l] + cyclic in (a,b,k) = 0
        j = (
            np.einsum("abm,mkl->abkl", c, c)
            + np.einsum("bkm,mal->abkl", c, c)
            + np.einsum("kam,mbl->abkl", c, c)
        )
        if np.max(np.abs(j)) > tol:
            raise AlgebraError("Jacobi identity violated")

    @property
    def is_su2(self) -> bool:
        return self.dim == 3 and np.allclose(
            self.structure_constants, _su2_structure_constants()
        )

    def jacobi_residual(self) -> float:
        c = self.structure_constants
        j = (
            np.einsum("abm,mkl->abkl", c, c)
            + np.einsum("bkm,mal->abkl", c, c)
            + np.einsum("kam,mbl->abkl", c, c)
        )
        return float(np.max(np.abs(j)))


def su2() -> LieGroupSpec:
    """The shipped default: su(2) with e_a = -i sigma_a / 2."""
    return LieGroupSpec("su2", 3, _su2_structure_constants())


def abelian(dim: int = 3) -> LieGroupSpec:
    """All-zero brackets; the linear (Maxwell-type) contrast group."""
    return LieGroupSpec(f"abelian{dim}", dim, np.zeros((dim, dim, dim)))


def load_spec(path) -> LieGroupSpec:
    """Load a group spec from a key-value text file.

    Expected keys: ``name``, ``dim`` and ``c`` (flat, row-major list of
    dim^3 floats, whitespace- or comma-separated, may span multiple
    continuation lines that start with whitespace).
    """
    entries = {}
    key = None
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if line[0].isspace() and key is not None:
                entries[key] += " " + line.strip()
                continue
            if "=" not in line:
                raise AlgebraError(f"malformed line in group spec: {line!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            entries[key] = val.strip()
    for req in ("name", "dim", "c"):
        if req not in entries:
            raise AlgebraError(f"group spec missing key {req!r}")
    dim = int(entries["dim"])
    flat = [float(tok) for tok in entries["c"].replace(",", " ").split()]
    if len(flat) != dim**3:
        raise AlgebraError(f"expected {dim**3} structure constants, got {len(flat)}")
    c = np.array(flat).reshape(dim, dim, dim)
    return LieGroupSpec(entries["name"], dim, c)


# -- values ------------------------------------------------------------------


@dataclass(frozen=True)
class LieValue:
    """A point of the Lie algebra: coefficients in the orthonormal basis."""

    spec: LieGroupSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.spec.dim,):
            raise AlgebraError(f"expected {self.spec.dim} coefficients")
        if not np.all(np.isfinite(c)):
            raise AlgebraError("non-finite coefficients")
        object.__setattr__(self, "coeffs", c)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


@dataclass(frozen=True)
class GroupValue:
    """A group element.

    su(2): unit quaternion, ``data.shape == (4,)`` ordered (w, x, y, z).
    Generic: real orthogonal matrix in the adjoint representation,
    ``data.shape == (d, d)``.
    """

    spec: LieGroupSpec
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", np.asarray(self.data, dtype=float))

    @property
    def is_quaternion(self) -> bool:
        return self.data.shape == (4,)

    def unitarity_residual(self) -> float:
        if self.is_quaternion:
            return abs(float(self.data @ self.data) - 1.0)
        d = self.data
        return float(np.max(np.abs(d @ d.T - np.eye(d.shape[0]))))

    def renormalized(self) -> "GroupValue":
        if self.is_quaternion:
            return GroupValue(self.spec, self.data / np.linalg.norm(self.data))
        u, _, vt = np.linalg.svd(self.data)
        return GroupValue(self.spec, u @ vt)

    def inverse(self) -> "GroupValue":
        if self.is_quaternion:
            q = self.data
            return GroupValue(self.spec, np.array([q[0], -q[1], -q[2], -q[3]]))
        return GroupValue(self.spec, self.data.T)

    def __matmul__(self, other: "GroupValue") -> "GroupValue":
        if self.spec is not other.spec and self.spec != other.spec:
            raise AlgebraError("group values from different specs")
        if self.is_quaternion:
            return GroupValue(self.spec, quat_mul(self.data, other.data))
        return GroupValue(self.spec, self.data @ other.data)


def identity(spec: LieGroupSpec) -> GroupValue:
    if spec.is_su2:
        return GroupValue(spec, np.array([1.0, 0.0, 0.0, 0.0]))
    return GroupValue(spec, np.eye(spec.dim))


# -- operations --------------------------------------------------------------


def _check_same_spec(x: LieValue, y: LieValue) -> None:
    if x.spec != y.spec:
        raise AlgebraError("operands belong to different group specs")


def bracket(x: LieValue, y: LieValue) -> LieValue:
    """[X, Y] via structure constants."""
    _check_same_spec(x, y)
    c = x.spec.structure_constants
    return LieValue(x.spec, np.einsum("a,b,abk->k", x.coeffs, y.coeffs, c))


def inner(x: LieValue, y: LieValue) -> float:
    """Bi-invariant inner product (Euclidean dot of coefficients)."""
    _check_same_spec(x, y)
    return float(x.coeffs @ y.coeffs)


def exp(x: LieValue) -> GroupValue:
    """Group exponential in the shipped representation."""
    if x.spec.is_su2:
        return GroupValue(x.spec, quat_exp(x.coeffs))
    # adjoint representation: exp(ad_X), ad_X acting on coefficient vectors
    c = x.spec.structure_constants
    ad = np.einsum("a,abk->bk", x.coeffs, c).T  # (ad_X Y)_k = c[a,b,k] X_a Y_b
    from scipy.linalg import expm

    return GroupValue(x.spec, expm(ad))


def adjoint(o: GroupValue, x: LieValue) -> LieValue:
    """Ad(O) X = O X O^{-1}, acting on coefficient vectors."""
    if o.spec != x.spec:
        raise AlgebraError("operands belong to different group specs")
    if o.is_quaternion:
        r = quat_rotation_matrix(o.data)
        return LieValue(x.spec, r @ x.coeffs)
    return LieValue(x.spec, o.data @ x.coeffs)


# -- quaternion kernels (vectorized; leading axes arbitrary) -----------------


def quat_mul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product; quaternion components on the last axis."""
    pw, px, py, pz = (p[..., i] for i in range(4))
    qw, qx, qy, qz = (q[..., i] for i in range(4))
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    out = q.copy()
    out[..., 1:] *= -1.0
    return out


def quat_normalize(q: np.ndarray) -> np.ndarray:
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def quat_exp(coeffs: np.ndarray) -> np.ndarray:
    """exp of the algebra element with the given su(2) coefficients.

    e_a corresponds to the quaternion (i, j, k)_a / 2, so exp(c . e) is the
    unit quaternion (cos(|c|/2), sin(|c|/2) c_hat / 1) with vector part
    sin(|c|/2) * c / |c|.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    theta = np.linalg.norm(coeffs, axis=-1, keepdims=True)
    half = 0.5 * theta
    # sin(x)/x, stable at 0
    sinc = np.where(theta > 1e-30, np.sin(half) / np.where(theta > 1e-30, theta, 1.0), 0.5)
    w = np.cos(half)
    return np.concatenate([w, coeffs * sinc], axis=-1)


def quat_log_coeffs(q: np.ndarray) -> np.ndarray:
    """Inverse of quat_exp: algebra coefficients of a unit quaternion."""
    q = np.asarray(q, dtype=float)
    w = np.clip(q[..., :1], -1.0, 1.0)
    v = q[..., 1:]
    vn = np.linalg.norm(v, axis=-1, keepdims=True)
    theta = 2.0 * np.arctan2(vn, w)
    scale = np.where(vn > 1e-30, theta / np.where(vn > 1e-30, vn, 1.0), 2.0)
    return v * scale


def quat_rotation_matrix(q: np.ndarray) -> np.ndarray:
    """SO(3) matrix rotating algebra coefficients: Ad(q).

    Output shape ``q.shape[:-1] + (3, 3)``.
    """
    w, x, y, z = (q[..., i] for i in range(4))
    r = np.empty(q.shape[:-1] + (3, 3))
    r[..., 0, 0] = 1 - 2 * (y * y + z * z)
    r[..., 0, 1] = 2 * (x * y - w * z)
    r[..., 0, 2] = 2 * (x * z + w * y)
    r[..., 1, 0] = 2 * (x * y + w * z)
    r[..., 1, 1] = 1 - 2 * (x * x + z * z)
    r[..., 1, 2] = 2 * (y * z - w * x)
    r[..., 2, 0] = 2 * (x * z - w * y)
    r[..., 2, 1] = 2 * (y * z + w * x)
    r[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return r


# -- vectorized algebra on coefficient arrays --------------------------------


def bracket_arr(spec: LieGroupSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pointwise bracket of coefficient arrays (algebra axis last)."""
    if spec.is_su2:
        return np.cross(x, y)
    return np.einsum("...a,...b,abk->...k", x, y, spec.structure_constants)


def inner_arr(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pointwise inner product of coefficient arrays (algebra axis last)."""
    return np.einsum("...a,...a->...", x, y)
