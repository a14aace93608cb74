"""Unit tests for the Lie algebra / group kernel."""

import numpy as np
import pytest

from ym4 import algebra
from ym4.algebra import (
    AlgebraError,
    GroupValue,
    LieGroupSpec,
    LieValue,
    adjoint,
    bracket,
    exp,
    identity,
    inner,
)

SU2 = algebra.su2()
AB = algebra.abelian(3)


def lv(*coeffs):
    return LieValue(SU2, np.array(coeffs, dtype=float))


def test_su2_structure_constants_shiped_properties():
    c = SU2.structure_constants
    assert np.max(np.abs(c + np.swapaxes(c, 0, 1))) == 0.0
    assert np.max(np.abs(c + np.swapaxes(c, 1, 2))) == 0.0
    assert SU2.jacobi_residual() <= 1e-14
    assert SU2.is_su2


def test_bad_structure_constants_rejected():
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0  # not antisymmetric in (a, b)
    with pytest.raises(AlgebraError):
        LieGroupSpec("bad", 3, c)
    with pytest.raises(AlgebraError):
        LieGroupSpec("badshape", 3, np.zeros((2, 2, 2)))


def test_non_jacobi_table_rejected():
    # antisymmetric in all indices but scaled inconsistently across triples
    # of a 4-dimensional table: break Jacobi while keeping antisymmetry
    c = np.zeros((7, 7, 7))
    for (a, b, k), s in (((0, 1, 2), 1.0), ((2, 3, 4), 1.0), ((4, 5, 0), 1.0)):
        for i, j, l in ((a, b, k), (b, k, a), (k, a, b)):
            c[i, j, l] = s
            c[j, i, l] = -s
    with pytest.raises(AlgebraError):
        LieGroupSpec("nonjacobi", 7, c)


def test_bracket_su2_basis():
    e1, e2, e3 = lv(1, 0, 0), lv(0, 1, 0), lv(0, 0, 1)
    assert np.allclose(bracket(e1, e2).coeffs, e3.coeffs)
    x = lv(0.3, -1.2, 0.7)
    assert np.allclose(bracket(x, x).coeffs, 0.0)


def test_bracket_invariance_random_triples():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(1000):
        x, y, z = (LieValue(SU2, rng.normal(size=3)) for _ in range(3))
        worst = max(worst, abs(inner(bracket(x, y), z) - inner(x, bracket(y, z))))
    assert worst <= 1e-14


def test_inner_orthonormal_and_antisymmetry():
    e1 = lv(1, 0, 0)
    assert inner(e1, e1) == 1.0
    rng = np.random.default_rng(2)
    for _ in range(50):
        x, y = (LieValue(SU2, rng.normal(size=3)) for _ in range(2))
        assert abs(inner(x, bracket(x, y))) <= 1e-14


def test_spec_mismatch_raises():
    with pytest.raises(AlgebraError):
        bracket(lv(1, 0, 0), LieValue(AB, np.zeros(3)))


def _quat_to_su2_matrix(q):
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    return q[0] * np.eye(2) - 1j * (q[1] * sx + q[2] * sy + q[3] * sz)


def test_exp_matches_matrix_series_oracle():
    # exp(theta e_3) against the 30-term series of exp(-i theta sigma_3 / 2)
    theta = np.pi / 2
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    m = -1j * theta * sz / 2.0
    series = np.zeros((2, 2), dtype=complex)
    term = np.eye(2, dtype=complex)
    for k in range(30):
        series += term
        term = term @ m / (k + 1)
    got = _quat_to_su2_matrix(exp(lv(0, 0, theta)).data)
    assert np.max(np.abs(got - series)) <= 1e-12


def test_exp_identity_and_inverse():
    assert np.allclose(exp(lv(0, 0, 0)).data, identity(SU2).data)
    x = lv(0.4, -0.2, 0.9)
    prod = exp(x) @ exp(LieValue(SU2, -x.coeffs))
    assert np.max(np.abs(prod.data - identity(SU2).data)) <= 1e-12


def test_exp_one_parameter_subgroup():
    x = lv(0.0, 0.7, 0.0)
    two = exp(LieValue(SU2, 2.0 * x.coeffs))
    assert np.max(np.abs((exp(x) @ exp(x)).data - two.data)) <= 1e-12


def test_adjoint_identity_norm_and_invariance():
    rng = np.random.default_rng(3)
    x = LieValue(SU2, rng.normal(size=3))
    assert np.allclose(adjoint(identity(SU2), x).coeffs, x.coeffs)
    o = exp(LieValue(SU2, rng.normal(size=3)))
    ax = adjoint(o, x)
    assert abs(ax.norm() - x.norm()) <= 1e-12
    y = LieValue(SU2, rng.normal(size=3))
    assert abs(inner(adjoint(o, x), adjoint(o, y)) - inner(x, y)) <= 1e-12


def test_adjoint_homomorphism():
    rng = np.random.default_rng(4)
    x = LieValue(SU2, rng.normal(size=3))
    o1 = exp(LieValue(SU2, rng.normal(size=3)))
    o2 = exp(LieValue(SU2, rng.normal(size=3)))
    lhs = adjoint(o1 @ o2, x).coeffs
    rhs = adjoint(o1, adjoint(o2, x)).coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-12


def test_adjoint_derivative_is_bracket():
    # Ad(exp(tY))X = X + t[Y,X] + O(t^2): the residual must drop 4x per halving
    rng = np.random.default_rng(5)
    x = LieValue(SU2, rng.normal(size=3))
    y = LieValue(SU2, rng.normal(size=3))
    errs = []
    for t in (1e-2, 5e-3):
        got = adjoint(exp(LieValue(SU2, t * y.coeffs)), x).coeffs
        lin = x.coeffs + t * bracket(y, x).coeffs
        errs.append(np.linalg.norm(got - lin))
    ratio = errs[0] / errs[1]
    assert 3.0 <= ratio <= 5.0


def test_abelian_brackets_vanish():
    rng = np.random.default_rng(6)
    x = LieValue(AB, rng.normal(size=3))
    y = LieValue(AB, rng.normal(size=3))
    assert np.allclose(bracket(x, y).coeffs, 0.0)
    # exp in the adjoint representation of an abelian algebra is trivial
    assert np.allclose(exp(x).data, np.eye(3))


def test_group_value_renormalization():
    q = GroupValue(SU2, np.array([1.0, 1e-8, 0.0, 0.0]))
    assert q.renormalized().unitarity_residual() <= 1e-14
    m = GroupValue(AB, np.eye(3) + 1e-8 * np.ones((3, 3)))
    assert m.renormalized().unitarity_residual() <= 1e-12


def test_load_spec_roundtrip(tmp_path):
    path = tmp_path / "su2.spec"
    c = SU2.structure_constants
    flat = " ".join(str(v) for v in c.ravel())
    path.write_text(f"name = su2file\ndim = 3\nc = {flat}\n")
    spec = algebra.load_spec(path)
    assert spec.dim == 3
    assert spec.is_su2


def test_load_spec_malformed(tmp_path):
    path = tmp_path / "bad.spec"
    path.write_text("name = x\ndim = 3\n")
    with pytest.raises(AlgebraError):
        algebra.load_spec(path)


def test_quat_kernels_roundtrip():
    rng = np.random.default_rng(7)
    coeffs = rng.normal(size=(10, 3))
    q = algebra.quat_exp(coeffs)
    assert np.max(np.abs(np.linalg.norm(q, axis=-1) - 1.0)) <= 1e-12
    back = algebra.quat_log_coeffs(q)
    assert np.max(np.abs(back - coeffs)) <= 1e-10
    r = algebra.quat_rotation_matrix(q)
    eye = np.einsum("...ij,...kj->...ik", r, r)
    assert np.max(np.abs(eye - np.eye(3))) <= 1e-12


def test_bracket_arr_matches_structure_constants():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(5, 3))
    y = rng.normal(size=(5, 3))
    via_cross = algebra.bracket_arr(SU2, x, y)
    via_table = np.einsum("...a,...b,abk->...k", x, y, SU2.structure_constants)
    assert np.max(np.abs(via_cross - via_table)) <= 1e-13
