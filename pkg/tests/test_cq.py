import numpy as np
import pytest
from hypothesis import given, strategies as st

from schrocq.cq import (CqContext, DomainError, ScalarSymbol, WeightSequence, b_of_z, contour_radius,
                        cq_apply, cq_apply_all, cq_weights, decouple_stages, delta_of_z,
                        delta_sherman_morrison, matrix_function)
from schrocq.linalg import SingularMatrixError
from schrocq.tableaus import TABLEAU_NAMES, builtin_tableau

ident = ScalarSymbol(lambda s: s, "s")


def test_delta_at_zero_is_a_inverse():
    for name in TABLEAU_NAMES:
        t = builtin_tableau(name)
        assert np.allclose(delta_of_z(t, 0), t.Ainv, atol=1e-13)


def test_delta_backward_euler():
    assert delta_of_z(builtin_tableau("radau_iia_1"), 0.5)[0, 0] == pytest.approx(0.5)


def test_delta_pole():
    with pytest.raises(SingularMatrixError):
        delta_of_z(builtin_tableau("gauss1"), 1.0)


@given(st.sampled_from(TABLEAU_NAMES), st.floats(0, 0.99), st.floats(0, 2 * np.pi))
def test_delta_forms_and_spectrum(name, r, phi):
    t = builtin_tableau(name)
    z = r * np.exp(1j * phi)
    D = delta_of_z(t, z)
    assert np.linalg.norm(D - delta_sherman_morrison(t, z)) <= 1e-12 * np.linalg.norm(D)
    assert np.min(np.linalg.eigvals(D).real) > 0


def test_b_backward_euler_unit_step():
    ctx = CqContext.create(builtin_tableau("radau_iia_1"), 1.0, 4)
    assert b_of_z(ctx, 0)[0, 0] == pytest.approx(np.exp(-1j * np.pi / 4))


def test_b_midpoint_positive_real_part():
    ctx = CqContext.create(builtin_tableau("gauss1"), 0.1, 4)
    B = b_of_z(ctx, 0)
    assert B[0, 0].real > 0
    assert B[0, 0] == pytest.approx(np.sqrt(-20j))


@pytest.mark.parametrize("V0", [0.0, 1.0, 3.5])
@pytest.mark.parametrize("name", TABLEAU_NAMES)
def test_b_squares_back(name, V0, rng):
    t = builtin_tableau(name)
    ctx = CqContext.create(t, 0.07, 8, V0=V0)
    for z in rng.uniform(0, 0.95, 5) * np.exp(2j * np.pi * rng.uniform(size=5)):
        B = b_of_z(ctx, z)
        arg = -1j * delta_of_z(t, z) / ctx.k + V0 * np.eye(t.m)
        assert np.linalg.norm(B @ B - arg) <= 1e-10 * np.linalg.norm(arg)
        assert np.min(np.linalg.eigvals(B).real) >= 0


def test_contour_radius_rule():
    k, Q = 0.05, 64
    assert contour_radius(k, Q) == pytest.approx(max((2.0 ** -52) ** (1 / 130), k ** (3 / 65)))
    assert 0 < contour_radius(2.0, 10) < 1


def test_context_validation():
    t = builtin_tableau("gauss1")
    with pytest.raises(ValueError):
        CqContext.create(t, 0.1, 10, Q=5)
    with pytest.raises(ValueError):
        CqContext.create(t, 0.1, 10, lam=1.2)
    with pytest.raises(ValueError):
        CqContext.create(t, -0.1, 10)


def test_context_frequencies_in_right_half_plane():
    ctx = CqContext.create(builtin_tableau("radau_iia_3"), 0.01, 20)
    assert len(ctx.deltas) == ctx.Q + 1
    for e in ctx.eigs:
        assert np.min(e.eigenvalues.real) > 0


def test_matrix_function_identity(rng):
    M = np.array([[3, 1], [0.5, 2]], dtype=complex)
    assert np.allclose(matrix_function(ident, M), M)


def test_matrix_function_square():
    got = matrix_function(lambda s: s * s, [[2, 1], [0, 3]])
    assert np.allclose(got, [[4, 5], [0, 9]])


def test_matrix_function_inverse_diagonal():
    assert np.allclose(matrix_function(lambda s: 1 / s, np.diag([2, 4])), np.diag([0.5, 0.25]))


def test_matrix_function_domain():
    with pytest.raises(DomainError):
        matrix_function(np.sqrt, np.diag([-1.0, 2.0]))


def test_contour_path_agrees_with_diagonalization():
    M = np.array([[2 + 1j, 0.5], [0.3, 3 - 0.5j]])
    a = matrix_function(np.sqrt, M)
    b = matrix_function(np.sqrt, M, force_contour=True)
    assert np.linalg.norm(a - b) <= 1e-8 * np.linalg.norm(a)


def test_defective_matrix_uses_contour():
    M = np.array([[2.0, 1.0], [0.0, 2.0]])
    S = matrix_function(np.sqrt, M)
    assert np.allclose(S @ S, M, atol=1e-8)


def test_operator_valued_function():
    M = np.array([[2.0, 1.0], [0.0, 3.0]])
    F = lambda s: np.array([[s, 0], [1, s * s]])
    got = matrix_function(F, M)
    # block (i, j) of the result is sum_l P[i,l] Pinv[l,j] F(lam_l)
    expect = np.zeros((4, 4), complex)
    w, P = np.linalg.eig(M)
    Pinv = np.linalg.inv(P)
    for l in range(2):
        expect += np.kron(np.outer(P[:, l], Pinv[l]), F(w[l]))
    assert np.allclose(got, expect)
    assert np.allclose(got, matrix_function(F, M, force_contour=True), atol=1e-8)


@given(st.integers(1, 3), st.integers(0, 2 ** 32 - 1))
def test_sqrt_reconstruction_property(m, seed):
    r = np.random.default_rng(seed)
    P = r.normal(size=(m, m)) + 1j * r.normal(size=(m, m)) + 2 * np.eye(m)
    lam = r.uniform(0.1, 5, m) + 1j * r.uniform(-5, 5, m)
    M = P @ np.diag(lam) @ np.linalg.inv(P)
    S = matrix_function(np.sqrt, M)
    assert np.linalg.norm(S @ S - M) <= 1e-10 * np.linalg.norm(M) * max(1, np.linalg.cond(P))


def test_weights_identity_symbol_backward_euler():
    ctx = CqContext.create(builtin_tableau("radau_iia_1"), 0.1, 32)
    W = cq_weights(ctx, ident, mode="direct").weights[:, 0, 0]
    expect = np.zeros(33)
    expect[:2] = [10, -10]
    assert np.max(np.abs(W - expect)) <= 1e-8


def test_weights_constant_symbol():
    ctx = CqContext.create(builtin_tableau("radau_iia_2"), 0.1, 16)
    W = cq_weights(ctx, lambda s: np.ones_like(s), mode="direct").weights
    assert np.allclose(W[0], np.eye(2), atol=1e-12)
    assert np.max(np.abs(W[1:])) <= 1e-12


def test_weights_integrator_unit_step():
    # 1/(1 - z) = sum z^n; the contour aliasing floor is lam^(Q+1) = sqrt(eps)
    ctx = CqContext.create(builtin_tableau("radau_iia_1"), 1.0, 32)
    W = cq_weights(ctx, lambda s: 1 / s, mode="direct").weights[:, 0, 0]
    assert np.max(np.abs(W - 1)) <= 2e-8


def test_weights_modes_differ_by_composition():
    ctx = CqContext.create(builtin_tableau("gauss1"), 0.1, 8)
    a = cq_weights(ctx, ident, mode="compose").weights
    b = cq_weights(ctx, lambda s: np.sqrt(-1j * s), mode="direct").weights
    assert np.allclose(a, b)
    with pytest.raises(ValueError):
        cq_weights(ctx, ident, mode="other")


def test_apply_identity_weights(rng):
    W = np.zeros((5, 2, 2), complex)
    W[0] = np.eye(2)
    g = rng.normal(size=(5, 2))
    for n in range(5):
        assert np.allclose(cq_apply(W, g, n), g[n])


def test_apply_backward_difference_of_ramp():
    k = 0.1
    ctx = CqContext.create(builtin_tableau("radau_iia_1"), k, 10)
    W = cq_weights(ctx, ident, mode="direct")
    g = [np.array([j * k]) for j in range(11)]
    for n in range(1, 11):
        assert cq_apply(W, g, n)[0] == pytest.approx(1.0, abs=1e-9)


def test_apply_matches_double_loop(rng):
    W = rng.normal(size=(7, 3, 3)) + 1j * rng.normal(size=(7, 3, 3))
    g = rng.normal(size=(7, 3, 4))
    out = cq_apply_all(WeightSequence(W), g)
    for n in range(7):
        ref = np.zeros((3, 4), complex)
        for j in range(n + 1):
            for a in range(3):
                for b in range(3):
                    ref[a] += W[n - j, a, b] * g[j, b]
        assert np.max(np.abs(out[n] - ref)) <= 1e-13


def test_apply_length_mismatch():
    with pytest.raises(ValueError):
        cq_apply(np.zeros((2, 1, 1)), np.zeros((5, 1)), 4)


@pytest.mark.parametrize("name", ["radau_iia_1", "gauss1", "radau_iia_2"])
def test_z_transform_compatibility(name, rng):
    t = builtin_tableau(name)
    k, N = 0.1, 64
    ctx = CqContext.create(t, k, N)
    F = ScalarSymbol(lambda s: 1 / np.sqrt(s + 1), "F")
    W = cq_weights(ctx, F, mode="direct")
    g = np.zeros((N + 1, t.m), complex)
    g[:6] = rng.normal(size=(6, t.m)) + 1j * rng.normal(size=(6, t.m))
    out = cq_apply_all(W, g)
    for z in 0.3 * np.exp(2j * np.pi * rng.uniform(size=10)):
        lhs = sum(out[n] * z ** n for n in range(N + 1))
        rhs = matrix_function(F, delta_of_z(t, z) / k) @ sum(g[n] * z ** n for n in range(N + 1))
        assert np.linalg.norm(lhs - rhs) <= 1e-6 * np.linalg.norm(rhs)


def test_decouple_single_stage():
    t = builtin_tableau("radau_iia_1")
    H = np.array([[2.0]])
    U = decouple_stages(t, 0.1, H, np.array([[1.0 + 0j]]))
    assert U[0, 0] == pytest.approx(1 / (-1j + 0.2))


def test_decouple_matches_dense_solve(rng):
    t = builtin_tableau("radau_iia_2")
    H = np.diag([1.0, 3.0])
    rhs = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    U = decouple_stages(t, 0.2, H, rhs)
    big = np.kron(-1j * t.Ainv, np.eye(2)) + 0.2 * np.kron(np.eye(2), H)
    ref = np.linalg.solve(big, rhs.ravel()).reshape(2, 2)
    assert np.max(np.abs(U - ref)) <= 1e-12


def test_decouple_homogeneous():
    t = builtin_tableau("radau_iia_3")
    assert np.all(decouple_stages(t, 0.1, np.eye(4), np.zeros((3, 4))) == 0)
