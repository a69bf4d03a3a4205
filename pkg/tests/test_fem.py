import numpy as np
import pytest
import scipy.linalg
import scipy.sparse

from schrocq.bem3d import cube_surface
from schrocq.fem import (FemInputError, InteriorForms, assemble_interior, build_box_mesh, build_interval_mesh,
                         h1_error, interpolate, l2_error, lumped_mass, step_form)
from schrocq.tableaus import builtin_tableau


def test_interval_counts():
    m = build_interval_mesh(0, 1, 2)
    assert m.n_vertices == 3 and m.elements.shape == (2, 2)
    assert list(m.boundary_vertices) == [0, 2]


def test_cube_counts_and_surface():
    m = build_box_mesh((0, 0, 0), 2.0, 1)
    assert m.n_vertices == 8 and m.elements.shape == (6, 4)
    assert m.surface.n_triangles == 12
    assert np.abs(m.volumes).sum() == pytest.approx(8.0)
    assert np.all(m.volumes > 0)
    assert m.surface.areas.sum() == pytest.approx(6 * 2.0 ** 2)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_surface_matches_bem_cube(n):
    m = build_box_mesh((0.5, -1, 2), 3.0, n)
    ref = cube_surface(n, side=3.0, center=(0.5, -1, 2))
    key = lambda s: sorted(map(tuple, np.round(np.sort(s.vertices[s.triangles], axis=1).reshape(-1, 9), 12)))
    assert key(m.surface) == key(ref)
    assert m.surface.signed_volume() == pytest.approx(27.0)


def test_invalid_sizes():
    with pytest.raises(FemInputError):
        build_interval_mesh(0, 1, 0)
    with pytest.raises(FemInputError):
        build_box_mesh((0, 0, 0), 1.0, 0)
    with pytest.raises(FemInputError):
        build_box_mesh((0, 0, 0), -1.0, 2)


def test_1d_stencils():
    n = 8
    f = assemble_interior(build_interval_mesh(0, 1, n))
    h = 1 / n
    S, M = f.S.toarray(), f.M.toarray()
    i = 4
    assert np.allclose(S[i, i - 1:i + 2], np.array([-1, 2, -1]) / h)
    assert np.allclose(M[i, i - 1:i + 2], np.array([1, 4, 1]) * h / 6)


def test_zero_and_constant_potential():
    m = build_box_mesh((0, 0, 0), 1.0, 2)
    assert assemble_interior(m).MV.nnz == 0 or abs(assemble_interior(m).MV).sum() == 0
    f = assemble_interior(m, 2.5)
    assert np.allclose(f.MV.diagonal(), 2.5 * lumped_mass(m))
    assert f.MV.sum() == pytest.approx(2.5 * 1.0)


def test_callable_potential():
    m = build_interval_mesh(-1, 1, 10)
    f = assemble_interior(m, lambda x: x[:, 0] ** 2)
    assert np.allclose(f.MV.diagonal(), m.vertices[:, 0] ** 2 * lumped_mass(m))
    with pytest.raises(FemInputError):
        assemble_interior(m, lambda x: np.full(x.shape[0], np.inf))


@pytest.mark.parametrize("dim", [1, 3])
def test_matrix_invariants(dim):
    m = build_interval_mesh(0, 2, 12) if dim == 1 else build_box_mesh((0, 0, 0), 1.0, 3)
    f = assemble_interior(m)
    S, M = f.S.toarray(), f.M.toarray()
    assert np.allclose(S, S.T) and np.allclose(M, M.T)
    assert np.abs(S.sum(axis=1)).max() <= 1e-12
    scipy.linalg.cholesky(M)
    ev = np.linalg.eigvalsh(S)
    assert ev[0] > -1e-12 and ev[1] > 1e-8


def test_patch_test():
    m = build_box_mesh((0, 0, 0), 2.0, 3)
    f = assemble_interior(m)
    u = m.vertices @ np.array([0.3, -1.2, 2.0]) + 0.7
    r = f.S @ u
    inner = np.setdiff1d(np.arange(m.n_vertices), m.boundary_vertices)
    assert np.abs(r[inner]).max() <= 1e-12


def test_trace_compatibility():
    m = build_box_mesh((0, 0, 0), 2.0, 2)
    f = assemble_interior(m)
    fn = lambda x: np.sin(x[..., 0]) * np.exp(x[..., 1]) + x[..., 2]
    u = interpolate(m, fn)
    assert np.array_equal(f.trace @ u, fn(m.surface.vertices).astype(complex))


def test_step_form_point_particle():
    m = build_interval_mesh(0, 1, 1)
    one = scipy.sparse.csr_matrix(np.array([[1.0]]))
    forms = InteriorForms(m, one, 0 * one, 0 * one, one)
    sf = step_form(forms, builtin_tableau("radau_iia_1"), 0.1)
    assert sf.operator.toarray()[0, 0] == pytest.approx(-1j)
    assert sf.rhs(np.array([2.0]))[0, 0] == pytest.approx(-2j)
    U = np.linalg.solve(sf.operator.toarray(), sf.rhs(np.array([2.0])).ravel())
    assert U[0] == pytest.approx(2.0)


def test_step_form_zero_step_and_structure():
    m = build_interval_mesh(0, 1, 6)
    f = assemble_interior(m, 1.0)
    for name in ("radau_iia_1", "radau_iia_2"):
        t = builtin_tableau(name)
        A0 = step_form(f, t, 0.0).operator.toarray()
        assert np.allclose(A0, np.kron(-1j * t.Ainv, f.M.toarray()))
        k = 0.3
        Ak = step_form(f, t, k).operator.toarray()
        H = Ak - A0
        assert np.allclose(H, H.conj().T)
        if t.m == 1:
            assert np.allclose(A0, -A0.conj().T)


def test_step_form_rejects_negative_step():
    f = assemble_interior(build_interval_mesh(0, 1, 2))
    with pytest.raises(FemInputError):
        step_form(f, builtin_tableau("gauss1"), -1.0)


@pytest.mark.parametrize("dim", [1, 3])
def test_errors_vanish_for_linear_functions(dim):
    m = build_interval_mesh(-1, 2, 7) if dim == 1 else build_box_mesh((0, 0, 0), 1.0, 2)
    if dim == 1:
        u = lambda x, t: (2 + 1j) * x - 0.5 + t
        g = lambda x, t: np.full(np.shape(x) + (1,), 2 + 1j)
    else:
        a = np.array([1.0, -2.0, 0.5j])
        u = lambda x, t: x @ a + t
        g = lambda x, t: np.broadcast_to(a, x.shape)
    c = interpolate(m, u, 0.3)
    assert l2_error(m, c, u, 0.3) <= 1e-13
    assert h1_error(m, c, u, g, 0.3) <= 1e-12


def test_l2_error_rate():
    u = lambda x, t: np.sin(np.pi * x)
    e = [l2_error(build_interval_mesh(0, 1, n), interpolate(build_interval_mesh(0, 1, n), u, 0.0), u, 0.0)
         for n in (8, 16, 32)]
    assert np.log2(e[0] / e[1]) == pytest.approx(2, abs=0.1)
    assert np.log2(e[1] / e[2]) == pytest.approx(2, abs=0.05)
