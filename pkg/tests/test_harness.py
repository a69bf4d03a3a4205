import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from schrocq.harness import (ConfigError, RunConfig, convergence_study, exact_gaussian_beam,
                             exact_gaussian_beam_grad, fitted_order, monitors_csv, pde_residual,
                             preset, run, successive_orders)
from schrocq.harness.cli import main
from schrocq.harness.exact import PREFACTOR
from schrocq.harness.study import ConvergenceReport, StudyRow

BASE_1D = {"schema_version": 1, "backend": "1d", "tableau": "radau_iia_2", "k": 0.05, "N": 10,
           "mesh": {"a": -6.0, "b": 6.0, "n": 400}, "beams": [{"center": 0.0, "p0": 1.0}]}


def cfg(**over):
    d = json.loads(json.dumps(BASE_1D))
    d.update(over)
    return RunConfig.from_dict(d)


@pytest.mark.parametrize("d", [1, 3])
def test_beam_initial_value(d, rng):
    xc, p0 = rng.normal(size=d), rng.normal(size=d)
    x = rng.normal(size=(5, d))
    y = x - xc
    ref = PREFACTOR * np.exp(-np.sum(y * y, axis=1) + 1j * y @ p0)
    assert np.allclose(exact_gaussian_beam(x, 0.0, xc, p0, d), ref)


def test_beam_moving_center_modulus():
    xc, p0 = np.array([0.5, -1.0, 0.2]), np.array([1.0, 0.5, -2.0])
    for t in (0.0, 0.3, 1.7):
        got = abs(exact_gaussian_beam(xc + 2 * p0 * t, t, xc, p0, 1 if False else 3))
        assert got == pytest.approx(PREFACTOR * (1 + 16 * t * t) ** (-0.75))
    # in 1D the amplitude factor enters once
    for t in (0.0, 0.4):
        got = abs(exact_gaussian_beam(0.3 + 2 * 1.5 * t, t, 0.3, 1.5, 1))
        assert got == pytest.approx(PREFACTOR * (1 + 16 * t * t) ** (-0.25))


@given(st.floats(-2, 2), st.floats(0.01, 2), st.floats(-1, 1), st.floats(-2, 2))
def test_pde_residual_1d(x, t, xc, p0):
    assert pde_residual(x, t, xc, p0, 1) <= 1e-5


def test_pde_residual_3d(rng):
    for _ in range(10):
        x, xc, p0 = rng.normal(size=3), rng.normal(size=3), rng.normal(size=3)
        assert pde_residual(x, rng.uniform(0, 1), xc, p0, 3) <= 1e-5


def test_beam_gradient_finite_difference(rng):
    xc, p0 = rng.normal(size=3), rng.normal(size=3)
    x, t, h = rng.normal(size=3), 0.4, 1e-6
    g = exact_gaussian_beam_grad(x, t, xc, p0, 3)
    for a in range(3):
        e = np.zeros(3)
        e[a] = h
        fd = (exact_gaussian_beam(x + e, t, xc, p0, 3) - exact_gaussian_beam(x - e, t, xc, p0, 3)) / (2 * h)
        assert g[a] == pytest.approx(fd, rel=1e-6, abs=1e-10)


def test_config_time_grid():
    c = RunConfig.from_dict({**BASE_1D, "k": None, "T": 1.0, "N": 20})
    assert c.k == pytest.approx(0.05)
    c = RunConfig.from_dict({**{k: v for k, v in BASE_1D.items() if k != "N"}, "T": 0.5})
    assert c.N == 10


@pytest.mark.parametrize("over,field", [
    ({"backend": "2d"}, "backend"),
    ({"tableau": "rk4"}, "tableau"),
    ({"k": -0.1}, "k"),
    ({"T": 3.0}, "T"),
    ({"N": 2.5}, "N"),
    ({"Q": 3}, "Q"),
    ({"V0": "x"}, "V0"),
    ({"mesh": {"a": 1, "b": 0, "n": 4}}, "mesh.b"),
    ({"mesh": {"a": 0, "b": 1}}, "mesh.n"),
    ({"beams": [{"center": [0, 0], "p0": 1}]}, "beams[0].center"),
    ({"schema_version": 7}, "schema_version"),
    ({"colour": "red"}, "colour"),
    ({"monitor_points": [[0, 0, 0]]}, "monitor_points"),
])
def test_config_errors_name_the_field(over, field):
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict({**BASE_1D, **over})
    assert str(exc.value).startswith(field + ":")


def test_config_3d_fields():
    c = preset("two-beam")
    assert c.backend == "3d" and c.mesh.side == 4.0 and c.T == pytest.approx(0.5)
    assert c.beams[0].center == (-1.0, 1.0, 0.0) and c.beams[1].p0 == (0.0, 0.0, 0.0)
    with pytest.raises(ConfigError, match="^mesh.side:"):
        RunConfig.from_dict({**c.to_dict(), "mesh": {"side": 0, "subdivisions": 2}})
    with pytest.raises(ConfigError, match="^preset:"):
        preset("nope")


@given(st.sampled_from(["1d", "3d"]), st.floats(1e-3, 1), st.integers(0, 50), st.integers(1, 64),
       st.floats(-3, 3), st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2)), max_size=3))
def test_config_round_trip(backend, k, N, n, V0, beams):
    if backend == "1d":
        mesh = {"a": -1.0, "b": 1.0, "n": n}
        bl = [{"center": a, "p0": b} for a, b in beams]
    else:
        mesh = {"center": [0.0, 1.0, 0.0], "side": 2.0, "subdivisions": n}
        bl = [{"center": [a, b, 0.0], "p0": [b, a, 1.0]} for a, b in beams]
    c = RunConfig.from_dict({"backend": backend, "tableau": "gauss2", "k": k, "N": N, "mesh": mesh,
                             "V0": V0, "beams": bl})
    text = c.to_json()
    c2 = RunConfig.from_json(text)
    assert c2 == c and c2.to_json() == text


def test_boundary_tail_reported():
    assert cfg().boundary_tail() < 1e-14
    assert cfg(mesh={"a": -1.0, "b": 1.0, "n": 10}).boundary_tail() > 1e-2


def test_zero_initial_condition_csv(tmp_path):
    res = run(cfg(beams=[]), output=tmp_path / "z.csv")
    lines = (tmp_path / "z.csv").read_text().splitlines()
    assert lines[0] == "n,t,l2_norm,h1_norm,energy,l2_error,h1_error"
    assert len(lines) == 12
    for line in lines[1:]:
        vals = [float(v) for v in line.split(",")[2:]]
        assert all(v == 0 for v in vals)
    assert res.passed


def test_csv_is_deterministic(tmp_path):
    a, b = run(cfg()), run(cfg())
    assert monitors_csv(a.monitors) == monitors_csv(b.monitors)
    # 17 significant digits survive a float round trip
    row = monitors_csv(a.monitors).splitlines()[3].split(",")
    assert float(row[2]) == a.monitors.l2[2]


def test_run_summary():
    res = run(cfg())
    s = res.summary()
    assert s.startswith("summary ") and "non_expansive=yes" in s and "max_l2_error=" in s


def test_one_d_preset_regression():
    res = run(preset("1d"))
    assert res.monitors.max_l2_error < 1e-2
    assert res.monitors.max_l2_error == pytest.approx(4.809715e-05, rel=1e-4)


def test_zero_steps_error_row():
    res = run(cfg(N=0, mesh={"a": -6.0, "b": 6.0, "n": 4096}))
    assert len(res.monitors.l2_error) == 1
    # only the interpolation error of the initial data remains
    assert res.monitors.l2_error[0] < 1e-5


def test_nonzero_potential_has_no_exact_errors():
    res = run(cfg(V0=1.0))
    assert math.isnan(res.monitors.max_l2_error) and res.non_expansive


def test_small_3d_run_with_monitor_points():
    c = RunConfig.from_dict({"backend": "3d", "tableau": "radau_iia_2", "k": 0.25, "N": 2,
                             "mesh": {"center": [0, 0, 0], "side": 2.0, "subdivisions": 2},
                             "beams": [{"center": [0, 0, 0], "p0": [1, 0, 0]}],
                             "monitor_points": [[0, 0, 0], [3, 0, 0]]})
    res = run(c)
    assert res.non_expansive and np.isfinite(res.max_exterior)
    assert "max_exterior=" in res.summary()


@given(st.floats(0.5, 4), st.floats(1e-3, 10), st.integers(3, 8))
def test_order_fitting_recovers_synthetic_rate(q, C, n):
    e = C * 2.0 ** (-q * np.arange(n))
    assert fitted_order(e) == pytest.approx(q, abs=0.01)
    assert np.allclose(successive_orders(e), q, atol=0.01)


def test_orders_need_three_rows():
    rep = ConvergenceReport("time", "gauss1", [StudyRow(0, 1, 1, 1, 1.0, 1.0, 0), StudyRow(1, 1, 1, 1, 0.25, 0.5, 0)])
    assert rep.successive_orders() is None and rep.fitted_order() is None
    rep.rows.append(StudyRow(2, 1, 1, 1, 0.0625, 0.25, 0))
    assert rep.fitted_order() == pytest.approx(2.0)


def test_study_time_mode_gauss():
    base = cfg(tableau="gauss1", k=0.125, N=8, mesh={"a": -6.0, "b": 6.0, "n": 2048})
    rep = convergence_study(base, 4, "time")
    assert [r.N for r in rep.rows] == [8, 16, 32, 64]
    assert rep.fitted_order() >= 1.8 and rep.passed


def test_study_simultaneous_mode_refines_mesh():
    rep = convergence_study(cfg(N=4, k=0.1), 3, "simultaneous")
    assert [r.h for r in rep.rows] == pytest.approx([12 / 400, 12 / 800, 12 / 1600])
    assert rep.decreasing()


def test_study_annotates_failures():
    def runner(c):
        if c.N > 10:
            raise RuntimeError("boom")
        return run(c)

    rep = convergence_study(cfg(), 3, "time", runner=runner)
    assert rep.rows[0].failure is None and "boom" in rep.rows[1].failure
    assert rep.fitted_order() is None and not rep.passed


def test_cli_run_and_errors(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(cfg().to_json())
    assert main(["run", str(p), "-o", str(tmp_path / "o.csv")]) == 0
    assert "summary" in capsys.readouterr().out
    assert (tmp_path / "o.csv").exists()
    p.write_text(json.dumps({**BASE_1D, "k": "fast"}))
    assert main(["run", str(p)]) == 2
    assert "k: expected a number" in capsys.readouterr().err


def test_cli_study(tmp_path, capsys):
    p = tmp_path / "c.json"
    p.write_text(cfg(tableau="radau_iia_2", k=0.1, N=10, mesh={"a": -6.0, "b": 6.0, "n": 2048}).to_json())
    code = main(["study", str(p), "--levels", "4", "--mode", "time"])
    out = capsys.readouterr().out
    assert "l2 fitted order" in out and "gates" in out
    assert code == 0


def test_cli_weights_selftest_exit_code(capsys):
    code = main(["weights-selftest"])
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 6
    assert code == (0 if all(l.startswith("PASS") for l in lines) else 1)


def test_cli_calderon_selftest(tmp_path, capsys):
    from schrocq.bem3d import icosphere, write_mesh
    assert main(["calderon-selftest", "--levels", "2"]) == 0
    write_mesh(icosphere(1, radius=1.0), tmp_path / "s.mesh")
    main(["calderon-selftest", "--levels", "2", "--mesh", str(tmp_path / "s.mesh")])
    assert "row1" in capsys.readouterr().out
    assert main(["calderon-selftest", "--mesh", str(tmp_path / "missing.mesh")]) == 2


def test_thread_env_var():
    env = {**os.environ, "SCHROCQ_THREADS": "1"}
    env.pop("NUMBA_NUM_THREADS", None)
    out = subprocess.run([sys.executable, "-c", "import os, schrocq; print(os.environ['NUMBA_NUM_THREADS'])"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "1"
