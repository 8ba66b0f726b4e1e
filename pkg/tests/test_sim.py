import numpy as np
import pytest

from smoco import benchmark as pe
from smoco.control import ControlLaw, EstimateSource
from smoco.sim import (
    Constant, DisturbanceSpec, SimConfig, SimulationDiverged, Sine, Step, canonical_disturbance,
    disturbance_eval, integrate_closed_loop, integrate_open_loop, noise_sample, read_csv,
)
from smoco.synth import supplied_gains


def test_disturbance_examples():
    assert disturbance_eval(DisturbanceSpec(((Constant(3.0),),)), 123.4)[0] == 3.0
    assert disturbance_eval(DisturbanceSpec(((Sine(2.0, np.pi, 0.0),),)), 0.5)[0] == pytest.approx(2.0)
    step = DisturbanceSpec(((Step(5.0, 10.0),),))
    assert disturbance_eval(step, 9.99)[0] == 0.0
    assert disturbance_eval(step, 10.01)[0] == 5.0


def test_disturbance_sums_and_derivative():
    spec = DisturbanceSpec(((Sine(2.0, 3.0, 0.5), Constant(1.0), Step(4.0, 1.0)), ()))
    d, dd = disturbance_eval(spec, 2.0, derivative=True)
    assert d[0] == pytest.approx(2 * np.sin(6.5) + 1 + 4)
    assert dd[0] == pytest.approx(6 * np.cos(6.5))
    assert d[1] == 0.0 and dd[1] == 0.0
    h = 1e-6
    fd = (disturbance_eval(spec, 2.0 + h) - disturbance_eval(spec, 2.0 - h)) / (2 * h)
    assert fd[0] == pytest.approx(dd[0], rel=1e-6)


def test_disturbance_validation():
    with pytest.raises(ValueError):
        Step(1.0, -1.0)
    with pytest.raises(ValueError):
        Sine(1.0, -2.0)
    with pytest.raises(ValueError):
        disturbance_eval(canonical_disturbance(), -1.0)


def test_noise_sample():
    Cw = np.diag([2.0, 1.0])
    assert np.all(noise_sample(np.random.default_rng(0), Cw, 0.0) == 0)
    a = noise_sample(np.random.default_rng(5), Cw, 1.0, size=100)
    b = noise_sample(np.random.default_rng(5), Cw, 1.0, size=100)
    assert np.array_equal(a, b)
    assert np.all(np.abs(a) <= 1.0)


def test_clipped_normal_std():
    # sqrt(erf(1/sqrt2) - 2 phi(1) + 2 (1 - Phi(1))) = 0.71837
    w = noise_sample(np.random.default_rng(2024), np.eye(1), 1.0, size=100_000)
    assert w.std() == pytest.approx(0.7184, abs=0.02)


def test_simconfig_validation():
    with pytest.raises(ValueError):
        SimConfig(x0=pe.X0, dt=0.0)
    with pytest.raises(ValueError):
        SimConfig(x0=pe.X0, t_end=1.0, metrics_window=(1.0, 30.0))
    with pytest.raises(ValueError):
        SimConfig(x0=pe.X0, noise_hold=0)


def _run(plant, aug, gains, spec, source="SMO", **kw):
    cfg = SimConfig(**{"x0": pe.X0, **kw})
    return integrate_closed_loop(plant, aug, gains, ControlLaw.from_gains(gains, source), spec, cfg)


def test_all_zero(plant, aug, reference):
    tr = _run(plant, aug, reference, DisturbanceSpec.zero(2), x0=np.zeros(4), t_end=1.0, noise=False)
    for arr in (tr.x, tr.xhat, tr.xtilde, tr.d, tr.dhat, tr.dtilde, tr.dfilt, tr.u, tr.y):
        assert np.all(arr == 0)


def test_shapes_and_grid(plant, aug, reference):
    tr = _run(plant, aug, reference, canonical_disturbance(), t_end=0.5, dt=1e-3)
    assert tr.t.shape == (501,)
    assert tr.t[-1] == pytest.approx(0.5)
    for arr, k in ((tr.x, 4), (tr.xhat, 4), (tr.dhat, 2), (tr.u, 2), (tr.y, 2), (tr.omega, 2)):
        assert arr.shape == (501, k)
    # measurement is C x + C_w w sample by sample
    np.testing.assert_allclose(tr.y, tr.x @ pe.C.T + tr.omega @ pe.C_OMEGA.T)
    # controller uses the estimate at the step start
    np.testing.assert_allclose(tr.u, tr.xhat_bar @ reference.K_bar.T, rtol=1e-12, atol=1e-9)


def test_noise_hold(plant, aug, reference):
    tr = _run(plant, aug, reference, DisturbanceSpec.zero(2), t_end=0.01, dt=1e-3, noise_hold=5)
    w = tr.omega
    assert np.array_equal(w[0], w[4]) and not np.array_equal(w[4], w[5])


def test_open_loop_equivalence_with_zero_injection(plant, aug, reference):
    z = np.zeros
    g0 = supplied_gains(plant, z((6, 2)), z((6, 6)), z((2, 2)), z((2, 2)), z((2, 6)), reference.K)
    cfg = SimConfig(x0=pe.X0, dt=1e-3, t_end=2.0, noise=False, observer_init=np.r_[pe.X0, 0, 0])
    law = ControlLaw(g0.K_bar, EstimateSource.TRUE_STATE)
    tr = integrate_closed_loop(plant, aug, g0, law, DisturbanceSpec.zero(2), cfg)
    np.testing.assert_allclose(tr.xhat, tr.x, rtol=1e-12, atol=1e-9)
    np.testing.assert_allclose(tr.xtilde, tr.x, rtol=1e-12, atol=1e-9)


def test_descriptor_equivalence_with_feedback(plant, aug):
    spec = DisturbanceSpec(((Sine(2.0, 1.0, 0.0),), (Sine(1.0, 2.0, 0.3), Constant(0.5))))
    t, x, xa = integrate_open_loop(plant, aug, spec, pe.X0, t_end=2.0, K=pe.state_feedback())
    assert np.max(np.abs(x - xa[:, :4])) < 1e-6
    d = np.array([disturbance_eval(spec, tk) for tk in t[::100]])
    np.testing.assert_allclose(xa[::100, 4:], d, atol=1e-8)


def test_divergence_aborts(plant, aug, reference):
    bad = supplied_gains(plant, reference.L_bar, reference.Lcal_bar, reference.H1, reference.H2,
                         reference.H3, 50 * pe.REFERENCE_K)
    with pytest.raises(SimulationDiverged) as info:
        _run(plant, aug, bad, DisturbanceSpec.zero(2), t_end=30.0, dt=1e-3, noise=False)
    assert info.value.index > 0


def test_dimension_errors(plant, aug, reference):
    with pytest.raises(ValueError):
        _run(plant, aug, reference, DisturbanceSpec.zero(3), t_end=0.1)
    with pytest.raises(ValueError):
        _run(plant, aug, reference, DisturbanceSpec.zero(2), t_end=0.1, x0=np.zeros(3))


def test_csv_format(plant, aug, reference, tmp_path):
    tr = _run(plant, aug, reference, canonical_disturbance(), t_end=0.05, dt=1e-3, seed=3)
    path = tmp_path / "traj.csv"
    tr.to_csv(path, {"seed": 3}, decimation=5)
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed=3"
    assert lines[1] == ("t,x1,x2,x3,x4,xhat1,xhat2,xhat3,xhat4,xtilde1,xtilde2,xtilde3,xtilde4,"
                        "d1,d2,dhat1,dhat2,dtilde1,dtilde2,dfilt1,dfilt2,u1,u2,y1,y2")
    names, data = read_csv(path)
    assert data.shape == (11, len(names))
    # 17 significant digits round-trip exactly
    np.testing.assert_array_equal(data[:, 1:5], tr.x[::5])


def test_determinism(plant, aug, reference, tmp_path):
    paths = []
    for k in range(2):
        tr = _run(plant, aug, reference, canonical_disturbance(), t_end=1.0, seed=11)
        paths.append(tmp_path / f"r{k}.csv")
        tr.to_csv(paths[-1], {"seed": 11})
    assert paths[0].read_bytes() == paths[1].read_bytes()
    other = _run(plant, aug, reference, canonical_disturbance(), t_end=1.0, seed=12)
    assert not np.array_equal(other.omega, tr.omega)


@pytest.mark.slow
def test_step_size_convergence(plant, aug, reference):
    spec = canonical_disturbance()
    a = _run(plant, aug, reference, spec, noise=False, dt=1e-4)
    b = _run(plant, aug, reference, spec, noise=False, dt=5e-5)
    assert np.max(np.abs(a.x[-1] - b.x[-1])) / np.max(np.abs(b.x[-1])) < 1e-4
