import numpy as np
import pytest
from scipy.integrate import solve_ivp

from foodchain import _kernels
from foodchain.equilibria import all_equilibria
from foodchain.errors import DomainError, IntegrationError, UsageError
from foodchain.integrator import (
    SECTION_X,
    IntegratorConfig,
    Thresholds,
    attracting_set_bounds,
    attracting_set_check,
    classify_attractor,
    integrate,
    output_grid,
    read_trajectory_csv,
)
from foodchain.model import ParameterSet, rhs

from conftest import random_params

SHORT = IntegratorConfig(t_end=200.0, t_transient=100.0)


def test_config_validation():
    with pytest.raises(UsageError):
        IntegratorConfig(rtol=0.0)
    with pytest.raises(UsageError):
        IntegratorConfig(t_end=10.0, t_transient=10.0)
    assert IntegratorConfig().replace(rtol=1e-6).rtol == 1e-6


def test_output_grid_ends_on_t_end():
    t = output_grid(1.05, 0.1)
    assert t[0] == 0.0 and t[-1] == 1.05 and np.all(np.diff(t) > 0)


def test_negative_initial_state_rejected(base):
    with pytest.raises(DomainError):
        integrate(base, [0.5, -0.1, 0.2])


def test_matches_reference_solver(base):
    p = base.replace(m2=0.065)
    s0 = np.array([0.6, 0.3, 0.8])
    cfg = IntegratorConfig(rtol=1e-11, atol=1e-14, t_end=60.0, t_transient=30.0, dense_output_dt=0.5)
    tr = integrate(p, s0, cfg)
    ref = solve_ivp(lambda t, s: rhs(p, s), (0, 60.0), s0, method="DOP853", rtol=1e-12, atol=1e-15,
                    t_eval=tr.times, dense_output=False)
    assert np.abs(ref.y.T - tr.states).max() < 1e-7


def test_dense_output_agrees_with_reference_interpolant(base):
    """Dense samples between steps use the same quartic interpolant as scipy's RK45."""
    p = base.replace(m2=0.042)
    s0 = np.array([0.4, 0.3, 0.5])
    ref = solve_ivp(lambda t, s: rhs(p, s), (0, 30.0), s0, method="RK45", rtol=1e-10, atol=1e-13,
                    dense_output=True)
    cfg = IntegratorConfig(rtol=1e-10, atol=1e-13, t_end=30.0, t_transient=10.0, dense_output_dt=0.013)
    tr = integrate(p, s0, cfg)
    assert np.abs(ref.sol(tr.times).T - tr.states).max() < 1e-7


def test_face_invariance_is_exact(rng):
    for _ in range(50):
        p = random_params(rng)
        s0 = rng.uniform(0.01, 1.0, 3)
        mask = rng.random(3) < 0.5
        s0[mask] = 0.0
        tr = integrate(p, s0, SHORT)
        assert np.all(tr.states[:, mask] == 0.0)


def test_x_axis_logistic(base):
    tr = integrate(base, [0.5, 0.0, 0.0], SHORT)
    assert np.all(tr.states[:, 1:] == 0.0)
    t = tr.times[:50]
    exact = 1.0 / (1.0 + np.exp(-t))
    assert np.abs(tr.states[:50, 0] - exact).max() < 1e-8
    assert tr.states[-1, 0] == pytest.approx(1.0, abs=1e-12)


def test_yz_face_collapses_to_origin(base):
    tr = integrate(base, [0.0, 0.4, 0.3], IntegratorConfig(t_end=5000.0, t_transient=4000.0))
    assert np.all(tr.states[:, 0] == 0.0)
    assert np.abs(tr.states[-1]).max() < 1e-6


def test_positivity_on_random_draws(rng):
    cfg = IntegratorConfig(t_end=500.0, t_transient=250.0, dense_output_dt=0.5)
    for _ in range(1000):
        p = random_params(rng)
        tr = integrate(p, rng.uniform(0.0, 3.0, 3), cfg)
        assert tr.states.min() >= 0.0
        assert np.all(np.diff(tr.times) > 0)


def test_positivity_on_accepted_steps(rng):
    # raw kernel output at every accepted step, before any clamping
    for _ in range(200):
        p = random_params(rng)
        y = rng.uniform(0.0, 3.0, 3)
        t = 0.0
        h = 0.0
        for _ in range(200):
            res = _kernels.solve(
                _kernels.FULL, t, y, t + 2.5, p.as_array(), np.zeros((2, 6)), np.zeros(2), 1e-9,
                np.full(3, 1e-12), 1.0, h, np.empty(0), np.empty(0, dtype=np.int64), np.empty(0),
                np.empty(0, dtype=np.int64), 0, -1, 10_000_000,
            )
            t, y, h = res[5], res[6], res[7]
            assert y.min() >= -1e-12


@pytest.mark.parametrize("t_end", [20.0, 3000.0])
def test_halving_tolerances(base, t_end):
    # a short horizon and one long enough to settle on the stable equilibrium
    p = base.replace(m2=0.033)
    s0 = [0.55, 0.4, 0.85]
    coarse = IntegratorConfig(rtol=1e-8, atol=1e-11, t_end=t_end, t_transient=t_end / 2)
    fine = coarse.replace(rtol=5e-9, atol=5e-12)
    a = integrate(p, s0, coarse).states[-1]
    b = integrate(p, s0, fine).states[-1]
    assert np.abs(a - b).max() < 10 * coarse.rtol * max(1.0, np.abs(a).max())


def test_events_recorded(base):
    tr = integrate(base.replace(m2=0.033), [0.1734, 0.3913, 0.2717], IntegratorConfig(t_end=300.0, t_transient=100.0))
    ts, ys = tr.section(SECTION_X)
    assert ts.size > 5
    assert np.allclose(ys[:, 0], 0.0947368421052631, atol=1e-9)
    assert tr.events == sorted(tr.events)


def test_csv_round_trip(tmp_path, base):
    tr = integrate(base, [0.5, 0.4, 0.3], IntegratorConfig(t_end=20.0, t_transient=10.0))
    path = tmp_path / "traj.csv"
    tr.to_csv(path)
    text = path.read_text().splitlines()
    assert text[0].startswith("# ") and text[1] == "t,x,y,z"
    prov, t, s = read_trajectory_csv(path)
    assert np.array_equal(t, tr.times) and np.array_equal(s, tr.states)
    assert ParameterSet.from_dict(prov["params"]) == base
    assert prov["initial_state"] == [0.5, 0.4, 0.3]


def test_attracting_set_bounds_values(base, cycle_set):
    assert attracting_set_bounds(base)[1] == pytest.approx(1.625)
    assert attracting_set_bounds(cycle_set)[1] == pytest.approx(1.8333333, abs=1e-6)


def test_attracting_set_check(base):
    tr = integrate(base.replace(m2=0.033), [2.0, 2.0, 30.0], IntegratorConfig(t_end=3000.0, t_transient=2000.0))
    ok, entry = attracting_set_check(tr, base.replace(m2=0.033))
    assert ok and entry is not None and entry > 0.0
    tr = integrate(base, [0.5, 0.5, 0.5], IntegratorConfig(t_end=3000.0, t_transient=2000.0))
    ok, entry = attracting_set_check(tr, base)
    assert ok and entry == 0.0


@pytest.mark.parametrize(
    "m2,s0,kind",
    [
        (0.033, (0.5266, 0.3913, 0.8546), "equilibrium"),
        (0.033, (0.1734, 0.3913, 0.2717), "boundary_cycle"),
        (0.033, (0.5, 0.0, 0.0), "z_extinct_equilibrium"),
        (0.065, (0.8674, 0.1653, 0.8972), "chaotic_or_undetermined"),
    ],
)
def test_classify_attractor_examples(base, m2, s0, kind):
    p = base.replace(m2=m2)
    v = classify_attractor(integrate(p, s0), all_equilibria(p))
    assert v.kind == kind
    assert v.diagnostics["thresholds"] == Thresholds().to_dict()
    if kind == "equilibrium":
        assert v.target.kind == "Interior" and v.target.stability == "stable"
    if kind == "boundary_cycle":
        assert v.diagnostics["tail_max_z"] < Thresholds().delta_z
        assert v.target.period == pytest.approx(21.60607, rel=1e-4)


def test_classify_requires_tail(base):
    tr = integrate(base, [0.5, 0.5, 0.5], IntegratorConfig(t_end=20.0, t_transient=10.0))
    tr.times = tr.times[:50]
    tr.states = tr.states[:50]
    with pytest.raises(UsageError):
        classify_attractor(tr, all_equilibria(base))


def test_integration_error_carries_partial(base):
    cfg = IntegratorConfig(t_end=50.0, t_transient=10.0, max_step=1e-7)
    from foodchain import integrator as integ

    old = integ._MAX_STEPS
    integ._MAX_STEPS = 1000
    try:
        with pytest.raises(IntegrationError) as exc:
            integrate(base, [0.5, 0.5, 0.5], cfg)
    finally:
        integ._MAX_STEPS = old
    assert exc.value.partial is not None
