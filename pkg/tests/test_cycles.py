import numpy as np
import pytest

from foodchain.cycles import (
    CYCLE_CONFIG,
    f_condition,
    find_h2_cycle,
    floquet,
    monodromy,
    planar_monodromy,
    section_recurrence,
)
from foodchain.equilibria import exy_planar_eigenvalues
from foodchain.errors import DomainError, NoCyclePredicted, UsageError
from foodchain.model import ParameterSet, derived

from oracles import flow, rk4_section_times


@pytest.fixture(scope="module")
def gamma():
    p = ParameterSet(a1=0.3, a2=0.9, d1=0.4, d2=0.01, m1=5 / 3, m2=0.033)
    return p, find_h2_cycle(p)


def test_cycle_found(gamma):
    p, c = gamma
    assert c.period > 0 and c.convergence_residual < 1e-9
    assert c.closure_residual < 1e-9
    assert np.all(c.samples[:, 2] == 0.0) and c.samples.min() >= 0.0
    assert c.y_min < derived(p).p_of_lambda1 < c.y_max
    assert c.samples[:, 0].min() < derived(p).lambda1 < c.samples[:, 0].max()


def test_cycle_independent_of_m2(gamma):
    p, c = gamma
    other = find_h2_cycle(p.replace(m2=0.065))
    assert other.period == c.period


@pytest.mark.parametrize("a1,m1,d1", [(1.5, 0.5, 0.1), (0.3, 5 / 3, 1.0), (0.3, 5 / 3, 0.9)])
def test_no_cycle_predicted(a1, m1, d1):
    with pytest.raises(NoCyclePredicted, match="no cycle predicted"):
        find_h2_cycle(ParameterSet(a1=a1, a2=0.9, d1=d1, d2=0.01, m1=m1, m2=0.05))


def test_start_must_be_positive(gamma):
    with pytest.raises(DomainError):
        find_h2_cycle(gamma[0], start=(0.2, 0.0))


def test_period_matches_fixed_step_rk4(cycle_set):
    c = find_h2_cycle(cycle_set)
    lam1 = derived(cycle_set).lambda1
    ts = rk4_section_times(c.samples[0, 0], c.samples[0, 1], cycle_set.a1, cycle_set.d1, cycle_set.m1,
                           lam1, 1e-4, 3)
    assert abs(np.diff(ts)[-1] - c.period) / c.period < 1e-6


def test_uniqueness_from_many_starts(cycle_set):
    ref = find_h2_cycle(cycle_set)
    rng = np.random.default_rng(7)
    starts = np.column_stack([rng.uniform(0.02, 0.99, 10), rng.uniform(0.02, 1.5, 10)])
    for s in starts:
        c = find_h2_cycle(cycle_set, start=s)
        assert abs(c.period - ref.period) / ref.period < 1e-6
        assert abs(c.y_max - ref.y_max) / ref.y_max < 1e-6


def test_hopf_limit_period():
    a1, m1 = 0.3, 5 / 3
    lam1 = (1 - a1) / 2 - 1e-3
    d1 = lam1 * m1 / (a1 + lam1)
    p = ParameterSet(a1=a1, a2=0.9, d1=d1, d2=0.01, m1=m1, m2=0.05)
    c = find_h2_cycle(p)
    omega = max(abs(ev.imag) for ev in exy_planar_eigenvalues(p))
    assert abs(c.period - 2 * np.pi / omega) / (2 * np.pi / omega) < 0.05
    far = find_h2_cycle(p.replace(d1=0.4))
    assert c.y_max - c.y_min < 0.1 * (far.y_max - far.y_min)


@pytest.mark.parametrize("m2,sign", [(0.033, -1), (0.042, -1), (0.065, 1)])
def test_floquet_structure(gamma, m2, sign):
    p, c = gamma
    p = p.replace(m2=m2)
    fl = floquet(p, c)
    M = fl.monodromy
    assert abs(M[2, 0]) < 1e-8 and abs(M[2, 1]) < 1e-8
    assert abs(fl.m33 - fl.m33_closed_form) / fl.m33_closed_form < 1e-6
    assert fl.trivial_multiplier_error < 1e-4
    assert np.sign(fl.transversal_average) == sign
    assert np.sign(np.log(fl.m33)) == np.sign(fl.transversal_average)
    assert abs(fl.in_plane_multiplier) < 1
    assert fl.stable_in_R3 == (sign < 0)


def test_m33_three_ways(gamma):
    p, c = gamma
    p = p.replace(m2=0.065)
    fl = floquet(p, c)
    eps = 1e-8
    # z grows linearly in z0 along the face, so the ratio recovers M33
    z_T = flow(p, c.samples[0] + [0, 0, eps], c.period)[2]
    assert abs(z_T / eps - fl.m33) / fl.m33 < 1e-6
    assert abs(fl.m33_closed_form - fl.m33) / fl.m33 < 1e-6


def test_monodromy_z_column_finite_difference(gamma):
    p, c = gamma
    for m2 in (0.033, 0.065):
        q = p.replace(m2=m2)
        M = monodromy(q, c)
        h = 1e-5
        g0 = c.samples[0]
        col = (flow(q, g0 + [0, 0, h], c.period) - flow(q, g0 - [0, 0, h], c.period)) / (2 * h)
        assert np.abs(col - M[:, 2]).max() / np.abs(M[:, 2]).max() < 1e-6


def test_planar_block_matches_subsystem(gamma):
    p, c = gamma
    M = monodromy(p, c)
    assert np.abs(M[:2, :2] - planar_monodromy(p, c)).max() < 1e-6


def test_coarse_samples_rejected(gamma):
    p, c = gamma
    with pytest.raises(UsageError):
        monodromy(p, c, CYCLE_CONFIG.replace(max_step=1e-4))


def test_cycle_set_floquet_and_f_condition(cycle_set):
    c = find_h2_cycle(cycle_set)
    fl = floquet(cycle_set, c)
    assert fl.transversal_average < 0 and fl.stable_in_R3
    fc = f_condition(cycle_set)
    assert fc.y_M == pytest.approx(1.8333333, abs=1e-6)
    assert fc.lhs == pytest.approx(2.794, abs=1e-3)
    assert fc.rhs == pytest.approx(1.986, abs=1e-3)
    assert fc.holds


def test_f_condition_fails_at_m2_033(base):
    fc = f_condition(base.replace(m2=0.033), y_M=1.625)
    assert fc.lhs == pytest.approx(0.9 * 0.3913043478 / 2.525, rel=1e-6)
    assert fc.rhs == pytest.approx(1.3**3 / 1.2, rel=1e-12)
    assert not fc.holds


def test_f_condition_large_a2_limit(cycle_set):
    lam2 = derived(cycle_set).lambda2
    q = cycle_set.replace(a2=1e9, m2=cycle_set.d2 + 1e9 * cycle_set.d2 / lam2)
    assert f_condition(q).lhs == pytest.approx(lam2, rel=1e-6)


def test_f_condition_errors(base):
    with pytest.raises(DomainError):
        f_condition(base.replace(m2=0.005))
    with pytest.raises(DomainError):
        f_condition(base, y_M=0.0)


def test_section_recurrence():
    t = np.arange(40) * 2.0
    pts = np.column_stack([np.tile([0.1, 0.2, 0.3], 14)[:40], np.zeros(40)])
    k, period, resid = section_recurrence(t, pts, 1e-9)
    assert k == 3 and period == pytest.approx(6.0) and resid == 0.0
    rng = np.random.default_rng(0)
    assert section_recurrence(t, rng.random((40, 2)), 1e-9) is None


def test_floquet_json_shape(gamma):
    p, c = gamma
    d = floquet(p, c).to_dict()
    for key in ("T", "multipliers", "m33", "m33_closed_form", "transversal_average", "stable_in_R3"):
        assert key in d
    assert len(d["multipliers"]) == 3 and set(d["multipliers"][0]) == {"re", "im"}
