import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from chaokey.errors import InvalidArg, NonFinite
from chaokey.system import (REFERENCE_INIT, SystemParams, derivative, jacobian, rk4_step,
                            simulate, write_trajectory_csv)

P = SystemParams()
states = st.lists(st.floats(-30, 30), min_size=9, max_size=9).map(np.array)


def test_origin_is_fixed_point():
    assert np.all(derivative(np.zeros(9), P) == 0)
    assert np.all(derivative(np.zeros(9), SystemParams(3, 5, 7)) == 0)


def test_hand_evaluated_derivative():
    s = [1, 0, 0, 0, 1, 0, 0, 0, 0]
    np.testing.assert_array_equal(derivative(s, P), [0, 0, 0, 0, 19, 0, 0, 0, 1])


def test_u4u8_variant_only_changes_ninth_component():
    s = np.arange(1.0, 10.0)
    base = derivative(s, P)
    var = derivative(s, P.replace(include_u4u8=True))
    np.testing.assert_array_equal(base[:8], var[:8])
    assert var[8] - base[8] == pytest.approx(s[3] * s[7])


@pytest.mark.parametrize("bad", [dict(a=0), dict(b=-1), dict(c=float("nan"))])
def test_params_must_be_positive(bad):
    with pytest.raises(InvalidArg):
        P.replace(**bad)


def test_divergence_constant():
    assert P.divergence == -17.0


@settings(max_examples=100, deadline=None)
@given(states)
def test_jacobian_trace_is_state_independent(s):
    assert np.trace(jacobian(s, P)) == pytest.approx(-17.0, abs=1e-12)


def test_jacobian_at_origin_block_structure():
    J = jacobian(np.zeros(9), P)
    a, b, c = P.a, P.b, P.c
    np.testing.assert_array_equal(J[:4, :4], -a * np.eye(4))
    np.testing.assert_array_equal(J[:4, 4:8], a * np.eye(4))
    np.testing.assert_array_equal(J[4:8, :4], (b - a) * np.eye(4))
    np.testing.assert_array_equal(J[4:8, 4:8], b * np.eye(4))
    assert np.all(J[8, :8] == 0) and np.all(J[:8, 8] == 0)
    assert J[8, 8] == -c


@pytest.mark.parametrize("u4u8", [False, True])
def test_jacobian_matches_finite_differences(rng, u4u8):
    p = P.replace(include_u4u8=u4u8)
    h = 1e-6
    for _ in range(100):
        s = rng.uniform(-20, 20, 9)
        J = jacobian(s, p)
        f0 = derivative(s, p)
        for i in range(9):
            e = np.zeros(9)
            e[i] = 1.0
            fd = (derivative(s + h * e, p) - f0) / h
            assert np.max(np.abs(J[:, i] - fd)) <= 1e-5 * max(1.0, np.max(np.abs(fd)))


def test_rk4_fixed_point_and_zero_step():
    assert np.all(rk4_step(np.zeros(9), P, 0.5) == 0)
    s = np.array(REFERENCE_INIT) * 3
    np.testing.assert_array_equal(rk4_step(s, P, 0.0), s)


def test_rk4_fourth_order_convergence():
    # reference from an independent high-order adaptive integrator
    s0 = np.array([1.0, -2.0, 0.5, 3.0, 2.0, -1.0, 1.5, 0.2, 10.0])
    T = 0.1
    ref = solve_ivp(lambda t, u: derivative(u, P), (0, T), s0, method="DOP853",
                    rtol=1e-13, atol=1e-13).y[:, -1]

    def err(dt):
        u = s0
        for _ in range(int(round(T / dt))):
            u = rk4_step(u, P, dt)
        return np.linalg.norm(u - ref)

    ratio = err(0.01) / err(0.005)
    assert 12 < ratio < 20


def test_rk4_nonfinite_raises():
    with pytest.raises(NonFinite):
        rk4_step(np.full(9, 1e200), P, 1.0)


def test_simulate_single_step_equals_rk4():
    traj = simulate(REFERENCE_INIT, P, 1e-3, steps=1, transient=0)
    np.testing.assert_array_equal(traj.samples[0], rk4_step(REFERENCE_INIT, P, 1e-3))
    assert len(traj) == 1


def test_simulate_deterministic():
    a = simulate(REFERENCE_INIT, P, 1e-3, 2000, 500).samples
    b = simulate(REFERENCE_INIT, P, 1e-3, 2000, 500).samples
    assert a.tobytes() == b.tobytes()


def test_simulate_stride_subsamples():
    full = simulate(REFERENCE_INIT, P, 1e-3, 300, 100).samples
    sub = simulate(REFERENCE_INIT, P, 1e-3, 100, 100, stride=3).samples
    np.testing.assert_array_equal(sub, full[2::3])


@pytest.mark.parametrize("steps", [0, -5])
def test_simulate_rejects_nonpositive_steps(steps):
    with pytest.raises(InvalidArg):
        simulate(REFERENCE_INIT, P, 1e-3, steps, 0)


def test_simulate_divergence_is_reported():
    with pytest.raises(NonFinite):
        simulate(np.full(9, 1e150), P, 1.0, 50, 0)


@pytest.mark.slow
def test_attractor_bounded_long_run():
    traj = simulate(REFERENCE_INIT, P, 1e-3, 1_000_000, 50_000)
    assert np.max(np.abs(traj.samples)) < 100


def test_sensitive_dependence():
    other = np.array(REFERENCE_INIT)
    other[0] += 1e-10
    a = simulate(REFERENCE_INIT, P, 1e-3, 20_000, 0).samples
    b = simulate(other, P, 1e-3, 20_000, 0).samples
    assert np.max(np.linalg.norm(a - b, axis=1)) > 1.0


def test_trajectory_csv(tmp_path):
    traj = simulate(REFERENCE_INIT, P, 1e-3, 4, 10)
    path = tmp_path / "t.csv"
    write_trajectory_csv(traj, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,u1,u2,u3,u4,u5,u6,u7,u8,u9"
    assert len(lines) == 5
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    np.testing.assert_array_equal(back[:, 1:], traj.samples)
    np.testing.assert_allclose(back[:, 0], [0.011, 0.012, 0.013, 0.014])
