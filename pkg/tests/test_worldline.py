import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from fokkerlab.errors import FoldOverError
from fokkerlab.worldline import (
    ShiftField, SwitchingProfile, Worldline, clock, load_worldline, locate, node_proper_times,
    proper_time, reparametrize, save_worldline, total_proper_time, velocities, velocity,
)


def test_straight_default_lapse_is_stationary():
    w = Worldline.straight([0, 0, 0, 0], [10, 6, 0, 0], 9, 2.0)
    assert np.allclose(w.lapse, 8.0 / 2.0)
    assert np.isclose(total_proper_time(w), 4.0)


def test_validation():
    with pytest.raises(ValueError):
        Worldline(np.zeros((2, 4)), np.ones(2), 1.0, SwitchingProfile.off())
    with pytest.raises(ValueError):
        Worldline(np.zeros((5, 4)), -np.ones(5), 1.0, SwitchingProfile.off())
    with pytest.raises(ValueError):
        Worldline(np.zeros((5, 4)), np.ones(5), 0.0, SwitchingProfile.off())
    with pytest.raises(ValueError):
        Worldline.straight([0, 0, 0, 0], [1, 2, 0, 0], 5, 1.0)


def test_arrays_read_only():
    w = Worldline.straight([0, 0, 0, 0], [1, 0, 0, 0], 5, 1.0)
    with pytest.raises(ValueError):
        w.points[0, 0] = 3.0


def test_clock_exact_for_linear_lapse():
    K = 11
    tau = np.linspace(0, 1, K)
    N = 1.0 + 2.0 * tau ** 2
    w = Worldline(np.column_stack([tau, 0 * tau, 0 * tau, 0 * tau]), N, 1.0, SwitchingProfile.off())
    # the interpolated lapse is piecewise linear; compare with quad of that interpolant
    for x in (0.0, 0.137, 0.5, 0.93, 1.0):
        ref = quad(lambda t: np.interp(t, tau, N), 0, x, points=tau[tau < x])[0]
        assert np.isclose(proper_time(w, x), ref, rtol=1e-13, atol=1e-14)
    assert np.isclose(node_proper_times(w)[-1], total_proper_time(w))
    with pytest.raises(ValueError):
        proper_time(w, 1.5)


def test_locate_and_clock_vectorized():
    w = Worldline.straight([0, 0, 0, 0], [4, 0, 0, 0], 5, 1.0)
    j, t = locate(w, np.array([0.0, 0.3, 1.0]))
    assert list(j) == [0, 1, 3]
    assert np.allclose(clock(w, j, t), [0.0, 1.2, 4.0])


def test_velocities_exact_on_quadratics():
    K = 9
    tau = np.linspace(0, 1, K)
    pts = np.column_stack([2 * tau + tau ** 2, tau ** 2, 0 * tau, 0 * tau])
    w = Worldline(pts, np.ones(K), 1.0, SwitchingProfile.off())
    assert np.allclose(velocities(w)[:, 0], 2 + 2 * tau)
    assert np.allclose(velocity(w, 3), [2 + 2 * tau[3], 2 * tau[3], 0, 0])
    with pytest.raises(IndexError):
        velocity(w, K)


@given(st.floats(-5, 5), st.floats(-2, 12))
def test_switching_profile_derivative(e, s):
    prof = SwitchingProfile(e, 1.0, 8.0, 2.0)
    h = 1e-6
    fd = (prof(s + h) - prof(s - h)) / (2 * h)
    assert np.isclose(prof.derivative(s), fd, atol=1e-6 * max(1, abs(e)))
    assert abs(prof(s)) <= abs(e) + 1e-15


def test_switching_profile_shape():
    prof = SwitchingProfile(0.5, 1.0, 8.0, 2.0)
    assert prof(0.5) == 0.0 and prof(9.0) == 0.0 and prof(4.0) == 0.5
    assert SwitchingProfile.constant(0.3)(1e9) == 0.3
    assert SwitchingProfile.off().is_off
    assert prof.scaled(2.0)(4.0) == 1.0
    with pytest.raises(ValueError):
        SwitchingProfile(1.0, 3.0, 2.0)


@settings(max_examples=30)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_shift_derivative_telescopes(c):
    K = 33
    eps = ShiftField.from_function(
        lambda t: sum(ck * np.sin((k + 1) * np.pi * t) for k, ck in enumerate(c)), K)
    d = eps.tau_derivative()
    trap = np.sum(0.5 * (d[:-1] + d[1:])) / (K - 1)
    assert abs(trap) < 1e-12


def test_shift_field_pinned():
    with pytest.raises(ValueError):
        ShiftField(np.array([0.0, 1.0, 1.0]))
    assert np.all((-ShiftField(np.array([0.0, 1.0, 0.0]))).values <= 0)


def test_reparametrize_straight_line_stays_on_line():
    K = 65
    w = Worldline.straight([0, 0, 0, 0], [10, 3, 0, 0], K, 1.0)
    eps = ShiftField.from_function(lambda t: 0.2 * np.sin(np.pi * t), K)
    v = reparametrize(w, eps)
    direction = np.array([10, 3, 0, 0]) / 10
    assert np.allclose(v.points - v.points[:, :1] * direction, 0, atol=1e-12)
    assert np.allclose(v.lapse, w.lapse - eps.tau_derivative())


def test_reparametrize_fold_over():
    K = 33
    w = Worldline.straight([0, 0, 0, 0], [1, 0, 0, 0], K, 1.0)
    with pytest.raises(FoldOverError):
        reparametrize(w, ShiftField.from_function(lambda t: 5.0 * np.sin(np.pi * t), K))


def test_save_load_roundtrip(tmp_path):
    w = Worldline.straight([0, 0, 0, 0], [10, 3, 1, 0], 17, 1.5)
    path = tmp_path / "w.dat"
    save_worldline(path, w, extra_header="demo")
    v = load_worldline(path, 1.5)
    assert np.array_equal(v.points, w.points) and np.array_equal(v.lapse, w.lapse)
    np.savetxt(tmp_path / "bad.dat", np.ones((4, 3)))
    with pytest.raises(ValueError):
        load_worldline(tmp_path / "bad.dat", 1.0)
