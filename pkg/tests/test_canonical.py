import numpy as np
import pytest

from fokkerlab.canonical import (
    canonical_action, constraints, epsilon_velocities, generalized_hamiltonian,
    invert_momenta_first_order, legendre_sum, momenta_from_velocities, node_weights,
    proper_velocities, save_canonical_state,
)
from fokkerlab.errors import NoContraction, SpacelikeMomentum
from fokkerlab.minkowski import dot
from fokkerlab.worldline import (
    ShiftField, SwitchingProfile, Worldline, total_proper_time, velocities,
)

from conftest import curved_worldline


def _on_shell(w):
    V = velocities(w)
    return w.replace(lapse=np.sqrt(dot(V, V)) / w.mass)


def _pair(K=33, e=0.0, sep=1.0):
    prof = SwitchingProfile(e, 2, 8, 1) if e else None
    w1 = Worldline.straight([0, 0, 0, 0], [10, 0, 0, 0], K, 1.0, prof)
    w2 = Worldline.straight([0, sep, 0, 0], [10, sep, 0, 0], K, 1.5, prof)
    return w1, w2


def test_state_validates_grid_lengths():
    w1, w2 = _pair(K=9)
    st = momenta_from_velocities(w1, w2, ShiftField.zeros(9), ShiftField.zeros(9))
    with pytest.raises(ValueError):
        st.replace(p1=st.p1[:-1])
    with pytest.raises(ValueError):
        st.replace(eps2=ShiftField.zeros(7))


def test_free_momenta_are_kinetic():
    K = 33
    w = _on_shell(curved_worldline(K, amp=(0.3, 0.1, 0.0)))
    v = _on_shell(curved_worldline(K, offset=(2.0, 0.0, 0.0), mass=2.0))
    eps = ShiftField.from_function(lambda t: 0.02 * np.sin(np.pi * t), K)
    st = momenta_from_velocities(w, v, eps, ShiftField.zeros(K))
    assert np.all(st.R1 == 0.0) and np.all(st.R2 == 0.0)
    u = proper_velocities(w)
    assert np.allclose(st.p1, u * (1 + st.mu1)[:, None], rtol=0, atol=1e-14)
    assert np.allclose(st.P_eps1, 0.5 * w.mass ** 2, rtol=1e-12)
    assert np.allclose(st.P_eps2, 0.5 * v.mass ** 2, rtol=1e-12)
    est = invert_momenta_first_order(st)
    assert np.array_equal(est.v1, st.p1) and est.truncation == 0.0
    mu1, mu2 = epsilon_velocities(st)
    assert np.allclose(mu1, st.mu1, atol=1e-12) and np.allclose(mu2, 0.0, atol=1e-12)
    _, _, phi3, phi4 = constraints(st)
    assert np.all(phi3 == 0.0) and np.all(phi4 == 0.0)


def test_spacelike_momentum_is_rejected():
    w1, w2 = _pair(K=9)
    st = momenta_from_velocities(w1, w2, ShiftField.zeros(9), ShiftField.zeros(9))
    p = st.p1.copy()
    p[3] = [0.1, 1.0, 0.0, 0.0]
    with pytest.raises(SpacelikeMomentum):
        epsilon_velocities(st.replace(p1=p))
    with pytest.raises(SpacelikeMomentum):
        generalized_hamiltonian(st.replace(p1=p))
    with pytest.raises(SpacelikeMomentum):
        epsilon_velocities(st.replace(P_eps2=np.zeros(9)))


def test_strong_coupling_does_not_contract():
    w1, w2 = _pair(e=1.0, sep=0.3)
    st = momenta_from_velocities(w1, w2, ShiftField.zeros(33), ShiftField.zeros(33))
    with pytest.raises(NoContraction):
        invert_momenta_first_order(st)
    est = invert_momenta_first_order(st, diagnose=False)
    assert np.isnan(est.truncation)


def test_picard_truncation_scales_with_squared_coupling():
    # R is linear in the charge product e^2, the Picard correction quadratic in it
    truncs = []
    for e in (0.04, 0.02):
        w1, w2 = _pair(e=e)
        st = momenta_from_velocities(w1, w2, ShiftField.zeros(33), ShiftField.zeros(33))
        truncs.append(invert_momenta_first_order(st).truncation)
    assert truncs[0] / truncs[1] == pytest.approx(16.0, rel=0.05)


def test_canonical_action_multiplier_terms():
    K = 17
    w1, w2 = _pair(K=K, e=0.05)
    eps = ShiftField.from_function(lambda t: 0.01 * np.sin(np.pi * t), K)
    st = momenta_from_velocities(w1, w2, eps, ShiftField.zeros(K))
    base = legendre_sum(st) - generalized_hamiltonian(st)
    assert canonical_action(st) == pytest.approx(base, rel=1e-14, abs=1e-14)
    # lambda_3 multiplies eps - eta, which is switched on by moving eta
    lam = np.linspace(0.0, 1.0, K)
    eta = st.eta1 + 0.1
    moved = st.replace(lambda3=lam, eta1=eta)
    expected = base + np.sum(node_weights(w1) * lam * (st.eps1.values - eta))
    assert canonical_action(moved) == pytest.approx(expected, rel=1e-13)


def test_spinor_hamiltonian_top_eigenvalue_matches_scalar():
    K = 17
    w1, w2 = _pair(K=K)
    st = momenta_from_velocities(w1, w2, ShiftField.zeros(K), ShiftField.zeros(K))
    H = generalized_hamiltonian(st, spinor=True)
    assert H.shape == (16, 16)
    ev = np.linalg.eigvals(H)
    assert np.allclose(ev.imag, 0.0, atol=1e-10)
    assert ev.real.max() == pytest.approx(generalized_hamiltonian(st), abs=1e-10)
    # free straight lines on shell: H vanishes
    scale = w1.mass ** 2 * total_proper_time(w1) + w2.mass ** 2 * total_proper_time(w2)
    assert abs(generalized_hamiltonian(st)) < 1e-12 * scale


def test_save_canonical_state(tmp_path):
    K = 9
    w1, w2 = _pair(K=K, e=0.05)
    st = momenta_from_velocities(w1, w2, ShiftField.zeros(K), ShiftField.zeros(K))
    path = tmp_path / "state.txt"
    save_canonical_state(path, st, 2)
    header = path.read_text().splitlines()[0].lstrip("# ").split()
    assert header[:7] == ["tau", "s", "x0", "x1", "x2", "x3", "N"]
    assert len(header) == 21
    table = np.loadtxt(path)
    assert table.shape == (K, 21)
    assert np.array_equal(table[:, 2:6], w2.points)
    assert np.array_equal(table[:, 7:11], st.p2)
    assert np.array_equal(table[:, 11:15], st.R2)
