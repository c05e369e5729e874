import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fokkerlab.errors import GrazingRoot
from fokkerlab.lightcone import crossings, find_crossings, lightcone_sum
from fokkerlab.minkowski import dot
from fokkerlab.worldline import SwitchingProfile, Worldline


def static_partner(r=1.0, t0=-5.0, t1=5.0, K=11, charge=1.0):
    return Worldline.straight([t0, r, 0, 0], [t1, r, 0, 0], K, 1.0, SwitchingProfile(charge))


def test_static_roots_and_weights():
    partner = static_partner()
    cr = find_crossings(np.array([0.0, 0.0, 0.0, 0.0]), partner)
    assert len(cr) == 2
    taus = sorted(c.tau_root for c in cr)
    assert np.allclose(taus, [0.4, 0.6])
    # |f'| = 2 r |dy0/dtau| = 2 * 1 * 10
    assert np.allclose([c.weight for c in cr], 0.05)
    kinds = {c.kind for c in cr}
    assert kinds == {"retarded", "advanced"}


def test_scalar_sum_static():
    partner = static_partner(charge=1.0)
    # v . y' / |f'| = 10 * 10 / 20 per root
    val = lightcone_sum([0, 0, 0, 0], np.array([10.0, 0, 0, 0]), partner)
    assert np.isclose(val, 10.0)
    vec = lightcone_sum([0, 0, 0, 0], None, partner, integrand_kind="vector")
    assert np.allclose(vec, [1.0, 0, 0, 0])
    with pytest.raises(ValueError):
        lightcone_sum([0, 0, 0, 0], np.ones(4), partner, integrand_kind="tensor")


def test_charge_override_and_nodal_charge():
    partner = static_partner(charge=2.0)
    v = np.array([1.0, 0, 0, 0])
    base = lightcone_sum([0, 0, 0, 0], v, partner)
    assert np.isclose(lightcone_sum([0, 0, 0, 0], v, partner, charge=np.full(11, 2.0)), base)
    assert np.isclose(lightcone_sum([0, 0, 0, 0], v, partner,
                                    charge=lambda w, cr: np.full(len(cr), 4.0)), 2 * base)


def test_exclusion_window():
    partner = static_partner()
    assert len(find_crossings([0, 0, 0, 0], partner, exclude=(0.35, 0.45))) == 1
    assert len(find_crossings([0, 0, 0, 0], partner, exclude=(0.0, 1.0))) == 0


def test_no_roots_outside_span():
    partner = static_partner()
    assert len(find_crossings([100.0, 0, 0, 0], partner)) == 0
    assert lightcone_sum([100.0, 0, 0, 0], np.ones(4), partner) == 0.0


def test_grazing_contact_raises():
    # null a = (5, 3, 4, 0) with a . d = 0 for the spacelike chord d = (0, 4, -3, 0)
    a = np.array([5.0, 3.0, 4.0, 0.0])
    d = np.array([0.0, 4.0, -3.0, 0.0])
    pts = np.array([a - d, a, a + d])
    w = Worldline(pts, np.ones(3), 1.0, SwitchingProfile(1.0))
    with pytest.raises(GrazingRoot):
        crossings(np.zeros((1, 4)), w)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(0.3, 3.0), st.floats(-3.0, 3.0))
def test_roots_lie_on_the_cone(v, r, t):
    partner = Worldline.straight([-20, r - 20 * v, 0, 0], [20, r + 20 * v, 0, 0], 41, 1.0)
    cr = crossings(np.array([[t, 0.0, 0.0, 0.0]]), partner)
    assert len(cr) == 2
    assert np.allclose(dot(cr.u, cr.u), 0.0, atol=1e-10)
    # retarded root is in the past of the evaluation point, advanced in the future
    assert np.sum(cr.u[:, 0] > 0) == 1


def test_root_on_node_with_second_root_in_same_cell():
    partner = Worldline.straight([-20, 0.375, 0, 0], [20, 0.375, 0, 0], 41, 1.0)
    cr = crossings(np.array([[0.375, 0.0, 0.0, 0.0]]), partner)
    assert np.allclose(np.sort(cr.tau) * 40 - 20, [0.0, 0.75])
