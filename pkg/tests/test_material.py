import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from creepdam.errors import DomainError, SingularityError
from creepdam.material import (Coupling, MaterialParams, analytic_uniaxial_damage, creep_rate,
                               damage_rate, deviator, make_rho, rupture_time, stiffness_matrix,
                               stress_from_rho, von_mises)

finite = st.floats(-1e3, 1e3, allow_nan=False)


def rho_for_stress(p, sigma, omega=0.0):
    """Rho whose stress is ``sigma`` (zero creep strain)."""
    c = np.linalg.solve(stiffness_matrix(p, omega), np.asarray(sigma, float))
    return make_rho([c[0], c[1], 0.5 * c[2]], [0.0, 0.0, 0.0], omega)


class TestParams:
    @pytest.mark.parametrize("kw", [dict(E=0), dict(nu=0.5), dict(nu=-0.1), dict(A=-1),
                                    dict(B=-1), dict(n=0.5), dict(m=0.9), dict(qd=-0.1),
                                    dict(omega_crit=0.0), dict(omega_crit=1.0), dict(E=math.inf)])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            MaterialParams(**kw)

    def test_defaults(self):
        p = MaterialParams()
        assert p.omega_crit == 0.99 and p.fully_coupled

    def test_coupling_parse(self):
        assert Coupling.parse("partly") is Coupling.PARTLY
        assert MaterialParams(coupling="partly").coupling is Coupling.PARTLY
        with pytest.raises(DomainError):
            Coupling.parse("half")

    def test_replace(self):
        assert MaterialParams().replace(E=5.0).E == 5.0


class TestStiffness:
    def test_nu0_undamaged(self):
        d = stiffness_matrix(MaterialParams(E=1, nu=0), 0.0)
        np.testing.assert_allclose(d, [[1, 0, 0], [0, 1, 0], [0, 0, 0.5]], atol=1e-15)

    def test_fully_scales(self):
        d = stiffness_matrix(MaterialParams(E=1, nu=0), 0.5)
        np.testing.assert_allclose(d, [[0.5, 0, 0], [0, 0.5, 0], [0, 0, 0.25]], atol=1e-15)

    def test_partly_below_crit(self):
        p = MaterialParams(E=1, nu=0.3, coupling="partly")
        np.testing.assert_array_equal(stiffness_matrix(p, 0.5), stiffness_matrix(p, 0.0))

    def test_partly_at_crit_is_zero(self):
        p = MaterialParams(E=1, nu=0.3, coupling="partly", omega_crit=0.9)
        assert not np.any(stiffness_matrix(p, 0.9))

    @pytest.mark.parametrize("w", [-0.1, 1.1, math.nan])
    def test_domain(self, w):
        with pytest.raises(DomainError):
            stiffness_matrix(MaterialParams(), w)

    @given(st.floats(1e-3, 1e4), st.floats(0, 0.499), st.floats(0, 0.95))
    def test_spd(self, E, nu, w):
        d = stiffness_matrix(MaterialParams(E=E, nu=nu), w)
        np.testing.assert_array_equal(d, d.T)
        assert np.all(np.linalg.eigvalsh(d) > 0)


class TestStress:
    def test_identity(self):
        s = stress_from_rho(MaterialParams(E=1, nu=0), [1, 0, 0, 0, 0, 0, 0])
        np.testing.assert_allclose(s, [1, 0, 0])

    def test_creep_cancels(self):
        s = stress_from_rho(MaterialParams(E=1, nu=0), [1, 0, 0, 1, 0, 0, 0])
        np.testing.assert_array_equal(s, [0, 0, 0])

    def test_hand_value(self):
        s = stress_from_rho(MaterialParams(E=1, nu=0.3), [1, 0, 0, 0, 0, 0, 0.5])
        np.testing.assert_allclose(s, [0.5 / 0.91, 0.5 * 0.3 / 0.91, 0.0], rtol=1e-12)
        assert abs(s[0] - 0.549451) < 1e-6 and abs(s[1] - 0.164835) < 1e-6

    def test_engineering_shear(self):
        # tensorial e12 = 1 gives tau = G * 2 * e12
        s = stress_from_rho(MaterialParams(E=1, nu=0), [0, 0, 1, 0, 0, 0, 0])
        np.testing.assert_allclose(s, [0, 0, 1.0])

    def test_vectorized(self):
        rho = np.zeros((4, 5, 7))
        rho[..., 0] = 1.0
        assert stress_from_rho(MaterialParams(E=1, nu=0), rho).shape == (4, 5, 3)

    def test_domain(self):
        with pytest.raises(DomainError):
            stress_from_rho(MaterialParams(), [0, 0, 0, 0, 0, 0, 1.5])


class TestInvariants:
    @pytest.mark.parametrize("sig,expected", [((1, 1, 0), (1 / 3, 1 / 3, 0, -2 / 3)),
                                              ((1, 0, 0), (2 / 3, -1 / 3, 0, -1 / 3)),
                                              ((0, 0, 1), (0, 0, 1, 0))])
    def test_deviator(self, sig, expected):
        np.testing.assert_allclose(deviator(sig), expected, atol=1e-15)

    @pytest.mark.parametrize("sig,expected", [((1, 0, 0), 1.0), ((1, 1, 0), 1.0),
                                              ((0, 0, 1), math.sqrt(3))])
    def test_von_mises(self, sig, expected):
        assert von_mises(sig) == pytest.approx(expected, rel=1e-15)

    def test_von_mises_matches_deviator_norm(self):
        rng = np.random.default_rng(1)
        sig = rng.standard_normal((1000, 3)) * 10.0 ** rng.uniform(-3, 3, (1000, 1))
        s = deviator(sig)
        ref = np.sqrt(1.5 * (s[:, 0] ** 2 + s[:, 1] ** 2 + 2 * s[:, 2] ** 2 + s[:, 3] ** 2))
        np.testing.assert_allclose(von_mises(sig), ref, rtol=1e-12)

    @given(arrays(float, 3, elements=finite))
    def test_von_mises_nonnegative(self, sig):
        assert von_mises(sig) >= 0.0


class TestCreepRate:
    def test_uniaxial_n1(self):
        p = MaterialParams(E=1, nu=0, A=1, n=1)
        np.testing.assert_allclose(creep_rate(p, [1, 0, 0, 0, 0, 0, 0]), [1, -0.5, 0], atol=1e-15)

    def test_zero_A(self):
        p = MaterialParams(E=1, nu=0.3, A=0)
        np.testing.assert_array_equal(creep_rate(p, [0.3, -0.2, 0.1, 0, 0, 0, 0.4]), [0, 0, 0])

    def test_damaged_n2(self):
        p = MaterialParams(E=1, nu=0, A=1, n=2)
        # strain chosen so the damaged stress is (1, 0, 0) at omega = 0.5
        np.testing.assert_allclose(creep_rate(p, [2, 0, 0, 0, 0, 0, 0.5]), [4, -2, 0], rtol=1e-14)

    def test_singularity(self):
        with pytest.raises(SingularityError):
            creep_rate(MaterialParams(A=1), [0, 0, 0, 0, 0, 0, 1 - 1e-12])

    @given(arrays(float, 3, elements=finite), st.floats(0, 0.9), st.floats(0.01, 5), st.floats(1, 6))
    def test_flow_direction(self, sig, w, A, n):
        p = MaterialParams(E=100.0, nu=0.25, A=A, n=n)
        rate = creep_rate(p, rho_for_stress(p, sig, w))
        s = deviator(stress_from_rho(p, rho_for_stress(p, sig, w)))[:3]
        # rate = k * s with one k >= 0
        k = np.dot(rate, s) / max(np.dot(s, s), 1e-300)
        assert k >= 0.0
        np.testing.assert_allclose(rate, k * s, rtol=1e-9, atol=1e-12 * (1 + np.abs(rate).max()))

    def test_norton_uniaxial(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            A, n, sig = rng.uniform(0.01, 10), rng.uniform(1, 8), rng.uniform(0.1, 3)
            p = MaterialParams(E=1000.0, nu=0.3, A=A, n=n)
            rate = creep_rate(p, rho_for_stress(p, [sig, 0, 0]))
            assert rate[0] == pytest.approx(A * sig**n, rel=1e-12)


class TestDamageRate:
    def test_unit(self):
        p = MaterialParams(E=1, nu=0, B=1, m=2, qd=1)
        assert damage_rate(p, [1, 0, 0, 0, 0, 0, 0]) == pytest.approx(1.0)

    def test_damaged(self):
        p = MaterialParams(E=1, nu=0, B=1, m=2, qd=1, coupling="partly")
        assert damage_rate(p, [1, 0, 0, 0, 0, 0, 0.5]) == pytest.approx(2.0)

    def test_zero_B(self):
        assert damage_rate(MaterialParams(B=0), [1, 0, 0, 0, 0, 0, 0.3]) == 0.0

    @given(arrays(float, 3, elements=finite), st.floats(0, 0.9), st.floats(0.01, 0.09))
    def test_nonneg_and_increasing(self, sig, w, dw):
        p = MaterialParams(E=10.0, nu=0.2, B=1.0, m=2.0, qd=1.5, coupling="partly")
        r0 = damage_rate(p, rho_for_stress(p, sig, w))
        r1 = damage_rate(p, rho_for_stress(p, sig, w + dw))
        assert r0 >= 0.0
        if von_mises(sig) > 1e-6:
            assert r1 > r0


class TestAnalytic:
    p = MaterialParams(B=1, m=2, qd=1)

    def test_mid(self):
        assert analytic_uniaxial_damage(self.p, 1.0, 0.0, 0.375) == pytest.approx(0.5, abs=1e-15)

    def test_rupture(self):
        assert rupture_time(self.p, 1.0, 0.0) == pytest.approx(0.5)

    def test_initial(self):
        assert analytic_uniaxial_damage(self.p, 1.0, 0.2, 0.0) == pytest.approx(0.2, abs=1e-15)

    def test_past_rupture(self):
        with pytest.raises(DomainError):
            analytic_uniaxial_damage(self.p, 1.0, 0.0, 0.6)

    def test_bad_inputs(self):
        with pytest.raises(DomainError):
            rupture_time(MaterialParams(B=0), 1.0, 0.0)
        with pytest.raises(DomainError):
            rupture_time(self.p, 1.0, 0.5, 0.4)

    def test_satisfies_ode(self):
        p = MaterialParams(E=1, nu=0, B=2.0, m=3.0, qd=1.7, coupling="partly")
        sig, w0 = 0.8, 0.1
        ts = np.linspace(0.01, 0.95, 100) * rupture_time(p, sig, w0)
        h = 1e-6
        fd = (analytic_uniaxial_damage(p, sig, w0, ts + h)
              - analytic_uniaxial_damage(p, sig, w0, ts - h)) / (2 * h)
        w = analytic_uniaxial_damage(p, sig, w0, ts)
        exact = np.array([damage_rate(p, [sig, 0, 0, 0, 0, 0, wi]) for wi in w])
        np.testing.assert_allclose(fd, exact, rtol=1e-8)
