import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from creepdam.errors import DomainError
from creepdam.geometry import Polyline, structured_rect_mesh
from creepdam.scenario import build_band_damage
from creepdam.spaces import (NormConfig, grad_lp_norm, localization_measure, lp_norm,
                             membership_Y, sup_norm_check, sup_over_time, w1p_norm)

SMALL = structured_rect_mesh(1.0, 1.0, 3, 3)
LINE = Polyline([[0.5, 0.5], [1.5, 0.5]])


def band_grad_oracle(h, p, length=1.0):
    """||grad omega0||_p of the exact band field: slope 1/(2h) on a stadium of area 2hL + pi h^2."""
    return (1.0 / (2.0 * h)) * (2.0 * h * length + math.pi * h * h) ** (1.0 / p)


@pytest.fixture(scope="module")
def band_mesh():
    # spacing 1/80 puts the band edges on grid lines for h = 0.2, 0.1, 0.05
    return structured_rect_mesh(2.0, 1.0, 160, 80)


class TestNorms:
    def test_constant(self, unit_square):
        f = np.full(unit_square.n_nodes, -2.5)
        assert lp_norm(unit_square, f, 4) == pytest.approx(2.5, rel=1e-14)
        assert grad_lp_norm(unit_square, f, 4) == 0.0

    def test_linear_l2(self, unit_square):
        x = unit_square.nodes[:, 0]
        assert lp_norm(unit_square, x, 2) == pytest.approx(1 / math.sqrt(3), rel=1e-14)
        assert grad_lp_norm(unit_square, x, 2) == pytest.approx(1.0, rel=1e-14)
        assert w1p_norm(unit_square, x, 2) == pytest.approx(math.sqrt(1 / 3 + 1), rel=1e-14)

    def test_zero(self, unit_square):
        z = np.zeros(unit_square.n_nodes)
        assert lp_norm(unit_square, z, 4) == 0.0 and w1p_norm(unit_square, z, 4) == 0.0

    def test_odd_power_exact(self, unit_square):
        f = unit_square.nodes[:, 0] - 0.5       # sign change only across element edges
        assert lp_norm(unit_square, f, 3) == pytest.approx((2 * 0.5**4 / 4) ** (1 / 3), rel=1e-13)

    def test_odd_power_sign_change_inside(self):
        f = SMALL.nodes[:, 0] - 0.5             # kink inside the middle column
        assert lp_norm(SMALL, f, 3) == pytest.approx((2 * 0.5**4 / 4) ** (1 / 3), rel=2e-2)

    def test_fractional_power(self, unit_square):
        x = unit_square.nodes[:, 0]
        assert lp_norm(unit_square, x, 2.5) == pytest.approx((1 / 3.5) ** (1 / 2.5), rel=1e-6)

    def test_bad_p(self, unit_square):
        with pytest.raises(DomainError):
            lp_norm(unit_square, np.zeros(unit_square.n_nodes), 0.5)

    @given(arrays(float, SMALL.n_nodes, elements=st.floats(-10, 10)), st.floats(-5, 5))
    def test_homogeneous(self, f, a):
        for p in (3, 4, 2.5):
            assert lp_norm(SMALL, a * f, p) == pytest.approx(abs(a) * lp_norm(SMALL, f, p),
                                                              rel=1e-10, abs=1e-12)

    @given(arrays(float, SMALL.n_nodes, elements=st.floats(-10, 10)),
           arrays(float, SMALL.n_nodes, elements=st.floats(-10, 10)))
    def test_triangle_inequality(self, f, g):
        for p in (4, 6):
            assert lp_norm(SMALL, f + g, p) <= lp_norm(SMALL, f, p) + lp_norm(SMALL, g, p) + 1e-9
            assert w1p_norm(SMALL, f + g, p) <= w1p_norm(SMALL, f, p) + w1p_norm(SMALL, g, p) + 1e-9

    @given(arrays(float, SMALL.n_nodes, elements=st.floats(-10, 10)))
    def test_w1p_dominates(self, f):
        assert w1p_norm(SMALL, f, 4) >= lp_norm(SMALL, f, 4)


class TestMembership:
    cfg = NormConfig()

    def test_zero_inside(self, unit_square):
        assert membership_Y(unit_square, np.zeros(unit_square.n_nodes), self.cfg)

    def test_pointwise(self, unit_square):
        res = membership_Y(unit_square, np.full(unit_square.n_nodes, 1 - 0.025), self.cfg)
        assert not res and "pointwise" in res.reason and res.value == pytest.approx(0.975)

    def test_negative(self, unit_square):
        w = np.zeros(unit_square.n_nodes)
        w[3] = -0.1
        assert "pointwise" in membership_Y(unit_square, w, self.cfg).reason

    def test_band_leaves_by_norm(self):
        # strip along the curve resolving the band exactly (spacing h/2 across it)
        def strip(h):
            mesh = structured_rect_mesh(1.0, 4 * h, 4, 8).scaled(1.0, (0.5, 0.5 - 2 * h))
            return mesh, build_band_damage(mesh, LINE, h)
        mesh, w = strip(0.01)
        assert membership_Y(mesh, w, self.cfg)
        # the strip holds the straight part of the band only (no end caps)
        assert grad_lp_norm(mesh, w, 4) == pytest.approx(50.0 * 0.02 ** 0.25, rel=1e-9)
        mesh, w = strip(0.001)
        res = membership_Y(mesh, w, self.cfg)
        assert not res and "norm" in res.reason and res.value > 100

    @given(st.floats(0.5, 50), st.floats(0.1, 1.0))
    def test_monotone_in_beta2(self, beta2, shrink):
        w = build_band_damage(SMALL, LINE, 0.3) * 0.9
        big = membership_Y(SMALL, w, NormConfig(beta2=beta2))
        small = membership_Y(SMALL, w, NormConfig(beta2=beta2 * shrink))
        assert bool(big) or not bool(small)

    @pytest.mark.parametrize("kw", [dict(p=2), dict(beta1=0.5), dict(beta1=0), dict(beta2=0)])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            NormConfig(**kw)


class TestLocalization:
    def test_uniform(self, unit_square):
        assert localization_measure(unit_square, np.full(unit_square.n_nodes, 0.4), 4) == 0.0

    def test_band_minimum(self, band_mesh):
        w = build_band_damage(band_mesh, LINE, 0.1)
        assert np.min(1.0 - w) == 0.5

    def test_band_oracle(self, band_mesh):
        lam = {h: localization_measure(band_mesh, build_band_damage(band_mesh, LINE, h), 4)
               for h in (0.2, 0.1, 0.05)}
        for h, value in lam.items():
            assert value == pytest.approx(band_grad_oracle(h, 4) / 0.5, rel=0.02)
        for h in (0.2, 0.1):
            assert lam[h / 2] / lam[h] == pytest.approx(2 ** 0.75, rel=0.05)

    def test_rupture_flag(self, unit_square):
        w = np.zeros(unit_square.n_nodes)
        w[4] = 1.0
        assert localization_measure(unit_square, w, 4) == math.inf

    def test_translation_and_dilation(self):
        mesh = structured_rect_mesh(2.0, 1.0, 40, 20)
        w = build_band_damage(mesh, LINE, 0.2)
        lam = localization_measure(mesh, w, 4)
        assert localization_measure(mesh.scaled(1.0, (3.0, -7.0)), w, 4) == pytest.approx(lam, rel=1e-12)
        for s in (0.5, 3.0):
            assert localization_measure(mesh.scaled(s), w, 4) == pytest.approx(
                lam * s ** (2 / 4 - 1), rel=1e-12)


class TestSup:
    def test_series(self):
        assert sup_over_time([1, 3, 2]) == 3
        assert sup_over_time([4.5]) == 4.5
        assert sup_over_time([2, 2, 2]) == 2

    def test_empty(self):
        with pytest.raises(DomainError):
            sup_over_time([])

    def test_constant_ratio(self, unit_square):
        assert sup_norm_check(unit_square, np.full(unit_square.n_nodes, 0.3), 4) == (
            pytest.approx(0.3), pytest.approx(1.0))

    def test_zero_ratio(self, unit_square):
        assert sup_norm_check(unit_square, np.zeros(unit_square.n_nodes), 4) == (0.0, 0.0)

    def test_bump_finite(self, unit_square):
        x, y = unit_square.nodes.T
        sup, ratio = sup_norm_check(unit_square, np.exp(-20 * ((x - .5) ** 2 + (y - .5) ** 2)), 4)
        assert sup == pytest.approx(1.0) and 0 < ratio < math.inf
