"""Closed-form steady-state quantities against independently computed values.

Expected numbers are frozen from hand evaluation of the formulas (documented
next to each assertion) so the tests cannot drift with the implementation.
"""

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zetastep import analytics
from zetastep.analytics import DesignRipple
from zetastep.design import solve_duty
from zetastep.model import validate_params
from tests.conftest import PAPER_RAW


@pytest.fixture(scope="module")
def p():
    return validate_params(PAPER_RAW)


duties = st.floats(min_value=0.01, max_value=0.95)
ratios = st.floats(min_value=0.1, max_value=10.0)


class TestGain:
    def test_reference_point(self):
        # (2 + 1.2)/0.4
        assert analytics.gain(0.6, 2.0) == pytest.approx(8.0, rel=1e-12)

    def test_half_duty_unity_ratio(self):
        # (1 + 1)/0.5
        assert analytics.gain(0.5, 1.0) == pytest.approx(4.0, rel=1e-12)

    def test_zero_duty_limit(self):
        for n in (0.5, 1.0, 2.0, 3.0):
            assert analytics.gain(1e-9, n) == pytest.approx(n, rel=1e-6)

    def test_domain(self):
        with pytest.raises(ValueError):
            analytics.gain(0.0, 2.0)
        with pytest.raises(ValueError):
            analytics.gain(1.0, 2.0)
        with pytest.raises(ValueError):
            analytics.gain(0.5, 0.0)

    @given(d=duties, n=ratios)
    def test_monotone_in_duty_and_ratio(self, d, n):
        eps = 1e-6
        assert analytics.gain(min(d + eps, 0.9999), n) > analytics.gain(d, n)
        assert analytics.gain(d, n + eps) > analytics.gain(d, n)


class TestCapVoltages:
    def test_reference_point(self, p):
        caps = analytics.cap_voltages(p)
        # D/(1-D)*vin = 45, (n+2)*D/(1-D)*vin = 180, n*vin = 60
        assert caps["v_c4"] == pytest.approx(45.0, rel=1e-12)
        assert caps["v_c1"] == pytest.approx(45.0, rel=1e-12)
        assert caps["v_c2"] == pytest.approx(180.0, rel=1e-12)
        assert caps["v_c3"] == pytest.approx(60.0, rel=1e-12)
        assert caps["v_o"] == pytest.approx(240.0, rel=1e-12)

    def test_zero_duty_limit(self):
        p0 = validate_params({**PAPER_RAW, "duty": 1e-9})
        caps = analytics.cap_voltages(p0)
        assert caps["v_c4"] == pytest.approx(0.0, abs=1e-6)
        assert caps["v_c1"] == pytest.approx(0.0, abs=1e-6)
        assert caps["v_c2"] == pytest.approx(0.0, abs=1e-6)
        assert caps["v_c3"] == pytest.approx(60.0, rel=1e-9)

    @given(d=duties, n=ratios, vin=st.floats(min_value=1.0, max_value=1000.0))
    @settings(max_examples=200)
    def test_gain_identity(self, d, n, vin):
        pp = validate_params({**PAPER_RAW, "duty": d, "n": n, "vin": vin})
        caps = analytics.cap_voltages(pp)
        m = analytics.gain(d, n)
        assert caps["v_c2"] + caps["v_c3"] == pytest.approx(m * vin, rel=1e-12)


class TestDeviceStresses:
    def test_reference_point(self, p):
        s = analytics.device_stresses(p)
        # vin/(1-D) = 75, (1+n)*vin/(1-D) = 225, n*vin/(1-D) = 150
        assert s["v_s"] == pytest.approx(75.0, rel=1e-12)
        assert s["v_d1"] == pytest.approx(75.0, rel=1e-12)
        assert s["v_d2"] == pytest.approx(225.0, rel=1e-12)
        assert s["v_d3"] == pytest.approx(150.0, rel=1e-12)
        assert "magnitude" in s["polarity"]

    def test_small_ratio_limit(self):
        pp = validate_params({**PAPER_RAW, "n": 1e-9})
        s = analytics.device_stresses(pp)
        assert s["v_d3"] == pytest.approx(0.0, abs=1e-6)

    @given(d=duties, n=ratios, vin=st.floats(min_value=1.0, max_value=1000.0))
    @settings(max_examples=200)
    def test_sum_identity(self, d, n, vin):
        pp = validate_params({**PAPER_RAW, "duty": d, "n": n, "vin": vin})
        s = analytics.device_stresses(pp)
        assert s["v_d2"] == pytest.approx(s["v_d1"] + s["v_d3"], rel=1e-12)


class TestAverageMagnetizingCurrent:
    def test_reference_point(self, p):
        # I_o = 1 A; (2*0.6 + 2 - 1)/0.6 = 2.2/0.6
        assert analytics.avg_magnetizing_current(p) == pytest.approx(
            3.6666666666666665, rel=1e-12)

    def test_symmetric_point(self):
        # D=0.5, n=1, rl = 4*vin so that I_o = 1 A -> (1+1-1)/0.5 = 2
        pp = validate_params({**PAPER_RAW, "duty": 0.5, "n": 1.0, "rl": 120.0})
        assert analytics.avg_magnetizing_current(pp) == pytest.approx(2.0,
                                                                      rel=1e-12)

    def test_vanishes_at_no_load(self):
        pp = validate_params({**PAPER_RAW, "rl": 1e15})
        assert analytics.avg_magnetizing_current(pp) == pytest.approx(
            0.0, abs=1e-10)


class TestInductorRipples:
    def test_reference_point(self, p):
        r = analytics.inductor_ripples(p)
        # 0.6*30/(47e-6*40e3) and 0.6*30/(300e-6*40e3)
        assert r["di_l1"] == pytest.approx(9.574468085106384, rel=1e-12)
        assert r["di_lm"] == pytest.approx(1.5, rel=1e-12)

    def test_frequency_scaling(self, p):
        p2 = validate_params({**PAPER_RAW, "fs": 80e3})
        r1 = analytics.inductor_ripples(p)
        r2 = analytics.inductor_ripples(p2)
        assert r2["di_l1"] == pytest.approx(r1["di_l1"] / 2.0, rel=1e-12)
        assert r2["di_lm"] == pytest.approx(r1["di_lm"] / 2.0, rel=1e-12)

    def test_zero_duty_limit(self):
        pp = validate_params({**PAPER_RAW, "duty": 1e-12})
        r = analytics.inductor_ripples(pp)
        assert r["di_l1"] == pytest.approx(0.0, abs=1e-9)
        assert r["di_lm"] == pytest.approx(0.0, abs=1e-9)


class TestPeakCurrents:
    def test_reference_point(self, p):
        pk = analytics.peak_currents(p)
        # 2/0.6 ; 2*2/(0.6*3) ; 2*2/0.6 + 1.5 + 9.574468...
        assert pk["i_d3_peak"] == pytest.approx(3.3333333333333335, rel=1e-12)
        assert pk["i_d2_peak"] == pytest.approx(2.2222222222222223, rel=1e-12)
        assert pk["i_d1_peak"] == pytest.approx(17.74113475177305, rel=1e-12)
        assert pk["i_s_peak"] == pk["i_d1_peak"]

    def test_unity_ratio(self):
        # n=1: i_d2_peak = 2*I_o*1/(D*2) = I_o/D; rl = 4*vin keeps I_o = 1
        pp = validate_params({**PAPER_RAW, "duty": 0.5, "n": 1.0, "rl": 120.0})
        pk = analytics.peak_currents(pp)
        assert pk["i_d2_peak"] == pytest.approx(1.0 / 0.5, rel=1e-12)

    def test_no_load_reduces_to_ripple_terms(self, p):
        pp = validate_params({**PAPER_RAW, "rl": 1e15})
        pk = analytics.peak_currents(pp)
        ripple_sum = 9.574468085106384 + 1.5
        assert pk["i_d1_peak"] == pytest.approx(ripple_sum, rel=1e-9)


class TestClampIntervalFraction:
    def test_reference_point(self, p):
        # lm||l1 = 300*47/347 uH = 40.634 uH;
        # d34 = 2/(2*2/0.6 + 0.6*240*0.4/(40e3*lpar*2.6))
        assert analytics.clamp_interval_fraction(p) == pytest.approx(
            0.09853779163530801, rel=1e-12)

    def test_load_frequency_homogeneity(self, p):
        pp = validate_params({**PAPER_RAW, "rl": 480.0, "fs": 80e3})
        assert analytics.clamp_interval_fraction(pp) == pytest.approx(
            analytics.clamp_interval_fraction(p), rel=1e-12)

    def test_large_ratio_limit(self):
        pp = validate_params({**PAPER_RAW, "n": 1e6})
        assert analytics.clamp_interval_fraction(pp) < 1e-5


class TestCcmMinimumLm:
    def test_reference_point(self, p):
        # 0.36*30/(2*2.2*1*40e3)
        assert analytics.ccm_min_Lm(p) == pytest.approx(6.136363636363636e-05,
                                                        rel=1e-12)
        assert p.lm >= analytics.ccm_min_Lm(p)

    def test_frequency_scaling(self, p):
        pp = validate_params({**PAPER_RAW, "fs": 80e3})
        assert analytics.ccm_min_Lm(pp) == pytest.approx(
            analytics.ccm_min_Lm(p) / 2.0, rel=1e-12)

    def test_load_scaling(self, p):
        # halving I_o (doubling rl) doubles the bound
        pp = validate_params({**PAPER_RAW, "rl": 480.0})
        assert analytics.ccm_min_Lm(pp) == pytest.approx(
            2.0 * analytics.ccm_min_Lm(p), rel=1e-12)


class TestMinimumCapacitances:
    def test_reference_point(self, p):
        c = analytics.min_capacitances(p, DesignRipple(1.0))
        assert c["c1_min"] == pytest.approx(4.083333333333334e-06, rel=1e-12)
        assert c["c4_min"] == c["c1_min"]
        assert c["c2_min"] == pytest.approx(7.407407407407408e-07, rel=1e-12)
        assert c["c3_min"] == pytest.approx(1.6666666666666667e-06, rel=1e-12)

    def test_ripple_scaling(self, p):
        c1 = analytics.min_capacitances(p, DesignRipple(1.0))
        c2 = analytics.min_capacitances(p, DesignRipple(2.0))
        for key in c1:
            assert c2[key] == pytest.approx(c1[key] / 2.0, rel=1e-12)

    @given(d=duties, n=ratios)
    @settings(max_examples=200)
    def test_c3_to_c2_ratio(self, d, n):
        pp = validate_params({**PAPER_RAW, "duty": d, "n": n})
        c = analytics.min_capacitances(pp, DesignRipple(1.0))
        expected = d * (1.0 + n) / (n * (1.0 - d))
        assert c["c3_min"] / c["c2_min"] == pytest.approx(expected, rel=1e-12)

    def test_ripple_must_be_positive(self):
        with pytest.raises(ValueError):
            DesignRipple(0.0)


class TestFullReport:
    def test_reference_point(self, p):
        rep = analytics.full_report(p)
        assert rep.m == pytest.approx(8.0, rel=1e-12)
        assert rep.v_o == pytest.approx(240.0, rel=1e-12)
        assert rep.ccm is True
        assert rep.c1_min is None

    def test_output_identity(self, p):
        rep = analytics.full_report(p)
        assert rep.v_o == rep.v_c2 + rep.v_c3
        assert rep.m == pytest.approx(rep.v_o / p.vin, rel=1e-15)

    def test_fields_match_individual_operations(self, p):
        rep = analytics.full_report(p, DesignRipple(1.0))
        caps = analytics.cap_voltages(p)
        stresses = analytics.device_stresses(p)
        ripples = analytics.inductor_ripples(p)
        peaks = analytics.peak_currents(p)
        cmins = analytics.min_capacitances(p, DesignRipple(1.0))
        assert rep.v_c1 == caps["v_c1"]
        assert rep.v_c2 == caps["v_c2"]
        assert rep.v_c3 == caps["v_c3"]
        assert rep.v_c4 == caps["v_c4"]
        assert rep.v_s_stress == stresses["v_s"]
        assert rep.v_d2_stress == stresses["v_d2"]
        assert rep.di_l1 == ripples["di_l1"]
        assert rep.di_lm == ripples["di_lm"]
        assert rep.i_d1_peak == peaks["i_d1_peak"]
        assert rep.i_lm_avg == analytics.avg_magnetizing_current(p)
        assert rep.d34 == analytics.clamp_interval_fraction(p)
        assert rep.lm_min == analytics.ccm_min_Lm(p)
        assert rep.c3_min == cmins["c3_min"]

    def test_report_is_frozen(self, p):
        rep = analytics.full_report(p)
        with pytest.raises(dataclasses.FrozenInstanceError):
            rep.m = 1.0


class TestDutyInversionRoundTrip:
    def test_grid(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = rng.uniform(0.5, 4.0)
            m = rng.uniform(n + 0.2, 20.0)
            d = solve_duty(m, n)
            assert analytics.gain(d, n) == pytest.approx(m, rel=1e-12)
