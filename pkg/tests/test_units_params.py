import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfwm.params import (
    DEFAULT_K_RATIO_PC,
    DEFAULT_K_RATIO_SC,
    FrameParams,
    ParameterError,
    PhysicalParams,
    detunings_from_frame,
    effective_rabi,
    frame_from_detunings,
)
from sfwm.units import from_gamma, gamma_to_mhz, parse_quantity, time_to_ns, to_gamma

finite_detunings = st.floats(min_value=-1.0e6, max_value=1.0e6, allow_nan=False)


class TestUnits:
    def test_gamma_is_two_pi_six_mhz(self):
        from sfwm.units import GAMMA_RAD_PER_S

        assert GAMMA_RAD_PER_S == pytest.approx(2.0 * math.pi * 6.0e6, rel=0)

    def test_known_conversions(self):
        assert to_gamma(6.0, "MHz") == pytest.approx(1.0, rel=1e-15)
        assert to_gamma(0.32, "GHz") == pytest.approx(160.0 / 3.0, rel=1e-15)
        assert to_gamma(3.5, "Gamma") == 3.5
        assert gamma_to_mhz(2.0) == pytest.approx(12.0, rel=1e-15)

    @given(st.floats(min_value=1e-6, max_value=1e6))
    def test_mhz_round_trip(self, value):
        assert from_gamma(to_gamma(value, "MHz"), "MHz") == pytest.approx(value, rel=1e-12)

    def test_parse_quantity_forms(self):
        assert parse_quantity(380) == 380.0
        assert parse_quantity("380 Gamma") == 380.0
        assert parse_quantity("2.28 GHz") == pytest.approx(380.0, rel=1e-12)
        assert parse_quantity("12 MHz") == pytest.approx(2.0, rel=1e-12)

    @pytest.mark.parametrize("bad", ["GHz", "1 2 GHz", "x GHz", "3 lightyears", None, True, float("nan")])
    def test_parse_quantity_rejects(self, bad):
        with pytest.raises(ValueError):
            parse_quantity(bad)

    def test_time_conversion(self):
        # one linewidth-inverse is about 26.5 ns
        assert time_to_ns(1.0) == pytest.approx(26.5258, rel=1e-4)


class TestFrameAlgebra:
    def test_zero_detunings(self):
        frame = frame_from_detunings(0.0, 0.0, 0.5386)
        assert frame.omega_d0 == 0.0
        assert frame.delta_atom == 0.0

    def test_balanced_detunings(self):
        frame = frame_from_detunings(380.0, -380.0, 0.5386)
        assert frame.omega_d0 == pytest.approx(0.0, abs=1e-12)
        assert frame.delta_atom == pytest.approx(380.0, rel=1e-12)

    def test_offset_operating_point(self):
        # 1.96 GHz and -1.2215 GHz detunings put the dominant group at
        # 0.48 GHz with a 1.48 GHz one-photon detuning
        delta_c = to_gamma(1.96, "GHz")
        delta_p = to_gamma(-1.2215, "GHz")
        frame = frame_from_detunings(delta_c, delta_p, 0.5386)
        assert gamma_to_mhz(frame.omega_d0) / 1000.0 == pytest.approx(0.48, rel=1e-3)
        assert gamma_to_mhz(frame.delta_atom) / 1000.0 == pytest.approx(1.48, rel=1e-3)
        back = detunings_from_frame(frame, 0.5386)
        assert back[0] == pytest.approx(delta_c, rel=1e-12)
        assert back[1] == pytest.approx(delta_p, rel=1e-12)

    def test_inverse_known_point(self):
        delta_c, delta_p = detunings_from_frame(FrameParams(0.0, 380.0), 0.5386)
        assert delta_c == pytest.approx(380.0, rel=1e-12)
        assert delta_p == pytest.approx(-380.0, rel=1e-12)

    @settings(max_examples=100)
    @given(finite_detunings, finite_detunings)
    def test_round_trip_bijection(self, omega_d0, delta_atom):
        frame = FrameParams(omega_d0, delta_atom)
        back = frame_from_detunings(*detunings_from_frame(frame, DEFAULT_K_RATIO_PC), DEFAULT_K_RATIO_PC)
        assert back.omega_d0 == pytest.approx(omega_d0, rel=1e-12, abs=1e-9)
        assert back.delta_atom == pytest.approx(delta_atom, rel=1e-12, abs=1e-9)

    @settings(max_examples=100)
    @given(finite_detunings, st.floats(min_value=-1e5, max_value=1e5, allow_nan=False))
    def test_omega_d0_depends_only_on_sum(self, delta_c, shift):
        a = frame_from_detunings(delta_c, 100.0 - delta_c, DEFAULT_K_RATIO_PC)
        b = frame_from_detunings(delta_c + shift, 100.0 - delta_c - shift, DEFAULT_K_RATIO_PC)
        assert a.omega_d0 == pytest.approx(b.omega_d0, rel=1e-9, abs=1e-9)

    def test_rejects_nonfinite(self):
        with pytest.raises(ParameterError):
            frame_from_detunings(float("nan"), 0.0, 0.5)
        with pytest.raises(ParameterError):
            frame_from_detunings(0.0, float("inf"), 0.5)
        with pytest.raises(ParameterError):
            frame_from_detunings(0.0, 0.0, -1.0)


class TestEffectiveRabi:
    def test_reference_point(self):
        assert effective_rabi(17.0, 78.0, 380.0) == pytest.approx(1.7447, abs=1e-4)

    def test_zero_field(self):
        assert effective_rabi(0.0, 78.0, 380.0) == 0.0

    def test_product_form(self):
        # product 1300 at detuning 650 gives exactly one linewidth
        assert effective_rabi(math.sqrt(1300.0), math.sqrt(1300.0), 650.0) == pytest.approx(1.0, rel=1e-12)

    def test_zero_detuning_domain_error(self):
        with pytest.raises(ParameterError):
            effective_rabi(17.0, 78.0, 0.0)


class TestPhysicalParams:
    def test_default_wavelength_ratios(self):
        p = PhysicalParams()
        assert p.k_ratio_pc == pytest.approx(795.0 / 1476.0, rel=1e-12)
        assert p.k_ratio_sc == pytest.approx(795.0 / 1529.0, rel=1e-12)
        assert DEFAULT_K_RATIO_PC == pytest.approx(0.5386, abs=1e-4)
        assert DEFAULT_K_RATIO_SC == pytest.approx(0.5199, abs=1e-4)

    def test_default_rates(self):
        p = PhysicalParams()
        assert (p.gamma2, p.gamma3) == (1.0, 1.0)
        assert p.gamma4 == pytest.approx(1.0 / 3.0, rel=1e-12)
        assert p.gamma_doppler == pytest.approx(320.0 / 6.0, rel=1e-12)

    @pytest.mark.parametrize(
        "changes",
        [
            {"gamma2": -0.1},
            {"alpha": -1.0},
            {"gamma_doppler": 0.0},
            {"k_ratio_pc": 2.5},
            {"k_ratio_sc": 0.0},
            {"omega_c": float("nan")},
            {"delta_c": float("inf")},
        ],
    )
    def test_invalid_params_rejected(self, changes):
        with pytest.raises(ParameterError):
            PhysicalParams(**{**PhysicalParams().as_dict(), **changes})

    def test_frame_round_trip_through_params(self):
        p = PhysicalParams()
        q = p.with_frame(FrameParams(80.0, 246.67))
        assert q.frame.omega_d0 == pytest.approx(80.0, rel=1e-12)
        assert q.frame.delta_atom == pytest.approx(246.67, rel=1e-12)
