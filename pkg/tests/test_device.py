import math

import numpy as np
import pytest

from phtelem import device as dev


def make_state(ph=7.0, t_s=0.0, hydrated=True):
    return dev.ElectrodeState(t_s=t_s, ph_surface=ph, hydrated=hydrated)


class TestInputImpedance:
    def test_4pf_at_1hz(self):
        afe = dev.AfeParams(c_gs_pf=2.0, c_gd_pf=2.0)
        # 1 / (2*pi * 1 Hz * 4 pF) = 39.79 GOhm
        assert dev.input_impedance(afe, 1.0) == pytest.approx(39.7887, abs=1e-3)

    def test_4pf_at_10hz(self):
        afe = dev.AfeParams(c_gs_pf=2.0, c_gd_pf=2.0)
        assert dev.input_impedance(afe, 10.0) == pytest.approx(3.97887, abs=1e-4)

    def test_inverse_in_ciss(self):
        a4 = dev.AfeParams(c_gs_pf=2.0, c_gd_pf=2.0)
        a8 = dev.AfeParams(c_gs_pf=4.0, c_gd_pf=4.0)
        assert dev.input_impedance(a8, 1.0) == pytest.approx(dev.input_impedance(a4, 1.0) / 2)

    def test_pure_one_over_f_law(self):
        afe = dev.AfeParams()
        ref = dev.input_impedance(afe, 1.0) * 1.0
        for f in [0.1, 0.5, 2.0, 50.0, 1e3]:
            assert dev.input_impedance(afe, f) * f == pytest.approx(ref)

    def test_dc_rejected(self):
        with pytest.raises(ValueError):
            dev.input_impedance(dev.AfeParams(), 0.0)
        with pytest.raises(ValueError):
            dev.input_impedance(dev.AfeParams(), -1.0)


class TestElectrodePotential:
    def test_ph7_gives_e0(self):
        p = dev.ElectrodeParams(e0_mv=12.5, drift_mv_per_min=0.0, noise_sigma_mv=0.0)
        assert dev.electrode_potential(p, make_state(7.0)) == 12.5

    def test_slope_term(self):
        p = dev.ElectrodeParams(
            e0_mv=0.0, sensitivity_mv_per_ph=31.0, drift_mv_per_min=0.0, noise_sigma_mv=0.0
        )
        assert dev.electrode_potential(p, make_state(4.0)) == pytest.approx(93.0)

    def test_drift_term(self):
        # 0.005 pH/min * 31 mV/pH = 0.155 mV/min; 300 min -> 46.5 mV
        p = dev.ElectrodeParams(e0_mv=0.0, drift_mv_per_min=0.155, noise_sigma_mv=0.0)
        e = dev.electrode_potential(p, make_state(7.0, t_s=300 * 60))
        assert e == pytest.approx(46.5)

    def test_not_hydrated(self):
        p = dev.ElectrodeParams()
        with pytest.raises(dev.ElectrodeNotReadyError):
            dev.electrode_potential(p, make_state(hydrated=False))

    def test_noise_deterministic_for_seed(self):
        p = dev.ElectrodeParams(noise_sigma_mv=0.6, rng_seed=11)
        s = make_state(7.0, t_s=1.23)
        assert dev.electrode_potential(p, s) == dev.electrode_potential(p, s)

    def test_noise_varies_with_time_and_seed(self):
        p = dev.ElectrodeParams(noise_sigma_mv=0.6, rng_seed=11)
        e1 = dev.electrode_potential(p, make_state(7.0, t_s=1.0))
        e2 = dev.electrode_potential(p, make_state(7.0, t_s=2.0))
        assert e1 != e2
        p2 = dev.ElectrodeParams(noise_sigma_mv=0.6, rng_seed=12)
        assert dev.electrode_potential(p2, make_state(7.0, t_s=1.0)) != e1


class TestStep:
    def test_fixed_point(self):
        p = dev.ElectrodeParams()
        sched = dev.BathSchedule(segments=((0.0, 7.0),))
        s = make_state(7.0)
        dev.step(s, sched, p, 0.01)
        assert s.ph_surface == 7.0
        assert s.t_s == 0.01

    def test_settling_matches_first_order_oracle(self):
        # independent oracle: scan tau over t_settle = tau * ln(6 / 0.05)
        # and check 3.2 s is reached near the default tau
        target_settle = 3.2
        taus = np.linspace(0.5, 0.9, 4001)
        settles = taus * math.log(6.0 / 0.05)
        tau_star = taus[np.argmin(np.abs(settles - target_settle))]
        assert tau_star == pytest.approx(3.2 / math.log(120.0), abs=1e-4)
        assert dev.ElectrodeParams().tau_s == pytest.approx(tau_star, abs=0.01)

    def test_step_10_to_4_settles_at_3p2s(self):
        p = dev.ElectrodeParams(tau_s=0.67, noise_sigma_mv=0.0)
        sched = dev.BathSchedule(segments=((0.0, 4.0),))
        s = make_state(10.0)
        dt = 0.01
        while abs(s.ph_surface - 4.0) > 0.05:
            dev.step(s, sched, p, dt)
        # one-dt agreement with tau * ln(120)
        assert s.t_s == pytest.approx(0.67 * math.log(120.0), abs=dt)
        assert abs(s.t_s - 3.2) < 0.1

    def test_monotone_no_overshoot(self):
        p = dev.ElectrodeParams(tau_s=0.3)
        sched = dev.BathSchedule(segments=((0.0, 9.0),))
        s = make_state(4.0)
        prev = s.ph_surface
        for _ in range(5000):
            dev.step(s, sched, p, 0.01)
            assert prev <= s.ph_surface <= 9.0
            prev = s.ph_surface

    def test_large_dt_saturates(self):
        p = dev.ElectrodeParams(tau_s=0.67)
        sched = dev.BathSchedule(segments=((0.0, 4.0),))
        s = make_state(10.0)
        dev.step(s, sched, p, 1000.0)
        assert abs(s.ph_surface - 4.0) < 1e-9

    def test_nonpositive_dt(self):
        with pytest.raises(ValueError):
            dev.step(make_state(), dev.BathSchedule(), dev.ElectrodeParams(), 0.0)


class TestTempSensor:
    def test_anchor_point(self):
        assert dev.temp_sensor_mv(25.0) == 1050.0

    def test_35c(self):
        assert dev.temp_sensor_mv(35.0) == pytest.approx(998.1)

    def test_zero_slope(self):
        for t in [0.0, 25.0, 50.0]:
            assert dev.temp_sensor_mv(t, k_mv_per_c=0.0) == 1050.0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            dev.temp_sensor_mv(-11.0)
        with pytest.raises(ValueError):
            dev.temp_sensor_mv(61.0)

    def test_inverse(self):
        for t in [0.0, 13.7, 25.0, 37.0]:
            assert dev.temp_from_mv(dev.temp_sensor_mv(t)) == pytest.approx(t)


class TestAdcQuantize:
    def test_rails(self):
        afe = dev.AfeParams(bias_offset_mv=0.0)
        assert dev.adc_quantize(0.0, afe) == 0
        assert dev.adc_quantize(afe.adc_fullscale_mv, afe) == 4095

    def test_midscale_half_up(self):
        afe = dev.AfeParams(bias_offset_mv=0.0, adc_fullscale_mv=2048.0)
        # 1024/2048 * 4095 = 2047.5 -> 2048 with round-half-up
        assert dev.adc_quantize(1024.0, afe) == 2048

    def test_default_bias_maps_ph7_to_midscale(self):
        afe = dev.AfeParams()
        assert dev.adc_quantize(0.0, afe) == 2048

    def test_saturation_flag(self):
        afe = dev.AfeParams(bias_offset_mv=0.0)
        assert dev.adc_quantize_ex(-1.0, afe) == (0, True)
        assert dev.adc_quantize_ex(3000.0, afe) == (4095, True)
        assert dev.adc_quantize_ex(100.0, afe)[1] is False

    def test_monotone_and_surjective(self):
        afe = dev.AfeParams(bias_offset_mv=0.0)
        vs = np.linspace(-10.0, afe.adc_fullscale_mv + 10.0, 60000)
        counts = [dev.adc_quantize(v, afe) for v in vs]
        assert all(b >= a for a, b in zip(counts, counts[1:]))
        assert set(counts) == set(range(4096))

    def test_conversion_round_trip(self):
        afe = dev.AfeParams()
        for raw in [0, 1, 7, 2048, 4000, 4095]:
            assert dev.adc_quantize(dev.counts_to_mv(raw, afe), afe) == raw


class TestSchedule:
    def test_lookup(self):
        sched = dev.BathSchedule(segments=((0.0, 7.0), (10.0, 10.0), (20.0, 4.0)))
        assert sched.ph_at(0.0) == 7.0
        assert sched.ph_at(9.99) == 7.0
        assert sched.ph_at(10.0) == 10.0
        assert sched.ph_at(25.0) == 4.0

    def test_validation(self):
        with pytest.raises(ValueError):
            dev.BathSchedule(segments=((10.0, 7.0), (5.0, 4.0)))
        with pytest.raises(ValueError):
            dev.BathSchedule(segments=((0.0, 15.0),))
