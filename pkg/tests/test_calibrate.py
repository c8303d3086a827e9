import pytest

from cfaudit.channel import LinkConfig
from cfaudit.sim import PRESETS, CalibrationFailed, calibrate_preset
from cfaudit.sim.calibrate import (ACFA_OVERHEAD_TARGETS, CALIBRATION_FIXED, TOLERANCE_PP, Fixed,
                                   acfa_overhead)


@pytest.mark.parametrize("app", sorted(ACFA_OVERHEAD_TARGETS))
def test_frozen_presets_hit_targets(app):
    assert abs(acfa_overhead(PRESETS[app]) - ACFA_OVERHEAD_TARGETS[app]) <= TOLERANCE_PP
    assert PRESETS[app].total_branches == CALIBRATION_FIXED.total_branches == 768


def test_calibration_reproduces_frozen_preset():
    wl = calibrate_preset("ultra", ACFA_OVERHEAD_TARGETS["ultra"])
    assert wl == PRESETS["ultra"]


def test_fixed_point():
    wl = PRESETS["temp"]
    assert acfa_overhead(wl) == acfa_overhead(wl)


def test_target_out_of_domain():
    for bad in (0, -5, 200, 250):
        with pytest.raises(ValueError):
            calibrate_preset("x", bad)


def test_unreachable_target():
    # with the rate ceiling at 10 branches/s the log never fills, so 199% is out of reach
    fixed = Fixed(link=LinkConfig(baud=115200, rtt=0.0))
    with pytest.raises(CalibrationFailed):
        calibrate_preset("x", 199.0, fixed, rate_hi=10.0)
