"""Runtime overhead and utilization gain of ACFA and CARAMEL on the four app presets.

Presets are calibrated to the ACFA overheads; CARAMEL numbers are then
measured with nothing else changed.

    python demos/overhead_table.py
"""

from cfaudit.sim import PRESETS, Mode
from cfaudit.sim.calibrate import (CALIBRATION_FIXED, CARAMEL2_GAIN_TARGETS, CARAMEL2_OVERHEAD_TARGETS,
                                   CARAMEL4_GAIN_TARGETS, CARAMEL4_OVERHEAD_TARGETS, mode_overhead)
from cfaudit.sim.metrics import compute_utilization_gain

cf = CALIBRATION_FIXED.cf_size
print(f"{'app':8} {'acfa':>7} {'c2':>7} {'(ref)':>7} {'c4':>7} {'(ref)':>7} "
      f"{'gain2':>7} {'(ref)':>7} {'gain4':>7} {'(ref)':>7}")
for app, wl in PRESETS.items():
    acfa, ma = mode_overhead(Mode.acfa(cf), wl)
    c2, m2 = mode_overhead(Mode.caramel(cf), wl)
    c4, m4 = mode_overhead(Mode.caramel(2 * cf), wl)
    g2, g4 = compute_utilization_gain(m2, ma), compute_utilization_gain(m4, ma)
    print(f"{app:8} {acfa:7.2f} {c2:7.2f} {CARAMEL2_OVERHEAD_TARGETS[app]:7.2f} {c4:7.2f} "
          f"{CARAMEL4_OVERHEAD_TARGETS[app]:7.2f} {g2:7.1f} {CARAMEL2_GAIN_TARGETS[app]:7.1f} "
          f"{g4:7.1f} {CARAMEL4_GAIN_TARGETS[app]:7.1f}")
