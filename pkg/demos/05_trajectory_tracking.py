"""
Tracking a displacement trajectory
==================================

Run the bundled ``fig4_top`` scenario: a constant-radius sweep of the
displacement, measured through the full RF chain with the entangled bench
and again with the entanglement switched off. Averaging the edge records of
all repeats pins the start and stop points.
"""

import math

from eprtrack.scenario import load_scenario, run_scenario

sc = load_scenario("fig4_top")
print(f"{sc.name}: {sc.repeats} repeats of {sc.duration * 1e3:g} ms on the {sc.tier} tier")
result = run_scenario(sc)
s = result.summary

for label in ("start", "end"):
    ep = s.extra["endpoints"][label]
    (x, y), (sx, sy) = ep["estimate"], ep["standard_error"]
    tx, ty = ep["trajectory"]
    print(f"{label:>5}: ({x:+.3f} +- {sx:.3f}, {y:+.3f} +- {sy:.3f}), true ({tx:+.3f}, {ty:+.3f})")

ref = s.extra["reference"]
print(f"\nRMS residual with entanglement: {s.trajectory_rms[0]:.3f}, {s.trajectory_rms[1]:.3f}")
print(f"RMS residual without:           {ref['trajectory_rms'][0]:.3f}, {ref['trajectory_rms'][1]:.3f}")
print(f"ratio {ref['rms_ratio'][0]:.2f}, {ref['rms_ratio'][1]:.2f} (sqrt 10 = {math.sqrt(10):.2f})")
