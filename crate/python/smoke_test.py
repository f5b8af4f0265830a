"""Smoke test for the photothermal extension module."""

import math

import photothermal as pt

assert "table1_bilayer" in pt.preset_names()

bi = pt.Scenario.preset("table1_bilayer")
traj = bi.run()
t63 = pt.response_time_63(traj.times, traj.values("liquid-contact"))["t63"]
print(f"bilayer t63 = {t63:.2f} s")
assert abs(t63 - 54.9) < 3.0

ts, tl = bi.steady_state()
print(f"bilayer steady = ({ts:.3f}, {tl:.3f}) K")
assert abs(ts - 329.03) < 0.01 and abs(tl - 329.32) < 0.01

single = pt.Scenario.preset("table1_single")
assert single.steady_state() == (single.steady_state()[0], None)
assert abs(single.steady_state()[0] - 308.625) < 1e-6

single.duration = 900.0
single.set_schedule([(0.0, 600.0, 1.0)])
run = single.run()
off = [i for i, t in enumerate(run.times) if t >= 600.0]
tau, r2 = pt.cooling_fit([run.times[i] for i in off], [run.theta_s[i] for i in off], 298.0)
print(f"cooling tau = {tau:.2f} s, r2 = {r2:.6f}")
assert abs(tau - 113.75) < 1.0

ratios = pt.cycle_degradation([51.7, 51.6, 50.7, 46.74])
assert math.isclose(ratios[3], 0.904, abs_tol=5e-4)
assert math.isclose(pt.illuminance_scale(100.0, 50.0), 0.5)
assert pt.radiative_exchange(400.0, 0.9, 300.0, 0.9, 1e-4) > 0.0

short = pt.Scenario.preset("table1_bilayer")
short.duration = 60.0
target = short.run()
short.set_param("alpha_L", 0.6)
fit = pt.calibrate(short, target.times, target.values(), [("alpha_L", 0.3, 1.0, 0.6)])
print(f"recovered alpha_L = {fit['alpha_L']:.4f}")
assert abs(fit["alpha_L"] - 0.83) < 0.005

try:
    pt.Scenario.preset("nope")
except ValueError:
    pass
else:
    raise AssertionError("unknown preset accepted")

unstable = pt.Scenario.preset("table1_bilayer")
unstable.dt = 0.5
try:
    unstable.run()
except RuntimeError:
    pass
else:
    raise AssertionError("unstable step accepted")

print("smoke test passed")
