"""Smoke test for the wrp extension module: run after `pip install`."""

import json
import math

import wrp


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b, tol)


model = wrp.LevyModel.example()
close(model.mean_rate(), -1.0, 1e-12)
assert model.psi(0j) == 0
assert abs(model.psi(complex(1.0, 3.0)) - model.psi(complex(1.0, -3.0)).conjugate()) < 1e-12
assert wrp.LevyModel.from_json(model.to_json()).to_json() == model.to_json()

put = wrp.Payoff.put(-0.2)
close(put.h(-1.0), 0.8, 1e-15)
assert put.h(0.5) == 0.0

# Brownian reflection: g(x) = h(-x).
bm = wrp.LevyModel.brownian(0.0, 1.0)
image = wrp.symmetry_image(bm, put, [0.5, 1.0, 1.5], r=400.0, big_r=math.inf)
for x, g in zip(image.x_grid, image.g_values):
    close(g, put.h(-x), 1e-3)

image = wrp.symmetry_image(model, put, [0.25, 0.5, 1.0])
assert len(image) == 3 and image.max_error_bound() < 1.0
values, bounds = wrp.static_hedge(model, put, [-0.5, 0.0, 0.5])
close(values[0], put.h(-0.5), 1e-15)

p = wrp.joint_probability(model, -0.2, 0.1, 1.0)
assert 0.0 < p < wrp.cdf(model, 1.0, -0.2)
close(wrp.joint_probability(model, -0.2, 0.1, 1.0, rule="adaptive"), p, 1e-8)
surface = wrp.joint_surface(model, -0.2, [0.0, 0.1], [0.5, 1.0])
assert len(surface) == 2 and len(surface[0]) == 2

dens = wrp.density_slice(model, 1.0, [-2.0, -1.0, 0.0])
assert all(d > 0 for d in dens)

batch = wrp.simulate(model, 20_000, 200, 1.0, seed=7)
assert len(batch) == 20_000
assert all(m >= max(x, 0.0) for x, m in zip(batch.terminal, batch.running_max))
value, se = batch.estimate_joint(-0.2, 0.1)
assert abs(value - p) < 4 * se + 0.01, (value, se, p)
assert wrp.simulate(model, 2_000, 100, 1.0, seed=7).terminal == wrp.simulate(model, 2_000, 100, 1.0, seed=7).terminal

try:
    wrp.symmetry_image(model, wrp.Payoff.indicator(-0.2), [0.5])
except wrp.Error as e:
    assert "RequiresL1" in str(e)
else:
    raise AssertionError("indicator image should raise")

report = json.loads(wrp.run_verify("quick", 42))
assert report["pass"], report

print("wrp smoke test passed")
