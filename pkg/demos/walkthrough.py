"""Tour of the toolkit on the porous-Fisher and classical KPP problems.

Run from the repository root::

    python3 demos/walkthrough.py
"""

import math

import numpy as np

from kppwaves.asymptotics import classify_spec
from kppwaves.config import load_config
from kppwaves.pde import shape_error, simulate
from kppwaves.phase import critical_speed, solve_phase
from kppwaves.problem import composite, compute_mu
from kppwaves.profile import reconstruct_profile, residual_integral_form

HERE = __file__.rsplit("/", 1)[0]


def porous_fisher():
    spec = load_config(f"{HERE}/porous_fisher.ini")
    f = composite(spec)
    print("porous-Fisher:", classify_spec(spec).as_dict())
    speed = critical_speed(f)
    print(f"  mu = {compute_mu(f):.6f}, c* = {speed.c_star:.7f} (exact 1/sqrt(2) = {1 / math.sqrt(2):.7f})")

    # at the exact speed the phase curve is y = r**2 (1 - r)**2 / 2
    ps = solve_phase(f, 1 / math.sqrt(2))
    exact = 0.5 * ps.grid**2 * (1 - ps.grid) ** 2
    print(f"  phase curve sup error: {np.max(np.abs(ps.y - exact)):.2e}")

    # the profile is built just above c*, where the solution is separated from the saddle
    wp = reconstruct_profile(spec, solve_phase(f, speed.bracket[1]))
    res_def, res_speed = residual_integral_form(spec, wp)
    print(f"  front edge z1 = {wp.z1:.8f} (exact sqrt(2) ln 2 = {math.sqrt(2) * math.log(2):.8f})")
    print(f"  residuals: integral form {res_def:.1e}, speed identity {res_speed:.1e}")
    return spec, wp


def kpp():
    spec = load_config(f"{HERE}/kpp.ini")
    speed = critical_speed(composite(spec))
    print(f"classical KPP: c* = {speed.c_star:.6f} (expected 2)")


def pde_check(spec, wp, t_max=100.0):
    run = simulate(spec, t_max=t_max, h=0.1)
    print(f"PDE run to t = {t_max:g}: measured speed {run.c_measured:.4f} +- {run.stderr:.1e}, "
          f"shape error against the profile {shape_error(run.state, wp):.3f}")


if __name__ == "__main__":
    spec, wp = porous_fisher()
    kpp()
    pde_check(spec, wp)
