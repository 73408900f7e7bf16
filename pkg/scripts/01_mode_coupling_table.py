"""Normal modes and coupling matrices at equal densities.

Walks through the three parameter families and prints what the
nonlinear-fluctuating-hydrodynamics algebra predicts for each mode.
"""
import numpy as np

from abcflux import ModelParams, coupling_report, normal_mode_spec, theorem_coefficients
from abcflux.mode_coupling import fibonacci_exponents

np.set_printoptions(precision=4, suppress=True)

families = {
    "I": ModelParams(N=1024, gamma=0.5, E_A=2.0, E_B=2.0, E_C=0.0),
    "II": ModelParams(N=1024, gamma=0.5, E_A=2.0, E_B=0.0, E_C=0.0),
    "III": ModelParams(N=1024, gamma=0.5, E_A=1.0, E_B=2.5, E_C=0.0),
}

for tag, params in families.items():
    rep = coupling_report(params)
    print(f"--- case {tag}: E = {params.strengths}")
    print("Jacobian (without N^-gamma):")
    print(rep.J)
    print("characteristic velocities:", rep.v_plus, rep.v_minus)
    print("G1 =\n", rep.G1)
    print("G2 =\n", rep.G2)
    print("classes:", rep.class_plus, rep.class_minus)

    plus, minus = normal_mode_spec(tag, params)
    lp, lm, s2p, s2m = theorem_coefficients(tag, params)
    print(f"fields: Z+ = {plus.D1:g} Y^A + {plus.D2:.4g} Y^B,  Z- = {minus.D1:g} Y^A + {minus.D2:.4g} Y^B")
    print(f"limit coefficients: lambda = ({lp:.4g}, {lm:.4g}), sigma2 = ({s2p:.4g}, {s2m:.4g})")
    print()

# Above gamma = 1/2 the nonlinearity drops out of the limit
print("case I at gamma = 0.75:", theorem_coefficients("I", families["I"], gamma=0.75))

# Modes coupled only through each other's self-terms form the Fibonacci family of exponents
print("Fibonacci exponents:", [str(z) for z in fibonacci_exponents(7)])
