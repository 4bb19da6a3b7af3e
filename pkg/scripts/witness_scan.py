"""Entanglement witness along Delta_1 for the two-photon resonant coherent pump.

Prints the variance sum at the fixed phases and its minimum over the phase sum.
"""
import argparse
import warnings

import numpy as np

from twophoton_qd.model import CoherentPump, SystemParams, build_liouvillian
from twophoton_qd.observables import dgcz_phase_scan, dgcz_variance
from twophoton_qd.phonons import PhononBathParams
from twophoton_qd.steady import solve_steady

ap = argparse.ArgumentParser()
ap.add_argument("--omega", type=float, default=0.5)
ap.add_argument("--temperature", type=float, default=5.0)
ap.add_argument("--points", type=int, default=17)
args = ap.parse_args()

warnings.simplefilter("ignore", RuntimeWarning)
print("Delta_1  variance_sum  variance_min")
for d1 in np.linspace(3.0, 7.0, args.points):
    p = SystemParams(Delta_1=float(d1), pump=CoherentPump(args.omega, args.omega, 7.0),
                     bath=PhononBathParams(temperature=args.temperature))
    rho = solve_steady(build_liouvillian(p)).rho
    print(f"{d1:7.3f}  {dgcz_variance(rho).variance_sum:12.6f}  {dgcz_phase_scan(rho)[1]:12.6f}")
