"""Print <B>(T) and the calibrated absolute scale; quick look at the bath numbers."""
import numpy as np

from twophoton_qd.phonons import PhononBathParams, default_g1_absolute, displacement_average, get_kernels

print(f"g1_absolute = {default_g1_absolute():.9f} ps^-1")
for t in (0.0, 5.0, 10.0, 20.0, 30.0):
    print(f"T = {t:5.1f} K   <B> = {displacement_average(PhononBathParams(temperature=t)):.6f}")

k = get_kernels(PhononBathParams(temperature=5.0))
w = np.array([-10.0, -5.0, 0.0, 5.0, 10.0])
for wi, kg, ku in zip(w, k.half_fourier("g", w), k.half_fourier("u", w)):
    print(f"omega = {wi:6.1f}   K_g = {kg:.6e}   K_u = {ku:.6e}")
