"""
Perturbed states and a channel velocity band
============================================

The eddy-viscosity stress of a channel field is pushed toward each corner of
the barycentric triangle and blended back with a small moderation factor.
Each perturbed shear stress profile is fed through the channel momentum
balance, and the spread of the solutions gives the band.
"""
import numpy as np

from anisouq.channel import ChannelCase, propagate
from anisouq.perturb import perturb_field, sweep_specs
from anisouq.synthetic import channel_like_field

re_tau = 550
y = np.linspace(0.0, 1.0, 101)
field = channel_like_field(re_tau, y=y)
case = ChannelCase(y, dpdx=-1.0, mu=1.0 / re_tau, rho=1.0, tau12=field.boussinesq_tau()[:, 0, 1])

# %%
profiles = {}
for label, spec in sweep_specs(delta_b=0.5, moderation_f=0.05).items():
    out = perturb_field(field, spec)
    profiles[label] = (y, out.tau_star[:, 0, 1])
    gain = np.mean(out.pk_after) / np.mean(out.pk_before)
    print(f"{label:7s} mean production ratio {gain:6.3f}")

# %%
cols = propagate(case, profiles)
mid = np.searchsorted(y, 0.5)
print(f"\nU at y = {y[mid]:.2f}: baseline {cols['U_baseline'][mid]:.3f}, "
      f"band [{cols['band_min'][mid]:.3f}, {cols['band_max'][mid]:.3f}]")
print(f"centreline band width {cols['band_max'][-1] - cols['band_min'][-1]:.3f}")
