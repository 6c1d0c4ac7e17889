"""
Faint-pulse photon statistics
=============================

A weak laser pulse carries a Poisson-distributed photon number. The mean
mu is the single most consequential knob in the whole system: raise it
and more pulses carry a photon (higher rate), but more pulses also carry
two or more photons, and every multiphoton pulse is a free copy of the
bit for an eavesdropper with a beamsplitter.
"""

import math

import numpy as np

from qkdsim import RandomSource

rand = RandomSource(2024)

for mu in (0.05, 0.1, 0.5, 1.0):
    counts = rand.split(f"mu={mu}").poisson(mu, 10**6)
    p0 = float((counts == 0).mean())
    p1 = float((counts == 1).mean())
    p_multi = float((counts >= 2).mean())
    # Fraction of *non-empty* pulses that an eavesdropper could split:
    # P(n >= 2 | n >= 1), the number that matters for the attack in demo 04.
    splittable = p_multi / (1.0 - p0)
    print(f"mu = {mu:4}:  P(0) = {p0:.4f}  P(1) = {p1:.4f}  "
          f"P(>=2) = {p_multi:.4f}  splittable share = {splittable:.4f}")

# Sanity against the closed form at the standard operating point.
mu = 0.1
print()
print("closed form at mu = 0.1:",
      f"P(0) = {math.exp(-mu):.4f}",
      f"P(1) = {mu * math.exp(-mu):.4f}",
      f"P(>=2) = {1 - (1 + mu) * math.exp(-mu):.4f}")

# The empirical mean and variance agree, as they must for Poisson draws.
counts = rand.split("moments").poisson(0.5, 10**6)
print(f"mu = 0.5 empirical mean / variance: "
      f"{counts.mean():.4f} / {counts.var():.4f}")
