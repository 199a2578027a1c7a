"""Physical constants used throughout."""

import math

import scipy.constants as sc

TWO_PI = 2.0 * math.pi
HBAR = sc.hbar
PHI0 = sc.physical_constants["mag. flux quantum"][0]  # Wb
PHI0_BAR = PHI0 / TWO_PI  # reduced flux quantum, Phi0 / 2 pi
