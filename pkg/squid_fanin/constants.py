from __future__ import annotations

import math

from scipy.constants import physical_constants

# magnetic flux quantum h/2e, webers
PHI0: float = physical_constants['mag. flux quantum'][0]

# L_tot^sq * I_c / PHI0 for a beta_L = 1 SQUID near threshold (one junction at I_c, one at 0)
SQUID_TOTAL_INDUCTANCE_FACTOR = (3 * math.pi + 2) / (4 * math.pi)

# p/n = ACTIVITY_PREFACTOR * (1 - I_b/I_c)
ACTIVITY_PREFACTOR = (3 * math.pi + 2) / (2 * math.pi)

# half a flux quantum keeps the SQUID on its rising branch
DEFAULT_PHI_MAX = 0.5

DEFAULT_BETA_L = 1.0

# search range for the screening parameter that matches the lumped threshold estimate
MATCHED_BETA_L_MIN = 0.05
MATCHED_BETA_L_MAX = 4.0

# L^dc2 = alpha * L^dc3
DEFAULT_ALPHA = 0.05
DEFAULT_L_DC1 = 10e-12
DEFAULT_L_DC3 = 100e-12
DEFAULT_L_DI1 = 1e-9
DEFAULT_IC = 300e-6
DEFAULT_GAMMA = 1.0

# advisory only
FABRICATION_MIN_INDUCTANCE = 0.1e-12

# ceil(n*f - eps): ties at exact threshold count as reached
REQUIRED_INPUTS_EPS = 1e-9

# relative tolerance when checking a design against the monotonicity constraint
CONSTRAINT_RTOL = 1e-9
ROUND_TRIP_RTOL = 1e-12

CSV_SIGNIFICANT_DIGITS = 12

TOOLKIT_NAME = 'squid-fanin'
TOOLKIT_VERSION = '0.1.0'
