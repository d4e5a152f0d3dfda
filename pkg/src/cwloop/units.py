"""Unit conversion constants used throughout the loop models.

All temperatures are degrees Fahrenheit, loads in tons of refrigeration,
electric power in kW, and water flow in gpm. These two constants are the
only conversions the energy balance needs; keep them here so every module
agrees on the same numbers.
"""

# One ton of refrigeration expressed as electric-equivalent thermal power.
KW_PER_TON = 3.517

# Standard water-side relation: Q[BTU/hr] = 500 * gpm * deltaT[degF].
WATER_SIDE_BTU_FACTOR = 500.0

# BTU/hr in one ton of refrigeration.
BTU_HR_PER_TON = 12000.0


def tons_to_kw(tons: float) -> float:
    return tons * KW_PER_TON


def kw_to_tons(kw: float) -> float:
    return kw / KW_PER_TON


def water_delta_t(q_tons: float, flow_gpm: float) -> float:
    """Temperature rise of a water stream absorbing ``q_tons`` at ``flow_gpm``."""
    return q_tons * BTU_HR_PER_TON / (WATER_SIDE_BTU_FACTOR * flow_gpm)
