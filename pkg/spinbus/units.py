"""
Physical constants and unit conversions.

Units used throughout: energies in GHz (h = 1), flux in Phi0, currents in nA,
inductances in pH, capacitances in fF.
"""

import numpy as np
import scipy.constants as pyc

H_PLANCK = pyc.h
E_CHARGE = pyc.e
PHI0 = pyc.physical_constants["mag. flux quantum"][0]
REDUCED_PHI0 = PHI0 / (2 * np.pi)

NANO = 1e-9
PICO = 1e-12
FEMTO = 1e-15
GIGA = 1e9


def joule_to_ghz(energy):
    return energy / H_PLANCK / GIGA


def ghz_to_joule(energy):
    return energy * H_PLANCK * GIGA


def charging_energy_ghz(c_ff):
    """E_C = e^2 / 2C in GHz."""
    return joule_to_ghz(E_CHARGE ** 2 / (2.0 * c_ff * FEMTO))


def inductive_energy_ghz(l_ph):
    """E_L = (Phi0 / 2 pi)^2 / L in GHz."""
    return joule_to_ghz(REDUCED_PHI0 ** 2 / (l_ph * PICO))


def josephson_energy_ghz(i_c_na):
    """E_J = I_c Phi0 / 2 pi in GHz."""
    return joule_to_ghz(i_c_na * NANO * REDUCED_PHI0)


def current_scale_na(l_ph):
    """Phi0 / (2 pi L) in nA: current per radian of loop phase."""
    return REDUCED_PHI0 / (l_ph * PICO) / NANO


def flux_energy_slope(i_p_na):
    """d(epsilon)/d(f_z) in GHz per Phi0 for a unit with persistent current I_p."""
    return 2.0 * i_p_na * NANO * PHI0 / H_PLANCK / GIGA
