"""Unit conventions.

Internally every frequency is an angular frequency in rad/us and every time is
in us.  Anything crossing the public boundary (configs, CSV, CLI) is a cyclic
frequency in MHz, converted with :func:`to_angular`.
"""

import math

import numpy as np

TWO_PI = 2.0 * math.pi

#: Electron gyromagnetic ratio, 28 MHz/mT expressed per microtesla.
GAMMA_E_MHZ_PER_UT = 0.028


def to_angular(f_mhz):
    """Cyclic MHz -> angular rad/us."""
    return TWO_PI * np.asarray(f_mhz, dtype=float) if np.ndim(f_mhz) else TWO_PI * float(f_mhz)


def to_cyclic(w_rad_per_us):
    """Angular rad/us -> cyclic MHz."""
    return np.asarray(w_rad_per_us, dtype=float) / TWO_PI if np.ndim(w_rad_per_us) else float(w_rad_per_us) / TWO_PI


def field_shift_mhz(b_ut):
    """Transition-frequency shift (MHz) of the m_s = +1 branch in a field of ``b_ut`` microtesla."""
    return GAMMA_E_MHZ_PER_UT * np.asarray(b_ut, dtype=float)
