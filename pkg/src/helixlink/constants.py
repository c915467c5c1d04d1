"""Physical constants and unit conversions shared across the simulator."""

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT  # m/s, exact

G0 = 9.80665  # standard gravity, m/s^2
MPH_TO_MPS = 0.44704  # exact by definition of the international mile

F0_HZ = 2.4e9
CARRIERS_HZ = (9.15e8, 2.4e9)


def mph_to_mps(mph):
    return mph * MPH_TO_MPS


def mps_to_mph(mps):
    return mps / MPH_TO_MPS


def db_to_lin(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def lin_to_db(lin):
    return 10.0 * np.log10(lin)
