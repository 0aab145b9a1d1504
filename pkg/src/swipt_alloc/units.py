"""dB / dBm / linear conversions. All internal arithmetic is in linear watts."""

import numpy as np


def dbm_to_watt(p_dbm: float) -> float:
    """P_watt = 10^((P_dBm - 30) / 10)."""
    return float(10.0 ** ((p_dbm - 30.0) / 10.0))


def watt_to_dbm(p_watt: float) -> float:
    if p_watt <= 0:
        raise ValueError("power must be positive to express in dBm")
    return float(10.0 * np.log10(p_watt) + 30.0)


def db_to_linear(x_db: float) -> float:
    return float(10.0 ** (x_db / 10.0))


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError("value must be positive to express in dB")
    return float(10.0 * np.log10(x))
