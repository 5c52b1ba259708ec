"""dB / dBm / watt conversions used throughout the package."""

import numpy as np


def _out(value, ref):
    return float(value) if np.ndim(ref) == 0 else value


def db_to_lin(db):
    return _out(np.power(10.0, np.asarray(db, dtype=float) / 10.0), db)


def lin_to_db(x):
    return _out(10.0 * np.log10(np.asarray(x, dtype=float)), x)


def dbm_to_w(dbm):
    return _out(np.power(10.0, (np.asarray(dbm, dtype=float) - 30.0) / 10.0), dbm)


def w_to_dbm(w):
    return _out(10.0 * np.log10(np.asarray(w, dtype=float)) + 30.0, w)
