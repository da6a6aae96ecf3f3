"""Shared generators for the fit round-trip tests."""

import numpy as np

from sirkit import kernels
from sirkit.cpw import LineParams
from sirkit.fitting import synthetic_notch_trace
from sirkit.network import FF, _line_mats, _shunt_mats


def random_notch_params(rng):
    return dict(
        f_r=rng.uniform(4e9, 8e9),
        q_internal=10 ** rng.uniform(np.log10(5e4), np.log10(2e6)),
        q_coupling_mag=rng.uniform(1e5, 5e5),
        phi=rng.uniform(-0.5, 0.5),
        delay=rng.uniform(0.0, 60e-9),
        amplitude=rng.uniform(0.05, 1.0),
        alpha=rng.uniform(-np.pi, np.pi),
    )


def random_notch_trace(seed, noise_snr_db=None):
    rng = np.random.default_rng(seed)
    params = random_notch_params(rng)
    trace = synthetic_notch_trace(**params, noise_snr_db=noise_snr_db,
                                  rng=rng if noise_snr_db is not None else None)
    return params, trace


def random_lossless_network(rng, f):
    """Random chain of lines, shunt capacitors and series inductors."""
    mats = []
    for _ in range(rng.integers(1, 8)):
        kind = rng.integers(3)
        if kind == 0:
            line = LineParams(5.5, rng.uniform(10.0, 150.0))
            mats.append(_line_mats(line, rng.uniform(1.0, 5000.0), f))
        elif kind == 1:
            mats.append(_shunt_mats(1j * 2 * np.pi * f * rng.uniform(0, 500) * FF))
        else:
            m = np.zeros((len(f), 2, 2), complex)
            m[:, 0, 0] = m[:, 1, 1] = 1.0
            m[:, 0, 1] = 1j * 2 * np.pi * f * rng.uniform(0, 2e-9)
            mats.append(m)
    return kernels.cascade(np.stack(mats))
