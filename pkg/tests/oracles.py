"""Independent reference implementations used as test oracles.

Everything here goes through mpmath at 40 digits and shares no code
with the package.
"""

import mpmath as mp

mp.mp.dps = 40

PLANCK = mp.mpf("6.62607015e-34")
BOLTZMANN = mp.mpf("1.380649e-23")
C0 = mp.mpf(299792458)


def cpw_z0(w, g, er=10.0):
    k = mp.mpf(w) / (mp.mpf(w) + 2 * mp.mpf(g))
    eps = (1 + mp.mpf(er)) / 2
    return float(30 * mp.pi / mp.sqrt(eps) * mp.ellipk(1 - k**2) / mp.ellipk(k**2))


def ellipk_modulus(k):
    return float(mp.ellipk(mp.mpf(k) ** 2))


def equal_split_theta(r):
    return mp.atan(mp.sqrt(mp.mpf(r)))


def shortening(r):
    return float(1 - 2 * equal_split_theta(r) / (mp.pi / 2))


def first_spurious_ratio(r):
    a = equal_split_theta(r)
    return float((mp.pi - a) / a)


def photon_number(p_dbm, q_internal, q_coupling, f_r, harmonic=1):
    qi, qc = mp.mpf(q_internal), mp.mpf(q_coupling)
    ql = 1 / (1 / qi + 1 / qc)
    p = mp.mpf("1e-3") * mp.mpf(10) ** (mp.mpf(p_dbm) / 10)
    return float(p * ql * (1 - ql / qi) / (harmonic * mp.pi * PLANCK * mp.mpf(f_r) ** 2))


def single_photon_dbm(q_internal, q_coupling, f_r):
    qi, qc = mp.mpf(q_internal), mp.mpf(q_coupling)
    ql = 1 / (1 / qi + 1 / qc)
    p = mp.pi * PLANCK * mp.mpf(f_r) ** 2 / (ql * (1 - ql / qi))
    return float(10 * mp.log10(p / mp.mpf("1e-3")))


def tls_qi(n, f_delta=8e-6, n_c=10.0, beta=0.5, q_other=1e6, temperature=0.010, f=6e9):
    thermal = mp.tanh(PLANCK * mp.mpf(f) / (2 * BOLTZMANN * mp.mpf(temperature)))
    inv = mp.mpf(f_delta) * thermal / (1 + mp.mpf(n) / mp.mpf(n_c)) ** mp.mpf(beta)
    return float(1 / (inv + 1 / mp.mpf(q_other)))


def section_length_um(theta, f, eps_eff=5.5):
    return float(mp.mpf(theta) * C0 / mp.sqrt(mp.mpf(eps_eff)) / (2 * mp.pi * mp.mpf(f)) * 10**6)


def cap_correction_um(cap_ff, z0, f, eps_eff=5.5):
    w = 2 * mp.pi * mp.mpf(f)
    return section_length_um(mp.atan(w * mp.mpf(cap_ff) * mp.mpf("1e-15") * mp.mpf(z0)), f, eps_eff)


def notch_s21(f, f_r, q_loaded, q_coupling_mag, phi):
    """Ideal notch response without background, complex128 via mpmath."""
    x = 1 + 2j * mp.mpf(q_loaded) * (mp.mpf(f) - mp.mpf(f_r)) / mp.mpf(f_r)
    return complex(1 - (mp.mpf(q_loaded) / mp.mpf(q_coupling_mag)) * mp.expj(mp.mpf(phi)) / x)
