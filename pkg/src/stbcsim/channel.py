"""Rayleigh block-fading channel, AWGN observation model, and SNR calibration.

The proposed codes see two independent fading blocks per codeword period
(fresh coefficients for each 4-slot sub-codeword); the classical baselines
see one quasi-static realization spanning their whole codeword.  All draws
come from counter-based Philox substreams so that any (seed, sweep point,
batch) triple regenerates identical values regardless of execution order or
worker count.
"""

from dataclasses import dataclass, field

import numpy as np

_KEY_MASK = (1 << 64) - 1


def substream(master_seed, point_index=0, batch_index=0):
    """Independent Generator for one (sweep point, batch) cell of a run."""
    bg = np.random.Philox(
        key=np.uint64(master_seed & _KEY_MASK),
        counter=np.array([0, 0, batch_index, point_index], dtype=np.uint64),
    )
    return np.random.Generator(bg)


def complex_gaussian(rng, shape, variance=1.0):
    """Circularly-symmetric complex Gaussian draws with the given variance."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def draw_channel(rng, mt):
    """Stacked fading for the two blocks: h[:mt] block 1, h[mt:] block 2."""
    if mt not in (2, 3, 4):
        raise ValueError(f"unsupported antenna count {mt}")
    return complex_gaussian(rng, 2 * mt)


def draw_quasi_static(rng, mt):
    """One fading realization reused across a whole baseline codeword."""
    if mt not in (2, 3, 4):
        raise ValueError(f"unsupported antenna count {mt}")
    return complex_gaussian(rng, mt)


@dataclass(frozen=True)
class Observation:
    y: np.ndarray = field(repr=False)
    n0: float


def transmit(codeword, h, n0, rng=None):
    """Observe y = C h + n with noise of variance n0 per complex dimension."""
    m = codeword.m if hasattr(codeword, "m") else np.asarray(codeword)
    h = np.asarray(h, dtype=complex)
    if h.shape != (m.shape[1],):
        raise ValueError(f"channel shape {h.shape} does not match codeword width {m.shape[1]}")
    if n0 < 0:
        raise ValueError("noise density must be non-negative")
    y = m @ h
    if n0 > 0:
        if rng is None:
            raise ValueError("an rng is required when n0 > 0")
        y = y + complex_gaussian(rng, m.shape[0], n0)
    return Observation(y=y, n0=float(n0))


def snr_to_n0(snr_db, spec, mt, mode="es"):
    """Noise density for a per-receive-antenna SNR axis.

    Transmitted entries have unit average energy, so the received signal
    power per slot is mt and n0 = mt * 10^(-snr/10) puts the received SNR at
    the axis value.  In 'eb' mode the axis is energy per bit: with one symbol
    per channel use this divides n0 by bits_per_symbol.
    """
    n0 = mt * 10.0 ** (-snr_db / 10.0)
    if mode == "eb":
        n0 /= spec.bits_per_symbol
    elif mode != "es":
        raise ValueError(f"unknown snr mode {mode!r}")
    return n0
