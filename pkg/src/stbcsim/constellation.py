"""Modulation alphabets: Gray-labelled, unit-average-energy constellations.

Symbol indices double as bit labels: index ``k`` of an ``m``-point alphabet
stands for the ``log2(m)`` bits of ``k`` written MSB first.  For square QAM
the first half of the bits selects the in-phase level and the second half the
quadrature level, each through a binary-reflected Gray code, so grid
neighbours always differ in exactly one bit.
"""

from dataclasses import dataclass, field

import numpy as np

# Symbol positions (0-based) that the code construction rotates: S3, S4, S7, S8.
ROTATED_POSITIONS = (2, 3, 6, 7)

# Acceptable distance between a "clean" symbol and its alphabet point.
_DEMAP_TOL = 1e-9


@dataclass(frozen=True)
class ConstellationSpec:
    """A finite complex alphabet with an implicit Gray bit labelling."""

    label: str
    points: np.ndarray = field(repr=False)
    bits_per_symbol: int

    @property
    def size(self):
        return 1 << self.bits_per_symbol


def _gray_decode(g):
    """Position on the amplitude axis encoded by Gray pattern ``g``."""
    p = 0
    while g:
        p ^= g
        g >>= 1
    return p


def _axis_levels(n_bits):
    """Amplitude per axis bit-pattern, descending from +(L-1) in steps of 2."""
    size = 1 << n_bits
    levels = np.empty(size)
    for pattern in range(size):
        levels[pattern] = (size - 1) - 2 * _gray_decode(pattern)
    return levels


def _square_qam(label, bits_per_symbol):
    if bits_per_symbol % 2:
        raise ValueError(f"square QAM needs an even bit count, got {bits_per_symbol}")
    half = bits_per_symbol // 2
    axis = _axis_levels(half)
    size = 1 << bits_per_symbol
    points = np.empty(size, dtype=complex)
    for k in range(size):
        i_bits = k >> half
        q_bits = k & ((1 << half) - 1)
        points[k] = axis[i_bits] + 1j * axis[q_bits]
    points /= np.sqrt(np.mean(np.abs(points) ** 2))
    return ConstellationSpec(label, points, bits_per_symbol)


_REGISTRY = {
    "bpsk": ConstellationSpec("bpsk", np.array([1.0 + 0j, -1.0 + 0j]), 1),
    "qam4": _square_qam("qam4", 2),
    "qam16": _square_qam("qam16", 4),
}


def available_labels():
    return sorted(_REGISTRY)


def get_constellation(label):
    try:
        return _REGISTRY[label]
    except KeyError:
        raise KeyError(
            f"unknown constellation {label!r}; available: {', '.join(available_labels())}"
        ) from None


def bits_to_indices(bits, spec):
    """Pack a flat 0/1 sequence into symbol indices, MSB first per group."""
    bits = np.asarray(bits, dtype=np.int64)
    bps = spec.bits_per_symbol
    if bits.ndim != 1 or bits.size % bps:
        raise ValueError(
            f"bit count {bits.size} is not a multiple of bits_per_symbol={bps}"
        )
    groups = bits.reshape(-1, bps)
    weights = 1 << np.arange(bps - 1, -1, -1)
    return groups @ weights


def indices_to_bits(indices, spec):
    """Inverse of :func:`bits_to_indices`; accepts any index array shape."""
    indices = np.asarray(indices, dtype=np.int64)
    bps = spec.bits_per_symbol
    shifts = np.arange(bps - 1, -1, -1)
    bits = (indices[..., None] >> shifts) & 1
    return bits.reshape(*indices.shape[:-1], -1) if indices.ndim else bits


def map_bits(bits, spec):
    """Map a bit sequence onto constellation points."""
    return spec.points[bits_to_indices(bits, spec)]


def demap_symbols(symbols, spec):
    """Recover bits from exact alphabet members (decoder output, not noisy samples)."""
    symbols = np.asarray(symbols, dtype=complex).ravel()
    dist = np.abs(symbols[:, None] - spec.points[None, :])
    idx = np.argmin(dist, axis=1)
    worst = dist[np.arange(len(symbols)), idx]
    if symbols.size and worst.max() > _DEMAP_TOL:
        bad = int(np.argmax(worst))
        raise ValueError(
            f"symbol {symbols[bad]} is {worst[bad]:.3g} away from the nearest "
            f"{spec.label} point; demap expects exact alphabet members"
        )
    return indices_to_bits(idx.reshape(-1, 1), spec).ravel()


def rotate_symbols(s, theta):
    """Rotate entries S3, S4, S7, S8 of an 8-symbol vector by ``e^(j*theta)``."""
    s = np.asarray(s, dtype=complex)
    if s.shape[-1] != 8:
        raise ValueError(f"expected 8 symbols per vector, got shape {s.shape}")
    out = s.copy()
    out[..., ROTATED_POSITIONS] *= np.exp(1j * theta)
    return out


def rotated_points(spec, theta):
    """The alphabet as seen at a rotated symbol position."""
    return spec.points * np.exp(1j * theta)


def bit_distance_table(spec):
    """(m, m) table of pairwise Hamming distances between index bit labels."""
    m = spec.size
    xor = np.bitwise_xor.outer(np.arange(m), np.arange(m))
    table = np.zeros((m, m), dtype=np.int64)
    while xor.any():
        table += xor & 1
        xor >>= 1
    return table
