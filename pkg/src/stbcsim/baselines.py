"""Classical rate-1 reference codes simulated over quasi-static fading.

These are the published designs the two-block codes are compared against:
the 2-antenna orthogonal code, the 4-antenna quasi-orthogonal layout, and
its rotated full-diversity variants (rotation e^(j*pi/4) on symbols 3 and 4,
with a 3-antenna version obtained by dropping the last column).  Each
baseline spans T slots of a single fading realization, in contrast to the
two independent blocks the proposed codes ride on; the sweep harness labels
that channel-assumption difference in its output metadata.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .codebook import _layout4, alamouti_block

BASELINE_THETA = math.pi / 4
_ROTATED_PAIR = (2, 3)  # symbols 3 and 4 of the 4-symbol block


@dataclass(frozen=True)
class BaselineCode:
    label: str
    slots: int
    antennas: int
    symbols_per_block: int
    rotated: bool

    @property
    def rate(self):
        return self.symbols_per_block / self.slots


BASELINES = {
    "alamouti2": BaselineCode("alamouti2", 2, 2, 2, rotated=False),
    "jafarkhani4": BaselineCode("jafarkhani4", 4, 4, 4, rotated=False),
    "qostbc_rot4": BaselineCode("qostbc_rot4", 4, 4, 4, rotated=True),
    "qostbc_rot3": BaselineCode("qostbc_rot3", 4, 3, 4, rotated=True),
}


def get_baseline(label):
    try:
        return BASELINES[label]
    except KeyError:
        raise KeyError(
            f"unknown baseline {label!r}; available: {', '.join(sorted(BASELINES))}"
        ) from None


def rotate_block_symbols(s, theta):
    """Rotation rule of the rotated baselines: symbols 3 and 4 by e^(j*theta)."""
    s = np.asarray(s, dtype=complex)
    out = s.copy()
    out[..., _ROTATED_PAIR] *= np.exp(1j * theta)
    return out


def encode_baseline(code, s, theta=BASELINE_THETA):
    """Codeword matrix for one block of symbols; accepts (..., k) batches.

    Rotated variants expect pre-rotation symbols and apply the rotation here.
    """
    s = np.asarray(s, dtype=complex)
    if s.shape[-1] != code.symbols_per_block:
        raise ValueError(
            f"{code.label} takes {code.symbols_per_block} symbols per block, "
            f"got shape {s.shape}"
        )
    if code.rotated:
        s = rotate_block_symbols(s, theta)
    if code.label == "alamouti2":
        if s.ndim == 1:
            return alamouti_block(s[0], s[1])
        c = np.conj
        rows = [[s[..., 0], s[..., 1]], [-c(s[..., 1]), c(s[..., 0])]]
        return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)
    full = _layout4(s[..., 0], s[..., 1], s[..., 2], s[..., 3])
    return full[..., : code.antennas]


@dataclass
class BaselineDecision:
    indices: np.ndarray  # (symbols_per_block,) alphabet index per symbol
    symbols: np.ndarray = field(repr=False)  # pre-rotation alphabet members
    metric: float
    candidates_evaluated: int


_PAIR_CACHE = {}

# like the two-block code, the 4x4 layout decouples into (s1, s4) and (s2, s3)
PAIR_GROUPS = ((0, 3), (1, 2))


def _pair_candidates(code, spec, theta, pair):
    """Candidate codewords with only one symbol pair active (others zero)."""
    key = (code.label, spec.label, float(theta), pair)
    hit = _PAIR_CACHE.get(key)
    if hit is not None:
        return hit
    m = spec.size
    idx = np.indices((m, m)).reshape(2, -1).T
    sym = np.zeros((len(idx), 4), dtype=complex)
    for col, pos in enumerate(pair):
        pts = spec.points
        if code.rotated and pos in _ROTATED_PAIR:
            pts = pts * np.exp(1j * theta)
        sym[:, pos] = pts[idx[:, col]]
    plain = BaselineCode(code.label, code.slots, code.antennas,
                         code.symbols_per_block, rotated=False)
    cands = encode_baseline(plain, sym)  # rotation already applied above
    out = (np.ascontiguousarray(cands), idx)
    _PAIR_CACHE[key] = out
    return out


def _decode_alamouti(y, h, spec):
    """Orthogonal-code ML via linear combining and per-symbol slicing."""
    z1 = np.conj(h[0]) * y[0] + h[1] * np.conj(y[1])
    z2 = np.conj(h[1]) * y[0] - h[0] * np.conj(y[1])
    gain = np.abs(h[0]) ** 2 + np.abs(h[1]) ** 2
    idx = np.array(
        [np.argmin(np.abs(z / gain - spec.points)) for z in (z1, z2)],
        dtype=np.int64,
    )
    return idx


def decode_baseline(code, y, h, spec, theta=BASELINE_THETA):
    """Exact ML decision for a baseline codeword over quasi-static fading.

    The 4x4 quasi-orthogonal layouts are searched pairwise, (s1, s4) and
    (s2, s3), m^2 candidates each; exactness against the full m^4 search is
    covered by tests.  Returned symbols are pre-rotation alphabet members.
    """
    y = np.asarray(y, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if y.shape != (code.slots,) or h.shape != (code.antennas,):
        raise ValueError(
            f"expected y ({code.slots},) and h ({code.antennas},), "
            f"got {y.shape} and {h.shape}"
        )
    if code.label == "alamouti2":
        idx = _decode_alamouti(y, h, spec)
        symbols = spec.points[idx]
        cw = encode_baseline(code, symbols, theta)
        metric = float(np.sum(np.abs(y - cw @ h) ** 2))
        return BaselineDecision(indices=idx, symbols=symbols, metric=metric,
                                candidates_evaluated=2 * spec.size)
    indices = np.empty(4, dtype=np.int64)
    total = 0
    for pair in PAIR_GROUPS:
        cands, idx_tuples = _pair_candidates(code, spec, theta, pair)
        best, _ = kernels.scan_single_block(y[None], h[None], cands)
        indices[list(pair)] = idx_tuples[best[0]]
        total += len(idx_tuples)
    symbols = spec.points[indices]
    cw = encode_baseline(code, symbols, theta)
    metric = float(np.sum(np.abs(y - cw @ h) ** 2))
    return BaselineDecision(indices=indices, symbols=symbols, metric=metric,
                            candidates_evaluated=total)


def decode_baseline_exhaustive(code, y, h, spec, theta=BASELINE_THETA):
    """Reference m^symbols search used to validate the pairwise decoder."""
    m = spec.size
    k = code.symbols_per_block
    idx = np.indices((m,) * k).reshape(k, -1).T
    sym = spec.points[idx]
    cands = np.ascontiguousarray(encode_baseline(code, sym, theta))
    best, met = kernels.scan_single_block(
        np.asarray(y, complex)[None], np.asarray(h, complex)[None], cands
    )
    indices = idx[best[0]].astype(np.int64)
    return BaselineDecision(indices=indices, symbols=spec.points[indices],
                            metric=float(met[0]), candidates_evaluated=len(idx))
