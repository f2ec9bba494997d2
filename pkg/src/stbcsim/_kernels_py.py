"""Pure-numpy fallback for the hot decode kernels.

Semantics match the compiled extension exactly: for each trial, return the
first candidate index attaining the minimum residual metric (ties go to the
lowest index, i.e. the lexicographically smallest bit pattern given the
candidate enumeration order used throughout the package).
"""

import numpy as np

BACKEND_NAME = "python"

# Cap on the (trials x candidates) complex workspace per chunk.
_CHUNK_ELEMS = 2_000_000


def _block_metrics(y, h, cands, out):
    """Add ||y - C_k h||^2 to out[:, k] for every trial/candidate pair."""
    n = y.shape[0]
    k, t, _ = cands.shape
    step = max(1, _CHUNK_ELEMS // max(1, k * t))
    for lo in range(0, n, step):
        sl = slice(lo, min(lo + step, n))
        v = np.einsum("ktm,nm->nkt", cands, h[sl], optimize=True)
        r = y[sl, None, :] - v
        out[sl] += np.sum(r.real**2 + r.imag**2, axis=2)
    return out


def scan_pair_blocks(y1, h1, c1, y2, h2, c2):
    """Argmin of the two-block residual metric over a candidate codebook.

    y1, y2: (n, T) observations; h1, h2: (n, M) fading; c1, c2: (K, T, M)
    scaled candidate sub-codewords.  Returns (idx (n,) int64, metric (n,)).
    """
    n, k = y1.shape[0], c1.shape[0]
    metrics = np.zeros((n, k))
    _block_metrics(y1, h1, c1, metrics)
    _block_metrics(y2, h2, c2, metrics)
    idx = np.argmin(metrics, axis=1)
    return idx.astype(np.int64), metrics[np.arange(n), idx]


def scan_single_block(y, h, cands):
    """Single-block variant for quasi-static baseline codes."""
    n, k = y.shape[0], cands.shape[0]
    metrics = np.zeros((n, k))
    _block_metrics(y, h, cands, metrics)
    idx = np.argmin(metrics, axis=1)
    return idx.astype(np.int64), metrics[np.arange(n), idx]
