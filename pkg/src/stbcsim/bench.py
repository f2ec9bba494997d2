"""Throughput benchmark of the decode kernels: compiled extension vs numpy.

Times the separated half-search and the exhaustive BPSK scan on a
representative batch so the speedup of the compiled backend is visible.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import detection, kernels
from .channel import complex_gaussian, snr_to_n0
from .codebook import CODE_SCALE, get_encoder
from .constellation import get_constellation, rotate_symbols


@dataclass
class BenchResult:
    workload: str
    backend: str
    trials: int
    seconds: float

    @property
    def trials_per_second(self):
        return self.trials / self.seconds if self.seconds else float("inf")


def _make_workload(mod, trials, seed=1234):
    spec = get_constellation(mod)
    theta = math.pi / 4
    encode, mt = get_encoder("proposed4")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, spec.size, size=(trials, 8))
    sym = rotate_symbols(spec.points[idx], theta)
    c1, c2 = encode(sym)
    h = complex_gaussian(rng, (trials, 2 * mt))
    n0 = snr_to_n0(10.0, spec, mt)
    noise = complex_gaussian(rng, (trials, 8), n0)
    y1 = np.ascontiguousarray(CODE_SCALE * np.einsum("nij,nj->ni", c1, h[:, :mt]) + noise[:, :4])
    y2 = np.ascontiguousarray(CODE_SCALE * np.einsum("nij,nj->ni", c2, h[:, mt:]) + noise[:, 4:])
    cand_a = detection.candidate_set(spec, theta, "proposed4", "a")
    cand_b = detection.candidate_set(spec, theta, "proposed4", "b")
    return y1, y2, h[:, :mt], h[:, mt:], cand_a, cand_b


def run_benchmark(trials=4096, mod="qam4", repeats=3):
    """Run each backend on identical data; returns per-backend timings."""
    y1, y2, h1, h2, cand_a, cand_b = _make_workload(mod, trials)
    results = []
    reference = {}
    for name, module in sorted(kernels.available_backends().items()):
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            ia, _ = module.scan_pair_blocks(y1, h1, cand_a.c1, y2, h2, cand_a.c2)
            ib, _ = module.scan_pair_blocks(y1, h1, cand_b.c1, y2, h2, cand_b.c2)
            best = min(best, time.perf_counter() - t0)
        reference[name] = (ia.copy(), ib.copy())
        results.append(BenchResult(
            workload=f"separated half-search ({mod}, 2x{len(cand_a.index_tuples)} candidates)",
            backend=name, trials=trials, seconds=best,
        ))
    names = list(reference)
    if len(names) == 2:
        a, b = reference[names[0]], reference[names[1]]
        if not (np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])):
            raise AssertionError("kernel backends disagree on decisions")
    return results


def format_results(results):
    lines = [f"kernel backend: {kernels.BACKEND} (active)", ""]
    lines.append(f"{'workload':<52} {'backend':<10} {'trials/s':>12}")
    base = None
    for r in results:
        lines.append(f"{r.workload:<52} {r.backend:<10} {r.trials_per_second:>12.0f}")
        if r.backend == "python":
            base = r.seconds
    compiled = [r for r in results if r.backend == "compiled"]
    if base and compiled:
        lines.append("")
        lines.append(f"speedup (compiled vs python): {base / compiled[0].seconds:.1f}x")
    return "\n".join(lines)
