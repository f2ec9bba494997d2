"""Monte Carlo BER harness, rotation study runner, and structure verifier.

Reproducibility contract: every random draw in a sweep comes from a Philox
substream keyed by (master seed, SNR-point index, batch index), trials are
processed in fixed-size batches, and the stopping rule is evaluated at batch
boundaries in batch order.  Worker processes only change how batches are
computed, never which batches contribute, so output records are identical
for any worker count.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines, codebook, detection, kernels
from .baselines import BASELINE_THETA, BASELINES, encode_baseline, get_baseline
from .channel import complex_gaussian, snr_to_n0, substream
from .codebook import (CODE_SCALE, ENCODERS, GRAM_PATTERNS, GramPattern,
                       get_encoder, gram_check, optimize_rotation, rate)
from .constellation import (bit_distance_table, get_constellation,
                            rotate_symbols)

__version__ = "0.1.0"

CODE_LABELS = tuple(sorted(ENCODERS)) + tuple(sorted(BASELINES))
DECODER_LABELS = ("separated", "exhaustive", "sphere")

# Gram patterns of the single-block baselines (0-based allowed column pairs).
BASELINE_GRAM_PATTERNS = {
    "alamouti2": GramPattern(2, frozenset()),
    "jafarkhani4": GramPattern(4, frozenset({(0, 3), (1, 2)})),
    "qostbc_rot4": GramPattern(4, frozenset({(0, 3), (1, 2)})),
    "qostbc_rot3": GramPattern(3, frozenset({(1, 2)})),
}


class ConfigError(ValueError):
    """Invalid sweep configuration; the message names the offending field."""


def _get_spec(mod):
    try:
        return get_constellation(mod)
    except KeyError as exc:
        raise ConfigError(f"mod: {exc.args[0]}") from None


@dataclass(frozen=True)
class SweepConfig:
    code: str = "proposed4"
    mod: str = "qam4"
    theta: float = math.pi / 4
    snr_start: float = 0.0
    snr_stop: float = 16.0
    snr_step: float = 2.0
    snr_mode: str = "es"
    decoder: str = "separated"
    min_bit_errors: int = 200
    max_trials: int = 1_000_000
    seed: int = 0
    out: str = ""
    workers: int = 1
    batch_size: int = 4096
    # test-only escape hatch for small exhaustive-QAM cross-checks
    allow_large_exhaustive: bool = False

    def validate(self):
        if self.code not in CODE_LABELS:
            raise ConfigError(f"code: unknown label {self.code!r}; choose from {CODE_LABELS}")
        try:
            get_constellation(self.mod)
        except KeyError as exc:
            raise ConfigError(f"mod: {exc.args[0]}") from None
        if not math.isfinite(self.theta):
            raise ConfigError("theta: must be finite")
        if self.snr_start > self.snr_stop:
            raise ConfigError("snr: start must not exceed stop")
        if self.snr_step <= 0:
            raise ConfigError("snr: step must be positive")
        if self.snr_mode not in ("es", "eb"):
            raise ConfigError(f"snr_mode: unknown mode {self.snr_mode!r}")
        if self.decoder not in DECODER_LABELS:
            raise ConfigError(f"decoder: unknown label {self.decoder!r}; choose from {DECODER_LABELS}")
        if self.min_bit_errors < 1:
            raise ConfigError("min_bit_errors: must be >= 1")
        if self.max_trials < 1:
            raise ConfigError("max_trials: must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers: must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size: must be >= 1")
        if (self.code in ENCODERS and self.decoder == "exhaustive"
                and get_constellation(self.mod).size > 2
                and not self.allow_large_exhaustive):
            raise ConfigError(
                "decoder: exhaustive ML is refused for alphabets beyond bpsk "
                "(m^8 candidates); use decoder=separated, which is exact"
            )
        return self

    def snr_points(self):
        n = int(math.floor((self.snr_stop - self.snr_start) / self.snr_step + 1e-9)) + 1
        return [self.snr_start + k * self.snr_step for k in range(n)]


@dataclass
class BerRecord:
    snr_db: float
    trials: int
    bit_errors: int
    ber: float
    ci_low: float
    ci_high: float
    elapsed_seconds: float


_Z95 = 1.959963984540054


def wilson_interval(errors, n, z=_Z95):
    """95% Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0, 1.0
    p = errors / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# Trial engine

class _Engine:
    """Per-process simulation state for one (code, mod, theta, decoder)."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.spec = get_constellation(cfg.mod)
        self.bitdist = bit_distance_table(self.spec)
        self.is_proposed = cfg.code in ENCODERS
        bps = self.spec.bits_per_symbol
        if self.is_proposed:
            self.encode, self.mt = get_encoder(cfg.code)
            self.n_symbols = 8
            if cfg.decoder == "separated":
                self.cand_a = detection.candidate_set(self.spec, cfg.theta, cfg.code, "a")
                self.cand_b = detection.candidate_set(self.spec, cfg.theta, cfg.code, "b")
            elif cfg.decoder == "exhaustive":
                self.cand_full = detection.candidate_set(self.spec, cfg.theta, cfg.code, "full")
        else:
            self.base = get_baseline(cfg.code)
            self.mt = self.base.antennas
            self.n_symbols = self.base.symbols_per_block
        self.bits_per_codeword = self.n_symbols * bps

    def _draw_messages(self, rng, n):
        bits = rng.integers(0, 2, size=(n, self.bits_per_codeword), dtype=np.int64)
        bps = self.spec.bits_per_symbol
        weights = 1 << np.arange(bps - 1, -1, -1)
        return bits.reshape(n, self.n_symbols, bps) @ weights

    def run_batch(self, rng, n, n0):
        """Simulate n codewords, return the bit error count."""
        tx_idx = self._draw_messages(rng, n)
        if self.is_proposed:
            rx_idx = self._run_proposed(rng, n, n0, tx_idx)
        else:
            rx_idx = self._run_baseline(rng, n, n0, tx_idx)
        return int(self.bitdist[tx_idx, rx_idx].sum())

    def _run_proposed(self, rng, n, n0, tx_idx):
        cfg = self.cfg
        sym = rotate_symbols(self.spec.points[tx_idx], cfg.theta)
        c1, c2 = self.encode(sym)
        h = complex_gaussian(rng, (n, 2 * self.mt))
        h1, h2 = h[:, : self.mt], h[:, self.mt:]
        y1 = CODE_SCALE * np.einsum("nij,nj->ni", c1, h1)
        y2 = CODE_SCALE * np.einsum("nij,nj->ni", c2, h2)
        if n0 > 0:
            noise = complex_gaussian(rng, (n, 8), n0)
            y1 = y1 + noise[:, :4]
            y2 = y2 + noise[:, 4:]
        y1 = np.ascontiguousarray(y1)
        y2 = np.ascontiguousarray(y2)
        rx_idx = np.empty((n, 8), dtype=np.int64)
        if cfg.decoder == "separated":
            for cand in (self.cand_a, self.cand_b):
                idx, _ = kernels.scan_pair_blocks(y1, h1, cand.c1, y2, h2, cand.c2)
                rx_idx[:, list(cand.positions)] = cand.index_tuples[idx]
        elif cfg.decoder == "exhaustive":
            idx, _ = kernels.scan_pair_blocks(y1, h1, self.cand_full.c1,
                                              y2, h2, self.cand_full.c2)
            rx_idx[:] = self.cand_full.index_tuples[idx]
        else:  # sphere
            y = np.hstack([y1, y2])
            for i in range(n):
                dec = detection.ml_sphere(y[i], h[i], self.spec, cfg.theta, cfg.code)
                rx_idx[i] = dec.indices
        return rx_idx

    def _run_baseline(self, rng, n, n0, tx_idx):
        code = self.base
        sym = self.spec.points[tx_idx]
        cw = encode_baseline(code, sym, BASELINE_THETA)
        h = complex_gaussian(rng, (n, self.mt))
        y = np.einsum("nij,nj->ni", cw, h)
        if n0 > 0:
            y = y + complex_gaussian(rng, (n, code.slots), n0)
        y = np.ascontiguousarray(y)
        rx_idx = np.empty((n, self.n_symbols), dtype=np.int64)
        if code.label == "alamouti2":
            z1 = np.conj(h[:, 0]) * y[:, 0] + h[:, 1] * np.conj(y[:, 1])
            z2 = np.conj(h[:, 1]) * y[:, 0] - h[:, 0] * np.conj(y[:, 1])
            gain = np.sum(np.abs(h) ** 2, axis=1)
            for col, z in enumerate((z1, z2)):
                dist = np.abs(z[:, None] / gain[:, None] - self.spec.points[None, :])
                rx_idx[:, col] = np.argmin(dist, axis=1)
        else:
            for pair in baselines.PAIR_GROUPS:
                cands, idx_tuples = baselines._pair_candidates(
                    code, self.spec, BASELINE_THETA, pair)
                idx, _ = kernels.scan_single_block(y, h, cands)
                rx_idx[:, list(pair)] = idx_tuples[idx]
        return rx_idx


_ENGINES = {}


def _engine_for(cfg):
    key = (cfg.code, cfg.mod, cfg.theta, cfg.decoder, cfg.allow_large_exhaustive)
    eng = _ENGINES.get(key)
    if eng is None:
        eng = _ENGINES[key] = _Engine(cfg)
    return eng


def _batch_worker(args):
    cfg, point_index, batch_index, n_trials, n0 = args
    rng = substream(cfg.seed, point_index, batch_index)
    errors = _engine_for(cfg).run_batch(rng, n_trials, n0)
    return batch_index, errors, n_trials


# ---------------------------------------------------------------------------
# Sweep runner

def run_ber_sweep(cfg):
    """Run the BER sweep described by cfg; returns one record per SNR point.

    Each point loops batches until min_bit_errors have accumulated or
    max_trials is reached; a batch that crosses the threshold is counted in
    full and later batches are discarded, so records do not depend on how
    many batches were computed speculatively in parallel.
    """
    cfg.validate()
    engine = _engine_for(cfg)
    n_batches = math.ceil(cfg.max_trials / cfg.batch_size)
    sizes = [min(cfg.batch_size, cfg.max_trials - b * cfg.batch_size)
             for b in range(n_batches)]
    pool = ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    records = []
    try:
        for point_index, snr_db in enumerate(cfg.snr_points()):
            n0 = snr_to_n0(snr_db, engine.spec, engine.mt, cfg.snr_mode)
            start = time.perf_counter()
            errors = 0
            trials = 0
            next_batch = 0
            while next_batch < n_batches:
                wave = range(next_batch, min(next_batch + max(cfg.workers, 1), n_batches))
                jobs = [(cfg, point_index, b, sizes[b], n0) for b in wave]
                results = pool.map(_batch_worker, jobs) if pool else map(_batch_worker, jobs)
                stop = False
                for _, errs, n_tr in results:  # map preserves batch order
                    errors += errs
                    trials += n_tr
                    next_batch += 1
                    if errors >= cfg.min_bit_errors:
                        stop = True
                        break
                if stop:
                    break
            n_bits = trials * engine.bits_per_codeword
            ber = errors / n_bits if n_bits else 0.0
            lo, hi = wilson_interval(errors, n_bits)
            records.append(BerRecord(
                snr_db=snr_db, trials=trials, bit_errors=errors, ber=ber,
                ci_low=lo, ci_high=hi,
                elapsed_seconds=time.perf_counter() - start,
            ))
    finally:
        if pool:
            pool.shutdown()
    return records


def _channel_note(code):
    if code in ENCODERS:
        return "two independent fading blocks per codeword"
    return "quasi-static fading over the whole codeword"


def format_ber_csv(cfg, records):
    """CSV text: '#' metadata header, then deterministic data rows."""
    eng_bits = _engine_for(cfg).bits_per_codeword
    lines = [
        f"# stbcsim {__version__} ber sweep",
        (f"# code={cfg.code} mod={cfg.mod} theta={cfg.theta!r} "
         f"snr={cfg.snr_start:g}:{cfg.snr_stop:g}:{cfg.snr_step:g} snr_mode={cfg.snr_mode} "
         f"decoder={cfg.decoder} min_bit_errors={cfg.min_bit_errors} "
         f"max_trials={cfg.max_trials} seed={cfg.seed} batch_size={cfg.batch_size}"),
        f"# channel_model={_channel_note(cfg.code)}",
        ("# snr_convention=per-receive-antenna SNR; n0 = Mt*10^(-snr_db/10)"
         " in es mode, divided by bits/symbol in eb mode"),
        f"# bits_per_codeword={eng_bits}",
        f"# kernel_backend={kernels.BACKEND}",
        ("# stopping=sequential (min_bit_errors at batch granularity, capped at"
         " max_trials); sequential stopping can bias the estimate slightly"),
        f"# elapsed_seconds={[round(r.elapsed_seconds, 3) for r in records]}",
        "snr_db,trials,bit_errors,ber,ci_low,ci_high",
    ]
    for r in records:
        lines.append(
            f"{r.snr_db:g},{r.trials},{r.bit_errors},"
            f"{r.ber:.12g},{r.ci_low:.12g},{r.ci_high:.12g}"
        )
    return "\n".join(lines) + "\n"


def write_ber_csv(path, cfg, records):
    with open(path, "w") as fh:
        fh.write(format_ber_csv(cfg, records))


def csv_body(text):
    """The deterministic part of an output file: every non-comment line."""
    return "\n".join(ln for ln in text.splitlines() if not ln.startswith("#")) + "\n"


# ---------------------------------------------------------------------------
# Rotation / CGD study

def run_cgd_study(mod, encoder="proposed4", grid_step=math.pi / 180, out=None,
                  method="auto", n_samples=1_000_000, seed=0):
    """Sweep rotation angles, report the min-CGD curve and the optimum."""
    spec = _get_spec(mod)
    if encoder not in ENCODERS:
        raise ConfigError(f"code: cgd study applies to {sorted(ENCODERS)}, got {encoder!r}")
    result = optimize_rotation(spec, encoder, grid_step,
                               method=method, n_samples=n_samples, seed=seed)
    exhaustive = spec.size ** 8 <= 256 if method == "auto" else method == "exhaustive"
    lines = [
        f"# stbcsim {__version__} cgd study",
        f"# code={encoder} mod={mod} grid_step={grid_step!r} method={method} seed={seed}",
        f"# exhaustive={exhaustive}" + ("" if exhaustive else
                                        f" n_samples={n_samples} (sampled upper bound)"),
        f"# theta_star={result.theta_star!r}",
        f"# plateau={result.plateau[0]!r}:{result.plateau[1]!r}",
        "theta,min_cgd,min_rank",
    ]
    for t, v, rk in zip(result.thetas, result.values, result.min_ranks):
        lines.append(f"{t:.12g},{v:.12g},{rk}")
    text = "\n".join(lines) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    return result, text


# ---------------------------------------------------------------------------
# Structure verifier

@dataclass
class VerifyReport:
    ok: bool
    lines: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def check(self, passed, message):
        tag = "ok  " if passed else "FAIL"
        self.lines.append(f"[{tag}] {message}")
        if not passed:
            self.ok = False
            self.failures.append(message)


def _random_codewords(code, spec, theta, draws, seed, inject_defect):
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, spec.size, size=(draws, 8))
    sym = rotate_symbols(spec.points[idx], theta)
    if inject_defect:
        encode = (codebook._encode4_miswired if code == "proposed4"
                  else codebook._encode3_miswired)
    else:
        encode = get_encoder(code)[0]
    return encode(sym)


def run_verify(code, mod, theta=math.pi / 4, draws=1000, seed=0,
               inject_defect=False):
    """Structure, rate, and decoder-equivalence checks for one code."""
    if code not in CODE_LABELS:
        raise ConfigError(f"code: unknown label {code!r}; choose from {CODE_LABELS}")
    spec = _get_spec(mod)
    report = VerifyReport(ok=True)
    if code in ENCODERS:
        pattern = GRAM_PATTERNS[code]
        c1, c2 = _random_codewords(code, spec, theta, draws, seed, inject_defect)
        bad_pairs = set()
        worst = 0.0
        for i in range(draws):
            res = gram_check(codebook.assemble(c1[i], c2[i]).m, pattern, tol=1e-12)
            for (a, b, mag) in res.violations:
                bad_pairs.add((a, b))
                worst = max(worst, mag)
        report.check(
            not bad_pairs,
            f"column orthogonality pattern over {draws} random {mod} draws"
            + (f": violated at pairs {sorted(bad_pairs)} (worst {worst:.3g})"
               if bad_pairs else ""),
        )
        r = rate(code)
        report.check(r.value == 1.0 and r.slots_per_period == 8,
                     f"rate = {r.symbols_per_period}/{r.slots_per_period} = {r.value:g}")
        bspec = get_constellation("bpsk")
        mism = 0
        for t in range(50):
            rng = np.random.default_rng(10_000 + t)
            midx = rng.integers(0, 2, size=8)
            sym = rotate_symbols(bspec.points[midx], theta)
            enc, mt = get_encoder(code)
            cc1, cc2 = enc(sym)
            h = complex_gaussian(rng, 2 * mt)
            n0 = snr_to_n0(5.0, bspec, mt)
            y = np.concatenate([CODE_SCALE * (cc1 @ h[:mt]), CODE_SCALE * (cc2 @ h[mt:])])
            y += complex_gaussian(rng, 8, n0)
            da = detection.ml_separated(y, h, bspec, theta, code)
            db = detection.ml_exhaustive(y, h, bspec, theta, code)
            if not np.array_equal(da.indices, db.indices):
                mism += 1
        report.check(mism == 0,
                     f"separated vs exhaustive ML decisions on 50 bpsk trials"
                     + (f": {mism} mismatches" if mism else ""))
    else:
        base = get_baseline(code)
        pattern = BASELINE_GRAM_PATTERNS[code]
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, spec.size, size=(draws, base.symbols_per_block))
        cws = encode_baseline(base, spec.points[idx], BASELINE_THETA)
        bad_pairs = set()
        for i in range(draws):
            res = gram_check(cws[i], pattern, tol=1e-12)
            bad_pairs.update((a, b) for (a, b, _) in res.violations)
        report.check(not bad_pairs,
                     f"column orthogonality pattern over {draws} random {mod} draws"
                     + (f": violated at pairs {sorted(bad_pairs)}" if bad_pairs else ""))
        report.check(base.rate == 1.0,
                     f"rate = {base.symbols_per_block}/{base.slots} = {base.rate:g}")
        bspec = get_constellation("bpsk")
        mism = 0
        if code != "alamouti2":
            for t in range(20):
                rng = np.random.default_rng(20_000 + t)
                midx = rng.integers(0, 2, size=base.symbols_per_block)
                cw = encode_baseline(base, bspec.points[midx], BASELINE_THETA)
                h = complex_gaussian(rng, base.antennas)
                n0 = snr_to_n0(5.0, bspec, base.antennas)
                y = cw @ h + complex_gaussian(rng, base.slots, n0)
                da = baselines.decode_baseline(base, y, h, bspec)
                db = baselines.decode_baseline_exhaustive(base, y, h, bspec)
                if not np.array_equal(da.indices, db.indices):
                    mism += 1
            report.check(mism == 0,
                         "pairwise vs exhaustive ML decisions on 20 bpsk trials"
                         + (f": {mism} mismatches" if mism else ""))
    return report


# ---------------------------------------------------------------------------
# Flat key=value config files

def load_config_file(path):
    """Parse 'key = value' lines; '#' starts a comment; keys use underscores."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values
