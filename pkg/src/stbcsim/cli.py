"""Command line interface.

Subcommands: ber (Monte Carlo sweep), cgd (rotation study), verify
(structure checks), encode (print one codeword), bench (kernel backends).
Exit codes: 0 success, 1 configuration error, 2 verification failure,
3 I/O error.
"""

import argparse
import math
import re
import sys

import numpy as np

from . import sim
from .baselines import BASELINE_THETA, BASELINES, encode_baseline, get_baseline
from .codebook import ENCODERS, assemble, get_encoder
from .constellation import get_constellation, map_bits, rotate_symbols
from .sim import ConfigError, SweepConfig

_THETA_RE = re.compile(r"^([0-9.]*)\*?pi(?:/([0-9.]+))?$")

# CLI spellings use hyphens; internal labels use underscores.
def _canon_code(label):
    return label.replace("-", "_")


def _cli_code(label):
    return label.replace("_", "-")


CODE_CHOICES = [_cli_code(c) for c in sorted(ENCODERS) + sorted(BASELINES)]


def parse_theta(text):
    """Radians as a float, or 'pi' forms like 'pi/4', '3pi/8', '0.5pi'."""
    t = str(text).strip().lower().replace(" ", "")
    m = _THETA_RE.match(t)
    if m:
        a = float(m.group(1)) if m.group(1) else 1.0
        b = float(m.group(2)) if m.group(2) else 1.0
        return a * math.pi / b
    try:
        return float(t)
    except ValueError:
        raise ConfigError(f"theta: cannot parse {text!r}") from None


def parse_snr(text):
    """'start:stop:step' or a single value."""
    parts = str(text).split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"snr: cannot parse {text!r}") from None
    if len(vals) == 1:
        return vals[0], vals[0], 1.0
    if len(vals) == 3:
        return vals[0], vals[1], vals[2]
    raise ConfigError(f"snr: expected start:stop:step, got {text!r}")


def _add_common(p):
    # label validation happens in SweepConfig.validate so that bad values
    # exit with the config-error code (1), not argparse's usage code
    p.add_argument("--code", default=None,
                   help=f"space-time code: {', '.join(CODE_CHOICES)}")
    p.add_argument("--mod", default=None,
                   help="constellation: bpsk, qam4, qam16")
    p.add_argument("--theta", default=None,
                   help="rotation angle in radians (accepts 'pi/4')")
    p.add_argument("--seed", type=int, default=None, help="master RNG seed")
    p.add_argument("--out", default=None, help="output CSV path")
    p.add_argument("--config", default=None,
                   help="flat key=value config file; explicit flags override it")


def build_parser():
    ap = argparse.ArgumentParser(prog="stbcsim", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    ber = sub.add_parser("ber", help="Monte Carlo BER sweep")
    _add_common(ber)
    ber.add_argument("--snr", default=None, help="start:stop:step in dB")
    ber.add_argument("--snr-mode", default=None, help="es or eb")
    ber.add_argument("--decoder", default=None,
                     help="separated (default), exhaustive, or sphere")
    ber.add_argument("--min-errors", type=int, default=None,
                     help="stop a point after this many bit errors")
    ber.add_argument("--max-trials", type=int, default=None,
                     help="trial cap per SNR point")
    ber.add_argument("--workers", type=int, default=None,
                     help="parallel worker processes (results are worker-count independent)")

    cgd = sub.add_parser("cgd", help="rotation angle study (min CGD curve)")
    _add_common(cgd)
    cgd.add_argument("--grid-step", default=None,
                     help="theta grid step in radians (accepts 'pi/180')")
    cgd.add_argument("--samples", type=int, default=None,
                     help="difference-vector samples for non-bpsk alphabets")

    ver = sub.add_parser("verify", help="structure and decoder checks")
    _add_common(ver)
    ver.add_argument("--draws", type=int, default=None,
                     help="random codewords for the orthogonality check")
    ver.add_argument("--inject-structure-defect", action="store_true",
                     help=argparse.SUPPRESS)

    enc = sub.add_parser("encode", help="print the codeword for given bits")
    _add_common(enc)
    enc.add_argument("--bits", required=True,
                     help="bit string, e.g. 0110... (length = symbols x bits/symbol)")

    bench = sub.add_parser("bench", help="compare kernel backends")
    bench.add_argument("--trials", type=int, default=4096)
    bench.add_argument("--mod", default="qam4", help="constellation for the workload")
    return ap


_DEFAULTS = {
    "code": "proposed4",
    "mod": "qam4",
    "theta": "pi/4",
    "seed": 0,
    "out": "",
    "snr": "0:16:2",
    "snr_mode": "es",
    "decoder": "separated",
    "min_errors": 200,
    "max_trials": 1_000_000,
    "workers": 1,
    "grid_step": "pi/180",
    "samples": 1_000_000,
    "draws": 1000,
}


def _resolve(args, key, cast=None):
    """flag > config file > default."""
    val = getattr(args, key, None)
    if val is None:
        val = getattr(args, "_file_values", {}).get(key)
    if val is None:
        val = _DEFAULTS[key]
    if cast and isinstance(val, str):
        val = cast(val)
    return val


def _sweep_config(args):
    snr = parse_snr(_resolve(args, "snr"))
    return SweepConfig(
        code=_canon_code(str(_resolve(args, "code"))),
        mod=str(_resolve(args, "mod")),
        theta=parse_theta(_resolve(args, "theta")),
        snr_start=snr[0], snr_stop=snr[1], snr_step=snr[2],
        snr_mode=str(_resolve(args, "snr_mode")),
        decoder=str(_resolve(args, "decoder")),
        min_bit_errors=int(_resolve(args, "min_errors")),
        max_trials=int(_resolve(args, "max_trials")),
        seed=int(_resolve(args, "seed")),
        out=str(_resolve(args, "out")),
        workers=int(_resolve(args, "workers")),
    ).validate()


def _cmd_ber(args):
    cfg = _sweep_config(args)
    records = sim.run_ber_sweep(cfg)
    text = sim.format_ber_csv(cfg, records)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
        print(f"wrote {cfg.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_cgd(args):
    code = _canon_code(str(_resolve(args, "code")))
    result, text = sim.run_cgd_study(
        mod=str(_resolve(args, "mod")),
        encoder=code,
        grid_step=parse_theta(_resolve(args, "grid_step")),
        out=str(_resolve(args, "out")) or None,
        n_samples=int(_resolve(args, "samples")),
        seed=int(_resolve(args, "seed")),
    )
    out = str(_resolve(args, "out"))
    if out:
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)
    print(f"theta_star = {result.theta_star:.6f} rad "
          f"(plateau {result.plateau[0]:.6f}..{result.plateau[1]:.6f})")
    return 0


def _cmd_verify(args):
    report = sim.run_verify(
        code=_canon_code(str(_resolve(args, "code"))),
        mod=str(_resolve(args, "mod")),
        theta=parse_theta(_resolve(args, "theta")),
        draws=int(_resolve(args, "draws")),
        seed=int(_resolve(args, "seed")),
        inject_defect=bool(getattr(args, "inject_structure_defect", False)),
    )
    for line in report.lines:
        print(line)
    if not report.ok:
        print(f"verification FAILED ({len(report.failures)} check(s))")
        return 2
    print("verification passed")
    return 0


def _fmt_complex(z):
    return f"{z.real:+.6f}{z.imag:+.6f}j"


def _cmd_encode(args):
    code = _canon_code(str(_resolve(args, "code")))
    try:
        spec = get_constellation(str(_resolve(args, "mod")))
    except KeyError as exc:
        raise ConfigError(f"mod: {exc.args[0]}") from None
    theta = parse_theta(_resolve(args, "theta"))
    bits_text = args.bits.strip()
    if not set(bits_text) <= {"0", "1"}:
        raise ConfigError(f"bits: expected a 0/1 string, got {args.bits!r}")
    bits = np.array([int(b) for b in bits_text])
    if code in ENCODERS:
        need = 8 * spec.bits_per_symbol
        if bits.size != need:
            raise ConfigError(f"bits: {code} with {spec.label} needs {need} bits, got {bits.size}")
        sym = rotate_symbols(map_bits(bits, spec), theta)
        encode, _ = get_encoder(code)
        cw = assemble(*encode(sym))
        print(f"{code} codeword (block-diagonal, scale {cw.scale:.6f}):")
        matrix = cw.m
    else:
        try:
            base = get_baseline(code)
        except KeyError as exc:
            raise ConfigError(f"code: {exc.args[0]}") from None
        need = base.symbols_per_block * spec.bits_per_symbol
        if bits.size != need:
            raise ConfigError(f"bits: {code} with {spec.label} needs {need} bits, got {bits.size}")
        matrix = encode_baseline(base, map_bits(bits, spec), BASELINE_THETA)
        print(f"{code} codeword ({base.slots} slots x {base.antennas} antennas):")
    for row in matrix:
        print("  [" + "  ".join(_fmt_complex(z) for z in row) + "]")
    return 0


def _cmd_bench(args):
    from . import bench
    results = bench.run_benchmark(trials=args.trials, mod=args.mod)
    print(bench.format_results(results))
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "config", None):
            try:
                args._file_values = sim.load_config_file(args.config)
            except OSError as exc:
                print(f"error: cannot read config file: {exc}", file=sys.stderr)
                return 3
        handler = {
            "ber": _cmd_ber,
            "cgd": _cmd_cgd,
            "verify": _cmd_verify,
            "encode": _cmd_encode,
            "bench": _cmd_bench,
        }[args.command]
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
