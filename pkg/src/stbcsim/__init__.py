"""Quasi-orthogonal space-time block code workbench.

Full-rate codes for 4 and 3 transmit antennas over two-block fading, their
separated (half-complexity) exact ML decoders, classical quasi-static
baselines, and a deterministic Monte Carlo BER/CGD harness.
"""

from .baselines import (BASELINES, BaselineCode, decode_baseline,
                        encode_baseline, get_baseline)
from .channel import (Observation, draw_channel, draw_quasi_static,
                      snr_to_n0, substream, transmit)
from .codebook import (CODE_SCALE, Codeword, GramPattern, alamouti_block,
                       assemble, cgd_min, encode3, encode4, gram_check,
                       optimize_rotation, rate)
from .constellation import (ConstellationSpec, demap_symbols,
                            get_constellation, map_bits, rotate_symbols)
from .detection import (DecoderDecision, group_a_metric, group_b_metric,
                        ml_exhaustive, ml_separated, ml_sphere, sphere_decode)
from .kernels import BACKEND as KERNEL_BACKEND
from .sim import (BerRecord, SweepConfig, run_ber_sweep, run_cgd_study,
                  run_verify, wilson_interval)

__version__ = "0.1.0"
