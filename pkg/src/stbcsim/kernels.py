"""Selects the decode-kernel backend at import time.

The compiled extension is preferred; the pure-numpy fallback keeps the
package fully functional when the extension was not built.  Both expose the
same two functions with identical decision semantics; ``stbcsim bench``
compares their throughput.
"""

from . import _kernels_py

try:
    from . import _kernels as _active
except ImportError:
    _active = _kernels_py

BACKEND = _active.BACKEND_NAME

scan_pair_blocks = _active.scan_pair_blocks
scan_single_block = _active.scan_single_block


def available_backends():
    """Importable kernel modules keyed by backend name."""
    backends = {_kernels_py.BACKEND_NAME: _kernels_py}
    if _active is not _kernels_py:
        backends[_active.BACKEND_NAME] = _active
    return backends
