"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise, or
when ``PCMREC_PURE_PYTHON`` is set to a non-empty value other than ``0``, the
numpy fallback in ``_pykernels`` is used.
"""

import os

from pcmrec import _pykernels

_forced = os.environ.get("PCMREC_PURE_PYTHON", "") not in ("", "0")

kernels = _pykernels
BACKEND = "python"
if not _forced:
    try:
        from pcmrec import _kernels
    except ImportError:
        pass
    else:
        kernels = _kernels
        BACKEND = "compiled"

__all__ = ["BACKEND", "kernels"]
