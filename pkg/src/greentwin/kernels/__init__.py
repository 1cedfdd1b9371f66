"""Hot numerical kernels with a compiled backend and a pure-Python fallback.

The compiled extension (``_ckernels``, built from Cython by ``setup.py``) is
used when importable. Setting ``GREENTWIN_PURE_PYTHON=1`` forces the
fallback. Both backends expose ``rnn_forward``, ``rnn_bptt`` and
``mpc_search`` with identical contracts; see ``_pykernels`` for the
documentation of each.
"""

import os

from . import _pykernels

try:
    if os.environ.get("GREENTWIN_PURE_PYTHON"):
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as _active
except ImportError:
    _active = _pykernels

BACKEND: str = _active.BACKEND
rnn_forward = _active.rnn_forward
rnn_bptt = _active.rnn_bptt
mpc_search = _active.mpc_search


def available_backends() -> dict:
    """Map backend name to kernel module for every importable backend."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out


__all__ = ["BACKEND", "available_backends", "mpc_search", "rnn_bptt", "rnn_forward"]
