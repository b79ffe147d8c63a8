"""Backend selection for the LCP sweeps.

The compiled extension is used when it was built; otherwise (or when the
environment variable ``JUMPPUT_PURE_PYTHON`` is set to a non-empty value other
than ``0``) the pure-Python implementation is used.  Both backends are always
reachable explicitly through :func:`get_backend`.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["compiled"] = _ckernels


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name=None):
    if name is None:
        return _BACKENDS[BACKEND]
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {available_backends()}") from None


if os.environ.get("JUMPPUT_PURE_PYTHON", "0") not in ("", "0") or _ckernels is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"

brennan_schwartz = get_backend().brennan_schwartz
psor = get_backend().psor
