"""Backend selection for the QAM bit-level kernels.

Prefers the compiled extension (slicebench._kernels) and falls back to the
pure-numpy implementation when the extension was not built. Selection happens
at import time; set SLICEBENCH_KERNELS=numpy or =compiled to force a backend
(forcing "compiled" without a built extension is a configuration error).

Both backends expose map_bits / demap_hard / count_bit_errors with identical
semantics and bit-identical outputs.
"""

from __future__ import annotations

import os

from slicebench import _kernels_py
from slicebench.errors import ConfigError

try:
    from slicebench import _kernels as _compiled
except ImportError:
    _compiled = None

_BACKENDS = {"numpy": _kernels_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend(name: str):
    """Backend module by name, for benchmarks and equivalence tests."""
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ConfigError(
            f"kernel backend {name!r} unavailable; have {sorted(_BACKENDS)}"
        ) from None


def _select_default():
    forced = os.environ.get("SLICEBENCH_KERNELS", "").strip().lower()
    if forced:
        return get_backend(forced), forced
    if _compiled is not None:
        return _compiled, "compiled"
    return _kernels_py, "numpy"


_impl, BACKEND = _select_default()

map_bits = _impl.map_bits
demap_hard = _impl.demap_hard
count_bit_errors = _impl.count_bit_errors


def force_backend(name: str) -> str:
    """Rebind the module-level functions to one backend.

    Hook for the kernel benchmark and equivalence tests; not thread-safe.
    Returns the previously active backend name so callers can restore it.
    """
    global _impl, BACKEND, map_bits, demap_hard, count_bit_errors
    previous = BACKEND
    _impl = get_backend(name)
    BACKEND = name
    map_bits = _impl.map_bits
    demap_hard = _impl.demap_hard
    count_bit_errors = _impl.count_bit_errors
    return previous
