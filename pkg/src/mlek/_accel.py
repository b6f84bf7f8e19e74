"""Backend switch for the compiled kernels.

Set ``MLEK_DISABLE_NUMBA=1`` to force the vectorized numpy implementations.
The flag is read at import time; tests flip ``USE_NUMBA`` directly.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}


def _numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


USE_NUMBA = (
    os.environ.get("MLEK_DISABLE_NUMBA", "0").strip().lower() in _FALSY
    and _numba_available()
)


def backend():
    return "numba" if USE_NUMBA else "numpy"
