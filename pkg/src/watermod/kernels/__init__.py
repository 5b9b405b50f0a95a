"""Hot sequence kernels with a selectable backend.

The environment variable WATERMOD_BACKEND picks the implementation at import
time:

* ``auto`` (default): numba if it imports, else pure numpy
* ``numba``: require the compiled backend
* ``numpy``: force the pure-numpy fallback

Both backends produce the same token streams; float statistics can differ in
the last ulp because vectorized reductions sum in a different order.  The
``benchmarks/bench_backends.py`` script times one against the other.
"""

from __future__ import annotations

import os

import numpy as np

from ..errors import ConfigError
from ._params import GateParams, ModelParams
from . import numpy_impl

_ENV_VAR = "WATERMOD_BACKEND"


def _load_backend(name: str):
    if name == "numpy":
        return numpy_impl, "numpy"
    if name == "numba":
        from . import numba_impl

        return numba_impl, "numba"
    if name == "auto":
        try:
            from . import numba_impl
        except ImportError:
            return numpy_impl, "numpy"
        return numba_impl, "numba"
    raise ConfigError(
        f"unknown {_ENV_VAR} value {name!r}; expected 'auto', 'numba' or 'numpy'"
    )


_impl, BACKEND = _load_backend(os.environ.get(_ENV_VAR, "auto").strip().lower())


def backend_name() -> str:
    """Name of the active kernel backend ('numba' or 'numpy')."""
    return BACKEND


def get_impl(name: str):
    """Return a backend module by name (used by tests and the benchmark)."""
    return _load_backend(name)[0]


def _tokens(arr) -> np.ndarray:
    return np.ascontiguousarray(arr, dtype=np.int64)


def fold_context(model_seed: int, window) -> int:
    return int(_impl.fold_context(int(model_seed), _tokens(window)))


def toy_logits(ctx: int, mp: ModelParams) -> np.ndarray:
    return _impl.toy_logits(int(ctx), mp)


def greedy_generate(prompt, n_new: int, mp: ModelParams) -> np.ndarray:
    return _impl.greedy_generate(_tokens(prompt), int(n_new), mp)


def zb_generate(prompt, n_new: int, key: int, delta: float, gp: GateParams, mp: ModelParams):
    return _impl.zb_generate(
        _tokens(prompt), int(n_new), np.uint64(key), float(delta), gp, mp
    )


def zb_detect(tokens, prompt_len: int, key: int, gp: GateParams, mp: ModelParams):
    return _impl.zb_detect(_tokens(tokens), int(prompt_len), np.uint64(key), gp, mp)


def mb_generate(prompt, n_new: int, key: int, delta: float, k: int, digits, mp: ModelParams):
    return _impl.mb_generate(
        _tokens(prompt), int(n_new), np.uint64(key), float(delta), int(k), _tokens(digits), mp
    )


def mb_recover(tokens, prompt_len: int, key: int, k: int, b_tilde: int, mp: ModelParams):
    return _impl.mb_recover(
        _tokens(tokens), int(prompt_len), np.uint64(key), int(k), int(b_tilde), mp
    )
