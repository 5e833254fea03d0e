"""Kernel backend selection.

Imports the compiled Cython kernels when available, else the NumPy twin.
Set ``COVERTPATH_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and the equivalence tests).
"""

from __future__ import annotations

import os

import numpy as np

if os.environ.get("COVERTPATH_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND: str = _impl.BACKEND

mix64 = _impl.mix64
splitmix_stream = _impl.splitmix_stream
enumerate_typical_codes = _impl.enumerate_typical_codes
project_codes = _impl.project_codes


def assign_bins(seed: int, start: int, count: int, num_bins: int) -> np.ndarray:
    """Bin of the k-th lexicographic typical sequence, k = start..start+count.

    Uniform over [0, num_bins) up to the 2**-64-scale modulo bias; depends
    only on (seed, k), so any slice can be produced independently.
    """
    if num_bins == 1:
        return np.zeros(count, dtype=np.int64)
    stream = splitmix_stream(seed, start, count)
    return (stream % np.uint64(num_bins)).astype(np.int64)


def derive_seed(seed: int, salt: int) -> int:
    """Deterministic 64-bit child seed (trial seeds, binning retries)."""
    return int(splitmix_stream(seed, salt, 1)[0])


def pack_symbols(symbols, bits: int) -> int:
    """Pack a symbol sequence into the kernel uint64 code."""
    code = 0
    for s in symbols:
        code = (code << bits) | int(s)
    return code


def unpack_code(code: int, n: int, bits: int) -> tuple:
    """Inverse of ``pack_symbols``."""
    mask = (1 << bits) - 1
    return tuple((int(code) >> (bits * (n - 1 - t))) & mask for t in range(n))


def unpack_codes(codes: np.ndarray, n: int, bits: int) -> np.ndarray:
    """Vectorized unpack: (N,) uint64 codes to an (N, n) int64 symbol matrix."""
    codes = np.asarray(codes, dtype=np.uint64)
    mask = np.uint64((1 << bits) - 1)
    out = np.empty((codes.shape[0], n), dtype=np.int64)
    for t in range(n):
        out[:, t] = ((codes >> np.uint64(bits * (n - 1 - t))) & mask).astype(np.int64)
    return out
