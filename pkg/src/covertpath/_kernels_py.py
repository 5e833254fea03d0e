"""NumPy implementation of the hot kernels.

Mirrors ``_kernels.pyx`` exactly; ``covertpath.kernels`` picks whichever is
importable.  All outputs are bit-identical between the two backends --
tests/test_kernels.py enforces that.

Sequences over the packed alphabet are themselves packed into uint64 codes
with position 0 in the most significant bits, so ascending code order is
lexicographic sequence order.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Fallback enumeration materializes (states x alphabet) scratch arrays;
# chunking keeps the peak bounded.
_CHUNK = 1 << 20


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python integer (mod 2**64)."""
    z &= _M64
    z = ((z ^ (z >> 30)) * _MIX1) & _M64
    z = ((z ^ (z >> 27)) * _MIX2) & _M64
    return z ^ (z >> 31)


def splitmix_stream(seed: int, start: int, count: int) -> np.ndarray:
    """k-th output of the SplitMix64 stream seeded by ``seed``.

    Element j of the result is mix64(seed + (start + j + 1) * GOLDEN), so it
    depends on (seed, absolute index) only; any slice of the stream can be
    regenerated independently.
    """
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = (np.uint64(seed & _M64) + idx * np.uint64(_GOLDEN)).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def enumerate_typical_codes(lo, hi, n: int, bits: int, total: int):
    """All length-n sequences whose symbol counts lie in [lo, hi] per symbol.

    Returns ``(codes, box_ids)`` in ascending code (= lexicographic) order.
    ``box_ids`` index the count-vector box in C order:
    sum_a (count_a - lo_a) * prod_{b > a} (hi_b - lo_b + 1).
    """
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    alphabet = lo.shape[0]
    if n * bits > 63:
        raise ValueError("packed enumeration requires n * bits <= 63")

    codes = np.zeros(1, dtype=np.uint64)
    counts = np.zeros((1, alphabet), dtype=np.int16)
    symbols = np.arange(alphabet, dtype=np.uint64)

    for pos in range(n):
        remaining = n - pos - 1
        out_codes = []
        out_counts = []
        for s0 in range(0, codes.shape[0], _CHUNK):
            c_chunk = codes[s0:s0 + _CHUNK]
            k_chunk = counts[s0:s0 + _CHUNK]
            m = c_chunk.shape[0]
            child_codes = (
                (c_chunk[:, None] << np.uint64(bits)) | symbols[None, :]
            ).reshape(-1)
            child_counts = np.repeat(k_chunk, alphabet, axis=0)
            child_counts[np.arange(m * alphabet), np.tile(symbols, m).astype(np.int64)] += 1
            need = np.maximum(lo[None, :] - child_counts, 0).sum(axis=1)
            room = (hi[None, :] - child_counts).sum(axis=1)
            within = (child_counts <= hi[None, :]).all(axis=1)
            keep = within & (need <= remaining) & (remaining <= room)
            out_codes.append(child_codes[keep])
            out_counts.append(child_counts[keep])
        codes = np.concatenate(out_codes)
        counts = np.concatenate(out_counts)

    if codes.shape[0] != total:
        raise AssertionError(
            f"enumeration produced {codes.shape[0]} sequences, expected {total}"
        )
    dims = (hi - lo + 1).astype(np.int64)
    strides = np.ones(alphabet, dtype=np.int64)
    for a in range(alphabet - 2, -1, -1):
        strides[a] = strides[a + 1] * dims[a + 1]
    box_ids = ((counts.astype(np.int64) - lo[None, :]) * strides[None, :]).sum(axis=1)
    return codes, box_ids


def project_codes(codes, n: int, bits: int, table, width: int) -> np.ndarray:
    """Re-pack each sequence through a per-symbol table.

    ``table`` maps full symbols to observed symbols of ``width`` bits; the
    result packs the observed sequence exactly like the input packing.
    """
    codes = np.asarray(codes, dtype=np.uint64)
    table = np.asarray(table, dtype=np.uint64)
    mask = np.uint64((1 << bits) - 1)
    out = np.zeros_like(codes)
    for pos in range(n):
        shift_in = np.uint64(bits * (n - 1 - pos))
        shift_out = np.uint64(width * (n - 1 - pos))
        sym = (codes >> shift_in) & mask
        out |= table[sym.astype(np.int64)] << shift_out
    return out
