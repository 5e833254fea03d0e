# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: typical-sequence enumeration, the counter-based
binning stream, and sequence projection.

Must stay bit-identical to ``_kernels_py`` -- the NumPy twin is the
reference for this module's contract.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"

cdef unsigned long long GOLDEN = 0x9E3779B97F4A7C15ULL
cdef unsigned long long MIX1 = 0xBF58476D1CE4E5B9ULL
cdef unsigned long long MIX2 = 0x94D049BB133111EBULL


cdef inline unsigned long long _mix64(unsigned long long z) nogil:
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    return z ^ (z >> 31)


def mix64(z):
    """SplitMix64 finalizer on a Python integer (mod 2**64)."""
    return int(_mix64(<unsigned long long> (z & 0xFFFFFFFFFFFFFFFF)))


def splitmix_stream(seed, start, count):
    """k-th output of the SplitMix64 stream seeded by ``seed``."""
    cdef unsigned long long s = <unsigned long long> (seed & 0xFFFFFFFFFFFFFFFF)
    cdef unsigned long long base = <unsigned long long> start
    cdef Py_ssize_t m = count
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty(m, dtype=np.uint64)
    cdef unsigned long long[:] o = out
    cdef Py_ssize_t j
    with nogil:
        for j in range(m):
            o[j] = _mix64(s + (base + j + 1) * GOLDEN)
    return out


def enumerate_typical_codes(lo, hi, int n, int bits, total):
    """All length-n sequences whose symbol counts lie in [lo, hi] per symbol.

    Returns ``(codes, box_ids)`` in ascending code (= lexicographic) order;
    see the NumPy twin for the box-id convention.
    """
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lo_arr = np.ascontiguousarray(lo, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] hi_arr = np.ascontiguousarray(hi, dtype=np.int64)
    cdef int alphabet = lo_arr.shape[0]
    if n * bits > 63:
        raise ValueError("packed enumeration requires n * bits <= 63")

    cdef Py_ssize_t cap = total
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] codes = np.empty(cap, dtype=np.uint64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] boxes = np.empty(cap, dtype=np.int64)
    cdef unsigned long long[:] codes_v = codes
    cdef long long[:] boxes_v = boxes

    cdef cnp.ndarray[cnp.int64_t, ndim=1] strides_arr = np.ones(alphabet, dtype=np.int64)
    cdef int a
    for a in range(alphabet - 2, -1, -1):
        strides_arr[a] = strides_arr[a + 1] * (hi_arr[a + 1] - lo_arr[a + 1] + 1)
    cdef long long base_box = 0
    for a in range(alphabet):
        base_box += lo_arr[a] * strides_arr[a]

    cdef long long[:] lo_v = lo_arr
    cdef long long[:] hi_v = hi_arr
    cdef long long[:] strides_v = strides_arr

    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts_arr = np.zeros(alphabet, dtype=np.int64)
    cdef long long[:] counts = counts_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] sym_arr = np.full(n, -1, dtype=np.int64)
    cdef long long[:] sym_at = sym_arr
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] prefix_arr = np.zeros(n + 1, dtype=np.uint64)
    cdef unsigned long long[:] prefix = prefix_arr

    cdef long long need = 0, room = 0, raw_box = 0
    for a in range(alphabet):
        need += lo_v[a]
        room += hi_v[a]

    cdef Py_ssize_t written = 0
    cdef int pos = 0
    cdef long long s, remaining
    cdef bint placed
    with nogil:
        while pos >= 0:
            # withdraw the symbol currently at this position, if any
            s = sym_at[pos]
            if s >= 0:
                counts[s] -= 1
                raw_box -= strides_v[s]
                if counts[s] < lo_v[s]:
                    need += 1
                room += 1
            # advance to the next feasible symbol at this position
            remaining = n - pos - 1
            placed = False
            s += 1
            while s < alphabet:
                if counts[s] < hi_v[s]:
                    # effect of placing s on the feasibility ledger
                    if (need - (1 if counts[s] < lo_v[s] else 0)) <= remaining \
                            and remaining <= room - 1:
                        placed = True
                        break
                s += 1
            if not placed:
                sym_at[pos] = -1
                pos -= 1
                continue
            sym_at[pos] = s
            if counts[s] < lo_v[s]:
                need -= 1
            counts[s] += 1
            room -= 1
            raw_box += strides_v[s]
            prefix[pos + 1] = (prefix[pos] << bits) | <unsigned long long> s
            if pos == n - 1:
                codes_v[written] = prefix[n]
                boxes_v[written] = raw_box - base_box
                written += 1
                # stay at this position; loop withdraws s and tries the next
            else:
                pos += 1

    if written != cap:
        raise AssertionError(
            f"enumeration produced {written} sequences, expected {cap}"
        )
    return codes, boxes


def project_codes(codes, int n, int bits, table, int width):
    """Re-pack each sequence through a per-symbol table."""
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] codes_arr = np.ascontiguousarray(codes, dtype=np.uint64)
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] table_arr = np.ascontiguousarray(table, dtype=np.uint64)
    cdef Py_ssize_t m = codes_arr.shape[0]
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.zeros(m, dtype=np.uint64)
    cdef unsigned long long[:] c = codes_arr
    cdef unsigned long long[:] t = table_arr
    cdef unsigned long long[:] o = out
    cdef unsigned long long mask = (1ULL << bits) - 1
    cdef Py_ssize_t j
    cdef int pos
    cdef unsigned long long code, acc
    with nogil:
        for j in range(m):
            code = c[j]
            acc = 0
            for pos in range(n):
                acc |= t[(code >> (bits * (n - 1 - pos))) & mask] \
                    << (width * (n - 1 - pos))
            o[j] = acc
    return out
