"""Method-of-types machinery: types, strongly typical sets, enumeration.

A typical set is represented by its admitted types (count vectors); the
concrete sequences are produced lazily in lexicographic order, either by a
pure generator or in bulk through the packed kernels.  Type-class sizes are
exact arbitrary-precision integers throughout.

Conditional typicality note: two slack conventions appear for the
conditionally strongly typical set -- eps/|X_W| in the standalone set
definition versus eps*(1+|X_{W^c}|)/(|X_W||X_{W^c}|) in the derivation that
the projections of a typical sequence actually satisfy.  This module uses
the derived slack, which is the one the projection guarantee holds for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import EnumerationTooLargeError, ParameterError
from .model import (
    CodewordMatrix,
    ScalarDistribution,
    complement_subset,
    marginalize,
    projection_table,
    validate_subset,
)

# Absolute fudge on typicality boundary comparisons, so k/n landing exactly
# on the window edge is admitted regardless of float rounding.
_EDGE_TOL = 1e-12

DEFAULT_SEQUENCE_CAP = 1 << 26
DEFAULT_MATERIALIZE_CAP = 1 << 24


def default_epsilon(n: int) -> float:
    """The 1/sqrt(n) typicality slack used when none is configured."""
    return 1.0 / math.sqrt(n)


def multinomial(n: int, counts) -> int:
    """Exact multinomial coefficient n! / prod(counts!)."""
    result = 1
    remaining = n
    for k in counts:
        result *= math.comb(remaining, k)
        remaining -= k
    if remaining != 0:
        raise ParameterError(f"counts {tuple(counts)} do not sum to {n}")
    return result


@dataclass(frozen=True)
class TypeVector:
    """Empirical symbol counts of a length-n sequence."""

    counts: tuple

    def __post_init__(self):
        object.__setattr__(self, "counts", tuple(int(k) for k in self.counts))
        if any(k < 0 for k in self.counts):
            raise ParameterError("type counts must be non-negative")

    @property
    def block_length(self) -> int:
        return sum(self.counts)

    def as_distribution(self) -> ScalarDistribution:
        n = self.block_length
        return ScalarDistribution(np.asarray(self.counts, dtype=float) / n)


def type_of(x: CodewordMatrix) -> TypeVector:
    """Empirical distribution (as counts) of a codeword's symbols."""
    size = 1 << x.num_links
    counts = [0] * size
    for s in x.symbols:
        counts[s] += 1
    return TypeVector(tuple(counts))


def type_class_size(t: TypeVector) -> int:
    """Number of sequences sharing the type: the exact multinomial."""
    return multinomial(t.block_length, t.counts)


def _count_window(p: float, n: int, slack: float):
    """Inclusive [lo, hi] for a symbol count under the two-clause condition."""
    if p == 0.0:
        return 0, 0
    lo, hi = None, None
    for k in range(n + 1):
        if abs(k / n - p) <= slack + _EDGE_TOL:
            if lo is None:
                lo = k
            hi = k
    if lo is None:
        return 1, 0  # empty window
    return lo, hi


def count_windows(p: ScalarDistribution, n: int, eps: float):
    """Per-symbol inclusive count bounds for the eps-strongly typical set."""
    if eps <= 0:
        raise ParameterError("epsilon must be positive")
    slack = eps / len(p)
    lo = np.empty(len(p), dtype=np.int64)
    hi = np.empty(len(p), dtype=np.int64)
    for a, pa in enumerate(p.probs):
        lo[a], hi[a] = _count_window(float(pa), n, slack)
    return lo, hi


def is_typical(x: CodewordMatrix, p: ScalarDistribution, eps: float) -> bool:
    """Two-clause strong-typicality check of a codeword against p."""
    if eps <= 0:
        raise ParameterError("epsilon must be positive")
    if len(p) != (1 << x.num_links):
        raise ParameterError("distribution alphabet does not match codeword")
    n = len(x)
    slack = eps / len(p)
    counts = type_of(x).counts
    for a, pa in enumerate(p.probs):
        if pa > 0:
            if abs(counts[a] / n - float(pa)) > slack + _EDGE_TOL:
                return False
        elif counts[a] != 0:
            return False
    return True


def _admitted_types(lo, hi, n: int):
    """All count vectors within [lo, hi] summing to n, in lexicographic order."""
    alphabet = len(lo)
    suffix_lo = np.concatenate([np.cumsum(lo[::-1])[::-1], [0]])
    suffix_hi = np.concatenate([np.cumsum(hi[::-1])[::-1], [0]])
    out = []
    stack = [0] * alphabet

    def rec(a, left):
        if a == alphabet:
            if left == 0:
                out.append(tuple(stack))
            return
        k_lo = max(int(lo[a]), left - int(suffix_hi[a + 1]))
        k_hi = min(int(hi[a]), left - int(suffix_lo[a + 1]))
        for k in range(k_lo, k_hi + 1):
            stack[a] = k
            rec(a + 1, left - k)
        stack[a] = 0

    rec(0, n)
    return out


class TypicalSet:
    """The eps-strongly typical set of length-n sequences for a base law.

    Holds the admitted types with their exact sizes; concrete sequences are
    produced lazily (``sequences``) or in bulk (``materialize``), always in
    lexicographic order, so the k-th sequence is well defined and stable.
    """

    def __init__(self, base: ScalarDistribution, n: int, eps: float,
                 cap: int | None = DEFAULT_SEQUENCE_CAP):
        self.base = base
        self.n = int(n)
        self.eps = float(eps)
        self.lo, self.hi = count_windows(base, self.n, self.eps)
        types = _admitted_types(self.lo, self.hi, self.n)
        self.types = tuple(TypeVector(t) for t in types)
        self.sizes = tuple(multinomial(self.n, t) for t in types)
        self.total_count = sum(self.sizes)
        if cap is not None and self.total_count > cap:
            raise EnumerationTooLargeError(
                f"typical set holds {self.total_count} sequences, "
                f"beyond the cap of {cap}",
                count=self.total_count,
            )
        self._type_index = {t: i for i, t in enumerate(types)}
        self._materialized = None

    # -- structure ---------------------------------------------------------

    @property
    def alphabet_size(self) -> int:
        return len(self.base)

    @property
    def num_links(self) -> int:
        return self.base.num_links()

    def type_index(self, t: TypeVector) -> int:
        idx = self._type_index.get(tuple(t.counts))
        if idx is None:
            raise ParameterError(f"type {t.counts} is not admitted")
        return idx

    def class_log2_probs(self, dist: ScalarDistribution) -> np.ndarray:
        """log2 of the per-sequence probability of each admitted type under
        ``dist`` (-inf where the class contains a zero-probability symbol)."""
        if len(dist) != self.alphabet_size:
            raise ParameterError("distribution alphabet mismatch")
        with np.errstate(divide="ignore"):
            logs = np.log2(dist.probs)
        out = np.empty(len(self.types))
        for i, t in enumerate(self.types):
            counts = np.asarray(t.counts, dtype=float)
            mask = counts > 0
            out[i] = float((counts[mask] * logs[mask]).sum()) if mask.any() else 0.0
        return out

    def class_sequence_probs(self, dist: ScalarDistribution) -> np.ndarray:
        """Per-sequence probability of each admitted type under ``dist``."""
        return np.exp2(self.class_log2_probs(dist))

    def probability(self, dist: ScalarDistribution | None = None) -> float:
        """Total probability mass of the set under ``dist`` (default: base)."""
        dist = dist if dist is not None else self.base
        per_seq = self.class_sequence_probs(dist)
        return float(sum(float(sz) * p for sz, p in zip(self.sizes, per_seq)))

    # -- sequences ---------------------------------------------------------

    def sequences(self):
        """Lazy lexicographic iteration over concrete sequences."""
        alphabet = self.alphabet_size
        lo, hi = self.lo, self.hi
        n = self.n
        counts = [0] * alphabet
        need = int(lo.sum())
        room = int(hi.sum())
        seq = [0] * n

        def rec(pos, need, room):
            remaining = n - pos - 1
            for s in range(alphabet):
                if counts[s] >= hi[s]:
                    continue
                new_need = need - (1 if counts[s] < lo[s] else 0)
                if new_need > remaining or remaining > room - 1:
                    continue
                counts[s] += 1
                seq[pos] = s
                if pos == n - 1:
                    yield CodewordMatrix(self.num_links, tuple(seq))
                else:
                    yield from rec(pos + 1, new_need, room - 1)
                counts[s] -= 1

        yield from rec(0, need, room)

    def materialize(self, cap: int = DEFAULT_MATERIALIZE_CAP):
        """Packed codes plus type ids for every sequence, lex order, cached."""
        if self._materialized is not None:
            return self._materialized
        if self.total_count > cap:
            raise EnumerationTooLargeError(
                f"materializing {self.total_count} sequences exceeds the cap "
                f"of {cap}; raise the cap or use the compiled kernels",
                count=self.total_count,
            )
        bits = self.num_links
        if self.n * bits > 63:
            raise EnumerationTooLargeError(
                f"packed materialization needs n*C <= 63, got {self.n * bits}"
            )
        codes, box_ids = kernels.enumerate_typical_codes(
            self.lo, self.hi, self.n, bits, self.total_count
        )
        dims = (self.hi - self.lo + 1).astype(np.int64)
        box_to_type = np.full(int(dims.prod()), -1, dtype=np.int64)
        strides = np.ones(len(dims), dtype=np.int64)
        for a in range(len(dims) - 2, -1, -1):
            strides[a] = strides[a + 1] * dims[a + 1]
        for i, t in enumerate(self.types):
            box = int(((np.asarray(t.counts) - self.lo) * strides).sum())
            box_to_type[box] = i
        type_ids = box_to_type[box_ids]
        if np.any(type_ids < 0):
            raise AssertionError("enumerated sequence with unadmitted type")
        self._materialized = (codes, type_ids)
        return self._materialized

    # -- ranking -----------------------------------------------------------

    def _completions(self, used, pos) -> int:
        """Number of typical completions given symbol usage after pos symbols."""
        remaining = self.n - pos
        total = 0
        for t, _sz in zip(self.types, self.sizes):
            extra = [k - u for k, u in zip(t.counts, used)]
            if any(e < 0 for e in extra):
                continue
            total += multinomial(remaining, extra)
        return total

    def rank_of(self, x: CodewordMatrix) -> int:
        """Exact lexicographic index of a typical sequence within the set."""
        if not is_typical(x, self.base, self.eps):
            raise ParameterError("sequence is not in the typical set")
        alphabet = self.alphabet_size
        used = [0] * alphabet
        rank = 0
        for pos, sym in enumerate(x.symbols):
            for s in range(sym):
                used[s] += 1
                rank += self._completions(used, pos + 1)
                used[s] -= 1
            used[sym] += 1
        return rank


def enumerate_typical(p: ScalarDistribution, n: int, eps: float,
                      cap: int | None = DEFAULT_SEQUENCE_CAP) -> TypicalSet:
    """Build the eps-strongly typical set (admitted types, exact sizes).

    ``cap`` guards the admitted sequence count; pass None for workloads
    that stay at the type level (no concrete enumeration)."""
    return TypicalSet(p, n, eps, cap=cap)


# ---------------------------------------------------------------------------
# Conditional typicality
# ---------------------------------------------------------------------------

def combine_table(num_links: int, subset) -> np.ndarray:
    """(observed, hidden) -> full symbol table for a subset and its complement."""
    subset = validate_subset(subset, num_links)
    comp = complement_subset(subset, num_links)
    obs_of = projection_table(num_links, subset)
    hid_of = (
        projection_table(num_links, comp)
        if comp
        else np.zeros(1 << num_links, dtype=np.int64)
    )
    table = np.zeros((1 << len(subset), 1 << len(comp)), dtype=np.int64)
    for c in range(1 << num_links):
        table[obs_of[c], hid_of[c]] = c
    return table


def conditional_slack(eps: float, obs_size: int, hid_size: int) -> float:
    """Slack that projections of an eps-typical sequence are guaranteed to
    meet: eps * (1 + hid_size) / (obs_size * hid_size)."""
    return eps * (1 + hid_size) / (obs_size * hid_size)


def is_cond_typical(x_obs: CodewordMatrix, x_hid: CodewordMatrix,
                    p: ScalarDistribution, subset, eps: float) -> bool:
    """Conditional strong typicality of the hidden part given the observed.

    Joint pair counts are tested against p(b|a)*N(a|x_obs) with the derived
    slack (see module docstring); pairs with zero conditional probability
    must not occur.
    """
    num_links = p.num_links()
    subset = validate_subset(subset, num_links)
    comp = complement_subset(subset, num_links)
    if len(x_obs) != len(x_hid):
        raise ParameterError("observed and hidden parts must share the length")
    if x_obs.num_links != len(subset) or x_hid.num_links != len(comp):
        raise ParameterError("part widths must match the subset split")
    n = len(x_obs)
    obs_size = 1 << len(subset)
    hid_size = 1 << len(comp)
    slack = conditional_slack(eps, obs_size, hid_size)

    pair_counts = np.zeros((obs_size, hid_size), dtype=np.int64)
    for a, b in zip(x_obs.symbols, x_hid.symbols):
        pair_counts[a, b] += 1
    obs_counts = pair_counts.sum(axis=1)

    table = combine_table(num_links, subset)
    p_w = marginalize(p, subset).probs
    for a in range(obs_size):
        for b in range(hid_size):
            joint = float(p.probs[table[a, b]])
            cond = joint / float(p_w[a]) if p_w[a] > 0 else 0.0
            if cond > 0:
                dev = abs(pair_counts[a, b] / n - cond * obs_counts[a] / n)
                if dev > slack + _EDGE_TOL:
                    return False
            elif pair_counts[a, b] != 0:
                return False
    return True


def split_codeword(x: CodewordMatrix, subset):
    """Project a full codeword onto a subset and its complement."""
    from .model import project_codeword

    comp = complement_subset(subset, x.num_links)
    return project_codeword(x, subset), project_codeword(x, comp)
