"""Core data model: link systems, symbol distributions, and codewords.

A network of ``C`` parallel unit-capacity links is treated as a single
hyperlink with alphabet ``{0, ..., 2**C - 1}``: the symbol sent at time t
packs the C link bits, with link 1 in the most significant bit.  Everything
downstream (marginals, typicality, binning, audits) works on that packed
alphabet, so the bit-packing convention is fixed here once.

All types are immutable after construction; the operations are pure
functions and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IncompatibleSupportError,
    InvalidSubsetError,
    ParameterError,
)

MAX_LINKS = 16

# Construction accepts sums within NORM_ATOL of one; loaders re-normalize
# drifts up to NORM_RENORM and reject anything worse.
NORM_ATOL = 1e-12
NORM_RENORM = 1e-9

Subset = tuple  # tuple of 1-based, strictly increasing link indices


@dataclass(frozen=True)
class LinkSystem:
    """A multipath network: C parallel links used for n time instants."""

    num_links: int
    block_length: int

    def __post_init__(self):
        if not 1 <= self.num_links <= MAX_LINKS:
            raise ParameterError(
                f"num_links must be in [1, {MAX_LINKS}], got {self.num_links}"
            )
        if self.block_length < 1:
            raise ParameterError(f"block_length must be >= 1, got {self.block_length}")

    @property
    def alphabet_size(self) -> int:
        return 1 << self.num_links


def _as_prob_array(probs) -> np.ndarray:
    arr = np.asarray(probs, dtype=np.float64).copy()
    if arr.ndim != 1 or arr.size < 1:
        raise ParameterError("probability vector must be one-dimensional and nonempty")
    return arr


@dataclass(frozen=True)
class ScalarDistribution:
    """Probability vector over a packed symbol alphabet.

    The length is the alphabet size of its context: ``2**C`` for a full
    hyperlink distribution, ``2**|W|`` for a marginal on a link subset.
    """

    probs: np.ndarray

    def __post_init__(self):
        arr = _as_prob_array(self.probs)
        if np.any(arr < 0):
            raise ParameterError("probabilities must be non-negative")
        total = float(arr.sum())
        if abs(total - 1.0) > NORM_ATOL:
            raise ParameterError(f"probabilities must sum to 1 (got {total!r})")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @classmethod
    def from_values(cls, probs) -> "ScalarDistribution":
        """Build from possibly drifted values (e.g. parsed from text).

        Drift up to ``NORM_RENORM`` is silently re-normalized; anything
        larger is rejected.
        """
        arr = _as_prob_array(probs)
        if np.any(arr < 0):
            raise ParameterError("probabilities must be non-negative")
        total = float(arr.sum())
        if abs(total - 1.0) > NORM_RENORM:
            raise ParameterError(
                f"probabilities sum to {total!r}; drift beyond {NORM_RENORM} rejected"
            )
        if total != 1.0:
            arr = arr / total
        return cls(arr)

    @classmethod
    def uniform(cls, size: int) -> "ScalarDistribution":
        return cls(np.full(size, 1.0 / size))

    def __len__(self) -> int:
        return int(self.probs.size)

    def num_links(self) -> int:
        """Number of links of the packed context (length must be 2**k)."""
        size = len(self)
        bits = size.bit_length() - 1
        if size != (1 << bits) or bits < 1:
            raise IncompatibleSupportError(
                f"distribution of length {size} is not over a packed link alphabet"
            )
        return bits

    def to_text(self) -> str:
        return "probs = " + " ".join(repr(float(p)) for p in self.probs)

    @classmethod
    def parse(cls, line: str) -> "ScalarDistribution":
        """Parse the one-line text format ``probs = p0 p1 ... p_{2^C-1}``."""
        body = line.split("=", 1)[1] if "=" in line else line
        try:
            values = [float(tok) for tok in body.split()]
        except ValueError as exc:
            raise ParameterError(f"cannot parse probability line: {line!r}") from exc
        return cls.from_values(values)


def validate_subset(subset, num_links: int) -> Subset:
    """Check one link subset: nonempty, strictly increasing, within [1, C]."""
    subset = tuple(int(i) for i in subset)
    if len(subset) == 0:
        raise InvalidSubsetError("link subset must be nonempty")
    if any(i < 1 or i > num_links for i in subset):
        raise InvalidSubsetError(
            f"subset {subset} has indices outside [1, {num_links}]"
        )
    if any(a >= b for a, b in zip(subset, subset[1:])):
        raise InvalidSubsetError(f"subset {subset} must be strictly increasing")
    return subset


def complement_subset(subset, num_links: int) -> Subset:
    subset = set(subset)
    return tuple(i for i in range(1, num_links + 1) if i not in subset)


@dataclass(frozen=True)
class SubsetFamily:
    """The class of link subsets the eavesdropper may tap."""

    subsets: tuple
    num_links: int

    def __post_init__(self):
        subs = tuple(validate_subset(s, self.num_links) for s in self.subsets)
        if len(subs) == 0:
            raise InvalidSubsetError("subset family must be nonempty")
        if len(set(subs)) != len(subs):
            raise InvalidSubsetError("subset family contains duplicates")
        object.__setattr__(self, "subsets", subs)

    def __iter__(self):
        return iter(self.subsets)

    def __len__(self):
        return len(self.subsets)

    @classmethod
    def all_subsets_of_size(cls, num_links: int, size: int) -> "SubsetFamily":
        from itertools import combinations

        subs = tuple(combinations(range(1, num_links + 1), size))
        return cls(subs, num_links)

    @classmethod
    def parse(cls, text: str, num_links: int) -> "SubsetFamily":
        """Parse ``1 ; 2`` or ``1,2 ; 1,3 ; 2,3`` (commas inside a subset,
        semicolons between subsets)."""
        body = text.split("=", 1)[1] if "=" in text else text
        subs = []
        for chunk in body.split(";"):
            chunk = chunk.strip()
            if not chunk:
                raise InvalidSubsetError(f"empty subset in {text!r}")
            try:
                subs.append(tuple(int(tok) for tok in chunk.split(",")))
            except ValueError as exc:
                raise InvalidSubsetError(f"cannot parse subset {chunk!r}") from exc
        return cls(tuple(subs), num_links)

    def to_text(self) -> str:
        return "willie_sets = " + " ; ".join(
            ",".join(str(i) for i in s) for s in self.subsets
        )


def projection_table(num_links: int, subset) -> np.ndarray:
    """Map each full symbol to its packed observation on ``subset``.

    Observed bits keep ascending link order, so the smallest tapped link
    index lands in the most significant observed bit.
    """
    subset = validate_subset(subset, num_links)
    symbols = np.arange(1 << num_links, dtype=np.int64)
    observed = np.zeros_like(symbols)
    width = len(subset)
    for pos, link in enumerate(subset):
        bit = (symbols >> (num_links - link)) & 1
        observed |= bit << (width - 1 - pos)
    return observed


@dataclass(frozen=True)
class CodewordMatrix:
    """One transmission: n packed symbols, equivalently a C x n bit matrix."""

    num_links: int
    symbols: tuple

    def __post_init__(self):
        syms = tuple(int(s) for s in self.symbols)
        size = 1 << self.num_links
        if len(syms) == 0:
            raise ParameterError("codeword must have at least one symbol")
        if any(s < 0 or s >= size for s in syms):
            raise ParameterError(f"codeword symbols must lie in [0, {size})")
        object.__setattr__(self, "symbols", syms)

    def __len__(self) -> int:
        return len(self.symbols)

    def bits(self) -> np.ndarray:
        """C x n binary matrix; row i-1 is link i."""
        arr = np.asarray(self.symbols, dtype=np.int64)
        rows = [
            (arr >> (self.num_links - link)) & 1
            for link in range(1, self.num_links + 1)
        ]
        return np.stack(rows)

    @classmethod
    def from_bits(cls, bit_matrix) -> "CodewordMatrix":
        bit_matrix = np.asarray(bit_matrix, dtype=np.int64)
        num_links, _n = bit_matrix.shape
        syms = np.zeros(bit_matrix.shape[1], dtype=np.int64)
        for link in range(1, num_links + 1):
            syms |= bit_matrix[link - 1] << (num_links - link)
        return cls(num_links, tuple(int(s) for s in syms))


@dataclass(frozen=True)
class TransmissionStatus:
    """Alice's status: innocent, or active with a message index."""

    active: bool
    message: int | None = None

    def __post_init__(self):
        if self.active and (self.message is None or self.message < 0):
            raise ParameterError("active status requires a message index >= 0")
        if not self.active and self.message is not None:
            raise ParameterError("innocent status carries no message")

    @classmethod
    def innocent(cls) -> "TransmissionStatus":
        return cls(False, None)

    @classmethod
    def active_with(cls, message: int) -> "TransmissionStatus":
        return cls(True, int(message))


INNOCENT = TransmissionStatus.innocent()


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def marginalize(dist: ScalarDistribution, subset) -> ScalarDistribution:
    """Marginal of a full-alphabet distribution on a link subset.

    The returned vector q satisfies q[a] = sum of dist[c] over full symbols
    c whose bits on the subset's links pack to a.
    """
    num_links = dist.num_links()
    table = projection_table(num_links, subset)
    width = len(validate_subset(subset, num_links))
    out = np.bincount(table, weights=dist.probs, minlength=1 << width)
    return ScalarDistribution(out)


def entropy(dist: ScalarDistribution) -> float:
    """Shannon entropy in bits; 0*log 0 is 0."""
    p = dist.probs[dist.probs > 0]
    return float(-(p * np.log2(p)).sum())


def conditional_entropy(dist: ScalarDistribution, subset) -> float:
    """H(X_{W^c} | X_W) = H(X) - H(X_W) for the packed symbol X."""
    value = entropy(dist) - entropy(marginalize(dist, subset))
    return max(value, 0.0)


def total_variation(p, q) -> float:
    """Total variation distance (1/2)*sum |p - q| between two vectors."""
    p_arr = p.probs if isinstance(p, ScalarDistribution) else np.asarray(p, float)
    q_arr = q.probs if isinstance(q, ScalarDistribution) else np.asarray(q, float)
    if p_arr.shape != q_arr.shape:
        raise IncompatibleSupportError(
            f"distributions have different supports: {p_arr.shape} vs {q_arr.shape}"
        )
    return 0.5 * float(np.abs(p_arr - q_arr).sum())


def binary_entropy(p: float) -> float:
    """H2(p) in bits."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def project_codeword(x: CodewordMatrix, subset) -> CodewordMatrix:
    """Observed sub-codeword on a link subset (per-position bit extraction)."""
    table = projection_table(x.num_links, subset)
    width = len(validate_subset(subset, x.num_links))
    observed = tuple(int(table[s]) for s in x.symbols)
    return CodewordMatrix(width, observed)
