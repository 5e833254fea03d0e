"""Exact computation of the eavesdropper's view.

Audits work on any scheme exposing ``num_links``, ``n``, ``num_messages``
and ``message_observation_mass(subset) -> (keys, cond)`` where ``cond`` is
the exact (messages x observations) matrix of Pr(observed sequence |
message); random-binning codebooks and the appendix reference schemes
(one-time pad, copy scheme, padded one-time pad) all satisfy it, so one
audit path covers them all.

Observation keys are packed like codeword codes (position 0 in the top
bits).  Messages are uniform, so the induced marginal is the column mean
of ``cond`` and Bayes gives posterior/prior = cond / induced.  Only
observations with induced mass above ``mass_floor`` (default 0, meaning
positive mass) enter the hidability ratio range: the definition quantifies
over observed matrices, and an observation that cannot occur is never
observed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .codec import DENSE_AUDIT_CAP, Codebook
from .errors import EnumerationTooLargeError, ParameterError
from .model import (
    INNOCENT,
    CodewordMatrix,
    ScalarDistribution,
    SubsetFamily,
    TransmissionStatus,
    binary_entropy,
    marginalize,
    validate_subset,
)
from .typicality import combine_table, multinomial


# ---------------------------------------------------------------------------
# Core audit primitives
# ---------------------------------------------------------------------------

def induced_marginal(scheme, subset):
    """Exact induced distribution of the observed sequence when active.

    Returns ``(keys, mass)`` over the positive-mass observed sequences,
    via the law of total probability with uniform messages.
    """
    keys, cond = scheme.message_observation_mass(subset)
    return keys, cond.mean(axis=0)


def innocent_sequence_probs(p_innocent: ScalarDistribution, subset,
                            keys: np.ndarray, n: int) -> np.ndarray:
    """i.i.d. product probability of each observed key under the innocent
    marginal for the subset."""
    q = marginalize(p_innocent, subset).probs
    width = len(validate_subset(subset, p_innocent.num_links()))
    syms = kernels.unpack_codes(keys, n, width)
    supported = ~np.any((q == 0)[syms], axis=1)
    with np.errstate(divide="ignore"):
        logq = np.log2(np.where(q > 0, q, 1.0))
    out = np.zeros(keys.shape[0])
    if np.any(supported):
        out[supported] = np.exp2(logq[syms[supported]].sum(axis=1))
    return out


def _subset_tv(scheme, p_innocent: ScalarDistribution, subset) -> float:
    """TV between the innocent product and the induced marginal on one
    subset, over the union of supports."""
    if isinstance(scheme, Codebook) and scheme.rate.num_bins == 1:
        return _single_bin_tv(scheme, p_innocent, subset)
    keys, mass = induced_marginal(scheme, subset)
    q = innocent_sequence_probs(p_innocent, subset, keys, scheme.n)
    # keys outside the induced support contribute their innocent mass
    uncovered = max(0.0, 1.0 - float(q.sum()))
    return 0.5 * float(np.abs(mass - q).sum()) + 0.5 * uncovered


def _single_bin_tv(cb: Codebook, p_innocent: ScalarDistribution,
                   subset) -> float:
    """Exact TV for a one-bin codebook, computed over observed types.

    With a single (message) bin the induced distribution is the active
    product conditioned on the typical set; its observed-sequence mass
    depends only on the observed symbol counts, so the TV collapses to a
    sum over observed count vectors -- no sequence enumeration at all.
    """
    ts = cb.typical
    num_links = cb.num_links
    subset = validate_subset(subset, num_links)
    width = len(subset)
    obs_size = 1 << width
    table = combine_table(num_links, subset)

    class_probs = ts.class_sequence_probs(cb.p_active)
    groups: dict[tuple, float] = {}
    for t, p_cls in zip(ts.types, class_probs):
        mat = np.asarray(t.counts, dtype=np.int64)[table]  # (obs, hid) counts
        nu = tuple(int(v) for v in mat.sum(axis=1))
        # sequences of this class per observed key with counts nu
        per_key = 1
        for a in range(obs_size):
            per_key *= multinomial(int(mat[a].sum()), mat[a])
        groups[nu] = groups.get(nu, 0.0) + float(per_key) * float(p_cls)

    p_typ = ts.probability()
    q = marginalize(p_innocent, subset).probs
    tv = 0.0
    q_covered = 0.0
    for nu, f in groups.items():
        num_keys = float(multinomial(ts.n, nu))
        q_key = 1.0
        for a, k in enumerate(nu):
            if k:
                q_key = q_key * float(q[a]) ** k if q[a] > 0 else 0.0
        tv += num_keys * abs(f / p_typ - q_key)
        q_covered += num_keys * q_key
    return 0.5 * tv + 0.5 * max(0.0, 1.0 - q_covered)


@dataclass(frozen=True)
class AuditReport:
    """Measured deniability, hidability, and leakage of one scheme."""

    subsets: tuple
    tv_per_subset: tuple
    worst_subset: tuple
    worst_tv: float
    ratio_per_subset: tuple  # (min, max) per subset
    ratio_min: float
    ratio_max: float
    leakage_per_subset: tuple  # bits
    leakage_max: float
    num_messages: int
    message_bits: float
    mass_floor: float
    eps_hidability: float
    secrecy_bound: float
    secrecy_bound_holds: bool

    def to_dict(self) -> dict:
        return {
            "subsets": [list(s) for s in self.subsets],
            "tv_per_subset": list(self.tv_per_subset),
            "worst_subset": list(self.worst_subset),
            "worst_tv": self.worst_tv,
            "ratio_per_subset": [list(r) for r in self.ratio_per_subset],
            "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max,
            "leakage_per_subset": list(self.leakage_per_subset),
            "leakage_max": self.leakage_max,
            "num_messages": self.num_messages,
            "message_bits": self.message_bits,
            "mass_floor": self.mass_floor,
            "eps_hidability": self.eps_hidability,
            "secrecy_bound": self.secrecy_bound,
            "secrecy_bound_holds": self.secrecy_bound_holds,
        }


def deniability_report(scheme, p_innocent: ScalarDistribution,
                       family: SubsetFamily):
    """Per-subset TV against the innocent product; the max is the scheme's
    deniability parameter."""
    tvs = [_subset_tv(scheme, p_innocent, w) for w in family]
    worst = int(np.argmax(tvs))
    return tuple(tvs), family.subsets[worst], tvs[worst]


def hidability_report(scheme, family: SubsetFamily, mass_floor: float = 0.0):
    """Range of posterior/prior ratios over (message, observation) pairs
    with induced observation mass above ``mass_floor``."""
    ranges = []
    for w in family:
        keys, cond = scheme.message_observation_mass(w)
        induced = cond.mean(axis=0)
        cols = induced > mass_floor
        if not np.any(cols):
            ranges.append((1.0, 1.0))
            continue
        ratios = cond[:, cols] / induced[cols][None, :]
        ranges.append((float(ratios.min()), float(ratios.max())))
    overall = (min(r[0] for r in ranges), max(r[1] for r in ranges))
    return tuple(ranges), overall


def mutual_information_leakage(scheme, subset) -> float:
    """I(M; X_W) in bits, by exact enumeration of the joint distribution."""
    keys, cond = scheme.message_observation_mass(subset)
    m_count = cond.shape[0]
    joint = cond / m_count
    induced = joint.sum(axis=0)
    prior = 1.0 / m_count
    mask = joint > 0
    denom = prior * np.broadcast_to(induced, joint.shape)[mask]
    ratio = joint[mask] / denom
    return max(float((joint[mask] * np.log2(ratio)).sum()), 0.0)


def secrecy_bound(eps_h: float, message_bits: float) -> float:
    """Leakage ceiling implied by an eps_h-bounded posterior/prior ratio:
    eps_h * message_bits + (1 - eps_h) * log2(1 + eps_h)."""
    return eps_h * message_bits + (1.0 - eps_h) * math.log2(1.0 + eps_h)


def audit(scheme, p_innocent: ScalarDistribution, family: SubsetFamily,
          mass_floor: float = 0.0) -> AuditReport:
    """Full audit: deniability TVs, hidability ratio range, exact leakage,
    and the hidability-implies-secrecy bound check."""
    tvs, worst_subset, worst_tv = deniability_report(scheme, p_innocent, family)
    ranges, (r_min, r_max) = hidability_report(scheme, family, mass_floor)
    leaks = tuple(mutual_information_leakage(scheme, w) for w in family)
    m_bits = math.log2(scheme.num_messages)
    eps_h = max(r_max - 1.0, 1.0 - r_min, 0.0)
    bound = secrecy_bound(eps_h, m_bits)
    return AuditReport(
        subsets=family.subsets,
        tv_per_subset=tvs,
        worst_subset=worst_subset,
        worst_tv=worst_tv,
        ratio_per_subset=ranges,
        ratio_min=r_min,
        ratio_max=r_max,
        leakage_per_subset=leaks,
        leakage_max=max(leaks),
        num_messages=scheme.num_messages,
        message_bits=m_bits,
        mass_floor=mass_floor,
        eps_hidability=eps_h,
        secrecy_bound=bound,
        secrecy_bound_holds=max(leaks) <= bound + 1e-9,
    )


# ---------------------------------------------------------------------------
# Reference schemes (appendix counterexamples), first-class encoders
# ---------------------------------------------------------------------------

def _message_bit(m: int, t: int, n: int) -> int:
    return (m >> (n - 1 - t)) & 1


class _ReferenceScheme:
    """Shared plumbing: n-bit uniform messages, packed observations."""

    num_links: int
    n: int

    @property
    def num_messages(self) -> int:
        return 1 << self.n

    def _check_dense(self, num_keys: int):
        if self.num_messages * num_keys > DENSE_AUDIT_CAP:
            raise EnumerationTooLargeError(
                f"reference-scheme audit of {self.num_messages} x {num_keys} "
                f"entries exceeds the dense cap"
            )


class OneTimePadScheme(_ReferenceScheme):
    """Shannon's pad on two links: key on top, message XOR key on bottom.

    Perfectly hidable (the pad), but induces the uniform distribution on
    every link, so it is deniable only for near-uniform innocent marginals.
    """

    def __init__(self, n: int):
        self.num_links = 2
        self.n = int(n)

    def message_observation_mass(self, subset):
        subset = validate_subset(subset, self.num_links)
        size = 1 << self.n
        if subset in ((1,), (2,)):
            self._check_dense(size)
            keys = np.arange(size, dtype=np.uint64)
            cond = np.full((size, size), 1.0 / size)
            return keys, cond
        # full observation: pairs (k, k^m) interleaved per position
        self._check_dense(size * size)
        keys = np.arange(size * size, dtype=np.uint64)  # placeholder order
        cond = np.zeros((size, size * size))
        for m in range(size):
            for k in range(size):
                code = 0
                for t in range(self.n):
                    top = (k >> (self.n - 1 - t)) & 1
                    bot = ((m ^ k) >> (self.n - 1 - t)) & 1
                    code = (code << 2) | (top << 1) | bot
                cond[m, code] += 1.0 / size
        mask = cond.sum(axis=0) > 0
        return keys[mask], cond[:, mask]

    def encode(self, message: int, rng: np.random.Generator) -> CodewordMatrix:
        if not 0 <= message < self.num_messages:
            raise ParameterError(f"message {message} out of range")
        key = int(rng.integers(0, self.num_messages))
        symbols = []
        for t in range(self.n):
            top = _message_bit(key, t, self.n)
            bot = _message_bit(message ^ key, t, self.n)
            symbols.append((top << 1) | bot)
        return CodewordMatrix(2, tuple(symbols))

    def decode(self, received: CodewordMatrix) -> TransmissionStatus:
        bits = received.bits()
        m = 0
        for t in range(self.n):
            m = (m << 1) | (int(bits[0, t]) ^ int(bits[1, t]))
        return TransmissionStatus.active_with(m)


class CopyScheme(_ReferenceScheme):
    """The message bit copied verbatim on every link.

    Deniable when the innocent traffic is equal bits on all links with a
    fair marginal, but the observation determines the message outright.
    """

    def __init__(self, num_links: int, n: int):
        self.num_links = int(num_links)
        self.n = int(n)

    def _observed_key(self, message: int, width: int) -> int:
        all_ones = (1 << width) - 1
        code = 0
        for t in range(self.n):
            code = (code << width) | (all_ones * _message_bit(message, t, self.n))
        return code

    def message_observation_mass(self, subset):
        subset = validate_subset(subset, self.num_links)
        width = len(subset)
        size = self.num_messages
        self._check_dense(size)
        keys = np.asarray(
            sorted(self._observed_key(m, width) for m in range(size)),
            dtype=np.uint64,
        )
        cond = np.zeros((size, size))
        order = {int(k): j for j, k in enumerate(keys)}
        for m in range(size):
            cond[m, order[self._observed_key(m, width)]] = 1.0
        return keys, cond

    def encode(self, message: int, rng=None) -> CodewordMatrix:
        if not 0 <= message < self.num_messages:
            raise ParameterError(f"message {message} out of range")
        all_ones = (1 << self.num_links) - 1
        symbols = tuple(
            all_ones * _message_bit(message, t, self.n) for t in range(self.n)
        )
        return CodewordMatrix(self.num_links, symbols)

    def decode(self, received: CodewordMatrix) -> TransmissionStatus:
        bits = received.bits()
        if not np.all(bits == bits[0]):
            return INNOCENT
        m = 0
        for t in range(self.n):
            m = (m << 1) | int(bits[0, t])
        return TransmissionStatus.active_with(m)


class PaddedOneTimePadScheme(_ReferenceScheme):
    """One-time pad with a special message set D copied in the clear.

    Messages in D (the first |D| n-bit sequences) go verbatim on both
    links; other messages are padded with a key drawn uniformly from D's
    complement.  Strongly secure for small |D| yet catastrophically
    non-hidable on D.
    """

    def __init__(self, n: int, special_size: int):
        self.num_links = 2
        self.n = int(n)
        d = int(special_size)
        if not 1 <= d < (1 << self.n):
            raise ParameterError(
                f"special set size must be in [1, 2^n), got {d}"
            )
        self.special_size = d

    def message_observation_mass(self, subset):
        subset = validate_subset(subset, self.num_links)
        if len(subset) != 1:
            raise EnumerationTooLargeError(
                "padded-pad audit supports single-link observations"
            )
        link = subset[0]
        size = self.num_messages
        d = self.special_size
        self._check_dense(size)
        keys = np.arange(size, dtype=np.uint64)
        cond = np.zeros((size, size))
        uniform = 1.0 / (size - d)
        for m in range(size):
            if m < d:
                cond[m, m] = 1.0  # both links carry m itself
            elif link == 1:
                cond[m, d:] = uniform  # key, drawn from D^c
            else:
                # m XOR key, key uniform over D^c
                cols = np.fromiter(
                    (m ^ k for k in range(d, size)), dtype=np.int64
                )
                cond[m, cols] = uniform
        return keys, cond

    def encode(self, message: int, rng: np.random.Generator) -> CodewordMatrix:
        if not 0 <= message < self.num_messages:
            raise ParameterError(f"message {message} out of range")
        size = self.num_messages
        if message < self.special_size:
            top = bot = message
        else:
            key = int(rng.integers(self.special_size, size))
            top, bot = key, message ^ key
        symbols = tuple(
            (_message_bit(top, t, self.n) << 1) | _message_bit(bot, t, self.n)
            for t in range(self.n)
        )
        return CodewordMatrix(2, symbols)

    def decode(self, received: CodewordMatrix) -> TransmissionStatus:
        bits = received.bits()
        top = bot = 0
        for t in range(self.n):
            top = (top << 1) | int(bits[0, t])
            bot = (bot << 1) | int(bits[1, t])
        if top < self.special_size:
            return TransmissionStatus.active_with(top)
        return TransmissionStatus.active_with(top ^ bot)


# ---------------------------------------------------------------------------
# Appendix demonstrations
# ---------------------------------------------------------------------------

def padded_scheme_example(n: int, delta: float) -> dict:
    """Exact leakage of the padded pad versus its closed form.

    The special set size is round(2**(n*delta)), recorded in the output
    along with the effective delta after rounding.  Leakage on the top link
    is computed by exact enumeration over observations (the posterior given
    an observation in D is a point mass; given one outside D it is uniform
    on D's complement) and compared against
    H2(|D|/2^n) + (|D|/2^n) * log2(|D|).
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    d = round(2 ** (n * delta))
    if not 1 <= d < (1 << n):
        raise ParameterError(
            f"2^(n*delta) = {2 ** (n * delta):.3f} rounds to {d}, "
            f"outside [1, 2^n)"
        )
    size = 1 << n
    q = d / size

    # Enumeration over the 2^n observations on the top link: each key in D
    # pins the message (posterior entropy 0) and carries induced mass 1/2^n;
    # each key outside D leaves the message uniform on D's complement.
    leakage = 0.0
    message_entropy = float(n)
    for obs in range(size):
        induced_mass = 1.0 / size
        posterior_entropy = 0.0 if obs < d else math.log2(size - d)
        leakage += induced_mass * (message_entropy - posterior_entropy)

    formula = binary_entropy(q) + q * math.log2(d)
    return {
        "n": n,
        "delta_requested": delta,
        "special_size": d,
        "delta_effective": math.log2(d) / n,
        "leakage_exact": leakage,
        "leakage_formula": formula,
        "max_ratio": float(size),
        "ratio_min": 0.0,
    }


def copy_scheme_example(C: int, n: int, family: SubsetFamily) -> AuditReport:
    """Full audit of the copy scheme under its natural innocent traffic
    (equal mass on the all-zeros and all-ones symbols)."""
    probs = np.zeros(1 << C)
    probs[0] = probs[-1] = 0.5
    innocent = ScalarDistribution(probs)
    return audit(CopyScheme(C, n), innocent, family)
