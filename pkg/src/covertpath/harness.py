"""Configuration ingestion, experiment orchestration, lemma verification.

Configs are line-oriented UTF-8 ``key = value`` text (diff-able, no parser
dependency); blank lines and ``#`` comments are ignored.  Core keys:

    num_links, block_length, probs, willie_sets, mode, epsilon, seed,
    trials, method

plus optional operating-point keys: ``num_bins``, ``num_message_bins``,
``binning_rate``, ``allow_super_rate``, ``mass_floor``, ``mc_samples``,
``lemma_bins``, ``lemma4_bins``, ``lemma4_targets``.

Trial i always derives its seed from (master seed, i) alone, so runs are
reproducible and order-insensitive, and repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import __version__, kernels
from .adversary import audit
from .codec import (
    Codebook,
    build_codebook,
    rate_ceiling,
    reliability_report,
    slack_floor,
)
from .errors import ConfigurationError, ParameterError
from .maxent import hidable_capacity
from .model import (
    LinkSystem,
    ScalarDistribution,
    SubsetFamily,
    marginalize,
    projection_table,
    validate_subset,
)
from .typicality import (
    TypicalSet,
    combine_table,
    conditional_slack,
    default_epsilon,
    multinomial,
)

_CORE_KEYS = {
    "num_links", "block_length", "probs", "willie_sets", "mode", "epsilon",
    "seed", "trials", "method",
}
_EXTRA_KEYS = {
    "num_bins", "num_message_bins", "binning_rate", "allow_super_rate",
    "mass_floor", "mc_samples", "lemma_bins", "lemma4_bins", "lemma4_targets",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed experiment description plus its canonical text and hash."""

    system: LinkSystem
    innocent: ScalarDistribution
    family: SubsetFamily
    mode: str = "deniable"
    epsilon: float | None = None
    seed: int = 0
    trials: int = 1
    method: str = "exact"
    num_bins: int | None = None
    num_message_bins: int | None = None
    binning_rate: float | None = None
    allow_super_rate: bool = False
    mass_floor: float = 0.0
    mc_samples: int = 10_000
    lemma_bins: int = 32
    lemma4_bins: int = 8
    lemma4_targets: int = 4
    text: str = ""

    def __post_init__(self):
        if self.mode not in ("deniable", "hidable"):
            raise ConfigurationError(f"mode must be deniable|hidable, got {self.mode!r}")
        if self.method not in ("exact", "monte_carlo"):
            raise ConfigurationError(
                f"method must be exact|monte_carlo, got {self.method!r}"
            )
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if len(self.innocent) != self.system.alphabet_size:
            raise ConfigurationError(
                f"probs has length {len(self.innocent)}, expected "
                f"{self.system.alphabet_size} for {self.system.num_links} links"
            )

    @property
    def effective_epsilon(self) -> float:
        if self.epsilon is not None:
            return self.epsilon
        return default_epsilon(self.system.block_length)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()[:16]


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse the key = value format into an ExperimentConfig."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in _CORE_KEYS | _EXTRA_KEYS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        values[key] = val

    for required in ("num_links", "block_length", "probs", "willie_sets"):
        if required not in values:
            raise ConfigurationError(f"missing required key {required!r}")

    def _int(key, default=None):
        if key not in values:
            return default
        try:
            return int(values[key])
        except ValueError as exc:
            raise ConfigurationError(f"key {key!r} must be an integer") from exc

    def _float(key, default=None):
        if key not in values:
            return default
        try:
            return float(values[key])
        except ValueError as exc:
            raise ConfigurationError(f"key {key!r} must be a number") from exc

    def _bool(key, default=False):
        if key not in values:
            return default
        val = values[key].lower()
        if val in ("1", "true", "yes", "on"):
            return True
        if val in ("0", "false", "no", "off"):
            return False
        raise ConfigurationError(f"key {key!r} must be a boolean")

    try:
        system = LinkSystem(_int("num_links"), _int("block_length"))
        innocent = ScalarDistribution.parse(values["probs"])
        family = SubsetFamily.parse(values["willie_sets"], system.num_links)
    except ParameterError as exc:
        raise ConfigurationError(str(exc)) from exc

    return ExperimentConfig(
        system=system,
        innocent=innocent,
        family=family,
        mode=values.get("mode", "deniable"),
        epsilon=_float("epsilon"),
        seed=_int("seed", 0),
        trials=_int("trials", 1),
        method=values.get("method", "exact"),
        num_bins=_int("num_bins"),
        num_message_bins=_int("num_message_bins"),
        binning_rate=_float("binning_rate"),
        allow_super_rate=_bool("allow_super_rate"),
        mass_floor=_float("mass_floor", 0.0),
        mc_samples=_int("mc_samples", 10_000),
        lemma_bins=_int("lemma_bins", 32),
        lemma4_bins=_int("lemma4_bins", 8),
        lemma4_targets=_int("lemma4_targets", 4),
        text=text,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc


def _meta(cfg: ExperimentConfig) -> dict:
    return {
        "config_hash": cfg.config_hash,
        "master_seed": cfg.seed,
        "versions": {"covertpath": __version__, "kernels": kernels.BACKEND},
    }


def build_trial_codebook(cfg: ExperimentConfig, trial_seed: int) -> Codebook:
    """Active distribution from the capacity solver, then a binned codebook
    at the config's operating point."""
    cap = hidable_capacity(cfg.innocent, cfg.family)
    return build_codebook(
        cap.optimizer,
        cfg.system.block_length,
        cfg.effective_epsilon,
        cfg.mode,
        cfg.family,
        trial_seed,
        num_bins=cfg.num_bins,
        num_message_bins=cfg.num_message_bins,
        binning_rate=cfg.binning_rate,
    )


def run_experiment(cfg: ExperimentConfig) -> dict:
    """capacity -> typical set -> codec -> adversary, one record per trial."""
    cap = hidable_capacity(cfg.innocent, cfg.family)
    report = {
        "meta": _meta(cfg),
        "capacity": {
            "deniable_capacity": cap.deniable_capacity,
            "hidable_capacity": cap.hidable_capacity,
            "optimizer": [float(p) for p in cap.optimizer.probs],
            "binding_subset": list(cap.binding_subset),
            "iterations": cap.iterations,
            "residual": cap.residual,
        },
        "trials": [],
    }
    n = cfg.system.block_length
    eps = cfg.effective_epsilon
    shared_typical = TypicalSet(cap.optimizer, n, eps)
    for trial in range(cfg.trials):
        trial_seed = kernels.derive_seed(cfg.seed, trial)
        cb = build_codebook(
            cap.optimizer, n, eps, cfg.mode, cfg.family, trial_seed,
            num_bins=cfg.num_bins,
            num_message_bins=cfg.num_message_bins,
            binning_rate=cfg.binning_rate,
            typical=shared_typical,
        )
        rel = reliability_report(
            cb, cfg.innocent, cfg.method,
            trials=cfg.mc_samples, mc_seed=kernels.derive_seed(trial_seed, 1),
        )
        audit_rep = audit(cb, cfg.innocent, cfg.family, cfg.mass_floor)
        report["trials"].append({
            "trial": trial,
            "trial_seed": trial_seed,
            "codebook": {
                "num_bins": cb.rate.num_bins,
                "num_message_bins": cb.rate.num_message_bins,
                "binning_rate": cb.rate.binning_rate,
                "message_rate": cb.rate.message_rate,
                "typical_sequences": cb.typical.total_count,
                "epsilon": eps,
                "effective_seed": cb.seed,
            },
            "reliability": {
                "false_active": rel.false_active,
                "false_active_binning_expectation":
                    rel.false_active_binning_expectation,
                "missed_detection": rel.missed_detection,
                "wrong_message": rel.wrong_message,
                "total": rel.total,
                "method": rel.method,
            },
            "audit": audit_rep.to_dict(),
        })
    return report


def write_jsonl(report: dict, path) -> None:
    """One JSON line per trial, each carrying the meta block."""
    with open(path, "w", encoding="utf-8") as fh:
        for trial in report["trials"]:
            record = {"meta": report["meta"], "capacity": report["capacity"],
                      **trial}
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def write_csv_summary(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "trial", "trial_seed", "num_bins", "num_message_bins",
            "false_active", "worst_tv", "ratio_min", "ratio_max",
            "leakage_max",
        ])
        for t in report["trials"]:
            writer.writerow([
                t["trial"], t["trial_seed"],
                t["codebook"]["num_bins"], t["codebook"]["num_message_bins"],
                t["reliability"]["false_active"],
                t["audit"]["worst_tv"],
                t["audit"]["ratio_min"], t["audit"]["ratio_max"],
                t["audit"]["leakage_max"],
            ])


# ---------------------------------------------------------------------------
# Lemma-verification suite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LemmaSuiteReport:
    """Empirical concentration statistics with their Chernoff thresholds.

    The asymptotic statements carry no finite-n pass levels; each lemma's
    threshold is computed here from the finite-n Chernoff expression at the
    realized expectations (clamped at zero when vacuous at desk scale) and
    recorded next to the measured pass fraction.
    """

    lemma1: dict
    lemma2: dict
    lemma3: dict
    lemma4: dict
    parameters: dict

    def to_dict(self) -> dict:
        return {
            "lemma1": self.lemma1,
            "lemma2": self.lemma2,
            "lemma3": self.lemma3,
            "lemma4": self.lemma4,
            "parameters": self.parameters,
        }

    def passes(self) -> bool:
        return (
            self.lemma1["pass_fraction"] >= self.lemma1["threshold"]
            and self.lemma2["pass_fraction"] >= self.lemma2["threshold"]
            and self.lemma3["pass_fraction"] == 1.0
            and self.lemma4["pass_fraction"] >= self.lemma4["threshold"]
        )


def _chernoff_pair_bound(eps: float, expectation: float) -> float:
    """P(|N - E| > eps*E) <= 2*exp(-eps^2*E/3), clamped to [0, 1]."""
    return min(1.0, 2.0 * math.exp(-eps * eps * expectation / 3.0))


def _validate_lemma_rates(cfg: ExperimentConfig, p_active, n, eps, num_bins,
                          mode: str) -> dict:
    """Enforce the binning-rate cap unless the contrast flag is set.

    The hard cap is the entropy ceiling the rate formulas subtract from; a
    rate above it breaks the concentration lemmas outright.  The full
    finite-n condition (rate <= ceiling - slack) is additionally reported,
    since at desk scale the slack term always exceeds the ceiling.
    """
    ceiling = rate_ceiling(p_active, cfg.family, mode)
    slack = slack_floor(p_active.num_links(), n, eps, mode)
    realized = math.log2(num_bins) / n
    if realized > ceiling + 1e-12 and not cfg.allow_super_rate:
        raise ConfigurationError(
            f"binning rate log2({num_bins})/{n} = {realized:.4f} exceeds the "
            f"entropy ceiling {ceiling:.4f}; the concentration condition "
            f"requires rate <= ceiling - slack (slack floor {slack:.4f}). "
            f"Set allow_super_rate to run the contrast experiment."
        )
    return {
        "rate": realized,
        "ceiling": ceiling,
        "slack_floor": slack,
        "meets_asymptotic_condition": realized <= ceiling - slack,
        "super_rate": realized > ceiling,
    }


def run_lemma_suite(cfg: ExperimentConfig) -> LemmaSuiteReport:
    """Empirically verify the four binning/typicality concentration claims."""
    n = cfg.system.block_length
    eps = cfg.effective_epsilon
    num_links = cfg.system.num_links
    cap = hidable_capacity(cfg.innocent, cfg.family)
    p_active = cap.optimizer

    bins12 = cfg.num_bins if cfg.num_bins is not None else cfg.lemma_bins
    rate_info = _validate_lemma_rates(cfg, p_active, n, eps, bins12, cfg.mode)
    rate4_info = _validate_lemma_rates(
        cfg, p_active, n, eps, cfg.lemma4_bins, "hidable"
    )

    seeds = [kernels.derive_seed(cfg.seed, i) for i in range(cfg.trials)]
    shared_typical = TypicalSet(p_active, n, eps)

    lemma1 = _lemma1_stats(cfg, p_active, n, eps, bins12, seeds, shared_typical)
    lemma2 = _lemma2_stats(cfg, p_active, n, eps, bins12, seeds, shared_typical)
    lemma3 = _lemma3_stats(cfg, p_active, n, eps, shared_typical)
    lemma4 = _lemma4_stats(cfg, p_active, n, eps, cfg.lemma4_bins, seeds,
                           shared_typical)

    params = {
        "n": n,
        "epsilon": eps,
        "num_links": num_links,
        "seeds": len(seeds),
        "lemma12_bins": bins12,
        "lemma4_bins": cfg.lemma4_bins,
        "rate_check": rate_info,
        "rate_check_lemma4": rate4_info,
    }
    return LemmaSuiteReport(lemma1, lemma2, lemma3, lemma4, params)


def _lemma_bins(typical: TypicalSet, seed: int, num_bins: int) -> np.ndarray:
    """Raw bin assignment for the lemma statistics.

    Deliberately bypasses build_codebook: the suite measures the binning
    process itself (empty bins are data, e.g. in the super-rate contrast),
    not the codec's operational empty-bin retry contract.
    """
    codes, _ = typical.materialize()
    return kernels.assign_bins(seed, 0, codes.shape[0], num_bins)


def _lemma1_stats(cfg, p_active, n, eps, num_bins, seeds, typical) -> dict:
    """Per-type occupancy of message bins vs its mean, within a 1 +/- eps band."""
    num_message_bins = max(1, num_bins // n)
    _, type_ids = typical.materialize()
    sizes = np.asarray([float(s) for s in typical.sizes])
    expected = sizes[:, None] / num_bins
    passes = 0
    samples = 0
    worst_rel_dev = 0.0
    for seed in seeds:
        bins = _lemma_bins(typical, seed, num_bins)
        mask = bins < num_message_bins
        flat = type_ids[mask] * num_message_bins + bins[mask]
        counts = np.bincount(
            flat, minlength=len(typical.types) * num_message_bins
        ).reshape(len(typical.types), num_message_bins).astype(float)
        dev = np.abs(counts - expected)
        ok = dev <= eps * expected
        passes += int(ok.sum())
        samples += ok.size
        worst_rel_dev = max(worst_rel_dev, float((dev / expected).max()))
    bounds = [
        _chernoff_pair_bound(eps, e)
        for e in expected[:, 0]
        for _ in range(num_message_bins)
    ]
    threshold = max(0.0, 1.0 - float(np.mean(bounds)))
    return {
        "pass_fraction": passes / samples,
        "threshold": threshold,
        "samples": samples,
        "worst_relative_deviation": worst_rel_dev,
        "num_message_bins": num_message_bins,
    }


def _lemma2_stats(cfg, p_active, n, eps, num_bins, seeds, typical) -> dict:
    """Bin probability masses against the (1 +/- eps1)/num_bins band.

    The band's location presumes bin masses averaging 1/num_bins; the
    realized mean is typical_mass/num_bins, so the threshold is zero
    whenever the typical mass itself falls outside 1 +/- eps1 (the band
    then cannot be met and the statistic only documents that).
    """
    eps1 = eps + (1 - eps) * 2 ** (cfg.system.num_links + 1) * math.exp(
        -2 * eps * eps * n
    )
    lo = (1 - eps1) / num_bins
    hi = (1 + eps1) / num_bins
    _, type_ids = typical.materialize()
    weights = typical.class_sequence_probs(p_active)[type_ids]
    typ_mass = typical.probability()
    passes = 0
    samples = 0
    for seed in seeds:
        bins = _lemma_bins(typical, seed, num_bins)
        masses = np.bincount(bins, weights=weights, minlength=num_bins)
        passes += int(((masses >= lo) & (masses <= hi)).sum())
        samples += masses.size
    sizes = np.asarray([float(s) for s in typical.sizes])
    concentration = min(
        1.0,
        float(sum(_chernoff_pair_bound(eps, s / num_bins) for s in sizes)),
    )
    mean_in_band = (1 - eps1) <= typ_mass <= (1 + eps1)
    threshold = max(0.0, 1.0 - concentration) if mean_in_band else 0.0
    return {
        "pass_fraction": passes / samples,
        "threshold": threshold,
        "samples": samples,
        "epsilon1": eps1,
        "band": [lo, hi],
        "typical_mass": typ_mass,
        "mean_in_band": mean_in_band,
    }


def _lemma3_stats(cfg, p_active, n, eps, typical) -> dict:
    """Typical projections are marginally/conditionally typical: exhaustive
    and deterministic over (admitted type, subset) pairs."""
    ts = typical
    passes = 0
    samples = 0
    for w in cfg.family:
        w = validate_subset(w, cfg.system.num_links)
        width = len(w)
        obs_size = 1 << width
        hid_size = (1 << cfg.system.num_links) // obs_size
        table = combine_table(cfg.system.num_links, w)
        p_w = marginalize(p_active, w).probs
        joint = p_active.probs[table]  # (obs, hid)
        slack_m = eps / obs_size
        slack_c = conditional_slack(eps, obs_size, hid_size)
        for t in ts.types:
            mat = np.asarray(t.counts, dtype=np.int64)[table]
            nu = mat.sum(axis=1)
            ok = True
            for a in range(obs_size):
                if p_w[a] > 0:
                    if abs(nu[a] / n - p_w[a]) > slack_m + 1e-12:
                        ok = False
                elif nu[a] != 0:
                    ok = False
                for b in range(mat.shape[1]):
                    cond = joint[a, b] / p_w[a] if p_w[a] > 0 else 0.0
                    if cond > 0:
                        if abs(mat[a, b] / n - cond * nu[a] / n) > slack_c + 1e-12:
                            ok = False
                    elif mat[a, b] != 0:
                        ok = False
            passes += int(ok)
            samples += 1
    return {
        "pass_fraction": passes / samples,
        "threshold": 1.0,
        "samples": samples,
    }


def _lemma4_stats(cfg, p_active, n, eps, num_bins, seeds, typical) -> dict:
    """Conditional-type occupancy per bin for the highest-mass observations."""
    passes = 0
    samples = 0
    bounds = []
    # projections and targets are seed-independent; compute them once
    ts = typical
    codes, type_ids = ts.materialize()
    per_subset = []
    for w in cfg.family:
        w = validate_subset(w, cfg.system.num_links)
        width = len(w)
        table_full = projection_table(cfg.system.num_links, w).astype(np.uint64)
        proj = kernels.project_codes(codes, n, cfg.system.num_links,
                                     table_full, width)
        keys, inverse = np.unique(proj, return_inverse=True)
        mass = np.bincount(
            inverse, weights=ts.class_sequence_probs(p_active)[type_ids]
        )
        targets = keys[np.argsort(mass)[::-1][: cfg.lemma4_targets]]
        ctable = combine_table(cfg.system.num_links, w)
        rows_per_target = [
            (proj == key, _observed_counts(int(key), n, width))
            for key in targets
        ]
        per_subset.append((ctable, rows_per_target))

    for seed in seeds:
        bins = _lemma_bins(typical, seed, num_bins)
        for ctable, rows_per_target in per_subset:
            for rows, obs_counts in rows_per_target:
                flat = type_ids[rows] * num_bins + bins[rows]
                realized = np.bincount(
                    flat, minlength=len(ts.types) * num_bins
                ).reshape(len(ts.types), num_bins)
                for ti, t in enumerate(ts.types):
                    mat = np.asarray(t.counts, dtype=np.int64)[ctable]
                    if not np.array_equal(mat.sum(axis=1), obs_counts):
                        continue  # conditional type incompatible with key
                    size_cond = 1
                    for a in range(mat.shape[0]):
                        size_cond *= multinomial(int(obs_counts[a]), mat[a])
                    expected = size_cond / num_bins
                    dev = np.abs(realized[ti] - expected)
                    ok = dev <= eps * expected
                    passes += int(ok.sum())
                    samples += realized.shape[1]
                    if seed == seeds[0]:
                        bounds.append(_chernoff_pair_bound(eps, expected))
    threshold = max(0.0, 1.0 - float(np.mean(bounds))) if bounds else 0.0
    return {
        "pass_fraction": passes / samples if samples else 1.0,
        "threshold": threshold,
        "samples": samples,
    }


def _observed_counts(key: int, n: int, width: int) -> np.ndarray:
    counts = np.zeros(1 << width, dtype=np.int64)
    for sym in kernels.unpack_code(key, n, width):
        counts[sym] += 1
    return counts
