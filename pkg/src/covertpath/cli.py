"""Command-line interface.

Subcommands: capacity, typical, codebook, encode, audit, reliability,
verify-lemmas, demo-appendix, experiment.  Each takes ``--config`` (the
line-oriented key = value file), optional ``--seed``, ``--out``, and
``--format json|csv``.  Exit codes: 0 success, 2 configuration error,
3 convergence/feasibility error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import kernels
from .adversary import audit, copy_scheme_example, padded_scheme_example
from .codec import build_codebook, encode, reliability_report
from .errors import ConfigurationError, CovertPathError, FeasibilityError
from .harness import (
    ExperimentConfig,
    build_trial_codebook,
    load_config,
    run_experiment,
    run_lemma_suite,
    write_csv_summary,
    write_jsonl,
)
from .maxent import hidable_capacity
from .model import SubsetFamily
from .typicality import TypicalSet


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def cmd_capacity(args) -> int:
    cfg = load_config(args.config)
    result = hidable_capacity(cfg.innocent, cfg.family)
    payload = {
        "deniable_capacity": result.deniable_capacity,
        "hidable_capacity": result.hidable_capacity,
        "optimizer": [float(p) for p in result.optimizer.probs],
        "binding_subset": list(result.binding_subset),
        "residual": result.residual,
        "iterations": result.iterations,
    }
    _emit(_json(payload), args.out)
    return 0


def cmd_typical(args) -> int:
    cfg = load_config(args.config)
    result = hidable_capacity(cfg.innocent, cfg.family)
    ts = TypicalSet(result.optimizer, cfg.system.block_length,
                    cfg.effective_epsilon)
    if args.dump:
        probs = ts.class_sequence_probs(ts.base)
        with open(args.dump, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["counts", "size", "probability_mass"])
            for t, size, p_seq in zip(ts.types, ts.sizes, probs):
                writer.writerow([
                    " ".join(str(k) for k in t.counts),
                    size,
                    float(size) * float(p_seq),
                ])
    payload = {
        "num_types": len(ts.types),
        "total_sequences": ts.total_count,
        "probability_mass": ts.probability(),
        "epsilon": ts.eps,
    }
    _emit(_json(payload), args.out)
    return 0


def cmd_codebook(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    cb = build_trial_codebook(cfg, seed)
    if args.dump:
        bins = cb.bin_assignments()
        with open(args.dump, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sequence_index", "bin"])
            for idx, b in enumerate(bins):
                writer.writerow([idx, int(b)])
    payload = {
        "num_bins": cb.rate.num_bins,
        "num_message_bins": cb.rate.num_message_bins,
        "binning_rate": cb.rate.binning_rate,
        "message_rate": cb.rate.message_rate,
        "typical_sequences": cb.typical.total_count,
        "seed": cb.seed,
        "mode": cb.mode,
    }
    _emit(_json(payload), args.out)
    return 0


def cmd_encode(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    cb = build_trial_codebook(cfg, seed)
    rng = np.random.default_rng(kernels.derive_seed(seed, 1 + args.message))
    x = encode(cb, args.message, rng)
    _emit(" ".join(str(s) for s in x.symbols), args.out)
    return 0


def cmd_reliability(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    cb = build_trial_codebook(cfg, seed)
    rel = reliability_report(
        cb, cfg.innocent, cfg.method, trials=cfg.mc_samples,
        mc_seed=kernels.derive_seed(seed, 1),
    )
    payload = {
        "false_active": rel.false_active,
        "false_active_binning_expectation":
            rel.false_active_binning_expectation,
        "missed_detection": rel.missed_detection,
        "wrong_message": rel.wrong_message,
        "total": rel.total,
        "method": rel.method,
    }
    _emit(_json(payload), args.out)
    return 0


def _audit_csv(report) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["subset", "tv", "ratio_min", "ratio_max", "leakage_bits"])
    for subset, tv, (rmin, rmax), leak in zip(
        report.subsets, report.tv_per_subset, report.ratio_per_subset,
        report.leakage_per_subset,
    ):
        writer.writerow(["+".join(str(i) for i in subset), tv, rmin, rmax, leak])
    return buf.getvalue()


def cmd_audit(args) -> int:
    cfg = load_config(args.config)
    seed = args.codebook_seed if args.codebook_seed is not None else (
        args.seed if args.seed is not None else cfg.seed
    )
    cb = build_trial_codebook(cfg, seed)
    report = audit(cb, cfg.innocent, cfg.family, cfg.mass_floor)
    if args.csv or args.format == "csv":
        _emit(_audit_csv(report), args.out)
    else:
        _emit(_json(report.to_dict()), args.out)
    return 0


def cmd_verify_lemmas(args) -> int:
    cfg = load_config(args.config)
    report = run_lemma_suite(cfg)
    _emit(_json(report.to_dict()), args.out)
    return 0 if report.passes() else 1


def cmd_demo_appendix(args) -> int:
    """Run the appendix reference schemes at a small block length."""
    n = args.n
    from .adversary import OneTimePadScheme
    from .model import ScalarDistribution

    innocent = ScalarDistribution([0.0, 0.5, 0.25, 0.25])
    fam2 = SubsetFamily(((1,), (2,)), 2)
    otp_report = audit(OneTimePadScheme(n), innocent, fam2)
    fam3 = SubsetFamily(((1, 2), (1, 3), (2, 3)), 3)
    copy_report = copy_scheme_example(3, n, fam3)
    padded = padded_scheme_example(n, args.delta)
    payload = {
        "one_time_pad": otp_report.to_dict(),
        "copy_scheme": copy_report.to_dict(),
        "padded_one_time_pad": padded,
    }
    _emit(_json(payload), args.out)
    return 0


def cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    report = run_experiment(cfg)
    if args.jsonl:
        write_jsonl(report, args.jsonl)
    if args.csv_summary:
        write_csv_summary(report, args.csv_summary)
    _emit(_json(report), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covertpath",
        description="Deniable/hidable multipath communication toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="path to the key = value config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="write output to a file")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("capacity", help="solve the capacity formulas")
    common(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("typical", help="enumerate the typical set")
    common(p)
    p.add_argument("--dump", default=None,
                   help="CSV path for one row per admitted type")
    p.set_defaults(func=cmd_typical)

    p = sub.add_parser("codebook", help="build a random-binning codebook")
    common(p)
    p.add_argument("--dump", default=None,
                   help="CSV path for (sequence-index, bin) rows")
    p.set_defaults(func=cmd_codebook)

    p = sub.add_parser("encode", help="encode one message")
    common(p)
    p.add_argument("--message", type=int, required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("audit", help="adversarial audit of a codebook")
    common(p)
    p.add_argument("--codebook-seed", type=int, default=None)
    p.add_argument("--csv", action="store_true",
                   help="one CSV row per subset")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("reliability", help="reliability error components")
    common(p)
    p.set_defaults(func=cmd_reliability)

    p = sub.add_parser("verify-lemmas", help="run the lemma suite")
    common(p)
    p.set_defaults(func=cmd_verify_lemmas)

    p = sub.add_parser("demo-appendix",
                       help="audit the appendix reference schemes")
    common(p, config_required=False)
    p.add_argument("--n", type=int, default=8, help="block length")
    p.add_argument("--delta", type=float, default=0.25,
                   help="padded-scheme special-set exponent")
    p.set_defaults(func=cmd_demo_appendix)

    p = sub.add_parser("experiment", help="full orchestrated experiment")
    common(p)
    p.add_argument("--jsonl", default=None, help="per-trial JSON-lines path")
    p.add_argument("--csv-summary", default=None, help="CSV summary path")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except FeasibilityError as exc:
        print(f"feasibility error: {exc}", file=sys.stderr)
        return 3
    except CovertPathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
