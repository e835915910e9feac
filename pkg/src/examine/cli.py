"""Command-line interface tying the scoring, synthesis, and harness together.

One binary, verb-noun subcommands, so a shell pipeline can mirror the
scoring flow end to end: generate (or extract) features, score them,
then validate the ranking with distribution reports and accuracy curves.

Exit status: 0 success, 1 validation or usage error, 2 internal
numerical failure.  Diagnostics go to stderr; stdout carries only
machine-readable results when ``--quiet`` is set.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import dataio
from .errors import ValidationError
from .experiments import (
    CurveConfig,
    benchmark_timing,
    make_curve_benchmark,
    run_addition_curve,
    run_removal_curve,
    score_distribution_report,
)
from .scoring import examine_scores
from .synth import AssessedSet, CorruptionSpec, make_assessed_set, sample_clusters
from .theory import make_ci_joint, verify_theorem
from .utility import LabeledSet, TrainConfig
from .valuation import (
    TmcConfig,
    logistic_utility,
    loo_values,
    random_values,
    shapley_exact,
    shapley_tmc,
)


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors, with usage on stderr."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _say(args: argparse.Namespace, message: str) -> None:
    if not args.quiet:
        print(message, file=sys.stderr)


def _emit_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _require_labeled(path: str, fmt: str | None, role: str) -> LabeledSet:
    loaded = dataio.read_features(path, format=fmt)
    if not isinstance(loaded, LabeledSet):
        raise ValidationError(f"{role} file {path} has no label column")
    return loaded


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        learning_rate=args.lr,
        iterations=args.iterations,
        l2=args.l2,
        seed=args.seed if args.seed is not None else 0,
    )


def _tmc_config(args: argparse.Namespace) -> TmcConfig:
    return TmcConfig(
        max_permutations=args.tmc_max_permutations,
        truncation_tolerance=args.tmc_truncation_tolerance,
        convergence_threshold=args.tmc_convergence_threshold,
        convergence_window=args.tmc_convergence_window,
        seed=args.seed if args.seed is not None else 0,
    )


# ---------------------------------------------------------------------------
# score


def _cmd_score_examine(args: argparse.Namespace) -> int:
    matrix = dataio.as_matrix(dataio.read_features(args.features, format=args.format))
    report = examine_scores(matrix, centering=args.center)
    dataio.write_report(report, args.out)
    _say(args, f"scored {matrix.n} items (top singular value {report.params['lambda_full']:.6g}) -> {args.out}")
    return 0


def _supervised_parts(args: argparse.Namespace):
    train = _require_labeled(args.train, args.format, "train")
    test = _require_labeled(args.test, args.format, "test")
    cfg = _train_config(args)
    utility = logistic_utility(train, test, cfg)
    return train, cfg, utility


def _cmd_score_loo(args: argparse.Namespace) -> int:
    train, cfg, utility = _supervised_parts(args)
    report = loo_values(train.n, utility, ids=train.features.ids)
    report.params.update({"utility": "logistic", "utility_config_digest": cfg.digest(),
                          "utility_evaluations": utility.evaluations})
    dataio.write_report(report, args.out)
    _say(args, f"leave-one-out over {train.n} items, {utility.evaluations} utility evaluations -> {args.out}")
    return 0


def _cmd_score_shapley_exact(args: argparse.Namespace) -> int:
    train, cfg, utility = _supervised_parts(args)
    report = shapley_exact(train.n, utility, ids=train.features.ids)
    report.params.update({"utility": "logistic", "utility_config_digest": cfg.digest(),
                          "utility_evaluations": utility.evaluations})
    dataio.write_report(report, args.out)
    _say(args, f"exact Shapley over {train.n} items -> {args.out}")
    return 0


def _cmd_score_shapley_tmc(args: argparse.Namespace) -> int:
    train, cfg, utility = _supervised_parts(args)
    tmc = _tmc_config(args)
    report = shapley_tmc(train.n, utility, tmc, ids=train.features.ids)
    report.params.update({"utility": "logistic", "utility_config_digest": cfg.digest(),
                          "utility_evaluations": utility.evaluations})
    dataio.write_report(report, args.out)
    _say(args, f"TMC Shapley: {report.params['permutations_run']} permutations, "
               f"{utility.evaluations} utility evaluations -> {args.out}")
    return 0


def _cmd_score_random(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else 0
    report = random_values(args.n, seed=seed)
    dataio.write_report(report, args.out)
    _say(args, f"random scores for {args.n} items (seed {seed}) -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# synth / curve / theory / bench / report


def _cmd_synth_gen(args: argparse.Namespace) -> int:
    cfg = dataio.read_synth_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    assessed = make_assessed_set(cfg.spec, cfg.classes, cfg.dim, cfg.intra_std, seed=seed)
    dataio.write_features(assessed.labeled(), args.out, format=args.format)
    truth_path = args.truth or f"{args.out}.truth.json"
    dataio.write_ground_truth(
        assessed.levels_by_id(),
        truth_path,
        params={
            "levels": list(cfg.spec.levels),
            "per_level": cfg.spec.per_level,
            "clean": cfg.spec.clean,
            "classes": cfg.classes,
            "dim": cfg.dim,
            "intra_std": cfg.intra_std,
            "seed": seed,
            "noise": "additive gaussian, mean=level, std=level*|dataset mean|",
        },
    )
    _say(args, f"generated {assessed.n} items ({cfg.spec.clean} clean) -> {args.out}, truth -> {truth_path}")
    return 0


def _as_assessed(pool: LabeledSet, levels: dict[str, float] | None = None) -> AssessedSet:
    if levels is None:
        level_vec = np.zeros(pool.n)
    else:
        missing = [i for i in pool.features.ids if i not in levels]
        if missing:
            raise ValidationError(f"ground truth missing {len(missing)} ids, e.g. {missing[0]!r}")
        level_vec = np.array([levels[i] for i in pool.features.ids])
    return AssessedSet(pool.features, pool.labels, pool.n_classes, level_vec)


def _cmd_curve(args: argparse.Namespace) -> int:
    cfg = dataio.read_curve_config(args.config, mode=args.mode)
    if args.order:
        cfg = replace(cfg, order=args.order)
    scores = dataio.read_report(args.scores)
    assessed = _as_assessed(_require_labeled(args.assessed, args.format, "assessed"))
    validation = _require_labeled(args.validation, args.format, "validation")
    if args.mode == "add":
        if not args.clean_train:
            raise ValidationError("curve add requires --clean-train")
        clean_train = _require_labeled(args.clean_train, args.format, "clean-train")
        series = run_addition_curve(clean_train, assessed, validation, scores, cfg)
    else:
        series = run_removal_curve(assessed, validation, scores, cfg)
    dataio.write_curve(series, args.out)
    if args.csv:
        dataio.curve_to_csv(series, args.csv)
    if args.fig:
        from .plots import save_curve_figure

        save_curve_figure([series], args.fig)
    _say(args, f"{args.mode} curve ({cfg.order}) with {len(series.points)} points -> {args.out}")
    return 0


def _cmd_theory_check(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else 0
    seq = np.random.SeedSequence(seed)
    worst_reconstruction = 0.0
    worst_recovery = 0.0
    all_ci = True
    all_full_rank = True
    for child in seq.spawn(args.trials):
        report = verify_theorem(make_ci_joint(args.d1, args.d2, args.k, child))
        worst_reconstruction = max(worst_reconstruction, report.reconstruction_residual)
        all_ci = all_ci and report.ci_holds
        if report.recovery_residual is None:
            all_full_rank = False
        else:
            worst_recovery = max(worst_recovery, report.recovery_residual)
    doc = {
        "trials": args.trials,
        "d1": args.d1,
        "d2": args.d2,
        "k": args.k,
        "seed": seed,
        "max_reconstruction_residual": worst_reconstruction,
        "max_recovery_residual": worst_recovery,
        "all_ci_hold": all_ci,
        "all_full_rank": all_full_rank,
    }
    _emit_json(doc, args.out)
    _say(args, f"{args.trials} conditional-independence trials: "
               f"max residual {max(worst_reconstruction, worst_recovery):.3e}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    cfg = dataio.read_bench_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    per_level = cfg.n_items // 5
    clean = cfg.n_items - 4 * per_level
    spec = CorruptionSpec(per_level=per_level, clean=clean)
    assessed = make_assessed_set(spec, cfg.classes, cfg.dim, cfg.intra_std, seed=seed)
    seq = np.random.SeedSequence((seed, 1))
    validation = sample_clusters(cfg.validation_size, cfg.classes, cfg.dim, cfg.intra_std, seq, id_prefix="v")
    timing = benchmark_timing(assessed, validation, cfg.methods, cfg.train, cfg.tmc, seed=seed)
    doc = {
        "n_items": cfg.n_items,
        "dim": cfg.dim,
        "entries": [
            {
                "method": e.method,
                "seconds": e.seconds,
                "utility_evaluations": e.utility_evaluations,
                "n_items": e.n_items,
            }
            for e in timing.entries
        ],
    }
    _emit_json(doc, args.out)
    for e in timing.entries:
        _say(args, f"  {e.method:>12s}: {e.seconds:8.3f}s  {e.utility_evaluations:6d} utility evaluations")
    return 0


def _cmd_report_dist(args: argparse.Namespace) -> int:
    scores = dataio.read_report(args.scores)
    loaded = dataio.read_features(args.assessed, format=args.format)
    if isinstance(loaded, LabeledSet):
        pool = loaded
    else:
        pool = LabeledSet(loaded, np.zeros(loaded.n, dtype=np.int64), 2)
    truth = dataio.read_ground_truth(args.truth)
    assessed = _as_assessed(pool, truth)
    summary = score_distribution_report(assessed, scores)
    dataio.distribution_summary_to_csv(summary, args.out)
    if args.json:
        dataio.write_distribution_summary(summary, args.json)
    if args.fig:
        from .plots import save_distribution_figure

        save_distribution_figure(summary, args.fig)
    worst = min(summary.auc.values()) if summary.auc else float("nan")
    _say(args, f"{len(summary.groups)} level groups, min pairwise AUC {worst:.4f} -> {args.out}")
    return 0


def _cmd_report_curves(args: argparse.Namespace) -> int:
    series = [dataio.read_curve(p) for p in args.curve]
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            import csv as _csv

            writer = _csv.writer(fh, lineterminator="\n")
            writer.writerow(["method", "order", "mode", "n_selected", "mean_accuracy", "std_accuracy"])
            for s in series:
                for p in s.points:
                    writer.writerow([s.method, s.order, s.mode, p.n_selected,
                                     repr(p.mean_accuracy), repr(p.std_accuracy)])
    from .plots import save_curve_figure

    save_curve_figure(series, args.fig)
    _say(args, f"rendered {len(series)} curve(s) -> {args.fig}")
    return 0


# ---------------------------------------------------------------------------
# wiring


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lr", type=float, default=0.1, help="utility learning rate")
    parser.add_argument("--iterations", type=int, default=500, help="utility training iterations")
    parser.add_argument("--l2", type=float, default=1e-4, help="utility L2 penalty")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="examine", description=__doc__)
    parser.add_argument("--seed", type=int, default=None, help="global seed (command default: 0)")
    parser.add_argument("--format", choices=["csv", "exmf"], default=None,
                        help="feature file format (default: by extension)")
    parser.add_argument("--quiet", action="store_true", help="suppress diagnostics on stderr")
    parser.add_argument("--threads", type=int, default=1,
                        help="cap on internal parallelism (results are identical at any setting)")
    commands = parser.add_subparsers(dest="command", required=True)

    score = commands.add_parser("score", help="compute valuation scores")
    score_kinds = score.add_subparsers(dest="score_kind", required=True)

    p = score_kinds.add_parser("examine", help="label-free spectral scores")
    p.add_argument("--features", required=True)
    p.add_argument("--center", action="store_true", help="remove column means before scoring")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_score_examine)

    p = score_kinds.add_parser("loo", help="leave-one-out utility differences")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_score_loo)

    p = score_kinds.add_parser("shapley-exact", help="exact Shapley values (n <= 20)")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=_cmd_score_shapley_exact)

    p = score_kinds.add_parser("shapley-tmc", help="truncated-Monte-Carlo Shapley")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    _add_train_flags(p)
    p.add_argument("--tmc-max-permutations", type=int, default=2000)
    p.add_argument("--tmc-truncation-tolerance", type=float, default=0.01)
    p.add_argument("--tmc-convergence-threshold", type=float, default=0.05)
    p.add_argument("--tmc-convergence-window", type=int, default=100)
    p.set_defaults(func=_cmd_score_shapley_tmc)

    p = score_kinds.add_parser("random", help="uniform random baseline scores")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_score_random)

    synth = commands.add_parser("synth", help="generate synthetic assessed sets")
    synth_kinds = synth.add_subparsers(dest="synth_kind", required=True)
    p = synth_kinds.add_parser("gen", help="clusters plus leveled corruption")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--truth", default=None, help="ground-truth sidecar path (default <out>.truth.json)")
    p.set_defaults(func=_cmd_synth_gen)

    curve = commands.add_parser("curve", help="accuracy curves over score orderings")
    curve_kinds = curve.add_subparsers(dest="mode", required=True)
    for mode in ("add", "remove"):
        p = curve_kinds.add_parser(mode)
        p.add_argument("--scores", required=True)
        p.add_argument("--assessed", required=True)
        if mode == "add":
            p.add_argument("--clean-train", default=None)
        p.add_argument("--validation", required=True)
        p.add_argument("--config", required=True)
        p.add_argument("--order", choices=["high_first", "low_first", "random"], default=None,
                       help="override the config's ordering")
        p.add_argument("--out", required=True)
        p.add_argument("--csv", default=None)
        p.add_argument("--fig", default=None)
        p.set_defaults(func=_cmd_curve, mode=mode)
        if mode == "remove":
            p.set_defaults(clean_train=None)

    theory = commands.add_parser("theory", help="verify the embedding-readout identities")
    theory_kinds = theory.add_subparsers(dest="theory_kind", required=True)
    p = theory_kinds.add_parser("check")
    p.add_argument("--d1", type=int, default=6)
    p.add_argument("--d2", type=int, default=5)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_theory_check)

    p = commands.add_parser("bench", help="timing comparison across methods")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_bench)

    report = commands.add_parser("report", help="render summaries, tables, and figures")
    report_kinds = report.add_subparsers(dest="report_kind", required=True)
    p = report_kinds.add_parser("dist", help="score distribution by corruption level")
    p.add_argument("--scores", required=True)
    p.add_argument("--assessed", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True, help="CSV output")
    p.add_argument("--json", default=None)
    p.add_argument("--fig", default=None)
    p.set_defaults(func=_cmd_report_dist)
    p = report_kinds.add_parser("curves", help="overlay saved curves into one figure")
    p.add_argument("--curve", nargs="+", required=True)
    p.add_argument("--fig", required=True)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=_cmd_report_curves)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"examine: error: {exc}", file=sys.stderr)
        return 1
    except (np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
        print(f"examine: numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"examine: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - last resort
        print(f"examine: internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
