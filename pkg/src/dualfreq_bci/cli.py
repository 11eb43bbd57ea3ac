"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import reports
from .coding import FrequencyPlan, PlanError, assign_target_pairs, validate_plan
from .pipeline import (
    ClassificationRun,
    RunConfig,
    class_psd,
    classify_dataset,
    evaluate_run,
    per_run_indices,
    time_window_sweep,
)
from .stimulus import dual_motion_schedule, measured_inversion_frequency
from .synth import Dataset, DatasetError, synth_dataset

log = logging.getLogger("dualfreq_bci")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class PartialFailure(Exception):
    """Some items failed but outputs for the rest were written."""


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig.load(
        getattr(args, "config", None),
        master_seed=getattr(args, "seed", None),
        classifier=getattr(args, "classifier", None),
        t_rule=getattr(args, "t_rule", None),
        preprocess=False if getattr(args, "no_preprocess", False) else None,
    )


def cmd_plan(args: argparse.Namespace) -> int:
    config = _config(args)
    base = args.base if args.base else config.base_frequencies
    plan = assign_target_pairs(base, config.f_bounds)
    violations = validate_plan(plan)
    plan.save(args.out)
    print(f"plan: {plan.n_targets} targets, M = {plan.min_half_gap:g} Hz -> {args.out}")
    for i, (a, b) in enumerate(plan.pairs):
        print(f"  target {i}: a = {a:g} Hz, b = {b:g} Hz")
    if violations:
        for v in violations:
            print(f"  violation [{v.kind}] {v.detail}", file=sys.stderr)
        return EXIT_VALIDATION
    print("  validation: no violations")
    return EXIT_OK


def cmd_schedule(args: argparse.Namespace) -> int:
    config = _config(args)
    plan = FrequencyPlan.load(args.plan)
    if not 0 <= args.target < plan.n_targets:
        raise PlanError(f"target index {args.target} outside [0, {plan.n_targets})")
    duration = config.trial_duration if args.duration is None else args.duration
    sched = dual_motion_schedule(plan.pairs[args.target], config.refresh_rate, duration, config.k_min)
    sched.write(args.out)
    fz = measured_inversion_frequency(sched.zoom_state, sched.refresh_rate)
    fr = measured_inversion_frequency(sched.rot_state, sched.refresh_rate)
    print(
        f"schedule: {sched.n_frames} frames at {sched.refresh_rate:g} Hz; "
        f"measured zoom {fz:.4g} Hz, rotation {fr:.4g} Hz -> {args.out}"
    )
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    config = _config(args)
    plan = FrequencyPlan.load(args.plan) if args.plan else config.plan()
    ds = synth_dataset(
        plan,
        config.synth_config(),
        config.trials_per_class,
        config.sampling_rate,
        config.master_seed,
        config.channels,
    )
    ds.config["run_config"] = config.to_dict()
    ds.save(args.out)
    print(f"synth: {len(ds)} trials ({plan.n_targets} classes x {config.trials_per_class}) -> {args.out}")
    return EXIT_OK


def _load_dataset(path: str, strict: bool = True) -> Dataset:
    ds = Dataset.load(path, strict=strict)
    if ds.plan is None:
        raise DatasetError(f"{path}: manifest has no frequency plan")
    return ds


def _with_dataset_seed(config: RunConfig, ds: Dataset) -> RunConfig:
    # reports should echo the seed the data were generated with
    seed = ds.config.get("master_seed")
    return config if seed is None else config.replace(master_seed=int(seed))


def cmd_classify(args: argparse.Namespace) -> int:
    config = _config(args)
    ds = _load_dataset(args.dataset, strict=False)
    config = _with_dataset_seed(config, ds)
    run = classify_dataset(ds, config, window=args.window)
    out = Path(args.out)
    scores = out.with_name(out.stem + ".scores.csv")
    run.write(out, scores)
    ok = run.ok
    acc = np.mean([p.predicted == p.true_label for p in ok]) if ok else float("nan")
    print(f"classify[{run.classifier}]: {len(ok)} trials, accuracy {acc:.4f} -> {out}")
    failed = [p for p in run.predictions if p.status != "ok"]
    if failed:
        for p in failed:
            print(f"  {p.trial_id}: {p.status}", file=sys.stderr)
        raise PartialFailure(f"{len(failed)} trial(s) could not be read")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    ds = _load_dataset(args.dataset, strict=False)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    config = None
    manifest_ids = sorted([t.trial_id for t in ds.trials] + list(ds.config.get("load_errors", {})))
    labels = {t.trial_id: t.class_index for t in ds.trials}
    for path in args.predictions:
        run = ClassificationRun.read(path)
        config = run.config.replace(t_rule=args.t_rule) if args.t_rule else run.config
        ids = sorted(p.trial_id for p in run.predictions)
        if ids != manifest_ids:
            raise PlanError(
                f"{path}: {len(ids)} prediction rows do not match the {len(manifest_ids)} dataset trials"
            )
        for p in run.ok:
            if labels.get(p.trial_id) != p.true_label:
                raise PlanError(f"{path}: label of {p.trial_id} disagrees with the dataset")
        rep = evaluate_run(run, ds.plan.n_targets, config)
        rows.append((run.classifier, rep))
        reports.write_confusion(out / f"confusion_{run.classifier}.csv", rep, config, run.classifier)
        per_run = per_run_indices(run, ds, ds.plan.n_targets, config.trials_per_run)
        reports.write_class_table(out / f"classes_{run.classifier}.csv", per_run, ds.plan, config, run.classifier)
        print(
            f"evaluate[{run.classifier}]: accuracy {rep.overall_accuracy:.4f}, "
            f"ITR {rep.itr_bits_per_min:.4g} bits/min (T = {rep.trial_period_seconds:g} s, {rep.t_rule})"
        )
    reports.write_method_table(out / "methods.csv", rows, config)
    if args.sweep:
        for method, _ in rows:
            sweep = time_window_sweep(ds, config, classifier=method)
            reports.write_sweep_table(out / f"sweep_{method}.csv", sweep, config, method)
    if args.psd:
        _write_psd(ds, config, out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _config(args)
    ds = _load_dataset(args.dataset)
    config = _with_dataset_seed(config, ds)
    windows = args.window if args.window else None
    sweep = time_window_sweep(ds, config, windows)
    reports.write_sweep_table(args.out, sweep, config, config.classifier)
    for w, a, i in sweep:
        print(f"  {w:4.2f} s: accuracy {a:.4f}, ITR {i:.4g} bits/min")
    return EXIT_OK


def _write_psd(ds: Dataset, config: RunConfig, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for c, (a, b) in enumerate(ds.plan.pairs):
        est = class_psd(ds, config, c)
        est.write(out / f"psd_class{c}.csv", header=f"class={c} pair=({a:g}, {b:g})\nconfig: {config.echo()}")


def cmd_psd(args: argparse.Namespace) -> int:
    config = _config(args)
    ds = _load_dataset(args.dataset)
    config = _with_dataset_seed(config, ds)
    _write_psd(ds, config, Path(args.out))
    print(f"psd: {ds.plan.n_targets} class spectra -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dualfreq-bci", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False, classifier=False, t_rule=False):
        sp.add_argument("--config", help="JSON run configuration")
        if seed:
            sp.add_argument("--seed", type=int, help="master seed override")
        if classifier:
            sp.add_argument("--classifier", choices=("cca", "bcca"))
        if t_rule:
            sp.add_argument("--t-rule", dest="t_rule", choices=("with-rest", "window-only"))

    sp = sub.add_parser("plan", help="derive the dual-frequency target plan")
    common(sp)
    sp.add_argument("--base", type=float, nargs="+", help="ascending base frequencies (Hz)")
    sp.add_argument("--out", default="plan.json")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("schedule", help="export the frame schedule of one target")
    common(sp)
    sp.add_argument("--plan", required=True)
    sp.add_argument("--target", type=int, default=0)
    sp.add_argument("--duration", type=float)
    sp.add_argument("--out", default="schedule.csv")
    sp.set_defaults(func=cmd_schedule)

    sp = sub.add_parser("synth", help="generate a synthetic dataset")
    common(sp, seed=True)
    sp.add_argument("--plan")
    sp.add_argument("--out", default="dataset")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("classify", help="classify every trial of a dataset")
    common(sp, classifier=True)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--window", type=float, help="analysis window (s); default full trial")
    sp.add_argument("--no-preprocess", action="store_true", help="skip band-pass filtering")
    sp.add_argument("--out", default="predictions.csv")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("evaluate", help="accuracy, ITR and per-class tables")
    sp.add_argument("--predictions", nargs="+", required=True)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--t-rule", dest="t_rule", choices=("with-rest", "window-only"))
    sp.add_argument("--sweep", action="store_true", help="also run the time-window sweep")
    sp.add_argument("--psd", action="store_true", help="also export per-class Welch PSD")
    sp.add_argument("--out", default="reports")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("sweep", help="accuracy and ITR across analysis windows")
    common(sp, classifier=True, t_rule=True)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--window", type=float, nargs="+")
    sp.add_argument("--out", default="sweep.csv")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("psd", help="per-class Welch PSD export")
    common(sp)
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--out", default="psd")
    sp.set_defaults(func=cmd_psd)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except PartialFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (np.linalg.LinAlgError, ArithmeticError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
