"""Plain-text report tables. Every file starts with ``#`` lines echoing the resolved config."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .coding import FrequencyPlan
from .metrics import EvalReport
from .pipeline import RunConfig


def _header(config: RunConfig, **meta) -> list[str]:
    lines = [f"# config: {config.echo()}"]
    lines.extend(f"# {k}: {v}" for k, v in sorted(meta.items()))
    return lines


def write_method_table(path: str | Path, rows: Sequence[tuple[str, EvalReport]], config: RunConfig) -> None:
    """Method x (accuracy, ITR) table."""
    lines = _header(config)
    lines.append("method,window_s,t_rule,trial_period_s,accuracy,itr_bits_per_min,n_trials,n_failed")
    for method, rep in rows:
        lines.append(
            f"{method},{rep.window_seconds:.9g},{rep.t_rule},{rep.trial_period_seconds:.9g},"
            f"{rep.overall_accuracy:.9g},{rep.itr_bits_per_min:.9g},"
            f"{int(rep.confusion.sum())},{rep.extra.get('n_failed', 0)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_class_table(
    path: str | Path,
    per_run: Sequence[EvalReport],
    plan: FrequencyPlan,
    config: RunConfig,
    method: str,
) -> None:
    """Class x (specificity, sensitivity, precision, accuracy), mean and std across runs."""
    lines = _header(config, method=method, n_runs=len(per_run))
    names = ("specificity", "sensitivity", "precision", "accuracy")
    cols = ["class", "freq_a", "freq_b"] + [f"{n}_{s}" for n in names for s in ("mean", "std")]
    lines.append(",".join(cols))
    if per_run:
        stack = {
            "specificity": np.array([r.specificity for r in per_run]),
            "sensitivity": np.array([r.sensitivity for r in per_run]),
            "precision": np.array([r.precision for r in per_run]),
            "accuracy": np.array([r.class_accuracy for r in per_run]),
        }
        ddof = 1 if len(per_run) > 1 else 0
        for c, (a, b) in enumerate(plan.pairs):
            vals = []
            for n in names:
                v = stack[n][:, c]
                vals += [f"{v.mean():.9g}", f"{v.std(ddof=ddof):.9g}"]
            lines.append(f"{c},{a:.9g},{b:.9g}," + ",".join(vals))
    Path(path).write_text("\n".join(lines) + "\n")


def write_sweep_table(
    path: str | Path, sweep: Sequence[tuple[float, float, float]], config: RunConfig, method: str
) -> None:
    lines = _header(config, method=method, t_rule=config.t_rule)
    lines.append("window_s,accuracy,itr_bits_per_min")
    lines.extend(f"{w:.9g},{a:.9g},{i:.9g}" for w, a, i in sweep)
    Path(path).write_text("\n".join(lines) + "\n")


def write_confusion(path: str | Path, rep: EvalReport, config: RunConfig, method: str) -> None:
    lines = _header(config, method=method)
    k = rep.n_classes
    lines.append("true\\predicted," + ",".join(str(j) for j in range(k)))
    for i in range(k):
        lines.append(f"{i}," + ",".join(str(int(v)) for v in rep.confusion[i]))
    Path(path).write_text("\n".join(lines) + "\n")
