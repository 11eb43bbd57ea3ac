"""Run configuration and the plan -> synth -> preprocess -> classify -> evaluate stages."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .cca import ReferenceBank, ScoreVector, get_classifier
from .coding import FrequencyPlan, assign_target_pairs
from .dsp import FilterSpec, design_cheby1_bandpass, filtfilt, welch_psd
from .metrics import EvalReport, confusion_and_indices, itr, trial_period
from .synth import DEFAULT_CHANNELS, DEFAULT_GAINS, DEFAULT_GAINS_B, Dataset, SynthConfig, TrialRecord

DEFAULT_SWEEP_WINDOWS = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0)


class ConfigError(ValueError):
    pass


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    base_frequencies: tuple[float, ...] = (5.0, 6.0, 7.0, 8.0, 9.0)
    f_bounds: tuple[float, float] = (2.0, 40.0)
    refresh_rate: float = 60.0
    k_min: int = 3
    sampling_rate: float = 500.0
    channels: tuple[str, ...] = DEFAULT_CHANNELS
    trial_duration: float = 3.5
    rest_duration: float = 2.5
    trials_per_class: int = 8
    trials_per_run: int = 4
    n_harmonics: int = 2
    ridge: float = 1e-6
    preprocess: bool = True
    filter_low: float = 2.0
    filter_high: float = 40.0
    filter_order: int = 4
    filter_ripple_db: float = 0.5
    snr_db: float = -20.5
    dominance_low: float = 0.2
    harmonic_decay: float = 0.5
    pink_fraction: float = 0.7
    channel_gains: tuple[float, ...] = DEFAULT_GAINS
    channel_gains_b: tuple[float, ...] | None = DEFAULT_GAINS_B
    noise_only: bool = False
    classifier: str = "bcca"
    t_rule: str = "with-rest"
    windows: tuple[float, ...] = ()
    master_seed: int = 0

    def __post_init__(self):
        for name in ("base_frequencies", "f_bounds", "channels", "channel_gains", "channel_gains_b", "windows"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.classifier not in ("cca", "bcca"):
            raise ConfigError(f"classifier must be 'cca' or 'bcca', got {self.classifier!r}")
        if self.t_rule not in ("with-rest", "window-only"):
            raise ConfigError(f"t_rule must be 'with-rest' or 'window-only', got {self.t_rule!r}")
        if self.trials_per_run < 1:
            raise ConfigError("trials_per_run must be >= 1")

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def replace(self, **overrides) -> "RunConfig":
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return RunConfig.from_dict({**self.to_dict(), **overrides})

    @classmethod
    def load(cls, path: str | Path | None = None, **overrides) -> "RunConfig":
        """Defaults, then the JSON file at ``path``, then non-None ``overrides``."""
        base = cls()
        if path is not None:
            try:
                data = json.loads(Path(path).read_text())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: expected a JSON object")
            base = cls.from_dict({**base.to_dict(), **data})
        return base.replace(**overrides)

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            snr_db=self.snr_db,
            dominance_low=self.dominance_low,
            n_harmonics=self.n_harmonics,
            harmonic_decay=self.harmonic_decay,
            duration=self.trial_duration,
            pink_fraction=self.pink_fraction,
            channel_gains=self.channel_gains,
            channel_gains_b=self.channel_gains_b,
            noise_only=self.noise_only,
        )

    def filter_spec(self) -> FilterSpec:
        return design_cheby1_bandpass(
            self.filter_low, self.filter_high, self.filter_order, self.filter_ripple_db, self.sampling_rate
        )

    def plan(self) -> FrequencyPlan:
        return assign_target_pairs(self.base_frequencies, self.f_bounds)

    def sweep_windows(self) -> tuple[float, ...]:
        """Configured windows, or the 0.5..4 s grid restricted to the trial length."""
        if self.windows:
            return self.windows
        return tuple(w for w in DEFAULT_SWEEP_WINDOWS if w <= self.trial_duration + 1e-9)

    def echo(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class Prediction:
    trial_id: str
    true_label: int
    predicted: int
    scores: ScoreVector | None = None
    status: str = "ok"


@dataclass
class ClassificationRun:
    predictions: list[Prediction]
    classifier: str
    window: float
    config: RunConfig
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> list[Prediction]:
        return [p for p in self.predictions if p.status == "ok"]

    def write(self, path: str | Path, scores_path: str | Path | None = None) -> None:
        header = {"classifier": self.classifier, "window": self.window, "config": self.config.to_dict()}
        lines = ["# " + json.dumps(header, sort_keys=True), "trial_id,true_label,predicted,status"]
        for p in self.predictions:
            lines.append(f"{p.trial_id},{p.true_label},{p.predicted},{p.status}")
        Path(path).write_text("\n".join(lines) + "\n")
        if scores_path is not None:
            rows = ["# " + json.dumps(header, sort_keys=True),
                    "trial_id,target,rho1,rho2,rho_c,rho_a,predicted"]
            for p in self.predictions:
                if p.scores is None:
                    continue
                fv = p.scores.feature_vectors
                ra = p.scores.rho_a
                for t in range(fv.shape[0]):
                    rows.append(
                        f"{p.trial_id},{t},{fv[t, 0]:.9g},{fv[t, 1]:.9g},{fv[t, 2]:.9g},"
                        f"{ra[t]:.9g},{p.predicted}"
                    )
            Path(scores_path).write_text("\n".join(rows) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> "ClassificationRun":
        lines = Path(path).read_text().splitlines()
        if not lines or not lines[0].startswith("# "):
            raise ConfigError(f"{path}: missing predictions header")
        header = json.loads(lines[0][2:])
        preds = []
        for ln in lines[2:]:
            if not ln:
                continue
            tid, y, p, status = ln.split(",", 3)
            preds.append(Prediction(tid, int(y), int(p), None, status))
        return cls(preds, header["classifier"], float(header["window"]),
                   RunConfig.from_dict(header["config"]))


def preprocess(trial: TrialRecord, spec: FilterSpec | None) -> np.ndarray:
    return trial.samples if spec is None else filtfilt(spec, trial.samples)


def _window_samples(window: float, fs: float, trial: TrialRecord) -> int:
    m = int(round(window * fs))
    if m > trial.samples.shape[1] or m < 1:
        raise WindowError(
            f"window {window} s ({m} samples) does not fit trial {trial.trial_id} "
            f"of {trial.samples.shape[1]} samples"
        )
    return m


def classify_dataset(
    dataset: Dataset,
    config: RunConfig,
    plan: FrequencyPlan | None = None,
    window: float | None = None,
    classifier: str | None = None,
) -> ClassificationRun:
    """Filter (unless disabled), truncate to ``window`` seconds, and classify every trial."""
    plan = plan or dataset.plan or config.plan()
    method = classifier or config.classifier
    fn = get_classifier(method)
    spec = config.filter_spec() if config.preprocess else None
    fs = dataset.sampling_rate
    if window is None:
        window = config.trial_duration
    banks: dict[int, ReferenceBank] = {}
    preds = []
    for trial in sorted(dataset.trials, key=lambda t: t.trial_id):
        m = _window_samples(window, fs, trial)
        x = preprocess(trial, spec)[:, :m]
        bank = banks.get(m)
        if bank is None:
            bank = banks[m] = ReferenceBank.build(plan, config.n_harmonics, fs, m)
        sv = fn(x, plan, config.n_harmonics, config.ridge, fs=fs, bank=bank)
        preds.append(Prediction(trial.trial_id, trial.class_index, sv.predicted, sv))
    for tid, msg in sorted(dataset.config.get("load_errors", {}).items()):
        preds.append(Prediction(tid, -1, -1, None, "error: " + msg.replace(",", ";").replace("\n", " ")))
    preds.sort(key=lambda p: p.trial_id)
    return ClassificationRun(preds, method, window, config)


def evaluate_run(run: ClassificationRun, n_classes: int, config: RunConfig) -> EvalReport:
    ok = run.ok
    rep = confusion_and_indices([p.true_label for p in ok], [p.predicted for p in ok], n_classes)
    rep.window_seconds = run.window
    rep.t_rule = config.t_rule
    rep.trial_period_seconds = trial_period(run.window, config.t_rule, config.rest_duration)
    rep.itr_bits_per_min = itr(rep.overall_accuracy, n_classes, rep.trial_period_seconds)
    rep.extra["n_failed"] = len(run.predictions) - len(ok)
    return rep


def time_window_sweep(
    dataset: Dataset,
    config: RunConfig,
    windows: Sequence[float] | None = None,
    classifier: str | None = None,
    plan: FrequencyPlan | None = None,
) -> list[tuple[float, float, float]]:
    """``(window, accuracy, itr)`` for each window; trials are filtered once, then truncated."""
    windows = tuple(windows) if windows is not None else config.sweep_windows()
    plan = plan or dataset.plan or config.plan()
    fs = dataset.sampling_rate
    shortest = min((t.samples.shape[1] for t in dataset.trials), default=0)
    too_long = [w for w in windows if int(round(w * fs)) > shortest]
    if too_long:
        raise WindowError(
            f"windows {too_long} s exceed the trial length of {shortest / fs:g} s"
        )
    fn = get_classifier(classifier or config.classifier)
    spec = config.filter_spec() if config.preprocess else None
    trials = sorted(dataset.trials, key=lambda t: t.trial_id)
    filtered = [preprocess(t, spec) for t in trials]
    labels = np.array([t.class_index for t in trials])
    out = []
    for w in windows:
        m = int(round(w * fs))
        bank = ReferenceBank.build(plan, config.n_harmonics, fs, m)
        pred = np.array(
            [fn(x[:, :m], plan, config.n_harmonics, config.ridge, fs=fs, bank=bank).predicted
             for x in filtered]
        )
        acc = float(np.mean(pred == labels)) if labels.size else 0.0
        out.append((float(w), acc, itr(acc, plan.n_targets, trial_period(w, config.t_rule, config.rest_duration))))
    return out


def class_psd(dataset: Dataset, config: RunConfig, class_index: int):
    """Welch PSD averaged over channels and trials of one class, after preprocessing."""
    spec = config.filter_spec() if config.preprocess else None
    trials = [t for t in dataset.trials if t.class_index == class_index]
    if not trials:
        raise ValueError(f"no trials for class {class_index}")
    acc = None
    for tr in trials:
        x = preprocess(tr, spec)
        for ch in x:
            est = welch_psd(ch, dataset.sampling_rate)
            acc = est.power.copy() if acc is None else acc + est.power
    n = len(trials) * trials[0].samples.shape[0]
    return dataclasses.replace(est, power=acc / n)


def per_run_indices(run: ClassificationRun, dataset: Dataset, n_classes: int,
                    trials_per_run: int) -> list[EvalReport]:
    """Indices computed separately for each run (block of ``trials_per_run`` trials per class)."""
    index_of = {t.trial_id: t.trial_index for t in dataset.trials}
    groups: dict[int, list[Prediction]] = {}
    for p in run.ok:
        groups.setdefault(index_of[p.trial_id] // trials_per_run, []).append(p)
    return [
        confusion_and_indices([p.true_label for p in g], [p.predicted for p in g], n_classes)
        for _, g in sorted(groups.items())
    ]
