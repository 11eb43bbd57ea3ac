"""Synthetic dual-frequency evoked EEG.

Each trial is a sum of two harmonic series (one per target frequency) with
random phases, weighted by per-trial dominance factors, plus independent
per-channel noise mixing pink (1/f) and white components. The two
frequencies project onto the channels through separate gain patterns
(``channel_gains`` for the first, ``channel_gains_b`` for the second), since
the two motions need not share a scalp topography; ``channel_gains_b=None``
reuses the first pattern. The evoked part is
scaled so the evoked-to-noise power ratio, summed over channels, equals
``snr_db`` exactly for every trial.

Seeds: every trial gets its own 64-bit seed
``mix64(mix64(mix64(master_seed) ^ class_index) ^ trial_index)`` where
``mix64`` is the SplitMix64 finalizer. Trials can therefore be generated in
any order or in parallel.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .coding import FrequencyPlan

DEFAULT_CHANNELS = ("Pz", "PO7", "PO3", "PO4", "PO8", "Oz")
DEFAULT_GAINS = (0.7, 0.8, 0.9, 0.9, 0.8, 1.0)
# the second motion response has its own scalp pattern, rescaled so that both
# components carry equal power when their dominance factors are equal
_PATTERN_B = (1.0, -0.3, 0.4, 0.4, -0.3, 0.2)
DEFAULT_GAINS_B = tuple(
    g * math.sqrt(sum(a * a for a in DEFAULT_GAINS) / sum(b * b for b in _PATTERN_B)) for g in _PATTERN_B
)
MASK64 = (1 << 64) - 1


class SynthConfigError(ValueError):
    pass


class DatasetError(IOError):
    pass


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit mix."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def trial_seed(master_seed: int, class_index: int, trial_index: int) -> int:
    z = mix64(master_seed & MASK64)
    z = mix64(z ^ (class_index & MASK64))
    return mix64(z ^ (trial_index & MASK64))


@dataclass(frozen=True)
class SynthConfig:
    snr_db: float = -20.5
    dominance_low: float = 0.2
    n_harmonics: int = 2
    harmonic_decay: float = 0.5
    duration: float = 3.5
    pink_fraction: float = 0.7
    channel_gains: tuple[float, ...] = DEFAULT_GAINS
    channel_gains_b: tuple[float, ...] | None = DEFAULT_GAINS_B
    noise_only: bool = False

    def __post_init__(self):
        if self.snr_db == -math.inf:
            object.__setattr__(self, "noise_only", True)
        elif not math.isfinite(self.snr_db):
            raise SynthConfigError("snr_db must be finite; use noise_only=True for a noise-only dataset")
        if not 0 < self.dominance_low <= 1:
            raise SynthConfigError(f"dominance_low must be in (0, 1], got {self.dominance_low}")
        if self.n_harmonics < 1:
            raise SynthConfigError("n_harmonics must be >= 1")
        if not 0 <= self.pink_fraction <= 1:
            raise SynthConfigError("pink_fraction must be in [0, 1]")
        if self.duration <= 0:
            raise SynthConfigError("duration must be positive")
        object.__setattr__(self, "channel_gains", tuple(float(g) for g in self.channel_gains))
        if self.channel_gains_b is not None:
            gb = tuple(float(g) for g in self.channel_gains_b)
            if len(gb) != len(self.channel_gains):
                raise SynthConfigError("channel_gains_b must have one gain per channel")
            object.__setattr__(self, "channel_gains_b", gb)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channel_gains"] = list(self.channel_gains)
        if self.channel_gains_b is not None:
            d["channel_gains_b"] = list(self.channel_gains_b)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        if "channel_gains" in d:
            d["channel_gains"] = tuple(d["channel_gains"])
        if d.get("channel_gains_b") is not None:
            d["channel_gains_b"] = tuple(d["channel_gains_b"])
        return cls(**d)


@dataclass
class TrialRecord:
    class_index: int
    sampling_rate: float
    samples: np.ndarray
    channel_names: tuple[str, ...] = DEFAULT_CHANNELS
    seed: int | None = None
    trial_id: str = ""
    trial_index: int = 0

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if self.samples.shape[0] != len(self.channel_names):
            raise DatasetError(
                f"{self.samples.shape[0]} sample rows but {len(self.channel_names)} channel names"
            )
        if not np.all(np.isfinite(self.samples)):
            raise DatasetError(f"trial {self.trial_id or '?'} contains non-finite samples")


def pink_noise(n: int, seed: int | None = None) -> np.ndarray:
    """Zero-mean, unit-variance 1/f noise by shaping white noise in the frequency domain."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(n)
    if n < 2:
        return np.zeros(1)
    spec = np.fft.rfft(white)
    k = np.arange(spec.size, dtype=float)
    shape = np.zeros_like(k)
    shape[1:] = 1.0 / np.sqrt(k[1:])
    out = np.fft.irfft(spec * shape, n)
    out -= out.mean()
    sd = out.std()
    return out / sd if sd > 0 else out


def _noise(rng: np.random.Generator, k: int, m: int, pink_fraction: float) -> np.ndarray:
    rows = []
    for _ in range(k):
        pink = pink_noise(m, int(rng.integers(0, 2**63)))
        white = rng.standard_normal(m)
        white = (white - white.mean()) / white.std()
        rows.append(math.sqrt(pink_fraction) * pink + math.sqrt(1 - pink_fraction) * white)
    return np.vstack(rows)


def synth_trial(
    pair: tuple[float, float],
    class_index: int,
    config: SynthConfig,
    sampling_rate: float = 500.0,
    seed: int = 0,
    channel_names: Sequence[str] = DEFAULT_CHANNELS,
    evoked_out: list | None = None,
) -> TrialRecord:
    """Generate one labeled trial.

    If ``evoked_out`` is a list, the noiseless evoked component and the noise
    are appended to it (used to check the power ratio).
    """
    k = len(channel_names)
    if len(config.channel_gains) != k:
        raise SynthConfigError(f"{len(config.channel_gains)} channel gains for {k} channels")
    nyq = sampling_rate / 2
    for f in pair:
        if config.n_harmonics * f >= nyq:
            raise SynthConfigError(
                f"harmonic {config.n_harmonics} of {f} Hz is not below Nyquist ({nyq} Hz)"
            )
    m = int(round(sampling_rate * config.duration))
    rng = np.random.default_rng(seed)

    u = rng.uniform(config.dominance_low, 1.0)
    alpha = (1.0, u) if rng.random() < 0.5 else (u, 1.0)
    gains_b = config.channel_gains if config.channel_gains_b is None else config.channel_gains_b
    t = np.arange(m) / sampling_rate
    evoked = np.zeros((k, m))
    for a_j, f, gains in zip(alpha, pair, (config.channel_gains, gains_b)):
        wave = np.zeros(m)
        for h in range(1, config.n_harmonics + 1):
            phi = rng.uniform(0, 2 * np.pi)
            wave += a_j * config.harmonic_decay ** (h - 1) * np.sin(2 * np.pi * h * f * t + phi)
        evoked += np.asarray(gains)[:, None] * wave[None, :]

    noise = _noise(rng, k, m, config.pink_fraction)
    if config.noise_only:
        evoked = np.zeros_like(evoked)
    else:
        p_noise = np.mean(noise**2) * k
        p_evoked = np.mean(evoked**2) * k
        evoked *= math.sqrt(p_noise * 10 ** (config.snr_db / 10) / p_evoked)
    if evoked_out is not None:
        evoked_out.extend([evoked, noise])
    return TrialRecord(
        class_index=class_index,
        sampling_rate=float(sampling_rate),
        samples=evoked + noise,
        channel_names=tuple(channel_names),
        seed=seed,
    )


@dataclass
class Dataset:
    trials: list[TrialRecord]
    sampling_rate: float
    channel_names: tuple[str, ...]
    plan: FrequencyPlan | None = None
    config: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.trials)

    @property
    def labels(self) -> np.ndarray:
        return np.array([t.class_index for t in self.trials], dtype=int)

    def save(self, directory: str | Path) -> Path:
        """Write ``manifest.json`` plus one CSV per trial (rows = samples, columns = channels)."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        listing = []
        for tr in self.trials:
            fname = f"{tr.trial_id}.csv"
            write_matrix(d / fname, tr.samples.T, header=",".join(tr.channel_names))
            listing.append(
                {
                    "id": tr.trial_id,
                    "file": fname,
                    "class_index": tr.class_index,
                    "trial_index": tr.trial_index,
                    "seed": tr.seed,
                }
            )
        manifest = {
            "format": "dualfreq-bci-dataset/1",
            "sampling_rate": self.sampling_rate,
            "channels": list(self.channel_names),
            "plan": self.plan.to_dict() if self.plan is not None else None,
            "config": self.config,
            "trials": listing,
        }
        (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return d

    @classmethod
    def load(cls, directory: str | Path, strict: bool = True) -> "Dataset":
        """Read a dataset directory.

        With ``strict=False`` unreadable trial files are skipped and recorded in
        ``config["load_errors"]`` as ``{trial_id: message}``.
        """
        d = Path(directory)
        try:
            manifest = json.loads((d / "manifest.json").read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DatasetError(f"cannot read manifest in {d}: {exc}") from exc
        fs = float(manifest["sampling_rate"])
        channels = tuple(manifest["channels"])
        trials, errors = [], {}
        for entry in manifest["trials"]:
            try:
                data = read_matrix(d / entry["file"])
                if data.ndim != 2 or data.shape[1] != len(channels):
                    raise DatasetError(f"expected {len(channels)} columns, got shape {data.shape}")
                trials.append(
                    TrialRecord(
                        class_index=int(entry["class_index"]),
                        sampling_rate=fs,
                        samples=data.T,
                        channel_names=channels,
                        seed=entry.get("seed"),
                        trial_id=entry["id"],
                        trial_index=int(entry.get("trial_index", 0)),
                    )
                )
            except (OSError, ValueError) as exc:
                msg = f"trial {entry['id']} ({entry['file']}): {exc}"
                if strict:
                    raise DatasetError(msg) from exc
                errors[entry["id"]] = msg
        plan = FrequencyPlan.from_dict(manifest["plan"]) if manifest.get("plan") else None
        config = dict(manifest.get("config") or {})
        if errors:
            config["load_errors"] = errors
        return cls(trials, fs, channels, plan, config)


def write_matrix(path: Path, rows: np.ndarray, header: str = "") -> None:
    lines = [header] if header else []
    lines.extend(",".join(f"{v:.9g}" for v in row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path: Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def synth_dataset(
    plan: FrequencyPlan,
    config: SynthConfig,
    trials_per_class: int = 8,
    sampling_rate: float = 500.0,
    master_seed: int = 0,
    channel_names: Sequence[str] = DEFAULT_CHANNELS,
) -> Dataset:
    """Balanced dataset with ``trials_per_class`` trials per target, sorted by trial id."""
    if trials_per_class < 0:
        raise SynthConfigError("trials_per_class must be >= 0")
    trials = []
    for t in range(trials_per_class):
        for c, pair in enumerate(plan.pairs):
            rec = synth_trial(pair, c, config, sampling_rate, trial_seed(master_seed, c, t), channel_names)
            rec.trial_id = f"trial_c{c:02d}_t{t:03d}"
            rec.trial_index = t
            trials.append(rec)
    trials.sort(key=lambda r: r.trial_id)
    return Dataset(
        trials=trials,
        sampling_rate=float(sampling_rate),
        channel_names=tuple(channel_names),
        plan=plan,
        config={
            "synth": config.to_dict(),
            "trials_per_class": trials_per_class,
            "master_seed": master_seed,
            "seed_rule": "mix64(mix64(mix64(master_seed) ^ class) ^ trial), SplitMix64",
        },
    )
