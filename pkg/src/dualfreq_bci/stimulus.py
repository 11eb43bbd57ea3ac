"""Frame-accurate stimulus sequences for reciprocal motion on a fixed-refresh display.

A target at frequency ``f`` reverses its motion ``2 f`` times per second. On a
display refreshing at ``R`` Hz that is generally a non-integer number of frames
per half-cycle, so half-cycles alternate between ``floor`` and ``ceil`` of
``R / (2 f)`` frames.

The square wave uses the convention ``square(x) = +1`` for ``x mod 2pi`` in
``[0, pi)`` and ``-1`` on ``[pi, 2pi)``; in particular ``square(0) = +1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

K_MIN = 3
MAX_FRAMES = 2**31
ZOOM_RANGE = (0.8, 1.2)
ROT_RANGE = (-45.0, 75.0)


class FeasibilityError(ValueError):
    """Frequency cannot be displayed at the requested refresh rate."""


class ScheduleLengthError(ValueError):
    pass


def max_frequency(refresh_rate: float, k_min: int = K_MIN) -> float:
    return refresh_rate / k_min


def _check_feasible(f: float, refresh_rate: float, k_min: int) -> None:
    if not (refresh_rate > 0 and math.isfinite(refresh_rate)):
        raise FeasibilityError(f"refresh rate must be positive, got {refresh_rate}")
    fmax = max_frequency(refresh_rate, k_min)
    if not (f > 0 and math.isfinite(f)):
        raise FeasibilityError(f"stimulus frequency must be positive, got {f}")
    if f > fmax + 1e-12:
        raise FeasibilityError(
            f"{f} Hz is not displayable at {refresh_rate} Hz with k_min={k_min}; "
            f"maximum admissible frequency is {fmax:g} Hz"
        )


def _half_cycle_index(f: float, refresh_rate: float, n_frames: int) -> np.ndarray:
    """floor(2 f i / R) for i = 0..n_frames-1, exact whenever f/R is a modest rational."""
    ratio = Fraction(f) / Fraction(refresh_rate)
    approx = ratio.limit_denominator(10**6)
    i = np.arange(n_frames, dtype=np.int64)
    if approx == ratio or abs(float(approx - ratio)) < 1e-15:
        p, q = approx.numerator, approx.denominator
        if 2 * p * max(n_frames, 1) < 2**62:
            return (2 * p * i) // q
    x = 2.0 * f * i.astype(float) / refresh_rate
    return np.floor(x + 1e-9 * np.maximum(1.0, x)).astype(np.int64)


def stimulus_sequence(
    f_target: float, refresh_rate: float, n_frames: int, k_min: int = K_MIN
) -> np.ndarray:
    """Per-frame motion state, +1 or -1, for a target at ``f_target`` Hz."""
    _check_feasible(f_target, refresh_rate, k_min)
    if n_frames < 1:
        raise ScheduleLengthError(f"n_frames must be >= 1, got {n_frames}")
    if n_frames > MAX_FRAMES:
        raise ScheduleLengthError(f"schedules are limited to {MAX_FRAMES} frames")
    k = _half_cycle_index(f_target, refresh_rate, n_frames)
    return np.where(k % 2 == 0, 1, -1).astype(np.int8)


def run_lengths(seq: np.ndarray) -> np.ndarray:
    """Lengths of maximal constant runs, in order."""
    seq = np.asarray(seq)
    if seq.size == 0:
        return np.zeros(0, dtype=int)
    edges = np.flatnonzero(np.diff(seq) != 0) + 1
    bounds = np.concatenate(([0], edges, [seq.size]))
    return np.diff(bounds)


def measured_inversion_frequency(seq: np.ndarray, refresh_rate: float) -> float:
    """Motion inversion frequency of a state sequence, in Hz.

    Counts half-cycles (sign changes plus the onset of the first half-cycle)
    and divides by twice the duration. A constant sequence has no inversions
    and measures 0 Hz.
    """
    seq = np.asarray(seq)
    if seq.size < 2:
        raise ScheduleLengthError("need at least two frames to measure an inversion frequency")
    changes = int(np.count_nonzero(np.diff(seq) != 0))
    if changes == 0:
        return 0.0
    duration = seq.size / refresh_rate
    return (changes + 1) / (2.0 * duration)


@dataclass(frozen=True)
class FrameSchedule:
    refresh_rate: float
    zoom_frequency: float
    rot_frequency: float
    duration: float
    zoom_state: np.ndarray
    rot_state: np.ndarray
    zoom_scale: np.ndarray
    rot_angle: np.ndarray

    @property
    def n_frames(self) -> int:
        return int(self.zoom_state.size)

    def write(self, path: str | Path) -> None:
        lines = [
            f"# refresh_rate={self.refresh_rate:.9g} zoom_frequency={self.zoom_frequency:.9g} "
            f"rot_frequency={self.rot_frequency:.9g} duration={self.duration:.9g}",
            "frame_index,zoom_state,rot_state,zoom_scale,rot_angle",
        ]
        for i in range(self.n_frames):
            lines.append(
                f"{i},{int(self.zoom_state[i])},{int(self.rot_state[i])},"
                f"{self.zoom_scale[i]:.9g},{self.rot_angle[i]:.9g}"
            )
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> "FrameSchedule":
        text = Path(path).read_text().splitlines()
        header = dict(kv.split("=") for kv in text[0].lstrip("# ").split())
        rows = np.array([[float(c) for c in ln.split(",")] for ln in text[2:] if ln], ndmin=2)
        if rows.size == 0:
            rows = np.zeros((0, 5))
        return cls(
            refresh_rate=float(header["refresh_rate"]),
            zoom_frequency=float(header["zoom_frequency"]),
            rot_frequency=float(header["rot_frequency"]),
            duration=float(header["duration"]),
            zoom_state=rows[:, 1].astype(np.int8),
            rot_state=rows[:, 2].astype(np.int8),
            zoom_scale=rows[:, 3],
            rot_angle=rows[:, 4],
        )


def _eased_motion(seq: np.ndarray, lo: float, hi: float) -> np.ndarray:
    # +1 half-cycles sweep lo -> hi, -1 half-cycles sweep hi -> lo, half-cosine easing.
    # Progress is j / L within a run of length L, so each run starts on an extreme.
    out = np.empty(seq.size, dtype=float)
    start = 0
    for length in run_lengths(seq):
        j = np.arange(length)
        u = 0.5 * (1.0 - np.cos(np.pi * j / length))
        if seq[start] > 0:
            out[start : start + length] = lo + (hi - lo) * u
        else:
            out[start : start + length] = hi - (hi - lo) * u
        start += length
    return out


def dual_motion_schedule(
    pair: tuple[float, float],
    refresh_rate: float,
    duration: float,
    k_min: int = K_MIN,
    zoom_range: tuple[float, float] = ZOOM_RANGE,
    rot_range: tuple[float, float] = ROT_RANGE,
) -> FrameSchedule:
    """Radial zoom driven at ``pair[0]`` and rotation at ``pair[1]``, sharing frame 0 as phase origin.

    The rotation oscillates across the whole ``rot_range`` (midpoint 15 degrees
    for the default -45..75 range).
    """
    a, b = pair
    _check_feasible(a, refresh_rate, k_min)
    _check_feasible(b, refresh_rate, k_min)
    n = int(round(refresh_rate * duration))
    if n < 1:
        raise ScheduleLengthError(f"duration {duration} s yields no frames at {refresh_rate} Hz")
    if n > MAX_FRAMES:
        raise ScheduleLengthError(f"schedules are limited to {MAX_FRAMES} frames")

    # Generate past the end so the final (truncated) half-cycle keeps its true length.
    pad = int(math.ceil(refresh_rate / (2 * min(a, b)))) + 1
    zs = stimulus_sequence(a, refresh_rate, n + pad, k_min)
    rs = stimulus_sequence(b, refresh_rate, n + pad, k_min)
    return FrameSchedule(
        refresh_rate=float(refresh_rate),
        zoom_frequency=float(a),
        rot_frequency=float(b),
        duration=float(duration),
        zoom_state=zs[:n].copy(),
        rot_state=rs[:n].copy(),
        zoom_scale=_eased_motion(zs, *zoom_range)[:n],
        rot_angle=_eased_motion(rs, *rot_range)[:n],
    )
