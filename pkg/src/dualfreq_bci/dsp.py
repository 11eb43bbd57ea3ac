"""Band-pass preprocessing and spectral estimation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal as sps


class FilterDesignError(ValueError):
    pass


class SignalLengthError(ValueError):
    pass


@dataclass(frozen=True)
class FilterSpec:
    low_cut: float
    high_cut: float
    order: int
    passband_ripple: float
    sampling_rate: float
    sos: np.ndarray

    @property
    def coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """Transfer-function form ``(b, a)`` with ``a[0] == 1``; for inspection only."""
        b, a = sps.sos2tf(self.sos)
        return b / a[0], a / a[0]

    @property
    def filter_order(self) -> int:
        # band-pass design doubles the prototype order
        return 2 * self.order

    @property
    def padlen(self) -> int:
        return 3 * (self.filter_order + 1)

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(s[3:]) for s in self.sos])

    def response(self, freqs: np.ndarray) -> np.ndarray:
        """Complex single-pass frequency response at ``freqs`` Hz."""
        _, h = sps.sosfreqz(self.sos, worN=np.asarray(freqs, dtype=float), fs=self.sampling_rate)
        return h


def design_cheby1_bandpass(
    low: float = 2.0,
    high: float = 40.0,
    order: int = 4,
    ripple_db: float = 0.5,
    fs: float = 500.0,
) -> FilterSpec:
    if not 0 < low < high < fs / 2:
        raise FilterDesignError(
            f"band edges must satisfy 0 < low < high < fs/2; got low={low}, high={high}, fs={fs}"
        )
    if not 2 <= order <= 10:
        raise FilterDesignError(f"order must be in [2, 10], got {order}")
    if not ripple_db > 0:
        raise FilterDesignError(f"passband ripple must be positive, got {ripple_db}")
    sos = sps.cheby1(order, ripple_db, [low, high], btype="bandpass", fs=fs, output="sos")
    spec = FilterSpec(low, high, order, ripple_db, fs, sos)
    if np.max(np.abs(spec.poles())) >= 1.0:
        raise FilterDesignError("designed filter is unstable")
    return spec


def _forward_backward(sos: np.ndarray, x: np.ndarray, padlen: int) -> np.ndarray:
    return sps.sosfiltfilt(sos, x, axis=-1, padtype="odd", padlen=padlen)


def filtfilt(spec: FilterSpec, x: np.ndarray) -> np.ndarray:
    """Zero-phase filtering along the last axis.

    Forward-backward filtering with odd reflection padding, averaged with the
    backward-forward pass (time-reversed input). The average is exactly
    symmetric under time reversal and keeps the squared magnitude response.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if n <= spec.padlen:
        raise SignalLengthError(
            f"signal of {n} samples is too short; need more than {spec.padlen} for padding"
        )
    fb = _forward_backward(spec.sos, x, spec.padlen)
    bf = _forward_backward(spec.sos, x[..., ::-1], spec.padlen)[..., ::-1]
    return 0.5 * (fb + bf)


@dataclass(frozen=True)
class PsdEstimate:
    frequencies: np.ndarray
    power: np.ndarray
    segment_length: int
    overlap: float
    window: str
    sampling_rate: float

    def write(self, path: str | Path, header: str = "") -> None:
        lines = [
            f"# window={self.window} segment_length={self.segment_length} "
            f"overlap={self.overlap:g} fs={self.sampling_rate:g}"
        ]
        if header:
            lines.extend(f"# {h}" for h in header.splitlines())
        lines.append("frequency,power")
        lines.extend(f"{f:.9g},{p:.9g}" for f, p in zip(self.frequencies, self.power))
        Path(path).write_text("\n".join(lines) + "\n")


def welch_psd(
    x: np.ndarray,
    fs: float,
    segment_length: int | None = None,
    overlap_fraction: float = 0.5,
    window_name: str = "hann",
) -> PsdEstimate:
    """One-sided Welch PSD (power per Hz) of a 1-D signal.

    Defaults to one-second Hann segments with 50% overlap. Bin ``k`` sits at
    ``k * fs / segment_length``.
    """
    x = np.asarray(x, dtype=float)
    if segment_length is None:
        segment_length = int(round(fs))
    if segment_length > x.size:
        raise SignalLengthError(
            f"segment_length {segment_length} exceeds signal length {x.size}"
        )
    if not 0 <= overlap_fraction <= 0.9:
        raise ValueError(f"overlap_fraction must be in [0, 0.9], got {overlap_fraction}")
    noverlap = int(round(segment_length * overlap_fraction))
    freqs, pxx = sps.welch(
        x,
        fs=fs,
        window=window_name,
        nperseg=segment_length,
        noverlap=noverlap,
        detrend=False,
        scaling="density",
    )
    return PsdEstimate(freqs, pxx, segment_length, overlap_fraction, window_name, fs)
