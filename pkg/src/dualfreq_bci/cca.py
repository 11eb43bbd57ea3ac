"""Canonical correlation and the single / bifold CCA target detectors.

Both detectors are unsupervised: every target is scored against sine/cosine
references built from its stimulation frequencies, and the best-scoring
target wins. Ties go to the lowest target index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coding import FrequencyPlan

DEFAULT_RIDGE = 1e-6
DEFAULT_HARMONICS = 2


class NyquistError(ValueError):
    pass


class SingularCovarianceError(np.linalg.LinAlgError):
    pass


class WindowTooShortError(ValueError):
    pass


def reference_signals(f: float, n_harmonics: int, fs: float, m: int) -> np.ndarray:
    """Rows ``cos(2 pi h f t), sin(2 pi h f t)`` for ``h = 1..n_harmonics``, ``t = (1..m)/fs``."""
    if n_harmonics < 1:
        raise ValueError("n_harmonics must be >= 1")
    if m < 2:
        raise ValueError("need at least two samples")
    if n_harmonics * f >= fs / 2:
        raise NyquistError(
            f"harmonic {n_harmonics} of {f} Hz = {n_harmonics * f} Hz is not below Nyquist ({fs / 2} Hz)"
        )
    t = np.arange(1, m + 1) / fs
    rows = []
    for h in range(1, n_harmonics + 1):
        phase = 2 * np.pi * h * f * t
        rows.append(np.cos(phase))
        rows.append(np.sin(phase))
    return np.vstack(rows)


def bifold_references(
    f1: float, f2: float, n_harmonics: int, fs: float, m: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(y1, y2, yc)``: each frequency's bank and their stack with two sum-frequency rows."""
    if f1 + f2 >= fs / 2:
        raise NyquistError(f"sum frequency {f1 + f2} Hz is not below Nyquist ({fs / 2} Hz)")
    y1 = reference_signals(f1, n_harmonics, fs, m)
    y2 = reference_signals(f2, n_harmonics, fs, m)
    t = np.arange(1, m + 1) / fs
    phase = 2 * np.pi * (f1 + f2) * t
    yc = np.vstack([y1, y2, np.cos(phase), np.sin(phase)])
    return y1, y2, yc


@dataclass(frozen=True)
class ReferenceBank:
    y1: tuple[np.ndarray, ...]
    y2: tuple[np.ndarray, ...]
    yc: tuple[np.ndarray, ...]
    n_harmonics: int
    sampling_rate: float
    window_samples: int

    @classmethod
    def build(
        cls, plan: FrequencyPlan, n_harmonics: int, fs: float, m: int
    ) -> "ReferenceBank":
        refs = [bifold_references(a, b, n_harmonics, fs, m) for a, b in plan.pairs]
        return cls(
            y1=tuple(r[0] for r in refs),
            y2=tuple(r[1] for r in refs),
            yc=tuple(r[2] for r in refs),
            n_harmonics=n_harmonics,
            sampling_rate=fs,
            window_samples=m,
        )


def _centered_cov(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B.T / (A.shape[1] - 1)


def _regularize(C: np.ndarray, ridge: float) -> np.ndarray:
    d = C.shape[0]
    return C + ridge * np.trace(C) / d * np.eye(d)


def _inv_sqrt(C: np.ndarray, name: str) -> np.ndarray:
    evals, evecs = np.linalg.eigh(C)
    if evals[0] <= max(evals[-1], np.finfo(float).tiny) * 1e-13:
        raise SingularCovarianceError(
            f"{name} auto-covariance is rank deficient (min eigenvalue {evals[0]:.3g}); use ridge > 0"
        )
    return (evecs / np.sqrt(evals)) @ evecs.T


def cca_max_corr(
    X: np.ndarray, Y: np.ndarray, ridge: float = DEFAULT_RIDGE
) -> tuple[float, np.ndarray, np.ndarray]:
    """Largest canonical correlation between the rows of ``X`` (K x m) and ``Y`` (r x m).

    Rows are mean-centred and covariances use ``1/(m-1)``. ``ridge * trace / dim``
    is added to each auto-covariance diagonal. The correlation is the top
    singular value of the whitened cross-covariance. The returned weights give
    projections with unit (regularized) variance.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"sample counts differ: {X.shape[1]} vs {Y.shape[1]}")
    m = X.shape[1]
    if m <= max(X.shape[0], Y.shape[0]):
        raise WindowTooShortError(
            f"need more samples ({m}) than rows ({X.shape[0]}, {Y.shape[0]})"
        )
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise ValueError("inputs must be finite")

    Xc = X - X.mean(axis=1, keepdims=True)
    Yc = Y - Y.mean(axis=1, keepdims=True)
    Cxx = _regularize(_centered_cov(Xc, Xc), ridge)
    Cyy = _regularize(_centered_cov(Yc, Yc), ridge)
    Cxy = _centered_cov(Xc, Yc)

    Wx = _inv_sqrt(Cxx, "X")
    Wy = _inv_sqrt(Cyy, "Y")
    U, s, Vt = np.linalg.svd(Wx @ Cxy @ Wy)
    return float(s[0]), Wx @ U[:, 0], Wy @ Vt[0]


@dataclass(frozen=True)
class ScoreVector:
    """Per-target correlations and the decision.

    ``rho1``/``rho2`` are ``None`` for the single-reference CCA detector, whose
    decision statistic is ``rho_c`` alone.
    """

    rho_c: np.ndarray
    rho1: np.ndarray | None = None
    rho2: np.ndarray | None = None

    @property
    def rho_a(self) -> np.ndarray:
        if self.rho1 is None or self.rho2 is None:
            return self.rho_c
        return (self.rho1 + self.rho2 + self.rho_c) / 3.0

    @property
    def feature_vectors(self) -> np.ndarray:
        """``[rho1, rho2, rho_c]`` per target, shape (n_targets, 3)."""
        nan = np.full_like(self.rho_c, np.nan)
        r1 = nan if self.rho1 is None else self.rho1
        r2 = nan if self.rho2 is None else self.rho2
        return np.column_stack([r1, r2, self.rho_c])

    @property
    def predicted(self) -> int:
        # np.argmax returns the first maximum: lowest index wins ties
        return int(np.argmax(self.rho_a))


def _unpack(trial, fs: float | None) -> tuple[np.ndarray, float]:
    if hasattr(trial, "samples"):
        return np.atleast_2d(trial.samples), float(trial.sampling_rate)
    if fs is None:
        raise ValueError("fs is required when classifying a bare sample matrix")
    return np.atleast_2d(np.asarray(trial, dtype=float)), float(fs)


def _window(samples: np.ndarray, bank: ReferenceBank | None, plan: FrequencyPlan,
            n_harmonics: int, fs: float) -> ReferenceBank:
    m = samples.shape[1]
    if bank is None:
        bank = ReferenceBank.build(plan, n_harmonics, fs, m)
    if bank.window_samples != m or bank.sampling_rate != fs:
        raise ValueError("reference bank does not match the trial window")
    rows = max(y.shape[0] for y in bank.yc)
    if m <= max(rows, samples.shape[0]):
        raise WindowTooShortError(
            f"window of {m} samples is too short for {rows}-row references"
        )
    return bank


def classify_cca(
    trial,
    plan: FrequencyPlan,
    n_harmonics: int = DEFAULT_HARMONICS,
    ridge: float = DEFAULT_RIDGE,
    *,
    fs: float | None = None,
    bank: ReferenceBank | None = None,
) -> ScoreVector:
    """Score each target by CCA against its combined reference only.

    ``trial`` is a :class:`~dualfreq_bci.synth.TrialRecord` or a channels x
    samples array (then ``fs`` is required).
    """
    samples, fs = _unpack(trial, fs)
    bank = _window(samples, bank, plan, n_harmonics, fs)
    rho_c = np.array([cca_max_corr(samples, yc, ridge)[0] for yc in bank.yc])
    return ScoreVector(rho_c=rho_c)


def classify_bcca(
    trial,
    plan: FrequencyPlan,
    n_harmonics: int = DEFAULT_HARMONICS,
    ridge: float = DEFAULT_RIDGE,
    *,
    fs: float | None = None,
    bank: ReferenceBank | None = None,
) -> ScoreVector:
    """Bifold CCA: mean of the correlations against y1, y2 and the combined yc."""
    samples, fs = _unpack(trial, fs)
    bank = _window(samples, bank, plan, n_harmonics, fs)
    rho1 = np.array([cca_max_corr(samples, y, ridge)[0] for y in bank.y1])
    rho2 = np.array([cca_max_corr(samples, y, ridge)[0] for y in bank.y2])
    rho_c = np.array([cca_max_corr(samples, y, ridge)[0] for y in bank.yc])
    return ScoreVector(rho_c=rho_c, rho1=rho1, rho2=rho2)


CLASSIFIERS = {"cca": classify_cca, "bcca": classify_bcca}


def get_classifier(method: str):
    try:
        return CLASSIFIERS[method]
    except KeyError:
        raise ValueError(f"unknown classifier {method!r}; choose from {sorted(CLASSIFIERS)}") from None
