"""Dual-frequency target coding.

Each target carries two motion frequencies: one base frequency ``f_i`` and one
derived frequency ``g_i`` lying between two neighbouring base frequencies. The
assignment is chosen so that any two targets share at most one adjacency
relation.

Indexing: formulas are usually written 1-based (``f_1 .. f_N``); every array
here is 0-based, so ``base[0]`` is ``f_1`` and ``derived[N-1]`` is ``g_N``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Sequence

import numpy as np

FREQ_ATOL = 1e-9
DEFAULT_BOUNDS = (2.0, 40.0)
MIN_TARGETS = 5


class PlanError(ValueError):
    """Invalid base frequencies or an unsupported number of targets."""


@dataclass(frozen=True)
class FrequencyPlan:
    base: tuple[float, ...]
    derived: tuple[float, ...]
    min_half_gap: float
    pairs: tuple[tuple[float, float], ...]
    f_bounds: tuple[float, float] = DEFAULT_BOUNDS

    @property
    def n_targets(self) -> int:
        return len(self.pairs)

    def to_dict(self) -> dict:
        return {
            "base": list(self.base),
            "derived": list(self.derived),
            "min_half_gap": self.min_half_gap,
            "pairs": [{"a": a, "b": b} for a, b in self.pairs],
            "f_bounds": list(self.f_bounds),
            "indexing": "0-based; target i uses pairs[i]; base[i] is f_(i+1)",
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyPlan":
        return cls(
            base=tuple(float(x) for x in d["base"]),
            derived=tuple(float(x) for x in d["derived"]),
            min_half_gap=float(d["min_half_gap"]),
            pairs=tuple((float(p["a"]), float(p["b"])) for p in d["pairs"]),
            f_bounds=(float(d["f_bounds"][0]), float(d["f_bounds"][1])),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FrequencyPlan":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Violation:
    kind: str  # "adjacency" | "duplicate" | "bounds"
    targets: tuple[int, ...]
    detail: str = field(default="")


def _check_base(base: Sequence[float], min_len: int) -> np.ndarray:
    f = np.asarray(base, dtype=float)
    if f.ndim != 1 or f.size < min_len:
        raise PlanError(f"need at least {min_len} base frequencies, got {f.size}")
    for i, v in enumerate(f):
        if not np.isfinite(v) or v <= 0:
            raise PlanError(f"base[{i}] = {v} is not a finite positive frequency")
    for i in range(1, f.size):
        if not f[i] > f[i - 1]:
            raise PlanError(f"base[{i}] = {f[i]} is not greater than base[{i - 1}] = {f[i - 1]}")
    return f


def derive_adjacent_frequencies(base: Sequence[float]) -> tuple[tuple[float, ...], float]:
    """Midpoints between consecutive base frequencies, plus one above the top.

    Returns ``(derived, min_half_gap)`` where ``derived[i]`` is the midpoint of
    ``base[i]`` and ``base[i+1]`` and the last entry is ``base[-1] + M`` with
    ``M`` the smallest half-gap between neighbours.
    """
    f = _check_base(base, 2)
    half_gaps = np.diff(f) / 2.0
    m = float(half_gaps.min())
    derived = [float((f[i] + f[i + 1]) / 2.0) for i in range(f.size - 1)]
    derived.append(float(f[-1] + m))
    return tuple(derived), m


def assign_target_pairs(
    base: Sequence[float], f_bounds: tuple[float, float] = DEFAULT_BOUNDS
) -> FrequencyPlan:
    """Build the per-target ``(a, b)`` frequency pairs.

    With 1-based indices: ``a_1 = f_1``, ``a_i = f_(i+1)`` for ``2 <= i <= N-1``,
    ``a_N = f_2``; ``b_1 = g_(N-1)``, ``b_i = g_(i-1)`` for ``2 <= i <= N-1``,
    ``b_N = g_N``. Only defined for five or more targets.
    """
    f = _check_base(base, 2)
    n = f.size
    if n < MIN_TARGETS:
        raise PlanError(
            f"pair assignment needs N >= {MIN_TARGETS} targets, got N = {n}; "
            "the wrap-around rule is undefined for fewer targets"
        )
    derived, m = derive_adjacent_frequencies(f)
    base_t = tuple(float(x) for x in f)

    a = [base_t[0]] + [base_t[i + 1] for i in range(1, n - 1)] + [base_t[1]]
    b = [derived[n - 2]] + [derived[i - 1] for i in range(1, n - 1)] + [derived[n - 1]]
    return FrequencyPlan(
        base=base_t,
        derived=derived,
        min_half_gap=m,
        pairs=tuple(zip(a, b)),
        f_bounds=(float(f_bounds[0]), float(f_bounds[1])),
    )


def _adjacency_count(p: tuple[float, float], q: tuple[float, float], plan: FrequencyPlan) -> int:
    # g_i (derived[i]) is adjacent to f_i (base[i]) and f_(i+1) (base[i+1]).
    def base_idx(x: float) -> int | None:
        for i, v in enumerate(plan.base):
            if abs(v - x) <= FREQ_ATOL:
                return i
        return None

    def derived_idx(x: float) -> int | None:
        for i, v in enumerate(plan.derived):
            if abs(v - x) <= FREQ_ATOL:
                return i
        return None

    def adjacent(x: float, y: float) -> bool:
        for g, f in ((x, y), (y, x)):
            gi, fi = derived_idx(g), base_idx(f)
            if gi is not None and fi is not None and fi in (gi, gi + 1):
                return True
        return False

    return sum(adjacent(x, y) for x in p for y in q)


def validate_plan(plan: FrequencyPlan) -> list[Violation]:
    """Return every rule the plan breaks; an empty list means the plan is valid."""
    out: list[Violation] = []
    lo, hi = plan.f_bounds

    for i, (a, b) in enumerate(plan.pairs):
        for name, v in (("a", a), ("b", b)):
            if v < lo - FREQ_ATOL or v > hi + FREQ_ATOL:
                out.append(Violation("bounds", (i,), f"pairs[{i}].{name} = {v} outside [{lo}, {hi}]"))
    for i, v in enumerate(plan.base):
        if v < lo - FREQ_ATOL or v > hi + FREQ_ATOL:
            out.append(Violation("bounds", (), f"base[{i}] = {v} outside [{lo}, {hi}]"))

    freqs = [(i, name, v) for i, pr in enumerate(plan.pairs) for name, v in zip("ab", pr)]
    for (i, n1, v1), (j, n2, v2) in combinations(freqs, 2):
        if abs(v1 - v2) <= FREQ_ATOL:
            out.append(
                Violation("duplicate", (i, j), f"pairs[{i}].{n1} == pairs[{j}].{n2} == {v1}")
            )

    for i, j in combinations(range(plan.n_targets), 2):
        k = _adjacency_count(plan.pairs[i], plan.pairs[j], plan)
        if k > 1:
            out.append(Violation("adjacency", (i, j), f"targets {i} and {j} share {k} adjacencies"))
    return out
