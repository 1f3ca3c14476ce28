"""Adaptive dendrogram cutoff: acceleration elbow with a variance fallback.

The threshold for a merge-height sequence is chosen from a recent window of
the last r = max(1, floor(rho * (n-1))) heights. When the window is long
enough (r > 3) and the second-order signal is strong (max |kappa| > eps),
the cut is the height at the sharpest upward acceleration, floored by the
fallback mean + lambda * std; otherwise the fallback alone is used. Fixed
variants of this rule (fallback only, acceleration only, acceleration-min
at a pinned rho) exist for ablation runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateInputError
from .hac import LinkageMatrix


class CutoffBranch(Enum):
    ACCELERATION_MIN = "acceleration_min"
    ACCELERATION_ONLY = "acceleration_only"
    FALLBACK_ONLY = "fallback_only"


class StrategyKind(Enum):
    DYNAMIC = "dynamic"
    FALLBACK_ONLY = "fallback"
    ACCELERATION_ONLY = "accel"
    ACCELERATION_MIN = "accel-min"


@dataclass(frozen=True)
class CutoffConfig:
    rho: float = 0.3
    lam: float = 1.0
    epsilon: float = 1e-8

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise DegenerateInputError(f"rho must be in (0, 1], got {self.rho}")
        if self.lam <= 0.0:
            raise DegenerateInputError(f"lambda must be > 0, got {self.lam}")
        if self.epsilon <= 0.0:
            raise DegenerateInputError(f"epsilon must be > 0, got {self.epsilon}")


@dataclass(frozen=True)
class CutoffResult:
    """Chosen threshold plus everything needed to audit the choice."""

    delta_elbow: float
    branch: CutoffBranch
    r: int
    kappa: np.ndarray
    j_star: int | None
    delta_fallback: float


@dataclass(frozen=True)
class CutoffStrategy:
    """Either the dynamic rule or one of the fixed ablation variants.

    Fixed acceleration variants carry their own window fraction; the
    dynamic and fallback variants use the config's rho.
    """

    kind: StrategyKind
    rho: float | None = None

    def __post_init__(self):
        fixed = self.kind in (StrategyKind.ACCELERATION_ONLY, StrategyKind.ACCELERATION_MIN)
        if fixed and self.rho is None:
            raise DegenerateInputError(f"{self.kind.value} strategy needs a fixed rho")

    @staticmethod
    def dynamic() -> "CutoffStrategy":
        return CutoffStrategy(StrategyKind.DYNAMIC)

    @staticmethod
    def fallback_only() -> "CutoffStrategy":
        return CutoffStrategy(StrategyKind.FALLBACK_ONLY)

    @staticmethod
    def acceleration_only(rho: float) -> "CutoffStrategy":
        return CutoffStrategy(StrategyKind.ACCELERATION_ONLY, rho)

    @staticmethod
    def acceleration_min(rho: float) -> "CutoffStrategy":
        return CutoffStrategy(StrategyKind.ACCELERATION_MIN, rho)

    @staticmethod
    def parse(text: str) -> "CutoffStrategy":
        """Parse CLI spellings: dynamic | fallback | accel:RHO | accel-min:RHO."""
        name, _, arg = text.partition(":")
        name = name.strip().lower()
        if name == "dynamic":
            return CutoffStrategy.dynamic()
        if name == "fallback":
            return CutoffStrategy.fallback_only()
        if name in ("accel", "accel-min"):
            if not arg:
                raise DegenerateInputError(f"strategy {name!r} needs :rho, e.g. {name}:0.5")
            kind = StrategyKind.ACCELERATION_ONLY if name == "accel" else StrategyKind.ACCELERATION_MIN
            return CutoffStrategy(kind, float(arg))
        raise DegenerateInputError(f"unknown cutoff strategy {text!r}")

    def describe(self) -> str:
        if self.rho is None:
            return self.kind.value
        return f"{self.kind.value}:{self.rho:g}"


def recent_window(Z: LinkageMatrix, rho: float) -> np.ndarray:
    """The last r = max(1, floor(rho * (n-1))) merge heights."""
    heights = Z.heights
    r = max(1, int(np.floor(rho * len(heights))))
    return heights[-r:]


def accelerations(delta_recent: np.ndarray) -> np.ndarray:
    """Second-order finite differences over consecutive height triples."""
    delta_recent = np.asarray(delta_recent, dtype=np.float64)
    if delta_recent.size < 3:
        return np.empty(0)
    return np.diff(delta_recent, n=2)


def fallback_threshold(delta_recent: np.ndarray, lam: float) -> float:
    """Mean plus lam times the population standard deviation of the window."""
    delta_recent = np.asarray(delta_recent, dtype=np.float64)
    if delta_recent.size == 0:
        raise DegenerateInputError("fallback threshold needs a non-empty window")
    return float(delta_recent.mean() + lam * delta_recent.std())


def _elbow(window: np.ndarray, cfg: CutoffConfig, use_min: bool) -> CutoffResult:
    r = int(window.size)
    kappa = accelerations(window)
    fallback = fallback_threshold(window, cfg.lam)
    if r > 3 and kappa.size and float(np.abs(kappa).max()) > cfg.epsilon:
        j_star = int(np.argmax(kappa))  # first occurrence on ties
        delta_j = float(window[j_star])  # height at the first element of the triple
        if use_min:
            return CutoffResult(
                min(delta_j, fallback), CutoffBranch.ACCELERATION_MIN, r, kappa, j_star, fallback
            )
        return CutoffResult(
            delta_j, CutoffBranch.ACCELERATION_ONLY, r, kappa, j_star, fallback
        )
    return CutoffResult(fallback, CutoffBranch.FALLBACK_ONLY, r, kappa, None, fallback)


def compute_cutoff(Z: LinkageMatrix, cfg: CutoffConfig) -> CutoffResult:
    """Dynamic rule: acceleration elbow floored by the fallback, else fallback.

    The acceleration branch requires both a long window (r > 3) and a
    strong signal (max |kappa| > eps); short or flat windows always take
    the fallback.
    """
    return _elbow(recent_window(Z, cfg.rho), cfg, use_min=True)


def apply_strategy(Z: LinkageMatrix, strategy: CutoffStrategy, cfg: CutoffConfig) -> CutoffResult:
    """Evaluate one cutoff variant. Fixed-rho variants ignore cfg.rho.

    The acceleration-only variant falls through to the fallback value when
    its window is unusable, so every variant is total.
    """
    if strategy.kind is StrategyKind.DYNAMIC:
        return compute_cutoff(Z, cfg)
    if strategy.kind is StrategyKind.FALLBACK_ONLY:
        window = recent_window(Z, cfg.rho)
        fallback = fallback_threshold(window, cfg.lam)
        return CutoffResult(
            fallback, CutoffBranch.FALLBACK_ONLY, int(window.size),
            accelerations(window), None, fallback,
        )
    window = recent_window(Z, strategy.rho)
    return _elbow(window, cfg, use_min=strategy.kind is StrategyKind.ACCELERATION_MIN)
