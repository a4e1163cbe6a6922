"""Classical key-length estimators: IC formula and twist-family argmax rules.

Each estimator has a text-based form and a from-features form that reads the
same statistics out of a full-schema feature row; the two forms agree exactly
because the feature extractor computes the statistics with identical code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analysis

METHOD_IC = "ic"
METHOD_TWIST = "twist"
METHOD_TWIST_PLUS = "twist_plus"
METHOD_TWIST_PLUS_PLUS = "twist_plus_plus"

_COL_LENGTH = analysis.FEATURE_GROUPS["length"][0]
_COL_IC = analysis.FEATURE_GROUPS["ic"][0]
_COL_QUOTIENT = analysis.FEATURE_GROUPS["length_quotient"][0]
_COLS_TWIST = analysis.FEATURE_GROUPS["twist"]
_COLS_TPLUS = analysis.FEATURE_GROUPS["twist_plus"]
_COLS_TPP = analysis.FEATURE_GROUPS["twist_plus_plus"]


@dataclass(frozen=True)
class DomainSpec:
    """Inclusive key-length search range for the argmax estimators."""

    m_min: int = 3
    m_max: int = 25

    def __post_init__(self) -> None:
        if not (2 <= self.m_min <= self.m_max):
            raise ValueError(f"need 2 <= m_min <= m_max, got {self}")


@dataclass(frozen=True)
class Prediction:
    """A single method's key-length guess; None when the method is undefined."""

    method: str
    predicted_k: int | None
    score: float | None


def _round_clamp(raw: float) -> int:
    """Round half away from zero, then clamp into the 3..25 key range."""
    k = math.floor(raw + 0.5)
    return max(3, min(25, k))


def _check_feature_domain(domain: DomainSpec) -> None:
    """The feature schema stores twist columns only up to m=25."""
    if domain.m_max > 25:
        raise ValueError(f"feature rows cover m <= 25, got m_max={domain.m_max}")


def _argmax_smallest(ms: list[int], scores: list[float]) -> tuple[int, float]:
    """Largest score wins; ties go to the smallest m."""
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return ms[best], scores[best]


# ---------------------------
# IC estimator
# ---------------------------


def _ic_prediction(n: float, ic: float) -> Prediction:
    denom = ic * (n - 1) - 0.038 * n + 0.066
    if denom <= 0.0:
        return Prediction(METHOD_IC, None, None)
    raw = 0.028 * n / denom
    return Prediction(METHOD_IC, _round_clamp(raw), raw)


def estimate_ic(text: str) -> Prediction:
    return _ic_prediction(len(text), analysis.index_of_coincidence(text))


def estimate_ic_from_features(row: np.ndarray) -> Prediction:
    return _ic_prediction(float(row[_COL_LENGTH]), float(row[_COL_IC]))


# ---------------------------
# Twist-family estimators
# ---------------------------


def estimate_twist(text: str, domain: DomainSpec = DomainSpec()) -> Prediction:
    profile = analysis.twist_profile(text, domain.m_max)
    ms = list(range(domain.m_min, domain.m_max + 1))
    k, score = _argmax_smallest(ms, [float(profile[m - 1]) for m in ms])
    return Prediction(METHOD_TWIST, k, score)


def estimate_twist_from_features(
    row: np.ndarray, domain: DomainSpec = DomainSpec()
) -> Prediction:
    _check_feature_domain(domain)
    ms = list(range(domain.m_min, domain.m_max + 1))
    k, score = _argmax_smallest(
        ms, [float(row[_COLS_TWIST[m - 1]]) for m in ms]
    )
    return Prediction(METHOD_TWIST, k, score)


def estimate_twist_plus(text: str, domain: DomainSpec = DomainSpec()) -> Prediction:
    profile = analysis.twist_profile(text, domain.m_max)
    ms = list(range(max(2, domain.m_min), domain.m_max + 1))
    k, score = _argmax_smallest(
        ms, [analysis.twist_plus_from_profile(profile, m) for m in ms]
    )
    return Prediction(METHOD_TWIST_PLUS, k, score)


def estimate_twist_plus_from_features(
    row: np.ndarray, domain: DomainSpec = DomainSpec()
) -> Prediction:
    _check_feature_domain(domain)
    ms = list(range(max(2, domain.m_min), domain.m_max + 1))
    k, score = _argmax_smallest(
        ms, [float(row[_COLS_TPLUS[m - 2]]) for m in ms]
    )
    return Prediction(METHOD_TWIST_PLUS, k, score)


def _tpp_domain(domain: DomainSpec, quotient: int) -> list[int]:
    """T++ peaks are meaningless on the saturation plateau, so the search is
    additionally capped at q = floor(N/12)."""
    return list(range(max(2, domain.m_min), min(domain.m_max, quotient) + 1))


def estimate_twist_plus_plus(
    text: str, domain: DomainSpec = DomainSpec()
) -> Prediction:
    ms = _tpp_domain(domain, len(text) // 12)
    if not ms:
        return Prediction(METHOD_TWIST_PLUS_PLUS, None, None)
    profile = analysis.twist_profile(text, ms[-1] + 1)
    k, score = _argmax_smallest(
        ms, [analysis.twist_plus_plus_from_profile(profile, m) for m in ms]
    )
    return Prediction(METHOD_TWIST_PLUS_PLUS, k, score)


def estimate_twist_plus_plus_from_features(
    row: np.ndarray, domain: DomainSpec = DomainSpec()
) -> Prediction:
    _check_feature_domain(domain)
    ms = _tpp_domain(domain, int(row[_COL_QUOTIENT]))
    if not ms:
        return Prediction(METHOD_TWIST_PLUS_PLUS, None, None)
    k, score = _argmax_smallest(ms, [float(row[_COLS_TPP[m - 2]]) for m in ms])
    return Prediction(METHOD_TWIST_PLUS_PLUS, k, score)
