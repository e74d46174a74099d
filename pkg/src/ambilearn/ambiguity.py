"""Empirical next-state distributions and probabilistically guaranteed radii.

Builds the residual-based empirical distribution of the next state, its
predictor-mixture counterpart, the perfect-information radius (with explicit
higher-order constants), the adaptive radius, and the composite confidence
bound that accounts for online parameter learning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .predictors import PredictorSet, _as_alpha
from .transport import DiscreteMeasure

DENOM_FLOOR = 1e-6

PROVENANCES = ("perfect_info", "adaptive_oracle", "adaptive_computable")


class AmbiguityError(ValueError):
    """Invalid window state or radius/confidence parameters."""


class DegenerateCoefficientsError(AmbiguityError):
    """|alpha^T 1| below the denominator floor; caller should reuse a previous alpha."""


class HistoryWindow:
    """Sliding buffer of executed (state, input) pairs plus the newest state.

    After ``start(x0)`` and t calls to ``record``, the window holds
    x_hat_k, d_hat_k for k in {t - T, ..., t - 1} with T = min(t, horizon_cap),
    the current state x_hat_t, and exposes aligned array views.
    """

    def __init__(self, horizon_cap: Optional[int] = None):
        if horizon_cap is not None and horizon_cap < 1:
            raise AmbiguityError("horizon_cap must be a positive integer or None")
        self.horizon_cap = horizon_cap
        self._xs: list[np.ndarray] = []
        self._ds: list[np.ndarray] = []
        self._t = 0

    def start(self, x0) -> None:
        self._xs = [np.array(x0, dtype=float).ravel()]
        self._ds = []
        self._t = 0

    def record(self, d_applied, x_next) -> None:
        """Append the executed input d_t and the observed successor x_{t+1}."""
        if not self._xs:
            raise AmbiguityError("call start(x0) before record()")
        self._ds.append(np.array(d_applied, dtype=float).ravel())
        self._xs.append(np.array(x_next, dtype=float).ravel())
        self._t += 1
        if self.horizon_cap is not None and len(self._ds) > self.horizon_cap:
            self._ds.pop(0)
            self._xs.pop(0)

    # -- views ---------------------------------------------------------------

    @property
    def current_t(self) -> int:
        return self._t

    @property
    def length(self) -> int:
        """T = min(t, horizon_cap)."""
        return len(self._ds)

    @property
    def x_hat_t(self) -> np.ndarray:
        if not self._xs:
            raise AmbiguityError("window not started")
        return self._xs[-1]

    def times(self) -> np.ndarray:
        return np.arange(self._t - self.length, self._t)

    def states(self) -> np.ndarray:
        """(T, n) array of x_hat_k."""
        self._require_data()
        return np.array(self._xs[:-1])

    def inputs(self) -> np.ndarray:
        """(T, m) array of d_hat_k."""
        self._require_data()
        return np.array(self._ds)

    def successor_states(self) -> np.ndarray:
        """(T, n) array of x_hat_{k+1}; the last row is x_hat_t."""
        self._require_data()
        return np.array(self._xs[1:])

    def _require_data(self) -> None:
        if self.length < 1:
            raise AmbiguityError("window is empty (T >= 1 required)")

    def _offset(self, k: int) -> int:
        lo = self._t - self.length
        if not (lo <= k <= self._t - 1):
            raise AmbiguityError(
                f"time index {k} outside window [{lo}, {self._t - 1}]"
            )
        return k - lo


@dataclass(frozen=True)
class EmpiricalDistribution:
    """Equal-weight Dirac mixture over (T, n) atoms."""

    atoms: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        if atoms.shape[0] < 1:
            raise AmbiguityError("empirical distribution needs at least one atom")
        object.__setattr__(self, "atoms", atoms)

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def to_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure.uniform(self.atoms)


class ConfidenceBound(NamedTuple):
    value: float
    vacuous: bool


@dataclass(frozen=True)
class AmbiguitySet:
    """A Wasserstein ball descriptor: empirical center, radius, confidence."""

    center: EmpiricalDistribution
    radius: float
    confidence: float
    provenance: str

    def __post_init__(self):
        if self.radius < 0:
            raise AmbiguityError("radius must be nonnegative")
        if not (0.0 <= self.confidence <= 1.0):
            raise AmbiguityError("confidence must lie in [0, 1]")
        if self.provenance not in PROVENANCES:
            raise AmbiguityError(f"unknown provenance {self.provenance!r}")

    def to_json_record(self, t: int) -> dict:
        return {
            "t": int(t),
            "radius": float(self.radius),
            "confidence": float(self.confidence),
            "provenance": self.provenance,
            "atoms": self.center.atoms.tolist(),
        }


# -- residuals and empirical distributions ------------------------------------

def residual_xi(window: HistoryWindow, f, k: int, d) -> np.ndarray:
    """xi_k(d) = f(t, x_t, d) + x_{k+1} - f(k, x_k, d_k), for k in the window."""
    window._require_data()
    i = window._offset(k)
    t = window.current_t
    d = np.asarray(d, dtype=float)
    return (np.asarray(f(t, window.x_hat_t, d), float)
            + window.successor_states()[i]
            - np.asarray(f(k, window.states()[i], window.inputs()[i]), float))


def residuals(window: HistoryWindow, f, d) -> np.ndarray:
    """(T, n) stack of xi_k over the whole window."""
    window._require_data()
    t = window.current_t
    d = np.asarray(d, dtype=float)
    head = np.asarray(f(t, window.x_hat_t, d), float)
    states, inputs, succ = window.states(), window.inputs(), window.successor_states()
    hist = np.array([f(k, states[i], inputs[i])
                     for i, k in enumerate(window.times())], dtype=float)
    return head + succ - hist


def empirical_Q(window: HistoryWindow, f, d) -> EmpiricalDistribution:
    """Empirical distribution of x_{t+1} under known dynamics f."""
    return EmpiricalDistribution(residuals(window, f, d))


def predictor_prediction_xi_i(window: HistoryWindow, pset: PredictorSet, alpha,
                              i: int, k: int, d) -> np.ndarray:
    """xi_k^(i)(alpha, d) = f^(i)(t, x_t, d) + x_{k+1} / (alpha^T 1) - f^(i)(k, x_k, d_k)."""
    a = _as_alpha(alpha)
    total = float(a.sum())
    if abs(total) < DENOM_FLOOR:
        raise DegenerateCoefficientsError(
            f"|alpha^T 1| = {abs(total):.3g} below floor {DENOM_FLOOR}"
        )
    window._require_data()
    j = window._offset(k)
    t = window.current_t
    d = np.asarray(d, dtype=float)
    return (pset.evaluate(i, t, window.x_hat_t, d)
            + window.successor_states()[j] / total
            - pset.evaluate(i, k, window.states()[j], window.inputs()[j]))


def predictor_predictions(window: HistoryWindow, pset: PredictorSet, alpha, d) -> np.ndarray:
    """(p, T, n) stack of xi_k^(i) over predictors and window entries."""
    a = _as_alpha(alpha)
    total = float(a.sum())
    if abs(total) < DENOM_FLOOR:
        raise DegenerateCoefficientsError(
            f"|alpha^T 1| = {abs(total):.3g} below floor {DENOM_FLOOR}"
        )
    window._require_data()
    t = window.current_t
    d = np.asarray(d, dtype=float)
    states, inputs, succ = window.states(), window.inputs(), window.successor_states()
    out = np.empty((pset.p, window.length, states.shape[1]))
    for i in range(pset.p):
        head = pset.evaluate(i, t, window.x_hat_t, d)
        hist = np.array([pset.evaluate(i, k, states[j], inputs[j])
                         for j, k in enumerate(window.times())], dtype=float)
        out[i] = head + succ / total - hist
    return out


def empirical_P_hat(window: HistoryWindow, pset: PredictorSet, alpha, d) -> EmpiricalDistribution:
    """Empirical mixture prediction: atoms sum_i alpha_i xi_k^(i)(alpha, d)."""
    a = _as_alpha(alpha)
    xi = predictor_predictions(window, pset, alpha, d)
    return EmpiricalDistribution(np.einsum("i,itn->tn", a, xi))


def drift_term_H(window: HistoryWindow, pset: PredictorSet, d) -> float:
    """H(t, T, d) = (1/T) sum_i sum_k ||f^(i)(k, x_k, d_k) - f^(i)(t, x_t, d)||."""
    window._require_data()
    t = window.current_t
    d = np.asarray(d, dtype=float)
    states, inputs = window.states(), window.inputs()
    total = 0.0
    for i in range(pset.p):
        head = pset.evaluate(i, t, window.x_hat_t, d)
        hist = np.array([pset.evaluate(i, k, states[j], inputs[j])
                         for j, k in enumerate(window.times())], dtype=float)
        total += float(np.linalg.norm(hist - head, axis=1).sum())
    return total / window.length


# -- radii ---------------------------------------------------------------------

def radius_constant_c(n: int, sigma: float) -> float:
    """Higher-order radius constant.

    n = 1 uses the explicit 3^3.5 * 2^10 * sigma^3 value; n >= 3 uses the
    general formula; n = 2 reuses the general formula evaluated at n = 2
    (the source gives only the functional form there).
    """
    if n < 1:
        raise AmbiguityError("dimension must be >= 1")
    if n == 1:
        return 3.0**3.5 * 2.0**10 * sigma**3
    return ((1.0 + math.sqrt(2.0)) * (1.0 + math.sqrt(3.0))
            * 3.0 ** (3.5 - 1.0 / n) * 2.0**7 * sigma**3 * n**1.5)


def radius_rate(T: int, n: int) -> float:
    """Decay rate of the higher-order term: T^(-1/max(n,2)), with a log
    correction in dimension two."""
    if T < 1:
        raise AmbiguityError("window length must be >= 1")
    if n == 2:
        if T < 2:
            raise AmbiguityError("n = 2 rate needs T >= 2 (log term undefined at T = 1)")
        return (T / math.log(T)) ** -0.5
    return float(T) ** (-1.0 / max(n, 2))


def radius_epsilon(T: int, beta: float, n: int, sigma: float, *,
                   include_higher_order: bool = True,
                   c_override: Optional[float] = None) -> float:
    """Perfect-information ambiguity radius.

    sqrt(2 n sigma^2 ln(1/beta) / T) plus c(n, sigma) * rate(T, n). The
    higher-order term can be disabled for diagnostics/plotting
    (``include_higher_order=False``); guarantees always use the full radius.
    """
    if not (0.0 < beta < 1.0):
        raise AmbiguityError(f"beta must lie in (0, 1), got {beta}")
    if T < 1:
        raise AmbiguityError("window length must be >= 1")
    if n < 1:
        raise AmbiguityError("dimension must be >= 1")
    if sigma < 0:
        raise AmbiguityError("sigma must be nonnegative")
    first = math.sqrt(2.0 * n * sigma**2 * math.log(1.0 / beta) / T)
    if not include_higher_order:
        return first
    c = radius_constant_c(n, sigma) if c_override is None else float(c_override)
    return first + c * radius_rate(T, n)


def adaptive_radius(epsilon: float, gamma: float, H: float) -> float:
    """eps_hat = epsilon + gamma * H.

    Pass gamma from the learning bound for the computable radius, or the true
    ||alpha_star - alpha||_inf for the oracle variant.
    """
    if epsilon < 0 or gamma < 0 or H < 0:
        raise AmbiguityError("adaptive radius inputs must be nonnegative")
    return epsilon + gamma * H


def exponential_factor(gamma: float, c: float, n: int, T: int) -> float:
    """1 - exp(-(n c - gamma)^2 T^2 / (2 [(2T - 1) c gamma + n c^2]))."""
    if T < 1:
        raise AmbiguityError("T must be >= 1")
    num = (n * c - gamma) ** 2 * float(T) ** 2
    den = 2.0 * ((2.0 * T - 1.0) * c * gamma + n * c**2)
    if den < 0:
        raise AmbiguityError("negative denominator in exponential factor")
    if den == 0.0:
        # c = 0 (noiseless limit): the bound concentrates immediately.
        return 1.0 if num > 0 else 0.0
    return 1.0 - math.exp(-num / den)


def composite_confidence(T: int, gamma: float, c: float, n: int,
                         beta: float) -> ConfidenceBound:
    """Composite guarantee (1 - beta)(1 - exp(...)) for the computable radius.

    Requires gamma > n c; at or below that boundary the bound is vacuous and
    (0.0, vacuous=True) is returned.
    """
    if not (0.0 < beta < 1.0):
        raise AmbiguityError(f"beta must lie in (0, 1), got {beta}")
    if gamma <= n * c:
        return ConfidenceBound(0.0, True)
    value = (1.0 - beta) * exponential_factor(gamma, c, n, T)
    return ConfidenceBound(min(max(value, 0.0), 1.0), False)
