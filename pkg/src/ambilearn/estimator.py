"""Online estimation of the mixture coefficients and its confidence bounds.

The estimate is the thresholded Moore-Penrose solve alpha = A^+ b over the
sliding window, with per-step diagonal regularizers. ``PLearner`` wires the
estimator and the ambiguity-set construction into the per-step learning loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import ambiguity
from .ambiguity import ConfidenceBound, HistoryWindow
from .predictors import PredictorSet


class EstimatorError(ValueError):
    """Invalid estimator input."""


class UnidentifiableWindowError(EstimatorError):
    """All singular values of A lie at or below the noise threshold."""


# -- regularizers --------------------------------------------------------------

def regularizer_P(predictor_values, scale_mask: Optional[Sequence[bool]] = None) -> np.ndarray:
    """Diagonal of the per-step regularization matrix P_k.

    ``predictor_values`` is the (p, n) stack of f^(i)_k. Component j gets
    1 / (sqrt(p) * max_i |f^(i)_k(j)|); components with all-zero predictor
    values, or masked out via ``scale_mask``, get 1 (no scaling). The bound
    eta actually achieved is always measured from data (see measured_eta),
    not assumed to be 1.
    """
    values = np.atleast_2d(np.asarray(predictor_values, dtype=float))
    p, n = values.shape
    if not np.all(np.isfinite(values)):
        raise EstimatorError("predictor values must be finite")
    col_max = np.abs(values).max(axis=0)
    diag = np.ones(n)
    active = col_max > 0.0
    if scale_mask is not None:
        mask = np.asarray(scale_mask, dtype=bool)
        if mask.shape != (n,):
            raise EstimatorError(f"scale_mask must have shape ({n},)")
        active &= mask
    diag[active] = 1.0 / (math.sqrt(p) * col_max[active])
    return diag


def window_regularizers(values: np.ndarray,
                        scale_mask: Optional[Sequence[bool]] = None) -> np.ndarray:
    """(T, n) stack of regularizer diagonals for a (T, p, n) value array."""
    T, p, n = values.shape
    col_max = np.abs(values).max(axis=1)
    diag = np.ones((T, n))
    active = col_max > 0.0
    if scale_mask is not None:
        active &= np.asarray(scale_mask, dtype=bool)[None, :]
    diag[active] = 1.0 / (math.sqrt(p) * col_max[active])
    return diag


def measured_eta(values: np.ndarray, reg: np.ndarray) -> float:
    """eta = max_{i,k} ||P_k f^(i)_k||, the bound actually achieved on the window."""
    return float(np.sqrt(((values * reg[:, None, :]) ** 2).sum(axis=2)).max())


# -- data matrix / vector --------------------------------------------------------

def gram_matrix(values: np.ndarray, reg: np.ndarray) -> np.ndarray:
    """A(i, j) = (1/T) sum_k <f^(j)_k, P_k f^(i)_k> from cached window arrays."""
    T = values.shape[0]
    return np.einsum("tjm,tm,tim->ij", values, reg, values) / T


def data_vector(values: np.ndarray, reg: np.ndarray, successors: np.ndarray) -> np.ndarray:
    """b(i) = (1/T) sum_k <x_{k+1}, P_k f^(i)_k> from cached window arrays."""
    T = values.shape[0]
    return np.einsum("tm,tm,tim->i", successors, reg, values) / T


def _window_values(window: HistoryWindow, pset: PredictorSet) -> np.ndarray:
    states, inputs = window.states(), window.inputs()
    return np.array([pset.evaluate_all(k, states[j], inputs[j])
                     for j, k in enumerate(window.times())])


def build_A(window: HistoryWindow, pset: PredictorSet,
            regularizers: Optional[np.ndarray] = None,
            scale_mask: Optional[Sequence[bool]] = None) -> np.ndarray:
    """Data matrix over the window; ``regularizers`` is a (T, n) diagonal stack
    (computed from the window values when omitted)."""
    values = _window_values(window, pset)
    if regularizers is None:
        regularizers = window_regularizers(values, scale_mask)
    return gram_matrix(values, np.asarray(regularizers, dtype=float))


def build_b(window: HistoryWindow, pset: PredictorSet,
            regularizers: Optional[np.ndarray] = None,
            scale_mask: Optional[Sequence[bool]] = None) -> np.ndarray:
    values = _window_values(window, pset)
    if regularizers is None:
        regularizers = window_regularizers(values, scale_mask)
    return data_vector(values, np.asarray(regularizers, dtype=float),
                       window.successor_states())


# -- thresholded pseudo-inverse ---------------------------------------------------

def _svd_pinv(A: np.ndarray, sigma: float):
    if sigma < 0:
        raise EstimatorError("threshold sigma must be nonnegative")
    U, S, Vt = np.linalg.svd(np.asarray(A, dtype=float))
    keep = S > sigma
    if not keep.any():
        raise UnidentifiableWindowError(
            f"no singular value of A exceeds sigma = {sigma:g} (max is {S.max():g})"
        )
    inv = np.zeros_like(S)
    inv[keep] = 1.0 / S[keep]
    return Vt.T @ (inv[:, None] * U.T), S, keep


def pinv_thresholded(A: np.ndarray, sigma: float):
    """Moore-Penrose inverse with singular values <= sigma treated as zero.

    Returns (A_dagger, sigma_min) where sigma_min is the smallest retained
    singular value. Raises UnidentifiableWindowError when nothing is retained.
    """
    pinv, S, keep = _svd_pinv(A, sigma)
    return pinv, float(S[keep].min())


def estimate_alpha(A: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    """alpha = A^+ b with the sigma-thresholded pseudo-inverse."""
    pinv, _ = pinv_thresholded(A, sigma)
    return pinv @ np.asarray(b, dtype=float)


# -- learning bound and confidences ------------------------------------------------

def gamma_bound(sigma: float, eta: float, n: int, p: int,
                sigma_min_A: float, theta: float = 0.0) -> float:
    """gamma = n c + theta with c = sigma e eta sqrt(n p) / sigma_min(A)."""
    if sigma_min_A <= 0:
        raise EstimatorError("sigma_min_A must be positive")
    if theta < 0:
        raise EstimatorError("theta must be nonnegative")
    c = sigma * math.e * eta * math.sqrt(n * p) / sigma_min_A
    return n * c + theta


def alpha_confidence(gamma: float, c: float, n: int, T: int,
                     mode: str = "exponential") -> ConfidenceBound:
    """Lower bound on Prob(||alpha - alpha_star||_inf <= gamma).

    ``exponential`` requires gamma >= n c and sharpens with T; ``naive`` is the
    Markov bound 1 - n c / (e gamma), nontrivial for gamma >= n c / e. The two
    options live in different regimes and are never blended.
    """
    if mode == "exponential":
        if gamma < n * c:
            return ConfidenceBound(0.0, True)
        value = ambiguity.exponential_factor(gamma, c, n, T)
    elif mode == "naive":
        if gamma < n * c / math.e:
            return ConfidenceBound(0.0, True)
        value = 1.0 - n * c / (math.e * gamma)
    else:
        raise EstimatorError(f"unknown confidence mode {mode!r}")
    return ConfidenceBound(min(max(value, 0.0), 1.0), False)


@dataclass
class EstimatorState:
    """Snapshot of one estimation step (alpha = A^+ b is recomputable)."""

    A: np.ndarray
    b: np.ndarray
    alpha: np.ndarray
    eta: float
    gamma: float
    sigma_min_A: float
    singular_values: np.ndarray
    theta: float = 0.0


# -- the per-step learning loop -----------------------------------------------------

@dataclass
class LearnStep:
    """Everything the loop publishes at one time step."""

    t: int
    T: int
    A: np.ndarray
    b: np.ndarray
    alpha: np.ndarray            # current estimate (carried over when unidentifiable)
    alpha_used: np.ndarray       # alpha actually used for the empirical prediction
    eta: float
    c: float
    gamma: float
    sigma_min_A: float
    singular_values: Optional[np.ndarray]
    H: float
    epsilon: float
    eps_hat: float
    confidence: float
    vacuous: bool
    unidentifiable: bool
    degenerate: bool
    theta: float = 0.0
    phat_atoms: Optional[np.ndarray] = None
    eps_hat_oracle: float = math.nan
    inf_error: float = math.nan

    def estimator_state(self) -> EstimatorState:
        return EstimatorState(
            A=self.A, b=self.b, alpha=self.alpha, eta=self.eta,
            gamma=self.gamma, sigma_min_A=self.sigma_min_A,
            singular_values=self.singular_values, theta=self.theta,
        )

    def ambiguity_set(self) -> ambiguity.AmbiguitySet:
        if self.phat_atoms is None:
            raise EstimatorError("step was computed without atoms")
        return ambiguity.AmbiguitySet(
            center=ambiguity.EmpiricalDistribution(self.phat_atoms),
            radius=self.eps_hat,
            confidence=self.confidence,
            provenance="adaptive_computable",
        )


class PLearner:
    """Per-step pipeline: update the window, estimate alpha, publish the
    empirical prediction and its adaptive radius.

    Owns a HistoryWindow plus rolling caches of predictor values and
    regularizers so each step costs O(T p n) with no re-evaluation of
    historical predictor calls.
    """

    def __init__(self, pset: PredictorSet, *, sigma: float, beta: float,
                 T0: Optional[int] = None, theta: float = 0.0,
                 scale_mask: Optional[Sequence[bool]] = None,
                 radius_mode: str = "full",
                 c_override: Optional[float] = None,
                 denom_floor: float = ambiguity.DENOM_FLOOR):
        if radius_mode not in ("full", "concentration_only"):
            raise EstimatorError(f"unknown radius mode {radius_mode!r}")
        self.pset = pset
        self.sigma = float(sigma)
        self.beta = float(beta)
        self.theta = float(theta)
        self.scale_mask = None if scale_mask is None else np.asarray(scale_mask, bool)
        self.radius_mode = radius_mode
        self.c_override = c_override
        self.denom_floor = float(denom_floor)
        self.window = HistoryWindow(T0)
        self._values: list[np.ndarray] = []
        self._regs: list[np.ndarray] = []
        # Neutral prior: uniform coefficients keep alpha^T 1 = 1 before the
        # first identifiable window.
        self._alpha = np.full(pset.p, 1.0 / pset.p)

    def start(self, x0) -> None:
        self.window.start(x0)
        self._values.clear()
        self._regs.clear()

    def observe(self, d_applied, x_next) -> None:
        """Record the executed input and the observed successor state."""
        t = self.window.current_t
        vals = self.pset.evaluate_all(t, self.window.x_hat_t, np.asarray(d_applied, float))
        self._values.append(vals)
        self._regs.append(regularizer_P(vals, self.scale_mask))
        self.window.record(d_applied, x_next)
        cap = self.window.horizon_cap
        if cap is not None and len(self._values) > cap:
            self._values.pop(0)
            self._regs.pop(0)

    @property
    def alpha(self) -> np.ndarray:
        return self._alpha

    def characterize(self, d_next, *, alpha_star=None, with_atoms: bool = False) -> LearnStep:
        """Run one step of the learning loop for the upcoming input d_next."""
        T = self.window.length
        if T < 1:
            raise EstimatorError("no data recorded yet (T = 0)")
        t = self.window.current_t
        n, p = self.pset.dim_state, self.pset.p
        d_next = np.asarray(d_next, dtype=float)

        values = np.array(self._values)
        regs = np.array(self._regs)
        succ = self.window.successor_states()

        A = gram_matrix(values, regs)
        b = data_vector(values, regs, succ)
        eta = measured_eta(values, regs)

        unidentifiable = False
        svals = None
        c = math.nan
        gamma = math.nan
        sigma_min = math.nan
        try:
            pinv, svals, keep = _svd_pinv(A, self.sigma)
            alpha = pinv @ b
            sigma_min = float(svals[keep].min())
            c = self.sigma * math.e * eta * math.sqrt(n * p) / sigma_min
            gamma = n * c + self.theta
            self._alpha = alpha
        except UnidentifiableWindowError:
            unidentifiable = True
            alpha = self._alpha

        degenerate = abs(float(alpha.sum())) < self.denom_floor
        alpha_used = self._alpha_for_phat(alpha, degenerate)

        f_t = self.pset.evaluate_all(t, self.window.x_hat_t, d_next)
        H = float(np.linalg.norm(values - f_t[None, :, :], axis=2).sum()) / T

        try:
            epsilon = ambiguity.radius_epsilon(
                T, self.beta, n, self.sigma,
                include_higher_order=(self.radius_mode == "full"),
                c_override=self.c_override,
            )
        except ambiguity.AmbiguityError:
            # Only reachable for n = 2, T = 1 (log term undefined).
            epsilon = math.nan
        eps_hat = epsilon + gamma * H if math.isfinite(gamma) else math.nan

        if unidentifiable or not math.isfinite(gamma):
            conf = ConfidenceBound(0.0, True)
        else:
            conf = ambiguity.composite_confidence(T, gamma, c, n, self.beta)

        step = LearnStep(
            t=t, T=T, A=A, b=b, alpha=alpha, alpha_used=alpha_used, eta=eta, c=c,
            gamma=gamma, sigma_min_A=sigma_min, singular_values=svals,
            H=H, epsilon=epsilon, eps_hat=eps_hat,
            confidence=conf.value, vacuous=conf.vacuous,
            unidentifiable=unidentifiable, degenerate=degenerate,
            theta=self.theta,
        )

        if alpha_star is not None:
            alpha_star = np.asarray(alpha_star, dtype=float)
            step.inf_error = float(np.abs(alpha - alpha_star).max())
            oracle_gap = float(np.abs(alpha_used - alpha_star).max())
            step.eps_hat_oracle = epsilon + oracle_gap * H

        if with_atoms:
            total = float(alpha_used.sum())
            # Verbatim mixture of the per-predictor predictions.
            xi = (f_t[None, :, :]                      # (1, p, n) current evals
                  + (succ / total)[:, None, :]         # (T, 1, n) scaled successors
                  - values)                            # (T, p, n) historical evals
            step.phat_atoms = np.einsum("i,tin->tn", alpha_used, xi)
        return step

    def _alpha_for_phat(self, alpha: np.ndarray, degenerate: bool) -> np.ndarray:
        if not degenerate:
            self._last_usable = alpha
            return alpha
        # Degenerate coefficient sum: reuse the previous usable estimate.
        return getattr(self, "_last_usable", np.full(self.pset.p, 1.0 / self.pset.p))
