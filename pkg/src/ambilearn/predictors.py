"""Environment model, predictor classes, and mixture evaluation.

A predictor is a known deterministic vector field (t, x, d) -> R^n. The
library never discovers predictors; callers register them by name (for
config-driven construction) or pass function objects directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .noise import NoiseModel

RANK_TOL = 1e-8


class PredictorError(ValueError):
    """Invalid predictor, predictor set, or environment specification."""


@dataclass(frozen=True)
class Predictor:
    """Deterministic vector field (t, x, d) -> R^n.

    The callable must be a pure function of its arguments; builtin predictors
    additionally broadcast over a leading batch axis of ``x`` and ``d``.
    """

    name: str
    fn: Callable[[float, np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, t, x, d) -> np.ndarray:
        return np.asarray(self.fn(t, np.asarray(x, float), np.asarray(d, float)), float)


class PredictorSet:
    """Ordered family of p predictors sharing state/input dimensions.

    Linear independence (almost everywhere) is checked numerically at
    construction: the p x (n * #probes) evaluation matrix must have numerical
    rank p, with tolerance ``rank_tol`` relative to its largest singular value.
    """

    def __init__(self, predictors: Sequence[Predictor], dim_state: int, dim_input: int,
                 probes: Optional[Sequence[Tuple[float, np.ndarray, np.ndarray]]] = None,
                 rank_tol: float = RANK_TOL):
        if len(predictors) < 1:
            raise PredictorError("need at least one predictor")
        self.predictors = tuple(predictors)
        self.dim_state = int(dim_state)
        self.dim_input = int(dim_input)
        if probes is None:
            probes = _default_probes(self.dim_state, self.dim_input, len(predictors))
        self._check_rank(probes, rank_tol)

    @property
    def p(self) -> int:
        return len(self.predictors)

    def _check_rank(self, probes, rank_tol: float) -> None:
        rows = []
        for f in self.predictors:
            evals = []
            for t, x, d in probes:
                v = f(t, x, d)
                if v.shape != (self.dim_state,):
                    raise PredictorError(
                        f"predictor {f.name!r} returned shape {v.shape}, "
                        f"expected ({self.dim_state},)"
                    )
                evals.append(v)
            rows.append(np.concatenate(evals))
        matrix = np.array(rows)
        svals = np.linalg.svd(matrix, compute_uv=False)
        rank = int(np.sum(svals > rank_tol * svals[0]))
        if rank < self.p:
            raise PredictorError(
                f"predictors are numerically dependent on the probe set "
                f"(rank {rank} < p = {self.p}; singular values {svals})"
            )

    def evaluate(self, i: int, t, x, d) -> np.ndarray:
        return self.predictors[i](t, x, d)

    def evaluate_all(self, t, x, d) -> np.ndarray:
        """(p, n) stack of all predictor values at one point."""
        return np.stack([f(t, x, d) for f in self.predictors])


def _default_probes(n: int, m: int, p: int):
    # Deterministic probe set; used only when the caller supplies none.
    rng = np.random.default_rng(160079)
    count = max(2 * p, p + 3)
    return [(float(t), rng.standard_normal(n), rng.standard_normal(m))
            for t in range(count)]


@dataclass(frozen=True)
class MixtureCoefficients:
    """Coefficient vector alpha, with its sum recorded for denominator guards."""

    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float).ravel()
        if not np.all(np.isfinite(alpha)):
            raise PredictorError("alpha must be finite")
        object.__setattr__(self, "alpha", alpha)

    @property
    def total(self) -> float:
        """alpha^T 1_p, the denominator appearing in the prediction residuals."""
        return float(self.alpha.sum())


def _as_alpha(alpha) -> np.ndarray:
    if isinstance(alpha, MixtureCoefficients):
        return alpha.alpha
    return np.asarray(alpha, dtype=float).ravel()


def evaluate_mixture(pset: PredictorSet, alpha, t, x, d) -> np.ndarray:
    """sum_i alpha_i f^(i)(t, x, d)."""
    a = _as_alpha(alpha)
    if a.shape[0] != pset.p:
        raise PredictorError(f"alpha has length {a.shape[0]}, expected {pset.p}")
    return a @ pset.evaluate_all(t, x, d)


# -- ground-truth coefficient schedules --------------------------------------

def constant_alpha(alpha) -> Callable[[int, np.ndarray], np.ndarray]:
    a = _as_alpha(alpha)
    return lambda t, x: a


def time_switched_alpha(breakpoints: Dict[int, Sequence[float]]):
    """Piecewise-constant schedule keyed by time index (state ignored)."""
    if not breakpoints:
        raise PredictorError("empty schedule")
    times = sorted(breakpoints)
    if times[0] != 0:
        raise PredictorError("schedule must define alpha from t = 0")
    alphas = [np.asarray(breakpoints[t], dtype=float) for t in times]

    def schedule(t, x):
        idx = int(np.searchsorted(times, t, side="right")) - 1
        return alphas[idx]

    return schedule


@dataclass(frozen=True)
class Environment:
    """True dynamics x_{t+1} = f(t, x_t, d_t) + w_t.

    ``truth`` is either a single known predictor or a (PredictorSet, schedule)
    pair where the schedule maps (t, x) to the true coefficients. ``noise``
    None means w identically zero.
    """

    dim_state: int
    dim_input: int
    noise: Optional[NoiseModel] = None
    known_f: Optional[Predictor] = None
    mixture: Optional[Tuple[PredictorSet, Callable[[int, np.ndarray], np.ndarray]]] = None

    def __post_init__(self):
        if (self.known_f is None) == (self.mixture is None):
            raise PredictorError("exactly one of known_f / mixture must be set")
        if self.noise is not None and self.noise.dim != self.dim_state:
            raise PredictorError(
                f"noise dim {self.noise.dim} != state dim {self.dim_state}"
            )

    def truth_eval(self, t, x, d) -> np.ndarray:
        if self.known_f is not None:
            return self.known_f(t, x, d)
        pset, schedule = self.mixture
        return evaluate_mixture(pset, schedule(t, np.asarray(x, float)), t, x, d)

    def alpha_star(self, t, x) -> Optional[np.ndarray]:
        if self.mixture is None:
            return None
        return np.asarray(self.mixture[1](t, np.asarray(x, float)), dtype=float)


def step_environment(env: Environment, t, x, d, rng: Optional[np.random.Generator]):
    """One environment step; returns (x_next, w) so tests can log the true draw."""
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if x.shape != (env.dim_state,) or d.shape != (env.dim_input,):
        raise PredictorError(
            f"state/input shapes {x.shape}/{d.shape} do not match environment "
            f"({env.dim_state},)/({env.dim_input},)"
        )
    if env.noise is None:
        w = np.zeros(env.dim_state)
    else:
        w = env.noise.sample(rng)
    return env.truth_eval(t, x, d) + w, w


def alpha_window_constant(env: Environment, times, states) -> bool:
    """Diagnostic: is the scheduled truth alpha constant over the given window?

    The adaptive guarantees assume a single alpha-star across the window; this
    flags (rather than forbids) windows that straddle a schedule change.
    """
    if env.mixture is None:
        return True
    alphas = [env.alpha_star(t, x) for t, x in zip(times, states)]
    first = alphas[0]
    return all(np.array_equal(first, a) for a in alphas[1:])


# -- named registry (config-driven construction) ------------------------------

PREDICTOR_REGISTRY: Dict[str, Callable[..., Predictor]] = {}


def register_predictor(name: str, factory: Callable[..., Predictor]) -> None:
    PREDICTOR_REGISTRY[name] = factory


def make_predictor(name: str, **params) -> Predictor:
    try:
        factory = PREDICTOR_REGISTRY[name]
    except KeyError:
        raise PredictorError(
            f"unknown predictor {name!r}; registered: {sorted(PREDICTOR_REGISTRY)}"
        ) from None
    return factory(**params)


def _unicycle_next(x, d, e1, e2, r, R, h) -> np.ndarray:
    # Differential-drive update in flat R^3 coordinates (no angle wrapping);
    # broadcasts over a leading batch axis.
    x = np.asarray(x, float)
    d = np.asarray(d, float)
    u1 = (r / 2.0) * (d[..., 0] + d[..., 1] + e1)
    u2 = (r / (2.0 * R)) * (d[..., 0] - d[..., 1] + e2)
    out = np.empty(np.broadcast_shapes(x.shape[:-1], d.shape[:-1]) + (3,))
    out[..., 0] = x[..., 0] + h * np.cos(x[..., 2]) * u1
    out[..., 1] = x[..., 1] + h * np.sin(x[..., 2]) * u1
    out[..., 2] = x[..., 2] - h * u2
    return out


def _make_unicycle(e1: float, e2: float, r: float = 0.15, R: float = 0.4,
                   h: float = 1e-3) -> Predictor:
    def fn(t, x, d):
        return _unicycle_next(x, d, e1, e2, r, R, h)

    return Predictor(name=f"unicycle_e({e1},{e2})", fn=fn)


def _make_scalar_linear(a: float, b: float) -> Predictor:
    def fn(t, x, d):
        return a * x + b * d

    return Predictor(name=f"scalar_linear(a={a},b={b})", fn=fn)


def _make_affine(A, B, c) -> Predictor:
    A = np.atleast_2d(np.asarray(A, float))
    B = np.atleast_2d(np.asarray(B, float))
    c = np.asarray(c, float).ravel()

    def fn(t, x, d):
        return x @ A.T + d @ B.T + c

    return Predictor(name="affine", fn=fn)


def _make_zero(dim_state: int) -> Predictor:
    def fn(t, x, d):
        return np.zeros(np.asarray(x, float).shape[:-1] + (dim_state,)) \
            if np.asarray(x).ndim > 1 else np.zeros(dim_state)

    return Predictor(name="zero", fn=fn)


register_predictor("unicycle_e", _make_unicycle)
register_predictor("scalar_linear", _make_scalar_linear)
register_predictor("affine", _make_affine)
register_predictor("zero", _make_zero)
