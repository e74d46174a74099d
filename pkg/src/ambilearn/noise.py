"""Zero-mean subGaussian disturbance models and their closed-form bounds.

Supported families: Gaussian, uniform on a ball, finite discrete, and finite
mixtures thereof. The subGaussian parameter sigma is declared by the caller
and validated against the support / covariance at construction time; it is
never inferred from data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

MEAN_TOL = 1e-12
WEIGHT_TOL = 1e-12
_EIG_SLACK = 1e-9


class NoiseModelError(ValueError):
    """Invalid disturbance-model specification."""


@dataclass(frozen=True)
class NoiseModel:
    """Immutable disturbance model; share freely, pass each consumer its own rng."""

    kind: str
    dim: int
    sigma: float
    covariance: Optional[np.ndarray] = None
    radius: Optional[float] = None
    atoms: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    components: Tuple[Tuple[float, "NoiseModel"], ...] = field(default=())

    # -- constructors -------------------------------------------------------

    @classmethod
    def gaussian(cls, covariance, sigma: float) -> "NoiseModel":
        cov = np.atleast_2d(np.asarray(covariance, dtype=float))
        n = cov.shape[0]
        if cov.shape != (n, n) or not np.allclose(cov, cov.T, atol=1e-12):
            raise NoiseModelError("covariance must be a symmetric square matrix")
        if sigma <= 0:
            raise NoiseModelError("sigma must be positive")
        eigs = np.linalg.eigvalsh(cov)
        if eigs[0] < -_EIG_SLACK:
            raise NoiseModelError(f"covariance not PSD (min eigenvalue {eigs[0]:g})")
        if eigs[-1] > sigma**2 + _EIG_SLACK:
            raise NoiseModelError(
                f"largest covariance eigenvalue {eigs[-1]:g} exceeds sigma^2 = {sigma**2:g}"
            )
        return cls(kind="gaussian", dim=n, sigma=float(sigma), covariance=cov)

    @classmethod
    def uniform_ball(cls, radius: float, dim: int, sigma: float | None = None) -> "NoiseModel":
        if radius <= 0 or dim < 1:
            raise NoiseModelError("need radius > 0 and dim >= 1")
        sigma = float(radius if sigma is None else sigma)
        if sigma <= 0 or radius > sigma + MEAN_TOL:
            raise NoiseModelError("support ball must lie inside the sigma ball")
        return cls(kind="uniform_ball", dim=int(dim), sigma=sigma, radius=float(radius))

    @classmethod
    def discrete(cls, atoms, weights, sigma: float) -> "NoiseModel":
        atoms = np.atleast_2d(np.asarray(atoms, dtype=float))
        weights = np.asarray(weights, dtype=float).ravel()
        if atoms.shape[0] != weights.shape[0]:
            raise NoiseModelError("atom/weight count mismatch")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise NoiseModelError("weights must be nonnegative and sum to 1")
        mean = weights @ atoms
        if np.abs(mean).max() > MEAN_TOL:
            raise NoiseModelError(f"discrete support is not zero-mean (mean {mean})")
        if sigma <= 0:
            raise NoiseModelError("sigma must be positive")
        norms = np.linalg.norm(atoms, axis=1)
        if norms.max() > sigma + MEAN_TOL:
            raise NoiseModelError("an atom lies outside the sigma ball")
        return cls(kind="discrete", dim=atoms.shape[1], sigma=float(sigma),
                   atoms=atoms, weights=weights)

    @classmethod
    def mixture(cls, components, sigma: float | None = None) -> "NoiseModel":
        comps = tuple((float(w), m) for w, m in components)
        if not comps:
            raise NoiseModelError("mixture needs at least one component")
        dims = {m.dim for _, m in comps}
        if len(dims) != 1:
            raise NoiseModelError("mixture components must share dimension")
        total = sum(w for w, _ in comps)
        if any(w < 0 for w, _ in comps) or abs(total - 1.0) > WEIGHT_TOL:
            raise NoiseModelError("mixture weights must be nonnegative and sum to 1")
        sigma = float(max(m.sigma for _, m in comps) if sigma is None else sigma)
        if any(m.sigma > sigma + MEAN_TOL for _, m in comps):
            raise NoiseModelError("a component sigma exceeds the mixture sigma")
        return cls(kind="mixture", dim=dims.pop(), sigma=sigma, components=comps)

    @classmethod
    def from_config(cls, spec: dict) -> "NoiseModel":
        """Build a model from the JSON config schema (strict keys)."""
        spec = dict(spec)
        kind = spec.pop("kind", None)
        try:
            if kind == "gaussian":
                model = cls.gaussian(spec.pop("covariance"), spec.pop("sigma"))
            elif kind == "uniform_ball":
                model = cls.uniform_ball(spec.pop("radius"), spec.pop("dim"),
                                         spec.pop("sigma", None))
            elif kind == "discrete":
                model = cls.discrete(spec.pop("atoms"), spec.pop("weights"),
                                     spec.pop("sigma"))
            elif kind == "mixture":
                comps = [(c["weight"], cls.from_config(c["model"]))
                         for c in spec.pop("components")]
                model = cls.mixture(comps, spec.pop("sigma", None))
            else:
                raise NoiseModelError(f"unknown noise kind {kind!r}")
        except KeyError as exc:
            raise NoiseModelError(f"noise spec missing key {exc}") from None
        if spec:
            raise NoiseModelError(f"unknown noise keys: {sorted(spec)}")
        return model

    # -- sampling -----------------------------------------------------------

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One draw; repeated calls are iid and deterministic given the rng seed."""
        return self.sample_many(rng, 1)[0]

    def _chol(self) -> np.ndarray:
        cached = getattr(self, "_chol_cache", None)
        if cached is None:
            cov = self.covariance
            if np.linalg.eigvalsh(cov)[0] < 1e-15:
                cov = cov + _EIG_SLACK * np.eye(self.dim)
            cached = np.linalg.cholesky(cov)
            object.__setattr__(self, "_chol_cache", cached)
        return cached

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """(size, dim) array of iid draws."""
        if self.kind == "gaussian":
            return rng.standard_normal((size, self.dim)) @ self._chol().T
        if self.kind == "uniform_ball":
            direction = rng.standard_normal((size, self.dim))
            norms = np.linalg.norm(direction, axis=1, keepdims=True)
            norms[norms == 0] = 1.0
            radii = self.radius * rng.random(size) ** (1.0 / self.dim)
            return direction / norms * radii[:, None]
        if self.kind == "discrete":
            idx = rng.choice(self.atoms.shape[0], size=size, p=self.weights)
            return self.atoms[idx]
        if self.kind == "mixture":
            if len(self.components) == 1:
                # Single component: identical stream to sampling the component
                # directly with the same rng.
                return self.components[0][1].sample_many(rng, size)
            probs = np.array([w for w, _ in self.components])
            idx = rng.choice(len(self.components), size=size, p=probs)
            out = np.empty((size, self.dim))
            for c, (_, model) in enumerate(self.components):
                mask = idx == c
                count = int(mask.sum())
                if count:
                    out[mask] = model.sample_many(rng, count)
            return out
        raise NoiseModelError(f"unknown kind {self.kind!r}")

    # -- closed-form bounds ---------------------------------------------------

    def tail_bound(self, eta: float) -> float:
        """Upper bound on Prob(||w||_inf >= eta): min(1, 2n exp(-eta^2 / 2 sigma^2))."""
        if eta < 0:
            raise NoiseModelError("eta must be nonnegative")
        raw = 2.0 * self.dim * math.exp(-(eta**2) / (2.0 * self.sigma**2))
        return min(1.0, raw)

    def moment_bound(self, l: int) -> float:
        """Upper bound on E[||w||_inf^l]: n sigma^l l^(l/2 + 1), for integer l >= 1."""
        if not isinstance(l, (int, np.integer)) or l < 1:
            raise NoiseModelError("moment order l must be an integer >= 1")
        return self.dim * self.sigma**l * float(l) ** (l / 2.0 + 1.0)


def dirac_zero(dim: int, sigma: float = 1.0) -> NoiseModel:
    """Degenerate point mass at the origin (useful for noiseless environments)."""
    return NoiseModel.discrete(np.zeros((1, dim)), [1.0], sigma)
