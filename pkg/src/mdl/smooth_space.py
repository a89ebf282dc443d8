"""Finite-dimensional normed spaces carrying an (r, D)-smoothness certificate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

NORM_KINDS = ("euclidean", "sup", "p_norm")


@dataclass(frozen=True)
class SmoothSpaceSpec:
    """R^dim with a declared norm and a user-supplied (r, D) certificate.

    The certificate asserts E||sum X_i||^r <= D * sum E||X_i||^r for every
    martingale difference sequence in the space. It is not derived here,
    only falsified empirically by :func:`verify_smoothness`. Euclidean spaces
    default to (r, D) = (2, 1); other norms must declare both values.
    """

    dim: int = 1
    norm_kind: str = "euclidean"
    r: float | None = None
    D: float | None = None
    rho: float | None = None

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise InputError(f"dim must be a positive integer, got {self.dim!r}")
        if self.norm_kind not in NORM_KINDS:
            raise InputError(f"unknown norm kind {self.norm_kind!r}")
        if self.norm_kind == "p_norm":
            if self.rho is None or not self.rho >= 1:
                raise InputError("p_norm requires rho >= 1")
        if self.r is None or self.D is None:
            if self.norm_kind != "euclidean":
                raise InputError(
                    f"{self.norm_kind} norm has no default certificate; declare r and D"
                )
            object.__setattr__(self, "r", 2.0 if self.r is None else self.r)
            object.__setattr__(self, "D", 1.0 if self.D is None else self.D)
        if not 1.0 < self.r <= 2.0:
            raise InputError(f"r must lie in (1, 2], got {self.r}")
        if not self.D >= 1.0:
            raise InputError(f"D must be >= 1, got {self.D}")

    @classmethod
    def euclidean(cls, dim: int = 1) -> SmoothSpaceSpec:
        return cls(dim=dim, norm_kind="euclidean")

    def norms(self, v: np.ndarray) -> np.ndarray:
        """Norm along the last axis of an array of shape (..., dim)."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise InputError(f"expected vectors of length {self.dim}, got {v.shape[-1]}")
        if self.dim == 1:
            return np.abs(v[..., 0])
        if self.norm_kind == "euclidean":
            return np.sqrt(np.einsum("...i,...i->...", v, v))
        if self.norm_kind == "sup":
            return np.max(np.abs(v), axis=-1)
        return np.sum(np.abs(v) ** self.rho, axis=-1) ** (1.0 / self.rho)

    def to_dict(self) -> dict:
        out = {"dim": self.dim, "norm": self.norm_kind, "r": self.r, "D": self.D}
        if self.rho is not None:
            out["rho"] = self.rho
        return out

    @classmethod
    def from_dict(cls, spec: dict | None) -> SmoothSpaceSpec:
        spec = dict(spec or {})
        unknown = set(spec) - {"dim", "norm", "r", "D", "rho"}
        if unknown:
            raise InputError(f"unknown space fields {sorted(unknown)}")
        return cls(
            dim=spec.get("dim", 1),
            norm_kind=spec.get("norm", "euclidean"),
            r=spec.get("r"),
            D=spec.get("D"),
            rho=spec.get("rho"),
        )


def norm(space: SmoothSpaceSpec, v) -> float:
    """Norm of a single vector of length ``space.dim``."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] != space.dim:
        raise InputError(f"vector of length {space.dim} expected, got shape {v.shape}")
    return float(space.norms(v))


@dataclass(frozen=True)
class SmoothnessReport:
    """Monte Carlo comparison of E||S_n||^r with D * sum E||X_i||^r.

    ``lhs_ci`` is a two-sided normal interval at ``confidence``; ``violation``
    is raised only when the one-sided lower bound of lhs at the same level
    exceeds rhs, so a certificate that holds with equality is not flagged.
    """

    n: int
    trials: int
    lhs: float
    lhs_ci_low: float
    lhs_ci_high: float
    rhs: float
    ratio: float
    ratio_ci_low: float
    ratio_ci_high: float
    violation: bool
    vacuous: bool
    rhs_exact: bool


def verify_smoothness(space: SmoothSpaceSpec, model, n: int, trials: int, seed: int,
                      confidence: float = 0.99, workers: int | None = None) -> SmoothnessReport:
    """Estimate E||S_n||^r and compare with D * n * E||X||^r for a stationary model."""
    from scipy.stats import norm as gaussian

    from .errors import AnalyticTailUnavailable, DomainError
    from .mc_estimator import run_blocks

    if trials < 1:
        raise InputError("trials must be positive")
    if n < 1:
        raise InputError("n must be positive")
    if model.space.dim != space.dim:
        raise InputError("model increments do not live in this space")
    r, D = space.r, space.D

    def block(rng, size):
        x = model.sample(rng, size, n)
        s = space.norms(x.sum(axis=1)) ** r
        inc = space.norms(x) ** r
        return np.array([s.sum(), (s * s).sum(), inc.sum()])

    sums = run_blocks(block, trials, per_trial_cost=n * space.dim, seed=seed,
                      label=f"smoothness/n={n}", workers=workers)
    mean = sums[0] / trials
    var = max(sums[1] / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
    se = np.sqrt(var / trials)
    exact = True
    try:
        rhs = D * n * model.norm_moment(r)
    except DomainError:
        rhs = float("inf")
    except AnalyticTailUnavailable:
        rhs = D * sums[2] / trials
        exact = False
    z2 = gaussian.ppf(0.5 + confidence / 2)
    z1 = gaussian.ppf(confidence)
    lo, hi = mean - z2 * se, mean + z2 * se
    if rhs == 0:
        return SmoothnessReport(n, trials, float(mean), float(lo), float(hi), 0.0, float("nan"), float("nan"),
                                float("nan"), bool(mean - z1 * se > 0), True, exact)
    return SmoothnessReport(n, trials, float(mean), float(lo), float(hi), float(rhs),
                            float(mean / rhs), float(lo / rhs), float(hi / rhs),
                            bool(mean - z1 * se > rhs), False, exact)
