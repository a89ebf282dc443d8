"""Tail functions t -> P{Z > t} for non-negative random variables Z.

Every bound evaluator takes its distributional input as a tail function.
Besides evaluation, each tail advertises the structure the quadrature layer
exploits: discontinuities and kinks (``knots``), a support bound beyond which
the tail vanishes (``bound``), a polynomial decay index (``tail_index``) and,
where it is exact, a pure power law ``A * t**-alpha`` valid from ``t0`` on
(``power_law``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InputError


class TailFunction:
    """Base class. Subclasses implement ``_eval`` on float arrays."""

    analytic = True

    @property
    def knots(self) -> tuple[float, ...]:
        return ()

    @property
    def bound(self) -> float:
        return math.inf

    @property
    def tail_index(self) -> float:
        return math.inf

    @property
    def power_law(self) -> tuple[float, float, float] | None:
        return None

    def _eval(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = self._eval(np.atleast_1d(arr))
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)


class ZeroTail(TailFunction):
    """Tail of Z = 0 almost surely."""

    @property
    def bound(self) -> float:
        return 0.0

    def _eval(self, t):
        return np.where(t < 0, 1.0, 0.0)

    def __repr__(self):
        return "ZeroTail()"


@dataclass(frozen=True)
class DiscreteTail(TailFunction):
    """Tail of a finitely supported law: atoms with probabilities."""

    atoms: tuple[float, ...]
    weights: tuple[float, ...]
    _suffix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if atoms.shape != weights.shape or atoms.ndim != 1 or atoms.size == 0:
            raise InputError("atoms and weights must be equal-length non-empty sequences")
        if np.any(weights < 0) or weights.sum() > 1 + 1e-9:
            raise InputError("weights must be non-negative with total mass <= 1")
        order = np.argsort(atoms, kind="stable")
        atoms, weights = atoms[order], weights[order]
        uniq, inverse = np.unique(atoms, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inverse, weights)
        suffix = np.concatenate([np.cumsum(merged[::-1])[::-1], [0.0]])
        object.__setattr__(self, "atoms", tuple(uniq.tolist()))
        object.__setattr__(self, "weights", tuple(merged.tolist()))
        object.__setattr__(self, "_suffix", np.minimum(suffix, 1.0))

    @classmethod
    def step(cls, level: float, mass: float = 1.0) -> DiscreteTail:
        """G(t) = mass for t < level and 0 afterwards."""
        return cls((float(level),), (float(mass),))

    @property
    def knots(self):
        return tuple(a for a in self.atoms if a > 0)

    @property
    def bound(self):
        return max(self.atoms[-1], 0.0)

    def _eval(self, t):
        idx = np.searchsorted(np.asarray(self.atoms), t, side="right")
        return self._suffix[idx]

    def left_limit(self, t: float) -> float:
        idx = np.searchsorted(np.asarray(self.atoms), t, side="left")
        return float(self._suffix[idx])


class EmpiricalTail(DiscreteTail):
    """Right-continuous empirical exceedance function of a sample."""

    analytic = False

    def __init__(self, samples: Sequence[float]):
        values = np.asarray(samples, dtype=float).ravel()
        if values.size == 0:
            raise InputError("empirical tail needs at least one sample")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InputError("samples must be finite and non-negative")
        uniq, counts = np.unique(values, return_counts=True)
        object.__setattr__(self, "counts", tuple(int(c) for c in counts))
        object.__setattr__(self, "total", int(values.size))
        super().__init__(tuple(uniq.tolist()), tuple((counts / values.size).tolist()))

    def __repr__(self):
        return f"EmpiricalTail(n={self.total}, distinct={len(self.atoms)})"


@dataclass(frozen=True)
class ParetoTail(TailFunction):
    """G(t) = min{1, (scale/t)**alpha}."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.scale > 0):
            raise InputError("Pareto tail needs alpha > 0 and scale > 0")

    @property
    def knots(self):
        return (self.scale,)

    @property
    def tail_index(self):
        return self.alpha

    @property
    def power_law(self):
        return (self.scale, self.scale**self.alpha, self.alpha)

    def _eval(self, t):
        out = np.ones_like(t)
        big = t > self.scale
        out[big] = (self.scale / t[big]) ** self.alpha
        return out


@dataclass(frozen=True)
class ProductParetoTail(TailFunction):
    """Tail of scale * Y_1 * ... * Y_k with Y_i iid Pareto(alpha, 1).

    For t' = t/scale >= 1, G = t'^-alpha * sum_{i<k} (alpha log t')^i / i!.
    """

    alpha: float
    k: int
    scale: float = 1.0

    def __post_init__(self):
        if self.k < 1 or not (self.alpha > 0 and self.scale > 0):
            raise InputError("product Pareto tail needs k >= 1, alpha > 0, scale > 0")

    @property
    def knots(self):
        return (self.scale,)

    @property
    def tail_index(self):
        return self.alpha

    @property
    def power_law(self):
        if self.k == 1:
            return (self.scale, self.scale**self.alpha, self.alpha)
        return None

    def _eval(self, t):
        out = np.ones_like(t)
        big = t > self.scale
        tt = t[big] / self.scale
        lg = self.alpha * np.log(tt)
        acc = np.zeros_like(tt)
        term = np.ones_like(tt)
        for i in range(self.k):
            if i:
                term = term * lg / i
            acc += term
        out[big] = tt ** (-self.alpha) * acc
        return np.minimum(out, 1.0)


@dataclass(frozen=True)
class ExponentialTail(TailFunction):
    """G(t) = exp(-rate * t) for t >= 0."""

    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise InputError("exponential rate must be positive")

    def _eval(self, t):
        return np.where(t < 0, 1.0, np.exp(-self.rate * np.maximum(t, 0.0)))


@dataclass(frozen=True)
class ScaledTail(TailFunction):
    """Tail of factor * Z, given the tail of Z."""

    base: TailFunction
    factor: float

    def __post_init__(self):
        if not self.factor > 0:
            raise InputError("scale factor must be positive (use ZeroTail for 0)")

    @property
    def analytic(self):
        return self.base.analytic

    @property
    def knots(self):
        return tuple(k * self.factor for k in self.base.knots)

    @property
    def bound(self):
        return self.base.bound * self.factor

    @property
    def tail_index(self):
        return self.base.tail_index

    @property
    def power_law(self):
        pl = self.base.power_law
        if pl is None:
            return None
        t0, a, alpha = pl
        return (t0 * self.factor, a * self.factor**alpha, alpha)

    def _eval(self, t):
        return self.base(t / self.factor)


@dataclass(frozen=True)
class PowerTail(TailFunction):
    """Tail of factor * Z**power for non-negative Z."""

    base: TailFunction
    power: float
    factor: float = 1.0

    def __post_init__(self):
        if not (self.power > 0 and self.factor > 0):
            raise InputError("power and factor must be positive")

    @property
    def analytic(self):
        return self.base.analytic

    @property
    def knots(self):
        return tuple(self.factor * k**self.power for k in self.base.knots)

    @property
    def bound(self):
        return self.factor * self.base.bound**self.power

    @property
    def tail_index(self):
        return self.base.tail_index / self.power

    @property
    def power_law(self):
        pl = self.base.power_law
        if pl is None:
            return None
        t0, a, alpha = pl
        return (self.factor * t0**self.power, a * self.factor ** (alpha / self.power),
                alpha / self.power)

    def _eval(self, t):
        out = np.ones_like(t)
        pos = t >= 0
        out[pos] = self.base((t[pos] / self.factor) ** (1.0 / self.power))
        return out

    def left_limit(self, t: float) -> float:
        base_left = getattr(self.base, "left_limit", None)
        arg = (t / self.factor) ** (1.0 / self.power)
        return base_left(arg) if base_left else self.base(np.nextafter(arg, 0.0))


@dataclass(frozen=True)
class MixtureTail(TailFunction):
    """Tail of a finite mixture of laws."""

    components: tuple[TailFunction, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.components) != len(self.weights) or not self.components:
            raise InputError("mixture needs matching components and weights")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1) > 1e-9:
            raise InputError("mixture weights must be a probability vector")

    @property
    def analytic(self):
        return all(c.analytic for c in self.components)

    @property
    def knots(self):
        return tuple(sorted({k for c in self.components for k in c.knots}))

    @property
    def bound(self):
        return max(c.bound for c in self.components)

    @property
    def tail_index(self):
        return min(c.tail_index for c in self.components)

    def _eval(self, t):
        return sum(w * c(t) for c, w in zip(self.components, self.weights))


@dataclass(frozen=True)
class MaxOfIidTail(TailFunction):
    """Tail of the maximum of n iid copies: 1 - (1 - G)^n."""

    base: TailFunction
    n: int

    @property
    def analytic(self):
        return self.base.analytic

    @property
    def knots(self):
        return self.base.knots

    @property
    def bound(self):
        return self.base.bound

    @property
    def tail_index(self):
        return self.base.tail_index

    def _eval(self, t):
        g = np.clip(self.base(t), 0.0, 1.0)
        with np.errstate(divide="ignore"):
            return -np.expm1(self.n * np.log1p(-g))


class CallableTail(TailFunction):
    """Wrap a user function, checking range and monotonicity on a grid."""

    def __init__(self, fn: Callable, knots: Sequence[float] = (), bound: float = math.inf,
                 tail_index: float = math.inf, validate: bool = True):
        self._fn = fn
        self._knots = tuple(sorted(float(k) for k in knots))
        self._bound = float(bound)
        self._tail_index = float(tail_index)
        if validate:
            check_tail(self)

    @property
    def knots(self):
        return self._knots

    @property
    def bound(self):
        return self._bound

    @property
    def tail_index(self):
        return self._tail_index

    def _eval(self, t):
        return np.asarray([float(self._fn(float(s))) for s in t])


def check_tail(tail: TailFunction, upper: float = 1.0, grid: np.ndarray | None = None) -> None:
    """Raise InputError if ``tail`` leaves [0, upper] or increases on a sample grid."""
    if grid is None:
        grid = np.geomspace(1e-8, 1e8, 321)
    pts = np.concatenate([[0.0], grid, np.asarray(tail.knots, dtype=float)])
    pts = np.unique(pts)
    vals = np.asarray(tail(pts), dtype=float)
    if np.any(~np.isfinite(vals)) or np.any(vals < -1e-12) or np.any(vals > upper + 1e-12):
        raise InputError(f"tail values must lie in [0, {upper}]")
    if np.any(np.diff(vals) > 1e-12):
        raise InputError("tail function must be non-increasing")


def as_tail(obj) -> TailFunction:
    if isinstance(obj, TailFunction):
        return obj
    if callable(obj):
        return CallableTail(obj)
    raise InputError(f"cannot interpret {obj!r} as a tail function")


def parse_tail(spec: str) -> TailFunction:
    """Parse the compact CLI syntax: ``pareto:1.8[:scale]``, ``step:1``, ``exp:1``,
    ``prodpareto:alpha:k``, ``zero``."""
    parts = spec.strip().split(":")
    kind, args = parts[0].lower(), parts[1:]
    try:
        vals = [float(a) for a in args]
        if kind == "zero" and not vals:
            return ZeroTail()
        if kind == "pareto" and len(vals) in (1, 2):
            return ParetoTail(*vals)
        if kind == "step" and len(vals) in (1, 2):
            return DiscreteTail.step(*vals)
        if kind == "exp" and len(vals) <= 1:
            return ExponentialTail(*vals)
        if kind == "prodpareto" and len(vals) in (2, 3):
            return ProductParetoTail(vals[0], int(vals[1]), *vals[2:])
    except ValueError as exc:
        raise InputError(f"bad tail spec {spec!r}: {exc}") from exc
    raise InputError(f"unrecognised tail spec {spec!r}")


def inverse_sample(tail: TailFunction, rng: np.random.Generator, shape) -> np.ndarray:
    """Draw from the law with the given tail by inverse transform (analytic kinds)."""
    u = 1.0 - rng.random(shape)  # in (0, 1]
    if isinstance(tail, ZeroTail):
        return np.zeros(shape)
    if isinstance(tail, ParetoTail):
        return tail.scale * u ** (-1.0 / tail.alpha)
    if isinstance(tail, ExponentialTail):
        return -np.log(u) / tail.rate
    if isinstance(tail, ScaledTail):
        return tail.factor * inverse_sample(tail.base, rng, shape)
    if isinstance(tail, DiscreteTail):
        # smallest atom a with G(a) < u
        atoms = np.asarray(tail.atoms)
        levels = tail._suffix[1:]
        idx = np.searchsorted(-levels, -u, side="right")
        return atoms[np.minimum(idx, len(atoms) - 1)]
    raise InputError(f"no sampler for {type(tail).__name__}")
