"""Stationary martingale difference sequences and product orthomartingale fields.

Every model is a frozen dataclass with an exact sampler and, where the law
allows, exact tails of the increment norm and of its conditional p-th moment.
Sequences are shifts of iid innovations; fields use the product construction
m(i) = prod_q eps^q_{i_q} with one iid sequence per axis.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import binom

from .errors import AnalyticTailUnavailable, DomainError, InputError, ResourceError
from .smooth_space import SmoothSpaceSpec
from .tails import (DiscreteTail, MaxOfIidTail, MixtureTail, ParetoTail, PowerTail,
                    ProductParetoTail, ScaledTail, TailFunction, ZeroTail)

FIELD_SITE_BUDGET = 1 << 22
ENUMERATION_LIMIT = 20


def _signs(rng: np.random.Generator, shape) -> np.ndarray:
    return 1.0 - 2.0 * rng.integers(0, 2, size=shape, dtype=np.int8)


def _directions(space: SmoothSpaceSpec, rng, shape) -> np.ndarray:
    """Symmetric unit vectors (in the space's norm), shape ``shape + (dim,)``."""
    if space.dim == 1:
        return _signs(rng, shape)[..., None]
    g = rng.standard_normal(tuple(shape) + (space.dim,))
    return g / space.norms(g)[..., None]


class MartingaleModel:
    """Common interface of the sequence models."""

    space: SmoothSpaceSpec
    kind: str = ""

    @property
    def finite_support(self) -> bool:
        return False

    @property
    def is_zero(self) -> bool:
        return False

    @property
    def increment_bound(self) -> float:
        """Almost sure bound on the increment norm (inf when unbounded)."""
        return math.inf

    def sample(self, rng: np.random.Generator, trials: int, n: int) -> np.ndarray:
        """Array of shape (trials, n, dim)."""
        raise NotImplementedError

    def increment_tail(self) -> TailFunction:
        raise NotImplementedError

    def norm_moment(self, p: float) -> float:
        raise NotImplementedError

    def conditional_moment_tail(self, p: float) -> TailFunction:
        raise NotImplementedError

    def max_increment_tail(self, n: int) -> TailFunction:
        raise NotImplementedError

    def conditional_sum_tail(self, n: int, p: float) -> TailFunction:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class _IidModel(MartingaleModel):
    def max_increment_tail(self, n: int) -> TailFunction:
        return MaxOfIidTail(self.increment_tail(), int(n))

    def conditional_moment_tail(self, p: float) -> TailFunction:
        return DiscreteTail.step(self.norm_moment(p))

    def conditional_sum_tail(self, n: int, p: float) -> TailFunction:
        return DiscreteTail.step(n * self.norm_moment(p))

    def _space_dict(self) -> dict:
        return {} if self.space == SmoothSpaceSpec() else {"space": self.space.to_dict()}


@dataclass(frozen=True)
class IidSign(_IidModel):
    """Rademacher increments +-e_1 (norm exactly 1)."""

    space: SmoothSpaceSpec = field(default_factory=SmoothSpaceSpec)
    kind = "iid_sign"

    @property
    def finite_support(self):
        return True

    @property
    def increment_bound(self):
        return 1.0

    def sample(self, rng, trials, n):
        out = np.zeros((trials, n, self.space.dim))
        out[..., 0] = _signs(rng, (trials, n))
        return out

    def increment_tail(self):
        return DiscreteTail.step(1.0)

    def norm_moment(self, p):
        return 1.0

    def to_dict(self):
        return {"kind": self.kind, **self._space_dict()}


@dataclass(frozen=True)
class IidUniformSphere(_IidModel):
    """Unit-norm increments with a symmetric random direction."""

    space: SmoothSpaceSpec = field(default_factory=lambda: SmoothSpaceSpec.euclidean(2))
    kind = "iid_uniform_sphere"

    @property
    def finite_support(self):
        return self.space.dim == 1

    @property
    def increment_bound(self):
        return 1.0

    def sample(self, rng, trials, n):
        return _directions(self.space, rng, (trials, n))

    def increment_tail(self):
        return DiscreteTail.step(1.0)

    def norm_moment(self, p):
        return 1.0

    def to_dict(self):
        return {"kind": self.kind, "space": self.space.to_dict()}


@dataclass(frozen=True)
class IidParetoSym(_IidModel):
    """Symmetric increments with P{|X| > t} = min{1, (scale/t)^alpha}."""

    alpha: float = 1.8
    scale: float = 1.0
    space: SmoothSpaceSpec = field(default_factory=SmoothSpaceSpec)
    kind = "iid_pareto_sym"

    def __post_init__(self):
        if not self.alpha > 1:
            raise InputError("Pareto increments need alpha > 1 (integrable)")
        if not self.scale > 0:
            raise InputError("Pareto scale must be positive")

    def radii(self, rng, shape) -> np.ndarray:
        u = rng.random(shape)
        return self.scale * (1.0 - u) ** (-1.0 / self.alpha)

    def sample(self, rng, trials, n):
        if self.space.dim == 1:
            # one uniform gives both the sign (top bit) and the radius (the rest)
            u = 2.0 * rng.random((trials, n))
            sign = np.where(u < 1.0, -1.0, 1.0)
            frac = u - (u >= 1.0)
            return (sign * self.scale * (1.0 - frac) ** (-1.0 / self.alpha))[..., None]
        return self.radii(rng, (trials, n))[..., None] * _directions(self.space, rng, (trials, n))

    def increment_tail(self):
        return ParetoTail(self.alpha, self.scale)

    def norm_moment(self, p):
        if p >= self.alpha:
            raise DomainError(f"E|X|^{p} is infinite for a Pareto({self.alpha}) increment")
        return self.alpha * self.scale**p / (self.alpha - p)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "scale": self.scale,
                **self._space_dict()}


# --- volatility-modulated sequences -------------------------------------------------


@dataclass(frozen=True)
class ConstantSigma:
    value: float = 1.0
    kind = "constant"

    def __post_init__(self):
        if not self.value >= 0:
            raise InputError("sigma must be non-negative")

    @property
    def bound(self):
        return self.value

    def __call__(self, prev: np.ndarray) -> np.ndarray:
        return np.full(prev.shape[:-1], self.value)

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class TwoStateSigma:
    """sigma_i = high if the previous innovation's first coordinate is positive."""

    low: float = 0.5
    high: float = 1.5
    kind = "two_state"

    def __post_init__(self):
        if not (0 <= self.low and 0 <= self.high):
            raise InputError("sigma levels must be non-negative")

    @property
    def bound(self):
        return max(self.low, self.high)

    def __call__(self, prev):
        return np.where(prev[..., 0] > 0, self.high, self.low)

    def to_dict(self):
        return {"kind": self.kind, "low": self.low, "high": self.high}


@dataclass(frozen=True)
class CallableSigma:
    """User volatility map of the previous innovation, bounded by ``bound``."""

    fn: Callable[[np.ndarray], np.ndarray]
    bound: float
    kind = "callable"

    def __call__(self, prev):
        sig = np.asarray(self.fn(prev), dtype=float)
        if np.any(sig < 0) or np.any(sig > self.bound):
            raise InputError("sigma function left [0, bound]")
        return sig

    def to_dict(self):
        raise InputError("callable volatility maps are not serialisable")


@dataclass(frozen=True)
class VolModulated(MartingaleModel):
    """X_i = sigma(eps_{i-1}) * eps_i with iid symmetric innovations eps."""

    innovation: _IidModel = field(default_factory=IidSign)
    sigma: ConstantSigma | TwoStateSigma | CallableSigma = field(default_factory=ConstantSigma)
    kind = "vol_modulated"

    @property
    def space(self):
        return self.innovation.space

    @property
    def finite_support(self):
        return self.innovation.finite_support and not isinstance(self.sigma, CallableSigma)

    @property
    def is_zero(self):
        return self.sigma.bound == 0

    @property
    def increment_bound(self):
        return self.sigma.bound * self.innovation.increment_bound

    def sample(self, rng, trials, n):
        eps = self.innovation.sample(rng, trials, n + 1)
        sig = self.sigma(eps[:, :-1, :])
        return sig[..., None] * eps[:, 1:, :]

    def _levels(self) -> list[tuple[float, float]]:
        """(sigma value, probability) pairs of the stationary volatility law."""
        if isinstance(self.sigma, ConstantSigma):
            return [(self.sigma.value, 1.0)]
        if isinstance(self.sigma, TwoStateSigma):
            return [(self.sigma.low, 0.5), (self.sigma.high, 0.5)]
        raise AnalyticTailUnavailable("volatility law of a callable sigma is not known")

    def increment_tail(self):
        base = self.innovation.increment_tail()
        comps, weights = [], []
        for level, prob in self._levels():
            comps.append(ScaledTail(base, level) if level > 0 else ZeroTail())
            weights.append(prob)
        return comps[0] if len(comps) == 1 else MixtureTail(tuple(comps), tuple(weights))

    def norm_moment(self, p):
        levels = self._levels()
        if all(level == 0 for level, _ in levels):
            return 0.0
        return sum(prob * level**p for level, prob in levels) * self.innovation.norm_moment(p)

    def conditional_moment_tail(self, p):
        levels = self._levels()
        if all(level == 0 for level, _ in levels):
            return ZeroTail()
        mom = self.innovation.norm_moment(p)
        return DiscreteTail(tuple(level**p * mom for level, _ in levels),
                            tuple(prob for _, prob in levels))

    def max_increment_tail(self, n):
        # sigma_i depends on the sign of eps_{i-1} only, which is independent of
        # |eps_{i-1}|, so the increment norms are iid
        return MaxOfIidTail(self.increment_tail(), int(n))

    def conditional_sum_tail(self, n, p):
        levels = self._levels()
        if all(level == 0 for level, _ in levels):
            return ZeroTail()
        mom = self.innovation.norm_moment(p)
        if len(levels) == 1:
            return DiscreteTail.step(n * levels[0][0] ** p * mom)
        (lo, _), (hi, _) = levels
        k = np.arange(n + 1)
        atoms = mom * (k * hi**p + (n - k) * lo**p)
        return DiscreteTail(tuple(atoms.tolist()), tuple(binom.pmf(k, n, 0.5).tolist()))

    def to_dict(self):
        return {"kind": self.kind, "innovation": self.innovation.to_dict(),
                "sigma": self.sigma.to_dict()}


# --- product orthomartingale fields ---------------------------------------------------


@dataclass(frozen=True)
class FieldModel:
    """Product field m(i) = prod_q eps^q_{i_q}; ``transform='abs'`` takes |m|."""

    axes: tuple[IidSign | IidParetoSym, ...]
    transform: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        if not self.axes:
            raise InputError("a field needs at least one axis")
        for ax in self.axes:
            if not isinstance(ax, (IidSign, IidParetoSym)) or ax.space.dim != 1:
                raise InputError("field axes must be scalar iid_sign or iid_pareto_sym laws")
        if self.transform not in (None, "abs"):
            raise InputError(f"unknown field transform {self.transform!r}")

    @classmethod
    def rademacher(cls, d: int) -> FieldModel:
        return cls(tuple(IidSign() for _ in range(d)))

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def finite_support(self) -> bool:
        return all(isinstance(ax, IidSign) for ax in self.axes)

    @property
    def is_zero(self) -> bool:
        return False

    def _check_box(self, n) -> tuple[int, ...]:
        n = tuple(int(v) for v in np.atleast_1d(n))
        if len(n) != self.d or any(v < 1 for v in n):
            raise InputError(f"box must be {self.d} positive integers, got {n}")
        return n

    def sample(self, rng, trials: int, n) -> np.ndarray:
        """Array of shape (trials, n_1, ..., n_d)."""
        n = self._check_box(n)
        if math.prod(n) > FIELD_SITE_BUDGET:
            raise ResourceError(f"field box {n} exceeds the {FIELD_SITE_BUDGET}-site budget")
        out = np.ones((trials,) + (1,) * self.d)
        for q, (ax, nq) in enumerate(zip(self.axes, n)):
            seq = ax.sample(rng, trials, nq)[..., 0]
            shape = [trials] + [1] * self.d
            shape[q + 1] = nq
            out = out * seq.reshape(shape)
        return np.abs(out) if self.transform == "abs" else out

    def increment_tail(self) -> TailFunction:
        paretos = [ax for ax in self.axes if isinstance(ax, IidParetoSym)]
        if not paretos:
            return DiscreteTail.step(1.0)
        if len({(ax.alpha) for ax in paretos}) > 1:
            raise AnalyticTailUnavailable("product of Pareto axes with different indices")
        scale = math.prod(ax.scale for ax in paretos)
        return ProductParetoTail(paretos[0].alpha, len(paretos), scale)

    def norm_moment(self, p: float) -> float:
        return math.prod(ax.norm_moment(p) for ax in self.axes)

    def conditional_moment_tail(self, p: float, axis: int) -> TailFunction:
        """Tail of E[|m|^p | T_j F_0] = E|eps^j|^p * prod_{q != j} |eps^q|^p."""
        if not 0 <= axis < self.d:
            raise InputError(f"axis must lie in 0..{self.d - 1}")
        factor = self.axes[axis].norm_moment(p)
        others = FieldModel(tuple(ax for q, ax in enumerate(self.axes) if q != axis)) \
            if self.d > 1 else None
        if others is None:
            return DiscreteTail.step(factor)
        return PowerTail(others.increment_tail(), p, factor)

    def to_dict(self) -> dict:
        return {"kind": "product_field", "axes": [ax.to_dict() for ax in self.axes],
                "transform": self.transform}


# --- (de)serialisation ----------------------------------------------------------------


def _pop_space(spec: dict) -> dict:
    if "space" in spec:
        return {"space": SmoothSpaceSpec.from_dict(spec["space"])}
    if "dim" in spec:
        return {"space": SmoothSpaceSpec.euclidean(int(spec["dim"]))}
    return {}


def _sigma_from_dict(spec: dict):
    kind = spec.get("kind")
    if kind == "constant":
        return ConstantSigma(float(spec.get("value", 1.0)))
    if kind == "two_state":
        return TwoStateSigma(float(spec["low"]), float(spec["high"]))
    raise InputError(f"unknown sigma kind {kind!r}")


_MODEL_KEYS = {
    "iid_sign": {"kind", "space", "dim"},
    "iid_uniform_sphere": {"kind", "space", "dim"},
    "iid_pareto_sym": {"kind", "space", "dim", "alpha", "scale"},
    "vol_modulated": {"kind", "innovation", "sigma"},
    "product_field": {"kind", "axes", "transform"},
}


def model_from_dict(spec: dict) -> MartingaleModel | FieldModel:
    """Build a model from its config descriptor (inverse of ``to_dict``)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InputError("model descriptor must be an object with a 'kind'")
    kind = spec["kind"]
    if kind not in _MODEL_KEYS:
        raise InputError(f"unknown model kind {kind!r}")
    extra = set(spec) - _MODEL_KEYS[kind]
    if extra:
        raise InputError(f"unknown keys for {kind}: {sorted(extra)}")
    try:
        if kind == "iid_sign":
            return IidSign(**_pop_space(spec))
        if kind == "iid_uniform_sphere":
            return IidUniformSphere(**_pop_space(spec))
        if kind == "iid_pareto_sym":
            return IidParetoSym(float(spec.get("alpha", 1.8)), float(spec.get("scale", 1.0)),
                                **_pop_space(spec))
        if kind == "vol_modulated":
            inner = model_from_dict(spec.get("innovation", {"kind": "iid_sign"}))
            if not isinstance(inner, _IidModel):
                raise InputError("innovation must be an iid model")
            return VolModulated(inner, _sigma_from_dict(spec.get("sigma", {"kind": "constant"})))
        axes = tuple(model_from_dict(a) for a in spec["axes"])
        return FieldModel(axes, spec.get("transform"))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad {kind} descriptor: {exc}") from exc


# --- convenience wrappers ------------------------------------------------------------


def sample_path(model: MartingaleModel, n: int, stream: np.random.Generator) -> np.ndarray:
    """One path (X_1, ..., X_n) as an (n, dim) array."""
    if n < 1:
        raise InputError("n must be positive")
    return model.sample(stream, 1, n)[0]


def increment_tail(model: MartingaleModel | FieldModel) -> TailFunction:
    return model.increment_tail()


def conditional_moment_tail(model: MartingaleModel, p: float) -> TailFunction:
    return model.conditional_moment_tail(p)


def sample_field(field_model: FieldModel, n, stream: np.random.Generator) -> np.ndarray:
    return field_model.sample(stream, 1, n)[0]


# --- exact enumeration over Rademacher variables --------------------------------------


class _SignAlgebra:
    """Random variables as arrays over all sign assignments of labelled variables.

    Axis ``a`` of every array is variable ``labels[a]``; each assignment has
    probability 2^-K. Conditioning on a set of variables averages the rest.
    """

    def __init__(self, labels: list):
        if len(labels) > ENUMERATION_LIMIT:
            raise ResourceError(f"{len(labels)} sign variables exceed the enumeration limit")
        self.labels = labels
        self.index = {lab: a for a, lab in enumerate(labels)}
        self.shape = (2,) * len(labels)

    def var(self, label) -> np.ndarray:
        shape = [1] * len(self.labels)
        shape[self.index[label]] = 2
        return np.broadcast_to(np.array([-1.0, 1.0]).reshape(shape), self.shape)

    def cond(self, y: np.ndarray, known) -> np.ndarray:
        axes = tuple(a for a, lab in enumerate(self.labels) if lab not in known)
        y = np.broadcast_to(y, self.shape)
        return np.broadcast_to(y.mean(axis=axes, keepdims=True) if axes else y, self.shape)


def _field_partial_sums(fm: FieldModel, n: tuple[int, ...]):
    labels = [(q, t) for q in range(fm.d) for t in range(1, n[q] + 1)]
    alg = _SignAlgebra(labels)
    boxes = list(itertools.product(*(range(nq + 1) for nq in n)))
    sums: dict[tuple, np.ndarray] = {}
    for k in boxes:
        if any(v == 0 for v in k):
            sums[k] = np.zeros(alg.shape)
            continue
        prefix = [sum(alg.var((q, t)) for t in range(1, k[q] + 1)) for q in range(fm.d)]
        if fm.transform == "abs":
            sums[k] = np.full(alg.shape, float(math.prod(k)))
        else:
            sums[k] = np.broadcast_to(math.prod(prefix), alg.shape)
    return alg, sums


def _filtration(fm: FieldModel, n, k) -> set:
    """Variables generating F_k; ``None`` in k means the whole axis."""
    return {(q, t) for q in range(fm.d) for t in range(1, n[q] + 1)
            if k[q] is None or t <= k[q]}


def _close(a, b) -> bool:
    return bool(np.allclose(a, b, rtol=0, atol=1e-12))


def verify_orthomartingale(field_model: FieldModel | MartingaleModel, n) -> bool:
    """Exact check of the orthomartingale properties on the box [1, n].

    Checks (1) j -> S_(n', j) is a martingale in the marginal filtration of the
    last axis for every n', (2) j -> max_{i' <= n'} |S_(i', j)| is a
    submartingale there, and (3) with the last coordinate fixed the partial
    sums form an orthomartingale in the remaining axes (last axis fully
    known). A sequence model reduces to the martingale difference check.
    """
    if isinstance(field_model, MartingaleModel):
        if not isinstance(field_model, IidSign):
            raise InputError("enumeration supports Rademacher sequences only")
        field_model = FieldModel((IidSign(),))
    if not field_model.finite_support:
        raise InputError("exact enumeration needs Rademacher axes")
    n = field_model._check_box(n)
    d = field_model.d
    alg, sums = _field_partial_sums(field_model, n)
    last = d - 1
    heads = list(itertools.product(*(range(nq + 1) for nq in n[:-1])))

    for j in range(n[last]):
        known = _filtration(field_model, n, tuple([None] * last + [j]))
        for h in heads:
            # (1) martingale in the marginal filtration
            if not _close(alg.cond(sums[h + (j + 1,)], known), sums[h + (j,)]):
                return False
        # (2) submartingale property of the running box maximum
        for h in heads:
            sub = [sums[g + (j,)] for g in heads if all(a <= b for a, b in zip(g, h))]
            nxt = [sums[g + (j + 1,)] for g in heads if all(a <= b for a, b in zip(g, h))]
            cur_max = np.max(np.abs(np.stack(sub)), axis=0)
            nxt_max = np.max(np.abs(np.stack(nxt)), axis=0)
            if np.any(alg.cond(nxt_max, known) < cur_max - 1e-12):
                return False
    # (3) fixed last coordinate: orthomartingale with the last axis fully known
    if d > 1:
        for j in range(n[last] + 1):
            sub_sums = {k: v for k, v in sums.items() if k[last] == j}
            if not _fixed_coordinate_ok(field_model, n, alg, sub_sums, j):
                return False
    return True


def _fixed_coordinate_ok(fm, n, alg, sub_sums, j) -> bool:
    last = fm.d - 1
    heads = [k[:-1] for k in sub_sums]
    for i in heads:
        known = _filtration(fm, n, tuple(i) + (None,))
        for k in heads:
            if all(a <= b for a, b in zip(i, k)):
                if not _close(alg.cond(sub_sums[k + (j,)], known), sub_sums[i + (j,)]):
                    return False
    return True


def is_completely_commuting(field_model: FieldModel, n) -> bool:
    """Check E[Y | F_k] = E[Y | F_{k ^ l}] for F_l-measurable Y on the box.

    Monomials of the sign variables span all F_l-measurable functions, so
    checking them is exhaustive.
    """
    if not field_model.finite_support:
        raise InputError("exact enumeration needs Rademacher axes")
    n = field_model._check_box(n)
    labels = [(q, t) for q in range(field_model.d) for t in range(1, n[q] + 1)]
    alg = _SignAlgebra(labels)
    boxes = list(itertools.product(*(range(nq + 1) for nq in n)))
    for l_ in boxes:
        l_vars = sorted(_filtration(field_model, n, l_))
        monomials = []
        for size in range(len(l_vars) + 1):
            for combo in itertools.combinations(l_vars, size):
                y = np.ones(alg.shape)
                for lab in combo:
                    y = y * alg.var(lab)
                monomials.append(y)
        for k in boxes:
            meet = tuple(min(a, b) for a, b in zip(k, l_))
            fk, fm_ = _filtration(field_model, n, k), _filtration(field_model, n, meet)
            for y in monomials:
                if not _close(alg.cond(y, fk), alg.cond(y, fm_)):
                    return False
    return True


def enumerate_sign_paths(n: int) -> np.ndarray:
    """All 2^n sign vectors as the rows of a (2^n, n) array."""
    if n > ENUMERATION_LIMIT:
        raise ResourceError(f"2^{n} paths exceed the enumeration limit")
    codes = np.arange(1 << n, dtype=np.int64)[:, None]
    bits = (codes >> np.arange(n)) & 1
    return 1.0 - 2.0 * bits
