"""Monte Carlo estimates of P{max ||S_i|| > x} with exact binomial intervals.

Trials are cut into blocks whose size depends only on the path cost; block b
draws from the counter-based stream ``(seed, label, b)``. Workers process
whole blocks and results are merged in block order, so counts do not depend
on the worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.stats import beta

from . import rng as rngmod
from .errors import InputError, ResourceError
from .process_zoo import (ENUMERATION_LIMIT, FIELD_SITE_BUDGET, ConstantSigma, FieldModel,
                          IidSign, IidUniformSphere, MartingaleModel, TwoStateSigma,
                          VolModulated, enumerate_sign_paths)
from .tails import EmpiricalTail


@dataclass(frozen=True)
class MCEstimate:
    exceedances: int
    trials: int
    point: float
    ci_low: float
    ci_high: float
    seed: int
    worker_count: int
    confidence: float = 0.99
    exact: bool = False


def clopper_pearson(k: int, n: int, confidence: float = 0.99) -> tuple[float, float]:
    """Exact two-sided binomial interval for k successes out of n."""
    if not 0 < confidence < 1:
        raise InputError("confidence must lie in (0, 1)")
    if n < 1 or not 0 <= k <= n:
        raise InputError("need 0 <= k <= n and n >= 1")
    a = 1.0 - confidence
    lo = 0.0 if k == 0 else float(beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


def make_estimate(k: int, trials: int, seed: int, workers: int,
                  confidence: float) -> MCEstimate:
    lo, hi = clopper_pearson(k, trials, confidence)
    point = k / trials
    return MCEstimate(int(k), int(trials), point, min(lo, point), max(hi, point), seed,
                      workers, confidence)


def exact_estimate(prob: float, trials: int, seed: int, workers: int,
                   confidence: float) -> MCEstimate:
    """An estimate whose value is known exactly (zero-width interval)."""
    prob = float(prob)
    return MCEstimate(int(round(prob * trials)), int(trials), prob, prob, prob, seed,
                      workers, confidence, exact=True)


def run_blocks(fn: Callable[[np.random.Generator, int], np.ndarray], trials: int,
               per_trial_cost: int, seed: int, label: str,
               workers: int | None = None) -> np.ndarray:
    """Sum ``fn(rng, size)`` over the fixed blocks of ``trials``, in block order."""
    if trials < 1:
        raise InputError("trials must be positive")
    seed = rngmod.check_seed(seed)
    workers = rngmod.default_workers() if workers is None else int(workers)
    if workers < 1:
        raise InputError("workers must be positive")
    sizes = rngmod.block_sizes(trials, per_trial_cost)

    def job(b):
        return np.asarray(fn(rngmod.stream(seed, label, b), sizes[b]))

    if workers == 1 or len(sizes) == 1:
        parts = [job(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    total = parts[0].copy()
    for part in parts[1:]:
        total = total + part
    return total


def running_max_norms(model: MartingaleModel, x: np.ndarray) -> np.ndarray:
    """max_{i <= k} ||S_i|| for every k, from increments of shape (trials, n, dim)."""
    s = np.cumsum(x, axis=1)
    norms = model.space.norms(s)
    return np.maximum.accumulate(norms, axis=1)


def _path_label(n: int) -> str:
    return f"path/n={n}"


def estimate_max_tails(model: MartingaleModel, lengths: Sequence[int],
                       thresholds: Sequence[float], trials: int, seed: int,
                       confidence: float = 0.99, workers: int | None = None,
                       label: str | None = None) -> list[MCEstimate]:
    """Estimates for several (length, threshold) pairs from one shared path set.

    Paths have length max(lengths); pair j uses the running maximum up to
    lengths[j]. Sharing the paths (common random numbers) keeps the estimates
    monotone in the threshold and consistent across lengths.
    """
    lengths = [int(v) for v in lengths]
    thresholds = [float(t) for t in thresholds]
    if len(lengths) != len(thresholds) or not lengths:
        raise InputError("lengths and thresholds must pair up")
    if any(v < 1 for v in lengths):
        raise InputError("path lengths must be positive")
    if any(not t > 0 for t in thresholds):
        raise InputError("thresholds must be positive")
    workers_eff = rngmod.default_workers() if workers is None else int(workers)
    seed = rngmod.check_seed(seed)
    n_max = max(lengths)
    bound = model.increment_bound
    trivial = [model.is_zero or t >= length * bound for length, t in zip(lengths, thresholds)]
    counts = np.zeros(len(lengths), dtype=np.int64)
    if not all(trivial):
        idx = np.asarray(lengths) - 1
        thr = np.asarray(thresholds)

        def block(rng, size):
            run = running_max_norms(model, model.sample(rng, size, n_max))
            return (run[:, idx] > thr).sum(axis=0)

        counts = run_blocks(block, trials, n_max * model.space.dim, seed,
                            label or _path_label(n_max), workers_eff)
    out = []
    for j, triv in enumerate(trivial):
        if triv:
            out.append(exact_estimate(0.0, trials, seed, workers_eff, confidence))
        else:
            out.append(make_estimate(int(counts[j]), trials, seed, workers_eff, confidence))
    return out


def estimate_max_tail(model: MartingaleModel, n: int, threshold: float, trials: int,
                      seed: int, confidence: float = 0.99, workers: int | None = None,
                      label: str | None = None) -> MCEstimate:
    """Estimate P{max_{i <= n} ||S_i|| > threshold} from ``trials`` paths."""
    return estimate_max_tails(model, [n], [threshold], trials, seed, confidence, workers,
                              label)[0]


def field_running_max(fields: np.ndarray) -> np.ndarray:
    """max over the box of |S_k|, S the d-dimensional prefix sums, per trial."""
    s = fields
    for axis in range(1, fields.ndim):
        s = np.cumsum(s, axis=axis)
    return np.abs(s).reshape(s.shape[0], -1).max(axis=1)


def estimate_field_max_tails(field_model: FieldModel, n, thresholds: Sequence[float],
                             trials: int, seed: int, confidence: float = 0.99,
                             workers: int | None = None,
                             label: str | None = None) -> list[MCEstimate]:
    n = field_model._check_box(n)
    sites = math.prod(n)
    if sites > FIELD_SITE_BUDGET:
        raise ResourceError(f"field box {n} exceeds the {FIELD_SITE_BUDGET}-site budget")
    thr = np.asarray([float(t) for t in thresholds])
    if np.any(~(thr > 0)):
        raise InputError("thresholds must be positive")
    workers_eff = rngmod.default_workers() if workers is None else int(workers)
    seed = rngmod.check_seed(seed)
    bounded = field_model.finite_support
    trivial = [bounded and t >= sites for t in thr]
    counts = np.zeros(len(thr), dtype=np.int64)
    if not all(trivial):
        def block(rng, size):
            m = field_running_max(field_model.sample(rng, size, n))
            return (m[:, None] > thr[None, :]).sum(axis=0)

        counts = run_blocks(block, trials, sites, seed,
                            label or "field/n=" + "x".join(map(str, n)), workers_eff)
    return [exact_estimate(0.0, trials, seed, workers_eff, confidence) if triv
            else make_estimate(int(c), trials, seed, workers_eff, confidence)
            for c, triv in zip(counts, trivial)]


def estimate_field_max_tail(field_model: FieldModel, n, threshold: float, trials: int,
                            seed: int, confidence: float = 0.99, workers: int | None = None,
                            label: str | None = None) -> MCEstimate:
    """Estimate P{max_{1 <= i <= n} |S_i| > threshold} for a product field."""
    return estimate_field_max_tails(field_model, n, [threshold], trials, seed, confidence,
                                    workers, label)[0]


# --- exact oracles ----------------------------------------------------------------------


def enumeration_size(model, n) -> int:
    """Number of sign variables an exact enumeration needs, or raise InputError."""
    if isinstance(model, FieldModel):
        if not model.finite_support:
            raise InputError("field enumeration needs Rademacher axes")
        return sum(model._check_box(n))
    if isinstance(model, (IidSign,)) or (isinstance(model, IidUniformSphere)
                                         and model.space.dim == 1):
        return int(n)
    if isinstance(model, VolModulated) and isinstance(model.innovation, IidSign) \
            and isinstance(model.sigma, (ConstantSigma, TwoStateSigma)):
        return int(n) + 1
    raise InputError(f"no exact enumeration for {type(model).__name__}")


def brute_force_max_tail(model, n, threshold: float) -> Fraction:
    """Exact P{max ||S_i|| > threshold} by enumerating every sign assignment."""
    k = enumeration_size(model, n)
    if k > ENUMERATION_LIMIT:
        raise ResourceError(f"2^{k} sign assignments exceed the enumeration limit")
    signs = enumerate_sign_paths(k)
    if isinstance(model, FieldModel):
        n = model._check_box(n)
        if model.transform == "abs":
            peak = np.full(signs.shape[0], float(math.prod(n)))
        else:
            # S_k is a product of per-axis partial sums, so its maximum modulus
            # is the product of the per-axis maxima
            peak = np.ones(signs.shape[0])
            start = 0
            for nq in n:
                axis_sums = np.cumsum(signs[:, start:start + nq], axis=1)
                peak = peak * np.abs(axis_sums).max(axis=1)
                start += nq
    else:
        if isinstance(model, VolModulated):
            sig = model.sigma(signs[:, :-1, None])
            steps = sig * signs[:, 1:]
        else:
            steps = signs
        peak = np.abs(np.cumsum(steps, axis=1)).max(axis=1)
    return Fraction(int(np.count_nonzero(peak > threshold)), signs.shape[0])


def empirical_tail(samples) -> EmpiricalTail:
    """Right-continuous empirical exceedance function t -> #{s > t} / N."""
    return EmpiricalTail(samples)
