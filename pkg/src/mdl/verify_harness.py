"""Theorem-by-theorem verification: Monte Carlo (or exact) left-hand sides
against numerically integrated right-hand sides.

Deviation cells for sequences and fields compare P{max ||S_i|| > x |n|^(1/p)}
with the bound at that threshold. Large-deviation cells use exponents n and
compare P{max_{i <= 2^n} ||S_i|| > 2^n x} with the weighted bound divided by
its weight. A cell passes when the upper confidence limit is at most
rhs (1 + slack); it is ``vacuous`` when a probability bound exceeds 1 and
``mc_noise`` when only the lower confidence limit is below the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import bound_engine as be
from . import rng as rngmod
from .errors import AnalyticTailUnavailable, DomainError, InputError, ResourceError
from .mc_estimator import (MCEstimate, brute_force_max_tail, enumeration_size,
                           estimate_field_max_tails, estimate_max_tails, exact_estimate,
                           make_estimate, run_blocks)
from .process_zoo import FieldModel, MartingaleModel
from .quadrature import integrate_tail
from .tails import (MaxOfIidTail, PowerTail, ScaledTail, TailFunction, ZeroTail,
                    inverse_sample)

THEOREMS = ("T1", "T2_condvar", "T2", "T3_condvar", "T3", "T5", "T6_item1", "T6_item2",
            "COR", "T7", "LEM1", "LEM2", "LEM3")
SEQUENCE_THEOREMS = {"T1", "T2_condvar", "T2", "T5", "T6_item1", "T6_item2", "COR", "T7",
                     "LEM1"}
FIELD_THEOREMS = {"T3", "T3_condvar"}
LARGEDEV = {"T5": "thm5_p_lt_r", "T6_item1": "thm6_weak", "T6_item2": "thm6_weak",
            "COR": "cor_weak", "T7": "thm7_series"}
ORACLE_STATES = 16
CELL_ERRORS = (DomainError, InputError, AnalyticTailUnavailable, ResourceError)


# --- scenario -------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """One verification job: a theorem, a model and a grid of cells.

    ``model`` is a sequence or field model; for LEM3 it is the tail of Y and
    for LEM2 it is unused. ``options`` carries theorem-specific settings:
    ``axis`` (T3_condvar, 0-based; omitted = best axis), ``beta``/``delta``
    (LEM1), ``g``/``b`` (LEM2), ``coupling``/``k_max`` (LEM3) and ``lhs``
    (``auto``, ``mc`` or ``exact``).
    """

    id: str
    theorem: str
    model: Any
    x_grid: tuple[float, ...]
    n_grid: tuple = ()
    p: float | None = None
    q: float | None = None
    s: float | None = None
    trials: int = 100_000
    seed: int = 0
    confidence: float = 0.99
    slack: float = 0.0
    mode: str = "remark"
    convention: str = "display"
    options: Mapping[str, Any] = field(default_factory=dict)

    def validate(self) -> None:
        t = self.theorem
        if t not in THEOREMS:
            raise InputError(f"{self.id}: unknown theorem {t!r}")
        if not self.x_grid:
            raise InputError(f"{self.id}: x_grid must be nonempty")
        if any(not (x > 0 and math.isfinite(x)) for x in self.x_grid):
            raise InputError(f"{self.id}: x_grid values must be positive")
        if self.trials < 1:
            raise InputError(f"{self.id}: trials must be positive")
        if not 0 < self.confidence < 1:
            raise InputError(f"{self.id}: confidence must lie in (0, 1)")
        if not self.slack >= 0:
            raise InputError(f"{self.id}: slack must be >= 0")
        if self.mode not in be.MODES:
            raise InputError(f"{self.id}: unknown mode {self.mode!r}")
        if self.convention not in be.CONVENTIONS:
            raise InputError(f"{self.id}: unknown convention {self.convention!r}")
        rngmod.check_seed(self.seed)
        if t in ("LEM2", "LEM3"):
            if t == "LEM2" and (self.q is None or not self.q > 0):
                raise InputError(f"{self.id}: LEM2 needs q > 0")
            if t == "LEM3" and not isinstance(self.model, TailFunction):
                raise InputError(f"{self.id}: LEM3 needs a tail for Y as its model")
            return
        if not self.n_grid:
            raise InputError(f"{self.id}: n_grid must be nonempty")
        if t in FIELD_THEOREMS:
            if not isinstance(self.model, FieldModel):
                raise InputError(f"{self.id}: {t} needs a field model")
            for n in self.n_grid:
                if len(np.atleast_1d(n)) != self.model.d:
                    raise InputError(f"{self.id}: n {n} must have {self.model.d} components")
        elif not isinstance(self.model, MartingaleModel):
            raise InputError(f"{self.id}: {t} needs a sequence model")
        for n in self.n_grid:
            if any(int(v) < 1 for v in np.atleast_1d(n)):
                raise InputError(f"{self.id}: n values must be >= 1")
        r = self.model.space.r if isinstance(self.model, MartingaleModel) else 2.0
        if t in ("T6_item1", "T6_item2", "COR", "T7"):
            if self.s is None or not self.s > 2:
                raise InputError(f"{self.id}: {t} needs s > 2")
            if r != 2:
                raise InputError(f"{self.id}: {t} needs a (2, D)-smooth space")
            return
        if self.p is None or not 1 < self.p <= r:
            raise InputError(f"{self.id}: p must lie in (1, r] = (1, {r}]")
        if t == "T5" and not self.p < r:
            raise InputError(f"{self.id}: T5 needs p < r")
        if t in ("T1", "LEM1"):
            if self.q is None or not self.q > 0:
                raise InputError(f"{self.id}: {t} needs q > 0")
        elif self.q is None or not self.q > self.p:
            raise InputError(f"{self.id}: {t} requires q > p (got p={self.p}, q={self.q})")
        if t == "LEM1":
            beta = self.options.get("beta", 2.0)
            delta = self.options.get("delta", 0.5)
            if not (beta > 1 and 0 < delta < beta - 1):
                raise InputError(f"{self.id}: LEM1 needs beta > 1 and 0 < delta < beta - 1")

    @property
    def D(self) -> float:
        return self.model.space.D if isinstance(self.model, MartingaleModel) else 1.0

    @property
    def r(self) -> float:
        return self.model.space.r if isinstance(self.model, MartingaleModel) else 2.0


# --- report ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    n: Any
    x: float
    lhs: MCEstimate | None
    rhs: float
    rhs_err: float
    ratio: float
    status: str
    threshold: float = math.nan
    note: str = ""


@dataclass
class BoundReport:
    scenario_id: str
    theorem: str
    cells: list[Cell]
    notes: list[str] = field(default_factory=list)
    decay: Any = None

    @property
    def all_pass(self) -> bool:
        return all(c.status in ("pass", "vacuous", "mc_noise") for c in self.cells)

    @property
    def hard_failures(self) -> list[Cell]:
        return [c for c in self.cells if c.status in ("fail", "error")]

    @property
    def worst_ratio(self) -> float:
        ratios = [c.ratio for c in self.cells if c.status == "pass" and math.isfinite(c.ratio)]
        return max(ratios, default=math.nan)

    def status_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for c in self.cells:
            out[c.status] = out.get(c.status, 0) + 1
        return out


def classify(lhs: MCEstimate, rhs: float, slack: float = 0.0,
             probability: bool = True) -> tuple[str, float]:
    """(status, ratio) of a cell."""
    if not math.isfinite(rhs) and rhs > 0:
        return ("vacuous" if probability else "pass"), 0.0
    if rhs > 0:
        ratio = lhs.point / rhs
    else:
        ratio = 0.0 if lhs.point == 0 else math.inf
    limit = rhs * (1.0 + slack)
    if probability and rhs > 1:
        return "vacuous", ratio
    if lhs.ci_high <= limit:
        return "pass", ratio
    if lhs.ci_low <= limit:
        return "mc_noise", ratio
    return "fail", ratio


def _cell(n, x, lhs, bound, sc: Scenario, threshold=math.nan, probability=True, note=""):
    status, ratio = classify(lhs, bound.value if hasattr(bound, "value") else bound,
                             sc.slack, probability)
    value = float(bound.value if hasattr(bound, "value") else bound)
    err = float(getattr(bound, "abserr", 0.0))
    return Cell(n, float(x), lhs, value, err, ratio, status, float(threshold), note)


def _error_cell(n, x, exc: Exception) -> Cell:
    return Cell(n, float(x), None, math.nan, math.nan, math.nan, "error",
                note=f"{type(exc).__name__}: {exc}")


# --- left-hand sides ------------------------------------------------------------------


def _use_oracle(sc: Scenario, model, n) -> bool:
    how = sc.options.get("lhs", "auto")
    if how == "mc":
        return False
    try:
        size = enumeration_size(model, n)
    except InputError:
        if how == "exact":
            raise
        return False
    if how == "exact":
        return True
    return size <= ORACLE_STATES


def _sequence_lhs(sc: Scenario, pairs: list[tuple[int, float]], workers) -> list[MCEstimate]:
    """Estimates of P{max_{i<=length} ||S_i|| > threshold} for (length, threshold) pairs."""
    model = sc.model
    out: list[MCEstimate | None] = [None] * len(pairs)
    mc_idx = []
    for j, (length, thr) in enumerate(pairs):
        if _use_oracle(sc, model, length):
            prob = brute_force_max_tail(model, length, thr)
            out[j] = exact_estimate(float(prob), sc.trials, sc.seed, 1, sc.confidence)
        else:
            mc_idx.append(j)
    if mc_idx:
        ests = estimate_max_tails(model, [pairs[j][0] for j in mc_idx],
                                  [pairs[j][1] for j in mc_idx], sc.trials, sc.seed,
                                  sc.confidence, workers, label=f"{sc.id}/paths")
        for j, e in zip(mc_idx, ests):
            out[j] = e
    return out


def _field_lhs(sc: Scenario, n, thresholds, workers) -> list[MCEstimate]:
    fm = sc.model
    if _use_oracle(sc, fm, n):
        return [exact_estimate(float(brute_force_max_tail(fm, n, t)), sc.trials, sc.seed, 1,
                               sc.confidence) for t in thresholds]
    label = f"{sc.id}/field/" + "x".join(str(int(v)) for v in np.atleast_1d(n))
    return estimate_field_max_tails(fm, n, thresholds, sc.trials, sc.seed, sc.confidence,
                                    workers, label=label)


# --- right-hand sides -----------------------------------------------------------------


def _params(sc: Scenario, x: float, n, d: int = 1) -> be.BoundParams:
    return be.BoundParams(p=sc.p, q=sc.q, r=sc.r, D=sc.D, d=d, x=x, n=n)


def _sequence_rhs(sc: Scenario, x: float, n: int):
    m = sc.model
    t = sc.theorem
    if t == "T1":
        threshold = x * n ** (1.0 / sc.p)
        return be.theorem1_rhs(m.max_increment_tail(n), m.conditional_sum_tail(n, sc.p),
                               _params(sc, threshold, n), sc.mode, sc.convention)
    if t == "T2_condvar":
        return be.theorem2_rhs_condvar(m.increment_tail(), m.conditional_moment_tail(sc.p),
                                       _params(sc, x, n), sc.mode, sc.convention)
    if t == "T2":
        return be.theorem2_rhs(m.increment_tail(), _params(sc, x, n), sc.mode, sc.convention)
    raise InputError(t)


def _field_rhs(sc: Scenario, x: float, n):
    fm: FieldModel = sc.model
    params = _params(sc, x, tuple(int(v) for v in n), fm.d)
    if sc.theorem == "T3":
        return be.theorem3_rhs(fm.increment_tail(), params, sc.mode, sc.convention)
    axes = [sc.options["axis"]] if sc.options.get("axis") is not None else range(fm.d)
    best = None
    for j in axes:
        b = be.theorem3_rhs_condvar(fm.increment_tail(), fm.conditional_moment_tail(sc.p, j),
                                    params, j, sc.mode, sc.convention)
        if best is None or b.value < best.value:
            best = b
    return best


def _largedev_bound(sc: Scenario, x: float, n: int | None):
    m = sc.model
    kind = LARGEDEV[sc.theorem]
    if kind == "thm5_p_lt_r":
        return be.largedev_rhs(kind, m.increment_tail(), x=x, p=sc.p, q=sc.q, n=n, D=sc.D,
                               mode=sc.mode, convention=sc.convention)
    cond = m.conditional_moment_tail(2.0) if kind != "cor_weak" else None
    return be.largedev_rhs(kind, m.increment_tail(), cond, x=x, s=sc.s, D=sc.D, mode=sc.mode,
                           convention=sc.convention)


# --- runners ----------------------------------------------------------------------------


def _run_deviation(sc: Scenario, workers) -> list[Cell]:
    cells: list[Cell] = []
    pairs, keys = [], []
    for n in sc.n_grid:
        n = int(n)
        for x in sc.x_grid:
            pairs.append((n, x * n ** (1.0 / sc.p)))
            keys.append((n, x))
    lhs = _sequence_lhs(sc, pairs, workers)
    for (n, x), (_, thr), est in zip(keys, pairs, lhs):
        try:
            bound = _sequence_rhs(sc, x, n)
        except CELL_ERRORS as exc:
            cells.append(_error_cell(n, x, exc))
            continue
        cells.append(_cell(n, x, est, bound, sc, thr))
    return cells


def _run_field(sc: Scenario, workers) -> list[Cell]:
    cells = []
    for n in sc.n_grid:
        n = tuple(int(v) for v in n)
        size = math.prod(n)
        thresholds = [x * size ** (1.0 / sc.p) for x in sc.x_grid]
        try:
            lhs = _field_lhs(sc, n, thresholds, workers)
        except CELL_ERRORS as exc:
            cells.extend(_error_cell(n, x, exc) for x in sc.x_grid)
            continue
        for x, thr, est in zip(sc.x_grid, thresholds, lhs):
            try:
                bound = _field_rhs(sc, x, n)
            except CELL_ERRORS as exc:
                cells.append(_error_cell(n, x, exc))
                continue
            cells.append(_cell(n, x, est, bound, sc, thr))
    return cells


def _weight(sc: Scenario, n: int) -> float:
    w = (sc.p - 1) if sc.theorem == "T5" else sc.s / 2
    return 2.0 ** (n * w)


def _run_largedev(sc: Scenario, workers) -> list[Cell]:
    ns = [int(n) for n in sc.n_grid]
    pairs, keys = [], []
    for n in ns:
        for x in sc.x_grid:
            pairs.append((2**n, 2.0**n * x))
            keys.append((n, x))
    lhs = _sequence_lhs(sc, pairs, workers)
    by_key = dict(zip(keys, lhs))
    cells = []
    if sc.theorem == "T7":
        for x in sc.x_grid:
            ests = [by_key[(n, x)] for n in ns]
            weights = [_weight(sc, n) for n in ns]
            point = sum(w * e.point for w, e in zip(weights, ests))
            lo = sum(w * e.ci_low for w, e in zip(weights, ests))
            hi = sum(w * e.ci_high for w, e in zip(weights, ests))
            series = MCEstimate(sum(e.exceedances for e in ests), sc.trials, point, lo, hi,
                                sc.seed, ests[0].worker_count, sc.confidence,
                                all(e.exact for e in ests))
            label = f"{min(ns)}..{max(ns)}"
            try:
                bound = _largedev_bound(sc, x, None)
            except CELL_ERRORS as exc:
                cells.append(_error_cell(label, x, exc))
                continue
            cells.append(_cell(label, x, series, be.BoundValue(bound.weighted, bound.abserr),
                               sc, probability=False, note="truncated series"))
        return cells
    for (n, x), (_, thr), est in zip(keys, pairs, lhs):
        try:
            bound = _largedev_bound(sc, x, n)
        except CELL_ERRORS as exc:
            cells.append(_error_cell(n, x, exc))
            continue
        w = _weight(sc, n)
        rhs = be.BoundValue(bound.weighted / w, bound.abserr / w)
        cells.append(_cell(n, x, est, rhs, sc, thr))
    return cells


def _run_lemma1(sc: Scenario, workers) -> list[Cell]:
    beta = float(sc.options.get("beta", 2.0))
    delta = float(sc.options.get("delta", 0.5))
    proof_factor = bool(sc.options.get("proof_factor", True))
    m = sc.model
    pairs, keys = [], []
    for n in sc.n_grid:
        n = int(n)
        for x in sc.x_grid:
            base = x * n ** (1.0 / sc.p)
            pairs.extend([(n, beta * base), (n, base)])
            keys.append((n, x, base))
    ests = _sequence_lhs(sc, pairs, workers)
    cells = []
    for j, (n, x, base) in enumerate(keys):
        top, lower = ests[2 * j], ests[2 * j + 1]
        try:
            rhs = be.lemma1_rhs(lower.ci_high, float(m.max_increment_tail(n)(delta * base)),
                                float(m.conditional_sum_tail(n, sc.p)((delta * base) ** sc.p)),
                                beta, delta, sc.p, sc.D, proof_factor)
        except CELL_ERRORS as exc:
            cells.append(_error_cell(n, x, exc))
            continue
        cells.append(_cell(n, x, top, rhs, sc, beta * base,
                           note="rhs uses the upper limit of P{max > x}"))
    return cells


def run_scenario(sc: Scenario, workers: int | None = None) -> BoundReport:
    """Evaluate every cell of a validated scenario."""
    sc.validate()
    t = sc.theorem
    notes = []
    decay = None
    if t in ("T1", "T2", "T2_condvar"):
        cells = _run_deviation(sc, workers)
    elif t in FIELD_THEOREMS:
        cells = _run_field(sc, workers)
        if t == "T3_condvar" and sc.convention == "assembled":
            notes.append("assembled T3_condvar constant is a heuristic inflation")
    elif t in LARGEDEV:
        cells = _run_largedev(sc, workers)
        if t == "T6_item2":
            decay = check_decay(sc, workers=workers)
        if t == "COR":
            notes.append("a_n(x) read as P{max_{i <= 2^n} ||S_i|| > 2^n x}")
        if t == "T7":
            notes.append("series truncated to the n grid; interval is the weighted sum of "
                         "per-term intervals")
    elif t == "LEM1":
        cells = _run_lemma1(sc, workers)
    elif t == "LEM2":
        rep = lemma2_property_check(sc.options.get("g", "min2_inv"),
                                    float(sc.options.get("b", 1.0)), sc.q, sc.x_grid)
        cells = rep.cells(sc)
    else:
        rep = lemma3_property_check(sc.model, sc.options.get("coupling", "X_equals_Y"),
                                    sc.x_grid, sc.trials, sc.seed,
                                    int(sc.options.get("k_max", 64)), sc.confidence, workers)
        cells = rep.cells(sc)
    return BoundReport(sc.id, t, cells, notes, decay)


# --- decay trends -----------------------------------------------------------------------


@dataclass(frozen=True)
class DecayReport:
    n: tuple[int, ...]
    a: tuple[float, ...]
    ci_low: tuple[float, ...]
    ci_high: tuple[float, ...]
    exceedances: tuple[int, ...]
    exact: tuple[bool, ...]
    below_resolution: tuple[bool, ...]
    top_half: tuple[int, ...]
    slope: float | None
    envelope_nonincreasing: bool
    hypothesis_ok: bool
    note: str = ""

    @property
    def slope_ok(self) -> bool:
        return self.slope is None or self.slope <= 0

    @property
    def decaying(self) -> bool:
        return self.envelope_nonincreasing and self.slope_ok


def _decay_hypothesis(sc: Scenario) -> tuple[bool, str]:
    m = sc.model
    try:
        if sc.theorem == "T5":
            m.norm_moment(sc.p)
            return True, ""
        lam1 = be.weak_norm(m.increment_tail(), sc.s / 2 + 1)
        lam2 = be.weak_norm(m.conditional_moment_tail(2.0), sc.s / 2)
        far = be.weak_norm(m.increment_tail(), sc.s / 2 + 1, "limsup_window", 2.0**30)
        ok = not lam1.unbounded and not lam2.unbounded and far.value <= 1e-6 * max(lam1.value, 1)
        return ok, "" if ok else "weak-moment hypothesis not met"
    except CELL_ERRORS as exc:
        return False, f"{type(exc).__name__}: {exc}"


def check_decay(sc: Scenario, n_range: Sequence[int] | None = None,
                workers: int | None = None, x: float | None = None) -> DecayReport:
    """a_n = 2^{n w} P{max_{i <= 2^n} ||S_i|| > 2^n x} over n_range (one shared
    path set of length 2^{max n}); w = p - 1 for T5 and s/2 for T6_item2.

    The trend is judged on the top half of the range: the upper confidence
    limits must be non-increasing and the least-squares slope of log2 a_n
    must be <= 0. Zero-count cells are flagged below Monte Carlo resolution
    and left out of both checks; exactly-zero cells are consistent with decay.
    """
    if sc.theorem not in ("T5", "T6_item2"):
        raise InputError("decay checks apply to T5 and T6_item2")
    if sc.theorem == "T5" and sc.p is None:
        raise InputError("T5 decay needs p")
    if sc.theorem == "T6_item2" and (sc.s is None or not sc.s > 2):
        raise InputError("T6_item2 decay needs s > 2")
    ns = [int(n) for n in (n_range if n_range is not None else sc.n_grid)]
    if not ns or any(n < 0 for n in ns):
        raise InputError("n_range must be nonempty non-negative integers")
    x = float(sc.x_grid[0] if x is None else x)
    hyp, note = _decay_hypothesis(sc)
    ests = estimate_max_tails(sc.model, [2**n for n in ns], [2.0**n * x for n in ns],
                              sc.trials, sc.seed, sc.confidence, workers,
                              label=f"{sc.id}/decay")
    w = [_weight(sc, n) for n in ns]
    a = [wi * e.point for wi, e in zip(w, ests)]
    lo = [wi * e.ci_low for wi, e in zip(w, ests)]
    hi = [wi * e.ci_high for wi, e in zip(w, ests)]
    below = [e.exceedances == 0 and not e.exact for e in ests]
    mid = ns[0] + (ns[-1] - ns[0]) // 2
    top = [j for j, n in enumerate(ns) if n >= mid]
    usable = [j for j in top if not below[j]]
    envelope = all(hi[b] <= hi[a_] for a_, b in zip(usable[:-1], usable[1:]))
    positive = [j for j in usable if a[j] > 0]
    slope = None
    if len(positive) >= 2:
        slope = float(np.polyfit([ns[j] for j in positive],
                                 [math.log2(a[j]) for j in positive], 1)[0])
    if not positive:
        note = (note + "; " if note else "") + "a_n is zero on the top half"
    return DecayReport(tuple(ns), tuple(a), tuple(lo), tuple(hi),
                       tuple(e.exceedances for e in ests), tuple(e.exact for e in ests),
                       tuple(below), tuple(ns[j] for j in top), slope, envelope, hyp, note)


# --- lemma checks ------------------------------------------------------------------------


G_FUNCTIONS: dict[str, tuple[Callable[[float], float], tuple[float, ...]]] = {
    "zero": (lambda t: 0.0, ()),
    "two": (lambda t: 2.0, ()),
    "min2_inv": (lambda t: 2.0 if t <= 0.5 else 1.0 / t, (0.5,)),
}


@dataclass(frozen=True)
class LemmaReport:
    points: tuple[float, ...]
    lhs: tuple[MCEstimate, ...]
    rhs: tuple[float, ...]
    rhs_err: tuple[float, ...]
    tolerance: float
    probability: bool

    @property
    def passed(self) -> bool:
        return all(e.ci_high <= r + self.tolerance for e, r in zip(self.lhs, self.rhs))

    def cells(self, sc: Scenario) -> list[Cell]:
        out = []
        for x, e, r, err in zip(self.points, self.lhs, self.rhs, self.rhs_err):
            out.append(_cell("-", x, e, be.BoundValue(r + self.tolerance, err), sc,
                             probability=self.probability))
        return out


def lemma2_property_check(g, b: float, q: float, x_grid: Sequence[float],
                          tol: float = 1e-8) -> LemmaReport:
    """Roll out the maximal f with f <= 2, f non-increasing and
    f(2t) <= 2^-q f(t) + g(b t) along a dyadic chain from t_0, and compare
    f(x) with C int_0^1 g(b x t) t^(q-1) dt.

    t_0 is chosen so the start-up term 4^(q+1) (t_0 / x)^q is below tol/10
    for every grid point; grid points must lie on the chain t_0 2^k.
    """
    if isinstance(g, str):
        if g not in G_FUNCTIONS:
            raise InputError(f"unknown g {g!r}; choose from {sorted(G_FUNCTIONS)}")
        fn, knots = G_FUNCTIONS[g]
    else:
        fn, knots = g, ()
    xs = sorted(float(x) for x in x_grid)
    if not xs or xs[0] <= 0:
        raise InputError("x_grid must hold positive values")
    logs = [math.log2(x) for x in xs]
    if any(abs(v - round(v)) > 1e-12 for v in logs):
        raise InputError("lemma 2 grid points must be powers of two")
    x_min = xs[0]
    k0 = 1
    while 4.0 ** (q + 1) * (2.0**-k0) ** q > tol / 10:
        k0 += 1
    start = round(math.log2(x_min)) - k0
    top = round(logs[-1])
    f = {start: 2.0}
    for k in range(start, top):
        t = 2.0**k
        f[k + 1] = min(2.0, f[k], 2.0**-q * f[k] + float(fn(b * t)))
    lhs, rhs, errs = [], [], []
    for x in xs:
        val = f[round(math.log2(x))]
        bound = be.iteration_lemma_bound(fn, b, q, x, knots)
        lhs.append(exact_estimate(val, 1, 0, 1, 0.99))
        rhs.append(bound.value)
        errs.append(bound.abserr)
    return LemmaReport(tuple(xs), tuple(lhs), tuple(rhs), tuple(errs), tol, False)


def lemma3_property_check(Y_tail: TailFunction, coupling: str = "X_equals_Y",
                          t_grid: Sequence[float] = (0.5, 1.0, 2.0, 4.0),
                          trials: int = 100_000, seed: int = 0, k_max: int = 64,
                          confidence: float = 0.99, workers: int | None = None) -> LemmaReport:
    """Check P{X > 2t} <= int_1^inf P{Y > s t} ds for X satisfying the weak-type
    hypothesis: X = Y exactly, or X = max_{k <= k_max} k^-1 sum_{j<k} Y_j for
    iid Y (the maximal ergodic theorem for the shift) by simulation."""
    if coupling not in ("X_equals_Y", "ergodic_average"):
        raise InputError(f"unknown coupling {coupling!r}")
    mean = be.tail_moment(Y_tail, 1.0)
    if not math.isfinite(mean):
        raise DomainError("Y must have a finite mean")
    ts = [float(t) for t in t_grid]
    if any(not t > 0 for t in ts):
        raise InputError("t values must be positive")
    rhs, errs = [], []
    for t in ts:
        bnd = be.weak_type_bound(Y_tail, t)
        rhs.append(bnd.value)
        errs.append(bnd.abserr)
    if coupling == "X_equals_Y":
        lhs = [exact_estimate(float(Y_tail(2 * t)), trials, seed, 1, confidence) for t in ts]
    else:
        thr = np.asarray([2 * t for t in ts])
        w = rngmod.default_workers() if workers is None else workers
        if isinstance(Y_tail, ZeroTail):
            lhs = [exact_estimate(0.0, trials, seed, w, confidence) for _ in ts]
        else:
            def block(rng, size):
                y = inverse_sample(Y_tail, rng, (size, k_max))
                avg = np.cumsum(y, axis=1) / np.arange(1, k_max + 1)
                top = avg.max(axis=1)
                return (top[:, None] > thr[None, :]).sum(axis=0)

            counts = run_blocks(block, trials, k_max, seed, "lemma3/ergodic", workers)
            lhs = [make_estimate(int(c), trials, seed, w, confidence) for c in counts]
    return LemmaReport(tuple(ts), tuple(lhs), tuple(rhs), tuple(errs), 0.0, True)


# --- complete convergence ---------------------------------------------------------------


@dataclass(frozen=True)
class ArrayRow:
    """Row n of a martingale difference array: X_{n,k} = scale * xi_k for k <= length."""

    model: MartingaleModel
    scale: float
    length: int


@dataclass(frozen=True)
class SeriesReport:
    n: tuple[int, ...]
    hyp_max_terms: tuple[float, ...]
    hyp_var_terms: tuple[float, ...]
    conclusion_terms: tuple[float, ...]
    conclusion_ci_high: tuple[float, ...]
    bound_terms: tuple[float, ...]
    partial_sums: tuple[float, ...]
    bound_partial_sums: tuple[float, ...]
    decay_ratios: tuple[float, ...]
    summable: bool
    note: str = ""

    def cauchy_gap(self, window: int = 10) -> float:
        s = self.partial_sums
        if len(s) <= window:
            return math.inf
        return abs(s[-1] - s[-1 - window])


def complete_convergence_series(array: Callable[[int], ArrayRow],
                                c: Callable[[int], float], q: float, R: float, eps: float,
                                N: int, trials: int = 10_000, seed: int = 0, p: float = 2.0,
                                workers: int | None = None) -> SeriesReport:
    """Truncated hypothesis and conclusion series of the complete convergence result.

    Terms n = 1..N: c_n sum_k int_0^R P{||X_{n,k}|| > u} u^(q-1) du,
    c_n int_0^R P{sum_k E[||X_{n,k}||^2 | F] > u^2} u^(q-1) du, the estimated
    c_n P{sup_k ||sum_{i<=k} X_{n,i}|| > eps} and its one-step bound at x = eps.
    """
    if not (q > 0 and R > 0 and eps > 0 and N >= 1):
        raise InputError("need q, R, eps > 0 and N >= 1")
    ns = list(range(1, N + 1))
    hyp1, hyp2, concl, concl_hi, bounds = [], [], [], [], []
    note = ""
    for n in ns:
        row = array(n)
        cn = float(c(n))
        if cn < 0:
            raise InputError("c_n must be non-negative")
        if row.scale == 0 or row.length == 0:
            for lst in (hyp1, hyp2, concl, concl_hi, bounds):
                lst.append(0.0)
            continue
        inc = ScaledTail(row.model.increment_tail(), row.scale)
        h1 = _unit_integral(inc, R, q)[0]
        hyp1.append(cn * row.length * R**q * h1)
        var_tail = _scaled_sum_tail(row.model.conditional_sum_tail(row.length, 2.0), row.scale**2)
        h2 = 0.0 if isinstance(var_tail, ZeroTail) else \
            _unit_integral(PowerTail(var_tail, 0.5), R, q)[0]
        hyp2.append(cn * R**q * h2)
        est = estimate_max_tails(row.model, [row.length], [eps / row.scale], trials, seed,
                                 0.99, workers, label=f"array/n={n}")[0]
        concl.append(cn * est.point)
        concl_hi.append(cn * est.ci_high)
        try:
            params = be.BoundParams(p=p, q=q, r=row.model.space.r, D=row.model.space.D,
                                    x=eps, n=row.length)
            maxinc = MaxOfIidTail(inc, row.length)
            csum = _scaled_sum_tail(row.model.conditional_sum_tail(row.length, p),
                                    row.scale**p)
            bounds.append(cn * min(1.0, be.theorem1_rhs(maxinc, csum, params).value))
        except CELL_ERRORS as exc:
            bounds.append(math.nan)
            note = f"bound chain failed: {exc}"
    partial = list(np.cumsum(concl))
    bpartial = list(np.cumsum(bounds))
    terms = np.asarray(hyp1) + np.asarray(hyp2)
    ratios = tuple(float(terms[j + 1] / terms[j]) if terms[j] > 0 else math.nan
                   for j in range(len(terms) - 1))
    tail_terms = terms[len(terms) // 2:]
    summable = bool(np.all(np.isfinite(terms)) and
                    (tail_terms.sum() <= 0.5 * max(terms.sum(), 1e-300) or terms.sum() == 0))
    return SeriesReport(tuple(ns), tuple(hyp1), tuple(hyp2), tuple(concl), tuple(concl_hi),
                        tuple(bounds), tuple(float(v) for v in partial),
                        tuple(float(v) for v in bpartial), ratios, summable, note)


def _unit_integral(G, scale, q):
    return integrate_tail(G, scale, 0.0, 1.0, q, q, 0)


def _scaled_sum_tail(tail: TailFunction, factor: float) -> TailFunction:
    if isinstance(tail, ZeroTail) or factor == 0:
        return ZeroTail()
    return ScaledTail(tail, factor)
