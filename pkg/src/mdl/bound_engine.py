"""Numeric right-hand sides of the maximal deviation inequalities.

Two constant conventions are available for the theorem bounds:

``display``
    The printed right-hand sides, with c and C from :func:`constants`
    everywhere a constant appears.
``assembled``
    The bound the chain of intermediate steps actually delivers: the
    conditional-moment term of the one-step bound is evaluated at (c x u)^p,
    and every later step multiplies in the exact factor produced by the
    union bound, the maximal ergodic estimate, the change of variables and
    the induction over dimensions. These constants are larger and are the
    ones used to judge soundness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .errors import DomainError, InputError
from .quadrature import integrate_tail, weight_integral
from .tails import (CallableTail, PowerTail, TailFunction, ZeroTail, as_tail, check_tail)

MODES = ("remark", "solved_delta")
CONVENTIONS = ("display", "assembled")


# --- parameters and constants -----------------------------------------------------------


@dataclass(frozen=True)
class BoundParams:
    p: float
    q: float
    r: float = 2.0
    D: float = 1.0
    d: int = 1
    x: float = 1.0
    n: int | tuple[int, ...] = 1

    def __post_init__(self):
        if not 1.0 < self.r <= 2.0:
            raise InputError(f"r must lie in (1, 2], got {self.r}")
        if not 1.0 < self.p <= self.r:
            raise InputError(f"p must lie in (1, r] = (1, {self.r}], got {self.p}")
        if not self.q > 0:
            raise InputError(f"q must be positive, got {self.q}")
        if not self.D >= 1:
            raise InputError(f"D must be >= 1, got {self.D}")
        if int(self.d) != self.d or self.d < 1:
            raise InputError(f"d must be a positive integer, got {self.d}")
        if not self.x > 0:
            raise InputError(f"x must be positive, got {self.x}")
        n = tuple(int(v) for v in np.atleast_1d(self.n))
        if any(v < 1 for v in n):
            raise InputError(f"n must be >= 1 componentwise, got {self.n}")
        object.__setattr__(self, "n", n[0] if len(n) == 1 and np.ndim(self.n) == 0 else n)

    @property
    def n_vec(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.atleast_1d(self.n))

    @property
    def size(self) -> int:
        """|n| = prod n_q."""
        return math.prod(self.n_vec)

    def require_q_gt_p(self):
        if not self.q > self.p:
            raise InputError(f"this bound requires q > p (got p={self.p}, q={self.q})")


@dataclass(frozen=True)
class Constants:
    c: float
    C: float
    mode: str
    q: float
    D: float
    p: float | None = None
    delta: float | None = None
    beta: float | None = None


def remark_C(q: float) -> float:
    return q * 8.0**q / (2.0**q - 1.0)


def constants(q: float, D: float = 1.0, mode: str = "remark",
              p: float | None = None) -> Constants:
    """c and C of the one-step bound.

    ``remark``: c = min{1/2, 2^-q / sqrt(D)}, C = q 8^q / (2^q - 1).
    ``solved_delta``: c = delta/2 with delta solving
    (delta/(1-delta))^p (p/(p-1)) D = 2^-q, beta = 2, same C.
    """
    if not q > 0:
        raise InputError(f"q must be positive, got {q}")
    if not D >= 1:
        raise InputError(f"D must be >= 1, got {D}")
    C = remark_C(q)
    if mode == "remark":
        return Constants(min(0.5, 2.0**-q / math.sqrt(D)), C, mode, q, D, p)
    if mode == "solved_delta":
        if p is None or not p > 1:
            raise InputError("solved_delta mode needs p > 1")
        target = 2.0**-q

        def gap(delta):
            return (delta / (1 - delta)) ** p * (p / (p - 1)) * D - target

        delta = optimize.bisect(gap, 1e-300, 1 - 1e-15, xtol=1e-12, maxiter=2000)
        return Constants(delta / 2, C, mode, q, D, p, delta, 2.0)
    raise InputError(f"unknown constants mode {mode!r}")


# --- results ----------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundValue:
    """A bound value with its absolute quadrature error budget."""

    value: float
    abserr: float = 0.0
    terms: tuple[float, ...] = ()
    coefficients: tuple[float, ...] = ()
    convention: str = "display"
    constants: Constants | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def __float__(self):
        return float(self.value)


def _conv(convention: str) -> str:
    if convention not in CONVENTIONS:
        raise InputError(f"unknown convention {convention!r}")
    return convention


def _tail(G) -> TailFunction:
    return as_tail(G)


# --- weighted tail integrals ------------------------------------------------------------


def weighted_tail_integral(G, scale: float, q: float, p: float | None = None, d: int = 1,
                           domain: str = "unit") -> BoundValue:
    """int G(scale u) w(u) (1 + |log u|)^(d-1) du.

    ``unit``: w = u^(q-1) on (0, 1). ``halfline``: w = min{u^(q-1), u^(p-1)} on
    (0, inf), which needs q > p. Beyond the last breakpoint the half-line
    integral is closed form for exact power-law tails and a final improper
    quadrature piece otherwise; its error estimate is part of ``abserr``.
    """
    G = _tail(G)
    if not scale > 0:
        raise InputError("scale must be positive")
    if int(d) != d or d < 1:
        raise InputError("d must be a positive integer")
    k = int(d) - 1
    if domain == "unit":
        val, err = integrate_tail(G, scale, 0.0, 1.0, q, q, k)
    elif domain == "halfline":
        if p is None or not q > p:
            raise InputError(f"half-line weight requires q > p (got p={p}, q={q})")
        val, err = integrate_tail(G, scale, 0.0, math.inf, q, p, k)
    else:
        raise InputError(f"unknown domain {domain!r}")
    return BoundValue(float(val), float(err))


def _unit(G, scale, q, k=0):
    return integrate_tail(G, scale, 0.0, 1.0, q, q, k)


def _half(G, scale, p, q, k=0):
    return integrate_tail(G, scale, 0.0, math.inf, q, p, k)


# --- one-step bound for martingale differences ----------------------------------------


def theorem1_rhs(maxinc_tail, condsum_tail, params: BoundParams, mode: str = "remark",
                 convention: str = "display") -> BoundValue:
    """Bound on P{max_{i<=n} ||S_i|| > x} from the tails of max ||X_i|| and of
    sum E[||X_i||^p | F_{i-1}].

    C int_0^1 G(c x u) u^(q-1) du + C int_0^1 H(c' x^p u^p) u^(q-1) du with
    c' = c (display) or c' = c^p (assembled).
    """
    _conv(convention)
    G, H = _tail(maxinc_tail), _tail(condsum_tail)
    k = constants(params.q, params.D, mode, params.p)
    p, q, x = params.p, params.q, params.x
    t1, e1 = _unit(G, k.c * x, q)
    sum_tail = PowerTail(H, 1.0 / p) if not isinstance(H, ZeroTail) else H
    scale2 = k.c ** (1.0 / p) * x if convention == "display" else k.c * x
    t2, e2 = _unit(sum_tail, scale2, q)
    return BoundValue(k.C * (t1 + t2), k.C * (e1 + e2), (t1, t2), (k.C, k.C), convention, k)


# --- stationary sequences -----------------------------------------------------------------


def condvar_coefficients(p: float, q: float, k: Constants, convention: str) -> tuple[float, float]:
    """Coefficients of the maximum term and of the conditional-moment term."""
    if convention == "display":
        return k.C, k.C
    return k.C, k.C * (p / (q - p)) * (2.0 * k.c ** (1.0 - p)) ** (q / p)


def plain_constant(p: float, q: float, k: Constants, convention: str) -> float:
    """Constant of the bound in terms of the increment tail alone."""
    if convention == "display":
        return k.C
    return k.C * k.c**-q * (1.0 + (p / (q - p)) * 2.0 ** (q / p))


def _condmom_terms(G, H, x, n, p, q, c_arg, k_log=0):
    """(n int_0^1 G(c x u n^(1/p)) .., int_0^inf H(c x^p u^p) ..) with weights."""
    t1, e1 = (0.0, 0.0) if isinstance(G, ZeroTail) else \
        integrate_tail(G, c_arg * x * n ** (1.0 / p), 0.0, 1.0, q, q, k_log)
    if isinstance(H, ZeroTail):
        t2, e2 = 0.0, 0.0
    else:
        t2, e2 = integrate_tail(PowerTail(H, 1.0 / p), c_arg ** (1.0 / p) * x, 0.0, math.inf,
                                q, p, k_log)
    return n * t1, n * e1, t2, e2


def theorem2_rhs_condvar(m_tail, condmom_tail, params: BoundParams,
                         mode: str = "remark", convention: str = "display") -> BoundValue:
    """Bound on P{max_{i<=n} ||S_i|| > x n^(1/p)} for a stationary sequence:

    a n int_0^1 G(c x u n^(1/p)) u^(q-1) du
      + b int_0^inf H(c x^p u^p) min{u^(q-1), u^(p-1)} du,

    G the tail of ||m||, H the tail of E[||m||^p | T F_0].
    """
    _conv(convention)
    params.require_q_gt_p()
    G, H = _tail(m_tail), _tail(condmom_tail)
    p, q, x, n = params.p, params.q, params.x, params.size
    k = constants(q, params.D, mode, p)
    a, b = condvar_coefficients(p, q, k, convention)
    t1, e1, t2, e2 = _condmom_terms(G, H, x, n, p, q, k.c)
    return BoundValue(a * t1 + b * t2, a * e1 + b * e2, (t1, t2), (a, b), convention, k)


def theorem2_rhs(m_tail, params: BoundParams, mode: str = "remark",
                 convention: str = "display") -> BoundValue:
    """Bound on P{max_{i<=n} ||S_i|| > x n^(1/p)}:
    C' int_0^inf G(x u) min{u^(q-1), u^(p-1)} du."""
    _conv(convention)
    params.require_q_gt_p()
    G = _tail(m_tail)
    k = constants(params.q, params.D, mode, params.p)
    coef = plain_constant(params.p, params.q, k, convention)
    if isinstance(G, ZeroTail):
        return BoundValue(0.0, 0.0, (0.0,), (coef,), convention, k)
    val, err = _half(G, params.x, params.p, params.q)
    return BoundValue(coef * val, coef * err, (val,), (coef,), convention, k)


# --- orthomartingale fields --------------------------------------------------------------


def _envelope(v: float, p: float, q: float, d: int) -> float:
    return (1.0 + abs(math.log(v))) ** (d - 1) * min(v ** (p - 1), v ** (q - 1))


@dataclass(frozen=True)
class IteratedWeight:
    value: float
    envelope: float

    @property
    def ratio(self) -> float:
        return self.value / self.envelope


def iterated_weight_I(v: float, p: float, q: float, d: int) -> IteratedWeight:
    """I(v) = int_0^inf (1+|log s|)^(d-2) min{s^(p-2), s^(q-2)}
    min{(v/s)^(p-1), (v/s)^(q-1)} ds, with its envelope
    (1+|log v|)^(d-1) min{v^(p-1), v^(q-1)}.

    On each of the three pieces cut by s = 1 and s = v the integrand is a
    pure power of s times the log weight, so the pieces are integrated with
    the exact antiderivative.
    """
    if not q > p:
        raise DomainError(f"I(v) diverges unless q > p (got p={p}, q={q})")
    if int(d) != d or d < 2:
        raise InputError("I(v) is defined for d >= 2")
    if not v > 0:
        raise InputError("v must be positive")
    k = int(d) - 2
    lo, hi = min(v, 1.0), max(v, 1.0)
    total = 0.0
    for left, right in ((0.0, lo), (lo, hi), (hi, math.inf)):
        if not right > left:
            continue
        mid = left + 1.0 if math.isinf(right) else 0.5 * (left + right)
        s_exp = (q - 2) if mid < 1 else (p - 2)
        v_exp = (p - 1) if mid < v else (q - 1)
        # integrand v^v_exp * s^(s_exp - v_exp) * (1+|log s|)^k
        a = s_exp - v_exp + 1
        total += v**v_exp * weight_integral(a, a, k, left, right)
    return IteratedWeight(total, _envelope(v, p, q, d))


@lru_cache(maxsize=None)
def fit_K(p: float, q: float, d: int, v_min: float = 1e-6, v_max: float = 1e6,
          points: int = 241, shift: float = 1.0) -> float:
    """max over a log grid of I(shift * v) / envelope(v)."""
    grid = np.geomspace(v_min, v_max, points)
    return max(iterated_weight_I(shift * v, p, q, d).value / _envelope(v, p, q, d)
               for v in grid)


def inner_weight_constant(p: float, q: float, d: int) -> float:
    """K_J with int_0^s (1+|log v|)^(d-2) min{v^(p-2), v^(q-2)} dv
    <= K_J (1+|log s|)^(d-2) min{s^(p-1), s^(q-1)} for every s > 0."""
    j1 = weight_integral(q - 1, q - 1, d - 2, 0.0, 1.0)
    return j1 + 1.0 / (p - 1)


@lru_cache(maxsize=None)
def field_constant(p: float, q: float, d: int, D: float = 1.0,
                   mode: str = "remark") -> float:
    """Assembled constant C_d of the d-dimensional bound at threshold x |n|^(1/p).

    C_1 is the sequence constant; the induction step multiplies by 2 (threshold
    2t -> x), the sequence constant, K_J and the fitted sup of I(2z) over its
    envelope on z in [1e-12, 1e12].
    """
    k = constants(q, D, mode, p)
    c1 = plain_constant(p, q, k, "assembled")
    if d == 1:
        return c1
    k_i = fit_K(p, q, d, 1e-12, 1e12, 961, 2.0)
    return 2.0 * field_constant(p, q, d - 1, D, mode) * c1 * inner_weight_constant(p, q, d) * k_i


def theorem3_rhs(m_tail, params: BoundParams, mode: str = "remark",
                 convention: str = "display") -> BoundValue:
    """Bound on P{max_{1<=i<=n} |S_i| > x |n|^(1/p)} for a d-dimensional field:
    C' int_0^inf G(x u) min{u^(q-1), u^(p-1)} (1+|log u|)^(d-1) du."""
    _conv(convention)
    params.require_q_gt_p()
    G = _tail(m_tail)
    k = constants(params.q, params.D, mode, params.p)
    if convention == "display":
        coef = k.C
    else:
        coef = field_constant(params.p, params.q, params.d, params.D, mode)
    if isinstance(G, ZeroTail):
        return BoundValue(0.0, 0.0, (0.0,), (coef,), convention, k)
    val, err = _half(G, params.x, params.p, params.q, params.d - 1)
    return BoundValue(coef * val, coef * err, (val,), (coef,), convention, k)


def theorem3_rhs_condvar(m_tail, condmom_tail, params: BoundParams, axis: int = 0,
                         mode: str = "remark",
                         convention: str = "display") -> BoundValue:
    """Bound on P{max_{1<=i<=n} |S_i| > x |n|^(1/p)} using the conditional
    moment E[|m|^p | T_j F_0] along axis j (0-based):

    C n_j int_0^1 G(x u n_j^(1/p)) (1+|log u|)^(d-1) u^(q-1) du
      + C int_0^inf H(x^p u^p) min{u^(q-1), u^(p-1)} (1+|log u|)^(d-1) du.
    """
    _conv(convention)
    params.require_q_gt_p()
    nv = params.n_vec
    d = params.d
    if len(nv) not in (1, d):
        raise InputError(f"n must have {d} components")
    if not 0 <= axis < d:
        raise InputError(f"axis must lie in 0..{d - 1}")
    nj = nv[axis] if len(nv) == d else nv[0]
    G, H = _tail(m_tail), _tail(condmom_tail)
    k = constants(params.q, params.D, mode, params.p)
    t1, e1, t2, e2 = _condmom_terms(G, H, params.x, nj, params.p, params.q, 1.0, d - 1)
    if convention == "display":
        a = b = k.C
    else:
        # heuristic: the induction does not produce the restricted first term,
        # so the field constant is inflated by the conditional-moment factor
        base = field_constant(params.p, params.q, d, params.D, mode)
        a = b = base * max(1.0, (params.p / (params.q - params.p)) * 2.0 ** (params.q / params.p))
    return BoundValue(a * t1 + b * t2, a * e1 + b * e2, (t1, t2), (a, b), convention, k)


# --- lemmas ---------------------------------------------------------------------------


def lemma1_rhs(prob_max_S_gt_x: float, maxinc_tail_at_dx: float, condsum_tail_at_dxp: float,
               beta: float, delta: float, p: float, D: float = 1.0,
               proof_factor: bool = True) -> float:
    """(delta/(beta-1-delta))^p [p/(p-1)] D P{max||S|| > x} + P{max||X|| > delta x}
    + P{sum E[..] > (delta x)^p}; the p/(p-1) factor is dropped when
    ``proof_factor`` is false."""
    if not beta > 1:
        raise InputError("beta must exceed 1")
    if not 0 < delta < beta - 1:
        raise InputError("delta must lie in (0, beta - 1)")
    if not p > 1 or not D >= 1:
        raise InputError("need p > 1 and D >= 1")
    probs = (prob_max_S_gt_x, maxinc_tail_at_dx, condsum_tail_at_dxp)
    if any(not 0 <= v <= 1 for v in probs):
        raise InputError("probabilities must lie in [0, 1]")
    coef = (delta / (beta - 1 - delta)) ** p * D
    if proof_factor:
        coef *= p / (p - 1)
    return coef * probs[0] + probs[1] + probs[2]


def _as_bounded_function(g, knots: Sequence[float] = ()) -> TailFunction:
    if isinstance(g, TailFunction):
        tail = g
    elif callable(g):
        tail = CallableTail(g, knots=knots, validate=False)
    else:
        raise InputError(f"cannot interpret {g!r} as a function")
    check_tail(tail, upper=2.0)
    return tail


def iteration_lemma_bound(g, b: float, q: float, x: float,
                          knots: Sequence[float] = ()) -> BoundValue:
    """C int_0^1 g(b x t) t^(q-1) dt with C = q 8^q / (2^q - 1); g non-increasing
    with values in [0, 2]."""
    if not (b > 0 and q > 0 and x > 0):
        raise InputError("b, q and x must be positive")
    tail = _as_bounded_function(g, knots)
    C = remark_C(q)
    val, err = integrate_tail(tail, b * x, 0.0, 1.0, q, q, 0)
    return BoundValue(C * val, C * err, (val,), (C,))


def weak_type_bound(Y_tail, t: float) -> BoundValue:
    """int_1^inf P{Y > s t} ds."""
    if not t > 0:
        raise InputError("t must be positive")
    G = _tail(Y_tail)
    val, err = integrate_tail(G, t, 1.0, math.inf, 1.0, 1.0, 0)
    return BoundValue(float(val), float(err))


# --- weak norms and moments -------------------------------------------------------------


@dataclass(frozen=True)
class WeakNorm:
    value: float
    unbounded: bool
    argmax: float

    def __float__(self):
        return float(self.value)


OVERFLOW = 1e12


def weak_norm(tail, s: float, mode: str = "sup", T: float | None = None) -> WeakNorm:
    """sup_t t^s G(t) over t = 2^k (k = -40..40), knot left-limits and a
    bounded scalar refinement around the grid maximum.

    ``limsup_window`` restricts the sup to t >= T. An exact power law with
    index below s, a value above 1e12, or a maximum still increasing at the
    top of the grid is reported as unbounded.
    """
    if not s > 0:
        raise InputError("s must be positive")
    G = _tail(tail)
    if mode == "sup":
        lower = 0.0
    elif mode == "limsup_window":
        if T is None or not T > 0:
            raise InputError("limsup_window mode needs a window start T > 0")
        lower = float(T)
    else:
        raise InputError(f"unknown weak norm mode {mode!r}")
    pl = G.power_law
    if pl is not None and pl[2] < s:
        return WeakNorm(math.inf, True, math.inf)
    if isinstance(G, ZeroTail):
        return WeakNorm(0.0, False, 0.0)
    grid = 2.0 ** np.arange(-40, 41, dtype=float)
    pts = grid[grid >= lower]
    if lower > 0:
        pts = np.concatenate([[lower], pts])

    def f(t):
        return t**s * G(t)

    vals = [f(t) for t in pts]
    cands = list(zip(vals, pts))
    left = getattr(G, "left_limit", None)
    for kn in G.knots:
        if kn > lower:
            tl = float(np.nextafter(kn, 0.0))
            cands.append(((kn**s) * left(kn) if left else f(tl), kn))
    best, arg = max(cands)
    top_increasing = len(vals) > 1 and vals[-1] > vals[-2] * (1 + 1e-9) and vals[-1] >= best
    if best > OVERFLOW or top_increasing:
        return WeakNorm(math.inf, True, float(pts[-1]))
    j = int(np.argmax(vals))
    a = pts[max(j - 1, 0)]
    b = pts[min(j + 1, len(pts) - 1)]
    if b > a:
        res = optimize.minimize_scalar(lambda t: -f(t), bounds=(a, b), method="bounded",
                                       options={"xatol": 1e-10 * b})
        if -res.fun > best:
            best, arg = -res.fun, res.x
    return WeakNorm(float(best), False, float(arg))


def tail_moment(tail, k: float) -> float:
    """E[Z^k] = k int_0^inf t^(k-1) G(t) dt."""
    G = _tail(tail)
    if isinstance(G, ZeroTail):
        return 0.0
    val, _ = integrate_tail(G, 1.0, 0.0, math.inf, k, k, 0)
    return float(k * val)


def truncated_moment(tail, p: float, y: float) -> float:
    """E[Z^p 1{Z > y}] = y^p G(y) + p int_y^inf t^(p-1) G(t) dt."""
    G = _tail(tail)
    if isinstance(G, ZeroTail):
        return 0.0
    val, _ = integrate_tail(G, 1.0, y, math.inf, p, p, 0)
    return float(y**p * G(y) + p * val)


# --- large deviations -------------------------------------------------------------------


LARGEDEV_KINDS = ("thm5_p_lt_r", "thm6_weak", "cor_weak", "thm7_series")


@dataclass(frozen=True)
class LargeDevBound:
    """Upper bound on the weighted probability (or series) of a large-deviation result.

    ``weighted`` bounds 2^{n w} P{max_{i <= 2^n} ||S_i|| > 2^n x} (thm5: w = p-1,
    others w = s/2), or the whole series for thm7. ``constant`` is the
    multiplier of the moment functional the result is stated with.
    """

    kind: str
    weighted: float
    constant: float
    functional: float
    abserr: float = 0.0

    def probability_bound(self, n: int, p: float | None = None, s: float | None = None) -> float:
        w = (p - 1) if self.kind == "thm5_p_lt_r" else s / 2
        return self.weighted * 2.0 ** (-n * w)


def largedev_rhs(kind: str, m_tail, condvar_tail=None, *, x: float, p: float | None = None,
                 s: float | None = None, q: float | None = None, n: int | None = None,
                 D: float = 1.0, mode: str = "remark",
                 convention: str = "display") -> LargeDevBound:
    """Evaluate the explicit upper bound of a large-deviation result.

    thm5_p_lt_r: C' x^-p [int_0^1 M(a u) u^(q-p-1) du + M(a)/p] with
    a = 2^{n(1-1/p)} x and M(y) = E[||m||^p 1{||m|| > y}]; ``constant`` is
    the ratio to M(a).
    thm6_weak: A L1 (c x)^{-(s/2+1)} / (3s/2 - 1) + B L2 c^{-s/2} x^{-s}
    (1/s + 1/(s-2)) with L1, L2 the weak norms of ||m|| (order s/2+1) and of
    E[||m||^2 | T F_0] (order s/2); p = 2, q = 2s.
    cor_weak: C' L x^{-s} (1/s + 1/(s-2)), L the weak norm of order s.
    thm7_series: the thm6 bound with moments in place of weak norms and the
    geometric factors 1/(1 - 2^{-(s/2+1)}), 1/(1 - 2^{-s/2}).
    """
    if kind not in LARGEDEV_KINDS:
        raise InputError(f"unknown large-deviation kind {kind!r}")
    if not x > 0:
        raise InputError("x must be positive")
    _conv(convention)
    G = _tail(m_tail)
    if kind == "thm5_p_lt_r":
        if p is None or n is None:
            raise InputError("thm5 needs p and n")
        q = p + 1.5 if q is None else q
        if not q > p:
            raise InputError("thm5 needs q > p")
        k = constants(q, D, mode, p)
        coef = plain_constant(p, q, k, convention)
        a = 2.0 ** (n * (1 - 1 / p)) * x
        if isinstance(G, ZeroTail):
            return LargeDevBound(kind, 0.0, coef, 0.0)
        mta = truncated_moment(G, p, a)
        inner, err = _truncated_moment_integral(G, p, q, a)
        value = coef * x**-p * (inner + mta / p)
        return LargeDevBound(kind, value, value / mta if mta > 0 else math.inf, mta,
                             coef * x**-p * err)
    if s is None or not s > 2:
        raise InputError(f"{kind} needs s > 2")
    p2, q2 = 2.0, 2.0 * s
    k = constants(q2, D, mode, p2)
    geo = 1.0 / s + 1.0 / (s - 2.0)
    if kind == "cor_weak":
        coef = plain_constant(p2, q2, k, convention)
        lam = weak_norm(G, s)
        if lam.unbounded:
            raise DomainError(f"||m|| is not in weak L^{s}")
        const = coef * geo
        return LargeDevBound(kind, const * lam.value * x**-s, const, lam.value)
    a_coef, b_coef = condvar_coefficients(p2, q2, k, convention)
    V = ZeroTail() if condvar_tail is None else _tail(condvar_tail)
    if kind == "thm6_weak":
        lam1 = weak_norm(G, s / 2 + 1)
        lam2 = weak_norm(V, s / 2)
        if lam1.unbounded or lam2.unbounded:
            raise DomainError("weak-norm hypothesis fails (infinite weak norm)")
        t1 = a_coef * lam1.value * (k.c * x) ** -(s / 2 + 1) / (1.5 * s - 1)
        t2 = b_coef * lam2.value * k.c ** (-s / 2) * x**-s * geo
        return LargeDevBound(kind, t1 + t2, max(a_coef, b_coef), lam1.value + lam2.value)
    mom1 = tail_moment(G, s / 2 + 1)
    mom2 = tail_moment(V, s / 2)
    t1 = a_coef * mom1 * (k.c * x) ** -(s / 2 + 1) / ((1.5 * s - 1) * (1 - 2.0 ** -(s / 2 + 1)))
    t2 = b_coef * mom2 * k.c ** (-s / 2) * x**-s * geo / (1 - 2.0 ** (-s / 2))
    return LargeDevBound(kind, t1 + t2, max(a_coef, b_coef), mom1 + mom2)


def _truncated_moment_integral(G, p, q, a) -> tuple[float, float]:
    """int_0^1 M(a u) u^(q-p-1) du with M(y) = y^p G(y) + p int_y^inf t^(p-1) G(t) dt.

    Swapping the order of integration gives
    a^p int_0^1 G(a u) u^(q-1) du + p a^p int_0^inf G(a v) v^(p-1) min(v,1)^(q-p)/(q-p) dv.
    """
    i1, e1 = integrate_tail(G, a, 0.0, 1.0, q, q, 0)
    i2, e2 = integrate_tail(G, a, 0.0, math.inf, q, p, 0)
    f = p / (q - p)
    return a**p * (i1 + f * i2), a**p * (e1 + f * e2)
