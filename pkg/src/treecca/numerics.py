"""Stable binomial probabilities, failure-map fixed points, and bounds.

The failure maps give the probability that the root of a d-ary ball of
depth n carries no root-anchored structure, as a function x of the same
failure probability one level down:

* b1 (rigid fort):           P(Binom(d, (1-x)(1-1/kappa)) <= d-theta+1)
* b2 (rainbow subtree):      P(Binom(d, (1-x)/kappa)      <= theta-1)
* strong (strongly rigid):   P(Binom(d, (1-x)(1-2/kappa)) <= d-theta)

Iterating any of them from y_0 = 0 (Kleene iteration) gives the depth-n
failure probabilities y_n, converging to the smallest fixed point in [0,1];
a certificate x0 with B(x0) <= x0 bounds that limit from above.  All bound
evaluations with tower exponents run in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import gammaln

from .errors import InternalConsistencyError, ParameterError, TreeccaError

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
GUARD_BAND = 1e-9

B1 = "b1"
B2 = "b2"
STRONG = "strong"

BELOW_ONE = "below-one"
NUMERICALLY_ONE = "numerically-one"


class ThresholdNotFoundError(TreeccaError):
    """No kappa within the scan bound satisfies the condition."""


# ---------------------------------------------------------------------------
# binomial probabilities
# ---------------------------------------------------------------------------

def _check_prob(p: float, name: str = "p") -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"{name} must be in [0, 1], got {p}")
    return p


# Log terms more than this far below the maximum contribute < 1e-16
# relatively even across 1e4 terms; they keep their fast approximate value.
_DOMINANT_WINDOW = 45.0


def _refined_log_term(n: int, p: float, k) -> float:
    # exact integer binomial coefficient: its log is correct to 1/2 ulp,
    # unlike gammaln differences which cancel catastrophically at n ~ 1e4
    return (math.log(math.comb(n, int(k))) + int(k) * math.log(p)
            + (n - int(k)) * math.log1p(-p))


def _sum_pmf_range(n: int, p: float, lo: int, hi: int) -> float:
    """Sum of pmf(n, p, k) for k in [lo, hi].

    Approximate log terms (gammaln) screen for the dominant window, whose
    terms are recomputed with exact integer coefficients; the shifted
    exponentials are accumulated with compensated summation (fsum).
    """
    if lo > hi:
        return 0.0
    if p == 0.0:
        return 1.0 if lo <= 0 else 0.0
    if p == 1.0:
        return 1.0 if lo <= n <= hi else 0.0
    ks = np.arange(lo, hi + 1, dtype=np.int64)
    logp, log1mp = math.log(p), math.log1p(-p)
    lt = (gammaln(n + 1) - gammaln(ks + 1) - gammaln(n - ks + 1)
          + ks * logp + (n - ks) * log1mp)
    cutoff = float(np.max(lt)) - _DOMINANT_WINDOW
    dominant = np.nonzero(lt >= cutoff)[0]
    a, b = int(ks[dominant[0]]), int(ks[dominant[-1]])
    # walk the dominant block with the exact integer coefficient recurrence;
    # each division is exact, so every refined log term is correct to ~1 ulp
    coeff = math.comb(n, a)
    for k in range(a, b + 1):
        lt[k - lo] = math.log(coeff) + k * logp + (n - k) * log1mp
        coeff = coeff * (n - k) // (k + 1)
    m = float(np.max(lt))
    s = math.fsum(np.exp(lt - m).tolist())
    return min(1.0, math.exp(m) * s)


def binom_pmf(n: int, p: float, k: int) -> float:
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    p = _check_prob(p)
    if k < 0 or k > n:
        return 0.0
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    return math.exp(_refined_log_term(n, p, k))


def binom_cdf(n: int, p: float, k: int) -> float:
    """P(Binom(n, p) <= k), relative error <= 1e-12 for n <= 1e4.

    The side of the mode with less mass is summed directly; the other side
    is obtained by complement, so binom_cdf(n,p,k) + binom_tail(n,p,k+1)
    partitions the mass to within a few ulp.
    """
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    p = _check_prob(p)
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    mode = math.floor((n + 1) * p)
    if k < mode:
        return _sum_pmf_range(n, p, 0, k)
    return max(0.0, 1.0 - _sum_pmf_range(n, p, k + 1, n))


def binom_tail(n: int, p: float, k: int) -> float:
    """P(Binom(n, p) >= k)."""
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    p = _check_prob(p)
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    mode = math.floor((n + 1) * p)
    if k > mode:
        return _sum_pmf_range(n, p, k, n)
    return max(0.0, 1.0 - _sum_pmf_range(n, p, 0, k - 1))


# ---------------------------------------------------------------------------
# failure maps and derivatives
# ---------------------------------------------------------------------------

def _check_map_params(d: int, theta: int, kappa: int):
    if not (d >= theta >= 2):
        raise ParameterError(f"need d >= theta >= 2, got d={d}, theta={theta}")
    if kappa < 3:
        raise ParameterError(f"kappa must be >= 3, got {kappa}")


def _check_x(x: float) -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise ParameterError(f"x must be in [0, 1], got {x}")
    return x


def b1(x: float, d: int, theta: int, kappa: int) -> float:
    """Rigid-fort failure map."""
    _check_map_params(d, theta, kappa)
    x = _check_x(x)
    return binom_cdf(d, (1.0 - x) * (1.0 - 1.0 / kappa), d - theta + 1)


def b2(x: float, d: int, theta: int, kappa: int) -> float:
    """Rainbow-subtree failure map."""
    _check_map_params(d, theta, kappa)
    x = _check_x(x)
    return binom_cdf(d, (1.0 - x) / kappa, theta - 1)


def b_strong(x: float, d: int, theta: int, kappa: int) -> float:
    """Strongly-rigid-fort failure map."""
    _check_map_params(d, theta, kappa)
    x = _check_x(x)
    return binom_cdf(d, (1.0 - x) * (1.0 - 2.0 / kappa), d - theta)


def b1_deriv(x: float, d: int, theta: int, kappa: int) -> float:
    _check_map_params(d, theta, kappa)
    x = _check_x(x)
    q = 1.0 - 1.0 / kappa
    return d * q * binom_pmf(d - 1, (1.0 - x) * q, d - theta + 1)


def b2_deriv(x: float, d: int, theta: int, kappa: int) -> float:
    _check_map_params(d, theta, kappa)
    x = _check_x(x)
    return (d / kappa) * binom_pmf(d - 1, (1.0 - x) / kappa, theta - 1)


_MAPS: dict[str, Callable[..., float]] = {B1: b1, B2: b2, STRONG: b_strong}


def failure_map(map_id: str, d: int, theta: int,
                kappa: int) -> Callable[[float], float]:
    """The named failure map with parameters bound."""
    try:
        fn = _MAPS[map_id]
    except KeyError:
        raise ParameterError(f"unknown map id {map_id!r}") from None
    _check_map_params(d, theta, kappa)
    return lambda x: fn(x, d, theta, kappa)


def kleene_sequence(map_id: str, d: int, theta: int, kappa: int,
                    n: int) -> np.ndarray:
    """Iterates y_0=0, y_{j+1}=B(y_j) up to index n (inclusive)."""
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    fn = failure_map(map_id, d, theta, kappa)
    ys = np.empty(n + 1, dtype=np.float64)
    ys[0] = 0.0
    for j in range(n):
        ys[j + 1] = fn(ys[j])
    return ys


@dataclass
class FixedPointResult:
    """Kleene limit of a failure map with a certificate when one exists."""

    map_id: str
    d: int
    theta: int
    kappa: int
    iterates_count: int
    y_star: float
    residual: float
    certificate: float | None
    classification: str
    tol: float

    def to_dict(self) -> dict:
        return {
            "map": self.map_id, "d": self.d, "theta": self.theta,
            "kappa": self.kappa, "iterates_count": self.iterates_count,
            "y_star": self.y_star, "residual": self.residual,
            "certificate": self.certificate,
            "classification": self.classification, "tol": self.tol,
        }


def _certificate_grid() -> np.ndarray:
    xs = [1e-8 * 10 ** (j / 4) for j in range(32)]
    xs = [x for x in xs if x < 1.0]
    xs.extend(np.linspace(0.0, 1.0, 1002)[1:-1].tolist())
    return np.array(sorted(set(xs)))


def _scan_certificate(map_id: str, d: int, theta: int, kappa: int,
                      cutoff: float) -> float | None:
    """Smallest grid point x with B(x) <= x and x < cutoff, if any."""
    xs = _certificate_grid()
    xs = xs[xs < cutoff]
    if xs.size == 0:
        return None
    if map_id == B1:
        ps, k = (1.0 - xs) * (1.0 - 1.0 / kappa), d - theta + 1
    elif map_id == B2:
        ps, k = (1.0 - xs) / kappa, theta - 1
    else:
        ps, k = (1.0 - xs) * (1.0 - 2.0 / kappa), d - theta
    if k < 0:
        return float(xs[0])  # map is identically zero
    ks = np.arange(0, k + 1, dtype=np.int64)
    logc = gammaln(d + 1) - gammaln(ks + 1) - gammaln(d - ks + 1)
    with np.errstate(divide="ignore"):
        lt = (logc[None, :] + ks[None, :] * np.log(ps[:, None])
              + (d - ks)[None, :] * np.log1p(-ps[:, None]))
    m = lt.max(axis=1)
    vals = np.exp(m) * np.exp(lt - m[:, None]).sum(axis=1)
    vals = np.where(ps == 0.0, 1.0, vals)
    fn = failure_map(map_id, d, theta, kappa)
    for x, v in zip(xs, vals):
        # vectorized pass is a screen; confirm candidates with the scalar cdf
        if v <= x * (1 + 1e-9) and fn(float(x)) <= x:
            return float(x)
    return None


def kleene_fp(map_id: str, d: int, theta: int, kappa: int,
              tol: float = DEFAULT_TOL,
              max_iter: int = DEFAULT_MAX_ITER) -> FixedPointResult:
    """Smallest fixed point of the named failure map by Kleene iteration.

    Iterates from 0 until successive iterates differ by less than tol or
    max_iter is hit, asserting monotone non-decreasing iterates along the
    way.  A grid scan (log-spaced from 1e-8 plus 1000 uniform points) looks
    for a certificate x0 < 1 - 10 tol with B(x0) <= x0; the result is
    classified below-one iff a certificate was found or the limit itself
    stayed below 1 - 10 tol.  Plain iteration cannot distinguish slow
    convergence toward 1 from a fixed point near 1, hence the certificate.
    """
    if tol <= 0:
        raise ParameterError(f"tol must be > 0, got {tol}")
    if max_iter < 1:
        raise ParameterError(f"max_iter must be >= 1, got {max_iter}")
    fn = failure_map(map_id, d, theta, kappa)
    y = 0.0
    count = 0
    for _ in range(max_iter):
        y_next = fn(y)
        count += 1
        if y_next < y - tol:
            raise InternalConsistencyError(
                f"Kleene iterates decreased: {y} -> {y_next}")
        if abs(y_next - y) < tol:
            y = y_next
            break
        y = y_next
    residual = abs(fn(y) - y)
    cutoff = 1.0 - 10.0 * tol
    certificate = _scan_certificate(map_id, d, theta, kappa, cutoff)
    below = certificate is not None or y < cutoff
    return FixedPointResult(
        map_id=map_id, d=d, theta=theta, kappa=kappa, iterates_count=count,
        y_star=y, residual=residual, certificate=certificate,
        classification=BELOW_ONE if below else NUMERICALLY_ONE, tol=tol)


# ---------------------------------------------------------------------------
# structure-to-map glue used by the experiments module
# ---------------------------------------------------------------------------

_VARIANT_MAP_ID = {
    "rigid-fort": B1,
    "rainbow": B2,
    "strongly-rigid-fort": STRONG,
}


def variant_map_id(variant: str) -> str:
    try:
        return _VARIANT_MAP_ID[variant]
    except KeyError:
        raise ParameterError(f"no failure map for variant {variant!r}") from None


def root_failure_probability(variant: str, kind: str, d: int, theta: int,
                             kappa: int, depth: int) -> float:
    """Probability that the root of a depth-`depth` ball is unmarked.

    On a d-ary ball this is the Kleene iterate y_depth.  On a regular ball
    the root has d+1 children, so one extra binomial layer composes with
    y_{depth-1}.
    """
    if depth < 0:
        raise ParameterError(f"depth must be >= 0, got {depth}")
    map_id = variant_map_id(variant)
    if kind == "dary-ball":
        return float(kleene_sequence(map_id, d, theta, kappa, depth)[depth])
    if kind != "regular-ball":
        raise ParameterError(f"unsupported topology kind {kind!r}")
    if depth == 0:
        return 0.0
    y_prev = float(kleene_sequence(map_id, d, theta, kappa, depth - 1)[depth - 1])
    if map_id == B1:
        p, k = (1.0 - y_prev) * (1.0 - 1.0 / kappa), d - theta + 2
    elif map_id == B2:
        p, k = (1.0 - y_prev) / kappa, theta - 1
    else:
        p, k = (1.0 - y_prev) * (1.0 - 2.0 / kappa), d - theta + 1
    return binom_cdf(d + 1, p, k)


# ---------------------------------------------------------------------------
# closed-form tail bounds
# ---------------------------------------------------------------------------

def chernoff_lower_tail(mu: float, delta: float) -> float:
    """exp(-delta^2 mu / 2), valid bound on P(X <= (1-delta) mu)."""
    if mu < 0:
        raise ParameterError(f"mu must be >= 0, got {mu}")
    if not (0.0 <= delta <= 1.0):
        raise ParameterError(f"delta must be in [0, 1], got {delta}")
    return math.exp(-delta * delta * mu / 2.0)


def markov_binom_tail(mu: float, k: float) -> float:
    """(mu e / k)^k, first-moment bound on P(X >= k) for binomial X."""
    if mu < 0:
        raise ParameterError(f"mu must be >= 0, got {mu}")
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if mu == 0.0:
        return 0.0
    return math.exp(k * (math.log(mu) + 1.0 - math.log(k)))


# ---------------------------------------------------------------------------
# parameter conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionCheck:
    """Outcome of a guarded scalar comparison.

    Truthiness equals `passes`; `boundary` flags comparisons decided within
    the relative guard band (1e-9), where double rounding could matter.
    """

    name: str
    passes: bool
    boundary: bool
    lhs: float
    rhs: float

    def __bool__(self) -> bool:
        return self.passes


def _guarded(name: str, lhs: float, rhs: float, relation: str) -> ConditionCheck:
    scale = max(1.0, abs(lhs), abs(rhs))
    band = GUARD_BAND * scale
    margin = lhs - rhs
    if relation == ">=":
        passes = margin >= -band
    elif relation == "<=":
        passes = margin <= band
    elif relation == ">":
        passes = margin > band
    else:
        raise ParameterError(f"unknown relation {relation!r}")
    return ConditionCheck(name=name, passes=passes,
                          boundary=abs(margin) <= band, lhs=lhs, rhs=rhs)


def _check_cond_params(d: int, theta: int, kappa: int):
    if d < 2:
        raise ParameterError(f"d must be >= 2, got {d}")
    if theta < 2:
        raise ParameterError(f"theta must be >= 2, got {theta}")
    if kappa < 3:
        raise ParameterError(f"kappa must be >= 3, got {kappa}")


def cond_fixation(d: int, theta: int, kappa: int) -> ConditionCheck:
    """kappa (theta - 3 sqrt(d ln d)) >= d."""
    _check_cond_params(d, theta, kappa)
    lhs = kappa * (theta - 3.0 * math.sqrt(d * math.log(d)))
    return _guarded("fixation", lhs, float(d), ">=")


def cond_fluctuation(d: int, theta: int, kappa: int) -> ConditionCheck:
    """kappa (theta - 1) <= d - sqrt(6 d kappa ln d)."""
    _check_cond_params(d, theta, kappa)
    rhs = d - math.sqrt(6.0 * d * kappa * math.log(d))
    return _guarded("fluctuation", float(kappa * (theta - 1)), rhs, "<=")


def cond_cca_small_theta(d: int, theta: int, kappa: int) -> ConditionCheck:
    """theta>=3: kappa (theta-2) >= 9 e d^(1+1/(theta-2)); theta=2: kappa >= 12 d^3."""
    _check_cond_params(d, theta, kappa)
    if theta == 2:
        return _guarded("cca-small-theta", float(kappa), 12.0 * d**3, ">=")
    rhs = 9.0 * math.e * d ** (1.0 + 1.0 / (theta - 2))
    return _guarded("cca-small-theta", float(kappa * (theta - 2)), rhs, ">=")


def _tower_reciprocal(theta: int, kappa: int) -> float:
    """1 / (theta^kappa - 1), evaluated as expm1 of kappa ln theta."""
    x = kappa * math.log(theta)
    if x > 700.0:
        return 0.0
    return 1.0 / math.expm1(x)


def cond_ghm_small_theta(d: int, theta: int, kappa: int) -> ConditionCheck:
    """kappa >= e (d e / theta)^(1 + 1/(theta^kappa - 1))."""
    _check_cond_params(d, theta, kappa)
    expo = 1.0 + _tower_reciprocal(theta, kappa)
    rhs = math.exp(1.0 + expo * math.log(d * math.e / theta))
    return _guarded("ghm-small-theta", float(kappa), rhs, ">=")


# ---------------------------------------------------------------------------
# minimal kappa for GHM fixation
# ---------------------------------------------------------------------------

KAPPA_SCAN_LIMIT = 10**6

GENERAL = "general"
THETA2 = "theta2"
THETA3 = "theta3"


def _ghm_kappa_ok(theta: int, d: int, kappa: int, refinement: str) -> bool:
    if refinement == GENERAL:
        return bool(cond_ghm_small_theta(d, theta, kappa))
    expo = 1.0 + _tower_reciprocal(theta, kappa)
    if refinement == THETA2:
        rhs = math.exp(0.75 + expo * math.log(d / math.sqrt(2.0)))
    else:
        rhs = math.exp(5.0 / 24.0 + expo * (math.log(d) - math.log(6.0) / 3.0))
    return bool(_guarded("ghm-refined", float(kappa), rhs, ">"))


def ghm_kappa_threshold(theta: int, d: int,
                        refinement: str = GENERAL) -> int:
    """Minimal kappa >= 3 for which GHM fixation is certified at (theta, d).

    theta >= d short-circuits to 3: for theta > d no vertex can ever gain
    theta excited neighbors beyond time 0 far from the root's view, and for
    theta = d there is exactly one theta-ary subtree per vertex, which makes
    the excitation bound summable for every kappa >= 3.  Otherwise kappa is
    scanned upward, which is valid because the condition's right side is
    non-increasing in kappa.
    """
    if d < 2:
        raise ParameterError(f"d must be >= 2, got {d}")
    if refinement not in (GENERAL, THETA2, THETA3):
        raise ParameterError(f"unknown refinement {refinement!r}")
    if refinement == THETA2 and theta != 2:
        raise ParameterError("refinement theta2 requires theta=2")
    if refinement == THETA3 and theta != 3:
        raise ParameterError("refinement theta3 requires theta=3")
    if theta < 2:
        raise ParameterError(f"theta must be >= 2, got {theta}")
    if theta >= d:
        return 3
    for kappa in range(3, KAPPA_SCAN_LIMIT + 1):
        if _ghm_kappa_ok(theta, d, kappa, refinement):
            return kappa
    raise ThresholdNotFoundError(
        f"no kappa <= {KAPPA_SCAN_LIMIT} satisfies the condition at "
        f"theta={theta}, d={d}; this indicates a formula bug")


# ---------------------------------------------------------------------------
# subtree counting and excitation bounds
# ---------------------------------------------------------------------------

class SubtreeCount(NamedTuple):
    """Count of full theta-ary depth-t subtrees rooted at the root of the
    (d+1)-regular tree; `value` is exact when below 1e300, else None."""

    value: int | None
    log: float


def subtree_count(d: int, theta: int, t: int) -> SubtreeCount:
    """C(d+1, theta) * C(d, theta)^((theta^t - theta)/(theta - 1))."""
    if not (d >= theta >= 2):
        raise ParameterError(f"need d >= theta >= 2, got d={d}, theta={theta}")
    if t < 1:
        raise ParameterError(f"t must be >= 1, got {t}")
    expo = (theta**t - theta) // (theta - 1)
    log_val = (math.log(math.comb(d + 1, theta))
               + float(expo) * math.log(math.comb(d, theta)))
    if log_val <= 300.0 * math.log(10.0):
        return SubtreeCount(math.comb(d + 1, theta) * math.comb(d, theta)**expo,
                            log_val)
    return SubtreeCount(None, log_val)


def _check_desk_range(theta: int, t: int):
    if t * math.log(theta) > 700.0:
        raise ParameterError(
            f"theta^t overflows doubles at theta={theta}, t={t}")


def excitation_union_bound(d: int, theta: int, kappa: int, t: int) -> float:
    """Log of the union bound on P(root excited at time t).

    M_t (1/kappa)^(theta^t + theta^(t-1)) prod_m ((m+1)/kappa)^(theta^(t-1-m))
    with M_t the exact subtree count and m running over 1..kappa-2 restricted
    to levels t-1-m >= 0.
    """
    if not (d + 1 >= theta >= 2):
        raise ParameterError(f"need d+1 >= theta >= 2, got d={d}, theta={theta}")
    if kappa < 3:
        raise ParameterError(f"kappa must be >= 3, got {kappa}")
    if t < 1:
        raise ParameterError(f"t must be >= 1, got {t}")
    _check_desk_range(theta, t)
    if theta <= d:
        log_m = subtree_count(d, theta, t).log
    else:
        # theta = d+1: a single theta-ary subtree exists (all children).
        log_m = 0.0
    terms = [log_m,
             -(float(theta)**t + float(theta)**(t - 1)) * math.log(kappa)]
    for m in range(1, kappa - 1):
        if t - 1 - m < 0:
            break
        terms.append(float(theta)**(t - 1 - m) * (math.log(m + 1) - math.log(kappa)))
    return math.fsum(terms)


def excitation_union_bound_relaxed(d: int, theta: int, kappa: int,
                                   t: int) -> float:
    """Log of the relaxed form: C(d,theta) -> (d e/theta)^theta and the
    subtree exponent raised to theta^t/(theta-1).  Defined for t >= kappa."""
    if not (d >= theta >= 2):
        raise ParameterError(f"need d >= theta >= 2, got d={d}, theta={theta}")
    if kappa < 3:
        raise ParameterError(f"kappa must be >= 3, got {kappa}")
    if t < kappa:
        raise ParameterError(f"relaxed bound needs t >= kappa, got t={t}")
    _check_desk_range(theta, t + 1)
    tk = float(theta)**kappa
    inner = [tk / (theta - 1) * math.log(d * math.e / theta),
             -(tk - 1.0) / (theta - 1) * math.log(kappa)]
    for j in range(2, kappa):
        inner.append(float(theta)**(kappa - 1 - j) * math.log(j))
    return (math.log(math.comb(d + 1, theta))
            + float(theta)**(t - kappa + 1) * math.fsum(inner))


def ghm_tail_bound(n: int, d: int, theta: int, kappa: int) -> float:
    """2 C(d+1, theta) exp(-theta^(n-kappa+1)) clamped to [0, 1]; n >= kappa."""
    if n < kappa:
        raise ParameterError(f"bound needs n >= kappa, got n={n}, kappa={kappa}")
    if not (d >= theta >= 2):
        raise ParameterError(f"need d >= theta >= 2, got d={d}, theta={theta}")
    _check_desk_range(theta, n - kappa + 1)
    log_val = (math.log(2.0) + math.log(math.comb(d + 1, theta))
               - float(theta)**(n - kappa + 1))
    return 1.0 if log_val >= 0.0 else math.exp(log_val)


def fixation_tail_bound(n: int, d: int) -> float:
    """d^(-n) clamped to [0, 1]."""
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    if d < 2:
        raise ParameterError(f"d must be >= 2, got {d}")
    return min(1.0, math.exp(-n * math.log(d)))


class ProductBoundResult(NamedTuple):
    lhs_log: float
    passes: bool
    rhs: float


def product_bound_check(theta: int, kappa: int) -> ProductBoundResult:
    """Check [2^(theta^(kappa-3)) 3^(theta^(kappa-4)) ... (kappa-1)]^((theta-1)/(theta^kappa-1))
    <= exp((2 theta - 1) / (2 theta (theta - 1)^2)), in log space."""
    if kappa < 3:
        raise ParameterError(f"kappa must be >= 3, got {kappa}")
    if theta < 2:
        raise ParameterError(f"theta must be >= 2, got {theta}")
    x = kappa * math.log(theta)
    log_denom = x + math.log1p(-math.exp(-x)) if x <= 700 else x
    terms = []
    for j in range(2, kappa):
        w = math.exp(math.log(theta - 1.0) + (kappa - 1 - j) * math.log(theta)
                     - log_denom)
        terms.append(w * math.log(j))
    lhs_log = math.fsum(terms)
    rhs = (2.0 * theta - 1.0) / (2.0 * theta * (theta - 1.0)**2)
    return ProductBoundResult(lhs_log, lhs_log <= rhs + 1e-12, rhs)


# ---------------------------------------------------------------------------
# phase grids
# ---------------------------------------------------------------------------

@dataclass
class PhaseGrid:
    """Smallest-fixed-point values over a (d, kappa) grid at fixed theta."""

    map_id: str
    theta: int
    d_values: np.ndarray
    kappa_values: np.ndarray
    y_star: np.ndarray  # shape (len(d_values), len(kappa_values))

    def to_rows(self) -> list[list]:
        head = ["d\\kappa"] + [int(k) for k in self.kappa_values]
        rows = [head]
        for i, d in enumerate(self.d_values):
            rows.append([int(d)] + [float(v) for v in self.y_star[i]])
        return rows


def phase_grid(map_id: str, theta: int, d_values, kappa_values,
               tol: float = DEFAULT_TOL,
               max_iter: int = DEFAULT_MAX_ITER) -> PhaseGrid:
    """Evaluate kleene_fp on every (d, kappa) cell; axes sorted ascending."""
    ds = np.array(sorted(set(int(v) for v in d_values)), dtype=np.int64)
    ks = np.array(sorted(set(int(v) for v in kappa_values)), dtype=np.int64)
    if ds.size == 0 or ks.size == 0:
        raise ParameterError("phase grid ranges must be non-empty")
    out = np.empty((ds.size, ks.size), dtype=np.float64)
    for i, d in enumerate(ds):
        for j, k in enumerate(ks):
            out[i, j] = kleene_fp(map_id, int(d), theta, int(k),
                                  tol=tol, max_iter=max_iter).y_star
    return PhaseGrid(map_id=map_id, theta=theta, d_values=ds,
                     kappa_values=ks, y_star=out)


# ---------------------------------------------------------------------------
# auxiliary inequality used by the cdf-bound derivation
# ---------------------------------------------------------------------------

def sqrt_lnd_slack(d: int) -> float:
    """sqrt(ln d / d) - (1/d^2 + 1/d); the bound derivation needs this >= 0."""
    if d < 3:
        raise ParameterError(f"d must be >= 3, got {d}")
    return math.sqrt(math.log(d) / d) - (1.0 / d**2 + 1.0 / d)


def sqrt_lnd_inequality_range(d_min: int = 3, d_max: int = 10_000):
    """Report the d in [d_min, d_max] where the auxiliary inequality fails.

    Returns (holds_everywhere, failing_d_list); evaluated rather than
    assumed because the claim is not obvious at small d.
    """
    ds = np.arange(d_min, d_max + 1, dtype=np.float64)
    slack = np.sqrt(np.log(ds) / ds) - (1.0 / ds**2 + 1.0 / ds)
    bad = ds[slack < 0].astype(np.int64).tolist()
    return len(bad) == 0, bad
