"""Anytime error exponents for the binary symmetric channel with feedback.

The per-step contraction rate of posterior tails is measured by

    psi(lam) = 1 - log2((2p)**lam + (2(1-p))**lam),

a concave function of the moment order ``lam`` with psi(0) = psi(1) = 0.
Its convex conjugate ``psi_star`` enters a fixed-point equation

    beta = psi_star(beta) - 1/n

whose root is the exponential decay rate (bits per channel use) of
prefix-decoding error when a fresh source bit arrives every ``n`` uses.
All logarithms are base 2.

The moment order is restricted to (0, 1]: the tail-contraction bound that
the whole analysis rests on is only valid there, so the conjugate is taken
over that interval and the solver reports when the unconstrained maximizer
would exceed one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

#: residual tolerance for fixed-point roots
ROOT_RESIDUAL_TOL = 1e-9
#: width tolerance of the inner golden-section line search (in lambda)
LINE_SEARCH_TOL = 1e-12

_LAMBDA_LO = 1e-15
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class NoPositiveExponent(Exception):
    """The channel/budget pair admits no positive exponent under this
    analysis (psi_star(0) <= 1/n).  Typed so downstream control code can
    distinguish "bound vacuous" from "bound tiny"."""

    def __init__(self, n: int, p: float, psi_max: float):
        self.n = n
        self.p = p
        self.psi_max = psi_max
        super().__init__(
            f"no positive exponent for n={n}, p={p}: sup psi = {psi_max:.6g} <= 1/n = {1.0 / n:.6g}"
        )


@dataclass(frozen=True)
class ExponentSolution:
    """Root of the exponent fixed point, with the maximizing moment order.

    ``vacuous`` marks sign-unrestricted roots beta <= 0 produced by the
    extended solver; the plain solver never sets it.  ``lambda_clamped``
    marks solutions whose unconstrained maximizer would exceed one.
    """

    beta: float
    lambda_star: float
    residual: float
    n: int
    p: float
    vacuous: bool = False
    lambda_clamped: bool = False


@dataclass(frozen=True)
class RateBound:
    """Largest rate R > 0 with psi_star(eta * R) = (eta + 1) * R."""

    rate: float
    eta: float
    residual: float
    p: float


def psi(lam: float, p: float) -> float:
    """Tail-contraction exponent 1 - log2((2p)**lam + (2(1-p))**lam)."""
    return 1.0 - math.log2((2.0 * p) ** lam + (2.0 * (1.0 - p)) ** lam)


def psi_star(beta: float, p: float,
             tol: float = LINE_SEARCH_TOL) -> tuple[float, float]:
    """Convex conjugate sup over lam in (0, 1] of psi(lam) - lam * beta.

    The objective is concave (psi is a negated log-sum-exp of affines), so
    a golden-section search converges to the unique maximizer; returns
    ``(value, argmax)``.
    """
    a, b = _LAMBDA_LO, 1.0

    def f(lam: float) -> float:
        return psi(lam, p) - lam * beta

    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    lam = 0.5 * (a + b)
    # the supremum can sit at either boundary (lam -> 0+ for large beta)
    best = max((f(lam), lam), (f(_LAMBDA_LO), _LAMBDA_LO), (f(1.0), 1.0))
    return best


def _fixed_point_root(lo: float, hi: float, g, residual_tol: float):
    """Bisect a strictly decreasing g with g(lo) > 0 > g(hi)."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 and abs(g(0.5 * (lo + hi))) <= 0.5 * residual_tol:
            break
    return 0.5 * (lo + hi)


def solve_exponent(n: int, p: float,
                   residual_tol: float = ROOT_RESIDUAL_TOL) -> ExponentSolution:
    """Solve beta = psi_star(beta) - 1/n for beta > 0.

    Bisection on [0, psi_star(0)]; the left-hand side minus the right-hand
    side is strictly increasing (the conjugate's slope is -lambda in
    [-1, 0)), so the positive root is unique when it exists.  Raises
    NoPositiveExponent when psi_star(0) <= 1/n.
    """
    if n < 1:
        raise ValueError(f"channel budget n must be >= 1, got {n}")
    _check_p(p)
    psi_max, _ = psi_star(0.0, p)
    inv_n = 1.0 / n
    if psi_max - inv_n <= 1e-12:
        raise NoPositiveExponent(n, p, psi_max)

    def g(beta: float) -> float:
        return psi_star(beta, p)[0] - beta - inv_n

    beta = _fixed_point_root(0.0, psi_max, g, residual_tol)
    value, lam = psi_star(beta, p)
    residual = abs(beta - (value - inv_n))
    return ExponentSolution(beta, lam, residual, n, p,
                            lambda_clamped=lam >= 1.0 - 1e-9)


def solve_exponent_extended(n: int, p: float,
                            residual_tol: float = ROOT_RESIDUAL_TOL) -> ExponentSolution:
    """Sign-unrestricted root of beta = psi_star(beta) - 1/n.

    When psi_star(0) <= 1/n the fixed point sits at beta <= 0 and the
    associated error bound grows with time instead of decaying; the
    solution is flagged ``vacuous``.  Useful for overlaying the formal
    bound at parameters outside the guaranteed region.
    """
    if n < 1:
        raise ValueError(f"channel budget n must be >= 1, got {n}")
    _check_p(p)
    psi_max, _ = psi_star(0.0, p)
    inv_n = 1.0 / n

    def g(beta: float) -> float:
        return psi_star(beta, p)[0] - beta - inv_n

    # g(-1/n) = psi_star(-1/n) >= psi_max > 0, g(psi_max) < 0
    beta = _fixed_point_root(-inv_n, psi_max, g, residual_tol)
    value, lam = psi_star(beta, p)
    residual = abs(beta - (value - inv_n))
    return ExponentSolution(beta, lam, residual, n, p,
                            vacuous=beta <= 0.0,
                            lambda_clamped=lam >= 1.0 - 1e-9)


def lambda_for_budget(n: int, p: float) -> float:
    """Randomization order lambda*(n) used by the codec for budget n.

    Falls back to the sign-unrestricted fixed point when no positive
    exponent exists: that is the continuous limit of lambda*(n) as the
    guaranteed region shrinks, and the codec's tail-contraction bound is
    valid for every lambda in (0, 1] regardless.
    """
    try:
        return solve_exponent(n, p).lambda_star
    except NoPositiveExponent:
        return solve_exponent_extended(n, p).lambda_star


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    q = 1.0 - p
    return -p * math.log2(p) - q * math.log2(q)


def capacity(p: float) -> float:
    """Shannon capacity 1 - h(p) of the binary symmetric channel."""
    if not 0.0 <= p <= 0.5:
        raise ValueError(f"crossover probability {p} outside [0, 1/2]")
    return 1.0 - binary_entropy(p)


def max_log_alpha(n: int, eta: float, p: float) -> float:
    """Largest log2 plant gain stabilizable per channel use with budget n:
    min{1/n, beta(n)/eta}.  Zero when no positive exponent exists."""
    if eta < 1.0:
        raise ValueError(f"moment order eta must be >= 1, got {eta}")
    try:
        beta = solve_exponent(n, p).beta
    except NoPositiveExponent:
        return 0.0
    return min(1.0 / n, beta / eta)


def rate_bound(p: float, eta: float,
               residual_tol: float = ROOT_RESIDUAL_TOL) -> RateBound:
    """Largest R > 0 with psi_star(eta * R) = (eta + 1) * R.

    2**R is the budget-optimized lower bound on the stabilizable plant
    gain per channel use.  phi(R) = psi_star(eta R) - (eta + 1) R is
    strictly decreasing, so bisection on [0, psi_star(0)] finds the root.
    """
    _check_p(p)
    if eta < 1.0:
        raise ValueError(f"moment order eta must be >= 1, got {eta}")
    psi_max, _ = psi_star(0.0, p)
    if psi_max <= 1e-12:
        raise NoPositiveExponent(1, p, psi_max)

    def phi(r: float) -> float:
        return psi_star(eta * r, p)[0] - (eta + 1.0) * r

    r = _fixed_point_root(0.0, psi_max, phi, residual_tol)
    residual = abs(psi_star(eta * r, p)[0] - (eta + 1.0) * r)
    return RateBound(r, eta, residual, p)


def theoretical_error_curve(t: int, j: int, n: int, p: float, kappa: float) -> float:
    """Analytic overlay kappa * 2**(-beta(n) * (t - n*(j-1))) for the error
    of the first j bits after t channel uses.

    Valid from the step where bit j is committed (t >= n*(j-1), where the
    overlay equals kappa exactly).
    """
    if j < 1:
        raise ValueError(f"prefix length must be >= 1, got {j}")
    if t < n * (j - 1):
        raise ValueError(f"t={t} precedes the commitment of bit {j} (needs t >= {n * (j - 1)})")
    beta = solve_exponent(n, p).beta
    return kappa * 2.0 ** (-beta * (t - n * (j - 1)))


def exponent_table(ns, ps) -> list[dict]:
    """Rows (n, p, beta, lambda_star, residual); beta is None where no
    positive exponent exists."""
    rows = []
    for p in ps:
        for n in ns:
            try:
                sol = solve_exponent(n, p)
                rows.append({"n": n, "p": p, "beta": sol.beta,
                             "lambda_star": sol.lambda_star, "residual": sol.residual})
            except NoPositiveExponent:
                rows.append({"n": n, "p": p, "beta": None,
                             "lambda_star": None, "residual": None})
    return rows


def rate_table(ps, etas) -> list[dict]:
    """Rows (p, eta, R, residual) of the stabilizable-rate fixed point."""
    rows = []
    for eta in etas:
        for p in ps:
            rb = rate_bound(p, eta)
            rows.append({"p": p, "eta": eta, "R": rb.rate, "residual": rb.residual})
    return rows


def _check_p(p: float) -> None:
    if not 0.0 < p < 0.5:
        raise ValueError(f"crossover probability must be in (0, 1/2), got {p}")
