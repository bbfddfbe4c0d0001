"""Closed-loop stabilization of an unstable scalar plant over the noisy
channel, using the causal posterior-matching codec as the sensor link.

Plant: Z[m+1] = alpha * Z[m] + W[m] + U[m], |Z0| <= Delta, |W| bounded.
The sensor quantizes to one bit per plant step (n channel uses each): it
tracks the uncontrolled coordinate sigma[m] = Z[m]/alpha^m minus the
control contribution, which stays inside [-Gamma, Gamma] with
Gamma = Delta + W/(alpha-1), maps it to a message point
phi = (sigma + Gamma) / (2 Gamma) in [0, 1), and streams phi's binary
digits causally (digit m+1 is committed at epoch m from the current phi;
with no disturbance phi is a fixed point and the digits are exact).  The
controller inverts the map at the decoded prefix midpoint and applies
U = -alpha * Zhat.

Numerics: the closed loop contracts Z toward zero while the bookkeeping
coordinates grow like alpha^m, so a naive float recursion explodes from
cancellation after ~60 steps.  The simulation therefore tracks sigma, phi
and the estimate gap in arbitrary-precision floats (horizon-dependent
precision) and reconstructs Z, Zhat, U from the identity
Z[m+1] = alpha * (Z[m] - Zhat[m]) + W[m]; a direct-recursion oracle at
the same precision is kept under test for short horizons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .codec import (
    ROLE_CHANNEL,
    ROLE_COMMON,
    ROLE_DISTURBANCE,
    ROLE_INIT_STATE,
    ArrivalSchedule,
    ChannelParams,
    CodecSession,
    named_stream,
)
from .exponents import capacity, lambda_for_budget, rate_bound
from .posterior import CONTROL_PRUNE_LOG2

#: default stability judgment: sup |Z| must stay below ceiling_factor * Delta
#: and the second-half eta-moment mean below growth_factor times the first.
DEFAULT_CEILING_FACTOR = 1e3
DEFAULT_GROWTH_FACTOR = 1.5

_FLOAT_MAX = float(np.finfo(np.float64).max)


class ModelViolation(RuntimeError):
    """Plant state left the bounds the quantizer was built for."""


@dataclass(frozen=True)
class PlantParams:
    """Unstable scalar plant with bounded initial state and disturbance.

    ``disturbance`` draws one W-bounded sample per plant step: the default
    is uniform on [-W, W]; any callable ``rng -> float`` taking values in
    [-W, W] can be plugged in.
    """

    alpha: float
    Delta: float
    W: float = 0.0
    eta: float = 2.0
    disturbance: object = "uniform"

    def __post_init__(self):
        if self.alpha <= 1.0:
            raise ValueError(f"open-loop gain must exceed 1, got {self.alpha}")
        if self.Delta <= 0.0:
            raise ValueError(f"initial-state bound must be positive, got {self.Delta}")
        if self.W < 0.0:
            raise ValueError(f"disturbance bound must be nonnegative, got {self.W}")
        if self.eta < 1.0:
            raise ValueError(f"moment order must be >= 1, got {self.eta}")
        if self.disturbance != "uniform" and not callable(self.disturbance):
            raise ValueError("disturbance must be 'uniform' or a callable(rng) -> float")

    def draw_disturbance(self, rng) -> float:
        if self.W == 0.0:
            return 0.0
        if self.disturbance == "uniform":
            val = self.W * (2.0 * float(rng.random()) - 1.0)
        else:
            val = float(self.disturbance(rng))
        if abs(val) > self.W:
            raise ValueError(f"disturbance sample {val} breaks the bound {self.W}")
        return val

    @property
    def gamma(self) -> float:
        return self.Delta + (self.W / (self.alpha - 1.0) if self.W else 0.0)


@dataclass
class ControlTrajectory:
    """Per-step plant/controller history with stability statistics."""

    alpha: float
    p: float
    n: int
    z: np.ndarray            # length horizon + 1
    z_hat: np.ndarray        # length horizon
    u: np.ndarray            # length horizon
    prefix_len: np.ndarray
    prefix_ok: np.ndarray
    phi_gap_log2: np.ndarray  # log2 |phi - decoded midpoint| per step
    k_hat: list = field(default_factory=list)  # decoded bin indices (big ints)
    w: np.ndarray | None = None
    seeds: tuple = ()
    extras: dict = field(default_factory=dict)

    @property
    def sup_abs_z(self) -> float:
        return float(np.max(np.abs(self.z)))

    def moment_ratio(self, eta: float) -> float:
        """Second-half mean of |Z|^eta over the first-half mean."""
        m = np.abs(self.z[:-1]) ** eta
        half = len(m) // 2
        first, second = float(np.mean(m[:half])), float(np.mean(m[half:]))
        if first == 0.0:
            return 1.0 if second == 0.0 else math.inf
        return second / first

    def is_stable(self, eta: float, delta: float,
                  ceiling_factor: float = DEFAULT_CEILING_FACTOR,
                  growth_factor: float = DEFAULT_GROWTH_FACTOR) -> bool:
        return (self.sup_abs_z <= ceiling_factor * delta
                and self.moment_ratio(eta) <= growth_factor)


# ----------------------------------------------------------------------
# observer / controller primitives
# ----------------------------------------------------------------------


def message_point(sigma, gamma):
    """Map the normalized uncontrolled coordinate into the unit interval."""
    return (sigma + gamma) / (2 * gamma)


def binary_digit(phi, i: int) -> int:
    """i-th binary digit (1-based) of phi in [0, 1)."""
    return int(mpmath.floor(mpmath.ldexp(phi, i))) & 1


def prefix_midpoint(k_hat: int, j: int):
    """Midpoint value of the decoded length-j prefix bin, exact dyadic."""
    return mpmath.ldexp(mpmath.mpf(2 * k_hat + 1), -(j + 1))


def controller_step(k_hat: int, j: int, epoch: int, alpha: float, gamma: float,
                    control_sum: float) -> tuple[float, float]:
    """Plain-float controller: invert the observer map at the decoded
    prefix midpoint, translate by the accumulated control contribution,
    and apply U = -alpha * Zhat.

    ``control_sum`` is G[m] = sum alpha^(m-1-k) U[k]; with nothing decoded
    (j = 0) the estimate is the uninformed prior midpoint, i.e. zero in
    plant coordinates.  Suitable for short horizons and API tests; long
    simulations use the cancellation-free path in simulate_closed_loop.
    """
    if j == 0:
        return 0.0, 0.0
    phi_hat = (k_hat + 0.5) / (1 << j)
    z_hat = (alpha ** epoch) * (2.0 * gamma * phi_hat - gamma) + control_sum
    return z_hat, -alpha * z_hat


# ----------------------------------------------------------------------
# closed loop
# ----------------------------------------------------------------------


def simulate_closed_loop(plant: PlantParams, p: float, n: int, horizon: int,
                         master_seed: int, trial: int = 0, *,
                         lam: float | None = None,
                         z0: float | None = None,
                         corrupt: tuple[int, int] | None = None,
                         extra_precision: int = 160) -> ControlTrajectory:
    """Run the plant for ``horizon`` steps with n channel uses per step.

    One source bit is conveyed per plant step; lam defaults to the
    budget-matched randomization order.  The W = 0 guarantee regime needs
    log2(alpha) <= 1/n; larger gains are legal (stability sweeps probe
    them) but carry no guarantee.  ``corrupt=(step, depth)`` flips the
    decoded bit at that depth for exactly one step, for error-injection
    studies.  Deterministic given (master_seed, trial).
    """
    params = ChannelParams(p)
    if lam is None:
        lam = lambda_for_budget(n, p)
    gamma_f = plant.gamma
    # the estimate gap at step m cancels the top ~m bits of phi, so the
    # working precision must cover the horizon plus guard bits
    prec = horizon + extra_precision

    with mpmath.workprec(prec):
        alpha = mpmath.mpf(plant.alpha)
        gamma = mpmath.mpf(plant.Delta) + (mpmath.mpf(plant.W) / (alpha - 1)
                                           if plant.W else mpmath.mpf(0))
        init_rng = named_stream(master_seed, ROLE_INIT_STATE, trial)
        if z0 is None:
            depth = horizon + 64
            u_int = 0
            for _ in range(depth // 32 + 1):
                u_int = (u_int << 32) | int(init_rng.integers(0, 1 << 32))
            u_int &= (1 << depth) - 1
            z_val = mpmath.mpf(plant.Delta) * (mpmath.ldexp(mpmath.mpf(u_int), 1 - depth) - 1)
        else:
            z_val = mpmath.mpf(z0)

        dist_rng = named_stream(master_seed, ROLE_DISTURBANCE, trial)

        # observer state: current message point, updated before each epoch
        phi_holder = [mpmath.mpf(0)]

        def source_bit(i: int) -> int:
            return binary_digit(phi_holder[0], i)

        arrival_times = ArrivalSchedule.periodic(n).realize(n * horizon)
        # long sessions shed dead tail segments aggressively: merged mass
        # below 2**-300 is invisible to every decoded quantity
        session = CodecSession(
            params, arrival_times, lam,
            source=source_bit,
            channel_rng=named_stream(master_seed, ROLE_CHANNEL, trial),
            common_rng=named_stream(master_seed, ROLE_COMMON, trial),
            dual_state=False, check_each_step=False, prune_below=CONTROL_PRUNE_LOG2,
        )

        z_rec = np.empty(horizon + 1)
        zhat_rec = np.empty(horizon)
        u_rec = np.empty(horizon)
        plen = np.empty(horizon, dtype=np.int64)
        pok = np.empty(horizon, dtype=bool)
        gap_log2 = np.empty(horizon)
        w_rec = np.zeros(horizon)
        k_hats: list[int] = []

        def clamp(v) -> float:
            x = float(v)
            if math.isinf(x):
                return math.copysign(_FLOAT_MAX, x)
            return x

        sigma = z_val  # sigma[0] = Z[0]
        z = z_val
        alpha_pow = mpmath.mpf(1)  # alpha**m
        z_rec[0] = clamp(z)

        tiny = mpmath.ldexp(mpmath.mpf(1), -(prec // 2))
        for m in range(horizon):
            phi = message_point(sigma, gamma)
            if phi < 0 or phi >= 1:
                # allow rounding dust at the representation precision;
                # anything more means the bounded-state model was breached
                if -tiny < phi < 0:
                    phi = mpmath.mpf(0)
                elif 1 <= phi < 1 + tiny:
                    phi = 1 - tiny
                else:
                    raise ModelViolation(
                        f"message point {float(phi):.6g} outside [0, 1) at step {m}"
                    )
            phi_holder[0] = phi

            for _ in range(n):
                session.step(record=False)
            k_hat, j = session.last_estimate
            if corrupt is not None and corrupt[0] == m:
                depth_j = corrupt[1]
                if 1 <= depth_j <= j:
                    k_hat ^= 1 << (j - depth_j)

            phi_hat = prefix_midpoint(k_hat, j)
            delta_phi = phi - phi_hat
            e = 2 * gamma * alpha_pow * delta_phi      # Z[m] - Zhat[m]
            z_hat = z - e

            w = mpmath.mpf(plant.draw_disturbance(dist_rng)) if plant.W else mpmath.mpf(0)

            z_next = alpha * e + w                      # = alpha z + w + u
            alpha_pow_next = alpha_pow * alpha
            sigma = sigma + w / alpha_pow_next

            zhat_rec[m] = clamp(z_hat)
            u_rec[m] = -plant.alpha * zhat_rec[m]  # recorded law, float-exact
            plen[m] = j
            pok[m] = k_hat == session.enc.bits_value
            k_hats.append(k_hat)
            w_rec[m] = clamp(w)
            ad = abs(delta_phi)
            gap_log2[m] = float(mpmath.log(ad, 2)) if ad > 0 else -math.inf
            z = z_next
            alpha_pow = alpha_pow_next
            z_rec[m + 1] = clamp(z)

    return ControlTrajectory(plant.alpha, p, n, z_rec, zhat_rec, u_rec,
                             plen, pok, gap_log2, k_hat=k_hats, w=w_rec,
                             seeds=(master_seed, trial),
                             extras={"lam": lam, "gamma": gamma_f})


# ----------------------------------------------------------------------
# stability frontier sweep
# ----------------------------------------------------------------------


def stability_sweep(alphas, ps, ns, eta: float, trials: int, horizon: int,
                    master_seed: int, *, Delta: float = 1.0, W: float = 0.0,
                    ceiling_factor: float = DEFAULT_CEILING_FACTOR,
                    growth_factor: float = DEFAULT_GROWTH_FACTOR) -> dict:
    """Judge empirical stabilizability on a grid and locate the frontier.

    A configuration is stable when every trial keeps sup |Z| under
    ceiling_factor * Delta and its second-half eta-moment under
    growth_factor times the first half.  The frontier for each p is the
    largest stable grid alpha over any budget in ``ns``, reported next to
    the analytic per-channel-use curve 2**R(p) and capacity 2**C(p).
    """
    rows = []
    frontier = {}
    for p in ps:
        best_alpha = None
        for alpha in alphas:
            plant = PlantParams(alpha=alpha, Delta=Delta, W=W, eta=eta)
            for n in ns:
                stable = True
                worst_sup = 0.0
                worst_ratio = 0.0
                for trial in range(trials):
                    traj = simulate_closed_loop(plant, p, n, horizon,
                                                master_seed, trial)
                    worst_sup = max(worst_sup, traj.sup_abs_z)
                    worst_ratio = max(worst_ratio, traj.moment_ratio(eta))
                    if not traj.is_stable(eta, Delta, ceiling_factor, growth_factor):
                        stable = False
                        break
                rows.append({
                    "alpha": alpha, "p": p, "n": n, "stable": stable,
                    "sup_abs_z": worst_sup, "moment_ratio": worst_ratio,
                    "trials": trials,
                })
                if stable:
                    if best_alpha is None or alpha > best_alpha:
                        best_alpha = alpha
                    break
        frontier[p] = {
            "p": p,
            "alpha_empirical": best_alpha if best_alpha is not None else 1.0,
            "alpha_analytic": 2.0 ** rate_bound(p, eta).rate,
            "alpha_capacity": 2.0 ** capacity(p),
        }
    return {"rows": rows, "frontier": [frontier[p] for p in ps]}
