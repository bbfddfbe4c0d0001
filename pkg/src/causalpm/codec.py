"""Causal posterior-matching codec over a binary symmetric channel with
feedback.

Encoder and decoder are deterministic state machines around a shared
posterior: the encoder signals on which side of a median-bin edge the
message prefix lies, the channel flips the bit with probability p, and
both ends apply the same Bayesian tilt to their posteriors (feedback
makes the decoder's state available to the encoder; a shared seeded
randomization stream makes the encoder's threshold draw available to the
decoder).  Sessions are reproducible bit-for-bit from their seeds.

Thresholds sit on bin edges shared with message prefixes, so the side
comparison must be strict: a message bin whose left edge equals the
threshold lies entirely to its right and is encoded as 1.  That
convention is forced by the Bayesian update, whose left/right factors
are computed from the mass F(threshold) strictly left of the threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .dyadic import DyadicPoint
from .posterior import MedianQuery, PosteriorDensity

# spawn-key role ids for named, independently seedable randomness streams
ROLE_SOURCE = 0
ROLE_CHANNEL = 1
ROLE_COMMON = 2
ROLE_ARRIVALS = 3
ROLE_DISTURBANCE = 4
ROLE_INIT_STATE = 5


class ProtocolError(RuntimeError):
    """Encoder/decoder lockstep broken (missing branch record, no bits)."""


def named_stream(master_seed: int, role: int, trial: int = 0) -> np.random.Generator:
    """Independent PCG64 stream for (master seed, role, trial).

    Stable spawn keys make every trial reproducible regardless of worker
    scheduling, and let experiments vary one stream while freezing others.
    """
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(role, trial))
    return np.random.Generator(np.random.PCG64(ss))


# ----------------------------------------------------------------------
# channel
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelParams:
    """Binary symmetric channel with crossover probability p in (0, 1/2)."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 0.5:
            raise ValueError(f"crossover probability must be in (0, 1/2), got {self.p}")


def bsc_transmit(x: int, rng: np.random.Generator, params: ChannelParams) -> int:
    """Flip x with probability p using a dedicated seedable stream."""
    return x ^ (rng.random() < params.p)


# ----------------------------------------------------------------------
# arrival schedules
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ArrivalSchedule:
    """When source bits become available to the encoder.

    Periodic: bit i arrives at time n*(i-1) + 1.  IidBounded: inter-arrival
    times are i.i.d. on [n_min, n_max] with the given pmf; the first bit
    always arrives at time 1 and arrival times are known at both ends.
    """

    kind: str  # "periodic" | "iid_bounded"
    n: int | None = None
    pmf: tuple[tuple[int, float], ...] | None = None

    @classmethod
    def periodic(cls, n: int) -> "ArrivalSchedule":
        if n < 1:
            raise ValueError(f"period must be >= 1, got {n}")
        return cls("periodic", n=n)

    @classmethod
    def iid_bounded(cls, pmf: dict[int, float]) -> "ArrivalSchedule":
        items = tuple(sorted(pmf.items()))
        if len(items) < 2:
            raise ValueError("iid schedule needs support on at least two inter-arrival values")
        if any(n < 1 or not isinstance(n, int) for n, _ in items):
            raise ValueError("inter-arrival times must be integers >= 1")
        if any(w < 0 for _, w in items):
            raise ValueError("pmf weights must be nonnegative")
        total = math.fsum(w for _, w in items)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"pmf sums to {total}, not 1")
        return cls("iid_bounded", pmf=items)

    @property
    def n_min(self) -> int:
        return self.n if self.kind == "periodic" else self.pmf[0][0]

    @property
    def n_max(self) -> int:
        return self.n if self.kind == "periodic" else self.pmf[-1][0]

    def realize(self, horizon: int, rng: np.random.Generator | None = None) -> list[int]:
        """Arrival times T_1 = 1 < T_2 < ... <= horizon."""
        if self.kind == "periodic":
            return list(range(1, horizon + 1, self.n))
        if rng is None:
            raise ValueError("iid_bounded schedule needs an arrivals stream")
        support = np.array([n for n, _ in self.pmf])
        probs = np.array([w for _, w in self.pmf])
        probs = probs / probs.sum()
        times = [1]
        while True:
            step = int(rng.choice(support, p=probs))
            nxt = times[-1] + step
            if nxt > horizon:
                break
            times.append(nxt)
        return times


def bits_arrived(arrival_times: Sequence[int], t: int) -> int:
    """b(t): number of bits available by time t."""
    lo, hi = 0, len(arrival_times)
    while lo < hi:
        mid = (lo + hi) // 2
        if arrival_times[mid] <= t:
            lo = mid + 1
        else:
            hi = mid
    return lo


# ----------------------------------------------------------------------
# randomization between the two candidate thresholds
# ----------------------------------------------------------------------


def _h_weight(lam: float, d: float, p: float) -> float:
    c = 2.0 * (1.0 - 2.0 * p) * d
    return (1.0 - c) ** (-lam) - (1.0 + c) ** (-lam)


def _g_weight(lam: float, d: float, p: float) -> float:
    q = 1.0 - p
    c = (q - p) * d
    return p ** lam / (0.5 + c) ** (lam - 1.0) + q ** lam / (0.5 - c) ** (lam - 1.0)


def compute_randomization(d1: float, d2: float, lam: float, p: float,
                          mode: str = "h") -> tuple[float, float]:
    """Probability (pi1, pi2) of picking the left-edge vs right-edge
    threshold when the median cuts the interior of its bin.

    The normative weights are h(lam, d) = (1 - 2(1-2p)d)**-lam -
    (1 + 2(1-2p)d)**-lam, which equalize the conditional moment of the
    posterior-tail contraction across the two thresholds.  ``mode="g"``
    evaluates the alternative weight difference g(d) - g(-d) used to
    cross-check the equalization; the two do not coincide in general and
    the discrepancy is tracked by tests.
    """
    if d1 < 0 or d2 < 0:
        raise ValueError("d1 and d2 must be nonnegative")
    if d1 == 0.0 and d2 == 0.0:
        raise ValueError("d1 = d2 = 0 is the edge-deterministic mode; no randomization")
    if not 0.0 < lam <= 1.0:
        raise ValueError(f"lambda must be in (0, 1], got {lam}")
    if mode == "h":
        w1 = _h_weight(lam, d1, p)
        w2 = _h_weight(lam, d2, p)
    elif mode == "g":
        w1 = _g_weight(lam, d1, p) - _g_weight(lam, -d1, p)
        w2 = _g_weight(lam, d2, p) - _g_weight(lam, -d2, p)
    else:
        raise ValueError(f"unknown randomization mode {mode!r}")
    pi1 = w2 / (w1 + w2)
    return pi1, 1.0 - pi1


def bayes_log_factors(q: float, y: int, p: float) -> tuple[float, float]:
    """log2 multipliers applied to posterior mass left/right of a threshold
    after observing channel output y, where q is the posterior mass left
    of the threshold (the probability the encoder sent 0)."""
    pbar = 1.0 - p
    if y == 1:
        denom = p * q + pbar * (1.0 - q)
        return math.log2(p) - math.log2(denom), math.log2(pbar) - math.log2(denom)
    denom = pbar * q + p * (1.0 - q)
    return math.log2(pbar) - math.log2(denom), math.log2(p) - math.log2(denom)


# ----------------------------------------------------------------------
# encoder / decoder state machines
# ----------------------------------------------------------------------


@dataclass
class CodecState:
    """One side's view of a session: posterior plus its bit knowledge
    (source bits on the encoder, running estimates on the decoder)."""

    posterior: PosteriorDensity
    lam: float
    params: ChannelParams
    bits_value: int = 0
    bits_count: int = 0
    t: int = 0
    _pending: tuple | None = None  # (branch, mq, threshold) awaiting feedback

    @classmethod
    def fresh(cls, lam: float, params: ChannelParams,
              prune_below: float | None = None) -> "CodecState":
        return cls(PosteriorDensity.new_uniform(prune_below), lam, params)


@dataclass(frozen=True)
class BranchRecord:
    """Outcome of the shared threshold randomization for one channel use."""

    branch: str  # "edge" | "1" | "2"
    pi1: float | None
    d1: float
    d2: float
    k_median: int


def _select_branch(mq: MedianQuery, lam: float, p: float,
                   common_rng: np.random.Generator | None,
                   forced: str | None = None) -> tuple[BranchRecord, int, float]:
    """Pick the threshold for this use and the left-mass q = F(threshold).

    When the median sits on the bin edge the threshold is that edge and q
    is exactly one half, so the tilt reduces to the classic 2p / 2(1-p)
    median update; otherwise a shared Bernoulli(pi1) draw selects the left
    or right edge of the median bin.  Returns (record, threshold, q).
    """
    k = mq.bin_index
    if forced is not None and (forced == "edge") != mq.at_left_edge:
        raise ProtocolError(
            f"branch record {forced!r} inconsistent with the local median query "
            f"(at_left_edge={mq.at_left_edge}); states have diverged"
        )
    if mq.at_left_edge:
        return BranchRecord("edge", None, mq.d1, mq.d2, k), k, 0.5
    pi1, _ = compute_randomization(mq.d1, mq.d2, lam, p)
    if forced is None:
        if common_rng is None:
            raise ProtocolError("branch record missing and no shared randomization stream")
        branch = "1" if common_rng.random() < pi1 else "2"
    else:
        branch = forced
    if branch == "1":
        return BranchRecord("1", pi1, mq.d1, mq.d2, k), k, 0.5 - mq.d1
    return BranchRecord("2", pi1, mq.d1, mq.d2, k), k + 1, 0.5 + mq.d2


def encoder_step(state: CodecState, fresh_bits: Iterable[int],
                 common_rng: np.random.Generator) -> tuple[int, BranchRecord]:
    """Advance the encoder by one channel use.

    Splits the posterior once per freshly arrived bit, locates the median
    bin at the new resolution, draws the threshold branch from the shared
    stream, and emits 1 exactly when the message prefix value is at or
    right of the threshold.  The Bayesian tilt happens in
    ``encoder_absorb`` once the channel output is known via feedback.
    """
    for bit in fresh_bits:
        if bit not in (0, 1):
            raise ValueError(f"source bit must be 0 or 1, got {bit}")
        state.posterior.split()
        state.bits_value = (state.bits_value << 1) | bit
        state.bits_count += 1
    b = state.posterior.resolution
    if b == 0:
        raise ProtocolError("no source bits have arrived; nothing to encode")
    mq = state.posterior.median_bin(b)
    record, threshold, q = _select_branch(mq, state.lam, state.params.p, common_rng)
    x = 1 if state.bits_value >= threshold else 0
    state._pending = (record, threshold, q)
    return x, record


def encoder_absorb(state: CodecState, y: int) -> None:
    """Apply the feedback-driven Bayesian tilt for the pending use."""
    if state._pending is None:
        raise ProtocolError("encoder_absorb called with no pending channel use")
    record, threshold, q = state._pending
    lf, rf = bayes_log_factors(q, y, state.params.p)
    state.posterior._tilt_scaled(threshold, lf, rf, validate=False)
    state._pending = None
    state.t += 1


def decoder_step(state: CodecState, y: int, record: BranchRecord | None,
                 fresh_splits: int = 0,
                 mq: MedianQuery | None = None) -> tuple[int, int]:
    """Advance the decoder by one channel use and return (k_hat, b).

    The decoder replays the encoder's splits (arrival times are known at
    both ends), re-derives the median query from its own posterior, reads
    the shared branch draw from ``record``, tilts, and estimates the
    available bits as the binary expansion of the median bin index at the
    current resolution.
    """
    if record is None:
        raise ProtocolError("branch record missing; decoder cannot resolve the threshold")
    for _ in range(fresh_splits):
        state.posterior.split()
    b = state.posterior.resolution
    if mq is None:
        mq = state.posterior.median_bin(b)
    _, threshold, q = _select_branch(mq, state.lam, state.params.p, None,
                                     forced=record.branch)
    lf, rf = bayes_log_factors(q, y, state.params.p)
    state.posterior._tilt_scaled(threshold, lf, rf, validate=False)
    k_hat = state.posterior.median_bin(b).bin_index
    state.bits_value = k_hat
    state.bits_count = b
    state.t += 1
    return k_hat, b


def estimates_bits(k_hat: int, b: int) -> str:
    """Binary expansion of the median bin index, left-padded to b bits."""
    return format(k_hat, f"0{b}b") if b else ""


def first_wrong_prefix(k_hat: int, bits_value: int, b: int) -> int:
    """Index (1-based) of the first estimated bit that differs from the
    source prefix; 0 when the full prefix is correct."""
    diff = k_hat ^ bits_value
    if diff == 0:
        return 0
    return b - diff.bit_length() + 1


# ----------------------------------------------------------------------
# sessions and transcripts
# ----------------------------------------------------------------------


@dataclass
class StepRecord:
    t: int
    b: int
    x: int
    y: int
    branch: str
    d1: float
    d2: float
    pi1: float | None
    k_median: int
    estimates: str
    first_wrong: int
    left_log_factor: float
    right_log_factor: float

    def prefix_error_flags(self) -> list[bool]:
        return [self.first_wrong != 0 and self.first_wrong <= j
                for j in range(1, self.b + 1)]


@dataclass
class Transcript:
    """Replayable record of a full coding session."""

    p: float
    lam: float
    arrival_times: list[int]
    source_bits: list[int]
    steps: list[StepRecord] = field(default_factory=list)

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            header = {
                "p": self.p,
                "lam": self.lam,
                "arrival_times": self.arrival_times,
                "source_bits": self.source_bits,
            }
            fh.write(json.dumps(header) + "\n")
            for s in self.steps:
                rec = {
                    "t": s.t, "b": s.b, "x": s.x, "y": s.y, "branch": s.branch,
                    "d1": s.d1, "d2": s.d2, "pi1": s.pi1, "k_median": s.k_median,
                    "estimates": s.estimates,
                    "prefix_error_flags": s.prefix_error_flags(),
                    "left_log_factor": s.left_log_factor,
                    "right_log_factor": s.right_log_factor,
                }
                fh.write(json.dumps(rec) + "\n")

    @classmethod
    def from_jsonl(cls, path) -> "Transcript":
        with open(path) as fh:
            header = json.loads(fh.readline())
            tr = cls(header["p"], header["lam"], list(header["arrival_times"]),
                     list(header["source_bits"]))
            for line in fh:
                rec = json.loads(line)
                flags = rec["prefix_error_flags"]
                first_wrong = 0
                for j, bad in enumerate(flags, start=1):
                    if bad:
                        first_wrong = j
                        break
                tr.steps.append(StepRecord(
                    rec["t"], rec["b"], rec["x"], rec["y"], rec["branch"],
                    rec["d1"], rec["d2"], rec["pi1"], rec["k_median"],
                    rec["estimates"], first_wrong,
                    rec["left_log_factor"], rec["right_log_factor"],
                ))
        return tr


def make_source(source, master_seed: int | None = None, trial: int = 0) -> Callable[[int], int]:
    """Normalize the three accepted source forms to a 1-based bit callable."""
    if callable(source):
        return source
    if isinstance(source, (int, np.integer)):
        rng = named_stream(int(source), ROLE_SOURCE, trial)
        return lambda i: int(rng.integers(0, 2))
    seq = list(source)
    return lambda i: seq[i - 1]


class CodecSession:
    """Drives an encoder/decoder pair through a noisy session.

    ``dual_state=True`` keeps two genuinely separate posteriors and checks
    them for bit-exact equality after every use; ``dual_state=False``
    shares one posterior between the two ends (they are equal by
    construction) for Monte Carlo throughput.
    """

    def __init__(self, params: ChannelParams, arrival_times: Sequence[int],
                 lam: float, *, source, channel_rng: np.random.Generator,
                 common_rng: np.random.Generator, dual_state: bool = True,
                 check_each_step: bool = True,
                 prune_below: float | None = None,
                 probe_points: Sequence[DyadicPoint] = ()):
        if not arrival_times or arrival_times[0] != 1:
            raise ValueError("arrival times must start at T_1 = 1")
        self.params = params
        self.arrival_times = list(arrival_times)
        self.lam = lam
        self.source = make_source(source)
        self.channel_rng = channel_rng
        self.common_rng = common_rng
        self.dual_state = dual_state
        self.check_each_step = check_each_step
        self.enc = CodecState.fresh(lam, params, prune_below)
        self.dec = CodecState.fresh(lam, params, prune_below) if dual_state else self.enc
        self.t = 0
        self._next_arrival = 0
        self.source_bits: list[int] = []
        self.last_estimate = (0, 0)
        self.probe_points = list(probe_points)
        self.probe_log: list[tuple[int, list[float]]] = []
        self.max_norm_drift = 0.0
        if self.probe_points:
            self._record_probes()

    # -- internals ----------------------------------------------------

    def _fresh_bits(self, t: int) -> list[int]:
        bits = []
        while (self._next_arrival < len(self.arrival_times)
               and self.arrival_times[self._next_arrival] == t):
            bit = int(self.source(self._next_arrival + 1))
            bits.append(bit)
            self.source_bits.append(bit)
            self._next_arrival += 1
        return bits

    def _record_probes(self):
        post = self.dec.posterior
        vals = [post.log_tail(pt) for pt in self.probe_points]
        self.probe_log.append((self.t, vals))

    # -- stepping -----------------------------------------------------

    def step(self, record: bool = True) -> StepRecord | tuple[int, int, int]:
        """One channel use; returns a StepRecord, or (t, b, first_wrong)
        when record=False."""
        t = self.t + 1
        fresh = self._fresh_bits(t)
        x, rec = encoder_step(self.enc, fresh, self.common_rng)
        y = bsc_transmit(x, self.channel_rng, self.params)
        _, threshold, q = self.enc._pending
        if self.dual_state:
            k_hat, b = decoder_step(self.dec, y, rec, fresh_splits=len(fresh))
            encoder_absorb(self.enc, y)
            if self.check_each_step:
                if not self.enc.posterior.state_equal(self.dec.posterior):
                    raise ProtocolError(f"encoder/decoder posteriors diverged at t={t}")
        else:
            # shared posterior: tilt once, estimate from the same object,
            # and never touch the encoder's source-bit fields
            lf, rf = bayes_log_factors(q, y, self.params.p)
            post = self.enc.posterior
            post._tilt_scaled(threshold, lf, rf, validate=False)
            b = post.resolution
            k_hat = post.median_bin(b).bin_index
            self.enc._pending = None
            self.enc.t += 1
        if self.check_each_step:
            drift = abs(self.dec.posterior.total_log_mass())
            if drift > self.max_norm_drift:
                self.max_norm_drift = drift
            self.dec.posterior.check_normalized()
        self.t = t
        self.last_estimate = (k_hat, b)
        if self.probe_points:
            self._record_probes()
        fw = first_wrong_prefix(k_hat, self.enc.bits_value, b)
        if not record:
            return t, b, fw
        lf, rf = bayes_log_factors(q, y, self.params.p)
        return StepRecord(t, b, x, y, rec.branch, rec.d1, rec.d2, rec.pi1,
                          rec.k_median, estimates_bits(k_hat, b), fw, lf, rf)

    def run(self, horizon: int) -> Transcript:
        tr = Transcript(self.params.p, self.lam, self.arrival_times, [])
        for _ in range(horizon):
            tr.steps.append(self.step())
        tr.source_bits = list(self.source_bits)
        return tr


def run_session(params: ChannelParams, schedule: ArrivalSchedule, horizon: int,
                *, lam: float | None = None, source=None, master_seed: int = 0,
                trial: int = 0, dual_state: bool = True,
                check_each_step: bool = True,
                probe_points: Sequence[DyadicPoint] = ()) -> tuple[Transcript, CodecSession]:
    """Run one fully seeded session and return its transcript.

    Randomness is split into named streams (source, channel, shared
    randomization, arrivals) derived from (master_seed, trial) so that
    experiments can vary one stream while freezing the others.  ``lam``
    defaults to the budget-matched randomization order for periodic
    schedules; callers pick the regime explicitly for random arrivals.
    """
    from .exponents import lambda_for_budget

    if lam is None:
        if schedule.kind != "periodic":
            raise ValueError("lam must be given explicitly for non-periodic schedules")
        lam = lambda_for_budget(schedule.n, params.p)
    arrivals_rng = named_stream(master_seed, ROLE_ARRIVALS, trial)
    times = schedule.realize(horizon, arrivals_rng)
    if source is None:
        source = make_source(master_seed, trial=trial)
    elif isinstance(source, (int, np.integer)):
        source = make_source(int(source), trial=trial)
    session = CodecSession(
        params, times, lam, source=source,
        channel_rng=named_stream(master_seed, ROLE_CHANNEL, trial),
        common_rng=named_stream(master_seed, ROLE_COMMON, trial),
        dual_state=dual_state, check_each_step=check_each_step,
        probe_points=probe_points,
    )
    return session.run(horizon), session


def replay_decoder(transcript: Transcript) -> list[str]:
    """Re-derive every estimate from (arrival times, y, branch) alone and
    check them against the recorded ones; bit-exactness is part of the
    transcript format contract.  Returns the replayed estimates."""
    params = ChannelParams(transcript.p)
    dec = CodecState.fresh(transcript.lam, params)
    idx = 0
    out = []
    for s in transcript.steps:
        splits = 0
        while idx < len(transcript.arrival_times) and transcript.arrival_times[idx] == s.t:
            splits += 1
            idx += 1
        rec = BranchRecord(s.branch, s.pi1, s.d1, s.d2, s.k_median)
        k_hat, b = decoder_step(dec, s.y, rec, fresh_splits=splits)
        est = estimates_bits(k_hat, b)
        if est != s.estimates:
            raise ProtocolError(f"replay diverged at t={s.t}: {est} != {s.estimates}")
        out.append(est)
    return out
