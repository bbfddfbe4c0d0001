"""Piecewise-constant posterior over [0, 1) with exact dyadic breakpoints.

The posterior of the message point is piecewise constant between dyadic
breakpoints.  Only breakpoints that were actually used as thresholds are
stored (a compressed representation); refining the bin grid when a new
source bit arrives splits a constant-density bin into two halves of equal
mass, which leaves the stored breakpoints and masses untouched and is
therefore a pure resolution bump.

Segment masses are kept in the log2 domain: tail masses decay like
``2**-c*t`` and underflow linear doubles within a few hundred channel
uses.  Breakpoint positions are exact integers scaled to the current
resolution, so all edge comparisons are exact.
"""

from __future__ import annotations

import json
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicPoint

LOG_ZERO = float("-inf")

#: |F - 1/2| below this (linear domain) counts as "median sits on a bin edge".
MEDIAN_TIE_TOL = 1e-12

#: Tolerance on the total-mass and tilt-factor normalization contracts.
NORMALIZATION_TOL = 1e-9

#: Opt-in threshold for merging dead-tail segments (log2 mass).  The induced
#: CDF error is bounded by the merged mass, which is invisible to median
#: queries and decoding, but it destroys the *relative* accuracy of tail
#: statistics below the threshold -- typical log-tails fall by about
#: |log2(2p)| bits per use, so only sessions that never read deep tails
#: (e.g. long control runs) should prune.  Default: keep everything exact.
CONTROL_PRUNE_LOG2 = -300.0


class DomainError(ValueError):
    """Query point outside [0, 1]."""


class ResolutionError(ValueError):
    """Requested resolution or threshold is finer than the current grid."""


class NormalizationError(ValueError):
    """Masses or tilt factors violate the probability-one contract."""


@dataclass(frozen=True)
class MedianQuery:
    """Location of the posterior median on the resolution-``2**-i`` grid.

    ``bin_index`` is the bin containing the median; when the median falls
    exactly on a grid point (within MEDIAN_TIE_TOL) it is assigned to the
    bin on the right and ``at_left_edge`` is set.  ``d1``/``d2`` are the
    probability mass between the median and the bin's left/right edge.
    """

    bin_index: int
    at_left_edge: bool
    d1: float
    d2: float
    resolution: int


def _logsumexp2(arr: np.ndarray) -> float:
    if arr.size == 0:
        return LOG_ZERO
    m = float(np.max(arr))
    if m == LOG_ZERO:
        return LOG_ZERO
    return m + math.log2(float(np.sum(np.exp2(arr - m))))


def _logadd2(a: float, b: float) -> float:
    if a == LOG_ZERO:
        return b
    if b == LOG_ZERO:
        return a
    m = a if a > b else b
    return m + math.log2(2.0 ** (a - m) + 2.0 ** (b - m))


def _log2_ratio(num: int, den: int) -> float:
    """log2(num/den) for positive big integers without float overflow."""
    if num == 0:
        return LOG_ZERO
    return math.log2(num) - math.log2(den)


class PosteriorDensity:
    """Mutable piecewise-constant distribution shared by encoder and decoder.

    Single-writer: a density belongs to exactly one coding session.  All
    mutating operations preserve total probability one up to
    NORMALIZATION_TOL and never place a breakpoint strictly inside a bin
    of the current resolution.
    """

    __slots__ = ("resolution", "_edges", "_logmass", "prune_below")

    def __init__(self, resolution: int, edges: list[int], logmass: np.ndarray,
                 prune_below: float | None = None):
        self.resolution = resolution
        self._edges = edges
        self._logmass = logmass
        self.prune_below = prune_below

    @classmethod
    def new_uniform(cls, prune_below: float | None = None) -> "PosteriorDensity":
        """Uniform prior on [0, 1): one segment of mass one, resolution 0."""
        return cls(0, [0, 1], np.zeros(1), prune_below)

    # ------------------------------------------------------------------
    # introspection
    # ------------------------------------------------------------------

    @property
    def segment_count(self) -> int:
        return len(self._logmass)

    def breakpoints(self) -> list[DyadicPoint]:
        return [DyadicPoint(e, self.resolution) for e in self._edges]

    def log_masses(self) -> np.ndarray:
        return self._logmass.copy()

    def total_log_mass(self) -> float:
        return _logsumexp2(self._logmass)

    def check_normalized(self, tol: float = NORMALIZATION_TOL) -> float:
        total = self.total_log_mass()
        if abs(total) > tol:
            raise NormalizationError(f"total log2 mass {total} exceeds tolerance {tol}")
        return total

    def state_equal(self, other: "PosteriorDensity") -> bool:
        """Bit-exact structural equality (same edges, same log masses)."""
        return (
            self.resolution == other.resolution
            and self._edges == other._edges
            and np.array_equal(self._logmass, other._logmass)
        )

    def copy(self) -> "PosteriorDensity":
        return PosteriorDensity(self.resolution, list(self._edges),
                                self._logmass.copy(), self.prune_below)

    # ------------------------------------------------------------------
    # grid refinement
    # ------------------------------------------------------------------

    def split(self) -> "PosteriorDensity":
        """Halve every current-resolution bin, sharing its mass equally.

        Density is constant inside each bin, so equal-mass halving changes
        neither the stored breakpoints nor the CDF at any dyadic point;
        only the resolution (and the scale of the edge integers) moves.
        Returns self for chaining.
        """
        self.resolution += 1
        self._edges = [e << 1 for e in self._edges]
        return self

    # ------------------------------------------------------------------
    # CDF queries
    # ------------------------------------------------------------------

    def _query_pos(self, x: DyadicPoint) -> tuple[int, int]:
        """Scaled position and shift for a query point.

        Points finer than the current resolution are legal for CDF queries
        (the density is constant inside current bins); the shift scales the
        stored edges up to the query level on the fly.
        """
        shift = max(0, x.level - self.resolution)
        return x.scaled(self.resolution + shift), shift

    def _locate(self, xs: int, shift: int = 0) -> int:
        """Index j of the segment with edges[j] << shift <= xs."""
        return bisect_right(self._edges, xs >> shift) - 1 if shift else \
            bisect_right(self._edges, xs) - 1

    def _log_cdf_scaled(self, xs: int, shift: int = 0) -> float:
        full = 1 << (self.resolution + shift)
        if xs <= 0:
            return LOG_ZERO
        if xs >= full:
            return 0.0
        j = self._locate(xs, shift)
        prefix = self._logmass[:j]
        a, b = self._edges[j] << shift, self._edges[j + 1] << shift
        if a == xs:
            return _logsumexp2(prefix)
        partial = self._logmass[j] + _log2_ratio(xs - a, b - a)
        if j == 0:
            return partial
        return _logadd2(_logsumexp2(prefix), partial)

    def _log_ccdf_scaled(self, xs: int, shift: int = 0) -> float:
        full = 1 << (self.resolution + shift)
        if xs >= full:
            return LOG_ZERO
        if xs <= 0:
            return 0.0
        j = self._locate(xs, shift)
        a, b = self._edges[j] << shift, self._edges[j + 1] << shift
        if a == xs:
            return _logsumexp2(self._logmass[j:])
        partial = self._logmass[j] + _log2_ratio(b - xs, b - a)
        if j + 1 == len(self._logmass):
            return partial
        return _logadd2(_logsumexp2(self._logmass[j + 1:]), partial)

    def log_cdf(self, x: DyadicPoint) -> float:
        """log2 of the posterior CDF at a dyadic point; -inf at zero."""
        if x < DyadicPoint.zero() or x > DyadicPoint.one():
            raise DomainError(f"{x} outside [0, 1]")
        return self._log_cdf_scaled(*self._query_pos(x))

    def log_ccdf(self, x: DyadicPoint) -> float:
        """log2 of 1 - F(x), accumulated from the right so deep upper
        tails keep full log-domain precision."""
        if x < DyadicPoint.zero() or x > DyadicPoint.one():
            raise DomainError(f"{x} outside [0, 1]")
        return self._log_ccdf_scaled(*self._query_pos(x))

    def cdf(self, x: DyadicPoint) -> float:
        lf = self.log_cdf(x)
        return 0.0 if lf == LOG_ZERO else 2.0 ** lf

    def log_tail(self, x: DyadicPoint) -> float:
        """log2 min{F(x), 1-F(x)}: the mass on the lighter side of x."""
        if x < DyadicPoint.zero() or x > DyadicPoint.one():
            raise DomainError(f"{x} outside [0, 1]")
        xs, shift = self._query_pos(x)
        return min(self._log_cdf_scaled(xs, shift), self._log_ccdf_scaled(xs, shift))

    # ------------------------------------------------------------------
    # median location
    # ------------------------------------------------------------------

    def _edge_cdf_linear(self) -> np.ndarray:
        """Linear-domain CDF at every stored edge (length = segments + 1)."""
        out = np.empty(len(self._logmass) + 1)
        out[0] = 0.0
        np.cumsum(np.exp2(self._logmass), out=out[1:])
        return out

    def _linear_cdf_at(self, xs: int, edge_cdf: np.ndarray) -> float:
        full = 1 << self.resolution
        if xs <= 0:
            return 0.0
        if xs >= full:
            return float(edge_cdf[-1])
        j = self._locate(xs)
        if self._edges[j] == xs:
            return float(edge_cdf[j])
        a, b = self._edges[j], self._edges[j + 1]
        # int/int true division is correctly rounded for any magnitude
        return float(edge_cdf[j]) + float(np.exp2(self._logmass[j])) * ((xs - a) / (b - a))

    def median_bin(self, i: int, tie_tol: float = MEDIAN_TIE_TOL) -> MedianQuery:
        """Find the resolution-``2**-i`` bin holding the posterior median.

        Ties (|F(edge) - 1/2| <= tie_tol) assign the median to the bin on
        the right of the edge and flag ``at_left_edge``; in that mode d1
        is exactly zero so downstream updates reduce to the classic
        median-threshold form.
        """
        if i > self.resolution:
            raise ResolutionError(f"resolution {i} bits not yet arrived (have {self.resolution})")
        if i < 0:
            raise DomainError("resolution must be nonnegative")
        unit = 1 << (self.resolution - i)
        edge_cdf = self._edge_cdf_linear()

        # segment holding the median
        e = bisect_left(edge_cdf, 0.5)
        e = min(max(e, 1), len(self._edges) - 1)
        a, b = self._edges[e - 1], self._edges[e]
        seg_mass = float(edge_cdf[e] - edge_cdf[e - 1])
        f_a = float(edge_cdf[e - 1])

        # candidate bin via the linear CDF inside the segment, in exact ints
        if seg_mass <= 0.0:
            k = a // unit
        else:
            r = min(max((0.5 - f_a) / seg_mass, 0.0), 1.0)
            k = (a + ((int(r * (1 << 53)) * (b - a)) >> 53)) // unit

        # Settle the candidate against the tie rule (largest k with
        # F(k * unit) <= 1/2 + tie_tol).  The exact-integer candidate is
        # off by at most a couple of bins whenever per-bin mass is
        # representable in floats; when it is not (segments spanning
        # astronomically many bins), every bin in the span ties at 1/2 and
        # any candidate is equivalent, so the correction walk is bounded.
        k = min(max(k, 0), (1 << i) - 1)
        for _ in range(8):
            if k > 0 and self._linear_cdf_at(k * unit, edge_cdf) > 0.5 + tie_tol:
                k -= 1
            else:
                break
        for _ in range(8):
            if k + 1 <= (1 << i) - 1 and \
                    self._linear_cdf_at((k + 1) * unit, edge_cdf) <= 0.5 + tie_tol:
                k += 1
            else:
                break

        f_left = self._linear_cdf_at(k * unit, edge_cdf)
        f_right = self._linear_cdf_at((k + 1) * unit, edge_cdf)
        at_left_edge = abs(f_left - 0.5) <= tie_tol
        d1 = 0.0 if at_left_edge else min(max(0.5 - f_left, 0.0), 0.5)
        d2 = min(max(f_right - 0.5, 0.0), 0.5)
        return MedianQuery(k, at_left_edge, d1, d2, i)

    # ------------------------------------------------------------------
    # Bayesian tilt
    # ------------------------------------------------------------------

    def _insert_edge(self, xs: int) -> int:
        """Ensure xs is a stored edge; return its index.  At most one new
        breakpoint per call, splitting the containing segment's mass in
        exact proportion to the dyadic lengths."""
        j = self._locate(xs)
        if self._edges[j] == xs:
            return j
        a, b = self._edges[j], self._edges[j + 1]
        lm = float(self._logmass[j])
        self._edges.insert(j + 1, xs)
        old = self._logmass
        new = np.empty(old.size + 1)
        new[:j] = old[:j]
        new[j] = lm + _log2_ratio(xs - a, b - a)
        new[j + 1] = lm + _log2_ratio(b - xs, b - a)
        new[j + 2:] = old[j + 1:]
        self._logmass = new
        return j + 1

    def _tilt_scaled(self, xs: int, left_log_factor: float, right_log_factor: float,
                     validate: bool = True) -> None:
        if validate:
            f = 2.0 ** self._log_cdf_scaled(xs) if xs > 0 else 0.0
            residual = (2.0 ** left_log_factor) * f + (2.0 ** right_log_factor) * (1.0 - f) - 1.0
            if abs(residual) > NORMALIZATION_TOL:
                raise NormalizationError(
                    f"tilt factors do not preserve normalization (residual {residual:.3e})"
                )
        full = 1 << self.resolution
        if 0 < xs < full:
            j = self._insert_edge(xs)
        elif xs <= 0:
            j = 0
        else:
            j = len(self._logmass)
        if left_log_factor != 0.0:
            self._logmass[:j] += left_log_factor
        if right_log_factor != 0.0:
            self._logmass[j:] += right_log_factor
        if self.prune_below is not None:
            self._prune()

    def tilt(self, threshold: DyadicPoint, left_log_factor: float,
             right_log_factor: float) -> "PosteriorDensity":
        """Multiply mass left of ``threshold`` by ``2**left_log_factor`` and
        mass right of it by ``2**right_log_factor``.

        The caller must supply normalization-preserving factors, i.e.
        ``2**lf * F(threshold) + 2**rf * (1 - F(threshold)) = 1`` within
        NORMALIZATION_TOL; violations raise NormalizationError.  Past
        thresholds are always coarser-or-equal dyadic points, so a
        threshold finer than the resolution is a caller error.  Returns
        self for chaining.
        """
        if threshold.level > self.resolution:
            raise ResolutionError(
                f"threshold at level {threshold.level} is finer than resolution {self.resolution}"
            )
        xs = threshold.scaled(self.resolution)
        self._tilt_scaled(xs, left_log_factor, right_log_factor)
        return self

    def _prune(self) -> None:
        """Merge runs of adjacent segments whose masses all sit below the
        prune threshold.  Exactness note: this moves CDF values at removed
        interior breakpoints by at most the merged mass."""
        lm = self._logmass
        if lm.size < 3:
            return
        tiny = lm < self.prune_below
        if int(np.count_nonzero(tiny)) < 2:
            return
        # detect whether any run of >= 2 exists before rebuilding
        if not bool(np.any(tiny[1:] & tiny[:-1])):
            return
        new_edges = [self._edges[0]]
        new_mass: list[float] = []
        n = lm.size
        idx = 0
        while idx < n:
            if tiny[idx]:
                run_end = idx
                while run_end + 1 < n and tiny[run_end + 1]:
                    run_end += 1
                new_mass.append(_logsumexp2(lm[idx:run_end + 1]))
                new_edges.append(self._edges[run_end + 1])
                idx = run_end + 1
            else:
                new_mass.append(float(lm[idx]))
                new_edges.append(self._edges[idx + 1])
                idx += 1
        self._edges = new_edges
        self._logmass = np.array(new_mass)

    # ------------------------------------------------------------------
    # serialization (debug dump for golden-file tests)
    # ------------------------------------------------------------------

    def to_debug_obj(self) -> dict:
        """Segments as (breakpoint numerator, level, log2 mass) triples."""
        pts = self.breakpoints()
        return {
            "resolution": self.resolution,
            "segments": [
                [pts[i].numerator, pts[i].level, float(self._logmass[i])]
                for i in range(len(self._logmass))
            ],
        }

    def to_debug_json(self) -> str:
        return json.dumps(self.to_debug_obj())
