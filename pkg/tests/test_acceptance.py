"""Acceptance suite: the package's shipped guarantees, each exercised at
its stated tolerance with one printed pass/fail line per criterion.

The Monte Carlo criteria run at their full stated trial counts, so the
module takes a while (tens of minutes of CPU; it fans out over two worker
processes).  Deselect with ``-m "not acceptance"`` during development.

Two stated parameter combinations sit outside the region where the
anytime exponent fixed point has a positive root (the per-step tail
contraction tops out at sup psi = 0.162 bits/use at p = 0.1, so budgets
n <= 6 admit no positive exponent there, and n = 3 none either).  At
those parameters the sign-unrestricted fixed point is negative and the
corresponding decay bounds are vacuously true; the criteria are still
evaluated exactly as stated (and flagged), and each such criterion also
runs a supplementary substantive variant at the nearest parameters with a
positive exponent.
"""

import math
import time
from multiprocessing import get_context

import numpy as np
import pytest

from causalpm.codec import (
    ROLE_CHANNEL,
    ROLE_COMMON,
    ArrivalSchedule,
    ChannelParams,
    CodecSession,
    make_source,
    named_stream,
)
from causalpm.config import ExperimentConfig
from causalpm.control import PlantParams, simulate_closed_loop, stability_sweep
from causalpm.dyadic import DyadicPoint
from causalpm.experiments import fit_kappa, run_error_prob
from causalpm.exponents import (
    NoPositiveExponent,
    capacity,
    lambda_for_budget,
    psi,
    rate_bound,
    solve_exponent,
    solve_exponent_extended,
)
from causalpm.posterior import PosteriorDensity

from _oracles import ExplicitBinPosterior, compressed_cdf_grid
from _report import report

pytestmark = pytest.mark.acceptance

WORKERS = 2

CORPUS_PS = (0.05, 0.1, 0.2)
CORPUS_SESSIONS_PER_P = 334
CORPUS_T = 500
CORPUS_N = 5
CORPUS_SEED = 20260809
# tail probes: the midpoint and the two quarter points
PROBES = ((1, 1), (1, 2), (3, 2))
PROBE_VALID_FROM = {1: 0, 2: CORPUS_N}  # level -> first ratio time tau


def _pool_map(fn, specs):
    if len(specs) == 1:
        return [fn(specs[0])]
    with get_context("fork").Pool(WORKERS) as pool:
        return pool.map(fn, specs)


# ----------------------------------------------------------------------
# shared session corpus for criteria 1, 3, 4, 5
# ----------------------------------------------------------------------


def _corpus_chunk(args):
    p, lam, start, count = args
    params = ChannelParams(p)
    probes = [DyadicPoint(*pt) for pt in PROBES]
    max_drift = 0.0
    edge_count = 0
    edge_dev = 0.0
    stats = np.zeros((len(PROBES), 3))  # per probe: sum x, sum x^2, n
    times = ArrivalSchedule.periodic(CORPUS_N).realize(CORPUS_T)
    for trial in range(start, start + count):
        sess = CodecSession(
            params, times, lam,
            source=make_source(CORPUS_SEED ^ 0xABCDEF, trial=trial),
            channel_rng=named_stream(CORPUS_SEED, ROLE_CHANNEL, trial),
            common_rng=named_stream(CORPUS_SEED, ROLE_COMMON, trial),
            dual_state=True, check_each_step=True, probe_points=probes,
        )
        for _ in range(CORPUS_T):
            rec = sess.step()
            if rec.branch == "edge":
                edge_count += 1
                lo, hi = sorted((2.0 ** rec.left_log_factor,
                                 2.0 ** rec.right_log_factor))
                edge_dev = max(edge_dev, abs(lo - 2 * p), abs(hi - 2 * (1 - p)))
        max_drift = max(max_drift, sess.max_norm_drift)
        logs = np.array([vals for _, vals in sess.probe_log])  # (T+1, npts)
        for idx, (num, level) in enumerate(PROBES):
            tau0 = PROBE_VALID_FROM[level]
            dlog = np.diff(logs[tau0:, idx])
            x = np.exp2(lam * dlog)
            stats[idx, 0] += float(np.sum(x))
            stats[idx, 1] += float(np.sum(x * x))
            stats[idx, 2] += float(x.size)
    return max_drift, edge_count, edge_dev, stats


@pytest.fixture(scope="module")
def corpus():
    out = {}
    t0 = time.perf_counter()
    for p in CORPUS_PS:
        lam = lambda_for_budget(CORPUS_N, p)
        chunk = CORPUS_SESSIONS_PER_P // WORKERS + 1
        specs = []
        start = 0
        while start < CORPUS_SESSIONS_PER_P:
            size = min(chunk, CORPUS_SESSIONS_PER_P - start)
            specs.append((p, lam, start, size))
            start += size
        parts = _pool_map(_corpus_chunk, specs)
        out[p] = {
            "lam": lam,
            "max_drift": max(r[0] for r in parts),
            "edge_count": sum(r[1] for r in parts),
            "edge_dev": max(r[2] for r in parts),
            "stats": sum(r[3] for r in parts),
        }
    out["elapsed"] = time.perf_counter() - t0
    out["sessions"] = CORPUS_SESSIONS_PER_P * len(CORPUS_PS)
    return out


def test_a01_posterior_normalization(corpus):
    worst = max(corpus[p]["max_drift"] for p in CORPUS_PS)
    ok = worst <= 1e-9
    report("A1 posterior-normalization",
           ok, f"{corpus['sessions']} sessions x {CORPUS_T} steps, "
               f"max |log2 total mass| = {worst:.3e} (tol 1e-9), "
               f"corpus wall time {corpus['elapsed']:.0f}s")
    assert ok


def test_a02_dense_oracle_equivalence():
    rng = np.random.default_rng(77)
    worst = 0.0
    t0 = time.perf_counter()
    for trial in range(100):
        p = float(rng.choice([0.05, 0.1, 0.2, 0.3]))
        n = int(rng.choice([3, 5, 7]))
        times = ArrivalSchedule.periodic(n).realize(20)
        sess = CodecSession(
            ChannelParams(p), times, lambda_for_budget(n, p),
            source=make_source(int(rng.integers(1 << 40))),
            channel_rng=named_stream(91, ROLE_CHANNEL, trial),
            common_rng=named_stream(91, ROLE_COMMON, trial),
            dual_state=True, check_each_step=True,
        )
        oracle = ExplicitBinPosterior(levels=12)
        arrival_set = set(times)
        for t in range(1, 21):
            if t in arrival_set:
                oracle.split()
            rec = sess.step()
            oracle.update(rec.branch, rec.y, rec.k_median, rec.d1, rec.d2, p)
            grid = compressed_cdf_grid(sess.dec.posterior, oracle.levels)
            worst = max(worst, float(np.max(np.abs(grid - oracle.cdf_grid()))))
    ok = worst <= 1e-10
    report("A2 dense-oracle-equivalence", ok,
           f"100 sessions x 20 steps vs literal 4096-bin update table, "
           f"max |dF| = {worst:.3e} (tol 1e-10), {time.perf_counter()-t0:.0f}s")
    assert ok


def test_a03_encoder_decoder_state_equality(corpus):
    # dual-state sessions raise on any posterior mismatch, so reaching this
    # point certifies bit-exact equality across the whole corpus; run a few
    # random-arrival sessions through the same check for coverage
    for trial in range(20):
        sched = ArrivalSchedule.iid_bounded({3: 0.4, 5: 0.3, 7: 0.3})
        times = sched.realize(120, named_stream(55, 3, trial))
        sess = CodecSession(
            ChannelParams(0.1), times, lambda_for_budget(7, 0.1),
            source=make_source(trial), channel_rng=named_stream(55, ROLE_CHANNEL, trial),
            common_rng=named_stream(55, ROLE_COMMON, trial),
            dual_state=True, check_each_step=True,
        )
        for _ in range(120):
            sess.step(record=False)
        assert sess.enc.posterior.state_equal(sess.dec.posterior)
    report("A3 encoder-decoder-equality", True,
           f"bit-exact posterior match asserted on every step of "
           f"{corpus['sessions']} periodic + 20 random-arrival sessions")


def test_a04_median_edge_update_factors(corpus):
    worst = max(corpus[p]["edge_dev"] for p in CORPUS_PS)
    count = sum(corpus[p]["edge_count"] for p in CORPUS_PS)
    ok = worst <= 1e-12 and count >= corpus["sessions"]
    report("A4 median-edge-classic-factors", ok,
           f"{count} edge-mode steps, max |factor - {{2p, 2(1-p)}}| = {worst:.3e} "
           f"(tol 1e-12)")
    assert ok


def test_a05_tail_moment_contraction(corpus):
    ok_all = True
    details = []
    for p in CORPUS_PS:
        lam = corpus[p]["lam"]
        bound = ((2 * p) ** lam + (2 * (1 - p)) ** lam) / 2.0
        fallback = ""
        try:
            solve_exponent(CORPUS_N, p)
        except NoPositiveExponent:
            fallback = "*"  # budget-matched order from the extended fixed point
        for idx, (num, level) in enumerate(PROBES):
            s1, s2, n = corpus[p]["stats"][idx]
            mean = s1 / n
            se = math.sqrt(max(s2 / n - mean * mean, 0.0) / n)
            ok = mean <= bound + 3 * se and n >= 1e5
            ok_all &= ok
            details.append(
                f"p={p}{fallback} x={num}/2^{level}: mean={mean:.6f} "
                f"<= {bound:.6f}+3se({3*se:.6f}) n={int(n)}")
    report("A5 tail-moment-contraction", ok_all,
           "; ".join(details[:3]) + f"; ... {len(details)} point checks "
           "(* = lambda from the extended fixed point; no positive exponent at n=5)")
    assert ok_all


# ----------------------------------------------------------------------
# criterion 6: tail-sum bound at epoch starts
# ----------------------------------------------------------------------


def _tail_sum_chunk(args):
    p, n, lam, horizon, imax, start, count = args
    params = ChannelParams(p)
    times = ArrivalSchedule.periodic(n).realize(horizon)
    epochs = [n * (i - 1) for i in range(1, imax + 1)]
    sums = np.zeros((count, imax))
    for row, trial in enumerate(range(start, start + count)):
        sess = CodecSession(
            params, times, lam,
            source=make_source(0xFEED, trial=trial),
            channel_rng=named_stream(7017, ROLE_CHANNEL, trial),
            common_rng=named_stream(7017, ROLE_COMMON, trial),
            dual_state=False, check_each_step=False,
        )
        post = sess.enc.posterior
        for i, tau in enumerate(epochs):
            while sess.t < tau:
                sess.step(record=False)
            level = i + 1
            total = 0.0
            for k in range(1, 1 << level):
                total += 2.0 ** (lam * post.log_tail(DyadicPoint(k, level)))
            sums[row, i] = total
    return sums


def test_a06_tail_sum_bound():
    # stated parameters: n = 5, p = 0.1.  The bound's hypothesis is a
    # moment order with psi(lam) > 1/n, and no such order exists there
    # (sup psi = 0.162 < 0.2), so the stated criterion holds vacuously.
    p, n = 0.1, 5
    grid = np.linspace(0.01, 1.0, 100)
    admissible = [lam for lam in grid if psi(lam, p) > 1.0 / n]
    vacuous_ok = len(admissible) == 0
    report("A6 tail-sum-bound (stated: n=5, p=0.1)", vacuous_ok,
           f"no moment order satisfies psi(lam) > 1/n = 0.2 "
           f"(sup psi = {max(psi(l, p) for l in grid):.4f}); bound holds vacuously",
           qualifier="vacuous")
    assert vacuous_ok

    # supplementary substantive run at the nearest budget with a positive
    # exponent: n = 10, p = 0.1, lam = lambda*(10)
    n2 = 10
    sol = solve_exponent(n2, p)
    lam = sol.lambda_star
    imax, sessions = 6, 2000
    horizon = n2 * (imax - 1) + 1
    gap = psi(lam, p) - 1.0 / n2
    assert gap > 0
    bound = 1.0 / (1.0 - 2.0 ** (-gap * n2))
    chunk = sessions // WORKERS
    specs = [(p, n2, lam, horizon, imax, s, min(chunk, sessions - s))
             for s in range(0, sessions, chunk)]
    sums = np.vstack(_pool_map(_tail_sum_chunk, specs))
    ok_all = True
    details = []
    for i in range(imax):
        mean = float(np.mean(sums[:, i]))
        se = float(np.std(sums[:, i]) / math.sqrt(sums.shape[0]))
        ok = mean <= bound + 3 * se
        ok_all &= ok
        details.append(f"i={i+1}: {mean:.4f}<= {bound:.4f}+{3*se:.4f}")
    report("A6 tail-sum-bound (supplementary: n=10, p=0.1)", ok_all,
           f"lam={lam:.4f}, {sessions} sessions; " + "; ".join(details))
    assert ok_all


def test_a07_solver_residuals():
    ps = np.round(np.arange(0.01, 0.4501, 0.01), 4)
    ns = range(1, 41)
    etas = (1.0, 2.0, 4.0)
    worst_beta_residual = 0.0
    worst_rate_residual = 0.0
    worst_psi_endpoint = 0.0
    monotone = True
    solved = vacuous = 0
    for p in ps:
        worst_psi_endpoint = max(worst_psi_endpoint,
                                 abs(psi(0.0, p)), abs(psi(1.0, p)))
        prev = 0.0
        exists_before = False
        for n in ns:
            try:
                sol = solve_exponent(n, float(p))
            except NoPositiveExponent:
                vacuous += 1
                if exists_before:
                    monotone = False  # existence region must be upward closed
                continue
            solved += 1
            exists_before = True
            worst_beta_residual = max(worst_beta_residual, sol.residual)
            if sol.beta + 1e-12 < prev:
                monotone = False
            prev = sol.beta
            assert 0.0 < sol.lambda_star <= 1.0
        for eta in etas:
            rb = rate_bound(float(p), eta)
            worst_rate_residual = max(worst_rate_residual, rb.residual)
    ok = (worst_beta_residual <= 1e-9 and worst_rate_residual <= 1e-9
          and worst_psi_endpoint <= 1e-12 and monotone)
    report("A7 solver-residuals", ok,
           f"{solved} exponent roots (residual <= {worst_beta_residual:.2e}), "
           f"{vacuous} vacuous budgets, {len(ps)*len(etas)} rate roots "
           f"(residual <= {worst_rate_residual:.2e}), psi endpoints <= "
           f"{worst_psi_endpoint:.2e}, beta nondecreasing in n: {monotone}")
    assert ok


# ----------------------------------------------------------------------
# criteria 8-9: anytime decay of the prefix error
# ----------------------------------------------------------------------


def _error_curve(p, n_or_sched, lam_mode, horizon, js, trials, seed,
                 conditional=False):
    params = {"p": p, "horizon": horizon, "j": list(js),
              "lambda_mode": lam_mode, "conditional": conditional}
    if isinstance(n_or_sched, int):
        params.update({"schedule": "periodic", "n": n_or_sched})
    else:
        params.update({"schedule": "iid", "n_min": n_or_sched[0],
                       "n_max": n_or_sched[1]})
    cfg = ExperimentConfig("error-prob", seed=seed, trials=trials,
                           workers=WORKERS, params=params)
    return run_error_prob(cfg)


def _slope(ts, errs, counts, min_hits=10):
    ts = np.asarray(ts, dtype=float)
    errs = np.asarray(errs, dtype=float)
    hits = errs * np.asarray(counts, dtype=float)
    mask = (errs > 0) & (hits >= min_hits)
    if mask.sum() < 5:
        return None, int(mask.sum())
    return float(np.polyfit(ts[mask], np.log2(errs[mask]), 1)[0]), int(mask.sum())


def _rows_for_j(result, j):
    rows = [r for r in result["csv"]["error_prob"][1] if r["j"] == j]
    ts = [r["t"] for r in rows]
    errs = [r["empirical_error"] for r in rows]
    counts = [r["trials"] for r in rows]
    return np.array(ts), np.array(errs), np.array(counts)


def _check_decay(tag, beta, ts, errs, counts, fit_lo, fit_hi, kappa_cutoff,
                 qualifier=""):
    window = (ts >= fit_lo) & (ts <= fit_hi)
    slope, pts = _slope(ts[window], errs[window], counts[window])
    slope_ok = slope is not None and slope <= -0.8 * beta
    kappa = fit_kappa(ts[window], errs[window], beta, cutoff=kappa_cutoff)
    late = window & (ts > kappa_cutoff)
    bound = kappa * 2.0 ** (-beta * ts[late])
    below_ok = bool(np.all(errs[late] <= bound + 1e-12))
    ok = slope_ok and below_ok
    report(tag, ok,
           f"beta={beta:+.5f}, fitted slope={slope if slope is None else round(slope, 5)} "
           f"<= -0.8*beta={-0.8 * beta:+.5f} over {pts} points; "
           f"kappa_hat={kappa:.3f} fitted on t<={kappa_cutoff}, curve below the "
           f"overlay on t>{kappa_cutoff}: {below_ok}", qualifier=qualifier)
    return ok


def test_a08_periodic_anytime_decay():
    # stated parameters: n = 5, p = 0.1, j = 1, t in [10, 60], 1e5 trials.
    # The fixed point at these parameters is negative (vacuous bound); the
    # criterion is evaluated as stated and flagged, and the substantive
    # variant runs at n = 10 where beta > 0.
    t0 = time.perf_counter()
    res = _error_curve(0.1, 5, "budget", 60, [1], 100000, seed=811)
    ts, errs, counts = _rows_for_j(res, 1)
    ext = solve_exponent_extended(5, 0.1)
    ok1 = _check_decay("A8 anytime-decay (stated: n=5, p=0.1, j=1)",
                       ext.beta, ts, errs, counts, 10, 60, 25,
                       qualifier="vacuous bound, beta<0")
    assert ok1

    res2 = _error_curve(0.1, 10, "budget", 60, [1], 100000, seed=812)
    ts2, errs2, counts2 = _rows_for_j(res2, 1)
    beta10 = solve_exponent(10, 0.1).beta
    ok2 = _check_decay("A8 anytime-decay (supplementary: n=10, p=0.1, j=1)",
                       beta10, ts2, errs2, counts2, 10, 60, 25)
    print(f"A8 wall time {time.perf_counter()-t0:.0f}s")
    assert ok2


def test_a09_random_arrival_regimes():
    t0 = time.perf_counter()
    # low-rate regime: lam matched to the slowest arrivals, unconditional
    # decay for prefixes that have arrived with certainty
    beta7 = solve_exponent(7, 0.1).beta
    res = _error_curve(0.1, (3, 7), "n_max", 70, [1, 2], 100000, seed=901)
    ok_all = True
    for j in (1, 2):
        ts, errs, counts = _rows_for_j(res, j)
        window_lo = 7 * j + 5
        ok = _check_decay(
            f"A9 low-rate regime (iid 3..7, p=0.1, lam*(7), j={j})",
            beta7, ts, errs, counts, window_lo, 70, window_lo + 15)
        ok_all &= ok

    # high-rate regime at the stated parameters: lam*(3) comes from a
    # negative fixed point at p = 0.1, so the conditional bound is vacuous
    ext3 = solve_exponent_extended(3, 0.1)
    res2 = _error_curve(0.1, (3, 7), "n_min", 70, [1, 2], 100000, seed=902,
                        conditional=True)
    crows = res2["csv"]["error_prob_conditional"][1]
    for i in (1,):
        rows = [r for r in crows if r["i"] == i]
        ss = np.array([r["t_minus_Ti"] for r in rows], dtype=float)
        errs = np.array([r["cond_error"] for r in rows])
        counts = np.array([r["samples"] for r in rows])
        window = (ss >= 5) & (ss <= 55)
        slope, pts = _slope(ss[window], errs[window], counts[window])
        ok = slope is not None and slope <= -0.8 * ext3.beta
        stext = "n/a" if slope is None else f"{slope:.5f}"
        report(f"A9 high-rate regime (stated: iid 3..7, p=0.1, lam*(3), i={i})",
               ok, f"conditional slope in (t - T_i) = {stext} <= "
                   f"{-0.8 * ext3.beta:+.5f} over {pts} points",
               qualifier="vacuous bound, beta<0")
        ok_all &= ok

    # supplementary substantive high-rate run where beta(3) > 0
    beta3 = solve_exponent(3, 0.02).beta
    res3 = _error_curve(0.02, (3, 7), "n_min", 70, [1], 100000, seed=903,
                        conditional=True)
    crows3 = res3["csv"]["error_prob_conditional"][1]
    rows = [r for r in crows3 if r["i"] == 1]
    ss = np.array([r["t_minus_Ti"] for r in rows], dtype=float)
    errs = np.array([r["cond_error"] for r in rows])
    counts = np.array([r["samples"] for r in rows])
    window = (ss >= 5) & (ss <= 55)
    slope, pts = _slope(ss[window], errs[window], counts[window])
    ok = slope is not None and slope <= -0.8 * beta3
    stext = "n/a" if slope is None else f"{slope:.5f}"
    report("A9 high-rate regime (supplementary: p=0.02, lam*(3), i=1)", ok,
           f"beta(3)={beta3:.5f}; conditional slope {stext} <= "
           f"{-0.8 * beta3:+.5f} over {pts} points")
    ok_all &= ok
    print(f"A9 wall time {time.perf_counter()-t0:.0f}s")
    assert ok_all


# ----------------------------------------------------------------------
# criterion 10: closed-loop stabilization
# ----------------------------------------------------------------------


def _control_chunk(args):
    alpha, p, n, horizon, seeds = args
    plant = PlantParams(alpha=alpha, Delta=1.0, W=0.0, eta=2.0)
    out = []
    for trial in seeds:
        traj = simulate_closed_loop(plant, p, n, horizon, 101000, trial)
        out.append((traj.sup_abs_z, traj.moment_ratio(2.0)))
    return out


def test_a10_control_stabilization():
    t0 = time.perf_counter()
    beta10 = solve_exponent(10, 0.05).beta
    alpha = 2.0 ** (0.9 * min(0.1, beta10 / 2.0))
    seeds = list(range(100))
    specs = [(alpha, 0.05, 10, 2000, seeds[i::WORKERS]) for i in range(WORKERS)]
    results = [r for part in _pool_map(_control_chunk, specs) for r in part]
    sups = np.array([r[0] for r in results])
    ratios = np.array([r[1] for r in results])
    stable_ok = bool(np.all(sups <= 1e3) and np.all(ratios <= 1.5))
    report("A10 control-stabilization", stable_ok,
           f"alpha={alpha:.5f} (0.9 of the stabilizable-gain bound), 100 seeds x "
           f"2000 steps: max sup|Z| = {sups.max():.3f} <= 1e3*Delta, "
           f"max second/first moment ratio = {ratios.max():.3g} <= 1.5")
    assert stable_ok

    alpha_bad = 2.0 ** (1.5 / 10)
    specs = [(alpha_bad, 0.45, 10, 400, list(range(i, 20, WORKERS)))
             for i in range(WORKERS)]
    results = [r for part in _pool_map(_control_chunk, specs) for r in part]
    diverged = [sup > 1e3 or ratio > 1.5 for sup, ratio in results]
    div_ok = all(diverged)
    report("A10 divergence-control", div_ok,
           f"alpha={alpha_bad:.4f} at p=0.45: all 20 seeds judged unstable "
           f"(min sup|Z| = {min(r[0] for r in results):.3g}); "
           f"wall time {time.perf_counter()-t0:.0f}s")
    assert div_ok


# ----------------------------------------------------------------------
# criterion 11: figure-shape claims
# ----------------------------------------------------------------------


def test_a11_figure_shape_claims():
    t0 = time.perf_counter()
    # budget sweep: for every p some budget stabilizes a gain above one
    ps = np.round(np.arange(0.05, 0.401, 0.05), 3)
    sweep_ok = True
    for p in ps:
        best = 1.0
        for n in range(1, 201):
            try:
                sol = solve_exponent(n, float(p))
            except NoPositiveExponent:
                continue
            best = max(best, 2.0 ** min(1.0 / n, sol.beta / 2.0))
        if best <= 1.0:
            sweep_ok = False
    report("A11 gain-vs-budget sweep", sweep_ok,
           f"max stabilizable gain exceeds one for every p in "
           f"{[float(p) for p in ps]} with budgets up to 200")
    assert sweep_ok

    # analytic curves: 1 < 2**R(p) <= 2**C(p) across the probability grid
    curve_ok = True
    for p in np.round(np.arange(0.05, 0.4501, 0.05), 3):
        r = rate_bound(float(p), 2.0).rate
        c = capacity(float(p))
        if not (0.0 < r <= c and 2.0 ** r > 1.0):
            curve_ok = False
    report("A11 analytic-vs-capacity ordering", curve_ok,
           "1 < 2**R(p) <= 2**C(p) on p in {0.05..0.45}")
    assert curve_ok

    # empirical frontier dominates the analytic curve pointwise
    emp_ok = True
    details = []
    for p in (0.05, 0.1, 0.2, 0.3, 0.4):
        r = rate_bound(p, 2.0).rate
        alpha = 2.0 ** r
        n_star = int(min(200, max(2, round(1.0 / r))))
        sweep = stability_sweep([alpha], [p], [n_star], eta=2.0, trials=5,
                                horizon=400, master_seed=111)
        front = sweep["frontier"][0]
        good = front["alpha_empirical"] >= front["alpha_analytic"] - 1e-12
        emp_ok &= good
        details.append(f"p={p}: emp={front['alpha_empirical']:.4f} >= "
                       f"analytic={front['alpha_analytic']:.4f} (n={n_star})")
    report("A11 empirical-frontier-dominance", emp_ok,
           "; ".join(details) + f"; wall time {time.perf_counter()-t0:.0f}s")
    assert emp_ok


# ----------------------------------------------------------------------
# criterion 12 (secondary): figure rendering from shipped sample CSVs
# ----------------------------------------------------------------------


def test_a12_figure_rendering(tmp_path):
    import json
    import pathlib
    import subprocess
    import sys

    try:
        import figplots  # noqa: F401
    except ImportError:
        report("A12 figure-rendering", False,
               "figplots package is not installed in this environment")
        pytest.fail("figplots not installed")
    samples = (pathlib.Path(figplots.__file__).parent / "sample_data")
    kinds = {"exponent_sweep": "exponent_sweep.csv",
             "alpha_vs_p": "alpha_vs_p.csv",
             "error_decay": "error_prob.csv"}
    ok = True
    details = []
    for kind, csv_name in kinds.items():
        spec = tmp_path / f"{kind}.json"
        spec.write_text(json.dumps({
            "kind": kind, "csv": str(samples / csv_name),
            "out": str(tmp_path / f"{kind}.png"),
        }))
        renders = []
        for _ in range(2):
            res = subprocess.run([sys.executable, "-m", "figplots.cli",
                                  "plot", "--spec", str(spec)],
                                 capture_output=True, text=True)
            if res.returncode != 0:
                ok = False
                details.append(f"{kind}: exit {res.returncode} ({res.stderr.strip()})")
                break
            renders.append((tmp_path / f"{kind}.png").read_bytes())
        else:
            stable = renders[0] == renders[1]
            ok &= stable and len(renders[0]) > 5000
            details.append(f"{kind}: {len(renders[0])} bytes, byte-stable={stable}")
    report("A12 figure-rendering [SECONDARY]", ok, "; ".join(details))
    assert ok
