"""Experiment drivers behind the command-line harness.

Every experiment is a pure function of its config: trials are seeded by
(master seed, trial index) through stable spawn keys, and parallel
aggregation only ever sums count arrays, so results are identical for any
worker count.  Each run writes one or more CSVs (first line is a comment
naming the config hash and seed) plus a JSON metadata file echoing the
config, library versions and timings.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys
import time
from multiprocessing import get_context

import numpy as np

from . import __version__
from .codec import (
    ROLE_CHANNEL,
    ROLE_COMMON,
    ArrivalSchedule,
    ChannelParams,
    CodecSession,
    make_source,
    named_stream,
)
from .config import ConfigError, ExperimentConfig
from .control import PlantParams, simulate_closed_loop, stability_sweep
from .exponents import (
    NoPositiveExponent,
    capacity,
    lambda_for_budget,
    rate_bound,
    solve_exponent,
)

#: fraction of the time axis used to fit the bound constant (least squares
#: on the log2 scale over the first third of the observed range)
KAPPA_FIT_FRACTION = 1.0 / 3.0


# ----------------------------------------------------------------------
# output plumbing
# ----------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_csv(path, fieldnames, rows, cfg: ExperimentConfig) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# causalpm config_sha256={cfg.sha256()} seed={cfg.seed}\n")
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row.get(name)) for name in fieldnames])


def write_meta(path, cfg: ExperimentConfig, timing_s: float, extra: dict | None = None) -> None:
    meta = {
        "experiment": cfg.experiment,
        "config": cfg.as_dict(),
        "config_sha256": cfg.sha256(),
        "seed": cfg.seed,
        "versions": {
            "causalpm": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "timing_s": timing_s,
    }
    if extra:
        meta.update(extra)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def fit_kappa(ts, errs, beta: float, offsets=None, cutoff: float | None = None) -> float:
    """Least-squares fit of the bound constant on the log2 scale.

    Fits log2(kappa) = mean(log2 err + beta * (t - offset)) over points
    with positive observed error and t at most ``cutoff`` (default: the
    first KAPPA_FIT_FRACTION of the time range); returns 1.0 when nothing
    is fittable.
    """
    ts = np.asarray(ts, dtype=float)
    errs = np.asarray(errs, dtype=float)
    offsets = np.zeros_like(ts) if offsets is None else np.asarray(offsets, dtype=float)
    if ts.size == 0:
        return 1.0
    if cutoff is None:
        cutoff = ts.min() + KAPPA_FIT_FRACTION * (ts.max() - ts.min())
    mask = (ts <= cutoff) & (errs > 0)
    if not mask.any():
        return 1.0
    logk = np.mean(np.log2(errs[mask]) + beta * (ts[mask] - offsets[mask]))
    return float(2.0 ** logk)


# ----------------------------------------------------------------------
# exponent sweep (stabilizable gain vs inverse budget)
# ----------------------------------------------------------------------


def run_exponent_sweep(cfg: ExperimentConfig) -> dict:
    ps = [float(p) for p in cfg.grid("p")]
    ns = [int(n) for n in cfg.grid("n")]
    eta = float(cfg.scalar("eta", 2.0))
    rows = []
    for p in ps:
        for n in ns:
            try:
                sol = solve_exponent(n, p)
                mla = min(1.0 / n, sol.beta / eta)
                rows.append({
                    "p": p, "n": n, "inv_n": 1.0 / n, "beta": sol.beta,
                    "lambda_star": sol.lambda_star, "max_log_alpha": mla,
                    "alpha": 2.0 ** mla,
                })
            except NoPositiveExponent:
                rows.append({
                    "p": p, "n": n, "inv_n": 1.0 / n, "beta": None,
                    "lambda_star": None, "max_log_alpha": 0.0, "alpha": 1.0,
                })
    return {
        "csv": {"exponent_sweep": (
            ["p", "n", "inv_n", "beta", "lambda_star", "max_log_alpha", "alpha"], rows)},
        "extra": {"rows": len(rows)},
    }


# ----------------------------------------------------------------------
# stabilizable gain vs crossover probability
# ----------------------------------------------------------------------


def run_alpha_vs_p(cfg: ExperimentConfig) -> dict:
    ps = [float(p) for p in cfg.grid("p")]
    eta = float(cfg.scalar("eta", 2.0))
    empirical = bool(cfg.scalar("empirical", False))
    rows = []
    frontier = {}
    if empirical:
        ns = [int(n) for n in cfg.grid("n", [10])]
        horizon = int(cfg.scalar("horizon", 400))
        for p in ps:
            # per-p gain grid anchored at the analytic point
            analytic = 2.0 ** rate_bound(p, eta).rate
            sweep = stability_sweep([analytic, analytic * 1.1], [p], ns, eta,
                                    cfg.trials, horizon, cfg.seed)
            frontier[p] = sweep["frontier"][0]["alpha_empirical"]
    for p in ps:
        rows.append({
            "p": p,
            "alpha_analytic": 2.0 ** rate_bound(p, eta).rate,
            "alpha_capacity": 2.0 ** capacity(p),
            "alpha_empirical": frontier.get(p),
        })
    return {
        "csv": {"alpha_vs_p": (
            ["p", "alpha_analytic", "alpha_capacity", "alpha_empirical"], rows)},
        "extra": {"eta": eta, "empirical": empirical},
    }


# ----------------------------------------------------------------------
# prefix-error decay
# ----------------------------------------------------------------------


def _error_prob_setup(cfg: ExperimentConfig):
    p = float(cfg.scalar("p"))
    horizon = int(cfg.scalar("horizon", 60))
    kind = str(cfg.scalar("schedule", "periodic"))
    if kind == "periodic":
        schedule = ArrivalSchedule.periodic(int(cfg.scalar("n")))
    elif kind == "iid":
        n_min = int(cfg.scalar("n_min"))
        n_max = int(cfg.scalar("n_max"))
        support = list(range(n_min, n_max + 1))
        schedule = ArrivalSchedule.iid_bounded({n: 1.0 / len(support) for n in support})
    else:
        raise ConfigError(f"unknown schedule kind {kind!r}")
    lam_mode = cfg.scalar("lambda_mode", "budget")
    if isinstance(lam_mode, (int, float)) and not isinstance(lam_mode, bool):
        lam = float(lam_mode)
    elif lam_mode == "budget":
        lam = lambda_for_budget(schedule.n if schedule.kind == "periodic" else schedule.n_max, p)
    elif lam_mode == "n_min":
        lam = lambda_for_budget(schedule.n_min, p)
    elif lam_mode == "n_max":
        lam = lambda_for_budget(schedule.n_max, p)
    else:
        raise ConfigError(f"unknown lambda_mode {lam_mode!r}")
    js = [int(j) for j in cfg.grid("j", [1, 2, 3])]
    return p, horizon, schedule, lam, js


def _error_prob_chunk(args) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]:
    """Error counts for a contiguous block of trials.

    Returns (err[t-1, j_idx], tot[t-1, j_idx], cond_err[j_idx, s],
    cond_tot[j_idx, s], trials_done); aggregation across chunks is a
    plain sum.  ``tot`` counts only trials where the length-j prefix had
    arrived by t, which matters for random schedules.
    """
    (cfg_dict, start, count) = args
    cfg = ExperimentConfig(**cfg_dict)
    p, horizon, schedule, lam, js = _error_prob_setup(cfg)
    params = ChannelParams(p)
    conditional = bool(cfg.scalar("conditional", False))
    err = np.zeros((horizon, len(js)), dtype=np.int64)
    tot = np.zeros((horizon, len(js)), dtype=np.int64)
    cond_err = np.zeros((len(js), horizon + 1), dtype=np.int64)
    cond_tot = np.zeros((len(js), horizon + 1), dtype=np.int64)
    from .codec import ROLE_ARRIVALS

    for trial in range(start, start + count):
        arrivals_rng = named_stream(cfg.seed, ROLE_ARRIVALS, trial)
        times = schedule.realize(horizon, arrivals_rng)
        session = CodecSession(
            params, times, lam,
            source=make_source(cfg.seed, trial=trial),
            channel_rng=named_stream(cfg.seed, ROLE_CHANNEL, trial),
            common_rng=named_stream(cfg.seed, ROLE_COMMON, trial),
            dual_state=False, check_each_step=False,
        )
        for _ in range(horizon):
            t, b, fw = session.step(record=False)
            wrong = fw != 0
            for idx, j in enumerate(js):
                if j > b:
                    continue
                bad = wrong and fw <= j
                tot[t - 1, idx] += 1
                if bad:
                    err[t - 1, idx] += 1
                if conditional and j < len(times):
                    # bit j+1 has arrived iff b(t) > j
                    if times[j] <= t:
                        s = t - times[j - 1]
                        cond_tot[idx, s] += 1
                        if bad:
                            cond_err[idx, s] += 1
    return err, tot, cond_err, cond_tot, count


def _fan_out(chunk_fn, cfg: ExperimentConfig, n_items: int):
    """Split n_items across workers; deterministic regardless of layout."""
    workers = max(1, cfg.workers)
    chunk = max(1, math.ceil(n_items / (workers * 4)))
    specs = []
    start = 0
    while start < n_items:
        size = min(chunk, n_items - start)
        specs.append(({"experiment": cfg.experiment, "seed": cfg.seed,
                       "trials": cfg.trials, "workers": 1, "out": cfg.out,
                       "params": cfg.params}, start, size))
        start += size
    if workers == 1 or len(specs) == 1:
        return [chunk_fn(s) for s in specs]
    with get_context("fork").Pool(workers) as pool:
        return pool.map(chunk_fn, specs)


def run_error_prob(cfg: ExperimentConfig) -> dict:
    p, horizon, schedule, lam, js = _error_prob_setup(cfg)
    conditional = bool(cfg.scalar("conditional", False))
    fields = ["t", "j", "empirical_error", "bound_value", "trials"]
    if cfg.trials == 0:
        out = {"csv": {"error_prob": (fields, [])}, "extra": {"lam": lam}}
        if conditional:
            out["csv"]["error_prob_conditional"] = (
                ["i", "t_minus_Ti", "cond_error", "samples"], [])
        return out

    results = _fan_out(_error_prob_chunk, cfg, cfg.trials)
    err = sum(r[0] for r in results)
    tot = sum(r[1] for r in results)
    cond_err = sum(r[2] for r in results)
    cond_tot = sum(r[3] for r in results)
    done = sum(r[4] for r in results)
    assert done == cfg.trials

    # analytic overlay: fitted constant against the budget-matched exponent
    n_for_bound = schedule.n if schedule.kind == "periodic" else schedule.n_max
    try:
        beta = solve_exponent(n_for_bound, p).beta
    except NoPositiveExponent:
        beta = None

    rows = []
    kappas = {}
    for idx, j in enumerate(js):
        ts = np.arange(1, horizon + 1)
        with np.errstate(invalid="ignore"):
            emp = np.where(tot[:, idx] > 0, err[:, idx] / np.maximum(tot[:, idx], 1), np.nan)
        if beta is not None:
            offs = np.full_like(ts, n_for_bound * (j - 1), dtype=float)
            good = tot[:, idx] > 0
            kappa = fit_kappa(ts[good], emp[good], beta, offs[good])
            kappas[j] = kappa
        for t in ts:
            if j > (t // schedule.n_min) or tot[t - 1, idx] == 0:
                continue
            bound = None
            if beta is not None:
                bound = kappas[j] * 2.0 ** (-beta * (t - n_for_bound * (j - 1)))
            rows.append({"t": int(t), "j": j, "empirical_error": float(emp[t - 1]),
                         "bound_value": bound, "trials": int(tot[t - 1, idx])})

    out = {"csv": {"error_prob": (fields, rows)},
           "extra": {"lam": lam, "beta": beta, "kappa": {str(k): v for k, v in kappas.items()}}}
    if conditional:
        crows = []
        for idx, j in enumerate(js):
            for s in range(horizon + 1):
                if cond_tot[idx, s] == 0:
                    continue
                crows.append({"i": j, "t_minus_Ti": s,
                              "cond_error": float(cond_err[idx, s] / cond_tot[idx, s]),
                              "samples": int(cond_tot[idx, s])})
        out["csv"]["error_prob_conditional"] = (
            ["i", "t_minus_Ti", "cond_error", "samples"], crows)
    return out


# ----------------------------------------------------------------------
# closed-loop control
# ----------------------------------------------------------------------


def run_control_sim(cfg: ExperimentConfig) -> dict:
    eta = float(cfg.scalar("eta", 2.0))
    mode = str(cfg.scalar("mode", "sweep"))
    delta = float(cfg.scalar("Delta", 1.0))
    w_bound = float(cfg.scalar("W", 0.0))
    horizon = int(cfg.scalar("horizon", 400))
    if mode == "trajectory":
        alpha = float(cfg.scalar("alpha"))
        p = float(cfg.scalar("p"))
        n = int(cfg.scalar("n"))
        plant = PlantParams(alpha=alpha, Delta=delta, W=w_bound, eta=eta)
        traj = simulate_closed_loop(plant, p, n, horizon, cfg.seed)
        rows = [{"step": m, "z": float(traj.z[m]),
                 "z_hat": float(traj.z_hat[m]) if m < horizon else None,
                 "u": float(traj.u[m]) if m < horizon else None,
                 "prefix_len": int(traj.prefix_len[m]) if m < horizon else None,
                 "prefix_ok": bool(traj.prefix_ok[m]) if m < horizon else None}
                for m in range(horizon + 1)]
        return {"csv": {"control_trajectory": (
            ["step", "z", "z_hat", "u", "prefix_len", "prefix_ok"], rows)},
            "extra": {"sup_abs_z": traj.sup_abs_z,
                      "moment_ratio": traj.moment_ratio(eta)}}
    if mode != "sweep":
        raise ConfigError(f"unknown control mode {mode!r}")
    alphas = [float(a) for a in cfg.grid("alpha")]
    ps = [float(p) for p in cfg.grid("p")]
    ns = [int(n) for n in cfg.grid("n")]
    sweep = stability_sweep(alphas, ps, ns, eta, cfg.trials, horizon, cfg.seed,
                            Delta=delta, W=w_bound)
    return {
        "csv": {
            "control_sweep": (
                ["alpha", "p", "n", "stable", "sup_abs_z", "moment_ratio", "trials"],
                sweep["rows"]),
            "control_frontier": (
                ["p", "alpha_empirical", "alpha_analytic", "alpha_capacity"],
                sweep["frontier"]),
        },
        "extra": {"eta": eta},
    }


# ----------------------------------------------------------------------
# entry point used by the CLI
# ----------------------------------------------------------------------

_RUNNERS = {
    "exponent-sweep": run_exponent_sweep,
    "alpha-vs-p": run_alpha_vs_p,
    "error-prob": run_error_prob,
    "control-sim": run_control_sim,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> list[str]:
    """Run one experiment and write CSV + metadata; returns written paths."""
    out_dir = out_dir or cfg.out
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    result = _RUNNERS[cfg.experiment](cfg)
    timing = time.perf_counter() - t0
    written = []
    for name, (fields, rows) in result["csv"].items():
        path = os.path.join(out_dir, f"{name}.csv")
        write_csv(path, fields, rows, cfg)
        written.append(path)
    meta_path = os.path.join(out_dir, f"{cfg.experiment}.meta.json")
    write_meta(meta_path, cfg, timing, result.get("extra"))
    written.append(meta_path)
    return written
