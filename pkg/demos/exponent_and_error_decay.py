"""From the exponent solver to a measured error curve and its figure.

Solves the anytime exponent for a few channel budgets, runs a small
Monte Carlo of the codec's prefix-error decay at (n = 10, p = 0.1), and
renders the decay figure with the fitted exponential overlay.
"""

import json
import pathlib
import tempfile

from causalpm import NoPositiveExponent, capacity, rate_bound, solve_exponent
from causalpm.config import ExperimentConfig
from causalpm.experiments import run_experiment

p = 0.1
print(f"BSC crossover p = {p}, capacity C = {capacity(p):.4f} bits/use")
print("budget n :  anytime exponent beta(n), maximizer lambda*(n)")
for n in (2, 5, 7, 10, 20, 40):
    try:
        sol = solve_exponent(n, p)
        print(f"   n = {n:2d} :  beta = {sol.beta:.5f}   lambda* = {sol.lambda_star:.4f}")
    except NoPositiveExponent:
        print(f"   n = {n:2d} :  no positive exponent (1/n exceeds sup psi)")
rb = rate_bound(p, eta=2.0)
print(f"stabilizable-rate fixed point R(p) = {rb.rate:.4f} -> gain 2**R = {2**rb.rate:.4f}\n")

workdir = pathlib.Path(tempfile.mkdtemp(prefix="causalpm_demo_"))
cfg = ExperimentConfig(
    "error-prob", seed=7, trials=3000, workers=2, out=str(workdir),
    params={"p": p, "n": 10, "schedule": "periodic", "horizon": 60, "j": [1]},
)
paths = run_experiment(cfg)
print("wrote:", *paths, sep="\n  ")

try:
    from figplots import PlotSpec, plot_figure
except ImportError:
    print("figplots not installed; skipping the figure")
else:
    spec_path = workdir / "decay.spec.json"
    spec_path.write_text(json.dumps({
        "kind": "error_decay",
        "csv": str(workdir / "error_prob.csv"),
        "out": str(workdir / "error_decay.png"),
        "title": f"first-bit error decay, n=10, p={p}",
    }))
    print("figure:", plot_figure(PlotSpec.from_file(spec_path)))
