"""Stabilizing an unstable plant over the noisy channel, and failing to.

First a gain chosen inside the stabilizable region (90% of the
bound from the exponent solver): the state contracts geometrically even
though the channel flips 5% of the bits.  Then a gain whose information
demand exceeds the capacity of the channel budget: the loop must diverge.
"""

import numpy as np

from causalpm import PlantParams, simulate_closed_loop, solve_exponent
from causalpm.exponents import capacity

p, n, eta = 0.05, 10, 2.0
beta = solve_exponent(n, p).beta
log_gain = 0.9 * min(1.0 / n, beta / eta)
plant = PlantParams(alpha=2.0 ** log_gain, Delta=1.0, W=0.0, eta=eta)
print(f"stabilizable region: log2 gain <= min(1/n, beta/eta) = {min(1/n, beta/eta):.4f}")
print(f"running alpha = {plant.alpha:.4f} over BSC({p}) with n = {n} uses per step")
traj = simulate_closed_loop(plant, p, n, horizon=400, master_seed=99)
print(f"  sup |Z| = {traj.sup_abs_z:.4f}  (ceiling 1e3)")
print(f"  second-half/first-half mean-square ratio = {traj.moment_ratio(eta):.3g}")
print(f"  decoded prefix correct on {traj.prefix_ok.mean():.1%} of steps")
snap = [0, 5, 10, 20, 50, 100, 200, 399]
print("  |Z| snapshots:", ", ".join(f"t={m}: {abs(traj.z[m]):.2e}" for m in snap))

p_bad = 0.45
alpha_bad = 2.0 ** (1.5 / n)
need = np.log2(alpha_bad)
have = capacity(p_bad)  # per use; n * have per plant step
print(f"\nimpossible region: alpha = {alpha_bad:.4f} needs {need:.3f} bits/step, "
      f"channel budget carries at most {n * have:.3f}")
bad = simulate_closed_loop(PlantParams(alpha=alpha_bad, Delta=1.0), p_bad, n,
                           horizon=400, master_seed=99)
print(f"  sup |Z| = {bad.sup_abs_z:.3e}  -> judged unstable: "
      f"{not bad.is_stable(eta, 1.0)}")
