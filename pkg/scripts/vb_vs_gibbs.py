"""Compare the variational fit with the Gibbs reference on one small simulated panel.

    python scripts/vb_vs_gibbs.py --n 10 --T 5 --iterations 20000 --burn-in 5000
"""
import argparse

import numpy as np
from scipy.stats import norm

from starnet.model import StarModelSpec
from starnet.simulate import SimConfig, sim_study_truth, simulate_star
from starnet.vb import FitOptions, fit
from starnet.vb.gibbs import gibbs_reference_fit


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--T", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--iterations", type=int, default=20_000)
    ap.add_argument("--burn-in", type=int, default=5_000)
    args = ap.parse_args()

    spec = StarModelSpec()
    truth = sim_study_truth(True)
    net, cov, _ = simulate_star(SimConfig(n=args.n, T=args.T, seed=args.seed, params=truth, spec=spec))
    print("edges per time point:", [int(net[t].sum()) for t in range(net.T + 1)])
    vb = fit(net, cov, spec, FitOptions(max_iterations=5000))
    gb = gibbs_reference_fit(net, cov, spec, iterations=args.iterations, burn_in=args.burn_in, seed=args.seed)

    z = norm.ppf(0.975)
    true = np.r_[truth.beta, truth.theta]
    print(f"{'coefficient':<16}{'truth':>8}{'VB mean':>10}{'Gibbs mean':>12}{'|diff|':>9}{'VB width':>10}{'Gibbs width':>13}")
    for k, nm in enumerate(vb.names):
        print(f"{nm:<16}{true[k]:>8.3f}{vb.coef_mean[k]:>10.3f}{gb.mean[k]:>12.3f}"
              f"{abs(vb.coef_mean[k] - gb.mean[k]):>9.3f}{2 * z * vb.coef_sd[k]:>10.3f}{gb.upper[k] - gb.lower[k]:>13.3f}")
    print("VB variance components:", vb.variance_components)
    print("Gibbs variance components:", gb.variance_components)


if __name__ == "__main__":
    main()
