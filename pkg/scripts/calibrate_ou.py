"""Calibrate the OU bath so the Hahn-echo decay time hits a target.

Solves for the stationary width sigma_dyn (at fixed correlation time) such that
the exact N_pi = 1 coherence exp(-var/2) falls to 1/e at the target T2, then
prints T2(N_pi) and the implied power-law exponent for the calibrated bath.

    python scripts/calibrate_ou.py --t2 2.93 --tau-corr 1000
"""
import argparse

import numpy as np
from scipy.optimize import brentq

from spincool.analysis import fit_powerlaw
from spincool.bath import cpmg_coherence


def echo_time(n_pi, sigma_dyn, tau_corr, hi=1e3):
    """Total time (us) at which the CPMG coherence reaches 1/e."""
    return brentq(lambda t: cpmg_coherence([t], n_pi, sigma_dyn, tau_corr)[0] - np.exp(-1), 1e-6, hi)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--t2", type=float, default=2.93, help="target echo T2 (us)")
    p.add_argument("--tau-corr", type=float, default=1000.0, help="OU correlation time (us)")
    p.add_argument("--n-pi", type=int, nargs="+", default=[1, 2, 4, 8, 16, 20])
    args = p.parse_args()

    sigma = brentq(lambda s: echo_time(1, s, args.tau_corr) - args.t2, 0.01, 100.0)
    print(f"sigma_dyn = {sigma:.4f} MHz at tau_corr = {args.tau_corr:g} us")
    pts = []
    for n in args.n_pi:
        t2 = echo_time(n, sigma, args.tau_corr)
        pts.append((n, t2))
        print(f"N_pi = {n:2d}: T2 = {t2:.3f} us")
    pl = fit_powerlaw(pts)
    print(f"gamma = {pl.gamma:.3f} +- {pl.gamma_err:.3f}")


if __name__ == "__main__":
    main()
