# -*- coding: utf-8 -*-
"""Acceptance runs for `dipsharp`: the long checks that `runtests.py` skips.

Usage::

    python3 acceptance.py                      # everything; hours
    python3 acceptance.py conservation theory  # a subset
    python3 acceptance.py --jobs 8 --out runs/acceptance charge-sharpening dipole-sharpening

Each check is a testset; the exit status is 1 if any of them failed.
Checks that run the harness leave their run directories under ``--out``
(default: a temporary directory).
"""

import argparse
import math
import os
import sys
import tempfile

import numpy as np
import pandas as pd

from dipsharp import log
from dipsharp.collections import unbox
from dipsharp.conditions import handlers, muffle, proceed
from dipsharp.config import RunConfig, with_overrides
from dipsharp.exact import (ProbState, initial_state, renyi2_charge, renyi2_dipole, replay,
                            run_trajectory, charge_variance)
from dipsharp.fitting import classify_decay, fit_scaling
from dipsharp.gates import (GateFamily, connected_components, connectivity_report, kernel_apply)
from dipsharp.harness import rerun_manifest, run, sweep
from dipsharp.lattice import LatticeGeometry, charges, dipoles
from dipsharp.particles import DegenerateWeights, ParticleEnsemble, run_pf_trajectory
from dipsharp.test.fixtures import session, testset, test, tests_errored, tests_failed
from dipsharp.theory import (QuadratureNotConverged, TheoryParams, correlator_profile_theory,
                             gamma_critical, ln_renyi2_integral, luttinger_K_at)

def _sector_masses(state):
    keys = charges(state.configs) * 10000 + dipoles(state.configs, state.geometry)
    uniq, inverse = np.unique(keys, return_inverse=True)
    return dict(zip(uniq.tolist(), np.bincount(inverse.ravel(), weights=state.probs)))

def conservation(args):
    """10**5 random window gates conserve every (Q, P) sector mass."""
    geometry = LatticeGeometry(10)
    rng = np.random.default_rng(1)
    for family in GateFamily:
        kernel = connected_components(family)
        state = initial_state(geometry, "charge-band")
        before = _sector_masses(state)
        worst = 0.0
        for k in range(50000):
            start = int(rng.integers(0, geometry.n_sites - 4))
            state = kernel_apply(state, range(start, start + 5), kernel)
            if k % 1000 == 0:
                after = _sector_masses(state)
                test(set(after) == set(before), "support of the sectors at step {}".format(k))
                worst = max(worst, max(abs(after[s] - before[s]) for s in before))
        test(worst < 1e-12, "{}: worst sector drift {:.3g}".format(family.value, worst))
        test(abs(state.total() - 1.0) < 1e-12)

    kernel = connected_components(GateFamily.MINIMAL_PAIR)
    for g in (0, 1):
        test(len(kernel.component(0b01010 | (g << 2))) == 2)

def _hop_matrix(n_sites, src, dst):
    dim = 1 << n_sites
    H = np.zeros((dim, dim))
    for c in range(dim):
        if (c >> src) & 1 and not (c >> dst) & 1:
            H[c ^ ((1 << src) | (1 << dst)), c] = 1.0
    return H

def _dense_renyi2(probs, O):
    R = np.diag(probs)
    return np.trace(R @ O @ R @ O.T) / np.trace(R @ R)

def renyi2_oracle(args):
    """Renyi-2 correlators against dense operator algebra on the diagonal ensemble."""
    rng = np.random.default_rng(2)
    worst = 0.0
    for L in (4, 5, 6):
        geometry = LatticeGeometry(L)
        for _ in range(50):
            probs = rng.random(1 << L) * (rng.random(1 << L) < 0.6)
            probs[rng.integers(0, 1 << L)] += 0.1
            probs /= probs.sum()
            state = ProbState(geometry, np.arange(1 << L), probs)
            full = np.zeros(1 << L)
            full[state.configs] = state.probs

            x, y = sorted(rng.choice(L, size=2, replace=False))
            O = _hop_matrix(L, y, x) + _hop_matrix(L, x, y)
            worst = max(worst, abs(renyi2_charge(state, x, y) - _dense_renyi2(full, O)))

            if L >= 5:
                bx, by = 0, L - 2
                fwd = _hop_matrix(L, bx + 1, bx) @ _hop_matrix(L, by, by + 1)
                bwd = _hop_matrix(L, by + 1, by) @ _hop_matrix(L, bx, bx + 1)
                worst = max(worst, abs(renyi2_dipole(state, bx, by) - _dense_renyi2(full, fwd + bwd)))
    test(worst < 1e-10, "worst deviation {:.3g}".format(worst))

def martingale(args):
    """Posterior mean of Q is a martingale; posterior Var(Q) a supermartingale."""
    geometry = LatticeGeometry(10)
    rng = np.random.default_rng(3)
    start = initial_state(geometry, "charge-band", band_width=2)
    horizon, n_traj = 10, 400
    means = np.empty((n_traj, horizon + 1))
    variances = np.empty((n_traj, horizon + 1))
    measured = 0
    for i in range(n_traj):
        result = run_trajectory(start, horizon, 0.3, rng, snapshot_every=1)
        measured += len(result.record)
        for layer, state in result.snapshots.items():
            means[i, layer] = state.probs @ state.charges()
            variances[i, layer] = charge_variance(state)
    test(measured >= 10 ** 4, "{} measurements".format(measured))
    drift = means - means[:, :1]
    sem = drift.std(axis=0, ddof=1) / np.sqrt(n_traj)
    test(np.all(np.abs(drift.mean(axis=0)) <= 3 * sem + 1e-12))
    steps = np.diff(variances, axis=1)
    sem = steps.std(axis=0, ddof=1) / np.sqrt(n_traj)
    test(np.all(steps.mean(axis=0) <= 3 * sem + 1e-12))

def _pf_against_exact(n_particles, seed, horizon):
    geometry = LatticeGeometry(10)
    rng = np.random.default_rng(seed)
    start = initial_state(geometry, "charge-band")
    with handlers((DegenerateWeights, muffle)):
        pf = run_pf_trajectory(ParticleEnsemble.from_state(start, n_particles, rng), horizon, 0.2, rng)
    exact = []
    replay(start, pf.record, horizon, observe=lambda layer, s: exact.append(charge_variance(s)))
    frame = pf.to_frame()
    # after a redraw the filter no longer tracks the record; compare up to the first one
    flagged = frame["degeneracy_flags"].to_numpy() == 1
    stop = int(np.argmax(flagged)) if flagged.any() else len(flagged)
    return (frame["var_Q"].to_numpy()[:stop], np.nan_to_num(frame["var_Q_err"].to_numpy())[:stop],
            np.array(exact)[:stop])

def particle_filter(args):
    """Filter Var(Q) tracks the exact posterior within 3 jackknife errors; the error shrinks with N.

    Only layers before the filter's first degeneracy are compared.
    """
    estimate, err, exact = _pf_against_exact(3 * 10 ** 4, 4, 200)
    test(len(estimate) > 100, "filter degenerate after {} layers".format(len(estimate)))
    test(np.all(np.abs(estimate - exact) <= 3 * err))
    errors = []
    for n in (10 ** 2, 10 ** 3, 10 ** 4):
        runs = [_pf_against_exact(n, seed, 50) for seed in range(5)]
        errors.append(np.mean([np.abs(e - x).mean() for e, _, x in runs]))
    test(errors[0] > errors[1] > errors[2], "mean errors {}".format(errors))

def _base(args, name, **sections):
    return with_overrides(RunConfig(), out=os.path.join(args.out, name), jobs=args.jobs, **sections)

def _median(value):
    return np.inf if value is None or pd.isna(value) else float(value)

def charge_sharpening(args):
    """Charge sharpens in ~log L at gamma = 0.3."""
    config = _base(args, "charge_sharpening",
                   measurement={"gamma": 0.3}, initial={"recipe": "charge-band", "band_width": 2},
                   run={"horizon": 400, "trajectories": 200, "observables": ("var_q", "var_p")},
                   sweep={"lengths": (8, 10, 12, 14, 16), "gammas": (0.3,)})
    frame = sweep(config)
    medians = [_median(v) for v in frame["t_sharp_charge"]]
    test(all(np.isfinite(medians)), "medians {}".format(medians))
    report = fit_scaling(frame["L"].to_numpy(dtype=float), medians, forms=("log", "linear"))
    test(report.residual_ratio("linear", "log") >= 2.0, repr(report))

def dipole_sharpening(args):
    """Dipole sharpening slows with L much more at small gamma."""
    config = _base(args, "dipole_sharpening",
                   initial={"recipe": "dipole-band"},
                   run={"horizon": 2000, "trajectories": 100, "observables": ("var_q", "var_p")},
                   sweep={"lengths": (8, 16), "gammas": (0.05, 0.8)})
    frame = sweep(config)

    def growth(gamma):
        sub = frame[frame["gamma"] == gamma].set_index("L")
        return _median(sub.loc[16, "t_sharp_dipole"]) / _median(sub.loc[8, "t_sharp_dipole"])
    small, large = growth(0.05), growth(0.8)
    test(small >= 1.5 * large, "growth ratios {:.3g} (gamma 0.05) and {:.3g} (gamma 0.8)".format(small, large))

def correlators(args):
    """Fuzzy-phase correlators decay as 1/x**2 (dipole) and 1/x**4 (charge)."""
    config = _base(args, "correlators",
                   lattice={"lengths": (16,)}, measurement={"gamma": 0.05},
                   run={"horizon": 400, "trajectories": 100,
                        "observables": ("var_q", "var_p", "correlators")})
    run(config)
    frame = pd.read_csv(os.path.join(config.run.out, "correlators.csv")).dropna(subset=["charge", "dipole"])
    for observable, expected, tolerance in (("dipole", -2.0, 0.7), ("charge", -4.0, 1.0)):
        report = fit_scaling(frame["separation"].to_numpy(dtype=float), frame[observable].to_numpy(),
                             forms=("power",), space="log")
        test(abs(report.best.a - expected) <= tolerance,
             "{} exponent {:.3g}".format(observable, report.best.a))

def theory(args):
    """Theory correlators: exponents, decay classes, closed forms and grid refinement."""
    massless = TheoryParams(lambda1=1.0, m_d=0.0, cutoff=50.0)
    rs = np.geomspace(10.0, 100.0, 20)
    for observable, n, expected, tolerance in (("dipole", 2, -2.0, 0.2), ("charge", 4, -4.0, 0.3)):
        values = correlator_profile_theory(rs, 0.0, massless, observable)
        c = classify_decay(rs, values)
        test(c.form == "power")
        test(abs(c.report["power"].a - expected) <= tolerance, "{} exponent {:.4g}".format(observable, c.report["power"].a))
        # at t = 0, m_d = 0: 2 pi (-1)**(n/2) (n-1)! / r**n
        closed = 2.0 * np.pi * (-1) ** (n // 2) * math.factorial(n - 1) / rs ** n
        test(np.allclose(values, closed, rtol=1e-6, atol=0.0), observable)

    # Renyi-2 quadrature: doubling the Gauss-Legendre order and grading must not move the value
    gapped = TheoryParams(lambda1=1.0, m_d=1.0, cutoff=20.0)
    refined = gapped.model_copy(update={"nodes": 2 * gapped.nodes, "levels": gapped.levels + 10})
    with handlers((QuadratureNotConverged, proceed)):
        for x, observable in ((4.0, "dipole"), (16.0, "dipole"), (4.0, "charge")):
            coarse = ln_renyi2_integral(x, 0.0, gapped, observable)
            fine = ln_renyi2_integral(x, 0.0, refined, observable)
            test(abs(fine - coarse) <= gapped.tolerance * abs(fine),
                 "{} x={}: {:.6g} vs {:.6g}".format(observable, x, coarse, fine))

    massive = TheoryParams(lambda1=1.0, m_d=0.1, cutoff=50.0)
    with handlers((QuadratureNotConverged, proceed)):
        for observable in ("dipole", "charge"):
            values = correlator_profile_theory(rs, 0.0, massive, observable)
            test(classify_decay(rs, values).form == "exponential", observable)

def bkt(args):
    """K(gamma_c) = 2, bracketed by a dense scan."""
    gammas = np.logspace(-3, 3, 10 ** 6)
    for J, E_b in ((16.0 / 9.0, 0.0), (1.0, 0.5), (4.0, 1.0)):
        gc = gamma_critical(J, E_b)
        test(abs(luttinger_K_at(gc, J, E_b) - 2.0) < 1e-10)
        K = luttinger_K_at(gammas, J, E_b)
        i = int(np.flatnonzero(np.diff(np.sign(K - 2.0)))[0])
        test(gammas[i] <= gc <= gammas[i + 1], "J={} E_b={}: {} not in scan bracket".format(J, E_b, gc))
    test(abs(luttinger_K_at(1.0, 16.0 / 9.0, 0.0) - 5.5919) < 1e-3)

def fragmentation(args):
    """Connectivity of every dipole sector at L = 10, Q = 5; fragmented ones are listed."""
    geometry = LatticeGeometry(10)
    for family in GateFamily:
        rows = connectivity_report(geometry, 5, family)
        test(sum(r.n_configurations for r in rows) == 252)
        fragmented = [(r.P, r.sizes) for r in rows if r.n_components > 1]
        print("{}: {} of {} sectors fragmented {}".format(family.value, len(fragmented), len(rows), fragmented))

def reproducibility(args):
    """Exact runs replay byte for byte; filter runs too at a fixed worker count."""
    config = _base(args, "repro_exact", lattice={"lengths": (12,)},
                   run={"horizon": 100, "trajectories": 20,
                        "observables": ("var_q", "var_p", "entropy", "correlators", "renyi2")})
    run(config)
    _, mismatches = rerun_manifest(os.path.join(config.run.out, "manifest.json"),
                                   os.path.join(args.out, "repro_exact_again"))
    test(mismatches == [], "mismatched files {}".format(mismatches))

    pf = _base(args, "repro_pf", lattice={"lengths": (30,)},
               run={"engine": "pf:2000", "horizon": 100, "trajectories": 8})
    first = run(pf)
    second = run(with_overrides(pf, out=os.path.join(args.out, "repro_pf_again")))
    test(first.files == second.files)

CHECKS = {"conservation": conservation,
          "renyi2": renyi2_oracle,
          "martingale": martingale,
          "particle-filter": particle_filter,
          "charge-sharpening": charge_sharpening,
          "dipole-sharpening": dipole_sharpening,
          "correlators": correlators,
          "theory": theory,
          "bkt": bkt,
          "fragmentation": fragmentation,
          "reproducibility": reproducibility}

def main(argv=None):
    parser = argparse.ArgumentParser(description="dipsharp acceptance runs")
    parser.add_argument("checks", nargs="*", metavar="CHECK",
                        help="which checks to run (default: all); one of {}".format(", ".join(CHECKS)))
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for harness runs")
    parser.add_argument("--out", help="directory for run outputs (default: temporary)")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    args = parser.parse_args(argv)
    unknown = sorted(set(args.checks) - set(CHECKS))
    if unknown:
        parser.error("unknown checks {}".format(", ".join(unknown)))
    log.setup(args.verbose)

    with tempfile.TemporaryDirectory() as tmp:
        args.out = args.out or tmp
        with session("dipsharp acceptance"):
            for name in args.checks or list(CHECKS):
                with testset(name):
                    CHECKS[name](args)
    return (unbox(tests_failed) + unbox(tests_errored)) == 0

if __name__ == '__main__':
    if not main():
        sys.exit(1)  # pragma: no cover
