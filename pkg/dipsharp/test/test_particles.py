# -*- coding: utf-8 -*-

from .fixtures import session, testset, test, test_raises, test_signals

import numpy as np

from ..conditions import handlers, muffle
from ..dynassign import dyn
from ..lattice import LatticeGeometry, charges, dipoles
from ..exact import (ProbState, TrajectoryResult, initial_state, replay, measure_projective,
                     charge_variance, dipole_variance, density_covariance)
from ..particles import (ParticleEnsemble, FilterStats, DegenerateWeights,
                         sample_initial, effective_sample_size, systematic_resample,
                         pf_step_unitary, pf_measure, pf_step_layer, pf_estimates,
                         run_pf_trajectory)

def runtests():
    g4 = LatticeGeometry(4)
    g10 = LatticeGeometry(10)

    with testset("ensemble"):
        test_raises(ValueError, lambda: ParticleEnsemble(g4, []))
        test_raises(ValueError, lambda: ParticleEnsemble(g4, [1, 2], [1.0]))
        test_raises(ValueError, lambda: ParticleEnsemble(g4, [1, 2], [-1.0, 2.0]))
        ens = ParticleEnsemble(g4, [1, 2, 4], [1, 1, 2], reference=8)
        test(np.allclose(ens.weights, [0.25, 0.25, 0.5]))
        test(len(ens) == 3 and ens.reference == 8)
        moved = ens.evolve(reference=1)
        test(moved.reference == 1 and np.array_equal(moved.particles, ens.particles))
        moved.stats.resample_count += 1
        test(ens.stats.resample_count == 0)
        test(FilterStats(3.0, 2, [5, 1, 5]).as_dict() == {"ess_min": 3.0, "resample_count": 2,
                                                         "degenerate_layers": [1, 5]})
        rng = np.random.default_rng(0)
        drawn = ParticleEnsemble.from_state(ProbState.delta(g4, "0110"), 16, rng)
        test(len(drawn) == 16 and np.all(drawn.particles == 0b0110) and drawn.reference == 0b0110)

    with testset("weights and resampling"):
        test(effective_sample_size(np.full(8, 0.125)) == 8.0)
        test(effective_sample_size([0.0, 1.0, 0.0]) == 1.0)
        rng = np.random.default_rng(1)
        test(systematic_resample([0.0, 1.0, 0.0, 0.0], rng).tolist() == [1, 1, 1, 1])
        test(systematic_resample(np.full(4, 0.25), rng).tolist() == [0, 1, 2, 3])
        test(sorted(systematic_resample([0.5, 0.25, 0.25, 0.0], rng).tolist()) == [0, 0, 1, 2])
        # expected copies are N w_i, up to one
        w = rng.random(50)
        counts = np.bincount(systematic_resample(w, rng), minlength=50)
        test(np.all(np.abs(counts - 50 * w / w.sum()) < 1.0 + 1e-9))
        # unbiased: averaged over offsets the copies are N w_i, and the resampled set is uniformly weighted
        trials = np.mean([np.bincount(systematic_resample(w, rng), minlength=50) for _ in range(4000)], axis=0)
        test(np.allclose(trials, 50 * w / w.sum(), atol=0.05))
        skewed = ParticleEnsemble(g10, np.arange(50), w ** 8)
        test(effective_sample_size(skewed.weights) < 25)
        idx = systematic_resample(skewed.weights, rng)
        test(len(idx) == 50 and set(idx.tolist()) <= set(np.flatnonzero(skewed.weights > 0).tolist()))
        with dyn.let(resample_threshold=1.0):
            _, post = pf_measure(skewed.evolve(reference=0), 9, rng=rng)
        test(post.stats.resample_count == 1 and abs(effective_sample_size(post.weights) - 50.0) < 1e-9)

    with testset("initial sampling"):
        rng = np.random.default_rng(2)
        ens = sample_initial(g10, "dipole-band", 500, rng)
        test(len(ens) == 500 and np.all(charges(ens.particles) == 5))
        test(bin(ens.reference).count("1") == 5)
        test(len(np.unique(ens.particles)) > 100)
        band = sample_initial(g10, "charge-band", 2000, rng, band_width=1)
        qs = charges(band.particles)
        test(set(np.unique(qs).tolist()) == {4, 5, 6})
        # 252 / 672 of the mass sits at Q = 5
        test(abs(np.mean(qs == 5) - 252 / 672) < 0.05)
        test(np.all(sample_initial(g10, "delta", 10, rng, bits="0101010101").particles == 0b1010101010))
        test(np.all(sample_initial(g10, "uniform", 100, rng).particles < 1 << 10))
        test_raises(ValueError, lambda: sample_initial(g10, "delta", 10, rng))
        test_raises(ValueError, lambda: sample_initial(g10, "neel", 10, rng))

    with testset("gates on particles"):
        rng = np.random.default_rng(3)
        ens = sample_initial(g10, "charge-band", 300, rng)
        before = np.append(ens.particles, ens.reference)
        for layer in range(10):
            ens = pf_step_unitary(ens, layer, "full-mixing", rng)
        after = np.append(ens.particles, ens.reference)
        test(np.array_equal(charges(after), charges(before)))
        test(np.array_equal(dipoles(after, g10), dipoles(before, g10)))
        test(not np.array_equal(after, before))
        test(np.allclose(ens.weights, 1 / 300))
        frozen = pf_step_unitary(ens, 0, "full-mixing", rng, rate=0.0)
        test(np.array_equal(frozen.particles, ens.particles) and frozen.reference == ens.reference)

    with testset("measurement update"):
        rng = np.random.default_rng(4)
        ens = ParticleEnsemble(g4, [0b0001, 0b0010, 0b0011, 0b0000], reference=0b0001)
        with dyn.let(resample_threshold=0.0):
            outcome, post = pf_measure(ens, 0, rng=rng)
        test(outcome == 1)
        test(np.allclose(post.weights, [0.5, 0.0, 0.5, 0.0]))
        test(post.stats.ess_min == 2.0)
        test(np.allclose(ens.weights, 0.25))

        lonely = ParticleEnsemble(g4, [0b0001, 0b0010, 0b0000, 0b0100], reference=0b0001)
        outcome, post = pf_measure(lonely, 0, rng=rng)
        test(post.stats.resample_count == 1 and np.allclose(post.weights, 0.25))
        test(np.all((post.particles & 1) == 1))

        outcome, weak = pf_measure(ens, 0, "weak", 4.0, rng)
        test(isinstance(outcome, float) and abs(weak.weights.sum() - 1.0) < 1e-12)
        test_raises(ValueError, lambda: pf_measure(ens, 0, "weak", 0.0, rng))
        test_raises(ValueError, lambda: pf_measure(ens, 0, "strong", 1.0, rng))

    with testset("degenerate weights"):
        rng = np.random.default_rng(5)
        hopeless = ParticleEnsemble(g4, [0b0000, 0b0010], reference=0b0001)
        test_signals(DegenerateWeights, lambda: pf_measure(hopeless, 0, rng=rng, layer=7))

        def redrawn(ensemble, site, layer):
            with handlers((DegenerateWeights, muffle)):
                return pf_measure(ensemble, site, rng=rng, layer=layer)
        outcome, post = redrawn(hopeless, 0, 7)
        test(outcome == 1 and np.all((post.particles[post.weights > 0] & 1) == 1))
        test(post.stats.degenerate_layers == [7])

        # a stuck ensemble must fall back to the prior spread, not to the reference
        rng = np.random.default_rng(13)
        prior = sample_initial(g10, "charge-band", 4000, rng)
        stuck = prior.evolve(particles=np.full(4000, 0b0000011110), reference=0b0000011111)
        outcome, post = redrawn(stuck, 0, 0)
        _, exact = measure_projective(initial_state(g10, "charge-band"), 0, outcome=1)
        test(outcome == 1 and abs(charge_variance(exact) - 0.609375) < 1e-12)
        test(abs(pf_estimates(post)["var_q"] - charge_variance(exact)) < 0.1)
        test(np.all((post.particles[post.weights > 0] & 1) == 1))
        test(len(np.unique(post.particles)) > 1)

        # handed over from the exact engine: redraw from that state
        start = initial_state(g10, "dipole-band")
        handed = ParticleEnsemble.from_state(start, 500, rng).evolve(particles=np.full(500, 0b0000011110),
                                                                     reference=0b0000011111)
        _, post = redrawn(handed, 0, 3)
        test(np.all(charges(post.particles) == 5))
        test(pf_estimates(post)["var_p"] > 0.0)

        # a delta prior that excludes the outcome: the measured bit is forced
        pinned = sample_initial(g4, "delta", 8, rng, bits="0000").evolve(reference=0b0001)
        _, post = redrawn(pinned, 0, 1)
        test(np.all(post.particles == 0b0001))

    with testset("estimates"):
        ens = ParticleEnsemble(g4, [0b0011, 0b0110], reference=0b0011)
        est = pf_estimates(ens, blocks=2)
        test(est["var_q"] == 0.0 and abs(est["var_p"] - 1.0) < 1e-12)
        test(abs(est["entropy"] - np.log(2)) < 1e-12 and est["ess"] == 2.0)
        test("density_covariance" not in est)
        est = pf_estimates(ens, blocks=2, covariance=True)
        exact = density_covariance(ProbState(g4, ens.particles, ens.weights))
        test(np.allclose(est["density_covariance"], exact))

        planar = ParticleEnsemble(LatticeGeometry((2, 2)), [0b0001, 0b1000])
        est = pf_estimates(planar)
        test(est["var_p"].shape == (2,) and np.allclose(est["var_p"], [0.25, 0.25]))

    with testset("trajectories"):
        rng = np.random.default_rng(6)

        def run(*args, **kwargs):
            with handlers((DegenerateWeights, muffle)):
                return run_pf_trajectory(*args, **kwargs)

        ens = sample_initial(g10, "charge-band", 400, rng)
        result = run(ens, 8, 0.2, rng)
        frame = result.to_frame()
        test(frame["layer"].tolist() == list(range(9)))
        test({"var_Q_err", "N_particles", "ESS_min", "resample_count", "degeneracy_flags"} <= set(frame.columns))
        test(np.all(frame["N_particles"] == 400))
        test(set(result.filter_stats) == {"ess_min", "resample_count", "degenerate_layers"})
        test(len(result.final_ensemble) == 400)
        test(int(frame["n_measurements"].sum()) == len(result.record))

        # enough particles to hold the reference's configuration: no degeneracy, sharp after one layer
        sharp = run(sample_initial(g10, "charge-band", 20000, rng), 2, 1.0, rng)
        test(sharp.filter_stats["degenerate_layers"] == [])
        test(sharp.t_sharp_charge == 1 and sharp.t_sharp_dipole == 1)
        # too few: redraws keep the variance up, and flagged layers never count as sharp
        starved = run(sample_initial(g10, "charge-band", 5, rng), 3, 1.0, rng)
        flags = starved.to_frame()["degeneracy_flags"]
        test(len(starved.filter_stats["degenerate_layers"]) > 0)
        test(starved.t_sharp_charge is None or flags[starved.t_sharp_charge] == 0)

        _, events = pf_step_layer(ens, 0, 0.0, rng=rng)
        test(events == [])
        test_raises(ValueError, lambda: pf_step_layer(ens, 0, -0.1, rng=rng))

        earlier = TrajectoryResult(g10)
        for layer in range(4):
            earlier.append_row(layer, 1.0, 2.0, 0.5)
        continued = run(ens, 5, 0.1, rng, start_layer=3, result=earlier)
        test(continued is earlier and continued.layers == [0, 1, 2, 3, 4, 5])
        test(np.isnan(continued.to_frame()["ESS_min"][0]))

    with testset("agreement with the exact engine"):
        # the exact engine replays the filter's own record
        g8 = LatticeGeometry(8)
        rng = np.random.default_rng(20240)
        start = initial_state(g8, "charge-band")

        def filtered():
            with handlers((DegenerateWeights, muffle)):
                return run_pf_trajectory(ParticleEnsemble.from_state(start, 4000, rng), 5, 0.1, rng)
        pf = filtered()
        final = replay(start, pf.record, 5)
        est = pf_estimates(pf.final_ensemble)
        q_err, p_err = np.nan_to_num([est["var_q_err"], est["var_p_err"]])
        test(abs(est["var_q"] - charge_variance(final)) < 0.1 + 5 * q_err)
        test(abs(est["var_p"] - dipole_variance(final)) < 0.25 * dipole_variance(final) + 5 * p_err)

if __name__ == '__main__':  # pragma: no cover
    with session(__file__):
        runtests()
