# -*- coding: utf-8 -*-
"""Particle filter for the measurement-conditioned state on large lattices.

The exact engine stores the whole posterior; here the posterior is a
weighted sample of configurations (the particles). The measurement record
is produced by one extra configuration, the *reference*, which plays the
physical system: it evolves under the same stochastic gate kernel as every
particle, and each measurement outcome is read off (projective) or sampled
around (weak) its occupation. Averaged over the reference trajectory, the
outcomes therefore follow Born statistics, and the weighted particles
estimate the conditional distribution given the record.

One layer:

  1. `pf_step_unitary`: every particle and the reference independently
     resample the state of each scheduled window uniformly within its
     window component (an exact draw from the averaged gate).
  2. `pf_measure` for each measured site: multiply the weights by the
     likelihood of the outcome, renormalize, and resample systematically
     when the effective sample size drops below
     ``dyn.resample_threshold * N``.

When every weight vanishes (a projective outcome no particle agrees with),
`DegenerateWeights` is signaled with `warn` and the particles are drawn
afresh from the ensemble's prior, then conditioned on that outcome. The
gates conserve Q and P, so the prior's sector spread is the posterior
without the lost part of the record: estimates after a degeneracy are too
wide, never too sharp. The layer is flagged (``degeneracy_flags``) and
`exact.sharpening_time` does not count flagged rows. The harness logs and
flags the run.
"""

__all__ = ["ParticleEnsemble", "FilterStats", "DegenerateWeights",
           "sample_initial", "effective_sample_size", "systematic_resample",
           "pf_step_unitary", "pf_measure", "pf_step_layer", "pf_estimates",
           "run_pf_trajectory"]

import logging

import numpy as np
from scipy.special import comb

from .conditions import warn
from .dynassign import dyn, make_dynvar
from .exact import PROJECTIVE, WEAK, MeasurementEvent, ProbState, TrajectoryResult
from .fitting import jackknife
from .gates import BrickworkSchedule, GateFamily, connected_components
from .lattice import bits_matrix, charges, config_from_string, dipoles, gather_window, window_spread

logger = logging.getLogger(__name__)

make_dynvar(resample_threshold=0.5, jackknife_blocks=20)

class DegenerateWeights(RuntimeWarning):
    """Every particle weight vanished; the ensemble was redrawn from its prior."""
    def __init__(self, site, layer=None):
        super().__init__("all particle weights vanished at site {} (layer {}); redrawn from the prior".format(site, layer))
        self.site = site
        self.layer = layer

    def __reduce__(self):
        return (DegenerateWeights, (self.site, self.layer))

class FilterStats:
    """Run statistics of an ensemble: smallest ESS seen, resamplings, degeneracies."""
    def __init__(self, ess_min=np.inf, resample_count=0, degenerate_layers=()):
        self.ess_min = ess_min
        self.resample_count = resample_count
        self.degenerate_layers = list(degenerate_layers)

    def copy(self):
        return FilterStats(self.ess_min, self.resample_count, self.degenerate_layers)

    def as_dict(self):
        return {"ess_min": float(self.ess_min),
                "resample_count": self.resample_count,
                "degenerate_layers": sorted(set(self.degenerate_layers))}

class ParticleEnsemble:
    """Weighted particles plus the reference configuration.

    `particles`: ``int64`` array of packed configurations; `weights`:
    matching nonnegative weights summing to one; `reference`: packed int.
    Operations return new ensembles; the particle count never changes.

    `prior` is where fresh particles come from after a degeneracy: a
    `ProbState`, a dict of `sample_initial` recipe arguments, or `None` for
    uniform bitstrings.
    """
    def __init__(self, geometry, particles, weights=None, reference=0, stats=None, prior=None):
        particles = np.asarray(particles, dtype=np.int64)
        if particles.ndim != 1 or not len(particles):
            raise ValueError("need a nonempty 1D array of particles")
        if weights is None:
            weights = np.full(len(particles), 1.0 / len(particles))
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != particles.shape:
            raise ValueError("weights and particles must have the same length")
        total = weights.sum()
        if np.any(weights < 0) or not total > 0:
            raise ValueError("weights must be nonnegative with positive sum")
        self.geometry = geometry
        self.particles = particles
        self.weights = weights / total
        self.reference = int(reference)
        self.stats = stats or FilterStats()
        self.prior = prior

    def __len__(self):
        return len(self.particles)

    def __repr__(self):
        return "<ParticleEnsemble on {}: N={}, ESS={:.1f}>".format(self.geometry, len(self),
                                                                effective_sample_size(self.weights))

    def evolve(self, particles=None, weights=None, reference=None):
        """A new ensemble with some fields replaced; statistics are copied."""
        return ParticleEnsemble(self.geometry,
                                self.particles if particles is None else particles,
                                self.weights if weights is None else weights,
                                self.reference if reference is None else reference,
                                self.stats.copy(), self.prior)

    @classmethod
    def from_state(cls, state, n, rng):
        """Draw `n` particles and the reference from a `ProbState`."""
        draws = state.sample(n + 1, rng)
        return cls(state.geometry, draws[1:], reference=draws[0], prior=state)

def _pack(occupied):
    n_sites = occupied.shape[1]
    return (occupied.astype(np.int64) << np.arange(n_sites, dtype=np.int64)).sum(axis=1)

def _random_subsets(n_sites, sizes, rng):
    """One uniformly random subset of ``sizes[i]`` sites per row, packed."""
    keys = rng.random((len(sizes), n_sites))
    rank = np.argsort(np.argsort(keys, axis=1), axis=1)
    return _pack(rank < np.asarray(sizes)[:, None])

def _draw_recipe(geometry, recipe, count, rng, band_width=1, bits=None):
    N = geometry.n_sites
    if recipe == "charge-band":
        Qs = np.arange(max(0, N // 2 - band_width), min(N, N // 2 + band_width) + 1)
        p = comb(N, Qs)
        return _random_subsets(N, rng.choice(Qs, size=count, p=p / p.sum()), rng)
    if recipe == "dipole-band":
        return _random_subsets(N, np.full(count, N // 2), rng)
    if recipe == "uniform":
        return _pack(rng.integers(0, 2, size=(count, N)))
    if recipe == "delta":
        if bits is None:
            raise ValueError("recipe 'delta' needs bits")
        return np.full(count, config_from_string(bits, geometry), dtype=np.int64)
    raise ValueError("Unknown initial-state recipe '{}'".format(recipe))

def sample_initial(geometry, recipe, n, rng, band_width=1, bits=None):
    """Particles and reference drawn from an initial-state recipe.

    Same recipes and distributions as `exact.initial_state`, sampled without
    enumerating configurations. Returns a uniformly weighted
    `ParticleEnsemble`; the reference is one more independent draw. The
    recipe becomes the ensemble's prior.
    """
    draws = _draw_recipe(geometry, recipe, n + 1, rng, band_width, bits)
    prior = dict(recipe=recipe, band_width=band_width, bits=bits)
    return ParticleEnsemble(geometry, draws[1:], reference=draws[0], prior=prior)

def _propose(ensemble, rng):
    """Fresh particles from `ensemble.prior`, as many as the ensemble holds."""
    n, prior = len(ensemble), ensemble.prior
    if isinstance(prior, ProbState):
        return np.asarray(prior.sample(n, rng), dtype=np.int64)
    if prior is None:
        prior = dict(recipe="uniform")
    return _draw_recipe(ensemble.geometry, count=n, rng=rng, **prior)

def effective_sample_size(weights):
    """``(sum w)**2 / sum w**2``; between 1 and N."""
    w = np.asarray(weights, dtype=np.float64)
    return float(w.sum() ** 2 / np.sum(w * w))

def systematic_resample(weights, rng):
    """Indices drawn by systematic resampling: one uniform offset, N evenly spaced positions."""
    w = np.asarray(weights, dtype=np.float64)
    n = len(w)
    positions = (rng.random() + np.arange(n)) / n
    cumulative = np.cumsum(w / w.sum())
    cumulative[-1] = 1.0
    return np.minimum(np.searchsorted(cumulative, positions, side="right"), n - 1)

def pf_step_unitary(ensemble, layer, family=GateFamily.FULL_MIXING, rng=None, rate=1.0, schedule=None):
    """Apply the gates of brickwork layer `layer` to every particle and the reference.

    Each configuration's window state is replaced by a uniform member of its
    component; with ``rate < 1`` each gate fires independently with that
    probability. Weights are unchanged.
    """
    schedule = schedule or BrickworkSchedule(ensemble.geometry)
    kernel = connected_components(family)
    configs = np.append(ensemble.particles, np.int64(ensemble.reference))
    for window in schedule.windows(layer):
        spread = window_spread(window)
        state = gather_window(configs, window)
        cid = kernel.component_of[state]
        pick = (rng.random(len(configs)) * kernel.sizes[cid]).astype(np.int64)
        new = kernel.members[kernel.starts[cid] + pick]
        if rate < 1.0:
            new = np.where(rng.random(len(configs)) < rate, new, state)
        configs = (configs & ~spread[-1]) | spread[new]
    return ensemble.evolve(particles=configs[:-1], reference=configs[-1])

def _likelihood(particles, site, kind, outcome, gamma_w):
    bits = (particles >> site) & 1
    if kind == PROJECTIVE:
        return (bits == outcome).astype(np.float64)
    logl = -0.5 * gamma_w * ((2 * bits - 1) - outcome) ** 2
    return np.exp(logl - logl.max())

def pf_measure(ensemble, site, kind=PROJECTIVE, gamma_w=1.0, rng=None, layer=None):
    """Measure `site` on the reference and condition the particles on the outcome.

    Returns ``(outcome, ensemble)``: an int for projective, a float for weak
    measurements. If no particle is compatible with the outcome, signals
    `DegenerateWeights` and redraws the particles from the prior (see the
    module docstring); the redrawn ones are conditioned on this outcome.
    """
    ref_bit = (ensemble.reference >> site) & 1
    if kind == PROJECTIVE:
        outcome = int(ref_bit)
    elif kind == WEAK:
        if not gamma_w > 0:
            raise ValueError("weak-measurement strength must be positive, got {}".format(gamma_w))
        outcome = float((2 * ref_bit - 1) + rng.normal() / np.sqrt(gamma_w))
    else:
        raise ValueError("Unknown measurement kind '{}'".format(kind))

    new = ensemble.evolve()
    weights = ensemble.weights * _likelihood(ensemble.particles, site, kind, outcome, gamma_w)
    if not weights.sum() > 0:
        warn(DegenerateWeights(site, layer))
        new.stats.degenerate_layers.append(layer)
        new.particles = _propose(ensemble, rng)
        weights = _likelihood(new.particles, site, kind, outcome, gamma_w)
        if not weights.sum() > 0:
            # the prior itself excludes the outcome (e.g. a delta); force the bit
            mask = np.int64(1) << site
            new.particles = (new.particles & ~mask) | (mask if outcome else np.int64(0))
            weights = np.ones(len(new))
    new.weights = weights / weights.sum()
    ess = effective_sample_size(new.weights)
    new.stats.ess_min = min(new.stats.ess_min, ess)
    if ess < dyn.resample_threshold * len(new):
        idx = systematic_resample(new.weights, rng)
        new.particles = new.particles[idx]
        new.weights = np.full(len(new), 1.0 / len(new))
        new.stats.resample_count += 1
        logger.debug("resampled at layer %s site %d (ESS %.1f of %d)", layer, site, ess, len(new))
    return outcome, new

def pf_step_layer(ensemble, layer, gamma, kind=PROJECTIVE, rng=None, gamma_w=1.0,
                  family=GateFamily.FULL_MIXING, rate=1.0, schedule=None):
    """Particle-filter counterpart of `exact.step_layer`; returns ``(ensemble, events)``."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("measurement rate must be in [0, 1], got {}".format(gamma))
    ensemble = pf_step_unitary(ensemble, layer, family, rng, rate, schedule)
    events = []
    if gamma > 0:
        for site in np.flatnonzero(rng.random(ensemble.geometry.n_sites) < gamma):
            outcome, ensemble = pf_measure(ensemble, int(site), kind, gamma_w, rng, layer)
            events.append(MeasurementEvent(layer, int(site), kind, outcome))
    return ensemble, events

def _weighted_variance(values, w):
    mean = w @ values
    return np.maximum(w @ (values - mean) ** 2, 0.0)

def pf_estimates(ensemble, blocks=None, covariance=False):
    """Weighted-sample estimates of the posterior.

    Returns a dict with ``var_q``, ``var_p`` (per-axis array in 2D),
    ``entropy`` (sector entropy, nats), their jackknife errors ``var_q_err``
    and ``var_p_err``, ``ess``, and with `covariance` also the density
    covariance matrix ``density_covariance``.

    `blocks` defaults to ``dyn.jackknife_blocks``.
    """
    w = ensemble.weights
    q = charges(ensemble.particles).astype(np.float64)
    p = dipoles(ensemble.particles, ensemble.geometry).astype(np.float64)

    def variance_of(values):
        def estimate(idx):
            ww = w[idx]
            if not ww.sum() > 0:
                return np.full(values.shape[1:], np.nan)
            return _weighted_variance(values[idx], ww / ww.sum())
        return estimate

    blocks = blocks or dyn.jackknife_blocks
    var_q, var_q_err = jackknife(variance_of(q), len(ensemble), blocks)
    var_p, var_p_err = jackknife(variance_of(p), len(ensemble), blocks)
    keys = np.column_stack([q, p.reshape(len(ensemble), -1)])
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    mass = np.bincount(inverse.ravel(), weights=w)
    mass = mass[mass > 0]
    out = {"var_q": float(var_q), "var_q_err": float(var_q_err),
           "var_p": float(var_p) if ensemble.geometry.dim == 1 else np.asarray(var_p),
           "var_p_err": float(var_p_err) if ensemble.geometry.dim == 1 else np.asarray(var_p_err),
           "entropy": float(max(-(mass * np.log(mass)).sum(), 0.0)),
           "ess": effective_sample_size(w)}
    if covariance:
        B = bits_matrix(ensemble.particles, ensemble.geometry.n_sites).astype(np.float64)
        mean = w @ B
        out["density_covariance"] = B.T @ (B * w[:, None]) - np.outer(mean, mean)
    return out

def _observe(result, layer, ensemble, n_measurements, degenerate):
    est = pf_estimates(ensemble)
    result.append_row(layer, est["var_q"], est["var_p"], est["entropy"], n_measurements,
                      var_Q_err=est["var_q_err"],
                      N_particles=len(ensemble),
                      ESS_min=min(ensemble.stats.ess_min, est["ess"]),
                      resample_count=ensemble.stats.resample_count,
                      degeneracy_flags=int(degenerate))

def run_pf_trajectory(ensemble, horizon, gamma, rng, kind=PROJECTIVE, gamma_w=1.0,
                      family=GateFamily.FULL_MIXING, rate=1.0, epsilon=0.01,
                      seed=None, start_layer=0, result=None, keep_record=True):
    """Run the particle filter from layer `start_layer` up to `horizon`.

    Pass `result` to continue a `TrajectoryResult` (an exact run handed over
    after an overflow); otherwise a fresh one is started with the initial
    row. The result gets the extra columns ``var_Q_err``, ``N_particles``,
    ``ESS_min``, ``resample_count`` and ``degeneracy_flags``, and ``result.filter_stats``.
    """
    if result is None:
        result = TrajectoryResult(ensemble.geometry, seed=seed,
                                  params=dict(gamma=gamma, kind=kind, gamma_w=gamma_w,
                                              family=GateFamily.parse(family).value, rate=rate,
                                              n_particles=len(ensemble)))
        _observe(result, start_layer, ensemble, 0, False)
    schedule = BrickworkSchedule(ensemble.geometry)
    for layer in range(start_layer, horizon):
        before = len(ensemble.stats.degenerate_layers)
        ensemble, events = pf_step_layer(ensemble, layer, gamma, kind, rng, gamma_w, family, rate, schedule)
        if keep_record:
            result.record.extend(events)
        _observe(result, layer + 1, ensemble, len(events), len(ensemble.stats.degenerate_layers) > before)
    result.final_ensemble = ensemble
    result.filter_stats = ensemble.stats.as_dict()
    return result.finish(epsilon)
