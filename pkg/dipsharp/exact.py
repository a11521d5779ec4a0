# -*- coding: utf-8 -*-
"""Exact evolution of the measurement-conditioned diagonal state.

The dephasing after every gate keeps the conditional density matrix
diagonal in the occupation basis, so the conditional state is a classical
probability distribution over configurations: a `ProbState`. One brickwork
layer applies the averaged gate kernel on every scheduled window, then
measures each site independently with probability ``gamma``:

  - projective: the outcome is the site occupation, sampled from the
    posterior marginal; the posterior is restricted to consistent
    configurations.
  - weak: the outcome is a real ``m`` drawn from the Gaussian mixture
    ``N(sigma, 1/gamma_w)``, ``sigma = 2n - 1``; the posterior is reweighted
    by ``exp(-gamma_w (sigma - m)**2 / 2)``.

Every event goes into a `MeasurementRecord`. Given the record, `replay`
reproduces the conditional trajectory without any randomness, which is
also how the exact engine is run on a record produced elsewhere (e.g. by
the particle filter's reference system).

Observables of a conditional state: `charge_variance`, `dipole_variance`,
`sector_entropy`, `density_covariance`, `subregion_variance`,
`renyi2_charge`, `renyi2_dipole`. Ensemble observables average over final
states of many records: `connected_density_correlator`,
`connected_dipole_density_correlator`, `ensemble_covariance`,
`correlator_profile`.

The support of the state is capped (dynvar ``exact_support_cap``). Growing
past the cap signals `EngineOverflow` with `error`; `run_trajectory`
provides a ``use_particle_filter`` restart for that case, returning what was
computed so far together with the last good state.
"""

__all__ = ["ProbState", "MeasurementEvent", "MeasurementRecord", "TrajectoryResult",
           "UnnormalizedState", "EngineOverflow", "ImpossibleOutcome",
           "PROJECTIVE", "WEAK",
           "initial_state", "step_layer", "replay", "run_trajectory",
           "measure_projective", "measure_weak",
           "charge_variance", "dipole_variance", "sector_entropy",
           "sharpening_time",
           "density_covariance", "subregion_variance", "ensemble_covariance",
           "connected_density_correlator", "connected_dipole_density_correlator",
           "correlator_profile", "dipole_covariance",
           "renyi2_charge", "renyi2_dipole"]

import logging
from collections import namedtuple

import numpy as np
import pandas as pd

from .collections import unbox
from .conditions import error, restarts
from .dynassign import dyn, make_dynvar
from .gates import BrickworkSchedule, GateFamily, connected_components, kernel_apply
from .lattice import (bits_matrix, charges, config_from_string, config_to_string, dipoles,
                      enumerate_configurations)

logger = logging.getLogger(__name__)

make_dynvar(exact_support_cap=1 << 22, normalization_tol=1e-9)

PROJECTIVE = "projective"
WEAK = "weak"

class UnnormalizedState(ValueError):
    """A ProbState whose total probability is off by more than the tolerance."""

class EngineOverflow(RuntimeError):
    """The exact state's support outgrew ``dyn.exact_support_cap``."""
    def __init__(self, support, cap):
        super().__init__("exact support {} exceeds the cap {}; use the particle filter (engine pf:N)".format(support, cap))
        self.support = support
        self.cap = cap

    def __reduce__(self):
        return (EngineOverflow, (self.support, self.cap))

class ImpossibleOutcome(ValueError):
    """A forced measurement outcome has zero posterior probability."""

class ProbState:
    """Sparse probability distribution over configurations.

    `configs`: ascending ``int64`` array of packed configurations (unique).
    `probs`: matching probabilities, positive, summing to one.

    Instances are treated as immutable; every update returns a new state, and
    updates renormalize. With ``normalize=False`` the constructor keeps the
    given mass, e.g. to hand an external distribution to `kernel_apply`,
    which then signals `UnnormalizedState` if it is off.
    """
    __slots__ = ("geometry", "configs", "probs")

    def __init__(self, geometry, configs, probs, normalize=True):
        configs = np.asarray(configs, dtype=np.int64)
        probs = np.asarray(probs, dtype=np.float64)
        if configs.shape != probs.shape or configs.ndim != 1:
            raise ValueError("configs and probs must be 1D arrays of equal length")
        if np.any(probs < 0):
            raise ValueError("negative probability")
        order = np.argsort(configs, kind="stable")
        configs, probs = configs[order], probs[order]
        if len(configs) > 1 and np.any(configs[1:] == configs[:-1]):
            configs, inverse = np.unique(configs, return_inverse=True)
            probs = np.bincount(inverse.ravel(), weights=probs)
        self._set(geometry, configs, probs, normalize)

    def _set(self, geometry, configs, probs, normalize=True):
        keep = probs > 0
        if not np.all(keep):
            configs, probs = configs[keep], probs[keep]
        total = probs.sum()
        if not total > 0:
            raise ValueError("ProbState needs positive total probability")
        if len(configs) > dyn.exact_support_cap:
            error(EngineOverflow(len(configs), dyn.exact_support_cap))
        object.__setattr__(self, "geometry", geometry)
        object.__setattr__(self, "configs", configs)
        object.__setattr__(self, "probs", probs / total if normalize else probs)

    def __setattr__(self, name, value):
        raise AttributeError("ProbState is immutable")

    def __reduce__(self):
        return (ProbState, (self.geometry, self.configs, self.probs, False))

    def replace(self, configs, probs):
        """New state on the same geometry; `configs` must already be ascending and unique."""
        new = object.__new__(ProbState)
        new._set(self.geometry, np.asarray(configs, dtype=np.int64), np.asarray(probs, dtype=np.float64))
        return new

    @classmethod
    def delta(cls, geometry, config):
        """All mass on one configuration (packed int, Configuration, or 0/1 string)."""
        if isinstance(config, str):
            config = config_from_string(config, geometry)
        return cls(geometry, [int(config)], [1.0])

    @classmethod
    def uniform(cls, geometry, configs):
        configs = np.asarray([int(c) for c in configs], dtype=np.int64)
        return cls(geometry, configs, np.ones(len(configs)))

    @classmethod
    def from_dict(cls, geometry, mapping, normalize=True):
        """From ``{config: probability}``; keys may be ints or 0/1 strings."""
        keys = [config_from_string(k, geometry) if isinstance(k, str) else int(k) for k in mapping]
        return cls(geometry, keys, list(mapping.values()), normalize)

    def as_dict(self):
        """``{0/1 string: probability}`` in canonical order."""
        return {config_to_string(c, self.geometry): float(p) for c, p in zip(self.configs, self.probs)}

    def __len__(self):
        return len(self.configs)

    def __repr__(self):
        return "<ProbState on {}: {} configurations>".format(self.geometry, len(self))

    def total(self):
        return float(self.probs.sum())

    def check_normalized(self):
        """Signal `UnnormalizedState` (with `error`) if the mass is off by more than the tolerance."""
        drift = abs(self.total() - 1.0)
        if drift > dyn.normalization_tol:
            error(UnnormalizedState("total probability off by {:.3g}".format(drift)))
        return self

    def charges(self):
        return charges(self.configs)

    def dipoles(self):
        return dipoles(self.configs, self.geometry)

    def marginal(self, site):
        """Probability that `site` is occupied."""
        return float(self.probs[((self.configs >> site) & 1) == 1].sum())

    def sample(self, n, rng):
        """`n` configurations drawn from the distribution."""
        return rng.choice(self.configs, size=n, p=self.probs)

def initial_state(geometry, recipe="dipole-band", band_width=1, bits=None):
    """Weakly symmetric starting states.

    `recipe`:
      - ``"charge-band"``: uniform over all configurations with
        ``|Q - N//2| <= band_width``.
      - ``"dipole-band"``: uniform over all configurations at ``Q = N//2``,
        every dipole moment.
      - ``"uniform"``: uniform over all configurations.
      - ``"delta"``: the single configuration `bits` (a 0/1 string).
    """
    geometry.check_exact()
    n = geometry.n_sites
    if recipe == "charge-band":
        configs = np.concatenate([enumerate_configurations(geometry, Q)
                                  for Q in range(max(0, n // 2 - band_width), min(n, n // 2 + band_width) + 1)])
    elif recipe == "dipole-band":
        configs = enumerate_configurations(geometry, n // 2)
    elif recipe == "uniform":
        configs = enumerate_configurations(geometry)
    elif recipe == "delta":
        if bits is None:
            raise ValueError("recipe 'delta' needs bits")
        return ProbState.delta(geometry, bits)
    else:
        raise ValueError("Unknown initial-state recipe '{}'".format(recipe))
    return ProbState(geometry, configs, np.ones(len(configs)))

# --------------------------------------------------------------------------------
# Measurements

MeasurementEvent = namedtuple("MeasurementEvent", ["layer", "site", "kind", "outcome"])

class MeasurementRecord:
    """Append-only, ordered list of `MeasurementEvent`."""
    def __init__(self, events=()):
        self._events = []
        self.extend(events)

    def append(self, event):
        if not isinstance(event, MeasurementEvent):
            event = MeasurementEvent(*event)
        if self._events and event.layer < self._events[-1].layer:
            raise ValueError("record events must be appended in layer order")
        self._events.append(event)

    def extend(self, events):
        for e in events:
            self.append(e)

    def __iter__(self):
        return iter(self._events)

    def __len__(self):
        return len(self._events)

    def __getitem__(self, k):
        return self._events[k]

    def by_layer(self):
        """``{layer: [events]}``."""
        out = {}
        for e in self._events:
            out.setdefault(e.layer, []).append(e)
        return out

    def to_frame(self):
        return pd.DataFrame(self._events, columns=list(MeasurementEvent._fields))

def _restrict(state, keep, what):
    if not np.any(keep):
        error(ImpossibleOutcome("{} has zero posterior probability".format(what)))
    return state.replace(state.configs[keep], state.probs[keep])

def measure_projective(state, site, rng=None, outcome=None):
    """Projectively measure the occupation of `site`.

    The outcome is sampled from the posterior marginal, unless `outcome` is
    given (replay). Returns ``(outcome, posterior)``.
    """
    if outcome is None:
        outcome = int(rng.random() < state.marginal(site))
    outcome = int(outcome)
    keep = ((state.configs >> site) & 1) == outcome
    return outcome, _restrict(state, keep, "outcome n_{}={}".format(site, outcome))

def measure_weak(state, site, strength, rng=None, outcome=None):
    """Weakly measure ``sigma = 2 n_site - 1`` with Gaussian noise of variance ``1/strength``.

    Returns ``(m, posterior)``; `m` is a float.
    """
    if not strength > 0:
        raise ValueError("weak-measurement strength must be positive, got {}".format(strength))
    if outcome is None:
        n = int(rng.random() < state.marginal(site))
        outcome = (2 * n - 1) + rng.normal() / np.sqrt(strength)
    m = float(outcome)
    sigma = 2 * ((state.configs >> site) & 1) - 1
    logw = -0.5 * strength * (sigma - m) ** 2
    weights = state.probs * np.exp(logw - logw.max())
    keep = weights > 0
    if not np.any(keep):
        error(ImpossibleOutcome("weak outcome m={} at site {} has zero posterior probability".format(m, site)))
    return m, state.replace(state.configs[keep], weights[keep])

def _measure(state, site, kind, gamma_w, rng, outcome=None):
    if kind == PROJECTIVE:
        return measure_projective(state, site, rng, outcome)
    if kind == WEAK:
        return measure_weak(state, site, gamma_w, rng, outcome)
    raise ValueError("Unknown measurement kind '{}'".format(kind))

def step_layer(state, layer_index, gamma, kind=PROJECTIVE, rng=None, gamma_w=1.0,
               family=GateFamily.FULL_MIXING, rate=1.0, schedule=None):
    """One brickwork layer: gates on every scheduled window, then measurements.

    Each site is measured independently with probability `gamma`, in
    ascending site order, with outcomes sampled from the current posterior.
    Returns ``(state, events)``.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("measurement rate must be in [0, 1], got {}".format(gamma))
    schedule = schedule or BrickworkSchedule(state.geometry)
    kernel = connected_components(family)
    for window in schedule.windows(layer_index):
        state = kernel_apply(state, window, kernel, rate)
    events = []
    if gamma > 0:
        sites = np.flatnonzero(rng.random(state.geometry.n_sites) < gamma)
        for site in sites:
            outcome, state = _measure(state, int(site), kind, gamma_w, rng)
            events.append(MeasurementEvent(layer_index, int(site), kind, outcome))
    return state, events

def replay(state, record, horizon, family=GateFamily.FULL_MIXING, rate=1.0, gamma_w=1.0,
           observe=None):
    """Re-evaluate the conditional trajectory of `record` from `state`.

    Deterministic. `observe(layer, state)`, if given, is called after every
    layer (and once with layer 0 before the first one). Returns the final
    state.
    """
    schedule = BrickworkSchedule(state.geometry)
    kernel = connected_components(family)
    events = record.by_layer()
    if observe:
        observe(0, state)
    for layer in range(horizon):
        for window in schedule.windows(layer):
            state = kernel_apply(state, window, kernel, rate)
        for e in events.get(layer, ()):
            _, state = _measure(state, e.site, e.kind, gamma_w, None, e.outcome)
        if observe:
            observe(layer + 1, state)
    return state

# --------------------------------------------------------------------------------
# Observables of one conditional state

def _variance(values, probs):
    mean = probs @ values
    return float(max(probs @ (values - mean) ** 2, 0.0))

def charge_variance(state):
    """Posterior variance of the total charge."""
    return _variance(state.charges().astype(np.float64), state.probs)

def dipole_variance(state):
    """Posterior variance of the dipole moment: a float in 1D, per-axis array in 2D."""
    ps = state.dipoles().astype(np.float64)
    if state.geometry.dim == 1:
        return _variance(ps, state.probs)
    return np.array([_variance(ps[:, a], state.probs) for a in range(state.geometry.dim)])

def sector_entropy(state):
    """Shannon entropy (nats) of the posterior over (Q, P) sectors."""
    keys = np.column_stack([state.charges(), state.dipoles().reshape(len(state), -1)])
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    mass = np.bincount(inverse.ravel(), weights=state.probs)
    mass = mass[mass > 0]
    return float(max(-(mass * np.log(mass)).sum(), 0.0))

def density_covariance(state):
    """``N x N`` matrix ``Cov(n_x, n_y)`` under the posterior."""
    B = bits_matrix(state.configs, state.geometry.n_sites).astype(np.float64)
    mean = state.probs @ B
    second = B.T @ (B * state.probs[:, None])
    return second - np.outer(mean, mean)

def subregion_variance(state, sites, observable="charge"):
    """Posterior variance of the charge or dipole moment restricted to `sites`.

    `observable`: ``"charge"`` (sum of n_x) or ``"dipole"`` (sum of x n_x,
    first axis).
    """
    sites = np.asarray(list(sites), dtype=np.int64)
    B = bits_matrix(state.configs, state.geometry.n_sites)[:, sites].astype(np.float64)
    if observable == "charge":
        values = B.sum(axis=1)
    elif observable == "dipole":
        values = B @ state.geometry.coords[sites, 0].astype(np.float64)
    else:
        raise ValueError("Unknown observable '{}'".format(observable))
    return _variance(values, state.probs)

def _hop(configs, src, dst):
    """Move a particle src -> dst; returns (new configs, defined mask)."""
    ok = (((configs >> src) & 1) == 1) & (((configs >> dst) & 1) == 0)
    return configs ^ ((1 << src) | (1 << dst)), ok

def _pair_overlap(state, hops):
    """``sum_c p_c p_{T c}`` for the sequence of particle hops T."""
    configs = state.configs
    defined = np.ones(len(configs), dtype=bool)
    targets = configs
    for src, dst in hops:
        targets, ok = _hop(targets, src, dst)
        defined &= ok
    idx = np.searchsorted(configs, targets)
    idx = np.minimum(idx, len(configs) - 1)
    found = defined & (configs[idx] == targets)
    return float((state.probs[found] * state.probs[idx[found]]).sum())

def _renyi2(state, forward, backward):
    numerator = _pair_overlap(state, forward) + _pair_overlap(state, backward)
    return numerator / float(state.probs @ state.probs)

def renyi2_charge(state, x, y):
    """Renyi-2 correlator of the charge operators at sites `x`, `y`.

    The operator pair moves one particle between `y` and `x` (both
    directions, i.e. the hermitian hop). In ``[0, 1]``, symmetric in x, y.
    """
    x, y = int(x), int(y)
    if x == y:
        raise ValueError("renyi2_charge needs x != y")
    return _renyi2(state, [(y, x)], [(x, y)])

def _bond(geometry, b):
    """Sites (b, b') of the dipole bond starting at site b, along the first axis."""
    x = geometry.coords[b, 0]
    if x + 1 >= geometry.lengths[0]:
        raise ValueError("bond at site {} leaves the lattice".format(b))
    return b, b + 1

def renyi2_dipole(state, x, y):
    """Renyi-2 correlator of the dipole operators on bonds `x`, `y`.

    Bond ``b`` joins site ``b`` and its neighbour along the first axis; the
    dipole-creation operator moves a particle across it. The operator pair
    creates a dipole at bond `y` and removes one at bond `x`.
    """
    x, y = int(x), int(y)
    if x == y:
        raise ValueError("renyi2_dipole needs x != y")
    xa, xb = _bond(state.geometry, x)
    ya, yb = _bond(state.geometry, y)
    forward = [(ya, yb), (xb, xa)]
    backward = [(xa, xb), (yb, ya)]
    return _renyi2(state, forward, backward)

# --------------------------------------------------------------------------------
# Ensemble observables

def _height_transform(n_sites):
    return np.tril(np.ones((n_sites, n_sites)))

def ensemble_covariance(states, observable="charge"):
    """Record-averaged connected correlator matrix.

    `observable`: ``"charge"`` for the density ``n_x``, ``"dipole"`` for the
    lattice dipole density (height field) ``h_x = sum_{y <= x} n_y`` (1D).
    """
    states = list(states)
    if not states:
        raise ValueError("empty ensemble")
    C = sum(density_covariance(s) for s in states) / len(states)
    if observable == "charge":
        return C
    if observable == "dipole":
        if states[0].geometry.dim != 1:
            raise ValueError("dipole density correlator is defined for 1D chains")
        return dipole_covariance(C)
    raise ValueError("Unknown observable '{}'".format(observable))

def dipole_covariance(C):
    """Height-field covariance ``Cov(h_x, h_y)`` from a 1D density covariance."""
    T = _height_transform(C.shape[0])
    return T @ C @ T.T

def connected_density_correlator(states, x, y):
    """Average over the ensemble of ``<n_x n_y> - <n_x><n_y>``."""
    out = []
    for s in states:
        nx = ((s.configs >> x) & 1).astype(np.float64)
        ny = ((s.configs >> y) & 1).astype(np.float64)
        out.append(s.probs @ (nx * ny) - (s.probs @ nx) * (s.probs @ ny))
    return float(np.mean(out))

def connected_dipole_density_correlator(states, x, y):
    """Same as `connected_density_correlator` for the height field ``h_x``."""
    return float(ensemble_covariance(states, "dipole")[x, y])

def correlator_profile(matrix, separations=None, margin=0):
    """Average the connected correlator over site pairs at each separation.

    Pairs ``(x, x + r)`` with both sites at least `margin` away from the
    ends. Returns ``(separations, values)``.
    """
    n = matrix.shape[0]
    if separations is None:
        separations = np.arange(1, n - 2 * margin)
    values = []
    for r in separations:
        xs = np.arange(margin, n - margin - r)
        if not len(xs):
            raise ValueError("no site pairs at separation {} with margin {}".format(r, margin))
        values.append(matrix[xs, xs + r].mean())
    return np.asarray(separations), np.asarray(values)

# --------------------------------------------------------------------------------
# Trajectories

class TrajectoryResult:
    """Time series and sharpening times of one conditional trajectory.

    Row ``t`` of the series is the state after ``t`` layers (row 0 is the
    initial state). ``t_sharp_charge``/``t_sharp_dipole`` are ``None`` when
    censored at the horizon. `handoff` is ``(layer, state)`` when the run
    stopped early through the ``use_particle_filter`` restart.
    """
    def __init__(self, geometry, seed=None, params=None):
        self.geometry = geometry
        self.seed = seed
        self.params = dict(params or {})
        self.layers = []
        self.var_q = []
        self.var_p = []
        self.entropy = []
        self.n_measurements = []
        self.extra = {}
        self.record = MeasurementRecord()
        self.snapshots = {}
        self.final_state = None
        self.final_ensemble = None
        self.filter_stats = None
        self.handoff = None
        self.t_sharp_charge = None
        self.t_sharp_dipole = None

    def observe(self, layer, state, n_measurements=0):
        self.append_row(layer, charge_variance(state), dipole_variance(state),
                        sector_entropy(state), n_measurements)

    def append_row(self, layer, var_q, var_p, entropy, n_measurements=0, **extra):
        """Add one row. Extra columns missing from earlier rows are padded with NaN."""
        if self.layers and layer <= self.layers[-1]:
            raise ValueError("rows must be appended in increasing layer order")
        for name in set(self.extra) | set(extra):
            column = self.extra.setdefault(name, [np.nan] * len(self.layers))
            column.append(extra.get(name, np.nan))
        self.layers.append(layer)
        self.var_q.append(var_q)
        self.var_p.append(var_p)
        self.entropy.append(entropy)
        self.n_measurements.append(n_measurements)

    @property
    def horizon(self):
        return self.layers[-1] if self.layers else 0

    @property
    def censored_charge(self):
        return self.t_sharp_charge is None

    @property
    def censored_dipole(self):
        return self.t_sharp_dipole is None

    def finish(self, epsilon):
        self.t_sharp_charge = sharpening_time(self, epsilon, "charge")
        self.t_sharp_dipole = sharpening_time(self, epsilon, "dipole")
        return self

    def to_frame(self):
        """The trajectory CSV table."""
        data = {"layer": self.layers, "var_Q": self.var_q}
        if self.geometry.dim == 1:
            data["var_P"] = self.var_p
        else:
            vp = np.asarray(self.var_p)
            data["var_Px"], data["var_Py"] = vp[:, 0], vp[:, 1]
        data["entropy"] = self.entropy
        data["n_measurements"] = self.n_measurements
        data.update(self.extra)
        return pd.DataFrame(data)

def sharpening_time(result, epsilon=0.01, observable="charge"):
    """First layer at which the posterior variance drops below `epsilon`.

    `result` is a `TrajectoryResult`, or a sequence of variances indexed by
    layer. Returns ``None`` when censored (never below threshold). In 2D the
    dipole criterion requires every axis below threshold. Rows of a
    `TrajectoryResult` flagged in ``degeneracy_flags`` never count: the
    particle filter lost the record there.
    """
    if observable not in ("charge", "dipole"):
        raise ValueError("Unknown observable '{}'".format(observable))
    if isinstance(result, TrajectoryResult):
        layers = result.layers
        series = result.var_q if observable == "charge" else result.var_p
        flags = result.extra.get("degeneracy_flags", [0] * len(layers))
    else:
        series = list(result)
        layers = range(len(series))
        flags = [0] * len(series)
    for layer, v, flag in zip(layers, series, flags):
        if flag == 1:
            continue
        if np.all(np.asarray(v) < epsilon):
            return int(layer)
    return None

def run_trajectory(state, horizon, gamma, rng, kind=PROJECTIVE, gamma_w=1.0,
                   family=GateFamily.FULL_MIXING, rate=1.0, epsilon=0.01,
                   seed=None, snapshot_every=0, keep_record=True):
    """Simulate one conditional trajectory of `horizon` layers.

    Establishes the restart ``use_particle_filter``: a handler for
    `EngineOverflow` may invoke it to stop here, and the result then carries
    ``handoff = (layers done, last good state)``.
    """
    result = TrajectoryResult(state.geometry, seed=seed,
                              params=dict(gamma=gamma, kind=kind, gamma_w=gamma_w,
                                          family=GateFamily.parse(family).value, rate=rate))
    schedule = BrickworkSchedule(state.geometry)
    result.observe(0, state)
    if snapshot_every:
        result.snapshots[0] = state
    layer = 0
    with restarts(use_particle_filter=(lambda: (layer, state))) as handoff:
        for layer in range(horizon):
            new_state, events = step_layer(state, layer, gamma, kind, rng, gamma_w, family, rate, schedule)
            state = new_state
            if keep_record:
                result.record.extend(events)
            result.observe(layer + 1, state, len(events))
            if snapshot_every and (layer + 1) % snapshot_every == 0:
                result.snapshots[layer + 1] = state
        handoff << None
    result.handoff = unbox(handoff)
    if result.handoff is not None:
        logger.warning("exact engine stopped at layer %d of %d (support overflow)", result.handoff[0], horizon)
    result.final_state = state
    return result.finish(epsilon)
