# -*- coding: utf-8 -*-
"""Run orchestration: ensembles of trajectories, sweeps, theory tables.

A run directory looks like::

    out/
      trajectories/traj_00000.csv ...
      snapshots/traj_00000_layer_00010.csv ...   (if snapshot_every > 0)
      correlators.csv                            (if correlators or renyi2 requested)
      summary.json
      manifest.json

Every file is written atomically (temporary file in the same directory,
then `os.replace`), so a crash never leaves a partial file behind.

Randomness: trajectory ``i`` draws everything from
``SeedSequence(entropy=master_seed, spawn_key=(i,))``. Its output depends
only on the configuration, the master seed and ``i``, and not on the
number of workers or on scheduling. Spawn keys of length two are reserved
for the harness's own streams (the bootstrap of the summary).
"""

__all__ = ["AxisMismatch", "RunManifest", "Outcome", "ComparisonRow",
           "trajectory_seed", "trajectory_rng",
           "run", "run_one", "rerun_manifest", "sweep",
           "compare_theory", "compare_run", "theory_tables", "sectors_table", "load_and_override",
           "SCHEMA_VERSION"]

import datetime
import hashlib
import json
import logging
import os
import tempfile
import time
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from itertools import product

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict
from tqdm import tqdm

from .collections import unbox
from .conditions import handlers, invoke, muffle, restarts
from .config import geometry_of, load, parse, serialize, theory_params, with_overrides
from .dynassign import dyn, make_dynvar
from .exact import (EngineOverflow, correlator_profile, density_covariance, dipole_covariance,
                    initial_state, renyi2_charge, renyi2_dipole, run_trajectory)
from .fitting import DegenerateSeries, bootstrap_median, classify_decay, fit_scaling
from .gates import connectivity_report, window_sector_table
from .lattice import config_to_string
from .particles import (DegenerateWeights, ParticleEnsemble, pf_estimates, run_pf_trajectory,
                        sample_initial)
from .theory import (correlator_profile_theory, dipole_phase, gamma_critical, luttinger_K,
                     phase_table)

logger = logging.getLogger(__name__)

make_dynvar(progress=False)

SCHEMA_VERSION = 1
CORRELATOR_MARGIN = 1
DEFAULT_TOLERANCES = {"dipole": 0.3, "charge": 0.5}

# dynvars a worker process must see; bindings do not cross process boundaries
_WORKER_DYNVARS = ("exact_site_cap", "exact_support_cap", "normalization_tol",
                   "resample_threshold", "jackknife_blocks")

class AxisMismatch(ValueError):
    """Simulation and theory series do not cover the same observables."""

# --------------------------------------------------------------------------------
# Seeds

def trajectory_seed(master_seed, index):
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))

def trajectory_rng(master_seed, index):
    return np.random.Generator(np.random.PCG64(trajectory_seed(master_seed, index)))

def _summary_rng(master_seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=int(master_seed),
                                                                      spawn_key=(0, 0))))

# --------------------------------------------------------------------------------
# One trajectory

Outcome = namedtuple("Outcome", ["index", "frame", "t_sharp_charge", "t_sharp_dipole",
                                 "engine", "handoff_layer", "filter_stats",
                                 "covariance", "renyi2", "snapshots"])
Outcome.__doc__ = """What a worker sends back for one trajectory.

`engine` is ``"exact"``, ``"pf"``, or ``"exact+pf"`` after a fallback at
`handoff_layer`. `covariance` is the final density covariance matrix and
`renyi2` a ``(charge, dipole)`` pair of per-separation averages, each `None`
unless requested. `snapshots` maps layer to a DataFrame (exact engine)."""

def _renyi2_profile(state):
    """Renyi-2 correlators averaged over pairs at each separation r = 1 .. L-1."""
    L = state.geometry.n_sites
    charge = np.array([np.mean([renyi2_charge(state, x, x + r) for x in range(L - r)])
                       for r in range(1, L)])
    dipole = np.array([np.mean([renyi2_dipole(state, b, b + r) for b in range(L - 1 - r)])
                       if r < L - 1 else np.nan
                       for r in range(1, L)])
    return charge, dipole

def _snapshot_frame(state):
    geometry = state.geometry
    return pd.DataFrame({"config": [config_to_string(c, geometry) for c in state.configs],
                         "probability": state.probs})

def _trajectory_columns(frame, observables):
    drop = []
    if "var_q" not in observables:
        drop.append("var_Q")
    if "var_p" not in observables:
        drop += [c for c in ("var_P", "var_Px", "var_Py") if c in frame]
    if "entropy" not in observables:
        drop.append("entropy")
    return frame.drop(columns=[c for c in drop if c in frame])

def run_one(config, index):
    """Simulate trajectory `index` of `config`; return an `Outcome`.

    Exact engine: on `EngineOverflow`, with ``[run] fallback = true`` the
    ``use_particle_filter`` restart is invoked and the trajectory continues
    with ``fallback_particles`` particles drawn from the last exact state
    (from the initial recipe, handoff at layer 0, if the initial state itself
    is too large); otherwise the overflow propagates. Degenerate particle weights are
    logged and muffled (the filter redraws from its prior anyway; the layers are flagged).
    """
    r, m = config.run, config.measurement
    geometry = geometry_of(config)
    rng = trajectory_rng(r.master_seed, index)
    common = dict(kind=m.kind, gamma_w=m.gamma_w, family=config.family,
                  rate=config.gates.gate_probability, epsilon=r.epsilon, seed=index)
    want_cov = "correlators" in r.observables
    want_renyi = "renyi2" in r.observables

    def on_overflow(condition):
        if r.fallback:
            logger.warning("trajectory %d: %s; continuing with the particle filter (N=%d)",
                           index, condition, r.fallback_particles)
            invoke("use_particle_filter")

    def on_degenerate(condition):
        logger.warning("trajectory %d: %s", index, condition)
        muffle(condition)

    handoff_layer = None
    final_state = None
    with handlers((EngineOverflow, on_overflow), (DegenerateWeights, on_degenerate)):
        if r.engine_kind == "exact":
            # an initial state already past the cap goes straight to the filter
            with restarts(use_particle_filter=(lambda: None)) as start:
                start << initial_state(geometry, config.initial.recipe, config.initial.band_width,
                                       config.initial.bits)
            state = unbox(start)
            if state is None:
                engine, handoff_layer = "exact+pf", 0
                ensemble = sample_initial(geometry, config.initial.recipe, r.fallback_particles, rng,
                                          config.initial.band_width, config.initial.bits)
                result = run_pf_trajectory(ensemble, r.horizon, m.gamma, rng, **common)
            else:
                result = run_trajectory(state, r.horizon, m.gamma, rng,
                                        snapshot_every=r.snapshot_every, **common)
                if result.handoff is None:
                    engine, final_state = "exact", result.final_state
                else:
                    engine = "exact+pf"
                    handoff_layer, last = result.handoff
                    ensemble = ParticleEnsemble.from_state(last, r.fallback_particles, rng)
                    result = run_pf_trajectory(ensemble, r.horizon, m.gamma, rng,
                                               start_layer=handoff_layer, result=result, **common)
        else:
            ensemble = sample_initial(geometry, config.initial.recipe, r.n_particles, rng,
                                      config.initial.band_width, config.initial.bits)
            result = run_pf_trajectory(ensemble, r.horizon, m.gamma, rng, **common)
            engine = "pf"

    covariance = renyi2 = None
    if want_cov:
        if final_state is not None:
            covariance = density_covariance(final_state)
        else:
            covariance = pf_estimates(result.final_ensemble, covariance=True)["density_covariance"]
    if want_renyi and final_state is not None:
        renyi2 = _renyi2_profile(final_state)
    snapshots = {layer: _snapshot_frame(s) for layer, s in result.snapshots.items()}
    logger.debug("trajectory %d done (%s): t#c=%s t#d=%s", index, engine,
                 result.t_sharp_charge, result.t_sharp_dipole)
    return Outcome(index, _trajectory_columns(result.to_frame(), r.observables),
                   result.t_sharp_charge, result.t_sharp_dipole, engine, handoff_layer,
                   result.filter_stats, covariance, renyi2, snapshots)

def _worker(job):
    config, index, bindings = job
    with dyn.let(**bindings):
        return run_one(config, index)

# --------------------------------------------------------------------------------
# Output

def _atomic_write(path, data):
    """Write bytes to `path` atomically; return the SHA-256 hex digest."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="-" + os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(data).hexdigest()

def _csv(frame):
    return frame.to_csv(index=False, float_format="%.17g", lineterminator="\n")

def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"

def _finite(x):
    """JSON-safe float: non-finite values (censored medians) become `None`."""
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None

class RunManifest(BaseModel):
    """Everything needed to reproduce a run, and checksums of what it wrote."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    schema_version: int = SCHEMA_VERSION
    package_version: str
    config: str
    master_seed: int
    engine: str
    n_trajectories: int
    seeds: list
    started: str
    wall_clock_seconds: float
    jobs: int
    censored_charge: list
    censored_dipole: list
    fallback: list
    degenerate: list
    files: dict

def _correlator_frame(outcomes, geometry):
    frames = []
    covs = [o.covariance for o in outcomes if o.covariance is not None]
    if covs:
        C = np.mean(covs, axis=0)
        seps, charge = correlator_profile(C, margin=CORRELATOR_MARGIN)
        _, dipole = correlator_profile(dipole_covariance(C), seps, margin=CORRELATOR_MARGIN)
        frames.append(pd.DataFrame({"separation": seps, "charge": charge, "dipole": dipole}))
    renyis = [o.renyi2 for o in outcomes if o.renyi2 is not None]
    if renyis:
        charge = np.mean([c for c, _ in renyis], axis=0)
        dipole = np.mean([d for _, d in renyis], axis=0)
        frames.append(pd.DataFrame({"separation": np.arange(1, geometry.n_sites),
                                    "renyi2_charge": charge, "renyi2_dipole": dipole}))
    if not frames:
        return None
    out = frames[0]
    for f in frames[1:]:
        out = out.merge(f, on="separation", how="outer")
    return out.sort_values("separation").reset_index(drop=True)

def _summary(config, outcomes):
    rng = _summary_rng(config.run.master_seed)
    out = {"schema_version": SCHEMA_VERSION,
           "n_trajectories": len(outcomes),
           "lengths": list(config.lattice.lengths),
           "gamma": config.measurement.gamma,
           "engine": config.run.engine,
           "epsilon": config.run.epsilon,
           "horizon": config.run.horizon}
    for name in ("t_sharp_charge", "t_sharp_dipole"):
        b = bootstrap_median([getattr(o, name) for o in outcomes], rng)
        out[name] = {"median": _finite(b.median), "ci_low": _finite(b.lo), "ci_high": _finite(b.hi),
                     "n": b.n, "n_censored": b.n_censored}
    out["n_fallback"] = sum(o.engine == "exact+pf" for o in outcomes)
    out["n_degenerate"] = sum(bool(o.filter_stats and o.filter_stats["degenerate_layers"])
                              for o in outcomes)
    return out

def run(config):
    """Run every trajectory of `config`; write the run directory; return the `RunManifest`.

    With ``jobs > 1`` trajectories run in a process pool. Outcomes are
    collected in index order, so the output does not depend on `jobs`.
    """
    from . import __version__
    r = config.run
    geometry = geometry_of(config)
    started = datetime.datetime.now(datetime.timezone.utc).isoformat()
    t0 = time.monotonic()
    logger.info("run: %d trajectories on %s, gamma=%g, engine=%s, seed=%d -> %s",
                r.trajectories, geometry, config.measurement.gamma, r.engine, r.master_seed, r.out)

    bindings = dyn.snapshot(*_WORKER_DYNVARS)
    jobs = [(config, i, bindings) for i in range(r.trajectories)]
    bar = tqdm(total=len(jobs), desc="trajectories", unit="traj", disable=not dyn.progress)
    outcomes = []
    if r.jobs == 1:
        results = map(_worker, jobs)
        for outcome in results:
            outcomes.append(outcome)
            bar.update()
    else:
        with ProcessPoolExecutor(max_workers=r.jobs) as executor:
            for outcome in executor.map(_worker, jobs):
                outcomes.append(outcome)
                bar.update()
    bar.close()

    files = {}
    def write(relpath, data):
        files[relpath] = _atomic_write(os.path.join(r.out, relpath), data)

    for o in outcomes:
        write(os.path.join("trajectories", "traj_{:05d}.csv".format(o.index)), _csv(o.frame))
        for layer, frame in sorted(o.snapshots.items()):
            write(os.path.join("snapshots", "traj_{:05d}_layer_{:05d}.csv".format(o.index, layer)), _csv(frame))
    correlators = _correlator_frame(outcomes, geometry)
    if correlators is not None:
        write("correlators.csv", _csv(correlators))
    write("summary.json", _json(_summary(config, outcomes)))

    manifest = RunManifest(package_version=__version__,
                           config=serialize(config),
                           master_seed=r.master_seed,
                           engine=r.engine,
                           n_trajectories=len(outcomes),
                           seeds=[{"index": o.index, "entropy": str(r.master_seed), "spawn_key": [o.index]}
                                  for o in outcomes],
                           started=started,
                           wall_clock_seconds=time.monotonic() - t0,
                           jobs=r.jobs,
                           censored_charge=[o.index for o in outcomes if o.t_sharp_charge is None],
                           censored_dipole=[o.index for o in outcomes if o.t_sharp_dipole is None],
                           fallback=[{"index": o.index, "layer": o.handoff_layer}
                                     for o in outcomes if o.handoff_layer is not None],
                           degenerate=[{"index": o.index, "layers": list(o.filter_stats["degenerate_layers"])}
                                       for o in outcomes
                                       if o.filter_stats and o.filter_stats["degenerate_layers"]],
                           files=dict(sorted(files.items())))
    _atomic_write(os.path.join(r.out, "manifest.json"), _json(manifest.model_dump()))
    logger.info("run: done in %.1f s; %d of %d trajectories censored (charge)",
                manifest.wall_clock_seconds, len(manifest.censored_charge), len(outcomes))
    return manifest

def rerun_manifest(path, out):
    """Re-run the configuration recorded in the manifest at `path` into `out`.

    Returns ``(manifest, mismatches)``: the new manifest and the files whose
    checksums differ from the recorded ones (``summary.json`` included;
    ``manifest.json`` itself is not checksummed).
    """
    with open(path, "r", encoding="utf-8") as f:
        recorded = RunManifest.model_validate(json.load(f))
    config = with_overrides(parse(recorded.config, source=path), out=out)
    manifest = run(config)
    mismatches = sorted(name for name in set(recorded.files) | set(manifest.files)
                        if recorded.files.get(name) != manifest.files.get(name))
    return manifest, mismatches

# --------------------------------------------------------------------------------
# Sweeps

def _point_dir(L, gamma):
    return "L{}_gamma{}".format(L, repr(float(gamma)))

def _fit_row(xs, ys, **labels):
    row = dict(labels)
    if any(y is None for y in ys):
        row.update(best=None, note="censored medians in the series; not fitted")
        return row
    try:
        report = fit_scaling(xs, ys)
    except DegenerateSeries as err:
        row.update(best=None, note=str(err))
        return row
    row.update(report.to_dict())
    row["linear_over_log"] = _finite(report.residual_ratio("linear", "log"))
    row["ratio"] = _finite(report.ratio)
    for fit in row["fits"].values():
        for key in ("a", "b", "a_err", "b_err", "residual"):
            fit[key] = _finite(fit[key])
    row["note"] = ""
    return row

def sweep(config):
    """Run every point of the ``[sweep]`` axes; fit t#(L) per rate.

    An empty axis means the value from the base sections. Each point runs
    in its own subdirectory of ``[run] out``. Writes ``sweep.csv`` (one row
    per point with the median sharpening times and their bootstrap
    intervals) and ``sweep.json`` (rows plus fits of t#(L) for every rate
    with two or more lengths; a fit needs four points, shorter or censored
    series get a note instead). Returns the rows as a DataFrame.
    """
    base = config.run.out
    lengths = config.sweep.lengths or (config.lattice.lengths[0],)
    gammas = config.sweep.gammas or (config.measurement.gamma,)
    rows = []
    for L, gamma in tqdm(list(product(lengths, gammas)), desc="sweep", unit="point",
                         disable=not dyn.progress):
        point = with_overrides(config, out=os.path.join(base, _point_dir(L, gamma)),
                               lattice={"lengths": (L,) * config.lattice.dim},
                               measurement={"gamma": gamma},
                               initial={"bits": None} if config.initial.recipe != "delta" else {})
        logger.info("sweep: L=%d gamma=%g", L, gamma)
        run(point)
        with open(os.path.join(point.run.out, "summary.json"), "r", encoding="utf-8") as f:
            summary = json.load(f)
        row = {"L": L, "gamma": gamma, "n_trajectories": summary["n_trajectories"]}
        for name in ("t_sharp_charge", "t_sharp_dipole"):
            s = summary[name]
            row.update({name: s["median"], name + "_lo": s["ci_low"], name + "_hi": s["ci_high"],
                        name + "_censored": s["n_censored"]})
        rows.append(row)
    frame = pd.DataFrame(rows)

    fits = []
    for gamma in gammas:
        sub = frame[frame["gamma"] == gamma].sort_values("L")
        if len(sub) < 2:
            continue
        for name in ("t_sharp_charge", "t_sharp_dipole"):
            ys = [None if pd.isna(v) else float(v) for v in sub[name]]
            fits.append(_fit_row(sub["L"].to_numpy(dtype=float), ys, gamma=gamma, observable=name))
    _atomic_write(os.path.join(base, "sweep.csv"), _csv(frame))
    _atomic_write(os.path.join(base, "sweep.json"),
                  _json({"schema_version": SCHEMA_VERSION,
                         "rows": json.loads(frame.to_json(orient="records")),
                         "fits": fits}))
    return frame

# --------------------------------------------------------------------------------
# Theory and comparison

ComparisonRow = namedtuple("ComparisonRow", ["observable", "sim_form", "theory_form",
                                             "sim_exponent", "sim_error",
                                             "theory_exponent", "theory_error",
                                             "tolerance", "passed", "note"])

def _classify(xs, ys):
    """``(form, exponent, error, note)``; form `None` if the series cannot be classified."""
    try:
        c = classify_decay(xs, ys)
    except DegenerateSeries as err:
        return None, np.nan, np.nan, str(err)
    if not np.isfinite(c.report.best.residual):
        return None, np.nan, np.nan, c.report.best.note
    power = c.report["power"]
    return c.form, power.a, power.a_err, ""

def compare_theory(sim, theory, tolerances=None):
    """Compare decay forms and exponents of simulated and predicted correlators.

    `sim`, `theory`: ``{observable: (xs, ys)}``. For each observable, both
    series are classified as power law or exponential. Both power law: pass
    when the fitted exponents agree within the tolerance (default 0.3 for
    the dipole density, 0.5 for the charge density). Both exponential:
    pass. Otherwise fail.

    Raises `AxisMismatch` if the two sides do not have the same observables.
    """
    if not sim or set(sim) != set(theory):
        raise AxisMismatch("simulation observables {} do not match theory observables {}".format(
            sorted(sim), sorted(theory)))
    tolerances = dict(DEFAULT_TOLERANCES, **(tolerances or {}))
    rows = []
    for observable in sorted(sim):
        s_form, s_exp, s_err, s_note = _classify(*sim[observable])
        t_form, t_exp, t_err, t_note = _classify(*theory[observable])
        tol = tolerances.get(observable, max(DEFAULT_TOLERANCES.values()))
        if s_form is None or t_form is None:
            passed = False
        elif s_form == t_form == "power":
            passed = abs(s_exp - t_exp) <= tol
        else:
            passed = s_form == t_form
        note = "; ".join(n for n in (s_note and "sim: " + s_note, t_note and "theory: " + t_note) if n)
        rows.append(ComparisonRow(observable, s_form, t_form, float(s_exp), float(s_err),
                                  float(t_exp), float(t_err), tol, bool(passed), note))
    return rows

def _theory_separations(config):
    t = config.theory
    return np.geomspace(t.r_min, t.r_max, t.r_points)

def theory_tables(config, out=None):
    """Theory predictions for the couplings of `config`.

    Writes ``theory.csv`` (equal-time correlators at ``r_points`` log-spaced
    separations) and ``theory.json`` (Luttinger parameter, critical rate,
    phase, decay classification, phase table) to `out` (default
    ``[run] out``). Returns the JSON document.
    """
    out = out or config.run.out
    params = theory_params(config)
    rs = _theory_separations(config)
    frame = pd.DataFrame({"r": rs,
                          "dipole": correlator_profile_theory(rs, 0.0, params, "dipole"),
                          "charge": correlator_profile_theory(rs, 0.0, params, "charge")})
    doc = {"schema_version": SCHEMA_VERSION,
           "params": params.model_dump(),
           "luttinger_K": float(luttinger_K(params)),
           "gamma_critical": float(gamma_critical(params.J, params.E_b)),
           "dipole_phase": dipole_phase(params.gamma, params.J, params.E_b),
           "decay": {},
           "phase_table": phase_table(config.lattice.dim)}
    for observable in ("dipole", "charge"):
        form, exponent, err, note = _classify(rs, frame[observable].to_numpy())
        doc["decay"][observable] = {"form": form, "exponent": _finite(exponent),
                                    "error": _finite(err), "note": note}
    _atomic_write(os.path.join(out, "theory.csv"), _csv(frame))
    _atomic_write(os.path.join(out, "theory.json"), _json(doc))
    logger.info("theory: K=%.6g gamma_c=%.6g (%s)", doc["luttinger_K"], doc["gamma_critical"], doc["dipole_phase"])
    return doc

def compare_run(config, run_dir=None, tolerances=None):
    """`compare_theory` between a run's ``correlators.csv`` and the theory at `config`.

    Writes ``comparison.csv`` next to the correlators; returns the rows.
    """
    run_dir = run_dir or config.run.out
    sim_frame = pd.read_csv(os.path.join(run_dir, "correlators.csv"))
    sim_frame = sim_frame[sim_frame["separation"] >= 1]
    params = theory_params(config)
    rs = _theory_separations(config)
    sim, theory = {}, {}
    for observable in ("dipole", "charge"):
        if observable in sim_frame:
            sub = sim_frame.dropna(subset=[observable])
            sim[observable] = (sub["separation"].to_numpy(dtype=float), sub[observable].to_numpy())
            theory[observable] = (rs, correlator_profile_theory(rs, 0.0, params, observable))
    rows = compare_theory(sim, theory, tolerances)
    _atomic_write(os.path.join(run_dir, "comparison.csv"),
                  _csv(pd.DataFrame([r._asdict() for r in rows])))
    for r in rows:
        logger.info("compare %s: sim %s %.3g, theory %s %.3g -> %s", r.observable, r.sim_form,
                    r.sim_exponent, r.theory_form, r.theory_exponent, "pass" if r.passed else "FAIL")
    return rows

def sectors_table(config, out=None):
    """Window sector table and, in 1D, the global connectivity report at half filling.

    Writes ``sectors.csv`` and (1D) ``connectivity.csv``; returns the two
    DataFrames (the second `None` in 2D).
    """
    out = out or config.run.out
    family = config.family
    windows = pd.DataFrame(window_sector_table(family))
    _atomic_write(os.path.join(out, "sectors.csv"), _csv(windows))
    connectivity = None
    geometry = geometry_of(config)
    if geometry.dim == 1:
        rows = connectivity_report(geometry, geometry.n_sites // 2, family)
        connectivity = pd.DataFrame([{"Q": c.Q, "P": c.P, "n_configurations": c.n_configurations,
                                      "n_components": c.n_components,
                                      "sizes": " ".join(str(s) for s in c.sizes)}
                                     for c in rows])
        _atomic_write(os.path.join(out, "connectivity.csv"), _csv(connectivity))
        fragmented = connectivity[connectivity["n_components"] > 1]
        if len(fragmented):
            logger.warning("sectors: %d of %d dipole sectors at Q=%d are fragmented",
                           len(fragmented), len(connectivity), geometry.n_sites // 2)
    return windows, connectivity

def load_and_override(path, **overrides):
    """`config.load` followed by `config.with_overrides`; the CLI entry point."""
    return with_overrides(load(path), **overrides)
