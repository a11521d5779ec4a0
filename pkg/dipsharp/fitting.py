# -*- coding: utf-8 -*-
"""Scaling fits, decay classification and resampling error bars.

`fit_scaling` fits every candidate form to a series by least squares on the
linearized model:

  ===============  =========================  ==========================
  form             model                      linearization
  ===============  =========================  ==========================
  ``log``          y = a ln x + b             y   vs  ln x
  ``linear``       y = a x + b                y   vs  x
  ``power``        y = s e^b x^a              ln|y| vs ln x
  ``exponential``  y = s e^(a x + b)          ln|y| vs x
  ===============  =========================  ==========================

where ``s`` is the common sign of the data (correlators may be negative).
Forms that the data cannot support (a logarithm of a nonpositive ``x``, a
sign change in ``y`` for the multiplicative forms) are kept in the report
with an infinite residual and the reason; no data point is ever dropped.

The residuals of all forms are compared in one space, either ``"linear"``
(sum of squared errors in ``y``) or ``"log"`` (in ``ln|y|``), and the form
with the smallest residual wins.
"""

__all__ = ["DegenerateSeries", "FORMS", "Fit", "FitReport", "Classification", "BootstrapSummary",
           "fit_scaling", "classify_decay", "bootstrap_median", "jackknife"]

import logging
from collections import namedtuple

import numpy as np
from scipy import stats

from .dynassign import dyn, make_dynvar

logger = logging.getLogger(__name__)

make_dynvar(bootstrap_resamples=1000)

FORMS = ("log", "linear", "power", "exponential")
MIN_POINTS = 4

class DegenerateSeries(ValueError):
    """A series too short, or too constant, to fit."""

Fit = namedtuple("Fit", ["form", "a", "b", "a_err", "b_err", "sign", "residual", "note"])
Fit.__doc__ = """Least-squares fit of one form. `a` is the slope of the linearized
model (the exponent for ``power``, the rate for ``exponential``), `b` the
intercept. `residual` is in the comparison space of the report; ``inf`` with
a `note` when the form does not apply to the data."""

def _predict(fit, x):
    if fit.form == "log":
        return fit.a * np.log(x) + fit.b
    if fit.form == "linear":
        return fit.a * x + fit.b
    if fit.form == "power":
        return fit.sign * np.exp(fit.b) * x ** fit.a
    if fit.form == "exponential":
        return fit.sign * np.exp(fit.a * x + fit.b)
    raise ValueError("Unknown form '{}'".format(fit.form))

class FitReport:
    """All candidate fits of one series, and the winner.

    `ratio`: residual of the runner-up over the residual of the best form
    (``inf`` when the best fit is exact).
    """
    def __init__(self, fits, space, n_points):
        self.fits = dict(fits)
        self.space = space
        self.n_points = n_points
        ranked = sorted(self.fits.values(), key=lambda f: f.residual)
        self.best = ranked[0]
        if len(ranked) > 1:
            best, second = ranked[0].residual, ranked[1].residual
            self.ratio = second / best if best > 0 else np.inf
        else:
            self.ratio = np.nan

    @property
    def form(self):
        return self.best.form

    def __getitem__(self, form):
        return self.fits[form]

    def residual_ratio(self, worse, better):
        """``residual(worse) / residual(better)``; ``inf`` if `better` is exact."""
        r_better = self.fits[better].residual
        r_worse = self.fits[worse].residual
        return r_worse / r_better if r_better > 0 else np.inf

    def predict(self, x, form=None):
        return _predict(self.fits[form or self.form], np.asarray(x, dtype=float))

    def to_dict(self):
        return {"best": self.form,
                "ratio": float(self.ratio),
                "space": self.space,
                "n_points": self.n_points,
                "fits": {name: f._asdict() for name, f in self.fits.items()}}

    def __repr__(self):
        return "<FitReport best={} ratio={:.3g} over {} points>".format(self.form, self.ratio, self.n_points)

def _check_series(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1D arrays of equal length")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise DegenerateSeries("series contains non-finite values")
    if len(xs) < MIN_POINTS:
        raise DegenerateSeries("need at least {} points, got {}".format(MIN_POINTS, len(xs)))
    if np.ptp(ys) == 0:
        raise DegenerateSeries("constant series y = {}".format(ys[0]))
    if np.ptp(xs) == 0:
        raise DegenerateSeries("all x values are equal")
    return xs, ys

def _fit_one(form, xs, ys, space):
    def unavailable(note):
        return Fit(form, np.nan, np.nan, np.nan, np.nan, 1.0, np.inf, note)

    sign = 1.0
    if form in ("log", "power") and np.any(xs <= 0):
        return unavailable("needs x > 0")
    if form in ("power", "exponential"):
        if np.any(ys == 0) or (np.any(ys > 0) and np.any(ys < 0)):
            return unavailable("needs y of one sign, nonzero")
        sign = float(np.sign(ys[0]))
    u = np.log(xs) if form in ("log", "power") else xs
    v = np.log(np.abs(ys)) if form in ("power", "exponential") else ys
    reg = stats.linregress(u, v)
    fit = Fit(form, float(reg.slope), float(reg.intercept),
              float(reg.stderr), float(reg.intercept_stderr), sign, np.nan, "")
    yhat = _predict(fit, xs)
    if space == "linear":
        residual = float(np.sum((ys - yhat) ** 2))
    else:
        if np.any(np.sign(yhat) != np.sign(ys)):
            return fit._replace(residual=np.inf, note="prediction changes sign; no log residual")
        residual = float(np.sum((np.log(np.abs(ys)) - np.log(np.abs(yhat))) ** 2))
    return fit._replace(residual=residual)

def fit_scaling(xs, ys, forms=FORMS, space="linear"):
    """Fit each of `forms` to the series ``(xs, ys)``; return a `FitReport`.

    `space`: ``"linear"`` or ``"log"``, where residuals are compared.

    Raises `DegenerateSeries` for fewer than four points or a constant
    series.
    """
    if space not in ("linear", "log"):
        raise ValueError("Unknown residual space '{}'".format(space))
    unknown = set(forms) - set(FORMS)
    if unknown:
        raise ValueError("Unknown forms {}; expected a subset of {}".format(sorted(unknown), FORMS))
    xs, ys = _check_series(xs, ys)
    fits = {form: _fit_one(form, xs, ys, space) for form in forms}
    report = FitReport(fits, space, len(xs))
    logger.debug("fit_scaling: %r", report)
    return report

Classification = namedtuple("Classification", ["form", "ratio", "window", "report"])
Classification.__doc__ = """Power law or exponential: `form` is ``"power"`` or
``"exponential"``; `ratio` the loser's log-space residual over the winner's;
`window` the ``(xmin, xmax)`` actually fitted."""

def classify_decay(xs, ys, window=None):
    """Decide between algebraic and exponential decay of ``|y|``.

    Fits both forms on ``xmin <= x <= xmax`` (`window`, default all
    points) and compares residuals of ``ln|y|``.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if window is not None:
        lo, hi = window
        keep = (xs >= lo) & (xs <= hi)
        xs, ys = xs[keep], ys[keep]
    report = fit_scaling(xs, ys, forms=("power", "exponential"), space="log")
    loser = "exponential" if report.form == "power" else "power"
    ratio = report.residual_ratio(loser, report.form)
    return Classification(report.form, ratio, (float(xs.min()), float(xs.max())), report)

BootstrapSummary = namedtuple("BootstrapSummary", ["median", "lo", "hi", "n", "n_censored"])
BootstrapSummary.__doc__ = """Median with a bootstrap confidence interval.

Censored entries count as ``+inf``: the median (or a bound) is ``inf`` when
half the sample (or more) never sharpened."""

def bootstrap_median(values, rng, resamples=None, confidence=0.95):
    """Percentile-bootstrap confidence interval for the median of `values`.

    `values`: sharpening times; ``None`` or ``nan`` marks a censored
    trajectory. `resamples` defaults to ``dyn.bootstrap_resamples``.
    """
    resamples = resamples or dyn.bootstrap_resamples
    raw = [np.nan if v is None else float(v) for v in values]
    x = np.asarray(raw, dtype=float)
    if not len(x):
        raise DegenerateSeries("no values to bootstrap")
    censored = np.isnan(x)
    x[censored] = np.inf
    idx = rng.integers(0, len(x), size=(resamples, len(x)))
    medians = np.sort(x[idx], axis=1)
    medians = _sorted_median(medians)
    alpha = (1.0 - confidence) / 2
    lo, hi = np.quantile(medians, [alpha, 1 - alpha], method="inverted_cdf")
    return BootstrapSummary(float(_sorted_median(np.sort(x)[None, :])[0]), float(lo), float(hi),
                            len(x), int(censored.sum()))

def _sorted_median(rows):
    """Median of each row of an already row-sorted array; inf-safe."""
    n = rows.shape[1]
    if n % 2:
        return rows[:, n // 2]
    lo, hi = rows[:, n // 2 - 1], rows[:, n // 2]
    return np.where(np.isinf(hi), hi, (lo + hi) / 2)

def jackknife(estimate, n_samples, blocks=None):
    """Delete-one-block jackknife standard error.

    `estimate(indices)` evaluates the statistic on the samples at `indices`
    (an int array). Samples are assigned to `blocks` strided blocks
    (``i % blocks``); default: all samples, one per block.

    Returns ``(value, error)``, `value` on all samples. Works elementwise for
    array-valued statistics.
    """
    everything = np.arange(n_samples)
    value = np.asarray(estimate(everything), dtype=float)
    blocks = min(blocks or n_samples, n_samples)
    if blocks < 2:
        return value, np.zeros_like(value)
    label = everything % blocks
    partial = np.array([estimate(everything[label != b]) for b in range(blocks)], dtype=float)
    spread = partial - partial.mean(axis=0)
    error = np.sqrt((blocks - 1) / blocks * np.sum(spread ** 2, axis=0))
    return value, error
