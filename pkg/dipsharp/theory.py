# -*- coding: utf-8 -*-
"""Field-theory predictions for monitored dipole-conserving chains.

Couplings of the 1+1D theory::

    rho_s = (9 J / (16 gamma**2))**(1/3) / 4      phase stiffness
    rho_bar = 9 J / 16
    K = (pi**2 / 2) u**(1/6) exp(u**(1/3) / 8 + E_b),    u = 9 J / (16 gamma**2)

The Luttinger parameter `K` decreases monotonically in the measurement rate;
the dipole sharpening (BKT) transition sits at ``K = 2``, dipole-fuzzy for
``K > 2``.

The Gaussian theory of the replica-asymmetric fields has two reduced
parameters: ``lambda1`` (the always relevant charge-vortex term, playing the
role of a stiffness for the dipole density) and ``m_d >= 0`` (the
dipole-vortex mass, zero in the dipole-fuzzy phase). In terms of them:

  - `ln_renyi2_integral`: the logarithm of the Renyi-2 correlator, a 2D
    integral over momentum and frequency up to the cutoff.
  - `density_correlator_theory`: the connected dipole-density (kernel
    ``k**2``) or charge-density (``k**4``) correlator at separation ``r``
    and time ``t``. The frequency integral is done analytically and the
    momentum integral by deforming the contour onto the branch cut at
    ``k = i s``, ``s >= sqrt(m_d / lambda1)``, which gives the cutoff-free
    result as a rapidly convergent real integral.
  - `subregion_variance_theory`: the fluctuation of the density integrated
    over a window of length ``ell`` after time ``t``.

Proportionality constants dropped in the field theory mean that comparisons
with simulations are made at the level of exponents and decay forms.
"""

__all__ = ["TheoryParams", "QuadratureNotConverged", "BracketError",
           "PHASES", "ScalingLaw",
           "rho_s", "rho_bar", "luttinger_K", "luttinger_K_at", "luttinger_K_expr", "luttinger_K_mp",
           "gamma_critical", "vortex_fugacities", "dipole_phase",
           "ln_renyi2_integral", "density_correlator_theory", "correlator_profile_theory",
           "subregion_variance_theory", "variance_scaling", "exponent_table", "phase_table"]

import logging
from collections import namedtuple
from functools import lru_cache

import mpmath
import numpy as np
import sympy as sp
from numpy.polynomial.legendre import leggauss
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate, optimize

from .conditions import cerror

logger = logging.getLogger(__name__)

class QuadratureNotConverged(ArithmeticError):
    """A quadrature did not reach its tolerance.

    `value` is the best value obtained, `estimate` the achieved absolute
    error estimate, `tolerance` the requested relative tolerance.
    """
    def __init__(self, value, estimate, tolerance, what="quadrature"):
        super().__init__("{} not converged: value {:.6g}, error estimate {:.3g}, relative tolerance {:.1g}".format(what, value, estimate, tolerance))
        self.value = value
        self.estimate = estimate
        self.tolerance = tolerance
        self.what = what

    def __reduce__(self):
        return (QuadratureNotConverged, (self.value, self.estimate, self.tolerance, self.what))

class BracketError(ValueError):
    """No sign change of K(gamma) - 2 was found."""

class TheoryParams(BaseModel):
    """Parameters of the field-theory predictions.

    `J`, `gamma`, `E_b`, `E_s` are the circuit-level couplings (core energies
    are free inputs). `lambda1`, `m_d`, `cutoff` are the reduced parameters
    of the Gaussian theory; `nodes`, `levels` and `tolerance` control the 2D
    quadrature of `ln_renyi2_integral`; `tolerance` is also the relative
    tolerance of the 1D quadratures.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    J: float = Field(16.0 / 9.0, gt=0)
    gamma: float = Field(1.0, gt=0)
    E_b: float = 0.0
    E_s: float = 0.0
    lambda1: float = Field(1.0, gt=0)
    m_d: float = Field(0.0, ge=0)
    cutoff: float = Field(50.0, gt=0)
    nodes: int = Field(8, ge=2)
    levels: int = Field(30, ge=1)
    tolerance: float = Field(1e-3, gt=0)

    @classmethod
    def from_couplings(cls, J, gamma, E_b=0.0, E_s=0.0, **kwargs):
        """Reduced parameters from the couplings.

        ``lambda1 = g_b``; ``m_d = g_s`` in the dipole-sharp phase and 0 in
        the dipole-fuzzy phase (first vortex harmonic).
        """
        params = cls(J=J, gamma=gamma, E_b=E_b, E_s=E_s, **kwargs)
        g_b, g_s = vortex_fugacities(params)
        m_d = g_s if dipole_phase(gamma, J, E_b) == "dipole-sharp" else 0.0
        return params.model_copy(update={"lambda1": g_b, "m_d": m_d})

# --------------------------------------------------------------------------------
# Couplings, Luttinger parameter, BKT point

def _check_positive(**values):
    for name, v in values.items():
        if not np.all(np.asarray(v) > 0):
            raise ValueError("{} must be positive, got {}".format(name, v))

def rho_s(gamma, J):
    """Phase stiffness ``(9J / 16 gamma**2)**(1/3) / 4``."""
    _check_positive(gamma=gamma, J=J)
    return 0.25 * np.cbrt(9.0 * J / (16.0 * np.asarray(gamma, dtype=float) ** 2))

def rho_bar(J):
    """``9J / 16``."""
    _check_positive(J=J)
    return 9.0 * J / 16.0

def luttinger_K_at(gamma, J, E_b=0.0):
    """K as a function of the rate; `gamma` may be an array."""
    _check_positive(gamma=gamma, J=J)
    u = 9.0 * J / (16.0 * np.asarray(gamma, dtype=float) ** 2)
    return 0.5 * np.pi ** 2 * u ** (1.0 / 6.0) * np.exp(np.cbrt(u) / 8.0 + E_b)

def luttinger_K(params):
    """Luttinger parameter of a `TheoryParams`."""
    return float(luttinger_K_at(params.gamma, params.J, params.E_b))

@lru_cache(maxsize=None)
def luttinger_K_expr():
    """The closed form of K as a sympy expression in ``J, gamma, E_b``."""
    J, gamma = sp.symbols("J gamma", positive=True)
    E_b = sp.Symbol("E_b", real=True)
    u = 9 * J / (16 * gamma ** 2)
    return sp.pi ** 2 / 2 * u ** sp.Rational(1, 6) * sp.exp(sp.cbrt(u) / 8 + E_b)

def luttinger_K_mp(gamma, J, E_b=0, dps=30):
    """K evaluated in mpmath at `dps` decimal digits (an ``mpf``)."""
    expr = luttinger_K_expr()
    symbols = sorted(expr.free_symbols, key=lambda s: s.name)
    f = sp.lambdify(symbols, expr, modules="mpmath")
    values = {"E_b": E_b, "J": J, "gamma": gamma}
    with mpmath.workdps(dps):
        return f(*[mpmath.mpf(values[s.name]) for s in symbols])

def gamma_critical(J, E_b=0.0, bracket=(1e-3, 1e3), max_expansions=40):
    """The rate at which ``K = 2``.

    Starts from `bracket` and widens it by decades until K - 2 changes sign,
    then bisects in ``ln gamma`` to machine precision. K is monotone in the
    rate, so the root is unique. Raises `BracketError` if no sign change is
    found.
    """
    _check_positive(J=J)
    lo, hi = bracket
    f = lambda s: luttinger_K_at(np.exp(s), J, E_b) - 2.0
    for _ in range(max_expansions):
        if f(np.log(lo)) > 0:
            break
        lo /= 10.0
    for _ in range(max_expansions):
        if f(np.log(hi)) < 0:
            break
        hi *= 10.0
    if not (f(np.log(lo)) > 0 > f(np.log(hi))):
        raise BracketError("K(gamma) = 2 not bracketed in [{:g}, {:g}] for J={}, E_b={}".format(lo, hi, J, E_b))
    s = optimize.bisect(f, np.log(lo), np.log(hi), xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400)
    logger.debug("gamma_critical(J=%g, E_b=%g) = %.15g", J, E_b, np.exp(s))
    return float(np.exp(s))

def vortex_fugacities(params, m=1):
    """``(g_b, g_s)`` of vortex harmonic `m`.

    ``g_b = exp(-2m (E_b + rho_s / 2))``, ``g_s = exp(-2m E_s)``.
    """
    g_b = np.exp(-2.0 * m * (params.E_b + rho_s(params.gamma, params.J) / 2.0))
    g_s = np.exp(-2.0 * m * params.E_s)
    return float(g_b), float(g_s)

def dipole_phase(gamma, J, E_b=0.0):
    """``"dipole-fuzzy"`` when K > 2, else ``"dipole-sharp"``."""
    return "dipole-fuzzy" if luttinger_K_at(gamma, J, E_b) > 2.0 else "dipole-sharp"

# --------------------------------------------------------------------------------
# Renyi-2 integral

_KERNEL_POWER = {"charge": 0, "dipole": 2}

def _observable_power(observable, table):
    try:
        return table[observable]
    except KeyError:
        raise ValueError("Unknown observable '{}'; expected one of {}".format(observable, sorted(table))) from None

def _breakpoints(cutoff, levels, max_width):
    """Panel edges on [0, cutoff]: dyadic grading toward 0, then no panel wider than `max_width`."""
    edges = np.concatenate([[0.0], cutoff * 2.0 ** -np.arange(levels, -1, -1)])
    pieces = [np.linspace(a, b, max(1, int(np.ceil((b - a) / max_width))) + 1)
              for a, b in zip(edges[:-1], edges[1:])]
    return np.unique(np.concatenate(pieces))

def _gauss_grid(breaks, nodes):
    xi, wi = leggauss(nodes)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = (b - a) / 2.0
    return (half * xi + (a + b) / 2.0).ravel(), (half * wi).ravel()

def _renyi2_quadrature(x, t, params, power, nodes, levels, chunk=4096):
    cutoff = params.cutoff
    kmax = np.pi / (2.0 * abs(x)) if x else cutoff
    wmax = np.pi / (2.0 * abs(t)) if t else cutoff
    k, wk = _gauss_grid(_breakpoints(cutoff, levels, kmax), nodes)
    w, ww = _gauss_grid(_breakpoints(cutoff, levels, wmax), nodes)
    w2 = w[None, :] ** 2
    coswt = np.cos(w * t)[None, :]
    total = 0.0
    for start in range(0, len(k), chunk):
        kk = k[start:start + chunk, None]
        k2 = kk ** 2
        g = w2 * k2 ** (power // 2) / ((w2 + k2) ** 2 * (w2 + params.lambda1 * k2 + params.m_d))
        g = g * (1.0 - np.cos(kk * x) * coswt)
        total += wk[start:start + chunk] @ g @ ww
    return 4.0 * total

def ln_renyi2_integral(x, t, params, observable="dipole"):
    """Logarithm of the Renyi-2 correlator at separation `x`, time `t`.

    ``-int dk dw w**2 k**p (1 - cos(k x - w t)) / ((w**2 + k**2)**2 (w**2 + lambda1 k**2 + m_d))``
    over ``[-cutoff, cutoff]**2``, ``p = 0`` (charge) or 2 (dipole). The
    result is ``<= 0``.

    Composite Gauss-Legendre on panels graded toward the origin and no
    wider than a quarter period of the cosines. The rule is refined (nodes
    doubled, ten more grading levels); if the relative change exceeds
    ``params.tolerance``, `QuadratureNotConverged` is signaled with `cerror`
    (e.g. the charge integral at ``m_d = 0`` is infrared divergent). Returns
    the refined value.
    """
    power = _observable_power(observable, _KERNEL_POWER)
    if not (np.isfinite(x) and np.isfinite(t)):
        raise ValueError("x and t must be finite")
    if x == 0 and t == 0:
        return 0.0
    coarse = _renyi2_quadrature(x, t, params, power, params.nodes, params.levels)
    fine = _renyi2_quadrature(x, t, params, power, 2 * params.nodes, params.levels + 10)
    change = abs(fine - coarse)
    if change > params.tolerance * abs(fine):
        cerror(QuadratureNotConverged(-fine, change, params.tolerance,
                                      "ln_renyi2_integral({}, x={}, t={})".format(observable, x, t)))
    return -fine

# --------------------------------------------------------------------------------
# Density correlators and fluctuations

_CORRELATOR_POWER = {"dipole": 2, "charge": 4}

def density_correlator_theory(r, t, params, observable="dipole"):
    """Connected density correlator at separation ``r > 0`` and time `t`.

    ``int dk dw exp(i k r - i w t) k**n / (w**2 + lambda1 k**2 + m_d)`` with
    ``n = 2`` (dipole density) or 4 (charge density), evaluated as::

        2 pi (-1)**(n/2) int_kappa^inf s**n cos(|t| sigma) exp(-s r) / sigma ds

    with ``sigma = sqrt(lambda1 s**2 - m_d)``, ``kappa = sqrt(m_d / lambda1)``.
    This is the cutoff-free value, valid for ``r >> 1 / cutoff``; smaller `r`
    raise `ValueError`. A quadrature error estimate above ``params.tolerance``
    (relative) signals `QuadratureNotConverged` with `cerror`.
    """
    n = _observable_power(observable, _CORRELATOR_POWER)
    if not r > 0:
        raise ValueError("separation must be positive, got {}".format(r))
    if r * params.cutoff < 1.0:
        raise ValueError("separation {} is below the cutoff length 1/{}".format(r, params.cutoff))
    lam, m, at = params.lambda1, params.m_d, abs(t)
    sign = (-1) ** (n // 2)
    if m == 0:
        f = lambda s: s ** (n - 1) * np.cos(at * np.sqrt(lam) * s) * np.exp(-s * r) / np.sqrt(lam)
        value, err = integrate.quad(f, 0.0, 80.0 / r, limit=500)
    else:
        kappa = np.sqrt(m / lam)
        def f(s):
            sigma = np.sqrt(max(lam * (s * s - kappa * kappa), 0.0))
            return s ** n * np.cos(at * sigma) * np.exp(-(s - kappa) * r) / (np.sqrt(lam) * np.sqrt(s + kappa))
        # weight (s - kappa)**-1/2 takes the branch-point singularity
        value, err = integrate.quad(f, kappa, kappa + 80.0 / r, weight="alg", wvar=(-0.5, 0.0), limit=500)
        value *= np.exp(-kappa * r)
        err *= np.exp(-kappa * r)
    value, err = 2.0 * np.pi * sign * value, 2.0 * np.pi * err
    if err > params.tolerance * abs(value):
        cerror(QuadratureNotConverged(value, err, params.tolerance,
                                      "density_correlator_theory({}, r={}, t={})".format(observable, r, t)))
    return float(value)

def correlator_profile_theory(rs, t, params, observable="dipole"):
    """`density_correlator_theory` over an array of separations."""
    return np.array([density_correlator_theory(float(r), t, params, observable) for r in rs])

def subregion_variance_theory(ell, t, params, observable="dipole"):
    """Fluctuation of the density integrated over a window of length `ell` after time ``t > 0``.

    ``int dk (2 sin(k ell / 2) / k)**2 G(k, 2t)`` with the frequency-integrated
    kernel ``G(k, tau) = pi k**n exp(-a tau) / a``, ``a = sqrt(lambda1 k**2 + m_d)``.
    For the dipole at ``m_d = 0`` this equals
    ``(2 pi / sqrt(lambda1)) ln(1 + ell**2 / (lambda1 (2t)**2))``.
    """
    n = _observable_power(observable, _CORRELATOR_POWER)
    if not (ell > 0 and t > 0):
        raise ValueError("need ell > 0 and t > 0, got ell={}, t={}".format(ell, t))
    lam, m, tau = params.lambda1, params.m_d, 2.0 * t

    def f(k):
        a = np.sqrt(lam * k * k + m)
        window = ell ** 2 if k == 0 else (2.0 * np.sin(k * ell / 2.0) / k) ** 2
        return window * k ** n * np.pi * np.exp(-a * tau) / a if a > 0 else 0.0
    # the decay scale of exp(-a tau) sets the integration range
    kmax = 80.0 / (np.sqrt(lam) * tau)
    breaks = np.linspace(0.0, kmax, 1 + max(1, int(np.ceil(kmax * ell / (2 * np.pi)))))
    value, err = 0.0, 0.0
    for a_, b_ in zip(breaks[:-1], breaks[1:]):
        v, e = integrate.quad(f, a_, b_, limit=200)
        value += v
        err += e
    value *= 2.0
    err *= 2.0
    if err > params.tolerance * abs(value):
        cerror(QuadratureNotConverged(value, err, params.tolerance,
                                      "subregion_variance_theory({}, ell={}, t={})".format(observable, ell, t)))
    return float(value)

# --------------------------------------------------------------------------------
# Scaling laws and the phase table

PHASES = ("weak-weak", "sharp-weak", "sharp-sharp")

ScalingLaw = namedtuple("ScalingLaw", ["ell", "t", "form", "tau"])
ScalingLaw.__doc__ = """Asymptotic law of a subregion fluctuation.

``form == "power"``: sigma**2 ~ ell**ell_exp * t**t_exp. ``"exponential"``:
sigma**2 ~ ell**ell_exp * exp(-sqrt(m_d) t) (`t` is None). ``None``: only
the typical time is known. `tau` is the exponent of ell in the typical time,
or ``"log"``."""

# (dim, phase) -> {observable: law}; phase labels are "<charge>-<dipole>" symmetry.
_LAWS = {
    (1, "sharp-weak"): {"dipole": ScalingLaw(2, -2, "power", 1),
                        "charge": ScalingLaw(2, -4, "power", 0.5)},
    (1, "sharp-sharp"): {"dipole": ScalingLaw(1, None, "exponential", "log"),
                         "charge": ScalingLaw(1, None, "exponential", "log")},
    (2, "weak-weak"): {"charge": ScalingLaw(None, None, None, 2),
                       "dipole": ScalingLaw(None, None, None, 4)},
    (2, "sharp-weak"): {"charge": ScalingLaw(4, -5, "power", None),
                        "dipole": ScalingLaw(4, -3, "power", None)},
    (2, "sharp-sharp"): {"dipole": ScalingLaw(None, None, None, "log"),
                         "charge": ScalingLaw(None, None, None, "log")},
}

def exponent_table(phase, dim):
    """``{observable: ScalingLaw}`` for a phase.

    `phase`: one of `PHASES`, ``"<charge symmetry>-<dipole symmetry>"``.
    The weak-weak phase does not occur in 1D (a charge-fuzzy chain is
    impossible once the dipole term is relevant).
    """
    if phase not in PHASES:
        raise ValueError("Unknown phase '{}'; expected one of {}".format(phase, PHASES))
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2, got {}".format(dim))
    try:
        return dict(_LAWS[(dim, phase)])
    except KeyError:
        raise ValueError("phase '{}' is not realized in {}D".format(phase, dim)) from None

def variance_scaling(ell, t, phase, dim, observable="dipole", m_d=None):
    """Evaluate the asymptotic law of the subregion fluctuation (no prefactor).

    Exponential laws need `m_d`.
    """
    law = exponent_table(phase, dim)[_check_observable(observable)]
    if law.form == "power":
        return ell ** law.ell * t ** law.t
    if law.form == "exponential":
        if m_d is None:
            raise ValueError("the exponential law needs m_d")
        return ell ** law.ell * np.exp(-np.sqrt(m_d) * t)
    raise ValueError("no closed-form fluctuation law for phase '{}' in {}D; only the typical time ell**{}".format(phase, dim, law.tau))

def _check_observable(observable):
    if observable not in ("charge", "dipole"):
        raise ValueError("Unknown observable '{}'".format(observable))
    return observable

_PHASE_TABLE = {
    1: [dict(phase="sharp-weak", observable="charge", sharpening_time="log L", renyi2="exponential"),
        dict(phase="sharp-weak", observable="dipole", sharpening_time="L", renyi2="quasi-long-range"),
        dict(phase="sharp-sharp", observable="charge", sharpening_time="log L", renyi2="exponential"),
        dict(phase="sharp-sharp", observable="dipole", sharpening_time="log L", renyi2="exponential")],
    2: [dict(phase="weak-weak", observable="charge", sharpening_time="L^2", renyi2="quasi-long-range"),
        dict(phase="weak-weak", observable="dipole", sharpening_time="L^2", renyi2="long-range"),
        dict(phase="sharp-weak", observable="charge", sharpening_time="log L", renyi2="exponential"),
        dict(phase="sharp-weak", observable="dipole", sharpening_time="L^2", renyi2="long-range"),
        dict(phase="sharp-sharp", observable="charge", sharpening_time="log L", renyi2="exponential"),
        dict(phase="sharp-sharp", observable="dipole", sharpening_time="log L", renyi2="exponential")],
}

def phase_table(dim):
    """Rows ``{phase, observable, sharpening_time, renyi2}`` of the qualitative phase diagram."""
    if dim not in _PHASE_TABLE:
        raise ValueError("dim must be 1 or 2, got {}".format(dim))
    return [dict(row) for row in _PHASE_TABLE[dim]]
