# -*- coding: utf-8 -*-

from .fixtures import session, testset, test, test_raises, test_signals

import pickle

import numpy as np
import sympy as sp

from ..conditions import handlers, proceed
from ..theory import (TheoryParams, QuadratureNotConverged, BracketError, PHASES,
                      rho_s, rho_bar, luttinger_K, luttinger_K_at, luttinger_K_expr, luttinger_K_mp,
                      gamma_critical, vortex_fugacities, dipole_phase,
                      ln_renyi2_integral, density_correlator_theory, correlator_profile_theory,
                      subregion_variance_theory, variance_scaling, exponent_table, phase_table)

def accepting(f, *args, **kwargs):
    """Call `f`, accepting an unconverged quadrature value."""
    with handlers((QuadratureNotConverged, proceed)):
        return f(*args, **kwargs)

def runtests():
    J0 = 16.0 / 9.0  # 9 J / 16 = 1

    with testset("couplings"):
        test(abs(rho_s(1.0, J0) - 0.25) < 1e-15)
        test(abs(rho_bar(J0) - 1.0) < 1e-15)
        test(abs(luttinger_K_at(1.0, J0) - 0.5 * np.pi ** 2 * np.exp(0.125)) < 1e-12)
        test(abs(luttinger_K_at(1.0, J0) - 5.5919) < 1e-4)
        test(luttinger_K(TheoryParams()) == luttinger_K_at(1.0, J0))
        test_raises(ValueError, lambda: rho_s(0.0, J0))
        test_raises(ValueError, lambda: luttinger_K_at(1.0, -1.0))

        gammas = np.logspace(-2, 2, 40)
        test(np.all(np.diff(luttinger_K_at(gammas, J0)) < 0))

        expr = luttinger_K_expr()
        symbols = {s.name: s for s in expr.free_symbols}
        test(set(symbols) == {"J", "gamma", "E_b"})
        test(sp.simplify(expr.subs({symbols["J"]: sp.Rational(16, 9), symbols["gamma"]: 1, symbols["E_b"]: 0}) -
                         sp.pi ** 2 / 2 * sp.exp(sp.Rational(1, 8))) == 0)
        for gamma, E_b in ((0.3, 0.0), (2.0, -0.5), (7.0, 1.0)):
            test(abs(float(luttinger_K_mp(gamma, J0, E_b)) - luttinger_K_at(gamma, J0, E_b)) < 1e-12)

    with testset("BKT point"):
        for J, E_b in ((J0, 0.0), (1.0, 0.0), (4.0, -1.0)):
            gc = gamma_critical(J, E_b)
            test(abs(luttinger_K_at(gc, J, E_b) - 2.0) < 1e-9)
            test(dipole_phase(0.5 * gc, J, E_b) == "dipole-fuzzy")
            test(dipole_phase(2.0 * gc, J, E_b) == "dipole-sharp")
        # a bracket far from the root still finds it by widening
        test(abs(gamma_critical(J0, bracket=(1e-6, 1e-5)) - gamma_critical(J0)) < 1e-9)
        test_raises(BracketError, lambda: gamma_critical(J0, bracket=(1.0, 1.0001), max_expansions=0))

    with testset("parameters"):
        g_b, g_s = vortex_fugacities(TheoryParams())
        test(abs(g_b - np.exp(-0.25)) < 1e-15 and g_s == 1.0)
        g_b2, _ = vortex_fugacities(TheoryParams(), m=2)
        test(abs(g_b2 - g_b ** 2) < 1e-15)

        fuzzy = TheoryParams.from_couplings(J0, 1.0)
        test(fuzzy.m_d == 0.0 and abs(fuzzy.lambda1 - np.exp(-0.25)) < 1e-15)
        sharp = TheoryParams.from_couplings(J0, 100.0, E_s=1.0)
        test(abs(sharp.m_d - np.exp(-2.0)) < 1e-15)

        test_raises(ValueError, lambda: TheoryParams(J=-1.0))
        test_raises(ValueError, lambda: TheoryParams(m_d=-0.1))
        test_raises(ValueError, lambda: TheoryParams(bogus=1.0))
        test_raises(ValueError, lambda: setattr(TheoryParams(), "J", 2.0))
        err = pickle.loads(pickle.dumps(QuadratureNotConverged(1.5, 0.1, 1e-3, "demo")))
        test(err.value == 1.5 and err.what == "demo")

    with testset("renyi-2 integral"):
        params = TheoryParams(lambda1=1.0, m_d=0.0, cutoff=20.0)
        test(ln_renyi2_integral(0, 0, params) == 0.0)
        near = accepting(ln_renyi2_integral, 2.0, 0.0, params)
        far = accepting(ln_renyi2_integral, 16.0, 0.0, params)
        test(near < 0.0 and far < near)
        test(abs(accepting(ln_renyi2_integral, -2.0, 0.0, params) - near) < 1e-12)
        test(accepting(ln_renyi2_integral, 0.0, 3.0, params) < 0.0)
        test_raises(ValueError, lambda: ln_renyi2_integral(np.inf, 0.0, params))
        test_raises(ValueError, lambda: ln_renyi2_integral(1.0, 0.0, params, "quadrupole"))

        # infrared divergent without a dipole-vortex mass
        test_signals(QuadratureNotConverged, lambda: ln_renyi2_integral(4.0, 0.0, params, "charge"))
        massive = TheoryParams(lambda1=1.0, m_d=1.0, cutoff=20.0)
        test(accepting(ln_renyi2_integral, 4.0, 0.0, massive, "charge") < 0.0)

    with testset("density correlators"):
        params = TheoryParams(lambda1=1.0, m_d=0.0)
        for r in (2.0, 10.0, 50.0):
            test(abs(density_correlator_theory(r, 0.0, params) + 2 * np.pi / r ** 2) < 1e-6 * 2 * np.pi / r ** 2)
            test(abs(density_correlator_theory(r, 0.0, params, "charge") - 12 * np.pi / r ** 4) < 1e-6 * 12 * np.pi / r ** 4)
        stiff = TheoryParams(lambda1=4.0, m_d=0.0)
        test(abs(density_correlator_theory(10.0, 0.0, stiff) + np.pi / 100.0) < 1e-6 * np.pi / 100.0)
        # equal-time at |t| and -|t|
        test(density_correlator_theory(5.0, 2.0, params) == density_correlator_theory(5.0, -2.0, params))

        massive = TheoryParams(lambda1=1.0, m_d=1.0)
        c10 = accepting(density_correlator_theory, 10.0, 0.0, massive)
        c20 = accepting(density_correlator_theory, 20.0, 0.0, massive)
        test(c10 < 0.0 and abs(c20) < 1e-3 * abs(c10))

        rs = np.array([10.0, 20.0, 40.0])
        profile = correlator_profile_theory(rs, 0.0, params)
        test(profile.shape == (3,) and np.allclose(profile, -2 * np.pi / rs ** 2))

        test_raises(ValueError, lambda: density_correlator_theory(0.0, 0.0, params))
        test_raises(ValueError, lambda: density_correlator_theory(0.01, 0.0, params))
        test_raises(ValueError, lambda: density_correlator_theory(1.0, 0.0, params, "quadrupole"))

    with testset("subregion fluctuations"):
        params = TheoryParams(lambda1=1.0, m_d=0.0)
        for ell, t in ((10.0, 2.0), (4.0, 8.0)):
            closed = 2 * np.pi * np.log(1 + ell ** 2 / (2 * t) ** 2)
            test(abs(subregion_variance_theory(ell, t, params) - closed) < 1e-6 * closed)
        test_raises(ValueError, lambda: subregion_variance_theory(10.0, 0.0, params))
        test_raises(ValueError, lambda: subregion_variance_theory(-1.0, 1.0, params))

    with testset("scaling laws"):
        laws = exponent_table("sharp-weak", 1)
        test(laws["dipole"].ell == 2 and laws["dipole"].t == -2 and laws["dipole"].tau == 1)
        test(laws["charge"].t == -4)
        test(exponent_table("weak-weak", 2)["dipole"].tau == 4)
        test_raises(ValueError, lambda: exponent_table("weak-weak", 1))
        test_raises(ValueError, lambda: exponent_table("fuzzy", 1))
        test_raises(ValueError, lambda: exponent_table("sharp-weak", 3))

        test(variance_scaling(10.0, 2.0, "sharp-weak", 1) == 25.0)
        test(abs(variance_scaling(3.0, 2.0, "sharp-sharp", 1, m_d=4.0) - 3.0 * np.exp(-4.0)) < 1e-15)
        test_raises(ValueError, lambda: variance_scaling(3.0, 2.0, "sharp-sharp", 1))
        test_raises(ValueError, lambda: variance_scaling(3.0, 2.0, "weak-weak", 2))
        # in 2D the gapped phase only has a typical time, ~ log ell
        gapped = exponent_table("sharp-sharp", 2)
        test(all(law.form is None and law.tau == "log" for law in gapped.values()))
        test_raises(ValueError, lambda: variance_scaling(3.0, 2.0, "sharp-sharp", 2, m_d=4.0))
        test_raises(ValueError, lambda: variance_scaling(3.0, 2.0, "sharp-weak", 1, "entropy"))

        test(len(phase_table(1)) == 4 and len(phase_table(2)) == 6)
        test({row["phase"] for row in phase_table(2)} == set(PHASES))
        test_raises(ValueError, lambda: phase_table(3))

if __name__ == '__main__':  # pragma: no cover
    with session(__file__):
        runtests()
