import numpy as np
import pytest
import sympy as sp

from qikdv import abelianization as ab
from qikdv import deformations as dfm
from qikdv import loop_algebra as la
from qikdv import nls_map, pde_core
from qikdv.config import C_GAUGE as C
from qikdv.config import E, SQRT2
from qikdv.errors import SingularityError, ValidationError
from qikdv.grid import GridField, deriv

from conftest import L, N

UUXX = dfm.LocalTerm(dfm.Family.UUXX, 0.05)


def _zero(n=N):
    return GridField(L, np.zeros(n))


def _narrow_bump(n=N):
    # decays to 1e-8 at the edges, so the periodic seam stays smooth
    return GridField.from_function(lambda x: -0.2 / np.cosh(x / 1.5) ** 2, L, n)


def _frames(u, spec, delta=1e-4):
    eq = "kdv" if spec is dfm.NONE else "deformed_kdv"
    return ab.adjacent_frames(u, pde_core.EvolutionProblem(eq, L, u.n, deformation=spec), delta)


def _zi(frames, spec):
    vals = np.stack([f.field.values for f in frames])
    return ab.zeroth_identities(ab.real_lax_data(vals, spec, L), [f.t for f in frames])


# -- zeroth order ---------------------------------------------------------------------------


@pytest.mark.parametrize("x_start", [None, 0.0])
def test_riccati_linear_for_zero_field(x_start):
    sol = ab.solve_riccati_zeroth(_zero(), x_start=x_start, a0=0.7)
    x = _zero().x
    xs = x[0] if x_start is None else x_start
    assert sol.singular is None
    assert np.abs(sol.a_minus0 - (0.7 - SQRT2 * E * (x - xs))).max() < 1e-10


def test_riccati_equilibrium_for_negative_constant():
    u0 = -0.5
    u = GridField(L, np.full(N, u0))
    a_eq = -E * np.sqrt(2.0 / abs(u0))
    sol = ab.solve_riccati_zeroth(u, a0=a_eq)
    assert np.abs(sol.a_minus0 - a_eq).max() < 1e-10
    assert ab.riccati_residual(u, sol) < 1e-10


def test_riccati_equilibrium_attracts():
    u = GridField(L, np.full(N, -0.5))
    a_eq = -E * 2.0
    sol = ab.solve_riccati_zeroth(u, a0=a_eq + 0.5)
    assert abs(sol.a_minus0[-1] - a_eq) < 1e-8


def test_soliton_riccati_refinement(soliton):
    sol = nls_map.soliton_kdv(4.0, x0=-5.0)
    coarse = ab.solve_riccati_zeroth(soliton)
    fine = ab.solve_riccati_zeroth(GridField.from_function(sol, L, 8 * N))
    # positive potentials always produce a pole; compare before it, away from its neighbourhood
    assert coarse.singular is not None
    assert abs(coarse.singular - fine.singular) < 0.05
    a, af = coarse.a_minus0, fine.a_minus0[::8]
    ok = np.isfinite(a) & np.isfinite(af) & (np.abs(a) < 10)
    assert ok.sum() > 20
    assert np.abs(a - af)[ok].max() < 1e-8


def test_riccati_residual_on_regular_segment(soliton):
    sol = ab.solve_riccati_zeroth(_narrow_bump())
    assert sol.singular is None
    assert ab.riccati_residual(_narrow_bump(), sol) < 2e-4
    partial = ab.solve_riccati_zeroth(soliton)
    assert np.isnan(partial.a_minus0[-1])
    assert np.all(np.isfinite(partial.a_minus0[soliton.x < partial.singular - 0.1]))


def test_x_start_must_be_on_grid():
    with pytest.raises(ValidationError):
        ab.solve_riccati_zeroth(_zero(), x_start=0.01)


# -- higher orders -----------------------------------------------------------------------------


def test_order_one_polynomial_for_zero_field():
    al, be = 0.3, -0.1
    g = ab.solve_gauge(_zero(), order=1, initial=[al, be, 0.0, 0.0])
    s = _zero().x - _zero().x[0]
    k = E / SQRT2
    assert np.abs(g.a1[0] - (al - k * s)).max() < 1e-8
    assert np.abs(g.a2[0] - (be + k * s)).max() < 1e-8
    assert np.abs(g.a1[1] + k * (al + be) * (be * s + k * s**2 / 2)).max() < 1e-8
    assert np.abs(g.a2[1] + k * (al + be) * (al * s - k * s**2 / 2)).max() < 1e-8


def test_rhs_at_start_are_constant_terms():
    z = np.zeros(1)
    d1, d2 = ab.gauge_rhs(z, np.ones(1), [z] * 3, [z] * 3, 2)
    assert d1[0][0] == -E / SQRT2 and d2[0][0] == E / SQRT2
    assert all(d[k][0] == 0 for d in (d1, d2) for k in (1, 2))


def test_a_minus0_is_difference():
    g = ab.solve_gauge(_narrow_bump(), order=2)
    assert np.array_equal(g.a_minus0, g.a1[0] - g.a2[0])


def test_back_substitution_residuals():
    # fine grid: the fourth-order difference used for the check is the limiting error
    n = 2048
    u = _narrow_bump(n)
    g = ab.solve_gauge(u, order=1)
    d1, d2 = ab.gauge_derivatives(ab.real_lax_data(u), g)
    inner = np.abs(u.x) < L / 2 - 2
    for k in (0, 1):
        for a, d in ((g.a1[k], d1[k]), (g.a2[k], d2[k])):
            r = np.abs(ab._fd4(a, L / n) - d)[inner]
            assert r.max() < 1e-7 * np.abs(d).max()


def test_solve_higher_orders_extends_zeroth():
    u = _narrow_bump()
    zeroth = ab.solve_gauge(u, order=0)
    full = ab.solve_higher_orders(u, zeroth, 2)
    assert full.order == 2
    assert np.allclose(full.a1[0], zeroth.a1[0], rtol=1e-12, atol=1e-12)
    with pytest.raises(ValidationError):
        ab.solve_higher_orders(u, zeroth, 3)


def test_singularity_propagates_to_all_orders(soliton):
    g = ab.solve_gauge(soliton, order=2)
    assert g.singular is not None
    assert np.all(~g.defined[soliton.x > g.singular + 0.1])
    with pytest.raises(SingularityError):
        g.require_regular()


# -- rotated coefficients ----------------------------------------------------------------------


def test_rotated_basic_identities():
    u = _narrow_bump()
    g = ab.solve_gauge(u, order=2)
    rot = ab.assemble_rotated(u, g)
    assert np.all(rot.f0[0] == 1.0)
    assert np.array_equal(rot.f0[1], -(g.a1[0] ** 2 - g.a2[0] ** 2))
    assert np.allclose(rot.betaA[0], C * u.values * g.a_minus0, rtol=1e-15)
    assert not rot.partial


def test_zero_field_has_zero_betaA0():
    rot = ab.assemble_rotated(_zero(), ab.solve_gauge(_zero(), order=0))
    assert np.all(rot.betaA[0] == 0)


def test_partial_result_is_flagged(soliton):
    rot = ab.assemble_rotated(soliton, ab.solve_gauge(soliton, order=1))
    assert rot.partial and rot.meta["singular"] is not None


# -- engine agreement ----------------------------------------------------------------------------


def _poly_gap(expr_a, expr_b, syms):
    diff = sp.expand(sp.N(expr_a, 30) - sp.sympify(expr_b))
    if diff == 0:
        return 0.0
    return max(abs(float(c)) for c in sp.Poly(diff, *syms).coeffs())


def test_betaA_matches_engine_symbolically():
    u = sp.Symbol("u")
    a1 = sp.symbols("a1_0 a1_1")
    a2 = sp.symbols("a2_0 a2_1")
    rot = la.fold_negative(ab.engine_rotated(u, 1, list(a1), list(a2), 3, 1 / sp.E, sp.E, sp.sqrt(2)), 1)
    closed = ab.beta_A(u, 1, list(a1), list(a2), 1)
    for k in (0, 1):
        assert _poly_gap(rot.coefficient(la.b(k)), closed[k], (u,) + a1 + a2) < 1e-14


def test_f0_matches_engine_symbolically():
    a1 = sp.symbols("a1_0 a1_1 a1_2")
    a2 = sp.symbols("a2_0 a2_1 a2_2")
    eng = ab.engine_f0(list(a1), list(a2), 4)
    f0, _, _, _ = ab.f_coefficients(list(a1), list(a2), 2)
    assert eng.coefficient(la.b(0)) == 1 and np.all(f0[0] == 1)
    for k in (1, 2):
        assert _poly_gap(eng.coefficient(la.b(k)), f0[k], a1 + a2) < 1e-15


def test_f0_3_presumed_matches_engine_at_depth_6():
    rng = np.random.default_rng(2)
    a1 = list(rng.normal(size=3) * 0.3)
    a2 = list(rng.normal(size=3) * 0.3)
    eng = ab.engine_f0(a1, a2, 6)
    _, f03, _, _ = ab.f_coefficients(a1, a2, 2)
    assert abs(eng.coefficient(la.b(3)) - f03) < 1e-14


def test_betaA2_gap_shrinks_with_scale():
    rng = np.random.default_rng(4)
    base1, base2 = rng.normal(size=3), rng.normal(size=3)
    gaps = []
    for s in (0.4, 0.2):
        a1, a2 = list(base1 * s), list(base2 * s)
        rot = la.fold_negative(ab.engine_rotated(0.7, 1.0, a1, a2, 8, window=(-2, 24)), 1.0)
        gaps.append(abs(rot.coefficient(la.b(2)) - ab.beta_A(0.7, 1.0, a1, a2, 2)[2]))
    assert gaps[1] < gaps[0] / 8


# -- quasi-continuity -------------------------------------------------------------------------


def test_undeformed_order0_quasi_continuity():
    qc = ab.verify_quasi_continuity(_frames(_narrow_bump(), dfm.NONE), dfm.NONE, order=0)
    assert qc.residual[0] < 1e-5


def test_two_frame_variant_agrees():
    fr = _frames(_narrow_bump(), dfm.NONE)
    qc = ab.verify_quasi_continuity(fr[1:], dfm.NONE, order=0)
    assert qc.t == pytest.approx(0.5e-4)
    assert qc.residual[0] < 1e-4


def test_deformed_order0_defect_has_closed_form():
    fr = _frames(_narrow_bump(), UUXX)
    qc = ab.verify_quasi_continuity(fr, UUXX, order=0)
    predicted = ab.order0_defect(fr[1].field, UUXX)
    assert np.abs(qc.gamma[0] - qc.rhs[0] - predicted).max() < 1e-5
    assert np.abs(predicted).max() > 1e-3


def test_defect_vanishes_without_deformation():
    assert np.abs(ab.order0_defect(_narrow_bump(), dfm.NONE)).max() < 1e-10


def test_zeroth_identities_gamma_equals_quasi_continuity():
    fr = _frames(_narrow_bump(), UUXX)
    zi = _zi(fr, UUXX)
    qc = ab.verify_quasi_continuity(fr, UUXX, order=0)
    assert np.nanmax(np.abs(zi.gamma - (qc.gamma[0] - qc.rhs[0]))) < 1e-6


def test_a_t_identity_holds():
    for spec in (dfm.NONE, UUXX):
        assert _zi(_frames(_narrow_bump(), spec), spec).norms()["a_t"] < 1e-8


def test_phi_identity_source_term():
    # the phi relation closes with a nonzero source built from u_t - 2 u u_x and the anomaly
    for spec in (dfm.NONE, UUXX):
        fr = _frames(_narrow_bump(), spec)
        zi = _zi(fr, spec)
        eq = "kdv" if spec is dfm.NONE else "deformed_kdv"
        u = fr[1].field.values
        ut = pde_core.rhs(fr[1].field, pde_core.EvolutionProblem(eq, L, N, deformation=spec))
        ux, uxx = deriv(u, L, 1), deriv(u, L, 2)
        a = zi.a_minus
        X = dfm.anomaly_values(u, L, spec)
        source = -C * a**2 * (ut - 2 * u * ux) - 4 * SQRT2 * E * ux + a * (2 * uxx - 4 * u**2) - 2 * X * a
        assert np.nanmax(np.abs(zi.phi - source)) < 1e-4 * np.nanmax(np.abs(zi.phi))


def test_frames_must_be_equally_spaced():
    fr = _frames(_narrow_bump(), dfm.NONE)
    fr[2].t = 3e-4
    with pytest.raises(ValidationError):
        ab.verify_quasi_continuity(fr, dfm.NONE)
