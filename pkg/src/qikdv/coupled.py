"""Complex coupled KdV pair (q, qbar) with independent deformations of its two Hamiltonians.

q and qbar are evolved as independent fields; q = 1, qbar = u reduces everything to the real system.
The gauge machinery is reused through the replacements
P = qbar, R = q, S = qbar q_x - q qbar_x, Fb = Fbar, Fm = F.
"""

from dataclasses import dataclass

import numpy as np

from . import abelianization as ab
from . import deformations as dfm
from . import pde_core
from .errors import SingularityError, ValidationError
from .grid import ComplexField, GridField, deriv, trapezoid


@dataclass(frozen=True)
class CoupledState:
    q: ComplexField
    qbar: ComplexField

    def __post_init__(self):
        q, qb = (f if isinstance(f, ComplexField) else ComplexField(f.length, f.values) for f in (self.q, self.qbar))
        if q.length != qb.length or q.n != qb.n:
            raise ValidationError("coupled.grid", "q and qbar must share a grid")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qbar", qb)

    @classmethod
    def from_arrays(cls, length, q, qbar):
        n = np.shape(qbar)[-1]
        q = np.broadcast_to(np.asarray(q, dtype=complex), (n,))
        return cls(ComplexField(length, q), ComplexField(length, qbar))

    @classmethod
    def conjugate_pair(cls, length, q):
        q = np.asarray(q, dtype=complex)
        return cls(ComplexField(length, q), ComplexField(length, np.conj(q)))

    @property
    def length(self):
        return self.q.length

    @property
    def n(self):
        return self.q.n

    def conjugacy_defect(self):
        """sup |qbar - conj(q)|; zero in physical mode."""
        return float(np.abs(np.asarray(self.qbar.values) - np.conj(np.asarray(self.q.values))).max())


def brackets(q, qbar, length, spec_q=dfm.NONE, spec_qbar=dfm.NONE):
    """(D, Dbar) with D = dH1/dq + q_xx (mirrored cubic) and Dbar = dH1bar/dqbar + qbar_xx."""
    return (dfm.bracket_values(q, length, spec_q, cubic=1.0), dfm.bracket_values(qbar, length, spec_qbar, cubic=-1.0))


def anomaly_Xc_values(q, qbar, length, spec_q=dfm.NONE, spec_qbar=dfm.NONE):
    d, db = brackets(q, qbar, length, spec_q, spec_qbar)
    return (2.0 / 3.0) * (qbar**2 * d + q**2 * db)


def anomaly_Xc(state, spec_q=dfm.NONE, spec_qbar=dfm.NONE):
    v = anomaly_Xc_values(np.asarray(state.q.values), np.asarray(state.qbar.values), state.length, spec_q, spec_qbar)
    return ComplexField(state.length, v)


def problem(length, n, dt=1e-4, t_end=1.0, spec_q=dfm.NONE, spec_qbar=dfm.NONE):
    return pde_core.EvolutionProblem(pde_core.Equation.COUPLED_KDV, length, n, dt, t_end,
                                     deformation=spec_qbar, deformation_q=spec_q)


def evolve_coupled(state, spec_q=dfm.NONE, spec_qbar=dfm.NONE, dt=1e-4, t_end=1.0, sample_every=None, monitor=True):
    """Trajectory of CoupledState samples; `monitor` records the conjugacy defect in diagnostics."""
    prob = problem(state.length, state.n, dt, t_end, spec_q, spec_qbar)
    diag = None
    if monitor:
        diag = lambda t, v: {"conjugacy_defect": float(np.abs(v[1] - np.conj(v[0])).max())}  # noqa: E731
    return pde_core.evolve(state, prob, sample_every, diag)


def coupled_lax_data(q, qbar, length, spec_q=dfm.NONE, spec_qbar=dfm.NONE):
    """LaxData under the replacements; arrays may carry a leading batch axis."""
    q, qbar = np.asarray(q, dtype=complex), np.asarray(qbar, dtype=complex)
    d, db = brackets(q, qbar, length, spec_q, spec_qbar)
    qx, qbx = deriv(q, length, 1), deriv(qbar, length, 1)
    F = deriv(q, length, 2) + (2.0 / 3.0) * qbar * d
    Fbar = deriv(qbar, length, 2) - (2.0 / 3.0) * q * db
    X = (2.0 / 3.0) * (qbar**2 * d + q**2 * db)
    return ab.LaxData(length, qbar, q, qbar * qx - q * qbx, Fbar, F, X)


def _stack(samples):
    q = np.stack([np.asarray(s.field.q.values) for s in samples])
    qb = np.stack([np.asarray(s.field.qbar.values) for s in samples])
    return q, qb, samples[0].field.length


def coupled_zeroth_system(samples, spec_q=dfm.NONE, spec_qbar=dfm.NONE, substeps=None):
    """Residual norms of the four order-0 relations (Riccati, Gamma^0, phi, a_t) at the middle frame."""
    q, qb, length = _stack(samples)
    zi = ab.zeroth_identities(coupled_lax_data(q, qb, length, spec_q, spec_qbar), [s.t for s in samples], substeps)
    return zi


def adjacent_frames(state, spec_q=dfm.NONE, spec_qbar=dfm.NONE, delta=1e-5):
    """States at -delta, 0, +delta from single steps of size delta."""
    prob = problem(state.length, state.n, delta, delta, spec_q, spec_qbar)
    v = np.stack([np.asarray(state.q.values), np.asarray(state.qbar.values)])
    out = []
    for sgn in (-1, 1):
        st = pde_core.Stepper(prob, dt=sgn * delta)
        w = st.to_grid(st.step_hat(np.fft.fft(v, axis=-1)))
        out.append(CoupledState(ComplexField(state.length, w[0]), ComplexField(state.length, w[1])))
    return [pde_core.TrajectorySample(-delta, out[0]), pde_core.TrajectorySample(0.0, state),
            pde_core.TrajectorySample(delta, out[1])]


@dataclass(frozen=True)
class CoupledRotated:
    length: float
    order: int
    betaA: list
    f0: list
    X: np.ndarray
    singular: float = None


def rotate(state, spec_q=dfm.NONE, spec_qbar=dfm.NONE, order=0, substeps=None):
    """beta_n^A and f0^n for one coupled frame (or a batch via arrays in `state` fields)."""
    q, qb = np.asarray(state.q.values), np.asarray(state.qbar.values)
    lax = coupled_lax_data(q, qb, state.length, spec_q, spec_qbar)
    a1, a2, sing = ab.solve_gauge_batch(lax.P, state.length, order, R=lax.R, substeps=substeps)
    sing = None if np.all(np.isnan(sing)) else float(np.nanmin(sing))
    bA = ab.beta_A(lax.P, lax.R, list(a1), list(a2), order)
    f0, _, _, _ = ab.f_coefficients(list(a1), list(a2), order)
    return CoupledRotated(state.length, order, bA, f0[: order + 1], lax.X, sing)


def charge_Rn(rotated, n):
    """R^n = integral beta_n^A (complex in general)."""
    if not 0 <= n <= rotated.order:
        raise ValidationError("charges.order", f"order {n} not computed (have {rotated.order})")
    if rotated.singular is not None:
        raise SingularityError(rotated.singular)
    return complex(trapezoid(rotated.betaA[n], rotated.length))


def rate_Rn(rotated, n):
    """integral X_c f0^n."""
    return complex(trapezoid(rotated.X * rotated.f0[n], rotated.length))


def charge_R0_principal(state, substeps=None):
    """R^0 through Riccati poles when q is a nonzero constant: the Q^0 continuation with u -> q qbar.

    For q = const the order-0 relation rescales to the real one with P R = q qbar and unit R.
    """
    q = np.asarray(state.q.values)
    if not np.allclose(q, q[0]):
        raise ValidationError("coupled.q", "principal continuation needs constant q")
    prod = np.asarray(state.qbar.values) * q[0]
    if np.abs(prod.imag).max() > 1e-12 * max(1.0, np.abs(prod).max()):
        raise ValidationError("coupled.qbar", "principal continuation needs real q qbar")
    return ab.principal_charge_Q0(GridField(state.length, prod.real), substeps=substeps)


def R_series(samples, spec_q=dfm.NONE, spec_qbar=dfm.NONE, order=0, substeps=None):
    """(times, R^n per order, rates per order) along a coupled trajectory with one batched gauge solve."""
    q, qb, length = _stack(samples)
    lax = coupled_lax_data(q, qb, length, spec_q, spec_qbar)
    a1, a2, sing = ab.solve_gauge_batch(lax.P, length, order, R=lax.R, substeps=substeps)
    if np.any(np.isfinite(sing)):
        raise SingularityError(float(np.nanmin(sing)))
    bA = ab.beta_A(lax.P, lax.R, list(a1), list(a2), order)
    f0, _, _, _ = ab.f_coefficients(list(a1), list(a2), order)
    R = [trapezoid(bA[k], length) for k in range(order + 1)]
    rates = [trapezoid(lax.X * f0[k], length) for k in range(order + 1)]
    return np.array([s.t for s in samples]), R, rates


__all__ = [
    "CoupledRotated", "CoupledState", "R_series", "adjacent_frames", "anomaly_Xc", "anomaly_Xc_values",
    "brackets", "charge_R0_principal", "charge_Rn", "coupled_lax_data", "coupled_zeroth_system", "evolve_coupled",
    "problem", "rate_Rn", "rotate",
]
