"""Integrating-factor RK4 pseudospectral time stepping for the KdV family, NLS and coupled KdV.

Every equation is split as d(hat v)/dt = L hat v + N(v): the linear dispersive symbol L is
integrated exactly, N is evaluated on the grid and dealiased with the 2/3 rule.
"""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import deformations as dfm
from .config import TOL
from .errors import BlowUpError, DomainError, ValidationError
from .grid import ComplexField, GridField, check_grid, dealias_mask, deriv, wavenumbers


class Equation(str, Enum):
    KDV = "kdv"
    DEFORMED_KDV = "deformed_kdv"
    SCALED_KDV = "scaled_kdv"
    HIGHER_DERIV_POWER = "higher_deriv_power"
    HIGHER_DERIV_ORDER = "higher_deriv_order"
    LOG_KDV = "log_kdv"
    NLS = "nls"
    COUPLED_KDV = "coupled_kdv"


@dataclass(frozen=True)
class EvolutionProblem:
    """One equation of motion plus its constants and time stepping controls.

    `length`/`n` describe the x grid (the X grid for NLS). `deformation` acts on u
    (or on qbar for the coupled system); `deformation_q` acts on q.
    """

    equation: Equation
    length: float
    n: int
    dt: float = 1e-4
    t_end: float = 1.0
    epsilon: float = 0.0
    m: int = 3
    order_n: int = 1
    k0: float = 1.0
    beta: float = 1.0
    nls_sign: float = 1.0
    include_log: bool = True
    deformation: object = dfm.NONE
    deformation_q: object = dfm.NONE

    def __post_init__(self):
        object.__setattr__(self, "equation", Equation(self.equation))
        check_grid(self.n, self.length)
        if not self.dt > 0:
            raise ValidationError("time.dt", f"must be positive, got {self.dt!r}")
        if not self.t_end >= 0:
            raise ValidationError("time.t_end", f"must be nonnegative, got {self.t_end!r}")
        eq = self.equation
        if eq == Equation.LOG_KDV and abs(self.epsilon) > 0.2:
            raise ValidationError("equation.epsilon", "LOG_KDV is perturbative: |epsilon| <= 0.2")
        if eq == Equation.SCALED_KDV and not self.epsilon < 1:
            raise ValidationError("equation.epsilon", "SCALED_KDV needs epsilon < 1")
        if eq == Equation.HIGHER_DERIV_POWER and (int(self.m) != self.m or self.m < 3):
            raise ValidationError("equation.m", "m must be an integer >= 3")
        if eq == Equation.HIGHER_DERIV_ORDER and (int(self.order_n) != self.order_n or self.order_n < 1):
            raise ValidationError("equation.order_n", "n must be an integer >= 1")
        if eq == Equation.NLS and self.k0 == 0:
            raise ValidationError("equation.k0", "k0 must be nonzero")

    @property
    def steps(self):
        return int(round(self.t_end / self.dt))

    @property
    def is_complex(self):
        return self.equation in (Equation.NLS, Equation.COUPLED_KDV)


@dataclass
class TrajectorySample:
    t: float
    field: object
    diagnostics: dict = field(default_factory=dict)


def linear_symbol(problem):
    k = wavenumbers(problem.n, problem.length)
    eq = problem.equation
    if eq == Equation.NLS:
        return 3j * problem.k0 * k**2
    k[problem.n // 2] = 0.0  # odd symbols: the Nyquist mode is its own mirror
    ik = 1j * k
    if eq == Equation.SCALED_KDV:
        return -(1.0 - problem.epsilon) * ik**3
    if eq == Equation.HIGHER_DERIV_ORDER:
        return -(ik**3) + problem.epsilon * ik ** (2 * problem.order_n + 1)
    return -(ik**3)


def _check_log_domain(u):
    bad = np.flatnonzero(~(u > TOL.u_floor))
    if bad.size:
        raise DomainError("LOG_KDV needs u > 0", int(bad[0]))


def coupled_nonlinear(q, qbar, length, spec_q=dfm.NONE, spec_qbar=dfm.NONE):
    """Non-dispersive parts of (q_t, qbar_t) for the coupled system.

    Brackets D = dH/dq + q_xx use the mirrored cubic (+q^3) so the undeformed flow is
    q_t + q_xxx + 6|q|^2 q_x = 0 together with its conjugate.
    """
    d_q = dfm.bracket_values(q, length, spec_q, cubic=1.0)
    d_qbar = dfm.bracket_values(qbar, length, spec_qbar, cubic=-1.0)
    qx, qbx = deriv(q, length, 1), deriv(qbar, length, 1)
    rq = -(2.0 / 3.0) * deriv(qbar * d_q, length, 1) - 2.0 * q * qbar * qx + 2.0 * q**2 * qbx
    rqb = (2.0 / 3.0) * deriv(q * d_qbar, length, 1) + 2.0 * qbar**2 * qx - 2.0 * q * qbar * qbx
    return rq, rqb


def flux(v, problem):
    """For the real KdV family: F with u_t = (dispersive part) + F_x."""
    L = problem.length
    eq = problem.equation
    if eq == Equation.LOG_KDV:
        eps = problem.epsilon
        out = -(3.0 + 5.0 * eps) * v**2
        if problem.include_log:
            _check_log_domain(v)
            out = out - eps * (6.0 * v**2 * np.log(v) - 3.0 * v**2)
        return out
    out = -3.0 * v * v
    if eq == Equation.DEFORMED_KDV:
        out = out + dfm.anomaly_values(v, L, problem.deformation)
    elif eq == Equation.HIGHER_DERIV_POWER:
        out = out + problem.epsilon * deriv(deriv(v, L, 1) ** (problem.m - 1), L, 1)
    return out


def nonlinear(v, problem):
    """Grid-space nonlinear term for state v (shape (n,) or (2, n) for the coupled system)."""
    eq = problem.equation
    if eq == Equation.NLS:
        gamma = problem.nls_sign * 6.0 * problem.beta / problem.k0
        return -1j * gamma * np.abs(v) ** 2 * v
    if eq == Equation.COUPLED_KDV:
        rq, rqb = coupled_nonlinear(v[0], v[1], problem.length, problem.deformation_q, problem.deformation)
        return np.stack([rq, rqb])
    return deriv(flux(v, problem), problem.length, 1)


def rhs(state, problem):
    """Full time derivative of the state (dispersive plus nonlinear parts)."""
    v = np.asarray(state.values if isinstance(state, GridField) else state)
    vh = np.fft.fft(v, axis=-1)
    lin = np.fft.ifft(linear_symbol(problem) * vh, axis=-1)
    out = lin + nonlinear(v, problem)
    return out if problem.is_complex else out.real


class Stepper:
    """Cached integrating-factor RK4 propagator for a fixed problem."""

    def __init__(self, problem, dt=None):
        self.problem = problem
        self.dt = problem.dt if dt is None else dt
        self.mask = dealias_mask(problem.n)
        lin = linear_symbol(problem)
        self.half = np.exp(0.5 * self.dt * lin)
        self.full = self.half * self.half
        self.ik_mask = 1j * wavenumbers(problem.n, problem.length) * self.mask

    def _n_hat(self, vh):
        v = np.fft.ifft(vh, axis=-1)
        if self.problem.is_complex:
            return np.fft.fft(nonlinear(v, self.problem), axis=-1) * self.mask
        return np.fft.fft(flux(v.real, self.problem)) * self.ik_mask

    def step_hat(self, vh):
        h = self.dt
        e1, e2 = self.half, self.full
        k1 = self._n_hat(vh)
        k2 = self._n_hat(e1 * (vh + 0.5 * h * k1))
        k3 = self._n_hat(e1 * vh + 0.5 * h * k2)
        k4 = self._n_hat(e2 * vh + h * e1 * k3)
        return e2 * vh + (h / 6.0) * (e2 * k1 + 2.0 * e1 * (k2 + k3) + k4)

    def to_grid(self, vh):
        v = np.fft.ifft(vh, axis=-1)
        return v if self.problem.is_complex else v.real


def _unwrap(state):
    if isinstance(state, GridField):
        return np.asarray(state.values)
    if hasattr(state, "q") and hasattr(state, "qbar"):
        return np.stack([np.asarray(state.q.values), np.asarray(state.qbar.values)])
    return np.asarray(state)


def _wrap(v, problem, like):
    if problem.equation == Equation.COUPLED_KDV:
        if hasattr(like, "q"):
            return type(like)(ComplexField(problem.length, v[0]), ComplexField(problem.length, v[1]))
        return v
    if isinstance(like, GridField):
        cls = ComplexField if problem.is_complex else GridField
        return cls(problem.length, v)
    return v


def step(state, problem):
    """Advance one dt."""
    v = _unwrap(state)
    st = Stepper(problem)
    out = st.to_grid(st.step_hat(np.fft.fft(v, axis=-1)))
    if not np.all(np.isfinite(out)):
        raise BlowUpError(problem.dt)
    return _wrap(out, problem, state)


def default_diagnostics(v, problem):
    L = problem.length
    h = L / problem.n
    if problem.equation == Equation.COUPLED_KDV:
        return {"q_norm2": float(np.sum(np.abs(v[0]) ** 2) * h), "qbar_norm2": float(np.sum(np.abs(v[1]) ** 2) * h)}
    if problem.is_complex:
        return {"norm2": float(np.sum(np.abs(v) ** 2) * h)}
    return {"mass": float(np.sum(v) * h), "momentum": float(np.sum(v * v) * h), "max": float(np.max(v))}


def evolve(u0, problem, sample_every=None, diagnostics=None):
    """Integrate to t_end, sampling every `sample_every` steps and at the final time.

    `diagnostics(t, v)` may return a dict merged into each sample's diagnostics.
    """
    v = _unwrap(u0).astype(complex if problem.is_complex else float)
    nsteps = problem.steps
    sample_every = nsteps if not sample_every else int(sample_every)
    st = Stepper(problem)

    def sample(t, vv):
        diag = default_diagnostics(vv, problem)
        if diagnostics is not None:
            diag.update(diagnostics(t, vv))
        return TrajectorySample(t, _wrap(vv.copy(), problem, u0), diag)

    out = [sample(0.0, v)]
    vh = np.fft.fft(v, axis=-1)
    for i in range(1, nsteps + 1):
        vh = st.step_hat(vh)
        if not np.all(np.isfinite(vh)):
            raise BlowUpError(i * problem.dt, out[-1].diagnostics)
        if i % sample_every == 0 or i == nsteps:
            out.append(sample(i * problem.dt, st.to_grid(vh)))
    return out


def with_time(problem, dt=None, t_end=None):
    return replace(problem, dt=problem.dt if dt is None else dt, t_end=problem.t_end if t_end is None else t_end)
