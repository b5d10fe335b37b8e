"""Weak-coupling correspondence between KdV fields and NLS envelopes, and analytic solitons.

Map: u = eps (phi e^{i theta} + c.c.) + (eps^2/k0^2)(phi^2 e^{2 i theta} + c.c.) - 2 (eps^2/k0^2)|phi|^2
with theta = k0 x + k0^3 t, X = eps (x + 3 k0^2 t), T = eps^2 t.
"""

from dataclasses import dataclass

import numpy as np

from . import pde_core
from .errors import ValidationError
from .grid import ComplexField, GridField, deriv, grid_points, refine, shift


@dataclass(frozen=True)
class WeakCouplingParams:
    epsilon_wc: float
    k0: float = 1.0
    x0: float = 0.0
    t0: float = 0.0
    X0: float = 0.0
    T0: float = 0.0

    def __post_init__(self):
        if self.k0 == 0:
            raise ValidationError("map.k0", "carrier wavenumber must be nonzero")
        if not 0.0 <= self.epsilon_wc <= 0.1:
            raise ValidationError("map.epsilon_wc", f"must lie in [0, 0.1], got {self.epsilon_wc!r}")

    @property
    def omega0(self):
        return self.k0**3

    def theta(self, x, t):
        return self.k0 * (x - self.x0) + self.omega0 * (t - self.t0)

    def slow_time(self, t):
        return self.T0 + self.epsilon_wc**2 * (t - self.t0)


def carrier_points(length_x, k0, per_wavelength=16):
    """Smallest power-of-two grid with `per_wavelength` points per carrier period."""
    need = abs(k0) * length_x / (2.0 * np.pi) * per_wavelength
    return int(2 ** max(4, int(np.ceil(np.log2(max(need, 16))))))


def reconstruct(phi_on_x, theta, p):
    """The map evaluated pointwise; real by construction."""
    eps, k0 = p.epsilon_wc, p.k0
    w = phi_on_x * np.exp(1j * theta)
    return 2.0 * eps * w.real + 2.0 * (eps / k0) ** 2 * (w * w).real - 2.0 * (eps / k0) ** 2 * np.abs(phi_on_x) ** 2


def kdv_from_envelope(phi, p, t, n_x=None):
    """KdV field on the x grid of length L_X/eps at time t from an envelope on the X grid."""
    if p.epsilon_wc == 0:
        raise ValidationError("map.epsilon_wc", "degenerate map: the x grid is unbounded")
    length_x = phi.length / p.epsilon_wc
    n_x = carrier_points(length_x, p.k0) if n_x is None else int(n_x)
    if n_x % phi.n:
        raise ValidationError("map.n_x", "x grid size must be a multiple of the X grid size")
    s = p.X0 + p.epsilon_wc * (3.0 * p.k0**2 * (t - p.t0) - p.x0)
    on_x = refine(shift(np.asarray(phi.values), phi.length, s), n_x // phi.n)
    x = grid_points(n_x, length_x)
    return GridField(length_x, reconstruct(on_x, p.theta(x, t), p))


# -- analytic solitons --------------------------------------------------------------------


def soliton_kdv(c, eps=0.0, x0=0.0, t0=0.0, kind="scaled"):
    """(c/2) sech^2 profile sampler f(x, t).

    kind="scaled": solution of u_t + 6 u u_x + (1 - eps) u_xxx = 0, width sqrt(c/(4(1 - eps))), speed c.
    kind="log":    solution of u_t + u_xxx + 6 beta u u_x = 0 with beta = 1 + 5 eps/3, speed beta c.
    """
    if not c > 0:
        raise ValidationError("soliton.c", f"speed must be positive, got {c!r}")
    if kind == "scaled":
        if not eps < 1:
            raise ValidationError("soliton.eps", "scaled soliton needs eps < 1")
        kappa, speed = np.sqrt(c / (4.0 * (1.0 - eps))), c
    elif kind == "log":
        beta = 1.0 + 5.0 * eps / 3.0
        kappa, speed = 0.5 * np.sqrt(c * beta), beta * c
    else:
        raise ValidationError("soliton.kind", f"unknown soliton kind {kind!r}")

    def sample(x, t=0.0):
        return 0.5 * c / np.cosh(kappa * (np.asarray(x) - x0 - speed * (t - t0))) ** 2

    sample.speed = speed
    sample.kappa = kappa
    return sample


def soliton_nls(K, V, p, beta=1.0):
    """Envelope sampler phi(X, T) for the reference sech profile and phase, evaluated without corrections.

    Lambda1 = i sqrt(3 beta/k0), Lambda2 = -i/sqrt(3 k0); for V != 0 the sech argument is complex.
    """
    if not K > 0:
        raise ValidationError("soliton.K", "amplitude must be positive")
    if not p.k0 > 0:
        raise ValidationError("map.k0", "the square roots in the profile need k0 > 0")
    lam1 = 1j * np.sqrt(3.0 * beta / p.k0)
    lam2 = -1j / np.sqrt(3.0 * p.k0)

    def sample(X, T=0.0):
        Xt = np.asarray(X, dtype=float) - p.X0
        Tt = T - p.T0
        arg = lam1 * K * (lam2 * Xt - V * Tt)
        phase = 0.5j * lam2 * V * Xt + 0.25j * (lam1**2 * K**2 - V**2) * Tt
        out = K / np.cosh(arg) * np.exp(phase)
        return out

    sample.lam1, sample.lam2 = lam1, lam2
    return sample


def nls_operator(phi, phi_t, length, k0, beta=1.0, sign=1.0):
    """phi_T + 3 i k0 phi_XX + i sign (6 beta/k0)|phi|^2 phi on the grid."""
    return phi_t + 3j * k0 * deriv(phi, length, 2) + 1j * sign * 6.0 * beta / k0 * np.abs(phi) ** 2 * phi


def nls_residual(sampler, p, beta, length, n, T=0.0, sign=1.0, dT=1e-4):
    """Sup-norm residual of the NLS equation for an analytic sampler (4th-order T difference)."""
    X = grid_points(n, length)
    f = lambda s: sampler(X, T + s)  # noqa: E731
    phi_t = (f(-2 * dT) - 8 * f(-dT) + 8 * f(dT) - f(2 * dT)) / (12 * dT)
    res = nls_operator(f(0.0), phi_t, length, p.k0, beta, sign)
    return float(np.abs(res).max())


def exact_nls_soliton(K, p, beta=1.0):
    """Stationary bright soliton K sech(kappa X) exp(i Omega T) of the NLS above with sign +1."""
    kappa = K * np.sqrt(beta) / p.k0
    omega = -3.0 * beta * K**2 / p.k0

    def sample(X, T=0.0):
        return K / np.cosh(kappa * (np.asarray(X) - p.X0)) * np.exp(1j * omega * (T - p.T0))

    sample.kappa, sample.omega = kappa, omega
    return sample


def potential_reading(rho, eps):
    """(beta rho, d/d rho of 1/2 rho^(2(1+eps~))) with eps~ = 5 eps/3, rho = |phi|^2."""
    et = 5.0 * eps / 3.0
    rho = np.asarray(rho, dtype=float)
    return (1.0 + et) * rho, (1.0 + et) * rho ** (1.0 + 2.0 * et)


# -- correspondence runs ------------------------------------------------------------------


@dataclass(frozen=True)
class CorrespondenceRun:
    epsilon_wc: float
    error: float
    phi_traj: list
    u_traj: list


def correspondence_error(phi_traj, u_traj, p):
    """sup over matched samples of |u(t) - map(phi(T(t)))|_inf."""
    if p.epsilon_wc == 0:
        return 0.0
    if len(phi_traj) != len(u_traj):
        raise ValidationError("map.samples", "trajectories have different sample counts")
    err = 0.0
    for sp, su in zip(phi_traj, u_traj):
        u = su.field
        if abs(u.length * p.epsilon_wc - sp.field.length) > 1e-9 * u.length:
            raise ValidationError("map.grid", "x grid length is not L_X/eps")
        if abs(p.epsilon_wc**2 * (su.t - p.t0) - sp.t) > 1e-9 * max(1.0, sp.t):
            raise ValidationError("map.samples", f"sample times do not match at t={su.t!r}")
        rec = kdv_from_envelope(sp.field, p, su.t, n_x=u.n)
        err = max(err, float(np.abs(u.values - rec.values).max()))
    return err


def periodic_envelope_length(length_X, p):
    """Adjust L_X so the carrier is periodic on the x grid: k0 L_X/(2 pi eps) integral."""
    m = max(1, int(round(length_X * p.k0 / (2.0 * np.pi * p.epsilon_wc))))
    return 2.0 * np.pi * m * p.epsilon_wc / p.k0


def run_correspondence(p, envelope, length_X=40.0, n_X=256, t_end=1.0, dt=0.01, samples=10,
                       deformation_eps=0.0, nls_sign=-1.0, per_wavelength=16):
    """Evolve u (KdV, or the log-free deformed KdV) and phi (NLS) independently and compare.

    `envelope(X)` gives phi at T = 0. `nls_sign=-1` is the sign produced by substituting the map
    into KdV; +1 reproduces the focusing form.
    """
    if p.epsilon_wc == 0:
        return CorrespondenceRun(0.0, 0.0, [], [])
    eps = p.epsilon_wc
    LX = periodic_envelope_length(length_X, p)
    phi0 = ComplexField(LX, envelope(grid_points(n_X, LX)))
    n_x = max(carrier_points(LX / eps, p.k0, per_wavelength), n_X)
    u0 = kdv_from_envelope(phi0, p, p.t0, n_x=n_x)
    beta = 1.0 + 5.0 * deformation_eps / 3.0
    every = max(1, int(round(t_end / dt)) // samples)
    if deformation_eps:
        prob_u = pde_core.EvolutionProblem("log_kdv", u0.length, n_x, dt, t_end, epsilon=deformation_eps, include_log=False)
    else:
        prob_u = pde_core.EvolutionProblem("kdv", u0.length, n_x, dt, t_end)
    prob_phi = pde_core.EvolutionProblem("nls", LX, n_X, dt * eps**2, t_end * eps**2, k0=p.k0, beta=beta, nls_sign=nls_sign)
    u_traj = pde_core.evolve(u0, prob_u, every)
    phi_traj = pde_core.evolve(phi0, prob_phi, every)
    return CorrespondenceRun(eps, correspondence_error(phi_traj, u_traj, p), phi_traj, u_traj)


def fit_slope(eps_list, errors):
    if len(eps_list) < 2:
        raise ValidationError("map.epsilons", "need >=2 points")
    return float(np.polyfit(np.log(eps_list), np.log(errors), 1)[0])


def scaling_study(eps_list, k0=1.0, deformation_eps=0.0, **kw):
    """Correspondence error for each eps_wc and the fitted log-log slope."""
    if len(eps_list) < 2:
        raise ValidationError("map.epsilons", "need >=2 points")
    rows = []
    for eps in eps_list:
        p = WeakCouplingParams(eps, k0)
        run = run_correspondence(p, lambda X: 0.5 / np.cosh(X), deformation_eps=deformation_eps, **kw)
        rows.append((eps, run.error))
    return rows, fit_slope([r[0] for r in rows], [r[1] for r in rows])
