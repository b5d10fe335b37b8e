"""Order-by-order gauge coefficients and the rotated Lax coefficients.

The connection is written generically as
    A = (P/e) s_+ - e R s_-,    B = S s_3 - (Fb/e) s_+ + e Fm s_-,
which for the real KdV field means P = u, R = 1, S = -u_x, Fb = f(u) = u_xx - X + 2u^2, Fm = 2u.
The coupled system plugs in its own P, R, S, Fb, Fm (see `coupled`).

The gauge element is exp(sum_n a1^n F1^n + a2^n F2^n). Requiring the rotated spatial component to
lie in the b^n span gives first-order ODEs in x for a1^n, a2^n, integrated here by RK4 from
a chosen start point with Fourier interpolation of the fields between grid nodes.
"""

from dataclasses import dataclass, field

import numpy as np

from . import deformations as dfm
from . import loop_algebra as la
from .config import C_GAUGE, E, SQRT2, TOL
from .errors import SingularityError, ValidationError
from .grid import deriv, grid_points, refine

C = C_GAUGE
R2 = SQRT2


# -- dual numbers for exact chain-rule x-derivatives of polynomial formulas ---------------


class Dual:
    """value + eps * derivative with eps^2 = 0."""

    __slots__ = ("v", "d")

    def __init__(self, v, d):
        self.v, self.d = v, d

    def __add__(self, o):
        return Dual(self.v + o.v, self.d + o.d) if isinstance(o, Dual) else Dual(self.v + o, self.d)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.v, -self.d)

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, Dual):
            return Dual(self.v * o.v, self.v * o.d + self.d * o.v)
        return Dual(self.v * o, self.d * o)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return Dual(self.v / s, self.d / s)


def _dualize(vals, ders):
    return [Dual(v, d) for v, d in zip(vals, ders)]


# -- Lax data -----------------------------------------------------------------------------


@dataclass(frozen=True)
class LaxData:
    """Coefficient fields of the connection on one frame (or a batch of frames along axis 0)."""

    length: float
    P: np.ndarray
    R: np.ndarray
    S: np.ndarray
    Fb: np.ndarray
    Fm: np.ndarray
    X: np.ndarray

    def d(self, name):
        return deriv(getattr(self, name), self.length, 1)


def real_lax_data(u, spec=dfm.NONE, length=None):
    """LaxData for a real field (GridField, or an array batch with `length`)."""
    if length is None:
        length, vals = u.length, np.asarray(u.values)
    else:
        vals = np.asarray(u)
    X = dfm.anomaly_values(vals, length, spec)
    uxx = deriv(vals, length, 2)
    return LaxData(length, vals, np.ones_like(vals), -deriv(vals, length, 1), uxx - X + 2.0 * vals**2, 2.0 * vals, X)


# -- the order-by-order gauge system -------------------------------------------------------


def _pm(a1, a2, k):
    return a1[k] - a2[k], a1[k] + a2[k]


def _A(a1, a2, i, j):
    return a1[i] * a1[j] - a2[i] * a2[j]


def gauge_rhs(P, R, a1, a2, order, lam=1.0):
    """(a1_x, a2_x) per order from the closed-form relations (generalized to P, R)."""
    am0, ap0 = _pm(a1, a2, 0)
    d1 = [C * P * am0 * a2[0] - (P / (E * lam) + E * R) / R2]
    d2 = [C * P * am0 * a1[0] - (P / (E * lam) - E * R) / R2]
    if order >= 1:
        am1, ap1 = _pm(a1, a2, 1)
        d1.append(C * P * (am0 * a2[1] + am1 * a2[0]) - (E / R2) * R * ap0 * a2[0])
        d2.append(C * P * (am0 * a1[1] + am1 * a1[0]) - (E / R2) * R * ap0 * a1[0])
    if order >= 2:
        am2 = a1[2] - a2[2]
        A00, A01 = _A(a1, a2, 0, 0), _A(a1, a2, 0, 1)
        for src, dst in ((a2, d1), (a1, d2)):
            dst.append(
                C * P * (am0 * src[2] + am1 * src[1] + am2 * src[0])
                - (E / R2) * R * (ap0 * src[1] + ap1 * src[0])
                - (C / 6.0) * P * (2.0 * A01 * am0 * src[0] + A00 * (am1 * src[0] + am0 * src[1]))
                + (E / (6.0 * R2)) * R * A00 * ap0 * src[0]
            )
    if order > 2:
        raise ValidationError("gauge.order", "the closed-form system stops at order 2")
    return d1, d2


def riccati_rhs(P, R, am):
    return -C * P * am * am - R2 * E * R


def _integrate(rhs, y0, fields, length, n, start, substeps):
    """RK4 along the grid in both directions from node `start`.

    fields: arrays (..., n) interpolated to a grid 2*substeps times finer; rhs(fields_at_x, y).
    Returns y on the nodes (ncomp, ..., n) with NaN beyond a blow-up, and the blow-up x per batch entry.
    """
    fac = 2 * substeps
    fine = [refine(f, fac) for f in fields]
    h = length / n
    batch = fields[0].shape[:-1]
    y0 = np.asarray(y0)
    dtype = np.result_type(y0, *fields)
    ncomp = y0.shape[0]
    out = np.full((ncomp,) + batch + (n,), np.nan, dtype=dtype)
    y_start = np.broadcast_to(y0.reshape((ncomp,) + (1,) * len(batch)), (ncomp,) + batch).astype(dtype)
    out[..., start] = y_start
    sing = np.full(batch, np.nan)
    x = grid_points(n, length)
    for direction in (1, -1):
        y = y_start.copy()
        alive = np.ones(batch, dtype=bool)
        stop = n - 1 if direction == 1 else 0
        step = direction * h / substeps
        with np.errstate(all="ignore"):
            for i in range(start, stop, direction):
                for k in range(substeps):
                    m = fac * i + direction * 2 * k
                    f0 = [f[..., m] for f in fine]
                    f1 = [f[..., (m + direction) % (n * fac)] for f in fine]
                    f2 = [f[..., (m + 2 * direction) % (n * fac)] for f in fine]
                    k1 = rhs(f0, y)
                    k2 = rhs(f1, y + 0.5 * step * k1)
                    k3 = rhs(f1, y + 0.5 * step * k2)
                    k4 = rhs(f2, y + step * k3)
                    y = y + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                    bad = alive & ~np.all(np.isfinite(y) & (np.abs(y) <= TOL.riccati_blowup), axis=0)
                    if np.any(bad):
                        xs = x[i] + (k + 1) * step
                        sing = np.where(bad & np.isnan(sing), xs, sing) if batch else (xs if np.isnan(sing) else sing)
                        alive = alive & ~bad
                        y = np.where(alive, y, np.nan)
                out[..., i + direction] = y
    return out, sing


@dataclass(frozen=True)
class RiccatiSolution:
    length: float
    a_minus0: np.ndarray
    singular: float = None
    x_start: float = 0.0
    a0: float = 0.0

    @property
    def defined(self):
        return np.isfinite(self.a_minus0)


def _start_index(length, n, x_start):
    if x_start is None:
        return 0
    j = (x_start + 0.5 * length) / (length / n)
    if abs(j - round(j)) > 1e-9 or not 0 <= round(j) < n:
        raise ValidationError("gauge.x_start", f"{x_start!r} is not a grid point")
    return int(round(j))


def solve_riccati_zeroth(u, x_start=None, a0=0.0, substeps=None, R=None):
    """a_-^0 from a_x = -(P/(sqrt2 e)) a^2 - sqrt2 e R, RK4 from (x_start, a0); default start is the left edge."""
    substeps = substeps or TOL.gauge_substeps
    P = np.asarray(u.values)
    Rv = np.ones_like(P) if R is None else np.asarray(R)
    start = _start_index(u.length, u.n, x_start)
    rhs = lambda f, y: riccati_rhs(f[0], f[1], y)  # noqa: E731
    out, sing = _integrate(rhs, np.array([a0]), [P, Rv], u.length, u.n, start, substeps)
    sing = None if np.isnan(sing) else float(sing)
    return RiccatiSolution(u.length, out[0], sing, float(grid_points(u.n, u.length)[start]), a0)


def riccati_residual(u, sol, R=None):
    """sup |a_x + (u/(sqrt2 e)) a^2 + sqrt2 e R| on interior nodes with 4 defined neighbours (4th-order differences)."""
    a = sol.a_minus0
    h = u.length / u.n
    Rv = np.ones_like(a) if R is None else np.asarray(R)
    ax = (-a[4:] + 8 * a[3:-1] - 8 * a[1:-3] + a[:-4]) / (12 * h)
    res = ax - riccati_rhs(np.asarray(u.values)[2:-2], Rv[2:-2], a[2:-2])
    res = res[np.isfinite(res)]
    return float(np.abs(res).max()) if res.size else np.nan


@dataclass(frozen=True)
class GaugeCoefficients:
    """a1[n], a2[n] on the grid for n <= order; NaN past a singularity."""

    length: float
    order: int
    a1: np.ndarray
    a2: np.ndarray
    lam: float = 1.0
    x_start: float = 0.0
    initial: tuple = ()
    singular: float = None

    @property
    def a_minus0(self):
        return self.a1[0] - self.a2[0]

    def a_minus(self, k):
        return self.a1[k] - self.a2[k]

    def a_plus(self, k):
        return self.a1[k] + self.a2[k]

    @property
    def defined(self):
        return np.all(np.isfinite(self.a1), axis=0) & np.all(np.isfinite(self.a2), axis=0)

    def require_regular(self):
        if self.singular is not None:
            raise SingularityError(self.singular)

    def metadata(self):
        return {"order": self.order, "lambda": self.lam, "x_start": self.x_start,
                "initial": list(map(float, np.real(self.initial))), "singular": self.singular}


def _solve_gauge_arrays(P, R, length, order, lam, start, initial, substeps):
    ncomp = 2 * (order + 1)
    y0 = np.zeros(ncomp) if initial is None else np.asarray(initial)
    if y0.shape != (ncomp,):
        raise ValidationError("gauge.initial", f"need {ncomp} initial values")

    def rhs(f, y):
        d1, d2 = gauge_rhs(f[0], f[1], y[0::2], y[1::2], order, lam)
        return np.stack([v for pair in zip(d1, d2) for v in pair])

    n = P.shape[-1]
    out, sing = _integrate(rhs, y0, [P, R], length, n, start, substeps)
    return out[0::2], out[1::2], sing


def solve_gauge(u, order=2, lam=1.0, x_start=None, initial=None, substeps=None, R=None):
    """Integrate the order-by-order system for n <= order jointly; zero initial data by default."""
    substeps = substeps or TOL.gauge_substeps
    P = np.asarray(u.values)
    Rv = np.ones_like(P) if R is None else np.asarray(R)
    start = _start_index(u.length, u.n, x_start)
    a1, a2, sing = _solve_gauge_arrays(P, Rv, u.length, order, lam, start, initial, substeps)
    init = tuple(np.zeros(2 * (order + 1)) if initial is None else initial)
    return GaugeCoefficients(u.length, order, a1, a2, lam, float(u.x[start]), init,
                             None if np.isnan(sing) else float(sing))


def solve_higher_orders(u, zeroth, order, substeps=None):
    """Extend a zeroth-order solution (GaugeCoefficients with order 0) to `order` in {1, 2}.

    Higher orders start from zero at the same point; the zeroth order is re-integrated jointly and
    must reproduce the given one.
    """
    if order not in (1, 2):
        raise ValidationError("gauge.order", "order must be 1 or 2")
    init = list(zeroth.initial[:2]) + [0.0] * (2 * order)
    out = solve_gauge(u, order, zeroth.lam, zeroth.x_start, init, substeps)
    same = np.allclose(out.a1[0], zeroth.a1[0], equal_nan=True, rtol=1e-12, atol=1e-12)
    if not same:
        raise ValidationError("gauge.zeroth", "zeroth order does not match its own re-integration")
    return out


def gauge_derivatives(lax, coeffs):
    """a1_x, a2_x per order from the ODE right-hand sides."""
    return gauge_rhs(lax.P, lax.R, list(coeffs.a1), list(coeffs.a2), coeffs.order, coeffs.lam)


# -- rotated coefficients ------------------------------------------------------------------


def beta_A(P, R, a1, a2, order, c=C, k=E / R2):
    """beta_n^A for n <= order; `c` = 1/(sqrt2 e) and `k` = e/sqrt2 can be passed as exact symbols."""
    am0, ap0 = _pm(a1, a2, 0)
    out = [c * P * am0]
    if order >= 1:
        A00 = _A(a1, a2, 0, 0)
        am1, ap1 = _pm(a1, a2, 1)
        out.append(c * P * am1 - k * R * ap0 - (c / 3) * P * A00 * am0)
    if order >= 2:
        A01 = _A(a1, a2, 0, 1)
        out.append(c * P * (a1[2] - a2[2]) - k * R * ap1 - (c / 3) * P * (2 * A01 * am0 + A00 * am1)
                   + (k / 3) * R * A00 * ap0)
    return out


def beta_B(S, Fb, Fm, a1, a2, order):
    am0, ap0 = _pm(a1, a2, 0)
    out = [S - C * Fb * am0]
    if order >= 1:
        am1, ap1 = _pm(a1, a2, 1)
        out.append(-C * Fb * am1 + (E / R2) * Fm * ap0)
    if order >= 2:
        A00, A01 = _A(a1, a2, 0, 0), _A(a1, a2, 0, 1)
        out.append(-C * Fb * (a1[2] - a2[2]) + (E / R2) * Fm * ap1 + (C / 3.0) * Fb * (2.0 * A01 * am0 + A00 * am1)
                   - (E / (3.0 * R2)) * Fm * A00 * ap0)
    return out


def phis(S, Fb, Fm, a1, a2, a1t, a2t, order, lam=1.0):
    """phi_n^1, phi_n^2 in closed form (the u_x terms carry a1 in phi^1 and a2 in phi^2)."""
    am0, ap0 = _pm(a1, a2, 0)
    p1 = [a1t[0] - (C * Fb / lam + (E / R2) * Fm) - 2.0 * S * a1[0]]
    p2 = [a2t[0] - (C * Fb / lam - (E / R2) * Fm) - 2.0 * S * a2[0]]
    if order >= 1:
        am1, ap1 = _pm(a1, a2, 1)
        for own, other, ot, dst in ((a1, a2, a1t, p1), (a2, a1, a2t, p2)):
            dst.append(ot[1] - 2.0 * S * own[1] + C * Fb * (am0 * other[1] + am1 * other[0])
                       - (E / R2) * Fm * ap0 * other[0])
    if order >= 2:
        am2 = a1[2] - a2[2]
        A00, A01 = _A(a1, a2, 0, 0), _A(a1, a2, 0, 1)
        for own, other, ot, dst in ((a1, a2, a1t, p1), (a2, a1, a2t, p2)):
            dst.append(ot[2] - 2.0 * S * own[2] + C * Fb * (am0 * other[2] + am1 * other[1] + am2 * other[0])
                       - (E / R2) * Fm * (ap1 * other[0] + ap0 * other[1])
                       + (E / (6.0 * R2)) * Fm * A00 * ap0 * other[0]
                       + (C / 6.0) * Fb * (-2.0 * A01 * am0 * other[0] + A00 * (-am1 * other[0] - am0 * other[1])))
    return p1, p2


def f_coefficients(a1, a2, order):
    """(f0, f0_3_presumed, f1, f2): anomaly coefficients of b^n, F1^n, F2^n."""
    one = np.ones_like(np.real(a1[0]))
    A00 = _A(a1, a2, 0, 0)
    f0 = [one, -A00]
    f1 = [-2.0 * a2[0]]
    f2 = [-2.0 * a1[0]]
    f0_3 = None
    if order >= 1:
        A01 = _A(a1, a2, 0, 1)
        f0.append(-2.0 * A01 + A00 * A00 / 6.0)
        f1.append(2.0 * (-a2[1] + A00 * a2[0] / 3.0))
        f2.append(2.0 * (-a1[1] + A00 * a1[0] / 3.0))
    if order >= 2:
        A02, A11 = _A(a1, a2, 0, 2), _A(a1, a2, 1, 1)
        f0_3 = -2.0 * A02 - A11 + (2.0 / 3.0) * A00 * (A01 - A00 * A00 / 60.0)
        for src, dst in ((a2, f1), (a1, f2)):
            dst.append(2.0 * (-src[2] + (2.0 / 3.0) * A01 * src[0] + A00 * src[1] / 3.0 - A00 * A00 * src[0] / 30.0))
    return f0, f0_3, f1, f2


@dataclass(frozen=True)
class RotatedLax:
    length: float
    order: int
    betaA: list
    betaB: list
    f0: list
    f1: list
    f2: list
    X: np.ndarray
    f0_3_presumed: np.ndarray = None
    phi1: list = None
    phi2: list = None
    partial: bool = False
    meta: dict = field(default_factory=dict)


def assemble_rotated(u, coeffs, spec=dfm.NONE, a_t=None, lax=None):
    """Evaluate every closed-form coefficient formula on the grid.

    `a_t=(a1t, a2t)` (per-order lists) enables the phi coefficients. `lax` overrides the real-field data.
    """
    lax = real_lax_data(u, spec) if lax is None else lax
    a1, a2 = list(coeffs.a1), list(coeffs.a2)
    bA = beta_A(lax.P, lax.R, a1, a2, coeffs.order)
    bB = beta_B(lax.S, lax.Fb, lax.Fm, a1, a2, coeffs.order)
    f0, f03, f1, f2 = f_coefficients(a1, a2, coeffs.order)
    p1 = p2 = None
    if a_t is not None:
        p1, p2 = phis(lax.S, lax.Fb, lax.Fm, a1, a2, list(a_t[0]), list(a_t[1]), coeffs.order, coeffs.lam)
    return RotatedLax(lax.length, coeffs.order, bA, bB, f0[: coeffs.order + 2], f1, f2, lax.X, f03, p1, p2,
                      partial=coeffs.singular is not None, meta=coeffs.metadata())


def beta_B_x(lax, coeffs):
    """x-derivatives of beta_n^B by the chain rule (spectral for fields, ODE right-hand sides for the a's)."""
    a1x, a2x = gauge_derivatives(lax, coeffs)
    a1 = _dualize(coeffs.a1, a1x)
    a2 = _dualize(coeffs.a2, a2x)
    S, Fb, Fm = (Dual(getattr(lax, k), lax.d(k)) for k in ("S", "Fb", "Fm"))
    return [b.d for b in beta_B(S, Fb, Fm, a1, a2, coeffs.order)]


# -- quasi-continuity --------------------------------------------------------------------


@dataclass(frozen=True)
class QuasiContinuity:
    t: float
    gamma: list
    rhs: list
    residual: list
    gamma_norm: list

    def as_dict(self):
        return {"t": self.t, "residual": self.residual, "gamma_norm": self.gamma_norm}


def _frames_batch(samples):
    vals = np.stack([np.asarray(s.field.values) for s in samples])
    return vals, samples[0].field.length


def solve_gauge_batch(values, length, order=0, lam=1.0, start=0, initial=None, substeps=None, R=None):
    """Gauge coefficients for a batch of frames (rows of `values`)."""
    substeps = substeps or TOL.gauge_substeps
    Rv = np.ones_like(values) if R is None else R
    a1, a2, sing = _solve_gauge_arrays(values, Rv, length, order, lam, start, initial, substeps)
    return a1, a2, sing


def verify_quasi_continuity(samples, spec=dfm.NONE, order=0, lam=1.0, substeps=None):
    """Gamma^n = d_t beta_n^A - d_x beta_n^B versus X f0^n.

    `samples` are two or three frames equally spaced in time; with three the check is at the middle
    frame, with two at the midpoint (space terms averaged). Returns sup norms per order.
    """
    vals, length = _frames_batch(samples)
    return quasi_continuity_from_lax(real_lax_data(vals, spec, length), [s.t for s in samples], order, lam, substeps)


def quasi_continuity_from_lax(lax, ts, order=0, lam=1.0, substeps=None):
    """Core of `verify_quasi_continuity` on a batch of LaxData frames at times `ts`."""
    if len(ts) not in (2, 3):
        raise ValidationError("samples", "need two or three adjacent frames")
    if len(ts) == 3 and abs((ts[2] - ts[1]) - (ts[1] - ts[0])) > 1e-9 * abs(ts[2] - ts[0]):
        raise ValidationError("samples", "frames must be equally spaced")
    length = lax.length
    a1, a2, sing = solve_gauge_batch(lax.P, length, order, lam, R=lax.R, substeps=substeps)
    if np.any(np.isfinite(sing)):
        raise SingularityError(float(np.nanmin(sing)))
    coeffs = GaugeCoefficients(length, order, a1, a2, lam)
    bA = beta_A(lax.P, lax.R, list(a1), list(a2), order)
    bBx = beta_B_x(lax, coeffs)
    f0, _, _, _ = f_coefficients(list(a1), list(a2), order)
    span = ts[-1] - ts[0]
    mid = 1 if len(ts) == 3 else None
    gamma, rhs, res, norms = [], [], [], []
    for k in range(order + 1):
        dA = (bA[k][-1] - bA[k][0]) / span
        if mid is None:
            dB = 0.5 * (bBx[k][0] + bBx[k][1])
            r = 0.5 * (lax.X[0] * f0[k][0] + lax.X[1] * f0[k][1])
        else:
            dB = bBx[k][mid]
            r = lax.X[mid] * f0[k][mid]
        g = dA - dB
        gamma.append(g)
        rhs.append(r)
        res.append(float(np.abs(g - r).max()))
        norms.append(float(np.abs(g).max()))
    t = ts[1] if mid is not None else 0.5 * (ts[0] + ts[1])
    return QuasiContinuity(t, gamma, rhs, res, norms)


def _fd4(a, h):
    """4th-order centered x-derivative on interior nodes; NaN on the two nodes at each end."""
    out = np.full(a.shape, np.nan, dtype=a.dtype)
    out[..., 2:-2] = (-a[..., 4:] + 8 * a[..., 3:-1] - 8 * a[..., 1:-3] + a[..., :-4]) / (12 * h)
    return out


@dataclass(frozen=True)
class ZerothIdentities:
    """Pointwise residuals of the closed order-0 system at the middle of three frames.

    riccati:  a_x + (P/(sqrt2 e)) a^2 + sqrt2 e R
    gamma:    c (P a)_t + (R P_xx - P R_xx) + c (Fb a)_x - X
    phi:      phi_x + 2c P phi a - 2 X a, with phi = phi_0^1 - phi_0^2
    a_t:      a_t - (phi + sqrt2 e Fm + 2 S a)
    """

    riccati: np.ndarray
    gamma: np.ndarray
    phi: np.ndarray
    a_t: np.ndarray
    a_minus: np.ndarray
    phi_minus: np.ndarray

    def norms(self):
        sup = lambda r: float(np.nanmax(np.abs(r)))  # noqa: E731
        return {"riccati": sup(self.riccati), "gamma": sup(self.gamma), "phi": sup(self.phi), "a_t": sup(self.a_t)}


def zeroth_identities(lax, ts, substeps=None):
    """Evaluate the closed order-0 system on a batch of three equally spaced LaxData frames."""
    if len(ts) != 3:
        raise ValidationError("samples", "need three adjacent frames")
    length = lax.length
    n = lax.P.shape[-1]
    h = length / n
    a1, a2, sing = solve_gauge_batch(lax.P, length, 0, 1.0, R=lax.R, substeps=substeps)
    if np.any(np.isfinite(sing)):
        raise SingularityError(float(np.nanmin(sing)))
    span = ts[2] - ts[0]
    am = a1[0] - a2[0]
    a1t, a2t = (a1[0][2] - a1[0][0]) / span, (a2[0][2] - a2[0][0]) / span
    m = lambda f: f[1]  # noqa: E731
    P, R, S, Fb, Fm, X = (m(getattr(lax, k)) for k in ("P", "R", "S", "Fb", "Fm", "X"))
    a = am[1]
    amx = riccati_rhs(P, R, a)
    ric = _fd4(a, h) - amx
    Pxx, Rxx = deriv(P, length, 2), deriv(R, length, 2)
    gam = (C * (lax.P[2] * am[2] - lax.P[0] * am[0]) / span + (R * Pxx - P * Rxx)
           + C * (deriv(Fb, length, 1) * a + Fb * amx) - X)
    p1, p2 = phis(S, Fb, Fm, [a1[0][1]], [a2[0][1]], [a1t], [a2t], 0)
    phi = p1[0] - p2[0]
    res_phi = _fd4(phi, h) + 2.0 * C * P * phi * a - 2.0 * X * a
    res_at = (am[2] - am[0]) / span - (phi + R2 * E * Fm + 2.0 * S * a)
    return ZerothIdentities(ric, gam, res_phi, res_at, a, phi)


def adjacent_frames(u, problem, delta=1e-5):
    """Frames at t-delta, t, t+delta from one backward and one forward step of size delta."""
    from . import pde_core

    v = np.asarray(u.values)
    out = []
    for sgn in (-1, 1):
        st = pde_core.Stepper(problem, dt=sgn * delta)
        out.append(st.to_grid(st.step_hat(np.fft.fft(v))))
    mk = lambda t, w: pde_core.TrajectorySample(t, u.with_values(w))  # noqa: E731
    return [mk(-delta, out[0]), mk(0.0, v), mk(delta, out[1])]


# -- closed-form defect of the order-0 identity ------------------------------------------


def zero_mode(u, x_start=None, a0=0.0, substeps=None):
    """(p, s) with p'' = -u p, s = p', p(x_start) = -a0/(sqrt2 e), s(x_start) = 1.

    c a_-^0 = -p/s wherever s != 0; the pair stays finite through Riccati poles.
    """
    substeps = substeps or TOL.gauge_substeps
    P = np.asarray(u.values)
    start = _start_index(u.length, u.n, x_start)
    rhs = lambda f, y: np.stack([y[1], -f[0] * y[0]])  # noqa: E731
    out, _ = _integrate(rhs, np.array([-C * a0, 1.0]), [P], u.length, u.n, start, substeps)
    return out[0], out[1]


def principal_charge_Q0(u, x_start=None, a0=0.0, substeps=None):
    """Q^0 continued through Riccati poles: integral of u c a_-^0 = ln|s(x_R)/s(x_start)| (principal value)."""
    p, s = zero_mode(u, x_start, a0, substeps)
    start = _start_index(u.length, u.n, x_start)
    return float(np.log(abs(s[-1])) - np.log(abs(s[start])))


def order0_defect(u, spec=dfm.NONE, a0=0.0, substeps=None):
    """Predicted Gamma^0 - X = u Z/s^2 for frozen initial data a_-^0(x_L) = a0 at the left edge.

    Z(x) = W_L + 2 integral_{x_L}^x X p s with W_L = -2u - 2u_x c a0 - f (c a0)^2 at x_L. This vanishes
    identically only when X p s = 0, so the order-0 identity holds exactly only for undeformed flows.
    """
    substeps = substeps or TOL.gauge_substeps
    lax = real_lax_data(u, spec)
    vals = np.asarray(u.values)
    b0 = C * a0
    WL = -2.0 * vals[0] - 2.0 * deriv(vals, u.length, 1)[0] * b0 - lax.Fb[0] * b0 * b0

    def rhs(f, y):
        return np.stack([y[1], -f[0] * y[0], 2.0 * f[1] * y[0] * y[1]])

    out, _ = _integrate(rhs, np.array([-b0, 1.0, WL]), [vals, lax.X], u.length, u.n, 0, substeps)
    p, s, Z = out
    return vals * Z / (s * s)


# -- BCH engine cross-checks ------------------------------------------------------------------


def engine_connection(P, R, one_over_e, e, sqrt2):
    """A = (P/e) s_+ - e R s_- as a LoopElement with arbitrary scalar coefficients."""
    sp = P * one_over_e / sqrt2
    sm = e * R / sqrt2
    return la.LoopElement.of((sp, la.F1(-1)), (sp, la.F2(-1)), (-sm, la.F2(0)), (sm, la.F1(0)))


def engine_gauge(a1, a2):
    pairs = []
    for k, (x, y) in enumerate(zip(a1, a2)):
        pairs += [(x, la.F1(k)), (y, la.F2(k))]
    return la.LoopElement.of(*pairs)


def engine_rotated(P, R, a1, a2, depth, one_over_e=1.0 / E, e=E, sqrt2=R2, window=(-2, 16)):
    """e^G A e^{-G} (without the G_x part) from the BCH engine."""
    A = engine_connection(P, R, one_over_e, e, sqrt2)
    return la.bch_conjugate(engine_gauge(a1, a2), A, depth, window).total()


def engine_f0(a1, a2, depth, window=(-2, 16)):
    """b^n coefficients of e^G b^0 e^{-G}: the anomaly coefficients f0^n from the engine."""
    return la.bch_conjugate(engine_gauge(a1, a2), la.LoopElement({la.b(0): 1}), depth, window).total()

