"""Quasi-conserved charges Q^n = integral beta_n^A, anomaly rates Lambda^n = integral X f0^n, classical invariants."""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import abelianization as ab
from . import deformations as dfm
from .config import C_GAUGE, TOL
from .errors import SingularityError, ValidationError
from .grid import grid_points, trapezoid

CSV_COLUMNS = ("t", "Q0", "Q1", "Q2", "Lambda0", "Lambda1", "Lambda2", "mass", "momentum", "energy")


def _first_undefined_x(values, length):
    bad = np.flatnonzero(~np.isfinite(values))
    return float(grid_points(values.shape[-1], length)[bad[0]]) if bad.size else None


def charge_Q0(u, a_minus0):
    """(1/(sqrt2 e)) integral u a_-^0. `a_minus0` is an array, RiccatiSolution or GaugeCoefficients."""
    sing = getattr(a_minus0, "singular", None)
    am = np.asarray(a_minus0.a_minus0 if hasattr(a_minus0, "a_minus0") else a_minus0)
    if sing is None:
        sing = _first_undefined_x(am, u.length)
    if sing is not None:
        raise SingularityError(sing)
    return float(trapezoid(C_GAUGE * np.asarray(u.values) * am, u.length))


def charge_Q0_principal(u, x_start=None, a0=0.0, substeps=None):
    """Q^0 continued through Riccati poles (logarithmic principal value); equals charge_Q0 when regular."""
    return ab.principal_charge_Q0(u, x_start, a0, substeps)


def _require_order(rotated, n):
    if not 0 <= n <= rotated.order:
        raise ValidationError("charges.order", f"order {n} not computed (have {rotated.order})")
    if rotated.partial:
        raise SingularityError(rotated.meta.get("singular"))


def charge_Qn(rotated, n):
    _require_order(rotated, n)
    return float(trapezoid(rotated.betaA[n], rotated.length))


def anomaly_rate(u, rotated, spec=dfm.NONE, n=0):
    """Lambda^n = integral X f0^n. The anomaly is recomputed from (u, spec) when u is given."""
    _require_order(rotated, n)
    X = rotated.X if u is None else dfm.anomaly_values(np.asarray(u.values), u.length, spec)
    return float(trapezoid(X * rotated.f0[n], rotated.length))


def classical_invariants(u):
    """(integral u, integral u^2, H1[u])."""
    v = np.asarray(u.values)
    return (float(trapezoid(v, u.length)), float(trapezoid(v * v, u.length)), dfm.hamiltonian(u))


@dataclass
class ChargeSeries:
    times: np.ndarray
    Q: list
    Lambda: list
    mass: np.ndarray
    momentum: np.ndarray
    energy: np.ndarray
    dQ_dt_numeric: list = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.dQ_dt_numeric is None:
            self.dQ_dt_numeric = [centered_rate(self.times, q) for q in self.Q]

    @property
    def order(self):
        return len(self.Q) - 1

    def drift(self, name, n=None):
        """max_t |v(t) - v(0)| / max(|v(0)|, tiny)."""
        v = np.asarray(getattr(self, name)[n] if n is not None else getattr(self, name))
        return float(np.nanmax(np.abs(v - v[0])) / max(abs(v[0]), 1e-300))

    def rows(self):
        nan = np.full(self.times.shape, np.nan)
        cols = [self.times]
        cols += [self.Q[k] if k < len(self.Q) else nan for k in range(3)]
        cols += [self.Lambda[k] if k < len(self.Lambda) else nan for k in range(3)]
        cols += [self.mass, self.momentum, self.energy]
        return [tuple(float(c[i]) for c in cols) for i in range(self.times.size)]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows():
            w.writerow([repr(v) for v in r])
        return buf.getvalue()

    def to_json(self):
        data = {"metadata": self.metadata, "columns": list(CSV_COLUMNS), "rows": self.rows(),
                "dQ_dt_numeric": [list(map(float, d)) for d in self.dQ_dt_numeric]}
        return json.dumps(data, sort_keys=True, indent=1, allow_nan=True)


def centered_rate(times, values):
    """Second-order differences (centered inside, one-sided at the ends)."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return np.full(values.shape, np.nan)
    return np.gradient(values, times, edge_order=2 if values.size > 2 else 1)


def charge_series(samples, spec=dfm.NONE, order=2, lam=1.0, substeps=None, principal=False):
    """Charges, rates and invariants along a trajectory of real samples.

    All frames share one batched gauge solve from the left edge. With `principal=True`, Q^0 is the
    pole-continued value and higher orders are skipped (they have no such continuation).
    """
    if not samples:
        raise ValidationError("samples", "empty trajectory")
    if not 0 <= order <= 2:
        raise ValidationError("charges.order", "order must be 0, 1 or 2")
    length = samples[0].field.length
    vals = np.stack([np.asarray(s.field.values) for s in samples])
    times = np.array([s.t for s in samples])
    X = dfm.anomaly_values(vals, length, spec)
    inv = np.array([classical_invariants(s.field) for s in samples]).T
    if principal:
        q0 = np.array([ab.principal_charge_Q0(s.field, substeps=substeps) for s in samples])
        return ChargeSeries(times, [q0], [trapezoid(X, length)], *inv,
                            metadata={"order": 0, "principal": True, "spec": dfm.spec_to_dict(spec)})
    lax = ab.real_lax_data(vals, spec, length)
    a1, a2, sing = ab.solve_gauge_batch(vals, length, order, lam, R=lax.R, substeps=substeps)
    if np.any(np.isfinite(sing)):
        k = int(np.flatnonzero(np.isfinite(sing))[0])
        raise SingularityError(float(sing[k]))
    bA = ab.beta_A(lax.P, lax.R, list(a1), list(a2), order)
    f0, _, _, _ = ab.f_coefficients(list(a1), list(a2), order)
    Q = [trapezoid(bA[k], length) for k in range(order + 1)]
    Lam = [trapezoid(X * f0[k], length) for k in range(order + 1)]
    meta = {"order": order, "lambda": lam, "x_start": float(grid_points(vals.shape[-1], length)[0]),
            "initial": "zero", "substeps": substeps or TOL.gauge_substeps, "spec": dfm.spec_to_dict(spec)}
    return ChargeSeries(times, Q, Lam, *inv, metadata=meta)


def boundary_flux(samples, spec=dfm.NONE, order=0, lam=1.0, substeps=None):
    """beta_n^B(x_R) - beta_n^B(x_L) per frame: what dQ^n/dt picks up beyond Lambda^n on a finite window."""
    length = samples[0].field.length
    vals = np.stack([np.asarray(s.field.values) for s in samples])
    lax = ab.real_lax_data(vals, spec, length)
    a1, a2, _ = ab.solve_gauge_batch(vals, length, order, lam, R=lax.R, substeps=substeps)
    bB = ab.beta_B(lax.S, lax.Fb, lax.Fm, list(a1), list(a2), order)
    return [b[..., -1] - b[..., 0] for b in bB]


def density_rate_check(u, spec=dfm.NONE):
    """integral X for a single frame; Lambda^0 without a gauge solve."""
    return float(trapezoid(dfm.anomaly_values(np.asarray(u.values), u.length, spec), u.length))


__all__ = [
    "CSV_COLUMNS", "ChargeSeries", "anomaly_rate", "boundary_flux", "centered_rate", "charge_Q0",
    "charge_Q0_principal", "charge_Qn", "charge_series", "classical_invariants", "density_rate_check",
]
