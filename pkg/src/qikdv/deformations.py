"""Hamiltonians, functional derivatives and anomaly functions of the deformation families.

H[u] = integral(1/2 u_x^2 - u^3 + eps F) with
    UUXX:        F = 3/4 u u_xx
    POWER_UX(m): F = -(3/(2m)) u_x^m
    UD2N(n):     F = 3/4 u u^(2n)
and the power deformation H = integral(1/2 u_x^2 - u^(3+3 eps)).
The anomaly is X = 2u^2 + 2/3 (dH/du + u_xx).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import TOL
from .errors import DomainError, ValidationError
from .grid import GridField, as_values, deriv, trapezoid


class Family(str, Enum):
    UUXX = "uuxx"
    POWER_UX = "power_ux"
    UD2N = "ud2n"


@dataclass(frozen=True)
class NoDeformation:
    kind = "none"
    epsilon = 0.0


@dataclass(frozen=True)
class LocalTerm:
    family: Family
    epsilon: float
    m: int = 3
    n: int = 1

    kind = "local"

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family == Family.POWER_UX and (int(self.m) != self.m or self.m < 3):
            raise ValidationError("deformation.m", f"POWER_UX needs integer m >= 3, got {self.m!r}")
        if self.family == Family.UD2N and (int(self.n) != self.n or self.n < 1):
            raise ValidationError("deformation.n", f"UD2N needs integer n >= 1, got {self.n!r}")


@dataclass(frozen=True)
class PowerDef:
    epsilon: float

    kind = "powerdef"

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError("deformation.epsilon", "power deformation needs epsilon > 0")


NONE = NoDeformation()


def spec_from_dict(d, key="deformation"):
    """Build a spec from {"kind": ..., "epsilon": ..., "m": ..., "n": ...}."""
    kind = str(d.get("kind", "none")).lower()
    if kind == "none":
        return NONE
    try:
        eps = float(d.get("epsilon", 0.0))
    except (TypeError, ValueError):
        raise ValidationError(f"{key}.epsilon", f"not a number: {d.get('epsilon')!r}") from None
    if kind == "powerdef":
        return PowerDef(eps)
    if kind in {f.value for f in Family}:
        return LocalTerm(Family(kind), eps, m=int(d.get("m", 3)), n=int(d.get("n", 1)))
    raise ValidationError(f"{key}.kind", f"unknown deformation {kind!r}")


def spec_to_dict(spec):
    if isinstance(spec, NoDeformation):
        return {"kind": "none"}
    if isinstance(spec, PowerDef):
        return {"kind": "powerdef", "epsilon": spec.epsilon}
    out = {"kind": spec.family.value, "epsilon": spec.epsilon}
    if spec.family == Family.POWER_UX:
        out["m"] = spec.m
    if spec.family == Family.UD2N:
        out["n"] = spec.n
    return out


def _check_positive(u):
    bad = np.flatnonzero(~(np.real(u) > TOL.u_floor))
    if bad.size:
        raise DomainError("power deformation requires u > u_floor", int(bad[0]))


def _density(u, length, spec, cubic):
    ux = deriv(u, length, 1)
    if isinstance(spec, PowerDef):
        _check_positive(u)
        return 0.5 * ux**2 + cubic * u ** (3.0 + 3.0 * spec.epsilon)
    dens = 0.5 * ux**2 + cubic * u**3
    if isinstance(spec, LocalTerm):
        eps = spec.epsilon
        if spec.family == Family.UUXX:
            dens = dens + eps * 0.75 * u * deriv(u, length, 2)
        elif spec.family == Family.POWER_UX:
            dens = dens - eps * 1.5 / spec.m * ux**spec.m
        else:
            dens = dens + eps * 0.75 * u * deriv(u, length, 2 * spec.n)
    return dens


def _bracket(u, length, spec, cubic):
    """dH/du + u_xx, built without the cancelling u_xx pair."""
    if isinstance(spec, PowerDef):
        _check_positive(u)
        return cubic * 3.0 * (1.0 + spec.epsilon) * u ** (2.0 + 3.0 * spec.epsilon)
    out = 3.0 * cubic * u**2
    if isinstance(spec, LocalTerm):
        eps = spec.epsilon
        if spec.family == Family.UUXX:
            out = out + eps * 1.5 * deriv(u, length, 2)
        elif spec.family == Family.POWER_UX:
            out = out + eps * 1.5 * deriv(deriv(u, length, 1) ** (spec.m - 1), length, 1)
        else:
            out = out + eps * 1.5 * deriv(u, length, 2 * spec.n)
    return out


def _variational(u, length, spec, cubic):
    return _bracket(u, length, spec, cubic) - deriv(u, length, 2)


def hamiltonian(u, spec=NONE, cubic=-1.0):
    """Trapezoid quadrature of the Hamiltonian density. `cubic` is the u^3 coefficient."""
    return float(np.real(trapezoid(_density(u.values, u.length, spec, cubic), u.length)))


def functional_derivative(u, spec=NONE, cubic=-1.0):
    return u.with_values(_variational(u.values, u.length, spec, cubic))


def bracket_values(values, length, spec=NONE, cubic=-1.0):
    """dH/du + u_xx on raw arrays (real or complex)."""
    return _bracket(values, length, spec, cubic)


def anomaly_values(values, length, spec=NONE):
    if isinstance(spec, NoDeformation):
        return np.zeros_like(values)
    if isinstance(spec, LocalTerm) and spec.family == Family.UUXX:
        return spec.epsilon * deriv(values, length, 2)
    if isinstance(spec, PowerDef):
        _check_positive(values)
        return 2.0 * values**2 - 2.0 * (1.0 + spec.epsilon) * values ** (2.0 + 3.0 * spec.epsilon)
    return 2.0 * values**2 + (2.0 / 3.0) * bracket_values(values, length, spec)


def anomaly(u, spec=NONE):
    """X = 2u^2 + 2/3 (dH/du + u_xx), with exact closed forms where they exist."""
    return u.with_values(anomaly_values(u.values, u.length, spec))


def anomaly_first_order(u, epsilon):
    """Leading term -2 eps u^2 (1 + 3 ln u) of the power-deformation anomaly."""
    v = as_values(u)
    _check_positive(v)
    out = -2.0 * epsilon * v**2 * (1.0 + 3.0 * np.log(v))
    return u.with_values(out) if isinstance(u, GridField) else out


def parity_check(f, center=0.0):
    """Normalized sup |f(c + s) - f(c - s)| over grid-symmetric offsets; 0 means even about c."""
    vals = as_values(f)
    n = vals.shape[0]
    dx = f.dx
    j0 = (center + 0.5 * f.length) / dx
    if abs(j0 - round(j0)) > 1e-9:
        raise ValidationError("center", f"{center!r} is not a grid point")
    j0 = int(round(j0))
    idx = np.arange(n)
    mirror = (2 * j0 - idx) % n
    return float(np.abs(vals - vals[mirror]).max() / max(1.0, np.abs(vals).max()))
