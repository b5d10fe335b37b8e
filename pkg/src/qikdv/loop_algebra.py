"""Graded sl(2) loop algebra with generators b^n, F1^n, F2^n and truncated conjugation series.

Elements are sparse maps from generators to coefficients. Coefficients may be any scalar
ring supporting +, -, * (Fraction, float, complex, sympy expressions, numpy arrays).
The spectral parameter never appears as a number; it is carried by the grade index.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import factorial

import numpy as np

from .config import TOL
from .errors import TruncationError

DEFAULT_WINDOW = TOL.grade_window


class Kind(str, Enum):
    B = "b"
    F1 = "F1"
    F2 = "F2"


_KIND_ORDER = {Kind.B: 0, Kind.F1: 1, Kind.F2: 2}


@dataclass(frozen=True, order=False)
class Generator:
    kind: Kind
    power: int

    def sort_key(self):
        return (self.power, _KIND_ORDER[self.kind])

    def __repr__(self):
        return f"{self.kind.value}^{self.power}"


def b(n):
    return Generator(Kind.B, n)


def F1(n):
    return Generator(Kind.F1, n)


def F2(n):
    return Generator(Kind.F2, n)


def is_zero(c):
    if isinstance(c, np.ndarray):
        return not np.any(c)
    try:
        return bool(c == 0)
    except (TypeError, ValueError):
        return False


def scale_rational(c, num, den):
    """c * num/den without promoting arrays to object dtype."""
    if isinstance(c, np.ndarray) or isinstance(c, (float, complex, np.floating, np.complexfloating)):
        return c * (num / den)
    if isinstance(c, (int, Fraction)):
        return c * Fraction(num, den)
    try:  # sympy and similar exact rings
        import sympy

        if isinstance(c, sympy.Basic):
            return c * sympy.Rational(num, den)
    except ImportError:  # pragma: no cover
        pass
    return c * (num / den)


@dataclass(frozen=True, eq=False)
class LoopElement:
    """Finite combination sum_g c_g g in canonical sparse form (no stored zeros)."""

    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {g: c for g, c in self.terms.items() if not is_zero(c)}
        object.__setattr__(self, "terms", dict(sorted(clean.items(), key=lambda kv: kv[0].sort_key())))

    @classmethod
    def of(cls, *pairs):
        """LoopElement.of((coef, gen), ...) with repeated generators summed."""
        acc = {}
        for c, g in pairs:
            acc[g] = acc[g] + c if g in acc else c
        return cls(acc)

    def coefficient(self, gen, default=0):
        return self.terms.get(gen, default)

    def is_zero(self):
        return not self.terms

    def grades(self):
        return sorted({g.power for g in self.terms})

    def map(self, fn):
        return LoopElement({g: fn(c) for g, c in self.terms.items()})

    def __add__(self, other):
        acc = dict(self.terms)
        for g, c in other.terms.items():
            acc[g] = acc[g] + c if g in acc else c
        return LoopElement(acc)

    def __neg__(self):
        return LoopElement({g: -c for g, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, s):
        return LoopElement({g: c * s for g, c in self.terms.items()})

    def __rmul__(self, s):
        return LoopElement({g: s * c for g, c in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, LoopElement):
            return NotImplemented
        return (self - other).is_zero()

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c!r}){g!r}" for g, c in self.terms.items())


ZERO = LoopElement({})


def structure(g, h):
    """Bracket of two generators as a list of (integer constant, generator)."""
    kg, kh = g.kind, h.kind
    p = g.power + h.power
    if kg == kh:
        return []
    if kg == Kind.B:
        return [(2, F2(p))] if kh == Kind.F1 else [(2, F1(p))]
    if kh == Kind.B:
        return [(-2, F2(p))] if kg == Kind.F1 else [(-2, F1(p))]
    if kg == Kind.F1:  # [F1^n, F2^m] = b^{n+m+1}
        return [(1, b(p + 1))]
    return [(-1, b(p + 1))]


def corrupted_structure(g, h):
    """Deliberately broken table (drops the grade shift on [F2, F1]); used to test the checkers."""
    if g.kind == Kind.F2 and h.kind == Kind.F1:
        return [(-1, b(g.power + h.power))]
    return structure(g, h)


def commutator(x, y, window=DEFAULT_WINDOW, table=structure):
    """[x, y] with a hard error when any grade leaves `window`."""
    lo, hi = window
    acc = {}
    for g, cg in x.terms.items():
        for h, ch in y.terms.items():
            for k, gen in table(g, h):
                if not lo <= gen.power <= hi:
                    raise TruncationError(gen.power, window)
                c = cg * ch
                if k != 1:
                    c = c * k
                acc[gen] = acc[gen] + c if gen in acc else c
    return LoopElement(acc)


@dataclass(frozen=True)
class BchSeries:
    """terms[k] = (1/k!) ad_X^k Y for k = 0..depth."""

    depth: int
    terms: list

    def total(self, upto=None):
        upto = self.depth if upto is None else upto
        out = ZERO
        for t in self.terms[: upto + 1]:
            out = out + t
        return out


def bch_conjugate(g_exponent, y, depth, window=DEFAULT_WINDOW, table=structure):
    """Truncated e^X Y e^{-X} = Y + [X,Y] + (1/2)[X,[X,Y]] + ... up to `depth` nested brackets."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    terms = [y]
    nested = y
    for k in range(1, depth + 1):
        nested = commutator(g_exponent, nested, window, table)
        terms.append(nested.map(lambda c, k=k: scale_rational(c, 1, factorial(k))))
    return BchSeries(depth, terms)


def project(e, kind):
    kind = Kind(kind)
    return LoopElement({g: c for g, c in e.terms.items() if g.kind == kind})


def fold_negative(e, lam):
    """Rewrite grade -1 generators as lam^{-1} times grade 0 ones (a numeric spectral value)."""
    acc = {}
    for g, c in e.terms.items():
        if g.power == -1 and g.kind != Kind.B:
            g, c = Generator(g.kind, 0), c / lam
        acc[g] = acc[g] + c if g in acc else c
    return LoopElement(acc)


# -- 2x2 matrix realisation ------------------------------------------------------------

SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]])
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]])
SIGMA_3 = np.diag([1.0, -1.0])


def generator_matrix(g, lam):
    scale = lam ** g.power
    if g.kind == Kind.B:
        return scale * SIGMA_3
    sign = -1.0 if g.kind == Kind.F1 else 1.0
    return scale * (lam * SIGMA_PLUS + sign * SIGMA_MINUS) / np.sqrt(2.0)


def to_matrix(e, lam):
    out = np.zeros((2, 2), dtype=complex)
    for g, c in e.terms.items():
        out = out + complex(c) * generator_matrix(g, lam)
    return out


def sigma_plus():
    """sigma_+ = (F1^{-1} + F2^{-1})/sqrt(2) as a float element."""
    s = 1.0 / np.sqrt(2.0)
    return LoopElement({F1(-1): s, F2(-1): s})


def sigma_minus():
    """sigma_- = (F2^0 - F1^0)/sqrt(2)."""
    s = 1.0 / np.sqrt(2.0)
    return LoopElement({F2(0): s, F1(0): -s})


# -- randomized identity checks ----------------------------------------------------------


def random_element(rng, grades=(-1, 3), max_terms=4, max_num=9):
    """Random element with small rational coefficients."""
    acc = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        kind = list(Kind)[int(rng.integers(0, 3))]
        gen = Generator(kind, int(rng.integers(grades[0], grades[1] + 1)))
        acc[gen] = Fraction(int(rng.integers(-max_num, max_num + 1)), int(rng.integers(1, max_num + 1)))
    return LoopElement(acc)


def check_identities(n_triples, seed, table=structure, window=(-4, 12)):
    """Counts of (antisymmetry failures, Jacobi failures) over random rational triples."""
    rng = np.random.default_rng(seed)
    anti = jac = 0
    for _ in range(n_triples):
        x, y, z = (random_element(rng) for _ in range(3))
        br = lambda p, q: commutator(p, q, window, table)  # noqa: E731
        if not (br(x, y) + br(y, x)).is_zero():
            anti += 1
        if not (br(x, br(y, z)) + br(y, br(z, x)) + br(z, br(x, y))).is_zero():
            jac += 1
    return anti, jac


def expm2(m):
    """exp of a 2x2 matrix via Cayley-Hamilton: e^M = e^{tr/2}(cosh(d) I + sinh(d)/d (M - tr/2 I))."""
    m = np.asarray(m, dtype=complex)
    half = 0.5 * np.trace(m)
    k = m - half * np.eye(2)
    d = np.sqrt(-np.linalg.det(k) + 0j)
    sinhc = np.sinh(d) / d if abs(d) > 1e-8 else 1.0 + d * d / 6.0
    return np.exp(half) * (np.cosh(d) * np.eye(2) + sinhc * k)


def bch_dense_check(n_samples, seed, depth=4, lam=0.7, scale=0.1):
    """max over samples of |BCH(depth) - e^X Y e^{-X}| / (|X|^{depth+1} |Y|) in the spectral norm.

    X, Y are random float elements realised as 2x2 matrices at `lam`. The exact remainder is bounded
    by (2|X|)^{depth+1}/(depth+1)! |Y| e^{2|X|}, so the ratio stays below 1 for small X.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_samples):
        x = random_element(rng, grades=(-1, 2)).map(lambda c: float(c) * scale)
        y = random_element(rng, grades=(-1, 2)).map(float)
        series = bch_conjugate(x, y, depth, window=(-8, 24)).total()
        mx, my = to_matrix(x, lam), to_matrix(y, lam)
        dense = expm2(mx) @ my @ expm2(-mx)
        err = np.linalg.norm(to_matrix(series, lam) - dense, 2)
        nx, ny = np.linalg.norm(mx, 2), np.linalg.norm(my, 2)
        if nx > 0 and ny > 0:
            worst = max(worst, err / (nx ** (depth + 1) * ny))
    return worst
