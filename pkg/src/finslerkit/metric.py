"""Space definition and the (alpha,beta)-metric families.

The central family is F = (alpha+beta)^(k+1) / alpha^k with positive integer
exponent k; k = 1 reduces to the square metric.  The other families are kept
for audit breadth: every closed form downstream is checked against the same
differentiation oracles across all of them.

The literature overloads one symbol as both manifold dimension and metric
exponent; here the exponent is named k everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .numerics import pd_check

FAMILIES = (
    "generalized-square",
    "square",
    "randers",
    "kropina",
    "generalized-kropina",
    "matsumoto",
    "riemannian",
)


class FamilyDomainError(ArithmeticError):
    """A metric family was evaluated outside its (alpha, beta) domain."""

    def __init__(self, family: str, message: str):
        super().__init__(f"{family}: {message}")
        self.family = family


class DegenerateMetricError(ArithmeticError):
    """a(x) failed positive-definiteness; carries the failing pivot (1-based)."""

    def __init__(self, pivot: int, x):
        super().__init__(f"a(x) not positive definite at x={list(x)} (pivot {pivot})")
        self.pivot = pivot


def _real(v):
    return getattr(v, "value", v)


def _sqrt(v):
    method = getattr(v, "sqrt", None)
    if callable(method):
        return method()
    return math.sqrt(v)


@dataclass
class PhiPartials:
    """F(alpha, beta) with its first and second partials at one flag."""

    F: float
    Fa: float
    Fb: float
    Faa: float
    Fbb: float
    Fab: float


def phi_partials(family: str, k: int, alpha, beta) -> PhiPartials:
    """Closed-form partials of F(alpha, beta) up to second order.

    Scalar-generic: alpha/beta may be floats or dual numbers, so the same
    formulas feed both production evaluation and the derivative oracles.
    For the square and kropina families the exponent is fixed at 1.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown metric family '{family}'")
    if family in ("generalized-square", "square"):
        n = 1 if family == "square" else k
        s = alpha + beta
        return PhiPartials(
            F=s ** (n + 1) / alpha ** n,
            Fa=(alpha - n * beta) * s ** n / alpha ** (n + 1),
            Fb=(n + 1) * s ** n / alpha ** n,
            Faa=n * (n + 1) * beta * beta * s ** (n - 1) / alpha ** (n + 2),
            Fbb=n * (n + 1) * s ** (n - 1) / alpha ** n,
            Fab=-(n * (n + 1)) * beta * s ** (n - 1) / alpha ** (n + 1),
        )
    if family == "riemannian":
        return PhiPartials(F=alpha, Fa=1.0, Fb=0.0, Faa=0.0, Fbb=0.0, Fab=0.0)
    if family == "randers":
        return PhiPartials(F=alpha + beta, Fa=1.0, Fb=1.0, Faa=0.0, Fbb=0.0, Fab=0.0)
    if family in ("kropina", "generalized-kropina"):
        n = 1 if family == "kropina" else k
        if _real(beta) <= 0.0:
            raise FamilyDomainError(family, "requires beta > 0")
        return PhiPartials(
            F=alpha ** (n + 1) / beta ** n,
            Fa=(n + 1) * alpha ** n / beta ** n,
            Fb=-n * alpha ** (n + 1) / beta ** (n + 1),
            Faa=n * (n + 1) * alpha ** (n - 1) / beta ** n,
            Fbb=n * (n + 1) * alpha ** (n + 1) / beta ** (n + 2),
            Fab=-(n * (n + 1)) * alpha ** n / beta ** (n + 1),
        )
    # matsumoto
    w = alpha - beta
    if _real(w) <= 0.0:
        raise FamilyDomainError(family, "requires alpha - beta > 0")
    return PhiPartials(
        F=alpha * alpha / w,
        Fa=alpha * (alpha - 2 * beta) / w ** 2,
        Fb=alpha * alpha / w ** 2,
        Faa=2 * beta * beta / w ** 3,
        Fbb=2 * alpha * alpha / w ** 3,
        Fab=-2 * alpha * beta / w ** 3,
    )


def finsler_norm(family: str, k: int, alpha, beta):
    """F(alpha, beta) alone; scalar-generic (used by the geodesic functional)."""
    if family not in FAMILIES:
        raise ValueError(f"unknown metric family '{family}'")
    if family in ("generalized-square", "square"):
        n = 1 if family == "square" else k
        return (alpha + beta) ** (n + 1) / alpha ** n
    if family == "riemannian":
        return alpha
    if family == "randers":
        return alpha + beta
    if family in ("kropina", "generalized-kropina"):
        n = 1 if family == "kropina" else k
        if _real(beta) <= 0.0:
            raise FamilyDomainError(family, "requires beta > 0")
        return alpha ** (n + 1) / beta ** n
    w = alpha - beta
    if _real(w) <= 0.0:
        raise FamilyDomainError("matsumoto", "requires alpha - beta > 0")
    return alpha * alpha / w


@dataclass
class SpaceSpec:
    """A Finsler space: dimension, exponent, family, a_ij(x) and b_i(x).

    Treated as immutable after construction; all evaluation is pure.  When
    ``b_potential`` is supplied, b_i is its exact symbolic gradient, so the
    gradient-field property holds by construction.
    """

    dim: int
    k: int
    family: str
    a: list[list[ex.Expr]]
    b: list[ex.Expr]
    b_potential: ex.Expr | None = None
    _da: list[list[list[ex.Expr]]] = field(default=None, repr=False, compare=False)
    _db: list[list[ex.Expr]] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError("exponent k must be a positive integer")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown metric family '{self.family}'")
        if len(self.a) != self.dim or any(len(row) != self.dim for row in self.a):
            raise ValueError(f"a must be a {self.dim}x{self.dim} block")
        if len(self.b) != self.dim:
            raise ValueError(f"b must have {self.dim} components")

    @classmethod
    def from_potential(cls, dim, k, family, a, potential: ex.Expr) -> "SpaceSpec":
        b = [ex.diff(potential, i) for i in range(dim)]
        return cls(dim, k, family, a, b, b_potential=potential)

    # -- pointwise evaluation (x may hold floats or dual scalars)

    def a_at(self, x) -> np.ndarray:
        return np.array(
            [[self.a[i][j].eval(x) for j in range(self.dim)] for i in range(self.dim)],
            dtype=float,
        )

    def b_at(self, x) -> np.ndarray:
        return np.array([self.b[i].eval(x) for i in range(self.dim)], dtype=float)

    def da_at(self, x) -> np.ndarray:
        """Spatial derivatives da[l, i, j] = d a_ij / d x^l (exact symbolic)."""
        if self._da is None:
            self._da = [
                [[ex.diff(self.a[i][j], l) for j in range(self.dim)] for i in range(self.dim)]
                for l in range(self.dim)
            ]
        d = self.dim
        return np.array(
            [[[self._da[l][i][j].eval(x) for j in range(d)] for i in range(d)] for l in range(d)],
            dtype=float,
        )

    def db_at(self, x) -> np.ndarray:
        """Spatial derivatives db[i, j] = d b_i / d x^j (exact symbolic)."""
        if self._db is None:
            self._db = [
                [ex.diff(self.b[i], j) for j in range(self.dim)] for i in range(self.dim)
            ]
        d = self.dim
        return np.array(
            [[self._db[i][j].eval(x) for j in range(d)] for i in range(d)], dtype=float
        )


@dataclass
class FlagPoint:
    """Base point x with direction y and the per-flag data every tensor reuses."""

    x: np.ndarray
    y: np.ndarray
    a: np.ndarray       # a_ij(x)
    b: np.ndarray       # b_i(x)
    y_low: np.ndarray   # y_i = a_ij y^j, lowered once per flag
    alpha: float
    beta: float


def flag_point(spec: SpaceSpec, x, y) -> FlagPoint:
    """Evaluate and cache alpha, beta and the lowered direction at (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != (spec.dim,) or y.shape != (spec.dim,):
        raise ValueError(f"x and y must have dimension {spec.dim}")
    if not np.any(y):
        raise ValueError("direction y must be nonzero")
    a = spec.a_at(x)
    check = pd_check(a)
    if not check.ok:
        raise DegenerateMetricError(check.pivot, x)
    b = spec.b_at(x)
    y_low = a @ y
    alpha = math.sqrt(float(y @ y_low))
    beta = float(b @ y)
    return FlagPoint(x=x, y=y, a=a, b=b, y_low=y_low, alpha=alpha, beta=beta)


def alpha_beta(spec: SpaceSpec, x, y) -> tuple[float, float]:
    """alpha = sqrt(a_ij y^i y^j) > 0 and beta = b_i y^i at the flag."""
    flag = flag_point(spec, x, y)
    return flag.alpha, flag.beta


@dataclass
class ValidityReport:
    """Pointwise domain flags; a report, never an exception."""

    alpha_positive: bool
    F_positive: bool
    family_domain: bool
    fundamental_pd: bool
    pd_pivot: int | None
    F: float | None

    @property
    def ok(self) -> bool:
        return (
            self.alpha_positive
            and self.F_positive
            and self.family_domain
            and self.fundamental_pd
        )


def validity_check(spec: SpaceSpec, x, y) -> ValidityReport:
    """Flags: alpha > 0, F > 0, family domain, fundamental tensor PD.

    The strong-convexity domain of these metrics has no simple closed
    description, so positive definiteness is reported pointwise via the
    factorization pivots rather than asserted globally.  A fundamental
    tensor whose reciprocal coefficients are numerically singular (zeta
    underflow near the domain boundary) counts as failing the PD flag: it
    is not invertible at working precision.
    """
    flag = flag_point(spec, x, y)  # zero y / degenerate a rejected before flags
    alpha_positive = flag.alpha > 0.0
    try:
        pp = phi_partials(spec.family, spec.k, flag.alpha, flag.beta)
        family_domain = True
        f_value = pp.F
    except FamilyDomainError:
        return ValidityReport(alpha_positive, False, False, False, None, None)
    F_positive = f_value > 0.0
    from . import tensors  # local import: tensors builds on this module

    try:
        mc = tensors.metric_coefficients(pp, spec.family, spec.k, flag.alpha, flag.beta)
        g = tensors.fundamental_tensor(mc, flag.a, flag.b, flag.y_low)
        check = pd_check(g)
        if check.ok:
            a_inv = np.linalg.inv(flag.a)
            b_up = a_inv @ flag.b
            tensors.reciprocal_coefficients(mc, flag.alpha, flag.beta, float(flag.b @ b_up))
        return ValidityReport(
            alpha_positive, F_positive, family_domain, check.ok, check.pivot, f_value
        )
    except ArithmeticError:
        return ValidityReport(alpha_positive, F_positive, family_domain, False, None, f_value)


def sample_flags(
    spec: SpaceSpec,
    n: int,
    seed: int,
    box: float = 1.0,
    max_tries: int | None = None,
) -> list[FlagPoint]:
    """Seeded in-domain flags: x uniform in [-box, box]^d, y uniform on the
    unit sphere, rejected unless every validity flag passes."""
    rng = np.random.default_rng(seed)
    out: list[FlagPoint] = []
    tries = 0
    limit = max_tries if max_tries is not None else max(200 * n, 1000)
    while len(out) < n:
        tries += 1
        if tries > limit:
            raise RuntimeError(f"in-domain sampling stalled after {tries} draws")
        x = rng.uniform(-box, box, size=spec.dim)
        y = rng.normal(size=spec.dim)
        norm = np.linalg.norm(y)
        if norm < 1e-12:
            continue
        y /= norm
        try:
            report = validity_check(spec, x, y)
        except (ArithmeticError, ValueError):
            continue
        if report.ok:
            out.append(flag_point(spec, x, y))
    return out
