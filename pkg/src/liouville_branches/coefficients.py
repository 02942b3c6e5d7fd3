"""Bifurcation-direction derivatives of mu(eps) at the branch point.

mu'(0) vanishes structurally: the second derivative of the operator pairs the
kernel generator with itself into the *first* component, orthogonal to the
generator sitting in the second.  mu''(0) is

    mu2 = C_{n,m} * (T1 + 2 T2 + T3)

with C_{n,m} = n(n+1)/(4(n^2+n+1)pi) * ((2n+1)(n-m)!/((n^2+n+2)(n+m)!))^2 and
three nested integrals of (P_n^m)^2 against the level-1 inverse: a quartic
term on [0, 1], a radial term whose middle kernel 1/(y^2(1-y^2)) carries a
finite part at y = 0, and an angular term with weight (z+2m)((1-z)/(1+z))^m.
At m = 0 the angular term coincides with the radial one.

Inner integrals are polynomial and are computed as exact rational
antiderivatives; the divisions by (1-y^2)^{m+1} / (1-y)^{2m+1} that make the
middle layers regular are exact as well (their zero remainders are asserted,
which is the no-residue property of the finite part).  Each nested term is
then integrated by parts: the inner antiderivative vanishes at +1 and the
glued antiderivative at -1, so the boundary terms drop and the triple
integrals collapse to single quadratures of non-oscillating integrands,

    T2 = int ((1-y^2)^{2m+1} Ihat^2 - c^2)/y^2 dy - 2 c^2,
    T3 = int Jt^2 (1-y)^{2m+1} (1+y)^{2m-1} / (y+2m)^2 dy,

which keep full relative precision even when the raw terms reach 1e80 (the
nested evaluation cannot: a global polynomial representation of factors
spanning many orders of magnitude loses all relative accuracy where they are
small, and for n >= 12 that noise outruns the answer).  The nested route
survives as a cross-check at small degree.  Quadrature refinement (panel
doubling) on the collapsed forms gives the reported error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb

from . import _exact
from .errors import DomainError, PrecisionError
from .inversion import glued_antiderivative
from .legendre import QuadratureSpec, panel_rule
from .spectral import SymmetryClass, make_basis, make_transform, mu_n

__all__ = [
    "CurvatureResult",
    "TableRow",
    "c_nm",
    "mu_prime",
    "mu_second",
    "sign_table",
    "table_to_csv",
    "table_to_json",
]

# run-to-run floor on the error estimate: the outer quadrature is exact for
# the polynomial integrands, so the refinement delta is pure roundoff and can
# underestimate the cancellation noise in T1 + 2 T2 + T3
_ROUNDOFF_FLOOR = 1e-13


@dataclass(frozen=True)
class CurvatureResult:
    n: int
    m: int
    c_nm: float
    term_quartic: float
    term_radial: float
    term_angular: float
    mu2: float
    error_estimate: float

    def __post_init__(self):
        combo = self.c_nm * (self.term_quartic + 2.0 * self.term_radial + self.term_angular)
        if self.mu2 != combo:
            raise DomainError("mu2 must equal c_nm * (quartic + 2 radial + angular)")

    @property
    def sign(self) -> str:
        if abs(self.mu2) < self.error_estimate:
            return "0*"
        return "+" if self.mu2 > 0 else "-"

    @property
    def in_hypothesis(self) -> bool:
        """Whether (n, m) satisfies 1 <= n/m < 3, the curvature lemma's range."""
        return self.m >= 1 and self.m <= self.n < 3 * self.m


def c_nm(n: int, m: int) -> float:
    """Positive prefactor of the curvature formula, assembled in log space."""
    if not 0 <= m <= n:
        raise DomainError("need 0 <= m <= n")
    lg = (
        math.log(n * (n + 1.0)) - math.log(4.0 * (n * n + n + 1) * math.pi)
        + 2.0 * (math.log(2.0 * n + 1) + math.lgamma(n - m + 1)
                 - math.log(n * n + n + 2.0) - math.lgamma(n + m + 1))
    )
    return math.exp(lg)


def mu_prime(n: int, m: int) -> float:
    """First derivative of mu(eps) at the branch point; vanishes structurally.

    Evaluated honestly from the bifurcation-formula quotient on the
    quadrature grid rather than returned as a literal zero.
    """
    if not (m == 0 or 3 * m > n):
        raise DomainError("restricted kernel is not one-dimensional for this (n, m)")
    if m > n:
        raise DomainError("need m <= n")
    sym = SymmetryClass(n, m)
    tr = make_transform(make_basis(sym, n))
    from .spectral import SphereField

    w0 = SphereField.from_coefficients(sym, n, {}, {(n, m): 1.0})
    g1, g2 = tr.synthesize(w0.vec)
    # second derivative of the operator paired with the kernel generator
    b1 = g1 * g1 + g2 * g2
    b2 = n * (n + 1.0) * g1 * g2
    numerator = tr.integrate(b1 * g1 + b2 * g2)
    w0_sq = tr.integrate(g2 * g2)
    mixed = -8.0 / (2.0 + mu_n(n)) ** 2 * w0_sq
    denominator = math.sqrt((n * (n + 1.0) + 1.0) * w0_sq) * mixed
    return -0.5 * numerator / denominator


@lru_cache(maxsize=128)
def _exact_pieces(n: int, m: int):
    """Exact-rational integrand data shared by both quadrature resolutions."""
    F = Fraction
    one_minus = [F(1), F(-1)]
    one_plus = [F(1), F(1)]
    w2 = _exact.pmul(one_minus, one_plus)  # 1 - y^2

    S = _exact.assoc_legendre_body(n, m)
    S2 = _exact.pmul(S, S)
    p_sq = _exact.pmul(_exact.ppow(w2, m), S2)              # (P_n^m)^2
    quartic = _exact.pmul(_exact.ppow(w2, 2 * m), _exact.pmul(S2, S2))

    # radial term: I(y) = int_y^1 x P^2 vanishes to order m+1 at both ends
    p2 = _exact.pmul([F(0), F(1)], p_sq)
    anti = _exact.pantider(p2)
    inner = _exact.padd([_exact.peval(anti, 1)], _exact.pscale(anti, -1))
    ihat = inner
    for _ in range(m + 1):
        ihat = _exact.pscale(_exact.pdiv_exact(ihat, [F(-1), F(1)]), -1)  # / (1-y)
        ihat = _exact.pdiv_exact(ihat, one_plus)                           # / (1+y)
    u = _exact.pmul(_exact.ppow(w2, m), ihat)
    c_fp = u[0]
    num = list(u)
    num[0] -= c_fp
    if num[0] != 0 or (len(num) > 1 and num[1] != 0):
        raise ArithmeticError("finite part at y = 0 has a spurious residue")
    hreg = num[2:] or [F(0)]

    # collapsed radial integrand: ((1-y^2)^{2m+1} Ihat^2 - c^2)/y^2, again an
    # exact polynomial because the numerator is even with a double zero at 0
    u2 = _exact.pmul(_exact.ppow(w2, 2 * m + 1), _exact.pmul(ihat, ihat))
    num2 = list(u2)
    num2[0] -= c_fp * c_fp
    if num2[0] != 0 or (len(num2) > 1 and num2[1] != 0):
        raise ArithmeticError("collapsed radial integrand is not regular at y = 0")
    collapsed2 = num2[2:] or [F(0)]

    pieces = {
        "p_sq": _exact.to_cheb(p_sq),
        "quartic": _exact.to_cheb(quartic),
        "inner2": _exact.to_cheb(inner),
        "dinner2": _exact.to_cheb(_exact.pscale(p2, -1)),
        "hreg2": _exact.to_cheb(hreg),
        "collapsed2": _exact.to_cheb(collapsed2),
        "c2": float(c_fp),
    }

    if m >= 1:
        # angular term: the weighted square (x+2m)(1-x)^{2m} S^2 is polynomial
        # and its antiderivative J vanishes to order 2m+1 at x = 1; Jt is the
        # exact quotient J/(1-y)^{2m+1}
        q = _exact.pmul(_exact.pmul(_exact.padd([F(2 * m)], [F(0), F(1)]),
                                    _exact.ppow(one_minus, 2 * m)), S2)
        anti3 = _exact.pantider(q)
        j_poly = _exact.padd([_exact.peval(anti3, 1)], _exact.pscale(anti3, -1))
        jt = j_poly
        for _ in range(2 * m + 1):
            jt = _exact.pscale(_exact.pdiv_exact(jt, [F(-1), F(1)]), -1)
        pieces["q3"] = _exact.to_cheb(q)
        pieces["jt"] = _exact.to_cheb(jt)
        pieces["f3_num"] = _exact.to_cheb(_exact.pmul(jt, _exact.ppow(one_plus, 2 * m - 1)))
    return pieces


def _effective_spec(spec: QuadratureSpec, n: int) -> QuadratureSpec:
    # per-panel order must cover the polynomial degree of the outer integrands
    return replace(spec, points_per_panel=max(spec.points_per_panel, 2 * n + 8))


def _curvature_terms(n: int, m: int, spec: QuadratureSpec) -> tuple[float, float, float]:
    pieces = _exact_pieces(n, m)
    spec = _effective_spec(spec, n)

    x1, w1 = panel_rule(0.0, 1.0, spec)
    t_quartic = float(w1 @ cheb.chebval(x1, pieces["quartic"]))

    x2, w2 = panel_rule(-1.0, 1.0, spec, extra_edges=[0.0])
    t_radial = float(w2 @ cheb.chebval(x2, pieces["collapsed2"])) \
        - 2.0 * pieces["c2"] ** 2

    if m == 0:
        t_angular = t_radial
    else:
        spec3 = replace(spec, endpoint_exponent=(2.0 * m, 2.0 * m))
        x3, w3 = panel_rule(-1.0, 1.0, spec3)
        jt = cheb.chebval(x3, pieces["jt"])
        vals = jt * jt * (1.0 - x3) ** (2 * m + 1) * (1.0 + x3) ** (2 * m - 1) \
            / (x3 + 2.0 * m) ** 2
        t_angular = float(w3 @ vals)

    return t_quartic, t_radial, t_angular


def _curvature_terms_nested(n: int, m: int, spec: QuadratureSpec) -> tuple[float, float, float]:
    """Literal nested evaluation (inner antiderivative, glued middle, outer
    panels).  Loses relative accuracy for large n, m; kept as a small-degree
    cross-check of the collapsed forms and of glued_antiderivative."""
    pieces = _exact_pieces(n, m)
    spec = _effective_spec(spec, n)

    x1, w1 = panel_rule(0.0, 1.0, spec)
    t_quartic = float(w1 @ cheb.chebval(x1, pieces["quartic"]))

    inner2 = pieces["inner2"]
    dinner2 = pieces["dinner2"]
    hreg2 = pieces["hreg2"]
    x2, w2 = panel_rule(-1.0, 1.0, spec, extra_edges=[0.0])
    a2 = glued_antiderivative(
        lambda y: np.asarray(y, dtype=float),
        lambda y: np.ones_like(np.asarray(y, dtype=float)),
        [0.0],
        lambda y: cheb.chebval(y, inner2),
        lambda y: cheb.chebval(y, dinner2),
        x2, spec=spec,
        regular_part=lambda y: cheb.chebval(y, hreg2),
    )
    t_radial = float(w2 @ (x2 * cheb.chebval(x2, pieces["p_sq"]) * a2))

    if m == 0:
        t_angular = t_radial
    else:
        f3_num = pieces["f3_num"]
        deg = 64
        while True:
            coef = cheb.chebinterpolate(
                lambda y: cheb.chebval(y, f3_num) / (y + 2.0 * m) ** 2, deg)
            scale = np.max(np.abs(coef))
            if scale == 0.0 or np.max(np.abs(coef[-8:])) < 1e-15 * scale or deg >= 1024:
                break
            deg *= 2
        g3 = cheb.chebint(coef, lbnd=-1.0)
        spec3 = replace(spec, endpoint_exponent=(2.0 * m, 2.0 * m))
        x3, w3 = panel_rule(-1.0, 1.0, spec3)
        t_angular = float(w3 @ (cheb.chebval(x3, pieces["q3"]) * cheb.chebval(x3, g3)))

    return t_quartic, t_radial, t_angular


def mu_second(n: int, m: int, quad: QuadratureSpec = QuadratureSpec()) -> CurvatureResult:
    """Branch curvature mu''(0) with a refinement-based error estimate.

    Each of the three integrals must move by less than
    max(abs_tol, rel_tol * |integral|) under panel doubling, else a
    PrecisionError carries both estimates.  The reported error is the
    combined refinement delta, floored at the roundoff level of the
    cancellation in T1 + 2 T2 + T3.
    """
    if not 0 <= m <= n:
        raise DomainError("need 0 <= m <= n")
    coarse = _curvature_terms(n, m, quad)
    fine = _curvature_terms(n, m, quad.refined())
    c = c_nm(n, m)
    t1, t2, t3 = fine
    mu2 = c * (t1 + 2.0 * t2 + t3)
    for name, lo, hi in zip(("quartic", "radial", "angular"), coarse, fine):
        if abs(hi - lo) > max(quad.abs_tol, quad.rel_tol * abs(hi)):
            raise PrecisionError(
                f"curvature quadrature did not converge for (n={n}, m={m}): "
                f"{name} term moved by {abs(hi - lo):.3e} under refinement",
                coarse=c * (coarse[0] + 2 * coarse[1] + coarse[2]), fine=mu2)
    delta = c * (abs(fine[0] - coarse[0]) + 2.0 * abs(fine[1] - coarse[1])
                 + abs(fine[2] - coarse[2]))
    floor = _ROUNDOFF_FLOOR * c * (abs(t1) + 2.0 * abs(t2) + abs(t3))
    error = max(delta, floor)
    return CurvatureResult(n=n, m=m, c_nm=c, term_quartic=t1, term_radial=t2,
                           term_angular=t3, mu2=mu2, error_estimate=error)


@dataclass(frozen=True)
class TableRow:
    n: int
    m: int
    mu2: float
    error_estimate: float
    sign: str
    in_hypothesis: bool
    failure: str | None = None


def _row(n: int, m: int, quad: QuadratureSpec) -> TableRow:
    try:
        res = mu_second(n, m, quad)
    except PrecisionError as exc:
        return TableRow(n=n, m=m, mu2=float("nan"), error_estimate=float("nan"),
                        sign="?", in_hypothesis=(m >= 1 and m <= n < 3 * m),
                        failure=str(exc))
    return TableRow(n=n, m=m, mu2=res.mu2, error_estimate=res.error_estimate,
                    sign=res.sign, in_hypothesis=res.in_hypothesis)


def sign_table(n_min: int, n_max: int, quad: QuadratureSpec = QuadratureSpec(),
               jobs: int = 1) -> list[TableRow]:
    """One row per (n, m), 0 <= m <= n; precision failures are recorded per row."""
    if not 1 <= n_min <= n_max:
        raise DomainError("need 1 <= n_min <= n_max")
    tasks = [(n, m) for n in range(n_min, n_max + 1) for m in range(0, n + 1)]
    if jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(jobs) as pool:
            rows = pool.starmap(_row, [(n, m, quad) for (n, m) in tasks])
    else:
        rows = [_row(n, m, quad) for (n, m) in tasks]
    return sorted(rows, key=lambda r: (r.n, r.m))


def table_to_csv(rows: list[TableRow]) -> str:
    lines = ["n,m,mu2,error,sign"]
    for r in rows:
        lines.append(f"{r.n},{r.m},{r.mu2!r},{r.error_estimate!r},{r.sign}")
    return "\n".join(lines) + "\n"


def table_to_json(rows: list[TableRow]) -> list[dict]:
    return [
        {"n": r.n, "m": r.m, "mu2": r.mu2, "error": r.error_estimate,
         "sign": r.sign, "in_hypothesis": r.in_hypothesis,
         **({"failure": r.failure} if r.failure else {})}
        for r in rows
    ]
