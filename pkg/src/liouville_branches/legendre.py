"""Associated Legendre polynomials, second-kind companions, norms, quadrature.

Conventions: P_n^m carries the Condon-Shortley factor (-1)^m, so
P_1^1(z) = -sqrt(1-z^2).  This is the single normative sign convention for
everything downstream.  Evaluation uses the stable three-term recurrence in
degree at fixed order, seeded from the closed form of P_m^m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg

from . import _exact
from .errors import DomainError, PoleError

__all__ = [
    "LegendreIndex",
    "QuadratureSpec",
    "legendre_p",
    "legendre_p_derivative",
    "legendre_p_tilde",
    "legendre_p_tilde_derivative",
    "legendre_norm",
    "legendre_zeros",
    "legendre_tilde_zeros",
    "gauss_legendre",
    "panel_rule",
    "panel_edges",
]


@dataclass(frozen=True)
class LegendreIndex:
    """Degree/order pair (n, m).

    m <= n is required for first-kind evaluation; the second-kind companions
    accept any m >= 0.
    """

    n: int
    m: int

    def __post_init__(self):
        if self.n < 0 or self.m < 0:
            raise DomainError(f"degree and order must be nonnegative, got {self}")


@dataclass(frozen=True)
class QuadratureSpec:
    """Panel layout and tolerances for the singular curvature integrals.

    endpoint_exponent records the (1 -+ z)^alpha vanishing strength at each
    endpoint; panels are graded geometrically toward an endpoint with
    positive exponent.  finite_part_radius is the half-width of the
    analytic-subtraction window around interior simple zeros.
    """

    panel_count: int = 8
    points_per_panel: int = 64
    endpoint_exponent: tuple[float, float] = (0.0, 0.0)
    finite_part_radius: float = 0.05
    abs_tol: float = 1e-9
    rel_tol: float = 1e-9

    def __post_init__(self):
        if self.panel_count < 1 or self.points_per_panel < 2:
            raise DomainError("panel_count >= 1 and points_per_panel >= 2 required")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("tolerances must be positive")
        if not 0 < self.finite_part_radius < 1:
            raise DomainError("finite_part_radius must lie in (0, 1)")

    def refined(self) -> "QuadratureSpec":
        """Spec with doubled panel count (the convergence-check partner)."""
        return replace(self, panel_count=2 * self.panel_count)


def _as_array(z):
    arr = np.asarray(z, dtype=float)
    return arr, arr.ndim == 0


@lru_cache(maxsize=128)
def _gauss_cached(npts: int):
    x, w = npleg.leggauss(npts)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(npts: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    if npts < 1:
        raise DomainError("need at least one quadrature point")
    return _gauss_cached(npts)


def panel_edges(a: float, b: float, n_panels: int,
                grade_left: int = 0, grade_right: int = 0) -> np.ndarray:
    """Panel edges on [a, b], optionally dyadically graded toward an endpoint.

    grade_* extra levels halve the first/last panel repeatedly; integrands
    vanishing or steep at an endpoint get resolved without a substitution.
    """
    edges = np.linspace(a, b, n_panels + 1)
    for _ in range(grade_left):
        edges = np.insert(edges, 1, (edges[0] + edges[1]) / 2.0)
    for _ in range(grade_right):
        edges = np.insert(edges, -1, (edges[-2] + edges[-1]) / 2.0)
    return edges


def panel_rule(a: float, b: float, spec: QuadratureSpec,
               extra_edges=()) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [a, b] following a QuadratureSpec."""
    grade_l = 2 if spec.endpoint_exponent[0] > 0 else 0
    grade_r = 2 if spec.endpoint_exponent[1] > 0 else 0
    edges = panel_edges(a, b, spec.panel_count, grade_l, grade_r)
    if len(extra_edges):
        edges = np.unique(np.concatenate([edges, np.asarray(extra_edges, dtype=float)]))
    x0, w0 = gauss_legendre(spec.points_per_panel)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = (hi - lo) / 2.0
        xs.append(half * x0 + (hi + lo) / 2.0)
        ws.append(half * w0)
    return np.concatenate(xs), np.concatenate(ws)


def _pmm(m: int, z: np.ndarray) -> np.ndarray:
    """P_m^m(z) = (-1)^m (2m-1)!! (1-z^2)^{m/2}, built as a running product."""
    out = np.ones_like(z)
    if m == 0:
        return out
    s = np.sqrt(np.maximum(0.0, (1.0 - z) * (1.0 + z)))
    for k in range(1, m + 1):
        out *= -(2 * k - 1) * s
    return out


def _eval_p(n: int, m: int, z: np.ndarray) -> np.ndarray:
    pmm = _pmm(m, z)
    if n == m:
        return pmm
    pm1 = z * (2 * m + 1) * pmm
    if n == m + 1:
        return pm1
    for l in range(m + 2, n + 1):
        pmm, pm1 = pm1, ((2 * l - 1) * z * pm1 - (l + m - 1) * pmm) / (l - m)
    return pm1


def legendre_p(idx: LegendreIndex, z):
    """Associated Legendre polynomial P_n^m(z), Condon-Shortley phase included."""
    if idx.m > idx.n:
        raise DomainError(f"first-kind evaluation needs m <= n, got {idx}")
    arr, scalar = _as_array(z)
    if np.any(np.abs(arr) > 1.0 + 1e-14):
        raise DomainError("z must lie in [-1, 1]")
    out = _eval_p(idx.n, idx.m, np.clip(arr, -1.0, 1.0))
    return float(out) if scalar else out


def legendre_p_derivative(idx: LegendreIndex, z):
    """dP_n^m/dz on the open interval, via (1-z^2) P' = (n+m) P_{n-1}^m - n z P_n^m."""
    if idx.m > idx.n:
        raise DomainError(f"first-kind evaluation needs m <= n, got {idx}")
    arr, scalar = _as_array(z)
    if np.any(np.abs(arr) >= 1.0):
        raise DomainError("derivative evaluation needs |z| < 1")
    n, m = idx.n, idx.m
    pn = _eval_p(n, m, arr)
    pnm1 = _eval_p(n - 1, m, arr) if n - 1 >= m else np.zeros_like(arr)
    out = ((n + m) * pnm1 - n * arr * pn) / ((1.0 - arr) * (1.0 + arr))
    return float(out) if scalar else out


@lru_cache(maxsize=256)
def _tilde_coeffs(n: int, m: int) -> tuple[float, ...]:
    """Coefficients c_k of the finite sum, in the variable t = (1-z)/2.

    Binomial ratios are assembled in log space; for the small k, n, m in play
    the signed magnitudes stay comfortably inside double range.
    """
    coeffs = []
    for k in range(n + 1):
        lg = (
            math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
            + math.lgamma(n + k + 1) - math.lgamma(k + 1) - math.lgamma(n + 1)
            - (math.lgamma(m + k + 1) - math.lgamma(k + 1) - math.lgamma(m + 1))
        )
        coeffs.append((-1.0) ** k * math.exp(lg))
    return tuple(coeffs)


def _tilde_sum(n: int, m: int, t: np.ndarray, derivative: bool = False) -> np.ndarray:
    c = _tilde_coeffs(n, m)
    acc = np.zeros_like(t)
    if derivative:
        for k in range(len(c) - 1, 0, -1):
            acc = acc * t + k * c[k]
    else:
        for k in range(len(c) - 1, -1, -1):
            acc = acc * t + c[k]
    return acc


def legendre_p_tilde(idx: LegendreIndex, z):
    """Second-kind companion: ((1-z)/(1+z))^{m/2} times a finite sum in (1-z)/2.

    Solves the same Legendre ODE as P_n^m; bounded on the sphere minus the
    south pole, which it needs to be only when the order exceeds the degree.
    """
    n, m = idx.n, idx.m
    arr, scalar = _as_array(z)
    if np.any(arr > 1.0 + 1e-14) or np.any(arr < -1.0 - 1e-14):
        raise DomainError("z must lie in [-1, 1]")
    if m >= 1 and np.any(arr <= -1.0 + 1e-15):
        raise PoleError("second-kind function has a pole at z = -1 for m >= 1")
    t = (1.0 - arr) / 2.0
    w = np.power((1.0 - arr) / (1.0 + arr), m / 2.0)
    out = w * _tilde_sum(n, m, t)
    return float(out) if scalar else out


def legendre_p_tilde_derivative(idx: LegendreIndex, z):
    """d/dz of the second-kind companion (termwise, exact)."""
    n, m = idx.n, idx.m
    arr, scalar = _as_array(z)
    if np.any(np.abs(arr) >= 1.0):
        raise DomainError("derivative evaluation needs |z| < 1")
    t = (1.0 - arr) / 2.0
    w = np.power((1.0 - arr) / (1.0 + arr), m / 2.0)
    s = _tilde_sum(n, m, t)
    ds_dz = -0.5 * _tilde_sum(n, m, t, derivative=True)
    # d/dz [w] = -m / ((1-z^2)) * w
    dw_dz = -m / ((1.0 - arr) * (1.0 + arr)) * w
    out = dw_dz * s + w * ds_dz
    return float(out) if scalar else out


def legendre_norm(idx: LegendreIndex) -> float:
    """Squared L2([-1,1], dz) norm of P_n^m: 2 (n+m)! / ((2n+1) (n-m)!)."""
    if idx.m > idx.n:
        raise DomainError(f"norm defined for m <= n, got {idx}")
    n, m = idx.n, idx.m
    return math.exp(math.log(2.0) - math.log(2 * n + 1)
                    + math.lgamma(n + m + 1) - math.lgamma(n - m + 1))


def legendre_zeros(idx: LegendreIndex) -> np.ndarray:
    """Interior zeros of P_n^m in (-1, 1): the n-m simple zeros of its body."""
    if idx.m > idx.n:
        raise DomainError(f"first-kind zeros need m <= n, got {idx}")
    n, m = idx.n, idx.m
    if n == m:
        return np.array([])
    body = _exact.assoc_legendre_body(n, m)
    roots = np.roots([float(c) for c in reversed(body)])
    roots = np.sort(roots[np.abs(roots.imag) < 1e-9].real)
    roots = roots[(roots > -1.0) & (roots < 1.0)]
    # Newton polish on the full function
    for _ in range(3):
        f = _eval_p(n, m, roots)
        df = legendre_p_derivative(idx, roots)
        roots = roots - f / df
    return roots


def legendre_tilde_zeros(idx: LegendreIndex) -> np.ndarray:
    """Interior zeros of the second-kind companion (zeros of its finite sum)."""
    n, m = idx.n, idx.m
    if n == 0:
        return np.array([])
    c = _tilde_coeffs(n, m)
    roots_t = np.roots(list(reversed(c)))
    roots_t = roots_t[np.abs(roots_t.imag) < 1e-9].real
    z = np.sort(1.0 - 2.0 * roots_t)
    z = z[(z > -1.0) & (z < 1.0)]
    for _ in range(3):
        f = legendre_p_tilde(idx, z)
        df = legendre_p_tilde_derivative(idx, z)
        z = z - f / df
    return z
