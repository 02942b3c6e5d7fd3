"""Mode-wise inversion of the linearized operator.

Each Fourier mode phi(z) of a component solves

    (1-z^2) phi'' - 2z phi' - l^2/(1-z^2) phi + nu(nu+1) phi = psi(z)

with nu = 1 for component 1 and nu = n for component 2.  Two independent
routes are provided:

* ``solve_mode``: expansion of psi in the bounded eigenfunctions P_k^l and a
  diagonal solve (the production path; boundedness is built into the basis).
* ``solve_mode_variation``: the variation-of-constants formula built on the
  homogeneous solution (P_nu^l when l <= nu, else the second-kind companion)
  with nested integrals from the boundedness-selecting limits (inner from
  +1, outer from -1) and antiderivatives glued across the simple interior
  zeros of the homogeneous solution.

The gluing: h(y) = inner(y)/((1-y^2) p(y)^2) has a double pole at each simple
zero z_i of p.  Because p solves the mode ODE, the Laurent expansion there is
c_i/(y-z_i)^2 + d_i/(y-z_i) + regular with

    c_i = inner(z_i) / ((1-z_i^2) p'(z_i)^2),
    d_i = inner'(z_i) / ((1-z_i^2) p'(z_i)^2),

and taking the closed-form antiderivative -c_i/(y-z_i) + d_i log|y-z_i| with
the same constant on both sides makes p(z) * A(z) extend smoothly.  (When
inner' = -p*psi, as in a mode solve, d_i = 0.)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegeneracyError, DomainError, ResolutionError, ResonanceError
from .legendre import (
    LegendreIndex,
    QuadratureSpec,
    _eval_p,
    gauss_legendre,
    legendre_norm,
    legendre_p_derivative,
    legendre_p_tilde,
    legendre_p_tilde_derivative,
    legendre_tilde_zeros,
    legendre_zeros,
)

__all__ = [
    "ModeSolveRequest",
    "solve_mode",
    "solve_mode_variation",
    "glued_antiderivative",
    "CumulativeFromOne",
]


@dataclass
class ModeSolveRequest:
    """One Fourier-mode inversion problem.

    n fixes the component-2 eigenlevel; component 1 always sits at level 1.
    rhs is the mode coefficient psi(z), callable on arrays.
    """

    n: int
    l: int
    rhs: Callable[[np.ndarray], np.ndarray]
    component: int = 2

    def __post_init__(self):
        if self.component not in (1, 2):
            raise DomainError("component must be 1 or 2")
        if self.l < 0 or self.n < 1:
            raise DomainError("need l >= 0 and n >= 1")

    @property
    def eigen_level(self) -> int:
        return 1 if self.component == 1 else self.n

    @property
    def resonant(self) -> bool:
        return self.l <= self.eigen_level


class CumulativeFromOne:
    """I(y) = integral_y^1 f, assembled right to left.

    Accumulating from +1 keeps I(y) free of cancellation where it vanishes,
    which the singular middle kernels divide by.
    """

    def __init__(self, f: Callable, edges: np.ndarray, points: int):
        self.f = f
        self.edges = np.asarray(edges, dtype=float)
        self._x0, self._w0 = gauss_legendre(points)
        vals = np.array([self._segment(lo, hi)
                         for lo, hi in zip(self.edges[:-1], self.edges[1:])])
        suffix = np.zeros(len(self.edges))
        suffix[:-1] = np.cumsum(vals[::-1])[::-1]
        self.suffix = suffix  # suffix[k] = integral_{edges[k]}^{1} f

    def _segment(self, lo: float, hi: float) -> float:
        half = (hi - lo) / 2.0
        x = half * self._x0 + (hi + lo) / 2.0
        return float(half * (self._w0 @ self.f(x)))

    def __call__(self, y):
        ys = np.atleast_1d(np.asarray(y, dtype=float))
        idx = np.clip(np.searchsorted(self.edges, ys, side="right") - 1,
                      0, len(self.edges) - 2)
        hi = self.edges[idx + 1]
        half = (hi - ys) / 2.0
        nodes = half[:, None] * self._x0[None, :] + ((hi + ys) / 2.0)[:, None]
        vals = np.asarray(self.f(nodes.ravel()), dtype=float).reshape(nodes.shape)
        out = self.suffix[idx + 1] + half * (vals @ self._w0)
        return out if np.ndim(y) else float(out[0])


def _window_radius(zeros: np.ndarray, spec: QuadratureSpec) -> float:
    """Analytic-subtraction half-width: spec value capped by the zero gaps."""
    if len(zeros) == 0:
        return spec.finite_part_radius
    pts = np.concatenate([[-1.0], np.sort(zeros), [1.0]])
    min_gap = np.min(np.diff(pts))
    return min(spec.finite_part_radius, 0.1 * min_gap) if min_gap < 10 * spec.finite_part_radius \
        else spec.finite_part_radius


def glued_antiderivative(p: Callable, dp: Callable, zeros, inner: Callable,
                         dinner: Callable, z, *, spec: QuadratureSpec = QuadratureSpec(),
                         regular_part: Callable | None = None):
    """Glued antiderivative A(z), A(-1) = 0, of inner(y)/((1-y^2) p(y)^2).

    The Laurent parts at the simple zeros of p are integrated in closed form
    with a single global constant; the remainder is integrated numerically
    (or taken from ``regular_part`` when the caller knows it analytically).
    p(z) * A(z) then extends continuously and smoothly across every zero.

    Evaluation exactly at a zero is refused: A itself diverges there, only
    the product with p has a limit.
    """
    zeros = np.sort(np.atleast_1d(np.asarray(zeros, dtype=float)))
    zq = np.atleast_1d(np.asarray(z, dtype=float))
    scalar = np.ndim(z) == 0
    if np.any(np.abs(zq) > 1.0):
        raise DomainError("evaluation points must lie in [-1, 1]")
    for zi in zeros:
        if np.any(np.abs(zq - zi) < 1e-13):
            raise DomainError("cannot evaluate the antiderivative at a zero of p; "
                              "take the limit of the product p*A instead")

    pscale = float(np.max(np.abs(p(np.linspace(-0.95, 0.95, 65)))))
    dpz = np.array([float(dp(zi)) for zi in zeros])
    if np.any(np.abs(dpz) < 1e-8 * max(1.0, pscale)):
        raise DegeneracyError("double zero detected: |p'| below tolerance at an interior zero")

    c = np.array([float(inner(zi)) for zi in zeros]) / ((1.0 - zeros**2) * dpz**2)
    d = np.array([float(dinner(zi)) for zi in zeros]) / ((1.0 - zeros**2) * dpz**2)

    r = _window_radius(zeros, spec)

    def h_raw(y):
        y = np.asarray(y, dtype=float)
        val = inner(y) / ((1.0 - y**2) * p(y) ** 2)
        for zi, ci, di in zip(zeros, c, d):
            val = val - ci / (y - zi) ** 2 - di / (y - zi)
        return val

    if regular_part is not None:
        h_reg = regular_part
    elif len(zeros) == 0:
        h_reg = h_raw
    else:
        # Raw subtraction loses ~eps*|c|/dist^3 to the rounding of p near its
        # zero.  h_reg is smooth, so inside each window it is replaced by a
        # Chebyshev interpolant sampled at first-kind nodes, which keep a
        # safe ~0.1 r distance from the zero.
        deg = 15
        k = np.arange(deg + 1)
        cheb_nodes = np.cos(np.pi * (2 * k + 1) / (2 * (deg + 1)))
        models = []
        for zi in zeros:
            ys = zi + r * cheb_nodes
            coef = np.polynomial.chebyshev.chebfit(cheb_nodes, h_raw(ys), deg)
            models.append(coef)

        def h_reg(y):
            y = np.asarray(y, dtype=float)
            val = h_raw(y)
            for zi, coef in zip(zeros, models):
                mask = np.abs(y - zi) <= r
                if np.any(mask):
                    val[mask] = np.polynomial.chebyshev.chebval((y[mask] - zi) / r, coef)
            return val

    edges = [np.linspace(-1.0, 1.0, spec.panel_count + 1), zeros]
    for zi in zeros:
        edges.append([zi - r, zi + r])
    edges = np.unique(np.clip(np.concatenate([np.asarray(e, dtype=float) for e in edges]),
                              -1.0, 1.0))

    x_hi, w_hi = gauss_legendre(spec.points_per_panel)

    def segment(lo, hi):
        half = (hi - lo) / 2.0
        return float(half * (w_hi @ h_reg(half * x_hi + (hi + lo) / 2.0)))

    seg_vals = np.array([segment(lo, hi) for lo, hi in zip(edges[:-1], edges[1:])])
    # cumulative values of the regular antiderivative at the edges, anchored at
    # an interior edge: partial segments are always taken from the anchor-side
    # edge of the query's panel, so an endpoint-divergent regular part (the
    # antiderivative is then defined only up to a constant) never leaks into
    # interior differences
    anchor = int(np.argmin(np.abs(edges)))
    anchor = min(max(anchor, 1), len(edges) - 2)
    at_edges = np.empty(len(edges))
    at_edges[anchor] = 0.0
    for k in range(anchor + 1, len(edges)):
        at_edges[k] = at_edges[k - 1] + seg_vals[k - 1]
    for k in range(anchor - 1, -1, -1):
        at_edges[k] = at_edges[k + 1] - seg_vals[k]

    def laurent(y):
        val = np.zeros_like(np.asarray(y, dtype=float))
        for zi, ci, di in zip(zeros, c, d):
            val = val - ci / (y - zi) + di * np.log(np.abs(y - zi))
        return val

    base = (float(laurent(np.array([-1.0]))[0]) if len(zeros) else 0.0) + at_edges[0]

    idx = np.clip(np.searchsorted(edges, zq, side="right") - 1, 0, len(edges) - 2)
    lo = np.where(idx >= anchor, edges[idx], zq)
    hi = np.where(idx >= anchor, zq, edges[idx + 1])
    sign = np.where(idx >= anchor, 1.0, -1.0)
    half = (hi - lo) / 2.0
    nodes = half[:, None] * x_hi[None, :] + ((hi + lo) / 2.0)[:, None]
    vals = np.asarray(h_reg(nodes.ravel()), dtype=float).reshape(nodes.shape)
    out = sign * half * (vals @ w_hi)
    out += np.where(idx >= anchor, at_edges[idx], at_edges[idx + 1])
    out += laurent(zq) - base
    return float(out[0]) if scalar else out


def _homogeneous(req: ModeSolveRequest):
    """(p, dp, zeros) for the bounded homogeneous solution of the mode ODE."""
    nu, l = req.eigen_level, req.l
    idx = LegendreIndex(nu, l)
    if req.resonant:
        return ((lambda y: _eval_p(nu, l, np.asarray(y, dtype=float))),
                (lambda y: legendre_p_derivative(idx, y)),
                legendre_zeros(idx))
    return ((lambda y: legendre_p_tilde(idx, y)),
            (lambda y: legendre_p_tilde_derivative(idx, y)),
            legendre_tilde_zeros(idx))


def solve_mode(req: ModeSolveRequest, z, *, n_modes: int = 80,
               ortho_tol: float = 1e-8):
    """Bounded solution of the mode ODE via the eigenfunction expansion.

    Resonant modes (l <= eigenlevel) require the right-hand side orthogonal
    to P_nu^l and return the solution orthogonal to it; the resonant
    coefficient is dropped, which is exactly that normalization.
    """
    nu, l = req.eigen_level, req.l
    lam = nu * (nu + 1.0)
    k_max = l + n_modes
    ng = k_max + 40
    zg, wg = gauss_legendre(ng)
    f = np.asarray(req.rhs(zg), dtype=float)
    rhs_norm = float(np.sqrt(wg @ f**2))

    coeffs = {}
    for k in range(l, k_max + 1):
        pk = _eval_p(k, l, zg)
        nk = legendre_norm(LegendreIndex(k, l))
        coeffs[k] = float(wg @ (f * pk)) / nk

    if req.resonant:
        proj = coeffs[nu] * legendre_norm(LegendreIndex(nu, l))  # = <rhs, P_nu^l>
        bound = ortho_tol * max(rhs_norm, 1e-300) * np.sqrt(legendre_norm(LegendreIndex(nu, l)))
        if abs(proj) > bound:
            raise ResonanceError(
                f"rhs is not orthogonal to the resonant mode P_{nu}^{l}: <rhs, P> = {proj:.3e}",
                projection=proj)
        coeffs.pop(nu)

    tail = sum(coeffs[k] ** 2 * legendre_norm(LegendreIndex(k, l))
               for k in range(k_max - 4, k_max + 1) if k in coeffs)
    total = sum(coeffs[k] ** 2 * legendre_norm(LegendreIndex(k, l)) for k in coeffs)
    if total > 0 and tail > 1e-16 * total:
        raise ResolutionError("rhs expansion has not converged at the mode cutoff; "
                              "raise n_modes")

    zq = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.zeros_like(zq)
    for k, ck in coeffs.items():
        if ck != 0.0:
            out += ck / (lam - k * (k + 1.0)) * _eval_p(k, l, zq)
    return float(out[0]) if np.ndim(z) == 0 else out


def solve_mode_variation(req: ModeSolveRequest, z, *,
                         spec: QuadratureSpec = QuadratureSpec()):
    """Variation-of-constants route to the same bounded solution.

    Inner integral from +1, outer antiderivative glued from -1; the free
    constant of a resonant solve is fixed by orthogonality to the
    homogeneous solution, non-resonant solves have none.
    """
    p, dp, zeros = _homogeneous(req)
    zq = np.atleast_1d(np.asarray(z, dtype=float))

    edges = np.unique(np.concatenate([np.linspace(-1.0, 1.0, spec.panel_count + 1), zeros]))
    inner = CumulativeFromOne(lambda y: p(y) * req.rhs(y), edges, spec.points_per_panel)
    dinner = lambda y: -p(y) * req.rhs(y)

    if req.resonant:
        nk = legendre_norm(LegendreIndex(req.eigen_level, req.l))
        proj = inner(-1.0)  # = <P, rhs> over [-1, 1]
        xg, wg = gauss_legendre(256)
        rhs_norm = float(np.sqrt(wg @ np.asarray(req.rhs(xg), dtype=float) ** 2))
        if abs(proj) > 1e-8 * np.sqrt(nk) * max(rhs_norm, 1e-300):
            raise ResonanceError(
                f"rhs is not orthogonal to the resonant homogeneous solution: "
                f"<P, rhs> = {proj:.3e}", projection=proj)

    near = np.zeros(zq.shape, dtype=bool)
    limit_val = np.zeros_like(zq)
    for zi in zeros:
        mask = np.abs(zq - zi) < 1e-12
        if np.any(mask):
            ci = float(inner(zi)) / ((1.0 - zi**2) * float(dp(zi)) ** 2)
            near |= mask
            limit_val[mask] = ci * float(dp(zi))

    safe = ~near
    a_vals = np.zeros_like(zq)
    if np.any(safe):
        a_vals[safe] = glued_antiderivative(p, dp, zeros, inner, dinner, zq[safe], spec=spec)

    out = np.empty_like(zq)
    if req.resonant:
        # constant from <phi, P> = 0: C = int P^2 A / int P^2
        xq, wq = _quad_with_zero_edges(zeros, spec)
        a_q = glued_antiderivative(p, dp, zeros, inner, dinner, xq, spec=spec)
        p2 = p(xq) ** 2
        const = float((wq @ (p2 * a_q)) / (wq @ p2))
        out[safe] = p(zq[safe]) * (const - a_vals[safe])
        # at a zero only the Laurent part of -A survives the product: c_i p'(z_i)
        out[near] = limit_val[near]
    else:
        out[safe] = -p(zq[safe]) * a_vals[safe]
        out[near] = limit_val[near]
    return float(out[0]) if np.ndim(z) == 0 else out


def _quad_with_zero_edges(zeros, spec: QuadratureSpec):
    """Composite rule on [-1, 1] with panel edges at the interior zeros."""
    edges = np.unique(np.concatenate([np.linspace(-1.0, 1.0, spec.panel_count + 1),
                                      zeros]))
    x0, w0 = gauss_legendre(spec.points_per_panel)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = (hi - lo) / 2.0
        xs.append(half * x0 + (hi + lo) / 2.0)
        ws.append(half * w0)
    return np.concatenate(xs), np.concatenate(ws)
