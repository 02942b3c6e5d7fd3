"""Exact rational polynomial arithmetic.

The curvature integrals divide inner antiderivatives by high-order vanishing
factors ((1-y^2)^{m+1}, (1-y)^{2m+1}).  Done in floating point near the
endpoints that division is catastrophic; done here over ``Fraction`` it is
exact, and the zero remainders double as structural checks.  Results are
handed back to floating point as Chebyshev series, which evaluate stably on
[-1, 1] (power-basis coefficients of degree ~100 polynomials do not).

Polynomials are lists of ``Fraction`` power-basis coefficients, low degree
first.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from numpy.polynomial import chebyshev

Poly = list


def padd(a: Poly, b: Poly) -> Poly:
    out = [Fraction(0)] * max(len(a), len(b))
    for i, c in enumerate(a):
        out[i] += c
    for i, c in enumerate(b):
        out[i] += c
    return out


def pscale(a: Poly, s) -> Poly:
    s = Fraction(s)
    return [c * s for c in a]


def pmul(a: Poly, b: Poly) -> Poly:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return out


def ppow(a: Poly, k: int) -> Poly:
    out = [Fraction(1)]
    for _ in range(k):
        out = pmul(out, a)
    return out


def pderiv(a: Poly) -> Poly:
    return [a[i] * i for i in range(1, len(a))] or [Fraction(0)]


def pantider(a: Poly) -> Poly:
    """Antiderivative with zero constant term."""
    return [Fraction(0)] + [a[i] / (i + 1) for i in range(len(a))]


def peval(a: Poly, x) -> Fraction:
    x = Fraction(x)
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def pdivmod(p: Poly, d: Poly) -> tuple[Poly, Poly]:
    """Long division p = q*d + r, exact over the rationals."""
    rem = list(p)
    while rem and rem[-1] == 0 and len(rem) > 1:
        rem.pop()
    q = [Fraction(0)] * max(1, len(rem) - len(d) + 1)
    lead = d[-1]
    while len(rem) >= len(d) and any(rem):
        k = len(rem) - len(d)
        c = rem[-1] / lead
        q[k] = c
        for i in range(len(d)):
            rem[k + i] -= c * d[i]
        while len(rem) > 1 and rem[-1] == 0:
            rem.pop()
        if not any(rem):
            rem = [Fraction(0)]
            break
    return q, rem


def pdiv_exact(p: Poly, d: Poly) -> Poly:
    q, r = pdivmod(p, d)
    if any(r):
        raise ArithmeticError("polynomial division left a nonzero remainder")
    return q


def defint(p: Poly, a, b) -> Fraction:
    anti = pantider(p)
    return peval(anti, b) - peval(anti, a)


def legendre_power(n: int) -> Poly:
    """Power-basis coefficients of the Legendre polynomial P_n, exact."""
    if n == 0:
        return [Fraction(1)]
    prev, cur = [Fraction(1)], [Fraction(0), Fraction(1)]
    for k in range(2, n + 1):
        nxt = padd(
            pscale([Fraction(0)] + cur, Fraction(2 * k - 1, k)),
            pscale(prev, Fraction(-(k - 1), k)),
        )
        prev, cur = cur, nxt
    return cur


def assoc_legendre_body(n: int, m: int) -> Poly:
    """S with P_n^m(z) = (1-z^2)^{m/2} S(z); S = (-1)^m d^m P_n / dz^m."""
    p = legendre_power(n)
    for _ in range(m):
        p = pderiv(p)
    return pscale(p, (-1) ** m)


def to_cheb(p: Poly) -> np.ndarray:
    """Stable float Chebyshev series of an exact polynomial.

    Interpolates exact Fraction evaluations at first-kind Chebyshev points;
    for a degree-d polynomial on d+1 nodes this is the polynomial itself up
    to rounding of the nodal values.
    """
    deg = len(p) - 1
    while deg > 0 and p[deg] == 0:
        deg -= 1
    if deg == 0:
        return np.array([float(p[0])])

    def f(xs):
        return np.array([float(peval(p, Fraction(float(x)))) for x in np.atleast_1d(xs)])

    return chebyshev.chebinterpolate(f, deg)
