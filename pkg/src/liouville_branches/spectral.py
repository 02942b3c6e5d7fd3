"""Eigenstructure of the linearized operator on S^2 and the symmetry classes.

Coordinates (theta, z) with area element dtheta dz.  The scalar eigenvalues
are lambda_l = l(l+1) with eigenbasis P_l^0, P_l^j cos(j theta),
P_l^j sin(j theta).  The linearization at the trivial solution acts
diagonally: component 1 by 2 - l(l+1), component 2 by K(mu) - l(l+1) where
K(mu) = 2(2-mu)/(2+mu).

A symmetry class (n, m) keeps, for m >= 1, the cos-only modes with
  component 1: j in {0, 2m, 4m, ...}, l even, l >= j
  component 2: j in {m, 3m, 5m, ...}, l = n (mod 2), l >= j
which is what invariance of the pair under sigma: z -> -z,
rho_m: theta -> theta + pi/m and tau_m: theta -> -theta + pi/m forces.
m = 0 is the z-only (radial) class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, NamedTuple

import numpy as np

from .errors import AmbiguityError, DomainError, PoleError
from .legendre import (
    LegendreIndex,
    _eval_p,
    gauss_legendre,
    legendre_norm,
)

__all__ = [
    "Mode",
    "SymmetryClass",
    "ModeBasis",
    "SphereField",
    "SphereTransform",
    "mu_n",
    "match_eigen_level",
    "coupling",
    "kernel_basis",
    "restricted_kernel_basis",
    "linearized_apply",
    "morse_index",
]


class Mode(NamedTuple):
    component: int  # 1 or 2
    l: int
    j: int
    trig: str = "cos"


def mu_n(n: int) -> float:
    """n-th bifurcation value -2(n^2+n-2)/(n^2+n+2) of the trivial branch."""
    if n < 1:
        raise DomainError("eigenvalue index n must be >= 1")
    return -2.0 * (n * n + n - 2) / (n * n + n + 2)


def coupling(mu: float) -> float:
    """K(mu) = 2(2-mu)/(2+mu), the component-2 spectral parameter."""
    if mu == -2.0:
        raise PoleError("mu = -2 is a pole of the coupling coefficient")
    return 2.0 * (2.0 - mu) / (2.0 + mu)


def match_eigen_level(mu: float, rtol: float = 1e-12) -> int | None:
    """Return n with mu = mu_n within relative tolerance, else None."""
    if not -2.0 < mu < 2.0:
        raise DomainError("mu must lie in (-2, 2)")
    if mu > 1e-12:
        return None
    k = coupling(mu)
    n_star = int(round((-1.0 + math.sqrt(1.0 + 4.0 * k)) / 2.0))
    for n in (n_star - 1, n_star, n_star + 1):
        if n >= 1 and abs(mu - mu_n(n)) <= rtol * max(1.0, abs(mu_n(n))):
            return n
    return None


@dataclass(frozen=True)
class SymmetryClass:
    """Invariance class X_{n,m}; m = 0 is the z-only class."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("bifurcation level n must be >= 1")
        if self.m < 0:
            raise DomainError("angular symmetry order m must be >= 0")

    def admissible(self, component: int, l: int, j: int) -> bool:
        if component not in (1, 2):
            raise DomainError("component must be 1 or 2")
        if l < 0 or j < 0 or j > l:
            return False
        if self.m == 0:
            if j != 0:
                return False
            return l % 2 == 0 if component == 1 else l % 2 == self.n % 2
        if component == 1:
            return j % (2 * self.m) == 0 and l % 2 == 0
        return j % self.m == 0 and (j // self.m) % 2 == 1 and l % 2 == self.n % 2

    def modes(self, component: int, max_degree: int) -> list[tuple[int, int]]:
        """Admissible (l, j) pairs with l <= max_degree, ordered j then l."""
        out = []
        for j in range(0, max_degree + 1):
            for l in range(j, max_degree + 1):
                if self.admissible(component, l, j):
                    out.append((l, j))
        out.sort(key=lambda lj: (lj[1], lj[0]))
        return out


class ModeBasis:
    """Ordered admissible modes of a class up to a truncation degree."""

    def __init__(self, sym_class: SymmetryClass, truncation: int):
        if truncation < 0:
            raise DomainError("truncation must be >= 0")
        self.sym_class = sym_class
        self.truncation = truncation
        m1 = [Mode(1, l, j) for (l, j) in sym_class.modes(1, truncation)]
        m2 = [Mode(2, l, j) for (l, j) in sym_class.modes(2, truncation)]
        self.modes: tuple[Mode, ...] = tuple(m1 + m2)
        self.n1 = len(m1)
        self.index = {mode: i for i, mode in enumerate(self.modes)}
        # L2(S^2) norm^2 of each basis function: (2pi or pi) * ||P_l^j||^2
        self.weights = np.array(
            [(2.0 * np.pi if mode.j == 0 else np.pi) * legendre_norm(LegendreIndex(mode.l, mode.j))
             for mode in self.modes]
        )
        self.lap = np.array([-mode.l * (mode.l + 1.0) for mode in self.modes])

    def __len__(self):
        return len(self.modes)

    def __eq__(self, other):
        return (isinstance(other, ModeBasis)
                and other.sym_class == self.sym_class
                and other.truncation == self.truncation)

    def __hash__(self):
        return hash((self.sym_class, self.truncation))


@lru_cache(maxsize=64)
def _basis_cached(sym_class: SymmetryClass, truncation: int) -> ModeBasis:
    return ModeBasis(sym_class, truncation)


def make_basis(sym_class: SymmetryClass, truncation: int) -> ModeBasis:
    return _basis_cached(sym_class, truncation)


class SphereField:
    """Pair of scalar fields on S^2 stored as coefficients on admissible modes."""

    __slots__ = ("basis", "vec")

    def __init__(self, basis: ModeBasis, vec: np.ndarray):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (len(basis),):
            raise DomainError(f"coefficient vector must have length {len(basis)}")
        vec = vec.copy()
        vec.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "vec", vec)

    def __setattr__(self, *_):
        raise AttributeError("SphereField is immutable")

    @property
    def sym_class(self) -> SymmetryClass:
        return self.basis.sym_class

    @property
    def truncation(self) -> int:
        return self.basis.truncation

    @classmethod
    def zero(cls, basis: ModeBasis) -> "SphereField":
        return cls(basis, np.zeros(len(basis)))

    @classmethod
    def from_coefficients(cls, sym_class: SymmetryClass, truncation: int,
                          coeffs1: Mapping[tuple[int, int], float],
                          coeffs2: Mapping[tuple[int, int], float]) -> "SphereField":
        basis = make_basis(sym_class, truncation)
        vec = np.zeros(len(basis))
        for comp, coeffs in ((1, coeffs1), (2, coeffs2)):
            for (l, j), val in coeffs.items():
                mode = Mode(comp, l, j)
                if mode not in basis.index:
                    raise DomainError(
                        f"mode (component={comp}, l={l}, j={j}) is not admissible "
                        f"for class (n={sym_class.n}, m={sym_class.m}) at truncation {truncation}")
                vec[basis.index[mode]] = val
        return cls(basis, vec)

    def coefficient(self, component: int, l: int, j: int) -> float:
        mode = Mode(component, l, j)
        i = self.basis.index.get(mode)
        return 0.0 if i is None else float(self.vec[i])

    def _coeff_map(self, component: int) -> dict[tuple[int, int], float]:
        return {(mode.l, mode.j): float(self.vec[i])
                for i, mode in enumerate(self.basis.modes) if mode.component == component}

    @property
    def coeffs1(self) -> dict[tuple[int, int], float]:
        return self._coeff_map(1)

    @property
    def coeffs2(self) -> dict[tuple[int, int], float]:
        return self._coeff_map(2)

    def l2_norm(self) -> float:
        """L2(S^2) norm of the pair (phi_1, phi_2)."""
        return math.sqrt(float(np.sum(self.basis.weights * self.vec**2)))

    def evaluate(self, theta, z) -> tuple[np.ndarray, np.ndarray]:
        """Tensor evaluation: returns (phi1, phi2), each shape (len(z), len(theta))."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = [np.zeros((z.size, theta.size)), np.zeros((z.size, theta.size))]
        for i, mode in enumerate(self.basis.modes):
            a = self.vec[i]
            if a == 0.0:
                continue
            pz = _eval_p(mode.l, mode.j, z)
            ang = np.cos(mode.j * theta) if mode.trig == "cos" else np.sin(mode.j * theta)
            out[mode.component - 1] += a * np.outer(pz, ang)
        return out[0], out[1]

    def __add__(self, other: "SphereField") -> "SphereField":
        if other.basis != self.basis:
            raise DomainError("fields live on different bases")
        return SphereField(self.basis, self.vec + other.vec)

    def __sub__(self, other: "SphereField") -> "SphereField":
        if other.basis != self.basis:
            raise DomainError("fields live on different bases")
        return SphereField(self.basis, self.vec - other.vec)

    def __mul__(self, s: float) -> "SphereField":
        return SphereField(self.basis, self.vec * float(s))

    __rmul__ = __mul__


def default_grid_sizes(basis: ModeBasis) -> tuple[int, int]:
    """(n_z, n_theta) large enough for dealiased cubic products.

    n_z >= 2L+2 Gauss-Legendre nodes; n_theta a multiple of 4m (exact grid
    action of rho_m and tau_m) and >= 4 max_j + 8.
    """
    L = basis.truncation
    n_z = 2 * L + 2
    max_j = max((mode.j for mode in basis.modes), default=0)
    step = 4 * basis.sym_class.m if basis.sym_class.m >= 1 else 4
    n_theta = max(4 * max_j + 8, 16)
    n_theta = ((n_theta + step - 1) // step) * step
    return n_z, n_theta


class SphereTransform:
    """Cached synthesis/analysis between coefficients and a tensor grid.

    Grid: Gauss-Legendre nodes in z times a uniform theta grid, so mode
    products up to the dealiasing margin are integrated exactly.
    """

    def __init__(self, basis: ModeBasis, n_z: int = 0, n_theta: int = 0):
        auto_z, auto_t = default_grid_sizes(basis)
        self.basis = basis
        self.n_z = n_z if n_z else auto_z
        self.n_theta = n_theta if n_theta else auto_t
        self.z, self.wz = gauss_legendre(self.n_z)
        self.theta = 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta
        self.wtheta = 2.0 * np.pi / self.n_theta

        npoints = self.n_z * self.n_theta
        M = len(basis)
        self.syn = np.zeros((M, npoints))
        self.ana = np.zeros((M, npoints))
        for i, mode in enumerate(basis.modes):
            pz = _eval_p(mode.l, mode.j, self.z)
            ang = np.cos(mode.j * self.theta)
            grid = np.outer(pz, ang)
            self.syn[i] = grid.ravel()
            w2 = basis.weights[i]
            self.ana[i] = (np.outer(self.wz * pz, np.full(self.n_theta, self.wtheta) * ang)
                           / w2).ravel()
        self.comp1 = np.array([m.component == 1 for m in basis.modes])
        self.comp2 = ~self.comp1

    def synthesize(self, vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Coefficients -> grid values (phi1, phi2), each (n_z, n_theta)."""
        f1 = (vec[self.comp1] @ self.syn[self.comp1]).reshape(self.n_z, self.n_theta)
        f2 = (vec[self.comp2] @ self.syn[self.comp2]).reshape(self.n_z, self.n_theta)
        return f1, f2

    def analyze(self, f1: np.ndarray, f2: np.ndarray) -> np.ndarray:
        """Grid values -> coefficients on the admissible modes (projection)."""
        vec = np.empty(len(self.basis))
        vec[self.comp1] = self.ana[self.comp1] @ f1.ravel()
        vec[self.comp2] = self.ana[self.comp2] @ f2.ravel()
        return vec

    def integrate(self, values: np.ndarray) -> float:
        """Integral over S^2 of grid values."""
        return float(self.wz @ values.sum(axis=1) * self.wtheta)


@lru_cache(maxsize=32)
def _transform_cached(sym_class: SymmetryClass, truncation: int,
                      n_z: int, n_theta: int) -> SphereTransform:
    return SphereTransform(make_basis(sym_class, truncation), n_z, n_theta)


def make_transform(basis: ModeBasis, n_z: int = 0, n_theta: int = 0) -> SphereTransform:
    return _transform_cached(basis.sym_class, basis.truncation, n_z, n_theta)


def kernel_basis(mu: float, rtol: float = 1e-12) -> list[Mode]:
    """Kernel of the linearization at (mu, 0, 0) as unrestricted mode labels.

    Away from the bifurcation values: the 3 component-1 modes of degree 1
    (scaling and translations).  At mu = mu_n: those plus the 2n+1
    component-2 modes of degree n, for 2n+4 in total.
    """
    if not -2.0 < mu < 2.0:
        raise DomainError("mu must lie in (-2, 2)")
    modes = [Mode(1, 1, 0, "cos"), Mode(1, 1, 1, "cos"), Mode(1, 1, 1, "sin")]
    n = match_eigen_level(mu, rtol)
    if n is not None:
        modes.append(Mode(2, n, 0, "cos"))
        for j in range(1, n + 1):
            modes.append(Mode(2, n, j, "cos"))
            modes.append(Mode(2, n, j, "sin"))
    return modes


def restricted_kernel_basis(sym_class: SymmetryClass) -> list[SphereField]:
    """Kernel elements at mu_n lying in the class, scanned mode by mode.

    One-dimensional exactly when m > n/3 (then only j = m survives); the
    radial class m = 0 is always one-dimensional.
    """
    n = sym_class.n
    fields = []
    for mode in kernel_basis(mu_n(n)):
        if mode.trig == "sin":
            continue  # sin modes are tau_m-antisymmetric the wrong way around
        if sym_class.admissible(mode.component, mode.l, mode.j):
            coeffs = {(mode.l, mode.j): 1.0}
            if mode.component == 1:
                fields.append(SphereField.from_coefficients(sym_class, n, coeffs, {}))
            else:
                fields.append(SphereField.from_coefficients(sym_class, n, {}, coeffs))
    return fields


def linearized_apply(mu: float, field: SphereField) -> SphereField:
    """Diagonal action of the linearization at the trivial solution."""
    k = coupling(mu)
    basis = field.basis
    factors = np.empty(len(basis))
    for i, mode in enumerate(basis.modes):
        lam = mode.l * (mode.l + 1.0)
        factors[i] = (2.0 - lam) if mode.component == 1 else (k - lam)
    return SphereField(basis, field.vec * factors)


def morse_index(mu: float, sym_class: SymmetryClass, truncation: int,
                crossing_tol: float = 1e-9) -> int:
    """Count of unstable directions of the trivial solution within the class."""
    if not -2.0 < mu < 2.0:
        raise DomainError("mu must lie in (-2, 2)")
    k = coupling(mu)
    count = 0
    for comp in (1, 2):
        for (l, j) in sym_class.modes(comp, truncation):
            factor = (2.0 - l * (l + 1.0)) if comp == 1 else (k - l * (l + 1.0))
            if abs(factor) < crossing_tol:
                raise AmbiguityError(
                    f"mu = {mu} sits on an eigenvalue crossing at mode (comp={comp}, l={l}, j={j})")
            if factor > 0:
                count += 1
    return count
