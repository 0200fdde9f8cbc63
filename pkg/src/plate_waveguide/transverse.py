"""Transverse symbol of the plate operator on the cross-section (0, 1).

Writing u = exp(lam x) phi(y) in the plate equation gives the fourth-order
problem (lam^2 + d^2/dy^2)^2 phi = k^4 phi with two boundary conditions at
each wall. Closed-form solution bases, the 2x2 dispersion matrix, kernel
vectors, normalized mode profiles, and a Hermite-cubic Galerkin solver for
the inhomogeneous problem live here.

Every closed-form expression below is written in terms of
s+^2 = lam^2 + k^2 and s-^2 = lam^2 - k^2 through functions that are even in
s (sin(s y)/s and cos(s y)), so results are entire in lam and independent of
the square-root branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .errors import DegenerateKernel, NearSingularSymbol, NotAnEigenvalue
from .numerics import gauss_legendre, sinc, sqrt_branch


class BC(str, Enum):
    """Wall boundary condition at y = 0 and y = 1."""

    SIMPLY = "simply"
    CLAMPED = "clamped"


def parse_bc(bc) -> BC:
    if isinstance(bc, BC):
        return bc
    key = str(bc).strip().lower()
    aliases = {"simply": BC.SIMPLY, "simply_supported": BC.SIMPLY, "ss": BC.SIMPLY,
               "simplysupported": BC.SIMPLY, "clamped": BC.CLAMPED, "c": BC.CLAMPED}
    if key not in aliases:
        raise ValueError(f"unknown boundary condition {bc!r}")
    return aliases[key]


def theta(p: int, y):
    """Orthonormal simply supported profile sqrt(2) sin(p pi y)."""
    if p < 1:
        raise ValueError("mode index starts at 1")
    return np.sqrt(2.0) * np.sin(np.pi * p * np.asarray(y, dtype=float))


def _sin_over(s2, y):
    """sin(s y)/s as a function of s^2."""
    s = np.sqrt(np.asarray(s2, dtype=complex))
    return y * sinc(s * y)


def _cos(s2, y):
    return np.cos(np.sqrt(np.asarray(s2, dtype=complex)) * y)


def _sc_derivs(s2, y):
    """Rows (S, S', S'', S''') and (C, C', C'', C''') for S = sin(sy)/s, C = cos(sy)."""
    S = _sin_over(s2, y)
    C = _cos(s2, y)
    Sd = np.array([S, C, -s2 * S, -s2 * C])
    Cd = np.array([C, -s2 * S, -s2 * C, s2 * s2 * S])
    return Sd, Cd


def _shifts(lam, k4):
    k2 = np.sqrt(np.asarray(k4, dtype=complex))
    lam2 = np.asarray(lam, dtype=complex) ** 2
    return lam2 + k2, lam2 - k2


def closed_basis(lam, k, y, bc=BC.CLAMPED, *, k4=None):
    """Two solutions of the symbol ODE meeting the y=0 conditions.

    Returns an array of shape (2, 4, *y.shape): basis index, derivative order 0..3.
    Clamped: a1 = S+ - S-, a2 = C+ - C- (phi(0) = phi'(0) = 0).
    Simply supported: S+, S- (phi(0) = phi''(0) = 0).
    """
    bc = parse_bc(bc)
    if k4 is None:
        k4 = float(k) ** 4
    y = np.asarray(y, dtype=float)
    sp2, sm2 = _shifts(lam, k4)
    Sp, Cp = _sc_derivs(sp2, y)
    Sm, Cm = _sc_derivs(sm2, y)
    if bc is BC.CLAMPED:
        return np.array([Sp - Sm, Cp - Cm])
    return np.array([Sp, Sm])


def basis_clamped_a(lam, k, y):
    """(a1, a2, a1', a2') at y."""
    B = closed_basis(lam, k, y, BC.CLAMPED)
    return B[0, 0], B[1, 0], B[0, 1], B[1, 1]


def basis_clamped_b(lam, k, y):
    """(b1, b2, b1', b2') for lam^4 = k^4, built from z = sqrt(2) lam.

    b1 = sin(z y)/z - y and b2 = cos(z y) - 1. For lam^2 = k^2 these coincide
    with the a-basis; for lam^2 = -k^2 they are its negatives.
    """
    y = np.asarray(y, dtype=float)
    z = np.sqrt(2.0) * complex(lam)
    b1 = y * sinc(z * y) - y
    b2 = np.cos(z * y) - 1.0
    db1 = np.cos(z * y) - 1.0
    db2 = -z * np.sin(z * y)
    return b1, b2, db1, db2


def dispersion_matrix(lam, k, bc=BC.CLAMPED, *, k4=None):
    """2x2 matrix whose kernel gives the coefficients of a mode profile.

    Rows are the y=1 conditions (phi(1), phi'(1)) for clamped walls and
    (phi(1), phi''(1)) for simply supported walls; columns are basis functions.
    Works elementwise for array-valued ``lam`` (result shape (*lam.shape, 2, 2)).
    """
    bc = parse_bc(bc)
    B = closed_basis(lam, k, 1.0, bc, k4=k4)
    second = 1 if bc is BC.CLAMPED else 2
    M = np.array([[B[0, 0], B[1, 0]], [B[0, second], B[1, second]]])
    return np.moveaxis(M, (0, 1), (-2, -1))


def det_dispersion(lam, k, bc=BC.CLAMPED, *, k4=None):
    """Determinant of the dispersion matrix; its zeros are exactly the modal exponents.

    Clamped: equals (s+/s- + s-/s+) sin s+ sin s- - 2 + 2 cos s+ cos s-.
    Simply supported: equals 2 k^2 sinc(s+) sinc(s-), vanishing only at
    s+ = p pi or s- = p pi with p >= 1.
    """
    M = dispersion_matrix(lam, k, bc, k4=k4)
    return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]


def h_k(tau, k):
    """Real dispersion function on the imaginary axis, lam = i tau k, 0 <= tau < 1."""
    tau = np.asarray(tau, dtype=float)
    al = np.sqrt(1 - tau**2)
    si = np.sqrt(1 + tau**2)
    return ((al / si - si / al) * np.sin(k * al) * np.sinh(k * si)
            - (2 - 2 * np.cos(k * al) * np.cosh(k * si)))


def h_k_scaled(tau, k):
    """h_k divided by cosh(k sqrt(1+tau^2)); bounded and smooth up to tau = 1."""
    tau = np.asarray(tau, dtype=float)
    al = np.sqrt(np.clip(1 - tau**2, 0.0, None))
    si = np.sqrt(1 + tau**2)
    sinc_term = k * np.sinc(k * al / np.pi)  # sin(k al)/al
    sech = 2 * np.exp(-k * si) / (1 + np.exp(-2 * k * si))
    return (-2 * tau**2 / si) * sinc_term * np.tanh(k * si) - 2 * sech + 2 * np.cos(k * al)


def _entry_scale(lam, k, k4=None):
    if k4 is None:
        k4 = float(k) ** 4
    sp2, sm2 = _shifts(lam, k4)
    terms = [np.abs(_cos(s2, 1.0)) + np.abs(s2 * _sin_over(s2, 1.0)) for s2 in (sp2, sm2)]
    return float(1.0 + terms[0] + terms[1])


def _tie_break(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    idx = int(np.argmax(np.abs(v) > 1e-12))
    return v * (abs(v[idx]) / v[idx])


def kernel_basis(lam, k, bc=BC.CLAMPED, tol=1e-8):
    """Orthonormal basis (rows) of the kernel of the dispersion matrix."""
    M = dispersion_matrix(complex(lam), k, bc)
    _, sv, vh = np.linalg.svd(M)
    scale = _entry_scale(lam, k)
    if sv[0] < tol * scale:
        return np.array([_tie_break(np.conj(vh[0])), _tie_break(np.conj(vh[1]))]), sv
    if sv[1] < tol * scale:
        return np.array([_tie_break(np.conj(vh[1]))]), sv
    return np.zeros((0, 2), dtype=complex), sv


def kernel_vector(lam, k, bc=BC.CLAMPED, tol=1e-8):
    """Unit kernel vector, first nonzero entry real positive.

    Raises DegenerateKernel (dimension 2, basis attached) where the matrix
    vanishes identically, and NotAnEigenvalue if lam is not a root.
    """
    basis, sv = kernel_basis(lam, k, bc, tol)
    if len(basis) == 2:
        raise DegenerateKernel(
            f"dispersion matrix vanishes at lam={complex(lam)}, k={k}: kernel dimension 2",
            basis=basis)
    if len(basis) == 0:
        raise NotAnEigenvalue(f"lam={complex(lam)} is not a modal exponent at k={k} "
                              f"(singular values {sv})")
    return basis[0]


_PROFILE_RULE = 64


@dataclass(frozen=True)
class TransverseMode:
    """Mode profile phi(y) = norm_constant * (A1 b1(y) + A2 b2(y))."""

    lam: complex
    k: float
    bc: BC
    kernel_coeffs: tuple
    norm_constant: float

    def __call__(self, y, deriv: int = 0):
        B = closed_basis(self.lam, self.k, y, self.bc)
        A1, A2 = self.kernel_coeffs
        return self.norm_constant * (A1 * B[0, deriv] + A2 * B[1, deriv])

    def derivatives(self, y):
        """Array (4, *y.shape) with derivatives 0..3."""
        B = closed_basis(self.lam, self.k, y, self.bc)
        A1, A2 = self.kernel_coeffs
        return self.norm_constant * (A1 * B[0] + A2 * B[1])

    @property
    def eta(self) -> complex:
        return complex(self.lam) / 1j

    def l2_norm_sq(self) -> float:
        y, w = gauss_legendre(_PROFILE_RULE)
        return float(np.sum(w * np.abs(self(y)) ** 2))

    def flux_norm(self) -> float:
        """4 eta int(|phi'|^2 + eta^2 |phi|^2); equals 1 for normalized propagating modes."""
        y, w = gauss_legendre(_PROFILE_RULE)
        d = self.derivatives(y)
        eta = self.eta.real
        return float(4 * eta * np.sum(w * (np.abs(d[1]) ** 2 + eta**2 * np.abs(d[0]) ** 2)))


def is_propagating(lam, tol=1e-12) -> bool:
    lam = complex(lam)
    return abs(lam.real) <= tol * max(1.0, abs(lam)) and abs(lam.imag) > tol


def mode_profile(lam, k, bc=BC.CLAMPED, tol=1e-8) -> TransverseMode:
    """Normalized mode profile at a modal exponent.

    Propagating exponents lam = i eta (eta > 0) are normalized so that
    4 eta int(|phi'|^2 + eta^2 |phi|^2) = 1; for eta < 0 the profile of -lam
    is reused. Other exponents get unit L2 norm.
    """
    bc = parse_bc(bc)
    lam = complex(lam)
    if is_propagating(lam):
        lam = 1j * lam.imag
    coeffs = kernel_vector(lam, k, bc, tol)
    raw = TransverseMode(lam, float(k), bc, (complex(coeffs[0]), complex(coeffs[1])), 1.0)
    if is_propagating(lam):
        c = 1.0 / np.sqrt(TransverseMode(1j * abs(lam.imag), float(k), bc,
                                         raw.kernel_coeffs, 1.0).flux_norm())
    else:
        c = 1.0 / np.sqrt(raw.l2_norm_sq())
    return TransverseMode(lam, float(k), bc, raw.kernel_coeffs, float(c))


# ---------------------------------------------------------------------------
# Hermite cubic Galerkin discretization of the symbol


def hermite_cubic(xi, h, deriv: int = 0):
    """Hermite cubic shape functions on an element of length h.

    Rows: value at left node, slope at left node, value at right, slope at right.
    ``deriv`` differentiates with respect to the physical coordinate.
    """
    xi = np.asarray(xi, dtype=float)
    one = np.ones_like(xi)
    if deriv == 0:
        N = [1 - 3 * xi**2 + 2 * xi**3, h * (xi - 2 * xi**2 + xi**3),
             3 * xi**2 - 2 * xi**3, h * (-xi**2 + xi**3)]
    elif deriv == 1:
        N = [(-6 * xi + 6 * xi**2) / h, 1 - 4 * xi + 3 * xi**2,
             (6 * xi - 6 * xi**2) / h, -2 * xi + 3 * xi**2]
    elif deriv == 2:
        N = [(-6 + 12 * xi) / h**2, (-4 + 6 * xi) / h,
             (6 - 12 * xi) / h**2, (-2 + 6 * xi) / h]
    elif deriv == 3:
        N = [12 / h**3 * one, 6 / h**2 * one, -12 / h**3 * one, 6 / h**2 * one]
    else:
        N = [0 * one] * 4
    return np.array(N)


class HermiteGrid1D:
    """Uniform C1 Hermite cubic grid on (0, 1), two dofs (value, slope) per node."""

    def __init__(self, n_elems: int = 64):
        if n_elems < 2:
            raise ValueError("need at least two elements")
        self.n_elems = int(n_elems)
        self.nodes = np.linspace(0.0, 1.0, self.n_elems + 1)
        self.h = 1.0 / self.n_elems
        self.n_dofs = 2 * (self.n_elems + 1)

    def element_dofs(self, e: int):
        return np.arange(2 * e, 2 * e + 4)

    def locate(self, y):
        y = np.asarray(y, dtype=float)
        e = np.clip(np.floor(y / self.h).astype(int), 0, self.n_elems - 1)
        xi = y / self.h - e
        return e, xi

    def basis_at(self, y, deriv: int = 0):
        """Dense matrix (len(y), n_dofs) of basis function values."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        e, xi = self.locate(y)
        N = hermite_cubic(xi, self.h, deriv)
        out = np.zeros((y.size, self.n_dofs))
        rows = np.arange(y.size)
        for a in range(4):
            out[rows, 2 * e + a] = N[a]
        return out

    def evaluate(self, coeffs, y, deriv: int = 0):
        return self.basis_at(y, deriv) @ np.asarray(coeffs)

    def constrained(self, bc) -> np.ndarray:
        bc = parse_bc(bc)
        last = self.n_dofs - 2
        if bc is BC.CLAMPED:
            return np.array([0, 1, last, last + 1])
        return np.array([0, last])

    def free(self, bc) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n_dofs), self.constrained(bc))

    def load(self, g, order: int = 6):
        """Full load vector int g N_i dy for a callable g."""
        xi, w = gauss_legendre(order)
        out = np.zeros(self.n_dofs, dtype=complex)
        N = hermite_cubic(xi, self.h)
        ys = (np.arange(self.n_elems)[:, None] + xi[None, :]) * self.h
        vals = np.asarray(g(ys.ravel()), dtype=complex).reshape(ys.shape)
        contrib = (vals * w[None, :]) @ N.T * self.h  # (n_elems, 4)
        for a in range(4):
            np.add.at(out, 2 * np.arange(self.n_elems) + a, contrib[:, a])
        return out


@lru_cache(maxsize=16)
def _global_matrices(n_elems: int):
    grid = HermiteGrid1D(n_elems)
    h = grid.h
    xi, w = gauss_legendre(4)
    N0, N1, N2 = (hermite_cubic(xi, h, d) for d in range(3))
    Me = (N0 * w) @ N0.T * h
    Ge = (N1 * w) @ N1.T * h
    Se = (N2 * w) @ N2.T * h
    n = grid.n_dofs
    mats = [np.zeros((n, n)) for _ in range(3)]
    for e in range(n_elems):
        idx = grid.element_dofs(e)
        for M, Me_ in zip(mats, (Me, Ge, Se)):
            M[np.ix_(idx, idx)] += Me_
    return tuple(mats)


class SymbolSolver:
    """Galerkin solver for (lam^2 + d^2)^2 phi - k^4 phi = g with wall conditions.

    The discrete operator is S - 2 lam^2 G + (lam^4 - k^4) M where S, G, M are
    the second-derivative, first-derivative and mass Gram matrices on the free dofs.
    """

    def __init__(self, k, bc=BC.CLAMPED, grid: HermiteGrid1D | None = None):
        self.k = float(k)
        self.bc = parse_bc(bc)
        self.grid = grid if grid is not None else HermiteGrid1D()
        M, G, S = _global_matrices(self.grid.n_elems)
        f = self.grid.free(self.bc)
        self.free = f
        self.M, self.G, self.S = (A[np.ix_(f, f)] for A in (M, G, S))

    def matrix(self, lam):
        lam2 = complex(lam) ** 2
        return self.S - 2 * lam2 * self.G + (lam2 * lam2 - self.k**4) * self.M

    def free_load(self, rhs):
        if callable(rhs):
            return self.grid.load(rhs)[self.free]
        rhs = np.asarray(rhs, dtype=complex)
        if rhs.shape[0] == self.grid.n_dofs:
            return rhs[self.free]
        return rhs

    def expand(self, free_coeffs):
        free_coeffs = np.asarray(free_coeffs)
        out = np.zeros((self.grid.n_dofs,) + free_coeffs.shape[1:], dtype=complex)
        out[self.free] = free_coeffs
        return out

    def solve(self, lam, rhs, check: bool = True, rcond_min: float = 1e-14):
        """Full coefficient vector(s) of the discrete solution."""
        A = self.matrix(lam)
        b = self.free_load(rhs)
        lu, piv = sla.lu_factor(A, check_finite=False)
        if check:
            anorm = np.linalg.norm(A, 1)
            rcond, _ = sla.lapack.zgecon(lu, anorm)
            if rcond < rcond_min:
                raise NearSingularSymbol(f"symbol at lam={complex(lam)} has rcond {rcond:.2e}")
        x = sla.lu_solve((lu, piv), b, check_finite=False)
        return self.expand(x)

    def energy(self, lam, coeffs):
        """Bilinear symbol form evaluated at (phi, conj(phi))."""
        c = np.asarray(coeffs)[self.free]
        return complex(np.conj(c) @ self.matrix(lam) @ c)

    def weak_residual(self, lam, profile):
        """Galerkin residual of an exact profile (callable with derivative kw)
        tested against every free basis function, by 8-point Gauss per element."""
        grid = self.grid
        xi, w = gauss_legendre(8)
        ys = ((np.arange(grid.n_elems)[:, None] + xi[None, :]) * grid.h).ravel()
        lam2 = complex(lam) ** 2
        ph = np.asarray(profile(ys, 0), dtype=complex)
        ph2 = np.asarray(profile(ys, 2), dtype=complex)
        B0 = grid.basis_at(ys, 0)
        B2 = grid.basis_at(ys, 2)
        ww = np.tile(w, grid.n_elems) * grid.h
        r = ((lam2 * ph + ph2) * ww) @ (lam2 * B0 + B2) - self.k**4 * (ph * ww) @ B0
        return r[self.free]


def solve_symbol(lam, k, rhs, grid: HermiteGrid1D | None = None, bc=BC.CLAMPED):
    """Solve the symbol problem; ``rhs`` is a callable g(y) or a load vector."""
    return SymbolSolver(k, bc, grid).solve(lam, rhs)
