"""Reference strip solver by inverse Fourier-Laplace transform along a shifted line.

With U(lam, y) = int e^{-lam x} u(x, y) dx the plate equation becomes the
transverse symbol problem (lam^2 + d_y^2)^2 U - k^4 U = F(lam, .). The field is
recovered on the line Re lam = -beta,

    u(x, y) = (1 / 2 pi) int e^{lam x} U(lam, y) ds,   lam = -beta + i s,

which gives the solution decaying at +inf and carrying every propagating
mode at -inf. Residues at the propagating exponents, taken on small circles,
move the contour past +i eta_p and turn it into the outgoing solution.
Coefficients can also be read off at any cross-section outside the source by
the flux pairing q, which annihilates every exponent except the paired one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import ContourThroughZero, EigenvalueNearContour, MultiplicityTwo, NotPropagating, ValidationError
from .fields import ModalField
from .numerics import BandCutoff, composite_gauss, gauss_legendre
from .spectrum import (SearchRegion, algebraic_multiplicity, check_not_threshold,
                       complex_exponents, propagating_etas, winding_number)
from .transverse import BC, HermiteGrid1D, SymbolSolver, det_dispersion, hermite_cubic, mode_profile, parse_bc

DEFAULT_GRID = 64
_EXCLUSION = 1e-3


# ---------------------------------------------------------------------------
# contour


def default_beta(k, bc=BC.CLAMPED) -> float:
    """Half the smallest |Re lam| over non-imaginary exponents with |lam| <= 2k + 10, capped at 1."""
    rho = 2 * k + 10
    found = complex_exponents(k, bc, SearchRegion(rho, 0.2, (0.01, 2.05, -rho, rho)))
    if not found:
        return 1.0
    return float(min(1.0, 0.5 * min(abs(m.lam.real) for m in found)))


@dataclass(frozen=True)
class ContourSpec:
    beta: float
    T: float
    n_quad: int = 2048
    residue_radius: float = 0.05

    def __post_init__(self):
        if self.beta < 0 or self.T <= 0 or self.n_quad < 2 or self.n_quad % 2:
            raise ValidationError("contour needs beta >= 0, T > 0 and an even n_quad")
        if self.residue_radius <= 0:
            raise ValidationError("residue radius must be positive")

    @classmethod
    def default(cls, k, bc=BC.CLAMPED, beta: float | None = None):
        etas = propagating_etas(k, bc)
        if beta is None:
            beta = default_beta(k, bc) if len(etas) else 0.0
        gaps = [2 * e for e in etas] + list(np.diff(np.sort(etas)))
        radius = min([0.05] + [0.25 * g for g in gaps])
        return cls(float(beta), 40.0 + 4.0 * k, 2048, float(radius))

    def nodes(self):
        """Midpoint nodes lam_j = -beta + i s_j and weights ds / (2 pi)."""
        ds = 2 * self.T / self.n_quad
        s = -self.T + (np.arange(self.n_quad) + 0.5) * ds
        return -self.beta + 1j * s, np.full(self.n_quad, ds / (2 * np.pi))

    def to_dict(self):
        return {"beta": self.beta, "T": self.T, "n_quad": self.n_quad,
                "residue_radius": self.residue_radius}


def check_contour(spec: ContourSpec, k, bc=BC.CLAMPED):
    """Raise if an exponent lies within 1e-3 of the line or inside a residue circle's exclusion."""
    bc = parse_bc(bc)
    f = lambda z: det_dispersion(z, k, bc)  # noqa: E731
    b = -spec.beta
    lo, hi = b - _EXCLUSION, b + _EXCLUSION
    span = spec.T + 1.0
    if spec.beta == 0:
        if len(propagating_etas(k, bc)):
            raise EigenvalueNearContour(f"propagating exponents lie on Re lam = 0 at k={k}")
        return
    edges = np.linspace(-span, span, 2 * int(np.ceil(span)) + 1)
    for i0, i1 in zip(edges[:-1], edges[1:]):
        try:
            wn = winding_number(f, lo, hi, i0, i1)
        except ContourThroughZero as exc:
            raise EigenvalueNearContour(f"exponent on the edge of the exclusion strip at Re lam = {b}") from exc
        if wn != 0:
            raise EigenvalueNearContour(f"exponent within {_EXCLUSION} of Re lam = {b}, "
                                        f"Im lam in [{i0:.3g}, {i1:.3g}]")


# ---------------------------------------------------------------------------
# sources


def _bump(t, deriv=0):
    """(1 - t^2)^5 on |t| < 1, a C4 compactly supported bump."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1
    if deriv:
        raise ValueError("bump derivatives are not needed")
    return np.where(inside, (1 - t * t) ** 5, 0.0)


@dataclass
class SourceTerm:
    """Volume source f(x, y) with compact x-support."""

    func: Callable
    x_support: tuple
    description: dict = field(default_factory=dict)

    def __post_init__(self):
        a, b = map(float, self.x_support)
        if not a < b:
            raise ValidationError("empty source support")
        self.x_support = (a, b)

    def __call__(self, x, y):
        return self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def scaled(self, alpha) -> "SourceTerm":
        f = self.func
        return SourceTerm(lambda x, y: alpha * f(x, y), self.x_support,
                          {"kind": "scaled", "alpha": complex(alpha).__repr__(), "of": self.description})

    @classmethod
    def bump(cls, center=0.0, radius=0.5, amplitude=1.0, p=1):
        """amplitude * (1 - t^2)^5 sin(p pi y), t = (x - center) / radius."""
        def f(x, y):
            return amplitude * _bump((x - center) / radius) * np.sin(p * np.pi * y)
        return cls(f, (center - radius, center + radius),
                   {"kind": "bump", "center": center, "radius": radius,
                    "amplitude": amplitude, "p": p})

    @classmethod
    def random(cls, seed: int, center=0.0, radius=0.5, n_x: int = 3, n_y: int = 3):
        """Bump times a random complex combination of t^l sin(j pi y)."""
        rng = np.random.default_rng(seed)
        c = rng.standard_normal((n_y, n_x)) + 1j * rng.standard_normal((n_y, n_x))

        def f(x, y):
            t = (x - center) / radius
            out = np.zeros(np.broadcast(t, y).shape, dtype=complex)
            for j in range(n_y):
                for l in range(n_x):
                    out = out + c[j, l] * t**l * np.sin((j + 1) * np.pi * y)
            return _bump(t) * out
        return cls(f, (center - radius, center + radius),
                   {"kind": "random", "seed": seed, "center": center, "radius": radius,
                    "n_x": n_x, "n_y": n_y})

    @classmethod
    def planted_mode(cls, k, p=1, direction=1, L_chi=1.0, bc=BC.CLAMPED):
        """f = (Delta^2 - k^4)(chi w_p), so the outgoing solution is chi w_p itself."""
        mode = planted_field(k, p, direction, L_chi, bc)
        op = mode.plate_operator(k)
        support = (L_chi, 2 * L_chi) if direction > 0 else (-2 * L_chi, -L_chi)
        return cls(op, support, {"kind": "mode", "p": p, "direction": direction, "L_chi": L_chi})

    @classmethod
    def from_dict(cls, d: dict, k=None, bc=BC.CLAMPED):
        kind = d.get("kind")
        if kind == "bump":
            return cls.bump(d.get("center", 0.0), d.get("radius", 0.5), d.get("amplitude", 1.0),
                            int(d.get("p", 1)))
        if kind == "random":
            return cls.random(int(d.get("seed", 0)), d.get("center", 0.0), d.get("radius", 0.5),
                              int(d.get("n_x", 3)), int(d.get("n_y", 3)))
        if kind == "mode":
            if k is None:
                raise ValidationError("a planted-mode source needs k")
            return cls.planted_mode(k, int(d.get("p", 1)), int(d.get("direction", 1)),
                                    float(d.get("L_chi", 1.0)), bc)
        raise ValidationError(f"unknown source kind {kind!r}")

    def transform_loads(self, lams, grid: HermiteGrid1D, T: float | None = None):
        """Load vectors of F(lam, .) = int e^{-lam x} f(x, .) dx, one row per lam."""
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        a, b = self.x_support
        T = float(np.max(np.abs(lams.imag))) if T is None else T
        panels = int(np.ceil((b - a) * T / 3.0)) + 8
        xq, wq = composite_gauss(np.linspace(a, b, panels + 1), 8)
        xi, wy = gauss_legendre(6)
        ys = ((np.arange(grid.n_elems)[:, None] + xi[None, :]) * grid.h).ravel()
        N = hermite_cubic(xi, grid.h)  # (4, 6)
        vals = np.asarray(self(xq[:, None], ys[None, :]), dtype=complex)
        vals = vals.reshape(len(xq), grid.n_elems, len(xi)) * (wy * grid.h)
        contrib = np.einsum("qes,as->qea", vals, N)
        B = np.zeros((len(xq), grid.n_dofs), dtype=complex)
        for e_off in range(4):
            np.add.at(B, (slice(None), 2 * np.arange(grid.n_elems) + e_off), contrib[:, :, e_off])
        out = np.empty((len(lams), grid.n_dofs), dtype=complex)
        for c in range(0, len(lams), 1024):
            out[c:c + 1024] = (np.exp(-np.outer(lams[c:c + 1024], xq)) * wq) @ B
        return out

    def transform_values(self, lams, ys, T: float | None = None):
        """F(lam, y) at sample points, for Plancherel checks."""
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        a, b = self.x_support
        T = float(np.max(np.abs(lams.imag))) if T is None else T
        panels = int(np.ceil((b - a) * T / 3.0)) + 8
        xq, wq = composite_gauss(np.linspace(a, b, panels + 1), 8)
        vals = np.asarray(self(xq[:, None], np.asarray(ys)[None, :]), dtype=complex)
        return (np.exp(-np.outer(lams, xq)) * wq) @ vals


def planted_field(k, p=1, direction=1, L_chi=1.0, bc=BC.CLAMPED) -> ModalField:
    """chi^{+-} w_p^{+-} with the cut-off rising on [L, 2L] (mirrored for direction -1)."""
    etas = propagating_etas(k, bc)
    if not 1 <= p <= len(etas):
        raise NotPropagating(f"mode {p} does not propagate at k={k}")
    lam = 1j * direction * etas[p - 1]
    chi = BandCutoff(L_chi, L_chi, "right" if direction > 0 else "left")
    return ModalField().add(1.0, lam, mode_profile(lam, k, bc), chi)


# ---------------------------------------------------------------------------
# batched symbol solves


_BAND = 3  # Hermite cubic dofs couple at most three positions away


def _banded(A, w=_BAND):
    n = A.shape[0]
    ab = np.zeros((2 * w + 1, n), dtype=A.dtype)
    for d in range(-w, w + 1):
        diag = np.diagonal(A, d)
        if d >= 0:
            ab[w - d, d:] = diag
        else:
            ab[w - d, :n + d] = diag
    return ab


def _solve_batch(solver: SymbolSolver, lams, loads):
    """Full coefficient vectors U(lam_j) for load rows ``loads`` (banded LU per node)."""
    lams = np.asarray(lams, dtype=complex)
    free = solver.free
    bands = getattr(solver, "_bands", None)
    if bands is None:
        bands = solver._bands = tuple(_banded(A) for A in (solver.S, solver.G, solver.M))
    Sb, Gb, Mb = bands
    k4 = solver.k**4
    out = np.zeros((len(lams), solver.grid.n_dofs), dtype=complex)
    rhs = loads[:, free]
    for j, lam in enumerate(lams):
        l2 = lam * lam
        ab = Sb - 2 * l2 * Gb + (l2 * l2 - k4) * Mb
        out[j, free] = sla.solve_banded((_BAND, _BAND), ab, rhs[j], overwrite_ab=True,
                                        check_finite=False)
    return out


class ContourField:
    """Field given by the line quadrature; exact x-derivatives through powers of lam."""

    def __init__(self, k, spec: ContourSpec, grid: HermiteGrid1D, lams, weights, coeffs,
                 source: SourceTerm | None = None, bc=BC.CLAMPED):
        self.k = float(k)
        self.spec = spec
        self.grid = grid
        self.lams = lams
        self.weights = weights
        self.coeffs = coeffs
        self.source = source
        self.bc = parse_bc(bc)

    def derivative(self, x, y, dx: int = 0, dy: int = 0, stride: int = 1):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        shape = x.shape
        xf, yf = x.ravel(), y.ravel()
        lam = self.lams[::stride]
        w = self.weights[::stride] * stride * lam**dx
        U = self.coeffs[::stride]
        out = np.empty(xf.size, dtype=complex)
        for s in range(0, xf.size, 512):
            B = self.grid.basis_at(yf[s:s + 512], dy)
            V = U @ B.T
            E = np.exp(np.outer(lam, xf[s:s + 512])) * w[:, None]
            out[s:s + 512] = np.sum(E * V, axis=0)
        return out.reshape(shape)

    def __call__(self, x, y):
        return self.derivative(x, y)

    def quadrature_error(self, x, y) -> float:
        """Largest change when every other quadrature node is dropped."""
        return float(np.max(np.abs(self.derivative(x, y) - self.derivative(x, y, stride=2))))


def _probe_points(source: SourceTerm):
    a, b = source.x_support
    xs = np.array([a - 0.25, 0.5 * (a + b), b + 0.25])
    return np.repeat(xs, 2), np.tile([0.3, 0.6], 3)


def contour_solve(source: SourceTerm, k, spec: ContourSpec | None = None,
                  grid: HermiteGrid1D | None = None, bc=BC.CLAMPED, check: bool = True,
                  tol: float = 1e-9, max_doublings: int = 3) -> ContourField:
    """Solution decaying at +inf (weight e^{beta x}) by line quadrature.

    The truncation T is doubled at fixed spacing, reusing the inner solves,
    until probe values move by less than ``tol`` relative to their size.
    """
    bc = parse_bc(bc)
    check_not_threshold(k, bc)
    spec = ContourSpec.default(k, bc) if spec is None else spec
    grid = HermiteGrid1D(DEFAULT_GRID) if grid is None else grid
    if check:
        check_contour(spec, k, bc)
    solver = SymbolSolver(k, bc, grid)
    lams, weights = spec.nodes()
    U = _solve_batch(solver, lams, source.transform_loads(lams, grid, spec.T))
    fld = ContourField(k, spec, grid, lams, weights, U, source, bc)
    px, py = _probe_points(source)
    for _ in range(max_doublings):
        before = fld.derivative(px, py)
        wide = replace(spec, T=2 * spec.T, n_quad=2 * spec.n_quad)
        lams_w, weights_w = wide.nodes()
        q = spec.n_quad // 2
        outer = np.r_[np.arange(q), np.arange(q + spec.n_quad, wide.n_quad)]
        U_w = np.empty((wide.n_quad, grid.n_dofs), dtype=complex)
        U_w[q:q + spec.n_quad] = U
        U_w[outer] = _solve_batch(solver, lams_w[outer],
                                  source.transform_loads(lams_w[outer], grid, wide.T))
        spec, U = wide, U_w
        fld = ContourField(k, spec, grid, lams_w, weights_w, U, source, bc)
        change = np.max(np.abs(fld.derivative(px, py) - before))
        if change <= tol * max(np.max(np.abs(before)), 1e-300):
            break
    return fld


# ---------------------------------------------------------------------------
# residues


def _project(grid: HermiteGrid1D, coeffs, profile) -> complex:
    """(u, phi) / (phi, phi) for a grid function u and an exact profile."""
    xi, w = gauss_legendre(8)
    ys = ((np.arange(grid.n_elems)[:, None] + xi[None, :]) * grid.h).ravel()
    ww = np.tile(w, grid.n_elems) * grid.h
    ph = profile(ys)
    u = grid.basis_at(ys) @ coeffs
    return complex(np.sum(ww * u * np.conj(ph)) / np.sum(ww * np.abs(ph) ** 2))


def _residue(source, lam0, k, radius, n_points, solver, grid, T):
    theta = 2 * np.pi * np.arange(n_points) / n_points
    z = radius * np.exp(1j * theta)
    U = _solve_batch(solver, lam0 + z, source.transform_loads(lam0 + z, grid, T))
    return (z[:, None] * U).sum(axis=0) / n_points


@dataclass(frozen=True)
class ResidueResult:
    value: complex
    check: complex  # same with twice the circle points

    @property
    def discrepancy(self) -> float:
        return abs(self.value - self.check)


def residue_details(source: SourceTerm, lam0, k, spec: ContourSpec | None = None,
                    grid: HermiteGrid1D | None = None, bc=BC.CLAMPED,
                    radius: float | None = None) -> ResidueResult:
    bc = parse_bc(bc)
    lam0 = complex(lam0)
    etas = propagating_etas(k, bc)
    if abs(lam0) < 1e-8:
        raise MultiplicityTwo("lam = 0 is a double exponent at a threshold")
    if abs(lam0.real) > 1e-12 or not np.any(np.abs(np.abs(lam0.imag) - etas) < 1e-9):
        raise NotPropagating(f"{lam0} is not a propagating exponent at k={k}")
    if algebraic_multiplicity(lam0, k, bc) != 1:
        raise MultiplicityTwo(f"{lam0} is not a simple exponent")
    spec = ContourSpec.default(k, bc, beta=0.0 if not len(etas) else None) if spec is None else spec
    grid = HermiteGrid1D(DEFAULT_GRID) if grid is None else grid
    r = spec.residue_radius if radius is None else radius
    solver = SymbolSolver(k, bc, grid)
    phi = mode_profile(lam0, k, bc)
    sign = 1.0 if lam0.imag > 0 else -1.0
    vals = [sign * _project(grid, _residue(source, lam0, k, r, n, solver, grid, spec.T), phi)
            for n in (16, 32)]
    return ResidueResult(*vals)


def residue_coefficient(source: SourceTerm, lam0, k, spec: ContourSpec | None = None,
                        grid: HermiteGrid1D | None = None, bc=BC.CLAMPED,
                        radius: float | None = None) -> complex:
    """Coefficient of e^{lam0 x} phi_p in the outgoing solution, lam0 = +-i eta_p.

    Passing the contour to the right of +i eta_p adds the residue there; the
    -i eta_p content at -inf is minus the residue at -i eta_p.
    """
    return residue_details(source, lam0, k, spec, grid, bc, radius).value


# ---------------------------------------------------------------------------
# flux pairing


def _section_pairing(u, v, x0, n_gauss: int = 64) -> complex:
    """Cross-section integral of q with normal +d_x; y-derivatives are moved onto v.

    Both fields must vanish on the walls. Terms:
    u_xxx v* - u v*_xxx - u_xx v*_x + u_x v*_xx - 2 u v*_xyy + 2 u_x v*_yy.
    """
    y, w = gauss_legendre(n_gauss)
    x = np.full_like(y, float(x0))
    du = [u.derivative(x, y, m, 0) for m in range(4)]
    dv = lambda m, n: np.conj(v.derivative(x, y, m, n))  # noqa: E731
    integrand = (du[3] * dv(0, 0) - du[0] * dv(3, 0) - du[2] * dv(1, 0) + du[1] * dv(2, 0)
                 - 2 * du[0] * dv(1, 2) + 2 * du[1] * dv(0, 2))
    return complex(np.sum(w * integrand))


def symplectic_form(u, v, H, n_gauss: int = 64) -> complex:
    """q(u, v) reduced to the two sections x = +-H with outward normals."""
    return _section_pairing(u, v, H, n_gauss) - _section_pairing(u, v, -H, n_gauss)


def section_form(u, v, x0, normal: int, n_gauss: int = 64) -> complex:
    """One-section part of q with outward normal ``normal`` * e_x."""
    return normal * _section_pairing(u, v, x0, n_gauss)


def _mode_field(lam, k, bc):
    return ModalField().add(1.0, lam, mode_profile(lam, k, bc))


def modal_content(u, k, x0, bc=BC.CLAMPED):
    """(c_plus, c_minus): coefficients of w_p^+ and w_p^- in u near the section x0.

    Valid where u solves the homogeneous equation; evanescent content pairs to zero.
    """
    bc = parse_bc(bc)
    etas = propagating_etas(k, bc)
    cp = np.array([1j * _section_pairing(u, _mode_field(1j * e, k, bc), x0) for e in etas])
    cm = np.array([-1j * _section_pairing(u, _mode_field(-1j * e, k, bc), x0) for e in etas])
    return cp, cm


@dataclass(frozen=True)
class FluxCoefficients:
    a: np.ndarray  # w_p^+ content at +H
    b: np.ndarray  # w_p^- content at -H
    incoming_right: np.ndarray  # w_p^- content at +H
    incoming_left: np.ndarray  # w_p^+ content at -H


def flux_extract(u, k, H, bc=BC.CLAMPED) -> FluxCoefficients:
    """Outgoing coefficients of u read off at x = +-H by the flux pairing."""
    ap, am = modal_content(u, k, H, bc)
    bp, bm = modal_content(u, k, -H, bc)
    return FluxCoefficients(ap, bm, am, bp)


# ---------------------------------------------------------------------------
# radiating solution


def _uncut(m: ModalField) -> ModalField:
    return ModalField([type(t)(t.coef, t.lam, t.profile, None) for t in m.terms])


class _SumField:
    def __init__(self, *parts, signs=None):
        self.parts = parts
        self.signs = signs or (1,) * len(parts)

    def derivative(self, x, y, dx: int = 0, dy: int = 0):
        return sum(s * p.derivative(x, y, dx, dy) for s, p in zip(self.signs, self.parts))

    def __call__(self, x, y):
        return self.derivative(x, y)


@dataclass
class DecomposedField:
    """u = chi^+ sum a_p w_p^+ + chi^- sum b_p w_p^- + remainder."""

    k: float
    a: np.ndarray
    b: np.ndarray
    beta: float
    total: object
    line_field: ContourField
    modes_plus: ModalField
    modes_minus: ModalField
    L_chi: float = 1.0
    residue_discrepancy: float = 0.0
    remainder_samples: dict = field(default_factory=dict)

    @property
    def remainder(self):
        return _SumField(self.total, self.modes_plus, self.modes_minus, signs=(1, -1, -1))

    def sample_remainder(self, x, y):
        X, Y = np.meshgrid(np.asarray(x, float), np.asarray(y, float), indexing="ij")
        vals = self.remainder.derivative(X, Y)
        self.remainder_samples = {"x": np.asarray(x), "y": np.asarray(y), "values": vals}
        return vals

    def decay_rate(self, span: float = 3.0, n: int = 121, floor: float = 1e-6) -> float:
        """Smallest fitted log-slope of max_y |remainder| over both ends.

        Outside the source support the remainder equals u minus the uncut mode
        sums, which is what is fitted; samples below ``floor`` times the peak
        of |u| are treated as rounding noise.
        """
        a, b = self.line_field.source.x_support
        ys = np.linspace(0.02, 0.98, 25)
        scale = max(np.max(np.abs(self.total.derivative(x, ys))) for x in (a, 0.5 * (a + b), b))
        rates = []
        for side, start, modes in ((1, b, self.modes_plus), (-1, a, self.modes_minus)):
            xs = start + side * np.linspace(0.05, 0.05 + span, n)
            X, Y = xs[:, None], ys[None, :]
            rem = self.total.derivative(X, Y) - _uncut(modes).derivative(X, Y)
            amp = np.max(np.abs(rem), axis=1)
            keep = amp > floor * scale
            if np.count_nonzero(keep) < 4:
                continue
            slope = np.polyfit(np.abs(xs[keep]), np.log(amp[keep]), 1)[0]
            rates.append(-slope)
        return float(min(rates)) if rates else float("inf")

    def flux_coefficients(self, H: float | None = None) -> FluxCoefficients:
        """Coefficients from the line solution alone, read off left of the source.

        There the line solution holds -a_p w_p^+ + b_p w_p^- plus decaying terms.
        """
        a_s, _ = self.line_field.source.x_support
        H = (abs(a_s) + 0.5) if H is None else H
        cp, cm = modal_content(self.line_field, self.k, -H, self.line_field.bc)
        return FluxCoefficients(-cp, cm, np.zeros_like(cm), np.zeros_like(cp))

    def coefficients_dict(self):
        return {"k": self.k, "beta": self.beta,
                "a_re": np.real(self.a).tolist(), "a_im": np.imag(self.a).tolist(),
                "b_re": np.real(self.b).tolist(), "b_im": np.imag(self.b).tolist(),
                "residue_discrepancy": self.residue_discrepancy}

    def to_json(self):
        return json.dumps(self.coefficients_dict(), indent=2)


def radiating_solution(source: SourceTerm, k, spec: ContourSpec | None = None,
                       grid: HermiteGrid1D | None = None, bc=BC.CLAMPED,
                       L_chi: float = 1.0) -> DecomposedField:
    """Outgoing solution: line solution plus the residues at +i eta_p."""
    bc = parse_bc(bc)
    check_not_threshold(k, bc)
    etas = propagating_etas(k, bc)
    grid = HermiteGrid1D(DEFAULT_GRID) if grid is None else grid
    if spec is None:
        spec = ContourSpec.default(k, bc, beta=None if len(etas) else 0.0)
    v = contour_solve(source, k, spec, grid, bc)
    a, b, disc = [], [], 0.0
    plus, minus, correction = ModalField(), ModalField(), ModalField()
    chi_p = BandCutoff(L_chi, L_chi, "right")
    chi_m = BandCutoff(L_chi, L_chi, "left")
    for eta in etas:
        ra = residue_details(source, 1j * eta, k, spec, grid, bc)
        rb = residue_details(source, -1j * eta, k, spec, grid, bc)
        disc = max(disc, ra.discrepancy, rb.discrepancy)
        a.append(ra.value)
        b.append(rb.value)
        prof = mode_profile(1j * eta, k, bc)
        correction.add(ra.value, 1j * eta, prof)
        plus.add(ra.value, 1j * eta, prof, chi_p)
        minus.add(rb.value, -1j * eta, prof, chi_m)
    total = _SumField(v, correction)
    return DecomposedField(float(k), np.array(a, dtype=complex), np.array(b, dtype=complex),
                           spec.beta, total, v, plus, minus, L_chi, disc)


def plancherel_check(source: SourceTerm, beta: float, T: float = 200.0, n_quad: int = 8192,
                     n_y: int = 48):
    """(int e^{2 beta x} |f|^2, (1/2 pi) int ||F(-beta + i s)||^2 ds) by quadrature."""
    a, b = source.x_support
    xq, wx = composite_gauss(np.linspace(a, b, 33), 8)
    yq, wy = gauss_legendre(n_y)
    f = np.asarray(source(xq[:, None], yq[None, :]))
    lhs = float(np.sum(np.exp(2 * beta * xq)[:, None] * wx[:, None] * wy[None, :] * np.abs(f) ** 2))
    ds = 2 * T / n_quad
    s = -T + (np.arange(n_quad) + 0.5) * ds
    F = source.transform_values(-beta + 1j * s, yq, T)
    rhs = float(np.sum(np.abs(F) ** 2 * wy[None, :]) * ds / (2 * np.pi))
    return lhs, rhs
