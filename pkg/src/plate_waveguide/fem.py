"""Bogner-Fox-Schmit plate elements on the truncated strip (-L, L) x (0, 1).

Each node carries (u, u_x, u_y, u_xy). On a uniform rectangular mesh every
element matrix is the same Kronecker product of 1D Hermite matrices, which
is exactly what a 4x4 Gauss rule produces element by element.

The assembled operator is a(u, v) - k^4 (u, v) - t(u, v): the plate
bending form, the mass term and the DtN coupling on the two artificial
ends. Walls are simply supported (u = 0) or clamped (u = d_n u = 0); a
rectangular hole is simply cut out, its free-edge conditions being natural.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dtn import TraceCoefficients, dtn_matrices
from .errors import SingularSystem, ValidationError
from .numerics import composite_gauss, gauss_legendre
from .transverse import BC, hermite_cubic, parse_bc, theta

# dof type within a node: u, u_x, u_y, u_xy  <->  (x-slope bit) + 2 (y-slope bit)
N_NODE_DOFS = 4


@dataclass(frozen=True)
class Hole:
    x0: float
    y0: float
    x1: float
    y1: float

    @classmethod
    def parse(cls, text: str) -> "Hole":
        try:
            vals = [float(v) for v in text.split(",")]
        except ValueError as exc:
            raise ValidationError(f"cannot parse hole {text!r}") from exc
        if len(vals) != 4:
            raise ValidationError("hole needs four numbers x0,y0,x1,y1")
        return cls(*vals)


def _aligned(v, origin, h):
    t = (v - origin) / h
    return abs(t - round(t)) < 1e-8, int(round(t))


class StripMesh:
    """Uniform nx-by-ny rectangle mesh of (-L, L) x (0, 1), optional hole."""

    def __init__(self, L: float, nx: int, ny: int, hole: Hole | None = None):
        if L <= 0:
            raise ValidationError("L must be positive")
        if nx < 1 or ny < 1:
            raise ValidationError("need at least one element per direction")
        self.L, self.nx, self.ny = float(L), int(nx), int(ny)
        self.hx = 2 * self.L / self.nx
        self.hy = 1.0 / self.ny
        self.xs = np.linspace(-self.L, self.L, self.nx + 1)
        self.ys = np.linspace(0.0, 1.0, self.ny + 1)
        self.hole = hole
        self.hole_cells = None
        if hole is not None:
            if not (-self.L < hole.x0 < hole.x1 < self.L and 0 < hole.y0 < hole.y1 < 1):
                raise ValidationError(f"hole {hole} must lie strictly inside "
                                      f"(-{self.L}, {self.L}) x (0, 1)")
            idx = []
            for v, o, h in ((hole.x0, -self.L, self.hx), (hole.x1, -self.L, self.hx),
                            (hole.y0, 0.0, self.hy), (hole.y1, 0.0, self.hy)):
                ok, i = _aligned(v, o, h)
                if not ok:
                    raise ValidationError(f"hole edge {v} is not on a mesh line")
                idx.append(i)
            self.hole_cells = (idx[0], idx[1], idx[2], idx[3])

    # indexing -----------------------------------------------------------
    def node(self, i, j):
        return np.asarray(i) * (self.ny + 1) + np.asarray(j)

    @property
    def n_nodes(self):
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_dofs(self):
        return N_NODE_DOFS * self.n_nodes

    @cached_property
    def active_elements(self):
        ex, ey = np.meshgrid(np.arange(self.nx), np.arange(self.ny), indexing="ij")
        ex, ey = ex.ravel(), ey.ravel()
        if self.hole_cells is not None:
            i0, i1, j0, j1 = self.hole_cells
            keep = ~((ex >= i0) & (ex < i1) & (ey >= j0) & (ey < j1))
            ex, ey = ex[keep], ey[keep]
        return ex, ey

    @cached_property
    def element_dofs(self):
        """(n_active, 16) global dof indices, local order (ax, ay) with ax major."""
        ex, ey = self.active_elements
        cols = []
        for ax in range(4):
            for ay in range(4):
                node = self.node(ex + ax // 2, ey + ay // 2)
                cols.append(N_NODE_DOFS * node + (ax % 2) + 2 * (ay % 2))
        return np.stack(cols, axis=1)

    @cached_property
    def active_dofs(self):
        return np.unique(self.element_dofs)

    def in_hole(self, x, y):
        if self.hole is None:
            return np.zeros(np.broadcast(x, y).shape, dtype=bool)
        h = self.hole
        return (x > h.x0) & (x < h.x1) & (y > h.y0) & (y < h.y1)

    def to_dict(self):
        d = {"L": self.L, "nx": self.nx, "ny": self.ny}
        if self.hole is not None:
            d["hole"] = [self.hole.x0, self.hole.y0, self.hole.x1, self.hole.y1]
        return d

    @classmethod
    def from_json(cls, text: str) -> "StripMesh":
        d = json.loads(text)
        hole = Hole(*d["hole"]) if d.get("hole") else None
        return cls(d["L"], d["nx"], d["ny"], hole)


# ---------------------------------------------------------------------------
# element matrices


def _hermite_1d(h):
    xi, w = gauss_legendre(4)
    N = [hermite_cubic(xi, h, d) for d in range(3)]
    M = (N[0] * w) @ N[0].T * h
    G = (N[1] * w) @ N[1].T * h
    S = (N[2] * w) @ N[2].T * h
    C = (N[0] * w) @ N[2].T * h  # C[i, j] = int N_j'' N_i
    return M, G, S, C


def element_matrices(hx, hy, nu):
    """(bending, mass) 16x16 element matrices for the plate form."""
    Mx, Gx, Sx, Cx = _hermite_1d(hx)
    My, Gy, Sy, Cy = _hermite_1d(hy)
    K = (np.kron(Sx, My) + np.kron(Mx, Sy) + nu * (np.kron(Cx, Cy.T) + np.kron(Cx.T, Cy))
         + 2 * (1 - nu) * np.kron(Gx, Gy))
    return K, np.kron(Mx, My)


def _assemble(mesh: StripMesh, Ke):
    dofs = mesh.element_dofs
    rows = np.repeat(dofs, 16, axis=1).ravel()
    cols = np.tile(dofs, (1, 16)).ravel()
    data = np.tile(Ke.ravel(), dofs.shape[0])
    A = sp.coo_matrix((data, (rows, cols)), shape=(mesh.n_dofs, mesh.n_dofs)).tocsr()
    A.sum_duplicates()
    return A


def essential_dofs(mesh: StripMesh, bc, ends: str = "dtn"):
    """Constrained dofs: walls per bc; ends clamped when ``ends == 'clamped'``."""
    bc = parse_bc(bc)
    i = np.arange(mesh.nx + 1)
    wall_nodes = np.concatenate([mesh.node(i, 0), mesh.node(i, mesh.ny)])
    types = (0, 1) if bc is BC.SIMPLY else (0, 1, 2, 3)
    out = [N_NODE_DOFS * wall_nodes + t for t in types]
    if ends == "clamped":
        j = np.arange(mesh.ny + 1)
        end_nodes = np.concatenate([mesh.node(0, j), mesh.node(mesh.nx, j)])
        out += [N_NODE_DOFS * end_nodes + t for t in range(4)]
    elif ends not in ("dtn", "free"):
        raise ValueError(f"unknown end condition {ends!r}")
    return np.unique(np.concatenate(out))


# ---------------------------------------------------------------------------
# DtN coupling


def edge_mode_matrix(ny: int, p_max: int):
    """Theta[p-1, j] = int N_j(y) theta_p(y) dy over the 1D Hermite basis on (0, 1).

    Quadrature: max(8, p_max + 4) Gauss points per element.
    """
    hy = 1.0 / ny
    xi, w = gauss_legendre(max(8, p_max + 4))
    N = hermite_cubic(xi, hy)
    ys = (np.arange(ny)[:, None] + xi[None, :]) * hy  # (ny, q)
    out = np.zeros((p_max, 2 * (ny + 1)))
    for p in range(1, p_max + 1):
        th = theta(p, ys) * w[None, :] * hy  # (ny, q)
        contrib = th @ N.T  # (ny, 4)
        for a in range(4):
            np.add.at(out[p - 1], 2 * np.arange(ny) + a, contrib[:, a])
    return out


def edge_trace_operators(mesh: StripMesh, side: str, p_max: int):
    """Sparse (p_max, n_dofs) maps from dofs to g_p and h_p on one end.

    h_p uses the outward normal derivative: +d/dx on the right, -d/dx on the left.
    """
    Th = edge_mode_matrix(mesh.ny, p_max)
    i = 0 if side == "left" else mesh.nx
    sign = -1.0 if side == "left" else 1.0
    nodes = mesh.node(i, np.arange(mesh.ny + 1))
    # 1D dof 2j <-> value at node j, 2j+1 <-> y-slope
    g_cols = np.empty(2 * (mesh.ny + 1), dtype=int)
    g_cols[0::2] = N_NODE_DOFS * nodes + 0
    g_cols[1::2] = N_NODE_DOFS * nodes + 2
    h_cols = np.empty_like(g_cols)
    h_cols[0::2] = N_NODE_DOFS * nodes + 1
    h_cols[1::2] = N_NODE_DOFS * nodes + 3
    shape = (p_max, mesh.n_dofs)
    G = sp.csr_matrix((Th.ravel(), (np.repeat(np.arange(p_max), Th.shape[1]), np.tile(g_cols, p_max))),
                      shape=shape)
    H = sp.csr_matrix((sign * Th.ravel(), (np.repeat(np.arange(p_max), Th.shape[1]),
                                           np.tile(h_cols, p_max))), shape=shape)
    return G, H


def assemble_dtn_coupling(mesh: StripMesh, k, nu, p_max: int = 20):
    """Matrix of t(N_j, N_i) summed over both ends (complex symmetric, low rank)."""
    T = dtn_matrices(p_max, k, nu)
    total = sp.csr_matrix((mesh.n_dofs, mesh.n_dofs), dtype=complex)
    for side in ("left", "right"):
        G, H = edge_trace_operators(mesh, side, p_max)
        D11, D12, D22 = (sp.diags(T[:, a, b]) for a, b in ((0, 0), (0, 1), (1, 1)))
        total = total + (G.T @ D11 @ G + G.T @ D12 @ H + H.T @ D12 @ G + H.T @ D22 @ H)
    return total.tocsr()


# ---------------------------------------------------------------------------
# assembled system


def nested_dissection_order(mesh: StripMesh, free: np.ndarray, leaf: int = 6) -> np.ndarray:
    """Permutation of the reduced dofs: recursive bisection of the node grid.

    Interior node boxes are split by a grid line of nodes, which separates
    them for C1 bicubic coupling. The two end columns, densely coupled by the
    DtN terms, are ordered last.
    """
    order = []

    def rec(i0, i1, j0, j1):
        if i1 < i0 or j1 < j0:
            return
        if (i1 - i0 + 1) * (j1 - j0 + 1) <= leaf * leaf:
            ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
            order.append(mesh.node(ii.ravel(), jj.ravel()))
            return
        if i1 - i0 >= j1 - j0:
            m = (i0 + i1) // 2
            rec(i0, m - 1, j0, j1)
            rec(m + 1, i1, j0, j1)
            order.append(mesh.node(np.full(j1 - j0 + 1, m), np.arange(j0, j1 + 1)))
        else:
            m = (j0 + j1) // 2
            rec(i0, i1, j0, m - 1)
            rec(i0, i1, m + 1, j1)
            order.append(mesh.node(np.arange(i0, i1 + 1), np.full(i1 - i0 + 1, m)))

    rec(1, mesh.nx - 1, 0, mesh.ny)
    j = np.arange(mesh.ny + 1)
    order += [mesh.node(np.zeros_like(j), j), mesh.node(np.full_like(j, mesh.nx), j)]
    nodes = np.concatenate(order)
    dofs = (N_NODE_DOFS * nodes[:, None] + np.arange(N_NODE_DOFS)).ravel()
    pos = np.full(mesh.n_dofs, -1)
    pos[free] = np.arange(len(free))
    perm = pos[dofs]
    return perm[perm >= 0]


class _PermutedLU:
    """LU of P A P^T with refinement against the unpermuted matrix A."""

    def __init__(self, lu, perm, matrix, refine: int = 3):
        self.lu, self.perm, self.matrix, self.refine = lu, perm, matrix, refine

    def _raw(self, b):
        out = np.empty_like(b)
        out[self.perm] = self.lu.solve(np.ascontiguousarray(b[self.perm]))
        return out

    def solve(self, b):
        b = np.asarray(b, dtype=complex)
        x = self._raw(b)
        for _ in range(self.refine):
            x = x + self._raw(b - self.matrix @ x)
        return x


@dataclass
class AssembledSystem:
    mesh: StripMesh
    bc: BC
    k: float
    nu: float
    matrix: sp.csr_matrix  # on free dofs
    free: np.ndarray
    bending: sp.csr_matrix  # full-size a(.,.)
    mass: sp.csr_matrix  # full-size (.,.)
    coupling: sp.csr_matrix | None  # full-size t(.,.)
    rhs: np.ndarray | None = None
    _lu: object = field(default=None, repr=False)

    def restrict(self, full):
        return np.asarray(full)[self.free]

    def expand(self, reduced):
        reduced = np.asarray(reduced)
        out = np.zeros((self.mesh.n_dofs,) + reduced.shape[1:], dtype=complex)
        out[self.free] = reduced
        return out

    def factorize(self):
        """Sparse LU of the reduced matrix, reused for every right-hand side.

        The matrix is permuted by a geometric nested dissection and factored
        without pivoting, which keeps fill near optimal on this grid; solves
        apply iterative refinement. Zero pivots fall back to pivoted COLAMD.
        """
        if self._lu is None:
            perm = nested_dissection_order(self.mesh, self.free)
            A = self.matrix[perm][:, perm].tocsc()
            try:
                lu = spla.splu(A, permc_spec="NATURAL", diag_pivot_thresh=0.0,
                               options={"SymmetricMode": True})
            except RuntimeError:
                perm = np.arange(self.matrix.shape[0])
                try:
                    lu = spla.splu(self.matrix.tocsc(), permc_spec="COLAMD")
                except RuntimeError as exc:
                    raise SingularSystem(f"factorization failed: {exc}") from exc
            self._lu = _PermutedLU(lu, perm, self.matrix)
        return self._lu


def assemble_plate(mesh: StripMesh, nu, k, bc=BC.SIMPLY, ends: str = "dtn", p_max: int = 20):
    """Full operator a - k^4 (.,.) - t on the free dofs of the mesh."""
    if not 0 <= nu < 1:
        raise ValidationError("Poisson ratio must lie in [0, 1)")
    bc = parse_bc(bc)
    Ke, Me = element_matrices(mesh.hx, mesh.hy, nu)
    K = _assemble(mesh, Ke)
    M = _assemble(mesh, Me)
    A = (K - float(k) ** 4 * M).astype(complex)
    C = None
    if ends == "dtn":
        C = assemble_dtn_coupling(mesh, k, nu, p_max)
        A = A - C
    fixed = essential_dofs(mesh, bc, ends)
    free = np.setdiff1d(mesh.active_dofs, fixed)
    Ared = A[free][:, free].tocsr()
    return AssembledSystem(mesh, bc, float(k), float(nu), Ared, free, K, M, C)


def load_vector(mesh: StripMesh, f, x_range=None, order: int = 6):
    """Full load vector int f N_i over active elements (optionally those meeting x_range)."""
    ex, ey = mesh.active_elements
    dofs = mesh.element_dofs
    if x_range is not None:
        a, b = x_range
        xl = -mesh.L + ex * mesh.hx
        keep = (xl + mesh.hx > a) & (xl < b)
        ex, ey, dofs = ex[keep], ey[keep], dofs[keep]
    xi, w = gauss_legendre(order)
    Nx = hermite_cubic(xi, mesh.hx)
    Ny = hermite_cubic(xi, mesh.hy)
    out = np.zeros(mesh.n_dofs, dtype=complex)
    if ex.size == 0:
        return out
    X = -mesh.L + (ex[:, None] + xi[None, :]) * mesh.hx  # (ne, q)
    Y = (ey[:, None] + xi[None, :]) * mesh.hy
    vals = np.asarray(f(X[:, :, None], Y[:, None, :]), dtype=complex)  # (ne, qx, qy)
    vals = vals * (w[:, None] * w[None, :]) * mesh.hx * mesh.hy
    # contract against Nx (4, qx) and Ny (4, qy)
    loc = np.einsum("eab,ia,jb->eij", vals, Nx, Ny).reshape(ex.size, 16)
    np.add.at(out, dofs.ravel(), loc.ravel())
    return out


@dataclass
class PlateField:
    """Finite-element field: full dof vector (u, u_x, u_y, u_xy per node)."""

    mesh: StripMesh
    dofs: np.ndarray
    bc: BC = BC.SIMPLY
    residual: float = 0.0

    def derivative(self, x, y, dx: int = 0, dy: int = 0):
        m = self.mesh
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        shape = x.shape
        x, y = x.ravel(), y.ravel()
        ex = np.clip(np.floor((x + m.L) / m.hx).astype(int), 0, m.nx - 1)
        ey = np.clip(np.floor(y / m.hy).astype(int), 0, m.ny - 1)
        xi = (x + m.L) / m.hx - ex
        zeta = y / m.hy - ey
        Nx = hermite_cubic(xi, m.hx, dx)
        Ny = hermite_cubic(zeta, m.hy, dy)
        out = np.zeros(x.shape, dtype=complex)
        for ax in range(4):
            for ay in range(4):
                node = m.node(ex + ax // 2, ey + ay // 2)
                d = self.dofs[N_NODE_DOFS * node + (ax % 2) + 2 * (ay % 2)]
                out += Nx[ax] * Ny[ay] * d
        out[m.in_hole(x, y)] = np.nan
        return out.reshape(shape)

    def __call__(self, x, y):
        return self.derivative(x, y)

    def modal_traces(self, side: str, p_max: int) -> TraceCoefficients:
        G, H = edge_trace_operators(self.mesh, side, p_max)
        return TraceCoefficients(side, G @ self.dofs, H @ self.dofs)

    def to_csv(self, path, nx: int = 101, ny: int = 21):
        xs = np.linspace(-self.mesh.L, self.mesh.L, nx)
        ys = np.linspace(0.0, 1.0, ny)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        U = self.derivative(X, Y)
        write_field_csv(path, X.ravel(), Y.ravel(), U.ravel())


def write_field_csv(path, x, y, u):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y,re_u,im_u\n")
        for a, b, c in zip(x, y, u):
            fh.write(f"{a:.12g},{b:.12g},{c.real:.12g},{c.imag:.12g}\n")


def solve(system: AssembledSystem, rhs_full=None, tol: float = 1e-10) -> PlateField:
    """Sparse direct solve; the relative residual must stay below ``tol``."""
    b_full = system.rhs if rhs_full is None else rhs_full
    fields = solve_many(system, np.asarray(b_full)[:, None], tol)
    return fields[0]


def solve_many(system: AssembledSystem, rhs_full, tol: float = 1e-10):
    """Solve several right-hand sides (columns) against one factorization."""
    lu = system.factorize()
    B = system.restrict(rhs_full).astype(complex)
    X = lu.solve(B) if B.shape[1] > 0 else B
    out = []
    for j in range(B.shape[1]):
        b = B[:, j]
        nb = np.linalg.norm(b)
        if not np.all(np.isfinite(X[:, j])):
            raise SingularSystem("non-finite solution: singular or near-singular system")
        res = np.linalg.norm(system.matrix @ X[:, j] - b) / nb if nb > 0 else 0.0
        if res > tol:
            raise SingularSystem(f"relative residual {res:.2e} exceeds {tol:.0e}")
        out.append(PlateField(system.mesh, system.expand(X[:, j]), system.bc, float(res)))
    return out


def export_matrix(system: AssembledSystem, path):
    """Matrix Market dump of the reduced system matrix."""
    from scipy.io import mmwrite

    mmwrite(path, system.matrix)


# ---------------------------------------------------------------------------
# boundary operators and norms


EDGE_NORMALS = {"bottom": ("y", -1.0), "top": ("y", 1.0), "left": ("x", -1.0), "right": ("x", 1.0)}


def boundary_operators(field, edge, s, nu, position=None):
    """(Mu, Nu) along a straight edge.

    ``edge`` is one of bottom/top/left/right (position defaults to the strip
    or mesh boundary) and ``s`` are the tangential coordinates of the samples.
    Mu = u_nn + nu u_ss and Nu = -(u_nnn + (2 - nu) u_nss).
    """
    axis, sign = EDGE_NORMALS[edge]
    if position is None:
        if axis == "y":
            position = 0.0 if edge == "bottom" else 1.0
        else:
            L = field.mesh.L
            position = -L if edge == "left" else L
    s = np.asarray(s, dtype=float)
    if axis == "y":
        pts = (s, np.full_like(s, position))
        d = lambda n, t: field.derivative(*pts, t, n)  # noqa: E731
    else:
        pts = (np.full_like(s, position), s)
        d = lambda n, t: field.derivative(*pts, n, t)  # noqa: E731
    Mu = d(2, 0) + nu * d(0, 2)
    Nu = -(sign * d(3, 0) + (2 - nu) * sign * d(1, 2))
    return Mu, Nu


def h2_errors(field: PlateField, exact, order: int = 5):
    """(|u - u_h|_{H2}, ||u - u_h||_{L2}) over the active elements.

    ``exact(x, y, dx, dy)`` gives partial derivatives of the reference solution.
    """
    m = field.mesh
    ex, ey = m.active_elements
    xi, w = gauss_legendre(order)
    X = -m.L + (ex[:, None, None] + xi[None, :, None]) * m.hx
    Y = (ey[:, None, None] + xi[None, None, :]) * m.hy
    X, Y = np.broadcast_arrays(X, Y)
    W = (w[:, None] * w[None, :])[None] * m.hx * m.hy
    semi = 0.0
    for dx, dy, c in ((2, 0, 1.0), (1, 1, 2.0), (0, 2, 1.0)):
        e = exact(X, Y, dx, dy) - field.derivative(X, Y, dx, dy)
        semi += c * np.sum(W * np.abs(e) ** 2)
    l2 = np.sum(W * np.abs(exact(X, Y, 0, 0) - field.derivative(X, Y)) ** 2)
    return float(np.sqrt(semi)), float(np.sqrt(l2))


def bfs_interpolant(mesh: StripMesh, exact, bc=BC.SIMPLY) -> PlateField:
    """Nodal interpolant using (u, u_x, u_y, u_xy) of an analytic field."""
    X, Y = np.meshgrid(mesh.xs, mesh.ys, indexing="ij")
    dofs = np.zeros(mesh.n_dofs, dtype=complex)
    nodes = mesh.node(*np.meshgrid(np.arange(mesh.nx + 1), np.arange(mesh.ny + 1), indexing="ij"))
    for t, (dx, dy) in enumerate(((0, 0), (1, 0), (0, 1), (1, 1))):
        dofs[N_NODE_DOFS * nodes.ravel() + t] = np.asarray(exact(X, Y, dx, dy)).ravel()
    return PlateField(mesh, dofs, parse_bc(bc))


def hessian_laplacian_integrals(field, x_range, n_panels: int = 16, order: int = 12):
    """(int |u_xx|^2 + 2|u_xy|^2 + |u_yy|^2, int |Delta u|^2) over x_range x (0, 1).

    The two agree when u vanishes on the walls and is compactly supported in x.
    """
    xq, wx = composite_gauss(np.linspace(*x_range, n_panels + 1), order)
    yq, wy = composite_gauss(np.linspace(0.0, 1.0, n_panels + 1), order)
    X, Y = np.meshgrid(xq, yq, indexing="ij")
    W = wx[:, None] * wy[None, :]
    uxx = field.derivative(X, Y, 2, 0)
    uxy = field.derivative(X, Y, 1, 1)
    uyy = field.derivative(X, Y, 0, 2)
    hess = np.sum(W * (np.abs(uxx) ** 2 + 2 * np.abs(uxy) ** 2 + np.abs(uyy) ** 2))
    lap = np.sum(W * np.abs(uxx + uyy) ** 2)
    return float(hess), float(lap)
