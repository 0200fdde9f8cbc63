import sys
from pathlib import Path

import numpy as np
import pytest
import scipy.io
import scipy.linalg as sla
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

sys.path.insert(0, str(Path(__file__).resolve().parent))
from symbolic import X, Y, bilaplacian, sym_field, sym_function  # noqa: E402

from plate_waveguide.clamped_strip import SourceTerm  # noqa: E402
from plate_waveguide.dtn import form_t  # noqa: E402
from plate_waveguide.errors import ValidationError  # noqa: E402
from plate_waveguide.fem import (  # noqa: E402
    Hole, PlateField, StripMesh, _assemble, _hermite_1d, assemble_dtn_coupling, assemble_plate,
    bfs_interpolant, boundary_operators, edge_mode_matrix, edge_trace_operators, element_matrices,
    essential_dofs, export_matrix, h2_errors, hessian_laplacian_integrals, load_vector, solve,
    solve_many)
from plate_waveguide.fields import ModalField, sine_profile  # noqa: E402
from plate_waveguide.numerics import composite_gauss  # noqa: E402
from plate_waveguide.transverse import BC, theta  # noqa: E402

NU = 0.3


def _element_quadrature(mesh, order=8):
    xq, wx = composite_gauss(mesh.xs, order)
    yq, wy = composite_gauss(mesh.ys, order)
    Xq, Yq = np.meshgrid(xq, yq, indexing="ij")
    return Xq, Yq, wx[:, None] * wy[None, :]


def _plate_energy(field, nu, mesh):
    Xq, Yq, W = _element_quadrature(mesh)
    uxx, uxy, uyy = (field.derivative(Xq, Yq, a, b) for a, b in ((2, 0), (1, 1), (0, 2)))
    hess = np.abs(uxx) ** 2 + 2 * np.abs(uxy) ** 2 + np.abs(uyy) ** 2
    return float(np.sum(W * (nu * np.abs(uxx + uyy) ** 2 + (1 - nu) * hess))), float(np.sum(W * hess))


# ---------------------------------------------------------------------------
# element and assembled forms


def test_bubble_energy_matches_quadrature_oracle():
    mesh = StripMesh(1.0, 4, 4)
    Ke, _ = element_matrices(mesh.hx, mesh.hy, 0.0)
    K = _assemble(mesh, Ke)
    for t in range(4):  # u, u_x, u_y, u_xy shape at an interior node
        dofs = np.zeros(mesh.n_dofs)
        dofs[4 * mesh.node(2, 2) + t] = 1.0
        a = dofs @ K @ dofs
        _, hess = _plate_energy(PlateField(mesh, dofs), 0.0, mesh)
        assert abs(a - hess) < 1e-12 * hess


def test_random_field_energy_and_coercivity(rng):
    mesh = StripMesh(1.0, 6, 4)
    Ke, _ = element_matrices(mesh.hx, mesh.hy, NU)
    K = _assemble(mesh, Ke)
    for _ in range(3):
        dofs = rng.standard_normal(mesh.n_dofs) + 1j * rng.standard_normal(mesh.n_dofs)
        a = np.conj(dofs) @ K @ dofs
        energy, hess = _plate_energy(PlateField(mesh, dofs), NU, mesh)
        assert abs(a.imag) < 1e-10 * abs(a)
        assert abs(a.real - energy) < 1e-11 * energy
        assert a.real >= (1 - NU) * hess * (1 - 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(0.05, 2.0), st.floats(0.0, 0.49),
       st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_element_matrices_symmetric_psd_with_affine_kernel(hx, hy, nu, a, b, c):
    K, M = element_matrices(hx, hy, nu)
    assert np.allclose(K, K.T, atol=1e-12 * np.max(np.abs(K)))
    assert np.min(np.linalg.eigvalsh(K)) > -1e-9 * np.max(np.abs(K))
    assert np.min(np.linalg.eigvalsh(M)) > 0
    v = np.empty(16)
    for ax in range(4):
        for ay in range(4):
            x, y = (ax // 2) * hx, (ay // 2) * hy
            dx, dy = ax % 2, ay % 2
            v[4 * ax + ay] = {(0, 0): a + b * x + c * y, (1, 0): b, (0, 1): c, (1, 1): 0.0}[(dx, dy)]
    assert np.linalg.norm(K @ v) < 1e-9 * np.max(np.abs(K)) * max(1.0, np.linalg.norm(v))


def _poincare_ratio(n):
    mesh = StripMesh(1.0, 2 * n, n)
    M1, G1, S1, _ = _hermite_1d(mesh.hx)
    M2, G2, S2, _ = _hermite_1d(mesh.hy)
    semi = _assemble(mesh, np.kron(S1, M2) + np.kron(M1, S2) + 2 * np.kron(G1, G2))
    grad = _assemble(mesh, np.kron(G1, M2) + np.kron(M1, G2))
    mass = _assemble(mesh, np.kron(M1, M2))
    free = np.setdiff1d(mesh.active_dofs, essential_dofs(mesh, BC.SIMPLY, "free"))
    A = semi[free][:, free].toarray()
    B = (semi + grad + mass)[free][:, free].toarray()
    return sla.eigh(A, B, eigvals_only=True, subset_by_index=[0, 0])[0]


def test_discrete_poincare_stable():
    r = [_poincare_ratio(n) for n in (4, 8, 16)]
    assert min(r) > 0.5
    assert abs(r[1] - r[2]) < 0.02 * r[2]


# ---------------------------------------------------------------------------
# DtN coupling


def test_edge_mode_matrix_matches_adaptive_quadrature():
    from plate_waveguide.transverse import hermite_cubic

    ny, p_max = 5, 7
    Th = edge_mode_matrix(ny, p_max)
    h = 1.0 / ny
    for p in (1, 4, 7):
        for j in range(2 * (ny + 1)):
            node, slope = divmod(j, 2)
            total = 0.0
            for e in (node - 1, node):
                if not 0 <= e < ny:
                    continue
                a = 2 * (node - e) + slope  # local index within element e
                f = lambda y: hermite_cubic(np.array([(y - e * h) / h]), h)[a, 0] * theta(p, y)  # noqa
                total += quad(f, e * h, (e + 1) * h, epsabs=1e-15, epsrel=1e-13, limit=200)[0]
            assert abs(Th[p - 1, j] - total) < 1e-13


def test_traces_of_affine_times_theta1():
    exact = lambda x, y, dx, dy: (  # noqa: E731
        (np.where(dx == 0, 2 + 0.5 * x, 0.5) if dx < 2 else 0 * x) * theta_d(y, dy))
    theta_d = lambda y, d: sine_profile(1)(y, d)  # noqa: E731
    errs = []
    for ny in (10, 20, 40):
        mesh = StripMesh(1.0, 4, ny)
        field = bfs_interpolant(mesh, exact)
        for side, x in (("left", -1.0), ("right", 1.0)):
            tc = field.modal_traces(side, 6)
            # the operator is exact quadrature of the discrete trace
            y, w = composite_gauss(mesh.ys, 8)
            direct = np.array([np.sum(w * field.derivative(np.full_like(y, x), y) * theta(p, y))
                               for p in range(1, 7)])
            assert np.max(np.abs(tc.g - direct)) < 1e-13
            errs.append(max(abs(tc.g[0] - (2 + 0.5 * x)), np.max(np.abs(tc.g[1:]))))
    errs = np.array(errs).reshape(3, 2).max(axis=1)
    assert errs[-1] < 1e-6 and np.all(errs[:-1] / errs[1:] > 10)


def test_coupling_complex_symmetric():
    mesh = StripMesh(1.0, 8, 6)
    C = assemble_dtn_coupling(mesh, 5.0, NU, 10)
    assert abs(C - C.T).max() < 1e-14 * abs(C).max()


def test_energy_identity(rng):
    mesh = StripMesh(1.0, 8, 8)
    system = assemble_plate(mesh, NU, 5.0, BC.SIMPLY, "dtn", p_max=12)
    for _ in range(5):
        u = rng.standard_normal(len(system.free)) + 1j * rng.standard_normal(len(system.free))
        lhs = (np.conj(u) @ (system.matrix @ u)).imag
        full = system.expand(u)
        sides = [field_traces(mesh, full, s, 12) for s in ("left", "right")]
        t = form_t(sides, 5.0, NU).value
        assert abs(lhs + t.imag) < 1e-10 * max(1.0, abs(t))


def field_traces(mesh, dofs, side, p_max):
    from plate_waveguide.dtn import TraceCoefficients

    G, H = edge_trace_operators(mesh, side, p_max)
    return TraceCoefficients(side, G @ dofs, H @ dofs)


def test_full_matrix_complex_symmetric_with_hole():
    mesh = StripMesh(1.5, 30, 10, Hole(-0.3, 0.4, 0.3, 0.7))
    A = assemble_plate(mesh, NU, 5.0).matrix
    assert abs(A - A.T).max() < 1e-14 * abs(A).max()


# ---------------------------------------------------------------------------
# solves


def test_zero_source_zero_solution():
    mesh = StripMesh(1.0, 10, 5)
    system = assemble_plate(mesh, NU, 5.0)
    field = solve(system, np.zeros(mesh.n_dofs))
    assert np.max(np.abs(field.dofs)) == 0


def test_low_frequency_bump_decay():
    mesh = StripMesh(3.0, 120, 20)
    system = assemble_plate(mesh, NU, 1.0, BC.SIMPLY, "dtn")
    bump = SourceTerm.bump(0.0, 0.5)
    field = solve(system, load_vector(mesh, bump, (-0.5, 0.5)))
    assert field.residual < 1e-10
    # the first sine coefficient holds e^{-beta_1 x} and e^{-gamma_1 x} with opposite signs;
    # their rates are close, so both are recovered by a two-term matrix-pencil fit
    xs = np.linspace(0.8, 2.9, 43)
    y, w = composite_gauss(np.linspace(0, 1, 5), 8)
    g = np.array([np.sum(w * field.derivative(np.full_like(y, x), y) * theta(1, y)) for x in xs])
    rates = np.sort(_pencil_rates(g, xs[1] - xs[0], 2))
    gamma1 = np.sqrt(1 + np.pi**2)
    beta1 = np.sqrt(np.pi**2 - 1)
    assert abs(rates[0] - gamma1) < 0.1 * gamma1
    assert abs(rates[0] - beta1) < 1e-3 * beta1
    assert abs(rates[1] - gamma1) < 1e-3 * gamma1


def _pencil_rates(samples, dx, order):
    """Decay rates of a sum of ``order`` exponentials sampled on a uniform grid."""
    L = len(samples) // 2
    H0 = np.array([samples[i:i + L] for i in range(len(samples) - L)])
    H1 = np.array([samples[i + 1:i + L + 1] for i in range(len(samples) - L)])
    U, s, Vh = np.linalg.svd(H0, full_matrices=False)
    A = np.diag(1 / s[:order]) @ U[:, :order].conj().T @ H1 @ Vh[:order].conj().T
    return -np.log(np.linalg.eigvals(A)).real / dx


def test_solve_many_matches_single_solves():
    mesh = StripMesh(1.0, 12, 6)
    system = assemble_plate(mesh, NU, 5.0)
    f1 = SourceTerm.bump(0.0, 0.4)
    f2 = SourceTerm.bump(0.2, 0.3, p=2)
    B = np.stack([load_vector(mesh, f1), load_vector(mesh, f2)], axis=1)
    many = solve_many(system, B)
    for j, f in enumerate((f1, f2)):
        assert np.allclose(many[j].dofs, solve(system, load_vector(mesh, f)).dofs, atol=1e-13)


def test_hole_solution_and_inactive_dofs():
    mesh = StripMesh(1.5, 30, 10, Hole(-0.3, 0.4, 0.3, 0.7))
    system = assemble_plate(mesh, NU, 5.0)
    field = solve(system, load_vector(mesh, SourceTerm.bump(-1.0, 0.3)))
    assert field.residual < 1e-10
    inactive = np.setdiff1d(np.arange(mesh.n_dofs), mesh.active_dofs)
    assert inactive.size > 0 and np.all(field.dofs[inactive] == 0)


def test_manufactured_clamped_convergence():
    u = sp.sin(sp.pi * Y) ** 2 * sp.sin(sp.pi * (X + 1) / 2) ** 2
    exact = sym_field(u)
    f = sym_function(bilaplacian(u) - 16 * u)
    errs = []
    for n in (4, 8, 16):
        mesh = StripMesh(1.0, 2 * n, n)
        field = solve(assemble_plate(mesh, NU, 2.0, BC.CLAMPED, "clamped"), load_vector(mesh, f))
        errs.append(h2_errors(field, exact.derivative))
    semi = np.array([e[0] for e in errs])
    l2 = np.array([e[1] for e in errs])
    assert np.all(np.log2(semi[:-1] / semi[1:]) >= 1.8)
    assert np.all(np.log2(l2[:-1] / l2[1:]) >= 3.5)


# ---------------------------------------------------------------------------
# boundary operators and identities


def test_boundary_operators_symbolic():
    u = sp.sin(sp.pi * Y) * sp.exp(-X**2) * (1 + X / 3)
    field = sym_field(u)
    s = np.linspace(-0.9, 0.9, 11)
    M, N = boundary_operators(field, "bottom", s, NU)
    d = lambda a, b: sym_function(sp.diff(u, X, a, Y, b))(s, 0 * s)  # noqa: E731
    assert np.allclose(M, d(0, 2) + NU * d(2, 0), atol=1e-13)
    assert np.allclose(N, d(0, 3) + (2 - NU) * d(2, 1), atol=1e-12)
    t = np.linspace(0.1, 0.9, 9)
    M, N = boundary_operators(field, "right", t, NU, position=0.7)
    d = lambda a, b: sym_function(sp.diff(u, X, a, Y, b))(0.7 + 0 * t, t)  # noqa: E731
    assert np.allclose(M, d(2, 0) + NU * d(0, 2), atol=1e-13)
    assert np.allclose(N, -(d(3, 0) + (2 - NU) * d(1, 2)), atol=1e-12)


def test_simply_supported_mode_moment_vanishes_on_walls():
    eta = np.sqrt(25 - np.pi**2)
    mode = ModalField().add(1.0, 1j * eta, sine_profile(1))
    exact = lambda x, y, dx, dy: mode.derivative(x, y, dx, dy)  # noqa: E731
    s = np.linspace(-0.95, 0.95, 41)
    errs = []
    for n in (8, 16, 32):
        field = bfs_interpolant(StripMesh(1.0, 2 * n, n), exact)
        errs.append(max(np.max(np.abs(boundary_operators(field, e, s, NU)[0])) for e in ("bottom", "top")))
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] > 3


_U = (1 - X**2) ** 5 * sp.sin(sp.pi * Y)
_V = (1 - X**2) ** 4 * (1 + X / 2) * sp.sin(2 * sp.pi * Y) * sp.exp(Y)


def test_integration_by_parts_consistency():
    u, v = sym_field(_U), sym_field(_V)
    lap2 = sym_function(bilaplacian(_U))
    errs = []
    for n in (4, 8, 16, 32):
        mesh = StripMesh(1.0, 2 * n, n)
        uh, vh = (bfs_interpolant(mesh, w.derivative) for w in (u, v))
        Ke, _ = element_matrices(mesh.hx, mesh.hy, NU)
        a = (vh.dofs.real @ (_assemble(mesh, Ke) @ uh.dofs.real))
        Xq, Yq, W = _element_quadrature(mesh)
        rhs = np.sum(W * lap2(Xq, Yq) * vh.derivative(Xq, Yq)).real
        errs.append(abs(a - rhs))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.8), orders


@pytest.mark.parametrize("expr", [
    (1 - X**2) ** 5 * sp.sin(sp.pi * Y),
    (1 - X**2) ** 5 * Y * (1 - Y) * sp.exp(Y + X / 3),
    (1 - X**2) ** 6 * sp.sin(3 * sp.pi * Y) * (1 + sp.I * X),
])
def test_hessian_laplacian_identity(expr):
    hess, lap = hessian_laplacian_integrals(sym_field(expr), (-1.0, 1.0))
    assert abs(hess - lap) < 1e-10 * lap


def test_hessian_laplacian_identity_needs_wall_zero():
    # u = (1 + y) g(x) does not vanish on the walls; the wall terms then survive
    hess, lap = hessian_laplacian_integrals(sym_field((1 - X**2) ** 5 * (1 + Y)), (-1.0, 1.0))
    assert abs(hess - lap) > 1e-3 * lap


# ---------------------------------------------------------------------------
# mesh bookkeeping and I/O


@pytest.mark.parametrize("hole", [Hole(-1.6, 0.4, 0.3, 0.7), Hole(-0.3, 0.0, 0.3, 0.7),
                                  Hole(-0.31, 0.4, 0.3, 0.7)])
def test_invalid_holes_rejected(hole):
    with pytest.raises(ValidationError):
        StripMesh(1.5, 30, 10, hole)


def test_hole_parse():
    assert Hole.parse("-0.3,0.4,0.3,0.7") == Hole(-0.3, 0.4, 0.3, 0.7)
    with pytest.raises(ValidationError):
        Hole.parse("1,2,3")
    with pytest.raises(ValidationError):
        Hole.parse("a,b,c,d")


def test_mesh_json_round_trip():
    import json

    mesh = StripMesh(1.5, 30, 10, Hole(-0.3, 0.4, 0.3, 0.7))
    again = StripMesh.from_json(json.dumps(mesh.to_dict()))
    assert again.to_dict() == mesh.to_dict()
    assert np.array_equal(again.active_dofs, mesh.active_dofs)


def test_export_matrix(tmp_path):
    mesh = StripMesh(1.0, 6, 4)
    system = assemble_plate(mesh, NU, 5.0)
    export_matrix(system, tmp_path / "A.mtx")
    B = scipy.io.mmread(str(tmp_path / "A.mtx"))
    assert abs(B - system.matrix).max() < 1e-14 * abs(system.matrix).max()


def test_field_csv(tmp_path):
    mesh = StripMesh(1.0, 6, 4)
    field = bfs_interpolant(mesh, lambda x, y, dx, dy: (x if dx == 0 else 1 + 0 * x) * (1 + 0 * y)
                            if dy == 0 else 0 * x)
    field.to_csv(tmp_path / "u.csv", nx=5, ny=3)
    lines = (tmp_path / "u.csv").read_text().splitlines()
    assert lines[0] == "x,y,re_u,im_u" and len(lines) == 16
    x, y, re, im = (float(v) for v in lines[1].split(","))
    assert (x, y, re, im) == (-1.0, 0.0, -1.0, 0.0)


def test_poisson_ratio_validated():
    with pytest.raises(ValidationError):
        assemble_plate(StripMesh(1.0, 4, 2), 1.0, 5.0)
