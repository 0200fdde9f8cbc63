"""Scattering of propagating modes by a rectangular hole, simply supported walls.

An incident mode u_i is lifted into the truncated domain with a cut-off
zeta(|x|) that vanishes near the hole and equals 1 near the artificial
ends. The scattered part v solves the DtN-truncated problem with volume
source f = -(Delta^2 - k^4)(zeta u_i), and its outgoing amplitudes on each
end are read off from modal traces.

Ordering of the 2n x 2n matrix S (n propagating modes):
  row p       incident w_p^- (travelling towards -x, arriving from +inf)
  row n + p   incident w_p^+ (travelling towards +x, arriving from -inf)
  column m      coefficient of w_m^+ leaving through +inf
  column n + m  coefficient of w_m^- leaving through -inf
Total fields, incident part included, are used on the transmission side,
so the empty strip gives S = [[0, I], [I, 0]].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dtn import TraceCoefficients, amplitudes_from_traces, mode_numbers
from .errors import CutoffOverlapsHole, ValidationError
from .fem import Hole, StripMesh, assemble_plate, load_vector, solve_many
from .fields import ModalField, sine_profile
from .numerics import BandCutoff, gauss_legendre
from .transverse import BC


@dataclass(frozen=True)
class IncidentMode:
    """w_p^{±}(x, y) = eta_p^{-1/2} exp(± i eta_p x) sin(p pi y)."""

    p: int
    direction: int
    k: float

    def __post_init__(self):
        if self.direction not in (1, -1):
            raise ValidationError("direction must be +1 or -1")
        if not 1 <= self.p <= int(np.floor(self.k / np.pi)):
            raise ValidationError(f"mode {self.p} does not propagate at k={self.k}")

    @property
    def eta(self) -> float:
        return float(np.sqrt(self.k**2 - (np.pi * self.p) ** 2))

    @property
    def lam(self) -> complex:
        return 1j * self.direction * self.eta

    def field(self, cutoff=None) -> ModalField:
        return ModalField().add(self.eta**-0.5, self.lam, sine_profile(self.p, 1.0), cutoff)


def default_cutoff(L: float, width: float | None = None, margin: float | None = None) -> BandCutoff:
    """zeta(|x|) rising over [0.9 L - w, 0.9 L] with w = 0.2 L by default."""
    w = 0.2 * L if width is None else width
    eps = 0.1 * L if margin is None else margin
    return BandCutoff(L - eps - w, w, kind="symmetric")


def check_cutoff(zeta: BandCutoff, hole: Hole | None, L: float):
    start, end = zeta.band
    if end > L + 1e-12:
        raise ValidationError("cut-off must reach 1 inside the truncated domain")
    if hole is not None and max(abs(hole.x0), abs(hole.x1)) > start - 1e-12:
        raise CutoffOverlapsHole(f"cut-off band |x| in [{start}, {end}] meets hole {hole}")


def lifted_source(mode: IncidentMode, zeta: BandCutoff | None, k, hole: Hole | None = None):
    """f = -(Delta^2 - k^4)(zeta u_i) as a callable f(x, y); zero when zeta is None (zeta = 1)."""
    if zeta is None:
        return lambda x, y: np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape, complex)
    if hole is not None:
        check_cutoff(zeta, hole, zeta.start + zeta.width)
    op = mode.field(zeta).plate_operator(k)
    return lambda x, y: -op(x, y)


def outgoing_amplitudes(traces, k):
    """(a_p, b_p) of the outgoing expansion from modal traces on one end."""
    return amplitudes_from_traces(traces.g, traces.h, k)


def section_traces(field, side: str, L: float, p_max: int, n_gauss: int = 64) -> TraceCoefficients:
    """Sine coefficients of u and of the outward x-derivative of u at x = +-L, by Gauss quadrature."""
    if side not in ("left", "right"):
        raise ValidationError("side must be 'left' or 'right'")
    s = 1.0 if side == "right" else -1.0
    y, w = gauss_legendre(n_gauss)
    x = np.full_like(y, s * L)
    u = np.asarray(field.derivative(x, y), dtype=complex)
    un = s * np.asarray(field.derivative(x, y, dx=1), dtype=complex)
    basis = np.sqrt(2.0) * np.sin(np.pi * np.outer(np.arange(1, p_max + 1), y))
    return TraceCoefficients(side, basis @ (w * u), basis @ (w * un))


def extract_outgoing(field, side: str, k, n: int, p_max: int | None = None, L: float | None = None):
    """Propagating outgoing amplitudes a_1..a_n on one end.

    Finite-element fields supply their own modal traces; any other field is
    sampled on the section x = +-L, which must then be given.
    """
    p_max = max(n, 1) if p_max is None else p_max
    if hasattr(field, "modal_traces"):
        traces = field.modal_traces(side, p_max)
    elif L is None:
        raise ValidationError("section position L is required for fields without modal traces")
    else:
        traces = section_traces(field, side, L, p_max)
    a, _ = outgoing_amplitudes(traces, k)
    return a[:n]


@dataclass
class ScatteringMatrix:
    k: float
    n: int
    S: np.ndarray
    residuals: list = field(default_factory=list)

    @property
    def unitarity_defect(self) -> float:
        return float(np.linalg.norm(self.S @ self.S.conj().T - np.eye(2 * self.n)))

    @property
    def symmetry_defect(self) -> float:
        return float(np.linalg.norm(self.S - self.S.T))

    def column_energy(self) -> np.ndarray:
        return np.sum(np.abs(self.S) ** 2, axis=0)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "S_re": self.S.real.tolist(),
            "S_im": self.S.imag.tolist(),
            "unitarity_defect": self.unitarity_defect,
            "symmetry_defect": self.symmetry_defect,
            "max_residual": max(self.residuals) if self.residuals else 0.0,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def scattering_matrix(k, L: float = 1.5, nx: int = 160, ny: int = 40, hole: Hole | None = None,
                      nu: float = 0.3, p_max: int = 20, zeta: BandCutoff | None = None,
                      quad_order: int = 6) -> ScatteringMatrix:
    """Scattering matrix of the truncated strip, one factorization for all 2n incidences."""
    n = int(np.floor(k / np.pi))
    if n < 1:
        raise ValidationError(f"no propagating mode at k={k}")
    if abs(k - n * np.pi) < 1e-9:
        raise ValidationError(f"k={k} is a threshold")
    mesh = StripMesh(L, nx, ny, hole)
    zeta = default_cutoff(L) if zeta is None else zeta
    check_cutoff(zeta, hole, L)
    system = assemble_plate(mesh, nu, k, BC.SIMPLY, ends="dtn", p_max=p_max)
    system.factorize()

    incidences = [IncidentMode(p, -1, k) for p in range(1, n + 1)]
    incidences += [IncidentMode(p, +1, k) for p in range(1, n + 1)]
    start, end = zeta.band
    rhs = []
    for mode in incidences:
        f = lifted_source(mode, zeta, k)
        b = load_vector(mesh, f, (start, end), quad_order) + load_vector(mesh, f, (-end, -start),
                                                                         quad_order)
        rhs.append(b)
    fields = solve_many(system, np.array(rhs).T)

    _, eta, _ = mode_numbers(np.arange(1, n + 1), k)
    eta = eta.real
    scale = np.exp(-1j * eta * L) * np.sqrt(2 * eta)
    S = np.zeros((2 * n, 2 * n), dtype=complex)
    for r, (mode, v) in enumerate(zip(incidences, fields)):
        right = extract_outgoing(v, "right", k, n, p_max) * scale
        left = extract_outgoing(v, "left", k, n, p_max) * scale
        if mode.direction == -1:
            left[mode.p - 1] += 1.0
        else:
            right[mode.p - 1] += 1.0
        S[r, :n] = right
        S[r, n:] = left
    return ScatteringMatrix(float(k), n, S, [fl.residual for fl in fields])
