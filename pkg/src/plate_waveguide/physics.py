"""Group and phase velocities, and limiting-absorption trajectories of modal exponents.

Time-harmonic plate motion at angular frequency omega has k^2 = omega / c. Along a
propagating branch lam = i eta_p(k) the group velocity is d omega / d eta.
Adding damping gamma > 0 replaces k^4 by k^4 + i gamma / c^2, which moves every
propagating exponent off the imaginary axis. The side it moves to picks out the
outgoing modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContinuationLost, NotPropagating, ValidationError
from .clamped_strip import section_form
from .fields import ModalField
from .spectrum import SearchRegion, complex_exponents, propagating_etas
from .transverse import BC, det_dispersion, mode_profile, parse_bc


@dataclass(frozen=True)
class WaveSpeed:
    """c = sqrt(D / (rho h)); k^2 = omega / c."""

    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValidationError("wave speed c must be positive")

    @classmethod
    def from_plate(cls, D, rho, h):
        return cls(float(np.sqrt(D / (rho * h))))

    def omega(self, k):
        return self.c * k * k

    def wavenumber(self, omega):
        return float(np.sqrt(omega / self.c))


def _eta(p, k, bc):
    etas = propagating_etas(k, bc)
    if not 1 <= p <= len(etas):
        raise NotPropagating(f"mode {p} does not propagate at k={k} ({len(etas)} propagating)")
    return float(etas[p - 1])


def _check_c(c):
    if not c > 0:
        raise ValidationError("wave speed c must be positive")


def group_velocity(p: int, k, bc=BC.CLAMPED, c: float = 1.0, direction: int = 1) -> float:
    """d omega / d eta for W_p^{direction}.

    Simply supported: omega = c (eta^2 + pi^2 p^2) gives 2 c eta. Clamped: with the
    flux-normalized profile the same derivative equals 2c / (4 k^2 int |phi|^2).
    """
    _check_c(c)
    bc = parse_bc(bc)
    eta = _eta(p, k, bc)
    if bc is BC.SIMPLY:
        v = 2 * c * eta
    else:
        phi = mode_profile(1j * eta, k, bc)
        v = 2 * c / (4 * k * k * phi.l2_norm_sq())
    return direction * v


def phase_velocity(p: int, k, bc=BC.CLAMPED, c: float = 1.0, direction: int = 1) -> float:
    """omega / (direction * eta_p)."""
    _check_c(c)
    return c * k * k / (direction * _eta(p, k, parse_bc(bc)))


def eta_slope(p: int, k, bc=BC.CLAMPED, h: float = 1e-5) -> float:
    """d eta_p / dk by a fourth-order central difference of the dispersion roots."""
    bc = parse_bc(bc)
    vals = [_eta(p, k + s * h, bc) for s in (-2, -1, 1, 2)]
    return (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)


def group_velocity_fd(p: int, k, bc=BC.CLAMPED, c: float = 1.0, h: float = 1e-5) -> float:
    """d omega / d eta = 2 c k / (d eta / dk) along the numerically traced branch."""
    return 2 * c * k / eta_slope(p, k, bc, h)


def velocity_product(p: int, k, bc=BC.CLAMPED, c: float = 1.0) -> float:
    return phase_velocity(p, k, bc, c) * group_velocity(p, k, bc, c)


def velocity_product_closed_form(p: int, k, bc=BC.CLAMPED, c: float = 1.0) -> float:
    """2 c^2 / (4 eta_p int |phi_p|^2) with the flux-normalized profile."""
    bc = parse_bc(bc)
    eta = _eta(p, k, bc)
    phi = mode_profile(1j * eta, k, bc)
    return 2 * c * c / (4 * eta * phi.l2_norm_sq())


def absorption_slope(p: int, k, bc=BC.CLAMPED, c: float = 1.0) -> float:
    """d(i eta_p^gamma)/d gamma at 0: -(d eta / dk) / (4 c^2 k^3), with d eta/dk = 2 c k / v_g."""
    deta_dk = 2 * c * k / group_velocity(p, k, bc, c)
    return -deta_dk / (4 * c * c * k**3)


# ---------------------------------------------------------------------------
# damped exponents


def _gap(p, k, bc, box: float = 2.0) -> float:
    """Distance from i eta_p to the nearest other exponent."""
    eta = _eta(p, k, bc)
    others = [1j * s * e for i, e in enumerate(propagating_etas(k, bc), start=1)
              for s in (1, -1) if not (i == p and s == 1)]
    region = SearchRegion(2 * k + 10, 0.2, (-box, box, eta - box, eta + box))
    others += [m.lam for m in complex_exponents(k, bc, region)
               if m.lam.real != 0 or abs(m.lam.imag - eta) > 1e-9]
    d = [abs(z - 1j * eta) for z in others if abs(z - 1j * eta) > 1e-9]
    return float(min(d + [box]))


def _newton(f, z, tol=1e-12, maxiter=50):
    for _ in range(maxiter):
        h = 1e-6 * (1 + abs(z))
        fz = f(z)
        d = (f(z + h) - f(z - h)) / (2 * h)
        step = fz / d
        z = z - step
        if abs(step) <= tol * max(1.0, abs(z)):
            return z
    return z


def damped_exponent(p: int, k, gamma, bc=BC.CLAMPED, c: float = 1.0, *, trust: float | None = None):
    """i eta_p^gamma: root of det(lam; k^4 + i gamma / c^2) continued from i eta_p.

    Continuation runs through gamma 10^{-j}, j = J..0, each step seeded by a
    first-order predictor; leaving the trust radius raises ContinuationLost.
    """
    _check_c(c)
    bc = parse_bc(bc)
    if gamma < 0 or gamma > 0.1 * c * c * k**4:
        raise ValidationError("damping must satisfy 0 <= gamma <= 0.1 c^2 k^4")
    lam0 = 1j * _eta(p, k, bc)
    if gamma == 0:
        return lam0
    if trust is None:
        trust = 0.5 * _gap(p, k, bc)
    steps = int(max(0, np.ceil(np.log10(gamma / (1e-10 * c * c * k**4)))))
    lam, prev_g = lam0, 0.0
    for j in range(steps, -1, -1):
        g = gamma * 10.0 ** (-j)
        k4 = k**4 + 1j * g / (c * c)
        seed = lam if prev_g == 0 else lam0 + (lam - lam0) * g / prev_g
        lam = _newton(lambda z: det_dispersion(z, k, bc, k4=k4), seed)
        if abs(lam - lam0) > trust or not np.isfinite(lam):
            raise ContinuationLost(f"continuation of mode {p} left the trust radius {trust:.3g} "
                                   f"at gamma={g:.3g}")
        prev_g = g
    return complex(lam)


@dataclass(frozen=True)
class AbsorptionTrajectory:
    p: int
    k: float
    gammas: np.ndarray
    eta_gamma: np.ndarray  # lam / i
    limit: float
    gap: float

    @property
    def close_gap(self) -> bool:
        return self.gap < 1e-3

    @property
    def lambdas(self) -> np.ndarray:
        return 1j * self.eta_gamma

    def decaying(self) -> bool:
        return bool(np.all(self.lambdas.real < 0))

    def monotone(self) -> bool:
        """Distance to the limit decreases as gamma decreases."""
        order = np.argsort(self.gammas)[::-1]
        dist = np.abs(self.eta_gamma[order] - self.limit)
        return bool(np.all(np.diff(dist) < 0))

    def rows(self):
        return [(float(g), float(l.real), float(l.imag)) for g, l in zip(self.gammas, self.lambdas)]


def absorption_trajectory(p: int, k, gammas, bc=BC.CLAMPED, c: float = 1.0) -> AbsorptionTrajectory:
    bc = parse_bc(bc)
    gap = _gap(p, k, bc)
    lams = [damped_exponent(p, k, g, bc, c, trust=0.5 * gap) for g in gammas]
    return AbsorptionTrajectory(p, float(k), np.asarray(gammas, dtype=float),
                                np.array(lams) / 1j, _eta(p, k, bc), gap)


def flux_velocity_sign(p: int, k, bc=BC.CLAMPED, direction: int = 1, side: int = 1) -> int:
    """Sign of i q(chi^side w_p^dir, chi^side w_p^dir), evaluated on one cross-section."""
    bc = parse_bc(bc)
    lam = 1j * direction * _eta(p, k, bc)
    w = ModalField().add(1.0, lam, mode_profile(lam, k, bc))
    q = section_form(w, w, 3.0 * side, side)
    return int(np.sign((1j * q).real))
