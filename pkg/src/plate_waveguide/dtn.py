"""Dirichlet-to-Neumann blocks for simply supported walls.

On a cross-section x = ±L the trace of a field radiating away from the
domain is expanded as u = sum_p (a_p e^{i eta_p s} + b_p e^{-gamma_p s}) theta_p(y),
with s the outward distance. Modal traces g_p = <u, theta_p> and
h_p = <d_n u, theta_p> determine (a_p, b_p), and the outgoing extension
gives Nu and Mu as a 2x2 linear map T_p of (g_p, h_p). Both ends share T_p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ThresholdWavenumber
from .numerics import sqrt_branch


@dataclass(frozen=True)
class DtnBlock:
    p: int
    mu: float
    eta: complex
    gamma: float
    T: np.ndarray


def mode_numbers(p, k):
    """(mu_p, eta_p, gamma_p); eta_p = i beta_p above cut-off."""
    p = np.asarray(p, dtype=float)
    mu = (np.pi * p) ** 2
    eta = sqrt_branch(k * k - mu)
    gam = np.sqrt(k * k + mu)
    return mu, eta, gam


def dtn_matrices(p_max: int, k, nu):
    """Stack of T_p for p = 1..p_max, shape (p_max, 2, 2)."""
    if not 0 <= nu < 1:
        raise ValueError("Poisson ratio must lie in [0, 1)")
    n = round(k / np.pi)
    if n >= 1 and abs(k - n * np.pi) < 1e-9:
        raise ThresholdWavenumber(f"k={k} is the threshold {n} pi; eta_{n} vanishes")
    mu, eta, gam = mode_numbers(np.arange(1, p_max + 1), k)
    ige = 1j * gam * eta
    T = np.empty((p_max, 2, 2), dtype=complex)
    T[:, 0, 0] = ige * (gam - 1j * eta)
    T[:, 0, 1] = ige - nu * mu
    T[:, 1, 0] = ige - nu * mu
    T[:, 1, 1] = -(gam - 1j * eta)
    return T


def dtn_block(p: int, k, nu) -> DtnBlock:
    mu, eta, gam = mode_numbers(p, k)
    return DtnBlock(int(p), float(mu), complex(eta), float(gam), dtn_matrices(p, k, nu)[p - 1])


def dtn_block_product_form(p: int, k, nu) -> np.ndarray:
    """T_p as (boundary operators of the modes) times (trace-to-amplitude inverse).

    Independent of ``dtn_matrices``; used as a cross-check.
    """
    mu, eta, gam = (complex(v) for v in mode_numbers(p, k))
    ops = np.array([[1j * eta**3 + 1j * (2 - nu) * mu * eta, gam**3 - (2 - nu) * mu * gam],
                    [-(eta**2 + nu * mu), gam**2 - nu * mu]])
    inv = np.array([[gam, 1], [1j * eta, -1]]) / (gam + 1j * eta)
    return ops @ inv


@dataclass
class TraceCoefficients:
    """Modal traces on one end: g_p = <u, theta_p>, h_p = <d_n u, theta_p>."""

    side: str
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        self.g = np.asarray(self.g, dtype=complex)
        self.h = np.asarray(self.h, dtype=complex)
        if self.g.shape != self.h.shape:
            raise ValueError("g and h must have equal length")

    @property
    def p_max(self) -> int:
        return len(self.g)


def apply_dtn(tc: TraceCoefficients, k, nu):
    """(N, M) modal coefficients of the outgoing extension's boundary operators."""
    T = dtn_matrices(tc.p_max, k, nu)
    N = T[:, 0, 0] * tc.g + T[:, 0, 1] * tc.h
    M = T[:, 1, 0] * tc.g + T[:, 1, 1] * tc.h
    return N, M


def amplitudes_from_traces(g, h, k):
    """Invert g = a + b, h = i eta a - gamma b for the amplitudes (a_p, b_p)."""
    g = np.asarray(g, dtype=complex)
    h = np.asarray(h, dtype=complex)
    _, eta, gam = mode_numbers(np.arange(1, len(g) + 1), k)
    den = gam + 1j * eta
    return (gam * g + h) / den, (1j * eta * g - h) / den


def traces_from_amplitudes(a, b, k):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    _, eta, gam = mode_numbers(np.arange(1, len(a) + 1), k)
    return a + b, 1j * eta * a - gam * b


@dataclass(frozen=True)
class FormT:
    """t(u, u) with the split -Re t = sum(propagating) + sum(evanescent)."""

    value: complex
    propagating: np.ndarray  # u_p terms, one row per side
    evanescent: np.ndarray  # v_p terms, one row per side
    n_propagating: int


def form_t(sides, k, nu) -> FormT:
    """t(u, u) summed over the supplied TraceCoefficients (one per end)."""
    sides = list(sides)
    p_max = sides[0].p_max
    T = dtn_matrices(p_max, k, nu)
    mu, eta, gam = mode_numbers(np.arange(1, p_max + 1), k)
    n = int(np.count_nonzero(mu < k * k))
    value = 0j
    prop, evan = [], []
    for tc in sides:
        g, h = tc.g, tc.h
        # T is symmetric, so the cross terms pair into a real factor 2 Re(g conj h)
        grh = np.real(g * np.conj(h))
        value += np.sum(T[:, 0, 0] * np.abs(g) ** 2 + 2 * T[:, 0, 1] * grh
                        + T[:, 1, 1] * np.abs(h) ** 2)
        gp, gm = gam[:n], gam[n:]
        ep = eta[:n].real
        bp = eta[n:].imag
        prop.append(-gp * ep**2 * np.abs(g[:n]) ** 2 + gp * np.abs(h[:n]) ** 2
                    + 2 * nu * mu[:n] * grh[:n])
        evan.append(gm * bp * (gm + bp) * np.abs(g[n:]) ** 2 + (gm + bp) * np.abs(h[n:]) ** 2
                    + 2 * (gm * bp + nu * mu[n:]) * grh[n:])
    return FormT(complex(value), np.array(prop), np.array(evan), n)


def im_t_identity(sides, k) -> float:
    """sum over propagating p and both ends of eta_p |gamma_p g_p + h_p|^2."""
    out = 0.0
    for tc in sides:
        mu, eta, gam = mode_numbers(np.arange(1, tc.p_max + 1), k)
        prop = mu < k * k
        out += float(np.sum(eta[prop].real * np.abs(gam[prop] * tc.g[prop] + tc.h[prop]) ** 2))
    return out


def lower_bound_constant(p_max: int, k, nu) -> float:
    """c1^2 with -Re t(u, u) >= -c1^2 sum |g_p|^2.

    Propagating modes contribute gamma eta^2 + nu^2 mu^2 / gamma, evanescent
    ones k^3.
    """
    mu, eta, gam = mode_numbers(np.arange(1, p_max + 1), k)
    prop = mu < k * k
    consts = [k**3] if np.any(~prop) else []
    if np.any(prop):
        consts.append(np.max(gam[prop] * eta[prop].real ** 2 + nu**2 * mu[prop] ** 2 / gam[prop]))
    return float(max(consts)) if consts else 0.0
