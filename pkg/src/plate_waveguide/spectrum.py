"""Modal exponents, threshold wavenumbers and degeneracy checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .errors import ContourThroughZero, Inconclusive, ThresholdWavenumber
from .numerics import sqrt_branch
from .transverse import BC, det_dispersion, h_k_scaled, parse_bc


class ExponentClass(str, Enum):
    PROPAGATING = "propagating"
    REAL_EVANESCENT = "real_evanescent"
    COMPLEX = "complex"
    ZERO = "zero"


@dataclass(frozen=True)
class ModalExponent:
    lam: complex
    kind: ExponentClass
    geom_mult: int = 1
    alg_mult: int = 1
    index: int | None = None

    @property
    def eta(self) -> complex:
        """eta with lam = i eta."""
        return self.lam / 1j


def classify(lam, tol=1e-10) -> ExponentClass:
    lam = complex(lam)
    scale = max(1.0, abs(lam))
    if abs(lam) <= tol:
        return ExponentClass.ZERO
    if abs(lam.real) <= tol * scale:
        return ExponentClass.PROPAGATING
    if abs(lam.imag) <= tol * scale:
        return ExponentClass.REAL_EVANESCENT
    return ExponentClass.COMPLEX


def _snap(lam, tol=1e-10):
    lam = complex(lam)
    scale = max(1.0, abs(lam))
    re = 0.0 if abs(lam.real) <= tol * scale else lam.real
    im = 0.0 if abs(lam.imag) <= tol * scale else lam.imag
    return complex(re, im)


# ---------------------------------------------------------------------------
# thresholds


@dataclass(frozen=True)
class ThresholdTable:
    bc: BC
    values: np.ndarray
    asymptotes: np.ndarray

    def __len__(self):
        return len(self.values)


def _clamped_threshold_fn(k):
    # cos k cosh k = 1 rewritten as cos k = sech k with an overflow-free sech
    e = np.exp(-k)
    return np.cos(k) - 2 * e / (1 + e * e)


def _clamped_threshold_dfn(k):
    e = np.exp(-k)
    sech = 2 * e / (1 + e * e)
    tanh = (1 - e * e) / (1 + e * e)
    return -np.sin(k) + sech * tanh


def safeguarded_newton(f, df, a, b, tol=1e-13, maxiter=100):
    """Newton iteration kept inside a shrinking sign-change bracket [a, b]."""
    fa, fb = f(a), f(b)
    if fa * fb > 0:
        raise ValueError("interval does not bracket a root")
    x = 0.5 * (a + b)
    for _ in range(maxiter):
        fx = f(x)
        if abs(fx) < tol:
            break
        if fa * fx < 0:
            b, fb = x, fx
        else:
            a, fa = x, fx
        d = df(x)
        step = fx / d if d != 0 else np.inf
        xn = x - step
        if not (a < xn < b):
            xn = 0.5 * (a + b)
        if abs(xn - x) < 1e-16 * max(1.0, abs(x)):
            x = xn
            break
        x = xn
    return x


def thresholds(bc=BC.CLAMPED, n_max: int = 5) -> ThresholdTable:
    """Threshold wavenumbers k_1 < ... < k_n_max, where 0 becomes a modal exponent."""
    bc = parse_bc(bc)
    n = np.arange(1, n_max + 1)
    if bc is BC.SIMPLY:
        vals = np.pi * n.astype(float)
        return ThresholdTable(bc, vals, vals.copy())
    vals = np.array([
        safeguarded_newton(_clamped_threshold_fn, _clamped_threshold_dfn,
                           m * np.pi - 1.0, m * np.pi + 2.0)
        for m in n
    ])
    return ThresholdTable(bc, vals, np.pi / 2 + np.pi * n)


def check_not_threshold(k, bc, tol=1e-9):
    bc = parse_bc(bc)
    n = int(k / np.pi) + 2
    table = thresholds(bc, n)
    hit = np.abs(table.values - k) <= tol
    if np.any(hit):
        raise ThresholdWavenumber(f"k={k} is the threshold k_{int(np.argmax(hit)) + 1} "
                                  f"for {bc.value} walls")


def propagating_count(k, bc) -> int:
    """Number of propagating exponents (both signs)."""
    return len(propagating_exponents(k, bc))


# ---------------------------------------------------------------------------
# explicit exponents


def simply_supported_exponents(k, p_max: int):
    """±i eta_p and ±gamma_p for p = 1..p_max, eta_p = sqrt(k^2 - pi^2 p^2)."""
    out = []
    for p in range(1, p_max + 1):
        mu = (np.pi * p) ** 2
        eta = complex(sqrt_branch(k * k - mu))
        gam = np.sqrt(k * k + mu)
        for lam in (1j * eta, -1j * eta):
            out.append(ModalExponent(_snap(lam), classify(lam), 1, 1 if abs(lam) > 0 else 2, p))
        for lam in (gam, -gam):
            out.append(ModalExponent(complex(lam), ExponentClass.REAL_EVANESCENT, 1, 1, p))
    return out


def clamped_propagating(k, n_grid: int = 2048, max_grid: int = 1 << 16):
    """Propagating exponents ±i tau k, from sign changes of h_k on tau in [0, 1].

    Ordered by |lam| (eta_1 < eta_2 < ...), the + sign first for each pair.
    """
    while True:
        tau = np.linspace(0.0, 1.0, n_grid + 1)
        vals = h_k_scaled(tau, k)
        cells = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        exact = np.nonzero(vals == 0)[0]
        adjacent = np.any(np.diff(cells) <= 1) if cells.size > 1 else False
        if not adjacent or n_grid >= max_grid:
            break
        n_grid *= 2
    roots = [brentq(h_k_scaled, tau[c], tau[c + 1], args=(k,), xtol=1e-16, rtol=1e-15)
             for c in cells]
    roots += [tau[e] for e in exact if 0 < tau[e] < 1]
    out = []
    for p, t in enumerate(sorted(roots), start=1):
        for sign in (1, -1):
            out.append(ModalExponent(complex(0.0, sign * t * k), ExponentClass.PROPAGATING, 1, 1, p))
    return out


def propagating_exponents(k, bc):
    bc = parse_bc(bc)
    if bc is BC.CLAMPED:
        return clamped_propagating(k)
    n = int(np.floor(k / np.pi))
    return [e for e in simply_supported_exponents(k, max(n, 1))
            if e.kind is ExponentClass.PROPAGATING]


def propagating_etas(k, bc) -> np.ndarray:
    """Positive eta_p (lam = +i eta_p), indexed p = 1..n in the module's order."""
    return np.array([e.lam.imag for e in propagating_exponents(k, bc) if e.lam.imag > 0])


# ---------------------------------------------------------------------------
# complex exponents by the argument principle


@dataclass(frozen=True)
class SearchRegion:
    """Rectangle to scan plus the bow-tie parameters (rho, delta).

    Cells lying entirely in {|lam| > rho, |Re lam| < delta |Im lam|} are skipped.
    """

    rho: float
    delta: float
    box: tuple  # (re_min, re_max, im_min, im_max)

    def __post_init__(self):
        if self.rho <= 0 or self.delta <= 0:
            raise ValueError("rho and delta must be positive")
        r0, r1, i0, i1 = self.box
        if not (r0 < r1 and i0 < i1):
            raise ValueError("empty search box")

    @classmethod
    def default(cls, k):
        rho = 2 * k + 10
        return cls(rho, 0.2, (-rho, rho, -rho, rho))

    def skips(self, r0, r1, i0, i1) -> bool:
        near = complex(np.clip(0, r0, r1), np.clip(0, i0, i1))
        if abs(near) <= self.rho or i0 <= 0 <= i1:
            return False
        return max(abs(r0), abs(r1)) < self.delta * min(abs(i0), abs(i1))


_SPLIT = 0.5 + 0.0371


def _edge_phase(f, z0, z1, n0=24, max_depth=40):
    """Total argument change of f along the segment [z0, z1]."""
    t = np.linspace(0.0, 1.0, n0 + 1)
    z = z0 + (z1 - z0) * t
    v = f(z)
    if np.any(v == 0) or not np.all(np.isfinite(v)):
        raise ContourThroughZero(f"zero or overflow on segment {z0}->{z1}")
    total = 0.0
    stack = [(z[i], z[i + 1], v[i], v[i + 1], 0) for i in range(n0)]
    while stack:
        # refine every coarse jump in one vectorized batch
        bad, good = [], []
        for seg in stack:
            (bad if abs(np.angle(seg[3] / seg[2])) > np.pi / 4 else good).append(seg)
        total += sum(np.angle(s[3] / s[2]) for s in good)
        if not bad:
            break
        mids = np.array([0.5 * (s[0] + s[1]) for s in bad])
        vm = f(mids)
        if np.any(vm == 0):
            raise ContourThroughZero("contour hits a zero")
        stack = []
        for s, zm, fm in zip(bad, mids, vm):
            depth = s[4] + 1
            if depth > max_depth:
                raise ContourThroughZero(f"cannot resolve phase near {zm}")
            stack.append((s[0], zm, s[2], fm, depth))
            stack.append((zm, s[1], fm, s[3], depth))
    return total


def winding_number(f, r0, r1, i0, i1) -> int:
    c = [complex(r0, i0), complex(r1, i0), complex(r1, i1), complex(r0, i1)]
    total = sum(_edge_phase(f, c[j], c[(j + 1) % 4]) for j in range(4))
    return int(round(total / (2 * np.pi)))


def _newton_complex(f, z, tol=1e-14, maxiter=60):
    for _ in range(maxiter):
        h = 1e-6 * max(1.0, abs(z))
        fz = f(np.array([z]))[0]
        d = (f(np.array([z + h]))[0] - f(np.array([z - h]))[0]) / (2 * h)
        if d == 0 or not np.isfinite(d):
            return z, False
        step = fz / d
        z = z - step
        if abs(step) < tol * max(1.0, abs(z)):
            return z, True
    return z, False


def complex_exponents(k, bc=BC.CLAMPED, region: SearchRegion | None = None,
                      cell_size: float = 2.0, min_size: float = 1e-7):
    """All modal exponents inside the search box, located by the argument principle.

    The box is tiled into cells; cells with nonzero winding number are
    subdivided until each holds a single root, which Newton then polishes.
    Results are sorted by (Re, Im).
    """
    bc = parse_bc(bc)
    if region is None:
        region = SearchRegion.default(k)
    f = lambda z: det_dispersion(z, k, bc)  # noqa: E731
    r0, r1, i0, i1 = region.box
    nr = max(1, int(np.ceil((r1 - r0) / cell_size))) | 1
    ni = max(1, int(np.ceil((i1 - i0) / cell_size))) | 1
    rs = np.linspace(r0, r1, nr + 1)
    is_ = np.linspace(i0, i1, ni + 1)
    queue = [(rs[a], rs[a + 1], is_[b], is_[b + 1]) for a in range(nr) for b in range(ni)]
    found = []
    while queue:
        cell = queue.pop()
        if region.skips(*cell):
            continue
        try:
            w = winding_number(f, *cell)
        except ContourThroughZero:
            a0, a1, b0, b1 = cell
            eps = 1e-3 * min(a1 - a0, b1 - b0)
            # nudge the cell so its boundary misses the zero; neighbours overlap slightly
            w = winding_number(f, a0 - eps * 0.71, a1 + eps * 0.37, b0 - eps * 0.53, b1 + eps * 0.29)
            cell = (a0 - eps * 0.71, a1 + eps * 0.37, b0 - eps * 0.53, b1 + eps * 0.29)
        if w == 0:
            continue
        a0, a1, b0, b1 = cell
        size = max(a1 - a0, b1 - b0)
        if w == 1:
            z, ok = _newton_complex(f, complex(0.5 * (a0 + a1), 0.5 * (b0 + b1)))
            margin = 1e-9 * max(1.0, abs(z))
            if ok and a0 - margin <= z.real <= a1 + margin and b0 - margin <= z.imag <= b1 + margin:
                found.append((z, 1))
                continue
        elif size < min_size:
            found.append((complex(0.5 * (a0 + a1), 0.5 * (b0 + b1)), w))
            continue
        am = a0 + _SPLIT * (a1 - a0)
        bm = b0 + _SPLIT * (b1 - b0)
        queue += [(a0, am, b0, bm), (am, a1, b0, bm), (a0, am, bm, b1), (am, a1, bm, b1)]
    # merge duplicates from overlapping nudged cells
    roots = []
    for z, m in found:
        z = _snap(z)
        if any(abs(z - r) < 1e-8 * max(1.0, abs(z)) for r, _ in roots):
            continue
        roots.append((z, m))
    roots.sort(key=lambda t: (round(t[0].real, 10), round(t[0].imag, 10)))
    return [ModalExponent(z, classify(z), 1, m) for z, m in roots]


# ---------------------------------------------------------------------------
# multiplicity and degeneracy


def algebraic_multiplicity(lam, k, bc=BC.CLAMPED, threshold=1e-6) -> int:
    """Order of vanishing of the dispersion determinant at an exponent (1 or 2).

    Derivatives are normalized by the maximum of |det| on a small circle
    (Cauchy scale) so the test is independent of the determinant's magnitude.
    """
    bc = parse_bc(bc)
    lam = complex(lam)
    r = 0.05 * max(1.0, abs(lam)) if abs(lam) > 0 else 0.05
    circ = lam + r * np.exp(2j * np.pi * np.arange(32) / 32)
    scale = np.max(np.abs(det_dispersion(circ, k, bc)))
    h = 1e-3 * r
    pts = lam + h * np.array([-2, -1, 0, 1, 2])
    v = det_dispersion(pts, k, bc)
    d1 = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h)
    d2 = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h)
    n1 = abs(d1) * r / scale
    n2 = abs(d2) * r * r / (2 * scale)
    noise = 1e3 * np.finfo(float).eps * r / h
    if n1 > threshold:
        return 1
    if n1 > 10 * noise:
        raise Inconclusive(f"first derivative {n1:.2e} between noise and threshold")
    if n2 > threshold:
        return 2
    raise Inconclusive(f"derivatives below threshold at lam={lam}")


@dataclass(frozen=True)
class DegeneracyReport:
    k: float
    member: bool
    pairs: tuple = ()
    lambda_part: tuple = ()


def degenerate_k(k, tol=1e-9) -> DegeneracyReport:
    """Membership of k in {pi sqrt(m^2 - n^2)/sqrt(2) : m > n >= 1, m - n even}.

    For members, the exponents pi sqrt(m^2 + n^2)/sqrt(2) carry a two-dimensional
    kernel of the clamped dispersion matrix.
    """
    pairs, parts = [], []
    m_max = int(1 + ((k + tol) / np.pi) ** 2 / 2) + 2
    for m in range(2, m_max + 1):
        for n in range(m - 2, 0, -2):
            kappa = np.pi * np.sqrt(m * m - n * n) / np.sqrt(2)
            if kappa > k + tol:
                break
            if abs(kappa - k) <= tol:
                pairs.append((m, n))
                parts.append(np.pi * np.sqrt(m * m + n * n) / np.sqrt(2))
    return DegeneracyReport(float(k), bool(pairs), tuple(pairs), tuple(parts))
