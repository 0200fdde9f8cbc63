"""Small numerical helpers shared across modules."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

# Coefficients of the degree-9 smoothstep S(t) = t^5 (126 - 420 t + 540 t^2 - 315 t^3 + 70 t^4),
# the unique polynomial with S(0)=0, S(1)=1 and four vanishing derivatives at both ends.
_SMOOTHSTEP = np.polynomial.Polynomial([0, 0, 0, 0, 0, 126, -420, 540, -315, 70])
_SMOOTHSTEP_DERIVS = [_SMOOTHSTEP.deriv(m) for m in range(5)]


def sqrt_branch(z):
    """Square root with the branch cut on the positive real axis (Im result >= 0)."""
    s = np.sqrt(np.asarray(z, dtype=complex))
    return np.where(s.imag < 0, -s, s)


def sinc(z):
    """sin(z)/z for complex z, with a degree-8 Taylor series near the origin."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-3
    safe = np.where(small, 1.0, z)
    out = np.sin(safe) / safe
    z2 = z * z
    taylor = 1 - z2 / 6 * (1 - z2 / 20 * (1 - z2 / 42 * (1 - z2 / 72)))
    return np.where(small, taylor, out)


@lru_cache(maxsize=64)
def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0):
    """Gauss-Legendre nodes and weights mapped to [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite_gauss(breaks, n: int):
    """Composite Gauss-Legendre rule over consecutive intervals of ``breaks``."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = np.polynomial.legendre.leggauss(n)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    nodes = a + half * (x + 1.0)
    weights = half * w
    return nodes.ravel(), weights.ravel()


def smoothstep(t, deriv: int = 0):
    """C4 smoothstep (and derivatives w.r.t. t), clamped to 0/1 outside [0, 1]."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0) & (t < 1)
    tc = np.clip(t, 0.0, 1.0)
    if deriv == 0:
        return np.where(t >= 1, 1.0, np.where(inside, _SMOOTHSTEP(tc), 0.0))
    if deriv > 4:
        raise ValueError("smoothstep is only C4")
    return np.where(inside, _SMOOTHSTEP_DERIVS[deriv](tc), 0.0)


class BandCutoff:
    """Even-or-one-sided cut-off in x built from the C4 smoothstep.

    ``kind="right"``: 0 for x <= start, 1 for x >= start + width.
    ``kind="left"``: mirror image, 1 for x <= -(start + width).
    ``kind="symmetric"``: depends on |x|, 1 for |x| >= start + width.
    """

    def __init__(self, start: float, width: float, kind: str = "right"):
        if width <= 0:
            raise ValueError("cut-off width must be positive")
        if kind not in ("right", "left", "symmetric"):
            raise ValueError(f"unknown cut-off kind {kind!r}")
        self.start = float(start)
        self.width = float(width)
        self.kind = kind

    @property
    def band(self):
        return self.start, self.start + self.width

    def __call__(self, x, deriv: int = 0):
        x = np.asarray(x, dtype=float)
        w = self.width
        if self.kind == "right":
            return smoothstep((x - self.start) / w, deriv) / w**deriv
        if self.kind == "left":
            return (-1) ** deriv * smoothstep((-x - self.start) / w, deriv) / w**deriv
        sign = np.where(x < 0, -1.0, 1.0) ** deriv
        return sign * smoothstep((np.abs(x) - self.start) / w, deriv) / w**deriv
