"""Field objects sharing one interface: ``derivative(x, y, dx, dy)``.

Finite-element fields, analytic test fields and modal expansions all expose
partial derivatives this way, so boundary operators, flux pairings and
trace extraction work on any of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Callable, Protocol

import numpy as np

from .numerics import BandCutoff


class Field(Protocol):
    def derivative(self, x, y, dx: int = 0, dy: int = 0): ...


class AnalyticField:
    """Field given by a function ``f(x, y, dx, dy)`` returning partial derivatives."""

    def __init__(self, func: Callable):
        self._func = func

    def derivative(self, x, y, dx: int = 0, dy: int = 0):
        return self._func(np.asarray(x, dtype=float), np.asarray(y, dtype=float), dx, dy)

    def __call__(self, x, y):
        return self.derivative(x, y)


def sine_profile(p: int, scale: complex = np.sqrt(2.0)):
    """Profile y -> scale * sin(p pi y) with derivatives."""
    w = np.pi * p

    def prof(y, deriv=0):
        y = np.asarray(y, dtype=float)
        base = np.sin(w * y) if deriv % 2 == 0 else np.cos(w * y)
        sign = (1, 1, -1, -1)[deriv % 4]
        return scale * sign * w**deriv * base

    return prof


def _cutoff_exp_derivs(cutoff, lam, x, order):
    """d^m/dx^m [chi(x) e^{lam x}] for m = 0..order (chi = 1 when cutoff is None)."""
    e = np.exp(lam * x)
    out = []
    for m in range(order + 1):
        if cutoff is None:
            out.append(lam**m * e)
        else:
            acc = 0
            for j in range(m + 1):
                acc = acc + comb(m, j) * cutoff(x, j) * lam ** (m - j)
            out.append(acc * e)
    return out


@dataclass
class ModalTerm:
    """coef * chi(x) * exp(lam x) * profile(y); profile(y, deriv) up to deriv 3."""

    coef: complex
    lam: complex
    profile: Callable
    cutoff: BandCutoff | None = None


@dataclass
class ModalField:
    terms: list = field(default_factory=list)

    def add(self, coef, lam, profile, cutoff=None):
        self.terms.append(ModalTerm(complex(coef), complex(lam), profile, cutoff))
        return self

    def derivative(self, x, y, dx: int = 0, dy: int = 0):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
        for t in self.terms:
            X = _cutoff_exp_derivs(t.cutoff, t.lam, x, dx)[dx]
            out = out + t.coef * X * t.profile(y, dy)
        return out

    def plate_operator(self, k):
        """(Delta^2 - k^4) applied to the field, valid when every term is a mode.

        With e^{lam x} phi(y) a homogeneous solution, phi'''' follows from the
        symbol, so only cut-off derivatives survive.
        """
        del k  # the k^4 term cancels against the symbol identity
        terms = list(self.terms)

        def f(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            out = np.zeros(np.broadcast(x, y).shape, dtype=complex)
            for t in terms:
                if t.cutoff is None:
                    continue
                d = _cutoff_exp_derivs(t.cutoff, t.lam, x, 4)
                e = np.exp(t.lam * x) * t.cutoff(x)
                fourth = d[4] - t.lam**4 * e
                second = d[2] - t.lam**2 * e
                out = out + t.coef * (fourth * t.profile(y, 0) + 2 * second * t.profile(y, 2))
            return out

        return f
