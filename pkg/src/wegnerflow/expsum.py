"""Finite exponential sums  f(s) = sum_i c_i exp(e_i s)  with exact algebra.

Every closed-form solution in this package is built from these objects, so
derivative, product and the tilde operator  f f'' - f'^2  are computed on
coefficients rather than on sampled values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import NonPositiveCoefficient, Overflow

MERGE_TOL = 1e-11
DROP_TOL = 1e-300
MAX_EXP_ARG = 700.0
# below this many terms plain floats beat numpy's per-call overhead
SMALL_SUM = 16


def _canonical(terms: Iterable[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    items = sorted(((float(c), float(e)) for c, e in terms), key=lambda t: -t[1])
    merged: list[list[float]] = []
    for c, e in items:
        # chain-merge against the first exponent of the current group
        if merged and abs(merged[-1][2] - e) <= MERGE_TOL:
            merged[-1][0] += c
        else:
            merged.append([c, e, e])
    return tuple((c, e) for c, e, _ in merged if abs(c) > DROP_TOL)


@dataclass(frozen=True, init=False)
class ExpSum:
    """Canonical exponential sum: exponents strictly decreasing, no zero terms."""

    terms: tuple[tuple[float, float], ...]

    def __init__(self, terms: Iterable[tuple[float, float]] = ()):
        t = _canonical(terms)
        object.__setattr__(self, "terms", t)
        c = np.array([x for x, _ in t], dtype=float)
        e = np.array([x for _, x in t], dtype=float)
        c.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "_c", c)
        object.__setattr__(self, "_e", e)

    @classmethod
    def from_arrays(cls, coefs, exponents) -> "ExpSum":
        return cls(zip(np.asarray(coefs, float), np.asarray(exponents, float)))

    @property
    def coefs(self) -> np.ndarray:
        return self._c

    @property
    def exponents(self) -> np.ndarray:
        return self._e

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "ExpSum") -> "ExpSum":
        return ExpSum(self.terms + other.terms)

    def __neg__(self) -> "ExpSum":
        return ExpSum((-c, e) for c, e in self.terms)

    def __sub__(self, other: "ExpSum") -> "ExpSum":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, ExpSum):
            return product(self, other)
        k = float(other)
        return ExpSum((k * c, e) for c, e in self.terms)

    __rmul__ = __mul__

    def __call__(self, s: float) -> float:
        return eval_at(self, s)

    def coef_at(self, exponent: float, tol: float = MERGE_TOL) -> float:
        for c, e in self.terms:
            if abs(e - exponent) <= tol:
                return c
        return 0.0

    # stable evaluation helpers used by the closed-form evaluators

    def scaled(self, s: float) -> tuple[float, float]:
        """Return (mantissa, shift) with f(s) = mantissa * exp(shift)."""
        t = self.terms
        if not t:
            return 0.0, 0.0
        if len(t) <= SMALL_SUM:
            shift = max(e * s for _, e in t)
            return math.fsum([c * math.exp(e * s - shift) for c, e in t]), shift
        arg = self._e * s
        shift = float(np.max(arg))
        return _fsum(self._c * np.exp(arg - shift)), shift

    def log_derivative(self, s: float) -> float:
        """f'(s)/f(s) without overflow."""
        t = self.terms
        if len(t) <= SMALL_SUM:
            shift = max(e * s for _, e in t)
            w = [c * math.exp(e * s - shift) for c, e in t]
            return math.fsum([x * e for x, (_, e) in zip(w, t)]) / math.fsum(w)
        arg = self._e * s
        w = self._c * np.exp(arg - np.max(arg))
        return _fsum(w * self._e) / _fsum(w)

    def log_value(self, s: float) -> float:
        m, shift = self.scaled(s)
        if m <= 0.0:
            raise NonPositiveCoefficient(f"log of non-positive exponential sum value {m!r}")
        return math.log(m) + shift


def _fsum(values: np.ndarray) -> float:
    # values arrive in descending-exponent order; fsum is exactly rounded
    return math.fsum(values.tolist())


def eval_at(f: ExpSum, s: float) -> float:
    """Evaluate the sum at s (compensated summation, descending exponents)."""
    if not math.isfinite(s):
        raise ValueError("s must be finite")
    if not f.terms:
        return 0.0
    e = f.exponents
    arg = e * s
    if np.max(arg) > MAX_EXP_ARG:
        raise Overflow(f"exponent*s = {np.max(arg):.1f} exceeds {MAX_EXP_ARG}; rescale the s-window")
    return _fsum(f.coefs * np.exp(arg))


def eval_many(f: ExpSum, s) -> np.ndarray:
    """Evaluate on an array of s values (same overflow rule as eval_at)."""
    s = np.asarray(s, float)
    if not f.terms:
        return np.zeros_like(s)
    arg = np.multiply.outer(s, f.exponents)
    if np.max(arg) > MAX_EXP_ARG:
        raise Overflow(f"exponent*s = {np.max(arg):.1f} exceeds {MAX_EXP_ARG}; rescale the s-window")
    return np.exp(arg) @ f.coefs


def derivative(f: ExpSum) -> ExpSum:
    return ExpSum((c * e, e) for c, e in f.terms)


def product(f: ExpSum, g: ExpSum) -> ExpSum:
    return ExpSum((c1 * c2, e1 + e2) for c1, e1 in f.terms for c2, e2 in g.terms)


def tilde(f: ExpSum) -> ExpSum:
    """f f'' - (f')^2, exactly: sum over pairs i<j of c_i c_j (e_i - e_j)^2 e^{(e_i+e_j)s}."""
    t = f.terms
    return ExpSum(
        (t[i][0] * t[j][0] * (t[i][1] - t[j][1]) ** 2, t[i][1] + t[j][1])
        for i in range(len(t))
        for j in range(i + 1, len(t))
    )


def dominant_log_derivative(f: ExpSum) -> float:
    """Limit of f'/f as s -> infinity for a sum with positive coefficients."""
    if not f.terms:
        raise NonPositiveCoefficient("empty sum has no dominant exponent")
    if any(c <= 0.0 for c, _ in f.terms):
        raise NonPositiveCoefficient("all coefficients must be positive")
    return f.terms[0][1]


def signed_sqrt(
    f: ExpSum,
    exponents: Iterable[float],
    tol: float = 1e-8,
) -> ExpSum:
    """Find rho with rho^2 = f, given the exponents rho may use.

    The magnitudes come from the coefficients of exp(2 e_k s); the relative
    signs are chosen by exhaustive search over sign patterns (leading kept
    positive), picking the pattern with smallest coefficient residual.
    Raises ValueError when no pattern reproduces f to relative ``tol``.
    """
    exps: list[float] = []
    for e in sorted((float(x) for x in exponents), reverse=True):
        if not exps or exps[-1] - e > MERGE_TOL:
            exps.append(e)
    mags = [math.sqrt(max(f.coef_at(2 * e), 0.0)) for e in exps]
    scale = max((abs(c) for c, _ in f.terms), default=0.0)
    if scale == 0.0:
        return ExpSum()
    best, best_res = None, math.inf
    m = len(exps)
    for mask in range(1 << max(m - 1, 0)):
        signs = [1.0] + [-1.0 if (mask >> k) & 1 else 1.0 for k in range(m - 1)]
        cand = ExpSum((sg * mg, e) for sg, mg, e in zip(signs, mags, exps))
        res = max((abs(c) for c, _ in (product(cand, cand) - f).terms), default=0.0)
        if res < best_res:
            best, best_res = cand, res
    if best_res > tol * scale:
        raise ValueError(f"no signed square root: residual {best_res:.3e} vs scale {scale:.3e}")
    return best
