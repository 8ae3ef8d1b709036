"""Closed-form Mielke flows for 2x2 and 3x3 Hermitian matrices.

The 3x3 solution is carried by two positive exponential sums eta1, eta2:

    a = Tr/3 + eta1'/(2 eta1)
    f = Tr/3 - eta2'/(2 eta2)
    d = Tr - a - f
    g = sgn(g0) A / sqrt(eta1 eta2)
    b = rho1 / (2 eta1 sqrt(eta2)),   rho1^2 = tilde(eta1) eta2 - 4 A^2 eta1
    c = rho2 / (2 sqrt(eta1) eta2),   rho2^2 = tilde(eta2) eta1 - 4 A^2 eta2

For real symmetric inputs (and complex inputs that a diagonal unitary maps
to real ones) b and c are signed and rho1, rho2 are exponential sums. For
genuinely complex inputs b, c are moduli and the phases of H12, H23 follow
from a quadrature driven by the conserved constant C.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from . import expsum as es
from .errors import DimensionUnsupported, FlowError, NegativeRadicand, RoundTripFailure
from .expsum import ExpSum
from .matcore import HermitianMatrix, principal_invariants
from .quadrature import adaptive_simpson
from .spectra import DEGENERACY_TOL, cubic_roots, depressed_cubic, eigh

ROUNDTRIP_TOL = 1e-8
RADICAND_CLAMP = 1e-9
ZERO_ENTRY_TOL = 1e-14
PHASE_TOL = 1e-10
ZERO_RHO_TOL = 1e-12
# cubic roots near a double root carry ~sqrt(eps) error, so 1e-8 would miss
# exactly degenerate spectra; the round trip rejects false positives
DEGENERATE_ROUTE_TOL = 1e-6


def _sgn(x: float) -> float:
    return float(np.sign(x))


@dataclass(frozen=True)
class Calibration3:
    """Parameters of the canonical form (third coefficient of each eta = 1)."""

    u1: float
    u2: float
    bigA: float
    p11: float
    p12: float
    p21: float
    p22: float
    d1: float = math.nan
    d2: float = math.nan
    n11: float = math.nan
    n12: float = math.nan
    n21: float = math.nan
    n22: float = math.nan
    degenerate: bool = False
    sign_g: int = 0

    @property
    def u3(self) -> float:
        return -(self.u1 + self.u2)

    def etas(self) -> tuple[ExpSum, ExpSum]:
        u1, u2, u3 = self.u1, self.u2, self.u3
        eta1 = ExpSum([(self.p11, u1), (self.p12, u2), (1.0, u3)])
        eta2 = ExpSum([(self.p21, -u1), (self.p22, -u2), (1.0, -u3)])
        return eta1, eta2


@dataclass(frozen=True)
class RhoCoefficients:
    """Signed coefficients of rho1 on exp(-u1 s), exp(-u2 s), exp((u1+u2) s)
    and of rho2 on exp(u1 s), exp(u2 s), exp(-(u1+u2) s); overall signs are
    already folded into q1, q2 and reported separately."""

    q1: tuple[float, float, float]
    q2: tuple[float, float, float]
    overall_sign_1: float
    overall_sign_2: float

    def to_expsums(self, u1: float, u2: float) -> tuple[ExpSum, ExpSum]:
        u3 = -(u1 + u2)
        rho1 = ExpSum(zip(self.q1, (-u1, -u2, -u3)))
        rho2 = ExpSum(zip(self.q2, (u1, u2, u3)))
        return rho1, rho2


@dataclass(frozen=True)
class PhaseState:
    c_const: float
    phi_b0: float
    phi_c0: float
    phi_g0: float


@dataclass(frozen=True)
class Exact3Solution:
    trace: float
    eta1: ExpSum
    eta2: ExpSum
    rho1: Optional[ExpSum]
    rho2: Optional[ExpSum]
    rho1_sq: ExpSum
    rho2_sq: ExpSum
    bigA: float
    sign_g: float
    phase: PhaseState
    mode: str  # "symmetric" or "hermitian"
    degenerate: bool = False
    route: str = "invariants"
    calibration: Optional[Calibration3] = None
    rho_coefficients: Optional[RhoCoefficients] = None

    @property
    def u(self) -> tuple[float, float, float]:
        e = sorted(self.eta1.exponents, reverse=True)
        return tuple(e)


# -- calibration -----------------------------------------------------------


def _gauge3(h: HermitianMatrix):
    """Split H into (mode, real data, phases).

    Returns mode 'symmetric' with signed (b0, c0, g0) and phases (alpha,
    beta - alpha, beta) such that H = D S D^H for real S, or mode 'hermitian'
    with moduli and the entry arguments when no such gauge exists.
    """
    m = h.data
    x12, x23, x13 = complex(m[0, 1]), complex(m[1, 2]), complex(m[0, 2])
    if h.is_real:
        return "symmetric", (x12.real, x23.real, x13.real), (0.0, 0.0, 0.0)
    tol = ZERO_ENTRY_TOL * max(h.norm(), 1e-300)
    nz12, nz23, nz13 = abs(x12) > tol, abs(x23) > tol, abs(x13) > tol
    if nz12 and nz23 and nz13:
        theta = cmath.phase(x13) - cmath.phase(x12) - cmath.phase(x23)
        if abs(math.sin(theta)) > PHASE_TOL:
            return (
                "hermitian",
                (abs(x12), abs(x23), abs(x13)),
                (cmath.phase(x12), cmath.phase(x23), cmath.phase(x13)),
            )
    alpha = cmath.phase(x12) if nz12 else None
    beta = cmath.phase(x13) if nz13 and not (nz12 and nz23) else None
    if nz23:
        if alpha is not None:
            beta = alpha + cmath.phase(x23)
        elif beta is not None:
            alpha = beta - cmath.phase(x23)
        else:
            alpha, beta = 0.0, cmath.phase(x23)
    alpha = 0.0 if alpha is None else alpha
    beta = 0.0 if beta is None else beta
    s12 = (x12 * cmath.exp(-1j * alpha)).real
    s23 = (x23 * cmath.exp(1j * (alpha - beta))).real
    s13 = (x13 * cmath.exp(-1j * beta)).real
    return "symmetric", (s12, s23, s13), (alpha, beta - alpha, beta)


def _invariant_calibration(a0, f0, b0, c0, g0, i1, u1, u2) -> Calibration3:
    """Coefficients of the canonical etas from the entries of H0."""
    bb, cc, gg = b0 * b0, c0 * c0, g0 * g0
    common = 6 * u1 * i1 + 4 * i1 ** 2 + 9 * u1 * u2 + 6 * i1 * u2
    d1 = 36 * a0 ** 2 + 36 * bb + 36 * gg + common - 6 * a0 * (3 * u1 + 4 * i1 + 3 * u2)
    d2 = 36 * cc + 36 * f0 ** 2 + 36 * gg + common - 6 * f0 * (3 * u1 + 4 * i1 + 3 * u2)
    n11 = (36 * a0 ** 2 + 36 * bb + 36 * gg - 24 * a0 * i1 + 4 * i1 ** 2
           - 9 * u1 * u2 + 18 * a0 * u1 - 6 * i1 * u1 - 9 * u2 ** 2)
    n12 = (-36 * a0 ** 2 - 36 * bb - 36 * gg + 24 * a0 * i1 - 4 * i1 ** 2
           + 9 * u1 * u2 - 18 * a0 * u2 + 6 * i1 * u2 + 9 * u1 ** 2)
    n21 = (36 * f0 ** 2 + 36 * cc + 36 * gg - 24 * f0 * i1 + 4 * i1 ** 2
           - 9 * u1 * u2 + 18 * f0 * u1 - 6 * i1 * u1 - 9 * u2 ** 2)
    n22 = (-36 * f0 ** 2 - 36 * cc - 36 * gg + 24 * f0 * i1 - 4 * i1 ** 2
           + 9 * u1 * u2 - 18 * f0 * u2 + 6 * i1 * u2 + 9 * u1 ** 2)
    k1, k2, k12 = u1 + 2 * u2, 2 * u1 + u2, u1 - u2
    with np.errstate(all="ignore"):
        big_a = 9 * abs(k1 * k2) / math.sqrt(d1 * d2) * abs(g0) if d1 * d2 > 0 else math.nan
        p11 = k1 * n11 / (k12 * d1) if d1 else math.nan
        p12 = k2 * n12 / (k12 * d1) if d1 else math.nan
        p21 = k1 * n21 / (k12 * d2) if d2 else math.nan
        p22 = k2 * n22 / (k12 * d2) if d2 else math.nan
    return Calibration3(u1, u2, big_a, p11, p12, p21, p22, d1, d2, n11, n12, n21, n22,
                        False, int(_sgn(g0)))


def rho_coefficients(cal: Calibration3, b0: float, c0: float, g0: float) -> RhoCoefficients:
    """Signed rho coefficients by the case analysis on (b0 = 0?, g0 = 0?).

    Where the case table leaves the overall sign of rho2 open (b0 != 0 and
    g0 != 0) it is fixed by c(0) = c0, or by the sign of c'(0) = -2 b0 g0 when
    c0 = 0.
    """
    u1, u2, A = cal.u1, cal.u2, cal.bigA
    p11, p12, p21, p22 = cal.p11, cal.p12, cal.p21, cal.p22
    k1, k2, k12 = abs(u1 + 2 * u2), abs(2 * u1 + u2), u1 - u2
    m11 = k1 * math.sqrt(p12 * p21)
    m12 = k2 * math.sqrt(p11 * p22)
    m13 = k12 * math.sqrt(p11 * p12)
    m21 = k1 * math.sqrt(p11 * p22)
    m22 = k2 * math.sqrt(p12 * p21)
    m23 = k12 * math.sqrt(p21 * p22)
    e1 = (u1 + 2 * u2) ** 2 + p11 * p21 * k12 ** 2 - 4 * A * A
    e2 = (2 * u1 + u2) ** 2 + p12 * p22 * k12 ** 2 - 4 * A * A
    sb, sc, sg = _sgn(b0), _sgn(c0), _sgn(g0)
    exps2 = (u1, u2, -(u1 + u2))

    if b0 != 0 and g0 != 0:
        q1 = (_sgn(e1) * m11, _sgn(e2) * m12, m13)
        s23 = sb * sg * _sgn(sum(q1)) * _sgn(p21 * q1[1] - p22 * q1[0])
        q23 = s23 * m23
        q2 = (_sgn(q23) * _sgn(e1) * m21, _sgn(q23) * _sgn(e2) * m22, q23)
        sign1 = sb * _sgn(sum(q1))
        if c0 != 0:
            sign2 = sc * _sgn(sum(q2))
        else:
            sign2 = -sb * sg * _sgn(sum(q * e for q, e in zip(q2, exps2)))
    elif b0 != 0:
        q1 = (m11, m12, m13)
        q2 = (m21, m22, m23)
        sign1 = sb * _sgn(sum(q1))
        # with g0 = 0 neither b nor c changes sign, so c0 fixes rho2 as well
        sign2 = sc * _sgn(sum(q2)) if c0 != 0 else 1.0
    else:
        q2 = (_sgn(e1) * m21, _sgn(e2) * m22, m23)
        sign2 = sc * _sgn(sum(q2))
        s13 = sc * sg * _sgn(sum(q2)) * _sgn(p11 * q2[1] - p12 * q2[0])
        q13 = s13 * m13
        q1 = (_sgn(q13) * _sgn(e1) * m11, _sgn(q13) * _sgn(e2) * m12, q13)
        sign1 = 1.0
    return RhoCoefficients(
        tuple(sign1 * q for q in q1), tuple(sign2 * q for q in q2), sign1, sign2
    )


def _rho_squares(eta1: ExpSum, eta2: ExpSum, big_a: float) -> tuple[ExpSum, ExpSum]:
    a2 = 4.0 * big_a * big_a
    rho1_sq = es.product(es.tilde(eta1), eta2) - a2 * eta1
    rho2_sq = es.product(es.tilde(eta2), eta1) - a2 * eta2
    return rho1_sq, rho2_sq


def _signed_rho(rho_sq: ExpSum, exps, value0: float, slope0: float,
                natural_scale: float) -> ExpSum:
    """Square root of rho_sq with rho(0) of sign value0, or rho'(0) of sign slope0."""
    if rho_sq.is_zero() or np.max(np.abs(rho_sq.coefs)) <= ZERO_RHO_TOL * natural_scale:
        return ExpSum()
    rho = es.signed_sqrt(rho_sq, exps)
    r0 = rho(0.0)
    scale = float(np.sum(np.abs(rho.coefs)))
    if abs(r0) > 1e-8 * scale:
        sign = _sgn(value0) * _sgn(r0) if value0 != 0 else _sgn(r0)
    else:
        sign = _sgn(slope0) * _sgn(es.derivative(rho)(0.0)) or 1.0
    return sign * rho


def _constant_solution(trace, a0, f0, mode, phase) -> Exact3Solution:
    eta1 = ExpSum([(1.0, 2.0 * (a0 - trace / 3.0))])
    eta2 = ExpSum([(1.0, -2.0 * (f0 - trace / 3.0))])
    zero = ExpSum()
    return Exact3Solution(trace, eta1, eta2, zero if mode == "symmetric" else None,
                          zero if mode == "symmetric" else None, zero, zero, 0.0, 0.0,
                          phase, mode, False, "constant")


def calibrate3(h0: HermitianMatrix, route: str = "auto") -> Exact3Solution:
    """Calibrate the closed-form 3x3 solution to the initial matrix h0.

    route: 'invariants' uses the entry/invariant formulas (degenerate spectra
    through the one-degenerate-eigenvalue branch); 'eigenvectors' uses the
    boundary eigenvector weights; 'auto' tries the invariant formulas and
    falls back to eigenvectors when they are singular or fail the round trip.
    """
    if h0.n != 3:
        raise DimensionUnsupported(f"calibrate3 needs a 3x3 matrix, got n={h0.n}")
    if route not in ("auto", "invariants", "eigenvectors"):
        raise ValueError(f"unknown route {route!r}")
    m = h0.data
    trace = h0.trace
    a0, d0, f0 = m[0, 0].real, m[1, 1].real, m[2, 2].real
    mode, (b0, c0, g0), phases = _gauge3(h0)
    if mode == "hermitian":
        c_const = b0 * c0 / g0 * math.sin(phases[2] - phases[0] - phases[1])
    else:
        c_const = 0.0
    phase = PhaseState(c_const, *phases)

    inv = principal_invariants(h0)
    cubic = depressed_cubic(inv)
    roots = cubic_roots(cubic)
    u1, u2 = 2.0 * roots[0], 2.0 * roots[2]
    scale = max(abs(u1), abs(u2), 1e-300)
    norm = h0.norm()
    off = math.sqrt(b0 * b0 + c0 * c0 + g0 * g0)
    if off <= ZERO_ENTRY_TOL * max(norm, 1e-300) or u1 - u2 <= DEGENERACY_TOL * max(norm, 1e-300):
        return _constant_solution(trace, a0, f0, mode, phase)

    target = (a0, d0, f0, b0, c0, g0)
    attempts = ["invariants", "eigenvectors"] if route == "auto" else [route]
    last_err = None
    for r in attempts:
        try:
            if r == "eigenvectors":
                sol = _eigenvector_solution(h0, trace, target, mode, phase)
            elif min(abs(u1 + 2 * u2), abs(2 * u1 + u2)) <= DEGENERATE_ROUTE_TOL * scale:
                sol = _degenerate_solution(inv, cubic, trace, target, mode, phase)
            else:
                sol = _invariant_solution(inv, u1, u2, trace, target, mode, phase)
            err = _roundtrip_error(sol, h0)
        except (ValueError, ArithmeticError, FlowError) as exc:
            last_err = exc
            continue
        if err <= ROUNDTRIP_TOL * max(1.0, norm) or route != "auto":
            return sol
        last_err = RoundTripFailure(f"{r} calibration round trip error {err:.3e}")
    raise RoundTripFailure(f"calibration failed: {last_err}")


def _finalize(trace, eta1, eta2, big_a, target, mode, phase, route, degenerate,
              cal=None, rho=None, rho_pair=None) -> Exact3Solution:
    a0, d0, f0, b0, c0, g0 = target
    rho1_sq, rho2_sq = _rho_squares(eta1, eta2, big_a)
    rho1 = rho2 = None
    if mode == "symmetric":
        if rho_pair is not None:
            rho1, rho2 = rho_pair
        else:
            # slopes from b' = 2 c g and c' = -2 b g at s = 0
            # natural scale: the size of the terms that cancel when b or c is zero
            sc1 = float(np.max(np.abs(es.product(es.tilde(eta1), eta2).coefs), initial=0.0))
            sc2 = float(np.max(np.abs(es.product(es.tilde(eta2), eta1).coefs), initial=0.0))
            rho1 = _signed_rho(rho1_sq, eta2.exponents, b0, c0 * g0, sc1)
            rho2 = _signed_rho(rho2_sq, eta1.exponents, c0, -b0 * g0, sc2)
    sign_g = _sgn(g0) if mode == "symmetric" else 1.0
    return Exact3Solution(trace, eta1, eta2, rho1, rho2, rho1_sq, rho2_sq, big_a, sign_g,
                          phase, mode, degenerate, route, cal, rho)


def _invariant_solution(inv, u1, u2, trace, target, mode, phase) -> Exact3Solution:
    a0, d0, f0, b0, c0, g0 = target
    cal = _invariant_calibration(a0, f0, b0, c0, g0, inv.i1, u1, u2)
    ps = (cal.p11, cal.p12, cal.p21, cal.p22)
    if not all(math.isfinite(p) and p > 0 for p in ps) or not math.isfinite(cal.bigA):
        raise ArithmeticError("invariant formulas are singular for this matrix")
    eta1, eta2 = cal.etas()
    rho = rho_pair = None
    if mode == "symmetric":
        rho = rho_coefficients(cal, b0, c0, g0)
        rho_pair = rho.to_expsums(u1, u2)
    return _finalize(trace, eta1, eta2, cal.bigA, target, mode, phase, "invariants", False,
                     cal, rho, rho_pair)


def degenerate_exponent(cubic) -> float:
    """Exponent of the doubly degenerate eigenvalue: u = -3Q/P (twice the double root)."""
    return -3.0 * cubic.q / cubic.p


def degenerate_branch(h0: HermitianMatrix, u: Optional[float] = None) -> Exact3Solution:
    """Solution for a spectrum {l, m, m} with exponents {u, u, -2u}.

    u defaults to degenerate_exponent of the depressed cubic; passing another
    value lets callers test alternative candidates against the integrator.
    """
    if h0.n != 3:
        raise DimensionUnsupported(f"degenerate_branch needs a 3x3 matrix, got n={h0.n}")
    m = h0.data
    mode, (b0, c0, g0), phases = _gauge3(h0)
    c_const = b0 * c0 / g0 * math.sin(phases[2] - phases[0] - phases[1]) if mode == "hermitian" else 0.0
    inv = principal_invariants(h0)
    target = (m[0, 0].real, m[1, 1].real, m[2, 2].real, b0, c0, g0)
    return _degenerate_solution(inv, depressed_cubic(inv), h0.trace, target, mode,
                                PhaseState(c_const, *phases), u)


def _degenerate_solution(inv, cubic, trace, target, mode, phase, u=None) -> Exact3Solution:
    a0, d0, f0, b0, c0, g0 = target
    i1 = inv.i1
    u = degenerate_exponent(cubic) if u is None else float(u)
    big_a = 1.5 * abs(u)
    p1 = -2.0 * (3 * a0 - i1 + 3 * u) / (6 * a0 - 2 * i1 - 3 * u)
    p2 = -2.0 * (3 * f0 - i1 + 3 * u) / (6 * f0 - 2 * i1 - 3 * u)
    if not (p1 > 0 and p2 > 0):
        raise ArithmeticError("degenerate-branch coefficients are not positive")
    q1 = 2.0 * b0 * (p1 + 1.0) * math.sqrt(p2 + 1.0)
    q2 = 2.0 * c0 * (p2 + 1.0) * math.sqrt(p1 + 1.0)
    eta1 = ExpSum([(p1, u), (1.0, -2.0 * u)])
    eta2 = ExpSum([(p2, -u), (1.0, 2.0 * u)])
    u1, u2 = (u, -2.0 * u) if u > 0 else (-2.0 * u, u)
    cal = Calibration3(u1, u2, big_a, p1, math.nan, p2, math.nan, degenerate=True,
                       sign_g=int(_sgn(g0)))
    rho_pair = (ExpSum([(q1, -u)]), ExpSum([(q2, u)])) if mode == "symmetric" else None
    return _finalize(trace, eta1, eta2, big_a, target, mode, phase, "invariants", True,
                     cal, None, rho_pair)


def _eigenvector_solution(h0, trace, target, mode, phase) -> Exact3Solution:
    a0, d0, f0, b0, c0, g0 = target
    spec = eigh(h0)
    u = 2.0 * (spec.values - trace / 3.0)
    first = np.abs(spec.vectors[0, :]) ** 2
    last = np.abs(spec.vectors[-1, :]) ** 2
    eta1 = ExpSum(zip(first, u))
    eta2 = ExpSum(zip(last, -u))
    big_a = abs(g0) * math.sqrt(eta1(0.0) * eta2(0.0))
    degenerate = bool(np.min(np.abs(np.diff(u))) <= DEGENERACY_TOL * max(np.max(np.abs(u)), 1e-300))
    return _finalize(trace, eta1, eta2, big_a, target, mode, phase, "eigenvectors", degenerate)


def _roundtrip_error(sol: Exact3Solution, h0: HermitianMatrix) -> float:
    return float(np.max(np.abs(eval3(sol, 0.0).data - h0.data)))


# -- evaluation ------------------------------------------------------------


def _ratio(num: ExpSum, s: float, log_den: float) -> float:
    """num(s) / exp(log_den) without overflow."""
    m, shift = num.scaled(s)
    if m == 0.0:
        return 0.0
    return m * math.exp(shift - log_den)


def _radicand(rho_sq: ExpSum, s: float, log_den: float) -> float:
    m, shift = rho_sq.scaled(s)
    if m < 0.0:
        c, e = rho_sq.coefs, rho_sq.exponents
        size = float(np.sum(np.abs(c) * np.exp(e * s - shift)))
        if m < -RADICAND_CLAMP * size:
            raise NegativeRadicand(f"square-root argument {m:.3e} (scale {size:.3e}) at s={s}")
        return 0.0
    return m * math.exp(shift - log_den)


def moduli3(sol: Exact3Solution, s: float) -> dict:
    """Diagonal entries and (signed or modulus) off-diagonal amplitudes at s."""
    t3 = sol.trace / 3.0
    l1 = sol.eta1.log_derivative(s)
    l2 = sol.eta2.log_derivative(s)
    a = t3 + 0.5 * l1
    f = t3 - 0.5 * l2
    d = sol.trace - a - f
    log1 = sol.eta1.log_value(s)
    log2 = sol.eta2.log_value(s)
    g = sol.sign_g * sol.bigA * math.exp(-0.5 * (log1 + log2)) if sol.bigA else 0.0
    if sol.mode == "symmetric":
        b = _ratio(sol.rho1, s, math.log(2.0) + log1 + 0.5 * log2)
        c = _ratio(sol.rho2, s, math.log(2.0) + 0.5 * log1 + log2)
    else:
        b = math.sqrt(_radicand(sol.rho1_sq, s, math.log(4.0) + 2 * log1 + log2))
        c = math.sqrt(_radicand(sol.rho2_sq, s, math.log(4.0) + log1 + 2 * log2))
    return {"a": a, "d": d, "f": f, "b": b, "c": c, "g": g}


def _assemble(v: dict, phi_b: float, phi_c: float, phi_g: float) -> HermitianMatrix:
    h = np.zeros((3, 3), dtype=complex)
    h[0, 0], h[1, 1], h[2, 2] = v["a"], v["d"], v["f"]
    h[0, 1] = v["b"] * cmath.exp(1j * phi_b)
    h[1, 2] = v["c"] * cmath.exp(1j * phi_c)
    h[0, 2] = v["g"] * cmath.exp(1j * phi_g)
    h[1, 0], h[2, 1], h[2, 0] = h[0, 1].conjugate(), h[1, 2].conjugate(), h[0, 2].conjugate()
    return HermitianMatrix._wrap(h)


def eval3(sol: Exact3Solution, s: float) -> HermitianMatrix:
    """H(s) from the closed form."""
    return _assemble(moduli3(sol, s), *phase_at(sol, s))


def eval3_series(sol: Exact3Solution, s_values: Sequence[float]) -> list[HermitianMatrix]:
    """H(s) on an ascending grid; phase integrals accumulate panel by panel."""
    return series3(sol, s_values)[0]


def series3(sol: Exact3Solution, s_values: Sequence[float]):
    """(matrices, phases) on an ascending grid, integrating the phases once."""
    phases = phase_series(sol, s_values)
    mats = [_assemble(moduli3(sol, s), *ph) for s, ph in zip(s_values, phases)]
    return mats, phases


def _phase_rates(sol: Exact3Solution):
    k = 8.0 * sol.phase.c_const * sol.bigA ** 2

    def rate_b(s: float) -> float:
        m1, sh1 = sol.eta1.scaled(s)
        mr, shr = sol.rho1_sq.scaled(s)
        return k * m1 / mr * math.exp(sh1 - shr)

    def rate_c(s: float) -> float:
        m2, sh2 = sol.eta2.scaled(s)
        mr, shr = sol.rho2_sq.scaled(s)
        return -k * m2 / mr * math.exp(sh2 - shr)

    return rate_b, rate_c


def _phases_vary(sol: Exact3Solution) -> bool:
    return sol.mode == "hermitian" and sol.phase.c_const != 0.0 and sol.bigA != 0.0


def phase_at(sol: Exact3Solution, s: float, tol: float = 1e-10) -> tuple[float, float, float]:
    """(phi_b, phi_c, phi_g) at s; phi_g is constant."""
    ph = sol.phase
    if not _phases_vary(sol):
        return ph.phi_b0, ph.phi_c0, ph.phi_g0
    rate_b, rate_c = _phase_rates(sol)
    return (
        ph.phi_b0 + float(adaptive_simpson(rate_b, 0.0, s, tol)),
        ph.phi_c0 + float(adaptive_simpson(rate_c, 0.0, s, tol)),
        ph.phi_g0,
    )


def phase_series(sol: Exact3Solution, s_values: Sequence[float], tol: float = 1e-10):
    ph = sol.phase
    if not _phases_vary(sol):
        return [(ph.phi_b0, ph.phi_c0, ph.phi_g0)] * len(s_values)
    rate_b, rate_c = _phase_rates(sol)
    out = []
    pb, pc, prev = ph.phi_b0, ph.phi_c0, 0.0
    for s in s_values:
        pb += float(adaptive_simpson(rate_b, prev, s, tol))
        pc += float(adaptive_simpson(rate_c, prev, s, tol))
        prev = s
        out.append((pb, pc, ph.phi_g0))
    return out


def conserved_c(h: HermitianMatrix) -> float:
    """C = |b| |c| / |g| * sin(phi_g - phi_b - phi_c) of a 3x3 Hermitian matrix."""
    m = h.data
    x12, x23, x13 = complex(m[0, 1]), complex(m[1, 2]), complex(m[0, 2])
    if x13 == 0:
        return 0.0
    return abs(x12) * abs(x23) / abs(x13) * math.sin(
        cmath.phase(x13) - cmath.phase(x12) - cmath.phase(x23)
    )


def renormalize(sol: Exact3Solution, eta1_at0: float, eta2_at0: float) -> Exact3Solution:
    """Same flow with the etas rescaled to given values at s = 0.

    A^2 scales like eta1 eta2 and rho1 (rho2) like eta1 sqrt(eta2)
    (sqrt(eta1) eta2), so every matrix entry is unchanged.
    """
    l1 = eta1_at0 / sol.eta1(0.0)
    l2 = eta2_at0 / sol.eta2(0.0)
    return replace(
        sol,
        eta1=l1 * sol.eta1,
        eta2=l2 * sol.eta2,
        rho1=None if sol.rho1 is None else l1 * math.sqrt(l2) * sol.rho1,
        rho2=None if sol.rho2 is None else l2 * math.sqrt(l1) * sol.rho2,
        rho1_sq=l1 * l1 * l2 * sol.rho1_sq,
        rho2_sq=l1 * l2 * l2 * sol.rho2_sq,
        bigA=sol.bigA * math.sqrt(l1 * l2),
        calibration=None,
        rho_coefficients=None,
    )


def inverse_g_view(sol: Exact3Solution, g0: float) -> Exact3Solution:
    """Normalization eta1(0) = eta2(0) = 1/|g0|, in which A = 1."""
    return renormalize(sol, 1.0 / abs(g0), 1.0 / abs(g0))


# -- 2x2 -------------------------------------------------------------------


@dataclass(frozen=True)
class Exact2Solution:
    trace: float
    eta: ExpSum
    bigA: float
    sign_g: float
    phi: float
    u: float
    p: float


def exact2x2(h0: HermitianMatrix) -> Exact2Solution:
    """Closed form for 2x2: eta = p e^{us} + e^{-us}, g = sgn(g0) A / eta."""
    if h0.n != 2:
        raise DimensionUnsupported(f"exact2x2 needs a 2x2 matrix, got n={h0.n}")
    m = h0.data
    a0, f0 = m[0, 0].real, m[1, 1].real
    x = complex(m[0, 1])
    trace = a0 + f0
    if h0.is_real:
        g0, phi = x.real, 0.0
    else:
        g0, phi = abs(x), cmath.phase(x)
    delta = a0 - f0
    if g0 == 0.0:
        return Exact2Solution(trace, ExpSum([(1.0, delta)]), 0.0, 0.0, phi, abs(delta), math.nan)
    u = math.sqrt(delta * delta + 4 * g0 * g0)
    p = (2 * g0 * g0 + delta * delta + delta * u) / (2 * g0 * g0)
    big_a = u * math.sqrt(p)
    return Exact2Solution(trace, ExpSum([(p, u), (1.0, -u)]), big_a, _sgn(g0), phi, u, p)


def eval2(sol: Exact2Solution, s: float) -> HermitianMatrix:
    l = sol.eta.log_derivative(s)
    a = sol.trace / 2 + 0.5 * l
    f = sol.trace / 2 - 0.5 * l
    g = sol.sign_g * sol.bigA * math.exp(-sol.eta.log_value(s)) if sol.bigA else 0.0
    z = g * cmath.exp(1j * sol.phi)
    return HermitianMatrix._wrap(np.array([[a, z], [z.conjugate(), f]]))
