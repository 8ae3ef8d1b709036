"""Closed-form Mielke flow for N x N tridiagonal Hermitian matrices.

The solution is a chain of exponential sums eta_1 .. eta_{N-1}, with
eta_0 = 1 and eta_N a constant, obeying tilde(eta_k) = 4 eta_{k-1} eta_{k+1}.
eta_k has one term per k-subset S of the exponents:

    p_S = 4^{-k(k-1)/2} prod_{i in S} p_i prod_{i<j in S} (u_i - u_j)^2
    exponent = sum_{i in S} u_i

Diagonal: a_k = Tr/N - (log eta_{k-1})'/2 + (log eta_k)'/2.
Off-diagonal moduli: b_k^2 = eta_{k-1} eta_{k+1} / eta_k^2. Phases and signs
of the off-diagonal entries do not change along the flow.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import expsum as es
from .errors import DegenerateExponents, DimensionUnsupported, FFViolation, NotTridiagonal, RoundTripFailure
from .expsum import ExpSum
from .matcore import HermitianMatrix
from .spectra import DEGENERACY_TOL, ExponentSet, eigh, exponents, gate_coefficients

MAX_N = 24
FF_TOL = 1e-6
ROUNDTRIP_TOL = 1e-7
TRIDIAGONAL_TOL = 1e-12


@dataclass(frozen=True)
class TridiagExact:
    n: int
    trace: float
    u: ExponentSet
    etas: tuple[ExpSum, ...]  # eta_1 .. eta_{N-1}
    eta_top: float  # the constant eta_N; equals 1 when the FF constraint holds
    b_signs: tuple[float, ...]
    phases: tuple[float, ...]

    def chain(self) -> list[ExpSum]:
        """eta_0 .. eta_N."""
        return [ExpSum([(1.0, 0.0)]), *self.etas, ExpSum([(self.eta_top, 0.0)])]


def _as_exponents(u) -> ExponentSet:
    if isinstance(u, ExponentSet):
        return u
    arr = np.asarray(u, float)
    arr.setflags(write=False)
    return ExponentSet(arr)


def _check_distinct(u: ExponentSet) -> None:
    vals = np.sort(np.asarray(u.u, float))
    scale = max(float(np.max(np.abs(vals))), 1e-300) if len(vals) else 1.0
    if len(vals) > 1 and np.min(np.diff(vals)) <= DEGENERACY_TOL * scale:
        raise DegenerateExponents("exponents must be distinct for the tridiagonal closed form")


def _check_size(n: int, max_n: int) -> None:
    if n > max_n:
        # eta_{n/2} alone holds C(n, n/2) terms of 16 bytes each
        est = math.comb(n, n // 2) * 16 * n / 2 ** 20
        raise DimensionUnsupported(
            f"n = {n} exceeds max_n = {max_n}; the chain would need roughly {est:.0f} MiB"
        )


def _coefficient(k: int, subset: Sequence[int], u: np.ndarray, p: np.ndarray) -> float:
    log_c = -k * (k - 1) * math.log(2.0)
    for i in subset:
        log_c += math.log(p[i])
    for i, j in itertools.combinations(subset, 2):
        log_c += 2.0 * math.log(abs(u[i] - u[j]))
    return math.exp(log_c)


def eta_chain(u, p1: Sequence[float], max_n: int = MAX_N) -> list[ExpSum]:
    """eta_1 .. eta_{N-1} from the exponents and the coefficients of eta_1."""
    u = _as_exponents(u)
    uu = np.asarray(u.u, float)
    p = np.asarray(p1, float)
    n = len(uu)
    if len(p) != n:
        raise ValueError("u and p1 must have the same length")
    if n < 2:
        raise DimensionUnsupported("need at least two exponents")
    _check_size(n, max_n)
    _check_distinct(u)
    if np.any(~(p > 0)):
        raise ValueError("p1 must be positive")
    return [
        ExpSum(
            (_coefficient(k, s, uu, p), float(sum(uu[i] for i in s)))
            for s in itertools.combinations(range(n), k)
        )
        for k in range(1, n)
    ]


def _top_constant(uu: np.ndarray, p: np.ndarray) -> float:
    return _coefficient(len(uu), range(len(uu)), uu, p)


def ff_target(u) -> float:
    """2^{N(N-1)} / prod_{i<j} (u_i - u_j)^2."""
    uu = np.asarray(_as_exponents(u).u, float)
    n = len(uu)
    log_t = n * (n - 1) * math.log(2.0) - sum(
        2.0 * math.log(abs(a - b)) for a, b in itertools.combinations(uu, 2)
    )
    return math.exp(log_t)


def ff_residual(u, p1: Sequence[float]) -> float:
    """|prod p1 / target - 1| for the product constraint on eta_1's coefficients."""
    u = _as_exponents(u)
    _check_distinct(u)
    p = np.asarray(p1, float)
    log_ratio = float(np.sum(np.log(p))) - math.log(ff_target(u))
    return abs(math.expm1(log_ratio))


def ff_rescale(u, p1: Sequence[float]) -> tuple[np.ndarray, float]:
    """The unique lambda > 0 with lambda * p1 satisfying the product constraint."""
    u = _as_exponents(u)
    _check_distinct(u)
    p = np.asarray(p1, float)
    lam = math.exp((math.log(ff_target(u)) - float(np.sum(np.log(p)))) / len(p))
    return lam * p, lam


def _solution(trace: float, u: ExponentSet, p: np.ndarray, signs, phases, max_n: int) -> TridiagExact:
    etas = eta_chain(u, p, max_n)
    top = _top_constant(np.asarray(u.u, float), p)
    n = len(u)
    return TridiagExact(n, float(trace), u, tuple(etas), top, tuple(signs), tuple(phases))


def build_from_parameters(trace: float, u, p1: Sequence[float], max_n: int = MAX_N):
    """Solution from (trace, exponents, eta_1 coefficients) and its matrix at s = 0."""
    u = _as_exponents(u)
    res = ff_residual(u, p1)
    if res > FF_TOL:
        raise FFViolation(f"product constraint residual {res:.3e} > {FF_TOL:g}; see ff_rescale")
    n = len(u)
    sol = _solution(trace, u, np.asarray(p1, float), [1.0] * (n - 1), [0.0] * (n - 1), max_n)
    return sol, eval_tridiag(sol, 0.0)


def calibrate_tridiag(h0: HermitianMatrix, max_n: int = MAX_N) -> TridiagExact:
    """Closed-form solution matched to a tridiagonal initial matrix.

    eta_1 takes the squared first components of the unit eigenvectors, so
    eta_1(0) = 1; this differs from the product-constraint scale by a uniform
    factor that cancels in every matrix entry.
    """
    if not h0.is_tridiagonal(TRIDIAGONAL_TOL):
        raise NotTridiagonal("entries beyond the first off-diagonal must vanish")
    _check_size(h0.n, max_n)
    spec = eigh(h0)
    u = exponents(spec, h0.trace)
    _check_distinct(u)
    p1 = gate_coefficients(spec, "first")
    sup = np.diagonal(h0.data, 1)
    if h0.is_real:
        signs = [float(np.sign(x.real)) or 1.0 for x in sup]
        phases = [0.0] * len(sup)
    else:
        signs = [1.0] * len(sup)
        phases = [float(np.angle(x)) for x in sup]
    sol = _solution(h0.trace, u, p1, signs, phases, max_n)
    err = float(np.max(np.abs(eval_tridiag(sol, 0.0).data - h0.data)))
    if err > ROUNDTRIP_TOL * max(1.0, h0.norm()):
        raise RoundTripFailure(f"tridiagonal calibration round trip error {err:.3e}")
    return sol


def eval_tridiag(sol: TridiagExact, s: float) -> HermitianMatrix:
    n = sol.n
    logs = [0.0] + [e.log_value(s) for e in sol.etas] + [math.log(sol.eta_top)]
    dlogs = [0.0] + [e.log_derivative(s) for e in sol.etas] + [0.0]
    h = np.zeros((n, n), dtype=complex)
    t = sol.trace / n
    for k in range(n):
        h[k, k] = t - 0.5 * dlogs[k] + 0.5 * dlogs[k + 1]
    for k in range(n - 1):
        mod = math.exp(0.5 * (logs[k] + logs[k + 2]) - logs[k + 1])
        z = sol.b_signs[k] * mod * complex(math.cos(sol.phases[k]), math.sin(sol.phases[k]))
        h[k, k + 1] = z
        h[k + 1, k] = z.conjugate()
    return HermitianMatrix._wrap(h)


def eval_tridiag_series(sol: TridiagExact, s_values: Sequence[float]) -> list[HermitianMatrix]:
    return [eval_tridiag(sol, s) for s in s_values]


def rescaled(sol: TridiagExact, lam: float) -> TridiagExact:
    """Same flow with p1 scaled by lam (eta_k scales by lam^k)."""
    etas = tuple(lam ** (k + 1) * e for k, e in enumerate(sol.etas))
    return TridiagExact(sol.n, sol.trace, sol.u, etas, sol.eta_top * lam ** sol.n,
                        sol.b_signs, sol.phases)


def chain_residual(sol: TridiagExact) -> float:
    """Max relative coefficient mismatch of tilde(eta_k) = 4 eta_{k-1} eta_{k+1}."""
    chain = sol.chain()
    worst = 0.0
    for k in range(1, sol.n):
        lhs = es.tilde(chain[k])
        rhs = 4.0 * es.product(chain[k - 1], chain[k + 1])
        scale = max(np.max(np.abs(lhs.coefs), initial=0.0), np.max(np.abs(rhs.coefs), initial=0.0))
        diff = lhs - rhs
        if len(diff) and scale > 0:
            worst = max(worst, float(np.max(np.abs(diff.coefs))) / scale)
    return worst
