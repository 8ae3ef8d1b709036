"""Residual checks for 4x4 real symmetric Mielke flows.

The diagonal of a sampled trajectory defines three positive curves through

    (log eta_1)' = 2 (a_1 - Tr/4)
    (log eta_2)' = (log eta_1)' + 2 (a_2 - Tr/4)
    (log eta_3)' = (log eta_2)' + 2 (a_3 - Tr/4)

and every structural relation below is stated in terms of them. Each eta_k
is also fitted onto the exponentials exp(s * sum of k exponents); second
derivatives (the tilde operator) are taken from that fit rather than from
finite differences, so the beta relations test the exponential structure and
are not just restatements of the flow equation.

All checks are invariant under rescaling eta_k -> c_k eta_k.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import expsum as es
from .errors import DimensionUnsupported, NotRealSymmetric, TooSparse
from .expsum import ExpSum
from .flow_numeric import FlowTrajectory, IntegrationPlan, integrate
from .matcore import HermitianMatrix

MIN_SAMPLES_PER_UNIT = 200
FIT_WINDOW = 3.0


@dataclass(frozen=True)
class ReducedVariables4:
    z: tuple[float, float, float]
    beta: tuple[float, float, float]
    delta: tuple[float, float]
    gamma: float


@dataclass(frozen=True)
class Residual4Report:
    max_gamma_product_drift: float
    max_beta_residuals: tuple[float, float, float]
    max_delta_ratio_drift: tuple[float, float]
    rho_condition_residuals: tuple[float, float, float]
    eta2_fit_residual: float
    eta_fit_residuals: tuple[float, float, float] = (0.0, 0.0, 0.0)
    fit_condition: float = 1.0
    fit_window: float = 0.0

    def worst(self) -> float:
        return max(
            self.max_gamma_product_drift,
            *self.max_beta_residuals,
            *self.max_delta_ratio_drift,
            *self.rho_condition_residuals,
            self.eta2_fit_residual,
        )


def _require_sym4(h: HermitianMatrix) -> np.ndarray:
    if h.n != 4:
        raise DimensionUnsupported(f"expected a 4x4 matrix, got n={h.n}")
    if not h.is_real:
        raise NotRealSymmetric("the 4x4 harness handles real symmetric matrices only")
    return h.data.real


def reduced4(h: HermitianMatrix) -> ReducedVariables4:
    m = _require_sym4(h)
    a = np.diag(m)
    return ReducedVariables4(
        tuple(float(a[k] - a[k + 1]) for k in range(3)),
        tuple(float(m[k, k + 1] ** 2) for k in range(3)),
        (float(m[0, 2] ** 2), float(m[1, 3] ** 2)),
        float(m[0, 3] ** 2),
    )


def _log_derivatives(diag: np.ndarray, trace: float) -> np.ndarray:
    """(log eta_k)' for k = 1, 2, 3 from diagonals of shape (samples, 4)."""
    return 2.0 * np.cumsum(diag[:, :3] - trace / 4.0, axis=1)


def reconstruct_etas(traj: FlowTrajectory) -> np.ndarray:
    """eta_1, eta_2, eta_3 sampled on traj.s, each normalized to 1 at s = 0.

    Cumulative trapezoid on the log-derivatives with the endpoint derivative
    correction h^2/12 (L'_i - L'_{i+1}); L' comes from the flow right-hand side
    at the samples, which raises the rule from second to fourth order.
    Returns an array of shape (3, samples).
    """
    s = np.asarray(traj.s, float)
    if traj.h.shape[-1] != 4:
        raise DimensionUnsupported("reconstruct_etas needs a 4x4 trajectory")
    span = s[-1] - s[0]
    if len(s) < 2 or (len(s) - 1) / span < MIN_SAMPLES_PER_UNIT:
        raise TooSparse(f"need at least {MIN_SAMPLES_PER_UNIT} samples per unit s")
    trace = float(np.trace(traj.h[0]).real)
    ld = _log_derivatives(np.diagonal(traj.h, axis1=1, axis2=2).real, trace)
    ldd = 2.0 * np.cumsum(np.diagonal(traj.rhs(), axis1=1, axis2=2).real[:, :3], axis=1)
    h = np.diff(s)[:, None]
    steps = 0.5 * h * (ld[1:] + ld[:-1]) + h * h / 12.0 * (ldd[:-1] - ldd[1:])
    logs = np.vstack([np.zeros((1, 3)), np.cumsum(steps, axis=0)])
    return np.exp(logs).T


def _basis_exponents(u: np.ndarray, k: int) -> np.ndarray:
    return np.array([sum(c) for c in itertools.combinations(u, k)], float)


def fit_exponential(s: np.ndarray, values: np.ndarray, exps: np.ndarray):
    """Least-squares fit of values onto exp(e s); returns (ExpSum, relative residual, cond)."""
    basis = np.exp(np.outer(s, exps))
    col = np.linalg.norm(basis, axis=0)
    coef, *_ = np.linalg.lstsq(basis / col, values, rcond=None)
    coef = coef / col
    resid = float(np.linalg.norm(basis @ coef - values) / np.linalg.norm(values))
    cond = float(np.linalg.cond(basis / col))
    return ExpSum(zip(coef, exps)), resid, cond


def _spectrum_exponents(h0: HermitianMatrix) -> np.ndarray:
    w = np.linalg.eigvalsh(h0.data)
    return np.sort(2.0 * (w - h0.trace / 4.0))[::-1]


def default_plan(h0: HermitianMatrix) -> IntegrationPlan:
    u = _spectrum_exponents(h0)
    s_max = FIT_WINDOW / max(float(np.max(np.abs(u))), 1e-12)
    steps = max(1000, int(math.ceil(400 * s_max)))
    return IntegrationPlan.uniform(s_max, steps)


def _tilde_over_sq(f: ExpSum, s: np.ndarray) -> np.ndarray:
    """tilde(f) / (4 f^2) = (log f)'' / 4 along s."""
    df = es.derivative(f)
    d2f = es.derivative(df)
    v, v1, v2 = (es.eval_many(x, s) for x in (f, df, d2f))
    return (v * v2 - v1 * v1) / (4.0 * v * v)


def _drift(x: np.ndarray) -> float:
    if x[0] == 0.0:
        return float(np.max(np.abs(x)))
    return float(np.max(np.abs(x / x[0] - 1.0)))


def _residuals(h0: HermitianMatrix, plan: Optional[IntegrationPlan]) -> Residual4Report:
    _require_sym4(h0)
    plan = plan or default_plan(h0)
    traj = integrate(h0, plan)
    s = np.asarray(traj.s, float)
    m = traj.h.real
    eta = reconstruct_etas(traj)
    beta = np.stack([m[:, k, k + 1] ** 2 for k in range(3)])
    delta = np.stack([m[:, 0, 2] ** 2, m[:, 1, 3] ** 2])
    gamma = m[:, 0, 3] ** 2

    gamma_drift = _drift(gamma * eta[0] * eta[2]) if gamma[0] > 0 else float(np.max(gamma))
    ratio1 = delta[0] * eta[0] * eta[1] / eta[2]
    ratio2 = delta[1] * eta[1] * eta[2] / eta[0]
    delta_drift = (_drift(ratio1), _drift(ratio2))

    u = _spectrum_exponents(h0)
    window = min(s[-1], FIT_WINDOW / max(float(np.max(np.abs(u))), 1e-12))
    sel = s <= window * (1 + 1e-12)
    fits, fit_res, conds = [], [], []
    for k in range(3):
        f, r, c = fit_exponential(s[sel], eta[k][sel], _basis_exponents(u, k + 1))
        fits.append(f)
        fit_res.append(r)
        conds.append(c)

    sw = s[sel]
    t = [_tilde_over_sq(f, sw) for f in fits]
    b, d, g = beta[:, sel], delta[:, sel], gamma[sel]
    beta_res = (
        float(np.max(np.abs(b[0] + d[0] + g - t[0]))),
        float(np.max(np.abs(b[1] + d[0] + d[1] + g - t[1]))),
        float(np.max(np.abs(b[2] + d[1] + g - t[2]))),
    )

    # g0 = 0 relations: delta_1 = k1 eta3/(eta1 eta2), delta_2 = k2 eta1/(eta2 eta3)
    # with the constants k1, k2 read off at s = 0
    e1, e2, e3 = (es.eval_many(f, sw) for f in fits)
    k1 = delta[0][0] * eta[0][0] * eta[1][0] / eta[2][0]
    k2 = delta[1][0] * eta[1][0] * eta[2][0] / eta[0][0]
    rho_exprs = (
        t[0] - k1 * e3 / (e1 * e2),
        t[1] - k1 * e3 / (e1 * e2) - k2 * e1 / (e2 * e3),
        t[2] - k2 * e1 / (e2 * e3),
    )
    rho_res = tuple(
        float(max(np.max(np.abs(b[k] - rho_exprs[k])), np.max(np.maximum(-rho_exprs[k], 0.0))))
        for k in range(3)
    )
    return Residual4Report(
        gamma_drift, beta_res, delta_drift, rho_res, fit_res[1],
        tuple(fit_res), max(conds), float(window),
    )


def residuals_g0zero(h0: HermitianMatrix, plan: Optional[IntegrationPlan] = None) -> Residual4Report:
    """Residuals of the five-diagonal (zero corner) relations along the flow of h0."""
    m = _require_sym4(h0)
    if m[0, 3] != 0.0:
        raise ValueError("residuals_g0zero needs a zero corner entry H[0, 3]")
    return _residuals(h0, plan)


def residuals_general(h0: HermitianMatrix, plan: Optional[IntegrationPlan] = None) -> Residual4Report:
    """Residuals for a full 4x4 symmetric h0.

    The delta-ratio and rho fields hold only when the corner entry is zero;
    for other inputs they are reported but expected to be large.
    """
    return _residuals(h0, plan)
