"""Spectral inputs: trigonometric cubic roots, a cyclic Jacobi eigensolver,
flow exponents u_i = 2 (w_i - Tr/N), and boundary eigenvector weights."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ComplexRoots, NoConvergence, VanishingComponent
from .matcore import HermitianMatrix, PrincipalInvariants

DISCRIMINANT_TOL = 1e-10
DEGENERACY_TOL = 1e-8
MAX_SWEEPS = 100
JACOBI_TOL = 1e-13
COMPONENT_TOL = 1e-12


@dataclass(frozen=True)
class DepressedCubic:
    """x^3 + p x + q."""

    p: float
    q: float

    @property
    def discriminant(self) -> float:
        return -4.0 * self.p ** 3 - 27.0 * self.q ** 2

    def __call__(self, x: float) -> float:
        return x ** 3 + self.p * x + self.q


def depressed_cubic(inv: PrincipalInvariants) -> DepressedCubic:
    """Shift the characteristic polynomial x^3 - I1 x^2 + I2 x - I3 by I1/3.

    I2 here is (Tr^2 H - Tr H^2)/2, so it enters the characteristic
    polynomial with a plus sign.
    """
    i1, i2, i3 = inv.i1, inv.i2, inv.i3
    p = -(i1 ** 2 - 3.0 * i2) / 3.0
    q = -(2.0 * i1 ** 3 - 9.0 * i1 * i2 + 27.0 * i3) / 27.0
    return DepressedCubic(p, q)


def cubic_roots(c: DepressedCubic) -> tuple[float, float, float]:
    """Three real roots of x^3 + p x + q, descending.

    Uses 2 sqrt(-p/3) cos(arccos(3q/(2p) sqrt(-3/p))/3 - 2 pi k/3).
    """
    p, q = c.p, c.q
    if p == 0.0 and q == 0.0:
        return (0.0, 0.0, 0.0)
    scale = 4.0 * abs(p) ** 3 + 27.0 * q ** 2
    if c.discriminant < -DISCRIMINANT_TOL * scale:
        raise ComplexRoots(f"discriminant {c.discriminant:.3e} < 0: roots are not all real")
    if p >= 0.0:
        # only reachable when both coefficients vanish to roundoff
        return (0.0, 0.0, 0.0)
    arg = 3.0 * q / (2.0 * p) * math.sqrt(-3.0 / p)
    # |arg| slightly above 1 means a double root (the discriminant test passed)
    arg = min(1.0, max(-1.0, arg))
    amp = 2.0 * math.sqrt(-p / 3.0)
    theta = math.acos(arg) / 3.0
    roots = [amp * math.cos(theta - 2.0 * math.pi * k / 3.0) for k in range(3)]
    return tuple(sorted(roots, reverse=True))


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted descending; vectors[:, k] pairs with values[k]."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values)


def _jacobi_rotation(app: float, aqq: float, apq: complex) -> np.ndarray:
    """2x2 unitary U with U^H [[app, apq], [apq*, aqq]] U diagonal."""
    r = abs(apq)
    phase = apq / r
    tau = (aqq - app) / (2.0 * r)
    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau)) if tau != 0.0 else 1.0
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c
    # the phase moves apq onto the real axis, then a real rotation zeroes it
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=complex)


def eigh(h: HermitianMatrix) -> Spectrum:
    """Cyclic Jacobi eigendecomposition with complex rotations.

    Deterministic: fixed row-major pivot order. Raises NoConvergence when the
    off-diagonal norm is not below 1e-13 ||H|| after 100 sweeps.
    """
    a = np.array(h.data, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    norm = np.linalg.norm(a)
    target = JACOBI_TOL * norm
    off = ~np.eye(n, dtype=bool)
    for _ in range(MAX_SWEEPS):
        if math.sqrt(float(np.sum(np.abs(a[off]) ** 2))) <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300 or abs(apq) <= 1e-18 * norm:
                    continue
                u = _jacobi_rotation(a[p, p].real, a[q, q].real, apq)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u
                a[idx, :] = u.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ u
    else:
        if math.sqrt(float(np.sum(np.abs(a[off]) ** 2))) > target:
            raise NoConvergence(f"Jacobi did not converge in {MAX_SWEEPS} sweeps")
    w = np.diag(a).real
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    # phase convention: largest-modulus component of each vector real positive
    for k in range(n):
        j = int(np.argmax(np.abs(v[:, k])))
        v[:, k] *= np.conj(v[j, k]) / abs(v[j, k])
        v[:, k] /= np.linalg.norm(v[:, k])
    w.setflags(write=False)
    v.setflags(write=False)
    return Spectrum(w, v)


@dataclass(frozen=True)
class ExponentSet:
    u: np.ndarray

    def __len__(self) -> int:
        return len(self.u)

    def __getitem__(self, k):
        return self.u[k]

    def is_degenerate(self, tol: float = DEGENERACY_TOL) -> bool:
        scale = float(np.max(np.abs(self.u))) if len(self.u) else 0.0
        return bool(np.any(np.abs(np.diff(self.u)) < tol * max(scale, 1e-300)))


def exponents(spec: Spectrum, trace: float) -> ExponentSet:
    u = 2.0 * (np.asarray(spec.values, float) - trace / spec.n)
    u = np.sort(u)[::-1].copy()
    u.setflags(write=False)
    return ExponentSet(u)


def gate_coefficients(spec: Spectrum, side: str = "first") -> np.ndarray:
    """Squared moduli |<e_1, v_k>|^2 (side='first') or |<e_N, v_k>|^2 (side='last').

    These are the weights of the first (last) exponential sum of the flow
    solution; they sum to one by completeness of the eigenbasis.
    """
    if side not in ("first", "last"):
        raise ValueError("side must be 'first' or 'last'")
    row = spec.vectors[0 if side == "first" else -1, :]
    weights = np.abs(row) ** 2
    if np.any(np.sqrt(weights) <= COMPONENT_TOL):
        k = int(np.argmin(weights))
        raise VanishingComponent(
            f"eigenvector {k} has a vanishing {side} component ({math.sqrt(weights[k]):.2e})"
        )
    return weights
