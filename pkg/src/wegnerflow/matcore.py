"""Hermitian matrix values, flow generators and the flow right-hand side.

The flow is dH/ds = [G(H), H] where G is either the Mielke generator
(upper triangle copied, lower triangle negated, zero diagonal) or the
Wegner generator [diag(H), H].
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionUnsupported, HermiticityViolation, NonFinite

HERMITICITY_TOL = 1e-12


class GeneratorKind(enum.Enum):
    MIELKE = "mielke"
    WEGNER = "wegner"


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Immutable dense n x n Hermitian matrix (n >= 2).

    Construction validates; nothing is symmetrized behind the caller's back.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionUnsupported(f"matrix must be square, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise DimensionUnsupported("matrix dimension must be at least 2")
        if not np.all(np.isfinite(arr)):
            raise NonFinite("matrix has non-finite entries")
        mismatch = np.max(np.abs(arr - arr.conj().T))
        if mismatch > HERMITICITY_TOL:
            raise HermiticityViolation(
                f"max |H[i,j] - conj(H[j,i])| = {mismatch:.3e} exceeds {HERMITICITY_TOL:g}"
            )
        if np.any(np.diag(arr).imag != 0.0):
            raise HermiticityViolation("diagonal entries must be real")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def _wrap(cls, arr: np.ndarray) -> "HermitianMatrix":
        # trusted path for internally produced matrices: exact Hermitian projection
        arr = np.array(arr, dtype=complex)
        arr = 0.5 * (arr + arr.conj().T)
        np.fill_diagonal(arr, np.diag(arr).real)
        if not np.all(np.isfinite(arr)):
            raise NonFinite("matrix has non-finite entries")
        arr.setflags(write=False)
        obj = object.__new__(cls)
        object.__setattr__(obj, "data", arr)
        return obj

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, idx):
        return self.data[idx]

    @property
    def trace(self) -> float:
        return float(np.trace(self.data).real)

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.data.imag == 0.0))

    def is_tridiagonal(self, tol: float = 1e-12) -> bool:
        i, j = np.indices(self.data.shape)
        return bool(np.all(np.abs(self.data[np.abs(i - j) > 1]) <= tol))

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def to_array(self) -> np.ndarray:
        return np.array(self.data)

    def __repr__(self) -> str:
        return f"HermitianMatrix(n={self.n}, data={np.array2string(self.data, precision=6)})"


def validate(matrix) -> HermitianMatrix:
    """Check a raw square grid of numbers and return it as a HermitianMatrix."""
    return HermitianMatrix(np.asarray(matrix, dtype=complex))


def _mielke_array(h: np.ndarray) -> np.ndarray:
    upper = np.triu(h, k=1)
    return upper - np.conj(np.swapaxes(upper, -1, -2))


def _wegner_array(h: np.ndarray) -> np.ndarray:
    diag = np.diagonal(h, axis1=-2, axis2=-1)
    # [D, H]_{ij} = (d_i - d_j) H_{ij}
    return (diag[..., :, None] - diag[..., None, :]) * h


def _rhs_array(h: np.ndarray, kind: GeneratorKind) -> np.ndarray:
    """[G(H), H] on a (..., n, n) stack of arrays."""
    g = _mielke_array(h) if kind is GeneratorKind.MIELKE else _wegner_array(h)
    return g @ h - h @ g


def mielke_generator(h: HermitianMatrix) -> np.ndarray:
    return _mielke_array(h.data)


def wegner_generator(h: HermitianMatrix) -> np.ndarray:
    return _wegner_array(h.data)


def flow_rhs(h: HermitianMatrix, kind: GeneratorKind = GeneratorKind.MIELKE) -> np.ndarray:
    """Right-hand side [G, H] of the flow equation; Hermitian and traceless."""
    return _rhs_array(h.data, GeneratorKind(kind))


@dataclass(frozen=True)
class PrincipalInvariants:
    i1: float
    i2: float
    i3: float


def principal_invariants(h: HermitianMatrix) -> PrincipalInvariants:
    """Trace, second invariant and determinant of a 3x3 Hermitian matrix."""
    if h.n != 3:
        raise DimensionUnsupported(f"principal invariants are defined here for n=3, got n={h.n}")
    m = h.data
    i1 = float(np.trace(m).real)
    i2 = float(0.5 * (i1 ** 2 - np.trace(m @ m).real))
    i3 = float(np.linalg.det(m).real)
    return PrincipalInvariants(i1, i2, i3)


def offdiag_sq_norm(h: HermitianMatrix) -> float:
    m = h.data if isinstance(h, HermitianMatrix) else np.asarray(h)
    off = ~np.eye(m.shape[-1], dtype=bool)
    return float(np.sum(np.abs(m[off]) ** 2))
