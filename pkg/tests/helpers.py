"""Shared matrix generators and reference data for the test-suite."""
from __future__ import annotations

import math

import numpy as np

from wegnerflow.matcore import HermitianMatrix

# one line per acceptance criterion, printed in the pytest terminal summary
ACCEPTANCE_LOG: list[str] = []


def record(tag: str, ok: bool, detail: str) -> bool:
    line = f"{tag:5s} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LOG.append(line)
    print(line)
    return ok


def hermitian_array(rng, n, complex_=True, low=-2.0, high=2.0):
    m = rng.uniform(low, high, (n, n))
    if complex_:
        m = m + 1j * rng.uniform(low, high, (n, n))
    upper = np.triu(m, 1)
    return np.diag(rng.uniform(low, high, n)) + upper + upper.conj().T


def min_gap(m) -> float:
    w = np.linalg.eigvalsh(m)
    return float(np.min(np.diff(w))) if len(w) > 1 else math.inf


def random_hermitian(rng, n, gap=0.0, complex_=True, low=-2.0, high=2.0) -> HermitianMatrix:
    """Uniform entries in [low, high], resampled until the spectral gap is >= gap."""
    while True:
        m = hermitian_array(rng, n, complex_, low, high)
        if min_gap(m) >= gap:
            return HermitianMatrix(m)


def random_tridiagonal(rng, n, gap=0.0, complex_=False, low=-2.0, high=2.0) -> HermitianMatrix:
    while True:
        b = rng.uniform(low, high, n - 1)
        if complex_:
            b = b * np.exp(1j * rng.uniform(-math.pi, math.pi, n - 1))
        m = np.diag(rng.uniform(low, high, n)).astype(complex) + np.diag(b, 1) + np.diag(np.conj(b), -1)
        if min_gap(m) >= gap:
            return HermitianMatrix(m)


def with_spectrum(rng, values, complex_=False) -> HermitianMatrix:
    """Q diag(values) Q^H for a random orthogonal (unitary) Q."""
    n = len(values)
    z = rng.normal(size=(n, n))
    if complex_:
        z = z + 1j * rng.normal(size=(n, n))
    q, _ = np.linalg.qr(z)
    m = q @ np.diag(values) @ q.conj().T
    m = 0.5 * (m + m.conj().T)
    np.fill_diagonal(m, m.diagonal().real)
    return HermitianMatrix(m if complex_ else m.real)


_r = math.sqrt
APP_D_SYMMETRIC = np.array([
    [17 / 6, _r(5 / 87), 3 * _r(5 / 58)],
    [_r(5 / 87), 547 / 174, 26 / 29 * _r(2 / 3)],
    [3 * _r(5 / 58), 26 / 29 * _r(2 / 3), 350 / 87],
])


def _app_d_hermitian():
    m = APP_D_SYMMETRIC.astype(complex)
    m[0, 1] *= np.exp(1j * math.pi / 3)
    m[0, 2] *= np.exp(-1j * math.pi / 2)
    m[1, 2] *= np.exp(-1j * math.pi / 6)
    upper = np.triu(m, 1)
    return np.diag(np.diag(m).real) + upper + upper.conj().T


APP_D_HERMITIAN = _app_d_hermitian()
APP_D_NORM = _r(58 / 5) / 3

APP_E_TRACE = 5.0
APP_E_U = (2.0, 1.5, 1.0, -0.5, -4.0)
APP_E_P1 = (128 / 121, 32 / 49, 16 / 25, 8 / 9, 512 / 225)
APP_E_H0_DIAG = (
    1740683 / 3678812,
    22231005067381 / 70129227185011,
    39263366363260747 / 38462269852632232,
    8664841726526959 / 5719587241749384,
    18982507 / 11339169,
)
APP_E_H0_OFF = (
    385 * _r(76252037 / 2) / 1839406,
    6 * _r(57988393428551) / 76252037,
    3 * _r(4323173670686265) / 504409736,
    154 * _r(126102434) / 11339169,
)
