"""Pick the closed form that applies to a matrix and sample it on a grid."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .closed3 import calibrate3, eval2, exact2x2, series3
from .errors import UnsupportedExactCase
from .matcore import HermitianMatrix
from .tridiag import calibrate_tridiag, eval_tridiag


@dataclass(frozen=True)
class ExactRun:
    s: np.ndarray
    h: np.ndarray
    phases: Optional[np.ndarray] = None  # (samples, 3): phi_b, phi_c, phi_g
    kind: str = ""


def exact_trajectory(h0: HermitianMatrix, s_values: Sequence[float]) -> ExactRun:
    """Closed-form H(s) for 2x2, 3x3 or tridiagonal h0."""
    s = np.asarray(s_values, float)
    if h0.n == 2:
        sol = exact2x2(h0)
        return ExactRun(s, np.stack([eval2(sol, x).data for x in s]), None, "2x2")
    if h0.n == 3:
        sol = calibrate3(h0)
        mats, phases = series3(sol, list(s))
        mats = np.stack([m.data for m in mats])
        phases = np.array(phases, float) if sol.mode == "hermitian" else None
        return ExactRun(s, mats, phases, f"3x3-{sol.mode}")
    if h0.is_tridiagonal():
        sol = calibrate_tridiag(h0)
        return ExactRun(s, np.stack([eval_tridiag(sol, x).data for x in s]), None, "tridiagonal")
    raise UnsupportedExactCase(
        f"no closed form for a full {h0.n}x{h0.n} matrix; use the numeric method"
    )
