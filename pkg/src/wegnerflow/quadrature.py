"""Adaptive Simpson quadrature for smooth bounded integrands."""
from __future__ import annotations

from typing import Callable

from .errors import QuadratureFailure

MAX_INTERVALS = 10 ** 6
ROUNDOFF = 64 * 2.0 ** -52


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_intervals: int = MAX_INTERVALS,
    initial_panels: int = 4,
) -> float:
    """Integrate f over [a, b] to absolute tolerance ``tol``.

    Iterative (explicit stack) with Richardson correction on accepted panels.
    A panel is also accepted once its Simpson difference is at the roundoff
    level of its own value, since the requested tolerance may sit below what
    double precision can resolve for large integrands.
    Raises QuadratureFailure when more than ``max_intervals`` subdivisions
    would be needed.
    """
    if a == b:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_intervals, initial_panels)
    width = (b - a) / initial_panels
    stack = []
    for k in range(initial_panels):
        lo = a + k * width
        hi = b if k == initial_panels - 1 else lo + width
        mid = 0.5 * (lo + hi)
        flo, fmid, fhi = f(lo), f(mid), f(hi)
        whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
        stack.append((lo, hi, flo, fmid, fhi, whole, tol / initial_panels))
    total = 0.0
    splits = 0
    while stack:
        lo, hi, flo, fmid, fhi, whole, eps = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - whole
        # below the roundoff floor of the panel further splitting cannot help
        floor = ROUNDOFF * (abs(left) + abs(right))
        if abs(delta) <= 15.0 * max(eps, floor) or hi - lo <= 1e-14 * max(1.0, abs(hi)):
            total += left + right + delta / 15.0
            continue
        splits += 1
        if splits > max_intervals:
            raise QuadratureFailure(f"tolerance {tol:g} not reached within {max_intervals} subdivisions")
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps))
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps))
    return total
