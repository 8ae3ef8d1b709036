"""Fixed-step RK4 integration of dH/ds = [G(H), H] for any generator.

This is the independent numerical oracle for every closed form in the
package. The state is re-Hermitized after each step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NonFinite, StepTooLarge
from .matcore import GeneratorKind, HermitianMatrix, _rhs_array

STEP_GUARD = 0.1


@dataclass(frozen=True)
class IntegrationPlan:
    s_max: float
    steps: int
    samples: tuple[float, ...] = ()
    generator: GeneratorKind = GeneratorKind.MIELKE

    def __post_init__(self):
        if not self.s_max > 0:
            raise ValueError("s_max must be positive")
        if int(self.steps) < 1:
            raise ValueError("steps must be >= 1")
        object.__setattr__(self, "generator", GeneratorKind(self.generator))
        object.__setattr__(self, "steps", int(self.steps))
        snapped = sorted({0} | {int(i) for i in self.sample_indices(self.samples)})
        h = self.s_max / self.steps
        object.__setattr__(self, "samples", tuple(i * h for i in snapped))

    @classmethod
    def uniform(cls, s_max: float, steps: int, n_samples: int | None = None,
                generator=GeneratorKind.MIELKE) -> "IntegrationPlan":
        """Samples evenly spread over [0, s_max]; every step if n_samples is None."""
        n_samples = steps + 1 if n_samples is None else n_samples
        return cls(s_max, steps, tuple(np.linspace(0.0, s_max, n_samples)), generator)

    @property
    def step(self) -> float:
        return self.s_max / self.steps

    def sample_indices(self, samples: Sequence[float] | None = None) -> np.ndarray:
        samples = self.samples if samples is None else samples
        s = np.asarray(samples, float)
        if np.any(s < 0) or np.any(s > self.s_max * (1 + 1e-12)):
            raise ValueError("samples must lie in [0, s_max]")
        return np.rint(s / (self.s_max / self.steps)).astype(int)


@dataclass(frozen=True)
class FlowTrajectory:
    """Sampled flow: s[k] paired with the matrix h[k]."""

    s: np.ndarray
    h: np.ndarray
    generator: GeneratorKind = GeneratorKind.MIELKE
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def samples(self) -> list[tuple[float, HermitianMatrix]]:
        return [(float(s), HermitianMatrix._wrap(m)) for s, m in zip(self.s, self.h)]

    def __len__(self) -> int:
        return len(self.s)

    def at(self, k: int) -> HermitianMatrix:
        return HermitianMatrix._wrap(self.h[k])

    def rhs(self) -> np.ndarray:
        """Flow right-hand side at every sample."""
        if "rhs" not in self._cache:
            self._cache["rhs"] = _rhs_array(self.h, self.generator)
        return self._cache["rhs"]


def _hermitize(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + np.conj(np.swapaxes(x, -1, -2)))


def integrate_many(h0s: Sequence[HermitianMatrix], plan: IntegrationPlan) -> list[FlowTrajectory]:
    """Integrate a batch of same-size initial matrices on one grid."""
    x = np.stack([np.asarray(h.data, dtype=complex) for h in h0s])
    kind = plan.generator
    h = plan.step
    idx = plan.sample_indices()
    want = np.zeros(plan.steps + 1, dtype=bool)
    want[idx] = True
    out = np.empty((len(idx),) + x.shape, dtype=complex)
    slot = 0
    if want[0]:
        out[slot] = x
        slot += 1
    for step in range(1, plan.steps + 1):
        k1 = _rhs_array(x, kind)
        rate = float(np.max(np.sqrt(np.sum(np.abs(k1) ** 2, axis=(-2, -1)))))
        if not np.isfinite(rate):
            raise NonFinite(f"non-finite state at s = {(step - 1) * h:g}")
        if rate * h > STEP_GUARD:
            raise StepTooLarge(
                f"||rhs|| * step = {rate * h:.3g} > {STEP_GUARD}; increase steps"
            )
        k2 = _rhs_array(x + 0.5 * h * k1, kind)
        k3 = _rhs_array(x + 0.5 * h * k2, kind)
        k4 = _rhs_array(x + h * k3, kind)
        x = _hermitize(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        if want[step]:
            out[slot] = x
            slot += 1
    if not np.all(np.isfinite(out)):
        raise NonFinite("integration produced non-finite values")
    s = idx * h
    return [FlowTrajectory(s.copy(), out[:, b].copy(), kind) for b in range(x.shape[0])]


def integrate(h0: HermitianMatrix, plan: IntegrationPlan) -> FlowTrajectory:
    """Classic RK4 with step s_max/steps; returns the requested samples (s=0 included)."""
    return integrate_many([h0], plan)[0]


def _hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def eigen_drift(traj: FlowTrajectory) -> float:
    """Max over samples of the Hausdorff distance between spectra at s and at 0."""
    # batched LAPACK here; the Jacobi solver is too slow for whole trajectories
    w = np.linalg.eigvalsh(traj.h)
    return max((_hausdorff(w[k], w[0]) for k in range(len(traj))), default=0.0)


def trace_drift(traj: FlowTrajectory) -> float:
    tr = np.trace(traj.h, axis1=-2, axis2=-1).real
    return float(np.max(np.abs(tr - tr[0])))
