import math

import numpy as np
import pytest

from helpers import APP_D_SYMMETRIC, random_hermitian
from wegnerflow.closed3 import calibrate3, eval3
from wegnerflow.errors import StepTooLarge
from wegnerflow.flow_numeric import IntegrationPlan, eigen_drift, integrate, integrate_many, trace_drift
from wegnerflow.matcore import GeneratorKind, validate


def test_plan_snaps_samples_to_grid():
    plan = IntegrationPlan(1.0, 10, (0.33, 0.5, 1.0))
    assert plan.samples == pytest.approx((0.0, 0.3, 0.5, 1.0))
    assert plan.step == 0.1
    with pytest.raises(ValueError):
        IntegrationPlan(1.0, 10, (1.5,))
    with pytest.raises(ValueError):
        IntegrationPlan(0.0, 10)
    with pytest.raises(ValueError):
        IntegrationPlan(1.0, 0)


def test_uniform_plan():
    plan = IntegrationPlan.uniform(2.0, 100, 5)
    assert plan.samples == pytest.approx((0, 0.5, 1, 1.5, 2))
    assert len(IntegrationPlan.uniform(1.0, 8).samples) == 9


def test_diagonal_is_fixed_point():
    h = validate(np.diag([1.0, -2.0, 0.5]))
    tr = integrate(h, IntegrationPlan.uniform(3.0, 30, 4))
    assert np.all(tr.h == h.data)
    assert eigen_drift(tr) == 0.0 and trace_drift(tr) == 0.0


def test_two_by_two_closed_form():
    tr = integrate(validate([[1, 1], [1, 1]]), IntegrationPlan.uniform(3.0, 3000, 31))
    s = tr.s
    np.testing.assert_allclose(tr.h[:, 0, 0].real, 1 + np.tanh(2 * s), atol=1e-8)
    np.testing.assert_allclose(tr.h[:, 1, 1].real, 1 - np.tanh(2 * s), atol=1e-8)
    np.testing.assert_allclose(tr.h[:, 0, 1].real, 1 / np.cosh(2 * s), atol=1e-8)
    assert tr.h[-1, 0, 0].real == pytest.approx(2.0, abs=1e-4)


def test_symmetric_example_matches_closed_form():
    h = validate(APP_D_SYMMETRIC)
    tr = integrate(h, IntegrationPlan(2.0, 2000, (0.5, 1.0, 2.0)))
    sol = calibrate3(h)
    for s, m in zip(tr.s, tr.h):
        assert np.max(np.abs(eval3(sol, s).data - m)) <= 1e-7


def test_trajectory_is_hermitian_and_isospectral():
    rng = np.random.default_rng(0)
    h = random_hermitian(rng, 4)
    tr = integrate(h, IntegrationPlan.uniform(3.0, 3000, 31))
    np.testing.assert_array_equal(tr.h, np.conj(np.swapaxes(tr.h, 1, 2)))
    assert trace_drift(tr) <= 1e-9 * (1 + abs(h.trace))
    assert eigen_drift(tr) <= 1e-8
    assert len(tr) == 31 and tr.at(0).n == 4
    assert len(tr.samples) == 31


def test_batched_integration_matches_single():
    rng = np.random.default_rng(1)
    hs = [random_hermitian(rng, 3) for _ in range(3)]
    plan = IntegrationPlan.uniform(1.0, 2000, 11)
    for h, tr in zip(hs, integrate_many(hs, plan)):
        np.testing.assert_allclose(tr.h, integrate(h, plan).h, atol=1e-15)


def test_eigen_drift_has_rk4_order():
    rng = np.random.default_rng(2)
    h = random_hermitian(rng, 3, low=-0.5, high=0.5)
    drifts = [eigen_drift(integrate(h, IntegrationPlan.uniform(2.0, n, 11))) for n in (40, 80)]
    assert drifts[0] / drifts[1] > 10


def test_step_guard():
    h = validate(10 * np.ones((3, 3)))
    with pytest.raises(StepTooLarge):
        integrate(h, IntegrationPlan.uniform(1.0, 10))


def test_wegner_generator_runs_and_sorts():
    h = validate([[0.0, 1.0], [1.0, 1.0]])
    tr = integrate(h, IntegrationPlan.uniform(10.0, 5000, 3, GeneratorKind.WEGNER))
    w = np.linalg.eigvalsh(h.data)
    assert abs(tr.h[-1, 0, 1]) < 1e-6
    np.testing.assert_allclose(sorted(np.diag(tr.h[-1]).real), w, atol=1e-6)
    assert tr.generator is GeneratorKind.WEGNER


def test_rhs_matches_finite_difference():
    rng = np.random.default_rng(5)
    h = random_hermitian(rng, 3)
    tr = integrate(h, IntegrationPlan.uniform(0.2, 2000))
    x, dx = tr.h, 2 * tr.s[1]
    # five-point central difference with spacing 2 steps
    fd = (x[996] - 8 * x[998] + 8 * x[1002] - x[1004]) / (12 * dx)
    assert np.max(np.abs(tr.rhs()[1000] - fd)) < 1e-8 * np.max(np.abs(fd))
    assert math.isfinite(float(np.abs(tr.rhs()).max()))
