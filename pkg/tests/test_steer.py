import numpy as np
import pytest

from ensemblectl.ensemble import EnsembleSystem, validate
from ensemblectl.errors import ShapeMismatch
from ensemblectl.polyalg import Poly, PolyMatrix
from ensemblectl.steer import (
    DiscretizedEnsemble,
    SteeringProblem,
    discretize,
    reachability_map,
    sample_functions,
    simulate,
    step_kernels,
    synthesize,
)

b = Poly.x()
STEPS = [1, 2, 4, 8, 16, 32, 64]


def rk4_final(A, B, u_of_t, T, n_sub):
    """Classical RK4 on x' = A x + B u(t) from x = 0."""
    x = np.zeros(A.shape[0])
    h = T / n_sub
    f = lambda t, x: A @ x + B @ u_of_t(t)
    for k in range(n_sub):
        t = k * h
        k1 = f(t, x)
        k2 = f(t + h / 2, x + h / 2 * k1)
        k3 = f(t + h / 2, x + h / 2 * k2)
        k4 = f(t + h, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def projection_residual(R, d, n):
    """Per-sample distance of d to range(R) by an independent least-squares solve.

    Uses the same relative singular-value cutoff as the solver under test;
    the LAPACK default keeps directions at the 1e-17 level and returns noise.
    """
    u, *_ = np.linalg.lstsq(R, d, rcond=1e-10)
    res = (R @ u - d).reshape(-1, n)
    return np.linalg.norm(res, axis=1)


def test_discretize_grids(systems):
    de = discretize(systems["example1"], 9)
    assert np.array_equal(de.samples, np.linspace(-1, 1, 9))
    de = discretize(systems["example2"], 5)
    assert de.A.shape == (5, 2, 2)
    for s, beta in enumerate(de.samples):
        assert np.array_equal(de.A[s], np.diag([beta, 2 * beta]))
    de = discretize(systems["example4"], 5)
    assert de.B.shape == (5, 2, 2)


def test_symmetric_grid_is_exactly_symmetric(systems):
    de = discretize(systems["example1"], 9)
    assert np.array_equal(de.samples, -de.samples[::-1])


def test_pure_integrator_column():
    de = DiscretizedEnsemble(np.array([0.0]), np.zeros((1, 1, 1)), np.ones((1, 1, 1)))
    assert np.array_equal(reachability_map(de, 1.0, 1), np.ones((1, 1)))


def test_zero_drift_sample(systems):
    de = discretize(systems["example1"], 3)  # samples -1, 0, 1
    R = reachability_map(de, 1.0, 1)
    assert R[1, 0] == 1.0


def test_reachability_map_matches_rk4(systems):
    full = discretize(systems["example2"], 2)  # samples 1 and 2
    R = reachability_map(full, 1.0, 2)
    assert R.shape == (4, 2)
    oracle = np.zeros((4, 2))
    for j in range(2):
        u = lambda t, j=j: np.array([1.0 if j * 0.5 <= t < (j + 1) * 0.5 else 0.0])
        for s in range(2):
            # integrate each constant-input interval separately so the step lands on the switch
            x = np.zeros(2)
            for k in range(2):
                seg = rk4_final(full.A[s], full.B[s], lambda t: np.array([1.0 if k == j else 0.0]), 0.5, 4000)
                phi = rk4_free(full.A[s], x, 0.5, 4000)
                x = phi + seg
            oracle[2 * s : 2 * s + 2, j] = x
    assert np.allclose(R, oracle, atol=1e-10, rtol=0)


def rk4_free(A, x0, T, n_sub):
    x = x0.copy()
    h = T / n_sub
    for _ in range(n_sub):
        k1 = A @ x
        k2 = A @ (x + h / 2 * k1)
        k3 = A @ (x + h / 2 * k2)
        k4 = A @ (x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def test_nondiagonal_kernel_matches_rk4():
    A = np.array([[0.5, 1.0], [0.0, -1.0]])
    B = np.array([[0.0], [1.0]])
    phi, gam = step_kernels(A, B, 0.3)
    assert np.allclose(gam[:, 0], rk4_final(A, B, lambda t: np.array([1.0]), 0.3, 3000), atol=1e-12)
    assert np.allclose(phi @ np.array([1.0, 2.0]), rk4_free(A, np.array([1.0, 2.0]), 0.3, 3000), atol=1e-12)


def test_simulate_examples(systems):
    de = discretize(systems["example2"], 2)
    x0 = np.array([[1.0, -1.0], [0.5, 2.0]])
    out = simulate(de, x0, np.zeros((4, 1)), 1.0)
    for s, beta in enumerate(de.samples):
        assert np.allclose(out[s], np.exp(np.array([beta, 2 * beta])) * x0[s], rtol=1e-14)
    out = simulate(de, None, np.ones((1, 1)), 1.0)
    assert np.allclose(out[0], [np.e - 1, (np.e**2 - 1) / 2], rtol=1e-14)
    with pytest.raises(ShapeMismatch):
        simulate(de, None, np.ones((4, 2)), 1.0)


def test_free_response_target_needs_no_control(systems):
    de = discretize(systems["example4"], 5)
    x0 = np.ones((5, 2))
    xF = simulate(de, x0, np.zeros((8, 2)), 1.0)
    r = synthesize(SteeringProblem(xF=xF, x0=x0, steps=8), de)
    assert np.abs(r.controls).max() <= 1e-9
    assert r.residual_sup <= 1e-9


def test_controllable_sampled_ensemble_reaches_target(systems):
    de = discretize(systems["example3"], 9)
    xF = sample_functions([b], de)
    r = synthesize(SteeringProblem(xF=xF, T=1.0, steps=32), de)
    oracle = projection_residual(reachability_map(de, 1.0, 32), xF.reshape(-1), 1).max()
    assert r.residual_sup <= oracle + 1e-8
    assert r.residual_sup < 1e-2


def test_parity_floor_for_odd_target(systems):
    de = discretize(systems["example1"], 9)
    xF = sample_functions([b], de)
    r = synthesize(SteeringProblem(xF=xF, T=1.0, steps=32), de)
    assert r.residual_sup >= 1 - 1e-6
    # the projection onto even functions of the odd target is zero
    even = (xF[:, 0] + xF[::-1, 0]) / 2
    assert np.abs(even).max() == 0.0


@pytest.mark.parametrize("steps", [1, 4, 32])
def test_reachability_columns_are_even(systems, steps):
    de = discretize(systems["example1"], 9)
    R = reachability_map(de, 1.0, steps)
    assert np.abs(R - R[::-1]).max() <= 1e-12


def test_shared_value_residual_floor(systems):
    de = discretize(systems["example2"], 9)
    xF = sample_functions([Poly(), Poly([1])], de)  # x1 = 0 at beta = 2 but x2 = 1 at beta = 1
    r = synthesize(SteeringProblem(xF=xF, T=1.0, steps=32), de)
    oracle = projection_residual(reachability_map(de, 1.0, 32), xF.reshape(-1), 2).max()
    assert r.residual_sup == pytest.approx(oracle, abs=1e-8)
    assert r.residual_sup >= 0.5 - 1e-9


def test_controllable_pair_steers_same_target(systems):
    de = discretize(systems["example4"], 9)
    xF = sample_functions([Poly(), Poly([1])], de)
    r = synthesize(SteeringProblem(xF=xF, T=1.0, steps=32), de)
    assert r.residual_sup < 1e-2


FIXTURES = [
    ("example1", [b]),
    ("example2", [Poly(), Poly([1])]),
    ("example3", [b]),
    ("example4", [Poly(), Poly([1])]),
]


def _residuals(systems, name, target):
    de = discretize(systems[name], 9)
    xF = sample_functions(target, de)
    return [synthesize(SteeringProblem(xF=xF, T=1.0, steps=p), de) for p in STEPS]


@pytest.mark.parametrize("name,target", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_dyadic_refinement_l2_residual_nonincreasing(systems, name, target):
    rs = [np.linalg.norm(r.residual_per_sample) for r in _residuals(systems, name, target)]
    for coarse, fine in zip(rs, rs[1:]):
        assert fine <= coarse + 1e-8


@pytest.mark.parametrize("name,target", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_dyadic_refinement_sup_residual_nonincreasing(systems, name, target):
    rs = [r.residual_sup for r in _residuals(systems, name, target)]
    for coarse, fine in zip(rs, rs[1:]):
        assert fine <= coarse + 1e-8


@pytest.mark.parametrize("name,target", FIXTURES, ids=[f[0] for f in FIXTURES])
def test_simulate_synthesize_consistency(systems, name, target):
    de = discretize(systems[name], 9)
    xF = sample_functions(target, de)
    r = synthesize(SteeringProblem(xF=xF, T=1.0, steps=16), de)
    R = reachability_map(de, 1.0, 16)
    lifted = (R @ r.controls.reshape(-1)).reshape(de.S, de.n)
    sim = simulate(de, None, r.controls, 1.0)
    # rounding scales with the magnitude of the summands, not of the sum
    scale = (np.abs(R) @ np.abs(r.controls.reshape(-1))).reshape(de.S, de.n)
    assert np.all(np.abs(sim - lifted) <= 1e-12 * np.maximum(scale, 1.0))
    assert r.residual_sup == np.linalg.norm(sim - xF, axis=1).max()
    assert r.residual_sup == r.residual_per_sample.max()


def test_steps_must_be_dyadic(systems):
    de = discretize(systems["example1"], 3)
    with pytest.raises(ValueError):
        reachability_map(de, 1.0, 3)
