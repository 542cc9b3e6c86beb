"""Open-loop steering of a sampled ensemble with piecewise-constant inputs.

Floating point only. Results here corroborate exact verdicts; they never
decide anything.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .ensemble import EnsembleSystem
from .errors import ShapeMismatch

SVD_RTOL = 1e-10


@dataclass(frozen=True)
class DiscretizedEnsemble:
    samples: np.ndarray  # (S,)
    A: np.ndarray  # (S, n, n)
    B: np.ndarray  # (S, n, m)
    grid: tuple = ()  # exact sample points when known

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.B.shape[2]

    @property
    def S(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class SteeringProblem:
    xF: np.ndarray  # (S, n)
    x0: Optional[np.ndarray] = None
    T: float = 1.0
    steps: int = 32


@dataclass(frozen=True)
class SteeringResult:
    controls: np.ndarray  # (steps, m)
    residual_sup: float
    residual_per_sample: np.ndarray
    reachability_rank: int
    singular_values: np.ndarray
    cutoff: float


def sample_grid(K, count: int) -> list:
    """Uniform endpoint-inclusive grid as exact rationals."""
    if count < 2:
        raise ValueError("need at least two samples")
    lo, hi = (Fraction(v) for v in K)
    return [lo + (hi - lo) * Fraction(k, count - 1) for k in range(count)]


def discretize(sys: EnsembleSystem, sample_count: int) -> DiscretizedEnsemble:
    # evaluate exactly, then round once, so that parity survives on symmetric grids
    grid = sample_grid(sys.K, sample_count)
    A = np.array([[[float(x) for x in row] for row in sys.A.evaluate(b)] for b in grid])
    B = np.array([[[float(x) for x in row] for row in sys.B.evaluate(b)] for b in grid])
    return DiscretizedEnsemble(np.array([float(b) for b in grid]), A, B, tuple(grid))


def _check_steps(steps: int) -> None:
    if steps < 1 or steps & (steps - 1):
        raise ValueError(f"steps must be a positive power of two, got {steps}")


def _is_diagonal(M: np.ndarray) -> bool:
    return not np.any(M - np.diag(np.diag(M)))


def step_kernels(A: np.ndarray, B: np.ndarray, dt: float):
    """``(e^{A dt}, ∫_0^dt e^{As} ds B)`` for one sample."""
    n, m = B.shape
    if _is_diagonal(A):
        a = np.diag(A)
        phi = np.diag(np.exp(a * dt))
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(a != 0, np.expm1(a * dt) / np.where(a != 0, a, 1.0), dt)
        return phi, g[:, None] * B
    M = np.zeros((n + m, n + m))
    M[:n, :n] = A
    M[:n, n:] = B
    E = expm(M * dt)
    return E[:n, :n], E[:n, n:]


def reachability_map(de: DiscretizedEnsemble, T: float, steps: int) -> np.ndarray:
    """Lifted map from stacked step inputs to final states, ``(n*S, steps*m)``."""
    _check_steps(steps)
    n, m, S = de.n, de.m, de.S
    dt = T / steps
    R = np.zeros((n * S, steps * m))
    for s in range(S):
        phi, gam = step_kernels(de.A[s], de.B[s], dt)
        blk = gam
        for j in range(steps - 1, -1, -1):
            R[s * n : (s + 1) * n, j * m : (j + 1) * m] = blk
            blk = phi @ blk
    return R


def free_response(de: DiscretizedEnsemble, x0: np.ndarray, T: float, steps: int) -> np.ndarray:
    dt = T / steps
    out = np.empty_like(x0, dtype=float)
    for s in range(de.S):
        phi, _ = step_kernels(de.A[s], de.B[s], dt)
        out[s] = np.linalg.matrix_power(phi, steps) @ x0[s]
    return out


def simulate(de: DiscretizedEnsemble, x0, controls, T: float) -> np.ndarray:
    """Exact propagation of piecewise-constant ``controls`` (steps x m)."""
    controls = np.asarray(controls, dtype=float)
    if controls.ndim != 2 or controls.shape[1] != de.m:
        raise ShapeMismatch(f"controls must be steps x {de.m}, got {controls.shape}")
    x0 = np.zeros((de.S, de.n)) if x0 is None else np.asarray(x0, dtype=float)
    if x0.shape != (de.S, de.n):
        raise ShapeMismatch(f"x0 must be {(de.S, de.n)}, got {x0.shape}")
    steps = controls.shape[0]
    dt = T / steps
    out = np.empty((de.S, de.n))
    for s in range(de.S):
        phi, gam = step_kernels(de.A[s], de.B[s], dt)
        x = x0[s].copy()
        for j in range(steps):
            x = phi @ x + gam @ controls[j]
        out[s] = x
    return out


def synthesize(problem: SteeringProblem, de: DiscretizedEnsemble) -> SteeringResult:
    """Minimum-norm least-squares controls through a truncated SVD."""
    S, n, m = de.S, de.n, de.m
    xF = np.asarray(problem.xF, dtype=float)
    x0 = np.zeros((S, n)) if problem.x0 is None else np.asarray(problem.x0, dtype=float)
    if xF.shape != (S, n) or x0.shape != (S, n):
        raise ShapeMismatch(f"targets must be {(S, n)}")
    R = reachability_map(de, problem.T, problem.steps)
    d = (xF - free_response(de, x0, problem.T, problem.steps)).reshape(-1)
    U, sv, Vt = np.linalg.svd(R, full_matrices=False)
    cutoff = SVD_RTOL * sv[0] if sv.size else 0.0
    r = int(np.sum(sv > cutoff))
    u = Vt[:r].T @ ((U[:, :r].T @ d) / sv[:r])
    controls = u.reshape(problem.steps, m)
    final = simulate(de, x0, controls, problem.T)
    per = np.linalg.norm(final - xF, axis=1)
    return SteeringResult(controls, float(per.max()), per, r, sv, float(cutoff))


def sample_functions(funcs: Sequence[Callable], de: DiscretizedEnsemble) -> np.ndarray:
    """Evaluate n scalar functions of β on the grid, shape (S, n).

    Exact grid points are used when available, so polynomial targets are
    rounded only once.
    """
    pts = de.grid or tuple(de.samples)
    return np.array([[float(f(b)) for f in funcs] for b in pts])
