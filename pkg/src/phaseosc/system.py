"""The N-oscillator vector field on T^N and its reduction to phase differences.

    dθ_k/dt = ω + (1/N) Σ_j g(θ_k − θ_j)

All field functions accept a single state of shape ``(N,)`` or a batch of
shape ``(..., N)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .coupling import TWO_PI, HarmonicCoupling, antiderivative, even_odd_parts, wrap_angle
from .ode import IntegrationError, dopri5

__all__ = [
    "SystemParams", "Trajectory", "IntegrationError",
    "vector_field", "reduced_field", "jacobian", "reduced_jacobian", "divergence",
    "integrate", "potential", "lift", "reduce",
]


@dataclass(frozen=True)
class SystemParams:
    N: int
    omega: float
    g: HarmonicCoupling

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"need N >= 2 oscillators, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))


def _check(p: SystemParams, theta, n: int):
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != n:
        raise ValueError(f"expected last dimension {n}, got shape {theta.shape}")
    return theta


def _diffs(theta):
    return theta[..., :, None] - theta[..., None, :]


def vector_field(p: SystemParams, theta) -> np.ndarray:
    theta = _check(p, theta, p.N)
    return p.omega + p.g(_diffs(theta)).sum(axis=-1) / p.N


def lift(psi) -> np.ndarray:
    """Phase differences ψ_k = θ_{k+1} − θ_1 → the representative with θ_1 = 0."""
    psi = np.asarray(psi, dtype=float)
    return np.concatenate([np.zeros(psi.shape[:-1] + (1,)), psi], axis=-1)


def reduce(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return theta[..., 1:] - theta[..., :1]


def reduced_field(p: SystemParams, psi) -> np.ndarray:
    """Time derivative of ψ_k = θ_{k+1} − θ_1; independent of ω."""
    psi = _check(p, psi, p.N - 1)
    F = p.g(_diffs(lift(psi))).sum(axis=-1) / p.N
    return F[..., 1:] - F[..., :1]


def jacobian(p: SystemParams, theta) -> np.ndarray:
    """∂F_i/∂θ_m = (1/N)[δ_im Σ_j g'(θ_i − θ_j) − g'(θ_i − θ_m)]; rows sum to zero."""
    theta = _check(p, theta, p.N)
    gp = p.g.eval(_diffs(theta), 1) / p.N
    J = -gp
    idx = np.arange(p.N)
    J[..., idx, idx] += gp.sum(axis=-1)
    return J


def reduced_jacobian(p: SystemParams, psi) -> np.ndarray:
    psi = _check(p, psi, p.N - 1)
    J = jacobian(p, lift(psi))
    return J[..., 1:, 1:] - J[..., :1, 1:]


def divergence(p: SystemParams, theta) -> np.ndarray:
    theta = _check(p, theta, p.N)
    gp = p.g.eval(_diffs(theta), 1)
    return (gp.sum(axis=(-1, -2)) - p.N * p.g.eval(0.0, 1)) / p.N


def potential(p: SystemParams, theta, odd_tol: float = 1e-12):
    """Gradient potential V with F_k = ω − ∂V/∂θ_k, defined for odd g only."""
    even, _ = even_odd_parts(p.g)
    c0, a, _ = even.fourier()
    if max([abs(c0)] + list(np.abs(a))) > odd_tol:
        raise ValueError("potential exists only for odd coupling functions")
    theta = _check(p, theta, p.N)
    G = antiderivative(p.g).G
    return -G(_diffs(theta)).sum(axis=(-1, -2)) / (2 * p.N)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # unwrapped phases, shape (len(times), [B,] N)
    n_accepted: int
    n_rejected: int
    max_error: float

    def wrapped(self) -> np.ndarray:
        return wrap_angle(self.states)

    def to_csv(self, path, member: Optional[int] = None) -> None:
        states = self.wrapped()
        if states.ndim == 3:
            states = states[:, 0 if member is None else member, :]
        n = states.shape[-1]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"theta_{k + 1}" for k in range(n)])
            for t, row in zip(self.times, states):
                w.writerow([format(float(t), ".17g")] + [format(float(x), ".17g") for x in row])


def integrate(
    p: SystemParams,
    theta0,
    T: float,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-11,
    t_eval: Optional[Sequence[float]] = None,
) -> Trajectory:
    """Integrate the full system from ``theta0`` over [0, T] (T < 0 runs backward).

    ``theta0`` may be a batch ``(B, N)``; all members share the step sequence.
    """
    theta0 = _check(p, theta0, p.N)
    if T == 0:
        raise ValueError("integration time T must be nonzero")
    sol = dopri5(lambda t, y: vector_field(p, y), 0.0, theta0, float(T),
                 rtol=rel_tol, atol=abs_tol, t_eval=t_eval, magnitude_cap=TWO_PI)
    return Trajectory(sol.t, sol.y, sol.n_accepted, sol.n_rejected, sol.max_error)
