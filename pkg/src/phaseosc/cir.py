"""Geometry of the canonical invariant region

    C = {0 = θ_1 < θ_2 < ... < θ_N < 2π},

its residual Z_N symmetry τ, the reversing involution R̂, the reversal fixed
sets Q^{N,q}, isotropy labels, plotting projection and the zero order
parameter set M^(N).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .coupling import TWO_PI, wrap_angle
from .system import SystemParams, vector_field

DEFAULT_CLUSTER_TOL = 1e-8
Q_MEMBERSHIP_TOL = 1e-9


class AmbiguousClusterError(ValueError):
    """A chain of pairwise-close phases spans more than the clustering tolerance."""


def circ_dist(a, b):
    """Componentwise distance on the circle, in [0, π]."""
    d = np.abs(wrap_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class CirPoint:
    """Representative in the closure of C.

    ``permutation[k]`` is the (0-based) index of the original oscillator now in
    slot k.  ``on_boundary`` is set when two consecutive phases coincide
    within ``tol`` (including θ_N ≈ 2π).
    """

    theta: np.ndarray
    permutation: tuple[int, ...]
    on_boundary: bool

    @property
    def N(self) -> int:
        return self.theta.size


def canonical_representative(theta, tol: float = DEFAULT_CLUSTER_TOL) -> CirPoint:
    """Sort phases, shift so the first sorted phase is 0; idempotent."""
    theta = wrap_angle(np.asarray(theta, dtype=float))
    order = np.argsort(theta, kind="stable")
    rep = theta[order] - theta[order[0]]
    gaps = np.diff(np.concatenate([rep, [TWO_PI]]))
    return CirPoint(rep, tuple(int(i) for i in order), bool(np.any(gaps <= tol)))


def _arr(theta) -> np.ndarray:
    return np.asarray(theta.theta if isinstance(theta, CirPoint) else theta, dtype=float)


def tau(theta) -> np.ndarray:
    """(0, θ_2, ..., θ_N) ↦ (0, θ_3 − θ_2, ..., θ_N − θ_2, 2π − θ_2)."""
    t = _arr(theta)
    return np.concatenate([t[..., :1] * 0.0, t[..., 2:] - t[..., 1:2], TWO_PI - t[..., 1:2]], axis=-1)


def tau_inverse(theta) -> np.ndarray:
    t = _arr(theta)
    shift = TWO_PI - t[..., -1:]
    return np.concatenate([t[..., :1] * 0.0, shift, t[..., 1:-1] + shift], axis=-1)


def tau_power(theta, k: int) -> np.ndarray:
    t = _arr(theta)
    n = t.shape[-1]
    k %= n
    for _ in range(k):
        t = tau(t)
    return t


def rev_hat(theta) -> np.ndarray:
    """(0, θ_2, ..., θ_N) ↦ (0, 2π − θ_N, ..., 2π − θ_2)."""
    t = _arr(theta)
    return np.concatenate([t[..., :1] * 0.0, TWO_PI - t[..., :0:-1]], axis=-1)


class Membership(NamedTuple):
    member: bool
    residual: float


def q_residual(theta, q: int) -> np.ndarray:
    """Max circular distance between θ and R̂(τ^q θ); vectorised over leading axes."""
    t = _arr(theta)
    return circ_dist(rev_hat(tau_power(t, q)), t).max(axis=-1)


def q_membership(theta, q: int, tol: float = Q_MEMBERSHIP_TOL) -> Membership:
    """Whether θ is fixed by the reversing symmetry R̂∘τ^q, with the residual.

    The labelling matches the explicit parametrisations returned by
    :func:`sample_q_set`, e.g. Q^{3,2} = {(0, a, 2a)} and
    Q^{4,3} = {(0, a, b, a + b)}.
    """
    t = _arr(theta)
    if not 0 <= q < t.size:
        raise ValueError(f"q index must be in [0, {t.size}), got {q}")
    res = float(q_residual(t, q))
    return Membership(res < tol, res)


def in_rc(theta, tol: float = Q_MEMBERSHIP_TOL) -> bool:
    t = _arr(theta)
    return any(q_membership(t, q, tol).member for q in range(t.size))


def sample_q_set(N: int, q: int, n: int, seed: int = 0) -> np.ndarray:
    """``n`` points of Q^{N,q} from its explicit parametrisation (N = 3, 4)."""
    if N not in (3, 4):
        raise ValueError(f"closed-form Q-sets are available for N = 3, 4 only, got N = {N}")
    if not 0 <= q < N:
        raise ValueError(f"q index must be in [0, {N}), got {q}")
    if n < 2:
        raise ValueError("need n >= 2 samples")
    pi = math.pi
    if N == 3 or q in (0, 2):
        upper = TWO_PI if (N, q) == (3, 1) else pi
        a = upper * np.arange(1, n + 1) / (n + 1)
        z = np.zeros_like(a)
        if N == 3:
            cols = {0: (a, TWO_PI - a), 1: (a, pi + a / 2), 2: (a, 2 * a)}[q]
        else:
            cols = {0: (a, np.full_like(a, pi), TWO_PI - a), 2: (a, 2 * a, pi + a)}[q]
        return np.column_stack((z,) + cols)
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        a, b = rng.uniform(0.0, TWO_PI, 2)
        pt = (0.0, a, b, a + b) if q == 3 else (0.0, a, b, TWO_PI - b + a)
        if 0.0 < pt[1] < pt[2] < pt[3] < TWO_PI:
            out.append(pt)
    return np.array(out)


# -- isotropy -----------------------------------------------------------------


@dataclass(frozen=True)
class IsotropyLabel:
    cluster_sizes: tuple[int, ...]  # descending
    zm_block: int
    description: str


def _clusters(theta: np.ndarray, tol: float) -> list[list[int]]:
    n = theta.size
    order = np.argsort(theta, kind="stable")
    s = theta[order]
    gaps = np.diff(np.concatenate([s, [s[0] + TWO_PI]]))
    if np.all(gaps <= tol):
        raise AmbiguousClusterError("phases chain around the whole circle")
    # start after a gap larger than tol so no cluster wraps the cut
    start = int(np.argmax(gaps > tol)) + 1
    clusters: list[list[int]] = []
    cur: list[int] = []
    first_phase = None
    for k in range(n):
        i = (start + k) % n
        if not cur:
            cur = [int(order[i])]
            first_phase = s[i]
        else:
            cur.append(int(order[i]))
        if gaps[i] > tol:
            span = float(wrap_angle(s[i] - first_phase))
            if span > tol:
                raise AmbiguousClusterError(
                    f"cluster of {len(cur)} phases spans {span:.3g} > tol {tol:.3g}")
            clusters.append(cur)
            cur = []
    return clusters


def _zm_block(theta: np.ndarray, tol: float) -> int:
    n = theta.size
    s = np.sort(theta)
    for M in range(n, 1, -1):
        if n % M:
            continue
        rotated = np.sort(wrap_angle(s + TWO_PI / M))
        # compare sorted multisets up to a cyclic shift of the cut
        for shift in range(n):
            if np.all(circ_dist(np.roll(rotated, shift), s) <= tol):
                return M
    return 1


def isotropy(theta, tol: float = DEFAULT_CLUSTER_TOL) -> IsotropyLabel:
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    t = wrap_angle(_arr(theta))
    clusters = _clusters(t, tol)
    sizes = tuple(sorted((len(c) for c in clusters), reverse=True))
    M = _zm_block(t, tol)
    if M > 1:
        counts = Counter(sizes)
        block = sorted((m for m, c in counts.items() for _ in range(c // M)), reverse=True)
        inner = "×".join(f"S{m}" for m in block if m > 1)
        desc = f"({inner})^{M}×Z{M}" if inner else f"Z{M}"
    else:
        inner = "×".join(f"S{m}" for m in sizes if m > 1)
        desc = inner or "1"
    return IsotropyLabel(sizes, M, desc)


# -- projection ------------------------------------------------------------------


def projection_basis(N: int) -> np.ndarray:
    """Orthonormal basis (rows) of the hyperplane ⟂ (1, ..., 1), Gram–Schmidt on e_k − e_{k+1}."""
    vs = []
    for k in range(N - 1):
        v = np.zeros(N)
        v[k], v[k + 1] = 1.0, -1.0
        for u in vs:
            v = v - (v @ u) * u
        vs.append(v / np.linalg.norm(v))
    return np.array(vs)


def project(theta) -> np.ndarray:
    """Coordinates in R^{N−1} of the lift of θ (as given, not re-wrapped)."""
    t = _arr(theta)
    return t @ projection_basis(t.shape[-1]).T


# -- order parameter and M^(N) ------------------------------------------------------


class OrderParameter(NamedTuple):
    R: float
    psi: float  # nan when R < 1e-14
    defined: bool


def order_parameter(theta) -> OrderParameter:
    z = np.mean(np.exp(1j * _arr(theta)))
    R = float(abs(z))
    if R < 1e-14:
        return OrderParameter(R, math.nan, False)
    return OrderParameter(R, float(np.angle(z)), True)


def m_set_tangency(p: SystemParams, theta, on_set_tol: float = 1e-10) -> float:
    """|dZ/dt| at a point of M^(N), where Z = (1/N) Σ exp(iθ_k).

    M^(N) = {Z = 0} has codimension two, so the flow is tangent to it exactly
    when the complex order parameter is stationary.
    """
    t = _arr(theta)
    if order_parameter(t).R >= on_set_tol:
        raise ValueError("point is not on the zero order parameter set")
    F = vector_field(p, t)
    return float(abs(np.mean(1j * np.exp(1j * t) * F)))
