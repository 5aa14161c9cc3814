"""Coupling (phase interaction) functions as finite trigonometric polynomials.

A coupling is stored as

    g(φ) = c0 + Σ_j q_j sin(j φ − α_j)

with at most one entry per harmonic index j ≥ 1.  Derivatives, primitives and
even/odd parts are computed term by term, so every operation is exact up to
rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(x):
    """Map angles to [0, 2π)."""
    y = np.mod(x, TWO_PI)
    # np.mod can round up to exactly 2π for tiny negative inputs
    y = np.where(y >= TWO_PI, 0.0, y)
    return float(y) if y.ndim == 0 else y


@dataclass(frozen=True)
class HarmonicCoupling:
    """Trigonometric polynomial ``c0 + Σ q_j sin(jφ − α_j)``.

    ``harmonics`` holds ``(j, q_j, α_j)`` triples; they are sorted by ``j`` on
    construction and duplicate indices are rejected.
    """

    harmonics: tuple[tuple[int, float, float], ...] = ()
    c0: float = 0.0
    _j: np.ndarray = field(init=False, repr=False, compare=False)
    _q: np.ndarray = field(init=False, repr=False, compare=False)
    _a: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = []
        seen = set()
        for term in self.harmonics:
            j, q, a = term
            if int(j) != j or j < 1:
                raise ValueError(f"harmonic index must be a positive integer, got {j!r}")
            j = int(j)
            if j in seen:
                raise ValueError(f"duplicate harmonic index {j}")
            seen.add(j)
            terms.append((j, float(q), float(a)))
        terms.sort()
        object.__setattr__(self, "harmonics", tuple(terms))
        object.__setattr__(self, "c0", float(self.c0))
        object.__setattr__(self, "_j", np.array([t[0] for t in terms], dtype=float))
        object.__setattr__(self, "_q", np.array([t[1] for t in terms], dtype=float))
        object.__setattr__(self, "_a", np.array([t[2] for t in terms], dtype=float))

    # -- constructors -----------------------------------------------------

    @classmethod
    def two_harmonic(cls, q: float, r: float, alpha: float, beta: float) -> "HarmonicCoupling":
        return cls(((1, q, alpha), (2, r, beta)))

    @classmethod
    def even_cosine(cls, coeffs: Sequence[float]) -> "HarmonicCoupling":
        """``Σ_j c_j cos(jφ)`` with ``coeffs = [c0, c1, ...]``."""
        coeffs = list(coeffs)
        if not coeffs:
            return cls()
        # cos(jφ) = sin(jφ + π/2)
        terms = tuple((j, c, -math.pi / 2) for j, c in enumerate(coeffs) if j > 0 and c != 0.0)
        return cls(terms, c0=coeffs[0])

    @classmethod
    def from_fourier(cls, c0: float, cos_coeffs: Sequence[float], sin_coeffs: Sequence[float]) -> "HarmonicCoupling":
        """Build from ``c0 + Σ a_j cos(jφ) + b_j sin(jφ)`` (index j = position + 1)."""
        terms = []
        for k, (a, b) in enumerate(zip(cos_coeffs, sin_coeffs)):
            if a == 0.0 and b == 0.0:
                continue
            # q sin(jφ − α) = q cos α sin jφ − q sin α cos jφ
            q = math.hypot(a, b)
            alpha = math.atan2(-a, b)
            terms.append((k + 1, q, alpha))
        return cls(tuple(terms), c0=c0)

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "HarmonicCoupling":
        """Parse one of the three accepted JSON coupling forms."""
        if not isinstance(obj, Mapping):
            raise ValueError("coupling must be a JSON object")
        keys = set(obj)
        if keys == {"two_harmonic"}:
            th = obj["two_harmonic"]
            missing = {"q", "r", "alpha", "beta"} - set(th)
            if missing:
                raise ValueError(f"two_harmonic coupling missing {sorted(missing)}")
            return cls.two_harmonic(th["q"], th["r"], th["alpha"], th["beta"])
        if keys == {"even_cosine"}:
            return cls.even_cosine(obj["even_cosine"])
        if "harmonics" in keys and keys <= {"harmonics", "c0"}:
            return cls(tuple(tuple(h) for h in obj["harmonics"]), c0=obj.get("c0", 0.0))
        raise ValueError(f"unrecognised coupling specification with keys {sorted(keys)}")

    def to_json(self) -> dict:
        return {"harmonics": [list(h) for h in self.harmonics], "c0": self.c0}

    # -- evaluation -------------------------------------------------------

    @property
    def L(self) -> int:
        """Largest harmonic index carrying a nonzero amplitude (0 if none)."""
        nz = [j for j, q, _ in self.harmonics if q != 0.0]
        return max(nz) if nz else 0

    def __call__(self, phi):
        return self.eval(phi, 0)

    def eval(self, phi, order: int = 0):
        """Value (order 0) or derivative (order 1, 2) of g at ``phi``."""
        if order not in (0, 1, 2):
            raise ValueError(f"derivative order must be 0, 1 or 2, got {order!r}")
        phi = np.asarray(phi, dtype=float)
        out = np.full(phi.shape, self.c0 if order == 0 else 0.0)
        for j, q, a in zip(self._j, self._q, self._a):
            arg = j * phi - a
            if order == 0:
                out = out + q * np.sin(arg)
            elif order == 1:
                out = out + (q * j) * np.cos(arg)
            else:
                out = out - (q * j * j) * np.sin(arg)
        return out if out.ndim else float(out)

    def deriv(self, phi):
        return self.eval(phi, 1)

    def fourier(self) -> tuple[float, np.ndarray, np.ndarray]:
        """Return ``(c0, a, b)`` with ``g = c0 + Σ a_j cos jφ + b_j sin jφ``, j = 1..L."""
        L = int(self._j.max()) if self._j.size else 0
        a = np.zeros(L)
        b = np.zeros(L)
        for j, q, al in self.harmonics:
            a[j - 1] += -q * math.sin(al)
            b[j - 1] += q * math.cos(al)
        return self.c0, a, b

    @property
    def mean(self) -> float:
        return self.c0

    def is_even(self, tol: float = 1e-12) -> bool:
        _, _, b = self.fourier()
        return bool(np.all(np.abs(b) <= tol))

    def is_odd(self, tol: float = 1e-12) -> bool:
        c0, a, _ = self.fourier()
        return abs(c0) <= tol and bool(np.all(np.abs(a) <= tol))


def even_odd_parts(g: HarmonicCoupling) -> tuple[HarmonicCoupling, HarmonicCoupling]:
    """Split ``g`` into its even part ``g₊`` and odd part ``g₋``."""
    c0, a, b = g.fourier()
    even = HarmonicCoupling(tuple((j + 1, a[j], -math.pi / 2) for j in range(a.size) if a[j] != 0.0), c0=c0)
    odd = HarmonicCoupling(tuple((j + 1, b[j], 0.0) for j in range(b.size) if b[j] != 0.0))
    return even, odd


@dataclass(frozen=True)
class Primitive:
    """Primitive ``G`` of ``g − mean(g)`` normalised by ``G(0) = 0``.

    ``subtracted_mean`` is nonzero when ``g`` has a constant term; in that case
    the true primitive ``G + mean·φ`` is multivalued on the circle.
    """

    G: HarmonicCoupling
    subtracted_mean: float

    @property
    def multivalued(self) -> bool:
        return self.subtracted_mean != 0.0

    def __call__(self, phi):
        return self.G(phi)


def antiderivative(g: HarmonicCoupling) -> Primitive:
    terms = []
    const = 0.0
    for j, q, a in g.harmonics:
        # ∫ q sin(jφ − α) dφ = −(q/j) cos(jφ − α) = (q/j) sin(jφ − α − π/2)
        terms.append((j, q / j, a + math.pi / 2))
        const += (q / j) * math.cos(a)
    return Primitive(HarmonicCoupling(tuple(terms), c0=const), g.c0)


# -- two-harmonic parameters ---------------------------------------------------


@dataclass(frozen=True)
class TwoHarmonicParams:
    """``g(φ) = q sin(φ − α) + r sin(2φ − β)``."""

    q: float
    r: float
    alpha: float
    beta: float

    def coupling(self) -> HarmonicCoupling:
        return HarmonicCoupling.two_harmonic(self.q, self.r, self.alpha, self.beta)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.q, self.r, self.alpha, self.beta)


SYMMETRY_KINDS = ("flip_q", "flip_r", "time_reversal", "phase_reversal")


def param_symmetry(kind: str, p: TwoHarmonicParams) -> TwoHarmonicParams:
    """Apply one of the parameter symmetries of two-harmonic coupling.

    ``flip_q`` and ``flip_r`` leave g unchanged, ``time_reversal`` maps g to −g
    and ``phase_reversal`` maps g(φ) to −g(−φ).  The last two are only defined
    for q = −1.
    """
    q, r, a, b = p.as_tuple()
    if kind == "flip_q":
        return TwoHarmonicParams(-q, r, wrap_angle(a + math.pi), wrap_angle(b))
    if kind == "flip_r":
        return TwoHarmonicParams(q, -r, wrap_angle(a), wrap_angle(b + math.pi))
    if kind in ("time_reversal", "phase_reversal"):
        if q != -1.0:
            raise ValueError(f"{kind} is defined for q = -1 only, got q = {q}")
        if kind == "time_reversal":
            return TwoHarmonicParams(q, r, wrap_angle(a + math.pi), wrap_angle(b + math.pi))
        return TwoHarmonicParams(q, r, wrap_angle(-a), wrap_angle(-b))
    raise ValueError(f"unknown parameter symmetry {kind!r}; expected one of {SYMMETRY_KINDS}")


@dataclass(frozen=True)
class CanonicalForm:
    """Result of :func:`canonicalize`.

    The original coupling equals ``time_scale`` times the canonical one, so
    trajectories agree after rescaling time by ``time_scale``.
    ``needs_time_reversal`` is set when β ∉ [0, π).
    """

    params: TwoHarmonicParams
    time_scale: float
    needs_time_reversal: bool


def canonicalize(p: TwoHarmonicParams) -> CanonicalForm:
    q, r, a, b = p.as_tuple()
    if q == 0.0:
        raise ValueError("cannot canonicalise: first harmonic amplitude q is zero")
    cur = TwoHarmonicParams(q, r, wrap_angle(a), wrap_angle(b))
    if cur.q > 0:
        cur = param_symmetry("flip_q", cur)
    if cur.r < 0:
        cur = param_symmetry("flip_r", cur)
    scale = -cur.q
    r_scaled = cur.r / scale
    if not math.isfinite(r_scaled):
        raise ValueError(f"cannot canonicalise: q = {q} is too small relative to r = {r}")
    cur = TwoHarmonicParams(-1.0, r_scaled, cur.alpha, cur.beta)
    return CanonicalForm(cur, scale, not (0.0 <= cur.beta < math.pi))


def max_abs_difference(f, g, phis: Iterable[float] | None = None) -> float:
    """Sup-norm distance between two callables on a uniform circle grid."""
    if phis is None:
        phis = np.linspace(0.0, TWO_PI, 1000, endpoint=False)
    phis = np.asarray(list(phis) if not isinstance(phis, np.ndarray) else phis)
    return float(np.max(np.abs(np.asarray(f(phis)) - np.asarray(g(phis)))))
