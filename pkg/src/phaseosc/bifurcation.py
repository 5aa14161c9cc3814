"""Bifurcation loci in the (α, r) plane, equilibrium scans and the N = 4
non-integrability diagnostic.

Analytic loci are traced by per-α bracketing in r on [0, r_max]; the loci
that have no closed form are approximated by changes in the equilibrium
count between neighbouring parameter cells.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .cir import q_membership, rev_hat, tau_power
from .coupling import TWO_PI, HarmonicCoupling, TwoHarmonicParams
from .invariant_states import (
    EquilibriumReport, classify, l_plus, make_report, numeric_spectrum, splay_eigs, sync_eig,
    two_cluster_cubic,
)
from .roots import scan_roots
from .system import SystemParams, reduced_field, reduced_jacobian

CURVE_KINDS = ("sync_steady", "splay_hopf", "splay_block", "two_cluster_sn", "s2s2", "scan_detected")


# -- discriminants ---------------------------------------------------------------


def cubic_discriminant(c3, c2, c1, c0):
    """Discriminant of c3 t³ + c2 t² + c1 t + c0 (vectorised)."""
    return (18 * c3 * c2 * c1 * c0 - 4 * c2 ** 3 * c0 + c2 ** 2 * c1 ** 2
            - 4 * c3 * c1 ** 3 - 27 * c3 ** 2 * c0 ** 2)


def two_cluster_discriminant(params: TwoHarmonicParams, P) -> float:
    return float(cubic_discriminant(*two_cluster_cubic(params, P)))


def quartic_in_P(params: TwoHarmonicParams, printed: bool = False) -> tuple[float, float, float, float, float]:
    """Coefficients (a0, ..., a4) of the two-cluster discriminant as a polynomial in P = p/N (q = −1).

    The returned polynomial equals the cubic discriminant identically in P.
    ``printed=True`` returns the a3 coefficient with the r and r² weights
    transposed (−28 and 12 instead of −12 and 48); that variant does not
    vanish on the discriminant zero set and is kept only for comparison.
    """
    if params.q != -1.0:
        raise ValueError(f"quartic coefficients assume q = -1, got q = {params.q}")
    r, a, b = params.r, params.alpha, params.beta
    sa, ca, sb, cb = math.sin(a), math.cos(a), math.sin(b), math.cos(b)
    a4 = 64 * sa * (64 * r**3 * sb**3 - 48 * r**2 * sb**2 * sa + 12 * r * sa**2 * sb - sa**3)
    if printed:
        a3 = 128 * sa * (-64 * r**3 * sb**3 + 12 * r**2 * sa * sb**2 - 28 * r * sa**2 * sb + sa**3)
    else:
        a3 = 128 * sa * (-64 * r**3 * sb**3 + 48 * r**2 * sa * sb**2 - 12 * r * sa**2 * sb + sa**3)
    a2 = (256 * sb**2 * cb**2 * r**4
          + 256 * sb * (20 * sa * sb**2 + sb * ca * cb + 4 * sa) * r**3
          + 64 * (62 * sa**2 * cb**2 - math.sin(2 * a) * sb * cb - 73 * sa**2 + sb**2) * r**2
          + 64 * sa * (23 * sa**2 * sb + 7 * sa * ca * cb - 5 * sb) * r
          - 32 * sa**2 * (2 * sa**2 + 1))
    a1 = (-256 * r**4 * sb**2 * cb**2
          - 256 * (4 * sa * sb * (sb**2 + 1) + sb**2 * ca * cb) * r**3
          + 64 * (14 * sa**2 * sb**2 + 11 * sa**2 - sb**2 + math.sin(2 * a) * sb * cb) * r**2
          + 64 * (11 * sa * sb * ca**2 - 7 * sa**2 * ca * cb - 6 * sb * sa) * r
          + 32 * sa**2)
    cab = math.cos(a - b)
    a0 = (64 * r**4 * cb**2 + 64 * (3 * sa * sb + cab) * r**3
          + 16 * (1 - 13 * sa**2 + cb**2 - 2 * ca * cb * cab) * r**2
          + 16 * ((3 - 8 * ca**2) * cab + 4 * ca * cb) * r - 4)
    return a0, a1, a2, a3, a4


def quartic_value(params: TwoHarmonicParams, P, printed: bool = False) -> float:
    c = quartic_in_P(params, printed)
    P = float(P)
    return float(sum(ck * P**k for k, ck in enumerate(c)))


def n3_two_cluster_disc(r, alpha: float, beta: float, printed: bool = False):
    """Quartic in r whose zeros are the N = 3 two-cluster saddle-nodes (q = −1).

    Equals 81 times the cubic discriminant at P = 1/3.  ``printed=True``
    uses 16 instead of 18 in the constant term, which breaks that identity
    unless sin α cos α = 0.
    """
    r = np.asarray(r, dtype=float)
    sa, ca, sb, cb = math.sin(alpha), math.cos(alpha), math.sin(beta), math.cos(beta)
    k = 16 if printed else 18
    out = (576 * (9 * cb**2 + sb**2) * cb**2 * r**4
           + 64 * (36 * sa * cb**2 * sb + 9 * ca * cb * sb**2 + 4 * sa * sb**3 + 81 * ca * cb**3) * r**3
           + 16 * (9 * ca**2 * sb**2 - 99 * sa**2 * cb**2 - 12 * sa**2 * sb**2 - 18 * sa * ca * cb * sb) * r**2
           + 16 * (63 * sa**2 * ca * cb - 45 * sa * ca**2 * sb - 81 * ca**3 * cb + 3 * sa**3 * sb) * r
           - 4 * (sa**4 + k * sa**2 * ca**2 + 81 * ca**4))
    return out if out.ndim else float(out)


def s2s2_disc(r, alpha: float, beta: float):
    """16 cos²β r² − 4 cos²α: discriminant of the S2×S2 quadratic (q = −1)."""
    return 16 * math.cos(beta) ** 2 * np.asarray(r, dtype=float) ** 2 - 4 * math.cos(alpha) ** 2


# -- analytic curves -----------------------------------------------------------------------


@dataclass(frozen=True)
class BifurcationCurve:
    """Points (α, r) of one bifurcation locus at fixed β, sorted by α then r."""

    kind: str
    beta: float
    N: int
    points: np.ndarray  # shape (k, 2)
    p: Optional[int] = None
    degenerate: bool = False
    note: str = ""

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")

    @property
    def label(self) -> str:
        return self.kind if self.p is None else f"{self.kind}(p={self.p})"


def _coupling(alpha, r, beta, extra):
    return HarmonicCoupling(((1, -1.0, alpha), (2, r, beta)) + tuple(extra))


def _trace(fun: Callable[[float, np.ndarray], np.ndarray], alphas, r_max, n_r=400) -> np.ndarray:
    pts = []
    for a in alphas:
        for r in scan_roots(lambda rr: fun(a, rr), 0.0, r_max, n_r, exclude_ends=0.0):
            pts.append((a, r))
    pts.sort()
    return np.array(pts, dtype=float).reshape(-1, 2)


def _linear_in_r(value: Callable[[HarmonicCoupling], float], beta: float, extra=()) -> Callable:
    """Spectral quantities are linear in g, hence affine in r: evaluate at r = 0, 1 and interpolate."""

    def f(a, r):
        v0 = value(_coupling(a, 0.0, beta, extra))
        v1 = value(_coupling(a, 1.0, beta, extra))
        return v0 + np.asarray(r, dtype=float) * (v1 - v0)

    return f


def sync_function(beta: float, extra=()) -> Callable:
    """(α, r) ↦ g'(0), vectorised in r."""
    return _linear_in_r(lambda g: sync_eig(SystemParams(3, 0.0, g)), beta, extra)


def splay_real_function(N: int, beta: float, which: int = 1, extra=()) -> Callable:
    """(α, r) ↦ Re λ_which at the splay state, vectorised in r."""
    return _linear_in_r(lambda g: splay_eigs(SystemParams(N, 0.0, g))[which - 1].real, beta, extra)


def two_cluster_disc_function(beta: float, P) -> Callable:
    """(α, r) ↦ discriminant of the two-cluster cubic (q = −1), vectorised in r."""
    s = 1.0 - 2.0 * float(P)

    def f(a, r):
        r = np.asarray(r, dtype=float)
        sa, ca = math.sin(a), math.cos(a)
        return cubic_discriminant(-s * sa, -ca - 2 * r * math.cos(beta),
                                  s * (-sa + 4 * r * math.sin(beta)), -ca + 2 * r * math.cos(beta))

    return f


def analytic_curves(N: int, beta: float, alpha_points: int = 181, r_max: float = 3.0,
                    extra_harmonics: Sequence[tuple[int, float, float]] = ()) -> list[BifurcationCurve]:
    """Closed-form bifurcation loci for q = −1 over α ∈ [0, 2π), r ∈ [0, r_max].

    ``extra_harmonics`` adds terms (j, q_j, α_j) with j ≥ 3 to g; they enter
    the sync and splay loci, which are traced from the spectra directly.
    """
    if N not in (3, 4):
        raise ValueError(f"analytic curves are available for N = 3, 4, got N = {N}")
    alphas = TWO_PI * np.arange(alpha_points) / alpha_points
    cb = math.cos(beta)
    flat = abs(cb) < 1e-12
    curves = [BifurcationCurve("sync_steady", beta, N, _trace(sync_function(beta, extra_harmonics), alphas, r_max))]

    if N == 3:
        curves.append(BifurcationCurve("splay_hopf", beta, N,
                                       _trace(splay_real_function(3, beta, 1, extra_harmonics), alphas, r_max)))
        curves.append(BifurcationCurve("two_cluster_sn", beta, N,
                                       _trace(two_cluster_disc_function(beta, 1 / 3), alphas, r_max), p=1))
        return curves

    # N = 4: Re λ^(1) = cos α / 2 does not depend on r, so the locus is a set of vertical lines
    re1 = lambda a: splay_eigs(SystemParams(4, 0.0, _coupling(a, 0.0, beta, extra_harmonics)))[0].real
    hopf_alphas = scan_roots(lambda x: np.array([re1(a) for a in np.atleast_1d(x)]), 0.0, TWO_PI, 720)
    hopf = [(a, r) for a in hopf_alphas if a < TWO_PI for r in (0.0, r_max)]
    curves.append(BifurcationCurve("splay_hopf", beta, N, np.array(hopf, dtype=float).reshape(-1, 2),
                                   note="vertical lines in alpha, independent of r"))
    if flat:
        curves.append(BifurcationCurve("splay_block", beta, N, np.empty((0, 2)), degenerate=True,
                                       note="cos beta = 0: lambda^(2) vanishes for every (alpha, r)"))
        curves.append(BifurcationCurve("s2s2", beta, N, np.empty((0, 2)), p=2, degenerate=True,
                                       note="cos beta = 0: fold condition independent of r"))
    else:
        curves.append(BifurcationCurve("splay_block", beta, N, np.column_stack([alphas, np.zeros_like(alphas)]),
                                       note="lambda^(2) = -2 r cos beta vanishes only at r = 0"))
        curves.append(BifurcationCurve("s2s2", beta, N,
                                       _trace(lambda a, r: s2s2_disc(r, a, beta), alphas, r_max), p=2))
    curves.append(BifurcationCurve("two_cluster_sn", beta, N,
                                   _trace(two_cluster_disc_function(beta, 0.25), alphas, r_max), p=1))
    return curves


# -- equilibrium scans ------------------------------------------------------------------------


@dataclass
class EquilibriumScan:
    equilibria: list[EquilibriumReport]
    n_candidates: int
    n_failed: int


def _newton(F, J, x0, tol, max_iter=40):
    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        f = F(x)
        if np.max(np.abs(f)) < tol:
            return x, True
        dx = np.linalg.lstsq(J(x), f, rcond=None)[0]
        x = x - dx
    return x, bool(np.max(np.abs(F(x))) < tol)


def _candidate_cells(values: np.ndarray, periodic: bool = True) -> np.ndarray:
    """Indices of grid cells where every component of the field changes sign (or vanishes)."""
    d = values.shape[-1]
    lo = values.copy()
    hi = values.copy()
    for axis in range(d):
        if periodic:
            shifted_lo = np.roll(lo, -1, axis=axis)
            shifted_hi = np.roll(hi, -1, axis=axis)
        else:
            sl = [slice(None)] * d
            sl[axis] = slice(1, None)
            shifted_lo = lo[tuple(sl)]
            shifted_hi = hi[tuple(sl)]
            cut = [slice(None)] * d
            cut[axis] = slice(None, -1)
            lo, hi = lo[tuple(cut)], hi[tuple(cut)]
        lo = np.minimum(lo, shifted_lo)
        hi = np.maximum(hi, shifted_hi)
    mask = np.all((lo <= 0) & (hi >= 0), axis=-1)
    return np.argwhere(mask)


def _dedup(points, tol=1e-8):
    out = []
    for x in points:
        if not any(np.max(np.abs(np.mod(x - y + math.pi, TWO_PI) - math.pi)) < tol for y in out):
            out.append(x)
    return out


def scan_equilibria(p: SystemParams, grid_per_dim: int = 48, tol: float = 1e-12) -> EquilibriumScan:
    """Sign-cell scan of the reduced field on T^{N−1} followed by Newton refinement."""
    d = p.N - 1
    if d > 3:
        raise ValueError(f"equilibrium scan is limited to N <= 4, got N = {p.N}")
    h = TWO_PI / grid_per_dim
    axes = [np.arange(grid_per_dim) * h] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    values = reduced_field(p, grid)
    cells = _candidate_cells(values)
    F = lambda x: reduced_field(p, x)
    J = lambda x: reduced_jacobian(p, x)
    found, failed = [], 0
    for idx in cells:
        x, ok = _newton(F, J, (idx + 0.5) * h, tol)
        if not ok:
            failed += 1
            continue
        found.append(np.mod(x, TWO_PI))
    found = _dedup(found)
    found.sort(key=lambda x: tuple(np.round(x, 9)))
    reports = [make_report(np.where(x > TWO_PI - 1e-9, 0.0, x), numeric_spectrum(p, x)) for x in found]
    return EquilibriumScan(reports, len(cells), failed)


def find_equilibria(p: SystemParams, grid_per_dim: int = 48, tol: float = 1e-12) -> list[EquilibriumReport]:
    """All equilibria of the reduced system found by :func:`scan_equilibria` (raw time)."""
    return scan_equilibria(p, grid_per_dim, tol).equilibria


def equilibrium_count(p: SystemParams, grid_per_dim: int = 24) -> int:
    return len(find_equilibria(p, grid_per_dim))


def scan_detected_curves(N: int, beta: float, alpha_points: int = 24, r_points: int = 24,
                         r_max: float = 3.0, grid_per_dim: int = 24) -> BifurcationCurve:
    """Midpoints between neighbouring (α, r) cells whose equilibrium counts differ.

    A coarse stand-in for loci that have no closed form; every point
    brackets a change in the count along r.
    """
    alphas = TWO_PI * np.arange(alpha_points) / alpha_points
    rs = np.linspace(0.0, r_max, r_points)
    counts = np.array([[equilibrium_count(SystemParams(N, 0.0, _coupling(a, r, beta, ())), grid_per_dim)
                        for r in rs] for a in alphas])
    pts = [(a, 0.5 * (rs[j] + rs[j + 1])) for i, a in enumerate(alphas)
           for j in range(r_points - 1) if counts[i, j] != counts[i, j + 1]]
    return BifurcationCurve("scan_detected", beta, N, np.array(pts, dtype=float).reshape(-1, 2),
                            note=f"equilibrium-count changes on a {alpha_points}x{r_points} grid")


# -- N = 4 integrability diagnostic ---------------------------------------------------------


SINK_SOURCE_TOL = 1e-7
RC_TOL = 1e-8


@dataclass(frozen=True)
class FaceEquilibrium:
    """Equilibrium (0, 0, x, y) on the S2 face of the canonical region, time rescaled by N."""

    x: float
    y: float
    eigenvalues: tuple[complex, complex]
    stability: str
    in_rc: bool
    rc_residual: float

    @property
    def theta(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.x, self.y])

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "class": self.stability, "in_rc": self.in_rc,
                "rc_residual": self.rc_residual,
                "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues]}


@dataclass
class IntegrabilityReport:
    equilibria: list[FaceEquilibrium]
    sink_source_pairs: bool
    pairing_ok: bool
    l_plus_phi: np.ndarray
    l_plus_eigenvalues: np.ndarray  # ±2 g'(φ) per sample
    all_in_rc: bool = field(init=False)

    def __post_init__(self):
        self.all_in_rc = all(e.in_rc for e in self.equilibria)

    def to_json(self) -> dict:
        return {
            "equilibria": [e.to_json() for e in self.equilibria],
            "sink_source_pairs": self.sink_source_pairs,
            "pairing_ok": self.pairing_ok,
            "all_in_rc": self.all_in_rc,
            "l_plus": {"phi": self.l_plus_phi.tolist(),
                       "eigenvalues": self.l_plus_eigenvalues.tolist()},
        }


def face_field(g: HarmonicCoupling, xy):
    """Flow on the face θ1 = θ2 = 0 in coordinates (x, y) = (θ3, θ4), time rescaled by N = 4."""
    xy = np.asarray(xy, dtype=float)
    psi = np.concatenate([np.zeros(xy.shape[:-1] + (1,)), xy], axis=-1)
    return 4.0 * reduced_field(SystemParams(4, 0.0, g), psi)[..., 1:]


def face_jacobian(g: HarmonicCoupling, xy) -> np.ndarray:
    psi = np.concatenate([[0.0], np.asarray(xy, dtype=float)])
    return 4.0 * reduced_jacobian(SystemParams(4, 0.0, g), psi)[1:, 1:]


def _face_class(ev) -> str:
    re = np.asarray(ev).real
    if np.all(re < -SINK_SOURCE_TOL):
        return "sink"
    if np.all(re > SINK_SOURCE_TOL):
        return "source"
    return classify(ev)


def face_reversal(x: float, y: float) -> tuple[float, float]:
    """Image of (0, 0, x, y) under τ^{-1}∘R̂, which maps the face to itself and reverses time."""
    img = tau_power(rev_hat(np.array([0.0, 0.0, x, y])), -1)
    return float(img[2]), float(img[3])


def integrability_report(g: HarmonicCoupling, face_grid: int = 256, diag_tol: float = 1e-6,
                         n_l_plus: int = 16) -> IntegrabilityReport:
    """Equilibria on the S2 face of the N = 4 canonical region and their reversal structure.

    Sinks and sources need both eigenvalue real parts beyond ±1e−7; anything
    closer to the imaginary axis is classified as saddle/centre/degenerate.
    The diagonal x = y is the continuum L+ and is reported separately.
    """
    if not g.is_even():
        raise ValueError("integrability report requires an even coupling function")
    h = TWO_PI / face_grid
    ax = np.arange(face_grid) * h
    grid = np.stack(np.meshgrid(ax, ax, indexing="ij"), axis=-1)
    cells = _candidate_cells(face_field(g, grid))
    F = lambda v: face_field(g, v)
    J = lambda v: face_jacobian(g, v)
    pts = []
    for idx in cells:
        v, ok = _newton(F, J, (idx + 0.5) * h, 1e-12)
        if not ok:
            continue
        x, y = np.mod(v, TWO_PI)
        if abs(x - y) < diag_tol or abs(abs(x - y) - TWO_PI) < diag_tol:
            continue
        if x > y:  # the other ordering is a relabelled copy
            continue
        pts.append(np.array([x, y]))
    pts = _dedup(pts)
    pts.sort(key=lambda v: tuple(np.round(v, 9)))
    eqs = []
    for x, y in pts:
        ev = np.linalg.eigvals(J(np.array([x, y])))
        ev = tuple(sorted((complex(z) for z in ev), key=lambda z: (z.real, z.imag)))
        theta = np.array([0.0, 0.0, x, y])
        res = min(q_membership(theta, q, RC_TOL).residual for q in range(4))
        eqs.append(FaceEquilibrium(float(x), float(y), ev, _face_class(ev), res < RC_TOL, float(res)))

    sinks = [e for e in eqs if e.stability == "sink" and not e.in_rc]
    sources = [e for e in eqs if e.stability == "source" and not e.in_rc]
    pairing_ok = True
    for e in sinks:
        xi, yi = face_reversal(e.x, e.y)
        match = [s for s in sources if abs(s.x - xi) < 1e-7 and abs(s.y - yi) < 1e-7]
        if not match or not np.allclose(sorted(-np.array(e.eigenvalues), key=lambda z: (z.real, z.imag)),
                                        match[0].eigenvalues, atol=1e-8):
            pairing_ok = False
    if len(sinks) != len(sources):
        pairing_ok = False
    lp = l_plus(g)
    phis = TWO_PI * (np.arange(n_l_plus) + 0.5) / n_l_plus
    lev = np.array([[lp.eigenvalues(ph)[0].real, lp.eigenvalues(ph)[1].real] for ph in phis])
    return IntegrabilityReport(eqs, bool(sinks and sources), pairing_ok, phis, lev)


# portrait assembly lives in its own module; re-exported here for convenience
from .portrait import PortraitData, portrait  # noqa: E402
