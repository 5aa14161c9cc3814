"""Symmetric equilibria and relative equilibria with closed-form spectra.

Covers in-phase (sync) and splay states, two-cluster states, the N = 4
rotating block, the equilibrium families of even coupling on the reversal
fixed sets Q^{3,0}, Q^{4,0}, Q^{4,3} together with the continua L±, and the
N = 3 constant of motion for even coupling.

Reports for even coupling use time rescaled by N (``convention =
"time_rescaled_by_N"``): their eigenvalues are N times those of the
reduced Jacobian of :mod:`phaseosc.system`.
"""

from __future__ import annotations

import cmath
import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cir import IsotropyLabel, isotropy
from .coupling import TWO_PI, HarmonicCoupling, TwoHarmonicParams, antiderivative
from .roots import scan_roots
from .system import SystemParams, lift, reduced_jacobian

ZERO_REAL_TOL = 1e-9
CLASSES = ("sink", "source", "saddle", "centre", "degenerate")
CONVENTIONS = ("raw", "time_rescaled_by_N")


def classify(eigenvalues: Sequence[complex], tol: float = ZERO_REAL_TOL, ignore_zero: bool = False) -> str:
    """Stability class from eigenvalue real parts.

    ``ignore_zero`` drops eigenvalues with |λ| < tol first (used for the
    neutral direction along a continuum of equilibria).
    """
    ev = np.asarray(eigenvalues, dtype=complex)
    if ignore_zero:
        ev = ev[np.abs(ev) >= tol]
    if ev.size == 0:
        return "degenerate"
    re = ev.real
    pos, neg = re > tol, re < -tol
    if np.all(neg):
        return "sink"
    if np.all(pos):
        return "source"
    if np.any(pos) and np.any(neg):
        return "saddle"
    if np.all(~pos & ~neg) and np.all(np.abs(ev.imag) > tol):
        return "centre"
    return "degenerate"


@dataclass(frozen=True)
class EquilibriumReport:
    """An equilibrium of the reduced system with its spectrum.

    ``location`` holds the phase differences ψ_k = θ_{k+1} − θ_1.
    """

    location: tuple[float, ...]
    isotropy: Optional[IsotropyLabel]
    eigenvalues: tuple[complex, ...]
    stability: str
    convention: str = "raw"
    zero_eigenvector: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        if self.stability not in CLASSES:
            raise ValueError(f"unknown stability class {self.stability!r}")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"unknown convention {self.convention!r}")

    @property
    def theta(self) -> np.ndarray:
        return lift(np.array(self.location))

    def eigenvalues_raw(self, N: int) -> np.ndarray:
        ev = np.array(self.eigenvalues, dtype=complex)
        return ev / N if self.convention == "time_rescaled_by_N" else ev

    def to_json(self) -> dict:
        return {
            "psi": list(self.location),
            "isotropy": None if self.isotropy is None else self.isotropy.description,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "class": self.stability,
            "convention": self.convention,
        }


def _iso_or_none(theta) -> Optional[IsotropyLabel]:
    try:
        return isotropy(theta)
    except ValueError:
        return None


def make_report(psi, eigenvalues, convention="raw", ignore_zero=False, v0=None) -> EquilibriumReport:
    psi = tuple(float(x) for x in psi)
    ev = tuple(complex(z) for z in eigenvalues)
    return EquilibriumReport(psi, _iso_or_none(lift(np.array(psi))), ev,
                             classify(ev, ignore_zero=ignore_zero), convention,
                             None if v0 is None else tuple(float(x) for x in v0))


def write_reports_csv(path, reports: Sequence[EquilibriumReport]) -> None:
    """``psi_1..psi_{N-1}, isotropy, re_lambda_k, im_lambda_k..., class, convention``."""
    if not reports:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("psi,isotropy,class,convention\n")
        return
    n = len(reports[0].location)
    m = max(len(r.eigenvalues) for r in reports)
    header = [f"psi_{k + 1}" for k in range(n)] + ["isotropy"]
    for k in range(m):
        header += [f"re_lambda_{k + 1}", f"im_lambda_{k + 1}"]
    header += ["class", "convention"]
    fmt = lambda x: format(float(x), ".17g")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in reports:
            row = [fmt(x) for x in r.location]
            row.append("" if r.isotropy is None else r.isotropy.description)
            for k in range(m):
                z = r.eigenvalues[k] if k < len(r.eigenvalues) else complex("nan")
                row += [fmt(z.real), fmt(z.imag)]
            row += [r.stability, r.convention]
            w.writerow(row)


def spectrum_distance(a, b) -> float:
    """Largest pairing error between two eigenvalue multisets under the optimal matching."""
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size != b.size:
        raise ValueError(f"spectra differ in size: {a.size} vs {b.size}")
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def numeric_spectrum(p: SystemParams, psi) -> np.ndarray:
    """Eigenvalues of the reduced Jacobian, sorted by (real, imag)."""
    ev = np.linalg.eigvals(reduced_jacobian(p, psi))
    return np.array(sorted(ev, key=lambda z: (round(z.real, 12), z.imag)))


# -- sync and splay ------------------------------------------------------------


def sync_eig(p: SystemParams) -> float:
    """g'(0): the (N−1)-fold eigenvalue of in-phase synchrony."""
    return float(p.g.eval(0.0, 1))


def splay_point(N: int) -> np.ndarray:
    return TWO_PI * np.arange(N) / N


def splay_eigs(p: SystemParams) -> np.ndarray:
    """λ_p = (1/N) Σ_{j=1}^{N−1} g'(2πj/N)(1 − ν_p^j), p = 1..N, with ν_p = e^{2πip/N}.

    These are the eigenvalues of the full Jacobian at the splay state;
    λ_N = 0 is the phase-shift direction.
    """
    N = p.N
    j = np.arange(1, N)
    eta = p.g.eval(TWO_PI * j / N, 1)
    lam = np.empty(N, dtype=complex)
    for k in range(1, N + 1):
        lam[k - 1] = np.sum(eta * (1 - np.exp(2j * np.pi * k * j / N))) / N
    lam[N - 1] = 0.0
    # enforce exact conjugate pairing against rounding
    for k in range(1, N // 2 + 1):
        if k == N - k:
            lam[k - 1] = lam[k - 1].real
        else:
            lam[N - k - 1] = np.conj(lam[k - 1])
    return lam


def splay_eigs_n3(params: TwoHarmonicParams) -> tuple[complex, complex]:
    """Closed-form splay pair for N = 3 two-harmonic coupling: −(q/2)e^{iα} − r e^{−iβ} and conjugate."""
    q, r, a, b = params.as_tuple()
    lam = -0.5 * q * cmath.exp(1j * a) - r * cmath.exp(-1j * b)
    return lam, lam.conjugate()


def splay_eigs_n4(params: TwoHarmonicParams) -> tuple[complex, complex, float]:
    """N = 4 splay: the pair λ^(1) = −(q/2)e^{±iα} and the real λ^(2) = −2r cos β."""
    q, r, a, b = params.as_tuple()
    lam1 = -0.5 * q * cmath.exp(-1j * a)
    return lam1, lam1.conjugate(), -2.0 * r * math.cos(b)


# -- two-cluster states -----------------------------------------------------------


@dataclass(frozen=True)
class ClusterSpec:
    """``p`` oscillators at θ_a and ``N − p`` at θ_b, with φ = θ_a − θ_b."""

    N: int
    p: int
    phi: float = 0.0

    def __post_init__(self):
        if not 1 <= self.p <= self.N - 1:
            raise ValueError(f"cluster size must satisfy 1 <= p <= N-1, got p={self.p}, N={self.N}")

    @property
    def P(self) -> Fraction:
        return Fraction(self.p, self.N)

    def state(self, phi: Optional[float] = None) -> np.ndarray:
        phi = self.phi if phi is None else phi
        return np.concatenate([np.zeros(self.p), np.full(self.N - self.p, -phi)])


def two_cluster_field(p: SystemParams, spec: ClusterSpec, phi=None):
    """dφ/dt for the two-cluster reduction, time rescaled by N.

    p g(0) + (N−p) g(φ) − p g(−φ) − (N−p) g(0); vectorised in ``phi``.
    """
    phi = spec.phi if phi is None else phi
    phi = np.asarray(phi, dtype=float)
    k, N = spec.p, spec.N
    g = p.g
    out = k * g(0.0) + (N - k) * g(phi) - k * g(-phi) - (N - k) * g(0.0)
    return out if np.ndim(out) else float(out)


def two_cluster_cubic(params: TwoHarmonicParams, P) -> tuple[float, float, float, float]:
    """Coefficients (c3, c2, c1, c0) of the cubic in t = tan(φ/2) for nontrivial two-cluster states."""
    P = float(P)
    if not 0.0 < P < 1.0:
        raise ValueError(f"cluster fraction must satisfy 0 < P < 1, got {P}")
    q, r, a, b = params.as_tuple()
    s = 1.0 - 2.0 * P
    return (
        s * q * math.sin(a),
        q * math.cos(a) - 2 * r * math.cos(b),
        s * (q * math.sin(a) + 4 * r * math.sin(b)),
        q * math.cos(a) + 2 * r * math.cos(b),
    )


def cubic_real_roots(coeffs, tol: float = 1e-12) -> list[float]:
    """Real roots of c3 t³ + c2 t² + c1 t + c0, tolerating vanishing leading terms."""
    c = np.array(coeffs, dtype=float)
    scale = max(np.max(np.abs(c)), 1e-300)
    while c.size > 1 and abs(c[0]) <= tol * scale:
        c = c[1:]
    if c.size <= 1:
        return []
    roots = np.roots(c)
    return sorted(float(z.real) for z in roots if abs(z.imag) <= 1e-9 * max(1.0, abs(z)))


def two_cluster_equilibria(p: SystemParams, cluster_p: int, n_grid: int = 2048) -> list[EquilibriumReport]:
    """Nontrivial zeros of the two-cluster field on (0, 2π), with the full transverse spectrum.

    Spectra are numeric (reduced Jacobian of the full system, raw time).
    """
    spec = ClusterSpec(p.N, cluster_p)
    phis = scan_roots(lambda x: two_cluster_field(p, spec, x), 0.0, TWO_PI, n_grid, exclude_ends=1e-8)
    out = []
    for phi in phis:
        theta = spec.state(phi)
        psi = theta[1:] - theta[0]
        out.append(make_report(np.mod(psi, TWO_PI), numeric_spectrum(p, psi)))
    return out


# -- rotating block (N = 4) ---------------------------------------------------------


def rotating_block_state(theta: float) -> np.ndarray:
    return np.array([0.0, math.pi, theta, theta + math.pi])


def rotating_block_field(r: float, beta: float, theta, time_rescaled: bool = True):
    """Reduced dynamics of θ on the line (0, π, θ, θ + π) for two-harmonic coupling.

    Only the second harmonic survives on this line:
    dθ/dt = N·r cos β sin 2θ with N = 4 (time rescaled by N), or
    r cos β sin 2θ in raw time.
    """
    theta = np.asarray(theta, dtype=float)
    out = r * math.cos(beta) * np.sin(2 * theta)
    if time_rescaled:
        out = 4.0 * out
    return out if np.ndim(out) else float(out)


# -- even coupling ---------------------------------------------------------------------


def _require_even(g: HarmonicCoupling, tol: float = 1e-12):
    if not g.is_even(tol):
        raise ValueError("coupling function must be even")


def _csqrt(x: float) -> complex:
    return cmath.sqrt(complex(x))


def q30_eigenvalues(g: HarmonicCoupling, psi2: float) -> tuple[complex, complex]:
    """±√S at (0, ψ, 2π − ψ) with S = Σ_j g'(θ_j − θ_{j−1}) g'(θ_j − θ_{j+1}), time rescaled by N."""
    th = np.array([0.0, psi2, TWO_PI - psi2])
    S = 0.0
    for j in range(3):
        S += g.eval(th[j] - th[j - 1], 1) * g.eval(th[j] - th[(j + 1) % 3], 1)
    s = _csqrt(S)
    return s, -s


def even_q30_equilibria(g: HarmonicCoupling, n_grid: int = 2048) -> list[EquilibriumReport]:
    """Equilibria (0, ψ, 2π − ψ) on Q^{3,0}: roots of g(2ψ) − g(ψ) on (0, π)."""
    _require_even(g)
    roots = scan_roots(lambda x: g(2 * x) - g(x), 0.0, math.pi, n_grid, exclude_ends=1e-8)
    return [make_report((psi, TWO_PI - psi), q30_eigenvalues(g, psi), "time_rescaled_by_N") for psi in roots]


def q40_eigenvalues(g: HarmonicCoupling, psi: float) -> tuple[complex, complex, complex]:
    d1, dp, d2 = g.eval(psi, 1), g.eval(psi + math.pi, 1), g.eval(2 * psi, 1)
    s = _csqrt(2 * (d1 * dp + dp * d2 + d2 * d1) - d1 * d1 - dp * dp)
    return 0j, s, -s


def even_q40_equilibria(g: HarmonicCoupling, n_grid: int = 2048, tol: float = 1e-9) -> list[EquilibriumReport]:
    """Equilibria (0, ψ, π, 2π − ψ) on Q^{4,0}.

    Needs g(ψ + π) = g(ψ) and g(2ψ) + g(ψ + π) − g(ψ) − g(π) = 0.  When the
    first condition holds identically (π-periodic g) only the second is
    scanned.
    """
    _require_even(g)
    h1 = lambda x: g(x + math.pi) - g(x)
    h2 = lambda x: g(2 * x) + g(x + math.pi) - g(x) - g(math.pi)
    grid = np.linspace(0.0, math.pi, n_grid + 1)
    if np.max(np.abs(h1(grid))) < 1e-12:
        cands = scan_roots(h2, 0.0, math.pi, n_grid, exclude_ends=1e-8)
    else:
        cands = [x for x in scan_roots(h1, 0.0, math.pi, n_grid, exclude_ends=1e-8)
                 if abs(float(h2(np.array([x]))[0])) < tol]
    return [make_report((x, math.pi, TWO_PI - x), q40_eigenvalues(g, x), "time_rescaled_by_N", ignore_zero=True)
            for x in cands]


def q43_eigenvalues(g: HarmonicCoupling, a: float, b: float) -> tuple[complex, complex, complex]:
    """Spectrum at (0, a, b, a + b): {0, ±√(2g'(a−b)(g'(a)−g'(b)) + 2g'(a+b)(g'(a)+g'(b)))}."""
    da, db = g.eval(a, 1), g.eval(b, 1)
    s = _csqrt(2 * g.eval(a - b, 1) * (da - db) + 2 * g.eval(a + b, 1) * (da + db))
    return 0j, s, -s


def q43_zero_eigenvector(p: SystemParams, psi) -> np.ndarray:
    """Unit kernel vector of the reduced Jacobian (sign fixed so the largest entry is positive)."""
    J = reduced_jacobian(p, psi)
    _, s, vt = np.linalg.svd(J)
    v = vt[-1]
    return v * np.sign(v[np.argmax(np.abs(v))])


@dataclass(frozen=True)
class Continuum:
    """A one-parameter family of equilibria φ ↦ point(φ), φ in the open ``phi_range``."""

    name: str
    point: Callable[[float], np.ndarray]  # ψ coordinates
    eigenvalues: Callable[[float], tuple[complex, complex]]  # transverse pair, time rescaled by N
    direction: tuple[float, ...]
    phi_range: tuple[float, float]


def l_minus(g: HarmonicCoupling) -> Continuum:
    """L− = {(0, φ, π, π + φ)}: transverse eigenvalues ±2√(g'(φ) g'(φ + π))."""
    _require_even(g)

    def eig(phi):
        s = 2 * _csqrt(g.eval(phi, 1) * g.eval(phi + math.pi, 1))
        return s, -s

    return Continuum("L-", lambda phi: np.array([phi, math.pi, math.pi + phi]), eig,
                     tuple(np.array([1.0, 0.0, 1.0]) / math.sqrt(2)), (0.0, math.pi))


def l_plus(g: HarmonicCoupling) -> Continuum:
    """L+ = {(0, 0, φ, φ)}: transverse eigenvalues ±2g'(φ), a family of saddles."""
    _require_even(g)

    def eig(phi):
        d = 2.0 * g.eval(phi, 1)
        return complex(d), complex(-d)

    return Continuum("L+", lambda phi: np.array([0.0, phi, phi]), eig,
                     tuple(np.array([0.0, 1.0, 1.0]) / math.sqrt(2)), (0.0, TWO_PI))


@dataclass
class Q43Result:
    l_minus: Continuum
    l_plus: Continuum
    points: list[EquilibriumReport] = field(default_factory=list)


def _newton_curve(h, grad, x, tol=1e-13, max_iter=50):
    """Minimal-norm Newton projection onto the zero curve of a scalar h in the plane."""
    for _ in range(max_iter):
        v = h(x)
        if abs(v) < tol:
            return x, True
        gr = grad(x)
        n2 = float(gr @ gr)
        if n2 == 0.0:
            return x, False
        x = x - v * gr / n2
    return x, abs(h(x)) < 1e-10


def even_q43_equilibria(g: HarmonicCoupling, n_grid: int = 64, exclude: float = 1e-6) -> Q43Result:
    """Equilibria (0, a, b, a + b) on Q^{4,3}, where g(a − b) = g(a + b).

    Besides the continua L± the zero set of g(a − b) − g(a + b) on the patch
    0 < a < b < a + b < 2π is sampled: one Newton-refined point per grid
    cell crossed by the zero curve.  Points on L− (b = π) are excluded.
    """
    _require_even(g)
    h = lambda x: float(g(x[0] - x[1]) - g(x[0] + x[1]))
    grad = lambda x: np.array([g.eval(x[0] - x[1], 1) - g.eval(x[0] + x[1], 1),
                               -g.eval(x[0] - x[1], 1) - g.eval(x[0] + x[1], 1)])
    a = np.linspace(0.0, math.pi, n_grid + 1)
    b = np.linspace(0.0, TWO_PI, 2 * n_grid + 1)
    A, B = np.meshgrid(a, b, indexing="ij")
    H = g(A - B) - g(A + B)
    sgn = np.sign(H)
    p4 = SystemParams(4, 0.0, g)
    pts: list[np.ndarray] = []
    for i in range(n_grid):
        for j in range(2 * n_grid):
            cell = sgn[i:i + 2, j:j + 2]
            if cell.min() > 0 or cell.max() < 0:
                continue
            x0 = np.array([0.5 * (a[i] + a[i + 1]), 0.5 * (b[j] + b[j + 1])])
            x, ok = _newton_curve(h, grad, x0)
            if not ok:
                continue
            ca, cb = x
            if not (exclude < ca < cb - exclude and ca + cb < TWO_PI - exclude):
                continue
            if abs(cb - math.pi) < exclude:
                continue
            if any(np.max(np.abs(x - y)) < 1e-8 for y in pts):
                continue
            pts.append(x)
    reports = []
    for ca, cb in sorted(pts, key=tuple):
        psi = (ca, cb, ca + cb)
        reports.append(make_report(psi, q43_eigenvalues(g, ca, cb), "time_rescaled_by_N",
                                   ignore_zero=True, v0=q43_zero_eigenvector(p4, psi)))
    return Q43Result(l_minus(g), l_plus(g), reports)


# -- N = 3 constant of motion ---------------------------------------------------------------


def constant_of_motion_n3(p: SystemParams, theta):
    """V(θ) = G(θ1 − θ2) + G(θ2 − θ3) + G(θ3 − θ1) with G a primitive of g; vectorised."""
    if p.N != 3:
        raise ValueError(f"constant of motion is defined for N = 3, got N = {p.N}")
    _require_even(p.g)
    t = np.asarray(theta, dtype=float)
    G = antiderivative(p.g).G
    out = G(t[..., 0] - t[..., 1]) + G(t[..., 1] - t[..., 2]) + G(t[..., 2] - t[..., 0])
    return out

