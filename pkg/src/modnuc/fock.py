"""Truncated S-symmetric Fock space over a rapidity grid.

Sector n of a :class:`FockVector` is a dense complex tensor of shape
``(K,) * n`` holding the coefficients

    sqrt(w_{i1} ... w_{in}) * Psi_n(theta_{i1}, ..., theta_{in}),

so the Euclidean norm of a sector is the discretized L^2 norm.  Absent
sectors are zero.  The delta function in the exchange relations becomes the
Kronecker delta of this weighted basis, which makes the smeared relations
exact identities of the discretization.

Creation and annihilation operators are complex linear in their smearing
vectors (no conjugation), ``z(g) = z^dagger(conj g)^*``.
"""
from __future__ import annotations

import functools
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .errors import CapacityError, ConfigError, QuadratureError, TailLossWarning
from .quadrature import RapidityGrid, gauss_legendre_panels
from .scattering import ScatteringFunction

MAX_PARTICLES = 4


# ---------------------------------------------------------------------------
# spaces and vectors


@dataclass(frozen=True, eq=False)
class FockSpace:
    """Context shared by vectors: grid, scattering function, truncation, mass."""

    grid: RapidityGrid
    smatrix: ScatteringFunction
    n_max: int = 3
    mass: float = 1.0
    exchange: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.n_max <= MAX_PARTICLES:
            raise CapacityError(f"n_max={self.n_max} exceeds the supported maximum {MAX_PARTICLES}")
        if not self.mass > 0:
            raise ConfigError(f"mass must be positive, got {self.mass}", "mass")
        t = self.grid.nodes
        ex = self.smatrix.on_real(t[:, None] - t[None, :])
        ex.setflags(write=False)
        # exchange[a, b] = S(theta_a - theta_b)
        object.__setattr__(self, "exchange", ex)

    @property
    def dim(self) -> int:
        return self.grid.size

    def vacuum(self) -> "FockVector":
        return FockVector(self, {0: np.ones((), dtype=complex)})

    def zero(self) -> "FockVector":
        return FockVector(self, {})

    def from_sector(self, n: int, tensor, symmetric: bool = False) -> "FockVector":
        """Wrap a raw n-tensor; symmetrizes it unless ``symmetric`` is set."""
        if n > self.n_max:
            raise CapacityError(f"sector {n} above n_max={self.n_max}")
        tensor = np.asarray(tensor, dtype=complex)
        if tensor.shape != (self.dim,) * n:
            raise ConfigError(f"tensor shape {tensor.shape} does not match sector {n}", "tensor")
        if not symmetric:
            tensor = symmetrize(tensor, self.smatrix, self.grid)
        return FockVector(self, {n: tensor})

    def random_state(self, n: int, rng: np.random.Generator) -> "FockVector":
        """Unit-norm S-symmetric random vector supported in sector n."""
        shape = (self.dim,) * n
        raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        psi = self.from_sector(n, raw)
        return psi * (1.0 / psi.norm())


@dataclass(frozen=True, eq=False)
class FockVector:
    space: FockSpace
    sectors: dict

    def sector(self, n: int) -> np.ndarray:
        t = self.sectors.get(n)
        if t is None:
            return np.zeros((self.space.dim,) * n, dtype=complex)
        return t

    @property
    def occupied(self) -> list[int]:
        return sorted(self.sectors)

    @property
    def top(self) -> int:
        return max(self.sectors) if self.sectors else -1

    def sector_norms(self) -> dict[int, float]:
        return {n: float(np.linalg.norm(t.ravel())) for n, t in sorted(self.sectors.items())}

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.sector_norms().values()))

    def inner(self, other: "FockVector") -> complex:
        """<self, other>, antilinear in ``self``."""
        total = 0j
        for n in sorted(set(self.sectors) & set(other.sectors)):
            total += np.vdot(self.sectors[n].ravel(), other.sectors[n].ravel())
        return complex(total)

    def to_json(self) -> dict:
        return {str(n): v for n, v in self.sector_norms().items()}

    def _combine(self, other: "FockVector", sign: float) -> "FockVector":
        if other.space is not self.space:
            raise ConfigError("vectors live in different Fock spaces", "space")
        out = dict(self.sectors)
        for n, t in other.sectors.items():
            out[n] = out[n] + sign * t if n in out else sign * t
        return FockVector(self.space, out)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, c):
        return FockVector(self.space, {n: c * t for n, t in self.sectors.items()})

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# symmetrization


def _broadcast_pair(mat: np.ndarray, n: int, ax_a: int, ax_b: int) -> np.ndarray:
    """View of ``mat[a, b]`` with index a on axis ``ax_a`` and b on ``ax_b`` of an n-tensor."""
    if ax_a > ax_b:
        mat = mat.T
        ax_a, ax_b = ax_b, ax_a
    shape = [1] * n
    shape[ax_a] = mat.shape[0]
    shape[ax_b] = mat.shape[1]
    return mat.reshape(shape)


def _inversions(perm) -> list[tuple[int, int]]:
    return [(perm[i], perm[j]) for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j]]


@functools.lru_cache(maxsize=32)
def _permutation_factors(smatrix: ScatteringFunction, grid: RapidityGrid, n: int):
    """(perm, factor) pairs; factor is a scalar for constant models."""
    t = grid.nodes
    ex = smatrix.on_real(t[:, None] - t[None, :])
    out = []
    for perm in itertools.permutations(range(n)):
        inv = _inversions(perm)
        if smatrix.kind == "const":
            out.append((perm, complex(smatrix.sign ** len(inv))))
            continue
        factor = np.ones((1,) * n, dtype=complex)
        for a, b in inv:
            # S(theta_a - theta_b) with a = perm(i) > b = perm(j)
            factor = factor * _broadcast_pair(ex, n, a, b)
        out.append((perm, factor))
    return tuple(out)


def symmetrize(T, smatrix: ScatteringFunction, grid: RapidityGrid) -> np.ndarray:
    """S-symmetric part of an n-tensor.

    Averages ``S^sigma(theta) T(theta_sigma(1), ..., theta_sigma(n))`` over all
    permutations, where ``S^sigma`` is the product of ``S(theta_sigma(i) -
    theta_sigma(j))`` over the inversions i < j, sigma(i) > sigma(j).
    """
    T = np.asarray(T, dtype=complex)
    n = T.ndim
    if n > MAX_PARTICLES:
        raise CapacityError(f"cannot symmetrize {n} particles (maximum {MAX_PARTICLES})")
    if n <= 1:
        return T.copy()
    acc = np.zeros_like(T)
    for perm, factor in _permutation_factors(smatrix, grid, n):
        acc += factor * np.einsum(T, list(perm), list(range(n)))
    return acc / math.factorial(n)


def symmetry_residual(psi: FockVector) -> float:
    """Largest violation of Psi(.., t_{i+1}, t_i, ..) = S(t_i - t_{i+1}) Psi(.., t_i, t_{i+1}, ..)."""
    ex = psi.space.exchange
    worst = 0.0
    for n, t in psi.sectors.items():
        for i in range(n - 1):
            swapped = np.swapaxes(t, i, i + 1)
            r = swapped - _broadcast_pair(ex, n, i, i + 1) * t
            worst = max(worst, float(np.max(np.abs(r))) if r.size else 0.0)
    return worst


# ---------------------------------------------------------------------------
# Zamolodchikov-Faddeev operators


def _check_smearing(f, space: FockSpace) -> np.ndarray:
    f = np.asarray(f, dtype=complex)
    if f.shape != (space.dim,):
        raise ConfigError(f"smearing vector has shape {f.shape}, expected ({space.dim},)", "smearing")
    return f


def zf_create(f, psi: FockVector) -> FockVector:
    """z^dagger(f): sector n+1 receives sqrt(n+1) * symmetrize(f (x) Psi_n)."""
    space = psi.space
    f = _check_smearing(f, space)
    if psi.top >= space.n_max:
        raise CapacityError(f"creation from sector {psi.top} exceeds n_max={space.n_max}")
    out = {}
    for n, t in psi.sectors.items():
        raw = np.multiply.outer(f, t)
        out[n + 1] = math.sqrt(n + 1) * symmetrize(raw, space.smatrix, space.grid)
    return FockVector(space, out)


def zf_annihilate(g, psi: FockVector) -> FockVector:
    """z(g): contract g against the first argument with weight sqrt(n)."""
    space = psi.space
    g = _check_smearing(g, space)
    out = {}
    for n, t in psi.sectors.items():
        if n == 0:
            continue
        out[n - 1] = math.sqrt(n) * np.tensordot(g, t, axes=(0, 0))
    return FockVector(space, out)


def _create_pair(T: np.ndarray, psi: FockVector) -> FockVector:
    """sum_{a,b} T[a, b] z^dagger_a z^dagger_b psi for the unit basis vectors."""
    space = psi.space
    out = {}
    for n, t in psi.sectors.items():
        raw = np.multiply.outer(T, t)
        out[n + 2] = math.sqrt((n + 1) * (n + 2)) * symmetrize(raw, space.smatrix, space.grid)
    return FockVector(space, out)


def zf_relation_residuals(f, g, smatrix: ScatteringFunction, probe: FockVector) -> dict[str, float]:
    """Norms of the three smeared exchange relations applied to ``probe``.

    * mixed:        z(g) z^dag(f) - sum g_i f_j S(t_j - t_i) z^dag_j z_i - <g, f>_bilinear
    * creation:     z^dag(f) z^dag(g) - sum f_i g_j S(t_i - t_j) z^dag_j z^dag_i
    * annihilation: z(f) z(g) - sum f_i g_j S(t_i - t_j) z_j z_i
    """
    space = probe.space
    if smatrix != space.smatrix:
        raise ConfigError("probe was built for a different scattering function", "smatrix")
    if probe.top > space.n_max - 2:
        raise CapacityError(f"probe occupies sector {probe.top} > n_max - 2")
    f = _check_smearing(f, space)
    g = _check_smearing(g, space)
    ex = space.exchange

    # mixed relation
    lhs = zf_annihilate(g, zf_create(f, probe))
    exch = {}
    for n, t in probe.sectors.items():
        if n == 0:
            continue
        gt = g.reshape((-1,) + (1,) * (n - 1)) * t
        a = f.reshape((-1,) + (1,) * (n - 1)) * np.tensordot(ex, gt, axes=(1, 0))
        exch[n] = n * symmetrize(a, space.smatrix, space.grid)
    rhs = FockVector(space, exch) + complex(np.dot(g, f)) * probe
    mixed = (lhs - rhs).norm()

    # like-operator relations
    lhs = zf_create(f, zf_create(g, probe))
    T = (f[None, :] * g[:, None]) * ex.T  # T[j, i] = f_i g_j S(t_i - t_j)
    creation = (lhs - _create_pair(T, probe)).norm()

    lhs = zf_annihilate(f, zf_annihilate(g, probe))
    pair = f[:, None] * g[None, :] * ex  # pair[i, j] = f_i g_j S(t_i - t_j)
    rhs = {}
    for n, t in probe.sectors.items():
        if n < 2:
            continue
        rhs[n - 2] = math.sqrt(n * (n - 1)) * np.tensordot(pair, t, axes=([0, 1], [0, 1]))
    annihilation = (lhs - FockVector(space, rhs)).norm()

    return {"mixed": mixed, "creation": creation, "annihilation": annihilation}


# ---------------------------------------------------------------------------
# spacetime test functions and the field


def mass_shell(theta, mass: float):
    """(p0, p1) = m (cosh theta, sinh theta)."""
    theta = np.asarray(theta, dtype=float)
    return mass * np.cosh(theta), mass * np.sinh(theta)


def minkowski_pairing(p0, p1, x0, x1):
    """p.x = p0 x0 - p1 x1."""
    return p0 * x0 - p1 * x1


@dataclass(frozen=True)
class SpacetimeTestFunction:
    """A function f(x0, x1) on two-dimensional Minkowski space.

    ``func`` must be vectorized.  The numerical support is contained in the
    square of half-width ``extent`` around ``center``; ``fourier`` optionally
    gives the closed form of  int d^2x f(x) exp(i (k0 x0 + k1 x1)).
    """

    func: Callable
    center: tuple = (0.0, 0.0)
    extent: float = 8.0
    fourier: Optional[Callable] = None
    wedge_offset: Optional[tuple] = None

    def __call__(self, x0, x1):
        return self.func(x0, x1)

    def translated(self, a) -> "SpacetimeTestFunction":
        """x -> f(x - a)."""
        a0, a1 = float(a[0]), float(a[1])
        func = self.func
        fourier = None
        if self.fourier is not None:
            base = self.fourier

            def fourier(k0, k1):
                return np.exp(1j * (k0 * a0 + k1 * a1)) * base(k0, k1)

        offset = None if self.wedge_offset is None else (self.wedge_offset[0] + a0, self.wedge_offset[1] + a1)
        return SpacetimeTestFunction(
            lambda x0, x1: func(x0 - a0, x1 - a1),
            (self.center[0] + a0, self.center[1] + a1),
            self.extent,
            fourier,
            offset,
        )


def gaussian_test_function(center=(0.0, 0.0), width: float = 1.0, amplitude: float = 1.0) -> SpacetimeTestFunction:
    """amplitude * exp(-|x - center|^2 / (2 width^2)) with its closed-form transform."""
    c0, c1 = float(center[0]), float(center[1])
    s2 = width * width

    def func(x0, x1):
        return amplitude * np.exp(-((x0 - c0) ** 2 + (x1 - c1) ** 2) / (2 * s2))

    def fourier(k0, k1):
        return amplitude * 2 * np.pi * s2 * np.exp(-s2 * (k0 ** 2 + k1 ** 2) / 2 + 1j * (k0 * c0 + k1 * c1))

    extent = width * math.sqrt(2 * math.log(1e17))
    return SpacetimeTestFunction(func, (c0, c1), extent, fourier)


# bounds the 2D quadrature cost; past this the transform is not resolved
_FPM_MAX_NODES = 4096


def fpm(f: SpacetimeTestFunction, mass: float, grid: RapidityGrid, method: str = "quadrature",
        tail_tol: float = 1e-12):
    """Mass-shell restrictions f_+(theta), f_-(theta) as coefficient vectors.

    f_pm(theta) = (2 pi)^-1 int d^2x f(x) exp(+-i p(theta).x) with the pairing
    p.x = p0 x0 - p1 x1.  ``method="closed-form"`` uses ``f.fourier``.
    """
    p0, p1 = mass_shell(grid.nodes, mass)
    if method == "closed-form":
        if f.fourier is None:
            raise ConfigError("test function has no closed-form transform", "method")
        plus = f.fourier(p0, -p1) / (2 * np.pi)
        minus = f.fourier(-p0, p1) / (2 * np.pi)
        return grid.sqrt_weights * plus, grid.sqrt_weights * minus
    if method != "quadrature":
        raise ConfigError(f"unknown method {method!r}", "method")

    c0, c1 = f.center
    L = float(f.extent)
    kmax = float(max(np.max(np.abs(p0)), np.max(np.abs(p1))))
    order = 16
    # about one panel per oscillation period
    panels = int(math.ceil(kmax * 2 * L / (2 * np.pi))) + 8
    if panels * order > _FPM_MAX_NODES:
        raise QuadratureError(
            f"transform at |p| <= {kmax:.4g} over extent {L:.4g} needs {panels * order} nodes per axis; "
            f"reduce theta_max or the test function extent"
        )
    y, w = gauss_legendre_panels(-L, L, panels, order)
    x0, x1 = c0 + y, c1 + y
    F = np.asarray(f(x0[:, None], x1[None, :]), dtype=complex)
    if not np.all(np.isfinite(F)):
        raise QuadratureError("test function is not finite on its declared support")
    scale = float(np.max(np.abs(F))) if F.size else 0.0
    rim = max(
        float(np.max(np.abs(F[[0, -1], :]))), float(np.max(np.abs(F[:, [0, -1]])))
    )
    if scale > 0 and rim > tail_tol * scale:
        raise QuadratureError(f"test function not negligible at the edge of its support (ratio {rim / scale:.3g})")
    WFW = w[:, None] * F * w[None, :]
    e0 = np.exp(1j * np.outer(p0, x0))
    e1 = np.exp(-1j * np.outer(p1, x1))
    # f_+ = (2pi)^-1 sum_ab e0[t,a] WFW[a,b] e1[t,b]; f_- uses the conjugate phases
    plus = np.einsum("ta,tb,ab->t", e0, e1, WFW, optimize=True) / (2 * np.pi)
    minus = np.einsum("ta,tb,ab->t", e0.conj(), e1.conj(), WFW, optimize=True) / (2 * np.pi)
    return grid.sqrt_weights * plus, grid.sqrt_weights * minus


SmearingPair = tuple


def _resolve_smearing(f: Union[SpacetimeTestFunction, SmearingPair], space: FockSpace):
    if isinstance(f, SpacetimeTestFunction):
        return fpm(f, space.mass, space.grid)
    fp, fm = f
    return _check_smearing(fp, space), _check_smearing(fm, space)


def field_apply(f, psi: FockVector) -> FockVector:
    """phi(f) psi = z^dag(f_+) psi + z(f_-) psi.

    ``f`` is a :class:`SpacetimeTestFunction` or a precomputed ``(f_plus, f_minus)`` pair.
    """
    fp, fm = _resolve_smearing(f, psi.space)
    return zf_create(fp, psi) + zf_annihilate(fm, psi)


def field_bound_check(f, samples) -> dict:
    """Check ||phi(f) Psi_n|| <= c_f sqrt(n+1) ||Psi_n|| with c_f = ||f_+|| + ||f_-||."""
    samples = list(samples)
    if not samples:
        return {"c_f": None, "worst_ratio": None, "count": 0, "status": "pass"}
    space = samples[0].space
    fp, fm = _resolve_smearing(f, space)
    c_f = float(np.linalg.norm(fp) + np.linalg.norm(fm))
    ratios = []
    for psi in samples:
        for n, t in sorted(psi.sectors.items()):
            norm_n = float(np.linalg.norm(t.ravel()))
            if norm_n == 0.0:
                continue
            out = field_apply((fp, fm), FockVector(space, {n: t}))
            bound = c_f * math.sqrt(n + 1) * norm_n
            ratios.append((n, out.norm() / bound if bound > 0 else 0.0))
    worst = max((r for _, r in ratios), default=0.0)
    return {
        "c_f": c_f,
        "count": len(ratios),
        "worst_ratio": worst,
        "worst_by_sector": {str(n): max(r for m, r in ratios if m == n) for n in sorted({n for n, _ in ratios})},
        "status": "pass" if worst <= 1.0 + 1e-12 else "fail",
    }


# ---------------------------------------------------------------------------
# Poincare and PCT


def _boost_matrix(grid: RapidityGrid, rapidity: float) -> tuple[np.ndarray, np.ndarray]:
    """R with (R v)(theta_i) ~ v(theta_i - rapidity) for node values; and the kept-node mask."""
    K = grid.size
    order = grid.order
    targets = grid.nodes - rapidity
    R = np.zeros((K, K))
    edges = np.linspace(-grid.theta_max, grid.theta_max, grid.panels + 1)
    inside = (targets >= -grid.theta_max) & (targets <= grid.theta_max)
    panel = np.clip(np.searchsorted(edges, targets, side="right") - 1, 0, grid.panels - 1)
    eye = np.eye(order)
    for p in np.unique(panel[inside]):
        cols = slice(p * order, (p + 1) * order)
        rows = np.nonzero(inside & (panel == p))[0]
        interp = BarycentricInterpolator(grid.nodes[cols], eye)
        R[rows, cols] = interp(targets[rows])
    # source nodes whose image stays on the grid
    kept = np.abs(grid.nodes + rapidity) <= grid.theta_max
    return R, kept


def poincare_apply(x, rapidity: float, psi: FockVector, warn_tol: float = 1e-12) -> FockVector:
    """U(x, B(rapidity)) psi.

    Sector n gets the phase exp(i sum_j p(theta_j).x) and its arguments are
    shifted, theta_j -> theta_j - rapidity, by per-panel barycentric
    interpolation.  Mass shifted past the cutoff is dropped and reported
    through :class:`TailLossWarning`.
    """
    space = psi.space
    grid = space.grid
    x0, x1 = float(x[0]), float(x[1])
    p0, p1 = mass_shell(grid.nodes, space.mass)
    phase1 = np.exp(1j * minkowski_pairing(p0, p1, x0, x1))
    sw = grid.sqrt_weights
    if rapidity != 0.0:
        R, kept = _boost_matrix(grid, float(rapidity))
        # acts on coefficients: diag(sw) R diag(1/sw)
        Rc = sw[:, None] * R / sw[None, :]
    out = {}
    lost = 0.0
    for n, t in psi.sectors.items():
        if rapidity != 0.0:
            total = float(np.vdot(t, t).real)
            keep = t
            for ax in range(n):
                keep = np.compress(kept, keep, axis=ax)
            lost += total - float(np.vdot(keep, keep).real)
            for ax in range(n):
                t = np.moveaxis(np.tensordot(Rc, t, axes=(1, ax)), 0, ax)
        for ax in range(n):
            t = t * _broadcast_axis(phase1, n, ax)
        out[n] = t
    if lost > warn_tol:
        warnings.warn(f"boost moved squared norm {lost:.3e} beyond the rapidity cutoff", TailLossWarning, stacklevel=2)
    return FockVector(space, out)


def _broadcast_axis(v: np.ndarray, n: int, ax: int) -> np.ndarray:
    shape = [1] * n
    shape[ax] = v.size
    return v.reshape(shape)


def pct_apply(psi: FockVector) -> FockVector:
    """(J Psi)_n(theta_1..theta_n) = conj Psi_n(theta_n..theta_1)."""
    grid = psi.space.grid
    if not grid.is_symmetric():
        raise ConfigError("PCT requires a reflection-symmetric grid", "grid")
    out = {}
    for n, t in psi.sectors.items():
        out[n] = np.conj(np.transpose(t, tuple(range(n - 1, -1, -1))))
    return FockVector(psi.space, out)
