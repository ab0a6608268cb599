"""Wedge one-particle subspaces, continuation to theta + i pi/2, and the kernels X_phi, X_pi.

Conventions
-----------
Fourier transform: ``hhat(p) = int dy h(y) exp(-i p y)``.  With supp h in
(-inf, 0) this makes ``hhat(i m cosh theta) = int dy h(y) exp(m cosh(theta) y)``
decay, which the norm estimates rely on.  The opposite sign would grow.

All grid vectors are coefficient vectors ``sqrt(w_i) * value(theta_i)`` (see
:mod:`modnuc.quadrature`).  Absolute trace norms depend on the 2 pi
normalization of ``hhat``; ratios and bounds do not.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import ConditioningError, DomainError, NumericalError, TailLossWarning
from .quadrature import RapidityGrid, discretize_kernel, gauss_legendre_panels

PHI = "phi"
PI = "pi"
_KINDS = (PHI, PI)

# entries per block in matrix-free sums
_BLOCK = 1 << 22


@dataclass(frozen=True)
class WedgePoint:
    """A point x = (x0, x1) of the wedge |x0| + x1 < 0."""

    x0: float
    x1: float

    def __post_init__(self):
        if not abs(self.x0) + self.x1 < 0:
            raise DomainError(f"x = ({self.x0}, {self.x1}) is not in the wedge |x0| + x1 < 0")

    @classmethod
    def coerce(cls, x) -> "WedgePoint":
        return x if isinstance(x, cls) else cls(float(x[0]), float(x[1]))

    @property
    def depth(self) -> float:
        """x1 + |x0|, negative inside the wedge."""
        return self.x1 + abs(self.x0)


def contraction_bound(x, mass: float, n: int = 1) -> float:
    """exp(n m (x1 + |x0|))."""
    x = WedgePoint.coerce(x)
    return math.exp(n * mass * x.depth)


# ---------------------------------------------------------------------------
# time-zero profiles


@dataclass(frozen=True)
class TimeZeroProfile:
    """Bump ``amplitude * exp(-1 / (1 - ((y - a) / r)^2))`` supported on [a - r, a + r] with a + r < 0."""

    center: float
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise DomainError(f"bump radius must be positive, got {self.radius}")
        if not self.center + self.radius < 0:
            raise DomainError(f"bump support [{self.center - self.radius}, {self.center + self.radius}] "
                              "is not inside (-inf, 0)")

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.radius, self.center + self.radius

    def scaled(self, c: float) -> "TimeZeroProfile":
        return TimeZeroProfile(self.center, self.radius, self.amplitude * c)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        u = (y - self.center) / self.radius
        out = np.zeros_like(u)
        inside = np.abs(u) < 1
        out[inside] = self.amplitude * np.exp(-1.0 / (1.0 - u[inside] ** 2))
        return out

    def _rule(self, panels: int, order: int = 24):
        y, w = gauss_legendre_panels(-1.0, 1.0, panels, order)
        return self.center + self.radius * y, self.radius * w

    def integral(self) -> float:
        y, w = self._rule(64)
        return float(np.dot(w, self(y)))

    def fourier(self, p) -> np.ndarray:
        """hhat(p) for real p, resolving the oscillation up to max |p|.

        The bump is even about its center, so
        hhat(p) = exp(-i p a) * 2 int_0^r h(a + u) cos(p u) du.
        """
        p = np.atleast_1d(np.asarray(p, dtype=float))
        pmax = float(np.max(np.abs(p))) if p.size else 0.0
        # keeps p * (panel half-width) <= 10 for the 24-point rule
        panels = int(math.ceil(pmax * self.radius / 20.0)) + 4
        u, w = gauss_legendre_panels(0.0, self.radius, panels, 24)
        hw = 2.0 * w * self(self.center + u)
        keep = hw != 0.0
        u, hw = u[keep], hw[keep]
        out = np.empty(p.shape)
        step = max(1, _BLOCK // max(u.size, 1))
        for s in range(0, p.size, step):
            out[s:s + step] = np.cos(np.outer(p[s:s + step], u)) @ hw
        return np.exp(-1j * p * self.center) * out

    def laplace(self, c) -> np.ndarray:
        """int dy h(y) exp(c y) for c >= 0, i.e. hhat(i c)."""
        c = np.atleast_1d(np.asarray(c, dtype=float))
        y, w = self._rule(64)
        hw = w * self(y)
        out = np.empty(c.shape)
        step = max(1, _BLOCK // y.size)
        for s in range(0, c.size, step):
            out[s:s + step] = np.exp(np.outer(c[s:s + step], y)) @ hw
        return out


def sample_profiles(count: int, seed: int = 0) -> list[TimeZeroProfile]:
    """Deterministic family of bumps inside (-inf, 0); the first is bump(-2, 0.5).

    Centers lie in [-2.5, -0.6] and radii in [0.45, 1].  Narrower or more
    distant bumps oscillate faster in rapidity than the default continuation
    grid (theta_max = 8, 8192 nodes) resolves to 1e-6.
    """
    rng = np.random.default_rng(seed)
    out = [TimeZeroProfile(-2.0, 0.5)]
    while len(out) < count:
        a = float(rng.uniform(-2.5, -0.6))
        r = float(rng.uniform(0.45, min(1.0, -a - 0.05)))
        out.append(TimeZeroProfile(round(a, 6), round(r, 6)))
    return out[:count]


# ---------------------------------------------------------------------------
# single-particle vectors


@dataclass(frozen=True, eq=False)
class SingleParticleVector:
    kind: str
    profile: TimeZeroProfile
    mass: float
    grid: RapidityGrid
    coeffs: np.ndarray = field(repr=False)

    @property
    def values(self) -> np.ndarray:
        return self.coeffs / self.grid.sqrt_weights

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def _check_kind(kind: str) -> str:
    if kind not in _KINDS:
        raise DomainError(f"kind must be 'phi' or 'pi', got {kind!r}")
    return kind


def subspace_vector(kind: str, h: TimeZeroProfile, mass: float, grid: RapidityGrid) -> SingleParticleVector:
    """theta -> hhat(m sinh theta) (phi) or cosh(theta) hhat(m sinh theta) (pi)."""
    _check_kind(kind)
    if not isinstance(h, TimeZeroProfile):
        raise DomainError("profile must be a TimeZeroProfile")
    coeffs = grid.sqrt_weights * h.fourier(mass * np.sinh(grid.nodes))
    if kind == PI:
        coeffs = np.cosh(grid.nodes) * coeffs
    return SingleParticleVector(kind, h, float(mass), grid, coeffs)


def phi_vector(h: TimeZeroProfile, mass: float, grid: RapidityGrid) -> SingleParticleVector:
    return subspace_vector(PHI, h, mass, grid)


def pi_vector(h: TimeZeroProfile, mass: float, grid: RapidityGrid) -> SingleParticleVector:
    return subspace_vector(PI, h, mass, grid)


def direct_continuation(v: SingleParticleVector, mass: Optional[float] = None,
                        grid: Optional[RapidityGrid] = None) -> np.ndarray:
    """Coefficients of theta -> Phi_h(theta + i pi/2) from the closed-form profile.

    sinh(theta + i pi/2) = i cosh(theta), so the phi-type value is the real
    Laplace integral int h(y) exp(m cosh(theta) y) dy; the pi-type value
    carries the extra factor cosh(theta + i pi/2) = i sinh(theta).
    """
    mass = v.mass if mass is None else mass
    grid = v.grid if grid is None else grid
    vals = v.profile.laplace(mass * np.cosh(grid.nodes)).astype(complex)
    if v.kind == PI:
        vals = 1j * np.sinh(grid.nodes) * vals
    return grid.sqrt_weights * vals


def _brace(kind: str, t, tp):
    """1/(t' - t - i pi/2) +- 1/(t' + t - i pi/2)."""
    half = 0.5j * math.pi
    first = 1.0 / (tp - t - half)
    second = 1.0 / (tp + t - half)
    return first + second if kind == PHI else first - second


def cauchy_continuation(v: SingleParticleVector, grid: Optional[RapidityGrid] = None,
                        tail_tol: float = 1e-8, at=None) -> np.ndarray:
    """Coefficients of the Cauchy representation of Phi_h(theta + i pi/2).

    (2 pi i)^-1 int d theta' {1/(t' - t - i pi/2) +- 1/(t' + t - i pi/2)} Phi_h(t')
    with + for phi-type and - for pi-type.  The denominators stay a distance
    pi/2 from the real axis, so no principal value is involved.  Evaluated
    matrix-free in row blocks.  With ``at`` given, returns plain values at
    those rapidities instead of grid coefficients.
    """
    grid = v.grid if grid is None else grid
    c = v.coeffs
    vals = v.values
    scale = float(np.max(np.abs(vals))) if c.size else 0.0
    edge = max(abs(vals[0]), abs(vals[-1]))
    if scale > 0 and edge > tail_tol * scale:
        warnings.warn(f"boundary values {edge / scale:.3e} of peak; cutoff theta_max={grid.theta_max} too small",
                      TailLossWarning, stacklevel=2)
    t = grid.nodes
    sw = grid.sqrt_weights
    src = sw * c  # w_j Phi(t_j)
    targets = t if at is None else np.atleast_1d(np.asarray(at, dtype=float))
    out = np.empty(targets.size, dtype=complex)
    step = max(1, _BLOCK // t.size)
    for s in range(0, targets.size, step):
        rows = targets[s:s + step, None]
        out[s:s + step] = _brace(v.kind, rows, t[None, :]) @ src
    out /= 2j * math.pi
    return out if at is not None else sw * out


def relative_l2_error(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b|| / ||b|| for coefficient vectors."""
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


# ---------------------------------------------------------------------------
# kernels


def damping(x, mass: float, theta) -> np.ndarray:
    """exp(x1 p0(theta) - x0 p1(theta))."""
    x = WedgePoint.coerce(x)
    theta = np.asarray(theta, dtype=float)
    return np.exp(mass * (x.x1 * np.cosh(theta) - x.x0 * np.sinh(theta)))


def kernel_value(kind: str, x, mass: float, theta, theta_p):
    """Pointwise kernel X(theta, theta') of X_phi / X_pi."""
    _check_kind(kind)
    x = WedgePoint.coerce(x)
    theta = np.asarray(theta, dtype=float)
    theta_p = np.asarray(theta_p, dtype=float)
    return damping(x, mass, theta) * _brace(kind, theta, theta_p) / (2j * math.pi)


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    matrix: np.ndarray = field(repr=False)
    grid: Optional[RapidityGrid] = None
    kind: Optional[str] = None
    x: Optional[WedgePoint] = None
    mass: Optional[float] = None


def build_kernel(kind: str, x, mass: float, grid: RapidityGrid) -> KernelMatrix:
    """Discretized X_phi (kind='phi') or X_pi (kind='pi') at wedge point x."""
    _check_kind(kind)
    x = WedgePoint.coerce(x)
    mat = discretize_kernel(lambda t, tp: kernel_value(kind, x, mass, t, tp), grid)
    return KernelMatrix(mat, grid, kind, x, float(mass))


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    singular_values: np.ndarray = field(repr=False)
    trace_norm: float
    operator_norm: float
    decay_index: Optional[int]
    threshold: float

    def to_json(self) -> dict:
        return {
            "trace_norm": self.trace_norm,
            "operator_norm": self.operator_norm,
            "decay_index": self.decay_index,
            "decay_threshold": self.threshold,
            "count": int(self.singular_values.size),
        }


def spectrum_report(K, threshold: float = 1e-12) -> SpectrumReport:
    """Full SVD: descending singular values, trace norm, operator norm, decay index.

    ``decay_index`` is the smallest 1-based k with s_k < threshold, or None.
    """
    mat = np.asarray(getattr(K, "matrix", K))
    if mat.size == 0:
        s = np.zeros(0)
    else:
        if not np.all(np.isfinite(mat)):
            raise NumericalError("matrix has non-finite entries")
        try:
            s = scipy.linalg.svd(mat, compute_uv=False, lapack_driver="gesdd")
        except np.linalg.LinAlgError:
            try:
                s = scipy.linalg.svd(mat, compute_uv=False, lapack_driver="gesvd")
            except np.linalg.LinAlgError as exc:
                fro = float(np.linalg.norm(mat))
                raise NumericalError(f"SVD failed for {mat.shape} matrix (Frobenius norm {fro:.3e})") from exc
    s = np.sort(np.abs(s))[::-1]
    below = np.nonzero(s < threshold)[0]
    return SpectrumReport(
        singular_values=s,
        trace_norm=float(np.sum(s)),
        operator_norm=float(s[0]) if s.size else 0.0,
        decay_index=int(below[0]) + 1 if below.size else None,
        threshold=threshold,
    )


# ---------------------------------------------------------------------------
# bounds


def _profile_vectors(kind, profiles, mass, grid) -> list[SingleParticleVector]:
    return [subspace_vector(kind, h, mass, grid) for h in profiles]


def profile_matrix(kind: str, profiles: Sequence[TimeZeroProfile], mass: float, grid: RapidityGrid) -> np.ndarray:
    """Subspace vectors of the profiles as columns."""
    return np.column_stack([v.coeffs for v in _profile_vectors(kind, profiles, mass, grid)])


def vector_bound_check(kind: str, x, mass: float, profiles: Sequence[TimeZeroProfile],
                       grid: RapidityGrid, slack: float = 1e-8, kernel=None) -> dict:
    """||X Phi_h|| / ||Phi_h|| <= exp(m (x1 + |x0|)) for every profile.

    Also reports how closely the kernel action reproduces the damped direct
    continuation, exp(x1 p0 - x0 p1) Phi_h(theta + i pi/2).
    """
    x = WedgePoint.coerce(x)
    K = build_kernel(kind, x, mass, grid).matrix if kernel is None else np.asarray(getattr(kernel, "matrix", kernel))
    bound = contraction_bound(x, mass)
    damp = damping(x, mass, grid.nodes)
    ratios = []
    identity = []
    for v in _profile_vectors(kind, profiles, mass, grid):
        image = K @ v.coeffs
        ratios.append(float(np.linalg.norm(image)) / v.norm())
        expected = damp * direct_continuation(v)
        identity.append(float(np.linalg.norm(image - expected)) / v.norm())
    worst = max(ratios) if ratios else 0.0
    return {
        "kind": kind,
        "x": [x.x0, x.x1],
        "mass": mass,
        "bound": bound,
        "slack": slack,
        "ratios": ratios,
        "worst_ratio": worst,
        "identity_residual": max(identity) if identity else 0.0,
        "profiles": len(ratios),
        "status": "pass" if worst <= bound + slack else "fail",
    }


def _orthonormal_span(vectors: np.ndarray, rcond: float):
    U, s, _ = np.linalg.svd(vectors, full_matrices=False)
    if s.size == 0 or s[-1] <= rcond * s[0]:
        cond = math.inf if s.size == 0 or s[-1] == 0 else s[0] / s[-1]
        raise ConditioningError(f"sampled profile vectors are rank deficient (condition {cond:.3e})")
    return U, float(s[0] / s[-1])


def compression(kind: str, x, mass: float, profiles: Sequence[TimeZeroProfile], grid: RapidityGrid,
                rcond: float = 1e-10, kernel=None, vectors=None) -> dict:
    """X restricted to the span of the sampled subspace vectors.

    Returns the operator ``C = X Q`` (Q an orthonormal basis of the span), its
    singular values and the conditioning of the orthonormalization.
    ``kernel`` and ``vectors`` may be passed precomputed.
    """
    profiles = list(profiles)
    if len(profiles) < 1:
        raise ConditioningError("need at least one profile")
    x = WedgePoint.coerce(x)
    V = profile_matrix(kind, profiles, mass, grid) if vectors is None else vectors
    Q, cond = _orthonormal_span(V, rcond)
    K = build_kernel(kind, x, mass, grid).matrix if kernel is None else np.asarray(getattr(kernel, "matrix", kernel))
    C = K @ Q
    s = np.linalg.svd(C, compute_uv=False)
    return {"operator": C, "singular_values": s, "norm": float(s[0]), "condition": cond, "samples": len(profiles)}


def compressed_norm(kind: str, x, mass: float, profiles: Sequence[TimeZeroProfile], grid: RapidityGrid,
                    rcond: float = 1e-10) -> float:
    """Operator norm of X on the span of the sampled subspace vectors.

    Stand-in for the norm of the boost continuation on the translated wedge
    subspace; bounded by exp(m (x1 + |x0|)) for x in the wedge.
    """
    return compression(kind, x, mass, profiles, grid, rcond)["norm"]


def compression_convergence(kind: str, x, mass: float, profiles: Sequence[TimeZeroProfile],
                            grid: RapidityGrid, rcond: float = 1e-10) -> list[dict]:
    """Compressed norm and conditioning for the first k profiles, k = 1..len(profiles)."""
    profiles = list(profiles)
    K = build_kernel(kind, x, mass, grid).matrix
    V = profile_matrix(kind, profiles, mass, grid)
    out = []
    for k in range(1, len(profiles) + 1):
        c = compression(kind, x, mass, profiles[:k], grid, rcond, kernel=K, vectors=V[:, :k])
        out.append({"samples": k, "norm": c["norm"], "condition": c["condition"]})
    return out


def sector_decay_report(x, mass: float, n_list: Sequence[int], grid: Optional[RapidityGrid] = None,
                        profiles: Optional[Sequence[TimeZeroProfile]] = None, kind: str = PHI,
                        tol: float = 1e-10) -> dict:
    """n-particle bounds exp(n m (x1 + |x0|)) against tensor powers of the compressed operator.

    The norm of the n-fold tensor power is computed explicitly from the
    triangular factor of the compression while it has at most 1024 rows, and
    from the power of the operator norm beyond that.
    """
    x = WedgePoint.coerce(x)
    rows = []
    comp = None
    if grid is not None:
        profiles = sample_profiles(12) if profiles is None else list(profiles)
        comp = compression(kind, x, mass, profiles, grid)
        s = comp["singular_values"]
        R = np.linalg.qr(comp["operator"], mode="r")
    ok = True
    for n in n_list:
        n = int(n)
        bound = contraction_bound(x, mass, n)
        row = {"n": n, "bound": bound}
        if comp is not None:
            if 0 < n and R.shape[0] ** n <= 1024:
                power = R
                for _ in range(n - 1):
                    power = np.kron(power, R)
                tensor_norm = float(np.linalg.norm(power, 2))
                row["method"] = "explicit"
            else:
                tensor_norm = float(s[0] ** n)
                row["method"] = "power"
            trace = float(np.sum(s))
            row.update({
                "tensor_power_norm": tensor_norm,
                "slack": bound + tol - tensor_norm,
                "trace_norm_power": trace ** n,
                "trace_norm_power_over_factorial": trace ** n / math.factorial(n),
                "status": "pass" if tensor_norm <= bound + tol else "fail",
            })
            ok = ok and row["status"] == "pass"
        rows.append(row)
    out = {"x": [x.x0, x.x1], "mass": mass, "kind": kind, "tolerance": tol, "rows": rows,
           "status": "pass" if ok else "fail"}
    if comp is not None:
        out["compressed_norm"] = comp["norm"]
        out["samples"] = comp["samples"]
        out["condition"] = comp["condition"]
    return out
