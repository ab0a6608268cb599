"""Two-particle scattering functions on the physical strip 0 <= Im z <= pi.

Three models are shipped: the free Bose (S = +1) and free Fermi (S = -1)
constants, and the sinh family

    S(z) = (sinh z - i sin b) / (sinh z + i sin b),   0 < b < pi,

which is unitary and crossing symmetric on the real line, bounded on the
strip, and has zeros at z = i b and z = i (pi - b).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

# slack on the strip boundary for roundoff in Im z
_STRIP_TOL = 1e-12


@dataclass(frozen=True)
class ScatteringFunction:
    """A scattering function model.

    ``kind`` is one of ``"const"`` or ``"sinh"``.  For constants ``sign``
    is +1 or -1; for the sinh family ``b`` is the coupling in (0, pi).
    """

    kind: str
    sign: int = 1
    b: float = float("nan")

    def __post_init__(self):
        if self.kind == "const":
            if self.sign not in (1, -1):
                raise ConfigError("constant model must be +1 or -1", "smatrix")
        elif self.kind == "sinh":
            if not 0.0 < self.b < math.pi:
                raise ConfigError(f"sinh coupling b={self.b} outside (0, pi)", "smatrix")
        else:
            raise ConfigError(f"unknown model kind {self.kind!r}", "smatrix")

    @classmethod
    def free_bose(cls) -> "ScatteringFunction":
        return cls("const", 1)

    @classmethod
    def free_fermi(cls) -> "ScatteringFunction":
        return cls("const", -1)

    @classmethod
    def sinh(cls, b: float) -> "ScatteringFunction":
        return cls("sinh", b=float(b))

    @property
    def name(self) -> str:
        if self.kind == "const":
            return "free-bose" if self.sign == 1 else "free-fermi"
        return f"sinh:b={self.b!r}"

    def __call__(self, z):
        return evaluate(self, z)

    def on_real(self, theta):
        """Evaluate at real rapidities without the strip check (vectorized)."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == "const":
            return np.full(theta.shape, complex(self.sign))
        sb = 1j * math.sin(self.b)
        sh = np.sinh(theta)
        # sinh(0) = 0 gives -1; complex division would leave it an ulp off
        return np.where(sh == 0, -1.0 + 0j, (sh - sb) / (sh + sb))


def parse_model(text: str) -> ScatteringFunction:
    """Parse ``free-bose``, ``free-fermi`` or ``sinh:b=<float>``."""
    text = text.strip()
    if text == "free-bose":
        return ScatteringFunction.free_bose()
    if text == "free-fermi":
        return ScatteringFunction.free_fermi()
    if text.startswith("sinh:"):
        key, _, value = text[5:].partition("=")
        if key.strip() != "b":
            raise ConfigError(f"expected sinh:b=<float>, got {text!r}", "smatrix")
        try:
            b = float(value)
        except ValueError:
            raise ConfigError(f"bad coupling in {text!r}", "smatrix") from None
        return ScatteringFunction.sinh(b)
    raise ConfigError(f"unknown model {text!r}", "smatrix")


def evaluate(S: ScatteringFunction, z):
    """Return S(z) for z (scalar or array) in the closed strip 0 <= Im z <= pi."""
    z = np.asarray(z, dtype=complex)
    im = z.imag
    if np.any(im < -_STRIP_TOL) or np.any(im > math.pi + _STRIP_TOL):
        raise DomainError("rapidity outside the strip 0 <= Im z <= pi")
    if S.kind == "const":
        out = np.full(z.shape, complex(S.sign))
    else:
        sb = 1j * math.sin(S.b)
        sh = np.sinh(z)
        out = np.where(sh == 0, -1.0 + 0j, (sh - sb) / (sh + sb))
    return out[()] if out.ndim == 0 else out


def constraint_residuals(S: ScatteringFunction, grid) -> tuple[float, float, float]:
    """Unitarity, reality and crossing residuals maximised over the grid nodes.

    Returns ``(max|S S* - 1|, max|S* (t) - S(-t)|, max|S(-t) - S(t + i pi)|)``.
    ``grid`` may be a :class:`~modnuc.quadrature.RapidityGrid` or an array.
    """
    theta = np.asarray(getattr(grid, "nodes", grid), dtype=float)
    if theta.size == 0:
        raise ConfigError("empty grid", "grid")
    s = evaluate(S, theta)
    s_neg = evaluate(S, -theta)
    s_cross = evaluate(S, theta + 1j * math.pi)
    unitarity = np.max(np.abs(s * np.conj(s) - 1.0))
    reality = np.max(np.abs(np.conj(s) - s_neg))
    crossing = np.max(np.abs(s_neg - s_cross))
    return float(unitarity), float(reality), float(crossing)


def analyticity_margin(S: ScatteringFunction) -> float:
    """Width of analytic continuation below the strip.

    Infinite for the constants.  For the sinh family this is the distance
    min(b, pi - b) from the real axis to the nearest zero of S in the strip;
    the formula is specific to the shipped family.
    """
    if S.kind == "const":
        return math.inf
    return min(S.b, math.pi - S.b)
