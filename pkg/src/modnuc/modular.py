"""Finite-dimensional modular theory for a full matrix algebra in standard form.

M = M_d (x) 1 acts on C^d (x) C^d with the vector Omega = sum_i sqrt(p_i) e_i (x) e_i.
The Tomita operator S: M Omega -> M* Omega is built from its action on the
matrix-unit basis and written as S v = A conj(v).  Then Delta = S* S = A^T conj(A)
and J v = A conj(Delta^{-1/2} v).

Antilinear maps are stored as the matrix A with v -> A conj(v).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .wedge import SpectrumReport, spectrum_report


def matrix_unit(d: int, i: int, j: int) -> np.ndarray:
    E = np.zeros((d, d), dtype=complex)
    E[i, j] = 1.0
    return E


def left(M: np.ndarray) -> np.ndarray:
    """M (x) 1."""
    return np.kron(M, np.eye(M.shape[0]))


def _psd_power(H: np.ndarray, power: float) -> np.ndarray:
    evals, evecs = np.linalg.eigh(0.5 * (H + H.conj().T))
    return (evecs * evals ** power) @ evecs.conj().T


@dataclass(frozen=True, eq=False)
class ModularPair:
    d: int
    p: np.ndarray
    omega: np.ndarray = field(repr=False)
    delta: np.ndarray = field(repr=False)
    tomita: np.ndarray = field(repr=False)
    conjugation: np.ndarray = field(repr=False)

    def apply_J(self, v: np.ndarray) -> np.ndarray:
        return self.conjugation @ np.conj(v)

    def apply_S(self, v: np.ndarray) -> np.ndarray:
        return self.tomita @ np.conj(v)

    def delta_power(self, z) -> np.ndarray:
        """Delta^z for real or imaginary z."""
        evals, evecs = np.linalg.eigh(self.delta)
        return (evecs * np.power(evals.astype(complex), z)) @ evecs.conj().T

    def delta_spectrum(self) -> np.ndarray:
        return np.sort(np.linalg.eigvalsh(self.delta))


def modular_data(d: int, p) -> ModularPair:
    """Delta and J of (M_d (x) 1, Omega) by brute force on the matrix-unit basis."""
    p = np.asarray(p, dtype=float)
    if d < 2:
        raise DomainError(f"dimension must be >= 2, got {d}")
    if p.shape != (d,):
        raise DomainError(f"probability vector has length {p.size}, expected {d}")
    if np.any(p <= 0):
        raise DomainError("p has a zero entry: Omega is not separating")
    if abs(p.sum() - 1.0) > 1e-12:
        raise DomainError(f"probabilities sum to {p.sum()!r}, not 1")

    omega = np.zeros(d * d, dtype=complex)
    for i in range(d):
        omega[i * d + i] = math.sqrt(p[i])
    B = np.empty((d * d, d * d), dtype=complex)  # columns M_k Omega
    C = np.empty((d * d, d * d), dtype=complex)  # columns M_k* Omega
    k = 0
    for i in range(d):
        for j in range(d):
            E = matrix_unit(d, i, j)
            B[:, k] = left(E) @ omega
            C[:, k] = left(E.conj().T) @ omega
            k += 1
    # S(B c) = C conj(c)  =>  S v = C conj(B^{-1}) conj(v)
    A = C @ np.conj(np.linalg.inv(B))
    delta = A.T @ np.conj(A)
    delta = 0.5 * (delta + delta.conj().T)
    J = A @ np.conj(_psd_power(delta, -0.5))
    return ModularPair(d, p, omega, delta, A, J)


def _left_factor_residual(X: np.ndarray, d: int) -> float:
    """Distance (Frobenius) of X from M_d (x) 1."""
    partial = np.einsum("iaja->ij", X.reshape(d, d, d, d)) / d
    return float(np.linalg.norm(X - left(partial)))


def invariant_report(P: ModularPair, times=(0.3, 1.7)) -> dict:
    """Residuals of the modular identities."""
    d = P.d
    units = [left(matrix_unit(d, i, j)) for i in range(d) for j in range(d)]
    J = P.conjugation
    res = {
        "delta_omega": float(np.linalg.norm(P.delta @ P.omega - P.omega)),
        "j_omega": float(np.linalg.norm(P.apply_J(P.omega) - P.omega)),
        "j_squared": float(np.linalg.norm(J @ np.conj(J) - np.eye(d * d))),
    }
    # J M J is linear: v -> J conj(M) conj(J) v
    comm = 0.0
    for E in units:
        JEJ = J @ np.conj(E) @ np.conj(J)
        for F in units:
            comm = max(comm, float(np.linalg.norm(JEJ @ F - F @ JEJ)))
    res["jmj_commutant"] = comm
    flow = 0.0
    for t in times:
        U = P.delta_power(1j * t)
        Uinv = P.delta_power(-1j * t)
        for E in units:
            flow = max(flow, _left_factor_residual(U @ E @ Uinv, d))
    res["modular_flow"] = flow
    half = P.delta_power(0.5)
    tomita = 0.0
    for E in units:
        v = E @ P.omega
        target = E.conj().T @ P.omega
        tomita = max(tomita, float(np.linalg.norm(P.apply_J(half @ v) - target)))
    res["polar_decomposition"] = tomita
    min_eig = float(np.min(np.linalg.eigvalsh(P.delta)))
    res["delta_min_eigenvalue"] = min_eig
    return res


def nuclearity_map(P: ModularPair, alpha: float = 0.25) -> np.ndarray:
    """Matrix of M -> Delta^alpha M Omega in the (Hilbert-Schmidt orthonormal) matrix-unit basis."""
    d = P.d
    D = P.delta_power(alpha)
    cols = [D @ (left(matrix_unit(d, i, j)) @ P.omega) for i in range(d) for j in range(d)]
    return np.column_stack(cols)


def nuclearity_spectrum(P: ModularPair, alpha: float = 0.25) -> tuple[SpectrumReport, float]:
    """Singular values of M -> Delta^alpha M Omega and the bound sqrt(d) * sum(s).

    The singular values are for the Hilbert-Schmidt norm on the algebra; since
    ||M||_HS <= sqrt(d) ||M||, sqrt(d) * sum(s) bounds the nuclear norm for the
    operator norm on the algebra.
    """
    rep = spectrum_report(nuclearity_map(P, alpha))
    return rep, math.sqrt(P.d) * rep.trace_norm
