"""Quantum divergences and distances.

All divergences use log base 2.  Fidelity follows the squared-overlap
convention F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, which for
pure states reduces to |<psi|phi>|^2 and satisfies
1 - sqrt(F) <= ||rho - sigma||_tr / 2 <= sqrt(1 - F).
"""

from __future__ import annotations

import math

import numpy as np

from .core import DensityMatrix, hermitian_eigen

_SINGULAR_MIN = 1e-10


def _check_same_dim(rho: DensityMatrix, sigma: DensityMatrix) -> None:
    if rho.n != sigma.n:
        raise ValueError(f"dimension mismatch: {rho.n} vs {sigma.n} qubits")


def renyi2_vs_mixed(rho: DensityMatrix) -> float:
    """Order-2 divergence to the maximally mixed state: log2(2^n * Tr rho^2)."""
    return max(0.0, math.log2((2 ** rho.n) * rho.purity()))


def petz_renyi2(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """log2 Tr(rho^2 sigma^{-1}); sigma must be full rank.

    A singular reference is an error rather than being silently
    pseudo-inverted, since the quantity is undefined there.
    """
    _check_same_dim(rho, sigma)
    w, v = hermitian_eigen(sigma.matrix)
    if w[-1] <= _SINGULAR_MIN:
        raise ValueError(
            f"reference state is singular (min eigenvalue {w[-1]} <= {_SINGULAR_MIN}); "
            "regularize explicitly if that is intended"
        )
    sigma_inv = (v / w) @ v.conj().T
    value = np.trace(rho.matrix @ rho.matrix @ sigma_inv).real
    return math.log2(value)


def trace_norm_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Tr|rho - sigma|, the sum of absolute eigenvalues of the difference."""
    _check_same_dim(rho, sigma)
    w, _ = hermitian_eigen(rho.matrix - sigma.matrix)
    return float(np.sum(np.abs(w)))


def _psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    # round-off negatives (within the density-matrix tolerance) clip to zero
    w, v = hermitian_eigen(matrix)
    if w[-1] < -1e-8:
        raise ValueError(f"matrix is not positive semi-definite (min eigenvalue {w[-1]})")
    return (v * np.sqrt(np.maximum(w, 0.0))) @ v.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """F(rho, sigma) = (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 in [0, 1]."""
    _check_same_dim(rho, sigma)
    root = _psd_sqrt(rho.matrix)
    inner = root @ sigma.matrix @ root
    w, _ = hermitian_eigen(inner)
    total = float(np.sum(np.sqrt(np.maximum(w, 0.0))))
    return min(1.0, total * total)
