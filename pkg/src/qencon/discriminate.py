"""Quantum state discrimination on encoded class ensembles.

Binary discrimination at equal priors has a closed-form optimum: success
probability 1/2 + ||rho0 - rho1||_tr / 4, achieved by projecting onto the
nonnegative eigenspace of rho0 - rho1.  Multi-class POVM optimization is a
semidefinite program and is deliberately not implemented here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DensityMatrix, hermitian_eigen
from .encoding import encode_batch


@dataclass(frozen=True)
class ClassEnsemble:
    """Per-class average density matrices with their sample counts."""

    states: tuple[DensityMatrix, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.states) != len(self.counts) or not self.states:
            raise ValueError("need one count per class state")
        if any(c < 1 for c in self.counts):
            raise ValueError("class counts must be >= 1")


@dataclass(frozen=True)
class Measurement:
    """POVM: positive operators summing to the identity."""

    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(op, dtype=complex) for op in self.operators)
        object.__setattr__(self, "operators", ops)
        if not ops:
            raise ValueError("measurement needs at least one operator")
        dim = ops[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for op in ops:
            if op.shape != (dim, dim):
                raise ValueError("operators must be square and equal-sized")
            w, _ = hermitian_eigen(op)
            if w[-1] < -1e-9:
                raise ValueError(f"operator has eigenvalue {w[-1]} below -1e-9")
            total += op
        if np.max(np.abs(total - np.eye(dim))) > 1e-9:
            raise ValueError("operators do not sum to the identity")


def class_average_states(data) -> ClassEnsemble:
    """Mean encoded density matrix of each class of a labeled dataset."""
    labels = data.labels
    k = labels.shape[1]
    counts = labels.sum(axis=0).astype(int)
    if np.any(counts < 1):
        raise ValueError("every class needs at least one sample")
    amps = encode_batch(data.spec, data.features)
    states = []
    for c in range(k):
        rows = amps[labels[:, c] == 1]
        rho = np.einsum("bi,bj->ij", rows, rows.conj()) / rows.shape[0]
        states.append(DensityMatrix(data.spec.n, rho))
    return ClassEnsemble(tuple(states), tuple(int(c) for c in counts))


def success_probability(ensemble: ClassEnsemble, m: Measurement) -> float:
    """Equal-prior success probability (1/K) sum_k Tr(Pi_k rho_k)."""
    k = len(ensemble.states)
    if len(m.operators) != k:
        raise ValueError("measurement arity does not match class count")
    total = 0.0
    for op, rho in zip(m.operators, ensemble.states):
        total += np.trace(op @ rho.matrix).real
    return total / k


def helstrom_binary(rho0: DensityMatrix, rho1: DensityMatrix) -> tuple[float, Measurement]:
    """Optimal two-outcome measurement for equal priors.

    Returns (success probability, measurement); the projector onto the
    nonnegative eigenspace of rho0 - rho1 answers "class 0" (zero eigenvalues
    are grouped there by convention, for determinism).
    """
    if rho0.n != rho1.n:
        raise ValueError(f"dimension mismatch: {rho0.n} vs {rho1.n} qubits")
    diff = rho0.matrix - rho1.matrix
    w, v = hermitian_eigen(diff)
    p_succ = 0.5 + 0.25 * float(np.sum(np.abs(w)))
    keep = v[:, w >= 0.0]
    pi0 = keep @ keep.conj().T
    pi1 = np.eye(2 ** rho0.n, dtype=complex) - pi0
    return p_succ, Measurement((pi0, pi1))


def discriminate_ensemble(ensemble: ClassEnsemble) -> tuple[float, Measurement]:
    """Optimal discrimination of a class ensemble; binary only."""
    if len(ensemble.states) != 2:
        raise ValueError(
            f"got {len(ensemble.states)} classes; multi-class POVM optimization "
            "(a semidefinite program) is not supported, only the binary optimum"
        )
    return helstrom_binary(ensemble.states[0], ensemble.states[1])


def psucc_bound(k: int, eps: float) -> float:
    """Concentration limit on discrimination: 1/K + eps."""
    if k < 2:
        raise ValueError("need at least two classes")
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    return 1.0 / k + eps
