"""Dense complex linear algebra and statevector simulation.

Conventions used throughout the package:

* Qubit 0 is the most significant bit of a basis index (the top wire of a
  circuit diagram), so for n=2 the basis order is |00>, |01>, |10>, |11>.
* Rotation gates are R_P(theta) = exp(-i * theta * P / 2) for P in {X, Y, Z}.
* U3(t1, t2, t3) = Rz(t3) @ Ry(t2) @ Rz(t1), i.e. Rz(t1) acts first.

Gates are applied on amplitude strides (reshape + matmul on one axis), never
by building 2^n x 2^n matrices.  The `_batch` helpers act on arrays of shape
(batch, 2^n) and are the workhorses for Monte-Carlo sampling and training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-10
HERM_TOL = 1e-10

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI_BY_LETTER = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

ROTATION_KINDS = ("RX", "RY", "RZ")
FIXED_1Q_KINDS = ("PauliX", "PauliY", "PauliZ")
TWO_QUBIT_KINDS = ("CNOT", "CZ")

_ANGLE_COUNT = {
    "RX": 1, "RY": 1, "RZ": 1, "U3": 3,
    "PauliX": 0, "PauliY": 0, "PauliZ": 0,
    "CNOT": 0, "CZ": 0,
}
_WIRE_COUNT = {
    "RX": 1, "RY": 1, "RZ": 1, "U3": 1,
    "PauliX": 1, "PauliY": 1, "PauliZ": 1,
    "CNOT": 2, "CZ": 2,
}


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    e = np.exp(-0.5j * theta)
    return np.array([[e, 0.0], [0.0, e.conjugate()]], dtype=complex)


def u3(theta1: float, theta2: float, theta3: float) -> np.ndarray:
    return rz(theta3) @ ry(theta2) @ rz(theta1)


@dataclass(frozen=True)
class GateSpec:
    """One gate: kind, target wires (0-based, wire 0 = top/MSB), angles in radians."""

    kind: str
    wires: tuple[int, ...]
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _ANGLE_COUNT:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.angles) != _ANGLE_COUNT[self.kind]:
            raise ValueError(
                f"{self.kind} takes {_ANGLE_COUNT[self.kind]} angle(s), got {len(self.angles)}"
            )
        if len(self.wires) != _WIRE_COUNT[self.kind]:
            raise ValueError(
                f"{self.kind} acts on {_WIRE_COUNT[self.kind]} wire(s), got {len(self.wires)}"
            )
        if len(set(self.wires)) != len(self.wires):
            raise ValueError("gate wires must be distinct")
        if any(w < 0 for w in self.wires):
            raise ValueError("gate wires must be non-negative")

    def unitary_1q(self) -> np.ndarray:
        """2x2 matrix of a single-qubit gate."""
        if self.kind == "RX":
            return rx(self.angles[0])
        if self.kind == "RY":
            return ry(self.angles[0])
        if self.kind == "RZ":
            return rz(self.angles[0])
        if self.kind == "U3":
            return u3(*self.angles)
        if self.kind == "PauliX":
            return PAULI_X
        if self.kind == "PauliY":
            return PAULI_Y
        if self.kind == "PauliZ":
            return PAULI_Z
        raise ValueError(f"{self.kind} is not a single-qubit gate")


@dataclass(frozen=True)
class StateVector:
    """Pure n-qubit state; amplitudes indexed with qubit 0 as the MSB."""

    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        if self.n < 1:
            raise ValueError("need at least one qubit")
        if amps.shape != (2 ** self.n,):
            raise ValueError(f"expected {2 ** self.n} amplitudes, got shape {amps.shape}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond {NORM_TOL}")


def zero_state(n: int) -> StateVector:
    amps = np.zeros(2 ** n, dtype=complex)
    amps[0] = 1.0
    return StateVector(n, amps)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace 2^n x 2^n matrix.

    Hermiticity and trace are validated on construction; positivity is
    checked separately via :meth:`validate_psd` (it needs an eigensolve).
    """

    n: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        dim = 2 ** self.n
        if m.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > HERM_TOL:
            raise ValueError("matrix is not Hermitian within tolerance")
        if abs(np.trace(m).real - 1.0) > HERM_TOL or abs(np.trace(m).imag) > HERM_TOL:
            raise ValueError("matrix trace deviates from 1 beyond tolerance")

    def purity(self) -> float:
        return float(np.vdot(self.matrix, self.matrix).real)

    def validate_psd(self, tol: float = 1e-8) -> None:
        eigenvalues, _ = hermitian_eigen(self.matrix)
        if eigenvalues[-1] < -tol:
            raise ValueError(f"minimum eigenvalue {eigenvalues[-1]} below -{tol}")


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis, e.g. "ZIXY"; one letter per qubit."""

    letters: str

    def __post_init__(self):
        if not self.letters or any(c not in "IXYZ" for c in self.letters):
            raise ValueError(f"invalid Pauli string {self.letters!r}")

    def __len__(self) -> int:
        return len(self.letters)

    def matrix(self) -> np.ndarray:
        m = np.array([[1.0 + 0j]])
        for c in self.letters:
            m = np.kron(m, PAULI_BY_LETTER[c])
        return m


# ---------------------------------------------------------------------------
# Strided gate application on (batch, 2^n) amplitude arrays


def _apply_1q_batch(amps: np.ndarray, u: np.ndarray, wire: int, n: int) -> np.ndarray:
    """Apply one 2x2 unitary (shared across the batch) on `wire`."""
    batch = amps.shape[0]
    t = amps.reshape((batch,) + (2,) * n)
    t = np.moveaxis(t, 1 + wire, -1)
    t = t @ u.T
    return np.moveaxis(t, -1, 1 + wire).reshape(batch, -1)


def _apply_1q_batch_many(amps: np.ndarray, us: np.ndarray, wire: int, n: int) -> np.ndarray:
    """Apply per-sample 2x2 unitaries `us` of shape (batch, 2, 2) on `wire`."""
    batch = amps.shape[0]
    t = amps.reshape((batch,) + (2,) * n)
    t = np.moveaxis(t, 1 + wire, -1)
    t = np.einsum("bij,b...j->b...i", us, t)
    return np.moveaxis(t, -1, 1 + wire).reshape(batch, -1)


def _apply_cnot_batch(amps: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    batch = amps.shape[0]
    t = amps.reshape((batch,) + (2,) * n).copy()
    i0 = [slice(None)] * (n + 1)
    i0[1 + control] = 1
    i1 = list(i0)
    i0[1 + target] = 0
    i1[1 + target] = 1
    t[tuple(i0)], t[tuple(i1)] = t[tuple(i1)].copy(), t[tuple(i0)].copy()
    return t.reshape(batch, -1)


def _apply_cz_batch(amps: np.ndarray, control: int, target: int, n: int) -> np.ndarray:
    batch = amps.shape[0]
    t = amps.reshape((batch,) + (2,) * n).copy()
    idx = [slice(None)] * (n + 1)
    idx[1 + control] = 1
    idx[1 + target] = 1
    t[tuple(idx)] *= -1.0
    return t.reshape(batch, -1)


def _apply_gate_batch(amps: np.ndarray, gate: GateSpec, n: int) -> np.ndarray:
    if any(w >= n for w in gate.wires):
        raise ValueError(f"gate wires {gate.wires} out of range for {n} qubits")
    if gate.kind == "CNOT":
        return _apply_cnot_batch(amps, gate.wires[0], gate.wires[1], n)
    if gate.kind == "CZ":
        return _apply_cz_batch(amps, gate.wires[0], gate.wires[1], n)
    return _apply_1q_batch(amps, gate.unitary_1q(), gate.wires[0], n)


def apply_gate(state: StateVector, gate: GateSpec) -> StateVector:
    """Return U|psi> for the gate's unitary embedded on its wires."""
    amps = _apply_gate_batch(state.amplitudes[None, :], gate, state.n)[0]
    return StateVector(state.n, amps)


def apply_circuit(state: StateVector, gates: list[GateSpec] | tuple[GateSpec, ...]) -> StateVector:
    amps = state.amplitudes[None, :]
    for g in gates:
        amps = _apply_gate_batch(amps, g, state.n)
    return StateVector(state.n, amps[0])


# ---------------------------------------------------------------------------
# Observables


def _pauli_apply_batch(letters: str, amps: np.ndarray) -> np.ndarray:
    """P|psi> for each row of `amps`, using bit masks instead of matrices."""
    n = len(letters)
    dim = amps.shape[-1]
    idx = np.arange(dim)
    flip = 0
    phase = np.ones(dim, dtype=complex)
    for j, letter in enumerate(letters):
        bit = (idx >> (n - 1 - j)) & 1
        if letter == "X":
            flip |= 1 << (n - 1 - j)
        elif letter == "Y":
            flip |= 1 << (n - 1 - j)
            phase = phase * (1j * (1 - 2 * bit))
        elif letter == "Z":
            phase = phase * (1 - 2 * bit)
    out = np.empty_like(amps)
    out[..., idx ^ flip] = phase * amps
    return out


def expectation_batch(amps: np.ndarray, obs: PauliString) -> np.ndarray:
    """<psi|P|psi> for each row; real by Hermiticity."""
    applied = _pauli_apply_batch(obs.letters, amps)
    return np.einsum("bi,bi->b", amps.conj(), applied).real


def expectation(state: StateVector, obs: PauliString) -> float:
    if len(obs) != state.n:
        raise ValueError(f"observable on {len(obs)} qubits, state has {state.n}")
    return float(expectation_batch(state.amplitudes[None, :], obs)[0])


def density_from_state(state: StateVector) -> DensityMatrix:
    """Rank-1 projector |psi><psi|."""
    return DensityMatrix(state.n, np.outer(state.amplitudes, state.amplitudes.conj()))


# ---------------------------------------------------------------------------
# Hermitian eigensolver: cyclic Jacobi with complex plane rotations.
# Robust for the dimensions used here (<= 2^10); intended for matrices with
# entries of order one (densities, bounded observables, their differences).

_JACOBI_SWEEP_CAP = 100
_JACOBI_OFF_TOL = 1e-12


def hermitian_eigen(matrix: np.ndarray, herm_tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues descending, eigenvectors as columns) with
    V @ diag(w) @ V^dagger reconstructing the input.
    Raises ValueError on non-Hermitian input and RuntimeError if the
    off-diagonal Frobenius norm has not reached 1e-12 after 100 sweeps.
    """
    a = np.array(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    dim = a.shape[0]
    if dim > 1024:
        raise ValueError("dimension above 2^10 not supported")
    if np.max(np.abs(a - a.conj().T)) > herm_tol:
        raise ValueError("matrix is not Hermitian within tolerance")
    a = (a + a.conj().T) / 2.0
    v = np.eye(dim, dtype=complex)

    off_mask = ~np.eye(dim, dtype=bool)
    converged = False
    for _ in range(_JACOBI_SWEEP_CAP):
        off = np.linalg.norm(a[off_mask])
        if off < _JACOBI_OFF_TOL:
            converged = True
            break
        for p in range(dim - 1):
            for q in range(p + 1, dim):
                apq = a[p, q]
                mag = abs(apq)
                if mag < 1e-150:  # negligible and unsafe to divide by
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                phase = apq / mag
                tau = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                if abs(tau) > 1e100:  # tau*tau would overflow; rotation is tiny
                    t = 0.5 / tau
                elif tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # column update (A @ R), then row update (R^dagger @ A)
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * np.conj(phase) * col_q
                a[:, q] = s * phase * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * phase * row_q
                a[q, :] = s * np.conj(phase) * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vcol_p = v[:, p].copy()
                vcol_q = v[:, q].copy()
                v[:, p] = c * vcol_p - s * np.conj(phase) * vcol_q
                v[:, q] = s * phase * vcol_p + c * vcol_q
    if not converged:
        off = np.linalg.norm(a[off_mask])
        if off >= _JACOBI_OFF_TOL:
            raise RuntimeError(f"Jacobi eigensolver did not converge (off-diagonal norm {off})")

    w = np.diagonal(a).real.copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]
