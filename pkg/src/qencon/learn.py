"""Variational classifier: ansatz, softmax cross-entropy, parameter-shift
gradients, Adam, training loop, and a gradient-magnitude probe.

The standard ansatz is one column of U3 gates (3n parameters) followed by
`l_qnn` blocks of [CNOT ring; Ry column] (n parameters each).  Scores are
h_k = <psi| U(theta)^dagger H_k U(theta) |psi> and the loss is softmax
cross-entropy in nats.  Every trainable parameter enters exactly one Pauli
rotation, so d h_k / d theta_i = (h_k(theta_i + pi/2) - h_k(theta_i - pi/2)) / 2
exactly.

Training evaluates whole batches by composing the ansatz unitary once per
(shifted) parameter value and applying it to all encoded states with a single
matrix product; results are deterministic given the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    PauliString,
    StateVector,
    _apply_cnot_batch,
    _apply_cz_batch,
    _apply_1q_batch,
    expectation_batch,
    rx,
    ry,
    rz,
)
from .encoding import EncodingCircuitSpec, encode_batch, ring_layer, substream


@dataclass(frozen=True)
class ParamGate:
    """One ansatz gate; rotations reference a position in the parameter vector."""

    kind: str  # RX / RY / RZ with a param index, or CNOT / CZ without
    wires: tuple[int, ...]
    param: int | None = None

    def __post_init__(self):
        if self.kind in ("RX", "RY", "RZ"):
            if self.param is None:
                raise ValueError(f"{self.kind} gate needs a parameter index")
        elif self.kind in ("CNOT", "CZ"):
            if self.param is not None:
                raise ValueError(f"{self.kind} gate takes no parameter")
        else:
            raise ValueError(f"unsupported ansatz gate {self.kind!r}")


@dataclass(frozen=True)
class QnnSpec:
    """Trainable circuit plus measured observables.

    `program` lists the gates in application order; each parameter index must
    be used by exactly one rotation (required for the shift rule used here).
    """

    n: int
    program: tuple[ParamGate, ...]
    observables: tuple[PauliString, ...]
    theta: np.ndarray
    l_qnn: int | None = None

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "program", tuple(self.program))
        object.__setattr__(self, "observables", tuple(self.observables))
        if len(self.observables) < 2:
            raise ValueError("need at least two observables (K >= 2)")
        for obs in self.observables:
            if len(obs) != self.n:
                raise ValueError("observable length must equal the qubit count")
        used = [g.param for g in self.program if g.param is not None]
        if sorted(used) != list(range(len(used))):
            raise ValueError("parameter indices must be 0..P-1, each used exactly once")
        if theta.shape != (len(used),):
            raise ValueError(f"theta must have length {len(used)}, got {theta.shape}")
        for g in self.program:
            if any(w >= self.n or w < 0 for w in g.wires):
                raise ValueError("program gate wires out of range")

    @property
    def param_count(self) -> int:
        return self.theta.size

    @property
    def k_classes(self) -> int:
        return len(self.observables)

    def with_theta(self, theta: np.ndarray) -> "QnnSpec":
        return QnnSpec(self.n, self.program, self.observables, theta, self.l_qnn)


def default_observables(n: int) -> tuple[PauliString, ...]:
    """Z and X on the first qubit, identity elsewhere."""
    tail = "I" * (n - 1)
    return (PauliString("Z" + tail), PauliString("X" + tail))


def standard_qnn(n: int, l_qnn: int, observables=None,
                 theta: np.ndarray | None = None) -> QnnSpec:
    """U3 column followed by l_qnn blocks of [CNOT ring; Ry column].

    Parameter layout: qubit-major U3 triples (Rz, Ry, Rz application order)
    then one Ry parameter per qubit per block; 3n + n*l_qnn in total.
    """
    if l_qnn < 1:
        raise ValueError("need l_qnn >= 1")
    program: list[ParamGate] = []
    p = 0
    for j in range(n):
        for kind in ("RZ", "RY", "RZ"):
            program.append(ParamGate(kind, (j,), p))
            p += 1
    for _ in range(l_qnn):
        for kind, control, target in ring_layer(n):
            program.append(ParamGate(kind, (control, target)))
        for j in range(n):
            program.append(ParamGate("RY", (j,), p))
            p += 1
    if observables is None:
        observables = default_observables(n)
    if theta is None:
        theta = np.zeros(p)
    return QnnSpec(n, tuple(program), tuple(observables), theta, l_qnn)


def random_theta(param_count: int, seed: int) -> np.ndarray:
    """Uniform [0, 2*pi) initialization from a seeded stream."""
    return substream(seed, 0).uniform(0.0, 2.0 * np.pi, param_count)


# ---------------------------------------------------------------------------
# Forward evaluation


def _ansatz_matrix_t(qnn: QnnSpec, theta: np.ndarray) -> np.ndarray:
    """Transpose of the ansatz unitary; evolved batch = states @ result."""
    n = qnn.n
    m = np.eye(2 ** n, dtype=complex)  # row b carries U|b>
    for g in qnn.program:
        if g.kind == "CNOT":
            m = _apply_cnot_batch(m, g.wires[0], g.wires[1], n)
        elif g.kind == "CZ":
            m = _apply_cz_batch(m, g.wires[0], g.wires[1], n)
        else:
            angle = theta[g.param]
            u = {"RX": rx, "RY": ry, "RZ": rz}[g.kind](angle)
            m = _apply_1q_batch(m, u, g.wires[0], n)
    return m


def _scores(qnn: QnnSpec, theta: np.ndarray, states: np.ndarray) -> np.ndarray:
    """(batch, K) score matrix for encoded states of shape (batch, 2^n)."""
    evolved = states @ _ansatz_matrix_t(qnn, theta)
    return np.stack([expectation_batch(evolved, obs) for obs in qnn.observables], axis=1)


def qnn_forward(qnn: QnnSpec, state: StateVector) -> np.ndarray:
    """Scores h_k = Tr[H_k U rho U^dagger] for a single input state."""
    if state.n != qnn.n:
        raise ValueError(f"state has {state.n} qubits, ansatz expects {qnn.n}")
    return _scores(qnn, qnn.theta, state.amplitudes[None, :])[0]


# ---------------------------------------------------------------------------
# Loss and gradients


def softmax(h: np.ndarray) -> np.ndarray:
    shifted = h - np.max(h, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _check_one_hot(y: np.ndarray) -> None:
    if not (np.all((y == 0) | (y == 1)) and np.all(y.sum(axis=-1) == 1)):
        raise ValueError("labels must be one-hot")


def ce_loss(h: np.ndarray, y: np.ndarray) -> float:
    """Softmax cross-entropy in nats for one sample."""
    h = np.asarray(h, dtype=float)
    y = np.asarray(y, dtype=float)
    if h.shape != y.shape:
        raise ValueError("score and label lengths differ")
    _check_one_hot(y)
    log_norm = np.log(np.sum(np.exp(h - np.max(h)))) + np.max(h)
    return float(log_norm - h[y == 1][0])


def _batch_loss(scores: np.ndarray, labels: np.ndarray) -> float:
    log_norm = np.log(np.sum(np.exp(scores - scores.max(axis=1, keepdims=True)),
                             axis=1)) + scores.max(axis=1)
    picked = np.sum(scores * labels, axis=1)
    return float(np.mean(log_norm - picked))


def _grad_and_loss(qnn: QnnSpec, theta: np.ndarray, states: np.ndarray,
                   labels: np.ndarray) -> tuple[np.ndarray, float]:
    h0 = _scores(qnn, theta, states)
    loss = _batch_loss(h0, labels)
    weights = softmax(h0) - labels  # dL/dh per sample
    grad = np.zeros(theta.size)
    for i in range(theta.size):
        shifted = theta.copy()
        shifted[i] = theta[i] + np.pi / 2
        h_plus = _scores(qnn, shifted, states)
        shifted[i] = theta[i] - np.pi / 2
        h_minus = _scores(qnn, shifted, states)
        dh = (h_plus - h_minus) / 2.0
        grad[i] = float(np.mean(np.sum(weights * dh, axis=1)))
    return grad, loss


def grad_param_shift(qnn: QnnSpec, batch) -> np.ndarray:
    """Batch-averaged dL/dtheta via the exact two-point shift rule.

    `batch` is a sequence of (StateVector, one-hot label) pairs.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    states = np.stack([s.amplitudes for s, _ in batch])
    labels = np.stack([np.asarray(y, dtype=float) for _, y in batch])
    _check_one_hot(labels)
    grad, _ = _grad_and_loss(qnn, qnn.theta, states, labels)
    return grad


# ---------------------------------------------------------------------------
# Optimizer and training loop


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int
    learning_rate: float
    epochs: int
    seed: int
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        for b in (self.beta1, self.beta2):
            if not (0.0 < b < 1.0):
                raise ValueError("Adam betas must lie in (0, 1)")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size))


def adam_step(theta: np.ndarray, grad: np.ndarray, opt_state: AdamState,
              cfg: TrainConfig, step_index: int) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; `step_index` counts from 1."""
    if theta.shape != grad.shape:
        raise ValueError("theta and gradient lengths differ")
    m = cfg.beta1 * opt_state.m + (1.0 - cfg.beta1) * grad
    v = cfg.beta2 * opt_state.v + (1.0 - cfg.beta2) * grad * grad
    m_hat = m / (1.0 - cfg.beta1 ** step_index)
    v_hat = v / (1.0 - cfg.beta2 ** step_index)
    new_theta = theta - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps_adam)
    return new_theta, AdamState(m, v)


@dataclass(frozen=True)
class LabeledDataset:
    """Feature vectors with one-hot labels, tied to the encoder that reads them."""

    features: np.ndarray  # (N, feature_count)
    labels: np.ndarray    # (N, K) one-hot
    spec: EncodingCircuitSpec

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=float)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        if feats.ndim != 2 or labels.ndim != 2 or feats.shape[0] != labels.shape[0]:
            raise ValueError("features and labels must be 2-d with matching rows")
        if feats.shape[0] == 0:
            raise ValueError("dataset is empty")
        if feats.shape[1] != self.spec.feature_count:
            raise ValueError(
                f"features have {feats.shape[1]} columns, encoder expects {self.spec.feature_count}"
            )
        _check_one_hot(labels)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def k_classes(self) -> int:
        return self.labels.shape[1]

    def samples(self):
        """Iterate (feature vector, one-hot label) pairs."""
        for x, y in zip(self.features, self.labels):
            yield x, y


@dataclass(frozen=True)
class TrainReport:
    loss_trace: np.ndarray
    final_theta: np.ndarray
    final_train_loss: float
    test_accuracy: float | None = None


def train(data: LabeledDataset, qnn: QnnSpec, cfg: TrainConfig,
          test_data: LabeledDataset | None = None) -> TrainReport:
    """Minibatch Adam on the softmax cross-entropy; deterministic per seed.

    Encodes the dataset once up front.  Each epoch reshuffles with a
    substream of the config seed; the loss trace records the batch loss at
    the parameters used for that step's gradient.
    """
    if data.k_classes != qnn.k_classes:
        raise ValueError("dataset classes do not match observable count")
    if data.spec.n != qnn.n:
        raise ValueError("encoder and ansatz disagree on qubit count")
    states = encode_batch(data.spec, data.features)
    labels = data.labels
    theta = qnn.theta.copy()
    opt = AdamState.zeros(theta.size)
    trace: list[float] = []
    step = 0
    n_samples = len(data)
    for epoch in range(cfg.epochs):
        order = substream(cfg.seed, epoch + 1).permutation(n_samples)
        for start in range(0, n_samples, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            grad, loss = _grad_and_loss(qnn, theta, states[idx], labels[idx])
            step += 1
            theta, opt = adam_step(theta, grad, opt, cfg, step)
            trace.append(loss)
    final_loss = _batch_loss(_scores(qnn, theta, states), labels)
    trained = qnn.with_theta(theta)
    accuracy = evaluate(trained, test_data) if test_data is not None else None
    return TrainReport(np.asarray(trace), theta, final_loss, accuracy)


def evaluate(qnn: QnnSpec, data: LabeledDataset) -> float:
    """Fraction of samples whose top score matches the labeled class.

    Ties break toward the lowest index on both sides.
    """
    if len(data) == 0:
        raise ValueError("empty dataset")
    states = encode_batch(data.spec, data.features)
    scores = _scores(qnn, qnn.theta, states)
    predicted = np.argmax(scores, axis=1)
    actual = np.argmax(data.labels, axis=1)
    return float(np.mean(predicted == actual))


def gradient_probe(data: LabeledDataset, qnn: QnnSpec, trials: int, seed: int) -> float:
    """Largest |dL/dtheta_i| over `trials` random parameter draws.

    Each trial draws theta uniform in [0, 2*pi) from substream (seed, trial)
    and evaluates the full-dataset gradient.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    states = encode_batch(data.spec, data.features)
    labels = data.labels
    worst = 0.0
    for t in range(trials):
        theta = substream(seed, t).uniform(0.0, 2.0 * np.pi, qnn.param_count)
        grad, _ = _grad_and_loss(qnn, theta, states, labels)
        worst = max(worst, float(np.max(np.abs(grad))))
    return worst
