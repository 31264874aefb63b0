"""Encoding circuits, Gaussian feature sampling, and Monte-Carlo average states.

Feature layout is fixed: the flat feature vector is indexed row-major over
(qubit j, layer d, rotation k), i.e. slot = (j * D + d) * arity + k with
arity 3 for the U3 family and 1 otherwise.  Random sampling uses a
counter-based Philox stream keyed by (seed, sample index), so per-sample
substreams are independent of evaluation order, and the Gaussian draw itself
is Box-Muller on that stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DensityMatrix,
    GateSpec,
    StateVector,
    _apply_1q_batch_many,
    _apply_cnot_batch,
    _apply_cz_batch,
    apply_gate,
    zero_state,
)

FAMILIES = ("RyProduct", "U3Entangled", "StronglyEntanglingRy")

EntanglerGate = tuple[str, int, int]  # (kind, control, target)
EntanglerLayer = tuple[EntanglerGate, ...]

MC_CHUNK = 1024  # fixed reduction chunk for Monte-Carlo averages


def ring_layer(n: int, kind: str = "CNOT") -> EntanglerLayer:
    """Ring of two-qubit gates, control i -> target (i+1) mod n, applied in order."""
    if n < 2:
        return ()
    return tuple((kind, i, (i + 1) % n) for i in range(n))


@dataclass(frozen=True)
class EncodingCircuitSpec:
    """Shape of an encoding circuit: family, qubit count, depth, entanglers.

    * RyProduct: D columns of Ry rotations, no entanglers, n*D features.
    * U3Entangled: D columns of U3 gates with D-1 entangling layers between
      them (default: CNOT rings), 3*n*D features.
    * StronglyEntanglingRy: D columns of Ry rotations with CNOT rings between
      them, n*D features.
    """

    family: str
    n: int
    depth: int
    entanglers: tuple[EntanglerLayer, ...] = field(default=())

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown circuit family {self.family!r}")
        if self.n < 1 or self.depth < 1:
            raise ValueError("need n >= 1 and depth >= 1")
        layers = tuple(tuple(tuple(g) for g in layer) for layer in self.entanglers)
        object.__setattr__(self, "entanglers", layers)
        if self.family == "RyProduct" and layers:
            raise ValueError("RyProduct takes no entanglers")
        if self.family in ("U3Entangled", "StronglyEntanglingRy"):
            if len(layers) != self.depth - 1:
                raise ValueError(
                    f"{self.family} needs {self.depth - 1} entangler layers, got {len(layers)}"
                )
        for layer in layers:
            for kind, control, target in layer:
                if kind not in ("CNOT", "CZ"):
                    raise ValueError(f"unknown entangler kind {kind!r}")
                if control == target:
                    raise ValueError("entangler control and target must differ")
                if not (0 <= control < self.n and 0 <= target < self.n):
                    raise ValueError("entangler wires out of range")

    @property
    def rotation_arity(self) -> int:
        return 3 if self.family == "U3Entangled" else 1

    @property
    def feature_count(self) -> int:
        return self.n * self.depth * self.rotation_arity

    def entangler_layers(self) -> tuple[EntanglerLayer, ...]:
        return self.entanglers


def ry_product(n: int, depth: int) -> EncodingCircuitSpec:
    return EncodingCircuitSpec("RyProduct", n, depth)


def u3_entangled(n: int, depth: int, entanglers=None) -> EncodingCircuitSpec:
    if entanglers is None:
        entanglers = tuple(ring_layer(n) for _ in range(depth - 1))
    return EncodingCircuitSpec("U3Entangled", n, depth, tuple(entanglers))


def strongly_entangling_ry(n: int, depth: int) -> EncodingCircuitSpec:
    return EncodingCircuitSpec(
        "StronglyEntanglingRy", n, depth, tuple(ring_layer(n) for _ in range(depth - 1))
    )


def feature_slot(spec: EncodingCircuitSpec, qubit: int, layer: int, k: int = 0) -> int:
    """Flat index of feature (qubit, layer, rotation k) under the fixed layout."""
    return (qubit * spec.depth + layer) * spec.rotation_arity + k


@dataclass(frozen=True)
class GaussianFeatureSpec:
    """Per-feature Gaussian parameters, same layout as the feature vector."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        stds = np.asarray(self.stds, dtype=float)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)
        if means.shape != stds.shape or means.ndim != 1:
            raise ValueError("means and stds must be 1-d and of equal length")
        if np.any(stds < 0):
            raise ValueError("stds must be >= 0")


# ---------------------------------------------------------------------------
# Circuit application


def _rotation_batch(amps: np.ndarray, thetas: np.ndarray, axis_kind: str,
                    wire: int, n: int) -> np.ndarray:
    """Apply per-sample RY or RZ rotations with angles `thetas` (batch,)."""
    half = thetas / 2.0
    if axis_kind == "RY":
        c, s = np.cos(half), np.sin(half)
        us = np.zeros((thetas.size, 2, 2), dtype=complex)
        us[:, 0, 0] = c
        us[:, 0, 1] = -s
        us[:, 1, 0] = s
        us[:, 1, 1] = c
    elif axis_kind == "RZ":
        e = np.exp(-1j * half)
        us = np.zeros((thetas.size, 2, 2), dtype=complex)
        us[:, 0, 0] = e
        us[:, 1, 1] = e.conj()
    else:
        raise ValueError(f"unsupported rotation {axis_kind!r}")
    return _apply_1q_batch_many(amps, us, wire, n)


def encode_batch(spec: EncodingCircuitSpec, features: np.ndarray) -> np.ndarray:
    """Encode a (batch, feature_count) array into (batch, 2^n) amplitudes."""
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or x.shape[1] != spec.feature_count:
        raise ValueError(
            f"expected feature array of shape (batch, {spec.feature_count}), got {x.shape}"
        )
    n, depth = spec.n, spec.depth
    batch = x.shape[0]
    amps = np.zeros((batch, 2 ** n), dtype=complex)
    amps[:, 0] = 1.0
    layers = spec.entangler_layers()
    for d in range(depth):
        for j in range(n):
            if spec.rotation_arity == 3:
                # U3(x1, x2, x3) = Rz(x3) Ry(x2) Rz(x1); Rz(x1) acts first
                for k, axis_kind in ((0, "RZ"), (1, "RY"), (2, "RZ")):
                    amps = _rotation_batch(amps, x[:, feature_slot(spec, j, d, k)],
                                           axis_kind, j, n)
            else:
                amps = _rotation_batch(amps, x[:, feature_slot(spec, j, d)], "RY", j, n)
        if d < depth - 1 and layers:
            for kind, control, target in layers[d]:
                if kind == "CNOT":
                    amps = _apply_cnot_batch(amps, control, target, n)
                else:
                    amps = _apply_cz_batch(amps, control, target, n)
    return amps


def encode(spec: EncodingCircuitSpec, x: np.ndarray) -> StateVector:
    """Encode one feature vector into the circuit's output pure state."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.feature_count,):
        raise ValueError(f"expected {spec.feature_count} features, got shape {x.shape}")
    return StateVector(spec.n, encode_batch(spec, x[None, :])[0])


def encoding_gates(spec: EncodingCircuitSpec, x: np.ndarray) -> list[GateSpec]:
    """The explicit gate list of the encoder; reference path for tests."""
    x = np.asarray(x, dtype=float)
    gates: list[GateSpec] = []
    layers = spec.entangler_layers()
    for d in range(spec.depth):
        for j in range(spec.n):
            if spec.rotation_arity == 3:
                angles = tuple(x[feature_slot(spec, j, d, k)] for k in range(3))
                gates.append(GateSpec("U3", (j,), angles))
            else:
                gates.append(GateSpec("RY", (j,), (x[feature_slot(spec, j, d)],)))
        if d < spec.depth - 1 and layers:
            for kind, control, target in layers[d]:
                gates.append(GateSpec(kind, (control, target)))
    return gates


# ---------------------------------------------------------------------------
# Seeded sampling


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent counter-based stream for (seed, index); order-free by design."""
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _box_muller(rng: np.random.Generator, size: int) -> np.ndarray:
    pairs = (size + 1) // 2
    u1 = rng.random(pairs)
    u2 = rng.random(pairs)
    radius = np.sqrt(-2.0 * np.log1p(-u1))  # 1-u1 in (0,1], so the log is finite
    angle = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
    return z[:size]


def sample_features(g: GaussianFeatureSpec, rng: np.random.Generator) -> np.ndarray:
    """One feature vector with independent N(mean_i, std_i^2) components."""
    return g.means + g.stds * _box_muller(rng, g.means.size)


def sample_feature_matrix(g: GaussianFeatureSpec, count: int, seed: int,
                          index_offset: int = 0) -> np.ndarray:
    """`count` feature vectors drawn from per-sample substreams (seed, offset+i)."""
    out = np.empty((count, g.means.size), dtype=float)
    for i in range(count):
        out[i] = sample_features(g, substream(seed, index_offset + i))
    return out


def monte_carlo_average(spec: EncodingCircuitSpec, g: GaussianFeatureSpec,
                        m_samples: int, seed: int) -> DensityMatrix:
    """Empirical mean of `m_samples` encoded pure-state density matrices.

    Samples are reduced in fixed chunks of 1024 combined sequentially, so the
    result is bit-identical however the per-chunk work is scheduled.
    """
    if m_samples < 1:
        raise ValueError("need at least one sample")
    if g.means.size != spec.feature_count:
        raise ValueError("feature spec does not match circuit layout")
    dim = 2 ** spec.n
    total = np.zeros((dim, dim), dtype=complex)
    for start in range(0, m_samples, MC_CHUNK):
        count = min(MC_CHUNK, m_samples - start)
        feats = sample_feature_matrix(g, count, seed, index_offset=start)
        amps = encode_batch(spec, feats)
        total += np.einsum("bi,bj->ij", amps, amps.conj())
    rho = DensityMatrix(spec.n, total / m_samples)
    rho.validate_psd(1e-8)
    return rho
