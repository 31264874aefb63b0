"""Exact Gaussian-averaged encoded states and closed-form divergence bounds.

A density matrix is represented by its real coefficients over tensor products
of Pauli matrices, with the per-qubit alphabet ordered (I, Z, X, Y) and qubit
0 as the most significant digit of the string index.  Averaging a rotation
gate over a Gaussian-distributed angle acts on one qubit's coefficients as a
4x4 "transfer" matrix (row-vector convention: pi_out = pi_in @ T), built from
E[cos x] = exp(-sigma^2/2) cos(mu) and E[sin x] = exp(-sigma^2/2) sin(mu) for
x ~ N(mu, sigma^2).  Entangling gates permute the coefficients exactly, up to
signs, which are carried here (they matter for the exact average state even
though norm-based bound arguments may discard them).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .core import DensityMatrix, PAULI_BY_LETTER, hermitian_eigen
from .encoding import EncodingCircuitSpec, GaussianFeatureSpec, feature_slot

PAULI_ORDER = "IZXY"
_PAULI_STACK = np.stack([PAULI_BY_LETTER[c] for c in PAULI_ORDER])  # (4, 2, 2)


@dataclass(frozen=True)
class PauliVector:
    """Real coefficients of a Hermitian matrix over (I,Z,X,Y)^n products."""

    n: int
    coeffs: np.ndarray  # flat, length 4^n

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", c)
        if c.shape != (4 ** self.n,):
            raise ValueError(f"expected {4 ** self.n} coefficients, got {c.shape}")


def pauli_vector_of(rho: DensityMatrix) -> PauliVector:
    """Coefficients coeffs[s] = Tr(P_s rho) / 2^n; inverse of `density_of`."""
    n = rho.n
    # view rho as a tensor with per-qubit (row, col) index pairs adjacent
    t = rho.matrix.reshape((2, 2) * n)
    order = [i for j in range(n) for i in (j, n + j)]
    t = np.transpose(t, order)
    for _ in range(n):
        # contract one qubit's (row, col) pair against the Pauli stack
        t = np.tensordot(t, _PAULI_STACK, axes=([0, 1], [2, 1])) / 2.0
    coeffs = t.reshape(-1)
    if np.max(np.abs(coeffs.imag)) > 1e-10:
        raise ValueError("non-Hermitian input: Pauli coefficients not real")
    return PauliVector(n, coeffs.real.copy())


def density_of(pv: PauliVector) -> DensityMatrix:
    """Reassemble sum_s coeffs[s] * P_s as a dense matrix."""
    n = pv.n
    t = pv.coeffs.reshape((4,) * n).astype(complex)
    for _ in range(n):
        t = np.tensordot(t, _PAULI_STACK, axes=([0], [0]))
    # axes are now (row_0, col_0, ..., row_{n-1}, col_{n-1})
    rows = list(range(0, 2 * n, 2))
    cols = list(range(1, 2 * n, 2))
    m = np.transpose(t, rows + cols).reshape(2 ** n, 2 ** n)
    return DensityMatrix(n, m)


# ---------------------------------------------------------------------------
# Averaged rotation transfer matrices (4x4 blocks on one qubit's coefficients)


def _rz_transfer(mu: float, sigma: float) -> np.ndarray:
    a = math.exp(-sigma * sigma / 2.0)
    c, s = a * math.cos(mu), a * math.sin(mu)
    return np.array(
        [[1, 0, 0, 0],
         [0, 1, 0, 0],
         [0, 0, c, s],
         [0, 0, -s, c]], dtype=float)


def _ry_transfer(mu: float, sigma: float) -> np.ndarray:
    a = math.exp(-sigma * sigma / 2.0)
    c, s = a * math.cos(mu), a * math.sin(mu)
    return np.array(
        [[1, 0, 0, 0],
         [0, c, s, 0],
         [0, -s, c, 0],
         [0, 0, 0, 1]], dtype=float)


def averaged_rotation_transfer(mu, sigma, kind: str) -> np.ndarray:
    """4x4 map on (I,Z,X,Y) coefficients of a Gaussian-averaged rotation.

    kind "RY" takes scalar (mu, sigma); kind "U3-ZYZ" takes length-3 arrays
    for the Rz(x1), Ry(x2), Rz(x3) factors, combined in application order.
    """
    if kind == "RY":
        mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
        sg_arr = np.atleast_1d(np.asarray(sigma, dtype=float))
        if mu_arr.shape != (1,) or sg_arr.shape != (1,):
            raise ValueError("RY takes one mean and one std")
        if sg_arr[0] < 0:
            raise ValueError("negative std")
        return _ry_transfer(mu_arr[0], sg_arr[0])
    if kind == "U3-ZYZ":
        mu_arr = np.asarray(mu, dtype=float)
        sg_arr = np.asarray(sigma, dtype=float)
        if mu_arr.shape != (3,) or sg_arr.shape != (3,):
            raise ValueError("U3-ZYZ takes three means and three stds")
        if np.any(sg_arr < 0):
            raise ValueError("negative std")
        return (_rz_transfer(mu_arr[0], sg_arr[0])
                @ _ry_transfer(mu_arr[1], sg_arr[1])
                @ _rz_transfer(mu_arr[2], sg_arr[2]))
    raise ValueError(f"unknown rotation kind {kind!r}")


# ---------------------------------------------------------------------------
# Entangler action: exact signed permutation of Pauli-string coefficients


@dataclass(frozen=True)
class SignedPermutation:
    """Bijection s -> perm[s] with signs, acting as out[perm[s]] = signs[s] * in[s]."""

    perm: np.ndarray
    signs: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.int64)
        signs = np.asarray(self.signs, dtype=np.int8)
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "signs", signs)
        if perm.shape != signs.shape or perm.ndim != 1:
            raise ValueError("perm and signs must be 1-d and of equal length")
        if not np.all(np.sort(perm) == np.arange(perm.size)):
            raise ValueError("perm is not a bijection")
        if not np.all(np.abs(signs) == 1):
            raise ValueError("signs must be +-1")

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.empty_like(coeffs)
        out[self.perm] = self.signs * coeffs
        return out

    def then(self, later: "SignedPermutation") -> "SignedPermutation":
        """Composition: apply self first, then `later`."""
        return SignedPermutation(later.perm[self.perm], self.signs * later.signs[self.perm])


def identity_permutation(n: int) -> SignedPermutation:
    size = 4 ** n
    return SignedPermutation(np.arange(size), np.ones(size, dtype=np.int8))


@lru_cache(maxsize=None)
def _pair_map(kind: str) -> tuple[np.ndarray, np.ndarray]:
    """(perm16, sign16) for conjugating the 16 two-qubit Pauli products.

    Index is 4*a + b over the (I,Z,X,Y) digits of (control, target); computed
    by brute-force 4x4 conjugation, so signs are exact.
    """
    if kind == "CNOT":
        g = np.array([[1, 0, 0, 0],
                      [0, 1, 0, 0],
                      [0, 0, 0, 1],
                      [0, 0, 1, 0]], dtype=complex)
    elif kind == "CZ":
        g = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
    else:
        raise ValueError(f"unknown entangler kind {kind!r}")
    products = [np.kron(_PAULI_STACK[a], _PAULI_STACK[b]) for a in range(4) for b in range(4)]
    perm = np.zeros(16, dtype=np.int64)
    signs = np.zeros(16, dtype=np.int8)
    for src, p in enumerate(products):
        conj = g @ p @ g.conj().T
        for dst, q in enumerate(products):
            overlap = np.trace(q.conj().T @ conj).real / 4.0
            if abs(abs(overlap) - 1.0) < 1e-12:
                perm[src] = dst
                signs[src] = 1 if overlap > 0 else -1
                break
        else:
            raise AssertionError("conjugated Pauli product did not map to a Pauli product")
    perm.setflags(write=False)
    signs.setflags(write=False)
    return perm, signs


def entangler_transfer(layout, n: int) -> SignedPermutation:
    """Signed coefficient permutation of one entangling layer.

    `layout` is a sequence of (kind, control, target) with kind in
    {"CNOT", "CZ"}; gates are applied in list order (layers such as CNOT
    rings revisit wires, so order matters and is part of the layer spec).
    """
    total = identity_permutation(n)
    size = 4 ** n
    idx = np.arange(size)
    for kind, control, target in layout:
        if control == target:
            raise ValueError("entangler control and target must differ")
        if not (0 <= control < n and 0 <= target < n):
            raise ValueError(f"entangler wires ({control},{target}) out of range for n={n}")
        pair_perm, pair_signs = _pair_map(kind)
        shift_c = 4 ** (n - 1 - control)
        shift_t = 4 ** (n - 1 - target)
        dc = (idx // shift_c) % 4
        dt = (idx // shift_t) % 4
        pair = 4 * dc + dt
        mapped = pair_perm[pair]
        new_idx = idx + (mapped // 4 - dc) * shift_c + (mapped % 4 - dt) * shift_t
        gate = SignedPermutation(new_idx, pair_signs[pair])
        total = total.then(gate)
    return total


# ---------------------------------------------------------------------------
# Exact average encoded state


def _initial_coeffs(n: int) -> np.ndarray:
    single = np.array([0.5, 0.5, 0.0, 0.0])
    return reduce(np.multiply.outer, [single] * n).reshape(-1) if n > 1 else single.copy()


def _apply_transfer_axis(coeffs: np.ndarray, t4: np.ndarray, qubit: int, n: int) -> np.ndarray:
    c = coeffs.reshape((4,) * n)
    # row-vector convention: out_b = sum_a in_a T[a, b]
    c = np.tensordot(c, t4, axes=([qubit], [0]))
    return np.moveaxis(c, -1, qubit).reshape(-1)


def analytic_average_state(
    spec: EncodingCircuitSpec,
    g: GaussianFeatureSpec,
    drop_entangler_signs: bool = False,
) -> DensityMatrix:
    """Exact E[rho(x)] for independently Gaussian features.

    Starts from the all-zeros state's Pauli coefficients, applies a 4x4
    averaged transfer per rotation column and qubit, and the exact signed
    permutation per entangling layer.  `drop_entangler_signs` strips the
    permutation signs (only useful to mimic norm-style bound arguments; the
    returned matrix is then no longer the true average).
    """
    if g.means.size != spec.feature_count:
        raise ValueError(
            f"feature spec of length {g.means.size} does not match circuit ({spec.feature_count})"
        )
    n, depth = spec.n, spec.depth
    coeffs = _initial_coeffs(n)
    layers = spec.entangler_layers()
    per_gate = 3 if spec.family == "U3Entangled" else 1
    for d in range(depth):
        for j in range(n):
            slots = [feature_slot(spec, j, d, k) for k in range(per_gate)]
            if per_gate == 3:
                t4 = averaged_rotation_transfer(g.means[slots], g.stds[slots], "U3-ZYZ")
            else:
                t4 = averaged_rotation_transfer(g.means[slots[0]], g.stds[slots[0]], "RY")
            coeffs = _apply_transfer_axis(coeffs, t4, j, n)
        if d < depth - 1 and layers:
            sp = entangler_transfer(layers[d], n)
            if drop_entangler_signs:
                sp = SignedPermutation(sp.perm, np.abs(sp.signs))
            coeffs = sp.apply(coeffs)
    rho = density_of(PauliVector(n, coeffs))
    eigenvalues, _ = hermitian_eigen(rho.matrix)
    if eigenvalues[-1] < -1e-9:
        raise RuntimeError(
            f"averaged state has eigenvalue {eigenvalues[-1]} below -1e-9; "
            "this indicates an implementation bug"
        )
    return rho


# ---------------------------------------------------------------------------
# Closed-form bounds


@dataclass(frozen=True)
class BoundQuery:
    """Inputs for the divergence bounds: qubit count, depth, minimal feature std.

    `eps` is only needed for depth-threshold queries.
    """

    n: int
    sigma: float
    depth: int | None = None
    eps: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.depth is not None and self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.eps is not None and not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")

    def _need_depth(self) -> int:
        if self.depth is None:
            raise ValueError("this bound needs a depth")
        return self.depth

    def _need_eps(self) -> float:
        if self.eps is None:
            raise ValueError("threshold queries need eps")
        return self.eps


def bound_warmup(q: BoundQuery) -> float:
    """Divergence bound (bits) for product Ry encoders: n*log2(1 + e^{-D sigma^2})."""
    d = q._need_depth()
    return q.n * math.log2(1.0 + math.exp(-d * q.sigma * q.sigma))


def bound_general(q: BoundQuery) -> float:
    """Divergence bound (bits) for entangled U3 encoders: log2(1 + (2^n-1) e^{-D sigma^2})."""
    d = q._need_depth()
    return math.log2(1.0 + (2.0 ** q.n - 1.0) * math.exp(-d * q.sigma * q.sigma))


def bound_ry_layered(q: BoundQuery) -> float:
    """Weakened variant for Ry-only layered encoders, with floor(D/2) in the exponent."""
    d = q._need_depth()
    return math.log2(1.0 + (2.0 ** q.n - 1.0) * math.exp(-(d // 2) * q.sigma * q.sigma))


def depth_threshold(q: BoundQuery) -> int:
    """Smallest depth guaranteeing expectation deviations <= eps (high probability).

    Ceiling of ((n+4) ln 2 + 2 ln(1/eps)) / sigma^2, never below 1.
    """
    eps = q._need_eps()
    value = ((q.n + 4) * math.log(2.0) + 2.0 * math.log(1.0 / eps)) / (q.sigma * q.sigma)
    nearest = round(value)
    d = nearest if abs(value - nearest) < 1e-9 else math.ceil(value)
    return max(1, int(d))
