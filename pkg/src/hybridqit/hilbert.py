"""Mixed-dimension register algebra.

States live on an ordered register of subsystems with arbitrary dimensions.
Amplitudes are stored in row-major (big-endian) order: the first subsystem
in ``dims`` is the most significant digit of the flat index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ATOL_EXACT = 1e-12
ATOL_NUMERIC = 1e-10


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class HybridState:
    """Pure state over a register of subsystems.

    ``normalized=False`` marks post-selection intermediates whose norm carries
    a success probability. Use :meth:`renormalized` to drop it explicitly.
    """

    dims: tuple[int, ...]
    amps: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 2 for d in dims):
            raise ValueError(f"subsystem dimensions must be >= 2, got {dims}")
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.size != int(np.prod(dims)):
            raise ValueError(
                f"amplitude length {amps.size} does not match dims {dims}")
        norm = np.linalg.norm(amps)
        if self.normalized:
            if abs(norm - 1.0) > ATOL_EXACT:
                raise ValueError(f"state is not normalized (norm={norm!r})")
        elif not 0.0 < norm <= 1.0 + ATOL_EXACT:
            raise ValueError(f"unnormalized state needs 0 < norm <= 1, got {norm!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @property
    def size(self) -> int:
        return self.amps.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per subsystem."""
        return self.amps.reshape(self.dims)

    def renormalized(self) -> "HybridState":
        return HybridState(self.dims, self.amps / self.norm)

    def overlap(self, other: "HybridState") -> complex:
        if self.dims != other.dims:
            raise ValueError(f"dims differ: {self.dims} vs {other.dims}")
        return complex(np.vdot(self.amps, other.amps))

    def equal_up_to_phase(self, other: "HybridState", atol=ATOL_NUMERIC) -> bool:
        if self.dims != other.dims:
            return False
        ov = abs(self.overlap(other))
        return abs(ov - self.norm * other.norm) <= atol and \
            abs(self.norm - other.norm) <= atol


@dataclass(frozen=True)
class DensityMatrix:
    dims: tuple[int, ...]
    mat: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        n = int(np.prod(dims))
        mat = np.array(self.mat, dtype=complex)
        if mat.shape != (n, n):
            raise ValueError(f"matrix shape {mat.shape} does not match dims {dims}")
        if not np.allclose(mat, mat.conj().T, atol=ATOL_NUMERIC):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > ATOL_NUMERIC:
            raise ValueError(f"density matrix trace is {tr!r}, expected 1")
        if np.linalg.eigvalsh(mat).min() < -1e-9:
            raise ValueError("density matrix has negative eigenvalues")
        mat.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", mat)

    @classmethod
    def from_state(cls, state: HybridState) -> "DensityMatrix":
        v = state.amps / state.norm
        return cls(state.dims, np.outer(v, v.conj()))

    @classmethod
    def from_ensemble(cls, dims, weights, vectors) -> "DensityMatrix":
        """Normalized mixture of (possibly unnormalized) vectors.

        Each vector contributes ``weight * |v><v|``; the sum is divided by
        its trace.
        """
        n = int(np.prod(dims))
        mat = np.zeros((n, n), dtype=complex)
        for w, v in zip(weights, vectors):
            v = np.asarray(v, dtype=complex).reshape(-1)
            mat += w * np.outer(v, v.conj())
        tr = np.trace(mat).real
        if tr <= 0:
            raise ValueError("ensemble has zero total weight")
        return cls(dims, mat / tr)

    def purity(self) -> float:
        return float(np.trace(self.mat @ self.mat).real)


@dataclass(frozen=True)
class GateMatrix:
    dims: tuple[int, ...]
    mat: np.ndarray
    unitary: bool = True
    name: str = field(default="U", compare=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        n = int(np.prod(dims))
        mat = np.array(self.mat, dtype=complex)
        if mat.shape != (n, n):
            raise ValueError(f"gate shape {mat.shape} does not match dims {dims}")
        if self.unitary and not np.allclose(
                mat.conj().T @ mat, np.eye(n), atol=ATOL_EXACT, rtol=0):
            raise ValueError(f"gate {self.name!r} is not unitary")
        mat.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", mat)

    def __matmul__(self, other: "GateMatrix") -> "GateMatrix":
        if self.dims != other.dims:
            raise ValueError("cannot compose gates with different dims")
        return GateMatrix(self.dims, self.mat @ other.mat,
                          self.unitary and other.unitary,
                          name=f"{self.name}*{other.name}")

    def dagger(self) -> "GateMatrix":
        return GateMatrix(self.dims, self.mat.conj().T, self.unitary,
                          name=f"{self.name}^dag")


@dataclass(frozen=True)
class MeasurementRecord:
    outcome: int
    probability: float
    post_state: HybridState
    subsystem: int = -1
    probabilities: tuple[float, ...] = ()


# ---------------------------------------------------------------- states

def make_state(dims: Sequence[int], amps) -> HybridState:
    """Build a normalized state, rescaling ``amps`` to unit norm."""
    dims = tuple(dims)
    amps = np.asarray(amps, dtype=complex).reshape(-1)
    if amps.size != int(np.prod(dims)):
        raise ValueError(f"expected {int(np.prod(dims))} amplitudes for dims "
                         f"{dims}, got {amps.size}")
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return HybridState(dims, amps / norm)


def basis_state(dims: Sequence[int], digits: Sequence[int]) -> HybridState:
    dims = tuple(dims)
    amps = np.zeros(int(np.prod(dims)), dtype=complex)
    amps[np.ravel_multi_index(tuple(digits), dims)] = 1.0
    return HybridState(dims, amps)


def plus_state() -> HybridState:
    return HybridState((2,), np.array([1, 1]) / np.sqrt(2))


def tensor(*states: HybridState) -> HybridState:
    """Kronecker product of states; dims are concatenated."""
    if not states:
        raise ValueError("tensor needs at least one state")
    dims: tuple[int, ...] = ()
    amps = np.ones(1, dtype=complex)
    normalized = True
    for s in states:
        dims += s.dims
        amps = np.kron(amps, s.amps)
        normalized = normalized and s.normalized
    if not normalized:
        return HybridState(dims, amps, normalized=False)
    return HybridState(dims, amps / np.linalg.norm(amps))


def random_state(dims: Sequence[int], rng=None) -> HybridState:
    """Haar-random pure state."""
    rng = _as_rng(rng)
    n = int(np.prod(dims))
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return make_state(dims, v)


def random_unitary(n: int, rng=None) -> np.ndarray:
    """Haar-random unitary via QR with phase fix (Mezzadri)."""
    rng = _as_rng(rng)
    z = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def permute(state: HybridState, order: Sequence[int]) -> HybridState:
    """Reorder subsystems; ``order[k]`` is the old index placed at slot k."""
    order = list(order)
    if sorted(order) != list(range(len(state.dims))):
        raise ValueError(f"{order} is not a permutation of the register")
    t = np.transpose(state.tensor(), order)
    return HybridState(tuple(state.dims[i] for i in order), t.reshape(-1),
                       normalized=state.normalized)


def embed(state: HybridState, subsystem: int, new_dim: int,
          offset: int = 0) -> HybridState:
    """Embed one subsystem into a larger space at levels offset..offset+d-1."""
    d = state.dims[subsystem]
    if offset + d > new_dim:
        raise ValueError("embedding does not fit in the new dimension")
    t = state.tensor()
    pad = [(0, 0)] * t.ndim
    pad[subsystem] = (offset, new_dim - d - offset)
    dims = list(state.dims)
    dims[subsystem] = new_dim
    return HybridState(tuple(dims), np.pad(t, pad).reshape(-1),
                       normalized=state.normalized)


def restrict(state: HybridState, subsystem: int, levels: Sequence[int]) -> HybridState:
    """Keep only the listed levels of one subsystem (no renormalization).

    Raises if the discarded levels carry amplitude, since that would silently
    lose probability.
    """
    levels = list(levels)
    t = state.tensor()
    kept = np.take(t, levels, axis=subsystem)
    if abs(np.linalg.norm(kept) - state.norm) > ATOL_NUMERIC:
        raise ValueError("state has support outside the retained levels")
    dims = list(state.dims)
    dims[subsystem] = len(levels)
    return HybridState(tuple(dims), kept.reshape(-1), normalized=state.normalized)


def project_out(state: HybridState, subsystem: int, vector) -> HybridState:
    """Contract one subsystem with <vector| and drop it.

    The result is unnormalized; its squared norm is the branch probability.
    """
    vector = np.asarray(vector, dtype=complex)
    t = np.tensordot(vector.conj(), state.tensor(), axes=([0], [subsystem]))
    dims = state.dims[:subsystem] + state.dims[subsystem + 1:]
    return HybridState(dims, t.reshape(-1), normalized=False)


def insert(state: HybridState, position: int, sub: HybridState) -> HybridState:
    """Tensor a single-subsystem state into the register at ``position``."""
    if len(sub.dims) != 1:
        raise ValueError("insert expects a single-subsystem state")
    joint = tensor(sub, state)
    order = list(range(1, len(joint.dims)))
    order.insert(position, 0)
    return permute(joint, order)


# ----------------------------------------------------------------- gates

def _perm_gate(perm: Sequence[int], name: str) -> GateMatrix:
    n = len(perm)
    m = np.zeros((n, n))
    for src, dst in enumerate(perm):
        m[dst, src] = 1.0
    return GateMatrix((n,), m, name=name)


def gate_i(d: int) -> GateMatrix:
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return GateMatrix((d,), np.eye(d), name=f"I{d}")


def gate_x() -> GateMatrix:
    return _perm_gate([1, 0], "X")


def gate_z() -> GateMatrix:
    return GateMatrix((2,), np.diag([1.0, -1.0]), name="Z")


def gate_h() -> GateMatrix:
    return GateMatrix((2,), np.array([[1, 1], [1, -1]]) / np.sqrt(2), name="H")


def gate_x2d(d: int) -> GateMatrix:
    """Swap |k> and |k+d> for k < d on a 2d-level system."""
    if d < 1:
        raise ValueError("d must be >= 1")
    perm = [(k + d) % (2 * d) for k in range(2 * d)]
    return _perm_gate(perm, f"X{2 * d}")


def gate_z2d(d: int) -> GateMatrix:
    """Identity on the lower block, -1 on the upper block."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return GateMatrix((2 * d,), np.diag([1.0] * d + [-1.0] * d), name=f"Z{2 * d}")


def gate_x4() -> GateMatrix:
    return GateMatrix((4,), gate_x2d(2).mat, name="X4")


def gate_z4() -> GateMatrix:
    return GateMatrix((4,), gate_z2d(2).mat, name="Z4")


def gate_x02() -> GateMatrix:
    return _perm_gate([2, 1, 0, 3], "X02")


def gate_x13() -> GateMatrix:
    return _perm_gate([0, 3, 2, 1], "X13")


def controlled(u: GateMatrix) -> GateMatrix:
    """diag(I, U) with a qubit control as the first subsystem."""
    if not u.unitary:
        raise ValueError("controlled() requires a unitary target gate")
    n = u.mat.shape[0]
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    m[:n, :n] = np.eye(n)
    m[n:, n:] = u.mat
    return GateMatrix((2,) + u.dims, m, name=f"C{u.name}")


def kron_gates(*gates: GateMatrix) -> GateMatrix:
    m = np.ones((1, 1), dtype=complex)
    dims: tuple[int, ...] = ()
    for g in gates:
        m = np.kron(m, g.mat)
        dims += g.dims
    return GateMatrix(dims, m, all(g.unitary for g in gates),
                      name="(x)".join(g.name for g in gates))


def _apply_matrix(t: np.ndarray, mat: np.ndarray, targets, out_dims=None):
    """Contract ``mat`` into the axes ``targets`` of tensor ``t``."""
    nt = len(targets)
    rest = [i for i in range(t.ndim) if i not in targets]
    moved = np.transpose(t, list(targets) + rest)
    rest_shape = moved.shape[nt:]
    flat = moved.reshape(-1, int(np.prod(rest_shape, dtype=int)))
    out = mat @ flat
    if out_dims is None:
        out_dims = moved.shape[:nt]
    out = out.reshape(tuple(out_dims) + rest_shape)
    inv = np.argsort(list(targets) + rest)
    return np.transpose(out, inv)


def apply(state: HybridState, g: GateMatrix, targets: Sequence[int]) -> HybridState:
    """Apply ``g`` to the listed subsystems (in the order of ``g.dims``)."""
    targets = [int(i) for i in targets]
    if len(set(targets)) != len(targets):
        raise ValueError(f"target indices must be distinct, got {targets}")
    for i in targets:
        if not 0 <= i < len(state.dims):
            raise IndexError(f"subsystem index {i} out of range")
    if tuple(state.dims[i] for i in targets) != g.dims:
        raise ValueError(f"gate dims {g.dims} do not match target dims "
                         f"{tuple(state.dims[i] for i in targets)}")
    out = _apply_matrix(state.tensor(), g.mat, targets)
    normalized = state.normalized and g.unitary
    return HybridState(state.dims, out.reshape(-1), normalized=normalized)


# ---------------------------------------------------------- measurement

def _check_basis(basis, d) -> np.ndarray:
    b = np.array([np.asarray(v, dtype=complex) for v in basis])
    if b.shape != (d, d):
        raise ValueError(f"basis must contain {d} vectors of length {d}")
    if not np.allclose(b.conj() @ b.T, np.eye(d), atol=ATOL_NUMERIC):
        raise ValueError("measurement basis is not orthonormal")
    return b


def _choose(probs, rng, force):
    probs = np.asarray(probs, dtype=float)
    if force is not None:
        if probs[force] <= 0:
            raise ValueError(f"forced outcome {force} has zero probability")
        return int(force)
    return int(rng.choice(len(probs), p=probs / probs.sum()))


def measure_basis(state: HybridState, subsystem: int, basis, rng_seed=None,
                  force=None) -> MeasurementRecord:
    """Projective measurement of one subsystem in an orthonormal basis.

    The outcome label is the index of the basis vector. ``force`` selects a
    branch instead of sampling (used for exhaustive branch checks).
    """
    d = state.dims[subsystem]
    b = _check_basis(basis, d)
    t = state.tensor() / state.norm
    # rows: amplitude of each basis outcome times the remaining subsystems
    coeffs = np.tensordot(b.conj(), t, axes=([1], [subsystem]))
    probs = [float(np.linalg.norm(c) ** 2) for c in coeffs]
    k = _choose(probs, _as_rng(rng_seed), force)
    rest = coeffs[k] / np.sqrt(probs[k])
    post = np.moveaxis(np.multiply.outer(b[k], rest), 0, subsystem)
    return MeasurementRecord(k, probs[k], HybridState(state.dims, post.reshape(-1)),
                             subsystem, tuple(probs))


def measure_subspace(state: HybridState, subsystem: int, partition,
                     rng_seed=None, force=None) -> MeasurementRecord:
    """Measure which block of ``partition`` a subsystem lies in.

    Coherence inside the selected block is kept.
    """
    d = state.dims[subsystem]
    blocks = [sorted(int(i) for i in blk) for blk in partition]
    flat = sorted(i for blk in blocks for i in blk)
    if flat != list(range(d)) or any(not blk for blk in blocks):
        raise ValueError(f"{partition} is not a partition of range({d})")
    psi = state.renormalized() if not state.normalized else state
    t = psi.tensor()
    projected = []
    for blk in blocks:
        mask = np.zeros(d, dtype=bool)
        mask[blk] = True
        shape = [1] * t.ndim
        shape[subsystem] = d
        projected.append(t * mask.reshape(shape))
    probs = [float(np.linalg.norm(p) ** 2) for p in projected]
    k = _choose(probs, _as_rng(rng_seed), force)
    post = projected[k].reshape(-1) / np.sqrt(probs[k])
    return MeasurementRecord(k, probs[k], HybridState(state.dims, post),
                             subsystem, tuple(probs))


# ------------------------------------------------------ mixed states

def fidelity(rho, psi: HybridState) -> float:
    """Tr(rho |psi><psi|) for a density matrix (or pure state) rho."""
    if isinstance(rho, HybridState):
        rho = DensityMatrix.from_state(rho)
    if tuple(rho.dims) != tuple(psi.dims):
        raise ValueError(f"dims differ: {rho.dims} vs {psi.dims}")
    v = psi.amps / psi.norm
    return float(np.real(np.vdot(v, rho.mat @ v)))


def state_fidelity(a: HybridState, b: HybridState) -> float:
    return abs(a.overlap(b)) ** 2 / (a.norm ** 2 * b.norm ** 2)


def partial_trace(rho, keep: Sequence[int]) -> DensityMatrix:
    if isinstance(rho, HybridState):
        rho = DensityMatrix.from_state(rho)
    keep = sorted(int(k) for k in keep)
    n = len(rho.dims)
    if any(not 0 <= k < n for k in keep) or len(set(keep)) != len(keep):
        raise IndexError(f"invalid subsystem indices {keep}")
    t = rho.mat.reshape(rho.dims * 2)
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[k] for k in keep) + "".join(col[k] for k in keep)
    red = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    kd = tuple(rho.dims[k] for k in keep)
    m = int(np.prod(kd))
    return DensityMatrix(kd, red.reshape(m, m))


# ------------------------------------------------ qubit-qudit isomorphism

def canonical_isomorphism(state: HybridState, pair: tuple[int, int]) -> HybridState:
    """Fuse a (qubit, d-level) pair into one 2d-level subsystem.

    |x>|i> -> |i + x*d>. The fused subsystem takes the qudit's slot and the
    qubit slot is removed. Only amplitudes are permuted.
    """
    q, k = pair
    if state.dims[q] != 2:
        raise ValueError(f"subsystem {q} is not a qubit")
    if q == k:
        raise ValueError("pair must name two different subsystems")
    d = state.dims[k]
    t = state.tensor()
    # move qubit axis directly in front of the qudit axis, then flatten both
    others = [i for i in range(t.ndim) if i not in (q, k)]
    pos = sum(1 for i in others if i < k)
    order = others[:pos] + [q, k] + others[pos:]
    t = np.transpose(t, order)
    dims = [state.dims[i] for i in others]
    dims.insert(pos, 2 * d)
    return HybridState(tuple(dims), t.reshape(-1), normalized=state.normalized)


def canonical_isomorphism_inverse(state: HybridState, index: int) -> HybridState:
    """Split a 2d-level subsystem into (qubit, d-level) at the same position."""
    D = state.dims[index]
    if D % 2:
        raise ValueError(f"subsystem {index} has odd dimension {D}")
    dims = list(state.dims)
    dims[index:index + 1] = [2, D // 2]
    return HybridState(tuple(dims), state.amps, normalized=state.normalized)
