"""Information-transfer circuits between qubits and qudits.

Every protocol entangles a qubit with a qudit through a controlled permutation
(CX, CX4 or CX2d), measures one side, and completes either by a classically
controlled correction (feed-forward) or by keeping one outcome
(post-selection).

Outcome labels: ``0`` is the lower block (levels ``0..d-1``) of a subspace
measurement, or ``+`` of a ``|+>/|->`` measurement; ``1`` is the upper block,
or ``-``. Outcome 0 never needs a correction; outcome 1 takes the
non-trivial member of the correction pair. This is the only assignment for
which both branches land on the transferred state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import hilbert as hb
from .hilbert import HybridState, MeasurementRecord

PM_BASIS = (np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2))
Z_BASIS = (np.array([1, 0]), np.array([0, 1]))


@dataclass(frozen=True)
class FeedForward:
    pass


@dataclass(frozen=True)
class PostSelect:
    """Keep only the listed outcomes; no correction is applied."""

    kept: tuple[int, ...] = (0,)

    def __post_init__(self):
        kept = tuple(int(k) for k in self.kept)
        if not kept or any(k not in (0, 1) for k in kept):
            raise ValueError(f"kept outcomes must be a nonempty subset of (0, 1), got {kept}")
        object.__setattr__(self, "kept", kept)


CompletionMode = FeedForward | PostSelect


def as_mode(mode) -> CompletionMode:
    if mode is None:
        return FeedForward()
    if isinstance(mode, (FeedForward, PostSelect)):
        return mode
    if isinstance(mode, str):
        key = mode.lower().replace("-", "").replace("_", "")
        if key == "feedforward":
            return FeedForward()
        if key == "postselect":
            return PostSelect()
    raise ValueError(f"unknown completion mode {mode!r}")


@dataclass(frozen=True)
class ProtocolResult:
    final_state: HybridState
    outcome_log: list[MeasurementRecord] = field(default_factory=list)
    corrections_applied: list[tuple[str, int]] = field(default_factory=list)
    success_probability: float = 1.0
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dims": list(self.final_state.dims),
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.final_state.amps],
            "outcomes": [{"subsystem": r.subsystem, "outcome": r.outcome,
                          "probability": r.probability} for r in self.outcome_log],
            "corrections": [[name, idx] for name, idx in self.corrections_applied],
            "success_probability": self.success_probability,
            "notes": self.notes,
        }


# ------------------------------------------------------------- helpers

def _check_pure(state, what="input"):
    if isinstance(state, hb.DensityMatrix):
        raise TypeError(f"{what} must be a pure HybridState; mixed inputs are not supported")
    if not state.normalized:
        raise ValueError(f"{what} must be normalized")


def _measure(fn, state, sub, arg, mode, rng, force):
    """Measure and return ``(record, success_probability)``.

    In post-selection mode the outcome is drawn among the kept labels only,
    and the success probability is their total Born weight.
    """
    rec = fn(state, sub, arg, rng_seed=rng, force=force)
    if isinstance(mode, FeedForward):
        return rec, 1.0
    kept = list(mode.kept)
    probs = np.array(rec.probabilities)
    p_keep = float(probs[kept].sum())
    if rec.outcome not in kept:
        if force is not None:
            raise ValueError(f"forced outcome {force} is not among kept {mode.kept}")
        choice = kept[0] if len(kept) == 1 else int(rng.choice(kept, p=probs[kept] / p_keep))
        rec = fn(state, sub, arg, force=choice)
    return rec, p_keep


def _drop_measured(post: HybridState, sub: int, vector) -> HybridState:
    return hb.project_out(post, sub, vector).renormalized()


# ------------------------------------------------ register-level cores

def merge_in_register(state: HybridState, qubit: int, qudit: int, mode=None,
                      rng=None, force=None):
    """Merge(2, d -> 2d) on two subsystems of a larger register.

    The qubit slot is removed; the qudit slot grows to 2d levels and holds
    ``|i + x*d>`` for qubit value ``x``. Returns ``(state, record,
    corrections, success_probability)``.
    """
    mode = as_mode(mode)
    rng = hb._as_rng(rng)
    if state.dims[qubit] != 2:
        raise ValueError(f"subsystem {qubit} is not a qubit")
    d = state.dims[qudit]
    if d < 2:
        raise ValueError("qudit dimension must be >= 2")
    s = hb.embed(state, qudit, 2 * d)
    s = hb.apply(s, hb.controlled(hb.gate_x2d(d)), [qubit, qudit])
    rec, p_success = _measure(hb.measure_basis, s, qubit, PM_BASIS, mode, rng, force)
    out = _drop_measured(rec.post_state, qubit, PM_BASIS[rec.outcome])
    new_qudit = qudit - 1 if qubit < qudit else qudit
    corrections = []
    if isinstance(mode, FeedForward):
        if rec.outcome == 1:
            out = hb.apply(out, hb.gate_z2d(d), [new_qudit])
            corrections.append((f"Z{2 * d}", new_qudit))
        else:
            corrections.append((f"I{2 * d}", new_qudit))
    return out, rec, corrections, p_success


def split_in_register(state: HybridState, qudit: int, mode=None, rng=None,
                      force=None, compress=True):
    """Split(2d -> 2, d) on one subsystem of a larger register.

    A fresh |+> ancilla is inserted directly before ``qudit``. With
    ``compress`` the qudit is cut down to its lower d levels afterwards
    (in post-selection mode this requires the kept outcome to be 0).
    """
    mode = as_mode(mode)
    rng = hb._as_rng(rng)
    D = state.dims[qudit]
    if D % 2:
        raise ValueError(f"split needs an even dimension, got {D}")
    d = D // 2
    s = hb.insert(state, qudit, hb.plus_state())
    a, b = qudit, qudit + 1
    s = hb.apply(s, hb.controlled(hb.gate_x2d(d)), [a, b])
    partition = [range(d), range(d, 2 * d)]
    rec, p_success = _measure(hb.measure_subspace, s, b, partition, mode, rng, force)
    out = rec.post_state
    corrections = []
    if isinstance(mode, FeedForward):
        if rec.outcome == 1:
            out = hb.apply(out, hb.kron_gates(hb.gate_x(), hb.gate_x2d(d)), [a, b])
            corrections.append((f"X(x)X{2 * d}", a))
        else:
            corrections.append((f"I(x)I{2 * d}", a))
    if compress:
        levels = range(d) if (isinstance(mode, FeedForward) or rec.outcome == 0) \
            else range(d, 2 * d)
        out = hb.restrict(out, b, levels)
    return out, rec, corrections, p_success


# ------------------------------------------------------------ protocols

def qit_2to2(b_state: HybridState, mode=None, seed=None, force=None) -> ProtocolResult:
    """Move a qubit's state onto a fresh |+> qubit A via CX and a Z measurement."""
    _check_pure(b_state)
    if b_state.dims != (2,):
        raise ValueError(f"qit_2to2 expects a qubit, got dims {b_state.dims}")
    mode = as_mode(mode)
    rng = hb._as_rng(seed)
    s = hb.tensor(hb.plus_state(), b_state)
    s = hb.apply(s, hb.controlled(hb.gate_x()), [0, 1])
    rec, p = _measure(hb.measure_basis, s, 1, Z_BASIS, mode, rng, force)
    a = _drop_measured(rec.post_state, 1, Z_BASIS[rec.outcome])
    corr = []
    if isinstance(mode, FeedForward):
        if rec.outcome == 1:
            a = hb.apply(a, hb.gate_x(), [0])
            corr.append(("X", 0))
        else:
            corr.append(("I", 0))
    return ProtocolResult(a, [rec], corr, p)


def qit_4to2(b_state: HybridState, mode=None, seed=None, force=None) -> ProtocolResult:
    """Spread a ququart over (qubit A, ququart B).

    The result has dims (2, 4) and B is supported on {|0>, |1>}; in
    feed-forward mode its amplitudes are (alpha, beta, gamma, delta) on
    |00>, |01>, |10>, |11> of (A, B's lower block).
    """
    _check_pure(b_state)
    if b_state.dims != (4,):
        raise ValueError(f"qit_4to2 expects a ququart, got dims {b_state.dims}")
    mode = as_mode(mode)
    out, rec, corr, p = split_in_register(b_state, 0, mode, hb._as_rng(seed),
                                          force, compress=False)
    return ProtocolResult(out, [rec], corr, p)


def qit_2to4(joint: HybridState, mode=None, seed=None, force=None) -> ProtocolResult:
    """Concentrate a (qubit, ququart lower-block) state onto the ququart."""
    _check_pure(joint)
    if joint.dims != (2, 4):
        raise ValueError(f"qit_2to4 expects dims (2, 4), got {joint.dims}")
    if np.linalg.norm(joint.tensor()[:, 2:]) > hb.ATOL_NUMERIC:
        raise ValueError("ququart B must be supported on |0> and |1> only")
    compact = hb.restrict(joint, 1, [0, 1])
    out, rec, corr, p = merge_in_register(compact, 0, 1, mode, hb._as_rng(seed), force)
    return ProtocolResult(out, [rec], [(n, 0) for n, _ in corr], p)


def merge(a_state: HybridState, b_state: HybridState | None = None, mode=None,
          seed=None, force=None) -> ProtocolResult:
    """Merge(2, d -> 2d).

    Pass a qubit and a d-level qudit, or a single joint state of dims (2, d)
    (entangled inputs are allowed).
    """
    if b_state is None:
        joint = a_state
        _check_pure(joint)
        if len(joint.dims) != 2 or joint.dims[0] != 2:
            raise ValueError(f"joint merge input must have dims (2, d), got {joint.dims}")
    else:
        _check_pure(a_state, "qubit")
        _check_pure(b_state, "qudit")
        if a_state.dims != (2,) or len(b_state.dims) != 1:
            raise ValueError("merge expects a qubit and a single qudit")
        joint = hb.tensor(a_state, b_state)
    if joint.dims[1] < 2:
        raise ValueError("qudit dimension must be >= 2")
    out, rec, corr, p = merge_in_register(joint, 0, 1, mode, hb._as_rng(seed), force)
    return ProtocolResult(out, [rec], [(n, 0) for n, _ in corr], p)


def split(b_state: HybridState, mode=None, seed=None, force=None) -> ProtocolResult:
    """Split(2d -> 2, d); the result has dims (2, d)."""
    _check_pure(b_state)
    if len(b_state.dims) != 1:
        raise ValueError("split expects a single qudit")
    if b_state.dims[0] % 2:
        raise ValueError(f"split needs an even dimension, got {b_state.dims[0]}")
    out, rec, corr, p = split_in_register(b_state, 0, mode, hb._as_rng(seed), force)
    return ProtocolResult(out, [rec], [(n, 0) for n, _ in corr], p)


# ------------------------------------------------------------- targets

def target_4to2(b_state: HybridState) -> HybridState:
    """(alpha..delta) placed on |0,0>,|0,1>,|1,0>,|1,1> of dims (2, 4)."""
    v = b_state.amps
    amps = np.zeros(8, dtype=complex)
    amps[[0, 1, 4, 5]] = v
    return HybridState((2, 4), amps)


def target_2to4(joint: HybridState) -> HybridState:
    t = joint.tensor()
    return hb.make_state((4,), [t[0, 0], t[0, 1], t[1, 0], t[1, 1]])


def target_merge(joint: HybridState) -> HybridState:
    return hb.canonical_isomorphism(joint, (0, 1))


def target_split(b_state: HybridState) -> HybridState:
    return hb.canonical_isomorphism_inverse(b_state, 0)


# ---------------------------------------------------- gate synthesis

CONVENTIONS = ("little", "big")


@dataclass(frozen=True)
class SynthesizedGate:
    """An n-qubit gate run as merges, one qudit unitary, and splits.

    ``convention="little"`` merges qubit 2 into qubit 1 first, then qubit 3,
    and so on, so qubit 1 is the least significant digit of the qudit level
    and ``u`` is read in the basis ``|q_n ... q_1>``. ``"big"`` reverses the
    merge order, making ``u`` act in the register's own ``|q_1 ... q_n>``
    basis.
    """

    u: hb.GateMatrix
    n: int
    convention: str = "little"

    @property
    def steps(self) -> list[str]:
        order = self._merge_order()
        steps = []
        d = 2
        for q in order[1:]:
            steps.append(f"Merge(2,{d}->{2 * d}) qubit {q + 1} into qudit")
            d *= 2
        steps.append(f"U{d} on qudit")
        for q in reversed(order[1:]):
            steps.append(f"Split({d}->2,{d // 2}) releases qubit {q + 1}")
            d //= 2
        return steps

    def _merge_order(self) -> list[int]:
        return list(range(self.n)) if self.convention == "little" \
            else list(range(self.n - 1, -1, -1))

    def direct_targets(self) -> list[int]:
        """Register slots, most significant first, that ``u`` acts on."""
        return list(reversed(self._merge_order()))

    def apply(self, state: HybridState, seed=None, mode=None) -> ProtocolResult:
        if state.dims != (2,) * self.n:
            raise ValueError(f"expected {self.n} qubits, got dims {state.dims}")
        rng = hb._as_rng(seed)
        order = self._merge_order()
        # slot labels track which qubit sits where
        labels = list(range(self.n))
        s = state
        log, corr = [], []
        p_total = 1.0
        for q in order[1:]:
            a = labels.index(q)
            b = labels.index(order[0])
            s, rec, c, p = merge_in_register(s, a, b, mode, rng)
            labels.pop(a)
            log.append(rec)
            corr += c
            p_total *= p
        s = hb.apply(s, self.u, [0])
        for q in reversed(order[1:]):
            s, rec, c, p = split_in_register(s, len(labels) - 1, mode, rng)
            labels.insert(len(labels) - 1, q)
            log.append(rec)
            corr += c
            p_total *= p
        s = hb.permute(s, [labels.index(k) for k in range(self.n)])
        if not s.normalized:
            s = s.renormalized()
        return ProtocolResult(s, log, corr, p_total,
                              notes={"convention": self.convention, "steps": self.steps})

    def direct(self, state: HybridState) -> HybridState:
        g = hb.GateMatrix((2,) * self.n, self.u.mat, name=self.u.name)
        return hb.apply(state, g, self.direct_targets())


def synthesize_gate(u, n: int, convention: str = "little") -> SynthesizedGate:
    """Build the merge -> unitary -> split pipeline for an n-qubit gate."""
    if not 2 <= n <= 4:
        raise ValueError(f"n must be in 2..4, got {n}")
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    if not isinstance(u, hb.GateMatrix):
        u = hb.GateMatrix((2 ** n,), np.asarray(u), name="U")
    if not u.unitary:
        raise ValueError("synthesize_gate requires a unitary")
    if u.mat.shape != (2 ** n, 2 ** n):
        raise ValueError(f"gate side {u.mat.shape[0]} is not 2**{n}")
    return SynthesizedGate(hb.GateMatrix((2 ** n,), u.mat, name=u.name), n, convention)


# --------------------------------------------------------- serialization

PROTOCOLS = {
    "qit2to2": (qit_2to2, (2,)),
    "qit4to2": (qit_4to2, (4,)),
    "qit2to4": (qit_2to4, (2, 4)),
    "merge": (merge, None),
    "split": (split, None),
}


@dataclass(frozen=True)
class ProtocolSpec:
    """JSON-serializable description of one protocol run."""

    protocol: str
    amplitudes: tuple[complex, ...]
    dims: tuple[int, ...]
    mode: str = "feedforward"
    seed: int | None = None

    def to_json(self) -> str:
        return json.dumps({
            "protocol": self.protocol,
            "dims": list(self.dims),
            "amplitudes": [[a.real, a.imag] for a in map(complex, self.amplitudes)],
            "mode": self.mode,
            "seed": self.seed,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ProtocolSpec":
        d = json.loads(text) if isinstance(text, str) else text
        amps = tuple(complex(re, im) for re, im in d["amplitudes"])
        return cls(d["protocol"], amps, tuple(d["dims"]), d.get("mode", "feedforward"),
                   d.get("seed"))

    def run(self) -> ProtocolResult:
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        fn, _ = PROTOCOLS[self.protocol]
        state = hb.make_state(self.dims, self.amplitudes)
        return fn(state, mode=self.mode, seed=self.seed)

    def target(self) -> HybridState:
        state = hb.make_state(self.dims, self.amplitudes)
        return {
            "qit2to2": lambda s: s,
            "qit4to2": target_4to2,
            "qit2to4": target_2to4,
            "merge": target_merge,
            "split": target_split,
        }[self.protocol](state)
