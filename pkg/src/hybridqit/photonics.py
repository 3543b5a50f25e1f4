"""Linear-optics model of the photonic CX4 experiment.

Photons carry polarization (H=0, V=1) and, optionally, a spatial path
(upper=0, lower=1). A photon with a path is a 4-level system indexed
``2*pol + path``, so H0, H1, V0, V1 map to levels 0..3.

The simulation works in the coincidence subspace: one photon per labelled
output arm. A partially polarizing beamsplitter (PPBS) then has two ways of
delivering that configuration: each photon leaves through its own arm
(``direct``) or the two photons swap arms (``exchange``). Indistinguishable
photons add the two amplitudes; distinguishable ones add the probabilities.
Distinguishability is a two-point mixture with weight ``q`` on the fully
interfering case.

PPBS amplitudes (rows: output arm of the control / target, columns: input)::

    H: [[ sqrt(1/3), sqrt(2/3)],      V: [[-1, 0],
        [ sqrt(2/3), -sqrt(1/3)]]         [ 0, 1]]

With loss elements passing 1/3 of the V intensity this yields CZ/3 on the
two polarizations. A control photon crossing a PPBS alone picks up Z/sqrt(3),
which the CX4 circuits undo with a fixed HWP at 0 deg on a1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import hilbert as hb
from .hilbert import DensityMatrix, GateMatrix, HybridState

R_H = np.sqrt(1 / 3)
T_H = np.sqrt(2 / 3)
LOSS_V = np.sqrt(1 / 3)
PPBS = {
    0: np.array([[R_H, T_H], [T_H, -R_H]]),
    1: np.array([[-1.0, 0.0], [0.0, 1.0]]),
}

H = np.array([1, 0], dtype=complex)
V = np.array([0, 1], dtype=complex)
D = np.array([1, 1], dtype=complex) / np.sqrt(2)
A = np.array([1, -1], dtype=complex) / np.sqrt(2)
R = np.array([1, 1j], dtype=complex) / np.sqrt(2)
L = np.array([1, -1j], dtype=complex) / np.sqrt(2)
POLARIZATIONS = {"H": H, "V": V, "D": D, "A": A, "R": R, "L": L}


# ---------------------------------------------------------------- Jones

def _rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def jones_hwp(theta: float) -> GateMatrix:
    """Half-wave plate with fast axis at ``theta`` radians from H."""
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return GateMatrix((2,), np.array([[c, s], [s, -c]]), name="HWP")


def jones_qwp(theta: float) -> GateMatrix:
    """Quarter-wave plate, R(theta) diag(1, i) R(-theta)."""
    m = _rot(theta) @ np.diag([1, 1j]) @ _rot(-theta)
    return GateMatrix((2,), m, name="QWP")


def waveplates_to_h(pol) -> tuple[float, float]:
    """QWP and HWP angles (radians) that turn polarization ``pol`` into H.

    The QWP on the ellipse's major axis makes the light linear; the HWP then
    rotates that line onto H. Global phase is not controlled.
    """
    a, b = np.asarray(pol, dtype=complex) / np.linalg.norm(pol)
    s1 = abs(a) ** 2 - abs(b) ** 2
    s2 = 2 * (np.conj(a) * b).real
    s3 = 2 * (np.conj(a) * b).imag
    chi = 0.5 * np.arcsin(np.clip(s3, -1.0, 1.0))
    psi = 0.5 * np.arctan2(s2, s1)
    return float(psi), float((psi - chi) / 2)


# -------------------------------------------------------------- registers

@dataclass(frozen=True)
class DistinguishabilityModel:
    q: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"q must lie in [0, 1], got {self.q}")


def _as_q(q) -> float:
    if q is None:
        return 1.0
    if isinstance(q, DistinguishabilityModel):
        return q.q
    return DistinguishabilityModel(float(q)).q


@dataclass(frozen=True)
class PhotonRegister:
    labels: tuple[str, ...]
    has_path: tuple[bool, ...]
    state: HybridState
    noise: DistinguishabilityModel | None = None

    def __post_init__(self):
        if len(self.labels) != len(self.has_path) or len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique and match has_path")
        dims = tuple(4 if p else 2 for p in self.has_path)
        if self.state.dims != dims:
            raise ValueError(f"state dims {self.state.dims} do not match photons {dims}")

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no photon labelled {label!r}") from None

    @property
    def dims(self) -> tuple[int, ...]:
        return self.state.dims

    def __matmul__(self, other: "PhotonRegister") -> "PhotonRegister":
        noise = self.noise or other.noise
        return PhotonRegister(self.labels + other.labels,
                              self.has_path + other.has_path,
                              hb.tensor(self.state, other.state), noise)


def prepare_system_a(eps, zeta, prebiased: bool = False, q=None) -> PhotonRegister:
    """Photons a1, a2 in eps|H>|H> + zeta|V>|V>.

    ``prebiased`` rescales zeta by 1/3 and renormalizes, which is the input
    the lossless CX4 variant needs.
    """
    eps, zeta = complex(eps), complex(zeta)
    if abs(abs(eps) ** 2 + abs(zeta) ** 2 - 1) > hb.ATOL_NUMERIC:
        raise ValueError("system A coefficients must be normalized")
    if prebiased:
        eps, zeta = prebias(eps, zeta)
    amps = np.zeros(4, dtype=complex)
    amps[0], amps[3] = eps, zeta
    noise = None if q is None else DistinguishabilityModel(_as_q(q))
    return PhotonRegister(("a1", "a2"), (False, False), HybridState((2, 2), amps), noise)


def prebias(eps, zeta) -> tuple[complex, complex]:
    n = np.sqrt(abs(eps) ** 2 + abs(zeta) ** 2 / 9)
    return complex(eps / n), complex(zeta / 3 / n)


def prepare_system_b(eta, kappa, lam=0.0, mu=0.0, q=None) -> PhotonRegister:
    """Photon b in eta|H0> + kappa|H1> + lam|V0> + mu|V1>."""
    amps = np.array([eta, kappa, lam, mu], dtype=complex)
    if abs(np.linalg.norm(amps) - 1) > hb.ATOL_NUMERIC:
        raise ValueError("system B coefficients must be normalized")
    noise = None if q is None else DistinguishabilityModel(_as_q(q))
    return PhotonRegister(("b",), (True,), HybridState((4,), amps), noise)


def encode_logical(joint: HybridState) -> PhotonRegister:
    """Map a logical (qubit A, ququart B) state onto photons a1, a2, b."""
    if joint.dims != (2, 4):
        raise ValueError(f"logical state must have dims (2, 4), got {joint.dims}")
    t = np.zeros((2, 2, 4), dtype=complex)
    t[0, 0] = joint.tensor()[0]
    t[1, 1] = joint.tensor()[1]
    return PhotonRegister(("a1", "a2", "b"), (False, False, True),
                          HybridState((2, 2, 4), t.reshape(-1), joint.normalized))


def decode_logical(vec) -> np.ndarray:
    """Logical (A, B) amplitudes of a photon vector over (a1, a2, b)."""
    t = np.asarray(vec, dtype=complex).reshape(2, 2, 4)
    return np.concatenate([t[0, 0], t[1, 1]])


# --------------------------------------------------------------- elements

KINDS = ("hwp", "qwp", "loss", "phase", "ppbs")


@dataclass(frozen=True)
class OpticalElement:
    """One optical element acting on a labelled photon.

    ``angle`` is in radians (waveplate axis, or phase for ``phase``).
    ``path`` restricts the element to one spatial path of a path-carrying
    photon. For ``ppbs`` the element's photon is the control and ``partner``
    is the target, which meets the control on ``path``.
    """

    kind: str
    photon: str
    angle: float = 0.0
    path: int | None = None
    partner: str | None = None
    transmission: float = LOSS_V
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown element kind {self.kind!r}")
        if self.kind == "ppbs" and self.partner is None:
            raise ValueError("ppbs needs a partner photon")

    def jones(self) -> np.ndarray:
        if self.kind == "hwp":
            return jones_hwp(self.angle).mat
        if self.kind == "qwp":
            return jones_qwp(self.angle).mat
        if self.kind == "loss":
            return np.diag([1.0, self.transmission]).astype(complex)
        if self.kind == "phase":
            return np.diag([1.0, np.exp(1j * self.angle)])
        raise ValueError(f"{self.kind} has no single-photon Jones matrix")

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "photon": self.photon}
        if self.kind in ("hwp", "qwp", "phase"):
            d["angle_deg"] = float(np.degrees(self.angle))
        if self.kind == "loss":
            d["transmission"] = float(self.transmission)
        if self.path is not None:
            d["path"] = self.path
        if self.partner is not None:
            d["partner"] = self.partner
        if self.label:
            d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "OpticalElement":
        return cls(d["kind"], d["photon"], float(np.radians(d.get("angle_deg", 0.0))),
                   d.get("path"), d.get("partner"), float(d.get("transmission", LOSS_V)),
                   d.get("label", ""))


def hwp(photon, deg, path=None, label=""):
    return OpticalElement("hwp", photon, float(np.radians(deg)), path, label=label)


def qwp(photon, deg, path=None, label=""):
    return OpticalElement("qwp", photon, float(np.radians(deg)), path, label=label)


def loss(photon, path=None, transmission=LOSS_V, label=""):
    return OpticalElement("loss", photon, 0.0, path, transmission=transmission, label=label)


def ppbs(control, target, path=None, label=""):
    return OpticalElement("ppbs", control, 0.0, path, partner=target, label=label)


def _single_photon_op(el: OpticalElement, has_path: bool) -> np.ndarray:
    j = el.jones()
    if not has_path:
        if el.path is not None:
            raise ValueError(f"photon {el.photon!r} has no path degree of freedom")
        return j
    if el.path is None:
        return np.kron(j, np.eye(2))
    sel = np.zeros((2, 2))
    sel[el.path, el.path] = 1.0
    return np.kron(j, sel) + np.kron(np.eye(2), np.eye(2) - sel)


def ppbs_operators(control_has_path: bool, target_has_path: bool, path):
    """(direct, exchange) operators on the (control, target) joint space."""
    if control_has_path:
        raise ValueError("the PPBS control photon must be polarization-only")
    if target_has_path and path is None:
        raise ValueError("a path-carrying target needs the PPBS path")
    if not target_has_path and path is not None:
        raise ValueError("path condition refers to a photon without a path")
    paths = (0, 1) if target_has_path else (None,)
    nt = 4 if target_has_path else 2

    def tidx(pol, x):
        return pol if x is None else 2 * pol + x

    direct = np.zeros((2 * nt, 2 * nt), dtype=complex)
    exchange = np.zeros_like(direct)
    for pc in (0, 1):
        for pt in (0, 1):
            for x in paths:
                src = pc * nt + tidx(pt, x)
                if x is None or x == path:
                    direct[src, src] = PPBS[pc][0, 0] * PPBS[pt][1, 1]
                    dst = pt * nt + tidx(pc, x)
                    exchange[dst, src] = PPBS[pc][1, 0] * PPBS[pt][0, 1]
                else:
                    # the target is on the other path: control crosses alone
                    direct[src, src] = PPBS[pc][0, 0]
    return direct, exchange


# ---------------------------------------------------------------- circuits

@dataclass(frozen=True)
class PostSelectionRule:
    """Projections applied after the circuit.

    ``projections`` maps a photon to the polarization it is projected on
    (the photon is then removed). ``keep_polarization`` maps a path-carrying
    photon to the polarization component that is kept; the photon's path
    then becomes a qubit (H0 -> H, H1 -> V after the displacer).
    """

    projections: tuple[tuple[str, tuple[complex, complex]], ...] = ()
    keep_polarization: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        if not self.projections and not self.keep_polarization:
            raise ValueError("post-selection rule keeps nothing")

    def to_dict(self) -> dict:
        return {
            "projections": [[p, [[complex(c).real, complex(c).imag] for c in v]]
                            for p, v in self.projections],
            "keep_polarization": [[p, k] for p, k in self.keep_polarization],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PostSelectionRule":
        proj = tuple((p, tuple(complex(re, im) for re, im in v))
                     for p, v in d.get("projections", []))
        keep = tuple((p, int(k)) for p, k in d.get("keep_polarization", []))
        return cls(proj, keep)


def _apply_rule(vec, labels, has_path, rule: PostSelectionRule):
    t = np.asarray(vec, dtype=complex).reshape([4 if p else 2 for p in has_path])
    labels, has_path = list(labels), list(has_path)
    for photon, pol in rule.keep_polarization:
        i = labels.index(photon)
        if not has_path[i]:
            raise ValueError(f"photon {photon!r} has no path to keep")
        t = np.take(t, [2 * pol, 2 * pol + 1], axis=i)
        has_path[i] = False
    for photon, pol in rule.projections:
        i = labels.index(photon)
        if has_path[i]:
            raise ValueError(f"projection on {photon!r} needs a polarization-only photon")
        t = np.tensordot(np.conj(np.asarray(pol, dtype=complex)), t, axes=([0], [i]))
        labels.pop(i)
        has_path.pop(i)
    return t.reshape(-1), tuple(labels), tuple(has_path)


@dataclass(frozen=True)
class OpticalResult:
    """Post-selected output of a photonic run.

    ``vector`` is the unnormalized interfering-branch output (its squared
    norm is that branch's success probability); ``rho`` is the normalized
    state including the distinguishable admixture.
    """

    labels: tuple[str, ...]
    has_path: tuple[bool, ...]
    rho: DensityMatrix
    success_probability: float
    vector: np.ndarray
    ideal_probability: float
    distinguishable_probability: float
    q: float

    @property
    def dims(self) -> tuple[int, ...]:
        return self.rho.dims

    def register(self) -> PhotonRegister:
        """Unnormalized interfering-branch output as a register."""
        return PhotonRegister(self.labels, self.has_path,
                              HybridState(self.dims, self.vector, normalized=False))


@dataclass(frozen=True)
class PhotonicCircuit:
    elements: tuple[OpticalElement, ...]
    postselection: PostSelectionRule | None = None
    name: str = ""

    def then(self, rule: PostSelectionRule) -> "PhotonicCircuit":
        return replace(self, postselection=rule)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "elements": [e.to_dict() for e in self.elements],
            "postselection": None if self.postselection is None
            else self.postselection.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "PhotonicCircuit":
        ps = d.get("postselection")
        return cls(tuple(OpticalElement.from_dict(e) for e in d["elements"]),
                   None if ps is None else PostSelectionRule.from_dict(ps),
                   d.get("name", ""))

    @classmethod
    def from_json(cls, text: str) -> "PhotonicCircuit":
        return cls.from_dict(json.loads(text))

    def run(self, register: PhotonRegister, q=None) -> OpticalResult:
        if q is None and register.noise is not None:
            q = register.noise.q
        q = _as_q(q)
        labels, has_path = register.labels, register.has_path
        dims = register.dims
        ideal = register.state.amps.copy()
        # distinguishable ensemble: one vector per direct/exchange history
        dist = [register.state.amps.copy()]
        for el in self.elements:
            if el.kind == "ppbs":
                ci, ti = register.index(el.photon), register.index(el.partner)
                dop, eop = ppbs_operators(has_path[ci], has_path[ti], el.path)
                gd = GateMatrix((dims[ci], dims[ti]), dop, unitary=False)
                ge = GateMatrix((dims[ci], dims[ti]), eop, unitary=False)
                ideal = _lin(ideal, dims, dop + eop, [ci, ti])
                nxt = []
                for v in dist:
                    for g in (gd, ge):
                        w = _lin(v, dims, g.mat, [ci, ti])
                        if np.linalg.norm(w) > 1e-15:
                            nxt.append(w)
                dist = nxt
            else:
                i = register.index(el.photon)
                op = _single_photon_op(el, has_path[i])
                ideal = _lin(ideal, dims, op, [i])
                dist = [_lin(v, dims, op, [i]) for v in dist]
        out_labels, out_path = labels, has_path
        if self.postselection is not None:
            ideal, out_labels, out_path = _apply_rule(ideal, labels, has_path, self.postselection)
            dist = [_apply_rule(v, labels, has_path, self.postselection)[0] for v in dist]
        p_ideal = float(np.vdot(ideal, ideal).real)
        p_dist = float(sum(np.vdot(v, v).real for v in dist))
        success = q * p_ideal + (1 - q) * p_dist
        out_dims = tuple(4 if p else 2 for p in out_path)
        weights = [q] + [1 - q] * len(dist)
        rho = DensityMatrix.from_ensemble(out_dims, weights, [ideal] + dist)
        return OpticalResult(out_labels, out_path, rho, success, ideal,
                             p_ideal, p_dist, q)


def _lin(vec, dims, mat, targets):
    return hb._apply_matrix(np.asarray(vec).reshape(dims), mat, targets).reshape(-1)


# ------------------------------------------------------------ PPBS CNOT

def ppbs_cnot_circuit(control: str, target: str, path=None) -> PhotonicCircuit:
    """Polarization CNOT: HWPs at 22.5 deg around a lossy-balanced PPBS."""
    return PhotonicCircuit((
        hwp(target, 22.5, path, "HWP in"),
        loss(control, label="loss control"),
        loss(target, path, label="loss target"),
        ppbs(control, target, path),
        hwp(target, 22.5, path, "HWP out"),
    ), name="ppbs-cnot")


def ppbs_cnot(register: PhotonRegister, control: str, target: str, path=None, q=None):
    """Run the PPBS CNOT; return ``(OpticalResult, success_probability)``.

    In the coincidence subspace the interfering branch equals CNOT / 3, so the
    success probability is 1/9 for any input at q = 1.
    """
    res = ppbs_cnot_circuit(control, target, path).run(register, q)
    return res, res.success_probability


def standard_cx4_circuit() -> PhotonicCircuit:
    return PhotonicCircuit((
        hwp("b", 22.5, label="HWP b in"),
        loss("a1", label="loss a1"),
        loss("a2", label="loss a2"),
        loss("b", 0, label="loss b upper"),
        loss("b", 1, label="loss b lower"),
        ppbs("a1", "b", 0, label="PPBS upper"),
        ppbs("a2", "b", 1, label="PPBS lower"),
        hwp("b", 22.5, label="HWP b out"),
        hwp("a1", 0.0, label="phase compensation"),
    ), name="cx4-standard")


def simplified_cx4_circuit() -> PhotonicCircuit:
    """Lossless CX4; requires the pre-biased system A input."""
    return PhotonicCircuit((
        hwp("b", 15.0, label="HWP b in"),
        ppbs("a1", "b", 0, label="PPBS upper"),
        ppbs("a2", "b", 1, label="PPBS lower"),
        hwp("b", 22.5, label="HWP b out"),
        hwp("a1", 0.0, label="phase compensation"),
    ), name="cx4-simplified")


VARIANTS = ("standard", "simplified")


def optical_cx4(register: PhotonRegister, variant: str = "standard", q=None,
                postselection: PostSelectionRule | None = None) -> OpticalResult:
    """Optical CX4 on photons (a1, a2) controlling ququart photon b.

    ``standard`` works on any encoded input and succeeds with probability
    1/27 at q = 1. ``simplified`` drops the loss elements; it expects system
    A already pre-biased (see :func:`prebias`) and photon b horizontally
    polarized, as in the gate characterization.
    """
    if register.labels != ("a1", "a2", "b") or register.has_path != (False, False, True):
        raise ValueError("register must hold photons a1, a2 (polarization) and b (pol x path)")
    variant = variant.lower()
    if variant == "standard":
        circ = standard_cx4_circuit()
    elif variant == "simplified":
        if np.linalg.norm(register.state.tensor()[..., 2:]) > hb.ATOL_NUMERIC:
            raise ValueError("the simplified CX4 needs photon b in H (lam = mu = 0)")
        circ = simplified_cx4_circuit()
    else:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if postselection is not None:
        circ = circ.then(postselection)
    return circ.run(register, q)


# ------------------------------------------------------------ HOM dip

def hom_coincidence(delay_regime: str = "zero", q=1.0, pols=("H", "H")) -> float:
    """Coincidence probability for two photons meeting on the PPBS."""
    q = _as_q(q)
    a = np.kron(POLARIZATIONS[pols[0]], POLARIZATIONS[pols[1]])
    dop, eop = ppbs_operators(False, False, None)
    pd = np.linalg.norm(dop @ a) ** 2
    pe = np.linalg.norm(eop @ a) ** 2
    if delay_regime == "infinite":
        return float(pd + pe)
    if delay_regime != "zero":
        raise ValueError("delay_regime must be 'zero' or 'infinite'")
    pi = np.linalg.norm((dop + eop) @ a) ** 2
    return float(q * pi + (1 - q) * (pd + pe))


def visibility(c_zero: float, c_infinity: float) -> float:
    """Dip visibility (c_inf - c_0) / c_inf."""
    if c_infinity <= 0:
        raise ValueError("c_infinity must be positive")
    return (c_infinity - c_zero) / c_infinity


def hom_visibility(q=1.0) -> float:
    return visibility(hom_coincidence("zero", q), hom_coincidence("infinite", q))


# ------------------------------------------------------ state analyzer

@dataclass(frozen=True)
class AnalyzerSetting:
    """Projector onto (a|H> + b|V>) (x) (c|0> + d|1>) and its optical recipe."""

    pol: tuple[complex, complex]
    path: tuple[complex, complex]
    vector: np.ndarray
    projector: np.ndarray
    elements: tuple[dict, ...] = field(default=())

    def row(self) -> np.ndarray:
        """Amplitude functional of the element sequence (a 1x4 row)."""
        m = np.eye(4, dtype=complex)
        for el in self.elements:
            m = _analyzer_matrix(el) @ m
        return m.reshape(-1)

    def probability(self, state) -> float:
        """Detection probability through the element sequence."""
        r = self.row()
        if isinstance(state, HybridState):
            return float(abs(r @ state.amps) ** 2)
        rho = state.mat if isinstance(state, DensityMatrix) else np.asarray(state)
        return float(np.real(r @ rho @ r.conj()))

    def ideal_probability(self, state) -> float:
        if isinstance(state, HybridState):
            return float(abs(np.vdot(self.vector, state.amps)) ** 2)
        rho = state.mat if isinstance(state, DensityMatrix) else np.asarray(state)
        return float(np.real(self.vector.conj() @ rho @ self.vector))


def _analyzer_matrix(el: dict) -> np.ndarray:
    kind = el["kind"]
    if kind in ("hwp", "qwp"):
        j = (jones_hwp if kind == "hwp" else jones_qwp)(np.radians(el["angle_deg"])).mat
        path = el.get("path")
        if el.get("merged"):
            return j
        if path is None:
            return np.kron(j, np.eye(2))
        sel = np.zeros((2, 2))
        sel[path, path] = 1
        return np.kron(j, sel) + np.kron(np.eye(2), np.eye(2) - sel)
    if kind == "bd":
        # H on the upper path and V on the lower path leave in one beam
        m = np.zeros((2, 4), dtype=complex)
        m[0, 0] = 1.0
        m[1, 3] = 1.0
        return m
    if kind == "pbs":
        return np.array([[1.0, 0.0]], dtype=complex)
    raise ValueError(f"unknown analyzer element {kind!r}")


def analyzer_projector(a, b, c, d) -> AnalyzerSetting:
    """Rank-1 ququart projector and the waveplate settings realizing it."""
    pol = np.array([a, b], dtype=complex)
    path = np.array([c, d], dtype=complex)
    if np.linalg.norm(pol) < 1e-12 or np.linalg.norm(path) < 1e-12:
        raise ValueError("analyzer factors must be nonzero")
    if abs(np.linalg.norm(pol) - 1) > hb.ATOL_NUMERIC or \
            abs(np.linalg.norm(path) - 1) > hb.ATOL_NUMERIC:
        raise ValueError("analyzer factors must be normalized")
    vec = np.kron(pol, path)
    q1, h1 = waveplates_to_h(pol)
    q2, h2 = waveplates_to_h(path)
    elements = (
        {"kind": "qwp", "angle_deg": np.degrees(q1), "label": "QWP3"},
        {"kind": "hwp", "angle_deg": np.degrees(h1), "label": "HWP3"},
        {"kind": "hwp", "angle_deg": 0.0, "path": 0, "label": "HWP@0"},
        {"kind": "hwp", "angle_deg": 45.0, "path": 1, "label": "HWP@45"},
        {"kind": "bd", "label": "BD2"},
        {"kind": "qwp", "angle_deg": np.degrees(q2), "merged": True, "label": "QWP4"},
        {"kind": "hwp", "angle_deg": np.degrees(h2), "merged": True, "label": "HWP4"},
        {"kind": "pbs", "label": "PBS"},
    )
    elements = tuple({k: (float(v) if isinstance(v, np.floating) else v)
                      for k, v in e.items()} for e in elements)
    return AnalyzerSetting(tuple(pol), tuple(path), vec, np.outer(vec, vec.conj()), elements)


# ------------------------------------------------------ full experiments

def rule_4to2() -> PostSelectionRule:
    """Keep b's H0/H1 components and project a2 on |D>."""
    return PostSelectionRule(projections=(("a2", tuple(D)),), keep_polarization=(("b", 0),))


def rule_2to4() -> PostSelectionRule:
    return PostSelectionRule(projections=(("a1", tuple(D)), ("a2", tuple(D))))


def run_optical_4to2(b_coeffs: Sequence[complex], q=1.0, variant="standard") -> OpticalResult:
    """Ququart b -> (a1, b) transfer with post-selection.

    The output lives on (a1 polarization, b path) and should equal
    eta|HH> + kappa|HV> + lam|VH> + mu|VV>.
    """
    reg = prepare_system_a(1 / np.sqrt(2), 1 / np.sqrt(2),
                           prebiased=variant == "simplified") @ prepare_system_b(*b_coeffs)
    return optical_cx4(reg, variant, q, rule_4to2())


def run_optical_2to4(eps, zeta, eta, kappa, q=1.0, variant="standard") -> OpticalResult:
    """(a1 a2, b) -> ququart b transfer with post-selection on |D>|D>."""
    reg = prepare_system_a(eps, zeta, prebiased=variant == "simplified") @ \
        prepare_system_b(eta, kappa, 0.0, 0.0)
    return optical_cx4(reg, variant, q, rule_2to4())


def ideal_4to2(b_coeffs) -> HybridState:
    return hb.make_state((2, 2), b_coeffs)


def ideal_2to4(eps, zeta, eta, kappa) -> HybridState:
    return hb.make_state((4,), [eps * eta, eps * kappa, zeta * eta, zeta * kappa])


# Initial states used in the two transfer experiments.
s2 = 1 / np.sqrt(2)
PHI_STATES = {
    "phi1": (s2, s2, 0, 0),
    "phi2": (s2, 0, s2, 0),
    "phi3": (0.5, 0.5, 0.5, 0.5),
    "phi4": (0, s2, s2, 0),
    "phi5": (0.5, -0.5, -0.5, -0.5),
}
# (eps, zeta, eta, kappa)
PSI_STATES = {
    "psi1": (s2, 1j * s2, 1, 0),
    "psi2": (s2, 1j * s2, s2, -s2),
    "psi3": (s2, 1j * s2, s2, 1j * s2),
    "psi4": (s2, s2, 1, 0),
    "psi5": (s2, s2, s2, s2),
    "psi6": (s2, s2, s2, -1j * s2),
    "psi7": (0, 1, 1, 0),
    "psi8": (0, 1, s2, s2),
    "psi9": (0, 1, s2, -1j * s2),
}
del s2

# Published fidelities, kept for side-by-side reports only.
REFERENCE_FIDELITIES = {
    "phi1": (0.8860, 0.0298), "phi2": (0.7686, 0.0271), "phi3": (0.7342, 0.0255),
    "phi4": (0.7375, 0.0203), "phi5": (0.8220, 0.0164),
    "psi1": (0.8018, 0.0271), "psi2": (0.7220, 0.0289), "psi3": (0.6997, 0.0241),
    "psi4": (0.8772, 0.0217), "psi5": (0.7897, 0.0257), "psi6": (0.8080, 0.0249),
    "psi7": (0.8770, 0.0130), "psi8": (0.8431, 0.0134), "psi9": (0.9171, 0.0138),
}
REFERENCE_AVERAGES = {"fig4": (0.7897, 0.0109), "fig5": (0.8151, 0.0074)}
REFERENCE_HOM = {"v_theory": 0.80, "v_exp": 0.661, "v_exp_sd": 0.0015, "q": 0.826}
