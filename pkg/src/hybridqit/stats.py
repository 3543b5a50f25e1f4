"""Counting statistics, fidelity estimation and ququart tomography.

Counts are independent Poisson draws per (setting, outcome). Fidelities are
estimated from a handful of product-basis settings chosen for the target
(Z: |0>/|1>, X: |+>/|->, Y: |+i>/|-i> per qubit); errors come from
first-order propagation of the Poisson variances.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import hilbert as hb
from . import photonics as ph
from .hilbert import DensityMatrix, HybridState

CLASSICAL_BOUND = 2 / 3

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
# eigenvectors, +1 eigenvalue first
BASES = {
    "Z": (np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)),
    "X": (ph.D, ph.A),
    "Y": (ph.R, ph.L),
}


@dataclass(frozen=True)
class ExperimentConfig:
    fourfold_rate: float = 0.22
    duration: float = 600.0
    seed: int | None = None

    def __post_init__(self):
        if self.fourfold_rate <= 0 or self.duration <= 0:
            raise ValueError("rate and duration must be positive")

    @property
    def expected_events(self) -> float:
        return self.fourfold_rate * self.duration


@dataclass(frozen=True)
class CountTable:
    settings: tuple[tuple[str, ...], ...]
    counts: np.ndarray          # (n_settings, n_outcomes) integers
    expected: np.ndarray        # Poisson means
    config: ExperimentConfig

    def __post_init__(self):
        if np.any(np.asarray(self.counts) < 0):
            raise ValueError("counts must be non-negative")

    def totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def row(self, setting) -> np.ndarray:
        return self.counts[self.settings.index(tuple(setting))]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["setting", "outcome", "count", "expected"])
        for s, row, exp in zip(self.settings, self.counts, self.expected):
            for o, (c, e) in enumerate(zip(row, exp)):
                w.writerow(["".join(s), o, int(c), repr(float(e))])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "settings": ["".join(s) for s in self.settings],
            "counts": self.counts.tolist(),
            "expected": self.expected.tolist(),
            "fourfold_rate": self.config.fourfold_rate,
            "duration": self.config.duration,
            "seed": self.config.seed,
        }, sort_keys=True)


@dataclass(frozen=True)
class FidelityEstimate:
    value: float
    std_dev: float
    method: str = "basis"

    @property
    def clamped(self) -> float:
        return float(min(1.0, max(0.0, self.value)))


def sample_counts(probabilities: Mapping, config: ExperimentConfig, rng=None) -> CountTable:
    """Poisson counts with mean ``rate * duration * p`` for every outcome.

    ``probabilities`` maps a setting (tuple of basis labels) to its outcome
    distribution. Pass ``rng`` to draw from a shared generator instead of
    ``config.seed``.
    """
    settings = tuple(tuple(s) for s in probabilities)
    probs = np.array([np.asarray(probabilities[s], dtype=float) for s in probabilities])
    if np.any(probs < -1e-12) or np.any(probs > 1 + 1e-12):
        raise ValueError("probabilities must lie in [0, 1]")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-9):
        raise ValueError("probabilities must sum to 1 for each setting")
    probs = np.clip(probs, 0.0, 1.0)
    expected = config.expected_events * probs
    gen = hb._as_rng(config.seed if rng is None else rng)
    counts = gen.poisson(expected)
    return CountTable(settings, counts, expected, config)


# ------------------------------------------------------ basis settings

def _as_qubits(target: HybridState) -> tuple[int, np.ndarray]:
    n = int(round(np.log2(target.size)))
    if 2 ** n != target.size:
        raise ValueError("target dimension must be a power of two")
    return n, target.amps / target.norm


def _as_matrix(rho, size) -> np.ndarray:
    if isinstance(rho, HybridState):
        v = rho.amps / rho.norm
        return np.outer(v, v.conj())
    m = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    if m.shape != (size, size):
        raise ValueError(f"state size {m.shape[0]} does not match target {size}")
    return m


def setting_unitary(setting: Sequence[str]) -> np.ndarray:
    """Rows are the product eigenvectors (conjugated) of a setting."""
    rows = [np.ones(1, dtype=complex)]
    for lab in setting:
        vecs = BASES[lab]
        rows = [np.kron(r, v) for r in rows for v in vecs]
    return np.array(rows).conj()


def setting_probabilities(rho, setting: Sequence[str]) -> np.ndarray:
    u = setting_unitary(setting)
    m = _as_matrix(rho, u.shape[0])
    p = np.real(np.einsum("ij,jk,ik->i", u, m, u.conj()))
    return np.clip(p, 0.0, None) / max(p.sum(), 1e-300)


def _pauli_matrix(label: str) -> np.ndarray:
    m = np.ones((1, 1), dtype=complex)
    for c in label:
        m = np.kron(m, PAULI[c])
    return m


def _covers(setting, pauli) -> bool:
    return all(p == "I" or p == s for p, s in zip(pauli, setting))


@dataclass(frozen=True)
class FidelityPlan:
    """Which settings to measure for one target, and how to weight them."""

    target: HybridState
    n_qubits: int
    settings: tuple[tuple[str, ...], ...]
    identity_weight: float
    # per setting: outcome weights w_o so that f_s = sum_o w_o p_o
    weights: tuple[np.ndarray, ...] = field(repr=False)


def fidelity_plan(target: HybridState, tol: float = 1e-12) -> FidelityPlan:
    """Smallest product-basis setting set that fixes Tr(rho |psi><psi|).

    The target projector is expanded in Pauli strings; each setting
    measures every string whose non-identity factors match it. For up to
    two qubits the set is provably minimal (exhaustive search); beyond that
    a greedy cover is used.
    """
    n, psi = _as_qubits(target)
    dim = 2 ** n
    coeffs = {}
    for lab in itertools.product("IXYZ", repeat=n):
        lab = "".join(lab)
        c = np.real(np.vdot(psi, _pauli_matrix(lab) @ psi)) / dim
        if abs(c) > tol:
            coeffs[lab] = c
    identity = "I" * n
    c_id = coeffs.pop(identity, 1 / dim)
    candidates = [tuple(s) for s in itertools.product("ZXY", repeat=n)]
    needed = list(coeffs)
    chosen = None
    if n <= 2:
        for k in range(0 if not needed else 1, len(candidates) + 1):
            for combo in itertools.combinations(candidates, k):
                if all(any(_covers(s, p) for s in combo) for p in needed):
                    chosen = list(combo)
                    break
            if chosen is not None:
                break
    else:
        chosen, left = [], set(needed)
        while left:
            best = max(candidates, key=lambda s: sum(_covers(s, p) for p in left))
            chosen.append(best)
            left = {p for p in left if not _covers(best, p)}
    if not chosen:
        chosen = [("Z",) * n]
    weights = [np.zeros(dim) for _ in chosen]
    outcomes = list(itertools.product((0, 1), repeat=n))
    for p, c in coeffs.items():
        k = next(i for i, s in enumerate(chosen) if _covers(s, p))
        for o, bits in enumerate(outcomes):
            sign = np.prod([(-1) ** b for b, q in zip(bits, p) if q != "I"])
            weights[k][o] += c * sign
    return FidelityPlan(target, n, tuple(chosen), float(c_id), tuple(weights))


def plan_probabilities(rho, plan: FidelityPlan) -> dict:
    return {s: setting_probabilities(rho, s) for s in plan.settings}


def fidelity_from_probabilities(probs: Mapping, plan: FidelityPlan) -> float:
    """Infinite-statistics value of the estimator."""
    return plan.identity_weight + sum(
        float(w @ np.asarray(probs[s])) for s, w in zip(plan.settings, plan.weights))


def fidelity_from_counts(counts: CountTable, target: HybridState,
                         plan: FidelityPlan | None = None) -> FidelityEstimate:
    """Estimate Tr(rho |target><target|) from basis counts.

    Each setting contributes sum_o w_o n_o / N. Its variance, to first
    order in independent Poisson counts, is sum_o (w_o - f)^2 n_o / N^2.
    """
    plan = plan or fidelity_plan(target)
    value = plan.identity_weight
    var = 0.0
    for s, w in zip(plan.settings, plan.weights):
        if tuple(s) not in counts.settings:
            raise ValueError(f"counts lack setting {''.join(s)} required for this target")
        n = counts.row(s).astype(float)
        tot = n.sum()
        if tot == 0:
            raise ValueError(f"setting {''.join(s)} recorded no events")
        f = float(w @ n / tot)
        value += f
        var += float(((w - f) ** 2) @ n) / tot ** 2
    return FidelityEstimate(value, float(np.sqrt(var)), "basis")


def simulate_fidelity(rho, target: HybridState, config: ExperimentConfig,
                      rng=None) -> FidelityEstimate:
    """Sample counts for the target's plan from ``rho`` and estimate."""
    plan = fidelity_plan(target)
    table = sample_counts(plan_probabilities(rho, plan), config, rng)
    return fidelity_from_counts(table, target, plan)


# ----------------------------------------------------------- tomography

TOMO_BASES = {"Z": ("H", "V"), "X": ("D", "A"), "Y": ("R", "L")}


def tomography_settings():
    """Analyzer settings grouped into product bases.

    Returns ``{(pol_basis, path_basis): [AnalyzerSetting x 4]}`` for all 9
    basis pairs (36 projectors, overcomplete for a ququart).
    """
    pairs = list(itertools.product("ZXY", repeat=2))
    out = {}
    for pb, qb in pairs:
        projs = []
        for pl in TOMO_BASES[pb]:
            for ql in TOMO_BASES[qb]:
                a, b = ph.POLARIZATIONS[pl]
                c, d = ph.POLARIZATIONS[ql]
                projs.append(ph.analyzer_projector(a, b, c, d))
        out[(pb, qb)] = projs
    return out


def tomography_probabilities(rho, settings=None) -> dict:
    """Detection probabilities through each analyzer element sequence."""
    settings = settings or tomography_settings()
    m = _as_matrix(rho, 4)
    return {k: np.array([s.probability(m) for s in v]) for k, v in settings.items()}


def _simplex_projection(w: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(u) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    return np.clip(w - css[rho] / (rho + 1), 0.0, None)


def physical_projection(m: np.ndarray) -> np.ndarray:
    """Closest density matrix in Frobenius norm.

    The eigenvalues (scaled to unit trace) are replaced by their Euclidean
    projection onto the probability simplex; eigenvectors are kept.
    """
    m = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(m)
    w = _simplex_projection(w / np.trace(m).real if np.trace(m).real > 0 else w)
    return (v * w) @ v.conj().T


def tomography_ququart(counts: CountTable, settings=None) -> DensityMatrix:
    """Linear-inversion ququart tomography, projected to a physical state.

    Frequencies are normalized within each basis group. The least-squares
    solution is mapped to the nearest physical state with
    :func:`physical_projection`.
    """
    settings = settings or tomography_settings()
    rows, freqs = [], []
    for key in counts.settings:
        n = counts.row(key).astype(float)
        if n.sum() == 0:
            continue
        for s, f in zip(settings[key], n / n.sum()):
            rows.append(s.projector.conj().reshape(-1))
            freqs.append(f)
    a = np.array(rows)
    if np.linalg.matrix_rank(a) < 16:
        raise ValueError("analyzer settings are not informationally complete")
    x, *_ = np.linalg.lstsq(a, np.array(freqs, dtype=complex), rcond=None)
    return DensityMatrix((4,), physical_projection(x.reshape(4, 4)))


def tomography_from_probabilities(probs: Mapping, settings=None) -> DensityMatrix:
    """Exact-probability reconstruction (no sampling)."""
    table = CountTable(tuple(probs), np.array([probs[k] for k in probs]),
                       np.array([probs[k] for k in probs]), ExperimentConfig())
    return tomography_ququart(table, settings)


# ----------------------------------------------------- classical bound

@dataclass(frozen=True)
class BoundReport:
    margins: tuple[float, ...]
    mean: float
    mean_std: float
    all_above: bool
    bound: float = CLASSICAL_BOUND


def classical_bound_check(estimates: Sequence[FidelityEstimate],
                          bound: float = CLASSICAL_BOUND) -> BoundReport:
    """Margins (F - 2/3)/sd and the mean with independent-error propagation."""
    if not estimates:
        raise ValueError("need at least one estimate")
    vals = np.array([e.value for e in estimates])
    sds = np.array([e.std_dev for e in estimates])
    margins = tuple(float((v - bound) / s) if s > 0 else
                    (0.0 if v == bound else float(np.sign(v - bound) * np.inf))
                    for v, s in zip(vals, sds))
    mean = float(vals.mean())
    mean_std = float(np.sqrt(np.sum(sds ** 2)) / len(vals))
    return BoundReport(margins, mean, mean_std, bool(np.all(vals > bound)), bound)
