"""Command-line experiment runner.

Every command builds a run spec (config file values overridden by flags),
validates it against ``RUNSPEC_SCHEMA`` and writes its primary results to
``--out`` (default ``$HYBRIDQIT_OUT`` or ``./hybridqit-out``). Primary files
are a pure function of the run spec; wall-clock data goes to ``meta.json``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import hilbert as hb
from . import photonics as ph
from . import protocols as pr
from . import stats as st

OUT_ENV = "HYBRIDQIT_OUT"
SCHEMA_VERSION = 1

_number_pair = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_amps = {"type": "array", "items": _number_pair, "minItems": 1}

RUNSPEC_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hybridqit run spec",
    "type": "object",
    "required": ["version", "command"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "command": {"enum": ["protocol", "optical", "hom-scan", "tomo",
                             "synthesize", "paper-suite"]},
        "seed": {"type": ["integer", "null"], "minimum": 0},
        "q": {"type": "number", "minimum": 0, "maximum": 1},
        "mode": {"enum": ["feedforward", "postselect"]},
        "out": {"type": "string"},
        "check": {"type": "boolean"},
        "protocol": {"enum": sorted(pr.PROTOCOLS)},
        "state": _amps,
        "qubit": _amps,
        "qudit": _amps,
        "d": {"type": "integer", "minimum": 2},
        "experiment": {"enum": ["4to2", "2to4", "cx4"]},
        "variant": {"enum": list(ph.VARIANTS)},
        "q_values": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1},
                     "minItems": 1},
        "exact": {"type": "boolean"},
        "rate": {"type": "number", "exclusiveMinimum": 0},
        "duration": {"type": "number", "exclusiveMinimum": 0},
        "n": {"type": "integer", "minimum": 2, "maximum": 4},
        "gate": {"enum": ["ccz", "cnot", "identity", "toffoli", "random"]},
        "convention": {"enum": list(pr.CONVENTIONS)},
        "trials": {"type": "integer", "minimum": 1},
        "which": {"enum": ["fig4", "fig5", "hom", "cx4"]},
    },
    "allOf": [
        {"if": {"properties": {"command": {"const": "protocol"}}},
         "then": {"required": ["protocol"]}},
        {"if": {"properties": {"command": {"const": "synthesize"}}},
         "then": {"required": ["n", "gate"]}},
        {"if": {"properties": {"command": {"const": "paper-suite"}}},
         "then": {"required": ["which"]}},
    ],
}


class SpecError(Exception):
    pass


# ------------------------------------------------------------ helpers

def parse_amplitudes(text: str) -> list[list[float]]:
    """'0.5,0.5j,1+2j' -> [[0.5, 0.0], [0.0, 0.5], [1.0, 2.0]]"""
    out = []
    for tok in text.split(","):
        tok = tok.strip().replace(" ", "")
        if not tok:
            raise argparse.ArgumentTypeError(f"empty amplitude in {text!r}")
        try:
            z = complex(tok)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad amplitude {tok!r}") from None
        out.append([z.real, z.imag])
    return out


def parse_floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _c(pairs) -> list[complex]:
    return [complex(re, im) for re, im in pairs]


def _pairs(vec) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in np.asarray(vec, dtype=complex).reshape(-1)]


def _matrix_pairs(m) -> list:
    return [_pairs(row) for row in np.asarray(m)]


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


class Outputs:
    def __init__(self, out: Path):
        self.out = out
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str):
        self.files[name] = text

    def write(self, spec: dict, started: float, ok: bool):
        self.out.mkdir(parents=True, exist_ok=True)
        for name, text in self.files.items():
            (self.out / name).write_text(text)
        meta = {
            "spec": spec,
            "version": __version__,
            "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
            "elapsed_s": time.time() - started,
            "checks_passed": ok,
            "files": sorted(self.files),
        }
        (self.out / "meta.json").write_text(_dump(meta))


# ------------------------------------------------------------ commands

def cmd_protocol(spec: dict, outs: Outputs) -> bool:
    name = spec["protocol"]
    mode = spec.get("mode", "feedforward")
    seed = spec.get("seed")
    if name == "merge" and ("qubit" in spec or "qudit" in spec):
        if "qubit" not in spec or "qudit" not in spec:
            raise SpecError("merge needs both --qubit and --qudit")
        a = hb.make_state((2,), _c(spec["qubit"]))
        b = hb.make_state((len(spec["qudit"]),), _c(spec["qudit"]))
        if "d" in spec and spec["d"] != b.dims[0]:
            raise SpecError(f"--d {spec['d']} does not match qudit length {b.dims[0]}")
        joint = hb.tensor(a, b)
    else:
        if "state" not in spec:
            raise SpecError(f"{name} needs --state")
        amps = _c(spec["state"])
        if name == "qit2to4" and len(amps) == 4:
            # (A, B) given as two qubits; B occupies the lower ququart levels
            amps = [amps[0], amps[1], 0, 0, amps[2], amps[3], 0, 0]
        dims = pr.PROTOCOLS[name][1]
        if dims is None:
            if name == "merge":
                d = spec.get("d") or len(amps) // 2
                dims = (2, d)
            else:
                dims = (len(amps),)
        if int(np.prod(dims)) != len(amps):
            raise SpecError(f"{name} expects {int(np.prod(dims))} amplitudes, got {len(amps)}")
        joint = hb.make_state(dims, amps)
    fn = pr.PROTOCOLS[name][0]
    res = fn(joint, mode=mode, seed=seed)
    target = {
        "qit2to2": lambda s: s, "qit4to2": pr.target_4to2, "qit2to4": pr.target_2to4,
        "merge": pr.target_merge, "split": pr.target_split,
    }[name](joint)
    fid = hb.state_fidelity(res.final_state, target)
    ok = (res.outcome_log[0].outcome == 0 or mode == "feedforward") and fid >= 1 - 1e-10
    doc = {"protocol": name, "mode": mode, "seed": seed,
           "input": {"dims": list(joint.dims), "amplitudes": _pairs(joint.amps)},
           "result": res.to_dict(), "target_fidelity": fid, "check_passed": bool(ok)}
    outs.add("result.json", _dump(doc))
    return bool(ok)


def cmd_optical(spec: dict, outs: Outputs) -> bool:
    exp = spec.get("experiment", "4to2")
    q = spec.get("q", 1.0)
    variant = spec.get("variant", "standard")
    amps = _c(spec["state"]) if "state" in spec else None
    if exp == "4to2":
        coeffs = amps or list(ph.PHI_STATES["phi1"])
        if len(coeffs) != 4:
            raise SpecError("4to2 needs 4 amplitudes (eta, kappa, lam, mu)")
        coeffs = list(hb.make_state((4,), coeffs).amps)
        res = ph.run_optical_4to2(coeffs, q, variant)
        target = ph.ideal_4to2(coeffs)
        circ = ph.standard_cx4_circuit() if variant == "standard" else ph.simplified_cx4_circuit()
        circ = circ.then(ph.rule_4to2())
    elif exp == "2to4":
        coeffs = amps or list(ph.PSI_STATES["psi4"])
        if len(coeffs) != 4:
            raise SpecError("2to4 needs 4 amplitudes (eps, zeta, eta, kappa)")
        a = hb.make_state((2,), coeffs[:2]).amps
        b = hb.make_state((2,), coeffs[2:]).amps
        res = ph.run_optical_2to4(a[0], a[1], b[0], b[1], q, variant)
        target = ph.ideal_2to4(a[0], a[1], b[0], b[1])
        circ = ph.standard_cx4_circuit() if variant == "standard" else ph.simplified_cx4_circuit()
        circ = circ.then(ph.rule_2to4())
    else:
        logical = hb.make_state((2, 4), amps) if amps else \
            hb.tensor(hb.plus_state(), hb.basis_state((4,), (0,)))
        if variant != "standard":
            raise SpecError("the cx4 experiment runs the standard variant on arbitrary inputs")
        res = ph.optical_cx4(ph.encode_logical(logical), "standard", q)
        dec = ph.decode_logical(res.vector)
        target = hb.apply(logical, hb.controlled(hb.gate_x4()), [0, 1])
        circ = ph.standard_cx4_circuit()
        fid = hb.state_fidelity(hb.make_state((2, 4), dec), target)
        doc = {"experiment": exp, "q": q, "variant": variant,
               "success_probability": res.success_probability,
               "logical_output": _pairs(dec / np.linalg.norm(dec)),
               "fidelity_interfering_branch": fid}
        outs.add("result.json", _dump(doc))
        outs.add("circuit.json", circ.to_json() + "\n")
        return fid >= 1 - 1e-10 and (q < 1 or abs(res.success_probability - 1 / 27) < 1e-12)
    fid = hb.fidelity(res.rho, target)
    doc = {"experiment": exp, "q": q, "variant": variant,
           "input": _pairs(coeffs), "success_probability": res.success_probability,
           "ideal_branch_probability": res.ideal_probability,
           "distinguishable_branch_probability": res.distinguishable_probability,
           "dims": list(res.dims), "rho": _matrix_pairs(res.rho.mat),
           "target": _pairs(target.amps), "fidelity": fid}
    outs.add("result.json", _dump(doc))
    outs.add("circuit.json", circ.to_json() + "\n")
    return fid > st.CLASSICAL_BOUND


def cmd_hom_scan(spec: dict, outs: Outputs) -> bool:
    qs = spec.get("q_values") or ([spec["q"]] if "q" in spec else [0.0, 0.5, ph.REFERENCE_HOM["q"], 1.0])
    rows = []
    ok = True
    for q in qs:
        c0 = ph.hom_coincidence("zero", q)
        ci = ph.hom_coincidence("infinite", q)
        v = ph.visibility(c0, ci)
        ok &= abs(v - 0.8 * q) < 1e-12
        rows.append({"q": float(q), "c_zero": c0, "c_infinity": ci, "visibility": v})
    outs.add("hom.csv", _csv(rows))
    return ok


def cmd_tomo(spec: dict, outs: Outputs) -> bool:
    amps = _c(spec["state"]) if "state" in spec else list(ph.PHI_STATES["phi5"])
    if len(amps) != 4:
        raise SpecError("tomo needs a ququart state (4 amplitudes)")
    psi = hb.make_state((4,), amps)
    q = spec.get("q", 1.0)
    # white noise of weight 1 - q on top of the pure input
    rho_true = hb.DensityMatrix((4,), q * np.outer(psi.amps, psi.amps.conj())
                                + (1 - q) * np.eye(4) / 4)
    sets = st.tomography_settings()
    probs = st.tomography_probabilities(rho_true, sets)
    if spec.get("exact"):
        rho = st.tomography_from_probabilities(probs, sets)
    else:
        cfg = st.ExperimentConfig(spec.get("rate", 0.22), spec.get("duration", 600.0),
                                  spec.get("seed"))
        table = st.sample_counts(probs, cfg)
        outs.add("counts.csv", table.to_csv())
        rho = st.tomography_ququart(table, sets)
    fid = hb.fidelity(rho, psi)
    evals = np.linalg.eigvalsh(rho.mat)
    doc = {"input": _pairs(psi.amps), "q": q, "exact": bool(spec.get("exact", False)),
           "rho": _matrix_pairs(rho.mat), "fidelity": fid,
           "min_eigenvalue": float(evals.min()), "trace": float(np.trace(rho.mat).real)}
    outs.add("tomo.json", _dump(doc))
    return bool(evals.min() >= -1e-9)


def _named_gate(name: str, n: int, rng) -> np.ndarray:
    dim = 2 ** n
    if name == "identity":
        return np.eye(dim)
    if name == "ccz":
        u = np.eye(dim, dtype=complex)
        u[-1, -1] = -1
        return u
    if name in ("cnot", "toffoli"):
        # flip the last qubit when all others are 1 (CNOT for n=2)
        if name == "cnot" and n != 2:
            # CNOT on the first two qubits, identity on the rest
            cx = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
            return np.kron(cx, np.eye(2 ** (n - 2)))
        u = np.eye(dim)
        u[[-2, -1]] = u[[-1, -2]]
        return u
    return hb.random_unitary(dim, rng)


def cmd_synthesize(spec: dict, outs: Outputs) -> bool:
    n, name = spec["n"], spec["gate"]
    conv = spec.get("convention", "little")
    rng = np.random.default_rng(spec.get("seed"))
    u = _named_gate(name, n, rng)
    gate = pr.synthesize_gate(u, n, conv)
    doc = {"n": n, "gate": name, "convention": conv, "steps": gate.steps,
           "direct_targets": gate.direct_targets()}
    ok = True
    if spec.get("check", False):
        trials = spec.get("trials", 20)
        devs = []
        for _ in range(trials):
            s = hb.random_state((2,) * n, rng)
            got = gate.apply(s, seed=rng).final_state
            devs.append(1 - hb.state_fidelity(got, gate.direct(s)))
        worst = float(max(devs))
        ok = worst <= 1e-10
        doc["check"] = {"trials": trials, "max_infidelity": worst, "passed": ok}
    outs.add("synthesis.json", _dump(doc))
    return ok


def _suite_fidelities(which: str, q: float, spec: dict):
    rng = np.random.default_rng(spec.get("seed"))
    cfg = st.ExperimentConfig(spec.get("rate", 0.22), spec.get("duration", 600.0))
    states = ph.PHI_STATES if which == "fig4" else ph.PSI_STATES
    rows, ests = [], []
    for name, c in states.items():
        if which == "fig4":
            res = ph.run_optical_4to2(c, q)
            target = ph.ideal_4to2(c)
        else:
            res = ph.run_optical_2to4(*c, q=q)
            target = ph.ideal_2to4(*c)
        plan = st.fidelity_plan(target)
        model = hb.fidelity(res.rho, target)
        if spec.get("exact", False):
            est = st.FidelityEstimate(
                st.fidelity_from_probabilities(st.plan_probabilities(res.rho, plan), plan), 0.0)
        else:
            table = st.sample_counts(st.plan_probabilities(res.rho, plan), cfg, rng)
            est = st.fidelity_from_counts(table, target, plan)
        ests.append(est)
        ref, ref_sd = ph.REFERENCE_FIDELITIES[name]
        rows.append({"state": name, "q": float(q), "model_fidelity": model,
                     "estimate": est.value, "std_dev": est.std_dev,
                     "settings": " ".join("".join(s) for s in plan.settings),
                     "success_probability": res.success_probability,
                     "reference_fidelity": ref, "reference_sd": ref_sd,
                     "reference_only": True})
    return rows, ests


def cmd_paper_suite(spec: dict, outs: Outputs) -> bool:
    which = spec["which"]
    q = spec.get("q", 1.0)
    if which in ("fig4", "fig5"):
        rows, ests = _suite_fidelities(which, q, spec)
        outs.add(f"{which}.csv", _csv(rows))
        rep = st.classical_bound_check(ests)
        ref_mean, ref_sd = ph.REFERENCE_AVERAGES[which]
        summary = {"which": which, "q": q, "mean": rep.mean, "mean_std": rep.mean_std,
                   "all_above_classical_bound": rep.all_above,
                   "reference_mean": ref_mean, "reference_sd": ref_sd, "reference_only": True}
        outs.add(f"{which}_summary.json", _dump(summary))
        return rep.all_above
    if which == "hom":
        qs = sorted({0.0, ph.REFERENCE_HOM["q"], 1.0, float(q)})
        rows = []
        for qq in qs:
            v = ph.hom_visibility(qq)
            rows.append({"q": qq, "c_zero": ph.hom_coincidence("zero", qq),
                         "c_infinity": ph.hom_coincidence("infinite", qq), "visibility": v,
                         "reference_v_theory": ph.REFERENCE_HOM["v_theory"],
                         "reference_v_exp": ph.REFERENCE_HOM["v_exp"], "reference_only": True})
        outs.add("hom.csv", _csv(rows))
        v_at_q = ph.hom_visibility(ph.REFERENCE_HOM["q"])
        return abs(ph.hom_visibility(1.0) - 0.8) < 1e-12 and abs(v_at_q - 0.661) < 1e-3
    # cx4
    rng = np.random.default_rng(spec.get("seed"))
    probs = []
    for _ in range(20):
        logical = hb.random_state((2, 4), rng)
        probs.append(ph.optical_cx4(ph.encode_logical(logical), "standard", q).success_probability)
    doc = {"q": q, "variant": "standard", "success_probability_min": min(probs),
           "success_probability_max": max(probs), "expected_at_q1": 1 / 27,
           "reference_only": False}
    outs.add("cx4.json", _dump(doc))
    return q < 1 or max(abs(p - 1 / 27) for p in probs) < 1e-12


COMMANDS = {
    "protocol": cmd_protocol,
    "optical": cmd_optical,
    "hom-scan": cmd_hom_scan,
    "tomo": cmd_tomo,
    "synthesize": cmd_synthesize,
    "paper-suite": cmd_paper_suite,
}


# --------------------------------------------------------------- parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--q", type=float, default=None, help="photon overlap quality")
    common.add_argument("--mode", choices=["feedforward", "postselect"], default=None)
    common.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV})")
    common.add_argument("--config", default=None, help="JSON run spec; flags override it")
    common.add_argument("--check", action="store_true", default=None)

    p = argparse.ArgumentParser(prog="hybridqit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("protocol", parents=[common], help="run a transfer protocol")
    sp.add_argument("protocol", choices=sorted(pr.PROTOCOLS))
    sp.add_argument("--state", type=parse_amplitudes)
    sp.add_argument("--qubit", type=parse_amplitudes)
    sp.add_argument("--qudit", type=parse_amplitudes)
    sp.add_argument("--d", type=int)

    sp = sub.add_parser("optical", parents=[common], help="simulate the photonic setup")
    sp.add_argument("--experiment", choices=["4to2", "2to4", "cx4"])
    sp.add_argument("--state", type=parse_amplitudes)
    sp.add_argument("--variant", choices=list(ph.VARIANTS))

    sp = sub.add_parser("hom-scan", parents=[common], help="HOM dip visibility vs q")
    sp.add_argument("--q-values", dest="q_values", type=parse_floats)

    sp = sub.add_parser("tomo", parents=[common], help="ququart analyzer tomography")
    sp.add_argument("--state", type=parse_amplitudes)
    sp.add_argument("--exact", action="store_true", default=None)
    sp.add_argument("--rate", type=float)
    sp.add_argument("--duration", type=float)

    sp = sub.add_parser("synthesize", parents=[common], help="merge-unitary-split gate")
    sp.add_argument("--n", type=int)
    sp.add_argument("--gate", choices=["ccz", "cnot", "identity", "toffoli", "random"])
    sp.add_argument("--convention", choices=list(pr.CONVENTIONS))
    sp.add_argument("--trials", type=int)

    sp = sub.add_parser("paper-suite", parents=[common], help="reproduce figure tables")
    sp.add_argument("--which", type=str.lower, choices=["fig4", "fig5", "hom", "cx4"])
    sp.add_argument("--exact", action="store_true", default=None)
    sp.add_argument("--rate", type=float)
    sp.add_argument("--duration", type=float)
    return p


def make_spec(args: argparse.Namespace) -> dict:
    spec: dict = {}
    if args.config:
        try:
            spec = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot read config {args.config}: {exc}") from None
        if spec.get("command", args.command) != args.command:
            raise SpecError(f"config is for {spec['command']!r}, not {args.command!r}")
    spec.setdefault("version", SCHEMA_VERSION)
    spec["command"] = args.command
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        spec[key] = val
    return spec


def validate(spec: dict):
    try:
        jsonschema.validate(spec, RUNSPEC_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SpecError(f"run spec invalid at {path}: {exc.message}") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    try:
        spec = make_spec(args)
        validate(spec)
        out = Path(spec.get("out") or os.environ.get(OUT_ENV) or "hybridqit-out")
        outs = Outputs(out)
        ok = COMMANDS[spec["command"]](spec, outs)
    except (SpecError, ValueError) as exc:
        print(f"hybridqit: error: {exc}", file=sys.stderr)
        return 2
    outs.write(spec, started, ok)
    for name in sorted(outs.files):
        print(out / name)
    if spec.get("check") and not ok:
        print("hybridqit: checks failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
