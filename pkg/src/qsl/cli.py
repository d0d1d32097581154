"""``qsl`` command line: circuits, optics, tomo and report.

Exit codes: 0 success, 1 verification failure, 2 input error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from functools import reduce
from pathlib import Path
from typing import Sequence

import numpy as np

from . import gates as G
from . import shortcuts as sc
from .circuit_io import dumps as dump_circuit
from .metrics import (
    MetricError,
    TruthTableError,
    control_contrasts,
    fidelity,
    ideal_truth_table,
    inquisition,
    linear_entropy,
    normalize_rows,
    tangle,
)
from .optics.description import dumps_experiment
from .optics.experiment import HeraldError, heralded_map
from .optics.layouts import BalanceError, cu_layout, ppbs_cz_layout, toffoli_layout
from .optics.sampling import prep_states, sample_counts
from .optics.source import DEFAULT_OVERLAP, EPS_FULL_POWER, SourceConfig
from .qudit import max_deviation_up_to_phase, unitary_of
from .records import (
    MeasurementSetting,
    RecordFormatError,
    basis_group,
    dumps_counts,
    group_records,
    loads_counts,
    tomography_settings,
)
from .report_io import (
    PUBLISHED,
    SchemaError,
    anchor,
    decode_matrix,
    encode_matrix,
    gate_name,
    read_json,
    write_json,
)
from .tomography import (
    TomographyError,
    chi_of_unitary,
    monte_carlo_errors,
    preparation_labels,
    process_fidelity,
    process_tomography,
    state_tomography,
)

EXIT_OK, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2
VERIFY_TOL = 1e-9


class InputError(Exception):
    pass


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("QSL_SEED")
    if env is None:
        raise InputError("a seed is required: pass --seed or set QSL_SEED")
    try:
        return int(env)
    except ValueError:
        raise InputError(f"QSL_SEED must be an integer, got {env!r}") from None


def _pattern(text: str | None, n: int, default: int = 1) -> tuple[int, ...]:
    if text is None:
        return (default,) * n
    if len(text) != n or set(text) - {"0", "1"}:
        raise InputError(f"pattern {text!r} must be {n} bits")
    return tuple(int(c) for c in text)


def _out_dir(path: str) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise InputError(f"cannot create {path}: {e}") from None
    return p


# -- circuits -------------------------------------------------------------------------

def _build_circuit(args):
    """(circuit, ideal qubit-block unitary, compare-up-to-phase, parameters)."""
    kind = args.kind
    if kind == "ts":
        c = sc.build_ts()
        return c, np.diag([1, 1, 1, 1, 1, -1, 1, 1]).astype(complex), False, {}
    if kind == "toffoli":
        f = _pattern(args.pattern, 2, default=0)
        c = sc.toffoli_from_ts(f)
        return c, sc.ideal_multi_controlled(2, G.X, (f[1], f[0])), False, {"flip_pattern": list(f)}
    if kind == "textbook6":
        return sc.textbook_toffoli_6cnot(), sc.ideal_multi_controlled(2, G.X, (1, 1)), True, {}
    n = args.n
    if n is None or n < 1:
        raise InputError(f"{kind} needs --n >= 1")
    if kind == "ntoffoli":
        p = _pattern(args.pattern, n)
        return sc.build_n_toffoli_sign(n, p), sc.ideal_multi_controlled(n, G.Z, p), False, \
            {"n": n, "pattern": list(p)}
    if kind == "cnz":
        p = _pattern(args.pattern, n)
        th = args.theta if args.theta is not None else math.pi
        c = sc.build_cn_z_theta(n, th, p)
        return c, sc.ideal_multi_controlled(n, G.z_theta_matrix(th), p), False, \
            {"n": n, "pattern": list(p), "theta": th}
    if kind == "cnu":
        p = _pattern(args.pattern, n)
        if args.gate not in G.NAMED:
            raise InputError(f"unknown gate {args.gate!r}; choose from {sorted(G.NAMED)}")
        u = G.NAMED[args.gate].matrix
        c, alpha = sc.build_cn_u(n, u, p)
        return c, sc.ideal_multi_controlled(n, np.exp(-1j * alpha) * u, p), False, \
            {"n": n, "pattern": list(p), "gate": args.gate, "alpha": alpha}
    if kind == "addcontrols":
        if args.k not in (1, 2):
            raise InputError("addcontrols needs --k 1 or 2")
        q = _pattern(args.pattern, n)
        inner, u = sc.single_control_fixture(args.k)
        c = sc.add_controls(inner, n, q)
        return c, sc.ideal_multi_controlled(n + 1, u, (1,) + q), False, \
            {"n": n, "k": args.k, "pattern": list(q),
             "added_two_qubit_gates": c.two_qubit_gate_count() - inner.two_qubit_gate_count()}
    raise InputError(f"unknown circuit kind {kind!r}")


def cmd_circuits(args) -> int:
    circuit, ideal, up_to_phase, params = _build_circuit(args)
    cost = sc.cost_of(circuit)
    doc = {"kind": "circuit_costs", "circuit": args.kind, "parameters": params,
           "dims": list(circuit.shape.dims), "costs": cost.as_dict()}
    if args.kind in ("ntoffoli", "cnz", "cnu") and args.n >= 2:
        ref = "nT" if args.kind == "ntoffoli" else "cnU"
        doc["qubit_only_costs"] = sc.qubit_only_cost(ref, args.n).as_dict()
        doc["qubit_only_n5_reference"] = sc.QUBIT_ONLY_N5_REFERENCE
    status = EXIT_OK
    if args.verify:
        full = unitary_of(circuit)
        block = sc.restrict_to_qubits(full, circuit.shape)
        if up_to_phase:
            dev = max_deviation_up_to_phase(block, ideal)
        else:
            dev = float(np.abs(block - ideal).max())
        leak = sc.leakage(full, circuit.shape)
        ok = dev <= VERIFY_TOL and leak <= VERIFY_TOL
        doc["verification"] = {"passed": ok, "max_deviation": dev, "leakage": leak}
        print(f"{'PASS' if ok else 'FAIL'} max_deviation={dev:.3e} leakage={leak:.3e}")
        status = EXIT_OK if ok else EXIT_VERIFY
    print(f"two_qubit_gates={cost.two_qubit_gate_count}")
    if args.out:
        out = _out_dir(args.out)
        (out / "circuit.txt").write_text(dump_circuit(circuit))
        write_json(out / "costs.json", doc)
    return status


# -- optics ---------------------------------------------------------------------------

def _partial_trace(rho: np.ndarray, keep: Sequence[int], n: int) -> np.ndarray:
    t = rho.reshape([2] * (2 * n))
    drop = [i for i in range(n) if i not in keep]
    for k, i in enumerate(sorted(drop, reverse=True)):
        m = n - k
        t = np.trace(t, axis1=i, axis2=i + m)
    d = 2 ** len(keep)
    return t.reshape(d, d)


def _ket(label: str) -> np.ndarray:
    return reduce(np.kron, prep_states(label))


def _insert_none(setting: MeasurementSetting, at: int) -> MeasurementSetting:
    p = list(setting.projectors)
    p.insert(at, None)
    return MeasurementSetting(tuple(p))


# Two-qubit output-state datasets of the Toffoli: (prep, untouched control index)
TOFFOLI_STATES = {
    "c1t_on": ("HDH", 0),
    "c1t_off": ("VDH", 0),
    "c2t_on": ("DHH", 1),
    "c2t_off": ("DVH", 1),
}


def _parse_layout(args):
    name = args.layout
    theta = args.theta
    if name.startswith("cu:"):
        name, theta = "cu", float(name[3:])
    if name == "cz":
        return ppbs_cz_layout(), {"layout": "cz", "theta": math.pi, "gate": gate_name(math.pi)}
    if name == "cu":
        if theta is None:
            raise InputError("cu layout needs --theta (or cu:<theta>)")
        return cu_layout(theta), {"layout": "cu", "theta": theta, "gate": gate_name(theta)}
    if name == "toffoli":
        return toffoli_layout(), {"layout": "toffoli"}
    raise InputError(f"unknown layout {args.layout!r}")


def cmd_optics(args) -> int:
    seed = _seed(args)
    if args.power < 0:
        raise InputError("--power must be non-negative")
    if not 0 <= args.xi <= 1:
        raise InputError("--xi must lie in [0, 1]")
    exp, meta = _parse_layout(args)
    source = SourceConfig.from_power(args.power, args.eps_full, args.xi)
    out = _out_dir(args.out)
    hm = heralded_map(exp, SourceConfig(0.0, args.xi))
    target = exp.target
    fid = hm.process_fidelity(target)
    ideal_fid = heralded_map(exp).process_fidelity(target)
    doc = {
        "kind": "optics",
        **meta,
        "seed": seed,
        "power": args.power,
        "pair_amplitude": source.pair_amplitude,
        "mode_overlap": args.xi,
        "shots": None,
        "success_probability": hm.success_probability,
        "success_per_input": hm.success_per_input.tolist(),
        "heralded_map_fidelity": fid,
        "ideal_heralded_map_fidelity": ideal_fid,
        "datasets": {},
    }
    (out / "experiment.txt").write_text(dumps_experiment(exp))
    datasets = []
    if meta["layout"] in ("cz", "cu"):
        shots = args.shots or 10**8
        preps = preparation_labels(2)
        recs = sample_counts(exp, preps, tomography_settings(2), shots, seed, source)
        datasets.append(("process", "process", recs, {"ideal_unitary": encode_matrix(target)}))
    else:
        shots = args.shots or 10**8
        preps = ["".join("HV"[(j >> (2 - q)) & 1] for q in range(3)) for j in range(8)]
        recs = sample_counts(exp, preps, basis_group("ZZZ"), shots, seed, source)
        datasets.append(("truth", "truthtable", recs, {"ideal_unitary": encode_matrix(target)}))
        for k, (name, (prep, skip)) in enumerate(sorted(TOFFOLI_STATES.items())):
            settings = [_insert_none(s, skip) for s in tomography_settings(2)]
            recs = sample_counts(exp, [prep], settings, shots, seed + 1 + k, source)
            psi = target @ _ket(prep)
            keep = [i for i in range(3) if i != skip]
            ideal = _partial_trace(np.outer(psi, psi.conj()), keep, 3)
            datasets.append((f"state_{name}", "state", recs, {"ideal_state": encode_matrix(ideal)}))
    doc["shots"] = shots
    for name, kind, recs, ideal in datasets:
        csv_name = f"{name}.csv"
        (out / csv_name).write_text(dumps_counts(recs))
        sidecar = {"kind": kind, "dataset": name, **meta, **ideal,
                   "success_probability": hm.success_probability,
                   "power": args.power, "mode_overlap": args.xi}
        write_json(out / f"{name}.ideal.json", sidecar)
        doc["datasets"][name] = {"counts": csv_name, "ideal": f"{name}.ideal.json", "kind": kind}
    write_json(out / "optics.json", doc)
    print(f"success_probability={hm.success_probability:.12g} (1/{1 / hm.success_probability:.6g})")
    print(f"heralded_map_fidelity={fid:.12g} (indistinguishable photons: {ideal_fid:.12g})")
    return EXIT_OK


# -- tomo -----------------------------------------------------------------------------

def _load_records(path: str):
    try:
        return loads_counts(Path(path).read_text())
    except OSError as e:
        raise InputError(f"{path}: {e}") from None


def _sidecar(args) -> dict | None:
    path = args.ideal
    if path is None:
        guess = Path(args.counts).with_suffix("").with_suffix(".ideal.json")
        if not guess.exists():
            return None
        path = guess
    return read_json(path, kind=args.mode)


def _state_metrics(rho, ideal) -> dict:
    m = {"linear_entropy": linear_entropy(rho)}
    if rho.shape == (4, 4):
        m["tangle"] = tangle(rho)
    if ideal is not None:
        m["fidelity"] = fidelity(rho, ideal)
    return m


def _truth_table(records, n: int) -> np.ndarray:
    d = 2**n
    m = np.zeros((d, d))
    for r in records:
        j = int("".join("0" if c == "H" else "1" for c in r.prep), 2)
        k = int("".join("0" if c == "H" else "1" for c in r.setting.projectors), 2)
        m[j, k] += r.counts
    return normalize_rows(m)


def _truth_metrics(records, ideal_table) -> dict:
    n = len(records[0].setting)
    table = _truth_table(records, n)
    out = {"inquisition": inquisition(table, ideal_table)}
    for bits, c in control_contrasts(table, ideal_table).items():
        out["contrast_" + "".join(map(str, bits))] = c
    for j in range(table.shape[0]):
        for k in range(table.shape[1]):
            out[f"table_{j}_{k}"] = table[j, k]
    return out


def cmd_tomo(args) -> int:
    seed = _seed(args)
    records = _load_records(args.counts)
    if not records:
        raise InputError(f"{args.counts}: no records")
    side = _sidecar(args)
    doc = {"kind": f"tomo_{args.mode}", "mode": args.mode, "counts": Path(args.counts).name,
           "seed": seed, "n_samples": args.samples}
    if side is not None:
        doc["dataset"] = side.get("dataset")
        doc["success_probability"] = side.get("success_probability")
        for key in ("layout", "theta", "gate", "power", "mode_overlap"):
            if key in side:
                doc[key] = side[key]
    if args.mode == "state":
        ideal = decode_matrix(side["ideal_state"]) if side and "ideal_state" in side else None

        def estimator(recs):
            return _state_metrics(state_tomography(recs), ideal)

        rho = state_tomography(records)
        doc["rho"] = encode_matrix(rho)
        if ideal is not None:
            doc["ideal_metrics"] = _state_metrics(ideal, ideal)
        doc.update(_state_metrics(rho, ideal))
    elif args.mode == "process":
        u = decode_matrix(side["ideal_unitary"]) if side and "ideal_unitary" in side else None
        chi_ideal = chi_of_unitary(u) if u is not None else None

        def estimator(recs):
            outs = {p: state_tomography([r for r in recs if r.prep == p]) for p in group_records(recs)}
            est = process_tomography(outs)
            vals = {"mean_linear_entropy": float(np.mean([linear_entropy(r) for r in outs.values()]))}
            if chi_ideal is not None:
                vals["fidelity"] = process_fidelity(est.chi, chi_ideal)
            return vals

        outs = {p: state_tomography([r for r in records if r.prep == p]) for p in group_records(records)}
        est = process_tomography(outs, doc.get("success_probability"))
        doc["chi"] = encode_matrix(est.chi)
        doc["pauli_labels"] = list(est.labels)
        doc["trace_residual"] = est.trace_residual
        doc["mean_linear_entropy"] = float(np.mean([linear_entropy(r) for r in outs.values()]))
        if chi_ideal is not None:
            doc["fidelity"] = process_fidelity(est.chi, chi_ideal)
    else:
        if side is None or "ideal_unitary" not in side:
            raise InputError("truthtable mode needs an ideal sidecar (--ideal)")
        ideal_table = ideal_truth_table(decode_matrix(side["ideal_unitary"])).matrix

        def estimator(recs):
            return _truth_metrics(recs, ideal_table)

        vals = _truth_metrics(records, ideal_table)
        n = len(records[0].setting)
        doc["table"] = _truth_table(records, n).tolist()
        doc["ideal_table"] = ideal_table.tolist()
        doc["inquisition"] = vals["inquisition"]
        doc["contrasts"] = {k[len("contrast_"):]: v for k, v in vals.items() if k.startswith("contrast_")}
    mc = monte_carlo_errors(records, estimator, args.samples, seed)
    doc["error_bars"] = dict(sorted(mc.std.items()))
    doc["n_failed"] = mc.n_failed
    if args.mode == "truthtable":
        d = len(doc["table"])
        doc["table_std"] = [[mc.std.get(f"table_{j}_{k}", 0.0) for k in range(d)] for j in range(d)]
        doc["error_bars"] = {k: v for k, v in doc["error_bars"].items() if not k.startswith("table_")}
    write_json(args.out, doc)
    summary = {k: doc[k] for k in ("fidelity", "linear_entropy", "tangle", "inquisition") if k in doc}
    print(" ".join(f"{k}={v:.6f}" for k, v in summary.items()) or "ok")
    return EXIT_OK


# -- report ---------------------------------------------------------------------------

def _ve(doc, key):
    return {"value": doc.get(key), "std": doc.get("error_bars", {}).get(key)}


def cmd_report(args) -> int:
    docs = [read_json(p) for p in args.inputs]
    truth, states, gates = [], [], []
    for path, d in zip(args.inputs, docs):
        kind = d.get("kind")
        entry_src = Path(path).name
        if kind == "tomo_truthtable":
            truth.append({
                "source": entry_src,
                "power": d.get("power"),
                "table": d["table"],
                "table_std": d.get("table_std"),
                "ideal_table": d["ideal_table"],
                "inquisition": _ve(d, "inquisition"),
                "contrasts": {k: {"value": v, "std": d["error_bars"].get("contrast_" + k)}
                              for k, v in sorted(d["contrasts"].items())},
                "published_reference": {
                    "label": "published experimental value (reference only)",
                    "inquisition": anchor(PUBLISHED["truth_table"]["inquisition"]),
                    "contrasts": {k: anchor(v) for k, v in PUBLISHED["truth_table"]["contrast"].items()},
                    "contrast_11_quarter_power": anchor(PUBLISHED["truth_table"]["contrast_11_quarter_power"]),
                },
            })
        elif kind == "tomo_state":
            name = (d.get("dataset") or "").removeprefix("state_")
            ref = PUBLISHED["output_states"].get(name)
            states.append({
                "source": entry_src,
                "dataset": name,
                "fidelity": _ve(d, "fidelity"),
                "linear_entropy": _ve(d, "linear_entropy"),
                "tangle": _ve(d, "tangle"),
                "ideal": d.get("ideal_metrics"),
                "published_reference": None if ref is None else {
                    "label": "published experimental value (reference only)",
                    "fidelity": anchor(ref[0]), "linear_entropy": anchor(ref[1]), "tangle": anchor(ref[2]),
                },
            })
        elif kind == "tomo_process":
            name = d.get("gate") or "process"
            ref = PUBLISHED["gate_processes"].get(name)
            gates.append({
                "source": entry_src,
                "gate": name,
                "theta": d.get("theta"),
                "process_fidelity": _ve(d, "fidelity"),
                "mean_linear_entropy": _ve(d, "mean_linear_entropy"),
                "success_probability": d.get("success_probability"),
                "published_reference": None if ref is None else {
                    "label": "published experimental value (reference only)",
                    "process_fidelity": anchor(ref[0]), "mean_linear_entropy": anchor(ref[1]),
                },
            })
        else:
            raise InputError(f"{path}: not a tomography report (kind {kind!r})")
    report = {"kind": "report", "truth_table": truth, "output_states": states, "gate_processes": gates}
    write_json(args.out, report)
    print(f"report: {len(truth)} truth tables, {len(states)} states, {len(gates)} gates")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("circuits", help="build a shelving circuit, report costs, optionally verify")
    c.add_argument("kind", choices=["ts", "toffoli", "ntoffoli", "cnz", "cnu", "textbook6", "addcontrols"])
    c.add_argument("--n", type=int, help="number of controls (or added controls)")
    c.add_argument("--pattern", help="fire pattern p_1..p_n as a bit string")
    c.add_argument("--theta", type=float)
    c.add_argument("--gate", default="X", help="named single-qubit gate for cnu")
    c.add_argument("--k", type=int, default=1, help="target qubits of the addcontrols fixture")
    c.add_argument("--verify", action="store_true")
    c.add_argument("--out")
    c.set_defaults(func=cmd_circuits)

    o = sub.add_parser("optics", help="simulate a heralded layout and sample counts")
    o.add_argument("layout", help="cz, cu (with --theta), cu:<theta> or toffoli")
    o.add_argument("--theta", type=float)
    o.add_argument("--power", type=float, default=1.0, help="pump power relative to full power")
    o.add_argument("--eps-full", type=float, default=EPS_FULL_POWER, help="pair amplitude at full power")
    o.add_argument("--xi", type=float, default=DEFAULT_OVERLAP, help="independent-photon mode overlap")
    o.add_argument("--shots", type=int)
    o.add_argument("--seed", type=int)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_optics)

    t = sub.add_parser("tomo", help="reconstruct states, processes or truth tables from counts")
    t.add_argument("mode", choices=["state", "process", "truthtable"])
    t.add_argument("--counts", required=True)
    t.add_argument("--ideal", help="ideal sidecar JSON (default: <counts>.ideal.json if present)")
    t.add_argument("--samples", type=int, default=20, help="Monte-Carlo resamples")
    t.add_argument("--seed", type=int)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_tomo)

    r = sub.add_parser("report", help="consolidate tomography reports with published anchors")
    r.add_argument("--inputs", nargs="+", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, SchemaError, RecordFormatError, TomographyError, MetricError,
            TruthTableError, HeraldError, BalanceError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
