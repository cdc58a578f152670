"""Command-line interface: ``hexsyn <command> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path


from . import io as hio
from .analysis import (
    ChangeRateTable,
    bootstrap_class_means,
    change_rates,
    class_means,
    classify_entries,
    correlation_csv,
    correlation_matrix,
    detection_events,
    layout_for,
)
from .circuit import (
    InputState,
    build_cycle_circuit,
    build_gauge_circuit,
    build_ghz_circuit,
    build_stabilizer_circuit,
)
from .code import build_layout, verify_layout
from .noise import CONVENTIONS, DEPOL_PARAMETER, NoiseModel, attach_noise

EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _state_from_label(label: str) -> InputState:
    zs, xs = set("01"), set("+-")
    if set(label) <= zs:
        return InputState("Z", tuple(int(c) for c in label))
    if set(label) <= xs:
        return InputState("X", tuple(0 if c == "+" else 1 for c in label))
    raise UsageError(f"input {label!r} must use only 0/1 or only +/-")


def _existing(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"file not found: {path}")
    return p


def _add_circuit_args(p):
    g = p.add_argument_group("circuit")
    g.add_argument("--circuit", help="circuit text file (overrides the builder options)")
    g.add_argument("--family", choices=["gauge", "stabilizer", "cycle", "ghz"], default="cycle")
    g.add_argument("--distance", type=int, default=3)
    g.add_argument("--operator", help="gauge or stabilizer name, e.g. Z0 or SX1")
    g.add_argument("--input", help="input label such as 01 or +-")
    g.add_argument("--form", choices=["Z", "X"], help="Pauli form a gauge is measured in")
    g.add_argument("--mode", default="z", help="cycle mode: z, x or full")
    g.add_argument("--cycles", type=int, default=2)
    g.add_argument("--ghz-qubits", type=int, default=3)


def _circuit(args):
    if args.circuit:
        return hio.circuit_from_text(_existing(args.circuit).read_text())
    if args.family == "ghz":
        return build_ghz_circuit(args.ghz_qubits)
    layout = build_layout(args.distance)
    if args.family == "cycle":
        return build_cycle_circuit(layout, args.mode, args.cycles)
    if not args.operator:
        raise UsageError(f"--operator is required for {args.family} circuits")
    op = layout.operator(args.operator)
    if args.family == "gauge":
        form = args.form or op.kind
        label = args.input or ("0" if form == "Z" else "+") * op.weight
        return build_gauge_circuit(layout, op, _state_from_label(label), form)
    label = args.input or ("0" if op.pauli_type == "Z" else "+") * len(op.pauli.qubits)
    return build_stabilizer_circuit(layout, op, _state_from_label(label))


def _add_noise_args(p):
    g = p.add_argument_group("noise")
    g.add_argument("--noise", help="noise-model JSON file (overrides the options below)")
    g.add_argument("--p", type=float, default=0.0, help="noise parameter")
    g.add_argument("--convention", choices=CONVENTIONS, default=DEPOL_PARAMETER)
    g.add_argument("--eta", type=float, help="bias; selects the biased model")
    g.add_argument("--gamma", type=float, default=0.0, help="amplitude damping per gate")
    g.add_argument("--delta", type=float, default=0.0, help="readout asymmetry")


def _model(args) -> NoiseModel:
    if args.noise:
        return hio.noise_from_dict(hio.read_json(_existing(args.noise)))
    if args.eta is not None:
        return NoiseModel.biased(args.p, args.eta, gamma=args.gamma, delta=args.delta)
    return NoiseModel.depolarizing(args.p, args.convention, gamma=args.gamma, delta=args.delta)


def _emit(text: str, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_layout(args):
    layout = build_layout(args.distance)
    report = verify_layout(layout)
    data = hio.layout_to_dict(layout)
    if args.out:
        hio.write_json(args.out, data)
    print(
        f"distance {layout.distance}: {layout.num_qubits} qubits, "
        f"{len(layout.data_qubits)} data, {len(layout.gauges)} gauges, "
        f"{len(layout.stabilizers)} stabilizers, checks {'passed' if report.ok else 'FAILED'}"
    )
    return 0 if report.ok else 1


def cmd_circuit(args):
    circuit = _circuit(args)
    if args.device_map:
        if args.device_map == "builtin27":
            circuit = hio.on_device(circuit)
        else:
            data = hio.read_json(_existing(args.device_map))
            circuit = hio.on_device(circuit, data["qubits"], int(data["num_device_qubits"]))
    _emit(hio.circuit_to_text(circuit), args.out)
    return 0


def cmd_sample(args):
    circuit = _circuit(args)
    noisy = attach_noise(circuit, _model(args))
    if args.engine == "pauli":
        from .engine import sample_shots

        ds = sample_shots(noisy, args.shots, args.seed, args.workers)
    else:
        from .dense import run_trajectories

        ds = run_trajectories(noisy, args.shots, args.seed)
    ds.info.update({"noise": noisy.model.to_dict(), "engine": args.engine})
    hio.save_dataset(ds, args.out)
    print(f"wrote {ds.num_shots} shots x {circuit.num_bits} bits to {args.out}")
    return 0


def cmd_exact(args):
    circuit = _circuit(args)
    model = _model(args)
    if args.engine == "dense":
        from .dense import distribution_csv, exact_distribution

        _emit(distribution_csv(exact_distribution(circuit, model)), args.out)
        return 0
    from .analysis import define_detectors
    from .engine import HeterogeneousRatesError, change_rate_polynomial, exact_detector_rates, fault_sensitivity

    dets = [d for d in define_detectors(circuit) if d.defined]
    sens = fault_sensitivity(attach_noise(circuit, model), [d.bits for d in dets])
    rates = exact_detector_rates(sens)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["operator_id", "cycle", "rate", "m", "polynomial"])
    for k, d in enumerate(dets):
        try:
            poly = str(change_rate_polynomial(sens, k))
        except HeterogeneousRatesError:
            poly = "heterogeneous"
        w.writerow([d.operator, d.cycle, repr(float(rates[k])), int(sens.m[k]), poly])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_analyze(args):
    ds = hio.load_dataset(_existing(args.data))
    _emit(change_rates(ds, args.confidence).to_csv(), args.out)
    return 0


def _correlate(ds, out_dir: Path, resamples: int, seed: int, stem: str = "correlations"):
    layout = layout_for(ds.circuit)
    stream = detection_events(ds, layout)
    matrix = correlation_matrix(stream)
    labels = classify_entries(matrix, layout)
    (out_dir / f"{stem}.csv").write_text(correlation_csv(matrix, labels))
    means = class_means(matrix.values, labels)
    errors = bootstrap_class_means(stream, layout, resamples, seed) if resamples else {}
    hio.write_json(out_dir / f"{stem}_classes.json", {"means": means, "bootstrap_se": errors})
    return matrix, means, errors


def cmd_correlate(args):
    ds = hio.load_dataset(_existing(args.data))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, means, errors = _correlate(ds, out, args.resamples, args.seed)
    for cls, v in means.items():
        se = errors.get(cls)
        print(f"{cls:>10}: {v:+.5f}" + (f" +/- {se:.5f}" if se is not None else ""))
    return 0


def _fit_inputs(args):
    if args.data:
        sets = [hio.load_dataset(_existing(p)) for p in args.data]
        return [d.circuit for d in sets], [change_rates(d) for d in sets]
    if not args.rates or len(args.rates) != len(args.circuits or []):
        raise UsageError("give --data archives, or equally many --rates and --circuits files")
    circuits = [hio.circuit_from_text(_existing(c).read_text()) for c in args.circuits]
    tables = [ChangeRateTable.from_csv(_existing(r).read_text()) for r in args.rates]
    return circuits, tables


def _run_fit(circuits, tables, args):
    from .fitting import (
        ExactPredictor,
        SampledPredictor,
        fit_global,
        fit_inhomogeneous,
    )

    if args.predictor == "exact":
        predictor = ExactPredictor(circuits)
    else:
        predictor = SampledPredictor(circuits, args.shots, args.seed)
    if args.variant == "inhomogeneous":
        start = fit_global(tables, "uniform", predictor)
        layout = layout_for(circuits[0])
        return predictor, fit_inhomogeneous(tables, layout, predictor, start.params["p"], args.budget)
    return predictor, fit_global(tables, args.variant, predictor)


def cmd_fit(args):
    circuits, tables = _fit_inputs(args)
    _, result = _run_fit(circuits, tables, args)
    data = result.to_dict()
    if args.out:
        hio.write_json(args.out, data)
    print(json.dumps({k: data[k] for k in ("variant", "params", "cost", "evaluations", "converged")}))
    return 0


def cmd_ingest(args):
    circuit = hio.circuit_from_text(_existing(args.circuit).read_text())
    order = args.device_map
    if order not in ("bit", "reversed"):
        order = hio.read_column_map(_existing(order))
    ds = hio.ingest(_existing(args.input), circuit, order, args.counts)
    hio.save_dataset(ds, args.out)
    print(f"ingested {ds.num_shots} shots into {args.out}")
    return 0


def cmd_report(args):
    from . import plotting

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sets = [hio.load_dataset(_existing(p)) for p in args.data]
    summary = {"datasets": []}
    tables = []
    for k, ds in enumerate(sets):
        stem = f"run{k}"
        table = change_rates(ds)
        tables.append(table)
        (out / f"{stem}_rates.csv").write_text(table.to_csv())
        title = ds.metadata.get("mode") or ds.metadata.get("operator") or ds.metadata.get("family", "")
        plotting.plot_change_rates(table, out / f"{stem}_rates.png", title=str(title))
        entry = {"file": str(args.data[k]), "shots": ds.num_shots, "metadata": ds.metadata}
        if ds.metadata.get("cycles", 1) > 1 or len(ds.metadata.get("analysed", [])) > 1:
            matrix, means, errors = _correlate(ds, out, args.resamples, args.seed, f"{stem}_correlations")
            plotting.plot_correlations(matrix, out / f"{stem}_correlations.png", title=str(title))
            plotting.plot_class_means(means, out / f"{stem}_classes.png", errors or None)
            entry["class_means"] = means
        summary["datasets"].append(entry)
    if args.variant:
        predictor, result = _run_fit([d.circuit for d in sets], tables, args)
        hio.write_json(out / "fit.json", result.to_dict())
        plotting.plot_fit(
            [t.rates() for t in tables],
            predictor.predict(result.model()),
            [f"run{k}" for k in range(len(sets))],
            out / "fit.png",
        )
        summary["fit"] = result.to_dict()
    hio.write_json(out / "summary.json", hio._jsonable(summary))
    print(f"report written to {out}")
    return 0


def _add_fit_args(p, required_variant=True):
    p.add_argument(
        "--variant",
        choices=["uniform", "biased", "inhomogeneous"],
        required=required_variant,
        default=None,
    )
    p.add_argument("--predictor", choices=["exact", "sampled"], default="exact")
    p.add_argument("--shots", type=int, default=2048, help="shots per sampled prediction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=500, help="evaluation budget (inhomogeneous)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hexsyn", description="Heavy-hex syndrome simulation and analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("layout", help="build and check a code layout")
    p.add_argument("--distance", type=int, default=3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("circuit", help="write a circuit in text form")
    _add_circuit_args(p)
    p.add_argument(
        "--device-map",
        help="'builtin27' or a JSON file {qubits, num_device_qubits} relabelling layout qubits",
    )
    p.add_argument("--out")
    p.set_defaults(func=cmd_circuit)

    p = sub.add_parser("sample", help="sample noisy shots into an archive")
    _add_circuit_args(p)
    _add_noise_args(p)
    p.add_argument("--shots", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--engine", choices=["pauli", "trajectories"], default="pauli")
    p.add_argument("--out", required=True, help="archive path; .bin selects the packed format")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("exact", help="exact detector rates or outcome distribution")
    _add_circuit_args(p)
    _add_noise_args(p)
    p.add_argument("--engine", choices=["pauli", "dense"], default="pauli")
    p.add_argument("--out")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("analyze", help="change rates of a shot archive")
    p.add_argument("--data", required=True)
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("correlate", help="detection-event correlations of a shot archive")
    p.add_argument("--data", required=True)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--resamples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("fit", help="fit a noise model to change rates")
    p.add_argument("--data", nargs="+", help="shot archives")
    p.add_argument("--rates", nargs="+", help="change-rate CSV files")
    p.add_argument("--circuits", nargs="+", help="circuit files matching --rates")
    _add_fit_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("ingest", help="convert recorded bitstrings into an archive")
    p.add_argument("--circuit", required=True)
    p.add_argument("--input", required=True)
    p.add_argument(
        "--device-map",
        required=True,
        help="raw column order: 'bit', 'reversed' or a JSON file with a 'columns' list",
    )
    p.add_argument("--counts", action="store_true", help="lines are 'bitstring count'")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("report", help="tables, fits and figures for shot archives")
    p.add_argument("--data", nargs="+", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--resamples", type=int, default=50)
    _add_fit_args(p, required_variant=False)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hexsyn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError) as exc:
        print(f"hexsyn: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
