"""Command-line pipeline: simulate, reconstruct, fit, report.

Every artifact is JSON or CSV, carries the resolved seed and a schema
version, and is written atomically (temp file + rename).  Runs are
reproducible: the same configuration and seed produce byte-identical
numeric outputs.  Exit codes: 0 success (including soft-failed fits,
reported with ``converged: false``), 2 configuration error, 3 numeric or
rank error, 4 missing artifacts.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
import scipy.linalg

from .dynamics import principal_log
from .estimation import (
    FitReport,
    bootstrap,
    direct_hamiltonian,
    estimate_fields,
    fit_relaxation_model,
    frobenius_distance,
    mle_liouvillian,
)
from .exceptions import (
    BranchCutError,
    CompletenessError,
    IllConditionedError,
    LiouvlabError,
    SingularProcessError,
)
from .superop import Superoperator
from .synthlab import NoiseSpec, generate_dataset, make_scenario
from .tomography import TomographySet, reconstruct_process, stepwise_processes

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_MISSING = 4

NUMERIC_ERRORS = (BranchCutError, SingularProcessError, CompletenessError, IllConditionedError)


def _fmt(x) -> str:
    """Full round-trip float formatting for CSV output."""
    return format(float(x), ".17g")


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, obj: dict):
    _write_atomic(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows: list[list]):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, (int, float, np.floating)) else v for v in row])
    _write_atomic(path, buf.getvalue())


def _read_json(path: Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _resolve_seed(args) -> int:
    env = os.environ.get("QPT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SystemExit(EXIT_CONFIG)
    return args.seed


def _artifact(obj: dict, seed: int) -> dict:
    return {"schema_version": SCHEMA_VERSION, "seed": seed, **obj}


def _manifest(outdir: Path, command: str, config: dict, seed: int):
    _write_json(
        outdir / "manifest.json",
        {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config": config,
            "seed": seed,
        },
    )


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _scenario_params_from_args(args) -> dict:
    params = {}
    if args.kind == "static_quadratic_zeeman" and args.q is not None:
        params["q"] = args.q
    if args.kind == "static_linear_zeeman":
        if args.axis is not None:
            params["axis"] = args.axis
        if args.omega is not None:
            params["omega"] = args.omega
    if args.kind == "three_axis_time_dependent":
        if args.ramp:
            params["ramp"] = True
        if args.dt is not None:
            params["dt"] = args.dt
        if args.n_steps is not None:
            params["n_steps"] = args.n_steps
    return params


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    try:
        if args.scenario_file:
            spec = _read_json(Path(args.scenario_file))
            kind = spec["kind"]
            params = spec.get("params", {})
            noise_spec = spec.get("noise", {})
            noise = NoiseSpec(
                bloch_sigma=float(noise_spec.get("bloch_sigma", args.sigma)),
                prep_fidelity=float(noise_spec.get("prep_fidelity", args.prep_fidelity)),
                seed=seed,
            )
        else:
            kind = args.kind
            if kind == "three_axis":  # short alias
                kind = args.kind = "three_axis_time_dependent"
            params = _scenario_params_from_args(args)
            noise = NoiseSpec(
                bloch_sigma=args.sigma, prep_fidelity=args.prep_fidelity, seed=seed
            )
        if kind is None:
            print("simulate: either --kind or --scenario-file is required", file=sys.stderr)
            return EXIT_CONFIG
        scenario = make_scenario(kind, **params)
        if args.scenario_file and "grid" in spec:
            stated = np.asarray(spec["grid"].get("times_s", []), dtype=float)
            if stated.size and not np.allclose(stated, scenario.grid.times):
                raise ValueError("scenario file grid is inconsistent with its parameters")
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        print(f"simulate: bad configuration: {err}", file=sys.stderr)
        return EXIT_CONFIG

    dataset = generate_dataset(scenario, noise)
    outdir = Path(args.out)
    provenance = {**scenario.to_json(), "noise": noise.to_json()}
    _write_json(
        outdir / "dataset.json",
        _artifact({**dataset.to_json(), "provenance": provenance}, seed),
    )
    config = {
        "kind": scenario.kind,
        "params": scenario.params,
        "noise": noise.to_json(),
        "out": str(outdir),
    }
    _manifest(outdir, "simulate", config, seed)
    print(f"wrote {outdir / 'dataset.json'} ({len(dataset.times)} time points)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------


def _load_dataset(path: str) -> TomographySet:
    return TomographySet.from_json(_read_json(Path(path)))


def _load_superop(path: str) -> Superoperator:
    return Superoperator.from_json(_read_json(Path(path)))


def cmd_reconstruct(args) -> int:
    try:
        dataset = _load_dataset(args.dataset)
        reference = _load_superop(args.reference) if args.reference else None
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as err:
        print(f"reconstruct: bad input: {err}", file=sys.stderr)
        return EXIT_CONFIG
    seed = _read_json(Path(args.dataset)).get("seed", 0)
    outdir = Path(args.out)

    try:
        if args.mode == "process":
            rows = []
            for k, t in enumerate(dataset.times):
                pm = reconstruct_process(dataset, t)
                _write_json(outdir / f"process_{k:03d}.json", _artifact(pm.to_json(), seed))
                df = (
                    frobenius_distance(pm.matrix, scipy.linalg.expm(reference.matrix * t))
                    if reference is not None
                    else ""
                )
                rows.append([t, df])
            _write_csv(outdir / "df.csv", ["time_s", "df"], rows)
        elif args.mode == "liouvillian":
            logs = []
            pms = {}
            for t in dataset.times:
                pm = reconstruct_process(dataset, t)
                pms[t] = pm
                logs.append(principal_log(pm).matrix / t)
            l_hat = Superoperator(dim=dataset.dim, matrix=np.mean(logs, axis=0))
            _write_json(outdir / "liouvillian.json", _artifact(l_hat.to_json(), seed))
            rows = []
            for t in dataset.times:
                df = frobenius_distance(pms[t].matrix, scipy.linalg.expm(l_hat.matrix * t))
                df_ref = (
                    frobenius_distance(pms[t].matrix, scipy.linalg.expm(reference.matrix * t))
                    if reference is not None
                    else ""
                )
                rows.append([t, df, df_ref])
            _write_csv(outdir / "df.csv", ["time_s", "df", "df_vs_reference"], rows)
        elif args.mode == "stepwise":
            steps = stepwise_processes(dataset)
            rows = []
            boundaries = np.concatenate([[0.0], dataset.times])
            for k, pm in enumerate(steps):
                _write_json(outdir / f"step_{k:03d}.json", _artifact(pm.to_json(), seed))
                df = (
                    frobenius_distance(
                        pm.matrix, scipy.linalg.expm(reference.matrix * pm.duration_s)
                    )
                    if reference is not None
                    else ""
                )
                rows.append([boundaries[k + 1], df])
            _write_csv(outdir / "df.csv", ["time_s", "df"], rows)
        else:  # pragma: no cover - argparse restricts choices
            return EXIT_CONFIG
    except NUMERIC_ERRORS as err:
        print(f"reconstruct: numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC

    config = {
        "dataset": args.dataset,
        "mode": args.mode,
        "reference": args.reference,
        "out": str(outdir),
    }
    _manifest(outdir, "reconstruct", config, seed)
    print(f"wrote reconstruction artifacts to {outdir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def _dataset_factory_from_provenance(provenance: dict):
    scenario = make_scenario(provenance["kind"], **_scenario_kwargs(provenance["params"]))
    return scenario, (lambda spec: generate_dataset(scenario, spec))


def _scenario_kwargs(params: dict) -> dict:
    # drop resolved-only entries that make_scenario does not accept
    out = dict(params)
    if out.get("ramp_s") is None:
        out.pop("ramp_s", None)
    if not out.get("ramp", False):
        out.pop("ramp", None)
        out.pop("ramp_s", None)
    return out


def _direct_relaxation_params(dataset: TomographySet) -> np.ndarray:
    logs = [principal_log(reconstruct_process(dataset, t)).matrix / t for t in dataset.times]
    rt_hat = Superoperator(dim=dataset.dim, matrix=-np.mean(logs, axis=0))
    return fit_relaxation_model(rt_hat).params


def cmd_fit(args) -> int:
    try:
        raw = _read_json(Path(args.dataset))
        dataset = TomographySet.from_json(raw)
        rt = _load_superop(args.fixed_dissipator) if args.fixed_dissipator else None
        if args.model in ("hermitian", "fields") and rt is None:
            print(
                f"fit: --model {args.model} requires --fixed-dissipator", file=sys.stderr
            )
            return EXIT_CONFIG
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as err:
        print(f"fit: bad input: {err}", file=sys.stderr)
        return EXIT_CONFIG
    seed = raw.get("seed", 0)
    outdir = Path(args.out)
    extra_rows = None

    try:
        if args.model == "mle":
            pmeas = [(t, reconstruct_process(dataset, t)) for t in dataset.times]
            report = mle_liouvillian(pmeas, dissipator=rt, form="free")
        elif args.model == "relaxation":
            pmeas = [(t, reconstruct_process(dataset, t)) for t in dataset.times]
            mle = mle_liouvillian(pmeas, form="free")
            rt_hat = Superoperator(dim=dataset.dim, matrix=-mle.estimate.matrix)
            report = fit_relaxation_model(rt_hat)
            report.df_per_time = mle.df_per_time
            report.converged = mle.converged
            report.iterations = mle.iterations
        elif args.model == "hermitian":
            if args.method == "mle":
                pmeas = [(t, reconstruct_process(dataset, t)) for t in dataset.times]
                report = mle_liouvillian(pmeas, dissipator=rt, form="hermitian")
            else:
                report = direct_hamiltonian(dataset, rt, dataset.times)
        elif args.model == "fields":
            steps = stepwise_processes(dataset)
            grid = _grid_of(dataset)
            track = estimate_fields(
                steps, grid, rt, known_form=args.known_form, method=args.method
            )
            report = track.report
            if track.known_form:
                extra_rows = (
                    "fields.csv",
                    ["time_s", "omega_x", "omega_y", "omega_z", "flagged"],
                    [
                        [t, *om, int(fl)]
                        for t, om, fl in zip(track.times, track.omegas, track.flagged)
                    ],
                )
            else:
                extra_rows = (
                    "fields.csv",
                    ["time_s"] + [f"h{i + 1}" for i in range(9)] + ["flagged"],
                    [
                        [t, *h, int(fl)]
                        for t, h, fl in zip(track.times, track.params, track.flagged)
                    ],
                )
        else:  # pragma: no cover - argparse restricts choices
            return EXIT_CONFIG

        if args.bootstrap:
            report = _attach_bootstrap(args, raw, dataset, rt, report)
    except NUMERIC_ERRORS as err:
        print(f"fit: numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except LiouvlabError as err:
        print(f"fit: {err}", file=sys.stderr)
        return EXIT_CONFIG

    report.seed = seed
    _write_json(outdir / "fit_report.json", _artifact(report.to_json(), seed))
    if report.df_per_time is not None and len(report.df_per_time) > 0:
        times = (
            dataset.times
            if len(report.df_per_time) == len(dataset.times)
            else _grid_of(dataset).midpoints
        )
        _write_csv(
            outdir / "df.csv",
            ["time_s", "df"],
            [[t, d] for t, d in zip(times, report.df_per_time)],
        )
    if extra_rows is not None:
        name, header, rows = extra_rows
        _write_csv(outdir / name, header, rows)
    config = {
        "dataset": args.dataset,
        "model": args.model,
        "method": args.method,
        "known_form": args.known_form,
        "fixed_dissipator": args.fixed_dissipator,
        "bootstrap": args.bootstrap,
        "out": str(outdir),
    }
    _manifest(outdir, "fit", config, seed)
    status = "converged" if report.converged else "NOT converged (soft failure)"
    print(f"wrote {outdir / 'fit_report.json'} ({report.model}, {status})")
    return EXIT_OK


def _grid_of(dataset: TomographySet):
    from .dynamics import TimeGrid

    return TimeGrid(times=dataset.times)


def _attach_bootstrap(args, raw, dataset, rt, report: FitReport) -> FitReport:
    provenance = raw.get("provenance")
    if not provenance:
        raise LiouvlabError(
            "bootstrap requires a dataset with provenance (produced by simulate)"
        )
    _, factory = _dataset_factory_from_provenance(provenance)
    base_noise = NoiseSpec.from_json(provenance["noise"])

    if args.model == "relaxation":
        fit = _direct_relaxation_params
    elif args.model == "hermitian":
        fit = lambda ds: direct_hamiltonian(ds, rt, ds.times).params  # noqa: E731
    elif args.model == "fields":
        fit = lambda ds: estimate_fields(  # noqa: E731
            stepwise_processes(ds),
            _grid_of(ds),
            rt,
            known_form=args.known_form,
            method="direct",
        ).report.params
    else:
        raise LiouvlabError(f"bootstrap is not supported for model {args.model!r}")

    result = bootstrap(fit, factory, base_noise, n_draws=args.bootstrap)
    report.ci_low = result.low
    report.ci_high = result.high
    return report


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def _summarize_run(rundir: Path) -> dict | None:
    manifest_path = rundir / "manifest.json"
    if not manifest_path.is_file():
        return None
    manifest = _read_json(manifest_path)
    row = {
        "run": rundir.name,
        "command": manifest.get("command", "?"),
        "seed": manifest.get("seed", ""),
        "max_df": "",
        "median_df": "",
        "cost": "",
        "converged": "",
    }
    df_path = rundir / "df.csv"
    if df_path.is_file():
        with open(df_path) as fh:
            reader = csv.DictReader(fh)
            dfs = [float(r["df"]) for r in reader if r.get("df") not in (None, "", "nan")]
        if dfs:
            row["max_df"] = _fmt(max(dfs))
            row["median_df"] = _fmt(float(np.median(dfs)))
    fit_path = rundir / "fit_report.json"
    if fit_path.is_file():
        fit = _read_json(fit_path)
        row["cost"] = _fmt(fit["cost"])
        row["converged"] = str(fit["converged"])
    return row


def cmd_report(args) -> int:
    rows = []
    missing = []
    for d in args.rundirs:
        rundir = Path(d)
        summary = _summarize_run(rundir) if rundir.is_dir() else None
        if summary is None:
            missing.append(str(rundir))
        else:
            rows.append(summary)
    if missing or not rows:
        for m in missing or args.rundirs:
            print(f"report: missing artifacts in {m}", file=sys.stderr)
        return EXIT_MISSING

    columns = ["run", "command", "seed", "max_df", "median_df", "cost", "converged"]
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in columns}
    header = "  ".join(c.ljust(widths[c]) for c in columns)
    print(header)
    print("-" * len(header))
    for r in rows:
        print("  ".join(str(r[c]).ljust(widths[c]) for c in columns))

    if args.csv:
        _write_csv(Path(args.csv), columns, [[r[c] for c in columns] for r in rows])
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liouvlab",
        description="Liouvillian reconstruction pipeline for d-level systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic tomography dataset")
    sim.add_argument(
        "--kind",
        choices=[
            "relaxation_only",
            "static_quadratic_zeeman",
            "static_linear_zeeman",
            "three_axis_time_dependent",
            "three_axis",
        ],
    )
    sim.add_argument("--scenario-file", help="JSON scenario spec (overrides --kind)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--sigma", type=float, default=0.0, help="Bloch-coordinate noise")
    sim.add_argument("--prep-fidelity", type=float, default=1.0)
    sim.add_argument("--ramp", action="store_true", help="enable the supply-settling ramp")
    sim.add_argument("--q", type=float, help="quadratic Zeeman strength (rad/s)")
    sim.add_argument("--omega", type=float, help="linear Zeeman strength (rad/s)")
    sim.add_argument("--axis", choices=["x", "y", "z"])
    sim.add_argument("--dt", type=float, help="time-dependent grid step (s)")
    sim.add_argument("--n-steps", type=int, help="time-dependent grid length")
    sim.add_argument("-o", "--out", required=True, help="output directory")
    sim.set_defaults(func=cmd_simulate)

    rec = sub.add_parser("reconstruct", help="linear-inversion reconstruction")
    rec.add_argument("--dataset", required=True)
    rec.add_argument("--mode", choices=["process", "liouvillian", "stepwise"], required=True)
    rec.add_argument("--reference", help="generator JSON used for the df column")
    rec.add_argument("-o", "--out", required=True)
    rec.set_defaults(func=cmd_reconstruct)

    fit = sub.add_parser("fit", help="model fitting on a dataset")
    fit.add_argument("--dataset", required=True)
    fit.add_argument(
        "--model", choices=["mle", "relaxation", "hermitian", "fields"], required=True
    )
    fit.add_argument("--fixed-dissipator", help="relaxation superoperator JSON")
    fit.add_argument("--known-form", action="store_true")
    fit.add_argument("--method", choices=["direct", "mle"], default="direct")
    fit.add_argument("--bootstrap", type=int, default=0, metavar="N")
    fit.add_argument("-o", "--out", required=True)
    fit.set_defaults(func=cmd_fit)

    rep = sub.add_parser("report", help="aggregate run directories into one table")
    rep.add_argument("rundirs", nargs="+")
    rep.add_argument("--csv", help="also write the table to this CSV path")
    rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_CONFIG
    return args.func(args)


def entry_point():  # pragma: no cover - console-script shim
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
