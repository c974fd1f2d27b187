import json
from pathlib import Path

import numpy as np
import pytest

from liouvlab.cli import main
from liouvlab.estimation import frobenius_distance
from liouvlab.superop import Superoperator
from liouvlab.synthlab import DEFAULT_RELAXATION, make_scenario


def _read(path):
    return json.loads(Path(path).read_text())


def _simulate(tmp_path, *extra, kind="relaxation_only", seed=7):
    out = tmp_path / "run"
    rc = main(
        ["simulate", "--kind", kind, "--seed", str(seed), "-o", str(out), *extra]
    )
    assert rc == 0
    return out


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def test_simulate_writes_dataset_and_manifest(tmp_path):
    out = _simulate(tmp_path)
    data = _read(out / "dataset.json")
    assert data["schema_version"] == 1
    assert data["seed"] == 7
    assert len(data["times_s"]) == 21
    assert data["provenance"]["kind"] == "relaxation_only"
    manifest = _read(out / "manifest.json")
    assert manifest["command"] == "simulate"
    assert manifest["seed"] == 7


def test_simulate_three_axis_with_ramp(tmp_path):
    out = _simulate(tmp_path, "--ramp", kind="three_axis_time_dependent")
    data = _read(out / "dataset.json")
    assert data["provenance"]["params"]["ramp"] is True
    assert data["provenance"]["params"]["ramp_s"] == pytest.approx(64e-6)
    assert len(data["times_s"]) == 50


def test_simulate_missing_out_flag_exits_2(tmp_path):
    assert main(["simulate", "--kind", "relaxation_only"]) == 2


def test_simulate_bad_kind_exits_2(tmp_path):
    rc = main(["simulate", "--kind", "relaxation_only", "--sigma", "-1",
               "-o", str(tmp_path / "x")])
    assert rc == 2


def test_qpt_seed_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("QPT_SEED", "1234")
    out = _simulate(tmp_path, seed=7)
    assert _read(out / "dataset.json")["seed"] == 1234


def test_scenario_file_input(tmp_path):
    spec = {
        "kind": "static_quadratic_zeeman",
        "params": {"q": 5000.0},
        "noise": {"bloch_sigma": 0.0, "prep_fidelity": 1.0},
    }
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(spec))
    out = tmp_path / "run"
    rc = main(["simulate", "--scenario-file", str(path), "--seed", "3", "-o", str(out)])
    assert rc == 0
    assert _read(out / "dataset.json")["provenance"]["params"]["q"] == 5000.0


# ---------------------------------------------------------------------------
# reconstruct
# ---------------------------------------------------------------------------


def test_reconstruct_liouvillian_noiseless_closed_loop(tmp_path):
    out = _simulate(tmp_path)
    rec = tmp_path / "rec"
    rc = main(["reconstruct", "--dataset", str(out / "dataset.json"),
               "--mode", "liouvillian", "-o", str(rec)])
    assert rc == 0
    l_hat = Superoperator.from_json(_read(rec / "liouvillian.json"))
    truth = make_scenario("relaxation_only").liouvillian(0.0)
    assert frobenius_distance(l_hat, truth) < 1e-7
    lines = (rec / "df.csv").read_text().splitlines()
    assert lines[0] == "time_s,df,df_vs_reference"
    assert len(lines) == 22


def test_reconstruct_process_mode_writes_all_times(tmp_path):
    out = _simulate(tmp_path)
    rec = tmp_path / "rec"
    truth = make_scenario("relaxation_only").liouvillian(0.0)
    ref_path = tmp_path / "ref.json"
    ref_path.write_text(json.dumps(truth.to_json()))
    rc = main(["reconstruct", "--dataset", str(out / "dataset.json"),
               "--mode", "process", "--reference", str(ref_path), "-o", str(rec)])
    assert rc == 0
    files = sorted(rec.glob("process_*.json"))
    assert len(files) == 21
    pm = _read(files[0])
    assert pm["duration_s"] == pytest.approx(0.5e-3)
    # noiseless: df against the true generator's propagator is ~0
    rows = (rec / "df.csv").read_text().splitlines()[1:]
    dfs = [float(r.split(",")[1]) for r in rows]
    assert max(dfs) < 1e-9


def test_reconstruct_stepwise_count(tmp_path):
    out = _simulate(tmp_path, "--n-steps", "6", kind="three_axis_time_dependent")
    rec = tmp_path / "rec"
    rc = main(["reconstruct", "--dataset", str(out / "dataset.json"),
               "--mode", "stepwise", "-o", str(rec)])
    assert rc == 0
    # one step per interval: (number of state matrices) - 1
    assert len(sorted(rec.glob("step_*.json"))) == 6


def test_reconstruct_rank_failure_exits_3(tmp_path):
    out = _simulate(tmp_path)
    data = _read(out / "dataset.json")
    first = data["inputs"][0]
    data["inputs"] = [first for _ in data["inputs"]]
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(data))
    rc = main(["reconstruct", "--dataset", str(broken), "--mode", "liouvillian",
               "-o", str(tmp_path / "rec")])
    assert rc == 3


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def test_fit_relaxation_noiseless_matches_defaults(tmp_path):
    out = _simulate(tmp_path)
    fit = tmp_path / "fit"
    rc = main(["fit", "--dataset", str(out / "dataset.json"),
               "--model", "relaxation", "-o", str(fit)])
    assert rc == 0
    report = _read(fit / "fit_report.json")
    rel = np.abs(np.array(report["params"]) / DEFAULT_RELAXATION.params - 1.0)
    assert rel.max() < 1e-3
    assert report["converged"] is True
    assert report["seed"] == 7


def test_fit_hermitian_requires_dissipator(tmp_path):
    out = _simulate(tmp_path, kind="static_quadratic_zeeman")
    rc = main(["fit", "--dataset", str(out / "dataset.json"),
               "--model", "hermitian", "-o", str(tmp_path / "f")])
    assert rc == 2


def test_fit_hermitian_direct_and_mle(tmp_path):
    out = _simulate(tmp_path, kind="static_quadratic_zeeman")
    rt_path = tmp_path / "rt.json"
    rt_path.write_text(json.dumps(DEFAULT_RELAXATION.superoperator().to_json()))
    for method in ("direct", "mle"):
        fit = tmp_path / f"fit_{method}"
        rc = main(["fit", "--dataset", str(out / "dataset.json"),
                   "--model", "hermitian", "--method", method,
                   "--fixed-dissipator", str(rt_path), "-o", str(fit)])
        assert rc == 0
        report = _read(fit / "fit_report.json")
        assert len(report["params"]) == 9
        assert (fit / "df.csv").exists()


def test_fit_fields_known_and_unknown(tmp_path):
    out = _simulate(tmp_path, "--n-steps", "8", kind="three_axis_time_dependent")
    rt_path = tmp_path / "rt.json"
    rt_path.write_text(json.dumps(DEFAULT_RELAXATION.superoperator().to_json()))
    known = tmp_path / "known"
    rc = main(["fit", "--dataset", str(out / "dataset.json"), "--model", "fields",
               "--known-form", "--fixed-dissipator", str(rt_path), "-o", str(known)])
    assert rc == 0
    rows = (known / "fields.csv").read_text().splitlines()
    assert rows[0] == "time_s,omega_x,omega_y,omega_z,flagged"
    assert len(rows) == 9
    # noiseless: tracked fields match the nominal waveforms at midpoints
    sc = make_scenario("three_axis_time_dependent", n_steps=8)
    truth = sc.omegas_nominal(sc.grid.midpoints)
    got = np.array([[float(v) for v in r.split(",")[1:4]] for r in rows[1:]])
    np.testing.assert_allclose(got, truth, atol=1e-5)

    unknown = tmp_path / "unknown"
    rc = main(["fit", "--dataset", str(out / "dataset.json"), "--model", "fields",
               "--fixed-dissipator", str(rt_path), "-o", str(unknown)])
    assert rc == 0
    header = (unknown / "fields.csv").read_text().splitlines()[0]
    assert header.startswith("time_s,h1,h2")


def test_fit_bootstrap_requires_provenance(tmp_path):
    out = _simulate(tmp_path)
    data = _read(out / "dataset.json")
    del data["provenance"]
    stripped = tmp_path / "stripped.json"
    stripped.write_text(json.dumps(data))
    rc = main(["fit", "--dataset", str(stripped), "--model", "relaxation",
               "--bootstrap", "5", "-o", str(tmp_path / "f")])
    assert rc == 2


def test_fit_bootstrap_attaches_ci(tmp_path):
    out = _simulate(tmp_path, "--sigma", "0.004")
    fit = tmp_path / "fit"
    rc = main(["fit", "--dataset", str(out / "dataset.json"), "--model", "relaxation",
               "--bootstrap", "20", "-o", str(fit)])
    assert rc == 0
    report = _read(fit / "fit_report.json")
    assert report["ci"] is not None
    lo, hi = report["ci"]["gamma_iso"]
    assert lo < hi  # noisy draws spread the interval
    # the point estimate sits inside its own interval, per parameter
    names = ["omega_x", "omega_y", "omega_z", "gamma_x", "gamma_y", "gamma_z",
             "gamma_iso"]
    for name, value in zip(names, report["params"]):
        lo, hi = report["ci"][name]
        assert lo <= value <= hi


def test_report_relaxation_gate_row(tmp_path, calibrated_sigma, capsys):
    # a calibrated-noise relaxation run lands under the 0.06 error gate in
    # the aggregated report
    out = _simulate(tmp_path, "--sigma", str(calibrated_sigma))
    rec = tmp_path / "rec"
    main(["reconstruct", "--dataset", str(out / "dataset.json"),
          "--mode", "liouvillian", "-o", str(rec)])
    csv_path = tmp_path / "summary.csv"
    rc = main(["report", str(rec), "--csv", str(csv_path)])
    assert rc == 0
    capsys.readouterr()
    row = csv_path.read_text().splitlines()[1].split(",")
    max_df = float(row[3])
    assert max_df <= 0.06


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def test_report_aggregates_runs(tmp_path, capsys):
    out = _simulate(tmp_path)
    rec = tmp_path / "rec"
    main(["reconstruct", "--dataset", str(out / "dataset.json"),
          "--mode", "liouvillian", "-o", str(rec)])
    fit = tmp_path / "fit"
    main(["fit", "--dataset", str(out / "dataset.json"), "--model", "relaxation",
          "-o", str(fit)])
    csv_path = tmp_path / "summary.csv"
    rc = main(["report", str(out), str(rec), str(fit), "--csv", str(csv_path)])
    assert rc == 0
    table = capsys.readouterr().out
    assert "max_df" in table and "reconstruct" in table
    rows = csv_path.read_text().splitlines()
    assert len(rows) == 4


def test_report_empty_dir_exits_4(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", str(empty)]) == 4


def test_report_missing_dir_exits_4(tmp_path):
    assert main(["report", str(tmp_path / "nope")]) == 4


# ---------------------------------------------------------------------------
# reproducibility (in-process view; the cross-process check lives in the
# acceptance suite)
# ---------------------------------------------------------------------------


def test_simulate_byte_identical(tmp_path):
    a = _simulate(tmp_path / "a", "--sigma", "0.004")
    b = _simulate(tmp_path / "b", "--sigma", "0.004")
    assert (a / "dataset.json").read_bytes() == (b / "dataset.json").read_bytes()
