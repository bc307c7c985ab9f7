import csv
import json

import numpy as np
import pytest

from nyopsim.cli import main
from nyopsim.engine import SimConfig, run
from nyopsim.errors import InsufficientReplications
from nyopsim.sweep import SweepSpec, cell_seed, emit, run_sweep

SMALL = ["--t-min", "5", "--t-max", "6", "--reps", "3", "--horizon", "120", "--warmup", "20"]


def small_spec(**kw):
    base = SimConfig(horizon=120, warmup=20)
    return SweepSpec(t_values=(5, 6), replications=3, base=base, **kw)


def test_run_count_and_cells():
    result = run_sweep(small_spec())
    assert result.n_runs == 2 * 2 * 3
    assert result.report.tiers == [4, 3, 2, 1]
    assert result.report.t_values == [5, 6]
    assert result.report.cell("nyop", "bwe", 2, 6).n == 3


def test_default_spec_counts():
    spec = SweepSpec()
    assert len(spec.t_values) * len(spec.scenarios) * spec.replications == 660
    assert spec.t_values == tuple(range(5, 16))


def test_spec_validation():
    with pytest.raises(InsufficientReplications):
        SweepSpec(replications=1)
    with pytest.raises(ValueError):
        SweepSpec(t_values=())
    with pytest.raises(ValueError):
        SweepSpec(scenarios=("auction",))


def test_common_random_numbers_across_scenarios():
    spec = small_spec()
    for T in spec.t_values:
        for rep in range(spec.replications):
            b = run(spec.config(T, "baseline", rep))
            n = run(spec.config(T, "nyop", rep))
            assert np.array_equal(b.market_demand, n.market_demand)
    assert cell_seed(0, 5) != cell_seed(0, 6)
    assert cell_seed(0, 5) == cell_seed(0, 5)


def test_parallel_workers_do_not_change_results():
    serial = run_sweep(small_spec())
    parallel = run_sweep(small_spec(workers=2))
    assert serial.records == parallel.records


def test_csv_outputs_and_naming(tmp_path):
    assert main(SMALL + ["--out-dir", str(tmp_path)]) == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == [
        "bwe_curve.csv", "fr_curve.csv", "replications.csv",
        "summary_k1.csv", "summary_k2.csv", "summary_k3.csv", "summary_k4.csv",
    ]
    rows = list(csv.reader(open(tmp_path / "summary_k4.csv", newline="")))
    assert rows[0] == [
        "metric", "T", "without_nyop_mean", "without_nyop_sd",
        "with_nyop_mean", "with_nyop_sd", "change_mean_pct", "change_sd_pct",
    ]
    bwe = [r for r in rows[1:] if r[0] == "bwe"]
    assert [r[1] for r in bwe] == ["5", "6", "Mean of Change"]
    assert len(bwe[0][2].split(".")[1]) == 4
    assert len(bwe[0][6].split(".")[1]) == 2
    assert float(bwe[2][6]) == pytest.approx((float(bwe[0][6]) + float(bwe[1][6])) / 2, abs=0.006)
    assert open(tmp_path / "summary_k4.csv", newline="").read().count("\r\n") == len(rows)
    curve = list(csv.reader(open(tmp_path / "bwe_curve.csv", newline="")))
    assert curve[0] == ["k", "scenario", "T", "mean", "sd"]
    assert len(curve) == 1 + 4 * 2 * 2


def test_csv_output_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(SMALL + ["--out-dir", str(a)]) == 0
    assert main(SMALL + ["--out-dir", str(b)]) == 0
    for p in a.iterdir():
        assert p.read_bytes() == (b / p.name).read_bytes()


def test_nyop_only_tables_have_no_change_columns(tmp_path):
    assert main(SMALL + ["--scenario", "nyop", "--out-dir", str(tmp_path)]) == 0
    rows = list(csv.reader(open(tmp_path / "summary_k1.csv", newline="")))
    assert rows[0] == ["metric", "T", "with_nyop_mean", "with_nyop_sd"]
    assert all(r[1] != "Mean of Change" for r in rows)


def test_json_report(tmp_path):
    assert main(SMALL + ["--format", "json", "--out-dir", str(tmp_path)]) == 0
    assert [p.name for p in tmp_path.iterdir()] == ["report.json"]
    rep = json.loads((tmp_path / "report.json").read_text())
    cell = rep["scenarios"]["nyop"]["k4"]["5"]["bwe"]
    assert set(cell) == {"mean", "sd", "n"} and cell["n"] == 3
    assert "mean_of_change" in rep["changes"]["bwe"]["k1"]
    assert len(rep["replications"]) == 12


def test_unknown_format_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(SMALL + ["--format", "xml", "--out-dir", str(tmp_path)])
    assert exc.value.code == 2


def test_single_replication_rejected(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--reps", "1", "--out-dir", str(tmp_path)])
    assert exc.value.code == 2
    assert "replications" in capsys.readouterr().err
    assert not tmp_path.exists() or not any(tmp_path.iterdir())


def test_unwritable_output_exits_nonzero(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(SMALL + ["--out-dir", str(blocker / "sub")]) == 1


def test_trace_passthrough(tmp_path):
    assert main(SMALL + ["--trace", "--out-dir", str(tmp_path)]) == 0
    traces = sorted(p.name for p in (tmp_path / "traces").iterdir())
    assert traces == [
        "trace_T5_baseline.jsonl", "trace_T5_nyop.jsonl",
        "trace_T6_baseline.jsonl", "trace_T6_nyop.jsonl",
    ]
    first = json.loads((tmp_path / "traces" / "trace_T5_nyop.jsonl").read_text().splitlines()[0])
    assert list(first) == ["period", "performative", "sender", "receiver", "payload_type", "qty", "price"]


def test_emit_rejects_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit(run_sweep(small_spec()), tmp_path, "xlsx")


def test_cli_overrides_reach_config():
    from nyopsim.cli import build_parser, spec_from_args

    args = build_parser().parse_args(
        ["--lead-time", "3", "--z", "1.5", "--beta", "0.7", "--max-rounds", "5",
         "--p-star", "50", "--q-star", "120", "--mu", "80", "--sigma", "8", "--es", "0.9",
         "--ed", "-1.2", "--share-demand", "yes", "--seed", "17"]
    )
    spec = spec_from_args(args)
    cfg = spec.config(7, "baseline", 2)
    assert cfg.lead_time == 3 and cfg.policy.safety_factor == 1.5
    assert cfg.negotiation.opening_fraction == 0.7 and cfg.negotiation.max_rounds == 5
    assert cfg.calibration.p_star == 50 and cfg.calibration.q_star == 120
    assert (cfg.mu, cfg.sigma, cfg.e_s, cfg.e_d) == (80, 8, 0.9, -1.2)
    assert cfg.shares_demand and cfg.window == 7 and cfg.replication == 2
    assert spec.base_seed == 17
