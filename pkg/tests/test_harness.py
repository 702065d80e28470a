import csv
import math

import pytest

from secure_swipt.harness import (
    AGGREGATE_COLUMNS, TIMING_COLUMNS, TRIAL_COLUMNS, ExperimentConfig, TrialRecord, aggregate,
    common_trials, default_experiments, emit_aggregate_csv, emit_csv, emit_figures, run_sweep,
)

DOCUMENTED_TRIAL_COLUMNS = (
    "seed", "trial", "axis", "value", "scheme", "status", "tx_power_dbm",
    "secrecy_capacity_bps_hz", "total_harvested_dbm", "rank_one", "prop1_condition",
    "tx_power_w", "total_harvested_w", "rho", "rank_ratio", "provenance",
)


@pytest.fixture(scope="module")
def small_sweep():
    cfg = ExperimentConfig("gamma_req_db", (0.0, 9.0), trials=6, base_seed=0)
    return cfg, *run_sweep(cfg)


def test_column_order():
    assert TRIAL_COLUMNS == DOCUMENTED_TRIAL_COLUMNS
    assert TIMING_COLUMNS == ("seed", "trial", "value", "scheme", "solve_ms")
    assert AGGREGATE_COLUMNS[:3] == ("axis", "value", "scheme")


def test_rerun_identical_bytes(tmp_path):
    cfg = ExperimentConfig("gamma_req_db", (0.0,), trials=1, base_seed=3)
    paths = []
    for i in range(2):
        recs, table = run_sweep(cfg)
        a = emit_csv(recs, tmp_path / f"t{i}.csv")
        b = emit_aggregate_csv(table, tmp_path / f"a{i}.csv")
        paths.append((a.read_bytes(), b.read_bytes()))
    assert paths[0] == paths[1]


def test_workers_do_not_change_output(tmp_path, small_sweep):
    cfg, recs, table = small_sweep
    recs2, _ = run_sweep(ExperimentConfig.from_dict({**cfg.to_dict(), "workers": 2}))
    a = emit_csv(recs, tmp_path / "one.csv").read_bytes()
    b = emit_csv(recs2, tmp_path / "two.csv").read_bytes()
    assert a == b


def test_record_order(small_sweep):
    cfg, recs, _ = small_sweep
    assert len(recs) == len(cfg.grid) * cfg.trials * len(cfg.schemes)
    assert [r.scheme for r in recs[:5]] == list(cfg.schemes)
    assert [r.value for r in recs] == sorted(r.value for r in recs)


def test_empty_header_only(tmp_path):
    p = emit_csv([], tmp_path / "e.csv")
    assert p.read_bytes() == (",".join(TRIAL_COLUMNS) + "\r\n").encode()


def test_parse_back(tmp_path, small_sweep):
    _, recs, _ = small_sweep
    p = emit_csv(recs, tmp_path / "r.csv")
    with open(p, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(recs)
    for rec, row in zip(recs, rows):
        assert list(row) == list(TRIAL_COLUMNS)
        for col in ("tx_power_dbm", "secrecy_capacity_bps_hz", "total_harvested_w", "rho"):
            v = getattr(rec, col)
            if v is None or not math.isfinite(v):
                assert row[col] == ""
            else:
                assert float(row[col]) == pytest.approx(v, rel=1e-5, abs=1e-300)
        assert row["status"] == rec.status and int(row["seed"]) == rec.seed


def _rec(trial, value, scheme, status, p=None):
    sec = None if p is None else 1.0
    return TrialRecord(1, trial, "gamma_req_db", value, scheme, status, None, sec, None, p is not None,
                       None, 0.0, tx_power_w=p, total_harvested_w=p)


def test_all_infeasible_point(tmp_path):
    recs = [_rec(t, 0.0, "relaxed", "Infeasible") for t in range(3)]
    table = aggregate(recs)
    assert table[0]["feasible"] == 0 and table[0]["feasibility_rate"] == 0
    assert table[0]["mean_tx_power_dbm"] is None and table[0]["common_tx_power_dbm"] is None
    text = emit_aggregate_csv(table, tmp_path / "a.csv").read_text()
    assert "nan" not in text.lower()


def test_common_set():
    recs = [_rec(0, 0.0, "relaxed", "Optimal", 1.0), _rec(0, 3.0, "relaxed", "Optimal", 2.0),
            _rec(1, 0.0, "relaxed", "Optimal", 1.0), _rec(1, 3.0, "relaxed", "Infeasible")]
    assert common_trials(recs) == {0}
    table = aggregate(recs)
    assert table[0]["common_trials"] == 1 and table[0]["feasible"] == 2
    assert table[1]["common_tx_power_dbm"] == pytest.approx(10 * math.log10(2e3))


def test_figures(tmp_path, small_sweep):
    cfg, _, table = small_sweep
    files = emit_figures(table, "gamma_req_db", tmp_path)
    assert [f.name for f in files] == ["fig2.csv", "fig3.csv", "fig4.csv"]
    header = files[0].read_text().splitlines()[0]
    assert header == "gamma_req_db,scheme,feasible,feasibility_rate,mean,common_trials,common_mean"
    k_table = aggregate([_rec(0, 2, "relaxed", "Optimal", 1.0)])
    assert [f.name for f in emit_figures(k_table, "k_receivers", tmp_path)] == ["fig5.csv"]


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(axis="eta")
    with pytest.raises(ValueError):
        ExperimentConfig(schemes=("relaxed", "magic"))
    with pytest.raises(ValueError):
        ExperimentConfig(axis="k_receivers", grid=(1, 2))
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"axis": "gamma_req_db", "colour": 1})
    with pytest.raises(TypeError):
        ExperimentConfig(params={"not_a_field": 1})


def test_config_roundtrip():
    for cfg in default_experiments(7, 5):
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
