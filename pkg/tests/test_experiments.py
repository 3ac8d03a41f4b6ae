import csv
import json

import pytest

from pinchrsma import experiments
from pinchrsma.cli import build_parser, main, make_config
from pinchrsma.experiments import (
    PLOT_COLUMNS, ExperimentConfig, Figure, MissingSeries, ResultRow, Sweep, emit_plot_data, run_experiment,
)

SMALL = dict(num_antennas=2, region_x=20.0, region_y=20.0, num_starts=1)


def test_single_row(tmp_path):
    cfg = ExperimentConfig(values=[23.0], schemes=["rsma"], trials=1, out=str(tmp_path / "c"), **SMALL)
    rows = run_experiment(cfg)
    assert len(rows) == 1
    assert 0.0 <= rows[0].feasibility_rate <= 1.0
    for suffix in (".csv", ".jsonl", ".trials.jsonl", ".meta.json"):
        assert (tmp_path / f"c{suffix}").exists()
    meta = json.loads((tmp_path / "c.meta.json").read_text())
    assert meta["config"]["trials"] == 1 and "git_revision" in meta and meta["wall_time_s"] > 0


def test_csv_byte_identical(tmp_path):
    kw = dict(sweep="rmin", values=[0.0, 1.0], schemes=["rsma", "sdma"], trials=2, seed=7, **SMALL)
    run_experiment(ExperimentConfig(out=str(tmp_path / "a"), **kw))
    run_experiment(ExperimentConfig(out=str(tmp_path / "b"), **kw))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_csv_is_rfc4180(tmp_path):
    cfg = ExperimentConfig(values=[23.0], schemes=["rsma"], trials=1, out=str(tmp_path / "c"), **SMALL)
    run_experiment(cfg)
    raw = (tmp_path / "c.csv").read_bytes()
    assert raw.count(b"\r\n") == 2
    rows = list(csv.DictReader(open(tmp_path / "c.csv", newline="")))
    assert rows[0]["scheme"] == "rsma"


def test_failures_recorded_not_fatal(tmp_path, monkeypatch):
    real = experiments.run_scheme

    def flaky(scheme, *a, **k):
        if scheme == "noma":
            raise RuntimeError("boom")
        return real(scheme, *a, **k)

    monkeypatch.setattr(experiments, "run_scheme", flaky)
    cfg = ExperimentConfig(values=[23.0], schemes=["rsma", "noma"], trials=2, out=str(tmp_path / "c"), **SMALL)
    rows = run_experiment(cfg)
    noma = next(r for r in rows if r.scheme == "noma")
    assert noma.failures == 2 and noma.feasibility_rate == 0.0
    assert next(r for r in rows if r.scheme == "rsma").failures == 0


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig(values=[])
    with pytest.raises(ValueError):
        ExperimentConfig(values=[3.0, 1.0])
    with pytest.raises(ValueError):
        ExperimentConfig(schemes=["tdma"])
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"bogus": 1})


def test_sweep_points():
    cfg = ExperimentConfig(sweep=Sweep.NUM_ANTENNAS, values=[2, 4])
    sc, r_min, p_max = cfg.point(4)
    assert sc.num_antennas == 4 and r_min == 0.7 and p_max == pytest.approx(0.19952623)
    sc, _, _ = ExperimentConfig(sweep="region", values=[30]).point(30)
    assert sc.region_x == 30 and sc.region_y == 80


def _row(x, scheme, sweep="power"):
    return ResultRow(sweep, x, scheme, 1.0, 0.1, 1.0, 5, 5, 2.0, 0)


def test_plot_data_series(tmp_path):
    rows = [_row(x, s) for s in experiments.ALL_SCHEMES for x in (0.0, 23.0)]
    table = emit_plot_data(rows, Figure.FIG2A, tmp_path / "fig2a.csv")
    assert {t["scheme"] for t in table} == set(experiments.ALL_SCHEMES)
    header = (tmp_path / "fig2a.csv").read_text().splitlines()[0]
    assert tuple(header.split(",")) == PLOT_COLUMNS


def test_plot_data_missing():
    with pytest.raises(MissingSeries):
        emit_plot_data([], "fig2a")
    with pytest.raises(MissingSeries):
        emit_plot_data([_row(0.0, "rsma")], "fig2a")


def test_cli_flags_override_file(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"trials": 9, "seed": 3, "r_min": 0.5}))
    args = build_parser().parse_args(["sweep-power", "--config", str(conf), "--trials", "2"])
    cfg = make_config(args, Sweep.USER_POWER, [23.0], {})
    assert cfg.trials == 2 and cfg.seed == 3 and cfg.r_min == 0.5


def test_cli_subcommands_parse():
    p = build_parser()
    for cmd in ("sweep-power", "sweep-antennas", "sweep-rmin", "sweep-region", "oracle-check", "single-run"):
        assert p.parse_args([cmd, "--seed", "1"]).command == cmd


def test_cli_sweep_antennas_defaults_to_60m(tmp_path):
    args = build_parser().parse_args(["sweep-antennas"])
    from pinchrsma.cli import SWEEP_DEFAULTS
    sweep, values, over = SWEEP_DEFAULTS["sweep-antennas"]
    cfg = make_config(args, sweep, values, over)
    assert cfg.region_x == 60.0 and cfg.values == [2.0, 4.0, 6.0, 8.0, 10.0]


def test_cli_single_run(capsys):
    assert main(["single-run", "--schemes", "rsma", "--antennas", "2", "--region-x", "20", "--region-y", "20",
                 "--starts", "1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["results"][0]["scheme"] == "rsma"


def test_cli_sweep_writes(tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["sweep-rmin", "--values", "0,1", "--trials", "1", "--schemes", "sdma", "--antennas", "2",
                 "--region-x", "20", "--region-y", "20", "--starts", "1", "--out", str(out)]) == 0
    assert len(list(csv.reader(open(out.with_suffix(".csv"))))) == 3
