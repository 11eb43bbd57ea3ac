import json
import math

import numpy as np
import pytest

from dualfreq_bci.cli import main
from dualfreq_bci.pipeline import (
    ClassificationRun,
    ConfigError,
    RunConfig,
    WindowError,
    classify_dataset,
    evaluate_run,
    time_window_sweep,
)
from dualfreq_bci.synth import synth_dataset

SMALL = dict(trials_per_class=2, trial_duration=2.0)


def dataset_for(**kw):
    cfg = RunConfig(**{**SMALL, **kw})
    return cfg, synth_dataset(cfg.plan(), cfg.synth_config(), cfg.trials_per_class,
                              cfg.sampling_rate, cfg.master_seed, cfg.channels)


# -- configuration -----------------------------------------------------------


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="bogus"):
        RunConfig.from_dict({"bogus": 1})


def test_config_rejects_bad_classifier():
    with pytest.raises(ConfigError):
        RunConfig(classifier="svm")


def test_config_layering(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"master_seed": 7, "classifier": "cca", "snr_db": -5.0}))
    cfg = RunConfig.load(p)
    assert (cfg.master_seed, cfg.classifier, cfg.snr_db) == (7, "cca", -5.0)
    cfg = RunConfig.load(p, master_seed=9, classifier=None)
    assert cfg.master_seed == 9 and cfg.classifier == "cca"
    assert RunConfig.load(None).master_seed == 0


def test_config_round_trip():
    cfg = RunConfig(snr_db=-3.0, windows=(1.0, 2.0))
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_sweep_windows_default_grid():
    assert RunConfig().sweep_windows() == (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5)
    assert RunConfig(trial_duration=2.0).sweep_windows()[-1] == 2.0
    assert RunConfig(windows=(1.0, 3.0)).sweep_windows() == (1.0, 3.0)


# -- classification ----------------------------------------------------------


def test_high_snr_is_perfect():
    cfg, ds = dataset_for(snr_db=5.0)
    for method in ("cca", "bcca"):
        run = classify_dataset(ds, cfg, classifier=method)
        rep = evaluate_run(run, 5, cfg)
        assert rep.overall_accuracy == 1.0
        assert rep.itr_bits_per_min == pytest.approx(60 / (2.0 + 2.5) * math.log2(5))


def test_noise_only_near_chance():
    cfg, ds = dataset_for(noise_only=True, trials_per_class=20, trial_duration=1.0)
    acc = evaluate_run(classify_dataset(ds, cfg), 5, cfg).overall_accuracy
    # binomial(100, 0.2): 4 standard deviations is 0.16
    assert abs(acc - 0.2) < 0.16


def test_classifier_flag_changes_only_method():
    cfg, ds = dataset_for(snr_db=-15.0, dominance_low=0.2)
    a = classify_dataset(ds, cfg, classifier="cca")
    b = classify_dataset(ds, cfg, classifier="bcca")
    assert [p.trial_id for p in a.predictions] == [p.trial_id for p in b.predictions]
    assert all(p.scores.rho1 is None for p in a.predictions)
    assert all(p.scores.rho1 is not None for p in b.predictions)
    # the fused-reference correlation is shared between the two methods
    for pa, pb in zip(a.predictions, b.predictions):
        assert np.allclose(pa.scores.rho_c, pb.scores.rho_c)


def test_full_window_sweep_equals_plain_run():
    cfg, ds = dataset_for(snr_db=-15.0)
    run = classify_dataset(ds, cfg)
    rep = evaluate_run(run, 5, cfg)
    (w, acc, rate), = time_window_sweep(ds, cfg, windows=[2.0])
    assert w == 2.0 and acc == rep.overall_accuracy and rate == rep.itr_bits_per_min


def test_sweep_rejects_long_window():
    cfg, ds = dataset_for()
    with pytest.raises(WindowError):
        time_window_sweep(ds, cfg, windows=[1.0, 2.5])
    with pytest.raises(WindowError):
        classify_dataset(ds, cfg, window=3.0)


def test_window_only_rule():
    cfg, ds = dataset_for(snr_db=5.0, t_rule="window-only")
    rep = evaluate_run(classify_dataset(ds, cfg, window=1.0), 5, cfg)
    assert rep.trial_period_seconds == 1.0
    assert rep.itr_bits_per_min == pytest.approx(60 * math.log2(5))


def test_predictions_round_trip(tmp_path):
    cfg, ds = dataset_for(snr_db=-10.0)
    run = classify_dataset(ds, cfg)
    run.write(tmp_path / "p.csv", tmp_path / "s.csv")
    back = ClassificationRun.read(tmp_path / "p.csv")
    assert back.config == cfg and back.classifier == run.classifier and back.window == run.window
    assert [(p.trial_id, p.true_label, p.predicted) for p in back.predictions] == \
           [(p.trial_id, p.true_label, p.predicted) for p in run.predictions]
    header = (tmp_path / "s.csv").read_text().splitlines()[1]
    assert header == "trial_id,target,rho1,rho2,rho_c,rho_a,predicted"


# -- command line ------------------------------------------------------------


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps({**SMALL, "snr_db": -12.0}))
    return p


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_cli_plan(tmp_path, capsys):
    assert run_cli("plan", "--out", tmp_path / "plan.json") == 0
    out = capsys.readouterr().out
    assert "a = 5 Hz, b = 8.5 Hz" in out and "no violations" in out
    plan = json.loads((tmp_path / "plan.json").read_text())
    assert [(p["a"], p["b"]) for p in plan["pairs"]] == [(5, 8.5), (7, 5.5), (8, 6.5), (9, 7.5), (6, 9.5)]


def test_cli_plan_too_few(tmp_path, capsys):
    assert run_cli("plan", "--base", 5, 6, 7, 8, "--out", tmp_path / "p.json") == 2
    assert "N >= 5" in capsys.readouterr().err


def test_cli_schedule(tmp_path):
    assert run_cli("plan", "--out", tmp_path / "plan.json") == 0
    assert run_cli("schedule", "--plan", tmp_path / "plan.json", "--target", 0,
                   "--out", tmp_path / "s.csv") == 0
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert len(lines) == 2 + 210
    assert run_cli("schedule", "--plan", tmp_path / "plan.json", "--duration", 0,
                   "--out", tmp_path / "s0.csv") == 2
    assert run_cli("schedule", "--plan", tmp_path / "plan.json", "--target", 9,
                   "--out", tmp_path / "s9.csv") == 2


def test_cli_missing_plan_file(tmp_path):
    assert run_cli("schedule", "--plan", tmp_path / "absent.json", "--out", tmp_path / "s.csv") == 3


def test_cli_end_to_end(tmp_path, small_config):
    d, r = tmp_path / "data", tmp_path / "reports"
    assert run_cli("synth", "--config", small_config, "--seed", 3, "--out", d) == 0
    manifest = json.loads((d / "manifest.json").read_text())
    assert len(manifest["trials"]) == 10
    preds = []
    for m in ("cca", "bcca"):
        p = tmp_path / f"pred_{m}.csv"
        assert run_cli("classify", "--config", small_config, "--classifier", m,
                       "--dataset", d, "--out", p) == 0
        preds.append(p)
    assert run_cli("evaluate", "--dataset", d, "--predictions", *preds, "--sweep", "--psd",
                   "--out", r) == 0
    names = sorted(f.name for f in r.iterdir())
    assert {"methods.csv", "confusion_bcca.csv", "classes_cca.csv", "sweep_bcca.csv",
            "psd_class0.csv"} <= set(names)
    methods = (r / "methods.csv").read_text().splitlines()
    assert methods[0].startswith("# config: ")
    assert '"master_seed": 3' in methods[0]
    assert [ln.split(",")[0] for ln in methods[2:]] == ["cca", "bcca"]
    classes = (r / "classes_bcca.csv").read_text().splitlines()
    assert classes[-6].startswith("class,freq_a,freq_b,specificity_mean")


def test_cli_corrupt_trial(tmp_path, small_config, capsys):
    d = tmp_path / "data"
    assert run_cli("synth", "--config", small_config, "--out", d) == 0
    (d / "trial_c01_t000.csv").write_text("garbage\n1,2\n")
    p = tmp_path / "pred.csv"
    assert run_cli("classify", "--config", small_config, "--dataset", d, "--out", p) == 3
    assert "trial_c01_t000" in capsys.readouterr().err
    rows = [ln.split(",") for ln in p.read_text().splitlines()[2:]]
    assert len(rows) == 10
    bad = [r for r in rows if r[0] == "trial_c01_t000"]
    assert bad[0][3].startswith("error")


def test_cli_evaluate_mismatch(tmp_path, small_config):
    d1, d2 = tmp_path / "d1", tmp_path / "d2"
    assert run_cli("synth", "--config", small_config, "--out", d1) == 0
    p = tmp_path / "pred.csv"
    assert run_cli("classify", "--config", small_config, "--dataset", d1, "--out", p) == 0
    cfg = json.loads(small_config.read_text())
    cfg["trials_per_class"] = 3
    other = tmp_path / "other.json"
    other.write_text(json.dumps(cfg))
    assert run_cli("synth", "--config", other, "--out", d2) == 0
    assert run_cli("evaluate", "--dataset", d2, "--predictions", p, "--out", tmp_path / "r") == 2


def test_cli_bad_config(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"unknown_key": 1}')
    assert run_cli("synth", "--config", p, "--out", tmp_path / "d") == 2


def test_cli_no_preprocess_changes_scores(tmp_path, small_config):
    d = tmp_path / "d"
    assert run_cli("synth", "--config", small_config, "--out", d) == 0
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli("classify", "--config", small_config, "--dataset", d, "--out", a) == 0
    assert run_cli("classify", "--config", small_config, "--dataset", d, "--no-preprocess",
                   "--out", b) == 0
    assert ClassificationRun.read(b).config.preprocess is False
    assert (tmp_path / "a.scores.csv").read_text() != (tmp_path / "b.scores.csv").read_text()
