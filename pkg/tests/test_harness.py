import json

import numpy as np
import pytest

from synthrisk.harness import (
    ConfigError,
    LeakyConfig,
    LinearityConfig,
    RunConfig,
    InferenceBlock,
    LinkabilityBlock,
    SinglingOutBlock,
    UtilityBlock,
    leaky_synthesize,
    linearity_experiment,
    load_run_config,
    main,
    run_evaluation,
    three_way_split,
    validate_report,
)
from synthrisk.singling_out import SinglingOutMode
from synthrisk.tabular import (
    ColumnKind,
    Dataset,
    SplitSpec,
    TabularError,
    load_csv,
    split,
    write_csv,
)

CAT = ColumnKind.CATEGORICAL
CONT = ColumnKind.CONTINUOUS

SCHEMA = [("color", CAT), ("shape", CAT), ("x", CONT), ("y", CONT)]


def make_original(n=420, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n):
        z = rng.normal()
        rows.append(
            (
                f"c{int(z * 2) % 5}",
                f"s{rng.integers(4)}",
                float(np.round(z, 4)),
                float(np.round(z * 1.5 + rng.normal() * 0.4, 4)),
            )
        )
    return Dataset.from_rows(SCHEMA, rows)


@pytest.fixture
def csv_trio(tmp_path):
    """train/control CSVs plus a released (independent) synthetic CSV."""
    original = make_original()
    rest, control = split(original, SplitSpec(0.25, seed=1))
    train, release = split(rest, SplitSpec(0.5, seed=2))
    syn = leaky_synthesize(
        train, release, LeakyConfig(0.5, 150, seed=3)
    )
    paths = {}
    for name, ds in (
        ("train", train), ("control", control), ("synthetic", syn)
    ):
        p = tmp_path / f"{name}.csv"
        write_csv(ds, p)
        paths[name] = str(p)
    return paths


def small_config(paths, tmp_path, seed=7):
    return RunConfig(
        train_path=paths["train"],
        control_path=paths["control"],
        synthetic_path=paths["synthetic"],
        alpha=0.95,
        seed=seed,
        n_attacks=40,
        output_path=str(tmp_path / "report.json"),
        singling_out=SinglingOutBlock(
            modes=(SinglingOutMode.UNIVARIATE, SinglingOutMode.MULTIVARIATE),
            n_attrs=(2,),
        ),
        linkability=LinkabilityBlock(
            aux_split=(("color", "x"), ("shape", "y")), k_values=(1, 3)
        ),
        inference=InferenceBlock(secrets=("y",), tolerance=0.1),
        utility=None,
    )


class TestLeakySynthesize:
    def setup_method(self):
        original = make_original(200, seed=5)
        self.train, self.release = split(original, SplitSpec(0.5, seed=4))

    def test_zero_leak_uses_only_release_rows(self):
        syn = leaky_synthesize(
            self.train, self.release, LeakyConfig(0.0, 80, seed=1)
        )
        release_rows = {
            tuple(self.release.record(i).value(c) for c, _ in SCHEMA)
            for i in range(self.release.n_rows)
        }
        for i in range(syn.n_rows):
            row = tuple(syn.record(i).value(c) for c, _ in SCHEMA)
            assert row in release_rows

    def test_full_leak_uses_only_train_rows(self):
        syn = leaky_synthesize(
            self.train, self.release, LeakyConfig(1.0, 80, seed=1)
        )
        train_rows = {
            tuple(self.train.record(i).value(c) for c, _ in SCHEMA)
            for i in range(self.train.n_rows)
        }
        for i in range(syn.n_rows):
            row = tuple(syn.record(i).value(c) for c, _ in SCHEMA)
            assert row in train_rows

    def test_half_leak_splits_rows_evenly(self):
        syn = leaky_synthesize(
            self.train, self.release, LeakyConfig(0.5, 100, seed=2)
        )
        assert syn.n_rows == 100
        train_rows = {
            tuple(self.train.record(i).value(c) for c, _ in SCHEMA)
            for i in range(self.train.n_rows)
        }
        n_from_train = sum(
            tuple(syn.record(i).value(c) for c, _ in SCHEMA) in train_rows
            for i in range(syn.n_rows)
        )
        assert n_from_train == 50

    def test_insufficient_rows_rejected(self):
        with pytest.raises(TabularError, match="cannot draw"):
            leaky_synthesize(
                self.train, self.release, LeakyConfig(1.0, 1000, seed=0)
            )

    def test_deterministic(self):
        a = leaky_synthesize(
            self.train, self.release, LeakyConfig(0.3, 60, seed=9)
        )
        b = leaky_synthesize(
            self.train, self.release, LeakyConfig(0.3, 60, seed=9)
        )
        assert a == b

    def test_leak_fraction_validation(self):
        with pytest.raises(ConfigError):
            LeakyConfig(1.5, 10)


class TestRunEvaluation:
    def test_end_to_end_report(self, csv_trio, tmp_path):
        cfg = small_config(csv_trio, tmp_path)
        report = run_evaluation(cfg)
        validate_report(report)
        assert (tmp_path / "report.json").exists()
        # univariate + multivariate + 2 linkability ks + 1 inference secret
        assert len(report["results"]) == 5
        assert not report["errors"]
        attacks = {r["attack"] for r in report["results"]}
        assert attacks == {"singling_out", "linkability", "inference"}
        for res in report["results"]:
            assert 0.0 <= res["risk"]["value"] <= 1.0
            assert res["rates"]["train"]["n_attacks"] >= 1
        so = [r for r in report["results"] if r["attack"] == "singling_out"]
        for res in so:
            assert "control_scaling" in res
            assert res["example_guesses"]

    def test_reports_are_deterministic_modulo_timing(self, csv_trio, tmp_path):
        cfg = small_config(csv_trio, tmp_path)
        a = run_evaluation(cfg)
        b = run_evaluation(cfg)
        a.pop("timing")
        b.pop("timing")
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_different_seed_changes_results(self, csv_trio, tmp_path):
        r1 = run_evaluation(small_config(csv_trio, tmp_path, seed=7))
        r2 = run_evaluation(small_config(csv_trio, tmp_path, seed=8))
        assert json.dumps(r1["results"]) != json.dumps(r2["results"])

    def test_utility_block_included_when_enabled(self, csv_trio, tmp_path):
        cfg = RunConfig(
            train_path=csv_trio["train"],
            control_path=csv_trio["control"],
            synthetic_path=csv_trio["synthetic"],
            seed=1,
            n_attacks=20,
            inference=InferenceBlock(secrets=("y",)),
            utility=UtilityBlock(n_queries=40),
        )
        report = run_evaluation(cfg)
        assert report["utility"] is not None
        assert 0 <= report["utility"]["total"] <= 100

    def test_per_setting_failures_are_recorded(self, csv_trio, tmp_path):
        cfg = RunConfig(
            train_path=csv_trio["train"],
            control_path=csv_trio["control"],
            synthetic_path=csv_trio["synthetic"],
            seed=1,
            n_attacks=10_000,  # more targets than rows: linkability fails
            linkability=LinkabilityBlock(
                aux_split=(("color", "x"), ("shape", "y"))
            ),
            inference=InferenceBlock(secrets=("y",), n_attacks=20),
        )
        report = run_evaluation(cfg)
        assert len(report["errors"]) == 1
        assert report["errors"][0]["attack"] == "linkability"
        assert len(report["results"]) == 1  # inference still ran

    def test_excluded_settings_do_not_enter_aggregates(self, csv_trio, tmp_path):
        cfg = small_config(csv_trio, tmp_path)
        report = run_evaluation(cfg)
        for attack, agg in report["aggregates"].items():
            entries = [
                r for r in report["results"] if r["attack"] == attack
            ]
            valid = [r for r in entries if not r["excluded"]]
            assert agg["n_settings"] == len(entries)
            assert agg["n_valid"] == len(valid)
            if valid:
                expected = float(
                    np.mean([r["risk"]["value"] for r in valid])
                )
                assert agg["risk_mean"] == pytest.approx(expected)
            else:
                assert agg["risk_mean"] is None

    def test_at_least_one_attack_block_required(self, csv_trio):
        with pytest.raises(ConfigError, match="at least one attack"):
            RunConfig(
                train_path=csv_trio["train"],
                control_path=csv_trio["control"],
                synthetic_path=csv_trio["synthetic"],
            )

    def test_all_columns_swept_when_no_secret_given(self, csv_trio, tmp_path):
        cfg = RunConfig(
            train_path=csv_trio["train"],
            control_path=csv_trio["control"],
            synthetic_path=csv_trio["synthetic"],
            seed=4,
            n_attacks=20,
            inference=InferenceBlock(),  # every column becomes a secret
        )
        report = run_evaluation(cfg)
        secrets = [r["setting"]["secret"] for r in report["results"]]
        assert secrets == ["color", "shape", "x", "y"]

    def test_repetitions_duplicate_settings(self, csv_trio, tmp_path):
        cfg = RunConfig(
            train_path=csv_trio["train"],
            control_path=csv_trio["control"],
            synthetic_path=csv_trio["synthetic"],
            seed=4,
            n_attacks=20,
            repetitions=2,
            inference=InferenceBlock(secrets=("y",)),
        )
        report = run_evaluation(cfg)
        assert [r["repetition"] for r in report["results"]] == [0, 1]
        # independent seed streams: the repeats are distinct runs
        r0, r1 = report["results"]
        assert r0["setting"] == r1["setting"]

    def test_singling_out_headline_takes_best_mode(self, csv_trio, tmp_path):
        report = run_evaluation(small_config(csv_trio, tmp_path))
        agg = report["aggregates"]["singling_out"]
        valid = [
            r["risk"]["value"]
            for r in report["results"]
            if r["attack"] == "singling_out" and not r["excluded"]
        ]
        if valid:
            assert agg["risk_best"] == max(valid)
        else:
            assert agg["risk_best"] is None


class TestConfigFile:
    def test_load_run_config(self, csv_trio, tmp_path):
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(
            json.dumps(
                {
                    "train": csv_trio["train"],
                    "control": csv_trio["control"],
                    "synthetic": csv_trio["synthetic"],
                    "seed": 5,
                    "n_attacks": 25,
                    "singling_out": {"modes": ["multivariate"], "n_attrs": [2, 3]},
                    "linkability": {
                        "aux_split": [["color", "x"], ["shape", "y"]],
                        "k": 2,
                    },
                    "inference": {"secrets": ["y"], "tolerance": 0.07},
                }
            )
        )
        cfg = load_run_config(cfg_path)
        assert cfg.seed == 5
        assert cfg.singling_out.n_attrs == (2, 3)
        assert cfg.linkability.k_values == (2,)
        assert cfg.inference.tolerance == 0.07

    def test_missing_dataset_key(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"train": "a.csv", "control": "b.csv"}))
        with pytest.raises(ConfigError, match="synthetic"):
            load_run_config(p)

    def test_shipped_example_configs_parse(self):
        from pathlib import Path

        from synthrisk.harness import load_linearity_config

        configs = Path(__file__).resolve().parent.parent / "configs"
        for name in ("adults.json", "texas_hospital.json", "us_census_1940.json"):
            cfg = load_run_config(configs / name)
            assert cfg.n_attacks == 2000
            assert cfg.singling_out and cfg.linkability and cfg.inference
            side_a, side_b = cfg.linkability.aux_split
            assert not set(side_a) & set(side_b)
        lin = load_linearity_config(configs / "linearity_experiment.json")
        assert lin.leak_fractions[0] == 0.0
        assert lin.leak_fractions[-1] == 1.0

    def test_bad_mode_rejected(self, csv_trio, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(
            json.dumps(
                {
                    "train": csv_trio["train"],
                    "control": csv_trio["control"],
                    "synthetic": csv_trio["synthetic"],
                    "singling_out": {"modes": ["sideways"]},
                }
            )
        )
        with pytest.raises(ConfigError, match="mode"):
            load_run_config(p)


class TestLinearityExperiment:
    def config(self, tmp_path, out=None):
        return LinearityConfig(
            original_path="-",
            schema_path=None,
            leak_fractions=(0.0, 1.0),
            control_fraction=0.25,
            release_fraction=0.5,
            syn_size=100,
            seed=3,
            n_attacks=30,
            output_path=out,
            singling_out=SinglingOutBlock(
                modes=(SinglingOutMode.MULTIVARIATE,), n_attrs=(3,)
            ),
            inference=InferenceBlock(secrets=("y",), tolerance=0.1),
        )

    def test_three_way_split_is_disjoint(self, tmp_path):
        original = make_original(300, seed=1)
        train, control, release = three_way_split(
            original, self.config(tmp_path)
        )
        assert train.n_rows + control.n_rows + release.n_rows == 300
        ids = lambda ds: {
            tuple(ds.record(i).value(c) for c, _ in SCHEMA)
            for i in range(ds.n_rows)
        }
        assert not ids(train) & ids(control)
        assert not ids(train) & ids(release)

    def test_rows_and_csv_output(self, tmp_path):
        original = make_original(300, seed=2)
        out = tmp_path / "linearity.csv"
        rows = linearity_experiment(original, self.config(tmp_path, str(out)))
        assert len(rows) == 4  # 2 leak fractions x 2 settings
        assert {r["f_l"] for r in rows} == {0.0, 1.0}
        for row in rows:
            assert set(row) >= {
                "attack", "f_l", "aux", "risk", "ci_low", "ci_high"
            }
        assert out.exists()
        header = out.read_text().splitlines()[0]
        assert header.startswith("attack,setting,f_l,aux,risk")

    def test_full_leak_beats_no_leak(self, tmp_path):
        original = make_original(400, seed=3)
        rows = linearity_experiment(original, self.config(tmp_path))
        by_fl = lambda fl, attack: [
            r["risk"] for r in rows if r["f_l"] == fl and r["attack"] == attack
        ]
        assert by_fl(1.0, "inference")[0] > by_fl(0.0, "inference")[0]


class TestCli:
    def test_evaluate_command(self, csv_trio, tmp_path, capsys):
        cfg_path = tmp_path / "run.json"
        report_path = tmp_path / "out.json"
        cfg_path.write_text(
            json.dumps(
                {
                    "train": csv_trio["train"],
                    "control": csv_trio["control"],
                    "synthetic": csv_trio["synthetic"],
                    "seed": 2,
                    "n_attacks": 20,
                    "inference": {"secrets": ["y"]},
                    "output": str(report_path),
                }
            )
        )
        assert main(["evaluate", "--config", str(cfg_path)]) == 0
        report = json.loads(report_path.read_text())
        validate_report(report)
        assert report["seed"] == 2

    def test_seed_override(self, csv_trio, tmp_path):
        cfg_path = tmp_path / "run.json"
        report_path = tmp_path / "out.json"
        cfg_path.write_text(
            json.dumps(
                {
                    "train": csv_trio["train"],
                    "control": csv_trio["control"],
                    "synthetic": csv_trio["synthetic"],
                    "n_attacks": 20,
                    "inference": {"secrets": ["y"]},
                    "output": str(report_path),
                }
            )
        )
        main(["evaluate", "--config", str(cfg_path), "--seed", "99"])
        assert json.loads(report_path.read_text())["seed"] == 99

    def test_leaky_command(self, tmp_path):
        original = make_original(200, seed=9)
        train, release = split(original, SplitSpec(0.5, seed=1))
        train_p, release_p = tmp_path / "t.csv", tmp_path / "r.csv"
        write_csv(train, train_p)
        write_csv(release, release_p)
        out = tmp_path / "syn.csv"
        code = main(
            [
                "leaky",
                "--train", str(train_p),
                "--release", str(release_p),
                "--f-l", "0.5",
                "--m", "60",
                "--seed", "4",
                "--out", str(out),
            ]
        )
        assert code == 0
        assert load_csv(out).n_rows == 60

    def test_bad_config_returns_nonzero(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{not json")
        assert main(["evaluate", "--config", str(p)]) == 2

    def test_experiment_linearity_command(self, tmp_path):
        original = make_original(300, seed=21)
        original_p = tmp_path / "original.csv"
        write_csv(original, original_p)
        out = tmp_path / "table.csv"
        cfg_path = tmp_path / "exp.json"
        cfg_path.write_text(
            json.dumps(
                {
                    "original": str(original_p),
                    "leak_fractions": [0.0, 1.0],
                    "split": {"control_fraction": 0.25, "release_fraction": 0.5},
                    "syn_size": 80,
                    "n_attacks": 25,
                    "seed": 6,
                    "output": str(out),
                    "inference": {"secrets": ["y"], "tolerance": 0.1},
                }
            )
        )
        assert main(["experiment", "linearity", "--config", str(cfg_path)]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 3  # header + 2 leak fractions x 1 setting


def test_worker_count_env_var(monkeypatch):
    from synthrisk.distance import worker_count

    monkeypatch.setenv("SYNTHRISK_WORKERS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("SYNTHRISK_WORKERS", "not-a-number")
    assert worker_count() >= 1
    monkeypatch.delenv("SYNTHRISK_WORKERS")
    assert worker_count() >= 1


def test_results_independent_of_worker_budget(csv_trio, tmp_path, monkeypatch):
    from synthrisk.harness import evaluate_datasets

    cfg = RunConfig(
        train_path="-", control_path="-", synthetic_path="-",
        seed=9, n_attacks=25,
        singling_out=SinglingOutBlock(
            modes=(SinglingOutMode.MULTIVARIATE,), n_attrs=(2, 3)
        ),
        inference=InferenceBlock(secrets=("y", "x")),
    )
    train = load_csv(csv_trio["train"])
    control = load_csv(csv_trio["control"])
    syn = load_csv(csv_trio["synthetic"])
    reports = []
    for workers in ("1", "4"):
        monkeypatch.setenv("SYNTHRISK_WORKERS", workers)
        report = evaluate_datasets(cfg, syn, train, control)
        report.pop("workers")
        reports.append(json.dumps(report, sort_keys=True))
    assert reports[0] == reports[1]
