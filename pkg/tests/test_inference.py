import numpy as np
import pytest

from synthrisk.inference import InferenceConfig, guess_correct, run
from synthrisk.tabular import ColumnKind, Dataset, TabularError

CAT = ColumnKind.CATEGORICAL
CONT = ColumnKind.CONTINUOUS

SCHEMA = [("a1", CONT), ("a2", CONT), ("secret", CONT)]


def random_ds(rng, n, secret_fn=None):
    rows = []
    for _ in range(n):
        a1, a2 = rng.normal(), rng.normal()
        s = secret_fn(a1, a2) if secret_fn else rng.normal()
        rows.append((float(a1), float(a2), float(s)))
    return Dataset.from_rows(SCHEMA, rows)


class TestGuessCorrect:
    def test_relative_tolerance_worked_example(self):
        # |100 - 104| / 100 = 0.04
        assert guess_correct(100.0, 104.0, CONT, 0.05, secret_range=1.0)
        assert not guess_correct(100.0, 104.0, CONT, 0.03, secret_range=1.0)

    def test_zero_tolerance_means_exact(self):
        assert guess_correct(5.0, 5.0, CONT, 0.0, secret_range=1.0)
        assert not guess_correct(5.0, np.nextafter(5.0, 6.0), CONT, 0.0, 1.0)

    def test_zero_truth_falls_back_to_absolute_rule(self):
        assert guess_correct(0.0, 0.4, CONT, 0.05, secret_range=10.0)
        assert not guess_correct(0.0, 0.6, CONT, 0.05, secret_range=10.0)

    def test_categorical_exact_match(self):
        assert guess_correct("x", "x", CAT, 0.05, 0.0)
        assert not guess_correct("x", "y", CAT, 0.05, 0.0)

    def test_missing_matches_missing(self):
        assert guess_correct(None, None, CAT, 0.05, 0.0)
        assert not guess_correct("x", None, CAT, 0.05, 0.0)
        assert not guess_correct(None, 3.0, CONT, 0.05, 1.0)


class TestRun:
    def test_verbatim_target_recovers_secret(self):
        rng = np.random.default_rng(0)
        train = random_ds(rng, 20)
        control = random_ds(rng, 20)
        syn = train.select_rows(list(range(20)))
        cfg = InferenceConfig(
            aux_cols=("a1", "a2"), secret="secret", n_attacks=20, seed=1
        )
        res = run(syn, train, control, cfg)
        assert res.outcomes_main.all()

    def test_categorical_secret_mismatch_scores_zero(self):
        schema = [("a", CONT), ("s", CAT)]
        syn = Dataset.from_rows(schema, [(0.0, "u"), (10.0, "v")])
        train = Dataset.from_rows(schema, [(0.1, "v")])
        control = Dataset.from_rows(schema, [(9.9, "u")])
        cfg = InferenceConfig(aux_cols=("a",), secret="s", n_attacks=1, seed=0)
        res = run(syn, train, control, cfg)
        assert not res.outcomes_main[0]  # nearest syn guesses "u", truth "v"
        assert not res.outcomes_control[0]

    def test_monotone_in_tolerance(self):
        rng = np.random.default_rng(3)
        train = random_ds(rng, 40, secret_fn=lambda a, b: 3 * a + b)
        control = random_ds(rng, 40, secret_fn=lambda a, b: 3 * a + b)
        syn = random_ds(rng, 60, secret_fn=lambda a, b: 3 * a + b)
        previous = None
        for delta in (0.0, 0.05, 0.2, 1.0):
            cfg = InferenceConfig(
                aux_cols=("a1", "a2"), secret="secret",
                n_attacks=30, tolerance=delta, seed=5,
            )
            res = run(syn, train, control, cfg)
            if previous is not None:
                assert np.all(previous <= res.outcomes_main)
                assert np.all(previous_c <= res.outcomes_control)
            previous = res.outcomes_main
            previous_c = res.outcomes_control

    def test_missing_secret_targets_are_unscored(self):
        schema = [("a", CONT), ("s", CONT)]
        syn = Dataset.from_rows(schema, [(0.0, 1.0), (1.0, 2.0)])
        train = Dataset.from_rows(
            schema, [(0.0, 1.0), (0.5, None), (1.0, None)]
        )
        control = Dataset.from_rows(schema, [(0.0, 1.0), (1.0, 2.0), (2.0, 2.0)])
        cfg = InferenceConfig(aux_cols=("a",), secret="s", n_attacks=3, seed=2)
        res = run(syn, train, control, cfg)
        assert res.n_unscored_main == 2
        assert len(res.outcomes_main) == 1
        assert len(res.outcomes_naive) == 1
        assert res.n_unscored_control == 0

    def test_naive_guesses_use_secret_support(self):
        schema = [("a", CONT), ("s", CAT)]
        syn = Dataset.from_rows(
            schema, [(float(i), "only" if i else "rare") for i in range(10)]
        )
        train = Dataset.from_rows(schema, [(0.5, "only")] * 30)
        control = Dataset.from_rows(schema, [(0.5, "only")] * 30)
        cfg = InferenceConfig(aux_cols=("a",), secret="s", n_attacks=30, seed=4)
        res = run(syn, train, control, cfg)
        # naive draws uniformly over {"only", "rare"}: both hits and misses
        assert 0 < res.outcomes_naive.sum() < 30

    def test_identical_rule_for_main_and_control(self):
        # every row targeted on both sides: same outcome multiset either way
        rng = np.random.default_rng(8)
        shared = random_ds(rng, 30)
        syn = random_ds(rng, 50)
        cfg = InferenceConfig(
            aux_cols=("a1", "a2"), secret="secret", n_attacks=30, seed=6
        )
        res = run(syn, shared, shared, cfg)
        assert res.outcomes_main.sum() == res.outcomes_control.sum()

    def test_validation(self):
        rng = np.random.default_rng(1)
        ds = random_ds(rng, 10)
        with pytest.raises(ValueError, match="secret"):
            InferenceConfig(
                aux_cols=("a1", "secret"), secret="secret", n_attacks=5
            )
        with pytest.raises(ValueError, match="aux_cols"):
            InferenceConfig(aux_cols=(), secret="s", n_attacks=5)
        with pytest.raises(TabularError, match="exceeds"):
            run(
                ds, ds, ds,
                InferenceConfig(
                    aux_cols=("a1",), secret="secret", n_attacks=100
                ),
            )

    def test_deterministic(self):
        rng = np.random.default_rng(10)
        syn = random_ds(rng, 40)
        train = random_ds(rng, 30)
        control = random_ds(rng, 30)
        cfg = InferenceConfig(
            aux_cols=("a1", "a2"), secret="secret", n_attacks=20, seed=3
        )
        a = run(syn, train, control, cfg)
        b = run(syn, train, control, cfg)
        assert a.outcomes_main.tolist() == b.outcomes_main.tolist()
        assert a.outcomes_naive.tolist() == b.outcomes_naive.tolist()
        assert a.guesses == b.guesses
