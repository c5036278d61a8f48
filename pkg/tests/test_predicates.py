import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from synthrisk.predicates import (
    Atom,
    AtomOp,
    Predicate,
    evaluate,
    matches,
    multivariate_predicate,
    random_predicate,
    univariate_predicates,
)
from synthrisk.tabular import ColumnKind, Dataset, TabularError

CAT = ColumnKind.CATEGORICAL
CONT = ColumnKind.CONTINUOUS


def num_col(values, name="a"):
    return Dataset.from_columns([(name, CONT)], {name: list(values)})


def cat_col(values, name="a"):
    return Dataset.from_columns([(name, CAT)], {name: list(values)})


class TestEvaluate:
    def test_ge_min_matches_everything(self):
        ds = num_col([3.0, 1.0, 2.0])
        p = Predicate((Atom("a", AtomOp.GE, 1.0),))
        assert evaluate(p, ds) == 3

    def test_contradictory_atoms_match_nothing(self):
        ds = num_col([0.0, 0.25, 0.5])
        p = Predicate((Atom("a", AtomOp.LE, 0.0), Atom("a", AtomOp.GE, 1.0)))
        assert evaluate(p, ds) == 0

    def test_equality_count(self):
        ds = num_col([1.0, 2.0, 2.0, 3.0])
        p = Predicate((Atom("a", AtomOp.EQ, 2.0),))
        assert evaluate(p, ds) == 2

    def test_comparisons_against_missing_are_false(self):
        ds = num_col([None, 1.0])
        for op in (AtomOp.EQ, AtomOp.NEQ, AtomOp.LE, AtomOp.GE, AtomOp.LT, AtomOp.GT):
            mask = matches(Predicate((Atom("a", op, 1.0),)), ds)
            assert not mask[0]
        cs = cat_col([None, "x"])
        assert not matches(Predicate((Atom("a", AtomOp.EQ, "x"),)), cs)[0]
        assert not matches(Predicate((Atom("a", AtomOp.NEQ, "x"),)), cs)[0]

    def test_is_missing_matches_only_missing(self):
        ds = num_col([None, 1.0])
        mask = matches(Predicate((Atom("a", AtomOp.IS_MISSING),)), ds)
        assert mask.tolist() == [True, False]

    def test_unseen_categorical_value(self):
        ds = cat_col(["x", "y"])
        assert evaluate(Predicate((Atom("a", AtomOp.EQ, "z"),)), ds) == 0
        assert evaluate(Predicate((Atom("a", AtomOp.NEQ, "z"),)), ds) == 2

    def test_unknown_attribute(self):
        ds = num_col([1.0])
        with pytest.raises(TabularError, match="unknown"):
            evaluate(Predicate((Atom("b", AtomOp.EQ, 1.0),)), ds)

    def test_order_comparison_invalid_for_categorical(self):
        ds = cat_col(["x"])
        with pytest.raises(TabularError, match="not valid"):
            evaluate(Predicate((Atom("a", AtomOp.GT, "x"),)), ds)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_adding_an_atom_never_increases_matches(self, seed):
        rng = np.random.default_rng(seed)
        ds = Dataset.from_rows(
            [("c", CAT), ("x", CONT)],
            [
                (f"v{rng.integers(3)}", float(rng.integers(5)))
                for _ in range(30)
            ],
        )
        p1 = random_predicate(ds, 1, rng)
        extra = random_predicate(ds, 2, rng)
        combined = Predicate(tuple(list(p1.atoms) + list(extra.atoms)))
        assert evaluate(combined, ds) <= evaluate(p1, ds)


class TestUnivariate:
    def test_continuous_min_max(self):
        preds = univariate_predicates(num_col([1.0, 2.0, 2.0, 3.0]), "a")
        texts = {p.to_text() for p in preds}
        assert texts == {"a <= 1.0", "a >= 3.0"}

    def test_categorical_singletons(self):
        preds = univariate_predicates(cat_col(["A", "A", "B"]), "a")
        assert [p.to_text() for p in preds] == ["a == 'B'"]

    def test_single_missing_value_emits_is_missing(self):
        preds = univariate_predicates(cat_col(["A", None, "A"]), "a")
        assert [p.to_text() for p in preds] == ["a is missing"]

    def test_two_missing_values_do_not(self):
        preds = univariate_predicates(num_col([None, None, 1.0, 2.0]), "a")
        assert {p.to_text() for p in preds} == {"a <= 1.0", "a >= 2.0"}

    def test_unique_value_predicates_single_out_the_synthetic_data(self):
        ds = cat_col(["A", "B", "B", "C"])
        for p in univariate_predicates(ds, "a"):
            assert evaluate(p, ds) == 1

    def test_min_max_predicates_match_at_least_one_row(self):
        ds = num_col([5.0, 5.0, 7.0])
        for p in univariate_predicates(ds, "a"):
            assert evaluate(p, ds) >= 1


class TestMultivariate:
    def make(self):
        return Dataset.from_rows(
            [("age", CONT), ("rel", CAT)],
            [(20.0, "Wife"), (30.0, "Husband"), (40.0, "Own-child"),
             (50.0, "Husband"), (60.0, "Wife")],
        )

    def test_below_median_uses_le(self):
        ds = self.make()  # lower median of age is 40
        p = multivariate_predicate(ds, ["age"], ds.record(1))
        assert p.to_text() == "age <= 30.0"

    def test_at_or_above_median_uses_ge(self):
        ds = self.make()
        p = multivariate_predicate(ds, ["age"], ds.record(3))
        assert p.to_text() == "age >= 50.0"

    def test_categorical_uses_equality(self):
        ds = self.make()
        p = multivariate_predicate(ds, ["rel"], ds.record(1))
        assert p.to_text() == "rel == 'Husband'"

    def test_missing_value_uses_is_missing(self):
        ds = Dataset.from_rows([("x", CONT)], [(None,), (1.0,)])
        p = multivariate_predicate(ds, ["x"], ds.record(0))
        assert p.to_text() == "x is missing"

    def test_combined_text_form(self):
        ds = self.make()
        p = multivariate_predicate(ds, ["rel", "age"], ds.record(3))
        assert p.to_text() == "rel == 'Husband' & age >= 50.0"

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_always_matches_its_anchor_record(self, seed):
        rng = np.random.default_rng(seed)
        rows = []
        for _ in range(25):
            rows.append(
                (
                    None if rng.random() < 0.2 else float(rng.integers(10)),
                    None if rng.random() < 0.2 else f"v{rng.integers(4)}",
                )
            )
        ds = Dataset.from_rows([("x", CONT), ("c", CAT)], rows)
        i = int(rng.integers(ds.n_rows))
        p = multivariate_predicate(ds, ["x", "c"], ds.record(i))
        assert matches(p, ds)[i]
        assert evaluate(p, ds) >= 1


class TestRandomPredicate:
    def make(self):
        rng = np.random.default_rng(0)
        return Dataset.from_rows(
            [("c", CAT), ("x", CONT), ("y", CONT)],
            [
                (f"v{rng.integers(4)}", float(rng.normal()), float(rng.normal()))
                for _ in range(50)
            ],
        )

    def test_full_width_uses_every_attribute_once(self):
        ds = self.make()
        p = random_predicate(ds, 3, np.random.default_rng(1))
        assert sorted(a.attr for a in p.atoms) == ["c", "x", "y"]

    def test_seed_reproducibility(self):
        ds = self.make()
        a = random_predicate(ds, 2, np.random.default_rng(42))
        b = random_predicate(ds, 2, np.random.default_rng(42))
        assert a == b

    def test_categorical_ops_are_eq_or_neq_in_equal_shares(self):
        ds = cat_col(["u", "w"] * 10)
        rng = np.random.default_rng(7)
        n = 10_000
        ops = [random_predicate(ds, 1, rng).atoms[0].op for _ in range(n)]
        assert set(ops) <= {AtomOp.EQ, AtomOp.NEQ}
        n_eq = sum(op is AtomOp.EQ for op in ops)
        sigma = (n * 0.25) ** 0.5
        assert abs(n_eq - n / 2) <= 3 * sigma

    def test_continuous_ops_are_order_comparisons(self):
        ds = self.make()
        rng = np.random.default_rng(3)
        for _ in range(200):
            p = random_predicate(ds, 3, rng)
            for atom in p.atoms:
                if atom.attr != "c":
                    assert atom.op in {AtomOp.LT, AtomOp.GT, AtomOp.LE, AtomOp.GE}
                    mm = ds.nonmissing_minmax(atom.attr)
                    assert mm[0] <= atom.value <= mm[1]

    def test_n_attrs_bounds(self):
        ds = self.make()
        with pytest.raises(TabularError):
            random_predicate(ds, 0, np.random.default_rng(0))
        with pytest.raises(TabularError):
            random_predicate(ds, 4, np.random.default_rng(0))


def test_predicate_requires_atoms():
    with pytest.raises(ValueError):
        Predicate(())


def test_text_form_matches_report_flavor():
    p = Predicate(
        (Atom("col", AtomOp.EQ, "v"), Atom("col2", AtomOp.GE, 3.1))
    )
    assert p.to_text() == "col == 'v' & col2 >= 3.1"
