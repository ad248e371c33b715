"""Seed handling and the linear margin classifier."""

import io
import warnings

import numpy as np
import pytest

from dictforge.classifier import (
    SeedSet,
    SvmModel,
    build_dictionary,
    read_seeds,
    resolve_seeds,
    svm_objective,
    train_svm,
    write_seeds,
)


def separable_embeddings():
    return {
        "a": np.array([1.0, 0.0]),
        "b": np.array([2.0, 0.0]),
        "c": np.array([-1.0, 0.0]),
        "d": np.array([-2.0, 0.0]),
    }


SEEDS = SeedSet.make(["a", "b"], ["c", "d"])


class TestSeedSet:
    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            SeedSet.make(["flu", "ebola"], ["mutant", "flu"])

    def test_duplicate_within_class_rejected(self):
        with pytest.raises(ValueError):
            SeedSet.make(["flu", "Flu"], ["mutant"])

    def test_file_roundtrip(self, tmp_path):
        seeds = SeedSet.make(["human immunodeficiency", "influenza"], ["mutant"])
        buf = io.StringIO()
        write_seeds(seeds, buf)
        p = tmp_path / "seeds.txt"
        p.write_text(buf.getvalue(), encoding="utf-8")
        assert read_seeds(p) == seeds

    def test_file_with_comments(self, tmp_path):
        p = tmp_path / "seeds.txt"
        p.write_text(
            "# example seeds\n[positive]\nflu  # common\n\n[negative]\nmutant\n",
            encoding="utf-8",
        )
        seeds = read_seeds(p)
        assert seeds.positives == ("flu",)
        assert seeds.negatives == ("mutant",)

    def test_phrase_before_section_rejected(self, tmp_path):
        p = tmp_path / "seeds.txt"
        p.write_text("flu\n[positive]\n", encoding="utf-8")
        with pytest.raises(ValueError):
            read_seeds(p)

    def test_resolution_reports_missing(self):
        pos, neg, missing = resolve_seeds(SEEDS, {"a": np.zeros(2), "c": np.zeros(2)})
        assert pos == ["a"]
        assert neg == ["c"]
        assert missing == ["b", "d"]


class TestTraining:
    def test_separable_example(self):
        model = train_svm(separable_embeddings(), SEEDS, C=1.0)
        assert model.weights[0] > 0
        for phrase in ("a", "b"):
            assert model.predict(separable_embeddings()[phrase])[0] == "entity"
        for phrase in ("c", "d"):
            assert model.predict(separable_embeddings()[phrase])[0] == "not_entity"

    def test_matches_convex_oracle(self):
        cp = pytest.importorskip("cvxpy")
        rng = np.random.default_rng(0)
        for trial in range(3):
            n, d = 12, 4
            w_true = rng.standard_normal(d)
            X = rng.standard_normal((n, d))
            y = np.where(X @ w_true >= 0, 1.0, -1.0)
            X += 0.6 * y[:, None] * w_true / np.linalg.norm(w_true)  # margin
            C = [0.1, 1.0, 10.0][trial]

            emb = {f"p{i}": X[i] for i in range(n)}
            seeds = SeedSet.make(
                [f"p{i}" for i in range(n) if y[i] > 0],
                [f"p{i}" for i in range(n) if y[i] < 0],
            )
            model = train_svm(emb, seeds, C=C)
            ours = svm_objective(model.weights, model.bias, X, y, C)

            w = cp.Variable(d)
            b = cp.Variable()
            obj = 0.5 * (cp.sum_squares(w) + cp.square(b)) + C * cp.sum(
                cp.pos(1 - cp.multiply(y, X @ w + b))
            )
            problem = cp.Problem(cp.Minimize(obj))
            problem.solve()
            assert abs(ours - problem.value) <= 1e-4

    def test_objective_beats_zero_and_random(self):
        rng = np.random.default_rng(1)
        emb = {f"p{i}": rng.standard_normal(3) for i in range(10)}
        seeds = SeedSet.make([f"p{i}" for i in range(5)], [f"p{i}" for i in range(5, 10)])
        model = train_svm(emb, seeds, C=0.5)
        X = np.vstack([emb[f"p{i}"] for i in range(10)])
        y = np.array([1.0] * 5 + [-1.0] * 5)
        best = svm_objective(model.weights, model.bias, X, y, 0.5)
        assert best <= svm_objective(np.zeros(3), 0.0, X, y, 0.5) + 1e-8
        for _ in range(5):
            w = rng.standard_normal(3)
            assert best <= svm_objective(w, rng.standard_normal(), X, y, 0.5) + 1e-8

    def test_seeds_classified_on_separable_data(self):
        model = train_svm(separable_embeddings(), SEEDS, C=10.0)
        emb = separable_embeddings()
        for p in SEEDS.positives:
            assert model.decision(emb[p]) > 0
        for n in SEEDS.negatives:
            assert model.decision(emb[n]) < 0

    def test_deterministic(self):
        m1 = train_svm(separable_embeddings(), SEEDS, C=1.0)
        m2 = train_svm(separable_embeddings(), SEEDS, C=1.0)
        np.testing.assert_array_equal(m1.weights, m2.weights)
        assert m1.bias == m2.bias

    def test_missing_seed_warns_but_trains(self):
        emb = separable_embeddings()
        seeds = SeedSet.make(["a", "b", "ghost"], ["c", "d"])
        with pytest.warns(UserWarning, match="ghost"):
            model = train_svm(emb, seeds, C=1.0)
        assert model.weights.shape == (2,)

    def test_one_class_fails(self):
        emb = separable_embeddings()
        with pytest.raises(ValueError):
            train_svm({"a": emb["a"], "b": emb["b"]}, SeedSet.make(["a", "b"], ["c"]), C=1.0)

    def test_dimension_mismatch_fails(self):
        emb = {"a": np.ones(2), "c": np.ones(3)}
        with pytest.raises(ValueError):
            train_svm(emb, SeedSet.make(["a"], ["c"]), C=1.0)

    def test_nonpositive_c_fails(self):
        with pytest.raises(ValueError):
            train_svm(separable_embeddings(), SEEDS, C=0.0)


class TestPredict:
    def test_sign_and_score(self):
        model = SvmModel(weights=np.array([1.0, 0.0]), bias=0.0, C=1.0, dims_used=2)
        label, score = model.predict(np.array([0.3, 9.0]))
        assert label == "entity"
        assert score == pytest.approx(0.3)

    def test_boundary_counts_as_entity(self):
        model = SvmModel(weights=np.array([1.0, 0.0]), bias=0.0, C=1.0, dims_used=2)
        label, score = model.predict(np.array([0.0, 5.0]))
        assert label == "entity"
        assert score == 0.0

    def test_matches_dot_product_oracle(self):
        rng = np.random.default_rng(2)
        w = rng.standard_normal(4)
        model = SvmModel(weights=w, bias=0.25, C=1.0, dims_used=4)
        for _ in range(20):
            x = rng.standard_normal(4)
            assert model.decision(x) == pytest.approx(w @ x + 0.25)

    def test_dimension_check(self):
        model = SvmModel(weights=np.ones(2), bias=0.0, C=1.0, dims_used=2)
        with pytest.raises(ValueError):
            model.decision(np.ones(3))

    def test_nonfinite_model_rejected(self):
        with pytest.raises(ValueError):
            SvmModel(weights=np.array([np.inf]), bias=0.0, C=1.0, dims_used=1)


class TestBuildDictionary:
    def test_ranked_by_margin(self):
        model = SvmModel(weights=np.array([1.0]), bias=0.0, C=1.0, dims_used=1)
        emb = {"x": np.array([0.5]), "y": np.array([2.0]), "z": np.array([-1.0])}
        d = build_dictionary(["x", "y", "z"], emb, model)
        assert list(d.scores) == ["y", "x"]
        assert d.provenance == "cca"
        assert d.metadata["C"] == "1.0"

    def test_all_negative_warns_empty(self):
        model = SvmModel(weights=np.array([1.0]), bias=0.0, C=1.0, dims_used=1)
        emb = {"x": np.array([-0.5])}
        with pytest.warns(UserWarning):
            d = build_dictionary(["x"], emb, model)
        assert len(d) == 0

    def test_missing_embedding_fails(self):
        model = SvmModel(weights=np.array([1.0]), bias=0.0, C=1.0, dims_used=1)
        with pytest.raises(KeyError):
            build_dictionary(["nope"], {}, model)

    def test_threshold_monotonicity(self):
        model = SvmModel(weights=np.array([1.0]), bias=0.0, C=1.0, dims_used=1)
        rng = np.random.default_rng(3)
        emb = {f"p{i}": rng.standard_normal(1) for i in range(50)}
        prev = None
        for t in np.linspace(0.0, 2.0, 9):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                d = build_dictionary(sorted(emb), emb, model, threshold=float(t))
            got = set(d.scores)
            if prev is not None:
                assert got <= prev
            prev = got

    def test_threshold_keeps_boundary_score(self):
        model = SvmModel(weights=np.array([1.0]), bias=0.0, C=1.0, dims_used=1)
        emb = {"edge": np.array([0.5]), "below": np.array([0.499])}
        d = build_dictionary(["edge", "below"], emb, model, threshold=0.5)
        assert list(d.scores) == ["edge"]
        assert d.metadata["threshold"] == "0.5"

    def test_default_threshold_matches_classifier(self):
        model = SvmModel(weights=np.array([1.0]), bias=-0.2, C=1.0, dims_used=1)
        rng = np.random.default_rng(11)
        emb = {f"p{i}": rng.standard_normal(1) for i in range(30)}
        d = build_dictionary(sorted(emb), emb, model)
        accepted = {p for p, v in emb.items() if model.predict(v)[0] == "entity"}
        assert set(d.scores) == accepted

    def test_negative_threshold_rejected(self):
        model = SvmModel(weights=np.array([1.0]), bias=0.0, C=1.0, dims_used=1)
        with pytest.raises(ValueError):
            build_dictionary([], {}, model, threshold=-0.1)
