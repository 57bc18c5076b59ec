import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from herbvec.corpus import PredictionItem
from herbvec.embeddings import EmbeddingMatrix
from herbvec.errors import ConfigError, DataError
from herbvec.evaluation import (
    AnnotationRow,
    BenchmarkPair,
    build_benchmark,
    eval_prediction,
    eval_similarity,
    generate_candidate_pairs,
    load_annotations,
    load_benchmark,
    save_benchmark,
    spearman,
)

from conftest import make_vocab
from oracles import counting_ranks, counting_spearman


class TestBuildBenchmark:
    # the three worked rows: unanimous (1,1,1), split (2,2,1), split (2,1,1)
    ROWS = [
        AnnotationRow("乌头", "栀子", (1, 1, 1)),
        AnnotationRow("赤芍", "藿香", (2, 2, 1)),
        AnnotationRow("苍术", "乌梅肉", (2, 1, 1)),
    ]

    def test_means(self):
        pairs = build_benchmark(self.ROWS, keep=3)
        scores = {(p.herb1, p.herb2): round(p.score, 2) for p in pairs}
        assert scores[("乌头", "栀子")] == 1.00
        assert scores[("赤芍", "藿香")] == 1.67
        assert scores[("苍术", "乌梅肉")] == 1.33

    def test_agreement_order(self):
        pairs = build_benchmark(self.ROWS, keep=3)
        order = [(p.herb1, p.herb2) for p in pairs]
        assert order.index(("乌头", "栀子")) < order.index(("赤芍", "藿香"))
        # std ties between the two split rows break by ascending mean
        assert order.index(("苍术", "乌梅肉")) < order.index(("赤芍", "藿香"))

    def test_keep_truncates(self):
        rows = self.ROWS + [AnnotationRow("a", "b", (5, 1, 1))]
        pairs = build_benchmark(rows, keep=2)
        assert len(pairs) == 2
        kept = {(p.herb1, p.herb2) for p in pairs}
        assert ("a", "b") not in kept

    def test_output_subset_of_input(self):
        pairs = build_benchmark(self.ROWS, keep=2)
        inputs = {(r.herb1, r.herb2) for r in self.ROWS}
        assert {(p.herb1, p.herb2) for p in pairs} <= inputs

    def test_too_few_rows(self):
        with pytest.raises(DataError):
            build_benchmark(self.ROWS, keep=80)

    def test_duplicate_pair_rejected(self):
        rows = self.ROWS + [AnnotationRow("栀子", "乌头", (3, 3, 3))]
        with pytest.raises(DataError):
            build_benchmark(rows, keep=2)

    def test_score_bounds_validated(self):
        with pytest.raises(DataError):
            AnnotationRow("a", "b", (0, 3, 3))


class TestCandidatePairs:
    def test_exhaustive_three_herbs(self):
        vocab = make_vocab(3)
        pairs = generate_candidate_pairs(vocab, n=3, seed=0)
        normalized = {tuple(sorted(p)) for p in pairs}
        assert normalized == {("h00", "h01"), ("h00", "h02"), ("h01", "h02")}

    def test_no_self_pair_no_duplicates(self):
        vocab = make_vocab(10)
        pairs = generate_candidate_pairs(vocab, n=30, seed=1)
        assert all(a != b for a, b in pairs)
        assert len({tuple(sorted(p)) for p in pairs}) == 30

    def test_deterministic(self):
        vocab = make_vocab(10)
        assert generate_candidate_pairs(vocab, 15, seed=9) == generate_candidate_pairs(
            vocab, 15, seed=9
        )

    def test_too_many_requested(self):
        vocab = make_vocab(3)
        with pytest.raises(ConfigError):
            generate_candidate_pairs(vocab, n=4)


class TestSpearman:
    def test_identical_ranking(self):
        assert spearman([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)

    def test_reversed_ranking(self):
        assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_closed_form_no_ties(self):
        # 1 - 6 * sum(d^2) / (n(n^2-1)) = 1 - 12/60
        assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)

    def test_matches_counting_oracle_with_ties(self, rng):
        for _ in range(300):
            n = int(rng.integers(3, 25))
            xs = rng.integers(0, 6, n).astype(float)
            ys = rng.integers(0, 6, n).astype(float)
            if np.all(xs == xs[0]) or np.all(ys == ys[0]):
                continue
            from herbvec.evaluation import average_ranks

            assert list(average_ranks(xs)) == counting_ranks(list(xs))
            assert spearman(xs, ys) == pytest.approx(
                counting_spearman(list(xs), list(ys)), abs=1e-12
            )

    def test_symmetry(self, rng):
        xs = rng.standard_normal(15)
        ys = rng.standard_normal(15)
        assert spearman(xs, ys) == spearman(ys, xs)

    @given(
        st.lists(st.integers(min_value=0, max_value=20), min_size=3, max_size=15),
        st.sampled_from(["exp", "cube", "affine"]),
    )
    @settings(max_examples=80, deadline=None)
    def test_invariant_under_monotone_transform(self, values, transform):
        xs = np.array(values, dtype=float)
        rng = np.random.default_rng(0)
        ys = rng.permutation(len(xs)).astype(float)
        if np.all(xs == xs[0]):
            return
        fn = {
            "exp": lambda v: np.exp(v / 5),
            "cube": lambda v: v**3 + v,
            "affine": lambda v: 2.5 * v + 7,
        }[transform]
        assert spearman(fn(xs), ys) == pytest.approx(spearman(xs, ys), abs=1e-9)

    def test_constant_input_rejected(self):
        with pytest.raises(DataError):
            spearman([1, 1, 1], [1, 2, 3])

    def test_length_checks(self):
        with pytest.raises(ConfigError):
            spearman([1], [1])
        with pytest.raises(ConfigError):
            spearman([1, 2], [1, 2, 3])


class TestEvalSimilarity:
    def _embedding_for(self, gold_pairs, rng):
        # vectors arranged so pair cosine is a strictly increasing function
        # of the gold score: put both herbs at a shared angle per pair
        tokens = []
        for p in gold_pairs:
            tokens.extend([p.herb1, p.herb2])
        vocab = make_vocab(0)
        from herbvec.corpus import UNK_TOKEN, Vocabulary

        vocab = Vocabulary.from_tokens([UNK_TOKEN] + tokens)
        vectors = np.zeros((vocab.size, 2))
        for p in gold_pairs:
            angle = (5.0 - p.score) / 5.0 * (math.pi / 2)
            a, b = vocab.require_id(p.herb1), vocab.require_id(p.herb2)
            vectors[a] = [1.0, 0.0]
            vectors[b] = [math.cos(angle), math.sin(angle)]
        vectors[vocab.unk_id] = [1e-3, 0.0]
        return EmbeddingMatrix(vectors=vectors, vocab=vocab)

    def _pairs(self, scores):
        return [
            BenchmarkPair(f"a{i}", f"b{i}", s) for i, s in enumerate(scores)
        ]

    def test_monotone_model_gives_one(self, rng):
        pairs = self._pairs([1.0, 2.0, 3.0, 4.0, 5.0])
        emb = self._embedding_for(pairs, rng)
        rho, coverage = eval_similarity(emb, pairs)
        assert rho == pytest.approx(1.0)
        assert coverage == 1.0

    def test_out_of_vocabulary_dropped(self, rng):
        pairs = self._pairs([1.0, 2.5, 4.0, 5.0])
        emb = self._embedding_for(pairs, rng)
        pairs_with_oov = pairs + [BenchmarkPair("missing", "also-missing", 3.0)]
        rho, coverage = eval_similarity(emb, pairs_with_oov)
        assert coverage == pytest.approx(4 / 5)

    def test_matches_brute_force_rank_oracle(self, rng):
        vocab = make_vocab(12)
        vectors = rng.standard_normal((vocab.size, 4))
        emb = EmbeddingMatrix(vectors=vectors, vocab=vocab)
        herbs = [vocab.token_of(i) for i in vocab.herb_ids()]
        pairs = [
            BenchmarkPair(herbs[i], herbs[j], float(1 + (i * j) % 5))
            for i in range(6)
            for j in range(6, 12)
        ]
        rho, _ = eval_similarity(emb, pairs)
        from herbvec.embeddings import cosine

        model_scores = [
            cosine(
                vectors[vocab.require_id(p.herb1)], vectors[vocab.require_id(p.herb2)]
            )
            for p in pairs
        ]
        want = counting_spearman(model_scores, [p.score for p in pairs])
        assert rho == pytest.approx(want, abs=1e-12)

    def test_invariant_under_positive_rescale(self, rng):
        vocab = make_vocab(8)
        vectors = rng.standard_normal((vocab.size, 3))
        herbs = [vocab.token_of(i) for i in vocab.herb_ids()]
        pairs = [
            BenchmarkPair(herbs[i], herbs[i + 1], float(1 + i % 5))
            for i in range(7)
        ]
        rho1, _ = eval_similarity(EmbeddingMatrix(vectors=vectors, vocab=vocab), pairs)
        rho2, _ = eval_similarity(
            EmbeddingMatrix(vectors=37.5 * vectors, vocab=vocab), pairs
        )
        assert rho1 == pytest.approx(rho2, abs=1e-12)

    def test_too_few_evaluated(self, rng):
        vocab = make_vocab(4)
        emb = EmbeddingMatrix(vectors=rng.standard_normal((vocab.size, 2)), vocab=vocab)
        pairs = [BenchmarkPair("nope1", "nope2", 2.0), BenchmarkPair("h00", "h01", 3.0)]
        with pytest.raises(DataError):
            eval_similarity(emb, pairs)


class _Echo:
    def __init__(self, answers):
        self.answers = answers
        self.i = 0

    def predict_blank(self, context_ids, blank_pos):
        out = self.answers[self.i]
        self.i += 1
        return out


class TestEvalPrediction:
    def _items(self, n, answer=1):
        return [PredictionItem((2, 3, 4), 1, answer) for _ in range(n)]

    def test_perfect_predictor(self):
        items = self._items(10)
        model = _Echo([it.answer for it in items])
        assert eval_prediction(model, items) == 1.0

    def test_constant_wrong_predictor(self):
        items = self._items(10, answer=1)
        model = _Echo([99] * 10)
        assert eval_prediction(model, items) == 0.0

    def test_uniform_random_predictor_near_chance(self, rng):
        V = 20
        n = 4000
        items = [
            PredictionItem((2, 3, 4), 1, int(rng.integers(V))) for _ in range(n)
        ]
        model = _Echo([int(rng.integers(V)) for _ in range(n)])
        accuracy = eval_prediction(model, items)
        p = 1.0 / V
        sigma = math.sqrt(p * (1 - p) / n)
        assert abs(accuracy - p) < 3 * sigma + 1e-12

    def test_empty_testset_rejected(self):
        with pytest.raises(DataError):
            eval_prediction(_Echo([]), [])


class TestBenchmarkIO:
    def test_round_trip(self):
        pairs = [BenchmarkPair("a", "b", 1.6667), BenchmarkPair("c", "d", 3.0)]
        buf = io.StringIO()
        save_benchmark(pairs, buf)
        assert "a\tb\t1.67" in buf.getvalue()
        buf.seek(0)
        loaded = load_benchmark(buf)
        assert loaded[0].score == pytest.approx(1.67)

    def test_annotations_round_trip(self):
        text = "乌头\t栀子\t1\t1\t1\n赤芍\t藿香\t2\t2\t1\n"
        rows = load_annotations(io.StringIO(text))
        assert rows[0].scores == (1, 1, 1)
        assert rows[1].herb2 == "藿香"

    def test_bad_annotation_line(self):
        with pytest.raises(DataError):
            load_annotations(io.StringIO("a\tb\n"))
