import numpy as np
import pytest
from fastapi.testclient import TestClient

from herbvec.cbow import CbowModel
from herbvec.checkpoint import save_checkpoint
from herbvec.neural import NeuralLM
from herbvec.ngram import fit_ngram
from herbvec.service import (
    LoadedModel,
    complete_herb,
    create_app,
    load_model_file,
    replace_models,
    suggest_for_model,
)

from conftest import make_vocab, random_corpus


@pytest.fixture(scope="module")
def served():
    rng = np.random.default_rng(99)
    vocab = make_vocab(9, counts=[30, 25, 20, 15, 10, 8, 6, 4, 2])
    corpus = random_corpus(rng, vocab, n=60, min_len=3, max_len=7)
    ngram = fit_ngram(corpus, vocab)
    cbow = CbowModel.create(vocab, dim=6, seed=0)
    rnnlm = NeuralLM.create(vocab, "rnnlm", dim=5, hidden=4, seed=1)
    pllm = NeuralLM.create(vocab, "pllm", dim=5, hidden=4, seed=2)
    for model in (cbow, rnnlm, pllm):
        for p in model.params().values():
            p[...] = rng.uniform(-0.4, 0.4, p.shape)
    loaded = [
        LoadedModel("ngram", "ngram", ngram, vocab),
        LoadedModel("cbow", "cbow", cbow, vocab, dims={"dim": 6}),
        LoadedModel("rnnlm", "rnnlm", rnnlm, vocab, dims={"dim": 5, "hidden": 4}),
        LoadedModel("pllm", "pllm", pllm, vocab, dims={"dim": 5, "hidden": 4}),
    ]
    app = create_app(loaded)
    return vocab, {m.name: m for m in loaded}, TestClient(app)


class TestModelsEndpoint:
    def test_empty_service(self):
        client = TestClient(create_app([]))
        assert client.get("/api/models").json() == []

    def test_lists_loaded_models(self, served):
        _, models, client = served
        got = client.get("/api/models").json()
        assert [m["name"] for m in got] == sorted(models)
        by_name = {m["name"]: m for m in got}
        assert by_name["pllm"]["type"] == "pllm"
        assert by_name["cbow"]["dims"] == {"dim": 6}

    def test_metadata_round_trips_from_checkpoint(self, tmp_path):
        rng = np.random.default_rng(5)
        vocab = make_vocab(4)
        corpus = random_corpus(rng, vocab, n=10)
        save_checkpoint(
            fit_ngram(corpus, vocab), tmp_path / "m.ckpt", metadata={"trained_on": "demo"}
        )
        loaded = load_model_file("ng", tmp_path / "m.ckpt")
        client = TestClient(create_app([loaded]))
        got = client.get("/api/models").json()
        assert got[0]["metadata"]["trained_on"] == "demo"


class TestSuggest:
    @pytest.mark.parametrize("name", ["ngram", "cbow", "rnnlm", "pllm"])
    def test_top1_matches_model_predict(self, served, name):
        vocab, models, client = served
        rng = np.random.default_rng(7)
        herb_ids = vocab.herb_ids()
        for _ in range(15):
            draft_ids = [
                int(herb_ids[i])
                for i in rng.choice(len(herb_ids), size=int(rng.integers(1, 5)), replace=False)
            ]
            herbs = [vocab.token_of(i) for i in draft_ids]
            response = client.post(
                "/api/suggest", json={"model": name, "herbs": herbs, "k": 3}
            )
            assert response.status_code == 200
            body = response.json()
            top = body["suggestions"][0]["herb"]
            assert vocab.require_id(top) == models[name].model.predict_next(draft_ids)

    def test_never_suggests_draft_herbs(self, served):
        vocab, _, client = served
        herbs = ["h00", "h01", "h02"]
        for name in ("ngram", "cbow", "rnnlm", "pllm"):
            body = client.post(
                "/api/suggest", json={"model": name, "herbs": herbs, "k": 50}
            ).json()
            suggested = {s["herb"] for s in body["suggestions"]}
            assert suggested.isdisjoint(herbs)

    def test_scores_strictly_ordered_and_finite(self, served):
        _, _, client = served
        body = client.post(
            "/api/suggest", json={"model": "ngram", "herbs": ["h00"], "k": 8}
        ).json()
        scores = [s["score"] for s in body["suggestions"]]
        assert all(np.isfinite(scores))
        assert scores == sorted(scores, reverse=True)

    def test_unknown_model_404(self, served):
        _, _, client = served
        response = client.post("/api/suggest", json={"model": "nope", "herbs": []})
        assert response.status_code == 404
        assert "error" in response.json()

    def test_invalid_k_422(self, served):
        _, _, client = served
        response = client.post(
            "/api/suggest", json={"model": "ngram", "herbs": [], "k": 0}
        )
        assert response.status_code == 422
        assert "error" in response.json()

    def test_unknown_herb_warns_not_fails(self, served):
        _, _, client = served
        body = client.post(
            "/api/suggest", json={"model": "ngram", "herbs": ["h00", "???"], "k": 3}
        ).json()
        assert any("???" in w for w in body["warnings"])
        assert len(body["suggestions"]) == 3

    def test_empty_draft_ngram_is_begin_prior(self, served):
        vocab, models, client = served
        body = client.post(
            "/api/suggest", json={"model": "ngram", "herbs": [], "k": 100}
        ).json()
        got = [s["herb"] for s in body["suggestions"]]
        model = models["ngram"].model
        bos = vocab.bos_id
        want = sorted(
            vocab.herb_ids(),
            key=lambda c: (-model.prob(c, (bos, bos), "forward"), c),
        )
        assert got == [vocab.token_of(i) for i in want]

    def test_empty_draft_cbow_falls_back_to_frequency(self, served):
        vocab, _, client = served
        body = client.post(
            "/api/suggest", json={"model": "cbow", "herbs": [], "k": 4}
        ).json()
        assert any("frequency" in w for w in body["warnings"])
        got = [s["herb"] for s in body["suggestions"]]
        assert got == ["h00", "h01", "h02", "h03"]  # descending corpus count

    def test_deterministic_responses(self, served):
        _, _, client = served
        payload = {"model": "pllm", "herbs": ["h03", "h05"], "k": 5}
        assert (
            client.post("/api/suggest", json=payload).json()
            == client.post("/api/suggest", json=payload).json()
        )

    def test_k_limits_length(self, served):
        _, _, client = served
        body = client.post(
            "/api/suggest", json={"model": "rnnlm", "herbs": ["h00"], "k": 2}
        ).json()
        assert len(body["suggestions"]) == 2


class TestHerbsEndpoint:
    def test_prefix_filter_matches_brute_force(self, served):
        vocab, _, client = served
        got = client.get("/api/herbs", params={"prefix": "h0", "k": 50}).json()
        want = sorted(
            (
                vocab.token_of(i)
                for i in vocab.herb_ids()
                if vocab.token_of(i).startswith("h0")
            ),
            key=lambda t: (-vocab.count_of(vocab.require_id(t)), t),
        )
        assert got == want

    def test_empty_prefix_most_frequent_first(self, served):
        _, _, client = served
        got = client.get("/api/herbs", params={"k": 3}).json()
        assert got == ["h00", "h01", "h02"]

    def test_no_match(self, served):
        _, _, client = served
        assert client.get("/api/herbs", params={"prefix": "zzz"}).json() == []


class TestSnapshotSwap:
    def test_replace_models_atomic_view(self, served):
        rng = np.random.default_rng(1)
        vocab = make_vocab(3)
        corpus = random_corpus(rng, vocab, n=10)
        app = create_app([LoadedModel("a", "ngram", fit_ngram(corpus, vocab), vocab)])
        client = TestClient(app)
        assert [m["name"] for m in client.get("/api/models").json()] == ["a"]
        replace_models(app, [LoadedModel("b", "ngram", fit_ngram(corpus, vocab), vocab)])
        assert [m["name"] for m in client.get("/api/models").json()] == ["b"]


class TestStaticUi:
    def test_serves_index_html(self, tmp_path):
        (tmp_path / "index.html").write_text("<html><body>ui</body></html>")
        rng = np.random.default_rng(1)
        vocab = make_vocab(3)
        corpus = random_corpus(rng, vocab, n=10)
        app = create_app(
            [LoadedModel("a", "ngram", fit_ngram(corpus, vocab), vocab)], ui_dir=tmp_path
        )
        client = TestClient(app)
        assert "ui" in client.get("/").text
        # api still reachable alongside the static mount
        assert client.get("/api/models").status_code == 200
