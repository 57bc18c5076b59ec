"""Command-line entry point: ingest, train, evaluate, query, serve."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import checkpoint, corpus, evaluation, trainer
from .cbow import CbowModel
from .embeddings import EmbeddingMatrix, load_text, save_text
from .errors import (
    CheckpointError,
    ConfigError,
    ConvergenceError,
    DataError,
    HerbvecError,
    TrainingError,
    ZeroVectorError,
)
from .lsa import LsaModel
from .neural import NeuralLM
from .ngram import fit_ngram

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

MODEL_NAMES = ("ngram", "lsa", "cbow", "rnnlm", "pllm")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _read_corpus(path, diagnostics=None):
    with open(path, encoding="utf-8") as fh:
        return corpus.parse_corpus(fh, source=str(path), diagnostics=diagnostics)


def _read_vocab(path):
    with open(path, encoding="utf-8") as fh:
        return corpus.load_vocabulary(fh)


def _encoded(path, vocab):
    return corpus.encode_corpus(_read_corpus(path), vocab)


def _emit(args, record):
    if getattr(args, "json", False):
        print(json.dumps(record, ensure_ascii=False))
    else:
        for key, value in record.items():
            if isinstance(value, float):
                value = f"{value:.4f}"
            print(f"{key}: {value}")


def cmd_ingest(args):
    diagnostics: list[str] = []
    raw = _read_corpus(args.corpus, diagnostics)
    for message in diagnostics:
        print(f"warning: {message}", file=sys.stderr)
    if not raw:
        raise DataError("corpus file holds no prescription")
    projected = corpus.project_rare_herbs(raw, threshold=args.threshold)
    vocab = corpus.build_vocabulary(projected, min_count=args.min_count)
    train, dev, test = corpus.split_corpus(
        projected, ratios=tuple(args.ratios), seed=args.seed
    )
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    provenance = (
        f"# source={args.corpus} seed={args.seed} threshold={args.threshold} "
        f"min_count={args.min_count} ratios={','.join(str(r) for r in args.ratios)}\n"
    )
    for name, part in (("train", train), ("dev", dev), ("test", test)):
        with open(outdir / f"{name}.txt", "w", encoding="utf-8") as fh:
            fh.write(provenance)
            corpus.save_corpus(part, fh)
    with open(outdir / "vocab.tsv", "w", encoding="utf-8") as fh:
        corpus.save_vocabulary(vocab, fh)
    print(
        f"ingested {len(raw)} prescriptions -> train {len(train)}, "
        f"dev {len(dev)}, test {len(test)}; vocabulary {vocab.size} ids"
    )
    return EXIT_OK


def _parse_ratios(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three comma-separated numbers")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError("ratios must be numeric") from None


def cmd_train(args):
    vocab = _read_vocab(args.vocab)
    train_set = _encoded(args.train, vocab)
    metadata = {"trained_on": str(args.train)}

    if args.model == "ngram":
        model = fit_ngram(train_set, vocab, smoothing=args.smoothing)
    elif args.model == "lsa":
        model = LsaModel.fit(train_set, vocab, rank=args.rank, seed=args.seed)
    else:
        if not args.dev:
            raise ConfigError(f"--dev is required to train {args.model}")
        dev_set = _encoded(args.dev, vocab)
        if args.model == "cbow":
            model = CbowModel.create(
                vocab,
                dim=args.dim,
                window=args.window,
                negatives=args.negatives,
                seed=args.seed,
            )
        else:
            model = NeuralLM.create(
                vocab, mode=args.model, dim=args.dim, hidden=args.hidden, seed=args.seed
            )
        config = trainer.TrainConfig(
            learning_rate=args.lr,
            batch_size=args.batch_size,
            max_epochs=args.epochs,
            patience=args.patience,
            seed=args.seed,
        )
        history = trainer.fit(model, train_set, dev_set, config)
        metadata.update(
            {
                "best_epoch": history.best_epoch,
                "dev_accuracy": history.best_accuracy,
                "epochs_run": len(history.epochs),
            }
        )
        print(
            f"trained {args.model}: best dev accuracy "
            f"{history.best_accuracy:.4f} at epoch {history.best_epoch}"
        )
    checkpoint.save_checkpoint(model, args.out, metadata=metadata)
    print(f"checkpoint written to {args.out}")
    return EXIT_OK


def cmd_make_testset(args):
    vocab = _read_vocab(args.vocab)
    encoded = _encoded(args.corpus, vocab)
    items = corpus.make_prediction_testset(encoded, seed=args.seed, vocab=vocab)
    with open(args.out, "w", encoding="utf-8") as fh:
        corpus.save_testset(items, vocab, fh)
    print(f"wrote {len(items)} prediction items to {args.out}")
    return EXIT_OK


def cmd_eval_pred(args):
    model = checkpoint.load_checkpoint(args.model)
    with open(args.testset, encoding="utf-8") as fh:
        items = corpus.load_testset(fh, model.vocab)
    accuracy = evaluation.eval_prediction(model, items)
    header = checkpoint.read_header(args.model)
    _emit(
        args,
        {"model": header["type"], "accuracy": accuracy, "n": len(items)},
    )
    return EXIT_OK


def _load_embeddings(args) -> EmbeddingMatrix:
    if args.embeddings:
        with open(args.embeddings, encoding="utf-8") as fh:
            return load_text(fh)
    model = checkpoint.load_checkpoint(args.model)
    if isinstance(model, LsaModel):
        return model.embeddings
    if hasattr(model, "extract_embeddings"):
        return model.extract_embeddings()
    raise DataError("this checkpoint does not carry herb vectors")


def cmd_eval_sim(args):
    emb = _load_embeddings(args)
    with open(args.benchmark, encoding="utf-8") as fh:
        benchmark = evaluation.load_benchmark(fh)
    rho, coverage = evaluation.eval_similarity(emb, benchmark)
    name = args.embeddings or args.model
    _emit(
        args,
        {
            "model": str(name),
            "rho": round(rho, 4),
            "coverage": coverage,
            "n": len(benchmark),
        },
    )
    return EXIT_OK


def cmd_build_benchmark(args):
    with open(args.annotations, encoding="utf-8") as fh:
        rows = evaluation.load_annotations(fh)
    pairs = evaluation.build_benchmark(rows, keep=args.keep)
    with open(args.out, "w", encoding="utf-8") as fh:
        evaluation.save_benchmark(pairs, fh)
    print(f"kept {len(pairs)} of {len(rows)} pairs -> {args.out}")
    return EXIT_OK


def cmd_export_embeddings(args):
    model = checkpoint.load_checkpoint(args.model)
    if isinstance(model, LsaModel):
        emb = model.embeddings
    elif hasattr(model, "extract_embeddings"):
        emb = model.extract_embeddings()
    else:
        raise DataError("this checkpoint does not carry herb vectors")
    with open(args.out, "w", encoding="utf-8") as fh:
        save_text(emb, fh)
    print(f"wrote {emb.vectors.shape[0]} vectors of dimension {emb.dim} to {args.out}")
    return EXIT_OK


def cmd_nn(args):
    emb = _load_embeddings(args)
    herb_id = emb.vocab.require_id(args.herb)
    neighbors = emb.nearest_neighbors(herb_id, args.k)
    record = {
        "herb": args.herb,
        "neighbors": [
            {"herb": emb.vocab.token_of(i), "score": round(s, 6)} for i, s in neighbors
        ],
    }
    if args.json:
        print(json.dumps(record, ensure_ascii=False))
    else:
        for entry in record["neighbors"]:
            print(f"{entry['herb']}\t{entry['score']:.6f}")
    return EXIT_OK


def cmd_analogy(args):
    emb = _load_embeddings(args)
    ids = [emb.vocab.require_id(t) for t in (args.a, args.b, args.c)]
    results = emb.analogy(*ids, k=args.k)
    record = {
        "query": f"{args.b} - {args.a} + {args.c}",
        "results": [
            {"herb": emb.vocab.token_of(i), "score": round(s, 6)} for i, s in results
        ],
    }
    if args.json:
        print(json.dumps(record, ensure_ascii=False))
    else:
        for entry in record["results"]:
            print(f"{entry['herb']}\t{entry['score']:.6f}")
    return EXIT_OK


def cmd_serve(args):
    from . import service

    models = []
    for entry in args.models:
        if "=" not in entry:
            raise ConfigError("--models entries must look like name=path.ckpt")
        name, path = entry.split("=", 1)
        models.append(service.load_model_file(name, path))
    app = service.create_app(models, ui_dir=args.ui)
    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="herbvec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a corpus, build the vocabulary, split")
    p.add_argument("--corpus", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--threshold", type=int, default=5,
                   help="rare-token projection count threshold")
    p.add_argument("--min-count", type=int, default=1, dest="min_count")
    p.add_argument("--ratios", type=_parse_ratios, default=[0.9, 0.05, 0.05])
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("train", help="fit a model and write a checkpoint")
    p.add_argument("--model", required=True, choices=MODEL_NAMES)
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--hidden", type=int, default=100)
    p.add_argument("--rank", type=int, default=20, help="lsa vector size")
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=32, dest="batch_size")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--patience", type=int, default=3)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("make-testset", help="blank one herb per held-out prescription")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_testset)

    p = sub.add_parser("eval-pred", help="blank-prediction accuracy of a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--testset", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval_pred)

    p = sub.add_parser("eval-sim", help="rank correlation against a benchmark")
    p.add_argument("--model")
    p.add_argument("--embeddings")
    p.add_argument("--benchmark", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval_sim)

    p = sub.add_parser("build-benchmark", help="agreement-filter annotated pairs")
    p.add_argument("--annotations", required=True)
    p.add_argument("--keep", type=int, default=80)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_benchmark)

    p = sub.add_parser("export-embeddings", help="write vectors in the text format")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_embeddings)

    p = sub.add_parser("nn", help="nearest neighbors of a herb")
    p.add_argument("--embeddings")
    p.add_argument("--model")
    p.add_argument("--herb", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_nn)

    p = sub.add_parser("analogy", help="b - a + c vector query")
    p.add_argument("--embeddings")
    p.add_argument("--model")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--c", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_analogy)

    p = sub.add_parser("serve", help="run the suggestion HTTP service")
    p.add_argument("--models", nargs="+", required=True, metavar="NAME=CKPT")
    p.add_argument("--host", default=os.environ.get("HERBVEC_HOST", "127.0.0.1"))
    p.add_argument(
        "--port", type=int, default=int(os.environ.get("HERBVEC_PORT", "8000"))
    )
    p.add_argument("--ui", help="directory of static UI files to serve")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if hasattr(args, "embeddings") and hasattr(args, "model"):
            if args.embeddings is None and args.model is None:
                raise ConfigError("one of --embeddings or --model is required")
        return args.func(args)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CheckpointError, ZeroVectorError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingError, ConvergenceError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except HerbvecError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main(argv=None))
