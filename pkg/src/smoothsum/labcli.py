"""Experiment command line: prepare data, train and decode summarizers,
score predictions, and rerun the protocol shapes (paired epsilon on/off
comparison, epsilon-by-vocabulary sweeps, diversity and action-word
studies).

Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
"""

import argparse
import csv
import io
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics, models, trainer
from .astkit import parse_mini_function, render_sexpr
from .corpus import (START, END, Corpus, PreparedData, Vocabulary,
                     build_token_vocabulary, build_vocabulary,
                     extract_action_word, filter_by_length_quantile,
                     load_prepared_dir, read_corpus_jsonl, split_by_project,
                     write_prepared_dir)
from .errors import ConfigurationError, DataError, MiniParseError, NumericError
from .trainer import TrainConfig, encode_corpus, sbt_tokens_for_sample

DEFAULT_SWEEP_GRID = (0.0, 0.001, 0.003, 0.007, 0.02, 0.05, 0.10, 0.25, 0.40)
ACTIONWORD_EPSILONS = (0.0, 0.1, 0.4)


@dataclass(frozen=True)
class ExperimentConfig:
    data_dir: str
    arch: str
    epsilons: tuple
    epochs: int
    seeds: tuple
    vocab_sizes: tuple = ()
    metric_names: tuple = ("meteor", "similarity", "bleu")
    alpha: float = 0.05

    def __post_init__(self):
        if not self.seeds:
            raise ConfigurationError("at least one seed is required")
        for eps in self.epsilons:
            if not 0.0 <= eps <= 1.0:
                raise ConfigurationError(f"epsilon {eps} outside [0, 1]")


@dataclass(frozen=True)
class SweepSpec:
    epsilons: tuple = DEFAULT_SWEEP_GRID

    def __post_init__(self):
        eps = list(self.epsilons)
        if sorted(set(eps)) != eps:
            raise ConfigurationError("sweep grid must be sorted and unique")


@dataclass
class ReportRow:
    epsilon: float
    scores: dict
    comparisons: dict = field(default_factory=dict)


@dataclass
class ReportTable:
    title: str
    rows: list


# ---------------------------------------------------------------------------
# report rendering


def _fmt_eps(value: float) -> str:
    return format(value, "g")


def _fmt_score(value: float) -> str:
    return f"{value:.2f}"


def _fmt_t(value: float) -> str:
    if value == float("inf"):
        return "inf"
    if value == float("-inf"):
        return "-inf"
    return f"{value:.2f}"


def _fmt_p(value: float) -> str:
    return "<0.01" if value < 0.01 else f"{value:.2f}"


_REPORT_HEADER = ["epsilon", "meteor", "similarity", "bleu",
                  "t_meteor", "p_meteor", "t_similarity", "p_similarity"]


def _report_cells(row: ReportRow) -> list:
    cells = [_fmt_eps(row.epsilon),
             _fmt_score(row.scores["meteor"]),
             _fmt_score(row.scores["similarity"]),
             _fmt_score(row.scores["bleu"])]
    for name in ("meteor", "similarity"):
        comparison = row.comparisons.get(name)
        if comparison is None:
            cells += ["-", "-"]
        else:
            cells += [_fmt_t(comparison.t_stat), _fmt_p(comparison.p_value)]
    return cells


def render_report(table: ReportTable, fmt: str) -> str:
    """CSV (RFC 4180) or aligned markdown; metric scores and p-values get
    two decimals, p-values below 0.01 print as "<0.01"."""
    rows = [_REPORT_HEADER] + [_report_cells(r) for r in table.rows]
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerows(rows)
        return buffer.getvalue()
    if fmt == "markdown":
        widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
        lines = []
        header, *body = rows
        lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(header, widths)) + " |")
        lines.append("|" + "|".join("-" * (w + 2) for w in widths) + "|")
        for row in body:
            lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |")
        return "\n".join(lines) + "\n"
    raise ConfigurationError(f"unknown report format {fmt!r}")


def _write_table(table: ReportTable, out_dir: Path, stem: str) -> None:
    (out_dir / f"{stem}.csv").write_text(render_report(table, "csv"),
                                         encoding="utf-8")
    (out_dir / f"{stem}.md").write_text(render_report(table, "markdown"),
                                        encoding="utf-8")


# ---------------------------------------------------------------------------
# shared plumbing


def _arch_internal(name: str) -> str:
    return name.replace("-", "_")


def _add_common_flags(parser, data_help: str) -> None:
    parser.add_argument("--data", required=True, help=data_help)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=13)


def _add_model_flags(parser) -> None:
    parser.add_argument("--arch", default="attendgru",
                        choices=["attendgru", "transformer", "ast-attendgru"])
    parser.add_argument("--embed-dim", type=int, default=64)
    parser.add_argument("--hidden-dim", type=int, default=64)
    parser.add_argument("--code-len", type=int, default=50)
    parser.add_argument("--ast-len", type=int, default=80)
    parser.add_argument("--comment-len", type=int, default=13)
    parser.add_argument("--heads", type=int, default=4)
    parser.add_argument("--layers", type=int, default=2)
    parser.add_argument("--dropout", type=float, default=0.1)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--lr", type=float, default=1e-3)


def _model_config(args, src_size: int, tgt_size: int, epsilon: float,
                  comment_len: int | None = None,
                  ast_size: int = 0) -> models.ModelConfig:
    return models.ModelConfig(
        arch=_arch_internal(args.arch),
        src_vocab=src_size,
        tgt_vocab=tgt_size,
        embed_dim=args.embed_dim,
        hidden_dim=args.hidden_dim,
        code_len=args.code_len,
        ast_len=args.ast_len,
        comment_len=comment_len if comment_len is not None else args.comment_len,
        heads=args.heads,
        layers=args.layers,
        dropout_rate=args.dropout,
        epsilon=epsilon,
        ast_vocab=ast_size,
    )


def _ast_size(args, prepared: PreparedData) -> int:
    if _arch_internal(args.arch) != "ast_attendgru":
        return 0
    if prepared.ast_vocab is None:
        raise DataError("ast-attendgru needs vocab.ast.txt in the data "
                        "directory; rerun prepare")
    return prepared.ast_vocab.size


def _train_config(args, epsilon: float, epochs: int) -> TrainConfig:
    return TrainConfig(epochs=epochs, batch_size=args.batch_size,
                       learning_rate=args.lr, seed=args.seed, epsilon=epsilon)


def decode_predictions(model: models.Model, dataset,
                       tgt_vocab: Vocabulary) -> metrics.PredictionSet:
    """Greedy-decode every sample and pair it with its reference tokens."""
    records = []
    for i, sample_id in enumerate(dataset.sample_ids):
        ast_row = dataset.ast[i] if dataset.ast is not None else None
        result = models.greedy_decode(model, dataset.code[i], ast_row)
        predicted = [tgt_vocab.decode_id(t) for t in result.content_ids]
        records.append(metrics.PredictionRecord(
            id=sample_id, reference=dataset.references[i], predicted=predicted))
    return metrics.PredictionSet(records=records)


def _eps_tag(epsilon: float) -> str:
    return _fmt_eps(epsilon).replace(".", "p")


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _run_experiment_arm(args, prepared: PreparedData, epsilon: float,
                        epochs: int, tgt_vocab: Vocabulary):
    """Train one (epsilon, vocabulary) configuration and score the test
    decodes. Returns (checkpoint, prediction set, metric report)."""
    config = _model_config(args, prepared.src_vocab.size, tgt_vocab.size,
                           epsilon, ast_size=_ast_size(args, prepared))
    datasets = {
        name: encode_corpus(split, config, prepared.src_vocab, tgt_vocab,
                            prepared.ast_vocab)
        for name, split in (("train", prepared.train), ("val", prepared.val),
                            ("test", prepared.test))
    }
    model = models.build_model(config, seed=args.seed)
    ckpt, history = trainer.train(model, datasets["train"], datasets["val"],
                                  _train_config(args, epsilon, epochs))
    _log(f"eps={_fmt_eps(epsilon)} vocab={tgt_vocab.size} "
         f"best epoch {ckpt.epoch} val_acc {ckpt.val_accuracy:.4f} "
         f"final loss {history.records[-1].loss_nats:.4f}")
    preds = decode_predictions(ckpt.model, datasets["test"], tgt_vocab)
    report = metrics.score_predictions(preds)
    return ckpt, preds, report


def _comparison_row(epsilon: float, report: metrics.MetricReport,
                    baseline: metrics.MetricReport | None,
                    alpha: float) -> ReportRow:
    scores = {"meteor": report.mean_meteor,
              "similarity": report.mean_similarity,
              "bleu": report.corpus_bleu}
    comparisons = {}
    if baseline is not None:
        comparisons["meteor"] = metrics.paired_t_test(
            report.meteor_scores, baseline.meteor_scores, alpha=alpha,
            metric="meteor")
        comparisons["similarity"] = metrics.paired_t_test(
            report.similarity_scores, baseline.similarity_scores, alpha=alpha,
            metric="similarity")
    return ReportRow(epsilon=epsilon, scores=scores, comparisons=comparisons)


# ---------------------------------------------------------------------------
# subcommands


def cmd_prepare(args) -> int:
    def derive_ast(code: str):
        try:
            return render_sexpr(parse_mini_function(code))
        except MiniParseError:
            return None

    raw = read_corpus_jsonl(args.data, derive_ast=derive_ast)
    kept = [s for s in raw.samples if s.comment_tokens and s.code_tokens]
    dropped = len(raw.samples) - len(kept)
    corpus = Corpus(samples=kept)
    if args.quantile is not None:
        corpus = filter_by_length_quantile(corpus, args.quantile)
    ratios = tuple(float(x) for x in args.ratios.split(","))
    train, val, test = split_by_project(corpus, ratios, args.seed)
    src_vocab = build_vocabulary(train, args.src_vocab, "source")
    tgt_vocab = build_vocabulary(train, args.tgt_vocab, "target")
    ast_streams = [sbt_tokens_for_sample(s) for s in train.samples
                   if s.ast_text]
    ast_vocab = build_token_vocabulary(ast_streams, args.src_vocab)
    out_dir = Path(args.out)
    write_prepared_dir(out_dir, train, val, test, src_vocab, tgt_vocab,
                       ast_vocab)
    print(f"prepared {out_dir}: train {len(train)} val {len(val)} "
          f"test {len(test)} (dropped {dropped})")
    print(f"vocabularies: src {src_vocab.size} tgt {tgt_vocab.size} "
          f"ast {ast_vocab.size}")
    return 0


def cmd_train(args) -> int:
    prepared = load_prepared_dir(args.data)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = _model_config(args, prepared.src_vocab.size,
                           prepared.tgt_vocab.size, args.epsilon,
                           ast_size=_ast_size(args, prepared))
    datasets = {
        name: encode_corpus(split, config, prepared.src_vocab,
                            prepared.tgt_vocab, prepared.ast_vocab)
        for name, split in (("train", prepared.train), ("val", prepared.val))
    }
    model = models.build_model(config, seed=args.seed)
    ckpt, history = trainer.train(model, datasets["train"], datasets["val"],
                                  _train_config(args, args.epsilon, args.epochs))
    trainer.save_checkpoint(ckpt, out_dir / "checkpoint.json")
    history.write_csv(out_dir / "history.csv")
    print(f"best epoch {ckpt.epoch} val_acc {ckpt.val_accuracy:.6f}")
    return 0


def cmd_predict(args) -> int:
    prepared = load_prepared_dir(args.data)
    ckpt = trainer.load_checkpoint(args.checkpoint)
    config = ckpt.model.config
    tgt_vocab = prepared.tgt_vocab
    if args.tgt_vocab is not None:
        tgt_vocab = Vocabulary.read(args.tgt_vocab)
    if config.src_vocab != prepared.src_vocab.size:
        raise DataError(
            f"checkpoint source vocabulary {config.src_vocab} does not match "
            f"data directory ({prepared.src_vocab.size})")
    if config.tgt_vocab != tgt_vocab.size:
        raise DataError(
            f"checkpoint target vocabulary {config.tgt_vocab} does not match "
            f"{tgt_vocab.size}; pass the matching --tgt-vocab file")
    if config.arch == "ast_attendgru":
        ast_size = prepared.ast_vocab.size if prepared.ast_vocab else 0
        if config.ast_vocab != ast_size:
            raise DataError(
                f"checkpoint AST vocabulary {config.ast_vocab} does not "
                f"match data directory ({ast_size})")
    split = {"train": prepared.train, "val": prepared.val,
             "test": prepared.test}[args.split]
    dataset = encode_corpus(split, config, prepared.src_vocab, tgt_vocab,
                            prepared.ast_vocab)
    preds = decode_predictions(ckpt.model, dataset, tgt_vocab)
    metrics.write_predictions(preds, args.out)
    print(f"wrote {len(preds)} predictions to {args.out}")
    return 0


def cmd_score(args) -> int:
    preds = metrics.read_predictions(args.predictions)
    report = metrics.score_predictions(preds)
    payload = report.to_dict()
    payload["count"] = len(preds)
    out_prefix = Path(args.out)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    import json as _json
    with open(f"{out_prefix}.json", "w", encoding="utf-8") as fh:
        _json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    table = ReportTable(title="scores", rows=[ReportRow(
        epsilon=float("nan"),
        scores={"meteor": report.mean_meteor,
                "similarity": report.mean_similarity,
                "bleu": report.corpus_bleu})])
    header = ["bleu", "meteor", "similarity", "count"]
    values = [_fmt_score(report.corpus_bleu), _fmt_score(report.mean_meteor),
              _fmt_score(report.mean_similarity), str(len(preds))]
    widths = [max(len(h), len(v)) for h, v in zip(header, values)]
    md = ("| " + " | ".join(h.ljust(w) for h, w in zip(header, widths)) + " |\n"
          + "|" + "|".join("-" * (w + 2) for w in widths) + "|\n"
          + "| " + " | ".join(v.ljust(w) for v, w in zip(values, widths)) + " |\n")
    with open(f"{out_prefix}.md", "w", encoding="utf-8") as fh:
        fh.write(md)
    print(md, end="")
    return 0


def cmd_compare(args) -> int:
    """Paired run: train once without and once with label smoothing from
    identical seeds, score the test decodes, and t-test the two
    sentence-level metrics (BLEU is corpus-level and gets no test)."""
    experiment = ExperimentConfig(
        data_dir=args.data, arch=_arch_internal(args.arch),
        epsilons=(0.0, args.epsilon), epochs=args.epochs,
        seeds=(args.seed,), alpha=args.alpha)
    prepared = load_prepared_dir(experiment.data_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    baseline_report = None
    for epsilon in experiment.epsilons:
        ckpt, preds, report = _run_experiment_arm(
            args, prepared, epsilon, experiment.epochs, prepared.tgt_vocab)
        tag = _eps_tag(epsilon)
        trainer.save_checkpoint(ckpt, out_dir / f"checkpoint_eps{tag}.json")
        metrics.write_predictions(preds, out_dir / f"predictions_eps{tag}.jsonl")
        if epsilon == 0.0:
            baseline_report = report
            rows.append(_comparison_row(epsilon, report, None,
                                        experiment.alpha))
        else:
            rows.append(_comparison_row(epsilon, report, baseline_report,
                                        experiment.alpha))
    table = ReportTable(title="pair", rows=rows)
    _write_table(table, out_dir, "pair_report")
    print(render_report(table, "markdown"), end="")
    return 0


def cmd_sweep(args) -> int:
    """One training run per (epsilon, target vocabulary size); every
    epsilon > 0 row is paired-tested against the epsilon = 0 row of the
    same vocabulary size."""
    grid = SweepSpec().epsilons
    sizes = tuple(int(x) for x in args.vocab_sizes.split(","))
    experiment = ExperimentConfig(
        data_dir=args.data, arch=_arch_internal(args.arch), epsilons=grid,
        epochs=args.epochs, seeds=(args.seed,), vocab_sizes=sizes,
        alpha=args.alpha)
    prepared = load_prepared_dir(experiment.data_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    failure = None
    for size in experiment.vocab_sizes:
        tgt_vocab = build_vocabulary(prepared.train, size, "target")
        tgt_vocab.write(out_dir / f"sweep_v{size}.vocab.tgt.txt")
        rows = []
        baseline_report = None
        try:
            for epsilon in grid:
                ckpt, preds, report = _run_experiment_arm(
                    args, prepared, epsilon, experiment.epochs, tgt_vocab)
                metrics.write_predictions(
                    preds, out_dir / f"sweep_v{size}_eps{_eps_tag(epsilon)}.jsonl")
                if epsilon == 0.0:
                    baseline_report = report
                    rows.append(_comparison_row(epsilon, report, None,
                                                experiment.alpha))
                else:
                    rows.append(_comparison_row(epsilon, report,
                                                baseline_report,
                                                experiment.alpha))
        except NumericError as exc:
            failure = exc
        table = ReportTable(title=f"sweep vocab {size}", rows=rows)
        _write_table(table, out_dir, f"sweep_v{size}")
        print(render_report(table, "markdown"), end="")
        if failure is not None:
            raise failure
    return 0


def _plain_table(header, rows):
    """(csv_text, markdown_text) for a list-of-lists table."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    all_rows = [header] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in all_rows) for i in range(len(header))]
    lines = ["| " + " | ".join(c.ljust(w) for c, w in zip(all_rows[0], widths))
             + " |",
             "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    for row in all_rows[1:]:
        lines.append("| " + " | ".join(c.ljust(w) for c, w in zip(row, widths))
                     + " |")
    return buffer.getvalue(), "\n".join(lines) + "\n"


def cmd_diversity(args) -> int:
    """Word diversity per prediction file plus deltas against the first
    file (the baseline)."""
    reports = []
    for path in args.predictions:
        preds = metrics.read_predictions(path)
        reports.append((path, metrics.diversity_report(preds)))
    base = reports[0][1]
    header = ["file", "total_words", "unique_words", "avg_frequency",
              "delta_total", "delta_unique"]
    rows = []
    for path, rep in reports:
        rows.append([str(path), rep.total_words, rep.unique_words,
                     f"{rep.avg_frequency:.4f}",
                     rep.total_words - base.total_words,
                     rep.unique_words - base.unique_words])
    csv_text, md_text = _plain_table(header, rows)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(csv_text, encoding="utf-8")
        out.with_suffix(".md").write_text(md_text, encoding="utf-8")
    print(csv_text, end="")
    return 0


def _action_word_dataset(split: Corpus, config: models.ModelConfig,
                         prepared: PreparedData, label_vocab: Vocabulary):
    """Encoded dataset whose comments are [START, action word, END]."""
    dataset = encode_corpus(split, config, prepared.src_vocab, label_vocab,
                            prepared.ast_vocab)
    labels = []
    rows = []
    for s in split.samples:
        word = extract_action_word(s.comment_tokens)
        labels.append(word)
        rows.append([START, label_vocab.encode_token(word), END])
    dataset.comments = np.array(rows, dtype=np.int64)
    dataset.references = [[w] for w in labels]
    return dataset, labels


def cmd_actionword(args) -> int:
    """Action-word study: single-step decoders trained per epsilon in
    {0, 0.1, 0.4}; reports precision/recall/F1 and unique-word counts."""
    prepared = load_prepared_dir(args.data)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_labels = [extract_action_word(s.comment_tokens)
                    for s in prepared.train.samples]
    unique_train = sorted(set(train_labels))
    label_vocab = build_token_vocabulary([[w] for w in train_labels],
                                         size=4 + len(unique_train))
    header = ["epsilon", "micro_precision", "micro_recall", "micro_f1",
              "macro_f1", "unique_predicted"]
    rows = []
    for epsilon in ACTIONWORD_EPSILONS:
        config = _model_config(args, prepared.src_vocab.size,
                               label_vocab.size, epsilon, comment_len=3,
                               ast_size=_ast_size(args, prepared))
        train_set, _ = _action_word_dataset(prepared.train, config, prepared,
                                            label_vocab)
        val_set, _ = _action_word_dataset(prepared.val, config, prepared,
                                          label_vocab)
        test_set, gold = _action_word_dataset(prepared.test, config, prepared,
                                              label_vocab)
        model = models.build_model(config, seed=args.seed)
        ckpt, _ = trainer.train(model, train_set, val_set,
                                _train_config(args, epsilon, args.epochs))
        predicted = []
        prefix = np.array([[START]], dtype=np.int64)
        for i in range(len(test_set)):
            ast_row = (test_set.ast[i][None] if test_set.ast is not None
                       else None)
            probs = models.forward_step(ckpt.model, test_set.code[i][None],
                                        ast_row, prefix)[0, 0]
            word_id = 4 + int(np.argmax(probs[4:]))
            predicted.append(label_vocab.decode_id(word_id))
        report = metrics.classification_report(gold, predicted)
        unique_predicted = len(set(predicted))
        _log(f"actionword eps={_fmt_eps(epsilon)} micro_f1 "
             f"{report.micro.f1:.4f} unique {unique_predicted}")
        rows.append([_fmt_eps(epsilon),
                     f"{report.micro.precision:.4f}",
                     f"{report.micro.recall:.4f}",
                     f"{report.micro.f1:.4f}", f"{report.macro.f1:.4f}",
                     unique_predicted])
    csv_text, md_text = _plain_table(header, rows)
    (out_dir / "actionword.csv").write_text(csv_text, encoding="utf-8")
    (out_dir / "actionword.md").write_text(md_text, encoding="utf-8")
    print(csv_text, end="")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smoothsum",
        description="label-smoothing experiments for code summarization")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="tokenize, filter, split, build vocabs")
    _add_common_flags(p, "raw corpus .jsonl")
    p.add_argument("--quantile", type=float, default=None,
                   help="keep samples above this code-length quantile")
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--src-vocab", type=int, default=300)
    p.add_argument("--tgt-vocab", type=int, default=300)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train one model")
    _add_common_flags(p, "prepared data directory")
    _add_model_flags(p)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=10)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="greedy-decode a split")
    _add_common_flags(p, "prepared data directory")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", default="test",
                   choices=["train", "val", "test"])
    p.add_argument("--tgt-vocab", default=None,
                   help="override target vocabulary file")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("score", help="score a predictions file")
    p.add_argument("--predictions", required=True)
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("compare",
                       help="paired run with/without label smoothing")
    _add_common_flags(p, "prepared data directory")
    _add_model_flags(p)
    p.add_argument("--epsilon", type=float, default=0.1,
                   help="smoothing for the treated arm")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="epsilon grid x vocabulary sizes")
    _add_common_flags(p, "prepared data directory")
    _add_model_flags(p)
    p.add_argument("--epochs", type=int, default=8)
    p.add_argument("--vocab-sizes", default="300,1200")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("diversity", help="word diversity of prediction files")
    p.add_argument("--predictions", nargs="+", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_diversity)

    p = sub.add_parser("actionword",
                       help="action-word prediction study per epsilon")
    _add_common_flags(p, "prepared data directory")
    _add_model_flags(p)
    p.add_argument("--epochs", type=int, default=10)
    p.set_defaults(func=cmd_actionword)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (DataError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
