"""Teacher-forcing training loop with Adam, validation-accuracy model
selection and deterministic checkpointing.

Every run is a pure function of (data, config, seed): batch order comes
from a seed-and-epoch keyed shuffle, dropout masks from a parallel stream,
and the best epoch is picked by highest validation token accuracy with
ties going to the earliest epoch.
"""

import json
import time
from dataclasses import dataclass, asdict, field

import numpy as np

from . import astkit, models, tensor as T
from .corpus import PAD, Corpus, Vocabulary, encode_sequence
from .errors import ConfigurationError, DataError, NumericError
from .rng import Rng
from .smoothing import loss_floor

GRAD_CLIP_NORM = 5.0


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.optimizer != "adam":
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigurationError("epsilon must be in [0, 1]")


@dataclass
class EpochRecord:
    epoch: int
    loss_nats: float
    val_accuracy: float
    seconds: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)

    def best_epoch(self) -> EpochRecord:
        return max(self.records, key=lambda r: (r.val_accuracy, -r.epoch))

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,loss_nats,val_acc,seconds\n")
            for r in self.records:
                fh.write(f"{r.epoch},{r.loss_nats!r},{r.val_accuracy!r},"
                         f"{r.seconds:.3f}\n")


@dataclass
class Checkpoint:
    model: models.Model
    train_config: TrainConfig
    epoch: int
    val_accuracy: float


@dataclass
class EncodedDataset:
    """Corpus encoded against fixed vocabularies and model lengths."""

    sample_ids: list
    code: np.ndarray
    comments: np.ndarray
    ast: np.ndarray | None = None
    references: list = field(default_factory=list)

    def __len__(self):
        return len(self.sample_ids)


def sbt_tokens_for_sample(sample) -> list:
    if not sample.ast_text:
        raise DataError(f"sample {sample.id!r} has no AST")
    return astkit.sbt_flatten(astkit.import_sexpr(sample.ast_text))


def encode_corpus(corpus: Corpus, config: models.ModelConfig,
                  src_vocab: Vocabulary, tgt_vocab: Vocabulary,
                  ast_vocab: Vocabulary | None = None) -> EncodedDataset:
    """Sources are encoded bare, comments wrapped in START/END; the AST
    stream (SBT tokens) is encoded bare against its own vocabulary."""
    if not corpus.samples:
        raise DataError("cannot encode an empty corpus")
    code_rows, comment_rows, ast_rows = [], [], []
    for s in corpus.samples:
        code_rows.append(encode_sequence(s.code_tokens, src_vocab,
                                         config.code_len, False).ids)
        comment_rows.append(encode_sequence(s.comment_tokens, tgt_vocab,
                                            config.comment_len, True).ids)
        if config.arch == "ast_attendgru":
            if ast_vocab is None:
                raise ConfigurationError("ast_attendgru needs an AST vocabulary")
            ast_rows.append(encode_sequence(sbt_tokens_for_sample(s), ast_vocab,
                                            config.ast_len, False).ids)
    # references are capped at the trainable content length so decode and
    # reference lengths stay commensurate
    max_content = config.comment_len - 2
    return EncodedDataset(
        sample_ids=[s.id for s in corpus.samples],
        code=np.array(code_rows, dtype=np.int64),
        comments=np.array(comment_rows, dtype=np.int64),
        ast=np.array(ast_rows, dtype=np.int64) if ast_rows else None,
        references=[list(s.comment_tokens[:max_content])
                    for s in corpus.samples],
    )


class Adam:
    def __init__(self, params: T.ParamStore, config: TrainConfig):
        self.params = params
        self.lr = config.learning_rate
        self.beta1, self.beta2 = config.beta1, config.beta2
        self.eps = config.adam_eps
        self.step_count = 0
        self.m = {n: np.zeros_like(t.data) for n, t in params.items()}
        self.v = {n: np.zeros_like(t.data) for n, t in params.items()}

    def step(self) -> None:
        self.step_count += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** self.step_count
        bias2 = 1.0 - b2 ** self.step_count
        for name, t in self.params.items():
            g = t.grad
            self.m[name] = b1 * self.m[name] + (1 - b1) * g
            self.v[name] = b2 * self.v[name] + (1 - b2) * g * g
            m_hat = self.m[name] / bias1
            v_hat = self.v[name] / bias2
            t.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def _batches(order, batch_size):
    for start in range(0, len(order), batch_size):
        yield order[start:start + batch_size]


def validation_token_accuracy(model: models.Model,
                              dataset: EncodedDataset,
                              batch_size: int = 64) -> float:
    """Fraction of non-PAD target positions where the argmax next-token
    prediction equals the gold token under teacher forcing."""
    if len(dataset) == 0:
        raise DataError("cannot compute accuracy on an empty dataset")
    hits = 0
    total = 0
    for batch in _batches(list(range(len(dataset))), batch_size):
        idx = np.asarray(batch)
        comments = dataset.comments[idx]
        prefix, targets = comments[:, :-1], comments[:, 1:]
        ast = dataset.ast[idx] if dataset.ast is not None else None
        probs = models.forward_step(model, dataset.code[idx], ast, prefix)
        predicted = probs.argmax(axis=-1)
        mask = targets != PAD
        hits += int((predicted[mask] == targets[mask]).sum())
        total += int(mask.sum())
    if total == 0:
        raise DataError("dataset has no non-PAD target positions")
    return hits / total


def train(model: models.Model, train_set: EncodedDataset,
          val_set: EncodedDataset, config: TrainConfig):
    """Returns (best Checkpoint, TrainHistory).

    The epoch-mean training loss is checked against the analytic smoothed
    floor every epoch; a violation indicates a numeric defect.
    """
    if model.config.epsilon != config.epsilon:
        raise ConfigurationError(
            f"model epsilon {model.config.epsilon} does not match "
            f"train epsilon {config.epsilon}")
    if len(train_set) == 0:
        raise DataError("empty training set")
    optimizer = Adam(model.params, config)
    history = TrainHistory()
    floor = loss_floor(config.epsilon, model.config.tgt_vocab)
    best_values = None
    best_accuracy = -1.0
    best_epoch = -1

    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        order = list(range(len(train_set)))
        Rng(config.seed).derive("shuffle", epoch).shuffle(order)
        dropout_rng = Rng(config.seed).derive("dropout", epoch)
        loss_total = 0.0
        token_total = 0
        for batch_index, batch in enumerate(_batches(order, config.batch_size)):
            idx = np.asarray(batch)
            ast = train_set.ast[idx] if train_set.ast is not None else None
            model.params.zero_grads()
            loss, count = models.sequence_loss(
                model, train_set.code[idx], ast, train_set.comments[idx],
                training=True, rng=dropout_rng)
            loss_value = float(loss.data)
            if not np.isfinite(loss_value):
                raise NumericError(
                    f"non-finite loss in epoch {epoch} batch {batch_index}")
            T.backward(loss, model.params)
            norm = model.params.global_grad_norm()
            if norm > GRAD_CLIP_NORM:
                model.params.scale_grads(GRAD_CLIP_NORM / norm)
            optimizer.step()
            loss_total += loss_value * count
            token_total += count
        epoch_loss = loss_total / token_total
        if epoch_loss < floor - 1e-9:
            raise NumericError(
                f"epoch {epoch} loss {epoch_loss} fell below the analytic "
                f"floor {floor}")
        accuracy = validation_token_accuracy(model, val_set,
                                             batch_size=config.batch_size)
        history.records.append(EpochRecord(
            epoch=epoch, loss_nats=epoch_loss, val_accuracy=accuracy,
            seconds=time.perf_counter() - started))
        if accuracy > best_accuracy:
            best_accuracy = accuracy
            best_epoch = epoch
            best_values = model.params.copy_values()

    best_model = models.build_model(model.config, seed=0)
    best_model.params.load_values(best_values)
    checkpoint = Checkpoint(model=best_model, train_config=config,
                            epoch=best_epoch, val_accuracy=best_accuracy)
    return checkpoint, history


# ---------------------------------------------------------------------------
# checkpoint files


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    payload = models.model_to_dict(ckpt.model)
    payload["train_config"] = asdict(ckpt.train_config)
    payload["epoch"] = ckpt.epoch
    payload["val_accuracy"] = ckpt.val_accuracy
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_checkpoint(path) -> Checkpoint:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed checkpoint {path}: {exc}") from exc
    for key in ("train_config", "epoch", "val_accuracy"):
        if key not in payload:
            raise DataError(f"checkpoint {path} missing field {key!r}")
    model = models.model_from_dict(payload)
    return Checkpoint(
        model=model,
        train_config=TrainConfig(**payload["train_config"]),
        epoch=int(payload["epoch"]),
        val_accuracy=float(payload["val_accuracy"]),
    )
