"""The three summarization architectures assembled from tensor primitives.

attendgru      source-token GRU encoder, GRU decoder with multiplicative
               attention over encoder states.
ast_attendgru  attendgru plus a second GRU encoder over flattened-AST
               tokens with its own attention; both contexts feed the
               output layer.
transformer    embeddings + sinusoidal positions, post-norm encoder blocks
               (self-attention, feed-forward) and decoder blocks (masked
               self-attention, cross-attention, feed-forward), dropout on
               attention outputs.

The decoder is wired for teacher forcing: a forward pass returns one
next-token distribution per prefix position.
"""

import json
from dataclasses import dataclass, asdict

import numpy as np

from . import tensor as T
from .corpus import PAD, START, END
from .errors import ConfigurationError, DataError
from .rng import Rng
from .smoothing import smooth_target_matrix

ARCHITECTURES = ("attendgru", "transformer", "ast_attendgru")
CHECKPOINT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    arch: str
    src_vocab: int
    tgt_vocab: int
    embed_dim: int = 64
    hidden_dim: int = 64
    code_len: int = 50
    ast_len: int = 80
    comment_len: int = 13
    heads: int = 4
    layers: int = 2
    dropout_rate: float = 0.1
    epsilon: float = 0.0
    ast_vocab: int = 0  # flat-AST token space; required for ast_attendgru

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise ConfigurationError(f"unknown architecture {self.arch!r}")
        for name in ("src_vocab", "tgt_vocab", "embed_dim", "hidden_dim",
                     "code_len", "comment_len", "heads", "layers"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if self.src_vocab < 5 or self.tgt_vocab < 5:
            raise ConfigurationError("vocabularies must include the specials")
        if self.comment_len < 2:
            raise ConfigurationError("comment_len must be >= 2")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError("dropout_rate must be in [0, 1)")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigurationError("epsilon must be in [0, 1]")
        if self.arch == "transformer":
            if self.hidden_dim % self.heads != 0:
                raise ConfigurationError(
                    f"heads {self.heads} must divide hidden_dim {self.hidden_dim}")
            if self.embed_dim != self.hidden_dim:
                raise ConfigurationError(
                    "transformer requires embed_dim == hidden_dim")
        if self.arch == "ast_attendgru":
            if self.ast_len < 2:
                raise ConfigurationError("ast_attendgru requires ast_len >= 2")
            if self.ast_vocab < 5:
                raise ConfigurationError(
                    "ast_attendgru requires an ast_vocab of at least 5")


@dataclass
class Model:
    config: ModelConfig
    params: T.ParamStore


@dataclass
class DecodeResult:
    """Greedy decode output: ids exclude START; include END when emitted."""

    ids: list
    distributions: list | None = None

    @property
    def content_ids(self) -> list:
        return [i for i in self.ids if i not in (PAD, START, END)]


_GRU_KEYS = ("wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh")


def _gru_shapes(prefix: str, in_dim: int, hid: int) -> dict:
    shapes = {}
    for key in _GRU_KEYS:
        if key.startswith("w"):
            shapes[f"{prefix}.{key}"] = (in_dim, hid)
        elif key.startswith("u"):
            shapes[f"{prefix}.{key}"] = (hid, hid)
        else:
            shapes[f"{prefix}.{key}"] = (hid,)
    return shapes


def _attn_shapes(prefix: str, d: int) -> dict:
    return {f"{prefix}.{name}": (d, d) for name in ("wq", "wk", "wv", "wo")}


def _ln_shapes(prefix: str, d: int) -> dict:
    return {f"{prefix}.gain": (d,), f"{prefix}.bias": (d,)}


def parameter_template(config: ModelConfig) -> dict:
    """Name -> shape map for an architecture; the checkpoint contract."""
    e, h = config.embed_dim, config.hidden_dim
    shapes = {
        "src_embed": (config.src_vocab, e),
        "tgt_embed": (config.tgt_vocab, e),
    }
    if config.arch in ("attendgru", "ast_attendgru"):
        shapes.update(_gru_shapes("enc_gru", e, h))
        shapes.update(_gru_shapes("dec_gru", e, h))
        contexts = 2 if config.arch == "attendgru" else 3
        if config.arch == "ast_attendgru":
            shapes["ast_embed"] = (config.ast_vocab, e)
            shapes.update(_gru_shapes("ast_gru", e, h))
        shapes["out.w"] = (contexts * h, config.tgt_vocab)
        shapes["out.b"] = (config.tgt_vocab,)
    else:
        ff = 4 * h
        for i in range(config.layers):
            shapes.update(_attn_shapes(f"enc{i}.attn", h))
            shapes.update(_ln_shapes(f"enc{i}.ln1", h))
            shapes[f"enc{i}.ff.w1"] = (h, ff)
            shapes[f"enc{i}.ff.b1"] = (ff,)
            shapes[f"enc{i}.ff.w2"] = (ff, h)
            shapes[f"enc{i}.ff.b2"] = (h,)
            shapes.update(_ln_shapes(f"enc{i}.ln2", h))
            shapes.update(_attn_shapes(f"dec{i}.self", h))
            shapes.update(_ln_shapes(f"dec{i}.ln1", h))
            shapes.update(_attn_shapes(f"dec{i}.cross", h))
            shapes.update(_ln_shapes(f"dec{i}.ln2", h))
            shapes[f"dec{i}.ff.w1"] = (h, ff)
            shapes[f"dec{i}.ff.b1"] = (ff,)
            shapes[f"dec{i}.ff.w2"] = (ff, h)
            shapes[f"dec{i}.ff.b2"] = (h,)
            shapes.update(_ln_shapes(f"dec{i}.ln3", h))
        shapes["out.w"] = (h, config.tgt_vocab)
        shapes["out.b"] = (config.tgt_vocab,)
    return shapes


def build_model(config: ModelConfig, seed: int) -> Model:
    """Deterministic initialization: Glorot uniform for matrices (each
    parameter drawn from its own name-keyed stream), zeros for biases,
    ones for layer-norm gains."""
    params = T.ParamStore()
    base = Rng(seed).derive("model-init")
    for name, shape in sorted(parameter_template(config).items()):
        if len(shape) == 1:
            data = np.ones(shape) if name.endswith(".gain") else np.zeros(shape)
        else:
            data = T.glorot_uniform(base.derive(name), shape)
        params.add(name, data)
    return Model(config=config, params=params)


def _gru_param_view(params: T.ParamStore, prefix: str) -> dict:
    return {key: params[f"{prefix}.{key}"] for key in _GRU_KEYS}


def _run_gru_encoder(model: Model, prefix: str, embed_name: str,
                     ids: np.ndarray):
    """Returns (stacked states (B, T, H), final state (B, H))."""
    table = model.params[embed_name]
    gru = _gru_param_view(model.params, prefix)
    batch = ids.shape[0]
    state = T.Tensor(np.zeros((batch, model.config.hidden_dim)))
    states = []
    for t in range(ids.shape[1]):
        state = T.gru_step(T.embedding(table, ids[:, t]), state, gru)
        states.append(state)
    return T.stack(states, axis=1), state


def _validate_ids(ids: np.ndarray, vocab: int, what: str) -> np.ndarray:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        raise DataError(f"{what} id outside vocabulary of size {vocab}")
    return ids


def _forward_gru(model: Model, code_ids, ast_ids, prefix_ids) -> T.Tensor:
    cfg = model.config
    src_states, src_final = _run_gru_encoder(model, "enc_gru", "src_embed",
                                             code_ids)
    src_mask = code_ids != PAD
    if cfg.arch == "ast_attendgru":
        ast_states, _ = _run_gru_encoder(model, "ast_gru", "ast_embed", ast_ids)
        ast_mask = ast_ids != PAD
    dec_gru = _gru_param_view(model.params, "dec_gru")
    tgt_embed = model.params["tgt_embed"]
    out_w, out_b = model.params["out.w"], model.params["out.b"]
    state = src_final
    logits = []
    for t in range(prefix_ids.shape[1]):
        state = T.gru_step(T.embedding(tgt_embed, prefix_ids[:, t]), state,
                           dec_gru)
        context, _ = T.dot_attention(state, src_states, mask=src_mask)
        pieces = [context, state]
        if cfg.arch == "ast_attendgru":
            ast_context, _ = T.dot_attention(state, ast_states, mask=ast_mask)
            pieces = [context, ast_context, state]
        features = T.concat(pieces, axis=-1)
        logits.append(T.add(T.matmul(features, out_w), out_b))
    return T.stack(logits, axis=1)


def _transformer_ff(params: T.ParamStore, prefix: str, x: T.Tensor) -> T.Tensor:
    hidden = T.relu(T.add(T.matmul(x, params[f"{prefix}.w1"]),
                          params[f"{prefix}.b1"]))
    return T.add(T.matmul(hidden, params[f"{prefix}.w2"]),
                 params[f"{prefix}.b2"])


def _forward_transformer(model: Model, code_ids, prefix_ids,
                         training: bool, rng) -> T.Tensor:
    cfg = model.config
    p = model.params

    def drop(x):
        return T.apply_dropout(x, cfg.dropout_rate, rng, training)

    src_pe = T.positional_encoding(code_ids.shape[1], cfg.hidden_dim)
    x = T.add(T.embedding(p["src_embed"], code_ids), src_pe)
    src_mask = (code_ids != PAD)[:, None, :]  # keys masked at PAD
    for i in range(cfg.layers):
        attn = T.multi_head_attention(
            x, x, x, cfg.heads, p[f"enc{i}.attn.wq"], p[f"enc{i}.attn.wk"],
            p[f"enc{i}.attn.wv"], p[f"enc{i}.attn.wo"], mask=src_mask)
        x = T.layer_norm(T.add(x, drop(attn)),
                         p[f"enc{i}.ln1.gain"], p[f"enc{i}.ln1.bias"])
        x = T.layer_norm(T.add(x, _transformer_ff(p, f"enc{i}.ff", x)),
                         p[f"enc{i}.ln2.gain"], p[f"enc{i}.ln2.bias"])
    memory = x

    tgt_pe = T.positional_encoding(prefix_ids.shape[1], cfg.hidden_dim)
    y = T.add(T.embedding(p["tgt_embed"], prefix_ids), tgt_pe)
    causal = T.causal_mask(prefix_ids.shape[1])
    for i in range(cfg.layers):
        self_attn = T.multi_head_attention(
            y, y, y, cfg.heads, p[f"dec{i}.self.wq"], p[f"dec{i}.self.wk"],
            p[f"dec{i}.self.wv"], p[f"dec{i}.self.wo"], mask=causal)
        y = T.layer_norm(T.add(y, drop(self_attn)),
                         p[f"dec{i}.ln1.gain"], p[f"dec{i}.ln1.bias"])
        cross = T.multi_head_attention(
            y, memory, memory, cfg.heads, p[f"dec{i}.cross.wq"],
            p[f"dec{i}.cross.wk"], p[f"dec{i}.cross.wv"],
            p[f"dec{i}.cross.wo"], mask=src_mask)
        y = T.layer_norm(T.add(y, drop(cross)),
                         p[f"dec{i}.ln2.gain"], p[f"dec{i}.ln2.bias"])
        y = T.layer_norm(T.add(y, _transformer_ff(p, f"dec{i}.ff", y)),
                         p[f"dec{i}.ln3.gain"], p[f"dec{i}.ln3.bias"])
    return T.add(T.matmul(y, p["out.w"]), p["out.b"])


def forward_logits(model: Model, code_ids, ast_ids, prefix_ids,
                   training: bool = False, rng: Rng | None = None) -> T.Tensor:
    """Next-token logits for every prefix position: (batch, len, tgt_vocab)."""
    cfg = model.config
    code_ids = _validate_ids(code_ids, cfg.src_vocab, "source")
    prefix_ids = _validate_ids(prefix_ids, cfg.tgt_vocab, "comment")
    if code_ids.ndim != 2 or prefix_ids.ndim != 2:
        raise ConfigurationError("forward expects (batch, length) id arrays")
    if cfg.arch == "ast_attendgru":
        if ast_ids is None:
            raise DataError("ast_attendgru requires AST token ids")
        ast_ids = _validate_ids(ast_ids, cfg.ast_vocab, "ast")
    if training and cfg.dropout_rate > 0 and rng is None:
        raise ConfigurationError("training forward pass needs an rng")
    if cfg.arch == "transformer":
        return _forward_transformer(model, code_ids, prefix_ids, training, rng)
    return _forward_gru(model, code_ids, ast_ids, prefix_ids)


def forward_step(model: Model, code_ids, ast_ids, comment_prefix_ids) -> np.ndarray:
    """Teacher-forcing inference: probability rows per prefix position."""
    logits = forward_logits(model, code_ids, ast_ids, comment_prefix_ids)
    return T.softmax(logits, axis=-1).data


def sequence_loss(model: Model, code_ids, ast_ids, comment_ids,
                  training: bool = False, rng: Rng | None = None):
    """Label-smoothed cross-entropy averaged over non-PAD target positions.

    comment_ids holds full marker-wrapped sequences; positions [:-1] are
    the teacher-forcing prefix and [1:] the prediction targets. Returns
    (loss Tensor, non-PAD token count).
    """
    comment_ids = np.asarray(comment_ids, dtype=np.int64)
    prefix, targets = comment_ids[:, :-1], comment_ids[:, 1:]
    logits = forward_logits(model, code_ids, ast_ids, prefix,
                            training=training, rng=rng)
    mask = (targets != PAD).astype(np.float64)
    count = int(mask.sum())
    if count == 0:
        raise DataError("batch contains no non-PAD target positions")
    smooth = smooth_target_matrix(targets, model.config.tgt_vocab,
                                  model.config.epsilon)
    log_probs = T.log_softmax(logits, axis=-1)
    per_position = T.tensor_sum(T.mul(smooth, log_probs), axis=-1)
    total = T.tensor_sum(T.mul(per_position, mask))
    return T.mul(total, -1.0 / count), count


def greedy_decode(model: Model, code_ids, ast_ids=None,
                  max_len: int | None = None) -> DecodeResult:
    """Argmax decoding from START until END or the length cap; ties break
    toward the lowest index (np.argmax convention)."""
    cfg = model.config
    if max_len is None:
        max_len = cfg.comment_len - 1
    if max_len < 1:
        raise ConfigurationError("max_len must be >= 1")
    code_ids = np.asarray(code_ids, dtype=np.int64).reshape(1, -1)
    if ast_ids is not None:
        ast_ids = np.asarray(ast_ids, dtype=np.int64).reshape(1, -1)
    if cfg.arch == "transformer" and max_len > cfg.comment_len - 1:
        raise ConfigurationError(
            "transformer decode length exceeds the position table")

    out_ids = []
    distributions = []
    if cfg.arch == "transformer":
        prefix = [START]
        for _ in range(max_len):
            probs = forward_step(model, code_ids, None,
                                 np.array([prefix], dtype=np.int64))
            dist = probs[0, -1]
            nxt = int(np.argmax(dist))
            distributions.append(dist)
            out_ids.append(nxt)
            if nxt == END:
                break
            prefix.append(nxt)
        return DecodeResult(ids=out_ids, distributions=distributions)

    # recurrent architectures decode incrementally
    src_states, state = _run_gru_encoder(model, "enc_gru", "src_embed",
                                         _validate_ids(code_ids,
                                                       cfg.src_vocab, "source"))
    src_mask = code_ids != PAD
    if cfg.arch == "ast_attendgru":
        if ast_ids is None:
            raise DataError("ast_attendgru requires AST token ids")
        ast_states, _ = _run_gru_encoder(model, "ast_gru", "ast_embed",
                                         _validate_ids(ast_ids,
                                                       cfg.ast_vocab, "ast"))
        ast_mask = ast_ids != PAD
    dec_gru = _gru_param_view(model.params, "dec_gru")
    token = START
    for _ in range(max_len):
        state = T.gru_step(T.embedding(model.params["tgt_embed"],
                                       np.array([token])), state, dec_gru)
        context, _ = T.dot_attention(state, src_states, mask=src_mask)
        pieces = [context, state]
        if cfg.arch == "ast_attendgru":
            ast_context, _ = T.dot_attention(state, ast_states, mask=ast_mask)
            pieces = [context, ast_context, state]
        features = T.concat(pieces, axis=-1)
        logits = T.add(T.matmul(features, model.params["out.w"]),
                       model.params["out.b"])
        dist = T.softmax(logits, axis=-1).data[0]
        nxt = int(np.argmax(dist))
        distributions.append(dist)
        out_ids.append(nxt)
        if nxt == END:
            break
        token = nxt
    return DecodeResult(ids=out_ids, distributions=distributions)


# ---------------------------------------------------------------------------
# serialization


def model_to_dict(model: Model) -> dict:
    return {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "config": asdict(model.config),
        "params": {
            name: {"shape": list(t.data.shape), "data": t.data.reshape(-1).tolist()}
            for name, t in model.params.items()
        },
    }


def model_from_dict(payload: dict) -> Model:
    if payload.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise DataError(
            f"unsupported checkpoint format {payload.get('format_version')!r}")
    config = ModelConfig(**payload["config"])
    template = parameter_template(config)
    stored = payload["params"]
    if sorted(stored) != sorted(template):
        raise DataError("checkpoint parameter names do not match architecture")
    params = T.ParamStore()
    for name in sorted(template):
        entry = stored[name]
        shape = tuple(entry["shape"])
        if shape != template[name]:
            raise DataError(
                f"checkpoint shape {shape} for {name!r} does not match "
                f"template {template[name]}")
        data = np.asarray(entry["data"], dtype=np.float64)
        if data.size != int(np.prod(shape)):
            raise DataError(f"checkpoint data size mismatch for {name!r}")
        params.add(name, data.reshape(shape))
    return Model(config=config, params=params)


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True,
                  separators=(",", ":"))
        fh.write("\n")


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed checkpoint {path}: {exc}") from exc
    return model_from_dict(payload)


def grad_check_model(model: Model, code_ids, ast_ids, comment_ids,
                     step: float = 1e-5) -> float:
    """Finite-difference check of the full training loss (dropout off)."""

    def loss_fn():
        loss, _ = sequence_loss(model, code_ids, ast_ids, comment_ids,
                                training=False)
        return loss

    return T.grad_check(loss_fn, model.params, step=step)
