"""Small pre-norm transformer encoder with word-level positions and two tagging heads.

Everything is plain numpy in float64 with a hand-written backward pass, so
gradients can be checked against finite differences.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .tags import IGNORE, NC_TAGS, PUNCT_TAGS, repair_iob
from .tokenizer import SubwordSequence, TokenLabels

LN_EPS = 1e-5
CKPT_MAGIC = b"STREAMITN-CKPT v1\n"


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    layers: int = 2
    heads: int = 4
    model_dim: int = 64
    ffn_dim: int = 128
    max_positions: int = 128
    nc_classes: int = len(NC_TAGS)
    punct_classes: int = len(PUNCT_TAGS)
    dropout_rate: float = 0.1

    def __post_init__(self):
        if self.model_dim % self.heads:
            raise ValueError("model_dim must be divisible by heads")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")

    @property
    def head_dim(self) -> int:
        return self.model_dim // self.heads


@dataclass
class ModelParams:
    config: ModelConfig
    tensors: dict[str, np.ndarray]
    # Bumped on every in-place update; traces from older versions are stale.
    version: int = 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def names(self) -> list[str]:
        return list(self.tensors)

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {k: v.copy() for k, v in self.tensors.items()}, self.version)

    def astype(self, dtype) -> "ModelParams":
        """Copy with every tensor cast; forward() then computes in that precision."""
        return ModelParams(self.config, {k: v.astype(dtype) for k, v in self.tensors.items()}, self.version)

    def num_parameters(self) -> int:
        return sum(v.size for v in self.tensors.values())


def layer_names(i: int) -> list[str]:
    return [f"l{i}.{n}" for n in ("ln1.g", "ln1.b", "wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
                                  "ln2.g", "ln2.b", "w1", "b1", "w2", "b2")]


def init_params(config: ModelConfig, rng: np.random.Generator) -> ModelParams:
    d, f = config.model_dim, config.ffn_dim

    def normal(*shape, std=0.02):
        return rng.normal(0.0, std, size=shape)

    t: dict[str, np.ndarray] = {
        "tok_emb": normal(config.vocab_size, d, std=0.1),
        "pos_emb": normal(config.max_positions, d, std=0.1),
    }
    for i in range(config.layers):
        p = f"l{i}."
        t[p + "ln1.g"], t[p + "ln1.b"] = np.ones(d), np.zeros(d)
        for w in ("wq", "wk", "wv"):
            t[p + w] = normal(d, d, std=1 / math.sqrt(d))
            t[p + "b" + w[1]] = np.zeros(d)
        t[p + "wo"], t[p + "bo"] = normal(d, d, std=1 / math.sqrt(d) / math.sqrt(2 * config.layers)), np.zeros(d)
        t[p + "ln2.g"], t[p + "ln2.b"] = np.ones(d), np.zeros(d)
        t[p + "w1"], t[p + "b1"] = normal(d, f, std=1 / math.sqrt(d)), np.zeros(f)
        t[p + "w2"], t[p + "b2"] = normal(f, d, std=1 / math.sqrt(f) / math.sqrt(2 * config.layers)), np.zeros(d)
    t["lnf.g"], t["lnf.b"] = np.ones(d), np.zeros(d)
    t["nc.w"], t["nc.b"] = normal(d, config.nc_classes, std=1 / math.sqrt(d)), np.zeros(config.nc_classes)
    t["punct.w"], t["punct.b"] = normal(d, config.punct_classes, std=1 / math.sqrt(d)), np.zeros(config.punct_classes)
    return ModelParams(config, t)


@dataclass
class Batch:
    """Padded token batch. `mask[b, i, j]` is True when token i may attend to token j."""

    token_ids: np.ndarray  # (B, T) int
    positions: np.ndarray  # (B, T) int, word index + offset
    mask: np.ndarray  # (B, T, T) bool
    valid: np.ndarray  # (B, T) bool
    lengths: list[int] = field(default_factory=list)


def make_batch(seqs: Sequence[SubwordSequence], masks: Sequence[np.ndarray | None],
               offsets: Sequence[int] | None = None, pad_id: int = 0) -> Batch:
    if len(seqs) != len(masks):
        raise ValueError("one mask per sequence required")
    bsz, width = len(seqs), max(len(s) for s in seqs)
    ids = np.full((bsz, width), pad_id, dtype=np.int64)
    pos = np.zeros((bsz, width), dtype=np.int64)
    mask = np.zeros((bsz, width, width), dtype=bool)
    valid = np.zeros((bsz, width), dtype=bool)
    for b, (seq, m) in enumerate(zip(seqs, masks)):
        n = len(seq)
        ids[b, :n] = seq.token_ids
        pos[b, :n] = np.asarray(seq.word_ids) + (offsets[b] if offsets is not None else 0)
        if m is None:
            mask[b, :n, :n] = True
        else:
            if m.shape != (n, n):
                raise ValueError(f"mask shape {m.shape} does not match {n} tokens")
            mask[b, :n, :n] = m
        valid[b, :n] = True
        # padded rows attend to themselves so their softmax stays finite
        idx = np.arange(n, width)
        mask[b, idx, idx] = True
    return Batch(ids, pos, mask, valid, [len(s) for s in seqs])


def _masked(lab: TokenLabels) -> tuple[np.ndarray, np.ndarray]:
    keep = np.asarray(lab.loss_mask, dtype=bool)
    return (np.where(keep, lab.nc_labels, IGNORE).astype(np.int64),
            np.where(keep, lab.punct_labels, IGNORE).astype(np.int64))


def label_arrays(labels: Sequence[TokenLabels], width: int) -> tuple[np.ndarray, np.ndarray]:
    """Padded label matrices; positions outside the loss mask become IGNORE."""
    nc = np.full((len(labels), width), IGNORE, dtype=np.int64)
    punct = np.full((len(labels), width), IGNORE, dtype=np.int64)
    for b, lab in enumerate(labels):
        n = len(lab.nc_labels)
        nc[b, :n], punct[b, :n] = _masked(lab)
    return nc, punct


# ---------------------------------------------------------------------------
# primitives

def _layer_norm(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(-1, keepdims=True) + LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv)


def _layer_norm_back(dy, g, cache):
    xhat, inv = cache
    dg = (dy * xhat).reshape(-1, xhat.shape[-1]).sum(0)
    db = dy.reshape(-1, xhat.shape[-1]).sum(0)
    dxhat = dy * g
    dx = inv * (dxhat - dxhat.mean(-1, keepdims=True) - xhat * (dxhat * xhat).mean(-1, keepdims=True))
    return dx, dg, db


_GELU_C = math.sqrt(2.0 / math.pi)


def _gelu(h):
    u = _GELU_C * (h + 0.044715 * (h * h * h))
    t = np.tanh(u)
    return 0.5 * h * (1.0 + t), t


def _gelu_back(dy, h, t):
    du = _GELU_C * (1.0 + 3 * 0.044715 * h * h)
    return dy * (0.5 * (1.0 + t) + 0.5 * h * (1.0 - t * t) * du)


def _softmax(s):
    m = s.max(-1, keepdims=True)
    e = np.exp(s - m)
    return e / e.sum(-1, keepdims=True)


def _dropout_mask(rng, shape, rate):
    keep = rng.random(shape) >= rate
    return keep / (1.0 - rate)


# ---------------------------------------------------------------------------
# forward / backward

@dataclass
class ForwardTrace:
    version: int
    batch: Batch
    cache: dict
    nc_logits: np.ndarray
    punct_logits: np.ndarray


def forward(params: ModelParams, batch: Batch, train: bool = False,
            rng: np.random.Generator | None = None, input_delta: np.ndarray | None = None):
    """Return (nc_logits, punct_logits, trace); logits are (B, T, classes)."""
    cfg = params.config
    p = params.tensors
    bsz, width = batch.token_ids.shape
    if batch.mask.shape != (bsz, width, width):
        raise ValueError(f"mask shape {batch.mask.shape} does not match batch {(bsz, width)}")
    if batch.positions.max(initial=0) >= cfg.max_positions or batch.positions.min(initial=0) < 0:
        raise ValueError(f"word position out of range [0, {cfg.max_positions})")
    if batch.token_ids.max(initial=0) >= cfg.vocab_size:
        raise ValueError("token id out of vocabulary range")
    rate = cfg.dropout_rate if train else 0.0
    if rate > 0 and rng is None:
        raise ValueError("train mode with dropout needs an rng")
    h, dh = cfg.heads, cfg.head_dim
    cache: dict = {}

    x = p["tok_emb"][batch.token_ids] + p["pos_emb"][batch.positions]
    if input_delta is not None:
        x = x + input_delta
    if rate > 0:
        cache["drop_emb"] = _dropout_mask(rng, x.shape, rate)
        x = x * cache["drop_emb"]
    neg = np.where(batch.mask, 0.0, -np.inf).astype(x.dtype)[:, None, :, :]
    scale = 1.0 / math.sqrt(dh)
    for i in range(cfg.layers):
        pre = f"l{i}."
        c: dict = {}
        a, c["ln1"] = _layer_norm(x, p[pre + "ln1.g"], p[pre + "ln1.b"])
        q = (a @ p[pre + "wq"] + p[pre + "bq"]).reshape(bsz, width, h, dh).transpose(0, 2, 1, 3)
        k = (a @ p[pre + "wk"] + p[pre + "bk"]).reshape(bsz, width, h, dh).transpose(0, 2, 1, 3)
        v = (a @ p[pre + "wv"] + p[pre + "bv"]).reshape(bsz, width, h, dh).transpose(0, 2, 1, 3)
        probs = _softmax(q @ k.transpose(0, 1, 3, 2) * scale + neg)
        o = (probs @ v).transpose(0, 2, 1, 3).reshape(bsz, width, cfg.model_dim)
        x = x + o @ p[pre + "wo"] + p[pre + "bo"]
        f, c["ln2"] = _layer_norm(x, p[pre + "ln2.g"], p[pre + "ln2.b"])
        hid = f @ p[pre + "w1"] + p[pre + "b1"]
        g, tanh = _gelu(hid)
        y = g @ p[pre + "w2"] + p[pre + "b2"]
        if rate > 0:
            c["drop_ffn"] = _dropout_mask(rng, y.shape, rate)
            y = y * c["drop_ffn"]
        x = x + y
        c.update(a=a, q=q, k=k, v=v, probs=probs, o=o, f=f, hid=hid, g=g, tanh=tanh)
        cache[i] = c
    z, cache["lnf"] = _layer_norm(x, p["lnf.g"], p["lnf.b"])
    z_nc, z_punct = z, z
    if rate > 0:
        cache["drop_nc"] = _dropout_mask(rng, z.shape, rate)
        cache["drop_punct"] = _dropout_mask(rng, z.shape, rate)
        z_nc, z_punct = z * cache["drop_nc"], z * cache["drop_punct"]
    nc_logits = z_nc @ p["nc.w"] + p["nc.b"]
    punct_logits = z_punct @ p["punct.w"] + p["punct.b"]
    cache.update(z_nc=z_nc, z_punct=z_punct)
    return nc_logits, punct_logits, ForwardTrace(params.version, batch, cache, nc_logits, punct_logits)


def _log_softmax(logits):
    m = logits.max(-1, keepdims=True)
    s = logits - m
    return s - np.log(np.exp(s).sum(-1, keepdims=True))


def _ce_terms(logits, labels):
    keep = labels != IGNORE
    count = int(keep.sum())
    if count == 0:
        raise ValueError("empty loss")
    logp = _log_softmax(logits)
    picked = np.take_along_axis(logp, np.where(keep, labels, 0)[..., None], -1)[..., 0]
    return -(picked * keep).sum() / count, logp, keep, count


def loss(nc_logits: np.ndarray, punct_logits: np.ndarray, nc_labels, punct_labels=None) -> float:
    """Sum of the two heads' mean cross-entropies over loss-contributing positions.

    `nc_labels` may be a TokenLabels, in which case the logits are (T, C).
    """
    if isinstance(nc_labels, TokenLabels):
        nc_labels, punct_labels = _masked(nc_labels)
    nc_labels, punct_labels = np.asarray(nc_labels), np.asarray(punct_labels)
    if nc_labels.shape != nc_logits.shape[:-1] or punct_labels.shape != punct_logits.shape[:-1]:
        raise ValueError("logits and labels are not aligned")
    l_nc = _ce_terms(nc_logits, nc_labels)[0]
    l_p = _ce_terms(punct_logits, punct_labels)[0]
    return float(l_nc + l_p)


def _ce_grad(logits, labels):
    _, logp, keep, count = _ce_terms(logits, labels)
    grad = np.exp(logp)
    idx = np.nonzero(keep)
    grad[idx + (labels[idx],)] -= 1.0
    return grad * keep[..., None] / count


def backward(params: ModelParams, trace: ForwardTrace, nc_labels: np.ndarray,
             punct_labels: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradient of `loss` with respect to every tensor in `params`."""
    if trace.version != params.version:
        raise ValueError("stale trace: parameters changed since forward")
    cfg = params.config
    p = params.tensors
    c0 = trace.cache
    batch = trace.batch
    bsz, width = batch.token_ids.shape
    h, dh, d = cfg.heads, cfg.head_dim, cfg.model_dim
    grads = {k: np.zeros_like(v) for k, v in p.items()}

    d_nc = _ce_grad(trace.nc_logits, np.asarray(nc_labels))
    d_p = _ce_grad(trace.punct_logits, np.asarray(punct_labels))
    grads["nc.w"] = c0["z_nc"].reshape(-1, d).T @ d_nc.reshape(-1, cfg.nc_classes)
    grads["nc.b"] = d_nc.reshape(-1, cfg.nc_classes).sum(0)
    grads["punct.w"] = c0["z_punct"].reshape(-1, d).T @ d_p.reshape(-1, cfg.punct_classes)
    grads["punct.b"] = d_p.reshape(-1, cfg.punct_classes).sum(0)
    dz_nc = d_nc @ p["nc.w"].T
    dz_p = d_p @ p["punct.w"].T
    if "drop_nc" in c0:
        dz_nc = dz_nc * c0["drop_nc"]
        dz_p = dz_p * c0["drop_punct"]
    dx, grads["lnf.g"], grads["lnf.b"] = _layer_norm_back(dz_nc + dz_p, p["lnf.g"], c0["lnf"])

    scale = 1.0 / math.sqrt(dh)
    for i in reversed(range(cfg.layers)):
        pre = f"l{i}."
        c = c0[i]
        # feed-forward residual branch
        dy = dx * c["drop_ffn"] if "drop_ffn" in c else dx
        grads[pre + "w2"] = c["g"].reshape(-1, cfg.ffn_dim).T @ dy.reshape(-1, d)
        grads[pre + "b2"] = dy.reshape(-1, d).sum(0)
        dhid = _gelu_back(dy @ p[pre + "w2"].T, c["hid"], c["tanh"])
        grads[pre + "w1"] = c["f"].reshape(-1, d).T @ dhid.reshape(-1, cfg.ffn_dim)
        grads[pre + "b1"] = dhid.reshape(-1, cfg.ffn_dim).sum(0)
        df = dhid @ p[pre + "w1"].T
        dln, grads[pre + "ln2.g"], grads[pre + "ln2.b"] = _layer_norm_back(df, p[pre + "ln2.g"], c["ln2"])
        dx = dx + dln
        # attention residual branch
        grads[pre + "wo"] = c["o"].reshape(-1, d).T @ dx.reshape(-1, d)
        grads[pre + "bo"] = dx.reshape(-1, d).sum(0)
        do = (dx @ p[pre + "wo"].T).reshape(bsz, width, h, dh).transpose(0, 2, 1, 3)
        probs = c["probs"]
        dv = probs.transpose(0, 1, 3, 2) @ do
        dprobs = do @ c["v"].transpose(0, 1, 3, 2)
        ds = probs * (dprobs - (dprobs * probs).sum(-1, keepdims=True)) * scale
        dq = ds @ c["k"]
        dk = ds.transpose(0, 1, 3, 2) @ c["q"]
        a2 = c["a"].reshape(-1, d)
        da = np.zeros_like(c["a"])
        for name, dt in (("q", dq), ("k", dk), ("v", dv)):
            flat = dt.transpose(0, 2, 1, 3).reshape(-1, d)
            grads[pre + "w" + name] = a2.T @ flat
            grads[pre + "b" + name] = flat.sum(0)
            da += (flat @ p[pre + "w" + name].T).reshape(bsz, width, d)
        dln, grads[pre + "ln1.g"], grads[pre + "ln1.b"] = _layer_norm_back(da, p[pre + "ln1.g"], c["ln1"])
        dx = dx + dln

    if "drop_emb" in c0:
        dx = dx * c0["drop_emb"]
    np.add.at(grads["tok_emb"], batch.token_ids, dx)
    np.add.at(grads["pos_emb"], batch.positions, dx)
    return grads


# ---------------------------------------------------------------------------
# single-sequence helpers

def forward_one(params: ModelParams, seq: SubwordSequence, mask: np.ndarray | None = None,
                offset: int = 0, input_delta: np.ndarray | None = None):
    """Eval-mode logits (T, C) for one sequence."""
    batch = make_batch([seq], [mask], [offset])
    delta = None if input_delta is None else input_delta[None]
    nc, punct, _ = forward(params, batch, input_delta=delta)
    return nc[0], punct[0]


def predict_tags(nc_logits: np.ndarray, punct_logits: np.ndarray,
                 seq: SubwordSequence) -> tuple[list[str], list[str]]:
    """Word tags read from each word's first-subword row, with IOB repair."""
    first = seq.first_positions()
    nc = [NC_TAGS[int(i)] for i in np.argmax(nc_logits[first], axis=-1)]
    punct = [PUNCT_TAGS[int(i)] for i in np.argmax(punct_logits[first], axis=-1)]
    return repair_iob(nc), punct


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(path: str | Path, params: ModelParams, metadata: dict | None = None) -> None:
    """Text header (JSON) then little-endian float32 tensor data."""
    entries, offset, blobs = [], 0, []
    for name, arr in params.tensors.items():
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(data)})
        blobs.append(data)
        offset += len(data)
    header = json.dumps({"config": asdict(params.config), "tensors": entries,
                         "metadata": metadata or {}}, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str | Path) -> tuple[ModelParams, dict]:
    raw = Path(path).read_bytes()
    if not raw.startswith(CKPT_MAGIC):
        raise ValueError(f"not a checkpoint: {path}")
    pos = len(CKPT_MAGIC)
    (hlen,) = struct.unpack("<Q", raw[pos:pos + 8])
    pos += 8
    header = json.loads(raw[pos:pos + hlen].decode("utf-8"))
    pos += hlen
    tensors = {}
    for e in header["tensors"]:
        start = pos + e["offset"]
        arr = np.frombuffer(raw[start:start + e["nbytes"]], dtype="<f4").reshape(e["shape"])
        tensors[e["name"]] = arr.astype(np.float64)
    return ModelParams(ModelConfig(**header["config"]), tensors), header["metadata"]
