"""Neural graph execution backends.

A model bundle ships two serialized graphs: a vision encoder and a
decoder-with-past. The numpy backend executes ``.npz`` weight archives
(architecture metadata embedded as JSON) and is what the shipped test
bundles use; an ONNX Runtime adapter handles ``.onnx`` exports of real
checkpoints when onnxruntime is installed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np


class GraphError(Exception):
    """Graph load or execution failure."""


@dataclass
class KvCache:
    """Per-layer past key/value tensors for the decoder.

    ``sequence_length`` grows by exactly one per single-token decode step.
    Cross-attention keys/values depend only on the encoder output and are
    computed once, on the first decoder call.
    """

    self_keys: list[np.ndarray] = field(default_factory=list)
    self_values: list[np.ndarray] = field(default_factory=list)
    cross_keys: list[np.ndarray] = field(default_factory=list)
    cross_values: list[np.ndarray] = field(default_factory=list)
    sequence_length: int = 0


def _layer_norm(x: np.ndarray, g: np.ndarray, b: np.ndarray) -> np.ndarray:
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + 1e-5) * g + b


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + np.tanh(0.7978845608028654 * (x + 0.044715 * x**3)))


def _softmax(x: np.ndarray) -> np.ndarray:
    x = x - x.max(axis=-1, keepdims=True)
    e = np.exp(x)
    return e / e.sum(axis=-1, keepdims=True)


def _split_heads(x: np.ndarray, n_heads: int) -> np.ndarray:
    seq, d = x.shape
    return x.reshape(seq, n_heads, d // n_heads).transpose(1, 0, 2)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    n_heads, seq, hd = x.shape
    return x.transpose(1, 0, 2).reshape(seq, n_heads * hd)


def _attention(
    q: np.ndarray, k: np.ndarray, v: np.ndarray, causal_offset: Optional[int] = None
) -> np.ndarray:
    # q: (h, tq, hd); k, v: (h, tk, hd)
    scores = q @ k.transpose(0, 2, 1) / np.sqrt(q.shape[-1])
    if causal_offset is not None:
        tq, tk = scores.shape[1], scores.shape[2]
        qpos = np.arange(tq)[:, None] + causal_offset
        kpos = np.arange(tk)[None, :]
        scores = np.where(kpos <= qpos, scores, -1e30)
    return _softmax(scores) @ v


class NumpyEncoderGraph:
    """ViT-style encoder over a (3, S, S) image tensor."""

    def __init__(self, path: str | Path):
        archive = np.load(path)
        try:
            self.meta = json.loads(str(archive["meta"]))
        except KeyError as exc:
            raise GraphError(f"{path}: missing meta entry") from exc
        self.w = {k: archive[k] for k in archive.files if k != "meta"}
        self.image_size = int(self.meta["image_size"])
        self.patch_size = int(self.meta["patch_size"])
        self.d_model = int(self.meta["d_model"])
        self.n_heads = int(self.meta["n_heads"])
        self.n_layers = int(self.meta["n_layers"])

    @property
    def input_size(self) -> int:
        return self.image_size

    def run(self, pixel_values: np.ndarray) -> np.ndarray:
        if pixel_values.shape != (3, self.image_size, self.image_size):
            raise GraphError(
                f"encoder expects (3, {self.image_size}, {self.image_size}), "
                f"got {pixel_values.shape}"
            )
        p = self.patch_size
        n = self.image_size // p
        # (3, S, S) -> (n*n, 3*p*p) patch rows
        patches = (
            pixel_values.reshape(3, n, p, n, p)
            .transpose(1, 3, 0, 2, 4)
            .reshape(n * n, 3 * p * p)
        )
        x = patches @ self.w["patch_embed.w"] + self.w["patch_embed.b"]
        x = x + self.w["pos_embed"]
        for i in range(self.n_layers):
            x = self._block(x, f"blocks.{i}.")
        return _layer_norm(x, self.w["ln_f.g"], self.w["ln_f.b"])

    def _block(self, x: np.ndarray, p: str) -> np.ndarray:
        h = _layer_norm(x, self.w[p + "ln1.g"], self.w[p + "ln1.b"])
        qkv = h @ self.w[p + "attn.wqkv"] + self.w[p + "attn.bqkv"]
        q, k, v = np.split(qkv, 3, axis=-1)
        att = _attention(
            _split_heads(q, self.n_heads),
            _split_heads(k, self.n_heads),
            _split_heads(v, self.n_heads),
        )
        x = x + _merge_heads(att) @ self.w[p + "attn.wo"] + self.w[p + "attn.bo"]
        h = _layer_norm(x, self.w[p + "ln2.g"], self.w[p + "ln2.b"])
        h = _gelu(h @ self.w[p + "mlp.w1"] + self.w[p + "mlp.b1"])
        return x + h @ self.w[p + "mlp.w2"] + self.w[p + "mlp.b2"]


class NumpyDecoderGraph:
    """Causal decoder with cross-attention and explicit past key/values."""

    def __init__(self, path: str | Path):
        archive = np.load(path)
        try:
            self.meta = json.loads(str(archive["meta"]))
        except KeyError as exc:
            raise GraphError(f"{path}: missing meta entry") from exc
        self.w = {k: archive[k] for k in archive.files if k != "meta"}
        self.vocab_size = int(self.meta["vocab_size"])
        self.d_model = int(self.meta["d_model"])
        self.n_heads = int(self.meta["n_heads"])
        self.n_layers = int(self.meta["n_layers"])
        self.max_positions = int(self.meta["max_positions"])

    def run(
        self,
        input_ids: np.ndarray,
        encoder_states: np.ndarray,
        past: Optional[KvCache] = None,
    ) -> tuple[np.ndarray, KvCache]:
        """One decoder pass over ``input_ids``, appending to ``past``.

        Returns logits of shape (len(input_ids), vocab_size) and the
        extended cache. With an empty past and the full prefix this is the
        recompute path; with a one-token input and a running cache it is
        the incremental path. Both must agree token-for-token.
        """
        if past is None:
            past = KvCache()
        offset = past.sequence_length
        t = len(input_ids)
        if offset + t > self.max_positions:
            raise GraphError(
                f"sequence length {offset + t} exceeds max_positions {self.max_positions}"
            )
        x = self.w["tok_emb"][np.asarray(input_ids, dtype=np.int64)]
        x = x + self.w["pos_emb"][offset : offset + t]

        new = KvCache(sequence_length=offset + t)
        for i in range(self.n_layers):
            x = self._block(x, i, f"layers.{i}.", encoder_states, past, new, offset)
        x = _layer_norm(x, self.w["ln_f.g"], self.w["ln_f.b"])
        logits = x @ self.w["lm_head.w"] + self.w["lm_head.b"]
        return logits, new

    def _block(
        self,
        x: np.ndarray,
        i: int,
        p: str,
        encoder_states: np.ndarray,
        past: KvCache,
        new: KvCache,
        offset: int,
    ) -> np.ndarray:
        h = _layer_norm(x, self.w[p + "ln1.g"], self.w[p + "ln1.b"])
        qkv = h @ self.w[p + "self_attn.wqkv"] + self.w[p + "self_attn.bqkv"]
        q, k, v = (_split_heads(a, self.n_heads) for a in np.split(qkv, 3, axis=-1))
        if past.self_keys:
            k = np.concatenate([past.self_keys[i], k], axis=1)
            v = np.concatenate([past.self_values[i], v], axis=1)
        new.self_keys.append(k)
        new.self_values.append(v)
        att = _attention(q, k, v, causal_offset=offset)
        x = x + _merge_heads(att) @ self.w[p + "self_attn.wo"] + self.w[p + "self_attn.bo"]

        h = _layer_norm(x, self.w[p + "ln_x.g"], self.w[p + "ln_x.b"])
        q = _split_heads(h @ self.w[p + "cross_attn.wq"] + self.w[p + "cross_attn.bq"], self.n_heads)
        if past.cross_keys:
            ck, cv = past.cross_keys[i], past.cross_values[i]
        else:
            kv = encoder_states @ self.w[p + "cross_attn.wkv"] + self.w[p + "cross_attn.bkv"]
            ck, cv = (_split_heads(a, self.n_heads) for a in np.split(kv, 2, axis=-1))
        new.cross_keys.append(ck)
        new.cross_values.append(cv)
        att = _attention(q, ck, cv)
        x = x + _merge_heads(att) @ self.w[p + "cross_attn.wo"] + self.w[p + "cross_attn.bo"]

        h = _layer_norm(x, self.w[p + "ln2.g"], self.w[p + "ln2.b"])
        h = _gelu(h @ self.w[p + "mlp.w1"] + self.w[p + "mlp.b1"])
        return x + h @ self.w[p + "mlp.w2"] + self.w[p + "mlp.b2"]


class OnnxEncoderGraph:
    """Adapter for Optimum-style ``encoder_model.onnx`` exports."""

    def __init__(self, path: str | Path, input_size: int = 224):
        try:
            import onnxruntime as ort
        except ImportError as exc:
            raise GraphError(
                "onnxruntime is required for .onnx graphs; install it or use an .npz bundle"
            ) from exc
        self.session = ort.InferenceSession(str(path), providers=["CPUExecutionProvider"])
        self.input_size = input_size

    def run(self, pixel_values: np.ndarray) -> np.ndarray:
        out = self.session.run(
            None, {"pixel_values": pixel_values[None].astype(np.float32)}
        )
        return out[0][0]


class OnnxDecoderGraph:
    """Adapter for Optimum-style merged decoder-with-past exports.

    Feeds ``use_cache_branch`` plus flattened past key/values following
    the standard export naming (past_key_values.N.{decoder,encoder}.{key,value}).
    """

    def __init__(self, path: str | Path):
        try:
            import onnxruntime as ort
        except ImportError as exc:
            raise GraphError(
                "onnxruntime is required for .onnx graphs; install it or use an .npz bundle"
            ) from exc
        self.session = ort.InferenceSession(str(path), providers=["CPUExecutionProvider"])
        names = [i.name for i in self.session.get_inputs()]
        self.n_layers = len([n for n in names if n.endswith(".decoder.key")])
        self.has_cache_branch = "use_cache_branch" in names

    def run(
        self,
        input_ids: np.ndarray,
        encoder_states: np.ndarray,
        past: Optional[KvCache] = None,
    ) -> tuple[np.ndarray, KvCache]:
        first = past is None or past.sequence_length == 0
        feeds: dict[str, np.ndarray] = {
            "input_ids": np.asarray(input_ids, dtype=np.int64)[None],
            "encoder_hidden_states": encoder_states[None].astype(np.float32),
        }
        if self.has_cache_branch:
            feeds["use_cache_branch"] = np.array([not first])
        d = encoder_states.shape[-1]
        for i in range(self.n_layers):
            if first:
                empty = np.zeros((1, 1, 0, d), dtype=np.float32)
                dk = dv = ek = ev = empty
            else:
                dk = past.self_keys[i][None]
                dv = past.self_values[i][None]
                ek = past.cross_keys[i][None]
                ev = past.cross_values[i][None]
            feeds[f"past_key_values.{i}.decoder.key"] = dk
            feeds[f"past_key_values.{i}.decoder.value"] = dv
            feeds[f"past_key_values.{i}.encoder.key"] = ek
            feeds[f"past_key_values.{i}.encoder.value"] = ev
        outputs = self.session.run(None, feeds)
        logits = outputs[0][0]
        new = KvCache(
            sequence_length=(0 if first else past.sequence_length) + len(input_ids)
        )
        present = outputs[1:]
        for i in range(self.n_layers):
            new.self_keys.append(present[4 * i][0])
            new.self_values.append(present[4 * i + 1][0])
            if first:
                new.cross_keys.append(present[4 * i + 2][0])
                new.cross_values.append(present[4 * i + 3][0])
            else:
                new.cross_keys.append(past.cross_keys[i])
                new.cross_values.append(past.cross_values[i])
        return logits, new


def load_encoder_graph(path: Path):
    if path.suffix == ".npz":
        return NumpyEncoderGraph(path)
    if path.suffix == ".onnx":
        return OnnxEncoderGraph(path)
    raise GraphError(f"unsupported encoder graph format: {path.name}")


def load_decoder_graph(path: Path):
    if path.suffix == ".npz":
        return NumpyDecoderGraph(path)
    if path.suffix == ".onnx":
        return OnnxDecoderGraph(path)
    raise GraphError(f"unsupported decoder graph format: {path.name}")
