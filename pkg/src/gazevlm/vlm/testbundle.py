"""Deterministic tiny model bundle generator.

Builds a complete, self-contained model directory (tiny random-weight
encoder/decoder graphs plus a byte-level BPE tokenizer trained on a fixed
corpus) so tests and CI never need to download a real checkpoint. The
same seed always yields bit-identical weights.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .tokenizer import bytes_to_unicode, _PRETOKEN_PATTERN

_CORPUS = (
    "What is in the image? A red apple on a wooden table. "
    "What color is this? The book cover shows a mountain at sunset. "
    "A person holding a cup of coffee near the window. "
    "What is this object used for? It looks like a small green plant in a pot."
)

EOS_TOKEN = "<|endoftext|>"
START_TOKEN = "<|startoftext|>"


def train_bpe_merges(corpus: str, n_merges: int) -> list[tuple[str, str]]:
    """Greedy BPE training over the byte-mapped corpus pieces.

    Ties on pair frequency break lexicographically so training is
    deterministic regardless of dict ordering.
    """
    byte_encoder = bytes_to_unicode()
    words = [
        tuple(byte_encoder[b] for b in piece.encode("utf-8"))
        for piece in _PRETOKEN_PATTERN.findall(corpus)
    ]
    merges: list[tuple[str, str]] = []
    for _ in range(n_merges):
        counts: dict[tuple[str, str], int] = {}
        for word in words:
            for pair in zip(word, word[1:]):
                counts[pair] = counts.get(pair, 0) + 1
        if not counts:
            break
        best = max(counts, key=lambda p: (counts[p], (-ord(p[0][0]), -ord(p[1][0]))))
        if counts[best] < 2:
            break
        merges.append(best)
        merged_sym = best[0] + best[1]
        new_words = []
        for word in words:
            out: list[str] = []
            i = 0
            while i < len(word):
                if i < len(word) - 1 and (word[i], word[i + 1]) == best:
                    out.append(merged_sym)
                    i += 2
                else:
                    out.append(word[i])
                    i += 1
            new_words.append(tuple(out))
        words = new_words
    return merges


def build_tokenizer_files(out_dir: Path, n_merges: int = 48) -> dict[str, int]:
    merges = train_bpe_merges(_CORPUS, n_merges)
    vocab: dict[str, int] = {}
    for b in range(256):
        vocab[bytes_to_unicode()[b]] = len(vocab)
    for a, b in merges:
        if a + b not in vocab:
            vocab[a + b] = len(vocab)
    vocab[START_TOKEN] = len(vocab)
    vocab[EOS_TOKEN] = len(vocab)

    (out_dir / "vocab.json").write_text(json.dumps(vocab, ensure_ascii=False))
    (out_dir / "merges.txt").write_text(
        "#version: tiny\n" + "".join(f"{a} {b}\n" for a, b in merges)
    )
    return vocab


def _linear(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    return (rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in)).astype(np.float32)


def _save_encoder(
    path: Path,
    rng: np.random.Generator,
    image_size: int,
    patch_size: int,
    d: int,
    n_heads: int,
    n_layers: int,
) -> None:
    n_patches = (image_size // patch_size) ** 2
    patch_dim = 3 * patch_size * patch_size
    w: dict[str, np.ndarray] = {
        "patch_embed.w": _linear(rng, patch_dim, d),
        "patch_embed.b": np.zeros(d, dtype=np.float32),
        "pos_embed": (0.02 * rng.standard_normal((n_patches, d))).astype(np.float32),
        "ln_f.g": np.ones(d, dtype=np.float32),
        "ln_f.b": np.zeros(d, dtype=np.float32),
    }
    for i in range(n_layers):
        p = f"blocks.{i}."
        w[p + "ln1.g"] = np.ones(d, dtype=np.float32)
        w[p + "ln1.b"] = np.zeros(d, dtype=np.float32)
        w[p + "attn.wqkv"] = _linear(rng, d, 3 * d)
        w[p + "attn.bqkv"] = np.zeros(3 * d, dtype=np.float32)
        w[p + "attn.wo"] = _linear(rng, d, d)
        w[p + "attn.bo"] = np.zeros(d, dtype=np.float32)
        w[p + "ln2.g"] = np.ones(d, dtype=np.float32)
        w[p + "ln2.b"] = np.zeros(d, dtype=np.float32)
        w[p + "mlp.w1"] = _linear(rng, d, 4 * d)
        w[p + "mlp.b1"] = np.zeros(4 * d, dtype=np.float32)
        w[p + "mlp.w2"] = _linear(rng, 4 * d, d)
        w[p + "mlp.b2"] = np.zeros(d, dtype=np.float32)
    meta = {
        "kind": "vit_tiny",
        "image_size": image_size,
        "patch_size": patch_size,
        "d_model": d,
        "n_heads": n_heads,
        "n_layers": n_layers,
    }
    np.savez(path, meta=json.dumps(meta), **w)


def _save_decoder(
    path: Path,
    rng: np.random.Generator,
    vocab_size: int,
    d: int,
    n_heads: int,
    n_layers: int,
    max_positions: int,
) -> None:
    w: dict[str, np.ndarray] = {
        "tok_emb": (0.1 * rng.standard_normal((vocab_size, d))).astype(np.float32),
        "pos_emb": (0.02 * rng.standard_normal((max_positions, d))).astype(np.float32),
        "ln_f.g": np.ones(d, dtype=np.float32),
        "ln_f.b": np.zeros(d, dtype=np.float32),
        "lm_head.w": _linear(rng, d, vocab_size),
        "lm_head.b": np.zeros(vocab_size, dtype=np.float32),
    }
    for i in range(n_layers):
        p = f"layers.{i}."
        w[p + "ln1.g"] = np.ones(d, dtype=np.float32)
        w[p + "ln1.b"] = np.zeros(d, dtype=np.float32)
        w[p + "self_attn.wqkv"] = _linear(rng, d, 3 * d)
        w[p + "self_attn.bqkv"] = np.zeros(3 * d, dtype=np.float32)
        w[p + "self_attn.wo"] = _linear(rng, d, d)
        w[p + "self_attn.bo"] = np.zeros(d, dtype=np.float32)
        w[p + "ln_x.g"] = np.ones(d, dtype=np.float32)
        w[p + "ln_x.b"] = np.zeros(d, dtype=np.float32)
        w[p + "cross_attn.wq"] = _linear(rng, d, d)
        w[p + "cross_attn.bq"] = np.zeros(d, dtype=np.float32)
        w[p + "cross_attn.wkv"] = _linear(rng, d, 2 * d)
        w[p + "cross_attn.bkv"] = np.zeros(2 * d, dtype=np.float32)
        w[p + "cross_attn.wo"] = _linear(rng, d, d)
        w[p + "cross_attn.bo"] = np.zeros(d, dtype=np.float32)
        w[p + "ln2.g"] = np.ones(d, dtype=np.float32)
        w[p + "ln2.b"] = np.zeros(d, dtype=np.float32)
        w[p + "mlp.w1"] = _linear(rng, d, 4 * d)
        w[p + "mlp.b1"] = np.zeros(4 * d, dtype=np.float32)
        w[p + "mlp.w2"] = _linear(rng, 4 * d, d)
        w[p + "mlp.b2"] = np.zeros(d, dtype=np.float32)
    meta = {
        "kind": "xattn_decoder",
        "vocab_size": vocab_size,
        "d_model": d,
        "n_heads": n_heads,
        "n_layers": n_layers,
        "max_positions": max_positions,
    }
    np.savez(path, meta=json.dumps(meta), **w)


def make_test_bundle(
    out_dir: str | Path,
    seed: int = 0,
    image_size: int = 224,
    patch_size: int = 56,
    d_model: int = 32,
    n_heads: int = 4,
    n_layers: int = 2,
    max_positions: int = 64,
    max_new_tokens: int = 12,
    prompt_mode: str = "logged",
) -> Path:
    """Write a complete tiny bundle directory and return its path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab = build_tokenizer_files(out_dir)
    rng = np.random.default_rng(seed)
    _save_encoder(
        out_dir / "encoder.npz", rng, image_size, patch_size, d_model, n_heads, n_layers
    )
    _save_decoder(
        out_dir / "decoder_with_past.npz",
        rng,
        len(vocab),
        d_model,
        n_heads,
        n_layers,
        max_positions,
    )
    (out_dir / "preprocess_config.json").write_text(
        json.dumps(
            {
                "target_size": image_size,
                "mean": [0.5, 0.5, 0.5],
                "std": [0.5, 0.5, 0.5],
                "prompt_mode": prompt_mode,
            }
        )
    )
    (out_dir / "generation_config.json").write_text(
        json.dumps(
            {
                "eos_token_id": vocab[EOS_TOKEN],
                "decoder_start_token_id": vocab[START_TOKEN],
                "max_new_tokens": max_new_tokens,
            }
        )
    )
    return out_dir
