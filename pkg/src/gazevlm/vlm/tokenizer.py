"""Byte-level byte-pair-encoding tokenizer (GPT-2 style vocab/merges files).

Text is split by a pre-tokenization pattern, each piece is mapped
byte-by-byte into a printable unicode alphabet, and the learned merge
rules are applied by rank. Decoding inverts the alphabet mapping, so
encode/decode round-trips any valid UTF-8 exactly.
"""

from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path

import regex

# GPT-2 pre-tokenization: contractions, letter runs, number runs,
# punctuation runs, then whitespace.
_PRETOKEN_PATTERN = regex.compile(
    r"""'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+"""
)


@lru_cache(maxsize=1)
def bytes_to_unicode() -> dict[int, str]:
    """Map every byte to a printable unicode character.

    Printable ASCII and latin-1 symbols map to themselves; the remaining
    bytes are assigned codepoints starting at 256 so no byte maps to
    whitespace or a control character.
    """
    bs = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, map(chr, cs)))


class TokenizerError(Exception):
    pass


class ByteLevelBpeTokenizer:
    def __init__(self, vocab: dict[str, int], merges: list[tuple[str, str]]):
        self.vocab = vocab
        self.decoder = {idx: tok for tok, idx in vocab.items()}
        self.bpe_ranks = {pair: rank for rank, pair in enumerate(merges)}
        self.byte_encoder = bytes_to_unicode()
        self.byte_decoder = {c: b for b, c in self.byte_encoder.items()}
        self._cache: dict[str, list[str]] = {}

        for a, b in merges:
            if a + b not in self.vocab:
                raise TokenizerError(f"merge result {a + b!r} missing from vocabulary")
        for ch in self.byte_encoder.values():
            if ch not in self.vocab:
                raise TokenizerError(f"byte symbol {ch!r} missing from vocabulary")

    @classmethod
    def from_files(cls, vocab_path: str | Path, merges_path: str | Path):
        with open(vocab_path, encoding="utf-8") as fh:
            vocab = json.load(fh)
        merges: list[tuple[str, str]] = []
        with open(merges_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split(" ")
                if len(parts) != 2:
                    raise TokenizerError(f"malformed merge line: {line!r}")
                merges.append((parts[0], parts[1]))
        return cls(vocab, merges)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def _bpe(self, piece: str) -> list[str]:
        if piece in self._cache:
            return self._cache[piece]
        symbols = list(piece)
        while len(symbols) > 1:
            pairs = {(symbols[i], symbols[i + 1]) for i in range(len(symbols) - 1)}
            best = min(pairs, key=lambda p: self.bpe_ranks.get(p, float("inf")))
            if best not in self.bpe_ranks:
                break
            merged: list[str] = []
            i = 0
            while i < len(symbols):
                if (
                    i < len(symbols) - 1
                    and (symbols[i], symbols[i + 1]) == best
                ):
                    merged.append(symbols[i] + symbols[i + 1])
                    i += 2
                else:
                    merged.append(symbols[i])
                    i += 1
            symbols = merged
        self._cache[piece] = symbols
        return symbols

    def encode(self, text: str) -> list[int]:
        ids: list[int] = []
        for piece in _PRETOKEN_PATTERN.findall(text):
            mapped = "".join(self.byte_encoder[b] for b in piece.encode("utf-8"))
            ids.extend(self.vocab[tok] for tok in self._bpe(mapped))
        return ids

    def decode(self, ids: list[int]) -> str:
        text = "".join(self.decoder[i] for i in ids)
        data = bytes(self.byte_decoder[c] for c in text)
        return data.decode("utf-8", errors="replace")
