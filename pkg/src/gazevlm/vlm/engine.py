"""Local vision-language inference engine.

Loads a self-contained model directory (encoder graph, decoder-with-past
graph, tokenizer files, preprocessing and generation configs), runs one
encoder pass per image, then a greedy decoder loop that feeds only the
newest token plus the key/value cache each step. Per-phase timing is
recorded so inference time and token-generation speed can be reported the
way the benchmark defines them; model load time is measured separately
and never folded into inference time.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .preprocess import PreprocessConfig, PreprocessedImage
from .runtime import GraphError, KvCache, load_decoder_graph, load_encoder_graph
from .tokenizer import ByteLevelBpeTokenizer


class ModelLoadError(Exception):
    pass


class GenerationError(Exception):
    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message if step is None else f"{message} (decode step {step})")
        self.step = step


@dataclass(frozen=True)
class GenerationConfig:
    eos_token_id: int
    decoder_start_token_id: int
    max_new_tokens: int = 32


@dataclass
class ModelBundle:
    model_dir: Path
    encoder: object
    decoder: object
    tokenizer: ByteLevelBpeTokenizer
    preprocess_config: PreprocessConfig
    generation_config: GenerationConfig
    load_time: float


@dataclass(frozen=True)
class GenerationResult:
    token_ids: list[int]
    text: str
    prompt: str
    encode_time: float
    decode_time: float

    @property
    def tokens_generated(self) -> int:
        return len(self.token_ids)

    @property
    def tg_speed(self) -> float:
        if self.tokens_generated == 0 or self.decode_time == 0:
            return 0.0
        return self.tokens_generated / self.decode_time

    @property
    def inference_time(self) -> float:
        return self.encode_time + self.decode_time


_ENCODER_NAMES = ("encoder.npz", "encoder_model.onnx")
_DECODER_NAMES = ("decoder_with_past.npz", "decoder_model_merged.onnx")


def _find(model_dir: Path, names: tuple[str, ...], what: str) -> Path:
    for name in names:
        p = model_dir / name
        if p.exists():
            return p
    raise ModelLoadError(f"{what} absent from {model_dir} (looked for {', '.join(names)})")


def load_model(model_dir: str | Path, clock: Callable[[], float] = time.perf_counter) -> ModelBundle:
    """Load a bundle directory; load time is timed here and reported apart."""
    model_dir = Path(model_dir)
    if not model_dir.is_dir():
        raise ModelLoadError(f"model directory {model_dir} does not exist")
    t0 = clock()

    encoder_path = _find(model_dir, _ENCODER_NAMES, "encoder graph")
    decoder_path = _find(model_dir, _DECODER_NAMES, "decoder graph")
    vocab_path = model_dir / "vocab.json"
    merges_path = model_dir / "merges.txt"
    if not vocab_path.exists() or not merges_path.exists():
        raise ModelLoadError(f"tokenizer_files absent from {model_dir}")

    try:
        encoder = load_encoder_graph(encoder_path)
        decoder = load_decoder_graph(decoder_path)
    except GraphError as exc:
        raise ModelLoadError(str(exc)) from exc
    tokenizer = ByteLevelBpeTokenizer.from_files(vocab_path, merges_path)

    pre_path = model_dir / "preprocess_config.json"
    if not pre_path.exists():
        raise ModelLoadError(f"preprocess_config.json absent from {model_dir}")
    preprocess_config = PreprocessConfig.from_dict(json.loads(pre_path.read_text()))
    if preprocess_config.target_size != encoder.input_size:
        raise ModelLoadError(
            f"preprocess target {preprocess_config.target_size} does not match "
            f"encoder input size {encoder.input_size}"
        )

    gen_path = model_dir / "generation_config.json"
    if not gen_path.exists():
        raise ModelLoadError(f"generation_config.json absent from {model_dir}")
    g = json.loads(gen_path.read_text())
    generation_config = GenerationConfig(
        eos_token_id=int(g["eos_token_id"]),
        decoder_start_token_id=int(g["decoder_start_token_id"]),
        max_new_tokens=int(g.get("max_new_tokens", 32)),
    )

    return ModelBundle(
        model_dir=model_dir,
        encoder=encoder,
        decoder=decoder,
        tokenizer=tokenizer,
        preprocess_config=preprocess_config,
        generation_config=generation_config,
        load_time=clock() - t0,
    )


def measure_load_time(model_dir: str | Path, runs: int = 10) -> dict:
    """Load the bundle ``runs`` times and report min/mean/max seconds."""
    times = [load_model(model_dir).load_time for _ in range(runs)]
    return {
        "runs": runs,
        "min": min(times),
        "mean": sum(times) / len(times),
        "max": max(times),
    }


def _decoder_prefix(bundle: ModelBundle, prompt: str) -> list[int]:
    prefix = [bundle.generation_config.decoder_start_token_id]
    if bundle.preprocess_config.prompt_mode == "conditioned" and prompt:
        prefix.extend(bundle.tokenizer.encode(prompt))
    return prefix


class VlmEngine:
    """Owns one loaded bundle; one generation in flight at a time."""

    def __init__(self, bundle: ModelBundle):
        self.bundle = bundle
        self._busy = threading.Lock()
        self._cancel = threading.Event()

    @classmethod
    def from_dir(cls, model_dir: str | Path) -> "VlmEngine":
        return cls(load_model(model_dir))

    def cancel(self) -> None:
        self._cancel.set()

    def swap_model(self, model_dir: str | Path) -> ModelBundle:
        """Replace the bundle; on failure the previous one keeps serving."""
        new_bundle = load_model(model_dir)  # raises before touching state
        with self._busy:
            self.bundle = new_bundle
        return new_bundle

    def generate(
        self,
        image: PreprocessedImage,
        prompt: str = "",
        max_new_tokens: Optional[int] = None,
        clock: Callable[[], float] = time.perf_counter,
        token_callback: Optional[Callable[[int, str], None]] = None,
    ) -> GenerationResult:
        with self._busy:
            self._cancel.clear()
            return self._generate_locked(image, prompt, max_new_tokens, clock, token_callback)

    def _generate_locked(self, image, prompt, max_new_tokens, clock, token_callback) -> GenerationResult:
        bundle = self.bundle
        limit = (
            bundle.generation_config.max_new_tokens
            if max_new_tokens is None
            else max_new_tokens
        )
        eos = bundle.generation_config.eos_token_id

        t0 = clock()
        try:
            encoder_states = bundle.encoder.run(image.tensor)
        except GraphError as exc:
            raise GenerationError(f"encoder failed: {exc}") from exc
        t1 = clock()

        prefix = _decoder_prefix(bundle, prompt)
        generated: list[int] = []
        past: Optional[KvCache] = None
        feed = np.asarray(prefix, dtype=np.int64)
        step = 0
        while len(generated) < limit:
            if self._cancel.is_set():
                break
            try:
                logits, past = bundle.decoder.run(feed, encoder_states, past)
            except GraphError as exc:
                raise GenerationError(f"decoder failed: {exc}", step=step) from exc
            # Greedy: argmax with ties going to the lowest token id.
            token = int(np.argmax(logits[-1]))
            step += 1
            if token == eos:
                break
            generated.append(token)
            if token_callback is not None:
                token_callback(token, bundle.tokenizer.decode([token]))
            feed = np.asarray([token], dtype=np.int64)
        t2 = clock()

        return GenerationResult(
            token_ids=generated,
            text=bundle.tokenizer.decode(generated),
            prompt=prompt,
            encode_time=t1 - t0,
            decode_time=t2 - t1,
        )


def generate_without_cache(
    bundle: ModelBundle,
    image: PreprocessedImage,
    prompt: str = "",
    max_new_tokens: Optional[int] = None,
) -> list[int]:
    """Full-prefix recompute decoding: re-runs the decoder on the whole
    sequence with an empty past at every step. Reference route for the
    cache-equivalence check; must match :meth:`VlmEngine.generate`
    token-for-token.
    """
    limit = (
        bundle.generation_config.max_new_tokens
        if max_new_tokens is None
        else max_new_tokens
    )
    eos = bundle.generation_config.eos_token_id
    encoder_states = bundle.encoder.run(image.tensor)
    sequence = _decoder_prefix(bundle, prompt)
    generated: list[int] = []
    while len(generated) < limit:
        logits, _ = bundle.decoder.run(
            np.asarray(sequence, dtype=np.int64), encoder_states, None
        )
        token = int(np.argmax(logits[-1]))
        if token == eos:
            break
        generated.append(token)
        sequence.append(token)
    return generated
