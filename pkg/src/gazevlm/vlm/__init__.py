from .engine import ModelBundle, GenerationResult, VlmEngine, load_model
from .preprocess import PreprocessConfig, PreprocessedImage, preprocess
from .tokenizer import ByteLevelBpeTokenizer

__all__ = [
    "ByteLevelBpeTokenizer",
    "GenerationResult",
    "ModelBundle",
    "PreprocessConfig",
    "PreprocessedImage",
    "VlmEngine",
    "load_model",
    "preprocess",
]
