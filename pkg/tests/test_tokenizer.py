import json
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from gazevlm.vlm.tokenizer import ByteLevelBpeTokenizer, TokenizerError

DATA = Path(__file__).parent / "data" / "bpe_reference.json"


@pytest.fixture(scope="module")
def tokenizer(bundle_dir):
    return ByteLevelBpeTokenizer.from_files(bundle_dir / "vocab.json", bundle_dir / "merges.txt")


class TestRoundTrip:
    def test_empty(self, tokenizer):
        assert tokenizer.encode("") == []
        assert tokenizer.decode([]) == ""

    def test_question(self, tokenizer):
        s = "What is in the image?"
        assert tokenizer.decode(tokenizer.encode(s)) == s

    @settings(max_examples=300)
    @given(st.text())
    def test_any_unicode(self, tokenizer, s):
        assert tokenizer.decode(tokenizer.encode(s)) == s

    def test_multibyte_and_emoji(self, tokenizer):
        for s in ("héllo wörld", "日本語のテキスト", "emoji 🌍🚀", "mixed 𝄞 clef"):
            assert tokenizer.decode(tokenizer.encode(s)) == s


class TestReferenceOracle:
    def test_ids_match_frozen_reference(self, tokenizer):
        ref = json.loads(DATA.read_text())
        assert len(ref["sentences"]) == 20
        for sentence, expected in zip(ref["sentences"], ref["ids"]):
            assert tokenizer.encode(sentence) == expected, sentence


class TestLoadValidation:
    def test_merge_result_missing_from_vocab(self):
        vocab = {chr(i): i for i in range(33, 127)}
        with pytest.raises(TokenizerError, match="missing from vocabulary"):
            ByteLevelBpeTokenizer(vocab, [("a", "b")])

    def test_missing_byte_symbols(self):
        # vocab containing the merge result but not the full byte alphabet
        with pytest.raises(TokenizerError):
            ByteLevelBpeTokenizer({"a": 0, "b": 1, "ab": 2}, [("a", "b")])

    def test_malformed_merges_file(self, tmp_path):
        (tmp_path / "vocab.json").write_text("{}")
        (tmp_path / "merges.txt").write_text("a b c\n")
        with pytest.raises(TokenizerError, match="malformed"):
            ByteLevelBpeTokenizer.from_files(tmp_path / "vocab.json", tmp_path / "merges.txt")
