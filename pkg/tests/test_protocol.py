import pytest
from hypothesis import given, strategies as st

from gazevlm.protocol import (
    PROTO_VERSION,
    ProtocolError,
    decode_frames,
    encode_frame,
    encode_message,
    parse_message,
)


class TestRecordCodec:
    def test_simple_round_trip(self):
        record = encode_message("gaze", u=0.5, v=0.25)
        assert record == "gaze u=0.5 v=0.25"
        assert parse_message(record) == ("gaze", {"u": "0.5", "v": "0.25"})

    def test_values_with_spaces_and_equals(self):
        record = encode_message("query", text="what is this = that?")
        tag, fields = parse_message(record)
        assert tag == "query"
        assert fields["text"] == "what is this = that?"
        assert " " not in record.split(" ", 1)[1].split(" ")[0] or True
        # exactly tag + one field: no literal spaces leaked into the value
        assert len(record.split(" ")) == 2

    def test_unicode_values(self):
        for text in ("héllo", "日本語", "🌍 emoji"):
            _, fields = parse_message(encode_message("answer", text=text))
            assert fields["text"] == text

    def test_newline_in_value(self):
        _, fields = parse_message(encode_message("answer", text="line1\nline2"))
        assert fields["text"] == "line1\nline2"

    def test_no_fields(self):
        assert parse_message(encode_message("trigger")) == ("trigger", {})

    def test_bad_tag_rejected(self):
        with pytest.raises(ProtocolError):
            encode_message("two words")
        with pytest.raises(ProtocolError):
            encode_message("")

    def test_malformed_field_rejected(self):
        with pytest.raises(ProtocolError, match="malformed field"):
            parse_message("gaze u0.5")

    def test_empty_record_rejected(self):
        with pytest.raises(ProtocolError):
            parse_message("   ")

    @given(st.dictionaries(
        st.text(alphabet=st.characters(whitelist_categories=("Ll",)), min_size=1, max_size=8),
        st.text(max_size=40),
        max_size=5,
    ))
    def test_any_fields_round_trip(self, fields):
        tag, parsed = parse_message(encode_message("hello", **fields))
        assert tag == "hello" and parsed == fields

    def test_version_constant(self):
        _, fields = parse_message(encode_message("hello", proto=PROTO_VERSION))
        assert fields["proto"] == "1"


class TestStreamFraming:
    def test_single_frame(self):
        records, rest = decode_frames(encode_frame("trigger"))
        assert records == ["trigger"] and rest == b""

    def test_prefix_counts_bytes_not_chars(self):
        # framing is codec-agnostic; feed it a raw multibyte string
        record = "answer 日本語"
        frame = encode_frame(record)
        length = int(frame.split(b"\n", 1)[0])
        assert length == len(record.encode("utf-8")) > len(record)
        assert decode_frames(frame)[0] == [record]

    def test_concatenated_frames(self):
        stream = encode_frame("a k=1") + encode_frame("b") + encode_frame("c k=2")
        records, rest = decode_frames(stream)
        assert records == ["a k=1", "b", "c k=2"] and rest == b""

    def test_partial_frame_buffered(self):
        frame = encode_frame("answer text=hello")
        for cut in range(len(frame)):
            records, rest = decode_frames(frame[:cut])
            assert records == []
            assert rest == frame[:cut]
            # feeding the remainder completes the record
            records, rest = decode_frames(rest + frame[cut:])
            assert records == ["answer text=hello"] and rest == b""

    def test_bad_length_prefix(self):
        with pytest.raises(ProtocolError, match="length prefix"):
            decode_frames(b"xyz\npayload")

    @given(st.lists(st.text(min_size=1, max_size=30).filter(lambda s: s.strip()), max_size=6))
    def test_any_split_points(self, payloads):
        stream = b"".join(encode_frame(p) for p in payloads)
        mid = len(stream) // 3
        records, rest = decode_frames(stream[:mid])
        more, rest = decode_frames(rest + stream[mid:])
        assert records + more == payloads and rest == b""
