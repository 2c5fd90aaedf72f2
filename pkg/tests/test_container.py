import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import rankcodec as rc
from rankcodec.container import MAGIC, bits_per_pixel, demux, mux
from rankcodec.entropy_coding import Backend
from rankcodec.errors import (
    InvalidHeader,
    NotAContainer,
    Truncated,
    UnsupportedVersion,
)

ENUMERATED = (NotAContainer, Truncated, UnsupportedVersion, InvalidHeader)


def make_container(text=b"0123456789", bits=None, image=b"", **overrides):
    fields = dict(
        backend=Backend.DEFLATE,
        predictor_id="uniform",
        vocab_identifier="bytes-v1",
        vocab_size=256,
        token_count=42,
        text=rc.Bitstream(text, 8 * len(text) if bits is None else bits, Backend.DEFLATE),
        image=image,
    )
    fields.update(overrides)
    return mux(**fields)


class TestMux:
    def test_size_arithmetic(self):
        cf = make_container()
        blob = cf.to_bytes()
        header_size = len(make_container(text=b"", bits=0).to_bytes())
        assert len(blob) == header_size + 10

    def test_zero_token_container(self):
        cf = make_container(text=b"", bits=0, token_count=0)
        back = demux(cf.to_bytes())
        assert back.header.token_count == 0
        assert back.text_payload.data == b""

    def test_backend_mismatch_rejected(self):
        with pytest.raises(InvalidHeader):
            make_container(backend=Backend.ARITHMETIC)

    def test_lone_width_rejected(self):
        with pytest.raises(InvalidHeader):
            make_container(width=100)

    def test_vocab_size_floor(self):
        with pytest.raises(InvalidHeader):
            make_container(vocab_size=1)


class TestDemux:
    def test_round_trip_equality(self):
        cf = make_container(image=b"\x89PNG fake payload", width=640, height=480)
        assert demux(cf.to_bytes()) == cf

    def test_bad_magic(self):
        blob = bytearray(make_container().to_bytes())
        blob[0] ^= 0xFF
        with pytest.raises(NotAContainer):
            demux(bytes(blob))

    def test_declared_payload_larger_than_file(self):
        blob = make_container().to_bytes()
        with pytest.raises(Truncated):
            demux(blob[:-3])

    def test_trailing_garbage(self):
        blob = make_container().to_bytes()
        with pytest.raises(InvalidHeader):
            demux(blob + b"x")

    def test_unknown_version(self):
        blob = bytearray(make_container().to_bytes())
        blob[4] = 99
        with pytest.raises(UnsupportedVersion):
            demux(bytes(blob))

    def test_unknown_backend(self):
        blob = bytearray(make_container().to_bytes())
        blob[8] = 200
        with pytest.raises(InvalidHeader):
            demux(bytes(blob))

    def test_magic_prefix_counts_as_truncated(self):
        with pytest.raises(Truncated):
            demux(MAGIC[:2])

    @given(
        text=st.binary(max_size=64),
        image=st.binary(max_size=64),
        token_count=st.integers(0, 2**32),
        predictor_id=st.text(min_size=1, max_size=20),
        vocab_id=st.text(min_size=1, max_size=20),
        vocab_size=st.integers(2, 2**31),
        dims=st.one_of(st.just((0, 0)), st.tuples(st.integers(1, 4096), st.integers(1, 4096))),
    )
    def test_property_round_trip(self, text, image, token_count, predictor_id, vocab_id, vocab_size, dims):
        cf = make_container(
            text=text,
            image=image,
            token_count=token_count,
            predictor_id=predictor_id,
            vocab_identifier=vocab_id,
            vocab_size=vocab_size,
            width=dims[0],
            height=dims[1],
        )
        assert demux(cf.to_bytes()) == cf


class TestFuzz:
    def test_random_bytes_never_crash(self):
        rng = random.Random(1234)
        outcomes = {}
        for _ in range(20000):
            n = rng.randrange(0, 120)
            blob = rng.randbytes(n)
            if rng.random() < 0.3:
                blob = MAGIC + blob  # force the parser past the magic check
            try:
                demux(blob)
                outcomes["ok"] = outcomes.get("ok", 0) + 1
            except ENUMERATED as exc:
                key = type(exc).__name__
                outcomes[key] = outcomes.get(key, 0) + 1
        assert "ok" not in outcomes or outcomes["ok"] < 5
        assert set(outcomes) <= {e.__name__ for e in ENUMERATED} | {"ok"}

    def test_mutated_valid_container(self):
        blob = bytearray(make_container(image=b"img", width=4, height=4).to_bytes())
        rng = random.Random(99)
        for _ in range(3000):
            mutated = bytearray(blob)
            for _ in range(rng.randrange(1, 4)):
                mutated[rng.randrange(len(mutated))] = rng.randrange(256)
            try:
                demux(bytes(mutated))
            except ENUMERATED:
                pass


class TestBpp:
    def test_bits_per_pixel(self):
        cf = make_container(image=b"i" * 100, width=10, height=10)
        assert bits_per_pixel(cf) == 8.0 * len(cf.to_bytes()) / 100

    def test_missing_dimensions(self):
        with pytest.raises(InvalidHeader):
            bits_per_pixel(make_container())
