import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_message
from hapticheart.protocol import (
    CalibrationSet,
    ErrorMsg,
    FrameState,
    HandUpdate,
    Hello,
    HrUpdate,
    MalformedMessage,
    UnknownType,
    decode,
    encode,
)

finite = st.floats(allow_nan=False, allow_infinity=False)


class TestRoundTrip:
    def test_hr_update_single_line(self):
        msg = HrUpdate(t=5.0, bpm=72.0)
        line = encode(msg)
        assert line.endswith("\n")
        assert line.count("\n") == 1
        assert decode(line) == msg

    def test_each_type_round_trips(self):
        rng = random.Random(99)
        seen = set()
        for _ in range(200):
            msg = random_message(rng)
            seen.add(type(msg).__name__)
            assert decode(encode(msg)) == msg
        assert len(seen) == 8

    @given(finite, st.floats(min_value=0, max_value=250))
    @settings(max_examples=200, deadline=None)
    def test_hr_floats_survive_exactly(self, t, bpm):
        msg = HrUpdate(t=t, bpm=bpm)
        back = decode(encode(msg))
        assert back.t == t and back.bpm == bpm

    def test_fuzz_corpus(self):
        rng = random.Random(20240817)
        for _ in range(2000):
            msg = random_message(rng)
            assert decode(encode(msg)) == msg


class TestDecodeErrors:
    def test_truncated_line(self):
        line = encode(HrUpdate(t=1.0, bpm=60.0))
        with pytest.raises(MalformedMessage):
            decode(line[: len(line) // 2])

    def test_unknown_type(self):
        with pytest.raises(UnknownType):
            decode('{"type":"mystery"}\n')

    def test_missing_field(self):
        with pytest.raises(MalformedMessage):
            decode('{"type":"hr_update","t":1.0}\n')

    def test_wrong_field_type(self):
        with pytest.raises(MalformedMessage):
            decode('{"type":"hr_update","t":"one","bpm":60}\n')

    def test_nonfinite_rejected(self):
        with pytest.raises(MalformedMessage):
            decode('{"type":"hr_update","t":NaN,"bpm":60}\n')
        with pytest.raises(MalformedMessage):
            decode('{"type":"hr_update","t":Infinity,"bpm":60}\n')

    def test_non_object_rejected(self):
        with pytest.raises(MalformedMessage):
            decode("[1,2,3]\n")

    def test_bool_not_accepted_as_number(self):
        with pytest.raises(MalformedMessage):
            decode('{"type":"hr_update","t":true,"bpm":60}\n')


class TestForwardCompatibility:
    def test_unknown_fields_ignored(self):
        line = '{"type":"hr_update","t":1.0,"bpm":60.0,"future_field":[1,2,3]}\n'
        assert decode(line) == HrUpdate(t=1.0, bpm=60.0)

    def test_hand_update_defaults_frame(self):
        line = (
            '{"type":"hand_update","t":0.0,"hand_id":"left",'
            '"palm":[0,0,0.3],"normal":[0,0,1],"joints":[[0,0,0.3]]}\n'
        )
        msg = decode(line)
        assert isinstance(msg, HandUpdate)
        assert msg.frame == "device"

    def test_bad_frame_label_rejected(self):
        line = (
            '{"type":"hand_update","t":0.0,"hand_id":"left","frame":"moon",'
            '"palm":[0,0,0.3],"normal":[0,0,1],"joints":[[0,0,0.3]]}\n'
        )
        with pytest.raises(MalformedMessage):
            decode(line)


class TestSpecificShapes:
    def test_frame_state_with_null_bpm(self):
        line = (
            '{"type":"frame_state","seq":1,"t":0.016,"bpm":null,"flatline":true,'
            '"phase":0,"scale":1.0,"anchor":[0,0,0.3],"radii":[0.05,0.045,0.06],"hands":[]}\n'
        )
        msg = decode(line)
        assert isinstance(msg, FrameState)
        assert msg.bpm is None
        assert decode(encode(msg)) == msg

    def test_calibration_set_pair_arity(self):
        with pytest.raises(MalformedMessage):
            decode('{"type":"calibration_set","pairs":[[1,2,3]]}\n')
        msg = decode('{"type":"calibration_set","pairs":[[1,2,3,4,5,6]]}\n')
        assert isinstance(msg, CalibrationSet)

    def test_error_detail_optional(self):
        msg = decode('{"type":"error","code":"oops"}\n')
        assert msg == ErrorMsg(code="oops", detail="")

    def test_hello_proto_must_be_integer(self):
        with pytest.raises(MalformedMessage):
            decode('{"type":"hello","device_kind":"ui","proto":1.5}\n')
        assert decode('{"type":"hello","device_kind":"ui","proto":1}\n') == Hello("ui", 1)

    def test_encode_is_canonical_single_line(self):
        rng = random.Random(5)
        for _ in range(50):
            msg = random_message(rng)
            a, b = encode(msg), encode(msg)
            assert a == b
            assert "\n" not in a[:-1]
