import pytest
from hypothesis import given, strategies as st

from chaincase import codec

# value trees the ledger actually ships: json-ish plus bytes and wide ints
scalars = st.one_of(
    st.none(),
    st.booleans(),
    st.integers(min_value=-(1 << 63), max_value=(1 << 63) - 1),
    st.integers(min_value=1 << 63, max_value=(1 << 256) - 1),
    st.binary(max_size=64),
    st.text(max_size=64),
)
values = st.recursive(
    scalars,
    lambda inner: st.one_of(
        st.lists(inner, max_size=5),
        st.dictionaries(st.one_of(st.text(max_size=8),
                                  st.integers(min_value=0, max_value=300)),
                        inner, max_size=5),
    ),
    max_leaves=20,
)


@given(values)
def test_round_trip(value):
    assert codec.decode(codec.encode(value)) == value


@given(values)
def test_encoding_is_deterministic(value):
    assert codec.encode(value) == codec.encode(value)


def test_dict_key_order_is_canonical():
    a = codec.encode({"x": 1, "y": 2})
    b = codec.encode({"y": 2, "x": 1})
    assert a == b


def test_tuple_encodes_as_list():
    assert codec.decode(codec.encode((1, 2))) == [1, 2]


def test_bool_is_not_int():
    assert codec.decode(codec.encode(True)) is True
    assert codec.decode(codec.encode(1)) == 1
    assert codec.encode(True) != codec.encode(1)


def test_wide_int_round_trip():
    wide = (1 << 255) | 1
    assert codec.decode(codec.encode(wide)) == wide


def test_negative_out_of_range_rejected():
    with pytest.raises(codec.CodecError):
        codec.encode(-(1 << 64))


def test_unencodable_type_rejected():
    with pytest.raises(codec.CodecError):
        codec.encode(object())


def test_trailing_bytes_rejected():
    with pytest.raises(codec.CodecError):
        codec.decode(codec.encode(1) + b"\x00")


def test_truncated_input_rejected():
    raw = codec.encode("hello")
    with pytest.raises(codec.CodecError):
        codec.decode(raw[:-1])


@given(values, values)
def test_distinct_values_encode_distinctly(a, b):
    if a != b:
        assert codec.encode(a) != codec.encode(b)
