"""Canonical length-prefixed binary encoding for ledger payloads.

Operation arguments, deploy payloads and snapshot records all pass through
this codec so that byte lengths (and therefore costs) are deterministic and
identical value trees always serialize to identical bytes.

Wire format, one tag byte per value:

    0x00  none
    0x01  false          0x02  true
    0x03  int64          8 bytes, big-endian two's complement
    0x04  uint           u32 length + minimal big-endian magnitude
    0x05  bytes          u32 length + raw
    0x06  str            u32 length + utf-8
    0x07  list           u32 count + encoded items
    0x08  dict           u32 count + (key, value) pairs, sorted by encoded key

Integers inside the signed 64-bit range use tag 0x03; non-negative integers
beyond it (token bitsets are up to 256 bits wide) use tag 0x04. Each value
has exactly one valid encoding.
"""

from __future__ import annotations

import struct

INT64_MIN = -(1 << 63)
INT64_MAX = (1 << 63) - 1


class CodecError(ValueError):
    pass


def encode(value) -> bytes:
    out = bytearray()
    _encode_into(out, value)
    return bytes(out)


def _encode_into(out: bytearray, value) -> None:
    if value is None:
        out.append(0x00)
    elif value is True:
        out.append(0x02)
    elif value is False:
        out.append(0x01)
    elif isinstance(value, int):
        if INT64_MIN <= value <= INT64_MAX:
            out.append(0x03)
            out += struct.pack(">q", value)
        elif value > INT64_MAX:
            mag = value.to_bytes((value.bit_length() + 7) // 8, "big")
            out.append(0x04)
            out += struct.pack(">I", len(mag))
            out += mag
        else:
            raise CodecError("negative value out of int64 range")
    elif isinstance(value, bytes):
        out.append(0x05)
        out += struct.pack(">I", len(value))
        out += value
    elif isinstance(value, str):
        raw = value.encode("utf-8")
        out.append(0x06)
        out += struct.pack(">I", len(raw))
        out += raw
    elif isinstance(value, (list, tuple)):
        out.append(0x07)
        out += struct.pack(">I", len(value))
        for item in value:
            _encode_into(out, item)
    elif isinstance(value, dict):
        pairs = sorted((encode(k), v) for k, v in value.items())
        out.append(0x08)
        out += struct.pack(">I", len(pairs))
        for key_bytes, val in pairs:
            out += key_bytes
            _encode_into(out, val)
    else:
        raise CodecError(f"unencodable type: {type(value).__name__}")


def decode(data: bytes):
    """Decode a single value; the whole buffer must be consumed."""
    value, offset = _decode_from(data, 0)
    if offset != len(data):
        raise CodecError("trailing bytes after value")
    return value


def _decode_from(data: bytes, off: int):
    if off >= len(data):
        raise CodecError("truncated value")
    tag = data[off]
    off += 1
    if tag == 0x00:
        return None, off
    if tag == 0x01:
        return False, off
    if tag == 0x02:
        return True, off
    if tag == 0x03:
        _need(data, off, 8)
        return struct.unpack_from(">q", data, off)[0], off + 8
    if tag == 0x04:
        n, off = _read_len(data, off)
        _need(data, off, n)
        mag = data[off:off + n]
        if n == 0 or (n > 0 and mag[0] == 0):
            raise CodecError("non-minimal uint magnitude")
        value = int.from_bytes(mag, "big")
        if value <= INT64_MAX:
            raise CodecError("uint value belongs in int64 encoding")
        return value, off + n
    if tag == 0x05:
        n, off = _read_len(data, off)
        _need(data, off, n)
        return data[off:off + n], off + n
    if tag == 0x06:
        n, off = _read_len(data, off)
        _need(data, off, n)
        return data[off:off + n].decode("utf-8"), off + n
    if tag == 0x07:
        n, off = _read_len(data, off)
        items = []
        for _ in range(n):
            item, off = _decode_from(data, off)
            items.append(item)
        return items, off
    if tag == 0x08:
        n, off = _read_len(data, off)
        result = {}
        prev_key = None
        for _ in range(n):
            key_start = off
            key, off = _decode_from(data, off)
            key_bytes = data[key_start:off]
            if prev_key is not None and key_bytes <= prev_key:
                raise CodecError("dict keys out of canonical order")
            prev_key = key_bytes
            val, off = _decode_from(data, off)
            result[key] = val
        return result, off
    raise CodecError(f"unknown tag 0x{tag:02x}")


def _read_len(data: bytes, off: int) -> tuple[int, int]:
    _need(data, off, 4)
    return struct.unpack_from(">I", data, off)[0], off + 4


def _need(data: bytes, off: int, n: int) -> None:
    if off + n > len(data):
        raise CodecError("truncated value")
