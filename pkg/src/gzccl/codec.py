"""Error-bounded lossy codec with a frozen little-endian byte format.

Blob layout
-----------

Header, 24 bytes: ``"GZC1"`` magic, 4 reserved zero bytes, element count as
u64, absolute error bound as f64.  The payload is a sequence of encoded
blocks of 32 values each (the final block may be shorter).

Per block: one width byte ``w``, then the first value stored verbatim as
binary32, then the remaining values as zigzag-encoded quantization steps
packed at ``w`` bits each (LSB-first).  ``w = 0`` means every step is zero
and no code bytes follow.  ``w = 255`` marks a raw block whose values are
all stored verbatim after the marker byte; it is emitted when a step
magnitude exceeds 2^30, when packing would not beat verbatim storage, or
when float32 rounding would break the error bound for the block.

Each value is predicted from the previous *reconstructed* value in its
block, so the per-element absolute error never exceeds the bound and never
propagates.  Quantization steps are ``round((x - prev) / (2 * eb))`` with
half-away-from-zero rounding; reconstruction adds ``step * 2 * eb`` in
float64 and rounds to float32, identically on both sides of the codec.

A fixed-rate baseline (uniform scalar quantization over ``[min, max]`` at
``b`` bits per value: u64 count, u8 bits, min and max as binary32, then the
packed codes) is included for contrast; its output size is exact but its
reconstruction error depends on the data range, not on any preset bound.

All functions are pure; a :class:`Workspace` may be passed to reuse the
large scratch arrays between calls (one workspace per concurrent caller).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"GZC1"
BLOCK = 32
HEADER = struct.Struct("<4s4xQd")
HEADER_BYTES = HEADER.size  # 24
RAW_WIDTH = 255
MAX_STEP = 1 << 30

FR_HEADER = struct.Struct("<QBff")
FR_HEADER_BYTES = FR_HEADER.size  # 17


class DecodeError(ValueError):
    """Raised for malformed, truncated, or inconsistent compressed bytes."""


class Workspace:
    """Reusable scratch buffers keyed by role.

    Repeated compress/decompress calls through one workspace reuse the big
    intermediate arrays instead of reallocating them.  Not thread-safe:
    keep one workspace per concurrent caller.
    """

    def __init__(self):
        self._store: dict[str, np.ndarray] = {}

    def _flat(self, key: str, count: int, dtype) -> np.ndarray:
        arr = self._store.get(key)
        if arr is None or arr.size < count or arr.dtype != dtype:
            arr = np.empty(max(count + (count >> 2), 64), dtype=dtype)
            self._store[key] = arr
        return arr[:count]

    def get(self, key: str, shape, dtype) -> np.ndarray:
        n = int(np.prod(shape)) if not np.isscalar(shape) else int(shape)
        return self._flat(key, n, np.dtype(dtype)).reshape(shape)


def _ingest(values) -> np.ndarray:
    x = np.ascontiguousarray(values, dtype="<f4")
    if x.ndim != 1:
        raise ValueError("expected a flat 1-D sequence of binary32 values")
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        raise ValueError(f"non-finite value at offset {int(bad[0])}")
    return x


def _check_eb(eb) -> float:
    eb = float(eb)
    if not (math.isfinite(eb) and eb > 0.0):
        raise ValueError(f"error bound must be positive and finite, got {eb!r}")
    return eb


def _pack_codes(codes_u32: np.ndarray, w: int, ws: Workspace) -> np.ndarray:
    """Pack (m, k) codes at w bits each, LSB-first -> (m, ceil(k*w/8)) bytes."""
    m, k = codes_u32.shape
    bits = ws.get("pk.bits", (m, k, w), np.uint8)
    tmp = ws.get("pk.tmp", (m, k), np.uint32)
    for b in range(w):
        np.right_shift(codes_u32, b, out=tmp)
        np.bitwise_and(tmp, 1, out=tmp)
        bits[:, :, b] = tmp
    return np.packbits(bits.reshape(m, k * w), axis=1, bitorder="little")


def _unpack_codes(raw: np.ndarray, k: int, w: int, ws: Workspace) -> np.ndarray:
    """Inverse of _pack_codes: (m, nbytes) -> (m, k) uint64 codes.

    Reads a 5-byte window per code (enough for any w <= 32 at any bit
    offset) and shifts/masks it in place.
    """
    m, nbytes = raw.shape
    first_bit = np.arange(k, dtype=np.int64) * w
    base = first_bit >> 3
    off = (first_bit & 7).astype(np.uint64)
    acc = ws.get("up.acc", (m, k), np.uint64)
    acc[:] = 0
    byte64 = ws.get("up.byte", (m, k), np.uint64)
    for t in range(5):
        idx = np.minimum(base + t, nbytes - 1)
        np.copyto(byte64, raw[:, idx])
        np.left_shift(byte64, np.uint64(8 * t), out=byte64)
        np.bitwise_or(acc, byte64, out=acc)
    np.right_shift(acc, off[None, :], out=acc)
    np.bitwise_and(acc, np.uint64((1 << w) - 1), out=acc)
    return acc


def _zigzag_from_steps(codes_i32: np.ndarray, ws: Workspace) -> np.ndarray:
    """Signed steps -> zigzag codes, uint32 (m, k)."""
    u = ws.get("zz.u", codes_i32.shape, np.uint32)
    mask = ws.get("zz.m", codes_i32.shape, np.int32)
    np.copyto(u.view(np.int32), codes_i32)
    np.left_shift(u, 1, out=u)
    np.right_shift(codes_i32, 31, out=mask)
    np.bitwise_xor(u, mask.view(np.uint32), out=u)
    return u


def _steps_from_zigzag(z_u64: np.ndarray) -> np.ndarray:
    """Zigzag codes (uint64) -> signed steps (int64)."""
    half = (z_u64 >> np.uint64(1)).astype(np.int64)
    sign = (z_u64 & np.uint64(1)).astype(np.int64)
    return half ^ -sign


def compress(data, eb, workspace: Workspace | None = None) -> bytes:
    """Compress binary32 values under an absolute error bound.

    Deterministic: identical (values, eb) inputs produce byte-identical
    blobs.  Rejects non-finite input and non-positive bounds.
    """
    x = _ingest(data)
    ebf = _check_eb(eb)
    n = x.size
    head = HEADER.pack(MAGIC, n, ebf)
    if n == 0:
        return head

    ws = workspace if workspace is not None else Workspace()
    nb = -(-n // BLOCK)
    last_count = n - (nb - 1) * BLOCK

    xm = ws.get("c.x", (nb, BLOCK), np.float32)
    flat = xm.reshape(-1)
    flat[:n] = x
    if n < nb * BLOCK:
        flat[n:] = x[-1]  # pad steps quantize to ~0 and are never stored
    xt = ws.get("c.xt", (BLOCK, nb), np.float32)
    np.copyto(xt, xm.T)

    codes_t = ws.get("c.codes", (BLOCK - 1, nb), np.int32)
    overflow = ws.get("c.ovf", nb, bool)
    overflow[:] = False
    maxerr = ws.get("c.maxerr", nb, np.float64)
    maxerr[:] = 0.0
    prev = ws.get("c.prev", nb, np.float64)
    target = ws.get("c.targ", nb, np.float64)
    q = ws.get("c.q", nb, np.float64)
    scratch = ws.get("c.scr", nb, np.float64)
    ovf_j = ws.get("c.ovfj", nb, bool)
    prev32 = ws.get("c.prev32", nb, np.float32)
    last_ovf = False
    last_err = 0.0

    tw = 2.0 * ebf
    prev32[:] = xt[0]
    for j in range(1, BLOCK):
        np.copyto(prev, prev32)
        np.copyto(target, xt[j])
        np.subtract(target, prev, out=q)
        np.divide(q, tw, out=q)
        # round half away from zero: floor(|v| + 0.5) * sign(v)
        np.fabs(q, out=scratch)
        scratch += 0.5
        np.floor(scratch, out=scratch)
        np.sign(q, out=q)
        np.multiply(scratch, q, out=q)
        np.fabs(q, out=scratch)
        np.greater(scratch, MAX_STEP, out=ovf_j)
        np.clip(q, -MAX_STEP, MAX_STEP, out=q)
        np.copyto(codes_t[j - 1], q, casting="unsafe")  # exact: q is integral
        np.multiply(q, tw, out=scratch)
        np.add(prev, scratch, out=scratch)
        np.copyto(prev32, scratch)  # rounds to float32 exactly as the decoder
        np.copyto(scratch, prev32)
        np.subtract(scratch, target, out=scratch)
        np.fabs(scratch, out=scratch)
        # the final block stores only last_count values; track it separately
        if j < last_count:
            last_ovf = last_ovf or bool(ovf_j[-1])
            last_err = max(last_err, float(scratch[-1]))
        np.logical_or(overflow, ovf_j, out=overflow)
        np.maximum(maxerr, scratch, out=maxerr)
    if last_count < BLOCK:
        overflow[-1] = last_ovf
        maxerr[-1] = last_err

    zig_t = _zigzag_from_steps(codes_t, ws)
    zig = ws.get("c.zig", (nb, BLOCK - 1), np.uint32)
    np.copyto(zig, zig_t.T)
    zmax = zig.max(axis=1)
    if last_count < BLOCK:
        zmax[-1] = zig[-1, : last_count - 1].max() if last_count > 1 else 0
    widths = np.zeros(nb, dtype=np.int64)
    nz = zmax > 0
    widths[nz] = np.floor(np.log2(zmax[nz].astype(np.float64))).astype(np.int64) + 1

    ncodes = np.full(nb, BLOCK - 1, dtype=np.int64)
    counts = np.full(nb, BLOCK, dtype=np.int64)
    ncodes[-1] = last_count - 1
    counts[-1] = last_count

    packed_sizes = 1 + 4 + (ncodes * widths + 7) // 8
    raw_sizes = 1 + 4 * counts
    raw = overflow | (maxerr > ebf) | (packed_sizes > raw_sizes)
    sizes = np.where(raw, raw_sizes, packed_sizes)

    offsets = np.zeros(nb, dtype=np.int64)
    np.cumsum(sizes[:-1], out=offsets[1:])
    total = int(offsets[-1] + sizes[-1])
    out = ws.get("c.out", total, np.uint8)
    out[:] = 0
    out[offsets] = np.where(raw, RAW_WIDTH, widths).astype(np.uint8)

    packed_rows = np.flatnonzero(~raw)
    if packed_rows.size:
        firsts = xt[0][packed_rows].astype("<f4").view(np.uint8).reshape(-1, 4)
        out[offsets[packed_rows, None] + 1 + np.arange(4)] = firsts
        full_rows = packed_rows if last_count == BLOCK else packed_rows[packed_rows < nb - 1]
        for w in np.unique(widths[full_rows]):
            if w == 0:
                continue
            rows = full_rows[widths[full_rows] == w]
            body = _pack_codes(zig[rows], int(w), ws)
            out[offsets[rows, None] + 5 + np.arange(body.shape[1])] = body
        if last_count < BLOCK and not raw[nb - 1]:
            w = int(widths[nb - 1])
            if w and last_count > 1:
                body = _pack_codes(zig[nb - 1 : nb, : last_count - 1], w, ws)
                out[offsets[nb - 1] + 5 : offsets[nb - 1] + 5 + body.shape[1]] = body[0]

    for row in np.flatnonzero(raw):
        cnt = int(counts[row])
        vals = xm[row, :cnt].astype("<f4").view(np.uint8)
        out[offsets[row] + 1 : offsets[row] + 1 + 4 * cnt] = vals

    return head + out.tobytes()


def _parse_header(blob: bytes) -> tuple[int, float]:
    if len(blob) < HEADER_BYTES:
        raise DecodeError(f"blob too short for header ({len(blob)} bytes)")
    magic, n, eb = HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DecodeError(f"bad magic {magic!r}")
    if not (math.isfinite(eb) and eb > 0.0):
        raise DecodeError(f"invalid error bound in header: {eb!r}")
    return n, eb


def decompress(blob, workspace: Workspace | None = None) -> np.ndarray:
    """Decode a compressed blob back to float32 values.

    Raises :class:`DecodeError` on malformed headers, truncated payloads,
    or unknown width codes; never returns a partial result.
    """
    blob = bytes(blob)
    n, ebf = _parse_header(blob)
    payload = np.frombuffer(blob, dtype=np.uint8, offset=HEADER_BYTES)
    if n == 0:
        if payload.size:
            raise DecodeError("trailing bytes after empty payload")
        return np.empty(0, dtype=np.float32)

    nb = -(-n // BLOCK)
    last_count = n - (nb - 1) * BLOCK

    widths = np.empty(nb, dtype=np.int64)
    starts = np.empty(nb, dtype=np.int64)
    pos = 0
    psize = payload.size
    for i in range(nb):
        cnt = BLOCK if i < nb - 1 else last_count
        if pos >= psize:
            raise DecodeError(f"truncated payload at block {i}")
        w = int(payload[pos])
        if w == RAW_WIDTH:
            size = 1 + 4 * cnt
        elif w <= 32:
            size = 1 + 4 + ((cnt - 1) * w + 7) // 8
        else:
            raise DecodeError(f"unknown width code {w} at block {i}")
        starts[i] = pos
        widths[i] = w
        pos += size
        if pos > psize:
            raise DecodeError(f"truncated payload at block {i}")
    if pos != psize:
        raise DecodeError(f"{psize - pos} trailing bytes after last block")

    ws = workspace if workspace is not None else Workspace()
    codes_t = ws.get("d.codes", (BLOCK - 1, nb), np.int32)
    codes_t[:] = 0
    first32 = ws.get("d.first", nb, np.float32)
    first32[:] = 0.0

    packed = widths != RAW_WIDTH
    packed_rows = np.flatnonzero(packed)
    if packed_rows.size:
        firsts = payload[starts[packed_rows, None] + 1 + np.arange(4)]
        first32[packed_rows] = firsts.reshape(-1).view("<f4")
        full_rows = packed_rows if last_count == BLOCK else packed_rows[packed_rows < nb - 1]
        for w in np.unique(widths[full_rows]):
            if w == 0:
                continue
            rows = full_rows[widths[full_rows] == w]
            span = ((BLOCK - 1) * int(w) + 7) // 8
            body = payload[starts[rows, None] + 5 + np.arange(span)]
            codes_t[:, rows] = _steps_from_zigzag(_unpack_codes(body, BLOCK - 1, int(w), ws)).T
        if last_count < BLOCK and packed[nb - 1]:
            w = int(widths[nb - 1])
            k = last_count - 1
            if w and k > 0:
                span = (k * w + 7) // 8
                body = payload[starts[nb - 1] + 5 : starts[nb - 1] + 5 + span].reshape(1, -1)
                codes_t[:k, nb - 1] = _steps_from_zigzag(_unpack_codes(body, k, w, ws))[0]

    rec_t = ws.get("d.rec", (BLOCK, nb), np.float32)
    rec_t[0] = first32
    tw = 2.0 * ebf
    prev = ws.get("d.prev", nb, np.float64)
    step = ws.get("d.step", nb, np.float64)
    for j in range(1, BLOCK):
        np.copyto(prev, rec_t[j - 1])
        np.multiply(codes_t[j - 1], tw, out=step)
        np.add(prev, step, out=prev)
        np.copyto(rec_t[j], prev)  # rounds to float32

    out = ws.get("d.out", (nb, BLOCK), np.float32)
    np.copyto(out, rec_t.T)
    for row in np.flatnonzero(~packed):
        cnt = BLOCK if row < nb - 1 else last_count
        vals = payload[starts[row] + 1 : starts[row] + 1 + 4 * cnt].view("<f4")
        out[row, :cnt] = vals

    return out.reshape(-1)[:n].copy()


@dataclass(frozen=True)
class BlockTable:
    """Per-block compressed sizes and starting offsets into a packed payload."""

    sizes: tuple[int, ...]
    offsets: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.offsets:
            object.__setattr__(self, "offsets", self._offsets_from(self.sizes))
        if len(self.offsets) != len(self.sizes):
            raise ValueError("sizes and offsets length mismatch")
        if self.sizes:
            if self.offsets[0] != 0:
                raise ValueError("first offset must be 0")
            for i in range(len(self.sizes) - 1):
                if self.offsets[i + 1] != self.offsets[i] + self.sizes[i]:
                    raise ValueError(f"offset chain broken at block {i}")

    @staticmethod
    def _offsets_from(sizes) -> tuple[int, ...]:
        offs, acc = [], 0
        for s in sizes:
            offs.append(acc)
            acc += s
        return tuple(offs)

    @property
    def count(self) -> int:
        return len(self.sizes)

    @property
    def total_bytes(self) -> int:
        return sum(self.sizes)


def compress_blocks(data, counts, eb, workspace: Workspace | None = None) -> tuple[bytes, BlockTable]:
    """Independently compress consecutive blocks of ``counts[i]`` values each.

    Returns the packed payload (blocks concatenated in order) and its
    :class:`BlockTable`.  Every block is a self-contained blob, so each one
    decodes on its own via :func:`decompress_block`.
    """
    x = _ingest(data)
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise ValueError("block counts must be non-negative")
    if sum(counts) != x.size:
        raise ValueError(f"block counts sum to {sum(counts)}, buffer has {x.size} values")
    ws = workspace if workspace is not None else Workspace()
    blobs = []
    pos = 0
    for c in counts:
        blobs.append(compress(x[pos : pos + c], eb, ws))
        pos += c
    return b"".join(blobs), BlockTable(sizes=tuple(len(b) for b in blobs))


def decompress_block(payload, table: BlockTable, index: int, workspace: Workspace | None = None) -> np.ndarray:
    """Decode one block of a packed payload, touching only that block's bytes."""
    if not 0 <= index < table.count:
        raise IndexError(f"block index {index} out of range [0, {table.count})")
    off = table.offsets[index]
    end = off + table.sizes[index]
    payload = bytes(payload)
    if end > len(payload):
        raise DecodeError(f"payload shorter than block {index} extent")
    return decompress(payload[off:end], workspace)


def fixed_rate_compress(data, bits_per_value: int) -> bytes:
    """Fixed-rate baseline: uniform scalar quantization over [min, max].

    Output size is exactly ``17 + ceil(n * b / 8)`` bytes.  The error is
    data-dependent (up to ``(max - min) / (2 * (2^b - 1))``), not bounded
    by any preset tolerance.
    """
    x = _ingest(data)
    b = int(bits_per_value)
    if not 1 <= b <= 16:
        raise ValueError(f"bits_per_value must be in [1, 16], got {b}")
    n = x.size
    lo = float(x.min()) if n else 0.0
    hi = float(x.max()) if n else 0.0
    head = FR_HEADER.pack(n, b, lo, hi)
    if n == 0:
        return head
    levels = (1 << b) - 1
    if hi > lo:
        v = (x.astype(np.float64) - lo) / (hi - lo) * levels
        q = np.floor(np.abs(v) + 0.5) * np.sign(v)
        q = np.clip(q, 0, levels).astype(np.uint32)
    else:
        q = np.zeros(n, dtype=np.uint32)
    body = _pack_codes(q.reshape(1, -1), b, Workspace())[0]
    return head + body.tobytes()


def fixed_rate_decompress(blob) -> np.ndarray:
    blob = bytes(blob)
    if len(blob) < FR_HEADER_BYTES:
        raise DecodeError(f"blob too short for fixed-rate header ({len(blob)} bytes)")
    n, b, lo, hi = FR_HEADER.unpack_from(blob)
    if not 1 <= b <= 16:
        raise DecodeError(f"invalid bits_per_value {b} in header")
    expect = (n * b + 7) // 8
    payload = np.frombuffer(blob, dtype=np.uint8, offset=FR_HEADER_BYTES)
    if payload.size != expect:
        raise DecodeError(f"payload is {payload.size} bytes, expected {expect}")
    if n == 0:
        return np.empty(0, dtype=np.float32)
    q = _unpack_codes(payload.reshape(1, -1), n, b, Workspace())[0]
    levels = (1 << b) - 1
    if hi > lo:
        vals = lo + q.astype(np.float64) * ((hi - lo) / levels)
    else:
        vals = np.full(n, lo, dtype=np.float64)
    return vals.astype(np.float32)


def worst_case_blob_bytes(n: int) -> int:
    """Upper bound on compressed size: header plus all-raw blocks."""
    return HEADER_BYTES + -(-n // BLOCK) * (1 + 4 + 4 * BLOCK)
