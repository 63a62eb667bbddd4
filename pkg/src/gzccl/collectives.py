"""Collective algorithms over the simulated network.

Compressed variants keep compression out of the forwarding path wherever
the schedule allows it: ring allgather compresses each chunk once at its
owner and forwards the bytes untouched; the binomial scatter compresses
all blocks at the root (one multi-stream batch) and routes contiguous
byte ranges down the tree.  The compress-per-hop baseline re-encodes at
every hop and accumulates error linearly with the hop count.

Every algorithm runs in two passes per step (all sends posted, then all
receives completed), which makes the round-robin schedule deadlock-free
and bit-for-bit reproducible.  The same step arithmetic is mirrored by
``predicted_makespan`` so large problems can be costed without data.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import codec as _codec
from .costmodel import DEFAULT_ASSUMED_CR, CostParams
from .simnet import Network, Rank

REDUCE_OPS = ("sum", "max")

_SC_HDR = struct.Struct("<QQQ")  # block count, first block, one-past-last block


def _apply_op(op: str, local: np.ndarray, received: np.ndarray) -> np.ndarray:
    if local.shape != received.shape:
        raise ValueError(f"reduce shape mismatch: {local.shape} vs {received.shape}")
    if op == "sum":
        return local + received
    if op == "max":
        return np.maximum(local, received)
    raise ValueError(f"unknown reduce op {op!r}, expected one of {REDUCE_OPS}")


def chunk_spans(n: int, ranks: int) -> list[tuple[int, int]]:
    """Partition [0, n) into ``ranks`` chunks of ceil(n/ranks), last ones shorter."""
    step = -(-n // ranks) if n else 0
    return [(min(c * step, n), min((c + 1) * step, n)) for c in range(ranks)]


@dataclass(frozen=True)
class RecursiveDoublingPlan:
    """Remainder handling for a non-power-of-two rank count.

    ``pof2`` is the largest power of two <= size and ``r = size - pof2``.
    Even ranks below ``2r`` donate their buffer and sit out the exchange
    stage; odd ranks below ``2r`` absorb a donor and continue; everyone
    else participates directly.  Remapped ids cover [0, pof2) exactly.
    """

    size: int

    @property
    def pof2(self) -> int:
        return 1 << (self.size.bit_length() - 1)

    @property
    def r(self) -> int:
        return self.size - self.pof2

    @property
    def steps(self) -> int:
        return self.pof2.bit_length() - 1

    def role(self, rank: int) -> str:
        if rank < 2 * self.r:
            return "donor" if rank % 2 == 0 else "absorber"
        return "direct"

    def remapped(self, rank: int) -> int:
        role = self.role(rank)
        if role == "donor":
            raise ValueError(f"rank {rank} is a donor and has no remapped id")
        return rank // 2 if role == "absorber" else rank - self.r

    def actual(self, remapped_id: int) -> int:
        if not 0 <= remapped_id < self.pof2:
            raise ValueError(f"remapped id {remapped_id} out of range [0, {self.pof2})")
        return 2 * remapped_id + 1 if remapped_id < self.r else remapped_id + self.r


# --------------------------------------------------------------------------
# transports: how buffers become bytes (and what the kernels cost)
# --------------------------------------------------------------------------


class RawTransport:
    """Verbatim float32 payloads: no kernels, no counters, no loss."""

    name = "none"

    def __init__(self, params: CostParams):
        self.params = params
        self.raw_bytes_in = 0
        self.blob_bytes_out = 0

    def encode(self, rank: Rank, arr: np.ndarray) -> tuple[bytes, float]:
        return np.ascontiguousarray(arr, dtype="<f4").tobytes(), 0.0

    def decode(self, rank: Rank, blob: bytes) -> tuple[np.ndarray, float]:
        return np.frombuffer(blob, dtype="<f4").copy(), 0.0

    def encode_blocks(self, rank: Rank, blocks) -> tuple[list[bytes], float]:
        return [np.ascontiguousarray(b, dtype="<f4").tobytes() for b in blocks], 0.0


class EbCodecTransport:
    """Error-bounded codec: every encode guarantees |x_hat - x| <= eb."""

    name = "ebz"

    def __init__(self, params: CostParams, eb: float):
        self.params = params
        self.eb = float(eb)
        self.raw_bytes_in = 0
        self.blob_bytes_out = 0

    def _account(self, rank: Rank, raw: int, out: int) -> None:
        rank.counters.n_compress += 1
        self.raw_bytes_in += raw
        self.blob_bytes_out += out

    def encode(self, rank: Rank, arr: np.ndarray) -> tuple[bytes, float]:
        blob = _codec.compress(arr, self.eb, rank.workspace)
        self._account(rank, 4 * arr.size, len(blob))
        return blob, self.params.kernel_time(4 * arr.size, "compress")

    def decode(self, rank: Rank, blob: bytes) -> tuple[np.ndarray, float]:
        arr = _codec.decompress(blob, rank.workspace)
        rank.counters.n_decompress += 1
        return arr, self.params.kernel_time(4 * arr.size, "decompress")

    def encode_blocks(self, rank: Rank, blocks) -> tuple[list[bytes], float]:
        blobs = []
        for b in blocks:
            blob = _codec.compress(b, self.eb, rank.workspace)
            self._account(rank, 4 * b.size, len(blob))
            blobs.append(blob)
        secs = self.params.multi_launch_time([4 * b.size for b in blocks], "compress")
        return blobs, secs


class FixedRateTransport:
    """Fixed-rate baseline: exact output size, data-dependent error."""

    name = "fixed-rate"

    def __init__(self, params: CostParams, bits: int):
        self.params = params
        self.bits = int(bits)
        self.raw_bytes_in = 0
        self.blob_bytes_out = 0

    def encode(self, rank: Rank, arr: np.ndarray) -> tuple[bytes, float]:
        blob = _codec.fixed_rate_compress(arr, self.bits)
        rank.counters.n_compress += 1
        self.raw_bytes_in += 4 * arr.size
        self.blob_bytes_out += len(blob)
        return blob, self.params.kernel_time(4 * arr.size, "compress")

    def decode(self, rank: Rank, blob: bytes) -> tuple[np.ndarray, float]:
        arr = _codec.fixed_rate_decompress(blob)
        rank.counters.n_decompress += 1
        return arr, self.params.kernel_time(4 * arr.size, "decompress")

    def encode_blocks(self, rank: Rank, blocks) -> tuple[list[bytes], float]:
        blobs = []
        for b in blocks:
            blob = _codec.fixed_rate_compress(b, self.bits)
            rank.counters.n_compress += 1
            self.raw_bytes_in += 4 * b.size
            self.blob_bytes_out += len(blob)
            blobs.append(blob)
        secs = self.params.multi_launch_time([4 * b.size for b in blocks], "compress")
        return blobs, secs


def make_transport(name: str, params: CostParams, eb: float | None = None, bits: int = 8):
    if name == "none":
        return RawTransport(params)
    if name == "ebz":
        if eb is None:
            raise ValueError("the error-bounded codec needs an error bound (eb)")
        return EbCodecTransport(params, eb)
    if name == "fixed-rate":
        return FixedRateTransport(params, bits)
    raise ValueError(f"unknown codec {name!r}, expected 'ebz', 'fixed-rate', or 'none'")


# --------------------------------------------------------------------------
# ring algorithms
# --------------------------------------------------------------------------


def _ingest_list(buffers, size: int) -> list[np.ndarray]:
    if len(buffers) != size:
        raise ValueError(f"expected {size} per-rank buffers, got {len(buffers)}")
    return [_codec._ingest(b) for b in buffers]


def _require_equal(buffers: list[np.ndarray]) -> int:
    lengths = {b.size for b in buffers}
    if len(lengths) > 1:
        raise ValueError(f"per-rank buffers must have equal length, got {sorted(lengths)}")
    return buffers[0].size


def _ring_allgather(net: Network, owned: list[np.ndarray], transport, chunk_of) -> list[dict[int, np.ndarray]]:
    """Gather every rank's chunk to all ranks; owners compress once, hops forward bytes."""
    N = net.size
    p = net.params
    gathered = [{chunk_of(i): owned[i]} for i in range(N)]
    if N == 1:
        return gathered
    carry: list[bytes] = [b""] * N
    pending: list[tuple[float, int]] = [(0.0, 0)] * N
    for s in range(N - 1):
        for i in range(N):
            if s == 0:
                blob, t_c = transport.encode(net.ranks[i], owned[i])
            else:
                blob, t_c = carry[i], 0.0
            send_time = net.ranks[i].clock + (0.0 if p.overlap else t_c)
            net.post(i, (i + 1) % N, blob, send_time)
            carry[i] = blob
            pending[i] = (t_c, len(blob))
        for i in range(N):
            blob, arrival = net.take(i, (i - 1) % N)
            t_c, sent_len = pending[i]
            st = p.staging_time(sent_len)
            base = net.ranks[i].clock + (0.0 if p.overlap else t_c) + st
            wait = max(0.0, arrival - base)
            vals, t_d = transport.decode(net.ranks[i], blob)
            gathered[i][chunk_of((i - 1 - s) % N)] = vals
            net.advance(i, comm=wait, staging=st, compress=t_c, decompress=t_d)
            carry[i] = blob
    return gathered


def ring_allgather_c(net: Network, chunks, transport, reduce_op=None, counts=None) -> list[np.ndarray]:
    """Each rank contributes one chunk; everyone ends with the concatenation.

    Per rank: exactly 1 compression and N-1 decompressions.  Unequal chunk
    lengths are allowed (the lengths ride in the blob headers).
    """
    owned = _ingest_list(chunks, net.size)
    gathered = _ring_allgather(net, owned, transport, chunk_of=lambda i: i)
    return [np.concatenate([g[c] for c in range(net.size)]) if net.size > 1 else owned[i].copy() for i, g in enumerate(gathered)]


def ring_reduce_scatter_c(net: Network, buffers, transport, reduce_op="sum", counts=None) -> list[np.ndarray]:
    """Ring reduce-scatter: rank i ends owning fully reduced chunk (i+1) mod N.

    Per rank: N-1 compressions and N-1 decompressions; per-element error
    for sum stays within (N-1) * eb because each hop re-quantizes once.
    """
    bufs = _ingest_list(buffers, net.size)
    n = _require_equal(bufs)
    N = net.size
    p = net.params
    spans = chunk_spans(n, N)
    acc = [[b[lo:hi].copy() for lo, hi in spans] for b in bufs]
    if N == 1:
        return [bufs[0].copy()]
    pending: list[tuple[float, int]] = [(0.0, 0)] * N
    for s in range(N - 1):
        for i in range(N):
            c_out = (i - s) % N
            blob, t_c = transport.encode(net.ranks[i], acc[i][c_out])
            send_time = net.ranks[i].clock + (0.0 if p.overlap else t_c)
            net.post(i, (i + 1) % N, blob, send_time)
            pending[i] = (t_c, len(blob))
        for i in range(N):
            blob, arrival = net.take(i, (i - 1) % N)
            t_c, sent_len = pending[i]
            st = p.staging_time(sent_len)
            base = net.ranks[i].clock + (0.0 if p.overlap else t_c) + st
            wait = max(0.0, arrival - base)
            vals, t_d = transport.decode(net.ranks[i], blob)
            c_in = (i - s - 1) % N
            acc[i][c_in] = _apply_op(reduce_op, acc[i][c_in], vals)
            t_r = p.kernel_time(4 * vals.size, "reduce")
            net.advance(i, comm=wait, staging=st, compress=t_c, decompress=t_d, reduce=t_r)
    return [acc[i][(i + 1) % N] for i in range(N)]


def ring_allreduce_c(net: Network, buffers, transport, reduce_op="sum", counts=None) -> list[np.ndarray]:
    """Reduce-scatter stage followed by an allgather stage over the same ring.

    Per rank: N compressions and 2(N-1) decompressions; error for sum is
    within N * eb (one extra quantization when the reduced chunk is
    gathered).
    """
    bufs = _ingest_list(buffers, net.size)
    n = _require_equal(bufs)
    N = net.size
    if N == 1:
        return [bufs[0].copy()]
    owned = ring_reduce_scatter_c(net, bufs, transport, reduce_op=reduce_op)
    gathered = _ring_allgather(net, owned, transport, chunk_of=lambda i: (i + 1) % N)
    return [np.concatenate([gathered[i][c] for c in range(N)]) for i in range(N)]


def cprp2p_allgather(net: Network, chunks, transport, reduce_op=None, counts=None) -> list[np.ndarray]:
    """Compress-per-hop baseline: every hop decompresses and re-compresses.

    Per rank: N-1 compressions and N-1 decompressions; a chunk that
    traveled h hops carries up to h * eb of error.
    """
    owned = _ingest_list(chunks, net.size)
    N = net.size
    p = net.params
    gathered = [{i: owned[i]} for i in range(N)]
    if N == 1:
        return [owned[0].copy()]
    current = [owned[i] for i in range(N)]
    pending: list[tuple[float, int]] = [(0.0, 0)] * N
    for s in range(N - 1):
        for i in range(N):
            blob, t_c = transport.encode(net.ranks[i], current[i])
            send_time = net.ranks[i].clock + (0.0 if p.overlap else t_c)
            net.post(i, (i + 1) % N, blob, send_time)
            pending[i] = (t_c, len(blob))
        for i in range(N):
            blob, arrival = net.take(i, (i - 1) % N)
            t_c, sent_len = pending[i]
            st = p.staging_time(sent_len)
            base = net.ranks[i].clock + (0.0 if p.overlap else t_c) + st
            wait = max(0.0, arrival - base)
            vals, t_d = transport.decode(net.ranks[i], blob)
            gathered[i][(i - 1 - s) % N] = vals
            current[i] = vals
            net.advance(i, comm=wait, staging=st, compress=t_c, decompress=t_d)
    return [np.concatenate([gathered[i][c] for c in range(N)]) for i in range(N)]


# --------------------------------------------------------------------------
# recursive-doubling allreduce
# --------------------------------------------------------------------------


def rd_allreduce_c(net: Network, buffers, transport, reduce_op="sum", counts=None) -> list[np.ndarray]:
    """Recursive-doubling allreduce exchanging whole buffers.

    Power-of-two rank counts run log2(N) exchange steps (log2 N compress
    and decompress per rank).  Otherwise donors fold into absorbers first
    and get the result back compressed at the end; error for sum stays
    within (N-1) * eb at powers of two and 2N * eb in general.
    """
    bufs = _ingest_list(buffers, net.size)
    _require_equal(bufs)
    N = net.size
    p = net.params
    if N == 1:
        return [bufs[0].copy()]
    plan = RecursiveDoublingPlan(N)
    data = [b.copy() for b in bufs]
    donors = [i for i in range(N) if plan.role(i) == "donor"]
    participants = [i for i in range(N) if plan.role(i) != "donor"]

    if plan.r:
        pend: dict[int, tuple[float, int]] = {}
        for i in donors:
            blob, t_c = transport.encode(net.ranks[i], data[i])
            send_time = net.ranks[i].clock + (0.0 if p.overlap else t_c)
            net.post(i, i + 1, blob, send_time)
            pend[i] = (t_c, len(blob))
        for i in donors:
            t_c, sent_len = pend[i]
            net.advance(i, staging=p.staging_time(sent_len), compress=t_c)
        for i in range(N):
            if plan.role(i) != "absorber":
                continue
            blob, arrival = net.take(i, i - 1)
            wait = max(0.0, arrival - net.ranks[i].clock)
            vals, t_d = transport.decode(net.ranks[i], blob)
            data[i] = _apply_op(reduce_op, data[i], vals)
            t_r = p.kernel_time(4 * vals.size, "reduce")
            net.advance(i, comm=wait, decompress=t_d, reduce=t_r)

    pending: dict[int, tuple[float, int, int]] = {}
    for t in range(plan.steps):
        for i in participants:
            partner = plan.actual(plan.remapped(i) ^ (1 << t))
            blob, t_c = transport.encode(net.ranks[i], data[i])
            send_time = net.ranks[i].clock + (0.0 if p.overlap else t_c)
            net.post(i, partner, blob, send_time)
            pending[i] = (t_c, len(blob), partner)
        for i in participants:
            t_c, sent_len, partner = pending[i]
            blob, arrival = net.take(i, partner)
            st = p.staging_time(sent_len)
            base = net.ranks[i].clock + (0.0 if p.overlap else t_c) + st
            wait = max(0.0, arrival - base)
            vals, t_d = transport.decode(net.ranks[i], blob)
            data[i] = _apply_op(reduce_op, data[i], vals)
            t_r = p.kernel_time(4 * vals.size, "reduce")
            net.advance(i, comm=wait, staging=st, compress=t_c, decompress=t_d, reduce=t_r)

    if plan.r:
        pend = {}
        for i in range(N):
            if plan.role(i) != "absorber":
                continue
            blob, t_c = transport.encode(net.ranks[i], data[i])
            send_time = net.ranks[i].clock + (0.0 if p.overlap else t_c)
            net.post(i, i - 1, blob, send_time)
            pend[i] = (t_c, len(blob))
        for i, (t_c, sent_len) in pend.items():
            net.advance(i, staging=p.staging_time(sent_len), compress=t_c)
        for i in donors:
            blob, arrival = net.take(i, i + 1)
            wait = max(0.0, arrival - net.ranks[i].clock)
            vals, t_d = transport.decode(net.ranks[i], blob)
            data[i] = vals
            net.advance(i, comm=wait, decompress=t_d)
    return data


# --------------------------------------------------------------------------
# binomial-tree scatter
# --------------------------------------------------------------------------


def _pack_scatter_msg(sizes, lo: int, hi: int, frag: bytes) -> bytes:
    head = _SC_HDR.pack(len(sizes), lo, hi)
    return head + np.asarray(sizes, dtype="<u8").tobytes() + frag


def _unpack_scatter_msg(msg: bytes) -> tuple[tuple[int, ...], int, int, bytes]:
    count, lo, hi = _SC_HDR.unpack_from(msg)
    off = _SC_HDR.size
    sizes = tuple(int(s) for s in np.frombuffer(msg, dtype="<u8", count=count, offset=off))
    return sizes, lo, hi, msg[off + 8 * count :]


def scatter_msg_overhead(ranks: int) -> int:
    """Bytes of table metadata carried by every scatter message."""
    return _SC_HDR.size + 8 * ranks


def _scatter_children(vr: int, size: int) -> tuple[int, list[tuple[int, int, int]]]:
    """Receive extent and (child, lo, hi) sends for one node of the binomial tree."""
    mask = 1
    while mask < size:
        if vr & mask:
            break
        mask <<= 1
    extent = mask  # for the root this is >= size
    sends = []
    mask >>= 1
    while mask:
        child = vr + mask
        if child < size:
            sends.append((child, child, min(child + mask, size)))
        mask >>= 1
    return extent, sends


def binomial_scatter_c(net: Network, root_data, transport, reduce_op=None, counts=None) -> list[np.ndarray]:
    """Root compresses all blocks once and the tree forwards byte ranges.

    Blocks are packed in virtual-rank order (root's own block first) so
    every tree message is one contiguous span; the size table rides in
    every message header.  The root keeps its slice verbatim, each other
    rank decompresses exactly one block.
    """
    data = _codec._ingest(root_data)
    N = net.size
    root = net.root
    p = net.params
    if counts is None:
        counts = [hi - lo for lo, hi in chunk_spans(data.size, N)]
    counts = [int(c) for c in counts]
    if len(counts) != N:
        raise ValueError(f"need {N} block counts, got {len(counts)}")
    if any(c < 0 for c in counts):
        raise ValueError("block counts must be non-negative")
    if sum(counts) != data.size:
        raise ValueError(f"block counts sum to {sum(counts)}, root buffer has {data.size} values")

    rank_lo = np.concatenate([[0], np.cumsum(counts)]).astype(int)
    slices = [data[rank_lo[i] : rank_lo[i + 1]] for i in range(N)]
    outputs: list[np.ndarray | None] = [None] * N
    outputs[root] = slices[root].copy()
    if N == 1:
        return [outputs[0]]

    order = [(root + j) % N for j in range(N)]  # virtual rank -> actual rank
    blobs, t_mc = transport.encode_blocks(net.ranks[root], [slices[r] for r in order])
    table = _codec.BlockTable(sizes=tuple(len(b) for b in blobs))
    payload = b"".join(blobs)

    _, root_sends = _scatter_children(0, N)
    staging_total = 0.0
    base = net.ranks[root].clock + (0.0 if p.overlap else t_mc)
    for child, lo, hi in root_sends:
        frag = payload[table.offsets[lo] : table.offsets[hi - 1] + table.sizes[hi - 1]]
        msg = _pack_scatter_msg(table.sizes, lo, hi, frag)
        net.post(root, order[child], msg, base + staging_total)
        staging_total += p.staging_time(len(msg))
    net.advance(root, staging=staging_total, compress=t_mc)

    for vr in range(1, N):
        me = order[vr]
        extent, sends = _scatter_children(vr, N)
        parent = order[vr - extent]
        msg, arrival = net.take(me, parent)
        sizes, lo, hi, frag = _unpack_scatter_msg(msg)
        wait = max(0.0, arrival - net.ranks[me].clock)
        offs = _codec.BlockTable(sizes=sizes).offsets
        staging_total = 0.0
        base = net.ranks[me].clock + wait
        for child, clo, chi in sends:
            sub = frag[offs[clo] - offs[lo] : offs[chi - 1] + sizes[chi - 1] - offs[lo]]
            cmsg = _pack_scatter_msg(sizes, clo, chi, sub)
            net.post(me, order[child], cmsg, base + staging_total)
            staging_total += p.staging_time(len(cmsg))
        own = frag[offs[vr] - offs[lo] : offs[vr] + sizes[vr] - offs[lo]]
        vals, t_d = transport.decode(net.ranks[me], own)
        if vals.size != counts[me]:
            raise ValueError(f"rank {me} decoded {vals.size} values, expected {counts[me]}")
        outputs[me] = vals
        net.advance(me, comm=wait, staging=staging_total, decompress=t_d)
    return outputs  # type: ignore[return-value]


# --------------------------------------------------------------------------
# registry
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AlgoInfo:
    id: str
    family: str  # allgather | reduce_scatter | allreduce | scatter
    fn: object
    lossless: bool = False

    def run(self, net: Network, inputs, transport, *, reduce_op="sum", counts=None):
        if self.lossless:
            transport = RawTransport(net.params)
        return self.fn(net, inputs, transport, reduce_op=reduce_op, counts=counts)


ALGORITHMS: dict[str, AlgoInfo] = {
    a.id: a
    for a in [
        AlgoInfo("ring-allgather", "allgather", ring_allgather_c),
        AlgoInfo("ring-reduce-scatter", "reduce_scatter", ring_reduce_scatter_c),
        AlgoInfo("ring-allreduce", "allreduce", ring_allreduce_c),
        AlgoInfo("rd-allreduce", "allreduce", rd_allreduce_c),
        AlgoInfo("binomial-scatter", "scatter", binomial_scatter_c),
        AlgoInfo("cprp2p-allgather", "allgather", cprp2p_allgather),
        AlgoInfo("lossless-allgather", "allgather", ring_allgather_c, lossless=True),
        AlgoInfo("lossless-reduce-scatter", "reduce_scatter", ring_reduce_scatter_c, lossless=True),
        AlgoInfo("lossless-allreduce", "allreduce", ring_allreduce_c, lossless=True),
        AlgoInfo("lossless-scatter", "scatter", binomial_scatter_c, lossless=True),
    ]
}


def get_algorithm(algorithm: str) -> AlgoInfo:
    try:
        return ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}; valid: {', '.join(sorted(ALGORITHMS))}") from None


# --------------------------------------------------------------------------
# analytic timelines (no data): mirrors of the step accounting above
# --------------------------------------------------------------------------


def _step(p: CostParams, comm: float, compute: float) -> float:
    return p.step_time(comm, compute)


def _ring_allgather_span(p: CostParams, chunk_bytes: float, ranks: int, msg: float, compressed: bool) -> float:
    if ranks < 2:
        return 0.0
    t_c = p.kernel_time(chunk_bytes, "compress") if compressed else 0.0
    t_d = p.kernel_time(chunk_bytes, "decompress") if compressed else 0.0
    st = p.staging_time(msg)
    mt = p.msg_time(msg)
    first = _step(p, st + mt, t_c + t_d)
    rest = _step(p, st + mt, t_d)
    return first + (ranks - 2) * rest


def _ring_reduce_scatter_span(p: CostParams, chunk_bytes: float, ranks: int, msg: float, compressed: bool) -> float:
    if ranks < 2:
        return 0.0
    t_c = p.kernel_time(chunk_bytes, "compress") if compressed else 0.0
    t_d = p.kernel_time(chunk_bytes, "decompress") if compressed else 0.0
    t_r = p.kernel_time(chunk_bytes, "reduce")
    st = p.staging_time(msg)
    mt = p.msg_time(msg)
    return (ranks - 1) * _step(p, st + mt, t_c + t_d + t_r)


def _rd_allreduce_span(p: CostParams, nbytes: float, ranks: int, msg: float, compressed: bool) -> float:
    if ranks < 2:
        return 0.0
    plan = RecursiveDoublingPlan(ranks)
    t_c = p.kernel_time(nbytes, "compress") if compressed else 0.0
    t_d = p.kernel_time(nbytes, "decompress") if compressed else 0.0
    t_r = p.kernel_time(nbytes, "reduce")
    st = p.staging_time(msg)
    mt = p.msg_time(msg)
    pre = 0.0 if p.overlap else t_c

    def step(comm, compute):
        return np.maximum(comm, compute) if p.overlap else comm + compute

    clocks = np.zeros(ranks)
    if plan.r:
        donors = np.arange(0, 2 * plan.r, 2)
        absorbers = donors + 1
        clocks[donors] += _step(p, st, t_c)
        wait = max(0.0, pre + st + mt)  # donors post at clock 0
        clocks[absorbers] += _step(p, wait, t_d + t_r)
    part = np.array([i for i in range(ranks) if plan.role(i) != "donor"])
    remap = np.array([plan.remapped(i) for i in part])
    inv = np.array([plan.actual(q) for q in range(plan.pof2)])
    for t in range(plan.steps):
        partner = inv[remap ^ (1 << t)]
        arrival = clocks[partner] + pre + st + mt
        wait = np.maximum(0.0, arrival - (clocks[part] + pre + st))
        clocks[part] = clocks[part] + step(wait + st, t_c + t_d + t_r)
    if plan.r:
        arrival = clocks[absorbers] + pre + st + mt
        clocks[absorbers] += _step(p, st, t_c)
        wait = np.maximum(0.0, arrival - clocks[donors])
        clocks[donors] = clocks[donors] + step(wait, t_d)
    return float(np.max(clocks))


def _scatter_span(p: CostParams, block_bytes: float, ranks: int, block_msg: float, compressed: bool) -> float:
    if ranks < 2:
        return 0.0
    t_mc = p.multi_launch_time([block_bytes] * ranks, "compress") if compressed else 0.0
    t_d = p.kernel_time(block_bytes, "decompress") if compressed else 0.0
    overhead = scatter_msg_overhead(ranks)
    arrivals = [0.0] * ranks
    clocks = [0.0] * ranks

    def msg_bytes(lo: int, hi: int) -> float:
        return overhead + (hi - lo) * block_msg

    _, root_sends = _scatter_children(0, ranks)
    base = 0.0 + (0.0 if p.overlap else t_mc)
    staging_total = 0.0
    for child, lo, hi in root_sends:
        mb = msg_bytes(lo, hi)
        arrivals[child] = base + staging_total + p.staging_time(mb) + p.msg_time(mb)
        staging_total += p.staging_time(mb)
    clocks[0] = _step(p, staging_total, t_mc)
    for vr in range(1, ranks):
        _, sends = _scatter_children(vr, ranks)
        wait = arrivals[vr]
        staging_total = 0.0
        for child, lo, hi in sends:
            mb = msg_bytes(lo, hi)
            arrivals[child] = wait + staging_total + p.staging_time(mb) + p.msg_time(mb)
            staging_total += p.staging_time(mb)
        clocks[vr] = _step(p, wait + staging_total, t_d)
    return max(clocks)


def _cprp2p_span(p: CostParams, chunk_bytes: float, ranks: int, msg: float, compressed: bool) -> float:
    if ranks < 2:
        return 0.0
    t_c = p.kernel_time(chunk_bytes, "compress") if compressed else 0.0
    t_d = p.kernel_time(chunk_bytes, "decompress") if compressed else 0.0
    st = p.staging_time(msg)
    mt = p.msg_time(msg)
    return (ranks - 1) * _step(p, st + mt, t_c + t_d)


def predicted_makespan(
    algorithm: str,
    data_bytes: float,
    ranks: int,
    params: CostParams | None = None,
    assumed_cr: float = DEFAULT_ASSUMED_CR,
) -> float:
    """Clock-only mirror of the simulated collectives for sizing studies.

    ``data_bytes`` is the per-rank buffer for the reduction collectives and
    the total moved size for allgather/scatter; message payloads are
    modeled as ``raw / assumed_cr`` (1 for the lossless twins).
    """
    p = params if params is not None else CostParams()
    if ranks < 1:
        raise ValueError("ranks must be >= 1")
    if data_bytes <= 0:
        raise ValueError("data_bytes must be positive")
    if assumed_cr <= 0:
        raise ValueError("assumed_cr must be positive")
    info = get_algorithm(algorithm)
    compressed = not info.lossless
    cr = assumed_cr if compressed else 1.0
    if algorithm in ("ring-allgather", "lossless-allgather", "cprp2p-allgather"):
        c = data_bytes / ranks
        fn = _cprp2p_span if algorithm == "cprp2p-allgather" else _ring_allgather_span
        return fn(p, c, ranks, c / cr, compressed)
    if algorithm in ("ring-reduce-scatter", "lossless-reduce-scatter"):
        c = data_bytes / ranks
        return _ring_reduce_scatter_span(p, c, ranks, c / cr, compressed)
    if algorithm in ("ring-allreduce", "lossless-allreduce"):
        c = data_bytes / ranks
        rs = _ring_reduce_scatter_span(p, c, ranks, c / cr, compressed)
        ag = _ring_allgather_span(p, c, ranks, c / cr, compressed)
        return rs + ag
    if algorithm == "rd-allreduce":
        return _rd_allreduce_span(p, data_bytes, ranks, data_bytes / cr, compressed)
    if algorithm in ("binomial-scatter", "lossless-scatter"):
        b = data_bytes / ranks
        return _scatter_span(p, b, ranks, b / cr, compressed)
    raise ValueError(f"no analytic timeline for {algorithm!r}")
