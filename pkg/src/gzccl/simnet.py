"""Deterministic in-process multi-rank harness.

Each rank carries a logical clock, operation counters, and per-phase time
accounting; every ordered rank pair has a FIFO byte channel.  Messages are
framed with an 8-byte little-endian length prefix.  Time never comes from
a wall clock: sends advance the sender by the staging cost only
(non-blocking), and a receive lifts the receiver's clock to the message's
arrival time (sender clock at send + staging + link time).  The default
scheduler executes ranks round-robin at message granularity, so every run
is reproducible bit for bit.
"""

from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass, field, fields

import numpy as np

from .codec import Workspace
from .costmodel import CostParams
from .metrics import AccuracyStats, CollectiveReport

LENGTH_PREFIX = struct.Struct("<Q")


class DeadlockError(RuntimeError):
    """A rank tried to receive on a channel with no undelivered message."""


class FramingError(RuntimeError):
    """A channel held bytes whose length prefix disagrees with the payload."""


@dataclass
class CommunicatorSpec:
    """Rank count and the root rank used by rooted collectives."""

    size: int
    root: int = 0

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"communicator needs at least 1 rank, got {self.size}")
        if not 0 <= self.root < self.size:
            raise ValueError(f"root {self.root} out of range [0, {self.size})")


@dataclass
class OpCounters:
    """Operation counts, byte totals, and per-phase simulated seconds."""

    n_compress: int = 0
    n_decompress: int = 0
    n_messages: int = 0
    bytes_sent: int = 0
    bytes_received: int = 0
    compress_s: float = 0.0
    decompress_s: float = 0.0
    comm_s: float = 0.0
    reduce_s: float = 0.0
    staging_s: float = 0.0
    other_s: float = 0.0

    def phase_total(self) -> float:
        return self.compress_s + self.decompress_s + self.comm_s + self.reduce_s + self.staging_s + self.other_s

    def merge(self, other: "OpCounters") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class Rank:
    id: int
    clock: float = 0.0
    counters: OpCounters = field(default_factory=OpCounters)
    workspace: Workspace = field(default_factory=Workspace)


class Network:
    """N rank contexts plus FIFO channels between every ordered pair."""

    def __init__(self, spec: CommunicatorSpec, params: CostParams | None = None, record_payloads: bool = False):
        self.spec = spec
        self.params = params if params is not None else CostParams()
        self.ranks = [Rank(i) for i in range(spec.size)]
        self._channels: dict[tuple[int, int], deque] = {}
        self.record_payloads = record_payloads
        self.trace: list[tuple[int, int, int, bytes | None]] = []

    @property
    def size(self) -> int:
        return self.spec.size

    @property
    def root(self) -> int:
        return self.spec.root

    @property
    def channel_count(self) -> int:
        return self.size * (self.size - 1)

    def max_clock(self) -> float:
        return max(r.clock for r in self.ranks)

    def _check_pair(self, src: int, dst: int) -> None:
        if not 0 <= src < self.size:
            raise ValueError(f"invalid source rank {src}")
        if not 0 <= dst < self.size:
            raise ValueError(f"invalid destination rank {dst}")
        if src == dst:
            raise ValueError(f"rank {src} cannot message itself")

    def _enqueue(self, src: int, dst: int, payload: bytes, arrival: float) -> None:
        framed = LENGTH_PREFIX.pack(len(payload)) + payload
        self._channels.setdefault((src, dst), deque()).append((framed, arrival))
        c = self.ranks[src].counters
        c.n_messages += 1
        c.bytes_sent += len(payload)
        self.trace.append((src, dst, len(payload), payload if self.record_payloads else None))

    def _dequeue(self, dst: int, src: int) -> tuple[bytes, float]:
        q = self._channels.get((src, dst))
        if not q:
            raise DeadlockError(f"deadlock: rank {dst} waiting to receive from rank {src} (no message in flight)")
        framed, arrival = q.popleft()
        (length,) = LENGTH_PREFIX.unpack_from(framed)
        payload = framed[LENGTH_PREFIX.size :]
        if length != len(payload):
            raise FramingError(f"length prefix {length} disagrees with payload of {len(payload)} bytes")
        self.ranks[dst].counters.bytes_received += len(payload)
        return payload, arrival

    # -- standalone point-to-point ops ------------------------------------

    def send(self, src: int, dst: int, payload: bytes) -> None:
        """Non-blocking send: the sender pays only the staging cost."""
        self._check_pair(src, dst)
        p = self.params
        rank = self.ranks[src]
        st = p.staging_time(len(payload))
        arrival = rank.clock + st + p.msg_time(len(payload))
        rank.clock += st
        rank.counters.staging_s += st
        self._enqueue(src, dst, payload, arrival)

    def recv(self, dst: int, src: int) -> bytes:
        """Blocking receive: lifts the receiver's clock to the arrival time."""
        self._check_pair(src, dst)
        payload, arrival = self._dequeue(dst, src)
        rank = self.ranks[dst]
        wait = max(0.0, arrival - rank.clock)
        rank.clock += wait
        rank.counters.comm_s += wait
        return payload

    # -- step-engine primitives (used by the collective algorithms) -------

    def post(self, src: int, dst: int, payload: bytes, send_time: float) -> None:
        """Enqueue a message as if sent at ``send_time`` on the sender's clock.

        Clock and staging accounting are settled by the sender's step
        advance, not here.
        """
        self._check_pair(src, dst)
        p = self.params
        arrival = send_time + p.staging_time(len(payload)) + p.msg_time(len(payload))
        self._enqueue(src, dst, payload, arrival)

    def take(self, dst: int, src: int) -> tuple[bytes, float]:
        """Dequeue the oldest message and its arrival time without advancing clocks."""
        self._check_pair(src, dst)
        return self._dequeue(dst, src)

    def advance(
        self,
        rank_id: int,
        *,
        comm: float = 0.0,
        staging: float = 0.0,
        compress: float = 0.0,
        decompress: float = 0.0,
        reduce: float = 0.0,
        other: float = 0.0,
    ) -> None:
        """Advance one rank's clock by one step of the collective.

        The step costs ``step_time(comm + staging, compute)``; with overlap
        on that is the max of the two sides, so the elapsed time is
        attributed to the phases proportionally (without overlap the scale
        is exactly 1 and each phase gets its full cost).  This keeps the
        invariant that a rank's phase seconds sum to its clock.
        """
        compute = compress + decompress + reduce + other
        dt = self.params.step_time(comm + staging, compute)
        parts = comm + staging + compute
        scale = dt / parts if parts > 0 else 0.0
        c = self.ranks[rank_id].counters
        c.comm_s += comm * scale
        c.staging_s += staging * scale
        c.compress_s += compress * scale
        c.decompress_s += decompress * scale
        c.reduce_s += reduce * scale
        c.other_s += other * scale
        self.ranks[rank_id].clock += dt


def create_network(spec: CommunicatorSpec, params: CostParams | None = None, **kw) -> Network:
    """Build a network with zeroed clocks, counters, and empty channels."""
    return Network(spec, params, **kw)


def aggregate_counters(network: Network) -> OpCounters:
    total = OpCounters()
    for r in network.ranks:
        total.merge(r.counters)
    return total


def run_collective(
    network: Network,
    algorithm: str,
    inputs,
    *,
    eb: float | None = None,
    reduce_op: str = "sum",
    codec: str = "ebz",
    bits: int = 8,
    counts=None,
    seed: int | None = None,
    data_source: str | None = None,
    compute_accuracy: bool = True,
) -> tuple[list, CollectiveReport]:
    """Run one collective on a (freshly created) network and report on it.

    ``inputs`` is a list of per-rank float32 buffers, except for the
    scatter family where it is the root's full buffer.  The report carries
    aggregated counters, the simulated makespan (max rank clock), accuracy
    statistics against an internally computed lossless oracle, and the
    compression ratio over every compression the run performed.
    """
    from . import collectives

    algo = collectives.get_algorithm(algorithm)
    if algo.lossless:
        codec = "none"
    transport = collectives.make_transport(codec, network.params, eb=eb, bits=bits)
    outputs = algo.run(network, inputs, transport, reduce_op=reduce_op, counts=counts)

    flat_out = np.concatenate([np.asarray(o, dtype=np.float64).ravel() for o in outputs]) if outputs else np.empty(0)
    lossless_run = algo.lossless or isinstance(transport, collectives.RawTransport)
    if compute_accuracy and not lossless_run:
        # oracle: the same schedule rerun with raw payloads, so reduction
        # order matches and only codec distortion remains
        oracle_net = Network(network.spec, network.params)
        oracle_tr = collectives.make_transport("none", network.params)
        oracle_out = algo.run(oracle_net, inputs, oracle_tr, reduce_op=reduce_op, counts=counts)
        flat_ref = np.concatenate([np.asarray(o, dtype=np.float64).ravel() for o in oracle_out]) if oracle_out else np.empty(0)
        accuracy = AccuracyStats.of(flat_ref, flat_out)
    else:
        accuracy = AccuracyStats.of(flat_out, flat_out)

    total = aggregate_counters(network)
    phase_seconds = {
        "compress": total.compress_s,
        "decompress": total.decompress_s,
        "comm": total.comm_s,
        "reduce": total.reduce_s,
        "staging": total.staging_s,
        "other": total.other_s,
    }
    cr = None
    if transport.raw_bytes_in > 0 and transport.blob_bytes_out > 0:
        cr = transport.raw_bytes_in / transport.blob_bytes_out

    if algo.family == "scatter":
        elements_per_rank = None
        total_elements = int(np.asarray(inputs).size)
    else:
        elements_per_rank = int(np.asarray(inputs[0]).size) if len(inputs) else 0
        total_elements = int(sum(np.asarray(b).size for b in inputs))

    report = CollectiveReport(
        algorithm=algorithm,
        ranks=network.size,
        root=network.root,
        elements_per_rank=elements_per_rank,
        total_elements=total_elements,
        eb=float(eb) if eb is not None and not lossless_run and codec == "ebz" else None,
        codec="none" if algo.lossless else codec,
        reduce_op=reduce_op if algo.family in ("reduce_scatter", "allreduce") else None,
        counters=total.as_dict(),
        counters_per_rank=[r.counters.as_dict() for r in network.ranks],
        phase_seconds=phase_seconds,
        makespan_seconds=network.max_clock(),
        accuracy=accuracy,
        compression_ratio=cr,
        flags={
            "overlap": network.params.overlap,
            "staging": network.params.staging,
            "multi_stream": network.params.multi_stream,
        },
        seed=seed,
        data_source=data_source,
    )
    return outputs, report
