"""Analytic timing model for simulated collectives.

Links follow the alpha-beta model (per-message latency plus per-byte
cost).  Device kernels pay a fixed launch overhead plus ``max(bytes,
saturation) / throughput``: below the saturation size the device is
underutilized and the time is a flat floor, above it the time grows
linearly.  Optional behaviors are host staging (device-host round trip per
message), compute/communication overlap (a step costs ``max`` instead of
``sum``), and multi-stream kernel batching (one launch, aggregate bytes).

The default numbers are placeholders, not hardware calibration: the
saturation size and link bandwidth anchor the regime boundaries, and the
rest are chosen to make the modeled algorithm tradeoffs land in realistic
territory.  Every field can be overridden from a JSON config file.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, fields

KERNEL_KINDS = ("compress", "decompress", "reduce")

#: Modeled compression ratio used by planning estimates when no real data
#: is flowing (scientific float fields commonly land in this range).
DEFAULT_ASSUMED_CR = 64.0


@dataclass(frozen=True)
class CostParams:
    """Link, kernel, and behavior parameters for the timing model."""

    alpha: float = 1e-5                      # seconds per message
    beta: float = 8e-11                      # seconds per byte (100 Gbps link)
    launch: float = 1.5e-4                   # seconds per kernel invocation
    saturation: float = 5.05e6               # bytes below which a kernel is underutilized
    compress_throughput: float = 1.28e11     # bytes/second, saturated compression
    decompress_throughput: float = 1.28e11   # bytes/second, saturated decompression
    reduce_throughput: float = 4e11          # bytes/second, on-device reduction
    host_device_bandwidth: float = 2.4e10    # bytes/second, one direction
    staging: bool = False                    # route message payloads through the host
    overlap: bool = False                    # overlap compute with communication per step
    multi_stream: bool = False               # batch block kernels into one launch

    def __post_init__(self):
        for name in (
            "alpha",
            "beta",
            "launch",
            "saturation",
            "compress_throughput",
            "decompress_throughput",
            "reduce_throughput",
            "host_device_bandwidth",
        ):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")

    def _throughput(self, kind: str) -> float:
        try:
            return {
                "compress": self.compress_throughput,
                "decompress": self.decompress_throughput,
                "reduce": self.reduce_throughput,
            }[kind]
        except KeyError:
            raise ValueError(f"unknown kernel kind {kind!r}, expected one of {KERNEL_KINDS}") from None

    def msg_time(self, nbytes: float) -> float:
        """Link time for one message: alpha + bytes * beta."""
        if nbytes < 0:
            raise ValueError("message size must be non-negative")
        return self.alpha + nbytes * self.beta

    def kernel_time(self, nbytes: float, kind: str) -> float:
        """One kernel invocation over ``nbytes`` of uncompressed data."""
        if nbytes < 0:
            raise ValueError("kernel size must be non-negative")
        return self.launch + max(nbytes, self.saturation) / self._throughput(kind)

    def multi_launch_time(self, sizes, kind: str) -> float:
        """Kernel time for a batch of block sizes.

        With multi-stream batching the blocks share one launch and fill the
        device together; otherwise they run back to back.
        """
        sizes = list(sizes)
        if not sizes:
            raise ValueError("multi_launch_time needs at least one block size")
        if self.multi_stream:
            return self.launch + max(sum(sizes), self.saturation) / self._throughput(kind)
        return sum(self.kernel_time(s, kind) for s in sizes)

    def staging_time(self, nbytes: float) -> float:
        """Host round trip for one message payload (0 when staging is off)."""
        if nbytes < 0:
            raise ValueError("staged size must be non-negative")
        if not self.staging:
            return 0.0
        return 2.0 * nbytes / self.host_device_bandwidth

    def step_time(self, comm_seconds: float, compute_seconds: float) -> float:
        """Combine one step's communication and compute time."""
        if comm_seconds < 0 or compute_seconds < 0:
            raise ValueError("step components must be non-negative")
        if self.overlap:
            return max(comm_seconds, compute_seconds)
        return comm_seconds + compute_seconds

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "CostParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown cost parameter(s): {sorted(unknown)}")
        return cls(**d)


def load_cost_params(path: str | os.PathLike | None = None, **overrides) -> CostParams:
    """Load parameters from a JSON file; missing fields keep their defaults.

    With ``path=None`` returns the defaults (plus any keyword overrides).
    """
    d: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError(f"cost config {path} must hold a JSON object")
        d.update(loaded)
    d.update(overrides)
    return CostParams.from_dict(d)


def predicted_makespan(
    algorithm: str,
    data_bytes: float,
    ranks: int,
    params: CostParams | None = None,
    assumed_cr: float = DEFAULT_ASSUMED_CR,
) -> float:
    """Modeled makespan of a collective without moving real data.

    ``data_bytes`` is the per-rank buffer size for the reduction collectives
    and the total gathered/scattered size for allgather and scatter.  The
    step accounting mirrors the simulated collectives exactly (verified in
    tests against constant-data runs); message payloads are modeled as
    ``raw / assumed_cr``.
    """
    from . import collectives  # deferred: collectives imports this module's types

    return collectives.predicted_makespan(algorithm, data_bytes, ranks, params, assumed_cr)
