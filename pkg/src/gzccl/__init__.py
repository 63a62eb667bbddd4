"""gzccl: compression-accelerated collective communication on a simulated multi-rank network.

The package couples three things:

* an error-bounded lossy codec (plus a fixed-rate baseline) with a frozen,
  deterministic byte format,
* an analytic cost model (alpha-beta links, kernel launch/saturation/throughput,
  host staging, compute/communication overlap, multi-stream batching),
* deterministic in-process implementations of the collective algorithms
  (ring allgather / reduce-scatter / allreduce, recursive-doubling allreduce
  with non-power-of-two remainder handling, binomial-tree scatter, and the
  compress-per-hop baseline), with exact operation counting and accuracy
  accounting against lossless oracles.
"""

from .codec import (
    BlockTable,
    DecodeError,
    Workspace,
    compress,
    compress_blocks,
    decompress,
    decompress_block,
    fixed_rate_compress,
    fixed_rate_decompress,
)
from .costmodel import CostParams, load_cost_params, predicted_makespan
from .metrics import AccuracyStats, CollectiveReport, compression_ratio, max_abs_error, psnr
from .simnet import CommunicatorSpec, DeadlockError, Network, OpCounters, create_network, run_collective

__version__ = "0.1.0"

__all__ = [
    "AccuracyStats",
    "BlockTable",
    "CollectiveReport",
    "CommunicatorSpec",
    "CostParams",
    "DeadlockError",
    "DecodeError",
    "Network",
    "OpCounters",
    "Workspace",
    "compress",
    "compress_blocks",
    "compression_ratio",
    "create_network",
    "decompress",
    "decompress_block",
    "fixed_rate_compress",
    "fixed_rate_decompress",
    "load_cost_params",
    "max_abs_error",
    "predicted_makespan",
    "psnr",
    "run_collective",
]
