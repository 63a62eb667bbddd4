"""Accuracy and efficiency statistics plus collective report assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def max_abs_error(ref, test) -> float:
    """Largest elementwise |ref - test|; 0 for empty buffers."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"length mismatch: {ref.shape} vs {test.shape}")
    if ref.size == 0:
        return 0.0
    return float(np.max(np.abs(ref - test)))


def mean_signed_error(ref, test) -> float:
    """Mean of (test - ref); near zero when errors cancel statistically."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"length mismatch: {ref.shape} vs {test.shape}")
    if ref.size == 0:
        return 0.0
    return float(np.mean(test - ref))


def mse(ref, test) -> float:
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"length mismatch: {ref.shape} vs {test.shape}")
    if ref.size == 0:
        return 0.0
    return float(np.mean((ref - test) ** 2))


def psnr(ref, test) -> float:
    """10*log10(range^2 / mse) with range = max(ref) - min(ref).

    Returns +inf when the buffers match exactly; raises when the reference
    range is degenerate but the error is not.
    """
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"length mismatch: {ref.shape} vs {test.shape}")
    if ref.size == 0:
        raise ValueError("psnr needs non-empty buffers")
    err = mse(ref, test)
    if err == 0.0:
        return math.inf
    rng = float(np.max(ref) - np.min(ref))
    if rng == 0.0:
        raise ValueError("psnr undefined: zero reference range with nonzero error")
    return 10.0 * math.log10(rng * rng / err)


def compression_ratio(original_bytes: float, compressed_bytes: float) -> float:
    if compressed_bytes <= 0:
        raise ValueError("compressed size must be positive")
    return float(original_bytes) / float(compressed_bytes)


@dataclass(frozen=True)
class AccuracyStats:
    """Error statistics of a collective's outputs against its lossless oracle."""

    max_abs_err: float
    mse: float
    psnr: float  # decibels; +inf when outputs match the oracle exactly
    mean_signed_err: float

    @classmethod
    def of(cls, ref, test) -> "AccuracyStats":
        ref = np.asarray(ref, dtype=np.float64)
        test = np.asarray(test, dtype=np.float64)
        err = mse(ref, test)
        if ref.size == 0 or err == 0.0:
            db = math.inf
        else:
            rng = float(np.max(ref) - np.min(ref))
            db = 10.0 * math.log10(rng * rng / err) if rng > 0 else -math.inf
        return cls(
            max_abs_err=max_abs_error(ref, test),
            mse=err,
            psnr=db,
            mean_signed_err=mean_signed_error(ref, test),
        )

    def to_dict(self) -> dict:
        return {
            "max_abs_err": self.max_abs_err,
            "mse": self.mse,
            "psnr_db": "inf" if math.isinf(self.psnr) and self.psnr > 0 else self.psnr,
            "mean_signed_err": self.mean_signed_err,
        }


def phase_breakdown(phase_seconds: dict) -> dict:
    """Four-way percentage breakdown of the accumulated phase time.

    Buckets: compression (compress + decompress kernels), communication,
    reduction, and others (staging plus anything uncategorized).  The
    percentages always sum to 100; a run that accumulated no time at all
    reports 100% others.
    """
    cmpr = phase_seconds.get("compress", 0.0) + phase_seconds.get("decompress", 0.0)
    comm = phase_seconds.get("comm", 0.0)
    redu = phase_seconds.get("reduce", 0.0)
    others = phase_seconds.get("staging", 0.0) + phase_seconds.get("other", 0.0)
    total = cmpr + comm + redu + others
    if total <= 0.0:
        return {"compression": 0.0, "communication": 0.0, "reduction": 0.0, "others": 100.0}
    return {
        "compression": 100.0 * cmpr / total,
        "communication": 100.0 * comm / total,
        "reduction": 100.0 * redu / total,
        "others": 100.0 * others / total,
    }


@dataclass(frozen=True)
class CollectiveReport:
    """Everything a simulated collective run produced besides its outputs."""

    algorithm: str
    ranks: int
    root: int
    elements_per_rank: int | None
    total_elements: int
    eb: float | None
    codec: str
    reduce_op: str | None
    counters: dict
    counters_per_rank: list
    phase_seconds: dict
    makespan_seconds: float
    accuracy: AccuracyStats
    compression_ratio: float | None
    flags: dict
    seed: int | None = None
    data_source: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def breakdown_pct(self) -> dict:
        return phase_breakdown(self.phase_seconds)

    def to_dict(self) -> dict:
        d = {
            "schema": "gzccl.report.v1",
            "algorithm": self.algorithm,
            "ranks": self.ranks,
            "root": self.root,
            "elements_per_rank": self.elements_per_rank,
            "total_elements": self.total_elements,
            "eb": self.eb,
            "codec": self.codec,
            "reduce_op": self.reduce_op,
            "seed": self.seed,
            "data_source": self.data_source,
            "flags": dict(self.flags),
            "counters": dict(self.counters),
            "counters_per_rank": [dict(c) for c in self.counters_per_rank],
            "phase_seconds": dict(self.phase_seconds),
            "breakdown_pct": self.breakdown_pct,
            "makespan_seconds": self.makespan_seconds,
            "accuracy": self.accuracy.to_dict(),
            "compression_ratio": self.compression_ratio,
        }
        d.update(self.extra)
        return d
