import numpy as np
import pytest

from gzccl.costmodel import CostParams
from gzccl.simnet import (
    CommunicatorSpec,
    DeadlockError,
    FramingError,
    OpCounters,
    aggregate_counters,
    create_network,
    run_collective,
)
from conftest import uniform_f32


class TestCreation:
    def test_single_rank(self):
        net = create_network(CommunicatorSpec(1))
        assert net.size == 1 and net.channel_count == 0
        assert net.max_clock() == 0.0

    def test_channel_count(self):
        assert create_network(CommunicatorSpec(8)).channel_count == 56

    def test_zero_ranks_rejected(self):
        with pytest.raises(ValueError):
            CommunicatorSpec(0)

    def test_bad_root_rejected(self):
        with pytest.raises(ValueError):
            CommunicatorSpec(4, root=4)


class TestSendRecv:
    def test_receiver_clock_covers_link_time(self):
        p = CostParams()
        net = create_network(CommunicatorSpec(2), p)
        net.send(0, 1, b"x" * 100)
        got = net.recv(1, 0)
        assert got == b"x" * 100
        assert net.ranks[1].clock >= p.alpha + 100 * p.beta

    def test_fifo_order(self):
        net = create_network(CommunicatorSpec(2))
        net.send(0, 1, b"first")
        net.send(0, 1, b"second")
        assert net.recv(1, 0) == b"first"
        assert net.recv(1, 0) == b"second"

    def test_recv_without_send_deadlocks(self):
        net = create_network(CommunicatorSpec(3))
        with pytest.raises(DeadlockError, match="rank 2.*rank 0"):
            net.recv(2, 0)

    def test_self_send_rejected(self):
        net = create_network(CommunicatorSpec(2))
        with pytest.raises(ValueError):
            net.send(1, 1, b"loop")

    def test_sender_nonblocking_without_staging(self):
        net = create_network(CommunicatorSpec(2))
        net.send(0, 1, b"abc")
        assert net.ranks[0].clock == 0.0

    def test_sender_pays_staging(self):
        p = CostParams(staging=True)
        net = create_network(CommunicatorSpec(2), p)
        net.send(0, 1, b"x" * 1000)
        assert net.ranks[0].clock == pytest.approx(p.staging_time(1000))
        assert net.ranks[0].counters.staging_s == pytest.approx(p.staging_time(1000))

    def test_length_prefix_validated(self):
        net = create_network(CommunicatorSpec(2))
        net.send(0, 1, b"hello")
        framed, arrival = net._channels[(0, 1)].popleft()
        net._channels[(0, 1)].append((framed[:-1], arrival))
        with pytest.raises(FramingError):
            net.recv(1, 0)

    def test_byte_accounting(self):
        net = create_network(CommunicatorSpec(2))
        net.send(0, 1, b"x" * 321)
        net.recv(1, 0)
        assert net.ranks[0].counters.bytes_sent == 321
        assert net.ranks[1].counters.bytes_received == 321
        assert net.ranks[0].counters.n_messages == 1


class TestCounters:
    def test_phase_seconds_sum_to_clock_via_send_recv(self):
        p = CostParams(staging=True)
        net = create_network(CommunicatorSpec(2), p)
        net.send(0, 1, b"y" * 5000)
        net.recv(1, 0)
        for r in net.ranks:
            assert r.counters.phase_total() == pytest.approx(r.clock)

    def test_merge(self):
        a = OpCounters(n_compress=1, comm_s=0.5)
        b = OpCounters(n_compress=2, comm_s=0.25)
        a.merge(b)
        assert a.n_compress == 3 and a.comm_s == 0.75


class TestRunCollective:
    def test_lossless_allgather_identity(self):
        chunks = [uniform_f32(s, 32) for s in range(3)]
        net = create_network(CommunicatorSpec(3))
        out, rep = run_collective(net, "lossless-allgather", chunks)
        ref = np.concatenate(chunks)
        assert all(np.array_equal(o, ref) for o in out)
        assert rep.accuracy.max_abs_err == 0.0

    def test_single_rank_allreduce_is_identity(self):
        data = uniform_f32(1, 100)
        net = create_network(CommunicatorSpec(1))
        out, rep = run_collective(net, "ring-allreduce", [data], eb=1e-4)
        assert np.array_equal(out[0], data)
        assert rep.counters["n_messages"] == 0

    def test_same_seed_reproducible(self):
        for _ in range(2):
            runs = []
            for _ in range(2):
                chunks = [uniform_f32(s + 10, 128) for s in range(4)]
                net = create_network(CommunicatorSpec(4))
                out, rep = run_collective(net, "ring-allreduce", chunks, eb=1e-4)
                runs.append((tuple(o.tobytes() for o in out), rep.to_dict()))
            assert runs[0] == runs[1]

    def test_conservation(self):
        chunks = [uniform_f32(s, 64) for s in range(5)]
        net = create_network(CommunicatorSpec(5))
        run_collective(net, "ring-allreduce", chunks, eb=1e-4)
        total = aggregate_counters(net)
        assert total.bytes_sent == total.bytes_received
        assert total.bytes_sent > 0

    def test_clock_monotone_nonnegative(self):
        chunks = [uniform_f32(s, 64) for s in range(4)]
        net = create_network(CommunicatorSpec(4))
        run_collective(net, "rd-allreduce", chunks, eb=1e-4)
        assert all(r.clock >= 0 for r in net.ranks)

    def test_phase_sums_match_clocks_for_all_flag_combos(self):
        for overlap in (False, True):
            for staging in (False, True):
                p = CostParams(overlap=overlap, staging=staging)
                chunks = [uniform_f32(s, 96) for s in range(4)]
                net = create_network(CommunicatorSpec(4), p)
                run_collective(net, "ring-allreduce", chunks, eb=1e-4)
                for r in net.ranks:
                    assert r.counters.phase_total() == pytest.approx(r.clock, rel=1e-12)

    def test_staging_increases_makespan(self):
        chunks = [uniform_f32(s, 512) for s in range(4)]
        spans = {}
        for staging in (False, True):
            net = create_network(CommunicatorSpec(4), CostParams(staging=staging))
            _, rep = run_collective(net, "ring-allreduce", chunks, eb=1e-4)
            spans[staging] = rep.makespan_seconds
        assert spans[True] > spans[False]

    def test_overlap_never_increases_makespan(self):
        for algo in ("ring-allreduce", "rd-allreduce", "ring-allgather", "cprp2p-allgather"):
            chunks = [uniform_f32(s, 256) for s in range(4)]
            spans = {}
            for overlap in (False, True):
                net = create_network(CommunicatorSpec(4), CostParams(overlap=overlap))
                _, rep = run_collective(net, algo, chunks, eb=1e-4)
                spans[overlap] = rep.makespan_seconds
            assert spans[True] <= spans[False]

    def test_report_breakdown_sums_to_100(self):
        chunks = [uniform_f32(s, 64) for s in range(4)]
        net = create_network(CommunicatorSpec(4))
        _, rep = run_collective(net, "ring-allreduce", chunks, eb=1e-4)
        assert sum(rep.breakdown_pct.values()) == pytest.approx(100.0, abs=0.1)

    def test_unknown_algorithm(self):
        net = create_network(CommunicatorSpec(2))
        with pytest.raises(ValueError, match="unknown algorithm"):
            run_collective(net, "quantum-allreduce", [uniform_f32(0, 4)] * 2, eb=1e-4)

    def test_trace_records_messages(self):
        chunks = [uniform_f32(s, 32) for s in range(3)]
        net = create_network(CommunicatorSpec(3), record_payloads=True)
        run_collective(net, "ring-allgather", chunks, eb=1e-4)
        assert len(net.trace) == 6  # N*(N-1) sends
        assert all(isinstance(t[3], bytes) for t in net.trace)
