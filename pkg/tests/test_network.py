"""Tests for event log and assignment containers and matrix aggregation."""

import numpy as np
import pytest

from chip.network import CommunityAssignment, EventLog, build_matrices


def small_log():
    return EventLog(
        senders=[0, 1, 0, 2, 1],
        receivers=[1, 0, 1, 0, 2],
        times=[0.5, 1.0, 2.0, 2.5, 4.0],
        n=3,
        horizon=5.0,
    )


class TestEventLog:
    def test_sorts_stably_on_construction(self):
        log = EventLog(
            senders=[2, 0, 1, 0],
            receivers=[0, 1, 2, 2],
            times=[3.0, 1.0, 3.0, 0.5],
            n=3,
            horizon=4.0,
        )
        np.testing.assert_array_equal(log.times, [0.5, 1.0, 3.0, 3.0])
        # tie at t=3.0 keeps input order: (2, 0) before (1, 2)
        np.testing.assert_array_equal(log.senders, [0, 0, 2, 1])
        np.testing.assert_array_equal(log.receivers, [2, 1, 0, 2])

    def test_validation(self):
        with pytest.raises(ValueError, match="self edges"):
            EventLog([0], [0], [1.0], n=2, horizon=5.0)
        with pytest.raises(ValueError, match="node ids"):
            EventLog([0], [5], [1.0], n=2, horizon=5.0)
        with pytest.raises(ValueError, match="horizon"):
            EventLog([0], [1], [6.0], n=2, horizon=5.0)
        with pytest.raises(ValueError, match="horizon"):
            EventLog([0], [1], [1.0], n=2, horizon=0.0)
        with pytest.raises(ValueError, match="equal length"):
            EventLog([0, 1], [1], [1.0], n=2, horizon=5.0)
        with pytest.raises(ValueError):
            EventLog([0], [1], [-1.0], n=2, horizon=5.0)

    def test_csv_roundtrip_with_sidecar(self, tmp_path):
        log = small_log()
        path = tmp_path / "events.csv"
        log.to_csv(path)
        assert (tmp_path / "events.csv.meta.json").exists()
        back = EventLog.from_csv(path)
        assert back.equals(log)

    def test_csv_roundtrip_inferred_metadata(self, tmp_path):
        log = small_log()
        path = tmp_path / "events.csv"
        log.to_csv(path, write_meta=False)
        back = EventLog.from_csv(path)
        assert back.n == 3
        assert back.horizon == 4.0  # max timestamp, window end unknown
        np.testing.assert_array_equal(back.times, log.times)

    def test_csv_preserves_floats_exactly(self, tmp_path):
        times = np.array([0.1, 1 / 3, np.pi])
        log = EventLog([0, 1, 0], [1, 0, 2], times, n=3, horizon=4.0)
        path = tmp_path / "events.csv"
        log.to_csv(path)
        np.testing.assert_array_equal(EventLog.from_csv(path).times, times)

    def test_csv_malformed_rows_report_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("sender,receiver,timestamp\n0,1,0.5\n0,oops,1.0\n")
        with pytest.raises(ValueError, match=r"bad\.csv:3"):
            EventLog.from_csv(path)
        path.write_text("a,b\n")
        with pytest.raises(ValueError, match="header"):
            EventLog.from_csv(path)


class TestCommunityAssignment:
    def test_block_sizes_and_membership(self):
        a = CommunityAssignment(labels=[0, 2, 0, 1], k=3)
        np.testing.assert_array_equal(a.block_sizes(), [2, 1, 1])
        dense = a.membership_matrix().toarray()
        assert dense.shape == (4, 3)
        np.testing.assert_array_equal(dense.sum(axis=1), np.ones(4))
        np.testing.assert_array_equal(np.flatnonzero(dense[1]), [2])

    def test_empty_blocks_allowed(self):
        a = CommunityAssignment(labels=[0, 0], k=3)
        np.testing.assert_array_equal(a.block_sizes(), [2, 0, 0])

    def test_validation(self):
        with pytest.raises(ValueError):
            CommunityAssignment(labels=[0, 3], k=3)
        with pytest.raises(ValueError):
            CommunityAssignment(labels=[-1], k=2)
        with pytest.raises(ValueError):
            CommunityAssignment(labels=[0], k=0)


class TestBuildMatrices:
    def test_directed_counts(self):
        counts, adjacency = build_matrices(small_log(), mode="directed")
        want = np.array([[0, 2, 0], [1, 0, 1], [1, 0, 0]])
        np.testing.assert_array_equal(counts.toarray(), want)
        np.testing.assert_array_equal(adjacency.toarray(), (want > 0).astype(int))

    def test_undirected_symmetrizes_before_binarizing(self):
        counts, adjacency = build_matrices(small_log(), mode="undirected")
        want = np.array([[0, 3, 1], [3, 0, 1], [1, 1, 0]])
        np.testing.assert_array_equal(counts.toarray(), want)
        np.testing.assert_array_equal(adjacency.toarray(), (want > 0).astype(int))
        assert (counts != counts.T).nnz == 0

    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError, match="mode"):
            build_matrices(small_log(), mode="both")
