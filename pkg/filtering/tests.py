import numpy as np
from django.test import SimpleTestCase

from pgpo.trajectory import Trajectory, TrajectoryBatch, TurnRecord

from .exceptions import EmptyAfterFilter, FilterError
from .filters import TrajectoryGroup, filter_batch, group_batch, retention_ratio


def trajectory(trajectory_id, lead_id, total):
    item = Trajectory(trajectory_id, lead_id, 'CCO')
    item.turns.append(TurnRecord(np.ones(1), (), np.zeros(1, dtype=np.int64), 0, 0.0, float(total)))
    return item


def spread_group(lead_id, sigma, first_id):
    """Two trajectories at ±sigma: population std exactly sigma."""
    return TrajectoryGroup(lead_id, [trajectory(first_id, lead_id, -sigma), trajectory(first_id + 1, lead_id, sigma)])


def synthetic_batch(groups=8, size=16):
    items = []
    for lead_id in range(groups):
        for k in range(size):
            items.append(trajectory(lead_id * size + k, lead_id, (lead_id + 1) * k + 0.01 * lead_id))
    return TrajectoryBatch(items)


class TrajectoryGroupTests(SimpleTestCase):
    def test_population_std(self):
        group = TrajectoryGroup(0, [trajectory(i, 0, value) for i, value in enumerate([1.0, 2.0, 3.0, 4.0])])
        self.assertAlmostEqual(group.std, np.sqrt(1.25), delta=1e-12)

    def test_equal_returns(self):
        group = TrajectoryGroup(0, [trajectory(i, 0, 0.5) for i in range(3)])
        self.assertEqual(group.std, 0.0)

    def test_grouping_orders_by_lead(self):
        groups = group_batch([trajectory(0, 3, 1.0), trajectory(1, 1, 2.0), trajectory(2, 3, 0.0)])
        self.assertEqual([group.lead_id for group in groups], [1, 3])
        self.assertEqual([len(group) for group in groups], [1, 2])


class FilterBatchTests(SimpleTestCase):
    def test_median_of_even_count(self):
        groups = [spread_group(index, sigma, 10 * index) for index, sigma in enumerate([0.1, 0.5, 0.3, 0.7])]
        filtered = filter_batch(groups)
        self.assertEqual(sorted({item.lead_id for item in filtered}), [1, 3])

    def test_ceiling_keep_count(self):
        group = TrajectoryGroup(0, [trajectory(i, 0, value) for i, value in enumerate([0.4, 0.1, 0.3, 0.2])])
        filtered = filter_batch([group])
        self.assertEqual([item.id for item in filtered], [0, 2, 3])

    def test_single_flat_group(self):
        group = TrajectoryGroup(0, [trajectory(i, 0, 1.0) for i in range(4)])
        filtered = filter_batch([group])
        self.assertEqual([item.id for item in filtered], [0, 1, 2])

    def test_retention_is_three_eighths(self):
        batch = synthetic_batch()
        filtered = filter_batch(group_batch(batch))
        self.assertEqual(len(filtered), 48)
        self.assertEqual(retention_ratio(batch, filtered), 0.375)
        self.assertEqual(sorted({item.lead_id for item in filtered}), [4, 5, 6, 7])

    def test_identical_spread_keeps_every_group(self):
        groups = [spread_group(index, 0.5, 10 * index) for index in range(4)]
        filtered = filter_batch(groups)
        self.assertGreaterEqual(retention_ratio(8, filtered), 0.375)
        self.assertEqual(len(filtered), 8)

    def test_single_group_ratio(self):
        group = TrajectoryGroup(0, [trajectory(i, 0, float(i)) for i in range(6)])
        filtered = filter_batch([group])
        self.assertEqual(retention_ratio(group.trajectories, filtered), 5 / 6)

    def test_accepts_a_plain_batch(self):
        batch = synthetic_batch(groups=4, size=4)
        self.assertEqual([item.id for item in filter_batch(batch)], [item.id for item in filter_batch(group_batch(batch))])

    def test_kept_trajectories_dominate_dropped_ones(self):
        rng = np.random.default_rng(0)
        items = [trajectory(i, int(rng.integers(5)), float(rng.normal())) for i in range(60)]
        filtered = filter_batch(items)
        kept = {item.id for item in filtered}
        for group in group_batch(items):
            kept_returns = [item.total_reward for item in group.trajectories if item.id in kept]
            dropped_returns = [item.total_reward for item in group.trajectories if item.id not in kept]
            if kept_returns and dropped_returns:
                self.assertGreaterEqual(min(kept_returns), max(dropped_returns))

    def test_output_is_an_ordered_subset(self):
        rng = np.random.default_rng(1)
        items = [trajectory(i, int(rng.integers(4)), float(rng.integers(3))) for i in range(40)]
        filtered = filter_batch(items)
        ids = [item.id for item in filtered]
        self.assertEqual(len(ids), len(set(ids)))
        self.assertTrue(set(ids) <= {item.id for item in items})
        keys = [(item.lead_id, -item.total_reward, item.id) for item in filtered]
        self.assertEqual(keys, sorted(keys))

    def test_errors(self):
        with self.assertRaises(EmptyAfterFilter):
            filter_batch([])
        with self.assertRaises(FilterError):
            filter_batch([spread_group(0, 0.5, 0)], variance_keep_ratio=0.0)
        with self.assertRaises(FilterError):
            retention_ratio(0, 0)
