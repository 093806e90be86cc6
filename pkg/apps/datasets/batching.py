"""Single-resolution minibatches over resolution groups."""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from apps.core.exceptions import DataError, EpochEnd

from .imageio import load_for_training

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BatchPlan:
    """Epoch order as (group index, start offset) pairs.

    Groups are visited round-robin so every resolution is trained throughout
    the epoch; members inside a group keep their sorted order.
    """
    batch_size: int
    batches: tuple

    @classmethod
    def build(cls, groups, batch_size):
        if batch_size < 1:
            raise DataError(f'Batch size must be >= 1, got {batch_size}')
        if not groups:
            raise DataError('Cannot plan batches without any resolution group')
        queues = [
            [(index, start) for start in range(0, len(group), batch_size)]
            for index, group in enumerate(groups)
        ]
        batches = []
        depth = max(len(queue) for queue in queues)
        for position in range(depth):
            batches.extend(queue[position] for queue in queues if position < len(queue))
        return cls(batch_size=batch_size, batches=tuple(batches))

    def __len__(self):
        return len(self.batches)


class BatchLoader:
    """Serves planned batches as float32 B x 3 x h x w tensors in [-1, 1].

    ``next_batch`` raises EpochEnd once the plan is exhausted; ``reset``
    starts the next epoch in the same order.
    """

    def __init__(self, groups, batch_size, prefetch=False):
        self.groups = groups
        self.plan = BatchPlan.build(groups, batch_size)
        self.position = 0
        self.prefetch = prefetch
        self._pool = ThreadPoolExecutor(max_workers=1) if prefetch else None
        self._pending = None

    def __len__(self):
        return len(self.plan)

    def members(self, position):
        """(group, records) served at ``position`` of the plan."""
        group_index, start = self.plan.batches[position]
        group = self.groups[group_index]
        return group, group.records[start:start + self.plan.batch_size]

    def load(self, position):
        group, members = self.members(position)
        images = np.stack([load_for_training(record.path, group.height, group.width) for record in members])
        return images.astype(np.float32), group.group_id

    def next_batch(self):
        if self.position >= len(self.plan):
            raise EpochEnd(f'All {len(self.plan)} batches of this epoch have been served')
        if self._pending is not None:
            pending_position, future = self._pending
            self._pending = None
            batch = future.result() if pending_position == self.position else self.load(self.position)
        else:
            batch = self.load(self.position)
        self.position += 1
        if self._pool is not None and self.position < len(self.plan):
            self._pending = (self.position, self._pool.submit(self.load, self.position))
        return batch

    def reset(self):
        self.position = 0
        self._pending = None

    def seek(self, position):
        """Resume mid-epoch at ``position``."""
        if not 0 <= position <= len(self.plan):
            raise DataError(f'Batch position {position} outside 0..{len(self.plan)}')
        self.position = position
        self._pending = None

    def __iter__(self):
        while True:
            try:
                yield self.next_batch()
            except EpochEnd:
                return

    def close(self):
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None
