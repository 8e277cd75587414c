"""In-process communication channel with a constant delay of whole steps."""
from __future__ import annotations

import collections
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelConfig:
    delay: float = 0.0
    sample_period: float = 0.001

    def __post_init__(self):
        if self.delay < 0 or not self.sample_period > 0:
            raise ValueError("delay must be >= 0 and sample_period > 0")

    @property
    def delay_steps(self) -> int:
        return int(round(self.delay / self.sample_period))


def channel_transmit(value, config: ChannelConfig, buffer: collections.deque):
    """Push ``value`` and pop the one sent ``delay_steps`` calls ago.

    An empty buffer is primed with copies of the first value, so the output
    holds that value until the delayed samples arrive.
    """
    n = config.delay_steps
    if n == 0:
        return value
    if not buffer:
        buffer.extend(np.array(value, copy=True) for _ in range(n))
    buffer.append(np.array(value, copy=True))
    return buffer.popleft()


class DelayLine:
    def __init__(self, config: ChannelConfig):
        self.config = config
        self.buffer: collections.deque = collections.deque()

    def __call__(self, value):
        return channel_transmit(value, self.config, self.buffer)
