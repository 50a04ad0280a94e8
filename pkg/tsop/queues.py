"""
Message queue representations.

The representation of a tag's queue is chosen from its bound, its arity and
its kind:

  NoQueue       bounded, no arguments: the automaton state already knows the count
  CounterQueue  unbounded, no arguments: only the number of messages matters
  SlotQueue     1-bounded state message with arguments: at most one payload
  Carried       1-bounded operation with arguments: the payload stays with the
                invoker, who is the only one able to consume it
  FifoQueue     everything else

Payloads are always stored and returned as argument tuples.
"""

from abc import ABC, abstractmethod
from collections import deque
from typing import Optional

from .semantics import Bound


class QueueRepr(ABC):
    kind = "abstract"

    @abstractmethod
    def put(self, payload: tuple) -> None:
        """Store one message."""

    @abstractmethod
    def take(self) -> tuple:
        """Remove one message and return its payload."""

    def occupancy(self) -> Optional[int]:
        """Messages held, or None when the representation keeps no count."""
        return None

    def is_empty(self) -> bool:
        return not self.occupancy()


class NoQueue(QueueRepr):
    kind = "none"

    def put(self, payload: tuple) -> None:
        pass

    def take(self) -> tuple:
        return ()


class Carried(NoQueue):
    kind = "carried"


class CounterQueue(QueueRepr):
    kind = "counter"

    def __init__(self):
        self.count = 0

    def put(self, payload: tuple) -> None:
        self.count += 1

    def take(self) -> tuple:
        self.count -= 1
        return ()

    def occupancy(self) -> Optional[int]:
        return self.count


class SlotQueue(QueueRepr):
    kind = "slot"

    def __init__(self):
        self.value = None

    def put(self, payload: tuple) -> None:
        self.value = payload

    def take(self) -> tuple:
        payload, self.value = self.value, None
        return payload if payload is not None else ()

    def occupancy(self) -> Optional[int]:
        return 0 if self.value is None else 1


class FifoQueue(QueueRepr):
    kind = "fifo"

    def __init__(self):
        self.items = deque()

    def put(self, payload: tuple) -> None:
        self.items.append(payload)

    def take(self) -> tuple:
        return self.items.popleft()

    def occupancy(self) -> Optional[int]:
        return len(self.items)


def queue_kind(limit: Bound, arity: int, operation: bool) -> type:
    """Pick the QueueRepr class for a tag."""
    if arity == 0:
        return CounterQueue if limit.unbounded else NoQueue
    if limit.limit == 1:
        return Carried if operation else SlotQueue
    return FifoQueue
