"""Topic-based pub/sub core under a virtual simulation clock.

Delivery is at-most-once, in-order, no persistence: late subscribers miss
history. All timestamps come from the virtual clock, never the wall clock,
so a fixed sequence of (advance, publish) calls always produces the same
envelope log. Timers due at the same instant fire in registration order;
that tie-break is arbitrary but must stay fixed for replay determinism.
"""

from __future__ import annotations

import heapq
import threading
from collections import deque
from dataclasses import dataclass
from typing import Callable

from .messages import MESSAGE_KINDS, kind_of

DEFAULT_TICK = 1.0 / 30.0  # matches the ~30 fps detector cadence


class BusError(Exception):
    pass


class UnknownTopicError(BusError):
    pass


class DuplicateTopicError(BusError):
    pass


class TopicNameError(BusError):
    pass


class SchemaMismatchError(BusError):
    pass


class ClockError(BusError):
    pass


@dataclass(frozen=True)
class Envelope:
    topic: str
    seq: int
    sim_time: float
    payload: object


class SimClock:
    """Monotonic virtual clock; `tick` is the default step (1/30 s)."""

    def __init__(self, tick: float = DEFAULT_TICK):
        if tick <= 0:
            raise ClockError(f"tick must be positive, got {tick}")
        self.tick = tick
        self.now = 0.0


class Subscription:
    """Ordered stream of envelopes for one subscriber.

    Safe to drain from another thread; delivery order per handle matches
    publish order with no gaps or duplicates.
    """

    def __init__(self, topic: str, bus: "Bus"):
        self.topic = topic
        self._bus = bus
        self._queue: deque[Envelope] = deque()
        self._lock = threading.Lock()
        self.active = True

    def _deliver(self, env: Envelope) -> None:
        with self._lock:
            self._queue.append(env)

    def poll(self) -> Envelope | None:
        """Next envelope, or None if the queue is empty."""
        with self._lock:
            return self._queue.popleft() if self._queue else None

    def drain(self) -> list[Envelope]:
        """All queued envelopes, oldest first."""
        with self._lock:
            out = list(self._queue)
            self._queue.clear()
        return out

    def __len__(self) -> int:
        with self._lock:
            return len(self._queue)

    def cancel(self) -> None:
        """Detach from the topic; other subscribers are unaffected."""
        if self.active:
            self.active = False
            self._bus._detach(self)


class TimerHandle:
    def __init__(self, when: float, order: int, callback: Callable[[], None]):
        self.when = when
        self.order = order
        self.callback = callback
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


class _Topic:
    def __init__(self, name: str, schema_id: str):
        self.name = name
        self.schema_id = schema_id
        self.next_seq = 1
        self.subscribers: list[Subscription] = []


class Bus:
    """Deterministic single-threaded pub/sub core with a timer wheel."""

    def __init__(self, clock: SimClock | None = None):
        self.clock = clock or SimClock()
        self._topics: dict[str, _Topic] = {}
        self._timers: list[tuple[float, int, TimerHandle]] = []
        self._timer_order = 0
        self._advancing = False
        self.publish_hook: Callable[[Envelope], None] | None = None

    @property
    def now(self) -> float:
        return self.clock.now

    # -- topics ------------------------------------------------------------

    def create_topic(self, name: str, schema_id: str) -> _Topic:
        if not name:
            raise TopicNameError("topic name must be non-empty")
        if name in self._topics:
            raise DuplicateTopicError(f"topic already exists: {name}")
        if schema_id not in MESSAGE_KINDS:
            raise SchemaMismatchError(f"unknown schema id: {schema_id}")
        topic = _Topic(name, schema_id)
        self._topics[name] = topic
        return topic

    def has_topic(self, name: str) -> bool:
        return name in self._topics

    def topic_schema(self, name: str) -> str:
        return self._get(name).schema_id

    def topics(self) -> dict[str, str]:
        return {name: t.schema_id for name, t in self._topics.items()}

    def last_seq(self, name: str) -> int:
        """Sequence number of the most recent envelope on a topic (0 if none)."""
        return self._get(name).next_seq - 1

    def _get(self, name: str) -> _Topic:
        try:
            return self._topics[name]
        except KeyError:
            raise UnknownTopicError(f"no such topic: {name}") from None

    # -- pub/sub -----------------------------------------------------------

    def publish(self, topic: str, payload) -> Envelope:
        t = self._get(topic)
        if kind_of(payload) != t.schema_id:
            raise SchemaMismatchError(
                f"topic {topic} carries {t.schema_id}, got {kind_of(payload)}"
            )
        env = Envelope(topic=topic, seq=t.next_seq, sim_time=self.clock.now, payload=payload)
        t.next_seq += 1
        if self.publish_hook is not None:
            self.publish_hook(env)
        # Snapshot: a subscriber attaching from a delivery callback must not
        # receive this envelope.
        for sub in list(t.subscribers):
            if sub.active:
                sub._deliver(env)
        return env

    def subscribe(self, topic: str) -> Subscription:
        t = self._get(topic)
        sub = Subscription(topic, self)
        t.subscribers.append(sub)
        return sub

    def _detach(self, sub: Subscription) -> None:
        t = self._topics.get(sub.topic)
        if t is not None and sub in t.subscribers:
            t.subscribers.remove(sub)

    # -- virtual time ------------------------------------------------------

    def call_at(self, when: float, callback: Callable[[], None]) -> TimerHandle:
        """Schedule `callback` at sim time `when` (fires during advance)."""
        handle = TimerHandle(when, self._timer_order, callback)
        self._timer_order += 1
        heapq.heappush(self._timers, (when, handle.order, handle))
        return handle

    def call_later(self, delay: float, callback: Callable[[], None]) -> TimerHandle:
        return self.call_at(self.clock.now + delay, callback)

    def advance(self, dt: float) -> list[TimerHandle]:
        """Move the clock forward by dt, firing timers due in (now, now+dt].

        Ties fire in registration order. Callbacks may schedule further
        timers; those inside the window fire during the same call.
        """
        if dt < 0:
            raise ClockError(f"cannot advance by negative dt: {dt}")
        target = self.clock.now + dt
        return self._run_until(target)

    def advance_to(self, when: float) -> list[TimerHandle]:
        if when < self.clock.now:
            raise ClockError(f"cannot rewind clock from {self.clock.now} to {when}")
        return self._run_until(when)

    def _run_until(self, target: float) -> list[TimerHandle]:
        if self._advancing:
            raise ClockError("advance() called from inside a timer callback")
        fired: list[TimerHandle] = []
        start = self.clock.now
        if target == start:
            return fired  # advance(0) fires nothing by contract
        self._advancing = True
        try:
            while self._timers:
                when, _, handle = self._timers[0]
                if when > target:
                    break
                heapq.heappop(self._timers)
                if handle.cancelled:
                    continue
                # Overdue timers (scheduled at or before the window start)
                # fire now without rewinding the clock.
                self.clock.now = max(self.clock.now, when)
                handle.callback()
                fired.append(handle)
            self.clock.now = target
        finally:
            self._advancing = False
        return fired
