"""Virtual-time message core: scheduler, topics, services, parameter store.

Everything in the simulator runs on one logical execution context driven by
the Scheduler. Time is integer microseconds internally so that replays are
bit-identical; the public API speaks float seconds.
"""

from __future__ import annotations

import heapq
import time as _wall
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

TICK_US = 1  # scheduler resolution: one tick = 1 microsecond
US = 1_000_000


class CoreError(Exception):
    pass


class ServiceUnavailable(CoreError):
    """Raised when call_service() names a service nobody registered."""


class HandlerFailed(CoreError):
    """A service handler raised; the message carries the handler's complaint."""


class StaleHandle(CoreError):
    """Publish attempted through a closed publisher handle."""


class DeadlockError(CoreError):
    """A wait cannot make progress because the event queue ran dry."""


def to_us(seconds: float) -> int:
    return int(round(seconds * US))


@dataclass
class Message:
    topic: str
    payload: Any
    stamp: float
    seq: int


class Scheduler:
    """Deterministic discrete-event scheduler.

    Events with equal due time fire in insertion order. Callbacks may re-enter
    the scheduler via sleep()/wait_for(), which advances virtual time by
    dispatching pending events; this is how a node "blocks" on a bus job
    without real threads.
    """

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Callable[[], None]]] = []
        self._insert_seq = 0
        self._now_us = 0
        self.dispatch_count = 0
        self.log: list[str] = []

    @property
    def now(self) -> float:
        return self._now_us / US

    @property
    def now_us(self) -> int:
        return self._now_us

    def at(self, t: float, fn: Callable[[], None]) -> None:
        """Schedule fn at absolute virtual time t (clamped to now)."""
        due = max(to_us(t), self._now_us)
        heapq.heappush(self._heap, (due, self._insert_seq, fn))
        self._insert_seq += 1

    def after(self, dt: float, fn: Callable[[], None]) -> None:
        due = self._now_us + max(to_us(dt), 0)
        heapq.heappush(self._heap, (due, self._insert_seq, fn))
        self._insert_seq += 1

    def step(self) -> bool:
        """Dispatch the single next event, advancing the clock to it."""
        if not self._heap:
            return False
        due, _, fn = heapq.heappop(self._heap)
        self._now_us = max(self._now_us, due)
        self.dispatch_count += 1
        fn()
        return True

    def run_until(self, t_end: float) -> int:
        """Dispatch every event due at or before t_end, in (time, seq) order.

        Returns the number of events dispatched. The clock lands on t_end;
        a callback that itself sleeps past t_end may leave it slightly later.
        """
        end_us = to_us(t_end)
        if end_us < self._now_us:
            raise ValueError("run_until target is in the past")
        before = self.dispatch_count
        while self._heap and self._heap[0][0] <= end_us:
            self.step()
        self._now_us = max(self._now_us, end_us)
        # a callback that slept past t_end moved the clock; nothing due at or
        # before the final clock may stay undelivered behind it
        while self._heap and self._heap[0][0] <= self._now_us:
            self.step()
        return self.dispatch_count - before

    def run_realtime(self, t_end: float, scale: float = 1.0) -> int:
        """run_until, but pacing virtual time against the wall clock."""
        end_us = to_us(t_end)
        before = self.dispatch_count
        while self._heap and self._heap[0][0] <= end_us:
            gap_s = (self._heap[0][0] - self._now_us) / US * scale
            if gap_s > 0:
                _wall.sleep(gap_s)
            self.step()
        self._now_us = max(self._now_us, end_us)
        return self.dispatch_count - before

    def sleep(self, dt: float) -> None:
        """Block the caller for dt virtual seconds, dispatching other events."""
        fired = [False]

        def marker() -> None:
            fired[0] = True

        self.after(dt, marker)
        while not fired[0]:
            if not self.step():
                raise DeadlockError("sleep with an empty event queue")

    def wait_for(self, pred: Callable[[], bool]) -> None:
        """Dispatch events until pred() holds."""
        while not pred():
            if not self.step():
                raise DeadlockError("wait_for with an empty event queue")

    def every(self, period: float, fn: Callable[[], None], start: float = 0.0,
              name: str = "timer") -> "TimerHandle":
        """Periodic timer firing at start, start+period, ... on a fixed grid."""
        if period <= 0:
            raise ValueError("timer period must be positive")
        handle = TimerHandle()
        period_us = to_us(period)

        def fire(due_us: int) -> None:
            if handle.cancelled:
                return
            nxt = due_us + period_us
            heapq.heappush(self._heap, (nxt, self._insert_seq, lambda: fire(nxt)))
            self._insert_seq += 1
            self.log_line("TIMER", name, f"period={period:g}")
            fn()

        first = max(to_us(start), self._now_us)
        heapq.heappush(self._heap, (first, self._insert_seq, lambda: fire(first)))
        self._insert_seq += 1
        return handle

    def log_line(self, kind: str, name: str, summary: str) -> None:
        self.log.append(f"{self.now:.6f}\t{kind}\t{name}\t{summary}")


class TimerHandle:
    def __init__(self) -> None:
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


@dataclass
class Subscription:
    node: str
    topic: str
    queue_size: int
    callback: Callable[[Message], None]
    buffer: deque = field(default_factory=deque)
    active: bool = True
    dispatch_pending: bool = False

    def cancel(self) -> None:
        self.active = False
        self.buffer.clear()


class PublisherHandle:
    def __init__(self, core: "Core", node: str, topic: str) -> None:
        self._core = core
        self.node = node
        self.topic = topic
        self.closed = False

    def publish(self, payload: Any) -> int:
        return self._core.publish(self, payload)

    def close(self) -> None:
        self.closed = True


@dataclass
class ServiceEndpoint:
    name: str
    handler: Callable[[Any], Any]
    calls: int = 0
    cum_latency: float = 0.0


class _Topic:
    def __init__(self, name: str) -> None:
        self.name = name
        self.next_seq = 0
        self.subs: list[Subscription] = []
        self.published = 0


class Core:
    """Topic fan-out, service registry and the local parameter store."""

    def __init__(self, sched: Scheduler) -> None:
        self.sched = sched
        self._topics: dict[str, _Topic] = {}
        self._services: dict[str, ServiceEndpoint] = {}
        self._params: dict[str, str] = {}

    # -- topics ------------------------------------------------------------

    def _topic(self, name: str) -> _Topic:
        if name not in self._topics:
            self._topics[name] = _Topic(name)
        return self._topics[name]

    def advertise(self, node: str, topic: str, queue_size: int) -> PublisherHandle:
        if not topic:
            raise ValueError("topic name must be non-empty")
        if queue_size < 1:
            raise ValueError("queue_size must be >= 1")
        self._topic(topic)
        return PublisherHandle(self, node, topic)

    def publish(self, handle: PublisherHandle, payload: Any) -> int:
        if handle.closed:
            raise StaleHandle(f"publisher for {handle.topic} is closed")
        top = self._topic(handle.topic)
        msg = Message(handle.topic, payload, self.sched.now, top.next_seq)
        top.next_seq += 1
        top.published += 1
        delivered = 0
        for sub in top.subs:
            if not sub.active:
                continue
            if len(sub.buffer) >= sub.queue_size:
                sub.buffer.popleft()  # overflow drops the oldest message
            sub.buffer.append(msg)
            delivered += 1
            if not sub.dispatch_pending:
                sub.dispatch_pending = True
                self.sched.at(self.sched.now, lambda s=sub: self._dispatch(s))
        return delivered

    def subscribe(self, node: str, topic: str, queue_size: int,
                  callback: Callable[[Message], None]) -> Subscription:
        if queue_size < 1:
            raise ValueError("queue_size must be >= 1")
        sub = Subscription(node, topic, queue_size, callback)
        self._topic(topic).subs.append(sub)
        return sub

    def _dispatch(self, sub: Subscription) -> None:
        sub.dispatch_pending = False
        while sub.buffer and sub.active:
            msg = sub.buffer.popleft()
            self.sched.log_line("MSG", msg.topic,
                                f"to={sub.node} seq={msg.seq} payload={_short(msg.payload)}")
            sub.callback(msg)

    def published_counts(self) -> dict[str, int]:
        return {name: t.published for name, t in sorted(self._topics.items())}

    # -- services ----------------------------------------------------------

    def register_service(self, name: str, handler: Callable[[Any], Any]) -> None:
        if name in self._services:
            raise ValueError(f"service {name!r} already has a handler")
        self._services[name] = ServiceEndpoint(name, handler)

    def remove_service(self, name: str) -> None:
        self._services.pop(name, None)

    def call_service(self, name: str, request: Any = None) -> Any:
        ep = self._services.get(name)
        if ep is None:
            raise ServiceUnavailable(name)
        t0 = self.sched.now
        self.sched.log_line("SVC", name, f"request={_short(request)}")
        try:
            response = ep.handler(request)
        except HandlerFailed:
            raise
        except Exception as exc:
            raise HandlerFailed(f"{name}: {exc}") from exc
        finally:
            ep.calls += 1
            ep.cum_latency += self.sched.now - t0
        return response

    def service_stats(self) -> dict[str, tuple[int, float]]:
        return {n: (ep.calls, ep.cum_latency) for n, ep in sorted(self._services.items())}

    # -- parameters (local key -> string store) -----------------------------

    def set_param(self, key: str, value: str) -> None:
        self._params[key] = str(value)

    def get_param(self, key: str, default: Optional[str] = None) -> Optional[str]:
        return self._params.get(key, default)


def _short(value: Any, limit: int = 60) -> str:
    text = repr(value).replace("\t", " ").replace("\n", " ")
    return text if len(text) <= limit else text[: limit - 3] + "..."
