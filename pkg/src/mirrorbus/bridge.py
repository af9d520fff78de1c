"""JSON frame protocol between external clients and the bus.

One JSON object per WebSocket text frame. Client ops: subscribe,
unsubscribe, publish. Server pushes publish frames for subscribed topics
and error frames with codes unknown_op / unknown_topic / schema_mismatch /
bad_frame; a bad frame never kills the connection. Inbound publishes are
stamped onto the bus after the configured link delay (the wireless hop);
outbound delivery adds nothing.

Transport-agnostic: the service layer owns sockets and calls
handle_frame/flush; tests drive it synchronously.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .bus import Bus, SchemaMismatchError, Subscription, UnknownTopicError
from .logio import dumps
from .messages import SchemaError, decode_message, encode_message

ERR_UNKNOWN_OP = "unknown_op"
ERR_UNKNOWN_TOPIC = "unknown_topic"
ERR_SCHEMA_MISMATCH = "schema_mismatch"
ERR_BAD_FRAME = "bad_frame"

_OPS = {"subscribe", "unsubscribe", "publish"}
_FRAME_KEYS = {
    "subscribe": {"op", "topic"},
    "unsubscribe": {"op", "topic"},
    "publish": {"op", "topic", "msg"},
}


def error_frame(reason: str) -> dict:
    return {"op": "error", "reason": reason}


def publish_frame(topic: str, seq: int, sim_time: float, msg: dict) -> dict:
    return {"op": "publish", "topic": topic, "seq": seq, "sim_time": sim_time, "msg": msg}


@dataclass
class _Client:
    send: object  # callable(dict) -> None
    subs: dict[str, Subscription] = field(default_factory=dict)


class BridgeCore:
    """Per-bus bridge state: client registry, frame handling, delivery."""

    def __init__(self, bus: Bus, delay: float = 0.0):
        if delay < 0:
            raise ValueError(f"delay must be >= 0, got {delay}")
        self.bus = bus
        self.delay = delay
        self._clients: dict[int, _Client] = {}
        self._next_id = 1

    def register(self, send) -> int:
        """Attach a client; `send` receives outbound frames as dicts."""
        cid = self._next_id
        self._next_id += 1
        self._clients[cid] = _Client(send=send)
        return cid

    def unregister(self, cid: int) -> None:
        client = self._clients.pop(cid, None)
        if client is None:
            return
        for sub in client.subs.values():
            sub.cancel()

    @property
    def client_count(self) -> int:
        return len(self._clients)

    # -- inbound -----------------------------------------------------------

    def handle_text(self, cid: int, text: str) -> None:
        try:
            frame = json.loads(text)
        except json.JSONDecodeError:
            self._send(cid, error_frame(ERR_BAD_FRAME))
            return
        self.handle_frame(cid, frame)

    def handle_frame(self, cid: int, frame) -> None:
        client = self._clients.get(cid)
        if client is None:
            return
        if not isinstance(frame, dict) or "op" not in frame:
            self._send(cid, error_frame(ERR_BAD_FRAME))
            return
        op = frame["op"]
        if not isinstance(op, str) or op not in _OPS:
            self._send(cid, error_frame(ERR_UNKNOWN_OP))
            return
        if set(frame) != _FRAME_KEYS[op] or not isinstance(frame.get("topic"), str):
            self._send(cid, error_frame(ERR_BAD_FRAME))
            return
        topic = frame["topic"]
        if op == "subscribe":
            if not self.bus.has_topic(topic):
                self._send(cid, error_frame(ERR_UNKNOWN_TOPIC))
                return
            if topic not in client.subs:
                client.subs[topic] = self.bus.subscribe(topic)
        elif op == "unsubscribe":
            if not self.bus.has_topic(topic):
                self._send(cid, error_frame(ERR_UNKNOWN_TOPIC))
                return
            sub = client.subs.pop(topic, None)
            if sub is not None:
                sub.cancel()
        else:  # publish
            if not self.bus.has_topic(topic):
                self._send(cid, error_frame(ERR_UNKNOWN_TOPIC))
                return
            try:
                payload = decode_message(self.bus.topic_schema(topic), frame["msg"])
            except SchemaError:
                self._send(cid, error_frame(ERR_SCHEMA_MISMATCH))
                return
            if self.delay > 0:
                self.bus.call_later(self.delay, lambda: self._publish(topic, payload))
            else:
                self._publish(topic, payload)

    def _publish(self, topic: str, payload) -> None:
        try:
            self.bus.publish(topic, payload)
        except (UnknownTopicError, SchemaMismatchError):
            # Topic changed under a delayed publish; drop it.
            pass

    # -- outbound ----------------------------------------------------------

    def flush(self) -> int:
        """Forward queued envelopes to their subscribed clients.

        Called once per tick (and after each inbound frame in live mode);
        returns the number of frames sent.
        """
        sent = 0
        for client in list(self._clients.values()):
            for topic, sub in client.subs.items():
                for env in sub.drain():
                    client.send(
                        publish_frame(topic, env.seq, env.sim_time, encode_message(env.payload))
                    )
                    sent += 1
        return sent

    def _send(self, cid: int, frame: dict) -> None:
        client = self._clients.get(cid)
        if client is not None:
            client.send(frame)


def frame_to_text(frame: dict) -> str:
    return dumps(frame)
