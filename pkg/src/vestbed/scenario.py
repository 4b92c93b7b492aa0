"""Scripted physical ground truth and the scenario file grammar.

A scenario is a line-oriented script of timestamped directives that mutate a
WorldState. Virtual devices sample the world (optionally through per-sensor
Gaussian noise) instead of touching hardware.
"""

from __future__ import annotations

import shlex
import zlib
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

GESTURES = ("none", "swipe", "air_push", "hover", "circle", "wave")
GESTURE_CODES = {name: i for i, name in enumerate(GESTURES)}
N_TOUCH_PADS = 12
SIDES = ("left", "center", "right")


class ParseError(Exception):
    def __init__(self, line_no: int, msg: str) -> None:
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


class RangeError(Exception):
    pass


@dataclass
class ScenarioEvent:
    at: float
    action: str
    args: tuple
    line_no: int = 0


@dataclass
class WorldState:
    """Ground truth the virtual sensors observe."""

    touch_contacts: set[int] = field(default_factory=set)
    force_left: float = 0.0   # newtons
    force_right: float = 0.0
    obj_dist: dict[str, float] = field(
        default_factory=lambda: {"left": 2.0, "center": 2.0, "right": 2.0})  # meters
    sonar_dist: float = 2.0   # meters
    ambient_c: float = 22.0
    gesture: str = "none"
    pending_speech: deque = field(default_factory=deque)
    hand_image: Optional[str] = None
    seed: int = 0
    sigma: dict[str, float] = field(default_factory=dict)  # per-sensor noise, default 0

    def consume_gesture(self) -> str:
        """Return the pending gesture and reset it (edge-triggered event)."""
        g = self.gesture
        self.gesture = "none"
        return g

    def take_hand_image(self) -> Optional[str]:
        path = self.hand_image
        self.hand_image = None
        return path

    def _truth(self, sensor_id: str) -> float:
        if sensor_id == "temp":
            return self.ambient_c
        if sensor_id == "force_left":
            return self.force_left
        if sensor_id == "force_right":
            return self.force_right
        if sensor_id == "sonar":
            return self.sonar_dist
        if sensor_id.startswith("obj_"):
            side = sensor_id[4:]
            if side in self.obj_dist:
                return self.obj_dist[side]
        raise KeyError(f"unknown sensor id {sensor_id!r}")

    def sample(self, sensor_id: str, t: float) -> float:
        """Ground truth plus zero-mean Gaussian noise with this sensor's sigma.

        The noise stream is derived from (seed, sensor_id, t) so replays are
        identical sample by sample.
        """
        truth = self._truth(sensor_id)
        sigma = self.sigma.get(sensor_id, 0.0)
        if sigma == 0.0:
            return truth
        key = (self.seed & 0xFFFFFFFF,
               zlib.crc32(sensor_id.encode("utf-8")),
               int(round(t * 1e6)) & 0xFFFFFFFFFFFF)
        rng = np.random.default_rng(key)
        return truth + sigma * float(rng.standard_normal())


def parse_scenario(text: str) -> list[ScenarioEvent]:
    """Parse scenario text into events sorted by (time, file order).

    Blank lines and # comments are ignored; a malformed directive raises
    ParseError carrying the line number.
    """
    events: list[ScenarioEvent] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        try:
            words = shlex.split(raw, comments=True)
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from exc
        if not words:
            continue
        if words[0] != "at" or len(words) < 3:
            raise ParseError(line_no, "expected 'at <seconds> <action> ...'")
        try:
            at = float(words[1])
        except ValueError:
            raise ParseError(line_no, f"bad time {words[1]!r}") from None
        if at < 0:
            raise ParseError(line_no, "time must be non-negative")
        action, args = _parse_action(line_no, words[2], words[3:])
        events.append(ScenarioEvent(at, action, args, line_no))
    events.sort(key=lambda e: e.at)  # stable: preserves file order at equal times
    return events


def _parse_action(line_no: int, verb: str, rest: list[str]) -> tuple[str, tuple]:
    def need(n: int) -> None:
        if len(rest) != n:
            raise ParseError(line_no, f"{verb} takes {n} argument(s)")

    def number(word: str) -> float:
        try:
            return float(word)
        except ValueError:
            raise ParseError(line_no, f"bad number {word!r}") from None

    if verb == "set_temp":
        need(1)
        return "set_temp", (number(rest[0]),)
    if verb == "touch":
        need(2)
        if rest[0] not in ("on", "off"):
            raise ParseError(line_no, "touch wants on|off")
        try:
            pad = int(rest[1])
        except ValueError:
            raise ParseError(line_no, f"bad pad index {rest[1]!r}") from None
        return ("touch_on" if rest[0] == "on" else "touch_off"), (pad,)
    if verb == "force":
        need(2)
        if rest[0] not in ("left", "right"):
            raise ParseError(line_no, "force wants left|right")
        return "force", (rest[0], number(rest[1]))
    if verb == "object":
        need(2)
        if rest[0] not in SIDES:
            raise ParseError(line_no, "object wants left|center|right")
        return "object", (rest[0], number(rest[1]))
    if verb == "sonar":
        need(1)
        return "sonar", (number(rest[0]),)
    if verb == "gesture":
        need(1)
        if rest[0] not in GESTURES[1:]:
            raise ParseError(line_no, f"unknown gesture {rest[0]!r}")
        return "gesture", (rest[0],)
    if verb == "say":
        need(1)
        return "say", (rest[0],)
    if verb == "show_hand":
        need(1)
        return "show_hand", (rest[0],)
    raise ParseError(line_no, f"unknown action {verb!r}")


def apply(world: WorldState, event: ScenarioEvent) -> WorldState:
    """Apply one event; only the fields named by the action change."""
    action, args = event.action, event.args
    if action == "set_temp":
        world.ambient_c = args[0]
    elif action in ("touch_on", "touch_off"):
        pad = args[0]
        if not 0 <= pad < N_TOUCH_PADS:
            raise RangeError(f"touch pad {pad} outside 0-{N_TOUCH_PADS - 1}")
        if action == "touch_on":
            world.touch_contacts.add(pad)
        else:
            world.touch_contacts.discard(pad)
    elif action == "force":
        side, newtons = args
        if newtons < 0:
            raise RangeError("force must be >= 0")
        if side == "left":
            world.force_left = newtons
        else:
            world.force_right = newtons
    elif action == "object":
        side, meters = args
        if meters < 0:
            raise RangeError("distance must be >= 0")
        world.obj_dist[side] = meters
    elif action == "sonar":
        if args[0] < 0:
            raise RangeError("distance must be >= 0")
        world.sonar_dist = args[0]
    elif action == "gesture":
        world.gesture = args[0]
    elif action == "say":
        world.pending_speech.append(args[0])
    elif action == "show_hand":
        world.hand_image = args[0]
    else:
        raise ValueError(f"unknown action {action!r}")
    return world
