"""Behavior nodes: sensor interpretation and responses.

Behaviors consume topics and call services only; none of them holds a bus
manager reference, so swapping real hardware nodes in under them would not
change a line here.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .core import Core, HandlerFailed, Scheduler
from .devices import Ads1115, ServoModel
from .nodes import (SRV_IOT, SRV_LED, SRV_SERVO, SRV_SONAR, SRV_TEMP, SRV_TTS,
                    TOPIC_FORCE, TOPIC_GESTURE, TOPIC_TOUCH, TOPIC_TRACK)
from .scenario import GESTURE_CODES, WorldState

log = logging.getLogger(__name__)

THANKS_PHRASE = "thank you"
GREETING_PHRASE = "Hello"
DEFAULT_HUG_PHRASE = "I love hugs"
HUG_LED_COLOR = (0, 4095, 0)

CMD_SERVO = 1
CMD_LED = 2
CMD_TTS = 3
CMD_SONAR = 4
CMD_TEMPERATURE = 5
CMD_READ_TOUCH = 6
CMD_SHAKE_HEAD = 7
COMMAND_CODES = (CMD_SERVO, CMD_LED, CMD_TTS, CMD_SONAR, CMD_TEMPERATURE,
                 CMD_READ_TOUCH, CMD_SHAKE_HEAD)


class UnknownCommand(HandlerFailed):
    pass


def default_hug_threshold() -> int:
    """ADC code at the 2.0 N hug threshold, from the FSR divider model."""
    world = WorldState(force_left=2.0, force_right=2.0)
    return Ads1115.convert(0, world)


class TouchThanksBehavior:
    """Says a thank-you phrase on the rising edge of any touch."""

    def __init__(self, core: Core, phrase: str = THANKS_PHRASE) -> None:
        self.core = core
        self.phrase = phrase
        self._prev = 0
        core.subscribe("touch_thanks", TOPIC_TOUCH, 1, self.on_msg)

    def on_msg(self, msg) -> None:
        byte = msg.payload
        if self._prev == 0 and byte != 0:
            self.core.call_service(SRV_TTS, {"text": self.phrase})
        self._prev = byte


class WaveGreetingBehavior:
    """Greets when the gesture sensor reports a wave; other codes are ignored."""

    def __init__(self, core: Core, phrase: str = GREETING_PHRASE) -> None:
        self.core = core
        self.phrase = phrase
        core.subscribe("wave_greeting", TOPIC_GESTURE, 1, self.on_msg)

    def on_msg(self, msg) -> None:
        if msg.payload == GESTURE_CODES["wave"]:
            self.core.call_service(SRV_TTS, {"text": self.phrase})


@dataclass
class HugConfig:
    # FSR voltage falls with force, so "force above threshold" is
    # "code at or below threshold_code".
    threshold_code: int = field(default_factory=default_hug_threshold)
    phrase: str = DEFAULT_HUG_PHRASE


class HugBehavior:
    """LED change plus a phrase when both sides are squeezed in one sample."""

    def __init__(self, core: Core, config: HugConfig | None = None) -> None:
        self.core = core
        self.config = config or HugConfig()
        self._armed = True
        core.subscribe("hug", TOPIC_FORCE, 1, self.on_msg)

    def on_msg(self, msg) -> None:
        thr = self.config.threshold_code
        squeezing = msg.payload["left"] <= thr and msg.payload["right"] <= thr
        if squeezing and self._armed:
            self._armed = False
            self.core.call_service(SRV_LED, {"r": HUG_LED_COLOR[0],
                                             "g": HUG_LED_COLOR[1],
                                             "b": HUG_LED_COLOR[2]})
            self.core.call_service(SRV_TTS, {"text": self.config.phrase})
        elif not squeezing:
            self._armed = True


@dataclass
class TrackerConfig:
    step_deg: float = 10.0
    # tie rule: center wins, then left


class TrackerBehavior:
    """Turns the neck toward whichever side sensor sees the nearest object."""

    def __init__(self, core: Core, config: TrackerConfig | None = None) -> None:
        self.core = core
        self.config = config or TrackerConfig()
        core.subscribe("tracker", TOPIC_TRACK, 1, self.on_msg)

    def on_msg(self, msg) -> None:
        left, center, right = msg.payload
        nearest = min(left, center, right)
        if center == nearest:
            return
        step = self.config.step_deg if left == nearest else -self.config.step_deg
        current = self.core.call_service(SRV_SERVO, {"command": "get_angle"})["angle"]
        target = min(ServoModel.MAX_DEG, max(ServoModel.MIN_DEG, current + step))
        self.core.call_service(SRV_SERVO, {"command": "set_angle", "deg": target})


class IortService:
    """Dispatch point for remote commands; caches the latest touch byte."""

    def __init__(self, core: Core) -> None:
        self.core = core
        self.touch_byte = 0
        core.subscribe("iot_srv", TOPIC_TOUCH, 1, self._on_touch)
        core.register_service(SRV_IOT, self.handle)

    def _on_touch(self, msg) -> None:
        self.touch_byte = msg.payload

    def handle(self, request):
        code = request["code"]
        args = request.get("args")
        if code == CMD_SERVO:
            return self.core.call_service(SRV_SERVO,
                                          {"command": "set_angle", "deg": float(args)})
        if code == CMD_LED:
            r, g, b = args
            return self.core.call_service(SRV_LED, {"r": r, "g": g, "b": b})
        if code == CMD_TTS:
            text = args["text"] if isinstance(args, dict) else str(args)
            return self.core.call_service(SRV_TTS, {"text": text})
        if code == CMD_SONAR:
            return self.core.call_service(SRV_SONAR, {})
        if code == CMD_TEMPERATURE:
            return f"{self.core.call_service(SRV_TEMP, {}):.1f}"
        if code == CMD_READ_TOUCH:
            return self.touch_byte
        if code == CMD_SHAKE_HEAD:
            return self.core.call_service(SRV_SERVO, {"command": "shake_head"})
        raise UnknownCommand(f"command code {code}")


class IortBehavior:
    """Polls the gateway for queued commands and posts results back."""

    def __init__(self, core: Core, sched: Scheduler, client, robot_id: str,
                 period: float = 1.0) -> None:
        self.core = core
        self.client = client
        self.robot_id = robot_id
        self.timer = sched.every(period, self.tick, name="iort_behavior")

    def tick(self) -> None:
        from .gateway import GatewayUnreachable
        try:
            envelope = self.client.get_command(self.robot_id)
        except GatewayUnreachable:
            log.warning("iort: gateway unreachable, retrying next tick")
            return
        if envelope is None:
            return
        try:
            data = self.core.call_service(
                SRV_IOT, {"code": envelope["code"], "args": envelope.get("args")})
        except HandlerFailed as exc:
            data = {"error": str(exc)}
        try:
            self.client.set_data(self.robot_id, envelope["seq"], data)
        except GatewayUnreachable:
            log.warning("iort: result post failed, gateway unreachable")
