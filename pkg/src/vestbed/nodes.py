"""Hardware nodes (periodic sensor publishers) and actuator/sensor services.

These are the only nodes that talk to the bus manager. Behaviors reach the
hardware exclusively through the topics and services registered here.
"""

from __future__ import annotations

import logging
import math

from . import devices as dev
from .bus import WRITE, WRITE_THEN_READ, BusManager, DeviceNack
from .core import Core, HandlerFailed, Scheduler

log = logging.getLogger(__name__)

TOPIC_TOUCH = "tpc_touch"
TOPIC_GESTURE = "tpc_gesture"
TOPIC_FORCE = "tpc_force"
TOPIC_TRACK = "tpc_track"
TOPIC_SPEECH = "tpc_speech"

SRV_SONAR = "srv_sonar"
SRV_TEMP = "srv_temp"
SRV_LED = "srv_led"
SRV_SERVO = "srv_servo"
SRV_TTS = "srv_tts"
SRV_IOT = "iot_srv"


class SensorFault(HandlerFailed):
    """A service could not reach its sensor over the bus."""


def round_half_up(x: float, decimals: int = 0) -> float:
    scale = 10 ** decimals
    return math.floor(x * scale + 0.5) / scale


class TouchPublisher:
    """Reads the MPR121 each period and publishes the low 8 pad bits."""

    def __init__(self, core: Core, sched: Scheduler, busman: BusManager,
                 bus_id: int = 0, period: float = 1.0) -> None:
        self.busman = busman
        self.bus_id = bus_id
        self.pub = core.advertise("touch_publisher", TOPIC_TOUCH, 1)
        self.timer = sched.every(period, self.tick, name="touch_publisher")

    def tick(self) -> None:
        try:
            data = self.busman.execute(self.bus_id, dev.ADDR_MPR121,
                                       WRITE_THEN_READ, dev.Mpr121.REG_TOUCH_STATUS,
                                       (), 2)
        except DeviceNack:
            log.warning("touch publisher: bus nack, publish skipped")
            return
        self.pub.publish(data[0] & 0xFF)


class GesturePublisher:
    def __init__(self, core: Core, sched: Scheduler, busman: BusManager,
                 bus_id: int = 0, period: float = 1.0) -> None:
        self.busman = busman
        self.bus_id = bus_id
        self.pub = core.advertise("gesture_publisher", TOPIC_GESTURE, 1)
        self.timer = sched.every(period, self.tick, name="gesture_publisher")

    def tick(self) -> None:
        try:
            data = self.busman.execute(self.bus_id, dev.ADDR_GESTURE,
                                       WRITE_THEN_READ, 0x00, (), 1)
        except DeviceNack:
            log.warning("gesture publisher: bus nack, publish skipped")
            return
        self.pub.publish(data[0])


class ForcePublisher:
    """Reads both ADC channels and publishes the pair in one message."""

    def __init__(self, core: Core, sched: Scheduler, busman: BusManager,
                 bus_id: int = 0, period: float = 1.0) -> None:
        self.busman = busman
        self.bus_id = bus_id
        self.pub = core.advertise("force_publisher", TOPIC_FORCE, 1)
        self.timer = sched.every(period, self.tick, name="force_publisher")

    def _read_channel(self, channel: int) -> int:
        cfg = dev.Ads1115.config_for_channel(channel)
        self.busman.execute(self.bus_id, dev.ADDR_ADS1115, WRITE,
                            dev.Ads1115.REG_CONFIG, cfg, 0)
        data = self.busman.execute(self.bus_id, dev.ADDR_ADS1115, WRITE_THEN_READ,
                                   dev.Ads1115.REG_CONVERSION, (), 2)
        return (data[0] << 8) | data[1]

    def tick(self) -> None:
        try:
            left = self._read_channel(0)
            right = self._read_channel(1)
        except DeviceNack:
            log.warning("force publisher: bus nack, publish skipped")
            return
        self.pub.publish({"left": left, "right": right})


class RangePublisher:
    """Publishes the (left, center, right) ToF triple in millimeters."""

    def __init__(self, core: Core, sched: Scheduler, busman: BusManager,
                 bus_id: int = 0, period: float = 1.0) -> None:
        self.busman = busman
        self.bus_id = bus_id
        self.pub = core.advertise("range_publisher", TOPIC_TRACK, 1)
        self.timer = sched.every(period, self.tick, name="range_publisher")

    def _read_one(self, which: str) -> int:
        try:
            data = self.busman.execute(self.bus_id, dev.ADDR_VL53L0X[which],
                                       WRITE_THEN_READ, 0x00, (), 3)
        except DeviceNack:
            # failed sensor reads as out-of-range so the tracker stays defined
            return dev.Vl53l0x.MAX_MM
        return (data[1] << 8) | data[2]

    def tick(self) -> None:
        triple = tuple(self._read_one(which) for which in ("left", "center", "right"))
        self.pub.publish(triple)


class SonarService:
    """Event-based ranger: ping, wait out the ranging cycle, read centimeters."""

    def __init__(self, core: Core, sched: Scheduler, busman: BusManager,
                 bus_id: int = 0) -> None:
        self.sched = sched
        self.busman = busman
        self.bus_id = bus_id
        core.register_service(SRV_SONAR, self.handle)

    def handle(self, request) -> int:
        try:
            self.busman.execute(self.bus_id, dev.ADDR_SRF02, WRITE,
                                dev.Srf02.REG_COMMAND, (dev.Srf02.CMD_RANGE_CM,), 0)
            self.sched.sleep(dev.Srf02.RANGING_S)
            data = self.busman.execute(self.bus_id, dev.ADDR_SRF02, WRITE_THEN_READ,
                                       dev.Srf02.REG_RANGE_HIGH, (), 2)
        except DeviceNack as exc:
            raise SensorFault(f"sonar: {exc}") from exc
        return (data[0] << 8) | data[1]


class TemperatureService:
    """Reports ambient temperature in Fahrenheit at tenths precision."""

    def __init__(self, core: Core, sched: Scheduler, busman: BusManager,
                 bus_id: int = 0) -> None:
        self.busman = busman
        self.bus_id = bus_id
        core.register_service(SRV_TEMP, self.handle)

    def handle(self, request) -> float:
        try:
            data = self.busman.execute(self.bus_id, dev.ADDR_MCP9808, WRITE_THEN_READ,
                                       dev.Mcp9808.REG_TEMP, (), 2)
        except DeviceNack as exc:
            raise SensorFault(f"temperature: {exc}") from exc
        celsius = dev.Mcp9808.decode((data[0] << 8) | data[1])
        return round_half_up(celsius * 9.0 / 5.0 + 32.0, 1)


class LedService:
    """Drives the three RGB channels of the PWM chip."""

    def __init__(self, core: Core, sched: Scheduler, busman: BusManager,
                 bus_id: int = 0) -> None:
        self.busman = busman
        self.bus_id = bus_id
        self.color = (0, 0, 0)
        core.register_service(SRV_LED, self.handle)

    def handle(self, request) -> dict:
        r, g, b = request["r"], request["g"], request["b"]
        for duty in (r, g, b):
            if not 0 <= duty <= dev.Pca9685.MAX_DUTY:
                raise dev.RangeError(f"duty {duty} outside 0-4095")
        for channel, duty in enumerate((r, g, b)):
            reg = dev.Pca9685.REG_LED_BASE + 4 * channel
            self.busman.execute(self.bus_id, dev.ADDR_PCA9685, WRITE, reg,
                                (duty & 0xFF, (duty >> 8) & 0xFF), 0)
        self.color = (r, g, b)
        return {"color": list(self.color)}


class ServoService:
    """Neck servo service: absolute moves, a head-shake pattern, angle queries."""

    SHAKE_AMPLITUDE_DEG = 20.0
    SHAKE_HZ = 2.0
    SHAKE_CYCLES = 3
    REST_DEG = 90.0

    def __init__(self, core: Core, sched: Scheduler) -> None:
        self.sched = sched
        self.model = dev.ServoModel(self.REST_DEG)
        core.register_service(SRV_SERVO, self.handle)

    def handle(self, request) -> dict:
        command = request["command"]
        if command == "set_angle":
            self.model.set_target(float(request["deg"]), self.sched.now)
            return {"target": self.model.target}
        if command == "get_angle":
            return {"angle": self.model.update(self.sched.now),
                    "target": self.model.target}
        if command == "shake_head":
            self._schedule_shake()
            return {"status": "shaking"}
        raise ValueError(f"unknown servo command {command!r}")

    def _schedule_shake(self) -> None:
        half = 0.5 / self.SHAKE_HZ
        t0 = self.sched.now
        hi = self.REST_DEG + self.SHAKE_AMPLITUDE_DEG
        lo = self.REST_DEG - self.SHAKE_AMPLITUDE_DEG
        for i in range(self.SHAKE_CYCLES * 2):
            target = hi if i % 2 == 0 else lo
            self.sched.at(t0 + i * half,
                          lambda deg=target: self.model.set_target(deg, self.sched.now))
        self.sched.at(t0 + self.SHAKE_CYCLES * 2 * half,
                      lambda: self.model.set_target(self.REST_DEG, self.sched.now))
