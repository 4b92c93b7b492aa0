"""Register-level virtual models of the vest's I2C parts.

Each device exposes handle_transaction(reg, out_bytes, read_len, world, t)
and samples the scenario world through a small transfer function. With zero
noise every device is a pure function of (world, t).
"""

from __future__ import annotations

from typing import Optional

from .scenario import GESTURE_CODES, WorldState

# Manufacturer default addresses on bus 0; the three ToF parts are re-addressed.
ADDR_MPR121 = 0x5A
ADDR_ADS1115 = 0x48
ADDR_VL53L0X = {"left": 0x29, "center": 0x2A, "right": 0x2B}
ADDR_SRF02 = 0x70
ADDR_MCP9808 = 0x18
ADDR_GESTURE = 0x39
ADDR_PCA9685 = 0x40


class RangeError(Exception):
    pass


class Mpr121:
    """Capacitive touch controller: 12 pad bits in two status bytes."""

    REG_TOUCH_STATUS = 0x00

    @staticmethod
    def status_word(world: WorldState) -> int:
        word = 0
        for pad in world.touch_contacts:
            word |= 1 << pad
        return word & 0x0FFF

    def handle_transaction(self, reg, out_bytes, read_len, world, t):
        word = self.status_word(world)
        data = [word & 0xFF, (word >> 8) & 0xFF]  # little-endian
        return data[reg:reg + read_len]


class FsrDivider:
    """Force-sensing resistor in a voltage divider.

    R_FSR = R0 / force, so the voltage across the FSR falls as force rises.
    Below 0.25 N the sensor is effectively open circuit.
    """

    VCC = 3.3
    R_FIXED = 10_000.0     # ohms
    R0 = 10_000.0          # ohm * newton
    R_OPEN = 10_000_000.0  # open-circuit cap
    F_MIN = 0.25
    F_MAX = 10.0

    @classmethod
    def resistance(cls, force_n: float) -> float:
        if force_n < cls.F_MIN:
            return cls.R_OPEN
        return cls.R0 / force_n

    @classmethod
    def v_out(cls, force_n: float) -> float:
        r = cls.resistance(force_n)
        return cls.VCC * r / (r + cls.R_FIXED)


class Ads1115:
    """16-bit ADC reading the two FSR dividers (channel 0 left, 1 right)."""

    REG_CONVERSION = 0x00
    REG_CONFIG = 0x01
    LSB_V = 125e-6  # gain setting: +/-4.096 V full scale

    def __init__(self) -> None:
        self.mux_channel = 0

    @classmethod
    def convert(cls, channel: int, world: WorldState, t: float = 0.0) -> int:
        if not 0 <= channel <= 3:
            raise RangeError(f"ADS1115 channel {channel} outside 0-3")
        if channel == 0:
            force = world.sample("force_left", t)
        elif channel == 1:
            force = world.sample("force_right", t)
        else:
            force = 0.0  # unwired channels read the open-circuit divider
        code = round(FsrDivider.v_out(force) / cls.LSB_V)
        return max(0, min(32767, code))

    @staticmethod
    def config_for_channel(channel: int) -> tuple[int, int]:
        # single-ended mux codes 0b100..0b111 in config bits 14:12
        return (0x40 | (0x10 * channel) | 0x03, 0x83)

    def handle_transaction(self, reg, out_bytes, read_len, world, t):
        if reg == self.REG_CONFIG and out_bytes:
            mux = (out_bytes[0] >> 4) & 0x07
            if mux >= 4:
                self.mux_channel = mux - 4
            return []
        if reg == self.REG_CONVERSION and read_len:
            code = self.convert(self.mux_channel, world, t)
            return [(code >> 8) & 0xFF, code & 0xFF]
        return [0] * read_len


VL53_VALID = 0
VL53_UNDER_RANGE = 1
VL53_OUT_OF_RANGE = 2


class Vl53l0x:
    """Time-of-flight ranger: 30 mm to 1.2 m in default mode."""

    MIN_MM = 30
    MAX_MM = 1200

    def __init__(self, which: str) -> None:
        self.which = which

    def read_range(self, world: WorldState, t: float = 0.0) -> tuple[int, int]:
        mm = round(world.sample(f"obj_{self.which}", t) * 1000.0)
        if mm < self.MIN_MM:
            return self.MIN_MM, VL53_UNDER_RANGE
        if mm > self.MAX_MM:
            return self.MAX_MM, VL53_OUT_OF_RANGE
        return mm, VL53_VALID

    def handle_transaction(self, reg, out_bytes, read_len, world, t):
        mm, status = self.read_range(world, t)
        return [status, (mm >> 8) & 0xFF, mm & 0xFF][:read_len]


class Srf02:
    """Ultrasonic ranger: command-driven, result ready 65 ms after the ping."""

    REG_COMMAND = 0x00
    REG_RANGE_HIGH = 0x02
    CMD_RANGE_CM = 0x51
    RANGING_S = 0.065
    MIN_M = 0.18
    MAX_M = 6.0

    def __init__(self) -> None:
        self.last_cm = 0
        self._busy_until: Optional[float] = None
        self._pending_cm = 0

    @classmethod
    def to_cm(cls, meters: float) -> int:
        if meters < cls.MIN_M or meters > cls.MAX_M:
            return 0  # no echo
        return round(meters * 100.0)

    def handle_transaction(self, reg, out_bytes, read_len, world, t):
        if reg == self.REG_COMMAND and self.CMD_RANGE_CM in out_bytes:
            # distance captured when ranging starts; result latches 65 ms later
            self._pending_cm = self.to_cm(world.sample("sonar", t))
            self._busy_until = t + self.RANGING_S
            return []
        if self._busy_until is not None and t >= self._busy_until:
            self.last_cm = self._pending_cm
            self._busy_until = None
        if reg == self.REG_RANGE_HIGH and read_len:
            return [(self.last_cm >> 8) & 0xFF, self.last_cm & 0xFF][:read_len]
        return [0] * read_len


class Mcp9808:
    """Ambient temperature sensor, 0.0625 C per LSB, two's complement."""

    REG_TEMP = 0x05
    LSB_C = 0.0625

    @classmethod
    def encode(cls, celsius: float) -> int:
        return round(celsius / cls.LSB_C) & 0xFFFF

    @classmethod
    def decode(cls, raw: int) -> float:
        value = raw - 0x10000 if raw & 0x8000 else raw
        return value * cls.LSB_C

    def handle_transaction(self, reg, out_bytes, read_len, world, t):
        raw = self.encode(world.sample("temp", t))
        return [(raw >> 8) & 0xFF, raw & 0xFF][:read_len]


class GestureSensor:
    """Hand-motion sensor; a gesture is consumed by the read that sees it."""

    def handle_transaction(self, reg, out_bytes, read_len, world, t):
        code = GESTURE_CODES[world.consume_gesture()]
        return [code][:read_len]


class Pca9685:
    """16-channel, 12-bit PWM driver; channels 0-2 drive the face LED RGB."""

    REG_LED_BASE = 0x06
    N_CHANNELS = 16
    MAX_DUTY = 4095

    def __init__(self) -> None:
        self.duty = [0] * self.N_CHANNELS

    def set(self, channel: int, duty12: int) -> None:
        if not 0 <= channel < self.N_CHANNELS:
            raise RangeError(f"PWM channel {channel} outside 0-15")
        if not 0 <= duty12 <= self.MAX_DUTY:
            raise RangeError(f"duty {duty12} outside 0-4095")
        self.duty[channel] = duty12

    def color(self) -> tuple[int, int, int]:
        return (self.duty[0], self.duty[1], self.duty[2])

    def handle_transaction(self, reg, out_bytes, read_len, world, t):
        if reg >= self.REG_LED_BASE and len(out_bytes) >= 2:
            channel = (reg - self.REG_LED_BASE) // 4
            self.set(channel, out_bytes[0] | (out_bytes[1] << 8))
        return [0] * read_len


class ServoModel:
    """Neck servo, modeled kinematically: slews toward its target at 300 deg/s."""

    SLEW_DEG_S = 300.0
    MIN_DEG = 0.0
    MAX_DEG = 180.0

    def __init__(self, angle: float = 90.0) -> None:
        self.angle = angle
        self.target = angle
        self._last_t = 0.0

    def set_target(self, target_deg: float, t: float) -> None:
        if not self.MIN_DEG <= target_deg <= self.MAX_DEG:
            raise RangeError(f"servo target {target_deg} outside 0-180")
        self.update(t)
        self.target = target_deg

    def update(self, t: float) -> float:
        """Integrate motion up to time t and return the current angle."""
        dt = max(0.0, t - self._last_t)
        self._last_t = max(self._last_t, t)
        limit = self.SLEW_DEG_S * dt
        delta = self.target - self.angle
        if abs(delta) <= limit:
            self.angle = self.target
        else:
            self.angle += limit if delta > 0 else -limit
        return self.angle

    @classmethod
    def step(cls, angle: float, target_deg: float, dt: float) -> float:
        """One slew step without the stateful clock (unit-testable form)."""
        if not cls.MIN_DEG <= target_deg <= cls.MAX_DEG:
            raise RangeError(f"servo target {target_deg} outside 0-180")
        limit = cls.SLEW_DEG_S * dt
        delta = target_deg - angle
        if abs(delta) <= limit:
            return target_deg
        return angle + (limit if delta > 0 else -limit)


class SpiLoopback:
    """Test device for the SPI bus: echoes written bytes back, zero-padded."""

    def handle_transaction(self, reg, out_bytes, read_len, world, t):
        echo = list(out_bytes[:read_len])
        return echo + [0] * (read_len - len(echo))


def attach_standard_devices(busman, bus_id: int = 0) -> dict[str, object]:
    """Wire the full vest device set to one I2C bus; returns them by name."""
    devices = {
        "mpr121": Mpr121(),
        "ads1115": Ads1115(),
        "tof_left": Vl53l0x("left"),
        "tof_center": Vl53l0x("center"),
        "tof_right": Vl53l0x("right"),
        "srf02": Srf02(),
        "mcp9808": Mcp9808(),
        "gesture": GestureSensor(),
        "pca9685": Pca9685(),
    }
    busman.attach_device(bus_id, ADDR_MPR121, devices["mpr121"])
    busman.attach_device(bus_id, ADDR_ADS1115, devices["ads1115"])
    busman.attach_device(bus_id, ADDR_VL53L0X["left"], devices["tof_left"])
    busman.attach_device(bus_id, ADDR_VL53L0X["center"], devices["tof_center"])
    busman.attach_device(bus_id, ADDR_VL53L0X["right"], devices["tof_right"])
    busman.attach_device(bus_id, ADDR_SRF02, devices["srf02"])
    busman.attach_device(bus_id, ADDR_MCP9808, devices["mcp9808"])
    busman.attach_device(bus_id, ADDR_GESTURE, devices["gesture"])
    busman.attach_device(bus_id, ADDR_PCA9685, devices["pca9685"])
    return devices
