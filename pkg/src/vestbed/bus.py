"""Brokered I2C/SPI buses: per-bus FIFO job queues with a transfer-time model.

Every device transaction in the simulator goes through a BusManager job. At
any virtual instant at most one job is on the wire per bus; completion order
per bus equals submission order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .core import Scheduler

WRITE = "write"
READ = "read"
WRITE_THEN_READ = "write_then_read"
_KINDS = (WRITE, READ, WRITE_THEN_READ)

I2C_MIN_ADDR = 0x08
I2C_MAX_ADDR = 0x77


class BusError(Exception):
    pass


class NoSuchBus(BusError):
    pass


class NoSuchJob(BusError):
    pass


class AddrInUse(BusError):
    pass


class DeviceNack(BusError):
    """execute() convenience: the addressed device did not answer."""


@dataclass
class BusConfig:
    kind: str = "i2c"          # "i2c" or "spi"
    clock_hz: int = 100_000

    @property
    def per_byte_s(self) -> float:
        # I2C: 8 data bits + ack per byte; SPI: plain 8 bits per byte.
        bits = 9 if self.kind == "i2c" else 8
        return bits / self.clock_hz


@dataclass
class BusJob:
    job_id: int
    bus_id: int
    addr: int
    kind: str
    reg: int
    out_bytes: tuple
    read_len: int
    status: str = "pending"     # pending -> active -> done | error
    result: list = field(default_factory=list)
    error_kind: Optional[str] = None   # nack | timeout
    submitted_t: float = 0.0
    started_t: float = 0.0
    finished_t: float = 0.0

    def bytes_on_wire(self, bus_kind: str) -> int:
        # I2C spends one byte addressing the device; SPI selects by wire.
        addr_byte = 1 if bus_kind == "i2c" else 0
        return addr_byte + 1 + len(self.out_bytes) + self.read_len


class _Bus:
    def __init__(self, bus_id: int, config: BusConfig) -> None:
        self.bus_id = bus_id
        self.config = config
        self.devices: dict[int, object] = {}
        self.pending: deque[BusJob] = deque()
        self.active: Optional[BusJob] = None


class BusManager:
    """Sole broker for a set of buses; owns pending and completed job queues."""

    def __init__(self, sched: Scheduler, world, configs: dict[int, BusConfig]) -> None:
        self.sched = sched
        self.world = world
        self._buses = {bus_id: _Bus(bus_id, cfg) for bus_id, cfg in configs.items()}
        self._next_job_id = 0
        self._jobs: dict[int, BusJob] = {}        # every job ever issued
        self._completed: dict[int, BusJob] = {}   # awaiting single retrieval
        self.history: list[BusJob] = []           # full trace for analysis

    # -- device wiring -------------------------------------------------------

    def attach_device(self, bus_id: int, addr: int, device) -> None:
        bus = self._bus(bus_id)
        if addr in bus.devices:
            raise AddrInUse(f"bus {bus_id} address 0x{addr:02X} already attached")
        bus.devices[addr] = device

    def detach_device(self, bus_id: int, addr: int) -> None:
        self._bus(bus_id).devices.pop(addr, None)

    # -- job queue -------------------------------------------------------------

    def submit(self, bus_id: int, addr: int, kind: str, reg: int = 0,
               out_bytes: tuple = (), read_len: int = 0) -> int:
        bus = self._bus(bus_id)
        if kind not in _KINDS:
            raise ValueError(f"unknown job kind {kind!r}")
        if kind != WRITE and read_len < 1:
            raise ValueError("read jobs need read_len >= 1")
        if bus.config.kind == "i2c" and not I2C_MIN_ADDR <= addr <= I2C_MAX_ADDR:
            raise ValueError(f"I2C address 0x{addr:02X} outside 0x08-0x77")
        job = BusJob(self._next_job_id, bus_id, addr, kind, reg,
                     tuple(out_bytes), read_len if kind != WRITE else 0,
                     submitted_t=self.sched.now)
        self._next_job_id += 1
        self._jobs[job.job_id] = job
        bus.pending.append(job)
        # the wire picks the job up on the next dispatch, so a poll issued
        # before any scheduler progress still sees it pending
        self.sched.at(self.sched.now, lambda: self._maybe_start(bus))
        return job.job_id

    def poll(self, job_id: int) -> tuple[str, Optional[list]]:
        """Single-retrieval poll: a finished job is consumed by the first poll."""
        job = self._completed.pop(job_id, None)
        if job is not None:
            return job.status, (list(job.result) if job.result else None)
        job = self._jobs.get(job_id)
        if job is None or job.status in ("done", "error"):
            raise NoSuchJob(f"job {job_id} unknown or already retrieved")
        return job.status, None

    def execute(self, bus_id: int, addr: int, kind: str, reg: int = 0,
                out_bytes: tuple = (), read_len: int = 0) -> list:
        """Submit and wait (in virtual time) until the job finishes.

        Returns the read bytes; raises DeviceNack on a bus error.
        """
        job_id = self.submit(bus_id, addr, kind, reg, out_bytes, read_len)
        self.sched.wait_for(lambda: job_id in self._completed)
        status, result = self.poll(job_id)
        if status == "error":
            raise DeviceNack(f"bus {bus_id} addr 0x{addr:02X}")
        return result or []

    # -- wire model ------------------------------------------------------------

    def _bus(self, bus_id: int) -> _Bus:
        try:
            return self._buses[bus_id]
        except KeyError:
            raise NoSuchBus(f"bus {bus_id}") from None

    def _maybe_start(self, bus: _Bus) -> None:
        if bus.active is not None or not bus.pending:
            return
        job = bus.pending.popleft()
        bus.active = job
        job.status = "active"
        job.started_t = self.sched.now
        nack = bus.config.kind == "i2c" and job.addr not in bus.devices
        if nack:
            duration = bus.config.per_byte_s  # NACK after the address byte
        else:
            duration = job.bytes_on_wire(bus.config.kind) * bus.config.per_byte_s
        self.sched.after(duration, lambda: self._complete(bus, job, nack))

    def _complete(self, bus: _Bus, job: BusJob, nack: bool) -> None:
        job.finished_t = self.sched.now
        device = bus.devices.get(job.addr)
        if nack or (device is None and bus.config.kind == "i2c"):
            job.status = "error"  # covers detach between submit and start
            job.error_kind = "nack"
        elif device is None:
            # SPI has no addressing ack; an empty select reads floating-high
            job.result = [0xFF] * job.read_len
            job.status = "done"
        else:
            data = device.handle_transaction(job.reg, job.out_bytes,
                                             job.read_len, self.world,
                                             self.sched.now)
            job.result = list(data or [])
            job.status = "done"
        self._completed[job.job_id] = job
        self.history.append(job)
        micros = round((job.finished_t - job.started_t) * 1e6)
        self.sched.log_line(
            "BUS", f"bus{bus.bus_id}",
            f"0x{job.addr:02X} {job.kind} {job.bytes_on_wire(bus.config.kind)}B "
            f"{micros}us {job.status}")
        bus.active = None
        self._maybe_start(bus)
