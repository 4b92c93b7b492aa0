"""Bus manager: queues, timing model, exclusivity, and device dispatch."""

import pytest

from vestbed.bus import (READ, WRITE, WRITE_THEN_READ, AddrInUse, BusConfig,
                         BusManager, DeviceNack, NoSuchBus, NoSuchJob)
from vestbed.core import Scheduler
from vestbed.devices import Mpr121, SpiLoopback
from vestbed.scenario import WorldState


@pytest.fixture
def rig():
    sched = Scheduler()
    world = WorldState()
    busman = BusManager(sched, world, {0: BusConfig("i2c", 100_000),
                                       1: BusConfig("spi", 100_000)})
    return sched, world, busman


class TestSubmit:
    def test_status_read_shape(self, rig):
        sched, world, busman = rig
        busman.attach_device(0, 0x5A, Mpr121())
        job_id = busman.submit(0, 0x5A, WRITE_THEN_READ, 0x00, (), 2)
        assert busman.poll(job_id) == ("pending", None)

    def test_unknown_bus(self, rig):
        _, _, busman = rig
        with pytest.raises(NoSuchBus):
            busman.submit(9, 0x5A, READ, 0, (), 1)

    def test_job_ids_strictly_increase(self, rig):
        _, _, busman = rig
        a = busman.submit(0, 0x10, WRITE, 0, (1,), 0)
        b = busman.submit(0, 0x10, WRITE, 0, (1,), 0)
        assert b > a

    def test_i2c_address_range_enforced(self, rig):
        _, _, busman = rig
        with pytest.raises(ValueError):
            busman.submit(0, 0x05, READ, 0, (), 1)
        with pytest.raises(ValueError):
            busman.submit(0, 0x90, READ, 0, (), 1)

    def test_read_needs_length(self, rig):
        _, _, busman = rig
        with pytest.raises(ValueError):
            busman.submit(0, 0x5A, READ, 0, (), 0)


class TestPoll:
    def test_poll_lifecycle_single_retrieval(self, rig):
        sched, world, busman = rig
        busman.attach_device(0, 0x5A, Mpr121())
        world.touch_contacts.add(0)
        job_id = busman.submit(0, 0x5A, WRITE_THEN_READ, 0x00, (), 2)
        assert busman.poll(job_id) == ("pending", None)  # nothing dispatched yet
        sched.run_until(1.0)
        status, result = busman.poll(job_id)
        assert (status, result) == ("done", [0x01, 0x00])
        with pytest.raises(NoSuchJob):
            busman.poll(job_id)

    def test_unknown_job(self, rig):
        _, _, busman = rig
        with pytest.raises(NoSuchJob):
            busman.poll(123)

    def test_nack_on_empty_address(self, rig):
        sched, _, busman = rig
        job_id = busman.submit(0, 0x70, WRITE_THEN_READ, 0, (), 2)
        sched.run_until(1.0)
        status, result = busman.poll(job_id)
        assert status == "error"
        assert result is None


class TestTiming:
    def test_transfer_time_formula(self, rig):
        # (1 addr + 1 reg + 0 out + 2 read) * 9 bits / 100 kHz = 360 us
        sched, _, busman = rig
        busman.attach_device(0, 0x5A, Mpr121())
        job_id = busman.submit(0, 0x5A, WRITE_THEN_READ, 0x00, (), 2)
        sched.run_until(1.0)
        job = busman.history[-1]
        assert job.finished_t - job.started_t == pytest.approx(360e-6, abs=1e-9)

    def test_fifo_completion_order(self, rig):
        sched, _, busman = rig
        busman.attach_device(0, 0x5A, Mpr121())
        ids = [busman.submit(0, 0x5A, WRITE_THEN_READ, 0x00, (), 2)
               for _ in range(3)]
        sched.run_until(1.0)
        assert [j.job_id for j in busman.history] == ids

    def test_independent_buses_overlap(self, rig):
        sched, _, busman = rig
        busman.attach_device(0, 0x5A, Mpr121())
        busman.submit(0, 0x5A, WRITE_THEN_READ, 0x00, (), 2)
        busman.submit(1, 0, WRITE_THEN_READ, 0x00, (1, 2), 2)
        sched.run_until(1.0)
        a, b = sorted(busman.history, key=lambda j: j.started_t)
        assert a.started_t == b.started_t  # both start at t=0 on their own bus

    def test_spi_timing_8_bits_per_byte(self, rig):
        # (1 reg + 2 out + 2 read) * 8 bits / 100 kHz = 400 us, no addr byte
        sched, _, busman = rig
        busman.submit(1, 0, WRITE_THEN_READ, 0x00, (9, 9), 2)
        sched.run_until(1.0)
        job = busman.history[-1]
        assert job.finished_t - job.started_t == pytest.approx(400e-6, abs=1e-9)

    def test_per_bus_exclusivity(self, rig):
        sched, _, busman = rig
        busman.attach_device(0, 0x5A, Mpr121())
        for _ in range(5):
            busman.submit(0, 0x5A, WRITE_THEN_READ, 0x00, (), 2)
        sched.run_until(1.0)
        spans = sorted((j.started_t, j.finished_t) for j in busman.history)
        for (_, end), (start, _) in zip(spans, spans[1:]):
            assert start >= end


class TestDevices:
    def test_attach_then_read(self, rig):
        sched, world, busman = rig
        world.touch_contacts.update({0, 3})
        busman.attach_device(0, 0x29, Mpr121())
        job_id = busman.submit(0, 0x29, WRITE_THEN_READ, 0x00, (), 2)
        sched.run_until(1.0)
        assert busman.poll(job_id) == ("done", [0x09, 0x00])

    def test_address_collision(self, rig):
        _, _, busman = rig
        busman.attach_device(0, 0x29, Mpr121())
        with pytest.raises(AddrInUse):
            busman.attach_device(0, 0x29, Mpr121())

    def test_detach_then_submit_nacks(self, rig):
        sched, _, busman = rig
        busman.attach_device(0, 0x29, Mpr121())
        busman.detach_device(0, 0x29)
        job_id = busman.submit(0, 0x29, WRITE_THEN_READ, 0x00, (), 2)
        sched.run_until(1.0)
        assert busman.poll(job_id)[0] == "error"

    def test_spi_loopback_echo(self, rig):
        sched, _, busman = rig
        busman.attach_device(1, 0, SpiLoopback())
        job_id = busman.submit(1, 0, WRITE_THEN_READ, 0x00, (5, 6), 3)
        sched.run_until(1.0)
        assert busman.poll(job_id) == ("done", [5, 6, 0])

    def test_spi_empty_select_reads_floating_high(self, rig):
        sched, _, busman = rig
        job_id = busman.submit(1, 3, WRITE_THEN_READ, 0x00, (), 2)
        sched.run_until(1.0)
        assert busman.poll(job_id) == ("done", [0xFF, 0xFF])


class TestExecute:
    def test_execute_returns_bytes_in_virtual_time(self, rig):
        sched, world, busman = rig
        busman.attach_device(0, 0x5A, Mpr121())
        world.touch_contacts.add(11)
        result = {}
        sched.at(2.0, lambda: result.setdefault(
            "data", busman.execute(0, 0x5A, WRITE_THEN_READ, 0x00, (), 2)))
        sched.run_until(3.0)
        assert result["data"] == [0x00, 0x08]

    def test_execute_raises_on_nack(self, rig):
        sched, _, busman = rig
        errors = []

        def go():
            try:
                busman.execute(0, 0x33, WRITE_THEN_READ, 0x00, (), 1)
            except DeviceNack as exc:
                errors.append(exc)

        sched.at(0.0, go)
        sched.run_until(1.0)
        assert len(errors) == 1
