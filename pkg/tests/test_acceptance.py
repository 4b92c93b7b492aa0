"""Acceptance gate: one test per release criterion, each printing a verdict.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion. Tolerances are pinned here and nowhere else.
"""

import json
import time
import urllib.request

import numpy as np
import pytest

from vestbed import behaviors, cli, devices, gateway, nodes, runtime, scenario
from vestbed.bus import READ, WRITE, WRITE_THEN_READ, BusConfig, BusManager
from vestbed.core import Scheduler
from vestbed.scenario import WorldState
from vestbed.vision import cnn, kernels

from test_vision_cnn import conv_oracle, count_oracle, rel_error

EPSILON = 1e-6  # one scheduler tick

TABLE_OUTPUT_SIZES = [
    "128 x 128 x 8",
    "64 x 64 x 8",
    "64 x 64 x 16",
    "32 x 32 x 16",
    "32 x 32 x 32",
    "16 x 16 x 32",
    "16 x 16 x 64",
    "8 x 8 x 64",
    "8 x 8 x 128",
    "4 x 4 x 128",
    "4 x 4 x 256",
    "2 x 2 x 256",
    "2 x 2 x 512",
    "1 x 1 x 512",
    "1 x 1 x 128",
    "1 x 1 x 6",
]


def verdict(name: str) -> None:
    print(f"PASS {name}")


def test_c01_shape_audit_matches_table():
    weights = cnn.generate_weights(seed=0)
    x = np.zeros((128, 128, 1), dtype=np.float32)
    trace: list[str] = []
    t0 = time.monotonic()
    cnn.forward(x, weights, trace)
    elapsed = time.monotonic() - t0
    assert trace == TABLE_OUTPUT_SIZES
    assert elapsed < 5.0
    verdict(f"C01 shape audit: 16/16 output sizes exact, forward {elapsed:.2f}s")


def test_c02_convolution_oracle_100_tensors():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        h, w = rng.integers(2, 10, size=2)
        c_in, c_out = rng.integers(1, 6, size=2)
        x = rng.standard_normal((h, w, c_in)).astype(np.float32)
        k = rng.standard_normal((3, 3, c_in, c_out)).astype(np.float32)
        b = rng.standard_normal(c_out).astype(np.float32)
        worst = max(worst, rel_error(kernels.conv2d_same(x, k, b),
                                     conv_oracle(x, k, b)))
    assert worst <= 1e-5
    verdict(f"C02 convolution oracle: 100 tensors, max rel error {worst:.2e}")


def test_c03_parameter_count_audit():
    counts = cnn.parameter_counts()
    oracle = count_oracle()
    assert counts == oracle
    assert counts[0] == 80
    assert counts[7] == 65_664
    assert counts[8] == 774
    assert cnn.total_parameter_count() == sum(oracle) == 1_640_006
    verdict("C03 parameter audit: 9 weighted layers exact, total 1,640,006")


def test_c04_dialogue_reproduction():
    text = "\n".join([
        "at 0 set_temp 22.2",
        'at 1 say "What is your name?"',
        'at 2 say "What is your favorite color?"',
        'at 3 say "What is the temperature?"',
    ])
    system = runtime.build_from_text(text)
    system.run(5.0)
    assert system.transcript.texts() == [
        "My name is H B S 2",
        "My favorite color is blue. My vest is blue.",
        "The temperature is 72 degrees",
    ]
    verdict("C04 dialogues: three verbatim responses reproduced")


def test_c05_iot_byte_contract():
    system = runtime.System([scenario.ScenarioEvent(0.2, "touch_on", (3,))])
    system.run(1.5)  # pad 3 is down and its byte is on the topic
    server = gateway.GatewayServer(system.store, port=0)
    server.start()
    try:
        url = f"http://127.0.0.1:{server.port}"
        with urllib.request.urlopen(f"{url}/api/readtouch?robot=hbs2") as resp:
            ack = resp.read()
        assert ack == b"\xff"
        env = system.store.envelope("hbs2", 0)
        assert env.code == 0x06
        system.run(3.0)  # robot polls, executes code 6, posts the byte back
        with urllib.request.urlopen(f"{url}/api/getdata?robot=hbs2&seq=0") as resp:
            data = json.loads(resp.read())
    finally:
        server.stop()
    assert data["status"] == "complete"
    assert data["data"] == 0x08  # the latest published tpc_touch byte
    verdict("C05 IoT contract: ack 0xFF, command 0x06, round trip returned 0x08")


def test_c06_latency_property_suite():
    table = runtime.latency_suite(polls=5, delay=0.0)
    assert table["touch"]["median"] <= 1.0 + EPSILON
    assert table["hug"]["median"] <= 1.0 + EPSILON
    service_allowance = 0.1  # bus transfers plus the sonar ranging wait
    for name in ("shake_head", "temperature", "touch_gateway"):
        assert table[name]["median"] <= 2.0 + service_allowance
    gap = table["ultrasound"]["median"] - table["touch_gateway"]["median"]
    assert gap >= 0.065 - EPSILON

    injected = runtime.latency_suite(polls=5, delay=0.25)
    growth = injected["tts"]["median"] - table["tts"]["median"]
    assert growth >= 2 * 0.25 - EPSILON
    verdict(f"C06 latency suite: local<=1s, gateway<=2s, sonar gap {gap:.3f}s, "
            f"tts +{growth:.3f}s under 0.25s delay")


def test_c07_bus_manager_properties():
    sched = Scheduler()
    world = WorldState(touch_contacts={1})
    busman = BusManager(sched, world, {0: BusConfig("i2c", 100_000),
                                       1: BusConfig("spi", 100_000),
                                       2: BusConfig("i2c", 400_000)})
    busman.attach_device(0, devices.ADDR_MPR121, devices.Mpr121())
    busman.attach_device(0, devices.ADDR_MCP9808, devices.Mcp9808())
    busman.attach_device(1, 0, devices.SpiLoopback())
    busman.attach_device(2, devices.ADDR_PCA9685, devices.Pca9685())

    rng = np.random.default_rng(7)
    n_jobs = 1200
    submissions: dict[int, list[int]] = {0: [], 1: [], 2: []}
    expect_nack = set()

    def submit_random() -> None:
        bus_id = int(rng.integers(0, 3))
        if bus_id == 1:
            addr = int(rng.integers(0, 3))
        else:
            attached = list(busman._buses[bus_id].devices)
            addr = (int(rng.choice(attached)) if rng.random() < 0.7
                    else int(rng.integers(0x08, 0x78)))
        kind = (WRITE, READ, WRITE_THEN_READ)[int(rng.integers(0, 3))]
        out = tuple(int(b) for b in rng.integers(0, 256, rng.integers(0, 3)))
        read_len = int(rng.integers(1, 4))
        job_id = busman.submit(bus_id, addr, kind, 0x00, out,
                               read_len if kind != WRITE else 0)
        submissions[bus_id].append(job_id)
        if bus_id != 1 and addr not in busman._buses[bus_id].devices:
            expect_nack.add(job_id)

    for t in sorted(float(x) for x in rng.uniform(0, 60, n_jobs)):
        sched.at(t, submit_random)
    sched.run_until(120.0)

    history = busman.history
    assert len(history) == n_jobs  # liveness: every job finished

    by_bus: dict[int, list] = {0: [], 1: [], 2: []}
    for job in history:
        by_bus[job.bus_id].append(job)
    for bus_id, jobs in by_bus.items():
        spans = [(j.started_t, j.finished_t) for j in jobs]
        for (_, end), (start, _) in zip(spans, spans[1:]):
            assert start >= end, f"bus {bus_id}: overlapping active jobs"
        assert [j.job_id for j in jobs] == submissions[bus_id], \
            f"bus {bus_id}: completion order != submission order"
    for job in history:
        if job.job_id in expect_nack:
            assert job.status == "error" and job.error_kind == "nack"
        else:
            assert job.status == "done"
    verdict(f"C07 bus properties: {n_jobs} jobs, exclusivity + FIFO + NACK + "
            "liveness hold")


def test_c08_sensor_model_bands():
    world = WorldState()
    tof = devices.Vl53l0x("center")
    readings = []
    for meters in np.linspace(0.0, 2.0, 81):
        world.obj_dist["center"] = float(meters)
        readings.append(tof.read_range(world))
    assert all(30 <= mm <= 1200 for mm, _ in readings)
    world.obj_dist["center"] = 0.01
    assert tof.read_range(world) == (30, devices.VL53_UNDER_RANGE)
    world.obj_dist["center"] = 2.0
    assert tof.read_range(world) == (1200, devices.VL53_OUT_OF_RANGE)
    world.obj_dist["center"] = 0.5
    assert tof.read_range(world) == (500, devices.VL53_VALID)

    assert devices.Srf02.to_cm(0.179) == 0
    assert devices.Srf02.to_cm(0.18) == 18
    for meters in np.linspace(0.0, 7.0, 71):
        cm = devices.Srf02.to_cm(float(meters))
        assert cm == 0 or 18 <= cm <= 600

    forces = np.linspace(0.25, 10.0, 40)
    volts = [devices.FsrDivider.v_out(float(f)) for f in forces]
    assert all(a > b for a, b in zip(volts, volts[1:]))
    verdict("C08 sensor bands: ToF clamps+status, sonar no-echo, FSR monotone "
            "over 40 points")


def test_c09_determinism_umbrella(tmp_path):
    reports = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        assert cli.main(["run", "--scenario", "scenarios/reference.txt",
                         "--duration", "20", "--seed", "0",
                         "--report", str(path)]) == 0
        reports.append(path.read_bytes())
    assert reports[0] == reports[1]
    verdict("C09 determinism: two runs, byte-identical reports")


def test_c10_end_to_end_behaviors():
    text = "\n".join([
        "at 0 set_temp 22.2",
        "at 1 touch on 3",
        "at 2.5 touch off 3",
        "at 3 gesture wave",
        "at 5 force left 3.0",      # unilateral squeeze: must stay silent
        "at 6.5 force left 0",
        "at 8 force left 3.0",
        "at 8 force right 3.0",     # bilateral squeeze: LED + hug phrase
        "at 9.5 force left 0",
        "at 9.5 force right 0",
        "at 11 object left 0.1",    # unique off-center minimum from t=11 on
    ])
    t0 = time.monotonic()
    system = runtime.build_from_text(text)
    angles = []
    for k in range(12, 31):
        system.sched.at(float(k), lambda: angles.append(
            system.servo.model.update(system.sched.now)))
    system.run(30.0)
    wall = time.monotonic() - t0

    texts = [(e.t, e.text) for e in system.transcript.entries]
    thanks = [t for t, s in texts if s == "thank you"]
    hellos = [t for t, s in texts if s == "Hello"]
    hugs = [t for t, s in texts if s == behaviors.DEFAULT_HUG_PHRASE]
    assert len(thanks) == 1 and 1.0 <= thanks[0] <= 2.1
    assert len(hellos) == 1 and 3.0 <= hellos[0] <= 4.1
    assert len(hugs) == 1 and 8.0 <= hugs[0] <= 9.1  # not during unilateral
    assert system.led.color == behaviors.HUG_LED_COLOR
    assert all(b >= a for a, b in zip(angles, angles[1:]))
    assert angles[-1] == 180.0  # converged into the clamp
    assert any("\tBUS\t" in line for line in system.sched.log)
    assert wall < 10.0
    verdict(f"C10 end-to-end: thanks/greeting/hug/tracker all correct in "
            f"{wall:.2f}s wall time")
