"""Full-system assembly: node graph construction, scenario playback, reports.

This is the composition root used by the CLI and the end-to-end tests. One
System owns the scheduler, the world, the buses and every node; building two
Systems from the same inputs replays the same run bit for bit.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Optional

from . import behaviors, devices, gateway, nodes, scenario, speech
from .bus import BusConfig, BusManager
from .core import Core, Scheduler

log = logging.getLogger(__name__)

I2C_BUS = 0
SPI_BUS = 1


@dataclass
class SystemConfig:
    seed: int = 0
    robot_id: str = "hbs2"
    touch_period: float = 1.0
    gesture_period: float = 1.0
    force_period: float = 1.0
    track_period: float = 1.0
    iort_period: float = 1.0
    hand_period: float = 1.0
    hug_threshold_code: Optional[int] = None
    hug_phrase: str = behaviors.DEFAULT_HUG_PHRASE
    dialogues_text: str = speech.DEFAULT_DIALOGUES
    gateway_delay: float = 0.0
    gateway_url: Optional[str] = None  # poll a served gateway over HTTP
    weights_path: Optional[str] = None
    sigma: dict = field(default_factory=dict)


class HandSignAnnouncer:
    """Periodic vision node: classifies a newly shown hand image, announces it."""

    def __init__(self, core: Core, sched: Scheduler, world: scenario.WorldState,
                 weights, period: float = 1.0) -> None:
        self.core = core
        self.world = world
        self.weights = weights
        self.timer = sched.every(period, self.tick, name="hand_sign")

    def tick(self) -> None:
        path = self.world.take_hand_image()
        if path is None:
            return
        from .vision import cnn, image_io
        try:
            image = image_io.load_image(path)
            label, _ = cnn.classify(image, self.weights)
        except Exception as exc:
            log.warning("hand sign: %s", exc)
            return
        self.core.call_service(nodes.SRV_TTS,
                               {"text": f"I see {cnn.CLASS_WORDS[label]}"})


class System:
    """Everything wired: call run()/run_realtime(), then report()."""

    def __init__(self, events: list[scenario.ScenarioEvent],
                 config: SystemConfig | None = None,
                 store: Optional[gateway.GatewayStore] = None) -> None:
        self.config = config or SystemConfig()
        cfg = self.config
        self.sched = Scheduler()
        self.core = Core(self.sched)
        self.world = scenario.WorldState(seed=cfg.seed, sigma=dict(cfg.sigma))
        self.busman = BusManager(self.sched, self.world, {
            I2C_BUS: BusConfig("i2c", 100_000),
            SPI_BUS: BusConfig("spi", 100_000),
        })
        self.devices = devices.attach_standard_devices(self.busman, I2C_BUS)
        self.busman.attach_device(SPI_BUS, 0, devices.SpiLoopback())

        # scenario events are scheduled before any node timer so that at equal
        # times the world mutates before sensors sample it
        self.events = events
        self.speech_injector = speech.SpeechInjector(self.core)
        for ev in events:
            self.sched.at(ev.at, lambda e=ev: self._apply_event(e))

        for key, value in (("touch_period", cfg.touch_period),
                           ("gesture_period", cfg.gesture_period),
                           ("force_period", cfg.force_period),
                           ("track_period", cfg.track_period),
                           ("iort_period", cfg.iort_period)):
            self.core.set_param(key, str(value))

        self.transcript = speech.Transcript()
        self.tts = speech.TtsService(self.core, self.sched, self.transcript)
        self.sonar = nodes.SonarService(self.core, self.sched, self.busman, I2C_BUS)
        self.temperature = nodes.TemperatureService(self.core, self.sched,
                                                    self.busman, I2C_BUS)
        self.led = nodes.LedService(self.core, self.sched, self.busman, I2C_BUS)
        self.servo = nodes.ServoService(self.core, self.sched)

        self.touch_pub = nodes.TouchPublisher(self.core, self.sched, self.busman,
                                              I2C_BUS, cfg.touch_period)
        self.gesture_pub = nodes.GesturePublisher(self.core, self.sched, self.busman,
                                                  I2C_BUS, cfg.gesture_period)
        self.force_pub = nodes.ForcePublisher(self.core, self.sched, self.busman,
                                              I2C_BUS, cfg.force_period)
        self.range_pub = nodes.RangePublisher(self.core, self.sched, self.busman,
                                              I2C_BUS, cfg.track_period)

        self.dialogue_db = speech.load_dialogue(cfg.dialogues_text)
        self.s2s = speech.SpeechToSpeechNode(self.core, self.dialogue_db)

        self.touch_thanks = behaviors.TouchThanksBehavior(self.core)
        self.wave_greeting = behaviors.WaveGreetingBehavior(self.core)
        hug_cfg = behaviors.HugConfig(phrase=cfg.hug_phrase)
        if cfg.hug_threshold_code is not None:
            hug_cfg.threshold_code = cfg.hug_threshold_code
        self.hug = behaviors.HugBehavior(self.core, hug_cfg)
        self.tracker = behaviors.TrackerBehavior(self.core)
        self.iort_service = behaviors.IortService(self.core)

        self.store = store or gateway.GatewayStore(time_fn=lambda: self.sched.now)
        if cfg.gateway_url:
            self.gateway_client = gateway.HttpGatewayClient(cfg.gateway_url)
        else:
            self.gateway_client = gateway.InProcessGatewayClient(
                self.store, self.sched, cfg.gateway_delay)
        self.iort_behavior = behaviors.IortBehavior(
            self.core, self.sched, self.gateway_client, cfg.robot_id,
            cfg.iort_period)

        self.announcer = None
        if cfg.weights_path:
            from .vision import cnn
            weights = cnn.load_weights(cfg.weights_path)
            self.announcer = HandSignAnnouncer(self.core, self.sched, self.world,
                                               weights, cfg.hand_period)

    def _apply_event(self, ev: scenario.ScenarioEvent) -> None:
        scenario.apply(self.world, ev)
        self.sched.log_line("WORLD", ev.action, f"args={ev.args!r}")
        while self.world.pending_speech:
            self.speech_injector.inject(self.world.pending_speech.popleft())

    def run(self, duration: float) -> int:
        return self.sched.run_until(duration)

    def run_realtime(self, duration: float, scale: float = 1.0) -> int:
        return self.sched.run_realtime(duration, scale)

    def report(self, scenario_path: str = "", duration: float = 0.0,
               latency: Optional[dict] = None) -> dict:
        return {
            "scenario": scenario_path,
            "duration": duration,
            "seed": self.config.seed,
            "robot_id": self.config.robot_id,
            "topics": self.core.published_counts(),
            "services": {name: calls for name, (calls, _)
                         in self.core.service_stats().items()},
            "bus_transactions": len(self.busman.history),
            "transcript": [{"t": e.t, "text": e.text}
                           for e in self.transcript.entries],
            "latency": latency or {},
        }


def render_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def build_from_text(text: str, config: SystemConfig | None = None,
                    store: Optional[gateway.GatewayStore] = None) -> System:
    return System(scenario.parse_scenario(text), config, store)


# -- latency harness -----------------------------------------------------------

LOCAL_CATEGORIES = ("touch", "hug")
GATEWAY_CATEGORIES = {
    "touch_gateway": behaviors.CMD_READ_TOUCH,
    "shake_head": behaviors.CMD_SHAKE_HEAD,
    "temperature": behaviors.CMD_TEMPERATURE,
    "ultrasound": behaviors.CMD_SONAR,
    "tts": behaviors.CMD_TTS,
}
GATEWAY_ARGS = {behaviors.CMD_TTS: {"text": "hello"}}


def _phase(i: int) -> float:
    # Issue phases sit in (0.5, 0.9) so that, for injected delays up to
    # 0.27 s, the same poll tick fetches the command with and without the
    # delay; the round trip then grows by exactly the three wire legs that
    # precede the completion stamp (fetch request/response, post request).
    return 0.55 + 0.32 * (i % 5) / 5.0


def _stats(samples: list[float]) -> dict:
    ordered = sorted(samples)
    n = len(ordered)
    median = (ordered[(n - 1) // 2] + ordered[n // 2]) / 2.0
    p95 = ordered[min(n - 1, max(0, -(-95 * n // 100) - 1))]
    return {"median": median, "p95": p95, "samples": samples}


def measure_local(kind: str, polls: int, config: SystemConfig | None = None) -> list[float]:
    """Reaction times from a scripted stimulus to its transcript entry."""
    spacing = 3.0
    stim_times = [i * spacing + _phase(i) for i in range(polls)]
    events = []
    for t in stim_times:
        if kind == "touch":
            events.append(scenario.ScenarioEvent(t, "touch_on", (0,)))
            events.append(scenario.ScenarioEvent(t + 1.5, "touch_off", (0,)))
        elif kind == "hug":
            events.append(scenario.ScenarioEvent(t, "force", ("left", 3.0)))
            events.append(scenario.ScenarioEvent(t, "force", ("right", 3.0)))
            events.append(scenario.ScenarioEvent(t + 1.5, "force", ("left", 0.0)))
            events.append(scenario.ScenarioEvent(t + 1.5, "force", ("right", 0.0)))
        else:
            raise ValueError(kind)
    events.sort(key=lambda e: e.at)
    system = System(events, config)
    system.run(polls * spacing + 2.0)
    wanted = behaviors.THANKS_PHRASE if kind == "touch" else system.hug.config.phrase
    reactions = [e.t for e in system.transcript.entries if e.text == wanted]
    if len(reactions) != polls:
        raise RuntimeError(f"{kind}: expected {polls} reactions, saw {len(reactions)}")
    return [r - t for r, t in zip(reactions, stim_times)]


def measure_gateway(code: int, polls: int,
                    config: SystemConfig | None = None) -> list[float]:
    """Round-trip times (issued to completed) for one command code."""
    system = System([], config)
    spacing = 4.0
    samples = []
    for i in range(polls):
        system.sched.run_until(i * spacing + _phase(i))
        samples.append(gateway.measure_roundtrip(
            system.store, system.sched, system.config.robot_id, code,
            GATEWAY_ARGS.get(code)))
    return samples


def latency_suite(polls: int = 5, delay: float = 0.0,
                  config: SystemConfig | None = None) -> dict:
    """Fig-13-style table: local reactions plus gateway round trips."""
    base = config or SystemConfig()
    table = {}
    for kind in LOCAL_CATEGORIES:
        table[kind] = _stats(measure_local(kind, polls, base))
    gw_cfg = SystemConfig(**{**base.__dict__, "gateway_delay": delay})
    for name, code in GATEWAY_CATEGORIES.items():
        table[name] = _stats(measure_gateway(code, polls, gw_cfg))
    return table
