"""Operator command line: run scenarios, serve the gateway, classify, measure."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import gateway as gw
from . import runtime, scenario, speech

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vestbed",
        description="Deterministic sensor-vest robot simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="play a scenario through the full node graph")
    run.add_argument("--scenario", required=True, help="scenario file path")
    run.add_argument("--duration", type=float, default=30.0)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--log", help="write the event log here")
    run.add_argument("--transcript", help="write the transcript JSON here")
    run.add_argument("--report", help="write the run report JSON here")
    run.add_argument("--realtime", action="store_true",
                     help="pace virtual time against the wall clock")
    run.add_argument("--weights", help="CNN weights for hand-sign announcements")
    run.add_argument("--dialogues", help="dialogue config.txt (default built-in)")
    run.add_argument("--gateway", metavar="URL",
                     help="poll a served gateway over HTTP instead of the "
                          "built-in in-process store (pairs with --realtime)")

    serve = sub.add_parser("gateway", help="serve the IoT REST gateway over HTTP")
    serve.add_argument("--port", type=int,
                       default=int(os.environ.get(gw.PORT_ENV_VAR, gw.DEFAULT_PORT)))
    serve.add_argument("--delay", type=float, default=0.0,
                       help="injected network delay, seconds each way")
    serve.add_argument("--journal", help="journal directory (JSON lines per robot)")

    classify = sub.add_parser("classify", help="run the vision pipeline on an image")
    classify.add_argument("--image", required=True)
    classify.add_argument("--weights", required=True)
    classify.add_argument("--verbose", action="store_true",
                          help="print the 16-layer shape trace")

    latency = sub.add_parser("latency", help="measure the interaction latency table")
    latency.add_argument("--polls", type=int, default=5)
    latency.add_argument("--delay", type=float, default=0.0)
    latency.add_argument("--seed", type=int, default=0)
    latency.add_argument("--report", help="write the latency table JSON here")
    return parser


def cmd_run(args: argparse.Namespace) -> int:
    try:
        text = Path(args.scenario).read_text(encoding="utf-8")
        events = scenario.parse_scenario(text)
        dialogues = (Path(args.dialogues).read_text(encoding="utf-8")
                     if args.dialogues else speech.DEFAULT_DIALOGUES)
        config = runtime.SystemConfig(seed=args.seed, weights_path=args.weights,
                                      dialogues_text=dialogues,
                                      gateway_url=args.gateway)
        system = runtime.System(events, config)
    except (OSError, scenario.ParseError, speech.DialogueParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.realtime:
        system.run_realtime(args.duration)
    else:
        system.run(args.duration)

    report = system.report(args.scenario, args.duration)
    rendered = runtime.render_report(report)
    if args.report:
        Path(args.report).write_text(rendered, encoding="utf-8")
    if args.transcript:
        Path(args.transcript).write_text(system.transcript.to_json(),
                                         encoding="utf-8")
    if args.log:
        Path(args.log).write_text("\n".join(system.sched.log) + "\n",
                                  encoding="utf-8")
    sys.stdout.write(rendered)
    return EXIT_OK


def cmd_gateway(args: argparse.Namespace) -> int:
    store = gw.GatewayStore(journal_dir=args.journal)
    try:
        server = gw.GatewayServer(store, port=args.port, delay=args.delay)
    except OSError as exc:
        print(f"error: cannot bind port {args.port}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"gateway listening on http://127.0.0.1:{server.port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.httpd.server_close()
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    from .vision import cnn, image_io
    try:
        image = image_io.load_image(args.image)
        weights = cnn.load_weights(args.weights)
    except (OSError, image_io.ImageFormatError, cnn.WeightsFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    trace: list[str] = []
    try:
        label, probs = cnn.classify(image, weights, trace)
    except (cnn.ShapeError, Exception) as exc:  # noqa: BLE001 - diagnostic exit
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if args.verbose:
        for line in trace:
            print(line)
    probs_text = "[" + ", ".join(f"{p:.6f}" for p in probs) + "]"
    print(f"class={label} probs={probs_text}")
    return EXIT_OK


def cmd_latency(args: argparse.Namespace) -> int:
    config = runtime.SystemConfig(seed=args.seed)
    table = runtime.latency_suite(args.polls, args.delay, config)
    rendered = json.dumps(table, sort_keys=True, indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(rendered, encoding="utf-8")
    sys.stdout.write(rendered)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {"run": cmd_run, "gateway": cmd_gateway,
                "classify": cmd_classify, "latency": cmd_latency}
    try:
        return handlers[args.command](args)
    except Exception as exc:  # noqa: BLE001 - single CLI failure funnel
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
