"""Command-line entry points.

    cradlewatch hub --config hub.json
    cradlewatch sim run scenario.json --target host:port [--speed N] [--transcript out.json]
    cradlewatch sim check transcript.json expected.json
    cradlewatch analyze spectrum samples.csv --rate 16000 [--band 250:5500] [--json]

Log verbosity comes from CRADLEWATCH_LOG_LEVEL (error, info, debug).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import acoustics, config, hub, sim
from .eventlog import canonical_json

logger = logging.getLogger(__name__)

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level = os.environ.get("CRADLEWATCH_LOG_LEVEL", "info").lower()
    logging.basicConfig(
        level=_LOG_LEVELS.get(level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _parse_target(target: str) -> tuple[str, int]:
    host, _, port = target.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"target must be host:port, got {target!r}")
    return host, int(port)


def _cmd_hub(args: argparse.Namespace) -> int:
    try:
        cfg = config.from_file(args.config)
    except config.ConfigError as exc:
        logger.error("bad config: %s", exc)
        return 1
    return hub.serve(cfg)


def _cmd_sim_run(args: argparse.Namespace) -> int:
    try:
        scenario = sim.load_scenario(args.scenario)
        host, port = _parse_target(args.target)
        transcript = sim.run(scenario, host, port, speed=args.speed)
    except (sim.ScenarioSchemaError, ValueError) as exc:
        logger.error("%s", exc)
        return 1
    except (ConnectionRefusedError, sim.SimError) as exc:
        logger.error("hub not reachable or not responding: %s", exc)
        return 1
    if args.transcript:
        sim.write_transcript(transcript, args.transcript)
        logger.info("transcript written to %s", args.transcript)
    else:
        print(canonical_json(transcript))
    return 0


def _cmd_sim_check(args: argparse.Namespace) -> int:
    try:
        transcript = json.loads(open(args.transcript).read())
        expected = sim.load_expected(args.expected)
    except (OSError, json.JSONDecodeError, sim.ScenarioSchemaError) as exc:
        logger.error("%s", exc)
        return 1
    report = sim.check(transcript, expected)
    print(report.summary())
    return 0 if report.ok else 1


def _cmd_analyze_spectrum(args: argparse.Namespace) -> int:
    lo, _, hi = args.band.partition(":")
    lo_hz, hi_hz = float(lo), float(hi)
    try:
        buf = acoustics.load_samples_csv(args.csv, rate_hz=args.rate)
        spec = acoustics.power_spectrum(buf)
        flatness = acoustics.band_flatness(spec, lo_hz, hi_hz)
        peak = acoustics.band_peak_hz(spec, lo_hz, hi_hz)
    except (OSError, ValueError) as exc:
        logger.error("%s", exc)
        return 1
    if args.json:
        print(canonical_json({"flatness": flatness, "peak_hz": peak, "band": [lo_hz, hi_hz]}))
    else:
        print(f"band:     {lo_hz:.0f}-{hi_hz:.0f} Hz")
        print(f"flatness: {flatness:.4f}")
        print(f"peak:     {peak:.1f} Hz")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cradlewatch", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    hub_cmd = commands.add_parser("hub", help="run the hub service until SIGINT/SIGTERM")
    hub_cmd.add_argument("--config", required=True, help="hub config JSON file")
    hub_cmd.set_defaults(func=_cmd_hub)

    sim_cmd = commands.add_parser("sim", help="device-farm simulator")
    sim_sub = sim_cmd.add_subparsers(dest="sim_command", required=True)
    run_cmd = sim_sub.add_parser("run", help="play a scenario against a live hub")
    run_cmd.add_argument("scenario", help="scenario JSON file")
    run_cmd.add_argument("--target", required=True, help="hub HTTP endpoint, host:port")
    run_cmd.add_argument("--speed", type=float, default=None, help="override scenario speed")
    run_cmd.add_argument("--transcript", help="write the transcript JSON here")
    run_cmd.set_defaults(func=_cmd_sim_run)
    check_cmd = sim_sub.add_parser("check", help="compare a transcript against expectations")
    check_cmd.add_argument("transcript")
    check_cmd.add_argument("expected")
    check_cmd.set_defaults(func=_cmd_sim_check)

    analyze_cmd = commands.add_parser("analyze", help="offline signal analysis")
    analyze_sub = analyze_cmd.add_subparsers(dest="analyze_command", required=True)
    spectrum_cmd = analyze_sub.add_parser("spectrum", help="power spectrum + band flatness of a CSV")
    spectrum_cmd.add_argument("csv", help="one amplitude per line")
    spectrum_cmd.add_argument("--rate", type=int, required=True, help="sample rate in Hz")
    spectrum_cmd.add_argument("--band", default="250:5500", help="analysis band, lo:hi Hz")
    spectrum_cmd.add_argument("--json", action="store_true", help="print JSON instead of text")
    spectrum_cmd.set_defaults(func=_cmd_analyze_spectrum)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
