"""Command-line front end: a thin client over the service handlers.

    ipdyn <subcommand> --scenario <path> [--out <dir>] [--seed <u64>]

Subcommands: simulate, analyze, fit, optimize, sweep, stochastic, plus
``serve`` to launch the HTTP service. Outputs are byte-identical across
repeated runs with identical inputs and seeds. Exit codes: 0 success,
2 invalid scenario or arguments, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from pydantic import ValidationError

from .errors import InvalidInputError, NumericalFailureError
from .service import handlers, schemas


def _u64(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be in [0, 2^64), got {value}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipdyn",
        description="Simulate, analyze, calibrate and optimize infringement-protection dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "integrate the model; writes trajectory.csv and summary.json"),
        ("analyze", "regime map and protection-level comparison; writes two CSVs"),
        ("fit", "calibrate parameters from a t,N observation CSV; writes fit.json"),
        ("optimize", "optimize a protection schedule; writes schedule.json"),
        ("sweep", "summary row per parameter-grid cell; writes sweep.csv"),
        ("stochastic", "birth-death ensemble mean; writes stochastic.csv"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--scenario", required=True, help="path to a scenario JSON file")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--seed", type=_u64, default=None, help="override scenario seeds")
    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _reject_constant(name: str):
    raise InvalidInputError(f"non-finite number {name!r} is not allowed in scenarios")


def _reject_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise InvalidInputError(f"duplicate key {key!r} in scenario")
        out[key] = value
    return out


def load_scenario(path: Path) -> schemas.Scenario:
    """Parse and validate a scenario file; errors name the offending field."""
    try:
        raw = path.read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read scenario {path}: {exc}") from None
    try:
        payload = json.loads(
            raw, object_pairs_hook=_reject_duplicates, parse_constant=_reject_constant
        )
    except json.JSONDecodeError as exc:
        raise InvalidInputError(
            f"scenario {path} is not valid JSON (line {exc.lineno} column {exc.colno}): {exc.msg}"
        ) from None
    return schemas.Scenario.model_validate(payload)


def read_observations(path: Path) -> list[schemas.ObservationPoint]:
    """Read an observation CSV: header exactly 't,N', no blank lines."""
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidInputError(f"cannot read observations {path}: {exc}") from None
    lines = text.splitlines()
    if not lines:
        raise InvalidInputError(f"{path}: observations file is empty")
    if lines[0] != "t,N":
        raise InvalidInputError(f"{path} line 1: header must be exactly 't,N', got {lines[0]!r}")
    points = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            raise InvalidInputError(f"{path} line {lineno}: blank lines are not allowed")
        parts = line.split(",")
        if len(parts) != 2:
            raise InvalidInputError(f"{path} line {lineno}: expected 't,N' pair, got {line!r}")
        try:
            t, n = float(parts[0]), float(parts[1])
        except ValueError:
            raise InvalidInputError(f"{path} line {lineno}: cannot parse numbers in {line!r}") from None
        points.append(schemas.ObservationPoint(t=t, n=n))
    if not points:
        raise InvalidInputError(f"{path}: no observation rows after the header")
    return points


def _override_seeds(scenario: schemas.Scenario, seed: int) -> schemas.Scenario:
    update = {}
    for name in ("fit", "policy", "stochastic"):
        section = getattr(scenario, name)
        if section is not None:
            update[name] = section.model_copy(update={"seed": seed})
    return scenario.model_copy(update=update) if update else scenario


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    print(f"wrote {path}")


def _write_json(path: Path, payload: dict) -> None:
    _write_text(path, json.dumps(payload, indent=2) + "\n")


def _dispatch(args) -> int:
    if args.command == "serve":
        import uvicorn

        from .service.app import app

        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    scenario_path = Path(args.scenario)
    scenario = load_scenario(scenario_path)
    if args.seed is not None:
        scenario = _override_seeds(scenario, args.seed)
    out = Path(args.out)

    if args.command == "simulate":
        resp = handlers.simulate(scenario)
        _write_text(out / "trajectory.csv", resp.trajectory_csv)
        _write_json(out / "summary.json", resp.summary.model_dump(by_alias=True))
    elif args.command == "analyze":
        resp = handlers.analyze(scenario)
        _write_text(out / "regime_map.csv", resp.regime_map_csv)
        _write_text(out / "compare_levels.csv", resp.compare_levels_csv)
    elif args.command == "fit":
        section = scenario.fit
        if section is None or section.data is None:
            raise InvalidInputError("scenario field fit.data is required by the fit subcommand")
        data_path = Path(section.data)
        if not data_path.is_absolute():
            data_path = scenario_path.parent / data_path
        request = schemas.FitRequest(scenario=scenario, observations=read_observations(data_path))
        resp = handlers.run_fit(request)
        _write_json(out / "fit.json", resp.model_dump())
    elif args.command == "optimize":
        resp = handlers.optimize(scenario)
        _write_json(out / "schedule.json", resp.model_dump())
    elif args.command == "sweep":
        resp = handlers.sweep(scenario)
        _write_text(out / "sweep.csv", resp.sweep_csv)
    elif args.command == "stochastic":
        resp = handlers.stochastic(scenario)
        _write_text(out / "stochastic.csv", resp.trajectory_csv)
    else:  # pragma: no cover - argparse enforces the choices
        raise InvalidInputError(f"unknown command {args.command!r}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return _dispatch(args)
    except ValidationError as exc:
        for err in exc.errors():
            loc = ".".join(str(part) for part in err["loc"])
            print(f"error: scenario field {loc}: {err['msg']}", file=sys.stderr)
        return 2
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
