"""Command-line client for the screening service.

Every subcommand talks to the HTTP API: by default requests are dispatched
in-process (no server required); pass --url to target a running instance.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 solver failure.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_SOLVER = 4

_DEFAULT_TIMEOUT = 600.0


class ClientError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def _post(url: str | None, path: str, payload: dict) -> dict:
    try:
        if url is None:
            from .service.app import app

            async def go() -> httpx.Response:
                transport = httpx.ASGITransport(app=app)
                async with httpx.AsyncClient(
                    transport=transport, base_url="http://mergerscreen.local"
                ) as client:
                    return await client.post(path, json=payload, timeout=_DEFAULT_TIMEOUT)

            response = asyncio.run(go())
        else:
            with httpx.Client(base_url=url, timeout=_DEFAULT_TIMEOUT) as client:
                response = client.post(path, json=payload)
    except httpx.HTTPError as err:
        raise ClientError(f"cannot reach service: {err}", EXIT_IO) from err
    if response.status_code == 422:
        raise ClientError(_detail(response), EXIT_VALIDATION)
    if response.status_code == 409:
        raise ClientError(_detail(response), EXIT_SOLVER)
    if response.status_code != 200:
        raise ClientError(f"unexpected status {response.status_code}: {response.text}", 1)
    return response.json()


def _detail(response: httpx.Response) -> str:
    try:
        detail = response.json().get("detail")
    except ValueError:
        detail = None
    return str(detail) if detail else response.text


def _read_json(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ClientError(f"cannot read {path}: {err}", EXIT_IO) from err
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ClientError(f"invalid JSON in {path}: {err}", EXIT_VALIDATION) from err


def _write_text(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as err:
        raise ClientError(f"cannot write {path}: {err}", EXIT_IO) from err


def _write_json(path: str, payload: dict) -> None:
    _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _cmd_calibrate(args: argparse.Namespace) -> int:
    payload = _read_json(args.input)
    if args.demand is not None:
        payload["demand"] = args.demand
    if args.scale is not None:
        payload["scale"] = args.scale
    result = _post(args.url, "/calibrate", payload)
    _write_json(args.out, result)
    return EXIT_OK


def _cmd_equilibrium(args: argparse.Namespace) -> int:
    if (args.model is None) == (args.market is None):
        raise ClientError("provide exactly one of --model or --market", EXIT_VALIDATION)
    if args.model is not None:
        payload = {"model": _read_json(args.model)}
    else:
        payload = {"market": _read_json(args.market)}
    result = _post(args.url, "/equilibrium", payload)
    _write_json(args.out, result)
    return EXIT_OK


def _cmd_merge(args: argparse.Namespace) -> int:
    payload = {
        "model": _read_json(args.model),
        "firm_a": args.firm_a,
        "firm_b": args.firm_b,
    }
    result = _post(args.url, "/merge", payload)
    _write_json(args.out, result)
    return EXIT_OK


def _cmd_approx(args: argparse.Namespace) -> int:
    payload = {
        "model": _read_json(args.model),
        "firm_a": args.firm_a,
        "firm_b": args.firm_b,
    }
    result = _post(args.url, "/approx", payload)
    _write_json(args.out, result)
    return EXIT_OK


def _cmd_mc(args: argparse.Namespace) -> int:
    payload = {
        "demand": args.demand,
        "reps": args.reps,
        "n_firms": args.firms,
        "margin_lo": args.margin_lo,
        "margin_hi": args.margin_hi,
        "seed": args.seed,
        "upp_scale": args.upp_scale,
        "workers": args.workers,
        "include_records": True,
        "include_figures": True,
    }
    result = _post(args.url, "/mc", payload)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise ClientError(f"cannot create {out}: {err}", EXIT_IO) from err
    _write_text(str(out / "records.csv"), result["records_csv"])
    _write_json(str(out / "summary.json"), result["summary"])
    for name, data in result["figures"].items():
        _write_text(str(out / f"{name}.csv"), data["csv"])
        _write_text(str(out / f"{name}.svg"), data["svg"])
    return EXIT_OK


def _cmd_rho_bounds(args: argparse.Namespace) -> int:
    hi_feasible = args.c0 * args.c0 / 2.0
    d_max = hi_feasible if args.delta0_max is None else args.delta0_max
    if args.steps < 1 or args.delta0_min <= 0 or d_max < args.delta0_min:
        raise ClientError("need steps >= 1 and 0 < delta0-min <= delta0-max", EXIT_VALIDATION)
    if args.steps == 1:
        grid = [args.delta0_min]
    else:
        step = (d_max - args.delta0_min) / (args.steps - 1)
        # clamp: accumulated rounding must not push past the feasibility boundary
        grid = [min(args.delta0_min + i * step, d_max) for i in range(args.steps)]
    result = _post(args.url, "/rho-bounds", {"c0": args.c0, "delta0": grid})
    lines = ["delta0,lower,upper"]
    for row in result["rows"]:
        lines.append(f"{row['delta0']:.17g},{row['lower']:.17g},{row['upper']:.17g}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mergerscreen",
        description="Merger screening toolkit: calibrate demand, solve Bertrand "
        "equilibria, and approximate merger harm from concentration statistics.",
    )
    parser.add_argument(
        "--url",
        default=None,
        help="base URL of a running service; omitted, requests run in-process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate a demand model from shares and a margin")
    p.add_argument("--input", required=True, help="JSON with shares/outside/margin_firm/margin")
    p.add_argument("--demand", choices=["mnl", "ces"], help="override the input's demand kind")
    p.add_argument("--scale", type=float, help="market size N or budget Y (default: V0 = 1)")
    p.add_argument("--out", required=True, help="output path for the calibrated model JSON")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("equilibrium", help="solve the Bertrand equilibrium")
    p.add_argument("--model", help="firm-level model JSON (e.g. calibrate output)")
    p.add_argument("--market", help="product-level market JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_equilibrium)

    p = sub.add_parser("merge", help="solve pre and post-merger equilibria")
    p.add_argument("--model", required=True)
    p.add_argument("--firm-a", required=True)
    p.add_argument("--firm-b", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_merge)

    p = sub.add_parser("approx", help="first-order merger-harm report")
    p.add_argument("--model", required=True)
    p.add_argument("--firm-a", required=True)
    p.add_argument("--firm-b", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_approx)

    p = sub.add_parser("mc", help="Monte Carlo accuracy experiment")
    p.add_argument("--demand", choices=["mnl", "ces"], required=True)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--firms", type=int, default=6)
    p.add_argument("--margin-lo", type=float, default=0.3)
    p.add_argument("--margin-hi", type=float, default=0.6)
    p.add_argument("--upp-scale", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("rho-bounds", help="tabulate the rho1 range per concentration change")
    p.add_argument("--c0", type=float, default=0.9, help="cap on the merging firms' combined share")
    p.add_argument("--delta0-min", type=float, default=0.005)
    p.add_argument("--delta0-max", type=float, default=None, help="default: c0^2/2")
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_rho_bounds)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ClientError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
