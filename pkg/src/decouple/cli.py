"""Command-line entry point.

Every batch subcommand is a thin client of the HTTP service: the config
document is posted to /jobs/<command>, by default against an in-process
instance of the app (no socket), or against a running server via --url.
``serve`` starts the server itself.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
from pathlib import Path

import httpx

from .commands import COMMANDS
from .service import create_app


def _one_line(text: str) -> str:
    return " ".join(str(text).split())


def _fail(kind: str, message: str) -> int:
    print(f"error: {kind}: {_one_line(message)}", file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decouple",
        description="Decouple training labels from prediction classes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    for name in COMMANDS:
        cmd = sub.add_parser(name, help=f"run the {name} job")
        cmd.add_argument("--config", help="JSON config file; omitted sections use defaults")
        cmd.add_argument("--seed", type=int, help="override the config seed")
        cmd.add_argument("--out", help="override the output directory")
        cmd.add_argument("--jobs", type=int, help="override the parallelism bound")
        cmd.add_argument("--url", help="address of a running service; default runs in-process")
    return parser


async def _post_job(command: str, payload: dict, url: str | None) -> httpx.Response:
    if url is None:
        transport = httpx.ASGITransport(app=create_app())
        client = httpx.AsyncClient(transport=transport, base_url="http://decouple.internal")
    else:
        client = httpx.AsyncClient(base_url=url)
    async with client:
        return await client.post(f"/jobs/{command}", json=payload, timeout=None)


def _load_config_document(args: argparse.Namespace) -> dict:
    doc: dict = {}
    if args.config is not None:
        doc = json.loads(Path(args.config).read_text())
        if not isinstance(doc, dict):
            raise ValueError("config root must be a JSON object")
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.out is not None:
        doc["out"] = args.out
    if args.jobs is not None:
        doc["jobs"] = args.jobs
    return doc


def _format_validation(detail) -> str:
    if isinstance(detail, list) and detail:
        first = detail[0]
        loc = ".".join(str(p) for p in first.get("loc", []) if p != "body")
        return f"{loc}: {first.get('msg', 'invalid value')}"
    return str(detail)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get("DECOUPLE_LOG", "WARNING").upper())

    if args.command == "serve":
        import uvicorn

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    try:
        payload = _load_config_document(args)
    except OSError as exc:
        return _fail("ConfigUnreadable", str(exc))
    except (ValueError, json.JSONDecodeError) as exc:
        return _fail("ConfigInvalid", str(exc))

    try:
        response = asyncio.run(_post_job(args.command, payload, args.url))
    except httpx.HTTPError as exc:
        return _fail("ServiceUnreachable", str(exc))

    if response.status_code == 200:
        for path in response.json()["written"]:
            print(path)
        return 0
    try:
        body = response.json()
    except json.JSONDecodeError:
        return _fail("ServiceError", f"status {response.status_code}")
    if "error" in body:
        return _fail(body["error"].get("type", "Error"), body["error"].get("message", ""))
    if "detail" in body:
        return _fail("ConfigValidation", _format_validation(body["detail"]))
    return _fail("ServiceError", f"status {response.status_code}")


if __name__ == "__main__":
    sys.exit(main())
