"""Run the adapter from a manifest: python -m medadapter --manifest models.json"""
from __future__ import annotations

import argparse
import sys

import uvicorn

from .errors import ConfigError
from .manifest import load_manifest
from .service import build_app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="medadapter", description="Serve hosted models over the /infer protocol."
    )
    parser.add_argument("--manifest", required=True, help="path to the hosting manifest JSON")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8001)
    args = parser.parse_args(argv)

    try:
        app = build_app(load_manifest(args.manifest))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
