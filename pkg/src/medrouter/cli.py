"""Command-line interface.

Subcommands: ``registry list``, ``plan``, ``run``, ``eval``, ``serve``.
JSON output always goes through the canonical serializer, so a plan printed
here is byte-identical to the same plan served over HTTP.  Exit codes: 0 on
success, 1 for usage and domain errors, 2 for unexpected failures.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .backends import ImageRef, InferenceBackend, RemoteBackend, StubBackend, StubConfig
from .config import AppConfig, resolve_config
from .demo import demo_registry
from .engine import execute
from .errors import MedRouterError, UsageError
from .evalharness import default_corpus, load_corpus, run_eval
from .jsonio import canonical_json
from .lexicon import SynonymLexicon
from .llm import CannedLlmClient, HttpLlmClient, LlmConfig, plan_with_llm
from .offline import offline_parse
from .plan import Plan
from .registry import Registry, scan_registry
from .resolve import resolve_plan

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    # Argparse normally prints usage and exits 2; route through our error
    # handling instead so every CLI failure obeys the exit-code contract.
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _add_common_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="JSON config file")
    parser.add_argument("--registry", type=Path, default=None, help="weight registry directory")
    parser.add_argument("--lexicon", type=Path, default=None, help="synonym lexicon JSON file")
    parser.add_argument("--alpha", type=float, default=None, help="target similarity coefficient")
    parser.add_argument("--beta", type=float, default=None, help="modality similarity coefficient")
    parser.add_argument("--threshold", type=float, default=None, help="routing acceptance threshold")
    parser.add_argument("--tau", type=float, default=None, help="normalization acceptance threshold")
    parser.add_argument("--output-dir", type=Path, default=None, dest="output_dir", help="directory for masks and other artifacts")
    parser.add_argument("--backend", choices=("stub", "remote"), default=None, help="inference backend")
    parser.add_argument("--endpoint", default=None, help="remote inference endpoint URL")
    parser.add_argument("--timeout", type=float, default=None, help="remote call timeout in seconds")
    parser.add_argument("--frontend", choices=("offline", "llm"), default=None, help="request parsing frontend")


def _add_frontend_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--offline", action="store_true", help="force the offline frontend regardless of config")
    parser.add_argument(
        "--llm-fixtures",
        type=Path,
        default=None,
        help="JSONL of canned model responses; implies the llm frontend without network access",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="medrouter", description="Route medical imaging requests to pretrained weights.")
    commands = parser.add_subparsers(dest="command", required=True)

    registry_cmd = commands.add_parser("registry", help="registry inspection")
    registry_sub = registry_cmd.add_subparsers(dest="registry_command", required=True)
    registry_list = registry_sub.add_parser("list", help="list scanned weights")
    _add_common_options(registry_list)
    registry_list.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    registry_list.set_defaults(func=_cmd_registry_list)

    plan_cmd = commands.add_parser("plan", help="parse a request into a resolved plan")
    _add_common_options(plan_cmd)
    _add_frontend_options(plan_cmd)
    plan_cmd.add_argument("--query", required=True, help="natural language request")
    plan_cmd.add_argument("--explain", action="store_true", help="include ranked routing candidates")
    plan_cmd.set_defaults(func=_cmd_plan)

    run_cmd = commands.add_parser("run", help="plan and execute a request on an image")
    _add_common_options(run_cmd)
    _add_frontend_options(run_cmd)
    run_cmd.add_argument("--query", required=True, help="natural language request")
    run_cmd.add_argument("--explain", action="store_true", help="include ranked routing candidates")
    run_cmd.add_argument("--image", type=Path, required=True, help="input PNG or PGM image")
    run_cmd.add_argument("--forced-outcome", default=None, help="pin stub classification to this label")
    run_cmd.add_argument("--text", action="store_true", help="print the answer lines instead of JSON")
    run_cmd.set_defaults(func=_cmd_run)

    eval_cmd = commands.add_parser("eval", help="score the frontend against a gold corpus")
    _add_common_options(eval_cmd)
    _add_frontend_options(eval_cmd)
    eval_cmd.add_argument("--corpus", type=Path, default=None, help="gold corpus JSONL (bundled corpus by default)")
    eval_cmd.add_argument("--json", action="store_true", help="emit JSON instead of the metrics table")
    eval_cmd.set_defaults(func=_cmd_eval)

    serve_cmd = commands.add_parser("serve", help="start the HTTP planning service")
    _add_common_options(serve_cmd)
    serve_cmd.add_argument("--host", default="127.0.0.1")
    serve_cmd.add_argument("--port", type=int, default=None, help="listen port (default from config)")
    serve_cmd.set_defaults(func=_cmd_serve)

    return parser


_CONFIG_KEYS = (
    "registry",
    "lexicon",
    "alpha",
    "beta",
    "threshold",
    "tau",
    "output_dir",
    "backend",
    "endpoint",
    "timeout",
    "frontend",
    "port",
)


def _configure(args: argparse.Namespace) -> AppConfig:
    cli = {key: getattr(args, key, None) for key in _CONFIG_KEYS}
    return resolve_config(cli=cli, config_file=getattr(args, "config", None))


def _open_registry(config: AppConfig) -> tuple[Registry, SynonymLexicon]:
    lexicon = config.load_lexicon()
    if config.registry is not None:
        return scan_registry(config.registry, lexicon), lexicon
    print("no registry configured; using the bundled demo registry", file=sys.stderr)
    return demo_registry(lexicon=lexicon)


def _emit(doc: object) -> None:
    sys.stdout.write(canonical_json(doc))


def _warn_all(registry: Registry) -> None:
    for warning in registry.warnings:
        print(f"warning: {warning}", file=sys.stderr)


def _make_frontend(args: argparse.Namespace, config: AppConfig, registry: Registry, lexicon: SynonymLexicon):
    """Pick the query-to-plan callable; --offline beats fixtures beats config."""
    if getattr(args, "offline", False):
        return lambda query: offline_parse(query, registry.vocab, lexicon)
    fixtures: Path | None = getattr(args, "llm_fixtures", None)
    if fixtures is not None:
        client = CannedLlmClient.from_file(fixtures)
        return lambda query: plan_with_llm(query, registry.vocab, client)
    if config.frontend == "llm":
        client = HttpLlmClient(LlmConfig.from_env())
        return lambda query: plan_with_llm(query, registry.vocab, client)
    return lambda query: offline_parse(query, registry.vocab, lexicon)


def _make_backend(args: argparse.Namespace, config: AppConfig) -> InferenceBackend:
    forced = getattr(args, "forced_outcome", None)
    if config.backend == "remote":
        if forced is not None:
            raise UsageError("--forced-outcome only applies to the stub backend")
        return RemoteBackend(config.endpoint or "", timeout=config.timeout, output_dir=config.output_dir)
    return StubBackend(StubConfig(forced_outcome=forced), output_dir=config.output_dir)


def _cmd_registry_list(args: argparse.Namespace) -> int:
    config = _configure(args)
    registry, _ = _open_registry(config)
    _warn_all(registry)
    if args.json:
        _emit(registry.listing())
        return 0
    rows = registry.listing()
    if not rows:
        print("registry is empty")
        return 0
    headers = ("weight_id", "intent", "targets", "modality", "classes")
    table = [headers]
    for row in rows:
        table.append(
            (
                row["weight_id"],
                row["intent"],
                ", ".join(row["targets"]),
                row["modality"],
                ", ".join(row["class_labels"]),
            )
        )
    widths = [max(len(line[col]) for line in table) for col in range(len(headers))]
    for index, line in enumerate(table):
        print("  ".join(cell.ljust(widths[col]) for col, cell in enumerate(line)).rstrip())
        if index == 0:
            print("  ".join("-" * widths[col] for col in range(len(headers))))
    return 0


def _cmd_plan(args: argparse.Namespace) -> int:
    config = _configure(args)
    registry, lexicon = _open_registry(config)
    _warn_all(registry)
    plan = _make_frontend(args, config, registry, lexicon)(args.query)
    resolved = resolve_plan(plan, registry, lexicon, params=config.routing_params(), tau=config.tau)
    _emit(resolved.to_json_dict(explain=args.explain))
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    config = _configure(args)
    registry, lexicon = _open_registry(config)
    _warn_all(registry)
    plan = _make_frontend(args, config, registry, lexicon)(args.query)
    resolved = resolve_plan(plan, registry, lexicon, params=config.routing_params(), tau=config.tau)
    backend = _make_backend(args, config)
    report = execute(resolved, backend, ImageRef.open(args.image))
    if args.text:
        print(report.answer)
    else:
        _emit(report.to_json_dict(explain=args.explain))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    config = _configure(args)
    registry, lexicon = _open_registry(config)
    _warn_all(registry)
    records = load_corpus(args.corpus) if args.corpus is not None else default_corpus()
    frontend = _make_frontend(args, config, registry, lexicon)
    report = run_eval(
        records,
        registry,
        lexicon,
        frontend=frontend,
        params=config.routing_params(),
        output_dir=config.output_dir,
    )
    if args.json:
        _emit(report.to_json_dict())
    else:
        print(report.table_text())
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = _configure(args)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=config.port, log_level="warning")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return int(args.func(args))
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except MedRouterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
