"""Command-line client for the workbench.

Subcommands map one-to-one onto the service endpoints.  Without --server the
request is dispatched to the same handler functions in-process; with
--server it is POSTed to a running service (which must share the
filesystem paths named in the config).  Exit code 0 on success, 1 on a stage
failure (message names the stage), 2 on usage/config errors.
"""
from __future__ import annotations

import argparse
import sys
from typing import Optional

from pydantic import ValidationError

from . import service
from .config import load_run_config

_ENDPOINTS = {
    "generate": ("/stages/generate", service.handle_generate, service.StageRequest),
    "score": ("/stages/score", service.handle_score, service.ScoreRequest),
    "train-eval": ("/stages/train-eval", service.handle_train_eval, service.TrainEvalRequest),
    "correlate": ("/stages/correlate", service.handle_correlate, service.CorrelateRequest),
    "pipeline": ("/pipeline", service.handle_pipeline, service.PipelineRequest),
    "validate-data": ("/datasets/validate", service.handle_validate_data, service.ValidateDataRequest),
}


def _add_stage_args(parser: argparse.ArgumentParser, *, jobs: bool = False,
                    variant: bool = False, top_k: bool = False, metric: bool = False) -> None:
    parser.add_argument("--config", required=True, help="run config JSON file")
    parser.add_argument("--out", help="override the config's output directory")
    parser.add_argument("--seed", type=int, help="override the config's global seed")
    parser.add_argument("--server", help="base URL of a running service, e.g. http://127.0.0.1:8000")
    if variant:
        parser.add_argument("--variant", help="scoring variant to use")
    if top_k:
        parser.add_argument("--top-k", type=int, dest="top_k",
                            help="train only the top k circuits by final score (default: all)")
    if metric:
        parser.add_argument("--metric", help="test metric to correlate against")
    if jobs:
        parser.add_argument("--jobs", type=int, default=1, help="worker processes for circuit fan-out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqcsearch",
        description="Quantum-circuit-search workbench: generate, score, train, correlate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_stage_args(sub.add_parser("generate", help="write candidate genomes and the manifest"))
    _add_stage_args(sub.add_parser("score", help="compute CNR/RepCap scorecards"),
                    jobs=True, variant=True)
    _add_stage_args(sub.add_parser("train-eval", help="train circuits and evaluate on the test split"),
                    jobs=True, variant=True, top_k=True)
    _add_stage_args(sub.add_parser("correlate", help="rank-correlate scores with test metrics"),
                    variant=True, metric=True)
    _add_stage_args(sub.add_parser("pipeline", help="run all stages"),
                    jobs=True, variant=True, top_k=True, metric=True)

    validate = sub.add_parser("validate-data", help="check a dataset file against the format")
    validate.add_argument("path", help="dataset CSV file")
    validate.add_argument("--task", choices=["classification", "regression"],
                          help="also apply task-level label validation")
    validate.add_argument("--server", help="base URL of a running service")

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _dispatch(command: str, payload: dict, server: Optional[str]):
    path, handler, request_model = _ENDPOINTS[command]
    if server:
        import httpx

        response = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
        if response.status_code != 200:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise RuntimeError(f"server returned {response.status_code}: {detail}")
        return response.json()
    return handler(request_model.model_validate(payload)).model_dump()


def _print_summary(command: str, result: dict) -> None:
    if command == "generate":
        print(f"generated {result['n_circuits']} circuits in {result['out_dir']}")
    elif command == "score":
        for variant, cards in sorted(result["scorecards"].items()):
            print(f"scored {len(cards)} circuits [{variant}] -> "
                  f"{result['out_dir']}/scorecards_{variant}.csv")
    elif command == "train-eval":
        ok = sum(1 for r in result["rows"] if r["status"] == "ok")
        failed = len(result["rows"]) - ok
        print(f"trained {ok} circuits ({failed} failed) -> {result['out_dir']}/metrics.csv")
    elif command == "correlate":
        for row in result["rows"]:
            print(f"rho[{row['variant']} vs {row['metric']}] = {row['rho']:+.4f} "
                  f"(n={row['n_circuits']})")
    elif command == "pipeline":
        print(f"pipeline done: {result['n_circuits']} circuits, "
              f"{result['n_trained']} trained, variants={','.join(result['variants'])}")
        for row in result["correlations"]:
            print(f"rho[{row['variant']} vs {row['metric']}] = {row['rho']:+.4f} "
                  f"(n={row['n_circuits']})")
    elif command == "validate-data":
        print(f"{result['path']}: {result['rows']} rows, {result['n_features']} features, "
              f"{result['train_rows']} train / {result['test_rows']} test")
        for problem in result["problems"]:
            print(f"  problem: {problem}")


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command

    if command == "serve":
        import uvicorn

        uvicorn.run(service.app, host=args.host, port=args.port)
        return 0

    if command == "validate-data":
        payload = {"path": args.path, "task": args.task}
        try:
            result = _dispatch(command, payload, args.server)
        except Exception as exc:
            print(f"validate-data failed: {exc}", file=sys.stderr)
            return 1
        _print_summary(command, result)
        return 1 if result["problems"] else 0

    try:
        config = load_run_config(args.config)
    except FileNotFoundError:
        print(f"config file not found: {args.config}", file=sys.stderr)
        return 2
    except (ValidationError, ValueError) as exc:
        print(f"invalid config {args.config}: {exc}", file=sys.stderr)
        return 2

    payload: dict = {"config": config.model_dump(mode="json")}
    if args.out is not None:
        payload["out_dir"] = args.out
    if args.seed is not None:
        payload["seed"] = args.seed
    for key in ("variant", "top_k", "metric", "jobs"):
        if getattr(args, key, None) is not None:
            payload[key] = getattr(args, key)

    try:
        result = _dispatch(command, payload, args.server)
    except service.HTTPException as exc:
        print(f"{exc.detail}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"[{command}] failed: {exc}", file=sys.stderr)
        return 1
    _print_summary(command, result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
