"""Command line entry points: serve, replay, fixture."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .ledger import Ledger


def _load_ledger(path: str | None, seed: int | None) -> Ledger:
    if path and os.path.exists(path):
        return Ledger.load(path)
    return Ledger(salt=seed or 0)


def cmd_serve(args: argparse.Namespace) -> int:
    import signal

    import uvicorn

    from .service import Runtime, create_app

    ledger = _load_ledger(args.ledger, None)
    runtime = Runtime(ledger, repo_dir=args.repo)
    app = create_app(runtime)
    # uvicorn re-raises the stop signal after restoring the pre-run handlers;
    # left at the default that would kill us before the snapshot below
    signal.signal(signal.SIGTERM, lambda signum, frame: None)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except KeyboardInterrupt:
        pass
    finally:
        if args.ledger:
            ledger.save(args.ledger)
            print(f"ledger saved to {args.ledger}", file=sys.stderr)
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    from .service.replay import replay
    from .service.report import (write_cost_figure, write_table,
                                 write_transactions_csv)

    with open(args.model, encoding="utf-8") as fh:
        model_xml = fh.read()
    with open(args.traces, encoding="utf-8") as fh:
        traces_text = fh.read()
    ledger = Ledger.load(args.ledger) if args.ledger else None
    try:
        result, ledger = replay(model_xml, traces_text, ledger=ledger,
                                seed=args.seed)
    except ValueError as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return 2

    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(result.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    stem = args.out[:-5] if args.out.endswith(".json") else args.out
    write_table(result, stem + ".txt")
    write_transactions_csv(ledger, stem + ".csv")
    write_cost_figure(result, stem + ".png")

    print(f"replayed {len(result.cases)} case(s), "
          f"{len(result.violations)} violation(s)")
    print(f"report: {args.out} (+ .txt, .csv, .png)")
    return 1 if result.violations else 0


def cmd_fixture(args: argparse.Namespace) -> int:
    from .bpmn.fixture import write_examples

    paths = write_examples(args.dir)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaincase",
        description="process engine on a simulated ledger")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP gateway")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--ledger", help="snapshot file to load and save")
    serve.add_argument("--repo", help="model repository directory")
    serve.set_defaults(func=cmd_serve)

    rep = sub.add_parser("replay", help="replay traces against a model")
    rep.add_argument("--model", required=True, help="process document (XML)")
    rep.add_argument("--traces", required=True, help="JSONL trace file")
    rep.add_argument("--out", required=True, help="report JSON path")
    rep.add_argument("--ledger", help="ledger snapshot to replay onto")
    rep.add_argument("--seed", type=int, help="address salt for fresh ledgers")
    rep.set_defaults(func=cmd_replay)

    fix = sub.add_parser("fixture", help="write the demo model and traces")
    fix.add_argument("--dir", default="examples-out")
    fix.set_defaults(func=cmd_fixture)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
