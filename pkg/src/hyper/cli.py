"""Command-line entry point.

Exit codes: 0 success, 1 usage or query errors, 2 data/schema errors,
3 evaluation errors.  Errors print machine-readable JSON on stderr.
"""
from __future__ import annotations

import argparse
import os
import sys

from .errors import CausalModelError, EvaluationError, HyperError, QueryError, SchemaError
from .session import Session, SessionConfig, dumps


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyper", description="hypothetical query engine")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, need_query=True):
        p.add_argument("-c", "--config", default=os.environ.get("HYPER_CONFIG"),
                       help="session config JSON (or HYPER_CONFIG)")
        if need_query:
            p.add_argument("-q", "--query", required=True,
                           help="query file, inline query text, or - for stdin")
        p.add_argument("--estimator", choices=["exact", "freq"], default=None)
        p.add_argument("--sample", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--avg-denominator", choices=["expected", "fixed"], default=None)
        p.add_argument("--empty-groups", choices=["skip", "error"], default=None)

    add_common(sub.add_parser("whatif", help="evaluate a what-if query"))
    add_common(sub.add_parser("howto", help="solve a how-to query"))
    add_common(sub.add_parser("oracle", help="brute-force a what-if query"))
    add_common(sub.add_parser("blocks", help="dump the block partition"), need_query=False)

    check = sub.add_parser("check", help="parse and validate a query only")
    check.add_argument("-c", "--config", default=os.environ.get("HYPER_CONFIG"))
    check.add_argument("-q", "--query", required=True)

    serve = sub.add_parser("serve", help="run the HTTP API")
    add_common(serve, need_query=False)
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--static", default=None, help="serve a built workbench from this directory")

    repl = sub.add_parser("repl", help="interactive loop; terminate queries with ';'")
    add_common(repl, need_query=False)
    return parser


def _read_query(value: str) -> str:
    """Query source: '-' for stdin, a file path, or inline query text."""
    if value == "-":
        return sys.stdin.read()
    if os.path.exists(value):
        with open(value, encoding="utf-8") as fh:
            return fh.read()
    if any(ch.isspace() for ch in value):
        return value
    raise QueryError(f"query file not found: {value}")


def _open_session(args) -> Session:
    if not args.config:
        raise QueryError("a session config is required (-c or HYPER_CONFIG)")
    config = SessionConfig.load(args.config)
    session = Session.open(config)
    overrides = {
        "sample_size": getattr(args, "sample", None),
        "seed": getattr(args, "seed", None),
        "alpha": getattr(args, "alpha", None),
        "avg_denominator": getattr(args, "avg_denominator", None),
        "empty_groups": getattr(args, "empty_groups", None),
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(session.options, name, value)
    if getattr(args, "estimator", None) == "freq":
        session.scm = None
    elif getattr(args, "estimator", None) == "exact" and session.scm is None:
        raise QueryError("--estimator exact requires an scm in the session config")
    return session


def _fail(exc: Exception) -> int:
    payload = {"error": type(exc).__name__, "detail": str(exc)}
    for attr in ("line", "col"):
        if hasattr(exc, attr):
            payload[attr] = getattr(exc, attr)
    print(dumps(payload), file=sys.stderr)
    if isinstance(exc, QueryError):
        return 1
    if isinstance(exc, (SchemaError, CausalModelError)):
        return 2
    if isinstance(exc, (EvaluationError, HyperError)):
        return 3
    return 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check":
            session = _check_session(args)
            print(dumps(session.run_check(_read_query(args.query))))
            return 0
        session = _open_session(args)
        if args.command == "whatif":
            print(dumps(session.run_whatif(_read_query(args.query))))
        elif args.command == "howto":
            print(dumps(session.run_howto(_read_query(args.query))))
        elif args.command == "oracle":
            print(dumps(session.run_oracle(_read_query(args.query))))
        elif args.command == "blocks":
            print(dumps(session.run_blocks()))
        elif args.command == "serve":
            _serve(session, args)
        elif args.command == "repl":
            return _repl(session)
        return 0
    except HyperError as exc:
        return _fail(exc)
    except OSError as exc:
        print(dumps({"error": "OSError", "detail": str(exc)}), file=sys.stderr)
        return 2


def _check_session(args) -> Session:
    if not args.config:
        raise QueryError("check needs the session config for schema binding")
    return Session.open(SessionConfig.load(args.config))


def _serve(session: Session, args):
    import uvicorn

    from .server import create_app

    app = create_app(session, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


def _repl(session: Session) -> int:
    buffer = []
    print("hyper> ", end="", flush=True)
    for line in sys.stdin:
        buffer.append(line)
        if line.strip().endswith(";"):
            text = "".join(buffer).strip().rstrip(";")
            buffer = []
            try:
                if "HOWTOUPDATE" in text.upper():
                    print(dumps(session.run_howto(text)))
                else:
                    print(dumps(session.run_whatif(text)))
            except HyperError as exc:
                print(dumps({"error": type(exc).__name__, "detail": str(exc)}))
            print("hyper> ", end="", flush=True)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
