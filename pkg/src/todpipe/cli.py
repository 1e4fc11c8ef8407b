"""Operator CLI: a thin client of the HTTP service.

By default each command talks to an in-process instance of the FastAPI app
over an ASGI transport; pass ``--server URL`` to target a running service
instead.

Exit codes: 0 success, 1 usage error, 2 data error, 3 decoder/transport
error.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DECODER = 3

_KIND_EXIT = {"usage": EXIT_USAGE, "data": EXIT_DATA,
              "decoder": EXIT_DECODER}


class CommandFailed(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


class ServiceClient:
    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server.rstrip("/"),
                                        timeout=600.0)
        else:
            from starlette.testclient import TestClient

            from .service import create_app
            self._client = TestClient(create_app(),
                                      base_url="http://todpipe.local",
                                      raise_server_exceptions=False)

    def call(self, method: str, path: str, body=None):
        try:
            resp = self._client.request(method, path, json=body)
        except httpx.TransportError as e:
            raise CommandFailed(f"service unreachable: {e}", EXIT_DECODER)
        if resp.status_code >= 400:
            try:
                data = resp.json()
            except Exception:
                data = {"error": resp.text, "kind": "error"}
            kind = data.get("kind", "error")
            msg = data.get("error") or data.get("detail") or resp.text
            raise CommandFailed(msg, _KIND_EXIT.get(kind, EXIT_DATA))
        return resp

    def call_json(self, method, path, body=None):
        return self.call(method, path, body).json()


def _print(data):
    print(json.dumps(data, indent=1, ensure_ascii=False))


def cmd_preprocess(client, args):
    data = client.call_json("POST", "/preprocess", {
        "input_path": args.input, "output_path": args.out,
        "format": args.format, "version": args.version})
    _print(data)
    return EXIT_OK


def cmd_validate(client, args):
    data = client.call_json("POST", "/validate",
                            {"corpus_path": args.corpus})
    _print(data)
    return EXIT_OK


def cmd_export(client, args):
    data = client.call_json("POST", "/export", {
        "corpus_path": args.corpus, "output_path": args.out,
        "mode": args.mode, "db_path": args.db})
    _print(data)
    return EXIT_OK


def cmd_split(client, args):
    data = client.call_json("POST", "/split", {
        "corpus_path": args.corpus, "held_out": args.held_out,
        "fewshot_n": args.fewshot_n, "seed": args.seed,
        "output_dir": args.out_dir})
    _print(data)
    return EXIT_OK


def cmd_registry(client, args):
    resp = client.call("GET", "/registry")
    sys.stdout.write(resp.text)
    return EXIT_OK


def cmd_run(client, args):
    policy = {"window": args.window, "belief_source": args.belief_source,
              "act_resp_source": args.act_resp_source,
              "content_mask": args.content_mask}
    data = client.call_json("POST", "/run", {
        "corpus_path": args.corpus, "db_path": args.db,
        "setting": args.setting, "policy": policy, "decoder": args.decoder,
        "seed": args.seed, "output_dir": args.out_dir,
        "workers": args.workers, "max_sessions": args.max_sessions,
        "failure_threshold": args.failure_threshold,
        "greedy": not args.sample, "temperature": args.temperature})
    report = data["report"]
    print(f"{'Inform':>8} {'Success':>8} {'BLEU':>8} {'Combined':>9}")
    print(f"{report['inform']:8.1f} {report['success']:8.1f} "
          f"{report['bleu']:8.1f} {report['combined']:9.1f}")
    if report.get("joint_goal_accuracy") is not None:
        print(f"Joint goal accuracy: {report['joint_goal_accuracy']:.4f}")
    print(f"archive: {data['archive_path']}")
    print(f"report: {data['report_path']}")
    if data.get("failed_sessions"):
        print(f"failed sessions: {len(data['failed_sessions'])}",
              file=sys.stderr)
    return EXIT_OK


def cmd_chat(client, args, stdin=None, stdout=None):
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    start = client.call_json("POST", "/chat/start", {
        "corpus_path": args.corpus, "db_path": args.db,
        "decoder": args.decoder, "session_id": args.session_id,
        "seed": args.seed})
    chat_id = start["chat_id"]
    print("type a message, /state for the belief state, /quit to end",
          file=stdout)
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        if line == "/quit":
            break
        if line == "/state":
            data = client.call_json("GET", f"/chat/{chat_id}/state")
            print(data["belief_span"], file=stdout)
            continue
        try:
            data = client.call_json("POST", f"/chat/{chat_id}/message",
                                    {"text": line})
        except CommandFailed as e:
            print(f"[decoder error: {e}]", file=stdout)
            continue
        print(data["response"], file=stdout)
    data = client.call_json("POST", f"/chat/{chat_id}/end")
    print("--- transcript ---", file=stdout)
    for turn in data["turns"]:
        print(f"user: {turn['user']}", file=stdout)
        print(f"system: {turn['response']}", file=stdout)
    return EXIT_OK


def cmd_serve(client, args):
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="todpipe",
        description="session-level task-oriented dialog pipeline")
    p.add_argument("--server", default=None,
                   help="URL of a running service (default: in-process)")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("preprocess", help="canonicalize a raw corpus dump")
    sp.add_argument("input")
    sp.add_argument("out")
    sp.add_argument("--format", default="multiwoz-raw",
                    choices=["multiwoz-raw", "canonical"])
    sp.add_argument("--version", default="2.0")
    sp.set_defaults(func=cmd_preprocess)

    sp = sub.add_parser("validate", help="validate a canonical corpus")
    sp.add_argument("corpus")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("export", help="export a training file")
    sp.add_argument("corpus")
    sp.add_argument("out")
    sp.add_argument("--mode", default="session_delex",
                    choices=["session_delex", "ur_only", "dst_lex"])
    sp.add_argument("--db", default=None)
    sp.set_defaults(func=cmd_export)

    sp = sub.add_parser("split", help="leave-one-domain-out splits")
    sp.add_argument("corpus")
    sp.add_argument("held_out")
    sp.add_argument("out_dir")
    sp.add_argument("--fewshot-n", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("run", help="run sessions and evaluate")
    sp.add_argument("corpus")
    sp.add_argument("db")
    sp.add_argument("out_dir")
    sp.add_argument("--setting", default="end_to_end",
                    choices=["response_generation", "policy_optimization",
                             "end_to_end", "dst"])
    sp.add_argument("--decoder", default="oracle",
                    help="'oracle' or 'lm:<endpoint URL>'")
    sp.add_argument("--window", default="all", choices=["all", "prev"])
    sp.add_argument("--belief-source", default="generated",
                    choices=["generated", "oracle"])
    sp.add_argument("--act-resp-source", default="generated",
                    choices=["generated", "oracle"])
    sp.add_argument("--content-mask", default="full",
                    choices=["full", "ur_only", "bda_only"])
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--max-sessions", type=int, default=None)
    sp.add_argument("--failure-threshold", type=float, default=0.1)
    sp.add_argument("--sample", action="store_true",
                    help="sample instead of greedy decoding")
    sp.add_argument("--temperature", type=float, default=0.7)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("chat", help="interactive chat REPL")
    sp.add_argument("corpus")
    sp.add_argument("db")
    sp.add_argument("--decoder", default="oracle")
    sp.add_argument("--session-id", default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_chat)

    sp = sub.add_parser("registry", help="print the special token registry")
    sp.set_defaults(func=cmd_registry)

    sp = sub.add_parser("serve", help="run the HTTP service")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8200)
    sp.set_defaults(func=cmd_serve)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    client = None if args.command == "serve" else ServiceClient(args.server)
    try:
        return args.func(client, args)
    except CommandFailed as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
