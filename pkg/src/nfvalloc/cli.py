"""Command-line client for the allocation service.

Every subcommand builds one HTTP request.  Without ``--server`` the service
app is mounted in-process, so no daemon is needed and fixed-seed invocations
are exactly reproducible; with ``--server URL`` the same requests go to a
running instance (start one with ``nfvalloc serve``).

Exit codes: 0 success, 1 solver reported infeasibility, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2


def _write(out: str | None, text: str) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _request(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=None) as client:
            return client.post(path, json=payload)

    import asyncio

    from .service.app import app

    async def call():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://nfvalloc.internal",
                                     timeout=None) as client:
            return await client.post(path, json=payload)

    return asyncio.run(call())


def _post(args, path: str, payload: dict) -> dict:
    resp = _request(args.server, path, payload)
    if resp.status_code == 400:
        raise SystemExit(_usage_error(resp.json().get("detail", "bad request")))
    if resp.status_code == 409:
        sys.stderr.write(resp.json().get("detail", "conflict") + "\n")
        raise SystemExit(EXIT_INFEASIBLE)
    resp.raise_for_status()
    return resp.json()


def _usage_error(msg: str) -> int:
    sys.stderr.write(f"error: {msg}\n")
    return EXIT_USAGE


def _json_arg(text: str) -> dict:
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc}")
    if not isinstance(value, dict):
        raise argparse.ArgumentTypeError("expected a JSON object")
    return value


def _values_arg(text: str) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        try:
            out.append(int(part))
        except ValueError:
            try:
                out.append(float(part))
            except ValueError:
                raise argparse.ArgumentTypeError(f"not a number: {part!r}")
    return out


def _load_json_file(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(_usage_error(f"cannot read {path}: {exc}"))


def cmd_generate(args) -> int:
    params = dict(args.params)
    for key, attr in [("n_servers", "n_servers"), ("n_sfcs", "n_sfcs"),
                      ("alpha", "alpha"), ("t_th", "t_th"),
                      ("link_density", "link_density"),
                      ("demand_scale", "demand_scale")]:
        v = getattr(args, attr)
        if v is not None:
            params[key] = v
    if args.no_c2:
        params["enforce_distinct_servers"] = False
    data = _post(args, "/nfv/generate", {"params": params, "seed": args.seed})
    _write(args.out, json.dumps(data["instance"], sort_keys=True) + "\n")
    return EXIT_OK


def cmd_solve(args) -> int:
    instance = _load_json_file(args.instance)
    if args.no_c2:
        instance["enforce_distinct_servers"] = False
    data = _post(args, "/nfv/solve", {"instance": instance, "solver": args.solver,
                                      "timeout_s": args.timeout_s})
    _write(args.out, json.dumps(data, sort_keys=True) + "\n")
    if data["status"] in ("infeasible", "rounding_failure"):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sweep(args) -> int:
    payload = {
        "kind": args.kind,
        "params": args.params,
        "axis": args.axis,
        "values": args.values,
        "solvers": args.solvers.split(",") if args.solvers else None,
        "snapshots": args.snapshots,
        "seed": args.seed,
        "timeout_s": args.timeout_s,
        "timing": args.timing,
    }
    data = _post(args, "/sweep/run", payload)
    _write(args.out, data["detail_csv"])
    if args.out:
        Path(args.out).with_suffix(".agg.csv").write_text(data["aggregate_csv"])
    else:
        sys.stdout.write(data["aggregate_csv"])
    return EXIT_OK


def cmd_workflow(args) -> int:
    instance = _load_json_file(args.instance)
    if args.tasks:
        tasks = _load_json_file(args.tasks)["tasks"]
    else:
        gen = _post(args, "/mining/generate",
                    {"params": {"n_miners": args.miners}, "seed": args.seed})
        tasks = gen["tasks"]
    data = _post(args, "/workflow/run", {"instance": instance, "tasks": tasks,
                                         "solver": args.solver, "seed": args.seed})
    _write(args.out, data["events_jsonl"])
    if args.out:
        Path(args.out).with_suffix(".ledger.csv").write_text(data["ledger_csv"])
    else:
        sys.stdout.write(data["ledger_csv"])
    return EXIT_OK


def cmd_mine(args) -> int:
    if args.tasks:
        bundle = _load_json_file(args.tasks)
        tasks = bundle["tasks"]
        reward = bundle.get("reward", {})
    else:
        params = dict(args.params)
        if args.miners is not None:
            params["n_miners"] = args.miners
        if args.gamma is not None:
            params["gamma"] = args.gamma
        gen = _post(args, "/mining/generate", {"params": params, "seed": args.seed})
        tasks, reward = gen["tasks"], gen["reward"]
    gamma = args.gamma if args.gamma is not None else 0.5
    data = _post(args, "/mining/solve", {"tasks": tasks, "gamma": gamma,
                                         "reward": reward})
    if data["status"] != "optimal":
        sys.stderr.write(f"offloading {data['status']}\n")
        return EXIT_INFEASIBLE
    _write(args.out, data["csv"])
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nfvalloc",
        description="chain embedding, mining offloading, and contract workflow tools")
    parser.add_argument("--server", help="URL of a running service; default in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate an embedding scenario as JSON")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n-servers", dest="n_servers", type=int)
    g.add_argument("--n-sfcs", dest="n_sfcs", type=int)
    g.add_argument("--alpha", type=float)
    g.add_argument("--t-th", dest="t_th", type=float)
    g.add_argument("--link-density", dest="link_density", type=float)
    g.add_argument("--demand-scale", dest="demand_scale", type=float)
    g.add_argument("--no-c2", action="store_true",
                   help="drop the distinct-servers constraint (comparison mode)")
    g.add_argument("--params", type=_json_arg, default={},
                   help="extra scenario parameters as a JSON object")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve a scenario JSON")
    s.add_argument("--instance", required=True)
    s.add_argument("--solver", choices=["exact", "ara", "hura"], default="hura")
    s.add_argument("--timeout-s", dest="timeout_s", type=float)
    s.add_argument("--no-c2", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="run a parameter sweep, emit CSVs")
    w.add_argument("--kind", choices=["nfv", "mining"], default="nfv")
    w.add_argument("--axis", required=True)
    w.add_argument("--values", required=True, type=_values_arg,
                   help="comma-separated numbers")
    w.add_argument("--solvers", help="comma-separated subset of exact,ara,hura")
    w.add_argument("--snapshots", type=int, default=10)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--timeout-s", dest="timeout_s", type=float)
    w.add_argument("--timing", action="store_true",
                   help="record wall time (breaks byte reproducibility)")
    w.add_argument("--params", type=_json_arg, default={})
    w.add_argument("--out", help="detail CSV path; aggregate goes to *.agg.csv")
    w.set_defaults(func=cmd_sweep)

    f = sub.add_parser("workflow", help="simulate the contract workflow")
    f.add_argument("--instance", required=True)
    f.add_argument("--tasks", help="mining tasks JSON (else generated)")
    f.add_argument("--miners", type=int, default=3)
    f.add_argument("--solver", choices=["ara", "hura"], default="hura")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", help="event log JSONL path; ledger goes to *.ledger.csv")
    f.set_defaults(func=cmd_workflow)

    m = sub.add_parser("mine", help="solve the mining offloading problem")
    m.add_argument("--tasks", help="tasks JSON file (else generated)")
    m.add_argument("--miners", type=int)
    m.add_argument("--gamma", type=float)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--params", type=_json_arg, default={})
    m.add_argument("--out")
    m.set_defaults(func=cmd_mine)

    v = sub.add_parser("serve", help="run the HTTP service")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8000)
    v.set_defaults(func=cmd_serve)

    return parser


def main(argv: list | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        raise exc
    except httpx.HTTPError as exc:
        sys.stderr.write(f"service error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
