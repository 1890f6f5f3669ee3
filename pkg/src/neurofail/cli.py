"""Command-line client for the analysis service.

Every subcommand is a thin adapter: it assembles a request from files and
flags, sends it through the HTTP API (an in-process instance by default, or a
remote server via --server), and writes the returned documents/CSV.  No
numeric logic lives here.

Exit codes: 0 success, 1 certificate or soundness failure (the counterexample
or report is still written), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any

USAGE_ERROR = 2
CHECK_FAILED = 1


def _default_seed() -> int:
    try:
        return int(os.environ.get("NEUROFAIL_SEED", "0"))
    except ValueError:
        return 0


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    import warnings

    with warnings.catch_warnings():
        # starlette 1.3 warns about its httpx bridge; harmless for in-process use
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

        from .service import create_app

        return TestClient(create_app(), raise_server_exceptions=False)


def _read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _write_text(path: str | None, text: str) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_json(path: str | None, doc: Any) -> None:
    if path:
        _write_text(path, json.dumps(doc, indent=2) + "\n")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}")


def _post(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code == 409:
        print(f"check failed: {resp.json().get('detail', resp.text)}", file=sys.stderr)
        raise SystemExit(CHECK_FAILED)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except ValueError:
            detail = resp.text
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)
    return resp.json()


def _dist_payload(args) -> dict:
    return {"kind": args.kind, "per_layer": args.dist}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="neurofail",
        description="Fault-tolerance analysis for feed-forward neural networks.",
    )
    p.add_argument("--server", help="base URL of a running service (default: in-process)")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="fit a network to a built-in target")
    t.add_argument("--target", required=True)
    t.add_argument("--target-params", default="{}", help="JSON object of target parameters")
    t.add_argument("--layers", type=_ints, required=True, help="comma-separated layer widths")
    t.add_argument("--kind", choices=["sigmoid", "tanh"], default="sigmoid")
    t.add_argument("--k", type=float, default=1.0)
    t.add_argument("--lr", type=float, default=0.5)
    t.add_argument("--epochs", type=int, default=2000)
    t.add_argument("--batch", type=int, default=None)
    t.add_argument("--samples", type=int, default=256)
    t.add_argument("--seed", type=int, default=_default_seed())
    t.add_argument("--stop-eps-prime", type=float, default=None)
    t.add_argument("--decay", type=float, default=0.0)
    t.add_argument("--momentum", type=float, default=0.0)
    t.add_argument("--clip-output", type=float, default=None)
    t.add_argument("--no-bias", action="store_true")
    t.add_argument("--freeze-hidden", action="store_true")
    t.add_argument("--grid-samples", action="store_true")
    t.add_argument("--eval-grid", type=int, default=256)
    t.add_argument("--out", required=True, help="network document path")
    t.add_argument("--log", default=None, help="training log CSV path")

    a = sub.add_parser("analyze", help="forward error propagation bound and report")
    a.add_argument("--net", required=True)
    a.add_argument("--dist", type=_ints, required=True)
    a.add_argument("--kind", choices=["neuron", "synapse"], default="neuron")
    a.add_argument("--capacity", type=float, required=True)
    a.add_argument("--eps", type=float, default=None)
    a.add_argument("--eps-prime", type=float, default=None)
    a.add_argument("--out", default=None)

    c = sub.add_parser("certify", help="robustness certificate for a fault distribution")
    c.add_argument("--net", required=True)
    c.add_argument("--dist", type=_ints, required=True)
    c.add_argument("--kind", choices=["neuron", "synapse"], default="neuron")
    c.add_argument("--eps", type=float, required=True)
    c.add_argument("--eps-prime", type=float, required=True)
    c.add_argument("--capacity", type=float, required=True)
    c.add_argument("--out", default=None)

    i = sub.add_parser("inject", help="evaluate one concrete fault scenario")
    i.add_argument("--net", required=True)
    i.add_argument("--input", type=_floats, required=True)
    i.add_argument("--scenario", required=True, help="scenario document path")
    i.add_argument("--dist", type=_ints, default=None, help="distribution for the bound column")
    i.add_argument("--kind", choices=["neuron", "synapse"], default="neuron")
    i.add_argument("--out", default=None)

    s = sub.add_parser("sweep-k", help="bound and observed error across Lipschitz constants")
    s.add_argument("--net", default=None)
    s.add_argument(
        "--family",
        type=_ints,
        default=None,
        help="build the near-linear tanh family with these layer widths instead of --net",
    )
    s.add_argument("--family-weight", type=float, default=0.5)
    s.add_argument("--family-output-weight", type=float, default=0.5)
    s.add_argument("--family-input-dim", type=int, default=2)
    s.add_argument("--dist", type=_ints, required=True)
    s.add_argument("--capacity", type=float, required=True)
    s.add_argument("--k", type=_floats, required=True)
    s.add_argument("--trials", type=int, default=8)
    s.add_argument("--seed", type=int, default=_default_seed())
    s.add_argument("--out", required=True, help="CSV path")

    q = sub.add_parser("quantize", help="reduced-precision error vs the analytic budget")
    q.add_argument("--net", required=True)
    q.add_argument("--bits", type=_ints, required=True)
    q.add_argument("--grid", type=int, default=1000)
    q.add_argument("--out", default=None, help="CSV path")

    b = sub.add_parser("boost", help="early-cutoff campaign with a certified drop policy")
    b.add_argument("--net", required=True)
    b.add_argument("--target", required=True)
    b.add_argument("--target-params", default="{}")
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--eps-prime", type=float, required=True)
    b.add_argument("--cut", type=_ints, required=True, help="per-layer drop budgets")
    b.add_argument("--latency", choices=["uniform", "exponential", "heavy_tail"], default="heavy_tail")
    b.add_argument("--mean", type=float, default=1.0)
    b.add_argument("--lo", type=float, default=0.1)
    b.add_argument("--hi", type=float, default=1.0)
    b.add_argument("--p-straggler", type=float, default=0.1)
    b.add_argument("--straggler-factor", type=float, default=10.0)
    b.add_argument("--trials", type=int, default=100)
    b.add_argument("--seed", type=int, default=_default_seed())
    b.add_argument("--out", default=None, help="CSV path")

    bc = sub.add_parser("brute-check", help="exhaustive oracle vs the certificate")
    bc.add_argument("--net", required=True)
    bc.add_argument("--target", required=True)
    bc.add_argument("--target-params", default="{}")
    bc.add_argument("--dist", type=_ints, required=True)
    bc.add_argument("--kind", choices=["neuron", "synapse"], default="neuron")
    bc.add_argument("--eps", type=float, required=True)
    bc.add_argument("--eps-prime", type=float, required=True)
    bc.add_argument("--capacity", type=float, required=True)
    bc.add_argument("--grid", type=int, default=17)
    bc.add_argument("--mode", choices=["crash", "byzantine"], default="crash")

    l1 = sub.add_parser("lemma1-demo", help="break any accuracy with one unbounded Byzantine neuron")
    l1.add_argument("--net", required=True)
    l1.add_argument("--eps", type=float, required=True)
    l1.add_argument("--clamp", type=float, default=None, help="re-run the scenario capacity-clamped")
    l1.add_argument("--out", default=None, help="scenario document path")

    tg = sub.add_parser("tightness", help="single-layer worst-case crash construction")
    tg.add_argument("--neurons", type=int, required=True)
    tg.add_argument("--fail", type=int, required=True)
    tg.add_argument("--w-m", type=float, required=True)
    tg.add_argument("--alpha", type=float, default=0.01)
    tg.add_argument("--k", type=float, default=1.0)

    return p


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    client = _client(args.server)

    if args.command == "train":
        payload = {
            "target": {"name": args.target, "params": json.loads(args.target_params)},
            "config": {
                "layer_sizes": args.layers,
                "activation": {"kind": args.kind, "k": args.k},
                "learning_rate": args.lr,
                "epochs": args.epochs,
                "batch_size": args.batch,
                "n_samples": args.samples,
                "seed": args.seed,
                "target_eps_prime": args.stop_eps_prime,
                "weight_decay": args.decay,
                "momentum": args.momentum,
                "max_output_weight": args.clip_output,
                "bias": not args.no_bias,
                "freeze_hidden": args.freeze_hidden,
                "grid_samples": args.grid_samples,
                "eval_grid": args.eval_grid,
            },
        }
        body = _post(client, "/train", payload)
        _write_json(args.out, body["network"])
        _write_text(args.log, body["history_csv"])
        print(f"trained: grid eps_prime = {body['eps_prime']!r} -> {args.out}")
        return 0

    if args.command == "analyze":
        payload = {
            "network": _read_json(args.net),
            "distribution": _dist_payload(args),
            "capacity": args.capacity,
            "eps": args.eps,
            "eps_prime": args.eps_prime,
        }
        body = _post(client, "/analyze", payload)
        _write_json(args.out, body["report"])
        print(json.dumps(body["report"], indent=2))
        return 0

    if args.command == "certify":
        payload = {
            "network": _read_json(args.net),
            "distribution": _dist_payload(args),
            "eps": args.eps,
            "eps_prime": args.eps_prime,
            "capacity": args.capacity,
        }
        body = _post(client, "/certify", payload)
        _write_json(args.out, body["report"])
        report = body["report"]
        print(
            f"certified={report['certified']} fep={report['fep']!r} threshold={report['threshold']!r}"
        )
        return 0 if report["certified"] else CHECK_FAILED

    if args.command == "inject":
        payload = {
            "network": _read_json(args.net),
            "input": args.input,
            "scenario": _read_json(args.scenario),
            "distribution": {"kind": args.kind, "per_layer": args.dist} if args.dist else None,
        }
        body = _post(client, "/inject", payload)
        _write_json(args.out, body)
        print(
            f"nominal={body['nominal']!r} faulty={body['faulty']!r} "
            f"observed_error={body['observed_error']!r} bound={body['bound']!r}"
        )
        return 0 if body["sound"] is not False else CHECK_FAILED

    if args.command == "sweep-k":
        if (args.net is None) == (args.family is None):
            print("error: provide exactly one of --net or --family", file=sys.stderr)
            return USAGE_ERROR
        if args.family is not None:
            from .empirical import linear_regime_network
            from .net import to_document

            network_doc = to_document(
                linear_regime_network(
                    args.family,
                    input_dim=args.family_input_dim,
                    weight=args.family_weight,
                    output_weight=args.family_output_weight,
                )
            )
        else:
            network_doc = _read_json(args.net)
        payload = {
            "network": network_doc,
            "distribution": {"kind": "neuron", "per_layer": args.dist},
            "capacity": args.capacity,
            "k_values": args.k,
            "trials": args.trials,
            "seed": args.seed,
        }
        body = _post(client, "/sweep-k", payload)
        _write_text(args.out, body["csv"])
        print(
            f"rows={len(body['rows'])} fep_slope={body['fep_slope']!r} "
            f"observed_slope={body['observed_slope']!r} -> {args.out}"
        )
        return 0

    if args.command == "quantize":
        payload = {
            "network": _read_json(args.net),
            "fractional_bits": args.bits,
            "grid_per_dim": args.grid,
        }
        body = _post(client, "/quantize", payload)
        _write_text(args.out, body["csv"])
        print(body["csv"], end="")
        return 0 if body["all_sound"] else CHECK_FAILED

    if args.command == "boost":
        payload = {
            "network": _read_json(args.net),
            "target": {"name": args.target, "params": json.loads(args.target_params)},
            "eps": args.eps,
            "eps_prime": args.eps_prime,
            "cut_counts": args.cut,
            "latency": {
                "kind": args.latency,
                "seed": args.seed,
                "lo": args.lo,
                "hi": args.hi,
                "mean": args.mean,
                "p_straggler": args.p_straggler,
                "straggler_factor": args.straggler_factor,
            },
            "trials": args.trials,
            "seed": args.seed,
        }
        body = _post(client, "/boost", payload)
        _write_text(args.out, body["csv"])
        print(
            f"trials ok: mean_speedup={body['mean_speedup']!r} max_abs_err={body['max_abs_err']!r}"
        )
        return 0

    if args.command == "brute-check":
        payload = {
            "network": _read_json(args.net),
            "target": {"name": args.target, "params": json.loads(args.target_params)},
            "distribution": _dist_payload(args),
            "eps": args.eps,
            "eps_prime": args.eps_prime,
            "capacity": args.capacity,
            "grid_per_dim": args.grid,
            "mode": args.mode,
        }
        body = _post(client, "/brute-check", payload)
        print(
            f"certified={body['certified']} brute_force_passed={body['brute_force_passed']} "
            f"worst_error={body['worst_error']!r} scenarios={body['n_scenarios']}"
        )
        return 0 if body["agreement"] else CHECK_FAILED

    if args.command == "lemma1-demo":
        payload = {
            "network": _read_json(args.net),
            "eps": args.eps,
            "clamp_capacity": args.clamp,
        }
        body = _post(client, "/lemma1-demo", payload)
        _write_json(args.out, body["scenario"])
        line = f"broke={body['broke']} observed_error={body['observed_error']!r}"
        if body["clamped_error"] is not None:
            line += f" clamped_error={body['clamped_error']!r} clamped_sound={body['clamped_sound']}"
        print(line)
        return 0 if body["broke"] and body["clamped_sound"] is not False else CHECK_FAILED

    if args.command == "tightness":
        payload = {
            "n_neurons": args.neurons,
            "n_fail": args.fail,
            "w_m": args.w_m,
            "alpha": args.alpha,
            "k": args.k,
        }
        body = _post(client, "/tightness", payload)
        print(
            f"utilization={body['utilization']!r} observed={body['observed_error']!r} "
            f"bound={body['bound']!r}"
        )
        return 0

    raise AssertionError(f"unhandled command {args.command!r}")


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
