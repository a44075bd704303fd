"""Command-line front end: a thin client of the lab service.

Every subcommand marshals its flags into the service's request models and
posts them either to a remote server (--server URL) or, by default, straight
into the in-process ASGI app, so both paths exercise the same JSON surface.
Exit codes: 0 success, 2 invalid usage/config, 1 other failures.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        return httpx.post(server.rstrip("/") + path, json=payload, timeout=None)

    from .service.app import app

    async def call() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://plslab") as client:
            return await client.post(path, json=payload, timeout=None)

    return asyncio.run(call())


def _error_line(response: httpx.Response) -> str:
    try:
        detail = response.json().get("detail")
    except ValueError:
        detail = response.text
    if isinstance(detail, list):  # pydantic validation report
        keys = ",".join("/".join(str(p) for p in err.get("loc", [])) for err in detail)
        return f"error: invalid request fields: {keys}"
    return f"error: {detail}"


def _run(server: str | None, path: str, payload: dict) -> dict | int:
    try:
        response = _post(server, path, payload)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach server: {exc}", file=sys.stderr)
        return 1
    if response.status_code >= 400:
        print(_error_line(response), file=sys.stderr)
        return 2 if response.status_code in (400, 422) else 1
    return response.json()


def _add_train_settings(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("training settings (override the config file)")
    group.add_argument("--epochs", type=int)
    group.add_argument("--warmup-epochs", type=int)
    group.add_argument("--batch-size", type=int)
    group.add_argument("--lr0", type=float)
    group.add_argument("--weight-decay", type=float)
    group.add_argument("--momentum", type=float)
    group.add_argument("--gmm-threshold", type=float)
    group.add_argument("--pseudo-exponent", type=float)
    group.add_argument("--contrastive-temperature", type=float)
    group.add_argument("--enable-correction", action=argparse.BooleanOptionalAction)
    group.add_argument("--enable-contrastive", action=argparse.BooleanOptionalAction)
    group.add_argument("--enable-w", action=argparse.BooleanOptionalAction)
    group.add_argument("--w-in-contrastive", action=argparse.BooleanOptionalAction)
    group.add_argument("--w-selection", choices=["gmm", "threshold"])
    group.add_argument("--w-threshold", type=float)
    group.add_argument("--class-reg-weight", type=float)
    group.add_argument("--hidden-dim", type=int)
    group.add_argument("--proj-dim", type=int)


_SETTING_KEYS = ["epochs", "warmup_epochs", "batch_size", "lr0", "weight_decay",
                 "momentum", "gmm_threshold", "pseudo_exponent",
                 "contrastive_temperature", "enable_correction",
                 "enable_contrastive", "enable_w", "w_in_contrastive",
                 "w_selection", "w_threshold", "class_reg_weight",
                 "hidden_dim", "proj_dim"]


def _collect_settings(args: argparse.Namespace) -> dict:
    settings: dict = {}
    if getattr(args, "config", None):
        try:
            settings.update(json.loads(open(args.config).read()))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            raise SystemExit(2)
    for key in _SETTING_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plslab",
                                     description="label-noise training lab client")
    parser.add_argument("--server", help="remote service URL; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a noisy blob dataset")
    gen.add_argument("--classes", type=int, default=3)
    gen.add_argument("--dim", type=int, default=2)
    gen.add_argument("--n-per-class", type=int, default=1000)
    gen.add_argument("--n-test-per-class", type=int)
    gen.add_argument("--separation", type=float, default=4.0)
    gen.add_argument("--class-std", type=float, default=1.0)
    gen.add_argument("--r-in", type=float, default=0.0)
    gen.add_argument("--r-out", type=float, default=0.0)
    gen.add_argument("--id-mode", choices=["SYMMETRIC", "ASYMMETRIC"],
                     default="SYMMETRIC")
    gen.add_argument("--ood-preset", choices=["far", "web"], default="far")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True, dest="out_dir")

    tr = sub.add_parser("train", help="run one training job")
    tr.add_argument("--config", help="JSON file mirroring the training settings")
    tr.add_argument("--data", required=True, dest="data_dir")
    tr.add_argument("--out", required=True, dest="out_dir")
    tr.add_argument("--seed", type=int, required=True)
    _add_train_settings(tr)

    ab = sub.add_parser("ablate", help="run the switch ablation grid")
    ab.add_argument("--config", help="JSON file mirroring the training settings")
    ab.add_argument("--data", required=True, dest="data_dir")
    ab.add_argument("--out", required=True, dest="out_dir")
    ab.add_argument("--seeds", required=True,
                    help="comma-separated seed list, e.g. 0,1,2,3,4")
    _add_train_settings(ab)

    rep = sub.add_parser("report", help="emit plot-data CSVs for a finished run")
    rep.add_argument("--run", required=True, dest="run_dir")
    rep.add_argument("--out", dest="out_dir")

    srv = sub.add_parser("serve", help="start the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service.app import app
        uvicorn.run(app, host=args.host, port=args.port)
        return 0

    if args.command == "generate":
        payload = {"classes": args.classes, "dim": args.dim,
                   "n_per_class": args.n_per_class, "separation": args.separation,
                   "class_std": args.class_std, "r_in": args.r_in,
                   "r_out": args.r_out, "id_mode": args.id_mode,
                   "ood_preset": args.ood_preset, "seed": args.seed,
                   "out_dir": args.out_dir}
        if args.n_test_per_class is not None:
            payload["n_test_per_class"] = args.n_test_per_class
        result = _run(args.server, "/generate", payload)
        if isinstance(result, int):
            return result
        print(f"wrote {result['n_train']} train / {result['n_test']} test samples "
              f"({result['n_id_noisy']} id-noisy, {result['n_ood_noisy']} ood-noisy) "
              f"to {result['train_path']}")
        return 0

    if args.command == "train":
        settings = _collect_settings(args)
        settings["seed"] = args.seed
        result = _run(args.server, "/train",
                      {"data_dir": args.data_dir, "out_dir": args.out_dir,
                       "config": settings})
        if isinstance(result, int):
            return result
        s = result["summary"]
        print(f"seed {s['seed']}: best test acc {s['best_test_acc']:.4f} "
              f"(epoch {s['best_epoch']}), final {s['final_test_acc']:.4f}, "
              f"{s['wall_clock_s']:.1f}s")
        print(f"artifacts: {result['csv_path']}")
        return 0

    if args.command == "ablate":
        try:
            seeds = [int(s) for s in args.seeds.split(",") if s != ""]
        except ValueError:
            print(f"error: bad --seeds value {args.seeds!r}", file=sys.stderr)
            return 2
        if not seeds:
            print("error: --seeds is empty", file=sys.stderr)
            return 2
        result = _run(args.server, "/ablate",
                      {"data_dir": args.data_dir, "out_dir": args.out_dir,
                       "seeds": seeds, "config": _collect_settings(args)})
        if isinstance(result, int):
            return result
        width = max(len(r["name"]) for r in result["rows"])
        for row in result["rows"]:
            print(f"{row['name']:<{width}}  {row['mean']*100:6.2f} "
                  f"+/- {row['std']*100:.2f}")
        print(f"grid summary: {result['grid_path']}")
        return 0

    if args.command == "report":
        payload = {"run_dir": args.run_dir}
        if args.out_dir:
            payload["out_dir"] = args.out_dir
        result = _run(args.server, "/report", payload)
        if isinstance(result, int):
            return result
        print(f"wrote {result['auc_curves_path']} and {result['histogram_path']}")
        return 0

    return 2  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
