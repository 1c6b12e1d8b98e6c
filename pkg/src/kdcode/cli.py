"""Command-line front end: train, encode, bound, experiment."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bounds import BoundRequest, evaluate_bounds, request_for_scheme
from .core import (
    SchemeKind,
    SchemeSpec,
    class_norm,
    load_dataset,
    load_dictionary,
    save_dictionary,
)
from .encoders import encode, range_bound
from .harness import (
    SamplerKind,
    SamplerSpec,
    deviation_experiment_from_config,
    run_bound_curve,
    write_curve_csv,
    write_deviation_csv,
)
from .trainers import InitKind, TrainConfig, train

_SCHEMES = [k.value for k in SchemeKind]


def _scheme_from_args(args) -> SchemeSpec:
    return SchemeSpec(
        kind=SchemeKind(args.scheme),
        K=args.k,
        p=getattr(args, "p", None),
        c=getattr(args, "c", 1.0),
    )


def _cmd_train(args) -> int:
    scheme = _scheme_from_args(args)
    data = load_dataset(args.data, normalize=args.normalize)
    cfg = TrainConfig(
        max_outer_iters=args.max_iters,
        tol=args.tol,
        seed=args.seed,
        init=InitKind(args.init),
        restarts=args.restarts,
    )
    report = train(scheme, data, cfg)
    save_dictionary(report.dictionary, args.out)
    report_path = Path(args.out).with_suffix(".report.json")
    report_path.write_text(json.dumps({
        "risk_trace": report.risk_trace,
        "final_risk": report.final_risk,
        "converged": report.converged,
        "seed": args.seed,
        "restarts": args.restarts,
    }, indent=2) + "\n")
    print(f"wrote {args.out} (final risk {report.final_risk:.6g}, "
          f"converged={report.converged}); report at {report_path}")
    return 0


def _cmd_encode(args) -> int:
    dictionary = load_dictionary(args.dict)
    data = load_dataset(args.data, normalize=args.normalize)
    lines = []
    for i in range(data.m):
        res = encode(dictionary, data.points[i])
        lines.append(json.dumps(res.to_dict()))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {data.m} results to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_bound(args) -> int:
    if args.scheme == "custom":
        req = BoundRequest(
            K=args.k,
            m=args.m,
            delta=args.delta,
            c=args.c,
            b=args.b if args.b is not None else 1.0,
            class_norm=args.class_norm if args.class_norm is not None else 1.0,
            p=args.p,
            d=args.d,
        )
        report = evaluate_bounds(req, None)
    else:
        scheme = _scheme_from_args(args)
        req = request_for_scheme(scheme, args.m, args.delta, d=args.d)
        if args.b is not None or args.class_norm is not None:
            req = BoundRequest(
                K=req.K, m=req.m, delta=req.delta, c=req.c,
                b=args.b if args.b is not None else req.b,
                class_norm=args.class_norm if args.class_norm is not None else req.class_norm,
                p=req.p, d=req.d,
            )
        report = evaluate_bounds(req, scheme.kind)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def _cmd_experiment(args) -> int:
    if args.experiment_cmd == "deviation":
        cfg = json.loads(Path(args.config).read_text())
        result = deviation_experiment_from_config(cfg)
        summary = result.to_dict()
        out_json = cfg.get("out_json")
        out_csv = cfg.get("out_csv")
        if out_json:
            Path(out_json).write_text(json.dumps(summary, indent=2) + "\n")
        if out_csv:
            write_deviation_csv(result, out_csv)
        print(json.dumps({
            "scheme": summary["scheme"],
            "m": result.m,
            "trials": result.trials,
            "bound_name": result.bound_name,
            "bound_value": result.bound_value,
            "violation_rate": result.violation_rate,
            "out_json": out_json,
            "out_csv": out_csv,
        }, indent=2))
        return 0
    if args.experiment_cmd == "curve":
        rows = run_bound_curve(
            SchemeKind(args.scheme),
            args.k,
            args.m,
            args.delta,
            p=args.p,
            c=args.c,
            d=args.d,
        )
        write_curve_csv(rows, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
        return 0
    raise SystemExit("unknown experiment subcommand")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kdcode",
                                 description="constrained K-dimensional coding toolkit")
    sub = ap.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("train", help="fit a dictionary to a dataset")
    t.add_argument("--scheme", choices=_SCHEMES, required=True)
    t.add_argument("--k", type=int, required=True)
    t.add_argument("--p", type=float, default=None, help="ball exponent (sparse only)")
    t.add_argument("--c", type=float, default=1.0, help="column norm cap (kmeans only)")
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--restarts", type=int, default=1)
    t.add_argument("--max-iters", type=int, default=500)
    t.add_argument("--tol", type=float, default=1e-9)
    t.add_argument("--init", choices=[i.value for i in InitKind],
                   default=InitKind.RANDOM_DATA.value)
    t.add_argument("--normalize", action="store_true",
                   help="rescale the dataset into the unit ball")
    t.set_defaults(fn=_cmd_train)

    e = sub.add_parser("encode", help="encode a dataset with a stored dictionary")
    e.add_argument("--dict", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", default=None)
    e.add_argument("--normalize", action="store_true")
    e.set_defaults(fn=_cmd_encode)

    b = sub.add_parser("bound", help="evaluate deviation bounds")
    b.add_argument("--scheme", choices=_SCHEMES + ["custom"], required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--delta", type=float, required=True)
    b.add_argument("--p", type=float, default=None)
    b.add_argument("--c", type=float, default=1.0)
    b.add_argument("--b", type=float, default=None, help="error range override")
    b.add_argument("--class-norm", dest="class_norm", type=float, default=None)
    b.add_argument("--d", type=int, default=None,
                   help="ambient dimension (enables the dimension-dependent bound)")
    b.set_defaults(fn=_cmd_bound)

    x = sub.add_parser("experiment", help="Monte-Carlo experiments")
    xsub = x.add_subparsers(dest="experiment_cmd", required=True)
    xd = xsub.add_parser("deviation", help="deviation experiment from a JSON config")
    xd.add_argument("--config", required=True)
    xd.set_defaults(fn=_cmd_experiment)
    xc = xsub.add_parser("curve", help="bound values over a (K, m) grid")
    xc.add_argument("--scheme", choices=_SCHEMES, required=True)
    xc.add_argument("--k", type=int, nargs="+", required=True)
    xc.add_argument("--m", type=int, nargs="+", required=True)
    xc.add_argument("--delta", type=float, required=True)
    xc.add_argument("--p", type=float, default=None)
    xc.add_argument("--c", type=float, default=1.0)
    xc.add_argument("--d", type=int, default=None)
    xc.add_argument("--out", required=True)
    xc.set_defaults(fn=_cmd_experiment)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
