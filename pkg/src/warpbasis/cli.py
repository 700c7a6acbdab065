"""Command-line front end.

Subcommands:

* verify       -- certify the basis induced by a map file (JSON out)
* approximate  -- expansion-error convergence curve for a target (CSV out)
* optimize     -- fit a map to a target, write the trained map and trace
* figures      -- full pipeline: target, map, convergence and basis-overlay
                  CSV exports (optimizing a map first when none is given)

Exit codes: 0 success (verify: verdict orthonormal or riesz), 1 parse/IO
errors (message on stderr, no output files), 2 inconclusive certificate.
All CSV values are written with 17 significant digits, so files are
lossless for doubles and byte-identical across runs at a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import approx, maps, operators
from .basis import BasisSpec, hermite_columns
from .quad import build_rule

_FMT = "{:.17g}"


def _format_row(values) -> str:
    return ",".join(_FMT.format(float(v)) for v in values)


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines.extend(_format_row(row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _build_rule_from_args(args) -> "build_rule":
    lo_hi = args.quad_domain.split(":")
    if len(lo_hi) != 2:
        raise ValueError(f"--quad-domain expects LO:HI, got {args.quad_domain!r}")
    return build_rule(float(lo_hi[0]), float(lo_hi[1]),
                      panels=args.quad_panels, order=args.quad_order)


def _load_map(args) -> maps.MapSpec:
    if args.map is None:
        return maps.identity_map()
    return maps.load_map(args.map)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_verify(args) -> int:
    rule = _build_rule_from_args(args)
    m = maps.load_map(args.map)
    base = BasisSpec(max_index=max(args.n, 1))
    cert = operators.certify(m, base, args.n, rule)
    payload = json.dumps(cert.to_jsonable(), indent=2)
    _out_dir(args).joinpath("certificate.json").write_text(payload + "\n", encoding="utf-8")
    print(payload)
    return 0 if cert.verdict in (operators.Verdict.ORTHONORMAL, operators.Verdict.RIESZ) else 2


def cmd_approximate(args) -> int:
    rule = _build_rule_from_args(args)
    m = _load_map(args)
    target = approx.parse_target(args.target)
    base = BasisSpec(max_index=args.n)
    curve = approx.convergence_curve(target, m, base, range(1, args.n + 1), rule)
    _write_csv(_out_dir(args) / "convergence.csv", ["N", "l2_error"], curve)
    print(f"N={args.n} l2_error={_FMT.format(curve[-1][1])}")
    return 0


def _run_optimization(args, rule, target):
    cfg = approx.OptConfig(iterations=args.iters, learning_rate=args.lr,
                           seed=args.seed, N=args.n)
    template = maps.residual_affine_template(hidden=8, lipschitz=0.9, seed=args.seed)
    base = BasisSpec(max_index=args.n)
    return approx.optimize_map(target, base, template, cfg, rule)


def cmd_optimize(args) -> int:
    rule = _build_rule_from_args(args)
    target = approx.parse_target(args.target)
    best_map, trace = _run_optimization(args, rule, target)
    out = _out_dir(args)
    maps.save_map(best_map, out / "optimized_map.json")
    _write_csv(out / "trace.csv", ["iter", "l2_error"], trace)
    print(f"final l2_error={_FMT.format(trace[-1][1])}")
    return 0


def cmd_figures(args) -> int:
    rule = _build_rule_from_args(args)
    target = approx.parse_target(args.target)
    if args.map is not None:
        m = maps.load_map(args.map)
        trace = None
    else:
        m, trace = _run_optimization(args, rule, target)
    base_n = max(args.n, 16) + 8
    base = BasisSpec(max_index=base_n)

    grid = np.linspace(-8.0, 8.0, 801)
    fig1 = np.column_stack([grid, target(grid)])
    fig2 = np.column_stack([grid, maps.map_forward(m, grid)])

    ns = list(range(1, max(args.n, 16) + 1))
    ident = maps.identity_map()
    err_plain = dict(approx.convergence_curve(target, ident, base, ns, rule))
    err_warped = dict(approx.convergence_curve(target, m, base, ns, rule))
    fig3 = [(n, err_plain[n], err_warped[n]) for n in ns]

    n_overlay = 5
    plain_cols = hermite_columns(n_overlay, grid)
    warped_cols = hermite_columns(n_overlay, maps.map_forward(m, grid))
    fig4 = np.column_stack([grid, plain_cols.T, warped_cols.T])

    out = _out_dir(args)
    if trace is not None:
        maps.save_map(m, out / "optimized_map.json")
        _write_csv(out / "trace.csv", ["iter", "l2_error"], trace)
    _write_csv(out / "fig1_target.csv", ["x", "f"], fig1)
    _write_csv(out / "fig2_map.csv", ["x", "h"], fig2)
    _write_csv(out / "fig3_convergence.csv", ["N", "err_hermite", "err_perturbed"], fig3)
    header = (["x"] + [f"herm{i}" for i in range(n_overlay)]
              + [f"pert{i}" for i in range(n_overlay)])
    _write_csv(out / "fig4_bases.csv", header, fig4)
    print(f"wrote figure data to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="warpbasis",
        description="Perturbed-basis construction, certification and optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_map=False, target_default=None):
        p.add_argument("--map", default=None, required=need_map,
                       help="map JSON file" + ("" if need_map else " (default: identity)"))
        if target_default is not None:
            p.add_argument("--target", default=target_default,
                           help="shifted-gaussian:A | sin-abs-gaussian | expr:EXPR")
        p.add_argument("--n", type=int, default=10, help="expansion length")
        p.add_argument("--quad-domain", default="-10:10", help="LO:HI truncation interval")
        p.add_argument("--quad-panels", type=int, default=64)
        p.add_argument("--quad-order", type=int, default=16)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default="out", help="output directory")

    p_verify = sub.add_parser("verify", help="certify the basis induced by a map")
    common(p_verify, need_map=True)
    p_verify.set_defaults(func=cmd_verify)

    p_approx = sub.add_parser("approximate", help="convergence curve for a target")
    common(p_approx, target_default="sin-abs-gaussian")
    p_approx.set_defaults(func=cmd_approximate)

    p_opt = sub.add_parser("optimize", help="fit a map to a target")
    common(p_opt, target_default="sin-abs-gaussian")
    p_opt.add_argument("--iters", type=int, default=2000)
    p_opt.add_argument("--lr", type=float, default=0.01)
    p_opt.set_defaults(func=cmd_optimize)

    p_fig = sub.add_parser("figures", help="export figure data for a full run")
    common(p_fig, target_default="sin-abs-gaussian")
    p_fig.add_argument("--iters", type=int, default=2000)
    p_fig.add_argument("--lr", type=float, default=0.01)
    p_fig.set_defaults(func=cmd_figures)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
