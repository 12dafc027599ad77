"""Command-line interface.

Subcommands: analyze, char, flow, surface, endpoint, verify.  All file
outputs are deterministic for a fixed command line (17-significant-digit
floats, sorted JSON keys, no timestamps) and start with a header recording
the tool version, model, full parameter set and seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, acceptance
from .charfield import ORACLE, VARIANTS, char_field, cross_check
from .distribution import resolve_model, sigma_check
from .endpoint import (
    ControlPath,
    bryant_hsu_test,
    horizontal_integrate,
    sard_sample,
)
from .flow import (
    DEFAULT_ATOL,
    DEFAULT_EPS_CUT,
    DEFAULT_RTOL,
    DEFAULT_T_MAX,
    FLOAT_FMT,
    RHO,
    ZW,
    integrate,
    singular_surface,
)
from .poly import Point4


class CliError(Exception):
    """Bad user input (exit code 2)."""


def _parse_point(text: str) -> Point4:
    parts = text.split(",")
    if len(parts) != 4:
        raise CliError(f"expected 4 comma-separated coordinates, got {text!r}")
    coords = []
    rational = all(("." not in p) and ("e" not in p.lower()) for p in parts)
    for p in parts:
        p = p.strip()
        try:
            coords.append(Fraction(p) if rational else float(p))
        except (ValueError, ZeroDivisionError) as exc:
            raise CliError(f"bad coordinate {p!r}: {exc}") from exc
    return Point4(*coords)


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, count = text.split(":")
        values = np.linspace(float(lo), float(hi), int(count))
    except ValueError as exc:
        raise CliError(f"bad grid spec {text!r}; expected min:max:count") from exc
    if len(values) == 0:
        raise CliError("grid is empty")
    return values


def _header_lines(args: argparse.Namespace, model: str, **extra) -> list[str]:
    params = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in ("func", "out") and v is not None
    }
    params.update(extra)
    body = " ".join(f"{k}={v}" for k, v in sorted(params.items()))
    return [
        f"engelkit {__version__}",
        f"model={model}",
        f"params: {body}",
        f"seed={getattr(args, 'seed', None)}",
    ]


def _write_json(path: str, payload: dict, header: list[str]) -> None:
    payload = {"_meta": {"header": header}, **payload}
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _open_out(path: str):
    return open(path, "w", encoding="utf-8", newline="\n")


def cmd_analyze(args: argparse.Namespace) -> int:
    model, pair = resolve_model(args.model)
    points: list[Point4] = [_parse_point(p) for p in args.point or []]
    grid_rows = []
    if args.grid is not None:
        for z in _parse_grid(args.grid):
            for w in _parse_grid(args.grid):
                points.append(Point4(0.0, 0.0, float(z), float(w)))
    if not points:
        raise CliError("give at least one --point or a --grid")
    for q in points:
        rep = sigma_check(pair, q, rank_tol=args.rank_tol)
        grid_rows.append((q, rep))
        flag = " [certificate and growth disagree]" if rep.tests_disagree else ""
        coords = ",".join(str(c) for c in q.as_tuple())
        print(
            f"point ({coords}): growth {rep.growth}, "
            f"certificate {rep.certificate_value:.17g}, "
            f"engel_by_growth={rep.is_engel_by_growth}, "
            f"on_degenerate_locus={not rep.is_engel_by_growth}{flag}"
        )
    if args.out:
        with _open_out(args.out) as fh:
            for line in _header_lines(args, model):
                fh.write(f"# {line}\n")
            fh.write("x,y,z,w,growth,certificate,engel_by_growth,tests_disagree\n")
            for q, rep in grid_rows:
                coords = ",".join(FLOAT_FMT % c for c in q.as_floats())
                growth = "-".join(str(d) for d in rep.growth.dims)
                fh.write(
                    f"{coords},{growth},{FLOAT_FMT % rep.certificate_value},"
                    f"{int(rep.is_engel_by_growth)},{int(rep.tests_disagree)}\n"
                )
    return 0


def cmd_char(args: argparse.Namespace) -> int:
    model, pair = resolve_model(args.model)
    report = cross_check(pair)
    for variant in VARIANTS:
        co = report.coefficients[variant]
        print(f"{variant:9s} c = {co.c}")
        print(f"{'':9s} e = {co.e}")
    for comp in report.comparisons:
        if comp.identical:
            print(f"{comp.a} == {comp.b} (exact)")
        else:
            print(f"{comp.a} != {comp.b}: c differs by {comp.discrepancy_c}, "
                  f"e differs by {comp.discrepancy_e}")
    if args.out:
        _write_json(args.out, report.to_json_dict(model), _header_lines(args, model))
    return 0


def cmd_flow(args: argparse.Namespace) -> int:
    model, pair = resolve_model(args.model)
    q0 = _parse_point(args.start)
    fld = char_field(pair, args.variant)
    traj = integrate(
        fld, q0, args.t, rtol=args.rtol, atol=args.atol,
        monitors={"rho": RHO, "zw": ZW},
    )
    print(
        f"{model} ({args.variant}): {traj.times.size} samples to t={args.t}; "
        f"endpoint ({', '.join(FLOAT_FMT % v for v in traj.endpoint)})"
    )
    for name in ("rho", "zw"):
        channel = traj.monitors[name]
        print(f"monitor {name}: start {channel[0]:.17g}, "
              f"max |drift| {np.max(np.abs(channel - channel[0])):.3e}")
    if args.out:
        with _open_out(args.out) as fh:
            traj.write_csv(fh, _header_lines(args, model))
    return 0


def cmd_surface(args: argparse.Namespace) -> int:
    model, pair = resolve_model(args.model)
    magnitudes = _parse_grid(args.grid)
    if np.any(magnitudes == 0.0):
        raise CliError("surface grid magnitudes must be nonzero")
    signs = [(1.0, 1.0)]
    if args.signed:
        signs = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
    grid = [
        (sz * z, sw * w)
        for z in magnitudes
        for w in magnitudes
        for sz, sw in signs
    ]
    sample = singular_surface(
        pair, grid, eps_cut=args.eps_cut, t_max=args.t_max,
        rtol=args.rtol, atol=args.atol,
    )
    n_conv = sum(sample.converged)
    print(f"{model}: {n_conv}/{len(grid)} samples converged (eps_cut={args.eps_cut})")
    if args.out:
        with _open_out(args.out) as fh:
            sample.write_csv(fh, _header_lines(args, model))
    return 0


def cmd_endpoint(args: argparse.Namespace) -> int:
    model, pair = resolve_model(args.model)
    if args.sard is not None:
        report = sard_sample(model, args.sard, seed=args.seed, rtol=args.rtol, atol=args.atol)
        print(
            f"{model}: sard sample n={args.sard} seed={args.seed}: "
            f"max_surface_distance={report.max_surface_distance}, "
            f"min_rho_deviation={report.min_rho_deviation}, "
            f"agreement={report.detector_agreement:.3f}, "
            f"ambiguous={report.ambiguous_count}"
        )
        if args.out:
            _write_json(args.out, report.to_json_dict(), _header_lines(args, model))
        if args.cloud:
            with _open_out(args.cloud) as fh:
                report.write_endpoints_csv(fh, _header_lines(args, model))
        return 0

    q0 = _parse_point(args.q0)
    controls: list[ControlPath] = []
    if args.controls:
        data = json.loads(Path(args.controls).read_text(encoding="utf-8"))
        entries = data if isinstance(data, list) else [data]
        controls = [ControlPath.from_json_dict(entry) for entry in entries]
    elif args.random:
        rng = np.random.default_rng(args.seed)
        controls = [
            ControlPath(rng.uniform(-1.0, 1.0, size=(args.n_segments, 2)))
            for _ in range(args.random)
        ]
    else:
        raise CliError("endpoint needs --controls, --random or --sard")
    rows = []
    for i, ctrl in enumerate(controls):
        verdict = bryant_hsu_test(pair, q0, ctrl, rtol=args.rtol, atol=args.atol)
        endp = horizontal_integrate(pair, q0, ctrl, rtol=args.rtol, atol=args.atol).endpoint
        rows.append(
            {
                "index": i,
                "endpoint": [float(v) for v in endp],
                "bh_smallest": verdict.bh_smallest,
                "sigma_ratio": verdict.sigma_ratio,
                "classification": verdict.classification,
                "jacobian_classification": verdict.jacobian_classification,
            }
        )
        print(
            f"control {i}: {verdict.classification} "
            f"(bh={verdict.bh_smallest:.3e}, score={verdict.sigma_ratio:.3e})"
        )
    if args.out:
        _write_json(args.out, {"model": model, "results": rows}, _header_lines(args, model))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    numbers = None
    if args.criteria:
        try:
            numbers = [int(n) for n in args.criteria.split(",")]
        except ValueError as exc:
            raise CliError(f"bad criteria list {args.criteria!r}") from exc
        unknown = set(numbers) - set(acceptance.CRITERIA)
        if unknown:
            raise CliError(f"unknown criteria {sorted(unknown)}")
    results = acceptance.run_all(numbers)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="engelkit",
        description="Growth vectors, characteristic fields, flows and "
        "endpoint-map singularity analysis for Pfaffian pairs on R^4.",
    )
    parser.add_argument("--version", action="version", version=f"engelkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, model: bool = True) -> None:
        if model:
            p.add_argument("--model", required=True,
                           help="catalog id (engel_std, d224, d2334a, d2334b) or JSON file")
        p.add_argument("--out", help="output file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
        p.add_argument("--atol", type=float, default=DEFAULT_ATOL)

    p = sub.add_parser("analyze", help="growth vector, certificate and locus membership")
    common(p)
    p.add_argument("--point", action="append",
                   help="x,y,z,w (rational entries like 1/2 use exact rank)")
    p.add_argument("--grid", help="min:max:count over z and w at x=y=0")
    p.add_argument("--rank-tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("char", help="characteristic coefficients, three variants")
    common(p)
    p.set_defaults(func=cmd_char)

    p = sub.add_parser("flow", help="integrate the characteristic field with monitors")
    common(p)
    p.add_argument("--start", required=True, help="x,y,z,w")
    p.add_argument("--t", type=float, required=True, help="integration time (negative = reversed)")
    p.add_argument("--variant", choices=VARIANTS, default=ORACLE)
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("surface", help="reconstruct the singular-endpoint surface")
    common(p)
    p.add_argument("--grid", required=True, help="min:max:count magnitudes for z and w")
    p.add_argument("--signed", action="store_true", help="include all four sign quadrants")
    p.add_argument("--eps-cut", type=float, default=DEFAULT_EPS_CUT)
    p.add_argument("--t-max", type=float, default=DEFAULT_T_MAX)
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("endpoint", help="singularity analysis of control paths")
    common(p)
    p.add_argument("--q0", default="0,0,0,0", help="base point x,y,z,w")
    p.add_argument("--controls", help="JSON control file: {n_segments, u} or a list of them")
    p.add_argument("--random", type=int, help="analyze N random controls")
    p.add_argument("--n-segments", type=int, default=32)
    p.add_argument("--sard", type=int, metavar="N",
                   help="sample N singular curves and test their endpoints")
    p.add_argument("--cloud", help="CSV output for the endpoint cloud (with --sard)")
    p.set_defaults(func=cmd_endpoint)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--criteria", help="comma-separated criterion numbers (default: all)")
    p.add_argument("--all", action="store_true", help="run everything (the default)")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal failure path
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
