"""Command-line interface.

Exit codes: 0 success, 2 input or configuration error, 3 search did not
converge, 4 flex continuation failed.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import certify, maxwell_count, self_stresses, stress_test
from .continuation import follow_branch
from .fixtures import FIXTURES, load_fixture
from .framework import Framework, FrameworkError, nontrivial_flex_basis, numerical_rank, rigidity_matrix
from .io import (
    SchemaError,
    dumps,
    framework_from_dict,
    framework_to_dict,
    history_csv,
    load_document,
    read_jsonl,
)
from .manifold import ConstraintSet, licq_check
from .render import RenderError, render_svg
from .search import SearchConfig, SearchConfigError, multi_start, run_search

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_INPUT, EXIT_NOCONV, EXIT_FOLLOW = 0, 2, 3, 4

log = logging.getLogger("flexsaddle")


class InputError(Exception):
    pass


def _load_config_file(path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InputError(f"{path}: cannot read config ({exc.strerror})")
    if path.suffix == ".toml":
        try:
            data = tomllib.loads(raw.decode())
        except tomllib.TOMLDecodeError as exc:
            raise InputError(f"{path}: {exc}")
    else:
        try:
            data = load_document(path)
        except SchemaError as exc:
            raise InputError(str(exc))
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a table/object")
    # a run manifest can be fed back in as a config
    if "config" in data and "command" in data:
        data = data["config"]
    return data


def _split_config(data: dict) -> tuple:
    data = dict(data)
    follow = data.pop("follow", {}) or {}
    search = data.pop("search", {}) or {}
    search.update({k: v for k, v in data.items() if k in SearchConfig.__dataclass_fields__ or k in ("starts", "workers")})
    rest = set(data) - set(SearchConfig.__dataclass_fields__) - {"starts", "workers"}
    if rest:
        raise InputError(f"unknown config keys {sorted(rest)}")
    return search, follow


def _load_input(args) -> tuple:
    """``(framework, labels, fixture search options, input description, document)``."""
    if getattr(args, "fixture", None):
        try:
            fw, labels, opts = load_fixture(args.fixture)
        except KeyError as exc:
            raise InputError(str(exc.args[0]))
        return fw, labels, opts, f"fixture:{args.fixture}", None
    if not getattr(args, "input", None):
        raise InputError("an input file or --fixture is required")
    try:
        doc = load_document(args.input)
    except SchemaError as exc:
        raise InputError(str(exc))
    fw_doc = doc.get("framework", doc) if isinstance(doc, dict) else doc
    try:
        fw = framework_from_dict(fw_doc)
    except SchemaError as exc:
        raise InputError(f"{args.input}: {exc}")
    labels = fw_doc.get("labels") if isinstance(fw_doc, dict) else None
    if isinstance(doc, dict) and "final_coords" in doc:
        fw = fw.with_coords(np.asarray(doc["final_coords"], dtype=float))
        labels = doc.get("labels", labels)
    return fw, labels, dict(doc.get("fixture_options", {})) if isinstance(doc, dict) else {}, str(args.input), doc


def _emit(args, payload: dict, text_lines: list) -> None:
    if args.json:
        sys.stdout.write(dumps(payload))
    else:
        print("\n".join(text_lines))


def _write(out_dir: Path, name: str, text: str, written: list) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    written.append(str(path))
    return path


def _manifest(args, input_desc: str, config: dict, started: float, outputs: list) -> dict:
    return {
        "command": args.command,
        "input": input_desc,
        "config": config,
        "tool_version": __version__,
        "wall_time": time.perf_counter() - started,
        "outputs": sorted(outputs + [str(Path(args.out_dir) / "manifest.json")]),
    }


def cmd_analyze(args) -> int:
    fw, labels, _, desc, _ = _load_input(args)
    r = rigidity_matrix(fw)
    sv = np.linalg.svd(r, compute_uv=False)
    rank = numerical_rank(sv)
    flex = nontrivial_flex_basis(fw)
    stresses = self_stresses(fw)
    report = {
        "input": desc,
        "rigidity_rank": rank,
        "nontrivial_flex_dim": flex.shape[1],
        "self_stress_dim": len(stresses),
        "maxwell": maxwell_count(fw),
        "licq_margin": None,
        "licq": None,
    }
    if len(fw.pins):
        ok, margin = licq_check(ConstraintSet.from_framework(fw), fw.config.coords)
        report["licq"], report["licq_margin"] = ok, margin
    lines = [
        f"input: {desc}",
        f"rigidity rank: {rank} (m = {fw.m}, nd = {fw.n_coords})",
        f"nontrivial flex dim: {flex.shape[1]}",
        f"self-stress dim: {len(stresses)}",
        f"maxwell: m + d(d+1)/2 = {fw.m + report['maxwell']['trivial']} "
        f"{'<' if fw.is_under_constrained else '>='} nd = {fw.n_coords}"
        f" ({'under-constrained' if fw.is_under_constrained else 'not under-constrained'})",
        f"LICQ margin: {report['licq_margin'] if report['licq_margin'] is not None else 'n/a (no pins)'}",
    ]
    if args.out_dir_given:
        _write(Path(args.out_dir), "analysis.json", dumps(report), [])
    _emit(args, report, lines)
    return EXIT_OK


def _search_config(args, fixture_opts: dict) -> tuple:
    opts = dict(fixture_opts)
    follow_opts = {}
    if args.config:
        search, follow_opts = _split_config(_load_config_file(args.config))
        opts.update(search)
    for key in ("k", "step_size", "tol", "max_iters", "starts", "workers"):
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    if args.seed is not None:
        opts["seed"] = args.seed
    starts = int(opts.pop("starts", 1))
    workers = opts.pop("workers", None)
    try:
        cfg = SearchConfig.from_dict(opts)
    except (SearchConfigError, TypeError) as exc:
        raise InputError(f"bad search configuration: {exc}")
    return cfg, starts, workers, follow_opts


def cmd_search(args) -> int:
    started = time.perf_counter()
    fw, labels, fixture_opts, desc, _ = _load_input(args)
    cfg, starts, workers, _ = _search_config(args, fixture_opts)
    try:
        if not fw.is_under_constrained:
            raise SearchConfigError("framework is not under-constrained (Maxwell count leaves no internal freedom)")
        cs = ConstraintSet.from_framework(fw)
        cfg.check_index(cs.tangent_dim)
    except (SearchConfigError, FrameworkError) as exc:
        raise InputError(str(exc))
    if starts > 1:
        results = multi_start(fw, cfg, starts, workers=workers)
    else:
        results = [run_search(fw, cfg)]
    best = results[0]
    cert = certify(fw, best.final.coords)
    config_snapshot = {**cfg.to_dict(), "starts": starts}
    result = {
        "framework": framework_to_dict(fw, labels),
        "labels": labels,
        "input": desc,
        "config": config_snapshot,
        "tool_version": __version__,
        "converged": best.converged,
        "iterations": best.iterations,
        "failure_reason": best.failure_reason,
        "final_coords": best.final.coords,
        "free_edge_length": float(np.sqrt(max(0.0, _energy(fw, best.final.coords)))),
        "constraint_residual": best.constraint_residual,
        "certificate": cert.to_dict(),
        "starts": [
            {"converged": r.converged, "iterations": r.iterations, "kkt_residual": r.kkt_residual,
             "seed": r.seed, "final_coords": r.final.coords}
            for r in results
        ] if starts > 1 else [],
    }
    out = Path(args.out_dir)
    written = []
    _write(out, "result.json", dumps(result), written)
    _write(out, "history.csv", history_csv(best.history), written)
    manifest = _manifest(args, desc, config_snapshot, started, written)
    _write(out, "manifest.json", dumps(manifest), [])
    status = "converged" if best.converged else f"NOT converged: {best.failure_reason}"
    lines = [
        f"search {status} after {best.iterations} iterations",
        f"KKT residual {cert.kkt_residual:.3e}, LICQ margin {cert.licq_margin:.3e}",
        f"index {cert.index}, eigenvalues {np.round(cert.eigenvalues, 6).tolist()}, degenerate {cert.degenerate}",
        f"rigidity rank {cert.rigidity_rank}, nontrivial flex dim {cert.nontrivial_flex_dim}, "
        f"self-stress dim {cert.self_stress_dim}, realizable directions {len(cert.realizable_directions)}",
        f"certified singular and flexible: {cert.certified_singular_flexible}",
        f"wrote {', '.join(written)}",
    ]
    _emit(args, {"converged": best.converged, "certificate": cert.to_dict(), "outputs": written}, lines)
    return EXIT_OK if best.converged else EXIT_NOCONV


def _energy(fw: Framework, coords) -> float:
    a, b = fw.topology.edges[fw.topology.free_edge]
    p = np.asarray(coords).reshape(-1, fw.dim)
    return float(np.sum((p[a] - p[b]) ** 2))


def cmd_certify(args) -> int:
    fw, _, _, desc, _ = _load_input(args)
    try:
        cert = certify(fw)
    except FrameworkError as exc:
        raise InputError(str(exc))
    payload = {"input": desc, **cert.to_dict()}
    lines = [f"{k}: {v}" for k, v in cert.to_dict().items() if not k.startswith("realizable_")]
    lines.append(f"realizable directions: {cert.realizable_directions}")
    if args.out_dir_given:
        _write(Path(args.out_dir), "certificate.json", dumps(payload), [])
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_stress_test(args) -> int:
    fw, _, _, desc, _ = _load_input(args)
    flex = nontrivial_flex_basis(fw)
    stresses = self_stresses(fw)
    res = stress_test(fw, flex, stresses)
    payload = {
        "input": desc,
        "status": res.status,
        "nontrivial_flex_dim": flex.shape[1],
        "self_stress_dim": len(stresses),
        "self_stresses": stresses.matrix,
        "quadratic_forms": res.forms,
        "directions": res.directions,
        "ambient": res.ambient,
        "pinned": res.pinned,
    }
    lines = [
        f"flex dim {flex.shape[1]}, self-stress dim {len(stresses)}, status {res.status}",
        *(f"direction {i}: {np.round(a, 10).tolist()}" for i, a in enumerate(res.directions)),
    ]
    if args.out_dir_given:
        _write(Path(args.out_dir), "stress_test.json", dumps(payload), [])
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_follow(args) -> int:
    started = time.perf_counter()
    fw, labels, _, desc, doc = _load_input(args)
    follow_opts = {}
    if args.config:
        _, follow_opts = _split_config(_load_config_file(args.config))
    arc_step = args.arc_step if args.arc_step is not None else follow_opts.get("arc_step", 1e-2)
    path_tol = args.path_tol if args.path_tol is not None else follow_opts.get("path_tol", 1e-8)
    steps = args.steps if args.steps is not None else follow_opts.get("steps", 50)
    if steps < 0:
        raise InputError("--steps must be >= 0")
    cert = certify(fw)
    if args.coefficients is not None:
        flex = nontrivial_flex_basis(fw)
        try:
            coef = np.array([float(c) for c in args.coefficients.split(",")])
        except ValueError:
            raise InputError(f"bad --coefficients {args.coefficients!r}")
        if coef.size != flex.shape[1] or not np.any(coef):
            raise InputError(f"--coefficients needs {flex.shape[1]} values, not all zero")
        from .analysis import _pin_gauge

        direction = _pin_gauge(fw, flex @ coef)
        if direction is None:
            raise InputError("pins do not fix the rigid motions; cannot build a pinned direction")
        label = f"coefficients {coef.tolist()}"
    else:
        dirs = cert.realizable_pinned
        if not 0 <= args.direction < len(dirs) or dirs[args.direction] is None:
            raise InputError(f"direction index {args.direction} out of range ({len(dirs)} realizable directions)")
        direction = np.asarray(dirs[args.direction])
        label = f"realizable direction {args.direction}"
    path = follow_branch(fw, direction, arc_step=arc_step, n_steps=steps, path_tol=path_tol, sign=args.sign)
    out = Path(args.out_dir)
    written = []
    _write(out, args.output, path.to_jsonl(), written)
    if args.svg:
        flex = np.asarray(direction) * args.sign
        _write(out, Path(args.output).stem + "_first.svg", render_svg(fw, path.steps[0], flex, labels), written)
        last_flex = path.steps[-1] - path.steps[-2] if len(path) > 1 else flex
        _write(out, Path(args.output).stem + "_last.svg", render_svg(fw, path.steps[-1], last_flex, labels), written)
    config = {"direction": args.direction, "coefficients": args.coefficients, "steps": steps,
              "arc_step": arc_step, "path_tol": path_tol, "sign": args.sign}
    _write(out, "manifest.json", dumps(_manifest(args, desc, config, started, written)), [])
    lines = [
        f"followed {label}: {len(path) - 1} of {steps} steps, max residual {max(path.residuals):.3e}",
        f"wrote {', '.join(written)}",
    ]
    if path.failed:
        lines.insert(1, f"continuation failed: {path.failure_reason}")
    _emit(args, {"steps": len(path) - 1, "failed": path.failed, "failure_reason": path.failure_reason,
                 "max_residual": max(path.residuals), "outputs": written}, lines)
    return EXIT_FOLLOW if path.failed else EXIT_OK


def cmd_render(args) -> int:
    fw, labels, _, desc, doc = _load_input(args)
    coords = None
    flex = None
    if args.path:
        try:
            rows = read_jsonl(args.path)
        except (SchemaError, OSError) as exc:
            raise InputError(str(exc))
        if not rows:
            raise InputError(f"{args.path}: empty trajectory")
        try:
            coords = np.asarray(rows[args.frame]["coords"], dtype=float)
        except (IndexError, KeyError):
            raise InputError(f"{args.path}: no frame {args.frame}")
    if args.flex is not None:
        cert = certify(fw, coords) if coords is not None else certify(fw)
        dirs = cert.realizable_pinned
        if not 0 <= args.flex < len(dirs) or dirs[args.flex] is None:
            raise InputError(f"flex index {args.flex} out of range ({len(dirs)} realizable directions)")
        flex = np.asarray(dirs[args.flex])
    try:
        svg = render_svg(fw, coords, flex, labels)
    except RenderError as exc:
        raise InputError(str(exc))
    target = Path(args.output)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(svg)
    _emit(args, {"output": str(target)}, [f"wrote {target}"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="TOML or JSON config file")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out-dir", default=argparse.SUPPRESS)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS, help="machine-readable stdout")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="flexsaddle", parents=[common],
                                description="Saddle search for singular and flexible bar frameworks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=func)
        return sp

    def add_input(sp):
        sp.add_argument("input", nargs="?", help="framework JSON or search result JSON")
        sp.add_argument("--fixture", choices=sorted(FIXTURES))

    sp = add("analyze", cmd_analyze, "rigidity rank, flex and stress dimensions, Maxwell count")
    add_input(sp)

    sp = add("search", cmd_search, "index-k constrained saddle search")
    add_input(sp)
    sp.add_argument("--k", type=int)
    sp.add_argument("--step-size", type=float)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--max-iters", type=int)
    sp.add_argument("--starts", type=int, help="number of multi-start runs")
    sp.add_argument("--workers", type=int, help="threads for multi-start")

    sp = add("certify", cmd_certify, "saddle/rigidity certificate at the given configuration")
    add_input(sp)

    sp = add("stress-test", cmd_stress_test, "second-order stress test")
    add_input(sp)

    sp = add("follow", cmd_follow, "trace a nonlinear flex branch")
    add_input(sp)
    sp.add_argument("--direction", type=int, default=0)
    sp.add_argument("--coefficients", help="override: comma-separated flex-basis coefficients")
    sp.add_argument("--steps", type=int)
    sp.add_argument("--arc-step", type=float)
    sp.add_argument("--path-tol", type=float)
    sp.add_argument("--sign", type=int, choices=(1, -1), default=1)
    sp.add_argument("--output", default="path.jsonl")
    sp.add_argument("--svg", action="store_true", help="also write first/last frame SVGs")

    sp = add("render", cmd_render, "SVG drawing of a planar framework")
    add_input(sp)
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--flex", type=int, help="draw arrows for this realizable direction")
    sp.add_argument("--path", help="JSONL trajectory; draw one of its frames")
    sp.add_argument("--frame", type=int, default=-1)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.out_dir_given = hasattr(args, "out_dir")
    for name, default in (("config", None), ("seed", None), ("out_dir", "flexsaddle-out"),
                          ("json", False), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"flexsaddle: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
