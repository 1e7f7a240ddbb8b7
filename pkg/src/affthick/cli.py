"""Command-line front end: ``affthick <command> --config FILE [--out DIR]``.

Exit codes: 0 success, 2 invalid input, 3 certificate not found or verdict
inconclusive.  Reports are a text file and a JSON document (sorted keys, no
timestamps), both embedding the resolved configuration and the version.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import yaml

from . import __version__
from .carpets import (
    DEFAULT_MAX_CELLS,
    CarpetSpec,
    CarpetTooLarge,
    alpha_carpet,
    carpet_betas,
    closed_form_thickness,
    gap_count,
    generate,
)
from .certificates import (
    SearchGrid,
    auto_counterexample,
    check_intersection,
    check_pattern,
    counterexample,
    search_carpet_intersection,
    search_intersection_certificate,
    search_pattern_certificate,
)
from .game import POLICIES, GameParams, ThickStrategy, constant_policy, run_playout, thick_params
from .gaplemma import exact_intersection, gap_lemma_verdict
from .geometry import AxisBox, BoxRegion, DiagonalContraction, GapSystem
from .thickness import InvalidGapSystem, affine_thickness, fy_thickness

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INCONCLUSIVE = 3

COMMANDS = (
    "thickness",
    "carpet",
    "certify-pattern",
    "certify-intersection",
    "game",
    "gap-lemma",
    "counterexample",
    "render",
)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config


def load_schema() -> dict:
    return json.loads(resources.files("affthick").joinpath("config_schema.json").read_text())


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        data = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    return data


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc


def number(v, exact: bool = False):
    """Parse a config number; strings like "3/8" or "0.1" are read exactly."""
    if isinstance(v, bool):
        raise ConfigError("booleans are not numbers")
    if isinstance(v, str):
        try:
            q = Fraction(v.replace(" ", ""))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad number {v!r}") from exc
        return q if exact else float(q)
    if exact:
        return Fraction(v)
    return float(v)


def _vector(vs, exact=False) -> tuple:
    return tuple(number(v, exact) for v in vs)


def _box(d: dict, exact: bool) -> AxisBox:
    lo, hi = _vector(d["lo"], exact), _vector(d["hi"], exact)
    if len(lo) != len(hi):
        raise ConfigError("box lo/hi lengths differ")
    return AxisBox(lo, hi)


def build_set(cfg: dict, name: str, max_cells: int, exact: bool = False) -> GapSystem:
    sets = cfg.get("sets", {})
    if name not in sets:
        raise ConfigError(f"unknown set {name!r}")
    d = sets[name]
    if "carpet" in d:
        c = d["carpet"]
        spec = CarpetSpec(tuple(c["r"]), number(c.get("t", 1.0)), c.get("depth", 1))
        sys_ = generate(spec, max_cells=max_cells, exact=exact)
    else:
        hull = BoxRegion(tuple(_box(b, exact) for b in d["hull"]))
        gaps = tuple(BoxRegion(tuple(_box(b, exact) for b in g), open=True) for g in d.get("gaps", []))
        sys_ = GapSystem(hull, gaps)
    if "offset" in d:
        sys_ = sys_.translate(_vector(d["offset"], exact))
    return sys_


def build_matrix(cfg: dict, set_name: str | None = None) -> DiagonalContraction:
    m = cfg.get("matrix")
    if m and "betas" in m:
        return DiagonalContraction(_vector(m["betas"]))
    if m and "carpet" in m:
        return DiagonalContraction(carpet_betas(m["carpet"]["r"], number(m["carpet"]["t"])))
    if set_name is not None:
        d = cfg.get("sets", {}).get(set_name, {})
        if "carpet" in d:
            c = d["carpet"]
            return DiagonalContraction(carpet_betas(c["r"], number(c.get("t", 1.0))))
    raise ConfigError("no matrix given (matrix.betas, matrix.carpet, or a carpet set)")


def _single_set_name(cfg: dict, block: dict | None) -> str:
    if block and "set" in block:
        return block["set"]
    names = sorted(cfg.get("sets", {}))
    if len(names) != 1:
        raise ConfigError("name the set to use")
    return names[0]


# ---------------------------------------------------------------------------
# commands: each returns (exit code, result dict, extra files {name: text})


def _ext(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def cmd_thickness(cfg, opts):
    name = _single_set_name(cfg, cfg.get("thickness"))
    sys_ = build_set(cfg, name, opts.max_cells)
    A = build_matrix(cfg, name)
    report = affine_thickness(sys_, A)
    result = {"set": name, "betas": list(A.betas), "affine": report.to_dict(), "gaps": len(sys_.gaps)}
    if cfg.get("thickness", {}).get("fy", True):
        result["fy_tau"] = _ext(fy_thickness(sys_, validate=False))
    return EXIT_OK, result, {}


def cmd_carpet(cfg, opts):
    c = cfg.get("carpet")
    if not c or "r" not in c:
        raise ConfigError("carpet.r is required")
    r, t = tuple(c["r"]), number(c.get("t", 1.0))
    depth = c.get("depth", 1)
    spec = CarpetSpec(r, t, depth)
    result = {
        "r": list(r),
        "t": t,
        "depth": depth,
        "betas": list(spec.betas),
        "tau": closed_form_thickness(spec),
        "alpha": alpha_carpet(spec).to_dict(),
        "gap_count": gap_count(spec),
    }
    result["alpha_value"] = result["alpha"]["alpha"]
    if c.get("generate", False):
        sys_ = generate(spec, max_cells=opts.max_cells)
        rep = affine_thickness(sys_, spec.matrix, validate=False)
        result["pipeline_tau"] = _ext(rep.tau)
        result["pipeline_minus_closed_form"] = _ext(rep.tau - result["tau"])
    return EXIT_OK, result, {}


def cmd_certify_pattern(cfg, opts):
    c = cfg.get("certify", {})
    explicit = {"c", "delta", "M"} <= set(c)
    if explicit:
        if "betas" in c:
            betas = _vector(c["betas"])
            if "alpha" not in c:
                raise ConfigError("certify.alpha is required with certify.betas")
            alpha, t, r = number(c["alpha"]), None, None
        elif "r" in c and "t" in c:
            r, t = tuple(c["r"]), number(c["t"])
            betas = carpet_betas(r, t)
            ca = alpha_carpet(r, t)
            alpha = ca.alpha
        else:
            raise ConfigError("explicit certificate needs betas+alpha or r+t")
        cert = check_pattern(len(betas), betas, alpha, number(c["c"]), number(c["delta"]), c["M"], t=t, r=r)
        result = {"mode": "check", "certificate": cert.to_dict()}
        return (EXIT_OK if cert.valid else EXIT_INCONCLUSIVE), result, {}
    if "r" not in c:
        raise ConfigError("certify.r is required for a search")
    grid_cfg = dict(c.get("grid", {}))
    for key in ("log10_t_gap", "log10_c_gap", "log10_delta_gap"):
        if key in grid_cfg:
            grid_cfg[key] = tuple(grid_cfg[key])
    res = search_pattern_certificate(tuple(c["r"]), SearchGrid(**grid_cfg))
    result = {"mode": "search", **res.to_dict()}
    if res.found:
        result["M"] = res.certificate.M
    return (EXIT_OK if res.found else EXIT_INCONCLUSIVE), result, {}


def cmd_certify_intersection(cfg, opts):
    c = cfg.get("certify", {})
    if "r" in c:
        found = search_carpet_intersection(tuple(c["r"]), c.get("copies", 2), c.get("points", 48))
        if found is None:
            return EXIT_INCONCLUSIVE, {"mode": "carpet-search", "found": False}, {}
        t, cert = found
        return EXIT_OK, {"mode": "carpet-search", "found": True, "t": t, "certificate": cert.to_dict()}, {}
    if "betas" not in c or "alphas" not in c:
        raise ConfigError("certify-intersection needs r, or betas and alphas")
    betas, alphas = _vector(c["betas"]), _vector(c["alphas"])
    if "c" in c and "delta" in c:
        cert = check_intersection(len(betas), betas, alphas, number(c["c"]), number(c["delta"]))
        return (EXIT_OK if cert.valid else EXIT_INCONCLUSIVE), {"mode": "check", "certificate": cert.to_dict()}, {}
    cert = search_intersection_certificate(betas, alphas, c.get("points", 128))
    if cert is None:
        return EXIT_INCONCLUSIVE, {"mode": "search", "found": False}, {}
    return EXIT_OK, {"mode": "search", "found": True, "certificate": cert.to_dict()}, {}


def _seeds(g: dict, opts) -> list[int]:
    if opts.seed is not None:
        return [opts.seed]
    s = g["seeds"]
    if isinstance(s, dict):
        return list(range(s["start"], s["start"] + s["count"]))
    return list(s)


def _game_setup(cfg, opts):
    g = cfg.get("game")
    if not g:
        raise ConfigError("game block is required")
    name = g["set"]
    sys_ = build_set(cfg, name, opts.max_cells)
    A = build_matrix(cfg, name)
    report = affine_thickness(sys_, A)
    if not report.is_finite:
        raise ConfigError(f"the set's affine thickness is {report.tag}; the thick strategy needs a finite value")
    base = thick_params(A, report)
    alpha = number(g["alpha"]) if "alpha" in g else base.alpha
    c = number(g.get("c", 0.0))
    rho1, rho2 = number(g.get("rho1", 1.0)), number(g.get("rho2", 1.0))
    if c != 0 or rho1 != 1 or rho2 != 1:
        raise ConfigError("the thick strategy is defined for c = 0 and rho1 = rho2 = 1")
    if alpha < base.alpha * (1 - 1e-12):
        raise ConfigError(f"alpha {alpha} is below the thickness budget {base.alpha}")
    params = GameParams(A, alpha, c, rho2, rho1)
    policy_name = g.get("policy", "random")
    if policy_name == "constant":
        if "target" not in g:
            raise ConfigError("constant policy needs game.target")
        make = lambda: constant_policy(_vector(g["target"]))  # noqa: E731
    elif policy_name == "gap-seeker" and "target" in g:
        make = lambda: POLICIES["gap-seeker"](_vector(g["target"]))  # noqa: E731
    else:
        make = POLICIES[policy_name]
    return g, sys_, A, report, params, make


def cmd_game(cfg, opts):
    g, sys_, A, report, params, make = _game_setup(cfg, opts)
    strategy = ThickStrategy(sys_, report)
    records = [
        run_playout(sys_, report, A, make(), g["horizon"], seed, params=params, player2=strategy)
        for seed in _seeds(g, opts)
    ]
    summary = {
        "playouts": len(records),
        "contract_holds": sum(r.wins for r in records),
        "in_deleted": sum(r.in_deleted for r in records),
        "faults": sum(r.fault is not None for r in records),
        "budget_violations": sum(r.budget_violations for r in records),
        "nesting_violations": sum(r.nesting_violations for r in records),
    }
    result = {
        "alpha": params.alpha,
        "tau": report.tau,
        "summary": summary,
        "playouts": [r.to_dict() for r in records],
    }
    return EXIT_OK, result, {}


def cmd_gap_lemma(cfg, opts):
    gl = cfg.get("gaplemma")
    if not gl:
        raise ConfigError("gaplemma block is required")
    a, b = gl["sets"]
    s1 = build_set(cfg, a, opts.max_cells, exact=True)
    s2 = build_set(cfg, b, opts.max_cells, exact=True)
    A = build_matrix(cfg, a)
    v = gap_lemma_verdict(s1, s2, A)
    inter = exact_intersection(s1, s2)
    result = {
        "sets": [a, b],
        **v.to_dict(),
        "exact_intersection": {
            "nonempty": inter.nonempty,
            "witness": [str(x) for x in inter.witness] if inter.witness else None,
        },
    }
    return (EXIT_OK if v.certified else EXIT_INCONCLUSIVE), result, {}


def cmd_counterexample(cfg, opts):
    c = cfg.get("counterexample", {})
    betas = _vector(c.get("betas", [0.2, 0.2]))
    if c.get("auto", False) or not {"r", "s", "t"} <= set(c):
        inst = auto_counterexample(len(betas), betas)
        mode = "auto"
    else:
        inst = counterexample(len(betas), betas, number(c["r"]), number(c["s"]), number(c["t"]))
        mode = "explicit"
    return EXIT_OK, {"mode": mode, **inst.to_dict()}, {}


def render_svg(sys_: GapSystem, size: int = 512, deletions=None, A=None, path=None) -> str:
    """SVG of a planar gap system: hull light, gaps shaded, deletions outlined."""
    if sys_.n != 2:
        raise ConfigError("render supports n = 2 only")
    amb = sys_.ambient
    boxes = list(sys_.hull.boxes) + [b for g in sys_.gaps for b in g.boxes]
    lo = [min(float(amb.lo[j]), *(float(b.lo[j]) for b in boxes)) for j in range(2)]
    hi = [max(float(amb.hi[j]), *(float(b.hi[j]) for b in boxes)) for j in range(2)]
    span = max(hi[0] - lo[0], hi[1] - lo[1])
    pad = 0.05 * span
    scale = size / (span + 2 * pad)

    def rect(x0, y0, x1, y1, style):
        X = (x0 - lo[0] + pad) * scale
        Y = (hi[1] - y1 + pad) * scale
        return (
            f'<rect x="{X:.4f}" y="{Y:.4f}" width="{(x1 - x0) * scale:.4f}" '
            f'height="{(y1 - y0) * scale:.4f}" {style}/>'
        )

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
    ]
    for b in sys_.hull.boxes:
        out.append(rect(*map(float, (b.lo[0], b.lo[1], b.hi[0], b.hi[1])), 'fill="#d8d8d8" stroke="none"'))
    for g in sys_.gaps:
        for b in g.boxes:
            out.append(rect(*map(float, (b.lo[0], b.lo[1], b.hi[0], b.hi[1])), 'fill="#ffffff" stroke="none"'))
    for d in deletions or ():
        hw = [w for w in A.power(d.q)]
        out.append(
            rect(d.y[0] - hw[0], d.y[1] - hw[1], d.y[0] + hw[0], d.y[1] + hw[1],
                 'fill="#e0505033" stroke="#c02020" stroke-width="0.8"')
        )
    if path:
        pts = " ".join(f"{(x - lo[0] + pad) * scale:.4f},{(hi[1] - y + pad) * scale:.4f}" for x, y in path)
        out.append(f'<polyline points="{pts}" fill="none" stroke="#2050c0" stroke-width="1"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_render(cfg, opts):
    rc = cfg.get("render", {})
    name = _single_set_name(cfg, rc)
    sys_ = build_set(cfg, name, opts.max_cells)
    deletions, A, path = None, None, None
    if "game_seed" in rc:
        g, gsys, A, report, params, make = _game_setup(cfg, opts)
        if g["set"] != name:
            raise ConfigError("render.game_seed needs game.set equal to render.set")
        rec = run_playout(gsys, report, A, make(), g["horizon"], rc["game_seed"], params=params)
        deletions, path = rec.deletions, [rec.outcome]
    svg = render_svg(sys_, rc.get("size", 512), deletions, A, path)
    result = {"set": name, "gaps": len(sys_.gaps), "deletions": len(deletions or ()), "svg": f"{name}.svg"}
    return EXIT_OK, result, {f"{name}.svg": svg}


HANDLERS = {
    "thickness": cmd_thickness,
    "carpet": cmd_carpet,
    "certify-pattern": cmd_certify_pattern,
    "certify-intersection": cmd_certify_intersection,
    "game": cmd_game,
    "gap-lemma": cmd_gap_lemma,
    "counterexample": cmd_counterexample,
    "render": cmd_render,
}


# ---------------------------------------------------------------------------
# reports


def _jsonable(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _text_lines(prefix: str, x, digits: int, out: list[str], limit: int = 40) -> None:
    if isinstance(x, dict):
        for k in sorted(x):
            _text_lines(f"{prefix}.{k}" if prefix else str(k), x[k], digits, out, limit)
    elif isinstance(x, list):
        if len(x) > limit or any(isinstance(v, (dict, list)) for v in x):
            out.append(f"{prefix}: [{len(x)} items, see JSON report]")
        else:
            out.append(f"{prefix}: [" + ", ".join(_fmt(v, digits) for v in x) + "]")
    else:
        out.append(f"{prefix}: {_fmt(x, digits)}")


def _fmt(v, digits: int) -> str:
    if isinstance(v, float):
        return f"{v:.{digits}g}"
    return str(v)


def build_report(command: str, cfg: dict, opts, code: int, result: dict) -> dict:
    return _jsonable(
        {
            "command": command,
            "version": __version__,
            "exit_code": code,
            "config": cfg,
            "flags": {"seed": opts.seed, "precision": opts.precision, "max_cells": opts.max_cells},
            "result": result,
        }
    )


def render_text(report: dict, digits: int) -> str:
    lines = [f"affthick {report['version']} {report['command']}", f"exit_code: {report['exit_code']}"]
    _text_lines("", report["result"], digits, lines)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# entry point


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="affthick", description="Affine thickness toolkit")
    p.add_argument("--version", action="version", version=f"affthick {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON or YAML configuration file")
        sp.add_argument("--out", help="directory for report files (default: text to stdout)")
        sp.add_argument("--seed", type=int, help="single game seed, overriding game.seeds")
        sp.add_argument("--precision", type=int, default=10, help="significant digits in the text report")
        sp.add_argument("--max-cells", type=int, default=DEFAULT_MAX_CELLS, dest="max_cells",
                        help="guard on surviving cells when generating carpets")
    return p


def run(command: str, cfg: dict, opts) -> tuple[int, dict, dict]:
    """Validate and dispatch; returns (exit code, report, extra files)."""
    validate_config(cfg)
    code, result, files = HANDLERS[command](cfg, opts)
    return code, build_report(command, cfg, opts, code, result), files


def main(argv: list[str] | None = None) -> int:
    opts = make_parser().parse_args(argv)
    try:
        if opts.seed is not None and opts.seed < 0:
            raise ConfigError("--seed must be non-negative")
        if opts.precision < 1 or opts.max_cells < 1:
            raise ConfigError("--precision and --max-cells must be positive")
        cfg = load_config(opts.config)
        code, report, files = run(opts.command, cfg, opts)
    except (ConfigError, CarpetTooLarge, InvalidGapSystem, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = render_text(report, opts.precision)
    out_cfg = cfg.get("output", {})
    out_dir = opts.out or out_cfg.get("path")
    fmt = out_cfg.get("format", "both")
    if out_dir:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        stem = opts.command
        if fmt in ("text", "both"):
            (d / f"{stem}.txt").write_text(text)
        if fmt in ("json", "both"):
            (d / f"{stem}.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
        for name, content in files.items():
            (d / name).write_text(content)
    else:
        sys.stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n" if fmt == "json" else text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
