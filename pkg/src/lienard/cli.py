"""Command-line front end.

Every subcommand writes one JSON report (stdout or ``--out``) that embeds the
resolved configuration.  Config-file keys and flags are the same names, with
dashes in flags and underscores in keys; flags win over the file.

Exit codes: 0 success, 1 analysis failure, 2 configuration error.  Errors
are printed to stderr as JSON.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import acceptance
from .cycles import DEFAULT_R_MIN, DEFAULT_SAMPLES, RETURN_TOL, CensusError, census, displacement_profile
from .flow import DEFAULT_TOL, IntegrationError, default_escape_radius, integrate
from .polysys import (BivariatePoly, CanonicalSystem, LienardSystem, canonical_from, parametrized_field,
                      reversible_system, rotation_determinant, symmetry_class, system_from_dict,
                      _parse_sign)
from .rotate import SweepPlan, certify_rotation_monotonicity, construct_configuration, sweep
from .singular import ContourError, find_finite_singularities, poincare_index, singular_report


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


_NUMBER_LIST = re.compile(r"-[0-9.][0-9.,eE+-]*")


def _glue_negative_lists(argv: list[str]) -> list[str]:
    """Turn ``--beta -3,1`` into ``--beta=-3,1`` so negative lists are not read as flags."""
    out: list[str] = []
    for tok in argv:
        if out and _NUMBER_LIST.fullmatch(tok) and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


SYSTEM_KEYS = ("k", "l", "alpha", "beta", "alpha_even", "beta_odd", "even_signs")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _signs(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_system(p: argparse.ArgumentParser):
    g = p.add_argument_group("system")
    g.add_argument("--k", type=int)
    g.add_argument("--l", type=int)
    g.add_argument("--alpha", type=_floats, help="general form: alpha_0,...,alpha_2k")
    g.add_argument("--beta", type=_floats, help="general form: beta_1,...,beta_2l")
    g.add_argument("--alpha-even", type=_floats, help="canonical form: alpha_0,alpha_2,...")
    g.add_argument("--beta-odd", type=_floats, help="canonical form: beta_1,beta_3,...")
    g.add_argument("--even-signs", type=_signs, help="canonical form: +,-,...")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON file with the same keys as the flags")
    p.add_argument("--out", type=Path, help="report path (default: stdout)")
    p.add_argument("--seed", type=int)


def _add_census(p: argparse.ArgumentParser):
    p.add_argument("--tol", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lienard", description="Analyse Lienard polynomial systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("singular", help="finite and infinite singular points, index ledger")
    _add_common(p)
    _add_system(p)

    p = sub.add_parser("index", help="contour winding number around a point")
    _add_common(p)
    _add_system(p)
    p.add_argument("--x", type=float)
    p.add_argument("--y", type=float)
    p.add_argument("--radius", type=float)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("cycles", help="limit-cycle census")
    _add_common(p)
    _add_system(p)
    _add_census(p)
    p.add_argument("--profile-dir", type=Path, help="write one r,d,status CSV per anchor")

    p = sub.add_parser("sweep", help="rotation-parameter sweep (plan from --config or --plan)")
    _add_common(p)
    _add_census(p)
    p.add_argument("--plan", type=Path, help="plan JSON: {template, order}")

    p = sub.add_parser("construct", help="build a (k, l) cycle configuration")
    _add_common(p)
    _add_census(p)
    p.add_argument("--k", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--beta-odd", type=_floats)
    p.add_argument("--even-signs", type=_signs)
    p.add_argument("--ratio", type=float)
    p.add_argument("--budget", type=int)

    p = sub.add_parser("certify", help="rotation determinants, symmetry and monotonicity")
    _add_common(p)
    _add_system(p)
    _add_census(p)
    p.add_argument("--slot", help="even damping slot for the monotonicity check, e.g. a2")
    p.add_argument("--values", type=_floats, help="slot values to track cycles across")
    p.add_argument("--anchor-x", type=float)

    p = sub.add_parser("portrait", help="trajectory CSVs from seed points")
    _add_common(p)
    _add_system(p)
    p.add_argument("--starts", help="x,y;x,y;... (default: random points from --seed)")
    p.add_argument("--n-starts", type=int)
    p.add_argument("--box", type=float, help="half-width of the random start box")
    p.add_argument("--t-max", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--backward", action="store_true", default=None)
    p.add_argument("--out-dir", type=Path)

    p = sub.add_parser("verify", help="run the acceptance suite")
    _add_common(p)
    p.add_argument("--only", type=lambda s: [v for v in s.split(",") if v])
    return parser


DEFAULTS = {
    "seed": 0,
    "tol": None,  # per command below
    "samples": None,
    "r_min": DEFAULT_R_MIN,
    "r_max": None,
    "ratio": 10.0,
    "budget": 10,
    "n_starts": 8,
    "box": 2.0,
    "t_max": 50.0,
    "backward": False,
    "radius": 0.1,
    "x": 0.0,
    "y": 0.0,
}


def resolve(args: argparse.Namespace) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg: dict = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    out = {k: v for k, v in DEFAULTS.items() if k in vars(args) or k == "seed"}
    if "system" in cfg:
        cfg = {**{k: v for k, v in cfg.items() if k != "system"}, **cfg["system"]}
    out.update(cfg)
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        out[key] = str(val) if isinstance(val, Path) else val
    out["command"] = args.command
    if out.get("tol") is None and args.command in ("cycles", "sweep", "construct", "certify"):
        out["tol"] = RETURN_TOL
    if out.get("tol") is None and args.command == "portrait":
        out["tol"] = DEFAULT_TOL
    if out.get("samples") is None and args.command in ("cycles", "sweep", "construct", "certify"):
        out["samples"] = DEFAULT_SAMPLES
    if out.get("samples") is None and args.command == "index":
        out["samples"] = 256
    for key in ("tol", "radius", "t_max", "ratio", "box"):
        if key in out and out[key] is not None and not out[key] > 0:
            raise ConfigError(f"{key} must be positive")
    if "samples" in out and out["samples"] is not None and out["samples"] < 1:
        raise ConfigError("samples must be at least 1")
    return out


def _system(cfg: dict) -> tuple[LienardSystem, CanonicalSystem | None]:
    data = {k: cfg[k] for k in SYSTEM_KEYS if cfg.get(k) is not None}
    if "form" in cfg:
        data["form"] = cfg["form"]
    elif {"alpha_even", "beta_odd", "even_signs"} & data.keys():
        data["form"] = "canonical"
    if not data or ("alpha" not in data and "alpha_even" not in data):
        raise ConfigError("no system given: use --alpha/--beta or --alpha-even/--beta-odd/--even-signs")
    try:
        return system_from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad system: {exc}") from exc


def _census_kw(cfg: dict) -> dict:
    return {"n_samples": cfg["samples"], "r_min": cfg["r_min"], "r_max": cfg.get("r_max"), "tol": cfg["tol"]}


def _clean(obj):
    """JSON-safe copy: NaN and infinities become null, numpy scalars become floats."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


# -- commands ---------------------------------------------------------------

def cmd_singular(cfg):
    sys_, _ = _system(cfg)
    rep = singular_report(sys_)
    ok = rep["alternation"] != "fail" and (not rep["ledger"]["conclusive"] or rep["ledger"]["balanced"])
    return rep, ok


def cmd_index(cfg):
    sys_, _ = _system(cfg)
    idx = poincare_index(sys_, (cfg["x"], cfg["y"]), cfg["radius"], cfg["samples"])
    return {"index": idx, "center": [cfg["x"], cfg["y"]], "radius": cfg["radius"]}, True


def cmd_cycles(cfg):
    sys_, _ = _system(cfg)
    kw = _census_kw(cfg)
    c = census(sys_, keep_profiles=bool(cfg.get("profile_dir")), **kw)
    if cfg.get("profile_dir"):
        d = Path(cfg["profile_dir"])
        d.mkdir(parents=True, exist_ok=True)
        for a in c.anchors:
            if a.profile is not None:
                (d / f"profile_x{a.anchor.x:+.6f}.csv").write_text(a.profile.to_csv())
    return c.to_dict(), True


def cmd_sweep(cfg):
    plan_data = cfg.get("plan")
    if isinstance(plan_data, str):
        try:
            plan_data = json.loads(Path(plan_data).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read plan: {exc}") from exc
    if not isinstance(plan_data, dict):
        raise ConfigError("sweep needs a plan (config key 'plan' or --plan)")
    try:
        plan = SweepPlan.from_dict(plan_data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad plan: {exc}") from exc
    cfg["plan"] = plan.to_dict()
    log = sweep(plan, _census_kw(cfg))
    return log.to_dict(), log.ok


def cmd_construct(cfg):
    k = cfg.get("k")
    if k is None:
        raise ConfigError("construct needs --k")
    l = cfg.get("l") or 0
    beta = cfg.get("beta_odd") or []
    signs = cfg.get("even_signs") or []
    try:
        signs = [_parse_sign(s) for s in signs]
        res = construct_configuration(int(k), int(l), tuple(beta), tuple(signs), ratio=cfg["ratio"],
                                      budget=cfg["budget"], census_kw=_census_kw(cfg))
    except ValueError as exc:
        if isinstance(exc, ContourError):
            raise
        raise ConfigError(str(exc)) from exc
    rep = res.to_dict()
    rep["totals"] = rep["census"]["totals"]
    return rep, res.reached


def _delta_report(sys_: LienardSystem, csys: CanonicalSystem | None) -> list[dict]:
    rows = []
    for i in range(sys_.k + 1):
        delta = rotation_determinant(*parametrized_field(sys_, f"a{2 * i}"))
        want = BivariatePoly.monomial(2 * i, 2)
        rows.append({"slot": f"a{2 * i}", "delta": str(delta), "expected": str(want), "match": delta == want})
    if csys is not None and sys_.l:
        rev = reversible_system(csys.k, csys.l, csys.beta_odd, csys.even_signs)
        for j in range(1, sys_.l + 1):
            delta = rotation_determinant(*parametrized_field(rev, f"b{2 * j - 1}"))
            want = BivariatePoly.monomial(2 * j, 1, -1.0)
            rows.append({"slot": f"b{2 * j - 1}", "system": "reversible", "delta": str(delta),
                         "expected": str(want), "match": delta == want})
    return rows


def cmd_certify(cfg):
    sys_, csys = _system(cfg)
    if csys is None:
        try:
            csys = canonical_from(sys_)
        except ValueError:
            csys = None
    rows = _delta_report(sys_, csys)
    rep = {"deltas": rows, "symmetry": symmetry_class(sys_)}
    ok = all(r["match"] for r in rows)
    if rep["symmetry"] != "none":
        c = census(sys_, **_census_kw(cfg))
        rep["symmetric_census_empty"] = sum(c.totals) == 0
        ok = ok and rep["symmetric_census_empty"]
    if cfg.get("slot"):
        values = cfg.get("values")
        if not values:
            raise ConfigError("--slot needs --values")
        try:
            mono = certify_rotation_monotonicity(csys if csys is not None else sys_, cfg["slot"], values,
                                                 cfg.get("anchor_x") or 0.0, _census_kw(cfg))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        rep["monotonicity"] = mono.to_dict()
        ok = ok and mono.status != "fail"
    return rep, ok


def _starts(cfg) -> list[tuple[float, float]]:
    if cfg.get("starts"):
        pts = []
        for chunk in str(cfg["starts"]).split(";"):
            vals = _floats(chunk)
            if len(vals) != 2:
                raise ConfigError(f"bad start point {chunk!r}")
            pts.append((vals[0], vals[1]))
        return pts
    rng = np.random.default_rng(cfg["seed"])
    box = cfg["box"]
    return [tuple(float(v) for v in rng.uniform(-box, box, 2)) for _ in range(cfg["n_starts"])]


def cmd_portrait(cfg):
    sys_, _ = _system(cfg)
    starts = _starts(cfg)
    out_dir = Path(cfg.get("out_dir") or "portrait")
    out_dir.mkdir(parents=True, exist_ok=True)
    r_esc = max(default_escape_radius(sys_), 2 * max(math.hypot(*s) for s in starts))
    sing = [p.x for p in find_finite_singularities(sys_)]
    files = []
    for i, s in enumerate(starts):
        tr = integrate(sys_, s, cfg["t_max"], cfg["tol"], r_esc, sing, backward=bool(cfg["backward"]))
        path = out_dir / f"traj_{i:03d}.csv"
        path.write_text(tr.to_csv())
        files.append({"file": path.name, "start": list(s), "terminal": tr.terminal, "points": len(tr.t)})
    return {"trajectories": files, "out_dir": str(out_dir), "escape_radius": r_esc}, True


def cmd_verify(cfg):
    names = cfg.get("only") or list(acceptance.CRITERIA)
    unknown = [n for n in names if n not in acceptance.CRITERIA]
    if unknown:
        raise ConfigError(f"unknown criteria {unknown}; choose from {list(acceptance.CRITERIA)}")
    results = []
    for n in names:
        r = acceptance.CRITERIA[n]()
        print(r.line(), file=sys.stderr)
        results.append(r)
    ok = all(r.passed and r.within_budget for r in results)
    # timings vary run to run, so they stay out of the report
    rows = [{"name": r.name, "passed": r.passed, "within_budget": r.within_budget, "detail": r.detail}
            for r in results]
    return {"criteria": rows, "all_passed": ok}, ok


COMMANDS = {
    "singular": cmd_singular,
    "index": cmd_index,
    "cycles": cmd_cycles,
    "sweep": cmd_sweep,
    "construct": cmd_construct,
    "certify": cmd_certify,
    "portrait": cmd_portrait,
    "verify": cmd_verify,
}


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message}, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(_glue_negative_lists(argv))
    except ConfigError as exc:
        return _fail(2, "config", str(exc))
    except SystemExit as exc:  # --help
        return 0 if not exc.code else 2
    try:
        cfg = resolve(args)
        body, ok = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        return _fail(2, "config", str(exc))
    except (CensusError, IntegrationError, ContourError) as exc:
        return _fail(1, "analysis", str(exc))
    except ValueError as exc:
        return _fail(2, "config", str(exc))
    report = {"command": args.command, "config": cfg, "result": body, "ok": ok}
    text = dumps(report)
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
