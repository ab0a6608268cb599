"""Command-line front end.

Each command runs one module pipeline, writes ``report.json`` (plus CSV
artifacts) into the output directory and exits 0 when every check passes,
1 when a check fails and 2 on invalid configuration.

Configuration precedence: command defaults < ``--config`` JSON < flags.
The output directory is ``--out``, else ``$MODNUC_OUT_DIR``, else the
config's ``out_dir``, else the working directory.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import ConfigError, DomainError, ModnucError
from .fock import MAX_PARTICLES, FockSpace, symmetry_residual, zf_create, zf_relation_residuals
from .modular import invariant_report, modular_data, nuclearity_spectrum
from .quadrature import build_grid, tail_mass
from .report import check, write_report, write_spectrum_csv, write_text
from .scattering import analyticity_margin, constraint_residuals, evaluate, parse_model
from .wedge import (
    TimeZeroProfile,
    WedgePoint,
    build_kernel,
    cauchy_continuation,
    compression_convergence,
    contraction_bound,
    direct_continuation,
    kernel_value,
    relative_l2_error,
    sample_profiles,
    sector_decay_report,
    spectrum_report,
    subspace_vector,
    vector_bound_check,
)

OUT_ENV = "MODNUC_OUT_DIR"

COMMANDS = (
    "smatrix-check",
    "zf-check",
    "continuation-compare",
    "kernel-spectrum",
    "bounds",
    "sector-decay",
    "modular-toy",
)

# per-command grid defaults: (theta_max, panels, order)
_GRID_DEFAULTS = {
    "smatrix-check": (5.0, 10, 16),
    "zf-check": (6.0, 4, 16),
    "continuation-compare": (8.0, 512, 16),
    "kernel-spectrum": (10.0, 16, 16),
    "bounds": (8.0, 64, 16),
    "sector-decay": (8.0, 64, 16),
}

_PROFILE_DEFAULTS = {"bounds": 20, "sector-decay": 12}


@dataclass
class RunConfig:
    smatrix: str = "free-bose"
    mass: float = 1.0
    theta_max: Optional[float] = None
    panels: Optional[int] = None
    order: Optional[int] = None
    x0: float = 0.0
    x1: float = -1.0
    type: str = "phi"
    n_max: int = 3
    profiles: Optional[int] = None
    pairs: int = 20
    center: float = -2.0
    radius: float = 0.5
    n_list: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    d: int = 2
    p: Optional[list] = None
    alpha: float = 0.25
    seed: int = 0
    out_dir: Optional[str] = None

    @classmethod
    def fields(cls) -> set:
        return set(cls.__dataclass_fields__)

    def validate(self, command: str) -> None:
        for name, kind in (("mass", float), ("x0", float), ("x1", float), ("alpha", float),
                           ("center", float), ("radius", float), ("n_max", int), ("pairs", int),
                           ("d", int), ("seed", int)):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or (kind is int and value != int(value)):
                raise ConfigError(f"expected {kind.__name__}, got {value!r}", name)
            setattr(self, name, kind(value))
        if not isinstance(self.smatrix, str):
            raise ConfigError(f"expected a model string, got {self.smatrix!r}", "smatrix")
        if not (isinstance(self.mass, (int, float)) and self.mass > 0):
            raise ConfigError(f"must be positive, got {self.mass!r}", "mass")
        if self.type not in ("phi", "pi"):
            raise ConfigError(f"must be 'phi' or 'pi', got {self.type!r}", "type")
        if command in ("kernel-spectrum", "bounds", "sector-decay"):
            if not abs(self.x0) + self.x1 < 0:
                raise ConfigError(f"wedge point ({self.x0}, {self.x1}) violates |x0| + x1 < 0", "x1")
        if command == "modular-toy":
            if self.p is None:
                self.p = [1.0 / self.d] * self.d
            if len(self.p) != self.d:
                raise ConfigError(f"expected {self.d} probabilities, got {len(self.p)}", "p")
        if self.profiles is not None and self.profiles < 1:
            raise ConfigError("must be >= 1", "profiles")
        if self.pairs < 1:
            raise ConfigError("must be >= 1", "pairs")
        if not 0 <= self.n_max <= MAX_PARTICLES:
            raise ConfigError(f"must lie in [0, {MAX_PARTICLES}], got {self.n_max}", "n_max")
        if command == "zf-check" and self.n_max < 2:
            raise ConfigError("exchange relations need n_max >= 2", "n_max")


def _grid(cfg: RunConfig):
    return build_grid(cfg.theta_max, cfg.panels, cfg.order)


def _status(checks) -> str:
    return "pass" if all(c["pass"] for c in checks) else "fail"


# ---------------------------------------------------------------------------
# commands


def cmd_smatrix_check(cfg: RunConfig, out: Path) -> dict:
    S = parse_model(cfg.smatrix)
    grid = _grid(cfg)
    res = constraint_residuals(S, grid)
    tol = 1e-12 if S.kind == "const" else 1e-10
    s0 = complex(evaluate(S, 0.0))
    checks = [
        check("unitarity_residual", res[0], tol),
        check("reality_residual", res[1], tol),
        check("crossing_residual", res[2], tol),
        check("s_at_zero_distance_to_pm1", min(abs(s0 - 1), abs(s0 + 1)), 0.0),
    ]
    write_text(grid.to_csv(), out / "grid.csv")
    return {
        "results": {
            "model": S.name,
            "residuals": list(res),
            "s_at_zero": s0,
            "analyticity_margin": analyticity_margin(S),
            "analyticity_margin_note": "family-specific: distance to the nearest zero of S in the strip",
        },
        "checks": checks,
    }


def cmd_zf_check(cfg: RunConfig, out: Path) -> dict:
    S = parse_model(cfg.smatrix)
    grid = _grid(cfg)
    space = FockSpace(grid, S, cfg.n_max, cfg.mass)
    rng = np.random.default_rng(cfg.seed)
    K = grid.size
    worst = {"mixed": 0.0, "creation": 0.0, "annihilation": 0.0}
    sym = 0.0
    for _ in range(cfg.pairs):
        f = rng.standard_normal(K) + 1j * rng.standard_normal(K)
        g = rng.standard_normal(K) + 1j * rng.standard_normal(K)
        f /= np.linalg.norm(f)
        g /= np.linalg.norm(g)
        probe = space.vacuum() * complex(rng.standard_normal(), rng.standard_normal())
        for n in range(1, cfg.n_max - 1):
            probe = probe + space.random_state(n, rng)
        for key, val in zf_relation_residuals(f, g, S, probe).items():
            worst[key] = max(worst[key], val)
        sym = max(sym, symmetry_residual(zf_create(f, zf_create(g, probe))))
    tol = 1e-10
    checks = [check(f"{k}_relation_residual", v, tol) for k, v in sorted(worst.items())]
    checks.append(check("symmetry_residual", sym, tol))
    write_text(grid.to_csv(), out / "grid.csv")
    return {"results": {"model": S.name, "pairs": cfg.pairs, "n_max": cfg.n_max, "residuals": worst,
                        "symmetry_residual": sym},
            "checks": checks}


def cmd_continuation_compare(cfg: RunConfig, out: Path) -> dict:
    grid = _grid(cfg)
    try:
        h = TimeZeroProfile(cfg.center, cfg.radius)
    except DomainError as exc:
        raise ConfigError(str(exc), "center") from None
    v = subspace_vector(cfg.type, h, cfg.mass, grid)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        cauchy = cauchy_continuation(v)
    direct = direct_continuation(v)
    err = relative_l2_error(cauchy, direct)
    checks = [check("relative_l2_error", err, 1e-6, "<")]
    write_text(grid.to_csv(), out / "grid.csv")
    return {
        "results": {
            "type": cfg.type,
            "profile": {"center": h.center, "radius": h.radius},
            "relative_l2_error": err,
            "vector_norm": v.norm(),
            "continuation_norm": float(np.linalg.norm(direct)),
            "boundary_tail_mass": tail_mass(v.coeffs, grid),
            "warnings": [str(w.message) for w in caught],
        },
        "checks": checks,
    }


def cmd_kernel_spectrum(cfg: RunConfig, out: Path) -> dict:
    x = WedgePoint(cfg.x0, cfg.x1)
    grid = _grid(cfg)
    fine = build_grid(cfg.theta_max, 2 * cfg.panels, cfg.order)
    rep = spectrum_report(build_kernel(cfg.type, x, cfg.mass, grid))
    rep_fine = spectrum_report(build_kernel(cfg.type, x, cfg.mass, fine))
    delta = abs(rep_fine.trace_norm - rep.trace_norm) / rep_fine.trace_norm
    checks = [
        check("trace_norm_refinement_change", delta, 0.01, "<"),
        check("decay_index_found", 1.0 if rep.decay_index is not None else 0.0, 0.5, ">"),
        check("trace_minus_operator_norm", rep.trace_norm - rep.operator_norm, 0.0, ">"),
    ]
    write_spectrum_csv(rep.singular_values, out / "spectrum.csv")
    write_text(grid.to_csv(), out / "grid.csv")
    return {
        "results": {
            "type": cfg.type,
            "x": [x.x0, x.x1],
            "spectrum": rep.to_json(),
            "refined": {"nodes": fine.size, **rep_fine.to_json()},
            "trace_norm_relative_change": delta,
            "kernel_at_origin": complex(kernel_value(cfg.type, x, cfg.mass, 0.0, 0.0)),
            "normalization_note": "absolute trace norms depend on the Fourier normalization",
        },
        "checks": checks,
    }


def cmd_bounds(cfg: RunConfig, out: Path) -> dict:
    x = WedgePoint(cfg.x0, cfg.x1)
    grid = _grid(cfg)
    profiles = sample_profiles(cfg.profiles, cfg.seed)
    kernel = build_kernel(cfg.type, x, cfg.mass, grid).matrix
    vec = vector_bound_check(cfg.type, x, cfg.mass, profiles, grid, kernel=kernel)
    bound = contraction_bound(x, cfg.mass)
    checks = [check("worst_vector_ratio", vec["worst_ratio"], bound + vec["slack"])]
    results = {"type": cfg.type, "x": [x.x0, x.x1], "bound": bound, "vector": vec}
    if len(profiles) >= 2:
        convergence = compression_convergence(cfg.type, x, cfg.mass, profiles, grid)
        final = convergence[-1]
        checks.append(check("compressed_norm", final["norm"], bound + vec["slack"]))
        checks.append(check("compressed_norm_below_one", final["norm"], 1.0, "<"))
        results["compression"] = {"norm": final["norm"], "condition": final["condition"],
                                  "samples": final["samples"], "convergence": convergence}
    write_text(grid.to_csv(), out / "grid.csv")
    return {"results": results, "checks": checks}


def cmd_sector_decay(cfg: RunConfig, out: Path) -> dict:
    grid = _grid(cfg)
    profiles = sample_profiles(cfg.profiles, cfg.seed)
    rep = sector_decay_report((cfg.x0, cfg.x1), cfg.mass, cfg.n_list, grid=grid, profiles=profiles, kind=cfg.type)
    checks = [check(f"tensor_power_norm_n{r['n']}", r["tensor_power_norm"], r["bound"] + rep["tolerance"])
              for r in rep["rows"]]
    write_text(grid.to_csv(), out / "grid.csv")
    return {"results": rep, "checks": checks}


def cmd_modular_toy(cfg: RunConfig, out: Path) -> dict:
    try:
        P = modular_data(cfg.d, cfg.p)
    except DomainError as exc:
        raise ConfigError(str(exc), "p") from None
    inv = invariant_report(P)
    spec, nuclear_bound = nuclearity_spectrum(P, cfg.alpha)
    tol = 1e-11
    checks = [check(k, v, tol) for k, v in sorted(inv.items()) if k != "delta_min_eigenvalue"]
    checks.append(check("delta_min_eigenvalue", inv["delta_min_eigenvalue"], 0.0, ">"))
    checks.append(check("min_singular_value", float(spec.singular_values[-1]), 0.0, ">"))
    write_spectrum_csv(spec.singular_values, out / "spectrum.csv")
    return {
        "results": {
            "d": P.d,
            "p": list(P.p),
            "alpha": cfg.alpha,
            "delta_spectrum": P.delta_spectrum(),
            "delta_is_identity": bool(np.allclose(P.delta, np.eye(P.d ** 2), atol=1e-12, rtol=0)),
            "invariants": inv,
            "singular_values": spec.singular_values,
            "trace_norm_hs": spec.trace_norm,
            "nuclear_norm_upper_bound": nuclear_bound,
        },
        "checks": checks,
    }


_HANDLERS = {
    "smatrix-check": cmd_smatrix_check,
    "zf-check": cmd_zf_check,
    "continuation-compare": cmd_continuation_compare,
    "kernel-spectrum": cmd_kernel_spectrum,
    "bounds": cmd_bounds,
    "sector-decay": cmd_sector_decay,
    "modular-toy": cmd_modular_toy,
}


# ---------------------------------------------------------------------------
# argument handling


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from None


def _ints(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modnuc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"modnuc {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--out", dest="out_dir", default=S, help="output directory")
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--smatrix", default=S, help="free-bose | free-fermi | sinh:b=<float>")
    common.add_argument("--mass", type=float, default=S)
    common.add_argument("--theta-max", dest="theta_max", type=float, default=S)
    common.add_argument("--panels", type=int, default=S)
    common.add_argument("--order", type=int, default=S)
    common.add_argument("--x0", type=float, default=S)
    common.add_argument("--x1", type=float, default=S)
    common.add_argument("--type", choices=("phi", "pi"), default=S)
    common.add_argument("--n-max", dest="n_max", type=int, default=S)
    common.add_argument("--profiles", type=int, default=S)
    common.add_argument("--pairs", type=int, default=S)
    common.add_argument("--center", type=float, default=S)
    common.add_argument("--radius", type=float, default=S)
    common.add_argument("--n-list", dest="n_list", type=_ints, default=S)
    common.add_argument("--d", type=int, default=S)
    common.add_argument("--p", type=_floats, default=S)
    common.add_argument("--alpha", type=float, default=S)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def make_config(command: str, args: dict) -> RunConfig:
    values = {}
    config_path = args.pop("config", None)
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {config_path}: {exc}", "config") from None
        if not isinstance(loaded, dict):
            raise ConfigError("top level must be an object", "config")
        unknown = set(loaded) - RunConfig.fields()
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)}", "config")
        values.update(loaded)
    values.update(args)
    cfg = RunConfig(**values)
    grid = _GRID_DEFAULTS.get(command)
    if grid is not None:
        cfg.theta_max = grid[0] if cfg.theta_max is None else cfg.theta_max
        cfg.panels = grid[1] if cfg.panels is None else cfg.panels
        cfg.order = grid[2] if cfg.order is None else cfg.order
    if cfg.profiles is None:
        cfg.profiles = _PROFILE_DEFAULTS.get(command, 12)
    cfg.validate(command)
    return cfg


def _output_dir(cfg: RunConfig, flag_out: Optional[str]) -> Path:
    if flag_out:
        return Path(flag_out)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env)
    return Path(cfg.out_dir or ".")


def run(command: str, cfg: RunConfig, out: Path) -> dict:
    """Execute one command and write its report; returns the report."""
    if command not in _HANDLERS:
        raise ConfigError(f"unknown command {command!r}", "command")
    out.mkdir(parents=True, exist_ok=True)
    body = _HANDLERS[command](cfg, out)
    config_echo = {k: v for k, v in asdict(cfg).items() if k != "out_dir"}
    report = {
        "command": command,
        "config": config_echo,
        "tool": {"name": "modnuc", "version": __version__},
        **body,
        "status": _status(body["checks"]),
    }
    write_report(report, out / "report.json")
    return report


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    args = vars(ns)
    command = args.pop("command")
    flag_out = args.pop("out_dir", None)
    try:
        cfg = make_config(command, args)
        out = _output_dir(cfg, flag_out)
        report = run(command, cfg, out)
    except ConfigError as exc:
        print(f"modnuc {command}: usage error: {exc}", file=sys.stderr)
        return 2
    except ModnucError as exc:
        print(f"modnuc {command}: error: {exc}", file=sys.stderr)
        return 1
    failed = [c["name"] for c in report["checks"] if not c["pass"]]
    print(f"{command}: {report['status'].upper()} ({len(report['checks'])} checks)")
    for c in report["checks"]:
        mark = "ok " if c["pass"] else "FAIL"
        print(f"  [{mark}] {c['name']}: {c['measured']:.6g} {c['relation']} {c['bound']:.6g}")
    print(f"report: {out / 'report.json'}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
