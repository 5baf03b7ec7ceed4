"""Command-line experiment runner.

Usage::

    winterbottom-lab SUBCOMMAND --config cfg.json [--out DIR] [--seed N]
                     [--samples N] [--quiet]

Exit status is 0 on success, 1 on usage or configuration errors and 2 when a
run finds an invariant or acceptance violation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import render
from .anisotropy import AnisotropySpec, validate
from .errors import RegimeError, WinterbottomLabError
from .geometry import HalfPlanePolygon, capillary_energy, random_polygon
from .minimize import (
    MinimizeConfig,
    minimize_fixed_volume,
    minimize_ratio,
    thread_cap,
    verify_inequality_sample,
    witness_sequence,
)
from .winterbottom import (
    Regime,
    build_psi,
    energy_identity_check,
    horizontal_shift_vector,
    regime,
    winterbottom,
    wulff,
    wulff_translation_check,
)

SUBCOMMANDS = ("validate", "wulff", "winterbottom", "energy", "identity", "minimize", "verify", "witness", "regime")
CONFIG_KEYS = {
    "anisotropy", "anisotropy_id", "beta", "beta_grid", "boundary_samples", "eta_policy", "polygon",
    "minimize", "verify", "witness", "identity", "validate", "output_dir", "formats",
}
NEEDS_BETA = {"winterbottom", "energy", "identity", "minimize", "verify", "witness", "regime"}
MAX_GRID = 201


class ConfigError(Exception):
    pass


class ViolationFound(Exception):
    pass


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    if "anisotropy" not in cfg:
        raise ConfigError(f"{path}: missing 'anisotropy'")
    return cfg


def betas_of(cfg: dict, command: str) -> list[float]:
    has_b, has_g = "beta" in cfg, "beta_grid" in cfg
    if has_b and has_g:
        raise ConfigError("give exactly one of 'beta' and 'beta_grid'")
    if not (has_b or has_g):
        if command in NEEDS_BETA:
            raise ConfigError(f"'{command}' needs 'beta' or 'beta_grid'")
        return []
    if has_b:
        return [float(cfg["beta"])]
    g = cfg["beta_grid"]
    try:
        lo, hi, count = float(g["min"]), float(g["max"]), int(g["count"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("beta_grid needs numeric 'min', 'max' and 'count'") from None
    if not 1 <= count <= MAX_GRID:
        raise ConfigError(f"beta_grid count must be in [1, {MAX_GRID}]")
    return np.linspace(lo, hi, count).tolist() if count > 1 else [lo]


# -- per-beta jobs ---------------------------------------------------------------


def _job_winterbottom(ctx, beta):
    W = winterbottom(ctx["phi"], beta, ctx["N"])
    figure = render.svg([(W.wulff.vertices - np.array([0.0, beta]), "wulff"), (W.polygon.vertices, "winterbottom")])
    result = {
        "beta": beta,
        "regime": Regime.WINTERBOTTOM.value,
        "area": W.polygon.area,
        "energy": W.energy.to_dict(),
        "discretization_bound": W.discretization_bound,
        "vertex_count": len(W.polygon),
    }
    return result, {"winterbottom": figure}, False


def _job_energy(ctx, beta):
    if "polygon" not in ctx["cfg"]:
        raise ConfigError("'energy' needs a 'polygon' block")
    P = HalfPlanePolygon.from_dict(ctx["cfg"]["polygon"])
    e = capillary_energy(ctx["phi"], beta, P)
    return {"beta": beta, "energy": e.to_dict()}, {"candidate": render.svg([(P.vertices, "candidate")])}, False


def _job_identity(ctx, beta):
    phi, policy = ctx["phi"], ctx["eta_policy"]
    psi = build_psi(phi, beta, policy)
    block = ctx["cfg"].get("identity", {})
    samples = ctx["samples"] if ctx["samples"] is not None else int(block.get("samples", 100))
    seed = ctx["seed"] if ctx["seed"] is not None else int(block.get("seed", 0))
    polys = [random_polygon(seed * 100003 + k, 16, 1.0, contact=(k % 2 == 0)) for k in range(samples)]
    if "polygon" in ctx["cfg"]:
        polys.append(HalfPlanePolygon.from_dict(ctx["cfg"]["polygon"]))
    worst, worst_rel = 0.0, 0.0
    for P in polys:
        r = energy_identity_check(phi, beta, P, psi=psi)
        scale = 1.0 + abs(capillary_energy(phi, beta, P).total)
        worst = max(worst, r)
        worst_rel = max(worst_rel, r / scale)
    tr = wulff_translation_check(phi, beta, policy, ctx["N"])
    _, horiz = horizontal_shift_vector(phi, beta, policy)
    result = {
        "beta": beta,
        **psi.constants(),
        "shift_vector": psi.shift_vector.tolist(),
        "residuals": {"energy_identity": worst, "wulff_translation": tr.residual, "horizontality": horiz},
        "discretization_bound": tr.discretization_bound,
    }
    tr_tol = 1e-9 if tr.exact else 5.0 * tr.discretization_bound
    bad = worst_rel > 1e-9 or horiz > 1e-12 or tr.residual > tr_tol
    return result, {}, bad


def _job_minimize(ctx, beta):
    block = dict(ctx["cfg"].get("minimize", {}))
    volume = block.pop("volume", None)
    if ctx["seed"] is not None:
        block["seed"] = ctx["seed"]
    block.setdefault("boundary_samples", ctx["N"])
    try:
        mcfg = MinimizeConfig.from_dict(block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"minimize block: {exc}") from None
    t0 = time.perf_counter()
    if mcfg.mode == "fixed_volume":
        if volume is None:
            raise ConfigError("fixed_volume mode needs minimize.volume")
        rep = minimize_fixed_volume(ctx["phi"], beta, float(volume), mcfg)
    else:
        rep = minimize_ratio(ctx["phi"], beta, mcfg)
    seconds = time.perf_counter() - t0
    W = winterbottom(ctx["phi"], beta, ctx["N"])
    figure = render.svg([(W.polygon.vertices, "winterbottom"), (rep.best_polygon.vertices, "candidate")])
    row = (
        ctx["anisotropy_id"], beta, mcfg.mode, mcfg.vertex_count, mcfg.restarts,
        rep.best_ratio, rep.winterbottom_ratio, rep.relative_gap, rep.hausdorff_mod_translation, seconds,
    )
    result = {"beta": beta, **rep.to_dict()}
    return result, {"minimize": figure, "_csv": row, "_seconds": seconds}, rep.relative_gap < -1e-7


def _job_verify(ctx, beta):
    block = ctx["cfg"].get("verify", {})
    samples = ctx["samples"] if ctx["samples"] is not None else int(block.get("samples", 200))
    seed = ctx["seed"] if ctx["seed"] is not None else int(block.get("seed", 0))
    v, worst = verify_inequality_sample(ctx["phi"], beta, samples, seed)
    return {"beta": beta, "samples": samples, "violations": v, "worst_margin": worst}, {}, v > 0


def _job_witness(ctx, beta):
    k_max = int(ctx["cfg"].get("witness", {}).get("k_max", 10))
    seq = witness_sequence(ctx["phi"], beta, k_max)
    r = regime(ctx["phi"], beta).value
    return {"beta": beta, "regime": r, "sequence": [[h, e] for h, e in seq]}, {}, False


def _job_regime(ctx, beta):
    return {"beta": beta, "regime": regime(ctx["phi"], beta).value}, {}, False


JOBS = {
    "winterbottom": _job_winterbottom,
    "energy": _job_energy,
    "identity": _job_identity,
    "minimize": _job_minimize,
    "verify": _job_verify,
    "witness": _job_witness,
    "regime": _job_regime,
}


# -- driver -----------------------------------------------------------------------


def run(command: str, cfg: dict, out_dir: Path, seed=None, samples=None, quiet=False) -> int:
    """Execute one subcommand; returns the exit status."""
    phi = AnisotropySpec.from_dict(cfg["anisotropy"])
    formats = set(cfg.get("formats", ["svg", "csv", "json"]))
    if not formats <= {"svg", "csv", "json"}:
        raise ConfigError(f"unknown formats {sorted(formats - {'svg', 'csv', 'json'})}")
    N = int(cfg.get("boundary_samples", 2048))
    betas = betas_of(cfg, command)
    ctx = {
        "phi": phi, "cfg": cfg, "N": N, "seed": seed, "samples": samples,
        "eta_policy": cfg.get("eta_policy", "barycenter"),
        "anisotropy_id": cfg.get("anisotropy_id", phi.kind),
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    log = [f"started {time.strftime('%Y-%m-%dT%H:%M:%S')} command={command}"]
    t0 = time.perf_counter()
    files: dict[str, str] = {}
    bad = False

    if command == "validate":
        block = cfg.get("validate", {})
        rep = validate(
            phi,
            samples if samples is not None else int(block.get("samples", 4096)),
            seed if seed is not None else int(block.get("seed", 0)),
        )
        results = [rep.to_dict()]
    elif command == "wulff":
        W = wulff(phi, N)
        results = [{"area": W.area, "discretization_bound": W.discretization_bound, "vertex_count": len(W.vertices)}]
        files["wulff.svg"] = render.svg([(W.vertices, "wulff")], substrate=False)
    else:
        if command in ("winterbottom", "identity", "minimize", "verify"):
            for b in betas:
                if regime(phi, b) is not Regime.WINTERBOTTOM:
                    raise RegimeError(
                        f"'{command}' needs the winterbottom regime; beta={b} is {regime(phi, b).value}",
                        regime=regime(phi, b).value, required="winterbottom",
                    )
        job = JOBS[command]
        workers = min(thread_cap(), max(len(betas), 1))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(lambda b: job(ctx, b), betas))
        else:
            outcomes = [job(ctx, b) for b in betas]
        results = []
        csv_rows = []
        for k, (res, extra, violated) in enumerate(outcomes):
            suffix = f"_{k:03d}" if len(betas) > 1 else ""
            results.append(res)
            bad = bad or violated
            for name, payload in extra.items():
                if name == "_csv":
                    csv_rows.append(payload)
                elif name == "_seconds":
                    log.append(f"beta={render.fmt(betas[k])} seconds={payload:.3f}")
                else:
                    files[f"{name}{suffix}.svg"] = payload
        if csv_rows:
            files["results.csv"] = render.csv_text(csv_rows)
        if command == "regime" and not quiet:
            for res in results:
                print(res["regime"])

    report = {"command": command, "anisotropy": phi.to_dict(), "results": results}
    files["report.json"] = render.dumps(report)
    for name, text in sorted(files.items()):
        ext = name.rsplit(".", 1)[-1]
        if ext in formats:
            (out_dir / name).write_text(text)
    log.append(f"finished seconds={time.perf_counter() - t0:.3f} status={2 if bad else 0}")
    (out_dir / "run.log").write_text("\n".join(log) + "\n")
    if not quiet and command != "regime":
        if len(results) <= 3 and command != "minimize":
            print(render.dumps(report), end="")
        else:
            print(f"{command}: {len(results)} result(s) written to {out_dir}")
    return 2 if bad else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="winterbottom-lab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    p.add_argument("--seed", type=int, default=None, help="override every seed in the config")
    p.add_argument("--samples", type=int, default=None, help="override sample counts")
    p.add_argument("--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        cfg = load_config(args.config)
        out = Path(args.out or cfg.get("output_dir", "out"))
        return run(args.command, cfg, out, args.seed, args.samples, args.quiet)
    except RegimeError as exc:
        print(f"error: {exc} (required regime: {exc.required})", file=sys.stderr)
        return 1
    except (ConfigError, WinterbottomLabError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
