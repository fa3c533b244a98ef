"""Batch front end: INI-style configs in, CSV/JSON artifacts out.

Subcommands: spectrum, kernel, reconstruct, oversample, undersample, audit.
Every emitted number carries 17 significant digits, so repeated runs with the
same config and seed produce byte-identical files.

Exit codes: 0 all checks passed, 1 a bound check failed, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernel import kernel_columns, transform
from .numerics import NumericsError, Tolerances, derived_seed, make_grid
from .oversampling import OversamplingContext, robustness_report
from .sampling import KramerKernel, convergence_profile, take_samples
from .schrodinger import Potential, SolverError
from .spectrum import SpectrumError, compute_spectrum
from .undersampling import ExtensionField, aliasing_report

EXIT_OK = 0
EXIT_BOUND = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# deterministic emission: 17 significant digits everywhere
# --------------------------------------------------------------------------

def fmt_float(x: float) -> str:
    if isinstance(x, float) and (np.isnan(x) or np.isinf(x)):
        raise NumericsError("refusing to emit a non-finite number")
    return f"{x:.17g}"


def _json_render(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        items = []
        for k in sorted(obj):
            items.append(f'{pad}  "{k}": {_json_render(obj[k], indent + 1).lstrip()}')
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + "  " + _json_render(v, indent + 1).lstrip() for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(float(obj))
    if isinstance(obj, str):
        escaped = obj.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    raise TypeError(f"cannot serialize {type(obj)!r}")


def dump_json(path: Path, obj: dict) -> None:
    obj = dict(obj)
    obj["schema_version"] = SCHEMA_VERSION
    path.write_text(_json_render(obj) + "\n", encoding="utf-8")


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, (float, np.floating)):
                cells.append(fmt_float(float(cell)))
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            else:
                cells.append(str(cell))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass
class RunConfig:
    """Everything an experiment needs, parsed from one INI file."""

    potential: Potential
    a: float
    b: float
    gamma: float
    s: float
    n_max: int
    n_trunc: int
    z_re: tuple
    z_im: tuple
    deltas: tuple
    seed: int
    trials: int
    psi_trials: int
    out_dir: Path
    threads: int
    tolerances: Tolerances
    probe_z: float | None = None
    zmax_hint: float = field(default=1200.0)

    def z_grid(self) -> np.ndarray:
        re = np.linspace(*self.z_re[:2], int(self.z_re[2]))
        im = np.linspace(*self.z_im[:2], int(self.z_im[2]))
        return (re[:, None] + 1j * im[None, :]).ravel()

    def real_z_grid(self) -> np.ndarray:
        return np.linspace(*self.z_re[:2], int(self.z_re[2]))


def _get(cp, section, key, default=None, cast=float):
    if cp.has_option(section, key):
        raw = cp.get(section, key)
        try:
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc
    if default is None:
        raise ConfigError(f"missing required key [{section}] {key}")
    return default


def load_config(path: Path, seed_override=None, out_override=None,
                threads: int = 1, tol_overrides=()) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    if not cp.has_section("potential"):
        raise ConfigError("missing [potential] section")
    if cp.has_option("potential", "file"):
        text = Path(cp.get("potential", "file")).read_text(encoding="utf-8")
    elif cp.has_option("potential", "spec"):
        text = cp.get("potential", "spec").replace(";", "\n")
    else:
        raise ConfigError("[potential] needs `spec` or `file`")
    try:
        potential = Potential.parse(text)
    except ValueError as exc:
        raise ConfigError(f"bad potential: {exc}") from exc

    a = _get(cp, "domain", "a", default=np.pi / 2)
    b = _get(cp, "domain", "b", default=np.pi)
    gamma = _get(cp, "domain", "gamma", default=np.pi / 2)
    s = _get(cp, "domain", "s", default=b)
    n_max = _get(cp, "sampling", "n_max", default=60, cast=int)
    n_trunc = _get(cp, "sampling", "n_trunc", default=min(40, n_max), cast=int)

    z_re = (_get(cp, "zgrid", "re_min", default=0.0),
            _get(cp, "zgrid", "re_max", default=20.0),
            _get(cp, "zgrid", "re_points", default=25, cast=int))
    z_im = (_get(cp, "zgrid", "im_min", default=0.0),
            _get(cp, "zgrid", "im_max", default=0.0),
            _get(cp, "zgrid", "im_points", default=1, cast=int))

    deltas_raw = _get(cp, "noise", "deltas", default="0.1,0.01,0.001", cast=str)
    deltas = tuple(float(v) for v in str(deltas_raw).split(",") if v.strip())
    seed = _get(cp, "noise", "seed", default=1, cast=int)
    trials = _get(cp, "noise", "trials", default=3, cast=int)
    psi_trials = _get(cp, "noise", "psi_trials", default=20, cast=int)
    probe_z = None
    if cp.has_option("zgrid", "probe_z"):
        probe_z = float(cp.get("zgrid", "probe_z"))

    tol_map = {}
    if cp.has_section("tolerances"):
        tol_map = {k: float(v) for k, v in cp.items("tolerances")}
    for item in tol_overrides:
        if "=" not in item:
            raise ConfigError(f"bad --tol-override {item!r}, expected key=value")
        k, v = item.split("=", 1)
        tol_map[k.strip()] = float(v)
    try:
        tolerances = Tolerances(**tol_map) if tol_map else Tolerances()
    except (TypeError, NumericsError) as exc:
        raise ConfigError(f"bad tolerances: {exc}") from exc

    out_dir = Path(out_override) if out_override else \
        Path(_get(cp, "output", "dir", default="out", cast=str))
    if seed_override is not None:
        seed = int(seed_override)

    cfg = RunConfig(potential=potential, a=a, b=b, gamma=gamma, s=s,
                    n_max=n_max, n_trunc=n_trunc, z_re=z_re, z_im=z_im,
                    deltas=deltas, seed=seed, trials=trials,
                    psi_trials=psi_trials, out_dir=out_dir, threads=threads,
                    tolerances=tolerances, probe_z=probe_z)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if not 0.0 < cfg.a < cfg.b:
        raise ConfigError("need 0 < a < b")
    if cfg.b > cfg.potential.s_max + 1e-12:
        raise ConfigError("b exceeds the potential extent")
    if not 0.0 <= cfg.gamma < np.pi:
        raise ConfigError("gamma must lie in [0, pi)")
    if cfg.z_re[2] < 2 and cfg.z_im[2] < 2:
        raise ConfigError("z-grid needs at least 2 points in one direction")
    if cfg.n_max < 1 or cfg.n_trunc < 1:
        raise ConfigError("n_max and n_trunc must be positive")
    if cfg.n_trunc > cfg.n_max:
        raise ConfigError("n_trunc cannot exceed n_max")


# --------------------------------------------------------------------------
# smooth seeded profiles shared by reconstruct/oversample/undersample
# --------------------------------------------------------------------------

def seeded_profile(grid, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    c = rng.uniform(-1.0, 1.0, 5)
    x = grid.nodes
    return (c[0] + c[1] * x / 3.0 + c[2] * (x / 3.0) ** 2
            + c[3] * np.cos(1.3 * x) + c[4] * np.sin(2.1 * x + 0.5))


def _parallel_map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig) -> int:
    sd = compute_spectrum(cfg.potential, cfg.s, cfg.gamma, cfg.n_max,
                          tol=cfg.tolerances)
    write_csv(cfg.out_dir / "spectrum.csv",
              ["n", "lambda", "norming", "boundary_residual"], sd.rows())
    return EXIT_OK


def cmd_kernel(cfg: RunConfig) -> int:
    zs = cfg.z_grid()
    ws = zs
    k = kernel_columns(cfg.potential, cfg.s, zs, np.conj(ws))
    rows = []
    for i, z in enumerate(zs):
        for j, w in enumerate(ws):
            rows.append((z.real, z.imag, w.real, w.imag,
                         k[i, j].real, k[i, j].imag))
    write_csv(cfg.out_dir / "kernel.csv",
              ["z_re", "z_im", "w_re", "w_im", "k_re", "k_im"], rows)
    return EXIT_OK


def cmd_reconstruct(cfg: RunConfig) -> int:
    sd = compute_spectrum(cfg.potential, cfg.s, cfg.gamma, cfg.n_max,
                          tol=cfg.tolerances)
    grid = make_grid(0.0, cfg.s, oscillation=6.0,
                     breakpoints=cfg.potential.breakpoints())
    f = transform(cfg.potential, cfg.s, seeded_profile(grid, cfg.seed), grid)
    sf = take_samples(f, sd, cfg.n_trunc)
    zs = cfg.z_grid()
    provider = KramerKernel(cfg.potential, sd,
                            zmax_hint=float(np.max(np.abs(zs))) + 1.0)
    n_list = sorted({max(1, cfg.n_trunc // 4), max(1, cfg.n_trunc // 2),
                     cfg.n_trunc})
    prof = convergence_profile(sf, sd, provider, zs, n_list, f)
    write_csv(cfg.out_dir / "reconstruct.csv",
              ["z_re", "z_im", "f_exact_re", "f_exact_im",
               "f_N_re", "f_N_im", "abs_err"], prof.csv_rows())
    write_csv(cfg.out_dir / "reconstruct_profile.csv",
              ["N", "sup_error"], list(zip(prof.n_values, prof.sup_errors)))
    return EXIT_OK


def cmd_oversample(cfg: RunConfig) -> int:
    if 2 * cfg.n_trunc > cfg.n_max:
        raise ConfigError("oversample needs n_max >= 2 * n_trunc for the tail")
    sd = compute_spectrum(cfg.potential, cfg.b, cfg.gamma, cfg.n_max,
                          tol=cfg.tolerances)
    ctx = OversamplingContext(potential=cfg.potential, a=cfg.a, b=cfg.b,
                              spectral_b=sd, zmax_hint=cfg.zmax_hint)
    grid = make_grid(0.0, cfg.a, oscillation=6.0,
                     breakpoints=[x for x in cfg.potential.breakpoints()
                                  if x < cfg.a])
    f = transform(cfg.potential, cfg.a, seeded_profile(grid, cfg.seed), grid)
    rep = robustness_report(ctx, f, cfg.deltas, cfg.real_z_grid(),
                            cfg.n_trunc, seed=cfg.seed, trials=cfg.trials)
    dump_json(cfg.out_dir / "oversample.json", rep.to_json_dict())
    return EXIT_OK if rep.passed else EXIT_BOUND


def cmd_undersample(cfg: RunConfig) -> int:
    sd = compute_spectrum(cfg.potential, cfg.a, cfg.gamma, cfg.n_max,
                          tol=cfg.tolerances)
    ext = ExtensionField(potential=cfg.potential, a=cfg.a, b=cfg.b,
                         spectral_a=sd, n_cut=cfg.n_trunc,
                         zmax_hint=cfg.zmax_hint)
    ext._ensure_tables()
    zs = cfg.real_z_grid()

    def one(seed):
        vals = seeded_profile(ext.grid, seed)
        psi = transform(cfg.potential, cfg.b, vals, ext.grid)
        return aliasing_report(cfg.potential, cfg.a, cfg.b, sd, psi, zs,
                               cfg.n_trunc, field_=ext)
    seeds = [derived_seed(cfg.seed, 17, t) for t in range(cfg.psi_trials)]
    reports = _parallel_map(one, seeds, cfg.threads)
    worst = max(range(len(reports)), key=lambda i: reports[i].max_violation)
    merged = reports[worst].to_json_dict()
    merged["trials"] = len(reports)
    merged["max_interp_error"] = max(r.interp_error for r in reports)
    merged["pass"] = all(r.passed for r in reports)
    dump_json(cfg.out_dir / "undersample.json", merged)
    return EXIT_OK if merged["pass"] else EXIT_BOUND


def cmd_audit(cfg: RunConfig) -> int:
    from .diagnostics import audit_suite
    reports = audit_suite(cfg.potential, max(cfg.n_max, 60), a=cfg.a)
    dump_json(cfg.out_dir / "audit.json",
              {"reports": [r.to_json_dict() for r in reports]})
    rows = []
    for r in reports:
        rows.extend(r.csv_rows())
    write_csv(cfg.out_dir / "audit_sequences.csv",
              ["audit", "input", "measured", "reference"], rows)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_BOUND


COMMANDS = {
    "spectrum": cmd_spectrum,
    "kernel": cmd_kernel,
    "reconstruct": cmd_reconstruct,
    "oversample": cmd_oversample,
    "undersample": cmd_undersample,
    "audit": cmd_audit,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dbsample",
        description="Spectral sampling experiments for Schrodinger-type "
                    "spaces of entire functions")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", default=None, type=int)
    parser.add_argument("--threads", default=1, type=int)
    parser.add_argument("--tol-override", action="append", default=[],
                        metavar="KEY=VALUE")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, seed_override=args.seed,
                          out_override=args.out, threads=args.threads,
                          tol_overrides=args.tol_override)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, SpectrumError, NumericsError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
