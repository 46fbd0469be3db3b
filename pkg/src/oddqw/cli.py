"""Command-line driver.

Every command writes CSV files plus ``manifest.txt`` into ``--out``.  The
manifest lists every resolved parameter as ``key=value``; passing it back
with ``--config`` reruns the same computation.  Parameters resolve as
built-in defaults, then the config file, then explicit flags.

Exit codes: 0 success, 2 configuration error, 3 numerical check failed.
Files are staged in a temporary directory and only moved into ``--out``
when the command succeeds.
"""

from __future__ import annotations

import argparse
import math
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .adiabatic import ProtocolKind, ProtocolSpec, evolve_protocol, lambda_for_duration
from .counting import (
    count_states,
    dos_curve,
    dos_grid,
    fit_dos_arrays,
    gap_above_zero,
    sigma_squared,
)
from .disorder import BoundaryKind, DisorderSpec, draw_profile
from .ensemble import PER_SITE, compare_sources, correlation_curve, fit_power_law
from .errors import OddqwError
from .special import half_pi_table
from .transfer import build_zero_mode, lyapunov
from .walk import build_operator, eigenresidual

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SOURCES = ("exact", "adiabatic", "both")
COMMANDS = ("dos", "correlation", "adiabatic", "modes", "gap", "lyapunov")

# name -> (type, default per command)
_DEFAULTS: dict[str, dict[str, object]] = {
    "dos": dict(n=30000, delta=0.8, theta_mean=0.0, seed=7, realizations=1, boundary="-+", window="1,2",
                points=46),
    "correlation": dict(n=200, delta=1.0, theta_mean=0.0, seed=0, realizations=1000, source="exact",
                        protocol="exponential", T=400, **{"lambda": None}, window=None, convention=PER_SITE),
    "adiabatic": dict(n=18, delta=0.7, seed=0, realizations=50, protocol="exponential", T=90,
                      **{"lambda": None}, track_gap=True),
    "modes": dict(n=20, delta=0.5, theta_mean=0.3, seed=0, realizations=50),
    "gap": dict(n=18, delta=0.7, theta_mean=0.0, seed=0, realizations=50, boundary="-+"),
    "lyapunov": dict(n=1_000_000, delta=0.4, theta_mean=0.0, seed=0, omega="0.001"),
}

_TYPES = dict(
    n=int, delta=float, theta_mean=float, seed=int, realizations=int, boundary=str, window=str, points=int,
    source=str, protocol=str, T=int, convention=str, omega=str, threads=int, out=str,
    track_gap=lambda s: str(s).lower() in ("1", "true", "yes", "on"),
    **{"lambda": float},
)


class ConfigError(Exception):
    pass


class NumericalCheckError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oddqw", description="Disordered quantum-walk chain experiments.")
    p.add_argument("--version", action="version", version=f"oddqw {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        s = sub.add_parser(cmd)
        s.add_argument("--config", help="key=value file; a previous manifest works")
        s.add_argument("--out", help="output directory")
        s.add_argument("--threads", type=int)
        for key in _DEFAULTS[cmd]:
            flag = "--" + key.replace("_", "-")
            if key == "track_gap":
                s.add_argument("--no-track-gap", dest="track_gap", action="store_const", const=False)
                continue
            s.add_argument(flag, dest=key, type=str)
    return p


def read_config(path: str | Path) -> dict[str, str]:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def _resolve(args: argparse.Namespace) -> dict[str, object]:
    cmd = args.command
    params: dict[str, object] = dict(_DEFAULTS[cmd])
    params["threads"] = 1
    params["out"] = f"oddqw-{cmd}"
    if args.config:
        cfg = read_config(args.config)
        if cfg.pop("command", cmd) != cmd:
            raise ConfigError(f"config file is for a different command than {cmd!r}")
        cfg.pop("version", None)
        for k, v in cfg.items():
            if k not in params:
                raise ConfigError(f"unknown key {k!r} for {cmd}")
            params[k] = None if v == "None" else v
    for k in list(params):
        v = getattr(args, k, None)
        if v is not None:
            params[k] = v
    typed = {}
    for k, v in params.items():
        try:
            typed[k] = v if v is None or not isinstance(v, str) else _TYPES[k](v)
        except ValueError as exc:
            raise ConfigError(f"bad value for {k}: {v!r}") from exc
    if typed["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    return typed


def _pair(text: str, kind=float) -> tuple:
    parts = [kind(x) for x in str(text).split(",")]
    if len(parts) != 2 or parts[0] >= parts[1]:
        raise ConfigError(f"expected 'lo,hi' with lo < hi, got {text!r}")
    return tuple(parts)


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _protocol(params, spec: DisorderSpec) -> ProtocolSpec:
    try:
        kind = ProtocolKind(params["protocol"])
    except ValueError as exc:
        raise ConfigError(f"protocol must be constant_rate or exponential, got {params['protocol']!r}") from exc
    pinned = DisorderSpec(spec.n_bulk, 0.0, spec.delta_max, spec.seed, True)
    return ProtocolSpec(kind, params["T"], pinned, params["lambda"])


# ---------------------------------------------------------------- commands


def _run_dos(p, out: Path) -> None:
    spec = DisorderSpec(p["n"], p["theta_mean"], p["delta"], p["seed"])
    boundary = BoundaryKind.parse(p["boundary"])
    window = _pair(p["window"])
    omegas = dos_grid(0.25, 2.5, p["points"])
    per_real = []
    for k in range(p["realizations"]):
        prof = draw_profile(spec, boundary, k)
        total = count_states(prof, -math.pi, math.pi)
        if total != 2 * (spec.n_bulk + 1):
            raise NumericalCheckError(f"counted {total} levels, expected {2 * (spec.n_bulk + 1)}")
        per_real.append(dos_curve(prof, omegas))
    j = np.mean([[r.j for r in rs] for rs in per_real], axis=0)
    ni = np.mean([[r.N_I for r in rs] for rs in per_real], axis=0)
    phi = np.mean([[r.phi for r in rs] for rs in per_real], axis=0)
    _write_csv(out / "dos.csv", "omega,N_I,j,phi", zip(omegas, ni, j, phi))
    fit = fit_dos_arrays(omegas, ni, window)
    if not (math.isfinite(fit.slope) and math.isfinite(fit.intercept)):
        raise NumericalCheckError("integrated-DOS fit is not finite")
    s2 = sigma_squared(spec.theta_mean, spec.delta_max)
    _write_csv(
        out / "fit.csv",
        "slope,intercept,window_lo,window_hi,r2,sigma2,expected_intercept",
        [(fit.slope, fit.intercept, fit.window_lo, fit.window_hi, fit.r2, s2, math.log(s2 / 8) if s2 > 0 else math.nan)],
    )
    print(f"slope={fit.slope:.4f} intercept={fit.intercept:.4f} expected_intercept={math.log(s2 / 8) if s2 > 0 else float('nan'):.4f}")


def _write_curve(out: Path, tag: str, curve, fit) -> None:
    _write_csv(out / f"correlation_{tag}.csv", "sep,mean_corr,stderr", zip(curve.separations, curve.mean_corr, curve.stderr))
    (out / f"fit_{tag}.txt").write_text(fit.record() + "\n", encoding="utf-8")


def _check_curve(curve) -> None:
    if not (np.all(np.isfinite(curve.mean_corr)) and np.all(curve.mean_corr > 0)):
        raise NumericalCheckError("correlation curve has non-positive or non-finite entries")


def _run_correlation(p, out: Path) -> None:
    spec = DisorderSpec(p["n"], p["theta_mean"], p["delta"], p["seed"])
    window = None
    if p["window"] is not None:
        lo, hi = _pair(p["window"], int)
        window = (math.log(lo), math.log(hi))
    src = p["source"]
    if src not in ("exact", "adiabatic", "both"):
        raise ConfigError(f"unknown source {src!r}; choose from {SOURCES}")
    if src in ("exact", "both"):
        probe = draw_profile(spec)
        res = eigenresidual(build_operator(probe), build_zero_mode(probe), 0.0)
        if res > 1e-10:
            raise NumericalCheckError(f"zero-mode residual {res:.3g} exceeds 1e-10")
    if src == "both":
        cmp, ce, ca = compare_sources(spec, _protocol(p, spec), p["realizations"], window, p["convention"], p["threads"])
        for c in (ce, ca):
            _check_curve(c)
        _write_curve(out, "exact", ce, cmp.exact)
        _write_curve(out, "adiabatic", ca, cmp.adiabatic)
        (out / "comparison.txt").write_text(
            f"exact_slope={cmp.exact.slope!r} adiabatic_slope={cmp.adiabatic.slope!r} "
            f"difference={cmp.slope_difference!r} mean_fidelity={cmp.mean_fidelity!r}\n",
            encoding="utf-8",
        )
        print(f"exact={cmp.exact.slope:.4f} adiabatic={cmp.adiabatic.slope:.4f} fidelity={cmp.mean_fidelity:.4f}")
        return
    source = "exact" if src == "exact" else _protocol(p, spec)
    curve = correlation_curve(spec, p["realizations"], source, p["convention"], threads=p["threads"])
    _check_curve(curve)
    fit = fit_power_law(curve, window)
    _write_curve(out, src, curve, fit)
    print(f"slope={fit.slope:.4f} +/- {fit.slope_stderr:.4f}")


def _run_adiabatic(p, out: Path) -> None:
    spec = DisorderSpec(p["n"], 0.0, p["delta"], p["seed"], True)
    proto = _protocol(p, spec)
    (out / "traces").mkdir()
    rows = []
    for k in range(p["realizations"]):
        tr = evolve_protocol(proto, k, track_gap=p["track_gap"])
        if abs(tr.overlap[0] - 1.0) > 1e-12 or abs(tr.final_state.norm - 1.0) > 1e-10:
            raise NumericalCheckError(f"realization {k}: start overlap or norm check failed")
        _write_csv(out / "traces" / f"trace_{k:05d}.csv", "t,overlap,gap,theta_tilde",
                   zip(tr.t, tr.overlap, tr.gap, tr.theta_tilde))
        rows.append((k, tr.mean_delta, tr.final_overlap))
    _write_csv(out / "summary.csv", "realization,mean_delta,final_overlap", rows)
    fo = np.array([r[2] for r in rows])
    print(f"lambda={proto.lam!r} mean_final_overlap={fo.mean():.4f}")


def _run_modes(p, out: Path) -> None:
    n = p["n"]
    n_even, n_odd = (n, n + 1) if n % 2 == 0 else (n + 1, n)
    table = half_pi_table(n_even, n_odd, p["realizations"], p["delta"], p["theta_mean"], p["seed"])
    rows = [(row.boundary.label(), row.n_bulk_parity, "pi/2", "Y" if row.exists else "N") for row, _, _ in table]
    _write_csv(out / "modes.csv", "boundary,parity,omega,exists", rows)
    for r in rows:
        print(",".join(r))
    if not all(agree for _, agree, _ in table):
        raise NumericalCheckError("closed-form rule and residual test disagree")


def _run_gap(p, out: Path) -> None:
    spec = DisorderSpec(p["n"], p["theta_mean"], p["delta"], p["seed"])
    boundary = BoundaryKind.parse(p["boundary"])
    rows = []
    for k in range(p["realizations"]):
        prof = draw_profile(spec, boundary, k)
        rows.append((k, prof.mean_delta, gap_above_zero(prof)))
    _write_csv(out / "gap.csv", "realization,mean_delta,gap", rows)


def _run_lyapunov(p, out: Path) -> None:
    spec = DisorderSpec(1, p["theta_mean"], p["delta"], p["seed"])
    omegas = [float(x) for x in str(p["omega"]).split(",")]
    s2 = sigma_squared(spec.theta_mean, spec.delta_max)
    rows = []
    for w in omegas:
        val = lyapunov(spec, w, p["n"])
        if not math.isfinite(val):
            raise NumericalCheckError(f"non-finite growth rate at omega={w}")
        rows.append((w, val, -s2 / (4 * math.log(abs(w)))))
    _write_csv(out / "lyapunov.csv", "omega,inv_loc_length,predicted", rows)
    for r in rows:
        print(f"omega={r[0]:.3g} inv_loc_length={r[1]:.6g} predicted={r[2]:.6g}")


_RUNNERS = dict(
    dos=_run_dos, correlation=_run_correlation, adiabatic=_run_adiabatic, modes=_run_modes, gap=_run_gap,
    lyapunov=_run_lyapunov,
)


def _write_manifest(path: Path, cmd: str, params: dict) -> None:
    lines = [f"command={cmd}", f"version={__version__}"]
    lines += [f"{k}={_fmt(v)}" for k, v in sorted(params.items())]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def run(command: str, params: dict) -> int:
    """Execute ``command`` with resolved ``params``; return an exit code."""
    out = Path(params["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=".oddqw-", dir=out.parent))
    try:
        _RUNNERS[command](params, stage)
        _write_manifest(stage / "manifest.txt", command, params)
        out.mkdir(exist_ok=True)
        for item in stage.iterdir():
            dest = out / item.name
            if dest.is_dir():
                shutil.rmtree(dest)
            os.replace(item, dest)
        return EXIT_OK
    except NumericalCheckError as exc:
        print(f"numerical check failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, OddqwError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        shutil.rmtree(stage, ignore_errors=True)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        params = _resolve(args)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(args.command, params)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
