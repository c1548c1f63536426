"""Command-line front end.

Subcommands drive the library at experiment scale: flows and their invariant
reports, inverse-spectral roundtrips, chart coordinates, QR iterations,
triangular iterations, billiard orbits, and the acceptance self-check.
Every run is reproducible from its seed (PCG64); with --no-timestamp the
output files are byte-identical across repeated runs.

Exit codes: 0 all requested checks passed, 1 a check failed, 2 bad
configuration, 3 numerical failure during the run.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance, atlas, billiard, qrdyn
from .errors import (
    ChartDomainError,
    ConsistencyError,
    ConvergenceError,
    DeflationSignal,
    DegeneracyError,
    DegenerateSpectrumError,
    DegenerateTrajectoryError,
    FactorizationError,
    IntegrationError,
    LeadingMinorError,
    NotEnoughDataError,
    ReconstructionError,
    SingularPencilError,
    SpectralDomainError,
)
from .flowfunc import FlowFunction
from .flows import (
    SymTridiagonal,
    integrate,
    partial_traces,
    symes_solve,
    trajectory_csv_text,
    trajectory_json_text,
)
from .invspec import SpectralData, moser_evolve, norming_constants, reconstruct
from .oracles import jacobi_eigenvalues
from .sampling import random_jacobi_entries, random_spd, random_unit_positive, rng

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

#: Demo spectra shipped as named presets.
SPECTRUM_PRESETS = {
    "2-4-8": [2.0, 4.0, 8.0],
    "1-2-3-4": [1.0, 2.0, 3.0, 4.0],
    "7-5-4": [4.0, 5.0, 7.0],
}

_NUMERICAL_ERRORS = (
    IntegrationError,
    DegenerateTrajectoryError,
    ConvergenceError,
    SingularPencilError,
    ReconstructionError,
    ConsistencyError,
    LeadingMinorError,
    FactorizationError,
    DegeneracyError,
    DeflationSignal,
    ChartDomainError,
    NotEnoughDataError,
)


class ConfigError(ValueError):
    pass


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _parse_spectrum(text: str) -> np.ndarray:
    if text in SPECTRUM_PRESETS:
        return np.array(SPECTRUM_PRESETS[text])
    return np.array(sorted(_parse_floats(text)))


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"bad config line {raw!r} (expected KEY=VALUE)")
        key, value = line.split("=", 1)
        values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


class Options:
    """Merged view of command-line flags and an optional config file.

    Explicit flags win; the config file fills unset options; hard defaults
    apply last.
    """

    def __init__(self, args: argparse.Namespace):
        self._args = vars(args)
        self._file = _load_config_file(self._args.get("config"))

    def get(self, key: str, default, cast=None):
        value = self._args.get(key)
        if value is None:
            raw = self._file.get(key)
            if raw is None:
                return default
            value = raw
        if cast is not None and isinstance(value, str):
            try:
                return cast(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
        return value

    def flag(self, key: str) -> bool:
        if self._args.get(key):
            return True
        raw = self._file.get(key, "")
        return str(raw).strip().lower() in ("1", "true", "yes", "on")


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    return path


def _report_text(command: str, config: dict, checks: list[dict], timestamp: bool) -> str:
    doc = {
        "command": command,
        "config": config,
        "checks": checks,
        "passed": all(c["passed"] for c in checks) if checks else True,
    }
    if timestamp:
        doc["generated"] = _dt.datetime.now().isoformat()
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _check(name: str, passed: bool, value, threshold) -> dict:
    return {
        "name": name,
        "passed": bool(passed),
        "value": float(value) if isinstance(value, (int, float, np.floating)) else value,
        "threshold": threshold,
    }


def _build_jacobi(opt: Options, default_n: int = 4):
    """Initial Jacobi matrix from --spectrum (plus seeded norming constants)
    or from seeded random entries."""
    gen = rng(opt.get("seed", 1, int))
    spectrum = opt.get("spectrum", None)
    n = opt.get("n", default_n, int)
    if opt.flag("diag"):
        lam = _parse_spectrum(spectrum) if spectrum else np.sort(gen.uniform(-2, 2, n))
        return SymTridiagonal(lam, np.zeros(len(lam) - 1)), gen
    if spectrum:
        lam = _parse_spectrum(spectrum)
        try:
            sd = SpectralData(lam, random_unit_positive(gen, len(lam)))
        except (DegenerateSpectrumError, ValueError) as exc:
            raise ConfigError(f"bad spectrum: {exc}") from exc
        return reconstruct(sd), gen
    a, b = random_jacobi_entries(gen, n)
    return SymTridiagonal(a, b), gen


def cmd_flow(args) -> int:
    opt = Options(args)
    out_dir = Path(opt.get("out", ".", str))
    timestamp = not opt.flag("no_timestamp")
    fmt = opt.get("format", "csv", str)
    t_end = opt.get("t", 10.0, float)
    samples = opt.get("samples", 33, int)
    tol = opt.get("tol", 1e-10, float)
    drift_tol = opt.get("drift_tol", 1e-8, float)

    j0, _ = _build_jacobi(opt)
    f = FlowFunction.parse(opt.get("f", "identity", str))
    dense0 = j0.to_dense()
    lam0 = np.linalg.eigvalsh(dense0)
    try:
        f(lam0)
    except SpectralDomainError as exc:
        raise ConfigError(f"flow function undefined on the spectrum: {exc}") from exc

    traj = integrate(dense0, f, t_end, tol=tol, samples=samples)
    if fmt == "json":
        _write(out_dir, "trajectory.json", trajectory_json_text(traj, timestamp))
    else:
        _write(out_dir, "trajectory.csv", trajectory_csv_text(traj, timestamp))

    drift = max(float(np.abs(np.linalg.eigvalsh(s) - lam0).max()) for s in traj.states)
    checks = [_check("eigenvalue-drift", drift <= drift_tol, drift, drift_tol)]

    n = j0.n
    mask = np.abs(np.subtract.outer(np.arange(n), np.arange(n))) > 1
    off_band = max(float(np.abs(s[mask]).max()) if n > 2 else 0.0 for s in traj.states)
    checks.append(_check("tridiagonal-preserved", off_band <= 1e-9, off_band, 1e-9))

    if f.kind == "identity":
        worst_step = 0.0
        order = np.argsort(traj.times)
        prev = partial_traces(traj.states[order[0]])
        for idx in order[1:]:
            cur = partial_traces(traj.states[idx])
            worst_step = min(worst_step, float((cur - prev).min()))
            prev = cur
        checks.append(
            _check("partial-traces-monotone", worst_step >= -1e-10, worst_step, -1e-10)
        )
        if j0.is_jacobi:
            pos = min(float(np.diag(s, 1).min()) for s in traj.states)
            checks.append(_check("offdiagonal-positive", pos > 0.0, pos, 0.0))

    final_off = float(np.abs(traj.states[-1][mask]).max()) if n > 2 else abs(
        traj.states[-1][0, 1] if n == 2 else 0.0
    )
    config = {
        "n": n,
        "f": f.label,
        "t": t_end,
        "samples": samples,
        "tol": tol,
        "seed": opt.get("seed", 1, int),
        "final_offdiagonal_max": final_off,
        "integrator_steps": traj.meta.steps,
    }
    report = _report_text("flow", config, checks, timestamp)
    _write(out_dir, "flow_report.json", report)
    ok = all(c["passed"] for c in checks)
    print(f"flow: {'ok' if ok else 'CHECK FAILED'} (drift {drift:.2e})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_invspec(args) -> int:
    opt = Options(args)
    out_dir = Path(opt.get("out", ".", str))
    timestamp = not opt.flag("no_timestamp")
    t = opt.get("t", 2.0, float)
    j0, gen = _build_jacobi(opt)
    if not j0.is_jacobi:
        raise ConfigError("inverse-spectral commands need a Jacobi matrix")

    sd = norming_constants(j0)
    _write(out_dir, "spectral.json", sd.to_json() + "\n")

    back = reconstruct(sd)
    rt = max(float(np.abs(back.a - j0.a).max()), float(np.abs(back.b - j0.b).max()))
    evolved = reconstruct(moser_evolve(sd, FlowFunction.identity(), t))
    direct = symes_solve(j0.to_dense(), FlowFunction.identity(), t)
    dev = float(np.abs(evolved.to_dense() - direct).max())
    checks = [
        _check("roundtrip", rt <= 1e-10, rt, 1e-10),
        _check("evolution-vs-factorization", dev <= 1e-6, dev, 1e-6),
    ]
    config = {"n": j0.n, "t": t, "seed": opt.get("seed", 1, int)}
    _write(out_dir, "invspec_report.json", _report_text("invspec", config, checks, timestamp))
    ok = all(c["passed"] for c in checks)
    print(f"invspec: {'ok' if ok else 'CHECK FAILED'} (roundtrip {rt:.2e}, evolve {dev:.2e})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_chart(args) -> int:
    opt = Options(args)
    out_dir = Path(opt.get("out", ".", str))
    timestamp = not opt.flag("no_timestamp")
    t = opt.get("t", 1.0, float)
    j0, gen = _build_jacobi(opt)
    pi_text = opt.get("pi", None)
    if pi_text:
        pi = tuple(int(v) for v in str(pi_text).split(","))
    else:
        pi = tuple(range(j0.n))
    f = FlowFunction.parse(opt.get("f", "identity", str))

    chart = atlas.to_chart(j0, pi)
    _write(out_dir, "chart.json", chart.to_json() + "\n")
    back = atlas.from_chart(chart)
    rt = float(np.abs(back.to_dense() - j0.to_dense()).max())
    moved = atlas.from_chart(atlas.chart_flow(chart, f, t))
    direct = symes_solve(j0.to_dense(), f, t)
    dev = float(np.abs(moved.to_dense() - direct).max())
    checks = [
        _check("chart-roundtrip", rt <= 1e-9, rt, 1e-9),
        _check("chart-flow-vs-factorization", dev <= 1e-6, dev, 1e-6),
    ]
    config = {"n": j0.n, "pi": list(pi), "f": f.label, "t": t, "seed": opt.get("seed", 1, int)}
    _write(out_dir, "chart_report.json", _report_text("chart", config, checks, timestamp))
    ok = all(c["passed"] for c in checks)
    print(f"chart: {'ok' if ok else 'CHECK FAILED'} (roundtrip {rt:.2e}, flow {dev:.2e})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _named_matrix(name: str) -> SymTridiagonal:
    if name == "zero-diag-2":
        return SymTridiagonal([0.0, 0.0], [1.0])
    raise ConfigError(f"unknown named matrix {name!r}")


def cmd_qr(args) -> int:
    opt = Options(args)
    out_dir = Path(opt.get("out", ".", str))
    timestamp = not opt.flag("no_timestamp")
    fmt = opt.get("format", "csv", str)
    check_kind = opt.get("check", None)
    seed = opt.get("seed", 1, int)
    n = opt.get("n", 6, int)
    gen = rng(seed)

    if check_kind:
        tol_map = {"interpolation": 1e-6, "power": 1e-8, "toda-exp": 1e-7}
        if check_kind not in tol_map:
            raise ConfigError(f"unknown --check {check_kind!r}")
        if check_kind == "interpolation":
            dev = qrdyn.interpolation_check(random_spd(gen, n, lo=0.5, hi=2.0)).max_deviation
        elif check_kind == "power":
            dev = qrdyn.power_qr_identity_check(random_spd(gen, n, lo=0.5, hi=2.0), 4).deviation
        else:
            lam = np.linspace(-1.0, 1.0, n)
            j = reconstruct(SpectralData(lam, random_unit_positive(gen, n)))
            dev = qrdyn.toda_exp_qr_check(j, 3).deviation
        threshold = tol_map[check_kind]
        checks = [_check(check_kind, dev <= threshold, dev, threshold)]
        config = {"n": n, "seed": seed, "check": check_kind}
        _write(out_dir, "qr_report.json", _report_text("qr", config, checks, timestamp))
        ok = dev <= threshold
        print(f"qr {check_kind}: {'ok' if ok else 'CHECK FAILED'} (deviation {dev:.2e})")
        return EXIT_OK if ok else EXIT_CHECK_FAILED

    matrix_name = opt.get("matrix", None)
    if matrix_name:
        t0 = _named_matrix(str(matrix_name))
    else:
        a, b = random_jacobi_entries(gen, n)
        t0 = SymTridiagonal(a, b)
    strategy = qrdyn.ShiftStrategy.parse(opt.get("strategy", "wilkinson", str))
    deflation_tol = opt.get("deflation_tol", 1e-12, float)
    max_steps = opt.get("max_steps", None, int)

    values, trace = qrdyn.qr_iterate(t0, strategy, deflation_tol=deflation_tol, max_steps=max_steps)
    _write(out_dir, "trace.csv", qrdyn.trace_csv_text(trace, timestamp))
    if fmt == "json":
        _write(out_dir, "trace.json", qrdyn.trace_json_text(trace, snapshots=True, timestamp=timestamp))

    checks = [
        _check(
            "converged",
            trace.converged,
            "periodic/fixed-point" if trace.fixed_point else str(trace.converged),
            True,
        )
    ]
    worst = float("nan")
    if trace.converged:
        worst = float(np.abs(values - jacobi_eigenvalues(t0.to_dense())).max())
        checks.append(_check("eigenvalues-vs-oracle", worst <= 1e-9, worst, 1e-9))
    config = {
        "n": t0.n,
        "seed": seed,
        "strategy": strategy.kind,
        "matrix": matrix_name or "random-jacobi",
        "steps": len(trace.steps),
        "deflations": len(trace.deflations),
        "eigenvalues": [float(v) for v in values],
    }
    _write(out_dir, "qr_report.json", _report_text("qr", config, checks, timestamp))
    ok = all(c["passed"] for c in checks)
    label = "ok" if ok else ("periodic/fixed-point" if trace.fixed_point else "CHECK FAILED")
    print(f"qr: {label} ({len(trace.steps)} steps)")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_cholesky(args) -> int:
    opt = Options(args)
    out_dir = Path(opt.get("out", ".", str))
    timestamp = not opt.flag("no_timestamp")
    n = opt.get("n", 4, int)
    steps = opt.get("steps", 30, int)
    gen = rng(opt.get("seed", 1, int))
    m = random_spd(gen, n, lo=0.5, hi=3.0)
    lam0 = np.linalg.eigvalsh(m)

    lines = []
    if timestamp:
        lines.append(f"# generated: {_dt.datetime.now().isoformat()}")
    lines.append("step, offdiag_norm, min_pivot")
    current = m.copy()
    for k in range(steps + 1):
        off = float(np.linalg.norm(current - np.diag(np.diag(current))))
        piv = float(np.diag(current).min())
        lines.append(f"{k}, {off:.17g}, {piv:.17g}")
        if k < steps:
            current = qrdyn.cholesky_step(current)
    _write(out_dir, "cholesky.csv", "\n".join(lines) + "\n")

    drift = float(np.abs(np.linalg.eigvalsh(current) - lam0).max())
    final_off = float(np.linalg.norm(current - np.diag(np.diag(current))))
    checks = [
        _check("isospectral", drift <= 1e-10, drift, 1e-10),
        _check("offdiagonal-decayed", final_off < 1.0, final_off, 1.0),
    ]
    config = {"n": n, "steps": steps, "seed": opt.get("seed", 1, int)}
    _write(out_dir, "cholesky_report.json", _report_text("cholesky", config, checks, timestamp))
    ok = all(c["passed"] for c in checks)
    print(f"cholesky: {'ok' if ok else 'CHECK FAILED'} (drift {drift:.2e}, off {final_off:.2e})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_billiard(args) -> int:
    opt = Options(args)
    out_dir = Path(opt.get("out", ".", str))
    timestamp = not opt.flag("no_timestamp")
    bounces = opt.get("bounces", 100, int)
    seed = opt.get("seed", 1, int)
    gen = rng(seed)
    semiaxes = opt.get("semiaxes", None)
    if semiaxes:
        e = billiard.Ellipsoid(np.diag(_parse_floats(str(semiaxes))))
    else:
        e = billiard.Ellipsoid(random_spd(gen, opt.get("n", 2, int), lo=0.6, hi=2.2))

    x0_text, y0_text = opt.get("x0", None), opt.get("y0", None)
    if x0_text and y0_text:
        x0 = np.array(_parse_floats(str(x0_text)))
        y0 = np.array(_parse_floats(str(y0_text)))
        y0 = y0 / np.linalg.norm(y0)
        st = billiard.BilliardState(x0, y0)
        resid = abs(float(x0 @ e.inv_c2 @ x0) - 1.0)
        if resid > 1e-8:
            raise ConfigError(f"x0 is off the boundary by {resid:.2e}")
    else:
        st = acceptance._random_billiard_state(e, gen)

    geo = billiard.orbit(e, st, bounces, billiard.geometric_step)
    _write(out_dir, "orbit.csv", billiard.orbit_csv_text(geo, timestamp))
    checks = []
    if opt.get("check", None) == "mv":
        mv = billiard.orbit(e, st, bounces, billiard.mv_step)
        dev = max(
            max(float(np.abs(a.x - b.x).max()), float(np.abs(a.y - b.y).max()))
            for a, b in zip(geo, mv)
        )
        checks.append(_check("mv-vs-geometric", dev <= 1e-8, dev, 1e-8))
    ref = billiard.det_samples(e, geo[0])
    det_scale = max(1.0, float(np.abs(ref).max()))
    det_drift = max(
        float(np.abs(billiard.det_samples(e, s) - ref).max()) / det_scale for s in geo
    )
    checks.append(_check("det-invariant", det_drift <= 1e-8, det_drift, 1e-8))
    config = {"n": e.n, "bounces": bounces, "seed": seed}
    _write(out_dir, "billiard_report.json", _report_text("billiard", config, checks, timestamp))
    ok = all(c["passed"] for c in checks)
    print(f"billiard: {'ok' if ok else 'CHECK FAILED'} ({bounces} bounces)")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_selfcheck(args) -> int:
    opt = Options(args)
    scale = opt.get("scale", None, float)
    if scale is None:
        scale = 0.12 if opt.flag("fast") else 1.0
    only_text = opt.get("only", None)
    only = [s.strip() for s in str(only_text).split(",")] if only_text else None
    results = acceptance.run_acceptance(scale=scale, only=only)
    for res in results:
        print(res.line())
    failed = [r for r in results if not r.passed]
    print(f"selfcheck: {len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_OK if not failed else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="todalab",
        description="Isospectral matrix flows: Toda-family Lax dynamics, inverse "
        "spectral variables, bidiagonal charts, QR iterations, and the ellipsoid "
        "billiard.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="RNG seed (PCG64); default 1")
    common.add_argument("--out", help="output directory (default: current)")
    common.add_argument("--format", choices=["csv", "json"], help="file format")
    common.add_argument("--no-timestamp", action="store_true", dest="no_timestamp",
                        help="suppress timestamp lines for byte-identical reruns")
    common.add_argument("--tol", type=float, help="integrator local tolerance")
    common.add_argument("--config", help="KEY=VALUE config file (flags win)")

    p = sub.add_parser("flow", parents=[common], help="integrate an isospectral flow")
    p.add_argument("--n", type=int)
    p.add_argument("--spectrum", help="comma list or preset (2-4-8, 1-2-3-4, 7-5-4)")
    p.add_argument("--f", help="identity | log | poly:c0,c1,... | shiftlog:s")
    p.add_argument("--t", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--diag", action="store_true", help="diagonal (equilibrium) start")
    p.add_argument("--drift-tol", type=float, dest="drift_tol")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("invspec", parents=[common], help="inverse spectral roundtrips")
    p.add_argument("--n", type=int)
    p.add_argument("--spectrum")
    p.add_argument("--t", type=float)
    p.set_defaults(func=cmd_invspec, diag=False)

    p = sub.add_parser("chart", parents=[common], help="bidiagonal chart coordinates")
    p.add_argument("--n", type=int)
    p.add_argument("--spectrum")
    p.add_argument("--pi", help="comma permutation, 0-based")
    p.add_argument("--f")
    p.add_argument("--t", type=float)
    p.set_defaults(func=cmd_chart, diag=False)

    p = sub.add_parser("qr", parents=[common], help="shifted QR iteration and checks")
    p.add_argument("--n", type=int)
    p.add_argument("--strategy", help="none | rayleigh | wilkinson | fixed:S")
    p.add_argument("--matrix", help="named matrix (zero-diag-2)")
    p.add_argument("--check", help="interpolation | power | toda-exp")
    p.add_argument("--deflation-tol", type=float, dest="deflation_tol")
    p.add_argument("--max-steps", type=int, dest="max_steps")
    p.set_defaults(func=cmd_qr)

    p = sub.add_parser("cholesky", parents=[common], help="triangular iteration")
    p.add_argument("--n", type=int)
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_cholesky)

    p = sub.add_parser("billiard", parents=[common], help="billiard orbits")
    p.add_argument("--n", type=int)
    p.add_argument("--semiaxes", help="comma list: diagonal ellipsoid semi-axes")
    p.add_argument("--bounces", type=int)
    p.add_argument("--x0", help="initial boundary point (comma list)")
    p.add_argument("--y0", help="initial direction (comma list, normalized)")
    p.add_argument("--check", help="mv: verify the refactorization map")
    p.set_defaults(func=cmd_billiard)

    p = sub.add_parser("selfcheck", parents=[common], help="run the acceptance suite")
    p.add_argument("--fast", action="store_true", help="reduced ensembles")
    p.add_argument("--scale", type=float, help="ensemble scale factor")
    p.add_argument("--only", help="comma list of check ids (1..11)")
    p.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateSpectrumError, SpectralDomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
