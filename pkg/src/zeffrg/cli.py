"""Command-line front end.

    zeffrg zeff   --config run.yaml --out results/
    zeffrg flow   --config run.yaml --out results/
    zeffrg shell  --config run.yaml --out results/
    zeffrg oracle --config run.yaml --out results/
    zeffrg report --config run.yaml --out results/

Each subcommand runs the methods of its family that the config selects and
writes ``summary.<command>.json`` last. Exit codes: 0 success, 1 usage or
config error, 2 domain error during computation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .closedform import DERIVATIVE_EXPANSION, ERG_ONELOOP, z_eff_derivative_expansion, z_eff_erg_oneloop
from .config import ConfigError, RunConfig, parse_config
from .flows import (ERG, ERG_CONTINUUM, PTRG, DiscreteErgConfig, FlowConfig, FlowError,
                    QuadratureError, erg_discrete_sweep, integrate_flow,
                    oneloop_correction_by_quadrature)
from .model import DomainError, grid_points
from .oracle import OracleConfig, extract_wavefunction_correction
from .shell import ShellSpec, f_of_q

log = logging.getLogger(__name__)

ZEFF_COLUMNS = ("phi", "z_bare", "t1", "t2", "t3", "t4", "z_eff_zuk", "z_eff_erg", "diff")
QUADRATURE_COLUMNS = ("phi", "method", "delta_z")
FLOW_COLUMNS = ("k", "phi", "z_k")
SHELL_COLUMNS = ("q", "measure", "f_q", "sector_opp", "sector_same")
ORACLE_COLUMNS = ("omega", "c2", "c2_err", "fit_A", "fit_B", "resid")

COMMANDS = {
    "zeff": ("derivative-expansion", "erg-oneloop", "ptrg-quadrature", "erg-quadrature"),
    "flow": ("ptrg-flow", "erg-flow", "erg-discrete"),
    "shell": ("shell",),
    "oracle": ("oracle",),
}

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN = 0, 1, 2


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    return format(float(x) + 0.0, ".17g")  # + 0.0 folds -0.0 into 0.0


def write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(x) for x in row])


def _zeff_rows(cfg: RunConfig):
    for phi in grid_points(cfg.grid):
        de = z_eff_derivative_expansion(cfg.model, phi)
        erg = z_eff_erg_oneloop(cfg.model, phi)
        yield (phi, de.z_bare, de.t1, de.t2, de.t3, de.t4, de.z_eff, erg.z_eff,
               de.z_eff - erg.z_eff)


def _run_zeff(cfg, out, selected):
    files = []
    if DERIVATIVE_EXPANSION in selected or ERG_ONELOOP in selected:
        rows = list(_zeff_rows(cfg))
        if "csv" in cfg.formats:
            write_csv(out / "zeff.csv", ZEFF_COLUMNS, rows)
            files.append("zeff.csv")
    quad = [(m, PTRG if m == "ptrg-quadrature" else ERG)
            for m in ("ptrg-quadrature", "erg-quadrature") if m in selected]
    if quad:
        rows = []
        for phi in grid_points(cfg.grid):
            for name, which in quad:
                dz = oneloop_correction_by_quadrature(cfg.model, phi, which,
                                                      rel_tol=cfg.quadrature.rel_tol)
                rows.append((phi, name, dz))
        if "csv" in cfg.formats:
            write_csv(out / "quadrature.csv", QUADRATURE_COLUMNS, rows)
            files.append("quadrature.csv")
    return files, {}


def _run_flow(cfg, out, selected):
    files, extra = [], {}
    f = cfg.flow
    for name, which in (("ptrg-flow", PTRG), ("erg-flow", ERG_CONTINUUM)):
        if name not in selected:
            continue
        fc = FlowConfig(f.k_uv, f.k_ir, f.mode, f.rel_tol, f.abs_tol, f.max_steps, f.snapshots)
        traj = integrate_flow(cfg.model, cfg.grid, fc, which)
        extra[name] = {"steps": traj.n_steps}
        fname = f"flow_{name.split('-')[0]}.csv"
        if "csv" in cfg.formats:
            write_csv(out / fname, FLOW_COLUMNS, traj.triples())
            files.append(fname)
    if "erg-discrete" in selected:
        d = cfg.discrete
        dc = DiscreteErgConfig(d.n_modes, d.epsilon, d.include_constant_term, d.mode_frequency)
        z = erg_discrete_sweep(cfg.model, d.phi0, dc)
        omega, _ = dc.frequencies()
        extra["erg-discrete"] = {"phi0": d.phi0, "delta_z": float(z[0] - z[-1])}
        if "csv" in cfg.formats:
            # k of the row is the frequency of the next mode to be removed (0 once all are gone)
            idx = list(range(d.n_modes, -1, -d.stride))
            if idx[-1] != 0:
                idx.append(0)
            rows = [((omega[n - 1] if n > 0 else 0.0), d.phi0, z[n]) for n in idx]
            write_csv(out / "flow_discrete.csv", FLOW_COLUMNS, rows)
            files.append("flow_discrete.csv")
    return files, extra


def _run_shell(cfg, out, selected):
    s = cfg.shell
    shell = ShellSpec(s.k_c, s.dk)
    rows = []
    for q in s.q:
        r = f_of_q(cfg.model, s.phi0, shell, q)
        rows.append((q, r.measure, r.value, r.sector_opp, r.sector_same))
    files = []
    if "csv" in cfg.formats:
        write_csv(out / "shell.csv", SHELL_COLUMNS, rows)
        files.append("shell.csv")
    return files, {}


def _run_oracle(cfg, out, selected):
    o = cfg.oracle
    oc = OracleConfig.for_model(cfg.model, o.phi0, n_modes=o.n_modes, window=o.window,
                                epsilons=o.epsilons, slices=o.slices, fit_degree=o.fit_degree)
    res = extract_wavefunction_correction(cfg.model, o.phi0, oc)
    rows = [(w, c, e, res.A, res.B, r)
            for w, c, e, r in zip(res.omegas, res.c2, res.c2_err, res.residuals)]
    files = []
    if "csv" in cfg.formats:
        write_csv(out / "oracle.csv", ORACLE_COLUMNS, rows)
        files.append("oracle.csv")
    de = z_eff_derivative_expansion(cfg.model, o.phi0)
    erg = z_eff_erg_oneloop(cfg.model, o.phi0)
    extra = {"phi0": o.phi0, "T": oc.T, "B": res.B, "B_stderr": res.b_stderr, "A": res.A,
             "target_derivative_expansion": de.correction, "target_erg": erg.correction,
             "matched": _closer(res.B, de.correction, erg.correction),
             "convergence": [[M, b] for M, b in res.convergence], "flags": res.flags}
    return files, {"oracle": extra}


def _closer(b, de, erg):
    return DERIVATIVE_EXPANSION if abs(b - de) < abs(b - erg) else ERG_ONELOOP


_RUNNERS = {"zeff": _run_zeff, "flow": _run_flow, "shell": _run_shell, "oracle": _run_oracle}


def run(cfg: RunConfig, command: str | None = None, out_dir: str | Path | None = None) -> int:
    """Run the selected methods (all families, or one ``command``); return the exit code."""
    out = Path(out_dir if out_dir is not None else cfg.output_directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        log.error("output directory %s is not writable: %s", out, exc)
        return EXIT_USAGE

    families = [command] if command else list(COMMANDS)
    status: dict[str, dict] = {}
    files: list[str] = []
    details: dict = {}
    code = EXIT_OK
    for fam in families:
        selected = [m for m in cfg.methods if m in COMMANDS[fam]]
        if not selected:
            continue
        try:
            f, extra = _RUNNERS[fam](cfg, out, selected)
        except (DomainError, FlowError, QuadratureError) as exc:
            code = EXIT_DOMAIN
            phi0 = getattr(exc, "phi0", None)
            for m in selected:
                status[m] = {"status": "domain-error", "message": str(exc), "phi0": phi0}
            log.error("%s: %s", fam, exc)
            continue
        files += f
        details.update(extra)
        for m in selected:
            status[m] = {"status": "ok"}
    if command and not status:
        log.error("config selects no methods for '%s'", command)
        return EXIT_USAGE

    summary = {
        "tool": "zeffrg",
        "version": __version__,
        "config_hash": cfg.digest(),
        "command": command or "all",
        "methods": status,
        "tolerances": cfg.tolerances(),
        "files": files,
        "details": details,
    }
    if "json" in cfg.formats:
        name = f"summary.{command}.json" if command else "summary.json"
        (out / name).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return code


def report(cfg: RunConfig, out_dir: str | Path | None = None) -> int:
    """Merge prior outputs in ``out_dir`` into report.md."""
    out = Path(out_dir if out_dir is not None else cfg.output_directory)
    if not out.is_dir():
        log.error("no output directory %s", out)
        return EXIT_USAGE
    lines = ["# One-loop Z_eff comparison", "", f"config hash: `{cfg.digest()}`", ""]
    zeff = out / "zeff.csv"
    if zeff.exists():
        with zeff.open() as fh:
            rows = list(csv.DictReader(fh))
        lines += ["## Closed forms", "",
                  "| phi | Z | Z_eff (derivative expansion) | Z_eff (ERG) | difference |",
                  "|---|---|---|---|---|"]
        for r in rows:
            lines.append(f"| {float(r['phi']):.6g} | {float(r['z_bare']):.6g} | "
                         f"{float(r['z_eff_zuk']):.10g} | {float(r['z_eff_erg']):.10g} | "
                         f"{float(r['diff']):.6g} |")
        lines.append("")
    for name in ("flow", "zeff", "shell"):
        p = out / f"summary.{name}.json"
        if p.exists():
            s = json.loads(p.read_text())
            lines += [f"## {name}", ""]
            for meth, st in sorted(s["methods"].items()):
                lines.append(f"- {meth}: {st['status']}")
            for meth, info in sorted(s.get("details", {}).items()):
                lines.append(f"- {meth}: {json.dumps(info, sort_keys=True)}")
            lines.append("")
    p = out / "summary.oracle.json"
    if p.exists():
        o = json.loads(p.read_text())["details"].get("oracle")
        if o:
            lines += ["## Lattice oracle", "",
                      f"- phi0 = {o['phi0']}",
                      f"- fitted Delta Z = {o['B']:.6g} +/- {o['B_stderr']:.2g}",
                      f"- derivative-expansion prediction = {o['target_derivative_expansion']:.6g}",
                      f"- ERG prediction = {o['target_erg']:.6g}",
                      f"- closer to: {o['matched']}", ""]
    (out / "report.md").write_text("\n".join(lines))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="zeffrg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*COMMANDS, "report"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=None)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(args.config.read_text())
    except (OSError, ConfigError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    if args.command == "report":
        return report(cfg, args.out)
    return run(cfg, args.command, args.out)


if __name__ == "__main__":
    sys.exit(main())
