"""Command-line experiment harness.

Every subcommand writes one CSV (or JSON report) plus a ``<name>.manifest.json``
sidecar holding the resolved configuration, package version, per-cell wall
clock and solver diagnostics.

Options can also come from a JSON file passed with ``--config``; the file is a
flat object whose keys are option names with dashes replaced by underscores
(``{"n0": 3, "variant": "xx", "ta_list": [5, 10]}``). Flags given on the
command line win over the file.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure, 4 I/O
failure.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import metadata
from pathlib import Path

import click
import numpy as np

from . import dynamics, effective, gadgets, spectral
from .pauli import assemble
from .toy import (CP, DELTA_W, JZZ, ToyInstance, Variant, build_anneal, feasible_partition,
                  transverse_driver)

log = logging.getLogger("xxgadget")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4
LARGE_QUBITS = 18


class NumericFailure(RuntimeError):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def fmt(x) -> str:
    """Lossless decimal rendering used in every CSV cell."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


class ListType(click.ParamType):
    """Comma-separated values on the command line, or a JSON list in a config file."""

    def __init__(self, item: type):
        self.item = item
        self.name = f"{item.__name__}-list"

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            items = list(value)
        else:
            items = [v for v in str(value).split(",") if v.strip()]
        try:
            out = [self.item(v.strip() if isinstance(v, str) else v) for v in items]
        except ValueError as exc:
            self.fail(f"{value!r}: {exc}", param, ctx)
        if not out:
            self.fail("empty list", param, ctx)
        return out


INT_LIST = ListType(int)
FLOAT_LIST = ListType(float)
VARIANTS = click.Choice([v.value for v in Variant])


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise click.FileError(path, hint=str(exc))
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise click.BadParameter(f"{path}: {exc}", param_hint="--config")
    if not isinstance(cfg, dict):
        raise click.BadParameter(f"{path}: top level must be an object", param_hint="--config")
    return cfg


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="JSON file with option defaults (flags override it).")
@click.option("-v", "--verbose", count=True, help="Repeat for more logging.")
@click.pass_context
def main(ctx, config_path, verbose):
    """Gadget emulation of -XX couplings: spectra, dynamics and checks."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if config_path is None:
        return
    cfg = _load_config(config_path)
    sub = ctx.invoked_subcommand
    exp = cfg.pop("experiment", sub)
    if exp != sub:
        raise click.UsageError(f"config is for experiment {exp!r}, not {sub!r}")
    cmd = main.get_command(ctx, sub) if sub else None
    if cmd is not None:
        known = {p.name for p in cmd.params}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise click.UsageError(f"unknown config keys for {sub}: {', '.join(unknown)}")
        ctx.default_map = {sub: cfg}


def instance_options(f):
    f = click.option("--delta-w", type=float, default=DELTA_W, show_default=True)(f)
    f = click.option("--jzz", type=float, default=JZZ, show_default=True)(f)
    f = click.option("--cp", type=float, default=CP, show_default=True, help="Penalty strength C_p.")(f)
    return f


def run_options(f):
    f = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".",
                     show_default=True, help="Output directory.")(f)
    f = click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True,
                     help="Worker threads over sweep cells.")(f)
    f = click.option("--keep-going", is_flag=True, help="Record failed cells and exit 0.")(f)
    f = click.option("--allow-large", is_flag=True,
                     help=f"Permit registers above {LARGE_QUBITS} qubits.")(f)
    return f


def _positive(name, *values):
    for v in values:
        if not (v > 0 and math.isfinite(v)):
            raise click.BadParameter(f"must be positive and finite, got {v}", param_hint=name)


def _instance(n0, variant, cp, jzz, delta_w, allow_large) -> ToyInstance:
    try:
        inst = ToyInstance(n0, jzz=jzz, delta_w=delta_w, cp=cp, variant=variant)
    except ValueError as exc:
        raise click.BadParameter(str(exc))
    sched, _ = build_anneal(inst)
    if sched.n_qubits > LARGE_QUBITS and not allow_large:
        raise click.UsageError(
            f"{inst.variant.value} n0={n0} needs {sched.n_qubits} qubits; pass --allow-large")
    return inst


def run_cells(cells, fn, threads: int, keep_going: bool):
    """Evaluate ``fn`` on every cell, preserving cell order in the result.

    Returns ``[(cell, value, seconds, error)]``. A failing cell raises
    :class:`NumericFailure` unless ``keep_going`` is set.
    """
    def one(cell):
        t0 = time.perf_counter()
        try:
            return cell, fn(cell), time.perf_counter() - t0, None
        except (ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
            log.error("cell %s failed: %s", cell, exc)
            return cell, None, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}"

    if threads == 1:
        results = [one(c) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, cells))
    failed = [r for r in results if r[3] is not None]
    if failed and not keep_going:
        raise NumericFailure(f"{len(failed)} cell(s) failed; first: {failed[0][3]}")
    return results


def _write_outputs(out_dir, name, header, rows, manifest):
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / name
        if header is None:
            path.write_text(rows)
        else:
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for row in rows:
                    w.writerow([fmt(x) for x in row])
        side = out / f"{Path(name).stem}.manifest.json"
        manifest = {"output": name, "version": _version(), **manifest}
        side.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n")
    except OSError as exc:
        click.echo(f"error: cannot write outputs: {exc}", err=True)
        sys.exit(EXIT_IO)
    click.echo(str(path))
    return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(type(o).__name__)


def _cells_manifest(results, describe):
    return [
        {"cell": describe(c), "seconds": round(sec, 6), "error": err,
         **({"diagnostics": v[1]} if v is not None and isinstance(v, tuple) and len(v) > 1 else {})}
        for c, v, sec, err in results
    ]


def _guard(fn):
    """Translate numerical failures into exit code 3."""
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NumericFailure as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@main.command("gap-curve")
@click.option("--variant", type=VARIANTS, default="tf", show_default=True)
@click.option("--n0", type=click.IntRange(min=2), default=2, show_default=True)
@click.option("--grid", type=click.IntRange(min=2), default=201, show_default=True,
              help="Uniform points on [0, 1].")
@click.option("--s-max", type=click.FloatRange(0, 1), default=1.0, show_default=True)
@click.option("--k", type=click.IntRange(min=3), default=3, show_default=True)
@instance_options
@run_options
@_guard
def gap_curve_cmd(variant, n0, grid, s_max, k, cp, jzz, delta_w, out_dir, threads, keep_going, allow_large):
    """Low-lying spectrum and gap along the anneal (gap_curve.csv)."""
    _positive("--cp", cp)
    inst = _instance(n0, variant, cp, jzz, delta_w, allow_large)
    sched, _ = build_anneal(inst)
    s_values = np.linspace(0.0, s_max, grid)
    chunks = [tuple(c) for c in np.array_split(s_values, threads) if len(c)]

    def cell(chunk):
        c = spectral.gap_curve(sched, chunk, k=k)
        return list(c.rows())

    results = run_cells(chunks, cell, threads, keep_going)
    rows = sorted((r for _, v, _, _ in results if v is not None for r in v), key=lambda r: r[0])
    rows = [(r[0], r[1], r[2], r[3], r[-1]) for r in rows]
    manifest = {
        "experiment": "gap-curve",
        "config": dict(variant=variant, n0=n0, grid=grid, s_max=s_max, k=k, cp=cp, jzz=jzz,
                       delta_w=delta_w, threads=threads, n_qubits=sched.n_qubits),
        "cells": _cells_manifest(results, lambda c: {"s_first": c[0], "s_last": c[-1], "points": len(c)}),
    }
    _write_outputs(out_dir, "gap_curve.csv", ["s", "e0", "e1", "e2", "gap"], rows, manifest)


@main.command("gap-scaling")
@click.option("--n0-list", type=INT_LIST, default="2,3,4,5", show_default=True)
@click.option("--variants", type=ListType(str), default="tf,xx,onehot", show_default=True)
@click.option("--grid", type=click.IntRange(min=11), default=101, show_default=True,
              help="Coarse grid size before refinement.")
@click.option("--scale-by-cp", is_flag=True, help="Report C_p * delta_min for tf and xx.")
@instance_options
@run_options
@_guard
def gap_scaling_cmd(n0_list, variants, grid, scale_by_cp, cp, jzz, delta_w, out_dir, threads,
                    keep_going, allow_large):
    """Minimum gap versus n0 for each variant (gap_scaling.csv)."""
    _positive("--cp", cp)
    for v in variants:
        if v not in VARIANTS.choices:
            raise click.BadParameter(f"unknown variant {v!r}", param_hint="--variants")
    if min(n0_list) < 2:
        raise click.BadParameter("n0 must be >= 2", param_hint="--n0-list")
    cells = [(n0, v) for n0 in sorted(set(n0_list)) for v in variants]
    for n0, v in cells:
        _instance(n0, v, cp, jzz, delta_w, allow_large)

    def cell(c):
        rec = spectral.gap_scaling_sweep([c[0]], [c[1]], cp, scale_by_cp, grid, jzz, delta_w)[0]
        if rec.error:
            raise RuntimeError(rec.error)
        return rec, rec.diagnostics

    results = run_cells(cells, cell, threads, keep_going)
    rows = []
    for (n0, v), val, _, err in results:
        if val is None:
            rows.append((n0, v, cp, math.nan, math.nan, math.nan))
        else:
            r = val[0]
            rows.append((r.n0, r.variant, r.cp, r.delta_min, r.s_star, r.scaled))
    manifest = {
        "experiment": "gap-scaling",
        "config": dict(n0_list=n0_list, variants=variants, grid=grid, scale_by_cp=scale_by_cp, cp=cp,
                       jzz=jzz, delta_w=delta_w, threads=threads),
        "cells": _cells_manifest(results, lambda c: {"n0": c[0], "variant": c[1]}),
    }
    _write_outputs(out_dir, "gap_scaling.csv", ["n0", "variant", "cp", "delta_min", "s_star", "scaled"],
                   rows, manifest)


@main.command("cp-error")
@click.option("--n0", type=click.IntRange(min=2), default=3, show_default=True)
@click.option("--cp-list", type=FLOAT_LIST, default="25,50,100,200,400", show_default=True)
@click.option("--grid", type=click.IntRange(min=11), default=101, show_default=True)
@click.option("--jzz", type=float, default=JZZ, show_default=True)
@click.option("--delta-w", type=float, default=DELTA_W, show_default=True)
@run_options
@_guard
def cp_error_cmd(n0, cp_list, grid, jzz, delta_w, out_dir, threads, keep_going, allow_large):
    """Normalized one-hot vs -XX minimum-gap error over C_p (cp_error.csv)."""
    _positive("--cp-list", *cp_list)
    _instance(n0, "onehot", cp_list[0], jzz, delta_w, allow_large)
    sched_xx, _ = build_anneal(ToyInstance(n0, jzz=jzz, delta_w=delta_w, variant=Variant.XX))
    t0 = time.perf_counter()
    try:
        dxx = spectral.min_gap(sched_xx, grid).delta_min
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        raise NumericFailure(f"xx reference failed: {exc}")
    t_xx = time.perf_counter() - t0

    def cell(cp):
        sched, _ = build_anneal(ToyInstance(n0, jzz=jzz, delta_w=delta_w, cp=cp, variant=Variant.ONE_HOT))
        r = spectral.min_gap(sched, grid)
        return 2.0 * cp * r.delta_min, {"s_star": r.s_star, "refinement_iterations": r.refinement_iterations}

    results = run_cells(sorted(set(cp_list)), cell, threads, keep_going)
    rows = []
    for cp, val, _, _ in results:
        doh = math.nan if val is None else val[0]
        rows.append((cp, doh, dxx, abs(dxx - doh) / dxx))
    manifest = {
        "experiment": "cp-error",
        "config": dict(n0=n0, cp_list=cp_list, grid=grid, jzz=jzz, delta_w=delta_w, threads=threads),
        "xx_reference": {"delta_min": dxx, "seconds": round(t_xx, 6)},
        "cells": _cells_manifest(results, lambda c: {"cp": c}),
    }
    _write_outputs(out_dir, "cp_error.csv", ["cp", "delta_min_oh_scaled", "delta_min_xx", "normalized_error"],
                   rows, manifest)


def pgs_point(n0: int, variant: str, ta: float, cp: float = CP, jzz: float = JZZ,
              delta_w: float = DELTA_W, tol: float = dynamics.DEFAULT_TOL) -> dynamics.EvolutionResult:
    """One anneal at ``t_a``; gadget variants run for ``2 C_p t_a``."""
    inst = ToyInstance(n0, jzz=jzz, delta_w=delta_w, cp=cp, variant=variant)
    sched, _ = build_anneal(inst)
    if inst.variant.is_gadget:
        spec = dynamics.EvolutionSpec(sched, ta, 2.0 * cp, tol, feasible_partition(inst))
    else:
        spec = dynamics.EvolutionSpec(sched, ta, 1.0, tol)
    return dynamics.evolve(spec)


@main.command("pgs")
@click.option("--n0", type=click.IntRange(min=2), default=3, show_default=True)
@click.option("--variants", type=ListType(str), default="xx,onehot", show_default=True)
@click.option("--ta-list", type=FLOAT_LIST, default="5,6,8,10,20,30,50,70", show_default=True)
@click.option("--tol", type=float, default=dynamics.DEFAULT_TOL, show_default=True,
              help="Local error tolerance of the integrator.")
@instance_options
@run_options
@_guard
def pgs_cmd(n0, variants, ta_list, tol, cp, jzz, delta_w, out_dir, threads, keep_going, allow_large):
    """Ground-state probability versus anneal time (pgs.csv)."""
    _positive("--cp", cp)
    _positive("--ta-list", *ta_list)
    if not 0 < tol <= 1e-4:
        raise click.BadParameter("must lie in (0, 1e-4]", param_hint="--tol")
    for v in variants:
        if v not in VARIANTS.choices:
            raise click.BadParameter(f"unknown variant {v!r}", param_hint="--variants")
        _instance(n0, v, cp, jzz, delta_w, allow_large)
    cells = [(v, ta) for v in variants for ta in sorted(set(ta_list))]

    def cell(c):
        r = pgs_point(n0, c[0], c[1], cp, jzz, delta_w, tol)
        return r, {"steps": r.steps, "rejected": r.rejected,
                   "max_local_error": r.diagnostics.get("max_local_error")}

    results = run_cells(cells, cell, threads, keep_going)
    rows = []
    for (v, ta), val, _, _ in results:
        if val is None:
            rows.append((ta, v, n0, cp, math.nan, math.nan, math.nan))
        else:
            r = val[0]
            rows.append((ta, v, n0, cp, r.p_gs, r.leakage, r.norm_drift))
    manifest = {
        "experiment": "pgs",
        "config": dict(n0=n0, variants=variants, ta_list=ta_list, tol=tol, cp=cp, jzz=jzz,
                       delta_w=delta_w, threads=threads),
        "cells": _cells_manifest(results, lambda c: {"variant": c[0], "ta": c[1]}),
    }
    _write_outputs(out_dir, "pgs.csv", ["ta", "variant", "n0", "cp", "pgs", "leakage", "norm_drift"],
                   rows, manifest)


def effective_deviation(gadget: str, rng: np.random.Generator, with_diagonal: bool = True) -> float:
    """Max entrywise gap between the Schur complement and the closed form for one random gadget."""
    d = rng.uniform(-1, 1, 4)
    hj = rng.uniform(-1, 1, 3) if with_diagonal else np.zeros(3)
    cp = float(rng.uniform(10, 1000))
    if gadget == "three-body":
        spec = gadgets.ThreeBodySpec(d[0], d[1], d[2], cp, *hj)
        H = assemble(gadgets.three_body_physical(spec))
        part = effective.partition_parity(3, (1, 2, 3), even=True)
        got = effective.schur_effective(H, part, E=-cp).matrix
        want = assemble(gadgets.three_body_effective_closed(spec)).toarray()
    elif gadget == "one-hot":
        spec = gadgets.OneHotSpec(*d, cp, *hj)
        H = assemble(gadgets.one_hot_physical(spec))
        part = effective.truncate_B(effective.partition_hamming(4, 1),
                                    lambda i: bin(i).count("1") in (0, 2))
        got = effective.schur_effective(H, part, E=0.0).matrix
        want = assemble(gadgets.one_hot_effective_closed(spec)).toarray()
    elif gadget == "chain":
        spec = gadgets.ChainSpec(d[0], d[1], cp)
        H = assemble(gadgets.chain_physical(spec))
        part = effective.partition_parity(2, (1, 2), even=True)
        got = effective.schur_effective(H, part, E=-2 * cp).matrix
        want = assemble(gadgets.chain_effective_closed(spec)).toarray()
    else:
        raise ValueError(f"unknown gadget {gadget!r}")
    diff = effective.strip_identity(got) - effective.strip_identity(want)
    return float(np.max(np.abs(diff)))


@main.command("effective-check")
@click.option("--gadget", type=click.Choice(["three-body", "one-hot", "chain"]), default="one-hot",
              show_default=True)
@click.option("--trials", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--diagonal/--no-diagonal", "with_diagonal", default=True, show_default=True,
              help="Draw the logical fields and coupling at random too (zero otherwise).")
@click.option("--tol", type=float, default=1e-12, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".", show_default=True)
@_guard
def effective_check_cmd(gadget, trials, seed, with_diagonal, tol, out_dir):
    """Closed-form effective Hamiltonian versus the Schur complement (effective_check.json)."""
    import warnings

    rng = np.random.default_rng(seed)
    devs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", gadgets.PenaltyDominanceWarning)
        for _ in range(trials):
            try:
                devs.append(effective_deviation(gadget, rng, with_diagonal))
            except effective.SingularBlockError as exc:
                raise NumericFailure(str(exc))
    worst = max(devs)
    report = {"gadget": gadget, "trials": trials, "seed": seed, "with_diagonal": with_diagonal,
              "tol": tol, "max_deviation": worst, "passed": worst < tol}
    click.echo(f"{gadget}: max deviation {worst:.3e} over {trials} trials "
               f"({'pass' if worst < tol else 'FAIL'} at {tol:g})")
    _write_outputs(out_dir, "effective_check.json", None, json.dumps(report, indent=2) + "\n",
                   {"experiment": "effective-check", "config": report,
                    "deviations": [float(x) for x in devs]})


@main.command("prep")
@click.option("--z", default="0001", show_default=True, help="Feasible one-hot bitstring, qubit 1 first.")
@click.option("--prep-time", type=click.FloatRange(min=0), default=200.0, show_default=True)
@click.option("--cp", type=float, default=CP, show_default=True)
@click.option("--tol", type=float, default=dynamics.DEFAULT_TOL, show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".", show_default=True)
@_guard
def prep_cmd(z, prep_time, cp, tol, out_dir):
    """Prepare the constrained-driver ground state of one gadget (prep.json)."""
    _positive("--cp", cp)
    try:
        p = dynamics.PrepSpec(z, prep_time, gadgets.one_hot_penalty(cp))
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--z")
    t0 = time.perf_counter()
    try:
        psi = dynamics.prepare_initial(p, tol)
    except dynamics.IntegrationError as exc:
        raise NumericFailure(str(exc))
    fid = prep_fidelity(psi, cp)
    report = {"z": z, "prep_time": prep_time, "cp": cp, "tol": tol, "fidelity": fid,
              "norm_drift": abs(float(np.linalg.norm(psi)) - 1.0)}
    click.echo(f"fidelity {fid:.10f}")
    _write_outputs(out_dir, "prep.json", None, json.dumps(report, indent=2) + "\n",
                   {"experiment": "prep", "config": report,
                    "seconds": round(time.perf_counter() - t0, 6)})


def prep_fidelity(psi: np.ndarray, cp: float) -> float:
    """Overlap of ``psi`` with the ground space of ``-sum X + penalty`` on one gadget."""
    target = gadgets.one_hot_penalty(cp) + transverse_driver(4)
    _, g = dynamics.ground_space(assemble(target).toarray())
    return float(np.sum(np.abs(g.conj().T @ psi) ** 2))


@main.command("dump-hamiltonian")
@click.option("--variant", type=VARIANTS, default="onehot", show_default=True)
@click.option("--n0", type=click.IntRange(min=2), default=2, show_default=True)
@instance_options
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default="-",
              show_default=True, help="File to write, or - for stdout.")
def dump_hamiltonian_cmd(variant, n0, cp, jzz, delta_w, out_path):
    """Every schedule group of an instance in the text Pauli format."""
    _positive("--cp", cp)
    inst = ToyInstance(n0, jzz=jzz, delta_w=delta_w, cp=cp, variant=variant)
    text = dump_text(inst)
    if out_path == "-":
        click.echo(text, nl=False)
        return
    try:
        Path(out_path).write_text(text)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)


def dump_text(inst: ToyInstance) -> str:
    sched, lay = build_anneal(inst)
    lines = [
        f"# variant={inst.variant.value} n0={inst.n0} cp={inst.cp!r} jzz={inst.jzz!r} "
        f"delta_w={inst.delta_w!r} n_qubits={sched.n_qubits}",
        "# qubits: " + " ".join(f"{i + 1}={r}" for i, r in enumerate(lay.roles)),
    ]
    for kind, obs in sched.groups:
        lines.append(f"[group {kind.value}]")
        lines.append(obs.to_text().rstrip("\n"))
    return "\n".join(lines) + "\n"


if __name__ == "__main__":
    main()
