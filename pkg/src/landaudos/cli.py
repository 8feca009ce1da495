"""Command line front end: ``landaudos {bounds,simulate,gamma,report}``.

Each subcommand reads a configuration file (see :mod:`landaudos.config`)
and writes its results into the output directory.  Exit statuses: 0 on
success, 2 for degenerate or invalid input, 3 for numerical
nonconvergence, 4 for I/O problems.  On failure an ``error.json`` record
is written next to the other outputs when the directory is writable.
"""

import argparse
import csv
import datetime
import json
import math
import os
import struct
import sys

import numpy as np

from . import __version__, kernels
from .bands import band_statistics, gamma2_closed_form, gamma2_variational, raise_if_degenerate, sigma2
from .bounds import (
    ReferenceDensity,
    bound_gaussian_cmu,
    bound_gaussian_gamma,
    bound_gaussian_sigma,
    bound_wegner_flat,
)
from .config import dumps_config, load_config, run_id
from .errors import (
    ConfigError,
    LandauDosError,
    MissingInputError,
    UnsupportedModelError,
    UnsupportedOperationError,
)
from .landau import LandauBasis
from .mc import MatrixEnsembleSpec, accumulate_dos, effective_model, expected_second_moment
from .specfun import g_tail_integral

__all__ = ["main", "cmd_bounds", "cmd_simulate", "cmd_gamma", "cmd_report", "EIGENVALUE_MAGIC"]

EIGENVALUE_MAGIC = b"LDOSEIG\0"
BOUND_COLUMNS = ("wegner_flat", "gaussian_cmu", "gaussian_sigma", "gaussian_gamma")


def _fmt(x):
    return format(float(x), ".17g")


def _write_csv(path, rid, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(f"# run_id: {rid}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def _read_csv(path):
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# run_id:"):
            raise MissingInputError(f"{path} lacks a run id line")
        rid = first.split(":", 1)[1].strip()
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows).reshape(-1, len(header))
    return rid, {name: data[:, i] for i, name in enumerate(header)}


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _references(model, B, ell):
    """Reference densities applicable to the configuration."""
    if model.kind != "delta_limit":
        return {}
    sigma0 = math.sqrt(sigma2(model, LandauBasis(B, ell, 1)))
    refs = {"semi_elliptic": ReferenceDensity("semi_elliptic", sigma0)}
    if ell == 0:
        refs["wegner_exact"] = ReferenceDensity("wegner_exact_l0", sigma0)
    return refs


def derived_constants(cfg):
    """Band statistics, bound curves and their constants for a configuration.

    Bounds that do not apply to the model are recorded with a reason
    instead of a curve.  A degenerate band or a mu violating positivity
    raises.
    """
    model = cfg.model()
    basis = cfg.basis()
    B, ell = basis.B, basis.ell
    raise_if_degenerate(model, basis)
    g = cfg.gamma
    stats = band_statistics(
        model, basis, variational_n=g.n, restarts=g.restarts, tol=g.tol, max_iter=g.max_iter
    )
    mu = cfg.mu_choice()
    curves = {}
    skipped = {}
    curves["wegner_flat"] = bound_wegner_flat(model, mu, B, ell)
    curves["gaussian_cmu"] = bound_gaussian_cmu(model, mu, B, ell)
    for name, build in (
        ("gaussian_sigma", lambda: bound_gaussian_sigma(model, B, ell)),
        ("gaussian_gamma", lambda: bound_gaussian_gamma(model, B, ell, stats.gamma2)),
    ):
        try:
            curves[name] = build()
        except (UnsupportedModelError, UnsupportedOperationError) as exc:
            skipped[name] = str(exc)
    summary = {
        "sigma2": stats.sigma2,
        "gamma2": stats.gamma2,
        "method": stats.method,
        "c0": model.variance if model.proper else None,
        "operator_norm_cmu": curves["wegner_flat"].metadata["operator_norm"],
        "operator_norm_argmax_k": curves["wegner_flat"].metadata["argmax_k"],
        "psi_cmu_psi": curves["gaussian_cmu"].metadata["psi_cmu_psi"],
        "tail_integral_s": g_tail_integral(ell, basis.n),
        "bounds": {
            name: {
                "prefactor": c.prefactor,
                "decay": c.decay if math.isfinite(c.decay) else None,
            }
            for name, c in curves.items()
        },
        "skipped_bounds": skipped,
        "references": {k: {"kind": r.kind, "sigma0": r.sigma0} for k, r in _references(model, B, ell).items()},
    }
    return summary, curves


def _energy_grid(cfg, sigma):
    b = cfg.bounds
    lo = -5.0 * sigma if b.energy_min is None else b.energy_min
    hi = 5.0 * sigma if b.energy_max is None else b.energy_max
    return np.linspace(lo, hi, b.points)


def cmd_bounds(cfg, out_dir):
    """Write ``bounds.csv`` and ``summary.json``."""
    rid = run_id(cfg)
    summary, curves = derived_constants(cfg)
    model = cfg.model()
    E = _energy_grid(cfg, math.sqrt(summary["sigma2"]))
    refs = _references(model, cfg.landau.B, cfg.landau.ell)
    header = ["E"] + [c for c in BOUND_COLUMNS] + list(refs)
    cols = [E]
    for name in BOUND_COLUMNS:
        cols.append(curves[name](E) if name in curves else np.full(E.shape, math.nan))
    for ref in refs.values():
        cols.append(ref.pdf(E))
    _write_csv(os.path.join(out_dir, "bounds.csv"), rid, header, np.column_stack(cols))
    summary.update(run_id=rid, version=__version__, created=_now(), config=dumps_config(cfg))
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


def _ensemble(cfg):
    mc = cfg.mc
    return MatrixEnsembleSpec(
        cfg.basis(),
        cfg.model(),
        sampler=mc.sampler,
        realizations=mc.realizations,
        seed=mc.seed,
        modes=mc.modes,
        proposal=mc.proposal,
        surrogate_btau2=mc.surrogate_btau2,
    )


def write_eigenvalues(path, eig, n, R, seed):
    """Raw dump: magic, little-endian uint64 ``n, R, seed``, then float64 values."""
    with open(path, "wb") as fh:
        fh.write(EIGENVALUE_MAGIC)
        fh.write(struct.pack("<QQQ", n, R, seed))
        fh.write(np.ascontiguousarray(eig, dtype="<f8").tobytes())


def read_eigenvalues(path):
    """Inverse of :func:`write_eigenvalues`; returns ``(values (R, n), seed)``."""
    with open(path, "rb") as fh:
        if fh.read(8) != EIGENVALUE_MAGIC:
            raise MissingInputError(f"{path} is not an eigenvalue dump")
        n, R, seed = struct.unpack("<QQQ", fh.read(24))
        values = np.frombuffer(fh.read(), dtype="<f8")
    return values.reshape(R, n), seed


def cmd_simulate(cfg, out_dir, workers=1):
    """Write ``dos_histogram.csv``, ``manifest.json`` and the optional raw dump."""
    rid = run_id(cfg)
    spec = _ensemble(cfg)
    model, basis = spec.model, spec.basis
    s2 = raise_if_degenerate(model, basis)
    window = cfg.mc.window
    if window is None:
        window = (-5.0 * math.sqrt(s2), 5.0 * math.sqrt(s2))
    started = _now()
    hist = accumulate_dos(spec, window, cfg.mc.bins, workers, keep_eigenvalues=cfg.outputs.raw_eigenvalues)
    rows = np.column_stack([hist.centers, hist.density, hist.stderr, hist.counts])
    _write_csv(os.path.join(out_dir, "dos_histogram.csv"), rid, ["E_center", "density", "stderr", "counts"], rows)
    files = ["dos_histogram.csv"]
    if cfg.outputs.raw_eigenvalues:
        name = f"eigenvalues-{rid}.bin"
        write_eigenvalues(os.path.join(out_dir, name), hist.eigenvalues, basis.n, spec.realizations, spec.seed)
        files.append(name)
    mean, mean_se = hist.mean()
    m2, m2_se = hist.second_moment()
    sampled = effective_model(spec)
    exact_moment = None
    if sampled.kind != "delta_limit" or spec.sampler == "exact_matrix":
        exact_moment = expected_second_moment(sampled, basis)
    manifest = {
        "run_id": rid,
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "started": started,
        "finished": _now(),
        "config": dumps_config(cfg),
        "seed": spec.seed,
        "workers": workers,
        "files": files,
        "derived": {
            "sigma2": s2,
            "sigma2_sampled_model": sigma2(sampled, basis),
            "expected_second_moment_finite_n": exact_moment,
            "tail_integral_s": g_tail_integral(basis.ell, basis.n),
        },
        "statistics": {
            "mean": mean,
            "mean_stderr": mean_se,
            "second_moment": m2,
            "second_moment_stderr": m2_se,
            "mass": hist.mass,
            "overflow_low": hist.overflow_low,
            "overflow_high": hist.overflow_high,
            "overflow_fraction": hist.overflow_fraction,
        },
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return hist, manifest


def cmd_gamma(cfg, out_dir):
    """Write ``gamma.json`` with the variational decay energy and diagnostics."""
    model = cfg.model()
    g = cfg.gamma
    basis = LandauBasis(cfg.landau.B, cfg.landau.ell, g.n)
    state = gamma2_variational(model, basis, restarts=g.restarts, tol=g.tol, max_iter=g.max_iter, seed=cfg.mc.seed)
    try:
        closed = gamma2_closed_form(model, basis.ell, basis.B)
    except UnsupportedModelError:
        closed = None
    s2 = sigma2(model, basis)
    out = {
        "run_id": run_id(cfg),
        "n": g.n,
        "variational": state.value,
        "closed_form": closed,
        "relative_gap": None if not closed else (state.value - closed) / closed,
        "iterations": state.iterations,
        "restarts": state.restarts,
        "converged": state.converged,
        "overlap_with_lowest_state": state.overlap,
        "restart_values": state.history,
        "sigma2": s2,
        "sandwich_lower": s2 * s2 / model.c0 if model.proper else None,
    }
    _write_json(os.path.join(out_dir, "gamma.json"), out)
    return out


PLOT_SCRIPT = '''"""Plot the report written by `landaudos report` (needs matplotlib)."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "report_long.csv"
series = {}
with open(path) as fh:
    next(fh)
    for row in csv.DictReader(fh):
        series.setdefault(row["series"], ([], []))
        series[row["series"]][0].append(float(row["E"]))
        series[row["series"]][1].append(float(row["value"]))
for name, (x, y) in series.items():
    if name.endswith("stderr"):
        continue
    style = "o" if name == "density" else "-"
    plt.plot(x, y, style, ms=2, label=name)
plt.xlabel("E")
plt.ylabel("density")
plt.yscale("log")
plt.legend()
plt.savefig("report.png", dpi=150)
'''


def cmd_report(cfg, out_dir):
    """Join histogram, bounds and references into report files."""
    rid = run_id(cfg)
    hist_path = os.path.join(out_dir, "dos_histogram.csv")
    summary_path = os.path.join(out_dir, "summary.json")
    manifest_path = os.path.join(out_dir, "manifest.json")
    for path in (hist_path, summary_path, manifest_path):
        if not os.path.exists(path):
            raise MissingInputError(f"missing {os.path.basename(path)}; run bounds and simulate first")
    hist_rid, hist = _read_csv(hist_path)
    with open(summary_path) as fh:
        summary = json.load(fh)
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if hist_rid != rid or summary.get("run_id") != rid or manifest.get("run_id") != rid:
        raise MissingInputError(f"outputs in {out_dir} belong to another run id")
    E = hist["E_center"]
    density = hist["density"]
    stderr = hist["stderr"]
    slack = cfg.report.slack
    header = ["E_center", "density", "stderr"]
    cols = [E, density, stderr]
    verdicts = {}
    for name, info in summary["bounds"].items():
        decay = info["decay"]
        curve = info["prefactor"] * (np.exp(-0.5 * E**2 / decay) if decay else np.ones_like(E))
        excess = density - curve - slack * stderr
        verdicts[name] = {
            "verdict": "PASS" if np.all(excess <= 0) else "FAIL",
            "worst_excess": float(np.max(excess)),
            "worst_E": float(E[int(np.argmax(excess))]),
        }
        header.append(name)
        cols.append(curve)
    refs = {k: ReferenceDensity(v["kind"], v["sigma0"]) for k, v in summary["references"].items()}
    widths = np.diff(E).mean()
    edges = np.concatenate([E - 0.5 * widths, [E[-1] + 0.5 * widths]])
    counts = hist["counts"]
    st = manifest["statistics"]
    total = counts.sum() + st["overflow_low"] + st["overflow_high"]
    cdf = (st["overflow_low"] + np.concatenate([[0.0], np.cumsum(counts)])) / total
    ks = {}
    for name, ref in refs.items():
        header.append(name)
        cols.append(ref.pdf(E))
        ks[name] = float(np.max(np.abs(cdf - ref.cdf(edges))))
    mirrored = density[::-1]
    z = np.abs(density - mirrored) / np.sqrt(stderr**2 + stderr[::-1] ** 2 + 1e-300)
    moments = {
        "mean": st["mean"],
        "mean_stderr": st["mean_stderr"],
        "second_moment": st["second_moment"],
        "second_moment_stderr": st["second_moment_stderr"],
        "sigma2": summary["sigma2"],
        "expected_second_moment_finite_n": manifest["derived"]["expected_second_moment_finite_n"],
        "evenness_max_z": float(np.max(z)),
        "mass": st["mass"],
        "overflow_fraction": st["overflow_fraction"],
        "ks_distance": ks,
    }
    rows = np.column_stack(cols)
    _write_csv(os.path.join(out_dir, "report.csv"), rid, header, rows)
    with open(os.path.join(out_dir, "report_long.csv"), "w", newline="") as fh:
        fh.write(f"# run_id: {rid}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series", "E", "value"])
        for name, col in zip(header[1:], cols[1:]):
            for e, v in zip(E, col):
                writer.writerow([name, _fmt(e), _fmt(v)])
    with open(os.path.join(out_dir, "plot_report.py"), "w") as fh:
        fh.write(PLOT_SCRIPT)
    report = {"run_id": rid, "slack": slack, "domination": verdicts, "moments": moments}
    _write_json(os.path.join(out_dir, "report.json"), report)
    return report


def _parser():
    parser = argparse.ArgumentParser(prog="landaudos", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("bounds", "analytic bounds and reference densities"),
        ("simulate", "Monte Carlo eigenvalue histogram"),
        ("gamma", "variational decay energy"),
        ("report", "join histogram and bounds"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="experiment configuration file")
        p.add_argument("--out", help="output directory (overrides [outputs] dir)")
        p.add_argument("--seed", type=int, help="override [mc] seed")
        p.add_argument("--workers", type=int, default=1, help="worker processes for simulate")
    return parser


def _error_record(out_dir, command, exc, status):
    record = {"command": command, "kind": getattr(exc, "kind", "io"), "message": str(exc), "exit_status": status}
    if getattr(exc, "realization_index", None) is not None:
        record["realization_index"] = exc.realization_index
    try:
        _write_json(os.path.join(out_dir, "error.json"), record)
    except (OSError, TypeError):
        pass
    print(f"landaudos {command}: {record['kind']}: {exc}", file=sys.stderr)


def main(argv=None):
    args = _parser().parse_args(argv)
    out_dir = args.out or "."
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            cfg = cfg.replace("mc", seed=args.seed)
        out_dir = args.out or cfg.outputs.dir
        os.makedirs(out_dir, exist_ok=True)
        if args.command == "bounds":
            cmd_bounds(cfg, out_dir)
        elif args.command == "simulate":
            cmd_simulate(cfg, out_dir, workers=max(1, args.workers))
        elif args.command == "gamma":
            cmd_gamma(cfg, out_dir)
        else:
            cmd_report(cfg, out_dir)
    except LandauDosError as exc:
        _error_record(out_dir, args.command, exc, exc.exit_status)
        return exc.exit_status
    except OSError as exc:
        _error_record(out_dir, args.command, exc, 4)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
