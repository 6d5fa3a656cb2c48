"""Command-line front end: simulate, estimate, roc, diagnose.

Parameters resolve in three layers: built-in defaults, then an INI config
file (one section per command), then command-line flags. Every command
writes a manifest with the fully resolved parameters and any logged
events, so a run can be reproduced byte-for-byte from its manifest.

Exit codes: 0 success, 2 invalid configuration, 3 I/O or input-data
failure, 4 numeric degeneracy.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .diagnostics import cross_correlation_blocks, variance_explained_split
from .errors import (
    DegenerateSpectrum,
    DegenerateTruth,
    DegenerateVariance,
    FunggmError,
    GridMismatch,
    MissingObservation,
    NumericalError,
    ParseError,
)
from .fdata import FunctionalDataset, load_csv
from .graphs import EdgeSet
from .jgl import PenaltyConfig
from .pipeline import dataset_roc, estimate_correlations, estimate_graphs
from .simgen import SimConfig, simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

_CONFIG_ERRORS = (ValueError, configparser.Error)
_IO_ERRORS = (OSError, ParseError, MissingObservation, GridMismatch)
_NUMERIC_ERRORS = (DegenerateVariance, DegenerateSpectrum, DegenerateTruth, NumericalError)


def _fmt(x) -> str:
    """Render a float with 17 significant digits for exact round trips."""
    return format(float(x), ".17g")


@dataclass(frozen=True)
class Opt:
    name: str
    type: type
    default: object
    help: str


_COMMON = [
    Opt("seed", int, 0, "RNG seed"),
    Opt("threads", int, 0, "worker threads (0 = logical cores)"),
    Opt("out_dir", str, "out", "output directory"),
]

_SPECS: dict[str, list[Opt]] = {
    "simulate": [
        Opt("p", int, 50, "number of components"),
        Opt("n", int, 75, "number of subjects"),
        Opt("pi", float, 0.05, "edge density of the true graph"),
        Opt("tau", float, 0.0, "proportion of common edges"),
        Opt("model", str, "ps", "covariance model: ps or non-ps"),
        Opt("m_bases", int, 20, "number of generating basis functions"),
        Opt("grid_size", int, 30, "number of grid points"),
        Opt("noise_frac", float, 0.05, "noise variance as a fraction of signal"),
    ],
    "estimate": [
        Opt("dataset", str, None, "input dataset CSV"),
        Opt("layout", str, "wide", "dataset CSV layout: wide or long"),
        Opt("threshold", float, 0.9, "variance-explained truncation threshold"),
        Opt("gamma", float, None, "penalty level (required)"),
        Opt("alpha", float, 0.5, "lasso/group mixing in [0, 1]"),
        Opt("rho", float, 1.0, "ADMM step size"),
        Opt("eps_abs", float, 1e-6, "absolute stopping tolerance"),
        Opt("eps_rel", float, 1e-5, "relative stopping tolerance"),
        Opt("max_iter", int, 2000, "ADMM iteration cap"),
    ],
    "roc": [
        Opt("dataset", str, None, "input dataset CSV"),
        Opt("layout", str, "wide", "dataset CSV layout: wide or long"),
        Opt("truth", str, None, "truth edge list CSV (from simulate)"),
        Opt("threshold", float, 0.9, "variance-explained truncation threshold"),
        Opt("alphas", str, "0,0.25,0.5,0.75,1", "comma-separated mixing grid"),
        Opt("n_gammas", int, 50, "penalty levels per sweep"),
        Opt("eps_abs", float, 1e-6, "absolute stopping tolerance"),
        Opt("eps_rel", float, 1e-5, "relative stopping tolerance"),
        Opt("max_iter", int, 2000, "ADMM iteration cap"),
    ],
    "diagnose": [
        Opt("dataset", str, None, "input dataset CSV"),
        Opt("layout", str, "wide", "dataset CSV layout: wide or long"),
        Opt("l_max", int, 6, "largest truncation level to report"),
        Opt("reps", int, 20, "number of split replications"),
    ],
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="funggm",
        description="Functional graphical model estimation and benchmarks",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for command, opts in _SPECS.items():
        cp = sub.add_parser(command)
        cp.add_argument("--config", type=str, default=None, help="INI config file")
        for opt in opts + _COMMON:
            flag = "--" + opt.name.replace("_", "-")
            cp.add_argument(flag, type=opt.type, default=None, help=opt.help)
    return parser


def _resolve(command: str, args: argparse.Namespace) -> dict:
    """Layer defaults, config-file section, and flags into one dict."""
    opts = _SPECS[command] + _COMMON
    values = {o.name: o.default for o in opts}
    if args.config is not None:
        parser = configparser.ConfigParser()
        read = parser.read(args.config)
        if not read:
            raise OSError(f"cannot read config file {args.config}")
        if parser.has_section(command):
            by_name = {o.name: o for o in opts}
            for key, raw in parser.items(command):
                key = key.replace("-", "_")
                if key not in by_name:
                    raise ValueError(f"unknown config key {key!r} for {command}")
                values[key] = by_name[key].type(raw)
    for o in opts:
        flag_value = getattr(args, o.name)
        if flag_value is not None:
            values[o.name] = flag_value
    if values.get("threads", 0) == 0:
        values["threads"] = os.cpu_count() or 1
    return values


def _write_manifest(out_dir: str, command: str, params: dict, outputs: list[str], events: list[str]):
    manifest = {
        "command": command,
        "version": __version__,
        "parameters": params,
        "outputs": outputs,
        "events": events,
    }
    path = os.path.join(out_dir, f"{command}_manifest.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_dataset_wide(path: str, dataset: FunctionalDataset):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("grid," + ",".join(_fmt(t) for t in dataset.grid.points) + "\n")
        for i in range(dataset.n_subjects):
            for j in range(dataset.n_components):
                row = dataset.values[i, j]
                fh.write(f"{i + 1},{j + 1}," + ",".join(_fmt(v) for v in row) + "\n")


def _write_edge_csv(path: str, union: EdgeSet, per_l: list[EdgeSet]):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("l,j,k\n")
        for j, k in sorted(union.edges):
            fh.write(f"0,{j},{k}\n")
        for l, es in enumerate(per_l, start=1):
            for j, k in sorted(es.edges):
                fh.write(f"{l},{j},{k}\n")


def read_truth_csv(path: str, p: int) -> EdgeSet:
    """Union edge set (rows with l=0) from a truth CSV written by simulate."""
    edges = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "l,j,k":
            raise ParseError(f"expected header 'l,j,k', got {header!r}", 1)
        for line_no, line in enumerate(fh, start=2):
            parts = line.strip().split(",")
            if len(parts) != 3:
                raise ParseError("expected 3 columns", line_no)
            try:
                l, j, k = (int(x) for x in parts)
            except ValueError:
                raise ParseError(f"non-integer edge row {line.strip()!r}", line_no) from None
            if l == 0:
                edges.append((j, k))
    return EdgeSet.from_pairs(p, edges)


def cmd_simulate(values: dict) -> tuple[list[str], list[str]]:
    config = SimConfig(
        p=values["p"],
        n=values["n"],
        pi=values["pi"],
        tau=values["tau"],
        model=values["model"],
        seed=values["seed"],
        M=values["m_bases"],
        T=values["grid_size"],
        noise_frac=values["noise_frac"],
    )
    dataset, model = simulate(config)
    out = values["out_dir"]
    dataset_path = os.path.join(out, "dataset.csv")
    truth_path = os.path.join(out, "truth.csv")
    _write_dataset_wide(dataset_path, dataset)
    _write_edge_csv(truth_path, model.graph, list(model.edge_sets))
    return [dataset_path, truth_path], list(model.events)


def cmd_estimate(values: dict) -> tuple[list[str], list[str]]:
    if values["dataset"] is None:
        raise ValueError("estimate requires --dataset")
    if values["gamma"] is None:
        raise ValueError("estimate requires --gamma")
    dataset = load_csv(values["dataset"], layout=values["layout"])
    config = PenaltyConfig(
        gamma=values["gamma"],
        alpha=values["alpha"],
        rho=values["rho"],
        eps_abs=values["eps_abs"],
        eps_rel=values["eps_rel"],
        max_iter=values["max_iter"],
    )
    fit = estimate_graphs(dataset, config, threshold=values["threshold"])

    out = values["out_dir"]
    eig_path = os.path.join(out, "eigenvalues.csv")
    fractions = fit.basis.basis.variance_fractions()
    with open(eig_path, "w", encoding="utf-8") as fh:
        fh.write("index,eigenvalue,cumulative_fraction\n")
        for idx, (ev, fr) in enumerate(zip(fit.basis.basis.eigenvalues, fractions), start=1):
            fh.write(f"{idx},{_fmt(ev)},{_fmt(fr)}\n")

    edges_path = os.path.join(out, "edges.csv")
    _write_edge_csv(edges_path, fit.union, fit.edge_sets)

    solver_path = os.path.join(out, "solver.json")
    with open(solver_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "L": fit.basis.L,
                "threshold": values["threshold"],
                "gamma": values["gamma"],
                "alpha": values["alpha"],
                "iterations": fit.solution.iterations,
                "converged": fit.solution.converged,
                "primal_residual": fit.solution.primal_residual,
                "dual_residual": fit.solution.dual_residual,
                "kkt_residual": fit.kkt,
                "union_edges": len(fit.union),
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return [eig_path, edges_path, solver_path], []


def cmd_roc(values: dict) -> tuple[list[str], list[str]]:
    if values["dataset"] is None or values["truth"] is None:
        raise ValueError("roc requires --dataset and --truth")
    dataset = load_csv(values["dataset"], layout=values["layout"])
    truth = read_truth_csv(values["truth"], dataset.n_components)
    alphas = tuple(float(a) for a in values["alphas"].split(","))
    config = PenaltyConfig(
        gamma=1.0,
        alpha=alphas[0],
        eps_abs=values["eps_abs"],
        eps_rel=values["eps_rel"],
        max_iter=values["max_iter"],
    )
    results, best, _ = dataset_roc(
        dataset,
        truth,
        threshold=values["threshold"],
        alphas=alphas,
        n_gammas=values["n_gammas"],
        threads=values["threads"],
        config=config,
    )

    out = values["out_dir"]
    points_path = os.path.join(out, "roc_points.csv")
    with open(points_path, "w", encoding="utf-8") as fh:
        fh.write("alpha,gamma,fpr,tpr\n")
        for res in results:
            for gamma, (fpr, tpr) in zip(res.gammas, res.rates):
                fh.write(f"{_fmt(res.alpha)},{_fmt(gamma)},{_fmt(fpr)},{_fmt(tpr)}\n")
    summary_path = os.path.join(out, "roc_summary.csv")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("alpha,auc,auc15,best\n")
        for idx, res in enumerate(results):
            fh.write(f"{_fmt(res.alpha)},{_fmt(res.auc)},{_fmt(res.auc15)},{int(idx == best)}\n")
    events = [
        f"alpha={res.alpha:g}: {res.monotonicity_violations} non-monotone edge-count steps"
        for res in results
        if res.monotonicity_violations
    ]
    return [points_path, summary_path], events


def cmd_diagnose(values: dict) -> tuple[list[str], list[str]]:
    if values["dataset"] is None:
        raise ValueError("diagnose requires --dataset")
    dataset = load_csv(values["dataset"], layout=values["layout"])
    rng = np.random.default_rng(values["seed"])
    l_max = min(values["l_max"], dataset.grid.size)
    report = variance_explained_split(dataset, l_max, values["reps"], rng)

    out = values["out_dir"]
    ve_path = os.path.join(out, "variance_explained.csv")
    with open(ve_path, "w", encoding="utf-8") as fh:
        fh.write("rep,method,L,in_ve,out_ve,ratio\n")
        for r in report.records:
            fh.write(
                f"{r.rep},{r.method},{r.L},{_fmt(r.in_ve)},{_fmt(r.out_ve)},{_fmt(r.ratio)}\n"
            )

    est = estimate_correlations(dataset, threshold=0.9)
    L = min(est.scores.n_bases, l_max)
    blocks = cross_correlation_blocks(est.scores, L)
    corr_path = os.path.join(out, "block_correlation.csv")
    with open(corr_path, "w", encoding="utf-8") as fh:
        for row in blocks.matrix:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    events = list(report.events)
    events.append(f"off-block mean absolute correlation {blocks.off_block_mean():.6g}")
    return [ve_path, corr_path], events


_COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "roc": cmd_roc,
    "diagnose": cmd_diagnose,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        values = _resolve(args.command, args)
        os.makedirs(values["out_dir"], exist_ok=True)
        outputs, events = _COMMANDS[args.command](values)
        _write_manifest(values["out_dir"], args.command, values, outputs, events)
    except _NUMERIC_ERRORS as exc:
        print(f"funggm {args.command}: numeric degeneracy: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _IO_ERRORS as exc:
        print(f"funggm {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except _CONFIG_ERRORS as exc:
        print(f"funggm {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in outputs:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
