"""Command-line front end: named cases, sweeps, verification, tables.

Subcommands:
  run               one coupled solve; writes table.csv, solution dat, report.json
  sweep             h (and optionally epsilon) sweep of one case
  verify            lemma-level property suite
  reproduce-tables  all four benchmark convergence tables with reference deltas
  benchmark         assembly backend comparison (numba vs numpy)

Config values may come from a flat TOML file (--config) with command-line
flags taking precedence.  Grid sizes accept exact '2^-k' literals, and
h lists accept the range shorthand '2^-3..2^-7'.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from . import cases as case_defs
from . import diagnostics, reference
from .geometry import parse_grid_size, standard_layout
from .kernels import INTEGRABLE, SINGULAR, KernelSpec
from .optimizer import solve_bfgs, solve_normal_equations

KERNEL_NAMES = {"integrable": INTEGRABLE, "singular": SINGULAR}
CASES = case_defs.CASE_NAMES + ("modeling-sweep", "property-suite")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    case: str = "patch"
    kernel: str = "integrable"
    epsilon: float | None = None
    epsilon_list: list = field(default_factory=list)
    h: float | None = None
    h_list: list = field(default_factory=list)
    solver: str = "normal"
    tol: float = 1e-12
    max_iter: int = 500
    seed: int = 0
    output_dir: str = "."
    jobs: int = 1
    dump_matrices: bool = False
    backend: str | None = None

    def validate(self):
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}; expected one of {CASES}")
        if self.kernel not in KERNEL_NAMES:
            raise ConfigError(f"unknown kernel {self.kernel!r}; "
                              f"expected one of {tuple(KERNEL_NAMES)}")
        if self.epsilon is not None and self.epsilon_list:
            raise ConfigError("give either epsilon or epsilon-list, not both")
        if self.h is not None and self.h_list:
            raise ConfigError("give either h or h-list, not both")
        if self.epsilon is None and not self.epsilon_list:
            raise ConfigError("an interaction radius is required (epsilon)")
        if self.h is None and not self.h_list:
            raise ConfigError("a grid size is required (h)")
        if self.solver not in ("normal", "bfgs"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        return self

    @property
    def epsilons(self):
        return self.epsilon_list if self.epsilon_list else [self.epsilon]

    @property
    def h_values(self):
        return self.h_list if self.h_list else [self.h]


def parse_h_list(text) -> list:
    """'2^-3..2^-7' expands the halving range; otherwise comma-separated."""
    s = str(text).strip()
    if ".." in s:
        lo_s, hi_s = s.split("..", 1)
        lo, hi = parse_grid_size(lo_s), parse_grid_size(hi_s)
        if not (0 < hi <= lo):
            raise ConfigError(f"bad h range {text!r}")
        out = []
        h = lo
        while h > hi * (1 - 1e-12):
            out.append(h)
            h /= 2.0
        return out
    out = [parse_grid_size(p) for p in s.split(",") if p.strip()]
    if not out:
        raise ConfigError("empty h list")
    return out


def parse_config(path=None, overrides=None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    data = {}
    if path:
        with open(path, "rb") as fh:
            data.update(tomllib.load(fh))
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    for key, value in data.items():
        key = key.replace("-", "_")
        if key in ("h",):
            cfg.h = parse_grid_size(value)
        elif key == "h_list":
            cfg.h_list = parse_h_list(value) if isinstance(value, str) \
                else [parse_grid_size(v) for v in value]
        elif key == "epsilon":
            cfg.epsilon = float(value)
        elif key == "epsilon_list":
            cfg.epsilon_list = [float(v) for v in value.split(",")] \
                if isinstance(value, str) else [float(v) for v in value]
        elif key in ("case", "kernel", "solver", "output_dir", "backend"):
            setattr(cfg, key, str(value))
        elif key in ("tol",):
            cfg.tol = float(value)
        elif key in ("max_iter", "seed", "jobs"):
            setattr(cfg, key, int(value))
        elif key == "dump_matrices":
            cfg.dump_matrices = bool(value)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return cfg.validate()


def _solve_one(cfg: ExperimentConfig, eps: float, h: float):
    kernel = KernelSpec(KERNEL_NAMES[cfg.kernel], eps)
    layout = standard_layout(eps)
    prob = diagnostics.coupled_problem(cfg.case, kernel, h, layout=layout,
                                       backend=cfg.backend)
    if cfg.solver == "bfgs":
        sol = solve_bfgs(prob, tol=cfg.tol, max_iter=cfg.max_iter)
    else:
        sol = solve_normal_equations(prob)
    return sol, prob, layout


def _write_solution_profile(path, sol, layout, n_points: int = 2000):
    xs = np.linspace(layout.domain_n[0], layout.omega_l[1], n_points)
    vals = sol(xs)
    with open(path, "w") as fh:
        for x, v in zip(xs, vals):
            fh.write(f"{x:.10e} {v:.10e}\n")


def _dump_matrix(path, M):
    with open(path, "w") as fh:
        rows, cols = np.nonzero(M)
        for i, j in zip(rows, cols):
            fh.write(f"{i} {j} {M[i, j]:.17e}\n")


def _self_convergence(cfg, eps, h):
    """Fine-mesh self-check for the cases without a closed-form solution."""
    sols = []
    for hh in (h, h / 2, h / 4):
        sol, _, layout = _solve_one(cfg, eps, hh)
        sols.append(sol)
    xs = np.linspace(layout.domain_n[0] + 1e-9, layout.omega_l[1] - 1e-9, 1500)
    d1 = float(np.sqrt(np.mean((sols[0](xs) - sols[2](xs)) ** 2)))
    d2 = float(np.sqrt(np.mean((sols[1](xs) - sols[2](xs)) ** 2)))
    order = math.log2(d1 / d2) - 1.0 if d2 > 0 else float("nan")
    return {"coarse_vs_fine_l2": d1, "mid_vs_fine_l2": d2,
            "self_convergence_order": order + 1.0 if math.isfinite(order) else None}


def run_experiment(cfg: ExperimentConfig) -> dict:
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    report = {"config": {k: v for k, v in vars(cfg).items()}, "runs": []}

    if cfg.case == "property-suite":
        res = diagnostics.property_suite(KERNEL_NAMES[cfg.kernel], cfg.epsilons[0],
                                         cfg.h_values[0], seed=cfg.seed,
                                         backend=cfg.backend)
        report["property_suite"] = res
        (outdir / "report.json").write_text(json.dumps(report, indent=2, default=str))
        ok = res["q_spd"] and res["strong_cs_ok"] and res["poincare_bounded"]
        return report if ok else _fail(report, outdir, "property checks failed")

    if cfg.case == "modeling-sweep":
        eps_list = cfg.epsilons if len(cfg.epsilons) > 1 else [0.08, 0.04, 0.02, 0.01]
        res = diagnostics.modeling_error_study(KERNEL_NAMES[cfg.kernel], eps_list,
                                               cfg.h_values[0], backend=cfg.backend)
        report["modeling_sweep"] = {
            "records": [vars(r) for r in res["records"]],
            "orders": res["orders"], "fitted_C": res["fitted_C"],
            "bound_holds": res["bound_holds"],
        }
        (outdir / "report.json").write_text(json.dumps(report, indent=2, default=str))
        return report

    rows = []
    for eps in cfg.epsilons:
        prev = None
        for h in cfg.h_values:
            sol, prob, layout = _solve_one(cfg, eps, h)
            entry = {"epsilon": eps, "h": h, "solver_report": sol.report}
            case = case_defs.make_case(cfg.case, eps)
            if case.exact is not None:
                e_un, e_ul, e_thn = diagnostics.case_errors(sol, cfg.case, layout)
                entry.update(e_un=e_un, e_ul=e_ul, e_thn=e_thn)
                rec = [eps, h, e_un, None, e_ul, None, e_thn, None]
                if prev is not None and abs(math.log2(prev[1] / h) - 1.0) < 1e-9:
                    rec[3] = math.log2(prev[2] / e_un)
                    rec[5] = math.log2(prev[4] / e_ul)
                    rec[7] = math.log2(prev[6] / e_thn)
                rows.append(rec)
                prev = rec
                if cfg.case == "patch":
                    xs = np.linspace(layout.domain_n[0], layout.omega_l[1], 1000)
                    entry["max_pointwise_error"] = float(np.max(np.abs(sol(xs) - xs)))
            else:
                entry["self_convergence"] = _self_convergence(cfg, eps, h)
            _write_solution_profile(outdir / f"solution_{eps}_{h}.dat", sol, layout)
            if cfg.dump_matrices:
                _dump_matrix(outdir / f"nonlocal_stiffness_{eps}_{h}.txt",
                             prob.op_n.matrix)
                _dump_matrix(outdir / f"local_stiffness_{eps}_{h}.txt", prob.op_l.matrix)
            report["runs"].append(entry)

    with open(outdir / "table.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epsilon", "h", "e_un", "rate_un", "e_ul", "rate_ul",
                         "e_thn", "rate_thn"])
        for r in rows:
            writer.writerow([f"{r[0]:.3f}", repr(r[1])]
                            + [("" if v is None else (f"{v:.6e}" if i % 2 == 0 else f"{v:.2f}"))
                               for i, v in enumerate(r[2:])])
    (outdir / "report.json").write_text(json.dumps(report, indent=2, default=str))
    return report


def _fail(report, outdir, message):
    report["error"] = message
    (outdir / "report.json").write_text(json.dumps(report, indent=2, default=str))
    raise SystemExit(message)


def reproduce_tables(output_dir=".", backend=None, solver="normal") -> dict:
    """All four benchmark tables, with reference deltas in the report."""
    outdir = Path(output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = {"tables": [], "worst_checked_rel_dev": 0.0}
    for (case, family), refs in reference.REFERENCE_TABLES.items():
        for eps in (0.010, 0.065):
            h_list = [r.h for r in refs if abs(r.epsilon - eps) < 1e-12]
            tab = diagnostics.convergence_study(case, family, eps, sorted(h_list, reverse=True),
                                                solver=solver, backend=backend)
            name = f"table_{case}_{family}_eps{eps:.3f}"
            tab.write_csv(outdir / f"{name}.csv")
            for rec in tab.records:
                ref = next(r for r in refs if abs(r.epsilon - eps) < 1e-12
                           and abs(r.h - rec.h) < 1e-15)
                row = {"case": case, "kernel": family, "epsilon": eps, "h": rec.h,
                       "e_un": rec.e_un, "e_ul": rec.e_ul, "e_thn": rec.e_thn,
                       "checked": ref.checked}
                if ref.e_un is None:
                    row["note"] = "no reference value"
                else:
                    devs = [abs(rec.e_un / ref.e_un - 1), abs(rec.e_ul / ref.e_ul - 1),
                            abs(rec.e_thn / ref.e_thn - 1)]
                    row["max_rel_dev"] = max(devs)
                    if ref.checked:
                        summary["worst_checked_rel_dev"] = max(
                            summary["worst_checked_rel_dev"], row["max_rel_dev"])
                summary["tables"].append(row)
    (outdir / "tables_report.json").write_text(json.dumps(summary, indent=2))
    return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltn",
                                     description="optimization-based local-to-nonlocal "
                                                 "coupling solver (1D)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat TOML config file")
        p.add_argument("--case", choices=CASES)
        p.add_argument("--kernel", choices=tuple(KERNEL_NAMES))
        p.add_argument("--epsilon", type=float)
        p.add_argument("--epsilon-list", dest="epsilon_list")
        p.add_argument("--h", dest="h")
        p.add_argument("--h-list", dest="h_list")
        p.add_argument("--solver", choices=("normal", "bfgs"))
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--jobs", type=int)
        p.add_argument("--backend", choices=("numba", "numpy"))
        p.add_argument("--dump-matrices", dest="dump_matrices", action="store_const",
                       const=True)

    for name in ("run", "sweep"):
        add_common(sub.add_parser(name, help=f"{name} a configured experiment"))
    v = sub.add_parser("verify", help="run the lemma-level property suite")
    add_common(v)
    r = sub.add_parser("reproduce-tables", help="recompute all benchmark tables")
    r.add_argument("--output-dir", dest="output_dir", default="tables")
    r.add_argument("--backend", choices=("numba", "numpy"))
    r.add_argument("--solver", choices=("normal", "bfgs"), default="normal")
    b = sub.add_parser("benchmark", help="compare assembly backends")
    b.add_argument("--epsilon", type=float, default=0.065)
    b.add_argument("--h", default="2^-7")
    b.add_argument("--kernel", choices=tuple(KERNEL_NAMES), default="singular")
    b.add_argument("--repeats", type=int, default=3)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "reproduce-tables":
            summary = reproduce_tables(args.output_dir, backend=args.backend,
                                       solver=args.solver)
            print(f"worst checked relative deviation: "
                  f"{100 * summary['worst_checked_rel_dev']:.2f}%")
            return 0
        if args.command == "benchmark":
            from .benchmark import run_benchmark
            res = run_benchmark(kernel=args.kernel, epsilon=args.epsilon,
                                h=parse_grid_size(args.h), repeats=args.repeats)
            for line in res["lines"]:
                print(line)
            return 0

        overrides = {k: v for k, v in vars(args).items()
                     if k not in ("command", "config")}
        if args.command == "verify":
            overrides.setdefault("epsilon", None)
            overrides["epsilon"] = overrides["epsilon"] or 0.065
            overrides["h"] = overrides.get("h") or "2^-5"
            overrides["case"] = "property-suite"
        cfg = parse_config(args.config, overrides)
        report = run_experiment(cfg)
        if args.command == "verify":
            res = report["property_suite"]
            for key in ("q_spd", "strong_cs_ok", "poincare_bounded"):
                print(f"{key}: {'pass' if res[key] else 'FAIL'}")
            print(f"delta_hat={res['strong_cs_delta']:.4f} "
                  f"K=[{res['norm_equiv_lower']:.4f}, {res['norm_equiv_upper']:.4f}] "
                  f"poincare={res['poincare_ratio']:.4f}")
        return 0
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
