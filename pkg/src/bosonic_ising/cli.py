"""Command-line driver: one subcommand per experiment, CSV out plus a JSON sidecar.

    python -m bosonic_ising equilibrium --config fig2.json --out fig2.csv
    python -m bosonic_ising kmc --config fig3b.json --seed 42
    python -m bosonic_ising maxcut --graph g.txt --oracle

Exit status is 0 on success, 2 for usage/config errors and 1 for failures
inside a simulation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .kmc import DEFAULT_SEED, AnnealingSchedule, anneal_ensemble, ensemble_statistics
from .maxcut import anneal_maxcut, brute_force_maxcut, maxcut_instance, parse_edge_list
from .model import (ProblemInstance, beta_for_error, boltzmann, equilibrium_stats,
                    ground_sign_pattern, two_level_instance)
from .rates import DynamicsParams

EXPERIMENTS = ("equilibrium", "ode", "kmc", "anneal", "quantum", "maxcut")

CSV_COLUMNS = {
    "equilibrium": ["kind", "N", "kT_over_JN", "mean_spin_over_N", "error_prob"],
    "ode": ["t", "L1_to_eq", "ground_pop"],
    "kmc": ["t", "error_est", "error_stderr", "mean_energy"],
    "anneal": ["tau0", "N", "residual_energy", "stderr"],
    "quantum": ["t", "trace_defect", "offdiag_mass", "max_residual"],
    "maxcut": ["graph", "n_vertices", "n_edges", "simulated_best_cut", "optimum_cut"],
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    experiment: str
    settings: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    out: Path | None = None
    threads: int | None = None
    base_dir: Path = Path(".")

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        for key in ("graph", "path"):
            p = self.settings.get(key) or self.settings.get("instance", {}).get(key)
            if p and not self.resolve(p).exists():
                raise ConfigError(f"file not found: {p}")

    def resolve(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def get(self, key, default=None):
        return self.settings.get(key, default)

    def params(self, beta: float = 0.0) -> DynamicsParams:
        d = self.settings.get("params", {})
        return DynamicsParams(d.get("alpha", 1.0), d.get("xi", 0.001), beta, d.get("delta_k_max"))


def build_instance(spec: dict, N: int, cfg: RunConfig) -> ProblemInstance:
    kind = spec.get("type")
    if kind == "two_site":
        return ProblemInstance.two_site(spec["J"], spec["lam"], N)
    if kind == "complete":
        return ProblemInstance.complete_graph(spec["M"], spec["coupling"], spec["lam"], N)
    if kind == "two_level":
        return two_level_instance(N, spec["gap"])
    if kind == "matrix":
        return ProblemInstance(np.array(spec["J"], dtype=float), spec.get("lam", 0.0), N)
    if kind == "edge_list":
        graph = parse_edge_list(cfg.resolve(spec["path"]).read_text(encoding="utf-8"))
        return maxcut_instance(graph, N, spec.get("lambda_bias", 0.0))
    raise ConfigError(f"unknown instance type {kind!r}")


def _grid(value, default):
    if value is None:
        value = default
    if isinstance(value, dict):
        return np.linspace(value["start"], value["stop"], value["num"])
    return np.asarray(value, dtype=float)


def _Ns(cfg):
    N = cfg.get("N", 1)
    return [int(n) for n in (N if isinstance(N, list) else [N])]


def _beta(cfg, inst):
    if "beta" in cfg.settings:
        return float(cfg.get("beta"))
    if "kT" in cfg.settings:
        return 1.0 / float(cfg.get("kT"))
    if "error_target" in cfg.settings:
        return beta_for_error(inst, float(cfg.get("error_target")))
    raise ConfigError("need one of beta, kT or error_target")


def run_equilibrium(cfg: RunConfig):
    rows = []
    spec = cfg.get("instance", {"type": "two_site", "J": 10.0, "lam": 0.5})
    grid = _grid(cfg.get("kT_over_JN"), {"start": 0.3, "stop": 5.0, "num": 20})
    for kind in cfg.get("kinds", ["bosonic", "distinguishable"]):
        for N in _Ns(cfg):
            inst = build_instance(spec, N, cfg)
            Jscale = np.abs(inst.J).max() or 1.0
            for x in grid:
                st = equilibrium_stats(inst, 1.0 / (x * Jscale * N), kind)
                rows.append([kind, N, x, st.mean_spin[0] / N, st.error_probability])
    return rows


def run_ode(cfg: RunConfig):
    from .master import evolve_distribution, l1_distance
    from .model import enumerate_states

    N = _Ns(cfg)[0]
    inst = build_instance(cfg.get("instance", {"type": "two_level", "gap": 10.0}), N, cfg)
    beta = _beta(cfg, inst)
    t = np.linspace(0.0, float(cfg.get("t_end", 5.0)), int(cfg.get("n_points", 101)))
    traj = evolve_distribution(inst, cfg.params(beta), cfg.get("init", "half"), t,
                               method=cfg.get("method", "RK45"))
    l1 = l1_distance(traj.p, boltzmann(inst, beta))
    # fraction of bosons whose spin agrees with the ground-state sign on their site
    signs = ground_sign_pattern(inst)
    states = enumerate_states(inst)
    aligned = np.where(signs > 0, states, N - states).mean(axis=1) / N
    return [[ti, li, pi @ aligned] for ti, li, pi in zip(traj.t, l1, traj.p)]


def run_kmc(cfg: RunConfig):
    N = _Ns(cfg)[0]
    inst = build_instance(cfg.get("instance", {"type": "complete", "M": 4, "coupling": -10.0,
                                               "lam": -1.0}), N, cfg)
    beta = _beta(cfg, inst)
    t_end = float(cfg.get("t_end", 100.0))
    times = np.linspace(0.0, t_end, int(cfg.get("n_checkpoints", 21)))
    s = ensemble_statistics(inst, cfg.params(beta), AnnealingSchedule.constant(beta, t_end),
                            int(cfg.get("n_traj", 1000)), cfg.seed, times,
                            init=cfg.get("init", "uniform"), threads=cfg.threads)
    return [list(r) for r in zip(s.times, s.error_curve, s.error_stderr, s.mean_energy_curve)]


def run_anneal(cfg: RunConfig):
    rows = []
    spec = cfg.get("instance", {"type": "two_site", "J": 10.0, "lam": 0.5})
    for tau0 in _grid(cfg.get("tau0"), [1.0, 10.0]):
        for N in _Ns(cfg):
            inst = build_instance(spec, N, cfg)
            s = anneal_ensemble(inst, cfg.params(), tau0, int(cfg.get("n_traj", 1000)), cfg.seed,
                                float(cfg.get("start_error", 0.7)), int(cfg.get("n_slices", 400)),
                                threads=cfg.threads)
            rows.append([tau0, N, s.residual_energy, s.residual_stderr])
    return rows


def run_quantum(cfg: RunConfig):
    from .feedback import (FeedbackParams, build_site_operators, evolve_density_matrix,
                           feedback_generator_residual, offdiagonal_mass)

    N, M = _Ns(cfg)[0], int(cfg.get("M", 2))
    J = np.array(cfg.get("J", (np.ones((M, M)) - np.eye(M)).tolist()), dtype=float)
    ops = build_site_operators(N, M)
    fp = FeedbackParams(cfg.get("Gamma", 0.5), cfg.get("eta", 1.0), cfg.get("gamma_meas", 1.0),
                        cfg.get("alpha", 1.0))
    rng = np.random.default_rng(cfg.seed)
    p0 = rng.random(ops.dim)
    rho0 = np.diag(p0 / p0.sum()).astype(complex)
    t = np.linspace(0.0, float(cfg.get("t_end", 5.0)), int(cfg.get("n_points", 51)))
    traj = evolve_density_matrix(ops, fp, J, rho0, t)
    return [[ti, abs(np.trace(r) - 1), offdiagonal_mass(r),
             feedback_generator_residual(J, r, ops, fp.Gamma)] for ti, r in zip(traj.t, traj.rho)]


def run_maxcut(cfg: RunConfig):
    graph_path = cfg.get("graph")
    if graph_path is None:
        raise ConfigError("maxcut needs --graph or a 'graph' entry in the config")
    graph = parse_edge_list(cfg.resolve(graph_path).read_text(encoding="utf-8"))
    best, _, _ = anneal_maxcut(graph, int(cfg.get("N", 4)), float(cfg.get("tau0", 10.0)),
                               int(cfg.get("n_runs", 20)), cfg.seed,
                               threads=cfg.threads)
    opt = brute_force_maxcut(graph)[0] if cfg.get("oracle", False) else math.nan
    return [[Path(graph_path).name, graph.n_vertices, len(graph.edges), best, opt]]


RUNNERS = {name: globals()[f"run_{name}"] for name in EXPERIMENTS}


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def to_csv(experiment: str, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS[experiment])
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def execute(cfg: RunConfig) -> Path:
    t0 = time.perf_counter()
    rows = RUNNERS[cfg.experiment](cfg)
    out = cfg.out or Path(f"{cfg.experiment}.csv")
    out.write_text(to_csv(cfg.experiment, rows), encoding="utf-8")
    meta = {"config": {"experiment": cfg.experiment, **cfg.settings}, "seed": cfg.seed,
            "version": __version__, "wall_seconds": time.perf_counter() - t0}
    out.with_suffix(".json").write_text(json.dumps(meta, indent=2, default=str) + "\n",
                                        encoding="utf-8")
    return out


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bosonic_ising", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int, default=None, help=f"64-bit seed (default {DEFAULT_SEED})")
    common.add_argument("--out", type=Path, help="CSV output path (default <experiment>.csv)")
    common.add_argument("--threads", type=int, default=None, help="worker threads for ensembles")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, parents=[common])
        if name == "maxcut":
            p.add_argument("--graph", type=Path, help="edge-list file")
            p.add_argument("--oracle", action="store_true", help="also report the brute-force optimum")
    return parser


def load_config(args) -> RunConfig:
    settings, base = {}, Path(".")
    if args.config is not None:
        try:
            settings = json.loads(args.config.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON in {args.config}: {e}") from None
        base = args.config.parent
    if getattr(args, "graph", None) is not None:
        settings["graph"] = str(args.graph.resolve())
    if getattr(args, "oracle", False):
        settings["oracle"] = True
    seed = args.seed if args.seed is not None else int(settings.pop("seed", DEFAULT_SEED))
    return RunConfig(args.experiment, settings, seed, args.out, args.threads, base)


def run_cli(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = load_config(args)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        execute(cfg)
    except (ConfigError, KeyError) as e:
        print(f"error: bad configuration: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # any module error is reported, not raised
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run_cli())
