"""Command-line experiment harness.

Every command is configured by a flat key=value file (``--config``) plus
``--set key=value`` overrides and the ``--seed``/``--out`` shortcuts; unknown
keys are rejected. Runs are pure functions of (config, input files, seed):
re-running with the same inputs reproduces every output byte.
"""

import argparse
import os
import sys

import numpy as np

from . import convex, io
from .adversarial import CostWeights, build_grid_game, solve_grid_game
from .maps import jl_check, make_map
from .quadratic import (
    QuadGame2P,
    ReductionPair,
    closed_form_ne,
    pd_preservation_probe,
    reduce_game,
)
from .svm import LabeledDataset, solve_dual


def gen_synth(n, d, separation, seed, noise_scale=1.0) -> LabeledDataset:
    """Two-Gaussian dataset with class means exactly +/-(separation/2) e1.

    Each class draws n/2 unit-covariance points (scaled by ``noise_scale``)
    that are recentred onto the target mean, so the sample class means differ
    by exactly separation * e1.
    """
    n, d = int(n), int(d)
    if n % 2 != 0:
        raise ValueError("n must be even (one half per class)")
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    if separation <= 0.0:
        raise ValueError("separation must be positive")
    rng = np.random.default_rng(int(seed))
    Z = rng.standard_normal((n, d))
    half = n // 2
    mu = np.zeros(d)
    mu[0] = separation / 2.0
    X = np.empty((n, d))
    X[:half] = noise_scale * (Z[:half] - Z[:half].mean(axis=0)) + mu
    X[half:] = noise_scale * (Z[half:] - Z[half:].mean(axis=0)) - mu
    y = np.concatenate([np.ones(half), -np.ones(half)])
    return LabeledDataset(X=X, y=y)


# ---------------------------------------------------------------------------
# Config schema per command: key -> (parser, default); None means required.

def _bool(s):
    if s in ("true", "1", "yes"):
        return True
    if s in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _int_list(s):
    return [int(tok) for tok in s.split(",") if tok.strip()]


def _float_list(s):
    return [float(tok) for tok in s.split(",") if tok.strip()]


COMMAND_KEYS = {
    "jl-check": {
        "d": (int, 512), "r": (int, 128), "gamma": (float, 0.5),
        "points": (int, 1000), "kind": (str, "gaussian"),
    },
    "quad-demo": {"dim": (int, 50)},
    "reduce-quad": {
        "game": (str, ""), "dim": (int, 50), "k": (int, 10),
        "kind": (str, "gaussian"), "same_map": (_bool, True), "game_out": (str, ""),
    },
    "convex-demo": {
        "family": (str, "coupled"), "dim": (int, 5), "coupling": (float, 0.5),
        "tol": (float, 1e-7), "max_rounds": (int, 100),
        "antisymmetric": (_bool, False),
    },
    "svm-train": {
        "data": (str, ""), "n": (int, 200), "d": (int, 50),
        "separation": (float, 4.0), "C": (float, 1.0),
    },
    "adv-game": {
        "data": (str, ""), "n": (int, 200), "d": (int, 50),
        "separation": (float, 4.0), "C": (float, 1.0),
        "defender_r_list": (_int_list, [25]), "defender_s_list": (_int_list, [150]),
        "attacker_budget_list": (_float_list, [0.1]), "attacker_k_list": (_int_list, [5]),
        "c_D_R": (float, 0.0), "c_D_S": (float, 0.0), "c_A": (float, 0.0),
        "replicates": (int, 1), "rho": (int, 0),
    },
}

COMMANDS = tuple(COMMAND_KEYS)


class RunConfig:
    """Validated configuration of one CLI run."""

    def __init__(self, command, raw):
        if command not in COMMAND_KEYS:
            raise ValueError(f"unknown command {command!r}")
        schema = COMMAND_KEYS[command]
        self.command = command
        self.seed = 0
        self.out = "." if command == "adv-game" else "report.csv"
        params = {key: default for key, (_, default) in schema.items()}
        for key, value in raw.items():
            if key == "seed":
                self.seed = int(value)
            elif key == "out":
                self.out = str(value)
            elif key in schema:
                params[key] = schema[key][0](value)
            else:
                raise ValueError(f"unknown config key {key!r} for command {command}")
        self.params = params
        self._check_ranges()

    def _check_ranges(self):
        p = self.params
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.command == "jl-check":
            if p["d"] < 1 or not 1 <= p["r"] <= p["d"]:
                raise ValueError("need 1 <= r <= d")
            if not 0.0 < p["gamma"] < 1.0:
                raise ValueError("gamma must lie strictly between 0 and 1")
            if p["points"] < 2:
                raise ValueError("points must be at least 2")
            if p["kind"] not in ("gaussian", "sign"):
                raise ValueError("kind must be gaussian or sign")
        elif self.command == "quad-demo":
            if p["dim"] < 1:
                raise ValueError("dim must be at least 1")
        elif self.command == "reduce-quad":
            if p["dim"] < 1 or not 1 <= p["k"] <= p["dim"]:
                raise ValueError("need 1 <= k <= dim")
            if p["kind"] not in ("gaussian", "sign", "selection"):
                raise ValueError("kind must be gaussian, sign or selection")
        elif self.command == "convex-demo":
            if p["family"] not in convex.GAME_FAMILIES:
                raise ValueError(
                    f"family must be one of {sorted(convex.GAME_FAMILIES)}"
                )
            if p["dim"] < 1 or p["tol"] <= 0.0 or p["max_rounds"] < 1:
                raise ValueError("need dim >= 1, tol > 0, max_rounds >= 1")
        elif self.command in ("svm-train", "adv-game"):
            if p["C"] <= 0.0:
                raise ValueError("C must be positive")
            if not p["data"]:
                if p["n"] < 2 or p["n"] % 2 != 0 or p["d"] < 1 or p["separation"] <= 0:
                    raise ValueError("synthetic data needs even n >= 2, d >= 1, separation > 0")
            if self.command == "adv-game":
                if p["replicates"] < 1:
                    raise ValueError("replicates must be at least 1")
                if p["rho"] < 0:
                    raise ValueError("rho must be 0 (auto) or positive")
                for key in ("defender_r_list", "defender_s_list",
                            "attacker_budget_list", "attacker_k_list"):
                    if not p[key]:
                        raise ValueError(f"{key} must be nonempty")


def _seed_words(seed, count):
    return [int(w) for w in np.random.SeedSequence(int(seed)).generate_state(count, dtype=np.uint64)]


def _load_or_synth(params, seed):
    if params["data"]:
        return io.load_dataset(params["data"])
    return gen_synth(params["n"], params["d"], params["separation"], seed)


def _random_pd_game(dim, seed):
    rng = np.random.default_rng(int(seed))
    def pd_matrix():
        B = rng.standard_normal((dim, dim))
        return B @ B.T / dim + 0.5 * np.eye(dim)
    Q1, Q2 = pd_matrix(), pd_matrix()
    r1, r2 = rng.standard_normal(dim), rng.standard_normal(dim)
    return QuadGame2P(Q1=Q1, Q2=Q2, r1=r1, r2=r2, v1=0.0, v2=0.0, dim=dim)


def _run_jl_check(cfg):
    p = cfg.params
    points_seed, map_seed = _seed_words(cfg.seed, 2)
    points = np.random.default_rng(points_seed).standard_normal((p["points"], p["d"]))
    m = make_map(p["kind"], p["r"], p["d"], map_seed)
    rep = jl_check(points, m, p["gamma"])
    row = {
        "d": p["d"], "r": p["r"], "gamma": p["gamma"], "kind": p["kind"],
        "points": p["points"], "seed": cfg.seed,
        "pairs_tested": rep.pairs_tested, "pairs_preserved": rep.pairs_preserved,
        "empirical_fraction": rep.empirical_fraction,
        "theoretical_bound": rep.theoretical_bound,
    }
    io.write_report(cfg.out, cfg.command, list(row), [row])


def _run_quad_demo(cfg):
    dim = cfg.params["dim"]
    game = _random_pd_game(dim, cfg.seed)
    x1, x2 = closed_form_ne(game)
    row = {
        "dim": dim, "seed": cfg.seed, "pd_ok": game.pd_ok,
        "residual1": float(np.linalg.norm(game.Q2 @ x1 - game.r2) / (1.0 + np.linalg.norm(game.r2))),
        "residual2": float(np.linalg.norm(game.Q1 @ x2 - game.r1) / (1.0 + np.linalg.norm(game.r1))),
        "x1_norm": float(np.linalg.norm(x1)), "x2_norm": float(np.linalg.norm(x2)),
    }
    io.write_report(cfg.out, cfg.command, list(row), [row])


def _run_reduce_quad(cfg):
    p = cfg.params
    game = io.load_quad_game(p["game"]) if p["game"] else _random_pd_game(p["dim"], cfg.seed)
    seed1, seed2 = _seed_words(cfg.seed, 2)
    A1 = make_map(p["kind"], p["k"], game.dim, seed1)
    A2 = A1 if p["same_map"] else make_map(p["kind"], p["k"], game.dim, seed2)
    maps = ReductionPair(A1=A1, A2=A2)
    reduced = reduce_game(game, maps)
    if game.pd_ok:
        probe = pd_preservation_probe(game.Q1, maps)
        reduced_pd, min_eig = probe.reduced_pd, probe.min_eig
    else:
        reduced_pd, min_eig = False, float("nan")
    if p["game_out"]:
        io.save_quad_game(reduced, p["game_out"])
    row = {
        "dim": game.dim, "k": p["k"], "kind": p["kind"], "seed": cfg.seed,
        "same_map": maps.same_map,
        "lift_residual1": reduced.lift_residuals[0],
        "lift_residual2": reduced.lift_residuals[1],
        "reduced_pd": reduced_pd, "min_eig": min_eig,
    }
    io.write_report(cfg.out, cfg.command, list(row), [row])


def _run_convex_demo(cfg):
    p = cfg.params
    dim = p["dim"]
    rng = np.random.default_rng(cfg.seed)
    if p["family"] == "decoupled":
        game = convex.decoupled_quadratic_game([rng.standard_normal(dim) for _ in range(2)])
    elif p["family"] == "coupled":
        game = convex.coupled_quadratic_game(
            rng.standard_normal(dim), rng.standard_normal(dim),
            p["coupling"], antisymmetric=p["antisymmetric"],
        )
    else:
        game = convex.logsumexp_game(dim, p["coupling"])
    init = [np.zeros(dim), np.zeros(dim)]
    result = convex.ne_solve_best_response(game, init, p["tol"], p["max_rounds"])
    probe_map = make_map("gaussian", max(1, dim // 2), dim, cfg.seed)
    zeros = np.zeros(dim)
    probe = convex.convexity_probe(
        lambda x: game.costs[0]([x, zeros]), probe_map, samples=200, seed=cfg.seed
    )
    row = {
        "family": p["family"], "dim": dim, "coupling": p["coupling"], "seed": cfg.seed,
        "rounds": result.rounds, "residual": result.residual,
        "converged": result.converged,
        "stationarity": convex.projected_gradient_residual(game, list(result.solution)),
        "original_convex_evidence": probe["original_convex_evidence"],
        "composed_convex_evidence": probe["composed_convex_evidence"],
    }
    io.write_report(cfg.out, cfg.command, list(row), [row])


def _run_svm_train(cfg):
    p = cfg.params
    data = _load_or_synth(p, cfg.seed)
    sol = solve_dual(data, p["C"])
    labels = np.where(data.X @ sol.w + sol.bias >= 0.0, 1.0, -1.0)
    row = {
        "n": data.n, "d": data.d, "C": p["C"], "seed": cfg.seed,
        "objective": sol.objective, "margin": sol.margin, "bias": sol.bias,
        "n_support": int(sol.support_indices.size),
        "iterations": sol.solver_iterations, "converged": sol.converged,
        "train_accuracy": float(np.mean(labels == data.y)),
    }
    io.write_report(cfg.out, cfg.command, list(row), [row])


def _run_adv_game(cfg):
    p = cfg.params
    data = _load_or_synth(p, cfg.seed)
    defender_cells = [(r, s) for r in p["defender_r_list"] for s in p["defender_s_list"]]
    attacker_cells = [(b, k) for b in p["attacker_budget_list"] for k in p["attacker_k_list"]]
    weights = CostWeights(c_D_R=p["c_D_R"], c_D_S=p["c_D_S"], c_A=p["c_A"])
    game = build_grid_game(
        data, p["C"], defender_cells, attacker_cells, weights,
        replicates=p["replicates"], seed=cfg.seed,
        rho=p["rho"] if p["rho"] > 0 else None,
    )
    eq = solve_grid_game(game)
    os.makedirs(cfg.out, exist_ok=True)

    ne_set = set(eq.pure_ne)
    eq_rows = []
    for i, (r, s) in enumerate(game.defender_cells):
        for j, (budget, k) in enumerate(game.attacker_cells):
            eq_rows.append({
                "def_index": i, "att_index": j, "r": r, "s": s,
                "budget": budget, "k": k,
                "payoff_d": float(game.payoff_D[i, j]),
                "payoff_a": float(game.payoff_A[i, j]),
                "is_pure_ne": (i, j) in ne_set,
                "is_security_pair": (i, j) == eq.security_strategies,
            })
    io.write_report(
        os.path.join(cfg.out, "equilibrium.csv"), cfg.command, list(eq_rows[0]), eq_rows
    )

    margin_rows = []
    for stat in game.margin_rows:
        i, j = stat["def_index"], stat["att_index"]
        r, s = game.defender_cells[i]
        budget, k = game.attacker_cells[j]
        margin_rows.append({
            "def_index": i, "att_index": j, "r": r, "s": s, "budget": budget, "k": k,
            "beta_mean": stat["beta"], "phi_mean": stat["phi"],
            "delta_mean": stat["delta"], "gamma_star_mean": stat["gamma_star"],
            "gamma_tilde_mean": stat["gamma_tilde"],
            "bound_holds_rate": stat["bound_holds"],
        })
    io.write_report(
        os.path.join(cfg.out, "margins.csv"), cfg.command, list(margin_rows[0]), margin_rows
    )


_RUNNERS = {
    "jl-check": _run_jl_check,
    "quad-demo": _run_quad_demo,
    "reduce-quad": _run_reduce_quad,
    "convex-demo": _run_convex_demo,
    "svm-train": _run_svm_train,
    "adv-game": _run_adv_game,
}


def run(config: RunConfig) -> int:
    _RUNNERS[config.command](config)
    return 0


def build_config(command, config_path=None, overrides=(), seed=None, out=None) -> RunConfig:
    raw = {}
    if config_path:
        raw.update(io.load_keyvalues(config_path))
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        raw[key.strip()] = value.strip()
    if seed is not None:
        raw["seed"] = str(seed)
    if out is not None:
        raw["out"] = out
    return RunConfig(command, raw)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lsgames",
        description="Seeded experiments on reductions of large-scale strategic games.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        cp = sub.add_parser(command)
        cp.add_argument("--config", default=None, help="flat key=value config file")
        cp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key")
        cp.add_argument("--seed", type=int, default=None)
        cp.add_argument("--out", default=None,
                        help="report path (directory for adv-game)")
    args = parser.parse_args(argv)
    try:
        config = build_config(args.command, args.config, args.set, args.seed, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}".replace("\n", " "), file=sys.stderr)
        return 2
    try:
        return run(config)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}".replace("\n", " "), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
