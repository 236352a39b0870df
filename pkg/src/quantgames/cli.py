"""Batch command-line front end.

Every scientific parameter lives in the input JSON; flags only choose files, format,
seed and thread count. Exit codes: 0 ok, 2 invalid input, 3 numerical instability,
64 unknown command.
"""

import argparse
import os
import sys

import numpy as np

from . import classical, protocols, quantum, replicator, thermo
from .errors import IntegrationUnstable, ValidationError
from .io import csv_text, decode_array, dumps, encode_complex, load_json, write_atomic
from .linalg import HADAMARD, PAULI_X

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_UNSTABLE = 3
EXIT_USAGE = 64

THREADS_ENV = "QUANTGAMES_THREADS"


class Table:
    """Tabular result; rendered as CSV, or as a JSON object of columns."""

    def __init__(self, header, rows, extra=None):
        self.header = list(header)
        self.rows = rows
        self.extra = extra or {}

    def to_json(self):
        cols = {h: [r[k] for r in self.rows] for k, h in enumerate(self.header)}
        return {**self.extra, "columns": self.header, "data": cols}


def _require(doc, *keys):
    missing = [k for k in keys if k not in doc]
    if missing:
        raise ValidationError(f"input is missing required key(s): {', '.join(missing)}")


def _num(doc, key, default=None):
    v = doc.get(key, default)
    if v is None:
        raise ValidationError(f"input is missing required key: {key}")
    try:
        return float(v)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{key} must be a number") from exc


# ------------------------------------------------------------------ commands


def cmd_game_analyze(doc, args):
    game = classical.BimatrixGame.from_dict(doc)
    n, m = game.shape
    nash = set(classical.pure_nash_equilibria(game))
    pareto = set(classical.pareto_optimal_outcomes(game))
    cells = []
    for i in range(n):
        for j in range(m):
            cells.append(
                {
                    "row": game.label(i),
                    "col": game.label(j),
                    "payoff_a": float(game.a[i, j]),
                    "payoff_b": float(game.b[j, i]),
                    "nash": (i, j) in nash,
                    "pareto": (i, j) in pareto,
                }
            )
    if args.format == "csv":
        return Table(
            ["row", "col", "payoff_a", "payoff_b", "nash", "pareto"],
            [[c["row"], c["col"], c["payoff_a"], c["payoff_b"], int(c["nash"]), int(c["pareto"])] for c in cells],
        )
    out = {
        "shape": [n, m],
        "symmetric": game.is_symmetric,
        "zero_sum": game.is_zero_sum,
        "cells": cells,
        "pure_nash": [[game.label(i), game.label(j)] for i, j in sorted(nash)],
        "pareto_optimal": [[game.label(i), game.label(j)] for i, j in sorted(pareto)],
    }
    if game.is_symmetric:
        candidates = doc.get("candidates", [])
        out["ess"] = {}
        for i in range(n):
            res = classical.is_ess(game, classical.pure(i, n), candidates)
            out["ess"][game.label(i)] = {
                "ess": res.is_ess,
                "violator": None if res.violator is None else res.violator.tolist(),
                "reason": res.reason,
            }
    if game.shape == (2, 2):
        mixed = classical.mixed_nash_2x2(game)
        out["mixed_nash"] = None if mixed is None else {"p": mixed[0], "q": mixed[1]}
        if game.is_zero_sum:
            value, (p, q) = classical.minimax_value(game)
            out["minimax"] = {"value": value, "row_strategy": p, "col_strategy": q}
    return out


def cmd_replicator(doc, args):
    _require(doc, "A", "x0", "t_end")
    traj = replicator.integrate(
        doc["A"],
        doc["x0"],
        _num(doc, "t_end"),
        _num(doc, "dt", 1e-3),
        int(doc.get("store_every", 1)),
    )
    n = traj.states.shape[1]
    header = ["t"] + [f"x_{i + 1}" for i in range(n)] + ["entropy"]
    rows = [[t, *x, h] for t, x, h in zip(traj.times, traj.states, traj.entropy)]
    return Table(header, rows, {"entropy_unit": "nats", "final": traj.final, "max_drift": traj.max_drift})


def cmd_lax_check(doc, args):
    rng = np.random.default_rng(args.seed)
    samples = int(doc.get("samples", 1000))
    sizes = [int(s) for s in doc.get("sizes", [2, 3, 4, 5])]
    scale = float(doc.get("payoff_scale", 10.0))
    rows = []
    worst = dict.fromkeys(["diag", "trace", "idempotence", "symmetry", "antisymmetry", "lax_trace"], 0.0)
    for k in range(samples):
        n = sizes[k % len(sizes)]
        a = rng.uniform(-scale, scale, (n, n))
        x = rng.dirichlet(np.ones(n))
        xm, _, lam = replicator.lax_decomposition(a, x)
        lax = lam @ xm - xm @ lam
        diag = float(np.max(np.abs(np.diag(lax) - replicator.replicator_rhs(a, x))))
        worst["diag"] = max(worst["diag"], diag)
        worst["trace"] = max(worst["trace"], abs(np.trace(xm) - 1))
        worst["idempotence"] = max(worst["idempotence"], float(np.max(np.abs(xm @ xm - xm))))
        worst["symmetry"] = max(worst["symmetry"], float(np.max(np.abs(xm - xm.T))))
        worst["antisymmetry"] = max(worst["antisymmetry"], float(np.max(np.abs(lam + lam.T))))
        worst["lax_trace"] = max(worst["lax_trace"], abs(np.trace(lax)))
        rows.append([k, n, diag])
    extra = {
        "samples": samples,
        "seed": args.seed,
        "max_abs_diag_error": worst["diag"],
        "max_trace_error": worst["trace"],
        "max_idempotence_error": worst["idempotence"],
        "max_symmetry_error": worst["symmetry"],
        "max_lambda_antisymmetry_error": worst["antisymmetry"],
        "max_lax_trace": worst["lax_trace"],
        "passed": worst["diag"] < 1e-10,
    }
    if args.format == "csv":
        return Table(["sample", "n", "diag_error"], rows)
    return extra


def _initial_density(doc):
    if "rho0" in doc:
        return decode_array(doc["rho0"], 2, "rho0")
    if "psi0" in doc:
        return quantum.projector(decode_array(doc["psi0"], 1, "psi0"))
    raise ValidationError("input needs 'rho0' or 'psi0'")


def cmd_quantum_evolve(doc, args):
    _require(doc, "H", "t_end")
    h = decode_array(doc["H"], 2, "H")
    traj = quantum.integrate_von_neumann(
        h,
        _initial_density(doc),
        _num(doc, "t_end"),
        _num(doc, "dt", 1e-3),
        _num(doc, "hbar", 1.0),
        int(doc.get("store_every", 1)),
    )
    entries = [tuple(int(v) for v in e) for e in doc.get("entries", [])]
    dim = traj.states.shape[1]
    if any(not (0 <= i < dim and 0 <= j < dim) for i, j in entries):
        raise ValidationError("entries index outside the matrix")
    s, pur = traj.entropy(), traj.purity()
    header = ["t", "S", "purity"]
    for i, j in entries:
        header += [f"re_rho_{i}{j}", f"im_rho_{i}{j}"]
    rows = []
    for k, t in enumerate(traj.times):
        row = [t, s[k], pur[k]]
        for i, j in entries:
            z = traj.states[k, i, j]
            row += [z.real, z.imag]
        rows.append(row)
    final = traj.states[-1]
    extra = {
        "final_rho": encode_complex(final),
        "final_trace": float(np.trace(final).real),
        "entropy_unit": "nats",
    }
    return Table(header, rows, extra)


_MOVES = {"hadamard": HADAMARD, "identity": np.eye(2), "flip": PAULI_X}


def _move(v):
    if isinstance(v, str):
        if v.lower() not in _MOVES:
            raise ValidationError(f"unknown move {v!r}; use one of {sorted(_MOVES)} or a matrix")
        return _MOVES[v.lower()]
    return decode_array(v, 2, "move")


def cmd_pennyflip(doc, args):
    moves = doc.get("q_moves", ["hadamard", "hadamard"])
    if len(moves) != 2:
        raise ValidationError("q_moves needs exactly two entries")
    u1, u3 = (_move(m) for m in moves)
    ps = doc.get("p", [0.0, 0.25, 0.5, 0.75, 1.0])
    ps = ps if isinstance(ps, list) else [ps]
    rho0 = np.array([[1, 0], [0, 0]], dtype=complex)
    rows = []
    for p in ps:
        rho3 = protocols.pennyflip_round(rho0, (u1, u3), float(p))
        rows.append([float(p), protocols.heads_probability(rho3)])
    return Table(["p", "q_win_probability"], rows)


def _ewl_spec(doc):
    pay = doc.get("payoffs", {})
    return protocols.EwlSpec(
        r=float(pay.get("r", 3)),
        s=float(pay.get("s", 0)),
        t=float(pay.get("t", 5)),
        p=float(pay.get("p", 1)),
        gamma=_num(doc, "gamma", np.pi / 2),
    )


def cmd_ewl(doc, args):
    spec = _ewl_spec(doc)
    if args.format == "csv":
        surf = doc.get("surface", {})
        table = protocols.ewl_payoff_surface(
            spec,
            int(surf.get("resolution", 64)),
            float(surf.get("phi_a", 0.0)),
            float(surf.get("phi_b", 0.0)),
        )
        return Table(["theta_a", "theta_b", "P_A", "P_B"], table.tolist())
    grid = int(doc.get("grid", 64))
    eqs = protocols.ewl_nash_scan(spec, grid, float(doc.get("tol", 1e-6)), args.threads)
    named = {}
    for la, sa in protocols.NAMED.items():
        for lb, sb in protocols.NAMED.items():
            named[la + lb] = list(protocols.ewl_payoffs(spec, sa, sb))
    out = {
        "gamma": spec.gamma,
        "grid": grid,
        "equilibria": [e.to_dict() for e in eqs],
        "named_payoffs": named,
    }
    if "invasion" in doc:
        inv = doc["invasion"]
        eps = float(inv.get("epsilon", 1e-6))
        theta = float(inv.get("theta", 0.0))
        phi_star = protocols.invasion_threshold(spec, theta=theta, epsilon=eps)
        out["invasion"] = {"theta": theta, "epsilon": eps, "phi_threshold": phi_star}
    return out


def _mw_spec(doc):
    _require(doc, "initial", "coeffs_a", "coeffs_b")
    return protocols.MwSpec(decode_array(doc["initial"], 1, "initial"), doc["coeffs_a"], doc["coeffs_b"])


def cmd_mw(doc, args):
    spec = _mw_spec(doc)
    grid = int(doc.get("grid", 101))
    if args.format == "csv":
        ps, pa, pb = protocols.mw_payoff_grids(spec, grid)
        rows = [[ps[i], ps[j], pa[i, j], pb[i, j]] for i in range(grid) for j in range(grid)]
        return Table(["p", "q", "P_A", "P_B"], rows)
    eqs = protocols.mw_nash_scan(spec, grid, float(doc.get("tol", 1e-9)))
    return {"grid": grid, "equilibria": [e.to_dict() for e in eqs]}


def cmd_entropy(doc, args):
    out = {"unit": "nats"}
    if "rho" in doc:
        rho = quantum.as_density(decode_array(doc["rho"], 2, "rho"))
        out["von_neumann_entropy"] = quantum.von_neumann_entropy(rho)
        out["purity"] = float(np.trace(rho @ rho).real)
        if "dims" in doc:
            out["conditional_entropy"] = quantum.quantum_conditional_entropy(rho, doc["dims"])
        rho_dot = None
        if "rho_dot" in doc:
            rho_dot = decode_array(doc["rho_dot"], 2, "rho_dot")
        elif "H" in doc:
            rho_dot = quantum.von_neumann_rhs(decode_array(doc["H"], 2, "H"), rho, _num(doc, "hbar", 1.0))
        if rho_dot is not None:
            out["entropy_rate"] = quantum.entropy_rate_series(rho, rho_dot).to_dict()
    if "psi" in doc:
        _require(doc, "dims")
        psi = decode_array(doc["psi"], 1, "psi")
        res = quantum.separability_check(psi, doc["dims"])
        out["separable"] = res.separable
        out["schmidt_coefficients"] = res.coefficients
        out["pure_state_conditional_entropy"] = quantum.quantum_conditional_entropy(
            quantum.projector(psi), doc["dims"]
        )
    if "joint" in doc:
        base = doc.get("base", "e")
        out["game_entropies"] = replicator.game_entropy_suite(doc["joint"], 2 if base == 2 else np.e)
    if "x" in doc:
        out["shannon_entropy"] = replicator.shannon_entropy(replicator.as_frequencies(doc["x"]))
        if "y" in doc:
            out["relative_entropy_bits"] = replicator.relative_entropy(doc["x"], doc["y"])
        if "A" in doc:
            out["shannon_entropy_rate"] = replicator.shannon_entropy_rate(doc["A"], doc["x"])
    if len(out) == 1:
        raise ValidationError("entropy input needs at least one of rho, psi, joint, x")
    return out


def cmd_gibbs(doc, args):
    _require(doc, "energies")
    if "betas" in doc:
        rows = thermo.beta_sweep(doc["energies"], [float(b) for b in doc["betas"]])
        return Table(["beta", "logZ", "meanE", "varE", "S"], rows.tolist())
    ens = thermo.GibbsEnsemble(doc["energies"], _num(doc, "beta"))
    log_z, mean, var = thermo.partition_data(ens)
    s_direct, s_identity = thermo.entropy_identity_check(ens)
    out = {
        "beta": ens.beta,
        "temperature": "Infinity" if ens.beta == 0 else 1 / ens.beta,
        "populations": thermo.gibbs_state(ens),
        "logZ": log_z,
        "meanE": mean,
        "varE": var,
        "S": s_direct,
        "S_identity": s_identity,
    }
    if ens.beta > 0:
        out["derivatives"] = thermo.entropy_derivatives(ens, doc.get("h"))
    if args.format == "csv":
        return Table(["beta", "logZ", "meanE", "varE", "S"], [[ens.beta, log_z, mean, var, s_direct]])
    return out


COMMANDS = {
    "game-analyze": (cmd_game_analyze, "pure Nash, Pareto, ESS and minimax analysis of a bimatrix game"),
    "replicator": (cmd_replicator, "RK4 trajectory of the replicator equation"),
    "lax-check": (cmd_lax_check, "randomized check that the Lax form reproduces the replicator field"),
    "quantum-evolve": (cmd_quantum_evolve, "RK4 integration of the von Neumann equation"),
    "pennyflip": (cmd_pennyflip, "quantum penny-flip win probabilities"),
    "ewl": (cmd_ewl, "entangled prisoner's dilemma equilibrium scan or payoff surface"),
    "mw": (cmd_mw, "identity/flip quantization scheme equilibrium scan or payoff surface"),
    "entropy": (cmd_entropy, "von Neumann, Shannon, conditional and relative entropies"),
    "gibbs": (cmd_gibbs, "Gibbs ensemble statistics and entropy derivatives"),
}

NO_INPUT_OK = {"lax-check", "pennyflip"}


def build_parser():
    parser = argparse.ArgumentParser(prog="quantgames", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    default_threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", "-i", help="JSON configuration file")
        p.add_argument("--output", "-o", help="result file (default: stdout)")
        p.add_argument("--format", "-f", choices=["json", "csv"], default="json")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
        p.add_argument(
            "--threads", type=int, default=default_threads, help=f"worker threads (env {THREADS_ENV})"
        )
    return parser


def run(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if not argv or argv[0] not in COMMANDS:
        if argv and argv[0] in ("-h", "--help"):
            parser.print_help()
            return EXIT_OK
        parser.print_usage(sys.stderr)
        print(f"quantgames: unknown command {argv[0]!r}" if argv else "quantgames: no command", file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    func = COMMANDS[args.command][0]
    try:
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        if args.input is None:
            if args.command not in NO_INPUT_OK:
                raise ValidationError(f"{args.command} needs --input")
            doc = {}
        else:
            doc = load_json(args.input)
        result = func(doc, args)
        if isinstance(result, Table):
            text = csv_text(result.header, result.rows) if args.format == "csv" else dumps(result.to_json())
        elif args.format == "csv":
            raise ValidationError(f"{args.command} has no CSV form for this input")
        else:
            text = dumps(result)
    except IntegrationUnstable as exc:
        print(f"quantgames {args.command}: numerical instability: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (ValueError, TypeError, KeyError, IndexError) as exc:
        # ValidationError plus the shape/type errors numpy raises on malformed JSON values
        print(f"quantgames {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.output:
        try:
            write_atomic(args.output, text)
        except OSError as exc:
            print(f"quantgames {args.command}: cannot write {args.output}: {exc.strerror}", file=sys.stderr)
            return EXIT_INVALID
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main():
    sys.exit(run())
