"""Command-line front end.

    rxnsim check NETWORK.rxn
    rxnsim simulate NETWORK.rxn --t-end 10 [--method bdf] [--output out.csv]
    rxnsim jacobian NETWORK.rxn
    rxnsim conservation NETWORK.rxn

Data goes to standard output (or ``--output``); diagnostics and solver
statistics go to standard error.  Exit codes: 0 success, 1 parse or
validation failure, 2 solver failure, 64 bad command-line usage.
"""
from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path

import numpy as np

from .conservation import conservation_laws
from .errors import DomainError, NetworkError, SolverError
from .integrate import METHODS, SolverOptions, integrate
from .kinetics import eval_jacobian, eval_rhs
from .network import GENERALIZED, compile_network
from .parser import parse_with_diagnostics

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER = 2
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def format_float(v: float) -> str:
    """Shortest round-trip decimal, without a trailing '.0' or exponent padding."""
    r = repr(float(v))
    if "e" in r:
        mant, exp = r.split("e")
        if mant.endswith(".0"):
            mant = mant[:-2]
        sign = "-" if exp.startswith("-") else ""
        return f"{mant}e{sign}{exp.lstrip('+-').lstrip('0') or '0'}"
    if r.endswith(".0"):
        r = r[:-2]
    return r


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rxnsim", description="Mass-action reaction network simulator")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    sim = sub.add_parser("simulate", help="integrate the network and write a CSV trajectory")
    sim.add_argument("network")
    sim.add_argument("--t0", type=float, default=0.0)
    sim.add_argument("--t-end", type=float, required=True)
    sim.add_argument("--rtol", type=float, default=1e-6)
    sim.add_argument("--atol", type=float, default=1e-9)
    sim.add_argument("--method", choices=METHODS, default="rosenbrock4")
    sim.add_argument("--max-steps", type=_positive_int, default=100_000)
    sim.add_argument("--output", default=None, help="CSV path (default: standard output)")
    sim.add_argument("--output-points", type=_positive_int, default=200)
    sim.add_argument("--raw-steps", action="store_true", help="emit every accepted step")

    for name, text in (
        ("check", "parse and compile; print a summary"),
        ("jacobian", "print the Jacobian at the initial state with a finite-difference check"),
        ("conservation", "print linear conservation laws"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("network")
    return p


def _load(path: str, err):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        print(f"{path}: error: cannot read network: {exc}", file=err)
        return None, None
    spec, diags = parse_with_diagnostics(text)
    for d in diags:
        print(f"{path}:{d}", file=err)
    if spec is None:
        return None, None
    try:
        net = compile_network(spec, mode=GENERALIZED)
    except NetworkError as exc:
        print(f"{path}: error: {exc}", file=err)
        return spec, None
    return spec, net


def _side(spec, terms):
    if not terms:
        return "0"
    return " + ".join(
        spec.species[i] if c == 1 else f"{format_float(c)} {spec.species[i]}" for i, c in terms
    )


def _cmd_check(args, out, err) -> int:
    spec, net = _load(args.network, err)
    if net is None:
        return EXIT_INVALID
    out.write(f"N={spec.n_species} M={spec.n_reactions}\n")
    out.write("species:\n")
    for i, (name, x) in enumerate(zip(spec.species, spec.initial), start=1):
        out.write(f"  {i} {name} init={format_float(x)}\n")
    out.write("reactions:\n")
    for m, rxn in enumerate(spec.reactions, start=1):
        line = f"  R{m}: {_side(spec, rxn.reactants)} -> {_side(spec, rxn.products)}  k={format_float(rxn.rate)}"
        if rxn.modifiers:
            line += "  scale=" + ",".join(f"{spec.species[i]}*{format_float(f)}" for i, f in rxn.modifiers)
        out.write(line + "\n")
    return EXIT_OK


def finite_difference_jacobian(net, x) -> np.ndarray:
    """Central differences of the RHS with step 1e-6 * max(1, |x_j|)."""
    x = np.asarray(x, dtype=float)
    J = np.empty((x.size, x.size))
    for j in range(x.size):
        h = 1e-6 * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        J[:, j] = (eval_rhs(net, xp) - eval_rhs(net, xm)) / (2 * h)
    return J


def jacobian_deviation(J: np.ndarray, fd: np.ndarray) -> tuple[float, float]:
    """Max absolute and max relative deviation between two Jacobians.

    Relative deviations are taken against ``max(|J|, |fd|)`` entrywise,
    floored at 1e-12 times the largest entry so round-off in structurally
    zero entries does not count as a 100% error.
    """
    diff = np.abs(J - fd)
    floor = 1e-12 * max(np.abs(J).max(initial=0.0), np.abs(fd).max(initial=0.0), 1e-300)
    denom = np.maximum(np.maximum(np.abs(J), np.abs(fd)), floor)
    return float(diff.max(initial=0.0)), float((diff / denom).max(initial=0.0))


def _cmd_jacobian(args, out, err) -> int:
    spec, net = _load(args.network, err)
    if net is None:
        return EXIT_INVALID
    x = np.array(spec.initial)
    try:
        J = eval_jacobian(net, x).toarray()
        fd = finite_difference_jacobian(net, x)
    except DomainError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INVALID
    out.write("," + ",".join(spec.species) + "\n")
    for name, row in zip(spec.species, J):
        out.write(name + "," + ",".join(format_float(v) for v in row) + "\n")
    abs_dev, rel_dev = jacobian_deviation(J, fd)
    out.write(f"# finite-difference check: max_abs_dev={abs_dev:.3e} max_rel_dev={rel_dev:.3e}\n")
    return EXIT_OK


def _cmd_conservation(args, out, err) -> int:
    spec, net = _load(args.network, err)
    if net is None:
        return EXIT_INVALID
    basis = conservation_laws(net)
    if not len(basis):
        print("no linear conservation laws", file=err)
    for i in range(len(basis)):
        out.write(basis.format(i) + "\n")
    return EXIT_OK


def _cmd_simulate(args, out, err) -> int:
    if not args.t_end > args.t0:
        raise UsageError("rxnsim simulate: error: --t-end must be greater than --t0")
    try:
        opts = SolverOptions(
            method=args.method,
            rtol=args.rtol,
            atol=args.atol,
            max_steps=args.max_steps,
            output="steps" if args.raw_steps else "dense",
            output_points=max(args.output_points, 2),
        )
    except ValueError as exc:
        raise UsageError(f"rxnsim simulate: error: {exc}") from None
    spec, net = _load(args.network, err)
    if net is None:
        return EXIT_INVALID
    try:
        traj = integrate(net, spec.initial, args.t0, args.t_end, opts)
    except (SolverError, DomainError) as exc:
        t = getattr(exc, "t", None)
        where = f" (time reached: {format_float(t)})" if t is not None else ""
        print(f"error: solver failure: {type(exc).__name__}: {exc}{where}", file=err)
        return EXIT_SOLVER

    buf = io.StringIO()
    buf.write("t," + ",".join(spec.species) + "\n")
    for t, row in zip(traj.times, traj.states):
        buf.write(format_float(t) + "," + ",".join(format_float(v) for v in row) + "\n")
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        out.write(buf.getvalue())
    st = traj.stats
    print(
        f"method={traj.method} samples={traj.times.size} steps_accepted={st.steps_accepted} "
        f"steps_rejected={st.steps_rejected} rhs_evals={st.rhs_evals} jac_evals={st.jac_evals} "
        f"lu_factorizations={st.lu_factorizations}",
        file=err,
    )
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "check": _cmd_check,
    "jacobian": _cmd_jacobian,
    "conservation": _cmd_conservation,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args, out, err)
    except UsageError as exc:
        print(exc, file=err)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
