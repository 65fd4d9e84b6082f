"""Command-line entry point: reproducible experiment pipelines.

Each figure-facing subcommand writes '#'-commented CSV plus a JSON run
manifest.  Subcommands:

  spectrum   dense Liouvillian spectrum CSV (eigenvalue cluster figures)
  mcm        most coherent mode eigenvalue + checkpoint
  meanfield  mean-field magnetization heatmap (phase-diagram figures)
  thermal    finite-beta magnetization heatmap at fixed N
  binder     Binder-cumulant crossings and extrapolated critical field
  dynamics   cat-state fidelity trajectory and its frequency spectrum
  unravel    stochastic-unraveling vs master-equation comparison
  verify     structural invariant suite; exit 0 only if everything passes
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .params import Frame, LiouvilleParams

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_USAGE = 2

_FLOAT_FMT = "%.17g"


@dataclass
class ExperimentConfig:
    subcommand: str
    options: dict = field(default_factory=dict)

    def header_lines(self) -> list[str]:
        lines = [f"# dissipative-ising {__version__}", f"# subcommand: {self.subcommand}"]
        for key in sorted(self.options):
            lines.append(f"# {key} = {self.options[key]}")
        return lines


def _write_csv(path: str, config: ExperimentConfig, columns: list[str], rows) -> None:
    with open(path, "w") as fh:
        for line in config.header_lines():
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(
                ",".join(
                    _FLOAT_FMT % v if isinstance(v, float) else str(v) for v in row
                )
                + "\n"
            )


def _write_manifest(outdir: str, config: ExperimentConfig, started: float, extra: dict) -> None:
    manifest = {
        "version": __version__,
        "subcommand": config.subcommand,
        "config": {k: repr(v) for k, v in sorted(config.options.items())},
        "wall_time_s": time.time() - started,
        **extra,
    }
    with open(os.path.join(outdir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)


def _parse_beta(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _parse_config_file(path: str, parser: argparse.ArgumentParser) -> dict:
    """Flat key=value defaults file; '#' comments allowed, unknown keys rejected."""
    known = {a.dest for a in parser._actions}
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                parser.error(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if key not in known:
                parser.error(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value.strip()
    return values


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", default=".", help="output directory")
    sub.add_argument("--config", help="flat key=value defaults file")
    sub.add_argument("--J", type=float, default=1.0)
    sub.add_argument("--gamma", type=float, default=1.0)
    sub.add_argument("--g", type=float, default=0.0)
    sub.add_argument("--N", type=int, default=4)
    sub.add_argument("--workers", type=int, default=os.cpu_count() or 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dising", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    subs = parser.add_subparsers(dest="subcommand", required=True)

    sp = subs.add_parser("spectrum", help="dense Liouvillian spectrum (spectral cluster figures)")
    _add_common(sp)
    sp.add_argument("--frame", choices=["original", "transformed"], default="original")

    sp = subs.add_parser("mcm", help="most coherent mode via imaginary-time propagation")
    _add_common(sp)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-steps", type=int, default=500_000)
    sp.add_argument("--checkpoint", help="binary superket checkpoint path")

    sp = subs.add_parser("meanfield", help="mean-field (gamma, g) magnetization heatmap")
    _add_common(sp)
    sp.add_argument("--beta", type=_parse_beta, default=math.inf, help="'inf' allowed")
    sp.add_argument("--zJ", type=float, default=1.0)
    sp.add_argument("--gamma-range", nargs=3, metavar=("MIN", "MAX", "COUNT"), default=["0", "8", "81"])
    sp.add_argument("--g-range", nargs=3, metavar=("MIN", "MAX", "COUNT"), default=["0", "3", "61"])

    sp = subs.add_parser("thermal", help="finite-beta magnetization heatmap at fixed N")
    _add_common(sp)
    sp.add_argument("--beta", type=float, default=1.0)
    sp.add_argument("--gamma-range", nargs=3, metavar=("MIN", "MAX", "COUNT"), default=["0", "8", "33"])
    sp.add_argument("--g-range", nargs=3, metavar=("MIN", "MAX", "COUNT"), default=["0", "3", "25"])

    sp = subs.add_parser("binder", help="Binder crossings and critical-field extrapolation")
    _add_common(sp)
    sp.add_argument("--sizes", default="4,6,8,10", help="comma-separated even sizes")
    sp.add_argument("--bracket", default="0.7,1.6", help="g bracket 'lo,hi'")
    sp.add_argument("--tol", type=float, default=1e-6, help="mode residual tolerance")

    sp = subs.add_parser("dynamics", help="cat-state fidelity and Fourier crossover")
    _add_common(sp)
    sp.add_argument("--t-max-jn", type=float, default=20.0, help="horizon in tJN units")
    sp.add_argument("--n-times", type=int, default=401)

    sp = subs.add_parser("unravel", help="stochastic unraveling vs master equation")
    _add_common(sp)
    sp.add_argument("--t-final", type=float, default=2.0)
    sp.add_argument("--dt", type=float, default=0.002)
    sp.add_argument("--n-traj", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=1234)

    sp = subs.add_parser("verify", help="structural invariant suite")
    _add_common(sp)
    parser.sub_map = subs.choices
    return parser


def _apply_config_file(
    args: argparse.Namespace, parser: argparse.ArgumentParser, argv: list[str]
) -> None:
    """Fill values from a key=value file; explicitly passed flags win."""
    if not getattr(args, "config", None):
        return
    sub = parser.sub_map[args.subcommand]
    actions = {a.dest: a for a in sub._actions}
    defaults = _parse_config_file(args.config, sub)
    passed = {
        tok[2:].split("=", 1)[0].replace("-", "_")
        for tok in argv
        if tok.startswith("--")
    }
    for key, value in defaults.items():
        if key in passed or key == "config":
            continue
        action = actions[key]
        caster = action.type or str
        if action.nargs == 3:
            setattr(args, key, value.split())
        else:
            setattr(args, key, caster(value))


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    options = {k: v for k, v in vars(args).items() if k not in ("subcommand",)}
    return ExperimentConfig(subcommand=args.subcommand, options=options)


def _cmd_spectrum(args, config) -> int:
    from .spectral import full_spectrum, steady_states
    from .superket import superket_trace

    params = LiouvilleParams(
        N=args.N, J=args.J, g=args.g, gamma=args.gamma,
        frame=Frame(args.frame),
    )
    spec = full_spectrum(params)
    steady = set(steady_states(spec))
    rows = [
        (i, float(lam.real), float(lam.imag),
         float(abs(superket_trace(spec.right[:, i]))), int(i in steady))
        for i, lam in enumerate(spec.eigenvalues)
    ]
    _write_csv(os.path.join(args.out, "spectrum.csv"), config,
               ["index", "re_lambda", "im_lambda", "abs_trace", "steady"], rows)
    return EXIT_OK


def _cmd_mcm(args, config) -> int:
    from .mcm import find_mcm, save_checkpoint, write_convergence_log

    params = LiouvilleParams(N=args.N, J=args.J, g=args.g, gamma=args.gamma)
    result = find_mcm(params, dt=args.dt, tol=args.tol, max_steps=args.max_steps)
    rows = [(s, lam.real, lam.imag, r) for s, lam, r in result.history]
    _write_csv(os.path.join(args.out, "mcm_convergence.csv"), config,
               ["step", "re_lambda", "im_lambda", "residual"], rows)
    if args.checkpoint:
        save_checkpoint(args.checkpoint, result)
    print(f"lambda_mc = {result.eigenvalue.real:.12g} {result.eigenvalue.imag:+.12g}i "
          f"(residual {result.residual:.3e}, {result.iterations} steps)")
    return EXIT_OK


def _cmd_meanfield(args, config) -> int:
    from .meanfield import sweep_phase_diagram

    lo, hi, count = args.gamma_range
    glo, ghi, gcount = args.g_range
    diagram = sweep_phase_diagram(
        (float(lo), float(hi)), (float(glo), float(ghi)),
        (int(count), int(gcount)), beta=args.beta, zJ=args.zJ, workers=args.workers,
    )
    rows = [
        (float(diagram.gammas[i]), float(diagram.gs[j]),
         diagram.m[i, j].real, diagram.m[i, j].imag,
         int(diagram.converged[i, j]), int(diagram.iterations[i, j]))
        for i in range(diagram.gammas.size)
        for j in range(diagram.gs.size)
    ]
    _write_csv(os.path.join(args.out, "meanfield.csv"), config,
               ["gamma", "g", "re_m", "im_m", "converged", "iterations"], rows)
    return EXIT_OK


def _cmd_thermal(args, config) -> int:
    from .thermal import sweep_thermal_heatmap

    template = LiouvilleParams(N=args.N, J=args.J, frame=Frame.TRANSFORMED)
    lo, hi, count = args.gamma_range
    glo, ghi, gcount = args.g_range
    gammas, gs, m = sweep_thermal_heatmap(
        template, (float(lo), float(hi)), (float(glo), float(ghi)),
        (int(count), int(gcount)), beta=args.beta, workers=args.workers,
    )
    rows = [
        (float(gammas[i]), float(gs[j]), float(m[i, j]))
        for i in range(gammas.size) for j in range(gs.size)
    ]
    _write_csv(os.path.join(args.out, "thermal.csv"), config, ["gamma", "g", "m"], rows)
    return EXIT_OK


def _cmd_binder(args, config) -> int:
    from .criticality import U4Evaluator, run_binder_pipeline

    sizes = tuple(int(s) for s in args.sizes.split(","))
    lo, hi = (float(x) for x in args.bracket.split(","))
    evaluator = U4Evaluator(args.gamma, J=args.J, tol=args.tol)
    curve, evaluator = run_binder_pipeline(
        args.gamma, sizes=sizes, bracket=(lo, hi), J=args.J, evaluator=evaluator
    )
    rows = [
        (p.N, p.g, p.U4, p.eigenvalue.real, p.eigenvalue.imag, p.iterations, p.residual)
        for p in sorted(evaluator.points, key=lambda q: (q.N, q.g))
    ]
    _write_csv(os.path.join(args.out, "binder_samples.csv"), config,
               ["N", "g", "U4", "re_lambda", "im_lambda", "iterations", "residual"], rows)
    with open(os.path.join(args.out, "binder_summary.txt"), "w") as fh:
        fh.write(f"gamma = {curve.gamma!r}\n")
        for n in sorted(curve.crossings):
            fh.write(f"crossing_N{n} = {curve.crossings[n]!r}\n")
        fh.write(f"fit = a + b*N^-c with a={curve.a!r} b={curve.b!r} c={curve.c!r}\n")
        fh.write(f"g_c = {curve.g_c!r} (fit residual {curve.fit_residual!r})\n")
    print(f"g_c(gamma={args.gamma}) = {curve.g_c:.4f}  crossings: {curve.crossings}")
    return EXIT_OK


def _cmd_dynamics(args, config) -> int:
    from .dynamics import cat_fidelity_trajectory, fourier_fidelity

    params = LiouvilleParams(N=args.N, J=args.J, g=args.g, gamma=args.gamma)
    t_max = args.t_max_jn / (args.J * args.N)
    traj = cat_fidelity_trajectory(params, t_max=t_max, n_times=args.n_times)
    rows = [
        (float(t), float(t * args.J * args.N), float(f))
        for t, f in zip(traj.times, traj.fidelity)
    ]
    _write_csv(os.path.join(args.out, "fidelity.csv"), config, ["t", "tJN", "F"], rows)
    spec = fourier_fidelity(traj)
    rows = [
        (float(w), float(w / (args.N * args.J)), float(abs(a)))
        for w, a in zip(spec.frequencies, spec.amplitudes)
    ]
    _write_csv(os.path.join(args.out, "fidelity_spectrum.csv"), config,
               ["omega", "omega_over_NJ", "abs_F"], rows)
    return EXIT_OK


def _cmd_unravel(args, config) -> int:
    from .dynamics import (
        cat_state,
        master_equation_density,
        trace_distance,
        unravel_trajectories,
    )

    params = LiouvilleParams(N=args.N, J=args.J, g=args.g, gamma=args.gamma)
    psi0 = cat_state(args.N).psi
    rho_unr = unravel_trajectories(
        psi0, params, args.t_final, args.dt, args.n_traj, args.seed
    )
    rho_me = master_equation_density(psi0, params, args.t_final)
    dist = trace_distance(rho_unr, rho_me)
    _write_csv(os.path.join(args.out, "unravel.csv"), config,
               ["n_traj", "seed", "t_final", "trace_distance"],
               [(args.n_traj, args.seed, float(args.t_final), float(dist))])
    print(f"trace distance to master equation: {dist:.5f} ({args.n_traj} trajectories)")
    return EXIT_OK


def _cmd_verify(args, config) -> int:
    from .verify import run_verification

    report = run_verification(sizes=(2, 4))
    for name, ok, detail in report:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    return EXIT_OK if all(ok for _, ok, _ in report) else EXIT_NUMERICAL


_COMMANDS = {
    "spectrum": _cmd_spectrum,
    "mcm": _cmd_mcm,
    "meanfield": _cmd_meanfield,
    "thermal": _cmd_thermal,
    "binder": _cmd_binder,
    "dynamics": _cmd_dynamics,
    "unravel": _cmd_unravel,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    _apply_config_file(args, parser, list(argv))
    config = _config_from_args(args)
    started = time.time()
    os.makedirs(args.out, exist_ok=True)
    try:
        code = _COMMANDS[args.subcommand](args, config)
    except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _write_manifest(args.out, config, started, {"exit_code": code})
    return code


if __name__ == "__main__":
    sys.exit(main())
