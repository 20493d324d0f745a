"""Command-line entry point.

Exit codes: 0 success, 2 validation error (bad flags, malformed models,
contract violations), 3 numerical failure (uncertified poles, divergence,
band-edge singularities).  Curve subcommands write CSV, pole subcommands
write JSON; every output gets a manifest sidecar and, unless --no-plot is
given, a rendered figure next to it.
"""

from __future__ import annotations

import argparse
import os
import sys

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_THREAD_ENV = "SIEGERT_NUM_THREADS"


def _apply_thread_env():
    n = os.environ.get(_THREAD_ENV)
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="siegert",
        description="Discrete spectra of 1-d open quantum systems")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, model=True):
        if model:
            p.add_argument("--model", required=True, help="model JSON file")
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--no-plot", action="store_true",
                       help="skip the figure next to the output file")

    p = sub.add_parser("scatter", help="R, T and conductance over an energy range")
    add_common(p)
    p.add_argument("--emin", type=float, required=True)
    p.add_argument("--emax", type=float, required=True)
    p.add_argument("--samples", type=int, default=200)

    p = sub.add_parser("poles", help="certified pole list in a complex-k window")
    add_common(p)
    p.add_argument("--window", type=float, nargs=4, required=True,
                   metavar=("REMIN", "REMAX", "IMMIN", "IMMAX"))

    p = sub.add_parser("norm-check", help="expanding-window conservation for one pole")
    add_common(p)
    p.add_argument("--pole-index", type=int, required=True,
                   help="index into the sorted pole list of the search window")
    p.add_argument("--L0", type=float, required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--samples", type=int, default=400)
    p.add_argument("--window", type=float, nargs=4, default=[-6.0, 6.0, -3.0, 6.0],
                   metavar=("REMIN", "REMAX", "IMMIN", "IMMAX"))
    p.add_argument("--tol", type=float, default=1e-8,
                   help="maximum allowed |N(t)/N(0) - 1|")
    p.add_argument("--speed", type=float, default=None,
                   help="override the window speed (negative-control runs)")

    p = sub.add_parser("feshbach", help="nonlinear-eigenvalue poles of H_eff(E)")
    add_common(p)
    p.add_argument("--branch", choices=["ret", "adv"], required=True)
    p.add_argument("--seeds", default="grid",
                   help="'grid' or a JSON file with [[re, im], ...]")

    p = sub.add_parser("sigma", help="lead self-energy on both branches (debug)")
    p.add_argument("--E", type=float, nargs="+", required=True,
                   metavar="RE [IM]", help="probe energy, real or complex")
    p.add_argument("--J", type=float, default=1.0)

    p = sub.add_parser("dynamics", help="survival probability and pole decomposition")
    add_common(p)
    p.add_argument("--sites", type=int, default=2001)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--samples", type=int, default=800,
                   help="samples per time direction")

    p = sub.add_parser("pendulum", help="coupled-pendulum normal-mode evolution")
    add_common(p, model=False)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--x0", type=float, nargs=2, default=[1.0, 0.0])
    p.add_argument("--v0", type=float, nargs=2, default=[0.0, 0.0])
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--samples", type=int, default=1000)

    return parser


def _fig_path(out_path: str) -> str:
    stem, _ = os.path.splitext(out_path)
    return stem + ".png"


def _params(args) -> dict:
    skip = {"subcommand"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def _finish(args, model, payload_writer, figure_writer=None):
    """Write payload, optional figure, and the manifest sidecar."""
    from . import output

    start = output.now()
    payload_writer(args.out)
    if figure_writer is not None and not args.no_plot:
        figure_writer(_fig_path(args.out))
    manifest = output.make_manifest(args.subcommand, model, _params(args),
                                    wall_time_s=output.now() - start)
    output.write_manifest(args.out, manifest)


def _load_continuum(path):
    from .exceptions import ValidationError
    from .model import Potential1D, load_model

    model = load_model(path)
    if not isinstance(model, Potential1D):
        raise ValidationError("this subcommand needs a continuum model")
    return model


def _load_lattice(path):
    from .exceptions import ValidationError
    from .model import LatticeModel, load_model

    model = load_model(path)
    if not isinstance(model, LatticeModel):
        raise ValidationError("this subcommand needs a lattice model")
    return model


def _cmd_scatter(args) -> int:
    import numpy as np

    from .exceptions import ValidationError
    from .output import write_csv
    from .transfer import scattering_amplitudes

    model = _load_continuum(args.model)
    if not (0 < args.emin < args.emax):
        raise ValidationError("need 0 < emin < emax")
    if args.samples < 2:
        raise ValidationError("need at least 2 samples")
    energies = np.linspace(args.emin, args.emax, args.samples)
    R = np.empty(args.samples)
    T = np.empty(args.samples)
    for i, e in enumerate(energies):
        res = scattering_amplitudes(model, float(e))
        R[i], T[i] = res.R, res.T
    G = T.copy()  # conductance in units of 2 e^2 / h

    def payload(path):
        write_csv(path, ["E", "R", "T", "G"], [energies, R, T, G])

    def figure(path):
        from .figures import save_scatter_figure
        save_scatter_figure(path, energies, R, T, G)

    _finish(args, model, payload, figure)
    from scipy.constants import e as _e, h as _h
    quantum = 2.0 * _e**2 / _h
    worst = float(np.max(np.abs(R + T - 1.0)))
    print(f"scatter: {args.samples} samples on [{args.emin}, {args.emax}]; "
          f"max |R+T-1| = {worst:.2e}; multiply G by 2e^2/h = {quantum:.6e} S for SI")
    return EXIT_OK


def _cmd_poles(args) -> int:
    from .output import pole_record, write_json
    from .poles import SearchWindow, find_poles

    model = _load_continuum(args.model)
    remin, remax, immin, immax = args.window
    window = SearchWindow((remin, remax), (immin, immax))
    poles = find_poles(model, window)

    def payload(path):
        write_json(path, {"poles": [pole_record(p) for p in poles]})

    def figure(path):
        from .figures import save_pole_figure
        save_pole_figure(path, poles, k_label="Re k", e_note="E = k^2")

    _finish(args, model, payload, figure)
    bad = sum(1 for p in poles if not p.certified)
    print(f"poles: {len(poles)} found in window {tuple(args.window)}, "
          f"{bad} uncertified")
    return EXIT_NUMERICAL if bad else EXIT_OK


def _cmd_norm_check(args) -> int:
    import numpy as np

    from .exceptions import NumericalError, ValidationError
    from .hermiticity import build_wavefunction, conservation_report
    from .output import write_csv
    from .poles import ANTI_RESONANT, SearchWindow, find_poles

    model = _load_continuum(args.model)
    remin, remax, immin, immax = args.window
    poles = find_poles(model, SearchWindow((remin, remax), (immin, immax)))
    if not 0 <= args.pole_index < len(poles):
        raise ValidationError(
            f"pole index {args.pole_index} out of range (found {len(poles)})")
    pole = poles[args.pole_index]
    if not pole.certified:
        raise NumericalError(f"pole {args.pole_index} is uncertified: {pole.note}")
    if args.tmax <= 0 or args.samples < 5:
        raise ValidationError("need tmax > 0 and samples >= 5")
    wave = build_wavefunction(model, pole)
    sign = -1.0 if pole.kind == ANTI_RESONANT else 1.0
    t = np.linspace(min(0.0, sign * args.tmax), max(0.0, sign * args.tmax),
                    args.samples)
    report = conservation_report(wave, args.L0, t, speed=args.speed)

    def payload(path):
        write_csv(path, ["t", "N", "dNdt"], [report.t, report.N, report.dNdt])

    def figure(path):
        from .figures import save_norm_figure
        save_norm_figure(path, report.t, report.N, report.dNdt)

    _finish(args, model, payload, figure)
    deviation = float(np.max(np.abs(report.N / report.N[0] - 1.0)))
    print(f"norm-check: pole {args.pole_index} ({pole.kind}) k = {pole.k:.6g}; "
          f"max |N/N0 - 1| = {deviation:.3e}")
    return EXIT_OK if deviation <= args.tol else EXIT_NUMERICAL


def _load_seeds(spec: str, model):
    import json as _json

    from .exceptions import ValidationError

    if spec != "grid":
        with open(spec, "r", encoding="utf-8") as fh:
            raw = _json.load(fh)
        if not isinstance(raw, list):
            raise ValidationError("seed file must hold a JSON list of [re, im]")
        return [complex(float(re), float(im)) for re, im in raw], True
    J = model.lead_hopping
    seeds = []
    for re in [(-2 * J - 1.5) + i * (4 * J + 3.0) / 8 + 0.0037 for i in range(9)]:
        for im in (-0.6, -0.05, 0.05, 0.6):
            seeds.append(complex(re, im))
    return seeds, False


def _cmd_feshbach(args) -> int:
    from .exceptions import NewtonDivergenceError
    from .feshbach import solve_nonlinear_eig
    from .output import write_json

    model = _load_lattice(args.model)
    seeds, strict = _load_seeds(args.seeds, model)
    found = []
    for seed in seeds:
        try:
            result = solve_nonlinear_eig(model, args.branch, seed)
        except NewtonDivergenceError:
            if strict:
                raise
            continue
        if all(abs(result.E - other["E_value"]) > 1e-8 for other in found):
            found.append({"E_value": result.E,
                          "record": {"E": {"re": result.E.real, "im": result.E.imag},
                                     "residual": result.residual,
                                     "iterations": result.iterations,
                                     "branch": result.branch,
                                     "seed": {"re": seed.real, "im": seed.imag}}})
    found.sort(key=lambda item: (item["E_value"].real, item["E_value"].imag))
    records = [item["record"] for item in found]

    def payload(path):
        write_json(path, {"branch": args.branch, "poles": records})

    _finish(args, model, payload, None)
    print(f"feshbach: branch {args.branch}, {len(records)} distinct poles "
          f"from {len(seeds)} seeds")
    return EXIT_OK


def _cmd_sigma(args) -> int:
    from .exceptions import ValidationError
    from .feshbach import ADVANCED, RETARDED, lead_self_energy
    from .output import fmt

    if len(args.E) not in (1, 2):
        raise ValidationError("--E takes one (real) or two (re im) floats")
    E = complex(args.E[0], args.E[1] if len(args.E) == 2 else 0.0)
    ret = lead_self_energy(E, args.J, RETARDED).value
    adv = lead_self_energy(E, args.J, ADVANCED).value
    print(f"sigma: E = {fmt(E.real)}+{fmt(E.imag)}j  J = {fmt(args.J)}  "
          f"ret = {fmt(ret.real)}+{fmt(ret.imag)}j  "
          f"adv = {fmt(adv.real)}+{fmt(adv.imag)}j")
    return EXIT_OK


def _cmd_dynamics(args) -> int:
    import numpy as np

    from .exceptions import ValidationError
    from .dynamics import pole_decomposition
    from .output import write_csv

    model = _load_lattice(args.model)
    if args.tmax <= 0 or args.samples < 2:
        raise ValidationError("need tmax > 0 and samples >= 2")
    t = np.linspace(-args.tmax, args.tmax, 2 * args.samples + 1)
    decomp = pole_decomposition(model, t, total_sites=args.sites)

    def class_column(kind):
        series = decomp.per_class.get(kind)
        return series.values if series is not None else np.zeros(t.size)

    columns = {
        "t": t,
        "P": decomp.survival.values,
        "P_res": class_column("resonant"),
        "P_antires": class_column("anti-resonant"),
        "P_bound": class_column("bound"),
        "residual": decomp.residual.values,
    }

    def payload(path):
        write_csv(path, list(columns), list(columns.values()))

    def figure(path):
        from .figures import save_dynamics_figure
        save_dynamics_figure(path, t, columns)

    _finish(args, model, payload, figure)
    sym = float(np.max(np.abs(decomp.survival.values
                              - decomp.survival.values[::-1])))
    print(f"dynamics: {args.sites} sites, |t| <= {args.tmax}; "
          f"max |P(t)-P(-t)| = {sym:.2e}; "
          f"{len(decomp.contributions)} pole channels")
    return EXIT_OK


def _cmd_pendulum(args) -> int:
    import numpy as np

    from .exceptions import ValidationError
    from .model import PendulumPair, pendulum_modes, pendulum_state
    from .output import write_csv

    pair = PendulumPair(args.omega, args.alpha)
    if args.tmax <= 0 or args.samples < 2:
        raise ValidationError("need tmax > 0 and samples >= 2")
    t = np.linspace(0.0, args.tmax, args.samples)
    xs, _ = pendulum_state(pair, args.x0, args.v0, t)

    def payload(path):
        write_csv(path, ["t", "x1", "x2"], [t, xs[:, 0], xs[:, 1]])

    def figure(path):
        from .figures import save_pendulum_figure
        save_pendulum_figure(path, t, xs)

    _finish(args, None, payload, figure)
    (f1, _), (f2, _) = pendulum_modes(pair)
    print(f"pendulum: mode frequencies {f1:.12g} and {f2:.12g}; "
          f"{args.samples} samples to t = {args.tmax}")
    return EXIT_OK


_HANDLERS = {
    "scatter": _cmd_scatter,
    "poles": _cmd_poles,
    "norm-check": _cmd_norm_check,
    "feshbach": _cmd_feshbach,
    "sigma": _cmd_sigma,
    "dynamics": _cmd_dynamics,
    "pendulum": _cmd_pendulum,
}


def run(argv) -> int:
    """Parse and execute; returns the exit code instead of raising."""
    _apply_thread_env()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code) if exc.code else EXIT_OK
    from .exceptions import NumericalError, ValidationError
    try:
        return _HANDLERS[args.subcommand](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
