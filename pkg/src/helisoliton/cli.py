"""Command-line front end.

    helisoliton portrait --h 2 --window=-3:3 --grid-res 25 --out portrait.csv
    helisoliton trace    --h 1 --tau0 0 --mu0 0 --span=-20:20 --out trace.csv
    helisoliton mesh     --h 1 --v-range 0:6.283185307179586 --nv 64 --out mesh.obj
    helisoliton verify   --out report.json

Exit status: 0 on success, 1 on a failed verification or integration error,
2 on configuration or output-path errors.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass

import numpy as np

from .curve import build_generating_curve
from .geometry import poincare_projection
from .integrator import DEFAULT_TOL, IntegrationError, integrate_trajectory
from .phase import ROTATOR, PerturbedLaw, PhasePoint, SolitonParams, phase_rhs
from .surface import MeshError, export_mesh, fmt, write_obj, write_scalars_csv
from .verify import ParameterGrid, run_invariant_suite

PORTRAIT_COLUMNS = ["tau", "mu", "dtau", "dmu"]
TRACE_COLUMNS = ["s", "tau", "mu", "theta", "x", "y", "r", "omega", "k", "phi", "disk_x", "disk_y"]
RANGE_FLAGS = ("--span", "--tol", "--v-range", "--window")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    h: tuple = (1.0,)
    tau0: float = 0.0
    mu0: float = 0.0
    theta0: float = 0.0
    span: tuple = (-20.0, 20.0)
    tol: tuple = DEFAULT_TOL
    v_range: tuple = (0.0, 2 * math.pi)
    nv: int = 64
    out: str | None = None
    scalars_out: str | None = None
    window: tuple = (-3.0, 3.0, -3.0, 3.0)
    grid_res: int = 25
    perturb_k: float = 0.0
    workers: int = 1
    seed: int = 0
    timings: bool = False

    def validate(self):
        for h in self.h:
            if not (h > 0 and math.isfinite(h)):
                raise ConfigError(f"--h must satisfy h > 0 (helicoidal pitch), got {h}")
        if not self.span[0] < 0 < self.span[1]:
            raise ConfigError(f"--span A:B needs A < 0 < B, got {self.span[0]}:{self.span[1]}")
        if not (self.tol[0] > 0 and self.tol[1] > 0):
            raise ConfigError("--tol ABS:REL needs positive values")
        if self.nv < 2:
            raise ConfigError("--nv must be at least 2")
        if not self.v_range[0] < self.v_range[1]:
            raise ConfigError("--v-range A:B needs A < B")
        if self.grid_res < 2 and self.command == "portrait":
            raise ConfigError("--grid-res must be at least 2")
        if self.grid_res < 1:
            raise ConfigError("--grid-res must be positive")
        w = self.window
        if not (w[0] < w[1] and w[2] < w[3]) and not (self.command == "verify" and self.grid_res == 1):
            raise ConfigError("--window needs increasing bounds")
        return self

    @property
    def params(self):
        return SolitonParams(self.h[0])

    @property
    def law(self):
        return PerturbedLaw(ROTATOR, self.perturb_k) if self.perturb_k else ROTATOR


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    try:
        return open(path, "w", newline=""), True
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _write_rows(path, header, rows):
    fh, close = _open_out(path)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    finally:
        if close:
            fh.close()


def portrait_rows(cfg: RunConfig):
    t0, t1, m0, m1 = cfg.window
    params, law = cfg.params, cfg.law
    for tau in np.linspace(t0, t1, cfg.grid_res):
        for mu in np.linspace(m0, m1, cfg.grid_res):
            dtau, dmu, _ = phase_rhs(PhasePoint(float(tau), float(mu)), params, law)
            yield tau, mu, dtau, dmu


def cmd_portrait(cfg: RunConfig):
    _write_rows(cfg.out, PORTRAIT_COLUMNS, portrait_rows(cfg))
    return 0


def _curve(cfg: RunConfig):
    traj = integrate_trajectory((cfg.tau0, cfg.mu0, cfg.theta0), cfg.params, cfg.law,
                                span=cfg.span, tol=cfg.tol)
    return build_generating_curve(traj)


def trace_rows(curve):
    dx, dy = poincare_projection((curve.alpha[:, 0], curve.alpha[:, 1], curve.phi))
    cols = [curve.s, curve.tau, curve.mu, curve.theta, curve.alpha[:, 0], curve.alpha[:, 1],
            curve.r, curve.omega, curve.k, curve.phi, dx, dy]
    return zip(*cols)


def cmd_trace(cfg: RunConfig):
    curve = _curve(cfg)
    _write_rows(cfg.out, TRACE_COLUMNS, trace_rows(curve))
    return 0


def cmd_mesh(cfg: RunConfig):
    if cfg.out in (None, "-"):
        raise ConfigError("mesh needs --out PATH")
    mesh = export_mesh(_curve(cfg), cfg.params, cfg.v_range, cfg.nv)
    try:
        write_obj(mesh, cfg.out)
        if cfg.scalars_out:
            write_scalars_csv(mesh, cfg.scalars_out)
    except OSError as exc:
        raise ConfigError(f"cannot write {exc.filename}: {exc.strerror}") from exc
    return 0


def cmd_verify(cfg: RunConfig):
    t0, t1, m0, m1 = cfg.window
    n = cfg.grid_res
    grid = ParameterGrid(
        hs=tuple(cfg.h),
        tau0s=tuple(float(x) for x in np.linspace(t0, t1, n)),
        mu0s=tuple(float(x) for x in np.linspace(m0, m1, n)),
        theta0=cfg.theta0, span=cfg.span, tol=cfg.tol, seed=cfg.seed,
    )
    report = run_invariant_suite(grid, law=cfg.law, workers=cfg.workers)
    text = report.to_json(include_timings=cfg.timings)
    fh, close = _open_out(cfg.out)
    try:
        fh.write(text)
    finally:
        if close:
            fh.close()
    for c in report.checks:
        if not c.passed:
            print(f"FAIL {c.name}: worst={c.worst_value} tol={c.tolerance} at {c.location}",
                  file=sys.stderr)
    return 0 if report.passed else 1


COMMANDS = {"portrait": cmd_portrait, "trace": cmd_trace, "mesh": cmd_mesh, "verify": cmd_verify}


def _pair(text):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected A:B, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers in A:B, got {text!r}") from None


def _window(text):
    parts = text.split(":")
    if len(parts) not in (2, 4):
        raise argparse.ArgumentTypeError(f"expected A:B or A:B:C:D, got {text!r}")
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None
    return vals * 2 if len(vals) == 2 else vals


def _hlist(text):
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected h or h1,h2,..., got {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="helisoliton",
        description="Helicoidal rotator-translator solitons to mean curvature flow in H^2 x R.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, h_default):
        p.add_argument("--h", type=_hlist, default=h_default, help="pitch h > 0")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--perturb-k", type=float, default=0.0,
                       help="add a constant to the curvature law (mutation testing)")

    def integration(p, span=(-20.0, 20.0), tol=DEFAULT_TOL):
        p.add_argument("--tau0", type=float, default=0.0)
        p.add_argument("--mu0", type=float, default=0.0)
        p.add_argument("--theta0", type=float, default=0.0)
        p.add_argument("--span", type=_pair, default=span, metavar="A:B")
        p.add_argument("--tol", type=_pair, default=tol, metavar="ABS:REL")

    p = sub.add_parser("portrait", help="sample the phase velocity field to CSV")
    common(p, (2.0,))
    p.add_argument("--window", type=_window, default=(-3.0, 3.0, -3.0, 3.0), metavar="A:B[:C:D]")
    p.add_argument("--grid-res", type=int, default=25)

    p = sub.add_parser("trace", help="integrate one generating curve to CSV")
    common(p, (1.0,))
    integration(p)

    p = sub.add_parser("mesh", help="export the helicoidal surface as OBJ")
    common(p, (1.0,))
    integration(p)
    p.add_argument("--v-range", type=_pair, default=(0.0, 2 * math.pi), metavar="A:B")
    p.add_argument("--nv", type=int, default=64)
    p.add_argument("--scalars-out", default=None, help="per-vertex H and residual CSV")

    p = sub.add_parser("verify", help="run the invariant suite and write a JSON report")
    common(p, (0.5, 1.0, 2.0))
    integration(p, tol=ParameterGrid().tol)
    p.add_argument("--window", type=_window, default=(-2.0, 2.0, -2.0, 2.0), metavar="A:B[:C:D]",
                   help="range of initial (tau0, mu0)")
    p.add_argument("--grid-res", type=int, default=5, help="initial conditions per axis")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timings", action="store_true", help="include wall-clock timings in the report")
    return parser


def _join_negative_ranges(argv):
    """Let ``--span -20:20`` parse like ``--span=-20:20``."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in RANGE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and ":" in argv[i + 1]:
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def config_from_args(ns) -> RunConfig:
    kw = {k: v for k, v in vars(ns).items() if k in RunConfig.__dataclass_fields__}
    return RunConfig(**kw).validate()


def main(argv=None) -> int:
    argv = _join_negative_ranges(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"helisoliton {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        sys.stderr.close()
        return 0
    except (IntegrationError, MeshError, ValueError) as exc:
        print(f"helisoliton {ns.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
