"""Command-line front end.

Subcommands::

    hyperball sample        --model M [--dim D] [--a ...] --s S [--n N] [--seed SEED]
    hyperball fit           --in FILE [--model M] [solver flags]
    hyperball barycenter    --in FILE [--model M] [solver flags]
    hyperball swarm-trace   --in FILE [--K K] [--step H] [--t-end T] [--every E]
    hyperball density-grid  --model M [--dim D] [--a ...] --s S [--resolution R]

Coordinates on the command line are comma separated reals; complex entries
are given as consecutive ``re,im`` pairs; a list starting with a minus sign
must be attached with ``=`` (``--a=-0.3,0.4``). Densities are reported with
respect to the hyperbolic measure; the density grid also carries the
Lebesgue density.

Exit codes: 0 success, 2 usage or invalid parameters, 3 I/O failure,
4 non-convergence, 5 degenerate data. ``HYPERBALL_LOG`` sets the log level
(e.g. ``DEBUG``); logs go to stderr.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
from typing import IO, Iterator

import numpy as np

from . import io as hio
from .barycenter import SwarmParams, barycenter, swarm_trajectory
from .distributions import MoebParams, density_grid, sample
from .estimation import fit
from .exceptions import ConvergenceError, DegenerateDataError, DomainError
from .geometry import MODEL_NAMES, get_model
from .numerics import make_rng

logger = logging.getLogger("hyperball")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CONVERGENCE = 4
EXIT_DEGENERATE = 5


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _coords(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid coordinate list {text!r}") from exc


def _add_model(p, required=True):
    p.add_argument("--model", choices=MODEL_NAMES, required=required)
    p.add_argument("--dim", type=int, help="ball dimension d or Bergman dimension m")


def _add_solver(p, step=0.05):
    p.add_argument("--K", type=float, default=-1.0, help="coupling (negative)")
    p.add_argument("--step", type=float, default=step, help="integration step")
    p.add_argument("--tol", type=float, default=1e-10, help="barycenter residual tolerance")
    p.add_argument("--max-steps", type=int, default=1_000_000)


def _add_io(p, need_in=False):
    if need_in:
        p.add_argument("--in", dest="input", required=True, help="point file (jsonl or csv)")
    p.add_argument("--out", default="-", help="output path, '-' for stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="hyperball", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("sample", help="draw points from the location/concentration family")
    _add_model(p)
    p.add_argument("--a", type=_coords, help="location, comma separated (default: origin); use --a=-x,... for a leading minus")
    p.add_argument("--s", type=float, required=True, help="concentration")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=hio.FORMATS, default="jsonl")
    _add_io(p)

    for name, help_ in (("fit", "maximum-likelihood location and concentration"),
                        ("barycenter", "conformal barycenter of a point file")):
        p = sub.add_parser(name, help=help_)
        _add_model(p, required=False)
        p.add_argument("--format", choices=hio.FORMATS, help="input format (default: sniffed)")
        _add_solver(p)
        _add_io(p, need_in=True)

    p = sub.add_parser("swarm-trace", help="integrate the swarm and export the trajectory")
    _add_model(p, required=False)
    p.add_argument("--format", choices=hio.FORMATS, help="input format (default: sniffed)")
    _add_solver(p, step=1e-3)
    p.add_argument("--t-end", type=float, default=10.0)
    p.add_argument("--every", type=int, default=1, help="keep every n-th step")
    _add_io(p, need_in=True)

    p = sub.add_parser("density-grid", help="density on a square grid (2-D slice)")
    _add_model(p)
    p.add_argument("--a", type=_coords)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--resolution", type=int, default=200)
    _add_io(p)
    return parser


@contextlib.contextmanager
def _output(path: str) -> Iterator[IO[str]]:
    if path == "-":
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _params(args) -> MoebParams:
    dim = args.dim
    if dim is None and args.a is not None and args.model != "disc":
        n = len(args.a)
        dim = n if args.model == "ball" else n // 2
    model = get_model(args.model, dim)
    if args.a is None:
        a = model.origin()
    else:
        if len(args.a) != model.real_dim:
            raise DomainError(f"{model} needs {model.real_dim} location coordinates")
        a = model.from_real(np.asarray(args.a))
    return MoebParams(model, a, args.s)


def _read(args):
    with open(args.input, encoding="utf-8") as fh:
        return hio.read_points(fh, args.model, args.dim, args.format)


def _solver(args) -> SwarmParams:
    return SwarmParams(K=args.K, step=args.step, residual_tol=args.tol,
                       max_steps=args.max_steps)


def cmd_sample(args) -> int:
    params = _params(args)
    if args.n < 1:
        raise DomainError("--n must be positive")
    X = sample(params, args.n, make_rng(args.seed))
    with _output(args.out) as out:
        hio.write_points(out, params.model, X, args.format)
    return EXIT_OK


def cmd_fit(args) -> int:
    model, X = _read(args)
    result = fit(model, X, _solver(args))
    with _output(args.out) as out:
        out.write(hio.dumps_json(result.to_dict()) + "\n")
    return EXIT_OK


def cmd_barycenter(args) -> int:
    model, X = _read(args)
    res = barycenter(model, X, _solver(args))
    if not res.converged:
        raise ConvergenceError(f"barycenter flow stopped with residual {res.residual:.3g}")
    record = {
        "model": model.name,
        "d_or_m": model.dim,
        "a": [float(v) for v in np.ravel(model.to_real(res.point))],
        "potential": float(res.potential),
        "residual": float(res.residual),
        "iterations": int(res.iterations),
        "n_obs": int(X.shape[0]),
    }
    with _output(args.out) as out:
        out.write(hio.dumps_json(record) + "\n")
    return EXIT_OK


def cmd_swarm_trace(args) -> int:
    model, X = _read(args)
    if args.every < 1:
        raise DomainError("--every must be positive")
    traj = swarm_trajectory(model, X, _solver(args), args.t_end, every=args.every)
    with _output(args.out) as out:
        hio.write_trajectory_csv(out, model, traj)
    return EXIT_OK


def cmd_density_grid(args) -> int:
    params = _params(args)
    xs, ys, dens = density_grid(params, args.resolution)
    with _output(args.out) as out:
        hio.write_density_grid_csv(out, params.model, xs, ys, dens)
    return EXIT_OK


COMMANDS = {
    "sample": cmd_sample,
    "fit": cmd_fit,
    "barycenter": cmd_barycenter,
    "swarm-trace": cmd_swarm_trace,
    "density-grid": cmd_density_grid,
}


def _configure_logging():
    level = os.environ.get("HYPERBALL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except DegenerateDataError as exc:
        code, msg = EXIT_DEGENERATE, str(exc)
    except ConvergenceError as exc:
        code, msg = EXIT_CONVERGENCE, str(exc)
    except DomainError as exc:
        code, msg = EXIT_USAGE, str(exc)
    except OSError as exc:
        code, msg = EXIT_IO, str(exc)
    print(f"hyperball {args.command}: error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
