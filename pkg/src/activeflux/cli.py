"""Command-line entry point: single runs and convergence sweeps."""

from __future__ import annotations

import argparse
import logging
import sys

from activeflux.errors import ActiveFluxError, ConfigurationError
from activeflux.evolution import parse_operator
from activeflux.harness import (RunConfig, convergence_study, read_config_file, simulate,
                                write_convergence_csv, write_state_csv)
from activeflux.models import parse_model

log = logging.getLogger("activeflux")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="activeflux",
        description="Active Flux solver for 1-D hyperbolic conservation laws.")
    p.add_argument("--config", help="file with key=value lines using the flag names below")
    p.add_argument("--model", help='"advection:c=<real>", "burgers" or "swe:g=<real>"')
    p.add_argument("--ic", help='initial data, e.g. "sine:1,0", "step:1,0,0.25", "swe-sine"')
    p.add_argument("--N", type=int, help="number of cells")
    p.add_argument("--cfl", type=float, help="CFL number in (0, 1]")
    p.add_argument("--t-end", type=float, dest="t_end", help="final time")
    p.add_argument("--operator", help='"exact", "fixedpoint:k=<int>", "midpoint" or "naive"')
    p.add_argument("--boundary", choices=("periodic", "outflow"))
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--convergence", help="comma-separated resolutions for an EOC sweep")
    p.add_argument("--seed", type=int, help="seed for random initial data")
    p.add_argument("--k-iters", type=int, dest="k_iters",
                   help="fixed-point iterations when --operator fixedpoint has no k")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _resolutions(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"bad resolution list {text!r}") from None


def _config_from(args, parser) -> RunConfig:
    file_values = read_config_file(args.config) if args.config else {}
    flag_names = {"N": "N", "cfl": "cfl", "t-end": "t_end", "k-iters": "k_iters"}

    def pick(key, convert=str):
        attr = flag_names.get(key, key)
        value = getattr(args, attr, None)
        if value is None and key in file_values:
            try:
                value = convert(file_values[key])
            except ValueError:
                parser.error(f"bad value for {key} in {args.config}: {file_values[key]!r}")
        return value

    model = pick("model")
    if model is None:
        parser.error("--model is required")
    cfg = RunConfig(model=model)
    for key, attr, convert in [("ic", "ic", str), ("N", "n_cells", int), ("cfl", "cfl", float),
                               ("t-end", "t_end", float), ("operator", "operator", str),
                               ("boundary", "boundary", str), ("out", "output_path", str),
                               ("seed", "seed", int), ("k-iters", "k_iters", int)]:
        value = pick(key, convert)
        if value is not None:
            setattr(cfg, attr, value)
    conv = pick("convergence")
    if conv:
        cfg.convergence_resolutions = _resolutions(conv)
    return cfg


def run_cli(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from(args, parser)
        cfg.validate()
        model = parse_model(cfg.model)
        operator = parse_operator(cfg.operator, cfg.k_iters)
    except ConfigurationError as exc:
        parser.print_usage(sys.stderr)
        print(f"activeflux: error: {exc}", file=sys.stderr)
        return 2

    try:
        if cfg.convergence_resolutions:
            result = convergence_study(model, cfg.ic, cfg.convergence_resolutions, operator,
                                       cfg.cfl, cfg.t_end, cfg.boundary)
            write_convergence_csv(cfg.output_path, result,
                                  {"model": cfg.model, "ic": cfg.ic, "operator": operator.spec,
                                   "cfl": cfg.cfl, "t": cfg.t_end})
            for n, rep, order in zip(result.resolutions, result.reports,
                                     [None, *result.eoc_l1]):
                tail = "" if order is None else f"  eoc {' '.join(f'{o:.3f}' for o in order)}"
                print(f"N={n:<6d} L1 {' '.join(f'{e:.3e}' for e in rep.l1)}{tail}")
        else:
            grid, state, reports = simulate(model, cfg.ic, cfg.n_cells, operator, cfg.cfl,
                                            cfg.t_end, cfg.boundary, seed=cfg.seed)
            write_state_csv(cfg.output_path, state, grid, cfg.model)
            guards = sum(r.shock_guard_activations for r in reports)
            print(f"t={state.time:.6g} steps={len(reports)} shock_guard={guards} "
                  f"-> {cfg.output_path}")
    except ConfigurationError as exc:
        print(f"activeflux: error: {exc}", file=sys.stderr)
        return 2
    except (ActiveFluxError, FloatingPointError, OSError) as exc:
        print(f"activeflux: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
