"""Command-line interface: ``fbmqueue <subcommand> [options]``.

Exit codes: 0 success, 2 schema or argument error, 3 acceptance starvation,
4 resource cap.
"""

import argparse
import json
import logging
import math
import sys

from .. import asymptotics, berman, brownian_exact
from ..errors import AcceptanceStarvationError, ConfigError, ResourceCapError
from ..gaussian_paths import TimeGrid, sample_fbm, sample_w_path
from ..rng import STREAM_GENERIC, replicate_generator
from ..workload import (
    QueueParams,
    default_horizon,
    simulate_forward,
    simulate_stationary_window,
)
from .config import load_config
from .drivers import records_to_csv, run_experiment
from .presets import load_preset, preset_names

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_STARVATION = 3
EXIT_RESOURCE = 4

logger = logging.getLogger("fbmqueue")


def _level(text):
    """Parse a real number or ``inf``."""
    val = float(text)
    if math.isnan(val):
        raise argparse.ArgumentTypeError("level must not be NaN")
    return val


def _global_options(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    g = parser.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=default(0), help="master seed (default 0)")
    g.add_argument("--reps", type=int, default=default(None), help="Monte Carlo replicates")
    g.add_argument("--step", type=float, default=default(None), help="grid step")
    g.add_argument("--out", default=default(None),
                   help="output file (single results) or directory (experiments)")
    g.add_argument("--workers", type=int, default=default(None), help="worker processes")
    g.add_argument("-v", "--verbose", action="store_true", default=default(False))


def _add(sub, name, help_text):
    p = sub.add_parser(name, help=help_text, description=help_text)
    _global_options(p, suppress=True)
    return p


def _window_args(p, joint=False, finite=False):
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--T1", type=float, required=True)
    p.add_argument("--x", type=float, default=0.0)
    if joint:
        p.add_argument("--lam", type=float, default=0.0)
        p.add_argument("--T2", type=float, required=True)
        p.add_argument("--T3", type=float, required=True)
        p.add_argument("--y", type=float, default=0.0)
    if finite:
        p.add_argument("--S", type=float, required=True, help="pool window length")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fbmqueue",
        description="Monte Carlo and asymptotics for the fluid queue fed by fractional Brownian motion.",
    )
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = _add(sub, "fbm-gen", "sample one fBm (or W_H) path; writes CSV t,value")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--field", choices=("fbm", "w"), default="fbm")

    p = _add(sub, "queue-sim", "simulate one workload path; writes CSV t,q")
    p.add_argument("--hurst", type=float, required=True)
    p.add_argument("--drain", type=float, required=True)
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--q0", type=float, default=None,
                   help="forward simulation from Q(0)=q0 (default: stationary window)")
    p.add_argument("--horizon", type=float, default=None,
                   help="look-ahead for the stationary supremum (default 8 u t* at u=1)")

    p = _add(sub, "constants", "estimate a Pickands or Berman-type constant; writes JSON")
    csub = p.add_subparsers(dest="constant", required=True)
    q = csub.add_parser("pickands")
    _global_options(q, suppress=True)
    q.add_argument("--hurst", type=float, required=True)
    q.add_argument("--S", type=float, required=True)
    q.add_argument("--method", choices=berman.PICKANDS_METHODS, default="tilted")
    q = csub.add_parser("bar-single")
    _global_options(q, suppress=True)
    _window_args(q)
    q = csub.add_parser("bar-joint")
    _global_options(q, suppress=True)
    _window_args(q, joint=True)
    q = csub.add_parser("finite-horizon")
    _global_options(q, suppress=True)
    _window_args(q, joint=True, finite=True)
    q.add_argument("--method", choices=berman.PICKANDS_METHODS, default="tilted")

    p = _add(sub, "c-constant", "estimate C(T1, T2, x; w); writes JSON")
    p.add_argument("--drain", type=float, required=True)
    p.add_argument("--T1", type=float, required=True)
    p.add_argument("--T2", type=float, required=True)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--w", type=_level, required=True, help="cap level, or 'inf'")

    p = _add(sub, "closed-form", "evaluate a Brownian closed form; writes JSON")
    p.add_argument("which", choices=("q1", "q2", "tail"))
    p.add_argument("--drain", type=float, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--T", type=float, default=None)

    p = _add(sub, "asympt", "evaluate an asymptotic formula; writes JSON")
    p.add_argument("which", choices=("constants", "thm1", "thm3", "p1", "p2"))
    p.add_argument("--hurst", type=float, default=0.5)
    p.add_argument("--drain", type=float, default=1.0)
    p.add_argument("--u", type=float, default=None)
    p.add_argument("--lam", type=float, default=0.0)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--w", type=float, default=None)
    for name in ("T1", "T2", "T3"):
        p.add_argument(f"--{name}", type=float, default=None)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--y", type=float, default=0.0)

    p = _add(sub, "compare", "run an experiment config; writes CSV and JSON")
    p.add_argument("--config", required=True)

    p = _add(sub, "preset", "run a named experiment preset")
    p.add_argument("name", nargs="?", help=f"one of: {', '.join(preset_names())}")
    p.add_argument("--list", action="store_true", help="list presets and exit")
    return parser


def _reps(args, default):
    reps = args.reps if args.reps is not None else default
    if reps < 1:
        raise ConfigError("must be >= 1", field="--reps")
    return reps


def _step(args, default):
    step = args.step if args.step is not None else default
    if not step > 0:
        raise ConfigError("must be > 0", field="--step")
    return step


def _workers(args):
    return args.workers or 1


def _emit_json(args, doc):
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_path(args, path):
    if args.out:
        path.to_csv(args.out)
    else:
        path.to_csv(sys.stdout)


def _rng(args):
    return replicate_generator(args.seed, 0, STREAM_GENERIC)


def cmd_fbm_gen(args):
    grid = TimeGrid.over(args.length, _step(args, 2**-10))
    sampler = sample_fbm if args.field == "fbm" else sample_w_path
    _emit_path(args, sampler(grid, args.hurst, _rng(args)))


def cmd_queue_sim(args):
    params = QueueParams(args.hurst, args.drain)
    step = _step(args, 2**-8)
    rng = _rng(args)
    if args.q0 is not None:
        driver = sample_fbm(TimeGrid.over(args.length, step), args.hurst, rng)
        path = simulate_forward(params, args.q0, driver)
    else:
        horizon = args.horizon or default_horizon(params, 1.0)
        path = simulate_stationary_window(params, args.length, horizon, step, rng)
    _emit_path(args, path)


def _berman_spec(args):
    return berman.BermanSpec(args.hurst, args.T1, args.lam, args.T2, args.T3, args.x, args.y)


def cmd_constants(args):
    reps = _reps(args, 10000)
    w = _workers(args)
    if args.constant == "pickands":
        est = berman.estimate_pickands(args.hurst, args.S, _step(args, 2**-8), reps,
                                       args.seed, method=args.method, workers=w)
    elif args.constant == "bar-single":
        est = berman.estimate_bar_single(args.hurst, args.T1, args.x,
                                         _step(args, berman.default_constant_step()),
                                         reps, args.seed, w)
    elif args.constant == "bar-joint":
        spec = _berman_spec(args)
        est = berman.estimate_bar_joint(spec, _step(args, berman.default_constant_step(spec.T2)),
                                        reps, args.seed, w)
    else:
        spec = _berman_spec(args)
        est = berman.estimate_finite_horizon_joint(
            spec, args.S, _step(args, berman.default_constant_step(spec.T2)), reps, args.seed,
            method=args.method, workers=w,
        )
    _emit_json(args, est.to_record())


def cmd_c_constant(args):
    spec = brownian_exact.CConstantSpec(args.T1, args.T2, args.x, args.w, args.drain)
    est = brownian_exact.estimate_C(spec, _step(args, 2**-8), _reps(args, 10000), args.seed,
                                    _workers(args))
    _emit_json(args, est.to_record())


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise ConfigError("required for this subcommand", field=f"--{name}")


def cmd_closed_form(args):
    c, u = args.drain, args.u
    if args.which == "tail":
        value = brownian_exact.stationary_tail(c, u)
        params = {"c": c, "u": u}
    else:
        _need(args, "omega", "T")
        q = brownian_exact.BmTransientQuery(c, u, args.omega, args.T)
        fn = (brownian_exact.transient_exceed_given_level if args.which == "q1"
              else brownian_exact.transient_exceed_given_exceed)
        value = fn(q)
        params = {"c": c, "u": u, "omega": args.omega, "T": args.T}
    _emit_json(args, {"formula": args.which, "params": params, "value": value})


def _windows(args):
    _need(args, "T1", "T2", "T3")
    return asymptotics.SojournWindows(args.T1, args.T2, args.T3, args.x, args.y)


def cmd_asympt(args):
    H, c = args.hurst, args.drain
    reps = _reps(args, 10000)
    w = _workers(args)
    if args.which == "constants":
        _need(args, "u")
        doc = {"H": H, "c": c, "u": args.u, **asymptotics.derived_constants(H, c, args.u).as_dict()}
    elif args.which == "thm1":
        win = _windows(args)
        spec = berman.BermanSpec(H, win.T1, args.lam, win.T2, win.T3, win.x, win.y)
        step = _step(args, berman.default_constant_step(win.T2))
        joint = berman.estimate_bar_joint(spec, step, reps, args.seed, w)
        single = berman.estimate_bar_single(H, win.T1, win.x, step, reps, args.seed, w)
        doc = {
            "limit": asymptotics.thm1_limit(joint, single),
            "limit_se": asymptotics.thm1_limit_error(joint, single),
            "barB_xy": joint.to_record(),
            "barB_x": single.to_record(),
        }
    elif args.which == "thm3":
        _need(args, "u", "a")
        win = _windows(args)
        estimates = None
        doc = {}
        if args.a > 0:
            specs = asymptotics.thm3_constant_specs(H, args.a, win)
            lo = specs["barB_joint_lower"]
            step = _step(args, berman.default_constant_step(lo["T2"]))
            estimates = {
                name: berman.estimate_bar_single(H, s["T1"], s["x"], step, reps, args.seed, w)
                for name, s in specs.items() if name in ("barB_x", "barB_ay_upper")
            }
            estimates["barB_joint_lower"] = berman.estimate_bar_joint(
                berman.BermanSpec(H, lo["T1"], 0.0, lo["T2"], lo["T3"], lo["x"], lo["y"]),
                step, reps, args.seed, w,
            )
            doc["constants"] = {k: v.to_record() for k, v in estimates.items()}
        env = asymptotics.thm3_envelope(H, c, args.u, args.a, win, estimates)
        doc.update(decay=env.decay, lower=env.lower, upper=env.upper, log_rate=env.log_rate,
                   lower_se=env.lower_se, upper_se=env.upper_se, consistent=env.consistent)
    elif args.which == "p1":
        _need(args, "w", "T1", "T2")
        spec = brownian_exact.CConstantSpec(args.T1, args.T2, args.x, args.w, c)
        est = brownian_exact.estimate_C(spec, _step(args, 2**-8), reps, args.seed, w)
        doc = {"value": brownian_exact.prop1_approx(c, args.w, est), "C": est.to_record()}
    else:
        _need(args, "a", "u")
        omega = (1.0 + args.a) * args.u
        est = None
        doc = {"omega": omega}
        if args.a > 0:
            _need(args, "T1", "T2")
            spec = brownian_exact.CConstantSpec(args.T1, args.T2, args.x, math.inf, c)
            est = brownian_exact.estimate_C(spec, _step(args, 2**-8), reps, args.seed, w)
            doc["C"] = est.to_record()
        doc["value"] = brownian_exact.prop2_approx(c, args.a, args.u, omega, est)
    _emit_json(args, doc)


def _run_config(config, args):
    config = config.with_overrides(reps=args.reps, seed=args.seed if args.seed else None,
                                   step=args.step, workers=args.workers, out=args.out)
    records, _ = run_experiment(config)
    if not config.csv_path:
        sys.stdout.write(records_to_csv(records))
    else:
        logger.info("results in %s and %s", config.csv_path, config.json_path)


def cmd_compare(args):
    _run_config(load_config(args.config), args)


def cmd_preset(args):
    if args.list or not args.name:
        sys.stdout.write("\n".join(preset_names()) + "\n")
        return
    try:
        config = load_preset(args.name)
    except KeyError as exc:
        raise ConfigError(exc.args[0], field="preset") from exc
    if args.out is None:
        args.out = "."
    _run_config(config, args)


COMMANDS = {
    "fbm-gen": cmd_fbm_gen,
    "queue-sim": cmd_queue_sim,
    "constants": cmd_constants,
    "c-constant": cmd_c_constant,
    "closed-form": cmd_closed_form,
    "asympt": cmd_asympt,
    "compare": cmd_compare,
    "preset": cmd_preset,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except AcceptanceStarvationError as exc:
        print(f"acceptance starvation: {exc}", file=sys.stderr)
        return EXIT_STARVATION
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ValueError as exc:
        print(f"invalid argument: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
