"""Command-line entry point: ``fictplay {run,value,compare,experiment,meta}``.

Every command takes ``--seed`` (default 0) and ``--config FILE.json``; keys
in the config file are flag names (dashes or underscores) and explicit flags
override them.  Exit status is 0 on success, 2 on usage or spec errors and 1
on runtime failures.
"""
import argparse
import json
import sys
from pathlib import Path

from ._io import atomic_write
from .dynamics import Algorithm, BestResponses, Mode, Steps, TiebreakRule, run, steps_for_budget
from .experiments import (PRESETS, ExperimentConfig, SeriesRecord, parallel_map,
                          run_experiment)
from .game import exact_value
from .generators import SpecError, parse_game_spec
from .population import SamplerSpec, meta_matrix
from .rng import derive_seed


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        atomic_write(Path(out), text)


def _add_common(p):
    p.add_argument("--seed", type=int, default=0,
                   help="base seed for random tiebreaks and derived seeds (default 0)")
    p.add_argument("--config", metavar="FILE",
                   help="JSON file of flag values; explicit flags take precedence")


def _add_game(p):
    p.add_argument("--game", help="game spec: cyclic:N, transitive:N, rps, rps-saferock, "
                                  "gauss:MxN:SEED or file:PATH")


def _add_dynamics(p):
    budget = p.add_mutually_exclusive_group()
    budget.add_argument("--brs", type=int, help="best-response budget per player")
    budget.add_argument("--steps", type=int, help="number of plays including the initial one")
    p.add_argument("--mode", choices=[m.value for m in Mode], default="two-player",
                   help="symmetric self-play on one average, or two players (default)")
    p.add_argument("--tiebreak", default="first",
                   help="first, last, random or order:I,J,... (0-based; default first)")
    p.add_argument("--init", type=_int_list, default=[0, 0],
                   help="initial row,col pure strategy indices, 0-based (default 0,0)")
    p.add_argument("--fp-init", type=int, default=0,
                   help="number of FP steps before switching to AFP (default 0)")
    p.add_argument("--scaled", action="store_true",
                   help="use n*T^n for transitive games (integer payoffs)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", help="output path (default stdout)")


def build_parser():
    parser = argparse.ArgumentParser(prog="fictplay", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("run", help="run FP, AFP or naive AFP and write the per-step trace CSV")
    _add_game(p)
    p.add_argument("--alg", choices=[a.value for a in Algorithm], default="fp",
                   help="algorithm (default fp)")
    _add_dynamics(p)
    _add_common(p)

    p = sub.add_parser("value", help="exact value and a Nash pair by linear programming")
    _add_game(p)
    p.add_argument("--scaled", action="store_true",
                   help="use n*T^n for transitive games (integer payoffs)")
    p.add_argument("--out", help="write the JSON result here instead of stdout")
    _add_common(p)

    p = sub.add_parser("compare", help="FP vs AFP worst-case payoff per best-response budget")
    _add_game(p)
    p.add_argument("--replicates", type=int, default=1,
                   help="independent tiebreak streams to aggregate (default 1)")
    _add_dynamics(p)
    _add_common(p)

    p = sub.add_parser("experiment", help="run a figure preset and write CSVs plus manifest.json")
    p.add_argument("preset", nargs="?", choices=sorted(PRESETS), help="preset name")
    p.add_argument("--replicates", type=int, help="replicates (default: desk scale per preset)")
    p.add_argument("--full", action="store_true", help="use the full-scale replicate counts")
    p.add_argument("--sizes", type=_int_list, help="comma-separated matrix sizes")
    p.add_argument("--brs", type=int, help="largest best-response budget")
    p.add_argument("--steps", type=int, help="steps per run (rate presets)")
    p.add_argument("--fit-from", type=int, help="first t of the log-log fit window")
    p.add_argument("--fp-init-steps", type=_int_list, help="FP initialization lengths to sweep")
    p.add_argument("--z", type=float, default=1.96, help="normal quantile for intervals")
    p.add_argument("--split-ties", action="store_true",
                   help="score exact ties as one half instead of a challenger win")
    p.add_argument("--tiebreak", default="random", help="tiebreak rule (default random)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", help="output directory (default results/PRESET)")
    _add_common(p)

    p = sub.add_parser("meta", help="emit the population meta-matrix as JSON")
    p.add_argument("--sampler", default="afp", help="fp, afp or afp-init:K (default afp)")
    p.add_argument("--n", type=int, default=11, help="population size (default 11)")
    p.add_argument("--out", help="output path (default stdout)")
    _add_common(p)
    return parser, sub.choices


def _parse(argv):
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        sub = subparsers[args.command]
        known = {a.dest for a in sub._actions}
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
        for key in ("init", "sizes", "fp_init_steps"):
            if isinstance(cfg.get(key), str):
                cfg[key] = _int_list(cfg[key])
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _game(args):
    if not args.game:
        raise UsageError("--game is required")
    return parse_game_spec(args.game).build(scaled=args.scaled)


def _budget(args):
    if args.brs is not None and args.steps is not None:
        raise UsageError("give only one of --brs and --steps")
    if args.brs is not None:
        return BestResponses(args.brs)
    if args.steps is not None:
        return Steps(args.steps)
    raise UsageError("one of --brs or --steps is required")


def _init(args):
    init = list(args.init)
    if len(init) == 1:
        init = init * 2
    if len(init) != 2:
        raise UsageError("--init takes one or two indices")
    return tuple(init)


def cmd_run(args):
    game = _game(args)
    trace = run(game, args.alg, args.mode, _budget(args), TiebreakRule.parse(args.tiebreak),
                args.seed, _init(args), args.fp_init)
    _emit(trace.to_csv(), args.out)


def cmd_value(args):
    game = _game(args)
    res = exact_value(game)
    doc = {"game": args.game, "value": res.value,
           "row_nash": res.row_nash.tolist(), "col_nash": res.col_nash.tolist()}
    _emit(json.dumps(doc, indent=1) + "\n", args.out)


def _compare_replicate(job):
    game, budget, mode, tiebreak, seed, r, init, fp_init = job
    rule = TiebreakRule.parse(tiebreak)
    fp = run(game, "fp", mode, budget, rule, derive_seed(seed, r, "fp"), init)
    afp = run(game, "afp", mode, budget, rule, derive_seed(seed, r, "afp"), init, fp_init)
    return fp, afp


def cmd_compare(args):
    game = _game(args)
    budget = _budget(args)
    if isinstance(budget, Steps):
        budget = BestResponses(budget.count)
    steps_for_budget("afp", budget, args.fp_init)
    if args.replicates < 1:
        raise UsageError("--replicates must be >= 1")
    jobs = [(game, budget, args.mode, args.tiebreak, args.seed, r, _init(args), args.fp_init)
            for r in range(args.replicates)]
    results = parallel_map(_compare_replicate, jobs, args.jobs)
    rec = SeriesRecord("compare", "best_responses")
    for b in range(1, budget.count + 1):
        fp_vals = [fp.wc_row[fp.at_best_responses(b)] for fp, _ in results]
        rec.add_summary(b, "fp", fp_vals)
        k = results[0][1].at_best_responses(b)
        if k >= 0 and results[0][1].br[k] == b:
            rec.add_summary(b, "afp", [afp.wc_row[afp.at_best_responses(b)] for _, afp in results])
    _emit(rec.to_csv(), args.out)


def cmd_experiment(args):
    if not args.preset:
        raise UsageError("a preset name is required")
    cfg = ExperimentConfig(
        preset=args.preset, replicates=args.replicates or 0, base_seed=args.seed,
        sizes=args.sizes, brs=args.brs or 0, steps=args.steps or 0, fit_from=args.fit_from or 0,
        fp_init_steps=args.fp_init_steps, z=args.z, split_ties=args.split_ties,
        tiebreak=str(TiebreakRule.parse(args.tiebreak)), jobs=args.jobs, full=args.full)
    out = Path(args.out or Path("results") / args.preset)
    for name in run_experiment(cfg, out):
        print(out / name)


def cmd_meta(args):
    try:
        meta = meta_matrix(SamplerSpec.parse(args.sampler), args.n)
    except ValueError as exc:
        raise UsageError(str(exc))
    _emit(meta.dumps() + "\n", args.out)


COMMANDS = {"run": cmd_run, "value": cmd_value, "compare": cmd_compare,
            "experiment": cmd_experiment, "meta": cmd_meta}


def main(argv=None):
    try:
        args = _parse(argv)
        COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except (UsageError, SpecError, argparse.ArgumentTypeError) as exc:
        print(f"fictplay: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"fictplay: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
