"""Command-line front end.

Exit codes: 0 success, 1 verification or acceptance failure, 2 manifest or
trace-schema error (including a construction mismatch), 3 a desk-scale cap
was exceeded.
"""

import argparse
import sys
from pathlib import Path

from . import __version__
from .errors import CapExceeded
from .harness import DEFAULT_CONFIG, STAGE_CAPS, builtin_adversaries, run_construction, verify_records
from .manifest import ENV_DIR, ManifestError, load_manifest, resolve_manifest
from .trace import TraceSchemaError, dumps, read_trace, write_trace

OK, FAILED, BAD_INPUT, CAPPED = 0, 1, 2, 3


def _load(name):
    return load_manifest(resolve_manifest(name))


def _err(msg):
    print(f"introimmune: {msg}", file=sys.stderr)


def cmd_run(args):
    manifest = _load(args.manifest)
    if manifest.construction and manifest.construction != args.construction:
        _err(f"{manifest.source} is a {manifest.construction} pack, not {args.construction}")
        return BAD_INPUT
    config = {"oracle_mode": args.oracle_mode, "budget": args.budget, "horizon": args.horizon,
              "h_cap": args.h_cap, "q_horizon": args.q_horizon, "seed": args.seed}
    result = run_construction(args.construction, manifest.substrate, args.stages, config, manifest.name,
                              max_stages=args.max_stages)
    if args.output:
        write_trace(args.output, result.records)
    else:
        sys.stdout.write("".join(dumps(r) + "\n" for r in result.records))
    if not args.quiet:
        fin = result.records[-1]["payload"]
        if fin.get("approximate"):
            print(f"oracle: APPROXIMATE (budgeted answers at budget {args.budget}; "
                  f"tally {fin.get('halting')})", file=sys.stderr)
        else:
            print(f"oracle: exact (tally {fin.get('halting', {})})", file=sys.stderr)
        acts = sum(1 for r in result.records[1:-1] if r["kind"] not in ("no-action", "default"))
        print(f"{args.construction} {manifest.name}: {args.stages} stages, {acts} action events",
              file=sys.stderr)
    return OK


def cmd_verify(args):
    info, events, fin = read_trace(args.trace)
    manifest = _load(args.manifest or info.get("pack"))
    if manifest.construction and manifest.construction != info["construction"]:
        _err(f"trace is {info['construction']} but {manifest.source} is a {manifest.construction} pack")
        return BAD_INPUT
    problems = verify_records(info, events, fin, manifest.substrate)
    lines = [f"{info['construction']} trace {args.trace}: {len(events)} stages, "
             f"{len(problems)} violations", *(f"  {p}" for p in problems)]
    text = "\n".join(lines) + "\n"
    if args.report:
        Path(args.report).write_text(text)
    sys.stdout.write(text)
    return FAILED if problems else OK


def cmd_accept(args):
    from .acceptance import CRITERIA, run_criterion
    keys = {c.key for c in CRITERIA}
    unknown = set(args.only or ()) - keys
    if unknown:
        _err(f"unknown criteria {sorted(unknown)}; choose from {sorted(keys)}")
        return BAD_INPUT
    lines, ok = [], True
    for criterion in CRITERIA:
        if args.only and criterion.key not in args.only:
            continue
        outcome = run_criterion(criterion, fault=args.inject_fault)
        line = outcome.line() + (f" [{outcome.seconds:.1f}s]" if args.timings else "")
        print(line, flush=True)
        lines.append(line)
        ok &= outcome.passed
    if args.report:
        Path(args.report).write_text("\n".join(lines) + "\n")
    return OK if ok else FAILED


def cmd_list_packs(args):
    for pack in builtin_adversaries(args.construction):
        print(f"{pack.name:18} {pack.construction:4} {pack.description}")
    return OK


def build_parser():
    parser = argparse.ArgumentParser(prog="introimmune", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a construction and write its trace")
    run.add_argument("construction", choices=sorted(STAGE_CAPS))
    run.add_argument("--manifest", required=True,
                     help=f"manifest path, file in ${ENV_DIR}, or builtin pack name")
    run.add_argument("--stages", type=int, required=True)
    run.add_argument("--output", "-o", help="trace path (default: stdout)")
    run.add_argument("--oracle-mode", choices=("exact", "budgeted"), default=DEFAULT_CONFIG["oracle_mode"])
    run.add_argument("--budget", type=int, default=DEFAULT_CONFIG["budget"],
                     help="step budget for budgeted halting answers")
    run.add_argument("--horizon", type=int, default=DEFAULT_CONFIG["horizon"],
                     help="markers kept in each wtt snapshot")
    run.add_argument("--h-cap", type=int, default=DEFAULT_CONFIG["h_cap"],
                     help="largest h(s) a D-mode run may enumerate subsets for")
    run.add_argument("--q-horizon", type=int, default=DEFAULT_CONFIG["q_horizon"],
                     help="search horizon for the Q witness condition")
    run.add_argument("--max-stages", type=int, help="override the stage cap for this construction")
    run.add_argument("--seed", type=int, default=DEFAULT_CONFIG["seed"],
                     help="sampling seed for verifiers; never changes the trace")
    run.add_argument("--quiet", "-q", action="store_true")
    run.set_defaults(func=cmd_run)

    verify = sub.add_parser("verify", help="check every invariant against a trace")
    verify.add_argument("trace")
    verify.add_argument("--manifest", help="defaults to the pack named in the trace header")
    verify.add_argument("--report", help="also write the report here")
    verify.set_defaults(func=cmd_verify)

    accept = sub.add_parser("accept", help="run the acceptance criteria")
    accept.add_argument("--inject-fault", action="store_true",
                        help="swap in mutated stage machines (negative control)")
    accept.add_argument("--only", nargs="+", metavar="KEY")
    accept.add_argument("--timings", action="store_true")
    accept.add_argument("--report")
    accept.set_defaults(func=cmd_accept)

    packs = sub.add_parser("list-packs", help="list builtin adversary packs")
    packs.add_argument("--construction", choices=sorted(STAGE_CAPS))
    packs.set_defaults(func=cmd_list_packs)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ManifestError, TraceSchemaError) as err:
        _err(str(err))
        return BAD_INPUT
    except CapExceeded as err:
        _err(f"refused: {err}")
        return CAPPED


if __name__ == "__main__":
    sys.exit(main())
