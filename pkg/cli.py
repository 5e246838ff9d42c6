# cli.py
# Command-line front end.
# Run: python cli.py min-model --system huntington --pattern=-++-+
#      python cli.py reproduce all --out reports/
#
# Exit codes: 0 ok, 1 mismatch or countersatisfiable, 2 usage error, 3 unknown verdict.

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

import pandas as pd

from config import VERSION, Settings
from corpus import CorpusError, get_system, resolve_all, resolve_goal, signed_set
from experiments import ALIASES, EXPERIMENTS, RENDERERS, run_all, write_reports
from finder import find_model, independence_scan, minimal_model_size, witness_summary
from formula import FormulaError, export_problem
from model import ModelError, canonical_form, describe
from monitoring import RunMonitor
from prover import (Countermodel, NotDerivableError, Proved, SignatureMismatch, describe_verdict,
                    entails, needed_axioms)
from validation import validate_caps, validate_pattern, validate_selectors

logger = logging.getLogger('betweenlab')

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_UNKNOWN = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _split(text: Optional[str]) -> List[str]:
    return [s.strip() for s in (text or '').split(',') if s.strip()]


def _check(result: dict):
    for w in result['warnings']:
        logger.warning(w)
    if not result['valid']:
        raise UsageError('; '.join(result['errors']))


def _emit(args, payload: dict, text: str, frame: Optional[pd.DataFrame] = None):
    if args.format == 'json':
        out = json.dumps(payload, indent=2)
    elif args.format == 'csv':
        out = (frame if frame is not None else pd.DataFrame([payload])).to_csv(index=False).rstrip('\n')
    else:
        out = text
    print(out)


def _premises(args):
    names = _split(args.premises)
    _check(validate_selectors(names + [args.goal]))
    premises = resolve_all(names)
    without = set(_split(getattr(args, 'without', None)))
    unknown = without - {p.name for p in premises}
    if unknown:
        raise UsageError(f'--without names premises not in the list: {sorted(unknown)}')
    return [p for p in premises if p.name not in without], resolve_goal(args.goal)


def _formulas(args):
    system = get_system(args.system)
    if args.pattern:
        _check(validate_pattern(args.system, args.pattern))
        formulas = signed_set(system, args.pattern)
    else:
        formulas = system.named()
    extra = _split(getattr(args, 'with_', None))
    if extra:
        _check(validate_selectors(extra))
        formulas += resolve_all(extra)
    return formulas


# ---- COMMANDS --------------------------------------------------

def cmd_find_model(args, settings) -> int:
    _check(validate_caps(size=args.size, symmetry_breaking=args.symmetry_breaking))
    verdict = find_model(_formulas(args), args.size, symmetry_breaking=args.symmetry_breaking,
                         dimacs_path=args.dimacs)
    if verdict.satisfiable:
        text = f'model of size {args.size}\n{describe(verdict.model)}'
        payload = {'satisfiable': True, 'model': verdict.model.to_json()}
    else:
        text = f"no model of size {args.size}; conflicting: {', '.join(sorted(verdict.core))}"
        payload = {'satisfiable': False, 'core': sorted(verdict.core)}
    _emit(args, payload, text)
    return EXIT_OK


def cmd_min_model(args, settings) -> int:
    _check(validate_caps(cap=settings.cap))
    result = minimal_model_size(_formulas(args), settings.cap, args.symmetry_breaking,
                                system=args.system, pattern=args.pattern)
    if result.found:
        text = f'{result.size}\n{describe(canonical_form(result.witness))}'
    else:
        text = f'no model up to size {settings.cap}'
    _emit(args, result.to_dict(), text)
    return EXIT_OK


def cmd_independence(args, settings) -> int:
    _check(validate_caps(cap=settings.cap))
    results = independence_scan(get_system(args.system), settings.cap, n_jobs=settings.n_jobs)
    frame = pd.DataFrame([{
        'pattern':             r.pattern,
        'minimal_cardinality': r.size,
        'witness':             witness_summary(r),
    } for r in results])
    payload = {'system': args.system, 'rows': frame.to_dict(orient='records')}
    _emit(args, payload, frame.to_string(index=False), frame)
    return EXIT_OK if all(r.found for r in results) else EXIT_FAIL


def _verdict_code(v) -> int:
    if isinstance(v, Proved):
        return EXIT_OK
    if isinstance(v, Countermodel):
        return EXIT_FAIL
    return EXIT_UNKNOWN


def cmd_derive(args, settings) -> int:
    premises, goal = _premises(args)
    v = entails(premises, goal.formula, settings.depth_cap, settings.size_cap,
                minimize=settings.minimize_cores)
    _emit(args, {'goal': goal.name, 'premises': [p.name for p in premises], **v.to_dict()},
          describe_verdict(v))
    return _verdict_code(v)


def cmd_needed(args, settings) -> int:
    premises, goal = _premises(args)
    try:
        table = needed_axioms(premises, goal.formula, settings.depth_cap, settings.size_cap)
    except NotDerivableError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    frame = pd.DataFrame([{'premise': k, 'needed': v.status} for k, v in table.items()])
    payload = {'goal': goal.name, 'needed': {k: v.status for k, v in table.items()}}
    _emit(args, payload, '\n'.join(f'{k}: {v.status}' for k, v in table.items()), frame)
    return EXIT_UNKNOWN if any(v.status == 'unknown' for v in table.values()) else EXIT_OK


def cmd_reproduce(args, settings) -> int:
    names = EXPERIMENTS if args.experiment == 'all' else (args.experiment,)
    reports = run_all(settings, names)
    monitor = RunMonitor(history_path=args.history)
    for r in reports:
        monitor.log_experiment(r)
    if args.out:
        paths = write_reports(reports, args.out, args.format)
        paths.append(monitor.save(args.out))
        for p in paths:
            logger.info('wrote %s', p)
    else:
        for r in reports:
            sys.stdout.write(RENDERERS[args.format](r))
        if args.history:
            monitor.save()
    if args.history:
        logger.info('recent runs: %s', monitor.get_recent_runs())
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL


def cmd_export_tptp(args, settings) -> int:
    premises, goal = _premises(args)
    text = export_problem(premises, goal.formula, goal_name=goal.name)
    with open(args.out, 'w') as fh:
        fh.write(text)
    logger.info('wrote %s', args.out)
    return EXIT_OK


# ---- PARSER ----------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault('allow_abbrev', False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(f'{message} (try --help)')


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument('--format', choices=sorted(RENDERERS), default='text')
    common.add_argument('-v', '--verbose', action='count', default=0)
    common.add_argument('--jobs', type=int, help='worker processes (default: all cores)')

    parser = _Parser(prog='betweenlab', description='Betweenness axiom independence and derivability lab')
    parser.add_argument('--version', action='version', version=f'betweenlab {VERSION}')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    p = sub.add_parser('find-model', parents=[common], help='search for a model of one size')
    p.add_argument('--system', required=True)
    p.add_argument('--pattern')
    p.add_argument('--with', dest='with_', help='extra selectors, comma separated')
    p.add_argument('--size', type=int, required=True)
    p.add_argument('--symmetry-breaking', action='store_true')
    p.add_argument('--dimacs', help='write the ground problem in DIMACS form')
    p.set_defaults(func=cmd_find_model)

    p = sub.add_parser('min-model', parents=[common], help='smallest model')
    p.add_argument('--system', required=True)
    p.add_argument('--pattern')
    p.add_argument('--with', dest='with_', help='extra selectors, comma separated')
    p.add_argument('--cap', type=int)
    p.add_argument('--symmetry-breaking', action='store_true')
    p.set_defaults(func=cmd_min_model)

    p = sub.add_parser('independence', parents=[common], help='minimal models of every sign pattern')
    p.add_argument('--system', required=True)
    p.add_argument('--cap', type=int)
    p.set_defaults(func=cmd_independence)

    for name, func, helptext in (('derive', cmd_derive, 'does the goal follow?'),
                                 ('needed', cmd_needed, 'which premises are needed?'),
                                 ('export-tptp', cmd_export_tptp, 'write the obligation as TPTP')):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument('--premises', required=True, help='selectors or systems, comma separated')
        p.add_argument('--goal', required=True)
        p.add_argument('--without', help='premises to drop, comma separated')
        p.add_argument('--depth-cap', type=int)
        p.add_argument('--size-cap', type=int)
        p.add_argument('--minimize-cores', action='store_true', default=None)
        if name == 'export-tptp':
            p.add_argument('--out', required=True)
        p.set_defaults(func=func)

    p = sub.add_parser('reproduce', parents=[common], help='run the reproduction suite')
    p.add_argument('experiment', choices=list(EXPERIMENTS) + sorted(ALIASES) + ['all'])
    p.add_argument('--out', help='directory for one report per experiment plus a summary')
    p.add_argument('--history', help='JSON file collecting a summary of every run')
    p.add_argument('--cap', type=int)
    p.add_argument('--minimize-cores', action='store_true', default=None)
    p.set_defaults(func=cmd_reproduce)
    return parser


def _configure_logging(verbosity: int):
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    fmt = '%(levelname)s %(name)s: %(message)s'
    if not os.environ.get('NO_COLOR') and sys.stderr.isatty():
        fmt = '\033[2m%(levelname)s %(name)s:\033[0m %(message)s'
    logging.basicConfig(level=level, format=fmt, force=True)


def run(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _configure_logging(args.verbose)
        settings = Settings.from_env(
            cap=getattr(args, 'cap', None),
            depth_cap=getattr(args, 'depth_cap', None),
            size_cap=getattr(args, 'size_cap', None),
            jobs=args.jobs,
            minimize_cores=getattr(args, 'minimize_cores', None),
        )
        return args.func(args, settings)
    except UsageError as exc:
        print(f'error: {exc}', file=sys.stderr)
        return EXIT_USAGE
    except (CorpusError, FormulaError, ModelError, SignatureMismatch, ValueError) as exc:
        print(f'error: {exc}', file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help and --version
        return EXIT_OK if not exc.code else EXIT_USAGE


if __name__ == '__main__':
    sys.exit(run())
