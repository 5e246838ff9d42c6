# experiments.py
# Reproduction suite: minimal independence models, the role of axiom D in
# both directions of the translation, equivalence of the McPhee systems,
# and the separation of H from H' under nontriviality.
# Run: python cli.py reproduce all --out reports/

from __future__ import annotations

import logging
import os
import time
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, Field

from config import Settings
from corpus import get_hypothesis, get_system, resolve_all, resolve_goal
from finder import independence_scan, is_completely_independent, lower_bound_violations, minimal_model_size
from formula import NamedFormula
from model import (canonical_form, format_triples, isomorphic, parse_triples, satisfies_signed,
                   strict_from_weak, weak_from_strict)
from prover import (Countermodel, NotDerivableError, Proved, Verdict, cross_check,
                    entails, needed_axioms, used_premises)

logger = logging.getLogger(__name__)

EXPERIMENTS = ('independence-models', 'detached-forward', 'detached-backward',
               'equivalence', 'separation')

Status = Literal['match', 'mismatch', 'paper-inconsistent', 'no-expectation']


# ---- EXPECTATIONS ----------------------------------------------
# Published values, each with the provenance note carried into reports.

MINIMAL_MODELS = {
    '+++++': (1, '(no true betweennesses)'),
    '+++-+': (1, '111'),
    '++-++': (3, '123, 132, 231, 321'),
    '++--+': (3, '(all possible betweennesses)'),
    '+-+++': (3, '(no true betweennesses)'),
    '+-+-+': (3, '121'),
    '-++++': (3, '123'),
    '-++-+': (2, '111, 122'),
    '-+-++': (3, '123, 213, 231'),
    '-+--+': (3, '111, 123, 132, 211'),
    '--+-+': (3, '111, 211'),
}
MINIMAL_MODELS_NOTE = 'published minimal-cardinality listing, row {pattern}'
FOUR_ELEMENT_NOTE   = 'stated: only 21 sign patterns actually require four elements'

# (system, axiom) -> is D needed when deriving the axiom from H with the weak-from-strict definition
D_NEEDED_FORWARD = [
    ('mcphee1', 'm1', 'no'),
    ('mcphee1', 'm2', 'yes'),
    ('mcphee1', 'm3', 'no'),
    ('mcphee1', 'm4', 'yes'),
    ('mcphee2', 'm3', 'no'),
    ('mcphee2', 'm4', 'no'),
    ('mcphee2', 'm5', 'yes'),
    ('mcphee3', 'm2', 'no'),
    ('mcphee3', 'm6', 'yes'),
    ('mcphee3', 'm7', 'yes'),
]
D_NEEDED_FORWARD_NOTE = 'published D-needed listing, {system} block'
FORWARD_PROSE_NOTE = ("prose says D's influence is spread among M1 and M2, "
                      "while the listing has its two 'yes' cells in M1 and M3")

# system -> McPhee axiom -> needed for deriving D with the strict-from-weak definition
NEEDED_BACKWARD = {
    'mcphee1': {'m1': 'no', 'm2': 'no', 'm3': 'no', 'm4': 'yes'},
    'mcphee2': {'m3': 'no', 'm4': 'yes', 'm5': 'no'},
    'mcphee3': {'m2': 'yes', 'm6': 'yes', 'm7': 'yes'},
}
NEEDED_BACKWARD_NOTE = 'published necessary-axiom listing for deriving D, {system} block'

SEPARATION = [
    # (system, with nontriviality, minimal size, witness class or None)
    ('huntington', False, 1, '(none)'),
    ('huntington_prime', False, 1, '(none)'),
    ('huntington', True, 3, '123, 321'),
    ('huntington_prime', True, 1, '111'),
]
SEPARATION_NOTE = {
    False: 'stated: both systems have 1-element models',
    True:  'stated: smallest nontrivial model of H has three elements, of H\' one',
}

WEAK_DEF   = 'def.weak_from_strict'
STRICT_DEF = 'def.strict_from_weak'


# ---- REPORTS ---------------------------------------------------

class ReportItem(BaseModel):
    key: str
    computed: str
    expected: Optional[str] = None
    provenance: Optional[str] = None
    status: Status = 'no-expectation'
    detail: str = ''


class ExperimentReport(BaseModel):
    name: str
    items: List[ReportItem] = []
    notes: List[str] = []
    elapsed_seconds: float = Field(default=0.0, exclude=True)

    def counts(self) -> Dict[str, int]:
        out = {s: 0 for s in ('match', 'mismatch', 'paper-inconsistent', 'no-expectation')}
        for item in self.items:
            out[item.status] += 1
        return out

    @property
    def ok(self) -> bool:
        return not any(item.status == 'mismatch' for item in self.items)

    def to_frame(self) -> pd.DataFrame:
        cols = ['key', 'computed', 'expected', 'status', 'provenance', 'detail']
        return pd.DataFrame([item.model_dump() for item in self.items], columns=cols)


def _status(computed: str, expected: Optional[str], conflicting: bool = False) -> str:
    if expected is None:
        return 'no-expectation'
    if conflicting:
        return 'paper-inconsistent'
    return 'match' if computed == expected else 'mismatch'


def _item(key, computed, expected=None, provenance=None, detail='', conflicting=False) -> ReportItem:
    return ReportItem(key=key, computed=computed, expected=expected, provenance=provenance,
                      status=_status(computed, expected, conflicting), detail=detail)


# ---- OBLIGATIONS -----------------------------------------------

def _revalidate(v: Verdict, settings: Settings) -> Verdict:
    if isinstance(v, Proved) and settings.cross_check:
        model = cross_check(v, settings.cross_check_size)
        if model is not None:
            raise RuntimeError(f'Proved obligation has a countermodel of size {model.n}')
    return v


def _prove(premises: Tuple[str, ...], goal: str, settings: Settings) -> Verdict:
    """Worker: one entailment, named by selectors so it pickles cheaply."""
    v = entails(resolve_all(premises), resolve_goal(goal).formula, settings.depth_cap,
                settings.size_cap, minimize=settings.minimize_cores)
    logger.info('%s |- %s: %s', ','.join(premises), goal, v.kind)
    return _revalidate(v, settings)


def _prove_all(obligations: Sequence[Tuple[Tuple[str, ...], str]],
               settings: Settings) -> Dict[Tuple[Tuple[str, ...], str], Verdict]:
    unique = list(dict.fromkeys(obligations))
    verdicts = Parallel(n_jobs=settings.n_jobs)(delayed(_prove)(p, g, settings) for p, g in unique)
    return dict(zip(unique, verdicts))


def _detail(v: Verdict) -> str:
    if isinstance(v, Countermodel):
        return f'countermodel n={v.model.n}: ' + '; '.join(
            f'{r} {format_triples(v.model, r)}' for r in v.model.relations)
    if isinstance(v, Proved):
        return f"{v.method} {v.bound}; used {', '.join(sorted(used_premises(v))) or 'nothing'}"
    return v.reason


def _mcphee_selector(axiom: str) -> str:
    return f'mcphee.{axiom[1:]}'


# ---- EXPERIMENTS -----------------------------------------------

def _roundtrip_failures(system, results) -> List[str]:
    d = system.names.index('D')
    out = []
    for r in results:
        if r.found and r.pattern[d] == '+':
            back = strict_from_weak(weak_from_strict(r.witness))
            if format_triples(back) != format_triples(r.witness):
                out.append(r.pattern)
    return out


def independence_models(settings: Settings) -> ExperimentReport:
    system = get_system('huntington')
    results = independence_scan(system, settings.cap, n_jobs=settings.n_jobs)
    items = []
    for r in results:
        expected, note = (str(MINIMAL_MODELS[r.pattern][0]),
                          MINIMAL_MODELS_NOTE.format(pattern=r.pattern)) \
            if r.pattern in MINIMAL_MODELS else ('4', FOUR_ELEMENT_NOTE)
        computed = str(r.size) if r.found else 'none'
        detail = format_triples(canonical_form(r.witness)) if r.found else f'no model up to {r.cap}'
        items.append(_item(r.pattern, computed, expected, note, detail))

    for pattern, (n, text) in MINIMAL_MODELS.items():
        ok = satisfies_signed(parse_triples(text, n), system, pattern)
        items.append(_item(f'{pattern} published interpretation', 'satisfies' if ok else 'fails',
                           'satisfies', MINIMAL_MODELS_NOTE.format(pattern=pattern), text))

    complete = is_completely_independent(results)
    items.append(_item('complete independence', 'yes' if complete else 'no', 'yes',
                       'stated: all 32 sign patterns have models'))
    violations = lower_bound_violations(system, results, settings.cap)
    items.append(_item('witnesses below negation lower bounds', str(len(violations)), '0',
                       'each negated axiom needs as many elements as its Skolem witnesses',
                       '; '.join(violations)))
    broken = _roundtrip_failures(system, results)
    items.append(_item('interdefinition round trip failures', str(len(broken)), '0',
                       'wb by the weak-from-strict definition, then sb by the strict-from-weak one, '
                       'on every witness where D holds', ', '.join(broken)))
    return ExperimentReport(name='independence-models', items=items)


def detached_forward(settings: Settings) -> ExperimentReport:
    full_premises = ('huntington', WEAK_DEF)
    without_d = ('huntington_prime', WEAK_DEF)
    axioms = list(dict.fromkeys(ax for _, ax, _ in D_NEEDED_FORWARD))
    obligations = [(full_premises, _mcphee_selector(a)) for a in axioms]
    obligations += [(without_d, _mcphee_selector(a)) for a in axioms]
    verdicts = _prove_all(obligations, settings)

    computed = {}
    details = {}
    for a in axioms:
        full = verdicts[(full_premises, _mcphee_selector(a))]
        if not isinstance(full, Proved):
            computed[a] = 'not-derivable'
            details[a] = f'from H with the definition: {_detail(full)}'
            continue
        reduced = verdicts[(without_d, _mcphee_selector(a))]
        computed[a] = {'countermodel': 'yes', 'proved': 'no'}.get(reduced.kind, 'unknown')
        details[a] = f'without D: {_detail(reduced)}'

    published: Dict[str, set] = {}
    for _, a, value in D_NEEDED_FORWARD:
        published.setdefault(a, set()).add(value)
    items = []
    for system, a, value in D_NEEDED_FORWARD:
        items.append(_item(f'{system} {a}', computed[a], value,
                           D_NEEDED_FORWARD_NOTE.format(system=system), details[a],
                           conflicting=len(published[a]) > 1))
    return ExperimentReport(name='detached-forward', items=items, notes=[FORWARD_PROSE_NOTE])


def _needed_for_system(system_name: str, settings: Settings):
    system = get_system(system_name)
    premises = system.named() + resolve_all([STRICT_DEF])
    goal = resolve_goal('huntington.D').formula
    try:
        table = needed_axioms(premises, goal, settings.depth_cap, settings.size_cap,
                              check=lambda v: _revalidate(v, settings))
    except NotDerivableError as exc:
        return system_name, None, str(exc)
    return system_name, {name: (nv.status, _detail(nv.verdict)) for name, nv in table.items()}, ''


def detached_backward(settings: Settings) -> ExperimentReport:
    rows = Parallel(n_jobs=settings.n_jobs)(
        delayed(_needed_for_system)(name, settings) for name in NEEDED_BACKWARD
    )
    items = []
    for system_name, table, error in rows:
        note = NEEDED_BACKWARD_NOTE.format(system=system_name)
        for axiom, expected in NEEDED_BACKWARD[system_name].items():
            if table is None:
                items.append(_item(f'{system_name} {axiom}', 'not-derivable', expected, note, error))
                continue
            status, detail = table[_mcphee_selector(axiom)]
            items.append(_item(f'{system_name} {axiom}', status, expected, note, detail))
        if table is not None:
            status, detail = table[STRICT_DEF]
            items.append(_item(f'{system_name} {STRICT_DEF}', status, None, None, detail))
    return ExperimentReport(name='detached-backward', items=items)


def equivalence(settings: Settings) -> ExperimentReport:
    mcphee = ['mcphee1', 'mcphee2', 'mcphee3']
    groups: List[Tuple[str, Tuple[str, ...], str]] = []
    for a in ['m1', 'm2', 'm3', 'm4', 'm5', 'm6', 'm7']:
        groups.append(('from H', ('huntington', WEAK_DEF), _mcphee_selector(a)))
    for name in mcphee:
        for ax in get_system('huntington').names:
            groups.append((f'from {name}', (name, STRICT_DEF), f'huntington.{ax}'))
    for src in mcphee:
        for dst in mcphee:
            if src == dst:
                continue
            for ax in get_system(dst).names:
                groups.append((f'{dst} from {src}', (src,), _mcphee_selector(ax)))
    verdicts = _prove_all([(p, g) for _, p, g in groups], settings)
    notes = {
        'from H': 'stated: every McPhee axiom follows from H with the weak-from-strict definition',
        'from m': 'stated: every H axiom follows from each McPhee system with the strict-from-weak definition',
        'between': "stated: McPhee's three systems are equivalent",
    }
    items = []
    for label, premises, goal in groups:
        v = verdicts[(premises, goal)]
        kind = 'from H' if label == 'from H' else 'from m' if label.startswith('from') else 'between'
        items.append(_item(f'{goal} {label}', v.kind, 'proved', notes[kind], _detail(v)))
    return ExperimentReport(name='equivalence', items=items)


def separation(settings: Settings) -> ExperimentReport:
    items = []
    nontrivial = NamedFormula('hyp.nontrivial', get_hypothesis('nontrivial'))
    for system_name, with_hyp, expected, witness in SEPARATION:
        formulas = get_system(system_name).named() + ([nontrivial] if with_hyp else [])
        r = minimal_model_size(formulas, settings.cap)
        label = system_name + (' with nontriviality' if with_hyp else '')
        found = format_triples(canonical_form(r.witness)) if r.found else 'none'
        items.append(_item(f'{label} minimal size', str(r.size) if r.found else 'none',
                           str(expected), SEPARATION_NOTE[with_hyp], found))
        if r.found and r.size == expected:
            same = isomorphic(r.witness, parse_triples(witness, expected))
            items.append(_item(f'{label} witness class', witness if same else found, witness,
                               SEPARATION_NOTE[with_hyp]))
    return ExperimentReport(name='separation', items=items)


RUNNERS = {
    'independence-models': independence_models,
    'detached-forward':    detached_forward,
    'detached-backward':   detached_backward,
    'equivalence':         equivalence,
    'separation':          separation,
}

ALIASES = {
    'table1': 'independence-models',
    'table2': 'detached-forward',
    'table3': 'detached-backward',
}


def run_experiment(name: str, settings: Optional[Settings] = None) -> ExperimentReport:
    name = ALIASES.get(name, name)
    if name not in RUNNERS:
        raise ValueError(f"Unknown experiment '{name}'. Valid: {', '.join(EXPERIMENTS)}, all")
    settings = settings or Settings.from_env()
    start = time.perf_counter()
    report = RUNNERS[name](settings)
    report.elapsed_seconds = round(time.perf_counter() - start, 3)
    logger.info('%s: %s in %.1fs', name, report.counts(), report.elapsed_seconds)
    return report


def run_all(settings: Optional[Settings] = None, names: Sequence[str] = EXPERIMENTS) -> List[ExperimentReport]:
    return [run_experiment(n, settings) for n in names]


# ---- RENDERING -------------------------------------------------

def render_text(report: ExperimentReport) -> str:
    frame = report.to_frame()[['key', 'computed', 'expected', 'status']].fillna('-')
    counts = ', '.join(f'{k}: {v}' for k, v in report.counts().items() if v)
    lines = [f'== {report.name} ==', frame.to_string(index=False), counts]
    lines += [f'note: {n}' for n in report.notes]
    return '\n'.join(lines) + '\n'


def render_json(report: ExperimentReport) -> str:
    return report.model_dump_json(indent=2) + '\n'


def render_csv(report: ExperimentReport) -> str:
    return report.to_frame().to_csv(index=False)


RENDERERS = {'text': render_text, 'json': render_json, 'csv': render_csv}
EXTENSIONS = {'text': 'txt', 'json': 'json', 'csv': 'csv'}


def summary_frame(reports: Sequence[ExperimentReport]) -> pd.DataFrame:
    rows = [{'experiment': r.name, 'items': len(r.items), **r.counts()} for r in reports]
    return pd.DataFrame(rows)


def write_reports(reports: Sequence[ExperimentReport], out_dir: str, fmt: str = 'text') -> List[str]:
    """One file per experiment plus a summary; contents carry no timings."""
    os.makedirs(out_dir, exist_ok=True)
    render = RENDERERS[fmt]
    paths = []
    for report in reports:
        path = os.path.join(out_dir, f'{report.name}.{EXTENSIONS[fmt]}')
        with open(path, 'w') as fh:
            fh.write(render(report))
        paths.append(path)
    frame = summary_frame(reports)
    path = os.path.join(out_dir, f'summary.{EXTENSIONS[fmt]}')
    with open(path, 'w') as fh:
        if fmt == 'json':
            fh.write(frame.to_json(orient='records', indent=2) + '\n')
        elif fmt == 'csv':
            fh.write(frame.to_csv(index=False))
        else:
            fh.write(frame.to_string(index=False) + '\n')
    paths.append(path)
    return paths
