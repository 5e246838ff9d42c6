# prover.py
# Entailment between axiom sets: decision on the EPR fragment by bounded
# domain search, otherwise Herbrand instantiation interleaved with finite
# countermodel search.  Needed-axiom analysis builds on it.

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from config import CROSS_CHECK_SIZE, DEFAULT_DEPTH_CAP, DEFAULT_SIZE_CAP
from finder import find_model
from formula import (ClauseSet, Formula, NamedFormula, SignatureError, as_named, clausify_all,
                     is_epr, negate, symbols_of)
from model import FiniteModel, canonical_form, describe, evaluate
from solver import GroundingTooLarge, extract_model, ground_herbrand, ground_over_domain, solve

logger = logging.getLogger(__name__)

GOAL_TAG = '~goal'


class SignatureMismatch(ValueError):
    pass


class NotDerivableError(ValueError):
    pass


# ---- VERDICTS --------------------------------------------------

@dataclass(frozen=True)
class Proved:
    premises: Tuple[NamedFormula, ...]
    goal: Formula
    core: FrozenSet[str]
    goal_used: bool
    method: str
    bound: int
    kind: str = field(default='proved', init=False)

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'method': self.method, 'bound': self.bound,
                'core': sorted(self.core), 'goal_used': self.goal_used}


@dataclass(frozen=True)
class Countermodel:
    model: FiniteModel
    kind: str = field(default='countermodel', init=False)

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'size': self.model.n, 'model': self.model.to_json()}


@dataclass(frozen=True)
class Unknown:
    depth: int
    size: int
    reason: str = 'bounds exhausted'
    kind: str = field(default='unknown', init=False)

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'depth': self.depth, 'size': self.size, 'reason': self.reason}


Verdict = Union[Proved, Countermodel, Unknown]


def describe_verdict(v: Verdict) -> str:
    if isinstance(v, Proved):
        return f"proved ({v.method} {v.bound}); premises used: {', '.join(sorted(v.core)) or 'none'}"
    if isinstance(v, Countermodel):
        return f'countermodel of size {v.model.n}\n{describe(v.model)}'
    return f'unknown (depth {v.depth}, size {v.size}: {v.reason})'


# ---- CORE ------------------------------------------------------

def check_signature(formulas: Iterable[Formula]):
    seen: Dict[Tuple[str, str], int] = {}
    for f in formulas:
        try:
            symbols_of(f, seen)
        except SignatureError as exc:
            raise SignatureMismatch(str(exc)) from None
    by_name: Dict[str, str] = {}
    for kind, name in seen:
        if by_name.setdefault(name, kind) != kind:
            raise SignatureMismatch(f"Symbol '{name}' used both as {by_name[name]} and {kind}")


def _domain_refutes(named: List[NamedFormula], k: int):
    """All sizes 1..k unsatisfiable -> (True, union of cores); else (False, first model)."""
    core = set()
    for n in range(1, k + 1):
        problem = ground_over_domain(named, n)
        result = solve(problem)
        if result.satisfiable:
            return False, extract_model(problem, result.assignment)
        core |= result.core
    return True, frozenset(core)


def _herbrand_refutes(cs: ClauseSet, depth: int):
    result = solve(ground_herbrand(cs, depth))
    return (not result.satisfiable), result.core


def _epr_bound(cs: ClauseSet) -> int:
    return max(1, len(cs.constants()))


def refute(named: Sequence[NamedFormula], depth_cap: int = DEFAULT_DEPTH_CAP,
           size_cap: int = DEFAULT_SIZE_CAP):
    """Decide (EPR) or semi-decide unsatisfiability of a named formula set.

    Returns ('unsat', core, method, bound), ('sat', model) or ('unknown', reason).
    """
    named = as_named(named)
    cs = clausify_all(named)
    if is_epr(cs):
        k = _epr_bound(cs)
        unsat, payload = _domain_refutes(named, k)
        if unsat:
            return ('unsat', payload, 'domain', k)
        return ('sat', payload)
    for step in range(max(depth_cap + 1, size_cap)):
        if step <= depth_cap:
            try:
                unsat, core = _herbrand_refutes(cs, step)
            except GroundingTooLarge as exc:
                logger.info('Herbrand search stopped: %s', exc)
                depth_cap = step - 1
                unsat = False
            if unsat:
                return ('unsat', core, 'herbrand', step)
        if step + 1 <= size_cap:
            verdict = find_model(named, step + 1)
            if verdict.satisfiable:
                return ('sat', verdict.model)
    return ('unknown', f'no refutation to depth {depth_cap}, no model up to size {size_cap}')


def entails(premises, goal: Formula, depth_cap: int = DEFAULT_DEPTH_CAP,
            size_cap: int = DEFAULT_SIZE_CAP, minimize: bool = False) -> Verdict:
    premises = as_named(premises)
    check_signature([f for _, f in premises] + [goal])
    named = premises + [NamedFormula(GOAL_TAG, negate(goal))]
    outcome = refute(named, depth_cap, size_cap)
    if outcome[0] == 'sat':
        model = canonical_form(outcome[1])
        bad = [n for n, f in premises if not evaluate(model, f)]
        if bad or evaluate(model, goal):
            raise RuntimeError(f'Countermodel fails re-evaluation (premises {bad})')
        logger.debug('countermodel of size %d', model.n)
        return Countermodel(model)
    if outcome[0] == 'unknown':
        return Unknown(depth_cap, size_cap, outcome[1])
    _, core, method, bound = outcome
    proved = Proved(tuple(premises), goal, frozenset(core) - {GOAL_TAG}, GOAL_TAG in core,
                    method, bound)
    if minimize:
        proved = Proved(proved.premises, goal, used_premises(proved, minimize=True),
                        proved.goal_used, method, bound)
    return proved


def _still_refuted(proved: Proved, names: Iterable[str]) -> bool:
    keep = set(names)
    named = [nf for nf in proved.premises if nf.name in keep]
    named.append(NamedFormula(GOAL_TAG, negate(proved.goal)))
    if proved.method == 'domain':
        cs = clausify_all(named)
        return _domain_refutes(named, _epr_bound(cs))[0]
    try:
        return _herbrand_refutes(clausify_all(named), proved.bound)[0]
    except GroundingTooLarge:
        return False


def used_premises(proved: Proved, minimize: bool = False) -> FrozenSet[str]:
    """Premises the refutation relied on; with minimize, a deletion-minimal subset."""
    core = set(proved.core)
    if not minimize:
        return frozenset(core)
    for name in sorted(proved.core):
        trial = core - {name}
        if _still_refuted(proved, trial):
            core = trial
    return frozenset(core)


def cross_check(proved: Proved, up_to: int = CROSS_CHECK_SIZE) -> Optional[FiniteModel]:
    """A model of premises plus negated goal up to the given size; None when sound."""
    named = list(proved.premises) + [NamedFormula(GOAL_TAG, negate(proved.goal))]
    for n in range(1, up_to + 1):
        verdict = find_model(named, n)
        if verdict.satisfiable:
            return verdict.model
    return None


@dataclass(frozen=True)
class NeededVerdict:
    premise: str
    status: str
    verdict: Verdict

    def to_dict(self) -> dict:
        return {'premise': self.premise, 'needed': self.status, 'verdict': self.verdict.to_dict()}


def _needed_status(v: Verdict) -> str:
    if isinstance(v, Countermodel):
        return 'yes'
    if isinstance(v, Proved):
        return 'no'
    return 'unknown'


def needed_axioms(premises, goal: Formula, depth_cap: int = DEFAULT_DEPTH_CAP,
                  size_cap: int = DEFAULT_SIZE_CAP,
                  check: Optional[Callable[[Verdict], Verdict]] = None) -> Dict[str, NeededVerdict]:
    """For each premise, whether the goal stops following once it is removed.

    `check` sees every verdict, the full derivation included, before it is used.
    """
    check = check or (lambda v: v)
    premises = as_named(premises)
    full = check(entails(premises, goal, depth_cap, size_cap))
    if not isinstance(full, Proved):
        raise NotDerivableError(f'Goal does not follow from the premises ({full.kind})')
    out = {}
    for nf in premises:
        rest = [p for p in premises if p.name != nf.name]
        v = check(entails(rest, goal, depth_cap, size_cap))
        out[nf.name] = NeededVerdict(nf.name, _needed_status(v), v)
        logger.info('needed %s: %s', nf.name, out[nf.name].status)
    return out
