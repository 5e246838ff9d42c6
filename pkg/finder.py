# finder.py
# Finite model search: fixed size, minimal size, and the independence scan
# over every sign pattern of an axiom system.  Also an exhaustive numpy
# oracle for small sizes.

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from config import DEFAULT_CAP, ORACLE_MAX_BITS
from corpus import AxiomSystem, SignPattern, all_patterns, get_system, resolve_all, signed_set
from formula import NamedFormula, Not, as_named, constants_of, relations_of
from model import FiniteModel, canonical_form, evaluate, evaluate_batch, format_triples
from solver import add_symmetry_breaking, extract_model, ground_over_domain, solve, to_dimacs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SizeVerdict:
    n: int
    satisfiable: bool
    model: Optional[FiniteModel] = None
    core: frozenset = frozenset()


@dataclass(frozen=True)
class MinimalityResult:
    system: Optional[str]
    pattern: Optional[str]
    cap: int
    size: Optional[int] = None
    witness: Optional[FiniteModel] = None
    refuted: Tuple[int, ...] = ()

    @property
    def found(self) -> bool:
        return self.size is not None

    def to_dict(self) -> dict:
        return {
            'system':  self.system,
            'pattern': self.pattern,
            'cap':     self.cap,
            'size':    self.size,
            'refuted': list(self.refuted),
            'witness': self.witness.to_json() if self.witness is not None else None,
        }


def find_model(formulas, n: int, symmetry_breaking: bool = False,
               dimacs_path: Optional[str] = None) -> SizeVerdict:
    """A model of size n of all formulas, or the tags of an unsatisfiable subset."""
    named = as_named(formulas)
    problem = ground_over_domain(named, n)
    if symmetry_breaking:
        problem = add_symmetry_breaking(problem)
    if dimacs_path:
        with open(dimacs_path, 'w') as fh:
            fh.write(to_dimacs(problem))
    result = solve(problem)
    if not result.satisfiable:
        return SizeVerdict(n, False, core=result.core)
    model = extract_model(problem, result.assignment)
    failed = [name for name, f in named if not evaluate(model, f)]
    if failed:
        raise RuntimeError(f'Witness of size {n} fails {failed} on re-evaluation')
    return SizeVerdict(n, True, model)


def minimal_model_size(formulas, cap: int = DEFAULT_CAP, symmetry_breaking: bool = False,
                       system: Optional[str] = None, pattern: Optional[str] = None) -> MinimalityResult:
    refuted = []
    for n in range(1, cap + 1):
        verdict = find_model(formulas, n, symmetry_breaking=symmetry_breaking)
        if verdict.satisfiable:
            return MinimalityResult(system, pattern, cap, n, verdict.model, tuple(refuted))
        refuted.append(n)
    return MinimalityResult(system, pattern, cap, refuted=tuple(refuted))


def _scan_pattern(system_name: str, pattern: str, cap: int,
                  extra: Sequence[str] = ()) -> MinimalityResult:
    system = get_system(system_name)
    formulas = signed_set(system, pattern) + resolve_all(extra)
    result = minimal_model_size(formulas, cap, system=system_name, pattern=pattern)
    logger.info('%s %s: minimal size %s', system_name, pattern, result.size or f'> {cap}')
    return result


def independence_scan(system: AxiomSystem, cap: int = DEFAULT_CAP, n_jobs: int = 1,
                      extra: Sequence[str] = ()) -> List[MinimalityResult]:
    """Minimal model size of every sign pattern, all-positive first."""
    patterns = [str(p) for p in all_patterns(system)]
    return Parallel(n_jobs=n_jobs)(
        delayed(_scan_pattern)(system.name, p, cap, tuple(extra)) for p in patterns
    )


def is_completely_independent(results: Iterable[MinimalityResult]) -> bool:
    return all(r.found for r in results)


def negation_lower_bounds(system: AxiomSystem, cap: int = DEFAULT_CAP) -> Dict[str, int]:
    """Smallest size at which each axiom can fail at all."""
    bounds = {}
    for name, f in system.axioms:
        r = minimal_model_size([NamedFormula(f'~{name}', Not(f))], cap)
        bounds[name] = r.size if r.found else cap + 1
    return bounds


def lower_bound_violations(system: AxiomSystem, results: Iterable[MinimalityResult],
                           cap: int = DEFAULT_CAP) -> List[str]:
    """Patterns whose witness is smaller than one of their negated axioms allows."""
    bounds = negation_lower_bounds(system, cap)
    out = []
    for r in results:
        if not r.found:
            continue
        marks = SignPattern.parse(r.pattern, system).marks
        need = max([bounds[name] for name, keep in zip(system.names, marks) if not keep], default=1)
        if r.size < need:
            out.append(f'{r.pattern}: size {r.size} below bound {need}')
    return out


def witness_summary(result: MinimalityResult) -> str:
    if not result.found:
        return f'none up to {result.cap}'
    return format_triples(canonical_form(result.witness))


# ---- EXHAUSTIVE ORACLE -----------------------------------------

def exhaustive_satisfiable(formulas, n: int, chunk: int = 1 << 20) -> Optional[FiniteModel]:
    """Enumerate every interpretation of size n and return the first model, or None.

    Batches of `chunk` interpretations are filtered formula by formula;
    only survivors are decoded for the next formula.
    """
    named = as_named(formulas)
    if constants_of(f for _, f in named):
        raise ValueError('The exhaustive oracle handles relational formulas only')
    arities = relations_of(f for _, f in named)
    if not arities:
        bare = FiniteModel(n)
        return bare if all(evaluate(bare, f) for _, f in named) else None
    sizes = [n ** a for a in arities.values()]
    bits = sum(sizes)
    if bits > ORACLE_MAX_BITS:
        raise ValueError(f'{bits} relation bits is too many to enumerate')
    shifts = np.arange(bits, dtype=np.int64)

    def decode(codes):
        flat = ((codes[:, None] >> shifts) & 1).astype(bool)
        cubes, start = {}, 0
        for (rel, arity), size in zip(arities.items(), sizes):
            cubes[rel] = flat[:, start:start + size].reshape((len(codes),) + (n,) * arity)
            start += size
        return cubes

    total = 1 << bits
    for start in range(0, total, chunk):
        alive = np.arange(start, min(start + chunk, total), dtype=np.int64)
        for _, f in named:
            alive = alive[evaluate_batch(decode(alive), n, f)]
            if alive.size == 0:
                break
        if alive.size:
            cubes = decode(alive[:1])
            return FiniteModel(n, {rel: cube[0] for rel, cube in cubes.items()})
    return None
