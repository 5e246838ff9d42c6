# solver.py
# Propositional side of the lab: grounding over a fixed domain or a Herbrand
# universe, a CDCL solver with assumptions and unsat cores, lex-leader
# symmetry breaking, and DIMACS output.

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config import HERBRAND_MAX_INSTANCES, SYMMETRY_MAX_SIZE
from formula import (And, Bottom, ClauseSet, Const, Eq, Exists, Fn, Forall, Iff, Implies, Not,
                     Or, Pred, Top, Var, as_named, constants_of, print_term, relations_of,
                     substitute)
from model import FiniteModel

logger = logging.getLogger(__name__)


class GroundingError(ValueError):
    pass


class GroundingTooLarge(GroundingError):
    pass


@dataclass(frozen=True)
class GroundProblem:
    """Clauses over variables 1..num_vars.

    Atom variables come first, in model serialization order; clauses of a
    tagged formula carry the negated selector of that tag, so assuming the
    selector switches the formula on.
    """
    num_vars: int
    clauses: Tuple[Tuple[int, ...], ...]
    provenance: Tuple[Optional[str], ...]
    selectors: Tuple[Tuple[str, int], ...]
    atoms: Tuple[tuple, ...]
    n: Optional[int] = None
    arities: Tuple[Tuple[str, int], ...] = ()
    constant_vars: Tuple[Tuple[str, Tuple[int, ...]], ...] = ()

    @property
    def tags(self) -> List[str]:
        return [t for t, _ in self.selectors]

    def selector(self, tag: str) -> int:
        return dict(self.selectors)[tag]

    def with_clauses(self, clauses: Sequence[Sequence[int]], num_vars: int) -> 'GroundProblem':
        return replace(self, num_vars=num_vars,
                       clauses=self.clauses + tuple(tuple(c) for c in clauses),
                       provenance=self.provenance + (None,) * len(clauses))


# ---- PROPOSITIONAL NODES ---------------------------------------
# A node is True, False, a nonzero int literal, or ('and'|'or', children).

def _and(children) -> object:
    out = []
    for c in children:
        if c is False:
            return False
        if c is True:
            continue
        if isinstance(c, tuple) and c[0] == 'and':
            out.extend(c[1])
        else:
            out.append(c)
    out = list(dict.fromkeys(out))
    if not out:
        return True
    return out[0] if len(out) == 1 else ('and', tuple(out))


def _or(children) -> object:
    out = []
    for c in children:
        if c is True:
            return True
        if c is False:
            continue
        if isinstance(c, tuple) and c[0] == 'or':
            out.extend(c[1])
        else:
            out.append(c)
    out = list(dict.fromkeys(out))
    if not out:
        return False
    return out[0] if len(out) == 1 else ('or', tuple(out))


def _neg(node) -> object:
    if node is True or node is False:
        return not node
    if isinstance(node, int):
        return -node
    kind, children = node
    flip = _or if kind == 'and' else _and
    return flip(_neg(c) for c in children)


class _Builder:
    def __init__(self, first_free: int):
        self.next_var = first_free
        self.clauses: List[Tuple[int, ...]] = []
        self.provenance: List[Optional[str]] = []
        self.selectors: Dict[str, int] = {}

    def new_var(self) -> int:
        v = self.next_var
        self.next_var += 1
        return v

    def add(self, lits: Iterable[int], tag: Optional[str] = None):
        lits = list(dict.fromkeys(lits))
        if tag is not None:
            lits.append(-self.selectors[tag])
        self.clauses.append(tuple(lits))
        self.provenance.append(tag)

    def selector(self, tag: str) -> int:
        if tag not in self.selectors:
            self.selectors[tag] = self.new_var()
        return self.selectors[tag]

    def emit(self, node, tag: Optional[str]):
        """Clauses for node, with Tseitin variables for nested subformulas.

        Auxiliary variables are defined by full equivalence, so every model
        of the atoms extends uniquely.  The memo is per formula: a definition
        guarded by one tag must not serve another.
        """
        memo: Dict[object, int] = {}

        def lit_of(n) -> int:
            if isinstance(n, int):
                return n
            if n in memo:
                return memo[n]
            kind, children = n
            lits = [lit_of(c) for c in children]
            x = self.new_var()
            memo[n] = x
            if kind == 'and':
                for l in lits:
                    self.add([-x, l], tag)
                self.add([x] + [-l for l in lits], tag)
            else:
                for l in lits:
                    self.add([x, -l], tag)
                self.add([-x] + lits, tag)
            return x

        def clause_of(n) -> List[int]:
            if isinstance(n, int):
                return [n]
            if n[0] == 'or':
                return [lit_of(c) for c in n[1]]
            return [lit_of(n)]

        if node is True:
            return
        if node is False:
            self.add([], tag)
            return
        if isinstance(node, tuple) and node[0] == 'and':
            for child in node[1]:
                self.add(clause_of(child), tag)
        else:
            self.add(clause_of(node), tag)


# ---- FIXED-DOMAIN GROUNDING ------------------------------------

def ground_over_domain(formulas, n: int) -> GroundProblem:
    """Propositional encoding of 'these formulas hold in a structure of size n'.

    One atom per relation tuple, for the relations occurring in the
    formulas; constants get one-hot variables under hard exactly-one
    clauses.  Each named formula is guarded by its own selector.
    """
    if n < 1:
        raise GroundingError(f'Domain size must be at least 1, got {n}')
    named = as_named(formulas)
    arities = relations_of(f for _, f in named)
    consts = constants_of(f for _, f in named)

    atoms = []
    atom_var: Dict[tuple, int] = {}
    for rel, arity in arities.items():
        for args in itertools.product(range(1, n + 1), repeat=arity):
            atom_var[(rel, args)] = len(atoms) + 1
            atoms.append((rel, args))
    b = _Builder(len(atoms) + 1)
    const_var = {c: tuple(b.new_var() for _ in range(n)) for c in consts}
    for c, block in const_var.items():
        b.add(block)
        for x, y in itertools.combinations(block, 2):
            b.add([-x, -y])

    def term(t, env):
        if isinstance(t, Var):
            return env[t.name]
        if isinstance(t, Const):
            return t.name
        raise GroundingError(f"Function symbol '{t.name}' cannot be grounded over a domain")

    def atom_node(rel, values):
        named_consts = sorted({v for v in values if isinstance(v, str)})
        if not named_consts:
            return atom_var[(rel, tuple(values))]
        options = []
        for choice in itertools.product(range(1, n + 1), repeat=len(named_consts)):
            pick = dict(zip(named_consts, choice))
            guard = [const_var[c][k - 1] for c, k in pick.items()]
            args = tuple(pick.get(v, v) for v in values)
            options.append(_and(guard + [atom_var[(rel, args)]]))
        return _or(options)

    def eq_node(a, b_):
        if isinstance(a, int) and isinstance(b_, int):
            return a == b_
        if a == b_:
            return True
        if isinstance(a, int):
            a, b_ = b_, a
        if isinstance(b_, int):
            return const_var[a][b_ - 1]
        return _or(_and([const_var[a][k], const_var[b_][k]]) for k in range(n))

    def ground(f, env):
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Pred):
            return atom_node(f.name, [term(a, env) for a in f.args])
        if isinstance(f, Eq):
            return eq_node(term(f.left, env), term(f.right, env))
        if isinstance(f, Not):
            return _neg(ground(f.arg, env))
        if isinstance(f, And):
            return _and(ground(a, env) for a in f.args)
        if isinstance(f, Or):
            return _or(ground(a, env) for a in f.args)
        if isinstance(f, Implies):
            return _or([_neg(ground(f.left, env)), ground(f.right, env)])
        if isinstance(f, Iff):
            left, right = ground(f.left, env), ground(f.right, env)
            return _and([_or([_neg(left), right]), _or([left, _neg(right)])])
        if isinstance(f, (Forall, Exists)):
            combine = _and if isinstance(f, Forall) else _or
            return combine(ground(f.body, {**env, **dict(zip(f.variables, values))})
                           for values in itertools.product(range(1, n + 1), repeat=len(f.variables)))
        raise GroundingError(f'Not a formula: {f!r}')

    for name, f in named:
        b.selector(name)
        b.emit(ground(f, {}), name)

    logger.debug('grounded %d formulas at n=%d: %d vars, %d clauses',
                 len(named), n, b.next_var - 1, len(b.clauses))
    return GroundProblem(
        num_vars=b.next_var - 1,
        clauses=tuple(b.clauses),
        provenance=tuple(b.provenance),
        selectors=tuple(b.selectors.items()),
        atoms=tuple(atoms),
        n=n,
        arities=tuple(arities.items()),
        constant_vars=tuple(const_var.items()),
    )


def extract_model(problem: GroundProblem, assignment: Sequence[bool]) -> FiniteModel:
    """Read the relation cubes and constants back from a satisfying assignment."""
    n = problem.n
    if n is None:
        raise GroundingError('Herbrand problems have no finite model to extract')
    cubes = {rel: np.zeros((n,) * arity, dtype=bool) for rel, arity in problem.arities}
    for i, (rel, args) in enumerate(problem.atoms):
        if assignment[i + 1]:
            cubes[rel][tuple(a - 1 for a in args)] = True
    consts = {}
    for c, block in problem.constant_vars:
        consts[c] = next(k + 1 for k, v in enumerate(block) if assignment[v])
    return FiniteModel(n, cubes, consts)


# ---- HERBRAND GROUNDING ----------------------------------------

def _term_key(t) -> str:
    return print_term(t)


def herbrand_universe(constants: Sequence[str], functions: Dict[str, int], depth: int) -> List:
    """Ground terms of nesting depth <= depth, shallowest first."""
    level = [Const(c) for c in (sorted(constants) or ['hc0'])]
    universe = list(level)
    known = set(universe)
    for _ in range(depth):
        fresh = []
        for name, arity in sorted(functions.items()):
            for args in itertools.product(universe, repeat=arity):
                t = Fn(name, tuple(args))
                if t not in known:
                    known.add(t)
                    fresh.append(t)
        universe.extend(fresh)
    return universe


def _subterms(t, out: set):
    out.add(t)
    if isinstance(t, Fn):
        for a in t.args:
            _subterms(a, out)


def ground_herbrand(cs: ClauseSet, depth: int,
                    max_instances: int = HERBRAND_MAX_INSTANCES) -> GroundProblem:
    """All instances of cs over the depth-bounded Herbrand universe, plus equality axioms.

    Ground equalities become atoms ('=', s, t) with s before t in print
    order; transitivity and congruence are instantiated over the ground
    terms as hard clauses.
    """
    universe = herbrand_universe(cs.constants(), cs.functions(), depth)
    instances: List[Tuple[List[Tuple[bool, tuple]], Optional[str]]] = []
    terms: set = set()
    count = 0
    for clause in cs:
        names = clause.variables()
        for values in itertools.product(universe, repeat=len(names)):
            count += 1
            if count > max_instances:
                raise GroundingTooLarge(f'More than {max_instances} ground instances at depth {depth}')
            env = dict(zip(names, values))
            lits = []
            trivially_true = False
            for lit in clause.sorted_literals():
                a = lit.atom
                if isinstance(a, Eq):
                    s, t = substitute(a.left, env), substitute(a.right, env)
                    if s == t:
                        if lit.positive:
                            trivially_true = True
                            break
                        continue
                    s, t = sorted((s, t), key=_term_key)
                    _subterms(s, terms)
                    _subterms(t, terms)
                    key = ('=', (s, t))
                else:
                    args = tuple(substitute(x, env) for x in a.args)
                    for x in args:
                        _subterms(x, terms)
                    key = (a.name, args)
                lits.append((lit.positive, key))
            if not trivially_true:
                instances.append((lits, clause.tag))

    term_list = sorted(terms, key=_term_key)
    atom_keys = {key for lits, _ in instances for _, key in lits}
    preds: Dict[str, set] = {}
    for key in atom_keys:
        if key[0] != '=':
            preds.setdefault(key[0], set()).add(key)

    def eq_key(s, t):
        s, t = sorted((s, t), key=_term_key)
        return ('=', (s, t))

    hard: List[List[tuple]] = []
    if any(key[0] == '=' for key in atom_keys):
        for s, t, u in itertools.permutations(term_list, 3):
            if _term_key(s) < _term_key(u):
                hard.append([(False, eq_key(s, t)), (False, eq_key(t, u)), (True, eq_key(s, u))])
        for rel, keys in preds.items():
            for x, y in itertools.permutations(sorted(keys, key=str), 2):
                diff = [(False, eq_key(p, q)) for p, q in zip(x[1], y[1]) if p != q]
                hard.append(diff + [(False, x), (True, y)])
        fn_terms: Dict[str, List] = {}
        for t in term_list:
            if isinstance(t, Fn):
                fn_terms.setdefault(t.name, []).append(t)
        for name, ts in fn_terms.items():
            for x, y in itertools.combinations(ts, 2):
                diff = [(False, eq_key(p, q)) for p, q in zip(x.args, y.args) if p != q]
                hard.append(diff + [(True, eq_key(x, y))])

    all_keys = atom_keys | {key for c in hard for _, key in c}
    ordered = sorted(all_keys, key=lambda k: (k[0], [_term_key(x) for x in k[1]]))
    var_of = {key: i + 1 for i, key in enumerate(ordered)}
    b = _Builder(len(ordered) + 1)
    for tag in cs.tags():
        b.selector(tag)
    for c in hard:
        b.add(var_of[k] if pos else -var_of[k] for pos, k in c)
    for lits, tag in instances:
        if tag is not None:
            b.selector(tag)
        b.add((var_of[k] if pos else -var_of[k] for pos, k in lits), tag)

    logger.debug('Herbrand depth %d: %d terms, %d instances, %d equality clauses',
                 depth, len(term_list), len(instances), len(hard))
    return GroundProblem(
        num_vars=b.next_var - 1,
        clauses=tuple(b.clauses),
        provenance=tuple(b.provenance),
        selectors=tuple(b.selectors.items()),
        atoms=tuple(ordered),
    )


# ---- CDCL ------------------------------------------------------

@dataclass(frozen=True)
class SolveResult:
    satisfiable: bool
    assignment: Tuple[bool, ...] = ()
    core: FrozenSet[str] = frozenset()
    conflicts: int = 0
    decisions: int = 0


class _Cdcl:
    """Two-watched-literal CDCL, 1-UIP learning, no restarts.

    Decisions follow variable index, false first, after the assumptions;
    so the first model found is the lexicographically least one.
    """

    def __init__(self, num_vars: int, clauses: Iterable[Sequence[int]]):
        self.n = num_vars
        self.value = [0] * (num_vars + 1)
        self.level = [0] * (num_vars + 1)
        self.reason: List[Optional[int]] = [None] * (num_vars + 1)
        self.trail: List[int] = []
        self.trail_lim: List[int] = []
        self.qhead = 0
        self.clauses: List[List[int]] = []
        self.watches: Dict[int, List[int]] = {}
        self.ok = True
        self.next_var = 1
        self.conflicts = 0
        self.decisions = 0
        for c in clauses:
            self._add_input(c)

    def _val(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    def _watch(self, lit: int, ci: int):
        self.watches.setdefault(lit, []).append(ci)

    def _enqueue(self, lit: int, reason: Optional[int]):
        v = abs(lit)
        self.value[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _add_input(self, lits: Sequence[int]):
        if not self.ok:
            return
        c = list(dict.fromkeys(lits))
        if any(-l in c for l in c):
            return
        c = [l for l in c if self._val(l) != -1]
        if any(self._val(l) == 1 for l in c):
            return
        if not c:
            self.ok = False
        elif len(c) == 1:
            self._enqueue(c[0], None)
            if self._propagate() is not None:
                self.ok = False
        else:
            ci = len(self.clauses)
            self.clauses.append(c)
            self._watch(c[0], ci)
            self._watch(c[1], ci)

    def _propagate(self) -> Optional[int]:
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            false_lit = -p
            ws = self.watches.get(false_lit, [])
            kept = []
            i = 0
            while i < len(ws):
                ci = ws[i]
                i += 1
                c = self.clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                if self._val(c[0]) == 1:
                    kept.append(ci)
                    continue
                for k in range(2, len(c)):
                    if self._val(c[k]) != -1:
                        c[1], c[k] = c[k], c[1]
                        self._watch(c[1], ci)
                        break
                else:
                    kept.append(ci)
                    if self._val(c[0]) == -1:
                        kept.extend(ws[i:])
                        self.watches[false_lit] = kept
                        return ci
                    self._enqueue(c[0], ci)
            self.watches[false_lit] = kept
        return None

    def _analyze(self, confl: int) -> Tuple[List[int], int]:
        seen = set()
        learnt = [0]
        counter = 0
        p = None
        idx = len(self.trail) - 1
        current = len(self.trail_lim)
        clause = self.clauses[confl]
        while True:
            for q in clause:
                if q == p:
                    continue
                v = abs(q)
                if v not in seen and self.level[v] > 0:
                    seen.add(v)
                    if self.level[v] >= current:
                        counter += 1
                    else:
                        learnt.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            seen.discard(abs(p))
            counter -= 1
            if counter == 0:
                break
            clause = self.clauses[self.reason[abs(p)]]
        learnt[0] = -p
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda j: self.level[abs(learnt[j])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _analyze_final(self, p: int) -> set:
        """Assumption literals responsible for p being true."""
        out = {-p}
        if not self.trail_lim:
            return out
        seen = {abs(p)}
        for i in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
            lit = self.trail[i]
            v = abs(lit)
            if v not in seen:
                continue
            r = self.reason[v]
            if r is None:
                if self.level[v] > 0:
                    out.add(lit)
            else:
                for q in self.clauses[r][1:]:
                    if self.level[abs(q)] > 0:
                        seen.add(abs(q))
            seen.discard(v)
        return out

    def _cancel_until(self, level: int):
        if len(self.trail_lim) <= level:
            return
        stop = self.trail_lim[level]
        for lit in self.trail[stop:]:
            v = abs(lit)
            self.value[v] = 0
            self.reason[v] = None
            if v < self.next_var:
                self.next_var = v
        del self.trail[stop:]
        del self.trail_lim[level:]
        self.qhead = len(self.trail)

    def _pick(self) -> Optional[int]:
        while self.next_var <= self.n and self.value[self.next_var] != 0:
            self.next_var += 1
        return -self.next_var if self.next_var <= self.n else None

    def solve(self, assumptions: Sequence[int]) -> Tuple[bool, set]:
        if not self.ok:
            return False, set()
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                if not self.trail_lim:
                    return False, set()
                learnt, back = self._analyze(confl)
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    ci = len(self.clauses)
                    self.clauses.append(learnt)
                    self._watch(learnt[0], ci)
                    self._watch(learnt[1], ci)
                    self._enqueue(learnt[0], ci)
                continue
            nxt = None
            while len(self.trail_lim) < len(assumptions):
                a = assumptions[len(self.trail_lim)]
                if self._val(a) == 1:
                    self.trail_lim.append(len(self.trail))
                elif self._val(a) == -1:
                    return False, self._analyze_final(-a)
                else:
                    nxt = a
                    break
            if nxt is None:
                nxt = self._pick()
                if nxt is None:
                    return True, set()
                self.decisions += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(nxt, None)

    def assignment(self) -> Tuple[bool, ...]:
        return (False,) + tuple(v == 1 for v in self.value[1:])


def solve(problem: GroundProblem, assumptions: Optional[Iterable[str]] = None,
          check_core: bool = True) -> SolveResult:
    """Satisfiability with the given tags switched on (default: all of them).

    On UNSAT the core is a set of tags whose formulas are jointly
    unsatisfiable; when check_core is set it is re-solved to confirm.
    """
    tags = problem.tags if assumptions is None else list(assumptions)
    unknown = set(tags) - set(problem.tags)
    if unknown:
        raise GroundingError(f'Unknown tags {sorted(unknown)}')
    sel = dict(problem.selectors)
    engine = _Cdcl(problem.num_vars, problem.clauses)
    lits = [sel[t] for t in tags]
    sat, core_lits = engine.solve(lits)
    if sat:
        return SolveResult(True, engine.assignment(), conflicts=engine.conflicts,
                           decisions=engine.decisions)
    by_var = {v: t for t, v in problem.selectors}
    core = frozenset(by_var[v] for v in core_lits if v in by_var)
    if check_core and set(core) != set(tags):
        again = _Cdcl(problem.num_vars, problem.clauses).solve([sel[t] for t in sorted(core)])
        if again[0]:
            raise RuntimeError(f'Unsat core {sorted(core)} re-solves satisfiable')
    return SolveResult(False, core=core, conflicts=engine.conflicts, decisions=engine.decisions)


def minimize_core(problem: GroundProblem, core: Iterable[str]) -> FrozenSet[str]:
    """Deletion-based reduction: drop each tag whose removal keeps UNSAT."""
    current = set(core)
    for tag in sorted(core):
        if tag not in current:
            continue
        trial = current - {tag}
        result = solve(problem, sorted(trial), check_core=False)
        if not result.satisfiable:
            current = set(result.core) if result.core <= trial else trial
    return frozenset(current)


# ---- SYMMETRY BREAKING -----------------------------------------

def add_symmetry_breaking(problem: GroundProblem) -> GroundProblem:
    """Hard lex-leader clauses: the relation bits are <= their image under every permutation.

    The image of cube C under a permutation with inverse q has bit C[q(i), q(j), q(k)]
    at position (i, j, k); the comparison runs over the atoms in variable order.
    """
    n = problem.n
    if n is None:
        raise GroundingError('Symmetry breaking needs a fixed-domain problem')
    if n > SYMMETRY_MAX_SIZE:
        raise GroundingError(f'Symmetry breaking enumerates n! permutations; n={n} is over '
                             f'the limit of {SYMMETRY_MAX_SIZE}')
    index = {atom: i + 1 for i, atom in enumerate(problem.atoms)}
    next_var = problem.num_vars + 1
    extra: List[List[int]] = []
    for perm in itertools.permutations(range(n)):
        if perm == tuple(range(n)):
            continue
        inv = np.argsort(perm)
        prev = None
        pairs = []
        for rel, args in problem.atoms:
            x = index[(rel, args)]
            y = index[(rel, tuple(int(inv[a - 1]) + 1 for a in args))]
            if x != y:
                pairs.append((x, y))
        for pos, (x, y) in enumerate(pairs):
            guard = [] if prev is None else [-prev]
            extra.append(guard + [-x, y])
            if pos == len(pairs) - 1:
                break
            e = next_var
            next_var += 1
            extra.append(guard + [-x, -y, e])
            extra.append(guard + [x, y, e])
            prev = e
    logger.debug('lex-leader constraints at n=%d: %d clauses', n, len(extra))
    return problem.with_clauses(extra, next_var - 1)


# ---- DIMACS ----------------------------------------------------

def to_dimacs(problem: GroundProblem) -> str:
    lines = [f'c selector {v} {tag}' for tag, v in problem.selectors]
    for i, (rel, args) in enumerate(problem.atoms):
        shown = ','.join(a if isinstance(a, str) else str(a) if isinstance(a, int) else print_term(a)
                         for a in args)
        lines.append(f'c atom {i + 1} {rel}({shown})')
    lines.append(f'p cnf {problem.num_vars} {len(problem.clauses)}')
    lines.extend(' '.join(str(l) for l in c) + ' 0' for c in problem.clauses)
    return '\n'.join(lines) + '\n'
