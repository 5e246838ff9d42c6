# formula.py
# First-order formulas with equality: AST, TPTP-FOF parser and printer,
# and the clausifier (NNF, Skolemization, CNF).
# Used by corpus.py, model.py, solver.py and prover.py.

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

logger = logging.getLogger(__name__)


# ---- ERRORS ----------------------------------------------------

class FormulaError(ValueError):
    pass


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f'{message} (line {line}, column {column})')
        self.line = line
        self.column = column


class SignatureError(FormulaError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        where = f' (line {line}, column {column})' if line else ''
        super().__init__(message + where)
        self.line = line
        self.column = column


# ---- SIGNATURE -------------------------------------------------

@dataclass(frozen=True)
class Signature:
    relations: Tuple[Tuple[str, int], ...] = ()
    constants: Tuple[str, ...] = ()
    functions: Tuple[Tuple[str, int], ...] = ()

    @classmethod
    def of(cls, relations: Mapping[str, int], constants: Iterable[str] = (),
           functions: Optional[Mapping[str, int]] = None) -> 'Signature':
        functions = dict(functions or {})
        constants = tuple(constants)
        seen = set()
        for name in list(relations) + list(constants) + list(functions):
            if name in seen:
                raise SignatureError(f"Symbol '{name}' declared twice")
            seen.add(name)
        for name, arity in list(relations.items()) + list(functions.items()):
            if arity < 0:
                raise SignatureError(f"Symbol '{name}' has negative arity")
        return cls(tuple(sorted(relations.items())), tuple(sorted(constants)),
                   tuple(sorted(functions.items())))

    def relation_arity(self, name: str) -> Optional[int]:
        return dict(self.relations).get(name)

    def function_arity(self, name: str) -> Optional[int]:
        return dict(self.functions).get(name)

    def has_constant(self, name: str) -> bool:
        return name in self.constants


BETWEENNESS = Signature.of({'sb': 3, 'wb': 3})


# ---- TERMS -----------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Fn:
    name: str
    args: Tuple['Term', ...]


Term = Union[Var, Const, Fn]


# ---- FORMULAS --------------------------------------------------

class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bottom(Formula):
    pass


@dataclass(frozen=True)
class Pred(Formula):
    name: str
    args: Tuple[Term, ...] = ()


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: Tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: Tuple[Formula, ...]


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Forall(Formula):
    variables: Tuple[str, ...]
    body: Formula


@dataclass(frozen=True)
class Exists(Formula):
    variables: Tuple[str, ...]
    body: Formula


class NamedFormula(NamedTuple):
    name: str
    formula: Formula


def as_named(formulas: Iterable) -> List[NamedFormula]:
    """Accept bare formulas or (name, formula) pairs; bare ones are named f0, f1, ..."""
    out = []
    for i, item in enumerate(formulas):
        out.append(NamedFormula(f'f{i}', item) if isinstance(item, Formula) else NamedFormula(*item))
    return out


def conj(*parts: Formula) -> Formula:
    """Flat conjunction; nested And arguments are spliced in."""
    flat = []
    for p in parts:
        flat.extend(p.args if isinstance(p, And) else (p,))
    if not flat:
        return Top()
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*parts: Formula) -> Formula:
    flat = []
    for p in parts:
        flat.extend(p.args if isinstance(p, Or) else (p,))
    if not flat:
        return Bottom()
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def negate(f: Formula) -> Formula:
    return Not(f)


def conjuncts(f: Formula) -> Tuple[Formula, ...]:
    return f.args if isinstance(f, And) else (f,)


def expand_distinct(variables: Sequence[Union[str, Var]]) -> Formula:
    """Pairwise distinctness of the given variables, pairs in index order."""
    terms = [v if isinstance(v, Var) else Var(v) for v in variables]
    if len(terms) < 2:
        raise FormulaError('Distinctness needs at least two variables')
    return conj(*(Not(Eq(a, b)) for a, b in itertools.combinations(terms, 2)))


# ---- TRAVERSAL -------------------------------------------------

def term_variables(t: Term) -> frozenset:
    if isinstance(t, Var):
        return frozenset([t.name])
    if isinstance(t, Fn):
        return frozenset().union(*(term_variables(a) for a in t.args))
    return frozenset()


def free_variables(f: Formula) -> frozenset:
    if isinstance(f, Pred):
        return frozenset().union(*(term_variables(a) for a in f.args))
    if isinstance(f, Eq):
        return term_variables(f.left) | term_variables(f.right)
    if isinstance(f, Not):
        return free_variables(f.arg)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_variables(a) for a in f.args))
    if isinstance(f, (Implies, Iff)):
        return free_variables(f.left) | free_variables(f.right)
    if isinstance(f, (Forall, Exists)):
        return free_variables(f.body) - set(f.variables)
    return frozenset()


def _term_symbols(t: Term, out: Dict[Tuple[str, str], int]):
    if isinstance(t, Const):
        out[('const', t.name)] = 0
    elif isinstance(t, Fn):
        out[('func', t.name)] = len(t.args)
        for a in t.args:
            _term_symbols(a, out)


def symbols_of(f: Formula, out: Optional[Dict] = None) -> Dict[Tuple[str, str], int]:
    """Map (kind, name) -> arity for every non-logical symbol of f.

    kind is 'pred', 'const' or 'func'.  A symbol used with two arities is
    reported as SignatureError.
    """
    out = {} if out is None else out

    def record(key, arity):
        if key in out and out[key] != arity:
            raise SignatureError(f"Symbol '{key[1]}' used with arities {out[key]} and {arity}")
        out[key] = arity

    def walk(g):
        if isinstance(g, Pred):
            record(('pred', g.name), len(g.args))
            terms = g.args
        elif isinstance(g, Eq):
            terms = (g.left, g.right)
        elif isinstance(g, Not):
            return walk(g.arg)
        elif isinstance(g, (And, Or)):
            for a in g.args:
                walk(a)
            return
        elif isinstance(g, (Implies, Iff)):
            walk(g.left)
            walk(g.right)
            return
        elif isinstance(g, (Forall, Exists)):
            return walk(g.body)
        else:
            return
        found = {}
        for t in terms:
            _term_symbols(t, found)
        for key, arity in found.items():
            record(key, arity)

    walk(f)
    return out


def relations_of(formulas: Iterable[Formula]) -> Dict[str, int]:
    out = {}
    for f in formulas:
        symbols_of(f, out)
    return {name: arity for (kind, name), arity in sorted(out.items()) if kind == 'pred'}


def constants_of(formulas: Iterable[Formula]) -> List[str]:
    out = {}
    for f in formulas:
        symbols_of(f, out)
    return sorted(name for (kind, name) in out if kind == 'const')


def substitute(t: Term, mapping: Mapping[str, Term]) -> Term:
    if isinstance(t, Var):
        return mapping.get(t.name, t)
    if isinstance(t, Fn):
        return Fn(t.name, tuple(substitute(a, mapping) for a in t.args))
    return t


# ---- PARSER ----------------------------------------------------

GRAMMAR = r"""
?start: formula

?formula: unitary
        | unitary "=>" unitary      -> implies
        | unitary "<=" unitary      -> implied
        | unitary "<=>" unitary     -> iff
        | unitary "<~>" unitary     -> xor
        | unitary ("&" unitary)+    -> and_
        | unitary ("|" unitary)+    -> or_

?unitary: quantified
        | "~" unitary               -> not_
        | "(" formula ")"
        | atom

quantified: QUANT "[" VARIABLE ("," VARIABLE)* "]" ":" unitary

atom: term                          -> plain_atom
    | term "=" term                 -> eq
    | term "!=" term                -> neq
    | "$true"                       -> top
    | "$false"                      -> bottom

term: VARIABLE                      -> var
    | NAME                          -> name
    | NAME "(" term ("," term)* ")" -> app

QUANT: "!" | "?"
VARIABLE: /[A-Z][A-Za-z0-9_]*/
NAME: /[a-z][A-Za-z0-9_]*/
COMMENT: /%[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

_PARSER = Lark(GRAMMAR, parser='lalr', propagate_positions=True)


@dataclass(frozen=True)
class _Name:
    name: str
    line: int
    column: int


@dataclass(frozen=True)
class _App:
    name: str
    args: Tuple[Term, ...]
    line: int
    column: int


@v_args(inline=True)
class _FormulaBuilder(Transformer):
    """Turns the parse tree into AST nodes, checking symbols against a signature."""

    def __init__(self, signature: Signature):
        super().__init__()
        self.signature = signature

    # terms are resolved lazily: a bare name may be a constant or a 0-ary predicate
    def var(self, tok):
        return Var(str(tok))

    def name(self, tok):
        return _Name(str(tok), tok.line, tok.column)

    def app(self, tok, *args):
        return _App(str(tok), tuple(self._term(a) for a in args), tok.line, tok.column)

    def _term(self, t) -> Term:
        if isinstance(t, Var):
            return t
        if isinstance(t, _Name):
            if not self.signature.has_constant(t.name):
                raise SignatureError(f"Unknown constant '{t.name}'", t.line, t.column)
            return Const(t.name)
        arity = self.signature.function_arity(t.name)
        if arity is None:
            raise SignatureError(f"Unknown function '{t.name}'", t.line, t.column)
        if arity != len(t.args):
            raise SignatureError(f"Function '{t.name}' expects {arity} arguments, got {len(t.args)}",
                                 t.line, t.column)
        return Fn(t.name, t.args)

    def plain_atom(self, t):
        if isinstance(t, Var):
            raise SignatureError(f"Variable '{t.name}' used as a formula")
        args = t.args if isinstance(t, _App) else ()
        arity = self.signature.relation_arity(t.name)
        if arity is None:
            raise SignatureError(f"Unknown predicate '{t.name}'", t.line, t.column)
        if arity != len(args):
            raise SignatureError(f"Predicate '{t.name}' expects {arity} arguments, got {len(args)}",
                                 t.line, t.column)
        return Pred(t.name, args)

    def eq(self, left, right):
        return Eq(self._term(left), self._term(right))

    def neq(self, left, right):
        return Not(Eq(self._term(left), self._term(right)))

    def top(self):
        return Top()

    def bottom(self):
        return Bottom()

    def not_(self, f):
        return Not(f)

    def and_(self, *fs):
        return And(tuple(fs))

    def or_(self, *fs):
        return Or(tuple(fs))

    def implies(self, a, b):
        return Implies(a, b)

    def implied(self, a, b):
        return Implies(b, a)

    def iff(self, a, b):
        return Iff(a, b)

    def xor(self, a, b):
        return Not(Iff(a, b))

    def quantified(self, quant, *rest):
        *names, body = rest
        names = tuple(str(v) for v in names)
        if len(set(names)) != len(names):
            raise SignatureError(f'Repeated variable in quantifier prefix {list(names)}',
                                 quant.line, quant.column)
        return (Forall if str(quant) == '!' else Exists)(names, body)


def parse_formula(text: str, signature: Signature = BETWEENNESS, allow_free: bool = False) -> Formula:
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as exc:
        raise FormulaSyntaxError(f'Unexpected input {exc.get_context(text).strip()!r}',
                                 exc.line, exc.column) from None
    try:
        f = _FormulaBuilder(signature).transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, FormulaError):
            raise exc.orig_exc from None
        raise
    free = free_variables(f)
    if free and not allow_free:
        raise SignatureError(f'Free variables {sorted(free)}')
    return f


# ---- PRINTER ---------------------------------------------------

def print_term(t: Term) -> str:
    if isinstance(t, Fn):
        return f"{t.name}({','.join(print_term(a) for a in t.args)})"
    return t.name


def _unit(f: Formula) -> str:
    if isinstance(f, (And, Or, Implies, Iff)):
        return f'({print_formula(f)})'
    return print_formula(f)


def print_formula(f: Formula) -> str:
    if isinstance(f, Top):
        return '$true'
    if isinstance(f, Bottom):
        return '$false'
    if isinstance(f, Pred):
        if not f.args:
            return f.name
        return f"{f.name}({','.join(print_term(a) for a in f.args)})"
    if isinstance(f, Eq):
        return f'{print_term(f.left)} = {print_term(f.right)}'
    if isinstance(f, Not):
        if isinstance(f.arg, Eq):
            return f'{print_term(f.arg.left)} != {print_term(f.arg.right)}'
        return '~' + _unit(f.arg)
    if isinstance(f, And):
        return ' & '.join(_unit(a) for a in f.args)
    if isinstance(f, Or):
        return ' | '.join(_unit(a) for a in f.args)
    if isinstance(f, Implies):
        return f'{_unit(f.left)} => {_unit(f.right)}'
    if isinstance(f, Iff):
        return f'{_unit(f.left)} <=> {_unit(f.right)}'
    if isinstance(f, (Forall, Exists)):
        q = '!' if isinstance(f, Forall) else '?'
        return f"{q}[{','.join(f.variables)}]: {_unit(f.body)}"
    raise FormulaError(f'Not a formula: {f!r}')


def tptp_name(name: str) -> str:
    """Turn a selector like 'huntington.A' into a TPTP lower_word."""
    word = re.sub(r'[^A-Za-z0-9_]', '_', name)
    if not re.match(r'[a-z]', word):
        word = 'ax_' + word
    return word


def format_fof(name: str, role: str, f: Formula) -> str:
    return f'fof({tptp_name(name)}, {role}, {print_formula(f)}).'


def export_problem(premises: Iterable[Union[NamedFormula, Tuple[str, Formula]]], goal: Formula,
                   goal_name: str = 'goal') -> str:
    lines = [format_fof(name, 'axiom', f) for name, f in premises]
    lines.append(format_fof(goal_name, 'conjecture', goal))
    return '\n'.join(lines) + '\n'


# ---- CLAUSES ---------------------------------------------------

Atom = Union[Pred, Eq]


@dataclass(frozen=True)
class Literal:
    positive: bool
    atom: Atom

    def negated(self) -> 'Literal':
        return Literal(not self.positive, self.atom)

    def __str__(self):
        return print_formula(self.atom if self.positive else Not(self.atom))


@dataclass(frozen=True)
class Clause:
    literals: frozenset
    tag: Optional[str] = None

    @property
    def is_tautology(self) -> bool:
        for lit in self.literals:
            if lit.positive and isinstance(lit.atom, Eq) and lit.atom.left == lit.atom.right:
                return True
            if lit.positive and lit.negated() in self.literals:
                return True
        return False

    def sorted_literals(self) -> List[Literal]:
        return sorted(self.literals, key=lambda l: (print_formula(l.atom), not l.positive))

    def variables(self) -> List[str]:
        names = set()
        for lit in self.literals:
            names |= free_variables(lit.atom)
        return sorted(names)

    def __str__(self):
        if not self.literals:
            return '$false'
        return ' | '.join(str(l) for l in self.sorted_literals())


@dataclass(frozen=True)
class ClauseSet:
    clauses: Tuple[Clause, ...]
    skolems: Tuple[Tuple[str, int], ...] = ()

    def __len__(self):
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)

    def _symbols(self) -> Dict[Tuple[str, str], int]:
        out = {}
        for c in self.clauses:
            for lit in c.literals:
                symbols_of(lit.atom, out)
        return out

    def constants(self) -> List[str]:
        return sorted(name for (kind, name) in self._symbols() if kind == 'const')

    def functions(self) -> Dict[str, int]:
        return {name: arity for (kind, name), arity in sorted(self._symbols().items())
                if kind == 'func'}

    def tags(self) -> List[str]:
        return list(dict.fromkeys(c.tag for c in self.clauses if c.tag is not None))

    def with_tags(self, tags: Iterable[str]) -> 'ClauseSet':
        keep = set(tags)
        return ClauseSet(tuple(c for c in self.clauses if c.tag in keep), self.skolems)


class SkolemNames:
    """Fresh Skolem symbols sk0, sk1, ...; one instance per clausification run."""

    def __init__(self, prefix: str = 'sk'):
        self.prefix = prefix
        self.count = 0
        self.symbols: Dict[str, int] = {}

    def fresh(self, arity: int) -> str:
        name = f'{self.prefix}{self.count}'
        self.count += 1
        self.symbols[name] = arity
        return name


# ---- CLAUSIFIER ------------------------------------------------

def _nnf(f: Formula, positive: bool = True) -> Formula:
    if isinstance(f, Top):
        return Top() if positive else Bottom()
    if isinstance(f, Bottom):
        return Bottom() if positive else Top()
    if isinstance(f, (Pred, Eq)):
        return f if positive else Not(f)
    if isinstance(f, Not):
        return _nnf(f.arg, not positive)
    if isinstance(f, And):
        parts = [_nnf(a, positive) for a in f.args]
        return conj(*parts) if positive else disj(*parts)
    if isinstance(f, Or):
        parts = [_nnf(a, positive) for a in f.args]
        return disj(*parts) if positive else conj(*parts)
    if isinstance(f, Implies):
        if positive:
            return disj(_nnf(f.left, False), _nnf(f.right, True))
        return conj(_nnf(f.left, True), _nnf(f.right, False))
    if isinstance(f, Iff):
        if positive:
            return conj(disj(_nnf(f.left, False), _nnf(f.right, True)),
                        disj(_nnf(f.left, True), _nnf(f.right, False)))
        return disj(conj(_nnf(f.left, True), _nnf(f.right, False)),
                    conj(_nnf(f.left, False), _nnf(f.right, True)))
    if isinstance(f, (Forall, Exists)):
        keep = isinstance(f, Forall) == positive
        return (Forall if keep else Exists)(f.variables, _nnf(f.body, positive))
    raise FormulaError(f'Not a formula: {f!r}')


def nnf(f: Formula) -> Formula:
    """Negation normal form; connectives other than &, | and ~ on atoms are removed."""
    return _nnf(f, True)


def rename_apart(f: Formula) -> Formula:
    """Give every quantifier occurrence its own fresh variable names V0, V1, ..."""
    counter = itertools.count()

    def term(t, env):
        return substitute(t, env)

    def walk(g, env):
        if isinstance(g, Pred):
            return Pred(g.name, tuple(term(a, env) for a in g.args))
        if isinstance(g, Eq):
            return Eq(term(g.left, env), term(g.right, env))
        if isinstance(g, Not):
            return Not(walk(g.arg, env))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(walk(a, env) for a in g.args))
        if isinstance(g, (Implies, Iff)):
            return type(g)(walk(g.left, env), walk(g.right, env))
        if isinstance(g, (Forall, Exists)):
            fresh = tuple(f'V{next(counter)}' for _ in g.variables)
            inner = dict(env)
            inner.update({old: Var(new) for old, new in zip(g.variables, fresh)})
            return type(g)(fresh, walk(g.body, inner))
        return g

    return walk(f, {})


def skolemize(f: Formula, names: Optional[SkolemNames] = None) -> Formula:
    """Replace existentials of an NNF formula by Skolem terms and drop universals.

    A Skolem symbol takes the universals in scope as arguments, so an
    existential under no universal becomes a constant.  Bound variables must
    be distinct (see rename_apart).
    """
    names = names or SkolemNames()

    def walk(g, universals, env):
        if isinstance(g, Pred):
            return Pred(g.name, tuple(substitute(a, env) for a in g.args))
        if isinstance(g, Eq):
            return Eq(substitute(g.left, env), substitute(g.right, env))
        if isinstance(g, Not):
            return Not(walk(g.arg, universals, env))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(walk(a, universals, env) for a in g.args))
        if isinstance(g, Forall):
            return walk(g.body, universals + g.variables, env)
        if isinstance(g, Exists):
            inner = dict(env)
            for v in g.variables:
                sym = names.fresh(len(universals))
                inner[v] = Fn(sym, tuple(Var(u) for u in universals)) if universals else Const(sym)
            return walk(g.body, universals, inner)
        return g

    return walk(f, (), {})


def _literal(f: Formula) -> Literal:
    if isinstance(f, Not):
        return Literal(False, f.arg)
    return Literal(True, f)


def _cnf(f: Formula) -> List[frozenset]:
    if isinstance(f, Top):
        return []
    if isinstance(f, Bottom):
        return [frozenset()]
    if isinstance(f, And):
        out = []
        for a in f.args:
            out.extend(_cnf(a))
        return out
    if isinstance(f, Or):
        result = [frozenset()]
        for a in f.args:
            part = _cnf(a)
            result = [x | y for x in result for y in part]
        return result
    return [frozenset([_literal(f)])]


def _simplify(lits: frozenset) -> Optional[frozenset]:
    kept = set()
    for lit in lits:
        if isinstance(lit.atom, Eq) and lit.atom.left == lit.atom.right:
            if lit.positive:
                return None
            continue
        kept.add(lit)
    return frozenset(kept)


def clausify(f: Formula, fresh: Optional[SkolemNames] = None, tag: Optional[str] = None) -> ClauseSet:
    """Equisatisfiable clause set for a closed formula.

    Tautologies (complementary pair, or t = t) are dropped and t != t
    literals removed; duplicates collapse.
    """
    fresh = fresh or SkolemNames()
    before = fresh.count
    matrix = skolemize(rename_apart(nnf(rename_apart(f))), fresh)
    clauses = {}
    for lits in _cnf(matrix):
        lits = _simplify(lits)
        if lits is None:
            continue
        c = Clause(lits, tag)
        if c.is_tautology:
            continue
        clauses.setdefault(lits, c)
    new = tuple((n, a) for n, a in fresh.symbols.items() if int(n[len(fresh.prefix):]) >= before)
    logger.debug('clausified %s into %d clauses', tag or 'formula', len(clauses))
    return ClauseSet(tuple(clauses.values()), new)


def clausify_all(named: Iterable[Union[NamedFormula, Tuple[str, Formula]]],
                 fresh: Optional[SkolemNames] = None) -> ClauseSet:
    fresh = fresh or SkolemNames()
    clauses: List[Clause] = []
    seen = set()
    for name, f in named:
        for c in clausify(f, fresh, tag=name):
            if (c.literals, c.tag) not in seen:
                seen.add((c.literals, c.tag))
                clauses.append(c)
    return ClauseSet(tuple(clauses), tuple(fresh.symbols.items()))


def is_epr(cs: ClauseSet) -> bool:
    """True when no function symbol of arity >= 1 occurs after Skolemization."""
    return not cs.functions()
