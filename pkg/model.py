# model.py
# Finite structures: relations as boolean numpy cubes over {1..n},
# constants as elements.  Evaluation (scalar and batched), canonical form
# under domain permutations, compact triple notation and a JSON form.

from __future__ import annotations

import itertools
import json
import logging
import re
from functools import reduce
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from formula import (And, Bottom, Const, Eq, Exists, Forall, Formula, Iff, Implies,
                     Not, Or, Pred, Top, Var)

logger = logging.getLogger(__name__)

NONE_PHRASES = ('(none)', '(no true betweennesses)', '')
ALL_PHRASES  = ('(all)', '(all possible betweennesses)')
_TOKEN_RE    = re.compile(r'^\d{3}$')


class ModelError(ValueError):
    pass


class FiniteModel:
    """A structure of size n.  Elements are 1..n; cube index i stands for element i+1."""

    __slots__ = ('n', 'relations', 'constants')

    def __init__(self, n: int, relations: Optional[Mapping[str, np.ndarray]] = None,
                 constants: Optional[Mapping[str, int]] = None):
        if n < 1:
            raise ModelError(f'Domain size must be at least 1, got {n}')
        rels = {}
        for name, cube in sorted((relations or {}).items()):
            arr = np.array(cube, dtype=bool)
            if any(d != n for d in arr.shape):
                raise ModelError(f"Relation '{name}' has shape {arr.shape}, expected cube of side {n}")
            arr.setflags(write=False)
            rels[name] = arr
        consts = {}
        for name, value in sorted((constants or {}).items()):
            if not 1 <= int(value) <= n:
                raise ModelError(f"Constant '{name}' = {value} outside 1..{n}")
            consts[name] = int(value)
        self.n = n
        self.relations = rels
        self.constants = consts

    @classmethod
    def empty(cls, n: int, arities: Mapping[str, int]) -> 'FiniteModel':
        return cls(n, {r: np.zeros((n,) * a, dtype=bool) for r, a in arities.items()})

    def arity(self, relation: str) -> int:
        return self.relations[relation].ndim

    def holds(self, relation: str, args: Sequence[int]) -> bool:
        if relation not in self.relations:
            raise ModelError(f"Relation '{relation}' is not interpreted")
        return bool(self.relations[relation][tuple(a - 1 for a in args)])

    def true_tuples(self, relation: str) -> List[Tuple[int, ...]]:
        idx = np.argwhere(self.relations[relation])
        return [tuple(int(i) + 1 for i in row) for row in idx]

    # ---- serialization -------------------------------------------

    def encode(self) -> bytes:
        """Byte string whose lexicographic order is the cube bit order.

        Relations in name order, each cube row-major; packbits is MSB-first.
        """
        parts = [bytes([self.n])]
        for name, cube in self.relations.items():
            parts.append(name.encode() + b':' + bytes([cube.ndim]))
            parts.append(np.packbits(cube.ravel()).tobytes())
        parts.append(b'|')
        for name, value in self.constants.items():
            parts.append(name.encode() + bytes([value]))
        return b''.join(parts)

    def permute(self, perm: Sequence[int]) -> 'FiniteModel':
        """Image under the permutation taking element i+1 to perm[i]+1."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        rels = {}
        for name, cube in self.relations.items():
            rels[name] = cube if cube.ndim == 0 else cube[np.ix_(*([inv] * cube.ndim))]
        consts = {name: int(perm[v - 1]) + 1 for name, v in self.constants.items()}
        return FiniteModel(self.n, rels, consts)

    def to_json(self) -> dict:
        rels = {}
        for name in self.relations:
            tuples = self.true_tuples(name)
            if self.n <= 9:
                rels[name] = [''.join(str(x) for x in t) for t in tuples]
            else:
                rels[name] = [list(t) for t in tuples]
        return {'n': self.n, 'rels': rels, 'consts': dict(self.constants)}

    @classmethod
    def from_json(cls, data, arities: Optional[Mapping[str, int]] = None) -> 'FiniteModel':
        if isinstance(data, str):
            data = json.loads(data)
        n = int(data['n'])
        arities = dict(arities or {})
        rels = {}
        for name, tuples in data.get('rels', {}).items():
            rows = [[int(ch) for ch in t] if isinstance(t, str) else [int(x) for x in t]
                    for t in tuples]
            arity = len(rows[0]) if rows else arities.get(name, 3)
            cube = np.zeros((n,) * arity, dtype=bool)
            for row in rows:
                if len(row) != arity or not all(1 <= x <= n for x in row):
                    raise ModelError(f"Bad tuple {row} for relation '{name}' of size {n}")
                cube[tuple(x - 1 for x in row)] = True
            rels[name] = cube
        return cls(n, rels, data.get('consts', {}))

    def __eq__(self, other):
        return isinstance(other, FiniteModel) and self.encode() == other.encode()

    def __hash__(self):
        return hash(self.encode())

    def __repr__(self):
        body = '; '.join(f'{r}: {format_triples(self, r)}' if c.ndim == 3 else f'{r}/{c.ndim}'
                         for r, c in self.relations.items())
        return f'FiniteModel(n={self.n}, {body}, consts={self.constants})'


# ---- CANONICAL FORM --------------------------------------------

def canonical_form(m: FiniteModel) -> FiniteModel:
    """The isomorphic copy with the least encoding over all n! relabelings."""
    best, best_key = m, m.encode()
    for perm in itertools.permutations(range(m.n)):
        image = m.permute(perm)
        key = image.encode()
        if key < best_key:
            best, best_key = image, key
    return best


def canonicalize(m: FiniteModel) -> bytes:
    return canonical_form(m).encode()


def isomorphic(a: FiniteModel, b: FiniteModel) -> bool:
    return a.n == b.n and canonicalize(a) == canonicalize(b)


# ---- EVALUATION ------------------------------------------------

def _term_value(m: FiniteModel, t, env: Dict[str, int]) -> int:
    if isinstance(t, Var):
        if t.name not in env:
            raise ModelError(f"Free variable '{t.name}'")
        return env[t.name]
    if isinstance(t, Const):
        if t.name not in m.constants:
            raise ModelError(f"Constant '{t.name}' is not interpreted")
        return m.constants[t.name]
    raise ModelError(f"Function symbol '{t.name}' is not interpreted by a finite model")


def evaluate(m: FiniteModel, f: Formula, env: Optional[Dict[str, int]] = None) -> bool:
    env = env or {}
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Pred):
        if f.name not in m.relations:
            raise ModelError(f"Relation '{f.name}' is not interpreted")
        return m.holds(f.name, [_term_value(m, a, env) for a in f.args])
    if isinstance(f, Eq):
        return _term_value(m, f.left, env) == _term_value(m, f.right, env)
    if isinstance(f, Not):
        return not evaluate(m, f.arg, env)
    if isinstance(f, And):
        return all(evaluate(m, a, env) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(m, a, env) for a in f.args)
    if isinstance(f, Implies):
        return (not evaluate(m, f.left, env)) or evaluate(m, f.right, env)
    if isinstance(f, Iff):
        return evaluate(m, f.left, env) == evaluate(m, f.right, env)
    if isinstance(f, (Forall, Exists)):
        test = all if isinstance(f, Forall) else any
        domain = range(1, m.n + 1)
        return test(evaluate(m, f.body, {**env, **dict(zip(f.variables, values))})
                    for values in itertools.product(domain, repeat=len(f.variables)))
    raise ModelError(f'Not a formula: {f!r}')


def satisfies_signed(m: FiniteModel, system, pattern) -> bool:
    """Each axiom holds where the pattern has '+' and fails where it has '-'."""
    from corpus import SignPattern

    if not isinstance(pattern, SignPattern):
        pattern = SignPattern.parse(pattern, system)
    return all(evaluate(m, f) == keep for f, keep in zip(system.formulas, pattern.marks))


def evaluate_batch(cubes: Mapping[str, np.ndarray], n: int, f: Formula,
                   env: Optional[Dict[str, int]] = None) -> np.ndarray:
    """Vectorized evaluate over B interpretations at once.

    cubes maps each relation to a bool array of shape (B,) + (n,)*arity;
    the result is a bool array of shape (B,).  Constants are not supported.
    """
    env = env or {}
    batch = next(iter(cubes.values())).shape[0]

    def val(t):
        if isinstance(t, Var):
            return env[t.name]
        raise ModelError('Batched evaluation supports variables only')

    if isinstance(f, Top):
        return np.ones(batch, dtype=bool)
    if isinstance(f, Bottom):
        return np.zeros(batch, dtype=bool)
    if isinstance(f, Pred):
        if f.name not in cubes:
            raise ModelError(f"Relation '{f.name}' is not interpreted")
        return cubes[f.name][(slice(None),) + tuple(val(a) - 1 for a in f.args)]
    if isinstance(f, Eq):
        return np.full(batch, val(f.left) == val(f.right))
    if isinstance(f, Not):
        return ~evaluate_batch(cubes, n, f.arg, env)
    if isinstance(f, And):
        return reduce(np.logical_and, (evaluate_batch(cubes, n, a, env) for a in f.args))
    if isinstance(f, Or):
        return reduce(np.logical_or, (evaluate_batch(cubes, n, a, env) for a in f.args))
    if isinstance(f, Implies):
        return ~evaluate_batch(cubes, n, f.left, env) | evaluate_batch(cubes, n, f.right, env)
    if isinstance(f, Iff):
        return evaluate_batch(cubes, n, f.left, env) == evaluate_batch(cubes, n, f.right, env)
    if isinstance(f, (Forall, Exists)):
        combine = np.logical_and if isinstance(f, Forall) else np.logical_or
        parts = (evaluate_batch(cubes, n, f.body, {**env, **dict(zip(f.variables, values))})
                 for values in itertools.product(range(1, n + 1), repeat=len(f.variables)))
        return reduce(combine, parts)
    raise ModelError(f'Not a formula: {f!r}')


# ---- INTERDEFINITIONS ------------------------------------------

def _distinct_mask(n: int) -> np.ndarray:
    i, j, k = np.indices((n, n, n))
    return (i != j) & (i != k) & (j != k)


def _with_relation(m: FiniteModel, target: str, cube) -> FiniteModel:
    rels = dict(m.relations)
    rels[target] = cube
    return FiniteModel(m.n, rels, m.constants)


def weak_from_strict(m: FiniteModel, source: str = 'sb', target: str = 'wb') -> FiniteModel:
    """Adds wb: a triple is weakly between when it is strictly between or has two equal points."""
    if source not in m.relations:
        raise ModelError(f"Relation '{source}' is not interpreted")
    return _with_relation(m, target, m.relations[source] | ~_distinct_mask(m.n))


def strict_from_weak(m: FiniteModel, source: str = 'wb', target: str = 'sb') -> FiniteModel:
    """Adds (or replaces) sb: the weakly-between triples whose points are pairwise distinct."""
    if source not in m.relations:
        raise ModelError(f"Relation '{source}' is not interpreted")
    return _with_relation(m, target, m.relations[source] & _distinct_mask(m.n))


# ---- TRIPLE NOTATION -------------------------------------------

def parse_triples(text: str, n: int, relation: str = 'sb') -> FiniteModel:
    """'123, 321' -> model of size n with exactly those triples true."""
    if n > 9:
        raise ModelError('Triple notation covers n <= 9; use the JSON form')
    text = text.strip()
    cube = np.zeros((n, n, n), dtype=bool)
    if text.lower() in ALL_PHRASES:
        cube[:] = True
    elif text.lower() not in NONE_PHRASES:
        for token in text.split(','):
            token = token.strip()
            if not _TOKEN_RE.match(token):
                raise ModelError(f"Malformed triple '{token}'")
            digits = [int(ch) for ch in token]
            if not all(1 <= d <= n for d in digits):
                raise ModelError(f"Triple '{token}' has a digit outside 1..{n}")
            cube[tuple(d - 1 for d in digits)] = True
    return FiniteModel(n, {relation: cube})


def format_triples(m: FiniteModel, relation: str = 'sb') -> str:
    if m.n > 9:
        raise ModelError('Triple notation covers n <= 9; use the JSON form')
    tuples = m.true_tuples(relation)
    if not tuples:
        return '(none)'
    return ', '.join(''.join(str(x) for x in t) for t in sorted(tuples))


def describe(m: FiniteModel) -> str:
    """One line per relation in triple notation, plus constants."""
    lines = []
    for name, cube in m.relations.items():
        if cube.ndim == 3 and m.n <= 9:
            lines.append(f'{name}: {format_triples(m, name)}')
        else:
            lines.append(f'{name}: {m.true_tuples(name)}')
    if m.constants:
        lines.append('consts: ' + ', '.join(f'{c}={v}' for c, v in m.constants.items()))
    return '\n'.join(lines)
