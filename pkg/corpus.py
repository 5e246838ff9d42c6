# corpus.py
# Embedded axiom systems for strict and weak betweenness, the two
# interdefinitions, the nontriviality hypothesis, and sign patterns.

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

from formula import (BETWEENNESS, Formula, NamedFormula, Not, expand_distinct,
                     parse_formula, print_formula)

logger = logging.getLogger(__name__)


class CorpusError(ValueError):
    pass


def _delta(*names: str) -> str:
    return print_formula(expand_distinct(names))


def _six(rel: str, a: str, b: str, c: str) -> str:
    perms = [(b, a, c), (c, a, b), (a, b, c), (c, b, a), (a, c, b), (b, c, a)]
    return ' | '.join(f'{rel}({x},{y},{z})' for x, y, z in perms)


# ---- AXIOM TEXTS -----------------------------------------------
# The middle argument is the point lying between the outer two.

HUNTINGTON = {
    'A': '![A,B,C]: (sb(A,B,C) => sb(C,B,A))',
    'B': f"![A,B,C]: (({_delta('A', 'B', 'C')}) => ({_six('sb', 'A', 'B', 'C')}))",
    'C': f"![A,X,Y]: (({_delta('A', 'X', 'Y')}) => ~(sb(A,X,Y) & sb(A,Y,X)))",
    'D': f"![A,B,C]: (sb(A,B,C) => ({_delta('A', 'B', 'C')}))",
    '9': (f"![A,B,C,X]: ((sb(A,B,C) & ({_delta('A', 'B', 'C', 'X')})) "
          f"=> (sb(A,B,X) | sb(X,B,C)))"),
}

MCPHEE = {
    'm1': ('?[Z]: ![A,B]: (wb(A,B,Z) | wb(A,Z,B) | wb(B,Z,A) '
           '| wb(B,A,Z) | wb(Z,A,B) | wb(Z,B,A))'),
    'm2': '![A,B,C,D]: ((wb(B,A,C) & wb(C,D,A)) => wb(D,A,B))',
    'm3': '![A,B,C,D]: ((wb(B,A,C) & wb(D,B,A)) => (wb(C,A,D) | A = B))',
    'm4': '![A,B,C,D]: ((wb(B,A,C) & wb(C,A,D) & wb(D,A,B)) => (A = B | A = C | A = D))',
    'm5': '![A,B,C]: (wb(A,B,C) | wb(B,C,A) | wb(B,A,C))',
    'm6': '![A,B,C]: (wb(A,B,C) | wb(A,C,B) | wb(B,C,A) | wb(B,A,C) | wb(C,A,B) | wb(C,B,A))',
    'm7': ('![A,B,C,D]: ((wb(C,A,D) & wb(C,B,D) & wb(A,C,B) & wb(A,D,B)) '
           '=> (A = C | B = C | A = D | B = D))'),
}

DEFINITIONS = {
    'weak_from_strict': '![X,Y,Z]: (wb(X,Y,Z) <=> (sb(X,Y,Z) | X = Y | X = Z | Y = Z))',
    'strict_from_weak': f"![X,Y,Z]: (sb(X,Y,Z) <=> (wb(X,Y,Z) & {_delta('X', 'Y', 'Z')}))",
}

HYPOTHESES = {
    'nontrivial': '?[A,B,C]: sb(A,B,C)',
}

SYSTEMS = {
    'huntington':       ('sb', 'huntington', ['A', 'B', 'C', 'D', '9']),
    'huntington_prime': ('sb', 'huntington', ['A', 'B', 'C', '9']),
    'mcphee1':          ('wb', 'mcphee', ['m1', 'm2', 'm3', 'm4']),
    'mcphee2':          ('wb', 'mcphee', ['m3', 'm4', 'm5']),
    'mcphee3':          ('wb', 'mcphee', ['m2', 'm6', 'm7']),
}

_FAMILIES = {'huntington': HUNTINGTON, 'mcphee': MCPHEE}


def selector(family: str, axiom: str) -> str:
    """Qualified selector, e.g. 'huntington.A' or 'mcphee.5'."""
    return f'{family}.{axiom[1:] if family == "mcphee" else axiom}'


@lru_cache(maxsize=None)
def _parsed(text: str) -> Formula:
    return parse_formula(text, BETWEENNESS)


@dataclass(frozen=True)
class AxiomSystem:
    name: str
    relation: str
    family: str
    axioms: Tuple[NamedFormula, ...]

    @property
    def names(self) -> List[str]:
        return [a.name for a in self.axioms]

    @property
    def formulas(self) -> List[Formula]:
        return [a.formula for a in self.axioms]

    def named(self) -> List[NamedFormula]:
        """Axioms under their qualified selectors, usable as premises."""
        return [NamedFormula(selector(self.family, a.name), a.formula) for a in self.axioms]

    def __len__(self):
        return len(self.axioms)


def get_system(name: str) -> AxiomSystem:
    if name not in SYSTEMS:
        raise CorpusError(f"Unknown system '{name}'. Valid: {', '.join(SYSTEMS)}")
    relation, family, axiom_names = SYSTEMS[name]
    texts = _FAMILIES[family]
    axioms = tuple(NamedFormula(a, _parsed(texts[a])) for a in axiom_names)
    return AxiomSystem(name, relation, family, axioms)


def get_definition(name: str) -> Formula:
    if name not in DEFINITIONS:
        raise CorpusError(f"Unknown definition '{name}'. Valid: {', '.join(DEFINITIONS)}")
    return _parsed(DEFINITIONS[name])


def get_hypothesis(name: str) -> Formula:
    if name not in HYPOTHESES:
        raise CorpusError(f"Unknown hypothesis '{name}'. Valid: {', '.join(HYPOTHESES)}")
    return _parsed(HYPOTHESES[name])


def all_selectors() -> List[str]:
    out = [selector('huntington', a) for a in HUNTINGTON]
    out += [selector('mcphee', a) for a in MCPHEE]
    out += [f'def.{d}' for d in DEFINITIONS]
    out += [f'hyp.{h}' for h in HYPOTHESES]
    return out


def resolve(name: str) -> List[NamedFormula]:
    """A selector or system name -> the formulas it stands for."""
    name = name.strip()
    if name in SYSTEMS:
        return get_system(name).named()
    family, _, key = name.partition('.')
    if family == 'huntington' and key in HUNTINGTON:
        return [NamedFormula(name, _parsed(HUNTINGTON[key]))]
    if family == 'mcphee' and f'm{key}' in MCPHEE:
        return [NamedFormula(name, _parsed(MCPHEE[f'm{key}']))]
    if family == 'def' and key in DEFINITIONS:
        return [NamedFormula(name, get_definition(key))]
    if family == 'hyp' and key in HYPOTHESES:
        return [NamedFormula(name, get_hypothesis(key))]
    raise CorpusError(f"Unknown selector '{name}'")


def resolve_all(names: Sequence[str]) -> List[NamedFormula]:
    out: Dict[str, NamedFormula] = {}
    for n in names:
        for nf in resolve(n):
            out.setdefault(nf.name, nf)
    return list(out.values())


def resolve_goal(name: str) -> NamedFormula:
    found = resolve(name)
    if len(found) != 1:
        raise CorpusError(f"Goal '{name}' must name a single formula")
    return found[0]


# ---- SIGN PATTERNS ---------------------------------------------

_PATTERN_RE = re.compile(r'^[+-]+$')


@dataclass(frozen=True)
class SignPattern:
    marks: Tuple[bool, ...]

    @classmethod
    def parse(cls, text: str, system: AxiomSystem = None) -> 'SignPattern':
        text = text.strip()
        if not _PATTERN_RE.match(text):
            raise CorpusError(f"Malformed sign pattern '{text}': use only '+' and '-'")
        if system is not None and len(text) != len(system):
            raise CorpusError(f"Pattern '{text}' has {len(text)} marks, "
                              f"system '{system.name}' has {len(system)} axioms")
        return cls(tuple(ch == '+' for ch in text))

    @property
    def negated_count(self) -> int:
        return sum(not m for m in self.marks)

    def __str__(self):
        return ''.join('+' if m else '-' for m in self.marks)

    def __len__(self):
        return len(self.marks)


def all_patterns(system: AxiomSystem) -> List[SignPattern]:
    """Every sign pattern, all-positive first, counting with '-' as the one-bit."""
    return [SignPattern(marks) for marks in itertools.product((True, False), repeat=len(system))]


def signed_set(system: AxiomSystem, pattern) -> List[NamedFormula]:
    if not isinstance(pattern, SignPattern):
        pattern = SignPattern.parse(pattern, system)
    elif len(pattern) != len(system):
        raise CorpusError(f"Pattern '{pattern}' does not fit system '{system.name}'")
    out = []
    for (name, f), keep in zip(system.named(), pattern.marks):
        out.append(NamedFormula(name, f) if keep else NamedFormula(f'~{name}', Not(f)))
    return out
