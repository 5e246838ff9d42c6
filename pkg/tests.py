# tests.py
# Run: python -m pytest tests.py -v
# Or:  python tests.py

import contextlib
import io
import itertools
import json
import os
import sys
import tempfile
import unittest
from unittest import mock

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import Settings
from corpus import (CorpusError, SignPattern, all_patterns, all_selectors, get_definition,
                    get_hypothesis, get_system, resolve, resolve_all, resolve_goal, signed_set)
from experiments import (MINIMAL_MODELS, detached_backward, detached_forward, render_json,
                         run_experiment, separation, write_reports, ExperimentReport, ReportItem)
from finder import (exhaustive_satisfiable, find_model, independence_scan, is_completely_independent,
                    lower_bound_violations, minimal_model_size, negation_lower_bounds)
from formula import (Bottom, Const, Eq, Forall, FormulaError, FormulaSyntaxError, Iff, Implies,
                     NamedFormula, Not, Or, Pred, Signature, SignatureError, Var, clausify,
                     clausify_all, conjuncts, expand_distinct, export_problem, is_epr, parse_formula,
                     print_formula)
from model import (FiniteModel, ModelError, canonical_form, canonicalize, evaluate, evaluate_batch,
                   format_triples, isomorphic, parse_triples, satisfies_signed, strict_from_weak,
                   weak_from_strict)
from monitoring import RunMonitor
from prover import (Countermodel, NotDerivableError, Proved, SignatureMismatch, Unknown, cross_check,
                    entails, needed_axioms, used_premises)
from solver import (add_symmetry_breaking, ground_herbrand, ground_over_domain, minimize_core, solve,
                    to_dimacs)
from validation import validate_caps, validate_pattern, validate_selectors

SERIAL = Settings(jobs=1)

H       = get_system('huntington')
H_PRIME = get_system('huntington_prime')
WEAK    = NamedFormula('def.weak_from_strict', get_definition('weak_from_strict'))
STRICT  = NamedFormula('def.strict_from_weak', get_definition('strict_from_weak'))


def goal(selector):
    return resolve_goal(selector).formula


def closed_clause(clause):
    """The universal closure of a clause as a formula."""
    lits = [l.atom if l.positive else Not(l.atom) for l in clause.sorted_literals()]
    body = Bottom() if not lits else lits[0] if len(lits) == 1 else Or(tuple(lits))
    names = clause.variables()
    return Forall(tuple(names), body) if names else body


def run_cli(argv):
    from cli import run
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = run(argv)
    return code, out.getvalue(), err.getvalue()


class TestFormula(unittest.TestCase):

    def test_parse_symmetry_axiom(self):
        f = parse_formula('![A,B,C]: (sb(A,B,C) => sb(C,B,A))')
        a, b, c = Var('A'), Var('B'), Var('C')
        self.assertEqual(f, Forall(('A', 'B', 'C'),
                                   Implies(Pred('sb', (a, b, c)), Pred('sb', (c, b, a)))))

    def test_not_equal_is_negated_equality(self):
        f = parse_formula('![X,Y]: X != Y')
        self.assertEqual(f.body, Not(Eq(Var('X'), Var('Y'))))

    def test_print_then_parse_is_identity(self):
        named = resolve_all(['huntington', 'mcphee1', 'mcphee2', 'mcphee3',
                             'def.weak_from_strict', 'def.strict_from_weak', 'hyp.nontrivial'])
        for name, f in named:
            with self.subTest(axiom=name):
                self.assertEqual(parse_formula(print_formula(f)), f)

    def test_syntax_error_has_position(self):
        with self.assertRaises(FormulaSyntaxError) as ctx:
            parse_formula('![A]: (sb(A,A,A) &')
        self.assertEqual(ctx.exception.line, 1)

    def test_signature_errors(self):
        cases = ['![A]: foo(A)', '![A,B]: sb(A,B)', 'sb(A,B,C)', '![A]: sb(A,A,c)']
        for text in cases:
            with self.subTest(text=text):
                with self.assertRaises(SignatureError):
                    parse_formula(text)

    def test_custom_signature(self):
        sig = Signature.of({'p': 1}, constants=['a'])
        self.assertEqual(parse_formula('p(a)', sig), Pred('p', (Const('a'),)))
        with self.assertRaises(SignatureError):
            Signature.of({'p': 1}, constants=['p'])

    def test_expand_distinct(self):
        self.assertEqual(expand_distinct(['A', 'B']), Not(Eq(Var('A'), Var('B'))))
        self.assertEqual(len(conjuncts(expand_distinct(['A', 'B', 'C']))), 3)
        self.assertEqual(len(conjuncts(expand_distinct(['A', 'B', 'C', 'X']))), 6)
        with self.assertRaises(FormulaError):
            expand_distinct(['A'])

    def test_strict_from_weak_is_four_way_conjunction(self):
        body = STRICT.formula.body
        self.assertIsInstance(body, Iff)
        self.assertEqual(len(conjuncts(body.right)), 4)

    def test_export_problem(self):
        text = export_problem(resolve_all(['huntington.A']), goal('huntington.D'),
                              goal_name='huntington.D')
        self.assertIn('fof(huntington_A, axiom, ', text)
        self.assertIn('fof(huntington_D, conjecture, ', text)


class TestClausify(unittest.TestCase):

    def test_existential_prefix_gives_one_constant(self):
        cs = clausify(goal('mcphee.1'))
        self.assertEqual(len(cs), 1)
        self.assertEqual(len(cs.clauses[0].literals), 6)
        self.assertEqual(cs.constants(), ['sk0'])
        self.assertTrue(is_epr(cs))

    def test_negated_b_gives_three_distinct_constants(self):
        cs = clausify(Not(H.axioms[1].formula))
        self.assertEqual(len(cs.constants()), 3)
        self.assertEqual(len(cs), 9)
        self.assertTrue(all(not l.positive for c in cs for l in c.literals))

    def test_negated_m1_needs_functions(self):
        cs = clausify(Not(goal('mcphee.1')))
        self.assertFalse(is_epr(cs))
        self.assertEqual(sorted(cs.functions().values()), [1, 1])

    def test_tautologies_dropped(self):
        self.assertEqual(len(clausify(parse_formula('![A]: (sb(A,A,A) | ~sb(A,A,A))'))), 0)
        self.assertEqual(len(clausify(parse_formula('![A]: A = A'))), 0)
        cs = clausify(parse_formula('![A,B]: (A != A | sb(A,B,B))'))
        self.assertEqual(len(cs), 1)
        self.assertEqual(len(cs.clauses[0].literals), 1)

    def test_biconditional_definition(self):
        self.assertEqual(len(clausify(WEAK.formula)), 5)

    def test_shared_skolem_counter(self):
        cs = clausify_all([('g1', goal('mcphee.1')), ('g2', goal('mcphee.1'))])
        self.assertEqual(cs.constants(), ['sk0', 'sk1'])
        self.assertEqual(cs.tags(), ['g1', 'g2'])

    def test_negated_nine_gives_four_constants(self):
        self.assertEqual(len(clausify(Not(H.formulas[4])).constants()), 4)

    def test_clause_sets_are_equisatisfiable_with_sources(self):
        checked = []
        for selector in all_selectors():
            source = goal(selector)
            for label, f in ((selector, source), ('~' + selector, Not(source))):
                cs = clausify(f)
                if not is_epr(cs):
                    continue
                closed = [(f'c{i}', closed_clause(c)) for i, c in enumerate(cs)]
                for n in (1, 2, 3):
                    with self.subTest(formula=label, n=n):
                        clausified = find_model(closed, n).satisfiable if closed else True
                        self.assertEqual(clausified, find_model([(label, f)], n).satisfiable)
                checked.append(label)
        # only ~m1 leaves the function-free fragment
        self.assertEqual(len(checked), 2 * len(all_selectors()) - 1)
        self.assertNotIn('~mcphee.1', checked)


class TestCorpus(unittest.TestCase):

    def test_system_sizes(self):
        sizes = {name: len(get_system(name)) for name in
                 ('huntington', 'huntington_prime', 'mcphee1', 'mcphee2', 'mcphee3')}
        self.assertEqual(sizes, {'huntington': 5, 'huntington_prime': 4,
                                 'mcphee1': 4, 'mcphee2': 3, 'mcphee3': 3})

    def test_pattern_order(self):
        patterns = [str(p) for p in all_patterns(H)]
        self.assertEqual(len(patterns), 32)
        self.assertEqual(patterns[0], '+++++')
        self.assertEqual(patterns[1], '++++-')
        self.assertEqual(patterns[-1], '-----')

    def test_signed_set(self):
        self.assertEqual([f for _, f in signed_set(H, '+++++')], H.formulas)
        signed = signed_set(H, '+++-+')
        self.assertEqual(signed[3], NamedFormula('~huntington.D', Not(H.formulas[3])))

    def test_bad_patterns(self):
        for text in ('++x++', '++++', '++++++', ''):
            with self.subTest(pattern=text):
                with self.assertRaises(CorpusError):
                    SignPattern.parse(text, H)

    def test_selectors(self):
        self.assertEqual(len(resolve('mcphee.5')), 1)
        self.assertEqual([n for n, _ in resolve('huntington')],
                         ['huntington.A', 'huntington.B', 'huntington.C', 'huntington.D', 'huntington.9'])
        with self.assertRaises(CorpusError):
            resolve('nope')
        with self.assertRaises(CorpusError):
            resolve_goal('huntington')


class TestModel(unittest.TestCase):

    def test_evaluate(self):
        m = parse_triples('123, 132, 231, 321', 3)
        self.assertFalse(evaluate(m, H.formulas[2]))
        self.assertTrue(evaluate(m, H.formulas[0]))
        self.assertFalse(evaluate(parse_triples('111', 1), H.formulas[3]))

    def test_published_interpretations(self):
        for pattern, (n, text) in MINIMAL_MODELS.items():
            with self.subTest(pattern=pattern):
                self.assertTrue(satisfies_signed(parse_triples(text, n), H, pattern))

    def test_all_triples_phrase(self):
        m = parse_triples('(all possible betweennesses)', 3)
        self.assertEqual(len(m.true_tuples('sb')), 27)
        self.assertTrue(satisfies_signed(m, H, '++--+'))

    def test_parse_errors(self):
        for text, n in (('124', 3), ('12', 3), ('1a3', 3), ('111', 10)):
            with self.subTest(text=text, n=n):
                with self.assertRaises(ModelError):
                    parse_triples(text, n)

    def test_format(self):
        self.assertEqual(format_triples(parse_triples('(none)', 1)), '(none)')
        self.assertEqual(format_triples(parse_triples('321, 123', 3)), '123, 321')

    def test_permute(self):
        m = parse_triples('123', 3).permute([1, 0, 2])
        self.assertEqual(format_triples(m), '213')

    def test_canonical_form(self):
        a = parse_triples('111, 122', 2)
        b = parse_triples('211, 222', 2)
        self.assertTrue(isomorphic(a, b))
        self.assertEqual(canonical_form(a), canonical_form(b))
        self.assertEqual(format_triples(canonical_form(parse_triples('123, 321', 3))), '213, 312')
        self.assertFalse(isomorphic(a, parse_triples('111', 2)))

    def test_json_form(self):
        m = parse_triples('123, 321', 3)
        self.assertEqual(m.to_json(), {'n': 3, 'rels': {'sb': ['123', '321']}, 'consts': {}})
        self.assertEqual(FiniteModel.from_json(json.dumps(m.to_json())), m)

    def test_uninterpreted_symbol(self):
        with self.assertRaises(ModelError):
            evaluate(parse_triples('111', 1), goal('mcphee.5'))

    def test_batch_matches_scalar(self):
        texts = ['(none)', '123', '123, 321', '123, 132, 231, 321', '111, 211', '121']
        models = [parse_triples(t, 3) for t in texts]
        stack = {'sb': np.stack([m.relations['sb'] for m in models])}
        for name, f in H.axioms:
            with self.subTest(axiom=name):
                expected = [evaluate(m, f) for m in models]
                self.assertEqual(evaluate_batch(stack, 3, f).tolist(), expected)

    def test_canonicalize_is_permutation_invariant(self):
        for n in (1, 2):
            for bits in itertools.product((False, True), repeat=n ** 3):
                m = FiniteModel(n, {'sb': np.array(bits).reshape((n, n, n))})
                key = canonicalize(m)
                for perm in itertools.permutations(range(n)):
                    self.assertEqual(canonicalize(m.permute(perm)), key)
        rng = np.random.default_rng(7)
        for _ in range(200):
            m = FiniteModel(3, {'sb': rng.random((3, 3, 3)) < 0.3})
            key = canonicalize(m)
            self.assertEqual(canonicalize(canonical_form(m)), key)
            for perm in itertools.permutations(range(3)):
                image = m.permute(perm)
                self.assertEqual(canonicalize(image), key)
                self.assertLessEqual(key, image.encode())

    def test_interdefinition_round_trip(self):
        hyp = [('hyp.nontrivial', get_hypothesis('nontrivial'))]
        models = [find_model(H.named(), n).model for n in (1, 2, 3)]
        models.append(find_model(H.named() + hyp, 3).model)
        models += [parse_triples(text, n) for pattern, (n, text) in MINIMAL_MODELS.items()
                   if pattern[3] == '+']
        for m in models:
            with self.subTest(model=format_triples(m), n=m.n):
                weak = weak_from_strict(m)
                self.assertTrue(evaluate(weak, WEAK.formula))
                back = strict_from_weak(weak)
                self.assertTrue(evaluate(back, STRICT.formula))
                self.assertTrue(np.array_equal(back.relations['sb'], m.relations['sb']))

    def test_round_trip_needs_d(self):
        m = parse_triples('111', 1)
        self.assertFalse(evaluate(m, H.formulas[3]))
        self.assertEqual(format_triples(strict_from_weak(weak_from_strict(m))), '(none)')
        with self.assertRaises(ModelError):
            strict_from_weak(m)


class TestSolver(unittest.TestCase):

    def test_symmetry_axiom_grounding(self):
        p = ground_over_domain([('A', H.formulas[0])], 2)
        self.assertEqual(len(p.atoms), 8)
        self.assertEqual(len(p.clauses), 8)

    def test_negated_nine_needs_four_elements(self):
        p = ground_over_domain(signed_set(H, '++++-'), 3)
        result = solve(p)
        self.assertFalse(result.satisfiable)
        self.assertIn('~huntington.9', result.core)

    def test_core_minimization(self):
        named = [('some', parse_formula('?[A]: sb(A,A,A)')),
                 ('none', parse_formula('![A]: ~sb(A,A,A)')),
                 ('sym', H.formulas[0])]
        p = ground_over_domain(named, 2)
        result = solve(p)
        self.assertFalse(result.satisfiable)
        self.assertEqual(minimize_core(p, result.core), frozenset({'some', 'none'}))
        self.assertTrue(solve(p, ['some', 'sym']).satisfiable)

    def test_first_model_is_empty_relation(self):
        verdict = find_model(H.named(), 1)
        self.assertTrue(verdict.satisfiable)
        self.assertEqual(format_triples(verdict.model), '(none)')

    def test_symmetry_breaking_gives_canonical_witness(self):
        named = H.named() + [('hyp', get_hypothesis('nontrivial'))]
        verdict = find_model(named, 3, symmetry_breaking=True)
        self.assertTrue(verdict.satisfiable)
        self.assertEqual(verdict.model, canonical_form(verdict.model))
        self.assertEqual(format_triples(verdict.model), '213, 312')

    def test_symmetry_breaking_keeps_satisfiability(self):
        for pattern in ('-++-+', '+-+-+', '--+-+'):
            with self.subTest(pattern=pattern):
                n = MINIMAL_MODELS[pattern][0]
                p = add_symmetry_breaking(ground_over_domain(signed_set(H, pattern), n))
                self.assertTrue(solve(p).satisfiable)

    def test_dimacs(self):
        text = to_dimacs(ground_over_domain([('A', H.formulas[0])], 2))
        self.assertIn('p cnf 9 8', text)
        self.assertIn('c selector 9 A', text)

    def test_herbrand_refutes_m1_from_m5_instance(self):
        cs = clausify_all(get_system('mcphee2').named() + [('~goal', Not(goal('mcphee.1')))])
        self.assertFalse(solve(ground_herbrand(cs, 1)).satisfiable)


class TestFinder(unittest.TestCase):

    def test_published_rows(self):
        for pattern in ('-++-+', '+-+-+', '-+-++'):
            with self.subTest(pattern=pattern):
                r = minimal_model_size(signed_set(H, pattern), 4)
                self.assertEqual(r.size, MINIMAL_MODELS[pattern][0])
                self.assertTrue(satisfies_signed(r.witness, H, pattern))

    def test_pattern_missing_from_listing_needs_four(self):
        r = minimal_model_size(signed_set(H, '--+++'), 4)
        self.assertEqual(r.size, 4)
        self.assertEqual(r.refuted, (1, 2, 3))

    def test_nontriviality(self):
        hyp = [('hyp.nontrivial', get_hypothesis('nontrivial'))]
        self.assertEqual(minimal_model_size(H.named(), 4).size, 1)
        self.assertEqual(minimal_model_size(H.named() + hyp, 4).size, 3)
        r = minimal_model_size(H_PRIME.named() + hyp, 4)
        self.assertEqual(r.size, 1)
        self.assertEqual(format_triples(r.witness), '111')

    def test_independence_scan(self):
        results = independence_scan(H, cap=4, n_jobs=1)
        self.assertEqual(len(results), 32)
        self.assertTrue(is_completely_independent(results))
        sizes = {r.pattern: r.size for r in results}
        for pattern, (n, _) in MINIMAL_MODELS.items():
            self.assertEqual(sizes[pattern], n, pattern)
        self.assertEqual(sum(1 for s in sizes.values() if s == 4), 21)
        self.assertEqual(lower_bound_violations(H, results, cap=4), [])

    def test_scan_independent_of_workers(self):
        serial = independence_scan(H, cap=3, n_jobs=1)
        self.assertEqual(independence_scan(H, cap=3, n_jobs=2), serial)

    def test_negation_lower_bounds(self):
        self.assertEqual(negation_lower_bounds(H, cap=4), {'A': 2, 'B': 3, 'C': 3, 'D': 1, '9': 4})

    def test_oracle_agrees_up_to_two(self):
        for pattern in all_patterns(H):
            for n in (1, 2):
                with self.subTest(pattern=str(pattern), n=n):
                    formulas = signed_set(H, pattern)
                    self.assertEqual(find_model(formulas, n).satisfiable,
                                     exhaustive_satisfiable(formulas, n) is not None)

    @unittest.skipUnless(Settings.from_env().exhaustive_oracle, 'set BETWEENLAB_EXHAUSTIVE_ORACLE=1')
    def test_oracle_agrees_at_three(self):
        for pattern in all_patterns(H):
            with self.subTest(pattern=str(pattern)):
                formulas = signed_set(H, pattern)
                self.assertEqual(find_model(formulas, 3).satisfiable,
                                 exhaustive_satisfiable(formulas, 3) is not None)


class TestProver(unittest.TestCase):

    def test_totality_follows_from_b(self):
        for premises in (H.named(), H_PRIME.named()):
            v = entails(premises + [WEAK], goal('mcphee.5'))
            self.assertIsInstance(v, Proved)
            self.assertEqual(v.method, 'domain')
            self.assertIsNone(cross_check(v))

    def test_displayed_definition_admits_countermodels(self):
        for selector, size in (('mcphee.2', 3), ('mcphee.3', 3), ('mcphee.4', 2), ('mcphee.7', 2)):
            with self.subTest(goal=selector):
                v = entails(H.named() + [WEAK], goal(selector))
                self.assertIsInstance(v, Countermodel)
                self.assertEqual(v.model.n, size)

    def test_m1_by_herbrand_instantiation(self):
        v = entails(H.named() + [WEAK], goal('mcphee.1'), minimize=True)
        self.assertIsInstance(v, Proved)
        self.assertEqual(v.method, 'herbrand')
        self.assertEqual(v.core, frozenset({'huntington.B', 'def.weak_from_strict'}))
        for system in ('mcphee2', 'mcphee3'):
            with self.subTest(system=system):
                self.assertIsInstance(entails(get_system(system).named(), goal('mcphee.1')), Proved)

    def test_bounds_exhausted(self):
        v = entails(H.named() + [WEAK], goal('mcphee.1'), depth_cap=0, size_cap=1)
        self.assertIsInstance(v, Unknown)

    def test_d_from_strict_definition(self):
        for system in ('mcphee1', 'mcphee2', 'mcphee3'):
            with self.subTest(system=system):
                table = needed_axioms(get_system(system).named() + [STRICT], goal('huntington.D'))
                self.assertEqual(table.pop('def.strict_from_weak').status, 'yes')
                self.assertEqual({v.status for v in table.values()}, {'no'})

    def test_b_from_mcphee_systems(self):
        for system in ('mcphee2', 'mcphee3'):
            with self.subTest(system=system):
                v = entails(get_system(system).named() + [STRICT], goal('huntington.B'))
                self.assertIsInstance(v, Proved)

    def test_needed_premises_are_in_the_core(self):
        for system in ('mcphee1', 'mcphee2', 'mcphee3'):
            premises = get_system(system).named() + [STRICT]
            full = entails(premises, goal('huntington.D'))
            table = needed_axioms(premises, goal('huntington.D'))
            for name, nv in table.items():
                if nv.status == 'yes':
                    with self.subTest(system=system, premise=name):
                        self.assertIn(name, full.core)
        sig = Signature.of({'p': 1}, constants=['a'])
        pa = parse_formula('p(a)', sig)
        self.assertIn('ax', entails([('ax', pa)], pa).core)

    def test_needed_axioms_checks_every_verdict(self):
        seen = []
        premises = get_system('mcphee2').named() + [STRICT]
        needed_axioms(premises, goal('huntington.D'), check=lambda v: seen.append(v.kind) or v)
        self.assertEqual(len(seen), 1 + len(premises))

    def test_used_premises(self):
        premises = resolve_all(['huntington.A', 'huntington.D'])
        v = entails(premises, goal('huntington.A'))
        self.assertEqual(used_premises(v, minimize=True), frozenset({'huntington.A'}))

    def test_tiny_signature(self):
        sig = Signature.of({'p': 1}, constants=['a'])
        pa = parse_formula('p(a)', sig)
        self.assertIsInstance(entails([('ax', pa)], pa), Proved)
        self.assertEqual(needed_axioms([('ax', pa)], pa)['ax'].status, 'yes')
        self.assertIsInstance(entails([], parse_formula('![X]: X = X')), Proved)

    def test_monotone_in_premises(self):
        extra = [('hyp.nontrivial', get_hypothesis('nontrivial'))]
        self.assertIsInstance(entails(H.named() + [WEAK] + extra, goal('mcphee.5')), Proved)

    def test_errors(self):
        with self.assertRaises(NotDerivableError):
            needed_axioms(H.named() + [WEAK], goal('mcphee.4'))
        bad_goal = Forall(('X',), Pred('sb', (Var('X'),)))
        with self.assertRaises(SignatureMismatch):
            entails(resolve_all(['huntington.A']), bad_goal)


class TestExperiments(unittest.TestCase):

    def test_separation_matches(self):
        report = separation(SERIAL)
        self.assertTrue(report.ok)
        self.assertEqual(report.counts()['mismatch'], 0)

    def test_independence_models_match(self):
        report = run_experiment('independence-models', SERIAL)
        self.assertTrue(report.ok, [i.key for i in report.items if i.status == 'mismatch'])

    def test_detached_forward(self):
        report = detached_forward(SERIAL)
        by_key = {i.key: i for i in report.items}
        self.assertEqual(by_key['mcphee1 m1'].status, 'match')
        self.assertEqual(by_key['mcphee1 m1'].computed, 'no')
        for key in ('mcphee1 m2', 'mcphee3 m2', 'mcphee1 m4', 'mcphee2 m4'):
            self.assertEqual(by_key[key].status, 'paper-inconsistent', key)
        self.assertEqual(by_key['mcphee2 m5'].computed, 'no')
        self.assertEqual(by_key['mcphee3 m7'].computed, 'not-derivable')
        self.assertFalse(report.ok)
        self.assertEqual(len(report.notes), 1)

    def test_detached_backward(self):
        report = detached_backward(SERIAL)
        computed = {i.key: i.computed for i in report.items}
        self.assertEqual(computed['mcphee1 m1'], 'no')
        self.assertEqual(computed['mcphee2 m4'], 'no')
        self.assertEqual(computed['mcphee3 def.strict_from_weak'], 'yes')
        self.assertFalse(report.ok)

    def test_detached_backward_cross_checks_every_proof(self):
        with mock.patch('experiments.cross_check', wraps=cross_check) as spy:
            detached_backward(SERIAL)
        # one full derivation per system plus its four, three and three "no" rows
        self.assertEqual(spy.call_count, 13)
        with mock.patch('experiments.cross_check', return_value=parse_triples('111', 1)):
            with self.assertRaises(RuntimeError):
                detached_backward(SERIAL)

    def test_equivalence_reports_verdict_kind(self):
        from experiments import equivalence
        with mock.patch('experiments._prove', return_value=Unknown(0, 1)):
            report = equivalence(SERIAL)
        self.assertEqual(len(report.items), 42)
        self.assertEqual({i.computed for i in report.items}, {'unknown'})
        self.assertEqual(report.counts()['mismatch'], 42)

    def test_table_aliases(self):
        from experiments import ALIASES, EXPERIMENTS
        self.assertEqual(sorted(ALIASES), ['table1', 'table2', 'table3'])
        self.assertTrue(set(ALIASES.values()) <= set(EXPERIMENTS))
        self.assertIn('paper-inconsistent', ExperimentReport(name='x').counts())
        with self.assertRaises(ValueError):
            run_experiment('table9', SERIAL)

    def test_reports_are_reproducible(self):
        first, second = separation(SERIAL), separation(SERIAL)
        self.assertEqual(render_json(first), render_json(second))
        self.assertNotIn('elapsed', render_json(first))
        with tempfile.TemporaryDirectory() as out:
            paths = write_reports([first], out, 'csv')
            self.assertEqual(sorted(os.path.basename(p) for p in paths),
                             ['separation.csv', 'summary.csv'])


class TestCli(unittest.TestCase):

    def test_min_model(self):
        code, out, _ = run_cli(['min-model', '--system', 'huntington', '--pattern=-++-+'])
        self.assertEqual(code, 0)
        self.assertEqual(out.splitlines()[0], '2')

    def test_derive_exit_codes(self):
        base = ['derive', '--premises', 'huntington,def.weak_from_strict']
        self.assertEqual(run_cli(base + ['--goal', 'mcphee.5'])[0], 0)
        self.assertEqual(run_cli(base + ['--goal', 'mcphee.4', '--without', 'huntington.D'])[0], 1)

    def test_needed_json(self):
        code, out, _ = run_cli(['needed', '--premises', 'mcphee2,def.strict_from_weak',
                                '--goal', 'huntington.D', '--format', 'json'])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['needed']['def.strict_from_weak'], 'yes')

    def test_reproduce(self):
        with tempfile.TemporaryDirectory() as out:
            code, _, _ = run_cli(['reproduce', 'separation', '--jobs', '1', '--out', out,
                                  '--format', 'json'])
            self.assertEqual(code, 0)
            self.assertTrue(os.path.exists(os.path.join(out, 'run_summary.json')))
            with open(os.path.join(out, 'separation.json')) as fh:
                first = fh.read()
            run_cli(['reproduce', 'separation', '--jobs', '1', '--out', out, '--format', 'json'])
            with open(os.path.join(out, 'separation.json')) as fh:
                self.assertEqual(fh.read(), first)
        code, out, _ = run_cli(['reproduce', 'table3', '--jobs', '1'])
        self.assertEqual(code, 1)
        self.assertIn('== detached-backward ==', out)

    def test_reproduce_history(self):
        with tempfile.TemporaryDirectory() as out:
            path = os.path.join(out, 'history.json')
            for _ in range(2):
                code, _, _ = run_cli(['reproduce', 'separation', '--jobs', '1', '--history', path])
                self.assertEqual(code, 0)
            with open(path) as fh:
                history = json.load(fh)
            self.assertEqual(len(history), 2)
            self.assertIn('timestamp', history[0])
            self.assertEqual(RunMonitor(history_path=path).get_recent_runs()['runs'], 2)

    def test_export_tptp(self):
        with tempfile.TemporaryDirectory() as out:
            path = os.path.join(out, 'p.p')
            code, _, _ = run_cli(['export-tptp', '--premises', 'huntington', '--goal', 'mcphee.5',
                                  '--out', path])
            self.assertEqual(code, 0)
            with open(path) as fh:
                self.assertIn('fof(mcphee_5, conjecture,', fh.read())

    def test_usage_errors(self):
        cases = [
            ['find-model', '--bogus'],
            ['min-model', '--system', 'nope'],
            ['min-model', '--system', 'huntington', '--pattern', '+++'],
            ['derive', '--premises', 'huntington', '--goal', 'mcphee.9'],
            ['reproduce', 'unknown-experiment'],
            ['min-model', '--sys', 'huntington'],
            ['reproduce', 'separation', '--hist', 'runs.json'],
        ]
        for argv in cases:
            with self.subTest(argv=argv):
                self.assertEqual(run_cli(argv)[0], 2)


class TestValidation(unittest.TestCase):

    def test_pattern(self):
        self.assertTrue(validate_pattern('huntington', '-++-+')['valid'])
        self.assertFalse(validate_pattern('huntington', '-++-')['valid'])
        self.assertFalse(validate_pattern('mcphee9', '+++')['valid'])
        self.assertEqual(len(validate_pattern('mcphee2', '+++')['warnings']), 1)

    def test_selectors(self):
        self.assertTrue(validate_selectors(['huntington', 'def.weak_from_strict'])['valid'])
        result = validate_selectors(['huntington.E'])
        self.assertFalse(result['valid'])
        self.assertTrue(validate_selectors(['mcphee.1', 'mcphee.1'])['warnings'])

    def test_caps(self):
        self.assertTrue(validate_caps(cap=6, depth_cap=0)['valid'])
        self.assertFalse(validate_caps(cap=0)['valid'])
        self.assertFalse(validate_caps(size=7, symmetry_breaking=True)['valid'])

    def test_settings_from_env(self):
        s = Settings.from_env({'BETWEENLAB_CAP': '4', 'BETWEENLAB_MINIMIZE_CORES': 'yes'}, jobs=2)
        self.assertEqual((s.cap, s.minimize_cores, s.n_jobs), (4, True, 2))
        with self.assertRaises(ValueError):
            Settings.from_env({'BETWEENLAB_CAP': '0'})


class TestMonitoring(unittest.TestCase):

    def _report(self, name, elapsed, status='match'):
        item = ReportItem(key='k', computed='1', expected='1', status=status)
        return ExperimentReport(name=name, items=[item], elapsed_seconds=elapsed)

    def test_summary(self):
        monitor = RunMonitor(budget_seconds=10)
        monitor.log_experiment(self._report('a', 1.0))
        monitor.log_experiment(self._report('b', 3.0, 'mismatch'))
        summary = monitor.summary()
        self.assertEqual(summary['total_seconds'], 4.0)
        self.assertEqual(summary['slowest'], 'b')
        self.assertEqual(summary['mismatches'], 1)
        self.assertTrue(summary['within_budget'])

    def test_budget_warning(self):
        monitor = RunMonitor(budget_seconds=1)
        monitor.log_experiment(self._report('a', 2.5))
        with self.assertLogs('monitoring', level='WARNING'):
            self.assertFalse(monitor.summary()['within_budget'])

    def test_history(self):
        with tempfile.TemporaryDirectory() as out:
            path = os.path.join(out, 'history.json')
            monitor = RunMonitor(history_path=path)
            monitor.log_experiment(self._report('a', 2.0))
            monitor.save(out)
            again = RunMonitor(history_path=path)
            self.assertEqual(again.get_recent_runs()['runs'], 1)
            # no out_dir: history only
            self.assertIsNone(again.save())
            self.assertEqual(RunMonitor(history_path=path).get_recent_runs()['runs'], 2)


class TestApi(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        from fastapi.testclient import TestClient
        from api import app
        cls.client = TestClient(app)

    def test_health(self):
        r = self.client.get('/api/health')
        self.assertEqual(r.status_code, 200)
        self.assertIn('huntington', r.json()['systems'])

    def test_min_model(self):
        r = self.client.post('/api/min-model', json={'system': 'huntington', 'pattern': '+++-+', 'cap': 3})
        self.assertEqual(r.status_code, 200)
        self.assertEqual(r.json()['size'], 1)
        self.assertEqual(r.json()['witness']['rels']['sb'], ['111'])

    def test_derive(self):
        r = self.client.post('/api/derive', json={
            'premises': ['huntington', 'def.weak_from_strict'], 'goal': 'mcphee.4',
        })
        self.assertEqual(r.status_code, 200)
        self.assertEqual(r.json()['kind'], 'countermodel')
        self.assertEqual(r.json()['size'], 2)

    def test_validation_errors(self):
        r = self.client.post('/api/min-model', json={'system': 'huntington', 'pattern': '+x'})
        self.assertEqual(r.status_code, 422)
        r = self.client.post('/api/min-model', json={'system': 'huntington', 'pattern': '++'})
        self.assertEqual(r.status_code, 422)
        r = self.client.post('/api/find-model', json={'system': 'mcphee2', 'pattern': '+++-+', 'size': 2})
        self.assertEqual(r.status_code, 422)
        r = self.client.post('/api/min-model', json={'system': 'huntington', 'hypotheses': ['hyp.nope']})
        self.assertEqual(r.status_code, 422)
        r = self.client.post('/api/needed', json={'premises': ['huntington'], 'goal': 'mcphee.4'})
        self.assertEqual(r.status_code, 400)
        self.assertFalse(r.json()['detail']['success'])


if __name__ == '__main__':
    unittest.main(verbosity=2)
