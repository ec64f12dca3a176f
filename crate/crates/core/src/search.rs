//! Bounded search for deductions.
//!
//! Best-first over formulas modulo α, ordered by steps taken plus a
//! structural distance to the goal. Rule instances are drawn from finite
//! pools: subformulas and subterms of the goal pair, the goal's binders and
//! the theory's constants.

use std::cmp::{min, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;

use crate::formula::Implication;
use crate::formula::{alpha_equal, alpha_key, fresh_var, match_formula, positions, subformula_at, Formula, FunSym, Term};
use crate::rewrite::{apply_step, CheckedDeduction, Mode, Params, RuleId, StepCertificate};
use crate::semantics::{falsifying_assignment, first_failure, theory_instances, Enumerator, FiniteStructure, SchemaBudget, Signature};
use crate::theories::{AxiomRef, Schema, Theory, EQ};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBounds {
    pub max_steps: usize,
    /// Largest intermediate formula allowed. `None` means `max(2m - 1, m + 4)` for the larger endpoint size `m`.
    pub max_formula_size: Option<usize>,
    /// Cap on axiom instances tried per position.
    pub schema_instance_budget: usize,
    /// Cap on formulas expanded.
    pub max_nodes: usize,
}

impl Default for SearchBounds {
    fn default() -> Self {
        SearchBounds { max_steps: 12, max_formula_size: None, schema_instance_budget: 64, max_nodes: 200_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NotFound {
    pub bounds: SearchBounds,
    pub expanded: usize,
    /// True when every formula within the bounds was expanded.
    pub exhausted: bool,
    /// True when a small model of the theory separates the endpoints, so no
    /// deduction exists at all.
    pub refuted: bool,
    /// True when the search was stopped from outside.
    pub interrupted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(CheckedDeduction),
    NotFound(NotFound),
}

struct Pools {
    formulas: Vec<Formula>,
    terms: Vec<Term>,
    exists: Vec<(String, Formula)>,
    bounded: Vec<(String, Term)>,
}

fn subformulas(f: &Formula, out: &mut Vec<Formula>) {
    if !out.iter().any(|g| alpha_equal(g, f)) {
        out.push(f.clone());
    }
    match f {
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            subformulas(a, out);
            subformulas(b, out);
        }
        Formula::Exists(_, b) | Formula::Forall(_, b) | Formula::ForallIn(_, _, b) => subformulas(b, out),
        _ => {}
    }
}

impl Pools {
    fn new(theory: &Theory, from: &Formula, to: &Formula) -> Self {
        let mut formulas = Vec::new();
        subformulas(to, &mut formulas);
        let mut terms = Vec::new();
        from.subterms_into(&mut terms);
        to.subterms_into(&mut terms);
        for (name, k) in &theory.vocab.functions {
            if *k == 0 {
                terms.push(Term::App(FunSym::named(name.clone()), vec![]));
            }
        }
        let mut seen = BTreeSet::new();
        terms.retain(|t| seen.insert(t.clone()));
        let mut exists = Vec::new();
        let mut bounded = Vec::new();
        for f in &formulas {
            match f {
                Formula::Exists(v, b) => exists.push((v.clone(), (**b).clone())),
                Formula::ForallIn(v, s, _) if !bounded.contains(&(v.clone(), s.clone())) => bounded.push((v.clone(), s.clone())),
                _ => {}
            }
        }
        Pools { formulas, terms, exists, bounded }
    }
}

fn params() -> Params {
    Params::default()
}

fn with_phi(f: &Formula) -> Params {
    Params { phi: Some(f.clone()), ..params() }
}

fn replace_term_f(f: &Formula, a: &Term, x: &Term) -> Formula {
    let rt = |t: &Term| replace_term(t, a, x);
    let avoid = a.free_vars();
    match f {
        Formula::Top | Formula::Bottom => f.clone(),
        Formula::Atom(r, args) => Formula::Atom(r.clone(), args.iter().map(rt).collect()),
        Formula::And(p, q) => Formula::and(replace_term_f(p, a, x), replace_term_f(q, a, x)),
        Formula::Or(p, q) => Formula::or(replace_term_f(p, a, x), replace_term_f(q, a, x)),
        Formula::Implies(p, q) => Formula::implies(replace_term_f(p, a, x), replace_term_f(q, a, x)),
        Formula::Exists(v, b) if !avoid.contains(v) => Formula::exists(v.clone(), replace_term_f(b, a, x)),
        Formula::Forall(v, b) if !avoid.contains(v) => Formula::forall(v.clone(), replace_term_f(b, a, x)),
        Formula::ForallIn(v, s, b) if !avoid.contains(v) => Formula::forall_in(v.clone(), rt(s), replace_term_f(b, a, x)),
        Formula::ForallIn(v, s, b) => Formula::forall_in(v.clone(), rt(s), (**b).clone()),
        _ => f.clone(),
    }
}

fn replace_term(t: &Term, a: &Term, x: &Term) -> Term {
    if t == a {
        return x.clone();
    }
    match t {
        Term::Var(_) => t.clone(),
        Term::App(f, args) => Term::App(f.clone(), args.iter().map(|s| replace_term(s, a, x)).collect()),
    }
}

/// Candidate instances whose left side is `p`.
fn local_candidates(p: &Formula, theory: &Theory, pools: &Pools, budget: usize) -> Vec<(RuleId, Params)> {
    use Formula as F;
    use RuleId::*;
    let mut out = Vec::new();
    for (name, ax) in &theory.axioms {
        let vars = ax.free_vars();
        let mut b = BTreeMap::new();
        if !match_formula(&ax.antecedent, p, &vars, &mut b) {
            continue;
        }
        let open: Vec<String> = ax.consequent.free_vars().into_iter().filter(|v| !b.contains_key(v)).collect();
        let mut count = 0;
        let mut digits = vec![0usize; open.len()];
        'inst: loop {
            if count >= budget || (!open.is_empty() && pools.terms.is_empty()) {
                break;
            }
            let mut bind = b.clone();
            for (v, d) in open.iter().zip(&digits) {
                bind.insert(v.clone(), pools.terms[*d].clone());
            }
            bind.retain(|k, t| t != &Term::Var(k.clone()));
            out.push((R0, Params { axiom: Some(AxiomRef::named(name)), bindings: bind, ..params() }));
            count += 1;
            let mut i = 0;
            loop {
                if i == digits.len() {
                    break 'inst;
                }
                digits[i] += 1;
                if digits[i] < pools.terms.len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }
    if theory.has_schema(Schema::Congruence) {
        if let F::And(phi, eq) = p {
            if let F::Atom(r, args) = &**eq {
                if r == EQ && args.len() == 2 && args[0] != args[1] {
                    let mut avoid = p.all_vars();
                    let x = fresh_var(&avoid);
                    avoid.insert(x.clone());
                    let y = fresh_var(&avoid);
                    let formula = replace_term_f(phi, &args[0], &Term::var(x.clone()));
                    if formula.is_free(&x) {
                        let bindings: BTreeMap<String, Term> = [(x.clone(), args[0].clone()), (y.clone(), args[1].clone())].into();
                        let axiom = AxiomRef::Congruence { var: x, target: Term::var(y), formula };
                        out.push((R0, Params { axiom: Some(axiom), bindings, ..params() }));
                    }
                }
            }
        }
    }
    if *p != F::Top {
        out.push((R1, with_phi(p)));
    }
    if *p == F::Bottom {
        for g in &pools.formulas {
            out.push((R2, with_phi(g)));
        }
    }
    if let F::And(a, b) = p {
        out.push((R3, Params { phi: Some((**a).clone()), psi: Some((**b).clone()), ..params() }));
        out.push((R4, Params { phi: Some((**b).clone()), psi: Some((**a).clone()), ..params() }));
    }
    out.push((R5, with_phi(p)));
    for g in &pools.formulas {
        out.push((R6, Params { phi: Some(p.clone()), psi: Some(g.clone()), ..params() }));
        out.push((R7, Params { phi: Some(p.clone()), psi: Some(g.clone()), ..params() }));
    }
    if let F::Or(a, b) = p {
        if alpha_equal(a, b) {
            out.push((R8, with_phi(a)));
        }
    }
    if let F::And(c, rest) = p {
        if let F::Or(a, b) = &**rest {
            out.push((R9, Params { chi: Some((**c).clone()), phi: Some((**a).clone()), psi: Some((**b).clone()), ..params() }));
        }
        if let F::Exists(v, body) = &**rest {
            out.push((R12, Params { chi: Some((**c).clone()), phi: Some((**body).clone()), v: Some(v.clone()), ..params() }));
        }
    }
    for (v, body) in &pools.exists {
        let vars: BTreeSet<String> = [v.clone()].into();
        let mut b = BTreeMap::new();
        if match_formula(body, p, &vars, &mut b) {
            let t = b.get(v).cloned().unwrap_or_else(|| Term::var(v.clone()));
            out.push((R10, Params { phi: Some(body.clone()), v: Some(v.clone()), t: Some(t), ..params() }));
        }
    }
    if let F::Exists(v, body) = p {
        out.push((R11, Params { phi: Some((**body).clone()), v: Some(v.clone()), ..params() }));
    }
    if let F::ForallIn(v, s, body) = p {
        for t in &pools.terms {
            out.push((R13, Params { phi: Some((**body).clone()), v: Some(v.clone()), s: Some(s.clone()), t: Some(t.clone()), ..params() }));
        }
        if let F::Or(g, rest) = &**body {
            out.push((R14a, Params { phi: Some((**rest).clone()), v: Some(v.clone()), s: Some(s.clone()), ..params() }));
            out.push((
                R15,
                Params { chi: Some((**g).clone()), phi: Some((**rest).clone()), v: Some(v.clone()), s: Some(s.clone()), ..params() },
            ));
        }
    }
    for (v, s) in &pools.bounded {
        out.push((R14, Params { phi: Some(p.clone()), v: Some(v.clone()), s: Some(s.clone()), ..params() }));
    }
    out
}

/// Every successor of `f` within the bounds, in tie-break order.
fn successors(
    f: &Formula,
    theory: &Theory,
    mode: Mode,
    pools: &Pools,
    bounds: &SearchBounds,
    limit: usize,
) -> Vec<(StepCertificate, Formula)> {
    let paths = positions(f);
    let mut out: Vec<(StepCertificate, Formula)> = paths
        .par_iter()
        .flat_map_iter(|path| {
            let p = subformula_at(f, path).expect("position");
            local_candidates(p, theory, pools, bounds.schema_instance_budget)
                .into_iter()
                .filter(|(r, _)| mode.allows(*r))
                .filter_map(|(rule, params)| {
                    let c = StepCertificate { rule, path: path.clone(), params };
                    let g = apply_step(f, &c, mode, theory).ok()?;
                    (g.size() <= limit).then_some((c, g))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    out.sort_by(|(a, _), (b, _)| (a.rule, a.path.len(), &a.path, &a.params).cmp(&(b.rule, b.path.len(), &b.path, &b.params)));
    out
}

fn keys(f: &Formula) -> BTreeSet<String> {
    let mut subs = Vec::new();
    subformulas(f, &mut subs);
    subs.iter().map(alpha_key).collect()
}

/// A rough count of the steps separating `f` from `g`.
pub fn distance(f: &Formula, g: &Formula) -> usize {
    if alpha_equal(f, g) {
        return 0;
    }
    match (f, g) {
        (Formula::And(a, b), Formula::And(c, d)) | (Formula::Or(a, b), Formula::Or(c, d)) => {
            min(distance(a, c) + distance(b, d), 3 + distance(a, d) + distance(b, c))
        }
        (Formula::Exists(v, a), Formula::Exists(w, b)) if v == w => distance(a, b),
        (Formula::ForallIn(v, s, a), Formula::ForallIn(w, t, b)) if v == w && s == t => distance(a, b),
        _ => {
            let have = keys(f);
            1 + keys(g).difference(&have).count()
        }
    }
}

const PRUNE_LIMIT: u128 = 1 << 14;

/// Small models of the theory. Every formula on a deduction to the goal
/// entails it, so a formula one of these models separates from the goal is
/// dropped.
struct Pruner {
    models: Vec<FiniteStructure>,
    goal: Formula,
}

impl Pruner {
    fn new(theory: &Theory, from: &Formula, to: &Formula) -> Self {
        let sig = Signature::of_theory(theory, [from, to]);
        let instances = theory_instances(theory, &sig, &SchemaBudget::default());
        let mut models = Vec::new();
        for n in 1..=2 {
            let Ok(en) = Enumerator::new(&sig, n) else { break };
            if en.total > PRUNE_LIMIT {
                break;
            }
            let found: Vec<FiniteStructure> = (0..en.total as u64)
                .into_par_iter()
                .filter(|&i| en.is_canonical(i as u128))
                .map(|i| en.decode(i as u128))
                .filter(|m| matches!(first_failure(m, &instances), Ok(None)))
                .collect();
            models.extend(found);
        }
        Pruner { models, goal: to.clone() }
    }

    fn admits(&self, f: &Formula) -> bool {
        let imp = Implication::new(f.clone(), self.goal.clone());
        self.models.iter().all(|m| !matches!(falsifying_assignment(m, &imp), Ok(Some(_))))
    }
}

struct Node {
    formula: Formula,
    parent: Option<usize>,
    cert: Option<StepCertificate>,
    depth: usize,
}

fn trace(nodes: &[Node], mut i: usize) -> CheckedDeduction {
    let mut formulas = Vec::new();
    let mut certificates = Vec::new();
    loop {
        formulas.push(nodes[i].formula.clone());
        if let Some(c) = &nodes[i].cert {
            certificates.push(c.clone());
        }
        match nodes[i].parent {
            Some(p) => i = p,
            None => break,
        }
    }
    formulas.reverse();
    certificates.reverse();
    CheckedDeduction { formulas, certificates }
}

/// Searches for a deduction from `from` to `to` within `bounds`.
pub fn search(theory: &Theory, from: &Formula, to: &Formula, mode: Mode, bounds: &SearchBounds) -> SearchOutcome {
    search_until(theory, from, to, mode, bounds, &AtomicBool::new(false))
}

/// As [`search`], giving up with a partial result once `stop` is set.
pub fn search_until(theory: &Theory, from: &Formula, to: &Formula, mode: Mode, bounds: &SearchBounds, stop: &AtomicBool) -> SearchOutcome {
    let pools = Pools::new(theory, from, to);
    let m = from.size().max(to.size());
    let limit = bounds.max_formula_size.unwrap_or((2 * m - 1).max(m + 4));
    let pruner = Pruner::new(theory, from, to);
    if !pruner.admits(from) {
        return SearchOutcome::NotFound(NotFound { bounds: *bounds, expanded: 0, exhausted: true, refuted: true, interrupted: false });
    }
    let mut nodes = vec![Node { formula: from.clone(), parent: None, cert: None, depth: 0 }];
    if alpha_equal(from, to) {
        return SearchOutcome::Found(trace(&nodes, 0));
    }
    let mut seen: HashMap<String, usize> = HashMap::new();
    seen.insert(alpha_key(from), 0);
    let mut queue = BinaryHeap::new();
    queue.push(Reverse((2 * distance(from, to), 0usize)));
    let mut expanded = 0;
    while let Some(Reverse((_, i))) = queue.pop() {
        if expanded >= bounds.max_nodes {
            return SearchOutcome::NotFound(NotFound { bounds: *bounds, expanded, exhausted: false, refuted: false, interrupted: false });
        }
        if stop.load(Ordering::Relaxed) {
            return SearchOutcome::NotFound(NotFound { bounds: *bounds, expanded, exhausted: false, refuted: false, interrupted: true });
        }
        let depth = nodes[i].depth;
        if depth >= bounds.max_steps {
            continue;
        }
        expanded += 1;
        let f = nodes[i].formula.clone();
        let fresh: Vec<(StepCertificate, Formula, String)> = successors(&f, theory, mode, &pools, bounds, limit)
            .into_iter()
            .map(|(c, g)| {
                let k = alpha_key(&g);
                (c, g, k)
            })
            .filter(|(_, _, k)| !seen.get(k).is_some_and(|d| *d <= depth + 1))
            .collect();
        let keep: Vec<bool> = fresh.par_iter().map(|(_, g, _)| pruner.admits(g)).collect();
        for ((c, g, key), ok) in fresh.into_iter().zip(keep) {
            if seen.get(&key).is_some_and(|d| *d <= depth + 1) {
                continue;
            }
            seen.insert(key, depth + 1);
            if !ok {
                continue;
            }
            let done = alpha_equal(&g, to);
            let h = distance(&g, to);
            nodes.push(Node { formula: g, parent: Some(i), cert: Some(c), depth: depth + 1 });
            let j = nodes.len() - 1;
            if done {
                return SearchOutcome::Found(trace(&nodes, j));
            }
            queue.push(Reverse((depth + 1 + 2 * h, j)));
        }
    }
    SearchOutcome::NotFound(NotFound { bounds: *bounds, expanded, exhausted: true, refuted: false, interrupted: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Vocabulary;
    use crate::parser::parse_formula;
    use crate::rewrite::check_deduction;

    fn theory() -> Theory {
        Theory::empty("t", Vocabulary::default().with_relation("A", 0).with_relation("B", 0).with_relation("C", 0).with_relation("R", 0))
    }

    fn f(s: &str) -> Formula {
        parse_formula(s, &theory().vocab).unwrap()
    }

    fn found(t: &Theory, from: &str, to: &str, mode: Mode, steps: usize) -> CheckedDeduction {
        let bounds = SearchBounds { max_steps: steps, ..Default::default() };
        match search(t, &f(from), &f(to), mode, &bounds) {
            SearchOutcome::Found(d) => {
                let script = d.to_script(crate::parser::TheoryRef::Builtin("pure".into()));
                check_deduction(&script, t, mode).unwrap();
                d
            }
            SearchOutcome::NotFound(n) => panic!("not found: {n:?}"),
        }
    }

    #[test]
    fn stop_flag_gives_partial_result() {
        let stop = AtomicBool::new(true);
        match search_until(&theory(), &f("(and A B)"), &f("(and B A)"), Mode::RK, &SearchBounds::default(), &stop) {
            SearchOutcome::NotFound(n) => assert!(n.interrupted && !n.exhausted),
            SearchOutcome::Found(_) => panic!("search ignored the stop flag"),
        }
    }

    #[test]
    fn commutation_is_found() {
        let d = found(&theory(), "(and A B)", "(and B A)", Mode::RK, 4);
        assert!(d.steps() <= 4);
    }

    #[test]
    fn distributive_dual() {
        let d = found(&theory(), "(and (or C A) (or C B))", "(or C (and A B))", Mode::RK, 12);
        eprintln!("{} steps", d.steps());
        for c in &d.certificates {
            eprintln!("{c}");
        }
    }

    #[test]
    fn top_does_not_reach_an_atom() {
        let bounds = SearchBounds { max_steps: 10, max_nodes: 5_000, ..Default::default() };
        assert!(matches!(search(&theory(), &Formula::Top, &f("R"), Mode::RK, &bounds), SearchOutcome::NotFound(_)));
    }
}
