//! Finite structures: evaluation, model checking, countermodel search and
//! soundness audits.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::calculus::{Derivation, RuleName};
use crate::formula::{Formula, FunSym, Implication, Term, Vocabulary};
use crate::parser::{render_structure, render_symbol};
use crate::rewrite::{instantiate_rule, CheckedDeduction, RuleId};
use crate::theories::{AxiomRef, Schema, Theory, EQ};

pub type Assignment = BTreeMap<String, usize>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("variable `{0}` is unassigned")]
    Unassigned(String),
    #[error("no table for function symbol `{0}`")]
    MissingTable(String),
    #[error("table of `{0}` has no row for {1:?}")]
    PartialTable(String, Vec<usize>),
    #[error("{0} structures of size {1} are too many to enumerate")]
    TooLarge(u128, usize),
    #[error("{0}")]
    Theory(String),
}

/// A structure over the carrier `{0, …, size-1}`. Missing relation tables
/// are empty; projections and compositions are computed from their parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteStructure {
    pub size: usize,
    /// The relation read by bounded quantifiers.
    pub notin: String,
    pub relations: BTreeMap<String, BTreeSet<Vec<usize>>>,
    pub functions: BTreeMap<FunSym, BTreeMap<Vec<usize>, usize>>,
}

impl FiniteStructure {
    pub fn new(size: usize) -> Self {
        FiniteStructure { size, notin: "notin".into(), relations: BTreeMap::new(), functions: BTreeMap::new() }
    }

    pub fn holds(&self, rel: &str, args: &[usize]) -> bool {
        self.relations.get(rel).is_some_and(|t| t.contains(args))
    }

    pub fn apply(&self, f: &FunSym, args: &[usize]) -> Result<usize, SemanticsError> {
        if let Some(table) = self.functions.get(f) {
            return table.get(args).copied().ok_or_else(|| SemanticsError::PartialTable(render_symbol(f), args.to_vec()));
        }
        match f {
            FunSym::Proj { index, .. } if *index >= 1 && *index <= args.len() => Ok(args[index - 1]),
            FunSym::Compose(g, hs) => {
                let inner = hs.iter().map(|h| self.apply(h, args)).collect::<Result<Vec<_>, _>>()?;
                self.apply(g, &inner)
            }
            _ => Err(SemanticsError::MissingTable(render_symbol(f))),
        }
    }

    pub fn term(&self, a: &Assignment, t: &Term) -> Result<usize, SemanticsError> {
        match t {
            Term::Var(v) => a.get(v).copied().ok_or_else(|| SemanticsError::Unassigned(v.clone())),
            Term::App(f, args) => {
                let vals = args.iter().map(|x| self.term(a, x)).collect::<Result<Vec<_>, _>>()?;
                self.apply(f, &vals)
            }
        }
    }

    /// The structure with elements renamed by `perm`.
    pub fn permute(&self, perm: &[usize]) -> FiniteStructure {
        let map = |t: &Vec<usize>| t.iter().map(|&x| perm[x]).collect::<Vec<_>>();
        FiniteStructure {
            size: self.size,
            notin: self.notin.clone(),
            relations: self.relations.iter().map(|(r, ts)| (r.clone(), ts.iter().map(map).collect())).collect(),
            functions: self
                .functions
                .iter()
                .map(|(f, table)| (f.clone(), table.iter().map(|(k, v)| (map(k), perm[*v])).collect()))
                .collect(),
        }
    }
}

impl fmt::Display for FiniteStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_structure(self))
    }
}

/// Truth of `phi` in `m` under `a`; quantifiers range over the whole carrier.
pub fn evaluate(m: &FiniteStructure, a: &Assignment, phi: &Formula) -> Result<bool, SemanticsError> {
    if let Some(v) = phi.free_vars().into_iter().find(|v| !a.contains_key(v)) {
        return Err(SemanticsError::Unassigned(v));
    }
    eval(m, &mut a.clone(), phi)
}

fn eval(m: &FiniteStructure, a: &mut Assignment, phi: &Formula) -> Result<bool, SemanticsError> {
    Ok(match phi {
        Formula::Top => true,
        Formula::Bottom => false,
        Formula::Atom(r, args) => {
            let vals = args.iter().map(|t| m.term(a, t)).collect::<Result<Vec<_>, _>>()?;
            m.holds(r, &vals)
        }
        Formula::And(p, q) => eval(m, a, p)? && eval(m, a, q)?,
        Formula::Or(p, q) => eval(m, a, p)? || eval(m, a, q)?,
        Formula::Implies(p, q) => !eval(m, a, p)? || eval(m, a, q)?,
        Formula::Exists(v, b) => quantify(m, a, v, false, |m, a| eval(m, a, b))?,
        Formula::Forall(v, b) => quantify(m, a, v, true, |m, a| eval(m, a, b))?,
        Formula::ForallIn(v, t, b) => quantify(m, a, v, true, |m, a| {
            let (x, s) = (a[v.as_str()], m.term(a, t)?);
            Ok(m.holds(&m.notin, &[x, s]) || eval(m, a, b)?)
        })?,
    })
}

fn quantify(
    m: &FiniteStructure,
    a: &mut Assignment,
    v: &str,
    all: bool,
    mut body: impl FnMut(&FiniteStructure, &mut Assignment) -> Result<bool, SemanticsError>,
) -> Result<bool, SemanticsError> {
    let old = a.get(v).copied();
    let mut out = all;
    for e in 0..m.size {
        a.insert(v.to_string(), e);
        if body(m, a)? != all {
            out = !all;
            break;
        }
    }
    match old {
        Some(x) => a.insert(v.to_string(), x),
        None => a.remove(v),
    };
    Ok(out)
}

/// Calls `f` on every assignment of `vars` until it returns `Some`.
fn each_assignment<T>(
    vars: &[String],
    n: usize,
    mut f: impl FnMut(&mut Assignment) -> Result<Option<T>, SemanticsError>,
) -> Result<Option<T>, SemanticsError> {
    let mut digits = vec![0usize; vars.len()];
    loop {
        let mut a: Assignment = vars.iter().cloned().zip(digits.iter().copied()).collect();
        if let Some(x) = f(&mut a)? {
            return Ok(Some(x));
        }
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Ok(None);
            }
            digits[i] += 1;
            if digits[i] < n {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// An assignment under which the antecedent holds and the consequent fails.
pub fn falsifying_assignment(m: &FiniteStructure, imp: &Implication) -> Result<Option<Assignment>, SemanticsError> {
    let vars: Vec<String> = imp.free_vars().into_iter().collect();
    each_assignment(&vars, m.size, |a| {
        let hit = eval(m, a, &imp.antecedent)? && !eval(m, a, &imp.consequent)?;
        Ok(hit.then(|| a.clone()))
    })
}

pub fn satisfies_closure(m: &FiniteStructure, phi: &Formula) -> Result<bool, SemanticsError> {
    Ok(falsifying_assignment(m, &Implication::new(Formula::Top, phi.clone()))?.is_none())
}

// ---------------------------------------------------------------- signatures

/// The symbols a structure has to interpret, with their arities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub relations: BTreeMap<String, usize>,
    /// Symbols needing a table; projections and compositions are left out.
    pub functions: BTreeMap<FunSym, usize>,
    pub notin: String,
    pub duals: Vec<(String, String)>,
}

fn uses_bounded(phi: &Formula) -> bool {
    match phi {
        Formula::Top | Formula::Bottom | Formula::Atom(..) => false,
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => uses_bounded(a) || uses_bounded(b),
        Formula::Exists(_, b) | Formula::Forall(_, b) => uses_bounded(b),
        Formula::ForallIn(..) => true,
    }
}

fn table_symbols(f: &FunSym, vocab: &Vocabulary, out: &mut BTreeMap<FunSym, usize>) {
    match f {
        FunSym::Proj { .. } => {}
        FunSym::Compose(g, hs) => {
            table_symbols(g, vocab, out);
            hs.iter().for_each(|h| table_symbols(h, vocab, out));
        }
        _ => {
            if let Ok(n) = vocab.function_arity(f) {
                out.insert(f.clone(), n);
            }
        }
    }
}

impl Signature {
    /// The symbols occurring in `formulas`.
    pub fn collect<'a>(vocab: &Vocabulary, formulas: impl IntoIterator<Item = &'a Formula>) -> Self {
        let mut relations = BTreeMap::new();
        let mut syms = BTreeMap::new();
        for f in formulas {
            f.relations_into(&mut relations);
            f.functions_into(&mut syms);
            if uses_bounded(f) {
                relations.insert(vocab.notin.clone(), 2);
            }
        }
        let mut functions = BTreeMap::new();
        for f in syms.keys() {
            table_symbols(f, vocab, &mut functions);
        }
        let duals = vocab.duals.iter().filter(|(a, b)| relations.contains_key(a) && relations.contains_key(b)).cloned().collect();
        Signature { relations, functions, notin: vocab.notin.clone(), duals }
    }

    /// The symbols of a theory's concrete axioms together with `extra`.
    pub fn of_theory<'a>(t: &'a Theory, extra: impl IntoIterator<Item = &'a Formula>) -> Self {
        let mut fs: Vec<&Formula> = t.axioms.iter().flat_map(|(_, a)| [&a.antecedent, &a.consequent]).collect();
        fs.extend(extra);
        Signature::collect(&t.vocab, fs)
    }
}

// ---------------------------------------------------------------- enumeration

#[derive(Clone, Debug)]
enum SlotOwner {
    Rel(String),
    Fun(FunSym),
}

/// Mixed-radix numbering of all structures of one size over a signature:
/// one bit per relation tuple, one base-n digit per function table row.
#[derive(Clone, Debug)]
pub struct Enumerator {
    size: usize,
    notin: String,
    /// (owner, argument tuple, radix)
    slots: Vec<(usize, Vec<usize>, usize)>,
    owners: Vec<(SlotOwner, usize)>,
    offsets: Vec<usize>,
    weights: Vec<u128>,
    pub total: u128,
}

const ENUM_LIMIT: u128 = 1 << 31;

fn tuple_index(t: &[usize], n: usize) -> usize {
    t.iter().rev().fold(0, |acc, &x| acc * n + x)
}

fn tuples(k: usize, n: usize) -> Vec<Vec<usize>> {
    (0..n.pow(k as u32))
        .map(|mut i| {
            (0..k)
                .map(|_| {
                    let d = i % n;
                    i /= n;
                    d
                })
                .collect()
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

impl Enumerator {
    pub fn new(sig: &Signature, size: usize) -> Result<Self, SemanticsError> {
        let mut owners = Vec::new();
        for (r, k) in &sig.relations {
            owners.push((SlotOwner::Rel(r.clone()), *k));
        }
        for (f, k) in &sig.functions {
            owners.push((SlotOwner::Fun(f.clone()), *k));
        }
        let mut slots = Vec::new();
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        let mut total: u128 = 1;
        for (i, (o, k)) in owners.iter().enumerate() {
            offsets.push(slots.len());
            let radix = match o {
                SlotOwner::Rel(_) => 2,
                SlotOwner::Fun(_) => size,
            };
            for t in tuples(*k, size) {
                weights.push(total);
                total = total.saturating_mul(radix as u128);
                slots.push((i, t, radix));
            }
        }
        Ok(Enumerator { size, notin: sig.notin.clone(), slots, owners, offsets, weights, total })
    }

    fn check_limit(&self) -> Result<(), SemanticsError> {
        if self.total > ENUM_LIMIT {
            return Err(SemanticsError::TooLarge(self.total, self.size));
        }
        Ok(())
    }

    fn digits(&self, mut idx: u128) -> Vec<usize> {
        self.slots
            .iter()
            .map(|(_, _, radix)| {
                let d = (idx % *radix as u128) as usize;
                idx /= *radix as u128;
                d
            })
            .collect()
    }

    pub fn decode(&self, idx: u128) -> FiniteStructure {
        let mut m = FiniteStructure::new(self.size);
        m.notin = self.notin.clone();
        for (o, _) in &self.owners {
            match o {
                SlotOwner::Rel(r) => {
                    m.relations.insert(r.clone(), BTreeSet::new());
                }
                SlotOwner::Fun(f) => {
                    m.functions.insert(f.clone(), BTreeMap::new());
                }
            }
        }
        for ((owner, t, _), d) in self.slots.iter().zip(self.digits(idx)) {
            match &self.owners[*owner].0 {
                SlotOwner::Rel(r) => {
                    if d == 1 {
                        m.relations.get_mut(r).unwrap().insert(t.clone());
                    }
                }
                SlotOwner::Fun(f) => {
                    m.functions.get_mut(f).unwrap().insert(t.clone(), d);
                }
            }
        }
        m
    }

    /// True when no renaming of the carrier gives a smaller index.
    pub fn is_canonical(&self, idx: u128) -> bool {
        if self.size < 2 {
            return true;
        }
        let digits = self.digits(idx);
        for perm in permutations(self.size) {
            let mut other: u128 = 0;
            for ((owner, t, _), d) in self.slots.iter().zip(&digits) {
                let pt: Vec<usize> = t.iter().map(|&x| perm[x]).collect();
                let slot = self.offsets[*owner] + tuple_index(&pt, self.size);
                let pd = match self.owners[*owner].0 {
                    SlotOwner::Rel(_) => *d,
                    SlotOwner::Fun(_) => perm[*d],
                };
                other += pd as u128 * self.weights[slot];
            }
            if other < idx {
                return false;
            }
        }
        true
    }

    /// A random structure; dual pairs are complements and `=` is the
    /// identity three times out of four.
    pub fn sample(&self, rng: &mut impl Rng, duals: &[(String, String)]) -> FiniteStructure {
        let mut m = self.decode(rng.gen_range(0..self.total.max(1)));
        if let Some(eq) = m.relations.get_mut(EQ) {
            if rng.gen_bool(0.75) {
                *eq = (0..self.size).map(|i| vec![i, i]).collect();
            }
        }
        for (a, b) in duals {
            if rng.gen_bool(0.75) {
                let pos = m.relations[a].clone();
                let comp = tuples(2, self.size).into_iter().filter(|t| !pos.contains(t)).collect();
                m.relations.insert(b.clone(), comp);
            }
        }
        m
    }
}

// ---------------------------------------------------------------- model checking

/// How many schema instances `is_model` checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SchemaBudget {
    pub formula_depth: usize,
    pub term_depth: usize,
    pub max_instances: usize,
}

impl Default for SchemaBudget {
    fn default() -> Self {
        SchemaBudget { formula_depth: 3, term_depth: 1, max_instances: 500 }
    }
}

impl fmt::Display for SchemaBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "schema instances: formula depth <= {}, term depth <= {}, at most {} per schema",
            self.formula_depth, self.term_depth, self.max_instances
        )
    }
}

fn term_pool(sig: &Signature, vars: &[&str], depth: usize) -> Vec<Term> {
    let mut pool: Vec<Term> = vars.iter().map(|v| Term::var(*v)).collect();
    for (f, k) in &sig.functions {
        if *k == 0 {
            pool.push(Term::App(f.clone(), vec![]));
        }
    }
    for _ in 0..depth {
        let base = pool.clone();
        for (f, k) in &sig.functions {
            if *k == 0 {
                continue;
            }
            for t in tuples(*k, base.len()) {
                let app = Term::App(f.clone(), t.iter().map(|&i| base[i].clone()).collect());
                if !pool.contains(&app) {
                    pool.push(app);
                }
            }
        }
    }
    pool
}

/// Parameter formulas in `x` (and a side parameter `z`) within the budget.
fn schema_formulas(sig: &Signature, budget: &SchemaBudget) -> Vec<Formula> {
    let pool = term_pool(sig, &["x", "z"], budget.term_depth);
    let mut atoms = Vec::new();
    for (r, k) in &sig.relations {
        for t in tuples(*k, pool.len()) {
            let args: Vec<Term> = t.iter().map(|&i| pool[i].clone()).collect();
            if args.iter().any(|a| a.contains_var("x")) {
                atoms.push(Formula::atom(r.clone(), args));
            }
            if atoms.len() >= budget.max_instances {
                return atoms;
            }
        }
    }
    let mut level = atoms.clone();
    let mut all = atoms;
    for _ in 1..budget.formula_depth {
        let mut next = Vec::new();
        'outer: for p in &level {
            for q in &all {
                for f in [Formula::and(p.clone(), q.clone()), Formula::or(p.clone(), q.clone())] {
                    if all.len() + next.len() >= budget.max_instances {
                        break 'outer;
                    }
                    next.push(f);
                }
            }
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    all
}

/// Every axiom instance `is_model` checks for `t` over `sig`.
pub fn theory_instances(t: &Theory, sig: &Signature, budget: &SchemaBudget) -> Vec<(String, Implication)> {
    let mut out: Vec<(String, Implication)> = t.axioms.iter().map(|(n, a)| (format!("axiom {n}"), a.clone())).collect();
    for (name, _) in &t.families {
        for sym in sig.functions.keys().filter(|f| f.is_structured()) {
            let r = AxiomRef::Named { name: name.clone(), symbol: Some(sym.clone()) };
            if let Ok(inst) = t.lookup(&r) {
                out.push((r.to_string(), inst));
            }
        }
    }
    if t.has_schema(Schema::Congruence) || t.has_schema(Schema::Induction) {
        for phi in schema_formulas(sig, budget) {
            let refs = [
                (Schema::Congruence, AxiomRef::Congruence { var: "x".into(), target: Term::var("y"), formula: phi.clone() }),
                (Schema::Induction, AxiomRef::Induction { var: "x".into(), bound: Term::var("y"), theta: phi.clone() }),
            ];
            for (s, r) in refs {
                if t.has_schema(s) {
                    if let Ok(inst) = t.lookup(&r) {
                        out.push((r.to_string(), inst));
                    }
                }
            }
        }
    }
    out
}

/// The first instance `m` falsifies, with the falsifying assignment.
pub fn first_failure(m: &FiniteStructure, instances: &[(String, Implication)]) -> Result<Option<(String, Assignment)>, SemanticsError> {
    for (label, imp) in instances {
        if let Some(a) = falsifying_assignment(m, imp)? {
            return Ok(Some((label.clone(), a)));
        }
    }
    Ok(None)
}

/// Checks the axioms of `t` and the schema instances within `budget`.
pub fn is_model(m: &FiniteStructure, t: &Theory, budget: &SchemaBudget) -> Result<bool, SemanticsError> {
    let mut sig = Signature::of_theory(t, []);
    for f in m.functions.keys() {
        if let Ok(k) = t.vocab.function_arity(f) {
            sig.functions.insert(f.clone(), k);
        }
    }
    Ok(first_failure(m, &theory_instances(t, &sig, budget))?.is_none())
}

/// A structure of size at most `max_size` modeling `t` (within the budget)
/// with an assignment falsifying `imp`.
pub fn find_countermodel(
    t: &Theory,
    imp: &Implication,
    max_size: usize,
    budget: &SchemaBudget,
) -> Result<Option<(FiniteStructure, Assignment)>, SemanticsError> {
    let sig = Signature::of_theory(t, [&imp.antecedent, &imp.consequent]);
    let instances = theory_instances(t, &sig, budget);
    for n in 1..=max_size {
        let en = Enumerator::new(&sig, n)?;
        en.check_limit()?;
        let found = (0..en.total as u64).into_par_iter().find_map_first(|i| {
            let i = i as u128;
            if !en.is_canonical(i) {
                return None;
            }
            let m = en.decode(i);
            match first_failure(&m, &instances) {
                Ok(None) => falsifying_assignment(&m, imp).ok().flatten().map(|a| (m, a)),
                _ => None,
            }
        });
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------- audits

/// Implications to verify on every structure satisfying `axioms`.
#[derive(Clone, Debug)]
pub struct AuditTarget {
    pub signature: Signature,
    pub axioms: Vec<(String, Implication)>,
    pub obligations: Vec<(String, Implication)>,
}

impl AuditTarget {
    pub fn new(vocab: &Vocabulary, axioms: Vec<(String, Implication)>, obligations: Vec<(String, Implication)>) -> Self {
        let signature = Signature::collect(vocab, axioms.iter().chain(&obligations).flat_map(|(_, i)| [&i.antecedent, &i.consequent]));
        AuditTarget { signature, axioms, obligations }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditOptions {
    /// Every structure up to this size is checked.
    pub max_size: usize,
    /// Sampled models of size `sample_size` to check.
    pub samples: usize,
    pub sample_size: usize,
    pub max_attempts: usize,
    pub seed: u64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { max_size: 2, samples: 1000, sample_size: 3, max_attempts: 200_000, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub label: String,
    pub structure: FiniteStructure,
    pub assignment: Assignment,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AuditReport {
    pub enumerated: u64,
    pub models: u64,
    pub sample_attempts: u64,
    pub sampled_models: u64,
    pub violations: Vec<Violation>,
    /// True when the audit was stopped before covering its options.
    pub interrupted: bool,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "(audit (enumerated {}) (models {}) (sampled {} {}) (violations {})",
            self.enumerated,
            self.models,
            self.sampled_models,
            self.sample_attempts,
            self.violations.len()
        );
        if self.interrupted {
            out.push_str(" (interrupted)");
        }
        for v in &self.violations {
            let a: Vec<String> = v.assignment.iter().map(|(k, x)| format!("({k} {x})")).collect();
            out.push_str(&format!(
                "\n  (violation {:?}\n    (assignment {})\n    {})",
                v.label,
                a.join(" "),
                render_structure(&v.structure).replace('\n', "\n    ")
            ));
        }
        out.push(')');
        out
    }
}

/// `None` when `m` is not a model; otherwise the violated obligations.
pub fn audit_structure(target: &AuditTarget, m: &FiniteStructure) -> Result<Option<Vec<Violation>>, SemanticsError> {
    if first_failure(m, &target.axioms)?.is_some() {
        return Ok(None);
    }
    let mut out = Vec::new();
    for (label, imp) in &target.obligations {
        if let Some(a) = falsifying_assignment(m, imp)? {
            out.push(Violation { label: label.clone(), structure: m.clone(), assignment: a });
        }
    }
    Ok(Some(out))
}

const MAX_REPORTED: usize = 20;

/// Checks every structure up to `max_size` and a sample of larger ones.
pub fn audit(target: &AuditTarget, opts: &AuditOptions) -> Result<AuditReport, SemanticsError> {
    audit_until(target, opts, &AtomicBool::new(false))
}

/// As [`audit`], returning a partial report once `stop` is set.
pub fn audit_until(target: &AuditTarget, opts: &AuditOptions, stop: &AtomicBool) -> Result<AuditReport, SemanticsError> {
    let mut report = AuditReport::default();
    let stopped = |r: &mut AuditReport| {
        r.interrupted = stop.load(Ordering::Relaxed);
        r.interrupted
    };
    for n in 1..=opts.max_size {
        let en = Enumerator::new(&target.signature, n)?;
        en.check_limit()?;
        let results: Vec<(u64, u64, Vec<Violation>)> = (0..en.total as u64)
            .into_par_iter()
            .filter(|&i| !stop.load(Ordering::Relaxed) && en.is_canonical(i as u128))
            .map(|i| match audit_structure(target, &en.decode(i as u128)) {
                Ok(Some(v)) => Ok((1, 1, v)),
                Ok(None) => Ok((1, 0, vec![])),
                Err(e) => Err(e),
            })
            .collect::<Result<_, _>>()?;
        for (e, m, v) in results {
            report.enumerated += e;
            report.models += m;
            report.violations.extend(v);
        }
        if stopped(&mut report) {
            report.violations.truncate(MAX_REPORTED);
            return Ok(report);
        }
    }
    if opts.samples > 0 && opts.sample_size > 0 {
        let en = Enumerator::new(&target.signature, opts.sample_size)?;
        const CHUNK: usize = 2048;
        let mut start = 0;
        while report.sampled_models < opts.samples as u64 && start < opts.max_attempts && !stopped(&mut report) {
            let end = (start + CHUNK).min(opts.max_attempts);
            let chunk: Vec<Option<Vec<Violation>>> = (start..end)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                    rng.set_stream(i as u64);
                    let m = en.sample(&mut rng, &target.signature.duals);
                    audit_structure(target, &m)
                })
                .collect::<Result<_, _>>()?;
            for r in chunk {
                report.sample_attempts += 1;
                if let Some(v) = r {
                    report.sampled_models += 1;
                    report.violations.extend(v);
                    if report.sampled_models >= opts.samples as u64 {
                        break;
                    }
                }
            }
            start = end;
        }
    }
    report.violations.truncate(MAX_REPORTED);
    Ok(report)
}

/// Every step `ξ(i-1) ⇒ ξ(i)` of `d` as an obligation, under the axiom
/// instances its rule 0 steps used.
pub fn deduction_target(d: &CheckedDeduction, theory: &Theory) -> Result<AuditTarget, SemanticsError> {
    let mut axioms = Vec::new();
    for (i, c) in d.certificates.iter().enumerate() {
        if c.rule == RuleId::R0 {
            let inst = instantiate_rule(c.rule, &c.params, theory).map_err(|e| SemanticsError::Theory(e.to_string()))?;
            axioms.push((format!("axiom at step {}", i + 1), inst));
        }
    }
    let obligations =
        d.formulas.windows(2).enumerate().map(|(i, w)| (format!("step {}", i + 1), Implication::new(w[0].clone(), w[1].clone()))).collect();
    Ok(AuditTarget::new(&theory.vocab, axioms, obligations))
}

/// Every sequent of `d` as an obligation, under the axiom instances used by its T-cuts.
pub fn derivation_target(d: &Derivation, theory: &Theory) -> Result<AuditTarget, SemanticsError> {
    fn walk(
        d: &Derivation,
        theory: &Theory,
        label: String,
        axioms: &mut Vec<(String, Implication)>,
        obligations: &mut Vec<(String, Implication)>,
    ) -> Result<(), SemanticsError> {
        if d.rule == RuleName::TCut {
            if let Some(r) = &d.params.axiom {
                let inst = theory.lookup(r).map_err(|e| SemanticsError::Theory(e.to_string()))?;
                axioms.push((format!("axiom at {label}"), inst.substitute(&d.params.bindings)));
            }
        }
        let s = &d.conclusion;
        obligations.push((format!("{} at {label}", d.rule.name()), Implication::new(Formula::conj(&s.ante), Formula::disj(&s.succ))));
        for (i, p) in d.premises.iter().enumerate() {
            walk(p, theory, format!("{label}.{i}"), axioms, obligations)?;
        }
        Ok(())
    }
    let (mut axioms, mut obligations) = (Vec::new(), Vec::new());
    walk(d, theory, "root".into(), &mut axioms, &mut obligations)?;
    Ok(AuditTarget::new(&theory.vocab, axioms, obligations))
}

// ---------------------------------------------------------------- positivity

/// A witness that adding `tuple` to relation `rel` of `structure` made `formula` false.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotonicityFailure {
    pub structure: FiniteStructure,
    pub assignment: Assignment,
    pub rel: String,
    pub tuple: Vec<usize>,
}

/// Checks, over every structure up to `max_size`, that enlarging a relation
/// table by one tuple never turns `phi` from true to false.
pub fn monotonicity_failure(sig: &Signature, phi: &Formula, max_size: usize) -> Result<Option<MonotonicityFailure>, SemanticsError> {
    let vars: Vec<String> = phi.free_vars().into_iter().collect();
    for n in 1..=max_size {
        let en = Enumerator::new(sig, n)?;
        en.check_limit()?;
        let found = (0..en.total as u64).into_par_iter().find_map_first(|i| {
            let m = en.decode(i as u128);
            for (r, k) in &sig.relations {
                for t in tuples(*k, n) {
                    if m.holds(r, &t) {
                        continue;
                    }
                    let mut bigger = m.clone();
                    bigger.relations.get_mut(r).unwrap().insert(t.clone());
                    let hit = each_assignment(&vars, n, |a| Ok((eval(&m, a, phi)? && !eval(&bigger, a, phi)?).then(|| a.clone())));
                    if let Ok(Some(a)) = hit {
                        return Some(MonotonicityFailure { structure: m, assignment: a, rel: r.clone(), tuple: t });
                    }
                }
            }
            None
        });
        if found.is_some() {
            return Ok(found);
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_formula, parse_structure};
    use crate::theories::{equality, pra};

    fn vocab() -> Vocabulary {
        Vocabulary::default().with_relation("R", 2).with_relation("P", 0).with_function("c", 0)
    }

    #[test]
    fn stopped_audit_is_partial() {
        let v = vocab();
        let imp = Implication::new(parse_formula("(R x y)", &v).unwrap(), parse_formula("(R y x)", &v).unwrap());
        let target = AuditTarget::new(&v, vec![], vec![("o".into(), imp)]);
        let r = audit_until(&target, &AuditOptions::default(), &AtomicBool::new(true)).unwrap();
        assert!(r.interrupted);
        assert_eq!(r.sampled_models, 0);
        assert!(!audit(&target, &AuditOptions { samples: 0, ..Default::default() }).unwrap().violations.is_empty());
    }

    #[test]
    fn vacuous_bounded_quantifier() {
        let v = vocab();
        let mut m = FiniteStructure::new(2);
        m.relations.insert("notin".into(), tuples(2, 2).into_iter().collect());
        let phi = parse_formula("(forallin v s bot)", &v).unwrap();
        let a: Assignment = [("s".to_string(), 0)].into();
        assert!(evaluate(&m, &a, &phi).unwrap());
        let e = parse_formula("(exists v top)", &v).unwrap();
        assert!(evaluate(&m, &Assignment::new(), &e).unwrap());
    }

    #[test]
    fn binary_relation_lookup() {
        let v = vocab();
        let m = parse_structure("(structure (size 2) (rel R (0 1)) (fun c (() 0)))", &v).unwrap();
        let phi = parse_formula("(R x y)", &v).unwrap();
        let a: Assignment = [("x".to_string(), 0), ("y".to_string(), 1)].into();
        let b: Assignment = [("x".to_string(), 1), ("y".to_string(), 0)].into();
        assert!(evaluate(&m, &a, &phi).unwrap());
        assert!(!evaluate(&m, &b, &phi).unwrap());
        assert_eq!(evaluate(&m, &Assignment::new(), &phi), Err(SemanticsError::Unassigned("x".into())));
    }

    #[test]
    fn equality_models() {
        let t = equality(Vocabulary::default());
        let mut m = FiniteStructure::new(2);
        m.relations.insert("=".into(), [vec![0, 0], vec![1, 1]].into());
        m.relations.insert("!=".into(), [vec![0, 1], vec![1, 0]].into());
        assert!(is_model(&m, &t, &SchemaBudget::default()).unwrap());
        m.relations.insert("=".into(), BTreeSet::new());
        assert!(!is_model(&m, &t, &SchemaBudget::default()).unwrap());
        let empty = Theory::empty("e", Vocabulary::default());
        assert!(is_model(&m, &empty, &SchemaBudget::default()).unwrap());
    }

    #[test]
    fn countermodels() {
        let v = vocab();
        let empty = Theory::empty("e", v.clone());
        let p = parse_formula("P", &v).unwrap();
        let (m, _) = find_countermodel(&empty, &Implication::new(Formula::Top, p.clone()), 3, &SchemaBudget::default()).unwrap().unwrap();
        assert_eq!(m.size, 1);
        assert!(m.relations["P"].is_empty());
        assert!(find_countermodel(&empty, &Implication::new(p.clone(), p), 3, &SchemaBudget::default()).unwrap().is_none());
        let t = equality(Vocabulary::default());
        let refl = parse_formula("(= x x)", &t.vocab).unwrap();
        assert!(find_countermodel(&t, &Implication::new(Formula::Top, refl), 3, &SchemaBudget::default()).unwrap().is_none());
    }

    #[test]
    fn canonical_representatives_cover_iso_classes() {
        let v = Vocabulary::default().with_relation("Q", 1);
        let sig = Signature::collect(&v, [&parse_formula("(Q x)", &v).unwrap()]);
        let en = Enumerator::new(&sig, 2).unwrap();
        let count = (0..en.total).filter(|&i| en.is_canonical(i)).count();
        assert_eq!(count, 3);
    }

    #[test]
    fn pra_has_no_small_model_of_its_successor_axioms() {
        let t = pra();
        let mut m = FiniteStructure::new(2);
        m.relations.insert("=".into(), [vec![0, 0], vec![1, 1]].into());
        m.relations.insert("<".into(), [vec![0, 1], vec![1, 1]].into());
        m.functions.insert(FunSym::named("0"), [(vec![], 0)].into());
        m.functions.insert(FunSym::named("S"), [(vec![0], 1), (vec![1], 1)].into());
        m.functions.insert(FunSym::named("Z"), [(vec![0], 0), (vec![1], 0)].into());
        assert!(!is_model(&m, &t, &SchemaBudget::default()).unwrap());
    }

    #[test]
    fn positive_formula_is_monotone() {
        let v = vocab();
        let phi = parse_formula("(or (forallin v x (R v c)) (exists y (and (R y y) P)))", &v).unwrap();
        let sig = Signature::collect(&v, [&phi]);
        assert!(monotonicity_failure(&sig, &phi, 2).unwrap().is_none());
        let neg = parse_formula("(=> (R x x) P)", &v).unwrap();
        let sig = Signature::collect(&v, [&neg]);
        assert!(monotonicity_failure(&sig, &neg, 2).unwrap().is_some());
    }

    #[test]
    fn checked_chain_audits_clean_and_corruption_is_caught() {
        use crate::parser::parse_deduction;
        use crate::rewrite::check_deduction;
        let text = "(deduction (theory (vocab (rel A 0) (rel B 0))) (from (and A B)) (to (and B A))
            (step 5 (params (phi (and A B))))
            (step 4 (at l) (params (phi B) (psi A)))
            (step 3 (at r) (params (phi A) (psi B))))";
        let (s, t) = parse_deduction(text, None).unwrap();
        let mut d = check_deduction(&s, &t, crate::rewrite::Mode::RM).unwrap();
        let opts = AuditOptions { max_size: 3, samples: 0, ..AuditOptions::default() };
        assert!(audit(&deduction_target(&d, &t).unwrap(), &opts).unwrap().is_clean());
        // rule 5 applied to a disjunction
        d.formulas[0] = parse_formula("(or A B)", &t.vocab).unwrap();
        let report = audit(&deduction_target(&d, &t).unwrap(), &opts).unwrap();
        assert!(!report.violations.is_empty());
        assert!(report.violations.iter().all(|v| v.label == "step 1"));
    }
}
