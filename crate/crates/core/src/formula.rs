//! Terms, formulas, substitution, α-equivalence and subformula contexts.
//!
//! A [`Formula`] covers full first-order logic with a primitive bounded
//! universal quantifier [`Formula::ForallIn`]. The Σ fragment is the subset
//! with no implication and no unguarded universal quantifier; membership is
//! decided by [`check_sigma`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::theories;

/// Function symbol. Plain symbols are declared by name in the vocabulary;
/// the structured forms come from the primitive recursive symbol grammars
/// and are validated on sight.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FunSym {
    Named(String),
    /// Projection onto argument `index` (1-based) of `arity` arguments.
    Proj {
        arity: usize,
        index: usize,
    },
    /// Composition `C(g, h1, …, hm)`.
    Compose(Box<FunSym>, Vec<FunSym>),
    /// Arithmetic recursion `R(g, h)`.
    PrimRec(Box<FunSym>, Box<FunSym>),
    /// Set image `I(f)`.
    Image(Box<FunSym>),
    /// Set recursion `R(f)`.
    SetRec(Box<FunSym>),
    /// Separation `S(φ)`; the formula's parameters are `x0 … x{arity-1}`.
    Separation {
        arity: usize,
        formula: Box<Formula>,
    },
}

impl FunSym {
    pub fn named(name: impl Into<String>) -> Self {
        FunSym::Named(name.into())
    }

    pub fn is_structured(&self) -> bool {
        !matches!(self, FunSym::Named(_))
    }

    /// Every symbol occurring in this symbol, itself included, outermost first.
    pub fn components(&self, out: &mut Vec<FunSym>) {
        out.push(self.clone());
        match self {
            FunSym::Named(_) | FunSym::Proj { .. } | FunSym::Separation { .. } => {}
            FunSym::Compose(g, hs) => {
                g.components(out);
                for h in hs {
                    h.components(out);
                }
            }
            FunSym::PrimRec(g, h) => {
                g.components(out);
                h.components(out);
            }
            FunSym::Image(f) | FunSym::SetRec(f) => f.components(out),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    App(FunSym, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::App(FunSym::Named(name.into()), Vec::new())
    }

    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Self {
        Term::App(FunSym::Named(name.into()), args)
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(_, args) => args.iter().for_each(|a| a.free_vars_into(out)),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    pub fn contains_var(&self, v: &str) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::App(_, args) => args.iter().any(|a| a.contains_var(v)),
        }
    }

    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.substitute(map)).collect()),
        }
    }

    /// All subterms, outermost first, without duplicates.
    pub fn subterms_into(&self, out: &mut Vec<Term>) {
        if !out.contains(self) {
            out.push(self.clone());
        }
        if let Term::App(_, args) = self {
            for a in args {
                a.subterms_into(out);
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Top,
    Bottom,
    Atom(String, Vec<Term>),
    And(Arc<Formula>, Arc<Formula>),
    Or(Arc<Formula>, Arc<Formula>),
    Implies(Arc<Formula>, Arc<Formula>),
    Exists(String, Arc<Formula>),
    /// `∀v ∈ t φ`, standing for `∀v (v ∉ t ∨ φ)`.
    ForallIn(String, Term, Arc<Formula>),
    /// Unguarded universal quantifier; only produced by universal closure.
    Forall(String, Arc<Formula>),
}

impl Formula {
    pub fn atom(rel: impl Into<String>, args: Vec<Term>) -> Self {
        Formula::Atom(rel.into(), args)
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Arc::new(a), Arc::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Arc::new(a), Arc::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Arc::new(a), Arc::new(b))
    }

    pub fn exists(v: impl Into<String>, body: Formula) -> Self {
        Formula::Exists(v.into(), Arc::new(body))
    }

    pub fn forall_in(v: impl Into<String>, bound: Term, body: Formula) -> Self {
        Formula::ForallIn(v.into(), bound, Arc::new(body))
    }

    pub fn forall(v: impl Into<String>, body: Formula) -> Self {
        Formula::Forall(v.into(), Arc::new(body))
    }

    /// Left-associated conjunction; the empty conjunction is `⊤`.
    pub fn conj(items: &[Formula]) -> Formula {
        let mut it = items.iter();
        match it.next() {
            None => Formula::Top,
            Some(first) => it.fold(first.clone(), |acc, f| Formula::and(acc, f.clone())),
        }
    }

    /// Left-associated disjunction; the empty disjunction is `⊥`.
    pub fn disj(items: &[Formula]) -> Formula {
        let mut it = items.iter();
        match it.next() {
            None => Formula::Bottom,
            Some(first) => it.fold(first.clone(), |acc, f| Formula::or(acc, f.clone())),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_free(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_free(&self, v: &str) -> bool {
        occurs_free(self, v)
    }

    /// Every variable name occurring anywhere, free or bound.
    pub fn all_vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Top | Formula::Bottom => {}
            Formula::Atom(_, args) => args.iter().for_each(|a| a.free_vars_into(out)),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.all_vars_into(out);
                b.all_vars_into(out);
            }
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                out.insert(v.clone());
                body.all_vars_into(out);
            }
            Formula::ForallIn(v, t, body) => {
                out.insert(v.clone());
                t.free_vars_into(out);
                body.all_vars_into(out);
            }
        }
    }

    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.all_vars_into(&mut out);
        out
    }

    /// Number of nodes; a bounded quantifier counts its implicit guard and disjunction.
    pub fn size(&self) -> usize {
        match self {
            Formula::Top | Formula::Bottom | Formula::Atom(..) => 1,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => 1 + a.size() + b.size(),
            Formula::Exists(_, b) | Formula::Forall(_, b) => 1 + b.size(),
            Formula::ForallIn(_, _, b) => 3 + b.size(),
        }
    }

    /// Connective depth; atoms and constants have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Top | Formula::Bottom | Formula::Atom(..) => 0,
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => 1 + a.depth().max(b.depth()),
            Formula::Exists(_, b) | Formula::Forall(_, b) | Formula::ForallIn(_, _, b) => 1 + b.depth(),
        }
    }

    pub fn contains_implication(&self) -> bool {
        match self {
            Formula::Implies(..) => true,
            Formula::Top | Formula::Bottom | Formula::Atom(..) => false,
            Formula::And(a, b) | Formula::Or(a, b) => a.contains_implication() || b.contains_implication(),
            Formula::Exists(_, b) | Formula::Forall(_, b) | Formula::ForallIn(_, _, b) => b.contains_implication(),
        }
    }

    pub fn subterms_into(&self, out: &mut Vec<Term>) {
        match self {
            Formula::Top | Formula::Bottom => {}
            Formula::Atom(_, args) => args.iter().for_each(|a| a.subterms_into(out)),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.subterms_into(out);
                b.subterms_into(out);
            }
            Formula::Exists(_, b) | Formula::Forall(_, b) => b.subterms_into(out),
            Formula::ForallIn(_, t, b) => {
                t.subterms_into(out);
                b.subterms_into(out);
            }
        }
    }

    /// Relation symbols used, with arities.
    pub fn relations_into(&self, out: &mut BTreeMap<String, usize>) {
        match self {
            Formula::Top | Formula::Bottom => {}
            Formula::Atom(r, args) => {
                out.insert(r.clone(), args.len());
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.relations_into(out);
                b.relations_into(out);
            }
            Formula::Exists(_, b) | Formula::Forall(_, b) | Formula::ForallIn(_, _, b) => b.relations_into(out),
        }
    }

    pub fn functions_into(&self, out: &mut BTreeMap<FunSym, usize>) {
        fn term(t: &Term, out: &mut BTreeMap<FunSym, usize>) {
            if let Term::App(f, args) = t {
                out.insert(f.clone(), args.len());
                args.iter().for_each(|a| term(a, out));
            }
        }
        match self {
            Formula::Top | Formula::Bottom => {}
            Formula::Atom(_, args) => args.iter().for_each(|a| term(a, out)),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.functions_into(out);
                b.functions_into(out);
            }
            Formula::Exists(_, b) | Formula::Forall(_, b) => b.functions_into(out),
            Formula::ForallIn(_, t, b) => {
                term(t, out);
                b.functions_into(out);
            }
        }
    }
}

fn collect_free(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    let term = |t: &Term, bound: &Vec<String>, out: &mut BTreeSet<String>| {
        for v in t.free_vars() {
            if !bound.contains(&v) {
                out.insert(v);
            }
        }
    };
    match f {
        Formula::Top | Formula::Bottom => {}
        Formula::Atom(_, args) => args.iter().for_each(|a| term(a, bound, out)),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
        Formula::Exists(v, body) | Formula::Forall(v, body) => {
            bound.push(v.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        Formula::ForallIn(v, t, body) => {
            term(t, bound, out);
            bound.push(v.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
    }
}

fn occurs_free(f: &Formula, v: &str) -> bool {
    match f {
        Formula::Top | Formula::Bottom => false,
        Formula::Atom(_, args) => args.iter().any(|a| a.contains_var(v)),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => occurs_free(a, v) || occurs_free(b, v),
        Formula::Exists(w, body) | Formula::Forall(w, body) => w != v && occurs_free(body, v),
        Formula::ForallIn(w, t, body) => t.contains_var(v) || (w != v && occurs_free(body, v)),
    }
}

/// Smallest name `v0, v1, …` not in `avoid`.
pub fn fresh_var(avoid: &BTreeSet<String>) -> String {
    (0..).map(|i| format!("v{i}")).find(|n| !avoid.contains(n)).expect("unbounded name supply")
}

/// Capture-avoiding substitution of `t` for the free occurrences of `v`.
pub fn substitute(phi: &Formula, v: &str, t: &Term) -> Formula {
    let mut map = BTreeMap::new();
    map.insert(v.to_string(), t.clone());
    substitute_many(phi, &map)
}

/// Simultaneous capture-avoiding substitution.
pub fn substitute_many(phi: &Formula, map: &BTreeMap<String, Term>) -> Formula {
    if map.is_empty() {
        return phi.clone();
    }
    let mut avoid = phi.all_vars();
    for (k, t) in map {
        avoid.insert(k.clone());
        t.free_vars_into(&mut avoid);
    }
    subst_rec(phi, map, &mut avoid)
}

fn subst_rec(phi: &Formula, map: &BTreeMap<String, Term>, avoid: &mut BTreeSet<String>) -> Formula {
    match phi {
        Formula::Top | Formula::Bottom => phi.clone(),
        Formula::Atom(r, args) => Formula::Atom(r.clone(), args.iter().map(|a| a.substitute(map)).collect()),
        Formula::And(a, b) => Formula::and(subst_rec(a, map, avoid), subst_rec(b, map, avoid)),
        Formula::Or(a, b) => Formula::or(subst_rec(a, map, avoid), subst_rec(b, map, avoid)),
        Formula::Implies(a, b) => Formula::implies(subst_rec(a, map, avoid), subst_rec(b, map, avoid)),
        Formula::Exists(v, body) => {
            let (v2, body2) = subst_binder(v, body, map, avoid, false);
            Formula::Exists(v2, Arc::new(body2))
        }
        Formula::Forall(v, body) => {
            let (v2, body2) = subst_binder(v, body, map, avoid, false);
            Formula::Forall(v2, Arc::new(body2))
        }
        Formula::ForallIn(v, t, body) => {
            let t2 = t.substitute(map);
            // the bound term must stay free of the binder
            let (v2, body2) = subst_binder(v, body, map, avoid, t2.contains_var(v));
            Formula::ForallIn(v2, t2, Arc::new(body2))
        }
    }
}

fn subst_binder(v: &str, body: &Formula, map: &BTreeMap<String, Term>, avoid: &mut BTreeSet<String>, rename: bool) -> (String, Formula) {
    let mut inner: BTreeMap<String, Term> =
        map.iter().filter(|(k, _)| k.as_str() != v && body.is_free(k)).map(|(k, t)| (k.clone(), t.clone())).collect();
    if inner.is_empty() && !rename {
        return (v.to_string(), body.clone());
    }
    if rename || inner.values().any(|t| t.contains_var(v)) {
        let fresh = fresh_var(avoid);
        avoid.insert(fresh.clone());
        inner.insert(v.to_string(), Term::Var(fresh.clone()));
        (fresh, subst_rec(body, &inner, avoid))
    } else {
        (v.to_string(), subst_rec(body, &inner, avoid))
    }
}

/// True when substituting `t` for `v` in `phi` needs no renaming.
pub fn is_free_for(t: &Term, v: &str, phi: &Formula) -> bool {
    let tv = t.free_vars();
    free_for_rec(phi, v, &tv, false)
}

fn free_for_rec(phi: &Formula, v: &str, tv: &BTreeSet<String>, under: bool) -> bool {
    match phi {
        Formula::Top | Formula::Bottom => true,
        Formula::Atom(_, args) => !under || !args.iter().any(|a| a.contains_var(v)),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => free_for_rec(a, v, tv, under) && free_for_rec(b, v, tv, under),
        Formula::Exists(w, body) | Formula::Forall(w, body) => w == v || free_for_rec(body, v, tv, under || tv.contains(w)),
        Formula::ForallIn(w, t, body) => {
            let in_bound = t.contains_var(v);
            (!in_bound || !(under || tv.contains(w))) && (w == v || free_for_rec(body, v, tv, under || tv.contains(w)))
        }
    }
}

/// Equality up to renaming of bound variables.
pub fn alpha_equal(a: &Formula, b: &Formula) -> bool {
    alpha_rec(a, b, &mut Vec::new(), &mut Vec::new())
}

fn term_alpha(a: &Term, b: &Term, ea: &[String], eb: &[String]) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => {
            let ia = ea.iter().rposition(|v| v == x);
            let ib = eb.iter().rposition(|v| v == y);
            match (ia, ib) {
                (Some(i), Some(j)) => i == j,
                (None, None) => x == y,
                _ => false,
            }
        }
        (Term::App(f, xs), Term::App(g, ys)) => f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| term_alpha(x, y, ea, eb)),
        _ => false,
    }
}

fn alpha_rec(a: &Formula, b: &Formula, ea: &mut Vec<String>, eb: &mut Vec<String>) -> bool {
    match (a, b) {
        (Formula::Top, Formula::Top) | (Formula::Bottom, Formula::Bottom) => true,
        (Formula::Atom(r, xs), Formula::Atom(s, ys)) => {
            r == s && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| term_alpha(x, y, ea, eb))
        }
        (Formula::And(a1, a2), Formula::And(b1, b2))
        | (Formula::Or(a1, a2), Formula::Or(b1, b2))
        | (Formula::Implies(a1, a2), Formula::Implies(b1, b2)) => alpha_rec(a1, b1, ea, eb) && alpha_rec(a2, b2, ea, eb),
        (Formula::Exists(v, x), Formula::Exists(w, y)) | (Formula::Forall(v, x), Formula::Forall(w, y)) => {
            ea.push(v.clone());
            eb.push(w.clone());
            let r = alpha_rec(x, y, ea, eb);
            ea.pop();
            eb.pop();
            r
        }
        (Formula::ForallIn(v, s, x), Formula::ForallIn(w, t, y)) => {
            if !term_alpha(s, t, ea, eb) {
                return false;
            }
            ea.push(v.clone());
            eb.push(w.clone());
            let r = alpha_rec(x, y, ea, eb);
            ea.pop();
            eb.pop();
            r
        }
        _ => false,
    }
}

/// A key equal for two formulas exactly when they are α-equal.
pub fn alpha_key(f: &Formula) -> String {
    let mut out = String::new();
    key_rec(f, &mut Vec::new(), &mut out);
    out
}

fn key_term(t: &Term, env: &[String], out: &mut String) {
    match t {
        Term::Var(x) => match env.iter().rposition(|v| v == x) {
            Some(i) => {
                out.push('#');
                out.push_str(&(env.len() - i).to_string());
            }
            None => {
                out.push('$');
                out.push_str(x);
            }
        },
        Term::App(f, args) => {
            out.push('(');
            out.push_str(&crate::parser::render_symbol(f));
            for a in args {
                out.push(' ');
                key_term(a, env, out);
            }
            out.push(')');
        }
    }
}

fn key_rec(f: &Formula, env: &mut Vec<String>, out: &mut String) {
    match f {
        Formula::Top => out.push('T'),
        Formula::Bottom => out.push('F'),
        Formula::Atom(r, args) => {
            out.push('[');
            out.push_str(r);
            for a in args {
                out.push(' ');
                key_term(a, env, out);
            }
            out.push(']');
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            out.push(match f {
                Formula::And(..) => '&',
                Formula::Or(..) => '|',
                _ => '>',
            });
            out.push('{');
            key_rec(a, env, out);
            out.push(',');
            key_rec(b, env, out);
            out.push('}');
        }
        Formula::Exists(v, body) | Formula::Forall(v, body) => {
            out.push(if matches!(f, Formula::Exists(..)) { 'E' } else { 'A' });
            out.push('{');
            env.push(v.clone());
            key_rec(body, env, out);
            env.pop();
            out.push('}');
        }
        Formula::ForallIn(v, t, body) => {
            out.push_str("B{");
            key_term(t, env, out);
            out.push(';');
            env.push(v.clone());
            key_rec(body, env, out);
            env.pop();
            out.push('}');
        }
    }
}

/// Membership up to α-equivalence.
pub fn alpha_contains(list: &[Formula], f: &Formula) -> bool {
    list.iter().any(|g| alpha_equal(g, f))
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Grammar {
    /// Arithmetic symbols `P`, `C`, `R(g, h)`.
    Pra,
    /// Set symbols `P`, `C`, `I`, `R(f)`, `S(φ)`.
    Prs,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabError {
    #[error("unknown relation symbol `{0}`")]
    UnknownRelation(String),
    #[error("unknown function symbol `{0}`")]
    UnknownFunction(String),
    #[error("`{symbol}` expects {expected} arguments, found {found}")]
    Arity { symbol: String, expected: usize, found: usize },
    #[error("invalid structured symbol `{symbol}`: {reason}")]
    BadSymbol { symbol: String, reason: String },
    #[error("the guard relation `{0}` must be a declared binary relation")]
    BadGuard(String),
    #[error("name `{0}` declared twice")]
    Duplicate(String),
}

/// Relation and function symbols plus the distinguished guard relation `∉`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    pub relations: BTreeMap<String, usize>,
    pub functions: BTreeMap<String, usize>,
    /// Name of the distinguished binary relation rendered `∉`.
    pub notin: String,
    /// Positive counterpart of `notin` (`<` or `∈`) used for bounded `∃`.
    pub guard: Option<String>,
    /// Dual relation pairs used by material implication between Δ₀ formulas.
    pub duals: Vec<(String, String)>,
    pub grammar: Option<Grammar>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new("notin")
    }
}

impl Vocabulary {
    pub fn new(notin: &str) -> Self {
        let mut relations = BTreeMap::new();
        relations.insert(notin.to_string(), 2);
        Vocabulary { relations, functions: BTreeMap::new(), notin: notin.to_string(), guard: None, duals: Vec::new(), grammar: None }
    }

    pub fn with_relation(mut self, name: &str, arity: usize) -> Self {
        self.relations.insert(name.to_string(), arity);
        self
    }

    pub fn with_function(mut self, name: &str, arity: usize) -> Self {
        self.functions.insert(name.to_string(), arity);
        self
    }

    pub fn validate(&self) -> Result<(), VocabError> {
        if self.relations.get(&self.notin) != Some(&2) {
            return Err(VocabError::BadGuard(self.notin.clone()));
        }
        if let Some(g) = &self.guard {
            if self.relations.get(g) != Some(&2) {
                return Err(VocabError::BadGuard(g.clone()));
            }
        }
        for name in self.relations.keys() {
            if self.functions.contains_key(name) {
                return Err(VocabError::Duplicate(name.clone()));
            }
        }
        Ok(())
    }

    pub fn relation_arity(&self, name: &str) -> Result<usize, VocabError> {
        self.relations.get(name).copied().ok_or_else(|| VocabError::UnknownRelation(name.to_string()))
    }

    pub fn function_arity(&self, f: &FunSym) -> Result<usize, VocabError> {
        match f {
            FunSym::Named(n) => self.functions.get(n).copied().ok_or_else(|| VocabError::UnknownFunction(n.clone())),
            _ => theories::check_symbol(self, f),
        }
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.functions.get(name) == Some(&0)
    }

    pub fn dual_of(&self, rel: &str) -> Option<&str> {
        self.duals.iter().find_map(|(a, b)| {
            if a == rel {
                Some(b.as_str())
            } else if b == rel {
                Some(a.as_str())
            } else {
                None
            }
        })
    }

    pub fn check_term(&self, t: &Term) -> Result<(), VocabError> {
        match t {
            Term::Var(_) => Ok(()),
            Term::App(f, args) => {
                let expected = self.function_arity(f)?;
                if expected != args.len() {
                    return Err(VocabError::Arity { symbol: crate::parser::render_symbol(f), expected, found: args.len() });
                }
                args.iter().try_for_each(|a| self.check_term(a))
            }
        }
    }

    /// Arity check of every symbol occurrence.
    pub fn check_formula(&self, f: &Formula) -> Result<(), VocabError> {
        match f {
            Formula::Top | Formula::Bottom => Ok(()),
            Formula::Atom(r, args) => {
                let expected = self.relation_arity(r)?;
                if expected != args.len() {
                    return Err(VocabError::Arity { symbol: r.clone(), expected, found: args.len() });
                }
                args.iter().try_for_each(|a| self.check_term(a))
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                self.check_formula(a)?;
                self.check_formula(b)
            }
            Formula::Exists(_, b) | Formula::Forall(_, b) => self.check_formula(b),
            Formula::ForallIn(_, t, b) => {
                self.check_term(t)?;
                self.check_formula(b)
            }
        }
    }

    /// The guard literal `v ∉ t`.
    pub fn notin_atom(&self, v: Term, t: Term) -> Formula {
        Formula::Atom(self.notin.clone(), vec![v, t])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Selector {
    Left,
    Right,
    Body,
}

impl Selector {
    pub fn letter(self) -> &'static str {
        match self {
            Selector::Left => "l",
            Selector::Right => "r",
            Selector::Body => "b",
        }
    }
}

/// Position of a subformula. Guard literals of bounded quantifiers are not positions.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContextPath(pub Vec<Selector>);

impl ContextPath {
    pub fn root() -> Self {
        ContextPath(Vec::new())
    }

    pub fn child(&self, s: Selector) -> Self {
        let mut v = self.0.clone();
        v.push(s);
        ContextPath(v)
    }

    /// `prefix` followed by `self`.
    pub fn under(&self, prefix: &ContextPath) -> Self {
        let mut v = prefix.0.clone();
        v.extend_from_slice(&self.0);
        ContextPath(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for ContextPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<_> = self.0.iter().map(|s| s.letter()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("path {path} does not resolve: no {selector} position at {at}")]
pub struct PathError {
    pub path: ContextPath,
    pub selector: &'static str,
    pub at: ContextPath,
}

pub fn subformula_at<'a>(phi: &'a Formula, path: &ContextPath) -> Result<&'a Formula, PathError> {
    let mut cur = phi;
    for (i, s) in path.0.iter().enumerate() {
        cur = match (cur, s) {
            (Formula::And(a, _), Selector::Left) | (Formula::Or(a, _), Selector::Left) | (Formula::Implies(a, _), Selector::Left) => a,
            (Formula::And(_, b), Selector::Right) | (Formula::Or(_, b), Selector::Right) | (Formula::Implies(_, b), Selector::Right) => b,
            (Formula::Exists(_, b), Selector::Body)
            | (Formula::Forall(_, b), Selector::Body)
            | (Formula::ForallIn(_, _, b), Selector::Body) => b,
            _ => return Err(PathError { path: path.clone(), selector: s.letter(), at: ContextPath(path.0[..i].to_vec()) }),
        };
    }
    Ok(cur)
}

/// Literal plugging: variables of `chi` may be captured by binders along `path`.
pub fn replace_at(phi: &Formula, path: &ContextPath, chi: &Formula) -> Result<Formula, PathError> {
    replace_rec(phi, &path.0, chi).map_err(|depth| PathError {
        path: path.clone(),
        selector: path.0[depth].letter(),
        at: ContextPath(path.0[..depth].to_vec()),
    })
}

fn replace_rec(phi: &Formula, path: &[Selector], chi: &Formula) -> Result<Formula, usize> {
    let Some((s, rest)) = path.split_first() else {
        return Ok(chi.clone());
    };
    let deeper = |e: usize| e + 1;
    Ok(match (phi, s) {
        (Formula::And(a, b), Selector::Left) => Formula::And(Arc::new(replace_rec(a, rest, chi).map_err(deeper)?), b.clone()),
        (Formula::And(a, b), Selector::Right) => Formula::And(a.clone(), Arc::new(replace_rec(b, rest, chi).map_err(deeper)?)),
        (Formula::Or(a, b), Selector::Left) => Formula::Or(Arc::new(replace_rec(a, rest, chi).map_err(deeper)?), b.clone()),
        (Formula::Or(a, b), Selector::Right) => Formula::Or(a.clone(), Arc::new(replace_rec(b, rest, chi).map_err(deeper)?)),
        (Formula::Implies(a, b), Selector::Left) => Formula::Implies(Arc::new(replace_rec(a, rest, chi).map_err(deeper)?), b.clone()),
        (Formula::Implies(a, b), Selector::Right) => Formula::Implies(a.clone(), Arc::new(replace_rec(b, rest, chi).map_err(deeper)?)),
        (Formula::Exists(v, b), Selector::Body) => Formula::Exists(v.clone(), Arc::new(replace_rec(b, rest, chi).map_err(deeper)?)),
        (Formula::Forall(v, b), Selector::Body) => Formula::Forall(v.clone(), Arc::new(replace_rec(b, rest, chi).map_err(deeper)?)),
        (Formula::ForallIn(v, t, b), Selector::Body) => {
            Formula::ForallIn(v.clone(), t.clone(), Arc::new(replace_rec(b, rest, chi).map_err(deeper)?))
        }
        _ => return Err(0),
    })
}

/// All positions of `phi`, outside-in (pre-order, left before right).
pub fn positions(phi: &Formula) -> Vec<ContextPath> {
    let mut out = Vec::new();
    positions_rec(phi, &mut Vec::new(), &mut out);
    out
}

fn positions_rec(phi: &Formula, cur: &mut Vec<Selector>, out: &mut Vec<ContextPath>) {
    out.push(ContextPath(cur.clone()));
    match phi {
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            cur.push(Selector::Left);
            positions_rec(a, cur, out);
            cur.pop();
            cur.push(Selector::Right);
            positions_rec(b, cur, out);
            cur.pop();
        }
        Formula::Exists(_, b) | Formula::Forall(_, b) | Formula::ForallIn(_, _, b) => {
            cur.push(Selector::Body);
            positions_rec(b, cur, out);
            cur.pop();
        }
        _ => {}
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SigmaError {
    #[error("implication at {0} is outside the Σ fragment")]
    Implication(ContextPath),
    #[error("unguarded universal quantifier at {0} is outside the Σ fragment")]
    UnboundedForall(ContextPath),
    #[error("bounded quantifier variable `{var}` occurs in its own bound at {path}")]
    VarInBound { path: ContextPath, var: String },
    #[error("at {path}: {source}")]
    Vocab { path: ContextPath, source: VocabError },
}

/// Accepts exactly the Σ formulas over `vocab`.
pub fn check_sigma(phi: &Formula, vocab: &Vocabulary) -> Result<(), SigmaError> {
    sigma_rec(phi, vocab, &mut Vec::new())
}

fn sigma_rec(phi: &Formula, vocab: &Vocabulary, path: &mut Vec<Selector>) -> Result<(), SigmaError> {
    let here = |p: &Vec<Selector>| ContextPath(p.clone());
    match phi {
        Formula::Top | Formula::Bottom => Ok(()),
        Formula::Atom(..) => vocab.check_formula(phi).map_err(|source| SigmaError::Vocab { path: here(path), source }),
        Formula::Implies(..) => Err(SigmaError::Implication(here(path))),
        Formula::Forall(..) => Err(SigmaError::UnboundedForall(here(path))),
        Formula::And(a, b) | Formula::Or(a, b) => {
            path.push(Selector::Left);
            sigma_rec(a, vocab, path)?;
            path.pop();
            path.push(Selector::Right);
            sigma_rec(b, vocab, path)?;
            path.pop();
            Ok(())
        }
        Formula::Exists(_, b) => {
            path.push(Selector::Body);
            sigma_rec(b, vocab, path)?;
            path.pop();
            Ok(())
        }
        Formula::ForallIn(v, t, b) => {
            if t.contains_var(v) {
                return Err(SigmaError::VarInBound { path: here(path), var: v.clone() });
            }
            vocab.check_term(t).map_err(|source| SigmaError::Vocab { path: here(path), source })?;
            path.push(Selector::Body);
            sigma_rec(b, vocab, path)?;
            path.pop();
            Ok(())
        }
    }
}

/// `∀v1 ⋯ ∀vn φ` over the free variables in lexicographic order.
pub fn universal_closure(phi: &Formula) -> Formula {
    phi.free_vars().into_iter().rev().fold(phi.clone(), |acc, v| Formula::forall(v, acc))
}

/// Expands bounded quantifiers to `∀v (v ∉ t ∨ φ)`.
pub fn desugar(phi: &Formula, vocab: &Vocabulary) -> Formula {
    match phi {
        Formula::Top | Formula::Bottom | Formula::Atom(..) => phi.clone(),
        Formula::And(a, b) => Formula::and(desugar(a, vocab), desugar(b, vocab)),
        Formula::Or(a, b) => Formula::or(desugar(a, vocab), desugar(b, vocab)),
        Formula::Implies(a, b) => Formula::implies(desugar(a, vocab), desugar(b, vocab)),
        Formula::Exists(v, b) => Formula::exists(v.clone(), desugar(b, vocab)),
        Formula::Forall(v, b) => Formula::forall(v.clone(), desugar(b, vocab)),
        Formula::ForallIn(v, t, b) => {
            Formula::forall(v.clone(), Formula::or(vocab.notin_atom(Term::Var(v.clone()), t.clone()), desugar(b, vocab)))
        }
    }
}

/// Folds guard-shaped universal quantifiers back into bounded ones.
pub fn resugar(phi: &Formula, vocab: &Vocabulary) -> Formula {
    match phi {
        Formula::Top | Formula::Bottom | Formula::Atom(..) => phi.clone(),
        Formula::And(a, b) => Formula::and(resugar(a, vocab), resugar(b, vocab)),
        Formula::Or(a, b) => Formula::or(resugar(a, vocab), resugar(b, vocab)),
        Formula::Implies(a, b) => Formula::implies(resugar(a, vocab), resugar(b, vocab)),
        Formula::Exists(v, b) => Formula::exists(v.clone(), resugar(b, vocab)),
        Formula::ForallIn(v, t, b) => Formula::forall_in(v.clone(), t.clone(), resugar(b, vocab)),
        Formula::Forall(v, b) => {
            if let Formula::Or(g, rest) = &**b {
                if let Formula::Atom(r, args) = &**g {
                    if r == &vocab.notin && args.len() == 2 && args[0] == Term::Var(v.clone()) && !args[1].contains_var(v) {
                        return Formula::forall_in(v.clone(), args[1].clone(), resugar(rest, vocab));
                    }
                }
            }
            Formula::forall(v.clone(), resugar(b, vocab))
        }
    }
}

/// A Σ implication `antecedent ⇒ consequent`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Implication {
    pub antecedent: Formula,
    pub consequent: Formula,
}

impl Implication {
    pub fn new(antecedent: Formula, consequent: Formula) -> Self {
        Implication { antecedent, consequent }
    }

    pub fn check(&self, vocab: &Vocabulary) -> Result<(), SigmaError> {
        check_sigma(&self.antecedent, vocab)?;
        check_sigma(&self.consequent, vocab)
    }

    pub fn as_formula(&self) -> Formula {
        Formula::implies(self.antecedent.clone(), self.consequent.clone())
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut fv = self.antecedent.free_vars();
        fv.extend(self.consequent.free_vars());
        fv
    }

    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Implication {
        Implication { antecedent: substitute_many(&self.antecedent, map), consequent: substitute_many(&self.consequent, map) }
    }

    pub fn closure(&self) -> Formula {
        universal_closure(&self.as_formula())
    }
}

/// One-way first-order matching of `pattern` against `target`, binding the
/// variables in `vars`. Matched terms may not mention variables bound in
/// `target` at the match site.
pub fn match_formula(pattern: &Formula, target: &Formula, vars: &BTreeSet<String>, bindings: &mut BTreeMap<String, Term>) -> bool {
    match_rec(pattern, target, vars, bindings, &mut Vec::new(), &mut Vec::new())
}

fn match_term(p: &Term, t: &Term, vars: &BTreeSet<String>, bindings: &mut BTreeMap<String, Term>, ep: &[String], et: &[String]) -> bool {
    match p {
        Term::Var(x) if vars.contains(x) && !ep.contains(x) => {
            if t.free_vars().iter().any(|v| et.contains(v)) {
                return false;
            }
            match bindings.get(x) {
                Some(b) => b == t,
                None => {
                    bindings.insert(x.clone(), t.clone());
                    true
                }
            }
        }
        Term::Var(x) => match t {
            Term::Var(y) => {
                let ip = ep.iter().rposition(|v| v == x);
                let it = et.iter().rposition(|v| v == y);
                match (ip, it) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => x == y,
                    _ => false,
                }
            }
            _ => false,
        },
        Term::App(f, xs) => match t {
            Term::App(g, ys) => f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_term(x, y, vars, bindings, ep, et)),
            _ => false,
        },
    }
}

fn match_rec(
    p: &Formula,
    t: &Formula,
    vars: &BTreeSet<String>,
    b: &mut BTreeMap<String, Term>,
    ep: &mut Vec<String>,
    et: &mut Vec<String>,
) -> bool {
    match (p, t) {
        (Formula::Top, Formula::Top) | (Formula::Bottom, Formula::Bottom) => true,
        (Formula::Atom(r, xs), Formula::Atom(s, ys)) => {
            r == s && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_term(x, y, vars, b, ep, et))
        }
        (Formula::And(p1, p2), Formula::And(t1, t2))
        | (Formula::Or(p1, p2), Formula::Or(t1, t2))
        | (Formula::Implies(p1, p2), Formula::Implies(t1, t2)) => match_rec(p1, t1, vars, b, ep, et) && match_rec(p2, t2, vars, b, ep, et),
        (Formula::Exists(v, x), Formula::Exists(w, y)) | (Formula::Forall(v, x), Formula::Forall(w, y)) => {
            ep.push(v.clone());
            et.push(w.clone());
            let r = match_rec(x, y, vars, b, ep, et);
            ep.pop();
            et.pop();
            r
        }
        (Formula::ForallIn(v, s, x), Formula::ForallIn(w, u, y)) => {
            if !match_term(s, u, vars, b, ep, et) {
                return false;
            }
            ep.push(v.clone());
            et.push(w.clone());
            let r = match_rec(x, y, vars, b, ep, et);
            ep.pop();
            et.pop();
            r
        }
        _ => false,
    }
}

/// Renames bound variables so that none collides with `avoid`.
pub fn rename_bound_away(phi: &Formula, avoid: &BTreeSet<String>) -> Formula {
    let mut used = phi.all_vars();
    used.extend(avoid.iter().cloned());
    rename_rec(phi, avoid, &mut used)
}

fn rename_rec(phi: &Formula, avoid: &BTreeSet<String>, used: &mut BTreeSet<String>) -> Formula {
    let bind = |v: &String, body: &Formula, used: &mut BTreeSet<String>| -> (String, Formula) {
        if avoid.contains(v) {
            let fresh = fresh_var(used);
            used.insert(fresh.clone());
            let renamed = substitute(body, v, &Term::Var(fresh.clone()));
            let inner = rename_rec(&renamed, avoid, used);
            (fresh, inner)
        } else {
            (v.clone(), rename_rec(body, avoid, used))
        }
    };
    match phi {
        Formula::Top | Formula::Bottom | Formula::Atom(..) => phi.clone(),
        Formula::And(a, b) => Formula::and(rename_rec(a, avoid, used), rename_rec(b, avoid, used)),
        Formula::Or(a, b) => Formula::or(rename_rec(a, avoid, used), rename_rec(b, avoid, used)),
        Formula::Implies(a, b) => Formula::implies(rename_rec(a, avoid, used), rename_rec(b, avoid, used)),
        Formula::Exists(v, b) => {
            let (v2, b2) = bind(v, b, used);
            Formula::exists(v2, b2)
        }
        Formula::Forall(v, b) => {
            let (v2, b2) = bind(v, b, used);
            Formula::forall(v2, b2)
        }
        Formula::ForallIn(v, t, b) => {
            let (v2, b2) = bind(v, b, used);
            Formula::forall_in(v2, t.clone(), b2)
        }
    }
}

/// Interning cache of α-keys; used by search memo tables.
pub type AlphaMemo<V> = HashMap<String, V>;
