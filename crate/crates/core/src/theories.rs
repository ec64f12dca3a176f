//! Built-in Σ theories: equality, primitive recursive arithmetic, primitive
//! recursive set theory and infinity, with their schema generators.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::formula::{
    alpha_equal, check_sigma, fresh_var, substitute, substitute_many, Formula, FunSym, Grammar, Implication, SigmaError, Term, VocabError,
    Vocabulary,
};

pub const EQ: &str = "=";
pub const NEQ: &str = "!=";
pub const LT: &str = "<";
pub const NLT: &str = "!<";
pub const IN: &str = "in";
pub const NOTIN: &str = "notin";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TheoryError {
    #[error(transparent)]
    Sigma(#[from] SigmaError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error("formula is not Δ₀: {0}")]
    NotDelta0(String),
    #[error("no dual declared for relation `{0}`")]
    UndeclaredDual(String),
    #[error("unknown axiom `{0}`")]
    UnknownAxiom(String),
    #[error("axiom family `{name}` needs a {wanted} symbol")]
    WrongSymbol { name: String, wanted: &'static str },
    #[error("schema `{0}` is not available in this theory")]
    NoSchema(String),
    #[error("bad schema instance: {0}")]
    BadInstance(String),
    #[error("unknown theory `{0}`")]
    UnknownTheory(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Schema {
    Congruence,
    Induction,
}

impl Schema {
    pub fn name(self) -> &'static str {
        match self {
            Schema::Congruence => "congruence",
            Schema::Induction => "induction",
        }
    }
}

/// Axiom families indexed by a structured function symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Proj,
    Compose,
    RecZero,
    RecSucc,
    ImageIntro,
    ImageElim,
    SetRec,
    SepIntro,
    SepBound,
    SepProp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theory {
    pub name: String,
    pub vocab: Vocabulary,
    pub axioms: Vec<(String, Implication)>,
    pub families: Vec<(String, Family)>,
    pub schemas: Vec<Schema>,
}

/// A reference to one axiom instance before variable bindings are applied.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AxiomRef {
    Named {
        name: String,
        symbol: Option<FunSym>,
    },
    /// `φ ∧ var = target ⟹ φ(target/var)`.
    Congruence {
        var: String,
        target: Term,
        formula: Formula,
    },
    /// `∀var<bound (θ → θ(S var)) ⟹ θ(0) → θ(bound)`.
    Induction {
        var: String,
        bound: Term,
        theta: Formula,
    },
}

impl AxiomRef {
    pub fn named(name: &str) -> Self {
        AxiomRef::Named { name: name.to_string(), symbol: None }
    }
}

impl fmt::Display for AxiomRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::parser::render_axiom_ref(self))
    }
}

fn v(name: &str) -> Term {
    Term::var(name)
}

fn atom2(r: &str, a: Term, b: Term) -> Formula {
    Formula::atom(r, vec![a, b])
}

fn imp(a: Formula, b: Formula) -> Implication {
    Implication::new(a, b)
}

fn xs(k: usize) -> Vec<Term> {
    (1..=k).map(|i| v(&format!("x{i}"))).collect()
}

impl Theory {
    pub fn empty(name: &str, vocab: Vocabulary) -> Self {
        Theory { name: name.to_string(), vocab, axioms: Vec::new(), families: Vec::new(), schemas: Vec::new() }
    }

    pub fn axiom(&self, name: &str) -> Option<&Implication> {
        self.axioms.iter().find(|(n, _)| n == name).map(|(_, a)| a)
    }

    pub fn family(&self, name: &str) -> Option<Family> {
        self.families.iter().find(|(n, _)| n == name).map(|(_, f)| *f)
    }

    pub fn has_schema(&self, s: Schema) -> bool {
        self.schemas.contains(&s)
    }

    /// The implication named by `r`, with its variables still free.
    pub fn lookup(&self, r: &AxiomRef) -> Result<Implication, TheoryError> {
        let out = match r {
            AxiomRef::Named { name, symbol: None } => match self.axiom(name) {
                Some(a) => a.clone(),
                None if self.family(name).is_some() => return Err(TheoryError::WrongSymbol { name: name.clone(), wanted: "structured" }),
                None => return Err(TheoryError::UnknownAxiom(name.clone())),
            },
            AxiomRef::Named { name, symbol: Some(sym) } => {
                let fam = self.family(name).ok_or_else(|| TheoryError::UnknownAxiom(name.clone()))?;
                self.vocab.function_arity(sym)?;
                family_instance(&self.vocab, name, fam, sym)?
            }
            AxiomRef::Congruence { var, target, formula } => {
                if !self.has_schema(Schema::Congruence) {
                    return Err(TheoryError::NoSchema("congruence".into()));
                }
                check_sigma(formula, &self.vocab)?;
                self.vocab.check_term(target)?;
                congruence(var, target, formula)
            }
            AxiomRef::Induction { var, bound, theta } => {
                if !self.has_schema(Schema::Induction) {
                    return Err(TheoryError::NoSchema("induction".into()));
                }
                self.vocab.check_term(bound)?;
                induction(&self.vocab, var, bound, theta)?
            }
        };
        out.check(&self.vocab)?;
        Ok(out)
    }

    /// Concrete axioms with their references.
    pub fn concrete(&self) -> impl Iterator<Item = (AxiomRef, &Implication)> {
        self.axioms.iter().map(|(n, a)| (AxiomRef::named(n), a))
    }

    /// Finds an axiom reference and bindings whose instance is α-equal to `target`.
    pub fn recognize(&self, target: &Implication) -> Option<(AxiomRef, BTreeMap<String, Term>)> {
        for (name, ax) in &self.axioms {
            if let Some(b) = match_implication(ax, target) {
                return Some((AxiomRef::named(name), b));
            }
        }
        let mut symbols = BTreeMap::new();
        target.antecedent.functions_into(&mut symbols);
        target.consequent.functions_into(&mut symbols);
        let mut candidates: Vec<FunSym> = Vec::new();
        for f in symbols.keys() {
            let mut comps = Vec::new();
            f.components(&mut comps);
            for c in comps {
                if c.is_structured() && !candidates.contains(&c) {
                    candidates.push(c);
                }
            }
        }
        for (name, _) in &self.families {
            for sym in &candidates {
                let r = AxiomRef::Named { name: name.clone(), symbol: Some(sym.clone()) };
                if let Ok(inst) = self.lookup(&r) {
                    if let Some(b) = match_implication(&inst, target) {
                        return Some((r, b));
                    }
                }
            }
        }
        if self.has_schema(Schema::Congruence) {
            if let Some(found) = self.recognize_congruence(target) {
                return Some(found);
            }
        }
        if self.has_schema(Schema::Induction) {
            if let Some(found) = self.recognize_induction(target) {
                return Some(found);
            }
        }
        None
    }

    fn recognize_congruence(&self, target: &Implication) -> Option<(AxiomRef, BTreeMap<String, Term>)> {
        let Formula::And(phi, eq) = &target.antecedent else { return None };
        let Formula::Atom(r, args) = &**eq else { return None };
        if r != EQ || args.len() != 2 {
            return None;
        }
        let mut avoid = target.antecedent.all_vars();
        target.consequent.all_vars_into(&mut avoid);
        let x = fresh_var(&avoid);
        avoid.insert(x.clone());
        let y = fresh_var(&avoid);
        let pattern = anti_unify(phi, &target.consequent, &args[0], &args[1], &x)?;
        let r = AxiomRef::Congruence { var: x.clone(), target: Term::Var(y.clone()), formula: pattern };
        let mut b = BTreeMap::new();
        b.insert(x, args[0].clone());
        b.insert(y, args[1].clone());
        let inst = self.lookup(&r).ok()?.substitute(&b);
        (alpha_equal(&inst.antecedent, &target.antecedent) && alpha_equal(&inst.consequent, &target.consequent)).then_some((r, b))
    }

    fn recognize_induction(&self, target: &Implication) -> Option<(AxiomRef, BTreeMap<String, Term>)> {
        let Formula::ForallIn(x, bound, body) = &target.antecedent else { return None };
        let Formula::Or(step_hyp, _) = &**body else { return None };
        let theta = dualize(&self.vocab, step_hyp).ok()?;
        let r = AxiomRef::Induction { var: x.clone(), bound: bound.clone(), theta };
        let inst = self.lookup(&r).ok()?;
        (alpha_equal(&inst.antecedent, &target.antecedent) && alpha_equal(&inst.consequent, &target.consequent))
            .then_some((r, BTreeMap::new()))
    }
}

/// Replaces, in `left`, the term positions where `left` has `a` and `right`
/// has `b` by the variable `x`; everything else must agree.
fn anti_unify(left: &Formula, right: &Formula, a: &Term, b: &Term, x: &str) -> Option<Formula> {
    fn term(l: &Term, r: &Term, a: &Term, b: &Term, x: &str, bound: &[String]) -> Option<Term> {
        if l == a && r == b && l != r && !a.free_vars().iter().chain(b.free_vars().iter()).any(|w| bound.contains(w)) {
            return Some(Term::var(x));
        }
        match (l, r) {
            (Term::Var(p), Term::Var(q)) if p == q => Some(l.clone()),
            (Term::App(f, ls), Term::App(g, rs)) if f == g && ls.len() == rs.len() => {
                Some(Term::App(f.clone(), ls.iter().zip(rs).map(|(p, q)| term(p, q, a, b, x, bound)).collect::<Option<_>>()?))
            }
            _ => None,
        }
    }
    fn rec(l: &Formula, r: &Formula, a: &Term, b: &Term, x: &str, bound: &mut Vec<String>) -> Option<Formula> {
        Some(match (l, r) {
            (Formula::Top, Formula::Top) => Formula::Top,
            (Formula::Bottom, Formula::Bottom) => Formula::Bottom,
            (Formula::Atom(p, ls), Formula::Atom(q, rs)) if p == q && ls.len() == rs.len() => {
                Formula::Atom(p.clone(), ls.iter().zip(rs).map(|(s, t)| term(s, t, a, b, x, bound)).collect::<Option<_>>()?)
            }
            (Formula::And(l1, l2), Formula::And(r1, r2)) => Formula::and(rec(l1, r1, a, b, x, bound)?, rec(l2, r2, a, b, x, bound)?),
            (Formula::Or(l1, l2), Formula::Or(r1, r2)) => Formula::or(rec(l1, r1, a, b, x, bound)?, rec(l2, r2, a, b, x, bound)?),
            (Formula::Exists(p, lb), Formula::Exists(q, rb)) if p == q => {
                bound.push(p.clone());
                let inner = rec(lb, rb, a, b, x, bound);
                bound.pop();
                Formula::exists(p.clone(), inner?)
            }
            (Formula::ForallIn(p, lt, lb), Formula::ForallIn(q, rt, rb)) if p == q => {
                let t = term(lt, rt, a, b, x, bound)?;
                bound.push(p.clone());
                let inner = rec(lb, rb, a, b, x, bound);
                bound.pop();
                Formula::forall_in(p.clone(), t, inner?)
            }
            _ => return None,
        })
    }
    rec(left, right, a, b, x, &mut Vec::new())
}

/// Matches `pattern` against `target`, binding the pattern's free variables.
pub fn match_implication(pattern: &Implication, target: &Implication) -> Option<BTreeMap<String, Term>> {
    let vars = pattern.free_vars();
    let mut b = BTreeMap::new();
    if !crate::formula::match_formula(&pattern.antecedent, &target.antecedent, &vars, &mut b) {
        return None;
    }
    if !crate::formula::match_formula(&pattern.consequent, &target.consequent, &vars, &mut b) {
        return None;
    }
    b.retain(|k, t| t != &Term::Var(k.clone()));
    Some(b)
}

fn congruence(var: &str, target: &Term, formula: &Formula) -> Implication {
    imp(Formula::and(formula.clone(), atom2(EQ, v(var), target.clone())), substitute(formula, var, target))
}

fn induction(vocab: &Vocabulary, x: &str, bound: &Term, theta: &Formula) -> Result<Implication, TheoryError> {
    if !is_delta0(vocab, theta) {
        return Err(TheoryError::NotDelta0(crate::parser::render_formula(theta)));
    }
    if bound.contains_var(x) {
        return Err(TheoryError::BadInstance(format!("induction variable `{x}` occurs in its bound")));
    }
    if bound.free_vars().iter().any(|w| theta.is_free(w)) {
        return Err(TheoryError::BadInstance("the bound must not occur in the induction formula".into()));
    }
    let zero = Term::constant("0");
    let succ = Term::app("S", vec![v(x)]);
    let step = Formula::or(dualize(vocab, theta)?, substitute(theta, x, &succ));
    let base = dualize(vocab, &substitute(theta, x, &zero))?;
    Ok(imp(Formula::forall_in(x, bound.clone(), step), Formula::or(base, substitute(theta, x, bound))))
}

fn family_instance(vocab: &Vocabulary, name: &str, fam: Family, sym: &FunSym) -> Result<Implication, TheoryError> {
    let arity = |f: &FunSym| vocab.function_arity(f);
    let wrong = |wanted| TheoryError::WrongSymbol { name: name.to_string(), wanted };
    let app = |f: &FunSym, args: Vec<Term>| Term::App(f.clone(), args);
    let eq = |a, b| atom2(EQ, a, b);
    let mem = |a, b| atom2(IN, a, b);
    Ok(match (fam, sym) {
        (Family::Proj, FunSym::Proj { arity, index }) => imp(Formula::Top, eq(app(sym, xs(*arity)), v(&format!("x{index}")))),
        (Family::Proj, _) => return Err(wrong("projection")),
        (Family::Compose, FunSym::Compose(g, hs)) => {
            let k = arity(sym)?;
            let args = xs(k);
            let inner = hs.iter().map(|h| app(h, args.clone())).collect();
            imp(Formula::Top, eq(app(sym, args.clone()), app(g, inner)))
        }
        (Family::Compose, _) => return Err(wrong("composition")),
        (Family::RecZero, FunSym::PrimRec(g, _)) => {
            let k = arity(g)?;
            let mut args = vec![Term::constant("0")];
            args.extend(xs(k));
            imp(Formula::Top, eq(app(sym, args), app(g, xs(k))))
        }
        (Family::RecSucc, FunSym::PrimRec(g, h)) => {
            let k = arity(g)?;
            let mut lhs_args = vec![Term::app("S", vec![v("y")])];
            lhs_args.extend(xs(k));
            let mut rec_args = vec![v("y")];
            rec_args.extend(xs(k));
            let mut h_args = vec![v("y"), app(sym, rec_args)];
            h_args.extend(xs(k));
            imp(Formula::Top, eq(app(sym, lhs_args), app(h, h_args)))
        }
        (Family::RecZero | Family::RecSucc, _) => return Err(wrong("arithmetic recursion")),
        (Family::ImageIntro, FunSym::Image(f)) => {
            let k = arity(f)? - 1;
            let mut fa = vec![v("w")];
            fa.extend(xs(k));
            let mut ia = vec![v("y")];
            ia.extend(xs(k));
            imp(mem(v("w"), v("y")), mem(app(f, fa), app(sym, ia)))
        }
        (Family::ImageElim, FunSym::Image(f)) => {
            let k = arity(f)? - 1;
            let mut fa = vec![v("w")];
            fa.extend(xs(k));
            let mut ia = vec![v("y")];
            ia.extend(xs(k));
            imp(mem(v("z"), app(sym, ia)), Formula::exists("w", Formula::and(mem(v("w"), v("y")), eq(v("z"), app(f, fa)))))
        }
        (Family::ImageIntro | Family::ImageElim, _) => return Err(wrong("image")),
        (Family::SetRec, FunSym::SetRec(f)) => {
            let k = arity(f)? - 2;
            let mut ra = vec![v("y")];
            ra.extend(xs(k));
            let image = FunSym::Image(Box::new(sym.clone()));
            let mut fa = vec![app(&image, ra.clone()), v("y")];
            fa.extend(xs(k));
            imp(Formula::Top, eq(app(sym, ra), app(f, fa)))
        }
        (Family::SetRec, _) => return Err(wrong("set recursion")),
        (Family::SepIntro | Family::SepBound | Family::SepProp, FunSym::Separation { arity, formula }) => {
            let k = arity - 1;
            let mut sa = vec![v("y")];
            sa.extend(xs(k));
            let mut map = BTreeMap::new();
            map.insert("x0".to_string(), v("z"));
            let phi = substitute_many(formula, &map);
            let member = mem(v("z"), app(sym, sa));
            match fam {
                Family::SepIntro => imp(Formula::and(mem(v("z"), v("y")), phi), member),
                Family::SepBound => imp(member, mem(v("z"), v("y"))),
                _ => imp(member, phi),
            }
        }
        (Family::SepIntro | Family::SepBound | Family::SepProp, _) => return Err(wrong("separation")),
    })
}

/// Validates a structured symbol against the vocabulary's grammar and returns its arity.
pub fn check_symbol(vocab: &Vocabulary, f: &FunSym) -> Result<usize, VocabError> {
    let bad = |reason: String| VocabError::BadSymbol { symbol: crate::parser::render_symbol(f), reason };
    let grammar = vocab.grammar.clone();
    let need = |g: Grammar| -> Result<(), VocabError> {
        if grammar.as_ref() == Some(&g) {
            Ok(())
        } else {
            Err(bad("not part of this vocabulary's symbol grammar".into()))
        }
    };
    match f {
        FunSym::Named(_) => vocab.function_arity(f),
        FunSym::Proj { arity, index } => {
            if grammar.is_none() {
                return Err(bad("no symbol grammar".into()));
            }
            if *arity == 0 || *index == 0 || index > arity {
                return Err(bad(format!("projection index {index} out of range 1..={arity}")));
            }
            Ok(*arity)
        }
        FunSym::Compose(g, hs) => {
            if grammar.is_none() {
                return Err(bad("no symbol grammar".into()));
            }
            let m = vocab.function_arity(g)?;
            if hs.is_empty() {
                return Err(bad("composition needs at least one inner symbol".into()));
            }
            if m != hs.len() {
                return Err(bad(format!("outer symbol is {m}-ary but {} inner symbols given", hs.len())));
            }
            let k = vocab.function_arity(&hs[0])?;
            for h in &hs[1..] {
                let a = vocab.function_arity(h)?;
                if a != k {
                    return Err(bad(format!("inner symbols disagree on arity ({k} vs {a})")));
                }
            }
            Ok(k)
        }
        FunSym::PrimRec(g, h) => {
            need(Grammar::Pra)?;
            let k = vocab.function_arity(g)?;
            let hk = vocab.function_arity(h)?;
            if hk != k + 2 {
                return Err(bad(format!("step symbol must be {}-ary, found {hk}-ary", k + 2)));
            }
            Ok(k + 1)
        }
        FunSym::Image(inner) => {
            need(Grammar::Prs)?;
            let a = vocab.function_arity(inner)?;
            if a == 0 {
                return Err(bad("image of a constant".into()));
            }
            Ok(a)
        }
        FunSym::SetRec(inner) => {
            need(Grammar::Prs)?;
            let a = vocab.function_arity(inner)?;
            if a < 2 {
                return Err(bad(format!("recursion needs an at least binary symbol, found {a}-ary")));
            }
            Ok(a - 1)
        }
        FunSym::Separation { arity, formula } => {
            need(Grammar::Prs)?;
            if *arity == 0 {
                return Err(bad("separation formula needs a positive arity".into()));
            }
            let allowed: BTreeSet<String> = (0..*arity).map(|i| format!("x{i}")).collect();
            if let Some(extra) = formula.free_vars().iter().find(|w| !allowed.contains(*w)) {
                return Err(bad(format!("free variable `{extra}` outside x0..x{}", arity - 1)));
            }
            check_sigma(formula, vocab).map_err(|e| bad(e.to_string()))?;
            if !is_delta0(vocab, formula) {
                return Err(bad("formula is not Δ₀".into()));
            }
            Ok(*arity)
        }
    }
}

/// The guard and body of a bounded existential `∃v (v R t ∧ ψ)` or `∃v (ψ ∧ v R t)`.
pub fn bounded_exists<'a>(vocab: &Vocabulary, v: &str, body: &'a Formula) -> Option<(&'a Term, &'a Formula)> {
    let guard = vocab.guard.as_deref()?;
    let Formula::And(a, b) = body else { return None };
    let is_guard = |f: &'a Formula| -> Option<&'a Term> {
        match f {
            Formula::Atom(r, args) if r == guard && args.len() == 2 && args[0] == Term::var(v) && !args[1].contains_var(v) => {
                Some(&args[1])
            }
            _ => None,
        }
    };
    if let Some(t) = is_guard(a) {
        return Some((t, b));
    }
    is_guard(b).map(|t| (t, &**a))
}

/// True when every quantifier is bounded.
pub fn is_delta0(vocab: &Vocabulary, phi: &Formula) -> bool {
    match phi {
        Formula::Top | Formula::Bottom | Formula::Atom(..) => true,
        Formula::Implies(..) | Formula::Forall(..) => false,
        Formula::And(a, b) | Formula::Or(a, b) => is_delta0(vocab, a) && is_delta0(vocab, b),
        Formula::ForallIn(_, _, b) => is_delta0(vocab, b),
        Formula::Exists(v, b) => match bounded_exists(vocab, v, b) {
            Some((_, rest)) => is_delta0(vocab, rest),
            None => false,
        },
    }
}

/// Swaps every connective, quantifier and relation symbol with its dual.
pub fn dualize(vocab: &Vocabulary, phi: &Formula) -> Result<Formula, TheoryError> {
    Ok(match phi {
        Formula::Top => Formula::Bottom,
        Formula::Bottom => Formula::Top,
        Formula::Atom(r, args) => {
            let d = vocab.dual_of(r).ok_or_else(|| TheoryError::UndeclaredDual(r.clone()))?;
            Formula::Atom(d.to_string(), args.clone())
        }
        Formula::And(a, b) => Formula::or(dualize(vocab, a)?, dualize(vocab, b)?),
        Formula::Or(a, b) => Formula::and(dualize(vocab, a)?, dualize(vocab, b)?),
        Formula::ForallIn(v, t, b) => {
            let guard = vocab.dual_of(&vocab.notin).ok_or_else(|| TheoryError::UndeclaredDual(vocab.notin.clone()))?;
            Formula::exists(v.clone(), Formula::and(atom2(guard, Term::var(v.clone()), t.clone()), dualize(vocab, b)?))
        }
        Formula::Exists(v, b) => match bounded_exists(vocab, v, b) {
            Some((t, rest)) => Formula::forall_in(v.clone(), t.clone(), dualize(vocab, rest)?),
            None => return Err(TheoryError::NotDelta0(crate::parser::render_formula(phi))),
        },
        Formula::Implies(..) | Formula::Forall(..) => return Err(TheoryError::NotDelta0(crate::parser::render_formula(phi))),
    })
}

/// `θ₁ → θ₂` for Δ₀ formulas.
pub fn material_implication(vocab: &Vocabulary, a: &Formula, b: &Formula) -> Result<Formula, TheoryError> {
    Ok(Formula::or(dualize(vocab, a)?, b.clone()))
}

pub fn equality_vocab(mut vocab: Vocabulary) -> Vocabulary {
    vocab.relations.insert(EQ.into(), 2);
    vocab.relations.insert(NEQ.into(), 2);
    if !vocab.duals.iter().any(|(a, _)| a == EQ) {
        vocab.duals.push((EQ.into(), NEQ.into()));
    }
    vocab
}

/// Equality and inequality axioms for `vocab`.
pub fn equality(vocab: Vocabulary) -> Theory {
    let vocab = equality_vocab(vocab);
    let (x, y, z) = (v("x"), v("y"), v("z"));
    let eq = |a: &Term, b: &Term| atom2(EQ, a.clone(), b.clone());
    let neq = |a: &Term, b: &Term| atom2(NEQ, a.clone(), b.clone());
    Theory {
        name: "equality".into(),
        vocab,
        axioms: vec![
            ("1".into(), imp(Formula::Top, eq(&x, &x))),
            ("2".into(), imp(eq(&x, &y), eq(&y, &x))),
            ("3".into(), imp(Formula::and(eq(&x, &y), eq(&y, &z)), eq(&x, &z))),
            ("5".into(), imp(Formula::Top, Formula::or(eq(&x, &y), neq(&x, &y)))),
            ("6".into(), imp(Formula::and(eq(&x, &y), neq(&x, &y)), Formula::Bottom)),
        ],
        families: Vec::new(),
        schemas: vec![Schema::Congruence],
    }
}

pub fn pra_vocab() -> Vocabulary {
    let mut vocab = Vocabulary::new(NLT).with_relation(LT, 2).with_function("0", 0).with_function("S", 1).with_function("Z", 1);
    vocab.guard = Some(LT.into());
    vocab.duals.push((LT.into(), NLT.into()));
    vocab.grammar = Some(Grammar::Pra);
    equality_vocab(vocab)
}

pub fn pra() -> Theory {
    let mut t = equality(pra_vocab());
    t.name = "pra".into();
    let (x, y) = (v("x"), v("y"));
    let zero = Term::constant("0");
    let s = |a: Term| Term::app("S", vec![a]);
    let lt = |a: Term, b: Term| atom2(LT, a, b);
    let nlt = |a: Term, b: Term| atom2(NLT, a, b);
    let eq = |a: Term, b: Term| atom2(EQ, a, b);
    t.axioms.extend([
        ("7".into(), imp(Formula::Top, Formula::or(lt(x.clone(), y.clone()), nlt(x.clone(), y.clone())))),
        ("8".into(), imp(Formula::and(lt(x.clone(), y.clone()), nlt(x.clone(), y.clone())), Formula::Bottom)),
        ("9".into(), imp(lt(x.clone(), zero.clone()), Formula::Bottom)),
        ("10".into(), imp(Formula::Top, lt(x.clone(), s(x.clone())))),
        ("11".into(), imp(lt(x.clone(), s(y.clone())), Formula::or(lt(x.clone(), y.clone()), eq(x.clone(), y.clone())))),
        ("12".into(), imp(eq(s(x.clone()), s(y.clone())), eq(x.clone(), y.clone()))),
        ("13".into(), imp(atom2(NEQ, x.clone(), zero.clone()), Formula::exists("y", eq(x.clone(), s(y.clone()))))),
        ("14".into(), imp(Formula::Top, eq(Term::app("Z", vec![x.clone()]), zero))),
    ]);
    t.families =
        vec![("15".into(), Family::Proj), ("16".into(), Family::Compose), ("17".into(), Family::RecZero), ("18".into(), Family::RecSucc)];
    t.schemas.push(Schema::Induction);
    t
}

pub fn prs_vocab() -> Vocabulary {
    let mut vocab = Vocabulary::new(NOTIN).with_relation(IN, 2).with_function("U", 1).with_function("A", 2);
    vocab.guard = Some(IN.into());
    vocab.duals.push((IN.into(), NOTIN.into()));
    vocab.grammar = Some(Grammar::Prs);
    equality_vocab(vocab)
}

pub fn prs() -> Theory {
    let mut t = equality(prs_vocab());
    t.name = "prs".into();
    let (x, y, z) = (v("x"), v("y"), v("z"));
    let mem = |a: &Term, b: &Term| atom2(IN, a.clone(), b.clone());
    let eq = |a: &Term, b: &Term| atom2(EQ, a.clone(), b.clone());
    let bex = |var: &str, bound: &Term, body: Formula| Formula::exists(var, Formula::and(mem(&v(var), bound), body));
    let ux = Term::app("U", vec![x.clone()]);
    let axy = Term::app("A", vec![x.clone(), y.clone()]);
    t.axioms.extend([
        ("7".into(), imp(Formula::Top, Formula::or(mem(&x, &y), atom2(NOTIN, x.clone(), y.clone())))),
        ("8".into(), imp(Formula::and(mem(&x, &y), atom2(NOTIN, x.clone(), y.clone())), Formula::Bottom)),
        (
            "9".into(),
            imp(Formula::and(Formula::forall_in("z", x.clone(), mem(&z, &y)), Formula::forall_in("z", y.clone(), mem(&z, &x))), eq(&x, &y)),
        ),
        ("10".into(), imp(Formula::and(mem(&z, &y), mem(&y, &x)), mem(&z, &ux))),
        ("11".into(), imp(mem(&z, &ux), bex("y", &x, mem(&z, &y)))),
        ("12".into(), imp(Formula::Top, mem(&x, &axy))),
        ("13".into(), imp(Formula::Top, mem(&y, &axy))),
        ("14".into(), imp(mem(&z, &axy), Formula::or(eq(&z, &x), eq(&z, &y)))),
        (
            "23".into(),
            imp(bex("z", &x, Formula::Top), bex("z", &x, Formula::forall_in("y", x.clone(), atom2(NOTIN, z.clone(), y.clone())))),
        ),
    ]);
    t.families = vec![
        ("15".into(), Family::Proj),
        ("16".into(), Family::Compose),
        ("17".into(), Family::ImageIntro),
        ("18".into(), Family::ImageElim),
        ("19".into(), Family::SetRec),
        ("20".into(), Family::SepIntro),
        ("21".into(), Family::SepBound),
        ("22".into(), Family::SepProp),
    ];
    t
}

pub fn prs_infinity() -> Theory {
    let mut t = prs();
    t.name = "prs_infinity".into();
    t.vocab.functions.insert("N".into(), 1);
    let (x, y, z) = (v("x"), v("y"), v("z"));
    let nw = Term::app("N", vec![v("w")]);
    let mem = |a: &Term, b: &Term| atom2(IN, a.clone(), b.clone());
    t.axioms.extend([
        ("24".into(), imp(Formula::Top, Formula::exists("x", Formula::and(mem(&x, &nw), Formula::Top)))),
        ("25".into(), imp(Formula::and(mem(&y, &x), mem(&x, &nw)), mem(&y, &nw))),
        ("26".into(), imp(Formula::and(Formula::and(mem(&z, &y), mem(&y, &x)), mem(&x, &nw)), mem(&z, &x))),
        (
            "27".into(),
            imp(
                mem(&x, &nw),
                Formula::exists(
                    "y",
                    Formula::and(
                        mem(&y, &x),
                        Formula::forall_in("z", x.clone(), Formula::or(mem(&z, &y), atom2(EQ, z.clone(), y.clone()))),
                    ),
                ),
            ),
        ),
    ]);
    t
}

/// Built-in theory by name; `equality` uses the empty vocabulary.
pub fn builtin(name: &str) -> Result<Theory, TheoryError> {
    match name {
        "equality" => Ok(equality(Vocabulary::default())),
        "pra" => Ok(pra()),
        "prs" => Ok(prs()),
        "prs_infinity" | "prs-infinity" => Ok(prs_infinity()),
        "empty" | "pure" => Ok(Theory::empty("pure", Vocabulary::default())),
        other => Err(TheoryError::UnknownTheory(other.to_string())),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchemaRequest {
    Congruence(Formula),
    Induction(Formula),
    Separation { arity: usize, formula: Formula },
}

/// Instantiates a schema. Congruence substitutes for `x` with a fresh `y`;
/// induction runs over `x` with bound `y`; separation yields the three axioms of `S(φ)`.
pub fn instantiate_schema(t: &Theory, req: &SchemaRequest) -> Result<Vec<Implication>, TheoryError> {
    match req {
        SchemaRequest::Congruence(phi) => {
            check_sigma(phi, &t.vocab)?;
            let mut avoid = phi.all_vars();
            avoid.insert("x".into());
            let y = if phi.all_vars().contains("y") { fresh_var(&avoid) } else { "y".to_string() };
            Ok(vec![t.lookup(&AxiomRef::Congruence { var: "x".into(), target: Term::var(y), formula: phi.clone() })?])
        }
        SchemaRequest::Induction(theta) => {
            check_sigma(theta, &t.vocab)?;
            let mut avoid = theta.all_vars();
            avoid.insert("x".into());
            let y = if avoid.contains("y") { fresh_var(&avoid) } else { "y".to_string() };
            Ok(vec![t.lookup(&AxiomRef::Induction { var: "x".into(), bound: Term::var(y), theta: theta.clone() })?])
        }
        SchemaRequest::Separation { arity, formula } => {
            check_sigma(formula, &t.vocab)?;
            if !is_delta0(&t.vocab, formula) {
                return Err(TheoryError::NotDelta0(crate::parser::render_formula(formula)));
            }
            let sym = FunSym::Separation { arity: *arity, formula: Box::new(formula.clone()) };
            ["20", "21", "22"].iter().map(|n| t.lookup(&AxiomRef::Named { name: n.to_string(), symbol: Some(sym.clone()) })).collect()
        }
    }
}
