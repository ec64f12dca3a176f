//! Sequents, derivation trees and rule-by-rule checking for the classical
//! and intuitionistic sequent calculi and their Σ variants with theory cuts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{alpha_contains, alpha_equal, check_sigma, fresh_var, substitute, substitute_many, universal_closure, Formula, Term};
use crate::theories::{AxiomRef, Theory};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Sequent {
    pub ante: Vec<Formula>,
    pub succ: Vec<Formula>,
}

impl Sequent {
    pub fn new(ante: Vec<Formula>, succ: Vec<Formula>) -> Self {
        Sequent { ante, succ }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in self.ante.iter().chain(&self.succ) {
            out.extend(f.free_vars());
        }
        out
    }

    /// Element-wise α-equality.
    pub fn alpha_eq(&self, other: &Sequent) -> bool {
        list_eq(&self.ante, &other.ante) && list_eq(&self.succ, &other.succ)
    }

    /// Equality of the underlying sets modulo α.
    pub fn set_eq(&self, other: &Sequent) -> bool {
        set_eq(&self.ante, &other.ante) && set_eq(&self.succ, &other.succ)
    }

    pub fn substitute(&self, map: &BTreeMap<String, Term>) -> Sequent {
        Sequent {
            ante: self.ante.iter().map(|f| substitute_many(f, map)).collect(),
            succ: self.succ.iter().map(|f| substitute_many(f, map)).collect(),
        }
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |xs: &[Formula]| xs.iter().map(crate::parser::render_formula).collect::<Vec<_>>().join(", ");
        write!(f, "{} ⊢ {}", side(&self.ante), side(&self.succ))
    }
}

pub fn list_eq(a: &[Formula], b: &[Formula]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| alpha_equal(x, y))
}

pub fn set_eq(a: &[Formula], b: &[Formula]) -> bool {
    a.iter().all(|x| alpha_contains(b, x)) && b.iter().all(|y| alpha_contains(a, y))
}

pub fn subset(a: &[Formula], b: &[Formula]) -> bool {
    a.iter().all(|x| alpha_contains(b, x))
}

/// `closure(⋀Γ ⇒ ⋁Δ)` with both lists associated to the left.
pub fn sequent_semantics(s: &Sequent) -> Formula {
    universal_closure(&Formula::implies(Formula::conj(&s.ante), Formula::disj(&s.succ)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RuleName {
    Axiom,
    BotLeft,
    TopRight,
    AndLeft1,
    AndLeft2,
    AndRight,
    OrLeft,
    OrRight1,
    OrRight2,
    ImpLeft,
    ImpRight,
    ExistsLeft,
    ExistsRight,
    ForallLeft,
    ForallRight,
    ForallInLeft,
    ForallInRight,
    WeakenLeft,
    WeakenRight,
    Multiset,
    Cut,
    TCut,
}

const RULE_NAMES: &[(RuleName, &str)] = &[
    (RuleName::Axiom, "axiom"),
    (RuleName::BotLeft, "bot-left"),
    (RuleName::TopRight, "top-right"),
    (RuleName::AndLeft1, "and-left-1"),
    (RuleName::AndLeft2, "and-left-2"),
    (RuleName::AndRight, "and-right"),
    (RuleName::OrLeft, "or-left"),
    (RuleName::OrRight1, "or-right-1"),
    (RuleName::OrRight2, "or-right-2"),
    (RuleName::ImpLeft, "imp-left"),
    (RuleName::ImpRight, "imp-right"),
    (RuleName::ExistsLeft, "exists-left"),
    (RuleName::ExistsRight, "exists-right"),
    (RuleName::ForallLeft, "forall-left"),
    (RuleName::ForallRight, "forall-right"),
    (RuleName::ForallInLeft, "forallin-left"),
    (RuleName::ForallInRight, "forallin-right"),
    (RuleName::WeakenLeft, "weaken-left"),
    (RuleName::WeakenRight, "weaken-right"),
    (RuleName::Multiset, "multiset"),
    (RuleName::Cut, "cut"),
    (RuleName::TCut, "t-cut"),
];

impl RuleName {
    pub fn name(self) -> &'static str {
        RULE_NAMES.iter().find(|(r, _)| *r == self).map(|(_, n)| *n).unwrap()
    }

    pub fn premise_count(self) -> usize {
        use RuleName::*;
        match self {
            Axiom | BotLeft | TopRight => 0,
            AndRight | OrLeft | ImpLeft | Cut | TCut => 2,
            _ => 1,
        }
    }
}

impl FromStr for RuleName {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        RULE_NAMES.iter().find(|(_, n)| *n == s).map(|(r, _)| *r).ok_or(())
    }
}

impl fmt::Display for RuleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rule parameters. `at` indexes the principal formula in the conclusion.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RuleParams {
    pub at: Option<usize>,
    pub split: Option<usize>,
    pub eigen: Option<String>,
    pub witness: Option<Term>,
    pub cut_formula: Option<Formula>,
    pub axiom: Option<AxiomRef>,
    pub bindings: BTreeMap<String, Term>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Derivation {
    pub rule: RuleName,
    pub params: RuleParams,
    pub conclusion: Sequent,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn new(rule: RuleName, params: RuleParams, conclusion: Sequent, premises: Vec<Derivation>) -> Self {
        Derivation { rule, params, conclusion, premises }
    }

    pub fn axiom(f: Formula) -> Self {
        Derivation::new(RuleName::Axiom, RuleParams::default(), Sequent::new(vec![f.clone()], vec![f]), Vec::new())
    }

    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(Derivation::height).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    pub fn count_rule(&self, r: RuleName) -> usize {
        usize::from(self.rule == r) + self.premises.iter().map(|p| p.count_rule(r)).sum::<usize>()
    }

    pub fn is_cut_free(&self) -> bool {
        self.count_rule(RuleName::Cut) == 0
    }

    /// Every sequent in the tree satisfies `f`.
    pub fn all_sequents(&self, f: &mut impl FnMut(&Sequent) -> bool) -> bool {
        f(&self.conclusion) && self.premises.iter().all(|p| p.all_sequents(f))
    }

    /// Every variable name occurring anywhere in the tree.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        for f in self.conclusion.ante.iter().chain(&self.conclusion.succ) {
            f.all_vars_into(out);
        }
        if let Some(w) = &self.params.eigen {
            out.insert(w.clone());
        }
        if let Some(t) = &self.params.witness {
            t.free_vars_into(out);
        }
        if let Some(c) = &self.params.cut_formula {
            c.all_vars_into(out);
        }
        for (k, t) in &self.params.bindings {
            out.insert(k.clone());
            t.free_vars_into(out);
        }
        for p in &self.premises {
            p.collect_vars(out);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum System {
    LK,
    LKSigma,
    LI,
    LISigma,
}

impl System {
    pub fn is_sigma(self) -> bool {
        matches!(self, System::LKSigma | System::LISigma)
    }

    pub fn single_succedent(self) -> bool {
        matches!(self, System::LI | System::LISigma)
    }

    pub fn allows(self, r: RuleName) -> bool {
        use RuleName::*;
        if self.is_sigma() {
            !matches!(r, ImpLeft | ImpRight | ForallLeft | ForallRight | Cut)
        } else {
            r != TCut
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            System::LK => "lk",
            System::LKSigma => "lk-sigma",
            System::LI => "li",
            System::LISigma => "li-sigma",
        })
    }
}

impl FromStr for System {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "lk" => Ok(System::LK),
            "lk-sigma" => Ok(System::LKSigma),
            "li" => Ok(System::LI),
            "li-sigma" => Ok(System::LISigma),
            _ => Err(()),
        }
    }
}

/// Logical symbols that a configuration may exclude from every formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LogicalSymbol {
    Top,
    Bottom,
    Exists,
    Forall,
    NotIn,
}

impl FromStr for LogicalSymbol {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "top" => Ok(LogicalSymbol::Top),
            "bot" => Ok(LogicalSymbol::Bottom),
            "exists" => Ok(LogicalSymbol::Exists),
            "forall" => Ok(LogicalSymbol::Forall),
            "notin" => Ok(LogicalSymbol::NotIn),
            _ => Err(()),
        }
    }
}

pub fn uses_symbol(f: &Formula, s: LogicalSymbol, notin: &str) -> bool {
    match f {
        Formula::Top => s == LogicalSymbol::Top,
        Formula::Bottom => s == LogicalSymbol::Bottom,
        Formula::Atom(r, _) => s == LogicalSymbol::NotIn && r == notin,
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => uses_symbol(a, s, notin) || uses_symbol(b, s, notin),
        Formula::Exists(_, b) => s == LogicalSymbol::Exists || uses_symbol(b, s, notin),
        Formula::Forall(_, b) => s == LogicalSymbol::Forall || uses_symbol(b, s, notin),
        Formula::ForallIn(_, _, b) => matches!(s, LogicalSymbol::Forall | LogicalSymbol::NotIn) || uses_symbol(b, s, notin),
    }
}

#[derive(Clone, Debug)]
pub struct SystemConfig {
    pub system: System,
    pub theory: Theory,
    pub excluded: BTreeSet<LogicalSymbol>,
}

impl SystemConfig {
    pub fn new(system: System, theory: Theory) -> Self {
        SystemConfig { system, theory, excluded: BTreeSet::new() }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("node {node:?} ({rule}): {message}")]
pub struct CheckError {
    /// Child indices from the root.
    pub node: Vec<usize>,
    pub rule: RuleName,
    pub message: String,
}

pub fn check_derivation(d: &Derivation, cfg: &SystemConfig) -> Result<(), CheckError> {
    check_rec(d, cfg, &mut Vec::new())
}

fn check_rec(d: &Derivation, cfg: &SystemConfig, path: &mut Vec<usize>) -> Result<(), CheckError> {
    check_node(d, cfg).map_err(|message| CheckError { node: path.clone(), rule: d.rule, message })?;
    for (i, p) in d.premises.iter().enumerate() {
        path.push(i);
        check_rec(p, cfg, path)?;
        path.pop();
    }
    Ok(())
}

fn remove(xs: &[Formula], i: usize) -> Vec<Formula> {
    let mut v = xs.to_vec();
    v.remove(i);
    v
}

fn replace(xs: &[Formula], i: usize, f: Formula) -> Vec<Formula> {
    let mut v = xs.to_vec();
    v[i] = f;
    v
}

fn appended(xs: &[Formula], f: Formula) -> Vec<Formula> {
    let mut v = xs.to_vec();
    v.push(f);
    v
}

fn expect(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn check_node(d: &Derivation, cfg: &SystemConfig) -> Result<(), String> {
    let sys = cfg.system;
    let vocab = &cfg.theory.vocab;
    expect(sys.allows(d.rule), || format!("rule not available in {sys}"))?;
    expect(d.premises.len() == d.rule.premise_count(), || {
        format!("expected {} premises, found {}", d.rule.premise_count(), d.premises.len())
    })?;
    let c = &d.conclusion;
    if sys.single_succedent() {
        expect(c.succ.len() <= 1, || "more than one formula in the succedent".into())?;
    }
    for f in c.ante.iter().chain(&c.succ) {
        vocab.check_formula(f).map_err(|e| e.to_string())?;
        if sys.is_sigma() {
            check_sigma(f, vocab).map_err(|e| e.to_string())?;
        }
        for s in &cfg.excluded {
            expect(!uses_symbol(f, *s, &vocab.notin), || format!("excluded symbol {s:?} occurs"))?;
        }
    }
    if let Some(t) = &d.params.witness {
        vocab.check_term(t).map_err(|e| e.to_string())?;
    }
    if d.rule == RuleName::Multiset {
        let prem = &d.premises[0].conclusion;
        return expect(prem.set_eq(c), || format!("`{prem}` and `{c}` differ as multisets up to contraction"));
    }
    let left_premise = d.premises.first().map(|p| &p.conclusion);
    let want = expected_premises(d.rule, &d.params, c, &cfg.theory, left_premise)?;
    for (i, w) in want.iter().enumerate() {
        let got = &d.premises[i].conclusion;
        expect(got.alpha_eq(w), || format!("premise {i} should be `{w}`, found `{got}`"))?;
    }
    Ok(())
}

/// The premises a rule application with conclusion `c` must have.
/// `left_premise` supplies the cut formula and split when they are not given
/// as parameters. The multiset rule has no positional premise and is rejected.
pub fn expected_premises(
    rule: RuleName,
    p: &RuleParams,
    c: &Sequent,
    theory: &Theory,
    left_premise: Option<&Sequent>,
) -> Result<Vec<Sequent>, String> {
    use RuleName::*;
    let vocab = &theory.vocab;
    let (g, dl) = (&c.ante, &c.succ);
    let left = |i: Option<usize>| -> Result<(usize, &Formula), String> {
        let i = i.ok_or("missing (at i)")?;
        g.get(i).map(|f| (i, f)).ok_or_else(|| format!("antecedent index {i} out of range"))
    };
    let right = |i: Option<usize>| -> Result<(usize, &Formula), String> {
        let i = i.ok_or("missing (at i)")?;
        dl.get(i).map(|f| (i, f)).ok_or_else(|| format!("succedent index {i} out of range"))
    };
    let fresh_check =
        |w: &str| -> Result<(), String> { expect(!c.free_vars().contains(w), || format!("eigenvariable `{w}` is free in the conclusion")) };
    let seq = Sequent::new;
    Ok(match rule {
        Axiom => {
            expect(g.len() == 1 && dl.len() == 1 && alpha_equal(&g[0], &dl[0]), || "axiom must be φ ⊢ φ".into())?;
            vec![]
        }
        BotLeft => {
            match p.at {
                Some(_) => expect(*left(p.at)?.1 == Formula::Bottom, || "principal formula is not ⊥".into())?,
                None => expect(g.contains(&Formula::Bottom), || "no ⊥ in the antecedent".into())?,
            }
            vec![]
        }
        TopRight => {
            match p.at {
                Some(_) => expect(*right(p.at)?.1 == Formula::Top, || "principal formula is not ⊤".into())?,
                None => expect(dl.contains(&Formula::Top), || "no ⊤ in the succedent".into())?,
            }
            vec![]
        }
        AndLeft1 | AndLeft2 => {
            let (i, f) = left(p.at)?;
            let Formula::And(a, b) = f else { return Err("principal formula is not a conjunction".into()) };
            let keep = if rule == AndLeft1 { a } else { b };
            vec![seq(replace(g, i, (**keep).clone()), dl.clone())]
        }
        AndRight => {
            let (i, f) = right(p.at)?;
            let Formula::And(a, b) = f else { return Err("principal formula is not a conjunction".into()) };
            vec![seq(g.clone(), replace(dl, i, (**a).clone())), seq(g.clone(), replace(dl, i, (**b).clone()))]
        }
        OrLeft => {
            let (i, f) = left(p.at)?;
            let Formula::Or(a, b) = f else { return Err("principal formula is not a disjunction".into()) };
            vec![seq(replace(g, i, (**a).clone()), dl.clone()), seq(replace(g, i, (**b).clone()), dl.clone())]
        }
        OrRight1 | OrRight2 => {
            let (i, f) = right(p.at)?;
            let Formula::Or(a, b) = f else { return Err("principal formula is not a disjunction".into()) };
            let keep = if rule == OrRight1 { a } else { b };
            vec![seq(g.clone(), replace(dl, i, (**keep).clone()))]
        }
        ImpLeft => {
            let (i, f) = left(p.at)?;
            let Formula::Implies(a, b) = f else { return Err("principal formula is not an implication".into()) };
            let k = p.split.ok_or("missing (split k)")?;
            expect(k <= dl.len(), || "split index out of range".into())?;
            vec![seq(remove(g, i), appended(&dl[..k], (**a).clone())), seq(replace(g, i, (**b).clone()), dl[k..].to_vec())]
        }
        ImpRight => {
            let (i, f) = right(p.at)?;
            let Formula::Implies(a, b) = f else { return Err("principal formula is not an implication".into()) };
            vec![seq(appended(g, (**a).clone()), replace(dl, i, (**b).clone()))]
        }
        ExistsLeft | ForallRight | ForallInRight => {
            let w = p.eigen.as_deref().ok_or("missing (eigen w)")?;
            fresh_check(w)?;
            let wt = Term::var(w);
            match (rule, if rule == ExistsLeft { left(p.at)? } else { right(p.at)? }) {
                (ExistsLeft, (i, Formula::Exists(v, body))) => vec![seq(replace(g, i, substitute(body, v, &wt)), dl.clone())],
                (ForallRight, (i, Formula::Forall(v, body))) => vec![seq(g.clone(), replace(dl, i, substitute(body, v, &wt)))],
                (ForallInRight, (i, Formula::ForallIn(v, s, body))) => {
                    let inst = Formula::or(vocab.notin_atom(wt.clone(), s.clone()), substitute(body, v, &wt));
                    vec![seq(g.clone(), replace(dl, i, inst))]
                }
                _ => return Err("principal formula has the wrong shape".into()),
            }
        }
        ExistsRight | ForallLeft | ForallInLeft => {
            let t = p.witness.as_ref().ok_or("missing (witness t)")?;
            match (rule, if rule == ExistsRight { right(p.at)? } else { left(p.at)? }) {
                (ExistsRight, (i, Formula::Exists(v, body))) => vec![seq(g.clone(), replace(dl, i, substitute(body, v, t)))],
                (ForallLeft, (i, Formula::Forall(v, body))) => vec![seq(replace(g, i, substitute(body, v, t)), dl.clone())],
                (ForallInLeft, (i, Formula::ForallIn(v, s, body))) => {
                    let inst = Formula::or(vocab.notin_atom(t.clone(), s.clone()), substitute(body, v, t));
                    vec![seq(replace(g, i, inst), dl.clone())]
                }
                _ => return Err("principal formula has the wrong shape".into()),
            }
        }
        WeakenLeft => vec![seq(remove(g, left(p.at)?.0), dl.clone())],
        WeakenRight => vec![seq(g.clone(), remove(dl, right(p.at)?.0))],
        Multiset => return Err("the multiset rule has no positional premise".into()),
        Cut | TCut => {
            let (lhs, rhs) = if rule == Cut {
                let f = match (&p.cut_formula, left_premise) {
                    (Some(f), _) => f.clone(),
                    (None, Some(l)) => l.succ.last().cloned().ok_or("left premise has an empty succedent")?,
                    (None, None) => return Err("missing (cut-formula f)".into()),
                };
                (f.clone(), f)
            } else {
                let r = p.axiom.as_ref().ok_or("missing (axiom …)")?;
                let inst = theory.lookup(r).map_err(|e| e.to_string())?.substitute(&p.bindings);
                (inst.antecedent, inst.consequent)
            };
            let k = match (p.split, left_premise) {
                (Some(k), _) => k,
                (None, Some(l)) => l.succ.len().checked_sub(1).ok_or("left premise has an empty succedent")?,
                (None, None) => return Err("missing (split k)".into()),
            };
            expect(k <= dl.len(), || "split index out of range".into())?;
            vec![seq(g.clone(), appended(&dl[..k], lhs)), seq(appended(g, rhs), dl[k..].to_vec())]
        }
    })
}

/// Weakens in the missing formulas of `target` and reorders with one multiset node.
pub fn fit(d: Derivation, target: &Sequent) -> Result<Derivation, String> {
    if d.conclusion.alpha_eq(target) {
        return Ok(d);
    }
    let c = d.conclusion.clone();
    if !subset(&c.ante, &target.ante) || !subset(&c.succ, &target.succ) {
        return Err(format!("cannot fit `{c}` into `{target}`"));
    }
    let mut cur = d;
    for f in &target.ante {
        if !alpha_contains(&cur.conclusion.ante, f) {
            let mut s = cur.conclusion.clone();
            s.ante.push(f.clone());
            let at = s.ante.len() - 1;
            cur = Derivation::new(RuleName::WeakenLeft, RuleParams { at: Some(at), ..Default::default() }, s, vec![cur]);
        }
    }
    for f in &target.succ {
        if !alpha_contains(&cur.conclusion.succ, f) {
            let mut s = cur.conclusion.clone();
            s.succ.push(f.clone());
            let at = s.succ.len() - 1;
            cur = Derivation::new(RuleName::WeakenRight, RuleParams { at: Some(at), ..Default::default() }, s, vec![cur]);
        }
    }
    if cur.conclusion.alpha_eq(target) {
        return Ok(cur);
    }
    Ok(Derivation::new(RuleName::Multiset, RuleParams::default(), target.clone(), vec![cur]))
}

/// Substitution over a whole tree, treating eigenvariables as binders of
/// their premise subtrees.
pub fn substitute_derivation(d: &Derivation, map: &BTreeMap<String, Term>) -> Derivation {
    let mut avoid = d.all_vars();
    for (k, t) in map {
        avoid.insert(k.clone());
        t.free_vars_into(&mut avoid);
    }
    subst_deriv_rec(d, map, &mut avoid)
}

fn subst_deriv_rec(d: &Derivation, map: &BTreeMap<String, Term>, avoid: &mut BTreeSet<String>) -> Derivation {
    if map.is_empty() {
        return d.clone();
    }
    let mut params = d.params.clone();
    params.witness = params.witness.map(|t| t.substitute(map));
    params.cut_formula = params.cut_formula.map(|f| substitute_many(&f, map));
    // T-cut bindings instantiate the axiom's own variables; only their terms are substituted.
    for t in params.bindings.values_mut() {
        *t = t.substitute(map);
    }
    let conclusion = d.conclusion.substitute(map);
    let premises = match &d.params.eigen {
        Some(w) => {
            let mut inner: BTreeMap<String, Term> = map.iter().filter(|(k, _)| *k != w).map(|(k, t)| (k.clone(), t.clone())).collect();
            if inner.values().any(|t| t.contains_var(w)) {
                let fresh = fresh_var(avoid);
                avoid.insert(fresh.clone());
                inner.insert(w.clone(), Term::var(fresh.clone()));
                params.eigen = Some(fresh);
            }
            d.premises.iter().map(|p| subst_deriv_rec(p, &inner, avoid)).collect()
        }
        None => d.premises.iter().map(|p| subst_deriv_rec(p, map, avoid)).collect(),
    };
    Derivation { rule: d.rule, params, conclusion, premises }
}

/// Renames every eigenvariable to a distinct name outside `avoid`.
pub fn regularize(d: &Derivation, avoid: &mut BTreeSet<String>) -> Derivation {
    let mut params = d.params.clone();
    let premises: Vec<Derivation> = match &d.params.eigen {
        Some(w) => {
            let fresh = fresh_var(avoid);
            avoid.insert(fresh.clone());
            params.eigen = Some(fresh.clone());
            let map: BTreeMap<String, Term> = [(w.clone(), Term::var(fresh))].into();
            d.premises.iter().map(|p| regularize(&substitute_derivation(p, &map), avoid)).collect()
        }
        None => d.premises.iter().map(|p| regularize(p, avoid)).collect(),
    };
    Derivation { rule: d.rule, params, conclusion: d.conclusion.clone(), premises }
}

/// Prepends `⊤` to every antecedent and `⊥` to every succedent.
pub fn pad_sequent(s: &Sequent) -> Sequent {
    let mut ante = vec![Formula::Top];
    ante.extend(s.ante.iter().cloned());
    let mut succ = vec![Formula::Bottom];
    succ.extend(s.succ.iter().cloned());
    Sequent { ante, succ }
}

/// The same proof with every sequent padded by `⊤ ⊢ ⊥`; valid in the
/// classical systems (padded sequents have two succedent formulas).
pub fn pad_derivation(d: &Derivation) -> Derivation {
    use RuleName::*;
    let premises: Vec<Derivation> = d.premises.iter().map(pad_derivation).collect();
    let conclusion = pad_sequent(&d.conclusion);
    let mut params = d.params.clone();
    params.at = params.at.map(|i| i + 1);
    match d.rule {
        Axiom => {
            let f = d.conclusion.ante[0].clone();
            let ax = Derivation::axiom(f.clone());
            let s1 = Sequent::new(vec![Formula::Top, f.clone()], vec![f.clone()]);
            let w1 = Derivation::new(WeakenLeft, RuleParams { at: Some(0), ..Default::default() }, s1, vec![ax]);
            Derivation::new(WeakenRight, RuleParams { at: Some(0), ..Default::default() }, conclusion, vec![w1])
        }
        ImpLeft | Cut | TCut => {
            params.split = match d.rule {
                ImpLeft => d.params.split.map(|k| k + 1),
                _ => Some(d.premises[0].conclusion.succ.len()),
            };
            let k = params.split.unwrap_or(0);
            let (first, second) = (&premises[0].conclusion.succ, &premises[1].conclusion.succ);
            let mut succ = first[..k].to_vec();
            succ.extend(second.iter().cloned());
            let raw = Sequent::new(conclusion.ante.clone(), succ);
            let node = Derivation::new(d.rule, params, raw, premises);
            Derivation::new(Multiset, RuleParams::default(), conclusion, vec![node])
        }
        _ => Derivation::new(d.rule, params, conclusion, premises),
    }
}
