//! Deep-inference rewriting: rule schemas, certified steps and deductions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::formula::{
    alpha_equal, is_free_for, positions, rename_bound_away, replace_at, subformula_at, substitute, ContextPath, Formula, Implication,
    PathError, Term,
};
use crate::parser::{render_certificate, render_formula, TheoryRef};
use crate::theories::{AxiomRef, Theory, TheoryError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    R0,
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
    R10,
    R11,
    R12,
    R13,
    R14,
    R14a,
    R15,
}

pub const ALL_RULES: [RuleId; 17] = [
    RuleId::R0,
    RuleId::R1,
    RuleId::R2,
    RuleId::R3,
    RuleId::R4,
    RuleId::R5,
    RuleId::R6,
    RuleId::R7,
    RuleId::R8,
    RuleId::R9,
    RuleId::R10,
    RuleId::R11,
    RuleId::R12,
    RuleId::R13,
    RuleId::R14,
    RuleId::R14a,
    RuleId::R15,
];

const RULE_LABELS: [&str; 17] = ["0", "1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12", "13", "14", "14a", "15"];

impl RuleId {
    pub fn label(self) -> &'static str {
        RULE_LABELS[ALL_RULES.iter().position(|r| *r == self).unwrap()]
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RuleId {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        RULE_LABELS.iter().position(|l| *l == s).map(|i| ALL_RULES[i]).ok_or(())
    }
}

/// RK is classical, RI drops rule 15, RM also drops rule 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    RK,
    RI,
    RM,
}

impl Mode {
    pub fn allows(self, r: RuleId) -> bool {
        match self {
            Mode::RK => true,
            Mode::RI => r != RuleId::R15,
            Mode::RM => r != RuleId::R15 && r != RuleId::R2,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::RK => "rk",
            Mode::RI => "ri",
            Mode::RM => "rm",
        })
    }
}

impl FromStr for Mode {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "rk" => Ok(Mode::RK),
            "ri" => Ok(Mode::RI),
            "rm" => Ok(Mode::RM),
            _ => Err(()),
        }
    }
}

/// Schema parameters of one rule instance.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Params {
    pub phi: Option<Formula>,
    pub psi: Option<Formula>,
    pub chi: Option<Formula>,
    pub v: Option<String>,
    pub t: Option<Term>,
    pub s: Option<Term>,
    pub axiom: Option<AxiomRef>,
    pub bindings: BTreeMap<String, Term>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepCertificate {
    pub rule: RuleId,
    pub path: ContextPath,
    pub params: Params,
}

impl fmt::Display for StepCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_certificate(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum ScriptItem {
    Step {
        cert: StepCertificate,
        yields: Option<Formula>,
    },
    /// A formula whose step certificate is to be inferred.
    Formula(Formula),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeductionScript {
    pub theory: TheoryRef,
    pub from: Formula,
    pub to: Formula,
    pub items: Vec<ScriptItem>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RewriteError {
    #[error("rule {rule} forbidden in mode {mode}")]
    Forbidden { rule: RuleId, mode: Mode },
    #[error("rule {rule} needs parameter `{name}`")]
    MissingParam { rule: RuleId, name: &'static str },
    #[error("rule {rule} takes no parameter `{name}`")]
    UnexpectedParam { rule: RuleId, name: &'static str },
    #[error("side condition of rule {rule} fails: {message}")]
    SideCondition { rule: RuleId, message: String },
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("at {path}: rule expects `{expected}`, found `{found}`")]
    Mismatch { path: ContextPath, expected: String, found: String },
    #[error("step yields `{expected}`, script has `{found}`")]
    ResultMismatch { expected: String, found: String },
}

/// Names of the parameters each rule takes.
fn schema_params(r: RuleId) -> &'static [&'static str] {
    use RuleId::*;
    match r {
        R0 => &["axiom", "bind"],
        R1 | R2 | R5 => &["phi"],
        R3 | R4 | R6 | R7 => &["phi", "psi"],
        R8 => &["phi"],
        R9 => &["chi", "phi", "psi"],
        R10 => &["phi", "v", "t"],
        R11 => &["phi", "v"],
        R12 => &["chi", "phi", "v"],
        R13 => &["phi", "v", "s", "t"],
        R14 | R14a => &["phi", "v", "s"],
        R15 => &["chi", "phi", "v", "s"],
    }
}

fn present(p: &Params) -> Vec<&'static str> {
    let mut out = Vec::new();
    for (name, here) in [
        ("phi", p.phi.is_some()),
        ("psi", p.psi.is_some()),
        ("chi", p.chi.is_some()),
        ("v", p.v.is_some()),
        ("t", p.t.is_some()),
        ("s", p.s.is_some()),
        ("axiom", p.axiom.is_some()),
        ("bind", !p.bindings.is_empty()),
    ] {
        if here {
            out.push(name);
        }
    }
    out
}

/// The concrete implication `lhs ⟹ rhs` of rule `r` under `p`.
pub fn instantiate_rule(r: RuleId, p: &Params, theory: &Theory) -> Result<Implication, RewriteError> {
    use RuleId::*;
    let allowed = schema_params(r);
    if let Some(extra) = present(p).into_iter().find(|n| !allowed.contains(n)) {
        return Err(RewriteError::UnexpectedParam { rule: r, name: extra });
    }
    let need_f = |x: &Option<Formula>, name: &'static str| x.clone().ok_or(RewriteError::MissingParam { rule: r, name });
    let need_t = |x: &Option<Term>, name: &'static str| x.clone().ok_or(RewriteError::MissingParam { rule: r, name });
    let need_v = || p.v.clone().ok_or(RewriteError::MissingParam { rule: r, name: "v" });
    let side = |ok: bool, message: &str| {
        if ok {
            Ok(())
        } else {
            Err(RewriteError::SideCondition { rule: r, message: message.to_string() })
        }
    };
    let imp = Implication::new;
    Ok(match r {
        R0 => {
            let ax = p.axiom.as_ref().ok_or(RewriteError::MissingParam { rule: r, name: "axiom" })?;
            let base = theory.lookup(ax)?;
            let fv = base.free_vars();
            // instances are taken of an α-variant whose bound variables avoid the binding terms
            let avoid: BTreeSet<String> = p.bindings.values().flat_map(Term::free_vars).collect();
            let base = Implication::new(rename_bound_away(&base.antecedent, &avoid), rename_bound_away(&base.consequent, &avoid));
            for (x, t) in &p.bindings {
                side(fv.contains(x), &format!("`{x}` is not a variable of the axiom"))?;
                side(
                    is_free_for(t, x, &base.antecedent) && is_free_for(t, x, &base.consequent),
                    &format!("the term for `{x}` is not free for it"),
                )?;
            }
            base.substitute(&p.bindings)
        }
        R1 => imp(need_f(&p.phi, "phi")?, Formula::Top),
        R2 => imp(Formula::Bottom, need_f(&p.phi, "phi")?),
        R3 => {
            let (a, b) = (need_f(&p.phi, "phi")?, need_f(&p.psi, "psi")?);
            imp(Formula::and(a.clone(), b), a)
        }
        R4 => {
            let (a, b) = (need_f(&p.phi, "phi")?, need_f(&p.psi, "psi")?);
            imp(Formula::and(b, a.clone()), a)
        }
        R5 => {
            let a = need_f(&p.phi, "phi")?;
            imp(a.clone(), Formula::and(a.clone(), a))
        }
        R6 => {
            let (a, b) = (need_f(&p.phi, "phi")?, need_f(&p.psi, "psi")?);
            imp(a.clone(), Formula::or(a, b))
        }
        R7 => {
            let (a, b) = (need_f(&p.phi, "phi")?, need_f(&p.psi, "psi")?);
            imp(a.clone(), Formula::or(b, a))
        }
        R8 => {
            let a = need_f(&p.phi, "phi")?;
            imp(Formula::or(a.clone(), a.clone()), a)
        }
        R9 => {
            let (c, a, b) = (need_f(&p.chi, "chi")?, need_f(&p.phi, "phi")?, need_f(&p.psi, "psi")?);
            imp(Formula::and(c.clone(), Formula::or(a.clone(), b.clone())), Formula::or(Formula::and(c.clone(), a), Formula::and(c, b)))
        }
        R10 => {
            let (a, v, t) = (need_f(&p.phi, "phi")?, need_v()?, need_t(&p.t, "t")?);
            side(is_free_for(&t, &v, &a), "the term is not free for the variable")?;
            imp(substitute(&a, &v, &t), Formula::exists(v, a))
        }
        R11 => {
            let (a, v) = (need_f(&p.phi, "phi")?, need_v()?);
            side(!a.is_free(&v), "the variable is free in φ")?;
            imp(Formula::exists(v, a.clone()), a)
        }
        R12 => {
            let (c, a, v) = (need_f(&p.chi, "chi")?, need_f(&p.phi, "phi")?, need_v()?);
            side(!c.is_free(&v), "the variable is free in χ")?;
            imp(Formula::and(c.clone(), Formula::exists(v.clone(), a.clone())), Formula::exists(v, Formula::and(c, a)))
        }
        R13 => {
            let (a, v, s, t) = (need_f(&p.phi, "phi")?, need_v()?, need_t(&p.s, "s")?, need_t(&p.t, "t")?);
            side(!s.contains_var(&v), "the variable occurs in its bound")?;
            side(is_free_for(&t, &v, &a), "the term is not free for the variable")?;
            imp(
                Formula::forall_in(v.clone(), s.clone(), a.clone()),
                Formula::or(theory.vocab.notin_atom(t.clone(), s), substitute(&a, &v, &t)),
            )
        }
        R14 => {
            let (a, v, s) = (need_f(&p.phi, "phi")?, need_v()?, need_t(&p.s, "s")?);
            side(!s.contains_var(&v), "the variable occurs in its bound")?;
            side(!a.is_free(&v), "the variable is free in φ")?;
            imp(a.clone(), Formula::forall_in(v, s, a))
        }
        R14a => {
            let (a, v, s) = (need_f(&p.phi, "phi")?, need_v()?, need_t(&p.s, "s")?);
            side(!s.contains_var(&v), "the variable occurs in its bound")?;
            let guard = theory.vocab.notin_atom(Term::var(v.clone()), s.clone());
            imp(Formula::forall_in(v.clone(), s.clone(), Formula::or(guard, a.clone())), Formula::forall_in(v, s, a))
        }
        R15 => {
            let (c, a, v, s) = (need_f(&p.chi, "chi")?, need_f(&p.phi, "phi")?, need_v()?, need_t(&p.s, "s")?);
            side(!s.contains_var(&v), "the variable occurs in its bound")?;
            side(!c.is_free(&v), "the variable is free in χ")?;
            imp(Formula::forall_in(v.clone(), s.clone(), Formula::or(c.clone(), a.clone())), Formula::or(c, Formula::forall_in(v, s, a)))
        }
    })
}

/// Applies a certified step to `from`.
pub fn apply_step(from: &Formula, c: &StepCertificate, mode: Mode, theory: &Theory) -> Result<Formula, RewriteError> {
    if !mode.allows(c.rule) {
        return Err(RewriteError::Forbidden { rule: c.rule, mode });
    }
    let inst = instantiate_rule(c.rule, &c.params, theory)?;
    let here = subformula_at(from, &c.path)?;
    if !alpha_equal(here, &inst.antecedent) {
        return Err(RewriteError::Mismatch {
            path: c.path.clone(),
            expected: render_formula(&inst.antecedent),
            found: render_formula(here),
        });
    }
    Ok(replace_at(from, &c.path, &inst.consequent)?)
}

pub fn check_step(from: &Formula, to: &Formula, c: &StepCertificate, mode: Mode, theory: &Theory) -> Result<(), RewriteError> {
    let out = apply_step(from, c, mode, theory)?;
    if alpha_equal(&out, to) {
        Ok(())
    } else {
        Err(RewriteError::ResultMismatch { expected: render_formula(&out), found: render_formula(to) })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InferError {
    #[error("no rule rewrites the first formula into the second")]
    NoRule,
    #[error("the step is ambiguous: {}", render_candidates(.0))]
    Ambiguous(Vec<StepCertificate>),
}

fn render_candidates(cs: &[StepCertificate]) -> String {
    cs.iter().map(render_certificate).collect::<Vec<_>>().join(", ")
}

fn pf(phi: Option<&Formula>, psi: Option<&Formula>, chi: Option<&Formula>) -> Params {
    Params { phi: phi.cloned(), psi: psi.cloned(), chi: chi.cloned(), ..Default::default() }
}

/// Parameter guesses for rewriting `lhs` into `rhs` at one position.
fn candidates(lhs: &Formula, rhs: &Formula, theory: &Theory) -> Vec<(RuleId, Params)> {
    use Formula as F;
    use RuleId::*;
    let mut out = vec![(R1, pf(Some(lhs), None, None)), (R2, pf(Some(rhs), None, None)), (R5, pf(Some(lhs), None, None))];
    if let F::And(a, b) = lhs {
        out.push((R3, pf(Some(a), Some(b), None)));
        out.push((R4, pf(Some(b), Some(a), None)));
        if let F::Or(p, q) = &**b {
            out.push((R9, pf(Some(p), Some(q), Some(a))));
        }
        if let F::Exists(v, body) = &**b {
            out.push((R12, Params { v: Some(v.clone()), ..pf(Some(body), None, Some(a)) }));
        }
    }
    if let F::Or(a, b) = rhs {
        out.push((R6, pf(Some(lhs), Some(b), None)));
        out.push((R7, pf(Some(lhs), Some(a), None)));
    }
    if let F::Or(a, _) = lhs {
        out.push((R8, pf(Some(a), None, None)));
    }
    if let F::Exists(v, body) = rhs {
        let vars: BTreeSet<String> = [v.clone()].into();
        let mut b = BTreeMap::new();
        let t = if crate::formula::match_formula(body, lhs, &vars, &mut b) {
            b.get(v).cloned().unwrap_or_else(|| Term::var(v.clone()))
        } else {
            Term::var(v.clone())
        };
        out.push((R10, Params { v: Some(v.clone()), t: Some(t), ..pf(Some(body), None, None) }));
    }
    if let F::Exists(v, body) = lhs {
        out.push((R11, Params { v: Some(v.clone()), ..pf(Some(body), None, None) }));
    }
    if let F::ForallIn(v, s, body) = lhs {
        if let F::Or(g, _) = rhs {
            if let F::Atom(_, args) = &**g {
                if let Some(t) = args.first() {
                    out.push((R13, Params { v: Some(v.clone()), s: Some(s.clone()), t: Some(t.clone()), ..pf(Some(body), None, None) }));
                }
            }
        }
        if let F::Or(g, rest) = &**body {
            out.push((R14a, Params { v: Some(v.clone()), s: Some(s.clone()), ..pf(Some(rest), None, None) }));
            out.push((R15, Params { v: Some(v.clone()), s: Some(s.clone()), ..pf(Some(rest), None, Some(g)) }));
        }
    }
    if let F::ForallIn(v, s, body) = rhs {
        out.push((R14, Params { v: Some(v.clone()), s: Some(s.clone()), ..pf(Some(body), None, None) }));
    }
    if let Some((axiom, bindings)) = theory.recognize(&Implication::new(lhs.clone(), rhs.clone())) {
        out.push((R0, Params { axiom: Some(axiom), bindings, ..Default::default() }));
    }
    out
}

/// Reconstructs the certificate of a step; paths are tried outside-in.
pub fn infer_step(from: &Formula, to: &Formula, mode: Mode, theory: &Theory) -> Result<StepCertificate, InferError> {
    let mut found: Vec<StepCertificate> = Vec::new();
    for path in positions(from) {
        let Ok(rhs) = subformula_at(to, &path) else { continue };
        let Ok(same) = replace_at(from, &path, rhs) else { continue };
        if !alpha_equal(&same, to) {
            continue;
        }
        let lhs = subformula_at(from, &path).expect("position of from");
        for (rule, params) in candidates(lhs, rhs, theory) {
            let c = StepCertificate { rule, path: path.clone(), params };
            if check_step(from, to, &c, mode, theory).is_ok() && !found.contains(&c) {
                found.push(c);
            }
        }
    }
    match found.len() {
        0 => Err(InferError::NoRule),
        1 => Ok(found.pop().unwrap()),
        _ => Err(InferError::Ambiguous(found)),
    }
}

/// A checked deduction with every formula and certificate filled in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedDeduction {
    pub formulas: Vec<Formula>,
    pub certificates: Vec<StepCertificate>,
}

impl CheckedDeduction {
    pub fn steps(&self) -> usize {
        self.certificates.len()
    }

    /// The fully certified script.
    pub fn to_script(&self, theory: TheoryRef) -> DeductionScript {
        DeductionScript {
            theory,
            from: self.formulas[0].clone(),
            to: self.formulas.last().unwrap().clone(),
            items: self
                .certificates
                .iter()
                .zip(&self.formulas[1..])
                .map(|(c, f)| ScriptItem::Step { cert: c.clone(), yields: Some(f.clone()) })
                .collect(),
        }
    }

    /// The implications `ξ(i-1) ⇒ ξ(i)`.
    pub fn links(&self) -> Vec<Implication> {
        self.formulas.windows(2).map(|w| Implication::new(w[0].clone(), w[1].clone())).collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeductionError {
    #[error("step {index}: {source}")]
    Step { index: usize, source: RewriteError },
    #[error("step {index}: {source}")]
    Infer { index: usize, source: InferError },
    #[error("deduction ends in `{found}`, not the declared `{expected}`")]
    Endpoint { expected: String, found: String },
}

/// Checks a script; steps are numbered from 1.
pub fn check_deduction(s: &DeductionScript, theory: &Theory, mode: Mode) -> Result<CheckedDeduction, DeductionError> {
    let mut formulas = vec![s.from.clone()];
    let mut certificates = Vec::new();
    for (i, item) in s.items.iter().enumerate() {
        let index = i + 1;
        let cur = formulas.last().unwrap();
        let (cert, next) = match item {
            ScriptItem::Step { cert, yields } => {
                let out = apply_step(cur, cert, mode, theory).map_err(|source| DeductionError::Step { index, source })?;
                match yields {
                    Some(y) if !alpha_equal(&out, y) => {
                        return Err(DeductionError::Step {
                            index,
                            source: RewriteError::ResultMismatch { expected: render_formula(&out), found: render_formula(y) },
                        })
                    }
                    Some(y) => (cert.clone(), y.clone()),
                    None => (cert.clone(), out),
                }
            }
            ScriptItem::Formula(f) => {
                let c = infer_step(cur, f, mode, theory).map_err(|source| DeductionError::Infer { index, source })?;
                (c, f.clone())
            }
        };
        certificates.push(cert);
        formulas.push(next);
    }
    let last = formulas.last().unwrap();
    if !alpha_equal(last, &s.to) {
        return Err(DeductionError::Endpoint { expected: render_formula(&s.to), found: render_formula(last) });
    }
    Ok(CheckedDeduction { formulas, certificates })
}

/// Joins two checked deductions whose endpoints meet.
pub fn concatenate(a: &CheckedDeduction, b: &CheckedDeduction) -> Option<CheckedDeduction> {
    if !alpha_equal(a.formulas.last()?, b.formulas.first()?) {
        return None;
    }
    let mut formulas = a.formulas.clone();
    formulas.extend(b.formulas[1..].iter().cloned());
    let mut certificates = a.certificates.clone();
    certificates.extend(b.certificates.iter().cloned());
    Some(CheckedDeduction { formulas, certificates })
}

/// Lifts every step of `d` under `prefix`; the context around it is `outer`.
pub fn lift(d: &CheckedDeduction, outer: &Formula, prefix: &ContextPath) -> Result<CheckedDeduction, PathError> {
    let formulas = d.formulas.iter().map(|f| replace_at(outer, prefix, f)).collect::<Result<Vec<_>, _>>()?;
    let certificates = d.certificates.iter().map(|c| StepCertificate { path: c.path.under(prefix), ..c.clone() }).collect();
    Ok(CheckedDeduction { formulas, certificates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Selector, Vocabulary};
    use crate::parser::{parse_deduction, parse_formula};

    fn theory() -> Theory {
        let v = Vocabulary::default()
            .with_relation("A", 0)
            .with_relation("B", 0)
            .with_relation("C", 0)
            .with_relation("R", 1)
            .with_relation("Q", 1)
            .with_function("0", 0)
            .with_function("S", 1);
        Theory::empty("t", v)
    }

    fn f(s: &str) -> Formula {
        parse_formula(s, &theory().vocab).unwrap()
    }

    #[test]
    fn rule_nine_and_fourteen_a() {
        let t = theory();
        let p = Params { chi: Some(f("C")), phi: Some(f("A")), psi: Some(f("B")), ..Default::default() };
        let i = instantiate_rule(RuleId::R9, &p, &t).unwrap();
        assert_eq!(i.antecedent, f("(and C (or A B))"));
        assert_eq!(i.consequent, f("(or (and C A) (and C B))"));
        let p = Params { v: Some("v".into()), s: Some(Term::var("s")), phi: Some(f("(R v)")), ..Default::default() };
        let i = instantiate_rule(RuleId::R14a, &p, &t).unwrap();
        assert_eq!(i.antecedent, f("(forallin v s (or (notin v s) (R v)))"));
        assert_eq!(i.consequent, f("(forallin v s (R v))"));
    }

    #[test]
    fn axiom_instance_renames_captured_binder() {
        let mut t = theory();
        t.vocab = t.vocab.clone().with_relation("P", 2);
        let g = |s: &str| parse_formula(s, &t.vocab).unwrap();
        let back = Implication::new(g("(Q y)"), g("(exists z (P z y))"));
        t.axioms.push(("back".into(), back));
        let mut bindings = BTreeMap::new();
        bindings.insert("y".to_string(), Term::var("z"));
        let p = Params { axiom: Some(AxiomRef::named("back")), bindings, ..Default::default() };
        let i = instantiate_rule(RuleId::R0, &p, &t).unwrap();
        assert_eq!(i.antecedent, f("(Q z)"));
        match &i.consequent {
            Formula::Exists(w, body) => {
                assert_ne!(w, "z");
                assert!(body.free_vars().contains("z"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rule_twelve_side_condition() {
        let p = Params { chi: Some(f("(R v)")), phi: Some(f("(Q v)")), v: Some("v".into()), ..Default::default() };
        assert!(matches!(instantiate_rule(RuleId::R12, &p, &theory()), Err(RewriteError::SideCondition { .. })));
    }

    #[test]
    fn steps_at_root_and_under_binders() {
        let t = theory();
        let c = StepCertificate { rule: RuleId::R5, path: ContextPath::root(), params: pf(Some(&f("(and A B)")), None, None) };
        assert!(check_step(&f("(and A B)"), &f("(and (and A B) (and A B))"), &c, Mode::RK, &t).is_ok());
        let c = StepCertificate {
            rule: RuleId::R2,
            path: ContextPath(vec![Selector::Body, Selector::Right]),
            params: pf(Some(&f("(Q x)")), None, None),
        };
        assert!(check_step(&f("(exists x (and (R x) bot))"), &f("(exists x (and (R x) (Q x)))"), &c, Mode::RK, &t).is_ok());
        assert!(check_step(&f("(exists x (and (R x) bot))"), &f("(exists x (and (R x) (Q x)))"), &c, Mode::RM, &t).is_err());
    }

    #[test]
    fn rule_fifteen_forbidden_in_ri() {
        let t = theory();
        let p = Params { chi: Some(f("A")), phi: Some(f("(R v)")), v: Some("v".into()), s: Some(Term::var("s")), ..Default::default() };
        let c = StepCertificate { rule: RuleId::R15, path: ContextPath::root(), params: p };
        let from = f("(forallin v s (or A (R v)))");
        let to = f("(or A (forallin v s (R v)))");
        assert!(check_step(&from, &to, &c, Mode::RK, &t).is_ok());
        assert_eq!(check_step(&from, &to, &c, Mode::RI, &t), Err(RewriteError::Forbidden { rule: RuleId::R15, mode: Mode::RI }));
    }

    #[test]
    fn commutation_chain_and_empty_script() {
        let text = "(deduction (theory (vocab (rel A 0) (rel B 0)))
          (from (and A B)) (to (and B A))
          (step 5 (params (phi (and A B))))
          (step 4 (at l) (params (phi B) (psi A)))
          (step 3 (at r) (params (phi A) (psi B))))";
        let (s, t) = parse_deduction(text, None).unwrap();
        let d = check_deduction(&s, &t, Mode::RM).unwrap();
        assert_eq!(d.formulas[2], f("(and B (and A B))"));
        let empty = "(deduction (theory (vocab (rel A 0))) (from A) (to A))";
        let (s, t) = parse_deduction(empty, None).unwrap();
        assert_eq!(check_deduction(&s, &t, Mode::RK).unwrap().steps(), 0);
    }

    #[test]
    fn inference() {
        let t = theory();
        let c = infer_step(&f("(R (S 0))"), &f("(exists v (R v))"), Mode::RK, &t).unwrap();
        assert_eq!(c.rule, RuleId::R10);
        assert_eq!(c.params.t, Some(Term::app("S", vec![Term::constant("0")])));
        match infer_step(&f("A"), &f("(or A A)"), Mode::RK, &t) {
            Err(InferError::Ambiguous(cs)) => {
                let rules: Vec<RuleId> = cs.iter().map(|c| c.rule).collect();
                assert!(rules.contains(&RuleId::R6) && rules.contains(&RuleId::R7));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(infer_step(&Formula::Top, &f("A"), Mode::RK, &t), Err(InferError::NoRule));
    }
}
