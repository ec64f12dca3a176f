//! Translations between sequent derivations and rewriting deductions.
//!
//! * [`lk_to_lksigma`]: cut-free classical derivations of `T̄, φ ⊢ ψ` to
//!   derivations with theory cuts.
//! * [`lksigma_to_rewrite`]: derivations with theory cuts to deductions.
//! * [`rewrite_to_lk`]: deductions to derivations of `T̄ ⊢ ∀(φ ⇒ ψ)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::calculus::{fit, substitute_derivation, Derivation, RuleName, RuleParams, Sequent, System};
use crate::formula::{
    alpha_equal, fresh_var, subformula_at, substitute, universal_closure, ContextPath, Formula, Selector, Term, Vocabulary,
};
use crate::rewrite::{apply_step, instantiate_rule, CheckedDeduction, Mode, Params, RuleId, StepCertificate};
use crate::theories::Theory;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranslateError {
    #[error("the derivation contains cuts")]
    NotCutFree,
    #[error("conclusion has the wrong shape: {0}")]
    Shape(String),
    #[error("step {0} uses rule 15, which has no intuitionistic derivation")]
    Rule15(usize),
    #[error("cannot translate: {0}")]
    Unsupported(String),
    #[error("illegal rule instance: {0}")]
    Instance(String),
    #[error("output fails to check: {0}")]
    Rejected(String),
}

type Result<T> = std::result::Result<T, TranslateError>;

fn l(p: &ContextPath) -> ContextPath {
    p.child(Selector::Left)
}

fn r(p: &ContextPath) -> ContextPath {
    p.child(Selector::Right)
}

fn b(p: &ContextPath) -> ContextPath {
    p.child(Selector::Body)
}

fn root() -> ContextPath {
    ContextPath::root()
}

fn phi(a: &Formula) -> Params {
    Params { phi: Some(a.clone()), ..Params::default() }
}

fn phi_psi(a: &Formula, c: &Formula) -> Params {
    Params { phi: Some(a.clone()), psi: Some(c.clone()), ..Params::default() }
}

fn chi_phi_psi(x: &Formula, a: &Formula, c: &Formula) -> Params {
    Params { chi: Some(x.clone()), phi: Some(a.clone()), psi: Some(c.clone()), ..Params::default() }
}

fn bounded(a: &Formula, v: &str, s: &Term) -> Params {
    Params { phi: Some(a.clone()), v: Some(v.to_string()), s: Some(s.clone()), ..Params::default() }
}

fn index_of(list: &[Formula], f: &Formula) -> Result<usize> {
    list.iter()
        .position(|g| alpha_equal(g, f))
        .ok_or_else(|| TranslateError::Unsupported(format!("`{}` is missing from a sequent", crate::parser::render_formula(f))))
}

fn without(list: &[Formula], i: usize) -> Vec<Formula> {
    let mut v = list.to_vec();
    v.remove(i);
    v
}

/// Where element `k` of a list goes after removing index `i` and appending it.
fn moved_last(len: usize, i: usize) -> Vec<Pick<'static>> {
    (0..len)
        .map(|k| {
            (
                if k == i {
                    len - 1
                } else if k < i {
                    k
                } else {
                    k - 1
                },
                None,
            )
        })
        .collect()
}

/// A source index plus an optional deduction applied to that element.
type Pick<'d> = (usize, Option<&'d CheckedDeduction>);

fn plain(idx: impl IntoIterator<Item = usize>) -> Vec<Pick<'static>> {
    idx.into_iter().map(|i| (i, None)).collect()
}

/// A deduction under construction; every step is checked as it is added.
struct Chain<'t> {
    theory: &'t Theory,
    formulas: Vec<Formula>,
    certificates: Vec<StepCertificate>,
}

impl<'t> Chain<'t> {
    fn new(theory: &'t Theory, start: Formula) -> Self {
        Chain { theory, formulas: vec![start], certificates: Vec::new() }
    }

    fn cur(&self) -> &Formula {
        self.formulas.last().unwrap()
    }

    fn at(&self, p: &ContextPath) -> Result<Formula> {
        subformula_at(self.cur(), p).cloned().map_err(|e| TranslateError::Unsupported(e.to_string()))
    }

    fn step(&mut self, rule: RuleId, path: &ContextPath, params: Params) -> Result<()> {
        let c = StepCertificate { rule, path: path.clone(), params };
        let next = apply_step(self.cur(), &c, Mode::RK, self.theory)
            .map_err(|e| TranslateError::Instance(format!("rule {rule} at {path}: {e}")))?;
        self.formulas.push(next);
        self.certificates.push(c);
        Ok(())
    }

    fn splice(&mut self, d: Option<&CheckedDeduction>, at: &ContextPath) -> Result<()> {
        for c in d.map(|d| d.certificates.as_slice()).unwrap_or_default() {
            self.step(c.rule, &c.path.under(at), c.params.clone())?;
        }
        Ok(())
    }

    fn finish(self) -> CheckedDeduction {
        CheckedDeduction { formulas: self.formulas, certificates: self.certificates }
    }

    /// `⋀src` at `at` becomes `src[j]`.
    fn project(&mut self, at: &ContextPath, src: &[Formula], j: usize) -> Result<()> {
        let mut n = src.len();
        while n > 1 {
            let init = Formula::conj(&src[..n - 1]);
            if j == n - 1 {
                return self.step(RuleId::R4, at, phi_psi(&src[n - 1], &init));
            }
            self.step(RuleId::R3, at, phi_psi(&init, &src[n - 1]))?;
            n -= 1;
        }
        Ok(())
    }

    /// `⋀src` at `at` becomes the conjunction of the picked conjuncts.
    fn conj_build(&mut self, at: &ContextPath, src: &[Formula], picks: &[Pick]) -> Result<()> {
        match picks.len() {
            0 if src.is_empty() => Ok(()),
            0 => self.step(RuleId::R1, at, phi(&Formula::conj(src))),
            1 => {
                self.project(at, src, picks[0].0)?;
                self.splice(picks[0].1, at)
            }
            m => {
                self.step(RuleId::R5, at, phi(&Formula::conj(src)))?;
                self.conj_build(&l(at), src, &picks[..m - 1])?;
                self.project(&r(at), src, picks[m - 1].0)?;
                self.splice(picks[m - 1].1, &r(at))
            }
        }
    }

    /// `dst[j]` at `at` becomes `⋁dst`.
    fn inject(&mut self, at: &ContextPath, dst: &[Formula], j: usize) -> Result<()> {
        let m = dst.len();
        if m <= 1 {
            return Ok(());
        }
        if j == m - 1 {
            return self.step(RuleId::R7, at, phi_psi(&dst[m - 1], &Formula::disj(&dst[..m - 1])));
        }
        self.step(RuleId::R6, at, phi_psi(&dst[j], &dst[m - 1]))?;
        self.inject(&l(at), &dst[..m - 1], j)
    }

    /// A disjunction at `at`, one disjunct per pick, becomes `⋁dst`; pick
    /// `(j, d)` sends its disjunct through `d` to `dst[j]`.
    fn disj_build(&mut self, at: &ContextPath, dst: &[Formula], picks: &[Pick]) -> Result<()> {
        match picks.len() {
            0 if dst.is_empty() => Ok(()),
            0 => self.step(RuleId::R2, at, phi(&Formula::disj(dst))),
            1 => {
                self.splice(picks[0].1, at)?;
                self.inject(at, dst, picks[0].0)
            }
            n => {
                self.disj_build(&l(at), dst, &picks[..n - 1])?;
                self.splice(picks[n - 1].1, &r(at))?;
                self.inject(&r(at), dst, picks[n - 1].0)?;
                self.step(RuleId::R8, at, phi(&Formula::disj(dst)))
            }
        }
    }

    /// `(c ∨ a) ∧ (c ∨ b)` at `at` becomes `c ∨ (a ∧ b)`.
    fn distribute(&mut self, at: &ContextPath, c: &Formula, a: &Formula, b: &Formula) -> Result<()> {
        use RuleId::*;
        let p = |sel: &[Selector]| ContextPath(sel.to_vec()).under(at);
        use Selector::{Left as L, Right as R};
        let ca = Formula::or(c.clone(), a.clone());
        let ba = Formula::and(b.clone(), a.clone());
        let ab = Formula::and(a.clone(), b.clone());
        self.step(R9, &p(&[]), chi_phi_psi(&ca, c, b))?;
        self.step(R4, &p(&[L]), phi_psi(c, &ca))?;
        self.step(R5, &p(&[R]), phi(&Formula::and(ca.clone(), b.clone())))?;
        self.step(R3, &p(&[R, R]), phi_psi(&ca, b))?;
        self.step(R4, &p(&[R, L]), phi_psi(b, &ca))?;
        self.step(R9, &p(&[R]), chi_phi_psi(b, c, a))?;
        self.step(R5, &p(&[R, R]), phi(&ba))?;
        self.step(R3, &p(&[R, R, R]), phi_psi(b, a))?;
        self.step(R4, &p(&[R, R, L]), phi_psi(a, b))?;
        self.step(R4, &p(&[R, L]), phi_psi(c, b))?;
        self.step(R6, &p(&[L]), phi_psi(c, &ab))?;
        self.step(R8, &p(&[]), phi(&Formula::or(c.clone(), ab)))
    }

    /// `∀w∈s φ(w)` at `at` becomes `∀v∈s φ` through rules 14, 13 and 14a.
    /// Skipped when the names agree or a side condition fails; the two
    /// formulas are α-equal either way.
    fn rename_bounded(&mut self, at: &ContextPath, w: &str, v: &str) -> Result<()> {
        if w == v {
            return Ok(());
        }
        let Formula::ForallIn(_, s, body) = self.at(at)? else { return Ok(()) };
        let body = (*body).clone();
        let mut trial = Chain { theory: self.theory, formulas: vec![self.cur().clone()], certificates: Vec::new() };
        let inner = Formula::forall_in(w, s.clone(), body.clone());
        let back = substitute(&body, w, &Term::var(v));
        let ok = trial.step(RuleId::R14, at, bounded(&inner, v, &s)).is_ok()
            && trial.step(RuleId::R13, &b(at), Params { t: Some(Term::var(v)), ..bounded(&body, w, &s) }).is_ok()
            && trial.step(RuleId::R14a, at, bounded(&back, v, &s)).is_ok();
        if ok {
            self.formulas.extend(trial.formulas.into_iter().skip(1));
            self.certificates.extend(trial.certificates);
        }
        Ok(())
    }
}

// ------------------------------------------------------------ derivation → deduction

fn premise(d: &Derivation, i: usize) -> &Sequent {
    &d.premises[i].conclusion
}

/// A deduction from `⋀Γ` to `⋁Δ` for the conclusion `Γ ⊢ Δ` of `d`, where
/// the empty conjunction is `⊤` and the empty disjunction `⊥`.
fn deduce(d: &Derivation, theory: &Theory) -> Result<CheckedDeduction> {
    use RuleName::*;
    let (g, dl) = (&d.conclusion.ante, &d.conclusion.succ);
    let mut ch = Chain::new(theory, Formula::conj(g));
    let at = |p: Option<usize>| p.ok_or_else(|| TranslateError::Unsupported(format!("{} without (at i)", d.rule)));
    let sub: Vec<CheckedDeduction> = d.premises.iter().map(|p| deduce(p, theory)).collect::<Result<_>>()?;
    let o = root();
    match d.rule {
        Axiom => {}
        BotLeft => {
            let i = match d.params.at {
                Some(i) => i,
                None => index_of(g, &Formula::Bottom)?,
            };
            ch.conj_build(&o, g, &plain([i]))?;
            if !dl.is_empty() {
                ch.step(RuleId::R2, &o, phi(&Formula::disj(dl)))?;
            }
        }
        TopRight => {
            let i = match d.params.at {
                Some(i) => i,
                None => index_of(dl, &Formula::Top)?,
            };
            if !g.is_empty() {
                ch.step(RuleId::R1, &o, phi(&Formula::conj(g)))?;
            }
            ch.disj_build(&o, dl, &plain([i]))?;
        }
        WeakenLeft => {
            let i = at(d.params.at)?;
            ch.conj_build(&o, g, &plain((0..g.len()).filter(|k| *k != i)))?;
            ch.splice(Some(&sub[0]), &o)?;
        }
        WeakenRight => {
            let i = at(d.params.at)?;
            ch.splice(Some(&sub[0]), &o)?;
            ch.disj_build(&o, dl, &plain((0..dl.len()).filter(|k| *k != i)))?;
        }
        Multiset => {
            let p = premise(d, 0);
            let picks = p.ante.iter().map(|f| index_of(g, f)).collect::<Result<Vec<_>>>()?;
            ch.conj_build(&o, g, &plain(picks))?;
            ch.splice(Some(&sub[0]), &o)?;
            let picks = p.succ.iter().map(|f| index_of(dl, f)).collect::<Result<Vec<_>>>()?;
            ch.disj_build(&o, dl, &plain(picks))?;
        }
        AndLeft1 | AndLeft2 | ForallInLeft => {
            let i = at(d.params.at)?;
            let mut e = Chain::new(theory, g[i].clone());
            match (&g[i], d.rule) {
                (Formula::And(x, y), AndLeft1) => e.step(RuleId::R3, &o, phi_psi(x, y))?,
                (Formula::And(x, y), AndLeft2) => e.step(RuleId::R4, &o, phi_psi(y, x))?,
                (Formula::ForallIn(v, s, body), ForallInLeft) => {
                    let t = d.params.witness.clone().ok_or_else(|| TranslateError::Unsupported("missing witness".into()))?;
                    e.step(RuleId::R13, &o, Params { t: Some(t), ..bounded(body, v, s) })?
                }
                _ => return Err(TranslateError::Unsupported(format!("{} on the wrong shape", d.rule))),
            }
            let e = e.finish();
            let picks: Vec<Pick> = (0..g.len()).map(|k| (k, (k == i).then_some(&e))).collect();
            ch.conj_build(&o, g, &picks)?;
            ch.splice(Some(&sub[0]), &o)?;
        }
        OrRight1 | OrRight2 | ExistsRight => {
            let i = at(d.params.at)?;
            let p = premise(d, 0);
            let mut e = Chain::new(theory, p.succ[i].clone());
            match (&dl[i], d.rule) {
                (Formula::Or(_, y), OrRight1) => e.step(RuleId::R6, &o, phi_psi(&p.succ[i], y))?,
                (Formula::Or(x, _), OrRight2) => e.step(RuleId::R7, &o, phi_psi(&p.succ[i], x))?,
                (Formula::Exists(v, body), ExistsRight) => {
                    let t = d.params.witness.clone().ok_or_else(|| TranslateError::Unsupported("missing witness".into()))?;
                    e.step(RuleId::R10, &o, Params { v: Some(v.clone()), t: Some(t), ..phi(body) })?
                }
                _ => return Err(TranslateError::Unsupported(format!("{} on the wrong shape", d.rule))),
            }
            let e = e.finish();
            ch.splice(Some(&sub[0]), &o)?;
            let picks: Vec<Pick> = (0..dl.len()).map(|k| (k, (k == i).then_some(&e))).collect();
            ch.disj_build(&o, dl, &picks)?;
        }
        AndRight => {
            let i = at(d.params.at)?;
            let Formula::And(x, y) = &dl[i] else { return Err(TranslateError::Unsupported("and-right on the wrong shape".into())) };
            ch.step(RuleId::R5, &o, phi(&Formula::conj(g)))?;
            ch.splice(Some(&sub[0]), &l(&o))?;
            ch.splice(Some(&sub[1]), &r(&o))?;
            let rest = without(dl, i);
            if !rest.is_empty() {
                let to_end = moved_last(dl.len(), i);
                let mut with_x = rest.clone();
                with_x.push((**x).clone());
                ch.disj_build(&l(&o), &with_x, &to_end)?;
                let mut with_y = rest.clone();
                with_y.push((**y).clone());
                ch.disj_build(&r(&o), &with_y, &to_end)?;
                ch.distribute(&o, &Formula::disj(&rest), x, y)?;
                let back: Vec<Pick> = (0..dl.len()).filter(|k| *k != i).chain([i]).map(|k| (k, None)).collect();
                ch.disj_build(&o, dl, &back)?;
            }
        }
        OrLeft => {
            let i = at(d.params.at)?;
            let Formula::Or(x, y) = &g[i] else { return Err(TranslateError::Unsupported("or-left on the wrong shape".into())) };
            let rest = without(g, i);
            if !rest.is_empty() {
                let order: Vec<usize> = (0..g.len()).filter(|k| *k != i).chain([i]).collect();
                ch.conj_build(&o, g, &plain(order))?;
                let r_all = Formula::conj(&rest);
                ch.step(RuleId::R9, &o, chi_phi_psi(&r_all, x, y))?;
                let back_picks = moved_last(g.len(), i);
                let mut with_x = rest.clone();
                with_x.push((**x).clone());
                ch.conj_build(&l(&o), &with_x, &back_picks)?;
                let mut with_y = rest.clone();
                with_y.push((**y).clone());
                ch.conj_build(&r(&o), &with_y, &back_picks)?;
            }
            ch.splice(Some(&sub[0]), &l(&o))?;
            ch.splice(Some(&sub[1]), &r(&o))?;
            ch.step(RuleId::R8, &o, phi(&Formula::disj(dl)))?;
        }
        ExistsLeft => {
            let i = at(d.params.at)?;
            let Formula::Exists(v, body) = &g[i] else { return Err(TranslateError::Unsupported("exists-left on the wrong shape".into())) };
            let w = d.params.eigen.clone().ok_or_else(|| TranslateError::Unsupported("missing eigenvariable".into()))?;
            let inst = substitute(body, v, &Term::var(w.clone()));
            let rest = without(g, i);
            if rest.is_empty() {
                if *v != w {
                    let renamed = Params { v: Some(w.clone()), t: Some(Term::var(v.clone())), ..phi(&inst) };
                    ch.step(RuleId::R10, &b(&o), renamed)?;
                    let inner = Formula::exists(w.clone(), inst.clone());
                    ch.step(RuleId::R11, &o, Params { v: Some(v.clone()), ..phi(&inner) })?;
                }
            } else {
                let order: Vec<usize> = (0..g.len()).filter(|k| *k != i).chain([i]).collect();
                ch.conj_build(&o, g, &plain(order))?;
                let r_all = Formula::conj(&rest);
                ch.step(RuleId::R12, &o, Params { chi: Some(r_all), v: Some(w.clone()), ..phi(&inst) })?;
                let mut with_inst = rest.clone();
                with_inst.push(inst.clone());
                ch.conj_build(&b(&o), &with_inst, &moved_last(g.len(), i))?;
            }
            ch.splice(Some(&sub[0]), &b(&o))?;
            ch.step(RuleId::R11, &o, Params { v: Some(w), ..phi(&Formula::disj(dl)) })?;
        }
        ForallInRight => {
            let i = at(d.params.at)?;
            let Formula::ForallIn(v, s, body) = &dl[i] else {
                return Err(TranslateError::Unsupported("forallin-right on the wrong shape".into()));
            };
            let w = d.params.eigen.clone().ok_or_else(|| TranslateError::Unsupported("missing eigenvariable".into()))?;
            let inst = substitute(body, v, &Term::var(w.clone()));
            let guarded = Formula::or(theory.vocab.notin_atom(Term::var(w.clone()), s.clone()), inst.clone());
            ch.step(RuleId::R14, &o, bounded(&Formula::conj(g), &w, s))?;
            ch.splice(Some(&sub[0]), &b(&o))?;
            let rest = without(dl, i);
            if rest.is_empty() {
                ch.step(RuleId::R14a, &o, bounded(&inst, &w, s))?;
                ch.rename_bounded(&o, &w, v)?;
            } else {
                let mut with_g = rest.clone();
                with_g.push(guarded.clone());
                ch.disj_build(&b(&o), &with_g, &moved_last(dl.len(), i))?;
                let r_all = Formula::disj(&rest);
                ch.step(RuleId::R15, &o, Params { chi: Some(r_all), ..bounded(&guarded, &w, s) })?;
                ch.step(RuleId::R14a, &r(&o), bounded(&inst, &w, s))?;
                ch.rename_bounded(&r(&o), &w, v)?;
                let back: Vec<Pick> = (0..dl.len()).filter(|k| *k != i).chain([i]).map(|k| (k, None)).collect();
                ch.disj_build(&o, dl, &back)?;
            }
        }
        TCut => {
            let p0 = premise(d, 0);
            let k = p0.succ.len() - 1;
            let a = p0.succ[k].clone();
            let bq = premise(d, 1).ante.last().cloned().ok_or_else(|| TranslateError::Unsupported("t-cut premise".into()))?;
            let lg = Formula::conj(g);
            let rd = Formula::disj(dl);
            ch.step(RuleId::R5, &o, phi(&lg))?;
            ch.splice(Some(&sub[0]), &r(&o))?;
            if dl.is_empty() {
                ch.step(RuleId::R7, &r(&o), phi_psi(&a, &Formula::Bottom))?;
            } else {
                let mut with_a = dl.clone();
                with_a.push(a.clone());
                let picks: Vec<Pick> = (0..=k).map(|j| (if j == k { dl.len() } else { j }, None)).collect();
                ch.disj_build(&r(&o), &with_a, &picks)?;
            }
            ch.step(RuleId::R9, &o, chi_phi_psi(&lg, &rd, &a))?;
            let axiom = d.params.axiom.clone().ok_or_else(|| TranslateError::Unsupported("t-cut without axiom".into()))?;
            let cert = Params { axiom: Some(axiom), bindings: d.params.bindings.clone(), ..Params::default() };
            ch.step(RuleId::R0, &r(&r(&o)), cert)?;
            if g.is_empty() {
                ch.step(RuleId::R4, &r(&o), phi_psi(&bq, &Formula::Top))?;
            }
            ch.splice(Some(&sub[1]), &r(&o))?;
            ch.disj_build(&r(&o), dl, &plain(k..dl.len()))?;
            ch.step(RuleId::R4, &l(&o), phi_psi(&rd, &lg))?;
            ch.step(RuleId::R8, &o, phi(&rd))?;
        }
        ImpLeft | ImpRight | ForallLeft | ForallRight | Cut => {
            return Err(TranslateError::Unsupported(format!("{} is not a rule of the Σ calculi", d.rule)))
        }
    }
    let out = ch.finish();
    let end = out.formulas.last().unwrap();
    if !alpha_equal(end, &Formula::disj(dl)) {
        return Err(TranslateError::Unsupported(format!(
            "{} node produced `{}` instead of `{}`",
            d.rule,
            crate::parser::render_formula(end),
            crate::parser::render_formula(&Formula::disj(dl))
        )));
    }
    Ok(out)
}

/// A deduction from `φ` to `ψ` for a derivation of `φ ⊢ ψ` with theory cuts.
/// Uses rule 15 only for a bounded right-∀ with other succedent formulas, so
/// single-succedent derivations give deductions valid in mode RI.
pub fn lksigma_to_rewrite(d: &Derivation, theory: &Theory) -> Result<CheckedDeduction> {
    let c = &d.conclusion;
    if c.ante.len() != 1 || c.succ.len() != 1 {
        return Err(TranslateError::Shape(format!("expected φ ⊢ ψ, found `{c}`")));
    }
    deduce(d, theory)
}

// ------------------------------------------------------------ deduction → derivation

fn node(rule: RuleName, params: RuleParams, ante: Vec<Formula>, succ: Vec<Formula>, premises: Vec<Derivation>) -> Derivation {
    Derivation::new(rule, params, Sequent::new(ante, succ), premises)
}

fn at(i: usize) -> RuleParams {
    RuleParams { at: Some(i), ..RuleParams::default() }
}

fn eigen(i: usize, w: &str) -> RuleParams {
    RuleParams { at: Some(i), eigen: Some(w.to_string()), ..RuleParams::default() }
}

fn witness(i: usize, t: Term) -> RuleParams {
    RuleParams { at: Some(i), witness: Some(t), ..RuleParams::default() }
}

/// `ante ⊢ succ` by weakening the axiom `f ⊢ f`.
fn weak_axiom(ante: &[Formula], succ: &[Formula], f: &Formula) -> Derivation {
    fit(Derivation::axiom(f.clone()), &Sequent::new(ante.to_vec(), succ.to_vec())).expect("f occurs on both sides")
}

/// `v` itself when it is not free in `s`, otherwise a fresh name.
fn eigen_name(v: &str, s: &[&Formula]) -> String {
    if s.iter().all(|f| !f.is_free(v)) {
        return v.to_string();
    }
    let mut avoid = BTreeSet::new();
    for f in s {
        f.all_vars_into(&mut avoid);
    }
    fresh_var(&avoid)
}

fn with(xs: &[Formula], f: &Formula) -> Vec<Formula> {
    let mut v = xs.to_vec();
    v.push(f.clone());
    v
}

/// A derivation of `lhs ⊢ rhs` for an instance of a rule; for rule 0 the
/// antecedent starts with the closure of the axiom. Every template but
/// rule 15's is intuitionistic.
pub fn rule_sequent_template(rule: RuleId, p: &Params, theory: &Theory) -> Result<Derivation> {
    use RuleName::*;
    let inst = instantiate_rule(rule, p, theory).map_err(|e| TranslateError::Instance(e.to_string()))?;
    let (x, y) = (inst.antecedent.clone(), inst.consequent.clone());
    let notin = |t: Term, s: &Term| theory.vocab.notin_atom(t, s.clone());
    let one = |a: &Formula| vec![a.clone()];
    let both = |a: &Formula, c: &Formula| vec![a.clone(), c.clone()];
    let v = p.v.clone().unwrap_or_default();
    Ok(match rule {
        RuleId::R0 => {
            let ax = theory.lookup(p.axiom.as_ref().unwrap()).map_err(|e| TranslateError::Instance(e.to_string()))?;
            let vars: Vec<String> = ax.free_vars().into_iter().collect();
            let closure = ax.closure();
            let mut layers = vec![closure.clone()];
            let mut witnesses = Vec::new();
            for orig in &vars {
                let Formula::Forall(bv, body) = layers.last().unwrap().clone() else { unreachable!() };
                let t = p.bindings.get(orig).cloned().unwrap_or_else(|| Term::var(orig.clone()));
                layers.push(substitute(&body, &bv, &t));
                witnesses.push(t);
            }
            let matrix = layers.pop().unwrap();
            let right = node(WeakenLeft, at(1), both(&y, &x), one(&y), vec![Derivation::axiom(y.clone())]);
            let split = RuleParams { at: Some(0), split: Some(0), ..RuleParams::default() };
            let mut d = node(ImpLeft, split, both(&matrix, &x), one(&y), vec![Derivation::axiom(x.clone()), right]);
            for (f, t) in layers.into_iter().zip(witnesses).rev() {
                d = node(ForallLeft, witness(0, t), both(&f, &x), one(&y), vec![d]);
            }
            d
        }
        RuleId::R1 => node(TopRight, at(0), one(&x), one(&y), vec![]),
        RuleId::R2 => node(BotLeft, at(0), one(&x), one(&y), vec![]),
        RuleId::R3 => node(AndLeft1, at(0), one(&x), one(&y), vec![Derivation::axiom(y.clone())]),
        RuleId::R4 => node(AndLeft2, at(0), one(&x), one(&y), vec![Derivation::axiom(y.clone())]),
        RuleId::R5 => node(AndRight, at(0), one(&x), one(&y), vec![Derivation::axiom(x.clone()), Derivation::axiom(x.clone())]),
        RuleId::R6 => node(OrRight1, at(0), one(&x), one(&y), vec![Derivation::axiom(x.clone())]),
        RuleId::R7 => node(OrRight2, at(0), one(&x), one(&y), vec![Derivation::axiom(x.clone())]),
        RuleId::R8 => node(OrLeft, at(0), one(&x), one(&y), vec![Derivation::axiom(y.clone()), Derivation::axiom(y.clone())]),
        RuleId::R9 => {
            let (c, a, e) = (p.chi.clone().unwrap(), p.phi.clone().unwrap(), p.psi.clone().unwrap());
            let branch = |k: &Formula, rule: RuleName| {
                let ante = both(&c, k);
                let conj = Formula::and(c.clone(), k.clone());
                let and =
                    node(AndRight, at(0), ante.clone(), one(&conj), vec![weak_axiom(&ante, &one(&c), &c), weak_axiom(&ante, &one(k), k)]);
                node(rule, at(0), ante, one(&y), vec![and])
            };
            let split = node(
                OrLeft,
                at(1),
                both(&c, &Formula::or(a.clone(), e.clone())),
                one(&y),
                vec![branch(&a, OrRight1), branch(&e, OrRight2)],
            );
            let second = node(AndLeft2, at(1), both(&c, &x), one(&y), vec![split]);
            let first = node(AndLeft1, at(0), both(&x, &x), one(&y), vec![second]);
            node(Multiset, RuleParams::default(), one(&x), one(&y), vec![first])
        }
        RuleId::R10 => {
            let t = p.t.clone().unwrap();
            node(ExistsRight, witness(0, t), one(&x), one(&y), vec![Derivation::axiom(x.clone())])
        }
        RuleId::R11 => {
            let w = eigen_name(&v, &[&x, &y]);
            let a = p.phi.clone().unwrap();
            let opened = substitute(&a, &v, &Term::var(w.clone()));
            node(ExistsLeft, eigen(0, &w), one(&x), one(&y), vec![weak_axiom(&one(&opened), &one(&y), &y)])
        }
        RuleId::R12 => {
            let (c, a) = (p.chi.clone().unwrap(), p.phi.clone().unwrap());
            let ex = Formula::exists(v.clone(), a.clone());
            let w = eigen_name(&v, &[&c, &ex, &y]);
            let aw = substitute(&a, &v, &Term::var(w.clone()));
            let ante = both(&c, &aw);
            let conj = Formula::and(c.clone(), aw.clone());
            let and =
                node(AndRight, at(0), ante.clone(), one(&conj), vec![weak_axiom(&ante, &one(&c), &c), weak_axiom(&ante, &one(&aw), &aw)]);
            let intro = node(ExistsRight, witness(0, Term::var(w.clone())), ante, one(&y), vec![and]);
            let open = node(ExistsLeft, eigen(1, &w), both(&c, &ex), one(&y), vec![intro]);
            let second = node(AndLeft2, at(1), both(&c, &x), one(&y), vec![open]);
            let first = node(AndLeft1, at(0), both(&x, &x), one(&y), vec![second]);
            node(Multiset, RuleParams::default(), one(&x), one(&y), vec![first])
        }
        RuleId::R13 => {
            let t = p.t.clone().unwrap();
            node(ForallInLeft, witness(0, t), one(&x), one(&y), vec![Derivation::axiom(y.clone())])
        }
        RuleId::R14 => {
            let s = p.s.clone().unwrap();
            let w = eigen_name(&v, &[&x, &y]);
            let guarded = Formula::or(notin(Term::var(w.clone()), &s), x.clone());
            let or = node(OrRight2, at(0), one(&x), one(&guarded), vec![Derivation::axiom(x.clone())]);
            node(ForallInRight, eigen(0, &w), one(&x), one(&y), vec![or])
        }
        RuleId::R14a => {
            let (a, s) = (p.phi.clone().unwrap(), p.s.clone().unwrap());
            let w = eigen_name(&v, &[&x, &y]);
            let aw = substitute(&a, &v, &Term::var(w.clone()));
            let guard = notin(Term::var(w.clone()), &s);
            let target = Formula::or(guard.clone(), aw.clone());
            let doubled = Formula::or(guard.clone(), target.clone());
            let first = node(OrRight1, at(0), one(&guard), one(&target), vec![Derivation::axiom(guard.clone())]);
            let split = node(OrLeft, at(0), one(&doubled), one(&target), vec![first, Derivation::axiom(target.clone())]);
            let inst = node(ForallInLeft, witness(0, Term::var(w.clone())), one(&x), one(&target), vec![split]);
            node(ForallInRight, eigen(0, &w), one(&x), one(&y), vec![inst])
        }
        RuleId::R15 => {
            let (c, a, s) = (p.chi.clone().unwrap(), p.phi.clone().unwrap(), p.s.clone().unwrap());
            let bounded_a = Formula::forall_in(v.clone(), s.clone(), a.clone());
            let w = eigen_name(&v, &[&x, &y]);
            let aw = substitute(&a, &v, &Term::var(w.clone()));
            let guard = notin(Term::var(w.clone()), &s);
            let target = Formula::or(guard.clone(), aw.clone());
            let succ = both(&c, &target);
            let from_guard = node(
                WeakenRight,
                at(0),
                one(&guard),
                succ.clone(),
                vec![node(OrRight1, at(0), one(&guard), one(&target), vec![Derivation::axiom(guard.clone())])],
            );
            let from_a = node(
                WeakenRight,
                at(0),
                one(&aw),
                succ.clone(),
                vec![node(OrRight2, at(0), one(&aw), one(&target), vec![Derivation::axiom(aw.clone())])],
            );
            let from_c = weak_axiom(&one(&c), &succ, &c);
            let body = Formula::or(c.clone(), aw.clone());
            let inner = node(OrLeft, at(0), one(&body), succ.clone(), vec![from_c, from_a]);
            let outer = node(OrLeft, at(0), one(&Formula::or(guard.clone(), body)), succ.clone(), vec![from_guard, inner]);
            let inst = node(ForallInLeft, witness(0, Term::var(w.clone())), one(&x), succ, vec![outer]);
            let intro = node(ForallInRight, eigen(1, &w), one(&x), both(&c, &bounded_a), vec![inst]);
            let right = node(OrRight2, at(1), one(&x), both(&c, &y), vec![intro]);
            let left = node(OrRight1, at(0), one(&x), both(&y, &y), vec![right]);
            node(Multiset, RuleParams::default(), one(&x), one(&y), vec![left])
        }
    })
}

/// From a derivation of `Γ, χ ⊢ χ′` with `Γ` closed, a derivation of
/// `Γ, Ξ[p:=χ] ⊢ Ξ[p:=χ′]`. The value of `Ξ` at `p` is ignored.
pub fn lift_context(d: &Derivation, xi: &Formula, p: &ContextPath, vocab: &Vocabulary) -> Result<Derivation> {
    use RuleName::*;
    let Some((&sel, rest)) = p.0.split_first() else { return Ok(d.clone()) };
    let rest = ContextPath(rest.to_vec());
    let sub_of = |f: &Formula| lift_context(d, f, &rest, vocab);
    let n = d.conclusion.ante.len();
    let gamma = d.conclusion.ante[..n - 1].to_vec();
    if gamma.iter().any(|f| !f.free_vars().is_empty()) {
        return Err(TranslateError::Unsupported("lifting needs a closed side antecedent".into()));
    }
    let g = gamma.len();
    let ends = |s: &Derivation| (s.conclusion.ante.last().unwrap().clone(), s.conclusion.succ[0].clone());
    let bad = || TranslateError::Unsupported(format!("path {p} does not resolve"));
    Ok(match (xi, sel) {
        (Formula::And(a, c), Selector::Left | Selector::Right) => {
            let (inner, other) = if sel == Selector::Left { (a, c) } else { (c, a) };
            let sub = sub_of(inner)?;
            let (x1, x2) = ends(&sub);
            let (from, to) = if sel == Selector::Left {
                (Formula::and(x1, (**other).clone()), Formula::and(x2, (**other).clone()))
            } else {
                (Formula::and((**other).clone(), x1), Formula::and((**other).clone(), x2))
            };
            let (pick_in, pick_out) = if sel == Selector::Left { (AndLeft1, AndLeft2) } else { (AndLeft2, AndLeft1) };
            let ante = with(&gamma, &from);
            let first = node(pick_in, at(g), ante.clone(), vec![ends(&sub).1], vec![sub]);
            let kept = weak_axiom(&with(&gamma, other), &[(**other).clone()], other);
            let second = node(pick_out, at(g), ante.clone(), vec![(**other).clone()], vec![kept]);
            let prems = if sel == Selector::Left { vec![first, second] } else { vec![second, first] };
            node(AndRight, at(0), ante, vec![to], prems)
        }
        (Formula::Or(a, c), Selector::Left | Selector::Right) => {
            let (inner, other) = if sel == Selector::Left { (a, c) } else { (c, a) };
            let sub = sub_of(inner)?;
            let (x1, x2) = ends(&sub);
            let (from, to) = if sel == Selector::Left {
                (Formula::or(x1, (**other).clone()), Formula::or(x2, (**other).clone()))
            } else {
                (Formula::or((**other).clone(), x1), Formula::or((**other).clone(), x2))
            };
            let (keep_in, keep_out) = if sel == Selector::Left { (OrRight1, OrRight2) } else { (OrRight2, OrRight1) };
            let first = node(keep_in, at(0), sub.conclusion.ante.clone(), vec![to.clone()], vec![sub]);
            let other_ante = with(&gamma, other);
            let second =
                node(keep_out, at(0), other_ante.clone(), vec![to.clone()], vec![weak_axiom(&other_ante, &[(**other).clone()], other)]);
            let prems = if sel == Selector::Left { vec![first, second] } else { vec![second, first] };
            node(OrLeft, at(g), with(&gamma, &from), vec![to], prems)
        }
        (Formula::Implies(a, c), Selector::Right) => {
            let sub = sub_of(c)?;
            let (x1, x2) = ends(&sub);
            let from = Formula::implies((**a).clone(), x1.clone());
            let ante = with(&with(&gamma, &from), a);
            let arg = weak_axiom(&with(&gamma, a), &[(**a).clone()], a);
            let mut after = gamma.clone();
            after.push(x1);
            after.push((**a).clone());
            let body = fit(sub, &Sequent::new(after, vec![x2.clone()])).map_err(TranslateError::Unsupported)?;
            let split = RuleParams { at: Some(g), split: Some(0), ..RuleParams::default() };
            let used = node(ImpLeft, split, ante, vec![x2.clone()], vec![arg, body]);
            node(ImpRight, at(0), with(&gamma, &from), vec![Formula::implies((**a).clone(), x2)], vec![used])
        }
        (Formula::Exists(v, a), Selector::Body) => {
            let sub = sub_of(a)?;
            let (x1, x2) = ends(&sub);
            let to = Formula::exists(v.clone(), x2);
            let intro = node(ExistsRight, witness(0, Term::var(v.clone())), sub.conclusion.ante.clone(), vec![to.clone()], vec![sub]);
            node(ExistsLeft, eigen(g, v), with(&gamma, &Formula::exists(v.clone(), x1)), vec![to], vec![intro])
        }
        (Formula::Forall(v, a), Selector::Body) => {
            let sub = sub_of(a)?;
            let (x1, x2) = ends(&sub);
            let from = Formula::forall(v.clone(), x1);
            let inst = node(ForallLeft, witness(g, Term::var(v.clone())), with(&gamma, &from), sub.conclusion.succ.clone(), vec![sub]);
            node(ForallRight, eigen(0, v), with(&gamma, &from), vec![Formula::forall(v.clone(), x2)], vec![inst])
        }
        (Formula::ForallIn(v, s, a), Selector::Body) => {
            let sub = sub_of(a)?;
            let (x1, x2) = ends(&sub);
            let guard = vocab.notin_atom(Term::var(v.clone()), s.clone());
            let target = Formula::or(guard.clone(), x2.clone());
            let from = Formula::forall_in(v.clone(), s.clone(), x1.clone());
            let guard_ante = with(&gamma, &guard);
            let from_guard = node(
                OrRight1,
                at(0),
                guard_ante.clone(),
                vec![target.clone()],
                vec![weak_axiom(&guard_ante, std::slice::from_ref(&guard), &guard)],
            );
            let from_body = node(OrRight2, at(0), sub.conclusion.ante.clone(), vec![target.clone()], vec![sub]);
            let split = node(OrLeft, at(g), with(&gamma, &Formula::or(guard, x1)), vec![target.clone()], vec![from_guard, from_body]);
            let inst = node(ForallInLeft, witness(g, Term::var(v.clone())), with(&gamma, &from), vec![target], vec![split]);
            node(ForallInRight, eigen(0, v), with(&gamma, &from), vec![Formula::forall_in(v.clone(), s.clone(), x2)], vec![inst])
        }
        _ => return Err(bad()),
    })
}

/// The closures of the axioms a deduction appeals to, in order of first use.
pub fn used_closures(d: &CheckedDeduction, theory: &Theory) -> Result<Vec<Formula>> {
    let mut out: Vec<Formula> = Vec::new();
    for c in &d.certificates {
        if let Some(a) = &c.params.axiom {
            let cl = theory.lookup(a).map_err(|e| TranslateError::Instance(e.to_string()))?.closure();
            if !out.iter().any(|f| alpha_equal(f, &cl)) {
                out.push(cl);
            }
        }
    }
    Ok(out)
}

/// A derivation of `T̄ ⊢ ∀(ξ0 ⇒ ξn)` in LK or LI, where `T̄` lists the
/// closures of the axioms the deduction uses. Steps are joined by cuts
/// folded from the left.
pub fn rewrite_to_lk(d: &CheckedDeduction, theory: &Theory, target: System) -> Result<Derivation> {
    use RuleName::*;
    if target.is_sigma() {
        return Err(TranslateError::Unsupported(format!("target {target} has no implication rules")));
    }
    if target.single_succedent() {
        if let Some(i) = d.certificates.iter().position(|c| c.rule == RuleId::R15) {
            return Err(TranslateError::Rule15(i + 1));
        }
    }
    let closures = used_closures(d, theory)?;
    let xs = &d.formulas;
    let base = with(&closures, &xs[0]);
    let mut acc =
        fit(Derivation::axiom(xs[0].clone()), &Sequent::new(base.clone(), vec![xs[0].clone()])).map_err(TranslateError::Unsupported)?;
    for (i, c) in d.certificates.iter().enumerate() {
        let t = rule_sequent_template(c.rule, &c.params, theory)?;
        let lifted = lift_context(&t, &xs[i], &c.path, &theory.vocab)?;
        let next = vec![xs[i + 1].clone()];
        if i == 0 {
            acc = fit(lifted, &Sequent::new(base.clone(), next)).map_err(TranslateError::Unsupported)?;
        } else {
            let step = fit(lifted, &Sequent::new(with(&base, &xs[i]), next.clone())).map_err(TranslateError::Unsupported)?;
            let params = RuleParams { split: Some(0), cut_formula: Some(xs[i].clone()), ..RuleParams::default() };
            acc = node(Cut, params, base.clone(), next, vec![acc, step]);
        }
    }
    let imp = Formula::implies(xs[0].clone(), xs.last().unwrap().clone());
    let mut layers = vec![universal_closure(&imp)];
    while let Formula::Forall(_, body) = layers.last().unwrap() {
        let body = (**body).clone();
        layers.push(body);
    }
    layers.pop();
    let mut out = node(ImpRight, at(0), closures.clone(), vec![imp], vec![acc]);
    for f in layers.into_iter().rev() {
        let Formula::Forall(v, _) = &f else { unreachable!() };
        out = node(ForallRight, eigen(0, v), closures.clone(), vec![f.clone()], vec![out]);
    }
    Ok(out)
}

// ------------------------------------------------------------ LK → LKΣ(T)

fn non_sigma(f: &Formula) -> bool {
    f.contains_implication() || matches!(f, Formula::Forall(..))
}

fn matrix(f: &Formula) -> &Formula {
    match f {
        Formula::Forall(_, b) => matrix(b),
        _ => f,
    }
}

/// Every sequent has at most one succedent formula.
pub fn is_single_succedent(d: &Derivation) -> bool {
    d.all_sequents(&mut |s| s.succ.len() <= 1)
}

/// A derivation with theory cuts of `φ ⊢ ψ` from a cut-free derivation of
/// `T̄, φ ⊢ ψ`, where every formula of `T̄` is the closure of an axiom.
/// Implication-bearing formulas are dropped, each left-⇒ on an axiom
/// instance becomes a theory cut, and left-∀ and weakening steps on the
/// dropped formulas disappear.
pub fn lk_to_lksigma(d: &Derivation, theory: &Theory) -> Result<Derivation> {
    if !d.is_cut_free() {
        return Err(TranslateError::NotCutFree);
    }
    let c = &d.conclusion;
    let kept = c.ante.iter().filter(|f| !non_sigma(f)).count();
    if kept != 1 || c.succ.len() != 1 || non_sigma(&c.succ[0]) {
        return Err(TranslateError::Shape(format!("expected T̄, φ ⊢ ψ, found `{c}`")));
    }
    for f in c.ante.iter().filter(|f| non_sigma(f)) {
        let Formula::Implies(a, b) = matrix(f) else {
            return Err(TranslateError::Shape(format!("`{}` is not an axiom closure", crate::parser::render_formula(f))));
        };
        let ax = crate::formula::Implication::new((**a).clone(), (**b).clone());
        if theory.recognize(&ax).is_none() || !f.free_vars().is_empty() {
            return Err(TranslateError::Shape(format!("`{}` is not an axiom closure", crate::parser::render_formula(f))));
        }
    }
    strip(d, theory)
}

fn strip(d: &Derivation, theory: &Theory) -> Result<Derivation> {
    use RuleName::*;
    let c = &d.conclusion;
    let conc = Sequent::new(c.ante.iter().filter(|f| !non_sigma(f)).cloned().collect(), c.succ.clone());
    let shift = |i: usize| c.ante[..i].iter().filter(|f| !non_sigma(f)).count();
    let principal = |i: Option<usize>| i.and_then(|i| c.ante.get(i)).filter(|f| non_sigma(f));
    let left_rule =
        matches!(d.rule, AndLeft1 | AndLeft2 | OrLeft | ExistsLeft | ForallInLeft | WeakenLeft | BotLeft | ForallLeft | ImpLeft);
    if left_rule && principal(d.params.at).is_some() {
        return match d.rule {
            ForallLeft | WeakenLeft => strip(&d.premises[0], theory),
            ImpLeft => {
                let i = d.params.at.unwrap();
                let Formula::Implies(a, b) = &c.ante[i] else { unreachable!() };
                let inst = crate::formula::Implication::new((**a).clone(), (**b).clone());
                let (axiom, bindings) = theory.recognize(&inst).ok_or_else(|| {
                    TranslateError::Unsupported(format!("`{}` is not an axiom instance", crate::parser::render_formula(&c.ante[i])))
                })?;
                let k = d.params.split.unwrap_or(0);
                let p0 = strip(&d.premises[0], theory)?;
                let p1 = strip(&d.premises[1], theory)?;
                let p1 = fit(p1, &Sequent::new(with(&conc.ante, b), c.succ[k..].to_vec())).map_err(TranslateError::Unsupported)?;
                let params = RuleParams { axiom: Some(axiom), bindings, split: Some(k), ..RuleParams::default() };
                Ok(Derivation::new(TCut, params, conc, vec![p0, p1]))
            }
            _ => Err(TranslateError::Unsupported(format!("{} on an implication", d.rule))),
        };
    }
    match d.rule {
        Cut => Err(TranslateError::NotCutFree),
        ImpLeft | ImpRight | ForallLeft | ForallRight | TCut => {
            Err(TranslateError::Unsupported(format!("{} outside an axiom closure", d.rule)))
        }
        Multiset => {
            let p = strip(&d.premises[0], theory)?;
            if p.conclusion.alpha_eq(&conc) {
                Ok(p)
            } else {
                Ok(Derivation::new(Multiset, RuleParams::default(), conc, vec![p]))
            }
        }
        _ => {
            let mut params = d.params.clone();
            if left_rule {
                params.at = params.at.map(shift);
            }
            let premises = d.premises.iter().map(|p| strip(p, theory)).collect::<Result<Vec<_>>>()?;
            Ok(Derivation::new(d.rule, params, conc, premises))
        }
    }
}

/// From a derivation of `Γ ⊢ ∀x̄(φ ⇒ ψ)` ending in right-∀ and right-⇒
/// inferences, the derivation of `Γ, φ ⊢ ψ` above them.
pub fn open_closure(d: &Derivation) -> Result<Derivation> {
    use RuleName::*;
    let mut cur = d.clone();
    loop {
        match (cur.rule, cur.conclusion.succ.as_slice()) {
            (ForallRight, [Formula::Forall(v, _)]) => {
                let w = cur.params.eigen.clone().unwrap_or_default();
                let mut next = cur.premises[0].clone();
                if w != *v && !next.conclusion.free_vars().contains(v) {
                    next = substitute_derivation(&next, &[(w, Term::var(v.clone()))].into());
                }
                cur = next;
            }
            (ImpRight, [Formula::Implies(..)]) => return Ok(cur.premises[0].clone()),
            _ => return Err(TranslateError::Shape(format!("`{}` does not end in right-∀ and right-⇒", cur.conclusion))),
        }
    }
}

// ------------------------------------------------------------ pipelines

/// A checked proof: a deduction with its mode or a derivation with its system.
#[derive(Clone, Debug, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum Artifact {
    Deduction(CheckedDeduction, Mode),
    Derivation(Derivation, System),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    Rewrite(Mode),
    Sequent(System),
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Target::Rewrite(m) => m.fmt(f),
            Target::Sequent(s) => s.fmt(f),
        }
    }
}

impl Artifact {
    pub fn target(&self) -> Target {
        match self {
            Artifact::Deduction(_, m) => Target::Rewrite(*m),
            Artifact::Derivation(_, s) => Target::Sequent(*s),
        }
    }

    /// Re-checks the artifact in its own system.
    pub fn verify(&self, theory: &Theory) -> Result<()> {
        match self {
            Artifact::Deduction(d, m) => {
                let script = d.to_script(crate::parser::TheoryRef::Inline(Box::new(theory.clone())));
                crate::rewrite::check_deduction(&script, theory, *m).map(|_| ())
            }
            .map_err(|e| TranslateError::Rejected(e.to_string())),
            Artifact::Derivation(d, s) => crate::calculus::check_derivation(d, &crate::calculus::SystemConfig::new(*s, theory.clone()))
                .map_err(|e| TranslateError::Rejected(e.to_string())),
        }
    }
}

/// Translates a checked artifact into `to`, eliminating cuts and opening the
/// closure of a sequent-calculus proof on the way to a Σ system. The result
/// is checked in `to`.
pub fn convert(a: Artifact, to: Target, theory: &Theory) -> Result<Artifact> {
    use Artifact::{Deduction, Derivation as Deriv};
    use System::*;
    let out = match (a, to) {
        (Deduction(d, _), Target::Rewrite(m)) => Deduction(d, m),
        (Deduction(d, _), Target::Sequent(s)) if !s.is_sigma() => Deriv(rewrite_to_lk(&d, theory, s)?, s),
        (a @ Deduction(..), Target::Sequent(s)) => {
            let mid = convert(a, Target::Sequent(if s == LISigma { LI } else { LK }), theory)?;
            return convert(mid, to, theory);
        }
        (Deriv(d, from), Target::Sequent(s)) if from.is_sigma() == s.is_sigma() => Deriv(d, s),
        (Deriv(d, _), Target::Sequent(s)) if s.is_sigma() => {
            let free = if d.count_rule(RuleName::Cut) > 0 {
                crate::cut::eliminate_cuts(&d, theory).map_err(|e| TranslateError::Unsupported(e.to_string()))?
            } else {
                d
            };
            let closed = matches!(free.conclusion.succ.as_slice(), [Formula::Forall(..) | Formula::Implies(..)]);
            let opened = if closed { open_closure(&free)? } else { free };
            Deriv(lk_to_lksigma(&opened, theory)?, s)
        }
        (a @ Deriv(..), Target::Sequent(s)) => {
            let mid = convert(a, Target::Rewrite(if s == LI { Mode::RI } else { Mode::RK }), theory)?;
            return convert(mid, to, theory);
        }
        (Deriv(d, from), Target::Rewrite(m)) if from.is_sigma() => Deduction(lksigma_to_rewrite(&d, theory)?, m),
        (Deriv(d, from), Target::Rewrite(_)) => {
            let mid = convert(Deriv(d, from), Target::Sequent(if from == LI { LISigma } else { LKSigma }), theory)?;
            return convert(mid, to, theory);
        }
    };
    out.verify(theory)?;
    Ok(out)
}

// ------------------------------------------------------------ reports

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationReport {
    /// SHA-256 of the input text.
    pub input_digest: String,
    pub from: String,
    pub to: String,
    /// Nodes of the output derivation, if any.
    pub nodes: Option<usize>,
    /// Steps of the output deduction, if any.
    pub steps: Option<usize>,
    pub cuts: usize,
    pub output: String,
}

impl TranslationReport {
    pub fn new(input: &str, from: &str, to: &str, output: String) -> Self {
        let input_digest = Sha256::digest(input.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        TranslationReport { input_digest, from: from.into(), to: to.into(), nodes: None, steps: None, cuts: 0, output }
    }

    pub fn with_derivation(mut self, d: &Derivation) -> Self {
        self.nodes = Some(d.size());
        self.cuts = d.count_rule(RuleName::Cut) + d.count_rule(RuleName::TCut);
        self
    }

    pub fn with_deduction(mut self, d: &CheckedDeduction) -> Self {
        self.steps = Some(d.steps());
        self
    }

    pub fn render(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
