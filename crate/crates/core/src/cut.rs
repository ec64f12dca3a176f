//! Cut elimination for the classical and intuitionistic calculi.
//!
//! Each topmost cut is replaced by a mix that removes every occurrence of
//! the cut formula at once; sequents are compared as sets, so contraction
//! is absorbed by the multiset rule.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::calculus::{expected_premises, fit, regularize, subset, substitute_derivation, Derivation, RuleName, RuleParams, Sequent};
use crate::formula::{alpha_contains, alpha_equal, fresh_var, substitute, Formula, Term};
use crate::theories::Theory;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CutError {
    #[error("theory cuts cannot be eliminated")]
    TheoryCut,
    #[error("cut elimination exceeded its step budget")]
    Budget,
    #[error("internal error during cut elimination: {0}")]
    Internal(String),
}

const FUEL: usize = 2_000_000;

/// Returns a cut-free derivation of the same end sequent.
pub fn eliminate_cuts(d: &Derivation, theory: &Theory) -> Result<Derivation, CutError> {
    if d.count_rule(RuleName::TCut) > 0 {
        return Err(CutError::TheoryCut);
    }
    if d.is_cut_free() {
        return Ok(d.clone());
    }
    let mut avoid = d.all_vars();
    let d = regularize(d, &mut avoid);
    let mut m = Mixer { theory, fuel: FUEL, avoid };
    m.eliminate(&d)
}

struct Mixer<'a> {
    theory: &'a Theory,
    fuel: usize,
    avoid: BTreeSet<String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

fn principal(d: &Derivation) -> Option<(Side, usize)> {
    use RuleName::*;
    let i = d.params.at?;
    match d.rule {
        AndLeft1 | AndLeft2 | OrLeft | ImpLeft | ExistsLeft | ForallLeft | ForallInLeft => Some((Side::Left, i)),
        AndRight | OrRight1 | OrRight2 | ImpRight | ExistsRight | ForallRight | ForallInRight => Some((Side::Right, i)),
        _ => None,
    }
}

fn dedup(xs: impl IntoIterator<Item = Formula>) -> Vec<Formula> {
    let mut out: Vec<Formula> = Vec::new();
    for f in xs {
        if !alpha_contains(&out, &f) {
            out.push(f);
        }
    }
    out
}

fn without(xs: &[Formula], a: &Formula) -> Vec<Formula> {
    xs.iter().filter(|f| !alpha_equal(f, a)).cloned().collect()
}

fn within(s: &Sequent, t: &Sequent) -> bool {
    subset(&s.ante, &t.ante) && subset(&s.succ, &t.succ)
}

impl<'a> Mixer<'a> {
    fn eliminate(&mut self, d: &Derivation) -> Result<Derivation, CutError> {
        let premises = d.premises.iter().map(|p| self.eliminate(p)).collect::<Result<Vec<_>, _>>()?;
        if d.rule != RuleName::Cut {
            return Ok(Derivation { premises, ..d.clone() });
        }
        let a = match &d.params.cut_formula {
            Some(f) => f.clone(),
            None => d.premises[0].conclusion.succ.last().cloned().ok_or_else(|| CutError::Internal("cut without formula".into()))?,
        };
        let m = self.mix(&premises[0], &premises[1], &a)?;
        fit(m, &d.conclusion).map_err(CutError::Internal)
    }

    fn fresh(&mut self) -> String {
        let v = fresh_var(&self.avoid);
        self.avoid.insert(v.clone());
        v
    }

    fn rename_eigen(&mut self, d: &Derivation) -> Derivation {
        let w = d.params.eigen.clone().expect("eigen node");
        let fresh = self.fresh();
        let map: BTreeMap<String, Term> = [(w, Term::var(fresh.clone()))].into();
        let mut params = d.params.clone();
        params.eigen = Some(fresh);
        let premises = d.premises.iter().map(|p| substitute_derivation(p, &map)).collect();
        Derivation { rule: d.rule, params, conclusion: d.conclusion.clone(), premises }
    }

    fn subst(&mut self, d: &Derivation, w: &str, t: &Term) -> Derivation {
        let map: BTreeMap<String, Term> = [(w.to_string(), t.clone())].into();
        let out = substitute_derivation(d, &map);
        self.avoid.extend(out.all_vars());
        out
    }

    fn fit(&self, d: Derivation, target: &Sequent) -> Result<Derivation, CutError> {
        fit(d, target).map_err(CutError::Internal)
    }

    /// A cut-free proof of `Γ1 ∪ (Γ2 − A) ⊢ (Σ1 − A) ∪ Σ2`.
    fn mix(&mut self, d1: &Derivation, d2: &Derivation, a: &Formula) -> Result<Derivation, CutError> {
        use RuleName::*;
        self.fuel = self.fuel.checked_sub(1).ok_or(CutError::Budget)?;
        let (c1, c2) = (&d1.conclusion, &d2.conclusion);
        let target = Sequent::new(
            dedup(c1.ante.iter().cloned().chain(without(&c2.ante, a))),
            dedup(without(&c1.succ, a).into_iter().chain(c2.succ.iter().cloned())),
        );
        if !alpha_contains(&c1.succ, a) || alpha_contains(&c2.succ, a) {
            return self.fit(d1.clone(), &target);
        }
        if !alpha_contains(&c2.ante, a) || alpha_contains(&c1.ante, a) {
            return self.fit(d2.clone(), &target);
        }
        let leaf =
            |rule: RuleName, at: usize| Derivation::new(rule, RuleParams { at: Some(at), ..Default::default() }, target.clone(), vec![]);
        if d1.rule == BotLeft {
            let i = target.ante.iter().position(|f| *f == Formula::Bottom).unwrap();
            return Ok(leaf(BotLeft, i));
        }
        if d2.rule == TopRight {
            let i = target.succ.iter().position(|f| *f == Formula::Top).unwrap();
            return Ok(leaf(TopRight, i));
        }
        if d1.rule == TopRight {
            if let Some(i) = target.succ.iter().position(|f| *f == Formula::Top) {
                return Ok(leaf(TopRight, i));
            }
        }
        if d2.rule == BotLeft {
            if let Some(i) = target.ante.iter().position(|f| *f == Formula::Bottom) {
                return Ok(leaf(BotLeft, i));
            }
        }
        if matches!(d1.rule, Cut | TCut) || matches!(d2.rule, Cut | TCut) {
            return Err(CutError::Internal("mix over a derivation with cuts".into()));
        }
        if matches!(d1.rule, WeakenLeft | WeakenRight | Multiset) {
            let m = self.mix(&d1.premises[0], d2, a)?;
            return self.fit(m, &target);
        }
        if matches!(d2.rule, WeakenLeft | WeakenRight | Multiset) {
            let m = self.mix(d1, &d2.premises[0], a)?;
            return self.fit(m, &target);
        }
        let p1 = principal(d1);
        let p2 = principal(d2);
        let a_in_prem_succ = d1.premises.iter().any(|p| alpha_contains(&p.conclusion.succ, a));
        let a_in_prem_ante = d2.premises.iter().any(|p| alpha_contains(&p.conclusion.ante, a));
        let right_intro_a = matches!(p1, Some((Side::Right, i)) if alpha_equal(&c1.succ[i], a));
        let left_intro_a = matches!(p2, Some((Side::Left, i)) if alpha_equal(&c2.ante[i], a));
        if d1.rule != TopRight && (!right_intro_a || a_in_prem_succ) {
            return self.push_left(d1, d2, a, &target);
        }
        if !left_intro_a || a_in_prem_ante {
            return self.push_right(d1, d2, a, &target);
        }
        self.principal_reduction(d1, d2, a, &target)
    }

    /// Pushes the mix into the premises of `d1`.
    fn push_left(&mut self, d1: &Derivation, d2: &Derivation, a: &Formula, target: &Sequent) -> Result<Derivation, CutError> {
        let d1 = match &d1.params.eigen {
            Some(w) if d2.conclusion.free_vars().contains(w) => self.rename_eigen(d1),
            _ => d1.clone(),
        };
        let mut new_premises = Vec::new();
        let mut mixed = Vec::new();
        for p in &d1.premises {
            if alpha_contains(&p.conclusion.succ, a) {
                let m = self.mix(p, d2, a)?;
                if within(&m.conclusion, target) {
                    return self.fit(m, target);
                }
                new_premises.push(m);
                mixed.push(true);
            } else {
                new_premises.push(p.clone());
                mixed.push(false);
            }
        }
        let (side, idx) = principal(&d1).ok_or_else(|| CutError::Internal(format!("no principal formula for {}", d1.rule)))?;
        let c1 = &d1.conclusion;
        let extra_ante = without(&d2.conclusion.ante, a);
        let extra_succ = d2.conclusion.succ.clone();
        let k = d1.params.split.unwrap_or(c1.succ.len());
        let mut succ = Vec::new();
        let mut new_idx = idx;
        let mut split = None;
        for (j, f) in c1.succ.iter().enumerate() {
            if d1.rule == RuleName::ImpLeft && j == k {
                if mixed[0] {
                    succ.extend(extra_succ.iter().cloned());
                }
                split = Some(succ.len());
            }
            if side == Side::Right && j == idx {
                new_idx = succ.len();
                succ.push(f.clone());
            } else if !alpha_equal(f, a) {
                succ.push(f.clone());
            }
        }
        if d1.rule == RuleName::ImpLeft && k == c1.succ.len() {
            if mixed[0] {
                succ.extend(extra_succ.iter().cloned());
            }
            split = Some(succ.len());
        }
        succ.extend(extra_succ.iter().cloned());
        let mut ante = c1.ante.clone();
        ante.extend(extra_ante);
        let mut params = d1.params.clone();
        params.at = Some(if side == Side::Left { idx } else { new_idx });
        if d1.rule == RuleName::ImpLeft {
            params.split = split;
        }
        let conclusion = Sequent::new(ante, succ);
        let node = self.rebuild(&d1, params, conclusion, new_premises)?;
        if side == Side::Right && alpha_equal(&c1.succ[idx], a) {
            self.mix(&node, d2, a)
        } else {
            self.fit(node, target)
        }
    }

    /// Pushes the mix into the premises of `d2`.
    fn push_right(&mut self, d1: &Derivation, d2: &Derivation, a: &Formula, target: &Sequent) -> Result<Derivation, CutError> {
        let d2 = match &d2.params.eigen {
            Some(w) if d1.conclusion.free_vars().contains(w) => self.rename_eigen(d2),
            _ => d2.clone(),
        };
        let mut new_premises = Vec::new();
        let mut mixed = Vec::new();
        for p in &d2.premises {
            if alpha_contains(&p.conclusion.ante, a) {
                let m = self.mix(d1, p, a)?;
                if within(&m.conclusion, target) {
                    return self.fit(m, target);
                }
                new_premises.push(m);
                mixed.push(true);
            } else {
                new_premises.push(p.clone());
                mixed.push(false);
            }
        }
        let (side, idx) = principal(&d2).ok_or_else(|| CutError::Internal(format!("no principal formula for {}", d2.rule)))?;
        let c2 = &d2.conclusion;
        let extra_ante = d1.conclusion.ante.clone();
        let extra_succ = without(&d1.conclusion.succ, a);
        let mut ante = Vec::new();
        let mut new_idx = idx;
        for (j, f) in c2.ante.iter().enumerate() {
            if side == Side::Left && j == idx {
                new_idx = ante.len();
                ante.push(f.clone());
            } else if !alpha_equal(f, a) {
                ante.push(f.clone());
            }
        }
        ante.extend(extra_ante);
        let mut params = d2.params.clone();
        params.at = Some(if side == Side::Left { new_idx } else { idx });
        let succ = if d2.rule == RuleName::ImpLeft {
            let k = d2.params.split.unwrap_or(0);
            let mut s = c2.succ[..k].to_vec();
            if mixed[0] {
                s.extend(extra_succ.iter().cloned());
            }
            params.split = Some(s.len());
            s.extend(c2.succ[k..].iter().cloned());
            s.extend(extra_succ.iter().cloned());
            s
        } else {
            let mut s = c2.succ.clone();
            s.extend(extra_succ.iter().cloned());
            s
        };
        let conclusion = Sequent::new(ante, succ);
        let node = self.rebuild(&d2, params, conclusion, new_premises)?;
        if side == Side::Left && alpha_equal(&c2.ante[idx], a) {
            self.mix(d1, &node, a)
        } else {
            self.fit(node, target)
        }
    }

    fn rebuild(
        &mut self,
        old: &Derivation,
        params: RuleParams,
        conclusion: Sequent,
        premises: Vec<Derivation>,
    ) -> Result<Derivation, CutError> {
        let expected = expected_premises(old.rule, &params, &conclusion, self.theory, None).map_err(CutError::Internal)?;
        let premises = premises.into_iter().zip(&expected).map(|(p, e)| self.fit(p, e)).collect::<Result<Vec<_>, _>>()?;
        Ok(Derivation { rule: old.rule, params, conclusion, premises })
    }

    fn principal_reduction(&mut self, d1: &Derivation, d2: &Derivation, a: &Formula, target: &Sequent) -> Result<Derivation, CutError> {
        use RuleName::*;
        let m = match (d1.rule, d2.rule, a) {
            (AndRight, AndLeft1, Formula::And(b, _)) => self.mix(&d1.premises[0], &d2.premises[0], b)?,
            (AndRight, AndLeft2, Formula::And(_, c)) => self.mix(&d1.premises[1], &d2.premises[0], c)?,
            (OrRight1, OrLeft, Formula::Or(b, _)) => self.mix(&d1.premises[0], &d2.premises[0], b)?,
            (OrRight2, OrLeft, Formula::Or(_, c)) => self.mix(&d1.premises[0], &d2.premises[1], c)?,
            (ImpRight, ImpLeft, Formula::Implies(b, c)) => {
                let m1 = self.mix(&d2.premises[0], &d1.premises[0], b)?;
                self.mix(&m1, &d2.premises[1], c)?
            }
            (ExistsRight, ExistsLeft, Formula::Exists(v, body)) => {
                let t = d1.params.witness.clone().unwrap();
                let w = d2.params.eigen.clone().unwrap();
                let r = self.subst(&d2.premises[0], &w, &t);
                self.mix(&d1.premises[0], &r, &substitute(body, v, &t))?
            }
            (ForallRight, ForallLeft, Formula::Forall(v, body)) => {
                let t = d2.params.witness.clone().unwrap();
                let w = d1.params.eigen.clone().unwrap();
                let q = self.subst(&d1.premises[0], &w, &t);
                self.mix(&q, &d2.premises[0], &substitute(body, v, &t))?
            }
            (ForallInRight, ForallInLeft, Formula::ForallIn(v, s, body)) => {
                let t = d2.params.witness.clone().unwrap();
                let w = d1.params.eigen.clone().unwrap();
                let q = self.subst(&d1.premises[0], &w, &t);
                let inst = Formula::or(self.theory.vocab.notin_atom(t.clone(), s.clone()), substitute(body, v, &t));
                self.mix(&q, &d2.premises[0], &inst)?
            }
            _ => return Err(CutError::Internal(format!("no principal reduction for {} against {}", d1.rule, d2.rule))),
        };
        self.fit(m, target)
    }
}
