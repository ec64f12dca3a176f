//! Generators shared by the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sigma_core::calculus::{check_derivation, fit, Derivation, RuleName, RuleParams, Sequent, System, SystemConfig};
use sigma_core::formula::{alpha_contains, alpha_equal, fresh_var, substitute};
use sigma_core::parser::parse_theory;
use sigma_core::{Formula, Term, Theory, Vocabulary};

pub const THEORY: &str = "(vocab (rel P 1) (rel R 2) (fun c 0) (fun f 1))
    (axiom up (P x) (R x (f x)))
    (axiom back (R x y) (exists z (R z y)))";

pub fn theory() -> Theory {
    parse_theory(THEORY).unwrap()
}

pub fn vocab() -> Vocabulary {
    theory().vocab
}

pub fn golden(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

// ------------------------------------------------------------ proptest strategies

const VARS: [&str; 3] = ["x", "y", "z"];

pub fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![prop::sample::select(VARS.to_vec()).prop_map(Term::var), Just(Term::constant("c")),];
    leaf.prop_recursive(2, 4, 1, |inner| inner.prop_map(|t| Term::app("f", vec![t])))
}

fn arb_atom() -> impl Strategy<Value = Formula> {
    prop_oneof![
        arb_term().prop_map(|t| Formula::atom("P", vec![t])),
        (arb_term(), arb_term()).prop_map(|(a, b)| Formula::atom("R", vec![a, b])),
        (arb_term(), arb_term()).prop_map(|(a, b)| Formula::atom("notin", vec![a, b])),
    ]
}

/// Σ formulas over `P`, `R`, `notin`, `c`, `f`.
pub fn arb_sigma(depth: u32) -> BoxedStrategy<Formula> {
    let leaf = prop_oneof![1 => Just(Formula::Top), 1 => Just(Formula::Bottom), 6 => arb_atom()];
    leaf.prop_recursive(depth, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (prop::sample::select(VARS.to_vec()), inner.clone()).prop_map(|(v, b)| Formula::exists(v, b)),
            (prop::sample::select(VARS.to_vec()), bound_term(), inner).prop_map(|(v, s, b)| {
                let s = if s.contains_var(v) { Term::constant("c") } else { s };
                Formula::forall_in(v, s, b)
            }),
        ]
    })
    .boxed()
}

fn bound_term() -> impl Strategy<Value = Term> {
    prop_oneof![Just(Term::constant("c")), arb_term()]
}

/// Any formula, implications and unbounded quantifiers included.
pub fn arb_formula(depth: u32) -> BoxedStrategy<Formula> {
    arb_sigma(1)
        .prop_recursive(depth, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (prop::sample::select(VARS.to_vec()), inner).prop_map(|(v, b)| Formula::forall(v, b)),
            ]
        })
        .boxed()
}

// ------------------------------------------------------------ seeded derivations

fn node(rule: RuleName, params: RuleParams, conclusion: Sequent, premises: Vec<Derivation>) -> Derivation {
    Derivation::new(rule, params, conclusion, premises)
}

fn at(i: usize) -> RuleParams {
    RuleParams { at: Some(i), ..RuleParams::default() }
}

pub fn axiom(f: Formula) -> Derivation {
    Derivation::axiom(f)
}

fn union(a: &[Formula], b: &[Formula]) -> Vec<Formula> {
    let mut out = a.to_vec();
    for f in b {
        if !alpha_contains(&out, f) {
            out.push(f.clone());
        }
    }
    out
}

fn without(a: &[Formula], f: &Formula) -> Vec<Formula> {
    a.iter().filter(|g| !alpha_equal(g, f)).cloned().collect()
}

fn replace(a: &[Formula], i: usize, f: Formula) -> Vec<Formula> {
    let mut out = a.to_vec();
    out[i] = f;
    out
}

fn abstract_term(f: &Formula, t: &Term, v: &str) -> Formula {
    fn term(x: &Term, t: &Term, v: &str) -> Term {
        match x {
            _ if x == t => Term::var(v),
            Term::App(s, args) => Term::App(s.clone(), args.iter().map(|a| term(a, t, v)).collect()),
            Term::Var(_) => x.clone(),
        }
    }
    let shadowed = |w: &str| t.contains_var(w) || w == v;
    match f {
        Formula::Top | Formula::Bottom => f.clone(),
        Formula::Atom(r, args) => Formula::Atom(r.clone(), args.iter().map(|a| term(a, t, v)).collect()),
        Formula::And(a, b) => Formula::and(abstract_term(a, t, v), abstract_term(b, t, v)),
        Formula::Or(a, b) => Formula::or(abstract_term(a, t, v), abstract_term(b, t, v)),
        Formula::Implies(a, b) => Formula::implies(abstract_term(a, t, v), abstract_term(b, t, v)),
        Formula::Exists(w, b) if !shadowed(w) => Formula::exists(w.clone(), abstract_term(b, t, v)),
        Formula::Forall(w, b) if !shadowed(w) => Formula::forall(w.clone(), abstract_term(b, t, v)),
        Formula::ForallIn(w, s, b) if !shadowed(w) => Formula::forall_in(w.clone(), term(s, t, v), abstract_term(b, t, v)),
        Formula::ForallIn(w, s, b) => Formula::forall_in(w.clone(), term(s, t, v), (**b).clone()),
        _ => f.clone(),
    }
}

/// Seeded generator of random formulas and checked derivations over [`THEORY`].
pub struct Gen {
    pub rng: ChaCha8Rng,
    pub theory: Theory,
    /// Allow implications and unbounded quantifiers.
    pub classical_connectives: bool,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed), theory: theory(), classical_connectives: false }
    }

    pub fn closed_term(&mut self) -> Term {
        if self.rng.gen_bool(0.6) {
            Term::constant("c")
        } else {
            Term::app("f", vec![Term::constant("c")])
        }
    }

    pub fn term(&mut self) -> Term {
        match self.rng.gen_range(0..4) {
            0 => Term::var(*VARS.choose(&mut self.rng).unwrap()),
            1 => Term::app("f", vec![Term::var(*VARS.choose(&mut self.rng).unwrap())]),
            _ => self.closed_term(),
        }
    }

    pub fn atom(&mut self) -> Formula {
        if self.rng.gen_bool(0.5) {
            Formula::atom("P", vec![self.term()])
        } else {
            Formula::atom("R", vec![self.term(), self.term()])
        }
    }

    pub fn sigma(&mut self, depth: usize) -> Formula {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return match self.rng.gen_range(0..10) {
                0 => Formula::Top,
                1 => Formula::Bottom,
                2 => {
                    let (t, s) = (self.term(), self.closed_term());
                    self.theory.vocab.notin_atom(t, s)
                }
                _ => self.atom(),
            };
        }
        let v = VARS.choose(&mut self.rng).unwrap().to_string();
        match self.rng.gen_range(0..4) {
            0 => Formula::and(self.sigma(depth - 1), self.sigma(depth - 1)),
            1 => Formula::or(self.sigma(depth - 1), self.sigma(depth - 1)),
            2 => Formula::exists(v, self.sigma(depth - 1)),
            _ => {
                let s = self.closed_term();
                Formula::forall_in(v, s, self.sigma(depth - 1))
            }
        }
    }

    fn pick<'p>(&mut self, pool: &'p [Derivation]) -> &'p Derivation {
        pool.choose(&mut self.rng).unwrap()
    }

    fn fresh(&mut self, avoid: &Sequent) -> String {
        let mut vars = avoid.free_vars();
        for f in avoid.ante.iter().chain(&avoid.succ) {
            vars.extend(f.all_vars());
        }
        vars.extend(VARS.iter().map(|s| s.to_string()));
        fresh_var(&vars)
    }

    /// A seed: an axiom on a fresh formula, or `∀u∈s φ(u) ⊢ t∉s ∨ φ(t)`.
    fn seed(&mut self) -> Derivation {
        let roll: f64 = self.rng.gen();
        if roll < 0.15 {
            // ∃u φ(u) ⊢ ∃v φ(v)
            let body = Formula::atom("R", vec![Term::var("u"), self.closed_term()]);
            let w = Term::var("w");
            let inst = substitute(&body, "u", &w);
            let r = node(
                RuleName::ExistsRight,
                RuleParams { at: Some(0), witness: Some(w), ..RuleParams::default() },
                Sequent::new(vec![inst.clone()], vec![Formula::exists("u", body.clone())]),
                vec![axiom(inst)],
            );
            let concl = Sequent::new(vec![Formula::exists("v", substitute(&body, "u", &Term::var("v")))], vec![Formula::exists("u", body)]);
            return node(
                RuleName::ExistsLeft,
                RuleParams { at: Some(0), eigen: Some("w".into()), ..RuleParams::default() },
                concl,
                vec![r],
            );
        }
        if roll < 0.3 {
            // ∀u∈s φ(u) ⊢ ∀v∈s φ(v)
            let s = self.closed_term();
            let body = Formula::atom("P", vec![Term::var("u")]);
            let w = Term::var("w");
            let inst = Formula::or(self.theory.vocab.notin_atom(w.clone(), s.clone()), substitute(&body, "u", &w));
            let all = Formula::forall_in("u", s.clone(), body.clone());
            let l = node(
                RuleName::ForallInLeft,
                RuleParams { at: Some(0), witness: Some(w), ..RuleParams::default() },
                Sequent::new(vec![all.clone()], vec![inst.clone()]),
                vec![axiom(inst)],
            );
            let concl = Sequent::new(vec![all], vec![Formula::forall_in("v", s, substitute(&body, "u", &Term::var("v")))]);
            return node(
                RuleName::ForallInRight,
                RuleParams { at: Some(0), eigen: Some("w".into()), ..RuleParams::default() },
                concl,
                vec![l],
            );
        }
        if roll < 0.5 {
            let s = self.closed_term();
            let t = self.term();
            let body = if self.rng.gen_bool(0.5) {
                Formula::atom("P", vec![Term::var("u")])
            } else {
                Formula::atom("R", vec![Term::var("u"), self.closed_term()])
            };
            let inst = Formula::or(self.theory.vocab.notin_atom(t.clone(), s.clone()), substitute(&body, "u", &t));
            let concl = Sequent::new(vec![Formula::forall_in("u", s, body)], vec![inst.clone()]);
            return node(
                RuleName::ForallInLeft,
                RuleParams { at: Some(0), witness: Some(t), ..RuleParams::default() },
                concl,
                vec![axiom(inst)],
            );
        }
        let f = if self.rng.gen_bool(0.7) { self.atom() } else { self.sigma(2) };
        axiom(f)
    }

    /// One logical or theory rule applied to members of `pool`.
    fn step(&mut self, pool: &[Derivation]) -> Option<Derivation> {
        let kind = if self.classical_connectives {
            *[0, 1, 2, 3, 4, 5, 9, 10, 11].choose(&mut self.rng).unwrap()
        } else {
            self.rng.gen_range(0..9)
        };
        self.step_kind(kind, pool)
    }

    fn step_kind(&mut self, kind: usize, pool: &[Derivation]) -> Option<Derivation> {
        let d = self.pick(pool).clone();
        let c = d.conclusion.clone();
        match kind {
            0 if !c.ante.is_empty() => {
                let i = self.rng.gen_range(0..c.ante.len());
                let other = self.atom();
                let (rule, f) = if self.rng.gen_bool(0.5) {
                    (RuleName::AndLeft1, Formula::and(c.ante[i].clone(), other))
                } else {
                    (RuleName::AndLeft2, Formula::and(other, c.ante[i].clone()))
                };
                Some(node(rule, at(i), Sequent::new(replace(&c.ante, i, f), c.succ.clone()), vec![d]))
            }
            1 if !c.succ.is_empty() => {
                let i = self.rng.gen_range(0..c.succ.len());
                let other = self.atom();
                let (rule, f) = if self.rng.gen_bool(0.5) {
                    (RuleName::OrRight1, Formula::or(c.succ[i].clone(), other))
                } else {
                    (RuleName::OrRight2, Formula::or(other, c.succ[i].clone()))
                };
                Some(node(rule, at(i), Sequent::new(c.ante.clone(), replace(&c.succ, i, f)), vec![d]))
            }
            2 => {
                let e = self.pick(pool).clone();
                let (Some(a), Some(b)) = (c.succ.last().cloned(), e.conclusion.succ.last().cloned()) else { return None };
                let e_rest = &e.conclusion.succ[..e.conclusion.succ.len() - 1];
                let gamma = union(&c.ante, &e.conclusion.ante);
                let delta = without(&without(&union(&c.succ[..c.succ.len() - 1], e_rest), &a), &b);
                let p1 = fit(d, &Sequent::new(gamma.clone(), [delta.clone(), vec![a.clone()]].concat())).ok()?;
                let p2 = fit(e, &Sequent::new(gamma.clone(), [delta.clone(), vec![b.clone()]].concat())).ok()?;
                let concl = Sequent::new(gamma, [delta.clone(), vec![Formula::and(a, b)]].concat());
                Some(node(RuleName::AndRight, at(delta.len()), concl, vec![p1, p2]))
            }
            3 => {
                let e = self.pick(pool).clone();
                let (Some(a), Some(b)) = (c.ante.last().cloned(), e.conclusion.ante.last().cloned()) else { return None };
                let e_rest = &e.conclusion.ante[..e.conclusion.ante.len() - 1];
                let gamma = without(&without(&union(&c.ante[..c.ante.len() - 1], e_rest), &a), &b);
                let delta = union(&c.succ, &e.conclusion.succ);
                let p1 = fit(d, &Sequent::new([gamma.clone(), vec![a.clone()]].concat(), delta.clone())).ok()?;
                let p2 = fit(e, &Sequent::new([gamma.clone(), vec![b.clone()]].concat(), delta.clone())).ok()?;
                let concl = Sequent::new([gamma.clone(), vec![Formula::or(a, b)]].concat(), delta);
                Some(node(RuleName::OrLeft, at(gamma.len()), concl, vec![p1, p2]))
            }
            4 if !c.succ.is_empty() => {
                let i = self.rng.gen_range(0..c.succ.len());
                let f = &c.succ[i];
                let mut terms = Vec::new();
                f.subterms_into(&mut terms);
                let vars: Vec<Term> = terms.iter().filter(|t| matches!(t, Term::Var(_))).cloned().collect();
                let t =
                    if !vars.is_empty() && self.rng.gen_bool(0.6) { vars.choose(&mut self.rng)? } else { terms.choose(&mut self.rng)? }
                        .clone();
                let v = self.fresh(&c);
                let body = abstract_term(f, &t, &v);
                if !alpha_equal(&substitute(&body, &v, &t), f) {
                    return None;
                }
                let params = RuleParams { at: Some(i), witness: Some(t), ..RuleParams::default() };
                Some(node(
                    RuleName::ExistsRight,
                    params,
                    Sequent::new(c.ante.clone(), replace(&c.succ, i, Formula::exists(v, body))),
                    vec![d],
                ))
            }
            5 => {
                let (i, w) = (0..c.ante.len()).find_map(|i| {
                    let rest = Sequent::new(replace(&c.ante, i, Formula::Top), c.succ.clone()).free_vars();
                    c.ante[i].free_vars().into_iter().find(|w| !rest.contains(w)).map(|w| (i, w))
                })?;
                let f = &c.ante[i];
                let v = self.fresh(&c);
                let body = substitute(f, &w, &Term::var(v.clone()));
                let params = RuleParams { at: Some(i), eigen: Some(w), ..RuleParams::default() };
                Some(node(
                    RuleName::ExistsLeft,
                    params,
                    Sequent::new(replace(&c.ante, i, Formula::exists(v, body)), c.succ.clone()),
                    vec![d],
                ))
            }
            6 => {
                // right ∀∈ on a succedent formula w∉s ∨ φ(w)
                let notin = self.theory.vocab.notin.clone();
                let (i, w, s, body) = c.succ.iter().enumerate().find_map(|(i, f)| match f {
                    Formula::Or(g, b) => match &**g {
                        Formula::Atom(r, args) if *r == notin => match (&args[0], &args[1]) {
                            (Term::Var(w), s) if !s.contains_var(w) => Some((i, w.clone(), s.clone(), (**b).clone())),
                            _ => None,
                        },
                        _ => None,
                    },
                    _ => None,
                })?;
                let rest = Sequent::new(c.ante.clone(), replace(&c.succ, i, Formula::Top)).free_vars();
                if rest.contains(&w) {
                    return None;
                }
                let v = self.fresh(&c);
                let f = Formula::forall_in(v.clone(), s, substitute(&body, &w, &Term::var(v)));
                let params = RuleParams { at: Some(i), eigen: Some(w), ..RuleParams::default() };
                Some(node(RuleName::ForallInRight, params, Sequent::new(c.ante.clone(), replace(&c.succ, i, f)), vec![d]))
            }
            7 | 8 => {
                // theory cut on `up` or `back`
                let t = self.term();
                let u = self.term();
                let name = if self.rng.gen_bool(0.5) { "up" } else { "back" };
                let mut bindings = std::collections::BTreeMap::new();
                bindings.insert("x".to_string(), t);
                if name == "back" {
                    bindings.insert("y".to_string(), u);
                }
                let inst = self.theory.axiom(name).unwrap().substitute(&bindings);
                let left = pool
                    .iter()
                    .find(|d| alpha_contains(&d.conclusion.succ, &inst.antecedent))
                    .cloned()
                    .unwrap_or_else(|| axiom(inst.antecedent.clone()));
                let lc = &left.conclusion;
                let gamma = lc.ante.clone();
                let delta = without(&lc.succ, &inst.antecedent);
                let p1 = fit(left.clone(), &Sequent::new(gamma.clone(), [delta.clone(), vec![inst.antecedent.clone()]].concat())).ok()?;
                let psi = vec![inst.consequent.clone()];
                let p2 = fit(axiom(inst.consequent.clone()), &Sequent::new([gamma.clone(), psi.clone()].concat(), psi.clone())).ok()?;
                let params = RuleParams {
                    split: Some(delta.len()),
                    axiom: Some(sigma_core::AxiomRef::named(name)),
                    bindings,
                    ..RuleParams::default()
                };
                let delta = [delta, psi].concat();
                Some(node(RuleName::TCut, params, Sequent::new(gamma, delta), vec![p1, p2]))
            }
            9 if !c.succ.is_empty() && !c.ante.is_empty() => {
                let a = c.ante.last().unwrap().clone();
                let i = self.rng.gen_range(0..c.succ.len());
                let concl = Sequent::new(c.ante[..c.ante.len() - 1].to_vec(), replace(&c.succ, i, Formula::implies(a, c.succ[i].clone())));
                Some(node(RuleName::ImpRight, at(i), concl, vec![d]))
            }
            10 => {
                let e = self.pick(pool).clone();
                let a = c.succ.last()?.clone();
                let b = e.conclusion.ante.last()?.clone();
                let e_rest = &e.conclusion.ante[..e.conclusion.ante.len() - 1];
                let gamma = without(&union(&c.ante, e_rest), &b);
                let da = c.succ[..c.succ.len() - 1].to_vec();
                let db = e.conclusion.succ.clone();
                let p1 = fit(d, &Sequent::new(gamma.clone(), [da.clone(), vec![a.clone()]].concat())).ok()?;
                let p2 = fit(e, &Sequent::new([gamma.clone(), vec![b.clone()]].concat(), db.clone())).ok()?;
                let concl = Sequent::new([gamma.clone(), vec![Formula::implies(a, b)]].concat(), [da.clone(), db].concat());
                let params = RuleParams { at: Some(gamma.len()), split: Some(da.len()), ..RuleParams::default() };
                Some(node(RuleName::ImpLeft, params, concl, vec![p1, p2]))
            }
            11 if !c.succ.is_empty() => {
                let i = self.rng.gen_range(0..c.succ.len());
                let f = &c.succ[i];
                let rest = Sequent::new(c.ante.clone(), replace(&c.succ, i, Formula::Top)).free_vars();
                let w = f.free_vars().into_iter().find(|w| !rest.contains(w))?;
                let v = self.fresh(&c);
                let body = substitute(f, &w, &Term::var(v.clone()));
                let params = RuleParams { at: Some(i), eigen: Some(w), ..RuleParams::default() };
                Some(node(
                    RuleName::ForallRight,
                    params,
                    Sequent::new(c.ante.clone(), replace(&c.succ, i, Formula::forall(v, body))),
                    vec![d],
                ))
            }
            _ => None,
        }
    }

    /// A pool after `rules` successful rule applications; the last entry is the newest.
    fn grow(&mut self, rules: usize, pool: &mut Vec<Derivation>) {
        let mut applied = 0;
        let mut tries = 0;
        while applied < rules && tries < 500 {
            tries += 1;
            if pool.is_empty() || self.rng.gen_bool(0.2) {
                pool.push(self.seed());
                continue;
            }
            if let Some(d) = self.step(pool) {
                pool.push(d);
                applied += 1;
            }
        }
    }

    /// Collapses the antecedent into one conjunction and the succedent into one disjunction.
    pub fn single(&mut self, d: Derivation) -> Derivation {
        let mut d = d;
        if d.conclusion.ante.is_empty() {
            let s = Sequent::new(vec![Formula::Top], d.conclusion.succ.clone());
            d = node(RuleName::WeakenLeft, at(0), s, vec![d]);
        }
        if d.conclusion.succ.is_empty() {
            let s = Sequent::new(d.conclusion.ante.clone(), vec![Formula::Bottom]);
            d = node(RuleName::WeakenRight, at(0), s, vec![d]);
        }
        while d.conclusion.ante.len() > 1 {
            let c = d.conclusion.clone();
            let n = c.ante.len();
            let x = Formula::and(c.ante[n - 2].clone(), c.ante[n - 1].clone());
            let s1 = Sequent::new(replace(&c.ante, n - 2, x.clone()), c.succ.clone());
            let d1 = node(RuleName::AndLeft1, at(n - 2), s1.clone(), vec![d]);
            let s2 = Sequent::new(replace(&s1.ante, n - 1, x.clone()), c.succ.clone());
            let d2 = node(RuleName::AndLeft2, at(n - 1), s2, vec![d1]);
            d = node(
                RuleName::Multiset,
                RuleParams::default(),
                Sequent::new([c.ante[..n - 2].to_vec(), vec![x]].concat(), c.succ),
                vec![d2],
            );
        }
        while d.conclusion.succ.len() > 1 {
            let c = d.conclusion.clone();
            let n = c.succ.len();
            let x = Formula::or(c.succ[n - 2].clone(), c.succ[n - 1].clone());
            let s1 = Sequent::new(c.ante.clone(), replace(&c.succ, n - 2, x.clone()));
            let d1 = node(RuleName::OrRight1, at(n - 2), s1.clone(), vec![d]);
            let s2 = Sequent::new(c.ante.clone(), replace(&s1.succ, n - 1, x.clone()));
            let d2 = node(RuleName::OrRight2, at(n - 1), s2, vec![d1]);
            d = node(
                RuleName::Multiset,
                RuleParams::default(),
                Sequent::new(c.ante, [c.succ[..n - 2].to_vec(), vec![x]].concat()),
                vec![d2],
            );
        }
        d
    }

    /// A checked LKΣ(T) derivation of some `φ ⊢ ψ` with at most `rules` logical and theory rules before the final collapse.
    pub fn lksigma(&mut self, rules: usize) -> Derivation {
        self.classical_connectives = false;
        let mut pool = Vec::new();
        self.grow(rules, &mut pool);
        let d = pool.pop().unwrap_or_else(|| self.seed());
        self.single(d)
    }

    fn cut_left(&mut self, d: Derivation, pool: &[Derivation]) -> Option<Derivation> {
        let shallow: Vec<Formula> = d.conclusion.succ.iter().filter(|f| f.depth() <= 3).cloned().collect();
        let a = shallow.choose(&mut self.rng)?.clone();
        let found: Vec<&Derivation> = pool.iter().filter(|e| alpha_contains(&e.conclusion.ante, &a)).collect();
        let e = found.choose(&mut self.rng).map(|e| (*e).clone()).unwrap_or_else(|| axiom(a.clone()));
        let c = d.conclusion.clone();
        let gamma = union(&c.ante, &without(&e.conclusion.ante, &a));
        let da = without(&c.succ, &a);
        let db = e.conclusion.succ.clone();
        self.cut(a, gamma, da, db, d, e)
    }

    fn cut_right(&mut self, d: Derivation, pool: &[Derivation]) -> Option<Derivation> {
        let c = d.conclusion.clone();
        let shallow: Vec<Formula> = c.ante.iter().filter(|f| f.depth() <= 3).cloned().collect();
        let a = match shallow.choose(&mut self.rng) {
            Some(a) => a.clone(),
            None => self.atom(),
        };
        let found: Vec<&Derivation> = pool.iter().filter(|e| alpha_contains(&e.conclusion.succ, &a)).collect();
        let l = found.choose(&mut self.rng).map(|e| (*e).clone()).unwrap_or_else(|| axiom(a.clone()));
        let gamma = union(&l.conclusion.ante, &without(&c.ante, &a));
        let da = without(&l.conclusion.succ, &a);
        self.cut(a, gamma, da, c.succ.clone(), l, d)
    }

    fn cut(
        &mut self,
        a: Formula,
        gamma: Vec<Formula>,
        da: Vec<Formula>,
        db: Vec<Formula>,
        l: Derivation,
        r: Derivation,
    ) -> Option<Derivation> {
        let p1 = fit(l, &Sequent::new(gamma.clone(), [da.clone(), vec![a.clone()]].concat())).ok()?;
        let p2 = fit(r, &Sequent::new([gamma.clone(), vec![a.clone()]].concat(), db.clone())).ok()?;
        let params = RuleParams { split: Some(da.len()), cut_formula: Some(a), ..RuleParams::default() };
        Some(node(RuleName::Cut, params, Sequent::new(gamma, [da, db].concat()), vec![p1, p2]))
    }

    /// A checked LK derivation with exactly `cuts` ordinary cuts, each on a formula of depth at most 3.
    pub fn lk_with_cuts(&mut self, cuts: usize) -> Derivation {
        self.classical_connectives = true;
        let mut pool = Vec::new();
        self.grow(3, &mut pool);
        let mut cur: Option<Derivation> = None;
        let mut tries = 0;
        while cur.as_ref().map_or(0, |d| d.count_rule(RuleName::Cut)) < cuts {
            tries += 1;
            assert!(tries < 10_000, "could not place {cuts} cuts");
            let d = match &cur {
                Some(c) => c.clone(),
                None => self.pick(&pool).clone(),
            };
            let next = if self.rng.gen_bool(0.5) { self.cut_left(d, &pool) } else { self.cut_right(d, &pool) };
            let Some(mut next) = next else {
                self.grow(1, &mut pool);
                continue;
            };
            for _ in 0..self.rng.gen_range(0..=2) {
                if let Some(n) = self.unary_step(&next) {
                    next = n;
                }
            }
            cur = Some(next);
        }
        cur.unwrap()
    }

    fn unary_step(&mut self, d: &Derivation) -> Option<Derivation> {
        let kind = *[0, 1, 4, 5, 9, 11].choose(&mut self.rng).unwrap();
        self.step_kind(kind, std::slice::from_ref(d))
    }
}

pub fn checks(d: &Derivation, sys: System, t: &Theory) -> Result<(), String> {
    check_derivation(d, &SystemConfig::new(sys, t.clone())).map_err(|e| e.to_string())
}
