//! Property tests over random formulas, steps and derivations.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sigma_core::calculus::{check_derivation, RuleName, System, SystemConfig};
use sigma_core::cut::eliminate_cuts;
use sigma_core::formula::{
    alpha_equal, check_sigma, desugar, positions, rename_bound_away, replace_at, resugar, subformula_at, substitute,
};
use sigma_core::parser::{
    parse_deduction, parse_derivation, parse_formula, read_all, render_deduction, render_derivation, render_formula, DerivationFile,
    TheoryRef,
};
use sigma_core::rewrite::{
    check_deduction, check_step, concatenate, infer_step, instantiate_rule, CheckedDeduction, InferError, Mode, Params, RuleId,
    StepCertificate, ALL_RULES,
};
use sigma_core::semantics::{
    audit, derivation_target, evaluate, monotonicity_failure, theory_instances, AuditOptions, AuditTarget, Enumerator, SchemaBudget,
    Signature,
};
use sigma_core::theories::{builtin, dualize, is_delta0, pra_vocab};
use sigma_core::translate::{convert, lksigma_to_rewrite, rewrite_to_lk, Artifact, Target};
use sigma_core::{AxiomRef, Formula, Implication, Term};

const VARS: [&str; 3] = ["x", "y", "z"];

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

/// True when `imp` holds in every model of the test theory up to size 2.
fn valid(imp: &Implication) -> bool {
    let t = theory();
    let target = AuditTarget::new(&t.vocab, t.axioms.clone(), vec![("o".into(), imp.clone())]);
    audit(&target, &AuditOptions { max_size: 2, samples: 0, ..AuditOptions::default() }).unwrap().is_clean()
}

fn arb_var() -> impl Strategy<Value = String> {
    prop::sample::select(VARS.to_vec()).prop_map(String::from)
}

fn arb_bindings() -> impl Strategy<Value = BTreeMap<String, Term>> {
    (prop::option::of(arb_term()), prop::option::of(arb_term())).prop_map(|(x, y)| {
        let mut m = BTreeMap::new();
        if let Some(t) = x {
            m.insert("x".to_string(), t);
        }
        if let Some(t) = y {
            m.insert("y".to_string(), t);
        }
        m
    })
}

/// A rule with every parameter it might take; the unused ones are dropped.
fn arb_rule_instance() -> impl Strategy<Value = (RuleId, Params)> {
    (
        prop::sample::select(ALL_RULES.to_vec()),
        (arb_sigma(2), arb_sigma(2), arb_sigma(2)),
        (arb_var(), arb_term(), arb_term()),
        (prop::bool::ANY, arb_bindings()),
    )
        .prop_map(|(r, (phi, psi, chi), (v, t, s), (up, bindings))| {
            use RuleId::*;
            let s = if s.contains_var(&v) { Term::constant("c") } else { s };
            let mut p = Params { phi: Some(phi), ..Params::default() };
            match r {
                R0 => {
                    p.phi = None;
                    p.axiom = Some(AxiomRef::named(if up { "up" } else { "back" }));
                    p.bindings = bindings.into_iter().filter(|(x, _)| up == (x == "x") || !up).collect();
                }
                R1 | R2 | R5 | R8 => {}
                R3 | R4 | R6 | R7 => p.psi = Some(psi),
                R9 => (p.psi, p.chi) = (Some(psi), Some(chi)),
                R10 => (p.v, p.t) = (Some(v), Some(t)),
                R11 => p.v = Some(v),
                R12 => (p.v, p.chi) = (Some(v), Some(chi)),
                R13 => (p.v, p.s, p.t) = (Some(v), Some(s), Some(t)),
                R14 | R14a => (p.v, p.s) = (Some(v), Some(s)),
                R15 => (p.v, p.s, p.chi) = (Some(v), Some(s), Some(chi)),
            }
            (r, p)
        })
}

/// A certified step `from ⟹ to` at a random position of a random Σ context.
fn arb_step() -> impl Strategy<Value = (Formula, Formula, StepCertificate)> {
    (arb_rule_instance(), arb_sigma(2), any::<prop::sample::Index>()).prop_filter_map("rule instance rejected", |((r, p), ctx, i)| {
        let imp = instantiate_rule(r, &p, &theory()).ok()?;
        let ps = positions(&ctx);
        let path = ps[i.index(ps.len())].clone();
        let from = replace_at(&ctx, &path, &imp.antecedent).ok()?;
        let to = replace_at(&ctx, &path, &imp.consequent).ok()?;
        Some((from, to, StepCertificate { rule: r, path, params: p }))
    })
}

fn single_step(from: &Formula, to: &Formula, c: &StepCertificate) -> CheckedDeduction {
    CheckedDeduction { formulas: vec![from.clone(), to.clone()], certificates: vec![c.clone()] }
}

/// Δ₀ formulas over the arithmetic vocabulary with guards written first.
fn arb_pra_term() -> BoxedStrategy<Term> {
    prop_oneof![arb_var().prop_map(Term::var), Just(Term::constant("0"))]
        .prop_recursive(2, 3, 1, |t| t.prop_map(|a| Term::app("S", vec![a])))
        .boxed()
}

fn arb_delta0() -> BoxedStrategy<Formula> {
    let term = arb_pra_term();
    let atom =
        (prop::sample::select(vec!["=", "!=", "<", "!<"]), term.clone(), term.clone()).prop_map(|(r, a, b)| Formula::atom(r, vec![a, b]));
    let leaf = prop_oneof![1 => Just(Formula::Top), 1 => Just(Formula::Bottom), 5 => atom];
    leaf.prop_recursive(3, 16, 2, move |inner| {
        let bound = term.clone();
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (arb_var(), bound.clone(), inner.clone()).prop_map(|(v, s, b)| {
                let s = if s.contains_var(&v) { Term::constant("0") } else { s };
                Formula::forall_in(v, s, b)
            }),
            (arb_var(), bound, inner).prop_map(|(v, s, b)| {
                let s = if s.contains_var(&v) { Term::constant("0") } else { s };
                Formula::exists(v.clone(), Formula::and(Formula::atom("<", vec![Term::var(v), s]), b))
            }),
        ]
    })
    .boxed()
}

// ------------------------------------------------------------ formulas

proptest! {
    #[test]
    fn substitution_tracks_free_variables(phi in arb_formula(3), v in arb_var(), t in arb_term()) {
        let out = substitute(&phi, &v, &t);
        let mut want = phi.free_vars();
        if want.remove(&v) {
            want.extend(t.free_vars());
        } else {
            prop_assert!(alpha_equal(&out, &phi));
        }
        prop_assert_eq!(out.free_vars(), want);
    }

    #[test]
    fn substitution_commutes(phi in arb_formula(3), t in arb_term(), s in arb_term()) {
        // φ[t/x][s/y] ≡ φ[s/y][t[s/y]/x] when x does not occur in s
        prop_assume!(!s.contains_var("x"));
        let ts = t.substitute(&BTreeMap::from([("y".to_string(), s.clone())]));
        let a = substitute(&substitute(&phi, "x", &t), "y", &s);
        let b = substitute(&substitute(&phi, "y", &s), "x", &ts);
        prop_assert!(alpha_equal(&a, &b), "{} vs {}", render_formula(&a), render_formula(&b));
    }

    #[test]
    fn subformulas_of_sigma_formulas_are_sigma(phi in arb_sigma(4)) {
        let v = vocab();
        prop_assert!(check_sigma(&phi, &v).is_ok());
        for p in positions(&phi) {
            prop_assert!(check_sigma(subformula_at(&phi, &p).unwrap(), &v).is_ok());
        }
    }

    #[test]
    fn alpha_equality_is_an_equivalence(phi in arb_formula(3), psi in arb_formula(2)) {
        let a = rename_bound_away(&phi, &BTreeSet::from(["x".to_string()]));
        let b = rename_bound_away(&phi, &BTreeSet::from(["y".to_string(), "z".to_string()]));
        prop_assert!(alpha_equal(&phi, &phi));
        prop_assert!(alpha_equal(&phi, &a) && alpha_equal(&a, &phi));
        prop_assert!(alpha_equal(&a, &b) && alpha_equal(&phi, &b));
        prop_assert_eq!(alpha_equal(&phi, &psi), alpha_equal(&psi, &phi));
        prop_assert_eq!(alpha_equal(&a, &psi), alpha_equal(&phi, &psi));
    }

    #[test]
    fn alpha_equality_is_a_congruence(phi in arb_formula(3), ctx in arb_sigma(2), i in any::<prop::sample::Index>()) {
        let a = rename_bound_away(&phi, &BTreeSet::from(["x".to_string(), "y".to_string()]));
        let ps = positions(&ctx);
        let p = &ps[i.index(ps.len())];
        prop_assert!(alpha_equal(&replace_at(&ctx, p, &phi).unwrap(), &replace_at(&ctx, p, &a).unwrap()));
        prop_assert!(alpha_equal(&Formula::and(phi.clone(), ctx.clone()), &Formula::and(a.clone(), ctx.clone())));
        prop_assert!(alpha_equal(&Formula::exists("x", phi.clone()), &Formula::exists("x", a.clone())));
    }

    #[test]
    fn desugar_then_resugar_is_identity(phi in arb_sigma(4)) {
        let v = vocab();
        let d = desugar(&phi, &v);
        let shown = format!("{:?}", d);
        prop_assert!(!shown.contains("ForallIn"));
        prop_assert_eq!(resugar(&d, &v), phi);
    }

    #[test]
    fn render_then_parse_is_identity(phi in arb_formula(4)) {
        prop_assert_eq!(parse_formula(&render_formula(&phi), &vocab()).unwrap(), phi);
    }

    #[test]
    fn parsing_rejects_without_panicking(s in "\\PC{0,60}", t in "[()a-z0-9 @.\"-]{0,80}") {
        let v = vocab();
        for x in [&s, &t] {
            let _ = read_all(x);
            let _ = parse_formula(x, &v);
            let _ = parse_deduction(x, None);
            let _ = parse_derivation(x, None);
        }
    }

    #[test]
    fn dualize_is_an_involution(phi in arb_delta0()) {
        let v = pra_vocab();
        prop_assert!(is_delta0(&v, &phi));
        let d = dualize(&v, &phi).unwrap();
        prop_assert!(is_delta0(&v, &d));
        prop_assert_eq!(dualize(&v, &d).unwrap(), phi);
    }

    #[test]
    fn dualize_commutes_with_substitution(phi in arb_delta0(), x in arb_var(), t in arb_pra_term()) {
        let v = pra_vocab();
        let a = dualize(&v, &substitute(&phi, &x, &t)).unwrap();
        let b = substitute(&dualize(&v, &phi).unwrap(), &x, &t);
        prop_assert!(alpha_equal(&a, &b), "{} vs {}", render_formula(&a), render_formula(&b));
    }

    #[test]
    fn evaluation_ignores_bound_names_and_element_names(phi in arb_formula(3), seed in any::<u64>()) {
        let t = theory();
        let sig = Signature::collect(&t.vocab, [&phi]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=3);
        let m = Enumerator::new(&sig, n).unwrap().sample(&mut rng, &[]);
        let a: BTreeMap<String, usize> = VARS.iter().map(|v| (v.to_string(), rng.gen_range(0..n))).collect();
        let base = evaluate(&m, &a, &phi).unwrap();
        let renamed = rename_bound_away(&phi, &VARS.iter().map(|v| v.to_string()).collect());
        prop_assert_eq!(evaluate(&m, &a, &renamed).unwrap(), base);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let pa = a.iter().map(|(k, &x)| (k.clone(), perm[x])).collect();
        prop_assert_eq!(evaluate(&m.permute(&perm), &pa, &phi).unwrap(), base);
    }
}

proptest! {
    #![proptest_config(cases(32))]

    #[test]
    fn sigma_formulas_are_positive(phi in arb_sigma(3)) {
        let sig = Signature::collect(&vocab(), [&phi]);
        prop_assert!(monotonicity_failure(&sig, &phi, 2).unwrap().is_none());
    }
}

// ------------------------------------------------------------ rewriting

proptest! {
    #![proptest_config(cases(64))]

    #[test]
    fn steps_are_sound((from, to, c) in arb_step()) {
        let t = theory();
        prop_assert!(check_step(&from, &to, &c, Mode::RK, &t).is_ok());
        prop_assert!(valid(&Implication::new(from, to)));
    }

    #[test]
    fn modes_are_nested((from, to, c) in arb_step()) {
        let t = theory();
        let ok = |m| check_step(&from, &to, &c, m, &t).is_ok();
        prop_assert!(!ok(Mode::RM) || ok(Mode::RI));
        prop_assert!(!ok(Mode::RI) || ok(Mode::RK));
        prop_assert_eq!(ok(Mode::RI), c.rule != RuleId::R15);
        prop_assert_eq!(ok(Mode::RM), c.rule != RuleId::R15 && c.rule != RuleId::R2);
    }

    #[test]
    fn checked_steps_can_be_inferred((from, to, c) in arb_step()) {
        let t = theory();
        match infer_step(&from, &to, Mode::RK, &t) {
            Ok(found) => prop_assert!(check_step(&from, &to, &found, Mode::RK, &t).is_ok()),
            Err(InferError::Ambiguous(all)) => {
                prop_assert!(!all.is_empty());
                for f in &all {
                    prop_assert!(check_step(&from, &to, f, Mode::RK, &t).is_ok());
                }
            }
            Err(e) => prop_assert!(false, "{} => {} by {}: {}", render_formula(&from), render_formula(&to), c, e),
        }
    }

    #[test]
    fn concatenation_preserves_checking((a0, a1, c) in arb_step(), (b1, b2, e) in arb_step()) {
        let t = theory();
        let a = single_step(&a0, &a1, &c);
        prop_assert!(concatenate(&a, &single_step(&b1, &b2, &e)).is_none() || alpha_equal(&a1, &b1));
        // a step from a1 itself always joins
        let lifted = StepCertificate { rule: RuleId::R5, path: Default::default(), params: Params { phi: Some(a1.clone()), ..Params::default() } };
        let b = single_step(&a1, &Formula::and(a1.clone(), a1.clone()), &lifted);
        let ab = concatenate(&a, &b).unwrap();
        prop_assert_eq!(ab.steps(), 2);
        let script = ab.to_script(TheoryRef::Inline(Box::new(t.clone())));
        let again = check_deduction(&script, &t, Mode::RK).unwrap();
        prop_assert_eq!(again, ab);
    }

    #[test]
    fn deduction_scripts_render_and_parse_back((from, to, c) in arb_step()) {
        let t = theory();
        let script = single_step(&from, &to, &c).to_script(TheoryRef::Inline(Box::new(t.clone())));
        let (parsed, pt) = parse_deduction(&render_deduction(&script), None).unwrap();
        prop_assert_eq!(&parsed, &script);
        prop_assert!(check_deduction(&parsed, &pt, Mode::RK).is_ok());
    }

    #[test]
    fn single_steps_round_trip_through_sequents((from, to, c) in arb_step()) {
        let t = theory();
        let d = single_step(&from, &to, &c);
        let sigma = convert(Artifact::Deduction(d, Mode::RK), Target::Sequent(System::LKSigma), &t).unwrap();
        let back = convert(sigma, Target::Rewrite(Mode::RK), &t).unwrap();
        let Artifact::Deduction(b, _) = back else { unreachable!() };
        prop_assert!(alpha_equal(&b.formulas[0], &from));
        prop_assert!(alpha_equal(b.formulas.last().unwrap(), &to));
    }
}

// ------------------------------------------------------------ derivations

proptest! {
    #![proptest_config(cases(24))]

    #[test]
    fn generated_derivations_are_sound(seed in any::<u64>(), rules in 1usize..=5) {
        let t = theory();
        let d = Gen::new(seed).lksigma(rules);
        prop_assert!(checks(&d, System::LKSigma, &t).is_ok());
        let target = derivation_target(&d, &t).unwrap();
        let r = audit(&target, &AuditOptions { samples: 20, ..AuditOptions::default() }).unwrap();
        prop_assert!(r.is_clean(), "{}", r.render());
    }

    #[test]
    fn checking_is_deterministic(seed in any::<u64>()) {
        let t = theory();
        let mut g = Gen::new(seed);
        let d = g.lk_with_cuts(1 + (seed % 3) as usize);
        let cfg = SystemConfig::new(System::LK, t);
        prop_assert_eq!(check_derivation(&d, &cfg), check_derivation(&d, &cfg));
        let mut broken = d.clone();
        broken.conclusion.succ.push(Formula::Bottom);
        broken.conclusion.succ.push(Formula::Top);
        let once = check_derivation(&broken, &cfg);
        prop_assert_eq!(&once, &check_derivation(&broken, &cfg));
    }

    #[test]
    fn derivations_render_and_parse_back(seed in any::<u64>()) {
        let t = theory();
        let root = Gen::new(seed).lksigma(1 + (seed % 5) as usize);
        let file = DerivationFile { system: System::LKSigma, theory: TheoryRef::Inline(Box::new(t)), root };
        let (parsed, _) = parse_derivation(&render_derivation(&file), None).unwrap();
        prop_assert_eq!(parsed.root, file.root);
    }

    #[test]
    fn cut_elimination_keeps_the_end_sequent(seed in any::<u64>()) {
        let t = theory();
        let d = Gen::new(seed).lk_with_cuts(1 + (seed % 3) as usize);
        let e = eliminate_cuts(&d, &t).unwrap();
        prop_assert_eq!(&e.conclusion, &d.conclusion);
        prop_assert!(e.is_cut_free());
        prop_assert!(checks(&e, System::LK, &t).is_ok());
    }

    #[test]
    fn cut_elimination_stays_intuitionistic(seed in any::<u64>()) {
        let t = theory();
        let d = lksigma_to_rewrite(&Gen::new(seed).lksigma(1 + (seed % 4) as usize), &t).unwrap();
        prop_assume!(d.certificates.iter().all(|c| c.rule != RuleId::R15 && c.params.axiom.is_none()));
        let li = rewrite_to_lk(&d, &t, System::LI).unwrap();
        prop_assert!(checks(&li, System::LI, &t).is_ok());
        prop_assert!(d.steps() < 2 || li.count_rule(RuleName::Cut) > 0);
        let e = eliminate_cuts(&li, &t).unwrap();
        prop_assert_eq!(&e.conclusion, &li.conclusion);
        prop_assert!(e.is_cut_free());
        prop_assert!(checks(&e, System::LI, &t).is_ok(), "{:?}", checks(&e, System::LI, &t));
    }

    #[test]
    fn sequents_round_trip_through_rewriting(seed in any::<u64>()) {
        let t = theory();
        let d = Gen::new(seed).lksigma(1 + (seed % 5) as usize);
        let r = lksigma_to_rewrite(&d, &t).unwrap();
        let ends = [&d.conclusion.ante[0], &d.conclusion.succ[0]];
        prop_assert!(alpha_equal(&r.formulas[0], ends[0]));
        prop_assert!(alpha_equal(r.formulas.last().unwrap(), ends[1]));
        let lk = rewrite_to_lk(&r, &t, System::LK).unwrap();
        prop_assert!(checks(&lk, System::LK, &t).is_ok());
        let cycle = convert(Artifact::Deduction(r.clone(), Mode::RK), Target::Sequent(System::LKSigma), &t).unwrap();
        prop_assert!(cycle.verify(&t).is_ok());
        let Artifact::Derivation(c, _) = cycle else { unreachable!() };
        prop_assert!(c.count_rule(RuleName::Cut) == 0);
    }
}

// ------------------------------------------------------------ theories

#[test]
fn builtin_axioms_and_schema_instances_are_sigma() {
    for name in ["equality", "pra", "prs", "prs_infinity", "pure"] {
        let t = builtin(name).unwrap();
        for (n, a) in &t.axioms {
            assert!(a.check(&t.vocab).is_ok(), "{name} axiom {n}");
        }
        let sig = Signature::of_theory(&t, []);
        for (n, a) in theory_instances(&t, &sig, &SchemaBudget::default()) {
            assert!(
                a.check(&t.vocab).is_ok(),
                "{name} instance {n}: {} => {}",
                render_formula(&a.antecedent),
                render_formula(&a.consequent)
            );
        }
    }
}
