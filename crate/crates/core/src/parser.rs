//! S-expression formats for formulas, vocabularies, theories, finite
//! structures, deduction scripts and derivation trees.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::calculus::{Derivation, RuleName, RuleParams, Sequent, System};
use crate::formula::{check_sigma, ContextPath, Formula, FunSym, Grammar, Selector, Term, Vocabulary};
use crate::rewrite::{DeductionScript, Params, RuleId, ScriptItem, StepCertificate};
use crate::semantics::FiniteStructure;
use crate::theories::{self, AxiomRef, Family, Schema, Theory};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{pos}: {message}")]
pub struct Diagnostic {
    pub pos: Pos,
    pub message: String,
}

fn err<T>(pos: Pos, message: impl Into<String>) -> Result<T, Diagnostic> {
    Err(Diagnostic { pos, message: message.into() })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    Atom(String, Pos),
    Str(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom(_, p) | SExpr::Str(_, p) | SExpr::List(_, p) => *p,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            _ => None,
        }
    }

    fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(xs, _) => Some(xs),
            _ => None,
        }
    }

    /// The head keyword and arguments of `(head args…)`.
    pub fn form(&self) -> Option<(&str, &[SExpr])> {
        let xs = self.list()?;
        let head = xs.first()?.atom()?;
        Some((head, &xs[1..]))
    }
}

/// Reads every top-level s-expression of `text`.
pub fn read_all(text: &str) -> Result<Vec<SExpr>, Diagnostic> {
    let mut r = Reader { chars: text.chars().collect(), i: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        r.skip_ws();
        if r.peek().is_none() {
            return Ok(out);
        }
        out.push(r.expr()?);
    }
}

/// Reads exactly one s-expression.
pub fn read_one(text: &str) -> Result<SExpr, Diagnostic> {
    let mut all = read_all(text)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => err(Pos { line: 1, col: 1 }, "empty input"),
        _ => err(all[1].pos(), "unexpected trailing input"),
    }
}

struct Reader {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
}

impl Reader {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn expr(&mut self) -> Result<SExpr, Diagnostic> {
        self.skip_ws();
        let start = self.pos();
        match self.peek() {
            None => err(start, "unexpected end of input"),
            Some('(') => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.peek() {
                        None => return err(start, "unclosed parenthesis"),
                        Some(')') => {
                            self.bump();
                            return Ok(SExpr::List(items, start));
                        }
                        _ => items.push(self.expr()?),
                    }
                }
            }
            Some(')') => err(start, "unexpected `)`"),
            Some('"') => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return err(start, "unterminated string"),
                        Some('"') => return Ok(SExpr::Str(s, start)),
                        Some('\\') => match self.bump() {
                            Some(c) => s.push(c),
                            None => return err(start, "unterminated string"),
                        },
                        Some(c) => s.push(c),
                    }
                }
            }
            Some(_) => {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' || c == '"' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(SExpr::Atom(s, start))
            }
        }
    }
}

const KEYWORDS: &[&str] = &["top", "bot", "and", "or", "=>", "exists", "forallin", "forall"];

fn is_ident(s: &str) -> bool {
    !s.is_empty() && !KEYWORDS.contains(&s)
}

// ---------------------------------------------------------------- terms

fn parse_symbol(e: &SExpr, vocab: &Vocabulary) -> Result<FunSym, Diagnostic> {
    match e {
        SExpr::Atom(name, pos) => {
            if !vocab.functions.contains_key(name) {
                return err(*pos, format!("unknown function symbol `{name}`"));
            }
            Ok(FunSym::Named(name.clone()))
        }
        SExpr::List(..) => {
            let pos = e.pos();
            let Some((head, args)) = e.form() else { return err(pos, "malformed function symbol") };
            let num = |x: &SExpr| -> Result<usize, Diagnostic> {
                x.atom().and_then(|s| s.parse().ok()).map_or_else(|| err(x.pos(), "expected a natural number"), Ok)
            };
            let sym = match (head, args.len()) {
                ("P", 2) => FunSym::Proj { arity: num(&args[0])?, index: num(&args[1])? },
                ("C", n) if n >= 2 => FunSym::Compose(
                    Box::new(parse_symbol(&args[0], vocab)?),
                    args[1..].iter().map(|a| parse_symbol(a, vocab)).collect::<Result<_, _>>()?,
                ),
                ("R", 2) => FunSym::PrimRec(Box::new(parse_symbol(&args[0], vocab)?), Box::new(parse_symbol(&args[1], vocab)?)),
                ("R", 1) => FunSym::SetRec(Box::new(parse_symbol(&args[0], vocab)?)),
                ("I", 1) => FunSym::Image(Box::new(parse_symbol(&args[0], vocab)?)),
                ("Sep", 2) => FunSym::Separation { arity: num(&args[0])?, formula: Box::new(parse_formula_expr(&args[1], vocab, true)?) },
                _ => return err(pos, format!("malformed structured symbol `{head}`")),
            };
            vocab.function_arity(&sym).map_err(|e| Diagnostic { pos, message: e.to_string() })?;
            Ok(sym)
        }
        SExpr::Str(_, pos) => err(*pos, "expected a function symbol"),
    }
}

pub fn parse_term_expr(e: &SExpr, vocab: &Vocabulary) -> Result<Term, Diagnostic> {
    match e {
        SExpr::Atom(name, pos) => {
            if !is_ident(name) {
                return err(*pos, format!("`{name}` is not a term"));
            }
            match vocab.functions.get(name) {
                Some(0) => Ok(Term::constant(name.clone())),
                Some(n) => err(*pos, format!("`{name}` expects {n} arguments, found 0")),
                None => Ok(Term::var(name.clone())),
            }
        }
        SExpr::Str(_, pos) => err(*pos, "unexpected string"),
        SExpr::List(items, pos) => {
            let Some(head) = items.first() else { return err(*pos, "empty term") };
            let sym = parse_symbol(head, vocab)?;
            let args = items[1..].iter().map(|a| parse_term_expr(a, vocab)).collect::<Result<Vec<_>, _>>()?;
            let expected = vocab.function_arity(&sym).map_err(|e| Diagnostic { pos: *pos, message: e.to_string() })?;
            if expected != args.len() {
                return err(*pos, format!("`{}` expects {expected} arguments, found {}", render_symbol(&sym), args.len()));
            }
            Ok(Term::App(sym, args))
        }
    }
}

fn parse_var(e: &SExpr, vocab: &Vocabulary) -> Result<String, Diagnostic> {
    match e {
        SExpr::Atom(name, pos) => {
            if !is_ident(name) || vocab.functions.contains_key(name) {
                return err(*pos, format!("`{name}` cannot be used as a variable"));
            }
            Ok(name.clone())
        }
        _ => err(e.pos(), "expected a variable"),
    }
}

// ---------------------------------------------------------------- formulas

pub fn parse_formula_expr(e: &SExpr, vocab: &Vocabulary, sigma: bool) -> Result<Formula, Diagnostic> {
    match e {
        SExpr::Atom(name, pos) => match name.as_str() {
            "top" => Ok(Formula::Top),
            "bot" => Ok(Formula::Bottom),
            _ => match vocab.relations.get(name) {
                Some(0) => Ok(Formula::Atom(name.clone(), Vec::new())),
                Some(n) => err(*pos, format!("`{name}` expects {n} arguments, found 0")),
                None => err(*pos, format!("unknown relation symbol `{name}`")),
            },
        },
        SExpr::Str(_, pos) => err(*pos, "unexpected string"),
        SExpr::List(items, pos) => {
            let pos = *pos;
            let Some(head) = items.first().and_then(SExpr::atom) else {
                return err(pos, "expected a connective or relation symbol");
            };
            let args = &items[1..];
            let arity = |n: usize| -> Result<(), Diagnostic> {
                if args.len() == n {
                    Ok(())
                } else {
                    err(pos, format!("`{head}` takes {n} arguments, found {}", args.len()))
                }
            };
            let sub = |x: &SExpr| parse_formula_expr(x, vocab, sigma);
            match head {
                "top" | "bot" => err(pos, format!("`{head}` takes no arguments")),
                "and" => {
                    arity(2)?;
                    Ok(Formula::and(sub(&args[0])?, sub(&args[1])?))
                }
                "or" => {
                    arity(2)?;
                    Ok(Formula::or(sub(&args[0])?, sub(&args[1])?))
                }
                "=>" => {
                    if sigma {
                        return err(pos, "implication is not allowed in a Σ formula");
                    }
                    arity(2)?;
                    Ok(Formula::implies(sub(&args[0])?, sub(&args[1])?))
                }
                "exists" => {
                    arity(2)?;
                    Ok(Formula::exists(parse_var(&args[0], vocab)?, sub(&args[1])?))
                }
                "forall" => {
                    if sigma {
                        return err(pos, "unguarded universal quantifier is not allowed in a Σ formula");
                    }
                    arity(2)?;
                    Ok(Formula::forall(parse_var(&args[0], vocab)?, sub(&args[1])?))
                }
                "forallin" => {
                    arity(3)?;
                    let v = parse_var(&args[0], vocab)?;
                    let t = parse_term_expr(&args[1], vocab)?;
                    if t.contains_var(&v) {
                        return err(args[1].pos(), format!("bound variable `{v}` occurs in its own bound"));
                    }
                    Ok(Formula::forall_in(v, t, sub(&args[2])?))
                }
                rel => {
                    let Some(&n) = vocab.relations.get(rel) else {
                        return err(items[0].pos(), format!("unknown relation symbol `{rel}`"));
                    };
                    if n != args.len() {
                        return err(pos, format!("`{rel}` expects {n} arguments, found {}", args.len()));
                    }
                    let ts = args.iter().map(|a| parse_term_expr(a, vocab)).collect::<Result<_, _>>()?;
                    Ok(Formula::Atom(rel.to_string(), ts))
                }
            }
        }
    }
}

/// Parses a formula of full first-order logic.
pub fn parse_formula(text: &str, vocab: &Vocabulary) -> Result<Formula, Diagnostic> {
    parse_formula_expr(&read_one(text)?, vocab, false)
}

/// Parses a formula and rejects anything outside the Σ fragment.
pub fn parse_sigma(text: &str, vocab: &Vocabulary) -> Result<Formula, Diagnostic> {
    let e = read_one(text)?;
    let f = parse_formula_expr(&e, vocab, true)?;
    check_sigma(&f, vocab).map_err(|x| Diagnostic { pos: e.pos(), message: x.to_string() })?;
    Ok(f)
}

pub fn parse_term(text: &str, vocab: &Vocabulary) -> Result<Term, Diagnostic> {
    parse_term_expr(&read_one(text)?, vocab)
}

pub fn render_symbol(f: &FunSym) -> String {
    match f {
        FunSym::Named(n) => n.clone(),
        FunSym::Proj { arity, index } => format!("(P {arity} {index})"),
        FunSym::Compose(g, hs) => {
            let mut s = format!("(C {}", render_symbol(g));
            for h in hs {
                s.push(' ');
                s.push_str(&render_symbol(h));
            }
            s.push(')');
            s
        }
        FunSym::PrimRec(g, h) => format!("(R {} {})", render_symbol(g), render_symbol(h)),
        FunSym::Image(g) => format!("(I {})", render_symbol(g)),
        FunSym::SetRec(g) => format!("(R {})", render_symbol(g)),
        FunSym::Separation { arity, formula } => format!("(Sep {arity} {})", render_formula(formula)),
    }
}

pub fn render_term(t: &Term) -> String {
    let mut s = String::new();
    write_term(t, &mut s);
    s
}

fn write_term(t: &Term, out: &mut String) {
    match t {
        Term::Var(v) => out.push_str(v),
        Term::App(FunSym::Named(n), args) if args.is_empty() => out.push_str(n),
        Term::App(f, args) => {
            out.push('(');
            out.push_str(&render_symbol(f));
            for a in args {
                out.push(' ');
                write_term(a, out);
            }
            out.push(')');
        }
    }
}

pub fn render_formula(f: &Formula) -> String {
    let mut s = String::new();
    write_formula(f, &mut s);
    s
}

fn write_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::Top => out.push_str("top"),
        Formula::Bottom => out.push_str("bot"),
        Formula::Atom(r, args) if args.is_empty() => out.push_str(r),
        Formula::Atom(r, args) => {
            out.push('(');
            out.push_str(r);
            for a in args {
                out.push(' ');
                write_term(a, out);
            }
            out.push(')');
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            out.push_str(match f {
                Formula::And(..) => "(and ",
                Formula::Or(..) => "(or ",
                _ => "(=> ",
            });
            write_formula(a, out);
            out.push(' ');
            write_formula(b, out);
            out.push(')');
        }
        Formula::Exists(v, b) | Formula::Forall(v, b) => {
            out.push_str(if matches!(f, Formula::Exists(..)) { "(exists " } else { "(forall " });
            out.push_str(v);
            out.push(' ');
            write_formula(b, out);
            out.push(')');
        }
        Formula::ForallIn(v, t, b) => {
            out.push_str("(forallin ");
            out.push_str(v);
            out.push(' ');
            write_term(t, out);
            out.push(' ');
            write_formula(b, out);
            out.push(')');
        }
    }
}

// ---------------------------------------------------------------- paths

fn parse_path(args: &[SExpr]) -> Result<ContextPath, Diagnostic> {
    args.iter()
        .map(|a| match a.atom() {
            Some("l") => Ok(Selector::Left),
            Some("r") => Ok(Selector::Right),
            Some("b") => Ok(Selector::Body),
            _ => err(a.pos(), "path selectors are l, r and b"),
        })
        .collect::<Result<_, _>>()
        .map(ContextPath)
}

pub fn render_path(p: &ContextPath) -> String {
    let mut s = String::from("(at");
    for sel in &p.0 {
        s.push(' ');
        s.push_str(sel.letter());
    }
    s.push(')');
    s
}

// ---------------------------------------------------------------- vocabularies

fn natural(e: &SExpr) -> Result<usize, Diagnostic> {
    e.atom().and_then(|s| s.parse().ok()).map_or_else(|| err(e.pos(), "expected a natural number"), Ok)
}

fn name_of(e: &SExpr) -> Result<String, Diagnostic> {
    match e {
        SExpr::Atom(s, _) => Ok(s.clone()),
        _ => err(e.pos(), "expected a name"),
    }
}

/// Applies the clauses of a `(vocab …)` form to `vocab`.
fn apply_vocab(args: &[SExpr], vocab: &mut Vocabulary) -> Result<(), Diagnostic> {
    for item in args {
        let Some((head, xs)) = item.form() else { return err(item.pos(), "expected a vocabulary clause") };
        let want = |n: usize| -> Result<(), Diagnostic> {
            if xs.len() == n {
                Ok(())
            } else {
                err(item.pos(), format!("`{head}` takes {n} arguments"))
            }
        };
        match head {
            "rel" => {
                want(2)?;
                let name = name_of(&xs[0])?;
                if KEYWORDS.contains(&name.as_str()) {
                    return err(xs[0].pos(), format!("`{name}` is reserved"));
                }
                if vocab.functions.contains_key(&name) {
                    return err(xs[0].pos(), format!("name `{name}` declared twice"));
                }
                vocab.relations.insert(name, natural(&xs[1])?);
            }
            "fun" => {
                want(2)?;
                let name = name_of(&xs[0])?;
                if KEYWORDS.contains(&name.as_str()) || vocab.relations.contains_key(&name) {
                    return err(xs[0].pos(), format!("name `{name}` cannot be a function symbol"));
                }
                vocab.functions.insert(name, natural(&xs[1])?);
            }
            "notin" => {
                want(1)?;
                let name = name_of(&xs[0])?;
                let old = std::mem::replace(&mut vocab.notin, name.clone());
                if old == "notin" && name != old {
                    vocab.relations.remove(&old);
                }
                vocab.relations.insert(name, 2);
            }
            "guard" => {
                want(1)?;
                let name = name_of(&xs[0])?;
                vocab.relations.insert(name.clone(), 2);
                vocab.guard = Some(name);
            }
            "dual" => {
                want(2)?;
                let (a, b) = (name_of(&xs[0])?, name_of(&xs[1])?);
                for n in [&a, &b] {
                    if !vocab.relations.contains_key(n) {
                        return err(item.pos(), format!("unknown relation symbol `{n}`"));
                    }
                }
                if !vocab.duals.contains(&(a.clone(), b.clone())) {
                    vocab.duals.push((a, b));
                }
            }
            "grammar" => {
                want(1)?;
                vocab.grammar = match xs[0].atom() {
                    Some("pra") => Some(Grammar::Pra),
                    Some("prs") => Some(Grammar::Prs),
                    Some("none") => None,
                    _ => return err(xs[0].pos(), "grammar is pra, prs or none"),
                };
            }
            other => return err(item.pos(), format!("unknown vocabulary clause `{other}`")),
        }
    }
    vocab.validate().map_err(|e| Diagnostic { pos: args.first().map(SExpr::pos).unwrap_or_default(), message: e.to_string() })
}

pub fn parse_vocab(text: &str) -> Result<Vocabulary, Diagnostic> {
    let e = read_one(text)?;
    let Some(("vocab", args)) = e.form() else { return err(e.pos(), "expected (vocab …)") };
    let mut vocab = Vocabulary::default();
    apply_vocab(args, &mut vocab)?;
    Ok(vocab)
}

pub fn render_vocab(v: &Vocabulary) -> String {
    let mut s = String::from("(vocab");
    s.push_str(&format!(" (notin {})", v.notin));
    if let Some(g) = &v.guard {
        s.push_str(&format!(" (guard {g})"));
    }
    for (r, n) in &v.relations {
        s.push_str(&format!(" (rel {r} {n})"));
    }
    for (f, n) in &v.functions {
        s.push_str(&format!(" (fun {f} {n})"));
    }
    for (a, b) in &v.duals {
        s.push_str(&format!(" (dual {a} {b})"));
    }
    match v.grammar {
        Some(Grammar::Pra) => s.push_str(" (grammar pra)"),
        Some(Grammar::Prs) => s.push_str(" (grammar prs)"),
        None => {}
    }
    s.push(')');
    s
}

// ---------------------------------------------------------------- theories

/// How a file names its theory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TheoryRef {
    Builtin(String),
    File(String),
    Inline(Box<Theory>),
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Proj => "proj",
        Family::Compose => "compose",
        Family::RecZero => "rec-zero",
        Family::RecSucc => "rec-succ",
        Family::ImageIntro => "image-intro",
        Family::ImageElim => "image-elim",
        Family::SetRec => "set-rec",
        Family::SepIntro => "sep-intro",
        Family::SepBound => "sep-bound",
        Family::SepProp => "sep-prop",
    }
}

fn family_from(s: &str) -> Option<Family> {
    use Family::*;
    [Proj, Compose, RecZero, RecSucc, ImageIntro, ImageElim, SetRec, SepIntro, SepBound, SepProp].into_iter().find(|f| family_name(*f) == s)
}

fn merge_theory(into: &mut Theory, other: Theory) {
    let v = other.vocab;
    into.vocab.relations.extend(v.relations);
    into.vocab.functions.extend(v.functions);
    if into.vocab.notin == "notin" || into.vocab.notin == v.notin {
        into.vocab.notin = v.notin;
    }
    if v.guard.is_some() {
        into.vocab.guard = v.guard;
    }
    for d in v.duals {
        if !into.vocab.duals.contains(&d) {
            into.vocab.duals.push(d);
        }
    }
    if v.grammar.is_some() {
        into.vocab.grammar = v.grammar;
    }
    for (n, a) in other.axioms {
        if into.axiom(&n).is_none() {
            into.axioms.push((n, a));
        }
    }
    for (n, f) in other.families {
        if into.family(&n).is_none() {
            into.families.push((n, f));
        }
    }
    for s in other.schemas {
        if !into.schemas.contains(&s) {
            into.schemas.push(s);
        }
    }
}

/// Builds a theory from the top-level forms of a theory file.
pub fn theory_from_forms(forms: &[SExpr], default_name: &str) -> Result<Theory, Diagnostic> {
    let mut t = Theory::empty(default_name, Vocabulary::default());
    // Declarations and extensions first, so axioms may use any declared symbol.
    for f in forms {
        let Some((head, args)) = f.form() else { return err(f.pos(), "expected a theory clause") };
        match head {
            "name" => {
                if args.len() != 1 {
                    return err(f.pos(), "`name` takes one argument");
                }
                t.name = name_of(&args[0])?;
            }
            "vocab" => apply_vocab(args, &mut t.vocab)?,
            "extends" => {
                for a in args {
                    let name = name_of(a)?;
                    let base = if name == "equality" {
                        theories::equality(t.vocab.clone())
                    } else {
                        theories::builtin(&name).map_err(|e| Diagnostic { pos: a.pos(), message: e.to_string() })?
                    };
                    merge_theory(&mut t, base);
                }
            }
            "axiom" | "schema" | "family" => {}
            other => return err(f.pos(), format!("unknown theory clause `{other}`")),
        }
    }
    for f in forms {
        let (head, args) = f.form().unwrap();
        match head {
            "axiom" => {
                if args.len() != 3 {
                    return err(f.pos(), "`axiom` takes a name, an antecedent and a consequent");
                }
                let name = name_of(&args[0])?;
                if t.axiom(&name).is_some() || t.family(&name).is_some() {
                    return err(args[0].pos(), format!("axiom `{name}` declared twice"));
                }
                let lhs = sigma_expr(&args[1], &t.vocab)?;
                let rhs = sigma_expr(&args[2], &t.vocab)?;
                t.axioms.push((name, crate::formula::Implication::new(lhs, rhs)));
            }
            "schema" => {
                for a in args {
                    let s = match a.atom() {
                        Some("congruence") => Schema::Congruence,
                        Some("induction") => Schema::Induction,
                        _ => return err(a.pos(), "schemas are congruence and induction"),
                    };
                    if !t.schemas.contains(&s) {
                        t.schemas.push(s);
                    }
                }
            }
            "family" => {
                if args.len() != 2 {
                    return err(f.pos(), "`family` takes a name and a kind");
                }
                let name = name_of(&args[0])?;
                let kind = args[1].atom().and_then(family_from).map_or_else(|| err(args[1].pos(), "unknown family kind"), Ok)?;
                if t.family(&name).is_none() {
                    t.families.push((name, kind));
                }
            }
            _ => {}
        }
    }
    Ok(t)
}

fn sigma_expr(e: &SExpr, vocab: &Vocabulary) -> Result<Formula, Diagnostic> {
    let f = parse_formula_expr(e, vocab, true)?;
    check_sigma(&f, vocab).map_err(|x| Diagnostic { pos: e.pos(), message: x.to_string() })?;
    Ok(f)
}

pub fn parse_theory(text: &str) -> Result<Theory, Diagnostic> {
    let forms = read_all(text)?;
    theory_from_forms(&forms, "file")
}

pub fn render_theory(t: &Theory) -> String {
    let mut s = format!("(name {})\n{}\n", t.name, render_vocab(&t.vocab));
    for (n, a) in &t.axioms {
        s.push_str(&format!("(axiom {n} {} {})\n", render_formula(&a.antecedent), render_formula(&a.consequent)));
    }
    for (n, f) in &t.families {
        s.push_str(&format!("(family {n} {})\n", family_name(*f)));
    }
    if !t.schemas.is_empty() {
        s.push_str("(schema");
        for sc in &t.schemas {
            s.push(' ');
            s.push_str(sc.name());
        }
        s.push_str(")\n");
    }
    s
}

fn parse_theory_ref(args: &[SExpr], pos: Pos) -> Result<TheoryRef, Diagnostic> {
    match args {
        [SExpr::Atom(name, _)] => Ok(TheoryRef::Builtin(name.clone())),
        [SExpr::Str(path, _)] => Ok(TheoryRef::File(path.clone())),
        forms if forms.iter().all(|f| f.list().is_some()) => Ok(TheoryRef::Inline(Box::new(theory_from_forms(forms, "inline")?))),
        _ => err(pos, "expected a builtin theory name, a quoted path or theory clauses"),
    }
}

fn render_theory_ref(r: &TheoryRef) -> String {
    match r {
        TheoryRef::Builtin(n) => format!("(theory {n})"),
        TheoryRef::File(p) => format!("(theory {})", quote(p)),
        TheoryRef::Inline(t) => {
            let body = render_theory(t);
            format!("(theory {})", body.trim_end().replace('\n', " "))
        }
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Resolves a theory reference; files are read relative to `base`.
pub fn resolve_theory(r: &TheoryRef, base: Option<&Path>) -> Result<Theory, String> {
    match r {
        TheoryRef::Builtin(n) => theories::builtin(n).map_err(|e| e.to_string()),
        TheoryRef::Inline(t) => Ok((**t).clone()),
        TheoryRef::File(p) => {
            let path: PathBuf = match base {
                Some(b) if Path::new(p).is_relative() => b.join(p),
                _ => PathBuf::from(p),
            };
            let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut t = parse_theory(&text).map_err(|e| format!("{}:{e}", path.display()))?;
            if t.name == "file" {
                t.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            }
            Ok(t)
        }
    }
}

// ---------------------------------------------------------------- axiom references

fn parse_axiom_ref(args: &[SExpr], pos: Pos, vocab: &Vocabulary) -> Result<AxiomRef, Diagnostic> {
    let Some(first) = args.first() else { return err(pos, "`axiom` needs a name") };
    let name = name_of(first)?;
    match name.as_str() {
        "congruence" => {
            if args.len() != 4 {
                return err(pos, "congruence takes a variable, a term and a formula");
            }
            Ok(AxiomRef::Congruence {
                var: parse_var(&args[1], vocab)?,
                target: parse_term_expr(&args[2], vocab)?,
                formula: sigma_expr(&args[3], vocab)?,
            })
        }
        "induction" => {
            if args.len() != 4 {
                return err(pos, "induction takes a variable, a bound and a formula");
            }
            Ok(AxiomRef::Induction {
                var: parse_var(&args[1], vocab)?,
                bound: parse_term_expr(&args[2], vocab)?,
                theta: sigma_expr(&args[3], vocab)?,
            })
        }
        _ => match args.len() {
            1 => Ok(AxiomRef::Named { name, symbol: None }),
            2 => Ok(AxiomRef::Named { name, symbol: Some(parse_symbol(&args[1], vocab)?) }),
            _ => err(pos, "axiom reference takes a name and an optional symbol"),
        },
    }
}

pub fn render_axiom_ref(r: &AxiomRef) -> String {
    match r {
        AxiomRef::Named { name, symbol: None } => format!("(axiom {name})"),
        AxiomRef::Named { name, symbol: Some(s) } => format!("(axiom {name} {})", render_symbol(s)),
        AxiomRef::Congruence { var, target, formula } => {
            format!("(axiom congruence {var} {} {})", render_term(target), render_formula(formula))
        }
        AxiomRef::Induction { var, bound, theta } => {
            format!("(axiom induction {var} {} {})", render_term(bound), render_formula(theta))
        }
    }
}

fn parse_binding(args: &[SExpr], pos: Pos, vocab: &Vocabulary, into: &mut BTreeMap<String, Term>) -> Result<(), Diagnostic> {
    if args.len() != 2 {
        return err(pos, "`bind` takes a variable and a term");
    }
    let v = parse_var(&args[0], vocab)?;
    if into.contains_key(&v) {
        return err(pos, format!("variable `{v}` bound twice"));
    }
    into.insert(v, parse_term_expr(&args[1], vocab)?);
    Ok(())
}

fn render_bindings(b: &BTreeMap<String, Term>, out: &mut String) {
    for (v, t) in b {
        out.push_str(&format!(" (bind {v} {})", render_term(t)));
    }
}

// ---------------------------------------------------------------- structures

pub fn parse_structure(text: &str, vocab: &Vocabulary) -> Result<FiniteStructure, Diagnostic> {
    let e = read_one(text)?;
    parse_structure_expr(&e, vocab)
}

pub fn parse_structure_expr(e: &SExpr, vocab: &Vocabulary) -> Result<FiniteStructure, Diagnostic> {
    let Some(("structure", args)) = e.form() else { return err(e.pos(), "expected (structure …)") };
    let mut size = None;
    for a in args {
        if let Some(("size", xs)) = a.form() {
            if xs.len() != 1 {
                return err(a.pos(), "`size` takes one number");
            }
            size = Some(natural(&xs[0])?);
        }
    }
    let Some(size) = size else { return err(e.pos(), "missing (size n)") };
    if size == 0 {
        return err(e.pos(), "structures are nonempty");
    }
    let elem = |x: &SExpr| -> Result<usize, Diagnostic> {
        let n = natural(x)?;
        if n >= size {
            return err(x.pos(), format!("element {n} outside 0..{}", size - 1));
        }
        Ok(n)
    };
    let tuple = |x: &SExpr| -> Result<Vec<usize>, Diagnostic> {
        match x {
            SExpr::List(items, _) => items.iter().map(elem).collect(),
            _ => err(x.pos(), "expected a tuple"),
        }
    };
    let mut s = FiniteStructure::new(size);
    s.notin = vocab.notin.clone();
    for a in args {
        let Some((head, xs)) = a.form() else { return err(a.pos(), "expected a structure clause") };
        match head {
            "size" => {}
            "rel" => {
                let Some(first) = xs.first() else { return err(a.pos(), "`rel` needs a name") };
                let name = name_of(first)?;
                let Some(&n) = vocab.relations.get(&name) else {
                    return err(first.pos(), format!("unknown relation symbol `{name}`"));
                };
                let entry = s.relations.entry(name.clone()).or_default();
                for t in &xs[1..] {
                    let tup = tuple(t)?;
                    if tup.len() != n {
                        return err(t.pos(), format!("`{name}` is {n}-ary"));
                    }
                    entry.insert(tup);
                }
            }
            "fun" => {
                let Some(first) = xs.first() else { return err(a.pos(), "`fun` needs a symbol") };
                let sym = parse_symbol(first, vocab)?;
                let n = vocab.function_arity(&sym).map_err(|x| Diagnostic { pos: first.pos(), message: x.to_string() })?;
                let table = s.functions.entry(sym.clone()).or_default();
                for row in &xs[1..] {
                    let Some(items) = row.list() else { return err(row.pos(), "expected ((args…) value)") };
                    if items.len() != 2 {
                        return err(row.pos(), "expected ((args…) value)");
                    }
                    let args = tuple(&items[0])?;
                    if args.len() != n {
                        return err(row.pos(), format!("`{}` is {n}-ary", render_symbol(&sym)));
                    }
                    if table.insert(args, elem(&items[1])?).is_some() {
                        return err(row.pos(), "duplicate table row");
                    }
                }
            }
            other => return err(a.pos(), format!("unknown structure clause `{other}`")),
        }
    }
    for (sym, table) in &s.functions {
        let n = vocab.function_arity(sym).unwrap_or(0);
        let expected = size.pow(n as u32);
        if table.len() != expected {
            return err(e.pos(), format!("table of `{}` has {} rows, needs {expected}", render_symbol(sym), table.len()));
        }
    }
    Ok(s)
}

pub fn render_structure(s: &FiniteStructure) -> String {
    let mut out = format!("(structure (size {})", s.size);
    let tuple = |t: &[usize]| format!("({})", t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
    for (r, tuples) in &s.relations {
        out.push_str(&format!("\n  (rel {r}"));
        for t in tuples {
            out.push(' ');
            out.push_str(&tuple(t));
        }
        out.push(')');
    }
    for (f, table) in &s.functions {
        out.push_str(&format!("\n  (fun {}", render_symbol(f)));
        for (args, v) in table {
            out.push_str(&format!(" ({} {v})", tuple(args)));
        }
        out.push(')');
    }
    out.push(')');
    out
}

// ---------------------------------------------------------------- deduction scripts

fn parse_params(args: &[SExpr], vocab: &Vocabulary) -> Result<Params, Diagnostic> {
    let mut p = Params::default();
    for a in args {
        let Some((head, xs)) = a.form() else { return err(a.pos(), "expected a parameter") };
        let one = || -> Result<&SExpr, Diagnostic> {
            if xs.len() == 1 {
                Ok(&xs[0])
            } else {
                err(a.pos(), format!("`{head}` takes one argument"))
            }
        };
        let dup = |present: bool| -> Result<(), Diagnostic> {
            if present {
                err(a.pos(), format!("parameter `{head}` given twice"))
            } else {
                Ok(())
            }
        };
        match head {
            "phi" => {
                dup(p.phi.is_some())?;
                p.phi = Some(sigma_expr(one()?, vocab)?);
            }
            "psi" => {
                dup(p.psi.is_some())?;
                p.psi = Some(sigma_expr(one()?, vocab)?);
            }
            "chi" => {
                dup(p.chi.is_some())?;
                p.chi = Some(sigma_expr(one()?, vocab)?);
            }
            "v" => {
                dup(p.v.is_some())?;
                p.v = Some(parse_var(one()?, vocab)?);
            }
            "t" => {
                dup(p.t.is_some())?;
                p.t = Some(parse_term_expr(one()?, vocab)?);
            }
            "s" => {
                dup(p.s.is_some())?;
                p.s = Some(parse_term_expr(one()?, vocab)?);
            }
            "axiom" => {
                dup(p.axiom.is_some())?;
                p.axiom = Some(parse_axiom_ref(xs, a.pos(), vocab)?);
            }
            "bind" => parse_binding(xs, a.pos(), vocab, &mut p.bindings)?,
            other => return err(a.pos(), format!("unknown parameter `{other}`")),
        }
    }
    Ok(p)
}

pub fn render_params(p: &Params) -> String {
    let mut s = String::from("(params");
    let mut f = |k: &str, v: String| s.push_str(&format!(" ({k} {v})"));
    if let Some(x) = &p.phi {
        f("phi", render_formula(x));
    }
    if let Some(x) = &p.psi {
        f("psi", render_formula(x));
    }
    if let Some(x) = &p.chi {
        f("chi", render_formula(x));
    }
    if let Some(x) = &p.v {
        f("v", x.clone());
    }
    if let Some(x) = &p.t {
        f("t", render_term(x));
    }
    if let Some(x) = &p.s {
        f("s", render_term(x));
    }
    if let Some(a) = &p.axiom {
        s.push(' ');
        s.push_str(&render_axiom_ref(a));
    }
    render_bindings(&p.bindings, &mut s);
    s.push(')');
    s
}

pub fn render_certificate(c: &StepCertificate) -> String {
    format!("(step {} {} {})", c.rule, render_path(&c.path), render_params(&c.params))
}

fn parse_step(args: &[SExpr], pos: Pos, vocab: &Vocabulary) -> Result<ScriptItem, Diagnostic> {
    let Some(id) = args.first() else { return err(pos, "`step` needs a rule id") };
    let rule: RuleId = id.atom().and_then(|s| s.parse().ok()).map_or_else(|| err(id.pos(), "rule ids are 0..15 and 14a"), Ok)?;
    let mut path = None;
    let mut params = None;
    let mut yields = None;
    for a in &args[1..] {
        match a.form() {
            Some(("at", xs)) if path.is_none() => path = Some(parse_path(xs)?),
            Some(("params", xs)) if params.is_none() => params = Some(parse_params(xs, vocab)?),
            Some(("yields", xs)) if yields.is_none() && xs.len() == 1 => yields = Some(sigma_expr(&xs[0], vocab)?),
            _ => return err(a.pos(), "expected (at …), (params …) or (yields f), each at most once"),
        }
    }
    Ok(ScriptItem::Step { cert: StepCertificate { rule, path: path.unwrap_or_default(), params: params.unwrap_or_default() }, yields })
}

/// Parses a deduction script; returns it with its resolved theory.
pub fn parse_deduction(text: &str, base: Option<&Path>) -> Result<(DeductionScript, Theory), Diagnostic> {
    let e = read_one(text)?;
    let Some(("deduction", args)) = e.form() else { return err(e.pos(), "expected (deduction …)") };
    let mut theory_ref = TheoryRef::Builtin("pure".into());
    let mut i = 0;
    if let Some(("theory", xs)) = args.first().and_then(SExpr::form) {
        theory_ref = parse_theory_ref(xs, args[0].pos())?;
        i = 1;
    }
    let theory = resolve_theory(&theory_ref, base).map_err(|m| Diagnostic { pos: e.pos(), message: m })?;
    let vocab = &theory.vocab;
    let mut endpoint = |name: &str| -> Result<Formula, Diagnostic> {
        match args.get(i).and_then(SExpr::form) {
            Some((h, xs)) if h == name && xs.len() == 1 => {
                i += 1;
                sigma_expr(&xs[0], vocab)
            }
            _ => err(args.get(i).map(SExpr::pos).unwrap_or(e.pos()), format!("expected ({name} f)")),
        }
    };
    let from = endpoint("from")?;
    let to = endpoint("to")?;
    let mut items = Vec::new();
    for a in &args[i..] {
        match a.form() {
            Some(("step", xs)) => items.push(parse_step(xs, a.pos(), vocab)?),
            Some(("formula", [f])) => items.push(ScriptItem::Formula(sigma_expr(f, vocab)?)),
            _ => return err(a.pos(), "expected (step …) or (formula f)"),
        }
    }
    Ok((DeductionScript { theory: theory_ref, from, to, items }, theory))
}

pub fn render_deduction(s: &DeductionScript) -> String {
    let mut out =
        format!("(deduction {}\n  (from {})\n  (to {})", render_theory_ref(&s.theory), render_formula(&s.from), render_formula(&s.to));
    for item in &s.items {
        out.push_str("\n  ");
        match item {
            ScriptItem::Step { cert, yields } => {
                let mut c = render_certificate(cert);
                if let Some(y) = yields {
                    c.pop();
                    c.push_str(&format!(" (yields {}))", render_formula(y)));
                }
                out.push_str(&c);
            }
            ScriptItem::Formula(f) => out.push_str(&format!("(formula {})", render_formula(f))),
        }
    }
    out.push_str(")\n");
    out
}

// ---------------------------------------------------------------- derivations

/// A derivation file: system, theory and proof tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationFile {
    pub system: System,
    pub theory: TheoryRef,
    pub root: Derivation,
}

fn parse_node(e: &SExpr, vocab: &Vocabulary, sigma: bool) -> Result<Derivation, Diagnostic> {
    let Some((head, args)) = e.form() else { return err(e.pos(), "expected a derivation node") };
    let rule: RuleName = head.parse().map_err(|_| Diagnostic { pos: e.pos(), message: format!("unknown rule `{head}`") })?;
    let mut params = RuleParams::default();
    let mut conclusion = None;
    let mut premises = Vec::new();
    for a in args {
        let Some((h, xs)) = a.form() else { return err(a.pos(), "expected a node clause") };
        let one = || -> Result<&SExpr, Diagnostic> {
            if xs.len() == 1 {
                Ok(&xs[0])
            } else {
                err(a.pos(), format!("`{h}` takes one argument"))
            }
        };
        match h {
            "at" => params.at = Some(natural(one()?)?),
            "split" => params.split = Some(natural(one()?)?),
            "eigen" => params.eigen = Some(parse_var(one()?, vocab)?),
            "witness" => params.witness = Some(parse_term_expr(one()?, vocab)?),
            "cut-formula" => params.cut_formula = Some(parse_formula_expr(one()?, vocab, false)?),
            "t-axiom" => params.axiom = Some(parse_axiom_ref(xs, a.pos(), vocab)?),
            "bind" => parse_binding(xs, a.pos(), vocab, &mut params.bindings)?,
            "sequent" => {
                if conclusion.is_some() {
                    return err(a.pos(), "node has two sequents");
                }
                conclusion = Some(parse_sequent(xs, a.pos(), vocab, sigma)?);
            }
            _ => premises.push(parse_node(a, vocab, sigma)?),
        }
    }
    let Some(conclusion) = conclusion else { return err(e.pos(), "node lacks (sequent …)") };
    Ok(Derivation { rule, params, conclusion, premises })
}

fn parse_sequent(args: &[SExpr], pos: Pos, vocab: &Vocabulary, sigma: bool) -> Result<Sequent, Diagnostic> {
    let side = |name: &str, e: Option<&SExpr>| -> Result<Vec<Formula>, Diagnostic> {
        match e.and_then(SExpr::form) {
            Some((h, xs)) if h == name => {
                xs.iter().map(|x| if sigma { sigma_expr(x, vocab) } else { parse_formula_expr(x, vocab, false) }).collect()
            }
            _ => err(e.map(SExpr::pos).unwrap_or(pos), format!("expected ({name} …)")),
        }
    };
    if args.len() != 2 {
        return err(pos, "sequent is (sequent (ante …) (succ …))");
    }
    Ok(Sequent { ante: side("ante", args.first())?, succ: side("succ", args.get(1))? })
}

pub fn parse_derivation(text: &str, base: Option<&Path>) -> Result<(DerivationFile, Theory), Diagnostic> {
    let e = read_one(text)?;
    let Some(("derivation", args)) = e.form() else { return err(e.pos(), "expected (derivation …)") };
    let mut system = System::LK;
    let mut theory_ref = TheoryRef::Builtin("pure".into());
    let mut root = None;
    let mut theory = None;
    for a in args {
        match a.form() {
            Some(("system", [s])) => {
                system =
                    s.atom().and_then(|x| x.parse().ok()).map_or_else(|| err(s.pos(), "systems are lk, lk-sigma, li, li-sigma"), Ok)?;
            }
            Some(("theory", xs)) => theory_ref = parse_theory_ref(xs, a.pos())?,
            _ => {
                if root.is_some() {
                    return err(a.pos(), "derivation has two roots");
                }
                let t = resolve_theory(&theory_ref, base).map_err(|m| Diagnostic { pos: a.pos(), message: m })?;
                root = Some(parse_node(a, &t.vocab, system.is_sigma())?);
                theory = Some(t);
            }
        }
    }
    match (root, theory) {
        (Some(root), Some(theory)) => Ok((DerivationFile { system, theory: theory_ref, root }, theory)),
        _ => err(e.pos(), "derivation has no proof tree"),
    }
}

pub fn render_sequent(s: &Sequent) -> String {
    let side = |xs: &[Formula]| xs.iter().map(|f| format!(" {}", render_formula(f))).collect::<String>();
    format!("(sequent (ante{}) (succ{}))", side(&s.ante), side(&s.succ))
}

fn render_node(d: &Derivation, indent: usize, out: &mut String) {
    out.push_str(&" ".repeat(indent));
    out.push('(');
    out.push_str(d.rule.name());
    let p = &d.params;
    if let Some(i) = p.at {
        out.push_str(&format!(" (at {i})"));
    }
    if let Some(k) = p.split {
        out.push_str(&format!(" (split {k})"));
    }
    if let Some(w) = &p.eigen {
        out.push_str(&format!(" (eigen {w})"));
    }
    if let Some(t) = &p.witness {
        out.push_str(&format!(" (witness {})", render_term(t)));
    }
    if let Some(f) = &p.cut_formula {
        out.push_str(&format!(" (cut-formula {})", render_formula(f)));
    }
    if let Some(a) = &p.axiom {
        out.push_str(" (t-");
        out.push_str(&render_axiom_ref(a)[1..]);
    }
    render_bindings(&p.bindings, out);
    out.push(' ');
    out.push_str(&render_sequent(&d.conclusion));
    for c in &d.premises {
        out.push('\n');
        render_node(c, indent + 2, out);
    }
    out.push(')');
}

pub fn render_derivation_tree(d: &Derivation) -> String {
    let mut s = String::new();
    render_node(d, 2, &mut s);
    s
}

pub fn render_derivation(f: &DerivationFile) -> String {
    let mut s = format!("(derivation (system {}) {}\n", f.system, render_theory_ref(&f.theory));
    render_node(&f.root, 2, &mut s);
    s.push_str(")\n");
    s
}
