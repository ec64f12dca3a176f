use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use sigma_core::calculus::{check_derivation, System, SystemConfig};
use sigma_core::formula::Implication;
use sigma_core::parser::{
    self, parse_deduction, parse_derivation, parse_formula, parse_structure, parse_vocab, render_deduction, render_derivation,
    render_formula, render_structure, render_theory, DerivationFile, TheoryRef,
};
use sigma_core::rewrite::{check_deduction, Mode};
use sigma_core::search::{search_until, SearchBounds, SearchOutcome};
use sigma_core::semantics::{
    audit_structure, audit_until, deduction_target, derivation_target, find_countermodel, AuditOptions, AuditTarget, SchemaBudget,
};
use sigma_core::theories::{builtin, instantiate_schema, SchemaRequest};
use sigma_core::translate::{convert, Artifact, Target, TranslationReport};
use sigma_core::Theory;

#[derive(Parser)]
#[command(name = "sigma", version, about = "Check, translate and search proofs of Sigma formulas")]
struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SystemArg {
    Rk,
    Ri,
    Rm,
    Lk,
    Li,
    Lksigma,
    Lisigma,
}

impl SystemArg {
    fn target(self) -> Target {
        match self {
            SystemArg::Rk => Target::Rewrite(Mode::RK),
            SystemArg::Ri => Target::Rewrite(Mode::RI),
            SystemArg::Rm => Target::Rewrite(Mode::RM),
            SystemArg::Lk => Target::Sequent(System::LK),
            SystemArg::Li => Target::Sequent(System::LI),
            SystemArg::Lksigma => Target::Sequent(System::LKSigma),
            SystemArg::Lisigma => Target::Sequent(System::LISigma),
        }
    }

    fn mode(self) -> Result<Mode, Failure> {
        match self.target() {
            Target::Rewrite(m) => Ok(m),
            Target::Sequent(s) => Err(Failure::Usage(format!("`{s}` is a sequent calculus; expected rk, ri or rm"))),
        }
    }

    fn system(self) -> Result<System, Failure> {
        match self.target() {
            Target::Sequent(s) => Ok(s),
            Target::Rewrite(m) => Err(Failure::Usage(format!("`{m}` is a rewriting mode; expected a sequent calculus"))),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a deduction script.
    CheckDeduction {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "rk")]
        system: SystemArg,
    },
    /// Check a derivation tree; the system defaults to the file's.
    CheckDerivation {
        file: PathBuf,
        #[arg(long, value_enum)]
        system: Option<SystemArg>,
    },
    /// Translate a deduction or derivation between systems.
    Translate {
        file: PathBuf,
        /// System of the input; defaults to rk for scripts and the file's system for trees.
        #[arg(long, value_enum)]
        from: Option<SystemArg>,
        #[arg(long, value_enum)]
        to: SystemArg,
        /// Write the translation here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Search for a deduction between two formulas.
    Search {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_enum, default_value = "rk")]
        system: SystemArg,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Largest intermediate formula.
        #[arg(long)]
        max_size: Option<usize>,
        /// Axiom instances tried per position.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        max_nodes: Option<usize>,
    },
    /// Look for a small model of the theory falsifying an implication.
    Countermodel {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
        /// Formula depth of checked schema instances.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Audit a deduction or derivation over finite models.
    Audit {
        file: PathBuf,
        /// Rewriting mode for scripts, or a system overriding the tree's.
        #[arg(long, value_enum)]
        system: Option<SystemArg>,
        /// Every structure up to this size is checked.
        #[arg(long, default_value_t = 2)]
        max_size: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 3)]
        sample_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Check these structure files instead of enumerating.
        #[arg(long = "structure")]
        structures: Vec<PathBuf>,
    },
    /// Theory utilities.
    Theory {
        #[command(subcommand)]
        command: TheoryCommand,
    },
    /// Reformat a theory, structure, deduction or derivation file.
    Fmt {
        file: PathBuf,
        /// Theory for structure files.
        #[arg(long)]
        theory: Option<String>,
    },
}

#[derive(Subcommand)]
enum TheoryCommand {
    /// Print instances of a schema.
    Instantiate {
        #[arg(long)]
        theory: String,
        #[arg(long, group = "schema")]
        congruence: Option<String>,
        #[arg(long, group = "schema")]
        induction: Option<String>,
        #[arg(long, group = "schema", requires = "arity")]
        separation: Option<String>,
        #[arg(long)]
        arity: Option<usize>,
    },
    /// Print a theory in file syntax.
    Show { theory: String },
}

#[derive(Args)]
struct Pair {
    /// Builtin theory name or theory file.
    #[arg(long, default_value = "pure")]
    theory: String,
    /// Extra declarations, as in a (vocab ...) form.
    #[arg(long)]
    vocab: Option<String>,
    #[arg(long)]
    from: String,
    #[arg(long)]
    to: String,
}

/// Outcome of one command.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Report {
    command: String,
    ok: bool,
    summary: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    details: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    translation: Option<TranslationReport>,
}

enum Failure {
    Usage(String),
    Parse(String),
}

type Outcome = Result<Report, Failure>;

fn report(command: &str, ok: bool, summary: impl Into<String>) -> Report {
    Report { command: command.into(), ok, summary: summary.into(), ..Report::default() }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn base(path: &Path) -> Option<&Path> {
    path.parent()
}

fn diag(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Parse(format!("{}:{e}", path.display()))
}

/// Builtin name first, then file path.
fn resolve(name: &str) -> Result<(Theory, TheoryRef), Failure> {
    if let Ok(t) = builtin(name) {
        return Ok((t, TheoryRef::Builtin(name.into())));
    }
    let r = TheoryRef::File(name.into());
    let t = parser::resolve_theory(&r, None).map_err(|e| Failure::Parse(format!("theory `{name}`: {e}")))?;
    Ok((t, r))
}

fn pair(p: &Pair) -> Result<(Theory, TheoryRef, Implication), Failure> {
    let (mut t, r) = resolve(&p.theory)?;
    if let Some(v) = &p.vocab {
        let extra =
            parse_vocab(&format!("(vocab {v})")).or_else(|_| parse_vocab(v)).map_err(|e| Failure::Parse(format!("--vocab: {e}")))?;
        t.vocab.relations.extend(extra.relations);
        t.vocab.functions.extend(extra.functions);
    }
    let f = |s: &str, flag: &str| parse_formula(s, &t.vocab).map_err(|e| Failure::Parse(format!("--{flag}: {e}")));
    let imp = Implication::new(f(&p.from, "from")?, f(&p.to, "to")?);
    Ok((t, r, imp))
}

fn head(text: &str) -> Option<String> {
    let forms = parser::read_all(text).ok()?;
    forms.first()?.form().map(|(h, _)| h.to_string())
}

/// A parsed proof file with its theory.
struct Loaded {
    artifact: Artifact,
    theory: Theory,
    theory_ref: TheoryRef,
    text: String,
}

/// Reads and checks a proof file; a rejected proof is returned as a report.
fn load(path: &Path, system: Option<SystemArg>, command: &str) -> Result<Result<Loaded, Report>, Failure> {
    let text = read(path)?;
    match head(&text).as_deref() {
        Some("deduction") => {
            let mode = system.map(SystemArg::mode).transpose()?.unwrap_or(Mode::RK);
            let (s, t) = parse_deduction(&text, base(path)).map_err(|e| diag(path, e))?;
            match check_deduction(&s, &t, mode) {
                Ok(d) => Ok(Ok(Loaded { artifact: Artifact::Deduction(d, mode), theory: t, theory_ref: s.theory, text })),
                Err(e) => Ok(Err(report(command, false, format!("rejected in {mode}: {e}")))),
            }
        }
        Some("derivation") => {
            let (file, t) = parse_derivation(&text, base(path)).map_err(|e| diag(path, e))?;
            let sys = system.map(SystemArg::system).transpose()?.unwrap_or(file.system);
            match check_derivation(&file.root, &SystemConfig::new(sys, t.clone())) {
                Ok(()) => Ok(Ok(Loaded { artifact: Artifact::Derivation(file.root, sys), theory: t, theory_ref: file.theory, text })),
                Err(e) => Ok(Err(report(command, false, format!("rejected in {sys}: {e}")))),
            }
        }
        _ => Err(Failure::Parse(format!("{}: expected a (deduction ...) or (derivation ...) file", path.display()))),
    }
}

fn render_artifact(a: &Artifact, r: &TheoryRef) -> String {
    match a {
        Artifact::Deduction(d, _) => render_deduction(&d.to_script(r.clone())),
        Artifact::Derivation(d, s) => render_derivation(&DerivationFile { system: *s, theory: r.clone(), root: d.clone() }),
    }
}

fn check_deduction_cmd(file: &Path, system: SystemArg) -> Outcome {
    system.mode()?;
    Ok(match load(file, Some(system), "check-deduction")? {
        Ok(l) => match &l.artifact {
            Artifact::Deduction(d, m) => report("check-deduction", true, format!("accepted in {m}: {} steps", d.steps())),
            Artifact::Derivation(..) => return Err(Failure::Usage("expected a deduction script".into())),
        },
        Err(r) => r,
    })
}

fn check_derivation_cmd(file: &Path, system: Option<SystemArg>) -> Outcome {
    system.map(SystemArg::system).transpose()?;
    Ok(match load(file, system, "check-derivation")? {
        Ok(l) => match &l.artifact {
            Artifact::Derivation(d, s) => report("check-derivation", true, format!("accepted in {s}: {} nodes", d.size())),
            Artifact::Deduction(..) => return Err(Failure::Usage("expected a derivation".into())),
        },
        Err(r) => r,
    })
}

fn translate_cmd(file: &Path, from: Option<SystemArg>, to: SystemArg, output: Option<&Path>) -> Outcome {
    let loaded = match load(file, from, "translate")? {
        Ok(l) => l,
        Err(r) => return Ok(r),
    };
    let source = loaded.artifact.target();
    let out = match convert(loaded.artifact, to.target(), &loaded.theory) {
        Ok(a) => a,
        Err(e) => return Ok(report("translate", false, format!("{source} to {}: {e}", to.target()))),
    };
    let text = render_artifact(&out, &loaded.theory_ref);
    let mut tr = TranslationReport::new(&loaded.text, &source.to_string(), &out.target().to_string(), text.clone());
    tr = match &out {
        Artifact::Deduction(d, _) => tr.with_deduction(d),
        Artifact::Derivation(d, _) => tr.with_derivation(d),
    };
    let mut r = report("translate", true, format!("translated {source} to {}", out.target()));
    if let Some(p) = output {
        std::fs::write(p, format!("{text}\n")).map_err(|e| Failure::Parse(format!("{}: {e}", p.display())))?;
        r.details.push(format!("written to {}", p.display()));
    } else {
        r.output = Some(text);
    }
    r.translation = Some(tr);
    Ok(r)
}

fn search_cmd(
    p: &Pair,
    system: SystemArg,
    steps: Option<usize>,
    size: Option<usize>,
    budget: Option<usize>,
    nodes: Option<usize>,
) -> Outcome {
    let mode = system.mode()?;
    let (t, r, imp) = pair(p)?;
    let mut bounds = SearchBounds::default();
    bounds.max_steps = steps.unwrap_or(bounds.max_steps);
    bounds.max_formula_size = size.or(bounds.max_formula_size);
    bounds.schema_instance_budget = budget.unwrap_or(bounds.schema_instance_budget);
    bounds.max_nodes = nodes.unwrap_or(bounds.max_nodes);
    Ok(match search_until(&t, &imp.antecedent, &imp.consequent, mode, &bounds, &STOP) {
        SearchOutcome::Found(d) => {
            let mut out = report("search", true, format!("found a {}-step deduction in {mode}", d.steps()));
            out.output = Some(render_deduction(&d.to_script(r)));
            out
        }
        SearchOutcome::NotFound(n) => {
            let mut out = report("search", false, format!("no deduction within {} steps in {mode}", n.bounds.max_steps));
            out.details.push(format!("expanded {} formulas", n.expanded));
            if n.exhausted {
                out.details.push("search space exhausted".into());
            }
            if n.refuted {
                out.details.push("a finite model separates the endpoints".into());
            }
            if n.interrupted {
                out.details.push("interrupted; partial result".into());
            }
            out
        }
    })
}

fn countermodel_cmd(p: &Pair, max_size: usize, budget: Option<usize>) -> Outcome {
    let (t, _, imp) = pair(p)?;
    let mut b = SchemaBudget::default();
    b.formula_depth = budget.unwrap_or(b.formula_depth);
    let found = find_countermodel(&t, &imp, max_size, &b).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut r = match found {
        Some((m, a)) => {
            let mut r = report("countermodel", true, format!("countermodel of size {}", m.size));
            let a: Vec<String> = a.iter().map(|(k, v)| format!("({k} {v})")).collect();
            r.details.push(format!("(assignment{})", a.iter().map(|x| format!(" {x}")).collect::<String>()));
            r.output = Some(render_structure(&m));
            r
        }
        None => report("countermodel", false, format!("no countermodel up to size {max_size}")),
    };
    r.details.push(b.to_string());
    Ok(r)
}

fn audit_cmd(file: &Path, system: Option<SystemArg>, opts: AuditOptions, structures: &[PathBuf]) -> Outcome {
    let loaded = match load(file, system, "audit")? {
        Ok(l) => l,
        Err(r) => return Ok(r),
    };
    let target: AuditTarget = match &loaded.artifact {
        Artifact::Deduction(d, _) => deduction_target(d, &loaded.theory),
        Artifact::Derivation(d, _) => derivation_target(d, &loaded.theory),
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    if !structures.is_empty() {
        let mut r = report("audit", true, String::new());
        let mut checked = 0;
        for s in structures {
            let m = parse_structure(&read(s)?, &loaded.theory.vocab).map_err(|e| diag(s, e))?;
            match audit_structure(&target, &m).map_err(|e| Failure::Usage(format!("{}: {e}", s.display())))? {
                None => {
                    r.ok = false;
                    r.details.push(format!("{}: not a model of the axioms used", s.display()));
                }
                Some(v) if v.is_empty() => {
                    checked += 1;
                    r.details.push(format!("{}: clean", s.display()));
                }
                Some(v) => {
                    r.ok = false;
                    for x in v {
                        r.details.push(format!("{}: violation at {}", s.display(), x.label));
                    }
                }
            }
        }
        r.summary = format!("{checked} of {} structures clean", structures.len());
        return Ok(r);
    }
    let a = audit_until(&target, &opts, &STOP).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut r = report(
        "audit",
        a.is_clean() && !a.interrupted,
        format!(
            "{} violations over {} models up to size {} and {} sampled of size {}",
            a.violations.len(),
            a.models,
            opts.max_size,
            a.sampled_models,
            opts.sample_size
        ),
    );
    if a.interrupted {
        r.details.push("interrupted; partial result".into());
    }
    r.output = Some(a.render());
    Ok(r)
}

fn instantiate_cmd(theory: &str, cong: Option<&str>, ind: Option<&str>, sep: Option<&str>, arity: Option<usize>) -> Outcome {
    let (t, _) = resolve(theory)?;
    let f = |s: &str| parse_formula(s, &t.vocab).map_err(|e| Failure::Parse(e.to_string()));
    let req = match (cong, ind, sep) {
        (Some(c), _, _) => SchemaRequest::Congruence(f(c)?),
        (_, Some(i), _) => SchemaRequest::Induction(f(i)?),
        (_, _, Some(s)) => SchemaRequest::Separation { arity: arity.unwrap_or(0), formula: f(s)? },
        _ => return Err(Failure::Usage("one of --congruence, --induction or --separation is required".into())),
    };
    Ok(match instantiate_schema(&t, &req) {
        Ok(imps) => {
            let mut r = report("theory instantiate", true, format!("{} instances", imps.len()));
            let lines: Vec<String> =
                imps.iter().map(|i| format!("(instance {} {})", render_formula(&i.antecedent), render_formula(&i.consequent))).collect();
            r.output = Some(lines.join("\n"));
            r
        }
        Err(e) => report("theory instantiate", false, e.to_string()),
    })
}

fn fmt_cmd(file: &Path, theory: Option<&str>) -> Outcome {
    let text = read(file)?;
    let out = match head(&text).as_deref() {
        Some("deduction") => render_deduction(&parse_deduction(&text, base(file)).map_err(|e| diag(file, e))?.0),
        Some("derivation") => render_derivation(&parse_derivation(&text, base(file)).map_err(|e| diag(file, e))?.0),
        Some("structure") => {
            let Some(name) = theory else { return Err(Failure::Usage("structure files need --theory".into())) };
            let (t, _) = resolve(name)?;
            render_structure(&parse_structure(&text, &t.vocab).map_err(|e| diag(file, e))?)
        }
        _ => render_theory(&parser::parse_theory(&text).map_err(|e| diag(file, e))?),
    };
    let mut r = report("fmt", true, format!("formatted {}", file.display()));
    r.output = Some(out);
    Ok(r)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::CheckDeduction { file, system } => check_deduction_cmd(&file, system),
        Command::CheckDerivation { file, system } => check_derivation_cmd(&file, system),
        Command::Translate { file, from, to, output } => translate_cmd(&file, from, to, output.as_deref()),
        Command::Search { pair, system, max_steps, max_size, budget, max_nodes } => {
            search_cmd(&pair, system, max_steps, max_size, budget, max_nodes)
        }
        Command::Countermodel { pair, max_size, budget } => countermodel_cmd(&pair, max_size, budget),
        Command::Audit { file, system, max_size, samples, sample_size, seed, structures } => {
            let opts = AuditOptions { max_size, samples, sample_size, seed, ..AuditOptions::default() };
            audit_cmd(&file, system, opts, &structures)
        }
        Command::Theory { command: TheoryCommand::Instantiate { theory, congruence, induction, separation, arity } } => {
            instantiate_cmd(&theory, congruence.as_deref(), induction.as_deref(), separation.as_deref(), arity)
        }
        Command::Theory { command: TheoryCommand::Show { theory } } => {
            let (t, _) = resolve(&theory)?;
            let mut r = report("theory show", true, format!("theory {}", t.name));
            r.output = Some(render_theory(&t));
            Ok(r)
        }
        Command::Fmt { file, theory } => fmt_cmd(&file, theory.as_deref()),
    }
}

/// Set on the first interrupt; long searches and audits then stop with a partial report.
static STOP: AtomicBool = AtomicBool::new(false);

fn main() -> ExitCode {
    // a second interrupt falls through to the default behaviour
    let _ = ctrlc::set_handler(|| {
        if STOP.swap(true, Ordering::SeqCst) {
            std::process::exit(130);
        }
    });
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let json = cli.json;
    match run(cli) {
        Ok(r) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
            } else {
                if let Some(o) = &r.output {
                    println!("{o}");
                }
                let stream: &mut dyn std::io::Write = if r.ok { &mut std::io::stdout() } else { &mut std::io::stderr() };
                let _ = writeln!(stream, "{}", r.summary);
                for d in &r.details {
                    let _ = writeln!(stream, "  {d}");
                }
            }
            ExitCode::from(if r.ok { 0 } else { 1 })
        }
        Err(Failure::Usage(m)) | Err(Failure::Parse(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
