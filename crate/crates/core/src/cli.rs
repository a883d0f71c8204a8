//! Command-line surface. Exit codes: 0 success or `true`, 1 `false` or a
//! countermodel, 2 input or usage error.

use std::ffi::OsString;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::bridge::{
    check_prop_equiv, encode_definedness, hmodl_of_ml, ml_of_hmodl, prop_equiv_sweep, BridgeError,
    ExtendedSignature,
};
use crate::fixtures;
use crate::matching::{MlError, Valuation};
use crate::proof::check_proof;
use crate::semantics::{
    find_counterexample, random_model, satisfies, Assignment, EvalError, Frame, SizeBounds,
};
use crate::soundness::{axiom_sweep, rule_sweep, SweepConfig, Tally};
use crate::syntax::{sort_of, Signature, SymbolKind, SyntaxError, SystemId};
use crate::textio::{self, TextError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{source}")]
    Text {
        path: PathBuf,
        #[source]
        source: TextError,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Bridge(#[from] BridgeError),
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "hyml",
    version,
    about = "Hybrid modal logic and Matching Logic toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Direction {
    Hmodl2ml,
    Ml2hmodl,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a formula at one world.
    Check {
        #[arg(long)]
        sig: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: PathBuf,
        #[arg(long)]
        world: String,
        #[arg(long)]
        assign: Option<PathBuf>,
        #[arg(long, default_value = "hybrid-at-forall")]
        system: String,
    },
    /// Check a formula at every world under every assignment.
    Valid {
        #[arg(long)]
        sig: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        formula: PathBuf,
        #[arg(long, default_value = "hybrid-at-forall")]
        system: String,
    },
    /// Translate models (and optionally a formula) between the two logics.
    Translate {
        #[arg(long, value_enum)]
        dir: Direction,
        #[arg(long)]
        sig: PathBuf,
        /// A model or frame for hmodl2ml, an ml-model for ml2hmodl.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        assign: Option<PathBuf>,
        #[arg(long)]
        formula: Option<PathBuf>,
    },
    /// Compare Matching Logic and frame semantics on Form0 patterns.
    Equiv {
        #[arg(long)]
        sig: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        max_depth: usize,
        #[arg(long, default_value_t = 2)]
        max_size: usize,
        /// Check one ML model and formula instead of sweeping.
        #[arg(long, requires = "formula")]
        ml_model: Option<PathBuf>,
        #[arg(long)]
        formula: Option<PathBuf>,
        #[arg(long)]
        assign: Option<PathBuf>,
    },
    /// Check a proof script.
    ProveCheck {
        #[arg(long)]
        sig: PathBuf,
        #[arg(long)]
        proof: PathBuf,
    },
    /// Sample axiom instances and rule applications against random models.
    ValidateAxioms {
        #[arg(long)]
        sig: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 50)]
        models: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 4)]
        max_size: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Print a random standard model.
    GenModel {
        #[arg(long)]
        sig: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 3)]
        max_size: usize,
    },
}

struct Style {
    color: bool,
}

impl Style {
    fn from_env(out_is_tty: bool) -> Style {
        let color = match std::env::var("HYML_COLOR").as_deref() {
            Ok("always") => true,
            Ok("never") => false,
            _ => out_is_tty,
        };
        Style { color }
    }

    fn paint(&self, text: &str, good: bool) -> String {
        if !self.color {
            return text.to_string();
        }
        let code = if good { 32 } else { 31 };
        format!("\x1b[{code}m{text}\x1b[0m")
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load<T>(path: &Path, parse: impl FnOnce(&str) -> Result<T, TextError>) -> CliResult<T> {
    parse(&read(path)?).map_err(|source| CliError::Text {
        path: path.to_path_buf(),
        source,
    })
}

fn signature(path: Option<&Path>, default: fn() -> Signature) -> CliResult<Arc<Signature>> {
    Ok(Arc::new(match path {
        Some(p) => load(p, textio::parse_signature)?,
        None => default(),
    }))
}

fn system(id: &str) -> CliResult<SystemId> {
    SystemId::parse(id).ok_or_else(|| {
        let known: Vec<&str> = SystemId::ALL.iter().map(|s| s.as_str()).collect();
        CliError::Usage(format!(
            "unknown system `{id}` (expected one of {})",
            known.join(", ")
        ))
    })
}

/// Randomized commands need an explicit seed when `HYML_TEST=1`.
fn seed(given: Option<u64>) -> CliResult<u64> {
    match given {
        Some(s) => Ok(s),
        None if std::env::var("HYML_TEST").as_deref() == Ok("1") => Err(CliError::Usage(
            "--seed is required when HYML_TEST=1".into(),
        )),
        None => Ok(rand::random()),
    }
}

fn assignment(frame: &Frame, path: Option<&Path>) -> CliResult<Assignment> {
    match path {
        Some(p) => load(p, |t| textio::parse_assignment(frame, t)),
        None => Ok(Assignment::first_worlds(frame)),
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    let style = Style::from_env(std::io::stdout().is_terminal());
    match execute(cli.command, out, &style) {
        Ok(code) => code,
        // reader went away, e.g. `| head`
        Err(CliError::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write, style: &Style) -> CliResult<i32> {
    let io = |e: std::io::Error| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    };
    match cmd {
        Command::Check {
            sig,
            model,
            formula,
            world,
            assign,
            system: sys,
        } => {
            let sig = Arc::new(load(&sig, textio::parse_signature)?);
            let sys = system(&sys)?;
            let m = load(&model, |t| textio::parse_model(&sig, t))?;
            let f = load(&formula, |t| textio::parse_formula(&sig, t))?;
            let g = assignment(m.frame(), assign.as_deref())?;
            let sort = sort_of(&f, &sig)?;
            let w = m
                .frame()
                .world_of_sort(&world, &sort)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let holds = satisfies(&m, &g, w, &f, sys)?;
            writeln!(
                out,
                "{}",
                style.paint(if holds { "true" } else { "false" }, holds)
            )
            .map_err(io)?;
            Ok(if holds { 0 } else { 1 })
        }
        Command::Valid {
            sig,
            model,
            formula,
            system: sys,
        } => {
            let sig = Arc::new(load(&sig, textio::parse_signature)?);
            let sys = system(&sys)?;
            let m = load(&model, |t| textio::parse_model(&sig, t))?;
            let f = load(&formula, |t| textio::parse_formula(&sig, t))?;
            match find_counterexample(&m, &f, sys)? {
                None => {
                    writeln!(out, "{}", style.paint("valid", true)).map_err(io)?;
                    Ok(0)
                }
                Some(cx) => {
                    let sort = sort_of(&f, &sig)?;
                    let vars: Vec<String> = cx
                        .assignment
                        .iter()
                        .map(|(x, &w)| {
                            let xs = sig
                                .sort_of_symbol(x, SymbolKind::SVar)
                                .expect("free variables are declared");
                            format!(" ({x} {})", m.frame().world_name(xs, w))
                        })
                        .collect();
                    writeln!(
                        out,
                        "{} at world {} under (assignment{})",
                        style.paint("countermodel", false),
                        m.frame().world_name(&sort, cx.world),
                        vars.concat()
                    )
                    .map_err(io)?;
                    Ok(1)
                }
            }
        }
        Command::Translate {
            dir,
            sig,
            model,
            assign,
            formula,
        } => {
            let sig = Arc::new(load(&sig, textio::parse_signature)?);
            if model.is_none() && formula.is_none() {
                return Err(CliError::Usage(
                    "translate needs --model or --formula".into(),
                ));
            }
            match dir {
                Direction::Hmodl2ml => {
                    if let Some(path) = &model {
                        let frame = load(path, |t| textio::parse_model_or_frame(&sig, t))?;
                        let g = assignment(&frame, assign.as_deref())?;
                        let (ml, rho) = ml_of_hmodl(&frame, &g);
                        let (rho_frame, rho_g) = hmodl_of_ml(&ml, &rho);
                        writeln!(out, "{}", textio::render_ml_model(&ml)).map_err(io)?;
                        writeln!(out, "{}", textio::render_assignment(&rho_frame, &rho_g))
                            .map_err(io)?;
                    }
                    if let Some(path) = &formula {
                        let f = load(path, |t| textio::parse_formula(&sig, t))?;
                        let ext = ExtendedSignature::new(sig.clone())?;
                        let pattern = ext.translate_formula(&f);
                        let ext_sig = ext.extended();
                        writeln!(out, "{}", textio::render_signature(ext_sig)).map_err(io)?;
                        writeln!(out, "{}", textio::render_formula(ext_sig, &pattern)?)
                            .map_err(io)?;
                    }
                }
                Direction::Ml2hmodl => {
                    if let Some(path) = &model {
                        let ml = load(path, |t| textio::parse_ml_model(&sig, t))?;
                        let (frame, _) = hmodl_of_ml(&ml, &Valuation::default());
                        let g = assignment(&frame, assign.as_deref())?;
                        writeln!(out, "{}", textio::render_frame(&frame)).map_err(io)?;
                        writeln!(out, "{}", textio::render_assignment(&frame, &g)).map_err(io)?;
                    }
                    if let Some(path) = &formula {
                        let f = load(path, |t| textio::parse_formula(&sig, t))?;
                        let h = encode_definedness(&sig, &f)?;
                        writeln!(out, "{}", textio::render_formula(&sig, &h)?).map_err(io)?;
                    }
                }
            }
            Ok(0)
        }
        Command::Equiv {
            sig,
            max_depth,
            max_size,
            ml_model,
            formula,
            assign,
        } => {
            let sig = signature(sig.as_deref(), fixtures::sigma0)?;
            if let Some(path) = ml_model {
                let ml = load(&path, |t| textio::parse_ml_model(&sig, t))?;
                let formula = formula.expect("clap enforces --formula");
                let f = load(&formula, |t| textio::parse_formula(&sig, t))?;
                let (frame, _) = hmodl_of_ml(&ml, &Valuation::default());
                let g = assignment(&frame, assign.as_deref())?;
                let rho = Valuation::new(&ml, g.as_map().clone())?;
                let r = check_prop_equiv(&f, &ml, &rho)?;
                writeln!(
                    out,
                    "ml-at-rho {} frame-at-rho {} ml-global {} frame-global {} pointwise {}",
                    r.ml_at_rho, r.frame_at_rho, r.ml_global, r.frame_global, r.pointwise
                )
                .map_err(io)?;
                let verdict = if r.agrees() { "agree" } else { "disagree" };
                writeln!(out, "{}", style.paint(verdict, r.agrees())).map_err(io)?;
                return Ok(if r.agrees() { 0 } else { 1 });
            }
            let sweep = prop_equiv_sweep(&sig, max_depth, max_size)?;
            writeln!(
                out,
                "formulas {} models {} checks {} disagreements {}",
                sweep.formulas, sweep.models, sweep.checks, sweep.disagreements
            )
            .map_err(io)?;
            let pct = sweep.agreement_percent();
            let ok = sweep.disagreements == 0;
            let line = if ok {
                "agreement 100%".to_string()
            } else {
                format!("agreement {pct:.4}%")
            };
            writeln!(out, "{}", style.paint(&line, ok)).map_err(io)?;
            if let Some(w) = &sweep.witness {
                writeln!(out, "first disagreement: {}", w.formula).map_err(io)?;
                writeln!(out, "{}", textio::render_ml_model(&w.model)).map_err(io)?;
            }
            Ok(if ok { 0 } else { 1 })
        }
        Command::ProveCheck { sig, proof } => {
            let sig = Arc::new(load(&sig, textio::parse_signature)?);
            let script = load(&proof, |t| textio::parse_proof(&sig, t))?;
            let report = check_proof(&script, &sig);
            writeln!(out, "{}", style.paint(&report.to_string(), report.is_ok())).map_err(io)?;
            if let Some(c) = report.conclusion(&script) {
                writeln!(out, "proves {c}").map_err(io)?;
            }
            Ok(if report.is_ok() { 0 } else { 1 })
        }
        Command::ValidateAxioms {
            sig,
            samples,
            models,
            seed: given,
            max_size,
            depth,
        } => {
            let sig = signature(sig.as_deref(), fixtures::sigma_poly)?;
            let cfg = SweepConfig {
                samples,
                models,
                max_worlds: max_size,
                depth,
                seed: seed(given)?,
            };
            writeln!(out, "seed {}", cfg.seed).map_err(io)?;
            let axioms = axiom_sweep(&sig, &cfg);
            let rules = rule_sweep(&sig, &cfg);
            writeln!(
                out,
                "{:<16} {:>9} {:>8} {:>10} {:>8}  verdict",
                "item", "instances", "checks", "applicable", "failures"
            )
            .map_err(io)?;
            let mut ok = true;
            let mut row = |name: String, t: &Tally| -> CliResult<()> {
                ok &= t.passed();
                let verdict = style.paint(if t.passed() { "pass" } else { "FAIL" }, t.passed());
                writeln!(
                    out,
                    "{name:<16} {:>9} {:>8} {:>10} {:>8}  {verdict}",
                    t.instances, t.checks, t.applicable, t.failures
                )
                .map_err(io)?;
                if let Some(w) = &t.witness {
                    writeln!(out, "  counterexample: {w}").map_err(io)?;
                }
                Ok(())
            };
            row("tautology".to_string(), &axioms.tautologies)?;
            for (scheme, t) in &axioms.schemes {
                row(format!("axiom {scheme}"), t)?;
            }
            for (rule, t) in &rules {
                row(format!("rule {rule}"), t)?;
            }
            Ok(if ok { 0 } else { 1 })
        }
        Command::GenModel {
            sig,
            seed: given,
            max_size,
        } => {
            let sig = signature(sig.as_deref(), fixtures::sigma0)?;
            let seed = seed(given)?;
            let (m, _) = random_model(&sig, &SizeBounds::uniform(&sig, max_size), seed);
            writeln!(out, "; seed {seed}\n{}", textio::render_model(&m)).map_err(io)?;
            Ok(0)
        }
    }
}
