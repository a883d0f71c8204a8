//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use hyml::bridge::{
    check_thm_ml2_semantic, hmodl_of_ml, ml_of_hmodl, prop_equiv_sweep, ExtendedSignature,
};
use hyml::fixtures;
use hyml::gen::{enumerate_formulas, enumerate_frames, random_sorted_formula, split_rng, Grammar};
use hyml::matching::{evaluate, random_ml_model_with, Valuation};
use hyml::proof::{check_proof, ProofError};
use hyml::semantics::{
    random_assignment_with, random_model_with, satisfies, trivial_model, valid_in_model,
    Assignment, KripkeStructure, SizeBounds,
};
use hyml::soundness::{axiom_sweep, rule_sweep, SweepConfig};
use hyml::syntax::{
    free_svars, is_substitutable, sort_of, substitute, univ_mod, Formula, Signature, Sort,
    StateSym, SymbolKind, SyntaxError, SystemId,
};
use hyml::textio::{self, Invalid, ParseContext, TextError};
use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;

const SEED: u64 = 20240601;
const SYS: SystemId = SystemId::HybridAtForall;

// Time limits and sample counts.
const AXIOM_SWEEP_LIMIT: Duration = Duration::from_secs(60);
const EQUIV_SWEEP_LIMIT: Duration = Duration::from_secs(120);
const ROUND_TRIP_MODELS: usize = 1000;
const LEMMA_TRIPLES: usize = 10_000;
const UNIV_PAIRS: usize = 1000;
const CONSTANT_MODELS: usize = 500;
const FORMULAS_PER_MODEL: usize = 4;
const DOCUMENTS: usize = 10_000;

/// Verdict of one criterion with a short summary.
struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn poly() -> Arc<Signature> {
    Arc::new(fixtures::sigma_poly())
}

fn sat(m: &KripkeStructure, g: &Assignment, w: usize, f: &Formula) -> bool {
    satisfies(m, g, w, f, SYS).unwrap()
}

fn worlds(m: &KripkeStructure, s: &Sort) -> std::ops::Range<usize> {
    0..m.frame().world_count(s)
}

fn axiom_soundness() -> Outcome {
    let start = Instant::now();
    let sweep = axiom_sweep(&poly(), &SweepConfig::default());
    let elapsed = start.elapsed();
    let failures: usize =
        sweep.schemes.values().map(|t| t.failures).sum::<usize>() + sweep.tautologies.failures;
    let checks: usize =
        sweep.schemes.values().map(|t| t.checks).sum::<usize>() + sweep.tautologies.checks;
    outcome(
        sweep.passed() && elapsed <= AXIOM_SWEEP_LIMIT,
        format!(
            "{} schemes + tautologies, {checks} checks, {failures} failures, {:.1}s",
            sweep.schemes.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn rule_preservation() -> Outcome {
    let tallies = rule_sweep(&poly(), &SweepConfig::default());
    let applicable: usize = tallies.values().map(|t| t.applicable).sum();
    let failures: usize = tallies.values().map(|t| t.failures).sum();
    let every_rule_exercised = tallies.values().all(|t| t.applicable > 0);
    outcome(
        failures == 0 && every_rule_exercised && tallies.values().all(|t| t.passed()),
        format!(
            "{} rules, {applicable} premise-valid cases, {failures} violations",
            tallies.len()
        ),
    )
}

fn prop_equivalence() -> Outcome {
    let start = Instant::now();
    let sweep = prop_equiv_sweep(&Arc::new(fixtures::sigma0()), 3, 2).unwrap();
    let elapsed = start.elapsed();
    outcome(
        sweep.disagreements == 0 && sweep.checks > 0 && elapsed <= EQUIV_SWEEP_LIMIT,
        format!(
            "{} formulas x {} models, {} checks, agreement {:.3}%, {:.1}s",
            sweep.formulas,
            sweep.models,
            sweep.checks,
            sweep.agreement_percent(),
            elapsed.as_secs_f64()
        ),
    )
}

fn model_round_trip() -> Outcome {
    let sig = poly();
    let bounds = SizeBounds::uniform(&sig, 4);
    let mut rng = split_rng(SEED, 4);
    let mut bad = 0;
    for _ in 0..ROUND_TRIP_MODELS {
        let (km, g) = random_model_with(&sig, &bounds, &mut rng);
        let (ml, rho) = ml_of_hmodl(km.frame(), &g);
        let (frame, g2) = hmodl_of_ml(&ml, &rho);
        if textio::render_frame(&frame) != textio::render_frame(km.frame())
            || textio::render_assignment(&frame, &g2) != textio::render_assignment(km.frame(), &g)
        {
            bad += 1;
        }

        let ml = random_ml_model_with(&sig, &bounds, &mut rng);
        let rho: BTreeMap<_, _> = sig
            .symbols_of(SymbolKind::SVar)
            .into_iter()
            .map(|(x, s)| (x, rng.random_range(0..ml.carrier_size(&s))))
            .collect();
        let rho = Valuation::new(&ml, rho).unwrap();
        let (frame, g) = hmodl_of_ml(&ml, &rho);
        let (back, rho2) = ml_of_hmodl(&frame, &g);
        if textio::render_ml_model(&back) != textio::render_ml_model(&ml) || rho2 != rho {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("{ROUND_TRIP_MODELS} models each way, {bad} mismatches"),
    )
}

fn lemmas() -> Outcome {
    let sig = poly();
    let bounds = SizeBounds::uniform(&sig, 3);
    let g_all = Grammar::system(SYS);
    let (agreement_bad, substitution_bad, substitutions): (usize, usize, usize) = (0
        ..LEMMA_TRIPLES)
        .into_par_iter()
        .map(|i| {
            let mut rng = split_rng(SEED, 1000 + i as u64);
            let (m, g) = random_model_with(&sig, &bounds, &mut rng);
            let f = random_sorted_formula(&sig, 4, g_all, &mut rng);
            let s = sort_of(&f, &sig).unwrap();

            let mut h = random_assignment_with(m.frame(), &mut rng);
            for x in free_svars(&f) {
                h = h.variant(&x, g.get(&x).unwrap());
            }
            let agreement = worlds(&m, &s).any(|w| sat(&m, &g, w, &f) != sat(&m, &h, w, &f));

            let (x, xs) = sig
                .symbols_of(SymbolKind::SVar)
                .choose(&mut rng)
                .unwrap()
                .clone();
            let mut zs: Vec<StateSym> = sig
                .pool(SymbolKind::SVar, &xs)
                .into_iter()
                .map(StateSym::Var)
                .collect();
            zs.extend(
                sig.pool(SymbolKind::Nom, &xs)
                    .into_iter()
                    .map(StateSym::Nom),
            );
            let (mut bad, mut done) = (0, 0);
            for z in zs.into_iter().filter(|z| is_substitutable(&f, &x, z)) {
                let target = match &z {
                    StateSym::Var(y) => g.get(y).unwrap(),
                    StateSym::Nom(j) => *m.value(j).iter().next().unwrap(),
                };
                let fz = substitute(&sig, &f, &x, &z).unwrap();
                let gx = g.variant(&x, target);
                done += 1;
                if worlds(&m, &s).any(|w| sat(&m, &g, w, &fz) != sat(&m, &gx, w, &f)) {
                    bad += 1;
                }
            }
            (agreement as usize, bad, done)
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    outcome(
        agreement_bad == 0 && substitution_bad == 0,
        format!(
            "{LEMMA_TRIPLES} triples: agreement {agreement_bad} counterexamples, \
             substitution {substitution_bad} counterexamples in {substitutions} substitutions"
        ),
    )
}

/// Every frame of up to three worlds per sort, with the hybrid `@` and
/// `exists @` forms compared pointwise against the definedness patterns.
fn at_definedness() -> Outcome {
    let sig1 = Arc::new(fixtures::sigma1());
    let frames = enumerate_frames(&sig1, 3);
    // bodies of depth 2 over the two-variable fixture keep the compared
    // formulas at depth 3
    let bodies: Vec<Formula> = enumerate_formulas(&fixtures::sigma0(), 2, Grammar::form0())
        .into_values()
        .flatten()
        .collect();
    let sorts: Vec<Sort> = sig1.sorts().cloned().collect();
    let mut pairs: Vec<(Formula, Formula)> = Vec::new();
    for phi in &bodies {
        let r = sort_of(phi, &sig1).unwrap();
        let fresh = sig1.fresh_svar(&r, &[phi]).unwrap();
        for s in &sorts {
            for x in sig1.pool(SymbolKind::SVar, &r) {
                let hybrid = Formula::at(StateSym::Var(x.clone()), s, phi.clone());
                let pattern = Formula::defined(s, Formula::and(Formula::Var(x), phi.clone()));
                pairs.push((hybrid, pattern));
            }
            let hybrid = Formula::exists(
                &fresh,
                &r,
                Formula::at(StateSym::Var(fresh.clone()), s, phi.clone()),
            );
            pairs.push((hybrid, Formula::defined(s, phi.clone())));
        }
    }
    let (checks, bad): (u64, u64) = frames
        .par_iter()
        .map(|frame| {
            let km = trivial_model(frame);
            let (mut checks, mut bad) = (0u64, 0u64);
            for (hybrid, pattern) in &pairs {
                let s = sort_of(hybrid, &sig1).unwrap();
                for g in all_assignments(frame, hybrid) {
                    let (ml, rho) = ml_of_hmodl(frame, &g);
                    let ext = evaluate(&ml, &rho, pattern).unwrap();
                    for w in worlds(&km, &s) {
                        checks += 1;
                        if sat(&km, &g, w, hybrid) != ext.contains(w) {
                            bad += 1;
                        }
                    }
                }
            }
            (checks, bad)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let pct = 100.0 * (checks - bad) as f64 / checks as f64;
    outcome(
        bad == 0,
        format!(
            "{} frames x {} formula pairs, {checks} checks, agreement {pct:.3}%",
            frames.len(),
            pairs.len()
        ),
    )
}

/// Assignments that differ on the free variables of `f`; other variables
/// sit at the first world.
fn all_assignments(frame: &hyml::semantics::Frame, f: &Formula) -> Vec<Assignment> {
    let mut out = vec![Assignment::first_worlds(frame)];
    for x in free_svars(f) {
        let (_, s) = frame.signature().symbol(&x).unwrap();
        let n = frame.world_count(s);
        out = out
            .into_iter()
            .flat_map(|g| (0..n).map(|a| g.variant(&x, a)).collect::<Vec<_>>())
            .collect();
    }
    out
}

fn universal_modality() -> Outcome {
    let sig = poly();
    let bounds = SizeBounds::uniform(&sig, 3);
    let g_all = Grammar::system(SYS);
    let sorts: Vec<Sort> = sig.sorts().cloned().collect();
    let (mut lemma_bad, mut set_bad, mut checked) = (0, 0, 0);
    let mut rng = split_rng(SEED, 7);
    for _ in 0..UNIV_PAIRS {
        let (m, _) = random_model_with(&sig, &bounds, &mut rng);
        let gamma: Vec<Formula> = (0..rng.random_range(1..=4))
            .map(|_| random_sorted_formula(&sig, 3, g_all, &mut rng))
            .filter(|f| sorts.iter().all(|s| univ_mod(&sig, s, f.clone()).is_ok()))
            .collect();
        let valid = |f: &Formula| valid_in_model(&m, f, SYS).unwrap();
        let whole = gamma.iter().all(valid);
        for s in &sorts {
            let boxed: Vec<Formula> = gamma
                .iter()
                .map(|f| univ_mod(&sig, s, f.clone()).unwrap())
                .collect();
            for (f, a) in gamma.iter().zip(&boxed) {
                checked += 1;
                if valid(a) != valid(f) {
                    lemma_bad += 1;
                }
            }
            if boxed.iter().all(valid) != whole {
                set_bad += 1;
            }
        }
    }
    outcome(
        lemma_bad == 0 && set_bad == 0 && checked > 0,
        format!("{UNIV_PAIRS} pairs, {checked} formulas, lemma {lemma_bad} failures, set {set_bad} failures"),
    )
}

fn constants_translation() -> Outcome {
    let sig = poly();
    let ext = ExtendedSignature::new(sig.clone()).unwrap();
    let bounds = SizeBounds::uniform(&sig, 3);
    let g_all = Grammar::system(SYS);
    let mut rng = split_rng(SEED, 8);
    let (mut gamma_bad, mut valid_bad, mut at_cases, mut valid_cases) = (0, 0, 0, 0);
    for _ in 0..CONSTANT_MODELS {
        let (m, _) = random_model_with(&sig, &bounds, &mut rng);
        for _ in 0..FORMULAS_PER_MODEL {
            let phi = random_sorted_formula(&sig, 3, g_all, &mut rng);
            let r = check_thm_ml2_semantic(&ext, &m, &phi).unwrap();
            gamma_bad += usize::from(!r.gamma_holds);
            valid_bad += usize::from(r.hybrid_valid != r.ml_valid);
            at_cases += usize::from(r.at_encoded);
            valid_cases += usize::from(r.hybrid_valid);
        }
    }
    outcome(
        gamma_bad == 0 && valid_bad == 0,
        format!(
            "{CONSTANT_MODELS} models x {FORMULAS_PER_MODEL} formulas ({at_cases} with @, {valid_cases} valid), \
             constraints {gamma_bad} failures, biconditional {valid_bad} failures"
        ),
    )
}

/// Error class named by a corpus `; expect:` line.
fn error_kind(e: &ProofError) -> &'static str {
    match e {
        ProofError::SideConditionViolated { .. } => "side-condition",
        ProofError::Syntax(SyntaxError::NotNomContext(_)) => "context",
        ProofError::BadReference { .. } => "reference",
        ProofError::NotATautology => "tautology",
        ProofError::NotInSystem { .. } => "system",
        ProofError::SchemeMismatch { .. } => "mismatch",
        ProofError::RuleShapeMismatch { .. } => "shape",
        ProofError::BridgeAxiom => "bridge",
        _ => "other",
    }
}

fn proof_corpus() -> Outcome {
    let sig = Arc::new(
        textio::parse_signature(&fs::read_to_string(common::data("sigma-poly.sig")).unwrap())
            .unwrap(),
    );
    let cfg = SweepConfig::default();
    let bounds = SizeBounds::uniform(&sig, cfg.max_worlds);
    let mut rng = split_rng(SEED, 9);
    let models: Vec<KripkeStructure> = (0..cfg.models)
        .map(|_| random_model_with(&sig, &bounds, &mut rng).0)
        .collect();
    let (mut accepted, mut rejected, mut wrong, mut unsound) = (0, 0, Vec::new(), 0);
    for dir in ["accept", "reject"] {
        let mut paths: Vec<_> = fs::read_dir(common::data(&format!("proofs/{dir}")))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        paths.sort();
        for path in paths {
            let name = path.file_name().unwrap().to_string_lossy().to_string();
            let text = fs::read_to_string(&path).unwrap();
            let verdict = match textio::parse_proof(&sig, &text) {
                Err(TextError::Invalid {
                    source: Invalid::Proof(e),
                    ..
                }) => format!("parse {}", error_kind(&e)),
                Err(e) => format!("parse error {e}"),
                Ok(script) => {
                    let report = check_proof(&script, &sig);
                    match &report.failure {
                        Some(f) => format!("step {} {}", f.step, error_kind(&f.error)),
                        None => {
                            let c = report.conclusion(&script).unwrap();
                            for m in &models {
                                let premises_hold = script
                                    .premises
                                    .iter()
                                    .all(|p| valid_in_model(m, p, SYS).unwrap());
                                if premises_hold && !valid_in_model(m, c, SYS).unwrap() {
                                    unsound += 1;
                                }
                            }
                            "ok".to_string()
                        }
                    }
                }
            };
            let expected = common::expectation(&text).unwrap_or_else(|| "ok".into());
            if dir == "accept" {
                accepted += 1;
            } else {
                rejected += 1;
            }
            if verdict != expected {
                wrong.push(format!("{name}: got `{verdict}`"));
            }
        }
    }
    outcome(
        accepted >= 10 && rejected >= 10 && wrong.is_empty() && unsound == 0,
        format!(
            "{accepted} accepting, {rejected} rejecting, {} wrong verdicts{}, {unsound} invalid conclusions",
            wrong.len(),
            if wrong.is_empty() { String::new() } else { format!(" [{}]", wrong.join("; ")) }
        ),
    )
}

fn parser_round_trip() -> Outcome {
    let bad: usize = (0..DOCUMENTS)
        .into_par_iter()
        .filter(|&i| {
            let mut rng = split_rng(SEED, 10_000 + i as u64);
            let doc = common::random_document(&mut rng);
            let ctx = ParseContext {
                sig: Some(&doc.sig),
                frame: doc.frame.as_ref(),
            };
            let Ok(first) = textio::parse_document(&doc.text, ctx) else {
                return true;
            };
            let text = textio::render_document(&first);
            let ctx = ParseContext {
                sig: Some(&doc.sig),
                frame: doc.frame.as_ref(),
            };
            textio::parse_document(&text, ctx)
                .map_or(true, |second| second != first || text != doc.text)
        })
        .count();
    outcome(bad == 0, format!("{DOCUMENTS} documents, {bad} failures"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("axiom soundness sweep", axiom_soundness),
        ("rule preservation", rule_preservation),
        ("ML vs frame satisfaction", prop_equivalence),
        ("model map round trip", model_round_trip),
        ("agreement and substitution", lemmas),
        ("@ vs definedness", at_definedness),
        ("universal modality", universal_modality),
        ("constants translation", constants_translation),
        ("proof corpus", proof_corpus),
        ("parser round trip", parser_round_trip),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} {verdict} {name}: {} ({:.1}s)",
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
