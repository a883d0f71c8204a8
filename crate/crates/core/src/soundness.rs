//! Empirical soundness of the deductive systems: random scheme witnesses
//! and rule instances checked against random standard models.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::gen::{random_formula, split_rng, Grammar};
use crate::proof::{
    apply_rule, instantiate, is_prop_tautology, AxiomScheme, Binding, Bindings, Rule,
};
use crate::semantics::{random_model_with, valid_in_model, KripkeStructure, SizeBounds};
use crate::syntax::{sort_of, Formula, Name, Signature, Sort, StateSym, SymbolKind, SystemId};

const MAX_TRIES: usize = 10_000;

fn pick<T: Clone, R: Rng>(items: &[T], rng: &mut R) -> T {
    items.choose(rng).expect("non-empty choice").clone()
}

fn sorts(sig: &Signature) -> Vec<Sort> {
    sig.sorts().cloned().collect()
}

fn state_symbols(sig: &Signature, sort: &Sort) -> Vec<StateSym> {
    let mut out: Vec<StateSym> = sig
        .pool(SymbolKind::Nom, sort)
        .into_iter()
        .map(StateSym::Nom)
        .collect();
    out.extend(
        sig.pool(SymbolKind::SVar, sort)
            .into_iter()
            .map(StateSym::Var),
    );
    out
}

fn any_state<R: Rng>(sig: &Signature, rng: &mut R) -> StateSym {
    let all: Vec<StateSym> = sorts(sig)
        .iter()
        .flat_map(|s| state_symbols(sig, s))
        .collect();
    pick(&all, rng)
}

fn svar<R: Rng>(sig: &Signature, rng: &mut R) -> (Name, Sort) {
    pick(&sig.symbols_of(SymbolKind::SVar), rng)
}

/// Operation symbol with at least one argument, a marked position and
/// random formulas at the other positions.
fn holed_app<R: Rng>(sig: &Signature, depth: usize, rng: &mut R) -> (Name, Vec<Formula>, usize) {
    let ops: Vec<(Name, Vec<Sort>)> = sig
        .ops()
        .filter(|(_, d)| d.arity() > 0)
        .map(|(n, d)| (n.clone(), d.args.clone()))
        .collect();
    let (op, arg_sorts) = pick(&ops, rng);
    let i = rng.random_range(0..arg_sorts.len());
    let args = arg_sorts
        .iter()
        .enumerate()
        .map(|(k, s)| {
            if k == i {
                Formula::Hole(s.clone())
            } else {
                formula(sig, s, depth, rng)
            }
        })
        .collect();
    (op, args, i)
}

fn formula<R: Rng>(sig: &Signature, sort: &Sort, depth: usize, rng: &mut R) -> Formula {
    random_formula(
        sig,
        sort,
        depth,
        Grammar::system(SystemId::HybridAtForall),
        rng,
    )
}

/// A NomC context with the given hole sort: a chain of operation symbols
/// with `T` at the unmarked positions.
pub fn random_context<R: Rng>(sig: &Signature, hole: &Sort, depth: usize, rng: &mut R) -> Formula {
    let mut body = Formula::Hole(hole.clone());
    let mut sort = hole.clone();
    for _ in 0..rng.random_range(0..=depth) {
        let candidates: Vec<(Name, Vec<Sort>, Sort)> = sig
            .ops()
            .filter(|(_, d)| d.args.contains(&sort))
            .map(|(n, d)| (n.clone(), d.args.clone(), d.result.clone()))
            .collect();
        let Some((op, args, result)) = candidates.choose(rng).cloned() else {
            break;
        };
        let positions: Vec<usize> = (0..args.len()).filter(|&k| args[k] == sort).collect();
        let i = pick(&positions, rng);
        let args = args
            .iter()
            .enumerate()
            .map(|(k, s)| {
                if k == i {
                    body.clone()
                } else {
                    Formula::Top(s.clone())
                }
            })
            .collect();
        body = Formula::App(op, args);
        sort = result;
    }
    body
}

/// One attempt at witnesses for `scheme`; may violate a side condition.
fn candidate<R: Rng>(scheme: AxiomScheme, sig: &Signature, depth: usize, rng: &mut R) -> Bindings {
    use AxiomScheme::*;
    let mut b = Bindings::new();
    let mut put = |k: &str, v: Binding| {
        b.insert(k.to_string(), v);
    };
    let all_sorts = sorts(sig);
    let some_sort = |rng: &mut R| pick(&all_sorts, rng);
    match scheme {
        K => {
            let (op, args, i) = holed_app(sig, depth, rng);
            let s = sort_of(&args[i], sig).unwrap();
            put("op", Binding::Op(op));
            put("args", Binding::Args(args));
            put("phi", Binding::Formula(formula(sig, &s, depth, rng)));
            put("chi", Binding::Formula(formula(sig, &s, depth, rng)));
        }
        Dual => {
            let (op, decl) = pick(
                &sig.ops()
                    .map(|(n, d)| (n.clone(), d.clone()))
                    .collect::<Vec<_>>(),
                rng,
            );
            let args = decl
                .args
                .iter()
                .map(|s| formula(sig, s, depth, rng))
                .collect();
            put("op", Binding::Op(op));
            put("args", Binding::Args(args));
        }
        Q1 => {
            let (x, _) = svar(sig, rng);
            let s = some_sort(rng);
            put("x", Binding::Var(x));
            put("phi", Binding::Formula(formula(sig, &s, depth, rng)));
            put("psi", Binding::Formula(formula(sig, &s, depth, rng)));
        }
        Q2 => {
            let (x, xs) = svar(sig, rng);
            let s = some_sort(rng);
            put("x", Binding::Var(x));
            put("phi", Binding::Formula(formula(sig, &s, depth, rng)));
            put("y", Binding::State(pick(&state_symbols(sig, &xs), rng)));
        }
        Name => put("x", Binding::Var(svar(sig, rng).0)),
        Barcan => {
            let (op, args, i) = holed_app(sig, depth, rng);
            let s = sort_of(&args[i], sig).unwrap();
            put("op", Binding::Op(op));
            put("x", Binding::Var(svar(sig, rng).0));
            put("args", Binding::Args(args));
            put("phi", Binding::Formula(formula(sig, &s, depth, rng)));
        }
        Nom => {
            let (x, xs) = svar(sig, rng);
            let eta = random_context(sig, &xs, 2, rng);
            let eta_sort = sort_of(&eta, sig).unwrap();
            let theta = (0..64)
                .map(|_| random_context(sig, &xs, 2, rng))
                .find(|t| sort_of(t, sig).unwrap() == eta_sort)
                .unwrap_or_else(|| eta.clone());
            put("x", Binding::Var(x));
            put("eta", Binding::Formula(eta));
            put("theta", Binding::Formula(theta));
            put("phi", Binding::Formula(formula(sig, &xs, depth, rng)));
        }
        KAt | SelfDual | Intro | Ref => {
            let z = any_state(sig, rng);
            let zs = sig.state_sort(&z).unwrap().clone();
            put("z", Binding::State(z));
            if scheme != Intro {
                put("s", Binding::Sort(some_sort(rng)));
            }
            if scheme != Ref {
                put("phi", Binding::Formula(formula(sig, &zs, depth, rng)));
            }
            if scheme == KAt {
                put("psi", Binding::Formula(formula(sig, &zs, depth, rng)));
            }
        }
        Back => {
            let (op, args, _) = holed_app(sig, depth, rng);
            let z = any_state(sig, rng);
            let zs = sig.state_sort(&z).unwrap().clone();
            put("op", Binding::Op(op));
            put("args", Binding::Args(args));
            put("z", Binding::State(z));
            put("psi", Binding::Formula(formula(sig, &zs, depth, rng)));
        }
        Agree => {
            let (y, z) = (any_state(sig, rng), any_state(sig, rng));
            let zs = sig.state_sort(&z).unwrap().clone();
            put("y", Binding::State(y));
            put("z", Binding::State(z));
            put("phi", Binding::Formula(formula(sig, &zs, depth, rng)));
            put("s", Binding::Sort(some_sort(rng)));
        }
        BarcanAt => {
            let z = any_state(sig, rng);
            let zs = sig.state_sort(&z).unwrap().clone();
            put("x", Binding::Var(svar(sig, rng).0));
            put("z", Binding::State(z));
            put("phi", Binding::Formula(formula(sig, &zs, depth, rng)));
            put("s", Binding::Sort(some_sort(rng)));
        }
        NomX => {
            let (x, xs) = svar(sig, rng);
            let pool = state_symbols(sig, &xs);
            put("x", Binding::Var(x));
            put("y", Binding::State(pick(&pool, rng)));
            put("z", Binding::State(pick(&pool, rng)));
            put("s", Binding::Sort(some_sort(rng)));
        }
    }
    b
}

/// Random witnesses for `scheme` that satisfy its side conditions, together
/// with the instance they determine.
pub fn random_instance<R: Rng>(
    scheme: AxiomScheme,
    sig: &Signature,
    depth: usize,
    rng: &mut R,
) -> (Bindings, Formula) {
    for _ in 0..MAX_TRIES {
        let b = candidate(scheme, sig, depth, rng);
        if let Ok(f) = instantiate(scheme, &b, sig) {
            return (b, f);
        }
    }
    panic!("no admissible witnesses for `{scheme}` over this signature");
}

/// A random application of `rule`: premises and a conclusion accepted by
/// [`apply_rule`]. Pasted state symbols are state variables, since the
/// paste rules are sound per model only for those.
pub fn random_rule_instance<R: Rng>(
    rule: Rule,
    sig: &Signature,
    depth: usize,
    rng: &mut R,
) -> (Vec<Formula>, Formula) {
    for _ in 0..MAX_TRIES {
        if let Some((premises, conclusion)) = rule_candidate(rule, sig, depth, rng) {
            let refs: Vec<&Formula> = premises.iter().collect();
            if apply_rule(rule, &refs, &conclusion, sig).is_ok() {
                return (premises, conclusion);
            }
        }
    }
    panic!("no admissible instance of `{rule}` over this signature");
}

/// Formulas valid in many small models: tautologies and @-jumps over them
/// are mixed with plain random formulas so that premises are often valid.
fn premise_formula<R: Rng>(sig: &Signature, sort: &Sort, depth: usize, rng: &mut R) -> Formula {
    let f = formula(sig, sort, depth, rng);
    match rng.random_range(0..4) {
        0 => Formula::or(f.clone(), Formula::neg(f)),
        1 => Formula::or(f, formula(sig, sort, depth, rng)),
        _ => f,
    }
}

fn rule_candidate<R: Rng>(
    rule: Rule,
    sig: &Signature,
    depth: usize,
    rng: &mut R,
) -> Option<(Vec<Formula>, Formula)> {
    let all_sorts = sorts(sig);
    let s = pick(&all_sorts, rng);
    Some(match rule {
        Rule::Mp => {
            let phi = premise_formula(sig, &s, depth, rng);
            let mut psi = formula(sig, &s, depth, rng);
            if rng.random_ratio(1, 3) {
                psi = Formula::or(psi, Formula::neg(phi.clone()));
            }
            (vec![phi.clone(), Formula::implies(phi, psi.clone())], psi)
        }
        Rule::Ug => {
            let (op, mut args, i) = holed_app(sig, depth, rng);
            let si = sort_of(&args[i], sig).ok()?;
            let phi = premise_formula(sig, &si, depth, rng);
            args[i] = phi.clone();
            (vec![phi], Formula::dual_app(&op, args))
        }
        Rule::Gen => {
            let (x, xs) = svar(sig, rng);
            let phi = premise_formula(sig, &s, depth, rng);
            (vec![phi.clone()], Formula::forall(&x, &xs, phi))
        }
        Rule::GenAt => {
            let z = any_state(sig, rng);
            let zs = sig.state_sort(&z).ok()?.clone();
            let phi = premise_formula(sig, &zs, depth, rng);
            let t = pick(&all_sorts, rng);
            (vec![phi.clone()], Formula::at(z, &t, phi))
        }
        Rule::Broadcast => {
            let z = any_state(sig, rng);
            let zs = sig.state_sort(&z).ok()?.clone();
            let phi = premise_formula(sig, &zs, depth, rng);
            let t1 = pick(&all_sorts, rng);
            let t2 = pick(&all_sorts, rng);
            (
                vec![Formula::at(z.clone(), &t1, phi.clone())],
                Formula::at(z, &t2, phi),
            )
        }
        Rule::Paste0 | Rule::Paste1 => {
            let z = any_state(sig, rng);
            let zs = sig.state_sort(&z).ok()?.clone();
            let t = pick(&all_sorts, rng);
            let psi = premise_formula(sig, &t, depth, rng);
            let (body_p, body_c, y_sort) = if rule == Rule::Paste0 {
                let phi = formula(sig, &zs, depth, rng);
                (None, phi, zs.clone())
            } else {
                let ops: Vec<_> = sig
                    .ops_into(&zs)
                    .into_iter()
                    .filter(|(_, d)| d.arity() > 0)
                    .collect();
                let (op, decl) = ops.choose(rng)?;
                let i = rng.random_range(0..decl.arity());
                let args: Vec<Formula> = decl
                    .args
                    .iter()
                    .map(|a| formula(sig, a, depth, rng))
                    .collect();
                (
                    Some((op.clone(), args.clone(), i)),
                    Formula::App(op.clone(), args),
                    decl.args[i].clone(),
                )
            };
            let y = pick(&sig.pool(SymbolKind::SVar, &y_sort), rng);
            let yf = Formula::var(&y);
            let premise_body = match body_p {
                None => Formula::and(yf, body_c.clone()),
                Some((op, mut args, i)) => {
                    args[i] = Formula::and(yf, args[i].clone());
                    Formula::App(op, args)
                }
            };
            (
                vec![Formula::implies(
                    Formula::at(z.clone(), &t, premise_body),
                    psi.clone(),
                )],
                Formula::implies(Formula::at(z, &t, body_c), psi),
            )
        }
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub instances: usize,
    /// (instance, model) pairs evaluated.
    pub checks: usize,
    /// Checks whose premises held, for rules; equal to `checks` for axioms.
    pub applicable: usize,
    pub failures: usize,
    /// First failing formula, rendered.
    pub witness: Option<String>,
}

impl Tally {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub samples: usize,
    pub models: usize,
    pub max_worlds: usize,
    pub depth: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            samples: 100,
            models: 50,
            max_worlds: 4,
            depth: 2,
            seed: 7,
        }
    }
}

fn models(sig: &Arc<Signature>, cfg: &SweepConfig, stream: u64) -> Vec<KripkeStructure> {
    let bounds = SizeBounds::uniform(sig, cfg.max_worlds);
    let mut rng = split_rng(cfg.seed, stream);
    (0..cfg.models)
        .map(|_| random_model_with(sig, &bounds, &mut rng).0)
        .collect()
}

const SYS: SystemId = SystemId::HybridAtForall;

/// Propositional tautologies with their letters replaced by random formulas
/// of one sort.
pub fn random_tautology<R: Rng>(sig: &Signature, depth: usize, rng: &mut R) -> Formula {
    let s = pick(&sorts(sig), rng);
    let a = formula(sig, &s, depth, rng);
    let b = formula(sig, &s, depth, rng);
    let c = formula(sig, &s, depth, rng);
    let imp = Formula::implies;
    let neg = Formula::neg;
    match rng.random_range(0..6) {
        0 => Formula::or(a.clone(), neg(a)),
        1 => imp(a.clone(), imp(b, a)),
        2 => imp(
            imp(a.clone(), imp(b.clone(), c.clone())),
            imp(imp(a.clone(), b.clone()), imp(a, c)),
        ),
        3 => imp(imp(neg(a.clone()), neg(b.clone())), imp(b, a)),
        4 => Formula::iff(Formula::and(a.clone(), b.clone()), Formula::and(b, a)),
        _ => imp(neg(neg(a.clone())), a),
    }
}

/// Result of [`axiom_sweep`].
#[derive(Clone, Debug, Default)]
pub struct AxiomSweep {
    pub schemes: BTreeMap<AxiomScheme, Tally>,
    /// Sampled tautology instances, the remaining axioms of every system.
    pub tautologies: Tally,
}

impl AxiomSweep {
    pub fn passed(&self) -> bool {
        self.tautologies.passed() && self.schemes.values().all(Tally::passed)
    }
}

fn tally_instances(
    ms: &[KripkeStructure],
    samples: usize,
    mut draw: impl FnMut() -> Formula,
) -> Tally {
    let mut t = Tally::default();
    for _ in 0..samples {
        let f = draw();
        t.instances += 1;
        for m in ms {
            t.checks += 1;
            t.applicable += 1;
            if !valid_in_model(m, &f, SYS).expect("instance evaluates") {
                t.failures += 1;
                t.witness.get_or_insert_with(|| f.to_string());
            }
        }
    }
    t
}

/// Every sampled instance of every scheme, and every sampled tautology, must
/// be valid in every sampled model.
pub fn axiom_sweep(sig: &Arc<Signature>, cfg: &SweepConfig) -> AxiomSweep {
    let ms = models(sig, cfg, u64::MAX);
    let schemes = AxiomScheme::ALL
        .par_iter()
        .map(|&scheme| {
            let mut rng = split_rng(cfg.seed, scheme as u64);
            let t = tally_instances(&ms, cfg.samples, || {
                random_instance(scheme, sig, cfg.depth, &mut rng).1
            });
            (scheme, t)
        })
        .collect();
    let mut rng = split_rng(cfg.seed, 99);
    let tautologies = tally_instances(&ms, cfg.samples, || {
        let f = random_tautology(sig, cfg.depth, &mut rng);
        debug_assert!(is_prop_tautology(&f).unwrap_or(false));
        f
    });
    AxiomSweep {
        schemes,
        tautologies,
    }
}

/// Whenever the premises of a sampled rule instance are valid in a sampled
/// model, so is its conclusion.
pub fn rule_sweep(sig: &Arc<Signature>, cfg: &SweepConfig) -> BTreeMap<Rule, Tally> {
    let ms = models(sig, cfg, u64::MAX - 1);
    Rule::ALL
        .par_iter()
        .map(|&rule| {
            let mut rng = split_rng(cfg.seed, 100 + rule as u64);
            let mut t = Tally::default();
            for _ in 0..cfg.samples {
                let (premises, conclusion) = random_rule_instance(rule, sig, cfg.depth, &mut rng);
                t.instances += 1;
                for m in &ms {
                    t.checks += 1;
                    let holds =
                        |f: &Formula| valid_in_model(m, f, SYS).expect("instance evaluates");
                    if premises.iter().all(holds) {
                        t.applicable += 1;
                        if !holds(&conclusion) {
                            t.failures += 1;
                            t.witness.get_or_insert_with(|| conclusion.to_string());
                        }
                    }
                }
            }
            (rule, t)
        })
        .collect()
}
