//! Helpers shared by the integration suites: data paths, a set-based
//! Matching Logic evaluator used as an oracle, and random documents.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use hyml::gen::{random_formula, Grammar};
use hyml::matching::{random_ml_model_with, MLModel};
use hyml::proof::{AxiomScheme, Justification, ProofScript, Rule, Step};
use hyml::semantics::{random_frame_with, random_model_with, SizeBounds};
use hyml::soundness::random_instance;
use hyml::syntax::{sort_of, Formula, Name, Signature, Sort, SymbolKind, SystemId};
use hyml::textio;
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel)
}

/// Pattern extension computed with plain sets, straight from the
/// definitions. Independent of the bitset evaluator in the library.
pub fn oracle_extension(m: &MLModel, rho: &BTreeMap<Name, usize>, f: &Formula) -> BTreeSet<usize> {
    let sig = m.signature();
    let full = |s: &Sort| -> BTreeSet<usize> { (0..m.carrier_size(s)).collect() };
    match f {
        Formula::Top(s) => full(s),
        Formula::Var(x) => BTreeSet::from([rho[x]]),
        Formula::Neg(a) => {
            let s = sort_of(a, sig).unwrap();
            let inner = oracle_extension(m, rho, a);
            full(&s).difference(&inner).copied().collect()
        }
        Formula::Or(a, b) => {
            let mut out = oracle_extension(m, rho, a);
            out.extend(oracle_extension(m, rho, b));
            out
        }
        Formula::App(op, args) => {
            let sets: Vec<Vec<usize>> = args
                .iter()
                .map(|a| oracle_extension(m, rho, a).into_iter().collect())
                .collect();
            let mut out = BTreeSet::new();
            let mut tuple = vec![0; sets.len()];
            fn walk(
                i: usize,
                sets: &[Vec<usize>],
                tuple: &mut Vec<usize>,
                m: &MLModel,
                op: &str,
                out: &mut BTreeSet<usize>,
            ) {
                if i == sets.len() {
                    out.extend(m.apply(op, tuple));
                    return;
                }
                for &a in &sets[i] {
                    tuple[i] = a;
                    walk(i + 1, sets, tuple, m, op, out);
                }
            }
            walk(0, &sets, &mut tuple, m, op, &mut out);
            out
        }
        Formula::Forall(x, s, body) => {
            let body_sort = sort_of(body, sig).unwrap();
            let mut out = full(&body_sort);
            for a in 0..m.carrier_size(s) {
                let mut rho = rho.clone();
                rho.insert(x.clone(), a);
                let ext = oracle_extension(m, &rho, body);
                out = out.intersection(&ext).copied().collect();
            }
            out
        }
        Formula::Defined(target, body) => {
            if oracle_extension(m, rho, body).is_empty() {
                BTreeSet::new()
            } else {
                full(target)
            }
        }
        other => panic!("not a pattern: {other}"),
    }
}

/// A random well-formed signature with 1 to 3 sorts.
pub fn random_signature<R: Rng>(rng: &mut R) -> Signature {
    let n = rng.random_range(1..=3);
    let sorts: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut b = Signature::builder();
    for s in &sorts {
        b = b.sort(s);
    }
    for i in 0..rng.random_range(0..=3) {
        let args: Vec<&str> = (0..rng.random_range(0..=2))
            .map(|_| sorts.choose(rng).unwrap().as_str())
            .collect();
        b = b.op(&format!("op{i}"), &args, sorts.choose(rng).unwrap());
    }
    for (k, kind) in [SymbolKind::Prop, SymbolKind::Nom, SymbolKind::SVar]
        .into_iter()
        .enumerate()
    {
        for i in 0..rng.random_range(0..=3) {
            let prefix = ["p", "n", "v"][k];
            b = b.symbol(kind, sorts.choose(rng).unwrap(), &format!("{prefix}{i}"));
        }
    }
    b.build().expect("generated signature is valid")
}

fn every_feature() -> Grammar {
    Grammar {
        props: true,
        noms: true,
        svars: true,
        forall: true,
        at: true,
        defined: true,
    }
}

fn random_proof<R: Rng>(sig: &Signature, rng: &mut R) -> ProofScript {
    let g = Grammar::system(SystemId::HybridAtForall);
    let mut steps = Vec::new();
    for n in 1..=rng.random_range(1..6usize) {
        let justification = match rng.random_range(0..4) {
            0 => Justification::Taut,
            1 => {
                let scheme = *AxiomScheme::ALL.choose(rng).unwrap();
                Justification::Axiom {
                    scheme,
                    bindings: random_instance(scheme, sig, 2, rng).0,
                }
            }
            2 => Justification::Rule {
                rule: *Rule::ALL.choose(rng).unwrap(),
                refs: (0..rng.random_range(0..3))
                    .map(|_| rng.random_range(1..=n))
                    .collect(),
            },
            _ => Justification::Premise(rng.random_range(1..4)),
        };
        steps.push(Step {
            formula: hyml::gen::random_sorted_formula(sig, 3, g, rng),
            justification,
        });
    }
    ProofScript {
        system: *SystemId::ALL.choose(rng).unwrap(),
        premises: (0..rng.random_range(0..3))
            .map(|_| hyml::gen::random_sorted_formula(sig, 3, g, rng))
            .collect(),
        steps,
    }
}

/// A random document rendered canonically, with the signature needed to
/// parse it back (assignments also carry their frame).
pub struct RandomDoc {
    pub sig: Arc<Signature>,
    pub frame: Option<hyml::semantics::Frame>,
    pub text: String,
}

pub fn random_document<R: Rng>(rng: &mut R) -> RandomDoc {
    let kind = rng.random_range(0..7);
    // proofs need witnesses for every scheme, which the fixture provides
    let sig = Arc::new(if kind == 6 {
        hyml::fixtures::sigma_poly()
    } else {
        random_signature(rng)
    });
    let bounds = SizeBounds::uniform(&sig, 3);
    let mut frame = None;
    let text = match kind {
        0 => textio::render_signature(&sig),
        1 => {
            let sorts: Vec<Sort> = sig.sorts().cloned().collect();
            let s = sorts.choose(rng).unwrap();
            let f = random_formula(&sig, s, 4, every_feature(), rng);
            textio::render_formula(&sig, &f).unwrap()
        }
        2 => textio::render_model(&random_model_with(&sig, &bounds, rng).0),
        3 => textio::render_frame(&random_frame_with(&sig, &bounds, rng)),
        4 => textio::render_ml_model(&random_ml_model_with(&sig, &bounds, rng)),
        5 => {
            let (m, g) = random_model_with(&sig, &bounds, rng);
            let text = textio::render_assignment(m.frame(), &g);
            frame = Some(m.frame().clone());
            text
        }
        _ => textio::render_proof(&random_proof(&sig, rng)),
    };
    RandomDoc { sig, frame, text }
}

/// The `; expect: ...` line of a proof corpus file.
pub fn expectation(text: &str) -> Option<String> {
    text.lines()
        .find_map(|l| l.strip_prefix("; expect: "))
        .map(str::to_string)
}
