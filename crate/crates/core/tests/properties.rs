//! Property tests for the invariants of every module. Each case draws a
//! seed and derives models, formulas and assignments from it.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use hyml::bridge::{hmodl_of_ml, ml_of_hmodl, ExtendedSignature};
use hyml::fixtures;
use hyml::gen::{random_formula, random_sorted_formula, split_rng, Grammar};
use hyml::matching::{evaluate, ml_satisfies, random_ml_model_with, MLModel, Valuation};
use hyml::proof::check_proof;
use hyml::semantics::{
    generated_submodel, random_assignment_with, random_model_with, satisfies, valid_in_model,
    KripkeStructure, SizeBounds,
};
use hyml::soundness::random_context;
use hyml::syntax::{
    free_svars, is_substitutable, sort_of, substitute, univ_mod, Formula, NomContext, Signature,
    Sort, StateSym, SymbolKind, SystemId,
};
use hyml::textio;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const SYS: SystemId = SystemId::HybridAtForall;

fn full() -> Grammar {
    Grammar::system(SYS)
}

fn sig() -> Arc<Signature> {
    Arc::new(fixtures::sigma_poly())
}

fn setup(seed: u64, worlds: usize) -> (Arc<Signature>, KripkeStructure, ChaCha8Rng) {
    let sig = sig();
    let mut rng = split_rng(seed, 0);
    let (m, _) = random_model_with(&sig, &SizeBounds::uniform(&sig, worlds), &mut rng);
    (sig, m, rng)
}

fn sorts(sig: &Signature) -> Vec<Sort> {
    sig.sorts().cloned().collect()
}

fn sat(m: &KripkeStructure, g: &hyml::semantics::Assignment, w: usize, f: &Formula) -> bool {
    satisfies(m, g, w, f, SYS).unwrap()
}

fn worlds_of(m: &KripkeStructure, f: &Formula) -> std::ops::Range<usize> {
    0..m.frame().world_count(&sort_of(f, m.signature()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn substitution_keeps_sorts_and_identity(seed in any::<u64>()) {
        let sig = sig();
        let mut rng = split_rng(seed, 0);
        let f = random_sorted_formula(&sig, 4, full(), &mut rng);
        let (x, xs) = sig.symbols_of(SymbolKind::SVar).choose(&mut rng).unwrap().clone();
        prop_assert_eq!(substitute(&sig, &f, &x, &StateSym::Var(x.clone())).unwrap(), f.clone());
        let Some(j) = sig.pool(SymbolKind::Nom, &xs).first().cloned() else {
            return Ok(());
        };
        let g = substitute(&sig, &f, &x, &StateSym::Nom(j)).unwrap();
        prop_assert_eq!(sort_of(&g, &sig).unwrap(), sort_of(&f, &sig).unwrap());
        let mut expected = free_svars(&f);
        expected.remove(&x);
        prop_assert_eq!(free_svars(&g), expected);
    }

    #[test]
    fn agreement(seed in any::<u64>()) {
        let (sig, m, mut rng) = setup(seed, 3);
        let f = random_sorted_formula(&sig, 4, full(), &mut rng);
        let g = random_assignment_with(m.frame(), &mut rng);
        let mut h = random_assignment_with(m.frame(), &mut rng);
        for x in free_svars(&f) {
            h = h.variant(&x, g.get(&x).unwrap());
        }
        for w in worlds_of(&m, &f) {
            prop_assert_eq!(sat(&m, &g, w, &f), sat(&m, &h, w, &f));
        }
    }

    #[test]
    fn substitution_lemma(seed in any::<u64>()) {
        let (sig, m, mut rng) = setup(seed, 3);
        let f = random_sorted_formula(&sig, 4, full(), &mut rng);
        let g = random_assignment_with(m.frame(), &mut rng);
        let (x, xs) = sig.symbols_of(SymbolKind::SVar).choose(&mut rng).unwrap().clone();
        let mut zs: Vec<StateSym> = sig.pool(SymbolKind::SVar, &xs).into_iter().map(StateSym::Var).collect();
        zs.extend(sig.pool(SymbolKind::Nom, &xs).into_iter().map(StateSym::Nom));
        for z in zs {
            if !is_substitutable(&f, &x, &z) {
                continue;
            }
            let target = match &z {
                StateSym::Var(y) => g.get(y).unwrap(),
                StateSym::Nom(j) => *m.value(j).iter().next().unwrap(),
            };
            let fz = substitute(&sig, &f, &x, &z).unwrap();
            let gx = g.variant(&x, target);
            for w in worlds_of(&m, &f) {
                prop_assert_eq!(sat(&m, &g, w, &fz), sat(&m, &gx, w, &f), "{} {}", f, z);
            }
        }
    }

    #[test]
    fn boxes_quantifiers_and_at(seed in any::<u64>()) {
        let (sig, m, mut rng) = setup(seed, 3);
        let g = random_assignment_with(m.frame(), &mut rng);
        let ops: Vec<_> = sig.ops().map(|(n, d)| (n.clone(), d.clone())).collect();
        let (op, decl) = ops.choose(&mut rng).unwrap().clone();
        let args: Vec<Formula> = decl.args.iter().map(|s| random_formula(&sig, s, 3, full(), &mut rng)).collect();
        let boxed = Formula::dual_app(&op, args.clone());
        for w in 0..m.frame().world_count(&decl.result) {
            let expected = m.frame().successors(&op, w).iter().all(|tuple| {
                tuple.iter().zip(&args).any(|(&v, a)| sat(&m, &g, v, a))
            });
            prop_assert_eq!(sat(&m, &g, w, &boxed), expected);
        }

        let f = random_sorted_formula(&sig, 3, full(), &mut rng);
        let (x, xs) = sig.symbols_of(SymbolKind::SVar).choose(&mut rng).unwrap().clone();
        let ex = Formula::exists(&x, &xs, f.clone());
        for w in worlds_of(&m, &f) {
            let expected = (0..m.frame().world_count(&xs)).any(|a| sat(&m, &g.variant(&x, a), w, &f));
            prop_assert_eq!(sat(&m, &g, w, &ex), expected);
        }

        let s = sort_of(&f, &sig).unwrap();
        let t = sorts(&sig).choose(&mut rng).unwrap().clone();
        let z = StateSym::Var(x.clone());
        if xs == s {
            let at = Formula::at(z.clone(), &t, f.clone());
            let at_neg = Formula::at(z, &t, Formula::neg(f.clone()));
            let target = g.get(&x).unwrap();
            for w in worlds_of(&m, &at) {
                prop_assert_eq!(sat(&m, &g, w, &at), !sat(&m, &g, w, &at_neg));
                prop_assert_eq!(sat(&m, &g, w, &at), sat(&m, &g, target, &f));
            }
        }
    }

    #[test]
    fn at_ignores_the_current_world(seed in any::<u64>()) {
        let (sig, m, mut rng) = setup(seed, 4);
        let g = random_assignment_with(m.frame(), &mut rng);
        let s = sorts(&sig).choose(&mut rng).unwrap().clone();
        let f = random_formula(&sig, &s, 4, full(), &mut rng);
        let mut zs: Vec<StateSym> = sig.pool(SymbolKind::Nom, &s).into_iter().map(StateSym::Nom).collect();
        zs.extend(sig.pool(SymbolKind::SVar, &s).into_iter().map(StateSym::Var));
        for t in sorts(&sig) {
            for z in &zs {
                let at = Formula::at(z.clone(), &t, f.clone());
                let first = sat(&m, &g, 0, &at);
                for w in worlds_of(&m, &at) {
                    prop_assert_eq!(sat(&m, &g, w, &at), first);
                }
            }
        }
    }

    #[test]
    fn contexts_only_see_the_generated_submodel(seed in any::<u64>()) {
        let (sig, m, mut rng) = setup(seed, 3);
        let g = random_assignment_with(m.frame(), &mut rng);
        let hole = sorts(&sig).choose(&mut rng).unwrap().clone();
        let eta = NomContext::new(&sig, random_context(&sig, &hole, 3, &mut rng)).unwrap();
        let phi = random_formula(&sig, &hole, 3, full(), &mut rng);
        let applied = eta.apply(&sig, &phi).unwrap();
        let boxed = eta.apply_dual(&sig, &phi).unwrap();
        for w in 0..m.frame().world_count(eta.sort()) {
            let seed_set = BTreeMap::from([(eta.sort().clone(), BTreeSet::from([w]))]);
            let sub = generated_submodel(&m, &seed_set).unwrap();
            let reach: Vec<usize> = if sub.padded.contains(&hole) { vec![] } else { sub.origin[&hole].clone() };
            let some = reach.iter().any(|&v| sat(&m, &g, v, &phi));
            let every = reach.iter().all(|&v| sat(&m, &g, v, &phi));
            if sat(&m, &g, w, &applied) {
                prop_assert!(some);
            }
            if every {
                prop_assert!(sat(&m, &g, w, &boxed));
            }
        }
    }

    #[test]
    fn reachable_worlds_have_a_context(seed in any::<u64>()) {
        let (sig, m, mut rng) = setup(seed, 3);
        let g = random_assignment_with(m.frame(), &mut rng);
        let start = sorts(&sig).choose(&mut rng).unwrap().clone();
        let hole = sorts(&sig).choose(&mut rng).unwrap().clone();
        let phi = random_formula(&sig, &hole, 3, full(), &mut rng);
        for w in 0..m.frame().world_count(&start) {
            for v in 0..m.frame().world_count(&hole) {
                if !sat(&m, &g, v, &phi) {
                    continue;
                }
                let Some(body) = path_context(m.frame(), (&start, w), (&hole, v)) else {
                    continue;
                };
                let eta = NomContext::new(&sig, body).unwrap();
                prop_assert!(sat(&m, &g, w, &eta.apply(&sig, &phi).unwrap()));
            }
        }
    }

    #[test]
    fn universal_modality(seed in any::<u64>()) {
        let (sig, m, mut rng) = setup(seed, 3);
        let gamma: Vec<Formula> = (0..rng.random_range(1..4))
            .map(|_| random_sorted_formula(&sig, 2, full(), &mut rng))
            .collect();
        for s in sorts(&sig) {
            let gamma: Vec<&Formula> = gamma.iter().filter(|f| univ_mod(&sig, &s, (*f).clone()).is_ok()).collect();
            for f in &gamma {
                let a = univ_mod(&sig, &s, (*f).clone()).unwrap();
                prop_assert_eq!(valid_in_model(&m, &a, SYS).unwrap(), valid_in_model(&m, f, SYS).unwrap());
            }
            let all = gamma.iter().all(|f| valid_in_model(&m, f, SYS).unwrap());
            let boxed = gamma.iter().all(|f| valid_in_model(&m, &univ_mod(&sig, &s, (*f).clone()).unwrap(), SYS).unwrap());
            prop_assert_eq!(all, boxed);
        }
    }

    #[test]
    fn ml_evaluation_matches_the_set_oracle(seed in any::<u64>()) {
        let sig = sig();
        let mut rng = split_rng(seed, 1);
        let m = random_ml_model_with(&sig, &SizeBounds::uniform(&sig, 3), &mut rng);
        let g = Grammar { defined: true, ..Grammar::form0() };
        let f = random_sorted_formula(&sig, 4, g, &mut rng);
        let rho = Valuation::new(&m, random_valuation(&m, &mut rng)).unwrap();
        let ext: BTreeSet<usize> = evaluate(&m, &rho, &f).unwrap().ones().collect();
        prop_assert_eq!(ext, common::oracle_extension(&m, rho.as_map(), &f));

        // only free variables matter
        let mut other = random_valuation(&m, &mut rng);
        for x in free_svars(&f) {
            other.insert(x.clone(), rho.get(&x).unwrap());
        }
        let other = Valuation::new(&m, other).unwrap();
        prop_assert_eq!(evaluate(&m, &rho, &f).unwrap(), evaluate(&m, &other, &f).unwrap());

        // totality is full exactly when the body is full
        let s = sort_of(&f, &sig).unwrap();
        for t in sorts(&sig) {
            let total = evaluate(&m, &rho, &Formula::total(&t, f.clone())).unwrap();
            let body_full = evaluate(&m, &rho, &f).unwrap().count_ones(..) == m.carrier_size(&s);
            prop_assert_eq!(total.count_ones(..) == m.carrier_size(&t), body_full);
        }
    }

    #[test]
    fn functional_constants(seed in any::<u64>()) {
        let sig = sig();
        let ext = ExtendedSignature::new(sig.clone()).unwrap();
        let mut rng = split_rng(seed, 2);
        let m = random_ml_model_with(ext.extended(), &SizeBounds::uniform(ext.extended(), 3), &mut rng);
        for (j, _) in sig.symbols_of(SymbolKind::Nom) {
            let c = ext.nom_constant(&j).unwrap();
            let gamma = ext.gamma_prime().iter().find(|g| g.mentions(c)).unwrap();
            prop_assert_eq!(ml_satisfies(&m, gamma).unwrap(), m.apply(c, &[]).len() == 1);
        }
        // the plain constant of the base signature
        let u = Formula::var("u");
        let t = Sort::new("t");
        let functional = Formula::exists("u", &t, Formula::equals(&t, u, Formula::app("c", vec![])));
        prop_assert_eq!(ml_satisfies(&m, &functional).unwrap(), m.apply("c", &[]).len() == 1);
    }

    #[test]
    fn model_maps_are_inverse(seed in any::<u64>()) {
        let sig = sig();
        let mut rng = split_rng(seed, 3);
        let bounds = SizeBounds::uniform(&sig, 3);
        let (km, g) = random_model_with(&sig, &bounds, &mut rng);
        let (ml, rho) = ml_of_hmodl(km.frame(), &g);
        let (frame, g2) = hmodl_of_ml(&ml, &rho);
        prop_assert_eq!(&frame, km.frame());
        prop_assert_eq!(&g2, &g);
        let ml2 = random_ml_model_with(&sig, &bounds, &mut rng);
        let rho2 = Valuation::new(&ml2, random_valuation(&ml2, &mut rng)).unwrap();
        let (f2, h2) = hmodl_of_ml(&ml2, &rho2);
        let (back, rho_back) = ml_of_hmodl(&f2, &h2);
        prop_assert_eq!(back, ml2);
        prop_assert_eq!(rho_back, rho2);
    }

    #[test]
    fn translation_keeps_sorts_and_free_variables(seed in any::<u64>()) {
        let sig = sig();
        let ext = ExtendedSignature::new(sig.clone()).unwrap();
        let mut rng = split_rng(seed, 4);
        let f = random_sorted_formula(&sig, 4, full(), &mut rng);
        let t = ext.translate_formula(&f);
        prop_assert_eq!(sort_of(&t, ext.extended()).unwrap(), sort_of(&f, &sig).unwrap());
        prop_assert_eq!(free_svars(&t), free_svars(&f));
    }

    #[test]
    fn text_round_trip(seed in any::<u64>()) {
        let mut rng = split_rng(seed, 5);
        let doc = common::random_document(&mut rng);
        let ctx = textio::ParseContext { sig: Some(&doc.sig), frame: doc.frame.as_ref() };
        let parsed = textio::parse_document(&doc.text, ctx).unwrap();
        prop_assert_eq!(textio::render_document(&parsed), doc.text);
    }

    #[test]
    fn proof_checking_is_deterministic(seed in any::<u64>()) {
        let sig = sig();
        let mut rng = split_rng(seed, 6);
        let doc = loop {
            let d = common::random_document(&mut rng);
            if d.text.starts_with("(proof") {
                break d;
            }
        };
        let script = textio::parse_proof(&sig, &doc.text).unwrap();
        prop_assert_eq!(check_proof(&script, &sig), check_proof(&script, &sig));
    }
}

fn random_valuation<R: Rng>(m: &MLModel, rng: &mut R) -> BTreeMap<hyml::syntax::Name, usize> {
    m.signature()
        .symbols_of(SymbolKind::SVar)
        .into_iter()
        .map(|(x, s)| (x, rng.random_range(0..m.carrier_size(&s))))
        .collect()
}

/// A single-hole context that follows one relation path from `from` to
/// `to`, with `top` in every side argument. `None` if `to` is unreachable.
fn path_context(
    frame: &hyml::semantics::Frame,
    from: (&Sort, usize),
    to: (&Sort, usize),
) -> Option<Formula> {
    use std::collections::VecDeque;
    type Node = (Sort, usize);
    let sig = frame.signature();
    let start: Node = (from.0.clone(), from.1);
    let mut parent: BTreeMap<Node, Option<(Node, hyml::syntax::Name, usize)>> =
        BTreeMap::from([(start.clone(), None)]);
    let mut queue = VecDeque::from([start]);
    while let Some((s, u)) = queue.pop_front() {
        for (op, decl) in sig.ops_into(&s) {
            for tuple in frame.successors(&op, u) {
                for (i, &v) in tuple.iter().enumerate() {
                    let next = (decl.args[i].clone(), v);
                    if !parent.contains_key(&next) {
                        parent.insert(next.clone(), Some(((s.clone(), u), op.clone(), i)));
                        queue.push_back(next);
                    }
                }
            }
        }
    }
    let mut node: Node = (to.0.clone(), to.1);
    parent.get(&node)?;
    let mut body = Formula::Hole(to.0.clone());
    while let Some(Some((prev, op, i))) = parent.get(&node).cloned() {
        let decl = sig.op(&op).unwrap();
        let args = decl
            .args
            .iter()
            .enumerate()
            .map(|(k, s)| {
                if k == i {
                    body.clone()
                } else {
                    Formula::top(s)
                }
            })
            .collect();
        body = Formula::app(&op, args);
        node = prev;
    }
    Some(body)
}
