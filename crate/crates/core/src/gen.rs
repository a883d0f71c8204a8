//! Formula and frame generators: exhaustive enumeration for the brute-force
//! oracles and seeded random sampling for the property suites.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::semantics::{generated_world_name, Frame, World};
use crate::syntax::{Formula, Name, Signature, Sort, StateSym, SymbolKind, SystemId};

/// Which constructors a generator may use. `Top`, negation, disjunction and
/// operation symbols are always available.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grammar {
    pub props: bool,
    pub noms: bool,
    pub svars: bool,
    pub forall: bool,
    pub at: bool,
    pub defined: bool,
}

impl Grammar {
    /// Every formula the system admits.
    pub fn system(sys: SystemId) -> Grammar {
        let hybrid = sys != SystemId::BaseK;
        Grammar {
            props: true,
            noms: hybrid,
            svars: hybrid,
            forall: hybrid,
            at: sys == SystemId::HybridAtForall,
            defined: false,
        }
    }

    /// The fragment shared by Form0 hybrid formulas and Matching Logic
    /// patterns: state variables, `forall` and the Boolean/modal core.
    pub fn form0() -> Grammar {
        Grammar {
            props: false,
            noms: false,
            svars: true,
            forall: true,
            at: false,
            defined: false,
        }
    }
}

fn atoms(sig: &Signature, sort: &Sort, g: Grammar) -> Vec<Formula> {
    let mut out = vec![Formula::Top(sort.clone())];
    if g.props {
        out.extend(
            sig.pool(SymbolKind::Prop, sort)
                .into_iter()
                .map(Formula::Prop),
        );
    }
    if g.noms {
        out.extend(
            sig.pool(SymbolKind::Nom, sort)
                .into_iter()
                .map(Formula::Nom),
        );
    }
    if g.svars {
        out.extend(
            sig.pool(SymbolKind::SVar, sort)
                .into_iter()
                .map(Formula::Var),
        );
    }
    out
}

fn state_symbols(sig: &Signature, sort: &Sort, g: Grammar) -> Vec<StateSym> {
    let mut out = Vec::new();
    if g.noms {
        out.extend(
            sig.pool(SymbolKind::Nom, sort)
                .into_iter()
                .map(StateSym::Nom),
        );
    }
    if g.svars {
        out.extend(
            sig.pool(SymbolKind::SVar, sort)
                .into_iter()
                .map(StateSym::Var),
        );
    }
    out
}

/// All formulas of depth at most `depth`, grouped by sort.
pub fn enumerate_formulas(
    sig: &Signature,
    depth: usize,
    g: Grammar,
) -> BTreeMap<Sort, Vec<Formula>> {
    let sorts: Vec<Sort> = sig.sorts().cloned().collect();
    let mut level: BTreeMap<Sort, Vec<Formula>> = sorts
        .iter()
        .map(|s| (s.clone(), atoms(sig, s, g)))
        .collect();
    let svars = sig.symbols_of(SymbolKind::SVar);
    for _ in 0..depth {
        let prev = level;
        let mut next = BTreeMap::new();
        for s in &sorts {
            let mut out = atoms(sig, s, g);
            let here = &prev[s];
            out.extend(here.iter().map(|a| Formula::neg(a.clone())));
            for a in here {
                for b in here {
                    out.push(Formula::or(a.clone(), b.clone()));
                }
            }
            for (op, decl) in sig.ops_into(s) {
                let mut tuples: Vec<Vec<Formula>> = vec![Vec::new()];
                for arg_sort in &decl.args {
                    tuples = tuples
                        .into_iter()
                        .flat_map(|t| {
                            prev[arg_sort].iter().map(move |a| {
                                let mut t = t.clone();
                                t.push(a.clone());
                                t
                            })
                        })
                        .collect();
                }
                out.extend(
                    tuples
                        .into_iter()
                        .map(|args| Formula::App(op.clone(), args)),
                );
            }
            if g.forall {
                for (x, xs) in &svars {
                    out.extend(
                        here.iter()
                            .map(|a| Formula::Forall(x.clone(), xs.clone(), Box::new(a.clone()))),
                    );
                }
            }
            if g.at {
                for t in &sorts {
                    for z in state_symbols(sig, t, g) {
                        out.extend(
                            prev[t]
                                .iter()
                                .map(|a| Formula::At(z.clone(), s.clone(), Box::new(a.clone()))),
                        );
                    }
                }
            }
            if g.defined {
                for t in &sorts {
                    out.extend(
                        prev[t]
                            .iter()
                            .map(|a| Formula::Defined(s.clone(), Box::new(a.clone()))),
                    );
                }
            }
            next.insert(s.clone(), out);
        }
        level = next;
    }
    level
}

/// A random formula of the given sort and depth at most `depth`. Leaves are
/// chosen with probability growing as the remaining depth shrinks.
pub fn random_formula<R: Rng>(
    sig: &Signature,
    sort: &Sort,
    depth: usize,
    g: Grammar,
    rng: &mut R,
) -> Formula {
    let leaves = atoms(sig, sort, g);
    if depth == 0 || rng.random_ratio(1, depth as u32 + 2) {
        return leaves.choose(rng).unwrap().clone();
    }
    let d = depth - 1;
    let ops = sig.ops_into(sort);
    let svars = sig.symbols_of(SymbolKind::SVar);
    let sorts: Vec<Sort> = sig.sorts().cloned().collect();
    loop {
        match rng.random_range(0..7) {
            0 => return Formula::neg(random_formula(sig, sort, d, g, rng)),
            1 => {
                return Formula::or(
                    random_formula(sig, sort, d, g, rng),
                    random_formula(sig, sort, d, g, rng),
                )
            }
            2 | 3 if !ops.is_empty() => {
                let (op, decl) = ops.choose(rng).unwrap();
                let args = decl
                    .args
                    .iter()
                    .map(|a| random_formula(sig, a, d, g, rng))
                    .collect();
                return Formula::App(op.clone(), args);
            }
            4 if g.forall && !svars.is_empty() => {
                let (x, xs) = svars.choose(rng).unwrap();
                let body = random_formula(sig, sort, d, g, rng);
                return Formula::Forall(x.clone(), xs.clone(), Box::new(body));
            }
            5 if g.at => {
                let t = sorts.choose(rng).unwrap();
                if let Some(z) = state_symbols(sig, t, g).choose(rng) {
                    let body = random_formula(sig, t, d, g, rng);
                    return Formula::At(z.clone(), sort.clone(), Box::new(body));
                }
            }
            6 if g.defined => {
                let t = sorts.choose(rng).unwrap();
                let body = random_formula(sig, t, d, g, rng);
                return Formula::Defined(sort.clone(), Box::new(body));
            }
            6 if !g.defined => return leaves.choose(rng).unwrap().clone(),
            _ => {}
        }
    }
}

/// Picks a sort uniformly and draws a formula of that sort.
pub fn random_sorted_formula<R: Rng>(
    sig: &Signature,
    depth: usize,
    g: Grammar,
    rng: &mut R,
) -> Formula {
    let sorts: Vec<&Sort> = sig.sorts().collect();
    let s = (*sorts.choose(rng).unwrap()).clone();
    random_formula(sig, &s, depth, g, rng)
}

/// Independent generator for task `index` of a run seeded with `seed`.
pub fn split_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Every frame whose sorts have between 1 and `max_worlds` worlds.
pub fn enumerate_frames(sig: &Arc<Signature>, max_worlds: usize) -> Vec<Frame> {
    let sorts: Vec<Sort> = sig.sorts().cloned().collect();
    let mut shapes: Vec<BTreeMap<Sort, usize>> = vec![BTreeMap::new()];
    for s in &sorts {
        shapes = shapes
            .into_iter()
            .flat_map(|shape| {
                (1..=max_worlds).map(move |n| {
                    let mut shape = shape.clone();
                    shape.insert(s.clone(), n);
                    shape
                })
            })
            .collect();
    }
    let mut frames = Vec::new();
    for shape in shapes {
        let worlds: BTreeMap<Sort, Vec<Name>> = shape
            .iter()
            .map(|(s, &n)| {
                (
                    s.clone(),
                    (0..n).map(|i| generated_world_name(s, i)).collect(),
                )
            })
            .collect();
        // candidate tuples for every op, then every subset of each
        let mut per_op: Vec<(Name, Vec<Vec<World>>)> = Vec::new();
        for (op, decl) in sig.ops() {
            let mut tuples: Vec<Vec<World>> = vec![Vec::new()];
            for s in std::iter::once(&decl.result).chain(&decl.args) {
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        (0..shape[s]).map(move |w| {
                            let mut t = t.clone();
                            t.push(w);
                            t
                        })
                    })
                    .collect();
            }
            per_op.push((op.clone(), tuples));
        }
        let mut rel_choices: Vec<BTreeMap<Name, BTreeSet<Vec<World>>>> = vec![BTreeMap::new()];
        for (op, tuples) in &per_op {
            assert!(tuples.len() < 20, "frame enumeration too large");
            let mut next = Vec::new();
            for rels in &rel_choices {
                for mask in 0u32..(1 << tuples.len()) {
                    let set = tuples
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, t)| t.clone())
                        .collect();
                    let mut rels = rels.clone();
                    rels.insert(op.clone(), set);
                    next.push(rels);
                }
            }
            rel_choices = next;
        }
        for rels in rel_choices {
            frames.push(Frame::new(sig.clone(), worlds.clone(), rels).expect("enumerated frame"));
        }
    }
    frames
}
