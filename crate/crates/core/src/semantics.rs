//! Finite (S, Sigma)-frames and models and the satisfaction relation of the
//! three hybrid systems.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::syntax::{
    free_svars, is_form0, sort_of, Formula, Name, Signature, Sort, StateSym, SymbolKind,
    SyntaxError, SystemId,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("sort `{0}` has no worlds")]
    EmptySort(Sort),
    #[error("sort `{0}` is not declared in the signature")]
    UnknownSort(Sort),
    #[error("world `{0}` declared twice")]
    DuplicateWorld(String),
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("world `{world}` has sort `{found}`, expected `{expected}`")]
    WorldSort {
        world: String,
        expected: Sort,
        found: Sort,
    },
    #[error("`{0}` is not an operation symbol")]
    UnknownOp(String),
    #[error("relation `{op}` expects tuples of length {expected}, got {found}")]
    TupleLength {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("index {index} out of range for sort `{sort}`")]
    IndexOutOfRange { sort: Sort, index: usize },
    #[error("`{0}` is not a propositional variable or nominal")]
    NotValuated(String),
    #[error("`{0}` is not a state variable")]
    NotAVariable(String),
    #[error("assignment misses state variable `{0}`")]
    MissingVariable(String),
    #[error("nominal `{0}` is not true at exactly one world")]
    NotStandard(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{feature} is not part of system {system}")]
    FeatureNotInSystem {
        system: SystemId,
        feature: &'static str,
    },
    #[error("state variable `{0}` has no value")]
    UnboundVariable(String),
    #[error("nominal `{0}` does not denote a single world")]
    NonStandardNominal(String),
    #[error("formula contains propositional variables or nominals")]
    NotForm0,
}

pub type EvalResult<T> = std::result::Result<T, EvalError>;

/// Index of a world within its sort.
pub type World = usize;

/// An (S, Sigma)-frame: nonempty sorted world sets and one relation per
/// operation symbol. A tuple `(w, w1, ..., wn)` of `R_sigma` is stored as
/// the index vector `[w, w1, ..., wn]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    sig: Arc<Signature>,
    worlds: BTreeMap<Sort, Vec<Name>>,
    rels: BTreeMap<Name, BTreeSet<Vec<World>>>,
    // per op, per head world: argument tuples
    succ: BTreeMap<Name, Vec<Vec<Vec<World>>>>,
    names: BTreeMap<Name, (Sort, World)>,
}

impl Frame {
    pub fn new(
        sig: Arc<Signature>,
        worlds: BTreeMap<Sort, Vec<Name>>,
        mut rels: BTreeMap<Name, BTreeSet<Vec<World>>>,
    ) -> Result<Frame, ModelError> {
        let mut names = BTreeMap::new();
        for (sort, ws) in &worlds {
            if !sig.has_sort(sort) {
                return Err(ModelError::UnknownSort(sort.clone()));
            }
            for (i, w) in ws.iter().enumerate() {
                if names.insert(w.clone(), (sort.clone(), i)).is_some() {
                    return Err(ModelError::DuplicateWorld(w.to_string()));
                }
            }
        }
        for sort in sig.sorts() {
            if worlds.get(sort).is_none_or(|ws| ws.is_empty()) {
                return Err(ModelError::EmptySort(sort.clone()));
            }
        }
        for op in rels.keys() {
            if sig.op(op).is_none() {
                return Err(ModelError::UnknownOp(op.to_string()));
            }
        }
        let mut succ = BTreeMap::new();
        for (op, decl) in sig.ops() {
            let tuples = rels.entry(op.clone()).or_default();
            let head_count = worlds[&decl.result].len();
            let mut by_head = vec![Vec::new(); head_count];
            for tuple in tuples.iter() {
                if tuple.len() != decl.arity() + 1 {
                    return Err(ModelError::TupleLength {
                        op: op.to_string(),
                        expected: decl.arity() + 1,
                        found: tuple.len(),
                    });
                }
                let sorts = std::iter::once(&decl.result).chain(&decl.args);
                for (&idx, sort) in tuple.iter().zip(sorts) {
                    if idx >= worlds[sort].len() {
                        return Err(ModelError::IndexOutOfRange {
                            sort: sort.clone(),
                            index: idx,
                        });
                    }
                }
                by_head[tuple[0]].push(tuple[1..].to_vec());
            }
            succ.insert(op.clone(), by_head);
        }
        Ok(Frame {
            sig,
            worlds,
            rels,
            succ,
            names,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn signature_arc(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn worlds(&self) -> &BTreeMap<Sort, Vec<Name>> {
        &self.worlds
    }

    pub fn world_count(&self, sort: &Sort) -> usize {
        self.worlds.get(sort).map_or(0, Vec::len)
    }

    pub fn world_name(&self, sort: &Sort, w: World) -> &str {
        &self.worlds[sort][w]
    }

    /// Looks a world up by name.
    pub fn world(&self, name: &str) -> Option<(&Sort, World)> {
        self.names.get(name).map(|(s, w)| (s, *w))
    }

    pub fn relations(&self) -> &BTreeMap<Name, BTreeSet<Vec<World>>> {
        &self.rels
    }

    pub fn relation(&self, op: &str) -> &BTreeSet<Vec<World>> {
        &self.rels[op]
    }

    /// Argument tuples `(w1, ..., wn)` with `R_op w w1 ... wn`.
    pub fn successors(&self, op: &str, w: World) -> &[Vec<World>] {
        &self.succ[op][w]
    }

    /// Resolves a world name of a given sort.
    pub fn world_of_sort(&self, name: &str, sort: &Sort) -> Result<World, ModelError> {
        match self.world(name) {
            None => Err(ModelError::UnknownWorld(name.to_string())),
            Some((s, w)) if s == sort => Ok(w),
            Some((s, _)) => Err(ModelError::WorldSort {
                world: name.to_string(),
                expected: sort.clone(),
                found: s.clone(),
            }),
        }
    }
}

/// A model `(F, V)`. `V` maps every propositional variable and nominal of
/// the signature to a set of worlds of its sort.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KripkeStructure {
    frame: Frame,
    val: BTreeMap<Name, BTreeSet<World>>,
}

impl KripkeStructure {
    /// Builds a model; missing propositional variables and nominals get the
    /// empty set. Nominals need not be singletons.
    pub fn new(
        frame: Frame,
        mut val: BTreeMap<Name, BTreeSet<World>>,
    ) -> Result<KripkeStructure, ModelError> {
        let sig = frame.signature_arc().clone();
        for (name, ws) in &val {
            let sort = match sig.symbol(name) {
                Some((SymbolKind::Prop | SymbolKind::Nom, s)) => s,
                _ => return Err(ModelError::NotValuated(name.to_string())),
            };
            if let Some(&w) = ws.iter().find(|&&w| w >= frame.world_count(sort)) {
                return Err(ModelError::IndexOutOfRange {
                    sort: sort.clone(),
                    index: w,
                });
            }
        }
        for kind in [SymbolKind::Prop, SymbolKind::Nom] {
            for (name, _) in sig.symbols_of(kind) {
                val.entry(name).or_default();
            }
        }
        Ok(KripkeStructure { frame, val })
    }

    /// Builds a model and requires every nominal to be a singleton.
    pub fn standard(
        frame: Frame,
        val: BTreeMap<Name, BTreeSet<World>>,
    ) -> Result<KripkeStructure, ModelError> {
        let m = KripkeStructure::new(frame, val)?;
        m.ensure_standard()?;
        Ok(m)
    }

    pub fn ensure_standard(&self) -> Result<(), ModelError> {
        for (j, _) in self.signature().symbols_of(SymbolKind::Nom) {
            if self.val[&j].len() != 1 {
                return Err(ModelError::NotStandard(j.to_string()));
            }
        }
        Ok(())
    }

    pub fn is_standard(&self) -> bool {
        self.ensure_standard().is_ok()
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn signature(&self) -> &Signature {
        self.frame.signature()
    }

    pub fn valuation(&self) -> &BTreeMap<Name, BTreeSet<World>> {
        &self.val
    }

    pub fn value(&self, name: &str) -> &BTreeSet<World> {
        &self.val[name]
    }
}

/// A total map from the signature's state variables to worlds of their sort.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment(BTreeMap<Name, World>);

impl Assignment {
    pub fn new(frame: &Frame, map: BTreeMap<Name, World>) -> Result<Assignment, ModelError> {
        let sig = frame.signature();
        for (x, &w) in &map {
            let sort = match sig.symbol(x) {
                Some((SymbolKind::SVar, s)) => s,
                _ => return Err(ModelError::NotAVariable(x.to_string())),
            };
            if w >= frame.world_count(sort) {
                return Err(ModelError::IndexOutOfRange {
                    sort: sort.clone(),
                    index: w,
                });
            }
        }
        for (x, _) in sig.symbols_of(SymbolKind::SVar) {
            if !map.contains_key(&x) {
                return Err(ModelError::MissingVariable(x.to_string()));
            }
        }
        Ok(Assignment(map))
    }

    /// Every state variable sent to the first world of its sort.
    pub fn first_worlds(frame: &Frame) -> Assignment {
        Assignment(
            frame
                .signature()
                .symbols_of(SymbolKind::SVar)
                .into_iter()
                .map(|(x, _)| (x, 0))
                .collect(),
        )
    }

    /// Builds an assignment from `(variable, world name)` pairs; variables
    /// not listed go to the first world of their sort.
    pub fn from_names(frame: &Frame, pairs: &[(&str, &str)]) -> Result<Assignment, ModelError> {
        let mut g = Assignment::first_worlds(frame);
        for (x, w) in pairs {
            let sort = frame
                .signature()
                .sort_of_symbol(x, SymbolKind::SVar)
                .map_err(|_| ModelError::NotAVariable(x.to_string()))?;
            g.0.insert(Name::from(*x), frame.world_of_sort(w, sort)?);
        }
        Ok(g)
    }

    pub fn get(&self, x: &str) -> Option<World> {
        self.0.get(x).copied()
    }

    /// The x-variant sending `x` to `w`.
    pub fn variant(&self, x: &str, w: World) -> Assignment {
        let mut g = self.clone();
        g.0.insert(Name::from(x), w);
        g
    }

    pub fn as_map(&self) -> &BTreeMap<Name, World> {
        &self.0
    }
}

/// Variable environment used during evaluation; later bindings shadow
/// earlier ones.
pub(crate) struct Env(Vec<(Name, World)>);

impl Env {
    pub(crate) fn from_map(map: &BTreeMap<Name, World>) -> Env {
        Env(map.iter().map(|(k, v)| (k.clone(), *v)).collect())
    }

    pub(crate) fn from_pairs(pairs: Vec<(Name, World)>) -> Env {
        Env(pairs)
    }

    pub(crate) fn lookup(&self, x: &str) -> EvalResult<World> {
        self.0
            .iter()
            .rev()
            .find(|(n, _)| &**n == x)
            .map(|(_, w)| *w)
            .ok_or_else(|| EvalError::UnboundVariable(x.to_string()))
    }

    pub(crate) fn push(&mut self, x: &Name, w: World) {
        self.0.push((x.clone(), w));
    }

    pub(crate) fn pop(&mut self) {
        self.0.pop();
    }

    pub(crate) fn set_top(&mut self, w: World) {
        if let Some(last) = self.0.last_mut() {
            last.1 = w;
        }
    }
}

impl KripkeStructure {
    /// `Den_g(z)`.
    pub(crate) fn denotation(&self, env: &Env, z: &StateSym) -> EvalResult<World> {
        match z {
            StateSym::Var(x) => env.lookup(x),
            StateSym::Nom(j) => {
                let ws = &self.val[j];
                if ws.len() != 1 {
                    return Err(EvalError::NonStandardNominal(j.to_string()));
                }
                Ok(*ws.iter().next().unwrap())
            }
        }
    }

    /// Pointwise satisfaction, by structural recursion.
    pub(crate) fn sat(&self, env: &mut Env, w: World, f: &Formula) -> EvalResult<bool> {
        Ok(match f {
            Formula::Top(_) => true,
            Formula::Prop(a) | Formula::Nom(a) => self.val[a].contains(&w),
            Formula::Var(x) => env.lookup(x)? == w,
            Formula::Neg(a) => !self.sat(env, w, a)?,
            Formula::Or(a, b) => self.sat(env, w, a)? || self.sat(env, w, b)?,
            Formula::App(op, args) => {
                for tuple in self.frame.successors(op, w) {
                    let mut all = true;
                    for (&wi, arg) in tuple.iter().zip(args) {
                        if !self.sat(env, wi, arg)? {
                            all = false;
                            break;
                        }
                    }
                    if all {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Forall(x, s, body) => {
                env.push(x, 0);
                let mut all = true;
                for v in 0..self.frame.world_count(s) {
                    env.set_top(v);
                    if !self.sat(env, w, body)? {
                        all = false;
                        break;
                    }
                }
                env.pop();
                all
            }
            Formula::At(z, _, body) => {
                let v = self.denotation(env, z)?;
                self.sat(env, v, body)?
            }
            Formula::Hole(_) => {
                return Err(EvalError::FeatureNotInSystem {
                    system: SystemId::HybridAtForall,
                    feature: "context hole",
                })
            }
            Formula::Defined(..) => {
                return Err(EvalError::FeatureNotInSystem {
                    system: SystemId::HybridAtForall,
                    feature: "definedness",
                })
            }
        })
    }
}

fn check_admissible(sig: &Signature, f: &Formula, sys: SystemId) -> EvalResult<Sort> {
    if let Some(feature) = sys.missing_feature(f) {
        return Err(EvalError::FeatureNotInSystem {
            system: sys,
            feature,
        });
    }
    Ok(sort_of(f, sig)?)
}

/// `M, g, w |= phi` in system `sys`.
pub fn satisfies(
    m: &KripkeStructure,
    g: &Assignment,
    w: World,
    f: &Formula,
    sys: SystemId,
) -> EvalResult<bool> {
    let sort = check_admissible(m.signature(), f, sys)?;
    if w >= m.frame.world_count(&sort) {
        return Err(ModelError::IndexOutOfRange { sort, index: w }.into());
    }
    m.sat(&mut Env::from_map(g.as_map()), w, f)
}

/// Enumerates every assignment of `vars` (with sorts) into `frame`.
pub(crate) fn for_each_assignment(
    frame: &Frame,
    vars: &[(Name, Sort)],
    mut f: impl FnMut(&[(Name, World)]) -> EvalResult<bool>,
) -> EvalResult<bool> {
    let sizes: Vec<usize> = vars.iter().map(|(_, s)| frame.world_count(s)).collect();
    let mut current: Vec<(Name, World)> = vars.iter().map(|(x, _)| (x.clone(), 0)).collect();
    loop {
        if !f(&current)? {
            return Ok(false);
        }
        let mut i = 0;
        loop {
            if i == current.len() {
                return Ok(true);
            }
            current[i].1 += 1;
            if current[i].1 < sizes[i] {
                break;
            }
            current[i].1 = 0;
            i += 1;
        }
    }
}

pub(crate) fn sorted_free_vars(sig: &Signature, f: &Formula) -> EvalResult<Vec<(Name, Sort)>> {
    free_svars(f)
        .into_iter()
        .map(|x| {
            let s = sig.sort_of_symbol(&x, SymbolKind::SVar)?.clone();
            Ok((x, s))
        })
        .collect()
}

/// A world and an assignment of the free variables falsifying a formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub world: World,
    pub assignment: BTreeMap<Name, World>,
}

/// Searches for a world and an assignment of `f`'s free variables at which
/// `f` fails.
pub fn find_counterexample(
    m: &KripkeStructure,
    f: &Formula,
    sys: SystemId,
) -> EvalResult<Option<Counterexample>> {
    let sort = check_admissible(m.signature(), f, sys)?;
    let vars = sorted_free_vars(m.signature(), f)?;
    let mut found = None;
    for_each_assignment(&m.frame, &vars, |pairs| {
        let mut env = Env::from_pairs(pairs.to_vec());
        for w in 0..m.frame.world_count(&sort) {
            if !m.sat(&mut env, w, f)? {
                found = Some(Counterexample {
                    world: w,
                    assignment: pairs.iter().cloned().collect(),
                });
                return Ok(false);
            }
        }
        Ok(true)
    })?;
    Ok(found)
}

/// `M |= phi`: true at every world of its sort under every assignment of
/// its free state variables.
pub fn valid_in_model(m: &KripkeStructure, f: &Formula, sys: SystemId) -> EvalResult<bool> {
    Ok(find_counterexample(m, f, sys)?.is_none())
}

/// The submodel generated by a seed set.
#[derive(Clone, Debug)]
pub struct GeneratedSubmodel {
    pub model: KripkeStructure,
    /// Sorts whose closure was empty and received one fresh isolated world.
    pub padded: BTreeSet<Sort>,
    /// For each sort, the original index of each kept world.
    pub origin: BTreeMap<Sort, Vec<World>>,
}

impl GeneratedSubmodel {
    /// Index in the submodel of original world `w`, if kept.
    pub fn image(&self, sort: &Sort, w: World) -> Option<World> {
        if self.padded.contains(sort) {
            return None;
        }
        self.origin[sort].iter().position(|&o| o == w)
    }
}

/// Least substructure containing `seed` and closed under every relation
/// from the tuple head to its arguments.
pub fn generated_submodel(
    m: &KripkeStructure,
    seed: &BTreeMap<Sort, BTreeSet<World>>,
) -> Result<GeneratedSubmodel, ModelError> {
    let frame = &m.frame;
    let sig = frame.signature_arc().clone();
    let mut keep: BTreeMap<Sort, BTreeSet<World>> =
        sig.sorts().map(|s| (s.clone(), BTreeSet::new())).collect();
    let mut stack = Vec::new();
    for (sort, ws) in seed {
        for &w in ws {
            if w >= frame.world_count(sort) {
                return Err(ModelError::IndexOutOfRange {
                    sort: sort.clone(),
                    index: w,
                });
            }
            if keep
                .get_mut(sort)
                .ok_or_else(|| ModelError::UnknownSort(sort.clone()))?
                .insert(w)
            {
                stack.push((sort.clone(), w));
            }
        }
    }
    while let Some((sort, w)) = stack.pop() {
        for (op, decl) in sig.ops_into(&sort) {
            for tuple in frame.successors(&op, w) {
                for (&wi, si) in tuple.iter().zip(&decl.args) {
                    if keep.get_mut(si).unwrap().insert(wi) {
                        stack.push((si.clone(), wi));
                    }
                }
            }
        }
    }

    let mut padded = BTreeSet::new();
    let mut origin = BTreeMap::new();
    let mut worlds = BTreeMap::new();
    for (sort, kept) in &keep {
        let mut names: Vec<Name> = kept
            .iter()
            .map(|&w| frame.worlds[sort][w].clone())
            .collect();
        if names.is_empty() {
            padded.insert(sort.clone());
            let base = format!("pad_{sort}");
            let mut name = base.clone();
            let mut i = 0;
            while frame.world(&name).is_some() {
                i += 1;
                name = format!("{base}_{i}");
            }
            names.push(Name::from(name.as_str()));
        }
        origin.insert(sort.clone(), kept.iter().copied().collect::<Vec<_>>());
        worlds.insert(sort.clone(), names);
    }
    let reindex = |sort: &Sort, w: World| -> Option<World> {
        origin[sort].iter().position(|&o: &World| o == w)
    };
    let mut rels = BTreeMap::new();
    for (op, decl) in sig.ops() {
        let sorts: Vec<&Sort> = std::iter::once(&decl.result).chain(&decl.args).collect();
        let tuples: BTreeSet<Vec<World>> = frame.rels[op]
            .iter()
            .filter_map(|t| {
                t.iter()
                    .zip(&sorts)
                    .map(|(&w, s)| reindex(s, w))
                    .collect::<Option<Vec<_>>>()
            })
            .collect();
        rels.insert(op.clone(), tuples);
    }
    let sub_frame = Frame::new(sig.clone(), worlds, rels)?;
    let mut val = BTreeMap::new();
    for (name, ws) in &m.val {
        let (_, sort) = sig.symbol(name).unwrap();
        let kept = ws.iter().filter_map(|&w| reindex(sort, w)).collect();
        val.insert(name.clone(), kept);
    }
    Ok(GeneratedSubmodel {
        model: KripkeStructure::new(sub_frame, val)?,
        padded,
        origin,
    })
}

/// A model on `frame` with every propositional variable empty and every
/// nominal at the first world of its sort.
pub fn trivial_model(frame: &Frame) -> KripkeStructure {
    let val = frame
        .signature()
        .symbols_of(SymbolKind::Nom)
        .into_iter()
        .map(|(j, _)| (j, BTreeSet::from([0])))
        .collect();
    KripkeStructure::new(frame.clone(), val).expect("trivial valuation is well-formed")
}

/// `(F, g) |= phi` for Form0 `phi`: true at every world of its sort.
pub fn frame_satisfies(
    frame: &Frame,
    g: &Assignment,
    f: &Formula,
    sys: SystemId,
) -> EvalResult<bool> {
    if !is_form0(f) {
        return Err(EvalError::NotForm0);
    }
    let m = trivial_model(frame);
    let sort = check_admissible(frame.signature(), f, sys)?;
    let mut env = Env::from_map(g.as_map());
    for w in 0..frame.world_count(&sort) {
        if !m.sat(&mut env, w, f)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Form0 validity on a frame, sweeping every assignment of the free variables.
pub fn frame_valid(frame: &Frame, f: &Formula, sys: SystemId) -> EvalResult<bool> {
    if !is_form0(f) {
        return Err(EvalError::NotForm0);
    }
    valid_in_model(&trivial_model(frame), f, sys)
}

/// Per-sort upper bounds on the number of worlds of a random model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SizeBounds(pub BTreeMap<Sort, usize>);

impl SizeBounds {
    pub fn uniform(sig: &Signature, n: usize) -> SizeBounds {
        SizeBounds(sig.sorts().map(|s| (s.clone(), n.max(1))).collect())
    }

    pub fn get(&self, s: &Sort) -> usize {
        self.0.get(s).copied().unwrap_or(1).max(1)
    }
}

/// World names used by generated models: `<sort>_<index>`.
pub fn generated_world_name(sort: &Sort, i: usize) -> Name {
    Name::from(format!("{sort}_{i}").as_str())
}

/// Deterministic random standard model and assignment.
pub fn random_model(
    sig: &Arc<Signature>,
    bounds: &SizeBounds,
    seed: u64,
) -> (KripkeStructure, Assignment) {
    random_model_with(sig, bounds, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Random frame: world counts uniform in `1..=bound`, every candidate tuple
/// present with probability 1/2.
pub fn random_frame_with<R: Rng>(sig: &Arc<Signature>, bounds: &SizeBounds, rng: &mut R) -> Frame {
    let worlds: BTreeMap<Sort, Vec<Name>> = sig
        .sorts()
        .map(|s| {
            let n = rng.random_range(1..=bounds.get(s));
            (
                s.clone(),
                (0..n).map(|i| generated_world_name(s, i)).collect(),
            )
        })
        .collect();
    let mut rels = BTreeMap::new();
    for (op, decl) in sig.ops() {
        let dims: Vec<usize> = std::iter::once(&decl.result)
            .chain(&decl.args)
            .map(|s| worlds[s].len())
            .collect();
        let mut tuples = BTreeSet::new();
        let mut current = vec![0; dims.len()];
        'outer: loop {
            if rng.random_bool(0.5) {
                tuples.insert(current.clone());
            }
            for i in (0..dims.len()).rev() {
                current[i] += 1;
                if current[i] < dims[i] {
                    continue 'outer;
                }
                current[i] = 0;
            }
            break;
        }
        rels.insert(op.clone(), tuples);
    }
    Frame::new(sig.clone(), worlds, rels).expect("random frame is well-formed")
}

pub fn random_model_with<R: Rng>(
    sig: &Arc<Signature>,
    bounds: &SizeBounds,
    rng: &mut R,
) -> (KripkeStructure, Assignment) {
    let frame = random_frame_with(sig, bounds, rng);
    let mut val = BTreeMap::new();
    for (p, s) in sig.symbols_of(SymbolKind::Prop) {
        let set = (0..frame.world_count(&s))
            .filter(|_| rng.random_bool(0.5))
            .collect();
        val.insert(p, set);
    }
    for (j, s) in sig.symbols_of(SymbolKind::Nom) {
        val.insert(
            j,
            BTreeSet::from([rng.random_range(0..frame.world_count(&s))]),
        );
    }
    let g = random_assignment_with(&frame, rng);
    let m = KripkeStructure::standard(frame, val).expect("random model is standard");
    (m, g)
}

pub fn random_assignment_with<R: Rng>(frame: &Frame, rng: &mut R) -> Assignment {
    Assignment(
        frame
            .signature()
            .symbols_of(SymbolKind::SVar)
            .into_iter()
            .map(|(x, s)| (x, rng.random_range(0..frame.world_count(&s))))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn s() -> Sort {
        Sort::new("s")
    }
    fn t() -> Sort {
        Sort::new("t")
    }
    const H: SystemId = SystemId::HybridAtForall;

    #[test]
    fn m0_satisfaction() {
        let m = fixtures::m0();
        let g = fixtures::g0(&m);
        let (a, b) = (0, 1);
        assert!(satisfies(&m, &g, a, &Formula::prop("p"), H).unwrap());
        let fu = Formula::app("f", vec![Formula::var("u")]);
        assert!(satisfies(&m, &g, a, &fu, H).unwrap());
        let ft = Formula::app("f", vec![Formula::top(&t())]);
        assert!(!satisfies(&m, &g, b, &ft, H).unwrap());
        let name = Formula::exists("x", &s(), Formula::var("x"));
        for w in [a, b] {
            assert!(satisfies(&m, &g, w, &name, H).unwrap());
        }
        let at_x = Formula::at(StateSym::Var("x".into()), &s(), Formula::prop("p"));
        assert!(satisfies(&m, &g, a, &at_x, H).unwrap());
        let at_j = Formula::at(StateSym::Nom("j".into()), &s(), Formula::prop("p"));
        assert!(!satisfies(&m, &g, a, &at_j, H).unwrap());
    }

    #[test]
    fn system_and_sort_errors() {
        let m = fixtures::m0();
        let g = fixtures::g0(&m);
        let at_x = Formula::at(StateSym::Var("x".into()), &s(), Formula::prop("p"));
        assert!(matches!(
            satisfies(&m, &g, 0, &at_x, SystemId::HybridForall),
            Err(EvalError::FeatureNotInSystem { .. })
        ));
        assert!(matches!(
            satisfies(&m, &g, 5, &Formula::prop("p"), H),
            Err(EvalError::Model(ModelError::IndexOutOfRange { .. }))
        ));
    }

    #[test]
    fn m0_validity() {
        let m = fixtures::m0();
        let p = Formula::prop("p");
        assert!(valid_in_model(&m, &Formula::or(p.clone(), Formula::neg(p.clone())), H).unwrap());
        let refl = Formula::at(StateSym::Var("x".into()), &s(), Formula::var("x"));
        assert!(valid_in_model(&m, &refl, H).unwrap());
        let ce = find_counterexample(&m, &p, H).unwrap().unwrap();
        assert_eq!(ce.world, 1);
    }

    #[test]
    fn generated_submodels() {
        let m = fixtures::m0();
        let seed = BTreeMap::from([(s(), BTreeSet::from([0]))]);
        let sub = generated_submodel(&m, &seed).unwrap();
        assert_eq!(sub.model.frame().worlds()[&s()], vec![Name::from("a")]);
        assert_eq!(sub.model.frame().worlds()[&t()], vec![Name::from("c")]);
        assert!(sub.padded.is_empty());
        assert_eq!(sub.model.frame().relation("f").len(), 1);

        let all = BTreeMap::from([(s(), BTreeSet::from([0, 1])), (t(), BTreeSet::from([0, 1]))]);
        let whole = generated_submodel(&m, &all).unwrap();
        assert_eq!(whole.model, m);

        let seed_b = BTreeMap::from([(s(), BTreeSet::from([1]))]);
        let sub_b = generated_submodel(&m, &seed_b).unwrap();
        assert_eq!(sub_b.model.frame().worlds()[&s()], vec![Name::from("b")]);
        assert_eq!(sub_b.padded, BTreeSet::from([t()]));
        assert_eq!(sub_b.model.frame().world_count(&t()), 1);
        // b survives, so j keeps its world; p's world a is gone
        assert!(sub_b.model.is_standard());
        assert!(sub_b.model.value("p").is_empty());
    }

    #[test]
    fn form0_frames() {
        let m = fixtures::m0();
        let g = fixtures::g0(&m);
        let name = Formula::exists("x", &s(), Formula::var("x"));
        assert!(frame_satisfies(m.frame(), &g, &name, H).unwrap());
        assert_eq!(
            frame_satisfies(m.frame(), &g, &Formula::prop("p"), H),
            Err(EvalError::NotForm0)
        );
        // the valuation is irrelevant for Form0 formulas
        let taut = Formula::or(Formula::var("x"), Formula::neg(Formula::var("x")));
        assert!(frame_valid(m.frame(), &taut, H).unwrap());
        assert!(!frame_valid(m.frame(), &Formula::var("x"), H).unwrap());
    }

    #[test]
    fn random_models_are_deterministic_and_standard() {
        let sig = Arc::new(fixtures::sigma1());
        let bounds = SizeBounds::uniform(&sig, 4);
        assert_eq!(
            random_model(&sig, &bounds, 7),
            random_model(&sig, &bounds, 7)
        );
        let one = SizeBounds::uniform(&sig, 1);
        let (m, _) = random_model(&sig, &one, 3);
        assert!(m.frame().worlds().values().all(|ws| ws.len() == 1));
        for seed in 0..1000 {
            let (m, g) = random_model(&sig, &bounds, seed);
            assert!(m.is_standard());
            // rebuilding through the validating constructors succeeds
            let f2 = Frame::new(
                sig.clone(),
                m.frame().worlds().clone(),
                m.frame().relations().clone(),
            )
            .unwrap();
            KripkeStructure::standard(f2.clone(), m.valuation().clone()).unwrap();
            Assignment::new(&f2, g.as_map().clone()).unwrap();
            assert!(m
                .frame()
                .worlds()
                .values()
                .all(|ws| (1..=4).contains(&ws.len())));
        }
    }

    #[test]
    fn frame_validation() {
        let sig = Arc::new(fixtures::sigma0());
        let worlds = BTreeMap::from([(s(), vec![Name::from("a")])]);
        assert_eq!(
            Frame::new(sig.clone(), worlds, BTreeMap::new()),
            Err(ModelError::EmptySort(t()))
        );
        let worlds = BTreeMap::from([(s(), vec![Name::from("a")]), (t(), vec![Name::from("a")])]);
        assert!(matches!(
            Frame::new(sig.clone(), worlds, BTreeMap::new()),
            Err(ModelError::DuplicateWorld(_))
        ));
        let worlds = BTreeMap::from([(s(), vec![Name::from("a")]), (t(), vec![Name::from("c")])]);
        let rels = BTreeMap::from([(Name::from("f"), BTreeSet::from([vec![0]]))]);
        assert!(matches!(
            Frame::new(sig.clone(), worlds.clone(), rels),
            Err(ModelError::TupleLength { .. })
        ));
        let frame = Frame::new(sig, worlds, BTreeMap::new()).unwrap();
        assert_eq!(
            KripkeStructure::standard(frame, BTreeMap::new()),
            Err(ModelError::NotStandard("j".into()))
        );
    }
}
