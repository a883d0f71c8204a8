//! Translations between hybrid models and Matching Logic models, the
//! `@`/definedness encodings and the constant-extended signature used to
//! move propositional variables and nominals into patterns.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::matching::{ml_satisfies, ml_satisfies_at, MLModel, MlError, Valuation};
use crate::semantics::{
    frame_satisfies, frame_valid, trivial_model, valid_in_model, Assignment, Env, EvalError, Frame,
    KripkeStructure, ModelError,
};
use crate::syntax::{
    is_form0, sort_of, Formula, Name, OpDecl, Signature, Sort, StateSym, SymbolKind, SyntaxError,
    SystemId,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BridgeError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("formula contains propositional variables or nominals")]
    NotForm0,
    #[error("signature of the model differs from the extended signature's base")]
    SignatureMismatch,
}

pub type BridgeResult<T> = std::result::Result<T, BridgeError>;

/// Frame and assignment of an ML model: same carriers, `R_sigma w w1..wn`
/// iff `w` is in `sigma_M(w1, ..., wn)`, and `g = rho`. Variables `rho`
/// leaves open go to the first world of their sort.
pub fn hmodl_of_ml(m: &MLModel, rho: &Valuation) -> (Frame, Assignment) {
    let mut rels = BTreeMap::new();
    for (op, table) in m.tables() {
        let mut tuples = BTreeSet::new();
        for (args, image) in table {
            for &w in image {
                let mut t = Vec::with_capacity(args.len() + 1);
                t.push(w);
                t.extend_from_slice(args);
                tuples.insert(t);
            }
        }
        rels.insert(op.clone(), tuples);
    }
    let frame = Frame::new(m.signature_arc().clone(), m.carriers().clone(), rels)
        .expect("ML model data forms a frame");
    let mut g = Assignment::first_worlds(&frame);
    for (x, &a) in rho.as_map() {
        g = g.variant(x, a);
    }
    (frame, g)
}

/// The inverse construction: `sigma_M(w1, ..., wn) = { w | R_sigma w w1..wn }`
/// and `rho = g`.
pub fn ml_of_hmodl(frame: &Frame, g: &Assignment) -> (MLModel, Valuation) {
    let mut interp: BTreeMap<Name, BTreeMap<Vec<usize>, BTreeSet<usize>>> = BTreeMap::new();
    for (op, tuples) in frame.relations() {
        let table = interp.entry(op.clone()).or_default();
        for t in tuples {
            table.entry(t[1..].to_vec()).or_default().insert(t[0]);
        }
    }
    let m = MLModel::new(
        frame.signature_arc().clone(),
        frame.worlds().clone(),
        interp,
    )
    .expect("frame data forms an ML model");
    let rho = Valuation::new(&m, g.as_map().clone()).expect("assignment fits the carriers");
    (m, rho)
}

/// Outcome of comparing a Form0 pattern under both semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropEquivReport {
    /// `(M, rho) |= phi` in Matching Logic.
    pub ml_at_rho: bool,
    /// `(F_M, rho) |= phi` in the hybrid semantics.
    pub frame_at_rho: bool,
    /// `M |= phi`, sweeping valuations.
    pub ml_global: bool,
    /// Frame validity, sweeping assignments.
    pub frame_global: bool,
    /// The extension under `rho` equals the set of worlds satisfying `phi`.
    pub pointwise: bool,
}

impl PropEquivReport {
    pub fn agrees(&self) -> bool {
        self.ml_at_rho == self.frame_at_rho && self.ml_global == self.frame_global && self.pointwise
    }
}

/// Evaluates a Form0 pattern on an ML model and on its frame.
pub fn check_prop_equiv(
    phi: &Formula,
    m: &MLModel,
    rho: &Valuation,
) -> BridgeResult<PropEquivReport> {
    if !is_form0(phi) {
        return Err(BridgeError::NotForm0);
    }
    let sys = SystemId::HybridForall;
    let (frame, g) = hmodl_of_ml(m, rho);
    let ml_global = ml_satisfies(m, phi)?;
    let frame_global = frame_valid(&frame, phi, sys)?;
    let ml_at_rho = ml_satisfies_at(m, rho, phi)?;
    let frame_at_rho = frame_satisfies(&frame, &g, phi, sys)?;
    let sort = sort_of(phi, m.signature())?;
    let pointwise = pointwise_agree(phi, &sort, m, &trivial_model(&frame), g.as_map())?;
    Ok(PropEquivReport {
        ml_at_rho,
        frame_at_rho,
        ml_global,
        frame_global,
        pointwise,
    })
}

fn pointwise_agree(
    phi: &Formula,
    sort: &Sort,
    m: &MLModel,
    km: &KripkeStructure,
    env: &BTreeMap<Name, usize>,
) -> BridgeResult<bool> {
    let (ext, _) = m.eval(&mut Env::from_map(env), phi)?;
    let mut env = Env::from_map(env);
    for w in 0..km.frame().world_count(sort) {
        if km.sat(&mut env, w, phi)? != ext.contains(w) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A disagreement found by [`prop_equiv_sweep`].
#[derive(Clone, Debug)]
pub struct EquivWitness {
    pub formula: Formula,
    pub model: MLModel,
    pub valuation: Valuation,
    pub report: PropEquivReport,
}

#[derive(Clone, Debug)]
pub struct EquivSweep {
    pub formulas: usize,
    pub models: usize,
    /// (formula, model, valuation) triples compared.
    pub checks: u64,
    pub disagreements: u64,
    pub witness: Option<EquivWitness>,
}

impl EquivSweep {
    pub fn agreement_percent(&self) -> f64 {
        if self.checks == 0 {
            return 100.0;
        }
        100.0 * (self.checks - self.disagreements) as f64 / self.checks as f64
    }
}

/// Compares both semantics on every Form0 formula of depth at most
/// `max_depth` and every ML model whose carriers have at most `max_size`
/// elements, under every valuation of the formula's free variables.
pub fn prop_equiv_sweep(
    sig: &Arc<Signature>,
    max_depth: usize,
    max_size: usize,
) -> BridgeResult<EquivSweep> {
    use crate::gen::{enumerate_formulas, enumerate_frames, Grammar};
    let formulas: Vec<Formula> = enumerate_formulas(sig, max_depth, Grammar::form0())
        .into_values()
        .flatten()
        .collect();
    let models: Vec<MLModel> = enumerate_frames(sig, max_size)
        .iter()
        .map(|f| ml_of_hmodl(f, &Assignment::first_worlds(f)).0)
        .collect();
    let prepared: Vec<(MLModel, Frame, KripkeStructure)> = models
        .into_iter()
        .map(|m| {
            let (frame, _) = hmodl_of_ml(&m, &Valuation::default());
            let km = trivial_model(&frame);
            (m, frame, km)
        })
        .collect();
    let sys = SystemId::HybridForall;
    let results: Vec<(u64, u64, Option<EquivWitness>)> = formulas
        .par_iter()
        .map(|phi| -> BridgeResult<_> {
            let sort = sort_of(phi, sig)?;
            let vars = crate::semantics::sorted_free_vars(sig, phi)?;
            let (mut checks, mut bad, mut witness) = (0u64, 0u64, None);
            for (m, frame, km) in &prepared {
                let ml_global = ml_satisfies(m, phi)?;
                let frame_global = frame_valid(frame, phi, sys)?;
                for rho in valuations(m, &vars) {
                    let mut g = Assignment::first_worlds(frame);
                    for (x, &a) in rho.as_map() {
                        g = g.variant(x, a);
                    }
                    let report = PropEquivReport {
                        ml_at_rho: ml_satisfies_at(m, &rho, phi)?,
                        frame_at_rho: frame_satisfies(frame, &g, phi, sys)?,
                        ml_global,
                        frame_global,
                        pointwise: pointwise_agree(phi, &sort, m, km, g.as_map())?,
                    };
                    checks += 1;
                    if !report.agrees() {
                        bad += 1;
                        witness.get_or_insert_with(|| EquivWitness {
                            formula: phi.clone(),
                            model: m.clone(),
                            valuation: rho.clone(),
                            report,
                        });
                    }
                }
            }
            Ok((checks, bad, witness))
        })
        .collect::<BridgeResult<_>>()?;
    let mut sweep = EquivSweep {
        formulas: formulas.len(),
        models: prepared.len(),
        checks: 0,
        disagreements: 0,
        witness: None,
    };
    for (c, b, w) in results {
        sweep.checks += c;
        sweep.disagreements += b;
        if sweep.witness.is_none() {
            sweep.witness = w;
        }
    }
    Ok(sweep)
}

/// Every valuation of `vars` in `m`.
pub fn valuations(m: &MLModel, vars: &[(Name, Sort)]) -> Vec<Valuation> {
    let mut out = vec![BTreeMap::new()];
    for (x, s) in vars {
        out = out
            .into_iter()
            .flat_map(|map: BTreeMap<Name, usize>| {
                (0..m.carrier_size(s)).map(move |a| {
                    let mut map = map.clone();
                    map.insert(x.clone(), a);
                    map
                })
            })
            .collect();
    }
    out.into_iter()
        .map(|map| Valuation::new(m, map).expect("in range"))
        .collect()
}

/// `@_z^s phi` rewritten to `ceil(z and phi)^s`, bottom-up.
pub fn encode_at(f: &Formula) -> Formula {
    match f {
        Formula::At(z, s, body) => Formula::Defined(
            s.clone(),
            Box::new(Formula::and(z.to_formula(), encode_at(body))),
        ),
        Formula::Neg(a) => Formula::neg(encode_at(a)),
        Formula::Or(a, b) => Formula::or(encode_at(a), encode_at(b)),
        Formula::App(op, args) => Formula::App(op.clone(), args.iter().map(encode_at).collect()),
        Formula::Forall(x, s, a) => Formula::Forall(x.clone(), s.clone(), Box::new(encode_at(a))),
        Formula::Defined(s, a) => Formula::Defined(s.clone(), Box::new(encode_at(a))),
        other => other.clone(),
    }
}

/// `ceil(phi)^s` rewritten to `exists x . @_x^s phi`, bottom-up, with `x`
/// the first state variable of `phi`'s sort not occurring in `phi`.
pub fn encode_definedness(sig: &Signature, f: &Formula) -> BridgeResult<Formula> {
    let go = |a: &Formula| encode_definedness(sig, a);
    Ok(match f {
        Formula::Defined(s, body) => {
            let body = go(body)?;
            let t = sort_of(&body, sig)?;
            let x = sig.fresh_svar(&t, &[&body])?;
            let at = Formula::At(StateSym::Var(x.clone()), s.clone(), Box::new(body));
            Formula::exists(&x, &t, at)
        }
        Formula::Neg(a) => Formula::neg(go(a)?),
        Formula::Or(a, b) => Formula::or(go(a)?, go(b)?),
        Formula::App(op, args) => Formula::App(
            op.clone(),
            args.iter().map(go).collect::<BridgeResult<_>>()?,
        ),
        Formula::Forall(x, s, a) => Formula::Forall(x.clone(), s.clone(), Box::new(go(a)?)),
        Formula::At(z, s, a) => Formula::At(z.clone(), s.clone(), Box::new(go(a)?)),
        other => other.clone(),
    })
}

/// The signature extended with one constant per propositional variable and
/// nominal, together with the functional constraints on the nominal
/// constants.
#[derive(Clone, Debug)]
pub struct ExtendedSignature {
    base: Arc<Signature>,
    extended: Arc<Signature>,
    prop_consts: BTreeMap<Name, Name>,
    nom_consts: BTreeMap<Name, Name>,
    gamma_prime: Vec<Formula>,
}

impl ExtendedSignature {
    pub fn new(base: Arc<Signature>) -> BridgeResult<ExtendedSignature> {
        let mut builder = base.to_builder();
        let mut taken: BTreeSet<Name> = BTreeSet::new();
        let mut fresh = |base_name: &str| -> Name {
            let mut candidate = Name::from(format!("c_{base_name}").as_str());
            let mut i = 0;
            while base.contains_name(&candidate) || taken.contains(&candidate) {
                i += 1;
                candidate = Name::from(format!("c_{base_name}_{i}").as_str());
            }
            taken.insert(candidate.clone());
            candidate
        };
        let mut prop_consts = BTreeMap::new();
        let mut nom_consts = BTreeMap::new();
        let mut const_sorts = Vec::new();
        for (p, s) in base.symbols_of(SymbolKind::Prop) {
            let c = fresh(&p);
            const_sorts.push((c.clone(), s));
            prop_consts.insert(p, c);
        }
        for (j, s) in base.symbols_of(SymbolKind::Nom) {
            let c = fresh(&j);
            const_sorts.push((c.clone(), s));
            nom_consts.insert(j, c);
        }
        for (c, s) in &const_sorts {
            builder = builder.op_decl(
                c.clone(),
                OpDecl {
                    args: Vec::new(),
                    result: s.clone(),
                },
            );
        }
        // the functional constraints bind a variable of each nominal's sort
        let mut added = BTreeSet::new();
        for (_, s) in base.symbols_of(SymbolKind::Nom) {
            if base.pool(SymbolKind::SVar, &s).is_empty() && added.insert(s.clone()) {
                let x = fresh(&format!("x_{s}"));
                builder = builder.svar(s.as_str(), &x);
            }
        }
        let extended = Arc::new(builder.build()?);
        let mut gamma_prime = Vec::new();
        for (j, c) in &nom_consts {
            let (_, s) = base.symbol(j).expect("nominal of the base signature");
            let x = extended.pool(SymbolKind::SVar, s)[0].clone();
            let eq = Formula::equals(s, Formula::Var(x.clone()), Formula::app(c, Vec::new()));
            gamma_prime.push(Formula::exists(&x, s, eq));
        }
        Ok(ExtendedSignature {
            base,
            extended,
            prop_consts,
            nom_consts,
            gamma_prime,
        })
    }

    pub fn base(&self) -> &Arc<Signature> {
        &self.base
    }

    pub fn extended(&self) -> &Arc<Signature> {
        &self.extended
    }

    pub fn prop_constant(&self, p: &str) -> Option<&Name> {
        self.prop_consts.get(p)
    }

    pub fn nom_constant(&self, j: &str) -> Option<&Name> {
        self.nom_consts.get(j)
    }

    /// `exists x . x = c_j` for every nominal `j`.
    pub fn gamma_prime(&self) -> &[Formula] {
        &self.gamma_prime
    }

    /// Rewrites `@` into definedness, then replaces every propositional
    /// variable and nominal by its constant.
    pub fn translate_formula(&self, f: &Formula) -> Formula {
        self.replace_atoms(&encode_at(f))
    }

    fn replace_atoms(&self, f: &Formula) -> Formula {
        let go = |a: &Formula| self.replace_atoms(a);
        match f {
            Formula::Prop(p) => Formula::App(self.prop_consts[p].clone(), Vec::new()),
            Formula::Nom(j) => Formula::App(self.nom_consts[j].clone(), Vec::new()),
            Formula::Neg(a) => Formula::neg(go(a)),
            Formula::Or(a, b) => Formula::or(go(a), go(b)),
            Formula::App(op, args) => Formula::App(op.clone(), args.iter().map(go).collect()),
            Formula::Forall(x, s, a) => Formula::Forall(x.clone(), s.clone(), Box::new(go(a))),
            Formula::At(z, s, a) => Formula::At(z.clone(), s.clone(), Box::new(go(a))),
            Formula::Defined(s, a) => Formula::Defined(s.clone(), Box::new(go(a))),
            other => other.clone(),
        }
    }

    /// The ML model over the extended signature induced by a hybrid model:
    /// the frame's relations plus `c_p = V(p)` and `c_j = V(j)`.
    pub fn ml_model_of(&self, m: &KripkeStructure) -> BridgeResult<MLModel> {
        if **m.frame().signature_arc() != *self.base {
            return Err(BridgeError::SignatureMismatch);
        }
        let (base_ml, _) = ml_of_hmodl(m.frame(), &Assignment::first_worlds(m.frame()));
        let mut interp = base_ml.tables().clone();
        for (sym, c) in self.prop_consts.iter().chain(&self.nom_consts) {
            interp.insert(
                c.clone(),
                BTreeMap::from([(Vec::new(), m.value(sym).clone())]),
            );
        }
        Ok(MLModel::new(
            self.extended.clone(),
            m.frame().worlds().clone(),
            interp,
        )?)
    }
}

/// Outcome of the model correspondence check for one model and formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstantsReport {
    /// Every member of the functional constraints holds in the ML model.
    pub gamma_holds: bool,
    pub hybrid_valid: bool,
    pub ml_valid: bool,
    /// `@` was rewritten into definedness before the constants were
    /// substituted.
    pub at_encoded: bool,
}

impl ConstantsReport {
    pub fn agrees(&self) -> bool {
        self.gamma_holds && self.hybrid_valid == self.ml_valid
    }
}

/// Builds the constant-interpreting ML model of `m` and compares validity of
/// `phi` in `m` with validity of its translation.
pub fn check_thm_ml2_semantic(
    ext: &ExtendedSignature,
    m: &KripkeStructure,
    phi: &Formula,
) -> BridgeResult<ConstantsReport> {
    m.ensure_standard()?;
    let ml = ext.ml_model_of(m)?;
    let mut gamma_holds = true;
    for gamma in ext.gamma_prime() {
        gamma_holds &= ml_satisfies(&ml, gamma)?;
    }
    let hybrid_valid = valid_in_model(m, phi, SystemId::HybridAtForall)?;
    let ml_valid = ml_satisfies(&ml, &ext.translate_formula(phi))?;
    Ok(ConstantsReport {
        gamma_holds,
        hybrid_valid,
        ml_valid,
        at_encoded: phi.features().at,
    })
}
