//! Matching Logic models and pattern semantics.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rand::Rng;
use thiserror::Error;

use crate::semantics::{sorted_free_vars, Env, EvalError};
use crate::syntax::{sort_of, Formula, Name, Signature, Sort, SymbolKind, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MlError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("carrier of sort `{0}` is empty")]
    EmptyCarrier(Sort),
    #[error("sort `{0}` is not declared in the signature")]
    UnknownSort(Sort),
    #[error("element `{0}` declared twice")]
    DuplicateElement(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("element `{element}` has sort `{found}`, expected `{expected}`")]
    ElementSort {
        element: String,
        expected: Sort,
        found: Sort,
    },
    #[error("`{0}` is not an operation symbol")]
    UnknownOp(String),
    #[error("`{op}` takes {expected} arguments, got {found}")]
    ArgCount {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("index {index} out of range for sort `{sort}`")]
    IndexOutOfRange { sort: Sort, index: usize },
    #[error("`{0}` is not a state variable")]
    NotAVariable(String),
    #[error("variable `{0}` has no value")]
    UnboundVariable(String),
    #[error("{0} cannot occur in a pattern")]
    NotAPattern(&'static str),
}

impl From<EvalError> for MlError {
    fn from(e: EvalError) -> MlError {
        match e {
            EvalError::Syntax(s) => MlError::Syntax(s),
            EvalError::UnboundVariable(x) => MlError::UnboundVariable(x),
            other => unreachable!("pattern evaluation raised {other}"),
        }
    }
}

pub type MlResult<T> = std::result::Result<T, MlError>;

/// Element index within its carrier.
pub type Element = usize;

/// A finite Matching Logic model. `interp[op]` maps an argument tuple to a
/// subset of the result carrier; tuples mapped to the empty set are not
/// stored, which makes the representation canonical.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MLModel {
    sig: Arc<Signature>,
    carriers: BTreeMap<Sort, Vec<Name>>,
    interp: BTreeMap<Name, BTreeMap<Vec<Element>, BTreeSet<Element>>>,
}

impl MLModel {
    pub fn new(
        sig: Arc<Signature>,
        carriers: BTreeMap<Sort, Vec<Name>>,
        interp: BTreeMap<Name, BTreeMap<Vec<Element>, BTreeSet<Element>>>,
    ) -> MlResult<MLModel> {
        let mut seen = BTreeSet::new();
        for (sort, elems) in &carriers {
            if !sig.has_sort(sort) {
                return Err(MlError::UnknownSort(sort.clone()));
            }
            for e in elems {
                if !seen.insert(e.clone()) {
                    return Err(MlError::DuplicateElement(e.to_string()));
                }
            }
        }
        for sort in sig.sorts() {
            if carriers.get(sort).is_none_or(|c| c.is_empty()) {
                return Err(MlError::EmptyCarrier(sort.clone()));
            }
        }
        let mut clean = BTreeMap::new();
        for (op, _) in sig.ops() {
            clean.insert(op.clone(), BTreeMap::new());
        }
        for (op, table) in interp {
            let decl = sig
                .op(&op)
                .ok_or_else(|| MlError::UnknownOp(op.to_string()))?;
            let entry = clean.get_mut(&op).unwrap();
            for (args, out) in table {
                if args.len() != decl.arity() {
                    return Err(MlError::ArgCount {
                        op: op.to_string(),
                        expected: decl.arity(),
                        found: args.len(),
                    });
                }
                for (&a, s) in args.iter().zip(&decl.args) {
                    if a >= carriers[s].len() {
                        return Err(MlError::IndexOutOfRange {
                            sort: s.clone(),
                            index: a,
                        });
                    }
                }
                if let Some(&b) = out.iter().find(|&&b| b >= carriers[&decl.result].len()) {
                    return Err(MlError::IndexOutOfRange {
                        sort: decl.result.clone(),
                        index: b,
                    });
                }
                if !out.is_empty() {
                    entry.insert(args, out);
                }
            }
        }
        Ok(MLModel {
            sig,
            carriers,
            interp: clean,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn signature_arc(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn carriers(&self) -> &BTreeMap<Sort, Vec<Name>> {
        &self.carriers
    }

    pub fn carrier_size(&self, sort: &Sort) -> usize {
        self.carriers.get(sort).map_or(0, Vec::len)
    }

    /// Nonempty entries of `op`'s interpretation.
    pub fn table(&self, op: &str) -> &BTreeMap<Vec<Element>, BTreeSet<Element>> {
        &self.interp[op]
    }

    pub fn tables(&self) -> &BTreeMap<Name, BTreeMap<Vec<Element>, BTreeSet<Element>>> {
        &self.interp
    }

    /// `sigma_M(a1, ..., an)`.
    pub fn apply(&self, op: &str, args: &[Element]) -> BTreeSet<Element> {
        self.interp[op].get(args).cloned().unwrap_or_default()
    }

    pub fn element(&self, name: &str) -> Option<(&Sort, Element)> {
        self.carriers
            .iter()
            .find_map(|(s, es)| es.iter().position(|e| &**e == name).map(|i| (s, i)))
    }

    pub fn element_of_sort(&self, name: &str, sort: &Sort) -> MlResult<Element> {
        match self.element(name) {
            None => Err(MlError::UnknownElement(name.to_string())),
            Some((s, e)) if s == sort => Ok(e),
            Some((s, _)) => Err(MlError::ElementSort {
                element: name.to_string(),
                expected: sort.clone(),
                found: s.clone(),
            }),
        }
    }

    pub fn full(&self, sort: &Sort) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(self.carrier_size(sort));
        b.insert_range(..);
        b
    }

    fn empty(&self, sort: &Sort) -> FixedBitSet {
        FixedBitSet::with_capacity(self.carrier_size(sort))
    }
}

/// An element valuation `rho`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Valuation(BTreeMap<Name, Element>);

impl Valuation {
    pub fn new(m: &MLModel, map: BTreeMap<Name, Element>) -> MlResult<Valuation> {
        for (x, &a) in &map {
            let sort = m
                .sig
                .sort_of_symbol(x, SymbolKind::SVar)
                .map_err(|_| MlError::NotAVariable(x.to_string()))?;
            if a >= m.carrier_size(sort) {
                return Err(MlError::IndexOutOfRange {
                    sort: sort.clone(),
                    index: a,
                });
            }
        }
        Ok(Valuation(map))
    }

    /// Every variable of the signature sent to the first element of its sort.
    pub fn first_elements(m: &MLModel) -> Valuation {
        Valuation(
            m.sig
                .symbols_of(SymbolKind::SVar)
                .into_iter()
                .map(|(x, _)| (x, 0))
                .collect(),
        )
    }

    pub fn from_names(m: &MLModel, pairs: &[(&str, &str)]) -> MlResult<Valuation> {
        let mut map = BTreeMap::new();
        for (x, e) in pairs {
            let sort = m
                .sig
                .sort_of_symbol(x, SymbolKind::SVar)
                .map_err(|_| MlError::NotAVariable(x.to_string()))?;
            map.insert(Name::from(*x), m.element_of_sort(e, sort)?);
        }
        Ok(Valuation(map))
    }

    pub fn get(&self, x: &str) -> Option<Element> {
        self.0.get(x).copied()
    }

    /// `rho[a/x]`.
    pub fn with(&self, x: &str, a: Element) -> Valuation {
        let mut r = self.clone();
        r.0.insert(Name::from(x), a);
        r
    }

    pub fn as_map(&self) -> &BTreeMap<Name, Element> {
        &self.0
    }
}

/// Pointwise extension: the union of `sigma_M(a1, ..., an)` over `ai` in `Ai`.
pub fn pointwise_extend(m: &MLModel, op: &str, sets: &[FixedBitSet]) -> MlResult<FixedBitSet> {
    let decl = m
        .sig
        .op(op)
        .ok_or_else(|| MlError::UnknownOp(op.to_string()))?;
    if sets.len() != decl.arity() {
        return Err(MlError::ArgCount {
            op: op.to_string(),
            expected: decl.arity(),
            found: sets.len(),
        });
    }
    for (set, s) in sets.iter().zip(&decl.args) {
        if set.len() != m.carrier_size(s) {
            return Err(MlError::Syntax(SyntaxError::SortMismatch {
                context: format!("argument set of `{op}`"),
                expected: s.clone(),
                found: s.clone(),
            }));
        }
    }
    Ok(m.extend_raw(op, &decl.result, sets))
}

impl MLModel {
    fn extend_raw(&self, op: &str, result: &Sort, sets: &[FixedBitSet]) -> FixedBitSet {
        let mut out = self.empty(result);
        for (args, image) in &self.interp[op] {
            if args.iter().zip(sets).all(|(&a, set)| set.contains(a)) {
                out.extend(image.iter().copied());
            }
        }
        out
    }

    /// `rho-bar`, by structural recursion; `forall` is read as `not exists not`.
    pub(crate) fn eval(&self, env: &mut Env, f: &Formula) -> MlResult<(FixedBitSet, Sort)> {
        Ok(match f {
            Formula::Top(s) => (self.full(s), s.clone()),
            Formula::Var(x) => {
                let s = self.sig.sort_of_symbol(x, SymbolKind::SVar)?.clone();
                let mut b = self.empty(&s);
                b.insert(env.lookup(x)?);
                (b, s)
            }
            Formula::Neg(a) => {
                let (mut b, s) = self.eval(env, a)?;
                b.toggle_range(..);
                (b, s)
            }
            Formula::Or(a, c) => {
                let (mut b, s) = self.eval(env, a)?;
                b.union_with(&self.eval(env, c)?.0);
                (b, s)
            }
            Formula::App(op, args) => {
                let sets = args
                    .iter()
                    .map(|a| self.eval(env, a).map(|r| r.0))
                    .collect::<MlResult<Vec<_>>>()?;
                let result = self.sig.op(op).expect("sort-checked").result.clone();
                (self.extend_raw(op, &result, &sets), result)
            }
            Formula::Forall(x, xs, body) => {
                // not (exists x . not body)
                env.push(x, 0);
                let mut acc: Option<(FixedBitSet, Sort)> = None;
                for a in 0..self.carrier_size(xs) {
                    env.set_top(a);
                    let (mut b, s) = self.eval(env, body)?;
                    b.toggle_range(..);
                    match &mut acc {
                        Some((u, _)) => u.union_with(&b),
                        None => acc = Some((b, s)),
                    }
                }
                env.pop();
                let (mut u, s) = acc.expect("carriers are nonempty");
                u.toggle_range(..);
                (u, s)
            }
            Formula::Defined(s2, body) => {
                let (b, _) = self.eval(env, body)?;
                let out = if b.is_clear() {
                    self.empty(s2)
                } else {
                    self.full(s2)
                };
                (out, s2.clone())
            }
            Formula::Prop(_) => return Err(MlError::NotAPattern("propositional variable")),
            Formula::Nom(_) => return Err(MlError::NotAPattern("nominal")),
            Formula::At(..) => return Err(MlError::NotAPattern("satisfaction operator @")),
            Formula::Hole(_) => return Err(MlError::NotAPattern("context hole")),
        })
    }
}

/// Rejects formulas outside the pattern fragment.
pub fn check_pattern(sig: &Signature, f: &Formula) -> MlResult<Sort> {
    let feats = f.features();
    if feats.props {
        return Err(MlError::NotAPattern("propositional variable"));
    }
    if feats.noms {
        return Err(MlError::NotAPattern("nominal"));
    }
    if feats.at {
        return Err(MlError::NotAPattern("satisfaction operator @"));
    }
    if feats.holes {
        return Err(MlError::NotAPattern("context hole"));
    }
    Ok(sort_of(f, sig)?)
}

/// The extension `rho-bar(f)`, a subset of the carrier of `f`'s sort.
pub fn evaluate(m: &MLModel, rho: &Valuation, f: &Formula) -> MlResult<FixedBitSet> {
    check_pattern(&m.sig, f)?;
    Ok(m.eval(&mut Env::from_map(rho.as_map()), f)?.0)
}

/// `(M, rho) |= f`: the extension is the whole carrier.
pub fn ml_satisfies_at(m: &MLModel, rho: &Valuation, f: &Formula) -> MlResult<bool> {
    let s = check_pattern(&m.sig, f)?;
    let b = m.eval(&mut Env::from_map(rho.as_map()), f)?.0;
    Ok(b.count_ones(..) == m.carrier_size(&s))
}

/// `M |= f`: the extension is the whole carrier under every valuation of the
/// free variables.
pub fn ml_satisfies(m: &MLModel, f: &Formula) -> MlResult<bool> {
    let s = check_pattern(&m.sig, f)?;
    let vars = sorted_free_vars(&m.sig, f)?;
    let n = m.carrier_size(&s);
    let sizes: BTreeMap<Sort, usize> = m
        .carriers
        .iter()
        .map(|(s, c)| (s.clone(), c.len()))
        .collect();
    let mut err = None;
    let ok = sweep(&sizes, &vars, |pairs| {
        match m.eval(&mut Env::from_pairs(pairs.to_vec()), f) {
            Ok((b, _)) => b.count_ones(..) == n,
            Err(e) => {
                err = Some(e);
                false
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(ok),
    }
}

fn sweep(
    sizes: &BTreeMap<Sort, usize>,
    vars: &[(Name, Sort)],
    mut f: impl FnMut(&[(Name, Element)]) -> bool,
) -> bool {
    let dims: Vec<usize> = vars.iter().map(|(_, s)| sizes[s]).collect();
    let mut current: Vec<(Name, Element)> = vars.iter().map(|(x, _)| (x.clone(), 0)).collect();
    loop {
        if !f(&current) {
            return false;
        }
        let mut i = 0;
        loop {
            if i == current.len() {
                return true;
            }
            current[i].1 += 1;
            if current[i].1 < dims[i] {
                break;
            }
            current[i].1 = 0;
            i += 1;
        }
    }
}

/// Extension of `a =^{s2} b`: the whole `s2` carrier iff both sides have
/// the same extension.
pub fn equality_eval(
    m: &MLModel,
    rho: &Valuation,
    a: &Formula,
    b: &Formula,
    s2: &Sort,
) -> MlResult<FixedBitSet> {
    evaluate(m, rho, &Formula::equals(s2, a.clone(), b.clone()))
}

/// Random ML model: carrier sizes uniform in `1..=bound`, each
/// `(args, element)` membership present with probability 1/2.
pub fn random_ml_model_with<R: Rng>(
    sig: &Arc<Signature>,
    bounds: &crate::semantics::SizeBounds,
    rng: &mut R,
) -> MLModel {
    let frame = crate::semantics::random_frame_with(sig, bounds, rng);
    crate::bridge::ml_of_hmodl(&frame, &crate::semantics::Assignment::first_worlds(&frame)).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn m0p() -> MLModel {
        let m = fixtures::m0();
        crate::bridge::ml_of_hmodl(m.frame(), &fixtures::g0(&m)).0
    }

    fn bits(m: &MLModel, s: &str, elems: &[usize]) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(m.carrier_size(&Sort::new(s)));
        b.extend(elems.iter().copied());
        b
    }

    #[test]
    fn pointwise() {
        let m = m0p();
        assert_eq!(m.apply("f", &[0]), BTreeSet::from([0]));
        assert!(m.apply("f", &[1]).is_empty());
        let ext = |elems: &[usize]| pointwise_extend(&m, "f", &[bits(&m, "t", elems)]).unwrap();
        assert_eq!(ext(&[]), bits(&m, "s", &[]));
        assert_eq!(ext(&[0]), bits(&m, "s", &[0]));
        assert_eq!(ext(&[0, 1]), bits(&m, "s", &[0]));
    }

    #[test]
    fn extensions() {
        let m = m0p();
        let (s, t) = (Sort::new("s"), Sort::new("t"));
        let rho = Valuation::from_names(&m, &[("x", "a"), ("u", "c")]).unwrap();
        assert_eq!(
            evaluate(&m, &rho, &Formula::var("u")).unwrap(),
            bits(&m, "t", &[0])
        );
        let ft = Formula::app("f", vec![Formula::top(&t)]);
        assert_eq!(evaluate(&m, &rho, &ft).unwrap(), bits(&m, "s", &[0]));
        assert_eq!(
            evaluate(&m, &rho, &Formula::neg(ft.clone())).unwrap(),
            bits(&m, "s", &[1])
        );
        assert_eq!(
            evaluate(&m, &rho, &Formula::defined(&t, ft)).unwrap(),
            bits(&m, "t", &[0, 1])
        );
        assert_eq!(
            evaluate(&m, &rho, &Formula::defined(&t, Formula::bot(&s))).unwrap(),
            bits(&m, "t", &[])
        );
        assert_eq!(
            evaluate(&m, &rho, &Formula::prop("p")),
            Err(MlError::NotAPattern("propositional variable"))
        );
        assert_eq!(
            evaluate(&m, &Valuation::default(), &Formula::var("x")),
            Err(MlError::UnboundVariable("x".into()))
        );
    }

    #[test]
    fn global_satisfaction() {
        let m = m0p();
        let s = Sort::new("s");
        let x = Formula::var("x");
        assert!(ml_satisfies(&m, &Formula::or(x.clone(), Formula::neg(x.clone()))).unwrap());
        assert!(!ml_satisfies(&m, &x).unwrap());
        assert!(ml_satisfies(&m, &Formula::exists("x", &s, x)).unwrap());
    }

    #[test]
    fn equality() {
        let m = m0p();
        let (s, t) = (Sort::new("s"), Sort::new("t"));
        let rho = Valuation::from_names(&m, &[("x", "a"), ("u", "c")]).unwrap();
        let ft = Formula::app("f", vec![Formula::top(&t)]);
        assert_eq!(equality_eval(&m, &rho, &ft, &ft, &t).unwrap(), m.full(&t));
        // rho(x) = a and f(T) has extension {a}
        assert_eq!(
            equality_eval(&m, &rho, &Formula::var("x"), &ft, &t).unwrap(),
            m.full(&t)
        );
        assert_eq!(
            equality_eval(&m, &rho, &Formula::top(&s), &Formula::bot(&s), &t).unwrap(),
            bits(&m, "t", &[])
        );
    }
}
