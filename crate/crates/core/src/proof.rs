//! Hilbert-style proof checking for the three deductive systems.
//!
//! A script is a list of numbered steps. Every axiom step names its scheme
//! and binds each metavariable explicitly; the checker rebuilds the instance
//! and compares it with the step's formula. Rule steps cite earlier steps.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::syntax::{
    free_svars, is_substitutable, sort_of, substitute, Formula, Name, NomContext, Signature, Sort,
    StateSym, SymbolKind, SyntaxError, SystemId,
};

/// Axiom schemes of the three systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AxiomScheme {
    K,
    Dual,
    Q1,
    Q2,
    Name,
    Barcan,
    Nom,
    KAt,
    SelfDual,
    Back,
    Agree,
    Intro,
    Ref,
    BarcanAt,
    NomX,
}

/// Deduction rules of the three systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    Mp,
    Ug,
    Gen,
    GenAt,
    Broadcast,
    Paste0,
    Paste1,
}

/// What a metavariable of a scheme ranges over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetaKind {
    Formula,
    /// A formula built from one hole symbol, `T` and operation symbols.
    Context,
    /// Operation arguments; schemes acting on one position mark it with a hole.
    Args,
    Op,
    Var,
    /// A nominal or a state variable.
    State,
    Sort,
}

impl AxiomScheme {
    pub const ALL: [AxiomScheme; 15] = [
        AxiomScheme::K,
        AxiomScheme::Dual,
        AxiomScheme::Q1,
        AxiomScheme::Q2,
        AxiomScheme::Name,
        AxiomScheme::Barcan,
        AxiomScheme::Nom,
        AxiomScheme::KAt,
        AxiomScheme::SelfDual,
        AxiomScheme::Back,
        AxiomScheme::Agree,
        AxiomScheme::Intro,
        AxiomScheme::Ref,
        AxiomScheme::BarcanAt,
        AxiomScheme::NomX,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AxiomScheme::K => "k",
            AxiomScheme::Dual => "dual",
            AxiomScheme::Q1 => "q1",
            AxiomScheme::Q2 => "q2",
            AxiomScheme::Name => "name",
            AxiomScheme::Barcan => "barcan",
            AxiomScheme::Nom => "nom",
            AxiomScheme::KAt => "k-at",
            AxiomScheme::SelfDual => "self-dual",
            AxiomScheme::Back => "back",
            AxiomScheme::Agree => "agree",
            AxiomScheme::Intro => "intro",
            AxiomScheme::Ref => "ref",
            AxiomScheme::BarcanAt => "barcan-at",
            AxiomScheme::NomX => "nom-x",
        }
    }

    pub fn parse(s: &str) -> Option<AxiomScheme> {
        AxiomScheme::ALL.into_iter().find(|a| a.as_str() == s)
    }

    /// The least system containing the scheme.
    pub fn system(self) -> SystemId {
        use AxiomScheme::*;
        match self {
            K | Dual => SystemId::BaseK,
            Q1 | Q2 | Name | Barcan | Nom => SystemId::HybridForall,
            _ => SystemId::HybridAtForall,
        }
    }

    pub fn metavars(self) -> &'static [(&'static str, MetaKind)] {
        use AxiomScheme::*;
        use MetaKind as M;
        match self {
            K => &[
                ("op", M::Op),
                ("args", M::Args),
                ("phi", M::Formula),
                ("chi", M::Formula),
            ],
            Dual => &[("op", M::Op), ("args", M::Args)],
            Q1 => &[("x", M::Var), ("phi", M::Formula), ("psi", M::Formula)],
            Q2 => &[("x", M::Var), ("phi", M::Formula), ("y", M::State)],
            Name => &[("x", M::Var)],
            Barcan => &[
                ("op", M::Op),
                ("x", M::Var),
                ("args", M::Args),
                ("phi", M::Formula),
            ],
            Nom => &[
                ("x", M::Var),
                ("eta", M::Context),
                ("theta", M::Context),
                ("phi", M::Formula),
            ],
            KAt => &[
                ("z", M::State),
                ("s", M::Sort),
                ("phi", M::Formula),
                ("psi", M::Formula),
            ],
            SelfDual => &[("z", M::State), ("s", M::Sort), ("phi", M::Formula)],
            Back => &[
                ("op", M::Op),
                ("args", M::Args),
                ("z", M::State),
                ("psi", M::Formula),
            ],
            Agree => &[
                ("y", M::State),
                ("z", M::State),
                ("phi", M::Formula),
                ("s", M::Sort),
            ],
            Intro => &[("z", M::State), ("phi", M::Formula)],
            Ref => &[("z", M::State), ("s", M::Sort)],
            BarcanAt => &[
                ("x", M::Var),
                ("z", M::State),
                ("phi", M::Formula),
                ("s", M::Sort),
            ],
            NomX => &[
                ("x", M::Var),
                ("y", M::State),
                ("z", M::State),
                ("s", M::Sort),
            ],
        }
    }

    pub fn kind_of(self, metavar: &str) -> Option<MetaKind> {
        self.metavars()
            .iter()
            .find(|(n, _)| *n == metavar)
            .map(|(_, k)| *k)
    }
}

impl fmt::Display for AxiomScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Rule {
    pub const ALL: [Rule; 7] = [
        Rule::Mp,
        Rule::Ug,
        Rule::Gen,
        Rule::GenAt,
        Rule::Broadcast,
        Rule::Paste0,
        Rule::Paste1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Mp => "mp",
            Rule::Ug => "ug",
            Rule::Gen => "gen",
            Rule::GenAt => "gen-at",
            Rule::Broadcast => "broadcast",
            Rule::Paste0 => "paste0",
            Rule::Paste1 => "paste1",
        }
    }

    pub fn parse(s: &str) -> Option<Rule> {
        Rule::ALL.into_iter().find(|r| r.as_str() == s)
    }

    pub fn system(self) -> SystemId {
        match self {
            Rule::Mp | Rule::Ug => SystemId::BaseK,
            Rule::Gen => SystemId::HybridForall,
            _ => SystemId::HybridAtForall,
        }
    }

    pub fn premise_count(self) -> usize {
        match self {
            Rule::Mp => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A metavariable's value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Binding {
    Formula(Formula),
    Args(Vec<Formula>),
    Op(Name),
    Var(Name),
    State(StateSym),
    Sort(Sort),
}

pub type Bindings = BTreeMap<String, Binding>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    Taut,
    Axiom {
        scheme: AxiomScheme,
        bindings: Bindings,
    },
    Rule {
        rule: Rule,
        /// 1-based step numbers.
        refs: Vec<usize>,
    },
    /// 1-based index into the script's premises.
    Premise(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub formula: Formula,
    pub justification: Justification,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofScript {
    pub system: SystemId,
    pub premises: Vec<Formula>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("{item} is not part of system {system}")]
    NotInSystem { item: String, system: SystemId },
    #[error("formula is not a propositional tautology")]
    NotATautology,
    #[error("too many propositional atoms ({0}) for a truth table")]
    TooManyAtoms(usize),
    #[error("scheme `{scheme}` has no binding for `{name}`")]
    MissingBinding { scheme: AxiomScheme, name: String },
    #[error("binding `{name}` of scheme `{scheme}` must be a {expected:?}")]
    BadBinding {
        scheme: AxiomScheme,
        name: String,
        expected: MetaKind,
    },
    #[error("scheme `{scheme}` has no metavariable `{name}`")]
    UnknownBinding { scheme: AxiomScheme, name: String },
    #[error("step formula is not the instance of `{scheme}`; expected {expected}")]
    SchemeMismatch {
        scheme: AxiomScheme,
        expected: String,
    },
    #[error("side condition of `{scheme}` violated: {condition}")]
    SideConditionViolated { scheme: String, condition: String },
    #[error("rule `{rule}` does not apply: {reason}")]
    RuleShapeMismatch { rule: Rule, reason: String },
    #[error("step {step} cites step {cited}, which is not an earlier step")]
    BadReference { step: usize, cited: usize },
    #[error("rule `{rule}` takes {expected} premises, got {found}")]
    PremiseCount {
        rule: Rule,
        expected: usize,
        found: usize,
    },
    #[error("premise {0} does not exist")]
    BadPremise(usize),
    #[error("step formula differs from premise {0}")]
    PremiseMismatch(usize),
    #[error("step is numbered {found}, expected {expected}")]
    StepNumber { expected: usize, found: usize },
    #[error("the bridge axiom is not an axiom of any supported system")]
    BridgeAxiom,
}

pub type ProofResult<T> = std::result::Result<T, ProofError>;

fn side(scheme: impl fmt::Display, condition: impl Into<String>) -> ProofError {
    ProofError::SideConditionViolated {
        scheme: scheme.to_string(),
        condition: condition.into(),
    }
}

/// Decides whether `f` is an instance of a propositional tautology, treating
/// every maximal non-Boolean subformula as an atom.
pub fn is_prop_tautology(f: &Formula) -> ProofResult<bool> {
    let mut atoms: Vec<&Formula> = Vec::new();
    fn collect<'a>(f: &'a Formula, atoms: &mut Vec<&'a Formula>) {
        match f {
            Formula::Top(_) => {}
            Formula::Neg(a) => collect(a, atoms),
            Formula::Or(a, b) => {
                collect(a, atoms);
                collect(b, atoms);
            }
            other => {
                if !atoms.contains(&other) {
                    atoms.push(other);
                }
            }
        }
    }
    collect(f, &mut atoms);
    if atoms.len() > 22 {
        return Err(ProofError::TooManyAtoms(atoms.len()));
    }
    fn eval(f: &Formula, atoms: &[&Formula], row: u32) -> bool {
        match f {
            Formula::Top(_) => true,
            Formula::Neg(a) => !eval(a, atoms, row),
            Formula::Or(a, b) => eval(a, atoms, row) || eval(b, atoms, row),
            other => {
                let i = atoms.iter().position(|a| *a == other).unwrap();
                row & (1 << i) != 0
            }
        }
    }
    Ok((0..1u32 << atoms.len()).all(|row| eval(f, &atoms, row)))
}

struct Witness<'a> {
    scheme: AxiomScheme,
    bindings: &'a Bindings,
}

impl<'a> Witness<'a> {
    fn get(&self, name: &str) -> ProofResult<&'a Binding> {
        self.bindings
            .get(name)
            .ok_or_else(|| ProofError::MissingBinding {
                scheme: self.scheme,
                name: name.to_string(),
            })
    }

    fn bad(&self, name: &str) -> ProofError {
        ProofError::BadBinding {
            scheme: self.scheme,
            name: name.to_string(),
            expected: self.scheme.kind_of(name).unwrap_or(MetaKind::Formula),
        }
    }

    fn formula(&self, name: &str) -> ProofResult<&'a Formula> {
        match self.get(name)? {
            Binding::Formula(f) => Ok(f),
            _ => Err(self.bad(name)),
        }
    }

    fn args(&self, name: &str) -> ProofResult<&'a [Formula]> {
        match self.get(name)? {
            Binding::Args(a) => Ok(a),
            _ => Err(self.bad(name)),
        }
    }

    fn op(&self, name: &str) -> ProofResult<&'a Name> {
        match self.get(name)? {
            Binding::Op(o) => Ok(o),
            _ => Err(self.bad(name)),
        }
    }

    fn var(&self, name: &str) -> ProofResult<&'a Name> {
        match self.get(name)? {
            Binding::Var(x) => Ok(x),
            _ => Err(self.bad(name)),
        }
    }

    fn state(&self, name: &str) -> ProofResult<&'a StateSym> {
        match self.get(name)? {
            Binding::State(z) => Ok(z),
            _ => Err(self.bad(name)),
        }
    }

    fn sort(&self, name: &str) -> ProofResult<&'a Sort> {
        match self.get(name)? {
            Binding::Sort(s) => Ok(s),
            _ => Err(self.bad(name)),
        }
    }

    /// The argument list and the position of its single hole.
    fn holed_args(&self, name: &str) -> ProofResult<(&'a [Formula], usize)> {
        let args = self.args(name)?;
        let holes: Vec<usize> = args
            .iter()
            .enumerate()
            .filter(|(_, a)| matches!(a, Formula::Hole(_)))
            .map(|(i, _)| i)
            .collect();
        match holes.as_slice() {
            [i] => Ok((args, *i)),
            _ => Err(side(
                self.scheme,
                "the argument list must mark exactly one position with a hole",
            )),
        }
    }
}

fn with_arg(args: &[Formula], i: usize, f: Formula) -> Vec<Formula> {
    let mut v = args.to_vec();
    v[i] = f;
    v
}

/// Builds the instance of `scheme` determined by `bindings`, enforcing the
/// scheme's side conditions.
pub fn instantiate(
    scheme: AxiomScheme,
    bindings: &Bindings,
    sig: &Signature,
) -> ProofResult<Formula> {
    use AxiomScheme::*;
    for name in bindings.keys() {
        if scheme.kind_of(name).is_none() {
            return Err(ProofError::UnknownBinding {
                scheme,
                name: name.clone(),
            });
        }
    }
    let w = Witness { scheme, bindings };
    let f = match scheme {
        K => {
            let op = w.op("op")?;
            let (args, i) = w.holed_args("args")?;
            let (phi, chi) = (w.formula("phi")?, w.formula("chi")?);
            let boxed = |f: Formula| Formula::dual_app(op, with_arg(args, i, f));
            Formula::implies(
                boxed(Formula::implies(phi.clone(), chi.clone())),
                Formula::implies(boxed(phi.clone()), boxed(chi.clone())),
            )
        }
        Dual => {
            let op = w.op("op")?;
            let args = w.args("args")?;
            let negs = args.iter().cloned().map(Formula::neg).collect();
            Formula::iff(
                Formula::app(op, args.to_vec()),
                Formula::neg(Formula::dual_app(op, negs)),
            )
        }
        Q1 => {
            let x = w.var("x")?;
            let (phi, psi) = (w.formula("phi")?, w.formula("psi")?);
            let xs = sig.sort_of_symbol(x, SymbolKind::SVar)?;
            if free_svars(phi).contains(x) {
                return Err(side(scheme, format!("`{x}` occurs free in phi")));
            }
            Formula::implies(
                Formula::forall(x, xs, Formula::implies(phi.clone(), psi.clone())),
                Formula::implies(phi.clone(), Formula::forall(x, xs, psi.clone())),
            )
        }
        Q2 => {
            let x = w.var("x")?;
            let phi = w.formula("phi")?;
            let y = w.state("y")?;
            let xs = sig.sort_of_symbol(x, SymbolKind::SVar)?;
            if !is_substitutable(phi, x, y) {
                return Err(side(
                    scheme,
                    format!("`{y}` is not substitutable for `{x}`"),
                ));
            }
            Formula::implies(
                Formula::forall(x, xs, phi.clone()),
                substitute(sig, phi, x, y)?,
            )
        }
        Name => {
            let x = w.var("x")?;
            let xs = sig.sort_of_symbol(x, SymbolKind::SVar)?;
            Formula::exists(x, xs, Formula::var(x))
        }
        Barcan => {
            let op = w.op("op")?;
            let x = w.var("x")?;
            let (args, i) = w.holed_args("args")?;
            let phi = w.formula("phi")?;
            let xs = sig.sort_of_symbol(x, SymbolKind::SVar)?;
            if args.iter().any(|a| free_svars(a).contains(x)) {
                return Err(side(
                    scheme,
                    format!("`{x}` occurs free in an argument other than the bound position"),
                ));
            }
            Formula::implies(
                Formula::forall(x, xs, Formula::dual_app(op, with_arg(args, i, phi.clone()))),
                Formula::dual_app(op, with_arg(args, i, Formula::forall(x, xs, phi.clone()))),
            )
        }
        Nom => {
            let x = w.var("x")?;
            let phi = w.formula("phi")?;
            let xs = sig.sort_of_symbol(x, SymbolKind::SVar)?;
            let eta = NomContext::new(sig, w.formula("eta")?.clone())?;
            let theta = NomContext::new(sig, w.formula("theta")?.clone())?;
            if eta.hole_sort() != xs || theta.hole_sort() != xs {
                return Err(side(
                    scheme,
                    "assumption: the hole sorts of eta and theta equal the sort of x",
                ));
            }
            if eta.sort() != theta.sort() {
                return Err(side(scheme, "assumption: eta and theta have the same sort"));
            }
            let xf = Formula::var(x);
            Formula::forall(
                x,
                xs,
                Formula::implies(
                    eta.apply(sig, &Formula::and(xf.clone(), phi.clone()))?,
                    theta.apply_dual(sig, &Formula::implies(xf, phi.clone()))?,
                ),
            )
        }
        KAt => {
            let (z, s) = (w.state("z")?, w.sort("s")?);
            let (phi, psi) = (w.formula("phi")?, w.formula("psi")?);
            let at = |f: Formula| Formula::at(z.clone(), s, f);
            Formula::implies(
                at(Formula::implies(phi.clone(), psi.clone())),
                Formula::implies(at(phi.clone()), at(psi.clone())),
            )
        }
        SelfDual => {
            let (z, s, phi) = (w.state("z")?, w.sort("s")?, w.formula("phi")?);
            Formula::iff(
                Formula::at(z.clone(), s, phi.clone()),
                Formula::neg(Formula::at(z.clone(), s, Formula::neg(phi.clone()))),
            )
        }
        Back => {
            let op = w.op("op")?;
            let (args, i) = w.holed_args("args")?;
            let (z, psi) = (w.state("z")?, w.formula("psi")?);
            let decl = sig
                .op(op)
                .ok_or_else(|| SyntaxError::UnknownOp(op.to_string()))?;
            let si = decl.args.get(i).ok_or(SyntaxError::ArityMismatch {
                op: op.to_string(),
                expected: decl.arity(),
                found: args.len(),
            })?;
            Formula::implies(
                Formula::app(
                    op,
                    with_arg(args, i, Formula::at(z.clone(), si, psi.clone())),
                ),
                Formula::at(z.clone(), &decl.result, psi.clone()),
            )
        }
        Agree => {
            let (y, z) = (w.state("y")?, w.state("z")?);
            let (phi, t) = (w.formula("phi")?, w.sort("s")?);
            let inner = sig.state_sort(y)?;
            Formula::iff(
                Formula::at(y.clone(), t, Formula::at(z.clone(), inner, phi.clone())),
                Formula::at(z.clone(), t, phi.clone()),
            )
        }
        Intro => {
            let (z, phi) = (w.state("z")?, w.formula("phi")?);
            let s = sort_of(phi, sig)?;
            Formula::implies(
                z.to_formula(),
                Formula::iff(phi.clone(), Formula::at(z.clone(), &s, phi.clone())),
            )
        }
        Ref => {
            let (z, s) = (w.state("z")?, w.sort("s")?);
            Formula::at(z.clone(), s, z.to_formula())
        }
        BarcanAt => {
            let x = w.var("x")?;
            let (z, phi, s) = (w.state("z")?, w.formula("phi")?, w.sort("s")?);
            let xs = sig.sort_of_symbol(x, SymbolKind::SVar)?;
            if z.is_var(x) {
                return Err(side(
                    scheme,
                    format!("the bound variable `{x}` is the subscript"),
                ));
            }
            Formula::implies(
                Formula::forall(x, xs, Formula::at(z.clone(), s, phi.clone())),
                Formula::at(z.clone(), s, Formula::forall(x, xs, phi.clone())),
            )
        }
        NomX => {
            let x = w.var("x")?;
            let (y, z, s) = (w.state("y")?, w.state("z")?, w.sort("s")?);
            let xf = Formula::var(x);
            Formula::implies(
                Formula::and(
                    Formula::at(z.clone(), s, xf.clone()),
                    Formula::at(y.clone(), s, xf),
                ),
                Formula::at(z.clone(), s, y.to_formula()),
            )
        }
    };
    sort_of(&f, sig)?;
    Ok(f)
}

/// Checks that `phi` is the instance of `scheme` under `bindings`.
pub fn match_axiom(
    scheme: AxiomScheme,
    bindings: &Bindings,
    phi: &Formula,
    sig: &Signature,
) -> ProofResult<()> {
    let expected = instantiate(scheme, bindings, sig)?;
    if &expected != phi {
        return Err(ProofError::SchemeMismatch {
            scheme,
            expected: expected.to_string(),
        });
    }
    Ok(())
}

fn shape(rule: Rule, reason: impl Into<String>) -> ProofError {
    ProofError::RuleShapeMismatch {
        rule,
        reason: reason.into(),
    }
}

/// Destructures `a -> b`, i.e. `not a or b`.
fn as_implies(f: &Formula) -> Option<(&Formula, &Formula)> {
    match f {
        Formula::Or(l, r) => match &**l {
            Formula::Neg(a) => Some((a, r)),
            _ => None,
        },
        _ => None,
    }
}

/// Destructures `a and b`, i.e. `not (not a or not b)`.
fn as_and(f: &Formula) -> Option<(&Formula, &Formula)> {
    match f {
        Formula::Neg(inner) => match &**inner {
            Formula::Or(l, r) => match (&**l, &**r) {
                (Formula::Neg(a), Formula::Neg(b)) => Some((a, b)),
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

fn as_state(f: &Formula) -> Option<StateSym> {
    match f {
        Formula::Var(x) => Some(StateSym::Var(x.clone())),
        Formula::Nom(j) => Some(StateSym::Nom(j.clone())),
        _ => None,
    }
}

/// Checks one rule application.
pub fn apply_rule(
    rule: Rule,
    premises: &[&Formula],
    conclusion: &Formula,
    sig: &Signature,
) -> ProofResult<()> {
    if premises.len() != rule.premise_count() {
        return Err(ProofError::PremiseCount {
            rule,
            expected: rule.premise_count(),
            found: premises.len(),
        });
    }
    let p = premises[0];
    match rule {
        Rule::Mp => {
            let (a, b) = as_implies(premises[1])
                .ok_or_else(|| shape(rule, "second premise is not an implication"))?;
            if a != p {
                return Err(shape(rule, "antecedent differs from the first premise"));
            }
            if b != conclusion {
                return Err(shape(rule, "consequent differs from the conclusion"));
            }
        }
        Rule::Ug => {
            let ok = match conclusion {
                Formula::Neg(inner) => match &**inner {
                    Formula::App(_, args) => args
                        .iter()
                        .any(|a| matches!(a, Formula::Neg(b) if &**b == p)),
                    _ => false,
                },
                _ => false,
            };
            if !ok {
                return Err(shape(
                    rule,
                    "conclusion is not a box application with the premise as an argument",
                ));
            }
        }
        Rule::Gen => match conclusion {
            Formula::Forall(_, _, body) if &**body == p => {}
            _ => return Err(shape(rule, "conclusion is not the premise under a binder")),
        },
        Rule::GenAt => match conclusion {
            Formula::At(_, _, body) if &**body == p => {}
            _ => return Err(shape(rule, "conclusion is not the premise under @")),
        },
        Rule::Broadcast => match (p, conclusion) {
            (Formula::At(z1, _, b1), Formula::At(z2, _, b2)) if z1 == z2 && b1 == b2 => {}
            _ => {
                return Err(shape(
                    rule,
                    "premise and conclusion must differ only in the @ superscript",
                ))
            }
        },
        Rule::Paste0 | Rule::Paste1 => paste(rule, p, conclusion)?,
    }
    sort_of(conclusion, sig)?;
    Ok(())
}

fn paste(rule: Rule, premise: &Formula, conclusion: &Formula) -> ProofResult<()> {
    let (pa, psi) =
        as_implies(premise).ok_or_else(|| shape(rule, "premise is not an implication"))?;
    let (ca, psi2) =
        as_implies(conclusion).ok_or_else(|| shape(rule, "conclusion is not an implication"))?;
    if psi != psi2 {
        return Err(shape(rule, "consequents differ"));
    }
    let (z, pbody, cbody) = match (pa, ca) {
        (Formula::At(z, s, pb), Formula::At(z2, s2, cb)) if z == z2 && s == s2 => (z, pb, cb),
        _ => {
            return Err(shape(
                rule,
                "antecedents must be @ formulas with the same subscript",
            ))
        }
    };
    let (y, phi) = if rule == Rule::Paste0 {
        let (yf, phi) =
            as_and(pbody).ok_or_else(|| shape(rule, "premise body is not a conjunction"))?;
        if &**cbody != phi {
            return Err(shape(
                rule,
                "conclusion body differs from the pasted formula",
            ));
        }
        (yf, phi)
    } else {
        let (op1, pargs, op2, cargs) = match (&**pbody, &**cbody) {
            (Formula::App(o1, a1), Formula::App(o2, a2)) => (o1, a1, o2, a2),
            _ => return Err(shape(rule, "bodies are not operation applications")),
        };
        if op1 != op2 || pargs.len() != cargs.len() {
            return Err(shape(rule, "bodies apply different operations"));
        }
        let diff: Vec<usize> = (0..pargs.len()).filter(|&i| pargs[i] != cargs[i]).collect();
        let i = match diff.as_slice() {
            [i] => *i,
            _ => return Err(shape(rule, "bodies must differ in exactly one argument")),
        };
        let (yf, phi) = as_and(&pargs[i])
            .ok_or_else(|| shape(rule, "the differing premise argument is not a conjunction"))?;
        if phi != &cargs[i] {
            return Err(shape(rule, "the differing arguments do not match"));
        }
        (yf, phi)
    };
    let y = as_state(y).ok_or_else(|| shape(rule, "pasted conjunct is not a state symbol"))?;
    if &y == z {
        return Err(side(rule, format!("`{y}` is the @ subscript")));
    }
    let occurs = if rule == Rule::Paste0 {
        phi.mentions(y.name()) || psi.mentions(y.name())
    } else {
        conclusion.mentions(y.name())
    };
    if occurs {
        return Err(side(rule, format!("`{y}` occurs in the conclusion")));
    }
    Ok(())
}

/// A failing step and its reason.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepFailure {
    /// 1-based step number.
    pub step: usize,
    pub error: ProofError,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofReport {
    pub steps: usize,
    pub failure: Option<StepFailure>,
}

impl ProofReport {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }

    /// The formula proved by the last step, when the script checks.
    pub fn conclusion<'a>(&self, script: &'a ProofScript) -> Option<&'a Formula> {
        if self.is_ok() {
            script.steps.last().map(|s| &s.formula)
        } else {
            None
        }
    }
}

impl fmt::Display for ProofReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.failure {
            None => write!(f, "ok ({} steps)", self.steps),
            Some(StepFailure { step, error }) => write!(f, "step {step}: {error}"),
        }
    }
}

fn admitted(sys: SystemId, f: &Formula) -> ProofResult<()> {
    match sys.missing_feature(f) {
        Some(feature) => Err(ProofError::NotInSystem {
            item: feature.to_string(),
            system: sys,
        }),
        None => Ok(()),
    }
}

fn check_step(script: &ProofScript, n: usize, sig: &Signature) -> ProofResult<()> {
    let step = &script.steps[n - 1];
    let sys = script.system;
    sort_of(&step.formula, sig)?;
    admitted(sys, &step.formula)?;
    match &step.justification {
        Justification::Taut => {
            if !is_prop_tautology(&step.formula)? {
                return Err(ProofError::NotATautology);
            }
        }
        Justification::Axiom { scheme, bindings } => {
            if scheme.system() > sys {
                return Err(ProofError::NotInSystem {
                    item: format!("axiom `{scheme}`"),
                    system: sys,
                });
            }
            match_axiom(*scheme, bindings, &step.formula, sig)?;
        }
        Justification::Rule { rule, refs } => {
            if rule.system() > sys {
                return Err(ProofError::NotInSystem {
                    item: format!("rule `{rule}`"),
                    system: sys,
                });
            }
            let mut premises = Vec::new();
            for &r in refs {
                if r == 0 || r >= n {
                    return Err(ProofError::BadReference { step: n, cited: r });
                }
                premises.push(&script.steps[r - 1].formula);
            }
            apply_rule(*rule, &premises, &step.formula, sig)?;
        }
        Justification::Premise(i) => {
            let p = script
                .premises
                .get(i.wrapping_sub(1))
                .ok_or(ProofError::BadPremise(*i))?;
            if p != &step.formula {
                return Err(ProofError::PremiseMismatch(*i));
            }
        }
    }
    Ok(())
}

/// Checks every step in order and reports the first failure. A malformed
/// premise is reported as step 0.
pub fn check_proof(script: &ProofScript, sig: &Signature) -> ProofReport {
    let fail = |step, error| ProofReport {
        steps: script.steps.len(),
        failure: Some(StepFailure { step, error }),
    };
    for p in &script.premises {
        let checked = sort_of(p, sig)
            .map_err(ProofError::from)
            .and_then(|_| admitted(script.system, p));
        if let Err(error) = checked {
            return fail(0, error);
        }
    }
    for n in 1..=script.steps.len() {
        if let Err(error) = check_step(script, n, sig) {
            return fail(n, error);
        }
    }
    ProofReport {
        steps: script.steps.len(),
        failure: None,
    }
}
