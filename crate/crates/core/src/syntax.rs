//! Signatures, sorted formulas, free variables, substitution and
//! nominal contexts.
//!
//! Formulas are kept in primitive normal form: negation, disjunction,
//! operation application, the `forall` binder, the satisfaction operator
//! `@` and atoms. Every other connective is expanded by its constructor.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Interned symbol name.
pub type Name = Arc<str>;

/// A sort name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sort(Arc<str>);

impl Sort {
    pub fn new(name: &str) -> Self {
        Sort(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Sort {
    fn from(name: &str) -> Self {
        Sort::new(name)
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Prop,
    Nom,
    SVar,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolKind::Prop => "propositional variable",
            SymbolKind::Nom => "nominal",
            SymbolKind::SVar => "state variable",
        })
    }
}

/// Arity profile `s1 ... sn -> s` of an operation symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpDecl {
    pub args: Vec<Sort>,
    pub result: Sort,
}

impl OpDecl {
    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
    #[error("unknown operation symbol `{0}`")]
    UnknownOp(String),
    #[error("`{name}` is a {found}, expected a {expected}")]
    WrongKind {
        name: String,
        expected: SymbolKind,
        found: SymbolKind,
    },
    #[error("operation `{op}` takes {expected} argument(s), got {found}")]
    ArityMismatch {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("sort mismatch in {context}: expected `{expected}`, found `{found}`")]
    SortMismatch {
        context: String,
        expected: Sort,
        found: Sort,
    },
    #[error("`{replacement}` is not substitutable for `{var}`")]
    NotSubstitutable { var: String, replacement: String },
    #[error("no unused state variable of sort `{0}` left in the signature")]
    FreshExhausted(Sort),
    #[error("invalid signature: {0}")]
    InvalidSignature(String),
    #[error("not a nominal context: {0}")]
    NotNomContext(String),
}

pub type Result<T, E = SyntaxError> = std::result::Result<T, E>;

/// A many-sorted signature together with its symbol pools.
///
/// Names are global: a name denotes at most one of a sort's operation
/// symbol, propositional variable, nominal or state variable.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Signature {
    sorts: BTreeSet<Sort>,
    ops: BTreeMap<Name, OpDecl>,
    symbols: BTreeMap<Name, (SymbolKind, Sort)>,
}

impl Signature {
    pub fn builder() -> SignatureBuilder {
        SignatureBuilder::default()
    }

    pub fn sorts(&self) -> impl Iterator<Item = &Sort> {
        self.sorts.iter()
    }

    pub fn has_sort(&self, sort: &Sort) -> bool {
        self.sorts.contains(sort)
    }

    pub fn ops(&self) -> impl Iterator<Item = (&Name, &OpDecl)> {
        self.ops.iter()
    }

    pub fn op(&self, name: &str) -> Option<&OpDecl> {
        self.ops.get(name)
    }

    pub fn symbol(&self, name: &str) -> Option<(SymbolKind, &Sort)> {
        self.symbols.get(name).map(|(k, s)| (*k, s))
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.ops.contains_key(name) || self.symbols.contains_key(name)
    }

    /// Symbols of `kind` and `sort`, in name order.
    pub fn pool(&self, kind: SymbolKind, sort: &Sort) -> Vec<Name> {
        self.symbols
            .iter()
            .filter(|(_, (k, s))| *k == kind && s == sort)
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// All symbols of `kind` with their sorts, in name order.
    pub fn symbols_of(&self, kind: SymbolKind) -> Vec<(Name, Sort)> {
        self.symbols
            .iter()
            .filter(|(_, (k, _))| *k == kind)
            .map(|(n, (_, s))| (n.clone(), s.clone()))
            .collect()
    }

    /// Operation symbols whose result sort is `sort`.
    pub fn ops_into(&self, sort: &Sort) -> Vec<(Name, &OpDecl)> {
        self.ops
            .iter()
            .filter(|(_, d)| &d.result == sort)
            .map(|(n, d)| (n.clone(), d))
            .collect()
    }

    pub fn sort_of_symbol(&self, name: &str, kind: SymbolKind) -> Result<&Sort> {
        match self.symbols.get(name) {
            None => Err(SyntaxError::UnknownSymbol(name.to_string())),
            Some((k, s)) if *k == kind => Ok(s),
            Some((k, _)) => Err(SyntaxError::WrongKind {
                name: name.to_string(),
                expected: kind,
                found: *k,
            }),
        }
    }

    /// Sort of a state symbol (nominal or state variable).
    pub fn state_sort(&self, z: &StateSym) -> Result<&Sort> {
        match z {
            StateSym::Nom(n) => self.sort_of_symbol(n, SymbolKind::Nom),
            StateSym::Var(n) => self.sort_of_symbol(n, SymbolKind::SVar),
        }
    }

    fn check_sort(&self, sort: &Sort) -> Result<()> {
        if self.sorts.contains(sort) {
            Ok(())
        } else {
            Err(SyntaxError::UnknownSort(sort.to_string()))
        }
    }

    /// First state variable of `sort` that does not occur in any of `avoid`.
    pub fn fresh_svar(&self, sort: &Sort, avoid: &[&Formula]) -> Result<Name> {
        self.pool(SymbolKind::SVar, sort)
            .into_iter()
            .find(|x| avoid.iter().all(|f| !f.mentions(x)))
            .ok_or_else(|| SyntaxError::FreshExhausted(sort.clone()))
    }

    /// A name not used by this signature, derived from `base`.
    pub fn fresh_name(&self, base: &str) -> Name {
        if !self.contains_name(base) {
            return Name::from(base);
        }
        (1..)
            .map(|i| format!("{base}_{i}"))
            .find(|n| !self.contains_name(n))
            .map(|n| Name::from(n.as_str()))
            .unwrap()
    }
}

#[derive(Default, Debug, Clone)]
pub struct SignatureBuilder {
    sorts: Vec<Sort>,
    ops: Vec<(Name, OpDecl)>,
    symbols: Vec<(Name, SymbolKind, Sort)>,
}

impl SignatureBuilder {
    pub fn sort(mut self, s: &str) -> Self {
        self.sorts.push(Sort::new(s));
        self
    }

    pub fn op(mut self, name: &str, args: &[&str], result: &str) -> Self {
        self.ops.push((
            Name::from(name),
            OpDecl {
                args: args.iter().map(|s| Sort::new(s)).collect(),
                result: Sort::new(result),
            },
        ));
        self
    }

    pub fn op_decl(mut self, name: Name, decl: OpDecl) -> Self {
        self.ops.push((name, decl));
        self
    }

    pub fn symbol(mut self, kind: SymbolKind, sort: &str, name: &str) -> Self {
        self.symbols.push((Name::from(name), kind, Sort::new(sort)));
        self
    }

    pub fn prop(self, sort: &str, name: &str) -> Self {
        self.symbol(SymbolKind::Prop, sort, name)
    }

    pub fn nom(self, sort: &str, name: &str) -> Self {
        self.symbol(SymbolKind::Nom, sort, name)
    }

    pub fn svar(self, sort: &str, name: &str) -> Self {
        self.symbol(SymbolKind::SVar, sort, name)
    }

    pub fn build(self) -> Result<Signature> {
        let invalid = |m: String| Err(SyntaxError::InvalidSignature(m));
        let mut sig = Signature::default();
        for s in self.sorts {
            if !sig.sorts.insert(s.clone()) {
                return invalid(format!("sort `{s}` declared twice"));
            }
        }
        if sig.sorts.is_empty() {
            return invalid("no sorts declared".into());
        }
        for (name, decl) in self.ops {
            for s in decl.args.iter().chain(std::iter::once(&decl.result)) {
                if !sig.sorts.contains(s) {
                    return invalid(format!("operation `{name}` uses undeclared sort `{s}`"));
                }
            }
            if sig.ops.insert(name.clone(), decl).is_some() {
                return invalid(format!("name `{name}` declared twice"));
            }
        }
        for (name, kind, sort) in self.symbols {
            if !sig.sorts.contains(&sort) {
                return invalid(format!("{kind} `{name}` has undeclared sort `{sort}`"));
            }
            if sig.ops.contains_key(&name) || sig.symbols.contains_key(&name) {
                return invalid(format!("name `{name}` declared twice"));
            }
            sig.symbols.insert(name, (kind, sort));
        }
        Ok(sig)
    }
}

impl Signature {
    /// Rebuilds a builder holding this signature's declarations.
    pub fn to_builder(&self) -> SignatureBuilder {
        SignatureBuilder {
            sorts: self.sorts.iter().cloned().collect(),
            ops: self
                .ops
                .iter()
                .map(|(n, d)| (n.clone(), d.clone()))
                .collect(),
            symbols: self
                .symbols
                .iter()
                .map(|(n, (k, s))| (n.clone(), *k, s.clone()))
                .collect(),
        }
    }
}

/// A nominal or a state variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum StateSym {
    Nom(Name),
    Var(Name),
}

impl StateSym {
    pub fn name(&self) -> &Name {
        match self {
            StateSym::Nom(n) | StateSym::Var(n) => n,
        }
    }

    pub fn is_var(&self, x: &str) -> bool {
        matches!(self, StateSym::Var(n) if &**n == x)
    }

    /// The atomic formula naming this state symbol.
    pub fn to_formula(&self) -> Formula {
        match self {
            StateSym::Nom(n) => Formula::Nom(n.clone()),
            StateSym::Var(n) => Formula::Var(n.clone()),
        }
    }
}

impl fmt::Display for StateSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A formula in primitive normal form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Formula {
    Top(Sort),
    Prop(Name),
    Nom(Name),
    Var(Name),
    /// Context hole `#_s`; only legal inside nominal contexts.
    Hole(Sort),
    Neg(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    App(Name, Vec<Formula>),
    /// `forall x:s . body`
    Forall(Name, Sort, Box<Formula>),
    /// `@_z^s body`; the sort is the superscript (the sort of the whole formula).
    At(StateSym, Sort, Box<Formula>),
    /// Matching Logic definedness `ceil(body)^s`; the sort is the target sort.
    Defined(Sort, Box<Formula>),
}

impl Formula {
    pub fn top(s: &Sort) -> Formula {
        Formula::Top(s.clone())
    }

    pub fn bot(s: &Sort) -> Formula {
        Formula::neg(Formula::Top(s.clone()))
    }

    pub fn prop(n: &str) -> Formula {
        Formula::Prop(Name::from(n))
    }

    pub fn nom(n: &str) -> Formula {
        Formula::Nom(Name::from(n))
    }

    pub fn var(n: &str) -> Formula {
        Formula::Var(Name::from(n))
    }

    pub fn neg(a: Formula) -> Formula {
        Formula::Neg(Box::new(a))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    /// `a and b := not(not a or not b)`
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::neg(Formula::or(Formula::neg(a), Formula::neg(b)))
    }

    /// `a -> b := not a or b`
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or(Formula::neg(a), b)
    }

    /// `a <-> b := (a -> b) and (b -> a)`
    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::and(
            Formula::implies(a.clone(), b.clone()),
            Formula::implies(b, a),
        )
    }

    pub fn app(op: &str, args: Vec<Formula>) -> Formula {
        Formula::App(Name::from(op), args)
    }

    /// `sigma-box(args) := not sigma(not args)`
    pub fn dual_app(op: &str, args: Vec<Formula>) -> Formula {
        Formula::neg(Formula::App(
            Name::from(op),
            args.into_iter().map(Formula::neg).collect(),
        ))
    }

    pub fn forall(x: &str, s: &Sort, body: Formula) -> Formula {
        Formula::Forall(Name::from(x), s.clone(), Box::new(body))
    }

    /// `exists x . body := not forall x . not body`
    pub fn exists(x: &str, s: &Sort, body: Formula) -> Formula {
        Formula::neg(Formula::forall(x, s, Formula::neg(body)))
    }

    pub fn at(z: StateSym, s: &Sort, body: Formula) -> Formula {
        Formula::At(z, s.clone(), Box::new(body))
    }

    pub fn defined(s: &Sort, body: Formula) -> Formula {
        Formula::Defined(s.clone(), Box::new(body))
    }

    /// Totality `floor(body) := not ceil(not body)`.
    pub fn total(s: &Sort, body: Formula) -> Formula {
        Formula::neg(Formula::defined(s, Formula::neg(body)))
    }

    /// Equality `a = b := floor(a <-> b)`.
    pub fn equals(s: &Sort, a: Formula, b: Formula) -> Formula {
        Formula::total(s, Formula::iff(a, b))
    }

    /// Nesting depth; atoms have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Formula::Top(_)
            | Formula::Prop(_)
            | Formula::Nom(_)
            | Formula::Var(_)
            | Formula::Hole(_) => 0,
            Formula::Neg(a)
            | Formula::Forall(_, _, a)
            | Formula::At(_, _, a)
            | Formula::Defined(_, a) => 1 + a.depth(),
            Formula::Or(a, b) => 1 + a.depth().max(b.depth()),
            Formula::App(_, args) => 1 + args.iter().map(Formula::depth).max().unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::Neg(a)
            | Formula::Forall(_, _, a)
            | Formula::At(_, _, a)
            | Formula::Defined(_, a) => 1 + a.size(),
            Formula::Or(a, b) => 1 + a.size() + b.size(),
            Formula::App(_, args) => 1 + args.iter().map(Formula::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// True when `name` occurs anywhere in the formula, free or bound,
    /// as an atom, a binder or an `@` subscript.
    pub fn mentions(&self, name: &str) -> bool {
        match self {
            Formula::Top(_) | Formula::Hole(_) => false,
            Formula::Prop(n) | Formula::Nom(n) | Formula::Var(n) => &**n == name,
            Formula::Neg(a) | Formula::Defined(_, a) => a.mentions(name),
            Formula::Or(a, b) => a.mentions(name) || b.mentions(name),
            Formula::App(op, args) => &**op == name || args.iter().any(|a| a.mentions(name)),
            Formula::Forall(x, _, a) => &**x == name || a.mentions(name),
            Formula::At(z, _, a) => &**z.name() == name || a.mentions(name),
        }
    }

    /// Calls `f` on every subformula, outermost first.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula)) {
        f(self);
        match self {
            Formula::Neg(a)
            | Formula::Forall(_, _, a)
            | Formula::At(_, _, a)
            | Formula::Defined(_, a) => a.visit(f),
            Formula::Or(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Formula::App(_, args) => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }

    pub fn features(&self) -> Features {
        let mut feats = Features::default();
        self.visit(&mut |g| match g {
            Formula::Prop(_) => feats.props = true,
            Formula::Nom(_) => feats.noms = true,
            Formula::Var(_) => feats.svars = true,
            Formula::Hole(_) => feats.holes = true,
            Formula::Forall(..) => feats.forall = true,
            Formula::At(z, _, _) => {
                feats.at = true;
                match z {
                    StateSym::Nom(_) => feats.noms = true,
                    StateSym::Var(_) => feats.svars = true,
                }
            }
            Formula::Defined(..) => feats.defined = true,
            _ => {}
        });
        feats
    }
}

/// Which syntactic features a formula uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Features {
    pub props: bool,
    pub noms: bool,
    pub svars: bool,
    pub forall: bool,
    pub at: bool,
    pub defined: bool,
    pub holes: bool,
}

/// The three deductive systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SystemId {
    /// The polyadic modal base system without hybrid features.
    BaseK,
    /// Adds nominals, state variables and `forall`.
    HybridForall,
    /// Adds `@_z` with `z` a nominal or a state variable.
    HybridAtForall,
}

impl SystemId {
    pub const ALL: [SystemId; 3] = [
        SystemId::BaseK,
        SystemId::HybridForall,
        SystemId::HybridAtForall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemId::BaseK => "base",
            SystemId::HybridForall => "hybrid-forall",
            SystemId::HybridAtForall => "hybrid-at-forall",
        }
    }

    pub fn parse(s: &str) -> Option<SystemId> {
        SystemId::ALL.into_iter().find(|id| id.as_str() == s)
    }

    /// Returns the name of the first feature of `f` this system lacks.
    pub fn missing_feature(self, f: &Formula) -> Option<&'static str> {
        let feats = f.features();
        if feats.holes {
            return Some("context hole");
        }
        if feats.defined {
            return Some("definedness");
        }
        if self < SystemId::HybridAtForall && feats.at {
            return Some("satisfaction operator @");
        }
        if self == SystemId::BaseK {
            if feats.forall {
                return Some("forall binder");
            }
            if feats.noms {
                return Some("nominal");
            }
            if feats.svars {
                return Some("state variable");
            }
        }
        None
    }

    pub fn admits(self, f: &Formula) -> bool {
        self.missing_feature(f).is_none()
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn mismatch(context: impl Into<String>, expected: &Sort, found: &Sort) -> SyntaxError {
    SyntaxError::SortMismatch {
        context: context.into(),
        expected: expected.clone(),
        found: found.clone(),
    }
}

/// The unique sort of a well-sorted formula.
pub fn sort_of(f: &Formula, sig: &Signature) -> Result<Sort> {
    match f {
        Formula::Top(s) | Formula::Hole(s) => {
            sig.check_sort(s)?;
            Ok(s.clone())
        }
        Formula::Prop(p) => sig.sort_of_symbol(p, SymbolKind::Prop).cloned(),
        Formula::Nom(j) => sig.sort_of_symbol(j, SymbolKind::Nom).cloned(),
        Formula::Var(x) => sig.sort_of_symbol(x, SymbolKind::SVar).cloned(),
        Formula::Neg(a) => sort_of(a, sig),
        Formula::Or(a, b) => {
            let sa = sort_of(a, sig)?;
            let sb = sort_of(b, sig)?;
            if sa != sb {
                return Err(mismatch("disjunction", &sa, &sb));
            }
            Ok(sa)
        }
        Formula::App(op, args) => {
            let decl = sig
                .op(op)
                .ok_or_else(|| SyntaxError::UnknownOp(op.to_string()))?;
            if decl.args.len() != args.len() {
                return Err(SyntaxError::ArityMismatch {
                    op: op.to_string(),
                    expected: decl.args.len(),
                    found: args.len(),
                });
            }
            for (i, (a, expected)) in args.iter().zip(&decl.args).enumerate() {
                let found = sort_of(a, sig)?;
                if &found != expected {
                    return Err(mismatch(
                        format!("argument {} of `{op}`", i + 1),
                        expected,
                        &found,
                    ));
                }
            }
            Ok(decl.result.clone())
        }
        Formula::Forall(x, s, body) => {
            let declared = sig.sort_of_symbol(x, SymbolKind::SVar)?;
            if declared != s {
                return Err(mismatch(format!("binder of `{x}`"), declared, s));
            }
            sort_of(body, sig)
        }
        Formula::At(z, s, body) => {
            sig.check_sort(s)?;
            let zs = sig.state_sort(z)?;
            let bs = sort_of(body, sig)?;
            if zs != &bs {
                return Err(mismatch(format!("@ subscript `{z}`"), zs, &bs));
            }
            Ok(s.clone())
        }
        Formula::Defined(s, body) => {
            sig.check_sort(s)?;
            sort_of(body, sig)?;
            Ok(s.clone())
        }
    }
}

/// Derived constructs, expanded into primitive normal form by
/// [`expand_derived`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Derived {
    Primitive(Formula),
    Bot(Sort),
    And(Formula, Formula),
    Implies(Formula, Formula),
    Iff(Formula, Formula),
    Exists {
        var: Name,
        body: Formula,
    },
    DualApp {
        op: Name,
        args: Vec<Formula>,
    },
    /// `A^s body := forall x . @_x^s body` with `x` fresh.
    UnivMod {
        sort: Sort,
        body: Formula,
    },
    /// `E^s body := not A^s not body`
    ExistMod {
        sort: Sort,
        body: Formula,
    },
    Totality {
        sort: Sort,
        body: Formula,
    },
    Equality {
        sort: Sort,
        lhs: Formula,
        rhs: Formula,
    },
}

pub fn expand_derived(sig: &Signature, construct: Derived) -> Result<Formula> {
    let f = match construct {
        Derived::Primitive(f) => f,
        Derived::Bot(s) => Formula::bot(&s),
        Derived::And(a, b) => Formula::and(a, b),
        Derived::Implies(a, b) => Formula::implies(a, b),
        Derived::Iff(a, b) => Formula::iff(a, b),
        Derived::Exists { var, body } => {
            let s = sig.sort_of_symbol(&var, SymbolKind::SVar)?.clone();
            Formula::exists(&var, &s, body)
        }
        Derived::DualApp { op, args } => Formula::dual_app(&op, args),
        Derived::UnivMod { sort, body } => univ_mod(sig, &sort, body)?,
        Derived::ExistMod { sort, body } => Formula::neg(univ_mod(sig, &sort, Formula::neg(body))?),
        Derived::Totality { sort, body } => Formula::total(&sort, body),
        Derived::Equality { sort, lhs, rhs } => Formula::equals(&sort, lhs, rhs),
    };
    sort_of(&f, sig)?;
    Ok(f)
}

/// Universal modality `A^s body := forall x . @_x^s body`, with `x` the
/// first state variable of the body's sort not occurring in the body.
pub fn univ_mod(sig: &Signature, s: &Sort, body: Formula) -> Result<Formula> {
    let t = sort_of(&body, sig)?;
    let x = sig.fresh_svar(&t, &[&body])?;
    Ok(Formula::Forall(
        x.clone(),
        t,
        Box::new(Formula::At(StateSym::Var(x), s.clone(), Box::new(body))),
    ))
}

/// Free state variables. `@_x` counts as a free occurrence of `x`.
pub fn free_svars(f: &Formula) -> BTreeSet<Name> {
    fn go(f: &Formula, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match f {
            Formula::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Formula::Neg(a) | Formula::Defined(_, a) => go(a, bound, out),
            Formula::Or(a, b) => {
                go(a, bound, out);
                go(b, bound, out);
            }
            Formula::App(_, args) => args.iter().for_each(|a| go(a, bound, out)),
            Formula::Forall(x, _, a) => {
                bound.push(x.clone());
                go(a, bound, out);
                bound.pop();
            }
            Formula::At(z, _, a) => {
                if let StateSym::Var(x) = z {
                    if !bound.contains(x) {
                        out.insert(x.clone());
                    }
                }
                go(a, bound, out);
            }
            _ => {}
        }
    }
    let mut out = BTreeSet::new();
    go(f, &mut Vec::new(), &mut out);
    out
}

pub fn is_free_in(x: &str, f: &Formula) -> bool {
    free_svars(f).iter().any(|v| &**v == x)
}

/// True iff no free occurrence of `x` in `f` lies in the scope of a binder
/// of `z`. Nominals are always substitutable.
pub fn is_substitutable(f: &Formula, x: &str, z: &StateSym) -> bool {
    let y = match z {
        StateSym::Nom(_) => return true,
        StateSym::Var(y) => y,
    };
    fn go(f: &Formula, x: &str, y: &str, under_y: bool) -> bool {
        match f {
            Formula::Var(v) => !(under_y && &**v == x),
            Formula::Neg(a) | Formula::Defined(_, a) => go(a, x, y, under_y),
            Formula::Or(a, b) => go(a, x, y, under_y) && go(b, x, y, under_y),
            Formula::App(_, args) => args.iter().all(|a| go(a, x, y, under_y)),
            Formula::Forall(v, _, a) => {
                if &**v == x {
                    true
                } else {
                    go(a, x, y, under_y || &**v == y)
                }
            }
            Formula::At(z, _, a) => !(under_y && z.is_var(x)) && go(a, x, y, under_y),
            _ => true,
        }
    }
    go(f, x, y, false)
}

/// `f[z/x]`: replaces the free occurrences of state variable `x` by `z`.
pub fn substitute(sig: &Signature, f: &Formula, x: &str, z: &StateSym) -> Result<Formula> {
    let xs = sig.sort_of_symbol(x, SymbolKind::SVar)?;
    let zs = sig.state_sort(z)?;
    if xs != zs {
        return Err(mismatch(format!("substitution for `{x}`"), xs, zs));
    }
    if !is_substitutable(f, x, z) {
        return Err(SyntaxError::NotSubstitutable {
            var: x.to_string(),
            replacement: z.name().to_string(),
        });
    }
    Ok(replace_free(f, x, z))
}

/// Unchecked replacement of the free occurrences of `x`.
pub(crate) fn replace_free(f: &Formula, x: &str, z: &StateSym) -> Formula {
    match f {
        Formula::Var(v) if &**v == x => z.to_formula(),
        Formula::Neg(a) => Formula::neg(replace_free(a, x, z)),
        Formula::Defined(s, a) => Formula::Defined(s.clone(), Box::new(replace_free(a, x, z))),
        Formula::Or(a, b) => Formula::or(replace_free(a, x, z), replace_free(b, x, z)),
        Formula::App(op, args) => Formula::App(
            op.clone(),
            args.iter().map(|a| replace_free(a, x, z)).collect(),
        ),
        Formula::Forall(v, _, _) if &**v == x => f.clone(),
        Formula::Forall(v, s, a) => {
            Formula::Forall(v.clone(), s.clone(), Box::new(replace_free(a, x, z)))
        }
        Formula::At(w, s, a) => {
            let w = if w.is_var(x) { z.clone() } else { w.clone() };
            Formula::At(w, s.clone(), Box::new(replace_free(a, x, z)))
        }
        _ => f.clone(),
    }
}

/// Classification of a context formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContextClass {
    /// In NC but not NomC.
    Nc,
    /// In NomC (and therefore in NC).
    NomC,
    Neither,
}

pub fn nomc_classify(eta: &Formula) -> ContextClass {
    fn nc(f: &Formula, holes: &mut BTreeSet<Sort>) -> bool {
        match f {
            Formula::Hole(s) => {
                holes.insert(s.clone());
                true
            }
            Formula::Top(_) => true,
            Formula::App(_, args) => args.iter().all(|a| nc(a, holes)),
            _ => false,
        }
    }
    let mut holes = BTreeSet::new();
    if !nc(eta, &mut holes) {
        ContextClass::Neither
    } else if holes.len() == 1 {
        ContextClass::NomC
    } else {
        ContextClass::Nc
    }
}

/// A well-sorted member of NomC.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NomContext {
    body: Formula,
    hole_sort: Sort,
    sort: Sort,
}

impl NomContext {
    pub fn new(sig: &Signature, body: Formula) -> Result<NomContext> {
        if nomc_classify(&body) != ContextClass::NomC {
            return Err(SyntaxError::NotNomContext(format!(
                "{body} is not built from one hole symbol, T and operation symbols"
            )));
        }
        let sort = sort_of(&body, sig)?;
        let mut hole_sort = None;
        body.visit(&mut |g| {
            if let Formula::Hole(s) = g {
                hole_sort = Some(s.clone());
            }
        });
        Ok(NomContext {
            body,
            hole_sort: hole_sort.expect("NomC has a hole"),
            sort,
        })
    }

    pub fn body(&self) -> &Formula {
        &self.body
    }

    pub fn hole_sort(&self) -> &Sort {
        &self.hole_sort
    }

    /// Sort of the context (of `eta(phi)`).
    pub fn sort(&self) -> &Sort {
        &self.sort
    }

    /// `eta(phi)`: every hole replaced by `phi`.
    pub fn apply(&self, sig: &Signature, phi: &Formula) -> Result<Formula> {
        let s = sort_of(phi, sig)?;
        if s != self.hole_sort {
            return Err(mismatch("context hole", &self.hole_sort, &s));
        }
        Ok(fill_holes(&self.body, phi))
    }

    /// The dual context: holes kept, `T` to `bot`, `sigma` to its box.
    pub fn dual_body(&self) -> Formula {
        fn dual(f: &Formula) -> Formula {
            match f {
                Formula::Top(s) => Formula::bot(s),
                Formula::App(op, args) => Formula::neg(Formula::App(
                    op.clone(),
                    args.iter().map(|a| Formula::neg(dual(a))).collect(),
                )),
                other => other.clone(),
            }
        }
        dual(&self.body)
    }

    /// `eta-box(phi)`.
    pub fn apply_dual(&self, sig: &Signature, phi: &Formula) -> Result<Formula> {
        let s = sort_of(phi, sig)?;
        if s != self.hole_sort {
            return Err(mismatch("context hole", &self.hole_sort, &s));
        }
        Ok(fill_holes(&self.dual_body(), phi))
    }
}

/// `nomc_apply`: checks NomC membership and the hole sort, then fills.
pub fn nomc_apply(sig: &Signature, eta: &Formula, phi: &Formula) -> Result<Formula> {
    NomContext::new(sig, eta.clone())?.apply(sig, phi)
}

pub(crate) fn fill_holes(f: &Formula, phi: &Formula) -> Formula {
    match f {
        Formula::Hole(_) => phi.clone(),
        Formula::Neg(a) => Formula::neg(fill_holes(a, phi)),
        Formula::Or(a, b) => Formula::or(fill_holes(a, phi), fill_holes(b, phi)),
        Formula::App(op, args) => Formula::App(
            op.clone(),
            args.iter().map(|a| fill_holes(a, phi)).collect(),
        ),
        Formula::Forall(x, s, a) => {
            Formula::Forall(x.clone(), s.clone(), Box::new(fill_holes(a, phi)))
        }
        Formula::At(z, s, a) => Formula::At(z.clone(), s.clone(), Box::new(fill_holes(a, phi))),
        Formula::Defined(s, a) => Formula::Defined(s.clone(), Box::new(fill_holes(a, phi))),
        other => other.clone(),
    }
}

/// Is `f` Form0, i.e. free of propositional variables and nominals?
pub fn is_form0(f: &Formula) -> bool {
    let feats = f.features();
    !feats.props && !feats.noms
}
