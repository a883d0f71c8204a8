//! S-expression documents: signatures, formulas, models, ML models,
//! assignments, frames and proof scripts.
//!
//! Rendering is canonical: one space between items, keys in sorted order,
//! primitive connectives only. Parsing also accepts the derived connectives
//! (`bot`, `and`, `implies`, `iff`, `dual`, `exists`, `univ`, `total`,
//! `equals`) and expands them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use thiserror::Error;

use crate::matching::{MLModel, MlError};
use crate::proof::{
    AxiomScheme, Binding, Bindings, Justification, MetaKind, ProofError, ProofScript, Rule, Step,
};
use crate::semantics::{Assignment, Frame, KripkeStructure, ModelError};
use crate::syntax::{
    sort_of, univ_mod, Formula, Name, OpDecl, Signature, Sort, StateSym, SymbolKind, SyntaxError,
    SystemId,
};

/// A parsed node with its 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sexp {
    pub kind: SexpKind,
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SexpKind {
    Atom(String),
    List(Vec<Sexp>),
}

/// Failures a document can be rejected for after it parsed as an S-expression.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Invalid {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Proof(#[from] ProofError),
    #[error("{0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{line}:{col}: {source}")]
    Invalid {
        line: usize,
        col: usize,
        #[source]
        source: Invalid,
    },
}

pub type TextResult<T> = std::result::Result<T, TextError>;

fn syntax_err(line: usize, col: usize, msg: impl Into<String>) -> TextError {
    TextError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

impl Sexp {
    fn invalid(&self, e: impl Into<Invalid>) -> TextError {
        TextError::Invalid {
            line: self.line,
            col: self.col,
            source: e.into(),
        }
    }

    fn shape(&self, msg: impl Into<String>) -> TextError {
        self.invalid(Invalid::Shape(msg.into()))
    }

    pub fn atom(&self) -> Option<&str> {
        match &self.kind {
            SexpKind::Atom(a) => Some(a),
            SexpKind::List(_) => None,
        }
    }

    fn expect_atom(&self, what: &str) -> TextResult<&str> {
        self.atom()
            .ok_or_else(|| self.shape(format!("expected {what}, found a list")))
    }

    fn expect_list(&self, what: &str) -> TextResult<&[Sexp]> {
        match &self.kind {
            SexpKind::List(items) => Ok(items),
            SexpKind::Atom(a) => Err(self.shape(format!("expected {what}, found `{a}`"))),
        }
    }

    /// A list whose head is an atom: `(tag rest...)`.
    fn tagged(&self, what: &str) -> TextResult<(&str, &[Sexp])> {
        let items = self.expect_list(what)?;
        let (head, rest) = items
            .split_first()
            .ok_or_else(|| self.shape(format!("expected {what}, found ()")))?;
        Ok((head.expect_atom("a tag")?, rest))
    }

    fn expect_tag(&self, tag: &str) -> TextResult<&[Sexp]> {
        let (t, rest) = self.tagged(&format!("({tag} ...)"))?;
        if t != tag {
            return Err(self.shape(format!("expected ({tag} ...), found ({t} ...)")));
        }
        Ok(rest)
    }
}

/// Reads exactly one S-expression. `;` starts a comment running to the end
/// of the line.
pub fn read_sexp(text: &str) -> TextResult<Sexp> {
    let mut stack: Vec<(usize, usize, Vec<Sexp>)> = Vec::new();
    let mut done: Option<Sexp> = None;
    let (mut line, mut col) = (1, 0);
    let mut chars = text.chars();
    let mut atom: Option<(usize, usize, String)> = None;

    let push = |node: Sexp, stack: &mut Vec<(usize, usize, Vec<Sexp>)>, done: &mut Option<Sexp>| {
        match stack.last_mut() {
            Some((_, _, items)) => {
                items.push(node);
                Ok(())
            }
            None if done.is_none() => {
                *done = Some(node);
                Ok(())
            }
            None => Err(syntax_err(
                node.line,
                node.col,
                "trailing input after the document",
            )),
        }
    };

    while let Some(c) = chars.next() {
        col += 1;
        let delimiter = c.is_whitespace() || c == '(' || c == ')' || c == ';';
        if delimiter {
            if let Some((l, cc, s)) = atom.take() {
                push(
                    Sexp {
                        kind: SexpKind::Atom(s),
                        line: l,
                        col: cc,
                    },
                    &mut stack,
                    &mut done,
                )?;
            }
        }
        match c {
            '(' => stack.push((line, col, Vec::new())),
            ')' => {
                let (l, cc, items) = stack
                    .pop()
                    .ok_or_else(|| syntax_err(line, col, "unbalanced `)`"))?;
                push(
                    Sexp {
                        kind: SexpKind::List(items),
                        line: l,
                        col: cc,
                    },
                    &mut stack,
                    &mut done,
                )?;
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
                line += 1;
                col = 0;
            }
            '\n' => {
                line += 1;
                col = 0;
            }
            c if c.is_whitespace() => {}
            c => match &mut atom {
                Some((_, _, s)) => s.push(c),
                None => atom = Some((line, col, c.to_string())),
            },
        }
    }
    if let Some((l, cc, s)) = atom.take() {
        push(
            Sexp {
                kind: SexpKind::Atom(s),
                line: l,
                col: cc,
            },
            &mut stack,
            &mut done,
        )?;
    }
    if let Some((l, cc, _)) = stack.last() {
        return Err(syntax_err(*l, *cc, "unclosed `(`"));
    }
    done.ok_or_else(|| syntax_err(line, col, "empty document"))
}

// ---------------------------------------------------------------- formulas

fn name_of(s: &Sexp, what: &str) -> TextResult<Name> {
    Ok(Name::from(s.expect_atom(what)?))
}

fn sort_atom(sig: &Signature, s: &Sexp) -> TextResult<Sort> {
    let sort = Sort::new(s.expect_atom("a sort")?);
    if !sig.has_sort(&sort) {
        return Err(s.invalid(SyntaxError::UnknownSort(sort.to_string())));
    }
    Ok(sort)
}

fn arity(node: &Sexp, rest: &[Sexp], n: usize, tag: &str) -> TextResult<()> {
    if rest.len() != n {
        return Err(node.shape(format!("`{tag}` takes {n} items, got {}", rest.len())));
    }
    Ok(())
}

fn symbol(sig: &Signature, node: &Sexp, s: &Sexp, kind: SymbolKind) -> TextResult<Name> {
    let n = name_of(s, "a symbol")?;
    sig.sort_of_symbol(&n, kind).map_err(|e| node.invalid(e))?;
    Ok(n)
}

fn parse_state(sig: &Signature, s: &Sexp) -> TextResult<StateSym> {
    let (tag, rest) = s.tagged("a state symbol")?;
    arity(s, rest, 1, tag)?;
    match tag {
        "svar" => Ok(StateSym::Var(symbol(sig, s, &rest[0], SymbolKind::SVar)?)),
        "nom" => Ok(StateSym::Nom(symbol(sig, s, &rest[0], SymbolKind::Nom)?)),
        _ => Err(s.shape(format!("expected (svar x) or (nom j), found ({tag} ...)"))),
    }
}

fn parse_binder(sig: &Signature, s: &Sexp) -> TextResult<(Name, Sort)> {
    let items = s.expect_list("a binder (x s)")?;
    if items.len() != 2 {
        return Err(s.shape("a binder is (variable sort)"));
    }
    let x = symbol(sig, s, &items[0], SymbolKind::SVar)?;
    let sort = sort_atom(sig, &items[1])?;
    Ok((x, sort))
}

/// Parses a bare formula node.
pub fn parse_formula_node(sig: &Signature, s: &Sexp) -> TextResult<Formula> {
    let (tag, rest) = s.tagged("a formula")?;
    let sub = |i: usize| parse_formula_node(sig, &rest[i]);
    let f = match tag {
        "top" | "bot" | "hole" => {
            arity(s, rest, 1, tag)?;
            let sort = sort_atom(sig, &rest[0])?;
            match tag {
                "top" => Formula::Top(sort),
                "bot" => Formula::bot(&sort),
                _ => Formula::Hole(sort),
            }
        }
        "prop" => {
            arity(s, rest, 1, tag)?;
            Formula::Prop(symbol(sig, s, &rest[0], SymbolKind::Prop)?)
        }
        "nom" => {
            arity(s, rest, 1, tag)?;
            Formula::Nom(symbol(sig, s, &rest[0], SymbolKind::Nom)?)
        }
        "svar" => {
            arity(s, rest, 1, tag)?;
            Formula::Var(symbol(sig, s, &rest[0], SymbolKind::SVar)?)
        }
        "neg" => {
            arity(s, rest, 1, tag)?;
            Formula::neg(sub(0)?)
        }
        "or" | "and" | "implies" | "iff" => {
            arity(s, rest, 2, tag)?;
            let (a, b) = (sub(0)?, sub(1)?);
            match tag {
                "or" => Formula::or(a, b),
                "and" => Formula::and(a, b),
                "implies" => Formula::implies(a, b),
                _ => Formula::iff(a, b),
            }
        }
        "app" | "dual" => {
            let op = rest
                .first()
                .ok_or_else(|| s.shape(format!("`{tag}` needs an operation symbol")))?;
            let op = name_of(op, "an operation symbol")?;
            let args = (1..rest.len()).map(sub).collect::<TextResult<Vec<_>>>()?;
            if tag == "app" {
                Formula::App(op, args)
            } else {
                Formula::dual_app(&op, args)
            }
        }
        "forall" | "exists" => {
            arity(s, rest, 2, tag)?;
            let (x, sort) = parse_binder(sig, &rest[0])?;
            let body = sub(1)?;
            if tag == "forall" {
                Formula::Forall(x, sort, Box::new(body))
            } else {
                Formula::exists(&x, &sort, body)
            }
        }
        "at" => {
            arity(s, rest, 3, tag)?;
            let z = parse_state(sig, &rest[0])?;
            let sort = sort_atom(sig, &rest[1])?;
            Formula::At(z, sort, Box::new(sub(2)?))
        }
        "defined" | "total" | "univ" => {
            arity(s, rest, 2, tag)?;
            let sort = sort_atom(sig, &rest[0])?;
            let body = sub(1)?;
            match tag {
                "defined" => Formula::Defined(sort, Box::new(body)),
                "total" => Formula::total(&sort, body),
                _ => univ_mod(sig, &sort, body).map_err(|e| s.invalid(e))?,
            }
        }
        "equals" => {
            arity(s, rest, 3, tag)?;
            let sort = sort_atom(sig, &rest[0])?;
            Formula::equals(&sort, sub(1)?, sub(2)?)
        }
        other => return Err(s.shape(format!("unknown formula constructor `{other}`"))),
    };
    sort_of(&f, sig).map_err(|e| s.invalid(e))?;
    Ok(f)
}

/// `(formula SORT F)`.
pub fn parse_formula(sig: &Signature, text: &str) -> TextResult<Formula> {
    formula_doc(sig, &read_sexp(text)?)
}

fn formula_doc(sig: &Signature, s: &Sexp) -> TextResult<Formula> {
    let rest = s.expect_tag("formula")?;
    arity(s, rest, 2, "formula")?;
    let sort = sort_atom(sig, &rest[0])?;
    let f = parse_formula_node(sig, &rest[1])?;
    let found = sort_of(&f, sig).map_err(|e| rest[1].invalid(e))?;
    if found != sort {
        return Err(rest[1].invalid(SyntaxError::SortMismatch {
            context: "formula document".into(),
            expected: sort,
            found,
        }));
    }
    Ok(f)
}

fn write_state(out: &mut String, z: &StateSym) {
    match z {
        StateSym::Var(x) => write!(out, "(svar {x})").unwrap(),
        StateSym::Nom(j) => write!(out, "(nom {j})").unwrap(),
    }
}

fn write_formula(out: &mut String, f: &Formula) {
    match f {
        Formula::Top(s) => write!(out, "(top {s})").unwrap(),
        Formula::Prop(p) => write!(out, "(prop {p})").unwrap(),
        Formula::Nom(j) => write!(out, "(nom {j})").unwrap(),
        Formula::Var(x) => write!(out, "(svar {x})").unwrap(),
        Formula::Hole(s) => write!(out, "(hole {s})").unwrap(),
        Formula::Neg(a) => {
            out.push_str("(neg ");
            write_formula(out, a);
            out.push(')');
        }
        Formula::Or(a, b) => {
            out.push_str("(or ");
            write_formula(out, a);
            out.push(' ');
            write_formula(out, b);
            out.push(')');
        }
        Formula::App(op, args) => {
            write!(out, "(app {op}").unwrap();
            for a in args {
                out.push(' ');
                write_formula(out, a);
            }
            out.push(')');
        }
        Formula::Forall(x, s, a) => {
            write!(out, "(forall ({x} {s}) ").unwrap();
            write_formula(out, a);
            out.push(')');
        }
        Formula::At(z, s, a) => {
            out.push_str("(at ");
            write_state(out, z);
            write!(out, " {s} ").unwrap();
            write_formula(out, a);
            out.push(')');
        }
        Formula::Defined(s, a) => {
            write!(out, "(defined {s} ").unwrap();
            write_formula(out, a);
            out.push(')');
        }
    }
}

/// Canonical rendering of a bare formula node.
pub fn render_formula_node(f: &Formula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f);
    out
}

/// `(formula SORT F)`.
pub fn render_formula(sig: &Signature, f: &Formula) -> Result<String, SyntaxError> {
    Ok(format!(
        "(formula {} {})",
        sort_of(f, sig)?,
        render_formula_node(f)
    ))
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_formula_node(self))
    }
}

// -------------------------------------------------------------- signatures

pub fn parse_signature(text: &str) -> TextResult<Signature> {
    signature_doc(&read_sexp(text)?)
}

fn signature_doc(s: &Sexp) -> TextResult<Signature> {
    let sections = s.expect_tag("signature")?;
    let mut builder = Signature::builder();
    let mut seen = BTreeSet::new();
    for sec in sections {
        let (tag, items) = sec.tagged("a signature section")?;
        if !seen.insert(tag.to_string()) {
            return Err(sec.shape(format!("section `{tag}` appears twice")));
        }
        match tag {
            "sorts" => {
                for it in items {
                    builder = builder.sort(it.expect_atom("a sort")?);
                }
            }
            "ops" => {
                for it in items {
                    let parts = it.expect_list("(name (arg-sorts...) result)")?;
                    if parts.len() != 3 {
                        return Err(it.shape("an operation is (name (arg-sorts...) result)"));
                    }
                    let name = parts[0].expect_atom("an operation name")?;
                    let args = parts[1]
                        .expect_list("a list of argument sorts")?
                        .iter()
                        .map(|a| a.expect_atom("a sort"))
                        .collect::<TextResult<Vec<_>>>()?;
                    let result = parts[2].expect_atom("a result sort")?;
                    builder = builder.op(name, &args, result);
                }
            }
            "props" | "noms" | "svars" => {
                let kind = match tag {
                    "props" => SymbolKind::Prop,
                    "noms" => SymbolKind::Nom,
                    _ => SymbolKind::SVar,
                };
                for it in items {
                    let (sort, names) = it.tagged("(sort symbols...)")?;
                    for n in names {
                        builder = builder.symbol(kind, sort, n.expect_atom("a symbol")?);
                    }
                }
            }
            other => return Err(sec.shape(format!("unknown signature section `{other}`"))),
        }
    }
    builder.build().map_err(|e| s.invalid(e))
}

pub fn render_signature(sig: &Signature) -> String {
    let mut out = String::from("(signature (sorts");
    for s in sig.sorts() {
        write!(out, " {s}").unwrap();
    }
    out.push_str(") (ops");
    for (name, OpDecl { args, result }) in sig.ops() {
        let args: Vec<&str> = args.iter().map(Sort::as_str).collect();
        write!(out, " ({name} ({}) {result})", args.join(" ")).unwrap();
    }
    out.push(')');
    for (tag, kind) in [
        ("props", SymbolKind::Prop),
        ("noms", SymbolKind::Nom),
        ("svars", SymbolKind::SVar),
    ] {
        write!(out, " ({tag}").unwrap();
        for s in sig.sorts() {
            let pool = sig.pool(kind, s);
            if !pool.is_empty() {
                write!(out, " ({s}").unwrap();
                for n in pool {
                    write!(out, " {n}").unwrap();
                }
                out.push(')');
            }
        }
        out.push(')');
    }
    out.push(')');
    out
}

// ------------------------------------------------------------------ models

fn parse_worlds(sig: &Signature, s: &Sexp) -> TextResult<BTreeMap<Sort, Vec<Name>>> {
    let mut worlds = BTreeMap::new();
    for it in s.expect_list("a world list")?.iter().skip(1) {
        let (sort, names) = it.tagged("(sort names...)")?;
        let sort = Sort::new(sort);
        if !sig.has_sort(&sort) {
            return Err(it.invalid(SyntaxError::UnknownSort(sort.to_string())));
        }
        if worlds.contains_key(&sort) {
            return Err(it.shape(format!("sort `{sort}` listed twice")));
        }
        let names = names
            .iter()
            .map(|n| name_of(n, "a name"))
            .collect::<TextResult<Vec<_>>>()?;
        worlds.insert(sort, names);
    }
    Ok(worlds)
}

fn write_worlds(out: &mut String, tag: &str, worlds: &BTreeMap<Sort, Vec<Name>>) {
    write!(out, "({tag}").unwrap();
    for (s, ws) in worlds {
        write!(out, " ({s}").unwrap();
        for w in ws {
            write!(out, " {w}").unwrap();
        }
        out.push(')');
    }
    out.push(')');
}

fn world_index(worlds: &BTreeMap<Sort, Vec<Name>>, node: &Sexp, sort: &Sort) -> TextResult<usize> {
    let name = node.expect_atom("a world")?;
    let ws = worlds
        .get(sort)
        .ok_or_else(|| node.invalid(SyntaxError::UnknownSort(sort.to_string())))?;
    ws.iter().position(|w| &**w == name).ok_or_else(|| {
        let owner = worlds
            .iter()
            .find(|(_, ws)| ws.iter().any(|w| &**w == name));
        node.invalid(match owner {
            Some((found, _)) => ModelError::WorldSort {
                world: name.to_string(),
                expected: sort.clone(),
                found: found.clone(),
            },
            None => ModelError::UnknownWorld(name.to_string()),
        })
    })
}

struct ModelParts {
    worlds: BTreeMap<Sort, Vec<Name>>,
    rels: BTreeMap<Name, BTreeSet<Vec<usize>>>,
    val: BTreeMap<Name, BTreeSet<usize>>,
}

fn parse_model_parts(sig: &Signature, s: &Sexp, tag: &str) -> TextResult<ModelParts> {
    let items = s.expect_tag(tag)?;
    let (first, rest) = items
        .split_first()
        .ok_or_else(|| s.shape(format!("`{tag}` needs a (worlds ...) section")))?;
    first.expect_tag("worlds")?;
    let worlds = parse_worlds(sig, first)?;
    let mut rels: BTreeMap<Name, BTreeSet<Vec<usize>>> = BTreeMap::new();
    let mut val: BTreeMap<Name, BTreeSet<usize>> = BTreeMap::new();
    for it in rest {
        let (kind, parts) = it.tagged("a model entry")?;
        match kind {
            "rel" => {
                let (op, tuples) = parts
                    .split_first()
                    .ok_or_else(|| it.shape("`rel` needs an operation symbol"))?;
                let op = name_of(op, "an operation symbol")?;
                let decl = sig
                    .op(&op)
                    .ok_or_else(|| it.invalid(ModelError::UnknownOp(op.to_string())))?;
                let entry = rels.entry(op.clone()).or_default();
                for t in tuples {
                    let elems = t.expect_list("a tuple")?;
                    if elems.len() != decl.arity() + 1 {
                        return Err(t.invalid(ModelError::TupleLength {
                            op: op.to_string(),
                            expected: decl.arity() + 1,
                            found: elems.len(),
                        }));
                    }
                    let sorts = std::iter::once(&decl.result).chain(&decl.args);
                    let idx = elems
                        .iter()
                        .zip(sorts)
                        .map(|(e, s)| world_index(&worlds, e, s))
                        .collect::<TextResult<Vec<_>>>()?;
                    entry.insert(idx);
                }
            }
            "val" | "nom" => {
                arity(it, parts, 2, kind)?;
                let sk = if kind == "val" {
                    SymbolKind::Prop
                } else {
                    SymbolKind::Nom
                };
                let name = symbol(sig, it, &parts[0], sk)?;
                let (sort, ws) = parts[1].tagged("(sort worlds...)")?;
                let sort = Sort::new(sort);
                let declared = sig.sort_of_symbol(&name, sk).unwrap();
                if declared != &sort {
                    return Err(parts[1].invalid(SyntaxError::SortMismatch {
                        context: format!("valuation of `{name}`"),
                        expected: declared.clone(),
                        found: sort,
                    }));
                }
                if val.contains_key(&name) {
                    return Err(it.shape(format!("`{name}` valuated twice")));
                }
                let set = ws
                    .iter()
                    .map(|w| world_index(&worlds, w, &sort))
                    .collect::<TextResult<BTreeSet<_>>>()?;
                val.insert(name, set);
            }
            other => return Err(it.shape(format!("unknown model entry `{other}`"))),
        }
    }
    Ok(ModelParts { worlds, rels, val })
}

/// `(model (worlds ...) (rel ...) (val ...) (nom ...))`. Every nominal must
/// denote exactly one world.
pub fn parse_model(sig: &Arc<Signature>, text: &str) -> TextResult<KripkeStructure> {
    model_doc(sig, &read_sexp(text)?)
}

fn model_doc(sig: &Arc<Signature>, s: &Sexp) -> TextResult<KripkeStructure> {
    let parts = parse_model_parts(sig, s, "model")?;
    let frame = Frame::new(sig.clone(), parts.worlds, parts.rels).map_err(|e| s.invalid(e))?;
    KripkeStructure::standard(frame, parts.val).map_err(|e| s.invalid(e))
}

/// `(frame (worlds ...) (rel ...))`.
pub fn parse_frame(sig: &Arc<Signature>, text: &str) -> TextResult<Frame> {
    frame_doc(sig, &read_sexp(text)?)
}

fn frame_doc(sig: &Arc<Signature>, s: &Sexp) -> TextResult<Frame> {
    let parts = parse_model_parts(sig, s, "frame")?;
    if !parts.val.is_empty() {
        return Err(s.shape("a frame carries no valuation"));
    }
    Frame::new(sig.clone(), parts.worlds, parts.rels).map_err(|e| s.invalid(e))
}

/// The frame of a `(model ...)` or `(frame ...)` document.
pub fn parse_model_or_frame(sig: &Arc<Signature>, text: &str) -> TextResult<Frame> {
    let s = read_sexp(text)?;
    match s.tagged("a model or frame")?.0 {
        "model" => Ok(model_doc(sig, &s)?.frame().clone()),
        _ => frame_doc(sig, &s),
    }
}

fn write_rels(out: &mut String, frame: &Frame) {
    for (op, tuples) in frame.relations() {
        if tuples.is_empty() {
            continue;
        }
        let decl = frame.signature().op(op).unwrap();
        write!(out, " (rel {op}").unwrap();
        for t in tuples {
            let names: Vec<&str> = std::iter::once(&decl.result)
                .chain(&decl.args)
                .zip(t)
                .map(|(s, &w)| frame.world_name(s, w))
                .collect();
            write!(out, " ({})", names.join(" ")).unwrap();
        }
        out.push(')');
    }
}

pub fn render_frame(frame: &Frame) -> String {
    let mut out = String::from("(frame ");
    write_worlds(&mut out, "worlds", frame.worlds());
    write_rels(&mut out, frame);
    out.push(')');
    out
}

pub fn render_model(m: &KripkeStructure) -> String {
    let frame = m.frame();
    let mut out = String::from("(model ");
    write_worlds(&mut out, "worlds", frame.worlds());
    write_rels(&mut out, frame);
    let sig = frame.signature();
    // propositional variables first, then nominals; each group sorted by name
    for (tag, wanted) in [("val", SymbolKind::Prop), ("nom", SymbolKind::Nom)] {
        for (name, set) in m.valuation() {
            let (kind, sort) = sig.symbol(name).unwrap();
            if kind != wanted || (kind == SymbolKind::Prop && set.is_empty()) {
                continue;
            }
            write!(out, " ({tag} {name} ({sort}").unwrap();
            for &w in set {
                write!(out, " {}", frame.world_name(sort, w)).unwrap();
            }
            out.push_str("))");
        }
    }
    out.push(')');
    out
}

/// `(ml-model (carriers ...) (interp op ((args...) (results...))...)...)`.
pub fn parse_ml_model(sig: &Arc<Signature>, text: &str) -> TextResult<MLModel> {
    ml_model_doc(sig, &read_sexp(text)?)
}

fn ml_model_doc(sig: &Arc<Signature>, s: &Sexp) -> TextResult<MLModel> {
    let items = s.expect_tag("ml-model")?;
    let (first, rest) = items
        .split_first()
        .ok_or_else(|| s.shape("`ml-model` needs a (carriers ...) section"))?;
    first.expect_tag("carriers")?;
    let carriers = parse_worlds(sig, first)?;
    let mut interp: BTreeMap<Name, BTreeMap<Vec<usize>, BTreeSet<usize>>> = BTreeMap::new();
    for it in rest {
        let parts = it.expect_tag("interp")?;
        let (op, entries) = parts
            .split_first()
            .ok_or_else(|| it.shape("`interp` needs an operation symbol"))?;
        let op = name_of(op, "an operation symbol")?;
        let decl = sig
            .op(&op)
            .ok_or_else(|| it.invalid(MlError::UnknownOp(op.to_string())))?;
        if interp.contains_key(&op) {
            return Err(it.shape(format!("`{op}` interpreted twice")));
        }
        let table = interp.entry(op.clone()).or_default();
        for e in entries {
            let pair = e.expect_list("((args...) (results...))")?;
            if pair.len() != 2 {
                return Err(e.shape("an entry is ((args...) (results...))"));
            }
            let args = pair[0].expect_list("an argument tuple")?;
            if args.len() != decl.arity() {
                return Err(pair[0].invalid(MlError::ArgCount {
                    op: op.to_string(),
                    expected: decl.arity(),
                    found: args.len(),
                }));
            }
            let key = args
                .iter()
                .zip(&decl.args)
                .map(|(a, s)| world_index(&carriers, a, s))
                .collect::<TextResult<Vec<_>>>()?;
            let image = pair[1]
                .expect_list("a result set")?
                .iter()
                .map(|a| world_index(&carriers, a, &decl.result))
                .collect::<TextResult<BTreeSet<_>>>()?;
            if table.insert(key, image).is_some() {
                return Err(e.shape("argument tuple listed twice"));
            }
        }
    }
    MLModel::new(sig.clone(), carriers, interp).map_err(|e| s.invalid(e))
}

pub fn render_ml_model(m: &MLModel) -> String {
    let mut out = String::from("(ml-model ");
    write_worlds(&mut out, "carriers", m.carriers());
    for (op, table) in m.tables() {
        if table.is_empty() {
            continue;
        }
        let decl = m.signature().op(op).unwrap();
        write!(out, " (interp {op}").unwrap();
        for (args, image) in table {
            let args: Vec<&str> = args
                .iter()
                .zip(&decl.args)
                .map(|(&a, s)| &*m.carriers()[s][a])
                .collect();
            let image: Vec<&str> = image
                .iter()
                .map(|&b| &*m.carriers()[&decl.result][b])
                .collect();
            write!(out, " (({}) ({}))", args.join(" "), image.join(" ")).unwrap();
        }
        out.push(')');
    }
    out.push(')');
    out
}

/// `(assignment (x a) ...)`; unlisted variables go to the first world of
/// their sort.
pub fn parse_assignment(frame: &Frame, text: &str) -> TextResult<Assignment> {
    assignment_doc(frame, &read_sexp(text)?)
}

fn assignment_doc(frame: &Frame, s: &Sexp) -> TextResult<Assignment> {
    let mut g = Assignment::first_worlds(frame);
    let mut seen = BTreeSet::new();
    for it in s.expect_tag("assignment")? {
        let pair = it.expect_list("(variable world)")?;
        if pair.len() != 2 {
            return Err(it.shape("an entry is (variable world)"));
        }
        let x = symbol(frame.signature(), it, &pair[0], SymbolKind::SVar)?;
        if !seen.insert(x.clone()) {
            return Err(it.shape(format!("`{x}` assigned twice")));
        }
        let sort = frame
            .signature()
            .sort_of_symbol(&x, SymbolKind::SVar)
            .unwrap();
        let w = world_index(frame.worlds(), &pair[1], sort)?;
        g = g.variant(&x, w);
    }
    Ok(g)
}

pub fn render_assignment(frame: &Frame, g: &Assignment) -> String {
    let mut out = String::from("(assignment");
    for (x, &w) in g.as_map() {
        let sort = frame
            .signature()
            .sort_of_symbol(x, SymbolKind::SVar)
            .unwrap();
        write!(out, " ({x} {})", frame.world_name(sort, w)).unwrap();
    }
    out.push(')');
    out
}

// ------------------------------------------------------------------ proofs

fn parse_binding(sig: &Signature, kind: MetaKind, s: &Sexp) -> TextResult<Binding> {
    Ok(match kind {
        MetaKind::Formula | MetaKind::Context => Binding::Formula(parse_formula_node(sig, s)?),
        MetaKind::Args => {
            let items = s.expect_tag("list")?;
            Binding::Args(
                items
                    .iter()
                    .map(|a| parse_formula_node(sig, a))
                    .collect::<TextResult<_>>()?,
            )
        }
        MetaKind::Op => {
            let op = name_of(s, "an operation symbol")?;
            if sig.op(&op).is_none() {
                return Err(s.invalid(SyntaxError::UnknownOp(op.to_string())));
            }
            Binding::Op(op)
        }
        MetaKind::Var => Binding::Var(symbol(sig, s, s, SymbolKind::SVar)?),
        MetaKind::State => Binding::State(parse_state(sig, s)?),
        MetaKind::Sort => Binding::Sort(sort_atom(sig, s)?),
    })
}

fn parse_justification(sig: &Signature, s: &Sexp) -> TextResult<Justification> {
    let (tag, rest) = s.tagged("a justification")?;
    Ok(match tag {
        "taut" => {
            arity(s, rest, 0, tag)?;
            Justification::Taut
        }
        "axiom" => {
            let (id, binds) = rest
                .split_first()
                .ok_or_else(|| s.shape("`axiom` needs a scheme name"))?;
            let id = id.expect_atom("a scheme name")?;
            if id == "bridge" {
                return Err(s.invalid(ProofError::BridgeAxiom));
            }
            let scheme = AxiomScheme::parse(id)
                .ok_or_else(|| s.shape(format!("unknown axiom scheme `{id}`")))?;
            let mut bindings = Bindings::new();
            for b in binds {
                let pair = b.expect_list("(metavariable value)")?;
                if pair.len() != 2 {
                    return Err(b.shape("a binding is (metavariable value)"));
                }
                let name = pair[0].expect_atom("a metavariable")?;
                let kind = scheme.kind_of(name).ok_or_else(|| {
                    b.invalid(ProofError::UnknownBinding {
                        scheme,
                        name: name.to_string(),
                    })
                })?;
                let value = parse_binding(sig, kind, &pair[1])?;
                if bindings.insert(name.to_string(), value).is_some() {
                    return Err(b.shape(format!("`{name}` bound twice")));
                }
            }
            Justification::Axiom { scheme, bindings }
        }
        "rule" => {
            let (id, refs) = rest
                .split_first()
                .ok_or_else(|| s.shape("`rule` needs a rule name"))?;
            let id = id.expect_atom("a rule name")?;
            let rule = Rule::parse(id).ok_or_else(|| s.shape(format!("unknown rule `{id}`")))?;
            let refs = refs.iter().map(step_number).collect::<TextResult<_>>()?;
            Justification::Rule { rule, refs }
        }
        "premise" => {
            arity(s, rest, 1, tag)?;
            Justification::Premise(step_number(&rest[0])?)
        }
        other => return Err(s.shape(format!("unknown justification `{other}`"))),
    })
}

fn step_number(s: &Sexp) -> TextResult<usize> {
    let a = s.expect_atom("a number")?;
    a.parse()
        .map_err(|_| s.shape(format!("`{a}` is not a number")))
}

/// `(proof SYSTEM (premises F...) (steps (step N F JUSTIFICATION)...))`.
pub fn parse_proof(sig: &Signature, text: &str) -> TextResult<ProofScript> {
    proof_doc(sig, &read_sexp(text)?)
}

fn proof_doc(sig: &Signature, s: &Sexp) -> TextResult<ProofScript> {
    let items = s.expect_tag("proof")?;
    arity(s, items, 3, "proof")?;
    let sys = items[0].expect_atom("a system name")?;
    let system =
        SystemId::parse(sys).ok_or_else(|| items[0].shape(format!("unknown system `{sys}`")))?;
    let premises = items[1]
        .expect_tag("premises")?
        .iter()
        .map(|p| parse_formula_node(sig, p))
        .collect::<TextResult<Vec<_>>>()?;
    let mut steps = Vec::new();
    for (i, st) in items[2].expect_tag("steps")?.iter().enumerate() {
        let parts = st.expect_tag("step")?;
        arity(st, parts, 3, "step")?;
        let n = step_number(&parts[0])?;
        if n != i + 1 {
            return Err(parts[0].invalid(ProofError::StepNumber {
                expected: i + 1,
                found: n,
            }));
        }
        steps.push(Step {
            formula: parse_formula_node(sig, &parts[1])?,
            justification: parse_justification(sig, &parts[2])?,
        });
    }
    Ok(ProofScript {
        system,
        premises,
        steps,
    })
}

fn write_binding(out: &mut String, b: &Binding) {
    match b {
        Binding::Formula(f) => write_formula(out, f),
        Binding::Args(args) => {
            out.push_str("(list");
            for a in args {
                out.push(' ');
                write_formula(out, a);
            }
            out.push(')');
        }
        Binding::Op(n) | Binding::Var(n) => out.push_str(n),
        Binding::State(z) => write_state(out, z),
        Binding::Sort(s) => out.push_str(s.as_str()),
    }
}

pub fn render_proof(script: &ProofScript) -> String {
    let mut out = format!("(proof {} (premises", script.system);
    for p in &script.premises {
        out.push(' ');
        write_formula(&mut out, p);
    }
    out.push_str(") (steps");
    for (i, st) in script.steps.iter().enumerate() {
        write!(out, " (step {} ", i + 1).unwrap();
        write_formula(&mut out, &st.formula);
        out.push(' ');
        match &st.justification {
            Justification::Taut => out.push_str("(taut)"),
            Justification::Axiom { scheme, bindings } => {
                write!(out, "(axiom {scheme}").unwrap();
                for (k, v) in bindings {
                    write!(out, " ({k} ").unwrap();
                    write_binding(&mut out, v);
                    out.push(')');
                }
                out.push(')');
            }
            Justification::Rule { rule, refs } => {
                write!(out, "(rule {rule}").unwrap();
                for r in refs {
                    write!(out, " {r}").unwrap();
                }
                out.push(')');
            }
            Justification::Premise(i) => write!(out, "(premise {i})").unwrap(),
        }
        out.push(')');
    }
    out.push_str("))");
    out
}

// --------------------------------------------------------------- documents

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DocKind {
    Signature,
    Formula,
    Model,
    Frame,
    MlModel,
    Assignment,
    Proof,
}

impl DocKind {
    pub fn tag(self) -> &'static str {
        match self {
            DocKind::Signature => "signature",
            DocKind::Formula => "formula",
            DocKind::Model => "model",
            DocKind::Frame => "frame",
            DocKind::MlModel => "ml-model",
            DocKind::Assignment => "assignment",
            DocKind::Proof => "proof",
        }
    }
}

/// Any document. Assignments carry the frame their world names refer to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Document {
    Signature(Signature),
    Formula(Sort, Formula),
    Model(KripkeStructure),
    Frame(Frame),
    MlModel(MLModel),
    Assignment(Frame, Assignment),
    Proof(ProofScript),
}

/// Context needed to resolve names in non-signature documents.
#[derive(Clone, Copy, Debug, Default)]
pub struct ParseContext<'a> {
    pub sig: Option<&'a Arc<Signature>>,
    /// Worlds that assignment documents refer to.
    pub frame: Option<&'a Frame>,
}

/// Parses a document, dispatching on its head tag.
pub fn parse_document(text: &str, ctx: ParseContext<'_>) -> TextResult<Document> {
    let s = read_sexp(text)?;
    let (tag, _) = s.tagged("a document")?;
    let need_sig = || {
        ctx.sig
            .ok_or_else(|| s.shape(format!("parsing `{tag}` needs a signature")))
    };
    Ok(match tag {
        "signature" => Document::Signature(signature_doc(&s)?),
        "formula" => {
            let sig = need_sig()?;
            let f = formula_doc(sig, &s)?;
            Document::Formula(sort_of(&f, sig).expect("checked while parsing"), f)
        }
        "model" => Document::Model(model_doc(need_sig()?, &s)?),
        "frame" => Document::Frame(frame_doc(need_sig()?, &s)?),
        "ml-model" => Document::MlModel(ml_model_doc(need_sig()?, &s)?),
        "proof" => Document::Proof(proof_doc(need_sig()?, &s)?),
        "assignment" => {
            let frame = ctx
                .frame
                .ok_or_else(|| s.shape("parsing `assignment` needs a frame"))?;
            Document::Assignment(frame.clone(), assignment_doc(frame, &s)?)
        }
        other => return Err(s.shape(format!("unknown document kind `{other}`"))),
    })
}

pub fn render_document(doc: &Document) -> String {
    match doc {
        Document::Signature(sig) => render_signature(sig),
        Document::Formula(sort, f) => format!("(formula {sort} {})", render_formula_node(f)),
        Document::Model(m) => render_model(m),
        Document::Frame(f) => render_frame(f),
        Document::MlModel(m) => render_ml_model(m),
        Document::Assignment(frame, g) => render_assignment(frame, g),
        Document::Proof(p) => render_proof(p),
    }
}
