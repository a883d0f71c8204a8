//! Small named signatures and models shared by tests, the CLI and the
//! Python bindings.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::semantics::{Assignment, Frame, KripkeStructure};
use crate::syntax::{Name, Signature, Sort};

/// Sorts `s`, `t`; `f : t -> s`; `p : s`; `j : s`; state variables `x : s`, `u : t`.
pub fn sigma0() -> Signature {
    Signature::builder()
        .sort("s")
        .sort("t")
        .op("f", &["t"], "s")
        .prop("s", "p")
        .nom("s", "j")
        .svar("s", "x")
        .svar("t", "u")
        .build()
        .expect("fixture signature is valid")
}

/// `sigma0` with a second state variable per sort (`y : s`, `v : t`), a
/// propositional variable `q : t` and a nominal `k : t`.
pub fn sigma1() -> Signature {
    sigma0()
        .to_builder()
        .svar("s", "y")
        .svar("t", "v")
        .prop("t", "q")
        .nom("t", "k")
        .build()
        .expect("fixture signature is valid")
}

/// `W_s = {a, b}`, `W_t = {c, d}`, `R_f = {(a, c)}`, `V(p) = {a}`, `V(j) = {b}`.
pub fn m0() -> KripkeStructure {
    let sig = Arc::new(sigma0());
    let worlds = BTreeMap::from([
        (Sort::new("s"), vec![Name::from("a"), Name::from("b")]),
        (Sort::new("t"), vec![Name::from("c"), Name::from("d")]),
    ]);
    let rels = BTreeMap::from([(Name::from("f"), BTreeSet::from([vec![0, 0]]))]);
    let frame = Frame::new(sig, worlds, rels).expect("fixture frame is valid");
    let val = BTreeMap::from([
        (Name::from("p"), BTreeSet::from([0])),
        (Name::from("j"), BTreeSet::from([1])),
    ]);
    KripkeStructure::standard(frame, val).expect("fixture model is standard")
}

/// `g(x) = a`, `g(u) = c`.
pub fn g0(m: &KripkeStructure) -> Assignment {
    Assignment::from_names(m.frame(), &[("x", "a"), ("u", "c")]).expect("fixture assignment")
}

/// Polyadic signature for the soundness sweeps: `f : t -> s`,
/// `g : s t -> s`, `h : s -> s`, a constant `c : t`, propositional variables
/// `p : s`, `q : t`, nominals `j : s`, `k : t` and two state variables per
/// sort (`x`, `y : s`; `u`, `v : t`).
pub fn sigma_poly() -> Signature {
    sigma1()
        .to_builder()
        .op("g", &["s", "t"], "s")
        .op("h", &["s"], "s")
        .op("c", &[], "t")
        .build()
        .expect("fixture signature is valid")
}
