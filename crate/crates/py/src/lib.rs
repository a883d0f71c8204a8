//! Python bindings. Objects are built from and rendered to the canonical
//! s-expression text format.

use std::collections::BTreeMap;
use std::sync::Arc;

use hyml::bridge::{self, ExtendedSignature};
use hyml::matching::{self, MLModel, Valuation};
use hyml::proof;
use hyml::semantics::{self, Assignment, KripkeStructure, SizeBounds};
use hyml::soundness::{self, SweepConfig};
use hyml::syntax::{self as syn, SystemId};
use hyml::{fixtures, textio};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(
    pyhyml,
    HymlError,
    PyException,
    "Any error raised by the library."
);

fn err(e: impl std::fmt::Display) -> PyErr {
    HymlError::new_err(e.to_string())
}

fn system(name: &str) -> PyResult<SystemId> {
    SystemId::parse(name).ok_or_else(|| err(format!("unknown system `{name}`")))
}

#[pyclass(frozen, skip_from_py_object, module = "pyhyml")]
#[derive(Clone)]
struct Signature {
    inner: Arc<syn::Signature>,
}

#[pymethods]
impl Signature {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = textio::parse_signature(text).map_err(err)?;
        Ok(Signature {
            inner: Arc::new(inner),
        })
    }

    /// One of the built-in signatures: `sigma0`, `sigma1` or `sigma_poly`.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        let inner = match name {
            "sigma0" => fixtures::sigma0(),
            "sigma1" => fixtures::sigma1(),
            "sigma_poly" => fixtures::sigma_poly(),
            _ => return Err(err(format!("unknown fixture `{name}`"))),
        };
        Ok(Signature {
            inner: Arc::new(inner),
        })
    }

    fn sorts(&self) -> Vec<String> {
        self.inner.sorts().map(|s| s.to_string()).collect()
    }

    fn render(&self) -> String {
        textio::render_signature(&self.inner)
    }

    fn __repr__(&self) -> String {
        self.render()
    }
}

#[pyclass(frozen, skip_from_py_object, module = "pyhyml")]
#[derive(Clone)]
struct Formula {
    sig: Arc<syn::Signature>,
    inner: syn::Formula,
}

#[pymethods]
impl Formula {
    /// Parses `(formula SORT F)`.
    #[staticmethod]
    fn parse(sig: &Signature, text: &str) -> PyResult<Self> {
        let inner = textio::parse_formula(&sig.inner, text).map_err(err)?;
        Ok(Formula {
            sig: sig.inner.clone(),
            inner,
        })
    }

    #[getter]
    fn sort(&self) -> PyResult<String> {
        Ok(syn::sort_of(&self.inner, &self.sig)
            .map_err(err)?
            .to_string())
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn free_svars(&self) -> Vec<String> {
        syn::free_svars(&self.inner)
            .iter()
            .map(|x| x.to_string())
            .collect()
    }

    fn render(&self) -> PyResult<String> {
        textio::render_formula(&self.sig, &self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        self.inner.to_string()
    }

    fn __eq__(&self, other: &Formula) -> bool {
        self.inner == other.inner
    }
}

#[pyclass(frozen, skip_from_py_object, module = "pyhyml")]
#[derive(Clone)]
struct Model {
    inner: KripkeStructure,
}

impl Model {
    fn assignment(&self, assign: Option<&str>) -> PyResult<Assignment> {
        match assign {
            Some(text) => textio::parse_assignment(self.inner.frame(), text).map_err(err),
            None => Ok(Assignment::first_worlds(self.inner.frame())),
        }
    }
}

#[pymethods]
impl Model {
    /// Parses a `(model ...)` document; nominals must be singletons.
    #[staticmethod]
    fn parse(sig: &Signature, text: &str) -> PyResult<Self> {
        Ok(Model {
            inner: textio::parse_model(&sig.inner, text).map_err(err)?,
        })
    }

    /// A random standard model with at most `max_size` worlds per sort.
    #[staticmethod]
    #[pyo3(signature = (sig, seed, max_size = 3))]
    fn random(sig: &Signature, seed: u64, max_size: usize) -> Self {
        let bounds = SizeBounds::uniform(&sig.inner, max_size);
        Model {
            inner: semantics::random_model(&sig.inner, &bounds, seed).0,
        }
    }

    /// Truth of `formula` at the named world. Unlisted state variables
    /// denote the first world of their sort.
    #[pyo3(signature = (formula, world, assign = None, system = "hybrid-at-forall"))]
    fn satisfies(
        &self,
        formula: &Formula,
        world: &str,
        assign: Option<&str>,
        system: &str,
    ) -> PyResult<bool> {
        let sort = syn::sort_of(&formula.inner, self.inner.signature()).map_err(err)?;
        let w = self
            .inner
            .frame()
            .world_of_sort(world, &sort)
            .map_err(err)?;
        let g = self.assignment(assign)?;
        semantics::satisfies(&self.inner, &g, w, &formula.inner, self::system(system)?).map_err(err)
    }

    #[pyo3(signature = (formula, system = "hybrid-at-forall"))]
    fn valid(&self, formula: &Formula, system: &str) -> PyResult<bool> {
        semantics::valid_in_model(&self.inner, &formula.inner, self::system(system)?).map_err(err)
    }

    /// `None` when valid, else `(world, {var: world})`.
    #[pyo3(signature = (formula, system = "hybrid-at-forall"))]
    fn countermodel(
        &self,
        formula: &Formula,
        system: &str,
    ) -> PyResult<Option<(String, BTreeMap<String, String>)>> {
        let found =
            semantics::find_counterexample(&self.inner, &formula.inner, self::system(system)?)
                .map_err(err)?;
        let Some(c) = found else { return Ok(None) };
        let frame = self.inner.frame();
        let sort = syn::sort_of(&formula.inner, self.inner.signature()).map_err(err)?;
        let names = c
            .assignment
            .iter()
            .map(|(x, &w)| {
                let (_, s) = frame
                    .signature()
                    .symbol(x)
                    .expect("assigned variable is declared");
                (x.to_string(), frame.world_name(s, w).to_string())
            })
            .collect();
        Ok(Some((frame.world_name(&sort, c.world).to_string(), names)))
    }

    /// The Matching Logic model of this frame, with the valuation induced
    /// by the assignment.
    #[pyo3(signature = (assign = None))]
    fn to_ml(&self, assign: Option<&str>) -> PyResult<(MlModel, BTreeMap<String, usize>)> {
        let g = self.assignment(assign)?;
        let (m, rho) = bridge::ml_of_hmodl(self.inner.frame(), &g);
        let rho = rho
            .as_map()
            .iter()
            .map(|(k, &v)| (k.to_string(), v))
            .collect();
        Ok((MlModel { inner: m }, rho))
    }

    fn render(&self) -> String {
        textio::render_model(&self.inner)
    }

    fn __repr__(&self) -> String {
        self.render()
    }
}

#[pyclass(frozen, skip_from_py_object, name = "MLModel", module = "pyhyml")]
#[derive(Clone)]
struct MlModel {
    inner: MLModel,
}

#[pymethods]
impl MlModel {
    #[staticmethod]
    fn parse(sig: &Signature, text: &str) -> PyResult<Self> {
        Ok(MlModel {
            inner: textio::parse_ml_model(&sig.inner, text).map_err(err)?,
        })
    }

    /// Extension of a pattern under a valuation, as element indices.
    #[pyo3(signature = (formula, valuation = None))]
    fn extension(
        &self,
        formula: &Formula,
        valuation: Option<BTreeMap<String, usize>>,
    ) -> PyResult<Vec<usize>> {
        let rho = self.valuation(valuation)?;
        Ok(matching::evaluate(&self.inner, &rho, &formula.inner)
            .map_err(err)?
            .ones()
            .collect())
    }

    /// True when the pattern's extension is the whole carrier under every
    /// valuation.
    fn satisfies(&self, formula: &Formula) -> PyResult<bool> {
        matching::ml_satisfies(&self.inner, &formula.inner).map_err(err)
    }

    /// The frame of this model rendered as a Kripke model with empty
    /// propositional variables.
    #[pyo3(signature = (valuation = None))]
    fn to_frame(&self, valuation: Option<BTreeMap<String, usize>>) -> PyResult<String> {
        let rho = self.valuation(valuation)?;
        let (frame, _) = bridge::hmodl_of_ml(&self.inner, &rho);
        Ok(textio::render_frame(&frame))
    }

    /// Compares Matching Logic and frame satisfaction for a state-variable
    /// only formula.
    #[pyo3(signature = (formula, valuation = None))]
    fn prop_equiv(
        &self,
        formula: &Formula,
        valuation: Option<BTreeMap<String, usize>>,
    ) -> PyResult<bool> {
        let rho = self.valuation(valuation)?;
        Ok(bridge::check_prop_equiv(&formula.inner, &self.inner, &rho)
            .map_err(err)?
            .agrees())
    }

    fn render(&self) -> String {
        textio::render_ml_model(&self.inner)
    }

    fn __repr__(&self) -> String {
        self.render()
    }
}

impl MlModel {
    fn valuation(&self, given: Option<BTreeMap<String, usize>>) -> PyResult<Valuation> {
        let mut map = Valuation::first_elements(&self.inner).as_map().clone();
        for (k, v) in given.unwrap_or_default() {
            map.insert(k.as_str().into(), v);
        }
        Valuation::new(&self.inner, map).map_err(err)
    }
}

/// Checks a proof script. Returns `(ok, steps, failure message or None)`.
#[pyfunction]
fn check_proof(sig: &Signature, text: &str) -> PyResult<(bool, usize, Option<String>)> {
    let script = textio::parse_proof(&sig.inner, text).map_err(err)?;
    let report = proof::check_proof(&script, &sig.inner);
    let failure = report
        .failure
        .as_ref()
        .map(|f| format!("step {}: {}", f.step, f.error));
    Ok((report.is_ok(), report.steps, failure))
}

/// Exhaustive comparison of Matching Logic and frame satisfaction.
/// Returns `(formulas, models, checks, disagreements)`.
#[pyfunction]
#[pyo3(signature = (sig, max_depth = 2, max_size = 2))]
fn prop_equiv_sweep(
    py: Python<'_>,
    sig: &Signature,
    max_depth: usize,
    max_size: usize,
) -> PyResult<(usize, usize, u64, u64)> {
    let s = py
        .detach(|| bridge::prop_equiv_sweep(&sig.inner, max_depth, max_size))
        .map_err(err)?;
    Ok((s.formulas, s.models, s.checks, s.disagreements))
}

/// Validity of `formula` in `model` against validity of its translation
/// in the constant-interpreting Matching Logic model.
/// Returns `(constraints_hold, hybrid_valid, ml_valid)`.
#[pyfunction]
fn constants_check(model: &Model, formula: &Formula) -> PyResult<(bool, bool, bool)> {
    let ext = ExtendedSignature::new(model.inner.frame().signature_arc().clone()).map_err(err)?;
    let r = bridge::check_thm_ml2_semantic(&ext, &model.inner, &formula.inner).map_err(err)?;
    Ok((r.gamma_holds, r.hybrid_valid, r.ml_valid))
}

/// Soundness sweep of every axiom scheme and rule on random models.
/// Returns `{name: (instances, checks, failures)}`.
#[pyfunction]
#[pyo3(signature = (sig, samples = 20, models = 10, seed = 7))]
fn validate_axioms(
    py: Python<'_>,
    sig: &Signature,
    samples: usize,
    models: usize,
    seed: u64,
) -> BTreeMap<String, (usize, usize, usize)> {
    let cfg = SweepConfig {
        samples,
        models,
        seed,
        ..SweepConfig::default()
    };
    py.detach(|| {
        let mut out = BTreeMap::new();
        let axioms = soundness::axiom_sweep(&sig.inner, &cfg);
        let t = &axioms.tautologies;
        out.insert("tautology".to_string(), (t.instances, t.checks, t.failures));
        for (k, t) in &axioms.schemes {
            out.insert(format!("axiom {k}"), (t.instances, t.checks, t.failures));
        }
        for (k, t) in soundness::rule_sweep(&sig.inner, &cfg) {
            out.insert(format!("rule {k}"), (t.instances, t.checks, t.failures));
        }
        out
    })
}

#[pymodule]
fn pyhyml(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HymlError", m.py().get_type::<HymlError>())?;
    m.add_class::<Signature>()?;
    m.add_class::<Formula>()?;
    m.add_class::<Model>()?;
    m.add_class::<MlModel>()?;
    m.add_function(wrap_pyfunction!(check_proof, m)?)?;
    m.add_function(wrap_pyfunction!(prop_equiv_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(constants_check, m)?)?;
    m.add_function(wrap_pyfunction!(validate_axioms, m)?)?;
    Ok(())
}
