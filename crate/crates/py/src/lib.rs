//! Python bindings: groups, chains, certificates and the CND checker.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use rabox::chains::{BoxFamily, BoxSpace, Separation};
use rabox::fibred::{verify_level, FibredCce, SweepOptions};
use rabox::groups::{GroupElement, GroupSpec};
use rabox::hilbert::{cnd_check as core_cnd_check, CndOptions, Cocycle, CocycleKind};
use rabox::manifest::{CertificateManifest, OracleSpec};
use rabox::pipeline::{build_psi, forward, BackwardOptions, MeanProvider};
use rabox::{rational, Error};

create_exception!(pyrabox, RaboxError, PyException);
create_exception!(pyrabox, ScopeError, RaboxError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Scope(_) => ScopeError::new_err(e.to_string()),
        _ => RaboxError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for rabox::error::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// A finitely generated group with its word metric.
#[pyclass(frozen, module = "pyrabox")]
struct Group {
    inner: rabox::groups::Group,
}

impl Group {
    fn elem(&self, s: &str) -> PyResult<GroupElement> {
        self.inner.parse_element(s).py()
    }
}

#[pymethods]
impl Group {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        let spec: GroupSpec = spec.parse().py()?;
        Ok(Group { inner: rabox::groups::Group::new(spec).py()? })
    }

    #[getter]
    fn spec(&self) -> String {
        self.inner.spec().to_string()
    }

    /// Number of elements, or `None` for infinite groups.
    #[getter]
    fn order(&self) -> Option<u64> {
        self.inner.order()
    }

    fn identity(&self) -> String {
        self.inner.identity().to_string()
    }

    fn ball(&self, radius: u32) -> PyResult<Vec<String>> {
        Ok(self.inner.ball(radius).py()?.iter().map(ToString::to_string).collect())
    }

    fn word_length(&self, g: &str) -> PyResult<u32> {
        self.inner.word_length(&self.elem(g)?).py()
    }

    fn multiply(&self, g: &str, h: &str) -> PyResult<String> {
        Ok(self.inner.multiply(&self.elem(g)?, &self.elem(h)?).py()?.to_string())
    }

    fn inverse(&self, g: &str) -> PyResult<String> {
        Ok(self.inner.inverse(&self.elem(g)?).to_string())
    }

    fn distance(&self, g: &str, h: &str) -> PyResult<u32> {
        self.inner.distance(&self.elem(g)?, &self.elem(h)?).py()
    }

    fn __repr__(&self) -> String {
        format!("Group('{}')", self.inner.spec())
    }
}

/// A chain of finite-index normal subgroups and its box family.
#[pyclass(frozen, module = "pyrabox")]
struct Chain {
    inner: rabox::chains::Chain,
}

#[pymethods]
impl Chain {
    #[new]
    fn new(group: &str, chain: &str) -> PyResult<Self> {
        let g = Group::new(group)?;
        Ok(Chain { inner: rabox::chains::Chain::new(g.inner, chain.parse().py()?).py()? })
    }

    #[getter]
    fn group(&self) -> Group {
        Group { inner: self.inner.group().clone() }
    }

    #[getter]
    fn levels(&self) -> Vec<u32> {
        self.inner.level_indices()
    }

    /// The quotient group `G/G_n`.
    fn quotient(&self, n: u32) -> PyResult<Group> {
        Ok(Group { inner: self.inner.quotient(n).py()?.group })
    }

    fn project(&self, n: u32, g: &str) -> PyResult<String> {
        let g = self.inner.group().parse_element(g).py()?;
        Ok(self.inner.project(n, &g).py()?.to_string())
    }

    fn quotient_length(&self, n: u32, g: &str) -> PyResult<u32> {
        let g = self.inner.group().parse_element(g).py()?;
        self.inner.quotient_length(n, &g).py()
    }

    /// `(kind, radius)` with kind one of `radius`, `at-least`, `unbounded`.
    fn separation(&self, n: u32) -> PyResult<(&'static str, Option<u32>)> {
        Ok(match self.inner.separation(n).py()? {
            Separation::Radius(r) => ("radius", Some(r)),
            Separation::AtLeast(r) => ("at-least", Some(r)),
            Separation::Unbounded => ("unbounded", None),
        })
    }

    /// Separation between components `n` and `m` in the glued box space.
    fn component_separation(&self, n: u32, m: u32) -> PyResult<u64> {
        BoxSpace::new(BoxFamily::new(self.inner.clone())).component_separation(n, m).py()
    }

    fn __repr__(&self) -> String {
        format!("Chain('{}', '{}')", self.inner.group().spec(), self.inner.spec())
    }
}

/// A fibred cofinitely-coarse embedding of a box family.
#[pyclass(frozen, module = "pyrabox")]
struct Certificate {
    emb: FibredCce,
    manifest: CertificateManifest,
}

#[pymethods]
impl Certificate {
    /// Builds the certificate induced by a cocycle on the group.
    #[staticmethod]
    fn forward(group: &str, chain: &str, cocycle: &str, max_r: u32) -> PyResult<Self> {
        let chain = Chain::new(group, chain)?.inner;
        let kind: CocycleKind = cocycle.parse().py()?;
        let c = Cocycle::new(chain.group().clone(), kind).py()?;
        let emb = forward(&chain, &c, max_r).py()?;
        let manifest = CertificateManifest::describe(&emb, OracleSpec::Cocycle { cocycle: kind });
        Ok(Certificate { emb, manifest })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let manifest = CertificateManifest::from_json(text).py()?;
        let emb = manifest.build(None).py()?;
        Ok(Certificate { emb, manifest })
    }

    fn to_json(&self) -> PyResult<String> {
        self.manifest.to_json().py()
    }

    #[getter]
    fn label(&self) -> String {
        self.emb.label.clone()
    }

    #[getter]
    fn max_r(&self) -> u32 {
        self.emb.max_r
    }

    fn excluded(&self, r: u32) -> PyResult<Vec<u32>> {
        Ok(self.emb.excluded(r).py()?.to_vec())
    }

    fn admissible_levels(&self, r: u32) -> PyResult<Vec<u32>> {
        self.emb.admissible_levels(r).py()
    }

    /// Runs both fibred conditions on every admissible level at radius `r`.
    #[pyo3(signature = (r, samples = 400, seed = 0))]
    fn verify(&self, r: u32, samples: usize, seed: u64) -> PyResult<bool> {
        let opts = SweepOptions { samples, seed, ..SweepOptions::default() };
        for n in self.emb.admissible_levels(r).py()? {
            if !verify_level(&self.emb, n, r, &opts).py()?.passed() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Builds `ψ_r` on `ball(r)`. Values are exact rationals written as strings.
    #[pyo3(signature = (r, mean = "uniform"))]
    fn backward(&self, r: u32, mean: &str) -> PyResult<Psi> {
        let mean: MeanProvider = mean.parse().py()?;
        let b = build_psi(&self.emb, r, mean, &BackwardOptions::default()).py()?;
        let passed = b.passed();
        let values = b.table.values.iter().map(|(g, v)| (g.to_string(), v.to_string())).collect();
        let defect_bounds = b.table.defect_bounds.iter().map(|(g, v)| (g.to_string(), v.to_string())).collect();
        Ok(Psi { r, level: b.table.level, values, defect_bounds, passed })
    }

    fn __repr__(&self) -> String {
        format!("Certificate('{}', max_r={})", self.emb.label, self.emb.max_r)
    }
}

/// Output of the backward construction at one radius.
#[pyclass(frozen, get_all, module = "pyrabox")]
struct Psi {
    r: u32,
    level: u32,
    values: BTreeMap<String, String>,
    defect_bounds: BTreeMap<String, String>,
    passed: bool,
}

/// Result of a CND check on one kernel matrix.
#[pyclass(frozen, get_all, module = "pyrabox")]
struct CndVerdict {
    is_cnd: bool,
    max_eigenvalue: f64,
    sampled_max_form: String,
    sampling_agrees: bool,
}

/// Checks that a symmetric kernel is conditionally negative definite.
/// Entries may be ints or rational strings such as `"3/2"`.
#[pyfunction]
#[pyo3(signature = (kernel, samples = 10_000, seed = 0, tol = 1e-9))]
fn cnd_check(kernel: Vec<Vec<Bound<'_, PyAny>>>, samples: usize, seed: u64, tol: f64) -> PyResult<CndVerdict> {
    let mut rows = Vec::with_capacity(kernel.len());
    for row in &kernel {
        let mut out = Vec::with_capacity(row.len());
        for x in row {
            out.push(rational::parse(&x.str()?.to_string()).py()?);
        }
        rows.push(out);
    }
    let opts = CndOptions { tol, samples, seed, ..CndOptions::default() };
    let v = core_cnd_check(&rows, &opts).py()?;
    Ok(CndVerdict {
        is_cnd: v.is_cnd,
        max_eigenvalue: v.max_eigenvalue,
        sampled_max_form: v.sampled_max_form.to_string(),
        sampling_agrees: v.sampling_agrees,
    })
}

/// Runs the command-line tool with `args` (without the program name) and
/// returns its exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    rabox::cli::run(std::iter::once("rabox".to_string()).chain(args))
}

#[pymodule]
fn pyrabox(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Group>()?;
    m.add_class::<Chain>()?;
    m.add_class::<Certificate>()?;
    m.add_class::<Psi>()?;
    m.add_class::<CndVerdict>()?;
    m.add_function(wrap_pyfunction!(cnd_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("RaboxError", m.py().get_type::<RaboxError>())?;
    m.add("ScopeError", m.py().get_type::<ScopeError>())?;
    Ok(())
}
