//! Python bindings for `isotower`. Structured results come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use isotower::matgroup;
use isotower::tower::{Selection, Tower, TowerParams};
use isotower::voltgraph::{Connectivity, DirectedMultigraph};
use isotower::volcano::{self, CraterSpec, GraphClass, TectonicParams};
use isotower::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParams(_) | Error::NotPrime(_) | Error::Parse(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (s,))
}

fn selection(s: &str) -> PyResult<Selection> {
    match s {
        "all" => Ok(Selection::All),
        "supersingular" => Ok(Selection::Supersingular),
        "ordinary" => Ok(Selection::Ordinary),
        _ => Err(PyValueError::new_err(format!("unknown selection {s:?}"))),
    }
}

#[pyfunction]
fn gl2_order(p: u64, n: u32) -> PyResult<u64> {
    matgroup::gl2_order(p, n).map_err(to_py)
}

#[pyfunction]
fn gl2_brute_count(m: u32) -> u64 {
    matgroup::gl2_brute_count(m)
}

#[pyfunction]
fn unit_index(m: u64, l: u64) -> PyResult<u64> {
    matgroup::unit_index(m, l).map_err(to_py)
}

/// Fraction of primes `l < bound` generating `(Z/p^2 level)^x`.
#[pyfunction]
fn generator_density<'py>(py: Python<'py>, p: u64, level: u64, bound: u64) -> PyResult<Bound<'py, PyAny>> {
    let d = matgroup::generator_density(p, level, bound).map_err(to_py)?;
    to_dict(py, &d)
}

#[pyclass(name = "Tower", unsendable)]
struct PyTower {
    inner: Tower,
}

#[pymethods]
impl PyTower {
    #[new]
    #[pyo3(signature = (q, l, p, level, n_max, k=None, selection="all", normalize=false))]
    #[allow(clippy::too_many_arguments)]
    fn new(q: u64, l: u64, p: u64, level: u64, n_max: u32, k: Option<u32>, selection: &str, normalize: bool) -> PyResult<Self> {
        let mut params = TowerParams::new(q, l, p, level, n_max).with_selection(self::selection(selection)?);
        if let Some(k) = k {
            params = params.with_k(k);
        }
        if normalize {
            params = params.normalized();
        }
        Ok(PyTower { inner: Tower::build(params).map_err(to_py)? })
    }

    #[getter]
    fn k(&self) -> u32 {
        self.inner.k
    }

    #[getter]
    fn num_curves(&self) -> usize {
        self.inner.curves.len()
    }

    #[getter]
    fn base_vertices(&self) -> usize {
        self.inner.base.num_vertices
    }

    #[getter]
    fn base_edges(&self) -> usize {
        self.inner.base.num_edges()
    }

    fn num_base_components(&self) -> usize {
        self.inner.base_components().count
    }

    /// `(vertices, edges)` of the derived graph at level `n`.
    fn level_size(&self, n: u32) -> PyResult<(usize, usize)> {
        let cover = self.inner.derived(&self.inner.region_all(), n).map_err(to_py)?;
        Ok((cover.total.num_vertices, cover.total.num_edges()))
    }

    fn component_count(&self, n: u32) -> PyResult<u64> {
        self.inner.component_count(&self.inner.region_all(), n).map_err(to_py)
    }

    fn derived_vs_direct<'py>(&self, py: Python<'py>, n: u32) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.derived_vs_direct(n, None).map_err(to_py)?)
    }

    fn classify_components<'py>(&self, py: Python<'py>, n: u32) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.classify_components(n).map_err(to_py)?)
    }

    #[pyo3(signature = (component, n, deck_cap=isotower::tower::DEFAULT_DECK_CAP))]
    fn galois_audit<'py>(&self, py: Python<'py>, component: usize, n: u32, deck_cap: u64) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.galois_audit(component, n, deck_cap).map_err(to_py)?)
    }

    fn y_tower_audit<'py>(&self, py: Python<'py>, n: u32, m: u32) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.y_tower_audit(n, m).map_err(to_py)?)
    }

    /// Voltages of the base edges at the top level, as `[[a, b], [c, d]]`.
    fn voltages(&self) -> Vec<[[u32; 2]; 2]> {
        self.inner.voltages.iter().map(|g| [[g.a, g.b], [g.c, g.d]]).collect()
    }
}

/// Graph plus crater colors for a generated volcano, crater or intertwinement.
#[pyclass(name = "Graph", unsendable)]
struct PyGraph {
    graph: DirectedMultigraph,
    colors: Vec<Option<volcano::EdgeColor>>,
    depth: Option<Vec<u32>>,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (num_vertices, edges, colors=None))]
    fn new(num_vertices: usize, edges: Vec<(u32, u32)>, colors: Option<Vec<Option<String>>>) -> PyResult<Self> {
        let graph = DirectedMultigraph::from_edges(num_vertices, edges).map_err(to_py)?;
        let colors = match colors {
            Some(c) => volcano::parse_colors(&c),
            None => vec![None; graph.num_edges()],
        };
        if colors.len() != graph.num_edges() {
            return Err(PyValueError::new_err("one color entry per edge expected"));
        }
        Ok(PyGraph { graph, colors, depth: None })
    }

    #[staticmethod]
    fn from_dot(text: &str) -> PyResult<Self> {
        let (graph, raw) = DirectedMultigraph::from_dot(text).map_err(to_py)?;
        Ok(PyGraph { graph, colors: volcano::parse_colors(&raw), depth: None })
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.graph.num_vertices
    }

    #[getter]
    fn edges(&self) -> Vec<(u32, u32)> {
        self.graph.edges.clone()
    }

    #[getter]
    fn colors(&self) -> Vec<Option<&'static str>> {
        self.colors.iter().map(|c| c.map(|c| c.name())).collect()
    }

    #[getter]
    fn depth(&self) -> Option<Vec<u32>> {
        self.depth.clone()
    }

    fn weak_components(&self) -> usize {
        self.graph.components(Connectivity::Weak).count
    }

    fn to_dot(&self, name: &str) -> String {
        volcano::colored_dot(&self.graph, &self.colors, name)
    }

    fn intertwine(&self) -> PyGraph {
        PyGraph {
            graph: volcano::double_intertwine(&self.graph),
            colors: volcano::double_intertwine_colors(&self.colors),
            depth: None,
        }
    }

    /// Classes: crater, volcano, tectonic_crater, tectonic_volcano, double_intertwinement.
    #[pyo3(signature = (class_name, l=2, depth=1))]
    fn recognize<'py>(&self, py: Python<'py>, class_name: &str, l: u64, depth: u32) -> PyResult<Bound<'py, PyAny>> {
        let class = match class_name {
            "crater" => GraphClass::Crater,
            "volcano" => GraphClass::Volcano { l, depth },
            "tectonic_crater" => GraphClass::TectonicCrater,
            "tectonic_volcano" => GraphClass::TectonicVolcano { l, depth },
            "double_intertwinement" => GraphClass::DoubleIntertwinement,
            _ => return Err(PyValueError::new_err(format!("unknown class {class_name:?}"))),
        };
        to_dict(py, &volcano::recognize(&self.graph, &self.colors, class))
    }
}

#[pyfunction]
fn tectonic_crater(r: u64, s: u64, t: u64, c: u64) -> PyResult<PyGraph> {
    let (graph, colors) = volcano::gen_tectonic_crater(TectonicParams::new(r, s, t, c)).map_err(to_py)?;
    Ok(PyGraph { graph, colors, depth: None })
}

/// `crater` is `"cycle:LEN"`, `"isolated:COUNT"` or `"tectonic:r,s,t,c"`.
#[pyfunction]
fn gen_volcano(l: u64, crater: &str, depth: u32) -> PyResult<PyGraph> {
    let bad = || PyValueError::new_err(format!("bad crater {crater:?}"));
    let (kind, arg) = crater.split_once(':').ok_or_else(bad)?;
    let spec = match kind {
        "cycle" => CraterSpec::Cycle(arg.parse().map_err(|_| bad())?),
        "isolated" => CraterSpec::Isolated(arg.parse().map_err(|_| bad())?),
        "tectonic" => CraterSpec::Tectonic(TectonicParams::parse(arg).map_err(to_py)?),
        _ => return Err(bad()),
    };
    let d = volcano::gen_volcano(l, spec, depth).map_err(to_py)?;
    Ok(PyGraph { graph: d.graph, colors: d.edge_colors, depth: Some(d.depth) })
}

#[pymodule]
pub fn isotower_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gl2_order, m)?)?;
    m.add_function(wrap_pyfunction!(gl2_brute_count, m)?)?;
    m.add_function(wrap_pyfunction!(unit_index, m)?)?;
    m.add_function(wrap_pyfunction!(generator_density, m)?)?;
    m.add_function(wrap_pyfunction!(tectonic_crater, m)?)?;
    m.add_function(wrap_pyfunction!(gen_volcano, m)?)?;
    m.add_class::<PyTower>()?;
    m.add_class::<PyGraph>()?;
    Ok(())
}
