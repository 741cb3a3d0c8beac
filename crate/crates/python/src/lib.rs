//! Python bindings.
//!
//! ```python
//! import semql_py as sq
//! schema = sq.Schema.fixture("concert_db")
//! tree = sq.lift("SELECT name FROM orchestra", schema)
//! print(tree, tree.actions())
//! print(sq.lower(tree, schema))
//! ```

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use semql::eval::{component_match_f1, duplicate_column_stats, exact_match, oov_rate};
use semql::linker::{link_question, FixtureKnowledge, KnowledgeSource, NoKnowledge};
use semql::semql::{parse_actions, print_actions};
use semql::{
    build_schema_graph, canonicalize, extract_skeleton, fixtures, from_actions, join_path,
    lift_query, load_spider_tables, lower_query, parse_semql, parse_sql, print_semql, print_sql,
    to_actions, validate, LiftOptions, Schema, SemQlTree, SqlQuery,
};

create_exception!(semql_py, SemQLError, PyException, "Raised for every toolkit error; the message starts with `[<ErrorName>]`.");

fn to_py(e: semql::Error) -> PyErr {
    SemQLError::new_err(format!("[{}] {e}", e.name()))
}

/// A database schema.
#[pyclass(name = "Schema", frozen, skip_from_py_object, module = "semql_py")]
#[derive(Clone)]
struct PySchema {
    inner: Schema,
}

#[pymethods]
impl PySchema {
    /// Every schema in a Spider `tables.json` document.
    #[staticmethod]
    fn load_all(text: &str) -> PyResult<Vec<PySchema>> {
        let schemas = load_spider_tables(text).map_err(to_py)?;
        Ok(schemas.into_iter().map(|inner| PySchema { inner }).collect())
    }

    /// A single Spider schema entry.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<PySchema> {
        let inner = Schema::from_spider_json(text).map_err(to_py)?;
        Ok(PySchema { inner })
    }

    /// One of the bundled toy schemas, e.g. `concert_db`.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<PySchema> {
        fixtures::by_name(name)
            .map(|inner| PySchema { inner })
            .ok_or_else(|| SemQLError::new_err(format!("[ResolutionError] no fixture `{name}`")))
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    fn tables(&self) -> Vec<String> {
        self.inner.tables.iter().map(|t| t.name.clone()).collect()
    }

    fn columns(&self, table: &str) -> PyResult<Vec<String>> {
        let t = self
            .inner
            .table(table)
            .ok_or_else(|| SemQLError::new_err(format!("[ResolutionError] no table `{table}`")))?;
        Ok(t.columns.iter().map(|c| c.original_name.clone()).collect())
    }

    /// Tables of the smallest join tree connecting `tables`, in join order.
    fn join_path(&self, tables: Vec<String>) -> PyResult<Vec<String>> {
        let graph = build_schema_graph(&self.inner);
        let names: Vec<&str> = tables.iter().map(String::as_str).collect();
        let path = join_path(&graph, &names).map_err(to_py)?;
        Ok(path.tables().map(str::to_string).collect())
    }

    fn __repr__(&self) -> String {
        format!("Schema({:?}, {} tables)", self.inner.name, self.inner.tables.len())
    }
}

/// A SemQL tree.
#[pyclass(name = "SemQLTree", frozen, eq, module = "semql_py")]
#[derive(PartialEq)]
struct PyTree {
    inner: SemQlTree,
}

#[pymethods]
impl PyTree {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<PyTree> {
        Ok(PyTree {
            inner: parse_semql(text).map_err(to_py)?,
        })
    }

    /// Rebuilds a tree from action lines such as `APPLY 3` or `TAB orchestra`.
    #[staticmethod]
    fn from_actions(actions: Vec<String>, schema: &PySchema) -> PyResult<PyTree> {
        let parsed = parse_actions(&actions.join("\n")).map_err(to_py)?;
        Ok(PyTree {
            inner: from_actions(&parsed, &schema.inner).map_err(to_py)?,
        })
    }

    fn actions(&self) -> Vec<String> {
        print_actions(&to_actions(&self.inner))
            .lines()
            .map(str::to_string)
            .collect()
    }

    fn skeleton(&self) -> String {
        extract_skeleton(&self.inner).to_string()
    }

    /// Violations against `schema`; empty when the tree is valid.
    fn validate(&self, schema: &PySchema) -> Vec<String> {
        validate(&self.inner, &schema.inner)
            .iter()
            .map(ToString::to_string)
            .collect()
    }

    fn __str__(&self) -> String {
        print_semql(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("SemQLTree({:?})", print_semql(&self.inner))
    }
}

/// A parsed SQL query, resolved against a schema.
#[pyclass(name = "SqlQuery", frozen, module = "semql_py")]
struct PySql {
    inner: SqlQuery,
}

#[pymethods]
impl PySql {
    #[staticmethod]
    fn parse(text: &str, schema: &PySchema) -> PyResult<PySql> {
        Ok(PySql {
            inner: parse_sql(text, &schema.inner).map_err(to_py)?,
        })
    }

    fn exact_match(&self, gold: &PySql) -> bool {
        exact_match(&self.inner, &gold.inner)
    }

    /// Component name to (precision, recall, f1), treating `self` as the
    /// prediction.
    fn component_f1(&self, gold: &PySql) -> BTreeMap<&'static str, (f64, f64, f64)> {
        component_match_f1(&self.inner, &gold.inner)
            .per_component
            .into_iter()
            .map(|(c, p)| (c, (p.precision, p.recall, p.f1)))
            .collect()
    }

    fn __eq__(&self, other: &PySql) -> bool {
        canonicalize(&self.inner) == canonicalize(&other.inner)
    }

    fn __str__(&self) -> String {
        print_sql(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("SqlQuery({:?})", print_sql(&self.inner))
    }
}

#[pyfunction]
#[pyo3(signature = (sql, schema, star_table=None))]
fn lift(sql: &str, schema: &PySchema, star_table: Option<String>) -> PyResult<PyTree> {
    let q = parse_sql(sql, &schema.inner).map_err(to_py)?;
    let opts = LiftOptions {
        star_table_override: star_table,
    };
    Ok(PyTree {
        inner: lift_query(&q, &schema.inner, &opts).map_err(to_py)?,
    })
}

#[pyfunction]
fn lower(tree: &PyTree, schema: &PySchema) -> PyResult<PySql> {
    Ok(PySql {
        inner: lower_query(&tree.inner, &schema.inner).map_err(to_py)?,
    })
}

/// Whether lifting and lowering `sql` reproduces it canonically.
#[pyfunction]
#[pyo3(signature = (sql, schema, star_table=None))]
fn roundtrip(sql: &str, schema: &PySchema, star_table: Option<String>) -> PyResult<bool> {
    let q = parse_sql(sql, &schema.inner).map_err(to_py)?;
    let tree = lift(sql, schema, star_table)?;
    let back = lower_query(&tree.inner, &schema.inner).map_err(to_py)?;
    Ok(canonicalize(&back) == canonicalize(&q))
}

/// The bundled knowledge fixture as text.
#[pyfunction]
fn bundled_knowledge() -> &'static str {
    fixtures::KNOWLEDGE
}

/// Links a question. `knowledge` is fixture text (term, relation, result per
/// tab-separated line); without it no value linking happens.
///
/// Returns a dict with `spans` as (text, type) pairs, `column_types` and
/// `warnings`.
#[pyfunction]
#[pyo3(signature = (question, schema, knowledge=None))]
fn link<'py>(
    py: Python<'py>,
    question: &str,
    schema: &PySchema,
    knowledge: Option<&str>,
) -> PyResult<Bound<'py, pyo3::types::PyDict>> {
    let ks: Box<dyn KnowledgeSource> = match knowledge {
        Some(text) => Box::new(FixtureKnowledge::parse(text).map_err(to_py)?),
        None => Box::new(NoKnowledge),
    };
    let r = link_question(question, &schema.inner, ks.as_ref());
    let spans: Vec<(String, String)> = r
        .spans
        .iter()
        .map(|s| (s.tokens.join(" "), format!("{:?}", s.span_type)))
        .collect();
    let types: BTreeMap<String, String> = r
        .column_types
        .iter()
        .map(|(c, t)| (c.clone(), format!("{t:?}")))
        .collect();
    let warnings: Vec<String> = r.warnings.iter().map(|w| format!("{}: {}", w.term, w.message)).collect();
    let out = pyo3::types::PyDict::new(py);
    out.set_item("spans", spans)?;
    out.set_item("column_types", types)?;
    out.set_item("warnings", warnings)?;
    Ok(out)
}

fn unwrap_schemas(schemas: &[PyRef<'_, PySchema>]) -> Vec<Schema> {
    schemas.iter().map(|s| s.inner.clone()).collect()
}

#[pyfunction(name = "oov_rate")]
fn py_oov_rate(train: Vec<PyRef<'_, PySchema>>, eval: Vec<PyRef<'_, PySchema>>) -> f64 {
    oov_rate(&unwrap_schemas(&train), &unwrap_schemas(&eval))
}

/// `schemas_with_duplicate_columns`, `mean_duplicate_column_fraction` and
/// `mean_duplicate_name_fraction`.
#[pyfunction(name = "duplicate_column_stats")]
fn py_duplicate_column_stats(schemas: Vec<PyRef<'_, PySchema>>) -> BTreeMap<&'static str, f64> {
    let d = duplicate_column_stats(&unwrap_schemas(&schemas));
    BTreeMap::from([
        ("schemas_with_duplicate_columns", d.schemas_with_duplicate_columns),
        ("mean_duplicate_column_fraction", d.mean_duplicate_column_fraction),
        ("mean_duplicate_name_fraction", d.mean_duplicate_name_fraction),
    ])
}

#[pymodule]
fn semql_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SemQLError", m.py().get_type::<SemQLError>())?;
    m.add_class::<PySchema>()?;
    m.add_class::<PyTree>()?;
    m.add_class::<PySql>()?;
    m.add_function(wrap_pyfunction!(lift, m)?)?;
    m.add_function(wrap_pyfunction!(lower, m)?)?;
    m.add_function(wrap_pyfunction!(roundtrip, m)?)?;
    m.add_function(wrap_pyfunction!(link, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_knowledge, m)?)?;
    m.add_function(wrap_pyfunction!(py_oov_rate, m)?)?;
    m.add_function(wrap_pyfunction!(py_duplicate_column_stats, m)?)?;
    Ok(())
}
