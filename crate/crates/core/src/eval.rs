//! Exact and component matching between predicted and gold queries, and
//! corpus statistics over schemas.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{load_spider_tables_lenient, tokenize_identifier, Schema};
use crate::sql::{canonicalize, CanonicalForm, SqlQuery};

pub const COMPONENTS: [&str; 7] = [
    "select", "where", "group_by", "having", "order_by", "keywords", "from",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub exact: bool,
    pub per_component: BTreeMap<&'static str, Prf>,
}

pub fn exact_match(pred: &SqlQuery, gold: &SqlQuery) -> bool {
    canonicalize(pred) == canonicalize(gold)
}

/// Precision, recall and F1 of two multisets. Two empty sets score 1.0.
pub fn multiset_prf<T: Ord>(mut pred: Vec<T>, mut gold: Vec<T>) -> Prf {
    if pred.is_empty() && gold.is_empty() {
        return Prf {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
        };
    }
    pred.sort();
    gold.sort();
    let (mut i, mut j, mut hits) = (0, 0, 0usize);
    while i < pred.len() && j < gold.len() {
        match pred[i].cmp(&gold[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                hits += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let ratio = |n: usize| if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    let (precision, recall) = (ratio(pred.len()), ratio(gold.len()));
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Prf {
        precision,
        recall,
        f1,
    }
}

fn component_prf(name: &str, p: &CanonicalForm, g: &CanonicalForm) -> Prf {
    match name {
        "select" => multiset_prf(p.select.clone(), g.select.clone()),
        "where" => multiset_prf(p.where_leaves(), g.where_leaves()),
        "group_by" => multiset_prf(
            p.group_by.iter().collect(),
            g.group_by.iter().collect(),
        ),
        "having" => multiset_prf(p.having_leaves(), g.having_leaves()),
        "order_by" => multiset_prf(
            p.order_by.iter().collect(),
            g.order_by.iter().collect(),
        ),
        "keywords" => multiset_prf(p.keywords.iter().collect(), g.keywords.iter().collect()),
        "from" => multiset_prf(p.from.iter().collect(), g.from.iter().collect()),
        _ => unreachable!("unknown component {name}"),
    }
}

/// Per-clause set F1 on canonical components of the outermost query.
/// Literal values never count.
pub fn component_match_f1(pred: &SqlQuery, gold: &SqlQuery) -> MatchReport {
    let (p, g) = (canonicalize(pred), canonicalize(gold));
    MatchReport {
        exact: p == g,
        per_component: COMPONENTS
            .iter()
            .map(|c| (*c, component_prf(c, &p, &g)))
            .collect(),
    }
}

/// Totals over many reports. Built by summation only, so the result does not
/// depend on the order reports arrive in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub count: usize,
    pub exact: usize,
    pub exact_accuracy: f64,
    pub mean_f1: BTreeMap<&'static str, f64>,
}

pub fn summarize(reports: &[MatchReport]) -> EvalSummary {
    let count = reports.len();
    let exact = reports.iter().filter(|r| r.exact).count();
    let mean = |total: f64| if count == 0 { 0.0 } else { total / count as f64 };
    EvalSummary {
        count,
        exact,
        exact_accuracy: mean(exact as f64),
        mean_f1: COMPONENTS
            .iter()
            .map(|c| {
                // Summing in sorted order makes the total independent of
                // report order down to the last bit.
                let mut f1s: Vec<f64> = reports.iter().map(|r| r.per_component[c].f1).collect();
                f1s.sort_by(f64::total_cmp);
                (*c, mean(f1s.iter().sum()))
            })
            .collect(),
    }
}

/// Lower-cased words of every table and column name.
pub fn schema_vocabulary(schema: &Schema) -> BTreeSet<String> {
    let mut words = BTreeSet::new();
    for t in &schema.tables {
        words.extend(tokenize_identifier(&t.name));
        for c in &t.columns {
            words.extend(c.name.iter().cloned());
        }
    }
    words
}

/// Fraction of distinct schema words in `eval_schemas` that never occur in
/// `train_schemas`.
pub fn oov_rate(train_schemas: &[Schema], eval_schemas: &[Schema]) -> f64 {
    let train: BTreeSet<String> = train_schemas.iter().flat_map(schema_vocabulary).collect();
    let eval: BTreeSet<String> = eval_schemas.iter().flat_map(schema_vocabulary).collect();
    if eval.is_empty() {
        return 0.0;
    }
    eval.iter().filter(|w| !train.contains(*w)).count() as f64 / eval.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DuplicateStats {
    /// Schemas where some column name occurs in more than one table.
    pub schemas_with_duplicate_columns: f64,
    /// Mean over schemas of (column instances whose name occurs in more than
    /// one table) / (column instances).
    pub mean_duplicate_column_fraction: f64,
    /// Same, counting distinct names instead of instances.
    pub mean_duplicate_name_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorpusStats {
    pub oov_rate: f64,
    pub schemas_with_duplicate_columns: f64,
    pub mean_duplicate_column_fraction: f64,
}

/// (duplicated instances, instances, duplicated names, names) of one schema.
fn duplicate_counts(schema: &Schema) -> (usize, usize, usize, usize) {
    let mut tables_per_name: HashMap<String, BTreeSet<usize>> = HashMap::new();
    let mut instances = 0;
    for (i, t) in schema.tables.iter().enumerate() {
        for c in &t.columns {
            tables_per_name
                .entry(c.original_name.to_lowercase())
                .or_default()
                .insert(i);
            instances += 1;
        }
    }
    let mut dup_instances = 0;
    for t in &schema.tables {
        for c in &t.columns {
            if tables_per_name[&c.original_name.to_lowercase()].len() > 1 {
                dup_instances += 1;
            }
        }
    }
    let dup_names = tables_per_name.values().filter(|s| s.len() > 1).count();
    (dup_instances, instances, dup_names, tables_per_name.len())
}

pub fn duplicate_column_stats(schemas: &[Schema]) -> DuplicateStats {
    if schemas.is_empty() {
        return DuplicateStats {
            schemas_with_duplicate_columns: 0.0,
            mean_duplicate_column_fraction: 0.0,
            mean_duplicate_name_fraction: 0.0,
        };
    }
    let n = schemas.len() as f64;
    let frac = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut with_dups = 0usize;
    let (mut inst, mut names) = (Vec::new(), Vec::new());
    for s in schemas {
        let (di, i, dn, total_names) = duplicate_counts(s);
        if dn > 0 {
            with_dups += 1;
        }
        inst.push(frac(di, i));
        names.push(frac(dn, total_names));
    }
    // Sorted summation keeps the means independent of schema order.
    let sum = |mut xs: Vec<f64>| {
        xs.sort_by(f64::total_cmp);
        xs.iter().sum::<f64>()
    };
    let (inst_sum, name_sum) = (sum(inst), sum(names));
    DuplicateStats {
        schemas_with_duplicate_columns: with_dups as f64 / n,
        mean_duplicate_column_fraction: inst_sum / n,
        mean_duplicate_name_fraction: name_sum / n,
    }
}

pub fn corpus_stats(train_schemas: &[Schema], eval_schemas: &[Schema]) -> CorpusStats {
    let all: Vec<Schema> = train_schemas.iter().chain(eval_schemas).cloned().collect();
    let d = duplicate_column_stats(&all);
    CorpusStats {
        oov_rate: oov_rate(train_schemas, eval_schemas),
        schemas_with_duplicate_columns: d.schemas_with_duplicate_columns,
        mean_duplicate_column_fraction: d.mean_duplicate_column_fraction,
    }
}

/// Schemas of a Spider release split by the example files that use them.
#[derive(Debug, Clone)]
pub struct SpiderSplit {
    pub train: Vec<Schema>,
    pub eval: Vec<Schema>,
    /// Entries of `tables.json` that failed to load.
    pub skipped: Vec<(String, Error)>,
}

/// Database ids referenced by a Spider example file, a JSON list of objects
/// carrying `db_id`.
pub fn example_db_ids(text: &str) -> Result<BTreeSet<String>> {
    #[derive(Deserialize)]
    struct Example {
        db_id: String,
    }
    let examples: Vec<Example> =
        serde_json::from_str(text).map_err(|e| Error::SchemaFormat(e.to_string()))?;
    Ok(examples.into_iter().map(|e| e.db_id).collect())
}

/// Reads `tables.json`, `train_spider.json` (plus `train_others.json` when
/// present) and `dev.json` from a Spider directory.
pub fn load_spider_split(dir: &Path) -> Result<SpiderSplit> {
    let read = |name: &str| {
        fs::read_to_string(dir.join(name))
            .map_err(|e| Error::SchemaFormat(format!("{}: {e}", dir.join(name).display())))
    };
    let (schemas, skipped) = load_spider_tables_lenient(&read("tables.json")?)?;
    let mut train_ids = example_db_ids(&read("train_spider.json")?)?;
    if dir.join("train_others.json").exists() {
        train_ids.extend(example_db_ids(&read("train_others.json")?)?);
    }
    let eval_ids = example_db_ids(&read("dev.json")?)?;
    let pick = |ids: &BTreeSet<String>| -> Vec<Schema> {
        schemas.iter().filter(|s| ids.contains(&s.name)).cloned().collect()
    };
    Ok(SpiderSplit {
        train: pick(&train_ids),
        eval: pick(&eval_ids),
        skipped,
    })
}
