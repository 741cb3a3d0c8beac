//! Database schemas and Spider `tables.json` ingestion.
//!
//! Identifiers are matched case-insensitively everywhere; the spelling stored
//! in the schema is the one echoed back on output.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Splits an identifier into lower-cased words on underscores and whitespace.
pub fn tokenize_identifier(name: &str) -> Vec<String> {
    let words: Vec<String> = name
        .split(|c: char| c == '_' || c.is_whitespace())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    if words.is_empty() {
        vec![name.to_lowercase()]
    } else {
        words
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    /// Lower-cased word tokens of the name.
    pub name: Vec<String>,
    pub original_name: String,
}

impl Column {
    pub fn new(original_name: impl Into<String>) -> Self {
        let original_name = original_name.into();
        Column {
            name: tokenize_identifier(&original_name),
            original_name,
        }
    }

    pub fn matches(&self, name: &str) -> bool {
        self.original_name.eq_ignore_ascii_case(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub primary_key: Option<usize>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str], primary_key: Option<usize>) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| Column::new(*c)).collect(),
            primary_key,
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.matches(name))
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.column_index(name).map(|i| &self.columns[i])
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_some()
    }

    pub fn primary_key_column(&self) -> Option<&Column> {
        self.primary_key.map(|i| &self.columns[i])
    }

    /// Tokens of the table name, same rule as column names.
    pub fn tokens(&self) -> Vec<String> {
        tokenize_identifier(&self.name)
    }
}

/// A `(table, column)` pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: String,
    pub column: String,
}

impl ColumnRef {
    pub fn new(table: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef {
            table: table.into(),
            column: column.into(),
        }
    }

    /// Lower-cased copy, used wherever comparison must ignore case.
    pub fn folded(&self) -> ColumnRef {
        ColumnRef::new(self.table.to_lowercase(), self.column.to_lowercase())
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForeignKey {
    pub from: ColumnRef,
    pub to: ColumnRef,
}

impl ForeignKey {
    /// Stable lower-case label, used to break ties between parallel edges.
    pub fn label(&self) -> String {
        format!("{}={}", self.from, self.to).to_lowercase()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub name: String,
    pub tables: Vec<Table>,
    pub foreign_keys: Vec<ForeignKey>,
}

impl Schema {
    /// Builds a schema and checks its structural invariants.
    pub fn new(
        name: impl Into<String>,
        tables: Vec<Table>,
        foreign_keys: Vec<ForeignKey>,
    ) -> Result<Self> {
        let schema = Schema {
            name: name.into(),
            tables,
            foreign_keys,
        };
        schema.check()?;
        Ok(schema)
    }

    fn check(&self) -> Result<()> {
        let mut seen = BTreeMap::new();
        for table in &self.tables {
            if table.name.is_empty() {
                return Err(Error::SchemaFormat("empty table name".into()));
            }
            if seen.insert(table.name.to_lowercase(), ()).is_some() {
                return Err(Error::SchemaFormat(format!(
                    "duplicate table name `{}`",
                    table.name
                )));
            }
            let mut cols = BTreeMap::new();
            for column in &table.columns {
                if column.original_name.is_empty() || column.original_name == "*" {
                    return Err(Error::SchemaFormat(format!(
                        "invalid column name `{}` in table `{}`",
                        column.original_name, table.name
                    )));
                }
                if cols.insert(column.original_name.to_lowercase(), ()).is_some() {
                    return Err(Error::SchemaFormat(format!(
                        "duplicate column `{}` in table `{}`",
                        column.original_name, table.name
                    )));
                }
            }
            if let Some(pk) = table.primary_key {
                if pk >= table.columns.len() {
                    return Err(Error::SchemaFormat(format!(
                        "primary key index {pk} out of range for table `{}`",
                        table.name
                    )));
                }
            }
        }
        for fk in &self.foreign_keys {
            for end in [&fk.from, &fk.to] {
                if self.resolve(end).is_none() {
                    return Err(Error::SchemaFormat(format!(
                        "foreign key endpoint `{end}` does not exist"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables
            .iter()
            .position(|t| t.name.eq_ignore_ascii_case(name))
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.table_index(name).map(|i| &self.tables[i])
    }

    /// Resolves a reference to the schema's own spelling of table and column.
    pub fn resolve(&self, col: &ColumnRef) -> Option<ColumnRef> {
        let table = self.table(&col.table)?;
        let column = table.column(&col.column)?;
        Some(ColumnRef::new(&table.name, &column.original_name))
    }

    /// Distinct column names across all tables, first spelling wins, in
    /// schema order. `*` is not included.
    pub fn distinct_columns(&self) -> Vec<&str> {
        let mut seen = BTreeMap::new();
        let mut out = Vec::new();
        for table in &self.tables {
            for column in &table.columns {
                if seen
                    .insert(column.original_name.to_lowercase(), ())
                    .is_none()
                {
                    out.push(column.original_name.as_str());
                }
            }
        }
        out
    }

    /// The canonical spelling of a column name, or `*` for the star column.
    pub fn canonical_column_name(&self, name: &str) -> Option<&str> {
        if name == "*" {
            return Some("*");
        }
        self.distinct_columns()
            .into_iter()
            .find(|c| c.eq_ignore_ascii_case(name))
    }

    /// Tokens for a distinct column name (the first table's column wins).
    pub fn column_tokens(&self, name: &str) -> Option<&[String]> {
        self.tables
            .iter()
            .flat_map(|t| t.columns.iter())
            .find(|c| c.matches(name))
            .map(|c| c.name.as_slice())
    }

    /// Whether every foreign key targets the primary key of its table.
    pub fn is_complete(&self) -> bool {
        self.foreign_keys.iter().all(|fk| {
            self.table(&fk.to.table)
                .and_then(|t| t.primary_key_column())
                .is_some_and(|pk| pk.matches(&fk.to.column))
        })
    }

    /// Parses one Spider `tables.json` entry.
    pub fn from_spider_json(text: &str) -> Result<Schema> {
        let doc: SpiderSchemaDoc =
            serde_json::from_str(text).map_err(|e| Error::SchemaFormat(e.to_string()))?;
        load_spider_schema(&doc)
    }

    pub fn to_spider_doc(&self) -> SpiderSchemaDoc {
        let mut columns = vec![(-1i64, "*".to_string())];
        let mut global = BTreeMap::new();
        for (ti, table) in self.tables.iter().enumerate() {
            for column in &table.columns {
                global.insert(
                    (table.name.to_lowercase(), column.original_name.to_lowercase()),
                    columns.len(),
                );
                columns.push((ti as i64, column.original_name.clone()));
            }
        }
        let index_of = |c: &ColumnRef| global[&(c.table.to_lowercase(), c.column.to_lowercase())];
        let primary_keys = self
            .tables
            .iter()
            .filter_map(|t| {
                t.primary_key_column()
                    .map(|c| PrimaryKeyEntry::Single(index_of(&ColumnRef::new(&t.name, &c.original_name))))
            })
            .collect();
        SpiderSchemaDoc {
            db_id: self.name.clone(),
            table_names_original: self.tables.iter().map(|t| t.name.clone()).collect(),
            column_names_original: columns,
            primary_keys,
            foreign_keys: self
                .foreign_keys
                .iter()
                .map(|fk| (index_of(&fk.from), index_of(&fk.to)))
                .collect(),
        }
    }
}

/// One entry of a Spider `tables.json` file. Unknown fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpiderSchemaDoc {
    pub db_id: String,
    pub table_names_original: Vec<String>,
    pub column_names_original: Vec<(i64, String)>,
    #[serde(default)]
    pub primary_keys: Vec<PrimaryKeyEntry>,
    #[serde(default)]
    pub foreign_keys: Vec<(usize, usize)>,
}

/// Later Spider releases list composite keys as nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrimaryKeyEntry {
    Single(usize),
    Composite(Vec<usize>),
}

pub fn load_spider_schema(doc: &SpiderSchemaDoc) -> Result<Schema> {
    let mut tables: Vec<Table> = doc
        .table_names_original
        .iter()
        .map(|name| Table {
            name: name.clone(),
            columns: Vec::new(),
            primary_key: None,
        })
        .collect();

    // global column index -> (table index, column index within table)
    let mut location = Vec::with_capacity(doc.column_names_original.len());
    for (table_index, name) in &doc.column_names_original {
        if *table_index < 0 {
            location.push(None);
            continue;
        }
        let ti = *table_index as usize;
        let table = tables.get_mut(ti).ok_or_else(|| {
            Error::SchemaFormat(format!(
                "column `{name}` refers to table index {ti}, only {} tables",
                doc.table_names_original.len()
            ))
        })?;
        location.push(Some((ti, table.columns.len())));
        table.columns.push(Column::new(name.clone()));
    }

    let locate = |idx: usize, what: &str| -> Result<(usize, usize)> {
        match location.get(idx) {
            Some(Some(loc)) => Ok(*loc),
            Some(None) => Err(Error::SchemaFormat(format!("{what} refers to `*`"))),
            None => Err(Error::SchemaFormat(format!(
                "{what} column index {idx} out of range ({} columns)",
                location.len()
            ))),
        }
    };

    for entry in &doc.primary_keys {
        let first = match entry {
            PrimaryKeyEntry::Single(i) => *i,
            PrimaryKeyEntry::Composite(v) => match v.first() {
                Some(i) => *i,
                None => continue,
            },
        };
        let (ti, ci) = locate(first, "primary key")?;
        // Composite keys keep their first column.
        tables[ti].primary_key.get_or_insert(ci);
    }

    let col_ref = |tables: &[Table], (ti, ci): (usize, usize)| {
        ColumnRef::new(&tables[ti].name, &tables[ti].columns[ci].original_name)
    };
    let mut foreign_keys = Vec::with_capacity(doc.foreign_keys.len());
    for &(from, to) in &doc.foreign_keys {
        let from = locate(from, "foreign key")?;
        let to = locate(to, "foreign key")?;
        foreign_keys.push(ForeignKey {
            from: col_ref(&tables, from),
            to: col_ref(&tables, to),
        });
    }

    Schema::new(doc.db_id.clone(), tables, foreign_keys)
}

/// Parses a whole `tables.json` document (a list of entries, or one entry).
pub fn load_spider_tables(text: &str) -> Result<Vec<Schema>> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::SchemaFormat(e.to_string()))?;
    let docs: Vec<SpiderSchemaDoc> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|d| vec![d])
    }
    .map_err(|e| Error::SchemaFormat(e.to_string()))?;
    docs.iter().map(load_spider_schema).collect()
}

/// Like [`load_spider_tables`], but entries that fail to load are returned
/// with their error instead of failing the whole file.
pub fn load_spider_tables_lenient(text: &str) -> Result<(Vec<Schema>, Vec<(String, Error)>)> {
    let docs: Vec<SpiderSchemaDoc> =
        serde_json::from_str(text).map_err(|e| Error::SchemaFormat(e.to_string()))?;
    let (mut ok, mut failed) = (Vec::new(), Vec::new());
    for doc in &docs {
        match load_spider_schema(doc) {
            Ok(s) => ok.push(s),
            Err(e) => failed.push((doc.db_id.clone(), e)),
        }
    }
    Ok((ok, failed))
}
