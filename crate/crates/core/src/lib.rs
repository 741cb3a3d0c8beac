//! SemQL: a tree-shaped intermediate representation between questions and SQL.
//!
//! The crate covers the deterministic parts of a text-to-SQL pipeline:
//!
//! * [`schema`] and [`graph`]: database schemas, Spider `tables.json`
//!   ingestion and join-path inference over the foreign-key graph.
//! * [`semql`]: the grammar, trees, text format, skeletons and the action
//!   transition system.
//! * [`sql`]: parsing, printing and canonicalizing a Spider-sized SQL subset.
//! * [`lift`] and [`lower`]: SQL to SemQL and back.
//! * [`linker`]: n-gram schema linking with an optional knowledge source.
//! * [`eval`]: exact and component matching plus corpus statistics.

pub mod error;
pub mod eval;
pub mod graph;
pub mod lift;
pub mod linker;
pub mod lower;
pub mod schema;
pub mod semql;
pub mod sql;

pub use error::{Error, Result};
pub use graph::{build_schema_graph, join_path, JoinPath, JoinStep, SchemaGraph};
pub use schema::{load_spider_schema, load_spider_tables, load_spider_tables_lenient, Column, ColumnRef, ForeignKey, Schema, Table};
pub use semql::{
    extract_skeleton, from_actions, parse_semql, print_semql, to_actions, validate, Action,
    AggOp, Attr, CmpOp, Direction, Filter, Literal, OrderClause, Query, Root, SemQlTree, SetOp,
};
pub use lift::{assign_star_table, lift_query, LiftOptions};
pub use lower::{infer_from_clause, infer_groupby, lower_query};
pub use sql::{canonicalize, parse_sql, print_sql, CanonicalForm, SqlQuery};

/// The toy schemas and knowledge file used by tests, examples and the CLI.
#[doc(hidden)]
pub mod fixtures {
    use crate::schema::Schema;

    pub const SOCIAL_DB: &str = include_str!("../fixtures/social_db.json");
    pub const CONCERT_DB: &str = include_str!("../fixtures/concert_db.json");
    pub const BOOK_DB: &str = include_str!("../fixtures/book_db.json");
    pub const PETS_DB: &str = include_str!("../fixtures/pets_db.json");
    pub const ISLANDS_DB: &str = include_str!("../fixtures/islands_db.json");
    pub const TABLES: &str = include_str!("../fixtures/tables.json");
    pub const KNOWLEDGE: &str = include_str!("../fixtures/knowledge.tsv");
    pub const GOLDEN_CORPUS: &str = include_str!("../fixtures/golden_corpus.tsv");

    /// One entry of the golden SQL corpus.
    #[derive(Debug, Clone)]
    pub struct GoldenQuery {
        pub line: usize,
        pub db_id: String,
        pub sql: String,
        pub star_table: Option<String>,
    }

    /// `db_id<TAB>sql[<TAB>star table]` lines; `#` starts a comment line.
    pub fn golden_corpus() -> Vec<GoldenQuery> {
        GOLDEN_CORPUS
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|(i, l)| {
                let mut parts = l.split('\t');
                GoldenQuery {
                    line: i + 1,
                    db_id: parts.next().unwrap_or_default().to_string(),
                    sql: parts.next().unwrap_or_default().to_string(),
                    star_table: parts.next().map(str::to_string).filter(|s| !s.is_empty()),
                }
            })
            .collect()
    }

    fn load(text: &str) -> Schema {
        Schema::from_spider_json(text).expect("bundled fixture is valid")
    }

    pub fn social_db() -> Schema {
        load(SOCIAL_DB)
    }

    pub fn concert_db() -> Schema {
        load(CONCERT_DB)
    }

    pub fn book_db() -> Schema {
        load(BOOK_DB)
    }

    pub fn pets_db() -> Schema {
        load(PETS_DB)
    }

    pub fn islands_db() -> Schema {
        load(ISLANDS_DB)
    }

    /// Looks a bundled schema up by its `db_id`.
    pub fn by_name(name: &str) -> Option<Schema> {
        match name {
            "social_db" => Some(social_db()),
            "concert_db" => Some(concert_db()),
            "book_db" => Some(book_db()),
            "pets_db" => Some(pets_db()),
            "islands_db" => Some(islands_db()),
            _ => None,
        }
    }
}
