//! The `semql` command line.
//!
//! [`run`] takes the full argument vector and output streams and returns the
//! process exit code: 0 on success, 1 for a domain error (reported as
//! `error[<ErrorName>]: ...`), 2 for a usage error.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use semql::eval::{
    component_match_f1, duplicate_column_stats, load_spider_split, oov_rate, summarize,
    MatchReport, Prf, COMPONENTS,
};
use semql::linker::{link_question, FixtureKnowledge, KnowledgeSource, NoKnowledge, SpanType};
use semql::lower::lower_query_with_notes;
use semql::semql::{parse_semql, print_actions, print_semql, to_actions, validate};
use semql::{canonicalize, fixtures, lift_query, load_spider_tables, parse_sql, print_sql};
use semql::{Error, LiftOptions, Schema};

#[derive(Debug, Parser)]
#[command(name = "semql", version, about = "Lift, lower, link and evaluate SemQL queries")]
struct Cli {
    /// Spider-format schema file (one entry or a list). Defaults to the
    /// bundled toy schemas.
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
    /// Database id to use; inferred from table names when omitted.
    #[arg(long, global = true)]
    db: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = KnowledgeMode::Off)]
    knowledge: KnowledgeMode,
    /// Knowledge fixture (tab-separated term, relation, result).
    #[arg(long, global = true)]
    fixture: Option<PathBuf>,
    /// Response cache directory for `--knowledge http`.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Knowledge service root for `--knowledge http`.
    #[arg(long, global = true)]
    base_url: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Table that `*` belongs to when the query leaves it open.
    #[arg(long, global = true)]
    star_table: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KnowledgeMode {
    Fixture,
    Http,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    JsonLines,
}

/// Inputs given as `-` are read from standard input.
#[derive(Debug, Subcommand)]
enum Command {
    /// Print the SemQL tree of a SQL query.
    Lift { sql: String },
    /// Print the SQL of a SemQL tree.
    Lower { semql: String },
    /// Exit 0 iff lifting and lowering reproduce the query canonically.
    Roundtrip { sql: String },
    /// Print the typed spans and column link types of a question.
    Link { question: String },
    /// Print the action sequence generating a SemQL tree.
    Actions { semql: String },
    /// Score `predicted<TAB>gold<TAB>db_id` lines from a file, or stdin for `-`.
    Eval { pairs: PathBuf },
    /// Corpus statistics over a Spider data directory.
    Stats {
        #[arg(env = "SPIDER_DATA_DIR")]
        dir: PathBuf,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain { name: String, message: String },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain {
            name: e.name().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain {
            name: "IoError".into(),
            message: e.to_string(),
        }
    }
}

type Outcome = Result<i32, Failure>;

fn domain(name: &str, message: impl Into<String>) -> Failure {
    Failure::Domain {
        name: name.into(),
        message: message.into(),
    }
}

/// Runs one invocation. `argv[0]` is the program name.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return e.exit_code();
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(Failure::Usage(message)) => {
            let _ = writeln!(err, "error: {message}");
            2
        }
        Err(Failure::Domain { name, message }) => {
            let _ = writeln!(err, "error[{name}]: {}", message.replace('\n', " "));
            1
        }
    }
}

fn input(arg: &str) -> Result<String, Failure> {
    if arg == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s.trim_end().to_string())
    } else {
        Ok(arg.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| domain("IoError", format!("{}: {e}", path.display())))
}

fn load_schemas(cli: &Cli) -> Result<Vec<Schema>, Failure> {
    match &cli.schema {
        Some(path) => Ok(load_spider_tables(&read(path)?)?),
        None => Ok(vec![
            fixtures::social_db(),
            fixtures::concert_db(),
            fixtures::book_db(),
            fixtures::pets_db(),
            fixtures::islands_db(),
        ]),
    }
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// The schema an input refers to: `--db` if given, the only schema if there
/// is one, else the schema naming the most of the input's words as tables.
/// Ties go to the schemas for which `accepts` holds.
fn pick_schema<'a>(
    cli: &Cli,
    schemas: &'a [Schema],
    text: &str,
    accepts: impl Fn(&Schema) -> bool,
) -> Result<&'a Schema, Failure> {
    if let Some(db) = &cli.db {
        return schemas
            .iter()
            .find(|s| s.name.eq_ignore_ascii_case(db))
            .ok_or_else(|| Failure::Usage(format!("no database `{db}` among the loaded schemas")));
    }
    if let [only] = schemas {
        return Ok(only);
    }
    let ws = words(text);
    let score = |s: &Schema| {
        s.tables
            .iter()
            .filter(|t| ws.contains(&t.name.to_lowercase()))
            .count()
    };
    let best = schemas.iter().map(score).max().unwrap_or(0);
    let mut candidates: Vec<&Schema> = schemas.iter().filter(|s| best > 0 && score(s) == best).collect();
    if candidates.len() > 1 {
        let accepted: Vec<&Schema> = candidates.iter().copied().filter(|s| accepts(s)).collect();
        if !accepted.is_empty() {
            candidates = accepted;
        }
    }
    match candidates.as_slice() {
        [one] => Ok(one),
        [] => Err(Failure::Usage("cannot tell which database the input uses; pass --db".into())),
        many => Err(Failure::Usage(format!(
            "input fits several databases ({}); pass --db",
            many.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(", ")
        ))),
    }
}

fn knowledge(cli: &Cli) -> Result<Box<dyn KnowledgeSource>, Failure> {
    match cli.knowledge {
        KnowledgeMode::Off => Ok(Box::new(NoKnowledge)),
        KnowledgeMode::Fixture => {
            let path = cli
                .fixture
                .as_ref()
                .ok_or_else(|| Failure::Usage("--knowledge fixture needs --fixture <path>".into()))?;
            Ok(Box::new(FixtureKnowledge::load(path)?))
        }
        KnowledgeMode::Http => http_knowledge(cli),
    }
}

fn http_knowledge(cli: &Cli) -> Result<Box<dyn KnowledgeSource>, Failure> {
    let url = cli
        .base_url
        .as_ref()
        .ok_or_else(|| Failure::Usage("--knowledge http needs --base-url <url>".into()))?;
    Ok(Box::new(semql::linker::HttpKnowledge::new(url.clone(), cli.cache.clone())))
}

fn emit(out: &mut dyn Write, format: Format, text: &str, value: serde_json::Value) -> io::Result<()> {
    match format {
        Format::Text => writeln!(out, "{text}"),
        Format::JsonLines => writeln!(out, "{value}"),
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let options = LiftOptions {
        star_table_override: cli.star_table.clone(),
    };
    match &cli.command {
        Command::Lift { sql } => {
            let sql = input(sql)?;
            let schemas = load_schemas(cli)?;
            let schema = pick_schema(cli, &schemas, &sql, |s| parse_sql(&sql, s).is_ok())?;
            let tree = lift_query(&parse_sql(&sql, schema)?, schema, &options)?;
            let text = print_semql(&tree);
            emit(out, cli.format, &text, json!({"db": schema.name, "semql": text}))?;
            Ok(0)
        }
        Command::Lower { semql } => {
            let text = input(semql)?;
            let tree = parse_semql(&text)?;
            let schemas = load_schemas(cli)?;
            let schema = pick_schema(cli, &schemas, &text, |s| validate(&tree, s).is_empty())?;
            let (sql, notes) = lower_query_with_notes(&tree, schema)?;
            let sql = print_sql(&sql);
            if cli.format == Format::Text {
                for n in &notes {
                    writeln!(err, "note: {n}")?;
                }
            }
            emit(out, cli.format, &sql, json!({"db": schema.name, "sql": sql, "notes": notes}))?;
            Ok(0)
        }
        Command::Roundtrip { sql } => {
            let sql = input(sql)?;
            let schemas = load_schemas(cli)?;
            let schema = pick_schema(cli, &schemas, &sql, |s| parse_sql(&sql, s).is_ok())?;
            let q = parse_sql(&sql, schema)?;
            let tree = lift_query(&q, schema, &options)?;
            let (back, _) = lower_query_with_notes(&tree, schema)?;
            let same = canonicalize(&back) == canonicalize(&q);
            let lowered = print_sql(&back);
            match cli.format {
                Format::Text if same => writeln!(out, "ok: {lowered}")?,
                Format::Text => {
                    return Err(domain(
                        "RoundTripMismatch",
                        format!("`{sql}` came back as `{lowered}`"),
                    ))
                }
                Format::JsonLines => writeln!(
                    out,
                    "{}",
                    json!({"db": schema.name, "roundtrip": same, "semql": print_semql(&tree), "sql": lowered})
                )?,
            }
            Ok(if same { 0 } else { 1 })
        }
        Command::Link { question } => {
            let question = input(question)?;
            let schemas = load_schemas(cli)?;
            let schema = pick_schema(cli, &schemas, &question, |_| true)?;
            let ks = knowledge(cli)?;
            let result = link_question(&question, schema, ks.as_ref());
            for w in &result.warnings {
                writeln!(err, "warning[{}]: {}: {}", w.kind, w.term, w.message)?;
            }
            match cli.format {
                Format::Text => {
                    let spans: Vec<String> = result
                        .spans
                        .iter()
                        .map(|s| match s.span_type {
                            SpanType::Plain => s.tokens.join(" "),
                            t => format!("[{}]:{}", s.tokens.join(" "), format!("{t:?}").to_lowercase()),
                        })
                        .collect();
                    writeln!(out, "{}", spans.join(" "))?;
                    for (column, t) in &result.column_types {
                        if *t != semql::linker::ColumnLinkType::None {
                            writeln!(out, "{column} {t:?}")?;
                        }
                    }
                }
                Format::JsonLines => {
                    let mut value = serde_json::to_value(&result).map_err(|e| domain("IoError", e.to_string()))?;
                    value["db"] = json!(schema.name);
                    writeln!(out, "{value}")?;
                }
            }
            Ok(0)
        }
        Command::Actions { semql } => {
            let text = input(semql)?;
            let tree = parse_semql(&text)?;
            let schemas = load_schemas(cli)?;
            let schema = pick_schema(cli, &schemas, &text, |s| validate(&tree, s).is_empty())?;
            let violations = validate(&tree, schema);
            if let Some(v) = violations.first() {
                return Err(Error::InvalidTree(v.to_string()).into());
            }
            let actions = to_actions(&tree);
            let listing: Vec<String> = actions.iter().map(ToString::to_string).collect();
            emit(
                out,
                cli.format,
                print_actions(&actions).trim_end(),
                json!({"db": schema.name, "actions": listing}),
            )?;
            Ok(0)
        }
        Command::Eval { pairs } => evaluate(cli, pairs, out),
        Command::Stats { dir } => {
            let split = load_spider_split(dir)?;
            for (db, e) in &split.skipped {
                writeln!(err, "warning[{}]: skipped `{db}`: {e}", e.name())?;
            }
            let all: Vec<Schema> = split.train.iter().chain(&split.eval).cloned().collect();
            let dup = duplicate_column_stats(&all);
            let oov = oov_rate(&split.train, &split.eval);
            let value = json!({
                "train_schemas": split.train.len(),
                "eval_schemas": split.eval.len(),
                "skipped_schemas": split.skipped.len(),
                "oov_rate": oov,
                "schemas_with_duplicate_columns": dup.schemas_with_duplicate_columns,
                "mean_duplicate_column_fraction": dup.mean_duplicate_column_fraction,
                "mean_duplicate_name_fraction": dup.mean_duplicate_name_fraction,
            });
            let text = format!(
                "train_schemas {}\neval_schemas {}\nskipped_schemas {}\noov_rate {oov:.3}\nschemas_with_duplicate_columns {:.3}\nmean_duplicate_column_fraction {:.3}\nmean_duplicate_name_fraction {:.3}",
                split.train.len(),
                split.eval.len(),
                split.skipped.len(),
                dup.schemas_with_duplicate_columns,
                dup.mean_duplicate_column_fraction,
                dup.mean_duplicate_name_fraction
            );
            emit(out, cli.format, &text, value)?;
            Ok(0)
        }
    }
}

/// A prediction that does not parse matches nothing.
fn zero_report() -> MatchReport {
    let zero = Prf {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    MatchReport {
        exact: false,
        per_component: COMPONENTS.iter().map(|c| (*c, zero)).collect(),
    }
}

struct Scored {
    line: usize,
    report: MatchReport,
    pred_error: Option<String>,
}

fn evaluate(cli: &Cli, pairs: &Path, out: &mut dyn Write) -> Outcome {
    let text = read(pairs)?;
    let schemas = load_schemas(cli)?;
    let records: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l.split('\t').collect()))
        .collect();
    let scored: Vec<Result<Scored, Failure>> = records
        .par_iter()
        .map(|(line, fields)| {
            let [pred, gold, db] = fields.as_slice() else {
                return Err(Failure::Usage(format!(
                    "{}:{line}: expected predicted<TAB>gold<TAB>db_id",
                    pairs.display()
                )));
            };
            let schema = schemas
                .iter()
                .find(|s| s.name.eq_ignore_ascii_case(db.trim()))
                .ok_or_else(|| domain("ResolutionError", format!("line {line}: unknown database `{db}`")))?;
            let gold = parse_sql(gold, schema).map_err(|e| {
                domain(e.name(), format!("line {line}: gold query: {e}"))
            })?;
            Ok(match parse_sql(pred, schema) {
                Ok(p) => Scored {
                    line: *line,
                    report: component_match_f1(&p, &gold),
                    pred_error: None,
                },
                Err(e) => Scored {
                    line: *line,
                    report: zero_report(),
                    pred_error: Some(format!("{}: {e}", e.name())),
                },
            })
        })
        .collect();
    let scored: Vec<Scored> = scored.into_iter().collect::<Result<_, _>>()?;
    let reports: Vec<MatchReport> = scored.iter().map(|s| s.report.clone()).collect();
    let summary = summarize(&reports);
    match cli.format {
        Format::Text => {
            writeln!(out, "pairs {}", summary.count)?;
            writeln!(out, "exact {}", summary.exact)?;
            writeln!(out, "exact_accuracy {:.3}", summary.exact_accuracy)?;
            for (c, f1) in &summary.mean_f1 {
                writeln!(out, "f1 {c} {f1:.3}")?;
            }
            let unparsed = scored.iter().filter(|s| s.pred_error.is_some()).count();
            if unparsed > 0 {
                writeln!(out, "unparsed_predictions {unparsed}")?;
            }
        }
        Format::JsonLines => {
            for s in &scored {
                writeln!(
                    out,
                    "{}",
                    json!({"line": s.line, "exact": s.report.exact, "per_component": s.report.per_component, "pred_error": s.pred_error})
                )?;
            }
            writeln!(out, "{}", json!({"summary": summary}))?;
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("semql").chain(args.iter().copied())).unwrap()
    }

    fn bundled() -> Vec<Schema> {
        load_schemas(&cli(&["lift", "x"])).unwrap()
    }

    #[test]
    fn schema_picked_by_table_words() {
        let schemas = bundled();
        let c = cli(&["lift", "x"]);
        let s = pick_schema(&c, &schemas, "SELECT name FROM orchestra", |_| true).unwrap();
        assert_eq!(s.name, "concert_db");
        let s = pick_schema(&c, &schemas, "how many pets are there", |_| true).unwrap();
        assert_eq!(s.name, "pets_db");
    }

    #[test]
    fn explicit_db_wins_and_unknown_is_usage() {
        let schemas = bundled();
        let s = pick_schema(&cli(&["--db", "BOOK_DB", "lift", "x"]), &schemas, "orchestra", |_| true);
        assert_eq!(s.unwrap().name, "book_db");
        let e = pick_schema(&cli(&["--db", "nope", "lift", "x"]), &schemas, "", |_| true);
        assert!(matches!(e, Err(Failure::Usage(_))));
    }

    #[test]
    fn no_table_words_is_usage() {
        let schemas = bundled();
        let e = pick_schema(&cli(&["lift", "x"]), &schemas, "SELECT 1", |_| true);
        assert!(matches!(e, Err(Failure::Usage(_))));
    }

    #[test]
    fn word_split_keeps_underscores() {
        assert_eq!(words("T1.pet_id, Count(*)"), ["t1", "pet_id", "count"]);
    }
}
