//! Acceptance checks, one PASS/FAIL/SKIP line per criterion.
//!
//! Runs as a plain binary (`harness = false`); the process exits non-zero if
//! any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use semql::eval::{component_match_f1, exact_match, load_spider_split, oov_rate, duplicate_column_stats};
use semql::fixtures::{self, golden_corpus};
use semql::graph::{build_schema_graph, join_path};
use semql::linker::{
    assign_column_types, link_question, recognize_spans, tokenize_question, ColumnLinkType,
    FixtureKnowledge, KnowledgeEdge, KnowledgeSource, NoKnowledge, Span, SpanType,
};
use semql::lower::lower_query;
use semql::schema::{ColumnRef, Schema, Table};
use semql::semql::actions::ColumnSource;
use semql::semql::{
    from_actions, grammar, parse_semql, print_semql, to_actions, validate, Action,
};
use semql::semql::actions::DerivationState;
use semql::sql::{canonicalize, parse_sql, print_sql};
use semql::{infer_groupby, lift_query, Error, LiftOptions};

use common::{
    brute_force_min_edges, check_link_invariants, mutate_query, random_link_case, random_schema,
    rng, subsets_up_to, TreeGen,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// FROM tables of the outer scope owning none of its referenced columns.
fn column_less_tables(q: &semql::SqlQuery) -> usize {
    let owners: BTreeSet<String> = q
        .scope_values()
        .iter()
        .filter_map(|v| v.column.column())
        .map(|c| c.table.to_lowercase())
        .collect();
    q.from
        .iter()
        .filter(|t| !owners.contains(&t.table.to_lowercase()))
        .count()
}

fn golden_round_trip() -> Check {
    let start = Instant::now();
    let corpus = golden_corpus();
    ensure(corpus.len() >= 40, || format!("only {} golden queries", corpus.len()))?;
    let dbs: BTreeSet<&str> = corpus.iter().map(|g| g.db_id.as_str()).collect();
    ensure(dbs == BTreeSet::from(["book_db", "concert_db", "social_db"]), || {
        format!("schemas {dbs:?}")
    })?;

    let mut used_rules = BTreeSet::new();
    let (mut star_lifts, mut anchored) = (0, 0);
    for g in &corpus {
        let schema = fixtures::by_name(&g.db_id).ok_or("unknown db")?;
        let line = g.line;
        let q = parse_sql(&g.sql, &schema).map_err(|e| format!("line {line}: {e}"))?;
        let opts = LiftOptions {
            star_table_override: g.star_table.clone(),
        };
        let tree = lift_query(&q, &schema, &opts).map_err(|e| format!("line {line}: {e}"))?;
        let violations = validate(&tree, &schema);
        ensure(violations.is_empty(), || format!("line {line}: {violations:?}"))?;
        let back = lower_query(&tree, &schema).map_err(|e| format!("line {line}: {e}"))?;
        ensure(canonicalize(&back) == canonicalize(&q), || {
            format!("line {line}: {} lowered to {}", g.sql, print_sql(&back))
        })?;
        for a in to_actions(&tree) {
            if let Action::ApplyRule(id) = a {
                used_rules.insert(id);
            }
        }
        let text = print_semql(&tree);
        if text.contains("(C *)") {
            star_lifts += 1;
        }
        if column_less_tables(&q) > usize::from(g.sql.contains('*')) {
            anchored += 1;
        }
    }
    let unused: Vec<usize> = (0..grammar::rules().len())
        .filter(|id| !used_rules.contains(id))
        .collect();
    ensure(unused.is_empty(), || format!("productions never used: {unused:?}"))?;
    ensure(star_lifts > 0, || "no query lifts `*`".into())?;
    ensure(anchored > 0, || "no query lifts a column-less FROM table".into())?;
    let elapsed = start.elapsed();
    ensure(elapsed.as_secs_f64() < 5.0, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} queries, {}/{} productions, {star_lifts} with *, {anchored} with column-less tables, {:.0} ms",
        corpus.len(),
        used_rules.len(),
        grammar::rules().len(),
        elapsed.as_secs_f64() * 1000.0
    ))
}

fn join_inference() -> Check {
    let mut r = rng(2);
    let mut checked = 0;
    for i in 0..50 {
        let n = 1 + i % 8;
        let fks = (i * 7) % 12;
        let schema = random_schema(&mut r, n, fks);
        let graph = build_schema_graph(&schema);
        for subset in subsets_up_to(n, 3) {
            let names: Vec<String> = subset.iter().map(|t| format!("t{t}")).collect();
            let required: Vec<&str> = names.iter().map(String::as_str).collect();
            let got = join_path(&graph, &required).ok().map(|p| p.edge_count());
            let want = brute_force_min_edges(&schema, &subset);
            ensure(got == want, || {
                format!("schema {i}, tables {required:?}: {got:?} edges, oracle {want:?}")
            })?;
            checked += 1;
        }
    }
    Ok(format!("50 schemas, {checked} table subsets agree with brute force"))
}

/// Actions whose applicability is probed at each prefix.
fn candidate_universe(schema: &Schema) -> Vec<Action> {
    let mut out: Vec<Action> = (0..=grammar::rules().len()).map(Action::ApplyRule).collect();
    let mut columns = vec!["*".to_string(), "missing_column".to_string()];
    columns.extend(schema.distinct_columns().into_iter().map(str::to_string));
    for c in columns {
        for source in [ColumnSource::Schema, ColumnSource::Memory] {
            out.push(Action::SelectColumn {
                column: c.clone(),
                source,
            });
        }
    }
    out.extend(schema.tables.iter().map(|t| Action::SelectTable(t.name.clone())));
    out.push(Action::SelectTable("missing_table".into()));
    out
}

/// `from_actions` accepts a prefix when it fails only for being incomplete.
fn accepted(prefix: &[Action], schema: &Schema) -> bool {
    match from_actions(prefix, schema) {
        Ok(_) | Err(Error::IncompleteDerivation { .. }) => true,
        Err(_) => false,
    }
}

fn action_round_trip() -> Check {
    let schemas = [fixtures::concert_db(), fixtures::social_db(), fixtures::book_db()];
    let mut r = rng(3);
    let mut prefixes = 0;
    let mut used = BTreeSet::new();
    for i in 0..1000 {
        let schema = &schemas[i % schemas.len()];
        let g = TreeGen {
            schema,
            with_values: false,
            max_depth: 2,
        };
        let tree = g.tree(&mut r);
        let actions = to_actions(&tree);
        let rebuilt = from_actions(&actions, schema).map_err(|e| format!("tree {i}: {e}"))?;
        ensure(rebuilt == tree, || format!("tree {i}: {}", print_semql(&tree)))?;

        let universe = candidate_universe(schema);
        let mut state = DerivationState::new(schema);
        let mut prefix: Vec<Action> = Vec::new();
        for gold in &actions {
            let offered: BTreeSet<Action> = state.applicable_actions().into_iter().collect();
            for a in &universe {
                prefix.push(a.clone());
                let ok = accepted(&prefix, schema);
                prefix.pop();
                ensure(ok == offered.contains(a), || {
                    format!("tree {i}, prefix {}: {a} accepted={ok} but offered={}", prefix.len(), !ok)
                })?;
            }
            prefixes += 1;
            state = state.apply(gold).map_err(|e| format!("tree {i}: {e}"))?;
            prefix.push(gold.clone());
            if let Action::ApplyRule(id) = gold {
                used.insert(*id);
            }
        }
    }
    Ok(format!(
        "1000 trees rebuilt exactly, {prefixes} prefix states agree, {} productions generated",
        used.len()
    ))
}

const GROUPED_JOIN: &str =
    "(Z (R (Select (A none (C name) (T orchestra)) (A count (C *) (T performance)))))";

fn groupby_inference() -> Check {
    let concert = fixtures::concert_db();
    let social = fixtures::social_db();
    let col = |t: &str, c: &str| ColumnRef::new(t, c);
    let cases: [(&str, &Schema, Result<Vec<ColumnRef>, &str>); 6] = [
        (GROUPED_JOIN, &concert, Ok(vec![col("orchestra", "name")])),
        (
            r#"(Z (R (Select (A count (C *) (T performance))) (Filter > (A count (C *) (T performance)) "3")))"#,
            &concert,
            Ok(vec![col("performance", "performance_id")]),
        ),
        (
            "(Z (R (Select (A count (C *) (T performance))) (Superlative desc 1 (A count (C *) (T performance)))))",
            &concert,
            Ok(vec![col("performance", "performance_id")]),
        ),
        (
            "(Z (R (Select (A none (C name) (T orchestra)))))",
            &concert,
            Ok(vec![]),
        ),
        ("(Z (R (Select (A count (C *) (T orchestra)))))", &concert, Ok(vec![])),
        (
            r#"(Z (R (Select (A count (C *) (T friend))) (Filter > (A count (C *) (T friend)) "2")))"#,
            &social,
            Err("MissingPrimaryKeyError"),
        ),
    ];
    for (text, schema, want) in cases {
        let tree = parse_semql(text).map_err(|e| format!("{text}: {e}"))?;
        let got = infer_groupby(&tree, schema).map_err(|e| e.name());
        let got = got.map(|cols| cols.iter().map(ColumnRef::folded).collect::<Vec<_>>());
        ensure(got == want, || format!("{text}: {got:?}, expected {want:?}"))?;
    }

    // The Fig. 1 shape lowers to a grouped two-table join.
    let tree = parse_semql(GROUPED_JOIN).map_err(|e| e.to_string())?;
    let sql = lower_query(&tree, &concert).map_err(|e| e.to_string())?;
    ensure(sql.from.len() == 2 && sql.group_by == [col("orchestra", "name")], || {
        print_sql(&sql)
    })?;

    // Golden queries with GROUP BY, sorted by the branch that rebuilds them.
    let mut branches: BTreeMap<&str, usize> = BTreeMap::new();
    for g in golden_corpus() {
        let schema = fixtures::by_name(&g.db_id).unwrap();
        let q = parse_sql(&g.sql, &schema).unwrap();
        if q.group_by.is_empty() {
            continue;
        }
        let opts = LiftOptions {
            star_table_override: g.star_table.clone(),
        };
        let tree = lift_query(&q, &schema, &opts).map_err(|e| e.to_string())?;
        let got = infer_groupby(&tree, &schema).map_err(|e| e.to_string())?;
        let folded = |v: &[ColumnRef]| v.iter().map(ColumnRef::folded).collect::<BTreeSet<_>>();
        ensure(folded(&got) == folded(&q.group_by), || {
            format!("line {}: inferred {got:?}", g.line)
        })?;
        let plain_select: BTreeSet<ColumnRef> = q
            .select
            .iter()
            .filter(|v| !v.agg.is_aggregate())
            .filter_map(|v| v.column.column().map(ColumnRef::folded))
            .collect();
        let branch = if !plain_select.is_empty() {
            "plain-select"
        } else {
            "primary-key"
        };
        *branches.entry(branch).or_default() += 1;
    }
    ensure(branches.len() == 2, || format!("golden branches covered: {branches:?}"))?;
    Ok(format!("6 decision-table cases; golden GROUP BY by branch {branches:?}"))
}

fn render(spans: &[Span]) -> Vec<String> {
    spans
        .iter()
        .map(|s| match s.span_type {
            SpanType::Plain => s.tokens.join(" "),
            t => format!("{}:{t:?}", s.tokens.join(" ")),
        })
        .collect()
}

struct Empty;

impl KnowledgeSource for Empty {
    fn lookup(&self, _term: &str) -> semql::Result<Vec<KnowledgeEdge>> {
        Ok(Vec::new())
    }
}

fn linking() -> Check {
    let book = fixtures::book_db();
    let q = tokenize_question("find the year and book title of each book");
    let spans = recognize_spans(&q, &book);
    let want = ["find", "the", "year:Column", "and", "book title:Column", "of", "each", "book:Table"];
    ensure(render(&spans) == want, || format!("{:?}", render(&spans)))?;
    let types = assign_column_types(&spans, &book);
    ensure(
        types["book_title"] == ColumnLinkType::ExactMatch
            && types["year"] == ColumnLinkType::ExactMatch
            && types["rating"] == ColumnLinkType::None,
        || format!("{types:?}"),
    )?;
    let title = Span {
        tokens: vec!["title".into()],
        start: 0,
        end: 5,
        span_type: SpanType::Column,
    };
    let t = assign_column_types(&[title], &book);
    ensure(t["book_title"] == ColumnLinkType::PartialMatch, || format!("{t:?}"))?;

    let overlap = recognize_spans(&tokenize_question("book titles of each book"), &book);
    ensure(
        render(&overlap) == ["book titles:Column", "of", "each", "book:Table"],
        || format!("{:?}", render(&overlap)),
    )?;

    let social = fixtures::social_db();
    let q = tokenize_question("list names of singers named 'Joe'");
    let spans = recognize_spans(&q, &social);
    let values: Vec<&str> = spans
        .iter()
        .filter(|s| s.span_type == SpanType::Value)
        .map(|s| &q.text[s.start..s.end])
        .collect();
    ensure(values == ["'Joe'"], || format!("{values:?}"))?;

    let both = Schema::new("both", vec![Table::new("name", &["id", "name"], Some(0))], vec![])
        .map_err(|e| e.to_string())?;
    let s = recognize_spans(&tokenize_question("name"), &both);
    ensure(s[0].span_type == SpanType::Column, || format!("{s:?}"))?;

    let ks = FixtureKnowledge::parse(fixtures::KNOWLEDGE).map_err(|e| e.to_string())?;
    let pets = fixtures::pets_db();
    let r = link_question("how many 'cat' are there", &pets, &ks);
    ensure(r.column_types["pet_type"] == ColumnLinkType::ValuePartialMatch, || {
        format!("{:?}", r.column_types)
    })?;
    let r = link_question("how many 'cat' are there", &pets, &Empty);
    ensure(r.column_types["pet_type"] == ColumnLinkType::None, || {
        format!("{:?}", r.column_types)
    })?;
    let r = link_question("authors of 'french' books", &book, &ks);
    ensure(r.column_types["nationality"] == ColumnLinkType::ValueExactMatch, || {
        format!("{:?}", r.column_types)
    })?;

    let mut r = rng(5);
    for i in 0..500 {
        let (schema, text) = random_link_case(&mut r);
        let q = tokenize_question(&text);
        let spans = recognize_spans(&q, &schema);
        check_link_invariants(&q, &spans, &schema).map_err(|e| format!("pair {i} `{text}`: {e}"))?;
        ensure(link_question(&text, &schema, &ks) == link_question(&text, &schema, &ks), || {
            format!("pair {i}: nondeterministic")
        })?;
        let base = link_question(&text, &schema, &NoKnowledge).column_types;
        let with = link_question(&text, &schema, &ks).column_types;
        ensure(base.iter().all(|(c, t)| with[c] >= *t), || format!("pair {i}: type weakened"))?;
    }
    Ok("worked examples exact; cover, longest-match and determinism over 500 pairs".into())
}

fn metrics() -> Check {
    let concert = fixtures::concert_db();
    let sql = |t: &str| parse_sql(t, &concert).unwrap();
    let a = sql("SELECT name FROM orchestra WHERE year > 2000 AND conductor = 'x'");
    let r = component_match_f1(&a, &a);
    ensure(r.exact && r.per_component.values().all(|p| p.f1 == 1.0), || format!("{r:?}"))?;
    let r = component_match_f1(
        &sql("SELECT name, year FROM orchestra"),
        &sql("SELECT name, conductor FROM orchestra"),
    );
    ensure(r.per_component["select"].f1 == 0.5, || format!("{r:?}"))?;
    let r = component_match_f1(
        &sql("SELECT name, count(*) FROM orchestra"),
        &sql("SELECT name, count(*) FROM orchestra GROUP BY name"),
    );
    ensure(r.per_component["group_by"].f1 == 0.0, || format!("{r:?}"))?;
    ensure(
        exact_match(&a, &sql("SELECT name FROM orchestra WHERE conductor = 'y' AND year > 1990")),
        || "reordered conjuncts differ".into(),
    )?;
    ensure(!exact_match(&a, &sql("SELECT year FROM orchestra WHERE year > 2000 AND conductor = 'x'")), || {
        "different select matched".into()
    })?;

    let corpus: Vec<_> = golden_corpus()
        .into_iter()
        .map(|g| {
            let s = fixtures::by_name(&g.db_id).unwrap();
            parse_sql(&g.sql, &s).unwrap()
        })
        .collect();
    let mut r = rng(6);
    for i in 0..200 {
        let q = &corpus[i % corpus.len()];
        let m = mutate_query(q, &mut r);
        ensure(exact_match(&m, q), || {
            format!("mutation {i}: {} vs {}", print_sql(&m), print_sql(q))
        })?;
    }
    Ok("F1 and exact-match examples reproduce; 200 mutations stay exact".into())
}

fn spider_statistics() -> Outcome {
    let Some(dir) = std::env::var_os("SPIDER_DATA_DIR") else {
        return Outcome::Skip("SPIDER_DATA_DIR not set".into());
    };
    let split = match load_spider_split(std::path::Path::new(&dir)) {
        Ok(s) => s,
        Err(e) => return Outcome::Fail(format!("cannot load Spider data: {e}")),
    };
    let oov = oov_rate(&split.train, &split.eval);
    let all: Vec<Schema> = split.train.iter().chain(&split.eval).cloned().collect();
    let dup = duplicate_column_stats(&all);
    let detail = format!(
        "oov {:.3}, schemas with duplicates {:.3}, duplicate fraction {:.3} (distinct-name variant {:.3}); {} train, {} dev, {} skipped",
        oov,
        dup.schemas_with_duplicate_columns,
        dup.mean_duplicate_column_fraction,
        dup.mean_duplicate_name_fraction,
        split.train.len(),
        split.eval.len(),
        split.skipped.len()
    );
    let ok = (oov - 0.350).abs() <= 0.005
        && (dup.schemas_with_duplicate_columns - 0.979).abs() <= 0.01
        && (dup.mean_duplicate_column_fraction - 0.246).abs() <= 0.01;
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn run(check: fn() -> Check) -> Outcome {
    match panic::catch_unwind(AssertUnwindSafe(check)) {
        Ok(Ok(detail)) => Outcome::Pass(detail),
        Ok(Err(detail)) => Outcome::Fail(detail),
        Err(p) => Outcome::Fail(
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()),
        ),
    }
}

fn main() {
    let criteria: [(&str, Box<dyn Fn() -> Outcome>); 7] = [
        ("1 golden round trip", Box::new(|| run(golden_round_trip))),
        ("2 join inference vs brute force", Box::new(|| run(join_inference))),
        ("3 action round trip and prefix agreement", Box::new(|| run(action_round_trip))),
        ("4 GROUP BY decision table", Box::new(|| run(groupby_inference))),
        ("5 linking conformance", Box::new(|| run(linking))),
        ("6 metric sanity", Box::new(|| run(metrics))),
        ("7 Spider corpus statistics", Box::new(spider_statistics)),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let (tag, detail) = match check() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{tag} criterion {name}: {detail} [{:.2}s]", start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
