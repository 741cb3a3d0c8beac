//! Generators and oracles shared by the integration tests.
#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};

use semql::schema::{ColumnRef, ForeignKey, Schema, Table};
use semql::semql::{
    AggOp, Attr, CmpOp, Direction, Filter, Literal, OrderClause, Query, Root, SemQlTree, SetOp,
};
use semql::sql::{Condition, Operand, SqlQuery};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub const AGGS: [AggOp; 6] = [
    AggOp::None,
    AggOp::Max,
    AggOp::Min,
    AggOp::Count,
    AggOp::Sum,
    AggOp::Avg,
];

pub const OPS: [CmpOp; 11] = [
    CmpOp::Eq,
    CmpOp::Ne,
    CmpOp::Lt,
    CmpOp::Gt,
    CmpOp::Le,
    CmpOp::Ge,
    CmpOp::Between,
    CmpOp::Like,
    CmpOp::NotLike,
    CmpOp::In,
    CmpOp::NotIn,
];

/// Random valid SemQL trees over a fixed schema.
pub struct TreeGen<'s> {
    pub schema: &'s Schema,
    /// Attach literals and arbitrary limits; otherwise trees are value-free.
    pub with_values: bool,
    pub max_depth: usize,
}

impl TreeGen<'_> {
    pub fn attr(&self, rng: &mut StdRng) -> Attr {
        let table = self.schema.tables.choose(rng).expect("non-empty schema");
        let column = if rng.random_bool(0.2) {
            "*".to_string()
        } else {
            let c = table.columns.choose(rng).expect("non-empty table");
            // The transition system names columns by their first spelling.
            self.schema
                .canonical_column_name(&c.original_name)
                .expect("column exists")
                .to_string()
        };
        let agg = *AGGS.choose(rng).unwrap();
        let mut a = Attr::new(agg, column, table.name.clone());
        a.distinct = agg.is_aggregate() && rng.random_bool(0.2);
        a
    }

    fn literal(&self, rng: &mut StdRng) -> Literal {
        if rng.random_bool(0.5) {
            Literal::new(rng.random_range(-50..2000).to_string())
        } else {
            Literal::new(format!("'v{}'", rng.random_range(0..100)))
        }
    }

    pub fn filter(&self, rng: &mut StdRng, depth: usize, budget: usize) -> Filter {
        if budget > 0 && rng.random_bool(0.35) {
            let a = self.filter(rng, depth, budget - 1);
            let b = self.filter(rng, depth, budget - 1);
            return if rng.random_bool(0.5) {
                Filter::and(a, b)
            } else {
                Filter::or(a, b)
            };
        }
        let op = *OPS.choose(rng).unwrap();
        let target = self.attr(rng);
        if op.takes_subquery() && depth < self.max_depth && rng.random_bool(0.3) {
            return Filter::subquery(op, target, self.query(rng, depth + 1));
        }
        let values = match (self.with_values, op) {
            (false, _) => Vec::new(),
            (true, CmpOp::Between) => vec![self.literal(rng), self.literal(rng)],
            (true, _) if rng.random_bool(0.1) => Vec::new(),
            (true, _) => vec![self.literal(rng)],
        };
        Filter::cmp(op, target, values)
    }

    pub fn query(&self, rng: &mut StdRng, depth: usize) -> Query {
        let arity = rng.random_range(1..=5);
        let mut q = Query::new((0..arity).map(|_| self.attr(rng)).collect());
        q.select.distinct = rng.random_bool(0.2);
        if rng.random_bool(0.5) {
            q.filter = Some(self.filter(rng, depth, 2));
        }
        let direction = if rng.random_bool(0.5) {
            Direction::Asc
        } else {
            Direction::Desc
        };
        q.order = match rng.random_range(0..3) {
            0 => None,
            1 => Some(OrderClause::Order {
                direction,
                target: self.attr(rng),
            }),
            _ => Some(OrderClause::Superlative {
                direction,
                target: self.attr(rng),
                limit: if self.with_values {
                    rng.random_range(1..10)
                } else {
                    1
                },
            }),
        };
        q
    }

    pub fn tree(&self, rng: &mut StdRng) -> SemQlTree {
        let root = match rng.random_range(0..4) {
            0 => Root::Single(self.query(rng, 0)),
            n => Root::Compound {
                op: [SetOp::Intersect, SetOp::Union, SetOp::Except][n - 1],
                left: self.query(rng, 0),
                right: self.query(rng, 0),
            },
        };
        SemQlTree { root }
    }
}

/// A random schema of `tables` tables `t0..`; each has `id` as primary key,
/// a `val` column and one column per outgoing foreign key. Parallel keys and
/// self references occur.
pub fn random_schema(rng: &mut StdRng, tables: usize, fks: usize) -> Schema {
    let mut columns: Vec<Vec<String>> = (0..tables)
        .map(|_| vec!["id".to_string(), "val".to_string()])
        .collect();
    let mut keys = Vec::new();
    for k in 0..fks {
        let from = rng.random_range(0..tables);
        let to = rng.random_range(0..tables);
        let name = format!("fk{k}");
        columns[from].push(name.clone());
        keys.push(ForeignKey {
            from: ColumnRef::new(format!("t{from}"), name),
            to: ColumnRef::new(format!("t{to}"), "id"),
        });
    }
    let tables = columns
        .iter()
        .enumerate()
        .map(|(i, cols)| {
            let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
            Table::new(format!("t{i}"), &cols, Some(0))
        })
        .collect();
    Schema::new("random", tables, keys).expect("generated schema is valid")
}

/// Fewest foreign-key edges whose union with `required` forms one connected
/// component containing every required table, found by trying edge subsets
/// in increasing size. `None` when no subset connects them.
pub fn brute_force_min_edges(schema: &Schema, required: &[usize]) -> Option<usize> {
    let n = schema.tables.len();
    let edges: Vec<(usize, usize)> = schema
        .foreign_keys
        .iter()
        .map(|fk| {
            (
                schema.table_index(&fk.from.table).unwrap(),
                schema.table_index(&fk.to.table).unwrap(),
            )
        })
        .collect();
    let connected = |chosen: &[usize]| {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for &e in chosen {
            let (a, b) = edges[e];
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        let root = find(&mut parent, required[0]);
        required.iter().all(|&r| find(&mut parent, r) == root)
    };
    fn search(
        first: usize,
        left: usize,
        total: usize,
        chosen: &mut Vec<usize>,
        ok: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        if left == 0 {
            return ok(chosen);
        }
        for e in first..total {
            chosen.push(e);
            if search(e + 1, left - 1, total, chosen, ok) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    (0..=edges.len()).find(|&size| search(0, size, edges.len(), &mut Vec::new(), &connected))
}

/// All subsets of `0..n` with 1 to `k` elements.
pub fn subsets_up_to(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        if mask.count_ones() as usize <= k {
            out.push((0..n).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    out
}

fn and_chain(c: &Condition, out: &mut Vec<Condition>) {
    match c {
        Condition::And(a, b) => {
            and_chain(a, out);
            and_chain(b, out);
        }
        other => out.push(other.clone()),
    }
}

/// Shuffles every AND chain (rebuilding it with random association) and
/// replaces every literal with a fresh one, at every nesting level.
pub fn mutate_condition(c: &Condition, rng: &mut StdRng) -> Condition {
    match c {
        Condition::And(..) => {
            let mut parts = Vec::new();
            and_chain(c, &mut parts);
            let mut parts: Vec<Condition> = parts.iter().map(|p| mutate_condition(p, rng)).collect();
            parts.shuffle(rng);
            while parts.len() > 1 {
                let i = rng.random_range(0..parts.len() - 1);
                let b = parts.remove(i + 1);
                let a = parts.remove(i);
                parts.insert(i, Condition::and(a, b));
            }
            parts.pop().unwrap()
        }
        Condition::Or(a, b) => Condition::or(mutate_condition(a, rng), mutate_condition(b, rng)),
        Condition::Leaf(p) => {
            let mut p = p.clone();
            let mut lit = || Literal::new(format!("'m{}'", rng.random_range(0..1000)));
            p.rhs = match &p.rhs {
                Operand::Literal(_) => Operand::Literal(lit()),
                Operand::Range(..) => Operand::Range(lit(), lit()),
                Operand::Subquery(q) => Operand::Subquery(Box::new(mutate_query(q, rng))),
            };
            Condition::Leaf(p)
        }
    }
}

pub fn mutate_query(q: &SqlQuery, rng: &mut StdRng) -> SqlQuery {
    let mut out = q.clone();
    out.where_clause = q.where_clause.as_ref().map(|c| mutate_condition(c, rng));
    out.having = q.having.as_ref().map(|c| mutate_condition(c, rng));
    if let Some(n) = &mut out.limit {
        *n = rng.random_range(1..20);
    }
    if let Some((_, right)) = &mut out.set_op {
        **right = mutate_query(right, rng);
    }
    out
}

const NAME_WORDS: [&str; 12] = [
    "book", "title", "name", "year", "city", "pet", "type", "author", "country", "age", "price",
    "song",
];
const FILLER: [&str; 10] = ["the", "of", "what", "show", "each", "and", "list", "with", "for", "all"];

fn plural(w: &str) -> String {
    if w.ends_with('y') && w.len() > 3 {
        format!("{}ies", &w[..w.len() - 1])
    } else if w.ends_with('s') || w.ends_with('x') || w.ends_with("ch") {
        format!("{w}es")
    } else {
        format!("{w}s")
    }
}

/// A schema whose table and column names are one or two words from a small
/// vocabulary, and a question mixing those words (sometimes pluralized),
/// filler and an occasional quoted value.
pub fn random_link_case(rng: &mut StdRng) -> (Schema, String) {
    let name = |rng: &mut StdRng| {
        let a = *NAME_WORDS.choose(rng).unwrap();
        if rng.random_bool(0.5) {
            format!("{a}_{}", NAME_WORDS.choose(rng).unwrap())
        } else {
            a.to_string()
        }
    };
    let mut tables: Vec<Table> = Vec::new();
    for _ in 0..rng.random_range(1..4) {
        let t = name(rng);
        if tables.iter().any(|x| x.name == t) {
            continue;
        }
        let mut cols = vec!["id".to_string()];
        for _ in 0..rng.random_range(1..5) {
            let c = name(rng);
            if !cols.contains(&c) {
                cols.push(c);
            }
        }
        let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
        tables.push(Table::new(t, &cols, Some(0)));
    }
    let schema = Schema::new("linkcase", tables, vec![]).expect("valid schema");

    let mut words = Vec::new();
    for _ in 0..rng.random_range(1..16) {
        let w = match rng.random_range(0..10) {
            0..=3 => NAME_WORDS.choose(rng).unwrap().to_string(),
            4 => plural(NAME_WORDS.choose(rng).unwrap()),
            5 => format!("'{}'", NAME_WORDS.choose(rng).unwrap()),
            _ => FILLER.choose(rng).unwrap().to_string(),
        };
        words.push(w);
    }
    (schema, words.join(" "))
}

fn counts(words: &[String]) -> std::collections::HashMap<&str, usize> {
    let mut m = std::collections::HashMap::new();
    for w in words {
        *m.entry(w.as_str()).or_insert(0) += 1;
    }
    m
}

/// Whether `gram` names a schema column or table: equal to its stemmed
/// tokens, or from two words up contained in them as a multiset.
pub fn oracle_names_match(schema: &Schema, gram: &[String]) -> bool {
    use semql::linker::stem;
    use semql::schema::tokenize_identifier;
    let gram: Vec<String> = gram.iter().map(|w| stem(w)).collect();
    let mut names: Vec<&str> = schema.tables.iter().map(|t| t.name.as_str()).collect();
    for t in &schema.tables {
        names.extend(t.columns.iter().map(|c| c.original_name.as_str()));
    }
    names.into_iter().any(|n| {
        let toks: Vec<String> = tokenize_identifier(n).iter().map(|w| stem(w)).collect();
        if toks == gram {
            return true;
        }
        let have = counts(&toks);
        gram.len() >= 2 && counts(&gram).iter().all(|(w, k)| have.get(w).is_some_and(|h| h >= k))
    })
}

/// Span cover, non-overlap and longest-match dominance for one question.
pub fn check_link_invariants(
    question: &semql::linker::TokenizedQuestion,
    spans: &[semql::linker::Span],
    schema: &Schema,
) -> Result<(), String> {
    use semql::linker::SpanType;
    let flat: Vec<&str> = spans.iter().flat_map(|s| s.tokens.iter().map(String::as_str)).collect();
    if flat != question.words() {
        return Err(format!("spans {flat:?} do not cover {:?}", question.words()));
    }
    for w in spans.windows(2) {
        if w[0].end > w[1].start {
            return Err(format!("{:?} overlaps {:?}", w[0], w[1]));
        }
    }
    // Maximal runs of Plain tokens must contain no recognizable n-gram.
    let mut run: Vec<String> = Vec::new();
    for s in spans.iter().chain(std::iter::once(&semql::linker::Span {
        tokens: vec![],
        start: 0,
        end: 0,
        span_type: SpanType::Value,
    })) {
        if s.span_type == SpanType::Plain {
            run.extend(s.tokens.iter().cloned());
            continue;
        }
        for len in 1..=run.len().min(6) {
            for g in run.windows(len) {
                if oracle_names_match(schema, g) {
                    return Err(format!("plain words {g:?} name a schema element"));
                }
            }
        }
        run.clear();
    }
    for s in spans {
        if matches!(s.span_type, SpanType::Column | SpanType::Table) && !oracle_names_match(schema, &s.tokens) {
            return Err(format!("{:?} matches nothing", s.tokens));
        }
    }
    Ok(())
}
