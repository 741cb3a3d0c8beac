//! SemQL to SQL.
//!
//! Walks the tree in pre-order. FROM is the minimum join tree over the tables
//! a scope declares, GROUP BY comes from a fixed decision table, and filter
//! leaves split into WHERE and HAVING by whether they aggregate.

use crate::error::{Error, Result};
use crate::graph::{build_schema_graph, join_path, SchemaGraph};
use crate::schema::{ColumnRef, Schema};
use crate::semql::{
    validate, AggOp, Attr, CmpOp, Filter, Literal, OrderClause, Query, Root, SemQlTree,
};
use crate::sql::{ColumnExpr, Condition, JoinedTable, Operand, OrderBy, Predicate, SqlQuery, ValueExpr};

/// Literal emitted where the tree carries no value.
pub const PLACEHOLDER_LITERAL: &str = "'value'";

fn placeholder() -> Literal {
    Literal::new(PLACEHOLDER_LITERAL)
}

fn table_of(a: &Attr) -> &str {
    a.table.as_deref().expect("validated tree declares every table")
}

/// The column a lifted table anchor uses for `table`.
fn anchor_column<'s>(schema: &'s Schema, table: &str) -> Option<&'s str> {
    let t = schema.table(table)?;
    t.primary_key_column()
        .or_else(|| t.columns.first())
        .map(|c| c.original_name.as_str())
}

/// Recognizes `t.key IN (SELECT t.key FROM t)` and returns `t`.
fn anchored_table<'a>(f: &'a Filter, schema: &Schema) -> Option<&'a str> {
    let Filter::Subquery { op: CmpOp::In, target, query } = f else {
        return None;
    };
    let plain = |a: &Attr| a.agg == AggOp::None && !a.distinct;
    let table = target.table.as_deref()?;
    let is_anchor = plain(target)
        && query.select.attrs.len() == 1
        && query.select.attrs[0] == *target
        && !query.select.distinct
        && query.filter.is_none()
        && query.order.is_none()
        && anchor_column(schema, table).is_some_and(|c| c.eq_ignore_ascii_case(&target.column));
    is_anchor.then_some(table)
}

/// Counts of aggregated and plain leaves of `f` in this scope.
fn aggregated_leaves(f: &Filter) -> (usize, usize) {
    match f {
        Filter::And(a, b) | Filter::Or(a, b) => {
            let (x, y) = aggregated_leaves(a);
            let (u, v) = aggregated_leaves(b);
            (x + u, y + v)
        }
        Filter::Cmp { target, .. } | Filter::Subquery { target, .. } => {
            if target.agg.is_aggregate() {
                (1, 0)
            } else {
                (0, 1)
            }
        }
    }
}

struct ScopeParts<'a> {
    where_parts: Vec<&'a Filter>,
    having_parts: Vec<&'a Filter>,
    anchors: Vec<&'a str>,
}

fn split_filter<'a>(q: &'a Query, schema: &Schema) -> Result<ScopeParts<'a>> {
    let mut parts = ScopeParts {
        where_parts: Vec::new(),
        having_parts: Vec::new(),
        anchors: Vec::new(),
    };
    if let Some(f) = &q.filter {
        for c in f.conjuncts() {
            if let Some(t) = anchored_table(c, schema) {
                parts.anchors.push(t);
                continue;
            }
            match aggregated_leaves(c) {
                (0, _) => parts.where_parts.push(c),
                (_, 0) => parts.having_parts.push(c),
                _ => {
                    return Err(Error::UnsupportedSql(
                        "a disjunction mixes aggregated and plain conditions".into(),
                    ))
                }
            }
        }
    }
    Ok(parts)
}

/// Tables declared by one scope in pre-order, anchors included.
fn declared_tables<'a>(q: &'a Query, schema: &Schema) -> Result<Vec<&'a str>> {
    let mut out: Vec<&str> = Vec::new();
    let mut push = |t: &'a str| {
        if !out.iter().any(|x| x.eq_ignore_ascii_case(t)) {
            out.push(t);
        }
    };
    for a in q.scope_attrs() {
        push(table_of(a));
    }
    for t in split_filter(q, schema)?.anchors {
        push(t);
    }
    Ok(out)
}

fn scope_from(q: &Query, schema: &Schema, graph: &SchemaGraph) -> Result<Vec<JoinedTable>> {
    let tables = declared_tables(q, schema)?;
    let path = join_path(graph, &tables)?;
    Ok(path
        .steps
        .iter()
        .map(|step| JoinedTable {
            table: step.table.clone(),
            on: step
                .via
                .map(|e| {
                    let fk = &schema.foreign_keys[graph.edges[e].fk];
                    vec![(fk.from.clone(), fk.to.clone())]
                })
                .unwrap_or_default(),
        })
        .collect())
}

/// FROM clause of the top-level scope (the left operand of a set operation).
/// Nested scopes get their own FROM when lowered.
pub fn infer_from_clause(tree: &SemQlTree, schema: &Schema) -> Result<Vec<JoinedTable>> {
    scope_from(first_query(tree), schema, &build_schema_graph(schema))
}

fn first_query(tree: &SemQlTree) -> &Query {
    match &tree.root {
        Root::Single(q) | Root::Compound { left: q, .. } => q,
    }
}

fn column_ref(a: &Attr, schema: &Schema) -> ColumnRef {
    let c = ColumnRef::new(table_of(a), a.column.clone());
    schema.resolve(&c).unwrap_or(c)
}

/// GROUP BY for one scope.
///
/// | scope                                                   | GROUP BY                     |
/// |---------------------------------------------------------|------------------------------|
/// | no aggregate                                            | none                         |
/// | aggregate, and plain columns in SELECT                  | those columns, SELECT order  |
/// | only aggregates in SELECT, aggregated filter or order   | key of the first aggregate's table |
/// | only aggregates anywhere else                           | none                         |
pub fn infer_scope_groupby(q: &Query, schema: &Schema) -> Result<Vec<ColumnRef>> {
    Ok(groupby_with_notes(q, schema)?.0)
}

fn groupby_with_notes(q: &Query, schema: &Schema) -> Result<(Vec<ColumnRef>, Vec<String>)> {
    let attrs = q.scope_attrs();
    if !attrs.iter().any(|a| a.agg.is_aggregate()) {
        return Ok((Vec::new(), Vec::new()));
    }
    let mut plain: Vec<ColumnRef> = Vec::new();
    for a in &q.select.attrs {
        if !a.agg.is_aggregate() && !a.is_star() {
            let c = column_ref(a, schema);
            if !plain.contains(&c) {
                plain.push(c);
            }
        }
    }
    if !plain.is_empty() {
        return Ok((plain, Vec::new()));
    }
    let filter_agg = !split_filter(q, schema)?.having_parts.is_empty();
    let order_agg = q.order.as_ref().is_some_and(|o| o.target().agg.is_aggregate());
    if !filter_agg && !order_agg {
        return Ok((Vec::new(), Vec::new()));
    }
    let aggregated: Vec<&Attr> = attrs.into_iter().filter(|a| a.agg.is_aggregate()).collect();
    let first = aggregated[0];
    let table = table_of(first);
    let t = schema
        .table(table)
        .ok_or_else(|| Error::Resolution(format!("table `{table}`")))?;
    let pk = t
        .primary_key_column()
        .ok_or_else(|| Error::MissingPrimaryKey(t.name.clone()))?;
    let mut notes = Vec::new();
    if aggregated.iter().any(|a| !table_of(a).eq_ignore_ascii_case(table)) {
        notes.push(format!(
            "aggregates span several tables; grouping by the key of `{}`, the first in pre-order",
            t.name
        ));
    }
    Ok((vec![ColumnRef::new(&t.name, &pk.original_name)], notes))
}

/// GROUP BY of the top-level scope.
pub fn infer_groupby(tree: &SemQlTree, schema: &Schema) -> Result<Vec<ColumnRef>> {
    infer_scope_groupby(first_query(tree), schema)
}

struct Lowerer<'a> {
    schema: &'a Schema,
    graph: SchemaGraph,
    notes: Vec<String>,
}

impl Lowerer<'_> {
    fn value(&self, a: &Attr) -> ValueExpr {
        ValueExpr {
            agg: a.agg,
            distinct: a.distinct && a.agg.is_aggregate(),
            column: if a.is_star() {
                ColumnExpr::Star
            } else {
                ColumnExpr::Column(column_ref(a, self.schema))
            },
        }
    }

    fn condition(&mut self, f: &Filter) -> Result<Condition> {
        Ok(match f {
            Filter::And(a, b) => Condition::and(self.condition(a)?, self.condition(b)?),
            Filter::Or(a, b) => Condition::or(self.condition(a)?, self.condition(b)?),
            Filter::Cmp { op, target, values } => {
                let mut vals = values.iter().cloned();
                let rhs = if *op == CmpOp::Between {
                    Operand::Range(
                        vals.next().unwrap_or_else(placeholder),
                        vals.next().unwrap_or_else(placeholder),
                    )
                } else {
                    Operand::Literal(vals.next().unwrap_or_else(placeholder))
                };
                Condition::Leaf(Predicate {
                    op: *op,
                    lhs: self.value(target),
                    rhs,
                })
            }
            Filter::Subquery { op, target, query } => Condition::Leaf(Predicate {
                op: *op,
                lhs: self.value(target),
                rhs: Operand::Subquery(Box::new(self.scope(query)?)),
            }),
        })
    }

    fn conjoin(&mut self, parts: &[&Filter]) -> Result<Option<Condition>> {
        let mut out: Option<Condition> = None;
        for p in parts {
            let c = self.condition(p)?;
            out = Some(match out {
                None => c,
                Some(prev) => Condition::and(prev, c),
            });
        }
        Ok(out)
    }

    fn scope(&mut self, q: &Query) -> Result<SqlQuery> {
        let parts = split_filter(q, self.schema)?;
        let from = scope_from(q, self.schema, &self.graph)?;
        let (group_by, notes) = groupby_with_notes(q, self.schema)?;
        self.notes.extend(notes);
        let where_clause = self.conjoin(&parts.where_parts)?;
        let having = self.conjoin(&parts.having_parts)?;
        let (order_by, limit) = match &q.order {
            None => (None, None),
            Some(OrderClause::Order { direction, target }) => (
                Some(OrderBy {
                    direction: *direction,
                    target: self.value(target),
                }),
                None,
            ),
            Some(OrderClause::Superlative { direction, target, limit }) => (
                Some(OrderBy {
                    direction: *direction,
                    target: self.value(target),
                }),
                Some(*limit),
            ),
        };
        if having.is_some() && group_by.is_empty() {
            return Err(Error::UnsupportedSql(
                "aggregated condition but no column to group by".into(),
            ));
        }
        Ok(SqlQuery {
            distinct: q.select.distinct,
            select: q.select.attrs.iter().map(|a| self.value(a)).collect(),
            from,
            where_clause,
            group_by,
            having,
            order_by,
            limit,
            set_op: None,
        })
    }
}

/// Lowers a tree and returns notes about choices the rules left open.
pub fn lower_query_with_notes(tree: &SemQlTree, schema: &Schema) -> Result<(SqlQuery, Vec<String>)> {
    let violations = validate(tree, schema);
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidTree(text.join("; ")));
    }
    let mut l = Lowerer {
        schema,
        graph: build_schema_graph(schema),
        notes: Vec::new(),
    };
    let q = match &tree.root {
        Root::Single(q) => l.scope(q)?,
        Root::Compound { op, left, right } => {
            let mut out = l.scope(left)?;
            out.set_op = Some((*op, Box::new(l.scope(right)?)));
            out
        }
    };
    Ok((q, l.notes))
}

pub fn lower_query(tree: &SemQlTree, schema: &Schema) -> Result<SqlQuery> {
    lower_query_with_notes(tree, schema).map(|(q, _)| q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::semql::parse_semql;
    use crate::sql::print_sql;

    fn lower(text: &str, schema: &Schema) -> Result<String> {
        lower_query(&parse_semql(text).unwrap(), schema).map(|q| print_sql(&q))
    }

    #[test]
    fn group_by_plain_select_column() {
        let s = fixtures::concert_db();
        assert_eq!(
            lower(
                "(Z (R (Select (A none (C name) (T orchestra)) (A count (C *) (T performance)))))",
                &s
            )
            .unwrap(),
            "SELECT orchestra.name, count(*) FROM orchestra JOIN performance ON performance.orchestra_id = orchestra.orchestra_id GROUP BY orchestra.name"
        );
    }

    #[test]
    fn group_by_primary_key_fallback() {
        let s = fixtures::concert_db();
        let t = parse_semql(
            r#"(Z (R (Select (A count (C *) (T performance))) (Filter > (A count (C *) (T performance)) "1")))"#,
        )
        .unwrap();
        assert_eq!(
            infer_groupby(&t, &s).unwrap(),
            vec![ColumnRef::new("performance", "performance_id")]
        );
        let bare = parse_semql("(Z (R (Select (A count (C *) (T performance)))))").unwrap();
        assert!(infer_groupby(&bare, &s).unwrap().is_empty());
        let plain = parse_semql("(Z (R (Select (A none (C name) (T orchestra)))))").unwrap();
        assert!(infer_groupby(&plain, &s).unwrap().is_empty());
    }

    #[test]
    fn having_from_aggregated_leaf() {
        let s = fixtures::social_db();
        assert_eq!(
            lower(
                r#"(Z (R (Select (A none (C student_id) (T friend))) (Filter > (A count (C *) (T friend)) "2")))"#,
                &s
            )
            .unwrap(),
            "SELECT student_id FROM friend GROUP BY student_id HAVING count(*) > 2"
        );
    }

    #[test]
    fn steiner_join_through_intermediate() {
        let s = fixtures::concert_db();
        let t = parse_semql(
            "(Z (R (Select (A none (C name) (T orchestra)) (A none (C result) (T show)))))",
        )
        .unwrap();
        let from = infer_from_clause(&t, &s).unwrap();
        let tables: Vec<&str> = from.iter().map(|j| j.table.as_str()).collect();
        assert_eq!(tables, ["orchestra", "performance", "show"]);
    }

    #[test]
    fn disconnected_tables() {
        let s = fixtures::islands_db();
        let err = lower(
            "(Z (R (Select (A none (C label) (T north)) (A none (C label) (T south)))))",
            &s,
        )
        .unwrap_err();
        assert_eq!(err.name(), "NoJoinPathError");
    }

    #[test]
    fn missing_primary_key() {
        let s = fixtures::pets_db();
        let t = parse_semql(
            r#"(Z (R (Select (A count (C *) (T has_pet))) (Filter > (A count (C *) (T has_pet)) "1")))"#,
        )
        .unwrap();
        assert_eq!(infer_groupby(&t, &s).unwrap_err().name(), "MissingPrimaryKeyError");
    }

    #[test]
    fn value_free_tree_uses_placeholders() {
        let s = fixtures::concert_db();
        assert_eq!(
            lower("(Z (R (Select (A none (C name) (T orchestra))) (Filter between (A none (C year) (T orchestra)))))", &s).unwrap(),
            "SELECT name FROM orchestra WHERE year BETWEEN 'value' AND 'value'"
        );
    }
}
