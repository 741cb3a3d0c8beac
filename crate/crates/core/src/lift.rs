//! SQL to SemQL.
//!
//! Each SELECT scope becomes an `R` node. FROM, GROUP BY and the WHERE/HAVING
//! split disappear; every column is paired with its table, `*` included.

use crate::error::{Error, Result};
use crate::schema::Schema;
use crate::semql::{Attr, CmpOp, Filter, OrderClause, Query, Root, SemQlTree};
use crate::sql::{ColumnExpr, Condition, Operand, SqlQuery, ValueExpr};
use crate::semql::grammar::MAX_SELECT_ARITY;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LiftOptions {
    /// Table to pair with `*` when the query alone does not determine it.
    /// Only consulted in scopes whose FROM clause contains it.
    pub star_table_override: Option<String>,
}

impl LiftOptions {
    pub fn with_star_table(table: impl Into<String>) -> Self {
        LiftOptions {
            star_table_override: Some(table.into()),
        }
    }
}

fn has_star(q: &SqlQuery) -> bool {
    q.scope_values()
        .iter()
        .any(|v| v.column == ColumnExpr::Star)
}

/// FROM tables that own none of the columns referenced in SELECT, WHERE,
/// HAVING or ORDER BY of this scope, in FROM order.
fn column_less_tables(q: &SqlQuery) -> Vec<String> {
    let owners: Vec<String> = q
        .scope_values()
        .iter()
        .filter_map(|v| v.column.column())
        .map(|c| c.table.to_lowercase())
        .collect();
    q.from
        .iter()
        .filter(|t| !owners.contains(&t.table.to_lowercase()))
        .map(|t| t.table.clone())
        .collect()
}

/// Picks the table `*` belongs to in one SELECT scope; `None` when the scope
/// has no `*`.
///
/// Order of preference: the only FROM table owning no referenced column, the
/// only FROM table, the override.
pub fn assign_star_table(
    q: &SqlQuery,
    _schema: &Schema,
    opts: &LiftOptions,
) -> Result<Option<String>> {
    if !has_star(q) {
        return Ok(None);
    }
    let candidates = column_less_tables(q);
    if candidates.len() == 1 {
        return Ok(candidates.into_iter().next());
    }
    if q.from.len() == 1 {
        return Ok(Some(q.from[0].table.clone()));
    }
    if let Some(o) = &opts.star_table_override {
        if let Some(t) = q.from.iter().find(|t| t.table.eq_ignore_ascii_case(o)) {
            return Ok(Some(t.table.clone()));
        }
    }
    let candidates = if candidates.is_empty() {
        q.from_tables().map(str::to_string).collect()
    } else {
        candidates
    };
    Err(Error::StarAmbiguity { candidates })
}

struct Lifter<'a> {
    schema: &'a Schema,
    opts: &'a LiftOptions,
}

impl Lifter<'_> {
    fn attr(&self, v: &ValueExpr, star_table: Option<&str>) -> Attr {
        let (column, table) = match &v.column {
            ColumnExpr::Star => (
                "*".to_string(),
                star_table.expect("star table assigned when * present").to_string(),
            ),
            ColumnExpr::Column(c) => (c.column.clone(), c.table.clone()),
        };
        Attr {
            agg: v.agg,
            distinct: v.distinct && v.agg.is_aggregate(),
            column,
            table: Some(table),
        }
    }

    fn condition(&self, c: &Condition, star: Option<&str>) -> Result<Filter> {
        Ok(match c {
            Condition::And(a, b) => Filter::and(self.condition(a, star)?, self.condition(b, star)?),
            Condition::Or(a, b) => Filter::or(self.condition(a, star)?, self.condition(b, star)?),
            Condition::Leaf(p) => {
                let target = self.attr(&p.lhs, star);
                match &p.rhs {
                    Operand::Literal(l) => Filter::cmp(p.op, target, vec![l.clone()]),
                    Operand::Range(lo, hi) => Filter::cmp(p.op, target, vec![lo.clone(), hi.clone()]),
                    Operand::Subquery(q) => {
                        if q.set_op.is_some() {
                            return Err(Error::UnsupportedSql(
                                "set operation inside a subquery".into(),
                            ));
                        }
                        Filter::subquery(p.op, target, self.scope(q)?)
                    }
                }
            }
        })
    }

    /// `t.key IN (SELECT t.key FROM t)`: keeps a FROM table that owns no
    /// referenced column visible to lowering.
    fn table_anchor(&self, table: &str) -> Result<Filter> {
        let t = self
            .schema
            .table(table)
            .ok_or_else(|| Error::Resolution(format!("table `{table}`")))?;
        let key = t
            .primary_key_column()
            .or_else(|| t.columns.first())
            .ok_or_else(|| Error::MissingPrimaryKey(t.name.clone()))?;
        let a = Attr::new(crate::semql::AggOp::None, key.original_name.clone(), t.name.clone());
        Ok(Filter::subquery(CmpOp::In, a.clone(), Query::new(vec![a])))
    }

    fn scope(&self, q: &SqlQuery) -> Result<Query> {
        let mut seen: Vec<String> = Vec::new();
        for t in q.from_tables() {
            let t = t.to_lowercase();
            if seen.contains(&t) {
                return Err(Error::UnsupportedSql(format!("self-join on `{t}`")));
            }
            seen.push(t);
        }
        if q.select.len() > MAX_SELECT_ARITY {
            return Err(Error::UnsupportedSql(format!(
                "{} select items (at most {MAX_SELECT_ARITY})",
                q.select.len()
            )));
        }
        if q.limit.is_some() && q.order_by.is_none() {
            return Err(Error::UnsupportedSql("LIMIT without ORDER BY".into()));
        }
        let star = assign_star_table(q, self.schema, self.opts)?;
        let star = star.as_deref();

        let mut query = Query::new(q.select.iter().map(|v| self.attr(v, star)).collect());
        query.select.distinct = q.distinct;

        let mut parts = Vec::new();
        for c in [&q.where_clause, &q.having].into_iter().flatten() {
            parts.push(self.condition(c, star)?);
        }
        for t in column_less_tables(q) {
            if Some(t.as_str()) != star {
                parts.push(self.table_anchor(&t)?);
            }
        }
        query.filter = Filter::conjoin(parts);

        query.order = q.order_by.as_ref().map(|o| {
            let target = self.attr(&o.target, star);
            match q.limit {
                Some(limit) => OrderClause::Superlative {
                    direction: o.direction,
                    target,
                    limit,
                },
                None => OrderClause::Order {
                    direction: o.direction,
                    target,
                },
            }
        });
        Ok(query)
    }
}

/// Lifts a parsed query. GROUP BY is dropped; it is recovered when lowering.
pub fn lift_query(q: &SqlQuery, schema: &Schema, opts: &LiftOptions) -> Result<SemQlTree> {
    let lifter = Lifter { schema, opts };
    let root = match &q.set_op {
        None => Root::Single(lifter.scope(q)?),
        Some((op, right)) => {
            if right.set_op.is_some() {
                return Err(Error::UnsupportedSql("more than one set operation".into()));
            }
            let left = SqlQuery {
                set_op: None,
                ..q.clone()
            };
            Root::Compound {
                op: *op,
                left: lifter.scope(&left)?,
                right: lifter.scope(right)?,
            }
        }
    };
    Ok(SemQlTree { root })
}
