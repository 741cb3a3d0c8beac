use std::fmt;

use super::grammar::MAX_SELECT_ARITY;
use super::{Attr, CmpOp, Filter, OrderClause, Query, Root, SemQlTree};
use crate::schema::Schema;

/// A grammar or schema-consistency problem, located by a node path such as
/// `Z/R[1]/Filter/and[0]/A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

struct Checker<'s> {
    schema: &'s Schema,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn report(&mut self, path: &str, message: impl Into<String>) {
        self.out.push(Violation {
            path: path.to_string(),
            message: message.into(),
        });
    }

    fn attr(&mut self, a: &Attr, path: &str) {
        if a.column.is_empty() {
            self.report(path, "A node has an empty column");
        }
        if a.distinct && !a.agg.is_aggregate() {
            self.report(path, "DISTINCT inside an A node requires an aggregate");
        }
        let Some(table_name) = &a.table else {
            self.report(path, "A node missing table declaration");
            return;
        };
        let Some(table) = self.schema.table(table_name) else {
            self.report(path, format!("unknown table `{table_name}`"));
            return;
        };
        if !a.is_star() && !table.has_column(&a.column) {
            self.report(
                path,
                format!("table `{}` has no column `{}`", table.name, a.column),
            );
        }
    }

    fn query(&mut self, q: &Query, path: &str) {
        let n = q.select.attrs.len();
        if n == 0 || n > MAX_SELECT_ARITY {
            self.report(
                &format!("{path}/Select"),
                format!("Select must have 1 to {MAX_SELECT_ARITY} A nodes, found {n}"),
            );
        }
        for (i, a) in q.select.attrs.iter().enumerate() {
            self.attr(a, &format!("{path}/Select/A[{i}]"));
        }
        if let Some(f) = &q.filter {
            self.filter(f, &format!("{path}/Filter"));
        }
        match &q.order {
            Some(OrderClause::Order { target, .. }) => self.attr(target, &format!("{path}/Order/A")),
            Some(OrderClause::Superlative { target, limit, .. }) => {
                if *limit < 1 {
                    self.report(&format!("{path}/Superlative"), "Superlative limit must be at least 1");
                }
                self.attr(target, &format!("{path}/Superlative/A"));
            }
            None => {}
        }
    }

    fn filter(&mut self, f: &Filter, path: &str) {
        match f {
            Filter::And(a, b) | Filter::Or(a, b) => {
                let word = if matches!(f, Filter::And(..)) { "and" } else { "or" };
                self.filter(a, &format!("{path}/{word}[0]"));
                self.filter(b, &format!("{path}/{word}[1]"));
            }
            Filter::Cmp { op, target, values } => {
                let path = format!("{path}/{}", op.as_str());
                let ok = match op {
                    CmpOp::Between => values.is_empty() || values.len() == 2,
                    _ => values.len() <= 1,
                };
                if !ok {
                    let expected = if *op == CmpOp::Between { "0 or 2" } else { "at most 1" };
                    self.report(
                        &path,
                        format!("`{}` carries {expected} literals, found {}", op.as_str(), values.len()),
                    );
                }
                self.attr(target, &format!("{path}/A"));
            }
            Filter::Subquery { op, target, query } => {
                let path = format!("{path}/{}", op.as_str());
                if !op.takes_subquery() {
                    self.report(&path, format!("`{}` cannot compare against a subquery", op.as_str()));
                }
                self.attr(target, &format!("{path}/A"));
                self.query(query, &format!("{path}/R"));
            }
        }
    }
}

/// Every violation in `tree`; empty means valid.
pub fn validate(tree: &SemQlTree, schema: &Schema) -> Vec<Violation> {
    let mut c = Checker {
        schema,
        out: Vec::new(),
    };
    match &tree.root {
        Root::Single(q) => c.query(q, "Z/R"),
        Root::Compound { left, right, .. } => {
            c.query(left, "Z/R[0]");
            c.query(right, "Z/R[1]");
        }
    }
    c.out
}
