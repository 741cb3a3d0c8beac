use std::fmt::Write;

use super::{ColumnExpr, Condition, Operand, SqlQuery, ValueExpr};
use crate::schema::ColumnRef;
use crate::semql::CmpOp;

const KEYWORDS: &[&str] = &[
    "select", "from", "where", "group", "by", "having", "order", "limit", "join", "on", "as",
    "and", "or", "not", "in", "like", "between", "union", "intersect", "except", "distinct",
    "asc", "desc", "inner", "left", "right", "outer", "cross", "over", "all", "is", "null",
    "exists", "count", "max", "min", "sum", "avg",
];

fn ident(name: &str) -> String {
    let plain = name
        .chars()
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&name.to_ascii_lowercase().as_str());
    if plain {
        name.to_string()
    } else {
        format!("`{name}`")
    }
}

struct Printer {
    qualify: bool,
}

impl Printer {
    fn column(&self, c: &ColumnRef) -> String {
        if self.qualify {
            format!("{}.{}", ident(&c.table), ident(&c.column))
        } else {
            ident(&c.column)
        }
    }

    fn value(&self, v: &ValueExpr) -> String {
        let col = match &v.column {
            ColumnExpr::Star => "*".to_string(),
            ColumnExpr::Column(c) => self.column(c),
        };
        if v.agg.is_aggregate() {
            let distinct = if v.distinct { "DISTINCT " } else { "" };
            format!("{}({distinct}{col})", v.agg.as_str())
        } else {
            col
        }
    }

    fn condition(&self, c: &Condition, out: &mut String) {
        match c {
            Condition::And(a, b) | Condition::Or(a, b) => {
                let is_and = matches!(c, Condition::And(..));
                // Left-associative parsing: a right child of the same kind
                // needs parentheses to keep its shape.
                let left_parens = is_and && matches!(**a, Condition::Or(..));
                let right_parens = match **b {
                    Condition::Leaf(_) => false,
                    Condition::And(..) => true,
                    Condition::Or(..) => true,
                };
                self.wrapped(a, left_parens, out);
                out.push_str(if is_and { " AND " } else { " OR " });
                self.wrapped(b, right_parens, out);
            }
            Condition::Leaf(p) => {
                out.push_str(&self.value(&p.lhs));
                let op = match p.op {
                    CmpOp::Between => "BETWEEN",
                    CmpOp::Like => "LIKE",
                    CmpOp::NotLike => "NOT LIKE",
                    CmpOp::In => "IN",
                    CmpOp::NotIn => "NOT IN",
                    other => other.as_str(),
                };
                let _ = write!(out, " {op} ");
                match &p.rhs {
                    Operand::Literal(l) if matches!(p.op, CmpOp::In | CmpOp::NotIn) => {
                        let _ = write!(out, "({l})");
                    }
                    Operand::Literal(l) => out.push_str(&l.0),
                    Operand::Range(lo, hi) => {
                        let _ = write!(out, "{lo} AND {hi}");
                    }
                    Operand::Subquery(q) => {
                        out.push('(');
                        print_into(q, out);
                        out.push(')');
                    }
                }
            }
        }
    }

    fn wrapped(&self, c: &Condition, parens: bool, out: &mut String) {
        if parens {
            out.push('(');
        }
        self.condition(c, out);
        if parens {
            out.push(')');
        }
    }
}

fn print_core(q: &SqlQuery, out: &mut String) {
    let p = Printer {
        qualify: q.from.len() > 1,
    };
    out.push_str("SELECT ");
    if q.distinct {
        out.push_str("DISTINCT ");
    }
    let items: Vec<String> = q.select.iter().map(|v| p.value(v)).collect();
    out.push_str(&items.join(", "));
    out.push_str(" FROM ");
    for (i, t) in q.from.iter().enumerate() {
        if i > 0 {
            out.push_str(" JOIN ");
        }
        out.push_str(&ident(&t.table));
        for (j, (a, b)) in t.on.iter().enumerate() {
            out.push_str(if j == 0 { " ON " } else { " AND " });
            let _ = write!(out, "{} = {}", p.column(a), p.column(b));
        }
    }
    if let Some(w) = &q.where_clause {
        out.push_str(" WHERE ");
        p.condition(w, out);
    }
    if !q.group_by.is_empty() {
        let cols: Vec<String> = q.group_by.iter().map(|c| p.column(c)).collect();
        let _ = write!(out, " GROUP BY {}", cols.join(", "));
    }
    if let Some(h) = &q.having {
        out.push_str(" HAVING ");
        p.condition(h, out);
    }
    if let Some(o) = &q.order_by {
        let _ = write!(
            out,
            " ORDER BY {} {}",
            p.value(&o.target),
            o.direction.as_str().to_uppercase()
        );
    }
    if let Some(n) = q.limit {
        let _ = write!(out, " LIMIT {n}");
    }
}

fn print_into(q: &SqlQuery, out: &mut String) {
    match &q.set_op {
        None => print_core(q, out),
        Some((op, right)) => {
            out.push('(');
            print_core(q, out);
            let _ = write!(out, ") {} (", op.as_str().to_uppercase());
            print_into(right, out);
            out.push(')');
        }
    }
}

/// Single-line SQL with upper-case keywords and explicit `JOIN ... ON`.
/// Columns are table-qualified whenever their scope joins several tables.
pub fn print_sql(q: &SqlQuery) -> String {
    let mut out = String::new();
    print_into(q, &mut out);
    out
}
