//! Skeletons: trees with everything below each `A` node removed.

use std::fmt::{self, Write};

use super::{Filter, OrderClause, Query, Root, SemQlTree};

/// A tree whose attribute positions hold no payload. Literals and limits are
/// erased as well, leaving only shape.
pub type Skeleton = SemQlTree<()>;

pub fn extract_skeleton<P: Clone>(tree: &SemQlTree<P>) -> Skeleton {
    tree.strip_values().map_attrs(&mut |_| ())
}

fn write_query(q: &Query<()>, out: &mut String) {
    out.push_str("R(Select(");
    if q.select.distinct {
        out.push_str("distinct(");
    }
    out.push_str(&vec!["A"; q.select.attrs.len()].join(", "));
    if q.select.distinct {
        out.push(')');
    }
    out.push(')');
    if let Some(f) = &q.filter {
        out.push_str(", Filter(");
        write_filter(f, out);
        out.push(')');
    }
    if let Some(o) = &q.order {
        let head = match o {
            OrderClause::Order { .. } => "Order",
            OrderClause::Superlative { .. } => "Superlative",
        };
        let _ = write!(out, ", {head}({}(A))", o.direction().as_str());
    }
    out.push(')');
}

fn write_filter(f: &Filter<()>, out: &mut String) {
    match f {
        Filter::And(a, b) | Filter::Or(a, b) => {
            out.push_str(if matches!(f, Filter::And(..)) { "and(" } else { "or(" });
            write_filter(a, out);
            out.push_str(", ");
            write_filter(b, out);
            out.push(')');
        }
        Filter::Cmp { op, .. } => {
            let _ = write!(out, "{}(A)", op.as_str());
        }
        Filter::Subquery { op, query, .. } => {
            let _ = write!(out, "{}(A, ", op.as_str());
            write_query(query, out);
            out.push(')');
        }
    }
}

/// Compact form, e.g. `Z(R(Select(A), Filter(>(A))))`.
impl fmt::Display for SemQlTree<()> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::from("Z(");
        match &self.root {
            Root::Single(q) => write_query(q, &mut out),
            Root::Compound { op, left, right } => {
                out.push_str(op.as_str());
                out.push('(');
                write_query(left, &mut out);
                out.push_str(", ");
                write_query(right, &mut out);
                out.push(')');
            }
        }
        out.push(')');
        f.write_str(&out)
    }
}
