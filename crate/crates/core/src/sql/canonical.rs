//! Order-insensitive, value-free normal form used for exact matching.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{ColumnExpr, Condition, Operand, SqlQuery, ValueExpr};
use crate::schema::ColumnRef;
use crate::semql::{AggOp, CmpOp, Direction, SetOp};

/// A value expression with identifiers case-folded; `column: None` is `*`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ValueUnit {
    pub agg: AggOp,
    pub distinct: bool,
    pub column: Option<ColumnRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum RhsUnit {
    /// Any literal or literal range; the value itself is erased.
    Value,
    Subquery(Box<CanonicalForm>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CondUnit {
    pub op: CmpOp,
    pub lhs: ValueUnit,
    pub rhs: RhsUnit,
}

/// Flattened AND/OR tree whose children are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum CanonCond {
    Leaf(CondUnit),
    And(Vec<CanonCond>),
    Or(Vec<CanonCond>),
}

impl CanonCond {
    pub fn leaves(&self) -> Vec<&CondUnit> {
        match self {
            CanonCond::Leaf(u) => vec![u],
            CanonCond::And(xs) | CanonCond::Or(xs) => xs.iter().flat_map(|x| x.leaves()).collect(),
        }
    }

    fn has_or(&self) -> bool {
        match self {
            CanonCond::Leaf(_) => false,
            CanonCond::Or(_) => true,
            CanonCond::And(xs) => xs.iter().any(CanonCond::has_or),
        }
    }
}

/// ORDER BY target plus whether a LIMIT accompanies it. The count itself is
/// not compared.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct OrderUnit {
    pub direction: Direction,
    pub target: ValueUnit,
    pub limited: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CanonicalForm {
    pub distinct: bool,
    /// Sorted multiset.
    pub select: Vec<ValueUnit>,
    pub from: BTreeSet<String>,
    pub where_clause: Option<CanonCond>,
    pub group_by: BTreeSet<ColumnRef>,
    pub having: Option<CanonCond>,
    pub order_by: Option<OrderUnit>,
    pub limit: bool,
    pub keywords: BTreeSet<String>,
    pub set_op: Option<(SetOp, Box<CanonicalForm>)>,
}

impl CanonicalForm {
    pub fn where_leaves(&self) -> Vec<&CondUnit> {
        self.where_clause.as_ref().map_or_else(Vec::new, |c| c.leaves())
    }

    pub fn having_leaves(&self) -> Vec<&CondUnit> {
        self.having.as_ref().map_or_else(Vec::new, |c| c.leaves())
    }
}

fn value_unit(v: &ValueExpr) -> ValueUnit {
    ValueUnit {
        agg: v.agg,
        // DISTINCT only means something inside an aggregate.
        distinct: v.distinct && v.agg.is_aggregate(),
        column: match &v.column {
            ColumnExpr::Star => None,
            ColumnExpr::Column(c) => Some(c.folded()),
        },
    }
}

fn flatten(c: &Condition, and: bool, out: &mut Vec<CanonCond>) {
    match c {
        Condition::And(a, b) if and => {
            flatten(a, and, out);
            flatten(b, and, out);
        }
        Condition::Or(a, b) if !and => {
            flatten(a, and, out);
            flatten(b, and, out);
        }
        other => out.push(cond(other)),
    }
}

fn cond(c: &Condition) -> CanonCond {
    match c {
        Condition::And(..) | Condition::Or(..) => {
            let and = matches!(c, Condition::And(..));
            let mut parts = Vec::new();
            flatten(c, and, &mut parts);
            parts.sort();
            if and {
                CanonCond::And(parts)
            } else {
                CanonCond::Or(parts)
            }
        }
        Condition::Leaf(p) => CanonCond::Leaf(CondUnit {
            op: p.op,
            lhs: value_unit(&p.lhs),
            rhs: match &p.rhs {
                Operand::Literal(_) | Operand::Range(..) => RhsUnit::Value,
                Operand::Subquery(q) => RhsUnit::Subquery(Box::new(canonicalize(q))),
            },
        }),
    }
}

/// Spider-convention normal form: component multisets, literals erased,
/// subqueries normalized recursively.
pub fn canonicalize(q: &SqlQuery) -> CanonicalForm {
    let mut select: Vec<ValueUnit> = q.select.iter().map(value_unit).collect();
    select.sort();
    let where_clause = q.where_clause.as_ref().map(cond);
    let having = q.having.as_ref().map(cond);
    let set_op = q
        .set_op
        .as_ref()
        .map(|(op, right)| (*op, Box::new(canonicalize(right))));

    let mut keywords = BTreeSet::new();
    let mut kw = |k: &str| {
        keywords.insert(k.to_string());
    };
    if q.distinct {
        kw("distinct");
    }
    if where_clause.is_some() {
        kw("where");
    }
    if !q.group_by.is_empty() {
        kw("group");
    }
    if having.is_some() {
        kw("having");
    }
    if q.order_by.is_some() {
        kw("order");
    }
    if q.limit.is_some() {
        kw("limit");
    }
    if let Some((op, _)) = &set_op {
        kw(op.as_str());
    }
    for c in [&where_clause, &having].into_iter().flatten() {
        if c.has_or() {
            kw("or");
        }
        for leaf in c.leaves() {
            match leaf.op {
                CmpOp::NotIn => {
                    kw("not");
                    kw("in");
                }
                CmpOp::NotLike => {
                    kw("not");
                    kw("like");
                }
                CmpOp::In => kw("in"),
                CmpOp::Like => kw("like"),
                _ => {}
            }
        }
    }

    CanonicalForm {
        distinct: q.distinct,
        select,
        from: q.from.iter().map(|t| t.table.to_lowercase()).collect(),
        where_clause,
        group_by: q.group_by.iter().map(ColumnRef::folded).collect(),
        having,
        order_by: q.order_by.as_ref().map(|o| OrderUnit {
            direction: o.direction,
            target: value_unit(&o.target),
            limited: q.limit.is_some(),
        }),
        limit: q.limit.is_some(),
        keywords,
        set_op,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sql::parse_sql;

    fn canon(text: &str) -> CanonicalForm {
        canonicalize(&parse_sql(text, &fixtures::concert_db()).unwrap())
    }

    #[test]
    fn conjunct_order_is_ignored() {
        assert_eq!(
            canon("SELECT name FROM orchestra WHERE year = 1 AND conductor = 'x'"),
            canon("SELECT name FROM orchestra WHERE conductor = 'x' AND year = 1")
        );
    }

    #[test]
    fn values_are_erased() {
        assert_eq!(
            canon("SELECT name FROM orchestra WHERE year = 1"),
            canon("SELECT name FROM orchestra WHERE year = 2")
        );
        assert_eq!(
            canon("SELECT name FROM orchestra ORDER BY year LIMIT 1"),
            canon("SELECT name FROM orchestra ORDER BY year LIMIT 3")
        );
    }

    #[test]
    fn select_column_matters() {
        assert_ne!(canon("SELECT name FROM orchestra"), canon("SELECT conductor FROM orchestra"));
    }

    #[test]
    fn connective_structure_matters() {
        assert_ne!(
            canon("SELECT name FROM orchestra WHERE year = 1 AND name = 'a' OR conductor = 'b'"),
            canon("SELECT name FROM orchestra WHERE year = 1 AND (name = 'a' OR conductor = 'b')")
        );
        assert_eq!(
            canon("SELECT name FROM orchestra WHERE (year = 1 AND name = 'a') AND conductor = 'b'"),
            canon("SELECT name FROM orchestra WHERE year = 1 AND (name = 'a' AND conductor = 'b')")
        );
    }

    #[test]
    fn identifier_case_is_folded() {
        assert_eq!(canon("SELECT Name FROM Orchestra"), canon("select name from orchestra"));
    }
}
