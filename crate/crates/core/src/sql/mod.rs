//! The SQL subset that SemQL maps to and from: one SELECT chain with inner
//! joins, WHERE/GROUP BY/HAVING/ORDER BY/LIMIT, one level of set operation,
//! and nested subqueries inside conditions.
//!
//! Every column in the AST is resolved against the schema and spelled the way
//! the schema spells it.

mod canonical;
mod lexer;
mod parser;
mod printer;

use serde::{Deserialize, Serialize};

pub use canonical::{canonicalize, CanonCond, CanonicalForm, CondUnit, OrderUnit, RhsUnit, ValueUnit};
pub use parser::parse_sql;
pub use printer::print_sql;

use crate::schema::ColumnRef;
use crate::semql::{AggOp, CmpOp, Direction, Literal, SetOp};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ColumnExpr {
    Star,
    Column(ColumnRef),
}

impl ColumnExpr {
    pub fn column(&self) -> Option<&ColumnRef> {
        match self {
            ColumnExpr::Star => None,
            ColumnExpr::Column(c) => Some(c),
        }
    }
}

/// `agg(DISTINCT column)`, `column`, `*` and friends. For a bare column,
/// `distinct` marks nothing; query-level DISTINCT lives on [`SqlQuery`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ValueExpr {
    pub agg: AggOp,
    pub distinct: bool,
    pub column: ColumnExpr,
}

impl ValueExpr {
    pub fn column(c: ColumnRef) -> Self {
        ValueExpr {
            agg: AggOp::None,
            distinct: false,
            column: ColumnExpr::Column(c),
        }
    }

    pub fn aggregate(agg: AggOp, column: ColumnExpr) -> Self {
        ValueExpr {
            agg,
            distinct: false,
            column,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinedTable {
    pub table: String,
    /// Column equalities of the ON clause; empty for the first table.
    pub on: Vec<(ColumnRef, ColumnRef)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operand {
    Literal(Literal),
    Range(Literal, Literal),
    Subquery(Box<SqlQuery>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub op: CmpOp,
    pub lhs: ValueExpr,
    pub rhs: Operand,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
    Leaf(Predicate),
}

impl Condition {
    pub fn and(a: Condition, b: Condition) -> Self {
        Condition::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Condition, b: Condition) -> Self {
        Condition::Or(Box::new(a), Box::new(b))
    }

    /// Leaves left to right.
    pub fn leaves(&self) -> Vec<&Predicate> {
        match self {
            Condition::And(a, b) | Condition::Or(a, b) => {
                let mut out = a.leaves();
                out.extend(b.leaves());
                out
            }
            Condition::Leaf(p) => vec![p],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderBy {
    pub direction: Direction,
    pub target: ValueExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqlQuery {
    pub distinct: bool,
    pub select: Vec<ValueExpr>,
    pub from: Vec<JoinedTable>,
    pub where_clause: Option<Condition>,
    pub group_by: Vec<ColumnRef>,
    pub having: Option<Condition>,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
    pub set_op: Option<(SetOp, Box<SqlQuery>)>,
}

impl SqlQuery {
    /// A bare `SELECT ... FROM table`.
    pub fn new(select: Vec<ValueExpr>, table: impl Into<String>) -> Self {
        SqlQuery {
            distinct: false,
            select,
            from: vec![JoinedTable {
                table: table.into(),
                on: Vec::new(),
            }],
            where_clause: None,
            group_by: Vec::new(),
            having: None,
            order_by: None,
            limit: None,
            set_op: None,
        }
    }

    pub fn from_tables(&self) -> impl Iterator<Item = &str> {
        self.from.iter().map(|t| t.table.as_str())
    }

    /// Every value expression in this scope, subqueries and the set-op
    /// operand excluded, in clause order.
    pub fn scope_values(&self) -> Vec<&ValueExpr> {
        let mut out: Vec<&ValueExpr> = self.select.iter().collect();
        for cond in [&self.where_clause, &self.having].into_iter().flatten() {
            out.extend(cond.leaves().into_iter().map(|p| &p.lhs));
        }
        if let Some(o) = &self.order_by {
            out.push(&o.target);
        }
        out
    }
}
