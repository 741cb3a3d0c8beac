//! SemQL: a tree-structured query language that sits between questions and
//! SQL. It keeps what a question talks about (selected columns, conditions,
//! ordering) and drops what only SQL needs (FROM, GROUP BY, the WHERE/HAVING
//! split), which are recovered later from the schema.
//!
//! Node types are generic over the payload stored at attribute (`A`)
//! positions. A full tree carries [`Attr`]; a [`Skeleton`] carries `()`.

pub mod actions;
pub mod grammar;
pub mod skeleton;
pub mod text;
pub mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use actions::{
    applicable_actions, from_actions, parse_actions, print_actions, to_actions, Action,
    ColumnSource, DerivationState,
};
pub use grammar::{GrammarRule, NodeKind, RuleKind};
pub use skeleton::{extract_skeleton, Skeleton};
pub use text::{parse_semql, print_semql};
pub use validate::{validate, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggOp {
    None,
    Max,
    Min,
    Count,
    Sum,
    Avg,
}

impl AggOp {
    pub const ALL: [AggOp; 6] = [
        AggOp::None,
        AggOp::Max,
        AggOp::Min,
        AggOp::Count,
        AggOp::Sum,
        AggOp::Avg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AggOp::None => "none",
            AggOp::Max => "max",
            AggOp::Min => "min",
            AggOp::Count => "count",
            AggOp::Sum => "sum",
            AggOp::Avg => "avg",
        }
    }

    pub fn parse(s: &str) -> Option<AggOp> {
        AggOp::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
    }

    pub fn is_aggregate(self) -> bool {
        self != AggOp::None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetOp {
    Intersect,
    Union,
    Except,
}

impl SetOp {
    pub const ALL: [SetOp; 3] = [SetOp::Intersect, SetOp::Union, SetOp::Except];

    pub fn as_str(self) -> &'static str {
        match self {
            SetOp::Intersect => "intersect",
            SetOp::Union => "union",
            SetOp::Except => "except",
        }
    }

    pub fn parse(s: &str) -> Option<SetOp> {
        SetOp::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Asc,
    Desc,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Asc => "asc",
            Direction::Desc => "desc",
        }
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s.to_ascii_lowercase().as_str() {
            "asc" => Some(Direction::Asc),
            "desc" => Some(Direction::Desc),
            _ => None,
        }
    }
}

/// Comparison operators available at filter leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Between,
    Like,
    NotLike,
    In,
    NotIn,
}

impl CmpOp {
    pub const ALL: [CmpOp; 11] = [
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

    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Between => "between",
            CmpOp::Like => "like",
            CmpOp::NotLike => "not_like",
            CmpOp::In => "in",
            CmpOp::NotIn => "not_in",
        }
    }

    pub fn parse(s: &str) -> Option<CmpOp> {
        CmpOp::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
    }

    /// Whether a subquery may stand on the right-hand side.
    pub fn takes_subquery(self) -> bool {
        self != CmpOp::Between
    }
}

/// An opaque literal token, kept verbatim (quotes included) for round trips.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal(pub String);

impl Literal {
    pub fn new(text: impl Into<String>) -> Self {
        Literal(text.into())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An aggregate/column/table triple (the grammar's `A` node with its `C` and
/// `T` children). `table` is optional only so that malformed input can be
/// represented and reported by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Attr {
    pub agg: AggOp,
    pub distinct: bool,
    pub column: String,
    pub table: Option<String>,
}

impl Attr {
    pub fn new(agg: AggOp, column: impl Into<String>, table: impl Into<String>) -> Self {
        Attr {
            agg,
            distinct: false,
            column: column.into(),
            table: Some(table.into()),
        }
    }

    pub fn distinct(mut self) -> Self {
        self.distinct = true;
        self
    }

    pub fn is_star(&self) -> bool {
        self.column == "*"
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SemQlTree<P = Attr> {
    pub root: Root<P>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Root<P = Attr> {
    Single(Query<P>),
    Compound {
        op: SetOp,
        left: Query<P>,
        right: Query<P>,
    },
}

/// One SELECT-level query (the grammar's `R` node).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query<P = Attr> {
    pub select: Select<P>,
    pub filter: Option<Filter<P>>,
    pub order: Option<OrderClause<P>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Select<P = Attr> {
    pub distinct: bool,
    pub attrs: Vec<P>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Filter<P = Attr> {
    And(Box<Filter<P>>, Box<Filter<P>>),
    Or(Box<Filter<P>>, Box<Filter<P>>),
    Cmp {
        op: CmpOp,
        target: P,
        values: Vec<Literal>,
    },
    Subquery {
        op: CmpOp,
        target: P,
        query: Box<Query<P>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderClause<P = Attr> {
    Order {
        direction: Direction,
        target: P,
    },
    Superlative {
        direction: Direction,
        target: P,
        limit: u64,
    },
}

impl<P> OrderClause<P> {
    pub fn target(&self) -> &P {
        match self {
            OrderClause::Order { target, .. } | OrderClause::Superlative { target, .. } => target,
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            OrderClause::Order { direction, .. } | OrderClause::Superlative { direction, .. } => {
                *direction
            }
        }
    }
}

impl<P> SemQlTree<P> {
    pub fn single(query: Query<P>) -> Self {
        SemQlTree {
            root: Root::Single(query),
        }
    }

    pub fn queries(&self) -> Vec<&Query<P>> {
        match &self.root {
            Root::Single(q) => vec![q],
            Root::Compound { left, right, .. } => vec![left, right],
        }
    }

    /// Rebuilds the tree with every attribute payload mapped through `f`,
    /// visiting attributes in pre-order.
    pub fn map_attrs<Q>(&self, f: &mut impl FnMut(&P) -> Q) -> SemQlTree<Q> {
        SemQlTree {
            root: match &self.root {
                Root::Single(q) => Root::Single(q.map_attrs(f)),
                Root::Compound { op, left, right } => {
                    let left = left.map_attrs(f);
                    Root::Compound {
                        op: *op,
                        left,
                        right: right.map_attrs(f),
                    }
                }
            },
        }
    }

    /// All attribute payloads in pre-order, nested queries included.
    pub fn attrs(&self) -> Vec<&P> {
        let mut out = Vec::new();
        for q in self.queries() {
            q.collect_attrs(&mut out, true);
        }
        out
    }
}

impl<P: Clone> SemQlTree<P> {
    /// Drops literals and resets superlative limits to 1: the parts of a tree
    /// that an action sequence does not encode.
    pub fn strip_values(&self) -> Self {
        let mut tree = self.clone();
        for q in match &mut tree.root {
            Root::Single(q) => vec![q],
            Root::Compound { left, right, .. } => vec![left, right],
        } {
            q.strip_values();
        }
        tree
    }
}

impl<P> Query<P> {
    pub fn new(attrs: Vec<P>) -> Self {
        Query {
            select: Select {
                distinct: false,
                attrs,
            },
            filter: None,
            order: None,
        }
    }

    pub fn with_filter(mut self, filter: Filter<P>) -> Self {
        self.filter = Some(filter);
        self
    }

    pub fn with_order(mut self, order: OrderClause<P>) -> Self {
        self.order = Some(order);
        self
    }

    pub fn map_attrs<Q>(&self, f: &mut impl FnMut(&P) -> Q) -> Query<Q> {
        let attrs = self.select.attrs.iter().map(&mut *f).collect();
        let filter = self.filter.as_ref().map(|x| x.map_attrs(f));
        let order = self.order.as_ref().map(|o| match o {
            OrderClause::Order { direction, target } => OrderClause::Order {
                direction: *direction,
                target: f(target),
            },
            OrderClause::Superlative {
                direction,
                target,
                limit,
            } => OrderClause::Superlative {
                direction: *direction,
                target: f(target),
                limit: *limit,
            },
        });
        Query {
            select: Select {
                distinct: self.select.distinct,
                attrs,
            },
            filter,
            order,
        }
    }

    /// Attributes in pre-order. With `nested`, descends into subqueries.
    pub fn collect_attrs<'a>(&'a self, out: &mut Vec<&'a P>, nested: bool) {
        out.extend(self.select.attrs.iter());
        if let Some(f) = &self.filter {
            f.collect_attrs(out, nested);
        }
        if let Some(o) = &self.order {
            out.push(o.target());
        }
    }

    /// Attributes of this scope only (subqueries excluded).
    pub fn scope_attrs(&self) -> Vec<&P> {
        let mut out = Vec::new();
        self.collect_attrs(&mut out, false);
        out
    }
}

impl<P: Clone> Query<P> {
    fn strip_values(&mut self) {
        if let Some(f) = &mut self.filter {
            f.strip_values();
        }
        if let Some(OrderClause::Superlative { limit, .. }) = &mut self.order {
            *limit = 1;
        }
    }
}

impl<P> Filter<P> {
    pub fn and(a: Filter<P>, b: Filter<P>) -> Self {
        Filter::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Filter<P>, b: Filter<P>) -> Self {
        Filter::Or(Box::new(a), Box::new(b))
    }

    pub fn cmp(op: CmpOp, target: P, values: Vec<Literal>) -> Self {
        Filter::Cmp { op, target, values }
    }

    pub fn subquery(op: CmpOp, target: P, query: Query<P>) -> Self {
        Filter::Subquery {
            op,
            target,
            query: Box::new(query),
        }
    }

    pub fn map_attrs<Q>(&self, f: &mut impl FnMut(&P) -> Q) -> Filter<Q> {
        match self {
            Filter::And(a, b) => {
                let a = a.map_attrs(f);
                Filter::And(Box::new(a), Box::new(b.map_attrs(f)))
            }
            Filter::Or(a, b) => {
                let a = a.map_attrs(f);
                Filter::Or(Box::new(a), Box::new(b.map_attrs(f)))
            }
            Filter::Cmp { op, target, values } => Filter::Cmp {
                op: *op,
                target: f(target),
                values: values.clone(),
            },
            Filter::Subquery { op, target, query } => {
                let target = f(target);
                Filter::Subquery {
                    op: *op,
                    target,
                    query: Box::new(query.map_attrs(f)),
                }
            }
        }
    }

    fn collect_attrs<'a>(&'a self, out: &mut Vec<&'a P>, nested: bool) {
        match self {
            Filter::And(a, b) | Filter::Or(a, b) => {
                a.collect_attrs(out, nested);
                b.collect_attrs(out, nested);
            }
            Filter::Cmp { target, .. } => out.push(target),
            Filter::Subquery { target, query, .. } => {
                out.push(target);
                if nested {
                    query.collect_attrs(out, nested);
                }
            }
        }
    }

    /// Conjuncts of a top-level AND chain, left to right.
    pub fn conjuncts(&self) -> Vec<&Filter<P>> {
        match self {
            Filter::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            other => vec![other],
        }
    }

    /// Left-associated AND over `parts`; `None` when empty.
    pub fn conjoin(parts: Vec<Filter<P>>) -> Option<Filter<P>> {
        parts.into_iter().reduce(Filter::and)
    }
}

impl<P: Clone> Filter<P> {
    fn strip_values(&mut self) {
        match self {
            Filter::And(a, b) | Filter::Or(a, b) => {
                a.strip_values();
                b.strip_values();
            }
            Filter::Cmp { values, .. } => values.clear(),
            Filter::Subquery { query, .. } => query.strip_values(),
        }
    }
}

impl fmt::Display for SemQlTree<Attr> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_semql(self))
    }
}
