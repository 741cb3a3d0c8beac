//! The SemQL production set.
//!
//! Rule ids are dense and part of the serialized action format: new rules may
//! only ever be appended.

use std::fmt;
use std::sync::OnceLock;

use super::{AggOp, CmpOp, Direction, SetOp};

/// Grammar symbols. `Column` and `Table` are terminals filled by
/// column/table selection rather than by rule application.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Root,
    Query,
    Select,
    Attr,
    Filter,
    Order,
    Superlative,
    Column,
    Table,
}

impl NodeKind {
    /// The conventional single-letter or word name of the symbol.
    pub fn symbol(self) -> &'static str {
        match self {
            NodeKind::Root => "Z",
            NodeKind::Query => "R",
            NodeKind::Select => "Select",
            NodeKind::Attr => "A",
            NodeKind::Filter => "Filter",
            NodeKind::Order => "Order",
            NodeKind::Superlative => "Superlative",
            NodeKind::Column => "C",
            NodeKind::Table => "T",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderKind {
    Order,
    Superlative,
}

/// What a production means, independent of its id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleKind {
    Root(Option<SetOp>),
    Query {
        filter: bool,
        order: Option<OrderKind>,
    },
    Select {
        distinct: bool,
        arity: usize,
    },
    Attr {
        agg: AggOp,
        distinct: bool,
    },
    And,
    Or,
    Cmp(CmpOp),
    Subquery(CmpOp),
    Order(Direction),
    Superlative(Direction),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarRule {
    pub id: usize,
    pub lhs: NodeKind,
    pub rhs: Vec<NodeKind>,
    pub kind: RuleKind,
}

pub const MAX_SELECT_ARITY: usize = 5;

impl RuleKind {
    pub fn lhs(self) -> NodeKind {
        match self {
            RuleKind::Root(_) => NodeKind::Root,
            RuleKind::Query { .. } => NodeKind::Query,
            RuleKind::Select { .. } => NodeKind::Select,
            RuleKind::Attr { .. } => NodeKind::Attr,
            RuleKind::And | RuleKind::Or | RuleKind::Cmp(_) | RuleKind::Subquery(_) => {
                NodeKind::Filter
            }
            RuleKind::Order(_) => NodeKind::Order,
            RuleKind::Superlative(_) => NodeKind::Superlative,
        }
    }

    pub fn rhs(self) -> Vec<NodeKind> {
        use NodeKind::*;
        match self {
            RuleKind::Root(Some(_)) => vec![Query, Query],
            RuleKind::Root(None) => vec![Query],
            RuleKind::Query { filter, order } => {
                let mut rhs = vec![Select];
                if filter {
                    rhs.push(Filter);
                }
                match order {
                    Some(OrderKind::Order) => rhs.push(Order),
                    Some(OrderKind::Superlative) => rhs.push(Superlative),
                    None => {}
                }
                rhs
            }
            RuleKind::Select { arity, .. } => vec![Attr; arity],
            RuleKind::Attr { .. } => vec![Column, Table],
            RuleKind::And | RuleKind::Or => vec![Filter, Filter],
            RuleKind::Cmp(_) => vec![Attr],
            RuleKind::Subquery(_) => vec![Attr, Query],
            RuleKind::Order(_) | RuleKind::Superlative(_) => vec![Attr],
        }
    }
}

fn build() -> Vec<GrammarRule> {
    let mut kinds = Vec::new();
    kinds.extend(SetOp::ALL.map(|op| RuleKind::Root(Some(op))));
    kinds.push(RuleKind::Root(None));
    for (filter, order) in [
        (false, None),
        (true, None),
        (false, Some(OrderKind::Order)),
        (false, Some(OrderKind::Superlative)),
        (true, Some(OrderKind::Order)),
        (true, Some(OrderKind::Superlative)),
    ] {
        kinds.push(RuleKind::Query { filter, order });
    }
    for arity in 1..=MAX_SELECT_ARITY {
        kinds.push(RuleKind::Select {
            distinct: false,
            arity,
        });
    }
    kinds.extend(AggOp::ALL.map(|agg| RuleKind::Attr {
        agg,
        distinct: false,
    }));
    kinds.push(RuleKind::And);
    kinds.push(RuleKind::Or);
    kinds.extend(CmpOp::ALL.map(RuleKind::Cmp));
    kinds.extend(
        CmpOp::ALL
            .into_iter()
            .filter(|op| op.takes_subquery())
            .map(RuleKind::Subquery),
    );
    kinds.push(RuleKind::Order(Direction::Asc));
    kinds.push(RuleKind::Order(Direction::Desc));
    kinds.push(RuleKind::Superlative(Direction::Asc));
    kinds.push(RuleKind::Superlative(Direction::Desc));
    // DISTINCT variants were appended after the base set.
    for arity in 1..=MAX_SELECT_ARITY {
        kinds.push(RuleKind::Select {
            distinct: true,
            arity,
        });
    }
    kinds.extend(
        AggOp::ALL
            .into_iter()
            .filter(|agg| agg.is_aggregate())
            .map(|agg| RuleKind::Attr {
                agg,
                distinct: true,
            }),
    );

    kinds
        .into_iter()
        .enumerate()
        .map(|(id, kind)| GrammarRule {
            id,
            lhs: kind.lhs(),
            rhs: kind.rhs(),
            kind,
        })
        .collect()
}

pub fn rules() -> &'static [GrammarRule] {
    static RULES: OnceLock<Vec<GrammarRule>> = OnceLock::new();
    RULES.get_or_init(build)
}

pub fn rule(id: usize) -> Option<&'static GrammarRule> {
    rules().get(id)
}

/// Id of the rule with the given meaning.
pub fn rule_id(kind: RuleKind) -> usize {
    rules()
        .iter()
        .find(|r| r.kind == kind)
        .map(|r| r.id)
        .unwrap_or_else(|| panic!("no grammar rule for {kind:?}"))
}

/// Rules whose left-hand side is `lhs`, in id order.
pub fn rules_for(lhs: NodeKind) -> impl Iterator<Item = &'static GrammarRule> {
    rules().iter().filter(move |r| r.lhs == lhs)
}

impl fmt::Display for GrammarRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ->", self.lhs)?;
        let label = match self.kind {
            RuleKind::Root(Some(op)) => Some(op.as_str().to_string()),
            RuleKind::Select { distinct: true, .. } => Some("distinct".to_string()),
            RuleKind::Attr { agg, distinct } => Some(if distinct {
                format!("{} distinct", agg.as_str())
            } else {
                agg.as_str().to_string()
            }),
            RuleKind::And => Some("and".into()),
            RuleKind::Or => Some("or".into()),
            RuleKind::Cmp(op) | RuleKind::Subquery(op) => Some(op.as_str().to_string()),
            RuleKind::Order(d) | RuleKind::Superlative(d) => Some(d.as_str().to_string()),
            _ => None,
        };
        if let Some(label) = label {
            write!(f, " {label}")?;
        }
        for kind in &self.rhs {
            write!(f, " {kind}")?;
        }
        Ok(())
    }
}
