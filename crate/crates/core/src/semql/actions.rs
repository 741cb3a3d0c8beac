//! Action sequences: a tree is generated by a pre-order sequence of
//! `ApplyRule`, `SelectColumn` and `SelectTable` steps.
//!
//! Column selection follows the memory contract: a column picked from the
//! schema moves into memory, and any later use of the same column must be
//! selected from memory. Literals and superlative limits are not actions;
//! trees rebuilt from actions have none and a limit of 1.

use std::fmt;

use super::grammar::{self, NodeKind, OrderKind, RuleKind};
use super::text::name_token;
use super::{Attr, Filter, OrderClause, Query, Root, Select, SemQlTree};
use crate::error::{Error, Result};
use crate::schema::Schema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ColumnSource {
    Schema,
    Memory,
}

impl ColumnSource {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnSource::Schema => "schema",
            ColumnSource::Memory => "memory",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    ApplyRule(usize),
    SelectColumn { column: String, source: ColumnSource },
    SelectTable(String),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::ApplyRule(id) => write!(f, "APPLY {id}"),
            Action::SelectColumn { column, source } => {
                write!(f, "COL {} {}", name_token(column), source.as_str())
            }
            Action::SelectTable(t) => write!(f, "TAB {}", name_token(t)),
        }
    }
}

/// A point in a derivation. Applying an action yields a new state; the old
/// one is left untouched.
#[derive(Debug, Clone)]
pub struct DerivationState<'s> {
    schema: &'s Schema,
    actions: Vec<Action>,
    /// Unexpanded symbols; the top of the stack is the last element.
    frontier: Vec<NodeKind>,
    memory: Vec<String>,
    available: Vec<String>,
}

fn position_ci(list: &[String], name: &str) -> Option<usize> {
    list.iter().position(|c| c.eq_ignore_ascii_case(name))
}

impl<'s> DerivationState<'s> {
    pub fn new(schema: &'s Schema) -> Self {
        let mut available = vec!["*".to_string()];
        available.extend(schema.distinct_columns().into_iter().map(str::to_string));
        DerivationState {
            schema,
            actions: Vec::new(),
            frontier: vec![NodeKind::Root],
            memory: Vec::new(),
            available,
        }
    }

    /// The accepted prefix; a pre-order encoding of the partial tree.
    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn frontier(&self) -> &[NodeKind] {
        &self.frontier
    }

    pub fn memory(&self) -> &[String] {
        &self.memory
    }

    pub fn available(&self) -> &[String] {
        &self.available
    }

    pub fn is_complete(&self) -> bool {
        self.frontier.is_empty()
    }

    fn last_column(&self) -> Option<&str> {
        match self.actions.last() {
            Some(Action::SelectColumn { column, .. }) => Some(column),
            _ => None,
        }
    }

    /// Why `action` is not applicable here, if it is not.
    pub fn check(&self, action: &Action) -> Result<(), String> {
        let Some(&top) = self.frontier.last() else {
            return Err("derivation is already complete".into());
        };
        match action {
            Action::ApplyRule(id) => {
                let rule = grammar::rule(*id).ok_or_else(|| format!("unknown rule id {id}"))?;
                if rule.lhs != top {
                    return Err(format!("rule {id} expands {}, frontier expects {top}", rule.lhs));
                }
            }
            Action::SelectColumn { column, source } => {
                if top != NodeKind::Column {
                    return Err(format!("column selected while frontier expects {top}"));
                }
                let pool = match source {
                    ColumnSource::Schema => &self.available,
                    ColumnSource::Memory => &self.memory,
                };
                if position_ci(pool, column).is_none() {
                    return Err(format!("column `{column}` is not in {}", source.as_str()));
                }
            }
            Action::SelectTable(name) => {
                if top != NodeKind::Table {
                    return Err(format!("table selected while frontier expects {top}"));
                }
                let table = self
                    .schema
                    .table(name)
                    .ok_or_else(|| format!("unknown table `{name}`"))?;
                let column = self.last_column().unwrap_or("*");
                if column != "*" && !table.has_column(column) {
                    return Err(format!("table `{}` has no column `{column}`", table.name));
                }
            }
        }
        Ok(())
    }

    fn step(&mut self, action: &Action) -> Result<(), String> {
        self.check(action)?;
        self.frontier.pop();
        match action {
            Action::ApplyRule(id) => {
                let rule = grammar::rule(*id).expect("checked");
                self.frontier.extend(rule.rhs.iter().rev());
            }
            Action::SelectColumn { column, .. } => {
                if let Some(i) = position_ci(&self.available, column) {
                    let name = self.available.remove(i);
                    self.memory.push(name);
                }
            }
            Action::SelectTable(_) => {}
        }
        self.actions.push(action.clone());
        Ok(())
    }

    pub fn apply(&self, action: &Action) -> Result<DerivationState<'s>, String> {
        let mut next = self.clone();
        next.step(action)?;
        Ok(next)
    }

    /// Exactly the actions `apply` accepts in this state.
    pub fn applicable_actions(&self) -> Vec<Action> {
        let Some(&top) = self.frontier.last() else {
            return Vec::new();
        };
        match top {
            NodeKind::Column => {
                let from = |pool: &[String], source| {
                    pool.iter()
                        .map(|c| Action::SelectColumn {
                            column: c.clone(),
                            source,
                        })
                        .collect::<Vec<_>>()
                };
                let mut out = from(&self.available, ColumnSource::Schema);
                out.extend(from(&self.memory, ColumnSource::Memory));
                out
            }
            NodeKind::Table => {
                let column = self.last_column().unwrap_or("*");
                self.schema
                    .tables
                    .iter()
                    .filter(|t| column == "*" || t.has_column(column))
                    .map(|t| Action::SelectTable(t.name.clone()))
                    .collect()
            }
            lhs => grammar::rules_for(lhs).map(|r| Action::ApplyRule(r.id)).collect(),
        }
    }
}

pub fn applicable_actions(state: &DerivationState<'_>) -> Vec<Action> {
    state.applicable_actions()
}

/// Pre-order action encoding of `tree`. Expects a valid tree.
pub fn to_actions(tree: &SemQlTree) -> Vec<Action> {
    let mut enc = Encoder {
        out: Vec::new(),
        memory: Vec::new(),
    };
    match &tree.root {
        Root::Single(q) => {
            enc.rule(RuleKind::Root(None));
            enc.query(q);
        }
        Root::Compound { op, left, right } => {
            enc.rule(RuleKind::Root(Some(*op)));
            enc.query(left);
            enc.query(right);
        }
    }
    enc.out
}

struct Encoder {
    out: Vec<Action>,
    memory: Vec<String>,
}

impl Encoder {
    fn rule(&mut self, kind: RuleKind) {
        self.out.push(Action::ApplyRule(grammar::rule_id(kind)));
    }

    fn query(&mut self, q: &Query) {
        let order = q.order.as_ref().map(|o| match o {
            OrderClause::Order { .. } => OrderKind::Order,
            OrderClause::Superlative { .. } => OrderKind::Superlative,
        });
        self.rule(RuleKind::Query {
            filter: q.filter.is_some(),
            order,
        });
        self.rule(RuleKind::Select {
            distinct: q.select.distinct,
            arity: q.select.attrs.len(),
        });
        for a in &q.select.attrs {
            self.attr(a);
        }
        if let Some(f) = &q.filter {
            self.filter(f);
        }
        match &q.order {
            Some(OrderClause::Order { direction, target }) => {
                self.rule(RuleKind::Order(*direction));
                self.attr(target);
            }
            Some(OrderClause::Superlative {
                direction, target, ..
            }) => {
                self.rule(RuleKind::Superlative(*direction));
                self.attr(target);
            }
            None => {}
        }
    }

    fn filter(&mut self, f: &Filter) {
        match f {
            Filter::And(a, b) | Filter::Or(a, b) => {
                self.rule(if matches!(f, Filter::And(..)) {
                    RuleKind::And
                } else {
                    RuleKind::Or
                });
                self.filter(a);
                self.filter(b);
            }
            Filter::Cmp { op, target, .. } => {
                self.rule(RuleKind::Cmp(*op));
                self.attr(target);
            }
            Filter::Subquery { op, target, query } => {
                self.rule(RuleKind::Subquery(*op));
                self.attr(target);
                self.query(query);
            }
        }
    }

    fn attr(&mut self, a: &Attr) {
        self.rule(RuleKind::Attr {
            agg: a.agg,
            distinct: a.distinct,
        });
        let source = if position_ci(&self.memory, &a.column).is_some() {
            ColumnSource::Memory
        } else {
            self.memory.push(a.column.clone());
            ColumnSource::Schema
        };
        self.out.push(Action::SelectColumn {
            column: a.column.clone(),
            source,
        });
        if let Some(t) = &a.table {
            self.out.push(Action::SelectTable(t.clone()));
        }
    }
}

/// Replays `actions` from the initial state and rebuilds the tree.
pub fn from_actions(actions: &[Action], schema: &Schema) -> Result<SemQlTree> {
    let mut state = DerivationState::new(schema);
    for (index, action) in actions.iter().enumerate() {
        state
            .step(action)
            .map_err(|message| Error::IllegalAction { index, message })?;
    }
    if !state.is_complete() {
        return Err(Error::IncompleteDerivation {
            pending: state.frontier.len(),
        });
    }
    let mut dec = Decoder {
        actions: actions.iter(),
    };
    Ok(dec.root())
}

/// Rebuilds a tree from an action list already accepted by the state machine.
struct Decoder<'a> {
    actions: std::slice::Iter<'a, Action>,
}

impl Decoder<'_> {
    fn rule(&mut self) -> RuleKind {
        match self.actions.next() {
            Some(Action::ApplyRule(id)) => grammar::rule(*id).expect("checked").kind,
            other => unreachable!("expected rule, found {other:?}"),
        }
    }

    fn root(&mut self) -> SemQlTree {
        let root = match self.rule() {
            RuleKind::Root(None) => Root::Single(self.query()),
            RuleKind::Root(Some(op)) => {
                let left = self.query();
                Root::Compound {
                    op,
                    left,
                    right: self.query(),
                }
            }
            other => unreachable!("{other:?}"),
        };
        SemQlTree { root }
    }

    fn query(&mut self) -> Query {
        let RuleKind::Query { filter, order } = self.rule() else {
            unreachable!()
        };
        let RuleKind::Select { distinct, arity } = self.rule() else {
            unreachable!()
        };
        let attrs = (0..arity).map(|_| self.attr()).collect();
        let filter = filter.then(|| self.filter());
        let order = order.map(|_| match self.rule() {
            RuleKind::Order(direction) => OrderClause::Order {
                direction,
                target: self.attr(),
            },
            RuleKind::Superlative(direction) => OrderClause::Superlative {
                direction,
                target: self.attr(),
                limit: 1,
            },
            other => unreachable!("{other:?}"),
        });
        Query {
            select: Select { distinct, attrs },
            filter,
            order,
        }
    }

    fn filter(&mut self) -> Filter {
        match self.rule() {
            RuleKind::And => {
                let a = self.filter();
                Filter::and(a, self.filter())
            }
            RuleKind::Or => {
                let a = self.filter();
                Filter::or(a, self.filter())
            }
            RuleKind::Cmp(op) => Filter::cmp(op, self.attr(), Vec::new()),
            RuleKind::Subquery(op) => {
                let target = self.attr();
                Filter::subquery(op, target, self.query())
            }
            other => unreachable!("{other:?}"),
        }
    }

    fn attr(&mut self) -> Attr {
        let RuleKind::Attr { agg, distinct } = self.rule() else {
            unreachable!()
        };
        let column = match self.actions.next() {
            Some(Action::SelectColumn { column, .. }) => column.clone(),
            other => unreachable!("{other:?}"),
        };
        let table = match self.actions.next() {
            Some(Action::SelectTable(t)) => t.clone(),
            other => unreachable!("{other:?}"),
        };
        Attr {
            agg,
            distinct,
            column,
            table: Some(table),
        }
    }
}

/// One action per line.
pub fn print_actions(actions: &[Action]) -> String {
    let mut out = String::new();
    for a in actions {
        out.push_str(&a.to_string());
        out.push('\n');
    }
    out
}

fn split_words(line: &str) -> std::result::Result<Vec<String>, String> {
    let mut words = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut w = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some('\\') => w.extend(chars.next()),
                    Some(ch) => w.push(ch),
                    None => return Err("unterminated quoted name".into()),
                }
            }
            words.push(w);
        } else {
            let mut w = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                w.push(ch);
                chars.next();
            }
            words.push(w);
        }
    }
    Ok(words)
}

/// Parses the line-oriented form produced by [`print_actions`]. Blank lines
/// are skipped.
pub fn parse_actions(text: &str) -> Result<Vec<Action>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| Error::ActionSyntax {
            line: i + 1,
            message,
        };
        let words = split_words(line).map_err(err)?;
        let action = match words.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
            [] => continue,
            ["APPLY", id] => Action::ApplyRule(
                id.parse()
                    .map_err(|_| err(format!("invalid rule id `{id}`")))?,
            ),
            ["COL", column, source] => Action::SelectColumn {
                column: column.to_string(),
                source: match *source {
                    "schema" => ColumnSource::Schema,
                    "memory" => ColumnSource::Memory,
                    other => return Err(err(format!("unknown column source `{other}`"))),
                },
            },
            ["TAB", table] => Action::SelectTable(table.to_string()),
            _ => return Err(err(format!("unrecognized action `{line}`"))),
        };
        out.push(action);
    }
    Ok(out)
}
