use super::lexer::{lex, Tok, Token};
use super::{ColumnExpr, Condition, JoinedTable, Operand, OrderBy, Predicate, SqlQuery, ValueExpr};
use crate::error::{Error, Result};
use crate::schema::{ColumnRef, Schema, Table};
use crate::semql::{AggOp, CmpOp, Direction, Literal, SetOp};

const RESERVED: &[&str] = &[
    "select", "from", "where", "group", "by", "having", "order", "limit", "join", "on", "as",
    "and", "or", "not", "in", "like", "between", "union", "intersect", "except", "distinct",
    "asc", "desc", "inner", "left", "right", "outer", "cross", "over", "all", "is", "null",
    "exists",
];

#[derive(Debug, Clone)]
struct RawCol {
    qualifier: Option<String>,
    name: String,
}

#[derive(Debug, Clone)]
enum RawColExpr {
    Star,
    Col(RawCol),
}

#[derive(Debug, Clone)]
struct RawValue {
    agg: AggOp,
    distinct: bool,
    col: RawColExpr,
}

#[derive(Debug)]
enum RawOperand {
    Lit(Literal),
    Range(Literal, Literal),
    Sub(Box<RawQuery>),
}

#[derive(Debug)]
enum RawCond {
    And(Box<RawCond>, Box<RawCond>),
    Or(Box<RawCond>, Box<RawCond>),
    Leaf(CmpOp, RawValue, RawOperand),
}

#[derive(Debug)]
struct RawFrom {
    table: String,
    alias: Option<String>,
    on: Vec<(RawCol, RawCol)>,
}

#[derive(Debug)]
struct RawQuery {
    distinct: bool,
    select: Vec<RawValue>,
    from: Vec<RawFrom>,
    where_clause: Option<RawCond>,
    group_by: Vec<RawCol>,
    having: Option<RawCond>,
    order_by: Option<(Direction, RawValue)>,
    limit: Option<u64>,
    set_op: Option<(SetOp, Box<RawQuery>)>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: usize,
}

fn unsupported(what: impl Into<String>) -> Error {
    Error::UnsupportedSql(what.into())
}

impl Parser {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::SqlSyntax {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n).map(|t| &t.tok)
    }

    fn is_kw_at(&self, n: usize, kw: &str) -> bool {
        matches!(self.peek_at(n), Some(Tok::Ident { text, quoted: false }) if text.eq_ignore_ascii_case(kw))
    }

    fn is_kw(&self, kw: &str) -> bool {
        self.is_kw_at(0, kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected {}", kw.to_uppercase())))
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`")))
        }
    }

    /// A non-reserved identifier.
    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident { text, quoted })
                if *quoted || !RESERVED.contains(&text.to_ascii_lowercase().as_str()) =>
            {
                let t = text.clone();
                self.pos += 1;
                Ok(t)
            }
            _ => Err(self.error(format!("expected {what}"))),
        }
    }

    fn at_ident(&self) -> bool {
        matches!(self.peek(), Some(Tok::Ident { text, quoted })
            if *quoted || !RESERVED.contains(&text.to_ascii_lowercase().as_str()))
    }

    fn query(&mut self) -> Result<RawQuery> {
        let mut q = if self.is_sym("(") {
            self.pos += 1;
            let q = self.query()?;
            self.expect_sym(")")?;
            q
        } else {
            self.select_core()?
        };
        let op = if self.is_kw("union") {
            Some(SetOp::Union)
        } else if self.is_kw("intersect") {
            Some(SetOp::Intersect)
        } else if self.is_kw("except") {
            Some(SetOp::Except)
        } else {
            None
        };
        if let Some(op) = op {
            self.pos += 1;
            if self.is_kw("all") {
                return Err(unsupported(format!("{} ALL", op.as_str().to_uppercase())));
            }
            if q.set_op.is_some() {
                return Err(unsupported("more than one set operation"));
            }
            q.set_op = Some((op, Box::new(self.query()?)));
        }
        Ok(q)
    }

    fn select_core(&mut self) -> Result<RawQuery> {
        self.expect_kw("select")?;
        let distinct = self.eat_kw("distinct");
        let mut select = vec![self.select_item()?];
        while self.eat_sym(",") {
            select.push(self.select_item()?);
        }
        if !self.is_kw("from") {
            if self.peek().is_none() || self.is_sym(")") || self.is_sym(";") {
                return Err(unsupported("SELECT without FROM"));
            }
            return Err(self.error("expected FROM"));
        }
        self.pos += 1;
        let from = self.from_clause()?;
        let where_clause = if self.eat_kw("where") {
            Some(self.condition()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_kw("group") {
            self.expect_kw("by")?;
            group_by.push(self.column()?);
            while self.eat_sym(",") {
                group_by.push(self.column()?);
            }
        }
        let having = if self.eat_kw("having") {
            Some(self.condition()?)
        } else {
            None
        };
        let order_by = if self.eat_kw("order") {
            self.expect_kw("by")?;
            let target = self.value()?;
            let direction = if self.eat_kw("desc") {
                Direction::Desc
            } else {
                self.eat_kw("asc");
                Direction::Asc
            };
            if self.is_sym(",") {
                return Err(unsupported("ORDER BY with more than one key"));
            }
            Some((direction, target))
        } else {
            None
        };
        let limit = if self.eat_kw("limit") {
            match self.peek() {
                Some(Tok::Number(n)) => {
                    let n = n
                        .parse::<u64>()
                        .ok()
                        .filter(|n| *n > 0)
                        .ok_or_else(|| self.error("LIMIT must be a positive integer"))?;
                    self.pos += 1;
                    Some(n)
                }
                _ => return Err(self.error("expected LIMIT count")),
            }
        } else {
            None
        };
        Ok(RawQuery {
            distinct,
            select,
            from,
            where_clause,
            group_by,
            having,
            order_by,
            limit,
            set_op: None,
        })
    }

    fn select_item(&mut self) -> Result<RawValue> {
        let v = self.value()?;
        if self.is_kw("as") || (self.at_ident() && !self.is_kw("from")) {
            return Err(unsupported("column aliases in SELECT"));
        }
        if ["+", "-", "*"].iter().any(|s| self.is_sym(s)) {
            return Err(unsupported("arithmetic expressions"));
        }
        Ok(v)
    }

    fn column(&mut self) -> Result<RawCol> {
        let first = self.ident("column name")?;
        if self.eat_sym(".") {
            let name = self.ident("column name")?;
            Ok(RawCol {
                qualifier: Some(first),
                name,
            })
        } else {
            Ok(RawCol {
                qualifier: None,
                name: first,
            })
        }
    }

    fn col_expr(&mut self) -> Result<RawColExpr> {
        if self.eat_sym("*") {
            return Ok(RawColExpr::Star);
        }
        // `t.*`
        if self.at_ident() && matches!(self.peek_at(1), Some(Tok::Sym("."))) && matches!(self.peek_at(2), Some(Tok::Sym("*"))) {
            self.pos += 3;
            return Ok(RawColExpr::Star);
        }
        Ok(RawColExpr::Col(self.column()?))
    }

    fn value(&mut self) -> Result<RawValue> {
        if let (Some(Tok::Ident { text, quoted: false }), Some(Tok::Sym("("))) = (self.peek(), self.peek_at(1)) {
            let name = text.to_ascii_lowercase();
            let agg = match AggOp::parse(&name) {
                Some(a) if a.is_aggregate() => a,
                _ => return Err(unsupported(format!("function `{text}`"))),
            };
            self.pos += 2;
            let distinct = self.eat_kw("distinct");
            let col = self.col_expr()?;
            self.expect_sym(")")?;
            if self.is_kw("over") {
                return Err(unsupported("window functions"));
            }
            return Ok(RawValue { agg, distinct, col });
        }
        if self.is_sym("(") {
            return Err(unsupported("parenthesized or subquery expressions as operands"));
        }
        Ok(RawValue {
            agg: AggOp::None,
            distinct: false,
            col: self.col_expr()?,
        })
    }

    fn table_ref(&mut self) -> Result<RawFrom> {
        if self.is_sym("(") {
            return Err(unsupported("subqueries in FROM"));
        }
        let table = self.ident("table name")?;
        let alias = if self.eat_kw("as") {
            Some(self.ident("table alias")?)
        } else if self.at_ident() {
            Some(self.ident("table alias")?)
        } else {
            None
        };
        Ok(RawFrom {
            table,
            alias,
            on: Vec::new(),
        })
    }

    fn from_clause(&mut self) -> Result<Vec<RawFrom>> {
        let mut from = vec![self.table_ref()?];
        loop {
            if self.is_sym(",") {
                return Err(unsupported("comma-separated FROM tables"));
            }
            if ["left", "right", "outer", "cross"].iter().any(|k| self.is_kw(k)) {
                return Err(unsupported("non-inner joins"));
            }
            let inner = self.eat_kw("inner");
            if !self.eat_kw("join") {
                if inner {
                    return Err(self.error("expected JOIN"));
                }
                break;
            }
            let mut t = self.table_ref()?;
            if self.eat_kw("on") {
                loop {
                    let a = self.column()?;
                    self.expect_sym("=")?;
                    let b = self.column()?;
                    t.on.push((a, b));
                    if !self.eat_kw("and") {
                        break;
                    }
                }
            }
            from.push(t);
        }
        Ok(from)
    }

    fn condition(&mut self) -> Result<RawCond> {
        let mut c = self.conjunction()?;
        while self.eat_kw("or") {
            c = RawCond::Or(Box::new(c), Box::new(self.conjunction()?));
        }
        Ok(c)
    }

    fn conjunction(&mut self) -> Result<RawCond> {
        let mut c = self.condition_atom()?;
        while self.eat_kw("and") {
            c = RawCond::And(Box::new(c), Box::new(self.condition_atom()?));
        }
        Ok(c)
    }

    fn condition_atom(&mut self) -> Result<RawCond> {
        if self.is_sym("(") && !self.is_kw_at(1, "select") {
            self.pos += 1;
            let c = self.condition()?;
            self.expect_sym(")")?;
            return Ok(c);
        }
        if self.is_kw("not") || self.is_kw("exists") {
            return Err(unsupported("NOT / EXISTS conditions"));
        }
        let lhs = self.value()?;
        let op = if self.eat_kw("not") {
            if self.eat_kw("in") {
                CmpOp::NotIn
            } else if self.eat_kw("like") {
                CmpOp::NotLike
            } else {
                return Err(unsupported("NOT operator other than NOT IN / NOT LIKE"));
            }
        } else if self.eat_kw("in") {
            CmpOp::In
        } else if self.eat_kw("like") {
            CmpOp::Like
        } else if self.eat_kw("between") {
            CmpOp::Between
        } else if self.is_kw("is") {
            return Err(unsupported("IS [NOT] NULL"));
        } else {
            let op = match self.peek() {
                Some(Tok::Sym("=")) => CmpOp::Eq,
                Some(Tok::Sym("!=")) | Some(Tok::Sym("<>")) => CmpOp::Ne,
                Some(Tok::Sym("<")) => CmpOp::Lt,
                Some(Tok::Sym(">")) => CmpOp::Gt,
                Some(Tok::Sym("<=")) => CmpOp::Le,
                Some(Tok::Sym(">=")) => CmpOp::Ge,
                _ => return Err(self.error("expected comparison operator")),
            };
            self.pos += 1;
            op
        };
        let rhs = if op == CmpOp::Between {
            let lo = self.literal()?;
            self.expect_kw("and")?;
            RawOperand::Range(lo, self.literal()?)
        } else if self.is_sym("(") {
            self.pos += 1;
            let rhs = if self.is_kw("select") || self.is_sym("(") {
                RawOperand::Sub(Box::new(self.query()?))
            } else {
                let lit = self.literal()?;
                if self.is_sym(",") {
                    return Err(unsupported("IN lists with more than one value"));
                }
                RawOperand::Lit(lit)
            };
            self.expect_sym(")")?;
            rhs
        } else {
            RawOperand::Lit(self.literal()?)
        };
        Ok(RawCond::Leaf(op, lhs, rhs))
    }

    fn literal(&mut self) -> Result<Literal> {
        if self.is_sym("-") {
            if let Some(Tok::Number(n)) = self.peek_at(1) {
                let l = Literal(format!("-{n}"));
                self.pos += 2;
                return Ok(l);
            }
        }
        match self.peek() {
            Some(Tok::Number(n)) | Some(Tok::Str(n)) => {
                let l = Literal(n.clone());
                self.pos += 1;
                Ok(l)
            }
            Some(Tok::Ident { .. }) => Err(unsupported("comparisons between columns")),
            _ => Err(self.error("expected literal value")),
        }
    }
}

struct Scope<'s> {
    entries: Vec<(Option<String>, &'s Table)>,
}

impl<'s> Scope<'s> {
    fn resolve(&self, col: &RawCol) -> Result<ColumnRef> {
        let candidates: Vec<&Table> = match &col.qualifier {
            Some(q) => {
                let t = self
                    .entries
                    .iter()
                    .find(|(alias, t)| {
                        alias.as_deref().is_some_and(|a| a.eq_ignore_ascii_case(q))
                            || t.name.eq_ignore_ascii_case(q)
                    })
                    .map(|(_, t)| *t)
                    .ok_or_else(|| Error::Resolution(format!("table or alias `{q}`")))?;
                vec![t]
            }
            None => self.entries.iter().map(|(_, t)| *t).collect(),
        };
        let hits: Vec<ColumnRef> = candidates
            .iter()
            .filter_map(|t| {
                t.column(&col.name)
                    .map(|c| ColumnRef::new(&t.name, &c.original_name))
            })
            .collect();
        match hits.len() {
            1 => Ok(hits.into_iter().next().expect("one hit")),
            0 => Err(Error::Resolution(format!("column `{}`", display(col)))),
            _ => Err(Error::Resolution(format!(
                "ambiguous column `{}` (in {})",
                display(col),
                hits.iter().map(|h| h.table.as_str()).collect::<Vec<_>>().join(", ")
            ))),
        }
    }
}

fn display(col: &RawCol) -> String {
    match &col.qualifier {
        Some(q) => format!("{q}.{}", col.name),
        None => col.name.clone(),
    }
}

fn resolve_query(raw: RawQuery, schema: &Schema) -> Result<SqlQuery> {
    let mut entries = Vec::new();
    for f in &raw.from {
        let table = schema
            .table(&f.table)
            .ok_or_else(|| Error::Resolution(format!("table `{}`", f.table)))?;
        if entries.iter().any(|(_, t): &(Option<String>, &Table)| t.name == table.name) {
            return Err(unsupported(format!("self-join on `{}`", table.name)));
        }
        entries.push((f.alias.clone(), table));
    }
    let scope = Scope { entries };

    let value = |v: &RawValue| -> Result<ValueExpr> {
        Ok(ValueExpr {
            agg: v.agg,
            distinct: v.distinct,
            column: match &v.col {
                RawColExpr::Star => ColumnExpr::Star,
                RawColExpr::Col(c) => ColumnExpr::Column(scope.resolve(c)?),
            },
        })
    };

    let select = raw.select.iter().map(value).collect::<Result<Vec<_>>>()?;
    let from = raw
        .from
        .iter()
        .zip(&scope.entries)
        .map(|(f, (_, t))| {
            let on = f
                .on
                .iter()
                .map(|(a, b)| Ok((scope.resolve(a)?, scope.resolve(b)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(JoinedTable {
                table: t.name.clone(),
                on,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    fn cond(
        c: RawCond,
        value: &dyn Fn(&RawValue) -> Result<ValueExpr>,
        schema: &Schema,
    ) -> Result<Condition> {
        Ok(match c {
            RawCond::And(a, b) => Condition::and(cond(*a, value, schema)?, cond(*b, value, schema)?),
            RawCond::Or(a, b) => Condition::or(cond(*a, value, schema)?, cond(*b, value, schema)?),
            RawCond::Leaf(op, lhs, rhs) => Condition::Leaf(Predicate {
                op,
                lhs: value(&lhs)?,
                rhs: match rhs {
                    RawOperand::Lit(l) => Operand::Literal(l),
                    RawOperand::Range(a, b) => Operand::Range(a, b),
                    RawOperand::Sub(q) => Operand::Subquery(Box::new(resolve_query(*q, schema)?)),
                },
            }),
        })
    }

    let where_clause = raw.where_clause.map(|c| cond(c, &value, schema)).transpose()?;
    let group_by = raw
        .group_by
        .iter()
        .map(|c| scope.resolve(c))
        .collect::<Result<Vec<_>>>()?;
    if raw.having.is_some() && group_by.is_empty() {
        return Err(unsupported("HAVING without GROUP BY"));
    }
    let having = raw.having.map(|c| cond(c, &value, schema)).transpose()?;
    let order_by = raw
        .order_by
        .as_ref()
        .map(|(direction, v)| {
            Ok::<_, Error>(OrderBy {
                direction: *direction,
                target: value(v)?,
            })
        })
        .transpose()?;
    let set_op = raw
        .set_op
        .map(|(op, q)| Ok::<_, Error>((op, Box::new(resolve_query(*q, schema)?))))
        .transpose()?;

    Ok(SqlQuery {
        distinct: raw.distinct,
        select,
        from,
        where_clause,
        group_by,
        having,
        order_by,
        limit: raw.limit,
        set_op,
    })
}

/// Parses one statement and resolves every column against `schema`.
pub fn parse_sql(text: &str, schema: &Schema) -> Result<SqlQuery> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let raw = p.query()?;
    p.eat_sym(";");
    if p.pos < p.toks.len() {
        return Err(p.error("unexpected trailing input"));
    }
    resolve_query(raw, schema)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn single_table() {
        let s = fixtures::concert_db();
        let q = parse_sql("SELECT name FROM orchestra", &s).unwrap();
        assert_eq!(q.select, vec![ValueExpr::column(ColumnRef::new("orchestra", "name"))]);
        assert_eq!(q.from.len(), 1);
    }

    #[test]
    fn nested_subquery() {
        let s = fixtures::concert_db();
        let q = parse_sql(
            "SELECT name FROM orchestra WHERE orchestra_id IN (SELECT orchestra_id FROM performance)",
            &s,
        )
        .unwrap();
        let Some(Condition::Leaf(p)) = &q.where_clause else { panic!() };
        assert_eq!(p.op, CmpOp::In);
        let Operand::Subquery(sub) = &p.rhs else { panic!() };
        assert_eq!(sub.select[0], ValueExpr::column(ColumnRef::new("performance", "orchestra_id")));
    }

    #[test]
    fn window_function_unsupported() {
        let s = fixtures::concert_db();
        assert_eq!(parse_sql("SELECT rank() OVER ()", &s).unwrap_err().name(), "UnsupportedSqlError");
        assert_eq!(
            parse_sql("SELECT count(*) OVER () FROM orchestra", &s).unwrap_err().name(),
            "UnsupportedSqlError"
        );
    }

    #[test]
    fn aliases_resolve() {
        let s = fixtures::concert_db();
        let q = parse_sql(
            "select T1.Name, count(*) from orchestra as T1 join performance as T2 on T1.orchestra_id = T2.orchestra_id group by T1.name",
            &s,
        )
        .unwrap();
        assert_eq!(q.select[0].column, ColumnExpr::Column(ColumnRef::new("orchestra", "name")));
        assert_eq!(q.from[1].on[0].1, ColumnRef::new("performance", "orchestra_id"));
    }

    #[test]
    fn resolution_errors() {
        let s = fixtures::concert_db();
        let err = parse_sql(
            "SELECT orchestra_id FROM orchestra JOIN performance ON orchestra.orchestra_id = performance.orchestra_id",
            &s,
        )
        .unwrap_err();
        assert_eq!(err.name(), "ResolutionError");
        assert_eq!(parse_sql("SELECT nope FROM orchestra", &s).unwrap_err().name(), "ResolutionError");
        assert_eq!(parse_sql("SELECT name FROM nowhere", &s).unwrap_err().name(), "ResolutionError");
    }

    #[test]
    fn self_join_unsupported() {
        let s = fixtures::social_db();
        let err = parse_sql(
            "SELECT T1.name FROM student AS T1 JOIN student AS T2 ON T1.student_id = T2.student_id",
            &s,
        )
        .unwrap_err();
        assert_eq!(err.name(), "UnsupportedSqlError");
    }

    #[test]
    fn precedence_and_between() {
        let s = fixtures::concert_db();
        let q = parse_sql(
            "SELECT name FROM orchestra WHERE year BETWEEN 1 AND 5 OR name = 'a' AND conductor = 'b'",
            &s,
        )
        .unwrap();
        let Some(Condition::Or(a, b)) = &q.where_clause else { panic!("{:?}", q.where_clause) };
        assert!(matches!(**a, Condition::Leaf(Predicate { op: CmpOp::Between, .. })));
        assert!(matches!(**b, Condition::And(..)));
    }

    #[test]
    fn syntax_error_offset() {
        let s = fixtures::concert_db();
        match parse_sql("SELECT name FROM orchestra WHERE", &s).unwrap_err() {
            Error::SqlSyntax { offset, .. } => assert_eq!(offset, 32),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn having_requires_group_by() {
        let s = fixtures::concert_db();
        assert_eq!(
            parse_sql("SELECT count(*) FROM orchestra HAVING count(*) > 1", &s).unwrap_err().name(),
            "UnsupportedSqlError"
        );
    }

    #[test]
    fn set_operation_chain() {
        let s = fixtures::concert_db();
        let q = parse_sql(
            "(SELECT name FROM orchestra) UNION (SELECT conductor FROM orchestra)",
            &s,
        )
        .unwrap();
        assert_eq!(q.set_op.as_ref().unwrap().0, SetOp::Union);
        assert!(parse_sql(
            "SELECT name FROM orchestra UNION ALL SELECT name FROM orchestra",
            &s
        )
        .is_err());
    }

    #[test]
    fn negative_numbers() {
        let s = fixtures::concert_db();
        let q = parse_sql("SELECT name FROM orchestra WHERE year > -3", &s).unwrap();
        let Some(Condition::Leaf(p)) = &q.where_clause else { panic!() };
        assert_eq!(p.rhs, Operand::Literal(Literal::new("-3")));
    }
}
