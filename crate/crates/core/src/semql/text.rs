//! Parenthesized text form of SemQL trees.
//!
//! ```text
//! (Z (R (Select (A none (C name) (T friend)))))
//! (Z union (R ...) (R ...))
//! (R (Select distinct (A count distinct (C name) (T t))) (Filter > (A ...) "3") (Superlative desc 1 (A ...)))
//! ```
//!
//! Keywords are case-insensitive on input and printed in canonical case.
//! Literals are double-quoted strings; names are bare atoms unless they need
//! quoting.

use super::{
    AggOp, Attr, CmpOp, Direction, Filter, Literal, OrderClause, Query, Root, Select, SemQlTree,
    SetOp,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
    Str(String),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> Error {
    Error::SemQlSyntax {
        offset,
        message: message.into(),
    }
}

fn is_atom_char(c: char) -> bool {
    !(c.is_whitespace() || c == '(' || c == ')' || c == '"')
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    let mut depth: i64 = 0;
    while let Some(&(i, c)) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                depth += 1;
                out.push(Spanned { tok: Tok::Open, offset: i });
                chars.next();
            }
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(syntax(i, "unbalanced `)`"));
                }
                out.push(Spanned { tok: Tok::Close, offset: i });
                chars.next();
            }
            '"' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some((_, '"')) => break,
                        Some((_, '\\')) => match chars.next() {
                            Some((_, e)) => s.push(e),
                            None => return Err(syntax(text.len(), "unterminated string")),
                        },
                        Some((_, ch)) => s.push(ch),
                        None => return Err(syntax(i, "unterminated string")),
                    }
                }
                out.push(Spanned { tok: Tok::Str(s), offset: i });
            }
            _ => {
                let mut s = String::new();
                while let Some(&(_, ch)) = chars.peek() {
                    if !is_atom_char(ch) {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                out.push(Spanned { tok: Tok::Atom(s), offset: i });
            }
        }
    }
    if depth > 0 {
        return Err(syntax(text.len(), "unbalanced `(`: missing `)`"));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn expect_open(&mut self) -> Result<()> {
        let at = self.offset();
        match self.next() {
            Some(Tok::Open) => Ok(()),
            _ => Err(syntax(at, "expected `(`")),
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        let at = self.offset();
        match self.next() {
            Some(Tok::Close) => Ok(()),
            _ => Err(syntax(at, "expected `)`")),
        }
    }

    fn atom(&mut self, what: &str) -> Result<String> {
        let at = self.offset();
        match self.next() {
            Some(Tok::Atom(s)) => Ok(s),
            _ => Err(syntax(at, format!("expected {what}"))),
        }
    }

    fn name(&mut self, what: &str) -> Result<String> {
        let at = self.offset();
        match self.next() {
            Some(Tok::Atom(s)) | Some(Tok::Str(s)) => Ok(s),
            _ => Err(syntax(at, format!("expected {what}"))),
        }
    }

    fn head(&mut self, expected: &str) -> Result<()> {
        let at = self.offset();
        self.expect_open()?;
        let h = self.atom(expected)?;
        if h.eq_ignore_ascii_case(expected) {
            Ok(())
        } else {
            Err(syntax(at, format!("expected `({expected}`, found `({h}`")))
        }
    }

    /// Whether the next tokens are `( <head>`.
    fn at_head(&self, head: &str) -> bool {
        matches!(self.peek(), Some(Tok::Open))
            && matches!(self.peek_at(1), Some(Tok::Atom(h)) if h.eq_ignore_ascii_case(head))
    }

    fn keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Atom(a)) if a.eq_ignore_ascii_case(word))
    }

    fn tree(&mut self) -> Result<SemQlTree> {
        self.head("Z")?;
        let root = if let Some(Tok::Atom(a)) = self.peek() {
            let at = self.offset();
            let op = SetOp::parse(a).ok_or_else(|| syntax(at, format!("unknown set operator `{a}`")))?;
            self.next();
            let left = self.query()?;
            let right = self.query()?;
            Root::Compound { op, left, right }
        } else {
            Root::Single(self.query()?)
        };
        self.expect_close()?;
        Ok(SemQlTree { root })
    }

    fn query(&mut self) -> Result<Query> {
        self.head("R")?;
        let select = self.select()?;
        let filter = if self.at_head("Filter") {
            Some(self.filter()?)
        } else {
            None
        };
        let order = if self.at_head("Order") || self.at_head("Superlative") {
            Some(self.order()?)
        } else {
            None
        };
        self.expect_close()?;
        Ok(Query {
            select,
            filter,
            order,
        })
    }

    fn select(&mut self) -> Result<Select> {
        self.head("Select")?;
        let distinct = self.keyword("distinct");
        if distinct {
            self.next();
        }
        let mut attrs = Vec::new();
        while self.at_head("A") {
            attrs.push(self.attr()?);
        }
        self.expect_close()?;
        Ok(Select { distinct, attrs })
    }

    fn attr(&mut self) -> Result<Attr> {
        self.head("A")?;
        let at = self.offset();
        let agg = self.atom("aggregate")?;
        let agg = AggOp::parse(&agg).ok_or_else(|| syntax(at, format!("unknown aggregate `{agg}`")))?;
        let distinct = self.keyword("distinct");
        if distinct {
            self.next();
        }
        self.head("C")?;
        let column = self.name("column name")?;
        self.expect_close()?;
        let table = if self.at_head("T") {
            self.head("T")?;
            let t = self.name("table name")?;
            self.expect_close()?;
            Some(t)
        } else {
            None
        };
        self.expect_close()?;
        Ok(Attr {
            agg,
            distinct,
            column,
            table,
        })
    }

    fn filter(&mut self) -> Result<Filter> {
        self.head("Filter")?;
        let at = self.offset();
        let op = self.atom("filter operator")?;
        let filter = match op.to_ascii_lowercase().as_str() {
            "and" => Filter::and(self.filter()?, self.filter()?),
            "or" => Filter::or(self.filter()?, self.filter()?),
            other => {
                let op = CmpOp::parse(other)
                    .ok_or_else(|| syntax(at, format!("unknown filter operator `{op}`")))?;
                let target = self.attr()?;
                if self.at_head("R") {
                    Filter::subquery(op, target, self.query()?)
                } else {
                    let mut values = Vec::new();
                    while let Some(Tok::Str(_)) = self.peek() {
                        if let Some(Tok::Str(s)) = self.next() {
                            values.push(Literal(s));
                        }
                    }
                    Filter::cmp(op, target, values)
                }
            }
        };
        self.expect_close()?;
        Ok(filter)
    }

    fn order(&mut self) -> Result<OrderClause> {
        let superlative = self.at_head("Superlative");
        self.expect_open()?;
        self.next();
        let at = self.offset();
        let dir = self.atom("direction")?;
        let direction =
            Direction::parse(&dir).ok_or_else(|| syntax(at, format!("unknown direction `{dir}`")))?;
        let clause = if superlative {
            let limit = match self.peek() {
                Some(Tok::Atom(a)) => {
                    let at = self.offset();
                    let n = a
                        .parse::<u64>()
                        .map_err(|_| syntax(at, format!("invalid limit `{a}`")))?;
                    self.next();
                    n
                }
                _ => 1,
            };
            OrderClause::Superlative {
                direction,
                target: self.attr()?,
                limit,
            }
        } else {
            OrderClause::Order {
                direction,
                target: self.attr()?,
            }
        };
        self.expect_close()?;
        Ok(clause)
    }
}

/// Parses the text form. Structural problems the grammar allows to be
/// represented (wrong select arity, missing table) are left to `validate`.
pub fn parse_semql(text: &str) -> Result<SemQlTree> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let tree = p.tree()?;
    if p.pos < p.toks.len() {
        return Err(syntax(p.offset(), "trailing input after tree"));
    }
    Ok(tree)
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty() || !s.chars().all(is_atom_char)
}

fn quoted(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Bare atom when possible, quoted string otherwise.
pub(crate) fn name_token(s: &str) -> String {
    if needs_quotes(s) {
        quoted(s)
    } else {
        s.to_string()
    }
}

fn print_attr(a: &Attr, out: &mut String) {
    out.push_str("(A ");
    out.push_str(a.agg.as_str());
    if a.distinct {
        out.push_str(" distinct");
    }
    out.push_str(" (C ");
    out.push_str(&name_token(&a.column));
    out.push(')');
    if let Some(t) = &a.table {
        out.push_str(" (T ");
        out.push_str(&name_token(t));
        out.push(')');
    }
    out.push(')');
}

fn print_filter(f: &Filter, out: &mut String) {
    out.push_str("(Filter ");
    match f {
        Filter::And(a, b) | Filter::Or(a, b) => {
            out.push_str(if matches!(f, Filter::And(..)) { "and " } else { "or " });
            print_filter(a, out);
            out.push(' ');
            print_filter(b, out);
        }
        Filter::Cmp { op, target, values } => {
            out.push_str(op.as_str());
            out.push(' ');
            print_attr(target, out);
            for v in values {
                out.push(' ');
                out.push_str(&quoted(&v.0));
            }
        }
        Filter::Subquery { op, target, query } => {
            out.push_str(op.as_str());
            out.push(' ');
            print_attr(target, out);
            out.push(' ');
            print_query(query, out);
        }
    }
    out.push(')');
}

fn print_query(q: &Query, out: &mut String) {
    out.push_str("(R (Select");
    if q.select.distinct {
        out.push_str(" distinct");
    }
    for a in &q.select.attrs {
        out.push(' ');
        print_attr(a, out);
    }
    out.push(')');
    if let Some(f) = &q.filter {
        out.push(' ');
        print_filter(f, out);
    }
    match &q.order {
        Some(OrderClause::Order { direction, target }) => {
            out.push_str(" (Order ");
            out.push_str(direction.as_str());
            out.push(' ');
            print_attr(target, out);
            out.push(')');
        }
        Some(OrderClause::Superlative {
            direction,
            target,
            limit,
        }) => {
            out.push_str(" (Superlative ");
            out.push_str(direction.as_str());
            out.push_str(&format!(" {limit} "));
            print_attr(target, out);
            out.push(')');
        }
        None => {}
    }
    out.push(')');
}

/// Canonical single-line text.
pub fn print_semql(tree: &SemQlTree) -> String {
    let mut out = String::from("(Z ");
    match &tree.root {
        Root::Single(q) => print_query(q, &mut out),
        Root::Compound { op, left, right } => {
            out.push_str(op.as_str());
            out.push(' ');
            print_query(left, &mut out);
            out.push(' ');
            print_query(right, &mut out);
        }
    }
    out.push(')');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "(Z (R (Select (A none (C name) (T friend)))))";

    #[test]
    fn minimal_tree() {
        let tree = parse_semql(MINIMAL).unwrap();
        let expected = SemQlTree::single(Query::new(vec![Attr::new(AggOp::None, "name", "friend")]));
        assert_eq!(tree, expected);
        assert_eq!(print_semql(&tree), MINIMAL);
    }

    #[test]
    fn canonicalizes_case_and_spacing() {
        let tree = parse_semql("( z  (r (SELECT (a NONE (c name) (t friend)) )) )").unwrap();
        assert_eq!(print_semql(&tree), MINIMAL);
    }

    #[test]
    fn unbalanced_open() {
        let err = parse_semql("(Z (R (Select (A none (C name) (T friend))))").unwrap_err();
        assert_eq!(err, syntax(44, "unbalanced `(`: missing `)`"));
    }

    #[test]
    fn unbalanced_close() {
        let err = parse_semql("(Z (R (Select (A none (C x) (T t))))))").unwrap_err();
        match err {
            Error::SemQlSyntax { offset, .. } => assert_eq!(offset, 37),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn superlative_limit_defaults_to_one() {
        let tree = parse_semql(
            "(Z (R (Select (A none (C name) (T t))) (Superlative desc (A none (C year) (T t)))))",
        )
        .unwrap();
        let q = &tree.queries()[0];
        assert!(matches!(q.order, Some(OrderClause::Superlative { limit: 1, .. })));
        assert!(print_semql(&tree).contains("(Superlative desc 1 (A"));
    }

    #[test]
    fn literals_and_quoted_names() {
        let text = r#"(Z (R (Select (A none (C "home town") (T t))) (Filter between (A none (C age) (T t)) "1" "say \"hi\"")))"#;
        let tree = parse_semql(text).unwrap();
        assert_eq!(print_semql(&tree), text);
        assert_eq!(tree.queries()[0].select.attrs[0].column, "home town");
    }

    #[test]
    fn missing_table_parses() {
        let tree = parse_semql("(Z (R (Select (A none (C name)))))").unwrap();
        assert_eq!(tree.queries()[0].select.attrs[0].table, None);
    }

    #[test]
    fn unknown_operator() {
        assert!(matches!(
            parse_semql("(Z (R (Select (A none (C a) (T t))) (Filter ~ (A none (C a) (T t)))))"),
            Err(Error::SemQlSyntax { .. })
        ));
    }
}
