//! String-match schema linking.
//!
//! A question is cut into non-overlapping spans typed Table, Column, Value or
//! Plain by a longest-first n-gram pass. Columns are then typed by how they
//! were mentioned, directly or through a knowledge source consulted for the
//! quoted values.

mod knowledge;
mod tokenize;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::schema::{tokenize_identifier, Schema};

#[cfg(feature = "http")]
pub use knowledge::HttpKnowledge;
pub use knowledge::{
    knowledge_lookup, FixtureKnowledge, KnowledgeEdge, KnowledgeSource, NoKnowledge, Relation,
};
pub use tokenize::{stem, stem_all, tokenize_question, QuestionToken, QuoteRegion, TokenizedQuestion};

/// Longest n-gram considered.
pub const MAX_NGRAM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SpanType {
    Table,
    Column,
    Value,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Span {
    pub tokens: Vec<String>,
    /// Byte range in the question; a Value span includes its quote marks.
    pub start: usize,
    pub end: usize,
    pub span_type: SpanType,
}

/// Ordered weakest to strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ColumnLinkType {
    None,
    ValuePartialMatch,
    ValueExactMatch,
    PartialMatch,
    ExactMatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkWarning {
    pub kind: &'static str,
    pub term: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LinkResult {
    pub spans: Vec<Span>,
    /// Every distinct column name of the schema.
    pub column_types: BTreeMap<String, ColumnLinkType>,
    pub warnings: Vec<LinkWarning>,
}

/// Multiset inclusion of `part` in `whole`.
fn is_sub_multiset(part: &[String], whole: &[String]) -> bool {
    let mut rest: Vec<&String> = whole.iter().collect();
    part.iter().all(|w| match rest.iter().position(|x| *x == w) {
        Some(i) => {
            rest.swap_remove(i);
            true
        }
        None => false,
    })
}

struct Names {
    /// (distinct column name, stemmed tokens)
    columns: Vec<(String, Vec<String>)>,
    tables: Vec<Vec<String>>,
}

impl Names {
    fn new(schema: &Schema) -> Self {
        Names {
            columns: schema
                .distinct_columns()
                .into_iter()
                .map(|c| (c.to_string(), stem_all(&tokenize_identifier(c))))
                .collect(),
            tables: schema
                .tables
                .iter()
                .map(|t| stem_all(&tokenize_identifier(&t.name)))
                .collect(),
        }
    }

    fn matches(names: &[Vec<String>], gram: &[String]) -> bool {
        names
            .iter()
            .any(|n| n == gram || (gram.len() >= 2 && is_sub_multiset(gram, n)))
    }

    fn classify(&self, gram: &[String]) -> Option<SpanType> {
        let cols: Vec<Vec<String>> = self.columns.iter().map(|(_, t)| t.clone()).collect();
        if Self::matches(&cols, gram) {
            Some(SpanType::Column)
        } else if Self::matches(&self.tables, gram) {
            Some(SpanType::Table)
        } else {
            None
        }
    }
}

/// Splits a tokenized question into typed spans.
///
/// Quoted regions become Value spans first. Remaining n-grams are tried from
/// length 6 down to 1, left to right within a length; a candidate equal to a
/// column or table name, or (from two words up) a sub-multiset of one, is
/// accepted unless it overlaps an accepted span. Columns win over tables.
/// Leftover words become Plain 1-grams.
pub fn recognize_spans(question: &TokenizedQuestion, schema: &Schema) -> Vec<Span> {
    let names = Names::new(schema);
    let toks = &question.tokens;
    let n = toks.len();
    let mut taken = vec![false; n];
    let mut spans: Vec<(usize, Span)> = Vec::new();

    for (qi, region) in question.quotes.iter().enumerate() {
        let idx: Vec<usize> = (0..n).filter(|&i| toks[i].quote == Some(qi)).collect();
        if let Some(&first) = idx.first() {
            for &i in &idx {
                taken[i] = true;
            }
            spans.push((
                first,
                Span {
                    tokens: idx.iter().map(|&i| toks[i].text.clone()).collect(),
                    start: region.start,
                    end: region.end,
                    span_type: SpanType::Value,
                },
            ));
        }
    }

    let stems: Vec<String> = toks.iter().map(|t| stem(&t.text)).collect();
    for len in (1..=MAX_NGRAM.min(n)).rev() {
        for i in 0..=n - len {
            if taken[i..i + len].iter().any(|&t| t) {
                continue;
            }
            if let Some(kind) = names.classify(&stems[i..i + len]) {
                taken[i..i + len].iter_mut().for_each(|t| *t = true);
                spans.push((
                    i,
                    Span {
                        tokens: toks[i..i + len].iter().map(|t| t.text.clone()).collect(),
                        start: toks[i].start,
                        end: toks[i + len - 1].end,
                        span_type: kind,
                    },
                ));
            }
        }
    }

    for (i, t) in toks.iter().enumerate() {
        if !taken[i] {
            spans.push((
                i,
                Span {
                    tokens: vec![t.text.clone()],
                    start: t.start,
                    end: t.end,
                    span_type: SpanType::Plain,
                },
            ));
        }
    }
    spans.sort_by_key(|(i, _)| *i);
    spans.into_iter().map(|(_, s)| s).collect()
}

fn upgrade(types: &mut BTreeMap<String, ColumnLinkType>, column: &str, t: ColumnLinkType) {
    let slot = types.entry(column.to_string()).or_insert(ColumnLinkType::None);
    if t > *slot {
        *slot = t;
    }
}

/// Types every distinct column by the Column spans that mention it.
pub fn assign_column_types(spans: &[Span], schema: &Schema) -> BTreeMap<String, ColumnLinkType> {
    let names = Names::new(schema);
    let mut types: BTreeMap<String, ColumnLinkType> = names
        .columns
        .iter()
        .map(|(c, _)| (c.clone(), ColumnLinkType::None))
        .collect();
    for span in spans.iter().filter(|s| s.span_type == SpanType::Column) {
        let gram = stem_all(&span.tokens);
        for (column, tokens) in &names.columns {
            if *tokens == gram {
                upgrade(&mut types, column, ColumnLinkType::ExactMatch);
            } else if is_sub_multiset(&gram, tokens) {
                upgrade(&mut types, column, ColumnLinkType::PartialMatch);
            }
        }
    }
    types
}

/// Looks every Value span up in `ks` and raises column types for results
/// naming a column. Never lowers an existing type. A failed lookup leaves
/// types untouched and is reported as a warning.
pub fn link_value_spans(
    spans: &[Span],
    ks: &dyn KnowledgeSource,
    schema: &Schema,
    types: &mut BTreeMap<String, ColumnLinkType>,
) -> Vec<LinkWarning> {
    let names = Names::new(schema);
    let mut warnings = Vec::new();
    for span in spans.iter().filter(|s| s.span_type == SpanType::Value) {
        let term = span.tokens.join(" ");
        let results = match knowledge_lookup(ks, &term) {
            Ok(r) => r,
            Err(e) => {
                warnings.push(LinkWarning {
                    kind: "LinkDegradedWarning",
                    term,
                    message: e.to_string(),
                });
                continue;
            }
        };
        for result in results {
            let words: Vec<String> = tokenize_question(&result)
                .tokens
                .into_iter()
                .map(|t| t.text)
                .collect();
            if words.is_empty() {
                continue;
            }
            let gram = stem_all(&words);
            for (column, tokens) in &names.columns {
                if *tokens == gram {
                    upgrade(types, column, ColumnLinkType::ValueExactMatch);
                } else if is_sub_multiset(&gram, tokens) {
                    upgrade(types, column, ColumnLinkType::ValuePartialMatch);
                }
            }
        }
    }
    warnings
}

/// Tokenizes, recognizes spans and types columns in one call.
pub fn link_question(text: &str, schema: &Schema, ks: &dyn KnowledgeSource) -> LinkResult {
    let question = tokenize_question(text);
    let spans = recognize_spans(&question, schema);
    let mut column_types = assign_column_types(&spans, schema);
    let warnings = link_value_spans(&spans, ks, schema, &mut column_types);
    LinkResult {
        spans,
        column_types,
        warnings,
    }
}
