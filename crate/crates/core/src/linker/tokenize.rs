//! Question tokenization and the suffix stemmer shared by span and value
//! matching.

use serde::Serialize;

/// One word of a question. Offsets are byte positions in the original text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuestionToken {
    /// Lower-cased surface form.
    pub text: String,
    pub start: usize,
    pub end: usize,
    /// Index of the quoted region the word sits in, if any.
    pub quote: Option<usize>,
}

/// Byte range of a quoted region, quote marks included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuoteRegion {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TokenizedQuestion {
    pub text: String,
    pub tokens: Vec<QuestionToken>,
    pub quotes: Vec<QuoteRegion>,
}

impl TokenizedQuestion {
    pub fn words(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text.as_str()).collect()
    }
}

fn is_quote(c: char) -> bool {
    c == '\'' || c == '"'
}

/// Splits on whitespace and punctuation, lower-cases, and records quoted
/// regions. A quote opens when it is not preceded by a word character and
/// closes at the next matching quote not followed by one, so apostrophes
/// inside words never open a region. Decimal points between digits stay in
/// the number.
pub fn tokenize_question(text: &str) -> TokenizedQuestion {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let at = |i: usize| chars.get(i).map(|&(_, c)| c);
    let word = |c: Option<char>| c.is_some_and(char::is_alphanumeric);
    let mut tokens = Vec::new();
    let mut quotes = Vec::new();
    let mut open: Option<(char, usize)> = None;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if is_quote(c) {
            let prev_word = i > 0 && word(at(i - 1));
            match open {
                Some((q, start)) if q == c && !word(at(i + 1)) => {
                    quotes.push(QuoteRegion {
                        start,
                        end: pos + c.len_utf8(),
                    });
                    open = None;
                }
                None if !prev_word && word(at(i + 1)) && has_closer(&chars, i, c) => {
                    open = Some((c, pos));
                }
                _ => {}
            }
            i += 1;
            continue;
        }
        if c.is_alphanumeric() {
            let mut j = i;
            while j < chars.len() {
                let cj = chars[j].1;
                let decimal = cj == '.'
                    && j > i
                    && chars[j - 1].1.is_ascii_digit()
                    && at(j + 1).is_some_and(|d| d.is_ascii_digit());
                if cj.is_alphanumeric() || decimal {
                    j += 1;
                } else {
                    break;
                }
            }
            let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
            tokens.push(QuestionToken {
                text: text[pos..end].to_lowercase(),
                start: pos,
                end,
                quote: open.map(|_| quotes.len()),
            });
            i = j;
            continue;
        }
        i += 1;
    }
    TokenizedQuestion {
        text: text.to_string(),
        tokens,
        quotes,
    }
}

/// Whether a closing `quote` follows position `i`.
fn has_closer(chars: &[(usize, char)], i: usize, quote: char) -> bool {
    (i + 1..chars.len()).any(|j| {
        chars[j].1 == quote && !chars.get(j + 1).is_some_and(|&(_, c)| c.is_alphanumeric())
    })
}

/// Plural stripping: `-ies` to `-y`, `-es` after a sibilant, otherwise a
/// final `-s` unless the word ends in `ss`, `us` or `is`.
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    if w.len() > 4 && w.ends_with("ies") {
        return format!("{}y", &w[..w.len() - 3]);
    }
    if w.len() > 3 && w.ends_with("es") {
        let base = &w[..w.len() - 2];
        if ["s", "x", "z", "ch", "sh"].iter().any(|s| base.ends_with(s)) {
            return base.to_string();
        }
    }
    if w.len() > 3 && w.ends_with('s') && !["ss", "us", "is"].iter().any(|s| w.ends_with(s)) {
        return w[..w.len() - 1].to_string();
    }
    w
}

pub fn stem_all<S: AsRef<str>>(words: &[S]) -> Vec<String> {
    words.iter().map(|w| stem(w.as_ref())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_and_offsets() {
        let q = tokenize_question("Find the year, and book titles!");
        assert_eq!(q.words(), ["find", "the", "year", "and", "book", "titles"]);
        assert_eq!(&q.text[q.tokens[2].start..q.tokens[2].end], "year");
        assert!(q.quotes.is_empty());
    }

    #[test]
    fn quoted_regions() {
        let q = tokenize_question("list names of singers named 'Joe Smith' please");
        assert_eq!(q.quotes.len(), 1);
        assert_eq!(&q.text[q.quotes[0].start..q.quotes[0].end], "'Joe Smith'");
        let quoted: Vec<&str> = q
            .tokens
            .iter()
            .filter(|t| t.quote == Some(0))
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(quoted, ["joe", "smith"]);
    }

    #[test]
    fn apostrophes_do_not_quote() {
        let q = tokenize_question("what is the singer's age");
        assert!(q.quotes.is_empty());
        assert!(q.tokens.iter().all(|t| t.quote.is_none()));
    }

    #[test]
    fn decimals_stay_whole() {
        assert_eq!(tokenize_question("above 2.5 stars.").words(), ["above", "2.5", "stars"]);
    }

    #[test]
    fn stemming() {
        assert_eq!(stem("titles"), "title");
        assert_eq!(stem("countries"), "country");
        assert_eq!(stem("boxes"), "box");
        assert_eq!(stem("matches"), "match");
        assert_eq!(stem("class"), "class");
        assert_eq!(stem("status"), "status");
        assert_eq!(stem("analysis"), "analysis");
        assert_eq!(stem("pets"), "pet");
        assert_eq!(stem("is"), "is");
    }
}
