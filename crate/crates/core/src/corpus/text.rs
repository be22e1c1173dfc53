//! Sentence splitting and tokenization.

use super::{porter, Token};

/// Byte spans of the sentences in `text`, trimmed of surrounding whitespace.
///
/// A sentence ends at `.`, `!` or `?` followed by whitespace and then an
/// uppercase letter or a digit. Nothing inside parentheses or brackets ends a
/// sentence.
pub fn sentence_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (n, &(i, c)) in chars.iter().enumerate() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth = depth.saturating_sub(1),
            '.' | '!' | '?' if depth == 0 => {
                let Some(&(_, next)) = chars.get(n + 1) else {
                    continue;
                };
                if !next.is_whitespace() {
                    continue;
                }
                let following = chars[n + 1..].iter().find(|(_, ch)| !ch.is_whitespace());
                if let Some(&(j, ch)) = following {
                    if ch.is_uppercase() || ch.is_ascii_digit() {
                        push_trimmed(text, start, i + c.len_utf8(), &mut spans);
                        start = j;
                    }
                }
            }
            _ => {}
        }
    }
    push_trimmed(text, start, text.len(), &mut spans);
    spans
}

fn push_trimmed(text: &str, start: usize, end: usize, spans: &mut Vec<(usize, usize)>) {
    let piece = &text[start..end];
    let lead = piece.len() - piece.trim_start().len();
    let trimmed = piece.trim();
    if !trimmed.is_empty() {
        spans.push((start + lead, start + lead + trimmed.len()));
    }
}

/// Splits section text into sentences.
pub fn split_sentences(text: &str) -> Vec<String> {
    sentence_spans(text)
        .into_iter()
        .map(|(s, e)| text[s..e].to_string())
        .collect()
}

const DETACHED: &[char] = &['(', ')', '[', ']', ',', ';', ':', '=', '%'];
const QUOTES: &[char] = &['"', '\'', '\u{2018}', '\u{2019}', '\u{201c}', '\u{201d}'];
const FINAL: &[char] = &['.', '!', '?'];

/// Splits a sentence into tokens. Numeric values are not assigned here; see
/// [`normalize_number_words`](super::normalize_number_words).
pub fn tokenize(sentence: &str) -> Vec<Token> {
    let mut spans = Vec::new();
    let mut chunk_start = None;
    for (i, c) in sentence.char_indices() {
        match (c.is_whitespace(), chunk_start) {
            (true, Some(s)) => {
                split_chunk(sentence, s, i, &mut spans);
                chunk_start = None;
            }
            (false, None) => chunk_start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = chunk_start {
        split_chunk(sentence, s, sentence.len(), &mut spans);
    }
    spans
        .into_iter()
        .enumerate()
        .map(|(position, (s, e))| {
            let surface = &sentence[s..e];
            let lower = surface.to_lowercase();
            Token {
                surface: surface.to_string(),
                stem: porter::stem(&lower),
                lower,
                position,
                char_span: (s, e),
                numeric_value: None,
            }
        })
        .collect()
}

/// Splits one whitespace-delimited chunk `sentence[start..end]`.
fn split_chunk(sentence: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    let chunk = &sentence[start..end];
    let chars: Vec<(usize, char)> = chunk.char_indices().collect();
    let n = chars.len();
    let prev = |k: usize| if k > 0 { Some(chars[k - 1].1) } else { None };
    let next = |k: usize| chars.get(k + 1).map(|&(_, c)| c);

    // Trailing sentence punctuation and quotes are detached from the end of
    // the chunk, including when they sit behind closing brackets.
    let mut tail = n;
    while tail > 0 {
        let c = chars[tail - 1].1;
        if DETACHED.contains(&c) || QUOTES.contains(&c) || FINAL.contains(&c) {
            tail -= 1;
        } else {
            break;
        }
    }

    let mut cur: Option<usize> = None;
    let flush = |cur: &mut Option<usize>, upto: usize, out: &mut Vec<(usize, usize)>| {
        if let Some(s) = cur.take() {
            out.push((start + s, start + upto));
        }
    };
    for k in 0..n {
        let (off, c) = chars[k];
        let clen = c.len_utf8();
        let single = if DETACHED.contains(&c) {
            // Thousands separator inside a digit string stays attached.
            !(c == ','
                && prev(k).is_some_and(|p| p.is_ascii_digit())
                && is_thousands_group(&chars[k + 1..]))
        } else if c == '-' {
            prev(k).is_some_and(|p| p.is_ascii_digit())
                || next(k).is_some_and(|q| q.is_ascii_digit())
        } else if QUOTES.contains(&c) {
            cur.is_none() || k >= tail
        } else {
            FINAL.contains(&c) && k >= tail
        };
        if single {
            flush(&mut cur, off, out);
            out.push((start + off, start + off + clen));
        } else if cur.is_none() {
            cur = Some(off);
        }
    }
    flush(&mut cur, chunk.len(), out);
}

fn is_thousands_group(rest: &[(usize, char)]) -> bool {
    rest.len() >= 3
        && rest[..3].iter().all(|(_, c)| c.is_ascii_digit())
        && !rest.get(3).is_some_and(|(_, c)| c.is_ascii_digit())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(s: &str) -> Vec<String> {
        tokenize(s).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn splits_basic_sentences() {
        assert_eq!(split_sentences("A b. C d."), vec!["A b.", "C d."]);
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   ").is_empty());
    }

    #[test]
    fn decimal_and_parenthetical_guards() {
        let s = split_sentences("mean 4.5 mg was given. Next.");
        assert_eq!(s, vec!["mean 4.5 mg was given.", "Next."]);
        let s = split_sentences("Arm A (n = 76. Arm B n = 69) was used. 145 total.");
        assert_eq!(s.len(), 2);
        assert_eq!(s[1], "145 total.");
        // lowercase continuation does not start a sentence
        assert_eq!(split_sentences("vs. placebo was used.").len(), 1);
    }

    #[test]
    fn tokenizes_parenthetical_count() {
        assert_eq!(surfaces("(n = 76)"), vec!["(", "n", "=", "76", ")"]);
        assert_eq!(surfaces("(n=69)."), vec!["(", "n", "=", "69", ")", "."]);
    }

    #[test]
    fn tokenizes_paper_sentence() {
        assert_eq!(surfaces("1477 patients"), vec!["1477", "patients"]);
        assert_eq!(
            surfaces("Between 1996 and 2001, 1477 patients from 70 hospitals."),
            vec!["Between", "1996", "and", "2001", ",", "1477", "patients", "from", "70", "hospitals", "."]
        );
    }

    #[test]
    fn hyphens() {
        assert_eq!(surfaces("twenty-five"), vec!["twenty-five"]);
        assert_eq!(surfaces("double-blind"), vec!["double-blind"]);
        assert_eq!(surfaces("aged 18-65"), vec!["aged", "18", "-", "65"]);
    }

    #[test]
    fn thousands_and_percent() {
        assert_eq!(surfaces("1,477 adults"), vec!["1,477", "adults"]);
        assert_eq!(surfaces("45%,"), vec!["45", "%", ","]);
        assert_eq!(surfaces("'70'"), vec!["'", "70", "'"]);
        assert_eq!(surfaces("mean 4.5."), vec!["mean", "4.5", "."]);
    }

    #[test]
    fn spans_index_raw_text() {
        let s = "Of  the (n = 76) women.";
        for t in tokenize(s) {
            assert_eq!(&s[t.char_span.0..t.char_span.1], t.surface);
        }
    }
}
