//! Conversion of spelled-out integers ("one hundred and forty-five") into
//! single numeric tokens.

use super::{porter, Token};

const UNITS: [&str; 10] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
];
const TEENS: [&str; 10] = [
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
];
const TENS: [&str; 8] = [
    "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Word {
    Unit(u64),
    Teen(u64),
    Tens(u64),
    /// Hyphenated compound such as "seventy-six".
    Compound(u64),
    Hundred,
    Magnitude(u64),
    And,
}

fn classify(lower: &str) -> Option<Word> {
    if let Some(i) = UNITS.iter().position(|w| *w == lower) {
        return Some(Word::Unit(i as u64));
    }
    if let Some(i) = TEENS.iter().position(|w| *w == lower) {
        return Some(Word::Teen(10 + i as u64));
    }
    if let Some(i) = TENS.iter().position(|w| *w == lower) {
        return Some(Word::Tens(20 + 10 * i as u64));
    }
    match lower {
        "hundred" => return Some(Word::Hundred),
        "thousand" => return Some(Word::Magnitude(1_000)),
        "million" => return Some(Word::Magnitude(1_000_000)),
        "and" => return Some(Word::And),
        _ => {}
    }
    let (tens, unit) = lower.split_once('-')?;
    let tens = TENS.iter().position(|w| *w == tens)?;
    let unit = UNITS.iter().position(|w| *w == unit).filter(|&u| u > 0)?;
    Some(Word::Compound(20 + 10 * tens as u64 + unit as u64))
}

/// True for any token that can take part in a spelled-out number
/// (excluding the connective "and").
pub fn is_number_word(lower: &str) -> bool {
    matches!(classify(lower), Some(w) if w != Word::And)
}

/// Parses a complete run of number words. Returns `None` unless the whole run
/// forms one well-formed number below one billion.
pub fn compose(words: &[&str]) -> Option<u64> {
    let words: Vec<Word> = words.iter().map(|w| classify(w)).collect::<Option<_>>()?;
    if words == [Word::Unit(0)] {
        return Some(0);
    }
    let mut total = 0u64;
    let mut last_magnitude = u64::MAX;
    let mut i = 0;
    loop {
        let after_magnitude = i > 0;
        let (group, used) = parse_group(&words[i..], after_magnitude)?;
        i += used;
        match words.get(i) {
            None => return Some(total + group),
            Some(Word::Magnitude(m)) if *m < last_magnitude => {
                total += group * m;
                last_magnitude = *m;
                i += 1;
                if i == words.len() {
                    return Some(total);
                }
            }
            _ => return None,
        }
    }
}

/// Parses a group in 1..=999, returning its value and the words consumed.
fn parse_group(words: &[Word], after_magnitude: bool) -> Option<(u64, usize)> {
    let mut i = 0;
    let mut value = 0;
    let mut leading_and = false;
    if after_magnitude && words.first() == Some(&Word::And) {
        leading_and = true;
        i += 1;
    }
    if let (Some(Word::Unit(u)), Some(Word::Hundred)) = (words.get(i), words.get(i + 1)) {
        if *u == 0 || leading_and {
            return None;
        }
        value = u * 100;
        i += 2;
        if words.get(i) == Some(&Word::And) {
            let (rest, used) = parse_tens(&words[i + 1..])?;
            return Some((value + rest, i + 1 + used));
        }
    }
    match parse_tens(&words[i..]) {
        Some((rest, used)) => {
            if leading_and && value == 0 && rest >= 100 {
                return None;
            }
            Some((value + rest, i + used))
        }
        None if value > 0 => Some((value, i)),
        None => None,
    }
}

/// Parses 1..=99.
fn parse_tens(words: &[Word]) -> Option<(u64, usize)> {
    match words.first()? {
        Word::Unit(u) if *u > 0 => Some((*u, 1)),
        Word::Teen(t) => Some((*t, 1)),
        Word::Compound(c) => Some((*c, 1)),
        Word::Tens(t) => match words.get(1) {
            Some(Word::Unit(u)) if *u > 0 => Some((t + u, 2)),
            _ => Some((*t, 1)),
        },
        _ => None,
    }
}

/// Parses a digit token, accepting comma thousands separators ("1,477").
pub fn parse_digits(surface: &str) -> Option<u64> {
    if surface.is_empty() || !surface.starts_with(|c: char| c.is_ascii_digit()) {
        return None;
    }
    let groups: Vec<&str> = surface.split(',').collect();
    if groups.len() > 1 {
        let head_ok = (1..=3).contains(&groups[0].len());
        let rest_ok = groups[1..].iter().all(|g| g.len() == 3);
        if !head_ok || !rest_ok {
            return None;
        }
    }
    if !groups.iter().all(|g| g.bytes().all(|b| b.is_ascii_digit())) {
        return None;
    }
    groups.concat().parse().ok()
}

/// Replaces maximal runs of number words by a single numeric token and
/// assigns numeric values to digit tokens. `sentence` is the raw text the
/// token spans refer to. Runs that do not compose pass through unchanged.
pub fn normalize_number_words(sentence: &str, tokens: Vec<Token>) -> Vec<Token> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        if is_number_word(&tokens[i].lower) {
            let end = run_end(&tokens, i);
            let words: Vec<&str> = tokens[i..end].iter().map(|t| t.lower.as_str()).collect();
            if let Some(value) = compose(&words) {
                out.push(merge(sentence, &tokens[i..end], value));
            } else {
                // "between twenty and forty": compose each side of an "and"
                // on its own; pieces that still fail pass through unchanged.
                let mut piece = i;
                for k in i..=end {
                    if k < end && tokens[k].lower != "and" {
                        continue;
                    }
                    let words: Vec<&str> =
                        tokens[piece..k].iter().map(|t| t.lower.as_str()).collect();
                    match compose(&words) {
                        Some(value) => out.push(merge(sentence, &tokens[piece..k], value)),
                        None => out.extend(tokens[piece..k].iter().cloned()),
                    }
                    if k < end {
                        out.push(tokens[k].clone());
                    }
                    piece = k + 1;
                }
            }
            i = end;
            continue;
        }
        let mut t = tokens[i].clone();
        t.numeric_value = parse_digits(&t.surface);
        out.push(t);
        i += 1;
    }
    for (pos, t) in out.iter_mut().enumerate() {
        t.position = pos;
    }
    out
}

fn merge(sentence: &str, run: &[Token], value: u64) -> Token {
    let start = run[0].char_span.0;
    let stop = run[run.len() - 1].char_span.1;
    let surface = sentence[start..stop].to_string();
    let lower = surface.to_lowercase();
    Token {
        stem: porter::stem(&lower),
        lower,
        surface,
        position: 0,
        char_span: (start, stop),
        numeric_value: Some(value),
    }
}

/// End (exclusive) of the maximal number-word run starting at `start`.
/// "and" belongs to a run only when number words follow it.
fn run_end(tokens: &[Token], start: usize) -> usize {
    let mut end = start + 1;
    while end < tokens.len() {
        let lower = tokens[end].lower.as_str();
        if is_number_word(lower) {
            end += 1;
        } else if lower == "and"
            && tokens
                .get(end + 1)
                .is_some_and(|t| is_number_word(&t.lower))
        {
            end += 2;
        } else {
            break;
        }
    }
    end
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::text::tokenize;

    fn normalize(s: &str) -> Vec<Token> {
        normalize_number_words(s, tokenize(s))
    }

    #[test]
    fn composes_examples() {
        assert_eq!(compose(&["seventy-six"]), Some(76));
        assert_eq!(compose(&["one", "hundred", "and", "forty-five"]), Some(145));
        assert_eq!(compose(&["twenty", "five"]), Some(25));
        assert_eq!(compose(&["two", "thousand", "and", "one"]), Some(2001));
        assert_eq!(
            compose(&["three", "million", "two", "hundred", "thousand"]),
            Some(3_200_000)
        );
        assert_eq!(compose(&["zero"]), Some(0));
    }

    #[test]
    fn rejects_malformed_runs() {
        assert_eq!(compose(&["five", "six"]), None);
        assert_eq!(compose(&["thousand"]), None);
        assert_eq!(compose(&["one", "thousand", "two", "thousand"]), None);
        assert_eq!(compose(&["twenty", "twenty"]), None);
        assert_eq!(compose(&["billion"]), None);
    }

    #[test]
    fn normalizes_tokens() {
        let toks = normalize("Seventy-six patients");
        assert_eq!(toks.len(), 2);
        assert_eq!(toks[0].numeric_value, Some(76));
        assert_eq!(toks[0].surface, "Seventy-six");

        let toks = normalize("one hundred and forty-five women and men");
        assert_eq!(toks[0].numeric_value, Some(145));
        assert_eq!(toks[0].char_span, (0, 26));
        assert_eq!(toks[1].lower, "women");
        assert_eq!(toks[1].position, 1);
    }

    #[test]
    fn leaves_non_numbers_alone() {
        let plain = tokenize("no numbers here");
        assert_eq!(normalize("no numbers here"), plain);
        let toks = normalize("five six");
        assert_eq!(toks.len(), 2);
        assert!(toks.iter().all(|t| t.numeric_value.is_none()));
    }

    #[test]
    fn splits_failed_runs_at_and() {
        let toks = normalize("between twenty and forty patients");
        let values: Vec<_> = toks.iter().map(|t| t.numeric_value).collect();
        assert_eq!(values, vec![None, Some(20), None, Some(40), None]);
    }

    #[test]
    fn digits() {
        assert_eq!(parse_digits("1477"), Some(1477));
        assert_eq!(parse_digits("1,477"), Some(1477));
        assert_eq!(parse_digits("12,34"), None);
        assert_eq!(parse_digits("4.5"), None);
        assert_eq!(parse_digits("76a"), None);
        let toks = normalize("(n = 76)");
        assert_eq!(toks[3].numeric_value, Some(76));
    }
}
