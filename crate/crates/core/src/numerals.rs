//! English numerals as written in deeds: Arabic digits, number words
//! ("one hundred and six", "twenty-five", "twenty-fifth"), and the mixed
//! confirmation style "Eight (8)".
//!
//! Values are limited to 0..=99999.

use serde::Serialize;

use crate::corpus::{Span, Token};
use crate::error::{Error, Result};

pub const MAX_VALUE: u32 = 99_999;

/// Longest token run a single numeral may span.
const MAX_RUN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NumeralForm {
    Arabic,
    Words,
    Mixed,
}

/// A numeral value with how it was written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Numeral {
    pub value: u32,
    pub form: NumeralForm,
    /// Set when a parenthesized Arabic value disagrees with the words; the
    /// Arabic value is kept.
    pub conflict: bool,
}

/// A numeral located in a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NumeralParse {
    pub value: u32,
    pub form: NumeralForm,
    pub conflict: bool,
    pub source_span: Span,
    /// Number of tokens consumed from the start of the run.
    pub tokens: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NumeralOptions {
    /// Read `l`/`i` as 1 and `o` as 0 inside tokens that already contain a
    /// digit. Only sensible right after a survey keyword.
    pub ocr_digits: bool,
}

const UNITS: [&str; 10] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
];
const UNIT_ORDINALS: [&str; 10] = [
    "zeroth", "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth",
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
const TEEN_ORDINALS: [&str; 10] = [
    "tenth",
    "eleventh",
    "twelfth",
    "thirteenth",
    "fourteenth",
    "fifteenth",
    "sixteenth",
    "seventeenth",
    "eighteenth",
    "nineteenth",
];
const TENS: [&str; 8] = [
    "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];
const TENS_ORDINALS: [&str; 8] = [
    "twentieth",
    "thirtieth",
    "fortieth",
    "fiftieth",
    "sixtieth",
    "seventieth",
    "eightieth",
    "ninetieth",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Zero,
    Unit(u32),
    Teen(u32),
    Tens(u32),
    Hundred,
    Thousand,
    And,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    kind: Kind,
    ordinal: bool,
}

fn classify(word: &str) -> Option<Piece> {
    let lookup = |table: &[&str], w: &str| table.iter().position(|t| *t == w).map(|i| i as u32);
    let piece = |kind, ordinal| Some(Piece { kind, ordinal });
    match word {
        "zero" => return piece(Kind::Zero, false),
        "and" => return piece(Kind::And, false),
        "hundred" => return piece(Kind::Hundred, false),
        "hundredth" => return piece(Kind::Hundred, true),
        "thousand" => return piece(Kind::Thousand, false),
        "thousandth" => return piece(Kind::Thousand, true),
        _ => {}
    }
    if let Some(i) = lookup(&UNITS[1..], word) {
        return piece(Kind::Unit(i + 1), false);
    }
    if let Some(i) = lookup(&UNIT_ORDINALS[1..], word) {
        return piece(Kind::Unit(i + 1), true);
    }
    if let Some(i) = lookup(&TEENS, word) {
        return piece(Kind::Teen(10 + i), false);
    }
    if let Some(i) = lookup(&TEEN_ORDINALS, word) {
        return piece(Kind::Teen(10 + i), true);
    }
    if let Some(i) = lookup(&TENS, word) {
        return piece(Kind::Tens(20 + 10 * i), false);
    }
    if let Some(i) = lookup(&TENS_ORDINALS, word) {
        return piece(Kind::Tens(20 + 10 * i), true);
    }
    None
}

/// Value of a token written in digits, with an optional ordinal suffix.
fn arabic_value(word: &str, ocr_digits: bool) -> Option<u32> {
    let stem = ["st", "nd", "rd", "th"]
        .iter()
        .find_map(|s| word.strip_suffix(s))
        .filter(|s| !s.is_empty())
        .unwrap_or(word);
    let digits: String = if ocr_digits && stem.chars().any(|c| c.is_ascii_digit()) {
        stem.chars()
            .map(|c| match c {
                'l' | 'i' | '|' => '1',
                'o' => '0',
                c => c,
            })
            .collect()
    } else {
        stem.to_string()
    };
    if digits.is_empty() || digits.len() > 5 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse::<u32>().ok().filter(|v| *v <= MAX_VALUE)
}

fn pieces_of(words: &[&str]) -> Option<Vec<Piece>> {
    let mut out = Vec::new();
    for w in words {
        for part in w.split('-').filter(|p| !p.is_empty()) {
            out.push(classify(part)?);
        }
    }
    Some(out)
}

fn below_hundred(p: &[Piece], i: usize) -> Option<(u32, usize)> {
    match p.get(i)?.kind {
        Kind::Unit(u) | Kind::Teen(u) => Some((u, i + 1)),
        Kind::Tens(t) => match p.get(i + 1) {
            Some(Piece {
                kind: Kind::Unit(u),
                ..
            }) if !p[i].ordinal => Some((t + u, i + 2)),
            _ => Some((t, i + 1)),
        },
        _ => None,
    }
}

fn below_thousand(p: &[Piece], i: usize) -> Option<(u32, usize)> {
    let lead = p.get(i)?;
    let is_hundred = matches!(
        p.get(i + 1),
        Some(Piece {
            kind: Kind::Hundred,
            ..
        })
    );
    match lead.kind {
        Kind::Unit(h) | Kind::Teen(h) if is_hundred && !lead.ordinal => {
            let value = h * 100;
            let mut j = i + 2;
            if p[i + 1].ordinal || j == p.len() {
                return Some((value, j));
            }
            if p[j].kind == Kind::And {
                j += 1;
                let (rest, k) = below_hundred(p, j)?;
                return Some((value + rest, k));
            }
            match below_hundred(p, j) {
                Some((rest, k)) => Some((value + rest, k)),
                None => Some((value, j)),
            }
        }
        _ => below_hundred(p, i),
    }
}

/// Parses a piece sequence that must be consumed completely.
fn parse_pieces(p: &[Piece]) -> Option<u32> {
    if p.is_empty() || p[..p.len() - 1].iter().any(|x| x.ordinal) {
        return None;
    }
    if p.len() == 1 && p[0].kind == Kind::Zero {
        return Some(0);
    }
    let (head, mut i) = below_thousand(p, 0)?;
    let mut value = head;
    if let Some(Piece {
        kind: Kind::Thousand,
        ordinal,
    }) = p.get(i)
    {
        value = head * 1000;
        i += 1;
        if !ordinal && i < p.len() {
            if p[i].kind == Kind::And {
                i += 1;
            }
            let (tail, k) = below_thousand(p, i)?;
            value += tail;
            i = k;
        }
    }
    (i == p.len() && value <= MAX_VALUE).then_some(value)
}

/// Longest numeral at the start of `words`, with the number of words used.
fn scan(words: &[&str], opts: NumeralOptions) -> Option<(Numeral, usize)> {
    let first = *words.first()?;
    if let Some(value) = arabic_value(first, opts.ocr_digits) {
        return Some((
            Numeral {
                value,
                form: NumeralForm::Arabic,
                conflict: false,
            },
            1,
        ));
    }
    let limit = words.len().min(MAX_RUN);
    let (word_value, used) = (1..=limit).rev().find_map(|k| {
        let pieces = pieces_of(&words[..k])?;
        parse_pieces(&pieces).map(|v| (v, k))
    })?;
    if let Some(arabic) = words
        .get(used)
        .and_then(|w| arabic_value(w, opts.ocr_digits))
    {
        return Some((
            Numeral {
                value: arabic,
                form: NumeralForm::Mixed,
                conflict: arabic != word_value,
            },
            used + 1,
        ));
    }
    Some((
        Numeral {
            value: word_value,
            form: NumeralForm::Words,
            conflict: false,
        },
        used,
    ))
}

/// Parses a complete run of normalized words. Returns `None` unless every
/// word belongs to the numeral.
pub fn parse_words(words: &[&str]) -> Option<Numeral> {
    match scan(words, NumeralOptions::default()) {
        Some((n, used)) if used == words.len() => Some(n),
        _ => None,
    }
}

/// Parses the longest numeral at the start of a token run.
pub fn parse_numeral(tokens: &[Token]) -> Option<NumeralParse> {
    parse_numeral_with(tokens, NumeralOptions::default())
}

pub fn parse_numeral_with(tokens: &[Token], opts: NumeralOptions) -> Option<NumeralParse> {
    // a clause mark after a word ("Forty. First") closes the run
    let closes = |t: &Token| {
        t.surface
            .chars()
            .rev()
            .take_while(|c| !c.is_alphanumeric())
            .any(|c| matches!(c, '.' | ',' | ';' | ':'))
    };
    let mut run: Vec<&str> = Vec::new();
    for t in tokens.iter().take(MAX_RUN + 1) {
        if !t.is_word() {
            break;
        }
        run.push(t.normalized.as_str());
        if closes(t) {
            break;
        }
    }
    let (n, used) = scan(&run, opts)?;
    Some(NumeralParse {
        value: n.value,
        form: n.form,
        conflict: n.conflict,
        source_span: (tokens[0].core_span().0, tokens[used - 1].core_span().1),
        tokens: used,
    })
}

fn hundred_words(n: u32, out: &mut Vec<String>) {
    debug_assert!(n < 100);
    match n {
        0..=9 => out.push(UNITS[n as usize].to_string()),
        10..=19 => out.push(TEENS[(n - 10) as usize].to_string()),
        _ => {
            let tens = TENS[(n / 10 - 2) as usize];
            match n % 10 {
                0 => out.push(tens.to_string()),
                u => out.push(format!("{tens}-{}", UNITS[u as usize])),
            }
        }
    }
}

fn thousand_words(n: u32, out: &mut Vec<String>) {
    let (h, rest) = (n / 100, n % 100);
    if h > 0 {
        out.push(UNITS[h as usize].to_string());
        out.push("hundred".to_string());
    }
    if rest > 0 || h == 0 {
        hundred_words(rest, out);
    }
}

/// Canonical English words for `n`, e.g. 106 → `["one", "hundred", "six"]`.
pub fn render_numeral(n: u32) -> Result<Vec<String>> {
    if n > MAX_VALUE {
        return Err(Error::Invalid(format!(
            "numeral {n} out of range 0..={MAX_VALUE}"
        )));
    }
    let mut out = Vec::new();
    let (th, rest) = (n / 1000, n % 1000);
    if th > 0 {
        hundred_words(th, &mut out);
        out.push("thousand".to_string());
        if rest > 0 {
            thousand_words(rest, &mut out);
        }
    } else {
        thousand_words(rest, &mut out);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn words(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn deed_phrase_forms() {
        let n = parse_words(&words("one hundred and six")).unwrap();
        assert_eq!((n.value, n.form), (106, NumeralForm::Words));

        let n = parse_words(&["eight", "8"]).unwrap();
        assert_eq!(
            (n.value, n.form, n.conflict),
            (8, NumeralForm::Mixed, false)
        );
    }

    #[test]
    fn mixed_conflict_prefers_arabic() {
        let n = parse_words(&["eight", "9"]).unwrap();
        assert_eq!((n.value, n.form, n.conflict), (9, NumeralForm::Mixed, true));
    }

    // Independent table of 0..=99 built from first principles.
    fn reference_word(n: u32) -> String {
        let small = [
            "zero",
            "one",
            "two",
            "three",
            "four",
            "five",
            "six",
            "seven",
            "eight",
            "nine",
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
        let tens = [
            "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
        ];
        if n < 20 {
            small[n as usize].to_string()
        } else if n.is_multiple_of(10) {
            tens[(n / 10) as usize].to_string()
        } else {
            format!("{}-{}", tens[(n / 10) as usize], small[(n % 10) as usize])
        }
    }

    #[test]
    fn word_table_zero_to_ninety_nine() {
        assert_eq!(parse_words(&["twenty-five"]).unwrap().value, 25);
        for n in 0..100 {
            let w = reference_word(n);
            assert_eq!(parse_words(&[w.as_str()]).map(|x| x.value), Some(n), "{w}");
            let spaced = w.replace('-', " ");
            assert_eq!(
                parse_words(&words(&spaced)).map(|x| x.value),
                Some(n),
                "{spaced}"
            );
        }
    }

    #[test]
    fn ordinals_and_suffixes() {
        assert_eq!(parse_words(&["twenty-fifth"]).unwrap().value, 25);
        assert_eq!(parse_words(&["first"]).unwrap().value, 1);
        assert_eq!(parse_words(&["25th"]).unwrap().value, 25);
        assert_eq!(parse_words(&words("one hundredth")).unwrap().value, 100);
        // nothing may follow an ordinal
        assert!(parse_words(&words("fifth six")).is_none());
    }

    #[test]
    fn rejects_non_numerals() {
        assert!(parse_words(&["north"]).is_none());
        assert!(parse_words(&[]).is_none());
        assert!(parse_words(&words("one two")).is_none());
        assert!(parse_words(&words("one hundred and")).is_none());
        assert!(parse_words(&["123456"]).is_none());
        assert!(parse_words(&["and"]).is_none());
    }

    #[test]
    fn longest_prefix_in_token_run() {
        let toks = tokenize("Eight (8) North");
        let p = parse_numeral(&toks).unwrap();
        assert_eq!((p.value, p.form, p.tokens), (8, NumeralForm::Mixed, 2));
        assert_eq!(p.source_span, (0, 8));

        let toks = tokenize("One hundred and six North");
        let p = parse_numeral(&toks).unwrap();
        assert_eq!((p.value, p.tokens), (106, 4));

        let toks = tokenize("8 and Range");
        assert_eq!(parse_numeral(&toks).unwrap().tokens, 1);

        let toks = tokenize("Forty. first delivered");
        assert_eq!(parse_numeral(&toks).unwrap().value, 40);
        let toks = tokenize("Twenty-one, thence");
        assert_eq!(parse_numeral(&toks).unwrap().value, 21);
    }

    #[test]
    fn ocr_digit_confusions_only_when_enabled() {
        let toks = tokenize("2l North");
        assert!(parse_numeral(&toks).is_none());
        let p = parse_numeral_with(&toks, NumeralOptions { ocr_digits: true }).unwrap();
        assert_eq!(p.value, 21);
        let toks = tokenize("lO");
        assert!(parse_numeral_with(&toks, NumeralOptions { ocr_digits: true }).is_none());
    }

    #[test]
    fn hundreds_from_teens() {
        assert_eq!(parse_words(&words("nineteen hundred")).unwrap().value, 1900);
        assert_eq!(
            parse_words(&words("twenty thousand and five hundred one"))
                .unwrap()
                .value,
            20501
        );
    }

    #[test]
    fn render_examples() {
        assert_eq!(render_numeral(0).unwrap(), ["zero"]);
        assert_eq!(render_numeral(36).unwrap(), ["thirty-six"]);
        assert_eq!(render_numeral(106).unwrap(), ["one", "hundred", "six"]);
        assert_eq!(
            render_numeral(99_999).unwrap(),
            ["ninety-nine", "thousand", "nine", "hundred", "ninety-nine"]
        );
        assert!(render_numeral(100_000).is_err());
    }

    #[test]
    fn round_trip_exhaustive() {
        for n in 0..=MAX_VALUE {
            let w = render_numeral(n).unwrap();
            let refs: Vec<&str> = w.iter().map(String::as_str).collect();
            assert_eq!(parse_words(&refs).map(|x| x.value), Some(n), "{refs:?}");
        }
    }
}
