//! The caption language.
//!
//! A caption is a list of period-terminated phrases, at most one per concept.
//! Three styles exist: `regular` mentions only present concepts, `absence`
//! additionally says "no X." for every missing training concept, and
//! `negative` lists the bare names of missing concepts (used as a negative
//! prompt). Phrase order carries no meaning.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concepts::{CeilingState, ConceptKind, ConceptReport, FloorState};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CaptionError {
    #[error("unknown phrase {0:?}")]
    UnknownPhrase(String),
    #[error("concept {0} mentioned more than once")]
    DuplicateConcept(ConceptKind),
    #[error("unknown caption style {0:?}")]
    UnknownStyle(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    One,
    Two,
    AFew,
    Several,
    Many,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [
        Quantity::One,
        Quantity::Two,
        Quantity::AFew,
        Quantity::Several,
        Quantity::Many,
    ];

    /// Bucket for a positive count. Zero has no quantity.
    pub fn from_count(n: u32) -> Option<Quantity> {
        Some(match n {
            0 => return None,
            1 => Quantity::One,
            2 => Quantity::Two,
            3..=4 => Quantity::AFew,
            5..=9 => Quantity::Several,
            _ => Quantity::Many,
        })
    }

    /// 0 for "one" up to 4 for "many".
    pub fn ordinal(self) -> u32 {
        self as u32
    }

    pub fn word(self) -> &'static str {
        match self {
            Quantity::One => "one",
            Quantity::Two => "two",
            Quantity::AFew => "a few",
            Quantity::Several => "several",
            Quantity::Many => "many",
        }
    }

    /// Inclusive count range of the bucket; `None` upper bound is open.
    pub fn range(self) -> (u32, Option<u32>) {
        match self {
            Quantity::One => (1, Some(1)),
            Quantity::Two => (2, Some(2)),
            Quantity::AFew => (3, Some(4)),
            Quantity::Several => (5, Some(9)),
            Quantity::Many => (10, None),
        }
    }

    pub fn contains(self, n: u32) -> bool {
        Quantity::from_count(n) == Some(self)
    }

    fn from_tokens(tokens: &[&str]) -> Option<(Quantity, usize)> {
        match tokens {
            ["one", ..] => Some((Quantity::One, 1)),
            ["two", ..] => Some((Quantity::Two, 1)),
            ["a", "few", ..] => Some((Quantity::AFew, 2)),
            ["several", ..] => Some((Quantity::Several, 1)),
            ["many", ..] => Some((Quantity::Many, 1)),
            _ => None,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.word())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CaptionStyle {
    #[default]
    Regular,
    Absence,
    Negative,
}

impl CaptionStyle {
    pub const ALL: [CaptionStyle; 3] = [
        CaptionStyle::Regular,
        CaptionStyle::Absence,
        CaptionStyle::Negative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CaptionStyle::Regular => "regular",
            CaptionStyle::Absence => "absence",
            CaptionStyle::Negative => "negative",
        }
    }
}

impl FromStr for CaptionStyle {
    type Err = CaptionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaptionStyle::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| CaptionError::UnknownStyle(s.to_string()))
    }
}

impl fmt::Display for CaptionStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "form", content = "quantity", rename_all = "snake_case")]
pub enum PhraseForm {
    Present(Quantity),
    /// "full floor" / "full ceiling"
    Full,
    /// "floor with two gaps"
    Gapped(Quantity),
    /// "giant gap with a few chunks of floor"; floor only
    GiantGap(Quantity),
    Absent,
}

impl PhraseForm {
    pub fn quantity(self) -> Option<Quantity> {
        match self {
            PhraseForm::Present(q) | PhraseForm::Gapped(q) | PhraseForm::GiantGap(q) => Some(q),
            PhraseForm::Full | PhraseForm::Absent => None,
        }
    }

    pub fn is_countable(self) -> bool {
        self.quantity().is_some()
    }

    /// Whether this form can describe `concept` (e.g. only floors have giant gaps).
    pub fn valid_for(self, concept: ConceptKind) -> bool {
        match self {
            PhraseForm::Present(_) => !concept.is_surface(),
            PhraseForm::Full | PhraseForm::Gapped(_) => concept.is_surface(),
            PhraseForm::GiantGap(_) => concept == ConceptKind::Floor,
            PhraseForm::Absent => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phrase {
    pub concept: ConceptKind,
    #[serde(flatten)]
    pub form: PhraseForm,
}

pub fn singular(concept: ConceptKind) -> &'static str {
    match concept {
        ConceptKind::Floor => "floor",
        ConceptKind::Ceiling => "ceiling",
        ConceptKind::Enemy => "enemy",
        ConceptKind::QuestionBlock => "question block",
        ConceptKind::Cannon => "cannon",
        ConceptKind::Coin => "coin",
        ConceptKind::CoinLine => "coin line",
        ConceptKind::Platform => "platform",
        ConceptKind::AscendingStaircase => "ascending staircase",
        ConceptKind::DescendingStaircase => "descending staircase",
        ConceptKind::Pipe => "pipe",
        ConceptKind::UpsideDownPipe => "upside down pipe",
        ConceptKind::Tower => "tower",
        ConceptKind::RectangularCluster => "rectangular block cluster",
        ConceptKind::IrregularCluster => "irregular block cluster",
        ConceptKind::LooseBlock => "loose block",
        ConceptKind::BrokenPipe => "broken pipe",
        ConceptKind::BrokenCannon => "broken cannon",
    }
}

pub fn plural(concept: ConceptKind) -> &'static str {
    match concept {
        ConceptKind::Floor => "floor",
        ConceptKind::Ceiling => "ceiling",
        ConceptKind::Enemy => "enemies",
        ConceptKind::QuestionBlock => "question blocks",
        ConceptKind::Cannon => "cannons",
        ConceptKind::Coin => "coins",
        ConceptKind::CoinLine => "coin lines",
        ConceptKind::Platform => "platforms",
        ConceptKind::AscendingStaircase => "ascending staircases",
        ConceptKind::DescendingStaircase => "descending staircases",
        ConceptKind::Pipe => "pipes",
        ConceptKind::UpsideDownPipe => "upside down pipes",
        ConceptKind::Tower => "towers",
        ConceptKind::RectangularCluster => "rectangular block clusters",
        ConceptKind::IrregularCluster => "irregular block clusters",
        ConceptKind::LooseBlock => "loose blocks",
        ConceptKind::BrokenPipe => "broken pipes",
        ConceptKind::BrokenCannon => "broken cannons",
    }
}

fn counted(q: Quantity, singular: &str, plural: &str) -> String {
    let noun = if q == Quantity::One { singular } else { plural };
    format!("{} {}", q.word(), noun)
}

impl Phrase {
    pub fn new(concept: ConceptKind, form: PhraseForm) -> Self {
        Phrase { concept, form }
    }

    /// Phrase text without the terminating period.
    pub fn text(&self, style: CaptionStyle) -> String {
        let c = self.concept;
        match self.form {
            PhraseForm::Present(q) => counted(q, singular(c), plural(c)),
            PhraseForm::Full => format!("full {}", singular(c)),
            PhraseForm::Gapped(q) => format!("{} with {}", singular(c), counted(q, "gap", "gaps")),
            PhraseForm::GiantGap(q) => {
                format!("giant gap with {} of floor", counted(q, "chunk", "chunks"))
            }
            PhraseForm::Absent => match style {
                CaptionStyle::Negative => singular(c).to_string(),
                _ => format!("no {}", plural(c)),
            },
        }
    }

    /// Parses one phrase (no period). Which forms are accepted depends on
    /// `style`; see [`parse_caption`].
    pub fn parse(fragment: &str, style: CaptionStyle) -> Result<Phrase, CaptionError> {
        let tokens: Vec<&str> = fragment.split_whitespace().collect();
        parse_tokens(&tokens, style, true)
            .ok_or_else(|| CaptionError::UnknownPhrase(tokens.join(" ")))
    }
}

/// `allow_absence` admits "no X" phrases outside the absence style; used
/// for prompts, which may be written in either style.
fn parse_tokens(tokens: &[&str], style: CaptionStyle, allow_absence: bool) -> Option<Phrase> {
    if style == CaptionStyle::Negative {
        let joined = tokens.join(" ");
        return ConceptKind::ALL
            .into_iter()
            .find(|&c| singular(c) == joined)
            .map(|c| Phrase::new(c, PhraseForm::Absent));
    }
    let absence_ok = allow_absence || style == CaptionStyle::Absence;
    match tokens {
        ["full", rest @ ..] => surface(rest).map(|c| Phrase::new(c, PhraseForm::Full)),
        ["giant", "gap", "with", rest @ ..] => {
            let (q, used) = Quantity::from_tokens(rest)?;
            match &rest[used..] {
                [chunk, "of", "floor"] if agrees(q, chunk, "chunk", "chunks") => {
                    Some(Phrase::new(ConceptKind::Floor, PhraseForm::GiantGap(q)))
                }
                _ => None,
            }
        }
        ["no", rest @ ..] if absence_ok => {
            let joined = rest.join(" ");
            ConceptKind::ALL
                .into_iter()
                .find(|&c| plural(c) == joined)
                .map(|c| Phrase::new(c, PhraseForm::Absent))
        }
        [first, "with", rest @ ..] => {
            let concept = surface(&[first])?;
            let (q, used) = Quantity::from_tokens(rest)?;
            match &rest[used..] {
                [gap] if agrees(q, gap, "gap", "gaps") => {
                    Some(Phrase::new(concept, PhraseForm::Gapped(q)))
                }
                _ => None,
            }
        }
        _ => {
            let (q, used) = Quantity::from_tokens(tokens)?;
            let noun = tokens[used..].join(" ");
            ConceptKind::ALL
                .into_iter()
                .filter(|c| !c.is_surface())
                .find(|&c| {
                    let want = if q == Quantity::One {
                        singular(c)
                    } else {
                        plural(c)
                    };
                    want == noun
                })
                .map(|c| Phrase::new(c, PhraseForm::Present(q)))
        }
    }
}

fn surface(tokens: &[&str]) -> Option<ConceptKind> {
    match tokens {
        ["floor"] => Some(ConceptKind::Floor),
        ["ceiling"] => Some(ConceptKind::Ceiling),
        _ => None,
    }
}

fn agrees(q: Quantity, word: &str, one: &str, many: &str) -> bool {
    word == if q == Quantity::One { one } else { many }
}

/// A structured caption. Equality via [`Caption::semantic_eq`] ignores
/// phrase order; derived `PartialEq` does not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caption {
    pub style: CaptionStyle,
    pub phrases: Vec<Phrase>,
}

impl Caption {
    pub fn new(style: CaptionStyle, phrases: Vec<Phrase>) -> Result<Self, CaptionError> {
        let mut seen = BTreeSet::new();
        for p in &phrases {
            if !seen.insert(p.concept) {
                return Err(CaptionError::DuplicateConcept(p.concept));
            }
        }
        Ok(Caption { style, phrases })
    }

    pub fn empty(style: CaptionStyle) -> Self {
        Caption {
            style,
            phrases: Vec::new(),
        }
    }

    pub fn text(&self) -> String {
        self.phrases
            .iter()
            .map(|p| format!("{}.", p.text(self.style)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn get(&self, concept: ConceptKind) -> Option<&Phrase> {
        self.phrases.iter().find(|p| p.concept == concept)
    }

    /// The phrase scoring sees for `concept`: `None` when the concept is not
    /// mentioned or is mentioned only as absent.
    pub fn mentioned(&self, concept: ConceptKind) -> Option<&Phrase> {
        self.get(concept).filter(|p| p.form != PhraseForm::Absent)
    }

    pub fn phrase_map(&self) -> BTreeMap<ConceptKind, PhraseForm> {
        self.phrases.iter().map(|p| (p.concept, p.form)).collect()
    }

    pub fn semantic_eq(&self, other: &Caption) -> bool {
        self.phrase_map() == other.phrase_map()
    }

    /// Same caption in canonical concept order.
    pub fn canonical(&self) -> Caption {
        let mut phrases = self.phrases.clone();
        phrases.sort_by_key(|p| p.concept);
        Caption {
            style: self.style,
            phrases,
        }
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }
}

impl fmt::Display for Caption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// Phrase for each concept present in `report`, in canonical order.
pub fn present_phrases(report: &ConceptReport) -> Vec<Phrase> {
    ConceptKind::ALL
        .into_iter()
        .filter_map(|c| present_form(report, c).map(|form| Phrase::new(c, form)))
        .collect()
}

fn present_form(report: &ConceptReport, concept: ConceptKind) -> Option<PhraseForm> {
    match concept {
        ConceptKind::Floor => match report.floor {
            FloorState::Full => Some(PhraseForm::Full),
            FloorState::Gaps(n) => Quantity::from_count(n).map(PhraseForm::Gapped),
            FloorState::GiantGap(n) => Quantity::from_count(n).map(PhraseForm::GiantGap),
            FloorState::None => None,
        },
        ConceptKind::Ceiling => match report.ceiling {
            CeilingState::Full => Some(PhraseForm::Full),
            CeilingState::Gaps(n) => Quantity::from_count(n).map(PhraseForm::Gapped),
            CeilingState::None => None,
        },
        c => Quantity::from_count(report.count(c)).map(PhraseForm::Present),
    }
}

/// Renders the caption of a scene report in the given style.
pub fn render(report: &ConceptReport, style: CaptionStyle) -> Caption {
    let present: BTreeMap<ConceptKind, PhraseForm> = present_phrases(report)
        .into_iter()
        .map(|p| (p.concept, p.form))
        .collect();
    let phrases = match style {
        CaptionStyle::Regular => present
            .into_iter()
            .map(|(c, f)| Phrase::new(c, f))
            .collect(),
        CaptionStyle::Absence => ConceptKind::ALL
            .into_iter()
            .filter_map(|c| match present.get(&c) {
                Some(&f) => Some(Phrase::new(c, f)),
                // broken structures are only ever mentioned when present
                None if c.is_integrity_defect() => None,
                None => Some(Phrase::new(c, PhraseForm::Absent)),
            })
            .collect(),
        CaptionStyle::Negative => ConceptKind::TRAINING
            .into_iter()
            .filter(|c| !present.contains_key(c))
            .map(|c| Phrase::new(c, PhraseForm::Absent))
            .collect(),
    };
    Caption { style, phrases }
}

fn split_phrases(text: &str) -> impl Iterator<Item = &str> {
    text.split('.').map(str::trim).filter(|s| !s.is_empty())
}

/// Parses caption text written in `style`.
///
/// Regular captions accept counted, full, gapped and giant-gap phrases;
/// absence captions additionally accept "no X"; negative captions accept
/// only bare singular concept names.
pub fn parse_caption(text: &str, style: CaptionStyle) -> Result<Caption, CaptionError> {
    let mut phrases = Vec::new();
    for fragment in split_phrases(text) {
        let tokens: Vec<&str> = fragment.split_whitespace().collect();
        let phrase = parse_tokens(&tokens, style, false)
            .ok_or_else(|| CaptionError::UnknownPhrase(tokens.join(" ")))?;
        phrases.push(phrase);
    }
    Caption::new(style, phrases)
}

/// Parses a user prompt, accepting both regular and absence phrases.
pub fn parse_prompt(text: &str) -> Result<Caption, CaptionError> {
    let mut phrases = Vec::new();
    for fragment in split_phrases(text) {
        let tokens: Vec<&str> = fragment.split_whitespace().collect();
        let phrase = parse_tokens(&tokens, CaptionStyle::Regular, true)
            .ok_or_else(|| CaptionError::UnknownPhrase(tokens.join(" ")))?;
        phrases.push(phrase);
    }
    let style = if phrases.iter().any(|p| p.form == PhraseForm::Absent) {
        CaptionStyle::Absence
    } else {
        CaptionStyle::Regular
    };
    Caption::new(style, phrases)
}

/// Randomly permutes phrase order; deterministic per seed.
pub fn shuffle_phrases(caption: &Caption, seed: u64) -> Caption {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phrases = caption.phrases.clone();
    phrases.shuffle(&mut rng);
    Caption {
        style: caption.style,
        phrases,
    }
}

/// Splits on whitespace with each '.' as its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut current = String::new();
        for ch in word.chars() {
            if ch == '.' {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
                out.push(".".to_string());
            } else {
                current.push(ch);
            }
        }
        if !current.is_empty() {
            out.push(current);
        }
    }
    out
}

pub const PAD_TOKEN: &str = "[PAD]";
pub const MASK_TOKEN: &str = "[MASK]";

/// Every phrase a scene from real data can produce for `concept`.
pub fn phrase_space(concept: ConceptKind) -> Vec<PhraseForm> {
    let mut forms = Vec::new();
    match concept {
        ConceptKind::Floor => {
            forms.push(PhraseForm::Full);
            forms.extend(Quantity::ALL.map(PhraseForm::Gapped));
            forms.extend(Quantity::ALL.map(PhraseForm::GiantGap));
        }
        ConceptKind::Ceiling => {
            forms.push(PhraseForm::Full);
            forms.extend(Quantity::ALL.map(PhraseForm::Gapped));
        }
        _ => forms.extend(Quantity::ALL.map(PhraseForm::Present)),
    }
    forms
}

/// Token vocabulary for captions of real scenes in `style`, including the
/// padding and mask tokens a text encoder needs. Special tokens come first,
/// then words in sorted order.
pub fn vocabulary(style: CaptionStyle) -> Vec<String> {
    let mut words = BTreeSet::new();
    let mut add = |text: String| {
        for t in tokenize(&text) {
            words.insert(t);
        }
    };
    for c in ConceptKind::TRAINING {
        if style != CaptionStyle::Negative {
            for form in phrase_space(c) {
                add(format!("{}.", Phrase::new(c, form).text(style)));
            }
        }
        if style != CaptionStyle::Regular {
            add(format!(
                "{}.",
                Phrase::new(c, PhraseForm::Absent).text(style)
            ));
        }
    }
    let mut vocab = vec![PAD_TOKEN.to_string(), MASK_TOKEN.to_string()];
    vocab.extend(words);
    vocab
}

/// Machine-readable description of the prompt grammar.
#[derive(Debug, Clone, Serialize)]
pub struct Grammar {
    pub quantities: Vec<QuantityEntry>,
    pub concepts: Vec<ConceptEntry>,
    pub templates: Vec<&'static str>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantityEntry {
    pub word: &'static str,
    pub ordinal: u32,
    pub min: u32,
    pub max: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConceptEntry {
    pub concept: ConceptKind,
    pub singular: &'static str,
    pub plural: &'static str,
    /// Selectable when building prompts; broken structures are not.
    pub prompt_selectable: bool,
    pub phrases: Vec<GrammarPhrase>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrammarPhrase {
    #[serde(flatten)]
    pub form: PhraseForm,
    pub text: String,
}

pub fn grammar() -> Grammar {
    Grammar {
        quantities: Quantity::ALL
            .into_iter()
            .map(|q| {
                let (min, max) = q.range();
                QuantityEntry {
                    word: q.word(),
                    ordinal: q.ordinal(),
                    min,
                    max,
                }
            })
            .collect(),
        concepts: ConceptKind::ALL
            .into_iter()
            .map(|c| ConceptEntry {
                concept: c,
                singular: singular(c),
                plural: plural(c),
                prompt_selectable: !c.is_integrity_defect(),
                phrases: phrase_space(c)
                    .into_iter()
                    .map(|form| GrammarPhrase {
                        form,
                        text: format!("{}.", Phrase::new(c, form).text(CaptionStyle::Regular)),
                    })
                    .collect(),
            })
            .collect(),
        templates: vec![
            "{quantity} {noun}.",
            "full floor.",
            "floor with {quantity} gap[s].",
            "giant gap with {quantity} chunk[s] of floor.",
            "full ceiling.",
            "ceiling with {quantity} gap[s].",
            "no {plural noun}.",
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::detect;
    use crate::tiles::TileGrid;

    const FIG_A_REGULAR: &str =
        "full floor. one enemy. a few question blocks. one platform. one pipe.";
    const FIG_A_ABSENCE: &str = "full floor. no ceiling. one enemy. a few question blocks. no cannons. no coins. no coin lines. one platform. no ascending staircases. no descending staircases. one pipe. no upside down pipes. no towers. no rectangular block clusters. no irregular block clusters. no loose blocks.";
    const FIG_A_NEGATIVE: &str = "ceiling. cannon. coin. coin line. ascending staircase. descending staircase. upside down pipe. tower. rectangular block cluster. irregular block cluster. loose block.";

    fn fig_a_report() -> ConceptReport {
        let mut r = detect(&TileGrid::new(16, 16)).unwrap();
        r.floor = FloorState::Full;
        for (c, n) in [
            (ConceptKind::Floor, 1),
            (ConceptKind::Enemy, 1),
            (ConceptKind::QuestionBlock, 3),
            (ConceptKind::Platform, 1),
            (ConceptKind::Pipe, 1),
        ] {
            r.counts.insert(c, n);
        }
        r
    }

    #[test]
    fn quantity_buckets() {
        let words: Vec<_> = (0..=11)
            .map(|n| Quantity::from_count(n).map(|q| q.word()))
            .collect();
        assert_eq!(
            words,
            vec![
                None,
                Some("one"),
                Some("two"),
                Some("a few"),
                Some("a few"),
                Some("several"),
                Some("several"),
                Some("several"),
                Some("several"),
                Some("several"),
                Some("many"),
                Some("many"),
            ]
        );
        assert_eq!(Quantity::Many.ordinal(), 4);
        assert_eq!(Quantity::One.ordinal(), 0);
    }

    #[test]
    fn renders_the_three_styles() {
        let r = fig_a_report();
        assert_eq!(render(&r, CaptionStyle::Regular).text(), FIG_A_REGULAR);
        assert_eq!(render(&r, CaptionStyle::Absence).text(), FIG_A_ABSENCE);
        assert_eq!(render(&r, CaptionStyle::Negative).text(), FIG_A_NEGATIVE);
        assert_eq!(render(&r, CaptionStyle::Absence).len(), 16);
    }

    #[test]
    fn parses_the_three_styles_back() {
        let r = fig_a_report();
        for style in CaptionStyle::ALL {
            let c = render(&r, style);
            let back = parse_caption(&c.text(), style).unwrap();
            assert_eq!(back, c);
        }
    }

    #[test]
    fn order_and_whitespace_are_ignored() {
        let a = parse_caption("one enemy.   full floor.", CaptionStyle::Regular).unwrap();
        let b = parse_caption("full floor. one enemy.", CaptionStyle::Regular).unwrap();
        assert!(a.semantic_eq(&b));
        assert_ne!(a, b);
        let c = parse_caption("  full\tfloor .one  enemy", CaptionStyle::Regular).unwrap();
        assert!(c.semantic_eq(&b));
    }

    #[test]
    fn closed_vocabulary() {
        assert_eq!(
            parse_caption("three enemies.", CaptionStyle::Regular).unwrap_err(),
            CaptionError::UnknownPhrase("three enemies".into())
        );
        assert!(parse_caption("one enemies.", CaptionStyle::Regular).is_err());
        assert!(parse_caption("two enemy.", CaptionStyle::Regular).is_err());
        assert!(parse_caption("a few floor.", CaptionStyle::Regular).is_err());
        assert!(
            parse_caption("giant gap with one chunks of floor.", CaptionStyle::Regular).is_err()
        );
        assert!(parse_caption("full enemy.", CaptionStyle::Regular).is_err());
        assert!(parse_caption("ceiling with two gaps.", CaptionStyle::Regular).is_ok());
        assert!(parse_caption("giant gap with one chunk of floor.", CaptionStyle::Regular).is_ok());
    }

    #[test]
    fn style_gating() {
        assert!(parse_caption("no floor.", CaptionStyle::Regular).is_err());
        assert!(parse_caption("no floor.", CaptionStyle::Absence).is_ok());
        assert!(parse_caption("cannon.", CaptionStyle::Regular).is_err());
        assert!(parse_caption("cannon.", CaptionStyle::Negative).is_ok());
        assert!(parse_caption("one cannon.", CaptionStyle::Negative).is_err());
        let p = parse_prompt("full floor. no cannons.").unwrap();
        assert_eq!(p.style, CaptionStyle::Absence);
        assert_eq!(
            parse_prompt("full floor.").unwrap().style,
            CaptionStyle::Regular
        );
    }

    #[test]
    fn duplicates_rejected() {
        assert_eq!(
            parse_caption("one enemy. two enemies.", CaptionStyle::Regular).unwrap_err(),
            CaptionError::DuplicateConcept(ConceptKind::Enemy)
        );
    }

    #[test]
    fn empty_caption() {
        let c = parse_caption("", CaptionStyle::Regular).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.text(), "");
    }

    #[test]
    fn shuffle_is_deterministic() {
        let single = parse_caption("one pipe.", CaptionStyle::Regular).unwrap();
        assert_eq!(shuffle_phrases(&single, 9), single);
        let absence = render(&fig_a_report(), CaptionStyle::Absence);
        assert_eq!(shuffle_phrases(&absence, 3), shuffle_phrases(&absence, 3));
        let perms: BTreeSet<String> = (0..5)
            .map(|s| shuffle_phrases(&absence, s).text())
            .collect();
        assert_eq!(perms.len(), 5);
        for s in 0..5 {
            let text = shuffle_phrases(&absence, s).text();
            assert!(parse_caption(&text, CaptionStyle::Absence)
                .unwrap()
                .semantic_eq(&absence));
        }
    }

    #[test]
    fn tokenizer_splits_periods() {
        assert_eq!(
            tokenize("full floor. a few coins."),
            vec!["full", "floor", ".", "a", "few", "coins", "."]
        );
    }

    #[test]
    fn vocabulary_sizes() {
        let regular = vocabulary(CaptionStyle::Regular);
        let absence = vocabulary(CaptionStyle::Absence);
        assert_eq!(regular.len(), 47);
        assert_eq!(absence.len(), 48);
        let reg: BTreeSet<_> = regular.iter().collect();
        let abs: BTreeSet<_> = absence.iter().collect();
        assert!(reg.is_subset(&abs));
        assert_eq!(
            abs.difference(&reg).collect::<Vec<_>>(),
            vec![&&"no".to_string()]
        );
    }

    #[test]
    fn grammar_lists_selectable_concepts() {
        let g = grammar();
        assert_eq!(
            g.concepts.iter().filter(|c| c.prompt_selectable).count(),
            16
        );
        assert_eq!(g.quantities.len(), 5);
        for entry in &g.concepts {
            for p in &entry.phrases {
                let c = parse_caption(&p.text, CaptionStyle::Regular).unwrap();
                assert_eq!(c.phrases, vec![Phrase::new(entry.concept, p.form)]);
            }
        }
    }
}
