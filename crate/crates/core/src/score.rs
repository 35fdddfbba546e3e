//! Caption adherence: how well the caption of a produced scene matches the
//! prompt it was produced from, and how stable that is under phrase order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caption::{
    parse_prompt, render, Caption, CaptionError, CaptionStyle, Phrase, PhraseForm, Quantity,
};
use crate::concepts::{detect, ConceptKind};
use crate::tiles::TileGrid;

/// Number of topics averaged over; broken structures count.
pub const TOPIC_SET_SIZE: usize = ConceptKind::ALL.len();

const QUANTITY_SPAN: f64 = (Quantity::ALL.len() - 1) as f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("phrase about {found} compared under concept {expected}")]
    ConceptMismatch {
        expected: ConceptKind,
        found: ConceptKind,
    },
    #[error(transparent)]
    Caption(#[from] CaptionError),
    #[error("all {0} permutations failed to produce a scene")]
    AllPermutationsFailed(usize),
}

fn normalize(p: Option<&Phrase>) -> Option<PhraseForm> {
    p.map(|p| p.form).filter(|&f| f != PhraseForm::Absent)
}

/// Per-concept match between a prompt phrase and a caption phrase, either of
/// which may be missing. "no X" phrases count as missing.
pub fn match_phrases(
    concept: ConceptKind,
    prompt: Option<&Phrase>,
    actual: Option<&Phrase>,
) -> Result<f64, ScoreError> {
    for p in [prompt, actual].into_iter().flatten() {
        if p.concept != concept {
            return Err(ScoreError::ConceptMismatch {
                expected: concept,
                found: p.concept,
            });
        }
    }
    Ok(match_forms(normalize(prompt), normalize(actual)))
}

fn match_forms(prompt: Option<PhraseForm>, actual: Option<PhraseForm>) -> f64 {
    if prompt == actual {
        return 1.0;
    }
    match (prompt, actual) {
        (Some(p), Some(a)) => match (p.quantity(), a.quantity()) {
            (Some(qp), Some(qa)) => {
                1.0 - (qp.ordinal() as f64 - qa.ordinal() as f64).abs() / QUANTITY_SPAN
            }
            _ => 0.1,
        },
        _ => -1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptDiff {
    pub concept: ConceptKind,
    pub prompt: Option<String>,
    pub actual: Option<String>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub per_concept: BTreeMap<ConceptKind, f64>,
    pub c_score: f64,
    pub topic_set_size: usize,
    /// Concept-by-concept view in canonical order, with the phrase text on
    /// each side (`None` when unmentioned or absent).
    pub diff: Vec<ConceptDiff>,
}

impl ScoreBreakdown {
    /// Concepts whose match is below 1, in canonical order.
    pub fn mismatches(&self) -> impl Iterator<Item = &ConceptDiff> {
        self.diff.iter().filter(|d| d.score < 1.0)
    }
}

impl fmt::Display for ScoreBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4}", self.c_score)
    }
}

/// The caption adherence score of `actual` with respect to `prompt`.
pub fn c_score(prompt: &Caption, actual: &Caption) -> ScoreBreakdown {
    let mut per_concept = BTreeMap::new();
    let mut diff = Vec::with_capacity(TOPIC_SET_SIZE);
    for concept in ConceptKind::ALL {
        let p = prompt.mentioned(concept);
        let a = actual.mentioned(concept);
        let score = match_forms(normalize(p), normalize(a));
        per_concept.insert(concept, score);
        diff.push(ConceptDiff {
            concept,
            prompt: p.map(|p| p.text(CaptionStyle::Regular)),
            actual: a.map(|a| a.text(CaptionStyle::Regular)),
            score,
        });
    }
    let c_score = per_concept.values().sum::<f64>() / TOPIC_SET_SIZE as f64;
    ScoreBreakdown {
        per_concept,
        c_score,
        topic_set_size: TOPIC_SET_SIZE,
        diff,
    }
}

/// Parses both texts as prompts (regular or absence phrases) and scores.
pub fn c_score_text(prompt: &str, actual: &str) -> Result<ScoreBreakdown, ScoreError> {
    Ok(c_score(&parse_prompt(prompt)?, &parse_prompt(actual)?))
}

/// Regular caption of a scene as seen by the detector.
pub fn caption_scene(scene: &TileGrid) -> Option<Caption> {
    detect(scene)
        .ok()
        .map(|report| render(&report, CaptionStyle::Regular))
}

/// Produces one scene for a prompt.
pub trait SceneSource {
    type Error: fmt::Display;

    fn scene_for(&mut self, prompt: &Caption, seed: u64) -> Result<TileGrid, Self::Error>;
}

impl<F, E> SceneSource for F
where
    F: FnMut(&Caption, u64) -> Result<TileGrid, E>,
    E: fmt::Display,
{
    type Error = E;

    fn scene_for(&mut self, prompt: &Caption, seed: u64) -> Result<TileGrid, E> {
        self(prompt, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationScore {
    pub prompt: String,
    /// `None` when the source failed for this ordering.
    pub c_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToleranceReport {
    pub tolerance: f64,
    pub permutations: Vec<PermutationScore>,
    pub failures: usize,
}

fn factorial_at_most(n: usize, cap: usize) -> usize {
    let mut acc: usize = 1;
    for k in 2..=n {
        acc = acc.saturating_mul(k);
        if acc > cap {
            return acc;
        }
    }
    acc
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Up to `max_perms` distinct phrase orderings of `prompt`. The original
/// order is always first. Deterministic per seed.
pub fn sample_permutations(prompt: &Caption, max_perms: usize, seed: u64) -> Vec<Caption> {
    let n = prompt.len();
    let max_perms = max_perms.max(1);
    let orders: Vec<Vec<usize>> = if factorial_at_most(n, max_perms) <= max_perms {
        all_permutations(n)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let identity: Vec<usize> = (0..n).collect();
        let mut seen = BTreeSet::from([identity.clone()]);
        let mut orders = vec![identity.clone()];
        // n! > max_perms here, so enough distinct orders exist
        while orders.len() < max_perms {
            let mut order = identity.clone();
            order.shuffle(&mut rng);
            if seen.insert(order.clone()) {
                orders.push(order);
            }
        }
        orders
    };
    orders
        .into_iter()
        .map(|order| Caption {
            style: prompt.style,
            phrases: order.into_iter().map(|i| prompt.phrases[i]).collect(),
        })
        .collect()
}

/// Mean c-score over distinct phrase orderings of `prompt`, each fed to
/// `source` with the same `seed`. Failed orderings are skipped and counted.
pub fn tolerance<S: SceneSource>(
    prompt: &Caption,
    source: &mut S,
    max_perms: usize,
    seed: u64,
) -> Result<ToleranceReport, ScoreError> {
    let perms = sample_permutations(prompt, max_perms, seed);
    let mut permutations = Vec::with_capacity(perms.len());
    let mut total = 0.0;
    let mut ok = 0usize;
    for perm in &perms {
        let score = match source.scene_for(perm, seed) {
            Ok(scene) => match caption_scene(&scene) {
                Some(actual) => Some(c_score(perm, &actual).c_score),
                None => {
                    log::warn!("scene for {:?} has an invalid height", perm.text());
                    None
                }
            },
            Err(e) => {
                log::warn!("scene source failed for {:?}: {e}", perm.text());
                None
            }
        };
        if let Some(s) = score {
            total += s;
            ok += 1;
        }
        permutations.push(PermutationScore {
            prompt: perm.text(),
            c_score: score,
        });
    }
    if ok == 0 {
        return Err(ScoreError::AllPermutationsFailed(perms.len()));
    }
    Ok(ToleranceReport {
        tolerance: total / ok as f64,
        failures: perms.len() - ok,
        permutations,
    })
}
