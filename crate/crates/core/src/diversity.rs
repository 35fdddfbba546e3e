//! Set-level statistics over scenes: tile edit distance, average minimum
//! edit distance within a set and against real data, and integrity rates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::concepts::{detect, ConceptKind, DetectError};
use crate::tiles::TileGrid;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiversityError {
    #[error("scene dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("need at least {needed} scenes, have {have}")]
    TooFewScenes { needed: usize, have: usize },
    #[error("cannot take {n} scenes from a set of {len}")]
    NTooLarge { n: usize, len: usize },
    #[error(transparent)]
    Detect(#[from] DetectError),
}

/// A labelled collection of same-sized scenes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneSet {
    pub label: String,
    scenes: Vec<TileGrid>,
}

impl SceneSet {
    pub fn new(label: impl Into<String>, scenes: Vec<TileGrid>) -> Result<Self, DiversityError> {
        let Some(first) = scenes.first() else {
            return Err(DiversityError::TooFewScenes { needed: 1, have: 0 });
        };
        let dims = (first.height(), first.width());
        if let Some(bad) = scenes.iter().find(|s| (s.height(), s.width()) != dims) {
            return Err(DiversityError::DimensionMismatch(
                dims,
                (bad.height(), bad.width()),
            ));
        }
        Ok(SceneSet {
            label: label.into(),
            scenes,
        })
    }

    pub fn scenes(&self) -> &[TileGrid] {
        &self.scenes
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.scenes[0].height(), self.scenes[0].width())
    }

    pub fn into_scenes(self) -> Vec<TileGrid> {
        self.scenes
    }
}

/// Number of cells whose tiles differ.
pub fn edit_distance(a: &TileGrid, b: &TileGrid) -> Result<usize, DiversityError> {
    let (da, db) = ((a.height(), a.width()), (b.height(), b.width()));
    if da != db {
        return Err(DiversityError::DimensionMismatch(da, db));
    }
    Ok(hamming(a, b))
}

fn hamming(a: &TileGrid, b: &TileGrid) -> usize {
    a.cells()
        .iter()
        .zip(b.cells())
        .filter(|(x, y)| x != y)
        .count()
}

fn nearest(scene: &TileGrid, others: &[TileGrid], skip: Option<usize>) -> usize {
    let mut best = usize::MAX;
    for (j, other) in others.iter().enumerate() {
        if Some(j) == skip {
            continue;
        }
        best = best.min(hamming(scene, other));
        if best == 0 {
            break;
        }
    }
    best
}

/// Mean over members of the distance to the nearest other member.
pub fn amed_self(set: &SceneSet) -> Result<f64, DiversityError> {
    if set.len() < 2 {
        return Err(DiversityError::TooFewScenes {
            needed: 2,
            have: set.len(),
        });
    }
    let scenes = set.scenes();
    let total: usize = (0..scenes.len())
        .into_par_iter()
        .map(|i| nearest(&scenes[i], scenes, Some(i)))
        .sum();
    Ok(total as f64 / scenes.len() as f64)
}

/// Mean over members of `set` of the distance to the nearest scene in `real`.
pub fn amed_real(set: &SceneSet, real: &SceneSet) -> Result<f64, DiversityError> {
    if set.dims() != real.dims() {
        return Err(DiversityError::DimensionMismatch(set.dims(), real.dims()));
    }
    let total: usize = set
        .scenes()
        .par_iter()
        .map(|s| nearest(s, real.scenes(), None))
        .sum();
    Ok(total as f64 / set.len() as f64)
}

/// Percentages of scenes containing broken or any pipes and cannons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrityRates {
    pub broken_pipe_pct: f64,
    pub any_pipe_pct: f64,
    pub broken_cannon_pct: f64,
    pub any_cannon_pct: f64,
}

pub fn integrity_rates(set: &SceneSet) -> Result<IntegrityRates, DiversityError> {
    let flags = set
        .scenes()
        .par_iter()
        .map(|s| {
            let r = detect(s)?;
            let broken_pipe = r.has(ConceptKind::BrokenPipe);
            let any_pipe =
                broken_pipe || r.has(ConceptKind::Pipe) || r.has(ConceptKind::UpsideDownPipe);
            let broken_cannon = r.has(ConceptKind::BrokenCannon);
            let any_cannon = broken_cannon || r.has(ConceptKind::Cannon);
            Ok([broken_pipe, any_pipe, broken_cannon, any_cannon])
        })
        .collect::<Result<Vec<_>, DetectError>>()?;
    let pct = |k: usize| 100.0 * flags.iter().filter(|f| f[k]).count() as f64 / flags.len() as f64;
    Ok(IntegrityRates {
        broken_pipe_pct: pct(0),
        any_pipe_pct: pct(1),
        broken_cannon_pct: pct(2),
        any_cannon_pct: pct(3),
    })
}

/// `n` scenes at evenly spaced indices `i * len / n`.
pub fn sample_evenly(set: &SceneSet, n: usize) -> Result<SceneSet, DiversityError> {
    check_n(set, n)?;
    let len = set.len();
    let scenes = (0..n).map(|i| set.scenes[i * len / n].clone()).collect();
    Ok(SceneSet {
        label: format!("{}_even{n}", set.label),
        scenes,
    })
}

/// `n` distinct scenes chosen uniformly, kept in their original order.
pub fn sample_random(set: &SceneSet, n: usize, seed: u64) -> Result<SceneSet, DiversityError> {
    check_n(set, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, set.len(), n).into_vec();
    idx.sort_unstable();
    Ok(SceneSet {
        label: format!("{}_rand{n}", set.label),
        scenes: idx.into_iter().map(|i| set.scenes[i].clone()).collect(),
    })
}

fn check_n(set: &SceneSet, n: usize) -> Result<(), DiversityError> {
    if n == 0 {
        return Err(DiversityError::TooFewScenes { needed: 1, have: 0 });
    }
    if n > set.len() {
        return Err(DiversityError::NTooLarge { n, len: set.len() });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub n: usize,
    pub amed_self: Option<f64>,
    pub amed_real: Option<f64>,
    pub integrity: IntegrityRates,
}

/// All metrics for one set. `amed_self` is omitted for singleton sets and
/// `amed_real` when no reference set is given.
pub fn metrics_report(
    set: &SceneSet,
    real: Option<&SceneSet>,
) -> Result<MetricsReport, DiversityError> {
    Ok(MetricsReport {
        label: set.label.clone(),
        n: set.len(),
        amed_self: if set.len() >= 2 {
            Some(amed_self(set)?)
        } else {
            None
        },
        amed_real: real.map(|r| amed_real(set, r)).transpose()?,
        integrity: integrity_rates(set)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiles::TileKind;

    fn flat() -> TileGrid {
        let mut g = TileGrid::new(16, 16);
        for c in 0..16 {
            g.set(15, c, TileKind::Ground);
        }
        g
    }

    fn mutate(g: &TileGrid, n: usize) -> TileGrid {
        mutate_from(g, 0, n)
    }

    fn mutate_from(g: &TileGrid, start: usize, n: usize) -> TileGrid {
        let mut m = g.clone();
        for k in start..start + n {
            let (r, c) = (k / 16, k % 16);
            let t = if m.get(r, c) == TileKind::Coin {
                TileKind::Enemy
            } else {
                TileKind::Coin
            };
            m.set(r, c, t);
        }
        m
    }

    fn set(scenes: Vec<TileGrid>) -> SceneSet {
        SceneSet::new("t", scenes).unwrap()
    }

    #[test]
    fn distance_examples() {
        let g = flat();
        assert_eq!(edit_distance(&g, &g).unwrap(), 0);
        assert_eq!(edit_distance(&g, &mutate(&g, 5)).unwrap(), 5);
        let sky = TileGrid::new(16, 16);
        let ground = TileGrid::filled(16, 16, TileKind::Ground);
        assert_eq!(edit_distance(&sky, &ground).unwrap(), 256);
        assert!(matches!(
            edit_distance(&sky, &TileGrid::new(16, 17)),
            Err(DiversityError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn amed_self_examples() {
        let g = flat();
        assert_eq!(amed_self(&set(vec![g.clone(), g.clone()])).unwrap(), 0.0);
        let far = mutate_from(&g, 5, 200);
        assert_eq!(edit_distance(&mutate(&g, 5), &far).unwrap(), 205);
        let s = set(vec![g.clone(), mutate(&g, 5), far]);
        assert_eq!(amed_self(&s).unwrap(), (5.0 + 5.0 + 200.0) / 3.0);
        assert!(matches!(
            amed_self(&set(vec![g])),
            Err(DiversityError::TooFewScenes { .. })
        ));
    }

    #[test]
    fn amed_real_examples() {
        let g = flat();
        let real = set(vec![g.clone(), mutate(&g, 30)]);
        assert_eq!(amed_real(&set(vec![g.clone()]), &real).unwrap(), 0.0);
        assert_eq!(amed_real(&set(vec![mutate(&g, 7)]), &real).unwrap(), 7.0);
        assert_eq!(
            amed_real(&sample_evenly(&real, 1).unwrap(), &real).unwrap(),
            0.0
        );
    }

    #[test]
    fn integrity_examples() {
        let mut lone = TileGrid::new(16, 16);
        lone.set(5, 5, TileKind::PipeTopLeft);
        let r = integrity_rates(&set(vec![lone.clone()])).unwrap();
        assert_eq!(r.broken_pipe_pct, 100.0);
        assert_eq!(r.any_pipe_pct, 100.0);
        assert_eq!(r.broken_cannon_pct, 0.0);
        let mut scenes = vec![flat(); 95];
        scenes.extend(std::iter::repeat_n(lone, 5));
        let r = integrity_rates(&set(scenes)).unwrap();
        assert_eq!(r.broken_pipe_pct, 5.0);
    }

    #[test]
    fn sampling() {
        let g = flat();
        let scenes: Vec<_> = (0..10).map(|k| mutate(&g, k)).collect();
        let s = set(scenes.clone());
        assert_eq!(sample_evenly(&s, 10).unwrap().scenes(), s.scenes());
        assert_eq!(sample_evenly(&s, 1).unwrap().scenes(), &scenes[..1]);
        let picked = sample_evenly(&s, 4).unwrap();
        assert_eq!(
            picked.scenes(),
            &[
                scenes[0].clone(),
                scenes[2].clone(),
                scenes[5].clone(),
                scenes[7].clone()
            ]
        );
        assert!(matches!(
            sample_evenly(&s, 11),
            Err(DiversityError::NTooLarge { .. })
        ));
        let r = sample_random(&s, 3, 4).unwrap();
        assert_eq!(r, sample_random(&s, 3, 4).unwrap());
        assert_eq!(r.len(), 3);
    }

    #[test]
    fn duplicate_never_raises_amed_self() {
        let g = flat();
        let s = set(vec![g.clone(), mutate(&g, 9), mutate(&g, 40)]);
        let before = amed_self(&s).unwrap();
        for i in 0..3 {
            let mut scenes = s.scenes().to_vec();
            scenes.push(s.scenes()[i].clone());
            assert!(amed_self(&set(scenes)).unwrap() <= before);
        }
    }

    #[test]
    fn mixed_sizes_rejected() {
        assert!(SceneSet::new("x", vec![TileGrid::new(16, 16), TileGrid::new(16, 32)]).is_err());
        assert!(SceneSet::new("x", vec![]).is_err());
    }
}
