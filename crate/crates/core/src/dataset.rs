//! Corpus ingestion, captioned scene records, splits and statistics.
//!
//! Records are stored one JSON object per line. Phrase-order augmentation
//! happens at read time through [`augmented_caption`], so the files on disk
//! stay canonical.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caption::{
    parse_caption, phrase_space, render, shuffle_phrases, tokenize, Caption, CaptionError,
    CaptionStyle, Phrase, PhraseForm, MASK_TOKEN, PAD_TOKEN,
};
use crate::concepts::{detect, ConceptKind};
use crate::solve::{solve, MoveModel};
use crate::tiles::{parse_level, TileError, TileGrid, SCENE_HEIGHT, SCENE_WIDTH};

pub const CORPUS_ENV: &str = "LEVEL_FORGE_CORPUS";
/// Standard split sizes for the full 7,687-scene corpus.
pub const STANDARD_SPLIT_SIZES: (usize, usize, usize) = (6918, 384, 385);
const COVERAGE_ATTEMPTS: u64 = 200;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no level files found in {0}")]
    EmptyCorpus(PathBuf),
    #[error("{path}: {source}")]
    Level { path: PathBuf, source: TileError },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("no split covers every required concept; missing somewhere: {}", names(.0))]
    CoverageUnsatisfiable(Vec<ConceptKind>),
    #[error("split sizes {requested:?} do not add up to {available} records")]
    BadSizes {
        requested: (usize, usize, usize),
        available: usize,
    },
    #[error("split fractions must be non-negative and sum to 1, got {0:?}")]
    BadFractions((f64, f64, f64)),
}

fn names(kinds: &[ConceptKind]) -> String {
    kinds
        .iter()
        .map(|k| k.name())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SceneSource {
    pub level: String,
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub scene: TileGrid,
    pub regular: String,
    pub absence: String,
    pub negative: String,
    pub source: SceneSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solvable: Option<bool>,
}

impl DatasetRecord {
    /// Captions a scene in all three styles.
    pub fn from_scene(scene: TileGrid, source: SceneSource) -> Result<Self, TileError> {
        let report = detect(&scene).map_err(|_| TileError::BadHeight {
            expected: SCENE_HEIGHT,
            got: scene.height(),
        })?;
        Ok(DatasetRecord {
            regular: render(&report, CaptionStyle::Regular).text(),
            absence: render(&report, CaptionStyle::Absence).text(),
            negative: render(&report, CaptionStyle::Negative).text(),
            scene,
            source,
            solvable: None,
        })
    }

    pub fn caption(&self, style: CaptionStyle) -> &str {
        match style {
            CaptionStyle::Regular => &self.regular,
            CaptionStyle::Absence => &self.absence,
            CaptionStyle::Negative => &self.negative,
        }
    }

    /// Parsed regular caption.
    pub fn parsed(&self) -> Result<Caption, CaptionError> {
        parse_caption(&self.regular, CaptionStyle::Regular)
    }

    /// Concepts mentioned in the regular caption.
    pub fn concepts(&self) -> BTreeSet<ConceptKind> {
        self.parsed()
            .map(|c| c.phrases.iter().map(|p| p.concept).collect())
            .unwrap_or_default()
    }

    /// Checks that every stored caption is what the captioner derives from
    /// the scene (phrase order ignored). Returns the first mismatch.
    pub fn verify(&self) -> Result<(), String> {
        if self.scene.height() != SCENE_HEIGHT {
            return Err(format!(
                "scene has {} rows, expected {SCENE_HEIGHT}",
                self.scene.height()
            ));
        }
        let fresh = DatasetRecord::from_scene(self.scene.clone(), self.source.clone())
            .map_err(|e| e.to_string())?;
        for style in CaptionStyle::ALL {
            let stored = parse_caption(self.caption(style), style)
                .map_err(|e| format!("{style} caption: {e}"))?;
            let derived =
                parse_caption(fresh.caption(style), style).expect("rendered captions parse");
            if !stored.semantic_eq(&derived) {
                return Err(format!(
                    "{style} caption {:?} does not match scene ({:?})",
                    self.caption(style),
                    fresh.caption(style)
                ));
            }
        }
        Ok(())
    }
}

/// Caption for one training example: `style` caption with phrases shuffled
/// by a seed derived from `epoch_seed` and the record's source.
pub fn augmented_caption(record: &DatasetRecord, style: CaptionStyle, epoch_seed: u64) -> Caption {
    let caption = parse_caption(record.caption(style), style).expect("verified records parse");
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in record
        .source
        .level
        .bytes()
        .chain(record.source.window.to_le_bytes())
    {
        h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
    }
    shuffle_phrases(&caption, h ^ epoch_seed)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BuildOptions {
    /// Precompute solvability under this move model.
    pub solvability: Option<MoveModel>,
}

fn level_files(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let io = |source| DatasetError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Reads every level file in `dir`, pads each to scene height, slides a
/// 16-wide window over it and captions each window. Output is ordered by
/// (level name, window index).
pub fn build_dataset(
    dir: &Path,
    options: BuildOptions,
) -> Result<Vec<DatasetRecord>, DatasetError> {
    let files = level_files(dir)?;
    if files.is_empty() {
        return Err(DatasetError::EmptyCorpus(dir.to_path_buf()));
    }
    let per_level: Vec<Vec<DatasetRecord>> = files
        .par_iter()
        .map(|path| {
            let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
                path: path.clone(),
                source,
            })?;
            let name = path
                .file_stem()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string();
            let with_path = |source| DatasetError::Level {
                path: path.clone(),
                source,
            };
            let level = parse_level(&name, &text).map_err(with_path)?;
            let windows = level
                .pad_to_height(SCENE_HEIGHT)
                .and_then(|g| g.slide_windows(SCENE_WIDTH))
                .map_err(with_path)?;
            windows
                .into_iter()
                .enumerate()
                .map(|(window, scene)| {
                    let mut record = DatasetRecord::from_scene(
                        scene,
                        SceneSource {
                            level: name.clone(),
                            window,
                        },
                    )
                    .map_err(with_path)?;
                    if let Some(model) = options.solvability {
                        record.solvable = Some(solve(&record.scene, &model).beatable);
                    }
                    Ok(record)
                })
                .collect()
        })
        .collect::<Result<_, DatasetError>>()?;
    let mut records: Vec<DatasetRecord> = per_level.into_iter().flatten().collect();
    records.sort_by(|a, b| a.source.cmp(&b.source));
    log::info!(
        "built {} records from {} levels",
        records.len(),
        files.len()
    );
    Ok(records)
}

pub fn save_jsonl(path: &Path, records: &[DatasetRecord]) -> Result<(), DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(fs::File::create(path).map_err(io)?);
    for record in records {
        serde_json::to_writer(&mut out, record).expect("records serialize");
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Parses one JSONL line and verifies its captions against its scene.
pub fn decode_record(line: &str) -> Result<DatasetRecord, String> {
    let record: DatasetRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    record.verify()?;
    Ok(record)
}

/// Loads and verifies a JSONL dataset. Blank lines are skipped.
pub fn load_jsonl(path: &Path) -> Result<Vec<DatasetRecord>, DatasetError> {
    let io = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::open(path).map_err(io)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let record = decode_record(&line).map_err(|message| DatasetError::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        })?;
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub fractions: (f64, f64, f64),
    pub seed: u64,
    pub coverage_required: BTreeSet<ConceptKind>,
    /// Exact (train, val, test) sizes instead of fraction allocation.
    pub sizes: Option<(usize, usize, usize)>,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            fractions: (0.90, 0.05, 0.05),
            seed: 0,
            coverage_required: ConceptKind::TRAINING.into_iter().collect(),
            sizes: None,
        }
    }
}

impl SplitSpec {
    /// Sizes for `n` records: fixed sizes if given, else floor of each
    /// fraction for validation and test with the remainder going to train.
    pub fn sizes_for(&self, n: usize) -> Result<(usize, usize, usize), DatasetError> {
        if let Some(sizes) = self.sizes {
            if sizes.0 + sizes.1 + sizes.2 != n {
                return Err(DatasetError::BadSizes {
                    requested: sizes,
                    available: n,
                });
            }
            return Ok(sizes);
        }
        let (a, b, c) = self.fractions;
        if a < 0.0 || b < 0.0 || c < 0.0 || (a + b + c - 1.0).abs() > 1e-9 {
            return Err(DatasetError::BadFractions(self.fractions));
        }
        let val = (n as f64 * b).floor() as usize;
        let test = (n as f64 * c).floor() as usize;
        Ok((n - val - test, val, test))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<DatasetRecord>,
    pub val: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
}

/// Shuffles and partitions records so that every split shows every required
/// concept, reshuffling with derived seeds up to a fixed number of times.
pub fn split(records: &[DatasetRecord], spec: &SplitSpec) -> Result<Split, DatasetError> {
    let (n_train, n_val, _) = spec.sizes_for(records.len())?;
    let concepts: Vec<BTreeSet<ConceptKind>> =
        records.par_iter().map(DatasetRecord::concepts).collect();
    let (n_test, total) = (records.len() - n_train - n_val, records.len());
    // a concept seen in fewer scenes than there are splits can never be covered
    let split_count = [n_train, n_val, n_test].iter().filter(|&&s| s > 0).count();
    let scarce: Vec<ConceptKind> = spec
        .coverage_required
        .iter()
        .copied()
        .filter(|k| {
            let seen = concepts.iter().filter(|c| c.contains(k)).count();
            seen < 3 || split_count < 3
        })
        .collect();
    if !scarce.is_empty() {
        return Err(DatasetError::CoverageUnsatisfiable(scarce));
    }

    let mut missing_last = Vec::new();
    for attempt in 0..COVERAGE_ATTEMPTS {
        let mut order: Vec<usize> = (0..total).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(
            spec.seed.wrapping_add(attempt),
        ));
        let parts = [
            &order[..n_train],
            &order[n_train..n_train + n_val],
            &order[n_train + n_val..],
        ];
        let mut missing = BTreeSet::new();
        for part in parts {
            let seen: BTreeSet<ConceptKind> = part
                .iter()
                .flat_map(|&i| concepts[i].iter().copied())
                .collect();
            missing.extend(spec.coverage_required.difference(&seen).copied());
        }
        if missing.is_empty() {
            let take = |idx: &[usize]| {
                let mut v: Vec<DatasetRecord> = idx.iter().map(|&i| records[i].clone()).collect();
                v.sort_by(|a, b| a.source.cmp(&b.source));
                v
            };
            if attempt > 0 {
                log::info!("split covered all concepts after {} reshuffles", attempt);
            }
            return Ok(Split {
                train: take(parts[0]),
                val: take(parts[1]),
                test: take(parts[2]),
            });
        }
        missing_last = missing.into_iter().collect();
    }
    Err(DatasetError::CoverageUnsatisfiable(missing_last))
}

/// Samples `n` regular-style prompts that differ (ignoring phrase order)
/// from every caption in `corpus` and from each other. Each concept is
/// included with its corpus frequency (one half without a corpus); its
/// phrase is drawn uniformly from the concept's phrase space.
pub fn make_random_prompts(n: usize, seed: u64, corpus: &[DatasetRecord]) -> Vec<Caption> {
    let known: HashSet<Vec<Phrase>> = corpus
        .iter()
        .filter_map(|r| r.parsed().ok())
        .map(|c| c.canonical().phrases)
        .collect();
    let mut freq: BTreeMap<ConceptKind, f64> =
        ConceptKind::TRAINING.iter().map(|&k| (k, 0.5)).collect();
    if !corpus.is_empty() {
        let stats = corpus_stats(corpus);
        for (k, f) in freq.iter_mut() {
            *f = stats.concept_scenes.get(k).copied().unwrap_or(0) as f64 / corpus.len() as f64;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut seen = HashSet::new();
    let budget = n.saturating_mul(1000).max(1000);
    for _ in 0..budget {
        if out.len() == n {
            break;
        }
        let mut phrases = Vec::new();
        for (&kind, &p) in &freq {
            if rng.random_bool(p.clamp(0.0, 1.0)) {
                let space = phrase_space(kind);
                let form: PhraseForm = space[rng.random_range(0..space.len())];
                phrases.push(Phrase::new(kind, form));
            }
        }
        if phrases.is_empty() {
            continue;
        }
        let caption = Caption::new(CaptionStyle::Regular, phrases).expect("one phrase per concept");
        let key = caption.canonical().phrases;
        if known.contains(&key) || !seen.insert(key) {
            continue;
        }
        out.push(caption);
    }
    if out.len() < n {
        log::warn!(
            "only {} novel prompts found after {budget} draws (asked for {n})",
            out.len()
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub scenes: usize,
    /// Scenes whose caption mentions each concept.
    pub concept_scenes: BTreeMap<ConceptKind, usize>,
    /// Detected instances of each countable concept, summed over scenes.
    pub concept_instances: BTreeMap<ConceptKind, u64>,
    /// Observed caption vocabulary sizes, including [PAD] and [MASK].
    pub vocab_regular: usize,
    pub vocab_absence: usize,
    pub solvable: Option<usize>,
    pub distinct_captions: usize,
}

pub fn corpus_stats(records: &[DatasetRecord]) -> CorpusStats {
    let per: Vec<(BTreeSet<ConceptKind>, BTreeMap<ConceptKind, u32>)> = records
        .par_iter()
        .map(|r| {
            let counts = detect(&r.scene).map(|rep| rep.counts).unwrap_or_default();
            (r.concepts(), counts)
        })
        .collect();
    let mut concept_scenes: BTreeMap<ConceptKind, usize> =
        ConceptKind::ALL.iter().map(|&k| (k, 0)).collect();
    let mut concept_instances: BTreeMap<ConceptKind, u64> = BTreeMap::new();
    for (mentioned, counts) in &per {
        for k in mentioned {
            *concept_scenes.entry(*k).or_default() += 1;
        }
        for (k, n) in counts {
            *concept_instances.entry(*k).or_default() += *n as u64;
        }
    }
    let vocab = |style: CaptionStyle| {
        let mut words: BTreeSet<String> = records
            .iter()
            .flat_map(|r| tokenize(r.caption(style)))
            .collect();
        words.insert(PAD_TOKEN.into());
        words.insert(MASK_TOKEN.into());
        words.len()
    };
    let solvable = if records.iter().all(|r| r.solvable.is_some()) && !records.is_empty() {
        Some(records.iter().filter(|r| r.solvable == Some(true)).count())
    } else {
        None
    };
    let distinct: HashSet<Vec<Phrase>> = records
        .iter()
        .filter_map(|r| r.parsed().ok())
        .map(|c| c.canonical().phrases)
        .collect();
    CorpusStats {
        scenes: records.len(),
        concept_scenes,
        concept_instances,
        vocab_regular: vocab(CaptionStyle::Regular),
        vocab_absence: vocab(CaptionStyle::Absence),
        solvable,
        distinct_captions: distinct.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::caption::parse_prompt;

    fn write_level(dir: &Path, name: &str, rows: &[&str]) {
        fs::write(dir.join(name), rows.join("\n") + "\n").unwrap();
    }

    fn flat(width: usize) -> Vec<String> {
        let mut rows = vec!["-".repeat(width); 12];
        rows.push(format!("{}E{}", "-".repeat(3), "-".repeat(width - 4)));
        rows.push("X".repeat(width));
        rows
    }

    #[test]
    fn single_level_single_record() {
        let dir = tempfile::tempdir().unwrap();
        let rows = flat(16);
        write_level(
            dir.path(),
            "1-1.txt",
            &rows.iter().map(String::as_str).collect::<Vec<_>>(),
        );
        let records = build_dataset(dir.path(), BuildOptions::default()).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(
            r.source,
            SceneSource {
                level: "1-1".into(),
                window: 0
            }
        );
        assert_eq!(r.regular, "full floor. one enemy.");
        assert!(r.absence.starts_with("full floor. no ceiling."));
        assert_eq!(r.scene.row_string(0), "-".repeat(16));
        r.verify().unwrap();
    }

    #[test]
    fn windows_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let b = flat(18);
        let a = flat(16);
        write_level(
            dir.path(),
            "b.txt",
            &b.iter().map(String::as_str).collect::<Vec<_>>(),
        );
        write_level(
            dir.path(),
            "a.txt",
            &a.iter().map(String::as_str).collect::<Vec<_>>(),
        );
        fs::write(dir.path().join(".hidden"), "junk").unwrap();
        let records = build_dataset(
            dir.path(),
            BuildOptions {
                solvability: Some(MoveModel::default()),
            },
        )
        .unwrap();
        let sources: Vec<(String, usize)> = records
            .iter()
            .map(|r| (r.source.level.clone(), r.source.window))
            .collect();
        assert_eq!(
            sources,
            [
                ("a".into(), 0),
                ("b".into(), 0),
                ("b".into(), 1),
                ("b".into(), 2)
            ]
        );
        assert!(records.iter().all(|r| r.solvable == Some(true)));
    }

    #[test]
    fn empty_and_bad_corpus() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            build_dataset(dir.path(), BuildOptions::default()),
            Err(DatasetError::EmptyCorpus(_))
        ));
        write_level(dir.path(), "bad.txt", &["XZ", "XX"]);
        let err = build_dataset(dir.path(), BuildOptions::default()).unwrap_err();
        assert!(err.to_string().contains("bad.txt"), "{err}");
    }

    #[test]
    fn jsonl_round_trip_and_tamper_check() {
        let dir = tempfile::tempdir().unwrap();
        let rows = flat(20);
        write_level(
            dir.path(),
            "w.txt",
            &rows.iter().map(String::as_str).collect::<Vec<_>>(),
        );
        let records = build_dataset(dir.path(), BuildOptions::default()).unwrap();
        let out = dir.path().join("data.jsonl");
        save_jsonl(&out, &records).unwrap();
        assert_eq!(load_jsonl(&out).unwrap(), records);

        let text = fs::read_to_string(&out)
            .unwrap()
            .replacen("one enemy", "two enemies", 1);
        fs::write(&out, text).unwrap();
        match load_jsonl(&out).unwrap_err() {
            DatasetError::Record { line, message, .. } => {
                assert_eq!(line, 1);
                assert!(message.contains("does not match"), "{message}");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn stored_phrase_order_is_free() {
        let scene = TileGrid::parse(&flat(16).join("\n")).unwrap();
        let mut pad = vec!["-".repeat(16); 2];
        pad.extend(scene.rows());
        let mut r = DatasetRecord::from_scene(
            TileGrid::from_rows(&pad).unwrap(),
            SceneSource {
                level: "x".into(),
                window: 0,
            },
        )
        .unwrap();
        r.regular = "one enemy. full floor.".into();
        r.verify().unwrap();
    }

    fn synthetic(n: usize) -> Vec<DatasetRecord> {
        (0..n)
            .map(|i| DatasetRecord {
                scene: TileGrid::new(16, 16),
                regular: String::new(),
                absence: String::new(),
                negative: String::new(),
                source: SceneSource {
                    level: "s".into(),
                    window: i,
                },
                solvable: None,
            })
            .collect()
    }

    #[test]
    fn split_sizes() {
        let spec = SplitSpec {
            coverage_required: BTreeSet::new(),
            ..SplitSpec::default()
        };
        let s = split(&synthetic(20), &spec).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (18, 1, 1));
        assert_eq!(spec.sizes_for(7687).unwrap(), (6919, 384, 384));
        let standard = SplitSpec {
            sizes: Some(STANDARD_SPLIT_SIZES),
            ..spec.clone()
        };
        assert_eq!(standard.sizes_for(7687).unwrap(), (6918, 384, 385));
        assert!(matches!(
            standard.sizes_for(100),
            Err(DatasetError::BadSizes { .. })
        ));

        // disjoint, exhaustive, deterministic
        let again = split(&synthetic(20), &spec).unwrap();
        assert_eq!(s, again);
        let mut all: Vec<usize> = s
            .train
            .iter()
            .chain(&s.val)
            .chain(&s.test)
            .map(|r| r.source.window)
            .collect();
        all.sort();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn coverage() {
        let mut records = synthetic(60);
        for (i, r) in records.iter_mut().enumerate() {
            r.regular = if i % 2 == 0 {
                "full floor. one pipe.".into()
            } else {
                "full floor.".into()
            };
        }
        let spec = SplitSpec {
            fractions: (0.8, 0.1, 0.1),
            coverage_required: [ConceptKind::Floor, ConceptKind::Pipe]
                .into_iter()
                .collect(),
            ..SplitSpec::default()
        };
        let s = split(&records, &spec).unwrap();
        for part in [&s.train, &s.val, &s.test] {
            assert!(part.iter().any(|r| r.regular.contains("pipe")));
        }
        let with_cannon = SplitSpec {
            coverage_required: [ConceptKind::Cannon].into_iter().collect(),
            ..spec
        };
        match split(&records, &with_cannon).unwrap_err() {
            DatasetError::CoverageUnsatisfiable(missing) => {
                assert_eq!(missing, vec![ConceptKind::Cannon])
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn random_prompts_are_novel_and_stable() {
        let mut corpus = synthetic(3);
        corpus[0].regular = "full floor.".into();
        corpus[1].regular = "full floor. one enemy.".into();
        // without a corpus every concept is drawn with probability one half
        let open = make_random_prompts(100, 9, &[]);
        assert_eq!(open.len(), 100);
        assert_eq!(open, make_random_prompts(100, 9, &[]));
        assert_eq!(
            make_random_prompts(1, 3, &corpus),
            make_random_prompts(1, 3, &corpus)
        );
        let distinct: HashSet<String> = open.iter().map(|p| p.canonical().text()).collect();
        assert_eq!(distinct.len(), 100);
        for p in &open {
            let text = p.text();
            assert_eq!(parse_prompt(&text).unwrap().text(), text);
        }

        // corpus frequencies steer inclusion: only floor and enemies occur,
        // leaving 12 * 6 - 1 (empty) - 2 (known) novel captions
        let tight = make_random_prompts(100, 9, &corpus);
        assert_eq!(tight.len(), 69);
        for p in &tight {
            assert!(p
                .phrases
                .iter()
                .all(|ph| matches!(ph.concept, ConceptKind::Floor | ConceptKind::Enemy)));
            assert!(
                !["full floor.", "full floor. one enemy."].contains(&p.canonical().text().as_str())
            );
        }
    }

    #[test]
    fn stats_cross_check() {
        let dir = tempfile::tempdir().unwrap();
        let rows = flat(24);
        write_level(
            dir.path(),
            "w.txt",
            &rows.iter().map(String::as_str).collect::<Vec<_>>(),
        );
        let records = build_dataset(dir.path(), BuildOptions::default()).unwrap();
        let stats = corpus_stats(&records);
        assert_eq!(stats.scenes, 9);
        assert_eq!(stats.concept_scenes[&ConceptKind::Floor], 9);
        assert_eq!(stats.concept_scenes[&ConceptKind::Enemy], 4);
        let detected: u64 = records
            .iter()
            .map(|r| detect(&r.scene).unwrap().count(ConceptKind::Enemy) as u64)
            .sum();
        assert_eq!(stats.concept_instances[&ConceptKind::Enemy], detected);
        assert_eq!(stats.solvable, None);
        assert_eq!(stats.distinct_captions, 2);
        // "full floor. one enemy." plus [PAD] and [MASK]
        assert_eq!(stats.vocab_regular, 7);
    }
}
