//! Loading scenes and scene sets from the paths users pass on the command line.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use level_forge::dataset::{build_dataset, load_jsonl, BuildOptions, DatasetRecord, CORPUS_ENV};
use level_forge::tiles::{parse_level, TileGrid, SCENE_HEIGHT, SCENE_WIDTH};

/// Reads one scene: a JSON array of row strings (`.json`) or an ASCII level.
/// Levels shorter than a scene are padded at the top.
pub fn read_scene(path: &Path) -> Result<TileGrid> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let grid = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str::<TileGrid>(&text)
            .with_context(|| format!("parsing {}", path.display()))?
    } else {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scene");
        parse_level(name, &text)
            .with_context(|| format!("parsing {}", path.display()))?
            .to_grid()
    };
    if grid.height() > SCENE_HEIGHT {
        bail!(
            "{}: {} rows is taller than a scene ({SCENE_HEIGHT})",
            path.display(),
            grid.height()
        );
    }
    Ok(grid.pad_to_height(SCENE_HEIGHT)?)
}

/// A named list of scenes with their dataset records when available.
pub struct LoadedSet {
    pub label: String,
    pub records: Vec<DatasetRecord>,
}

impl LoadedSet {
    pub fn scenes(&self) -> Vec<TileGrid> {
        self.records.iter().map(|r| r.scene.clone()).collect()
    }
}

/// Resolves `corpus` to the corpus directory named by the environment.
pub fn resolve(spec: &str) -> Result<PathBuf> {
    if spec == "corpus" {
        let dir = std::env::var(CORPUS_ENV)
            .with_context(|| format!("`corpus` needs {CORPUS_ENV} to be set"))?;
        return Ok(PathBuf::from(dir));
    }
    Ok(PathBuf::from(spec))
}

/// Scenes in a text file. Blank-line separated blocks are separate scenes
/// (as written by `generate --out`); a single block is a level and is sliced
/// into windows.
fn read_scene_file(path: &Path) -> Result<Vec<TileGrid>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let blocks: Vec<&str> = text
        .split("\n\n")
        .map(str::trim)
        .filter(|b| !b.is_empty())
        .collect();
    if blocks.len() > 1 {
        return blocks
            .iter()
            .enumerate()
            .map(|(i, block)| {
                let grid = parse_level(&format!("scene-{i}"), block)
                    .with_context(|| format!("parsing {} block {i}", path.display()))?
                    .to_grid();
                Ok(grid.pad_to_height(SCENE_HEIGHT)?)
            })
            .collect();
    }
    let grid = read_scene(path)?;
    if grid.width() >= SCENE_WIDTH {
        Ok(grid.slide_windows(SCENE_WIDTH)?)
    } else {
        Ok(vec![grid])
    }
}

/// Loads a scene set from a level directory, a JSONL dataset, or a text file
/// of scenes.
pub fn read_set(spec: &str) -> Result<LoadedSet> {
    let path = resolve(spec)?;
    let label = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(spec)
        .to_string();
    let records = if path.is_dir() {
        build_dataset(&path, BuildOptions::default())?
    } else if path.extension().is_some_and(|e| e == "jsonl") {
        load_jsonl(&path)?
    } else {
        let scenes = read_scene_file(&path)?;
        scenes
            .into_iter()
            .enumerate()
            .map(|(window, scene)| {
                let source = level_forge::dataset::SceneSource {
                    level: label.clone(),
                    window,
                };
                Ok(DatasetRecord::from_scene(scene, source)?)
            })
            .collect::<Result<_>>()?
    };
    Ok(LoadedSet { label, records })
}
