//! Level projects: ordered scene lists persisted one file per project.
//!
//! A project file is JSON lines: a header object with id, timestamps and
//! revision, then one dataset record per scene in level order. Every
//! mutation bumps the revision; callers that pass the revision they last saw
//! get [`ProjectError::Conflict`] instead of overwriting someone else's edit.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DatasetRecord, SceneSource};
use crate::tiles::{TileGrid, SCENE_HEIGHT};

pub const WORKSPACE_ENV: &str = "LEVEL_FORGE_WORKSPACE";
const EXTENSION: &str = "jsonl";

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("no project {0:?}")]
    NotFound(String),
    #[error("project {0:?} already exists")]
    Exists(String),
    #[error("project {id:?} is at revision {current}, not {expected}")]
    Conflict {
        id: String,
        expected: u64,
        current: u64,
    },
    #[error("invalid project id {0:?}: use letters, digits, '-' and '_'")]
    InvalidId(String),
    #[error("scene index {index} out of range for {len} scenes")]
    BadIndex { index: usize, len: usize },
    #[error("scene must be {SCENE_HEIGHT} rows tall, got {0}")]
    BadScene(usize),
    #[error("corrupt project file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectHeader {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub created: u64,
    pub modified: u64,
    pub revision: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelProject {
    #[serde(flatten)]
    pub header: ProjectHeader,
    pub scenes: Vec<TileGrid>,
}

impl LevelProject {
    pub fn id(&self) -> &str {
        &self.header.id
    }

    pub fn width(&self) -> usize {
        self.scenes.iter().map(TileGrid::width).sum()
    }

    /// All scenes side by side; None for an empty project.
    pub fn level(&self) -> Option<TileGrid> {
        if self.scenes.is_empty() {
            None
        } else {
            Some(TileGrid::concat(&self.scenes).expect("project scenes share one height"))
        }
    }

    /// The level as ASCII rows, empty for an empty project.
    pub fn export(&self) -> String {
        self.level().map(|g| g.serialize()).unwrap_or_default()
    }

    pub fn encode(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for (i, scene) in self.scenes.iter().enumerate() {
            let source = SceneSource {
                level: self.header.id.clone(),
                window: i,
            };
            let record = DatasetRecord::from_scene(scene.clone(), source)
                .expect("scenes are validated on insert");
            out.push_str(&serde_json::to_string(&record).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses a project file. Scenes must be in order and scene height.
    pub fn decode(text: &str) -> Result<LevelProject, String> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: ProjectHeader = serde_json::from_str(lines.next().ok_or("empty project file")?)
            .map_err(|e| format!("header: {e}"))?;
        validate_id(&header.id).map_err(|e| e.to_string())?;
        let mut scenes = Vec::new();
        for (i, line) in lines.enumerate() {
            let record: DatasetRecord =
                serde_json::from_str(line).map_err(|e| format!("scene {i}: {e}"))?;
            if record.source.window != i {
                return Err(format!(
                    "scene {i} is stored at position {}",
                    record.source.window
                ));
            }
            if record.scene.height() != SCENE_HEIGHT {
                return Err(format!("scene {i} has {} rows", record.scene.height()));
            }
            scenes.push(record.scene);
        }
        Ok(LevelProject { header, scenes })
    }
}

pub fn validate_id(id: &str) -> Result<(), ProjectError> {
    let ok = !id.is_empty()
        && id.len() <= 64
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(ProjectError::InvalidId(id.to_string()))
    }
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Directory of project files. Safe to share between threads; mutations of
/// one project are serialized.
pub struct ProjectStore {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl ProjectStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ProjectError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| ProjectError::Io {
            path: root.clone(),
            source,
        })?;
        Ok(ProjectStore {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, id: &str) -> PathBuf {
        self.root.join(format!("{id}.{EXTENSION}"))
    }

    fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|p| p.into_inner());
        locks.entry(id.to_string()).or_default().clone()
    }

    fn read(&self, id: &str) -> Result<LevelProject, ProjectError> {
        validate_id(id)?;
        let path = self.path(id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(ProjectError::NotFound(id.to_string()))
            }
            Err(source) => return Err(ProjectError::Io { path, source }),
        };
        LevelProject::decode(&text).map_err(|message| ProjectError::Corrupt { path, message })
    }

    fn write(&self, project: &LevelProject) -> Result<(), ProjectError> {
        let path = self.path(project.id());
        let tmp = self.root.join(format!(".{}.tmp", project.id()));
        let io = |source| ProjectError::Io {
            path: path.clone(),
            source,
        };
        let mut file = fs::File::create(&tmp).map_err(io)?;
        file.write_all(project.encode().as_bytes()).map_err(io)?;
        file.sync_all().map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)
    }

    pub fn create(&self, id: Option<&str>, name: &str) -> Result<LevelProject, ProjectError> {
        let id = match id {
            Some(id) => id.to_string(),
            None => self.fresh_id(),
        };
        validate_id(&id)?;
        let lock = self.lock(&id);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        if self.path(&id).exists() {
            return Err(ProjectError::Exists(id));
        }
        let t = now();
        let project = LevelProject {
            header: ProjectHeader {
                id,
                name: name.to_string(),
                created: t,
                modified: t,
                revision: 0,
            },
            scenes: Vec::new(),
        };
        self.write(&project)?;
        Ok(project)
    }

    fn fresh_id(&self) -> String {
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0);
        let mut n = 0u32;
        loop {
            let id = format!(
                "p{:x}{}",
                nanos,
                if n == 0 {
                    String::new()
                } else {
                    format!("-{n}")
                }
            );
            if !self.path(&id).exists() {
                return id;
            }
            n += 1;
        }
    }

    pub fn get(&self, id: &str) -> Result<LevelProject, ProjectError> {
        self.read(id)
    }

    /// All projects, by id.
    pub fn list(&self) -> Result<Vec<ProjectHeader>, ProjectError> {
        let io = |source| ProjectError::Io {
            path: self.root.clone(),
            source,
        };
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.extension().and_then(|e| e.to_str()) != Some(EXTENSION) {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            match self.read(id) {
                Ok(p) => out.push(p.header),
                Err(e) => log::warn!("skipping {}: {e}", path.display()),
            }
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }

    pub fn delete(&self, id: &str, expected: Option<u64>) -> Result<(), ProjectError> {
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        let project = self.read(id)?;
        check_revision(&project, expected)?;
        let path = self.path(id);
        fs::remove_file(&path).map_err(|source| ProjectError::Io { path, source })
    }

    /// Applies `edit` under the project's lock, bumping the revision.
    fn mutate(
        &self,
        id: &str,
        expected: Option<u64>,
        edit: impl FnOnce(&mut Vec<TileGrid>) -> Result<(), ProjectError>,
    ) -> Result<LevelProject, ProjectError> {
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap_or_else(|p| p.into_inner());
        let mut project = self.read(id)?;
        check_revision(&project, expected)?;
        edit(&mut project.scenes)?;
        project.header.revision += 1;
        project.header.modified = now();
        self.write(&project)?;
        Ok(project)
    }

    /// Adds a scene at the end of the level.
    pub fn append_scene(
        &self,
        id: &str,
        scene: TileGrid,
        expected: Option<u64>,
    ) -> Result<LevelProject, ProjectError> {
        if scene.height() != SCENE_HEIGHT {
            return Err(ProjectError::BadScene(scene.height()));
        }
        self.mutate(id, expected, |scenes| {
            scenes.push(scene);
            Ok(())
        })
    }

    /// Moves the scene at `from` so that it ends up at index `to`.
    pub fn move_scene(
        &self,
        id: &str,
        from: usize,
        to: usize,
        expected: Option<u64>,
    ) -> Result<LevelProject, ProjectError> {
        self.mutate(id, expected, |scenes| {
            let len = scenes.len();
            for index in [from, to] {
                if index >= len {
                    return Err(ProjectError::BadIndex { index, len });
                }
            }
            let scene = scenes.remove(from);
            scenes.insert(to, scene);
            Ok(())
        })
    }

    pub fn delete_scene(
        &self,
        id: &str,
        index: usize,
        expected: Option<u64>,
    ) -> Result<LevelProject, ProjectError> {
        self.mutate(id, expected, |scenes| {
            if index >= scenes.len() {
                return Err(ProjectError::BadIndex {
                    index,
                    len: scenes.len(),
                });
            }
            scenes.remove(index);
            Ok(())
        })
    }
}

fn check_revision(project: &LevelProject, expected: Option<u64>) -> Result<(), ProjectError> {
    match expected {
        Some(expected) if expected != project.header.revision => Err(ProjectError::Conflict {
            id: project.header.id.clone(),
            expected,
            current: project.header.revision,
        }),
        _ => Ok(()),
    }
}
