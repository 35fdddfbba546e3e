//! Command-line surface. Each command returns an [`Output`] so the same
//! results can be printed as a table or as JSON records.

use std::fs;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use level_forge::caption::{parse_caption, parse_prompt, render, Caption, CaptionStyle};
use level_forge::concepts::{detect, ConceptKind};
use level_forge::dataset::{
    build_dataset, corpus_stats, load_jsonl, make_random_prompts, save_jsonl, split, BuildOptions,
    SplitSpec, CORPUS_ENV, STANDARD_SPLIT_SIZES,
};
use level_forge::diversity::{
    amed_real, amed_self, integrity_rates, metrics_report, sample_evenly, sample_random, SceneSet,
};
use level_forge::generate::annotate;
use level_forge::project::{ProjectStore, WORKSPACE_ENV};
use level_forge::protocol::{
    connect, Constructive, Endpoint, GenRequest, SceneGenerator, DEFAULT_TIMEOUT, GENERATOR_ENV,
};
use level_forge::score::{c_score, tolerance, ScoreBreakdown};
use level_forge::solve::{batch_solvability, solve, MoveModel};
use level_forge::tiles::TileGrid;

use crate::input::{read_scene, read_set, resolve};
use crate::output::{table, Format, Output};
use crate::server::{self, AppState};

#[derive(Debug, Parser)]
#[command(
    name = "level-forge",
    version,
    about = "Caption, score, generate and solve platformer level scenes"
)]
pub struct Cli {
    /// Output as an aligned table or as one JSON record per line.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Slice and caption a directory of level files into a JSONL dataset.
    Ingest {
        /// Level directory (defaults to $LEVEL_FORGE_CORPUS).
        #[arg(env = CORPUS_ENV)]
        corpus: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Also record whether each scene is beatable.
        #[arg(long)]
        solvability: bool,
    },
    /// Split a dataset into train/val/test files with concept coverage.
    Split {
        dataset: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the fixed 6918/384/385 sizes (full corpus only).
        #[arg(long)]
        standard_sizes: bool,
        /// Train, val and test fractions.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.90, 0.05, 0.05])]
        fractions: Vec<f64>,
        /// Skip the per-split concept coverage requirement.
        #[arg(long)]
        no_coverage: bool,
    },
    /// Scene counts, concept frequencies and vocabulary sizes of a set.
    Stats { set: String },
    /// Sample grammar-valid prompts absent from a corpus.
    RandomPrompts {
        #[arg(short, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Corpus whose captions (and concept frequencies) to use.
        #[arg(long)]
        corpus: Option<String>,
    },
    /// Caption a scene file.
    Caption {
        scene: PathBuf,
        #[arg(long, value_enum, default_value_t = StyleArg::Regular)]
        style: StyleArg,
    },
    /// Caption adherence of a scene (or caption) to a prompt.
    Score {
        #[arg(long)]
        prompt: String,
        #[arg(long, conflicts_with = "caption", required_unless_present = "caption")]
        scene: Option<PathBuf>,
        #[arg(long)]
        caption: Option<String>,
    },
    /// Mean c-score over phrase orderings of a prompt.
    Tolerance {
        #[arg(long)]
        prompt: String,
        #[arg(long, default_value_t = 5)]
        max_perms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        generator: GeneratorArgs,
    },
    /// Diversity and integrity metrics.
    Metrics {
        #[command(subcommand)]
        metric: Metric,
    },
    /// Check whether scenes can be traversed left to right.
    Solve {
        /// Scene file, or a set with --batch.
        input: String,
        /// Treat the input as a set and report the beatable share.
        #[arg(long)]
        batch: bool,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Generate scenes for a prompt.
    Generate {
        #[arg(long)]
        prompt: String,
        #[arg(long)]
        negative_prompt: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        num_samples: u32,
        #[arg(long, default_value_t = 16)]
        width: usize,
        #[arg(long)]
        steps: Option<u32>,
        #[arg(long)]
        guidance_scale: Option<f64>,
        /// Write scenes as ASCII here, separated by blank lines.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        generator: GeneratorArgs,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[command(flatten)]
        workspace: WorkspaceArgs,
        #[command(flatten)]
        generator: GeneratorArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Build a level out of scenes.
    Compose {
        #[command(flatten)]
        workspace: WorkspaceArgs,
        #[command(subcommand)]
        action: ComposeAction,
    },
    /// Print a project's level as ASCII.
    Export {
        id: String,
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        workspace: WorkspaceArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum Metric {
    /// Average minimum edit distance within a set.
    AmedSelf {
        #[arg(long)]
        set: String,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// Average minimum edit distance from a set to a reference set.
    AmedReal {
        #[arg(long)]
        set: String,
        #[arg(long)]
        real: String,
        #[command(flatten)]
        sample: SampleArgs,
    },
    /// Share of scenes with broken and intact pipes and cannons.
    Integrity {
        #[arg(long)]
        set: String,
    },
    /// All of the above.
    Report {
        #[arg(long)]
        set: String,
        #[arg(long)]
        real: Option<String>,
        #[command(flatten)]
        sample: SampleArgs,
    },
}

#[derive(Debug, Subcommand)]
pub enum ComposeAction {
    /// Start an empty project.
    New {
        #[arg(long)]
        id: Option<String>,
        #[arg(long, default_value = "")]
        name: String,
    },
    List,
    Show {
        id: String,
    },
    /// Add a scene file to the end of the level.
    Append {
        id: String,
        scene: PathBuf,
        #[arg(long)]
        revision: Option<u64>,
    },
    /// Generate a scene in-tree and add it to the end of the level.
    AppendGenerated {
        id: String,
        #[arg(long)]
        prompt: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        revision: Option<u64>,
    },
    Move {
        id: String,
        from: usize,
        to: usize,
        #[arg(long)]
        revision: Option<u64>,
    },
    /// Remove one scene.
    Delete {
        id: String,
        index: usize,
        #[arg(long)]
        revision: Option<u64>,
    },
    /// Remove the whole project.
    Remove {
        id: String,
        #[arg(long)]
        revision: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StyleArg {
    Regular,
    Absence,
    Negative,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleMode {
    All,
    Evenly,
    Random,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Evaluate the whole set or a sample of it.
    #[arg(long, value_enum, default_value_t = SampleMode::All)]
    sample: SampleMode,
    #[arg(short, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct GeneratorArgs {
    /// External generator: a command line (stdin/stdout) or an http(s) URL.
    /// Defaults to the in-tree constructive generator.
    #[arg(long, env = GENERATOR_ENV)]
    generator: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TIMEOUT.as_secs())]
    timeout_secs: u64,
}

impl GeneratorArgs {
    fn open(&self) -> Result<Box<dyn SceneGenerator>> {
        match self.generator.as_deref().map(str::trim) {
            None | Some("") | Some("constructive") => Ok(Box::new(Constructive)),
            Some(spec) => {
                let endpoint: Endpoint = spec.parse()?;
                Ok(connect(&endpoint, Duration::from_secs(self.timeout_secs)))
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, default_value_t = MoveModel::default().max_jump_height)]
    max_jump: usize,
    #[arg(long, default_value_t = MoveModel::default().max_gap_clear)]
    max_gap: usize,
    /// Let the agent pass through breakable bricks while airborne.
    #[arg(long)]
    break_blocks: bool,
}

impl ModelArgs {
    fn model(&self) -> MoveModel {
        MoveModel {
            max_jump_height: self.max_jump,
            max_gap_clear: self.max_gap,
            can_break_blocks: self.break_blocks,
        }
    }
}

#[derive(Debug, Args)]
pub struct WorkspaceArgs {
    /// Directory holding project files.
    #[arg(long, env = WORKSPACE_ENV, default_value = "workspace")]
    workspace: PathBuf,
}

impl WorkspaceArgs {
    fn store(&self) -> Result<ProjectStore> {
        Ok(ProjectStore::open(&self.workspace)?)
    }
}

fn style_of(arg: StyleArg) -> Vec<CaptionStyle> {
    match arg {
        StyleArg::Regular => vec![CaptionStyle::Regular],
        StyleArg::Absence => vec![CaptionStyle::Absence],
        StyleArg::Negative => vec![CaptionStyle::Negative],
        StyleArg::All => CaptionStyle::ALL.to_vec(),
    }
}

fn prompt_arg(text: &str) -> Result<Caption> {
    parse_prompt(text).map_err(|e| anyhow!("prompt: {e}"))
}

fn breakdown_table(b: &ScoreBreakdown) -> String {
    let mut out = format!("c-score  {:.3}", b.c_score);
    let rows: Vec<Vec<String>> = b
        .mismatches()
        .map(|d| {
            vec![
                d.concept.name().to_string(),
                d.prompt.clone().unwrap_or_else(|| "-".into()),
                d.actual.clone().unwrap_or_else(|| "-".into()),
                format!("{:+.2}", d.score),
            ]
        })
        .collect();
    if !rows.is_empty() {
        out.push_str("\n\n");
        out.push_str(&table(&["concept", "prompt", "scene", "match"], &rows));
    }
    out
}

fn sampled(set: SceneSet, args: &SampleArgs) -> Result<SceneSet> {
    Ok(match args.sample {
        SampleMode::All => set,
        SampleMode::Evenly => sample_evenly(&set, args.n)?,
        SampleMode::Random => sample_random(&set, args.n, args.seed)?,
    })
}

fn scene_set(spec: &str) -> Result<SceneSet> {
    let loaded = read_set(spec)?;
    Ok(SceneSet::new(loaded.label.clone(), loaded.scenes())?)
}

/// Runs a command to completion. `serve` blocks until the server stops.
pub fn run(cli: Cli) -> Result<Output> {
    match cli.command {
        Command::Ingest {
            corpus,
            out,
            solvability,
        } => {
            let options = BuildOptions {
                solvability: solvability.then(MoveModel::default),
            };
            let records = build_dataset(&corpus, options)?;
            save_jsonl(&out, &records)?;
            let summary = json!({"records": records.len(), "out": out.display().to_string()});
            Ok(Output::single(
                format!("{} records written to {}", records.len(), out.display()),
                &summary,
            ))
        }
        Command::Split {
            dataset,
            out_dir,
            seed,
            standard_sizes,
            fractions,
            no_coverage,
        } => {
            let records = load_jsonl(&dataset)?;
            let mut spec = SplitSpec {
                seed,
                fractions: (fractions[0], fractions[1], fractions[2]),
                sizes: standard_sizes.then_some(STANDARD_SPLIT_SIZES),
                ..SplitSpec::default()
            };
            if no_coverage {
                spec.coverage_required.clear();
            }
            let parts = split(&records, &spec)?;
            fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let mut rows = Vec::new();
            let mut records_out = Vec::new();
            for (name, part) in [
                ("train", &parts.train),
                ("val", &parts.val),
                ("test", &parts.test),
            ] {
                let path = out_dir.join(format!("{name}.jsonl"));
                save_jsonl(&path, part)?;
                rows.push(vec![
                    name.to_string(),
                    part.len().to_string(),
                    path.display().to_string(),
                ]);
                records_out.push(json!({"split": name, "records": part.len(), "path": path.display().to_string()}));
            }
            Ok(Output::new(
                table(&["split", "records", "file"], &rows),
                records_out,
            ))
        }
        Command::Stats { set } => {
            let loaded = read_set(&set)?;
            let stats = corpus_stats(&loaded.records);
            let mut lines = vec![
                format!("scenes             {}", stats.scenes),
                format!("distinct captions  {}", stats.distinct_captions),
                format!("vocab (regular)    {}", stats.vocab_regular),
                format!("vocab (absence)    {}", stats.vocab_absence),
            ];
            if let Some(s) = stats.solvable {
                lines.push(format!("solvable           {s}"));
            }
            let rows: Vec<Vec<String>> = ConceptKind::ALL
                .iter()
                .map(|k| {
                    vec![
                        k.name().to_string(),
                        stats
                            .concept_scenes
                            .get(k)
                            .copied()
                            .unwrap_or(0)
                            .to_string(),
                        stats
                            .concept_instances
                            .get(k)
                            .copied()
                            .unwrap_or(0)
                            .to_string(),
                    ]
                })
                .collect();
            let text = format!(
                "{}\n\n{}",
                lines.join("\n"),
                table(&["concept", "scenes", "instances"], &rows)
            );
            Ok(Output::single(text, &stats))
        }
        Command::RandomPrompts { n, seed, corpus } => {
            if n == 0 {
                bail!("-n must be at least 1");
            }
            let records = match corpus {
                Some(spec) => read_set(&spec)?.records,
                None => Vec::new(),
            };
            let prompts = make_random_prompts(n, seed, &records);
            let texts: Vec<String> = prompts.iter().map(Caption::text).collect();
            let records = texts.iter().map(|t| json!({"prompt": t})).collect();
            Ok(Output::new(texts.join("\n"), records))
        }
        Command::Caption { scene, style } => {
            let grid = read_scene(&scene)?;
            let report = detect(&grid)?;
            let styles = style_of(style);
            let captions: Vec<(CaptionStyle, String)> = styles
                .iter()
                .map(|&s| (s, render(&report, s).text()))
                .collect();
            let text = if captions.len() == 1 {
                captions[0].1.clone()
            } else {
                captions
                    .iter()
                    .map(|(s, c)| format!("{s}: {c}"))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            let records = captions
                .iter()
                .map(|(s, c)| json!({"style": s.name(), "caption": c}))
                .collect();
            Ok(Output::new(text, records))
        }
        Command::Score {
            prompt,
            scene,
            caption,
        } => {
            let prompt = prompt_arg(&prompt)?;
            let actual = match (scene, caption) {
                (Some(path), _) => render(&detect(&read_scene(&path)?)?, CaptionStyle::Regular),
                (None, Some(text)) => parse_caption(&text, CaptionStyle::Regular)
                    .map_err(|e| anyhow!("caption: {e}"))?,
                (None, None) => unreachable!("clap requires one of --scene and --caption"),
            };
            let breakdown = c_score(&prompt, &actual);
            let text = format!(
                "caption  {}\n{}",
                actual.text(),
                breakdown_table(&breakdown)
            );
            let record = json!({"prompt": prompt.text(), "caption": actual.text(), "c_score": breakdown.c_score, "breakdown": breakdown});
            Ok(Output::new(text, vec![record]))
        }
        Command::Tolerance {
            prompt,
            max_perms,
            seed,
            generator,
        } => {
            let prompt = prompt_arg(&prompt)?;
            let generator = generator.open()?;
            let mut source = |p: &Caption, s: u64| -> Result<TileGrid, String> {
                let mut req = GenRequest::new(format!("tolerance-{s}"), p.text());
                req.seed = s;
                generator
                    .generate(&req)
                    .map_err(|e| e.to_string())?
                    .into_iter()
                    .next()
                    .ok_or_else(|| "no scene".to_string())
            };
            let report = tolerance(&prompt, &mut source, max_perms, seed)?;
            let rows: Vec<Vec<String>> = report
                .permutations
                .iter()
                .map(|p| {
                    vec![
                        p.c_score
                            .map(|s| format!("{s:.3}"))
                            .unwrap_or_else(|| "failed".into()),
                        p.prompt.clone(),
                    ]
                })
                .collect();
            let text = format!(
                "tolerance  {:.3}\n\n{}",
                report.tolerance,
                table(&["c-score", "ordering"], &rows)
            );
            Ok(Output::single(text, &report))
        }
        Command::Metrics { metric } => run_metric(metric),
        Command::Solve {
            input,
            batch,
            model,
        } => {
            let model = model.model();
            if batch {
                let scenes = read_set(&input)?.scenes();
                let report = batch_solvability(&scenes, &model);
                let text = format!(
                    "beatable  {}/{} ({:.1}%)",
                    report.beatable, report.total, report.pct_beatable
                );
                return Ok(Output::single(text, &report));
            }
            let grid = read_scene(&resolve(&input)?)?;
            let result = solve(&grid, &model);
            let text = match (&result.path, result.reason) {
                (Some(path), _) => format!(
                    "beatable  yes\npath      {}",
                    path.iter()
                        .map(|s| format!("({},{})", s.row, s.column))
                        .collect::<Vec<_>>()
                        .join(" ")
                ),
                (None, Some(reason)) => format!("beatable  no\nreason    {reason}"),
                (None, None) => "beatable  no".to_string(),
            };
            Ok(Output::single(text, &result))
        }
        Command::Generate {
            prompt,
            negative_prompt,
            seed,
            num_samples,
            width,
            steps,
            guidance_scale,
            out,
            generator,
        } => {
            let mut req = GenRequest::new("cli", prompt.clone());
            req.negative_prompt = negative_prompt;
            req.seed = seed;
            req.num_samples = num_samples;
            req.width = width;
            req.steps = steps;
            req.guidance_scale = guidance_scale;
            let scenes = generator.open()?.generate(&req)?;
            let parsed = parse_prompt(&prompt).ok();
            let mut text = Vec::new();
            let mut records = Vec::new();
            for (i, scene) in scenes.iter().enumerate() {
                let caption = render(&detect(scene)?, CaptionStyle::Regular).text();
                let score = parsed
                    .as_ref()
                    .map(|p| annotate(scene, p))
                    .transpose()?
                    .map(|a| a.breakdown.c_score);
                let score_text = score
                    .map(|s| format!("{s:.3}"))
                    .unwrap_or_else(|| "n/a".into());
                text.push(format!(
                    "# sample {i}  c-score {score_text}\n# {caption}\n{scene}"
                ));
                records.push(
                    json!({"sample": i, "scene": scene, "caption": caption, "c_score": score}),
                );
            }
            if let Some(path) = out {
                let ascii: Vec<String> = scenes.iter().map(TileGrid::serialize).collect();
                fs::write(&path, ascii.join("\n\n") + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(Output::new(text.join("\n\n"), records))
        }
        Command::Serve {
            addr,
            workspace,
            generator,
            model,
        } => {
            let state = AppState {
                generator: Arc::from(generator.open()?),
                store: Arc::new(workspace.store()?),
                model: model.model(),
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(server::serve(state, &addr))?;
            Ok(Output::default())
        }
        Command::Compose { workspace, action } => run_compose(workspace.store()?, action),
        Command::Export { id, out, workspace } => {
            let project = workspace.store()?.get(&id)?;
            let ascii = project.export();
            if let Some(path) = out {
                fs::write(&path, format!("{ascii}\n"))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            let record = json!({"id": id, "width": project.width(), "level": project.level()});
            Ok(Output::new(ascii, vec![record]))
        }
    }
}

fn run_metric(metric: Metric) -> Result<Output> {
    match metric {
        Metric::AmedSelf { set, sample } => {
            let set = sampled(scene_set(&set)?, &sample)?;
            let value = amed_self(&set)?;
            let record = json!({"set": set.label, "n": set.len(), "amed_self": value});
            Ok(Output::new(
                format!("amed_self  {value:.4}  (n={})", set.len()),
                vec![record],
            ))
        }
        Metric::AmedReal { set, real, sample } => {
            let set = sampled(scene_set(&set)?, &sample)?;
            let real = scene_set(&real)?;
            let value = amed_real(&set, &real)?;
            let record =
                json!({"set": set.label, "real": real.label, "n": set.len(), "amed_real": value});
            Ok(Output::new(
                format!("amed_real  {value:.4}  (n={})", set.len()),
                vec![record],
            ))
        }
        Metric::Integrity { set } => {
            let set = scene_set(&set)?;
            let r = integrity_rates(&set)?;
            let text = table(
                &["", "broken %", "any %"],
                &[
                    vec![
                        "pipes".to_string(),
                        format!("{:.2}", r.broken_pipe_pct),
                        format!("{:.2}", r.any_pipe_pct),
                    ],
                    vec![
                        "cannons".to_string(),
                        format!("{:.2}", r.broken_cannon_pct),
                        format!("{:.2}", r.any_cannon_pct),
                    ],
                ],
            );
            Ok(Output::single(text, &r))
        }
        Metric::Report { set, real, sample } => {
            let set = sampled(scene_set(&set)?, &sample)?;
            let real = real.map(|r| scene_set(&r)).transpose()?;
            let r = metrics_report(&set, real.as_ref())?;
            let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
            let text = format!(
                "set            {}\nn              {}\named_self      {}\named_real      {}\nbroken pipes   {:.2}%\nbroken cannons {:.2}%",
                r.label,
                r.n,
                fmt(r.amed_self),
                fmt(r.amed_real),
                r.integrity.broken_pipe_pct,
                r.integrity.broken_cannon_pct
            );
            Ok(Output::single(text, &r))
        }
    }
}

fn project_text(p: &level_forge::project::LevelProject) -> String {
    let mut text = format!(
        "project   {}\nname      {}\nrevision  {}\nscenes    {}\nwidth     {}",
        p.header.id,
        p.header.name,
        p.header.revision,
        p.scenes.len(),
        p.width()
    );
    if let Some(level) = p.level() {
        text.push_str("\n\n");
        text.push_str(&level.serialize());
    }
    text
}

fn run_compose(store: ProjectStore, action: ComposeAction) -> Result<Output> {
    let project = match action {
        ComposeAction::New { id, name } => store.create(id.as_deref(), &name)?,
        ComposeAction::List => {
            let projects = store.list()?;
            let rows: Vec<Vec<String>> = projects
                .iter()
                .map(|p| vec![p.id.clone(), p.name.clone(), p.revision.to_string()])
                .collect();
            let records = projects
                .iter()
                .map(|p| serde_json::to_value(p).expect("header serializes"))
                .collect();
            return Ok(Output::new(
                table(&["id", "name", "revision"], &rows),
                records,
            ));
        }
        ComposeAction::Show { id } => store.get(&id)?,
        ComposeAction::Append {
            id,
            scene,
            revision,
        } => store.append_scene(&id, read_scene(&scene)?, revision)?,
        ComposeAction::AppendGenerated {
            id,
            prompt,
            seed,
            revision,
        } => {
            let mut req = GenRequest::new("compose", prompt);
            req.seed = seed;
            let scene = Constructive.generate(&req)?.remove(0);
            store.append_scene(&id, scene, revision)?
        }
        ComposeAction::Move {
            id,
            from,
            to,
            revision,
        } => store.move_scene(&id, from, to, revision)?,
        ComposeAction::Delete {
            id,
            index,
            revision,
        } => store.delete_scene(&id, index, revision)?,
        ComposeAction::Remove { id, revision } => {
            store.delete(&id, revision)?;
            return Ok(Output::new(
                format!("removed {id}"),
                vec![json!({"removed": id})],
            ));
        }
    };
    Ok(Output::single(project_text(&project), &project))
}
