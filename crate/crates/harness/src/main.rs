use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use scenepose::geometry::Pose;
use scenepose::search::{trace_csv, RewardMode};
use scenepose::ObjectId;
use scenepose_harness::bench::{run_suite, suite, write_scene, write_suite, write_summary};
use scenepose_harness::evaluate::{evaluate, RunReport};
use scenepose_harness::hypothesize::{hypothesize, HypothesisFile, HypothesizeConfig};
use scenepose_harness::io::{read_json, write_json, write_text};
use scenepose_harness::methods::{run_method, Method, MethodConfig, MethodRun};
use scenepose_harness::scenario::{gen_scenes, ScenarioSpec, SceneRecord};

#[derive(Parser)]
#[command(name = "scenepose", version, about = "Scene-level pose estimation on synthetic depth scenes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reward {
    Normalized,
    Raw,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate scenes from a scenario spec (one object or a list).
    GenScenes {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Register every object of a scene and cluster the candidates.
    Hypothesize {
        #[arg(long)]
        scene: PathBuf,
        /// Registration base trials per object.
        #[arg(long)]
        budget: usize,
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON with the remaining hypothesis settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Estimate the scene's poses with one method.
    Search {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        hypotheses: PathBuf,
        #[arg(long, value_enum, default_value = "mcts")]
        method: Method,
        #[arg(long, default_value_t = 250)]
        expansions: usize,
        #[arg(long, default_value_t = 0.7)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "normalized")]
        reward: Reward,
        /// Poses keyed by object id; the full run, trace and graph go next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate run files into CSV tables.
    Evaluate {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a named suite end to end.
    Bench {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecFile {
    One(Box<ScenarioSpec>),
    Many(Vec<ScenarioSpec>),
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn gen(spec: &Path, out: &Path) -> Result<()> {
    let specs = match read_json::<SpecFile>(spec)? {
        SpecFile::One(s) => vec![*s],
        SpecFile::Many(v) => v,
    };
    let mut ids = Vec::new();
    for s in &specs {
        for rec in gen_scenes(s)? {
            write_scene(out, &rec)?;
            ids.push(rec.id);
        }
    }
    write_json(&out.join("manifest.json"), &ids)?;
    println!("wrote {} scenes to {}", ids.len(), out.display());
    Ok(())
}

fn search(args: (&Path, &Path, Method, usize, f64, Reward, &Path)) -> Result<()> {
    let (scene, hyps, method, expansions, alpha, reward, out) = args;
    let rec: SceneRecord = read_json(scene)?;
    let hyps: HypothesisFile = read_json(hyps)?;
    let cfg = MethodConfig {
        expansions,
        alpha,
        reward_mode: match reward {
            Reward::Normalized => RewardMode::Normalized,
            Reward::Raw => RewardMode::Raw,
        },
        ..Default::default()
    };
    let run = run_method(&rec, &hyps, method, &cfg)?;
    let poses: BTreeMap<ObjectId, Pose> = run.poses();
    write_json(out, &poses)?;
    write_json(&sibling(out, "run.json"), &run)?;
    if !run.trace.is_empty() {
        write_text(&sibling(out, "trace.csv"), &trace_csv(&run.trace))?;
    }
    if let Some(g) = &run.graph {
        write_text(&sibling(out, "dot"), &g.to_dot())?;
    }
    println!(
        "{} on {}: mean rotation error {:.3} deg, translation error {:.3} cm, {:.2} s",
        method.as_str(),
        rec.id,
        run.mean_rotation(),
        run.mean_translation(),
        run.wall_seconds
    );
    Ok(())
}

/// Collects reports, single runs and hypothesis files from a directory and
/// groups them by scene.
fn load_reports(dir: &Path) -> Result<Vec<RunReport>> {
    let mut reports: BTreeMap<String, RunReport> = BTreeMap::new();
    let mut hyps: BTreeMap<String, HypothesisFile> = BTreeMap::new();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    for p in paths {
        let text = std::fs::read_to_string(&p)?;
        if let Ok(r) = serde_json::from_str::<RunReport>(&text) {
            reports.insert(r.scene_id.clone(), r);
        } else if let Ok(run) = serde_json::from_str::<MethodRun>(&text) {
            let entry = reports.entry(run.scene_id.clone()).or_insert_with(|| RunReport {
                scene_id: run.scene_id.clone(),
                level: run.level,
                seed: 0,
                hypotheses: None,
                runs: Vec::new(),
            });
            entry.runs.retain(|r| r.method != run.method);
            entry.runs.push(run);
        } else if let Ok(h) = serde_json::from_str::<HypothesisFile>(&text) {
            hyps.insert(h.scene_id.clone(), h);
        }
    }
    for (id, h) in hyps {
        if let Some(r) = reports.get_mut(&id) {
            r.seed = h.seed;
            r.hypotheses.get_or_insert(h);
        }
    }
    Ok(reports.into_values().collect())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let threads = scenepose_harness::init_threads()?;
    match cli.cmd {
        Cmd::GenScenes { spec, out } => gen(&spec, &out)?,
        Cmd::Hypothesize { scene, budget, out, config } => {
            let rec: SceneRecord = read_json(&scene)?;
            let base: HypothesizeConfig = match config {
                Some(p) => read_json(&p)?,
                None => HypothesizeConfig::default(),
            };
            let h = hypothesize(&rec, &HypothesizeConfig { budget, ..base })?;
            write_json(&out, &h)?;
            for o in &h.objects {
                println!("object {} ({}): {} representatives, best LCP {:.3}", o.object_id, o.model, o.hypotheses.len(), o.max_lcp.lcp);
            }
        }
        Cmd::Search { scene, hypotheses, method, expansions, alpha, reward, out } => {
            search((&scene, &hypotheses, method, expansions, alpha, reward, &out))?
        }
        Cmd::Evaluate { runs, out } => {
            let reports = load_reports(&runs)?;
            let summary = evaluate(&reports)?;
            write_summary(&out, &summary)?;
            print!("{}", summary.method_table());
        }
        Cmd::Bench { suite: name, out } => {
            let s = suite(&name)?;
            let start = Instant::now();
            let res = run_suite(&s)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("bench-out").join(&name));
            write_suite(&dir, &res)?;
            write_json(&dir.join("suite.json"), &s)?;
            print!("{}", res.summary.method_table());
            println!(
                "{} scenes in {:.1} s on {threads} worker(s); outputs in {}",
                res.scenes.len(),
                start.elapsed().as_secs_f64(),
                dir.display()
            );
        }
    }
    Ok(())
}
