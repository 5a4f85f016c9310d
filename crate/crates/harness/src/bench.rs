//! Named experiment suites and the end-to-end runner.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use scenepose::search::trace_csv;

use crate::evaluate::{evaluate, RunReport, Summary};
use crate::hypothesize::{hypothesize, HypothesizeConfig};
use crate::io::{write_csv, write_depth_png, write_json, write_text};
use crate::methods::{prepare, run_prepared, Method, MethodConfig};
use crate::scenario::{gen_scenes, observe_scene, NoiseSpec, Pattern, ScenarioSpec, SceneRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub name: String,
    pub scenarios: Vec<ScenarioSpec>,
    pub hypothesize: HypothesizeConfig,
    pub methods: Vec<Method>,
    pub search: MethodConfig,
}

pub const SUITES: [&str; 3] = ["smoke", "table2", "independent"];

/// Noise used by the comparison suites: millimeter depth noise, a little
/// dropout and detection boxes that bleed into their neighbors.
pub fn comparison_noise() -> NoiseSpec {
    NoiseSpec { depth_sigma: 0.001, dropout: 0.01, bbox_margin: 2, bbox_jitter: 1, bleed: 0.3 }
}

fn scenario(name: &str, pattern: Pattern, scenes: usize, seed: u64, noise: NoiseSpec) -> ScenarioSpec {
    ScenarioSpec { name: name.into(), pattern, scenes, seed, noise, ..Default::default() }
}

pub fn suite(name: &str) -> Result<Suite> {
    let noise = comparison_noise();
    let dependent = |n: usize, seed: u64| {
        vec![
            scenario("stack2", Pattern::Stack2, n, seed, noise),
            scenario("occlusion2", Pattern::Occlusion2, n, seed + 1, noise),
            scenario("three", Pattern::Three, n, seed + 2, noise),
        ]
    };
    Ok(match name {
        "smoke" => Suite {
            name: name.into(),
            scenarios: dependent(1, 100),
            hypothesize: HypothesizeConfig { budget: 60, ..Default::default() },
            methods: Method::ALL.to_vec(),
            search: MethodConfig { expansions: 40, ..Default::default() },
        },
        "table2" => Suite {
            name: name.into(),
            scenarios: dependent(10, 200),
            hypothesize: HypothesizeConfig::default(),
            methods: Method::ALL.to_vec(),
            search: MethodConfig::default(),
        },
        "independent" => Suite {
            name: name.into(),
            scenarios: vec![scenario("independent", Pattern::Independent, 10, 300, noise)],
            hypothesize: HypothesizeConfig::default(),
            methods: Method::ALL.to_vec(),
            search: MethodConfig::default(),
        },
        _ => bail!("unknown suite {name:?}; expected one of {SUITES:?}"),
    })
}

/// Hypothesizes once and runs every method on the same hypothesis sets.
pub fn run_scene(rec: &SceneRecord, hyp: &HypothesizeConfig, methods: &[Method], cfg: &MethodConfig) -> Result<RunReport> {
    let hyps = hypothesize(rec, hyp)?;
    let prep = prepare(rec, &hyps, cfg)?;
    let runs = methods
        .iter()
        .map(|m| run_prepared(rec, &hyps, &prep, *m, cfg).with_context(|| format!("{} on {}", m.as_str(), rec.id)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport { scene_id: rec.id.clone(), level: rec.level, seed: rec.seed, hypotheses: Some(hyps), runs })
}

pub struct SuiteOutput {
    pub scenes: Vec<SceneRecord>,
    pub reports: Vec<RunReport>,
    pub summary: Summary,
}

pub fn run_suite(suite: &Suite) -> Result<SuiteOutput> {
    let mut scenes = Vec::new();
    for s in &suite.scenarios {
        scenes.extend(gen_scenes(s)?);
    }
    let reports = scenepose::par::map(&scenes, |rec| run_scene(rec, &suite.hypothesize, &suite.methods, &suite.search))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let summary = evaluate(&reports)?;
    Ok(SuiteOutput { scenes, reports, summary })
}

/// Scene JSON and depth PNG for one scene under `dir`.
pub fn write_scene(dir: &Path, rec: &SceneRecord) -> Result<()> {
    write_json(&dir.join(format!("{}.json", rec.id)), rec)?;
    let lib = rec.library()?;
    let obs = observe_scene(rec, &lib)?;
    write_depth_png(&dir.join(format!("{}.depth.png", rec.id)), &obs.depth, Some(&rec.ground_truth.camera))
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<()> {
    write_csv(&dir.join("methods.csv"), &summary.methods)?;
    write_csv(&dir.join("quality.csv"), &summary.quality)?;
    write_csv(&dir.join("anytime.csv"), &summary.anytime)?;
    write_json(&dir.join("summary.json"), summary)
}

pub fn write_report(dir: &Path, report: &RunReport) -> Result<()> {
    write_json(&dir.join(format!("{}.report.json", report.scene_id)), report)?;
    for run in &report.runs {
        let stem = format!("{}.{}", report.scene_id, run.method.as_str());
        if !run.trace.is_empty() {
            write_text(&dir.join(format!("{stem}.trace.csv")), &trace_csv(&run.trace))?;
        }
        if let Some(g) = &run.graph {
            write_text(&dir.join(format!("{stem}.dot")), &g.to_dot())?;
        }
    }
    Ok(())
}

pub fn write_suite(dir: &Path, out: &SuiteOutput) -> Result<()> {
    for rec in &out.scenes {
        write_scene(&dir.join("scenes"), rec)?;
    }
    for r in &out.reports {
        write_report(&dir.join("runs"), r)?;
    }
    write_summary(&dir.join("tables"), &out.summary)
}
