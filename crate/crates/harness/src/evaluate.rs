//! Aggregate tables: method comparison per dependency level, candidate
//! quality before and after clustering, and anytime curves.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use crate::hypothesize::{HypothesisFile, PoolQuality, Selection};
use crate::methods::{mean, Method, MethodRun};
use crate::scenario::Level;

/// All results for one scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scene_id: String,
    pub level: Level,
    pub seed: u64,
    pub hypotheses: Option<HypothesisFile>,
    pub runs: Vec<MethodRun>,
}

impl RunReport {
    pub fn run(&self, m: Method) -> Option<&MethodRun> {
        self.runs.iter().find(|r| r.method == m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub level: String,
    pub method: String,
    pub scenes: usize,
    pub objects: usize,
    pub mean_rotation_deg: f64,
    pub mean_translation_cm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityRow {
    pub level: String,
    pub stage: String,
    pub selection: String,
    pub objects: usize,
    pub mean_rotation_deg: f64,
    pub mean_translation_cm: f64,
    pub mean_pool_size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnytimeRow {
    pub method: String,
    pub level: String,
    pub expansion_index: usize,
    pub scenes: usize,
    pub mean_best_score: f64,
    pub mean_rotation_deg: f64,
    pub mean_translation_cm: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub methods: Vec<MethodRow>,
    pub quality: Vec<QualityRow>,
    pub anytime: Vec<AnytimeRow>,
}

const ALL: &str = "all";

fn method_rows(reports: &[RunReport]) -> Vec<MethodRow> {
    let mut groups: BTreeMap<(String, Method), Vec<&MethodRun>> = BTreeMap::new();
    for r in reports {
        for run in &r.runs {
            groups.entry((r.level.as_str().to_owned(), run.method)).or_default().push(run);
            groups.entry((ALL.to_owned(), run.method)).or_default().push(run);
        }
    }
    groups
        .into_iter()
        .map(|((level, method), runs)| {
            let objs: Vec<_> = runs.iter().flat_map(|r| r.objects.iter()).collect();
            MethodRow {
                level,
                method: method.as_str().into(),
                scenes: runs.len(),
                objects: objs.len(),
                mean_rotation_deg: mean(objs.iter().map(|o| o.rotation_deg)),
                mean_translation_cm: mean(objs.iter().map(|o| o.translation_cm)),
            }
        })
        .collect()
}

fn quality_rows(reports: &[RunReport]) -> Vec<QualityRow> {
    type Key = (String, &'static str, &'static str);
    type Pick = fn(&PoolQuality) -> Selection;
    let mut groups: BTreeMap<Key, Vec<(Selection, usize)>> = BTreeMap::new();
    let selections: [(&str, Pick); 3] =
        [("max_lcp", |q| q.max_lcp), ("min_rotation", |q| q.min_rotation), ("min_translation", |q| q.min_translation)];
    for r in reports {
        let Some(h) = &r.hypotheses else { continue };
        for o in &h.objects {
            for (stage, q) in [("pre_clustering", &o.pre_clustering), ("post_clustering", &o.post_clustering)] {
                let Some(q) = q else { continue };
                for (name, f) in selections {
                    for level in [r.level.as_str(), ALL] {
                        groups.entry((level.to_owned(), stage, name)).or_default().push((f(q), q.size));
                    }
                }
            }
        }
    }
    groups
        .into_iter()
        .map(|((level, stage, selection), v)| QualityRow {
            level,
            stage: stage.into(),
            selection: selection.into(),
            objects: v.len(),
            mean_rotation_deg: mean(v.iter().map(|(s, _)| s.rotation_deg)),
            mean_translation_cm: mean(v.iter().map(|(s, _)| s.translation_cm)),
            mean_pool_size: mean(v.iter().map(|(_, n)| *n as f64)),
        })
        .collect()
}

/// Mean of each trace column across scenes at every expansion index. A trace
/// that ended early contributes its last row to later indices.
fn anytime_rows(reports: &[RunReport]) -> Vec<AnytimeRow> {
    let mut groups: BTreeMap<(Method, String), Vec<&MethodRun>> = BTreeMap::new();
    for r in reports {
        for run in r.runs.iter().filter(|run| !run.trace.is_empty()) {
            groups.entry((run.method, r.level.as_str().to_owned())).or_default().push(run);
            groups.entry((run.method, ALL.to_owned())).or_default().push(run);
        }
    }
    let mut out = Vec::new();
    for ((method, level), runs) in groups {
        let len = runs.iter().map(|r| r.trace.len()).max().unwrap_or(0);
        for i in 0..len {
            let rows: Vec<_> = runs.iter().filter_map(|r| r.trace.get(i).or(r.trace.last())).collect();
            out.push(AnytimeRow {
                method: method.as_str().into(),
                level: level.clone(),
                expansion_index: i,
                scenes: rows.len(),
                mean_best_score: mean(rows.iter().map(|r| r.best_score)),
                mean_rotation_deg: mean(rows.iter().filter_map(|r| r.rotation_error_deg)),
                mean_translation_cm: mean(rows.iter().filter_map(|r| r.translation_error_cm)),
            });
        }
    }
    out
}

pub fn evaluate(reports: &[RunReport]) -> Result<Summary> {
    if reports.is_empty() {
        bail!("nothing to evaluate");
    }
    Ok(Summary { methods: method_rows(reports), quality: quality_rows(reports), anytime: anytime_rows(reports) })
}

impl Summary {
    pub fn method(&self, level: &str, m: Method) -> Option<&MethodRow> {
        self.methods.iter().find(|r| r.level == level && r.method == m.as_str())
    }

    pub fn quality(&self, level: &str, stage: &str, selection: &str) -> Option<&QualityRow> {
        self.quality.iter().find(|r| r.level == level && r.stage == stage && r.selection == selection)
    }

    /// Fixed-width text rendering of the method table.
    pub fn method_table(&self) -> String {
        let mut s = format!("{:<14} {:<16} {:>6} {:>8} {:>10} {:>10}\n", "level", "method", "scenes", "objects", "rot_deg", "trans_cm");
        for r in &self.methods {
            s.push_str(&format!(
                "{:<14} {:<16} {:>6} {:>8} {:>10.3} {:>10.3}\n",
                r.level, r.method, r.scenes, r.objects, r.mean_rotation_deg, r.mean_translation_cm
            ));
        }
        s
    }
}
