#![allow(dead_code)]

use scenepose_harness::hypothesize::HypothesizeConfig;
use scenepose_harness::scenario::{NoiseSpec, Pattern, ScenarioSpec};

pub fn spec(pattern: Pattern, seed: u64) -> ScenarioSpec {
    ScenarioSpec { name: format!("{pattern:?}").to_lowercase(), pattern, seed, ..Default::default() }
}

pub fn noisy(pattern: Pattern, seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        noise: NoiseSpec { depth_sigma: 0.001, dropout: 0.01, bbox_margin: 2, bbox_jitter: 1, bleed: 0.3 },
        ..spec(pattern, seed)
    }
}

pub fn quick_hypotheses() -> HypothesizeConfig {
    HypothesizeConfig { budget: 40, ..Default::default() }
}
