//! Browser demo: a forest over two features, its decision surface, the
//! cheapest tweak from a clicked point, and coverage against ε.

use serde::Serialize;
use treetweak::synthetic::two_gaussians;
use treetweak::trainer::{train_forest, TrainConfig};
use treetweak::tweaker::DEFAULT_EPSILON_GRID;
use treetweak::{CostFunction, FeatureSpace, Instance, Label, TreeEnsemble, TweakOptions, TweakOutcome, Tweaker};
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct TweakView {
    pub status: &'static str,
    pub message: Option<String>,
    pub candidate: Option<[f64; 2]>,
    pub cost: Option<f64>,
    pub source_tree: Option<usize>,
    pub source_path: Option<usize>,
    pub candidates: usize,
    /// Every candidate, for drawing.
    pub all: Vec<[f64; 2]>,
}

#[derive(Serialize, Debug, PartialEq)]
pub struct CoveragePoint {
    pub epsilon: f64,
    pub coverage: f64,
    pub median_cost: Option<f64>,
}

pub struct Model {
    ens: TreeEnsemble,
    data: Vec<Instance>,
}

impl Model {
    pub fn train(seed: u64, trees: usize, max_depth: usize, separation: f64) -> Result<Model, String> {
        let data = two_gaussians(300, 2, separation, seed);
        let cfg = TrainConfig {
            num_trees: trees.max(1),
            max_depth: Some(max_depth.max(1)),
            features_per_split: Some(1),
            bootstrap: Some(trees > 1),
            seed,
            workers: 1,
            ..Default::default()
        };
        let ens = train_forest(&FeatureSpace::anonymous(2), &data, &cfg).map_err(|e| e.to_string())?;
        Ok(Model { ens, data })
    }

    /// Fraction of positive votes on a `res` x `res` grid over
    /// `[-extent, extent]^2`, row-major with y increasing downwards.
    pub fn grid(&self, res: usize, extent: f64) -> Vec<f32> {
        let mut out = Vec::with_capacity(res * res);
        for row in 0..res {
            for col in 0..res {
                let (x, y) = cell_center(col, row, res, extent);
                out.push(self.ens.vote_fraction(&[x, y]) as f32);
            }
        }
        out
    }

    /// `x, y, label` triples of the training points.
    pub fn points(&self) -> Vec<f64> {
        self.data.iter().flat_map(|p| [p.values[0], p.values[1], p.label.map_or(0.0, |l| l.value() as f64)]).collect()
    }

    pub fn tweak(&self, x: f64, y: f64, epsilon: f64, cost: &str) -> Result<TweakView, String> {
        let cost: CostFunction = cost.parse()?;
        let opts = TweakOptions::new(epsilon, cost).map_err(|e| e.to_string())?;
        let p = Instance::new(vec![x, y]);
        if self.ens.predict(&p.values) == Label::Positive {
            return Ok(TweakView {
                status: "already_positive",
                message: Some("the forest already predicts this point positive".into()),
                candidate: None,
                cost: None,
                source_tree: None,
                source_path: None,
                candidates: 0,
                all: vec![],
            });
        }
        let outcome = Tweaker::new(&self.ens).tweak(&p, &opts).map_err(|e| e.to_string())?;
        let all = outcome.candidates().iter().map(|t| [t.candidate.values[0], t.candidate.values[1]]).collect();
        Ok(match &outcome {
            TweakOutcome::Found { best, all_candidates } => TweakView {
                status: "found",
                message: None,
                candidate: Some([best.candidate.values[0], best.candidate.values[1]]),
                cost: best.cost,
                source_tree: Some(best.source_tree),
                source_path: Some(best.source_path),
                candidates: all_candidates.len(),
                all,
            },
            TweakOutcome::NotCovered { reason } => TweakView {
                status: "not_covered",
                message: Some(reason.to_string()),
                candidate: None,
                cost: None,
                source_tree: None,
                source_path: None,
                candidates: 0,
                all,
            },
        })
    }

    /// Coverage of the model-negative training points over the default ε grid.
    pub fn coverage(&self, cost: &str) -> Result<Vec<CoveragePoint>, String> {
        let cost: CostFunction = cost.parse()?;
        let report = Tweaker::new(&self.ens)
            .sweep(&self.data, &DEFAULT_EPSILON_GRID, &[cost], false, None)
            .map_err(|e| e.to_string())?;
        Ok(report
            .rows
            .iter()
            .map(|r| CoveragePoint {
                epsilon: r.epsilon,
                coverage: r.coverage,
                median_cost: r.median_instance_avg_cost,
            })
            .collect())
    }

    pub fn ensemble(&self) -> &TreeEnsemble {
        &self.ens
    }
}

pub fn cell_center(col: usize, row: usize, res: usize, extent: f64) -> (f64, f64) {
    let step = 2.0 * extent / res as f64;
    (-extent + (col as f64 + 0.5) * step, extent - (row as f64 + 0.5) * step)
}

fn to_js<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

#[wasm_bindgen]
pub struct Demo {
    model: Model,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, trees: u32, max_depth: u32, separation: f64) -> Result<Demo, JsError> {
        let model =
            Model::train(seed as u64, trees as usize, max_depth as usize, separation).map_err(|e| JsError::new(&e))?;
        Ok(Demo { model })
    }

    pub fn grid(&self, res: u32, extent: f64) -> Vec<f32> {
        self.model.grid(res as usize, extent)
    }

    pub fn points(&self) -> Vec<f64> {
        self.model.points()
    }

    /// JSON-encoded [`TweakView`].
    pub fn tweak(&self, x: f64, y: f64, epsilon: f64, cost: &str) -> Result<String, JsError> {
        self.model.tweak(x, y, epsilon, cost).map(|v| to_js(&v)).map_err(|e| JsError::new(&e))
    }

    /// JSON-encoded list of [`CoveragePoint`].
    pub fn coverage(&self, cost: &str) -> Result<String, JsError> {
        self.model.coverage(cost).map(|v| to_js(&v)).map_err(|e| JsError::new(&e))
    }
}
