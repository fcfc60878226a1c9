//! Browser bindings: eigenvalue search, root counting in a box and the
//! large-`n` predictions. Every entry point takes the problem as a JSON
//! object `{alpha, beta, eta, delta, end0, end1, k0, k1}` where `k0`, `k1`
//! hold the four stiffnesses of a generalized end and are ignored otherwise.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tubespec::asymptotics::{lambda_n_predicted, AsymptoticModel};
use tubespec::model::{EndCondition, PhysicalParams, ProblemSpec};
use tubespec::roots::{find_spectrum, winding_number, SearchRegion, SearchTarget};
use wasm_bindgen::prelude::*;

#[derive(Debug, Deserialize)]
struct DemoSpec {
    alpha: f64,
    beta: f64,
    eta: f64,
    delta: f64,
    end0: String,
    end1: String,
    #[serde(default)]
    k0: Option<[f64; 4]>,
    #[serde(default)]
    k1: Option<[f64; 4]>,
}

fn end(name: &str, k: Option<[f64; 4]>) -> Result<EndCondition, String> {
    Ok(match name {
        "clamped" => EndCondition::Clamped,
        "free" => EndCondition::Free,
        "hinged" => EndCondition::Hinged,
        "guided" => EndCondition::Guided,
        "generalized" => {
            let [a, b, c, d] = k.ok_or("a generalized end needs four stiffnesses")?;
            EndCondition::generalized(a, b, c, d)
        }
        other => return Err(format!("unknown end condition '{other}'")),
    })
}

fn parse_spec(json: &str) -> Result<ProblemSpec, String> {
    let d: DemoSpec = serde_json::from_str(json).map_err(|e| e.to_string())?;
    ProblemSpec::new(PhysicalParams::new(d.alpha, d.beta, d.eta, d.delta), end(&d.end0, d.k0)?, end(&d.end1, d.k1)?)
        .validate()
        .map_err(|e| e.to_string())
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Point {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Point {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictionRow {
    pub n: u32,
    pub predicted: Point,
    pub computed: Option<Point>,
}

/// Upper-half-plane eigenvalues of the first `pairs` conjugate pairs, as a JSON array of points.
pub fn spectrum_json(spec: &str, pairs: usize) -> Result<String, String> {
    let spec = parse_spec(spec)?;
    let found = find_spectrum(&spec, &SearchTarget::FirstPairs(pairs)).map_err(|e| e.to_string())?;
    let points: Vec<Point> = found.records.iter().filter(|r| r.lambda.im >= 0.0).map(|r| r.lambda.into()).collect();
    serde_json::to_string(&points).map_err(|e| e.to_string())
}

/// Number of eigenvalues, with multiplicity, inside the box.
pub fn count_in_box(spec: &str, re0: f64, re1: f64, im0: f64, im1: f64) -> Result<i64, String> {
    let spec = parse_spec(spec)?;
    let region = SearchRegion::lambda(Complex64::new(re0.min(re1), im0.min(im1)), Complex64::new(re0.max(re1), im0.max(im1)));
    winding_number(&region, &spec).map_err(|e| e.to_string())
}

/// Predicted eigenvalues for `n = 1..=n_max` next to the computed branch, when one was found.
pub fn predictions_json(spec: &str, n_max: u32) -> Result<String, String> {
    let spec = parse_spec(spec)?;
    let model = AsymptoticModel::for_spec(&spec);
    let ns: Vec<u32> = (1..=n_max).collect();
    let computed = tubespec::roots::branch_spectrum(&spec, &ns).map_err(|e| e.to_string())?;
    let rows: Vec<PredictionRow> = computed
        .into_iter()
        .map(|(n, r)| PredictionRow {
            n,
            predicted: lambda_n_predicted(n, &model, spec.alpha()).value.into(),
            computed: r.map(|r| r.lambda.into()),
        })
        .collect();
    serde_json::to_string(&rows).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn spectrum(spec: &str, pairs: usize) -> Result<String, JsValue> {
    spectrum_json(spec, pairs).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn count(spec: &str, re0: f64, re1: f64, im0: f64, im1: f64) -> Result<f64, JsValue> {
    count_in_box(spec, re0, re1, im0, im1).map(|w| w as f64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn predictions(spec: &str, n_max: u32) -> Result<String, JsValue> {
    predictions_json(spec, n_max).map_err(|e| JsValue::from_str(&e))
}
