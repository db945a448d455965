//! Browser bindings for a 2-D playground of soft-assignment VLAD pooling.
//!
//! The page places anchors and descriptors in the plane. Three operations
//! are exported: coloring the plane by soft assignment, pooling a point set
//! with VLAD / average / max pooling, and fitting anchors with k-means.
//! Each has a plain Rust counterpart so it can be tested natively.

use actionvlad::codebook::{kmeans, KMeansOptions};
use actionvlad::{
    actionvlad_descriptor, actionvlad_forward, assignment_map, average_pool, max_pool, soft_assign,
    Codebook, Error, FeatureMap, Result,
};
use serde_json::json;
use wasm_bindgen::prelude::*;

const PALETTE: [[u8; 3]; 8] = [
    [230, 85, 13],
    [49, 130, 189],
    [49, 163, 84],
    [117, 107, 177],
    [222, 45, 38],
    [253, 174, 107],
    [99, 99, 99],
    [158, 202, 225],
];

/// RGB color of anchor `k`.
pub fn anchor_color(k: usize) -> [u8; 3] {
    PALETTE[k % PALETTE.len()]
}

fn pairs(xy: &[f64], what: &str) -> Result<usize> {
    if !xy.len().is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("{what}: odd coordinate count {}", xy.len())));
    }
    Ok(xy.len() / 2)
}

fn codebook(anchors: &[f64], alpha: f64) -> Result<Codebook> {
    Codebook::new(pairs(anchors, "anchors")?, 2, anchors.to_vec(), alpha)
}

fn points(xy: &[f64]) -> Result<FeatureMap> {
    FeatureMap::new(1, pairs(xy, "points")?, 2, xy.to_vec())
}

/// RGBA image of the square `[-extent, extent]²` (y pointing up), each
/// pixel colored by the assignment-weighted mix of anchor colors.
pub fn field_rgba(anchors: &[f64], alpha: f64, width: usize, height: usize, extent: f64) -> Result<Vec<u8>> {
    let cb = codebook(anchors, alpha)?;
    let mut out = Vec::with_capacity(width * height * 4);
    for py in 0..height {
        let y = extent * (1.0 - 2.0 * (py as f64 + 0.5) / height as f64);
        for px in 0..width {
            let x = extent * (2.0 * (px as f64 + 0.5) / width as f64 - 1.0);
            let p = soft_assign(&[x, y], &cb)?;
            let mut rgb = [0.0f64; 3];
            for (k, pk) in p.iter().enumerate() {
                for (c, v) in rgb.iter_mut().zip(anchor_color(k)) {
                    *c += pk * v as f64;
                }
            }
            out.extend(rgb.iter().map(|c| c.round().clamp(0.0, 255.0) as u8));
            out.push(255);
        }
    }
    Ok(out)
}

/// Pools a set of 2-D descriptors three ways. The JSON object holds the
/// normalized `vlad` descriptor, its un-normalized `residuals` (one `[x, y]`
/// sum per anchor), the `avg` and `max` descriptors, the hard `assignments`
/// of each point and the soft assignment `mass` per anchor.
pub fn compare_pooling(xy: &[f64], anchors: &[f64], alpha: f64) -> Result<String> {
    let cb = codebook(anchors, alpha)?;
    let f = points(xy)?;
    let raw = actionvlad_forward(&f, &cb)?;
    let vlad = actionvlad_descriptor(&f, &cb)?;
    let mut mass = vec![0.0; cb.k()];
    for x in f.descriptors() {
        for (m, p) in mass.iter_mut().zip(soft_assign(x, &cb)?) {
            *m += p;
        }
    }
    let residuals: Vec<&[f64]> = raw.columns().collect();
    Ok(json!({
        "vlad": vlad.values(),
        "residuals": residuals,
        "avg": average_pool(&f),
        "max": max_pool(&f),
        "assignments": assignment_map(&f, &cb)?,
        "mass": mass,
    })
    .to_string())
}

/// k-means centers of a 2-D point set, flattened.
pub fn fit_anchors(xy: &[f64], k: usize, seed: u64) -> Result<Vec<f64>> {
    pairs(xy, "points")?;
    let km = kmeans(xy, 2, k, KMeansOptions { max_iters: 100, seed })?;
    Ok((0..k).flat_map(|i| km.center(i).to_vec()).collect())
}

fn js(e: actionvlad::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = assignmentField)]
pub fn assignment_field(
    anchors: &[f64],
    alpha: f64,
    width: usize,
    height: usize,
    extent: f64,
) -> std::result::Result<Vec<u8>, JsError> {
    field_rgba(anchors, alpha, width, height, extent).map_err(js)
}

#[wasm_bindgen(js_name = poolCompare)]
pub fn pool_compare(xy: &[f64], anchors: &[f64], alpha: f64) -> std::result::Result<String, JsError> {
    compare_pooling(xy, anchors, alpha).map_err(js)
}

#[wasm_bindgen(js_name = kmeansAnchors)]
pub fn kmeans_anchors(xy: &[f64], k: usize, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
    fit_anchors(xy, k, seed as u64).map_err(js)
}

#[wasm_bindgen(js_name = anchorColor)]
pub fn anchor_color_js(k: usize) -> Vec<u8> {
    anchor_color(k).to_vec()
}
