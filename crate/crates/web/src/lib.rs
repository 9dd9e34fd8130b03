//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each export has a plain Rust counterpart in [`demo`] so the logic can be
//! tested natively.

use wasm_bindgen::prelude::*;

pub mod demo;

fn js_err(e: String) -> JsError {
    JsError::new(&e)
}

/// Minimum `Z_F` eigenvalue on a `steps × steps` grid of scalar
/// representations, row-major with `s` along rows. See [`demo::regularity_grid`].
#[wasm_bindgen(js_name = regularityGrid)]
pub fn regularity_grid(monoid: &str, steps: usize) -> Result<Vec<f64>, JsError> {
    demo::regularity_grid(monoid, steps).map_err(js_err)
}

/// JSON with the normal forms of `p`, `q`, their right LCM and the ball.
#[wasm_bindgen(js_name = lcmExplorer)]
pub fn lcm_explorer(monoid: &str, p: &str, q: &str, radius: usize) -> Result<String, JsError> {
    demo::lcm_explorer(monoid, p, q, radius).map_err(js_err)
}

/// JSON residual table of a scalar Ando run.
#[wasm_bindgen(js_name = andoResiduals)]
pub fn ando_residuals(mode: &str, s1: f64, s2: f64, t: Vec<f64>, radius: usize, copies: usize) -> Result<String, JsError> {
    demo::ando_residuals(mode, s1, s2, &t, radius, copies).map_err(js_err)
}
