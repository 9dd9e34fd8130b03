use lcm_dilation::ando::{assemble, AndoMode, AndoOptions};
use lcm_dilation::linalg::scalar;
use lcm_dilation::regularity::{check_mixed_cartesian, check_mixed_free, is_star_regular, Family};
use lcm_dilation::{MonoidSpec, Representation};
use serde::Serialize;

fn parse_spec(monoid: &str) -> Result<MonoidSpec, String> {
    monoid.parse().map_err(|e: lcm_dilation::Error| e.to_string())
}

/// Generator 0 is set to `s`, all others to `t`, for `s, t` on a uniform grid
/// over `[0, 1]`; each cell holds the smallest `Z_F` eigenvalue over the
/// generator subsets. Negative cells have no *-regular dilation.
pub fn regularity_grid(monoid: &str, steps: usize) -> Result<Vec<f64>, String> {
    let spec = parse_spec(monoid)?;
    if spec.rank() == 0 {
        return Err("monoid has no generators".into());
    }
    let steps = steps.clamp(2, 200);
    let at = |i: usize| i as f64 / (steps - 1) as f64;
    let mut out = Vec::with_capacity(steps * steps);
    for i in 0..steps {
        for j in 0..steps {
            let gens = (0..spec.rank()).map(|g| scalar(if g == 0 { at(i) } else { at(j) }, 1)).collect();
            let rep = Representation::new(spec.clone(), 1, gens).map_err(|e| e.to_string())?;
            let report = is_star_regular(&rep, Family::Generators, 1e-12).map_err(|e| e.to_string())?;
            out.push(report.min_eigenvalue());
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct LcmView {
    monoid: String,
    p: String,
    q: String,
    lcm: Option<String>,
    /// `p⁻¹(p ∨ q)` and `q⁻¹(p ∨ q)`.
    quotients: Option<(String, String)>,
    ball: Vec<String>,
}

pub fn lcm_explorer(monoid: &str, p: &str, q: &str, radius: usize) -> Result<String, String> {
    let spec = parse_spec(monoid)?;
    let err = |e: lcm_dilation::Error| e.to_string();
    let (pe, qe) = (spec.parse_element(p).map_err(err)?, spec.parse_element(q).map_err(err)?);
    let r = spec.right_lcm(&pe, &qe).map_err(err)?;
    let quotients = match &r {
        Some(r) => {
            let a = spec.left_divide(&pe, r).map_err(err)?.expect("p divides p v q");
            let b = spec.left_divide(&qe, r).map_err(err)?.expect("q divides p v q");
            Some((spec.format_element(&a), spec.format_element(&b)))
        }
        None => None,
    };
    let view = LcmView {
        monoid: spec.to_string(),
        p: spec.format_element(&pe),
        q: spec.format_element(&qe),
        lcm: r.as_ref().map(|r| spec.format_element(r)),
        quotients,
        ball: spec.ball(radius.min(6)).iter().map(|x| spec.format_element(x)).collect(),
    };
    Ok(serde_json::to_string(&view).expect("serializable"))
}

#[derive(Serialize)]
struct AndoView {
    monoid: String,
    hypotheses: bool,
    min_eigenvalue: f64,
    valid_degree: usize,
    model_dim: usize,
    checks: Vec<(String, f64, bool)>,
    overall: bool,
}

/// Scalar `(S₁, S₂, T)` over `NA(2) x F(k)` or `NA(2) * F(k)` with `k = t.len()`.
pub fn ando_residuals(mode: &str, s1: f64, s2: f64, t: &[f64], radius: usize, copies: usize) -> Result<String, String> {
    let mode = match mode {
        "cartesian" => AndoMode::Cartesian,
        "free" => AndoMode::Free,
        other => return Err(format!("unknown mode {other:?}")),
    };
    let (radius, copies) = (radius.clamp(2, 4), copies.clamp(1, 3));
    let p = match t.len() {
        0 => MonoidSpec::Trivial,
        1 => MonoidSpec::FreeAbelian(1),
        k => MonoidSpec::Free(k.min(2)),
    };
    let rep_t = Representation::new(p.clone(), 1, t.iter().take(2).map(|&x| scalar(x, 1)).collect()).map_err(|e| e.to_string())?;
    let (s1, s2) = (scalar(s1, 1), scalar(s2, 1));
    let (two, pspec) = (MonoidSpec::FreeAbelian(2), p.clone());
    let monoid = match mode {
        AndoMode::Cartesian => MonoidSpec::cartesian(two, pspec),
        AndoMode::Free => MonoidSpec::free_product(two, pspec),
    };
    let mut worst = f64::INFINITY;
    for s in [&s1, &s2] {
        let r = match mode {
            AndoMode::Cartesian => check_mixed_cartesian(s, &rep_t, 1e-8),
            AndoMode::Free => check_mixed_free(s, &rep_t, 1e-8),
        }
        .map_err(|e| e.to_string())?;
        worst = worst.min(r.min_eigenvalue());
    }
    let mut view = AndoView {
        monoid: monoid.to_string(),
        hypotheses: worst >= -1e-8,
        min_eigenvalue: worst,
        valid_degree: 0,
        model_dim: 0,
        checks: Vec::new(),
        overall: false,
    };
    if view.hypotheses {
        let result = assemble(mode, &s1, &s2, &rep_t, AndoOptions::new(radius, copies)).map_err(|e| e.to_string())?;
        view.valid_degree = result.valid_degree;
        view.model_dim = result.dims.model;
        view.checks = result.report.checks.iter().map(|c| (c.name.clone(), c.residual, c.pass)).collect();
        view.overall = result.report.overall;
    }
    Ok(serde_json::to_string(&view).expect("serializable"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn grid_matches_closed_form_on_na2() {
        // scalar pair: Z_{a,b} = (1 - s²)(1 - t²) is the smallest entry
        let g = regularity_grid("NA(2)", 5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let (s, t) = (i as f64 / 4.0, j as f64 / 4.0);
                let want = (1.0 - s * s).min(1.0 - t * t).min((1.0 - s * s) * (1.0 - t * t));
                assert!((g[i * 5 + j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_free_row_condition() {
        // F(2) with both generators t: Z_{a,b} = 1 - 2t²
        let g = regularity_grid("F(2)", 3).unwrap();
        assert!((g[2 * 3 + 2] - (1.0 - 2.0)).abs() < 1e-12);
        assert!(g[1 * 3 + 1] > 0.0);
    }

    #[test]
    fn lcm_view() {
        let v: Value = serde_json::from_str(&lcm_explorer("NA(2)", "aab", "ab", 1).unwrap()).unwrap();
        assert_eq!(v["lcm"], "aab");
        assert_eq!(v["ball"].as_array().unwrap().len(), 3);
        let v: Value = serde_json::from_str(&lcm_explorer("F(2)", "a", "b", 0).unwrap()).unwrap();
        assert!(v["lcm"].is_null());
        assert!(lcm_explorer("F(2)", "z", "a", 1).is_err());
    }

    #[test]
    fn ando_scalar_runs() {
        let v: Value = serde_json::from_str(&ando_residuals("cartesian", 0.5, 0.3, &[], 3, 2).unwrap()).unwrap();
        assert_eq!(v["overall"], true);
        let v: Value = serde_json::from_str(&ando_residuals("free", 0.9, 0.3, &[0.5], 3, 2).unwrap()).unwrap();
        // 1 - 0.25 - 0.81 < 0
        assert_eq!(v["hypotheses"], false);
        assert!(ando_residuals("sideways", 0.1, 0.1, &[], 3, 2).is_err());
    }
}
