//! Fourier coefficients, partial sums and de la Vallée Poussin means.
//!
//! `v_n(f) = (1/n) Σ_{j=n+1}^{2n} s_j(f)` is applied in coefficient space as
//! a taper: coefficient `k` appears in `s_j` for every `j > k`, so its weight
//! is 1 for `k <= n` and `(2n - k)/n` for `n < k < 2n`.

mod lebesgue;
mod targets;

pub use lebesgue::{vp_lebesgue_function, LebesgueFunctional, LebesgueSup, Multiplier};
pub use targets::{Growth, TargetFn};

use crate::error::{Error, Result};
use crate::orthopoly::RecurrenceTable;
use crate::quad::PanelRule;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const CHUNK: usize = 512;
const COEFF_TOL: f64 = 1e-9;
const MAX_REFINEMENTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoeffs {
    pub c: Vec<f64>,
    /// Truncation radius of the quadrature.
    pub radius: f64,
    pub nodes: usize,
    /// Largest coefficient change under the last panel halving.
    pub refinement_change: f64,
}

impl ExpansionCoeffs {
    /// Wrap a known coefficient vector (e.g. a polynomial in the `p_k` basis).
    pub fn from_vec(c: Vec<f64>) -> Self {
        ExpansionCoeffs {
            c,
            radius: 0.0,
            nodes: 0,
            refinement_change: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.c)
    }
}

pub(crate) fn norm2(c: &[f64]) -> f64 {
    c.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `c_k = ∫ f p_k w²` for `k < count`.
pub fn fourier_coeffs(table: &RecurrenceTable, f: &TargetFn, count: usize) -> Result<ExpansionCoeffs> {
    let spec = table.spec().clone();
    let breaks = f.breakpoints(table.radius());
    fourier_coeffs_fw(table, &|x| f.eval_fw(&spec, x), &breaks, count)
}

/// Coefficients from a closure returning `f(x) w(x)`, with optional
/// breakpoints where it is not smooth.
pub fn fourier_coeffs_fw(
    table: &RecurrenceTable,
    fw: &(dyn Fn(f64) -> f64 + Sync),
    breakpoints: &[f64],
    count: usize,
) -> Result<ExpansionCoeffs> {
    if count > table.n_max() + 1 {
        return Err(Error::DegreeExceeded {
            requested: count.saturating_sub(1),
            available: table.n_max(),
        });
    }
    let mut layout = table.layout().clone().with_breakpoints(breakpoints.iter().copied());
    let mut rule = layout.build();
    let mut c = project(table, fw, &rule, count);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_REFINEMENTS {
        layout = layout.refined();
        rule = layout.build();
        let next = project(table, fw, &rule, count);
        change = c.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        c = next;
        if change <= COEFF_TOL * norm2(&c).max(f64::MIN_POSITIVE) {
            return Ok(ExpansionCoeffs {
                c,
                radius: layout.radius,
                nodes: rule.len(),
                refinement_change: change,
            });
        }
    }
    Err(Error::QuadratureFailure(format!(
        "coefficients changed by {change:e} under the last refinement ({} nodes)",
        rule.len()
    )))
}

fn project(table: &RecurrenceTable, fw: &(dyn Fn(f64) -> f64 + Sync), rule: &PanelRule, count: usize) -> Vec<f64> {
    let idx: Vec<usize> = (0..rule.len()).collect();
    let partials: Vec<Vec<f64>> = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; count];
            let mut buf = vec![0.0; count];
            for &i in chunk {
                let x = rule.nodes[i];
                let v = fw(x);
                if v == 0.0 {
                    continue;
                }
                table.fill_weighted_basis(x, &mut buf);
                let s = v * rule.weights[i];
                for (a, b) in acc.iter_mut().zip(&buf) {
                    *a += s * b;
                }
            }
            acc
        })
        .collect();
    let mut c = vec![0.0; count];
    for part in partials {
        for (a, b) in c.iter_mut().zip(part) {
            *a += b;
        }
    }
    c
}

/// `s_m(f)(x) = Σ_{k<m} c_k p_k(x)`.
pub fn partial_sum(coeffs: &ExpansionCoeffs, table: &RecurrenceTable, m: usize, x: f64) -> Result<f64> {
    if m > coeffs.len() {
        return Err(Error::DegreeExceeded {
            requested: m,
            available: coeffs.len(),
        });
    }
    table.series(&coeffs.c[..m], x)
}

/// Coefficients `d_0, ..., d_{2n-1}` of `v_n` in the `p_k` basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VpPolynomial {
    pub n: usize,
    pub d: Vec<f64>,
}

impl VpPolynomial {
    pub fn coefficients(&self) -> &[f64] {
        &self.d
    }
}

/// Multiplier applied to `c_k` by `v_n`.
pub fn taper(n: usize, k: usize) -> f64 {
    if k <= n {
        1.0
    } else if k < 2 * n {
        (2 * n - k) as f64 / n as f64
    } else {
        0.0
    }
}

pub fn vp_mean(coeffs: &ExpansionCoeffs, n: usize) -> Result<VpPolynomial> {
    vp_from_coeffs(&coeffs.c, n)
}

pub fn vp_from_coeffs(c: &[f64], n: usize) -> Result<VpPolynomial> {
    if n == 0 {
        return Err(Error::Domain("v_n needs n >= 1".into()));
    }
    if c.len() < 2 * n {
        return Err(Error::DegreeExceeded {
            requested: 2 * n - 1,
            available: c.len().saturating_sub(1),
        });
    }
    let d = (0..2 * n).map(|k| taper(n, k) * c[k]).collect();
    Ok(VpPolynomial { n, d })
}

/// `(1/n) Σ_{j=n+1}^{2n} s_j(f)(x)` summed term by term.
pub fn vp_literal_average(c: &[f64], table: &RecurrenceTable, n: usize, x: f64) -> Result<f64> {
    if n == 0 || c.len() < 2 * n {
        return Err(Error::DegreeExceeded {
            requested: 2 * n,
            available: c.len(),
        });
    }
    let p = table.eval_polys(x, 2 * n)?;
    let mut total = 0.0;
    for j in n + 1..=2 * n {
        let s_j: f64 = c[..j].iter().zip(&p[..j]).map(|(a, b)| a * b).sum();
        total += s_j;
    }
    Ok(total / n as f64)
}

pub fn vp_eval(vp: &VpPolynomial, table: &RecurrenceTable, x: f64) -> Result<f64> {
    table.series(&vp.d, x)
}

/// `v_n(f)(x) w(x)`.
pub fn vp_eval_weighted(vp: &VpPolynomial, table: &RecurrenceTable, x: f64) -> Result<f64> {
    table.weighted_series(&vp.d, x)
}

/// Coefficients of `v_n'` in the `p_k` basis.
pub fn vp_derivative(vp: &VpPolynomial, table: &RecurrenceTable) -> Result<Vec<f64>> {
    derivative_coeffs(&vp.d, table)
}

/// Coefficients of `P'` for `P = Σ c_k p_k`, by projecting the
/// differentiated recurrence back onto the basis with the build measure.
/// The result is verified against central differences of `P w`.
pub fn derivative_coeffs(c: &[f64], table: &RecurrenceTable) -> Result<Vec<f64>> {
    let m = c.len();
    if m > table.n_max() + 1 {
        return Err(Error::DegreeExceeded {
            requested: m.saturating_sub(1),
            available: table.n_max(),
        });
    }
    if m <= 1 {
        return Ok(vec![0.0; m.saturating_sub(1).max(1)]);
    }
    let out_len = m - 1;
    let measure = table.measure();
    let idx: Vec<usize> = (0..measure.len()).collect();
    let partials: Vec<Vec<f64>> = idx
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; out_len];
            let mut vals = vec![0.0; m];
            let mut ders = vec![0.0; m];
            for &i in chunk {
                let s = measure.sqrt_weights[i];
                table.fill_basis_derivative(measure.nodes[i], s, &mut vals, &mut ders);
                let dv: f64 = c.iter().zip(&ders).map(|(a, b)| a * b).sum();
                for (a, b) in acc.iter_mut().zip(&vals) {
                    *a += dv * b;
                }
            }
            acc
        })
        .collect();
    let mut e = vec![0.0; out_len];
    for part in partials {
        for (a, b) in e.iter_mut().zip(part) {
            *a += b;
        }
    }
    let residual = derivative_residual(c, &e, table)?;
    if residual > 1e-6 {
        return Err(Error::ConvergenceFailure(format!(
            "derivative projection disagrees with central differences by {residual:e}"
        )));
    }
    Ok(e)
}

/// Max over a grid of `|(P' w)(x) - FD(x)|` relative to `max |P' w|`, where
/// the fourth-order central difference acts on `P w` and `Q' P w` restores `P' w`.
pub fn derivative_residual(c: &[f64], dc: &[f64], table: &RecurrenceTable) -> Result<f64> {
    let spec = table.spec();
    let radius = table.radius() / 1.5;
    let h = 1e-3 * radius / (c.len() as f64 + 1.0);
    let points = 257;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 1..=points {
        let x = radius * i as f64 / points as f64;
        let exact = table.weighted_series(dc, x)?;
        let g = |s: f64| table.weighted_series(c, x + s * h);
        let diff = (8.0 * (g(1.0)? - g(-1.0)?) - (g(2.0)? - g(-2.0)?)) / (12.0 * h);
        let fd = diff + spec.eval_q(x)?.qp * g(0.0)?;
        worst = worst.max((fd - exact).abs());
        scale = scale.max(exact.abs());
    }
    if scale == 0.0 {
        return Ok(worst);
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrs::MrsTable;
    use crate::weights::WeightSpec;
    use std::f64::consts::PI;

    fn hermite(n_max: usize) -> RecurrenceTable {
        let spec = WeightSpec::hermite();
        let mrs = MrsTable::build(spec.clone(), [n_max as u32]).unwrap();
        RecurrenceTable::build(&spec, &mrs, n_max).unwrap()
    }

    #[test]
    fn coefficients_of_identity_and_basis() {
        let t = hermite(24);
        let c = fourier_coeffs(&t, &TargetFn::Poly(vec![0.0, 1.0]), 20).unwrap();
        let c1 = PI.powf(0.25) / 2f64.sqrt();
        assert!((c.c[1] - c1).abs() < 1e-12);
        assert!(c.c.iter().enumerate().all(|(k, v)| k == 1 || v.abs() < 1e-12));
        let basis = fourier_coeffs_fw(&t, &|x| t.weighted_basis(x, 4).unwrap()[3], &[], 12).unwrap();
        for (k, v) in basis.c.iter().enumerate() {
            let want = if k == 3 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-10, "k = {k}");
        }
        let even = fourier_coeffs(&t, &TargetFn::Abs, 20).unwrap();
        let norm = even.norm();
        assert!(even.c.iter().skip(1).step_by(2).all(|v| v.abs() < 1e-12 * norm));
        assert!(fourier_coeffs(&t, &TargetFn::Sin, 26).is_err());
    }

    #[test]
    fn taper_matches_literal_average() {
        let t = hermite(40);
        let c = fourier_coeffs(&t, &TargetFn::Runge, 40).unwrap();
        for n in [1, 3, 8, 20] {
            let vp = vp_mean(&c, n).unwrap();
            assert_eq!(vp.d.len(), 2 * n);
            assert!((vp.d[2 * n - 1] - c.c[2 * n - 1] / n as f64).abs() < 1e-16);
            for &x in &[0.0, 0.37, -1.9, 3.3] {
                let a = vp_eval(&vp, &t, x).unwrap();
                let b = vp_literal_average(&c.c, &t, n, x).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300), "n {n} x {x}");
            }
        }
    }

    #[test]
    fn vp_of_next_basis_element_is_scaled() {
        let n = 6;
        let mut c = vec![0.0; 2 * n];
        c[n + 1] = 1.0;
        let vp = vp_from_coeffs(&c, n).unwrap();
        assert!((vp.d[n + 1] - (n as f64 - 1.0) / n as f64).abs() < 1e-15);
        assert!(vp_from_coeffs(&c, 7).is_err());
    }

    #[test]
    fn partial_sums_and_parseval_tail() {
        let t = hermite(96);
        let c = fourier_coeffs(&t, &TargetFn::GaussBump { center: 0.5, width: 0.8 }, 97).unwrap();
        assert!((partial_sum(&c, &t, 1, 2.0).unwrap() - c.c[0] * t.p0()).abs() < 1e-15);
        let m = 10;
        // ∫ (f - s_m)² w² against Σ_{k>=m} c_k²
        let rule = t.layout().build();
        let spec = t.spec().clone();
        let f = TargetFn::GaussBump { center: 0.5, width: 0.8 };
        let lhs = rule.integrate(|x| {
            let fw = f.eval_fw(&spec, x);
            let sw = t.weighted_series(&c.c[..m], x).unwrap();
            (fw - sw).powi(2)
        });
        let rhs: f64 = c.c[m..].iter().map(|v| v * v).sum();
        assert!((lhs - rhs).abs() < 1e-8, "{lhs} vs {rhs}");
    }

    #[test]
    fn derivative_of_first_basis_element() {
        let t = hermite(20);
        let mut c = vec![0.0; 4];
        c[1] = 1.0;
        let d = derivative_coeffs(&c, &t).unwrap();
        // p_1' = sqrt(2) pi^{-1/4} = (sqrt(2) pi^{-1/4} / p_0) p_0
        let slope = d[0] * t.p0();
        assert!((slope - 2f64.sqrt() * PI.powf(-0.25)).abs() < 1e-10);
        assert!(d[1..].iter().all(|v| v.abs() < 1e-10));
        let constant = derivative_coeffs(&[1.0, 0.0, 0.0], &t).unwrap();
        assert!(constant.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn derivative_agrees_with_differences_for_smooth_target() {
        let t = hermite(64);
        let c = fourier_coeffs(&t, &TargetFn::Sin, 64).unwrap();
        let vp = vp_mean(&c, 16).unwrap();
        let d = vp_derivative(&vp, &t).unwrap();
        assert!(derivative_residual(&vp.d, &d, &t).unwrap() < 1e-7);
        // sin' = cos, and v_16 of sin is essentially exact
        let x: f64 = 0.7;
        assert!((t.series(&d, x).unwrap() - x.cos()).abs() < 1e-9);
    }
}
