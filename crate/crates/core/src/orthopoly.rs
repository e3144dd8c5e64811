//! Orthonormal polynomials for the measure `w²(x) dx`.
//!
//! The recurrence `x p_k = β_{k+1} p_{k+1} + α_k p_k + β_k p_{k-1}` is
//! generated by the discretised Stieltjes procedure: the measure is replaced
//! by a composite Gauss–Legendre rule on `[-L, L]` and the recurrence is run
//! on node vectors `p_k(x_m) w(x_m) sqrt(g_m)`, which stay bounded for every
//! degree. Since `w²` is even, `α_k` is fixed at zero.

use crate::checks::{ConditionCheck, ConditionReport};
use crate::error::{Error, Result};
use crate::mrs::MrsTable;
use crate::quad::{PanelLayout, PanelRule};
use crate::weights::WeightSpec;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

pub const DEFAULT_PANEL_ORDER: usize = 20;
const STABILITY_TOL: f64 = 1e-10;
const MAX_REFINEMENTS: usize = 4;
const RESCALE: f64 = 1e150;

/// Discrete measure: nodes and `w(x_m) sqrt(g_m)`.
#[derive(Debug, Clone)]
pub struct Measure {
    pub nodes: Vec<f64>,
    pub sqrt_weights: Vec<f64>,
}

impl Measure {
    pub fn new(spec: &WeightSpec, rule: &PanelRule) -> Self {
        let mut nodes = Vec::with_capacity(rule.len());
        let mut sqrt_weights = Vec::with_capacity(rule.len());
        for (&x, &g) in rule.nodes.iter().zip(&rule.weights) {
            let s = spec.weight(x) * g.sqrt();
            // underflowed weights are clamped to zero and dropped
            if s.is_normal() {
                nodes.push(x);
                sqrt_weights.push(s);
            }
        }
        Measure { nodes, sqrt_weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecurrenceTable {
    spec: WeightSpec,
    n_max: usize,
    alpha_k: Vec<f64>,
    /// `beta_k[k - 1]` holds β_k for k = 1..=n_max.
    beta_k: Vec<f64>,
    p0: f64,
    #[serde(rename = "L")]
    radius: f64,
    #[serde(rename = "M")]
    node_count: usize,
    layout: PanelLayout,
    /// Largest |Σ x p_k²| seen while α_k was forced to zero.
    symmetry_drift: f64,
    #[serde(skip)]
    measure: OnceLock<Measure>,
}

impl RecurrenceTable {
    /// Build the recurrence up to degree `n_max`, refining the discretisation
    /// until the β_k are stable to 1e-10 relative.
    pub fn build(spec: &WeightSpec, mrs: &MrsTable, n_max: usize) -> Result<Self> {
        let layout = default_layout(mrs, n_max)?;
        Self::build_with_layout(spec, n_max, layout)
    }

    pub fn build_with_layout(spec: &WeightSpec, n_max: usize, layout: PanelLayout) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::Domain("n_max must be at least 1".into()));
        }
        let mut current = stieltjes(spec, n_max, &layout)?;
        let mut worst = (0usize, f64::INFINITY);
        for _ in 0..MAX_REFINEMENTS {
            let finer = stieltjes(spec, n_max, &current.layout.refined())?;
            worst = (0, 0.0);
            for (k, (b0, b1)) in current.beta_k.iter().zip(&finer.beta_k).enumerate() {
                let change = (b0 - b1).abs() / b1;
                if change > STABILITY_TOL && worst.1 <= STABILITY_TOL {
                    worst = (k + 1, change);
                }
            }
            current = finer;
            if worst.1 <= STABILITY_TOL {
                return Ok(current);
            }
        }
        Err(Error::DiscretizationFailure {
            k: worst.0,
            change: worst.1,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha_k[k]
    }

    /// β_k = γ_{k-1}/γ_k for 1 <= k <= n_max.
    pub fn beta(&self, k: usize) -> f64 {
        assert!(k >= 1 && k <= self.n_max, "beta index {k} outside 1..={}", self.n_max);
        self.beta_k[k - 1]
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta_k
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn layout(&self) -> &PanelLayout {
        &self.layout
    }

    pub fn symmetry_drift(&self) -> f64 {
        self.symmetry_drift
    }

    /// The discrete measure the table was built from.
    pub fn measure(&self) -> &Measure {
        self.measure
            .get_or_init(|| Measure::new(&self.spec, &self.layout.build()))
    }

    fn check_count(&self, m: usize) -> Result<()> {
        if m > self.n_max + 1 {
            return Err(Error::DegreeExceeded {
                requested: m.saturating_sub(1),
                available: self.n_max,
            });
        }
        Ok(())
    }

    /// p_0(x), ..., p_{m-1}(x) by forward recurrence.
    pub fn eval_polys(&self, x: f64, m: usize) -> Result<Vec<f64>> {
        self.check_count(m)?;
        let mut out = vec![0.0; m];
        self.fill_basis(x, 1.0, &mut out);
        Ok(out)
    }

    /// Fill `out[k] = scale · p_k(x)`; `out.len()` must not exceed n_max + 1.
    pub fn fill_basis(&self, x: f64, scale: f64, out: &mut [f64]) {
        let m = out.len();
        if m == 0 {
            return;
        }
        out[0] = scale * self.p0;
        if m > 1 {
            out[1] = (x - self.alpha_k[0]) * out[0] / self.beta_k[0];
        }
        for k in 1..m.saturating_sub(1) {
            out[k + 1] = ((x - self.alpha_k[k]) * out[k] - self.beta_k[k - 1] * out[k - 1]) / self.beta_k[k];
        }
    }

    /// Fill `out[k] = p_k(x) w(x)` without intermediate overflow.
    pub fn fill_weighted_basis(&self, x: f64, out: &mut [f64]) {
        let m = out.len();
        if m == 0 {
            return;
        }
        let mut log_scale = -self.spec.q(x);
        if log_scale == f64::NEG_INFINITY {
            out.fill(0.0);
            return;
        }
        let mut factor = log_scale.exp();
        let (mut prev, mut cur) = (0.0f64, self.p0);
        out[0] = cur * factor;
        for k in 0..m - 1 {
            let beta_k = if k == 0 { 0.0 } else { self.beta_k[k - 1] };
            let next = ((x - self.alpha_k[k]) * cur - beta_k * prev) / self.beta_k[k];
            prev = cur;
            cur = next;
            if cur.abs() > RESCALE {
                cur /= RESCALE;
                prev /= RESCALE;
                log_scale += RESCALE.ln();
                factor = log_scale.exp();
            }
            out[k + 1] = cur * factor;
        }
    }

    /// p_k(x) w(x) for k < m.
    pub fn weighted_basis(&self, x: f64, m: usize) -> Result<Vec<f64>> {
        self.check_count(m)?;
        let mut out = vec![0.0; m];
        self.fill_weighted_basis(x, &mut out);
        Ok(out)
    }

    /// Σ c_k p_k(x) for a coefficient vector of length at most n_max + 1.
    pub fn series(&self, c: &[f64], x: f64) -> Result<f64> {
        self.check_count(c.len())?;
        let (mut prev, mut cur) = (0.0f64, self.p0);
        let mut sum = 0.0;
        for (k, &ck) in c.iter().enumerate() {
            sum += ck * cur;
            if k + 1 < c.len() {
                let beta_k = if k == 0 { 0.0 } else { self.beta_k[k - 1] };
                let next = ((x - self.alpha_k[k]) * cur - beta_k * prev) / self.beta_k[k];
                prev = cur;
                cur = next;
            }
        }
        Ok(sum)
    }

    /// Σ c_k p_k(x) w(x), evaluated with running rescaling so that it stays
    /// finite wherever the product is representable.
    pub fn weighted_series(&self, c: &[f64], x: f64) -> Result<f64> {
        self.check_count(c.len())?;
        let mut log_scale = -self.spec.q(x);
        if log_scale == f64::NEG_INFINITY || c.is_empty() {
            return Ok(0.0);
        }
        let (mut prev, mut cur) = (0.0f64, self.p0);
        let mut sum = 0.0;
        for (k, &ck) in c.iter().enumerate() {
            sum += ck * cur;
            if k + 1 < c.len() {
                let beta_k = if k == 0 { 0.0 } else { self.beta_k[k - 1] };
                let next = ((x - self.alpha_k[k]) * cur - beta_k * prev) / self.beta_k[k];
                prev = cur;
                cur = next;
                if cur.abs() > RESCALE {
                    cur /= RESCALE;
                    prev /= RESCALE;
                    sum /= RESCALE;
                    log_scale += RESCALE.ln();
                }
            }
        }
        Ok(sum * log_scale.exp())
    }

    /// Derivatives `out[k] = scale · p_k'(x)` alongside `vals[k] = scale · p_k(x)`.
    pub fn fill_basis_derivative(&self, x: f64, scale: f64, vals: &mut [f64], out: &mut [f64]) {
        let m = out.len();
        self.fill_basis(x, scale, vals);
        if m == 0 {
            return;
        }
        out[0] = 0.0;
        if m > 1 {
            out[1] = vals[0] / self.beta_k[0];
        }
        for k in 1..m.saturating_sub(1) {
            out[k + 1] = ((x - self.alpha_k[k]) * out[k] + vals[k] - self.beta_k[k - 1] * out[k - 1])
                / self.beta_k[k];
        }
    }

    /// K_m(x, t) = Σ_{k<m} p_k(x) p_k(t), cross-checked against the
    /// Christoffel–Darboux closed form away from the diagonal.
    pub fn cd_kernel(&self, m: usize, x: f64, t: f64) -> Result<f64> {
        if m > self.n_max {
            return Err(Error::DegreeExceeded {
                requested: m,
                available: self.n_max,
            });
        }
        let px = self.eval_polys(x, m + 1)?;
        let pt = self.eval_polys(t, m + 1)?;
        let sum: f64 = px[..m].iter().zip(&pt[..m]).map(|(a, b)| a * b).sum();
        if m >= 1 && (x - t).abs() > 1e-6 * (1.0 + x.abs()) {
            let closed = self.beta(m) * (px[m] * pt[m - 1] - pt[m] * px[m - 1]) / (x - t);
            let kxx: f64 = px[..m].iter().map(|v| v * v).sum();
            let ktt: f64 = pt[..m].iter().map(|v| v * v).sum();
            if (sum - closed).abs() > 1e-8 * (kxx * ktt).sqrt() {
                return Err(Error::KernelMismatch { sum, closed });
            }
        }
        Ok(sum)
    }

    /// λ_m(x) = 1 / Σ_{k<m} p_k(x)².
    pub fn christoffel(&self, m: usize, x: f64) -> Result<f64> {
        let p = self.eval_polys(x, m)?;
        Ok(1.0 / p.iter().map(|v| v * v).sum::<f64>())
    }

    /// Max |G - I| of the Gram matrix of p_0..p_m under the given rule.
    pub fn orthonormality_residual(&self, rule: &PanelRule, m: usize) -> Result<f64> {
        self.check_count(m + 1)?;
        let measure = Measure::new(&self.spec, rule);
        let dim = m + 1;
        let mut gram = vec![0.0; dim * dim];
        let mut row = vec![0.0; dim];
        for (&x, &g) in measure.nodes.iter().zip(rule_sqrt_gl(rule, &measure).iter()) {
            self.fill_weighted_basis(x, &mut row);
            for v in row.iter_mut() {
                *v *= g;
            }
            for i in 0..dim {
                let ri = row[i];
                for j in i..dim {
                    gram[i * dim + j] += ri * row[j];
                }
            }
        }
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[i * dim + j] - target).abs());
            }
        }
        Ok(worst)
    }
}

// sqrt of the plain Gauss–Legendre weights at the retained measure nodes
fn rule_sqrt_gl(rule: &PanelRule, measure: &Measure) -> Vec<f64> {
    let mut out = Vec::with_capacity(measure.len());
    let mut j = 0;
    for (&x, &g) in rule.nodes.iter().zip(&rule.weights) {
        if j < measure.nodes.len() && measure.nodes[j] == x {
            out.push(g.sqrt());
            j += 1;
        }
    }
    out
}

/// Build layout: `L = max(1.5 a_{2 n_max}, certified radius)` and panels
/// fine enough to resolve degree `2 n_max + 1` integrands.
pub fn default_layout(mrs: &MrsTable, n_max: usize) -> Result<PanelLayout> {
    let n = n_max.max(1) as u32;
    let radius = (1.5 * mrs.a(2 * n)?).max(mrs.support_radius(2 * n_max + 1, 2.0)?);
    let width = mrs.a(n)? * 3.0 / (n_max as f64 + 6.0);
    let mut layout = PanelLayout::new(radius, width, DEFAULT_PANEL_ORDER);
    // keep M >= 8 n_max
    while ((2.0 * radius / layout.width).ceil() as usize) * layout.order < 8 * n_max {
        layout.width /= 2.0;
    }
    Ok(layout)
}

/// An independent rule for verification: different order, width, grading
/// ratio and radius from [`default_layout`].
pub fn verification_layout(mrs: &MrsTable, n_max: usize) -> Result<PanelLayout> {
    let base = default_layout(mrs, n_max)?;
    Ok(PanelLayout::new(base.radius * 1.2, base.width * 0.37, 23).with_grading(0.3, 30))
}

fn stieltjes(spec: &WeightSpec, n_max: usize, layout: &PanelLayout) -> Result<RecurrenceTable> {
    let rule = layout.build();
    let measure = Measure::new(spec, &rule);
    if measure.is_empty() {
        return Err(Error::Overflow {
            x: layout.radius,
            limit: spec.max_abs_x(),
        });
    }
    let mu0: f64 = measure.sqrt_weights.iter().map(|s| s * s).sum();
    let norm0 = mu0.sqrt();
    let xs = &measure.nodes;
    let mut prev = vec![0.0; xs.len()];
    let mut cur: Vec<f64> = measure.sqrt_weights.iter().map(|s| s / norm0).collect();
    let mut next = vec![0.0; xs.len()];
    let mut beta_k = Vec::with_capacity(n_max);
    let mut drift = 0.0f64;
    for k in 0..n_max {
        let beta_prev = if k == 0 { 0.0 } else { beta_k[k - 1] };
        let mut alpha = 0.0;
        for i in 0..xs.len() {
            alpha += xs[i] * cur[i] * cur[i];
        }
        drift = drift.max(alpha.abs());
        let mut norm2 = 0.0;
        for i in 0..xs.len() {
            let r = xs[i] * cur[i] - beta_prev * prev[i];
            next[i] = r;
            norm2 += r * r;
        }
        let beta = norm2.sqrt();
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::DiscretizationFailure { k: k + 1, change: f64::NAN });
        }
        for v in next.iter_mut() {
            *v /= beta;
        }
        beta_k.push(beta);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    let node_count = measure.len();
    Ok(RecurrenceTable {
        spec: spec.clone(),
        n_max,
        alpha_k: vec![0.0; n_max + 1],
        beta_k,
        p0: 1.0 / norm0,
        radius: layout.radius,
        node_count,
        layout: layout.clone(),
        symmetry_drift: drift,
        measure: OnceLock::new(),
    })
}

/// `a_m / C <= β_m <= C a_m`: reports min and max of β_m / a_m.
pub fn check_beta_ratio(table: &RecurrenceTable, mrs: &MrsTable, lo: f64, hi: f64) -> Result<ConditionReport> {
    let mut report = ConditionReport::new(format!("beta_m / a_m for {}", table.spec()));
    let mut min = (f64::INFINITY, 0usize);
    let mut max = (0.0f64, 0usize);
    for m in 1..=table.n_max() {
        let r = table.beta(m) / mrs.a(m as u32)?;
        if r < min.0 {
            min = (r, m);
        }
        if r > max.0 {
            max = (r, m);
        }
    }
    report.push(
        ConditionCheck::new("beta_m / a_m lower", min.0 >= lo, min.0, Some(min.1 as f64))
            .with_note("witness_x holds m"),
    );
    report.push(
        ConditionCheck::new("beta_m / a_m upper", max.0 <= hi, max.0, Some(max.1 as f64))
            .with_note("witness_x holds m"),
    );
    Ok(report)
}

/// `(1/C) φ_n w² <= λ_n <= C φ_n w²` on `|x| <= a_n`.
pub fn check_christoffel_sandwich(
    table: &RecurrenceTable,
    mrs: &MrsTable,
    n: usize,
    points: usize,
) -> Result<ConditionReport> {
    let an = mrs.a(n as u32)?;
    let mut report = ConditionReport::new(format!("Christoffel sandwich, n = {n}, {}", table.spec()));
    let mut upper = (0.0f64, 0.0);
    let mut lower = (0.0f64, 0.0);
    let mut buf = vec![0.0; n];
    for i in 0..points {
        let x = an * i as f64 / (points - 1) as f64;
        table.fill_weighted_basis(x, &mut buf);
        // λ_n / w² = 1 / Σ (p_k w)²
        let lambda_over_w2 = 1.0 / buf.iter().map(|v| v * v).sum::<f64>();
        let r = lambda_over_w2 / mrs.varphi(n as u32, x)?;
        if r > upper.0 {
            upper = (r, x);
        }
        if 1.0 / r > lower.0 {
            lower = (1.0 / r, x);
        }
    }
    report.push(ConditionCheck::new("lambda_n <= C varphi_n w^2", upper.0.is_finite(), upper.0, Some(upper.1)));
    report.push(ConditionCheck::new("lambda_n >= varphi_n w^2 / C", lower.0.is_finite(), lower.0, Some(lower.1)));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn hermite(n_max: usize) -> (WeightSpec, MrsTable, RecurrenceTable) {
        let spec = WeightSpec::hermite();
        let mrs = MrsTable::build(spec.clone(), [n_max as u32]).unwrap();
        let table = RecurrenceTable::build(&spec, &mrs, n_max).unwrap();
        (spec, mrs, table)
    }

    /// Orthonormal Hermite values by the classical H_k recurrence.
    fn hermite_oracle(k: usize, x: f64) -> f64 {
        // H_{j+1} = 2x H_j - 2j H_{j-1}, divided through by sqrt(2^j j! sqrt(pi))
        let mut h_prev = 0.0;
        let mut h = PI.powf(-0.25);
        for j in 0..k {
            let next = (x * 2f64.sqrt() * h - (j as f64).sqrt() * h_prev) / ((j + 1) as f64).sqrt();
            h_prev = h;
            h = next;
        }
        h
    }

    #[test]
    fn hermite_betas_and_symmetry() {
        let (_, _, t) = hermite(32);
        for k in 1..=32 {
            let want = (k as f64 / 2.0).sqrt();
            assert!((t.beta(k) - want).abs() < 1e-11 * want, "k = {k}");
        }
        assert!((0..=32).all(|k| t.alpha(k) == 0.0));
        assert!((t.p0() - PI.powf(-0.25)).abs() < 1e-14);
    }

    #[test]
    fn basis_values_match_hermite_oracle() {
        let (_, _, t) = hermite(16);
        let p = t.eval_polys(1.0, 17).unwrap();
        let p2 = (2.0 - 1.0) / (PI.powf(0.25) * 2f64.sqrt());
        assert!((p[2] - p2).abs() < 1e-12);
        for (k, v) in p.iter().enumerate() {
            assert!((v - hermite_oracle(k, 1.0)).abs() < 1e-12 * (1.0 + v.abs()), "k = {k}");
        }
        let at0 = t.eval_polys(0.0, 17).unwrap();
        for k in (1..17).step_by(2) {
            assert_eq!(at0[k], 0.0);
        }
        assert!(matches!(t.eval_polys(0.0, 18), Err(Error::DegreeExceeded { .. })));
    }

    #[test]
    fn weighted_basis_matches_plain_product() {
        let (spec, _, t) = hermite(24);
        for &x in &[0.0, 1.5, -3.2, 7.0] {
            let raw = t.eval_polys(x, 25).unwrap();
            let wb = t.weighted_basis(x, 25).unwrap();
            for k in 0..25 {
                let want = raw[k] * spec.weight(x);
                assert!((wb[k] - want).abs() <= 1e-13 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn series_helpers_agree_with_basis() {
        let (spec, _, t) = hermite(40);
        let c: Vec<f64> = (0..41).map(|k| 1.0 / (1.0 + k as f64)).collect();
        for &x in &[0.0, 0.8, -5.0, 12.0] {
            let p = t.eval_polys(x, 41).unwrap();
            let direct: f64 = c.iter().zip(&p).map(|(a, b)| a * b).sum();
            let s = t.series(&c, x).unwrap();
            assert!((s - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            let ws = t.weighted_series(&c, x).unwrap();
            assert!((ws - direct * spec.weight(x)).abs() <= 1e-12 * (direct * spec.weight(x)).abs().max(1e-300));
        }
        // far out the unweighted product overflows but the weighted one does not
        let far = t.weighted_series(&c, 40.0).unwrap();
        assert!(far.is_finite());
        assert!(t.series(&c[..42.min(c.len())], 0.0).is_ok());
    }

    #[test]
    fn quartic_first_beta_from_moments() {
        let spec = WeightSpec::freud(4.0, 1.0).unwrap();
        let mrs = MrsTable::build(spec.clone(), [8]).unwrap();
        let t = RecurrenceTable::build(&spec, &mrs, 8).unwrap();
        // brute-force moments of exp(-2x^4) by fine midpoint sums
        let h = 1e-4f64;
        let (mut m0, mut m2) = (0.0f64, 0.0f64);
        let mut x = -6.0 + h / 2.0;
        while x < 6.0 {
            let w = (-2.0 * x.powi(4)).exp();
            m0 += w * h;
            m2 += x * x * w * h;
            x += h;
        }
        assert!((t.beta(1) - (m2 / m0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn kernel_forms_agree() {
        let (_, _, t) = hermite(20);
        let k1 = t.cd_kernel(1, 0.3, -1.1).unwrap();
        assert!((k1 - 1.0 / PI.sqrt()).abs() < 1e-14);
        for &(x, y) in &[(0.3, -1.1), (2.0, 2.5), (-4.0, 1.0)] {
            let a = t.cd_kernel(12, x, y).unwrap();
            let b = t.cd_kernel(12, y, x).unwrap();
            assert_eq!(a, b);
        }
        assert!(t.cd_kernel(21, 0.0, 1.0).is_err());
    }

    #[test]
    fn kernel_reproduces_basis() {
        let (_, _, t) = hermite(20);
        let m = 10;
        let x = 0.7;
        let rule = t.layout().build();
        let meas = t.measure();
        let sq = rule_sqrt_gl(&rule, meas);
        for j in [0, 3, 9] {
            let mut acc = 0.0;
            let mut pt = vec![0.0; m];
            for ((&tn, &s), &g) in meas.nodes.iter().zip(&meas.sqrt_weights).zip(&sq) {
                t.fill_basis(tn, 1.0, &mut pt);
                let w2 = s * s / (g * g);
                acc += g * g * t.cd_kernel(m, x, tn).unwrap() * pt[j] * w2;
            }
            let want = t.eval_polys(x, m).unwrap()[j];
            assert!((acc - want).abs() < 1e-8, "j = {j}: {acc} vs {want}");
        }
    }

    #[test]
    fn christoffel_values() {
        let (_, mrs, t) = hermite(16);
        for &x in &[0.0, 1.0, -2.5] {
            assert!((t.christoffel(1, x).unwrap() - PI.sqrt()).abs() < 1e-13);
            let l: Vec<f64> = (1..=16).map(|m| t.christoffel(m, x).unwrap()).collect();
            assert!(l.windows(2).all(|w| w[1] <= w[0]));
        }
        let r = check_christoffel_sandwich(&t, &mrs, 16, 200).unwrap();
        assert!(r.pass() && r.checks.iter().all(|c| c.constant < 50.0), "{r:#?}");
    }

    #[test]
    fn orthonormality_under_independent_rule() {
        for name in WeightSpec::preset_names() {
            let spec = WeightSpec::preset(name).unwrap();
            let mrs = MrsTable::build(spec.clone(), [24]).unwrap();
            let t = RecurrenceTable::build(&spec, &mrs, 24).unwrap();
            let own = t.orthonormality_residual(&t.layout().build(), 24).unwrap();
            assert!(own < 1e-10, "{name}: build residual {own:e}");
            let other = verification_layout(&mrs, 24).unwrap().build();
            let res = t.orthonormality_residual(&other, 24).unwrap();
            assert!(res < 1e-8, "{name}: verification residual {res:e}");
        }
    }

    #[test]
    fn json_round_trip_is_bit_stable() {
        let (_, _, t) = hermite(10);
        let json = t.to_json().unwrap();
        let back = RecurrenceTable::from_json(&json).unwrap();
        assert_eq!(back.betas(), t.betas());
        assert_eq!(back.to_json().unwrap(), json);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["alpha_k", "beta_k", "L", "M"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(back.eval_polys(1.3, 11).unwrap(), t.eval_polys(1.3, 11).unwrap());
    }
}
