//! Mhaskar–Rakhmanov–Saff numbers and the auxiliary functions built on them.
//!
//! `a_n` solves `n = (2/π) ∫_0^1 a u Q'(a u) (1 - u²)^{-1/2} du`. With
//! `u = sin θ` the Chebyshev weight disappears and the integral becomes
//! `(2/π) ∫_0^{π/2} a sin θ Q'(a sin θ) dθ`, which we evaluate with
//! Gauss–Legendre panels graded geometrically towards `θ = 0`, where
//! `Q'` is only finitely smooth for non-integer exponents.

use crate::checks::{log_log_slope, ConditionCheck, ConditionReport};
use crate::error::{Error, Result};
use crate::quad::{brent, PanelRule};
use crate::weights::WeightSpec;
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

pub const DEFAULT_QUAD_ORDER: usize = 20;
const GRADING_RATIO: f64 = 0.25;
const GRADING_LEVELS: usize = 26;
const MAX_DOUBLINGS: usize = 4;

fn theta_rule(order: usize) -> PanelRule {
    let mut edges: Vec<f64> = (0..=GRADING_LEVELS)
        .map(|j| FRAC_PI_2 * GRADING_RATIO.powi(j as i32))
        .collect();
    // a few extra panels near u = 1 where Erdős integrands are steep
    for k in 1..4 {
        edges.push(FRAC_PI_2 * (0.25 + 0.1875 * k as f64));
    }
    edges.push(0.0);
    edges.sort_by(|a, b| a.total_cmp(b));
    PanelRule::from_edges(&edges, order)
}

/// Right-hand side of the MRS equation at `a`.
fn mrs_integral(spec: &WeightSpec, rule: &PanelRule, a: f64) -> Result<f64> {
    let mut total = 0.0;
    for (&theta, &w) in rule.nodes.iter().zip(&rule.weights) {
        let x = a * theta.sin();
        total += w * x * spec.eval_q(x)?.qp;
    }
    Ok(total / FRAC_PI_2)
}

/// Right-hand side of the MRS equation evaluated with the given order.
pub fn mrs_rhs(spec: &WeightSpec, a: f64, quad_order: usize) -> Result<f64> {
    mrs_integral(spec, &theta_rule(quad_order), a)
}

/// Solve the MRS equation for (possibly non-integer) `n >= 1`.
pub fn mrs_number(spec: &WeightSpec, n: f64, quad_order: usize) -> Result<f64> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Domain(format!("MRS index must be positive, got {n}")));
    }
    let mut order = quad_order.max(2);
    let mut last = None;
    for _ in 0..=MAX_DOUBLINGS {
        let rule = theta_rule(order);
        let a = solve_with_rule(spec, &rule, n)?;
        let fine = mrs_integral(spec, &theta_rule(2 * order), a)?;
        let coarse = mrs_integral(spec, &rule, a)?;
        if (fine - coarse).abs() <= 1e-13 * fine.abs() {
            return Ok(a);
        }
        last = Some(a);
        order *= 2;
    }
    Err(Error::ConvergenceFailure(format!(
        "MRS quadrature did not stabilise for n = {n} (last a = {last:?})"
    )))
}

fn solve_with_rule(spec: &WeightSpec, rule: &PanelRule, n: f64) -> Result<f64> {
    let limit = spec.max_abs_x();
    let g = |a: f64| mrs_integral(spec, rule, a).map(|v| v - n);
    let (mut lo, mut hi) = (1.0f64, 2.0f64.min(limit));
    let mut g_lo = g(lo)?;
    while g_lo > 0.0 {
        hi = lo;
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::NoBracket { n, limit });
        }
        g_lo = g(lo)?;
    }
    let mut g_hi = g(hi)?;
    while g_hi <= 0.0 {
        if hi >= limit {
            return Err(Error::NoBracket { n, limit });
        }
        lo = hi;
        g_lo = g_hi;
        hi = (hi * 2.0).min(limit);
        g_hi = g(hi)?;
    }
    // Brent needs an infallible closure; every point it visits lies inside
    // [lo, hi] which is within the representable range.
    let f = |a: f64| mrs_integral(spec, rule, a).expect("bracket inside range") - n;
    let a = brent(f, lo, hi, g_lo, g_hi, 1e-16 * hi, 300)?;
    let resid = (mrs_integral(spec, rule, a)? - n).abs() / n;
    if resid > 1e-12 {
        return Err(Error::ConvergenceFailure(format!(
            "MRS residual {resid:e} for n = {n}"
        )));
    }
    Ok(a)
}

/// Cached `n -> a_n` for one weight.
#[derive(Debug, Clone)]
pub struct MrsTable {
    spec: WeightSpec,
    quad_order: usize,
    entries: BTreeMap<u32, f64>,
}

impl MrsTable {
    pub fn new(spec: WeightSpec) -> Self {
        MrsTable {
            spec,
            quad_order: DEFAULT_QUAD_ORDER,
            entries: BTreeMap::new(),
        }
    }

    pub fn with_quad_order(mut self, order: usize) -> Self {
        self.quad_order = order;
        self.entries.clear();
        self
    }

    /// Build a table holding `a_n` for every requested `n` and its double.
    pub fn build(spec: WeightSpec, ns: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut table = MrsTable::new(spec);
        table.extend(ns)?;
        Ok(table)
    }

    pub fn extend(&mut self, ns: impl IntoIterator<Item = u32>) -> Result<()> {
        for n in ns {
            for m in [n, 2 * n] {
                if m > 0 && !self.entries.contains_key(&m) {
                    let a = mrs_number(&self.spec, m as f64, self.quad_order)?;
                    self.entries.insert(m, a);
                }
            }
        }
        Ok(())
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn entries(&self) -> &BTreeMap<u32, f64> {
        &self.entries
    }

    /// `a_n`, from the cache when present.
    pub fn a(&self, n: u32) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain("MRS index must be positive".into()));
        }
        match self.entries.get(&n) {
            Some(&a) => Ok(a),
            None => mrs_number(&self.spec, n as f64, self.quad_order),
        }
    }

    /// Radius beyond which a weighted polynomial of the given degree is
    /// negligible: with `a = a_degree`, the smallest `L >= a` such that
    /// `power (Q(L) - Q(a)) - degree ln(2L/a) >= 46`.
    ///
    /// For |x| > a, `|P(x) w(x)| <= ||P w||_[-a,a] (2|x|/a)^deg w(x)/w(a)`
    /// (Chebyshev growth bound), so the integrand of a `power`-th power of the
    /// weight is below `e^-46` of its interior size past `L`.
    pub fn support_radius(&self, degree: usize, power: f64) -> Result<f64> {
        let a = self.a(degree.max(1) as u32)?;
        let qa = self.spec.q(a);
        let limit = self.spec.max_abs_x();
        let excess = |l: f64| power * (self.spec.q(l) - qa) - degree as f64 * (2.0 * l / a).ln();
        let mut l = a;
        while excess(l) < 46.0 {
            l *= 1.02;
            if l >= limit {
                return Ok(limit);
            }
        }
        Ok(l)
    }

    /// δ_n = (n T(a_n))^{-2/3}.
    pub fn delta(&self, n: u32) -> Result<f64> {
        let a = self.a(n)?;
        Ok((n as f64 * self.spec.t(a)).powf(-2.0 / 3.0))
    }

    /// Φ_n(x); constant `Φ_n(a_n)` for `|x| > a_n`.
    pub fn phi(&self, n: u32, x: f64) -> Result<f64> {
        let an = self.a(n)?;
        let a2n = self.a(2 * n)?;
        let d = self.delta(n)?;
        let ax = x.abs().min(an);
        Ok((1.0 - ax / a2n) / (1.0 - ax / an + d).sqrt())
    }

    /// φ_n(x) = (a_n / n) Φ_n(x).
    pub fn varphi(&self, n: u32, x: f64) -> Result<f64> {
        Ok(self.a(n)? / n as f64 * self.phi(n, x)?)
    }
}

/// Doubling properties of `a_n`: `a_{2n} <= C a_n`, `T(a_{2n}) <= C T(a_n)`
/// and `a_n / T(a_n) <= C (a_{2n} - a_n)`.
pub fn check_doubling(table: &MrsTable, ns: &[u32]) -> Result<ConditionReport> {
    let spec = table.spec();
    let mut report = ConditionReport::new(format!("MRS doubling properties for {spec}"));
    let mut monotone = true;
    let mut prev = 0.0;
    let mut sorted = ns.to_vec();
    sorted.sort_unstable();
    for &n in &sorted {
        let a = table.a(n)?;
        monotone &= a > prev;
        prev = a;
    }
    report.push(ConditionCheck::new("a_n strictly increasing", monotone, prev, None));
    let mut c_a = (0.0f64, 0u32);
    let mut c_t = (0.0f64, 0u32);
    let mut c_gap = (0.0f64, 0u32);
    for &n in &sorted {
        let (an, a2n) = (table.a(n)?, table.a(2 * n)?);
        let (tn, t2n) = (spec.t(an), spec.t(a2n));
        let r = a2n / an;
        if r > c_a.0 {
            c_a = (r, n);
        }
        let r = t2n / tn;
        if r > c_t.0 {
            c_t = (r, n);
        }
        let r = an / tn / (a2n - an);
        if r > c_gap.0 {
            c_gap = (r, n);
        }
    }
    report.push(
        ConditionCheck::new("a_2n <= C a_n", c_a.0.is_finite(), c_a.0, Some(c_a.1 as f64))
            .with_note("witness_x holds n"),
    );
    report.push(
        ConditionCheck::new("T(a_2n) <= C T(a_n)", c_t.0.is_finite(), c_t.0, Some(c_t.1 as f64))
            .with_note("witness_x holds n"),
    );
    report.push(
        ConditionCheck::new(
            "a_n / T(a_n) <= C (a_2n - a_n)",
            c_gap.0.is_finite() && c_gap.0 > 0.0,
            c_gap.0,
            Some(c_gap.1 as f64),
        )
        .with_note("witness_x holds n"),
    );
    Ok(report)
}

/// `a_n <= C n^eta` with the fitted log-log slope over the top half of `ns`.
pub fn check_subpower_growth(table: &MrsTable, ns: &[u32], eta: f64) -> Result<ConditionReport> {
    let mut report = ConditionReport::new(format!("a_n <= C n^{eta} for {}", table.spec()));
    let mut c = 0.0f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in ns {
        let a = table.a(n)?;
        c = c.max(a / (n as f64).powf(eta));
        xs.push(n as f64);
        ys.push(a);
    }
    let half = xs.len() / 2;
    let slope = log_log_slope(&xs[half..], &ys[half..]);
    report.push(
        ConditionCheck::new("a_n / n^eta bounded", c.is_finite() && slope < eta, c, None)
            .with_note(format!("top-half log-log slope of a_n: {slope:.4}")),
    );
    Ok(report)
}

/// `1 / sqrt(T(x)) <= C Φ_n(x)` over a grid (equivalently the φ_n form).
pub fn check_phi_bound(table: &MrsTable, n: u32, grid: &[f64]) -> Result<ConditionReport> {
    let mut report = ConditionReport::new(format!("Phi_n lower bound, n = {n}, {}", table.spec()));
    let mut worst = (0.0f64, f64::NAN);
    for &x in grid {
        let r = 1.0 / (table.spec().t(x).sqrt() * table.phi(n, x)?);
        if r > worst.0 {
            worst = (r, x);
        }
    }
    report.push(ConditionCheck::new(
        "1/sqrt(T) <= C Phi_n",
        worst.0.is_finite(),
        worst.0,
        Some(worst.1),
    ));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::linear_grid;
    use crate::weights::WeightSpec;

    #[test]
    fn hermite_closed_forms() {
        let h = WeightSpec::hermite();
        assert!((mrs_number(&h, 8.0, DEFAULT_QUAD_ORDER).unwrap() - 4.0).abs() < 1e-13);
        let q2 = WeightSpec::freud(2.0, 1.0).unwrap();
        assert!((mrs_number(&q2, 9.0, DEFAULT_QUAD_ORDER).unwrap() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn quartic_first_number() {
        let f4 = WeightSpec::freud(4.0, 1.0).unwrap();
        let a1 = mrs_number(&f4, 1.0, DEFAULT_QUAD_ORDER).unwrap();
        assert!((a1 - (2.0f64 / 3.0).powf(0.25)).abs() < 1e-13, "{a1}");
    }

    #[test]
    fn residual_and_non_integer_index() {
        let e = WeightSpec::erdos(1.0, 1.0, 1).unwrap();
        for n in [1.0, 2.5, 16.0, 300.0] {
            let a = mrs_number(&e, n, DEFAULT_QUAD_ORDER).unwrap();
            let g = mrs_rhs(&e, a, 2 * DEFAULT_QUAD_ORDER).unwrap();
            assert!((g - n).abs() / n <= 1e-12);
        }
        assert!(mrs_number(&e, 0.0, 20).is_err());
    }

    #[test]
    fn no_bracket_beyond_overflow_bound() {
        let e = WeightSpec::erdos(1.0, 1.0, 2).unwrap();
        assert!(matches!(mrs_number(&e, 1e300, 20), Err(Error::NoBracket { .. })));
    }

    #[test]
    fn delta_phi_varphi() {
        let t = MrsTable::build(WeightSpec::hermite(), [8]).unwrap();
        let d = t.delta(8).unwrap();
        assert!((d - 16f64.powf(-2.0 / 3.0)).abs() < 1e-14);
        // Φ_8(2) by hand: (1 - 2/√32) / √(1 - 2/4 + δ_8)
        let want = (1.0 - 2.0 / 32f64.sqrt()) / (0.5 + d).sqrt();
        assert!((t.phi(8, 2.0).unwrap() - want).abs() < 1e-14);
        assert!((t.phi(8, 0.0).unwrap() - 1.0 / (1.0 + d).sqrt()).abs() < 1e-15);
        let edge = t.phi(8, 4.0).unwrap();
        assert!((edge - (1.0 - 4.0 / 32f64.sqrt()) / d.sqrt()).abs() < 1e-14);
        assert_eq!(t.phi(8, 9.0).unwrap(), edge);
        assert_eq!(t.phi(8, -2.0).unwrap(), t.phi(8, 2.0).unwrap());
        for x in [0.0, 1.3, 5.0] {
            assert_eq!(t.varphi(8, x).unwrap(), 0.5 * t.phi(8, x).unwrap());
        }
    }

    #[test]
    fn delta_decreases_for_freud() {
        let t = MrsTable::build(WeightSpec::freud(4.0, 1.0).unwrap(), [1, 2, 4, 8, 16]).unwrap();
        let ds: Vec<f64> = [1, 2, 4, 8, 16].iter().map(|&n| t.delta(n).unwrap()).collect();
        assert!(ds.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn doubling_and_growth_checks() {
        let ns: Vec<u32> = (0..9).map(|k| 1 << k).collect();
        for name in WeightSpec::preset_names() {
            let t = MrsTable::build(WeightSpec::preset(name).unwrap(), ns.clone()).unwrap();
            let r = check_doubling(&t, &ns).unwrap();
            assert!(r.pass(), "{name}: {r:#?}");
        }
        let e = MrsTable::build(WeightSpec::erdos(1.0, 1.0, 1).unwrap(), ns.clone()).unwrap();
        let r = check_subpower_growth(&e, &ns, 0.25).unwrap();
        assert!(r.pass(), "{r:#?}");
        let r = check_phi_bound(&e, 16, &linear_grid(0.0, 6.0, 200)).unwrap();
        assert!(r.pass());
    }
}
