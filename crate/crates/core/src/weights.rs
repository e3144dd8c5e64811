//! Exponential weights `w = exp(-Q)` on the real line.
//!
//! Every shipped family has the form
//!
//! ```text
//! Q(x) = |x|^u (exp_l(|x|^alpha) - exp_l(0)) / scale
//! ```
//!
//! where `exp_0(y) = y` and `exp_l` is the `l`-fold iterated exponential.
//! Pure Freud weights are `u = 0, l = 0`; the generalised Freud family is
//! `l = 0` with `u > 0`; Erdős weights have `l >= 1`. `T(x) = x Q'(x) / Q(x)`
//! is bounded exactly when `l = 0`.

use crate::checks::{log_log_slope, ConditionCheck, ConditionReport};
use crate::error::{Error, Result};
use crate::mrs::MrsTable;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Freud { alpha: f64 },
    FreudGeneral { alpha: f64, u: f64 },
    Erdos { u: f64, alpha: f64, ell: u32 },
}

impl Family {
    /// `(u, alpha, ell)` in the unified representation.
    fn exponents(&self) -> (f64, f64, u32) {
        match *self {
            Family::Freud { alpha } => (0.0, alpha, 0),
            Family::FreudGeneral { alpha, u } => (u, alpha, 0),
            Family::Erdos { u, alpha, ell } => (u, alpha, ell),
        }
    }
}

/// Flat on-disk form of a weight: keys `family`, `alpha`, `u`, `ell`,
/// `scale`, `lambda_class`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFile {
    pub family: String,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_class: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightFile", into = "WeightFile")]
pub struct WeightSpec {
    family: Family,
    scale: f64,
    lambda_class: Option<f64>,
    /// Largest |x| at which Q, Q' and Q'' are all finite.
    max_abs_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QValues {
    pub q: f64,
    pub qp: f64,
    pub qpp: f64,
}

impl WeightSpec {
    pub fn new(family: Family, scale: f64, lambda_class: Option<f64>) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Config(format!("scale must be positive, got {scale}")));
        }
        if let Some(l) = lambda_class {
            if l.is_nan() || l <= 0.0 {
                return Err(Error::Config(format!("lambda_class must be positive, got {l}")));
            }
        }
        match family {
            Family::Freud { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                return Err(Error::Config(format!("Freud alpha must be positive, got {alpha}")))
            }
            Family::FreudGeneral { alpha, u }
                if !(alpha > 0.0 && u >= 0.0 && alpha + u > 1.0) =>
            {
                return Err(Error::Config(format!(
                    "generalised Freud needs alpha > 0, u >= 0, alpha + u > 1 (alpha={alpha}, u={u})"
                )))
            }
            Family::Erdos { u, alpha, ell } if !(alpha > 0.0 && u >= 0.0 && alpha + u > 1.0 && ell >= 1) => {
                return Err(Error::Config(format!(
                    "Erdős weight needs alpha > 0, u >= 0, alpha + u > 1, ell >= 1 (alpha={alpha}, u={u}, ell={ell})"
                )))
            }
            _ => {}
        }
        let mut spec = WeightSpec {
            family,
            scale,
            lambda_class,
            max_abs_x: f64::INFINITY,
        };
        spec.max_abs_x = spec.compute_bound();
        Ok(spec)
    }

    pub fn freud(alpha: f64, scale: f64) -> Result<Self> {
        Self::new(Family::Freud { alpha }, scale, Some(1.0))
    }

    pub fn erdos(u: f64, alpha: f64, ell: u32) -> Result<Self> {
        Self::new(Family::Erdos { u, alpha, ell }, 1.0, None)
    }

    /// Q = x²/2, so that w² = exp(-x²) is the Hermite weight.
    pub fn hermite() -> Self {
        Self::freud(2.0, 2.0).expect("valid preset")
    }

    /// Named presets shipped with the crate.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "hermite" => Ok(Self::hermite()),
            "freud4" => Self::freud(4.0, 1.0),
            "freud1.5" => Self::freud(1.5, 1.0),
            "erdos" => Self::new(Family::Erdos { u: 1.0, alpha: 1.0, ell: 1 }, 1.0, Some(1.2)),
            "erdos-classic" => Self::new(Family::Erdos { u: 0.0, alpha: 2.0, ell: 1 }, 1.0, Some(1.2)),
            other => Err(Error::Config(format!("unknown weight preset `{other}`"))),
        }
    }

    pub fn preset_names() -> &'static [&'static str] {
        &["hermite", "freud4", "freud1.5", "erdos", "erdos-classic"]
    }

    /// Load from a TOML or JSON file (by extension), or `preset:<name>`.
    pub fn load(path: &str) -> Result<Self> {
        if let Some(name) = path.strip_prefix("preset:") {
            return Self::preset(name);
        }
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, Path::new(path).extension().and_then(|e| e.to_str()))
    }

    pub fn parse(text: &str, extension: Option<&str>) -> Result<Self> {
        match extension {
            Some("json") => Ok(serde_json::from_str(text)?),
            _ => toml::from_str(text).map_err(|e| Error::Config(e.to_string())),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn lambda_class(&self) -> Option<f64> {
        self.lambda_class
    }

    /// Largest |x| at which the closed-form derivatives are representable.
    pub fn max_abs_x(&self) -> f64 {
        self.max_abs_x
    }

    pub fn is_freud_type(&self) -> bool {
        self.family.exponents().2 == 0
    }

    /// Stable digest of the canonical JSON form.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("spec serialises");
        Sha256::digest(json.as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Q, Q', Q'' at `x` from closed-form derivatives.
    pub fn eval_q(&self, x: f64) -> Result<QValues> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("non-finite argument {x}")));
        }
        if x.abs() > self.max_abs_x {
            return Err(Error::Overflow {
                x: x.abs(),
                limit: self.max_abs_x,
            });
        }
        let v = self.eval_q_abs(x.abs());
        Ok(QValues {
            q: v.q,
            qp: if x < 0.0 { -v.qp } else { v.qp },
            qpp: v.qpp,
        })
    }

    /// Q alone; `+inf` beyond the representable range.
    pub fn q(&self, x: f64) -> f64 {
        let a = x.abs();
        if a > self.max_abs_x {
            return f64::INFINITY;
        }
        let (u, alpha, ell) = self.family.exponents();
        if a == 0.0 {
            return 0.0;
        }
        let y = a.powf(alpha);
        pow_or_one(a, u) * shifted_iter_exp(ell, y) / self.scale
    }

    pub fn weight(&self, x: f64) -> f64 {
        (-self.q(x)).exp()
    }

    fn eval_q_abs(&self, x: f64) -> QValues {
        let (u, alpha, ell) = self.family.exponents();
        let s = self.scale;
        if x == 0.0 {
            let e = u + alpha;
            let lead = iter_exp_derivs(ell, 0.0).1;
            let qpp = if e < 2.0 {
                f64::INFINITY
            } else if e == 2.0 {
                2.0 * lead / s
            } else {
                0.0
            };
            let qp = if e > 1.0 { 0.0 } else { lead / s };
            return QValues { q: 0.0, qp, qpp };
        }
        let y = x.powf(alpha);
        let g = shifted_iter_exp(ell, y);
        let (_, d1, d2) = iter_exp_derivs(ell, y);
        let g1 = d1 * alpha * x.powf(alpha - 1.0);
        let g2 = d2 * alpha * alpha * x.powf(2.0 * alpha - 2.0) + d1 * alpha * (alpha - 1.0) * x.powf(alpha - 2.0);
        let xu = pow_or_one(x, u);
        let (q, qp, qpp) = if u == 0.0 {
            (g, g1, g2)
        } else {
            (
                xu * g,
                u * x.powf(u - 1.0) * g + xu * g1,
                u * (u - 1.0) * x.powf(u - 2.0) * g + 2.0 * u * x.powf(u - 1.0) * g1 + xu * g2,
            )
        };
        QValues {
            q: q / s,
            qp: qp / s,
            qpp: qpp / s,
        }
    }

    /// T(x) = x Q'(x) / Q(x) for x ≠ 0.
    pub fn eval_t(&self, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Err(Error::Domain("T is undefined at x = 0; use t_limit0".into()));
        }
        if x.abs() > self.max_abs_x {
            return Err(Error::Overflow {
                x: x.abs(),
                limit: self.max_abs_x,
            });
        }
        Ok(self.t_ratio(x.abs()))
    }

    /// lim_{x→0+} T(x) = alpha + u.
    pub fn t_limit0(&self) -> f64 {
        let (u, alpha, _) = self.family.exponents();
        u + alpha
    }

    /// T on a grid: the origin maps to [`Self::t_limit0`] and points beyond the
    /// representable range are clamped to it.
    pub fn t(&self, x: f64) -> f64 {
        let a = x.abs().min(self.max_abs_x);
        if a == 0.0 {
            self.t_limit0()
        } else {
            self.t_ratio(a)
        }
    }

    // u + alpha * y * D'(y) / D(y), evaluated without forming Q.
    fn t_ratio(&self, x: f64) -> f64 {
        let (u, alpha, ell) = self.family.exponents();
        let y = x.powf(alpha);
        if y < 1e-150 || ell == 0 {
            return u + alpha;
        }
        let d = shifted_iter_exp(ell, y);
        let (_, d1, _) = iter_exp_derivs(ell, y);
        u + alpha * y * d1 / d
    }

    fn compute_bound(&self) -> f64 {
        let (u, alpha, ell) = self.family.exponents();
        if ell == 0 {
            return 1e300f64.powf(1.0 / (u + alpha).max(1.0));
        }
        // log of the largest factor in Q'': sum_{j<ell} exp_j(y) plus slack
        // for the polynomial prefactors.
        let log_size = |y: f64| -> f64 {
            let mut e = y;
            let mut total = y;
            for _ in 1..ell {
                e = e.exp();
                total += e;
            }
            total
        };
        let (mut lo, mut hi) = (0.0f64, 700.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if log_size(mid).is_finite() && log_size(mid) < 690.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut bound = lo.powf(1.0 / alpha);
        loop {
            let v = self.eval_q_abs(bound);
            if v.q.is_finite() && v.qp.is_finite() && v.qpp.is_finite() {
                break;
            }
            bound *= 0.99;
        }
        bound
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Freud { alpha } => write!(f, "Freud(alpha={alpha}, scale={})", self.scale),
            Family::FreudGeneral { alpha, u } => {
                write!(f, "FreudGeneral(alpha={alpha}, u={u}, scale={})", self.scale)
            }
            Family::Erdos { u, alpha, ell } => {
                write!(f, "Erdos(u={u}, alpha={alpha}, ell={ell}, scale={})", self.scale)
            }
        }
    }
}

impl TryFrom<WeightFile> for WeightSpec {
    type Error = Error;

    fn try_from(file: WeightFile) -> Result<Self> {
        let family = match file.family.as_str() {
            "freud" => Family::Freud { alpha: file.alpha },
            "freud_general" => {
                if file.ell.unwrap_or(0) != 0 {
                    return Err(Error::Config("freud_general requires ell = 0".into()));
                }
                Family::FreudGeneral {
                    alpha: file.alpha,
                    u: file.u.unwrap_or(0.0),
                }
            }
            "erdos" => Family::Erdos {
                u: file.u.unwrap_or(0.0),
                alpha: file.alpha,
                ell: file.ell.unwrap_or(1),
            },
            other => return Err(Error::Config(format!("unknown weight family `{other}`"))),
        };
        WeightSpec::new(family, file.scale, file.lambda_class)
    }
}

impl From<WeightSpec> for WeightFile {
    fn from(spec: WeightSpec) -> Self {
        let (family, alpha, u, ell) = match spec.family {
            Family::Freud { alpha } => ("freud", alpha, None, None),
            Family::FreudGeneral { alpha, u } => ("freud_general", alpha, Some(u), Some(0)),
            Family::Erdos { u, alpha, ell } => ("erdos", alpha, Some(u), Some(ell)),
        };
        WeightFile {
            family: family.to_string(),
            alpha,
            u,
            ell,
            scale: spec.scale,
            lambda_class: spec.lambda_class,
        }
    }
}

fn pow_or_one(x: f64, u: f64) -> f64 {
    if u == 0.0 {
        1.0
    } else {
        x.powf(u)
    }
}

/// exp_l(0): 0 for l = 0, then 1, e, e^e, ...
fn iter_exp_at_zero(ell: u32) -> f64 {
    if ell == 0 {
        return 0.0;
    }
    let mut v = 0.0f64;
    for _ in 0..ell {
        v = v.exp();
    }
    v
}

/// exp_l(y) - exp_l(0) without cancellation for small y.
fn shifted_iter_exp(ell: u32, y: f64) -> f64 {
    let mut d = y;
    for j in 1..=ell {
        d = iter_exp_at_zero(j - 1).exp() * d.exp_m1();
    }
    d
}

/// (exp_l(y), d/dy exp_l(y), d²/dy² exp_l(y)).
fn iter_exp_derivs(ell: u32, y: f64) -> (f64, f64, f64) {
    if ell == 0 {
        return (y, 1.0, 0.0);
    }
    // prod[j] = exp_1(y) * ... * exp_j(y), prod[0] = 1
    let mut e = y;
    let mut prod = 1.0;
    let mut sum_prev = 0.0;
    for _ in 0..ell {
        sum_prev += prod;
        e = e.exp();
        prod *= e;
    }
    (e, prod, prod * sum_prev)
}

/// Numerical spot check of the class conditions on a positive grid.
///
/// The lower convexity bound is checked outside the exceptional interval `J = [-j, j]`.
pub fn check_class_conditions(spec: &WeightSpec, grid: &[f64], j_half_width: f64) -> ConditionReport {
    let mut report = ConditionReport::new(format!("class conditions for {spec}"));
    let pts: Vec<f64> = {
        let mut v: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|x| *x > 0.0 && *x <= spec.max_abs_x())
            .collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    };
    let vals: Vec<QValues> = pts.iter().map(|&x| spec.eval_q(x).expect("in range")).collect();

    let q0 = spec.eval_q(0.0).expect("origin");
    let small = spec.eval_q(1e-8).expect("origin");
    report.push(ConditionCheck::new(
        "Q(0) = 0, Q' continuous at 0",
        q0.q == 0.0 && small.qp.abs() < 1e-4,
        small.qp.abs(),
        Some(1e-8),
    ));

    let (min_qpp, at) = pts
        .iter()
        .zip(&vals)
        .map(|(x, v)| (v.qpp, *x))
        .fold((f64::INFINITY, f64::NAN), |acc, c| if c.0 < acc.0 { c } else { acc });
    report.push(ConditionCheck::new("Q'' > 0 off the origin", min_qpp > 0.0, min_qpp, Some(at)));

    let last = vals.last().map(|v| v.q).unwrap_or(0.0);
    let increasing = vals.windows(2).all(|w| w[1].q >= w[0].q);
    report.push(
        ConditionCheck::new("Q -> infinity", increasing && last > 10.0, last, pts.last().copied())
            .with_note("Q increasing on the grid and large at its right end"),
    );

    let ts: Vec<f64> = pts.iter().map(|&x| spec.t(x)).collect();
    let mut running_max = f64::NEG_INFINITY;
    let mut quasi = 1.0f64;
    let mut quasi_at = None;
    for (x, &t) in pts.iter().zip(&ts) {
        running_max = running_max.max(t);
        let c = running_max / t;
        if c > quasi {
            quasi = c;
            quasi_at = Some(*x);
        }
    }
    report.push(ConditionCheck::new("T quasi-increasing", quasi < 100.0, quasi, quasi_at));
    let (lambda, lambda_at) = pts
        .iter()
        .zip(&ts)
        .map(|(x, t)| (*t, *x))
        .fold((f64::INFINITY, f64::NAN), |acc, c| if c.0 < acc.0 { c } else { acc });
    report.push(ConditionCheck::new("T >= Lambda > 1", lambda > 1.0, lambda, Some(lambda_at)));

    // r = (Q''/Q') / (Q'/Q) = Q'' Q / Q'^2
    let ratios: Vec<(f64, f64)> = pts
        .iter()
        .zip(&vals)
        .map(|(x, v)| (*x, v.qpp / v.qp * (v.q / v.qp)))
        .collect();
    let (upper, upper_at) = ratios
        .iter()
        .fold((f64::NEG_INFINITY, f64::NAN), |acc, &(x, r)| if r > acc.0 { (r, x) } else { acc });
    report.push(ConditionCheck::new(
        "Q''/|Q'| <= C |Q'|/Q",
        upper.is_finite(),
        upper,
        Some(upper_at),
    ));
    let (lower, lower_at) = ratios
        .iter()
        .filter(|(x, _)| *x > j_half_width)
        .fold((f64::INFINITY, f64::NAN), |acc, &(x, r)| if r < acc.0 { (r, x) } else { acc });
    report.push(
        ConditionCheck::new(
            "Q''/|Q'| >= C |Q'|/Q outside J",
            lower.is_finite() && lower > 1e-8,
            lower,
            Some(lower_at),
        )
        .with_note(format!("J = [-{j_half_width}, {j_half_width}]")),
    );
    report
}

/// Empirical constant of `T(a_n) <= c (n/a_n)^{2/3}` and of
/// `|Q'|/Q^lambda <= C` on `|x| >= 1`.
pub fn check_t_growth(spec: &WeightSpec, mrs: &MrsTable, n_range: &[u32]) -> Result<ConditionReport> {
    let mut report = ConditionReport::new(format!("growth condition on T(a_n) for {spec}"));
    let mut ns = Vec::new();
    let mut cs = Vec::new();
    for &n in n_range {
        let a = mrs.a(n)?;
        let c = spec.t(a) * (a / n as f64).powf(2.0 / 3.0);
        ns.push(n as f64);
        cs.push(c);
    }
    let (c_max, at) = ns
        .iter()
        .zip(&cs)
        .fold((f64::NEG_INFINITY, f64::NAN), |acc, (n, c)| if *c > acc.0 { (*c, *n) } else { acc });
    let slope = log_log_slope(&ns, &cs);
    let growing = slope > 0.05;
    report.push(
        ConditionCheck::new("T(a_n) (a_n/n)^(2/3) bounded", c_max.is_finite() && !growing, c_max, None)
            .with_note(format!("max at n = {at}; log-log slope {slope:.4}")),
    );
    if let Some(lambda) = spec.lambda_class() {
        let hi = mrs.a(*n_range.iter().max().unwrap_or(&1))? * 2.0;
        let hi = hi.min(spec.max_abs_x()).max(1.0 + 1e-9);
        let grid = crate::checks::linear_grid(1.0, hi, 400);
        let (ratio, at) = grid
            .iter()
            .map(|&x| {
                let v = spec.eval_q(x).expect("in range");
                (v.qp.abs() / v.q.powf(lambda), x)
            })
            .fold((f64::NEG_INFINITY, f64::NAN), |acc, c| if c.0 > acc.0 { c } else { acc });
        let in_range = lambda > 0.0 && lambda < 2.0;
        report.push(
            ConditionCheck::new("|Q'|/Q^lambda bounded on |x| >= 1", ratio.is_finite() && in_range, ratio, Some(at))
                .with_note(format!("lambda = {lambda}")),
        );
    }
    Ok(report)
}

/// Sup and inf of `T(x ± c/T(x)) / T(x)` over the grid.
pub fn check_t_shift_stability(spec: &WeightSpec, grid: &[f64], c_shift: f64) -> Result<ConditionReport> {
    if !(c_shift > 0.0 && c_shift < 1.0) {
        return Err(Error::Domain(format!("shift constant must lie in (0, 1), got {c_shift}")));
    }
    let mut report = ConditionReport::new(format!("T shift stability for {spec}, c = {c_shift}"));
    let mut sup = (f64::NEG_INFINITY, f64::NAN);
    let mut inf = (f64::INFINITY, f64::NAN);
    for &x in grid.iter().filter(|x| **x != 0.0 && x.abs() <= spec.max_abs_x()) {
        let t = spec.t(x);
        for shifted in [x + c_shift / t, x - c_shift / t] {
            if shifted == 0.0 || shifted.abs() > spec.max_abs_x() {
                continue;
            }
            let r = spec.t(shifted) / t;
            if r > sup.0 {
                sup = (r, x);
            }
            if r < inf.0 {
                inf = (r, x);
            }
        }
    }
    let constant = sup.0.max(1.0 / inf.0);
    report.push(
        ConditionCheck::new(
            "T(x +- c/T(x)) comparable to T(x)",
            constant.is_finite() && constant < 100.0,
            constant,
            Some(if sup.0 >= 1.0 / inf.0 { sup.1 } else { inf.1 }),
        )
        .with_note(format!("sup ratio {:.6}, inf ratio {:.6}", sup.0, inf.0)),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::log_grid;

    fn fd_check(spec: &WeightSpec, x: f64) {
        let h = 1e-5 * x.max(1e-3);
        let v = spec.eval_q(x).unwrap();
        let fq = (spec.eval_q(x + h).unwrap().q - spec.eval_q(x - h).unwrap().q) / (2.0 * h);
        let fqp = (spec.eval_q(x + h).unwrap().qp - spec.eval_q(x - h).unwrap().qp) / (2.0 * h);
        assert!((fq - v.qp).abs() <= 1e-6 * v.qp.abs().max(1e-12), "{spec} Q' at {x}: {fq} vs {}", v.qp);
        assert!((fqp - v.qpp).abs() <= 1e-6 * v.qpp.abs().max(1e-12), "{spec} Q'' at {x}: {fqp} vs {}", v.qpp);
    }

    fn all_specs() -> Vec<WeightSpec> {
        let mut v: Vec<WeightSpec> = WeightSpec::preset_names()
            .iter()
            .map(|n| WeightSpec::preset(n).unwrap())
            .collect();
        v.push(WeightSpec::new(Family::FreudGeneral { alpha: 1.0, u: 1.5 }, 1.0, None).unwrap());
        v.push(WeightSpec::erdos(1.0, 1.0, 2).unwrap());
        v
    }

    #[test]
    fn hermite_aligned_values() {
        let v = WeightSpec::hermite().eval_q(3.0).unwrap();
        assert_eq!((v.q, v.qp, v.qpp), (4.5, 3.0, 1.0));
    }

    #[test]
    fn origin_and_erdos_value() {
        for spec in all_specs() {
            assert_eq!(spec.eval_q(0.0).unwrap().q, 0.0);
        }
        let e = WeightSpec::erdos(1.0, 1.0, 1).unwrap();
        let v = e.eval_q(1.0).unwrap();
        assert!((v.q - (std::f64::consts::E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for spec in all_specs() {
            for &x in &[0.05, 0.3, 0.9, 1.7, 2.5] {
                fd_check(&spec, x);
            }
        }
    }

    #[test]
    fn evenness_is_exact() {
        for spec in all_specs() {
            for &x in &[0.01, 0.7, 2.3] {
                let (p, m) = (spec.eval_q(x).unwrap(), spec.eval_q(-x).unwrap());
                assert_eq!(p.q, m.q);
                assert_eq!(p.qp, -m.qp);
                assert_eq!(p.qpp, m.qpp);
                assert_eq!(spec.eval_t(x).unwrap(), spec.eval_t(-x).unwrap());
            }
        }
    }

    #[test]
    fn pure_freud_t_is_alpha() {
        let h = WeightSpec::hermite();
        assert!((h.eval_t(1.7).unwrap() - 2.0).abs() < 1e-14);
        let f4 = WeightSpec::freud(4.0, 1.0).unwrap();
        for &x in &[1e-3, 0.5, 3.0, -8.0] {
            assert!((f4.eval_t(x).unwrap() - 4.0).abs() < 4e-14);
        }
        assert!(matches!(h.eval_t(0.0), Err(Error::Domain(_))));
        assert_eq!(h.t(0.0), 2.0);
        let e = WeightSpec::erdos(1.0, 1.0, 1).unwrap();
        assert_eq!(e.t_limit0(), 2.0);
    }

    #[test]
    fn erdos_t_matches_log_derivative() {
        // T(x) = d log Q / d log x, by central differences in log x.
        let e = WeightSpec::erdos(1.0, 1.0, 1).unwrap();
        let x: f64 = 2.0;
        let h = 1e-5;
        let lq = |s: f64| e.eval_q(s.exp()).unwrap().q.ln();
        let fd = (lq(x.ln() + h) - lq(x.ln() - h)) / (2.0 * h);
        let t = e.eval_t(x).unwrap();
        assert!((t - fd).abs() < 1e-8, "{t} vs {fd}");
        let x: f64 = 2.0;
        let closed = 1.0 + x * x.exp() / (x.exp() - 1.0);
        assert!((t - closed).abs() < 1e-13);
    }

    #[test]
    fn overflow_is_reported_for_erdos() {
        let e = WeightSpec::erdos(1.0, 1.0, 2).unwrap();
        let bound = e.max_abs_x();
        assert!(bound.is_finite() && bound > 1.0 && bound < 10.0);
        assert!(matches!(e.eval_q(bound * 1.5), Err(Error::Overflow { .. })));
        assert_eq!(e.weight(bound * 2.0), 0.0);
    }

    #[test]
    fn lambda_bound_for_presets() {
        for name in WeightSpec::preset_names() {
            let spec = WeightSpec::preset(name).unwrap();
            let hi = spec.max_abs_x().min(50.0) * 0.999;
            let min_t = log_grid(1e-3, hi, 400).iter().map(|&x| spec.t(x)).fold(f64::INFINITY, f64::min);
            assert!(min_t >= 1.0 + 1e-9, "{name}: {min_t}");
        }
    }

    #[test]
    fn class_conditions() {
        let grid = |s: &WeightSpec| log_grid(1e-3, s.max_abs_x().min(1e3) * 0.999, 500);
        let h = WeightSpec::hermite();
        let r = check_class_conditions(&h, &grid(&h), 1.0);
        assert!(r.pass(), "{r:#?}");
        assert!((r.get("T >= Lambda > 1").unwrap().constant - 2.0).abs() < 1e-12);

        let e = WeightSpec::erdos(1.0, 1.0, 1).unwrap();
        let r = check_class_conditions(&e, &grid(&e), 1.0);
        assert!(r.pass(), "{r:#?}");
        assert!(r.get("T quasi-increasing").unwrap().constant < 1.0 + 1e-12);

        let bad = WeightSpec::freud(0.5, 1.0).unwrap();
        let r = check_class_conditions(&bad, &grid(&bad), 1.0);
        let d = r.get("T >= Lambda > 1").unwrap();
        assert!(!d.pass && (d.constant - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shift_stability() {
        let f = WeightSpec::freud(4.0, 1.0).unwrap();
        let r = check_t_shift_stability(&f, &log_grid(0.1, 10.0, 50), 0.5).unwrap();
        assert!((r.checks[0].constant - 1.0).abs() < 1e-12);
        let e = WeightSpec::erdos(1.0, 1.0, 1).unwrap();
        let r = check_t_shift_stability(&e, &log_grid(0.1, 10.0, 200), 0.5).unwrap();
        assert!(r.pass() && r.checks[0].constant < 10.0, "{r:#?}");
        assert!(check_t_shift_stability(&e, &[1.0], 1.5).is_err());
    }

    #[test]
    fn spec_file_round_trip() {
        let toml_text = "family = \"erdos\"\nalpha = 1.0\nu = 1.0\nell = 1\nlambda_class = 1.2\n";
        let spec = WeightSpec::parse(toml_text, Some("toml")).unwrap();
        assert_eq!(spec, WeightSpec::preset("erdos").unwrap());
        let json = serde_json::to_string(&spec).unwrap();
        let back = WeightSpec::parse(&json, Some("json")).unwrap();
        assert_eq!(back, spec);
        assert!(WeightSpec::parse("family = \"erdos\"\nalpha = 0.5\nu = 0.2\n", None).is_err());
    }
}
