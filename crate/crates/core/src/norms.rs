//! Weighted `L^p` norms on the real line and degrees of approximation.
//!
//! Functions are passed already multiplied by the weight (`x ↦ g(x) w(x)`),
//! so that `g` may grow faster than `w` decays. The request's
//! [`WeightMode`] supplies the remaining power of `T`.

use crate::error::{Error, Result};
use crate::mrs::MrsTable;
use crate::operators::{vp_from_coeffs, ExpansionCoeffs, Growth, TargetFn};
use crate::orthopoly::RecurrenceTable;
use crate::quad::{brent, gauss_legendre, golden_max, PanelLayout};
use crate::weights::WeightSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const REFINE_TOL: f64 = 1e-6;
const MAX_REFINEMENTS: usize = 4;

/// Extra multiplier `T^s` applied on top of the weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// w
    W,
    /// w / T^{1/4}
    WOverT4,
    /// T^{1/4} w
    T4W,
    /// T^s w
    TPower(f64),
}

impl WeightMode {
    pub fn t_power(&self) -> f64 {
        match *self {
            WeightMode::W => 0.0,
            WeightMode::WOverT4 => -0.25,
            WeightMode::T4W => 0.25,
            WeightMode::TPower(s) => s,
        }
    }

    fn factor(&self, spec: &WeightSpec, x: f64) -> f64 {
        let s = self.t_power();
        if s == 0.0 {
            1.0
        } else {
            spec.t(x).powf(s)
        }
    }
}

impl FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "w" => Ok(WeightMode::W),
            "w_over_T4" => Ok(WeightMode::WOverT4),
            "T4_w" => Ok(WeightMode::T4W),
            _ => Err(Error::Config(format!(
                "unknown weight mode {s:?} (expected w, w_over_T4 or T4_w)"
            ))),
        }
    }
}

impl fmt::Display for WeightMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightMode::W => write!(f, "w"),
            WeightMode::WOverT4 => write!(f, "w_over_T4"),
            WeightMode::T4W => write!(f, "T4_w"),
            WeightMode::TPower(s) => write!(f, "T^{s}_w"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `[-L, L]` with `L` chosen from the MRS numbers of degree `n`.
    Auto { n: usize },
    Explicit { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormRequest {
    /// `f64::INFINITY` for the sup-norm.
    pub p: f64,
    pub mode: WeightMode,
    pub domain: Domain,
    pub panel_order: usize,
    pub uniform_points: usize,
    pub window_points: usize,
    /// Known jumps or kinks of `g`.
    pub breakpoints: Vec<f64>,
    /// Absolute accuracy in norm units: norms below it only need to
    /// converge to it, not relatively.
    pub floor: f64,
}

impl NormRequest {
    pub fn new(p: f64, mode: WeightMode, domain: Domain) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Domain(format!("p must be in [1, inf], got {p}")));
        }
        if let Domain::Explicit { radius } = domain {
            if radius.is_nan() || radius <= 0.0 {
                return Err(Error::Domain(format!("domain radius must be positive, got {radius}")));
            }
        }
        Ok(NormRequest {
            p,
            mode,
            domain,
            panel_order: 20,
            uniform_points: 4096,
            window_points: 256,
            breakpoints: Vec::new(),
            floor: 0.0,
        })
    }

    pub fn with_breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(points);
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor.max(0.0);
        self
    }
}

/// Envelope of `|g|` used to bound the integral beyond the domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel {
    /// `g` vanishes outside the domain.
    Compact,
    /// `|g(x)| <= bound (1 + |x|)^degree`.
    Power { bound: f64, degree: u32 },
    /// `g = Σ_{k<terms} c_k p_k` with `‖c‖₂ = norm` (Cauchy–Schwarz on the kernel diagonal).
    Series { norm: f64, terms: usize },
    Mixed { bound: f64, degree: u32, norm: f64, terms: usize },
}

impl TailModel {
    pub fn for_target(f: &TargetFn) -> Self {
        match f.growth() {
            Growth::Compact { .. } => TailModel::Compact,
            Growth::Power { bound, degree } => TailModel::Power { bound, degree },
        }
    }

    /// Envelope for `f - Σ c_k p_k`.
    pub fn for_difference(f: &TargetFn, c: &[f64]) -> Self {
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        match f.growth() {
            Growth::Compact { .. } => TailModel::Series { norm, terms: c.len() },
            Growth::Power { bound, degree } => TailModel::Mixed {
                bound,
                degree,
                norm,
                terms: c.len(),
            },
        }
    }
}

/// Shared inputs of the norm routines.
#[derive(Clone, Copy)]
pub struct NormContext<'a> {
    pub spec: &'a WeightSpec,
    pub mrs: &'a MrsTable,
    pub table: Option<&'a RecurrenceTable>,
}

impl<'a> NormContext<'a> {
    pub fn new(mrs: &'a MrsTable, table: Option<&'a RecurrenceTable>) -> Self {
        NormContext {
            spec: mrs.spec(),
            mrs,
            table,
        }
    }

    fn radius(&self, domain: Domain) -> Result<f64> {
        match domain {
            Domain::Explicit { radius } => Ok(radius),
            Domain::Auto { n } => {
                let n = n.max(1);
                Ok((1.5 * self.mrs.a(2 * n as u32)?).max(self.mrs.support_radius(2 * n, 1.0)?))
            }
        }
    }

    fn envelope(&self, tail: TailModel, x: f64) -> f64 {
        let w = self.spec.weight(x);
        let power = |bound: f64, degree: u32| bound * (1.0 + x.abs()).powi(degree as i32) * w;
        let series = |norm: f64, terms: usize| -> f64 {
            match self.table {
                Some(t) if terms <= t.n_max() + 1 => {
                    let mut buf = vec![0.0; terms];
                    t.fill_weighted_basis(x, &mut buf);
                    norm * buf.iter().map(|v| v * v).sum::<f64>().sqrt()
                }
                _ => f64::INFINITY,
            }
        };
        match tail {
            TailModel::Compact => 0.0,
            TailModel::Power { bound, degree } => power(bound, degree),
            TailModel::Series { norm, terms } => series(norm, terms),
            TailModel::Mixed {
                bound,
                degree,
                norm,
                terms,
            } => power(bound, degree) + series(norm, terms),
        }
    }

    /// Bound on the contribution of `|x| > radius` (p-th power for finite p).
    fn tail_bound(&self, tail: TailModel, mode: WeightMode, p: f64, radius: f64) -> f64 {
        if tail == TailModel::Compact {
            return 0.0;
        }
        let limit = self.spec.max_abs_x();
        let env = |x: f64| self.envelope(tail, x) * mode.factor(self.spec, x);
        let step = (radius / 16.0).max(1e-3);
        let (gx, gw) = gauss_legendre(16);
        let mut acc: f64 = 0.0;
        let mut a = radius;
        while a < limit {
            let b = (a + step).min(limit);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            let mut piece: f64 = 0.0;
            let mut biggest: f64 = 0.0;
            for (x, w) in gx.iter().zip(&gw) {
                let v = env(mid + half * x);
                biggest = biggest.max(v);
                piece = if p.is_infinite() { piece.max(v) } else { piece + half * w * v.powf(p) };
            }
            acc = if p.is_infinite() { acc.max(piece) } else { acc + 2.0 * piece };
            if biggest < 1e-300 || (b - radius) > 64.0 * radius {
                break;
            }
            a = b;
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub p: f64,
    pub mode: WeightMode,
    pub radius: f64,
    /// Bound on the part of the norm beyond the domain (same units as `value`).
    pub tail_bound: f64,
    /// Relative change under the last refinement.
    pub refinement_change: f64,
    pub points: usize,
    /// Location of the maximum for the sup-norm.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax: Option<f64>,
}

impl NormValue {
    /// Total error budget (tail plus discretisation) in the units of `value`.
    pub fn error_budget(&self) -> f64 {
        self.tail_bound + self.refinement_change * self.value
    }
}

/// `‖g · w · T^s‖_p` over the real line.
pub fn weighted_norm(
    ctx: &NormContext,
    gw: &(dyn Fn(f64) -> f64 + Sync),
    req: &NormRequest,
    tail: TailModel,
) -> Result<NormValue> {
    let radius = ctx.radius(req.domain)?;
    let spec = ctx.spec;
    let g = |x: f64| gw(x) * req.mode.factor(spec, x);
    let edge_check = |peak: f64| -> Result<()> {
        for sgn in [-1.0, 1.0] {
            let edge = g(sgn * radius).abs();
            let inner = g(sgn * 0.9 * radius).abs();
            let growing = if req.p.is_infinite() {
                edge > 1.001 * inner && edge >= 0.5 * peak
            } else {
                edge >= 1e-3 * peak && edge >= inner
            };
            if peak > 0.0 && growing {
                return Err(Error::UnboundedDetected { edge: radius });
            }
        }
        Ok(())
    };
    if req.p.is_infinite() {
        let windows = window_points(ctx, req)?;
        let coarse = sup_abs(&g, -radius, radius, req.uniform_points, &windows, &req.breakpoints);
        let fine = sup_abs(&g, -radius, radius, 2 * req.uniform_points, &windows, &req.breakpoints);
        edge_check(fine.1)?;
        let change = rel_change(coarse.1, fine.1);
        if change > REFINE_TOL && (coarse.1 - fine.1).abs() > req.floor {
            return Err(Error::QuadratureFailure(format!(
                "sup-norm changed by {change:e} when the grid was doubled"
            )));
        }
        let tail_bound = ctx.tail_bound(tail, req.mode, req.p, radius);
        return Ok(NormValue {
            value: fine.1,
            p: req.p,
            mode: req.mode,
            radius,
            tail_bound,
            refinement_change: change,
            points: 2 * req.uniform_points + windows.len(),
            argmax: Some(fine.0),
        });
    }
    let base_width = match req.domain {
        Domain::Auto { n } => 3.0 * ctx.mrs.a(n.max(1) as u32)? / (n as f64 + 6.0),
        Domain::Explicit { radius } => radius / 32.0,
    };
    let layout = PanelLayout::new(radius, base_width, req.panel_order).with_breakpoints(req.breakpoints.iter().copied());
    let (value, change, points, peak) = integrate_pow(&g, &layout, -radius, radius, req.p, req.floor.powf(req.p))?;
    edge_check(peak)?;
    let tail_p = ctx.tail_bound(tail, req.mode, req.p, radius);
    let value = value.powf(1.0 / req.p);
    // (I + tail)^{1/p} - I^{1/p} <= tail^{1/p}
    let tail_bound = tail_p.powf(1.0 / req.p);
    Ok(NormValue {
        value,
        p: req.p,
        mode: req.mode,
        radius,
        tail_bound,
        refinement_change: change,
        points,
        argmax: None,
    })
}

fn rel_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn window_points(ctx: &NormContext, req: &NormRequest) -> Result<Vec<f64>> {
    let mut pts = Vec::new();
    if let Domain::Auto { n } = req.domain {
        let n = n.max(1) as u32;
        for m in [n, 2 * n] {
            let (am, dm) = (ctx.mrs.a(m)?, ctx.mrs.delta(m)?);
            let (lo, hi) = (am * (1.0 - dm), am * (1.0 + dm));
            let k = req.window_points.max(2);
            for i in 0..k {
                let x = lo + (hi - lo) * i as f64 / (k - 1) as f64;
                pts.push(x);
                pts.push(-x);
            }
        }
    }
    Ok(pts)
}

/// `(argmax, max |g|)` on `[lo, hi]`: uniform grid plus extra points, then
/// golden-section refinement around the largest local maxima.
pub fn sup_abs(
    g: &(dyn Fn(f64) -> f64 + Sync),
    lo: f64,
    hi: f64,
    count: usize,
    extra: &[f64],
    breakpoints: &[f64],
) -> (f64, f64) {
    let count = count.max(2);
    let mut xs: Vec<f64> = (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect();
    xs.extend(extra.iter().copied().filter(|x| *x >= lo && *x <= hi));
    for &b in breakpoints {
        let eps = 1e-12 * (1.0 + b.abs());
        xs.extend([b - eps, b, b + eps].into_iter().filter(|x| *x >= lo && *x <= hi));
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    xs.dedup();
    let vals: Vec<f64> = xs.par_iter().map(|&x| g(x).abs()).collect();
    let mut peaks: Vec<usize> = (0..xs.len())
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { vals[i - 1] };
            let right = if i + 1 == xs.len() { f64::NEG_INFINITY } else { vals[i + 1] };
            vals[i] >= left && vals[i] >= right
        })
        .collect();
    peaks.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]).then(i.cmp(&j)));
    peaks.truncate(8);
    let mut best = (xs[0], vals[0]);
    for (i, v) in vals.iter().enumerate() {
        if *v > best.1 {
            best = (xs[i], *v);
        }
    }
    let refined: Vec<(f64, f64)> = peaks
        .par_iter()
        .map(|&i| {
            let a = xs[i.saturating_sub(1)];
            let b = xs[(i + 1).min(xs.len() - 1)];
            golden_max(|x| g(x).abs(), a, b, 60)
        })
        .collect();
    for r in refined {
        if r.1 > best.1 {
            best = r;
        }
    }
    best
}

/// `∫_lo^hi |g|^p` on panels clipped from `layout`, split at sign changes of
/// `g` when `p` is not an even integer. Returns the value, the relative
/// change under refinement, the node count and the largest `|g|^p` seen.
/// Changes at most `floor` (absolute) are also accepted.
pub(crate) fn integrate_pow(
    g: &(dyn Fn(f64) -> f64 + Sync),
    layout: &PanelLayout,
    lo: f64,
    hi: f64,
    p: f64,
    floor: f64,
) -> Result<(f64, f64, usize, f64)> {
    let smooth_power = p.fract() == 0.0 && (p as i64) % 2 == 0;
    let mut layout = layout.clone();
    let mut prev: Option<f64> = None;
    let mut last_change = f64::INFINITY;
    for _ in 0..=MAX_REFINEMENTS {
        let mut edges = clip_edges(&layout.edges(), lo, hi);
        let rule_nodes = |edges: &[f64]| {
            let (gx, _) = gauss_legendre(layout.order);
            let mut pts = Vec::with_capacity(edges.len() * (layout.order + 1));
            for w in edges.windows(2) {
                let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                pts.push(w[0]);
                pts.extend(gx.iter().map(|x| mid + half * x));
            }
            pts.push(*edges.last().unwrap());
            pts
        };
        if !smooth_power {
            let pts = rule_nodes(&edges);
            let vals: Vec<f64> = pts.par_iter().map(|&x| g(x)).collect();
            let mut roots = Vec::new();
            for i in 0..pts.len() - 1 {
                if vals[i] * vals[i + 1] < 0.0 {
                    let tol = 1e-14 * (1.0 + pts[i].abs());
                    if let Ok(r) = brent(g, pts[i], pts[i + 1], vals[i], vals[i + 1], tol, 200) {
                        roots.push(r);
                    }
                }
            }
            edges.extend(roots);
            edges.sort_by(|a, b| a.total_cmp(b));
            edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));
        }
        let (gx, gw) = gauss_legendre(layout.order);
        let panels: Vec<(f64, f64)> = edges
            .windows(2)
            .map(|w| {
                let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                let mut sum = 0.0;
                let mut peak: f64 = 0.0;
                for (x, wt) in gx.iter().zip(&gw) {
                    let v = g(mid + half * x).abs().powf(p);
                    peak = peak.max(v);
                    sum += half * wt * v;
                }
                (sum, peak)
            })
            .collect();
        let value: f64 = panels.iter().map(|p| p.0).sum();
        let peak = panels.iter().map(|p| p.1).fold(0.0, f64::max);
        let points = (edges.len() - 1) * layout.order;
        if let Some(old) = prev {
            last_change = rel_change(old, value);
            if last_change <= REFINE_TOL || (old - value).abs() <= floor {
                return Ok((value, last_change, points, peak));
            }
        }
        if value == 0.0 && prev == Some(0.0) {
            return Ok((0.0, 0.0, points, 0.0));
        }
        prev = Some(value);
        layout = layout.refined();
    }
    Err(Error::QuadratureFailure(format!(
        "integral changed by {last_change:e} under the last refinement"
    )))
}

fn clip_edges(edges: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut out = vec![lo];
    out.extend(edges.iter().copied().filter(|&e| e > lo && e < hi));
    out.push(hi);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxQuality {
    /// Parseval value with a converged coefficient tail.
    Exact,
    /// Parseval value whose coefficient tail had not yet decayed at the cut-off.
    TailUncertain,
    /// Weighted error of an explicit polynomial of degree <= n.
    UpperBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxError {
    pub value: f64,
    pub quality: ApproxQuality,
    pub p: f64,
    pub n: usize,
}

/// `E_{2,n} = (Σ_{k > n} c_k²)^{1/2}`: the `L²(w²)` projection onto degree
/// `<= n` is the best approximation.
pub fn best_approx_error_l2(coeffs: &ExpansionCoeffs, n: usize) -> Result<ApproxError> {
    let c = &coeffs.c;
    if c.len() <= n + 1 {
        return Err(Error::TailNotConverged(format!(
            "need more than {} coefficients for degree {n}, have {}",
            n + 1,
            c.len()
        )));
    }
    let tail: f64 = c[n + 1..].iter().map(|v| v * v).sum();
    let last = c[c.len() - 1].powi(2);
    let quality = if tail > 0.0 && last > 1e-3 * tail {
        ApproxQuality::TailUncertain
    } else {
        ApproxQuality::Exact
    };
    Ok(ApproxError {
        value: tail.sqrt(),
        quality,
        p: 2.0,
        n,
    })
}

/// `E_{p,n}(w, f)`: exact for `p = 2`; otherwise the smaller of the weighted
/// errors of `s_{n+1}(f)` and `v_{⌊n/2⌋}(f)`, flagged as an upper bound.
/// Errors below `1e-12 ‖c‖` are only resolved to that absolute level.
pub fn best_approx_error(
    ctx: &NormContext,
    f: &TargetFn,
    coeffs: &ExpansionCoeffs,
    n: usize,
    p: f64,
) -> Result<ApproxError> {
    if p == 2.0 {
        return best_approx_error_l2(coeffs, n);
    }
    let table = ctx
        .table
        .ok_or_else(|| Error::Domain("best_approx_error needs a recurrence table".into()))?;
    if coeffs.len() < n + 1 {
        return Err(Error::TailNotConverged(format!(
            "need {} coefficients for degree {n}, have {}",
            n + 1,
            coeffs.len()
        )));
    }
    let spec = ctx.spec;
    let req = NormRequest::new(p, WeightMode::W, Domain::Auto { n })?
        .with_breakpoints(f.breakpoints(table.radius()))
        .with_floor(1e-12 * coeffs.norm());
    let err_of = |c: &[f64]| -> Result<f64> {
        let gw = |x: f64| f.eval_fw(spec, x) - table.weighted_series(c, x).unwrap_or(0.0);
        Ok(weighted_norm(ctx, &gw, &req, TailModel::for_difference(f, c))?.value)
    };
    let mut best = err_of(&coeffs.c[..n + 1])?;
    if n / 2 >= 1 {
        let vp = vp_from_coeffs(&coeffs.c, n / 2)?;
        best = best.min(err_of(&vp.d)?);
    }
    Ok(ApproxError {
        value: best,
        quality: ApproxQuality::UpperBound,
        p,
        n,
    })
}

/// Comparison of the weighted norm of `P ∈ 𝒫_n` outside and inside `[-a_n, a_n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfiniteFinite {
    pub n: usize,
    pub p: f64,
    pub outside: f64,
    pub inside: f64,
    /// For `p = ∞`: `sup_{|x|>=a_n} <= sup_{|x|<=a_n}`. For finite `p`:
    /// `‖Pw‖_R <= 2 ‖Pw‖_{|x|<a_n}`.
    pub holds: bool,
}

pub fn infinite_finite_check(ctx: &NormContext, c: &[f64], n: usize, p: f64) -> Result<InfiniteFinite> {
    let table = ctx
        .table
        .ok_or_else(|| Error::Domain("infinite_finite_check needs a recurrence table".into()))?;
    let an = ctx.mrs.a(n.max(1) as u32)?;
    let radius = ctx.mrs.support_radius(n.max(1), 1.0)?.max(1.5 * an);
    let g = |x: f64| table.weighted_series(c, x).unwrap_or(0.0);
    if p.is_infinite() {
        let count = 2048;
        let inside = sup_abs(&g, -an, an, count, &[], &[]).1;
        let right = sup_abs(&g, an, radius, count, &[], &[]).1;
        let left = sup_abs(&g, -radius, -an, count, &[], &[]).1;
        let outside = right.max(left);
        return Ok(InfiniteFinite {
            n,
            p,
            outside,
            inside,
            holds: outside <= inside,
        });
    }
    let layout = PanelLayout::new(radius, 3.0 * an / (n as f64 + 6.0), 20);
    let inside = integrate_pow(&g, &layout, -an, an, p, 0.0)?.0;
    let outside = integrate_pow(&g, &layout, an, radius, p, 0.0)?.0 + integrate_pow(&g, &layout, -radius, -an, p, 0.0)?.0;
    let total = (inside + outside).powf(1.0 / p);
    let inside = inside.powf(1.0 / p);
    Ok(InfiniteFinite {
        n,
        p,
        outside: outside.powf(1.0 / p),
        inside,
        holds: total <= 2.0 * inside,
    })
}
