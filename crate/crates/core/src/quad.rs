//! Composite Gauss–Legendre rules and a bracketing root finder.
//!
//! Every integral in the crate goes through [`PanelRule`]: a symmetric
//! partition of `[-L, L]` into panels, each carrying an `order`-point
//! Gauss–Legendre rule. Panels are geometrically graded towards the origin
//! (where `Q` may only be finitely smooth) and split at caller-supplied
//! breakpoints (jumps and kinks of target functions).

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let nf = order as f64;
    let half = order.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess, then Newton on P_order.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[order - 1 - i] = x;
        weights[order - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if order % 2 == 1 {
        nodes[half - 1] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if order == 0 {
        return (1.0, 0.0);
    }
    let nf = order as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Description of a symmetric composite rule on `[-radius, radius]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PanelLayout {
    pub radius: f64,
    /// Nominal panel width away from the origin.
    pub width: f64,
    /// Gauss–Legendre points per panel.
    pub order: usize,
    /// Geometric grading ratio towards the origin (0 disables grading).
    pub grading_ratio: f64,
    pub grading_levels: usize,
    #[serde(default)]
    pub breakpoints: Vec<f64>,
}

impl PanelLayout {
    pub fn new(radius: f64, width: f64, order: usize) -> Self {
        PanelLayout {
            radius,
            width: width.min(radius),
            order,
            grading_ratio: 0.2,
            grading_levels: 18,
            breakpoints: Vec::new(),
        }
    }

    pub fn with_breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        self.breakpoints.extend(points);
        self
    }

    pub fn with_grading(mut self, ratio: f64, levels: usize) -> Self {
        self.grading_ratio = ratio;
        self.grading_levels = levels;
        self
    }

    /// Same layout with panels of half the width.
    pub fn refined(&self) -> Self {
        let mut next = self.clone();
        next.width /= 2.0;
        next
    }

    /// Sorted panel edges covering `[-radius, radius]`.
    pub fn edges(&self) -> Vec<f64> {
        let l = self.radius;
        let count = (l / self.width).ceil().max(1.0) as usize;
        let h = l / count as f64;
        let mut half: Vec<f64> = (0..=count).map(|i| i as f64 * h).collect();
        if self.grading_ratio > 0.0 {
            let mut g = h;
            for _ in 0..self.grading_levels {
                g *= self.grading_ratio;
                half.push(g);
            }
        }
        let mut edges: Vec<f64> = half.iter().map(|&x| -x).chain(half.iter().copied()).collect();
        edges.extend(
            self.breakpoints
                .iter()
                .copied()
                .filter(|b| b.is_finite() && b.abs() < l),
        );
        edges.sort_by(|a, b| a.total_cmp(b));
        let mut out: Vec<f64> = Vec::with_capacity(edges.len());
        for e in edges {
            match out.last() {
                Some(&last) if e - last <= 1e-12 * e.abs().max(last.abs()) => {}
                _ => out.push(e),
            }
        }
        out
    }

    pub fn build(&self) -> PanelRule {
        PanelRule::from_edges(&self.edges(), self.order)
    }
}

/// Nodes and weights of a composite Gauss–Legendre rule.
#[derive(Debug, Clone)]
pub struct PanelRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub edges: Vec<f64>,
    pub order: usize,
}

impl PanelRule {
    pub fn from_edges(edges: &[f64], order: usize) -> Self {
        let (gx, gw) = gauss_legendre(order);
        let panels = edges.len().saturating_sub(1);
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for (x, w) in gx.iter().zip(&gw) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        PanelRule {
            nodes,
            weights,
            edges: edges.to_vec(),
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panels(&self) -> usize {
        self.edges.len().saturating_sub(1)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Legendre integral of `f` over `[a, b]`.
pub fn integrate_interval(a: f64, b: f64, order: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (gx, gw) = gauss_legendre(order);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    gx.iter()
        .zip(&gw)
        .map(|(x, w)| half * w * f(mid + half * x))
        .sum()
}

/// Brent's bracketing root finder. `fa` and `fb` must have opposite signs.
pub fn brent(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::ConvergenceFailure(format!(
            "root not bracketed in [{a}, {b}]"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::ConvergenceFailure(format!(
        "Brent iteration cap {max_iter} reached near {b}"
    )))
}

/// Maximise a function on `[a, b]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for order in [1, 2, 5, 16, 20, 33] {
            let (x, w) = gauss_legendre(order);
            for deg in 0..(2 * order) {
                let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "order {order} deg {deg}");
            }
        }
    }

    #[test]
    fn panel_rule_handles_graded_origin_and_breakpoints() {
        let layout = PanelLayout::new(3.0, 0.5, 12).with_breakpoints([0.3, 7.0]);
        let edges = layout.edges();
        assert!(edges.contains(&0.3));
        assert!(edges.contains(&0.0));
        assert_eq!(edges.first().copied(), Some(-3.0));
        assert_eq!(edges.last().copied(), Some(3.0));
        let rule = layout.build();
        // |x|^1.5 has a singular second derivative at 0.
        let got = rule.integrate(|x: f64| x.abs().powf(1.5));
        let exact = 2.0 * 3f64.powf(2.5) / 2.5;
        assert!((got - exact).abs() < 1e-12 * exact);
        // Jump at the breakpoint is integrated exactly.
        let step = rule.integrate(|x| if x > 0.3 { 1.0 } else { 0.0 });
        assert!((step - 2.7).abs() < 1e-13);
    }

    #[test]
    fn brent_finds_simple_roots() {
        let r = brent(|x| x * x - 2.0, 0.0, 2.0, -2.0, 2.0, 1e-15, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        assert!(brent(|x| x, 1.0, 2.0, 1.0, 2.0, 1e-12, 10).is_err());
    }

    #[test]
    fn golden_section_locates_interior_maximum() {
        let (x, fx) = golden_max(|x| -(x - 0.7) * (x - 0.7) + 3.0, 0.0, 2.0, 80);
        assert!((x - 0.7).abs() < 1e-7);
        assert!((fx - 3.0).abs() < 1e-12);
    }
}
