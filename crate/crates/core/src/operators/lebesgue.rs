//! Weighted Lebesgue functions of `v_n`.
//!
//! With `V_n(x, t) = Σ_k τ_k p_k(x) p_k(t)` and `τ` the taper of `v_n`,
//!
//! ```text
//! L_n(x) = w(x) m_out(x) ∫ |V_n(x, t)| w(t) m_in(t) dt
//! ```
//!
//! and `sup_x L_n(x)` is the exact norm of `f ↦ v_n(f)` from the sup-norm
//! with multiplier `w / m_in` to the sup-norm with multiplier `w m_out`.
//! For `m_out = T^{-1/4}`, `m_in = 1` this is the bound of `v_n` in the
//! `T^{-1/4}` weighted sup-norm; swapping the roles gives the `L¹` norm.

use super::taper;
use crate::error::Result;
use crate::mrs::MrsTable;
use crate::orthopoly::RecurrenceTable;
use crate::quad::{brent, gauss_legendre, golden_max, PanelLayout};
use crate::weights::WeightSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const ORDER: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplier {
    One,
    /// T^{-1/4}
    InvQuarterT,
    /// T^{1/4}
    QuarterT,
    /// Φ_m^{1/2}
    SqrtPhi { m: u32 },
}

impl Multiplier {
    pub fn eval(&self, spec: &WeightSpec, mrs: &MrsTable, x: f64) -> Result<f64> {
        Ok(match *self {
            Multiplier::One => 1.0,
            Multiplier::InvQuarterT => spec.t(x).powf(-0.25),
            Multiplier::QuarterT => spec.t(x).powf(0.25),
            Multiplier::SqrtPhi { m } => mrs.phi(m, x)?.sqrt(),
        })
    }
}

/// Precomputed integration data for one `(n, m_out, m_in)` triple.
pub struct LebesgueFunctional<'a> {
    table: &'a RecurrenceTable,
    mrs: &'a MrsTable,
    n: usize,
    outer: Multiplier,
    inner: Multiplier,
    taper: Vec<f64>,
    radius: f64,
    gx: Vec<f64>,
    gw: Vec<f64>,
    edges: Vec<f64>,
    /// Per panel: for every node, `p_k(t) w(t)` for k < 2n.
    basis: Vec<f64>,
    /// Per node: GL weight times `m_in(t)`.
    node_weight: Vec<f64>,
    edge_basis: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LebesgueSup {
    pub n: usize,
    pub sup: f64,
    pub argmax: f64,
    pub grid_points: usize,
    pub radius: f64,
    pub t_nodes: usize,
}

impl<'a> LebesgueFunctional<'a> {
    pub fn new(
        table: &'a RecurrenceTable,
        mrs: &'a MrsTable,
        n: usize,
        outer: Multiplier,
        inner: Multiplier,
    ) -> Result<Self> {
        let taper: Vec<f64> = (0..2 * n).map(|k| taper(n, k)).collect();
        Self::with_taper(table, mrs, n, taper, outer, inner)
    }

    /// Arbitrary multiplier sequence `τ_k` (e.g. all ones for a partial sum).
    pub fn with_taper(
        table: &'a RecurrenceTable,
        mrs: &'a MrsTable,
        n: usize,
        taper: Vec<f64>,
        outer: Multiplier,
        inner: Multiplier,
    ) -> Result<Self> {
        let m = taper.len();
        table.eval_polys(0.0, m)?;
        let deg = m.max(1);
        let a_top = mrs.a(deg as u32)?;
        let radius = (1.5 * a_top).max(mrs.support_radius(deg, 1.0)?);
        let width = 3.0 * a_top / (deg as f64 + 6.0);
        let layout = PanelLayout::new(radius, width, ORDER);
        let edges = layout.edges();
        let (gx, gw) = gauss_legendre(ORDER);
        let spec = table.spec();
        let panels = edges.len() - 1;
        let mut basis = vec![0.0; panels * ORDER * m];
        let mut node_weight = vec![0.0; panels * ORDER];
        for p in 0..panels {
            let (a, b) = (edges[p], edges[p + 1]);
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for j in 0..ORDER {
                let t = mid + half * gx[j];
                let idx = p * ORDER + j;
                table.fill_weighted_basis(t, &mut basis[idx * m..(idx + 1) * m]);
                node_weight[idx] = half * gw[j] * inner.eval(spec, mrs, t)?;
            }
        }
        let mut edge_basis = vec![0.0; edges.len() * m];
        for (i, &e) in edges.iter().enumerate() {
            table.fill_weighted_basis(e, &mut edge_basis[i * m..(i + 1) * m]);
        }
        Ok(LebesgueFunctional {
            table,
            mrs,
            n,
            outer,
            inner,
            taper,
            radius,
            gx,
            gw,
            edges,
            basis,
            node_weight,
            edge_basis,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn t_nodes(&self) -> usize {
        self.node_weight.len()
    }

    /// `L_n(x)`.
    pub fn value(&self, x: f64) -> Result<f64> {
        let m = self.taper.len();
        let mut b = vec![0.0; m];
        self.table.fill_weighted_basis(x, &mut b);
        for (v, t) in b.iter_mut().zip(&self.taper) {
            *v *= t;
        }
        if b.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let spec = self.table.spec();
        let dot = |row: &[f64]| -> f64 { row.iter().zip(&b).map(|(p, q)| p * q).sum() };
        let h = |t: f64| self.table.weighted_series(&b, t).unwrap_or(0.0);
        let mut total = 0.0;
        let mut vals = [0.0; ORDER + 2];
        for p in 0..self.edges.len() - 1 {
            vals[0] = dot(&self.edge_basis[p * m..(p + 1) * m]);
            for j in 0..ORDER {
                let idx = p * ORDER + j;
                vals[j + 1] = dot(&self.basis[idx * m..(idx + 1) * m]);
            }
            vals[ORDER + 1] = dot(&self.edge_basis[(p + 1) * m..(p + 2) * m]);
            let sign_change = vals.windows(2).any(|w| w[0] * w[1] < 0.0);
            if !sign_change {
                for j in 0..ORDER {
                    total += vals[j + 1].abs() * self.node_weight[p * ORDER + j];
                }
                continue;
            }
            // split the panel at the roots of V(x, .) and integrate each piece
            let (a, b_edge) = (self.edges[p], self.edges[p + 1]);
            let (mid, half) = (0.5 * (a + b_edge), 0.5 * (b_edge - a));
            let mut pts = Vec::with_capacity(ORDER + 2);
            pts.push(a);
            pts.extend(self.gx.iter().map(|g| mid + half * g));
            pts.push(b_edge);
            let mut cuts = vec![a];
            for i in 0..pts.len() - 1 {
                if vals[i] * vals[i + 1] < 0.0 {
                    let r = brent(h, pts[i], pts[i + 1], vals[i], vals[i + 1], 1e-15 * (1.0 + pts[i].abs()), 200)?;
                    cuts.push(r);
                }
            }
            cuts.push(b_edge);
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                if hi <= lo {
                    continue;
                }
                let (cm, ch) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                for j in 0..ORDER {
                    let t = cm + ch * self.gx[j];
                    total += ch * self.gw[j] * h(t).abs() * self.inner.eval(spec, self.mrs, t)?;
                }
            }
        }
        Ok(total * self.outer.eval(spec, self.mrs, x)?)
    }

    /// `sup_x L_n(x)` over a grid on `[0, R]` refined by golden-section search
    /// around the largest grid values; `L_n` is even in `x`.
    pub fn sup(&self) -> Result<LebesgueSup> {
        let n = self.n.max(1);
        let mut xs: Vec<f64> = {
            let count = 16 * n + 128;
            (0..=count).map(|i| self.radius * i as f64 / count as f64).collect()
        };
        for m in [n as u32, 2 * n as u32] {
            let (am, dm) = (self.mrs.a(m)?, self.mrs.delta(m)?);
            let (lo, hi) = (am * (1.0 - dm), (am * (1.0 + dm)).min(self.radius));
            xs.extend((0..=32).map(|i| lo + (hi - lo) * i as f64 / 32.0));
        }
        xs.sort_by(|a, b| a.total_cmp(b));
        xs.dedup();
        let vals: Vec<f64> = xs.par_iter().map(|&x| self.value(x)).collect::<Result<_>>()?;
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]).then(i.cmp(&j)));
        let seeds: Vec<usize> = order.into_iter().take(4).collect();
        let refined: Vec<(f64, f64)> = seeds
            .par_iter()
            .map(|&i| {
                let lo = xs[i.saturating_sub(1)];
                let hi = xs[(i + 1).min(xs.len() - 1)];
                let (x, v) = golden_max(|x| self.value(x).unwrap_or(f64::NEG_INFINITY), lo, hi, 40);
                if v > vals[i] {
                    (x, v)
                } else {
                    (xs[i], vals[i])
                }
            })
            .collect();
        let (argmax, sup) = refined
            .into_iter()
            .fold((0.0, f64::NEG_INFINITY), |acc, c| if c.1 > acc.1 { c } else { acc });
        Ok(LebesgueSup {
            n: self.n,
            sup,
            argmax,
            grid_points: xs.len(),
            radius: self.radius,
            t_nodes: self.t_nodes(),
        })
    }
}

/// `L_n(x) = w(x) T(x)^{-1/4} ∫ |V_n(x, t)| w(t) dt`.
pub fn vp_lebesgue_function(table: &RecurrenceTable, mrs: &MrsTable, n: usize, x: f64) -> Result<f64> {
    LebesgueFunctional::new(table, mrs, n, Multiplier::InvQuarterT, Multiplier::One)?.value(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{fourier_coeffs, vp_mean, TargetFn};
    use crate::weights::WeightSpec;

    fn setup(spec: WeightSpec, n_max: usize) -> (MrsTable, RecurrenceTable) {
        let ns: Vec<u32> = (1..=2 * n_max as u32).collect();
        let mrs = MrsTable::build(spec.clone(), ns).unwrap();
        let table = RecurrenceTable::build(&spec, &mrs, n_max).unwrap();
        (mrs, table)
    }

    #[test]
    fn hermite_anchor_at_origin() {
        let (mrs, table) = setup(WeightSpec::hermite(), 8);
        let v = vp_lebesgue_function(&table, &mrs, 1, 0.0).unwrap();
        assert!((v - 2f64.powf(0.25)).abs() < 1e-10, "{v}");
    }

    #[test]
    fn lebesgue_function_is_even() {
        let (mrs, table) = setup(WeightSpec::preset("erdos").unwrap(), 16);
        let lf = LebesgueFunctional::new(&table, &mrs, 4, Multiplier::InvQuarterT, Multiplier::One).unwrap();
        for &x in &[0.3, 1.1, 2.0] {
            let (a, b) = (lf.value(x).unwrap(), lf.value(-x).unwrap());
            assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn sup_dominates_dictionary_ratios() {
        let spec = WeightSpec::hermite();
        let (mrs, table) = setup(spec.clone(), 32);
        let n = 4;
        let lf = LebesgueFunctional::new(&table, &mrs, n, Multiplier::InvQuarterT, Multiplier::One).unwrap();
        let sup = lf.sup().unwrap().sup;
        for f in [TargetFn::SignSin3, TargetFn::Sin, TargetFn::InvWeightClamped { radius: 3.0 }] {
            let c = fourier_coeffs(&table, &f, 2 * n).unwrap();
            let vp = vp_mean(&c, n).unwrap();
            let mut lhs: f64 = 0.0;
            for i in 0..=400 {
                let x = -8.0 + 16.0 * i as f64 / 400.0;
                let v = table.weighted_series(&vp.d, x).unwrap() * spec.t(x).powf(-0.25);
                lhs = lhs.max(v.abs());
            }
            let rhs = (0..=400)
                .map(|i| f.eval_fw(&spec, -8.0 + 16.0 * i as f64 / 400.0).abs())
                .fold(0.0, f64::max);
            assert!(lhs <= sup * rhs * (1.0 + 1e-6), "{f}: {lhs} > {sup} * {rhs}");
        }
    }

    #[test]
    fn sign_pattern_attains_lebesgue_value() {
        // f w = sign V(x0, .) realises L_n(x0) up to quadrature error.
        let spec = WeightSpec::hermite();
        let (mrs, table) = setup(spec.clone(), 16);
        let n = 3;
        let x0 = 0.9;
        let lf = LebesgueFunctional::new(&table, &mrs, n, Multiplier::One, Multiplier::One).unwrap();
        let target = lf.value(x0).unwrap();
        let mut b = table.eval_polys(x0, 2 * n).unwrap();
        for (k, v) in b.iter_mut().enumerate() {
            *v *= taper(n, k);
        }
        let rule = PanelLayout::new(12.0, 0.002, 8).build();
        let integral = rule.integrate(|t| {
            let v = table.weighted_series(&b, t).unwrap();
            v.abs()
        });
        let direct = integral * spec.weight(x0);
        assert!((direct - target).abs() < 1e-7 * target, "{direct} vs {target}");
    }
}
