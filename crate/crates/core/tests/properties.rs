use proptest::prelude::*;
use statrs::function::gamma::gamma;
use std::sync::LazyLock;
use vpx_core::mrs::{mrs_number, MrsTable};
use vpx_core::norms::{best_approx_error_l2, weighted_norm, Domain, NormContext, NormRequest, TailModel, WeightMode};
use vpx_core::operators::{
    fourier_coeffs, fourier_coeffs_fw, taper, vp_eval, vp_from_coeffs, vp_literal_average, ExpansionCoeffs, TargetFn,
};
use vpx_core::orthopoly::RecurrenceTable;
use vpx_core::quad::PanelLayout;
use vpx_core::weights::WeightSpec;

struct Tables {
    mrs: MrsTable,
    table: RecurrenceTable,
}

fn tables(name: &str, n_max: usize) -> Tables {
    let spec = WeightSpec::preset(name).unwrap();
    let mrs = MrsTable::build(spec.clone(), 1..=(4 * n_max as u32)).unwrap();
    let table = RecurrenceTable::build(&spec, &mrs, n_max).unwrap();
    Tables { mrs, table }
}

static HERMITE: LazyLock<Tables> = LazyLock::new(|| tables("hermite", 48));
static ERDOS: LazyLock<Tables> = LazyLock::new(|| tables("erdos", 48));

fn pick(erdos: bool) -> &'static Tables {
    if erdos {
        &ERDOS
    } else {
        &HERMITE
    }
}

fn preset() -> impl Strategy<Value = WeightSpec> {
    prop::sample::select(WeightSpec::preset_names().to_vec()).prop_map(|n| WeightSpec::preset(n).unwrap())
}

fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

/// `∫ a(x) b(x) w²(x) dx` for series in the orthonormal basis, by quadrature.
fn inner(t: &Tables, a: &[f64], b: &[f64]) -> f64 {
    let rule = PanelLayout::new(t.table.radius(), t.table.radius() / 200.0, 24).build();
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * t.table.weighted_series(a, x).unwrap() * t.table.weighted_series(b, x).unwrap())
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weight_is_even(spec in preset(), x in 1e-6f64..8.0) {
        let x = x.min(spec.max_abs_x());
        prop_assert_eq!(spec.q(x), spec.q(-x));
        prop_assert_eq!(spec.t(x), spec.t(-x));
    }

    #[test]
    fn t_exceeds_one_for_presets(spec in preset(), x in 1e-4f64..6.0) {
        prop_assert!(spec.t(x.min(spec.max_abs_x())) >= 1.0 + 1e-9);
    }

    #[test]
    fn derivatives_agree_with_differences(spec in preset(), x in 0.2f64..3.0) {
        let x = x.min(0.5 * spec.max_abs_x());
        let h = 1e-5 * x;
        let v = spec.eval_q(x).unwrap();
        let (lo, hi) = (spec.eval_q(x - h).unwrap(), spec.eval_q(x + h).unwrap());
        prop_assert!(((hi.q - lo.q) / (2.0 * h) - v.qp).abs() <= 1e-6 * v.qp.abs());
        prop_assert!(((hi.qp - lo.qp) / (2.0 * h) - v.qpp).abs() <= 1e-6 * v.qpp.abs());
    }

    #[test]
    fn mrs_scaling_closed_form(alpha in 1.2f64..5.0, scale in 0.3f64..4.0, n in 1.0f64..300.0) {
        let spec = WeightSpec::freud(alpha, scale).unwrap();
        let a = mrs_number(&spec, n, 200).unwrap();
        let c = std::f64::consts::PI.sqrt() * gamma(alpha / 2.0) / (2.0 * gamma((alpha + 1.0) / 2.0));
        let exact = (scale * n * c).powf(1.0 / alpha);
        prop_assert!((a - exact).abs() <= 1e-10 * exact, "{} vs {}", a, exact);
    }

    #[test]
    fn mrs_numbers_increase(spec in preset(), n in 1u32..200, step in 1u32..50) {
        let t = MrsTable::new(spec);
        prop_assert!(t.a(n).unwrap() < t.a(n + step).unwrap());
    }

    #[test]
    fn taper_form_equals_literal_average(erdos in any::<bool>(), n in 1usize..24, c in coeffs(48), x in -1.0f64..1.0) {
        let t = pick(erdos);
        let c = &c[..2 * n];
        let x = x * t.mrs.a(n as u32).unwrap();
        let a = vp_eval(&vp_from_coeffs(c, n).unwrap(), &t.table, x).unwrap();
        let b = vp_literal_average(c, &t.table, n, x).unwrap();
        let scale: f64 = c.iter().map(|v| v.abs()).sum::<f64>() * t.table.eval_polys(x, 2 * n).unwrap().iter().map(|p| p.abs()).fold(0.0, f64::max);
        prop_assert!((a - b).abs() <= 1e-12 * scale.max(a.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn vp_is_linear(n in 1usize..24, f in coeffs(48), g in coeffs(48), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let lhs = vp_from_coeffs(&combo, n).unwrap().d;
        let (vf, vg) = (vp_from_coeffs(&f, n).unwrap().d, vp_from_coeffs(&g, n).unwrap().d);
        for k in 0..lhs.len() {
            prop_assert!((lhs[k] - (a * vf[k] + b * vg[k])).abs() <= 1e-12 * (1.0 + lhs[k].abs()));
        }
    }

    #[test]
    fn vp_has_degree_below_2n(n in 1usize..24, c in coeffs(48)) {
        let vp = vp_from_coeffs(&c, n).unwrap();
        prop_assert_eq!(vp.d.len(), 2 * n);
        prop_assert!((0..80).all(|k| k < 2 * n || taper(n, k) == 0.0));
    }

    #[test]
    fn vp_reproduces_polynomials(erdos in any::<bool>(), n in 1usize..20, c in coeffs(21)) {
        let t = pick(erdos);
        let c = &c[..=n];
        let proj = fourier_coeffs_fw(&t.table, &|x| t.table.weighted_series(c, x).unwrap(), &[], 2 * n).unwrap();
        let d = vp_from_coeffs(&proj.c, n).unwrap().d;
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (k, v) in d.iter().enumerate() {
            prop_assert!((v - c.get(k).copied().unwrap_or(0.0)).abs() <= 1e-10 * norm);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn vp_is_self_adjoint(erdos in any::<bool>(), n in 1usize..16, f in coeffs(48), g in coeffs(48)) {
        let t = pick(erdos);
        let vf = vp_from_coeffs(&f, n).unwrap().d;
        let vg = vp_from_coeffs(&g, n).unwrap().d;
        let lhs = inner(t, &vf, &g);
        let rhs = inner(t, &f, &vg);
        prop_assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + lhs.abs()), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn norm_is_homogeneous(erdos in any::<bool>(), c in -50.0f64..50.0, p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0, f64::INFINITY])) {
        let t = pick(erdos);
        let spec = t.table.spec().clone();
        let ctx = NormContext::new(&t.mrs, None);
        let req = NormRequest::new(p, WeightMode::WOverT4, Domain::Auto { n: 8 }).unwrap();
        let g = |x: f64| (x.sin() + 0.3) * spec.weight(x);
        let base = weighted_norm(&ctx, &g, &req, TailModel::Power { bound: 1.3, degree: 0 }).unwrap().value;
        let scaled = weighted_norm(&ctx, &|x| c * g(x), &req, TailModel::Power { bound: 1.3 * c.abs(), degree: 0 }).unwrap().value;
        prop_assert!((scaled - c.abs() * base).abs() <= 1e-12 * c.abs() * base);
    }

    #[test]
    fn triangle_inequality(erdos in any::<bool>(), a in coeffs(10), b in coeffs(10), p in prop::sample::select(vec![1.0, 2.0, 4.0, f64::INFINITY])) {
        let t = pick(erdos);
        let ctx = NormContext::new(&t.mrs, Some(&t.table));
        let req = NormRequest::new(p, WeightMode::W, Domain::Auto { n: 10 }).unwrap();
        let norm = |c: &[f64]| {
            let tail = TailModel::Series { norm: c.iter().map(|v| v * v).sum::<f64>().sqrt(), terms: c.len() };
            weighted_norm(&ctx, &|x| t.table.weighted_series(c, x).unwrap(), &req, tail).unwrap().value
        };
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        prop_assert!(norm(&sum) <= (norm(&a) + norm(&b)) * (1.0 + 1e-9));
    }

    #[test]
    fn l2_norm_is_log_convex_between_one_and_infinity(erdos in any::<bool>(), center in -1.0f64..1.0, width in 0.2f64..1.0) {
        let t = pick(erdos);
        let ctx = NormContext::new(&t.mrs, None);
        let f = TargetFn::Characteristic { a: center - width, b: center + width };
        let spec = t.table.spec().clone();
        let value = |p: f64| {
            let req = NormRequest::new(p, WeightMode::W, Domain::Auto { n: 4 }).unwrap().with_breakpoints(f.breakpoints(10.0));
            weighted_norm(&ctx, &|x| f.eval_fw(&spec, x), &req, TailModel::Compact).unwrap().value
        };
        let (n1, n2, ninf) = (value(1.0), value(2.0), value(f64::INFINITY));
        prop_assert!(n2 * n2 <= n1 * ninf * 1.05);
    }
}

#[test]
fn l2_best_error_decreases_in_n() {
    let t = pick(true);
    let c: ExpansionCoeffs = fourier_coeffs(&t.table, &TargetFn::Abs, 49).unwrap();
    let errs: Vec<f64> = (1..40).map(|n| best_approx_error_l2(&c, n).unwrap().value).collect();
    assert!(errs.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn build_quadrature_orthonormality() {
    for t in [pick(false), pick(true)] {
        let rule = t.table.layout().build();
        assert!(t.table.orthonormality_residual(&rule, 48).unwrap() <= 1e-10);
    }
}
