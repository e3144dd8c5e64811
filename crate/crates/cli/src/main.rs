use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use vpx_core::harness::{run_all, write_outputs, HarnessConfig, PValue};
use vpx_core::mrs::{check_doubling, MrsTable};
use vpx_core::norms::{weighted_norm, Domain, NormContext, NormRequest, TailModel, WeightMode};
use vpx_core::operators::{fourier_coeffs, vp_eval_weighted, vp_mean, TargetFn};
use vpx_core::orthopoly::{check_beta_ratio, verification_layout, RecurrenceTable};
use vpx_core::weights::{check_class_conditions, check_t_growth, WeightSpec};

#[derive(Parser)]
#[command(name = "vpx", version, about = "de la Vallée Poussin means for exponential weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mhaskar-Rakhmanov-Saff numbers as CSV: n, a_n, delta_n, T(a_n).
    Mrs {
        /// Weight file (TOML or JSON) or `preset:<name>`.
        #[arg(long)]
        spec: String,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32,64")]
        n_list: Vec<u32>,
    },
    /// Build the recurrence table and write it as JSON.
    Recurrence {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        n_max: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate v_n(f) on a grid as CSV: x, f, v_n, w, error = (f - v_n) w.
    Approx {
        #[arg(long)]
        spec: String,
        /// Target such as `sin`, `builtin:abs`, `gauss-bump(0,1)`, `poly(1,0,-2)`.
        #[arg(long)]
        f: String,
        #[arg(long)]
        n: usize,
        /// `count` on [-1.5 a_n, 1.5 a_n] or `lo:hi:count`.
        #[arg(long, default_value = "201", allow_hyphen_values = true)]
        grid: String,
    },
    /// Weighted L^p norm of f, printed as JSON.
    Norm {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        f: String,
        /// A number >= 1 or `inf`.
        #[arg(long, default_value = "2")]
        p: String,
        /// `w`, `w_over_T4` or `T4_w`.
        #[arg(long, default_value = "w")]
        mode: String,
        /// Degree scale used to pick the integration domain.
        #[arg(long, default_value_t = 16)]
        n: usize,
    },
    /// Run the configured experiments.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        emit_plots_data: bool,
    },
    /// Spot-check the weight class conditions and the table diagnostics.
    Check {
        #[arg(long)]
        spec: String,
        #[arg(long, default_value_t = 64)]
        n_max: usize,
        /// Half-width of the exceptional interval for the convexity condition.
        #[arg(long, default_value_t = 1.0)]
        j: f64,
    },
}

fn parse_grid(text: &str, default_radius: f64) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let (lo, hi, count) = match parts.as_slice() {
        [count] => (-default_radius, default_radius, count.parse::<usize>()?),
        [lo, hi, count] => (lo.parse::<f64>()?, hi.parse::<f64>()?, count.parse::<usize>()?),
        _ => bail!("grid must be `count` or `lo:hi:count`"),
    };
    if count < 2 || lo.is_nan() || hi.is_nan() || hi <= lo {
        bail!("grid needs at least two points and lo < hi");
    }
    Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Mrs { spec, n_list } => {
            let spec = WeightSpec::load(&spec)?;
            let mrs = MrsTable::build(spec.clone(), n_list.iter().copied())?;
            writeln!(out, "n,a_n,delta_n,T_a_n")?;
            for n in n_list {
                let a = mrs.a(n)?;
                writeln!(out, "{n},{a:.17e},{:.17e},{:.17e}", mrs.delta(n)?, spec.t(a))?;
            }
        }
        Command::Recurrence { spec, n_max, out: path } => {
            let spec = WeightSpec::load(&spec)?;
            let mrs = MrsTable::new(spec.clone());
            let table = RecurrenceTable::build(&spec, &mrs, n_max)?;
            let json = table.to_json()?;
            match path {
                Some(p) => std::fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?,
                None => writeln!(out, "{json}")?,
            }
        }
        Command::Approx { spec, f, n, grid } => {
            let spec = WeightSpec::load(&spec)?;
            let f: TargetFn = f.parse()?;
            let mrs = MrsTable::new(spec.clone());
            let table = RecurrenceTable::build(&spec, &mrs, 2 * n)?;
            let coeffs = fourier_coeffs(&table, &f, 2 * n)?;
            let vp = vp_mean(&coeffs, n)?;
            let xs = parse_grid(&grid, 1.5 * mrs.a(n as u32)?)?;
            writeln!(out, "x,f,v_n,w,error")?;
            for x in xs {
                let w = spec.weight(x);
                let fx = f.eval(x);
                let vw = vp_eval_weighted(&vp, &table, x)?;
                // v_n itself overflows where w underflows; report it from the weighted value
                let v = if w > 0.0 { vw / w } else { f64::NAN };
                let err = f.eval_fw(&spec, x) - vw;
                writeln!(out, "{x:.17e},{fx:.17e},{v:.17e},{w:.17e},{err:.17e}")?;
            }
        }
        Command::Norm { spec, f, p, mode, n } => {
            let spec = WeightSpec::load(&spec)?;
            let f: TargetFn = f.parse()?;
            let p: PValue = p.parse()?;
            let mode: WeightMode = mode.parse()?;
            let mrs = MrsTable::new(spec.clone());
            let ctx = NormContext::new(&mrs, None);
            let radius = mrs.support_radius(2 * n, 1.0)?;
            let req = NormRequest::new(p.0, mode, Domain::Auto { n })?.with_breakpoints(f.breakpoints(radius));
            let value = weighted_norm(&ctx, &|x| f.eval_fw(&spec, x), &req, TailModel::for_target(&f))?;
            let json = serde_json::json!({
                "f": f.to_string(),
                "p": p,
                "mode": mode.to_string(),
                "value": value.value,
                "error_budget": value.error_budget(),
                "tail_bound": value.tail_bound,
                "refinement_change": value.refinement_change,
                "radius": value.radius,
                "points": value.points,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&json)?)?;
        }
        Command::Run {
            config,
            out: dir,
            emit_plots_data,
        } => {
            let cfg = HarnessConfig::load(&config)?;
            let summary = run_all(&cfg)?;
            write_outputs(&summary, &dir, emit_plots_data)?;
            for r in &summary.experiments {
                let status = if r.pass { "PASS" } else { "FAIL" };
                let detail = r.error.as_deref().unwrap_or("");
                writeln!(out, "{status} {:<20} {:>8.2}s {detail}", r.experiment.name(), r.runtime_s)?;
            }
            if !summary.pass {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Check { spec, n_max, j } => {
            let spec = WeightSpec::load(&spec)?;
            let ns: Vec<u32> = (1..=2 * n_max as u32).collect();
            let mrs = MrsTable::build(spec.clone(), ns.iter().copied())?;
            let hi = (2.0 * mrs.a(2 * n_max as u32)?).min(spec.max_abs_x());
            let grid = vpx_core::checks::log_grid(1e-3, hi, 400);
            let table = RecurrenceTable::build(&spec, &mrs, n_max)?;
            let rule = verification_layout(&mrs, n_max)?.build();
            let reports = vec![
                check_class_conditions(&spec, &grid, j),
                check_t_growth(&spec, &mrs, &ns)?,
                check_doubling(&mrs, &ns[..n_max])?,
                check_beta_ratio(&table, &mrs, 0.1, 10.0)?,
            ];
            let residual = table.orthonormality_residual(&rule, n_max)?;
            let pass = reports.iter().all(|r| r.pass()) && residual <= 1e-8;
            let json = serde_json::json!({
                "spec": spec.to_string(),
                "pass": pass,
                "orthonormality_residual": residual,
                "reports": reports,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&json)?)?;
            if !pass {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
