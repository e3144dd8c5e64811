//! Built-in target functions `f` for approximation experiments.

use crate::error::{Error, Result};
use crate::weights::WeightSpec;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TargetFn {
    Sin,
    Cos,
    Abs,
    Sign,
    /// sign(sin 3x): bounded with jumps at multiples of π/3.
    SignSin3,
    GaussBump { center: f64, width: f64 },
    /// 1 / (1 + 25 x²)
    Runge,
    /// Monomial coefficients, lowest degree first.
    Poly(Vec<f64>),
    Characteristic { a: f64, b: f64 },
    /// `1/w` on `[-R, R]` and zero outside, so that `f w` is the indicator.
    InvWeightClamped { radius: f64 },
    Constant(f64),
}

/// Growth envelope `|f(x)| <= bound (1 + |x|)^degree`, or compact support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth {
    Power { bound: f64, degree: u32 },
    Compact { radius: f64 },
}

impl TargetFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TargetFn::Sin => x.sin(),
            TargetFn::Cos => x.cos(),
            TargetFn::Abs => x.abs(),
            TargetFn::Sign => sign(x),
            TargetFn::SignSin3 => sign((3.0 * x).sin()),
            TargetFn::GaussBump { center, width } => (-((x - center) / width).powi(2)).exp(),
            TargetFn::Runge => 1.0 / (1.0 + 25.0 * x * x),
            TargetFn::Poly(c) => c.iter().rev().fold(0.0, |acc, &a| acc * x + a),
            TargetFn::Characteristic { a, b } => {
                if x >= *a && x <= *b {
                    1.0
                } else {
                    0.0
                }
            }
            TargetFn::InvWeightClamped { .. } => f64::NAN,
            TargetFn::Constant(c) => *c,
        }
    }

    /// `f(x) w(x)`, exact where `f` alone would overflow.
    pub fn eval_fw(&self, spec: &WeightSpec, x: f64) -> f64 {
        match self {
            TargetFn::InvWeightClamped { radius } => {
                if x.abs() <= *radius {
                    1.0
                } else {
                    0.0
                }
            }
            _ => {
                let w = spec.weight(x);
                if w == 0.0 {
                    0.0
                } else {
                    self.eval(x) * w
                }
            }
        }
    }

    /// Classical derivative where `f` is absolutely continuous.
    pub fn derivative(&self, x: f64) -> Option<f64> {
        Some(match self {
            TargetFn::Sin => x.cos(),
            TargetFn::Cos => -x.sin(),
            TargetFn::Abs => sign(x),
            TargetFn::GaussBump { center, width } => {
                let z = (x - center) / width;
                -2.0 * z / width * (-z * z).exp()
            }
            TargetFn::Runge => -50.0 * x / (1.0 + 25.0 * x * x).powi(2),
            TargetFn::Poly(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &a)| acc * x + k as f64 * a),
            TargetFn::Constant(_) => 0.0,
            TargetFn::Sign
            | TargetFn::SignSin3
            | TargetFn::Characteristic { .. }
            | TargetFn::InvWeightClamped { .. } => return None,
        })
    }

    /// Growth envelope of `f'` where it exists.
    pub fn derivative_growth(&self) -> Option<Growth> {
        self.derivative(0.5)?;
        Some(match self {
            TargetFn::Sin | TargetFn::Cos | TargetFn::Abs => Growth::Power { bound: 1.0, degree: 0 },
            TargetFn::GaussBump { width, .. } => Growth::Power {
                bound: (2.0 / std::f64::consts::E).sqrt() / width,
                degree: 0,
            },
            TargetFn::Runge => Growth::Power { bound: 3.25, degree: 0 },
            TargetFn::Poly(c) => Growth::Power {
                bound: c.iter().enumerate().map(|(k, v)| k as f64 * v.abs()).sum(),
                degree: c.len().saturating_sub(2) as u32,
            },
            _ => Growth::Power { bound: 0.0, degree: 0 },
        })
    }

    pub fn is_absolutely_continuous(&self) -> bool {
        self.derivative(0.5).is_some()
    }

    pub fn is_even(&self) -> bool {
        match self {
            TargetFn::Cos | TargetFn::Abs | TargetFn::Runge | TargetFn::Constant(_) => true,
            TargetFn::InvWeightClamped { .. } => true,
            TargetFn::GaussBump { center, .. } => *center == 0.0,
            TargetFn::Characteristic { a, b } => *a == -*b,
            TargetFn::Poly(c) => c.iter().skip(1).step_by(2).all(|&v| v == 0.0),
            TargetFn::Sin | TargetFn::Sign | TargetFn::SignSin3 => false,
        }
    }

    /// Jumps and kinks of `f` (or `f w`) inside `[-radius, radius]`.
    pub fn breakpoints(&self, radius: f64) -> Vec<f64> {
        let pts = match self {
            TargetFn::Abs | TargetFn::Sign => vec![0.0],
            TargetFn::SignSin3 => {
                let step = PI / 3.0;
                let count = (radius / step).floor() as i64;
                (-count..=count).map(|k| k as f64 * step).collect()
            }
            TargetFn::Characteristic { a, b } => vec![*a, *b],
            TargetFn::InvWeightClamped { radius: r } => vec![-*r, *r],
            _ => Vec::new(),
        };
        pts.into_iter().filter(|p| p.abs() <= radius).collect()
    }

    pub fn growth(&self) -> Growth {
        match self {
            TargetFn::Abs => Growth::Power { bound: 1.0, degree: 1 },
            TargetFn::Poly(c) => Growth::Power {
                bound: c.iter().map(|v| v.abs()).sum(),
                degree: c.len().saturating_sub(1) as u32,
            },
            TargetFn::Constant(c) => Growth::Power { bound: c.abs(), degree: 0 },
            TargetFn::InvWeightClamped { radius } => Growth::Compact { radius: *radius },
            TargetFn::Characteristic { a, b } => Growth::Compact {
                radius: a.abs().max(b.abs()),
            },
            _ => Growth::Power { bound: 1.0, degree: 0 },
        }
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn parse_args(body: &str, expected: Option<usize>, name: &str) -> Result<Vec<f64>> {
    let args: Vec<f64> = if body.trim().is_empty() {
        Vec::new()
    } else {
        body.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number {s:?} in {name}(...)")))
            })
            .collect::<Result<_>>()?
    };
    if let Some(n) = expected {
        if args.len() != n {
            return Err(Error::Config(format!("{name} takes {n} arguments, got {}", args.len())));
        }
    }
    Ok(args)
}

impl FromStr for TargetFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let s = s.strip_prefix("builtin:").unwrap_or(s);
        let (name, body) = match s.find('(') {
            Some(i) => {
                let body = s[i + 1..]
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Config(format!("unclosed parenthesis in {s:?}")))?;
                (&s[..i], Some(body))
            }
            None => (s, None),
        };
        let args = |n: Option<usize>| parse_args(body.unwrap_or(""), n, name);
        let f = match name {
            "sin" => TargetFn::Sin,
            "cos" => TargetFn::Cos,
            "abs" => TargetFn::Abs,
            "sign" => TargetFn::Sign,
            "sign-sin3" => TargetFn::SignSin3,
            "runge" => TargetFn::Runge,
            "gauss-bump" => {
                let a = if body.is_some() { args(Some(2))? } else { vec![0.0, 1.0] };
                if a[1] <= 0.0 {
                    return Err(Error::Config("gauss-bump width must be positive".into()));
                }
                TargetFn::GaussBump { center: a[0], width: a[1] }
            }
            "poly" => {
                let a = args(None)?;
                if a.is_empty() {
                    return Err(Error::Config("poly needs at least one coefficient".into()));
                }
                TargetFn::Poly(a)
            }
            "characteristic" => {
                let a = args(Some(2))?;
                if a[0] >= a[1] {
                    return Err(Error::Config("characteristic(a, b) needs a < b".into()));
                }
                TargetFn::Characteristic { a: a[0], b: a[1] }
            }
            "inv-weight-clamped" => {
                let a = args(Some(1))?;
                if a[0] <= 0.0 {
                    return Err(Error::Config("inv-weight-clamped radius must be positive".into()));
                }
                TargetFn::InvWeightClamped { radius: a[0] }
            }
            "constant" => TargetFn::Constant(args(Some(1))?[0]),
            _ => return Err(Error::Config(format!("unknown target function {name:?}"))),
        };
        Ok(f)
    }
}

impl TryFrom<String> for TargetFn {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TargetFn> for String {
    fn from(f: TargetFn) -> String {
        f.to_string()
    }
}

impl fmt::Display for TargetFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetFn::Sin => write!(f, "sin"),
            TargetFn::Cos => write!(f, "cos"),
            TargetFn::Abs => write!(f, "abs"),
            TargetFn::Sign => write!(f, "sign"),
            TargetFn::SignSin3 => write!(f, "sign-sin3"),
            TargetFn::GaussBump { center, width } => write!(f, "gauss-bump({center},{width})"),
            TargetFn::Runge => write!(f, "runge"),
            TargetFn::Poly(c) => {
                let parts: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                write!(f, "poly({})", parts.join(","))
            }
            TargetFn::Characteristic { a, b } => write!(f, "characteristic({a},{b})"),
            TargetFn::InvWeightClamped { radius } => write!(f, "inv-weight-clamped({radius})"),
            TargetFn::Constant(c) => write!(f, "constant({c})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for s in [
            "sin",
            "cos",
            "abs",
            "sign",
            "sign-sin3",
            "runge",
            "gauss-bump(0.5,2)",
            "poly(1,0,-3)",
            "characteristic(-1,2)",
            "inv-weight-clamped(3)",
            "constant(2)",
        ] {
            let f: TargetFn = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert_eq!("builtin:sin".parse::<TargetFn>().unwrap(), TargetFn::Sin);
        assert!("tan".parse::<TargetFn>().is_err());
        assert!("characteristic(2,1)".parse::<TargetFn>().is_err());
    }

    #[test]
    fn derivatives_match_central_differences() {
        let fs: Vec<TargetFn> = ["sin", "cos", "abs", "runge", "gauss-bump(0.3,0.7)", "poly(1,2,3,4)"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        for f in &fs {
            for &x in &[-1.3, -0.2, 0.45, 2.0] {
                let h = 1e-6;
                let fd = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
                let d = f.derivative(x).unwrap();
                assert!((fd - d).abs() < 1e-6 * (1.0 + d.abs()), "{f} at {x}");
            }
        }
        assert!(TargetFn::Sign.derivative(1.0).is_none());
    }

    #[test]
    fn weighted_values_stay_finite() {
        let spec = WeightSpec::hermite();
        let f = TargetFn::InvWeightClamped { radius: 30.0 };
        assert_eq!(f.eval_fw(&spec, 29.0), 1.0);
        assert_eq!(f.eval_fw(&spec, 31.0), 0.0);
        assert_eq!(TargetFn::Poly(vec![0.0, 0.0, 1.0]).eval_fw(&spec, 1e6), 0.0);
        assert_eq!(TargetFn::SignSin3.breakpoints(1.1).len(), 3);
    }
}
