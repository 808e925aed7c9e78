//! Text grammar for the test-function corpus:
//!
//! ```text
//! poly:a0,a1,...   polynomial with the given coefficients
//! mono:m           monomial t^m, 0 <= m <= 12
//! expneg           e^{-t}
//! invsq            1/(1+t^2)
//! sqrt             sqrt(t)
//! sin              sin(t)
//! ```
//!
//! Every kind carries analytic second through fourth derivatives, and a
//! default weight order p: the degree for poly/mono, zero otherwise.

use std::fmt;
use std::sync::Arc;

use qszasz::analysis::WeightedFunction;

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionKind {
    Poly,
    Mono,
    ExpNeg,
    InvSq,
    Sqrt,
    Sin,
}

#[derive(Clone, Debug)]
pub struct FunctionSpec {
    pub kind: FunctionKind,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at byte {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

pub fn parse_function_spec(text: &str) -> Result<FunctionSpec, ParseError> {
    if text.is_empty() {
        return Err(ParseError { position: 0, message: "empty function spec".into() });
    }
    let (kind_str, rest) = match text.find(':') {
        Some(i) => (&text[..i], Some((&text[i + 1..], i + 1))),
        None => (text, None),
    };
    match kind_str {
        "poly" => {
            let (args, base) = rest.ok_or_else(|| ParseError {
                position: text.len(),
                message: "poly needs a coefficient list, e.g. poly:1,0,-0.5".into(),
            })?;
            if args.is_empty() {
                return Err(ParseError { position: base, message: "empty coefficient list".into() });
            }
            let mut params = Vec::new();
            let mut offset = base;
            for piece in args.split(',') {
                let v: f64 = piece.trim().parse().map_err(|_| ParseError {
                    position: offset,
                    message: format!("malformed number '{piece}'"),
                })?;
                params.push(v);
                offset += piece.len() + 1;
            }
            Ok(FunctionSpec { kind: FunctionKind::Poly, params })
        }
        "mono" => {
            let (args, base) = rest.ok_or_else(|| ParseError {
                position: text.len(),
                message: "mono needs a degree, e.g. mono:2".into(),
            })?;
            let m: u32 = args.trim().parse().map_err(|_| ParseError {
                position: base,
                message: format!("malformed degree '{args}'"),
            })?;
            if m > 12 {
                return Err(ParseError {
                    position: base,
                    message: format!("monomial degree {m} outside 0..=12"),
                });
            }
            Ok(FunctionSpec { kind: FunctionKind::Mono, params: vec![m as f64] })
        }
        "expneg" | "invsq" | "sqrt" | "sin" => {
            if rest.is_some() {
                return Err(ParseError {
                    position: kind_str.len(),
                    message: format!("'{kind_str}' takes no parameters"),
                });
            }
            let kind = match kind_str {
                "expneg" => FunctionKind::ExpNeg,
                "invsq" => FunctionKind::InvSq,
                "sqrt" => FunctionKind::Sqrt,
                _ => FunctionKind::Sin,
            };
            Ok(FunctionSpec { kind, params: vec![] })
        }
        other => Err(ParseError { position: 0, message: format!("unknown function kind '{other}'") }),
    }
}

impl FunctionSpec {
    /// Materializes the function with its analytic derivatives and
    /// inferred weight order.
    pub fn to_weighted(&self) -> Result<WeightedFunction, qszasz::Error> {
        match self.kind {
            FunctionKind::Poly => WeightedFunction::polynomial(&self.params),
            FunctionKind::Mono => WeightedFunction::monomial(self.params[0] as u32),
            FunctionKind::ExpNeg => WeightedFunction::with_derivatives(
                |t| (-t).exp(),
                0,
                |t| (-t).exp(),
                Some(Arc::new(|t: f64| -(-t).exp())),
                Some(Arc::new(|t: f64| (-t).exp())),
            ),
            FunctionKind::InvSq => WeightedFunction::with_derivatives(
                |t| 1.0 / (1.0 + t * t),
                0,
                |t| {
                    let d = 1.0 + t * t;
                    (6.0 * t * t - 2.0) / (d * d * d)
                },
                Some(Arc::new(|t: f64| {
                    let d = 1.0 + t * t;
                    24.0 * t * (1.0 - t * t) / d.powi(4)
                })),
                Some(Arc::new(|t: f64| {
                    let d = 1.0 + t * t;
                    24.0 * (5.0 * t.powi(4) - 10.0 * t * t + 1.0) / d.powi(5)
                })),
            ),
            FunctionKind::Sqrt => WeightedFunction::with_derivatives(
                |t| t.sqrt(),
                0,
                |t| -0.25 * t.powf(-1.5),
                Some(Arc::new(|t: f64| 0.375 * t.powf(-2.5))),
                Some(Arc::new(|t: f64| -0.9375 * t.powf(-3.5))),
            ),
            FunctionKind::Sin => WeightedFunction::with_derivatives(
                f64::sin,
                0,
                |t| -t.sin(),
                Some(Arc::new(|t: f64| -t.cos())),
                Some(Arc::new(f64::sin)),
            ),
        }
    }
}
