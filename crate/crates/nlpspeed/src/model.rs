//! Model parameters, decay-rate specification, algebraic speed formulas and
//! hypothesis validators for the three-species competition-diffusion system
//!
//! ```text
//! u1_t = d1 u1_xx + r1 u1 (1 - u1 - a12 u2 - a13 u3)
//! u2_t =    u2_xx +    u2 (1 - a21 u1 - u2 - a23 u3)
//! u3_t = d3 u3_xx + r3 u3 (1 - a31 u1 - a32 u2 - u3)
//! ```
//!
//! The second species is normalized (d2 = r2 = 1) and those values are never
//! stored.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::closed_form;
use crate::error::{Error, Result};

/// Diffusion, growth and competition coefficients of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub d1: f64,
    pub d3: f64,
    pub r1: f64,
    pub r3: f64,
    pub a12: f64,
    pub a13: f64,
    pub a21: f64,
    pub a23: f64,
    pub a31: f64,
    pub a32: f64,
}

impl ModelParams {
    /// Shared coefficients of the published scenarios, with the given
    /// `a21`, `a13` and `a23`.
    pub fn published(a21: f64, a13: f64, a23: f64) -> Self {
        Self {
            d1: 1.0,
            d3: 0.6,
            r1: 1.08,
            r3: 1.1,
            a12: 1.2,
            a13,
            a21,
            a23,
            a31: 0.1,
            a32: 0.4,
        }
    }

    /// Checks that diffusion and growth rates are positive and finite and
    /// that competition coefficients are non-negative and finite.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d1", self.d1),
            ("d3", self.d3),
            ("r1", self.r1),
            ("r3", self.r3),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and strictly positive",
                });
            }
        }
        let non_negative = [
            ("a12", self.a12),
            ("a13", self.a13),
            ("a21", self.a21),
            ("a23", self.a23),
            ("a31", self.a31),
            ("a32", self.a32),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and non-negative",
                });
            }
        }
        Ok(())
    }

    /// Linear spreading speed of the third species alone, `2 sqrt(d3 r3)`.
    pub fn alpha3(&self) -> f64 {
        2.0 * (self.d3 * self.r3).sqrt()
    }

    /// Spreading speed of the first species alone, `2 sqrt(d1 r1)`.
    pub fn c1(&self) -> f64 {
        2.0 * (self.d1 * self.r1).sqrt()
    }

    /// Diffusion coefficients `(d1, d2, d3)`.
    pub fn diffusions(&self) -> [f64; 3] {
        [self.d1, 1.0, self.d3]
    }

    /// Growth rates `(r1, r2, r3)`.
    pub fn growth_rates(&self) -> [f64; 3] {
        [self.r1, 1.0, self.r3]
    }

    /// Competition matrix with unit diagonal.
    pub fn competition_matrix(&self) -> [[f64; 3]; 3] {
        [
            [1.0, self.a12, self.a13],
            [self.a21, 1.0, self.a23],
            [self.a31, self.a32, 1.0],
        ]
    }

    /// Sets a coefficient by name; returns `false` if the name is unknown.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "d1" => &mut self.d1,
            "d3" => &mut self.d3,
            "r1" => &mut self.r1,
            "r3" => &mut self.r3,
            "a12" => &mut self.a12,
            "a13" => &mut self.a13,
            "a21" => &mut self.a21,
            "a23" => &mut self.a23,
            "a31" => &mut self.a31,
            "a32" => &mut self.a32,
            _ => return false,
        };
        *slot = value;
        true
    }
}

/// Exponential decay rate of the initial datum of the third species.
///
/// `Infinite` stands for compactly supported initial data and satisfies every
/// "rate at least threshold" test categorically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayRate {
    Finite(f64),
    Infinite,
}

impl DecayRate {
    /// Builds a finite decay rate, rejecting non-positive or non-finite values.
    pub fn finite(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(Self::Finite(lambda))
        } else {
            Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "finite decay rate must be strictly positive",
            })
        }
    }

    /// Whether the rate is at least `threshold`.
    pub fn at_least(&self, threshold: f64) -> bool {
        match *self {
            Self::Finite(l) => l >= threshold,
            Self::Infinite => true,
        }
    }

    /// `min(lambda, cap)`.
    pub fn min_with(&self, cap: f64) -> f64 {
        match *self {
            Self::Finite(l) => l.min(cap),
            Self::Infinite => cap,
        }
    }

    /// The finite value, if any.
    pub fn value(&self) -> Option<f64> {
        match *self {
            Self::Finite(l) => Some(l),
            Self::Infinite => None,
        }
    }
}

impl fmt::Display for DecayRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(l) => write!(f, "{l}"),
            Self::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for DecayRate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Self::Finite(l) => serializer.serialize_f64(l),
            Self::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for DecayRate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(l) => DecayRate::finite(l).map_err(serde::de::Error::custom),
            Repr::Text(s) if matches!(s.as_str(), "inf" | "infinite" | "Infinite") => {
                Ok(DecayRate::Infinite)
            }
            Repr::Text(s) => Err(serde::de::Error::custom(format!(
                "decay rate must be a positive number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Speeds of the two faster fronts together with the decay rate of `u3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisContext {
    pub c1: f64,
    pub c2: f64,
    pub lambda: DecayRate,
}

impl HypothesisContext {
    /// Builds an admissible context: `c1 > c2 > 0`, and `c2 > sigma3(lambda)`
    /// for a finite decay rate.
    pub fn new(p: &ModelParams, c1: f64, c2: f64, lambda: DecayRate) -> Result<Self> {
        if !(c1 > c2 && c2 > 0.0) {
            return Err(Error::Domain {
                formula: "hypothesis context",
                reason: format!("need c1 > c2 > 0, got c1 = {c1}, c2 = {c2}"),
            });
        }
        if let DecayRate::Finite(_) = lambda {
            let s3 = sigma3(p, lambda);
            if c2 <= s3 {
                return Err(Error::Domain {
                    formula: "hypothesis context",
                    reason: format!("need c2 > sigma3(lambda), got c2 = {c2}, sigma3 = {s3}"),
                });
            }
        }
        Ok(Self { c1, c2, lambda })
    }
}

/// One named condition of a hypothesis check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Condition {
    pub label: String,
    pub holds: bool,
    pub detail: String,
}

/// Outcome of a hypothesis check, condition by condition.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Verdict {
    pub conditions: Vec<Condition>,
}

impl Verdict {
    fn push(&mut self, label: &str, holds: bool, detail: String) {
        self.conditions.push(Condition {
            label: label.to_string(),
            holds,
            detail,
        });
    }

    /// Whether every condition holds.
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    /// Whether the condition with the given label holds (false if absent).
    pub fn holds(&self, label: &str) -> bool {
        self.conditions
            .iter()
            .any(|c| c.label == label && c.holds)
    }

    /// Conditions that fail.
    pub fn failures(&self) -> impl Iterator<Item = &Condition> {
        self.conditions.iter().filter(|c| !c.holds)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            let mark = if c.holds { "ok  " } else { "FAIL" };
            writeln!(f, "[{mark}] {}: {}", c.label, c.detail)?;
        }
        Ok(())
    }
}

/// Checks the competitive hierarchy `d3 r3 < 1 < d1 r1`, `a21 < 1 < a12`
/// and `a31 + a32 < 1`, each condition separately.
pub fn validate_hierarchy(p: &ModelParams) -> Verdict {
    let mut v = Verdict::default();
    let (d3r3, d1r1) = (p.d3 * p.r3, p.d1 * p.r1);
    v.push(
        "d3*r3 < 1",
        d3r3 < 1.0,
        format!("d3*r3 = {d3r3}"),
    );
    v.push(
        "1 < d1*r1",
        1.0 < d1r1,
        format!("d1*r1 = {d1r1}"),
    );
    v.push("a21 < 1", p.a21 < 1.0, format!("a21 = {}", p.a21));
    v.push("1 < a12", 1.0 < p.a12, format!("a12 = {}", p.a12));
    let sum = p.a31 + p.a32;
    v.push("a31 + a32 < 1", sum < 1.0, format!("a31 + a32 = {sum}"));
    v
}

/// Upper bound for the speed of the third species invading open space with
/// decay rate `lambda`: `d3 lambda + r3 / lambda` below `sqrt(r3/d3)`,
/// `2 sqrt(d3 r3)` otherwise.
pub fn sigma3(p: &ModelParams, lambda: DecayRate) -> f64 {
    let critical = (p.r3 / p.d3).sqrt();
    match lambda {
        DecayRate::Finite(l) if l < critical => p.d3 * l + p.r3 / l,
        _ => p.alpha3(),
    }
}

/// Nonlocally pulled speed of the second species behind a first front of
/// speed `c1`.
pub fn hat_s_nlp(p: &ModelParams, c1: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p.a21) {
        return Err(Error::InvalidParameter {
            name: "a21",
            value: p.a21,
            reason: "must lie in [0, 1)",
        });
    }
    if !(c1.is_finite() && c1 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "c1",
            value: c1,
            reason: "must be finite and strictly positive",
        });
    }
    let (sa, sb) = (p.a21.sqrt(), (1.0 - p.a21).sqrt());
    if c1 <= 2.0 * (sa + sb) {
        let h = c1 / 2.0 - sa;
        if h <= 0.0 {
            return Err(Error::Domain {
                formula: "hat_s_nlp",
                reason: format!("c1/2 = {} does not exceed sqrt(a21) = {sa}", c1 / 2.0),
            });
        }
        Ok(h + (1.0 - p.a21) / h)
    } else {
        Ok(2.0 * sb)
    }
}

/// Bracket for the minimal traveling-wave speed of `u3` invading the
/// `(u1, u2)` state, with the linearly determined value when known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CllwBracket {
    pub lower: f64,
    pub upper: f64,
    pub linear: Option<f64>,
}

impl CllwBracket {
    /// Whether the speed is linearly determined.
    pub fn is_determinate(&self) -> bool {
        self.linear.is_some()
    }
}

/// Bracket and, under the linear-determinacy condition (`d3 >= 1/2`,
/// `a32 (1 - a21) < 1 < a23 / (1 - a21)`, `a32 a23 < 1`), the value of the
/// minimal speed.
pub fn c_llw(p: &ModelParams) -> Result<CllwBracket> {
    if p.a21 >= 1.0 {
        return Err(Error::InvalidParameter {
            name: "a21",
            value: p.a21,
            reason: "must be below 1",
        });
    }
    let upper = p.alpha3();
    let lower = 2.0 * (p.d3 * p.r3 * (1.0 - p.a32 * (1.0 - p.a21))).max(0.0).sqrt();
    let pressure = p.a32 * (1.0 - p.a21);
    let determinate = p.d3 >= 0.5
        && pressure < 1.0
        && 1.0 < p.a23 / (1.0 - p.a21)
        && p.a32 * p.a23 < 1.0;
    Ok(CllwBracket {
        lower,
        upper,
        linear: determinate.then_some(lower),
    })
}

/// Result of the hypothesis check on the two faster species.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem12Check {
    pub context: Option<HypothesisContext>,
    pub verdict: Verdict,
}

/// Verifies the hierarchy, the sufficient condition for the first two
/// fronts to travel at `c1 = 2 sqrt(d1 r1)` and `c2 = hat_s_nlp(c1)`, and
/// that the third species is slower (`2 sqrt(d3 r3) < c2` for compact
/// support, `sigma3(lambda) < c2` otherwise).
pub fn check_theorem12(p: &ModelParams, lambda: DecayRate) -> Theorem12Check {
    let mut verdict = validate_hierarchy(p);
    verdict.push("d1 = 1", p.d1 == 1.0, format!("d1 = {}", p.d1));
    let product = p.a12 * p.a21;
    let bound = 1.0f64.max(2.0 * (1.0 - p.a21));
    verdict.push(
        "a12*a21 < max{1, 2(1-a21)}",
        product < bound,
        format!("a12*a21 = {product}, bound = {bound}"),
    );
    let c1 = p.c1();
    let c2 = hat_s_nlp(p, c1);
    match &c2 {
        Ok(c2) => {
            let c2 = *c2;
            let (label, slow) = match lambda {
                DecayRate::Infinite => ("2 sqrt(d3 r3) < c2", p.alpha3()),
                DecayRate::Finite(_) => ("sigma3(lambda) < c2", sigma3(p, lambda)),
            };
            verdict.push(label, slow < c2, format!("{slow} vs c2 = {c2}"));
        }
        Err(e) => verdict.push("c2 = hat_s_nlp(c1)", false, e.to_string()),
    }
    let context = match (verdict.passed(), c2) {
        (true, Ok(c2)) => HypothesisContext::new(p, c1, c2, lambda).ok(),
        _ => None,
    };
    Theorem12Check { context, verdict }
}

/// Conditions under which the third species spreads at the free-boundary
/// speed for every small `a21`: the three structural groups and the two
/// smallness groups evaluated at the given `a21`.
pub fn check_corollary_113(p: &ModelParams) -> Verdict {
    let mut v = Verdict::default();
    let g15 = p.d1 == 1.0 && p.a12 > 1.0 && p.a32 <= 0.5 && p.a31 <= p.a32 / p.a12;
    v.push(
        "(A) d1 = 1, a12 > 1, a32 <= 1/2, a31 <= a32/a12",
        g15,
        format!(
            "d1 = {}, a12 = {}, a32 = {}, a31 = {} vs a32/a12 = {}",
            p.d1,
            p.a12,
            p.a32,
            p.a31,
            p.a32 / p.a12
        ),
    );
    let g16 = p.d3 >= 0.5 && p.a13 > 1.0 && 1.0 < p.a23 && p.a23 * p.a32 < 1.0;
    v.push(
        "(B) d3 >= 1/2, a13 > 1, 1 < a23 < 1/a32",
        g16,
        format!("d3 = {}, a13 = {}, a23 = {}, a32 = {}", p.d3, p.a13, p.a23, p.a32),
    );
    let sum_roots = p.a32.sqrt() + (1.0 - p.a32).max(0.0).sqrt();
    let (sd3, sr3, sr1) = (p.d3.sqrt(), p.r3.sqrt(), p.r1.sqrt());
    let g17 = 1.0 / (sd3 * sum_roots) < sr3
        && sr3 < 1.0 / sd3
        && 1.0 < sr1
        && sr1 < (p.d3 * p.r3).sqrt() * sum_roots;
    v.push(
        "(C) 1/(sqrt(d3)(sqrt(a32)+sqrt(1-a32))) < sqrt(r3) < 1/sqrt(d3), 1 < sqrt(r1) < sqrt(d3 r3)(sqrt(a32)+sqrt(1-a32))",
        g17,
        format!(
            "{} < {sr3} < {}; 1 < {sr1} < {}",
            1.0 / (sd3 * sum_roots),
            1.0 / sd3,
            (p.d3 * p.r3).sqrt() * sum_roots
        ),
    );

    let lower = 2.0 * (p.d3 * p.r3 * (1.0 - p.a32 * (1.0 - p.a21))).max(0.0).sqrt();
    let s_nlp = hat_s_nlp(p, p.c1()).and_then(|c2| {
        closed_form::s_nlp_closed(p, p.c1(), c2, DecayRate::Infinite)
    });
    match s_nlp {
        Ok(s) => {
            let product = p.a12 * p.a21;
            v.push(
                "(D) a12*a21 < 1, 2 sqrt(d3 r3 (1 - a32(1-a21))) < s_nlp",
                product < 1.0 && lower < s,
                format!("a12*a21 = {product}; {lower} vs s_nlp = {s}"),
            );
        }
        Err(e) => v.push(
            "(D) a12*a21 < 1, 2 sqrt(d3 r3 (1 - a32(1-a21))) < s_nlp",
            false,
            e.to_string(),
        ),
    }
    let one_minus = 1.0 - p.a21;
    let g19 = p.a32 * one_minus < 1.0
        && one_minus > 0.0
        && 1.0 < p.a23 / one_minus
        && (p.d3 * p.r3).sqrt() < one_minus.max(0.0).sqrt()
        && p.a21.sqrt() + one_minus.max(0.0).sqrt() < sr1;
    v.push(
        "(E) a32(1-a21) < 1 < a23/(1-a21), sqrt(d3 r3) < sqrt(1-a21), sqrt(a21)+sqrt(1-a21) < sqrt(r1)",
        g19,
        format!(
            "a32(1-a21) = {}, a23/(1-a21) = {}, sqrt(d3 r3) = {} vs {}, {} vs sqrt(r1) = {sr1}",
            p.a32 * one_minus,
            p.a23 / one_minus,
            (p.d3 * p.r3).sqrt(),
            one_minus.max(0.0).sqrt(),
            p.a21.sqrt() + one_minus.max(0.0).sqrt()
        ),
    );
    v
}

/// Decay rate of the minimal traveling wave in the linearly determined
/// case: the smaller root of `lambda c - d3 lambda^2 - r3 (1 - a32 (1 - a21)) = 0`.
pub fn lambda_llw(p: &ModelParams) -> Result<f64> {
    let bracket = c_llw(p)?;
    let c = bracket.linear.ok_or_else(|| Error::Domain {
        formula: "lambda_llw",
        reason: "minimal speed is not linearly determined".into(),
    })?;
    lambda_llw_for(p, c)
}

/// Smaller root of `lambda c - d3 lambda^2 - r3 (1 - a32 (1 - a21)) = 0` for a
/// given speed `c`.
pub fn lambda_llw_for(p: &ModelParams, c: f64) -> Result<f64> {
    let reduced = 1.0 - p.a32 * (1.0 - p.a21);
    let disc = c * c - p.alpha3().powi(2) * reduced;
    // The linear value makes the discriminant vanish up to rounding.
    let disc = if disc.abs() <= 1e-12 * c * c { 0.0 } else { disc };
    if disc < 0.0 {
        return Err(Error::Domain {
            formula: "lambda_llw",
            reason: format!("negative discriminant {disc} for c = {c}"),
        });
    }
    Ok((c - disc.sqrt()) / (2.0 * p.d3))
}

/// Speed bound for `u3` invading the `(u1, u2)` state on `{x < c_hat t}`
/// given an exponential bound with rate `mu_hat` on the ray `x = c_hat t`.
pub fn kanon_speed_bound(p: &ModelParams, c_hat: f64, mu_hat: f64) -> Result<f64> {
    if !(c_hat > 0.0 && mu_hat > 0.0) {
        return Err(Error::Domain {
            formula: "kanon_speed_bound",
            reason: format!("need c_hat > 0 and mu_hat > 0, got {c_hat}, {mu_hat}"),
        });
    }
    let c = c_llw(p)?.linear.ok_or_else(|| Error::Domain {
        formula: "kanon_speed_bound",
        reason: "minimal speed is not linearly determined".into(),
    })?;
    let lam = lambda_llw_for(p, c)?;
    if mu_hat >= lam * (c_hat - c) {
        return Ok(c);
    }
    let reduced_rate = p.r3 * (1.0 - p.a32 * (1.0 - p.a21));
    let radicand = c_hat * c_hat - 4.0 * p.d3 * (mu_hat + reduced_rate);
    if radicand < 0.0 {
        return Err(Error::Domain {
            formula: "kanon_speed_bound",
            reason: format!("negative radicand {radicand}"),
        });
    }
    Ok(c_hat - 2.0 * p.d3 * mu_hat / (c_hat - radicand.sqrt()))
}
