//! Explicit formula for the free-boundary speed `s_nlp(c1, c2, lambda)` and
//! the piecewise closed-form profiles of the variational inequality for the
//! rate `R(s) = r3 (1 - a31 1[c2 < s <= c1] - a32 1[s <= c2])`.

use crate::error::{Error, Result};
use crate::hj_speed::{single_rate_tail, Piece, Segment, SpeedFunction};
use crate::model::{DecayRate, ModelParams};

/// Which case of the explicit formula produced `s_nlp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Branch {
    /// `zeta1 > c2/(2 d3)`: slope `lambda_nlp1` at the free boundary.
    Steep,
    /// `zeta1 <= c2/(2 d3)`: slope `lambda_nlp2` at the free boundary.
    Shallow,
    /// `s_nlp = 2 sqrt(d3 r3 (1 - a32))`.
    Fallback,
}

/// Auxiliary rates and slopes of the explicit formula. Fields whose square
/// root would be of a negative number are `None`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ThmCIntermediates {
    pub zeta1: f64,
    pub zeta2: Option<f64>,
    pub lambda_nlp1: Option<f64>,
    pub lambda_nlp2: Option<f64>,
    pub branch: Branch,
    /// `zeta1 c1 - d3 zeta1^2 - r3 (1 - a31)`, the profile value at `c1`.
    pub rho_c1: f64,
    /// `s_nlp` given by the selected branch.
    pub s_nlp: f64,
}

fn check_speeds(c1: f64, c2: f64) -> Result<()> {
    if c1 > c2 && c2 > 0.0 && c1.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            formula: "s_nlp closed form",
            reason: format!("need c1 > c2 > 0, got c1 = {c1}, c2 = {c2}"),
        })
    }
}

/// `d3 l + r3 (1 - a32) / l`.
fn speed_of_slope(p: &ModelParams, l: f64) -> f64 {
    p.d3 * l + p.r3 * (1.0 - p.a32) / l
}

/// Largest slope for which `speed_of_slope` is on its decreasing branch.
fn critical_slope(p: &ModelParams) -> f64 {
    (p.r3 * (1.0 - p.a32) / p.d3).sqrt()
}

/// Computes `zeta1`, `zeta2`, `lambda_nlp1`, `lambda_nlp2` and selects the
/// branch of the explicit formula.
pub fn thm_c_intermediates(
    p: &ModelParams,
    c1: f64,
    c2: f64,
    lambda: DecayRate,
) -> Result<ThmCIntermediates> {
    check_speeds(c1, c2)?;
    let d = p.d3;
    let r = p.r3;
    let zeta1 = match lambda {
        DecayRate::Finite(l) if l < c1 / (2.0 * d) => {
            c1 / (2.0 * d) - ((c1 - 2.0 * d * l).powi(2) + 4.0 * d * r * p.a31).sqrt() / (2.0 * d)
        }
        _ => c1 / (2.0 * d) - (r * p.a31 / d).sqrt(),
    };
    let zeta2 = (p.a31 >= p.a32).then(|| c2 / (2.0 * d) + (r * (p.a31 - p.a32) / d).sqrt());
    let lambda_nlp1 = (p.a32 >= p.a31).then(|| c2 / (2.0 * d) - (r * (p.a32 - p.a31) / d).sqrt());
    let disc = (c2 - 2.0 * d * zeta1).powi(2) + 4.0 * d * r * (p.a32 - p.a31);
    let lambda_nlp2 = (disc >= 0.0).then(|| (c2 - disc.sqrt()) / (2.0 * d));
    let rho_c1 = zeta1 * c1 - d * zeta1 * zeta1 - r * (1.0 - p.a31);

    let critical = critical_slope(p);
    let usable = |l: Option<f64>| l.filter(|&l| l > 0.0 && l <= critical);
    let (branch, s_nlp) = if zeta1 > c2 / (2.0 * d) {
        match usable(lambda_nlp1) {
            Some(l) if p.a31 < p.a32 => (Branch::Steep, speed_of_slope(p, l)),
            _ => (Branch::Fallback, fallback(p)),
        }
    } else {
        let admissible = p.a31 < p.a32 || zeta2.is_some_and(|z2| zeta1 + z2 < c2 / d);
        match usable(lambda_nlp2) {
            Some(l) if admissible => (Branch::Shallow, speed_of_slope(p, l)),
            _ => (Branch::Fallback, fallback(p)),
        }
    };
    Ok(ThmCIntermediates {
        zeta1,
        zeta2,
        lambda_nlp1,
        lambda_nlp2,
        branch,
        rho_c1,
        s_nlp,
    })
}

/// `2 sqrt(d3 r3 (1 - a32))`, the lower bound of `s_nlp`.
pub fn fallback(p: &ModelParams) -> f64 {
    2.0 * (p.d3 * p.r3 * (1.0 - p.a32)).max(0.0).sqrt()
}

/// Explicit value of `s_nlp(c1, c2, lambda)`.
pub fn s_nlp_closed(p: &ModelParams, c1: f64, c2: f64, lambda: DecayRate) -> Result<f64> {
    thm_c_intermediates(p, c1, c2, lambda).map(|t| t.s_nlp)
}

/// Which closed-form profile applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ProfileCase {
    /// Three pieces below `c1`: zero, a line through `s_nlp`, the `zeta1` line.
    ThreePiece,
    /// Four pieces below `c1`: zero, a line through `s_nlp`, a parabola,
    /// the `zeta1` line.
    FourPiece,
}

/// Closed-form solution profile on `[0, infinity)`, sampled on `[0, s_max]`
/// with `n` intervals, when one of the two explicit cases applies.
pub fn rho_nlp_closed(
    p: &ModelParams,
    c1: f64,
    c2: f64,
    lambda: DecayRate,
    s_max: f64,
    n: usize,
) -> Result<Option<(ProfileCase, SpeedFunction)>> {
    let Some((case, segments)) = rho_nlp_segments(p, c1, c2, lambda)? else {
        return Ok(None);
    };
    Ok(Some((case, SpeedFunction::from_segments(segments, s_max, n))))
}

/// Analytic pieces of the closed-form profile, when one of the two
/// explicit cases applies.
pub fn rho_nlp_segments(
    p: &ModelParams,
    c1: f64,
    c2: f64,
    lambda: DecayRate,
) -> Result<Option<(ProfileCase, Vec<Segment>)>> {
    let t = thm_c_intermediates(p, c1, c2, lambda)?;
    let d = p.d3;
    let r = p.r3;
    let reduced = r * (1.0 - p.a32);
    let cap = c2 * (reduced / d).sqrt() - 2.0 * reduced;
    let zeta1 = t.zeta1;
    let zeta_line = Piece::tangent(zeta1, d, r * (1.0 - p.a31));

    let (case, mut segments) = if zeta1 <= c2 / (2.0 * d) {
        let rho_c2 = zeta1 * c2 - d * zeta1 * zeta1 - r * (1.0 - p.a31);
        let slope = t.lambda_nlp2.filter(|l| *l > 0.0);
        match slope {
            Some(l) if rho_c2 < cap => {
                let s_nlp = speed_of_slope(p, l);
                (
                    ProfileCase::ThreePiece,
                    vec![
                        Segment { lo: 0.0, hi: s_nlp, piece: Piece::Zero },
                        Segment { lo: s_nlp, hi: c2, piece: Piece::line_through(l, s_nlp) },
                        Segment { lo: c2, hi: c1, piece: zeta_line },
                    ],
                )
            }
            _ => return Ok(None),
        }
    } else {
        let rho_c2 = c2 * c2 / (4.0 * d) - r * (1.0 - p.a31);
        let slope = t.lambda_nlp1.filter(|l| *l > 0.0);
        match slope {
            Some(l) if rho_c2 < cap => {
                let s_nlp = speed_of_slope(p, l);
                let kink = 2.0 * d * zeta1;
                (
                    ProfileCase::FourPiece,
                    vec![
                        Segment { lo: 0.0, hi: s_nlp, piece: Piece::Zero },
                        Segment { lo: s_nlp, hi: c2, piece: Piece::line_through(l, s_nlp) },
                        Segment {
                            lo: c2,
                            hi: kink,
                            piece: Piece::Parabola { d, r: r * (1.0 - p.a31) },
                        },
                        Segment { lo: kink, hi: c1, piece: zeta_line },
                    ],
                )
            }
            _ => return Ok(None),
        }
    };
    segments.extend(single_rate_tail(d, r, lambda, c1));
    Ok(Some((case, segments)))
}
