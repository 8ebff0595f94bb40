//! Closed-form proximal operators for nonnegative combinations of
//! [`NonsmoothTerm`]s, and the Moreau envelope.

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{merge_families, NonsmoothFamily, NonsmoothTerm};

/// `h = Σ w_j g_j` with `w_j ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNonsmooth {
    pub terms: Vec<(f64, NonsmoothTerm)>,
}

/// A [`WeightedNonsmooth`] collapsed into one closed-form term.
///
/// Box indicators are scale invariant, so every box in the combination
/// contributes its constraint regardless of weight (including zero).
#[derive(Debug, Clone, PartialEq)]
pub enum CombinedTerm {
    Zero,
    L1 { level: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl WeightedNonsmooth {
    pub fn new(terms: Vec<(f64, NonsmoothTerm)>) -> Self {
        Self { terms }
    }

    pub fn single(term: NonsmoothTerm) -> Self {
        Self::new(vec![(1.0, term)])
    }

    /// `Σ λ_i g_i` over the terms of a problem.
    pub fn from_weights(weights: &[f64], terms: &[NonsmoothTerm]) -> Self {
        Self::new(weights.iter().cloned().zip(terms.iter().cloned()).collect())
    }

    pub fn combine(&self) -> Result<CombinedTerm> {
        let mut family = NonsmoothFamily::Zero;
        let mut level = 0.0;
        let mut bounds: Option<(Vec<f64>, Vec<f64>)> = None;
        for (w, term) in &self.terms {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "combination weight must be finite and nonnegative, got {w}"
                )));
            }
            family = merge_families(family, term.family())?;
            match term {
                NonsmoothTerm::Zero => {}
                NonsmoothTerm::WeightedL1 { weight } => level += w * weight,
                NonsmoothTerm::BoxIndicator { lower, upper } => match &mut bounds {
                    None => bounds = Some((lower.clone(), upper.clone())),
                    Some((lo, hi)) => {
                        if lo.len() != lower.len() {
                            return Err(Error::DimensionMismatch {
                                expected: lo.len(),
                                got: lower.len(),
                            });
                        }
                        for j in 0..lo.len() {
                            lo[j] = lo[j].max(lower[j]);
                            hi[j] = hi[j].min(upper[j]);
                        }
                    }
                },
            }
        }
        Ok(match family {
            NonsmoothFamily::Zero => CombinedTerm::Zero,
            NonsmoothFamily::L1 => CombinedTerm::L1 { level },
            NonsmoothFamily::Box => {
                let (lower, upper) = bounds.expect("box family has bounds");
                if lower.iter().zip(&upper).any(|(l, u)| l > u) {
                    return Err(Error::InvalidNonsmooth(
                        "box indicators have an empty intersection".into(),
                    ));
                }
                CombinedTerm::Box { lower, upper }
            }
        })
    }

    pub fn value(&self, x: &[f64]) -> Result<Option<f64>> {
        Ok(self.combine()?.value(x))
    }
}

impl CombinedTerm {
    /// `h(x)`, `None` outside the box.
    pub fn value(&self, x: &[f64]) -> Option<f64> {
        match self {
            Self::Zero => Some(0.0),
            Self::L1 { level } => Some(level * linalg::norm1(x)),
            Self::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| v >= l && v <= u)
                .then_some(0.0),
        }
    }

    /// `argmin_y { scale·h(y) + ½‖v − y‖² }`, written into `out`.
    pub fn prox_into(&self, scale: f64, v: &[f64], out: &mut [f64]) {
        match self {
            Self::Zero => out.copy_from_slice(v),
            Self::L1 { level } => {
                let t = scale * level;
                for (o, &vi) in out.iter_mut().zip(v) {
                    *o = soft_threshold(vi, t);
                }
            }
            Self::Box { lower, upper } => {
                for (j, (o, &vi)) in out.iter_mut().zip(v).enumerate() {
                    *o = vi.max(lower[j]).min(upper[j]);
                }
            }
        }
    }

    pub fn prox(&self, scale: f64, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.prox_into(scale, v, &mut out);
        out
    }

    /// `min_{u ∈ ∂h(z)} ‖r + u‖∞`: distance from `−r` to the subdifferential
    /// at `z`, measured in the max norm. `z` must lie in the domain.
    pub fn subdifferential_residual(&self, z: &[f64], r: &[f64]) -> f64 {
        match self {
            Self::Zero => linalg::norm_inf(r),
            Self::L1 { level } => z.iter().zip(r).fold(0.0, |m, (&zj, &rj)| {
                let res = if zj > 0.0 {
                    rj + level
                } else if zj < 0.0 {
                    rj - level
                } else {
                    (rj.abs() - level).max(0.0)
                };
                m.max(res.abs())
            }),
            Self::Box { lower, upper } => {
                let mut worst: f64 = 0.0;
                for j in 0..z.len() {
                    let tol = 1e-12 * (1.0 + z[j].abs());
                    let at_lo = (z[j] - lower[j]).abs() <= tol;
                    let at_hi = (upper[j] - z[j]).abs() <= tol;
                    // normal cone: (-inf, 0] at lower, [0, inf) at upper
                    let res = match (at_lo, at_hi) {
                        (true, true) => 0.0,
                        (true, false) => r[j].max(0.0),
                        (false, true) => r[j].min(0.0),
                        (false, false) => r[j],
                    };
                    worst = worst.max(res.abs());
                }
                worst
            }
        }
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `argmin_y { scale·h(y) + ½‖v − y‖² }`.
pub fn prox(h: &WeightedNonsmooth, scale: f64, v: &[f64]) -> Result<Vec<f64>> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "prox scale must be positive and finite, got {scale}"
        )));
    }
    Ok(h.combine()?.prox(scale, v))
}

/// `min_y { h(y) + ½‖x − y‖² }`, attained at `prox(h, 1, x)`.
pub fn moreau_envelope(h: &WeightedNonsmooth, x: &[f64]) -> Result<f64> {
    let c = h.combine()?;
    let p = c.prox(1.0, x);
    let hp = c.value(&p).expect("prox lies in the domain");
    Ok(hp + 0.5 * linalg::dist2_sq(x, &p))
}
