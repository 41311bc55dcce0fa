//! Gaussian-approximation construction: a mean-value recursion in place of
//! full density evolution.
//!
//! Bit-channel LLRs are modeled as Gaussian with variance twice the mean,
//! so a single mean per channel suffices. The check step needs the
//! phi function E[tanh(L/2)] for such a Gaussian; its piecewise
//! approximation constants are configuration data (see
//! `config/ga_phi.json`), not hard-coded truth, since published variants
//! differ. Everything runs on ln(phi) to stay finite at large means.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::construct::{ChannelModel, ErrorProfile};
use super::DensityError;

/// Shipped default phi approximation (see `config/ga_phi.json`).
const DEFAULT_PHI_CONFIG: &str = include_str!("../../config/ga_phi.json");

/// One functional segment of the piecewise phi approximation.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiForm {
    /// phi(x) = exp(scale * x^power + offset), clamped to at most 1.
    ExpPower { scale: f64, power: f64, offset: f64 },
    /// phi(x) = sqrt(pi/x) * exp(-x/4) * (1 - tail/x).
    Asymptotic { tail: f64 },
}

impl PhiForm {
    /// ln phi(x) for x > 0, clamped to at most 0.
    fn ln_eval(&self, x: f64) -> f64 {
        let raw = match *self {
            PhiForm::ExpPower {
                scale,
                power,
                offset,
            } => scale * x.powf(power) + offset,
            PhiForm::Asymptotic { tail } => {
                0.5 * (std::f64::consts::PI.ln() - x.ln()) - 0.25 * x + (-tail / x).ln_1p()
            }
        };
        raw.min(0.0)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSegment {
    /// Upper end of the segment's mean range; absent on the last segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upto: Option<f64>,
    pub form: PhiForm,
}

/// Piecewise approximation of the Gaussian-assumption phi function.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiApproximation {
    /// Free-text provenance of the constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub segments: Vec<PhiSegment>,
}

const BISECTION_STEPS: u32 = 200;

impl PhiApproximation {
    pub fn from_json(text: &str) -> Result<Self, DensityError> {
        let phi: PhiApproximation =
            serde_json::from_str(text).map_err(|e| DensityError::PhiConfig(e.to_string()))?;
        phi.validate()?;
        Ok(phi)
    }

    fn validate(&self) -> Result<(), DensityError> {
        if self.segments.is_empty() {
            return Err(DensityError::PhiConfig("no segments".into()));
        }
        let mut lower = 0.0f64;
        for (idx, segment) in self.segments.iter().enumerate() {
            let last = idx == self.segments.len() - 1;
            match segment.upto {
                Some(upto) => {
                    if last {
                        return Err(DensityError::PhiConfig(
                            "last segment must be unbounded".into(),
                        ));
                    }
                    if !upto.is_finite() || upto <= lower {
                        return Err(DensityError::PhiConfig(format!(
                            "segment bounds must increase, got {upto} after {lower}"
                        )));
                    }
                    lower = upto;
                }
                None if !last => {
                    return Err(DensityError::PhiConfig(
                        "only the last segment may be unbounded".into(),
                    ));
                }
                None => {}
            }
            match segment.form {
                PhiForm::ExpPower { scale, power, .. } => {
                    if !(scale < 0.0 && power > 0.0) {
                        return Err(DensityError::PhiConfig(
                            "exp_power needs scale < 0 and power > 0".into(),
                        ));
                    }
                }
                PhiForm::Asymptotic { tail } => {
                    let seg_lower = if idx == 0 {
                        0.0
                    } else {
                        segment_lower(self, idx)
                    };
                    if tail.is_nan() || tail < 0.0 || seg_lower <= tail {
                        return Err(DensityError::PhiConfig(
                            "asymptotic segment must start above its tail constant".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// ln phi(x); phi(0) = 1 and phi decreases toward 0.
    pub fn ln_eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        for segment in &self.segments {
            match segment.upto {
                Some(upto) if x > upto => continue,
                _ => return segment.form.ln_eval(x),
            }
        }
        unreachable!("last segment is unbounded");
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.ln_eval(x).exp()
    }

    /// Mean x with ln phi(x) = target, by per-segment bisection. Segments
    /// are scanned in order, so the tiny overlaps a discontinuous
    /// approximation can create resolve deterministically to the first
    /// matching segment.
    pub fn inverse_ln(&self, target: f64) -> f64 {
        if target >= 0.0 {
            return 0.0;
        }
        let mut lower = 0.0f64;
        for (idx, segment) in self.segments.iter().enumerate() {
            let upper = match segment.upto {
                Some(upto) => upto,
                None => {
                    // Grow until the segment value drops below the target.
                    let mut hi = (2.0 * lower).max(1.0);
                    let mut guard = 0;
                    while segment.form.ln_eval(hi) > target && guard < BISECTION_STEPS {
                        hi *= 2.0;
                        guard += 1;
                    }
                    hi
                }
            };
            let value_at_upper = segment.form.ln_eval(upper);
            let last = idx == self.segments.len() - 1;
            if target >= value_at_upper || last {
                let (mut lo, mut hi) = (lower, upper);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (lo + hi);
                    if segment.form.ln_eval(mid) > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
            lower = upper;
        }
        unreachable!("last segment handles every target");
    }

    /// Check-node mean update: m' with
    /// phi(m') = phi(a) + phi(b) - phi(a) phi(b), evaluated in the log
    /// domain so vanishing phi values survive.
    pub fn check_mean(&self, a: f64, b: f64) -> f64 {
        let la = self.ln_eval(a);
        let lb = self.ln_eval(b);
        let ln_sum = log_add_exp(la, lb);
        let ln_y = if ln_sum == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            ln_sum + (-(la + lb - ln_sum).exp()).ln_1p()
        };
        self.inverse_ln(ln_y)
    }
}

impl Default for PhiApproximation {
    fn default() -> Self {
        Self::from_json(DEFAULT_PHI_CONFIG).expect("shipped phi config is valid")
    }
}

fn segment_lower(phi: &PhiApproximation, idx: usize) -> f64 {
    phi.segments[idx - 1].upto.unwrap_or(0.0)
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Gaussian tail Q(t).
pub fn q_function(t: f64) -> f64 {
    0.5 * erfc(t / std::f64::consts::SQRT_2)
}

/// Bit-channel means under the Gaussian approximation, natural order.
pub fn ga_means(
    model: &ChannelModel,
    n: u32,
    phi: &PhiApproximation,
) -> Result<Vec<f64>, DensityError> {
    model.validate()?;
    let ChannelModel::AwgnBpsk { noise_variance } = *model else {
        return Err(DensityError::NotAwgn);
    };
    let mut out = Vec::with_capacity(1 << n);
    fn recurse(phi: &PhiApproximation, mean: f64, depth: u32, out: &mut Vec<f64>) {
        if depth == 0 {
            out.push(mean);
            return;
        }
        recurse(phi, phi.check_mean(mean, mean), depth - 1, out);
        recurse(phi, 2.0 * mean, depth - 1, out);
    }
    recurse(phi, 2.0 / noise_variance, n, &mut out);
    Ok(out)
}

/// Gaussian-approximation construction: P(A_i) = Q(sqrt(m_i / 2)).
pub fn ga_construct(
    model: &ChannelModel,
    n: u32,
    phi: &PhiApproximation,
) -> Result<ErrorProfile, DensityError> {
    let means = ga_means(model, n, phi)?;
    ErrorProfile::new(
        means
            .iter()
            .map(|&m| q_function((m / 2.0).sqrt()))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_loads_and_is_monotone() {
        let phi = PhiApproximation::default();
        assert!(phi.source.is_some());
        assert_eq!(phi.eval(0.0), 1.0);
        let samples = [0.01, 0.1, 0.5, 1.0, 3.0, 8.0, 9.9, 10.1, 20.0, 100.0, 500.0];
        for pair in samples.windows(2) {
            assert!(
                phi.ln_eval(pair[0]) >= phi.ln_eval(pair[1]),
                "phi must not increase between {} and {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn inverse_round_trips_within_segments() {
        let phi = PhiApproximation::default();
        for &x in &[0.05, 0.5, 3.0, 9.0, 11.0, 50.0, 300.0, 3000.0] {
            let back = phi.inverse_ln(phi.ln_eval(x));
            assert!(((back - x) / x).abs() < 1e-6, "round trip {x} -> {back}");
        }
    }

    #[test]
    fn check_mean_degrades_and_var_doubles() {
        let phi = PhiApproximation::default();
        let model = ChannelModel::AwgnBpsk {
            noise_variance: 0.5,
        };
        let means = ga_means(&model, 1, &phi).unwrap();
        assert_eq!(means.len(), 2);
        assert!(means[0] > 0.0 && means[0] < 4.0, "check mean {}", means[0]);
        assert_eq!(means[1], 8.0);
        // The check output satisfies the defining relation.
        let y = phi.eval(means[0]);
        let p = phi.eval(4.0);
        assert!((y - (2.0 * p - p * p)).abs() < 1e-6);
    }

    #[test]
    fn all_variable_path_is_best() {
        let phi = PhiApproximation::default();
        let model = ChannelModel::AwgnBpsk {
            noise_variance: 0.8,
        };
        let profile = ga_construct(&model, 3, &phi).unwrap();
        let last = *profile.values().last().unwrap();
        for (i, &p) in profile.values().iter().enumerate().take(7) {
            assert!(last < p, "index {} not worse than the last", i + 1);
        }
    }

    #[test]
    fn large_means_stay_finite() {
        let phi = PhiApproximation::default();
        let model = ChannelModel::AwgnBpsk {
            noise_variance: 0.5,
        };
        let means = ga_means(&model, 10, &phi).unwrap();
        assert!(means.iter().all(|m| m.is_finite() && *m >= 0.0));
        assert_eq!(means[(1 << 10) - 1], 4.0 * 1024.0);
        let profile = ga_construct(&model, 10, &phi).unwrap();
        assert!(profile.values().iter().all(|p| p.is_finite()));
    }

    #[test]
    fn rejects_non_awgn_and_bad_configs() {
        let phi = PhiApproximation::default();
        assert!(matches!(
            ga_construct(&ChannelModel::Bec { erasure_prob: 0.5 }, 3, &phi),
            Err(DensityError::NotAwgn)
        ));
        assert!(PhiApproximation::from_json("{\"segments\": []}").is_err());
        // Unbounded segment in the middle.
        let bad = r#"{"segments": [
            {"form": {"type": "exp_power", "scale": -0.4, "power": 0.9, "offset": 0.0}},
            {"upto": 10.0, "form": {"type": "asymptotic", "tail": 1.4}}
        ]}"#;
        assert!(PhiApproximation::from_json(bad).is_err());
        // Asymptotic segment starting below its tail constant.
        let bad = r#"{"segments": [
            {"upto": 1.0, "form": {"type": "exp_power", "scale": -0.4, "power": 0.9, "offset": 0.0}},
            {"form": {"type": "asymptotic", "tail": 1.4}}
        ]}"#;
        assert!(PhiApproximation::from_json(bad).is_err());
    }
}
