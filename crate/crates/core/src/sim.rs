//! Monte-Carlo FER/BER simulation over the AWGN channel.
//!
//! Frames are keyed by (seed, SNR index, frame index), so every record is
//! reproducible bit for bit regardless of how many workers run the frame
//! pool or where the stopping rule cuts off a batch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};
use thiserror::Error;

use crate::arch::{ArchError, AugmentedCode, LocalGlobalCode};
use crate::bits::BitVector;
use crate::decode::{bp_decode, DecodeError};
use crate::polar::{encode, CodeProfile, PolarError};

/// Frames per scheduling batch. Fixed so the stopping rule lands on the
/// same frame count no matter how the pool is sized.
const FRAME_BATCH: u64 = 1024;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation parameter: {0}")]
    Invalid(String),
    #[error("empty SNR sweep")]
    EmptySweep,
    #[error("record sink failed: {0}")]
    Sink(#[from] std::io::Error),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Polar(#[from] PolarError),
}

/// Noise variance of the BPSK/AWGN channel at a given E_b/N_0 and code
/// rate: sigma^2 = 1 / (2 R 10^(EbN0/10)).
pub fn ebn0_db_to_noise_variance(ebn0_db: f64, rate: f64) -> Result<f64, SimError> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(SimError::Invalid(format!("rate {rate} outside (0, 1]")));
    }
    Ok(1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0)))
}

/// BPSK-modulates a codeword (0 -> +1, 1 -> -1), adds Gaussian noise of
/// the given variance, and returns the channel LLRs 2y/sigma^2.
pub fn awgn_transmit<R: Rng + ?Sized>(
    codeword: &BitVector,
    noise_variance: f64,
    rng: &mut R,
) -> Result<Vec<f64>, SimError> {
    if !noise_variance.is_finite() || noise_variance <= 0.0 {
        return Err(SimError::Invalid(format!(
            "noise variance {noise_variance} must be positive"
        )));
    }
    let scale = 2.0 / noise_variance;
    let sigma = noise_variance.sqrt();
    Ok(codeword
        .iter()
        .map(|&bit| {
            let symbol = if bit == 1 { -1.0 } else { 1.0 };
            scale * (symbol + sigma * standard_normal(rng))
        })
        .collect())
}

/// Box-Muller transform; the log argument is kept away from zero.
fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// How inner blocks are decoded during simulation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeMode {
    /// One plain polar code under standalone BP.
    Single,
    /// Each local-global block decoded on its own.
    Local,
    /// Joint decoding across the outer code.
    Global,
}

impl DecodeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DecodeMode::Single => "single",
            DecodeMode::Local => "local",
            DecodeMode::Global => "global",
        }
    }
}

/// The code a simulation measures, with its decoding mode.
#[derive(Clone, Debug)]
pub enum CodeUnderTest {
    Single(CodeProfile),
    Augmented(AugmentedCode),
    LocalGlobal {
        code: LocalGlobalCode,
        mode: DecodeMode,
    },
}

impl CodeUnderTest {
    pub fn mode(&self) -> DecodeMode {
        match self {
            CodeUnderTest::Single(_) => DecodeMode::Single,
            CodeUnderTest::Augmented(_) => DecodeMode::Global,
            CodeUnderTest::LocalGlobal { mode, .. } => *mode,
        }
    }

    /// Information bits carried per frame.
    pub fn info_len(&self) -> usize {
        match self {
            CodeUnderTest::Single(profile) => profile.k(),
            CodeUnderTest::Augmented(code) => code.outer_info_len() + code.inner_info_len(),
            CodeUnderTest::LocalGlobal { code, .. } => {
                code.global_info_len()
                    + (1..=code.blocks())
                        .map(|m| code.local_info_len(m))
                        .sum::<usize>()
            }
        }
    }

    pub fn rate(&self) -> f64 {
        match self {
            CodeUnderTest::Single(profile) => profile.rate(),
            CodeUnderTest::Augmented(code) => code.rate(),
            CodeUnderTest::LocalGlobal { code, .. } => code.rate(),
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if let CodeUnderTest::LocalGlobal { mode, .. } = self {
            if *mode == DecodeMode::Single {
                return Err(SimError::Invalid(
                    "single mode does not apply to a local-global code".into(),
                ));
            }
        }
        Ok(())
    }

    /// Runs one frame: draw information bits, encode, transmit, decode,
    /// and count the information-bit mismatches.
    fn run_frame<R: Rng + ?Sized>(
        &self,
        noise_variance: f64,
        max_iterations: u32,
        rng: &mut R,
    ) -> Result<u64, SimError> {
        match self {
            CodeUnderTest::Single(profile) => {
                let info = random_bits(profile.k(), rng);
                let codeword = encode(&profile.scatter_info(&info)?, profile.n())?;
                let llrs = awgn_transmit(&codeword, noise_variance, rng)?;
                let outcome = bp_decode(&llrs, profile, max_iterations)?;
                let decided = profile.gather_info(&outcome.message)?;
                Ok(mismatches(&decided, &info))
            }
            CodeUnderTest::Augmented(code) => {
                let outer_info = random_bits(code.outer_info_len(), rng);
                let inner_info = random_bits(code.inner_info_len(), rng);
                let codeword = code.encode(&outer_info, &inner_info)?;
                let llrs = awgn_transmit(&codeword, noise_variance, rng)?;
                let decision = code.decode_global(&llrs, max_iterations)?;
                Ok(mismatches(&decision.outer_info, &outer_info)
                    + mismatches(&decision.inner_info, &inner_info))
            }
            CodeUnderTest::LocalGlobal { code, mode } => {
                let global = random_bits(code.global_info_len(), rng);
                let locals: Vec<BitVector> = (1..=code.blocks())
                    .map(|m| random_bits(code.local_info_len(m), rng))
                    .collect();
                let codewords = code.encode(&global, &locals)?;
                let block_llrs = codewords
                    .iter()
                    .map(|cw| awgn_transmit(cw, noise_variance, rng))
                    .collect::<Result<Vec<_>, _>>()?;
                match mode {
                    DecodeMode::Global => {
                        let decision = code.decode_global(&block_llrs, max_iterations)?;
                        let mut errs = mismatches(&decision.global_info, &global);
                        for (got, sent) in decision.local_infos.iter().zip(&locals) {
                            errs += mismatches(got, sent);
                        }
                        Ok(errs)
                    }
                    DecodeMode::Local => {
                        let systematic_positions = code.outer().systematic_positions();
                        let mut errs = 0;
                        for m in 1..=code.blocks() {
                            let decision =
                                code.decode_local(m, &block_llrs[m - 1], max_iterations)?;
                            errs += mismatches(&decision.local_info, &locals[m - 1]);
                            // This block's share of the global message.
                            let hosted = &code.assignment().info_positions[m - 1];
                            let sent: Vec<u8> = systematic_positions
                                .iter()
                                .enumerate()
                                .filter(|(_, p)| hosted.contains(p))
                                .map(|(slot, _)| global.as_slice()[slot])
                                .collect();
                            errs += decision
                                .global_part
                                .as_slice()
                                .iter()
                                .zip(&sent)
                                .filter(|(a, b)| a != b)
                                .count() as u64;
                        }
                        Ok(errs)
                    }
                    DecodeMode::Single => unreachable!("rejected by validate"),
                }
            }
        }
    }
}

fn random_bits<R: Rng + ?Sized>(len: usize, rng: &mut R) -> BitVector {
    BitVector::new((0..len).map(|_| rng.gen_range(0..2u8)).collect()).expect("bits are 0/1")
}

fn mismatches(got: &BitVector, sent: &BitVector) -> u64 {
    got.iter().zip(sent.iter()).filter(|(a, b)| a != b).count() as u64
}

/// When to stop accumulating frames at one SNR point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StoppingRule {
    pub min_frame_errors: u64,
    pub max_frames: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self {
            min_frame_errors: 100,
            max_frames: 10_000_000,
        }
    }
}

impl StoppingRule {
    fn validate(&self) -> Result<(), SimError> {
        if self.min_frame_errors == 0 || self.max_frames == 0 {
            return Err(SimError::Invalid(
                "stopping rule needs at least one error and one frame".into(),
            ));
        }
        Ok(())
    }
}

/// An inclusive E_b/N_0 sweep in dB.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrSweep {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl SnrSweep {
    pub fn points(&self) -> Result<Vec<f64>, SimError> {
        if self.step_db.is_nan()
            || self.step_db <= 0.0
            || self.stop_db.is_nan()
            || self.stop_db < self.start_db
        {
            return Err(SimError::EmptySweep);
        }
        let count = ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize + 1;
        Ok((0..count)
            .map(|i| self.start_db + i as f64 * self.step_db)
            .collect())
    }
}

/// One measured SNR point.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationRecord {
    pub snr_db: f64,
    pub frames: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub fer: f64,
    pub ber: f64,
    pub wall_seconds: f64,
    /// Set when no errors occurred: the true FER is below 1/frames rather
    /// than measured.
    pub fer_upper_bound: bool,
}

impl SimulationRecord {
    /// Exact (Clopper-Pearson) two-sided FER confidence interval.
    pub fn fer_interval(&self, confidence: f64) -> (f64, f64) {
        clopper_pearson(self.frame_errors, self.frames, confidence)
    }
}

/// Exact binomial confidence interval for `errors` successes in
/// `trials`.
pub fn clopper_pearson(errors: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials > 0 && errors <= trials);
    assert!((0.0..1.0).contains(&confidence) && confidence > 0.0);
    let alpha = 1.0 - confidence;
    let (e, t) = (errors as f64, trials as f64);
    let lo = if errors == 0 {
        0.0
    } else {
        Beta::new(e, t - e + 1.0)
            .expect("valid Beta parameters")
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        Beta::new(e + 1.0, t - e)
            .expect("valid Beta parameters")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

fn point_seed(seed: u64, snr_index: usize) -> u64 {
    seed ^ (snr_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Measures one SNR point, running frames in parallel batches until the
/// stopping rule fires. Frame `f` draws all its randomness from stream
/// `f` of a generator keyed by (seed, snr_index), so the record does not
/// depend on the worker count.
pub fn run_point(
    code: &CodeUnderTest,
    snr_db: f64,
    rule: &StoppingRule,
    max_iterations: u32,
    seed: u64,
    snr_index: usize,
) -> Result<SimulationRecord, SimError> {
    code.validate()?;
    rule.validate()?;
    if max_iterations == 0 {
        return Err(SimError::Invalid(
            "iteration budget must be positive".into(),
        ));
    }
    let noise_variance = ebn0_db_to_noise_variance(snr_db, code.rate())?;
    let key = point_seed(seed, snr_index);
    let started = std::time::Instant::now();

    let mut frames = 0u64;
    let mut frame_errors = 0u64;
    let mut bit_errors = 0u64;
    while frame_errors < rule.min_frame_errors && frames < rule.max_frames {
        let batch = FRAME_BATCH.min(rule.max_frames - frames);
        let (fe, be) = (frames..frames + batch)
            .into_par_iter()
            .map(|frame| {
                let mut rng = ChaCha8Rng::seed_from_u64(key);
                rng.set_stream(frame);
                let errs = code
                    .run_frame(noise_variance, max_iterations, &mut rng)
                    .expect("frame parameters validated before the loop");
                (u64::from(errs > 0), errs)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        frames += batch;
        frame_errors += fe;
        bit_errors += be;
    }

    let info_bits = frames * code.info_len() as u64;
    Ok(SimulationRecord {
        snr_db,
        frames,
        frame_errors,
        bit_errors,
        fer: frame_errors as f64 / frames as f64,
        ber: bit_errors as f64 / info_bits as f64,
        wall_seconds: started.elapsed().as_secs_f64(),
        fer_upper_bound: frame_errors == 0,
    })
}

/// Measures every point of a sweep, handing each finished record to the
/// sink before moving on (so partial results survive interruptions).
pub fn run_sweep(
    code: &CodeUnderTest,
    sweep: &SnrSweep,
    rule: &StoppingRule,
    max_iterations: u32,
    seed: u64,
    mut sink: impl FnMut(&SimulationRecord) -> std::io::Result<()>,
) -> Result<Vec<SimulationRecord>, SimError> {
    let points = sweep.points()?;
    let mut records = Vec::with_capacity(points.len());
    for (snr_index, snr_db) in points.into_iter().enumerate() {
        let record = run_point(code, snr_db, rule, max_iterations, seed, snr_index)?;
        sink(&record)?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{de_construct, ChannelModel, DensityGrid};

    fn bec_profile(n: u32, k: usize) -> CodeProfile {
        let metrics = de_construct(
            &ChannelModel::Bec { erasure_prob: 0.5 },
            n,
            DensityGrid::default_grid(),
        )
        .unwrap();
        CodeProfile::from_error_metrics(n, k, metrics.values()).unwrap()
    }

    #[test]
    fn transmit_signs_match_at_vanishing_noise() {
        let codeword = BitVector::from_str01("10110010").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let llrs = awgn_transmit(&codeword, 1e-9, &mut rng).unwrap();
        for (&bit, llr) in codeword.iter().zip(llrs) {
            assert_eq!(bit == 1, llr < 0.0);
        }
        assert!(awgn_transmit(&codeword, 0.0, &mut rng).is_err());
    }

    #[test]
    fn transmit_llr_mean_matches_the_channel_parameter() {
        // All-zero codeword: LLR ~ N(2/s2, 4/s2), so the sample mean over
        // 10^5 draws stays within three standard errors.
        let noise_variance = 0.5;
        let samples = 100_000usize;
        let codeword = BitVector::zeros(samples);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let llrs = awgn_transmit(&codeword, noise_variance, &mut rng).unwrap();
        let mean = llrs.iter().sum::<f64>() / samples as f64;
        let expected = 2.0 / noise_variance;
        let band = 3.0 * (4.0 / noise_variance / samples as f64).sqrt();
        assert!(
            (mean - expected).abs() < band,
            "mean {mean} vs {expected} +- {band}"
        );
    }

    #[test]
    fn ebn0_conversion_matches_the_channel_model() {
        let sigma2 = ebn0_db_to_noise_variance(3.0, 0.5).unwrap();
        assert!((sigma2 - 10f64.powf(-0.3)).abs() < 1e-15);
        let ChannelModel::AwgnBpsk { noise_variance } =
            ChannelModel::awgn_from_ebn0_db(3.0, 0.5).unwrap()
        else {
            panic!("expected AWGN")
        };
        assert!((sigma2 - noise_variance).abs() < 1e-15);
        assert!(ebn0_db_to_noise_variance(3.0, 0.0).is_err());
    }

    #[test]
    fn sweep_points_and_validation() {
        let sweep = SnrSweep {
            start_db: 1.5,
            stop_db: 3.0,
            step_db: 0.25,
        };
        let points = sweep.points().unwrap();
        assert_eq!(points.len(), 7);
        assert!((points[6] - 3.0).abs() < 1e-12);
        assert!(SnrSweep {
            start_db: 2.0,
            stop_db: 1.0,
            step_db: 0.5,
        }
        .points()
        .is_err());
        assert!(SnrSweep {
            start_db: 1.0,
            stop_db: 2.0,
            step_db: 0.0,
        }
        .points()
        .is_err());
    }

    #[test]
    fn noiseless_point_reports_a_fer_upper_bound() {
        let code = CodeUnderTest::Single(bec_profile(4, 8));
        let rule = StoppingRule {
            min_frame_errors: 100,
            max_frames: 50,
        };
        // 20 dB is effectively noiseless for N = 16.
        let record = run_point(&code, 20.0, &rule, 30, 9, 0).unwrap();
        assert_eq!(record.frames, 50);
        assert_eq!(record.frame_errors, 0);
        assert_eq!(record.fer, 0.0);
        assert!(record.fer_upper_bound);
    }

    #[test]
    fn records_are_reproducible_across_worker_counts() {
        let code = CodeUnderTest::Single(bec_profile(5, 16));
        let rule = StoppingRule {
            min_frame_errors: 30,
            max_frames: 4096,
        };
        let run_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| run_point(&code, 2.0, &rule, 30, 42, 3).unwrap())
        };
        let one = run_with(1);
        let four = run_with(4);
        // Everything except the wall clock must agree exactly.
        assert_eq!(one.frames, four.frames);
        assert_eq!(one.frame_errors, four.frame_errors);
        assert_eq!(one.bit_errors, four.bit_errors);
        assert_eq!(one.fer, four.fer);
        assert_eq!(one.ber, four.ber);
        assert!(one.frame_errors >= 30 || one.frames == 4096);
    }

    #[test]
    fn binomial_interval_brackets_the_estimate() {
        let (lo, hi) = clopper_pearson(0, 100, 0.95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.06);
        let (lo, hi) = clopper_pearson(100, 100, 0.95);
        assert!(lo > 0.94);
        assert_eq!(hi, 1.0);
        // The point estimate sits inside its own 99% interval.
        let (lo, hi) = clopper_pearson(17, 400, 0.99);
        let fer = 17.0 / 400.0;
        assert!(lo < fer && fer < hi);
        // Wider confidence widens the interval.
        let (lo95, hi95) = clopper_pearson(17, 400, 0.95);
        assert!(lo95 > lo && hi95 < hi);
    }

    #[test]
    fn moderate_snr_bp_point_is_well_behaved() {
        // Rate-1/2 N = 32 at 6 dB: errors are rare; the record stays
        // internally consistent and the sweep driver hands records to the
        // sink in order.
        let code = CodeUnderTest::Single(bec_profile(5, 16));
        let sweep = SnrSweep {
            start_db: 2.0,
            stop_db: 6.0,
            step_db: 4.0,
        };
        let rule = StoppingRule {
            min_frame_errors: 20,
            max_frames: 2048,
        };
        let mut seen = Vec::new();
        let records = run_sweep(&code, &sweep, &rule, 30, 5, |r| {
            seen.push(r.snr_db);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![2.0, 6.0]);
        assert_eq!(records.len(), 2);
        for r in &records {
            assert_eq!(r.fer, r.frame_errors as f64 / r.frames as f64);
            assert!(r.bit_errors >= r.frame_errors);
        }
        // FER should not get worse as the channel improves; with these
        // budgets the 6 dB point is essentially error-free.
        assert!(records[1].fer <= records[0].fer);
    }

    #[test]
    fn sink_failures_surface() {
        let code = CodeUnderTest::Single(bec_profile(3, 4));
        let sweep = SnrSweep {
            start_db: 2.0,
            stop_db: 2.0,
            step_db: 1.0,
        };
        let rule = StoppingRule {
            min_frame_errors: 1,
            max_frames: 8,
        };
        let result = run_sweep(&code, &sweep, &rule, 10, 1, |_| {
            Err(std::io::Error::other("disk full"))
        });
        assert!(matches!(result, Err(SimError::Sink(_))));
    }

    #[test]
    fn local_mode_is_rejected_only_for_mismatched_codes() {
        let code = CodeUnderTest::Single(bec_profile(3, 4));
        assert_eq!(code.mode(), DecodeMode::Single);
        assert_eq!(code.info_len(), 4);
        assert!((code.rate() - 0.5).abs() < 1e-12);
    }
}
