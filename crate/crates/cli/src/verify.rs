//! The `verify` subcommand: a self-check suite over every module's core
//! properties, printed as a pass/fail table.
//!
//! Quick mode keeps every oracle at n <= 3 and finishes in seconds; the
//! full run extends the exhaustive checks to the largest exactly-solvable
//! sizes and adds a Monte-Carlo cross-check of density evolution.

use std::time::Instant;

use anyhow::Result;

use polarcat_core::bits::BitVector;
use polarcat_core::decode::{genie_aided_bitchannel_sim, EmpiricalHistogramSet};
use polarcat_core::density::{
    bhattacharyya_construct, channel_density, de_construct, nde_sweep, ChannelModel, DensityGrid,
};
use polarcat_core::design::{
    baseline_de_design, nde_design_augmented, ss_design, DesignError, DesignInput,
};
use polarcat_core::graph::{g_bound, min_variable_stopping_set, stopping_tree_leaves};
use polarcat_core::polar::{
    encode, row_support, systematic_encode, CodeProfile, SystematicProfile,
};
use polarcat_core::sim::{run_point, CodeUnderTest, DecodeMode, StoppingRule};

type CheckResult = std::result::Result<(), String>;

fn fail(message: String) -> CheckResult {
    Err(message)
}

fn core<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// BEC profile used as a deterministic carrier in assembly checks.
fn bec_profile(n: u32, k: usize) -> Result<CodeProfile, String> {
    let metrics = de_construct(
        &ChannelModel::Bec { erasure_prob: 0.5 },
        n,
        DensityGrid::default_grid(),
    )
    .map_err(core)?;
    CodeProfile::from_error_metrics(n, k, metrics.values()).map_err(core)
}

// ---------------------------------------------------------------------------
// individual checks
// ---------------------------------------------------------------------------

fn check_row_support(max_n: u32) -> CheckResult {
    for n in 1..=max_n {
        for i in 1..=(1usize << n) {
            let tree = stopping_tree_leaves(i, n).map_err(core)?;
            let support = row_support(i, n).map_err(core)?;
            if tree != support {
                return fail(format!(
                    "row {i}, n {n}: tree leaves {tree:?} != generator support {support:?}"
                ));
            }
        }
    }
    Ok(())
}

fn check_bec_de(max_n: u32) -> CheckResult {
    for &eps in &[0.125, 0.37, 0.5] {
        for n in 0..=max_n {
            let de = de_construct(
                &ChannelModel::Bec { erasure_prob: eps },
                n,
                DensityGrid::default_grid(),
            )
            .map_err(core)?;
            let z = bhattacharyya_construct(eps, n).map_err(core)?;
            for (i, (&p, &zi)) in de.values().iter().zip(z.values().iter()).enumerate() {
                // The quantized recursion reproduces the erasure recursion
                // bitwise; the factor 2 converts error probability (an
                // erased bit is half an error) back to erasure probability.
                if 2.0 * p != zi {
                    return fail(format!(
                        "eps {eps}, n {n}, position {}: DE error {p:e} vs erasure {zi:e}",
                        i + 1
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_mvss_bounds(ns: &[u32]) -> CheckResult {
    for &n in ns {
        let len = 1usize << n;
        let mut targets: Vec<Vec<usize>> = (1..=len).map(|i| vec![i]).collect();
        for i in 1..=len {
            for j in (i + 1)..=len {
                targets.push(vec![i, j]);
            }
        }
        for set in &targets {
            let bound = g_bound(set, n).map_err(core)?;
            let witness = min_variable_stopping_set(set, n).map_err(core)?;
            if witness.size < bound {
                return fail(format!(
                    "n {n}, targets {set:?}: minimum stopping set {} below bound {bound}",
                    witness.size
                ));
            }
            if witness.size != bound {
                return fail(format!(
                    "n {n}, targets {set:?}: bound {bound} not tight (minimum {})",
                    witness.size
                ));
            }
        }
    }
    Ok(())
}

fn check_loose_triple() -> CheckResult {
    // For three-element sets the bound can be strict; {2, 7, 8} at N = 8
    // is the canonical case: g = 3 but no 3-element stopping set exists.
    let targets = [2usize, 7, 8];
    let bound = g_bound(&targets, 3).map_err(core)?;
    if bound != 3 {
        return fail(format!("g({{2,7,8}}) = {bound}, expected 3"));
    }
    let witness = min_variable_stopping_set(&targets, 3).map_err(core)?;
    if witness.size <= bound {
        return fail(format!(
            "minimum stopping set of {{2,7,8}} is {}, expected strictly above the bound 3",
            witness.size
        ));
    }
    Ok(())
}

fn check_nde_reduction() -> CheckResult {
    let model = ChannelModel::Bec { erasure_prob: 0.5 };
    let d = channel_density(&model, DensityGrid::default_grid()).map_err(core)?;
    let hist = EmpiricalHistogramSet {
        positions: (1..=8).collect(),
        histograms: vec![d; 8],
        sample_count: 0,
        bp_iterations: 0,
    };
    let swept = nde_sweep(&hist.histograms, 3).map_err(core)?;
    let stationary = de_construct(&model, 3, DensityGrid::default_grid()).map_err(core)?;
    if swept.values() != stationary.values() {
        return fail("stationary inputs did not reproduce the DE recursion bin-for-bin".into());
    }
    let designed = nde_design_augmented(&hist, 4, 3).map_err(core)?;
    let baseline = baseline_de_design(&model, 3, 4).map_err(core)?;
    if designed != baseline {
        return fail(format!(
            "stationary nonstationary design chose {:?}, DE baseline {:?}",
            designed.positions(),
            baseline.positions()
        ));
    }
    Ok(())
}

fn check_swap_trace() -> CheckResult {
    let order = vec![8, 7, 6, 4, 5, 3, 2, 1];
    let scores = vec![1, 6, 2, 4, 6, 4, 2, 2];
    let input = DesignInput::new(order.clone(), scores.clone(), 4, 1).map_err(core)?;
    let designed = ss_design(&input).map_err(core)?;
    if designed.positions() != [4, 5, 6, 7] {
        return fail(format!(
            "one swap selected {:?}, expected [4, 5, 6, 7]",
            designed.positions()
        ));
    }
    let infeasible = DesignInput::new(order, scores, 4, 3).map_err(core)?;
    match ss_design(&infeasible) {
        Err(DesignError::InfeasibleSwaps {
            available: 2,
            needed: 3,
        }) => Ok(()),
        other => fail(format!(
            "three swaps should be infeasible (2 candidates), got {other:?}"
        )),
    }
}

fn check_systematic_transparency() -> CheckResult {
    let profile = SystematicProfile::new(bec_profile(4, 8)?);
    let info = BitVector::from_str01("10110100").map_err(core)?;
    let word = systematic_encode(&info, &profile).map_err(core)?;
    for (j, &pos) in profile.systematic_positions().iter().enumerate() {
        if word.codeword.get(pos) != info.as_slice()[j] {
            return fail(format!(
                "systematic position {pos} carries {}, expected info bit {}",
                word.codeword.get(pos),
                info.as_slice()[j]
            ));
        }
    }
    let re_encoded = encode(&word.message, 4).map_err(core)?;
    if re_encoded != word.codeword {
        return fail("encoding the systematic message did not reproduce the codeword".into());
    }
    Ok(())
}

/// Builds the small test codes once per invocation.
fn tiny_codes() -> Result<Vec<(&'static str, CodeUnderTest)>, String> {
    let single = CodeUnderTest::Single(bec_profile(3, 4)?);
    let inner = bec_profile(4, 16)?;
    let augmented = polarcat_core::arch::AugmentedCode::assemble(bec_profile(2, 2)?, &inner, 4)
        .map_err(core)?;
    let lg = polarcat_core::arch::LocalGlobalCode::assemble(
        SystematicProfile::new(bec_profile(3, 4)?),
        &inner,
        &[4, 4],
    )
    .map_err(core)?;
    Ok(vec![
        ("single", single),
        ("augmented", CodeUnderTest::Augmented(augmented)),
        (
            "local-global/global",
            CodeUnderTest::LocalGlobal {
                code: lg.clone(),
                mode: DecodeMode::Global,
            },
        ),
        (
            "local-global/local",
            CodeUnderTest::LocalGlobal {
                code: lg,
                mode: DecodeMode::Local,
            },
        ),
    ])
}

fn check_noiseless_roundtrips() -> CheckResult {
    let rule = StoppingRule {
        min_frame_errors: 1,
        max_frames: 50,
    };
    for (name, code) in tiny_codes()? {
        let record = run_point(&code, 20.0, &rule, 50, 11, 0).map_err(core)?;
        if record.frame_errors != 0 {
            return fail(format!(
                "{name}: {} of {} noiseless frames failed to decode",
                record.frame_errors, record.frames
            ));
        }
    }
    Ok(())
}

fn check_sim_reproducibility() -> CheckResult {
    let code = CodeUnderTest::Single(bec_profile(3, 4)?);
    let rule = StoppingRule {
        min_frame_errors: 10,
        max_frames: 2000,
    };
    let a = run_point(&code, 2.0, &rule, 30, 77, 3).map_err(core)?;
    let b = run_point(&code, 2.0, &rule, 30, 77, 3).map_err(core)?;
    if (a.frames, a.frame_errors, a.bit_errors) != (b.frames, b.frame_errors, b.bit_errors) {
        return fail(format!(
            "reruns disagree: {}/{}/{} vs {}/{}/{}",
            a.frames, a.frame_errors, a.bit_errors, b.frames, b.frame_errors, b.bit_errors
        ));
    }
    if a.frame_errors == 0 {
        return fail("expected some frame errors at 2 dB on the toy code".into());
    }
    Ok(())
}

fn check_genie_against_de(frames: u64) -> CheckResult {
    let model = ChannelModel::awgn_from_ebn0_db(2.0, 0.5).map_err(core)?;
    let de = de_construct(&model, 4, DensityGrid::default_grid()).map_err(core)?;
    let genie = genie_aided_bitchannel_sim(4, &model, frames, 20260815).map_err(core)?;
    for (i, (&analytic, &measured)) in de.values().iter().zip(genie.values()).enumerate() {
        let sigma = (analytic * (1.0 - analytic) / frames as f64).sqrt();
        let slack = 4.0 * sigma + 2.0 / frames as f64;
        if (analytic - measured).abs() > slack {
            return fail(format!(
                "position {}: DE {analytic:.3e} vs genie {measured:.3e} (allowed {slack:.1e})",
                i + 1
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// driver
// ---------------------------------------------------------------------------

/// Runs the suite; returns true when every check passed.
pub fn run(quick: bool) -> Result<bool> {
    let started = Instant::now();
    let mode = if quick { "quick" } else { "full" };
    println!("self-check suite ({mode} mode)\n");

    let mvss_sizes: &[u32] = if quick { &[2, 3] } else { &[2, 3, 4] };
    let lemma_n = if quick { 4 } else { 6 };
    let de_n = if quick { 3 } else { 6 };

    let mut checks: Vec<(&str, CheckResult)> = vec![
        (
            "stopping tree leaves equal generator row support",
            check_row_support(lemma_n),
        ),
        (
            "density evolution matches the BEC erasure recursion",
            check_bec_de(de_n),
        ),
        (
            "minimum stopping sets meet the weight-one bound",
            check_mvss_bounds(mvss_sizes),
        ),
        (
            "the {2,7,8} triple exceeds its bound strictly",
            check_loose_triple(),
        ),
        (
            "nonstationary DE reduces to DE on stationary inputs",
            check_nde_reduction(),
        ),
        (
            "swap construction follows the worked trace",
            check_swap_trace(),
        ),
        (
            "systematic encoding is transparent",
            check_systematic_transparency(),
        ),
        (
            "all architectures round-trip noiseless frames",
            check_noiseless_roundtrips(),
        ),
        (
            "seeded simulation reruns are identical",
            check_sim_reproducibility(),
        ),
    ];
    if !quick {
        checks.push((
            "genie-aided SC agrees with DE at N = 16",
            check_genie_against_de(200_000),
        ));
    }

    let mut all_ok = true;
    let width = checks.iter().map(|(name, _)| name.len()).max().unwrap_or(0);
    for (name, outcome) in &checks {
        match outcome {
            Ok(()) => println!("  {name:<width$}  PASS"),
            Err(reason) => {
                all_ok = false;
                println!("  {name:<width$}  FAIL");
                println!("  {:width$}  ^ {reason}", "");
            }
        }
    }
    println!(
        "\n{} of {} checks passed in {:.1} s",
        checks.iter().filter(|(_, r)| r.is_ok()).count(),
        checks.len(),
        started.elapsed().as_secs_f64()
    );
    Ok(all_ok)
}
