//! Implementations of the five artifact-producing subcommands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

use polarcat_core::arch::{select_semipolarized, LocalGlobalCode};
use polarcat_core::decode::collect_empirical_llrs;
use polarcat_core::density::{
    de_construct, ga_construct, DensityGrid, ErrorProfile, PhiApproximation,
};
use polarcat_core::design::{
    baseline_de_design, nde_design_augmented, nde_design_local_global, ss_design,
    stopping_distance_scores, DesignInput, OuterInit, UnfrozenSet,
};
use polarcat_core::formats::{
    manifest_path_for, read_histograms, sha256_hex, write_histograms, write_json, write_profile,
    CsvSink, Provenance, RunLabels, RunManifest,
};
use polarcat_core::graph::{g_bound, min_variable_stopping_set, stopping_tree_leaves};
use polarcat_core::polar::{CodeProfile, SystematicProfile};
use polarcat_core::sim::{run_sweep, DecodeMode, SnrSweep, StoppingRule};

use crate::config::{Architecture, ChannelSpec, ExperimentConfig};

/// Largest block length the exact stopping-set search accepts.
const MAX_EXACT_MVSS_BLOCK: usize = 16;

fn json_map(pairs: &[(&str, serde_json::Value)]) -> BTreeMap<String, serde_json::Value> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn hash_inputs(named: &[(&str, &Path)]) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (name, path) in named {
        let digest =
            sha256_hex(path).with_context(|| format!("hashing input {}", path.display()))?;
        map.insert(name.to_string(), digest);
    }
    Ok(map)
}

// ---------------------------------------------------------------------------
// construct
// ---------------------------------------------------------------------------

pub struct ConstructArgs {
    pub channel: ChannelSpec,
    pub n: u32,
    pub k: usize,
    pub method: String,
    pub out: Option<PathBuf>,
}

pub fn construct(workdir: &Path, args: ConstructArgs) -> Result<()> {
    let model = args.channel.model()?;
    let metrics: ErrorProfile = match args.method.as_str() {
        "de" => de_construct(&model, args.n, DensityGrid::default_grid())?,
        "ga" => ga_construct(&model, args.n, &PhiApproximation::default())?,
        other => bail!("unknown construction method '{other}', expected de or ga"),
    };
    let profile = CodeProfile::from_error_metrics(args.n, args.k, metrics.values())?;
    let provenance = Provenance {
        method: args.method.clone(),
        parameters: json_map(&[
            ("channel", serde_json::to_value(args.channel)?),
            ("n", args.n.into()),
            ("k", args.k.into()),
        ]),
        input_hashes: BTreeMap::new(),
    };
    let mut unfrozen_best_first: Vec<usize> = profile.reliability_order()[..args.k].to_vec();
    println!(
        "constructed N={} K={} ({}), unfrozen best-first: {:?}",
        profile.block_len(),
        profile.k(),
        args.method,
        unfrozen_best_first
    );
    unfrozen_best_first.sort_unstable();
    match &args.out {
        Some(rel) => {
            let path = workdir.join(rel);
            write_profile(&path, &profile, Some(provenance))?;
            println!("wrote {}", path.display());
        }
        None => {
            println!("unfrozen ascending: {unfrozen_best_first:?}");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// analyze-ss
// ---------------------------------------------------------------------------

pub struct AnalyzeArgs {
    pub n: u32,
    pub rows: Vec<usize>,
    pub exact: bool,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct RowTree {
    row: usize,
    leaves: Vec<usize>,
}

#[derive(Serialize)]
struct SsAnalysis {
    n: u32,
    rows: Vec<usize>,
    trees: Vec<RowTree>,
    g_bound: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_mvss: Option<ExactMvss>,
}

#[derive(Serialize)]
struct ExactMvss {
    size: usize,
    leaves: Vec<usize>,
}

pub fn analyze_ss(workdir: &Path, args: AnalyzeArgs) -> Result<()> {
    if args.rows.is_empty() {
        bail!("--rows needs at least one message position");
    }
    let trees = args
        .rows
        .iter()
        .map(|&row| {
            Ok(RowTree {
                row,
                leaves: stopping_tree_leaves(row, args.n)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bound = g_bound(&args.rows, args.n)?;
    for tree in &trees {
        println!(
            "row {}: stopping tree spans {} observed nodes {:?}",
            tree.row,
            tree.leaves.len(),
            tree.leaves
        );
    }
    println!("weight-one-column bound g({:?}) = {bound}", args.rows);
    let exact_mvss = if args.exact {
        if (1usize << args.n) > MAX_EXACT_MVSS_BLOCK {
            bail!("--exact supports block lengths up to {MAX_EXACT_MVSS_BLOCK}");
        }
        let witness = min_variable_stopping_set(&args.rows, args.n)?;
        println!(
            "exact minimum variable stopping set: size {} via {:?}",
            witness.size, witness.leaves
        );
        Some(ExactMvss {
            size: witness.size,
            leaves: witness.leaves,
        })
    } else {
        None
    };
    if let Some(rel) = &args.out {
        let path = workdir.join(rel);
        let report = SsAnalysis {
            n: args.n,
            rows: args.rows.clone(),
            trees,
            g_bound: bound,
            exact_mvss,
        };
        write_json(&path, &report)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// design-outer
// ---------------------------------------------------------------------------

pub struct DesignArgs {
    pub config: PathBuf,
    pub method: String,
    pub swaps: Option<usize>,
    pub histograms: Vec<PathBuf>,
    pub random_init: bool,
    pub seed: u64,
    pub out: PathBuf,
}

/// The connection-map stopping scores of every outer position, for the
/// architecture the config describes. The outer unfrozen choice does not
/// influence the map for the augmented code; for local-global the scores
/// are computed under the DE-baseline assignment being improved upon.
fn architecture_scores(config: &ExperimentConfig) -> Result<Vec<usize>> {
    let n0 = config.outer_n()?;
    let k0 = config.outer_k()?;
    let inner_order = config.inner_order()?;
    let model = config.channel.model()?;
    let baseline = baseline_de_design(&model, n0, k0)?;
    let carrier = CodeProfile::from_reliability_order(n0, k0, baseline.to_order(n0)?)?;
    match config.architecture {
        Architecture::Augmented => {
            let k1 = config
                .inner_k
                .context("augmented architecture needs inner_k")?;
            let code = polarcat_core::arch::AugmentedCode::assemble(carrier, &inner_order, k1)?;
            Ok(stopping_distance_scores(n0, config.inner_n, code.map())?)
        }
        Architecture::LocalGlobal => {
            let local_k = config
                .local_k
                .as_ref()
                .context("local-global architecture needs local_k")?;
            let code =
                LocalGlobalCode::assemble(SystematicProfile::new(carrier), &inner_order, local_k)?;
            Ok(stopping_distance_scores(n0, config.inner_n, code.map())?)
        }
        Architecture::Single => bail!("a single code has no outer code to design"),
    }
}

pub fn design_outer(workdir: &Path, args: DesignArgs) -> Result<()> {
    let config_path = workdir.join(&args.config);
    let config = ExperimentConfig::load(&config_path)?;
    if config.architecture == Architecture::Single {
        bail!("a single code has no outer code to design");
    }
    let n0 = config.outer_n()?;
    let k0 = config.outer_k()?;
    let model = config.channel.model()?;

    let mut parameters = json_map(&[
        ("outer_n", n0.into()),
        ("outer_k", k0.into()),
        ("channel", serde_json::to_value(config.channel)?),
        ("architecture", serde_json::to_value(config.architecture)?),
    ]);
    let mut inputs: Vec<(&str, &Path)> = vec![("config", config_path.as_path())];

    let hist_paths: Vec<PathBuf> = args.histograms.iter().map(|h| workdir.join(h)).collect();
    let selected: UnfrozenSet = match args.method.as_str() {
        "de" => {
            if !hist_paths.is_empty() || args.swaps.is_some() {
                bail!("--method de takes neither --swaps nor --hist");
            }
            baseline_de_design(&model, n0, k0)?
        }
        "ss" => {
            let swaps = args
                .swaps
                .context("--method ss needs --swaps (positions to trade)")?;
            if !hist_paths.is_empty() {
                bail!("--method ss takes no --hist inputs");
            }
            let scores = architecture_scores(&config)?;
            let metrics = de_construct(&model, n0, DensityGrid::default_grid())?;
            let order = CodeProfile::from_error_metrics(n0, k0, metrics.values())?
                .reliability_order()
                .to_vec();
            parameters.insert("swaps".into(), swaps.into());
            ss_design(&DesignInput::new(order, scores, k0, swaps)?)?
        }
        "nde" => match config.architecture {
            Architecture::Augmented => {
                let [path] = hist_paths.as_slice() else {
                    bail!("--method nde on an augmented code needs exactly one --hist");
                };
                let hist = read_histograms(path)?;
                parameters.insert("bp_iterations".into(), hist.bp_iterations.into());
                parameters.insert("histogram_frames".into(), hist.sample_count.into());
                inputs.push(("histograms", path.as_path()));
                nde_design_augmented(&hist, k0, n0)?
            }
            Architecture::LocalGlobal => {
                let [first, second] = hist_paths.as_slice() else {
                    bail!("--method nde on a local-global code needs two --hist, one per block");
                };
                let hists = [read_histograms(first)?, read_histograms(second)?];
                let init = if args.random_init {
                    parameters.insert("init".into(), "random".into());
                    parameters.insert("seed".into(), args.seed.into());
                    OuterInit::Random { seed: args.seed }
                } else {
                    parameters.insert("init".into(), "de-baseline".into());
                    OuterInit::Set(baseline_de_design(&model, n0, k0)?)
                };
                parameters.insert("bp_iterations".into(), hists[0].bp_iterations.into());
                inputs.push(("histograms_block1", first.as_path()));
                inputs.push(("histograms_block2", second.as_path()));
                let outcome = nde_design_local_global(&hists, k0, n0, init)?;
                println!(
                    "fixed point {} after {} refinements, objective {:.6e}",
                    if outcome.converged {
                        "reached"
                    } else {
                        "not reached; best visited iterate kept"
                    },
                    outcome.iterations,
                    outcome.objective
                );
                parameters.insert("converged".into(), outcome.converged.into());
                parameters.insert("iterations".into(), outcome.iterations.into());
                outcome.unfrozen
            }
            Architecture::Single => unreachable!("rejected above"),
        },
        other => bail!("unknown design method '{other}', expected de, ss, or nde"),
    };

    let profile = CodeProfile::from_reliability_order(n0, k0, selected.to_order(n0)?)?;
    let provenance = Provenance {
        method: args.method.clone(),
        parameters,
        input_hashes: hash_inputs(&inputs)?,
    };
    let out = workdir.join(&args.out);
    write_profile(&out, &profile, Some(provenance))?;
    println!(
        "designed outer code ({}): unfrozen {:?}",
        args.method,
        selected.positions()
    );
    println!("wrote {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// collect-densities
// ---------------------------------------------------------------------------

pub struct CollectArgs {
    pub config: PathBuf,
    pub ebn0_db: Option<f64>,
    pub iterations: u32,
    pub frames: u64,
    pub seed: u64,
    pub block: Option<usize>,
    pub out: PathBuf,
}

pub fn collect_densities(workdir: &Path, args: CollectArgs) -> Result<()> {
    let config_path = workdir.join(&args.config);
    let config = ExperimentConfig::load(&config_path)?;
    let channel = match args.ebn0_db {
        Some(db) => config.channel.at_ebn0(db)?,
        None => config.channel,
    };
    let model = channel.model()?;
    let n0_len = 1usize << config.outer_n()?;
    let inner_order = config.inner_order()?;

    // The decode profile and observed positions of the inner code whose
    // semipolarized outputs feed the outer design; neither depends on the
    // outer unfrozen choice, so histograms can be collected before any
    // outer profile exists.
    let (profile, positions, block_label) = match config.architecture {
        Architecture::Augmented => {
            if args.block.is_some() {
                bail!("--block applies only to local-global codes");
            }
            let k1 = config
                .inner_k
                .context("augmented architecture needs inner_k")?;
            let semis = select_semipolarized(&inner_order, k1, n0_len)?;
            let profile = CodeProfile::from_reliability_order(
                config.inner_n,
                k1 + n0_len,
                inner_order.reliability_order().to_vec(),
            )?;
            (profile, semis, serde_json::Value::Null)
        }
        Architecture::LocalGlobal => {
            let local_k = config
                .local_k
                .as_ref()
                .context("local-global architecture needs local_k")?;
            let m = args
                .block
                .context("--block (1-based inner index) is required for local-global codes")?;
            if m == 0 || m > local_k.len() {
                bail!("--block {m} out of range 1..={}", local_k.len());
            }
            let hosted = n0_len / local_k.len();
            let semis = select_semipolarized(&inner_order, local_k[m - 1], hosted)?;
            let profile = CodeProfile::from_reliability_order(
                config.inner_n,
                local_k[m - 1] + hosted,
                inner_order.reliability_order().to_vec(),
            )?;
            (profile, semis, m.into())
        }
        Architecture::Single => bail!("a single code has no semipolarized positions to observe"),
    };

    let set = collect_empirical_llrs(
        &profile,
        &positions,
        &model,
        &DensityGrid::default_grid(),
        args.iterations,
        args.frames,
        args.seed,
    )?;
    let provenance = Provenance {
        method: "bp-genie".into(),
        parameters: json_map(&[
            ("channel", serde_json::to_value(channel)?),
            ("bp_iterations", args.iterations.into()),
            ("frames", args.frames.into()),
            ("seed", args.seed.into()),
            ("block", block_label),
        ]),
        input_hashes: hash_inputs(&[("config", config_path.as_path())])?,
    };
    let out = workdir.join(&args.out);
    write_histograms(&out, &set, Some(provenance))?;
    println!(
        "collected {} histograms over {} frames at {} BP iterations",
        set.positions.len(),
        set.sample_count,
        set.bp_iterations
    );
    println!("wrote {}", out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub struct SimulateArgs {
    pub config: PathBuf,
    pub snr: String,
    pub min_errors: u64,
    pub max_frames: u64,
    pub seed: u64,
    pub mode: DecodeMode,
    pub out: PathBuf,
    pub build_tag: Option<String>,
}

/// Parses "start:stop:step" in dB (a single value means one point).
pub fn parse_sweep(text: &str) -> Result<SnrSweep> {
    let parts: Vec<&str> = text.split(':').collect();
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .with_context(|| format!("bad dB value '{s}' in sweep '{text}'"))
    };
    match parts.as_slice() {
        [single] => {
            let v = parse(single)?;
            Ok(SnrSweep {
                start_db: v,
                stop_db: v,
                step_db: 1.0,
            })
        }
        [start, stop, step] => Ok(SnrSweep {
            start_db: parse(start)?,
            stop_db: parse(stop)?,
            step_db: parse(step)?,
        }),
        _ => bail!("sweep '{text}' is not 'start:stop:step' or a single dB value"),
    }
}

pub fn simulate(workdir: &Path, command_line: String, args: SimulateArgs) -> Result<()> {
    let config_path = workdir.join(&args.config);
    let config = ExperimentConfig::load(&config_path)?;
    let (code, design_method) = config.build_code(workdir, args.mode)?;
    let sweep = parse_sweep(&args.snr)?;
    let rule = StoppingRule {
        min_frame_errors: args.min_errors,
        max_frames: args.max_frames,
    };
    let build_tag = args
        .build_tag
        .clone()
        .unwrap_or_else(|| format!("polarcat-{}", env!("CARGO_PKG_VERSION")));

    let mut inputs: Vec<(&str, &Path)> = vec![("config", config_path.as_path())];
    let outer_path = config.outer_profile.as_ref().map(|rel| workdir.join(rel));
    if let Some(path) = &outer_path {
        inputs.push(("outer_profile", path.as_path()));
    }
    let input_hashes = hash_inputs(&inputs)?;

    let out = workdir.join(&args.out);
    let labels = RunLabels {
        decode_mode: args.mode.as_str().into(),
        design_method,
        build_tag,
    };
    let mut sink = CsvSink::open_append(&out, labels)?;
    println!(
        "simulating {} mode={} R={:.4} over {}..={} dB step {}",
        code.info_len(),
        args.mode.as_str(),
        code.rate(),
        sweep.start_db,
        sweep.stop_db,
        sweep.step_db
    );
    let records = run_sweep(
        &code,
        &sweep,
        &rule,
        config.bp_iterations,
        args.seed,
        |record| {
            let (lo, hi) = record.fer_interval(0.95);
            println!(
                "{:>6.2} dB: FER {:.4e} [{:.2e}, {:.2e}] ({} errors / {} frames), BER {:.4e}, {:.1} s",
                record.snr_db,
                record.fer,
                lo,
                hi,
                record.frame_errors,
                record.frames,
                record.ber,
                record.wall_seconds
            );
            sink.write_record(record)
        },
    )?;

    let manifest = RunManifest::new(
        command_line,
        serde_json::to_value(&config)?,
        input_hashes,
        args.seed,
    );
    let manifest_path = manifest_path_for(&out);
    write_json(&manifest_path, &manifest)?;
    println!(
        "wrote {} ({} points) and {}",
        out.display(),
        records.len(),
        manifest_path.display()
    );
    Ok(())
}
