//! Outer-code design methods.
//!
//! Three ways to pick the outer unfrozen set: the conventional
//! density-evolution baseline, a stopping-set swap construction that
//! trades low-reliability positions for frozen ones with larger
//! stopping-distance bounds, and a nonstationary density evolution that
//! replaces the stationary channel density with per-position empirical
//! densities measured at the inner decoder's semipolarized outputs.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arch::{example1_connection, ArchError};
use crate::decode::EmpiricalHistogramSet;
use crate::density::{
    de_construct, nde_sweep, ChannelModel, DensityError, DensityGrid, QuantizedDensity,
};
use crate::graph::{g_bound, GraphError};
use crate::polar::{row_support, CodeProfile, PolarError, SystematicProfile};

#[derive(Debug, Error, PartialEq)]
pub enum DesignError {
    #[error("{what}: got {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("reliability order is not a permutation of 1..={expected}")]
    BadOrder { expected: usize },
    #[error("swap count {swaps} exceeds unfrozen size {k0}")]
    TooManySwaps { swaps: usize, k0: usize },
    #[error("only {available} frozen positions beat the threshold, {needed} swaps requested")]
    InfeasibleSwaps { available: usize, needed: usize },
    #[error("outer position {0} is not covered by the connection map")]
    UnmappedPosition(usize),
    #[error("invalid design input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error(transparent)]
    Polar(#[from] PolarError),
    #[error(transparent)]
    Arch(#[from] ArchError),
}

/// A designed outer unfrozen set, stored ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnfrozenSet {
    positions: Vec<usize>,
}

impl UnfrozenSet {
    pub fn new(mut positions: Vec<usize>) -> Result<Self, DesignError> {
        positions.sort_unstable();
        if positions.first() == Some(&0) || positions.windows(2).any(|w| w[0] == w[1]) {
            return Err(DesignError::Invalid(
                "unfrozen positions must be distinct and 1-based".into(),
            ));
        }
        Ok(Self { positions })
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, position: usize) -> bool {
        self.positions.binary_search(&position).is_ok()
    }

    /// A reliability order placing this set first, both halves ascending.
    pub fn to_order(&self, n0: u32) -> Result<Vec<usize>, DesignError> {
        let block_len = 1usize << n0;
        if self.positions.last().is_some_and(|&p| p > block_len) {
            return Err(DesignError::Invalid(format!(
                "position beyond block length {block_len}"
            )));
        }
        let mut order = self.positions.clone();
        order.extend((1..=block_len).filter(|p| !self.contains(*p)));
        Ok(order)
    }
}

/// Scores and ordering Algorithm inputs for the swap construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignInput {
    reliability_order: Vec<usize>,
    stopping_scores: Vec<usize>,
    k0: usize,
    swaps: usize,
}

impl DesignInput {
    /// `reliability_order` ranks all N_0 outer positions best-first;
    /// `stopping_scores[i-1]` is the stopping-distance lower bound of
    /// position i; `swaps` positions will be traded.
    pub fn new(
        reliability_order: Vec<usize>,
        stopping_scores: Vec<usize>,
        k0: usize,
        swaps: usize,
    ) -> Result<Self, DesignError> {
        let n0 = reliability_order.len();
        let mut seen = vec![false; n0 + 1];
        for &q in &reliability_order {
            if q == 0 || q > n0 || seen[q] {
                return Err(DesignError::BadOrder { expected: n0 });
            }
            seen[q] = true;
        }
        if stopping_scores.len() != n0 {
            return Err(DesignError::LengthMismatch {
                what: "stopping scores",
                got: stopping_scores.len(),
                expected: n0,
            });
        }
        if k0 == 0 || k0 > n0 {
            return Err(DesignError::Invalid(format!(
                "unfrozen size {k0} out of range 1..={n0}"
            )));
        }
        if swaps > k0 {
            return Err(DesignError::TooManySwaps { swaps, k0 });
        }
        Ok(Self {
            reliability_order,
            stopping_scores,
            k0,
            swaps,
        })
    }

    fn score(&self, position: usize) -> usize {
        self.stopping_scores[position - 1]
    }
}

/// Inner message positions reached by the stopping tree of outer
/// position `i`, grouped per inner code.
///
/// The tree's leaves on the outer graph are the support of outer
/// generator row `i`; pushing each leaf through the connection map lands
/// it on the inner information node that carries it.
pub fn mapped_stopping_tree(
    i: usize,
    outer_n: u32,
    map: &crate::arch::ConnectionMap,
) -> Result<Vec<Vec<usize>>, DesignError> {
    let mut groups = vec![Vec::new(); map.groups().len()];
    for leaf in row_support(i, outer_n)? {
        let (m, inner_position) = map
            .locate(leaf)
            .ok_or(DesignError::UnmappedPosition(leaf))?;
        groups[m - 1].push(inner_position);
    }
    Ok(groups)
}

/// Stopping-distance lower bounds for every outer position: the
/// weight-one-column count of the inner generator rows its stopping tree
/// selects, summed across inner codes.
pub fn stopping_distance_scores(
    outer_n: u32,
    inner_n: u32,
    map: &crate::arch::ConnectionMap,
) -> Result<Vec<usize>, DesignError> {
    let n0 = 1usize << outer_n;
    let mut scores = Vec::with_capacity(n0);
    for i in 1..=n0 {
        let mut total = 0;
        for rows in mapped_stopping_tree(i, outer_n, map)? {
            if !rows.is_empty() {
                total += g_bound(&rows, inner_n)?;
            }
        }
        scores.push(total);
    }
    Ok(scores)
}

/// Stopping-set swap construction.
///
/// The threshold is the smallest score among the top-K_0 positions.
/// Each of the `swaps` rounds evicts the current minimum-score unfrozen
/// position and promotes the first frozen position beyond K_0 (in
/// reliability order) whose score beats the threshold. Feasibility is
/// checked before any mutation.
pub fn ss_design(input: &DesignInput) -> Result<UnfrozenSet, DesignError> {
    let mut order = input.reliability_order.clone();
    let k0 = input.k0;
    let threshold = order[..k0]
        .iter()
        .map(|&q| input.score(q))
        .min()
        .expect("k0 >= 1");
    let available = order[k0..]
        .iter()
        .filter(|&&q| input.score(q) > threshold)
        .count();
    if available < input.swaps {
        return Err(DesignError::InfeasibleSwaps {
            available,
            needed: input.swaps,
        });
    }
    for _ in 0..input.swaps {
        let evict = (0..k0)
            .min_by_key(|&j| (input.score(order[j]), j))
            .expect("k0 >= 1");
        let promote = (k0..order.len())
            .find(|&l| input.score(order[l]) > threshold)
            .expect("feasibility checked above");
        order[evict] = order[promote];
        order.remove(promote);
    }
    UnfrozenSet::new(order[..k0].to_vec())
}

/// Conventional density-evolution design: the K_0 most reliable
/// positions of the outer channel.
pub fn baseline_de_design(
    model: &ChannelModel,
    outer_n: u32,
    k0: usize,
) -> Result<UnfrozenSet, DesignError> {
    if k0 == 0 {
        return UnfrozenSet::new(Vec::new());
    }
    let metrics = de_construct(model, outer_n, DensityGrid::default_grid())?;
    let profile = CodeProfile::from_error_metrics(outer_n, k0, metrics.values())?;
    UnfrozenSet::new(profile.unfrozen().to_vec())
}

fn select_least_error(
    outer_n: u32,
    k0: usize,
    error_prob: &[f64],
) -> Result<(UnfrozenSet, f64), DesignError> {
    let profile = CodeProfile::from_error_metrics(outer_n, k0, error_prob)?;
    let objective = profile.unfrozen().iter().map(|&p| error_prob[p - 1]).sum();
    Ok((UnfrozenSet::new(profile.unfrozen().to_vec())?, objective))
}

/// Nonstationary design for the augmented architecture: each outer
/// observed position starts from the empirical density of the
/// semipolarized inner position that carries it (natural connection),
/// and the K_0 positions with least resulting error probability win.
pub fn nde_design_augmented(
    hist: &EmpiricalHistogramSet,
    k0: usize,
    outer_n: u32,
) -> Result<UnfrozenSet, DesignError> {
    let expected = 1usize << outer_n;
    if hist.histograms.len() != expected {
        return Err(DesignError::LengthMismatch {
            what: "histograms",
            got: hist.histograms.len(),
            expected,
        });
    }
    let profile = nde_sweep(&hist.histograms, outer_n)?;
    Ok(select_least_error(outer_n, k0, profile.values())?.0)
}

/// Initialization for the local-global fixed-point search.
#[derive(Clone, Debug)]
pub enum OuterInit {
    /// Start from a given unfrozen set (typically the DE baseline).
    Set(UnfrozenSet),
    /// Start from a uniformly random K_0-subset drawn from this seed.
    Random { seed: u64 },
}

/// Result of the local-global fixed-point search.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPointOutcome {
    pub unfrozen: UnfrozenSet,
    /// Sum of outer error probabilities over the returned set, under the
    /// assignment that produced it.
    pub objective: f64,
    /// Whether two consecutive iterates agreed.
    pub converged: bool,
    /// Refinement steps performed.
    pub iterations: u32,
}

/// One refinement step of the local-global design: build the two-block
/// crossing assignment from `current`, route each empirical density to
/// the outer position it would feed, sweep, and return the K_0 least
/// error positions with their objective.
pub fn nde_refine_local_global(
    hists: &[EmpiricalHistogramSet],
    k0: usize,
    outer_n: u32,
    current: &UnfrozenSet,
) -> Result<(UnfrozenSet, f64), DesignError> {
    if hists.len() != 2 {
        return Err(DesignError::LengthMismatch {
            what: "histogram sets",
            got: hists.len(),
            expected: 2,
        });
    }
    let n0 = 1usize << outer_n;
    if current.len() != k0 {
        return Err(DesignError::LengthMismatch {
            what: "current unfrozen set",
            got: current.len(),
            expected: k0,
        });
    }
    let base = CodeProfile::from_reliability_order(outer_n, k0, current.to_order(outer_n)?)?;
    let outer = SystematicProfile::new(base);
    let semis: Vec<Vec<usize>> = hists.iter().map(|h| h.positions.clone()).collect();
    let (_, map) = example1_connection(&outer, &semis)?;
    let mut initials: Vec<QuantizedDensity> = Vec::with_capacity(n0);
    for p in 1..=n0 {
        let (m, inner_position) = map.locate(p).ok_or(DesignError::UnmappedPosition(p))?;
        let slot = hists[m - 1]
            .positions
            .binary_search(&inner_position)
            .expect("map built from these positions");
        initials.push(hists[m - 1].histograms[slot].clone());
    }
    let profile = nde_sweep(&initials, outer_n)?;
    select_least_error(outer_n, k0, profile.values())
}

/// Fixed-point nonstationary design for the local-global architecture.
///
/// Refines at most ten times, stopping when an iterate repeats. On
/// non-convergence (the iterates may oscillate) the visited iterate with
/// the smallest objective is returned, ties to the earliest.
pub fn nde_design_local_global(
    hists: &[EmpiricalHistogramSet],
    k0: usize,
    outer_n: u32,
    init: OuterInit,
) -> Result<FixedPointOutcome, DesignError> {
    let n0 = 1usize << outer_n;
    let mut current = match init {
        OuterInit::Set(set) => {
            if set.len() != k0 {
                return Err(DesignError::LengthMismatch {
                    what: "initial unfrozen set",
                    got: set.len(),
                    expected: k0,
                });
            }
            set
        }
        OuterInit::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut all: Vec<usize> = (1..=n0).collect();
            all.shuffle(&mut rng);
            UnfrozenSet::new(all[..k0].to_vec())?
        }
    };
    let mut visited: Vec<(UnfrozenSet, f64)> = Vec::new();
    for iteration in 1..=10u32 {
        let (next, objective) = nde_refine_local_global(hists, k0, outer_n, &current)?;
        if next == current {
            return Ok(FixedPointOutcome {
                unfrozen: next,
                objective,
                converged: true,
                iterations: iteration,
            });
        }
        visited.push((next.clone(), objective));
        current = next;
    }
    let (best, objective) = visited
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("objectives are finite"))
        .expect("at least one iterate");
    Ok(FixedPointOutcome {
        unfrozen: best,
        objective,
        converged: false,
        iterations: 10,
    })
}
