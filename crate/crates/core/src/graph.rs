//! The polar encoder factor graph and its erasure structure.
//!
//! The graph has N*(n+1) variable nodes v(k, l) with stage l = 1 at the
//! observed (codeword) side and stage l = n+1 at the message side. The
//! transition t between stages t and t+1 holds N/2 butterflies of stride
//! 2^(n-t), so adjacent pairs sit next to the message stage and the
//! widest span next to the observed stage: the pair (k, k+s) has a
//! degree-3 check tying v(k, t) to v(k, t+1) xor v(k+s, t+1) and a
//! degree-2 check tying v(k+s, t) to v(k+s, t+1). Indices k here are
//! 0-based; the public API is 1-based.

use thiserror::Error;

#[derive(Error, Debug, PartialEq, Eq)]
pub enum GraphError {
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("target set is empty")]
    EmptyTargetSet,
    #[error("exact search supports block length up to {max}, got {got}")]
    BlockTooLarge { got: usize, max: usize },
}

/// Stride of the butterflies at transition `t` (1-based) in a depth-`n`
/// graph.
pub fn transition_stride(n: u32, t: u32) -> usize {
    1 << (n - t)
}

/// 0-based (upper, lower) index pairs of the butterflies at transition `t`.
pub fn stage_pairs(n: u32, t: u32) -> impl Iterator<Item = (usize, usize)> {
    let len = 1usize << n;
    let stride = transition_stride(n, t);
    (0..len)
        .filter(move |k| k & stride == 0)
        .map(move |k| (k, k + stride))
}

/// 1-based observed-stage indices of the leaves of the stopping tree rooted
/// at message node v(i, n+1).
///
/// The tree descends one transition at a time: the upper node of a
/// butterfly has the single child v(k, t), the lower node has both
/// children v(k, t) and v(k+s, t).
pub fn stopping_tree_leaves(i: usize, n: u32) -> Result<Vec<usize>, GraphError> {
    let len = 1usize << n;
    if i == 0 || i > len {
        return Err(GraphError::IndexOutOfRange { index: i, max: len });
    }
    let mut current = vec![false; len];
    current[i - 1] = true;
    for t in (1..=n).rev() {
        let stride = transition_stride(n, t);
        let mut next = vec![false; len];
        for (k, idx) in current.iter().enumerate() {
            if !idx {
                continue;
            }
            if k & stride == 0 {
                next[k] = true;
            } else {
                next[k - stride] = true;
                next[k] = true;
            }
        }
        current = next;
    }
    Ok((0..len).filter(|&k| current[k]).map(|k| k + 1).collect())
}

/// 1-based columns of the row submatrix of F^{(x)n} indexed by `rows` that
/// carry exactly one 1.
pub fn weight_one_columns(rows: &[usize], n: u32) -> Result<Vec<usize>, GraphError> {
    let len = 1usize << n;
    if rows.is_empty() {
        return Err(GraphError::EmptyTargetSet);
    }
    for &i in rows {
        if i == 0 || i > len {
            return Err(GraphError::IndexOutOfRange { index: i, max: len });
        }
    }
    let mut columns = Vec::new();
    for col in 0..len {
        let hits = rows.iter().filter(|&&i| col & !(i - 1) == 0).count();
        if hits == 1 {
            columns.push(col + 1);
        }
    }
    Ok(columns)
}

/// Count of weight-1 columns of the row submatrix indexed by `rows`; a
/// lower bound on the leaf size of any stopping set covering those rows.
pub fn g_bound(rows: &[usize], n: u32) -> Result<usize, GraphError> {
    Ok(weight_one_columns(rows, n)?.len())
}

/// A minimum variable stopping set, reported by its observed-stage leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MvssWitness {
    /// Number of observed-stage variables in the stopping set.
    pub size: usize,
    /// The observed-stage variables themselves, 1-based, sorted ascending.
    pub leaves: Vec<usize>,
}

const MAX_EXACT_BLOCK: usize = 16;

/// Exact minimum variable stopping set covering the message nodes
/// `targets`, by exhaustive search over observed-leaf subsets.
///
/// A candidate leaf set S is accepted when erasure peeling, started from S
/// plus all internal nodes plus the targets (message nodes outside the
/// target set count as known), fails to resolve any target. Subsets are
/// scanned by size and then lexicographically, so the first hit is both
/// minimum and the lexicographically smallest witness of that size.
///
/// Exponential in the block length; limited to N <= 16.
pub fn min_variable_stopping_set(targets: &[usize], n: u32) -> Result<MvssWitness, GraphError> {
    let len = 1usize << n;
    if len > MAX_EXACT_BLOCK {
        return Err(GraphError::BlockTooLarge {
            got: len,
            max: MAX_EXACT_BLOCK,
        });
    }
    if targets.is_empty() {
        return Err(GraphError::EmptyTargetSet);
    }
    for &j in targets {
        if j == 0 || j > len {
            return Err(GraphError::IndexOutOfRange { index: j, max: len });
        }
    }
    let checks = build_checks(n);
    for size in 0..=len {
        let mut found: Option<Vec<usize>> = None;
        for_each_combination(len, size, &mut |subset| {
            if found.is_none() && survives_peeling(subset, targets, n, &checks) {
                found = Some(subset.to_vec());
            }
        });
        if let Some(leaves) = found {
            return Ok(MvssWitness { size, leaves });
        }
    }
    unreachable!("the full observed stage always survives peeling");
}

/// Variable-node ids packed as (stage - 1) * N + k for stage 1..=n+1.
fn node_id(stage: u32, k: usize, len: usize) -> usize {
    (stage as usize - 1) * len + k
}

/// Erased variables surviving peeling, reported for the outermost stages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeelResult {
    /// Message-stage (leftmost) indices still erased, 1-based.
    pub erased_message: Vec<usize>,
    /// Observed-stage (rightmost) indices still erased, 1-based.
    pub erased_observed: Vec<usize>,
}

/// Peels erasures on the full factor graph to the maximal stopping set.
///
/// Initially erased: the listed observed positions, the listed message
/// positions, and every internal node. Message positions not listed are
/// known a priori (frozen or genie-supplied).
pub fn peel_erasures(
    n: u32,
    observed_erased: &[usize],
    message_erased: &[usize],
) -> Result<PeelResult, GraphError> {
    let len = 1usize << n;
    for &i in observed_erased.iter().chain(message_erased.iter()) {
        if i == 0 || i > len {
            return Err(GraphError::IndexOutOfRange { index: i, max: len });
        }
    }
    let checks = build_checks(n);
    let mut erased = vec![false; len * (n as usize + 1)];
    for stage in 2..=n {
        for k in 0..len {
            erased[node_id(stage, k, len)] = true;
        }
    }
    for &j in message_erased {
        erased[node_id(n + 1, j - 1, len)] = true;
    }
    for k in 0..len {
        erased[node_id(1, k, len)] = false;
    }
    for &leaf in observed_erased {
        erased[node_id(1, leaf - 1, len)] = true;
    }
    run_peel(&checks, &mut erased);
    Ok(PeelResult {
        erased_message: (1..=len)
            .filter(|&j| erased[node_id(n + 1, j - 1, len)])
            .collect(),
        erased_observed: (1..=len)
            .filter(|&k| erased[node_id(1, k - 1, len)])
            .collect(),
    })
}

/// Resolves checks with exactly one erased neighbor until a fixed point.
fn run_peel(checks: &[Vec<usize>], erased: &mut [bool]) {
    loop {
        let mut changed = false;
        for check in checks {
            let mut erased_neighbor = None;
            let mut erased_count = 0;
            for &id in check {
                if erased[id] {
                    erased_count += 1;
                    erased_neighbor = Some(id);
                }
            }
            if erased_count == 1 {
                erased[erased_neighbor.expect("count is 1")] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

fn build_checks(n: u32) -> Vec<Vec<usize>> {
    let len = 1usize << n;
    let mut checks = Vec::new();
    for t in 1..=n {
        for (upper, lower) in stage_pairs(n, t) {
            checks.push(vec![
                node_id(t + 1, upper, len),
                node_id(t + 1, lower, len),
                node_id(t, upper, len),
            ]);
            checks.push(vec![node_id(t + 1, lower, len), node_id(t, lower, len)]);
        }
    }
    checks
}

/// Peels erasures to the maximal stopping set inside the initial erased
/// set; returns true when every target is still erased afterwards.
fn survives_peeling(leaves: &[usize], targets: &[usize], n: u32, checks: &[Vec<usize>]) -> bool {
    let len = 1usize << n;
    let mut erased = vec![false; len * (n as usize + 1)];
    for stage in 2..=n {
        for k in 0..len {
            erased[node_id(stage, k, len)] = true;
        }
    }
    for &j in targets {
        erased[node_id(n + 1, j - 1, len)] = true;
    }
    // Observed-stage state comes from the candidate leaf set alone. At
    // n = 0 the message stage IS the observed stage, so this clears the
    // target marks unless the candidate covers them.
    for k in 0..len {
        erased[node_id(1, k, len)] = false;
    }
    for &leaf in leaves {
        erased[node_id(1, leaf - 1, len)] = true;
    }
    run_peel(checks, &mut erased);
    targets.iter().all(|&j| erased[node_id(n + 1, j - 1, len)])
}

/// Calls `visit` on each size-`k` subset of {1..=len} in lexicographic
/// order of the sorted element lists.
fn for_each_combination(len: usize, k: usize, visit: &mut dyn FnMut(&[usize])) {
    let mut subset: Vec<usize> = (1..=k).collect();
    loop {
        visit(&subset);
        // Advance to the next combination, rightmost movable element first.
        let mut i = k;
        while i > 0 && subset[i - 1] == len - (k - i) {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        subset[i - 1] += 1;
        for j in i..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
}
