//! Check-node and variable-node convolutions on quantized densities.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::grid::{DensityGrid, QuantizedDensity};
use super::DensityError;

/// Exact check-node combination of two LLRs:
/// `2 atanh(tanh(a/2) tanh(b/2))`, evaluated in the numerically stable
/// sign-magnitude form.
pub fn boxplus(a: f64, b: f64) -> f64 {
    let sign = a.signum() * b.signum();
    let magnitude = a.abs().min(b.abs());
    sign * magnitude + ln1p_exp_neg((a + b).abs()) - ln1p_exp_neg((a - b).abs())
}

/// ln(1 + e^(-x)) for x >= 0.
///
/// Skips the transcendental calls once the term drops below 5e-18. For
/// grid-center arguments (the convolution tables) the skipped term is
/// under half an ulp of the magnitude it would be added to, so table
/// entries are bit-identical to the direct evaluation; decoder messages
/// at most wobble in the final ulp. The shortcut pays off in decoder
/// loops where most messages are saturated, and zero inputs still map to
/// exact zero because the two correction terms cancel identically.
#[inline]
fn ln1p_exp_neg(x: f64) -> f64 {
    if x > 40.0 {
        0.0
    } else {
        (-x).exp().ln_1p()
    }
}

/// Key for the per-grid check-convolution table cache.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct GridKey {
    min_bits: u64,
    max_bits: u64,
    bins: usize,
}

impl GridKey {
    fn of(grid: &DensityGrid) -> Self {
        Self {
            min_bits: grid.min().to_bits(),
            max_bits: grid.max().to_bits(),
            bins: grid.bins(),
        }
    }
}

fn table_cache() -> &'static Mutex<HashMap<GridKey, Arc<Vec<u16>>>> {
    static CACHE: OnceLock<Mutex<HashMap<GridKey, Arc<Vec<u16>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Output bin of the check combination of bins `i` and `j`.
///
/// The endpoint bins act as saturated (infinite) LLRs: a positive
/// saturation partner passes the other value through unchanged, a negative
/// one flips its sign, and two saturated inputs stay saturated. This keeps
/// erasure-style densities exactly two-point under the check step.
fn check_bin(grid: &DensityGrid, i: usize, j: usize) -> usize {
    let neg = grid.neg_sat_bin();
    let pos = grid.pos_sat_bin();
    let sat_i = i == neg || i == pos;
    let sat_j = j == neg || j == pos;
    match (sat_i, sat_j) {
        (true, true) => {
            let negative = (i == neg) ^ (j == neg);
            if negative {
                neg
            } else {
                pos
            }
        }
        (true, false) => {
            if i == pos {
                j
            } else {
                grid.bin_of(-grid.value(j))
            }
        }
        (false, true) => {
            if j == pos {
                i
            } else {
                grid.bin_of(-grid.value(i))
            }
        }
        (false, false) => grid.bin_of(boxplus(grid.value(i), grid.value(j))),
    }
}

fn check_table(grid: &DensityGrid) -> Arc<Vec<u16>> {
    let key = GridKey::of(grid);
    if let Some(table) = table_cache().lock().expect("cache poisoned").get(&key) {
        return Arc::clone(table);
    }
    // Built outside the lock: construction is deterministic, so a racing
    // duplicate build yields the same table.
    let bins = grid.bins();
    assert!(bins <= u16::MAX as usize + 1, "bin index must fit in u16");
    let mut table = vec![0u16; bins * bins];
    for i in 0..bins {
        for j in i..bins {
            let out = check_bin(grid, i, j) as u16;
            table[i * bins + j] = out;
            table[j * bins + i] = out;
        }
    }
    let table = Arc::new(table);
    table_cache()
        .lock()
        .expect("cache poisoned")
        .entry(key)
        .or_insert_with(|| Arc::clone(&table));
    table
}

fn ensure_same_grid(a: &QuantizedDensity, b: &QuantizedDensity) -> Result<(), DensityError> {
    if a.grid() != b.grid() {
        return Err(DensityError::GridMismatch);
    }
    Ok(())
}

/// Density of the check combination of independent draws from `a` and `b`.
///
/// Direct double sum over bin pairs through the precomputed bin map;
/// zero-mass bins are skipped, which leaves the accumulated sums of the
/// remaining bins bit-for-bit unchanged.
pub fn check_convolve(
    a: &QuantizedDensity,
    b: &QuantizedDensity,
) -> Result<QuantizedDensity, DensityError> {
    ensure_same_grid(a, b)?;
    let grid = a.grid();
    let bins = grid.bins();
    let table = check_table(&grid);
    let mut out = vec![0.0f64; bins];
    for (i, &ma) in a.mass().iter().enumerate() {
        if ma == 0.0 {
            continue;
        }
        let row = &table[i * bins..(i + 1) * bins];
        for (j, &mb) in b.mass().iter().enumerate() {
            if mb == 0.0 {
                continue;
            }
            out[row[j] as usize] += ma * mb;
        }
    }
    Ok(QuantizedDensity::from_raw(grid, out))
}

/// Density of the sum of independent draws from `a` and `b`, with mass
/// beyond the grid clamped into the saturation bins.
pub fn var_convolve(
    a: &QuantizedDensity,
    b: &QuantizedDensity,
) -> Result<QuantizedDensity, DensityError> {
    ensure_same_grid(a, b)?;
    let grid = a.grid();
    let bins = grid.bins();
    let zero = grid.zero_bin();
    let mut out = vec![0.0f64; bins];
    for (i, &ma) in a.mass().iter().enumerate() {
        if ma == 0.0 {
            continue;
        }
        for (j, &mb) in b.mass().iter().enumerate() {
            if mb == 0.0 {
                continue;
            }
            // Values add, so indices add relative to the zero bin.
            let sum = i + j;
            let k = if sum <= zero {
                0
            } else {
                (sum - zero).min(bins - 1)
            };
            out[k] += ma * mb;
        }
    }
    Ok(QuantizedDensity::from_raw(grid, out))
}
