//! Construction, analysis, and simulation of concatenated polar codes.
//!
//! The crate covers two concatenated architectures built entirely from polar
//! component codes:
//!
//! - **augmented**: one inner polar code whose semipolarized bit-channels
//!   carry the codeword of a short auxiliary outer polar code;
//! - **local-global**: M inner polar codes coupled through a systematic
//!   outer polar code, decodable per block (local) or jointly (global).
//!
//! Outer-code design is supported by three methods: a conventional
//! density-evolution baseline, a stopping-set swap construction driven by a
//! lower bound on minimum variable-node stopping sets, and nonstationary
//! density evolution seeded with empirical LLR histograms from inner-code
//! belief-propagation decoding. A Monte-Carlo AWGN harness estimates frame
//! and bit error rates for all of the above.
//!
//! Modules map one-to-one onto the subsystems:
//!
//! - [`polar`] — GF(2) encoding primitives and code profiles
//! - [`graph`] — the sparse polar factor graph, stopping trees, erasure
//!   peeling, and an exact minimum-VSS oracle for small instances
//! - [`density`] — quantized LLR densities, check/variable convolutions,
//!   DE / GA / Bhattacharyya constructions, nonstationary DE
//! - [`decode`] — SC and belief-propagation decoders, genie-aided
//!   bit-channel simulation, empirical LLR histogram collection
//! - [`arch`] — assembly of augmented and local-global codes
//! - [`design`] — the outer-code design algorithms
//! - [`sim`] — seeded Monte-Carlo FER/BER estimation and CSV emission
//! - [`formats`] — JSON file formats and run manifests

pub mod arch;
pub mod bits;
pub mod decode;
pub mod density;
pub mod design;
pub mod formats;
pub mod graph;
pub mod polar;
pub mod sim;

pub use bits::BitVector;
pub use polar::{CodeProfile, SystematicProfile};
