//! Building blocks for bias-based binary fingerprinting codes and the
//! group-testing setups they degenerate into: attack channels, achievable-rate
//! computations, code generation, score-based accusation, and a fully seeded
//! Monte Carlo harness.
//!
//! Layering, bottom to top:
//!
//! * [`prob`]: scalar probability/information primitives on checked inputs.
//! * [`rng`]: splittable deterministic random streams.
//! * [`channels`]: colluder-symmetric attack channels and their marginals.
//! * [`capacity`]: per-user and joint rate payoffs, bias optimization, tables.
//! * [`encode`]: bias sampling and code-matrix generation plus file formats.
//! * [`decode`]: score functions, threshold/length calculators, accusations.
//! * [`sim`]: end-to-end seeded trials and error-rate estimation.
//!
//! Every randomized entry point takes an explicit [`rng::RngStream`], so any
//! result is reproducible from a single master seed regardless of thread
//! count or execution order.

pub mod capacity;
pub mod channels;
pub mod decode;
pub mod encode;
pub mod error;
pub mod prob;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use prob::{ExtendedScore, Probability};
pub use rng::RngStream;
