//! Numerical toolkit for the q-Szasz operator M_{n,q} (q > 1).
//!
//! The crate is organized along the pipeline from primitives to
//! experiments:
//!
//! * [`qcore`] - q-integers, q-factorials, q-binomials, the q-derivative
//!   and both Jackson q-exponentials, with overflow-safe signed-log
//!   representations.
//! * [`operator`] - the operator weights s_nk(q;x), truncated weight
//!   tables, application of M_{n,q} to functions, the classical Szasz
//!   baseline, and weight diagnostics.
//! * [`moments`] - raw and central moments through three independent
//!   evaluation paths, plus the q-Stirling coefficient table.
//! * [`analysis`] - weighted norms, moduli of smoothness, Steklov means,
//!   and the experiment harness (convergence rates, asymptotic scans,
//!   bound checks).

pub mod analysis;
mod error;
pub(crate) mod ext;
pub mod moments;
pub mod operator;
pub mod qcore;

pub use error::{Error, Result};
pub use qcore::{QContext, SeriesPolicy, SignedLogValue};
