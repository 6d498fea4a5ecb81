//! Decides whether `f(x) = (x^2 - a_1)(x^2 - a_2)...(x^2 - a_n)`, for distinct
//! square-free `a_i` outside {0, 1}, has a root modulo every positive integer.
//!
//! [`certify::check_theorem1`] returns either a [`certify::Certificate`]
//! (an odd square subset, quadratic-residue witnesses for its odd primes and
//! a member congruent to 1 mod 8) or a [`certify::Counterexample`] naming an
//! explicit prime-power modulus with no root. Certified families get actual
//! roots modulo any `m` from [`lifting::root_mod`], and [`oracle`] checks
//! both outcomes by exhaustive scanning.

pub mod certify;
pub mod lifting;
pub mod ntheory;
pub mod oracle;
pub mod search;
pub mod squaresubsets;
pub mod wire;

pub use certify::{
    check_theorem1, validate_certificate, validate_family, Certificate, Counterexample, Family,
    Verdict,
};
pub use lifting::{root_mod, RootWitness};
pub use ntheory::{make_squarefree, PrimePower, SquareFreeInt};

/// Tunable limits shared by the engine, the oracle and the search driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EngineConfig {
    /// Largest modulus the exhaustive scanner will accept.
    pub scan_budget: u64,
    /// Upper bound for the non-residue witness prime search.
    pub prime_search_bound: u64,
    /// Largest solution coset enumerated by the subset solver.
    pub subset_cap: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            scan_budget: oracle::DEFAULT_SCAN_BUDGET,
            prime_search_bound: 1_000_000,
            subset_cap: squaresubsets::DEFAULT_SUBSET_CAP,
        }
    }
}
