//! Independent checks: exhaustive root scans, the analytic per-factor
//! solvability rules, counterexample moduli and their verification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{Counterexample, Evidence, Family, ObstructionKind};
use crate::ntheory::{self, is_prime, legendre_unchecked, NtError, PrimePower, SquareFreeInt};
use crate::wire;

/// Largest modulus [`has_root_mod`] scans by default.
pub const DEFAULT_SCAN_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("modulus {modulus} exceeds the scan budget {budget}")]
    BudgetExceeded { modulus: u64, budget: u64 },
    #[error("modulus must be at least 1")]
    ZeroModulus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    #[serde(with = "wire::int")]
    pub modulus: u64,
    pub solvable: bool,
    /// Smallest `x` in `[0, m)` with `f(x) = 0 (mod m)`.
    #[serde(with = "wire::opt_int")]
    pub witness: Option<u64>,
    /// Residues covered by the scan; `f(x) = f(-x)`, so only `x <= m/2` is
    /// evaluated.
    #[serde(with = "wire::int")]
    pub residues_checked: u64,
}

/// Decides `f(x) = 0 (mod m)` by trying every residue.
pub fn has_root_mod(family: &Family, m: u64) -> Result<ScanReport, OracleError> {
    has_root_mod_with_budget(family, m, DEFAULT_SCAN_BUDGET)
}

pub fn has_root_mod_with_budget(
    family: &Family,
    m: u64,
    budget: u64,
) -> Result<ScanReport, OracleError> {
    if m == 0 {
        return Err(OracleError::ZeroModulus);
    }
    if m > budget {
        return Err(OracleError::BudgetExceeded { modulus: m, budget });
    }
    let witness = if m <= u32::MAX as u64 {
        scan_narrow(family, m)
    } else {
        (0..=m / 2).find(|&x| family.eval_mod(x, m) == 0)
    };
    Ok(match witness {
        Some(x) => ScanReport {
            modulus: m,
            solvable: true,
            witness: Some(x),
            residues_checked: x + 1,
        },
        None => ScanReport {
            modulus: m,
            solvable: false,
            witness: None,
            residues_checked: m,
        },
    })
}

// 64-bit products suffice once every operand is below 2^32.
fn scan_narrow(family: &Family, m: u64) -> Option<u64> {
    let neg_a: Vec<u64> = family
        .members()
        .iter()
        .map(|a| ntheory::reduce(-(a.value() as i128), m))
        .collect();
    (0..=m / 2).find(|&x| {
        let sq = x * x % m;
        let mut acc = 1u64;
        for &na in &neg_a {
            acc = acc * ((sq + na) % m) % m;
            if acc == 0 {
                return true;
            }
        }
        false
    })
}

/// Which rule decided [`factor_solvable_mod_pk`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolvabilityRule {
    /// `k = 0`: every congruence modulo 1 holds.
    TrivialModulus,
    /// Odd `p` not dividing `a`: solvable iff `(a/p) = +1`.
    OddPrimeUnit { legendre: i8 },
    /// Odd `p` dividing square-free `a`: `x = 0` works mod `p`, nothing
    /// works mod `p^2`.
    OddPrimeDivides,
    /// Odd `a` mod powers of 2: depends on `a mod 8`.
    DyadicOdd { residue_mod8: u8 },
    /// `a = 2 mod 4`: only mod 2.
    DyadicEven,
}

/// Analytic decision of `x^2 = a (mod p^k)` for square-free `a`.
pub fn factor_solvable_mod_pk(a: &SquareFreeInt, p: u64, k: u32) -> (bool, SolvabilityRule) {
    if k == 0 {
        return (true, SolvabilityRule::TrivialModulus);
    }
    if p == 2 {
        if a.has_factor_two() {
            return (k == 1, SolvabilityRule::DyadicEven);
        }
        let r = a.residue(8) as u8;
        let ok = match k {
            1 => true,
            2 => r % 4 == 1,
            _ => r == 1,
        };
        return (ok, SolvabilityRule::DyadicOdd { residue_mod8: r });
    }
    if a.divisible_by(p) {
        return (k == 1, SolvabilityRule::OddPrimeDivides);
    }
    let l = legendre_unchecked(a.value() as i128, p);
    (l == 1, SolvabilityRule::OddPrimeUnit { legendre: l })
}

/// `p^(k*n)`, the modulus at which `f` has no root when no factor is
/// solvable modulo `p^k`.
pub fn lemma3_modulus(p: u64, k: u32, n: usize) -> Result<PrimePower, NtError> {
    let e = u32::try_from(n)
        .ok()
        .and_then(|n| k.checked_mul(n))
        .ok_or(NtError::Overflow)?;
    PrimePower::new(p, e)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CounterexampleRejection {
    #[error("counterexample lists no obstructions")]
    Empty,
    #[error("primary index {0} is out of range")]
    PrimaryOutOfRange(usize),
    #[error("primary obstruction does not have the smallest modulus")]
    PrimaryNotSmallest,
    #[error("obstruction {0}: wrong prime or exponent for its kind")]
    MalformedObstruction(usize),
    #[error("obstruction {0}: evidence does not cover every member")]
    EvidenceMismatch(usize),
    #[error("obstruction {0}: hypothesis fails for member {1}")]
    HypothesisFails(usize, usize),
    #[error("obstruction {0}: member {1} is solvable modulo p^k")]
    FactorSolvable(usize, usize),
    #[error("obstruction {0}: modulus is not p^(k*n)")]
    WrongModulus(usize),
    #[error("obstruction {0}: scan found root {1} modulo the claimed modulus")]
    ScanFoundRoot(usize, u64),
}

/// Outcome of an accepted counterexample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleAudit {
    /// One entry per obstruction: whether the modulus was also scanned.
    pub scanned: Vec<bool>,
}

/// Re-derives every obstruction from the family and, where the modulus is
/// within `scan_budget`, confirms it rootless by exhaustive scan.
pub fn verify_counterexample(
    family: &Family,
    cx: &Counterexample,
    scan_budget: u64,
) -> Result<CounterexampleAudit, CounterexampleRejection> {
    if cx.obstructions.is_empty() {
        return Err(CounterexampleRejection::Empty);
    }
    if cx.primary >= cx.obstructions.len() {
        return Err(CounterexampleRejection::PrimaryOutOfRange(cx.primary));
    }
    let n = family.len();
    let mut scanned = Vec::new();
    for (o_idx, o) in cx.obstructions.iter().enumerate() {
        let pos = o_idx + 1;
        let p = o.prime;
        let expected_k = match o.kind {
            ObstructionKind::NoQrPrime => 1,
            ObstructionKind::OddPrime => 2,
            ObstructionKind::Dyadic => 3,
        };
        let prime_ok = match o.kind {
            ObstructionKind::Dyadic => p == 2,
            _ => p % 2 == 1 && is_prime(p),
        };
        if !prime_ok
            || o.local_exponent != expected_k
            || o.exponent as usize != expected_k as usize * n
        {
            return Err(CounterexampleRejection::MalformedObstruction(pos));
        }
        if o.evidence.len() != n
            || o.evidence
                .iter()
                .enumerate()
                .any(|(i, e)| e.index != i + 1 || e.value != family.members()[i].value())
        {
            return Err(CounterexampleRejection::EvidenceMismatch(pos));
        }
        for (i, (a, e)) in family.members().iter().zip(&o.evidence).enumerate() {
            let holds = match o.kind {
                ObstructionKind::NoQrPrime => {
                    let l = legendre_unchecked(a.value() as i128, p);
                    l == -1 && e.reason == Evidence::Legendre(l)
                }
                ObstructionKind::OddPrime => {
                    let l = legendre_unchecked(a.value() as i128, p);
                    l != 1 && e.reason == Evidence::Legendre(l)
                }
                ObstructionKind::Dyadic => {
                    let r = a.residue(8) as u8;
                    r != 1 && e.reason == Evidence::ResidueMod8(r)
                }
            };
            if !holds {
                return Err(CounterexampleRejection::HypothesisFails(pos, i + 1));
            }
            if factor_solvable_mod_pk(a, p, expected_k).0 {
                return Err(CounterexampleRejection::FactorSolvable(pos, i + 1));
            }
        }
        if o.kind == ObstructionKind::OddPrime
            && !family.members().iter().any(|a| a.divisible_by(p))
        {
            return Err(CounterexampleRejection::HypothesisFails(pos, 0));
        }
        let expected_modulus = lemma3_modulus(p, expected_k, n).ok().map(|pp| pp.modulus());
        if o.modulus != expected_modulus {
            return Err(CounterexampleRejection::WrongModulus(pos));
        }
        let mut did_scan = false;
        if let Some(m) = o.modulus.filter(|&m| m <= scan_budget) {
            let report = has_root_mod_with_budget(family, m, scan_budget)
                .expect("modulus checked against budget");
            if let Some(x) = report.witness {
                return Err(CounterexampleRejection::ScanFoundRoot(pos, x));
            }
            did_scan = true;
        }
        scanned.push(did_scan);
    }
    let primary = &cx.obstructions[cx.primary];
    let log_size = |p: u64, e: u32| e as f64 * (p as f64).log2();
    if cx
        .obstructions
        .iter()
        .any(|o| match (o.modulus, primary.modulus) {
            (Some(a), Some(b)) => a < b,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => {
                log_size(o.prime, o.exponent) < log_size(primary.prime, primary.exponent)
            }
        })
    {
        return Err(CounterexampleRejection::PrimaryNotSmallest);
    }
    Ok(CounterexampleAudit { scanned })
}

/// Smallest `m <= bound` at which `f` has no root, scanning every `m`.
pub fn minimal_failing_modulus(family: &Family, bound: u64) -> Result<Option<u64>, OracleError> {
    minimal_failing_modulus_with_budget(family, bound, DEFAULT_SCAN_BUDGET)
}

pub fn minimal_failing_modulus_with_budget(
    family: &Family,
    bound: u64,
    budget: u64,
) -> Result<Option<u64>, OracleError> {
    if bound > budget {
        return Err(OracleError::BudgetExceeded {
            modulus: bound,
            budget,
        });
    }
    for m in 1..=bound {
        if !has_root_mod_with_budget(family, m, budget)?.solvable {
            return Ok(Some(m));
        }
    }
    Ok(None)
}
