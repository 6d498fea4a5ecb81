//! The decision engine.
//!
//! `f` has a root modulo every positive integer iff
//!
//! 1. some odd-cardinality subset `T` has `prod_{j in T} a_j` a perfect
//!    square, and every odd prime `p` dividing that product has a member
//!    `a_i` with `(a_i/p) = +1`;
//! 2. some member is `8m + 1` with `m != 0`.
//!
//! When this fails, the failing clause is turned into a prime power at
//! which no factor `x^2 - a_i` is solvable, which makes `f` rootless at the
//! n-th power of that modulus.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ntheory::{
    self, gcd, is_prime, make_squarefree, mul_mod, product_is_square, reduce, DirectLegendre,
    LegendreSource, NtError, SquareFreeInt,
};
use crate::oracle::lemma3_modulus;
use crate::squaresubsets::{find_nonresidue_prime_with, odd_square_subsets_of};
use crate::{wire, EngineConfig};

/// Family size bound; keeps subset masks and counterexample exponents small.
pub const MAX_FAMILY_SIZE: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("family requires n ≥ 3 (got {0})")]
    TooFew(usize),
    #[error("family size {0} exceeds the supported maximum of 24")]
    TooMany(usize),
    #[error("members {first} and {second} are both {value}; values must be distinct")]
    NotDistinct {
        first: usize,
        second: usize,
        value: i64,
    },
    #[error("member {index} ({value}) is not square-free")]
    NotSquareFree { index: usize, value: i64 },
    #[error("member {index} ({value}) is not allowed; 0 and 1 are excluded")]
    DisallowedValue { index: usize, value: i64 },
    #[error("member {index} ({value}) exceeds 2^40 in magnitude")]
    OutOfRange { index: usize, value: i64 },
    #[error("member {index} ({value}) could not be factored")]
    Unfactorable { index: usize, value: i64 },
}

/// A validated list of `n >= 3` distinct square-free integers outside {0, 1}.
///
/// No member is a perfect square, so `f` never has a rational root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct Family {
    members: Vec<SquareFreeInt>,
}

impl Family {
    /// Builds a family from members that are already validated and distinct.
    pub(crate) fn from_members(members: Vec<SquareFreeInt>) -> Self {
        debug_assert!((3..=MAX_FAMILY_SIZE).contains(&members.len()));
        Self { members }
    }

    pub fn members(&self) -> &[SquareFreeInt] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member by 1-based index.
    pub fn member(&self, index: usize) -> Option<&SquareFreeInt> {
        index.checked_sub(1).and_then(|i| self.members.get(i))
    }

    pub fn values(&self) -> Vec<i64> {
        self.members.iter().map(SquareFreeInt::value).collect()
    }

    /// `f(x) mod m`, exact.
    pub fn eval_mod(&self, x: u64, m: u64) -> u64 {
        if m == 1 {
            return 0;
        }
        let x = x % m;
        let sq = mul_mod(x, x, m);
        self.members.iter().fold(1 % m, |acc, a| {
            let factor = reduce(sq as i128 - a.value() as i128, m);
            mul_mod(acc, factor, m)
        })
    }
}

impl TryFrom<Vec<i64>> for Family {
    type Error = FamilyError;

    fn try_from(values: Vec<i64>) -> Result<Self, Self::Error> {
        validate_family(&values)
    }
}

impl From<Family> for Vec<i64> {
    fn from(f: Family) -> Vec<i64> {
        f.values()
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.members.iter().map(|m| m.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Validates raw integers into a [`Family`]. Indices in errors are 1-based.
pub fn validate_family(values: &[i64]) -> Result<Family, FamilyError> {
    if values.len() < 3 {
        return Err(FamilyError::TooFew(values.len()));
    }
    if values.len() > MAX_FAMILY_SIZE {
        return Err(FamilyError::TooMany(values.len()));
    }
    let mut members = Vec::with_capacity(values.len());
    for (i, &value) in values.iter().enumerate() {
        let index = i + 1;
        let member = make_squarefree(value).map_err(|e| match e {
            NtError::NotSquareFree { .. } => FamilyError::NotSquareFree { index, value },
            NtError::DisallowedValue(_) => FamilyError::DisallowedValue { index, value },
            NtError::OutOfRange(_) => FamilyError::OutOfRange { index, value },
            _ => FamilyError::Unfactorable { index, value },
        })?;
        if let Some(j) = values[..i].iter().position(|&v| v == value) {
            return Err(FamilyError::NotDistinct {
                first: j + 1,
                second: index,
                value,
            });
        }
        members.push(member);
    }
    Ok(Family { members })
}

/// Odd primes dividing some member, split by whether any member is a
/// nonzero quadratic residue there.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OddPrimeTable {
    /// Prime to the smallest 1-based index `i` with `(a_i/p) = +1`.
    pub good: BTreeMap<u64, usize>,
    pub bad: BTreeSet<u64>,
}

impl OddPrimeTable {
    pub fn is_good(&self, p: u64) -> bool {
        self.good.contains_key(&p)
    }
}

pub fn good_odd_primes(family: &Family) -> OddPrimeTable {
    good_odd_primes_with(family, &DirectLegendre)
}

pub fn good_odd_primes_with(family: &Family, symbols: &dyn LegendreSource) -> OddPrimeTable {
    let primes: BTreeSet<u64> = family
        .members
        .iter()
        .flat_map(|a| a.odd_primes().iter().copied())
        .collect();
    let mut table = OddPrimeTable::default();
    for p in primes {
        match family
            .members
            .iter()
            .position(|a| symbols.legendre(a.value(), p) == 1)
        {
            Some(i) => {
                table.good.insert(p, i + 1);
            }
            None => {
                table.bad.insert(p);
            }
        }
    }
    table
}

/// Witness data from which a root modulo every prime power can be built.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Certificate {
    /// Sorted 1-based indices, odd cardinality, square product.
    pub subset_t: Vec<usize>,
    /// Each odd prime dividing the product over `T`, mapped to a 1-based
    /// index `i` with `(a_i/p) = +1`.
    #[serde(with = "wire::prime_map")]
    pub odd_prime_witnesses: BTreeMap<u64, usize>,
    /// 1-based index of a member congruent to 1 mod 8.
    pub dyadic_witness: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstructionKind {
    /// An odd prime not dividing any member, where every member is a non-residue.
    NoQrPrime,
    /// An odd prime dividing some member, where no member is a nonzero residue.
    OddPrime,
    /// No member is congruent to 1 mod 8.
    Dyadic,
}

/// Why `x^2 = a_i` has no solution modulo `p^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Legendre(i8),
    ResidueMod8(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorEvidence {
    pub index: usize,
    pub value: i64,
    pub reason: Evidence,
}

/// One obstruction: no factor is solvable modulo `prime^local_exponent`, so
/// `f` has no root modulo `prime^exponent` with `exponent = local_exponent * n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Obstruction {
    pub kind: ObstructionKind,
    pub prime: u64,
    pub local_exponent: u32,
    pub exponent: u32,
    /// `prime^exponent`, absent when it exceeds 2^63.
    #[serde(with = "wire::opt_int")]
    pub modulus: Option<u64>,
    pub evidence: Vec<FactorEvidence>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Counterexample {
    /// Sorted by prime.
    pub obstructions: Vec<Obstruction>,
    /// Position in `obstructions` (0-based) of the smallest modulus.
    pub primary: usize,
}

impl Counterexample {
    pub fn primary_obstruction(&self) -> &Obstruction {
        &self.obstructions[self.primary]
    }

    pub fn primary_modulus(&self) -> Option<u64> {
        self.primary_obstruction().modulus
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Certificate(Certificate),
    Counterexample(Counterexample),
}

impl Verdict {
    pub fn is_certificate(&self) -> bool {
        matches!(self, Verdict::Certificate(_))
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            Verdict::Certificate(c) => Some(c),
            Verdict::Counterexample(_) => None,
        }
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Verdict::Counterexample(c) => Some(c),
            Verdict::Certificate(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertifyError {
    #[error(
        "inconclusive: no odd square subset exists, but no non-residue witness prime was found below {bound}"
    )]
    Inconclusive { bound: u64 },
}

/// Compares `p1^e1` with `p2^e2`.
fn cmp_prime_powers(p1: u64, e1: u32, p2: u64, e2: u32) -> Ordering {
    let exact = |p: u64, e: u32| (p as u128).checked_pow(e);
    match (exact(p1, e1), exact(p2, e2)) {
        (Some(a), Some(b)) => a.cmp(&b),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => {
            let a = e1 as f64 * (p1 as f64).log2();
            let b = e2 as f64 * (p2 as f64).log2();
            a.total_cmp(&b).then(p1.cmp(&p2))
        }
    }
}

fn build_obstruction(
    family: &Family,
    kind: ObstructionKind,
    prime: u64,
    symbols: &dyn LegendreSource,
) -> Obstruction {
    let local_exponent = match kind {
        ObstructionKind::NoQrPrime => 1,
        ObstructionKind::OddPrime => 2,
        ObstructionKind::Dyadic => 3,
    };
    let n = family.len() as u32;
    let evidence = family
        .members
        .iter()
        .enumerate()
        .map(|(i, a)| FactorEvidence {
            index: i + 1,
            value: a.value(),
            reason: match kind {
                ObstructionKind::Dyadic => Evidence::ResidueMod8(a.residue(8) as u8),
                _ => Evidence::Legendre(symbols.legendre(a.value(), prime)),
            },
        })
        .collect();
    Obstruction {
        kind,
        prime,
        local_exponent,
        exponent: local_exponent * n,
        modulus: lemma3_modulus(prime, local_exponent, family.len())
            .ok()
            .map(|pp| pp.modulus()),
        evidence,
    }
}

/// Decides the family with default limits.
pub fn check_theorem1(family: &Family) -> Result<Verdict, CertifyError> {
    check_theorem1_with(family, &EngineConfig::default(), &DirectLegendre)
}

pub fn check_theorem1_with(
    family: &Family,
    config: &EngineConfig,
    symbols: &dyn LegendreSource,
) -> Result<Verdict, CertifyError> {
    let table = good_odd_primes_with(family, symbols);
    let dyadic = family
        .members
        .iter()
        .position(|a| a.residue(8) == 1)
        .map(|i| i + 1);

    // A subset T satisfies both subset conditions iff every member of T has
    // only good odd primes, so solve the system over those members alone.
    let clean: Vec<usize> = (0..family.len())
        .filter(|&i| {
            family.members[i]
                .odd_primes()
                .iter()
                .all(|&p| table.is_good(p))
        })
        .collect();
    let clean_members: Vec<&SquareFreeInt> = clean.iter().map(|&i| &family.members[i]).collect();
    let qualifying: Option<Vec<usize>> =
        odd_square_subsets_of(&clean_members, 1, config.subset_cap)
            .subsets
            .into_iter()
            .next()
            .map(|t| t.into_iter().map(|j| clean[j - 1] + 1).collect());

    if let (Some(subset_t), Some(dyadic_witness)) = (&qualifying, dyadic) {
        let odd_prime_witnesses = subset_t
            .iter()
            .flat_map(|&j| family.members[j - 1].odd_primes().iter().copied())
            .map(|p| (p, table.good[&p]))
            .collect();
        return Ok(Verdict::Certificate(Certificate {
            subset_t: subset_t.clone(),
            odd_prime_witnesses,
            dyadic_witness,
        }));
    }

    let mut obstructions = Vec::new();
    let mut witness_search_failed = false;
    if qualifying.is_none() {
        let all_members: Vec<&SquareFreeInt> = family.members.iter().collect();
        match odd_square_subsets_of(&all_members, 1, config.subset_cap)
            .subsets
            .first()
        {
            None => match find_nonresidue_prime_with(family, config.prime_search_bound, symbols) {
                Some(p) => obstructions.push(build_obstruction(
                    family,
                    ObstructionKind::NoQrPrime,
                    p,
                    symbols,
                )),
                None => witness_search_failed = true,
            },
            Some(first) => {
                let bad = first
                    .iter()
                    .flat_map(|&j| family.members[j - 1].odd_primes().iter().copied())
                    .filter(|p| table.bad.contains(p))
                    .min()
                    .expect("an odd square subset outside the clean members has a bad prime");
                obstructions.push(build_obstruction(
                    family,
                    ObstructionKind::OddPrime,
                    bad,
                    symbols,
                ));
            }
        }
    }
    if dyadic.is_none() {
        obstructions.push(build_obstruction(
            family,
            ObstructionKind::Dyadic,
            2,
            symbols,
        ));
    }
    if obstructions.is_empty() {
        debug_assert!(witness_search_failed);
        return Err(CertifyError::Inconclusive {
            bound: config.prime_search_bound,
        });
    }
    obstructions.sort_by_key(|o| o.prime);
    let primary = (0..obstructions.len())
        .min_by(|&a, &b| {
            let (x, y) = (&obstructions[a], &obstructions[b]);
            cmp_prime_powers(x.prime, x.exponent, y.prime, y.exponent)
        })
        .expect("nonempty");
    Ok(Verdict::Counterexample(Counterexample {
        obstructions,
        primary,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CertificateViolation {
    #[error("subset T is empty")]
    EmptySubset,
    #[error("subset T contains index {0}, outside 1..=n")]
    IndexOutOfRange(usize),
    #[error("subset T is not strictly increasing")]
    UnsortedSubset,
    #[error("subset T has even cardinality {0}")]
    EvenCardinality(usize),
    #[error("product over T is not a perfect square")]
    ProductNotSquare,
    #[error("odd prime {0} divides the product over T but has no witness")]
    MissingWitness(u64),
    #[error("witness recorded for {0}, which does not divide the product over T")]
    UnexpectedWitness(u64),
    #[error("witness index {index} for prime {prime} is outside 1..=n")]
    WitnessOutOfRange { prime: u64, index: usize },
    #[error("witness a_{index} has Legendre symbol {symbol} at {prime}, not +1")]
    WitnessNotResidue {
        prime: u64,
        index: usize,
        symbol: i8,
    },
    #[error("dyadic witness index {0} is outside 1..=n")]
    DyadicOutOfRange(usize),
    #[error("dyadic witness a_{index} = {value} is {residue} mod 8, not 1")]
    DyadicNotOneMod8 {
        index: usize,
        value: i64,
        residue: u64,
    },
}

/// Re-checks every certificate clause from scratch.
pub fn validate_certificate(
    family: &Family,
    cert: &Certificate,
) -> Result<(), CertificateViolation> {
    let n = family.len();
    let t = &cert.subset_t;
    if t.is_empty() {
        return Err(CertificateViolation::EmptySubset);
    }
    if let Some(&bad) = t.iter().find(|&&j| j == 0 || j > n) {
        return Err(CertificateViolation::IndexOutOfRange(bad));
    }
    if t.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CertificateViolation::UnsortedSubset);
    }
    if t.len().is_multiple_of(2) {
        return Err(CertificateViolation::EvenCardinality(t.len()));
    }
    let members: Vec<&SquareFreeInt> = t.iter().map(|&j| &family.members[j - 1]).collect();
    if !product_is_square(members.iter().copied()) {
        return Err(CertificateViolation::ProductNotSquare);
    }
    let primes: BTreeSet<u64> = members
        .iter()
        .flat_map(|a| a.odd_primes().iter().copied())
        .collect();
    if let Some(&p) = primes
        .iter()
        .find(|p| !cert.odd_prime_witnesses.contains_key(p))
    {
        return Err(CertificateViolation::MissingWitness(p));
    }
    for (&prime, &index) in &cert.odd_prime_witnesses {
        if !primes.contains(&prime) {
            return Err(CertificateViolation::UnexpectedWitness(prime));
        }
        let Some(a) = family.member(index) else {
            return Err(CertificateViolation::WitnessOutOfRange { prime, index });
        };
        let symbol = ntheory::legendre(a.value() as i128, prime)
            .map_err(|_| CertificateViolation::UnexpectedWitness(prime))?;
        if symbol != 1 {
            return Err(CertificateViolation::WitnessNotResidue {
                prime,
                index,
                symbol,
            });
        }
    }
    let index = cert.dyadic_witness;
    let a = family
        .member(index)
        .ok_or(CertificateViolation::DyadicOutOfRange(index))?;
    let residue = a.residue(8);
    if residue != 1 || a.value() == 1 {
        return Err(CertificateViolation::DyadicNotOneMod8 {
            index,
            value: a.value(),
            residue,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorollaryError {
    #[error("{name} = {value} is not an odd prime")]
    NotOddPrime { name: &'static str, value: u64 },
    #[error("p and q must be distinct")]
    EqualPrimes,
    #[error("{name} = {value} is invalid: {source}")]
    InvalidArgument {
        name: &'static str,
        value: i128,
        source: NtError,
    },
    #[error("c1*d1 = {0} is excluded (must not be 0 or 1)")]
    ProductExcluded(i128),
    #[error("c and d must be distinct")]
    EqualArguments,
    #[error("c1*d1 = {0} coincides with c or d")]
    ProductCoincides(i128),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
}

/// The two-prime criterion `(p/q) = (q/p) = +1` next to the engine verdict
/// for `(p, q, pq)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corollary1Report {
    pub p: u64,
    pub q: u64,
    /// `(p/q)`
    pub legendre_p_q: i8,
    /// `(q/p)`
    pub legendre_q_p: i8,
    pub paper_condition: bool,
    pub engine_verdict: Verdict,
    pub discrepancy: bool,
}

pub fn corollary1_check(p: u64, q: u64) -> Result<Corollary1Report, CorollaryError> {
    corollary1_check_with(p, q, &EngineConfig::default(), &DirectLegendre)
}

pub fn corollary1_check_with(
    p: u64,
    q: u64,
    config: &EngineConfig,
    symbols: &dyn LegendreSource,
) -> Result<Corollary1Report, CorollaryError> {
    for (name, value) in [("p", p), ("q", q)] {
        if value % 2 == 0 || !is_prime(value) {
            return Err(CorollaryError::NotOddPrime { name, value });
        }
    }
    if p == q {
        return Err(CorollaryError::EqualPrimes);
    }
    let pq = p.checked_mul(q).and_then(|v| i64::try_from(v).ok()).ok_or(
        CorollaryError::InvalidArgument {
            name: "pq",
            value: p as i128 * q as i128,
            source: NtError::OutOfRange(i64::MAX),
        },
    )?;
    let family = validate_family(&[p as i64, q as i64, pq])?;
    let legendre_p_q = symbols.legendre(p as i64, q);
    let legendre_q_p = symbols.legendre(q as i64, p);
    let paper_condition = legendre_p_q == 1 && legendre_q_p == 1;
    let engine_verdict = check_theorem1_with(&family, config, symbols)?;
    let discrepancy = paper_condition != engine_verdict.is_certificate();
    Ok(Corollary1Report {
        p,
        q,
        legendre_p_q,
        legendre_q_p,
        paper_condition,
        engine_verdict,
        discrepancy,
    })
}

/// The listed conditions for `(c, d, c1*d1)`, `c1 = c/gcd(c,d)`,
/// `d1 = d/gcd(c,d)`, next to the engine verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corollary2Report {
    pub c: i64,
    pub d: i64,
    pub gcd: u64,
    pub c1: i64,
    pub d1: i64,
    pub c1d1: i64,
    /// Odd primes of `c` (resp. `d`) where neither other member is a residue.
    pub failing_primes: Vec<u64>,
    pub odd_prime_condition: bool,
    pub dyadic_condition: bool,
    pub paper_conditions: bool,
    pub engine_verdict: Verdict,
    pub discrepancy: bool,
}

pub fn corollary2_check(c: i64, d: i64) -> Result<Corollary2Report, CorollaryError> {
    corollary2_check_with(c, d, &EngineConfig::default(), &DirectLegendre)
}

pub fn corollary2_check_with(
    c: i64,
    d: i64,
    config: &EngineConfig,
    symbols: &dyn LegendreSource,
) -> Result<Corollary2Report, CorollaryError> {
    let arg = |name: &'static str, value: i64| {
        make_squarefree(value).map_err(|source| CorollaryError::InvalidArgument {
            name,
            value: value as i128,
            source,
        })
    };
    let cs = arg("c", c)?;
    let ds = arg("d", d)?;
    let g = gcd(c.unsigned_abs(), d.unsigned_abs());
    let (c1, d1) = (c / g as i64, d / g as i64);
    let product = c1 as i128 * d1 as i128;
    if product == 0 || product == 1 {
        return Err(CorollaryError::ProductExcluded(product));
    }
    if c == d {
        return Err(CorollaryError::EqualArguments);
    }
    if product == c as i128 || product == d as i128 {
        return Err(CorollaryError::ProductCoincides(product));
    }
    let c1d1 = i64::try_from(product)
        .ok()
        .filter(|v| v.unsigned_abs() <= ntheory::MAX_MAGNITUDE as u64)
        .ok_or(CorollaryError::InvalidArgument {
            name: "c1*d1",
            value: product,
            source: NtError::OutOfRange(i64::MAX),
        })?;
    let family = validate_family(&[c, d, c1d1])?;

    let mut failing_primes = Vec::new();
    for (own, other) in [(&cs, d), (&ds, c)] {
        for &p in own.odd_primes() {
            if symbols.legendre(other, p) != 1 && symbols.legendre(c1d1, p) != 1 {
                failing_primes.push(p);
            }
        }
    }
    failing_primes.sort_unstable();
    failing_primes.dedup();
    let odd_prime_condition = failing_primes.is_empty();
    let dyadic_condition = [c, d, c1d1].iter().any(|&v| v.rem_euclid(8) == 1);
    let paper_conditions = odd_prime_condition && dyadic_condition;
    let engine_verdict = check_theorem1_with(&family, config, symbols)?;
    let discrepancy = paper_conditions != engine_verdict.is_certificate();
    Ok(Corollary2Report {
        c,
        d,
        gcd: g,
        c1,
        d1,
        c1d1,
        failing_primes,
        odd_prime_condition,
        dyadic_condition,
        paper_conditions,
        engine_verdict,
        discrepancy,
    })
}
