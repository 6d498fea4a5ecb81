//! Odd-cardinality subsets whose product is a perfect square.
//!
//! Each member `a` becomes a GF(2) exponent vector over the coordinates
//! (sign, odd primes ascending, 2). A subset `T` has square product exactly
//! when the chosen vectors sum to zero, and odd cardinality adds the affine
//! constraint that the all-ones functional equals 1. The solution set is a
//! coset of the kernel, which is enumerated (up to a cap) and sorted.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::certify::Family;
use crate::ntheory::{is_prime, product_is_square, LegendreSource, SquareFreeInt};

/// Largest coset enumerated before the result is flagged as truncated.
pub const DEFAULT_SUBSET_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubsetError {
    #[error("basis has no coordinate for prime {0}")]
    BasisMissingPrime(u64),
    #[error("basis has no sign coordinate")]
    BasisMissingSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coord {
    Sign,
    Prime(u64),
}

/// Dense bit vector over GF(2).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gf2Vec {
    words: Vec<u64>,
    len: usize,
}

impl Gf2Vec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn xor_assign(&mut self, other: &Gf2Vec) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| self.get(i) as u8).collect()
    }
}

/// Coordinate list: sign, then each odd prime dividing any member
/// (ascending), then 2 if any member is even.
pub fn coordinate_basis<'a>(members: impl IntoIterator<Item = &'a SquareFreeInt>) -> Vec<Coord> {
    let mut odd = BTreeSet::new();
    let mut two = false;
    for m in members {
        odd.extend(m.odd_primes().iter().copied());
        two |= m.has_factor_two();
    }
    std::iter::once(Coord::Sign)
        .chain(odd.into_iter().map(Coord::Prime))
        .chain(two.then_some(Coord::Prime(2)))
        .collect()
}

/// Parity vector of `a` over `basis`.
pub fn exponent_vector(a: &SquareFreeInt, basis: &[Coord]) -> Result<Gf2Vec, SubsetError> {
    let mut v = Gf2Vec::zeros(basis.len());
    if a.is_negative() {
        let i = basis
            .iter()
            .position(|c| *c == Coord::Sign)
            .ok_or(SubsetError::BasisMissingSign)?;
        v.set(i, true);
    }
    for p in a.primes() {
        let i = basis
            .iter()
            .position(|c| *c == Coord::Prime(p))
            .ok_or(SubsetError::BasisMissingPrime(p))?;
        v.set(i, true);
    }
    Ok(v)
}

/// Reduced form of the affine system `sum_{j in T} row_j = 0`, `|T| = 1 (mod 2)`.
///
/// Subsets are bit masks over member positions, so a system holds at most
/// 64 members.
#[derive(Debug, Clone)]
pub struct Gf2System {
    basis: Vec<Coord>,
    rows: Vec<Gf2Vec>,
    particular: Option<u64>,
    kernel: Vec<u64>,
}

impl Gf2System {
    pub fn new(members: &[&SquareFreeInt]) -> Self {
        let n = members.len();
        assert!(n <= 64, "GF(2) system supports at most 64 members");
        let basis = coordinate_basis(members.iter().copied());
        let rows: Vec<Gf2Vec> = members
            .iter()
            .map(|m| exponent_vector(m, &basis).expect("basis covers every member"))
            .collect();

        // One equation per coordinate (transpose of the member rows), plus parity.
        let mut eqs: Vec<(u64, bool)> = (0..basis.len())
            .map(|c| {
                let mask = rows
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.get(c))
                    .fold(0u64, |acc, (j, _)| acc | 1 << j);
                (mask, false)
            })
            .collect();
        let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        eqs.push((all, true));

        let mut pivots: Vec<(usize, usize)> = Vec::new(); // (column, equation)
        let mut next = 0;
        for col in 0..n {
            let bit = 1u64 << col;
            let Some(found) = (next..eqs.len()).find(|&r| eqs[r].0 & bit != 0) else {
                continue;
            };
            eqs.swap(next, found);
            let (pm, pr) = eqs[next];
            for (r, eq) in eqs.iter_mut().enumerate() {
                if r != next && eq.0 & bit != 0 {
                    eq.0 ^= pm;
                    eq.1 ^= pr;
                }
            }
            pivots.push((col, next));
            next += 1;
        }

        let consistent = eqs[next..].iter().all(|&(m, r)| m != 0 || !r);
        let particular = consistent.then(|| {
            pivots
                .iter()
                .filter(|&&(_, r)| eqs[r].1)
                .fold(0u64, |acc, &(c, _)| acc | 1 << c)
        });
        let pivot_cols: u64 = pivots.iter().fold(0, |acc, &(c, _)| acc | 1 << c);
        let kernel = (0..n)
            .filter(|&f| pivot_cols & (1 << f) == 0)
            .map(|f| {
                pivots
                    .iter()
                    .filter(|&&(_, r)| eqs[r].0 & (1 << f) != 0)
                    .fold(1u64 << f, |acc, &(c, _)| acc | 1 << c)
            })
            .collect();

        Self {
            basis,
            rows,
            particular,
            kernel,
        }
    }

    pub fn basis(&self) -> &[Coord] {
        &self.basis
    }

    /// Member exponent vectors, in member order.
    pub fn rows(&self) -> &[Gf2Vec] {
        &self.rows
    }

    /// Whether some odd square subset exists.
    pub fn is_solvable(&self) -> bool {
        self.particular.is_some()
    }

    /// Dimension of the kernel; the solution coset has `2^dim` elements.
    pub fn kernel_dimension(&self) -> usize {
        self.kernel.len()
    }

    /// Solution masks in Gray-code order, at most `cap` of them; the flag
    /// reports whether the coset was cut short.
    pub fn solution_masks(&self, cap: usize) -> (Vec<u64>, bool) {
        let Some(mut current) = self.particular else {
            return (Vec::new(), false);
        };
        let dim = self.kernel.len();
        let total = if dim >= usize::BITS as usize - 1 {
            usize::MAX
        } else {
            1usize << dim
        };
        let take = total.min(cap.max(1));
        let mut out = Vec::with_capacity(take);
        out.push(current);
        for i in 1..take {
            current ^= self.kernel[i.trailing_zeros() as usize];
            out.push(current);
        }
        (out, take < total)
    }
}

/// Outcome of an odd-square-subset query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetEnumeration {
    /// 1-based index lists, ordered by cardinality then lexicographically.
    pub subsets: Vec<Vec<usize>>,
    /// Set when the solution coset exceeded the enumeration cap.
    pub truncated: bool,
}

fn mask_to_indices(mask: u64) -> Vec<usize> {
    (0..64)
        .filter(|&j| mask >> j & 1 == 1)
        .map(|j| j + 1)
        .collect()
}

/// Odd square subsets of an arbitrary member list; indices are 1-based
/// positions within `members`.
pub fn odd_square_subsets_of(
    members: &[&SquareFreeInt],
    limit: usize,
    cap: usize,
) -> SubsetEnumeration {
    let system = Gf2System::new(members);
    let (masks, truncated) = system.solution_masks(cap);
    let mut subsets: Vec<Vec<usize>> = masks.into_iter().map(mask_to_indices).collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets.truncate(limit);
    for t in &subsets {
        assert!(
            t.len() % 2 == 1 && product_is_square(t.iter().map(|&j| members[j - 1])),
            "GF(2) solution {t:?} is not an odd square subset"
        );
    }
    SubsetEnumeration { subsets, truncated }
}

/// Up to `limit` odd-cardinality subsets `T` of the family with square
/// product, in (cardinality, lexicographic) order.
pub fn odd_square_subsets(family: &Family, limit: usize) -> SubsetEnumeration {
    let members: Vec<&SquareFreeInt> = family.members().iter().collect();
    odd_square_subsets_of(&members, limit, DEFAULT_SUBSET_CAP)
}

/// Smallest odd prime `p <= bound` not dividing any member, at which every
/// member is a quadratic non-residue.
pub fn find_nonresidue_prime(family: &Family, bound: u64) -> Option<u64> {
    find_nonresidue_prime_with(family, bound, &crate::ntheory::DirectLegendre)
}

pub fn find_nonresidue_prime_with(
    family: &Family,
    bound: u64,
    symbols: &dyn LegendreSource,
) -> Option<u64> {
    (3..=bound).step_by(2).filter(|&p| is_prime(p)).find(|&p| {
        family
            .members()
            .iter()
            .all(|a| symbols.legendre(a.value(), p) == -1)
    })
}
