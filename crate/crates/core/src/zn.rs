//! Arithmetic in Z_N, subsets of Z_N and additive quadruples.
//!
//! Every other module consumes [`SubsetOfZn`]. Residues are stored as `u32`
//! in `[0, N)`; intermediate products are computed in `u64`.

use std::fmt;

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported modulus.
pub const MAX_MODULUS: u32 = 1 << 20;

/// The additive group Z_N, remembering whether N is prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CyclicGroup {
    modulus: u32,
    prime: bool,
}

impl CyclicGroup {
    pub fn new(modulus: u32) -> Result<Self> {
        if !(3..=MAX_MODULUS).contains(&modulus) {
            return Err(Error::InvalidModulus(modulus));
        }
        Ok(Self {
            modulus,
            prime: is_prime(modulus),
        })
    }

    /// Like [`CyclicGroup::new`] but also rejects composite moduli.
    pub fn prime(modulus: u32) -> Result<Self> {
        let g = Self::new(modulus)?;
        g.require_prime()?;
        Ok(g)
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    #[inline]
    pub fn is_prime(&self) -> bool {
        self.prime
    }

    pub fn require_prime(&self) -> Result<()> {
        if self.prime {
            Ok(())
        } else {
            Err(Error::NonPrimeModulus(self.modulus))
        }
    }

    #[inline]
    pub fn reduce(&self, x: i64) -> u32 {
        x.rem_euclid(self.modulus as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a as u64 + b as u64;
        (s % self.modulus as u64) as u32
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        let n = self.modulus as u64;
        ((a as u64 + n - b as u64 % n) % n) as u32
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        self.sub(0, a)
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.modulus as u64) as u32
    }

    pub fn pow(&self, base: u32, mut exp: u64) -> u32 {
        let n = self.modulus as u64;
        let mut b = base as u64 % n;
        let mut acc = 1u64 % n;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * b % n;
            }
            b = b * b % n;
            exp >>= 1;
        }
        acc as u32
    }

    /// Multiplicative inverse; `None` for zero or when N is composite.
    pub fn inv(&self, a: u32) -> Option<u32> {
        let a = a % self.modulus;
        if a == 0 || !self.prime {
            return None;
        }
        Some(self.pow(a, self.modulus as u64 - 2))
    }

    pub fn elements(&self) -> impl Iterator<Item = u32> {
        0..self.modulus
    }
}

impl fmt::Display for CyclicGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z_{}", self.modulus)
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// A subset A of Z_N: packed membership bits plus the sorted member list.
///
/// The membership bits are the Boolean variables `t_x = 1_A(x)`.
#[derive(Clone, PartialEq, Eq)]
pub struct SubsetOfZn {
    group: CyclicGroup,
    bits: FixedBitSet,
    members: Vec<u32>,
}

impl SubsetOfZn {
    pub fn new<I: IntoIterator<Item = u32>>(group: CyclicGroup, members: I) -> Result<Self> {
        let mut bits = FixedBitSet::with_capacity(group.modulus() as usize);
        for m in members {
            if m >= group.modulus() {
                return Err(Error::ResidueOutOfRange {
                    value: m as u64,
                    modulus: group.modulus(),
                });
            }
            bits.insert(m as usize);
        }
        Ok(Self::from_bits(group, bits))
    }

    /// Builds the subset from arbitrary integers, reducing them mod N.
    pub fn from_residues<I: IntoIterator<Item = i64>>(group: CyclicGroup, values: I) -> Self {
        let mut bits = FixedBitSet::with_capacity(group.modulus() as usize);
        for v in values {
            bits.insert(group.reduce(v) as usize);
        }
        Self::from_bits(group, bits)
    }

    fn from_bits(group: CyclicGroup, bits: FixedBitSet) -> Self {
        let members = bits.ones().map(|i| i as u32).collect();
        Self {
            group,
            bits,
            members,
        }
    }

    pub fn empty(group: CyclicGroup) -> Self {
        Self::from_bits(group, FixedBitSet::with_capacity(group.modulus() as usize))
    }

    pub fn full(group: CyclicGroup) -> Self {
        let mut bits = FixedBitSet::with_capacity(group.modulus() as usize);
        bits.insert_range(..);
        Self::from_bits(group, bits)
    }

    /// `{start + k * step : 0 <= k < len}`.
    pub fn arithmetic_progression(group: CyclicGroup, start: u32, step: u32, len: usize) -> Self {
        Self::from_residues(
            group,
            (0..len as i64).map(|k| start as i64 + k * step as i64),
        )
    }

    #[inline]
    pub fn group(&self) -> CyclicGroup {
        self.group
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.group.modulus()
    }

    #[inline]
    pub fn contains(&self, x: u32) -> bool {
        x < self.group.modulus() && self.bits.contains(x as usize)
    }

    /// Members in ascending order.
    #[inline]
    pub fn members(&self) -> &[u32] {
        &self.members
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Position of `x` in [`members`](Self::members).
    pub fn index_of(&self, x: u32) -> Option<usize> {
        self.members.binary_search(&x).ok()
    }

    /// `A + s`.
    pub fn translate(&self, s: u32) -> Self {
        let g = self.group;
        Self::from_residues(g, self.members.iter().map(|&m| g.add(m, s) as i64))
    }

    /// `t * A`.
    pub fn dilate(&self, t: u32) -> Self {
        let g = self.group;
        Self::from_residues(g, self.members.iter().map(|&m| g.mul(m, t) as i64))
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    /// True when `A - A` covers all of Z_N.
    pub fn has_full_difference_set(&self) -> bool {
        difference_set(self).len() == self.modulus() as usize
    }
}

impl fmt::Debug for SubsetOfZn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.group, self.members)
    }
}

/// Density and seed of the random subset model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomModel {
    pub density: f64,
    pub master_seed: u64,
}

impl RandomModel {
    pub fn new(density: f64, master_seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&density) {
            return Err(Error::InvalidConfig(format!(
                "density {density} is outside [0, 1]"
            )));
        }
        Ok(Self {
            density,
            master_seed,
        })
    }
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the substream used by trial `trial_index`.
pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    mix64(master_seed ^ mix64(trial_index))
}

pub fn trial_rng(master_seed: u64, trial_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master_seed, trial_index))
}

/// Includes each residue independently with probability `model.density`.
pub fn sample_subset(group: CyclicGroup, model: RandomModel, trial_index: u64) -> SubsetOfZn {
    let mut rng = trial_rng(model.master_seed, trial_index);
    let mut bits = FixedBitSet::with_capacity(group.modulus() as usize);
    for x in 0..group.modulus() as usize {
        // always draw so the stream position does not depend on p
        let u: f64 = rng.gen();
        if u < model.density {
            bits.insert(x);
        }
    }
    SubsetOfZn::from_bits(group, bits)
}

/// `A - A = { a - a' : a, a' in A }`.
pub fn difference_set(a: &SubsetOfZn) -> SubsetOfZn {
    let g = a.group();
    let mut bits = FixedBitSet::with_capacity(g.modulus() as usize);
    for &x in a.members() {
        for &y in a.members() {
            bits.insert(g.sub(x, y) as usize);
        }
    }
    SubsetOfZn::from_bits(g, bits)
}

/// An ordered quadruple with `a - b = c - d` (mod N).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Quadruple {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
}

impl Quadruple {
    /// `{a, d} = {c, b}` as multisets: no constraint on any function.
    #[inline]
    pub fn is_trivial(&self) -> bool {
        (self.a == self.b && self.c == self.d) || (self.a == self.c && self.b == self.d)
    }
}

/// All ordered `(a, b, c, d)` in `A^4` with `a - b = c - d`.
///
/// Iterates `(a, b, c)` and tests membership of `d = c - a + b`.
pub fn enumerate_additive_quadruples(a: &SubsetOfZn, include_trivial: bool) -> Vec<Quadruple> {
    let g = a.group();
    let mut out = Vec::new();
    for &x in a.members() {
        for &y in a.members() {
            for &z in a.members() {
                let w = g.add(g.sub(z, x), y);
                if a.contains(w) {
                    let q = Quadruple {
                        a: x,
                        b: y,
                        c: z,
                        d: w,
                    };
                    if include_trivial || !q.is_trivial() {
                        out.push(q);
                    }
                }
            }
        }
    }
    out
}

/// Number of additive quadruples (trivial ones included): `sum_e r(e)^2`
/// where `r(e)` counts representations `e = a - b`.
pub fn count_additive_quadruples(a: &SubsetOfZn) -> u64 {
    let g = a.group();
    let mut reps = vec![0u64; g.modulus() as usize];
    for &x in a.members() {
        for &y in a.members() {
            reps[g.sub(x, y) as usize] += 1;
        }
    }
    reps.iter().map(|r| r * r).sum()
}
