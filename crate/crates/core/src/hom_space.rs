//! Freiman homomorphisms A -> Z_N and the Freiman rank.
//!
//! For prime N the homomorphisms form an F_N-vector space: the kernel of one
//! constraint row `f(a) - f(b) - f(c) + f(d) = 0` per nontrivial additive
//! quadruple. `rank(A) = dim Hom_F(A, Z_N) - 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::ConstraintSystem;
use crate::zn::{enumerate_additive_quadruples, SubsetOfZn};

/// Largest `N^|A|` accepted by [`brute_force_hom_count`].
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

/// A function on A, stored as values aligned with `domain.members()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreimanHom {
    domain: SubsetOfZn,
    values: Vec<u32>,
}

impl FreimanHom {
    /// Wraps a value table without checking the homomorphism property; see
    /// [`FreimanHom::verified`].
    pub fn from_values(domain: SubsetOfZn, values: Vec<u32>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::Parse(format!(
                "{} values for a set of size {}",
                values.len(),
                domain.len()
            )));
        }
        let n = domain.modulus();
        if let Some(&v) = values.iter().find(|&&v| v >= n) {
            return Err(Error::ResidueOutOfRange {
                value: v as u64,
                modulus: n,
            });
        }
        Ok(Self { domain, values })
    }

    /// Builds `x -> f(x)` on A and checks Definition 1.
    pub fn verified(domain: SubsetOfZn, f: impl Fn(u32) -> u32) -> Result<Self> {
        let n = domain.modulus();
        let values = domain.members().iter().map(|&x| f(x) % n).collect();
        let h = Self { domain, values };
        h.verify()?;
        Ok(h)
    }

    /// Restriction of `x -> slope * x + intercept`.
    pub fn linear(domain: SubsetOfZn, slope: u32, intercept: u32) -> Self {
        let g = domain.group();
        let values = domain
            .members()
            .iter()
            .map(|&x| g.add(g.mul(slope, x), intercept))
            .collect();
        Self { domain, values }
    }

    pub fn domain(&self) -> &SubsetOfZn {
        &self.domain
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn value(&self, x: u32) -> Option<u32> {
        self.domain.index_of(x).map(|i| self.values[i])
    }

    /// Checks `f(a) - f(b) = f(c) - f(d)` on every additive quadruple.
    pub fn verify(&self) -> Result<()> {
        let g = self.domain.group();
        for q in enumerate_additive_quadruples(&self.domain, false) {
            let f = |x| self.value(x).expect("member");
            if g.sub(f(q.a), f(q.b)) != g.sub(f(q.c), f(q.d)) {
                return Err(Error::NotAFreimanHom(q.a, q.b, q.c, q.d));
            }
        }
        Ok(())
    }

    /// Whether f is the restriction of some `x -> s x + t`: the unique
    /// candidate through the two smallest members is tested on the rest.
    pub fn is_linear_restriction(&self) -> bool {
        let m = self.domain.members();
        if m.len() <= 2 {
            return true;
        }
        let g = self.domain.group();
        let (a0, a1) = (m[0], m[1]);
        let (f0, f1) = (self.values[0], self.values[1]);
        let Some(inv) = g.inv(g.sub(a1, a0)) else {
            // composite modulus: fall back to scanning all slopes
            return (0..g.modulus()).any(|s| {
                let t = g.sub(f0, g.mul(s, a0));
                FreimanHom::linear(self.domain.clone(), s, t).values == self.values
            });
        };
        let slope = g.mul(g.sub(f1, f0), inv);
        let intercept = g.sub(f0, g.mul(slope, a0));
        m.iter()
            .zip(&self.values)
            .all(|(&x, &v)| g.add(g.mul(slope, x), intercept) == v)
    }
}

/// Dimension, basis and Freiman rank of Hom_F(A, Z_N).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomSpaceResult {
    pub dimension: usize,
    pub basis: Vec<FreimanHom>,
    pub rank: usize,
}

/// JSON-friendly view of a [`HomSpaceResult`].
#[derive(Debug, Clone, Serialize)]
pub struct HomSpaceRecord {
    #[serde(rename = "N")]
    pub modulus: u32,
    pub members: Vec<u32>,
    pub dimension: usize,
    pub rank: usize,
    pub linear: Option<bool>,
    /// Basis vectors as value tables aligned with `members`.
    pub basis: Vec<Vec<u32>>,
}

impl HomSpaceResult {
    pub fn record(&self, a: &SubsetOfZn) -> HomSpaceRecord {
        HomSpaceRecord {
            modulus: a.modulus(),
            members: a.members().to_vec(),
            dimension: self.dimension,
            rank: self.rank,
            linear: (a.len() >= 3).then_some(self.rank == 1),
            basis: self.basis.iter().map(|h| h.values.clone()).collect(),
        }
    }
}

/// One row `(+1, -1, -1, +1)` at columns `(a, b, c, d)` per nontrivial
/// additive quadruple, merged and deduplicated.
pub fn build_hom_constraints(a: &SubsetOfZn) -> Result<ConstraintSystem> {
    a.group().require_prime()?;
    if a.is_empty() {
        return Err(Error::DegenerateSet {
            size: 0,
            required: 1,
        });
    }
    let mut cs = ConstraintSystem::new(a.group(), a.members().to_vec());
    let col = |x: u32| a.index_of(x).expect("member");
    for q in enumerate_additive_quadruples(a, false) {
        cs.push([(col(q.a), 1), (col(q.b), -1), (col(q.c), -1), (col(q.d), 1)]);
    }
    Ok(cs)
}

pub fn solve_hom_space(a: &SubsetOfZn) -> Result<HomSpaceResult> {
    a.group().require_prime()?;
    if a.len() < 2 {
        return Err(Error::DegenerateSet {
            size: a.len(),
            required: 2,
        });
    }
    let cs = build_hom_constraints(a)?;
    let basis: Vec<FreimanHom> = cs
        .kernel_basis()
        .into_iter()
        .map(|values| FreimanHom {
            domain: a.clone(),
            values,
        })
        .collect();
    let dimension = basis.len();
    Ok(HomSpaceResult {
        dimension,
        basis,
        rank: dimension - 1,
    })
}

/// Dimension only; elimination stops once `|A| - 2` independent rows are
/// found, since constants and the identity always survive.
pub fn hom_space_dimension(a: &SubsetOfZn) -> Result<usize> {
    a.group().require_prime()?;
    if a.len() < 2 {
        return Err(Error::DegenerateSet {
            size: a.len(),
            required: 2,
        });
    }
    let cs = build_hom_constraints(a)?;
    let rank = cs.echelon_with_limit(a.len() - 2).rank();
    Ok(a.len() - rank)
}

pub fn freiman_rank(a: &SubsetOfZn) -> Result<usize> {
    Ok(hom_space_dimension(a)? - 1)
}

/// True iff every Freiman homomorphism on A is affine, i.e. rank 1.
pub fn is_linear(a: &SubsetOfZn) -> Result<bool> {
    if a.len() < 3 {
        a.group().require_prime()?;
        return Err(Error::DegenerateSet {
            size: a.len(),
            required: 3,
        });
    }
    Ok(freiman_rank(a)? == 1)
}

/// Counts all `f: A -> Z_N` satisfying Definition 1 by exhaustive search.
///
/// Independent of the elimination path: quadruples are found by a direct
/// scan of `A^4` and functions by depth-first assignment, checking each
/// quadruple once its last coordinate is assigned.
pub fn brute_force_hom_count(a: &SubsetOfZn) -> Result<u64> {
    let n = a.modulus() as u128;
    let size = n.checked_pow(a.len() as u32).unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            what: "N^|A| function enumeration",
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let m = a.members();
    let k = m.len();
    let nn = a.modulus() as i64;
    // quadruples as member indices, bucketed by their largest index
    let mut checks: Vec<Vec<[usize; 4]>> = vec![Vec::new(); k];
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                for o in 0..k {
                    let lhs = (m[i] as i64 - m[j] as i64).rem_euclid(nn);
                    let rhs = (m[l] as i64 - m[o] as i64).rem_euclid(nn);
                    if lhs == rhs {
                        let top = i.max(j).max(l).max(o);
                        checks[top].push([i, j, l, o]);
                    }
                }
            }
        }
    }
    fn dfs(pos: usize, f: &mut Vec<i64>, n: i64, checks: &[Vec<[usize; 4]>]) -> u64 {
        if pos == f.len() {
            return 1;
        }
        let mut total = 0;
        for v in 0..n {
            f[pos] = v;
            let ok = checks[pos]
                .iter()
                .all(|&[i, j, l, o]| (f[i] - f[j] - f[l] + f[o]).rem_euclid(n) == 0);
            if ok {
                total += dfs(pos + 1, f, n, checks);
            }
        }
        total
    }
    let mut f = vec![0i64; k];
    Ok(dfs(0, &mut f, nn, &checks))
}

/// Whether no `(x, y, z)` in `A^3` solves `x + y = z + x0` apart from the
/// multiset-trivial `{x, y} = {z, x0}`.
pub fn is_isolated(a: &SubsetOfZn, x0: u32) -> bool {
    if !a.contains(x0) {
        return false;
    }
    let g = a.group();
    for &x in a.members() {
        for &y in a.members() {
            let z = g.sub(g.add(x, y), x0);
            if a.contains(z) {
                let trivial = (x == z && y == x0) || (x == x0 && y == z);
                if !trivial {
                    return false;
                }
            }
        }
    }
    true
}

/// The largest isolated element of A, if any.
pub fn find_isolated_element(a: &SubsetOfZn) -> Option<u32> {
    a.members().iter().rev().copied().find(|&x| is_isolated(a, x))
}

/// The indicator of `x0`: a Freiman homomorphism that is not affine when
/// `x0` is isolated and `|A| >= 3`.
pub fn indicator_hom_from_isolated(a: &SubsetOfZn, x0: u32) -> Result<FreimanHom> {
    if a.len() < 3 {
        return Err(Error::DegenerateSet {
            size: a.len(),
            required: 3,
        });
    }
    if !is_isolated(a, x0) {
        return Err(Error::NotIsolated(x0));
    }
    FreimanHom::verified(a.clone(), |x| u32::from(x == x0))
}
