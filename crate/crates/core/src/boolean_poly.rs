//! Reduced Boolean polynomials with nonnegative integer weights, the
//! functionals `m(C, l; P)`, partial derivatives, `E_j`, and the Chernoff,
//! Azuma and Vu tail bounds.

use std::collections::HashMap;
use std::hash::Hash;
use std::io::{BufRead, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda::{psi_forms, tuple_is_degenerate, Degeneracy, LinearFormSet};
use crate::zn::{trial_rng, CyclicGroup};

/// Largest term size for which `E_j` enumerates subsets.
pub const MAX_SUBSET_DEGREE: usize = 9;

/// Largest `Σ_B 2^|B|` enumerated by the `E_j` computations.
pub const SUBSET_BUDGET: u128 = 1 << 28;

/// Largest modulus accepted by [`ReducedBooleanPolynomial::from_lambda1`].
pub const LAMBDA1_MAX_MODULUS: u32 = 64;

/// A monomial `w(B) t_B` with `B` sorted and free of repeats.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Term {
    #[serde(rename = "vars")]
    pub vars: Vec<u32>,
    #[serde(rename = "w")]
    pub weight: u64,
}

/// `P = Σ_B w(B) t_B` over `variable_count` Boolean variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducedBooleanPolynomial {
    variable_count: usize,
    terms: Vec<Term>,
}

impl ReducedBooleanPolynomial {
    /// Reduces each monomial (`t^2 = t`), merges equal monomials and drops
    /// zero weights.
    pub fn from_terms<I>(variable_count: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, u64)>,
    {
        let mut acc: HashMap<Vec<u32>, u64> = HashMap::new();
        for (mut vars, w) in terms {
            if let Some(&bad) = vars.iter().find(|&&v| v as usize >= variable_count) {
                return Err(Error::ResidueOutOfRange {
                    value: bad as u64,
                    modulus: variable_count as u32,
                });
            }
            vars.sort_unstable();
            vars.dedup();
            *acc.entry(vars).or_insert(0) += w;
        }
        Ok(Self::from_map(variable_count, acc))
    }

    fn from_map(variable_count: usize, acc: HashMap<Vec<u32>, u64>) -> Self {
        let mut terms: Vec<Term> = acc
            .into_iter()
            .filter(|&(_, w)| w > 0)
            .map(|(vars, weight)| Term { vars, weight })
            .collect();
        terms.sort_unstable_by(|x, y| x.vars.cmp(&y.vars));
        Self {
            variable_count,
            terms,
        }
    }

    /// Triangle count of `G(n, p)`: one variable per edge, see
    /// [`edge_index`].
    pub fn from_triangle_count(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidConfig(format!("triangle polynomial needs n >= 3, got {n}")));
        }
        let mut terms = Vec::with_capacity(n * (n - 1) * (n - 2) / 6);
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let e = |x, y| edge_index(n, x, y) as u32;
                    terms.push((vec![e(i, j), e(i, k), e(j, k)], 1));
                }
            }
        }
        Self::from_terms(n * (n - 1) / 2, terms)
    }

    /// Expansion of `Λ^1_{a,b,c}` over the N residue variables; with a rule,
    /// only nondegenerate tuples contribute (`Λ̃^1`).
    pub fn from_lambda1(params: (u32, u32, u32), modulus: u32, filter: Option<Degeneracy>) -> Result<Self> {
        if modulus > LAMBDA1_MAX_MODULUS {
            return Err(Error::TooLarge {
                what: "Λ^1 expansion modulus",
                size: modulus as u128,
                limit: LAMBDA1_MAX_MODULUS as u128,
            });
        }
        let group = CyclicGroup::new(modulus)?;
        let (a, b, c) = params;
        if a >= modulus || b >= modulus || c >= modulus {
            return Err(Error::ResidueOutOfRange {
                value: a.max(b).max(c) as u64,
                modulus,
            });
        }
        if a == b || b == c || a == c {
            return Err(Error::InvalidConfig("parameters a, b, c must be distinct".into()));
        }
        let forms = psi_forms(1)?;
        let maps: Vec<HashMap<Vec<u32>, u64>> = (0..modulus)
            .into_par_iter()
            .map(|x1| {
                let mut acc = HashMap::new();
                let mut vals = LinearFormSet::symbol_values(params, &[x1, 0, 0, 0]);
                for x2 in 0..modulus {
                    vals[4] = x2;
                    for x3 in 0..modulus {
                        vals[5] = x3;
                        for z in 0..modulus {
                            vals[6] = z;
                            if let Some(rule) = filter {
                                if tuple_is_degenerate(rule, &forms, group, &vals) {
                                    continue;
                                }
                            }
                            let mut vars: Vec<u32> = forms
                                .forms()
                                .iter()
                                .map(|f| group.add(vals[f.x.0], vals[f.y.0]))
                                .collect();
                            vars.sort_unstable();
                            vars.dedup();
                            *acc.entry(vars).or_insert(0) += 1;
                        }
                    }
                }
                acc
            })
            .collect();
        let mut total: HashMap<Vec<u32>, u64> = HashMap::new();
        for m in maps {
            for (k, w) in m {
                *total.entry(k).or_insert(0) += w;
            }
        }
        Ok(Self::from_map(modulus as usize, total))
    }

    pub fn variable_count(&self) -> usize {
        self.variable_count
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|t| t.vars.len()).max().unwrap_or(0)
    }

    /// `m(C, l; P)`: total weight of terms `B ⊇ C`, restricted to `|B| = l`
    /// when `l` is given. `C` must be sorted.
    pub fn m(&self, c: &[u32], l: Option<usize>) -> u64 {
        self.terms
            .iter()
            .filter(|t| l.is_none_or(|l| t.vars.len() == l) && is_sorted_subset(c, &t.vars))
            .map(|t| t.weight)
            .sum()
    }

    /// `∂_C P = Σ_{B ⊇ C} w(B) t_{B \ C}`.
    pub fn partial_derivative(&self, c: &[u32]) -> Self {
        let mut acc: HashMap<Vec<u32>, u64> = HashMap::new();
        for t in self.terms.iter().filter(|t| is_sorted_subset(c, &t.vars)) {
            let rest: Vec<u32> = t.vars.iter().copied().filter(|v| c.binary_search(v).is_err()).collect();
            *acc.entry(rest).or_insert(0) += t.weight;
        }
        Self::from_map(self.variable_count, acc)
    }

    /// `E[P]` with every variable Bernoulli(p).
    pub fn expectation(&self, p: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight as f64 * p.powi(t.vars.len() as i32))
            .sum()
    }

    pub fn expectation_exact(&self, p: &BigRational) -> BigRational {
        self.terms.iter().fold(BigRational::zero(), |acc, t| {
            acc + BigRational::from_integer(BigInt::from(t.weight)) * pow_rational(p, t.vars.len())
        })
    }

    /// Value at the 0/1 assignment `t`.
    pub fn evaluate(&self, t: &[bool]) -> u64 {
        self.terms
            .iter()
            .filter(|term| term.vars.iter().all(|&v| t[v as usize]))
            .map(|term| term.weight)
            .sum()
    }

    /// `E_j = max{E[∂_C P] : |C| >= j}`.
    pub fn ej(&self, j: usize, p: f64) -> Result<f64> {
        Ok(self.ej_profile(p)?.get(j).copied().unwrap_or(0.0))
    }

    /// `E_0, ..., E_k` for `k` the degree.
    pub fn ej_profile(&self, p: f64) -> Result<Vec<f64>> {
        let table = self.subset_table()?;
        let by_size = table.max_by_size(|size, counts| {
            counts
                .iter()
                .enumerate()
                .skip(size)
                .map(|(l, &m)| m as f64 * p.powi((l - size) as i32))
                .sum::<f64>()
        }, |x, y| x.max(y));
        Ok(suffix_max(by_size, f64::max))
    }

    pub fn ej_exact(&self, j: usize, p: &BigRational) -> Result<BigRational> {
        Ok(self
            .ej_profile_exact(p)?
            .get(j)
            .cloned()
            .unwrap_or_else(BigRational::zero))
    }

    pub fn ej_profile_exact(&self, p: &BigRational) -> Result<Vec<BigRational>> {
        let table = self.subset_table()?;
        let by_size = table.max_by_size(
            |size, counts| {
                counts
                    .iter()
                    .enumerate()
                    .skip(size)
                    .fold(BigRational::zero(), |acc, (l, &m)| {
                        acc + BigRational::from_integer(BigInt::from(m)) * pow_rational(p, l - size)
                    })
            },
            |x, y| if y > x { y } else { x },
        );
        Ok(suffix_max(by_size, |x, y| if y > x { y } else { x }))
    }

    /// `max{m(B; P) : |B| = s}` for every `s` up to the degree; sizes with
    /// no candidate give 0.
    pub fn max_m_by_size(&self) -> Result<Vec<u64>> {
        let table = self.subset_table()?;
        Ok(table.max_by_size(|_, counts| counts.iter().sum::<u64>(), u64::max))
    }

    /// `P(B; P) = m(B; P) / m(∅; P)`.
    pub fn pb_ratio(&self, b: &[u32]) -> f64 {
        let total = self.m(&[], None);
        if total == 0 {
            return 0.0;
        }
        self.m(b, None) as f64 / total as f64
    }

    fn subset_table(&self) -> Result<SubsetTable> {
        let degree = self.degree();
        if degree > MAX_SUBSET_DEGREE {
            return Err(Error::TooLarge {
                what: "term degree for subset enumeration",
                size: degree as u128,
                limit: MAX_SUBSET_DEGREE as u128,
            });
        }
        let work: u128 = self.terms.iter().map(|t| 1u128 << t.vars.len()).sum();
        if work > SUBSET_BUDGET {
            return Err(Error::TooLarge {
                what: "subset enumeration",
                size: work,
                limit: SUBSET_BUDGET,
            });
        }
        Ok(if self.variable_count <= 128 {
            SubsetTable::build(degree, &self.terms, |vars, mask| {
                select(vars, mask).fold(0u128, |k, v| k | 1 << v)
            }, |k: &u128| k.count_ones() as usize)
        } else {
            SubsetTable::build(degree, &self.terms, |vars, mask| select(vars, mask).collect::<Vec<u32>>(), Vec::len)
        })
    }

    /// One `{"vars": [...], "w": n}` object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for t in &self.terms {
            let line = serde_json::to_string(t).map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R, variable_count: usize) -> Result<Self> {
        let mut terms = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let t: Term = serde_json::from_str(&line).map_err(|e| Error::Parse(e.to_string()))?;
            terms.push((t.vars, t.weight));
        }
        Self::from_terms(variable_count, terms)
    }
}

/// Index of edge `{i, j}` among the `n(n-1)/2` edges of `K_n`, row by row.
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

fn is_sorted_subset(small: &[u32], big: &[u32]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.any(|y| y == x))
}

fn select(vars: &[u32], mask: u32) -> impl Iterator<Item = u32> + '_ {
    vars.iter()
        .enumerate()
        .filter(move |(i, _)| mask >> i & 1 == 1)
        .map(|(_, &v)| v)
}

fn pow_rational(p: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * p)
}

fn suffix_max<T: Clone>(mut v: Vec<T>, max: impl Fn(T, T) -> T) -> Vec<T> {
    for j in (0..v.len().saturating_sub(1)).rev() {
        v[j] = max(v[j].clone(), v[j + 1].clone());
    }
    v
}

type Counts = [u64; MAX_SUBSET_DEGREE + 1];

/// For every `C` contained in some term: `m(C, l; P)` for each `l`, kept
/// per size of `C`. Integer sums, so the parallel reduction is exact.
struct SubsetTable {
    by_size: Vec<Vec<Counts>>,
}

impl SubsetTable {
    fn build<K, F, S>(degree: usize, terms: &[Term], key: F, size: S) -> Self
    where
        K: Hash + Eq + Send,
        F: Fn(&[u32], u32) -> K + Sync,
        S: Fn(&K) -> usize,
    {
        let map = terms
            .par_chunks(1024)
            .fold(HashMap::<K, Counts>::new, |mut acc, chunk| {
                for t in chunk {
                    let len = t.vars.len();
                    for mask in 0..(1u32 << len) {
                        acc.entry(key(&t.vars, mask)).or_insert([0; MAX_SUBSET_DEGREE + 1])[len] += t.weight;
                    }
                }
                acc
            })
            .reduce(HashMap::new, |mut x, y| {
                for (k, c) in y {
                    let e = x.entry(k).or_insert([0; MAX_SUBSET_DEGREE + 1]);
                    for (a, b) in e.iter_mut().zip(c) {
                        *a += b;
                    }
                }
                x
            });
        let mut by_size = vec![Vec::new(); degree + 1];
        for (k, c) in map {
            by_size[size(&k)].push(c);
        }
        Self { by_size }
    }

    /// Per size `s`, the maximum of `value(s, counts)` over recorded `C`
    /// with `|C| = s`, floored at the value of an all-zero count vector.
    fn max_by_size<T, V, M>(&self, value: V, max: M) -> Vec<T>
    where
        V: Fn(usize, &Counts) -> T,
        M: Fn(T, T) -> T,
    {
        self.by_size
            .iter()
            .enumerate()
            .map(|(s, list)| {
                let zero = value(s, &[0; MAX_SUBSET_DEGREE + 1]);
                list.iter().fold(zero, |acc, c| max(acc, value(s, c)))
            })
            .collect()
    }
}

/// Relative slack for float rounding in [`VuSchedule::validate`].
pub const SCHEDULE_RTOL: f64 = 1e-9;

/// Parameters `F_0 > ... > F_r`, λ, `c_k`, `d_k` of Vu's inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VuSchedule {
    #[serde(rename = "F")]
    pub f: Vec<f64>,
    pub lambda: f64,
    #[serde(default = "one")]
    pub c_k: f64,
    #[serde(default = "one")]
    pub d_k: f64,
}

fn one() -> f64 {
    1.0
}

impl VuSchedule {
    pub fn new(f: Vec<f64>, lambda: f64) -> Self {
        Self {
            f,
            lambda,
            c_k: 1.0,
            d_k: 1.0,
        }
    }

    /// `F_j = f0 * ratio^(-j)` for `j = 0..len`.
    pub fn geometric(f0: f64, ratio: f64, len: usize, lambda: f64) -> Self {
        Self::new((0..len).map(|j| f0 / ratio.powi(j as i32)).collect(), lambda)
    }

    /// Checks both conditions against the `E_j` values in `ej` (missing
    /// entries count as 0) with `ln_n` the natural log of the variable
    /// count, up to a relative slack of [`SCHEDULE_RTOL`]. The schedule may
    /// stop before the degree.
    pub fn validate(&self, ej: &[f64], ln_n: f64) -> Result<()> {
        let bad = |index: usize, reason: String| Err(Error::ScheduleInvalid { index, reason });
        if self.f.len() < 2 {
            return bad(0, "need at least F_0 and F_1".into());
        }
        if !(self.lambda > 0.0 && self.c_k > 0.0 && self.d_k > 0.0) {
            return bad(0, "lambda, c_k and d_k must be positive".into());
        }
        for (j, &fj) in self.f.iter().enumerate() {
            let e = ej.get(j).copied().unwrap_or(0.0);
            if fj.is_nan() || fj <= 0.0 {
                return bad(j, format!("F_{j} = {fj} is not positive"));
            }
            if fj < e * (1.0 - SCHEDULE_RTOL) {
                return bad(j, format!("F_{j} = {fj} < E_{j} = {e}"));
            }
            if let Some(&next) = self.f.get(j + 1) {
                if next >= fj {
                    return bad(j, format!("F_{j} = {fj} does not exceed F_{} = {next}", j + 1));
                }
                let need = self.lambda + 4.0 * j as f64 * ln_n;
                if fj / next < need * (1.0 - SCHEDULE_RTOL) {
                    return bad(j, format!("F_{j}/F_{} = {} < lambda + 4j log N = {need}", j + 1, fj / next));
                }
            }
        }
        Ok(())
    }

    /// `(c_k sqrt(λ F_0 F_1), d_k e^(-λ/4))`, without validation.
    pub fn bound(&self) -> (f64, f64) {
        (
            self.c_k * (self.lambda * self.f[0] * self.f[1]).sqrt(),
            self.d_k * (-self.lambda / 4.0).exp(),
        )
    }
}

/// Vu's deviation and tail probability for `P` at density `p`, after
/// checking the schedule against the exact `E_j` profile.
pub fn vu_bound(poly: &ReducedBooleanPolynomial, schedule: &VuSchedule, p: f64) -> Result<(f64, f64)> {
    let profile = poly.ej_profile(p)?;
    vu_bound_with_profile(&profile, schedule, (poly.variable_count() as f64).ln())
}

/// As [`vu_bound`] but against caller-supplied `E_j` values or upper
/// bounds.
pub fn vu_bound_with_profile(ej: &[f64], schedule: &VuSchedule, ln_n: f64) -> Result<(f64, f64)> {
    schedule.validate(ej, ln_n)?;
    Ok(schedule.bound())
}

/// `P{|Y - EY| > sqrt(λN)} <= 2 e^(-λ/4)` for a sum of N Bernoulli variables.
pub fn chernoff_bound(_n: u64, _p: f64, lambda: f64) -> f64 {
    2.0 * (-lambda / 4.0).exp()
}

/// `2 exp(-λ^2 / (2 Σ ||d_i||^2))`.
pub fn azuma_bound(sum_sq_d: f64, lambda: f64) -> f64 {
    2.0 * (-(lambda * lambda) / (2.0 * sum_sq_d)).exp()
}

/// `||d_last||_∞ = (1 - p)(n - 2)` for the triangle-count martingale.
pub fn triangle_last_difference(n: usize, p: f64) -> f64 {
    (1.0 - p) * (n as f64 - 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationSummary {
    pub trials: usize,
    pub mean: f64,
    /// Unbiased sample variance; 0 for a single trial.
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    /// `(q, value)` by nearest rank.
    pub quantiles: Vec<(f64, f64)>,
}

impl ConcentrationSummary {
    pub fn standard_error(&self) -> f64 {
        (self.variance / self.trials as f64).sqrt()
    }
}

pub const SUMMARY_QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

pub fn summarize(values: &[f64]) -> ConcentrationSummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantiles = SUMMARY_QUANTILES
        .iter()
        .map(|&q| {
            let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
            (q, sorted[rank - 1])
        })
        .collect();
    ConcentrationSummary {
        trials: n,
        mean,
        variance,
        min: sorted[0],
        max: sorted[n - 1],
        quantiles,
    }
}

/// Evaluates `P` on `trials` independent Bernoulli(p) assignments; trial
/// `t` draws from the substream of `(seed, t)`.
pub fn empirical_concentration(
    poly: &ReducedBooleanPolynomial,
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<ConcentrationSummary> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let assignment: Vec<bool> = (0..poly.variable_count()).map(|_| rng.gen::<f64>() < p).collect();
            poly.evaluate(&assignment) as f64
        })
        .collect();
    Ok(summarize(&values))
}

/// `max_B P(B; P) N^⌈|B|/2⌉` per bucket `|B|` in `sizes`, with `N^4` for
/// `|B| = 9`.
pub fn dist4_constants(poly: &ReducedBooleanPolynomial, modulus: u32, sizes: &[usize]) -> Result<Vec<(usize, f64)>> {
    let max_m = poly.max_m_by_size()?;
    let total = poly.m(&[], None) as f64;
    Ok(sizes
        .iter()
        .map(|&s| {
            let m = max_m.get(s).copied().unwrap_or(0) as f64;
            let exponent = if s == 9 { 4 } else { s.div_ceil(2) };
            let ratio = if total > 0.0 { m / total } else { 0.0 };
            (s, ratio * f64::from(modulus).powi(exponent as i32))
        })
        .collect())
}

/// `N^4 p^9 (N p^2)^(-⌈j/2⌉)`, the shape bounding `E_j(Λ̃^1)`.
pub fn dist2_shape(modulus: u32, p: f64, j: usize) -> f64 {
    let n = f64::from(modulus);
    n.powi(4) * p.powi(9) * (n * p * p).powi(-(j.div_ceil(2) as i32))
}

/// `E_j / shape_j` for each `j` of the profile.
pub fn dist2_ratios(poly: &ReducedBooleanPolynomial, modulus: u32, p: f64) -> Result<Vec<f64>> {
    Ok(poly
        .ej_profile(p)?
        .into_iter()
        .enumerate()
        .map(|(j, e)| e / dist2_shape(modulus, p, j))
        .collect())
}
