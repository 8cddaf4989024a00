//! The embedding polynomials Λ^i and their nondegenerate parts Λ̃^i.
//!
//! `Λ^0_{a,b,c} = Σ_x t_{x+a} t_{x+b} t_{x+c}` and
//! `Λ^{i+1}_{a,b,c} = Σ_z Λ^i_{a,b,z} Λ^i_{a,z,c} Λ^i_{z,b,c}`.
//! Λ^i is translation invariant, so a level is stored as an `N x N` table
//! indexed by `(b - a, c - a)`. Counts may reach `N^((3^(i+1) - 1) / 2)`
//! and are kept as big integers; positivity mode keeps one bit per entry.

use std::io::{Read, Write};

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::zn::{CyclicGroup, SubsetOfZn};

/// Highest level [`lambda_table`] will build.
pub const DEFAULT_LEVEL_CAP: usize = 3;

/// Largest `N^d` enumerated by [`lambda_tilde`].
pub const TILDE_ENUMERATION_BUDGET: u128 = 100_000_000;

const DUMP_MAGIC: &[u8; 4] = b"FLT1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LambdaMode {
    ExactCount,
    Positivity,
}

impl LambdaMode {
    fn code(self) -> u32 {
        match self {
            LambdaMode::Positivity => 0,
            LambdaMode::ExactCount => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LambdaEntries {
    Exact(Vec<BigUint>),
    Positivity(Vec<bool>),
}

/// One level of Λ, indexed by `(b - a, c - a)` in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaTable {
    level: usize,
    group: CyclicGroup,
    entries: LambdaEntries,
}

impl LambdaTable {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn group(&self) -> CyclicGroup {
        self.group
    }

    pub fn mode(&self) -> LambdaMode {
        match self.entries {
            LambdaEntries::Exact(_) => LambdaMode::ExactCount,
            LambdaEntries::Positivity(_) => LambdaMode::Positivity,
        }
    }

    pub fn entries(&self) -> &LambdaEntries {
        &self.entries
    }

    fn index(&self, a: u32, b: u32, c: u32) -> usize {
        let g = self.group;
        g.sub(b, a) as usize * g.modulus() as usize + g.sub(c, a) as usize
    }

    /// Exact value of `Λ^i_{a,b,c}`; `None` in positivity mode.
    pub fn count(&self, a: u32, b: u32, c: u32) -> Option<&BigUint> {
        match &self.entries {
            LambdaEntries::Exact(v) => Some(&v[self.index(a, b, c)]),
            LambdaEntries::Positivity(_) => None,
        }
    }

    pub fn is_positive(&self, a: u32, b: u32, c: u32) -> bool {
        let i = self.index(a, b, c);
        match &self.entries {
            LambdaEntries::Exact(v) => !v[i].is_zero(),
            LambdaEntries::Positivity(v) => v[i],
        }
    }

    /// Positivity over all triangles with distinct vertices.
    pub fn all_distinct_positive(&self) -> bool {
        let n = self.group.modulus();
        (1..n).all(|u| (1..n).filter(|&v| v != u).all(|v| self.is_positive(0, u, v)))
    }

    /// Binary dump: `FLT1`, then N, level and mode as little-endian `u32`
    /// (mode 0 = positivity, 1 = exact), then the `N * N` entries row-major.
    /// A positivity entry is one byte; an exact entry is a `u32` byte length
    /// followed by the little-endian magnitude.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&self.group.modulus().to_le_bytes())?;
        w.write_all(&(self.level as u32).to_le_bytes())?;
        w.write_all(&self.mode().code().to_le_bytes())?;
        match &self.entries {
            LambdaEntries::Positivity(v) => {
                let bytes: Vec<u8> = v.iter().map(|&b| u8::from(b)).collect();
                w.write_all(&bytes)?;
            }
            LambdaEntries::Exact(v) => {
                for x in v {
                    let bytes = if x.is_zero() { Vec::new() } else { x.to_bytes_le() };
                    w.write_all(&(bytes.len() as u32).to_le_bytes())?;
                    w.write_all(&bytes)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Parse("bad magic, expected FLT1".into()));
        }
        let mut word = || -> Result<u32> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        };
        let n = word()?;
        let level = word()? as usize;
        let mode = word()?;
        let group = CyclicGroup::new(n)?;
        let cells = n as usize * n as usize;
        let entries = match mode {
            0 => {
                let mut bytes = vec![0u8; cells];
                r.read_exact(&mut bytes)?;
                LambdaEntries::Positivity(bytes.into_iter().map(|b| b != 0).collect())
            }
            1 => {
                let mut v = Vec::with_capacity(cells);
                for _ in 0..cells {
                    let mut len = [0u8; 4];
                    r.read_exact(&mut len)?;
                    let mut bytes = vec![0u8; u32::from_le_bytes(len) as usize];
                    r.read_exact(&mut bytes)?;
                    v.push(BigUint::from_bytes_le(&bytes));
                }
                LambdaEntries::Exact(v)
            }
            m => return Err(Error::Parse(format!("unknown mode {m}"))),
        };
        Ok(Self {
            level,
            group,
            entries,
        })
    }

    /// `b_minus_a,c_minus_a,value` rows.
    pub fn to_csv(&self) -> String {
        let n = self.group.modulus() as usize;
        let mut out = String::from("b_minus_a,c_minus_a,value\n");
        for u in 0..n {
            for v in 0..n {
                let i = u * n + v;
                let value = match &self.entries {
                    LambdaEntries::Exact(e) => e[i].to_string(),
                    LambdaEntries::Positivity(e) => u8::from(e[i]).to_string(),
                };
                out.push_str(&format!("{u},{v},{value}\n"));
            }
        }
        out
    }
}

/// `#{x : x + a, x + b, x + c in A}`.
pub fn lambda0(set: &SubsetOfZn, a: u32, b: u32, c: u32) -> u64 {
    let g = set.group();
    g.elements()
        .filter(|&x| set.contains(g.add(x, a)) && set.contains(g.add(x, b)) && set.contains(g.add(x, c)))
        .count() as u64
}

trait Semiring: Clone + Send + Sync {
    fn zero() -> Self;
    fn from_count(c: u64) -> Self;
    fn add_product(&mut self, x: &Self, y: &Self, z: &Self);
}

impl Semiring for bool {
    fn zero() -> Self {
        false
    }
    fn from_count(c: u64) -> Self {
        c > 0
    }
    fn add_product(&mut self, x: &Self, y: &Self, z: &Self) {
        *self = *self || (*x && *y && *z);
    }
}

impl Semiring for BigUint {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_count(c: u64) -> Self {
        BigUint::from(c)
    }
    fn add_product(&mut self, x: &Self, y: &Self, z: &Self) {
        if !(x.is_zero() || y.is_zero() || z.is_zero()) {
            *self += x * y * z;
        }
    }
}

fn base_level<T: Semiring>(set: &SubsetOfZn) -> Vec<T> {
    let n = set.modulus() as usize;
    // counts[u * n + v] = #{x in A : x + u, x + v in A}
    let mut counts = vec![0u64; n * n];
    let g = set.group();
    for &x in set.members() {
        for &y in set.members() {
            let u = g.sub(y, x) as usize;
            for &z in set.members() {
                counts[u * n + g.sub(z, x) as usize] += 1;
            }
        }
    }
    counts.into_iter().map(T::from_count).collect()
}

fn next_level<T: Semiring>(group: CyclicGroup, prev: &[T]) -> Vec<T> {
    let n = group.modulus() as usize;
    let mut next = vec![T::zero(); n * n];
    next.par_chunks_mut(n).enumerate().for_each(|(u, row)| {
        for (v, cell) in row.iter_mut().enumerate() {
            let mut acc = T::zero();
            for z in 0..n {
                let uz = (u + n - z) % n;
                let vz = (v + n - z) % n;
                acc.add_product(&prev[u * n + z], &prev[z * n + v], &prev[uz * n + vz]);
            }
            *cell = acc;
        }
    });
    next
}

fn check_level(level: usize) -> Result<()> {
    if level > DEFAULT_LEVEL_CAP {
        return Err(Error::LevelCapExceeded {
            level,
            cap: DEFAULT_LEVEL_CAP,
        });
    }
    Ok(())
}

/// Tables for levels `0..=level`, built bottom-up.
pub fn lambda_levels(set: &SubsetOfZn, level: usize, mode: LambdaMode) -> Result<Vec<LambdaTable>> {
    check_level(level)?;
    let group = set.group();
    let wrap = |lvl: usize, entries: LambdaEntries| LambdaTable {
        level: lvl,
        group,
        entries,
    };
    let mut out = Vec::with_capacity(level + 1);
    match mode {
        LambdaMode::Positivity => {
            let mut cur: Vec<bool> = base_level(set);
            for lvl in 0..=level {
                if lvl > 0 {
                    cur = next_level(group, &cur);
                }
                out.push(wrap(lvl, LambdaEntries::Positivity(cur.clone())));
            }
        }
        LambdaMode::ExactCount => {
            let mut cur: Vec<BigUint> = base_level(set);
            for lvl in 0..=level {
                if lvl > 0 {
                    cur = next_level(group, &cur);
                }
                out.push(wrap(lvl, LambdaEntries::Exact(cur.clone())));
            }
        }
    }
    Ok(out)
}

pub fn lambda_table(set: &SubsetOfZn, level: usize, mode: LambdaMode) -> Result<LambdaTable> {
    Ok(lambda_levels(set, level, mode)?.pop().expect("level 0 always present"))
}

/// `Λ^i_{a,b,c} > 0` for every triple of distinct `a, b, c`.
pub fn all_triangles_positive(set: &SubsetOfZn, level: usize) -> Result<bool> {
    Ok(lambda_table(set, level, LambdaMode::Positivity)?.all_distinct_positive())
}

/// Smallest level `<= max_level` at which every distinct triangle is
/// positive. Levels are checked independently.
pub fn min_level_all_positive(set: &SubsetOfZn, max_level: usize) -> Result<Option<usize>> {
    let levels = lambda_levels(set, max_level, LambdaMode::Positivity)?;
    Ok(levels
        .iter()
        .position(LambdaTable::all_distinct_positive))
}

/// A symbol of `(a, b, c, v_1, ..., v_d)`: indices 0..3 are the parameters,
/// `3 + k` is the free variable `v_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(pub usize);

impl Symbol {
    pub const A: Symbol = Symbol(0);
    pub const B: Symbol = Symbol(1);
    pub const C: Symbol = Symbol(2);

    pub fn var(k: usize) -> Symbol {
        Symbol(3 + k)
    }

    pub fn is_free(self) -> bool {
        self.0 >= 3
    }
}

/// The linear form `x + y` with `y` a free variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinearForm {
    pub x: Symbol,
    pub y: Symbol,
}

impl LinearForm {
    fn key(&self) -> (Symbol, Symbol) {
        (self.x.min(self.y), self.x.max(self.y))
    }
}

/// The `3^(i+1)` coordinates of ψ^i as symbolic forms over `d + 3` symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearFormSet {
    level: usize,
    dimension: usize,
    forms: Vec<LinearForm>,
}

impl LinearFormSet {
    pub fn level(&self) -> usize {
        self.level
    }

    /// Number of free variables `d`, with `2d + 1 = 3^(i+1)`.
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn forms(&self) -> &[LinearForm] {
        &self.forms
    }

    /// Each form is `x + y` with `y` free and `x != y`, and no two forms
    /// coincide.
    pub fn check(&self) -> bool {
        let shape = self
            .forms
            .iter()
            .all(|f| f.y.is_free() && f.x != f.y && f.x.0 < self.dimension + 3 && f.y.0 < self.dimension + 3);
        let mut keys: Vec<_> = self.forms.iter().map(LinearForm::key).collect();
        keys.sort_unstable();
        keys.dedup();
        shape && keys.len() == self.forms.len() && 2 * self.dimension + 1 == self.forms.len()
    }

    /// Symbol values `(a, b, c, v_1, .., v_d)`.
    pub fn symbol_values(params: (u32, u32, u32), v: &[u32]) -> Vec<u32> {
        let mut vals = Vec::with_capacity(v.len() + 3);
        vals.extend([params.0, params.1, params.2]);
        vals.extend_from_slice(v);
        vals
    }

    /// `ψ^i_{a,b,c}(v)`.
    pub fn evaluate(&self, group: CyclicGroup, params: (u32, u32, u32), v: &[u32]) -> Vec<u32> {
        let vals = Self::symbol_values(params, v);
        self.evaluate_symbols(group, &vals)
    }

    fn evaluate_symbols(&self, group: CyclicGroup, vals: &[u32]) -> Vec<u32> {
        self.forms
            .iter()
            .map(|f| group.add(vals[f.x.0], vals[f.y.0]))
            .collect()
    }
}

/// Builds ψ^i by substituting `(a, b, z)`, `(a, z, c)`, `(z, b, c)` into
/// three copies of ψ^{i-1} with fresh variable blocks; `z` is the last
/// variable.
pub fn psi_forms(level: usize) -> Result<LinearFormSet> {
    check_level(level)?;
    let mut set = LinearFormSet {
        level: 0,
        dimension: 1,
        forms: vec![
            LinearForm { x: Symbol::A, y: Symbol::var(0) },
            LinearForm { x: Symbol::B, y: Symbol::var(0) },
            LinearForm { x: Symbol::C, y: Symbol::var(0) },
        ],
    };
    for lvl in 1..=level {
        let d = set.dimension;
        let z = Symbol::var(3 * d);
        let mut forms = Vec::with_capacity(3 * set.forms.len());
        for (copy, params) in [
            [Symbol::A, Symbol::B, z],
            [Symbol::A, z, Symbol::C],
            [z, Symbol::B, Symbol::C],
        ]
        .into_iter()
        .enumerate()
        {
            let map = |s: Symbol| {
                if s.is_free() {
                    Symbol::var(copy * d + (s.0 - 3))
                } else {
                    params[s.0]
                }
            };
            forms.extend(set.forms.iter().map(|f| LinearForm {
                x: map(f.x),
                y: map(f.y),
            }));
        }
        set = LinearFormSet {
            level: lvl,
            dimension: 3 * d + 1,
            forms,
        };
    }
    Ok(set)
}

/// Which d-tuples are excluded from Λ̃.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Degeneracy {
    /// Some nonzero formal combination `Σ ε_j y_j` of at most four symbols
    /// (repeats allowed, `ε_j` in {-1, 0, 1}) vanishes mod N. Parameter-only
    /// relations make every tuple degenerate. At level 1 no tuple survives
    /// for `N < 113`.
    ShortRelation,
    /// Two of the `2d + 1` forms take the same value, i.e. a relation
    /// `L_j = L_j'` holds.
    #[default]
    FormCollision,
}

/// Signed combinations of at most two symbols, each formal vector once:
/// `0`, `±s`, `±2s`, `±s ± t`.
fn short_combinations(vals: &[u32], group: CyclicGroup) -> Vec<u32> {
    let mut out = Vec::with_capacity(1 + 4 * vals.len() + 2 * vals.len() * vals.len());
    out.push(0);
    for (i, &s) in vals.iter().enumerate() {
        out.push(s);
        out.push(group.neg(s));
        let twice = group.add(s, s);
        out.push(twice);
        out.push(group.neg(twice));
        for &t in &vals[i + 1..] {
            let p = group.add(s, t);
            let m = group.sub(s, t);
            out.extend([p, group.neg(p), m, group.neg(m)]);
        }
    }
    out
}

fn has_short_relation(group: CyclicGroup, vals: &[u32]) -> bool {
    // a nonzero combination of L1 norm <= 4 vanishes iff two distinct
    // combinations of norm <= 2 agree
    let n = vals.len();
    if (group.modulus() as usize) < 2 * n * n + 2 * n + 1 {
        return true;
    }
    let mut combos = short_combinations(vals, group);
    combos.sort_unstable();
    combos.windows(2).any(|w| w[0] == w[1])
}

fn has_form_collision(forms: &LinearFormSet, group: CyclicGroup, vals: &[u32]) -> bool {
    let mut out = forms.evaluate_symbols(group, vals);
    out.sort_unstable();
    out.windows(2).any(|w| w[0] == w[1])
}

/// Literal short-relation degeneracy of `v` for parameters `(a, b, c)`.
pub fn is_degenerate_tuple(group: CyclicGroup, level: usize, params: (u32, u32, u32), v: &[u32]) -> Result<bool> {
    let forms = psi_forms(level)?;
    if v.len() != forms.dimension() {
        return Err(Error::Parse(format!(
            "tuple of length {} at level {level}, expected {}",
            v.len(),
            forms.dimension()
        )));
    }
    Ok(has_short_relation(group, &LinearFormSet::symbol_values(params, v)))
}

/// Whether parameters alone already satisfy a short relation, which makes
/// every tuple degenerate under [`Degeneracy::ShortRelation`].
pub fn params_degenerate(group: CyclicGroup, params: (u32, u32, u32)) -> bool {
    has_short_relation(group, &[params.0, params.1, params.2])
}

/// Degeneracy test for a full symbol-value vector.
pub fn tuple_is_degenerate(rule: Degeneracy, forms: &LinearFormSet, group: CyclicGroup, vals: &[u32]) -> bool {
    match rule {
        Degeneracy::ShortRelation => has_short_relation(group, vals),
        Degeneracy::FormCollision => has_form_collision(forms, group, vals),
    }
}

fn tilde_budget(group: CyclicGroup, d: usize) -> Result<()> {
    let size = (group.modulus() as u128)
        .checked_pow(d as u32)
        .unwrap_or(u128::MAX);
    if size > TILDE_ENUMERATION_BUDGET {
        return Err(Error::TooLarge {
            what: "N^d tuple enumeration",
            size,
            limit: TILDE_ENUMERATION_BUDGET,
        });
    }
    Ok(())
}

/// Calls `visit` with the symbol values of every tuple in `Z_N^d`, split by
/// the first coordinate across threads; results are summed.
fn fold_tuples<F>(group: CyclicGroup, params: (u32, u32, u32), d: usize, visit: F) -> u64
where
    F: Fn(&[u32]) -> u64 + Sync,
{
    let n = group.modulus();
    (0..n)
        .into_par_iter()
        .map(|first| {
            let mut vals = LinearFormSet::symbol_values(params, &vec![0; d]);
            vals[3] = first;
            let mut total = 0u64;
            loop {
                total += visit(&vals);
                // odometer over coordinates 2..=d
                let mut k = 4;
                loop {
                    if k >= vals.len() {
                        return total;
                    }
                    vals[k] += 1;
                    if vals[k] < n {
                        break;
                    }
                    vals[k] = 0;
                    k += 1;
                }
            }
        })
        .sum()
}

/// `Λ̃^i_{a,b,c}`: over nondegenerate `v`, the number of tuples whose
/// `2d + 1` form values all lie in A.
pub fn lambda_tilde(
    set: &SubsetOfZn,
    level: usize,
    params: (u32, u32, u32),
    rule: Degeneracy,
) -> Result<u64> {
    let group = set.group();
    let forms = psi_forms(level)?;
    tilde_budget(group, forms.dimension())?;
    Ok(fold_tuples(group, params, forms.dimension(), |vals| {
        if tuple_is_degenerate(rule, &forms, group, vals) {
            return 0;
        }
        let out = forms.evaluate_symbols(group, vals);
        debug_assert!(!has_form_collision(&forms, group, vals));
        u64::from(out.iter().all(|&x| set.contains(x)))
    }))
}

/// Number of degenerate tuples in `Z_N^d` for the given parameters.
pub fn degenerate_count(
    group: CyclicGroup,
    level: usize,
    params: (u32, u32, u32),
    rule: Degeneracy,
) -> Result<u64> {
    let forms = psi_forms(level)?;
    tilde_budget(group, forms.dimension())?;
    Ok(fold_tuples(group, params, forms.dimension(), |vals| {
        u64::from(tuple_is_degenerate(rule, &forms, group, vals))
    }))
}

/// `Σ_{v ∈ Z_N^d} Π 1_A(L_j(v))` straight from the forms: the closed form
/// of `Λ^i_{a,b,c}`.
pub fn lambda_by_forms(set: &SubsetOfZn, level: usize, params: (u32, u32, u32)) -> Result<BigUint> {
    let group = set.group();
    let forms = psi_forms(level)?;
    tilde_budget(group, forms.dimension())?;
    let count = fold_tuples(group, params, forms.dimension(), |vals| {
        u64::from(forms.forms.iter().all(|f| set.contains(group.add(vals[f.x.0], vals[f.y.0]))))
    });
    Ok(BigUint::from(count))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: u32, m: &[u32]) -> SubsetOfZn {
        SubsetOfZn::new(CyclicGroup::new(n).unwrap(), m.iter().copied()).unwrap()
    }

    fn full(n: u32) -> SubsetOfZn {
        SubsetOfZn::full(CyclicGroup::new(n).unwrap())
    }

    #[test]
    fn lambda0_examples() {
        assert_eq!(lambda0(&set(5, &[0, 1, 2, 3]), 0, 1, 2), 2);
        assert_eq!(lambda0(&full(9), 1, 4, 4), 9);
        assert_eq!(lambda0(&set(5, &[]), 0, 1, 2), 0);
    }

    #[test]
    fn full_set_level_one_is_n_to_the_fourth() {
        let t = lambda_table(&full(7), 1, LambdaMode::ExactCount).unwrap();
        let LambdaEntries::Exact(v) = t.entries() else { panic!() };
        assert!(v.iter().all(|x| *x == BigUint::from(2401u32)));
    }

    #[test]
    fn level_zero_matches_lambda0() {
        let a = set(11, &[0, 1, 3, 4, 9]);
        let t = lambda_table(&a, 0, LambdaMode::ExactCount).unwrap();
        for b in 0..11 {
            for c in 0..11 {
                assert_eq!(t.count(2, b, c).unwrap(), &BigUint::from(lambda0(&a, 2, b, c)));
            }
        }
    }

    #[test]
    fn level_cap() {
        assert_eq!(
            lambda_table(&full(5), 4, LambdaMode::Positivity).unwrap_err(),
            Error::LevelCapExceeded { level: 4, cap: 3 }
        );
        assert!(matches!(psi_forms(4), Err(Error::LevelCapExceeded { .. })));
    }

    #[test]
    fn positivity_examples() {
        assert!(all_triangles_positive(&full(7), 0).unwrap());
        assert!(!all_triangles_positive(&set(7, &[]), 1).unwrap());
        assert_eq!(min_level_all_positive(&full(7), 2).unwrap(), Some(0));
        assert_eq!(min_level_all_positive(&set(7, &[]), 2).unwrap(), None);
    }

    #[test]
    fn psi_forms_examples() {
        let f0 = psi_forms(0).unwrap();
        assert_eq!(f0.dimension(), 1);
        assert_eq!(f0.forms().len(), 3);
        let f1 = psi_forms(1).unwrap();
        assert_eq!(f1.dimension(), 4);
        let (x1, x2, x3, z) = (Symbol::var(0), Symbol::var(1), Symbol::var(2), Symbol::var(3));
        let expected = [
            (x1, Symbol::A),
            (x1, Symbol::B),
            (x1, z),
            (x2, Symbol::A),
            (x2, z),
            (x2, Symbol::C),
            (x3, z),
            (x3, Symbol::B),
            (x3, Symbol::C),
        ];
        let got: Vec<_> = f1.forms().iter().map(|f| f.key()).collect();
        let want: Vec<_> = expected
            .iter()
            .map(|&(p, q)| (p.min(q), p.max(q)))
            .collect();
        assert_eq!(got, want);
        let f2 = psi_forms(2).unwrap();
        assert_eq!((f2.dimension(), f2.forms().len()), (13, 27));
        for f in [&f0, &f1, &f2] {
            assert!(f.check());
        }
    }

    #[test]
    fn degeneracy_examples() {
        let g = CyclicGroup::new(1009).unwrap();
        let params = (5, 17, 211);
        assert!(!params_degenerate(g, params));
        assert!(is_degenerate_tuple(g, 1, params, &[40, 40, 40, 77]).unwrap());
        // a + b - 2c = 0
        let rel = (10, 30, 20);
        for v in [[1u32, 2, 3, 4], [100, 533, 871, 402]] {
            assert!(is_degenerate_tuple(g, 1, rel, &v).unwrap());
        }
        // below 113 every level-1 tuple is degenerate
        let small = CyclicGroup::new(109).unwrap();
        assert!(is_degenerate_tuple(small, 1, (1, 2, 4), &[10, 30, 50, 70]).unwrap());
        assert!(is_degenerate_tuple(g, 1, params, &[1, 2, 3]).is_err());
    }

    #[test]
    fn full_set_tilde_counts_nondegenerate() {
        let a = full(11);
        let g = a.group();
        let params = (0, 1, 3);
        for rule in [Degeneracy::FormCollision, Degeneracy::ShortRelation] {
            let deg = degenerate_count(g, 1, params, rule).unwrap();
            assert_eq!(lambda_tilde(&a, 1, params, rule).unwrap(), 11u64.pow(4) - deg);
        }
        assert_eq!(
            lambda_tilde(&a, 1, params, Degeneracy::ShortRelation).unwrap(),
            0
        );
    }

    #[test]
    fn tilde_budget_enforced() {
        let a = full(5);
        assert!(matches!(
            lambda_tilde(&a, 2, (0, 1, 2), Degeneracy::FormCollision),
            Err(Error::TooLarge { .. })
        ));
        assert!(lambda_tilde(&full(3), 2, (0, 1, 2), Degeneracy::FormCollision).is_ok());
    }

    #[test]
    fn dump_round_trip() {
        let a = set(7, &[0, 1, 3, 5]);
        for mode in [LambdaMode::ExactCount, LambdaMode::Positivity] {
            let t = lambda_table(&a, 2, mode).unwrap();
            let mut buf = Vec::new();
            t.write_dump(&mut buf).unwrap();
            assert_eq!(&buf[..4], b"FLT1");
            assert_eq!(&buf[4..8], &7u32.to_le_bytes());
            assert_eq!(LambdaTable::read_dump(&buf[..]).unwrap(), t);
        }
        assert!(LambdaTable::read_dump(&b"FLT0\0\0\0\0"[..]).is_err());
    }

    fn seeded(n: u32, p: f64, seed: u64, trial: u64) -> SubsetOfZn {
        let g = CyclicGroup::new(n).unwrap();
        crate::zn::sample_subset(g, crate::zn::RandomModel::new(p, seed).unwrap(), trial)
    }

    #[test]
    fn recursion_matches_brute_force() {
        let mut sets = vec![set(7, &[0, 1, 2, 3])];
        sets.extend((0..2).map(|t| seeded(7, 0.6, 3, t)));
        for a in &sets {
            let t = lambda_table(a, 1, LambdaMode::ExactCount).unwrap();
            for b in 0..7 {
                for c in 0..7 {
                    let params = (0, b, c);
                    assert_eq!(t.count(0, b, c).unwrap(), &lambda_by_forms(a, 1, params).unwrap());
                }
            }
        }
        // level 2 from the 27 forms, N = 3
        for mask in 1u32..8 {
            let a = SubsetOfZn::new(CyclicGroup::new(3).unwrap(), (0..3).filter(|i| mask >> i & 1 == 1)).unwrap();
            let t = lambda_table(&a, 2, LambdaMode::ExactCount).unwrap();
            for (b, c) in [(1, 2), (2, 1), (0, 0)] {
                assert_eq!(t.count(0, b, c).unwrap(), &lambda_by_forms(&a, 2, (0, b, c)).unwrap());
            }
        }
    }

    #[test]
    fn positivity_mode_matches_counts() {
        for trial in 0..50 {
            let a = seeded(11, 0.4, 17, trial);
            let exact = lambda_levels(&a, 2, LambdaMode::ExactCount).unwrap();
            let pos = lambda_levels(&a, 2, LambdaMode::Positivity).unwrap();
            for (e, p) in exact.iter().zip(&pos) {
                for b in 0..11 {
                    for c in 0..11 {
                        assert_eq!(e.is_positive(0, b, c), p.is_positive(0, b, c));
                    }
                }
            }
            // level 1 positive iff some z makes all three level-0 counts positive
            let t1 = &pos[1];
            for b in 0..11 {
                for c in 0..11 {
                    let witness = (0..11).any(|z| {
                        lambda0(&a, 0, b, z) > 0 && lambda0(&a, 0, z, c) > 0 && lambda0(&a, z, b, c) > 0
                    });
                    assert_eq!(t1.is_positive(0, b, c), witness);
                }
            }
        }
    }

    #[test]
    fn search_finds_level_one_instance() {
        let found = (0..2000).find_map(|trial| {
            let a = seeded(11, 0.45, 99, trial);
            (min_level_all_positive(&a, 2).unwrap() == Some(1)).then_some(a)
        });
        let a = found.expect("some subset of Z_11 needs exactly one subdivision");
        assert!(!all_triangles_positive(&a, 0).unwrap());
        assert!(all_triangles_positive(&a, 1).unwrap());
    }

    #[test]
    fn positivity_implies_linear_pairs() {
        let mut positive = 0;
        for trial in 0..40 {
            let a = seeded(101, 0.3, 5, trial);
            if all_triangles_positive(&a, 1).unwrap() {
                positive += 1;
                assert!(crate::pair_complex::is_linear_via_pairs(&a).unwrap());
            }
        }
        assert!(positive > 0);
    }

    /// All formal combinations `Σ ε_j y_j` with at most four terms.
    fn brute_force_short_relation(g: CyclicGroup, vals: &[u32]) -> bool {
        let n = vals.len();
        let mut choices: Vec<(usize, i64)> = vec![(usize::MAX, 0)];
        for i in 0..n {
            choices.push((i, 1));
            choices.push((i, -1));
        }
        for p in &choices {
            for q in &choices {
                for r in &choices {
                    for s in &choices {
                        let mut formal = vec![0i64; n];
                        let mut value = 0i64;
                        for &(i, e) in [p, q, r, s] {
                            if e != 0 {
                                formal[i] += e;
                                value += e * vals[i] as i64;
                            }
                        }
                        if formal.iter().any(|&x| x != 0) && g.reduce(value) == 0 {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }

    #[test]
    fn degeneracy_matches_brute_force() {
        use rand::Rng;
        let n = 100_003u32;
        let g = CyclicGroup::new(n).unwrap();
        let mut rng = crate::zn::trial_rng(8, 0);
        let mut seen = [0usize; 2];
        for k in 0..150 {
            let params = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            let mut v: Vec<u32> = (0..4).map(|_| rng.gen_range(0..n)).collect();
            if k % 3 == 0 {
                // plant a relation v_1 + v_2 = b + v_3
                v[0] = g.sub(g.add(params.1, v[2]), v[1]);
            }
            let got = is_degenerate_tuple(g, 1, params, &v).unwrap();
            let vals = LinearFormSet::symbol_values(params, &v);
            assert_eq!(got, brute_force_short_relation(g, &vals));
            seen[usize::from(got)] += 1;
        }
        assert!(seen[0] > 0 && seen[1] > 0);
    }

    #[test]
    fn tilde_bounded_by_lambda() {
        let params = (0, 1, 3);
        for trial in 0..20 {
            let a = seeded(13, 0.6, 21, trial);
            let full = lambda_table(&a, 1, LambdaMode::ExactCount).unwrap();
            let tilde = lambda_tilde(&a, 1, params, Degeneracy::FormCollision).unwrap();
            assert!(BigUint::from(tilde) <= *full.count(0, 1, 3).unwrap());
        }
    }

    #[test]
    fn degenerate_count_is_cubic() {
        let mut ratios = Vec::new();
        for n in [11u32, 17, 23, 31] {
            let g = CyclicGroup::new(n).unwrap();
            let deg = degenerate_count(g, 1, (0, 1, 3), Degeneracy::FormCollision).unwrap();
            ratios.push(deg as f64 / f64::from(n).powi(3));
        }
        // collisions are 36 hyperplanes minus overlaps, so the ratio stays below 36
        assert!(ratios.iter().all(|&r| r > 1.0 && r < 36.0), "{ratios:?}");
    }

    #[test]
    fn psi_injective_on_nondegenerate_samples() {
        use rand::Rng;
        let g = CyclicGroup::new(1009).unwrap();
        for level in [1usize, 2] {
            let forms = psi_forms(level).unwrap();
            let d = forms.dimension();
            let mut rng = crate::zn::trial_rng(level as u64, 7);
            let mut seen = std::collections::HashMap::new();
            let params = (3, 500, 17);
            let mut kept = 0;
            while kept < 2000 {
                let v: Vec<u32> = (0..d).map(|_| rng.gen_range(0..1009)).collect();
                let vals = LinearFormSet::symbol_values(params, &v);
                if tuple_is_degenerate(Degeneracy::FormCollision, &forms, g, &vals) {
                    continue;
                }
                kept += 1;
                let out = forms.evaluate(g, params, &v);
                if let Some(prev) = seen.insert(out, v.clone()) {
                    assert_eq!(prev, v);
                }
            }
        }
    }

    #[test]
    fn csv_has_one_row_per_pair() {
        let t = lambda_table(&set(5, &[0, 1]), 0, LambdaMode::ExactCount).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 26);
        assert!(csv.contains("\n1,0,1\n"));
    }
}
