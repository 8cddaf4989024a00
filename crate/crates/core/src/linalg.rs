//! Sparse constraint systems over F_N and exact Gaussian elimination.
//!
//! A [`ConstraintSystem`] is a matrix whose kernel is a homomorphism space.
//! Rows are stored sparse and deduplicated; elimination uses dense rows and
//! modular inverses only, never floating point.

use indexmap::IndexSet;

use crate::error::Result;
use crate::zn::CyclicGroup;

/// A nonzero row as `(column, coefficient)` pairs sorted by column, with
/// coefficients in `(0, N)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SparseRow {
    entries: Vec<(usize, u32)>,
}

impl SparseRow {
    /// Merges repeated columns and drops zeros. The sign is normalized so
    /// the first coefficient lies in the lower half of `[1, N)`, which makes
    /// a row and its negation deduplicate. Returns `None` for a zero row.
    pub fn canonical<I>(group: CyclicGroup, terms: I) -> Option<Self>
    where
        I: IntoIterator<Item = (usize, i64)>,
    {
        let mut terms: Vec<(usize, i64)> = terms.into_iter().collect();
        terms.sort_unstable_by_key(|t| t.0);
        let mut entries: Vec<(usize, u32)> = Vec::with_capacity(terms.len());
        let mut i = 0;
        while i < terms.len() {
            let col = terms[i].0;
            let mut acc = 0i64;
            while i < terms.len() && terms[i].0 == col {
                acc += terms[i].1;
                i += 1;
            }
            let c = group.reduce(acc);
            if c != 0 {
                entries.push((col, c));
            }
        }
        let first = entries.first()?.1;
        if first > group.modulus() / 2 {
            for e in entries.iter_mut() {
                e.1 = group.neg(e.1);
            }
        }
        Some(Self { entries })
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Coefficients as signed representatives in `(-N/2, N/2]`.
    pub fn signed_coefficients(&self, group: CyclicGroup) -> Vec<i64> {
        let n = group.modulus() as i64;
        self.entries
            .iter()
            .map(|&(_, c)| {
                let c = c as i64;
                if c > n / 2 {
                    c - n
                } else {
                    c
                }
            })
            .collect()
    }

    /// Dot product with a dense vector.
    pub fn apply(&self, group: CyclicGroup, v: &[u32]) -> u32 {
        let n = group.modulus() as u64;
        let s = self
            .entries
            .iter()
            .fold(0u64, |acc, &(col, c)| (acc + c as u64 * v[col] as u64) % n);
        s as u32
    }
}

/// A matrix over F_N with labelled columns and deduplicated sparse rows.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    group: CyclicGroup,
    column_labels: Vec<u32>,
    rows: IndexSet<SparseRow>,
}

impl ConstraintSystem {
    pub fn new(group: CyclicGroup, column_labels: Vec<u32>) -> Self {
        Self {
            group,
            column_labels,
            rows: IndexSet::new(),
        }
    }

    /// Adds a row given as signed terms; zero rows and duplicates are
    /// dropped. Returns true if the row was new.
    pub fn push<I>(&mut self, terms: I) -> bool
    where
        I: IntoIterator<Item = (usize, i64)>,
    {
        match SparseRow::canonical(self.group, terms) {
            Some(row) => {
                debug_assert!(row.entries.iter().all(|e| e.0 < self.column_labels.len()));
                self.rows.insert(row)
            }
            None => false,
        }
    }

    pub fn group(&self) -> CyclicGroup {
        self.group
    }

    pub fn modulus(&self) -> u32 {
        self.group.modulus()
    }

    pub fn column_labels(&self) -> &[u32] {
        &self.column_labels
    }

    pub fn columns(&self) -> usize {
        self.column_labels.len()
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &SparseRow> {
        self.rows.iter()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// True when every row annihilates `v`.
    pub fn is_solution(&self, v: &[u32]) -> bool {
        v.len() == self.columns() && self.rows.iter().all(|r| r.apply(self.group, v) == 0)
    }

    pub fn echelon(&self) -> Echelon {
        self.echelon_with_limit(self.columns())
    }

    /// Stops as soon as `limit` independent rows were found.
    pub fn echelon_with_limit(&self, limit: usize) -> Echelon {
        let mut ech = Echelon::new(self.group, self.columns());
        for row in &self.rows {
            if ech.rank() >= limit {
                break;
            }
            ech.insert_sparse(row);
        }
        ech
    }

    pub fn rank(&self) -> usize {
        self.echelon().rank()
    }

    /// Kernel basis in reduced row echelon form.
    pub fn kernel_basis(&self) -> Vec<Vec<u32>> {
        let basis = self.echelon().kernel_basis();
        rref(self.group, basis)
    }
}

/// Incrementally built row echelon form. Pivot rows are normalized to a
/// leading one and are zero left of their pivot.
#[derive(Debug, Clone)]
pub struct Echelon {
    group: CyclicGroup,
    columns: usize,
    pivot_rows: Vec<Vec<u32>>,
    pivot_of_col: Vec<Option<usize>>,
}

impl Echelon {
    pub fn new(group: CyclicGroup, columns: usize) -> Self {
        Self {
            group,
            columns,
            pivot_rows: Vec::new(),
            pivot_of_col: vec![None; columns],
        }
    }

    pub fn rank(&self) -> usize {
        self.pivot_rows.len()
    }

    pub fn insert_sparse(&mut self, row: &SparseRow) -> bool {
        let mut v = vec![0u32; self.columns];
        for &(c, x) in row.entries() {
            v[c] = x;
        }
        self.insert(v)
    }

    /// Reduces `v` against the current pivots; keeps it if independent.
    pub fn insert(&mut self, mut v: Vec<u32>) -> bool {
        debug_assert_eq!(v.len(), self.columns);
        let n = self.group.modulus() as u64;
        for col in 0..self.columns {
            let x = v[col];
            if x == 0 {
                continue;
            }
            match self.pivot_of_col[col] {
                Some(r) => {
                    let factor = n - x as u64;
                    let prow = &self.pivot_rows[r];
                    for k in col..self.columns {
                        if prow[k] != 0 {
                            v[k] = ((v[k] as u64 + factor * prow[k] as u64) % n) as u32;
                        }
                    }
                }
                None => {
                    let inv = self.group.inv(x).expect("field modulus") as u64;
                    for entry in v[col..].iter_mut() {
                        *entry = ((*entry as u64 * inv) % n) as u32;
                    }
                    self.pivot_of_col[col] = Some(self.pivot_rows.len());
                    self.pivot_rows.push(v);
                    return true;
                }
            }
        }
        false
    }

    /// Fully reduced rows, ordered by pivot column.
    pub fn reduced_rows(&self) -> Vec<Vec<u32>> {
        let n = self.group.modulus() as u64;
        let mut order: Vec<(usize, usize)> = self
            .pivot_of_col
            .iter()
            .enumerate()
            .filter_map(|(c, r)| r.map(|r| (c, r)))
            .collect();
        order.sort_unstable();
        let mut rows: Vec<Vec<u32>> = order.iter().map(|&(_, r)| self.pivot_rows[r].clone()).collect();
        // back substitution, right to left
        for i in (0..rows.len()).rev() {
            let pc = order[i].0;
            let (upper, lower) = rows.split_at_mut(i);
            let pivot = &lower[0];
            for row in upper.iter_mut() {
                let x = row[pc];
                if x == 0 {
                    continue;
                }
                let factor = n - x as u64;
                for k in pc..self.columns {
                    if pivot[k] != 0 {
                        row[k] = ((row[k] as u64 + factor * pivot[k] as u64) % n) as u32;
                    }
                }
            }
        }
        rows
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        (0..self.columns)
            .filter(|&c| self.pivot_of_col[c].is_some())
            .collect()
    }

    /// One kernel vector per free column: 1 there, 0 at the other free
    /// columns.
    pub fn kernel_basis(&self) -> Vec<Vec<u32>> {
        let rref = self.reduced_rows();
        let pivots = self.pivot_columns();
        let free: Vec<usize> = (0..self.columns)
            .filter(|&c| self.pivot_of_col[c].is_none())
            .collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![0u32; self.columns];
                v[f] = 1;
                for (row, &pc) in rref.iter().zip(&pivots) {
                    v[pc] = self.group.neg(row[f]);
                }
                v
            })
            .collect()
    }
}

/// Reduced row echelon form of the span of `rows` (zero rows removed).
pub fn rref(group: CyclicGroup, rows: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
    let Some(cols) = rows.first().map(Vec::len) else {
        return Vec::new();
    };
    let mut ech = Echelon::new(group, cols);
    for r in rows {
        ech.insert(r);
    }
    ech.reduced_rows()
}

/// Rank of a dense matrix over F_N.
pub fn dense_rank(group: CyclicGroup, rows: &[Vec<u32>]) -> Result<usize> {
    group.require_prime()?;
    Ok(rref(group, rows.to_vec()).len())
}
