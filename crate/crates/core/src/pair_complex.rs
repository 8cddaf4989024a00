//! Additive pairs, induced functions and the homological linearity test.
//!
//! Functions `phi: Z_N -> Z_N` with `phi(0) = 0` are vectors indexed by the
//! labels `1..N`; column `d - 1` holds `phi(d)`. The cell complex is never
//! built: a constraint row per additive pair (or per 2-cell boundary) is
//! enough, and trivial first homology is the same as the row rank reaching
//! `N - 2`.

use crate::error::{Error, Result};
use crate::hom_space::FreimanHom;
use crate::linalg::ConstraintSystem;
use crate::zn::{difference_set, SubsetOfZn};

/// `d -> phi(d)` on `A - A`, with `phi(0) = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedFunction {
    values: Vec<Option<u32>>,
}

impl InducedFunction {
    pub fn get(&self, d: u32) -> Option<u32> {
        self.values.get(d as usize).copied().flatten()
    }

    /// The table as a kernel-style vector `(phi(1), ..., phi(N-1))`;
    /// `None` if some difference is undefined.
    pub fn to_vector(&self) -> Option<Vec<u32>> {
        self.values[1..].iter().copied().collect()
    }
}

/// `(d1, d2)` is additive when some `x, x + d1, x + d1 + d2` all lie in A
/// (the three points may repeat).
pub fn is_additive_pair(a: &SubsetOfZn, d1: u32, d2: u32) -> bool {
    let g = a.group();
    let (d1, d2) = (d1 % g.modulus(), d2 % g.modulus());
    a.members().iter().any(|&x| {
        let y = g.add(x, d1);
        a.contains(y) && a.contains(g.add(y, d2))
    })
}

fn labels(a: &SubsetOfZn) -> Vec<u32> {
    (1..a.modulus()).collect()
}

#[inline]
fn col(d: u32) -> usize {
    d as usize - 1
}

/// Rows `phi(d1) + phi(d2) - phi(d1 + d2)` for every additive pair with
/// `d1, d2 != 0`; a label-0 term is dropped. Pairs come from triples
/// `(u, v, w)` in `A^3` as `(v - u, w - v)`.
pub fn build_pair_constraints(a: &SubsetOfZn) -> Result<ConstraintSystem> {
    let g = a.group();
    g.require_prime()?;
    let mut cs = ConstraintSystem::new(g, labels(a));
    let m = a.members();
    for &u in m {
        for &v in m {
            let d1 = g.sub(v, u);
            if d1 == 0 {
                continue;
            }
            for &w in m {
                let d2 = g.sub(w, v);
                if d2 == 0 {
                    continue;
                }
                let s = g.add(d1, d2);
                let mut terms = vec![(col(d1), 1i64), (col(d2), 1)];
                if s != 0 {
                    terms.push((col(s), -1));
                }
                cs.push(terms);
            }
        }
    }
    Ok(cs)
}

fn require_full_differences(a: &SubsetOfZn) -> Result<()> {
    a.group().require_prime()?;
    if difference_set(a).len() != a.modulus() as usize {
        return Err(Error::DifferenceSetIncomplete);
    }
    Ok(())
}

/// Dimension of the space of functions respecting every additive pair:
/// `(N - 1) - rank`.
pub fn induced_space_dimension(a: &SubsetOfZn) -> Result<usize> {
    require_full_differences(a)?;
    let cs = build_pair_constraints(a)?;
    // linear phi always survive, so the rank is at most N - 2
    let rank = cs.echelon_with_limit(cs.columns() - 1).rank();
    Ok(cs.columns() - rank)
}

/// Linearity via the pair system: the induced space is one-dimensional.
pub fn is_linear_via_pairs(a: &SubsetOfZn) -> Result<bool> {
    require_full_differences(a)?;
    if a.len() < 3 {
        return Err(Error::DegenerateSet {
            size: a.len(),
            required: 3,
        });
    }
    Ok(induced_space_dimension(a)? == 1)
}

/// Kernel basis of the pair system, as vectors `(phi(1), .., phi(N-1))`.
pub fn induced_space_basis(a: &SubsetOfZn) -> Result<Vec<Vec<u32>>> {
    require_full_differences(a)?;
    Ok(build_pair_constraints(a)?.kernel_basis())
}

/// `phi_f(d) = f(x + d) - f(x)` for any witness `x, x + d` in A.
///
/// Every witness is checked; disagreement means f is not a Freiman
/// homomorphism. Well-definedness is checked before completeness of `A - A`.
pub fn induced_function(a: &SubsetOfZn, f: &FreimanHom) -> Result<InducedFunction> {
    let g = a.group();
    let mut values: Vec<Option<u32>> = vec![None; a.modulus() as usize];
    for &x in a.members() {
        for &y in a.members() {
            let d = g.sub(y, x);
            let fx = f.value(x).ok_or(Error::NotInKernel)?;
            let fy = f.value(y).ok_or(Error::NotInKernel)?;
            let phi = g.sub(fy, fx);
            match values[d as usize] {
                None => values[d as usize] = Some(phi),
                Some(prev) if prev != phi => return Err(Error::NotWellDefined { d }),
                Some(_) => {}
            }
        }
    }
    if values.iter().any(Option::is_none) {
        return Err(Error::DifferenceSetIncomplete);
    }
    Ok(InducedFunction { values })
}

/// Lifts a kernel vector `phi` to the homomorphism `f(x) = phi(x - a0)`,
/// `a0 = min A` (the translate of A containing 0).
pub fn extend_pair_solution_to_hom(a: &SubsetOfZn, phi: &[u32]) -> Result<FreimanHom> {
    require_full_differences(a)?;
    let n = a.modulus();
    if phi.len() != n as usize - 1 || phi.iter().any(|&v| v >= n) {
        return Err(Error::NotInKernel);
    }
    let cs = build_pair_constraints(a)?;
    if !cs.is_solution(phi) {
        return Err(Error::NotInKernel);
    }
    let g = a.group();
    let a0 = a.members()[0];
    let f = FreimanHom::verified(a.clone(), |x| {
        let d = g.sub(x, a0);
        if d == 0 {
            0
        } else {
            phi[col(d)]
        }
    })?;
    Ok(f)
}

/// The 2-cell boundary system: `e_d1 + e_d2 + e_d3` for every triangle
/// `x, x + d1, x + d1 + d2` of three distinct points of A (`d3 = -d1 - d2`),
/// plus reversal rows `e_d + e_{-d}`.
pub fn build_triangle_constraints(a: &SubsetOfZn) -> Result<ConstraintSystem> {
    let g = a.group();
    g.require_prime()?;
    let mut cs = ConstraintSystem::new(g, labels(a));
    let m = a.members();
    for &u in m {
        for &v in m {
            if v == u {
                continue;
            }
            for &w in m {
                if w == u || w == v {
                    continue;
                }
                let (d1, d2, d3) = (g.sub(v, u), g.sub(w, v), g.sub(u, w));
                cs.push([(col(d1), 1), (col(d2), 1), (col(d3), 1)]);
            }
        }
    }
    for d in 1..a.modulus() {
        cs.push([(col(d), 1), (col(g.neg(d)), 1)]);
    }
    Ok(cs)
}

/// Rank of [`build_triangle_constraints`]; equals `N - 2` exactly when the
/// first homology is trivial.
pub fn triangle_generator_rank(a: &SubsetOfZn) -> Result<usize> {
    require_full_differences(a)?;
    let cs = build_triangle_constraints(a)?;
    Ok(cs.echelon_with_limit(cs.columns() - 1).rank())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hom_space::{indicator_hom_from_isolated, is_linear};
    use crate::zn::CyclicGroup;

    fn set(n: u32, m: &[u32]) -> SubsetOfZn {
        SubsetOfZn::new(CyclicGroup::new(n).unwrap(), m.iter().copied()).unwrap()
    }

    fn full(n: u32) -> SubsetOfZn {
        SubsetOfZn::full(CyclicGroup::new(n).unwrap())
    }

    #[test]
    fn additive_pair_examples() {
        assert!(is_additive_pair(&full(7), 2, 3));
        assert!(!is_additive_pair(&set(7, &[0, 1]), 1, 1));
        assert!(is_additive_pair(&set(7, &[0, 1]), 1, 6));
    }

    #[test]
    fn pair_constraint_examples() {
        let cs = build_pair_constraints(&full(7)).unwrap();
        assert_eq!(cs.rank(), 5);
        for r in cs.rows() {
            assert!(r.len() <= 3);
            let co = r.signed_coefficients(cs.group());
            assert!(co.iter().all(|c| [1, -1, 2, -2].contains(c)));
        }
        // {0, 1}: only (1, 6) and (6, 1), both giving phi(1) + phi(6) = 0
        let cs = build_pair_constraints(&set(7, &[0, 1])).unwrap();
        assert_eq!(cs.row_count(), 1);
        assert_eq!(cs.rows().next().unwrap().entries(), &[(0, 1), (5, 1)]);
        assert!(build_pair_constraints(&set(7, &[])).unwrap().is_empty());
        assert_eq!(
            build_pair_constraints(&set(9, &[0])).unwrap_err(),
            Error::NonPrimeModulus(9)
        );
    }

    #[test]
    fn induced_dimension_examples() {
        assert_eq!(induced_space_dimension(&full(7)).unwrap(), 1);
        assert_eq!(induced_space_dimension(&set(7, &[0, 1, 3])).unwrap(), 2);
        assert_eq!(induced_space_dimension(&set(7, &[0, 1, 2, 3])).unwrap(), 1);
        assert!(is_linear(&set(7, &[0, 1, 2, 3])).unwrap());
        assert_eq!(
            induced_space_dimension(&set(13, &[0, 1, 4])),
            Err(Error::DifferenceSetIncomplete)
        );
    }

    #[test]
    fn linear_via_pairs_examples() {
        // a 5-term AP only has 9 differences, 6 terms is the shortest covering Z_11
        let ap5 = SubsetOfZn::arithmetic_progression(CyclicGroup::new(11).unwrap(), 0, 1, 5);
        assert!(!ap5.has_full_difference_set());
        let ap = SubsetOfZn::arithmetic_progression(CyclicGroup::new(11).unwrap(), 0, 1, 6);
        assert!(ap.has_full_difference_set());
        assert!(is_linear_via_pairs(&ap).unwrap());
        assert!(!is_linear_via_pairs(&set(7, &[0, 1, 3])).unwrap());
    }

    #[test]
    fn induced_function_examples() {
        let a = set(7, &[0, 1, 3]);
        let g = a.group();
        let f = FreimanHom::linear(a.clone(), 3, 2);
        let phi = induced_function(&a, &f).unwrap();
        for d in 0..7 {
            assert_eq!(phi.get(d), Some(g.mul(3, d)));
        }

        let b = set(13, &[0, 1, 4]);
        let ind = indicator_hom_from_isolated(&b, 4).unwrap();
        assert_eq!(induced_function(&b, &ind), Err(Error::DifferenceSetIncomplete));

        let c = set(7, &[0, 1, 2]);
        let bad = FreimanHom::from_values(c.clone(), vec![0, 0, 1]).unwrap();
        assert!(matches!(
            induced_function(&c, &bad),
            Err(Error::NotWellDefined { .. })
        ));
    }

    #[test]
    fn extension_examples() {
        let a = full(7);
        let phi: Vec<u32> = (1..7).map(|d| 3 * d % 7).collect();
        let f = extend_pair_solution_to_hom(&a, &phi).unwrap();
        assert_eq!(f, FreimanHom::linear(a.clone(), 3, 0));

        let b = set(7, &[0, 1, 3]);
        for v in induced_space_basis(&b).unwrap() {
            let f = extend_pair_solution_to_hom(&b, &v).unwrap();
            assert_eq!(induced_function(&b, &f).unwrap().to_vector().unwrap(), v);
        }

        let mut not_kernel = phi.clone();
        not_kernel[0] = (not_kernel[0] + 1) % 7;
        assert_eq!(
            extend_pair_solution_to_hom(&a, &not_kernel),
            Err(Error::NotInKernel)
        );
    }

    #[test]
    fn triangle_rank_examples() {
        assert_eq!(triangle_generator_rank(&full(7)).unwrap(), 5);
        assert_eq!(triangle_generator_rank(&set(7, &[0, 1, 3])).unwrap(), 4);
        for n in [11u32, 13] {
            let r = build_triangle_constraints(&full(n)).unwrap().rank();
            assert_eq!(r, n as usize - 2);
        }
    }
}
