//! Tolerance-aware dense complex linear algebra shared by every other module.
//!
//! All rank and null-space decisions go through the SVD with a single
//! dimension-scaled cutoff, so that every "full rank with probability one"
//! statement in the construction has one uniform numerical meaning. The
//! functions are generic over the scalar; the crate-root aliases pin them to
//! `Complex<f64>` for the rest of the pipeline.

use nalgebra::{ComplexField, DMatrix};
use num_traits::Float;

use crate::{Error, Result};

/// Relative cutoff for treating singular values as zero.
///
/// A singular value counts toward the rank when it exceeds
/// `relative_epsilon * sigma_max * max(rows, cols)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTolerance<R> {
    relative_epsilon: R,
}

impl<R: nalgebra::RealField + Copy> RankTolerance<R> {
    pub fn new(relative_epsilon: R) -> Result<Self> {
        if relative_epsilon <= R::zero() || relative_epsilon >= R::one() {
            return Err(Error::invalid(format!(
                "relative_epsilon must lie in (0, 1), got {relative_epsilon}"
            )));
        }
        Ok(Self { relative_epsilon })
    }

    pub fn relative_epsilon(&self) -> R {
        self.relative_epsilon
    }
}

impl<R: nalgebra::RealField + Copy> Default for RankTolerance<R> {
    fn default() -> Self {
        Self {
            relative_epsilon: nalgebra::convert(1e-9),
        }
    }
}

fn check_input<T>(a: &DMatrix<T>) -> Result<()>
where
    T: ComplexField,
    T::RealField: Float,
{
    if a.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    if a
        .iter()
        .any(|x| !x.clone().real().is_finite() || !x.clone().imaginary().is_finite())
    {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// Number of singular values above the scaled cutoff; 0 for the zero matrix.
pub fn numerical_rank<T>(a: &DMatrix<T>, tol: &RankTolerance<T::RealField>) -> Result<usize>
where
    T: ComplexField,
    T::RealField: Float + Copy,
{
    check_input(a)?;
    let sv = a.clone().singular_values();
    Ok(rank_from_singular_values(sv.as_slice(), a.nrows(), a.ncols(), tol))
}

fn rank_from_singular_values<R: nalgebra::RealField + Copy>(
    sv: &[R],
    rows: usize,
    cols: usize,
    tol: &RankTolerance<R>,
) -> usize {
    let sigma_max = sv.iter().copied().fold(R::zero(), |a, b| a.max(b));
    if sigma_max == R::zero() {
        return 0;
    }
    let dim: R = nalgebra::convert(rows.max(cols) as f64);
    let cutoff = tol.relative_epsilon * sigma_max * dim;
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Orthonormal basis of the right null space, one column per null direction.
///
/// Returns a `cols x (cols - rank)` matrix; a trivial null space yields a
/// zero-column result rather than an error.
pub fn null_space_basis<T>(a: &DMatrix<T>, tol: &RankTolerance<T::RealField>) -> Result<DMatrix<T>>
where
    T: ComplexField,
    T::RealField: Float + Copy,
{
    check_input(a)?;
    let (rows, cols) = a.shape();
    // The thin SVD of a wide matrix does not expose the null directions;
    // padding with zero rows makes V square without changing the spectrum.
    let padded = if rows < cols {
        let mut p = DMatrix::<T>::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let rank = rank_from_singular_values(svd.singular_values.as_slice(), rows, cols, tol);
    let v_t = svd.v_t.expect("SVD with compute_v");
    Ok(v_t.rows(rank, cols - rank).adjoint())
}

/// Orthonormal basis of the left null space, one row per null direction.
///
/// Returns a `(rows - rank) x rows` matrix `V` with `V * a = 0`.
pub fn left_null_space_basis<T>(
    a: &DMatrix<T>,
    tol: &RankTolerance<T::RealField>,
) -> Result<DMatrix<T>>
where
    T: ComplexField,
    T::RealField: Float + Copy,
{
    Ok(null_space_basis(&a.adjoint(), tol)?.adjoint())
}

/// Kronecker product `a (x) b`.
pub fn kronecker<T: ComplexField>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    a.kronecker(b)
}

/// Stack the columns of `a` into a single column.
pub fn vectorize<T: ComplexField>(a: &DMatrix<T>) -> DMatrix<T> {
    DMatrix::from_column_slice(a.nrows() * a.ncols(), 1, a.as_slice())
}

/// Inverse of [`vectorize`]: reshape a stacked column back into `rows x cols`.
pub fn unvectorize<T: ComplexField>(v: &DMatrix<T>, rows: usize, cols: usize) -> Result<DMatrix<T>> {
    if v.ncols() != 1 || v.nrows() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "cannot reshape {}x{} into {rows}x{cols}",
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(DMatrix::from_column_slice(rows, cols, v.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{CMat, Cx, Tol};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMat::zeros(rows, cols);
        for c in 0..cols {
            for r in 0..rows {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                m[(r, c)] = Cx::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
            }
        }
        m
    }

    fn tol() -> Tol {
        Tol::default()
    }

    #[test]
    fn rank_of_identity() {
        let a = CMat::identity(5, 5);
        assert_eq!(numerical_rank(&a, &tol()).unwrap(), 5);
    }

    #[test]
    fn rank_of_zero_matrix() {
        let a = CMat::zeros(3, 4);
        assert_eq!(numerical_rank(&a, &tol()).unwrap(), 0);
    }

    #[test]
    fn rank_of_wide_gaussian_matches_gram_determinant() {
        // Independent oracle: |det(A A^H)| > 0 certifies full row rank
        // without going through the SVD path.
        let a = gaussian(20, 28, 42);
        let gram = &a * a.adjoint();
        let det = gram.determinant();
        assert!(det.norm() > 1e-12);
        assert_eq!(numerical_rank(&a, &tol()).unwrap(), 20);
    }

    #[test]
    fn rank_rejects_non_finite() {
        let mut a = CMat::identity(2, 2);
        a[(0, 1)] = Cx::new(f64::NAN, 0.0);
        assert!(matches!(
            numerical_rank(&a, &tol()),
            Err(Error::NonFiniteInput)
        ));
    }

    #[test]
    fn null_space_of_identity_is_trivial() {
        let a = CMat::identity(2, 2);
        let b = null_space_basis(&a, &tol()).unwrap();
        assert_eq!(b.ncols(), 0);
        assert_eq!(b.nrows(), 2);
    }

    #[test]
    fn null_space_of_wide_gaussian() {
        let a = gaussian(20, 28, 7);
        let b = null_space_basis(&a, &tol()).unwrap();
        assert_eq!(b.ncols(), 8);
        let residual = (&a * &b).norm();
        assert!(residual <= 1e-10 * a.norm() * (b.ncols() as f64).sqrt());
        // Orthonormal columns.
        let gram = b.adjoint() * &b;
        assert!((gram - CMat::identity(8, 8)).norm() < 1e-12);
    }

    #[test]
    fn null_space_of_zero_matrix_is_full() {
        let a = CMat::zeros(2, 3);
        let b = null_space_basis(&a, &tol()).unwrap();
        assert_eq!(b.ncols(), 3);
        let gram = b.adjoint() * &b;
        assert!((gram - CMat::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn left_null_space_of_tall_gaussian() {
        let a = gaussian(14, 2, 3);
        let v = left_null_space_basis(&a, &tol()).unwrap();
        assert_eq!(v.nrows(), 12);
        assert!((&v * &a).norm() <= 1e-10 * a.norm() * (v.nrows() as f64).sqrt());
    }

    #[test]
    fn left_null_space_of_identity_is_trivial() {
        let a = CMat::identity(3, 3);
        let v = left_null_space_basis(&a, &tol()).unwrap();
        assert_eq!(v.nrows(), 0);
    }

    #[test]
    fn left_null_space_of_zero_column() {
        let a = CMat::zeros(4, 1);
        let v = left_null_space_basis(&a, &tol()).unwrap();
        assert_eq!(v.nrows(), 4);
        let gram = &v * v.adjoint();
        assert!((gram - CMat::identity(4, 4)).norm() < 1e-12);
    }

    #[test]
    fn kronecker_of_identities() {
        let a = CMat::identity(2, 2);
        let b = CMat::identity(3, 3);
        assert_eq!(kronecker(&a, &b), CMat::identity(6, 6));
    }

    #[test]
    fn kronecker_scalar_scales() {
        let a = CMat::from_element(1, 1, Cx::new(2.0, -1.0));
        let b = gaussian(3, 2, 11);
        let k = kronecker(&a, &b);
        assert!((k - &b * Cx::new(2.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn vec_kronecker_identity() {
        // vec(A X B) = (B^T (x) A) vec(X)
        let a = gaussian(3, 3, 1);
        let x = gaussian(3, 3, 2);
        let b = gaussian(3, 3, 3);
        let lhs = vectorize(&(&a * &x * &b));
        let rhs = kronecker(&b.transpose(), &a) * vectorize(&x);
        assert!((&lhs - &rhs).norm() <= 1e-12 * lhs.norm());
    }

    #[test]
    fn vectorize_stacks_columns() {
        let a = CMat::from_row_slice(
            2,
            2,
            &[
                Cx::new(1.0, 0.0),
                Cx::new(2.0, 0.0),
                Cx::new(3.0, 0.0),
                Cx::new(4.0, 0.0),
            ],
        );
        let v = vectorize(&a);
        let expect = [1.0, 3.0, 2.0, 4.0];
        for (i, e) in expect.iter().enumerate() {
            assert_eq!(v[(i, 0)].re, *e);
        }
        assert_eq!(unvectorize(&v, 2, 2).unwrap(), a);
    }

    #[test]
    fn vectorize_column_is_identity() {
        let a = gaussian(5, 1, 9);
        assert_eq!(vectorize(&a), a);
    }

    #[test]
    fn unvectorize_round_trip() {
        let a = gaussian(4, 5, 13);
        let back = unvectorize(&vectorize(&a), 4, 5).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn rank_tolerance_bounds() {
        assert!(RankTolerance::new(0.0f64).is_err());
        assert!(RankTolerance::new(1.0f64).is_err());
        assert!(RankTolerance::new(1e-9f64).is_ok());
    }

    #[test]
    fn rank_nullity_identity_random_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for i in 0..100 {
            let rows = 1 + (rand::Rng::random_range(&mut rng, 0..12usize));
            let cols = 1 + (rand::Rng::random_range(&mut rng, 0..12usize));
            let a = gaussian(rows, cols, 1000 + i);
            let r = numerical_rank(&a, &tol()).unwrap();
            let b = null_space_basis(&a, &tol()).unwrap();
            assert_eq!(r + b.ncols(), cols);
        }
    }

    #[test]
    fn rank_invariant_under_unitary() {
        for seed in 0..100u64 {
            let a = gaussian(6, 9, seed);
            let q = gaussian(6, 6, 5000 + seed).qr().q();
            let r0 = numerical_rank(&a, &tol()).unwrap();
            let r1 = numerical_rank(&(&q * &a), &tol()).unwrap();
            assert_eq!(r0, r1);
        }
    }

    #[test]
    fn single_precision_alias_works() {
        let a = CMat32::identity(4, 4);
        let t = RankTolerance::<f32>::default();
        assert_eq!(numerical_rank(&a, &t).unwrap(), 4);
    }

    use crate::CMat32;
}
