//! Sequential linear regression with nuisance covariates.
//!
//! Model: `Y_i = δσX_i + βᵀZ_i + σε_i`. Projecting `Y^n` onto the orthogonal
//! complement of the nuisance columns removes `β`; normalising removes `σ`.
//! With `A_n` a `k × n` matrix whose rows are an orthonormal basis of that
//! complement (`k = n − rank Z_n`) and `b_n = A_n X^n`, the statistic
//!
//! ```text
//! T_n = (b_nᵀu_n / ‖b_n‖) / (‖P_n u_n‖ / √(k−1)),   u_n = A_nY^n / ‖A_nY^n‖
//! ```
//!
//! is noncentral t with `k − 1` degrees of freedom and noncentrality `δ‖b_n‖`.
//! Everything is recomputed from the stored data at each step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::process::Model;
use crate::specfun::nct_logratio;

/// Singular values at or below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// `‖b_n‖ ≤ B_TOLERANCE·‖X^n‖` is treated as `b_n = 0`.
const B_TOLERANCE: f64 = 1e-10;
/// `‖A_nY^n‖ ≤ RESIDUAL_TOLERANCE·‖Y^n‖` is treated as an all-zero residual.
const RESIDUAL_TOLERANCE: f64 = 1e-13;

/// Orthonormal basis (as rows) of the orthogonal complement of the column
/// space of `z`, together with the numerical rank of `z`.
pub fn nullspace_basis(z: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let n = z.nrows();
    if z.ncols() == 0 || n == 0 {
        return (DMatrix::identity(n, n), 0);
    }
    let svd = z.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors were requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let kept: Vec<usize> = if smax > 0.0 {
        (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > RANK_TOLERANCE * smax).collect()
    } else {
        Vec::new()
    };
    let rank = kept.len();

    // Householder QR of the orthonormal column basis; the trailing n − r
    // columns of the full Q span the complement.
    let mut work = DMatrix::from_fn(n, rank, |i, j| u[(i, kept[j])]);
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(rank);
    for j in 0..rank {
        let x = work.view((j, j), (n - j, 1)).column(0).into_owned();
        let norm = x.norm();
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.norm();
        if vnorm > 0.0 {
            v /= vnorm;
        }
        for c in j..rank {
            let mut col = work.view_mut((j, c), (n - j, 1));
            let dot = v.dot(&col.column(0));
            col.column_mut(0).axpy(-2.0 * dot, &v, 1.0);
        }
        reflectors.push(v);
    }

    let k = n - rank;
    let mut basis = DMatrix::zeros(k, n);
    for (row, i) in (rank..n).enumerate() {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        for (j, v) in reflectors.iter().enumerate().rev() {
            let mut tail = e.rows_mut(j, n - j);
            let dot = v.dot(&tail);
            tail.axpy(-2.0 * dot, v, 1.0);
        }
        basis.row_mut(row).copy_from(&e.transpose());
    }
    (basis, rank)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegTStat {
    pub t: f64,
    pub dof: usize,
    pub b_norm: f64,
}

/// The regression t-statistic for an explicit complement basis.
///
/// `Ok(None)` marks an uninformative step (`k < 2` or `b_n = 0`).
pub fn reg_t_statistic_with_basis(y: &[f64], x: &[f64], basis: &DMatrix<f64>) -> Result<Option<RegTStat>> {
    let k = basis.nrows();
    if k < 2 {
        return Ok(None);
    }
    let yv = DVector::from_column_slice(y);
    let xv = DVector::from_column_slice(x);
    let b = basis * &xv;
    let b_norm = b.norm();
    if b_norm <= B_TOLERANCE * xv.norm() {
        return Ok(None);
    }
    let ay = basis * &yv;
    let ay_norm = ay.norm();
    if ay_norm <= RESIDUAL_TOLERANCE * yv.norm() || ay_norm == 0.0 {
        return Err(Error::data(
            "regression residual A_nY^n ≠ 0",
            format!("responses lie in the nuisance column space at n = {}", y.len()),
        ));
    }
    let u = ay / ay_norm;
    let along = b.dot(&u) / b_norm;
    let orth = (&u - &b * (along / b_norm)).norm();
    let t = if orth == 0.0 {
        along.signum() * f64::INFINITY
    } else {
        along / (orth / ((k - 1) as f64).sqrt())
    };
    Ok(Some(RegTStat { t, dof: k - 1, b_norm }))
}

/// Accumulated `(Y, X, Z)` data and the derived complement basis.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSnapshot {
    d: usize,
    y: Vec<f64>,
    x: Vec<f64>,
    /// Row-major `n × d`.
    z: Vec<f64>,
    rank: usize,
    basis: DMatrix<f64>,
    b: DVector<f64>,
    stat: Option<RegTStat>,
}

impl RegressionSnapshot {
    pub fn empty(d: usize) -> Self {
        RegressionSnapshot {
            d,
            y: Vec::new(),
            x: Vec::new(),
            z: Vec::new(),
            rank: 0,
            basis: DMatrix::zeros(0, 0),
            b: DVector::zeros(0),
            stat: None,
        }
    }

    pub fn from_data(y: &[f64], x: &[f64], z_rows: &[Vec<f64>], d: usize) -> Result<Self> {
        if y.len() != x.len() || y.len() != z_rows.len() {
            return Err(Error::Contract("y, x and z must have the same number of rows".into()));
        }
        let mut snap = Self::empty(d);
        for ((&yi, &xi), zi) in y.iter().zip(x).zip(z_rows) {
            check_row(yi, xi, zi, d)?;
            snap.y.push(yi);
            snap.x.push(xi);
            snap.z.extend_from_slice(zi);
        }
        snap.derive()?;
        Ok(snap)
    }

    fn derive(&mut self) -> Result<()> {
        let z = DMatrix::from_row_slice(self.n(), self.d, &self.z);
        let (basis, rank) = nullspace_basis(&z);
        self.b = &basis * DVector::from_column_slice(&self.x);
        self.rank = rank;
        self.stat = reg_t_statistic_with_basis(&self.y, &self.x, &basis)?;
        self.basis = basis;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn k(&self) -> usize {
        self.n() - self.rank
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn z_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n(), self.d, &self.z)
    }

    /// `A_n`, `k × n`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }
}

fn check_row(y: f64, x: f64, z: &[f64], d: usize) -> Result<()> {
    if z.len() != d {
        return Err(Error::data("regression covariate width", format!("expected {d} nuisance covariates, got {}", z.len())));
    }
    if !(y.is_finite() && x.is_finite() && z.iter().all(|v| v.is_finite())) {
        return Err(Error::data("regression support", "non-finite value in observation"));
    }
    Ok(())
}

pub fn reg_t_statistic(snapshot: &RegressionSnapshot) -> Result<Option<RegTStat>> {
    reg_t_statistic_with_basis(&snapshot.y, &snapshot.x, &snapshot.basis)
}

pub fn reg_log_evalue(snapshot: &RegressionSnapshot, delta0: f64, delta_plus: f64) -> Result<f64> {
    log_ratio_from_stat(snapshot.stat, delta0, delta_plus)
}

fn log_ratio_from_stat(stat: Option<RegTStat>, delta0: f64, delta_plus: f64) -> Result<f64> {
    match stat {
        Some(RegTStat { t, dof, b_norm }) if delta0 != delta_plus => {
            nct_logratio(t, dof as f64, delta_plus * b_norm, delta0 * b_norm)
        }
        _ => Ok(0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionRow {
    pub y: f64,
    pub x: f64,
    pub z: Vec<f64>,
}

/// Regression with `d` nuisance covariates as a [`Model`].
#[derive(Debug, Clone, Copy)]
pub struct Regression {
    pub d: usize,
}

impl Model for Regression {
    type State = RegressionSnapshot;
    type Observation = RegressionRow;

    fn name(&self) -> &'static str {
        "linreg"
    }

    fn initial_state(&self) -> RegressionSnapshot {
        RegressionSnapshot::empty(self.d)
    }

    fn update(&self, state: &RegressionSnapshot, row: &RegressionRow) -> Result<RegressionSnapshot> {
        check_row(row.y, row.x, &row.z, self.d)?;
        let mut next = state.clone();
        next.y.push(row.y);
        next.x.push(row.x);
        next.z.extend_from_slice(&row.z);
        next.derive()?;
        Ok(next)
    }

    fn statistic(&self, state: &RegressionSnapshot) -> Option<f64> {
        state.stat.map(|s| s.t)
    }

    fn log_evalue(&self, state: &RegressionSnapshot, null: f64, alt: f64) -> Result<f64> {
        log_ratio_from_stat(state.stat, null, alt)
    }

    fn is_informative(&self, state: &RegressionSnapshot) -> bool {
        state.stat.is_some()
    }

    fn validate_parameter(&self, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Config(format!("effect size {value} is not finite")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ttest::{t_log_evalue, t_statistic, TTestState};

    fn assert_orthonormal_complement(z: &DMatrix<f64>) {
        let (a, rank) = nullspace_basis(z);
        let n = z.nrows();
        assert_eq!(a.nrows(), n - rank);
        let aat = &a * a.transpose();
        assert!((aat - DMatrix::<f64>::identity(n - rank, n - rank)).amax() < 1e-9);
        if z.ncols() > 0 {
            assert!((&a * z).amax() < 1e-9);
            let proj = DMatrix::<f64>::identity(n, n) - z * (z.transpose() * z).pseudo_inverse(1e-12).unwrap() * z.transpose();
            assert!((a.transpose() * &a - proj).amax() < 1e-8);
        }
    }

    #[test]
    fn empty_nuisance_gives_identity() {
        let z = DMatrix::<f64>::zeros(3, 0);
        let (a, rank) = nullspace_basis(&z);
        assert_eq!(rank, 0);
        assert_eq!(a, DMatrix::identity(3, 3));
    }

    #[test]
    fn ones_column_complement() {
        let z = DMatrix::from_element(2, 1, 1.0);
        let (a, rank) = nullspace_basis(&z);
        assert_eq!(rank, 1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let row = [a[(0, 0)], a[(0, 1)]];
        assert!(
            ((row[0] - h).abs() < 1e-12 && (row[1] + h).abs() < 1e-12)
                || ((row[0] + h).abs() < 1e-12 && (row[1] - h).abs() < 1e-12),
            "{row:?}"
        );
    }

    #[test]
    fn duplicate_columns_do_not_add_rank() {
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, -0.5, -0.5]);
        let (a, rank) = nullspace_basis(&z);
        assert_eq!((rank, a.nrows()), (1, 2));
        assert_orthonormal_complement(&z);
    }

    #[test]
    fn basis_properties_on_assorted_shapes() {
        let data: Vec<f64> = (0..40).map(|i| ((i * 7919) % 97) as f64 / 13.0 - 3.0).collect();
        for (n, d) in [(1, 1), (2, 3), (5, 2), (8, 4), (10, 1)] {
            let z = DMatrix::from_row_slice(n, d, &data[..n * d]);
            assert_orthonormal_complement(&z);
        }
    }

    #[test]
    fn explicit_residual_example() {
        // y on ones: residual (−4/3, −1/3, 5/3); x residual (−1, 0, 1): t = 3√3.
        let snap = RegressionSnapshot::from_data(&[1.0, 2.0, 4.0], &[1.0, 2.0, 3.0], &[vec![1.0], vec![1.0], vec![1.0]], 1).unwrap();
        let s = reg_t_statistic(&snap).unwrap().unwrap();
        assert!((s.t - 3.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.dof, 1);
        assert!((s.b_norm - 2f64.sqrt()).abs() < 1e-12);
        let l = reg_log_evalue(&snap, 0.0, 0.4).unwrap();
        assert!((l - 0.607_655_406_398_264_6).abs() < 1e-11);
    }

    #[test]
    fn reduces_to_t_test_without_nuisance() {
        let ys = [0.4, 1.3, -0.2, 2.1, 0.8, 1.1];
        for n in 2..=ys.len() {
            let snap = RegressionSnapshot::from_data(&ys[..n], &vec![1.0; n], &vec![vec![]; n], 0).unwrap();
            let s = reg_t_statistic(&snap).unwrap().unwrap();
            let tt = TTestState::from_batch(&ys[..n]).unwrap();
            assert!((s.t - t_statistic(&tt).unwrap()).abs() < 1e-9);
            assert_eq!(s.dof, n - 1);
            assert!((s.b_norm - (n as f64).sqrt()).abs() < 1e-12);
            let a = reg_log_evalue(&snap, 0.0, 0.3).unwrap();
            let b = t_log_evalue(&tt, 0.0, 0.3).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn uninformative_steps() {
        let model = Regression { d: 1 };
        let rows = [(1.0, 1.0, 1.0), (2.0, 2.0, 2.0), (0.5, 3.0, 3.0)];
        let mut s = model.initial_state();
        for (y, x, z) in rows {
            s = model.update(&s, &RegressionRow { y, x, z: vec![z] }).unwrap();
            // x = z: b_n = 0 at every n
            assert!(!model.is_informative(&s));
            assert_eq!(model.log_evalue(&s, 0.0, 0.7).unwrap(), 0.0);
        }
        let snap = RegressionSnapshot::from_data(&[1.0, 2.0], &[1.0, 3.0], &[vec![1.0], vec![1.0]], 1).unwrap();
        assert_eq!(snap.k(), 1);
        assert!(reg_t_statistic(&snap).unwrap().is_none());
    }

    #[test]
    fn zero_residual_is_data_error() {
        let err = RegressionSnapshot::from_data(&[2.0, 2.0, 2.0], &[1.0, 2.0, 4.0], &[vec![1.0], vec![1.0], vec![1.0]], 1).unwrap_err();
        assert!(matches!(err, Error::Data { .. }));
    }

    #[test]
    fn wrong_width_rejected() {
        let model = Regression { d: 2 };
        let err = model.update(&model.initial_state(), &RegressionRow { y: 1.0, x: 1.0, z: vec![1.0] }).unwrap_err();
        assert!(matches!(err, Error::Data { .. }));
    }
}
