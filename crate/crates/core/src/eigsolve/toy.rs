use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepMode {
    /// `(C1 + p C2) x = λ x`
    AlphaStiff,
    /// `x = λ (C1 + p C2) x`
    BetaMass,
}

/// Eigenvalues of one parameter value, ascending; infinite eigenvalues of a
/// singular mass are reported as `f64::INFINITY` at the end.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub eigenvalues: Vec<f64>,
}

/// Dense spectra of the diagonal toy pencils for every parameter value.
pub fn toy_parametric_sweep(
    c1: &DMatrix<f64>,
    c2: &DMatrix<f64>,
    mode: SweepMode,
    values: &[f64],
) -> Result<Vec<SweepRow>> {
    let n = c1.nrows();
    if !c1.is_square() || c2.shape() != c1.shape() {
        return Err(Error::Dimension(
            "toy pencil matrices must be square and of equal size".into(),
        ));
    }
    if (c1 - c1.transpose()).abs().max() > 0.0 || (c2 - c2.transpose()).abs().max() > 0.0 {
        return Err(Error::Config("toy pencil matrices must be symmetric".into()));
    }
    values
        .iter()
        .map(|&p| {
            let a = c1 + c2 * p;
            let ev = SymmetricEigen::new(a).eigenvalues;
            let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            let mut eigenvalues: Vec<f64> = match mode {
                SweepMode::AlphaStiff => ev.iter().copied().collect(),
                SweepMode::BetaMass => ev
                    .iter()
                    .map(|&mu| {
                        if mu.abs() <= 1e-14 * scale {
                            f64::INFINITY
                        } else {
                            1.0 / mu
                        }
                    })
                    .collect(),
            };
            eigenvalues.sort_by(f64::total_cmp);
            debug_assert_eq!(eigenvalues.len(), n);
            Ok(SweepRow { param: p, eigenvalues })
        })
        .collect()
}

/// The diagonal pencils `C1 = diag(3,4,5,6,0,0)`, `C2 = diag(0,0,0,0,1,2)`.
pub fn toy_matrices() -> (DMatrix<f64>, DMatrix<f64>) {
    let c1 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 4.0, 5.0, 6.0, 0.0, 0.0]));
    let c2 = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, 1.0, 2.0]));
    (c1, c2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_and_beta_sweeps() {
        let (c1, c2) = toy_matrices();
        let r = toy_parametric_sweep(&c1, &c2, SweepMode::AlphaStiff, &[0.0, 1.0]).unwrap();
        assert_eq!(r[0].eigenvalues, vec![0.0, 0.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(r[1].eigenvalues, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = toy_parametric_sweep(&c1, &c2, SweepMode::BetaMass, &[1.0, 0.0]).unwrap();
        let want = [1.0 / 6.0, 0.2, 0.25, 1.0 / 3.0, 0.5, 1.0];
        for (a, b) in r[0].eigenvalues.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(r[1].eigenvalues[4..].iter().all(|v| v.is_infinite()));
    }
}
