use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `(i² + j²) π²`, `i, j ≥ 1`, ascending with multiplicity.
pub fn square_dirichlet_exact(count: usize) -> Vec<f64> {
    sums_of_squares(1, count)
        .into_iter()
        .map(|s| s as f64 * PI * PI)
        .collect()
}

/// Smallest `count` values of `i² + j²` over `i, j ≥ lo`, excluding 0.
pub(crate) fn sums_of_squares(lo: usize, count: usize) -> Vec<usize> {
    // all sums up to k² + 1 are enumerated once i, j run to k
    let mut k = 1;
    loop {
        let mut v: Vec<usize> = (lo..=k)
            .flat_map(|i| (lo..=k).map(move |j| i * i + j * j))
            .filter(|&s| s > 0 && s <= k * k + 1)
            .collect();
        if v.len() >= count {
            v.sort_unstable();
            v.truncate(count);
            return v;
        }
        k *= 2;
    }
}

/// First five nonzero Neumann eigenvalues of the L-shaped domain
/// `(-1,1)² \ (0,1)×(-1,0)`.
pub const LSHAPE_NEUMANN: [f64; 5] = [
    1.47562182408,
    3.53403136678,
    9.86960440109,
    9.86960440109,
    11.3894793979,
];

/// First two nonzero Neumann eigenvalues of the checkerboard diffusion
/// problem on `(-1,1)²` for the tabulated contrasts.
pub fn checkerboard_reference(delta: f64) -> Option<[f64; 2]> {
    let table = [
        (2.0, [3.317548763415, 3.366324157260]),
        (10.0, [4.533851871670, 6.250332186603]),
        (100.0, [4.893193324891, 7.206675422492]),
        (1e8, [4.934802158785, 7.225211232692]),
    ];
    table
        .iter()
        .find(|(d, _)| (d - delta).abs() <= 1e-12 * d)
        .map(|(_, v)| *v)
}

/// Relative errors `|λ_h,i - λ_i| / λ_i` pairing the i-th computed with the
/// i-th exact value.
pub fn compute_eigen_errors(computed: &[f64], exact: &[f64], count: usize) -> Result<Vec<f64>> {
    if computed.len() < count || exact.len() < count {
        return Err(Error::Numerical(format!(
            "{count} eigenvalues requested, {} computed, {} reference values",
            computed.len(),
            exact.len()
        )));
    }
    Ok(computed
        .iter()
        .zip(exact)
        .take(count)
        .map(|(h, e)| (h - e).abs() / e.abs())
        .collect())
}

/// Computed eigenvalues whose relative distance to every exact value exceeds
/// `tol_match`. Only computed values not above the largest exact value (times
/// `1 + tol_match`) are examined.
pub fn detect_spurious(computed: &[f64], exact: &[f64], tol_match: f64) -> Vec<(usize, f64)> {
    let Some(top) = exact.iter().copied().reduce(f64::max) else {
        return Vec::new();
    };
    computed
        .iter()
        .enumerate()
        .filter(|(_, &l)| l <= top * (1.0 + tol_match))
        .filter(|(_, &l)| exact.iter().all(|&e| (l - e).abs() > tol_match * e.abs()))
        .map(|(i, &l)| (i, l))
        .collect()
}

/// Least-squares slope of `log e` against `log h` over the last `window` points.
pub fn convergence_rate(h: &[f64], err: &[f64], window: usize) -> Result<f64> {
    if h.len() != err.len() {
        return Err(Error::Dimension(format!(
            "{} mesh sizes for {} errors",
            h.len(),
            err.len()
        )));
    }
    let w = window.min(h.len());
    if w < 2 {
        return Err(Error::Config("a rate needs at least two points".into()));
    }
    let start = h.len() - w;
    if err[start..].iter().chain(&h[start..]).any(|v| !(*v > 0.0)) {
        return Err(Error::Numerical("rates need positive errors and mesh sizes".into()));
    }
    let xs: Vec<f64> = h[start..].iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err[start..].iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / w as f64;
    let my = ys.iter().sum::<f64>() / w as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Numerical("all mesh sizes coincide".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_list() {
        let e = square_dirichlet_exact(10);
        let s: Vec<f64> = e.iter().map(|v| (v / (PI * PI)).round()).collect();
        assert_eq!(s, vec![2.0, 5.0, 5.0, 8.0, 10.0, 10.0, 13.0, 13.0, 17.0, 17.0]);
        assert!(e.iter().zip(&s).all(|(a, b)| (a - b * PI * PI).abs() < 1e-12 * a));
        // brute-force oracle on a larger list
        let big = square_dirichlet_exact(200);
        let mut brute: Vec<f64> = (1..40)
            .flat_map(|i| (1..40).map(move |j| (i * i + j * j) as f64))
            .collect();
        brute.sort_by(f64::total_cmp);
        for (a, b) in big.iter().zip(&brute) {
            assert!((a / (PI * PI) - b).abs() < 1e-12);
        }
    }

    #[test]
    fn spurious_detection() {
        let exact: Vec<f64> = [2.0, 5.0, 5.0, 8.0, 10.0].iter().map(|v| v * PI * PI).collect();
        let computed: Vec<f64> = [2.0031, 3.4950, 4.0009, 4.9486].iter().map(|v| v * PI * PI).collect();
        let s = detect_spurious(&computed, &exact, 0.05);
        assert_eq!(s.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1, 2]);
        assert!(detect_spurious(&[], &exact, 0.05).is_empty());
    }

    #[test]
    fn rates() {
        let h = [0.5, 0.25, 0.125, 0.0625];
        let e2: Vec<f64> = h.iter().map(|x| 3.0 * x * x).collect();
        assert!((convergence_rate(&h, &e2, 4).unwrap() - 2.0).abs() < 1e-12);
        let e43: Vec<f64> = h.iter().map(|x: &f64| x.powf(4.0 / 3.0)).collect();
        assert!((convergence_rate(&h, &e43, 3).unwrap() - 4.0 / 3.0).abs() < 1e-12);
        // preasymptotic first point is excluded by the window
        let mut e = e2.clone();
        e[0] = 50.0;
        let s = convergence_rate(&h, &e, 3).unwrap();
        assert!((1.8..=2.2).contains(&s));
        assert!(convergence_rate(&h, &[1.0, 0.0, 1.0, 1.0], 4).is_err());
    }
}
