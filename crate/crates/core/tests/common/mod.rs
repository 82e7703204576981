#![allow(dead_code)]

use misdc_core::linalg::BandedMatrix;
use rand::Rng;

/// Strictly diagonally dominant pentadiagonal matrix with the two
/// boundary-row extras filled in.
pub fn random_dominant(rng: &mut impl Rng, n: usize) -> BandedMatrix {
    let mut a = BandedMatrix::zeros(n).unwrap();
    for i in 0..n {
        let mut off = 0.0;
        let mut put = |a: &mut BandedMatrix, j: usize, rng: &mut dyn rand::RngCore| {
            let v: f64 = rng.gen_range(-1.0..1.0);
            off += v.abs();
            a.set(i, j, v).unwrap();
        };
        for j in i.saturating_sub(2)..=(i + 2).min(n - 1) {
            if j != i {
                put(&mut a, j, rng);
            }
        }
        if i == 0 {
            put(&mut a, 3, rng);
        } else if i == n - 1 {
            put(&mut a, n - 4, rng);
        }
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        a.set(i, i, sign * (off + rng.gen_range(0.5..2.0))).unwrap();
    }
    a
}

/// `log2` ratios of successive errors.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
