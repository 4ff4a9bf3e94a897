//! Trajectory CSV: `t, re_x1, im_x1, …`, one row per dense grid point plus
//! both sides of every integer.

use std::fmt::Write as _;

use depca::depca_engine::HybridTrajectory;
use depca::diagnostics::STRADDLE;


/// Dense grid `n0 + k·dt` and `n ± STRADDLE` for every integer in the
/// domain, sorted and without duplicates.
pub fn sample_times(n0: i64, end: i64, dt: f64) -> Vec<f64> {
    let (lo, hi) = (n0 as f64, end as f64);
    // k·dt rather than accumulation keeps grid points exact where possible
    let steps = ((hi - lo) / dt + 1e-9).floor() as i64;
    let mut times: Vec<f64> = (0..=steps).map(|k| lo + k as f64 * dt).collect();
    for n in n0..=end {
        times.push(n as f64);
        if n > n0 {
            times.push(n as f64 - STRADDLE);
        }
        if n < end {
            times.push(n as f64 + STRADDLE);
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

pub fn header(dim: usize) -> String {
    let mut h = String::from("t");
    for i in 1..=dim {
        let _ = write!(h, ",re_x{i},im_x{i}");
    }
    h
}

pub fn trajectory_csv(traj: &HybridTrajectory, dt: f64) -> String {
    let mut out = header(traj.dim());
    out.push('\n');
    for t in sample_times(traj.n0, traj.n1 + 1, dt) {
        let x = traj.evaluate(t).expect("sample times lie in the domain");
        let _ = write!(out, "{t:.15e}");
        for z in x.iter() {
            let _ = write!(out, ",{:.15e},{:.15e}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straddles_every_integer() {
        let t = sample_times(0, 2, 0.5);
        let expected = [0.0, 1e-9, 0.5, 1.0 - 1e-9, 1.0, 1.0 + 1e-9, 1.5, 2.0 - 1e-9, 2.0];
        assert_eq!(t.len(), expected.len());
        for (a, b) in t.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15, "{t:?}");
        }
    }

    #[test]
    fn grid_reaches_the_end() {
        let t = sample_times(-3, 3, 0.1);
        assert_eq!(*t.last().unwrap(), 3.0);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn header_lists_real_and_imaginary_parts() {
        assert_eq!(header(2), "t,re_x1,im_x1,re_x2,im_x2");
    }
}
