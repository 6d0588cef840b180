use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Intensity {
    /// e^{−u} du on ℝ; atoms listed in decreasing order.
    Gumbel,
    /// du restricted to [−window, window]; atoms listed in increasing order.
    Lebesgue { window: f64 },
}

/// Atoms of a Poisson point process on the line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonSkeleton {
    pub u_values: Vec<f64>,
    pub intensity: Intensity,
}

impl PoissonSkeleton {
    pub fn len(&self) -> usize {
        self.u_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_values.is_empty()
    }

    /// Number of atoms strictly above `x`.
    pub fn count_above(&self, x: f64) -> usize {
        self.u_values.iter().filter(|u| **u > x).count()
    }
}

/// The `count` largest atoms of the process with intensity e^{−u} du:
/// U_i = −log(E_1 + … + E_i).
pub fn sample_skeleton_gumbel(count: usize, stream: &mut Stream) -> Result<PoissonSkeleton> {
    if count == 0 {
        return Err(Error::param("skeleton needs count >= 1"));
    }
    let mut t = 0.0;
    let u_values = (0..count)
        .map(|_| {
            t += stream.exp1();
            -t.ln()
        })
        .collect();
    Ok(PoissonSkeleton { u_values, intensity: Intensity::Gumbel })
}

/// All atoms of the unit-rate process on [−window, window].
pub fn sample_skeleton_lebesgue(window: f64, stream: &mut Stream) -> Result<PoissonSkeleton> {
    if !(window > 0.0) || !window.is_finite() {
        return Err(Error::param(format!("window must be positive and finite, got {window}")));
    }
    let mut u_values = Vec::new();
    let mut u = -window + stream.exp1();
    while u <= window {
        u_values.push(u);
        u += stream.exp1();
    }
    Ok(PoissonSkeleton { u_values, intensity: Intensity::Lebesgue { window } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_one_sample, mc_stderr};

    #[test]
    fn gumbel_points_decrease() {
        let mut s = Stream::from_seed(1);
        for _ in 0..100 {
            let sk = sample_skeleton_gumbel(50, &mut s).unwrap();
            assert!(sk.u_values.windows(2).all(|w| w[0] > w[1]));
        }
        assert!(sample_skeleton_gumbel(0, &mut s).is_err());
    }

    #[test]
    fn gumbel_counts_match_intensity() {
        // E#{U_i > −log m} = m.
        let mut s = Stream::from_seed(2);
        for m in [1.0f64, 2.0, 5.0] {
            let counts: Vec<f64> = (0..10_000)
                .map(|_| sample_skeleton_gumbel(60, &mut s).unwrap().count_above(-m.ln()) as f64)
                .collect();
            let (mean, se) = mc_stderr(&counts).unwrap();
            assert!((mean - m).abs() < 4.0 * se, "m={m} mean={mean} se={se}");
        }
    }

    #[test]
    fn largest_atom_is_gumbel() {
        let mut s = Stream::from_seed(3);
        let top: Vec<f64> = (0..10_000).map(|_| sample_skeleton_gumbel(1, &mut s).unwrap().u_values[0]).collect();
        assert!(ks_one_sample(&top, |y| (-(-y).exp()).exp()).unwrap().passes(0.01));
    }

    #[test]
    fn lebesgue_counts_and_positions() {
        let mut s = Stream::from_seed(4);
        let r = 3.0;
        let mut counts = Vec::new();
        let mut pts = Vec::new();
        for _ in 0..5000 {
            let sk = sample_skeleton_lebesgue(r, &mut s).unwrap();
            assert!(sk.u_values.iter().all(|u| u.abs() <= r));
            counts.push(sk.len() as f64);
            pts.extend(sk.u_values);
        }
        let (mean, se) = mc_stderr(&counts).unwrap();
        assert!((mean - 2.0 * r).abs() < 4.0 * se);
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (counts.len() - 1) as f64;
        assert!((var / mean - 1.0).abs() < 0.1, "dispersion {}", var / mean);
        assert!(ks_one_sample(&pts, |x| ((x + r) / (2.0 * r)).clamp(0.0, 1.0)).unwrap().passes(0.01));
    }
}
