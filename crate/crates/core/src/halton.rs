//! Smooth exploration noise from quasi-random Halton knots.
//!
//! Each noise sequence is one point of a `num_knots * d_u` dimensional Halton
//! sequence. Coordinates are mapped through the inverse standard-normal CDF,
//! scaled per control dimension and interpolated over the horizon by a spline
//! whose knots are uniformly spaced and include both endpoints.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{ControlSequence, RngStream};

/// Upper bound (exclusive) of the random Halton index offset drawn per batch.
pub const SCRAMBLE_RANGE: u64 = 1 << 20;

/// Radical inverse of `index` in `base`.
pub fn halton_point(index: u64, base: u64) -> Result<f64> {
    if base < 2 {
        return Err(Error::config(format!("halton base {base} < 2")));
    }
    if index == 0 {
        return Err(Error::config("halton index must be >= 1"));
    }
    let mut i = index;
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    Ok(r)
}

/// First `n` primes.
pub fn first_primes(n: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(n);
    let mut candidate = 2u64;
    while primes.len() < n {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| candidate % p != 0)
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplineDegree {
    Linear,
    #[default]
    Cubic,
}

/// Interpolation weights of a spline through uniformly spaced knots.
///
/// The spline is linear in the knot values, so evaluating at a time reduces to
/// a dot product with a fixed weight row.
#[derive(Clone, Debug)]
pub struct SplineBasis {
    num_knots: usize,
    degree: SplineDegree,
    span: f64,
}

impl SplineBasis {
    /// Knots at `t_j = j * span / (num_knots - 1)`.
    pub fn new(num_knots: usize, degree: SplineDegree, span: f64) -> Result<Self> {
        if num_knots < 2 {
            return Err(Error::config("spline needs at least two knots"));
        }
        Ok(SplineBasis {
            num_knots,
            degree,
            span,
        })
    }

    pub fn knot_time(&self, j: usize) -> f64 {
        j as f64 * self.span / (self.num_knots - 1) as f64
    }

    /// Evaluates the interpolant through `knots` at time `t`.
    pub fn eval(&self, knots: &[f64], t: f64) -> f64 {
        self.weights(t)
            .iter()
            .zip(knots)
            .map(|(w, k)| w * k)
            .sum()
    }

    /// Weight of every knot value in the interpolant at time `t`.
    pub fn weights(&self, t: f64) -> Vec<f64> {
        let n = self.num_knots;
        let h = if self.span > 0.0 {
            self.span / (n - 1) as f64
        } else {
            1.0
        };
        let x = (t / h).clamp(0.0, (n - 1) as f64);
        let seg = (x.floor() as usize).min(n - 2);
        let s = x - seg as f64;
        let mut w = vec![0.0; n];
        match self.degree {
            SplineDegree::Linear => {
                w[seg] += 1.0 - s;
                w[seg + 1] += s;
            }
            SplineDegree::Cubic => {
                // Natural cubic spline: the second derivatives M solve a
                // tridiagonal system that is linear in the knot values.
                let m = natural_second_derivative_matrix(n);
                let a = 1.0 - s;
                let b = s;
                // y(x) = a y_j + b y_{j+1} + ((a^3 - a) M_j + (b^3 - b) M_{j+1}) h^2 / 6
                // with h = 1 in knot units.
                w[seg] += a;
                w[seg + 1] += b;
                let ca = (a * a * a - a) / 6.0;
                let cb = (b * b * b - b) / 6.0;
                for k in 0..n {
                    w[k] += ca * m[seg][k] + cb * m[seg + 1][k];
                }
            }
        }
        w
    }
}

/// `M[j][k]`: second derivative at knot `j` per unit value at knot `k`, for
/// unit knot spacing and natural end conditions.
fn natural_second_derivative_matrix(n: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n]; n];
    if n < 3 {
        return out;
    }
    let interior = n - 2;
    for k in 0..n {
        // Right-hand side 6 (y_{j-1} - 2 y_j + y_{j+1}) for unit vector e_k.
        let rhs: Vec<f64> = (1..n - 1)
            .map(|j| {
                let y = |i: usize| if i == k { 1.0 } else { 0.0 };
                6.0 * (y(j - 1) - 2.0 * y(j) + y(j + 1))
            })
            .collect();
        let sol = solve_tridiagonal(interior, 1.0, 4.0, 1.0, &rhs);
        for (j, v) in sol.into_iter().enumerate() {
            out[j + 1][k] = v;
        }
    }
    out
}

/// Thomas algorithm for a constant-coefficient tridiagonal system.
fn solve_tridiagonal(n: usize, lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper / diag;
    d[0] = rhs[0] / diag;
    for i in 1..n {
        let denom = diag - lower * c[i - 1];
        c[i] = upper / denom;
        d[i] = (rhs[i] - lower * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

#[derive(Clone, Debug)]
pub struct SplineNoiseConfig {
    pub num_knots: usize,
    pub degree: SplineDegree,
    /// One prime per (knot, control dimension) coordinate, knot-major.
    pub halton_bases: Vec<u64>,
    pub scale: Vec<f64>,
    pub horizon: usize,
}

impl SplineNoiseConfig {
    /// Uses the first `num_knots * scale.len()` primes as bases.
    pub fn new(num_knots: usize, degree: SplineDegree, scale: Vec<f64>, horizon: usize) -> Result<Self> {
        let cfg = SplineNoiseConfig {
            num_knots,
            degree,
            halton_bases: first_primes(num_knots * scale.len()),
            scale,
            horizon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_knots < 2 {
            return Err(Error::config("num_knots must be >= 2"));
        }
        if self.num_knots > self.horizon {
            return Err(Error::config("num_knots must not exceed the horizon"));
        }
        if self.halton_bases.len() != self.num_knots * self.dim() {
            return Err(Error::config("need one halton base per knot coordinate"));
        }
        if self.halton_bases.iter().any(|&b| !is_prime(b)) {
            return Err(Error::config("halton bases must be prime"));
        }
        let mut sorted = self.halton_bases.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.halton_bases.len() {
            return Err(Error::config("halton bases must be pairwise distinct"));
        }
        if self.scale.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
            return Err(Error::config("noise scale must be finite and non-negative"));
        }
        Ok(())
    }

    fn basis(&self) -> SplineBasis {
        SplineBasis {
            num_knots: self.num_knots,
            degree: self.degree,
            span: (self.horizon.saturating_sub(1)) as f64,
        }
    }
}

/// Draws `count` smooth noise sequences.
///
/// The batch reads Halton indices `offset + 1 .. offset + count` where the
/// offset is drawn from `rng`, so successive iterations see fresh points.
pub fn sample_noise(cfg: &SplineNoiseConfig, rng: &mut RngStream, count: usize) -> Vec<ControlSequence> {
    let offset = rng.random_range(0..SCRAMBLE_RANGE);
    sample_noise_at(cfg, offset, count)
}

/// Same as [`sample_noise`] with an explicit Halton index offset.
pub fn sample_noise_at(cfg: &SplineNoiseConfig, offset: u64, count: usize) -> Vec<ControlSequence> {
    let normal = Normal::standard();
    let dim = cfg.dim();
    let basis = cfg.basis();
    let weights: Vec<Vec<f64>> = (0..cfg.horizon).map(|t| basis.weights(t as f64)).collect();
    let mut knots = vec![0.0; cfg.num_knots];
    (0..count)
        .map(|s| {
            let index = offset + s as u64 + 1;
            let mut seq = ControlSequence::zeros(cfg.horizon, dim);
            for d in 0..dim {
                for (j, knot) in knots.iter_mut().enumerate() {
                    let base = cfg.halton_bases[j * dim + d];
                    // index >= 1 and base >= 2 were validated
                    let u = halton_point(index, base).expect("valid halton arguments");
                    *knot = cfg.scale[d] * normal.inverse_cdf(u);
                }
                for (t, w) in weights.iter().enumerate() {
                    seq.row_mut(t)[d] = w.iter().zip(&knots).map(|(a, b)| a * b).sum();
                }
            }
            seq
        })
        .collect()
}
