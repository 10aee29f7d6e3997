//! Integer exponent tuples `m_p` approximating a real ray `r` at rate `p⁻²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayTuple {
    pub p: u64,
    pub m: Vec<u64>,
    /// `max_j |m_j/p − r_j| · p²` achieved by this tuple.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayApproximation {
    pub ray: Vec<f64>,
    pub tuples: Vec<RayTuple>,
    /// Maximum of the per-tuple bounds.
    pub bound: f64,
}

impl RayApproximation {
    /// Re-checks every tuple against its stored bound.
    pub fn verify(&self) -> bool {
        self.tuples.windows(2).all(|w| w[0].p < w[1].p)
            && self.tuples.iter().all(|t| achieved_bound(&self.ray, t.p, &t.m) <= t.bound)
            && self.tuples.iter().all(|t| t.bound <= self.bound)
    }

    pub fn tuple(&self, p: u64) -> Option<&RayTuple> {
        self.tuples.iter().find(|t| t.p == p)
    }
}

fn achieved_bound(ray: &[f64], p: u64, m: &[u64]) -> f64 {
    let pf = p as f64;
    ray.iter().zip(m).map(|(r, m)| (*m as f64 - r * pf).abs() * pf).fold(0.0, f64::max)
}

/// Continued-fraction convergents `(numerator, denominator)` of `x`, at most
/// `depth` of them; fewer when the expansion terminates.
pub fn convergents(x: f64, depth: usize) -> Vec<(u64, u64)> {
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut rest = x;
    let mut out = Vec::new();
    for _ in 0..depth {
        let a = rest.floor();
        let ai = a as u64;
        let (h, k) = (ai * h1 + h0, ai * k1 + k0);
        out.push((h, k));
        (h0, h1, k0, k1) = (h1, h, k1, k);
        let frac = rest - a;
        if frac < 1e-12 * rest.max(1.0) || (h as f64 / k as f64 - x).abs() < 1e-15 * x {
            break;
        }
        rest = 1.0 / frac;
    }
    out
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Exponent tuples `m_{j,p}` with `|m_{j,p}/p − r_j| ≤ C/p²`.
///
/// The denominators come from the convergents of the first ray whose
/// continued fraction does not terminate within `depth` steps; the other
/// components are rounded. If every ray is rational the tuples are the exact
/// multiples `p = L, 2L, …` of the common denominator `L`.
pub fn diophantine_ray(r: &[f64], depth: usize) -> Result<RayApproximation> {
    if r.is_empty() || depth == 0 {
        return Err(Error::InvalidParams("ray must be nonempty and depth at least 1".into()));
    }
    if let Some((index, &value)) = r.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::NonPositiveRay { index, value });
    }
    let expansions: Vec<Vec<(u64, u64)>> = r.iter().map(|x| convergents(*x, depth + 1)).collect();
    let leader = expansions.iter().position(|cf| cf.len() > depth);
    let mut tuples = Vec::new();
    match leader {
        Some(j) => {
            let mut last = 0u64;
            for &(h, k) in &expansions[j][..depth] {
                if k <= last {
                    continue;
                }
                last = k;
                let m: Vec<u64> = r
                    .iter()
                    .enumerate()
                    .map(|(i, x)| if i == j { h } else { (x * k as f64).round() as u64 })
                    .collect();
                tuples.push(RayTuple { p: k, bound: achieved_bound(r, k, &m), m });
            }
        }
        None => {
            let lcm = expansions
                .iter()
                .map(|cf| cf.last().unwrap().1)
                .fold(1u64, |acc, q| acc / gcd(acc, q) * q);
            for i in 1..=depth as u64 {
                let p = lcm * i;
                let m: Vec<u64> = r.iter().map(|x| (x * p as f64).round() as u64).collect();
                tuples.push(RayTuple { p, bound: achieved_bound(r, p, &m), m });
            }
        }
    }
    let bound = tuples.iter().map(|t| t.bound).fold(0.0, f64::max);
    Ok(RayApproximation { ray: r.to_vec(), tuples, bound })
}
