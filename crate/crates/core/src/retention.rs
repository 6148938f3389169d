//! Retention model of the asymmetric 2T eDRAM cell.
//!
//! A stored 1 never decays. A stored 0 drifts toward VDD and is sensed as 1
//! once its storage node crosses the sense reference `V_REF`. The crossing
//! time is lognormal with median
//!
//! ```text
//! t50(v) = A * g(v)^beta,    g(v) = -ln(1 - v / v_dd)
//! ```
//!
//! and shape `sigma`, so the flip probability after `t` microseconds is
//! `Phi((ln t - ln t50(v)) / sigma)`. The three parameters are fitted to
//! `(t, V_REF, p)` anchors.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Default flip-probability budget used to derive refresh periods.
pub const DEFAULT_TARGET_P: f64 = 0.01;

/// Samples per independent random substream in Monte Carlo estimates.
const MC_CHUNK: u64 = 4096;

/// One calibration point: after `t_us` microseconds at reference `v_ref`,
/// a stored 0 has flipped with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub t_us: f64,
    pub v_ref: f64,
    pub p: f64,
}

impl Anchor {
    pub const fn new(t_us: f64, v_ref: f64, p: f64) -> Self {
        Self { t_us, v_ref, p }
    }
}

/// Anchors measured at 85 C with a 1.0 V supply.
pub const DEFAULT_ANCHORS: [Anchor; 3] = [
    Anchor::new(1.3, 0.5, 0.01),
    Anchor::new(12.57, 0.8, 0.01),
    Anchor::new(13.0, 0.8, 0.25),
];

pub const DEFAULT_VDD: f64 = 1.0;

fn std_normal() -> Normal {
    Normal::standard()
}

fn probit(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

fn phi(z: f64) -> f64 {
    std_normal().cdf(z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionCalibration {
    pub v_dd: f64,
    pub sigma: f64,
    pub beta: f64,
    /// Median-crossing scale in microseconds.
    #[serde(rename = "A")]
    pub a_us: f64,
    pub anchors: Vec<Anchor>,
}

impl Default for RetentionCalibration {
    fn default() -> Self {
        calibrate(&DEFAULT_ANCHORS, DEFAULT_VDD).expect("default anchors are consistent")
    }
}

/// Fits `ln t = ln A + beta * ln g(v) + sigma * z(p)` to the anchors.
///
/// Three anchors determine the model exactly; more are fitted in the least
/// squares sense.
pub fn calibrate(anchors: &[Anchor], v_dd: f64) -> Result<RetentionCalibration> {
    if !(v_dd > 0.0 && v_dd.is_finite()) {
        return Err(Error::Domain(format!("v_dd must be positive, got {v_dd}")));
    }
    if anchors.len() < 3 {
        return Err(Error::Calibration(format!(
            "need at least 3 anchors, got {}",
            anchors.len()
        )));
    }
    for a in anchors {
        if !(a.t_us > 0.0 && a.t_us.is_finite()) {
            return Err(Error::Calibration(format!("anchor time must be positive: {a:?}")));
        }
        if !(a.p > 0.0 && a.p < 1.0) {
            return Err(Error::Calibration(format!(
                "anchor probability must be in (0,1): {a:?}"
            )));
        }
        if !(a.v_ref > 0.0 && a.v_ref < v_dd) {
            return Err(Error::Calibration(format!("anchor V_REF must be in (0, v_dd): {a:?}")));
        }
    }
    let mut vrefs: Vec<f64> = anchors.iter().map(|a| a.v_ref).collect();
    vrefs.sort_by(f64::total_cmp);
    vrefs.dedup();
    if vrefs.len() < 2 {
        return Err(Error::Calibration(
            "anchors must span at least two distinct V_REF values; the V_REF exponent is undetermined".into(),
        ));
    }

    let rows: Vec<([f64; 3], f64)> = anchors
        .iter()
        .map(|a| {
            let lg = g(a.v_ref, v_dd).ln();
            ([1.0, lg, probit(a.p)], a.t_us.ln())
        })
        .collect();

    let (m, rhs) = if rows.len() == 3 {
        let m = [rows[0].0, rows[1].0, rows[2].0];
        (m, [rows[0].1, rows[1].1, rows[2].1])
    } else {
        let mut m = [[0.0; 3]; 3];
        let mut rhs = [0.0; 3];
        for (x, y) in &rows {
            for i in 0..3 {
                rhs[i] += x[i] * y;
                for j in 0..3 {
                    m[i][j] += x[i] * x[j];
                }
            }
        }
        (m, rhs)
    };
    let [ln_a, beta, sigma] = solve3(m, rhs)
        .ok_or_else(|| Error::Calibration("anchors do not determine sigma, beta and A independently".into()))?;

    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Calibration(format!("fitted sigma {sigma} is not positive")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Calibration(format!("fitted beta {beta} is not positive")));
    }
    let a_us = ln_a.exp();
    if !(a_us > 0.0 && a_us.is_finite()) {
        return Err(Error::Calibration(format!("fitted A {a_us} is not positive")));
    }
    Ok(RetentionCalibration {
        v_dd,
        sigma,
        beta,
        a_us,
        anchors: anchors.to_vec(),
    })
}

/// Gaussian elimination with partial pivoting. `None` when singular.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m.iter().flat_map(|r| r.iter()).fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() <= 1e-10 * scale {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (dst, src) in m[row].iter_mut().zip(pivot_row).skip(col) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Some(x)
}

fn g(v_ref: f64, v_dd: f64) -> f64 {
    -(1.0 - v_ref / v_dd).ln()
}

/// Crossing-time law at one `V_REF`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingLaw {
    pub median_us: f64,
    pub sigma: f64,
}

impl CrossingLaw {
    pub fn cdf(&self, t_us: f64) -> f64 {
        if t_us <= 0.0 {
            return 0.0;
        }
        phi((t_us.ln() - self.median_us.ln()) / self.sigma)
    }

    pub fn quantile(&self, p: f64) -> f64 {
        self.median_us * (self.sigma * probit(p)).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.median_us * (self.sigma * z).exp()
    }
}

impl RetentionCalibration {
    /// Checks a calibration loaded from outside `calibrate`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("v_dd", self.v_dd),
            ("sigma", self.sigma),
            ("beta", self.beta),
            ("A", self.a_us),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Calibration(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn check_vref(&self, v_ref: f64) -> Result<()> {
        if v_ref > 0.0 && v_ref < self.v_dd {
            Ok(())
        } else {
            Err(Error::Domain(format!("V_REF {v_ref} V outside (0, {}) V", self.v_dd)))
        }
    }

    /// Median crossing time `t50(v_ref)` in microseconds.
    pub fn median_crossing_us(&self, v_ref: f64) -> Result<f64> {
        self.check_vref(v_ref)?;
        Ok(self.a_us * g(v_ref, self.v_dd).powf(self.beta))
    }

    pub fn law(&self, v_ref: f64) -> Result<CrossingLaw> {
        Ok(CrossingLaw {
            median_us: self.median_crossing_us(v_ref)?,
            sigma: self.sigma,
        })
    }

    /// True when `v_ref` lies outside the V_REF span covered by the anchors.
    pub fn is_extrapolated(&self, v_ref: f64) -> bool {
        let (lo, hi) = self
            .anchors
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
                (lo.min(a.v_ref), hi.max(a.v_ref))
            });
        v_ref < lo || v_ref > hi
    }

    /// Probability that a stored 0 reads as 1 after `t_us` microseconds.
    pub fn flip_probability(&self, t_us: f64, v_ref: f64) -> Result<f64> {
        if !(t_us >= 0.0) {
            return Err(Error::Domain(format!("elapsed time must be >= 0, got {t_us}")));
        }
        Ok(self.law(v_ref)?.cdf(t_us))
    }

    /// Draws one crossing time in microseconds.
    pub fn sample_crossing_time<R: Rng + ?Sized>(&self, v_ref: f64, rng: &mut R) -> Result<f64> {
        Ok(self.law(v_ref)?.sample(rng))
    }

    /// Longest dwell time whose flip probability stays at `target_p`.
    pub fn refresh_interval(&self, v_ref: f64, target_p: f64) -> Result<f64> {
        if !(target_p > 0.0 && target_p < 1.0) {
            return Err(Error::Domain(format!(
                "target probability must be in (0,1), got {target_p}"
            )));
        }
        Ok(self.law(v_ref)?.quantile(target_p))
    }

    pub fn generate_curve(&self, v_ref: f64, t_max_us: f64, n_points: usize) -> Result<FlipCurve> {
        if n_points < 2 {
            return Err(Error::Domain(format!("curve needs at least 2 points, got {n_points}")));
        }
        if !(t_max_us > 0.0 && t_max_us.is_finite()) {
            return Err(Error::Domain(format!("t_max must be positive, got {t_max_us}")));
        }
        let law = self.law(v_ref)?;
        let step = t_max_us / (n_points - 1) as f64;
        let samples = (0..n_points)
            .map(|i| {
                let t = step * i as f64;
                (t, law.cdf(t))
            })
            .collect();
        Ok(FlipCurve {
            v_ref,
            samples,
            extrapolated: self.is_extrapolated(v_ref),
        })
    }

    /// Monte Carlo estimate of the flip probability from `n` sampled cells.
    ///
    /// Samples are drawn in fixed-size chunks, each from its own ChaCha
    /// stream of `seed`, so the result does not depend on thread count.
    pub fn monte_carlo_flip_probability(&self, t_us: f64, v_ref: f64, n: u64, seed: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::EmptyInput("Monte Carlo with zero samples"));
        }
        let law = self.law(v_ref)?;
        let chunks = n.div_ceil(MC_CHUNK);
        let flips: u64 = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(c);
                let len = MC_CHUNK.min(n - c * MC_CHUNK);
                (0..len).filter(|_| law.sample(&mut rng) <= t_us).count() as u64
            })
            .sum();
        Ok(flips as f64 / n as f64)
    }
}

/// Analytic flip probability sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipCurve {
    pub v_ref: f64,
    /// `(t_us, p)` pairs.
    pub samples: Vec<(f64, f64)>,
    /// Set when `v_ref` lies outside the calibrated V_REF span.
    pub extrapolated: bool,
}

impl FlipCurve {
    /// First time at which the curve reaches `p`, linearly interpolated
    /// between grid points.
    pub fn crossing_time(&self, p: f64) -> Option<f64> {
        let idx = self.samples.iter().position(|&(_, q)| q >= p)?;
        if idx == 0 {
            return Some(self.samples[0].0);
        }
        let (t0, p0) = self.samples[idx - 1];
        let (t1, p1) = self.samples[idx];
        if p1 == p0 {
            return Some(t1);
        }
        Some(t0 + (p - p0) / (p1 - p0) * (t1 - t0))
    }
}

/// Writes curves as `v_ref,t_us,p_flip` CSV.
pub fn write_curves_csv<W: std::io::Write>(curves: &[FlipCurve], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["v_ref", "t_us", "p_flip"])?;
    for c in curves {
        for &(t, p) in &c.samples {
            w.write_record([c.v_ref.to_string(), t.to_string(), p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
