//! Discrete-time ISI channel model and noise calibration.
//!
//! The channel is a unit-energy FIR filter followed by additive white
//! Gaussian noise: `r_k = sum_i h_i a_{k-i} + n_k` with zero prehistory.
//! Noise is complex circular with total variance `sigma2` per sample; when
//! every tap and every constellation point is real the imaginary dimension
//! carries no signal and real noise of variance `sigma2 / 2` is used
//! instead, so the per-dimension density N0/2 is the same in both cases.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constellation::Constellation;
use crate::{Error, Result};

/// Longest supported impulse response (memory up to 8 symbols).
pub const MAX_TAPS: usize = 9;

/// A unit-energy FIR channel with a fixed noise variance.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    taps: Vec<Complex64>,
    sigma2: f64,
}

impl ChannelModel {
    /// Validates taps against the unit-energy convention `sum |h_i|^2 = 1`.
    pub fn new(taps: Vec<Complex64>, sigma2: f64) -> Result<Self> {
        Self::check_shape(&taps)?;
        let energy: f64 = taps.iter().map(|h| h.norm_sqr()).sum();
        if (energy - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "channel taps must have unit energy, got sum |h|^2 = {energy}"
            )));
        }
        if sigma2 < 0.0 || !sigma2.is_finite() {
            return Err(Error::Config(format!("noise variance {sigma2} is invalid")));
        }
        Ok(ChannelModel { taps, sigma2 })
    }

    /// Scales arbitrary nonzero taps to unit energy.
    pub fn normalized(taps: Vec<Complex64>, sigma2: f64) -> Result<Self> {
        Self::check_shape(&taps)?;
        let energy: f64 = taps.iter().map(|h| h.norm_sqr()).sum();
        if energy <= 0.0 || !energy.is_finite() {
            return Err(Error::Config(
                "channel taps must have positive finite energy".into(),
            ));
        }
        let scale = energy.sqrt().recip();
        let scaled = taps.into_iter().map(|h| h * scale).collect();
        if sigma2 < 0.0 || !sigma2.is_finite() {
            return Err(Error::Config(format!("noise variance {sigma2} is invalid")));
        }
        Ok(ChannelModel {
            taps: scaled,
            sigma2,
        })
    }

    fn check_shape(taps: &[Complex64]) -> Result<()> {
        if taps.is_empty() || taps.len() > MAX_TAPS {
            return Err(Error::Config(format!(
                "channel needs 1..={MAX_TAPS} taps, got {}",
                taps.len()
            )));
        }
        if taps.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(Error::Config("channel taps must be finite".into()));
        }
        if taps[0].norm_sqr() == 0.0 {
            return Err(Error::Config("leading channel tap must be nonzero".into()));
        }
        Ok(())
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    /// Channel memory in symbols: `taps.len() - 1`.
    pub fn memory(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn is_real(&self) -> bool {
        self.taps.iter().all(|h| h.im == 0.0)
    }
}

/// One transmitted block and its received samples.
#[derive(Debug, Clone)]
pub struct Frame {
    pub tx: Vec<Complex64>,
    pub rx: Vec<Complex64>,
    pub seed: u64,
    pub config_hash: u64,
}

/// Converts Eb/N0 in dB to the noise variance `sigma2 = N0` under the
/// unit-energy conventions (Es = 1, R information bits per symbol).
pub fn calibrate_noise(ebn0_db: f64, rate_bits_per_symbol: f64) -> Result<f64> {
    if !(rate_bits_per_symbol > 0.0) {
        return Err(Error::Config(format!(
            "rate {rate_bits_per_symbol} bits/symbol must be positive to calibrate Eb/N0"
        )));
    }
    if !ebn0_db.is_finite() {
        return Err(Error::Config(format!("Eb/N0 {ebn0_db} dB is invalid")));
    }
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    Ok(1.0 / (rate_bits_per_symbol * ebn0))
}

#[inline]
fn standard_normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    // Box-Muller transform on open-interval uniforms.
    let u1: f64 = loop {
        let u = rng.gen::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = std::f64::consts::TAU * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Convolves symbols with the channel taps (zero prehistory) and adds
/// Gaussian noise drawn from a ChaCha stream seeded with `seed`.
///
/// Signal energy stays in the real dimension when both the taps and the
/// constellation are real, and the noise does too (variance `sigma2 / 2`);
/// otherwise each sample gets circular complex noise of total variance
/// `sigma2`.
pub fn apply_channel(
    symbols: &[Complex64],
    channel: &ChannelModel,
    constellation: &Constellation,
    seed: u64,
) -> Vec<Complex64> {
    let filtered = convolve(symbols, channel.taps());
    let real_chain = channel.is_real() && constellation.is_real();
    add_noise(filtered, channel.sigma2(), real_chain, seed)
}

/// The FIR part of the channel on its own.
pub fn convolve(symbols: &[Complex64], taps: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(symbols.len());
    for k in 0..symbols.len() {
        // Ascending tap index; decoders must accumulate in the same order
        // so that noiseless metrics cancel exactly.
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, h) in taps.iter().enumerate() {
            if i > k {
                break;
            }
            acc += h * symbols[k - i];
        }
        out.push(acc);
    }
    out
}

fn add_noise(mut samples: Vec<Complex64>, sigma2: f64, real_chain: bool, seed: u64) -> Vec<Complex64> {
    if sigma2 == 0.0 {
        return samples;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if real_chain {
        let scale = (sigma2 / 2.0).sqrt();
        let mut spare: Option<f64> = None;
        for s in &mut samples {
            let z = match spare.take() {
                Some(z) => z,
                None => {
                    let (a, b) = standard_normal_pair(&mut rng);
                    spare = Some(b);
                    a
                }
            };
            s.re += scale * z;
        }
    } else {
        let scale = (sigma2 / 2.0).sqrt();
        for s in &mut samples {
            let (a, b) = standard_normal_pair(&mut rng);
            s.re += scale * a;
            s.im += scale * b;
        }
    }
    samples
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
