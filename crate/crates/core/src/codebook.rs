//! Uniform linear arrays, unitary DFT codebooks and RSSI over sparse channels.
//!
//! Conventions: the array response toward angle `θ` (radians from broadside)
//! has entries `exp(j·2π·d·k·sin θ)`, and the normalized spatial frequency of
//! a direction is `u = d·sin θ` with `d` in wavelengths. A beam `w` measures a
//! path through `wᴴ·a(θ)`, so `a(θ)/√N` is the matched beam for `θ`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SPACING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UlaConfig {
    pub num_elements: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
}

impl UlaConfig {
    pub fn new(num_elements: usize, spacing: f64) -> Result<Self> {
        if num_elements == 0 {
            return Err(Error::InvalidConfig("array needs at least one element".into()));
        }
        if !spacing.is_finite() || spacing <= 0.0 {
            return Err(Error::InvalidConfig(format!("element spacing must be > 0, got {spacing}")));
        }
        Ok(Self { num_elements, spacing })
    }

    /// Half-wavelength spaced array.
    pub fn half_wavelength(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, DEFAULT_SPACING)
    }

    pub fn steering_vector(&self, angle: f64) -> Vec<Complex64> {
        steering_vector(self, angle)
    }
}

pub fn steering_vector(array: &UlaConfig, angle: f64) -> Vec<Complex64> {
    spatial_response(array.num_elements, array.spacing * angle.sin())
}

/// `exp(j·2π·k·u)` for `k = 0..n`.
fn spatial_response(n: usize, u: f64) -> Vec<Complex64> {
    (0..n).map(|k| Complex64::from_polar(1.0, TAU * k as f64 * u)).collect()
}

/// Wraps a normalized spatial frequency into `[-1/2, 1/2)`.
fn wrap_frequency(u: f64) -> f64 {
    let w = u - u.round();
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// A unitary set of beams, stored in angular (label) order.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    array: UlaConfig,
    beams: Vec<Vec<Complex64>>,
    /// Pointing direction of each beam as a spatial frequency in `[-1/2, 1/2)`.
    frequencies: Vec<f64>,
}

impl Codebook {
    pub fn array(&self) -> &UlaConfig {
        &self.array
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn beam(&self, index: usize) -> &[Complex64] {
        &self.beams[index]
    }

    pub fn beams(&self) -> &[Vec<Complex64>] {
        &self.beams
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.frequencies[index]
    }

    /// Main response axis of a beam, or `None` when the beam points into the
    /// invisible region (`|u/d| > 1`, only possible for spacing below λ/2).
    pub fn angle(&self, index: usize) -> Option<f64> {
        let s = self.frequencies[index] / self.array.spacing;
        (s.abs() <= 1.0 + 1e-12).then(|| s.clamp(-1.0, 1.0).asin())
    }

    /// Gram matrix `B^H B`.
    pub fn gram(&self) -> Vec<Vec<Complex64>> {
        self.beams.iter().map(|a| self.beams.iter().map(|b| inner(a, b)).collect()).collect()
    }

    /// Unit-norm beam covering a set of codebook beams.
    ///
    /// A cyclic run of `g` adjacent beams with `g` dividing `N` is covered by
    /// the first `N/g` elements steered to the run's center. Any other set
    /// uses the normalized superposition of its member beams.
    pub fn broad_beam(&self, members: &[usize]) -> Vec<Complex64> {
        let n = self.len();
        if members.len() == 1 {
            return self.beams[members[0]].clone();
        }
        let g = members.len();
        if n.is_multiple_of(g) && is_cyclic_run(members, n) {
            let active = n / g;
            let start = self.frequencies[members[0]];
            let center = start + (g as f64 - 1.0) / (2.0 * n as f64);
            let scale = 1.0 / (active as f64).sqrt();
            let mut w = vec![Complex64::new(0.0, 0.0); n];
            for (k, wk) in w.iter_mut().enumerate().take(active) {
                *wk = Complex64::from_polar(scale, TAU * k as f64 * center);
            }
            return w;
        }
        let scale = 1.0 / (g as f64).sqrt();
        let mut w = vec![Complex64::new(0.0, 0.0); self.array.num_elements];
        for &m in members {
            for (wk, bk) in w.iter_mut().zip(&self.beams[m]) {
                *wk += bk * scale;
            }
        }
        w
    }
}

/// True when `members` are consecutive indices modulo `n`, in order.
fn is_cyclic_run(members: &[usize], n: usize) -> bool {
    members.windows(2).all(|w| w[1] == (w[0] + 1) % n)
}

/// `aᴴ·b`
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// DFT codebook: beam `m` has entries `exp(−j·2π·k·m/N)/√N`. Beams are
/// returned sorted by pointing direction so that label 1 is the leftmost.
pub fn dft_codebook(array: &UlaConfig) -> Codebook {
    let n = array.num_elements;
    let scale = 1.0 / (n as f64).sqrt();
    let mut beams: Vec<(f64, Vec<Complex64>)> = (0..n)
        .map(|m| {
            let w = (0..n).map(|k| Complex64::from_polar(scale, -TAU * (k * m) as f64 / n as f64)).collect();
            (wrap_frequency(-(m as f64) / n as f64), w)
        })
        .collect();
    beams.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (frequencies, beams) = beams.into_iter().unzip();
    Codebook { array: *array, beams, frequencies }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mpc {
    pub tx_angle: f64,
    pub rx_angle: f64,
    pub gain: Complex64,
}

/// Sum of a few discrete paths: `H = Σ g·a_rx(θ_rx)·a_tx(θ_tx)ᴴ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChannelJson", into = "ChannelJson")]
pub struct SparseChannel {
    pub mpcs: Vec<Mpc>,
    pub tx_array: UlaConfig,
    pub rx_array: UlaConfig,
}

impl SparseChannel {
    pub fn new(mpcs: Vec<Mpc>, tx_array: UlaConfig, rx_array: UlaConfig) -> Result<Self> {
        if mpcs.is_empty() {
            return Err(Error::InvalidConfig("channel needs at least one path".into()));
        }
        for m in &mpcs {
            for a in [m.tx_angle, m.rx_angle] {
                if !(-PI / 2.0..=PI / 2.0).contains(&a) {
                    return Err(Error::InvalidConfig(format!("path angle {a} rad outside [-π/2, π/2]")));
                }
            }
        }
        Ok(Self { mpcs, tx_array, rx_array })
    }

    /// Single unit-gain path aligned with one beam of each codebook.
    pub fn on_grid(tx: &Codebook, rx: &Codebook, tx_beam: usize, rx_beam: usize) -> Result<Self> {
        let invisible = || Error::InvalidConfig("beam points into the invisible region".into());
        let mpc = Mpc {
            tx_angle: tx.angle(tx_beam).ok_or_else(invisible)?,
            rx_angle: rx.angle(rx_beam).ok_or_else(invisible)?,
            gain: Complex64::new(1.0, 0.0),
        };
        Self::new(vec![mpc], *tx.array(), *rx.array())
    }

    /// Dense `N_RX × N_TX` channel matrix.
    pub fn matrix(&self) -> Vec<Vec<Complex64>> {
        let (ntx, nrx) = (self.tx_array.num_elements, self.rx_array.num_elements);
        let mut h = vec![vec![Complex64::new(0.0, 0.0); ntx]; nrx];
        for m in &self.mpcs {
            let ar = self.rx_array.steering_vector(m.rx_angle);
            let at = self.tx_array.steering_vector(m.tx_angle);
            for (row, r) in h.iter_mut().zip(&ar) {
                for (cell, t) in row.iter_mut().zip(&at) {
                    *cell += m.gain * r * t.conj();
                }
            }
        }
        h
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.matrix().iter().flatten().map(|c| c.norm_sqr()).sum()
    }

    /// Noiseless beamformed output `w_rxᴴ·H·w_tx`.
    pub fn response(&self, tx_beam: &[Complex64], rx_beam: &[Complex64]) -> Result<Complex64> {
        check_len(self.tx_array.num_elements, tx_beam.len())?;
        check_len(self.rx_array.num_elements, rx_beam.len())?;
        Ok(self
            .mpcs
            .iter()
            .map(|m| {
                let rx_gain = inner(rx_beam, &self.rx_array.steering_vector(m.rx_angle));
                let tx_gain = inner(&self.tx_array.steering_vector(m.tx_angle), tx_beam);
                m.gain * rx_gain * tx_gain
            })
            .sum())
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// `|w_rxᴴ·H·w_tx|`
pub fn rssi(channel: &SparseChannel, tx_beam: &[Complex64], rx_beam: &[Complex64]) -> Result<f64> {
    channel.response(tx_beam, rx_beam).map(|c| c.norm())
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct MpcJson {
    tx_angle_rad: f64,
    rx_angle_rad: f64,
    gain_re: f64,
    gain_im: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ChannelJson {
    mpcs: Vec<MpcJson>,
    ntx: usize,
    nrx: usize,
    #[serde(default = "default_spacing", skip_serializing_if = "is_default_spacing")]
    spacing: f64,
}

fn default_spacing() -> f64 {
    DEFAULT_SPACING
}

fn is_default_spacing(s: &f64) -> bool {
    *s == DEFAULT_SPACING
}

impl TryFrom<ChannelJson> for SparseChannel {
    type Error = Error;

    fn try_from(j: ChannelJson) -> Result<Self> {
        let mpcs = j
            .mpcs
            .into_iter()
            .map(|m| Mpc {
                tx_angle: m.tx_angle_rad,
                rx_angle: m.rx_angle_rad,
                gain: Complex64::new(m.gain_re, m.gain_im),
            })
            .collect();
        SparseChannel::new(mpcs, UlaConfig::new(j.ntx, j.spacing)?, UlaConfig::new(j.nrx, j.spacing)?)
    }
}

impl From<SparseChannel> for ChannelJson {
    fn from(c: SparseChannel) -> Self {
        ChannelJson {
            mpcs: c
                .mpcs
                .iter()
                .map(|m| MpcJson {
                    tx_angle_rad: m.tx_angle,
                    rx_angle_rad: m.rx_angle,
                    gain_re: m.gain.re,
                    gain_im: m.gain.im,
                })
                .collect(),
            ntx: c.tx_array.num_elements,
            nrx: c.rx_array.num_elements,
            spacing: c.tx_array.spacing,
        }
    }
}
