//! Downlink side: Rayleigh channel, QPSK symbols, multiuser interference.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{complex_gaussian, complex_gaussian_matrix, rng_from_seed};
use crate::signal::{ComplexMatrix, Scenario};

/// Channel, intended symbols and noise level of one communication frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CommFrame {
    /// M×N_t flat Rayleigh channel H.
    pub channel: ComplexMatrix,
    /// M×P constellation symbols S.
    pub symbols: ComplexMatrix,
    pub noise_power: f64,
}

impl CommFrame {
    pub fn new(channel: ComplexMatrix, symbols: ComplexMatrix, noise_power: f64) -> Result<Self> {
        if channel.nrows() != symbols.nrows() {
            return Err(Error::InvalidArgument(format!(
                "channel has {} users, symbols {}",
                channel.nrows(),
                symbols.nrows()
            )));
        }
        Ok(Self {
            channel,
            symbols,
            noise_power,
        })
    }

    /// Channel and symbols drawn from the two seeds, sized by `scenario`.
    pub fn draw(scenario: &Scenario, channel_seed: u64, symbol_seed: u64) -> Result<Self> {
        let h = gen_channel(scenario, channel_seed);
        let s = gen_symbols(scenario.n_users, scenario.n_slots, symbol_seed)?;
        Self::new(h, s, scenario.comm_noise_power)
    }
}

/// M×N_t matrix of i.i.d. CN(0, 1) entries.
pub fn gen_channel(scenario: &Scenario, seed: u64) -> ComplexMatrix {
    let mut rng = rng_from_seed(seed);
    complex_gaussian_matrix(&mut rng, scenario.n_users, scenario.n_tx, 1.0)
}

/// Uniform unit-power QPSK symbols `(±1 ± j)/√2`.
pub fn gen_symbols(n_users: usize, n_slots: usize, seed: u64) -> Result<ComplexMatrix> {
    if n_users == 0 || n_slots == 0 {
        return Err(Error::InvalidArgument(
            "symbol matrix needs positive dimensions".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let mut s = ComplexMatrix::zeros(n_users, n_slots);
    for p in 0..n_slots {
        for m in 0..n_users {
            let bits: u8 = rng.random_range(0..4);
            let re = if bits & 1 == 0 {
                FRAC_1_SQRT_2
            } else {
                -FRAC_1_SQRT_2
            };
            let im = if bits & 2 == 0 {
                FRAC_1_SQRT_2
            } else {
                -FRAC_1_SQRT_2
            };
            s[(m, p)] = Complex64::new(re, im);
        }
    }
    Ok(s)
}

/// The three MUI normalizations of `Ξ = H·X − S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuiMetrics {
    pub frobenius: f64,
    pub frobenius_sq: f64,
    /// `‖Ξ‖_F² / (M·P)`.
    pub per_symbol_avg: f64,
}

pub fn mui(
    channel: &ComplexMatrix,
    x: &ComplexMatrix,
    symbols: &ComplexMatrix,
) -> Result<MuiMetrics> {
    if channel.ncols() != x.nrows()
        || channel.nrows() != symbols.nrows()
        || x.ncols() != symbols.ncols()
    {
        return Err(Error::InvalidArgument(format!(
            "mui dimensions: H {}x{}, X {}x{}, S {}x{}",
            channel.nrows(),
            channel.ncols(),
            x.nrows(),
            x.ncols(),
            symbols.nrows(),
            symbols.ncols()
        )));
    }
    let xi = channel * x - symbols;
    let frobenius_sq = xi.norm_squared();
    Ok(MuiMetrics {
        frobenius: frobenius_sq.sqrt(),
        frobenius_sq,
        per_symbol_avg: frobenius_sq / (symbols.nrows() * symbols.ncols()) as f64,
    })
}

/// Received user signal `Y_c = H·X + N_c`.
pub fn simulate_comm_rx(frame: &CommFrame, x: &ComplexMatrix, seed: u64) -> Result<ComplexMatrix> {
    if frame.channel.ncols() != x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "channel expects {} antennas, waveform has {}",
            frame.channel.ncols(),
            x.nrows()
        )));
    }
    let mut y = &frame.channel * x;
    if frame.noise_power > 0.0 {
        let mut rng = rng_from_seed(seed);
        for j in 0..y.ncols() {
            for i in 0..y.nrows() {
                y[(i, j)] += complex_gaussian(&mut rng, frame.noise_power);
            }
        }
    }
    Ok(y)
}
