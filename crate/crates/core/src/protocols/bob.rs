use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::state::{BlockUnitary, StateVector};

use super::RoundTag;

/// Bob's per-round action on the channel and his own domain.
pub trait Bob {
    fn act(&mut self, round: RoundTag, state: &mut StateVector, channel: &[usize], bob: &[usize]) -> Result<()>;
}

/// Multiplies the channel contents by a fixed phase.
#[derive(Debug, Clone, Copy)]
pub struct PhaseBob {
    pub phase: Complex64,
}

impl PhaseBob {
    /// Phase (−1)^λ.
    pub fn for_bit(lambda: u8) -> Self {
        Self {
            phase: Complex64::new(super::engine::sign(lambda), 0.0),
        }
    }
}

impl Bob for PhaseBob {
    fn act(&mut self, _: RoundTag, state: &mut StateVector, channel: &[usize], _: &[usize]) -> Result<()> {
        for &s in channel {
            state.apply_phase(s, self.phase)?;
        }
        Ok(())
    }
}

/// A fresh Haar-random unitary on C∪B every round, drawn from a seeded stream.
#[derive(Debug, Clone)]
pub struct RandomBob {
    rng: ChaCha8Rng,
}

impl RandomBob {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Bob for RandomBob {
    fn act(&mut self, _: RoundTag, state: &mut StateVector, channel: &[usize], bob: &[usize]) -> Result<()> {
        let slots: Vec<usize> = channel.iter().chain(bob).copied().collect();
        let u = BlockUnitary::random(slots, &mut self.rng)?;
        state.apply_block_unitary(&u)
    }
}

/// The same matrix on C∪B every round; unitarity is not checked.
#[derive(Debug, Clone)]
pub struct MatrixBob {
    pub matrix: DMatrix<Complex64>,
}

impl Bob for MatrixBob {
    fn act(&mut self, _: RoundTag, state: &mut StateVector, channel: &[usize], bob: &[usize]) -> Result<()> {
        let slots: Vec<usize> = channel.iter().chain(bob).copied().collect();
        let u = BlockUnitary::new_unchecked(slots, self.matrix.clone())?;
        state.apply_block_unitary(&u)
    }
}
