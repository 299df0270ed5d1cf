use crate::error::{Error, Result};
use crate::rng::RngStream;

/// A configuration in `{-1, +1}^I`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfig(Vec<i8>);

/// Macroscopic mode of a configuration, by the sign of its mean spin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    Plus,
    Minus,
}

impl Mode {
    /// Zero mean spin counts as `Plus`.
    pub fn of_mean_spin(m: f64) -> Self {
        if m >= 0.0 {
            Mode::Plus
        } else {
            Mode::Minus
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Plus => "+1",
            Mode::Minus => "-1",
        }
    }
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(pos) = spins.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidInput(format!(
                "spin {pos} has value {}, expected -1 or +1",
                spins[pos]
            )));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn all_down(n: usize) -> Self {
        Self(vec![-1; n])
    }

    pub fn uniform(n: usize, rng: &mut RngStream) -> Self {
        let mut spins = Vec::with_capacity(n);
        let mut bits = 0u64;
        for k in 0..n {
            if k % 64 == 0 {
                bits = rng.next_u64();
            }
            spins.push(if bits & 1 == 1 { 1 } else { -1 });
            bits >>= 1;
        }
        Self(spins)
    }

    /// Configuration whose bit `i` of `index` set means `s_i = +1`.
    pub fn from_index(index: u64, n: usize) -> Self {
        debug_assert!(n <= 64);
        Self(
            (0..n)
                .map(|i| if index >> i & 1 == 1 { 1 } else { -1 })
                .collect(),
        )
    }

    /// Inverse of [`SpinConfig::from_index`].
    pub fn index(&self) -> u64 {
        debug_assert!(self.0.len() <= 64);
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &v)| if v > 0 { acc | 1 << i } else { acc })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    #[inline]
    pub fn set_up(&mut self, i: usize, up: bool) {
        self.0[i] = if up { 1 } else { -1 };
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn magnetization(&self) -> i64 {
        self.0.iter().map(|&v| i64::from(v)).sum()
    }

    pub fn mean_spin(&self) -> f64 {
        self.magnetization() as f64 / self.0.len() as f64
    }

    pub fn mode(&self) -> Mode {
        Mode::of_mean_spin(self.mean_spin())
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [i8] {
        &mut self.0
    }
}
