//! Exact Shapley values by enumerating every coalition.

use crate::error::{Result, ValuationError};
use crate::scalar::Scalar;

/// Largest player count accepted for exhaustive enumeration (2^24 utilities).
pub const MAX_PLAYERS: usize = 24;

/// Utility of every coalition, indexed by bitmask (bit `i` set = player `i` present).
///
/// The empty coalition is fixed at zero utility.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionTable<T> {
    n_players: usize,
    utilities: Vec<T>,
    filled: Vec<u64>,
}

impl<T: Scalar> CoalitionTable<T> {
    pub fn new(n_players: usize) -> Result<Self> {
        if n_players == 0 {
            return Err(ValuationError::Empty("player set"));
        }
        if n_players > MAX_PLAYERS {
            return Err(ValuationError::TooManyPlayers {
                n: n_players,
                cap: MAX_PLAYERS,
            });
        }
        let size = 1usize << n_players;
        let mut filled = vec![0u64; size.div_ceil(64)];
        filled[0] |= 1;
        Ok(Self {
            n_players,
            utilities: vec![T::zero(); size],
            filled,
        })
    }

    /// Builds a complete table by evaluating `utility` on every nonempty coalition.
    pub fn from_fn<E>(
        n_players: usize,
        mut utility: impl FnMut(usize) -> std::result::Result<T, E>,
    ) -> std::result::Result<Self, E>
    where
        E: From<ValuationError>,
    {
        let mut table = Self::new(n_players)?;
        for mask in 1..table.utilities.len() {
            let u = utility(mask)?;
            table.set(mask, u)?;
        }
        Ok(table)
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn set(&mut self, mask: usize, utility: T) -> Result<()> {
        if mask == 0 || mask >= self.utilities.len() {
            return Err(ValuationError::MaskOutOfRange {
                mask,
                n: self.n_players,
            });
        }
        self.utilities[mask] = utility;
        self.filled[mask / 64] |= 1 << (mask % 64);
        Ok(())
    }

    pub fn get(&self, mask: usize) -> Option<T> {
        let set = self.filled.get(mask / 64)? & (1 << (mask % 64)) != 0;
        set.then(|| self.utilities[mask])
    }

    /// Number of nonempty coalitions still unset.
    pub fn missing(&self) -> usize {
        let set: u32 = self.filled.iter().map(|w| w.count_ones()).sum();
        self.utilities.len() - set as usize
    }

    pub fn is_complete(&self) -> bool {
        self.missing() == 0
    }

    /// Utility of the coalition of all players.
    pub fn grand(&self) -> T {
        self.utilities[self.utilities.len() - 1]
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Exact Shapley value of every player.
///
/// Marginal contributions are summed per coalition size before weighting, so
/// players whose contributions coincide for every size get bitwise-equal values.
pub fn canonical_shapley<T: Scalar>(table: &CoalitionTable<T>) -> Result<Vec<T>> {
    let missing = table.missing();
    if missing > 0 {
        return Err(ValuationError::IncompleteTable { missing });
    }
    let n = table.n_players;
    let u = &table.utilities;
    let mut by_size = vec![vec![T::zero(); n]; n];
    for mask in 0..u.len() {
        let size = mask.count_ones() as usize;
        for (player, sums) in by_size.iter_mut().enumerate() {
            let bit = 1 << player;
            if mask & bit == 0 {
                sums[size] = sums[size] + (u[mask | bit] - u[mask]);
            }
        }
    }
    let nt = T::from_count(n);
    let weights: Vec<T> = (0..n)
        .map(|s| T::one() / (nt * T::from_count(binomial(n - 1, s))))
        .collect();
    Ok(by_size
        .into_iter()
        .map(|sums| {
            sums.into_iter()
                .zip(&weights)
                .fold(T::zero(), |acc, (s, &w)| acc + w * s)
        })
        .collect())
}
