use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Player id of the infrastructure provider.
pub const INP: usize = 0;
/// Largest supported player count (InP included).
pub const MAX_PLAYERS: usize = 16;

/// A coalition, stored as a bitmask over `count` players.
///
/// Bit 0 is the InP, bit `i` is SP `i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlayerSet {
    bits: u32,
    count: u8,
}

impl PlayerSet {
    pub fn new(bits: u32, count: usize) -> Result<Self> {
        check_count(count)?;
        if bits >> count != 0 {
            return Err(Error::invalid("coalition", format!("bits {bits:#b} exceed {count} players")));
        }
        Ok(Self { bits, count: count as u8 })
    }

    pub fn empty(count: usize) -> Result<Self> {
        Self::new(0, count)
    }

    pub fn grand(count: usize) -> Result<Self> {
        check_count(count)?;
        Ok(Self { bits: full_mask(count), count: count as u8 })
    }

    pub fn from_members(members: &[usize], count: usize) -> Result<Self> {
        check_count(count)?;
        let mut bits = 0;
        for &i in members {
            if i >= count {
                return Err(Error::invalid("coalition", format!("player {i} out of range for {count} players")));
            }
            bits |= 1 << i;
        }
        Ok(Self { bits, count: count as u8 })
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Total number of players in the game, not in this coalition.
    pub fn count(self) -> usize {
        self.count as usize
    }

    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    pub fn is_grand(self) -> bool {
        self.bits == full_mask(self.count())
    }

    pub fn contains(self, player: usize) -> bool {
        player < self.count() && self.bits >> player & 1 == 1
    }

    pub fn has_inp(self) -> bool {
        self.contains(INP)
    }

    /// True when the coalition can install anything at all: the InP and at least one SP.
    pub fn is_productive(self) -> bool {
        self.has_inp() && self.len() >= 2
    }

    pub fn with(self, player: usize) -> Self {
        debug_assert!(player < self.count());
        Self { bits: self.bits | 1 << player, ..self }
    }

    pub fn without(self, player: usize) -> Self {
        Self { bits: self.bits & !(1 << player), ..self }
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn complement(self) -> Self {
        Self { bits: !self.bits & full_mask(self.count()), ..self }
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let bits = self.bits;
        (0..self.count()).filter(move |i| bits >> i & 1 == 1)
    }

    /// Member SPs, in increasing id order.
    pub fn sps(self) -> impl Iterator<Item = usize> {
        self.members().filter(|&i| i != INP)
    }

    /// Every coalition of a `count`-player game, ordered by bitmask.
    pub fn all(count: usize) -> impl Iterator<Item = Self> {
        let count = count as u8;
        (0..=full_mask(count as usize)).map(move |bits| Self { bits, count })
    }

    /// Every subset of `self`, including the empty set and `self`.
    pub fn subsets(self) -> impl Iterator<Item = Self> {
        let full = self.bits;
        let count = self.count;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full { None } else { Some((cur.wrapping_sub(full)) & full) };
            Some(Self { bits: cur, count })
        })
    }

    /// `name1+name2`, or `empty`.
    pub fn label(self, names: &[String]) -> String {
        if self.is_empty() {
            return "empty".to_string();
        }
        self.members().map(|i| names.get(i).cloned().unwrap_or_else(|| i.to_string())).collect::<Vec<_>>().join("+")
    }
}

impl fmt::Debug for PlayerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

fn full_mask(count: usize) -> u32 {
    if count >= 32 {
        u32::MAX
    } else {
        (1u32 << count) - 1
    }
}

fn check_count(count: usize) -> Result<()> {
    if !(2..=MAX_PLAYERS).contains(&count) {
        return Err(Error::invalid(
            "players",
            format!("need between 2 and {MAX_PLAYERS} players (InP included), got {count}"),
        ));
    }
    Ok(())
}
