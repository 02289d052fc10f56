//! Uniform sampling of cross-class index pairs without replacement.
//!
//! Cross-class pairs are addressed by a linear index over the blocks
//! `class c x class c'` (`c < c'`), so sampling never materializes the full
//! pair list.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{PlaceError, Result};

#[derive(Debug, Clone)]
pub struct CrossPairs {
    members: Vec<Vec<usize>>,
    blocks: Vec<(usize, usize, usize)>,
    total: usize,
}

impl CrossPairs {
    pub fn new(labels: &[usize]) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        let mut members = vec![Vec::new(); k];
        for (i, &y) in labels.iter().enumerate() {
            members[y].push(i);
        }
        let present = members.iter().filter(|m| !m.is_empty()).count();
        if present < 2 {
            return Err(PlaceError::TooFewClasses {
                needed: 2,
                got: present,
            });
        }
        let mut blocks = Vec::new();
        let mut total = 0;
        for a in 0..k {
            for b in (a + 1)..k {
                let size = members[a].len() * members[b].len();
                if size > 0 {
                    blocks.push((a, b, total));
                    total += size;
                }
            }
        }
        Ok(Self {
            members,
            blocks,
            total,
        })
    }

    /// Number of unordered cross-class pairs.
    pub fn total(&self) -> usize {
        self.total
    }

    /// The pair at linear position `pos < total()`, as `(i, j)` with `i` in the
    /// smaller class.
    pub fn get(&self, pos: usize) -> (usize, usize) {
        let b = self.blocks.partition_point(|&(_, _, off)| off <= pos) - 1;
        let (ca, cb, off) = self.blocks[b];
        let local = pos - off;
        let width = self.members[cb].len();
        (
            self.members[ca][local / width],
            self.members[cb][local % width],
        )
    }

    /// `min(amount, total)` distinct pairs in seeded random order.
    pub fn sample(&self, amount: usize, seed: u64) -> Vec<(usize, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let amount = amount.min(self.total);
        index::sample(&mut rng, self.total, amount)
            .into_iter()
            .map(|p| self.get(p))
            .collect()
    }
}
