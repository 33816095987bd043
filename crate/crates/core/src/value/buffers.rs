use std::collections::{HashMap, HashSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Obligation, Tactic};

/// One step of experience at a single obligation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub source: Obligation,
    /// `None` for a dead end.
    pub action: Option<Tactic>,
    pub result: Vec<Obligation>,
    pub dead_end: bool,
}

impl Transition {
    pub fn step(source: Obligation, action: Tactic, result: Vec<Obligation>) -> Self {
        Transition {
            source,
            action: Some(action),
            result,
            dead_end: false,
        }
    }

    pub fn dead_end(source: Obligation) -> Self {
        Transition {
            source,
            action: None,
            result: Vec::new(),
            dead_end: true,
        }
    }
}

/// Bounded FIFO of transitions; the oldest is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.capacity == 0 {
            return;
        }
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `k` uniform draws with replacement.
    pub fn sample<'a>(&'a self, rng: &mut impl Rng, k: usize) -> Vec<&'a Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..k)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect()
    }
}

/// Minimum known proof length per obligation. Stored lengths only fall.
#[derive(Debug, Clone, Default)]
pub struct TrueTargetBuffer {
    entries: Vec<(Obligation, usize)>,
    index: HashMap<Obligation, usize>,
}

impl TrueTargetBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, ob: &Obligation) -> Option<usize> {
        self.index.get(ob).map(|&i| self.entries[i].1)
    }

    /// Applies the min rule. Returns whether the stored length changed.
    pub fn update(&mut self, ob: &Obligation, found: usize) -> bool {
        assert!(found >= 1, "proof lengths are at least 1");
        match self.index.get(ob) {
            Some(&i) if self.entries[i].1 <= found => false,
            Some(&i) => {
                self.entries[i].1 = found;
                true
            }
            None => {
                self.index.insert(ob.clone(), self.entries.len());
                self.entries.push((ob.clone(), found));
                true
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Obligation, usize)> {
        self.entries.iter()
    }

    pub fn sample<'a>(&'a self, rng: &mut impl Rng, k: usize) -> Vec<&'a (Obligation, usize)> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        (0..k)
            .map(|_| &self.entries[rng.gen_range(0..self.entries.len())])
            .collect()
    }
}

/// Obligations where every top-n tactic errored.
#[derive(Debug, Clone, Default)]
pub struct NegativeBuffer {
    entries: Vec<Obligation>,
    seen: HashSet<Obligation>,
}

impl NegativeBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, ob: &Obligation) -> bool {
        self.seen.contains(ob)
    }

    pub fn insert(&mut self, ob: Obligation) -> bool {
        if self.seen.insert(ob.clone()) {
            self.entries.push(ob);
            true
        } else {
            false
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Obligation> {
        self.entries.iter()
    }

    pub fn sample<'a>(&'a self, rng: &mut impl Rng, k: usize) -> Vec<&'a Obligation> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        (0..k)
            .map(|_| &self.entries[rng.gen_range(0..self.entries.len())])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ob(s: &str) -> Obligation {
        s.parse().unwrap()
    }

    #[test]
    fn min_rule() {
        let mut b = TrueTargetBuffer::new();
        let a = ob("|- Zero = Zero");
        assert!(b.update(&a, 5));
        assert!(b.update(&a, 4));
        assert_eq!(b.get(&a), Some(4));
        assert!(!b.update(&a, 7));
        assert_eq!(b.get(&a), Some(4));
        let c = ob("|- Succ(Zero) = Succ(Zero)");
        b.update(&c, 2);
        assert_eq!(b.get(&c), Some(2));
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn replay_is_bounded_fifo() {
        let mut r = ReplayBuffer::new(2);
        for s in ["|- Zero = Zero", "|- Succ(Zero) = Zero", "|- Zero = Succ(Zero)"] {
            r.push(Transition::dead_end(ob(s)));
        }
        assert_eq!(r.len(), 2);
        assert_eq!(r.iter().next().unwrap().source, ob("|- Succ(Zero) = Zero"));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(r.sample(&mut rng, 5).len(), 5);
        assert!(ReplayBuffer::new(3).sample(&mut rng, 5).is_empty());
    }

    #[test]
    fn negatives_are_a_set() {
        let mut n = NegativeBuffer::new();
        assert!(n.insert(ob("|- Zero = Succ(Zero)")));
        assert!(!n.insert(ob("|- Zero = Succ(Zero)")));
        assert_eq!(n.len(), 1);
    }
}
