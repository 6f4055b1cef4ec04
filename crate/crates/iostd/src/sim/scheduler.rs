use std::fmt;

/// Resolves the nondeterminism of a single run: which channel delivers
/// next and which successor a step takes. `Exhaustive` belongs to the
/// explorer, which follows every choice.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Scheduler {
    SeededRandom { seed: u64 },
    RoundRobin,
    Exhaustive { bound: usize },
}

impl Scheduler {
    pub fn name(&self) -> &'static str {
        match self {
            Scheduler::SeededRandom { .. } => "random",
            Scheduler::RoundRobin => "roundrobin",
            Scheduler::Exhaustive { .. } => "exhaustive",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Scheduler::SeededRandom { seed } => Some(*seed),
            _ => None,
        }
    }

    /// Pick one of `n` candidates for the `counter`-th choice of the
    /// run. A pure function of (seed, counter, n), so identical runs make
    /// identical choices.
    pub(crate) fn choose(&self, counter: u64, n: usize) -> usize {
        debug_assert!(n > 0);
        match self {
            Scheduler::SeededRandom { seed } => {
                (splitmix64(seed ^ splitmix64(counter.wrapping_add(1))) % n as u64) as usize
            }
            Scheduler::RoundRobin => (counter % n as u64) as usize,
            Scheduler::Exhaustive { .. } => 0,
        }
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_choice_is_a_pure_function() {
        let s = Scheduler::SeededRandom { seed: 7 };
        for counter in 0..32 {
            assert_eq!(s.choose(counter, 5), s.choose(counter, 5));
        }
    }

    #[test]
    fn seeds_disagree_somewhere() {
        let a = Scheduler::SeededRandom { seed: 1 };
        let b = Scheduler::SeededRandom { seed: 2 };
        assert!((0..64).any(|c| a.choose(c, 7) != b.choose(c, 7)));
    }

    #[test]
    fn round_robin_cycles() {
        let s = Scheduler::RoundRobin;
        let picks: Vec<usize> = (0..6).map(|c| s.choose(c, 3)).collect();
        assert_eq!(picks, vec![0, 1, 2, 0, 1, 2]);
    }
}
