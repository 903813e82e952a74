//! Per-agent state: a fixed party label, an opinion vector whose last
//! component is the awareness flag, and an SIS compartment.

use serde::{Deserialize, Serialize};

/// Partisan affiliation, `0..k`. Fixed for the lifetime of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Party(pub u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Awareness {
    Unaware = 0,
    Aware = 1,
}

impl Awareness {
    #[inline]
    pub fn from_component(v: u8) -> Awareness {
        if v == 0 {
            Awareness::Unaware
        } else {
            Awareness::Aware
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Infection {
    Susceptible,
    Infected,
}

/// Opinion vector of length `n`: `n - 1` topic stances in `0..m` followed by
/// the awareness flag (`0` = unaware, `1` = aware).
///
/// Stored flat so the awareness component is read, compared and copied exactly
/// like a topic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OpinionVector {
    components: Box<[u8]>,
}

impl OpinionVector {
    pub fn new(topics: &[u8], awareness: Awareness) -> Self {
        let mut components = Vec::with_capacity(topics.len() + 1);
        components.extend_from_slice(topics);
        components.push(awareness as u8);
        OpinionVector {
            components: components.into_boxed_slice(),
        }
    }

    /// Total dimension `n`, awareness included.
    #[inline]
    pub fn len(&self) -> usize {
        self.components.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    #[inline]
    pub fn topics(&self) -> &[u8] {
        &self.components[..self.components.len() - 1]
    }

    #[inline]
    pub fn awareness(&self) -> Awareness {
        Awareness::from_component(self.components[self.components.len() - 1])
    }

    #[inline]
    pub fn set_awareness(&mut self, a: Awareness) {
        let last = self.components.len() - 1;
        self.components[last] = a as u8;
    }

    /// Component `l` (0-based); `l == n - 1` reads the awareness flag.
    #[inline]
    pub fn component(&self, l: usize) -> u8 {
        self.components[l]
    }

    #[inline]
    pub fn set_component(&mut self, l: usize, value: u8) {
        self.components[l] = value;
    }

    #[inline]
    pub fn components(&self) -> &[u8] {
        &self.components
    }

    /// Number of equal components among the first `upto` positions.
    #[inline]
    pub fn matches(&self, other: &OpinionVector, upto: usize) -> usize {
        self.components[..upto]
            .iter()
            .zip(&other.components[..upto])
            .filter(|(a, b)| a == b)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    pub party: Party,
    pub opinion: OpinionVector,
    pub infection: Infection,
}

impl AgentState {
    pub fn new(party: Party, opinion: OpinionVector, infection: Infection) -> Self {
        AgentState {
            party,
            opinion,
            infection,
        }
    }

    #[inline]
    pub fn is_aware(&self) -> bool {
        self.opinion.awareness() == Awareness::Aware
    }

    #[inline]
    pub fn is_infected(&self) -> bool {
        self.infection == Infection::Infected
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn awareness_is_last_component() {
        let mut v = OpinionVector::new(&[0, 2, 1, 1], Awareness::Aware);
        assert_eq!(v.len(), 5);
        assert_eq!(v.topics(), &[0, 2, 1, 1]);
        assert_eq!(v.component(4), 1);
        v.set_component(4, 0);
        assert_eq!(v.awareness(), Awareness::Unaware);
        v.set_awareness(Awareness::Aware);
        assert_eq!(v.component(4), 1);
    }

    #[test]
    fn matches_counts_equal_components() {
        let a = OpinionVector::new(&[0, 1, 2, 0], Awareness::Aware);
        let b = OpinionVector::new(&[0, 2, 2, 1], Awareness::Aware);
        assert_eq!(a.matches(&b, 5), 3);
        assert_eq!(a.matches(&b, 4), 2);
    }
}
