//! Observables: pairwise opinion agreement, polarisation ψ, and the aware and
//! infected fractions.

use serde::{Deserialize, Serialize};

use crate::agent::AgentState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    /// `None` when either party partition has no pairs.
    pub psi: Option<f64>,
    pub rho_a: f64,
    pub rho_i: f64,
    pub n_same_pairs: u64,
    pub n_diff_pairs: u64,
}

/// Fraction of equal components among the first `dims` of the two opinion
/// vectors.
pub fn pair_agreement(a: &AgentState, b: &AgentState, dims: usize) -> f64 {
    a.opinion.matches(&b.opinion, dims) as f64 / dims as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PairTotals {
    same_pairs: u64,
    diff_pairs: u64,
    /// Sums of matching-component counts; divide by `dims` for Σ d_ij.
    same_matches: u64,
    diff_matches: u64,
}

impl PairTotals {
    fn psi(&self, dims: usize) -> Result<f64> {
        if self.same_pairs == 0 || self.diff_pairs == 0 {
            return Err(Error::UndefinedMetric(format!(
                "polarisation needs same-party and cross-party pairs (same={}, diff={})",
                self.same_pairs, self.diff_pairs
            )));
        }
        let d = dims as f64;
        let same = self.same_matches as f64 / (d * self.same_pairs as f64);
        let diff = self.diff_matches as f64 / (d * self.diff_pairs as f64);
        Ok(same - diff)
    }
}

fn component_dims(states: &[AgentState], exclude_awareness: bool) -> usize {
    let n = states.first().map_or(0, |s| s.opinion.len());
    if exclude_awareness {
        n.saturating_sub(1)
    } else {
        n
    }
}

/// ψ: mean agreement over same-party pairs minus mean over cross-party pairs.
///
/// Computed from per-component stance histograms by party in
/// `O(N·n + k²·m·n)`. [`polarisation_pairwise`] is the direct `O(N²·n)` form.
pub fn polarisation(states: &[AgentState], exclude_awareness: bool) -> Result<f64> {
    let dims = component_dims(states, exclude_awareness);
    histogram_totals(states, dims).psi(dims)
}

pub fn polarisation_pairwise(states: &[AgentState], exclude_awareness: bool) -> Result<f64> {
    let dims = component_dims(states, exclude_awareness);
    let mut t = PairTotals {
        same_pairs: 0,
        diff_pairs: 0,
        same_matches: 0,
        diff_matches: 0,
    };
    for (i, a) in states.iter().enumerate() {
        for b in &states[i + 1..] {
            let matches = a.opinion.matches(&b.opinion, dims) as u64;
            if a.party == b.party {
                t.same_pairs += 1;
                t.same_matches += matches;
            } else {
                t.diff_pairs += 1;
                t.diff_matches += matches;
            }
        }
    }
    t.psi(dims)
}

fn histogram_totals(states: &[AgentState], dims: usize) -> PairTotals {
    let parties = states.iter().map(|s| s.party.0 as usize + 1).max().unwrap_or(0);
    let values = states
        .iter()
        .flat_map(|s| s.opinion.components()[..dims].iter())
        .map(|&v| v as usize + 1)
        .max()
        .unwrap_or(0);

    let mut party_sizes = vec![0u64; parties];
    // counts[(l * parties + p) * values + v]
    let mut counts = vec![0u64; dims * parties * values];
    for s in states {
        let p = s.party.0 as usize;
        party_sizes[p] += 1;
        for (l, &v) in s.opinion.components()[..dims].iter().enumerate() {
            counts[(l * parties + p) * values + v as usize] += 1;
        }
    }

    let choose2 = |x: u64| x * x.saturating_sub(1) / 2;
    let total: u64 = party_sizes.iter().sum();
    let same_pairs: u64 = party_sizes.iter().map(|&x| choose2(x)).sum();
    let diff_pairs = choose2(total) - same_pairs;

    let mut same_matches = 0;
    let mut all_matches = 0;
    for l in 0..dims {
        for v in 0..values {
            let mut column = 0;
            for p in 0..parties {
                let c = counts[(l * parties + p) * values + v];
                same_matches += choose2(c);
                column += c;
            }
            all_matches += choose2(column);
        }
    }
    PairTotals {
        same_pairs,
        diff_pairs,
        same_matches,
        diff_matches: all_matches - same_matches,
    }
}

pub fn aware_fraction(states: &[AgentState]) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    states.iter().filter(|s| s.is_aware()).count() as f64 / states.len() as f64
}

pub fn infected_fraction(states: &[AgentState]) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    states.iter().filter(|s| s.is_infected()).count() as f64 / states.len() as f64
}

pub fn snapshot(states: &[AgentState], psi_excludes_awareness: bool) -> MetricsSnapshot {
    let dims = component_dims(states, psi_excludes_awareness);
    let totals = histogram_totals(states, dims);
    MetricsSnapshot {
        psi: totals.psi(dims).ok(),
        rho_a: aware_fraction(states),
        rho_i: infected_fraction(states),
        n_same_pairs: totals.same_pairs,
        n_diff_pairs: totals.diff_pairs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{Awareness, Infection, OpinionVector, Party};
    use proptest::prelude::*;

    fn agent(party: u8, comps: &[u8]) -> AgentState {
        let (topics, aware) = comps.split_at(comps.len() - 1);
        AgentState::new(
            Party(party),
            OpinionVector::new(topics, Awareness::from_component(aware[0])),
            Infection::Susceptible,
        )
    }

    #[test]
    fn pair_agreement_examples() {
        let a = agent(0, &[0, 1, 2, 0, 1]);
        assert_eq!(pair_agreement(&a, &a, 5), 1.0);
        let b = agent(1, &[1, 2, 0, 1, 0]);
        assert_eq!(pair_agreement(&a, &b, 5), 0.0);
        let c = agent(1, &[0, 1, 2, 2, 0]);
        assert!((pair_agreement(&a, &c, 5) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn fully_polarised_state_gives_one() {
        let mut states = vec![agent(0, &[0, 0, 0, 0, 0]); 6];
        states.extend(vec![agent(1, &[1, 1, 1, 1, 1]); 5]);
        assert_eq!(polarisation(&states, false).unwrap(), 1.0);
        assert_eq!(polarisation_pairwise(&states, false).unwrap(), 1.0);
    }

    #[test]
    fn homogeneous_state_gives_zero() {
        let mut states = vec![agent(0, &[2, 1, 0, 2, 1]); 6];
        states.extend(vec![agent(1, &[2, 1, 0, 2, 1]); 5]);
        assert_eq!(polarisation(&states, false).unwrap(), 0.0);
    }

    #[test]
    fn single_party_is_undefined() {
        let states = vec![agent(0, &[0, 0, 0, 0, 0]); 4];
        assert!(matches!(
            polarisation(&states, false),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(snapshot(&states, false).psi.is_none());
        // one member per party leaves no same-party pair
        let states = vec![agent(0, &[0, 0, 0, 0, 0]), agent(1, &[0, 0, 0, 0, 0])];
        assert!(polarisation(&states, false).is_err());
    }

    #[test]
    fn fractions() {
        let mut states: Vec<_> = (0..1000)
            .map(|i| agent(0, &[0, 0, 0, 0, u8::from(i < 250)]))
            .collect();
        assert!((aware_fraction(&states) - 0.25).abs() < 1e-15);
        for s in states.iter_mut().take(200) {
            s.infection = Infection::Infected;
        }
        assert!((infected_fraction(&states) - 0.2).abs() < 1e-15);
        let snap = snapshot(&states, false);
        assert_eq!(snap.n_same_pairs + snap.n_diff_pairs, 1000 * 999 / 2);
    }

    #[test]
    fn excluding_awareness_ignores_last_component() {
        let states = vec![
            agent(0, &[0, 0, 1]),
            agent(0, &[0, 0, 0]),
            agent(1, &[1, 1, 1]),
            agent(1, &[1, 1, 0]),
        ];
        assert_eq!(polarisation(&states, true).unwrap(), 1.0);
        assert!(polarisation(&states, false).unwrap() < 1.0);
    }

    fn arb_states() -> impl Strategy<Value = Vec<AgentState>> {
        (2usize..=4, 2u8..=4, 1usize..=5).prop_flat_map(|(k, m, topics)| {
            prop::collection::vec((0..k as u8, prop::collection::vec(0..m, topics), 0u8..2), 4..40).prop_map(
                |rows| {
                    rows.into_iter()
                        .map(|(p, t, a)| {
                            AgentState::new(
                                Party(p),
                                OpinionVector::new(&t, Awareness::from_component(a)),
                                Infection::Susceptible,
                            )
                        })
                        .collect()
                },
            )
        })
    }

    proptest! {
        #[test]
        fn fast_path_matches_pairwise(states in arb_states(), excl in any::<bool>()) {
            let fast = polarisation(&states, excl);
            let slow = polarisation_pairwise(&states, excl);
            match (fast, slow) {
                (Ok(a), Ok(b)) => {
                    prop_assert!((a - b).abs() <= 1e-12);
                    prop_assert!((-1.0..=1.0).contains(&a));
                }
                (Err(_), Err(_)) => {}
                (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
            }
        }

        #[test]
        fn psi_invariant_under_permutation_and_relabelling(
            states in arb_states(),
            rotate in 0usize..40,
        ) {
            let Ok(base) = polarisation(&states, false) else { return Ok(()); };
            let mut permuted = states.clone();
            permuted.reverse();
            let len = permuted.len();
            permuted.rotate_left(rotate % len);
            prop_assert!((polarisation(&permuted, false).unwrap() - base).abs() <= 1e-12);
            let k = states.iter().map(|s| s.party.0).max().unwrap() + 1;
            let relabelled: Vec<_> = states
                .iter()
                .map(|s| AgentState { party: Party((s.party.0 + 1) % k), ..s.clone() })
                .collect();
            prop_assert!((polarisation(&relabelled, false).unwrap() - base).abs() <= 1e-12);
        }

        #[test]
        fn agreement_is_symmetric(states in arb_states()) {
            let dims = states[0].opinion.len();
            for a in &states {
                for b in &states {
                    prop_assert_eq!(pair_agreement(a, b, dims), pair_agreement(b, a, dims));
                }
            }
        }
    }
}
