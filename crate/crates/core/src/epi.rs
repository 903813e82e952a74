//! Epidemic layer: asynchronous SIS updates with awareness-attenuated
//! infection and the two awareness couplings (infection sets it, recovery
//! clears it).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{AgentState, Awareness, Infection};
use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpiParams {
    /// Per-contact infection probability for unaware agents.
    pub beta: f64,
    /// Recovery probability.
    pub mu: f64,
    /// Attenuation for aware agents: their per-contact rate is `epsilon * beta`.
    pub epsilon: f64,
    pub rho_i0: f64,
    pub infection_sets_aware: bool,
    pub recovery_resets_aware: bool,
}

impl Default for EpiParams {
    fn default() -> Self {
        EpiParams {
            beta: 0.05,
            mu: 0.01,
            epsilon: 0.0,
            rho_i0: 0.2,
            infection_sets_aware: true,
            recovery_resets_aware: true,
        }
    }
}

impl EpiParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64, field: &str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(field, format!("{v} must lie in [0, 1]")))
            }
        };
        unit(self.beta, "epi.beta")?;
        unit(self.mu, "epi.mu")?;
        unit(self.epsilon, "epi.epsilon")?;
        unit(self.rho_i0, "epi.rho_i0")
    }

    #[inline]
    pub fn effective_beta(&self, aware: bool) -> f64 {
        if aware {
            self.epsilon * self.beta
        } else {
            self.beta
        }
    }
}

/// Probability that a susceptible node with `infected_neighbours` infected
/// contacts becomes infected in one update: `1 - (1 - β_eff)^k`.
#[inline]
pub fn infection_probability(aware: bool, infected_neighbours: usize, p: &EpiParams) -> f64 {
    if infected_neighbours == 0 {
        return 0.0;
    }
    let escape = 1.0 - p.effective_beta(aware);
    1.0 - escape.powi(infected_neighbours.min(i32::MAX as usize) as i32)
}

pub fn infected_neighbours(g: &Graph, states: &[AgentState], i: usize) -> usize {
    g.neighbors(i)
        .iter()
        .filter(|&&j| states[j as usize].is_infected())
        .count()
}

/// Independent Bernoulli(`rho_i0`) infection of every node.
pub fn init_epidemic<R: Rng + ?Sized>(states: &mut [AgentState], p: &EpiParams, rng: &mut R) {
    for s in states.iter_mut() {
        s.infection = if rng.gen_bool(p.rho_i0) {
            Infection::Infected
        } else {
            Infection::Susceptible
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpiOutcome {
    Infected,
    Recovered,
    Unchanged,
}

/// One SIS update on a uniformly chosen node. Draws the node, then exactly one
/// uniform for the transition.
pub fn epi_step<R: Rng + ?Sized>(
    g: &Graph,
    states: &mut [AgentState],
    p: &EpiParams,
    rng: &mut R,
) -> EpiOutcome {
    let i = rng.gen_range(0..g.node_count());
    let u: f64 = rng.gen();
    match states[i].infection {
        Infection::Susceptible => {
            let k = infected_neighbours(g, states, i);
            if u < infection_probability(states[i].is_aware(), k, p) {
                let s = &mut states[i];
                s.infection = Infection::Infected;
                if p.infection_sets_aware {
                    s.opinion.set_awareness(Awareness::Aware);
                }
                EpiOutcome::Infected
            } else {
                EpiOutcome::Unchanged
            }
        }
        Infection::Infected => {
            if u < p.mu {
                let s = &mut states[i];
                s.infection = Infection::Susceptible;
                if p.recovery_resets_aware {
                    s.opinion.set_awareness(Awareness::Unaware);
                }
                EpiOutcome::Recovered
            } else {
                EpiOutcome::Unchanged
            }
        }
    }
}
