//! A single simulation run: initialisation, the interleaved information and
//! epidemic schedule, and metric sampling.
//!
//! Each layer draws from its own PCG stream derived from the run seed, so the
//! run is a pure function of `(graph, Params)`.

use rand::Rng;
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::agent::{AgentState, Awareness, Infection, OpinionVector, Party};
use crate::epi::{epi_step, init_epidemic, EpiOutcome};
use crate::error::Result;
use crate::graph::{generate_holme_kim, Graph};
use crate::info::{info_step, InfoOutcome, InfoWorkspace};
use crate::metrics::snapshot;
use crate::params::Params;
use crate::records::RunRow;
use crate::seed::{layer_rng, EPI_STREAM, INFO_STREAM};

/// Random parties, opinions and awareness from `info_rng`; infection from
/// `epi_rng`.
pub fn init_state<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    g: &Graph,
    p: &Params,
    info_rng: &mut R1,
    epi_rng: &mut R2,
) -> Vec<AgentState> {
    let topics_len = p.info.n - 1;
    let mut topics = vec![0u8; topics_len];
    let mut states: Vec<AgentState> = (0..g.node_count())
        .map(|_| {
            let party = Party(info_rng.gen_range(0..p.info.k) as u8);
            for t in topics.iter_mut() {
                *t = info_rng.gen_range(0..p.info.m) as u8;
            }
            let awareness = if info_rng.gen_bool(p.rho_a0) {
                Awareness::Aware
            } else {
                Awareness::Unaware
            };
            AgentState::new(
                party,
                OpinionVector::new(&topics, awareness),
                Infection::Susceptible,
            )
        })
        .collect();
    init_epidemic(&mut states, &p.epi, epi_rng);
    states
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub step: u64,
    pub psi: Option<f64>,
    pub rho_a: f64,
    pub rho_i: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepCounters {
    pub info_steps: u64,
    pub epi_steps: u64,
    pub adoptions: u64,
    pub no_partner: u64,
    pub infections: u64,
    pub recoveries: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub params: Params,
    pub params_digest: String,
    pub seed: u64,
    /// Ordered by step; always ends with the final state.
    pub samples: Vec<Sample>,
    pub final_sample: Sample,
    pub counters: StepCounters,
}

impl RunRecord {
    fn row(&self, s: &Sample) -> RunRow {
        RunRow {
            gamma: self.params.info.gamma,
            beta: self.params.epi.beta,
            mu: self.params.epi.mu,
            epsilon: self.params.epi.epsilon,
            epi_interval: self.params.epi_interval,
            seed: self.seed,
            step: s.step,
            psi: s.psi,
            rho_a: s.rho_a,
            rho_i: s.rho_i,
        }
    }

    pub fn final_row(&self) -> RunRow {
        self.row(&self.final_sample)
    }

    pub fn time_series_rows(&self) -> Vec<RunRow> {
        self.samples.iter().map(|s| self.row(s)).collect()
    }
}

/// Step-by-step driver for one run.
pub struct Simulation<'g> {
    graph: &'g Graph,
    params: Params,
    states: Vec<AgentState>,
    info_rng: Pcg64,
    epi_rng: Pcg64,
    workspace: InfoWorkspace,
    step: u64,
    counters: StepCounters,
}

impl<'g> Simulation<'g> {
    pub fn new(graph: &'g Graph, params: &Params) -> Result<Self> {
        params.validate()?;
        let mut info_rng = layer_rng(params.seed, INFO_STREAM);
        let mut epi_rng = layer_rng(params.seed, EPI_STREAM);
        let states = init_state(graph, params, &mut info_rng, &mut epi_rng);
        Ok(Simulation {
            graph,
            params: *params,
            states,
            info_rng,
            epi_rng,
            workspace: InfoWorkspace::new(&params.info),
            step: 0,
            counters: StepCounters::default(),
        })
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn counters(&self) -> StepCounters {
        self.counters
    }

    /// One time step: an information update, plus an epidemic update when the
    /// new step index is a multiple of `epi_interval`.
    pub fn advance(&mut self) {
        self.step += 1;
        let outcome = info_step(
            self.graph,
            &mut self.states,
            &self.params.info,
            &mut self.workspace,
            &mut self.info_rng,
        );
        self.counters.info_steps += 1;
        match outcome {
            InfoOutcome::Adopted => self.counters.adoptions += 1,
            InfoOutcome::NoPartner => self.counters.no_partner += 1,
            InfoOutcome::Unchanged | InfoOutcome::Isolated => {}
        }
        if self.step.is_multiple_of(self.params.epi_interval) {
            self.counters.epi_steps += 1;
            match epi_step(self.graph, &mut self.states, &self.params.epi, &mut self.epi_rng) {
                EpiOutcome::Infected => self.counters.infections += 1,
                EpiOutcome::Recovered => self.counters.recoveries += 1,
                EpiOutcome::Unchanged => {}
            }
        }
    }

    pub fn sample(&self) -> Sample {
        let m = snapshot(&self.states, self.params.psi_excludes_awareness);
        Sample {
            step: self.step,
            psi: m.psi,
            rho_a: m.rho_a,
            rho_i: m.rho_i,
        }
    }
}

/// Executes `p.steps` time steps on `g`, sampling at step 0 and every
/// `record_interval` steps (final state only when it is 0).
pub fn run(g: &Graph, p: &Params) -> Result<RunRecord> {
    let mut sim = Simulation::new(g, p)?;
    let mut samples = Vec::new();
    let sampling = p.record_interval > 0;
    if sampling {
        samples.push(sim.sample());
    }
    while sim.step_count() < p.steps {
        sim.advance();
        if sampling && sim.step_count() % p.record_interval == 0 {
            samples.push(sim.sample());
        }
    }
    let final_sample = match samples.last() {
        Some(s) if s.step == p.steps => *s,
        _ => {
            let s = sim.sample();
            samples.push(s);
            s
        }
    };
    Ok(RunRecord {
        params: *p,
        params_digest: p.digest(),
        seed: p.seed,
        samples,
        final_sample,
        counters: sim.counters(),
    })
}

/// Generates the network described by `p.graph` and runs on it.
pub fn run_fresh(p: &Params) -> Result<RunRecord> {
    let g = generate_holme_kim(&p.graph)?;
    run(&g, p)
}
