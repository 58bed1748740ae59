//! (1+lambda) evolutionary search over variable-topology circuits.
//!
//! Each generation copies the parent circuit `offspring` times, applies one
//! random mutation to every copy, evaluates all of them, and keeps the
//! lowest-energy circuit (ties favor the parent, so the recorded trace never
//! increases). Two variants share the machinery:
//!
//! - **AF** starts from `|0...0>` with a free gate pool of nine rotation
//!   kinds and no fixed structure.
//! - **APCD** starts from `|+>^n`, prepends a fixed Trotterized prefix
//!   `U_I(beta) U_0(delta)`, and restricts the evolving suffix to the
//!   pseudo-counterdiabatic pool (RY plus controlled and two-qubit
//!   rotations).

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::IsingModel;
use crate::rng::{derive_seed2, rng_from_seed};
use crate::simulator::{
    expectation_sampled, run_circuit_in_place, Circuit, EvalMode, Gate, GateKind, NoiseModel,
    StateVector,
};

/// Restriction on where two-qubit gates may land.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// Any ordered pair of distinct qubits.
    #[default]
    #[serde(alias = "none")]
    Unrestricted,
    /// Nearest neighbors on a line: pairs (i, i+1) in either order.
    Linear,
}

/// Evolutionary variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Af,
    Apcd,
}

/// The free-pool gate kinds: single-qubit rotations, two-qubit interaction
/// rotations, and controlled rotations.
pub fn af_gate_pool() -> Vec<GateKind> {
    vec![
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Rxx,
        GateKind::Ryy,
        GateKind::Rzz,
        GateKind::Crx,
        GateKind::Cry,
        GateKind::Crz,
    ]
}

/// The pseudo-counterdiabatic pool, one gate per basis term
/// {Y, IX, IY, IZ, XX, YY, ZZ}.
pub fn apcd_gate_pool() -> Vec<GateKind> {
    vec![
        GateKind::Ry,
        GateKind::Crx,
        GateKind::Cry,
        GateKind::Crz,
        GateKind::Rxx,
        GateKind::Ryy,
        GateKind::Rzz,
    ]
}

/// Mutation operator weights and drawing rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    pub insert: f64,
    pub delete: f64,
    pub swap: f64,
    pub modify: f64,
    /// Standard deviation of the MODIFY angle perturbation.
    pub modify_sigma: f64,
    pub gate_pool: Vec<GateKind>,
    /// Offspring per generation (the lambda of (1+lambda)).
    pub offspring: usize,
    pub coupling: Coupling,
}

impl MutationConfig {
    /// Equal-weight operators, sigma 0.1, four offspring.
    pub fn with_pool(gate_pool: Vec<GateKind>) -> MutationConfig {
        MutationConfig {
            insert: 0.25,
            delete: 0.25,
            swap: 0.25,
            modify: 0.25,
            modify_sigma: 0.1,
            gate_pool,
            offspring: 4,
            coupling: Coupling::Unrestricted,
        }
    }

    pub fn af() -> MutationConfig {
        MutationConfig::with_pool(af_gate_pool())
    }

    pub fn apcd() -> MutationConfig {
        MutationConfig::with_pool(apcd_gate_pool())
    }

    pub fn validate(&self) -> Result<()> {
        let weights = [self.insert, self.delete, self.swap, self.modify];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig(
                "mutation weights must be non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "mutation weights must sum to 1, got {total}"
            )));
        }
        if !(self.modify_sigma > 0.0) {
            return Err(Error::InvalidConfig(
                "modify_sigma must be positive".into(),
            ));
        }
        if self.offspring == 0 {
            return Err(Error::InvalidConfig("offspring must be >= 1".into()));
        }
        if self.gate_pool.is_empty() {
            return Err(Error::InvalidConfig("gate pool must be non-empty".into()));
        }
        Ok(())
    }
}

/// Parameters of the fixed APCD prefix `U_I(beta) U_0(delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApcdConfig {
    pub beta: f64,
    pub delta: f64,
    pub trotter_steps: usize,
}

impl Default for ApcdConfig {
    fn default() -> Self {
        ApcdConfig {
            beta: 0.0,
            delta: 0.5,
            trotter_steps: 1,
        }
    }
}

impl ApcdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trotter_steps == 0 {
            return Err(Error::InvalidConfig("trotter_steps must be >= 1".into()));
        }
        if !self.beta.is_finite() || !self.delta.is_finite() {
            return Err(Error::InvalidConfig(
                "beta and delta must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Optional convergence early-stop: halt after `patience` generations
/// without an improvement larger than `tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    pub tol: f64,
    pub patience: usize,
}

impl Default for EarlyStop {
    fn default() -> Self {
        EarlyStop {
            tol: 1e-9,
            patience: 500,
        }
    }
}

/// Everything a single evolutionary run needs besides the Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub variant: Variant,
    pub mutation: MutationConfig,
    pub apcd: ApcdConfig,
    pub generations: usize,
    pub eval: EvalMode,
    pub noise: Option<NoiseModel>,
    /// Off by default; the full generation budget is spent.
    pub early_stop: Option<EarlyStop>,
    /// Record the parent genome every `k` generations (and at the end).
    pub snapshot_every: Option<usize>,
}

impl EvolveConfig {
    pub fn new(variant: Variant, generations: usize) -> EvolveConfig {
        let mutation = match variant {
            Variant::Af => MutationConfig::af(),
            Variant::Apcd => MutationConfig::apcd(),
        };
        EvolveConfig {
            variant,
            mutation,
            apcd: ApcdConfig::default(),
            generations,
            eval: EvalMode::Exact,
            noise: None,
            early_stop: None,
            snapshot_every: None,
        }
    }
}

/// Outcome of one run: the surviving parent, its cached energy, and the
/// non-increasing per-generation trace (entry 0 is the initial parent).
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub parent: Circuit,
    pub parent_energy: f64,
    pub generation: usize,
    pub trace: Vec<f64>,
    pub snapshots: Vec<(usize, Circuit)>,
}

/// Used by tests to check operator statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MutationKind {
    Insert,
    Delete,
    Swap,
    Modify,
}

fn random_theta(rng: &mut impl Rng) -> f64 {
    rng.gen_range(0.0..std::f64::consts::TAU)
}

/// A single-gate circuit: kind uniform over the given single-qubit kinds,
/// qubit uniform, angle uniform in [0, 2*pi).
fn random_single_rotation(n: usize, kinds: &[GateKind], rng: &mut impl Rng) -> Circuit {
    let kind = kinds[rng.gen_range(0..kinds.len())];
    let q = rng.gen_range(0..n);
    let theta = random_theta(rng);
    Circuit::from_gates(n, vec![Gate::new(kind, &[q], Some(theta)).unwrap()])
        .expect("single rotation is always valid")
}

/// The AF starting point: one gate from {RX, RY, RZ}.
pub fn random_initial_circuit(n: usize, rng: &mut impl Rng) -> Circuit {
    random_single_rotation(n, &[GateKind::Rx, GateKind::Ry, GateKind::Rz], rng)
}

/// Draw a fresh random gate from the pool, honoring the coupling map.
/// Registers too small for two-qubit gates fall back to the pool's
/// single-qubit kinds.
fn random_gate(n: usize, cfg: &MutationConfig, rng: &mut impl Rng) -> Gate {
    let pool: Vec<GateKind> = if n < 2 {
        cfg.gate_pool.iter().copied().filter(|k| k.arity() == 1).collect()
    } else {
        cfg.gate_pool.clone()
    };
    assert!(!pool.is_empty(), "gate pool has no kind applicable at n={n}");
    let kind = pool[rng.gen_range(0..pool.len())];
    let theta = kind.is_parameterized().then(|| random_theta(rng));
    if kind.arity() == 1 {
        Gate::new(kind, &[rng.gen_range(0..n)], theta).unwrap()
    } else {
        let (a, b) = match cfg.coupling {
            Coupling::Unrestricted => {
                let a = rng.gen_range(0..n);
                let mut b = rng.gen_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                (a, b)
            }
            Coupling::Linear => {
                let edge = rng.gen_range(0..n - 1);
                if rng.gen_bool(0.5) {
                    (edge, edge + 1)
                } else {
                    (edge + 1, edge)
                }
            }
        };
        Gate::new(kind, &[a, b], theta).unwrap()
    }
}

/// Apply exactly one mutation to a copy of the circuit and report which
/// operator fired. DELETE on a single-gate circuit and MODIFY on an
/// angle-free gate leave the copy unchanged, keeping genomes non-empty.
pub fn mutate_recorded(
    circuit: &Circuit,
    cfg: &MutationConfig,
    rng: &mut impl Rng,
) -> (Circuit, MutationKind) {
    assert!(!circuit.is_empty(), "mutate requires a non-empty circuit");
    let n = circuit.n();
    let r: f64 = rng.gen();
    let kind = if r < cfg.insert {
        MutationKind::Insert
    } else if r < cfg.insert + cfg.delete {
        MutationKind::Delete
    } else if r < cfg.insert + cfg.delete + cfg.swap {
        MutationKind::Swap
    } else {
        MutationKind::Modify
    };

    let mut gates = circuit.gates().to_vec();
    match kind {
        MutationKind::Insert => {
            let pos = rng.gen_range(0..=gates.len());
            gates.insert(pos, random_gate(n, cfg, rng));
        }
        MutationKind::Delete => {
            if gates.len() > 1 {
                let pos = rng.gen_range(0..gates.len());
                gates.remove(pos);
            }
        }
        MutationKind::Swap => {
            let pos = rng.gen_range(0..gates.len());
            gates[pos] = random_gate(n, cfg, rng);
        }
        MutationKind::Modify => {
            let pos = rng.gen_range(0..gates.len());
            if let Some(theta) = gates[pos].theta() {
                let eps = Normal::new(0.0, cfg.modify_sigma)
                    .expect("validated sigma")
                    .sample(rng);
                gates[pos] = gates[pos].with_theta(theta + eps);
            }
        }
    }
    let mutated = Circuit::from_gates(n, gates).expect("mutations preserve validity");
    (mutated, kind)
}

/// Apply exactly one random mutation to a copy of the circuit.
pub fn mutate(circuit: &Circuit, cfg: &MutationConfig, rng: &mut impl Rng) -> Circuit {
    mutate_recorded(circuit, cfg, rng).0
}

/// The fixed APCD prefix. Per Trotter step the mixer layer
/// `U_0 = RX(2*delta_k) on every qubit` is emitted first, then the problem
/// layer `U_I = exp(-i*beta_k*H_I)` as exact RZ/RZZ rotations, realizing the
/// operator product `U_I(beta) U_0(delta)` in circuit order. Zero-angle
/// gates are omitted, so `beta = 0` yields the bare mixer layer. For more
/// than one step the angles follow a linear ramp `lambda_k = k/steps` (cost
/// weight up, mixer weight down); a single step reproduces
/// `U_I(beta) U_0(delta)` exactly.
pub fn build_apcd_prefix(n: usize, cfg: &ApcdConfig, ising: &IsingModel) -> Result<Circuit> {
    cfg.validate()?;
    if ising.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: ising.n(),
        });
    }
    let steps = cfg.trotter_steps;
    let mut circuit = Circuit::new(n);
    for k in 1..=steps {
        let lambda_prev = (k - 1) as f64 / steps as f64;
        let lambda = k as f64 / steps as f64;
        let delta_k = cfg.delta * (1.0 - lambda_prev);
        let beta_k = cfg.beta * lambda;

        if delta_k != 0.0 {
            for q in 0..n {
                circuit.push(Gate::rx(q, 2.0 * delta_k))?;
            }
        }
        if beta_k != 0.0 {
            for (q, &h) in ising.h().iter().enumerate() {
                if h != 0.0 {
                    circuit.push(Gate::rz(q, 2.0 * beta_k * h))?;
                }
            }
            for (&(i, j), &jij) in ising.j() {
                if jij != 0.0 {
                    circuit.push(Gate::rzz(i, j, 2.0 * beta_k * jij))?;
                }
            }
        }
    }
    Ok(circuit)
}

/// Scratch evaluator owning the reusable state buffer and energy table.
struct Evaluator<'a> {
    ising: &'a IsingModel,
    table: Option<Vec<f64>>,
    init: StateVector,
    prefix_state: Option<StateVector>,
    prefix: Option<&'a Circuit>,
    scratch: StateVector,
    eval: EvalMode,
    noise: Option<&'a NoiseModel>,
}

impl<'a> Evaluator<'a> {
    fn new(
        ising: &'a IsingModel,
        init: StateVector,
        prefix: Option<&'a Circuit>,
        eval: EvalMode,
        noise: Option<&'a NoiseModel>,
    ) -> Result<Evaluator<'a>> {
        let table = match eval {
            EvalMode::Exact => Some(ising.energy_table()?),
            EvalMode::Sampled { .. } => None,
        };
        // The prefix output can be cached unless trajectory noise
        // re-randomizes it (two-qubit prefix gates on noisy qubits).
        let prefix_state = match prefix {
            Some(p) => {
                let noisy_prefix = noise.map_or(false, |nm| {
                    p.gates().iter().any(|g| {
                        g.arity() == 2
                            && (nm.noisy_qubits.contains(&g.q0())
                                || nm.noisy_qubits.contains(&g.q1().unwrap()))
                    })
                });
                if noisy_prefix {
                    None
                } else {
                    let mut s = init.clone();
                    run_circuit_in_place(p, &mut s, None, &mut rng_from_seed(0))?;
                    Some(s)
                }
            }
            None => None,
        };
        let scratch = init.clone();
        Ok(Evaluator {
            ising,
            table,
            init,
            prefix_state,
            prefix,
            scratch,
            eval,
            noise,
        })
    }

    fn energy(&mut self, genome: &Circuit, rng: &mut impl Rng) -> Result<f64> {
        match (&self.prefix_state, self.prefix) {
            (Some(ps), _) => self.scratch.clone_from(ps),
            (None, Some(p)) => {
                self.scratch.clone_from(&self.init);
                run_circuit_in_place(p, &mut self.scratch, self.noise, rng)?;
            }
            (None, None) => self.scratch.clone_from(&self.init),
        }
        run_circuit_in_place(genome, &mut self.scratch, self.noise, rng)?;
        match self.eval {
            EvalMode::Exact => self
                .scratch
                .expectation_with_table(self.table.as_ref().expect("table built for exact mode")),
            EvalMode::Sampled { shots } => {
                let counts = self.scratch.sample(shots, rng);
                expectation_sampled(&counts, self.ising)
            }
        }
    }
}

/// Run the (1+lambda) search for `cfg.generations` generations.
///
/// Selection keeps the strict minimum; ties favor the parent and, among
/// equal offspring, the lowest index. The parent's energy is evaluated once
/// when it becomes parent and cached afterwards, so the recorded trace is
/// non-increasing even under shot noise. Mutation and evaluation randomness
/// for offspring `i` of generation `g` comes from a substream derived from
/// `(seed, g, i)`, making results independent of evaluation order.
pub fn evolve(ising: &IsingModel, cfg: &EvolveConfig, seed: u64) -> Result<EvolutionState> {
    cfg.mutation.validate()?;
    cfg.apcd.validate()?;
    if let Some(nm) = &cfg.noise {
        nm.validate()?;
    }
    if cfg.generations == 0 {
        return Err(Error::InvalidConfig("generations must be >= 1".into()));
    }
    let n = ising.n();
    if n < 2 && !cfg.mutation.gate_pool.iter().any(|k| k.arity() == 1) {
        return Err(Error::InvalidConfig(
            "gate pool has no single-qubit kind usable at n = 1".into(),
        ));
    }

    let (init, prefix) = match cfg.variant {
        Variant::Af => (StateVector::basis(n)?, None),
        Variant::Apcd => (
            StateVector::plus(n)?,
            Some(build_apcd_prefix(n, &cfg.apcd, ising)?),
        ),
    };

    let mut init_rng = rng_from_seed(derive_seed2(seed, 0, 0));
    let mut parent = match cfg.variant {
        Variant::Af => random_initial_circuit(n, &mut init_rng),
        Variant::Apcd => {
            let single: Vec<GateKind> = cfg
                .mutation
                .gate_pool
                .iter()
                .copied()
                .filter(|k| k.arity() == 1)
                .collect();
            if single.is_empty() {
                random_single_rotation(n, &[GateKind::Ry], &mut init_rng)
            } else {
                random_single_rotation(n, &single, &mut init_rng)
            }
        }
    };

    let mut evaluator = Evaluator::new(
        ising,
        init,
        prefix.as_ref(),
        cfg.eval,
        cfg.noise.as_ref(),
    )?;

    let mut parent_eval_rng = rng_from_seed(derive_seed2(seed, 0, 1));
    let mut parent_energy = evaluator.energy(&parent, &mut parent_eval_rng)?;
    let mut trace = Vec::with_capacity(cfg.generations + 1);
    trace.push(parent_energy);

    let mut snapshots = Vec::new();
    let mut stall = 0usize;
    let mut generation = 0usize;

    for g in 1..=cfg.generations {
        let mut best: Option<(f64, Circuit)> = None;
        for i in 0..cfg.mutation.offspring {
            let mut rng = rng_from_seed(derive_seed2(seed, g as u64, i as u64));
            let child = mutate(&parent, &cfg.mutation, &mut rng);
            let e = evaluator.energy(&child, &mut rng)?;
            // Strict `<` keeps the lowest-index offspring among equals.
            if best.as_ref().map_or(true, |(be, _)| e < *be) {
                best = Some((e, child));
            }
        }
        let (child_energy, child) = best.expect("offspring >= 1");
        let improvement = parent_energy - child_energy;
        if child_energy < parent_energy {
            parent = child;
            parent_energy = child_energy;
        }
        if improvement > cfg.early_stop.map_or(f64::INFINITY, |es| es.tol) {
            stall = 0;
        } else {
            stall += 1;
        }
        trace.push(parent_energy);
        generation = g;

        if let Some(every) = cfg.snapshot_every {
            if every > 0 && g % every == 0 {
                snapshots.push((g, parent.clone()));
            }
        }
        if let Some(es) = cfg.early_stop {
            if stall >= es.patience {
                break;
            }
        }
    }
    if cfg.snapshot_every.is_some()
        && snapshots.last().map(|(g, _)| *g) != Some(generation)
    {
        snapshots.push((generation, parent.clone()));
    }

    Ok(EvolutionState {
        parent,
        parent_energy,
        generation,
        trace,
        snapshots,
    })
}

/// Render a trace as the export CSV (`generation,best_energy`).
pub fn trace_to_csv(trace: &[f64]) -> String {
    let mut out = String::from("generation,best_energy\n");
    for (g, e) in trace.iter().enumerate() {
        out.push_str(&format!("{g},{e}\n"));
    }
    out
}
