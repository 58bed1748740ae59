//! Fixed-ansatz VQE baseline: a two-local RY/CX circuit with linear
//! entanglement, costed against the diagonal Hamiltonian and minimized by a
//! derivative-free Nelder-Mead simplex with adaptive coefficients.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::IsingModel;
use crate::rng::{derive_seed, rng_from_seed};
use crate::simulator::{
    expectation_sampled, run_circuit_in_place, Circuit, EvalMode, Gate, NoiseModel, StateVector,
};

/// Two-local layout: an RY layer on every qubit, then `reps` repetitions of
/// a linear CX chain followed by another RY layer. Parameters bind
/// layer-major, qubit-minor, so `parameter_count = n * (reps + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoLocalTemplate {
    n: usize,
    reps: usize,
}

impl TwoLocalTemplate {
    /// Degenerate registers (n = 1) are representable: the chains are empty
    /// and each layer is a single RY.
    pub fn new(n: usize, reps: usize) -> Result<TwoLocalTemplate> {
        if n == 0 {
            return Err(Error::InvalidConfig("two-local template needs n >= 1".into()));
        }
        Ok(TwoLocalTemplate { n, reps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reps(&self) -> usize {
        self.reps
    }

    pub fn parameter_count(&self) -> usize {
        self.n * (self.reps + 1)
    }

    /// Materialize the concrete circuit for a parameter vector.
    pub fn bind(&self, params: &[f64]) -> Result<Circuit> {
        if params.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                actual: params.len(),
            });
        }
        let mut circuit = Circuit::new(self.n);
        for q in 0..self.n {
            circuit.push(Gate::ry(q, params[q]))?;
        }
        for r in 1..=self.reps {
            for q in 0..self.n.saturating_sub(1) {
                circuit.push(Gate::cx(q, q + 1))?;
            }
            for q in 0..self.n {
                circuit.push(Gate::ry(q, params[r * self.n + q]))?;
            }
        }
        Ok(circuit)
    }
}

/// The standard entry point used by the experiments (linear entanglement
/// needs at least two qubits).
pub fn build_two_local(n: usize, reps: usize) -> Result<TwoLocalTemplate> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "two-local ansatz with linear entanglement needs n >= 2, got {n}"
        )));
    }
    TwoLocalTemplate::new(n, reps)
}

/// Cost of one parameter vector: expectation of `h` on `bind(params)|0...0>`.
pub fn vqe_cost(
    template: &TwoLocalTemplate,
    params: &[f64],
    h: &IsingModel,
    eval: EvalMode,
    noise: Option<&NoiseModel>,
    rng: &mut impl Rng,
) -> Result<f64> {
    let circuit = template.bind(params)?;
    let mut state = StateVector::basis(template.n())?;
    run_circuit_in_place(&circuit, &mut state, noise, rng)?;
    match eval {
        EvalMode::Exact => state.expectation(h),
        EvalMode::Sampled { shots } => {
            let counts = state.sample(shots, rng);
            expectation_sampled(&counts, h)
        }
    }
}

/// Derivative-free optimizer settings. `max_iterations` counts cost-function
/// evaluations; `tolerance` bounds the simplex value spread at convergence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial_simplex_scale: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            tolerance: 1e-6,
            max_iterations: 10_000,
            initial_simplex_scale: 0.5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if !(self.initial_simplex_scale > 0.0) {
            return Err(Error::InvalidConfig(
                "initial_simplex_scale must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a VQE optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct VqeOutcome {
    pub params: Vec<f64>,
    pub energy: f64,
    /// Best-so-far cost after each evaluation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimize the VQE cost with Nelder-Mead from uniform-random initial
/// parameters in `[-pi, pi]`. Stops when the simplex value spread drops
/// below `tolerance` or the evaluation budget runs out.
pub fn optimize(
    template: &TwoLocalTemplate,
    h: &IsingModel,
    cfg: &OptimizerConfig,
    eval: EvalMode,
    noise: Option<&NoiseModel>,
    seed: u64,
) -> Result<VqeOutcome> {
    cfg.validate()?;
    if h.n() != template.n() {
        return Err(Error::DimensionMismatch {
            expected: template.n(),
            actual: h.n(),
        });
    }

    // One stream for the initial point, a separate one for shot noise, so a
    // sampled run starts from the same parameters as an exact run.
    let mut init_rng = rng_from_seed(derive_seed(seed, 0));
    let mut eval_rng = rng_from_seed(derive_seed(seed, 1));

    let dim = template.parameter_count();
    let x0: Vec<f64> = (0..dim)
        .map(|_| init_rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI))
        .collect();

    // Exact mode amortizes the bitstring-energy table across evaluations.
    let table = match eval {
        EvalMode::Exact => Some(h.energy_table()?),
        EvalMode::Sampled { .. } => None,
    };
    let init_state = StateVector::basis(template.n())?;
    let mut scratch = init_state.clone();

    let mut trace: Vec<f64> = Vec::new();
    let mut evaluations = 0usize;
    let mut best: Option<(Vec<f64>, f64)> = None;

    let mut cost = |params: &[f64],
                    trace: &mut Vec<f64>,
                    evaluations: &mut usize,
                    best: &mut Option<(Vec<f64>, f64)>,
                    rng: &mut rand_chacha::ChaCha8Rng|
     -> Result<f64> {
        let circuit = template.bind(params)?;
        scratch.clone_from(&init_state);
        run_circuit_in_place(&circuit, &mut scratch, noise, rng)?;
        let e = match eval {
            EvalMode::Exact => {
                scratch.expectation_with_table(table.as_ref().expect("table built"))?
            }
            EvalMode::Sampled { shots } => {
                let counts = scratch.sample(shots, rng);
                expectation_sampled(&counts, h)?
            }
        };
        *evaluations += 1;
        if best.as_ref().map_or(true, |(_, be)| e < *be) {
            *best = Some((params.to_vec(), e));
        }
        trace.push(best.as_ref().expect("just set").1);
        Ok(e)
    };

    // Initial simplex: x0 plus a step along each coordinate.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let f0 = cost(&x0, &mut trace, &mut evaluations, &mut best, &mut eval_rng)?;
    simplex.push((x0.clone(), f0));
    for i in 0..dim {
        if evaluations >= cfg.max_iterations {
            break;
        }
        let mut xi = x0.clone();
        xi[i] += cfg.initial_simplex_scale;
        let fi = cost(&xi, &mut trace, &mut evaluations, &mut best, &mut eval_rng)?;
        simplex.push((xi, fi));
    }

    // Adaptive coefficients (standard values below dimension 2).
    let d = dim as f64;
    let (alpha, beta, gamma, sigma) = if dim >= 2 {
        (1.0, 1.0 + 2.0 / d, 0.75 - 1.0 / (2.0 * d), 1.0 - 1.0 / d)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut converged = false;
    while evaluations < cfg.max_iterations && simplex.len() == dim + 1 {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = simplex[dim].1 - simplex[0].1;
        if spread.abs() <= cfg.tolerance {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|c| simplex[..dim].iter().map(|(x, _)| x[c]).sum::<f64>() / d)
            .collect();
        let worst = simplex[dim].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = cost(&xr, &mut trace, &mut evaluations, &mut best, &mut eval_rng)?;
        if fr < simplex[0].1 {
            if evaluations >= cfg.max_iterations {
                simplex[dim] = (xr, fr);
                break;
            }
            let xe = along(beta);
            let fe = cost(&xe, &mut trace, &mut evaluations, &mut best, &mut eval_rng)?;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            if evaluations >= cfg.max_iterations {
                break;
            }
            let (xc, threshold) = if fr < worst.1 {
                (along(gamma), fr) // outside contraction
            } else {
                (along(-gamma), worst.1) // inside contraction
            };
            let fc = cost(&xc, &mut trace, &mut evaluations, &mut best, &mut eval_rng)?;
            if fc < threshold {
                simplex[dim] = (xc, fc);
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[0].0.clone();
                for vert in simplex.iter_mut().skip(1) {
                    if evaluations >= cfg.max_iterations {
                        break;
                    }
                    for (xi, ai) in vert.0.iter_mut().zip(&anchor) {
                        *xi = ai + sigma * (*xi - ai);
                    }
                    vert.1 = cost(&vert.0, &mut trace, &mut evaluations, &mut best, &mut eval_rng)?;
                }
            }
        }
    }

    let (params, energy) = best.expect("at least one evaluation ran");

    Ok(VqeOutcome {
        params,
        energy,
        trace,
        evaluations,
        converged,
    })
}

/// Render a best-so-far trace as the export CSV (`evaluation,best_cost`).
pub fn cost_trace_to_csv(trace: &[f64]) -> String {
    let mut out = String::from("evaluation,best_cost\n");
    for (i, e) in trace.iter().enumerate() {
        out.push_str(&format!("{},{e}\n", i + 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{default_penalties, ising_from_qubo, qubo_from_spp, parse_instance, QuboModel};
    use crate::simulator::GateKind;
    use std::collections::BTreeMap;

    fn tiny_ising() -> IsingModel {
        let inst = parse_instance(
            br#"{"name":"tiny","items":[1,2],"partitions":[
                {"items":[1],"weight":2},{"items":[2],"weight":3},
                {"items":[1,2],"weight":4}]}"#,
        )
        .unwrap();
        ising_from_qubo(&qubo_from_spp(&inst, &default_penalties(&inst)))
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(build_two_local(4, 2).unwrap().parameter_count(), 12);
        assert_eq!(build_two_local(6, 2).unwrap().parameter_count(), 18);
        assert_eq!(build_two_local(3, 0).unwrap().parameter_count(), 3);
        assert!(build_two_local(1, 2).is_err());
    }

    #[test]
    fn bound_circuit_structure() {
        let t = build_two_local(6, 2).unwrap();
        let c = t.bind(&vec![0.1; 18]).unwrap();
        let ry = c.gates().iter().filter(|g| g.kind() == GateKind::Ry).count();
        let cx = c.gates().iter().filter(|g| g.kind() == GateKind::Cx).count();
        assert_eq!(ry, 18);
        assert_eq!(cx, 10);
        // Order: RY layer, then (CX chain + RY layer) per repetition.
        let kinds: Vec<GateKind> = c.gates().iter().map(|g| g.kind()).collect();
        let mut expect = vec![GateKind::Ry; 6];
        for _ in 0..2 {
            expect.extend(vec![GateKind::Cx; 5]);
            expect.extend(vec![GateKind::Ry; 6]);
        }
        assert_eq!(kinds, expect);
    }

    #[test]
    fn reps_zero_is_single_layer() {
        let t = build_two_local(4, 0).unwrap();
        let c = t.bind(&[0.0; 4]).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.gates().iter().all(|g| g.kind() == GateKind::Ry));
    }

    #[test]
    fn bind_rejects_wrong_length() {
        let t = build_two_local(4, 2).unwrap();
        assert!(t.bind(&[0.0; 11]).is_err());
    }

    #[test]
    fn single_param_change_touches_one_gate() {
        let t = build_two_local(3, 1).unwrap();
        let a = t.bind(&[0.0; 6]).unwrap();
        let mut params = [0.0; 6];
        params[4] = 0.5;
        let b = t.bind(&params).unwrap();
        let diffs = a
            .gates()
            .iter()
            .zip(b.gates())
            .filter(|(x, y)| x != y)
            .count();
        assert_eq!(diffs, 1);
    }

    #[test]
    fn zero_params_cost_is_all_zeros_energy() {
        let ising = tiny_ising();
        let t = build_two_local(3, 2).unwrap();
        let mut rng = crate::rng::rng_from_seed(0);
        let cost = vqe_cost(
            &t,
            &vec![0.0; t.parameter_count()],
            &ising,
            EvalMode::Exact,
            None,
            &mut rng,
        )
        .unwrap();
        assert!((cost - 20.0).abs() < 1e-9);
    }

    #[test]
    fn zero_hamiltonian_cost_is_zero() {
        let ising = ising_from_qubo(&QuboModel::new(
            3,
            vec![0.0; 3],
            BTreeMap::new(),
            0.0,
        ));
        let t = build_two_local(3, 1).unwrap();
        let mut rng = crate::rng::rng_from_seed(1);
        let cost = vqe_cost(&t, &vec![0.7; 6], &ising, EvalMode::Exact, None, &mut rng).unwrap();
        assert!(cost.abs() < 1e-12);
    }

    #[test]
    fn sampled_cost_tracks_exact_within_3_sigma() {
        let ising = tiny_ising();
        let t = build_two_local(3, 1).unwrap();
        let params: Vec<f64> = (0..6).map(|i| 0.3 * i as f64).collect();
        let mut rng = crate::rng::rng_from_seed(5);
        let exact = vqe_cost(&t, &params, &ising, EvalMode::Exact, None, &mut rng).unwrap();

        let shots = 100_000u64;
        let sampled = vqe_cost(
            &t,
            &params,
            &ising,
            EvalMode::Sampled { shots },
            None,
            &mut rng,
        )
        .unwrap();

        // Bound the estimator deviation by 3 * (energy span / sqrt(shots)).
        let circuit = t.bind(&params).unwrap();
        let mut s = StateVector::basis(3).unwrap();
        run_circuit_in_place(&circuit, &mut s, None, &mut crate::rng::rng_from_seed(0)).unwrap();
        let table = ising.energy_table().unwrap();
        let mean_sq: f64 = s
            .amplitudes()
            .iter()
            .zip(&table)
            .map(|(a, &e)| a.norm_sqr() * e * e)
            .sum();
        let std = (mean_sq - exact * exact).max(0.0).sqrt();
        let bound = 3.0 * std / (shots as f64).sqrt();
        assert!(
            (sampled - exact).abs() <= bound.max(1e-9),
            "sampled {sampled} vs exact {exact}, bound {bound}"
        );
    }

    #[test]
    fn optimize_single_qubit_z() {
        // h = Z on one qubit: minimum -1 at |1>.
        let ising = ising_from_qubo(&QuboModel::new(1, vec![-2.0], BTreeMap::new(), 1.0));
        assert_eq!(ising.h(), &[1.0]);
        let t = TwoLocalTemplate::new(1, 0).unwrap();
        let cfg = OptimizerConfig {
            max_iterations: 200,
            ..Default::default()
        };
        let out = optimize(&t, &ising, &cfg, EvalMode::Exact, None, 3).unwrap();
        assert!(
            out.energy <= -0.999,
            "did not reach the ground state: {}",
            out.energy
        );
        assert!(out.evaluations <= 200);
    }

    #[test]
    fn optimize_zero_hamiltonian_converges_immediately() {
        let ising = ising_from_qubo(&QuboModel::new(2, vec![0.0; 2], BTreeMap::new(), 0.0));
        let t = build_two_local(2, 1).unwrap();
        let out = optimize(
            &t,
            &ising,
            &OptimizerConfig::default(),
            EvalMode::Exact,
            None,
            9,
        )
        .unwrap();
        assert_eq!(out.energy, 0.0);
        assert!(out.converged);
        assert!(out.evaluations < 50);
    }

    #[test]
    fn trace_is_non_increasing_and_reaches_reported_energy() {
        let ising = tiny_ising();
        let t = build_two_local(3, 2).unwrap();
        let cfg = OptimizerConfig {
            max_iterations: 2000,
            ..Default::default()
        };
        let out = optimize(&t, &ising, &cfg, EvalMode::Exact, None, 17).unwrap();
        for w in out.trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        let trace_min = out.trace.last().copied().unwrap();
        assert!(out.energy <= trace_min + 1e-12);
    }

    #[test]
    fn optimize_is_deterministic() {
        let ising = tiny_ising();
        let t = build_two_local(3, 2).unwrap();
        let cfg = OptimizerConfig {
            max_iterations: 500,
            ..Default::default()
        };
        let a = optimize(&t, &ising, &cfg, EvalMode::Exact, None, 21).unwrap();
        let b = optimize(&t, &ising, &cfg, EvalMode::Exact, None, 21).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn cost_trace_csv_shape() {
        let csv = cost_trace_to_csv(&[5.0, 4.0]);
        assert_eq!(csv, "evaluation,best_cost\n1,5\n2,4\n");
    }
}
