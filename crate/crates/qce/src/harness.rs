//! Experiment protocol: several independent seeded runs per instance and
//! algorithm, a per-run minimum expectation value, and the approximation
//! ratio `R = reference / median(minima)` against the exact enumeration
//! reference.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{evolve, Coupling, EvolveConfig, Variant};
use crate::problem::{default_penalties, qubo_from_spp, solve_exact, SppInstance};
use crate::rng::derive_seed;
use crate::simulator::{EvalMode, NoiseModel};
use crate::vqe::{build_two_local, optimize, OptimizerConfig};

/// Which optimizer runs against the instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Af,
    Apcd,
    Vqe,
}

impl Algorithm {
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Af => "af",
            Algorithm::Apcd => "apcd",
            Algorithm::Vqe => "vqe",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One experiment: `runs` independent runs with derived seeds, each spending
/// the full `generations` budget (cost evaluations, for VQE).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default)]
    pub eval: EvalMode,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    #[serde(default)]
    pub coupling: Coupling,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_runs() -> usize {
    7
}

fn default_generations() -> usize {
    10_000
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            algorithm,
            runs: default_runs(),
            generations: default_generations(),
            eval: EvalMode::default(),
            noise: None,
            coupling: Coupling::Unrestricted,
            master_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be >= 1".into()));
        }
        if self.generations == 0 {
            return Err(Error::InvalidConfig("generations must be >= 1".into()));
        }
        if let Some(nm) = &self.noise {
            nm.validate()?;
        }
        Ok(())
    }
}

/// One run's contribution to an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub min_energy: f64,
    /// Best-so-far energy per generation (or per evaluation for VQE).
    /// Exported separately as CSV, not in the JSON bundle.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

/// Aggregated experiment output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub instance: String,
    pub n: usize,
    pub algorithm: Algorithm,
    pub generations: usize,
    /// Exact optimum from enumeration.
    pub reference: f64,
    pub reference_assignment: Vec<bool>,
    pub runs: Vec<RunRecord>,
    pub median_min: f64,
    /// `reference / median_min`, full precision (tables render 2 decimals).
    pub approximation_ratio: f64,
    /// Noisy qubits actually used after intersecting with the register,
    /// recorded because the source protocol names qubits {1, 6} regardless
    /// of instance size.
    pub noisy_qubits_used: Option<BTreeSet<usize>>,
}

/// `R = reference / min_expectation`. The reference must be positive, which
/// the default penalty construction guarantees.
pub fn approximation_ratio(reference: f64, min_expectation: f64) -> Result<f64> {
    if !(reference > 0.0) {
        return Err(Error::NonPositiveReference(reference));
    }
    Ok(reference / min_expectation)
}

/// Lower median as an exact order statistic: with 7 values this is the 4th
/// smallest; no interpolation for even counts.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    sorted[(sorted.len() - 1) / 2]
}

/// The noise scenario: depolarizing error `epsilon = 0.01` on qubits {1, 6}
/// (intersected with the register) and the linear coupling map.
pub fn noise_scenario(cfg: &ExperimentConfig, n: usize) -> ExperimentConfig {
    let noisy: BTreeSet<usize> = [1usize, 6].into_iter().filter(|&q| q < n).collect();
    ExperimentConfig {
        noise: Some(NoiseModel {
            noisy_qubits: noisy,
            epsilon: 0.01,
        }),
        coupling: Coupling::Linear,
        ..cfg.clone()
    }
}

fn run_once(
    inst: &SppInstance,
    ising: &crate::problem::IsingModel,
    cfg: &ExperimentConfig,
    noise: Option<&NoiseModel>,
    run: usize,
) -> Result<RunRecord> {
    let seed = derive_seed(cfg.master_seed, run as u64);
    let trace = match cfg.algorithm {
        Algorithm::Af | Algorithm::Apcd => {
            let variant = if cfg.algorithm == Algorithm::Af {
                Variant::Af
            } else {
                Variant::Apcd
            };
            let mut ecfg = EvolveConfig::new(variant, cfg.generations);
            ecfg.mutation.coupling = cfg.coupling;
            ecfg.eval = cfg.eval;
            ecfg.noise = noise.cloned();
            evolve(ising, &ecfg, seed)?.trace
        }
        Algorithm::Vqe => {
            let template = build_two_local(inst.n(), 2)?;
            let ocfg = OptimizerConfig {
                tolerance: 1e-6,
                max_iterations: cfg.generations,
                initial_simplex_scale: 0.5,
            };
            optimize(&template, ising, &ocfg, cfg.eval, noise, seed)?.trace
        }
    };
    let min_energy = trace.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RunRecord {
        run,
        seed,
        min_energy,
        trace,
    })
}

/// Execute the full experiment: derived per-run seeds, parallel runs, and a
/// deterministic aggregation. Rerunning with the same master seed reproduces
/// the result bit for bit.
pub fn run_experiment(inst: &SppInstance, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let n = inst.n();

    let qubo = qubo_from_spp(inst, &default_penalties(inst));
    let ising = crate::problem::ising_from_qubo(&qubo);
    let (reference_assignment, reference) = solve_exact(&qubo)?;
    if !(reference > 0.0) {
        return Err(Error::NonPositiveReference(reference));
    }

    // Out-of-range noisy qubits are dropped for small registers.
    let noise = cfg.noise.as_ref().map(|nm| NoiseModel {
        noisy_qubits: nm.noisy_qubits.iter().copied().filter(|&q| q < n).collect(),
        epsilon: nm.epsilon,
    });

    let runs: Vec<RunRecord> = (0..cfg.runs)
        .into_par_iter()
        .map(|r| run_once(inst, &ising, cfg, noise.as_ref(), r))
        .collect::<Result<_>>()?;

    let minima: Vec<f64> = runs.iter().map(|r| r.min_energy).collect();
    let median_min = median(&minima);
    let ratio = approximation_ratio(reference, median_min)?;

    Ok(ExperimentResult {
        instance: inst.name.clone(),
        n,
        algorithm: cfg.algorithm,
        generations: cfg.generations,
        reference,
        reference_assignment,
        runs,
        median_min,
        approximation_ratio: ratio,
        noisy_qubits_used: noise.map(|nm| nm.noisy_qubits),
    })
}

/// Summary table: one row per (instance, algorithm), ratio at 2 decimals.
pub fn summary_csv(results: &[ExperimentResult]) -> String {
    let mut rows: Vec<&ExperimentResult> = results.iter().collect();
    rows.sort_by(|a, b| {
        (&a.instance, a.algorithm.label()).cmp(&(&b.instance, b.algorithm.label()))
    });
    let mut out = String::from("instance,algorithm,R,runs,generations\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.2},{},{}\n",
            r.instance,
            r.algorithm,
            r.approximation_ratio,
            r.runs.len(),
            r.generations
        ));
    }
    out
}

/// Long-form table: one row per run.
pub fn runs_csv(results: &[ExperimentResult]) -> String {
    let mut rows: Vec<&ExperimentResult> = results.iter().collect();
    rows.sort_by(|a, b| {
        (&a.instance, a.algorithm.label()).cmp(&(&b.instance, b.algorithm.label()))
    });
    let mut out = String::from("instance,algorithm,run,seed,min_energy,reference\n");
    for r in rows {
        for rec in &r.runs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.instance, r.algorithm, rec.run, rec.seed, rec.min_energy, r.reference
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::parse_instance;

    fn tiny() -> SppInstance {
        parse_instance(
            br#"{"name":"tiny","items":[1,2],"partitions":[
                {"items":[1],"weight":2},{"items":[2],"weight":3},
                {"items":[1,2],"weight":4}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(approximation_ratio(20.0, 20.0).unwrap(), 1.0);
        assert_eq!(approximation_ratio(4.0, 8.0).unwrap(), 0.5);
        let nearly = approximation_ratio(4.0, 4.0 + 1e-12).unwrap();
        assert_eq!(format!("{nearly:.2}"), "1.00");
        assert!(matches!(
            approximation_ratio(0.0, 5.0),
            Err(Error::NonPositiveReference(_))
        ));
        assert!(matches!(
            approximation_ratio(-1.0, 5.0),
            Err(Error::NonPositiveReference(_))
        ));
    }

    #[test]
    fn median_is_an_order_statistic() {
        assert_eq!(median(&[3.0]), 3.0);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
        let seven = [7.0, 1.0, 6.0, 2.0, 5.0, 3.0, 4.0];
        assert_eq!(median(&seven), 4.0); // 4th order statistic
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.0); // lower median
    }

    #[test]
    fn noise_scenario_intersects_register() {
        let base = ExperimentConfig::new(Algorithm::Apcd);
        let at8 = noise_scenario(&base, 8);
        let nm = at8.noise.unwrap();
        assert_eq!(nm.noisy_qubits, [1, 6].into());
        assert_eq!(nm.epsilon, 0.01);
        assert_eq!(at8.coupling, Coupling::Linear);

        let at6 = noise_scenario(&base, 6);
        assert_eq!(at6.noise.unwrap().noisy_qubits, [1].into());
    }

    #[test]
    fn single_run_median_is_that_run() {
        let mut cfg = ExperimentConfig::new(Algorithm::Apcd);
        cfg.runs = 1;
        cfg.generations = 50;
        cfg.eval = EvalMode::Exact;
        cfg.master_seed = 5;
        let res = run_experiment(&tiny(), &cfg).unwrap();
        assert_eq!(res.runs.len(), 1);
        assert_eq!(res.median_min, res.runs[0].min_energy);
        assert_eq!(res.reference, 4.0);
        assert_eq!(res.reference_assignment, vec![false, false, true]);
    }

    #[test]
    fn experiments_are_deterministic() {
        let mut cfg = ExperimentConfig::new(Algorithm::Af);
        cfg.runs = 3;
        cfg.generations = 80;
        cfg.eval = EvalMode::Exact;
        cfg.master_seed = 42;
        let a = run_experiment(&tiny(), &cfg).unwrap();
        let b = run_experiment(&tiny(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn per_run_minimum_bounds_trace() {
        let mut cfg = ExperimentConfig::new(Algorithm::Vqe);
        cfg.runs = 2;
        cfg.generations = 300;
        cfg.eval = EvalMode::Exact;
        let res = run_experiment(&tiny(), &cfg).unwrap();
        for rec in &res.runs {
            assert!(rec.trace.iter().all(|&e| rec.min_energy <= e));
        }
        assert!(res.approximation_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn tiny_apcd_reaches_ratio_one() {
        let mut cfg = ExperimentConfig::new(Algorithm::Apcd);
        cfg.generations = 2000;
        cfg.eval = EvalMode::Exact;
        cfg.master_seed = 11;
        let res = run_experiment(&tiny(), &cfg).unwrap();
        assert!(
            res.approximation_ratio >= 0.995,
            "ratio {}",
            res.approximation_ratio
        );
        assert_eq!(format!("{:.2}", res.approximation_ratio), "1.00");
    }

    #[test]
    fn csv_rendering_and_sorting() {
        let mut cfg = ExperimentConfig::new(Algorithm::Apcd);
        cfg.runs = 1;
        cfg.generations = 30;
        cfg.eval = EvalMode::Exact;
        let b = run_experiment(&tiny(), &cfg).unwrap();
        cfg.algorithm = Algorithm::Af;
        let a = run_experiment(&tiny(), &cfg).unwrap();

        let csv = summary_csv(&[b.clone(), a.clone()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "instance,algorithm,R,runs,generations");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("tiny,af,"));
        assert!(lines[2].starts_with("tiny,apcd,"));
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[3], "1");
        assert_eq!(fields[4], "30");
        // Ratio column renders with exactly two decimals.
        assert_eq!(fields[2].split('.').nth(1).unwrap().len(), 2);

        let long = runs_csv(&[a, b]);
        assert_eq!(long.lines().count(), 3);
        assert!(long.starts_with("instance,algorithm,run,seed,min_energy,reference\n"));
    }

    #[test]
    fn config_json_roundtrip() {
        let mut cfg = ExperimentConfig::new(Algorithm::Vqe);
        cfg.eval = EvalMode::Sampled { shots: 1024 };
        cfg.noise = Some(NoiseModel {
            noisy_qubits: [1, 6].into(),
            epsilon: 0.01,
        });
        let js = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&js).unwrap();
        assert_eq!(back, cfg);

        // Defaults fill in omitted fields.
        let minimal: ExperimentConfig =
            serde_json::from_str(r#"{"algorithm":"apcd"}"#).unwrap();
        assert_eq!(minimal.runs, 7);
        assert_eq!(minimal.generations, 10_000);
        assert_eq!(minimal.eval, EvalMode::Sampled { shots: 1024 });
    }
}
