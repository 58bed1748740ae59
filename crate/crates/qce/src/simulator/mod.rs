//! Exact statevector simulation of circuits over the framework's gate set,
//! with exact or shot-sampled expectations of diagonal Ising Hamiltonians
//! and an optional depolarizing-noise trajectory mode.

mod gate;
mod state;

pub use gate::{Gate, GateKind, GateMatrix};
pub use state::{expectation_sampled, format_bitstring, Pauli, StateVector, MAX_QUBITS};

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An ordered list of gates over an `n`-qubit register. This is both the
/// evolving genome of the circuit-evolution search and the bound form of the
/// fixed VQE ansatz.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize) -> Circuit {
        Circuit {
            n,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(n: usize, gates: Vec<Gate>) -> Result<Circuit> {
        let mut c = Circuit::new(n);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if gate.max_qubit() >= self.n {
            return Err(Error::InvalidGate(format!(
                "gate {:?} touches qubit {} but the circuit has {} qubits",
                gate.kind(),
                gate.max_qubit(),
                self.n
            )));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Serialize as a JSON list of `{kind, qubits, theta}` records.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.gates).expect("gate serialization cannot fail")
    }

    /// Rebuild from the JSON gate list; the register size is external context.
    pub fn from_json(n: usize, json: &str) -> Result<Circuit> {
        let gates: Vec<Gate> =
            serde_json::from_str(json).map_err(|e| Error::InvalidGate(e.to_string()))?;
        Circuit::from_gates(n, gates)
    }

    /// Concatenation: `self`'s gates followed by `suffix`'s.
    pub fn then(&self, suffix: &Circuit) -> Result<Circuit> {
        if suffix.n != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: suffix.n,
            });
        }
        let mut gates = self.gates.clone();
        gates.extend_from_slice(&suffix.gates);
        Ok(Circuit {
            n: self.n,
            gates,
        })
    }
}

/// Run-level expectation switch: exact amplitude averaging, or a shot
/// estimate from sampled bitstrings (1024 shots per circuit by default).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EvalMode {
    Exact,
    Sampled { shots: u64 },
}

impl Default for EvalMode {
    fn default() -> Self {
        EvalMode::Sampled { shots: 1024 }
    }
}

/// Depolarizing trajectory noise attached to two-qubit gates touching any of
/// the listed qubits. `epsilon` is the per-gate error probability; the
/// mutation perturbation of the evolutionary search is unrelated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub noisy_qubits: BTreeSet<usize>,
    pub epsilon: f64,
}

impl NoiseModel {
    pub fn new(noisy_qubits: BTreeSet<usize>, epsilon: f64) -> Result<NoiseModel> {
        let nm = NoiseModel {
            noisy_qubits,
            epsilon,
        };
        nm.validate()?;
        Ok(nm)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) || self.epsilon.is_nan() {
            return Err(Error::InvalidConfig(format!(
                "noise epsilon must lie in [0, 1], got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    fn touches(&self, gate: &Gate) -> bool {
        gate.arity() == 2
            && (self.noisy_qubits.contains(&gate.q0())
                || self.noisy_qubits.contains(&gate.q1().unwrap()))
    }
}

/// The 15 non-identity two-qubit Pauli operators, indexed 1..=15 as
/// `(first, second)` base-4 digits over (I, X, Y, Z).
fn two_qubit_pauli(index: u8) -> (Option<Pauli>, Option<Pauli>) {
    let digit = |d: u8| match d {
        0 => None,
        1 => Some(Pauli::X),
        2 => Some(Pauli::Y),
        _ => Some(Pauli::Z),
    };
    (digit(index / 4), digit(index % 4))
}

/// Run a circuit on an initial state, optionally inserting depolarizing
/// Pauli errors after each two-qubit gate that touches a noisy qubit
/// (quantum-trajectory realization of the channel).
pub fn run_circuit(
    circuit: &Circuit,
    init: &StateVector,
    noise: Option<&NoiseModel>,
    rng: &mut impl Rng,
) -> Result<StateVector> {
    if init.n() != circuit.n() {
        return Err(Error::DimensionMismatch {
            expected: circuit.n(),
            actual: init.n(),
        });
    }
    let mut state = init.clone();
    run_circuit_in_place(circuit, &mut state, noise, rng)?;
    Ok(state)
}

/// As [`run_circuit`], but mutating a caller-owned state buffer.
pub fn run_circuit_in_place(
    circuit: &Circuit,
    state: &mut StateVector,
    noise: Option<&NoiseModel>,
    rng: &mut impl Rng,
) -> Result<()> {
    if state.n() != circuit.n() {
        return Err(Error::DimensionMismatch {
            expected: circuit.n(),
            actual: state.n(),
        });
    }
    for gate in circuit.gates() {
        state.apply_gate(gate)?;
        if let Some(nm) = noise {
            if nm.touches(gate) && rng.gen::<f64>() < nm.epsilon {
                let idx = rng.gen_range(1u8..16);
                let (p0, p1) = two_qubit_pauli(idx);
                if let Some(p) = p0 {
                    state.apply_pauli(gate.q0(), p);
                }
                if let Some(p) = p1 {
                    state.apply_pauli(gate.q1().unwrap(), p);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(2);
        let init = StateVector::plus(2).unwrap();
        let out = run_circuit(&c, &init, None, &mut rng_from_seed(0)).unwrap();
        assert_eq!(out, init);
    }

    #[test]
    fn zero_epsilon_matches_noiseless() {
        let mut c = Circuit::new(3);
        c.push(Gate::ry(0, 0.4)).unwrap();
        c.push(Gate::rzz(0, 1, 1.1)).unwrap();
        c.push(Gate::rxx(1, 2, 0.6)).unwrap();
        let init = StateVector::plus(3).unwrap();
        let clean = run_circuit(&c, &init, None, &mut rng_from_seed(1)).unwrap();
        let nm = NoiseModel::new([0, 1, 2].into(), 0.0).unwrap();
        for seed in 0..5 {
            let noisy = run_circuit(&c, &init, Some(&nm), &mut rng_from_seed(seed)).unwrap();
            assert_eq!(noisy, clean, "seed {seed}");
        }
    }

    #[test]
    fn noise_skips_single_qubit_and_untouched_gates() {
        let mut c = Circuit::new(3);
        c.push(Gate::rx(1, 0.3)).unwrap(); // single-qubit: never noisy
        c.push(Gate::rzz(0, 2, 0.8)).unwrap(); // does not touch qubit 1
        let init = StateVector::plus(3).unwrap();
        let nm = NoiseModel::new([1].into(), 1.0).unwrap();
        let noisy = run_circuit(&c, &init, Some(&nm), &mut rng_from_seed(3)).unwrap();
        let clean = run_circuit(&c, &init, None, &mut rng_from_seed(3)).unwrap();
        assert_eq!(noisy, clean);
    }

    #[test]
    fn epsilon_one_always_applies_a_pauli() {
        let mut c = Circuit::new(2);
        c.push(Gate::rzz(0, 1, 0.0)).unwrap(); // identity gate, so any change is noise
        let init = StateVector::basis(2).unwrap();
        let nm = NoiseModel::new([0].into(), 1.0).unwrap();
        let mut changed = 0;
        for seed in 0..40 {
            let out = run_circuit(&c, &init, Some(&nm), &mut rng_from_seed(seed)).unwrap();
            if out != init {
                changed += 1;
            }
        }
        // 12 of 15 Paulis move |00> off itself; pure-Z strings only phase it.
        assert!(changed > 25, "only {changed}/40 trajectories changed the state");
    }

    #[test]
    fn pauli_index_table_covers_15() {
        let mut seen = std::collections::BTreeSet::new();
        for idx in 1u8..16 {
            let p = two_qubit_pauli(idx);
            assert!(p.0.is_some() || p.1.is_some());
            seen.insert(format!("{p:?}"));
        }
        assert_eq!(seen.len(), 15);
    }

    #[test]
    fn circuit_json_roundtrip() {
        let mut c = Circuit::new(3);
        c.push(Gate::ry(2, 0.25)).unwrap();
        c.push(Gate::crz(0, 1, -1.5)).unwrap();
        c.push(Gate::cx(1, 2)).unwrap();
        let js = c.to_json();
        let back = Circuit::from_json(3, &js).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn circuit_rejects_out_of_range_gate() {
        let mut c = Circuit::new(2);
        assert!(c.push(Gate::rx(2, 0.1)).is_err());
        assert!(Circuit::from_json(1, &Circuit::from_gates(2, vec![Gate::rx(1, 0.0)])
            .unwrap()
            .to_json())
        .is_err());
    }

    #[test]
    fn noise_model_validates_epsilon() {
        assert!(NoiseModel::new([0].into(), 1.5).is_err());
        assert!(NoiseModel::new([0].into(), -0.1).is_err());
        assert!(NoiseModel::new([0].into(), 0.01).is_ok());
    }
}
