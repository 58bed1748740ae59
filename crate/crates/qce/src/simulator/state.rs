//! Statevector storage, gate application kernels, measurement sampling, and
//! diagonal-Hamiltonian expectations.
//!
//! Qubit 0 is the least significant bit of the amplitude index; rendered
//! bitstrings therefore show qubit 0 rightmost. All kernels are sequential
//! and allocation-free so distinct circuit evaluations can run on worker
//! threads independently.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::problem::IsingModel;
use crate::simulator::gate::{Gate, GateKind};

/// Simulation budget: a 26-qubit register already holds 2^26 amplitudes.
pub const MAX_QUBITS: usize = 26;

/// 2^n complex amplitudes of an n-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

fn check_register_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::BudgetExceeded {
            what: "statevector register",
            limit: MAX_QUBITS,
            n,
        });
    }
    Ok(())
}

impl StateVector {
    /// `|0...0>`: amplitude 1 at index 0.
    pub fn basis(n: usize) -> Result<StateVector> {
        check_register_size(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// `|+>^(x)n`: every amplitude equal to `2^(-n/2)`.
    pub fn plus(n: usize) -> Result<StateVector> {
        check_register_size(n)?;
        let amp = Complex64::new((1.0f64 / (1u64 << n) as f64).sqrt(), 0.0);
        Ok(StateVector {
            n,
            amps: vec![amp; 1 << n],
        })
    }

    /// Wrap raw amplitudes (must have length 2^n). No normalization is done.
    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<StateVector> {
        check_register_size(n)?;
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                actual: amps.len(),
            });
        }
        Ok(StateVector { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Apply one gate in place.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        if gate.max_qubit() >= self.n {
            return Err(Error::InvalidGate(format!(
                "gate {:?} touches qubit {} but the register has {} qubits",
                gate.kind(),
                gate.max_qubit(),
                self.n
            )));
        }
        let theta = gate.theta().unwrap_or(0.0);
        let half = theta / 2.0;
        let (c, s) = (half.cos(), half.sin());
        match gate.kind() {
            GateKind::Rx => self.kernel_rx(gate.q0(), c, s),
            GateKind::Ry => self.kernel_ry(gate.q0(), c, s),
            GateKind::Rz => self.kernel_phase_pair(
                gate.q0(),
                Complex64::from_polar(1.0, -half),
                Complex64::from_polar(1.0, half),
            ),
            GateKind::Rzz => self.kernel_rzz(gate.q0(), gate.q1().unwrap(), half),
            GateKind::Rxx => self.kernel_xx_yy(gate.q0(), gate.q1().unwrap(), c, s, false),
            GateKind::Ryy => self.kernel_xx_yy(gate.q0(), gate.q1().unwrap(), c, s, true),
            GateKind::Crx | GateKind::Cry | GateKind::Crz | GateKind::Cx | GateKind::Cy => {
                let m = target_block(gate);
                self.kernel_controlled(gate.q0(), gate.q1().unwrap(), m);
            }
        }
        Ok(())
    }

    /// `a' = c*a - i*s*b ; b' = -i*s*a + c*b`
    fn kernel_rx(&mut self, q: usize, c: f64, s: f64) {
        let bit = 1usize << q;
        for chunk in self.amps.chunks_exact_mut(bit << 1) {
            let (lo, hi) = chunk.split_at_mut(bit);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = Complex64::new(c * x.re + s * y.im, c * x.im - s * y.re);
                *b = Complex64::new(c * y.re + s * x.im, c * y.im - s * x.re);
            }
        }
    }

    /// `a' = c*a - s*b ; b' = s*a + c*b`
    fn kernel_ry(&mut self, q: usize, c: f64, s: f64) {
        let bit = 1usize << q;
        for chunk in self.amps.chunks_exact_mut(bit << 1) {
            let (lo, hi) = chunk.split_at_mut(bit);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = Complex64::new(c * x.re - s * y.re, c * x.im - s * y.im);
                *b = Complex64::new(s * x.re + c * y.re, s * x.im + c * y.im);
            }
        }
    }

    /// Diagonal single-qubit action: phase `p0` on bit=0, `p1` on bit=1.
    fn kernel_phase_pair(&mut self, q: usize, p0: Complex64, p1: Complex64) {
        let bit = 1usize << q;
        for chunk in self.amps.chunks_exact_mut(bit << 1) {
            let (lo, hi) = chunk.split_at_mut(bit);
            for a in lo.iter_mut() {
                *a *= p0;
            }
            for b in hi.iter_mut() {
                *b *= p1;
            }
        }
    }

    fn kernel_rzz(&mut self, a: usize, b: usize, half: f64) {
        let p_eq = Complex64::from_polar(1.0, -half);
        let p_ne = Complex64::from_polar(1.0, half);
        let (ba, bb) = (1usize << a, 1usize << b);
        for (k, amp) in self.amps.iter_mut().enumerate() {
            let eq = (k & ba == 0) == (k & bb == 0);
            *amp *= if eq { p_eq } else { p_ne };
        }
    }

    /// Shared XX/YY kernel. Both gates mix the (00,11) and (01,10) index
    /// pairs; only the sign of the `i*sin` factor on the (00,11) pair
    /// distinguishes YY from XX.
    fn kernel_xx_yy(&mut self, a: usize, b: usize, c: f64, s: f64, yy: bool) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (blo, bhi) = (1usize << lo, 1usize << hi);
        let outer = if yy { s } else { -s };
        let inner = -s;
        let dim = self.amps.len();
        for base_hi in (0..dim).step_by(bhi << 1) {
            for base_lo in (base_hi..base_hi + bhi).step_by(blo << 1) {
                for i00 in base_lo..base_lo + blo {
                    let i01 = i00 | blo;
                    let i10 = i00 | bhi;
                    let i11 = i00 | blo | bhi;

                    let (a00, a11) = (self.amps[i00], self.amps[i11]);
                    self.amps[i00] = Complex64::new(
                        c * a00.re - outer * a11.im,
                        c * a00.im + outer * a11.re,
                    );
                    self.amps[i11] = Complex64::new(
                        c * a11.re - outer * a00.im,
                        c * a11.im + outer * a00.re,
                    );

                    let (a01, a10) = (self.amps[i01], self.amps[i10]);
                    self.amps[i01] = Complex64::new(
                        c * a01.re - inner * a10.im,
                        c * a01.im + inner * a10.re,
                    );
                    self.amps[i10] = Complex64::new(
                        c * a10.re - inner * a01.im,
                        c * a10.im + inner * a01.re,
                    );
                }
            }
        }
    }

    /// Apply a 2x2 block on the target wherever the control bit is set.
    fn kernel_controlled(&mut self, control: usize, target: usize, m: [[Complex64; 2]; 2]) {
        let (bc, bt) = (1usize << control, 1usize << target);
        let dim = self.amps.len();
        let mut mix = |amps: &mut [Complex64], i: usize, j: usize| {
            let (x, y) = (amps[i], amps[j]);
            amps[i] = m[0][0] * x + m[0][1] * y;
            amps[j] = m[1][0] * x + m[1][1] * y;
        };
        if control > target {
            for cbase in (0..dim).step_by(bc << 1) {
                let start = cbase + bc;
                for tbase in (start..start + bc).step_by(bt << 1) {
                    for i in tbase..tbase + bt {
                        mix(&mut self.amps, i, i + bt);
                    }
                }
            }
        } else {
            for tbase in (0..dim).step_by(bt << 1) {
                for cbase in (tbase..tbase + bt).step_by(bc << 1) {
                    for i in cbase + bc..cbase + (bc << 1) {
                        mix(&mut self.amps, i, i + bt);
                    }
                }
            }
        }
    }

    /// Apply a bare Pauli operator to one qubit (used by the noise channel).
    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        let bit = 1usize << q;
        match p {
            Pauli::X => {
                for chunk in self.amps.chunks_exact_mut(bit << 1) {
                    let (lo, hi) = chunk.split_at_mut(bit);
                    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                        std::mem::swap(a, b);
                    }
                }
            }
            Pauli::Y => {
                for chunk in self.amps.chunks_exact_mut(bit << 1) {
                    let (lo, hi) = chunk.split_at_mut(bit);
                    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                        let (x, y) = (*a, *b);
                        *a = Complex64::new(y.im, -y.re); // -i * y
                        *b = Complex64::new(-x.im, x.re); // +i * x
                    }
                }
            }
            Pauli::Z => {
                for chunk in self.amps.chunks_exact_mut(bit << 1) {
                    let (_, hi) = chunk.split_at_mut(bit);
                    for b in hi.iter_mut() {
                        *b = -*b;
                    }
                }
            }
        }
    }

    /// Exact expectation of a diagonal Hamiltonian:
    /// `sum_k |a_k|^2 E(bits(k))`. Cost is `O(2^n * terms)`; long loops over
    /// the same Hamiltonian should go through [`StateVector::expectation_with_table`].
    pub fn expectation(&self, h: &IsingModel) -> Result<f64> {
        if h.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: h.n(),
            });
        }
        let mut acc = 0.0;
        for (k, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            if p > 0.0 {
                acc += p * h.energy_of_index(k as u64);
            }
        }
        Ok(acc)
    }

    /// Expectation against a precomputed bitstring-energy table.
    pub fn expectation_with_table(&self, table: &[f64]) -> Result<f64> {
        if table.len() != self.amps.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amps.len(),
                actual: table.len(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(table)
            .map(|(a, &e)| a.norm_sqr() * e)
            .sum())
    }

    /// Draw `shots` i.i.d. basis-state indices from `|a_k|^2`.
    pub fn sample(&self, shots: u64, rng: &mut impl Rng) -> BTreeMap<u64, u64> {
        let mut cum = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cum.push(acc);
        }
        let total = acc;
        let mut counts = BTreeMap::new();
        for _ in 0..shots {
            let r = rng.gen::<f64>() * total;
            let k = cum.partition_point(|&c| c <= r).min(self.amps.len() - 1);
            *counts.entry(k as u64).or_insert(0u64) += 1;
        }
        counts
    }
}

/// Render a basis index as a bitstring with qubit 0 rightmost.
pub fn format_bitstring(k: u64, n: usize) -> String {
    (0..n).rev().map(|q| if (k >> q) & 1 == 1 { '1' } else { '0' }).collect()
}

/// Shot-count estimator: `sum counts(b) E(b) / sum counts(b)`.
pub fn expectation_sampled(counts: &BTreeMap<u64, u64>, h: &IsingModel) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::EmptyCounts);
    }
    let mut num = 0.0;
    let mut den = 0u64;
    for (&k, &c) in counts {
        num += c as f64 * h.energy_of_index(k);
        den += c;
    }
    Ok(num / den as f64)
}

/// Single-qubit Pauli flavors for the depolarizing trajectory channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

/// The 2x2 block a controlled gate applies on its target.
fn target_block(gate: &Gate) -> [[Complex64; 2]; 2] {
    let theta = gate.theta().unwrap_or(0.0);
    let half = theta / 2.0;
    let (c, s) = (half.cos(), half.sin());
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    match gate.kind() {
        GateKind::Crx => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        GateKind::Cry => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        GateKind::Crz => [
            [Complex64::from_polar(1.0, -half), zero],
            [zero, Complex64::from_polar(1.0, half)],
        ],
        GateKind::Cx => [[zero, one], [one, zero]],
        GateKind::Cy => [
            [zero, Complex64::new(0.0, -1.0)],
            [Complex64::new(0.0, 1.0), zero],
        ],
        other => unreachable!("not a controlled kind: {other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn basis_and_plus_states() {
        let b1 = StateVector::basis(1).unwrap();
        assert_eq!(b1.amplitudes(), &[
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0)
        ]);
        let b2 = StateVector::basis(2).unwrap();
        assert_eq!(b2.amplitudes()[0], Complex64::new(1.0, 0.0));
        assert!(b2.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));

        let p1 = StateVector::plus(1).unwrap();
        for a in p1.amplitudes() {
            assert!((a - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
        let p2 = StateVector::plus(2).unwrap();
        for a in p2.amplitudes() {
            assert!((a - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        }
        assert!((p2.norm_sqr() - 1.0).abs() < 1e-12);

        assert!(StateVector::basis(0).is_err());
        assert!(StateVector::basis(MAX_QUBITS + 1).is_err());
    }

    #[test]
    fn rx_pi_flips_with_phase() {
        let mut s = StateVector::basis(1).unwrap();
        s.apply_gate(&Gate::rx(0, PI)).unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-12);
        assert!((s.amplitudes()[1] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn rzz_phases_00() {
        let theta = 0.9;
        let mut s = StateVector::basis(2).unwrap();
        s.apply_gate(&Gate::rzz(0, 1, theta)).unwrap();
        let expect = Complex64::from_polar(1.0, -theta / 2.0);
        assert!((s.amplitudes()[0] - expect).norm() < 1e-12);
    }

    #[test]
    fn crx_pi_on_control_one() {
        // |control=1, target=0> with control = qubit 1, target = qubit 0.
        let mut s = StateVector::basis(2).unwrap();
        s.apply_pauli(1, Pauli::X); // |10> = index 2
        s.apply_gate(&Gate::crx(1, 0, PI)).unwrap();
        assert!(s.amplitudes()[2].norm() < 1e-12);
        assert!((s.amplitudes()[3] - Complex64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn crx_ignores_control_zero() {
        let mut s = StateVector::basis(2).unwrap();
        let before = s.clone();
        s.apply_gate(&Gate::crx(1, 0, 1.3)).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn gate_then_inverse_restores() {
        let kinds: Vec<Gate> = vec![
            Gate::rx(0, 0.7),
            Gate::ry(1, -1.1),
            Gate::rz(2, 2.3),
            Gate::rxx(0, 2, 0.5),
            Gate::ryy(1, 2, 1.7),
            Gate::rzz(0, 1, -0.9),
            Gate::crx(2, 0, 0.4),
            Gate::cry(0, 1, -0.6),
            Gate::crz(1, 2, 1.9),
            Gate::cx(0, 2),
            Gate::cy(2, 1),
        ];
        let mut s = StateVector::plus(3).unwrap();
        s.apply_gate(&Gate::ry(0, 0.37)).unwrap();
        let reference = s.clone();
        for g in kinds {
            s.apply_gate(&g).unwrap();
            s.apply_gate(&g.inverse()).unwrap();
            let err: f64 = s
                .amplitudes()
                .iter()
                .zip(reference.amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "{:?} inverse failed: {err}", g.kind());
        }
    }

    #[test]
    fn out_of_range_gate_rejected() {
        let mut s = StateVector::basis(2).unwrap();
        assert!(s.apply_gate(&Gate::rx(2, 0.1)).is_err());
    }

    #[test]
    fn expectation_of_basis_states() {
        use crate::problem::{
            default_penalties, ising_from_qubo, qubo_from_spp, parse_instance,
        };
        let inst = parse_instance(
            br#"{"name":"tiny","items":[1,2],"partitions":[
                {"items":[1],"weight":2},{"items":[2],"weight":3},
                {"items":[1,2],"weight":4}]}"#,
        )
        .unwrap();
        let ising = ising_from_qubo(&qubo_from_spp(&inst, &default_penalties(&inst)));

        let zero = StateVector::basis(3).unwrap();
        assert!((zero.expectation(&ising).unwrap() - 20.0).abs() < 1e-9);

        // Basis state with qubit 2 set: x = (0,0,1), energy 4.
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[4] = Complex64::new(1.0, 0.0);
        let x2 = StateVector::from_amplitudes(3, amps).unwrap();
        assert!((x2.expectation(&ising).unwrap() - 4.0).abs() < 1e-9);

        // Uniform superposition: mean of all 8 objective values = 14.5.
        let plus = StateVector::plus(3).unwrap();
        assert!((plus.expectation(&ising).unwrap() - 14.5).abs() < 1e-9);

        // Table route agrees.
        let table = ising.energy_table().unwrap();
        assert!(
            (plus.expectation_with_table(&table).unwrap() - 14.5).abs() < 1e-9
        );
    }

    #[test]
    fn sampling_is_deterministic_and_concentrated() {
        let s = StateVector::basis(3).unwrap();
        let mut rng = crate::rng::rng_from_seed(5);
        let counts = s.sample(100, &mut rng);
        assert_eq!(counts.len(), 1);
        assert_eq!(counts[&0], 100);

        let p = StateVector::plus(1).unwrap();
        let mut r1 = crate::rng::rng_from_seed(9);
        let mut r2 = crate::rng::rng_from_seed(9);
        assert_eq!(p.sample(1000, &mut r1), p.sample(1000, &mut r2));
    }

    #[test]
    fn plus_state_sampling_within_3_sigma() {
        let p = StateVector::plus(1).unwrap();
        let mut rng = crate::rng::rng_from_seed(17);
        let shots = 100_000u64;
        let counts = p.sample(shots, &mut rng);
        let ones = *counts.get(&1).unwrap_or(&0) as f64;
        let freq = ones / shots as f64;
        let sigma = (0.25 / shots as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * sigma, "freq={freq}");
    }

    #[test]
    fn sampled_expectation_arithmetic() {
        use crate::problem::{ising_from_qubo, QuboModel};
        let q = QuboModel::new(2, vec![1.0, 2.0], Default::default(), 0.0);
        let ising = ising_from_qubo(&q);
        let mut counts = BTreeMap::new();
        counts.insert(0u64, 1u64); // E(00) = 0
        counts.insert(3u64, 1u64); // E(11) = 3
        let e = expectation_sampled(&counts, &ising).unwrap();
        assert!((e - 1.5).abs() < 1e-12);

        assert!(matches!(
            expectation_sampled(&BTreeMap::new(), &ising),
            Err(Error::EmptyCounts)
        ));
    }

    #[test]
    fn bitstring_rendering_puts_qubit0_rightmost() {
        assert_eq!(format_bitstring(4, 3), "100");
        assert_eq!(format_bitstring(1, 3), "001");
    }
}
