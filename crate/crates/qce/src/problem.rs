//! Set partitioning instances and their QUBO / Ising encodings.
//!
//! A set partitioning instance asks for a minimum-weight selection of
//! partitions covering every item exactly once. The equality constraints are
//! folded into the objective with per-item penalties, giving a QUBO, which is
//! then rewritten over spins as a Z-diagonal Ising Hamiltonian. Variable `p`
//! of the QUBO maps to qubit `p`; bit 0 corresponds to spin +1 under
//! `x = (1 - z) / 2`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Enumeration budget for [`solve_exact`].
pub const SOLVE_EXACT_MAX_QUBITS: usize = 26;

/// One candidate partition: the items it covers (as indices into
/// [`SppInstance::items`]) and its non-negative weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub items: Vec<usize>,
    pub weight: f64,
}

/// A set partitioning instance. The number of partitions is the number of
/// decision variables, and therefore the number of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct SppInstance {
    pub name: String,
    pub items: Vec<String>,
    pub partitions: Vec<Partition>,
}

impl SppInstance {
    /// Number of decision variables (= partitions = qubits).
    pub fn n(&self) -> usize {
        self.partitions.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    /// Total weight over all partitions.
    pub fn total_weight(&self) -> f64 {
        self.partitions.iter().map(|p| p.weight).sum()
    }

    /// True when the selection covers every item exactly once.
    pub fn is_exact_cover(&self, x: &[bool]) -> bool {
        if x.len() != self.n() {
            return false;
        }
        let mut cover = vec![0usize; self.items.len()];
        for (p, &chosen) in self.partitions.iter().zip(x) {
            if chosen {
                for &i in &p.items {
                    cover[i] += 1;
                }
            }
        }
        cover.iter().all(|&c| c == 1)
    }

    /// Objective value of a selection, ignoring feasibility.
    pub fn selection_weight(&self, x: &[bool]) -> f64 {
        self.partitions
            .iter()
            .zip(x)
            .filter(|(_, &c)| c)
            .map(|(p, _)| p.weight)
            .sum()
    }

    /// Serialize back to the instance JSON schema.
    pub fn to_json(&self) -> String {
        let raw = RawInstance {
            name: self.name.clone(),
            items: self.items.iter().cloned().map(RawItem::Str).collect(),
            partitions: self
                .partitions
                .iter()
                .map(|p| RawPartition {
                    items: p.items.iter().map(|&i| RawItem::Str(self.items[i].clone())).collect(),
                    weight: p.weight,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("instance serialization cannot fail")
    }

    fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidInstance {
            name: self.name.clone(),
            reason,
        };
        if self.partitions.is_empty() {
            return Err(fail("empty partitions list: n >= 1 violated".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for label in &self.items {
            if !seen.insert(label) {
                return Err(fail(format!("duplicate item `{label}`")));
            }
        }
        for (idx, p) in self.partitions.iter().enumerate() {
            if p.items.is_empty() {
                return Err(fail(format!("partition {idx} is empty")));
            }
            let mut in_part = std::collections::BTreeSet::new();
            for &i in &p.items {
                if i >= self.items.len() {
                    return Err(fail(format!("partition {idx} references unknown item #{i}")));
                }
                if !in_part.insert(i) {
                    return Err(fail(format!(
                        "partition {idx} lists item `{}` twice",
                        self.items[i]
                    )));
                }
            }
            if !p.weight.is_finite() || p.weight < 0.0 {
                return Err(fail(format!(
                    "partition {idx} has invalid weight {}",
                    p.weight
                )));
            }
        }
        Ok(())
    }
}

/// Per-item penalty coefficients for the constraint terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyVector {
    pub c: Vec<f64>,
}

/// Uniform penalties `c_i = 1 + sum of all weights`, a strict upper bound on
/// any feasible objective, so the penalized optimum coincides with the
/// constrained optimum.
pub fn default_penalties(inst: &SppInstance) -> PenaltyVector {
    let c = 1.0 + inst.total_weight();
    PenaltyVector {
        c: vec![c; inst.num_items()],
    }
}

// --- instance JSON schema -------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawItem {
    Int(i64),
    Str(String),
}

impl RawItem {
    fn label(&self) -> String {
        match self {
            RawItem::Int(v) => v.to_string(),
            RawItem::Str(s) => s.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawPartition {
    items: Vec<RawItem>,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    name: String,
    items: Vec<RawItem>,
    partitions: Vec<RawPartition>,
}

/// Parse and validate an instance file (UTF-8 JSON, one instance per file).
pub fn parse_instance(bytes: &[u8]) -> Result<SppInstance> {
    let raw: RawInstance =
        serde_json::from_slice(bytes).map_err(|e| Error::MalformedInstance(e.to_string()))?;

    let items: Vec<String> = raw.items.iter().map(RawItem::label).collect();
    let index: BTreeMap<&str, usize> = items
        .iter()
        .enumerate()
        .map(|(i, label)| (label.as_str(), i))
        .collect();

    let mut partitions = Vec::with_capacity(raw.partitions.len());
    for (idx, rp) in raw.partitions.iter().enumerate() {
        let mut member_indices = Vec::with_capacity(rp.items.len());
        for item in &rp.items {
            let label = item.label();
            match index.get(label.as_str()) {
                Some(&i) => member_indices.push(i),
                None => {
                    return Err(Error::InvalidInstance {
                        name: raw.name.clone(),
                        reason: format!("partition {idx} references unknown item `{label}`"),
                    })
                }
            }
        }
        partitions.push(Partition {
            items: member_indices,
            weight: rp.weight,
        });
    }

    let inst = SppInstance {
        name: raw.name,
        items,
        partitions,
    };
    inst.validate()?;
    Ok(inst)
}

/// Generate a synthetic instance with a planted exact cover.
///
/// The items are first split into a random number of disjoint non-empty
/// groups (the planted cover), then random extra partitions are appended
/// until `n_partitions` is reached, and the partition order is shuffled.
/// Deterministic in `seed`.
pub fn generate_instance(
    n_partitions: usize,
    n_items: usize,
    weight_range: (f64, f64),
    seed: u64,
) -> Result<SppInstance> {
    let (lo, hi) = weight_range;
    if n_partitions == 0 || n_items == 0 {
        return Err(Error::InfeasibleParameters(format!(
            "need n_partitions >= 1 and n_items >= 1, got ({n_partitions}, {n_items})"
        )));
    }
    if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || hi < lo {
        return Err(Error::InfeasibleParameters(format!(
            "weight range [{lo}, {hi}] must satisfy 0 <= lo <= hi, finite"
        )));
    }

    let mut rng = rng_from_seed(seed);
    let mut draw_weight = |rng: &mut rand_chacha::ChaCha8Rng| {
        if hi > lo {
            rng.gen_range(lo..=hi)
        } else {
            lo
        }
    };

    // Planted cover: m disjoint groups covering every item.
    let m = rng.gen_range(1..=n_items.min(n_partitions));
    let mut order: Vec<usize> = (0..n_items).collect();
    order.shuffle(&mut rng);
    let mut groups: Vec<Vec<usize>> = (0..m).map(|g| vec![order[g]]).collect();
    for &item in &order[m..] {
        let g = rng.gen_range(0..m);
        groups[g].push(item);
    }

    let mut partitions: Vec<Partition> = groups
        .into_iter()
        .map(|mut items| {
            items.sort_unstable();
            let weight = draw_weight(&mut rng);
            Partition { items, weight }
        })
        .collect();

    // Random extra partitions (possibly overlapping the planted ones).
    for _ in m..n_partitions {
        let mut items: Vec<usize> = (0..n_items).filter(|_| rng.gen_bool(0.5)).collect();
        if items.is_empty() {
            items.push(rng.gen_range(0..n_items));
        }
        let weight = draw_weight(&mut rng);
        partitions.push(Partition { items, weight });
    }
    partitions.shuffle(&mut rng);

    let inst = SppInstance {
        name: format!("{n_partitions}.{seed}"),
        items: (1..=n_items).map(|i| i.to_string()).collect(),
        partitions,
    };
    inst.validate()?;
    Ok(inst)
}

// --- QUBO -------------------------------------------------------------------

/// Quadratic unconstrained binary objective. Quadratic coefficients are
/// stored once per unordered pair `(i, j)` with `i < j`; diagonal terms are
/// folded into `linear` since `x^2 = x` for binaries. `BTreeMap` fixes the
/// iteration order `(i, then j)` so floating-point sums are reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel {
    n: usize,
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl QuboModel {
    pub fn new(
        n: usize,
        linear: Vec<f64>,
        quadratic: BTreeMap<(usize, usize), f64>,
        offset: f64,
    ) -> Self {
        assert_eq!(linear.len(), n, "linear coefficient length must equal n");
        for &(i, j) in quadratic.keys() {
            assert!(i < j && j < n, "quadratic keys must satisfy i < j < n");
        }
        Self {
            n,
            linear,
            quadratic,
            offset,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Objective value at a binary assignment.
    pub fn evaluate(&self, x: &[bool]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        let mut e = self.offset;
        for (coeff, &xi) in self.linear.iter().zip(x) {
            if xi {
                e += coeff;
            }
        }
        for (&(i, j), coeff) in &self.quadratic {
            if x[i] && x[j] {
                e += coeff;
            }
        }
        Ok(e)
    }

    fn evaluate_index(&self, k: u64, quad_flat: &[(usize, usize, f64)]) -> f64 {
        let mut e = self.offset;
        for (p, coeff) in self.linear.iter().enumerate() {
            if (k >> p) & 1 == 1 {
                e += coeff;
            }
        }
        for &(i, j, coeff) in quad_flat {
            if (k >> i) & 1 == 1 && (k >> j) & 1 == 1 {
                e += coeff;
            }
        }
        e
    }
}

/// Build the penalized QUBO of an instance:
/// `sum_p w_p x_p + sum_i c_i (sum_{p covering i} x_p - 1)^2`.
pub fn qubo_from_spp(inst: &SppInstance, pen: &PenaltyVector) -> QuboModel {
    assert_eq!(
        pen.c.len(),
        inst.num_items(),
        "penalty vector length must equal the item count"
    );
    let n = inst.n();
    let mut linear = vec![0.0; n];
    let mut quadratic: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut offset = 0.0;

    for (p, part) in inst.partitions.iter().enumerate() {
        linear[p] += part.weight;
    }

    // (sum_{p in S_i} x_p - 1)^2 = 1 - sum x_p + 2 sum_{p<q} x_p x_q  (binary x)
    for (item, &c) in pen.c.iter().enumerate() {
        let covering: Vec<usize> = inst
            .partitions
            .iter()
            .enumerate()
            .filter(|(_, part)| part.items.contains(&item))
            .map(|(p, _)| p)
            .collect();
        offset += c;
        for &p in &covering {
            linear[p] -= c;
        }
        for (a, &p) in covering.iter().enumerate() {
            for &q in &covering[a + 1..] {
                let key = if p < q { (p, q) } else { (q, p) };
                *quadratic.entry(key).or_insert(0.0) += 2.0 * c;
            }
        }
    }

    QuboModel::new(n, linear, quadratic, offset)
}

// --- Ising -------------------------------------------------------------------

/// Z-diagonal Ising Hamiltonian: `offset + sum_i h_i z_i + sum_{i<j} J_ij z_i z_j`
/// with spins `z in {+1, -1}` and `x = (1 - z) / 2` (bit 0 <-> spin +1).
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n: usize,
    h: Vec<f64>,
    j: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl IsingModel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn j(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.j
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Energy of a binary assignment under the spin map `z = 1 - 2x`.
    pub fn energy_of_bits(&self, x: &[bool]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        let mut k = 0u64;
        for (p, &xi) in x.iter().enumerate() {
            if xi {
                k |= 1 << p;
            }
        }
        Ok(self.energy_of_index(k))
    }

    /// Energy of the basis state with index `k` (qubit `p` = bit `p` of `k`).
    pub fn energy_of_index(&self, k: u64) -> f64 {
        let spin = |p: usize| if (k >> p) & 1 == 1 { -1.0 } else { 1.0 };
        let mut e = self.offset;
        for (p, &hp) in self.h.iter().enumerate() {
            e += hp * spin(p);
        }
        for (&(i, j), &jij) in &self.j {
            e += jij * spin(i) * spin(j);
        }
        e
    }

    /// Dense table of energies for all `2^n` basis states.
    pub fn energy_table(&self) -> Result<Vec<f64>> {
        if self.n > SOLVE_EXACT_MAX_QUBITS {
            return Err(Error::BudgetExceeded {
                what: "energy table",
                limit: SOLVE_EXACT_MAX_QUBITS,
                n: self.n,
            });
        }
        let dim = 1usize << self.n;
        let mut table = vec![self.offset; dim];
        for (p, &hp) in self.h.iter().enumerate() {
            let bit = 1usize << p;
            for (k, e) in table.iter_mut().enumerate() {
                *e += if k & bit != 0 { -hp } else { hp };
            }
        }
        for (&(i, j), &jij) in &self.j {
            let bi = 1usize << i;
            let bj = 1usize << j;
            for (k, e) in table.iter_mut().enumerate() {
                let aligned = ((k & bi != 0) == (k & bj != 0)) as u8;
                *e += if aligned == 1 { jij } else { -jij };
            }
        }
        Ok(table)
    }
}

/// Rewrite a QUBO over spins via `x_i = (1 - z_i) / 2`.
pub fn ising_from_qubo(q: &QuboModel) -> IsingModel {
    let n = q.n();
    let mut h = vec![0.0; n];
    let mut j: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut offset = q.offset();

    for (i, &a) in q.linear().iter().enumerate() {
        offset += a / 2.0;
        h[i] -= a / 2.0;
    }
    for (&(p, r), &b) in q.quadratic() {
        offset += b / 4.0;
        h[p] -= b / 4.0;
        h[r] -= b / 4.0;
        *j.entry((p, r)).or_insert(0.0) += b / 4.0;
    }

    IsingModel { n, h, j, offset }
}

// --- exact reference solver ---------------------------------------------------

/// Tie-break key: the assignment `(x_0 .. x_{n-1})` read MSB-first, so the
/// lexicographically smallest assignment wins among equal energies.
fn tie_key(k: u64, n: usize) -> u64 {
    k.reverse_bits() >> (64 - n)
}

/// Exhaustive minimization over all `2^n` assignments. Returns the optimal
/// assignment and its energy; ties resolve to the lowest assignment read
/// MSB-first. The enumeration is split across workers and reduced with the
/// same deterministic tie-break, so the result is scheduling-independent.
pub fn solve_exact(q: &QuboModel) -> Result<(Vec<bool>, f64)> {
    let n = q.n();
    if n > SOLVE_EXACT_MAX_QUBITS {
        return Err(Error::BudgetExceeded {
            what: "exact enumeration",
            limit: SOLVE_EXACT_MAX_QUBITS,
            n,
        });
    }
    let quad_flat: Vec<(usize, usize, f64)> = q
        .quadratic()
        .iter()
        .map(|(&(i, j), &c)| (i, j, c))
        .collect();

    let total = 1u64 << n;
    let chunk = 1u64 << n.min(16);
    let best = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let start = c * chunk;
            let end = (start + chunk).min(total);
            let mut best_k = start;
            let mut best_e = q.evaluate_index(start, &quad_flat);
            for k in start + 1..end {
                let e = q.evaluate_index(k, &quad_flat);
                if e < best_e || (e == best_e && tie_key(k, n) < tie_key(best_k, n)) {
                    best_e = e;
                    best_k = k;
                }
            }
            (best_e, best_k)
        })
        .reduce(
            || (f64::INFINITY, 0u64),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && a.0.is_finite() && tie_key(b.1, n) < tie_key(a.1, n))
                {
                    b
                } else {
                    a
                }
            },
        );

    let x = (0..n).map(|p| (best.1 >> p) & 1 == 1).collect();
    Ok((x, best.0))
}
