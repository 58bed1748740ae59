//! Gate set: single-qubit rotations, two-qubit interaction rotations,
//! controlled rotations, and the fixed CX/CY entanglers.
//!
//! Convention: `R_G(theta) = exp(-i (theta/2) G)` for
//! `G in {X, Y, Z, XX, YY, ZZ}`, and
//! `CR_a(theta) = |0><0| (x) I + |1><1| (x) R_a(theta)` with the control
//! listed first. In every 4x4 matrix the first listed qubit is the high bit
//! of the 2-bit block index.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The eleven gate kinds known to the simulator. `CX`/`CY` exist for the
/// fixed VQE ansatz and the noise target; the evolutionary pools use only
/// the rotation gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Rxx,
    Ryy,
    Rzz,
    Crx,
    Cry,
    Crz,
    Cx,
    Cy,
}

impl GateKind {
    /// Number of qubit operands (1 or 2).
    pub fn arity(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => 1,
            _ => 2,
        }
    }

    /// Whether the gate carries a rotation angle.
    pub fn is_parameterized(self) -> bool {
        !matches!(self, GateKind::Cx | GateKind::Cy)
    }

    pub const ALL: [GateKind; 11] = [
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::Rxx,
        GateKind::Ryy,
        GateKind::Rzz,
        GateKind::Crx,
        GateKind::Cry,
        GateKind::Crz,
        GateKind::Cx,
        GateKind::Cy,
    ];
}

#[derive(Serialize, Deserialize)]
struct RawGate {
    kind: GateKind,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
}

/// One parameterized gate. Two-qubit gates list the control (or first
/// operand) before the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGate", into = "RawGate")]
pub struct Gate {
    kind: GateKind,
    q0: usize,
    q1: Option<usize>,
    theta: Option<f64>,
}

impl From<Gate> for RawGate {
    fn from(g: Gate) -> Self {
        RawGate {
            kind: g.kind,
            qubits: g.qubit_list(),
            theta: g.theta,
        }
    }
}

impl TryFrom<RawGate> for Gate {
    type Error = Error;

    fn try_from(raw: RawGate) -> Result<Gate> {
        Gate::new(raw.kind, &raw.qubits, raw.theta)
    }
}

impl Gate {
    /// Build a gate, checking operand count, distinctness, and the presence
    /// (or absence) of the angle for the kind.
    pub fn new(kind: GateKind, qubits: &[usize], theta: Option<f64>) -> Result<Gate> {
        if qubits.len() != kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{kind:?} expects {} operand(s), got {}",
                kind.arity(),
                qubits.len()
            )));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::InvalidGate(format!(
                "{kind:?} operands must be distinct, got {:?}",
                qubits
            )));
        }
        match (kind.is_parameterized(), theta) {
            (true, Some(t)) if t.is_finite() => {}
            (true, _) => {
                return Err(Error::InvalidGate(format!(
                    "{kind:?} requires a finite angle, got {theta:?}"
                )))
            }
            (false, None) => {}
            (false, Some(_)) => {
                return Err(Error::InvalidGate(format!("{kind:?} takes no angle")))
            }
        }
        Ok(Gate {
            kind,
            q0: qubits[0],
            q1: qubits.get(1).copied(),
            theta,
        })
    }

    pub fn rx(q: usize, theta: f64) -> Gate {
        Gate::new(GateKind::Rx, &[q], Some(theta)).unwrap()
    }

    pub fn ry(q: usize, theta: f64) -> Gate {
        Gate::new(GateKind::Ry, &[q], Some(theta)).unwrap()
    }

    pub fn rz(q: usize, theta: f64) -> Gate {
        Gate::new(GateKind::Rz, &[q], Some(theta)).unwrap()
    }

    pub fn rxx(a: usize, b: usize, theta: f64) -> Gate {
        Gate::new(GateKind::Rxx, &[a, b], Some(theta)).unwrap()
    }

    pub fn ryy(a: usize, b: usize, theta: f64) -> Gate {
        Gate::new(GateKind::Ryy, &[a, b], Some(theta)).unwrap()
    }

    pub fn rzz(a: usize, b: usize, theta: f64) -> Gate {
        Gate::new(GateKind::Rzz, &[a, b], Some(theta)).unwrap()
    }

    pub fn crx(control: usize, target: usize, theta: f64) -> Gate {
        Gate::new(GateKind::Crx, &[control, target], Some(theta)).unwrap()
    }

    pub fn cry(control: usize, target: usize, theta: f64) -> Gate {
        Gate::new(GateKind::Cry, &[control, target], Some(theta)).unwrap()
    }

    pub fn crz(control: usize, target: usize, theta: f64) -> Gate {
        Gate::new(GateKind::Crz, &[control, target], Some(theta)).unwrap()
    }

    pub fn cx(control: usize, target: usize) -> Gate {
        Gate::new(GateKind::Cx, &[control, target], None).unwrap()
    }

    pub fn cy(control: usize, target: usize) -> Gate {
        Gate::new(GateKind::Cy, &[control, target], None).unwrap()
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    /// First operand (the control for controlled kinds).
    pub fn q0(&self) -> usize {
        self.q0
    }

    /// Second operand, if the gate is two-qubit.
    pub fn q1(&self) -> Option<usize> {
        self.q1
    }

    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    pub fn arity(&self) -> usize {
        self.kind.arity()
    }

    pub fn qubit_list(&self) -> Vec<usize> {
        match self.q1 {
            Some(q1) => vec![self.q0, q1],
            None => vec![self.q0],
        }
    }

    /// Largest operand index; used for register bounds checks.
    pub fn max_qubit(&self) -> usize {
        self.q0.max(self.q1.unwrap_or(0))
    }

    /// Same gate with the angle negated (self-inverse kinds unchanged).
    pub fn inverse(&self) -> Gate {
        Gate {
            theta: self.theta.map(|t| -t),
            ..*self
        }
    }

    /// Gate with the angle replaced (angle-free kinds are returned as-is).
    pub fn with_theta(&self, theta: f64) -> Gate {
        if self.kind.is_parameterized() {
            Gate {
                theta: Some(theta),
                ..*self
            }
        } else {
            *self
        }
    }

    /// Explicit unitary matrix of the gate.
    pub fn matrix(&self) -> GateMatrix {
        let theta = self.theta.unwrap_or(0.0);
        let c = (theta / 2.0).cos();
        let s = (theta / 2.0).sin();
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let re = |v: f64| Complex64::new(v, 0.0);
        let im = |v: f64| Complex64::new(0.0, v);

        let rx = [[re(c), im(-s)], [im(-s), re(c)]];
        let ry = [[re(c), re(-s)], [re(s), re(c)]];
        let rz = [[Complex64::from_polar(1.0, -theta / 2.0), zero], [
            zero,
            Complex64::from_polar(1.0, theta / 2.0),
        ]];
        let x = [[zero, one], [one, zero]];
        let y = [[zero, im(-1.0)], [im(1.0), zero]];

        match self.kind {
            GateKind::Rx => GateMatrix::Single(rx),
            GateKind::Ry => GateMatrix::Single(ry),
            GateKind::Rz => GateMatrix::Single(rz),
            GateKind::Rxx => {
                // cos(t/2) I - i sin(t/2) XX: XX is the anti-diagonal flip.
                let mut m = [[zero; 4]; 4];
                for k in 0..4 {
                    m[k][k] = re(c);
                    m[3 - k][k] = im(-s);
                }
                GateMatrix::Two(m)
            }
            GateKind::Ryy => {
                // YY = antidiag(-1, 1, 1, -1) in the block basis.
                let mut m = [[zero; 4]; 4];
                let yy = [-1.0, 1.0, 1.0, -1.0];
                for k in 0..4 {
                    m[k][k] = re(c);
                    m[3 - k][k] = im(-s * yy[k]);
                }
                GateMatrix::Two(m)
            }
            GateKind::Rzz => {
                let mut m = [[zero; 4]; 4];
                let sign = [-1.0, 1.0, 1.0, -1.0];
                for k in 0..4 {
                    m[k][k] = Complex64::from_polar(1.0, sign[k] * theta / 2.0);
                }
                GateMatrix::Two(m)
            }
            GateKind::Crx => GateMatrix::Two(controlled(rx)),
            GateKind::Cry => GateMatrix::Two(controlled(ry)),
            GateKind::Crz => GateMatrix::Two(controlled(rz)),
            GateKind::Cx => GateMatrix::Two(controlled(x)),
            GateKind::Cy => GateMatrix::Two(controlled(y)),
        }
    }
}

/// Embed a 2x2 target operation as a controlled 4x4 block matrix
/// (control = high bit of the block index).
fn controlled(u: [[Complex64; 2]; 2]) -> [[Complex64; 4]; 4] {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut m = [[zero; 4]; 4];
    m[0][0] = one;
    m[1][1] = one;
    for r in 0..2 {
        for c in 0..2 {
            m[2 + r][2 + c] = u[r][c];
        }
    }
    m
}

/// A gate's explicit matrix, 2x2 or 4x4.
#[derive(Debug, Clone, PartialEq)]
pub enum GateMatrix {
    Single([[Complex64; 2]; 2]),
    Two([[Complex64; 4]; 4]),
}

impl GateMatrix {
    pub fn dim(&self) -> usize {
        match self {
            GateMatrix::Single(_) => 2,
            GateMatrix::Two(_) => 4,
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match self {
            GateMatrix::Single(m) => m[row][col],
            GateMatrix::Two(m) => m[row][col],
        }
    }

    /// Max deviation of `U^dagger U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += self.entry(k, r).conj() * self.entry(k, c);
                }
                let expect = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((acc - Complex64::new(expect, 0.0)).norm());
            }
        }
        worst
    }
}
