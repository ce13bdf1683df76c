//! The layered variational classifier.
//!
//! Circuit for `n` features on `n` qubits with `L` layers:
//!
//! 1. angle embedding, `R_axis(x_j)` on qubit `j`;
//! 2. per layer `l = 1..=L`: `RZ RY RZ` on every qubit (qubit-ascending),
//!    then a CNOT ring with control `i` and target `(i + l) mod n`
//!    (control-ascending, pairs with `control == target` skipped);
//! 3. `<Z>` on the first `k` qubits plus a bias each, then softmax.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{check_finite, Error, Result};
use crate::remap::RemapKind;
use crate::statevector::{mat_mul, rotation_matrix, GateOp, Mat2, RotationAxis, StateVector};

/// Rotation gates per qubit per layer.
pub const ROTATIONS_PER_QUBIT: usize = 3;

const LAYER_AXES: [RotationAxis; ROTATIONS_PER_QUBIT] =
    [RotationAxis::Z, RotationAxis::Y, RotationAxis::Z];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifierConfig {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub n_classes: usize,
    pub embedding_axis: RotationAxis,
    pub remap: RemapKind,
}

impl ClassifierConfig {
    pub fn new(
        n_qubits: usize,
        n_layers: usize,
        n_classes: usize,
        embedding_axis: RotationAxis,
        remap: RemapKind,
    ) -> Result<Self> {
        let cfg = Self {
            n_qubits,
            n_layers,
            n_classes,
            embedding_axis,
            remap,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > crate::statevector::MAX_QUBITS {
            return Err(Error::ResourceLimit(self.n_qubits));
        }
        if self.n_classes == 0 || self.n_classes > self.n_qubits {
            return Err(Error::Config(format!(
                "{} classes need at least as many measured qubits, register has {}",
                self.n_classes, self.n_qubits
            )));
        }
        if self.embedding_axis == RotationAxis::Z {
            return Err(Error::ZEmbedding);
        }
        Ok(())
    }

    pub fn n_thetas(&self) -> usize {
        self.n_layers * self.n_qubits * ROTATIONS_PER_QUBIT
    }

    pub fn n_params(&self) -> usize {
        self.n_thetas() + self.n_classes
    }

    /// Flat index of rotation `rotation` on `qubit` in zero-based `layer`.
    pub fn theta_index(&self, layer: usize, qubit: usize, rotation: usize) -> usize {
        (layer * self.n_qubits + qubit) * ROTATIONS_PER_QUBIT + rotation
    }
}

/// Raw (unmapped) rotation angles in `[layer][qubit][rotation]` row-major
/// order, followed by one bias per class.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierParams {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub n_classes: usize,
    pub thetas: Vec<f64>,
    pub biases: Vec<f64>,
}

impl ClassifierParams {
    pub fn zeros(cfg: &ClassifierConfig) -> Self {
        Self {
            n_qubits: cfg.n_qubits,
            n_layers: cfg.n_layers,
            n_classes: cfg.n_classes,
            thetas: vec![0.0; cfg.n_thetas()],
            biases: vec![0.0; cfg.n_classes],
        }
    }

    pub fn len(&self) -> usize {
        self.thetas.len() + self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn theta(&self, layer: usize, qubit: usize, rotation: usize) -> f64 {
        self.thetas[(layer * self.n_qubits + qubit) * ROTATIONS_PER_QUBIT + rotation]
    }

    pub fn check_against(&self, cfg: &ClassifierConfig) -> Result<()> {
        if self.n_qubits != cfg.n_qubits
            || self.n_layers != cfg.n_layers
            || self.n_classes != cfg.n_classes
        {
            return Err(Error::Config(format!(
                "parameters shaped ({}, {}, {}) do not fit config ({}, {}, {})",
                self.n_qubits,
                self.n_layers,
                self.n_classes,
                cfg.n_qubits,
                cfg.n_layers,
                cfg.n_classes
            )));
        }
        if self.thetas.len() != cfg.n_thetas() {
            return Err(Error::Shape {
                context: "thetas",
                expected: cfg.n_thetas(),
                found: self.thetas.len(),
            });
        }
        if self.biases.len() != cfg.n_classes {
            return Err(Error::Shape {
                context: "biases",
                expected: cfg.n_classes,
                found: self.biases.len(),
            });
        }
        for &v in self.thetas.iter().chain(&self.biases) {
            check_finite("classifier parameter", v)?;
        }
        Ok(())
    }

    /// Thetas followed by biases.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = self.thetas.clone();
        flat.extend_from_slice(&self.biases);
        flat
    }

    /// Plain-text checkpoint: the three shape integers, then every theta,
    /// then every bias, one value per line with 17 significant digits.
    pub fn to_checkpoint_string(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.n_qubits).unwrap();
        writeln!(out, "{}", self.n_layers).unwrap();
        writeln!(out, "{}", self.n_classes).unwrap();
        for v in self.thetas.iter().chain(&self.biases) {
            writeln!(out, "{v:.16e}").unwrap();
        }
        out
    }

    pub fn from_checkpoint_str(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            msg,
        };
        let mut header = [0usize; 3];
        for slot in header.iter_mut() {
            let (no, l) = lines
                .next()
                .ok_or_else(|| parse_err(0, "truncated checkpoint header".into()))?;
            *slot = l
                .parse()
                .map_err(|e| parse_err(no, format!("bad header value `{l}`: {e}")))?;
        }
        let [n_qubits, n_layers, n_classes] = header;
        let n_thetas = n_layers * n_qubits * ROTATIONS_PER_QUBIT;
        let mut values = Vec::with_capacity(n_thetas + n_classes);
        for (no, l) in lines {
            let v: f64 = l
                .parse()
                .map_err(|e| parse_err(no, format!("bad value `{l}`: {e}")))?;
            values.push(v);
        }
        if values.len() != n_thetas + n_classes {
            return Err(Error::Shape {
                context: "checkpoint values",
                expected: n_thetas + n_classes,
                found: values.len(),
            });
        }
        let biases = values.split_off(n_thetas);
        Ok(Self {
            n_qubits,
            n_layers,
            n_classes,
            thetas: values,
            biases,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint_str(&text, path)
    }
}

/// Rotates qubit `j` by `features[j]` about `axis`.
pub fn embed_features(state: &mut StateVector, features: &[f64], axis: RotationAxis) -> Result<()> {
    if axis == RotationAxis::Z {
        return Err(Error::ZEmbedding);
    }
    if features.len() != state.n_qubits() {
        return Err(Error::Shape {
            context: "feature vector",
            expected: state.n_qubits(),
            found: features.len(),
        });
    }
    for (q, &x) in features.iter().enumerate() {
        state.apply_rotation(axis, q, x)?;
    }
    Ok(())
}

/// CNOT (control, target) pairs of layer `layer_index` (1-based).
pub fn entangler_pairs(n_qubits: usize, layer_index: usize) -> Vec<(usize, usize)> {
    (0..n_qubits)
        .map(|i| (i, (i + layer_index) % n_qubits))
        .filter(|(c, t)| c != t)
        .collect()
}

/// Applies one variational layer with already re-mapped angles.
pub fn apply_layer(
    state: &mut StateVector,
    layer_thetas: &[[f64; ROTATIONS_PER_QUBIT]],
    layer_index: usize,
) -> Result<()> {
    let n = state.n_qubits();
    if layer_thetas.len() != n {
        return Err(Error::Shape {
            context: "layer thetas",
            expected: n,
            found: layer_thetas.len(),
        });
    }
    if layer_index == 0 {
        return Err(Error::Config("layer index is 1-based".into()));
    }
    for (q, angles) in layer_thetas.iter().enumerate() {
        for &a in angles {
            check_finite("rotation angle", a)?;
        }
        state.apply_matrix(q, &qubit_unitary(angles));
    }
    for (c, t) in entangler_pairs(n, layer_index) {
        state.apply_cnot(c, t)?;
    }
    Ok(())
}

/// `RZ(t2) RY(t1) RZ(t0)`: the three layer rotations of one qubit as a
/// single matrix (`t0` acts first).
pub fn qubit_unitary(angles: &[f64; ROTATIONS_PER_QUBIT]) -> Mat2 {
    angles
        .iter()
        .zip(LAYER_AXES)
        .fold(rotation_matrix(RotationAxis::Z, 0.0), |acc, (&a, axis)| {
            mat_mul(&rotation_matrix(axis, a), &acc)
        })
}

/// A gate of the full circuit, tagged with the flat theta index it reads.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TaggedGate {
    pub gate: GateOp,
    pub param: Option<usize>,
}

/// Every gate of the circuit in application order, with `mapped` angles
/// substituted for the layer rotations.
pub fn circuit_gates(cfg: &ClassifierConfig, mapped: &[f64], features: &[f64]) -> Vec<TaggedGate> {
    let n = cfg.n_qubits;
    let mut gates = Vec::with_capacity(n + cfg.n_layers * n * 4);
    gates.extend(features.iter().enumerate().map(|(q, &x)| TaggedGate {
        gate: GateOp::Rotation {
            axis: cfg.embedding_axis,
            target: q,
            angle: x,
        },
        param: None,
    }));
    for layer in 0..cfg.n_layers {
        for q in 0..n {
            for (r, &axis) in LAYER_AXES.iter().enumerate() {
                let idx = cfg.theta_index(layer, q, r);
                gates.push(TaggedGate {
                    gate: GateOp::Rotation {
                        axis,
                        target: q,
                        angle: mapped[idx],
                    },
                    param: Some(idx),
                });
            }
        }
        for (control, target) in entangler_pairs(n, layer + 1) {
            gates.push(TaggedGate {
                gate: GateOp::CNot { control, target },
                param: None,
            });
        }
    }
    gates
}

/// Runs the circuit on re-mapped angles and returns the final state.
pub fn prepare_state(cfg: &ClassifierConfig, mapped: &[f64], features: &[f64]) -> Result<StateVector> {
    if mapped.len() != cfg.n_thetas() {
        return Err(Error::Shape {
            context: "mapped thetas",
            expected: cfg.n_thetas(),
            found: mapped.len(),
        });
    }
    let mut state = StateVector::zero_state(cfg.n_qubits)?;
    embed_features(&mut state, features, cfg.embedding_axis)?;
    let n = cfg.n_qubits;
    let mut layer_thetas = vec![[0.0; ROTATIONS_PER_QUBIT]; n];
    for (l, chunk) in mapped.chunks_exact(n * ROTATIONS_PER_QUBIT).enumerate() {
        for (dst, src) in layer_thetas.iter_mut().zip(chunk.chunks_exact(ROTATIONS_PER_QUBIT)) {
            dst.copy_from_slice(src);
        }
        apply_layer(&mut state, &layer_thetas, l + 1)?;
    }
    Ok(state)
}

/// Applies the configured re-mapping to every raw theta.
pub fn mapped_thetas(cfg: &ClassifierConfig, params: &ClassifierParams) -> Result<Vec<f64>> {
    params.check_against(cfg)?;
    crate::remap::remap_all(cfg.remap, &params.thetas)
}

/// Pre-softmax scores: `<Z_c> + bias_c` for the first `k` qubits.
pub fn logits(cfg: &ClassifierConfig, params: &ClassifierParams, features: &[f64]) -> Result<Vec<f64>> {
    let mapped = mapped_thetas(cfg, params)?;
    let state = prepare_state(cfg, &mapped, features)?;
    let mut z = state.expectations_z(cfg.n_classes)?;
    z.iter_mut().zip(&params.biases).for_each(|(z, b)| *z += b);
    Ok(z)
}

/// Class probabilities for one sample.
pub fn forward(cfg: &ClassifierConfig, params: &ClassifierParams, features: &[f64]) -> Result<Vec<f64>> {
    Ok(softmax(&logits(cfg, params, features)?))
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
