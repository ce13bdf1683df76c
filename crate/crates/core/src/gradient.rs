//! Loss gradients with respect to the raw classifier parameters.
//!
//! Two independent engines produce the same [`Gradient`]:
//!
//! * [`loss_gradient_adjoint`]: one forward sweep, then one reverse sweep
//!   that un-computes each gate on both the state and the costate
//!   `lambda = H|psi>`, where `H = sum_c (p_c - y_c) Z_c` is the loss
//!   linearised at the output. Cost is a small multiple of one forward pass.
//! * [`loss_gradient_shift`]: the two-term parameter-shift rule,
//!   `dE/dt = (E(t + pi/2) - E(t - pi/2)) / 2`, evaluated per mapped angle.
//!   Two circuit executions per theta.
//!
//! Both then apply the re-mapping chain factor `phi'(theta_raw)`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::model::{
    self, embed_features, entangler_pairs, prepare_state, qubit_unitary, ClassifierConfig, ClassifierParams,
    ROTATIONS_PER_QUBIT,
};
use crate::statevector::{dagger, mat_mul, operator_overlap, pauli, rotation_matrix, Mat2, RotationAxis, StateVector};
use crate::training::cross_entropy;

/// `dL/dparams`, shaped like [`ClassifierParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub d_thetas: Vec<f64>,
    pub d_biases: Vec<f64>,
}

impl Gradient {
    pub fn zeros(cfg: &ClassifierConfig) -> Self {
        Self {
            d_thetas: vec![0.0; cfg.n_thetas()],
            d_biases: vec![0.0; cfg.n_classes],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.d_thetas.iter().chain(&self.d_biases)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.iter().copied().collect()
    }

    pub fn add_assign(&mut self, other: &Gradient) {
        for (a, b) in self.d_thetas.iter_mut().zip(&other.d_thetas) {
            *a += b;
        }
        for (a, b) in self.d_biases.iter_mut().zip(&other.d_biases) {
            *a += b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.d_thetas.iter_mut().for_each(|g| *g *= factor);
        self.d_biases.iter_mut().for_each(|g| *g *= factor);
    }

    pub fn max_abs_diff(&self, other: &Gradient) -> f64 {
        self.iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|g| g.is_finite())
    }
}

/// Gradient together with the by-products of the forward pass.
#[derive(Clone, Debug)]
pub struct SampleGradient {
    pub gradient: Gradient,
    pub loss: f64,
    pub probs: Vec<f64>,
}

fn check_label(cfg: &ClassifierConfig, label: usize) -> Result<()> {
    if label < cfg.n_classes {
        Ok(())
    } else {
        Err(Error::InvalidLabel {
            label,
            n_classes: cfg.n_classes,
        })
    }
}

/// `softmax(logits) - onehot(label)`, which is both `dL/dlogits` and `dL/dbiases`.
fn output_error(probs: &[f64], label: usize) -> Vec<f64> {
    probs
        .iter()
        .enumerate()
        .map(|(c, &p)| if c == label { p - 1.0 } else { p })
        .collect()
}

/// Parameter-shift derivative of `<Z_qubit>` with respect to the mapped
/// angle `mapped[param_index]`.
pub fn parameter_shift_expectation_grad(
    cfg: &ClassifierConfig,
    mapped: &[f64],
    features: &[f64],
    qubit: usize,
    param_index: usize,
) -> Result<f64> {
    if param_index >= mapped.len() {
        return Err(Error::Shape {
            context: "parameter index",
            expected: mapped.len(),
            found: param_index,
        });
    }
    let mut shifted = mapped.to_vec();
    shifted[param_index] = mapped[param_index] + FRAC_PI_2;
    let plus = prepare_state(cfg, &shifted, features)?.expectation_z(qubit)?;
    shifted[param_index] = mapped[param_index] - FRAC_PI_2;
    let minus = prepare_state(cfg, &shifted, features)?.expectation_z(qubit)?;
    Ok((plus - minus) / 2.0)
}

/// Cross-entropy gradient assembled from parameter-shift derivatives of
/// every measured expectation.
pub fn loss_gradient_shift(
    cfg: &ClassifierConfig,
    params: &ClassifierParams,
    features: &[f64],
    label: usize,
) -> Result<Gradient> {
    check_label(cfg, label)?;
    let mapped = model::mapped_thetas(cfg, params)?;
    let k = cfg.n_classes;

    let mut logits = prepare_state(cfg, &mapped, features)?.expectations_z(k)?;
    logits.iter_mut().zip(&params.biases).for_each(|(z, b)| *z += b);
    let err = output_error(&model::softmax(&logits), label);

    let mut shifted = mapped.clone();
    let mut d_thetas = Vec::with_capacity(mapped.len());
    for (idx, &raw) in params.thetas.iter().enumerate() {
        shifted[idx] = mapped[idx] + FRAC_PI_2;
        let plus = prepare_state(cfg, &shifted, features)?.expectations_z(k)?;
        shifted[idx] = mapped[idx] - FRAC_PI_2;
        let minus = prepare_state(cfg, &shifted, features)?.expectations_z(k)?;
        shifted[idx] = mapped[idx];

        let d_mapped: f64 = err
            .iter()
            .zip(plus.iter().zip(&minus))
            .map(|(e, (p, m))| e * (p - m) / 2.0)
            .sum();
        d_thetas.push(d_mapped * cfg.remap.derivative_unchecked(raw));
    }
    Ok(Gradient {
        d_thetas,
        d_biases: err,
    })
}

/// Cross-entropy gradient by reverse-mode sweep over the gate list.
pub fn loss_gradient_adjoint(
    cfg: &ClassifierConfig,
    params: &ClassifierParams,
    features: &[f64],
    label: usize,
) -> Result<Gradient> {
    adjoint_sample(cfg, params, features, label).map(|s| s.gradient)
}

/// [`loss_gradient_adjoint`] that also returns the loss and output
/// probabilities computed on the way.
pub fn adjoint_sample(
    cfg: &ClassifierConfig,
    params: &ClassifierParams,
    features: &[f64],
    label: usize,
) -> Result<SampleGradient> {
    check_label(cfg, label)?;
    let mapped = model::mapped_thetas(cfg, params)?;
    if features.len() != cfg.n_qubits {
        return Err(Error::Shape {
            context: "feature vector",
            expected: cfg.n_qubits,
            found: features.len(),
        });
    }
    let n = cfg.n_qubits;
    let per_layer = n * ROTATIONS_PER_QUBIT;
    let unitaries: Vec<Mat2> = mapped
        .chunks_exact(ROTATIONS_PER_QUBIT)
        .map(|t| qubit_unitary(&[t[0], t[1], t[2]]))
        .collect();

    let mut psi = StateVector::zero_state(n)?;
    embed_features(&mut psi, features, cfg.embedding_axis)?;
    for (l, layer) in unitaries.chunks_exact(n).enumerate() {
        for (q, u) in layer.iter().enumerate() {
            psi.apply_matrix(q, u);
        }
        for (c, t) in entangler_pairs(n, l + 1) {
            psi.cnot(c, t);
        }
    }
    let mut logits = psi.expectations_z(cfg.n_classes)?;
    logits.iter_mut().zip(&params.biases).for_each(|(z, b)| *z += b);
    let probs = model::softmax(&logits);
    let loss = cross_entropy(&probs, label)?;
    let err = output_error(&probs, label);

    // Reverse sweep. For the qubit triple U = RZ(c) RY(b) RZ(a) with psi and
    // lambda taken after U, dL/dx = Im <lambda| G_x |psi> where each
    // generator is conjugated by the rotations that follow it:
    //   G_c = Z,  G_b = RZ(c) Y RZ(c)^,  G_a = RZ(c) RY(b) Z RY(b)^ RZ(c)^.
    let mut lambda = psi.weighted_z_image(&err);
    let mut d_thetas = vec![0.0; mapped.len()];
    let (pz, py) = (pauli(RotationAxis::Z), pauli(RotationAxis::Y));
    for l in (0..cfg.n_layers).rev() {
        for (c, t) in entangler_pairs(n, l + 1).into_iter().rev() {
            psi.cnot(c, t);
            lambda.cnot(c, t);
        }
        for q in (0..n).rev() {
            let base = l * per_layer + q * ROTATIONS_PER_QUBIT;
            let t = &mapped[base..base + ROTATIONS_PER_QUBIT];
            let rz_c = rotation_matrix(RotationAxis::Z, t[2]);
            let rzry = mat_mul(&rz_c, &rotation_matrix(RotationAxis::Y, t[1]));
            let g_c = pz;
            let g_b = mat_mul(&mat_mul(&rz_c, &py), &dagger(&rz_c));
            let g_a = mat_mul(&mat_mul(&rzry, &pz), &dagger(&rzry));

            let corr = psi.pair_correlation(&lambda, q);
            d_thetas[base] = operator_overlap(&g_a, &corr).im;
            d_thetas[base + 1] = operator_overlap(&g_b, &corr).im;
            d_thetas[base + 2] = operator_overlap(&g_c, &corr).im;

            if l > 0 || q > 0 {
                let inv = dagger(&unitaries[l * n + q]);
                psi.apply_matrix(q, &inv);
                lambda.apply_matrix(q, &inv);
            }
        }
    }
    for (d, &raw) in d_thetas.iter_mut().zip(&params.thetas) {
        *d *= cfg.remap.derivative_unchecked(raw);
    }

    Ok(SampleGradient {
        gradient: Gradient {
            d_thetas,
            d_biases: err,
        },
        loss,
        probs,
    })
}
