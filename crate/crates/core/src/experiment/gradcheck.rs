use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::gradient::{loss_gradient_adjoint, loss_gradient_shift, Gradient};
use crate::model::{forward, ClassifierConfig, ClassifierParams};
use crate::remap::RemapKind;
use crate::statevector::RotationAxis;
use crate::training::cross_entropy;

/// Distance from a remap kink below which finite differences are skipped.
const KINK_EXCLUSION: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct GradcheckOptions {
    pub engine_instances: usize,
    pub fd_instances: usize,
    pub max_qubits: usize,
    pub max_layers: usize,
    pub seed: u64,
    pub engine_tolerance: f64,
    pub fd_step: f64,
    pub fd_relative_tolerance: f64,
    pub fd_absolute_floor: f64,
    /// Scales every adjoint theta derivative by 1.01; exists only to prove
    /// that the suite detects a wrong chain factor.
    pub corrupt_adjoint: bool,
}

impl Default for GradcheckOptions {
    fn default() -> Self {
        Self {
            engine_instances: 50,
            fd_instances: 20,
            max_qubits: 4,
            max_layers: 3,
            seed: 0,
            engine_tolerance: 1e-8,
            fd_step: 1e-5,
            fd_relative_tolerance: 1e-4,
            fd_absolute_floor: 1e-7,
            corrupt_adjoint: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckReport {
    pub engine_instances: usize,
    pub fd_instances: usize,
    /// Largest `|adjoint - shift|` over all entries of all instances.
    pub max_engine_deviation: f64,
    /// Largest `|fd - adjoint| / max(|fd|, |adjoint|)` over entries whose
    /// magnitude exceeds the absolute floor.
    pub max_fd_relative_deviation: f64,
    pub fd_failures: usize,
    pub fd_skipped_near_kink: usize,
    pub engine_ok: bool,
    pub fd_ok: bool,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.engine_ok && self.fd_ok
    }
}

struct Instance {
    cfg: ClassifierConfig,
    params: ClassifierParams,
    features: Vec<f64>,
    label: usize,
}

fn random_instance(rng: &mut ChaCha8Rng, opts: &GradcheckOptions) -> Instance {
    let n = rng.gen_range(1..=opts.max_qubits.max(1));
    let layers = rng.gen_range(1..=opts.max_layers.max(1));
    let k = rng.gen_range(1..=n.min(3));
    let axis = if rng.gen_bool(0.5) {
        RotationAxis::X
    } else {
        RotationAxis::Y
    };
    let remap = RemapKind::ALL[rng.gen_range(0..RemapKind::ALL.len())];
    let cfg = ClassifierConfig {
        n_qubits: n,
        n_layers: layers,
        n_classes: k,
        embedding_axis: axis,
        remap,
    };
    let mut params = ClassifierParams::zeros(&cfg);
    params
        .thetas
        .iter_mut()
        .for_each(|t| *t = rng.gen_range(-4.0..4.0));
    params
        .biases
        .iter_mut()
        .for_each(|b| *b = rng.gen_range(-1.0..1.0));
    let features = (0..n).map(|_| rng.gen_range(0.0..PI)).collect();
    let label = rng.gen_range(0..k);
    Instance {
        cfg,
        params,
        features,
        label,
    }
}

fn near_kink(kind: RemapKind, theta: f64) -> bool {
    match kind {
        RemapKind::Clamp => (theta.abs() - PI).abs() < KINK_EXCLUSION,
        RemapKind::Elu => theta.abs() < KINK_EXCLUSION,
        _ => false,
    }
}

fn adjoint(inst: &Instance, corrupt: bool) -> Result<Gradient> {
    let mut g = loss_gradient_adjoint(&inst.cfg, &inst.params, &inst.features, inst.label)?;
    if corrupt {
        g.d_thetas.iter_mut().for_each(|d| *d *= 1.01);
    }
    Ok(g)
}

/// Flat parameter `i`: thetas first, then biases.
fn param_mut(p: &mut ClassifierParams, i: usize) -> &mut f64 {
    let n_thetas = p.thetas.len();
    if i < n_thetas {
        &mut p.thetas[i]
    } else {
        &mut p.biases[i - n_thetas]
    }
}

fn loss(inst: &Instance, params: &ClassifierParams) -> Result<f64> {
    cross_entropy(&forward(&inst.cfg, params, &inst.features)?, inst.label)
}

/// Adjoint vs parameter-shift over random small instances, then adjoint vs
/// central finite differences on the raw parameters.
pub fn gradcheck(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut max_engine = 0.0f64;
    for _ in 0..opts.engine_instances {
        let inst = random_instance(&mut rng, opts);
        let a = adjoint(&inst, opts.corrupt_adjoint)?;
        let s = loss_gradient_shift(&inst.cfg, &inst.params, &inst.features, inst.label)?;
        max_engine = max_engine.max(a.max_abs_diff(&s));
    }

    let mut max_rel = 0.0f64;
    let mut failures = 0;
    let mut skipped = 0;
    let h = opts.fd_step;
    for _ in 0..opts.fd_instances {
        let inst = random_instance(&mut rng, opts);
        let a = adjoint(&inst, opts.corrupt_adjoint)?.to_flat();
        let n_thetas = inst.params.thetas.len();
        let mut probe = inst.params.clone();
        for (i, &analytic) in a.iter().enumerate() {
            let x0 = *param_mut(&mut probe, i);
            if i < n_thetas && near_kink(inst.cfg.remap, x0) {
                skipped += 1;
                continue;
            }
            *param_mut(&mut probe, i) = x0 + h;
            let up = loss(&inst, &probe)?;
            *param_mut(&mut probe, i) = x0 - h;
            let down = loss(&inst, &probe)?;
            *param_mut(&mut probe, i) = x0;
            let fd = (up - down) / (2.0 * h);

            let diff = (fd - analytic).abs();
            let scale = fd.abs().max(analytic.abs());
            if scale > opts.fd_absolute_floor {
                max_rel = max_rel.max(diff / scale);
            }
            if diff > opts.fd_absolute_floor && diff > opts.fd_relative_tolerance * scale {
                failures += 1;
            }
        }
    }

    Ok(GradcheckReport {
        engine_instances: opts.engine_instances,
        fd_instances: opts.fd_instances,
        max_engine_deviation: max_engine,
        max_fd_relative_deviation: max_rel,
        fd_failures: failures,
        fd_skipped_near_kink: skipped,
        engine_ok: max_engine < opts.engine_tolerance,
        fd_ok: failures == 0,
    })
}
