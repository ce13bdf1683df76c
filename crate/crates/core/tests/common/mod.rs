//! Independent oracles shared by the property tests and the acceptance
//! suite: a dense Kronecker-product simulator and sweep-style checks of the
//! remap laws.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::Rng;

use qremap::data::{self, Dataset, DatasetKind};
use qremap::statevector::{rotation_matrix, Mat2};
use qremap::{GateOp, RemapKind, RotationAxis, StateVector};

pub fn data_path(kind: DatasetKind) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(kind.file_name())
}

pub fn load_scaled(kind: DatasetKind) -> Dataset {
    let raw = data::load_csv(&data_path(kind), kind).expect("dataset file");
    data::scale_features(&raw).expect("scalable").0
}

// ---------------------------------------------------------------- simulator

pub type Dense = Vec<Vec<Complex64>>;

fn identity(dim: usize) -> Dense {
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn kron(a: &Dense, b: &Dense) -> Dense {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn mat2_dense(m: &Mat2) -> Dense {
    vec![m[0].to_vec(), m[1].to_vec()]
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Full 2^n × 2^n unitary of a gate, built as I ⊗ … ⊗ U ⊗ … ⊗ I with qubit
/// 0 as the leftmost factor; CNOT as P0 ⊗ I + P1 ⊗ X on the two wires.
pub fn gate_matrix(n: usize, gate: &GateOp) -> Dense {
    let one = |m: &Dense, q: usize| {
        (0..n).fold(vec![vec![Complex64::new(1.0, 0.0)]], |acc, i| {
            kron(&acc, &if i == q { m.clone() } else { identity(2) })
        })
    };
    match *gate {
        GateOp::Rotation {
            axis,
            target,
            angle,
        } => one(&mat2_dense(&rotation_matrix(axis, angle)), target),
        GateOp::CNot { control, target } => {
            let c0 = Complex64::new(0.0, 0.0);
            let c1 = Complex64::new(1.0, 0.0);
            let p0 = vec![vec![c1, c0], vec![c0, c0]];
            let p1 = vec![vec![c0, c0], vec![c0, c1]];
            let x = vec![vec![c0, c1], vec![c1, c0]];
            let build = |ctl: &Dense, tgt: &Dense| {
                (0..n).fold(vec![vec![c1]], |acc, i| {
                    let f = if i == control {
                        ctl.clone()
                    } else if i == target {
                        tgt.clone()
                    } else {
                        identity(2)
                    };
                    kron(&acc, &f)
                })
            };
            let a = build(&p0, &identity(2));
            let b = build(&p1, &x);
            a.iter()
                .zip(&b)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(u, v)| u + v).collect())
                .collect()
        }
    }
}

pub fn dense_apply(m: &Dense, v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn random_gate<R: Rng>(rng: &mut R, n: usize) -> GateOp {
    if n >= 2 && rng.gen_bool(0.3) {
        let control = rng.gen_range(0..n);
        let mut target = rng.gen_range(0..n - 1);
        if target >= control {
            target += 1;
        }
        GateOp::CNot { control, target }
    } else {
        GateOp::Rotation {
            axis: RotationAxis::ALL[rng.gen_range(0..3)],
            target: rng.gen_range(0..n),
            angle: rng.gen_range(-4.0 * PI..4.0 * PI),
        }
    }
}

pub fn random_state<R: Rng>(rng: &mut R, n: usize) -> StateVector {
    let raw: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(raw.into_iter().map(|a| a / norm).collect()).unwrap()
}

pub fn max_elementwise(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest deviation between the in-place simulator and the dense oracle
/// over a random gate sequence applied to a random state; also checks the
/// whole sequence against the product of the dense matrices.
pub fn brute_force_deviation<R: Rng>(rng: &mut R, n: usize, n_gates: usize) -> f64 {
    let mut sv = random_state(rng, n);
    let start = sv.amplitudes().to_vec();
    let mut dense = start.clone();
    let mut product = identity(1 << n);
    let mut worst = 0.0f64;
    for _ in 0..n_gates {
        let g = random_gate(rng, n);
        sv.apply(&g).unwrap();
        let m = gate_matrix(n, &g);
        dense = dense_apply(&m, &dense);
        product = matmul(&m, &product);
        worst = worst.max(max_elementwise(sv.amplitudes(), &dense));
    }
    worst.max(max_elementwise(sv.amplitudes(), &dense_apply(&product, &start)))
}

/// |‖ψ‖ − 1| after a random gate sequence from |0…0⟩.
pub fn norm_drift<R: Rng>(rng: &mut R, n: usize, n_gates: usize) -> f64 {
    let mut sv = StateVector::zero_state(n).unwrap();
    for _ in 0..n_gates {
        sv.apply(&random_gate(rng, n)).unwrap();
    }
    (sv.norm() - 1.0).abs()
}

// -------------------------------------------------------------------- remap

/// Below this θ, e^θ is under half an ulp of 1, so π(e^θ − 1) rounds to
/// exactly −π in f64; the ELU bound is only strict above it.
pub const ELU_STRICT_FLOOR: f64 = -36.0;

/// ELU lower bound: strictly above −π wherever f64 can tell the difference.
pub fn elu_bound_holds(theta: f64, value: f64) -> bool {
    if theta > ELU_STRICT_FLOOR {
        value > -PI
    } else {
        value >= -PI
    }
}

pub fn near_kink(kind: RemapKind, theta: f64) -> bool {
    match kind {
        RemapKind::Clamp => (theta.abs() - PI).abs() < 1e-3,
        RemapKind::Elu => theta.abs() < 1e-3,
        _ => false,
    }
}

/// Outcome of one remap law over one kind: `None` when it holds, otherwise
/// a description of the first counterexample.
pub type LawResult = Option<String>;

pub fn range_law<R: Rng>(rng: &mut R, kind: RemapKind, samples: usize) -> LawResult {
    for _ in 0..samples {
        let t = rng.gen_range(-100.0..100.0);
        let v = kind.value(t).unwrap();
        let ok = match kind {
            RemapKind::Identity => true,
            RemapKind::Elu => elu_bound_holds(t, v),
            _ => (-PI..=PI).contains(&v),
        };
        if !ok {
            return Some(format!("{kind}({t}) = {v}"));
        }
    }
    None
}

pub fn origin_law(kind: RemapKind) -> LawResult {
    let v = kind.value(0.0).unwrap();
    let tol = match kind {
        RemapKind::Identity | RemapKind::Clamp | RemapKind::Elu => 0.0,
        _ => 1e-15,
    };
    (v.abs() > tol).then(|| format!("{kind}(0) = {v}"))
}

pub fn odd_law<R: Rng>(rng: &mut R, kind: RemapKind, samples: usize) -> LawResult {
    if kind == RemapKind::Elu {
        return None;
    }
    for _ in 0..samples {
        let t = rng.gen_range(-100.0..100.0);
        let (a, b) = (kind.value(-t).unwrap(), kind.value(t).unwrap());
        if (a + b).abs() > 1e-12 {
            return Some(format!("{kind}: φ(-{t}) + φ({t}) = {}", a + b));
        }
    }
    None
}

pub fn monotone_law<R: Rng>(rng: &mut R, kind: RemapKind, samples: usize) -> LawResult {
    for _ in 0..samples {
        let a: f64 = rng.gen_range(-100.0..100.0);
        let b: f64 = rng.gen_range(-100.0..100.0);
        let (lo, hi) = (a.min(b), a.max(b));
        if kind.value(lo).unwrap() > kind.value(hi).unwrap() {
            return Some(format!("{kind}: φ({lo}) > φ({hi})"));
        }
    }
    None
}

pub fn derivative_law<R: Rng>(rng: &mut R, kind: RemapKind, samples: usize) -> LawResult {
    let h = 1e-6;
    for _ in 0..samples {
        let t = rng.gen_range(-10.0..10.0);
        if near_kink(kind, t) {
            continue;
        }
        let fd = (kind.value(t + h).unwrap() - kind.value(t - h).unwrap()) / (2.0 * h);
        let d = kind.derivative(t).unwrap();
        if (fd - d).abs() >= 1e-5 {
            return Some(format!("{kind}'({t}) = {d}, finite difference {fd}"));
        }
    }
    None
}
