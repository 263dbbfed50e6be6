//! Exact density-matrix oracle for the analyzer acting on Ψ⁻01 ⊗ Ψ⁻23,
//! written with explicit index loops and no library state algebra.
#![allow(dead_code)]

use std::f64::consts::FRAC_1_SQRT_2;

fn singlet_amp(x: usize, y: usize) -> f64 {
    match (x, y) {
        (0, 1) => FRAC_1_SQRT_2,
        (1, 0) => -FRAC_1_SQRT_2,
        _ => 0.0,
    }
}

/// Amplitude of Ψ⁻01 ⊗ Ψ⁻23 on a basis index (most significant bit is
/// mode 0, H = 0).
fn ideal_amplitude(idx: usize) -> f64 {
    let b = |m: usize| (idx >> (3 - m)) & 1;
    singlet_amp(b(0), b(1)) * singlet_amp(b(2), b(3))
}

fn index(b0: usize, b1: usize, b2: usize, b3: usize) -> usize {
    (b0 << 3) | (b1 << 2) | (b2 << 1) | b3
}

/// Exact oracle: unnormalized (0,3) states of both branches, each a 4×4
/// matrix over |b0 b3⟩, with explicit index loops.
pub fn oracle_branches() -> ([[f64; 4]; 4], [[f64; 4]; 4]) {
    let psi: Vec<f64> = (0..16).map(ideal_amplitude).collect();
    let mut coherent = [[0.0; 4]; 4];
    let mut marginal = [[0.0; 4]; 4];
    for a0 in 0..2 {
        for a3 in 0..2 {
            for c0 in 0..2 {
                for c3 in 0..2 {
                    // ⟨Ψ⁻12| contracted on both sides
                    let mut amp_l = 0.0;
                    let mut amp_r = 0.0;
                    for x in 0..2 {
                        for y in 0..2 {
                            amp_l += singlet_amp(x, y) * psi[index(a0, x, y, a3)];
                            amp_r += singlet_amp(x, y) * psi[index(c0, x, y, c3)];
                        }
                    }
                    coherent[2 * a0 + a3][2 * c0 + c3] = amp_l * amp_r;
                    // trace over modes 1,2
                    let mut tr = 0.0;
                    for x in 0..2 {
                        for y in 0..2 {
                            tr += psi[index(a0, x, y, a3)] * psi[index(c0, x, y, c3)];
                        }
                    }
                    marginal[2 * a0 + a3][2 * c0 + c3] = tr;
                }
            }
        }
    }
    (coherent, marginal)
}

pub fn singlet_overlap(rho: &[[f64; 4]; 4]) -> f64 {
    let s = [0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0];
    let mut f = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            f += s[i] * rho[i][j] * s[j];
        }
    }
    f
}

pub fn trace(rho: &[[f64; 4]; 4]) -> f64 {
    (0..4).map(|i| rho[i][i]).sum()
}

pub fn oracle_fidelity(v: f64) -> f64 {
    let (coherent, marginal) = oracle_branches();
    // distinguishable branch: accepted with ⟨Ψ⁻|ρ12|Ψ⁻⟩ = 1/4, modes 0,3 left in their marginal
    let accept_d = 0.25;
    let wc = v * trace(&coherent);
    let wd = (1.0 - v) * accept_d;
    let fc = singlet_overlap(&coherent) / trace(&coherent);
    let fd = singlet_overlap(&marginal) / trace(&marginal);
    (wc * fc + wd * fd) / (wc + wd)
}
