mod common;

use scatter_core::grid::RadialGrid;
use scatter_core::molecular_structure::{bound_expectation_r, morse_levels, vibrational_period_fs, PotentialParams};
use scatter_core::special::spherical_j;

// reference values from 30-digit quadrature of the analytic eigenfunctions
const E0: f64 = -0.097_288_482_123_316_64;
const E1: f64 = -0.087_088_940_566_188_53;
const E17: f64 = -0.000_689_889_903_405_032_7;
const MEAN_R0: f64 = 2.055_703_651_522_243;
const MEAN_R1: f64 = 2.172_133_983_407_015;
const MEAN_R17: f64 = 8.117_650_503_996_842;
const MEAN_R18: f64 = 11.032_286_603_141_864;

/// Plain Numerov count of nodes of the outward solution at energy `e`.
fn node_count(params: &PotentialParams, e: f64, r_min: f64, r_max: f64, h: f64) -> usize {
    let mu = params.reduced_mass();
    let n = ((r_max - r_min) / h) as usize;
    let f = |i: usize| 2.0 * mu * (e - params.sigma_g(r_min + h * i as f64).unwrap());
    let c = h * h / 12.0;
    let (mut y0, mut y1) = (0.0, 1e-20);
    let mut nodes = 0;
    for i in 1..n {
        let y2 = (2.0 * y1 * (1.0 - 5.0 * c * f(i)) - y0 * (1.0 + c * f(i - 1))) / (1.0 + c * f(i + 1));
        if y2 * y1 < 0.0 {
            nodes += 1;
        }
        let scale = if y2.abs() > 1e100 { 1e-100 } else { 1.0 };
        y0 = y1 * scale;
        y1 = y2 * scale;
    }
    nodes
}

/// Eigenvalue ν by bisection on the node count.
fn shooting_energy(params: &PotentialParams, nu: usize) -> f64 {
    let (mut lo, mut hi) = (-params.depth, 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if node_count(params, mid, 0.3, 20.0, 0.004) > nu {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn level_energies_match_shooting() {
    let p = PotentialParams::default();
    for nu in [0usize, 1, 3, 6] {
        let shot = shooting_energy(&p, nu);
        assert!((p.level_energy(nu) - shot).abs() < 1e-5, "ν = {nu}: {} vs {shot}", p.level_energy(nu));
    }
}

#[test]
fn level_energies_match_reference() {
    let p = PotentialParams::default();
    assert!((p.level_energy(0) - E0).abs() < 1e-12);
    assert!((p.level_energy(1) - E1).abs() < 1e-12);
    assert!((p.level_energy(17) - E17).abs() < 1e-12);
    assert_eq!(p.level_count(), 19);
    assert!((vibrational_period_fs(&p) - 14.901_058_890_156_74).abs() < 1e-9);
}

#[test]
fn mean_bond_lengths_match_reference() {
    let p = PotentialParams::default();
    let levels = morse_levels(&p, &common::default_grid()).unwrap();
    for (nu, expect) in [(0usize, MEAN_R0), (1, MEAN_R1), (17, MEAN_R17), (18, MEAN_R18)] {
        let r = bound_expectation_r(&levels[nu]).unwrap();
        assert!((r - expect).abs() < 1e-6, "ν = {nu}: {r}");
    }
}

#[test]
fn bound_states_satisfy_the_radial_equation() {
    let p = PotentialParams::default();
    let grid = RadialGrid::new(0.2, 40.0, 0.005).unwrap();
    let levels = morse_levels(&p, &grid).unwrap();
    let mu = p.reduced_mass();
    for nu in [0usize, 4, 10, 17] {
        let level = &levels[nu];
        let f: Vec<f64> = grid.points().map(|r| 2.0 * mu * (level.energy - p.sigma_g(r).unwrap())).collect();
        let res = common::relative_residual(&level.wavefunction.values, &f, grid.dr());
        assert!(res < 1e-4, "ν = {nu}: {res}");
    }
}

#[test]
fn levels_are_orthonormal() {
    let p = PotentialParams::default();
    let levels = morse_levels(&p, &common::default_grid()).unwrap();
    for a in [0usize, 1, 7, 17] {
        for b in [0usize, 1, 7, 17] {
            let o = levels[a].wavefunction.overlap(&levels[b].wavefunction).unwrap();
            let expect = if a == b { 1.0 } else { 0.0 };
            assert!((o - expect).abs() < 1e-6, "⟨{a}|{b}⟩ = {o}");
        }
    }
}

#[test]
#[allow(clippy::excessive_precision)]
fn spherical_bessel_reference_values() {
    // 20-digit values of √(π/2x) J_{l+1/2}(x)
    let cases = [
        (0usize, 0.5, 0.958_851_077_208_406_000_55),
        (1, 1e-3, 3.333_333_000_000_011_974_2e-4),
        (3, 0.7, 3.178_724_856_331_368_881_1e-3),
        (9, 2.5, 5.015_871_237_693_882_091_6e-6),
        (9, 30.0, -0.034_063_510_987_563_681_181),
        (20, 5.0, 5.427_726_760_793_208_350_1e-12),
        (41, 60.0, -0.018_242_355_556_512_436_655),
        (5, 150.0, -0.005_115_917_538_502_264_360_2),
    ];
    for (l, x, expect) in cases {
        let v = spherical_j(l, x);
        assert!((v - expect).abs() < 1e-12 * expect.abs(), "j_{l}({x}) = {v}, expected {expect}");
    }
}
