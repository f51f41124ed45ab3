use std::f64::consts::PI;

use num_complex::Complex64;
use scatter_core::collision_timing::{
    collision_probability, collision_time_grid, contact_overlap, propagate_density, CollisionMeasure,
    GaussianPacket1D, TimeWindow,
};
use scatter_core::units::Masses;

/// |ψ(x, t)|² by summing the free momentum components on a fine grid.
fn spectral_density(p: &GaussianPacket1D, x: f64, t: f64) -> f64 {
    let n = 6001;
    let span = 14.0 * p.width;
    let dk = 2.0 * span / (n - 1) as f64;
    let norm = (p.width * PI.sqrt()).powf(-0.5);
    let mut psi = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let k = p.momentum - span + dk * i as f64;
        let g = norm * (-0.5 * ((k - p.momentum) / p.width).powi(2)).exp();
        // launch phase places the focus at t = −τ_d
        let launch = k * p.momentum / p.mass * p.focus_offset - 0.5 * k * k / p.mass * p.focus_offset;
        let phase = k * (x - p.center) - 0.5 * k * k / p.mass * t + launch;
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        psi += Complex64::from_polar(w * g * dk, phase);
    }
    psi.norm_sqr() / (2.0 * PI)
}

#[test]
fn closed_form_density_matches_spectral_propagation() {
    let m = Masses::default();
    let electron = GaussianPacket1D { mass: 1.0, momentum: 4.0, width: 0.3, focus_offset: 2.5, center: -1.0 };
    let ion = GaussianPacket1D { mass: m.ion(), momentum: 0.5, width: 1.0, focus_offset: 0.0, center: 3.0 };
    let samples = [(0.0, 0.0), (3.0, 1.0), (8.0, 2.2), (-1.5, -0.7), (20.0, 5.0)];
    for packet in [electron, ion] {
        let peak = propagate_density(&packet, 0.0).eval(packet.center_at(0.0));
        for (dx, t) in samples {
            let x = packet.center_at(t) + dx * (packet.variance_at(t).sqrt() / 3.0);
            let closed = propagate_density(&packet, t).eval(x);
            let numeric = spectral_density(&packet, x, t);
            assert!((closed - numeric).abs() < 1e-6 * peak, "x = {x}, t = {t}: {closed} vs {numeric}");
        }
    }
}

#[test]
fn overlap_matches_direct_integral() {
    let m = Masses::default();
    let e = GaussianPacket1D { mass: 1.0, momentum: 4.0, width: 0.2, focus_offset: 0.0, center: -30.0 };
    let i = GaussianPacket1D { mass: m.ion(), momentum: 0.0, width: 1.0, focus_offset: 0.0, center: 0.0 };
    for t in [0.0, 5.0, 7.5, 12.0] {
        let (a, b) = (propagate_density(&e, t), propagate_density(&i, t));
        let lo = a.mean.min(b.mean) - 40.0;
        let hi = a.mean.max(b.mean) + 40.0;
        let n = 400_001;
        let h = (hi - lo) / (n - 1) as f64;
        let direct: f64 = (0..n)
            .map(|k| {
                let z = lo + h * k as f64;
                let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                w * a.eval(z) * b.eval(z)
            })
            .sum::<f64>()
            * h;
        let closed = contact_overlap(&e, &i, t);
        assert!((closed - direct).abs() < 1e-8 * closed.max(1e-300), "t = {t}: {closed} vs {direct}");
    }
}

#[test]
fn duration_scales_inversely_with_momentum_width() {
    let m = Masses::default();
    let ion = GaussianPacket1D { mass: m.ion(), momentum: 0.0, width: 1.0, focus_offset: 0.0, center: 0.0 };
    let duration = |dp: f64| {
        let e = GaussianPacket1D { mass: 1.0, momentum: 4.0, width: dp, focus_offset: 0.0, center: 0.0 };
        let grid = collision_time_grid(&e, &ion, &TimeWindow::default());
        collision_probability(&e, &ion, &grid, CollisionMeasure::Density).unwrap().duration
    };
    let (d1, d2) = (duration(0.01), duration(0.001));
    assert!((d2 / d1 - 10.0).abs() < 0.2, "{}", d2 / d1);
    // 2σ of ρ_e ⊗ ρ_I along the relative coordinate, crossed at the relative speed
    let v = 4.0;
    let expect = 2.0 * (0.5 / (0.001f64 * 0.001) + 0.5).sqrt() / v;
    assert!((d2 - expect).abs() < 1e-3 * expect, "{d2} vs {expect}");
}
