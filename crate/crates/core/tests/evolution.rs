use dowsim_core::*;

fn units() -> UnitSystem {
    UnitSystem::natural()
}

fn packet(n: usize, half: f64, x0: f64, sigma: f64, k0: f64) -> Wavefield {
    let g = GridSpec::line(n, -half, half).unwrap();
    gaussian_packet(g, Position::at(x0), sigma, [k0, 0.0]).unwrap()
}

#[test]
fn free_packet_spreads_analytically() {
    let psi = packet(256, 16.0, 0.0, 1.0, 0.0);
    let cfg = EvolutionConfig::new(0.01, 200, units()).unwrap();
    let out = evolve(&psi, &Potential::Free, &cfg).unwrap();
    let want = 2f64.sqrt();
    assert!((out.t() - 2.0).abs() < 1e-12);
    assert!((out.position_spread().x() / want - 1.0).abs() < 0.01);
    assert!((free_spread(1.0, 2.0, &units()) - want).abs() < 1e-12);
}

#[test]
fn norm_survives_ten_thousand_steps() {
    let g = GridSpec::line(256, -16.0, 16.0).unwrap();
    let psi = gaussian_packet(g, Position::at(-4.0), 1.0, [2.0, 0.0]).unwrap();
    let potentials = [
        Potential::Free,
        Potential::harmonic(0.5),
        Potential::HardBarrierWithSlits(Barrier::solid(2.0, 0.5, 40.0)),
        Potential::Sampled(g.coords().iter().map(|x| 0.3 * (x * 0.7).sin()).collect()),
    ];
    for v in &potentials {
        let cfg = EvolutionConfig::new(0.005, 10_000, units()).unwrap();
        let out = evolve(&psi, v, &cfg).unwrap();
        assert!((out.norm_sq() - 1.0).abs() <= 1e-10, "{v:?}: {}", out.norm_sq());
    }
}

#[test]
fn free_momentum_distribution_is_invariant() {
    let psi = packet(256, 16.0, -2.0, 0.8, 3.0);
    let before: Vec<f64> = psi.to_momentum_space().iter().map(|c| c.norm_sqr()).collect();
    let cfg = EvolutionConfig::new(0.01, 300, units()).unwrap();
    let after: Vec<f64> = evolve(&psi, &Potential::Free, &cfg)
        .unwrap()
        .to_momentum_space()
        .iter()
        .map(|c| c.norm_sqr())
        .collect();
    let scale = before.iter().copied().fold(0.0, f64::max);
    for (a, b) in before.iter().zip(&after) {
        assert!((a - b).abs() <= 1e-10 * scale);
    }
}

#[test]
fn stepping_back_recovers_the_field() {
    let psi = packet(128, 8.0, 1.0, 1.0, -2.0);
    let v = Potential::harmonic(1.0);
    let fwd = step(&psi, &v, 0.01, &units()).unwrap();
    let back = step(&fwd, &v, -0.01, &units()).unwrap();
    assert!(back.max_relative_difference(&psi) <= 1e-9);
}

/// Zero crossings of a sampled series, linearly interpolated.
fn crossings(ts: &[f64], xs: &[f64]) -> Vec<f64> {
    ts.windows(2)
        .zip(xs.windows(2))
        .filter(|(_, x)| x[0].signum() != x[1].signum())
        .map(|(t, x)| t[0] + (t[1] - t[0]) * x[0] / (x[0] - x[1]))
        .collect()
}

#[test]
fn coherent_state_oscillates_with_trap_period() {
    // omega = 1, ground-state width 1/sqrt(2): the spread stays put while the
    // centre swings with period 2 pi.
    let sigma0 = 0.5f64.sqrt();
    let psi = packet(128, 8.0, 2.0, sigma0, 0.0);
    let mut prop = Propagator::new(psi.grid(), &Potential::harmonic(1.0), 0.01, &units()).unwrap();
    let mut field = psi.clone();
    let (mut ts, mut xs) = (vec![0.0], vec![field.centroid().x()]);
    for _ in 0..1400 {
        prop.step_in_place(&mut field).unwrap();
        ts.push(field.t());
        xs.push(field.centroid().x());
        assert!((field.position_spread().x() / sigma0 - 1.0).abs() < 0.01);
    }
    let zs = crossings(&ts, &xs);
    assert!(zs.len() >= 4);
    let period = 2.0 * (zs[zs.len() - 1] - zs[0]) / (zs.len() - 1) as f64;
    assert!((period / std::f64::consts::TAU - 1.0).abs() < 0.02, "{period}");
}

#[test]
fn squeezed_state_breathes_at_twice_the_trap_frequency() {
    let psi = packet(128, 8.0, 0.0, 1.0, 0.0);
    let mut prop = Propagator::new(psi.grid(), &Potential::harmonic(1.0), 0.01, &units()).unwrap();
    let mut field = psi;
    for _ in 0..700 {
        prop.step_in_place(&mut field).unwrap();
        let t = field.t();
        let want = (t.cos().powi(2) + 0.25 * t.sin().powi(2)).sqrt();
        assert!((field.position_spread().x() / want - 1.0).abs() < 0.01, "t={t}");
    }
}

/// Mass at `x >= from`.
fn mass_beyond(psi: &Wavefield, from: f64) -> f64 {
    let g = psi.grid();
    (0..g.len())
        .filter(|&i| g.coord(i) >= from)
        .map(|i| psi.amps()[i].norm_sqr() * g.dv())
        .sum()
}

#[test]
fn solid_barrier_reflects() {
    // E = 12.5 against V = 200, one unit thick.
    let barrier = Barrier::solid(0.0, 1.0, 200.0);
    // The reference keeps k_max^2 dt fixed so both runs carry the same
    // splitting error per resolved mode.
    let run = |n: usize| {
        let psi = packet(n, 25.0, -10.0, 1.0, 5.0);
        let refine = (n / 512).pow(2);
        let cfg = EvolutionConfig::new(0.002 / refine as f64, 2000 * refine, units()).unwrap();
        evolve(&psi, &Potential::HardBarrierWithSlits(barrier.clone()), &cfg).unwrap()
    };
    let coarse = run(512);
    let fine = run(2048);
    let (tc, tf) = (
        mass_beyond(&coarse, barrier.far_face()),
        mass_beyond(&fine, barrier.far_face()),
    );
    assert!(tc <= 1e-6 && tf <= 1e-6, "{tc} {tf}");
    // The barrier faces snap to cells, so the reflected packets agree to
    // within a coarse cell.
    let (cc, cf) = (coarse.centroid().x(), fine.centroid().x());
    let dx = coarse.grid().dx();
    assert!(cc < -5.0 && (cc - cf).abs() < dx, "{cc} {cf}");
}

#[test]
fn splitting_is_second_order() {
    // Free evolution is exact under the splitting, so the order is measured
    // in a trap against x(t) = x0 cos t.
    let psi = packet(128, 8.0, 2.0, 0.5f64.sqrt(), 0.0);
    let err = |dt: f64| {
        let n = (5.0 / dt).round() as usize;
        let cfg = EvolutionConfig::new(dt, n, units()).unwrap();
        let out = evolve(&psi, &Potential::harmonic(1.0), &cfg).unwrap();
        (out.centroid().x() - 2.0 * out.t().cos()).abs()
    };
    let ratio = err(0.01) / err(0.005);
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
}

#[test]
fn two_dimensional_free_spreading() {
    let g = GridSpec::square(64, -12.0, 12.0).unwrap();
    let psi = gaussian_packet(g, Position::at_xy(0.0, 0.0), 1.0, [0.0; 2]).unwrap();
    let cfg = EvolutionConfig::new(0.02, 100, units()).unwrap();
    let out = evolve(&psi, &Potential::Free, &cfg).unwrap();
    let sp = out.position_spread();
    for a in 0..2 {
        assert!((sp.axis(a) / 2f64.sqrt() - 1.0).abs() < 0.01);
    }
}
