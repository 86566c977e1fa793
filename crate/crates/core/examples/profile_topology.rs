//! Probe: how many descent iterations the torus topology needs.

use ldg_core::domain::{boundary_hedgehog, build_grid, DomainSpec};
use ldg_core::minimize::{default_start_constrained, minimize_constrained, SolveOptions};
use ldg_core::topology::{biaxiality_field, boundary_degree, extract_level_set, region_report};

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    let iters: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(12000);
    let spec = DomainSpec::ball(1.0).unwrap();
    let grid = build_grid(&spec, n).unwrap();
    let bc = boundary_hedgehog(&grid);
    let opts = SolveOptions {
        tol: 1e-4,
        max_iters: iters,
        noise_amplitude: 0.1,
        seed: 0,
        trace_every: 1000,
    };
    let t = std::time::Instant::now();
    let start = default_start_constrained(&bc, &opts);
    let (field, report) = minimize_constrained(&start, 1.0, &opts).unwrap();
    println!(
        "n={n} iters={} res={:.3e} E={:.6} wall={:.1}s",
        report.iterations, report.residual_scaled, report.energy.total,
        t.elapsed().as_secs_f64()
    );
    let biax = biaxiality_field(&field);
    let (lo, hi) = biax.range();
    println!("beta range [{lo:.5}, {hi:.5}], beta_bar={:.5}", biax.beta_bar);
    match extract_level_set(&biax, 0.0) {
        Ok(mesh) => {
            for c in &mesh.components {
                println!("  level 0 comp {}: chi={} genus={:?} closed={} area={:.4}", c.id, c.euler, c.genus, c.closed, c.area);
            }
        }
        Err(e) => println!("  level 0: {e}"),
    }
    let rep = region_report(&biax, -0.8, 0.8);
    println!("region(-0.8,0.8): low_empty={} high_empty={} low_genus={:?} high_genus={:?} linked={}",
        rep.low_empty, rep.high_empty, rep.low_genus, rep.high_genus, rep.surrogate_linked);
    match boundary_degree(&field) {
        Ok(d) => println!("boundary degree = {d}"),
        Err(e) => println!("boundary degree error: {e}"),
    }
}
