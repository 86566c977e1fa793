//! Probe: mu-continuation qualitative checks at small n.

use ldg_core::domain::{boundary_hedgehog, build_grid, DomainSpec};
use ldg_core::energy::energy_constrained;
use ldg_core::minimize::*;

fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    let iters: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(6000);
    let spec = DomainSpec::ball(1.0).unwrap();
    let grid = build_grid(&spec, n).unwrap();
    let h = grid.spacing();
    let bc = boundary_hedgehog(&grid);
    let opts = SolveOptions { tol: 1e-4, max_iters: iters, noise_amplitude: 0.1, seed: 0, trace_every: 1000 };
    let t = std::time::Instant::now();
    let start = default_start_constrained(&bc, &opts);
    let stages = mu_continuation(&start, 1.0, &[50.0, 200.0, 800.0], &opts).unwrap();
    for s in &stages {
        println!(
            "mu={:6.0}: iters={:6} res={:.2e} min|Q|={:.4} max|Q|={:.6} (cap {:.6}) muPen={:.5} E={:.4}",
            s.mu, s.report.iterations, s.report.residual_scaled, s.report.min_norm,
            s.report.max_norm, 1.0 + 5.0 * h * h, s.mu_penalty_integral, s.report.energy.total
        );
    }
    println!("ladder wall: {:.1}s", t.elapsed().as_secs_f64());

    // Cross-solver consistency: renormalized mu=800 field vs constrained.
    let t = std::time::Instant::now();
    let (cfield, crep) = minimize_constrained(&start, 1.0, &opts).unwrap();
    let renorm = renormalized(&stages.last().unwrap().field);
    let e_renorm = energy_constrained(&renorm, 1.0).unwrap().total;
    let e_constr = energy_constrained(&cfield, 1.0).unwrap().total;
    println!(
        "constrained E={:.5} (iters {}), renormalized mu=800 E={:.5}, rel diff {:.3}%  ({:.1}s)",
        e_constr, crep.iterations, e_renorm,
        100.0 * (e_renorm - e_constr).abs() / e_constr,
        t.elapsed().as_secs_f64()
    );
    let biax = ldg_core::topology::biaxiality_field(&stages.last().unwrap().field);
    let (lo, hi) = biax.range();
    println!("mu=800 beta range [{lo:.4}, {hi:.4}], masked {}", biax.masked_count());
}
