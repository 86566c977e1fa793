//! Quick timing probe for the descent engine (not part of the test
//! suite; run with `cargo run -p ldg-core --example profile_descent`).

use ldg_core::domain::{boundary_hedgehog, build_grid, DomainSpec};
use ldg_core::energy::{residual_l2, residual_unconstrained};
use ldg_core::minimize::{
    default_start_constrained, harmonic_extension, minimize_constrained, minimize_unconstrained,
    SolveOptions,
};
use ldg_core::topology::biaxiality_field;

fn main() {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(32);
    let spec = DomainSpec::ball(1.0).unwrap();
    let grid = build_grid(&spec, n).unwrap();
    let bc = boundary_hedgehog(&grid);

    let t = std::time::Instant::now();
    let he = harmonic_extension(&bc, 1e-8, 10_000);
    let res = residual_unconstrained(&he, 0.0, 0.0);
    println!(
        "CG harmonic ext (n={n}): {:.2}s, residual {:.3e}",
        t.elapsed().as_secs_f64(),
        residual_l2(&he, &res)
    );

    let opts = SolveOptions {
        tol: 1e-5,
        max_iters: 50_000,
        noise_amplitude: 0.1,
        seed: 0,
        trace_every: 500,
    };
    let t = std::time::Instant::now();
    let start = default_start_constrained(&bc, &opts);
    println!("start built: {:.2}s", t.elapsed().as_secs_f64());

    let t = std::time::Instant::now();
    let (field, report) = minimize_constrained(&start, 1.0, &opts).unwrap();
    println!(
        "constrained lambda=1: iters={} evals={} res={:.3e} E={:.6} wall={:.1}s",
        report.iterations,
        report.objective_evals,
        report.residual_scaled,
        report.energy.total,
        t.elapsed().as_secs_f64()
    );
    let biax = biaxiality_field(&field);
    let (lo, hi) = biax.range();
    println!("beta range: [{lo:.4}, {hi:.4}]");

    let t = std::time::Instant::now();
    let (f2, rep2) = minimize_unconstrained(&he, 1.0, 200.0, &opts).unwrap();
    println!(
        "penalized mu=200: iters={} evals={} res={:.3e} max|Q|={:.4} wall={:.1}s",
        rep2.iterations,
        rep2.objective_evals,
        rep2.residual_scaled,
        rep2.max_norm,
        t.elapsed().as_secs_f64()
    );
    let biax2 = biaxiality_field(&f2);
    let (lo2, hi2) = biax2.range();
    println!(
        "penalized beta range: [{lo2:.4}, {hi2:.4}], min|Q|={:.4}",
        lo2.min(hi2).min(rep2.min_norm)
    );
    println!("penalized min|Q| = {:.4}, beta in [{lo2:.4},{hi2:.4}]", rep2.min_norm);
    let tr = &report.energy_trace;
    for w in tr.windows(2).rev().take(6) {
        println!("  trace it {} -> {}: dE = {:.3e}", w[0].0, w[1].0, w[0].1 - w[1].1);
    }
}
// (trace tail analysis appended by profiling iterations)
