//! Tall thin bumps with small L² norm but large short-range energy, so
//! −Ĵ^α is unbounded below near 0.

use riesz_flow::cli::experiments::counterexample_scan;

pub fn main() -> riesz_flow::Result<()> {
    let points = counterexample_scan(1, &[2.0, 8.0, 32.0, 64.0], &[0.1, 0.01, 0.001], 1e-10)?;
    println!("{:>8} {:>7} {:>9} {:>10}", "n", "α", "‖v‖", "G1(v)");
    for p in &points {
        println!("{:>8.0e} {:>7} {:>9.4} {:>10.4}", p.n, p.alpha, p.norm, p.g1);
    }
    if let Some(w) = points.iter().find(|p| p.norm <= 0.5 && p.g1 >= 10.0) {
        println!("witness: n = {:e}, α = {}", w.n, w.alpha);
    }
    Ok(())
}
