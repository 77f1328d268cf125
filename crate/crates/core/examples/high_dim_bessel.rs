//! Bessel ratios and concentration solves in encoder-sized dimensions.

use dcu::vmf::{bessel_ratio, bessel_ratio_derivative, log_bessel_i, solve_kappa};

fn main() {
    println!(
        "{:>6} {:>10} {:>22} {:>14}",
        "d", "kappa", "A_d(kappa)", "A'_d(kappa)"
    );
    for &d in &[3usize, 64, 1024] {
        for &k in &[0.5, 10.0, 200.0, 5000.0] {
            println!(
                "{d:>6} {k:>10} {:>22.16} {:>14.6e}",
                bessel_ratio(d, k),
                bessel_ratio_derivative(d, k)
            );
        }
    }

    // I_511(10) underflows an f64; its log does not
    println!("\nlog I_511(10) = {:.6}", log_bessel_i(511.0, 10.0));

    println!("\nsolve A_d(kappa) = r_bar");
    for &(d, r) in &[(16usize, 0.5), (1024, 0.3), (1024, 0.95), (1024, 0.999999)] {
        let s = solve_kappa(r, d).unwrap();
        println!(
            "  d={d:<5} r_bar={r:<9} kappa={:<22} solver={:?} residual={:.1e}",
            s.kappa, s.solver, s.residual
        );
    }
}
