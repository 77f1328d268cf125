//! Draw from a known vMF, refit, and check how well the parameters come back.

use dcu::synthetic::recovery_study;
use dcu::vmf::{fit, sample_vmf, UnitVector, VmfParams};

fn main() {
    let mut axis = vec![0.0; 16];
    axis[0] = 1.0;
    let truth = VmfParams::new(UnitVector::from_unit(axis).unwrap(), 50.0).unwrap();
    let batch = sample_vmf(&truth, 10_000, 7);
    let f = fit(&batch).unwrap();
    println!(
        "single batch: kappa_hat = {:.3} (true 50), mu_hat . mu = {:.6}",
        f.params.kappa,
        f.params.mu.dot(&truth.mu)
    );

    for &(d, k, n) in &[
        (16usize, 50.0, 10_000usize),
        (64, 100.0, 1000),
        (1024, 200.0, 10),
        (3, 0.0, 1000),
    ] {
        let r = recovery_study(d, k, n, 20, 1).unwrap();
        println!(
            "d={d:<5} kappa={k:<6} n={n:<6} median |ratio-1|={:<10} median mu.mu*={:.4} median r_bar={:.4} max residual={:.1e}",
            r.median_abs_rel_error.map_or("n/a".into(), |x| format!("{x:.4}")),
            r.median_mu_dot,
            r.median_r_bar,
            r.max_residual
        );
    }
}
