//! One tight and one dispersed batch of ten generations: the dispersed one
//! must carry the higher uncertainty.

use dcu::vmf::{sample_uniform_sphere, sample_vmf, score_batch, VmfParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let dim = 64;
    let mut wins = 0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(trial);
        let mu1 = sample_uniform_sphere(dim, &mut rng);
        let mu2 = sample_uniform_sphere(dim, &mut rng);
        let tight = sample_vmf(&VmfParams::new(mu1, 100.0).unwrap(), 10, 2 * trial);
        let dispersed = sample_vmf(&VmfParams::new(mu2, 5.0).unwrap(), 10, 2 * trial + 1);
        let a = score_batch(&tight).unwrap();
        let b = score_batch(&dispersed).unwrap();
        if trial < 3 {
            println!(
                "trial {trial}: query 1 dcu={:.5} (r_bar {:.3})   query 2 dcu={:.5} (r_bar {:.3})",
                a.dcu, a.r_bar, b.dcu, b.r_bar
            );
        }
        if a.dcu < b.dcu {
            wins += 1;
        }
    }
    println!("tight batch less uncertain in {wins}/100 trials");
}
