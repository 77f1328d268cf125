use super::config::SimulateConfig;
use super::{Failure, Outcome, SimulateArgs};
use crate::synthetic::recovery_study;

pub const DEFAULT_TRIALS: usize = 20;

pub(super) fn run(args: SimulateArgs, cfg: &SimulateConfig) -> Result<Outcome, Failure> {
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let trials = args.trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS);
    let report = recovery_study(args.dim, args.kappa, args.n, trials, seed).map_err(|e| {
        let mut f = Failure::from(e);
        f.code = super::EXIT_USAGE;
        f
    })?;
    let mut out = serde_json::to_vec_pretty(&report).expect("serializable report");
    out.push(b'\n');
    Ok(Outcome::ok(out))
}
