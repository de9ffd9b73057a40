//! Total variation of the log-ratio and of the shifted gradient `u` over time.

use crossdiff::diagnostics::bv_norms;
use crossdiff::io::parse_config;
use crossdiff::solver::run;
use crossdiff::transforms::to_sum_ratio;

fn main() -> crossdiff::Result<()> {
    let cfg = parse_config(include_str!("configs/fast_diffusion.toml"))?;
    let traj = run(&cfg.problem)?;
    println!("{:>8} {:>12} {:>12} {:>12}", "t", "bv(r)", "|u|_L1", "max |r|");
    for s in &traj.snapshots {
        let (bv_r, bv_u) = bv_norms(s, &traj.problem.model)?;
        let r = to_sum_ratio(s)?.r;
        println!("{:>8.4} {:>12.6} {:>12.6} {:>12.6}", s.t, bv_r, bv_u, r.max_abs());
    }
    Ok(())
}
