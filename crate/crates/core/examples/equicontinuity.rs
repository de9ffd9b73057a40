//! Space and time moduli of continuity of a trajectory.

use crossdiff::diagnostics::equicontinuity_moduli;
use crossdiff::io::parse_config;
use crossdiff::solver::run;

fn main() -> crossdiff::Result<()> {
    let cfg = parse_config(include_str!("configs/fast_diffusion.toml"))?;
    let traj = run(&cfg.problem)?;
    let m = equicontinuity_moduli(&traj);
    println!("space modulus (sup over snapshots of int |f(x+h) - f(x)|)");
    for p in &m.space {
        println!("  h = {:.5}: rho {:.6e}, mu {:.6e}", p.lag, p.rho, p.mu);
    }
    println!("time modulus (snapshot-weighted sum of int |f(t+h) - f(t)|)");
    for p in &m.time {
        println!("  h = {:.5}: rho {:.6e}, mu {:.6e}", p.lag, p.rho, p.mu);
    }
    Ok(())
}
