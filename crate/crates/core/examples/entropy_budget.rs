//! Entropy and energy along a trajectory, and the measured constants of their
//! one-sided budgets.

use crossdiff::diagnostics::{energy, entropy, entropy_budget, entropy_dissipation, energy_budget};
use crossdiff::io::parse_config;
use crossdiff::solver::run;

fn main() -> crossdiff::Result<()> {
    let cfg = parse_config(include_str!("configs/fast_diffusion.toml"))?;
    let traj = run(&cfg.problem)?;
    let model = &traj.problem.model;
    println!("{:>8} {:>16} {:>16} {:>14}", "t", "entropy", "energy", "dissipation");
    for s in &traj.snapshots {
        println!(
            "{:>8.4} {:>16.10} {:>16.10} {:>14.6e}",
            s.t,
            entropy(s),
            energy(s, model),
            entropy_dissipation(s, model)
        );
    }
    let eb = entropy_budget(&traj)?;
    let gb = energy_budget(&traj);
    println!("entropy budget C = {:.3e}, worst excess {:.3e}", eb.constant, worst(&eb.excess));
    println!("energy budget  C = {:.3e}, worst excess {:.3e}", gb.constant, worst(&gb.excess));
    Ok(())
}

fn worst(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
