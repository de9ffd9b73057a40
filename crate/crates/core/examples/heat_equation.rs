//! With `alpha = 1` and no potentials the total density solves the heat
//! equation. Integrates the scheme and compares `S` with the closed form.

use std::f64::consts::PI;

use crossdiff::grid::Field;
use crossdiff::io::parse_config;
use crossdiff::solver::run;

fn main() -> crossdiff::Result<()> {
    let cfg = parse_config(include_str!("configs/heat.toml"))?;
    let traj = run(&cfg.problem)?;
    let grid = traj.problem.grid;
    println!("{:>8} {:>14} {:>14}", "t", "L1 error", "L_inf error");
    for s in &traj.snapshots {
        let amp = 0.5 * (-4.0 * PI * PI * s.t).exp();
        let exact = Field::from_fn(grid, |x| 1.0 + amp * (2.0 * PI * x).cos());
        let err = s.total().zip_map(&exact, |a, b| (a - b).abs());
        println!("{:>8.4} {:>14.6e} {:>14.6e}", s.t, err.integrate(), err.max());
    }
    println!("steps: {}", traj.step_log.len());
    Ok(())
}
