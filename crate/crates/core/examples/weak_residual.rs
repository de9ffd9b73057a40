//! Weak-form residuals against a bank of test functions, on three grids.
//! The largest residual should roughly halve with each refinement.

use crossdiff::diagnostics::{max_abs_residual, weak_residual, TestFunctionBank};
use crossdiff::grid::GridSpec;
use crossdiff::io::parse_config;
use crossdiff::model::{build_potentials, validate_initial, ProblemSpec};
use crossdiff::solver::run;

fn main() -> crossdiff::Result<()> {
    let cfg = parse_config(include_str!("configs/fast_diffusion.toml"))?;
    let mut prev = None;
    for n in [64, 128, 256] {
        let grid = GridSpec::new(n)?;
        let mut problem = cfg.problem.clone();
        problem.grid = grid;
        problem.model.potentials = build_potentials(
            cfg.problem.model.potentials.modes_v(),
            cfg.problem.model.potentials.modes_w(),
            grid,
        )?;
        problem.initial =
            validate_initial(cfg.rho0.sample(grid)?, cfg.mu0.sample(grid)?)?;
        problem.snapshot_times = ProblemSpec::uniform_snapshots(problem.t_final, n / 4);
        let traj = run(&problem)?;
        let bank = TestFunctionBank::new(grid, problem.t_final, 8, 2)?;
        let r = max_abs_residual(&weak_residual(&traj, &bank)?);
        match prev {
            Some(p) => println!("n = {n:>4}: max |R| = {r:.4e}  (ratio {:.3})", p / r),
            None => println!("n = {n:>4}: max |R| = {r:.4e}"),
        }
        prev = Some(r);
    }
    Ok(())
}
