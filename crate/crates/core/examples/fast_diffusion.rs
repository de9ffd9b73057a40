//! Fast diffusion (`alpha = 1/2`) with drift potentials, once per stepper.

use crossdiff::diagnostics::entropy;
use crossdiff::io::parse_config;
use crossdiff::model::StepperKind;
use crossdiff::solver::run;

fn main() -> crossdiff::Result<()> {
    let cfg = parse_config(include_str!("configs/fast_diffusion.toml"))?;
    let mut finals = Vec::new();
    for kind in [StepperKind::Explicit, StepperKind::SemiImplicit] {
        let mut problem = cfg.problem.clone();
        problem.stepper = kind;
        let traj = run(&problem)?;
        let last = traj.snapshots.last().unwrap();
        let newton: usize = traj.step_log.iter().map(|r| r.newton_iterations).sum();
        println!(
            "{kind:?}: steps {}, max dt {:.3e}, newton iterations {newton}, entropy {:.10}, min rho {:.6}",
            traj.step_log.len(),
            traj.max_dt(),
            entropy(last),
            last.rho.min(),
        );
        finals.push(last.clone());
    }
    let diff = finals[0].rho.zip_map(&finals[1].rho, |a, b| (a - b).abs()).integrate();
    println!("L1 gap between steppers at T: {diff:.3e}");
    Ok(())
}
