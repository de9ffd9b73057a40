//! Grid refinement study of the heat case: Cauchy differences between levels,
//! uniform bounds and the error against the spectral reference.

use crossdiff::io::parse_config;
use crossdiff::study::run_study;

fn main() -> crossdiff::Result<()> {
    let cfg = parse_config(include_str!("configs/heat_study.toml"))?;
    let rep = run_study(&cfg.study_plan(None)?)?;
    println!("viscosity: {}", rep.viscosity_convention);
    for u in &rep.uniformity {
        println!(
            "level {} (n = {:>4}): sup bv(u) {:.5}, max |R| {:.3e}, reference error {}",
            u.level,
            u.n_cells,
            u.sup_bv_u,
            u.max_residual,
            u.ref_error.map_or("-".into(), |e| format!("{e:.3e}")),
        );
    }
    println!("cauchy L1 (rho): {:?}", rep.cauchy_l1);
    println!("cauchy ratios:   {:?}", rep.cauchy_ratios());
    if let Some(r) = rep.residual_rate {
        println!("residual order:  {r:.3}");
    }
    if let Some(r) = rep.reference_rate {
        println!("reference order: {r:.3}");
    }
    Ok(())
}
