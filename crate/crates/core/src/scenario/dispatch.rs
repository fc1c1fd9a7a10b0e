use super::{Result, ScenarioError};
use crate::grid::GridCase;

/// Proportional dispatch: every online unit gets `total_load * (1 + loss_fraction)`
/// times its share of online `p_max`, clipped to its limits with the clipped
/// remainder re-shared among the others. Offline units get 0. The slack unit
/// absorbs whatever the estimate misses once power flow is solved.
pub fn generation_dispatch(case: &GridCase, total_load: f64, loss_fraction: f64) -> Result<Vec<f64>> {
    let demand = total_load * (1.0 + loss_fraction);
    let online: Vec<usize> = (0..case.generators.len()).filter(|&i| case.generators[i].is_on()).collect();
    if online.is_empty() {
        return Err(ScenarioError::Dispatch("no online generator".into()));
    }
    let cap: f64 = online.iter().map(|&i| case.generators[i].p_max).sum();
    if demand > cap {
        return Err(ScenarioError::Dispatch(format!(
            "demand estimate {demand:.4} pu exceeds online capacity {cap:.4} pu"
        )));
    }
    let mut pg = vec![0.0; case.generators.len()];
    let mut fixed = vec![false; case.generators.len()];
    loop {
        let free: Vec<usize> = online.iter().copied().filter(|&i| !fixed[i]).collect();
        let assigned: f64 = online.iter().filter(|&&i| fixed[i]).map(|&i| pg[i]).sum();
        let remaining = demand - assigned;
        let free_cap: f64 = free.iter().map(|&i| case.generators[i].p_max).sum();
        if free.is_empty() {
            break;
        }
        let share = |i: usize| {
            if free_cap > 0.0 {
                remaining * case.generators[i].p_max / free_cap
            } else {
                remaining / free.len() as f64
            }
        };
        let over: Vec<usize> = free.iter().copied().filter(|&i| share(i) > case.generators[i].p_max).collect();
        let under: Vec<usize> = free.iter().copied().filter(|&i| share(i) < case.generators[i].p_min).collect();
        if over.is_empty() && under.is_empty() {
            for &i in &free {
                pg[i] = share(i);
            }
            break;
        }
        // Pin one side per round so the re-shared remainder stays consistent.
        if !over.is_empty() {
            for i in over {
                pg[i] = case.generators[i].p_max;
                fixed[i] = true;
            }
        } else {
            for i in under {
                pg[i] = case.generators[i].p_min;
                fixed[i] = true;
            }
        }
    }
    Ok(pg)
}
