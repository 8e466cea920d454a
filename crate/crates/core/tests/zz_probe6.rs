//! Temporary probe for the CV comparison protocol (deleted before release).

use ndarray::Array1;
use pathlasso::admm::{self, SolverOptions};
use pathlasso::dataset::standardize;
use pathlasso::eval;
use pathlasso::model::PenaltySpec;
use pathlasso::seed;
use pathlasso::simgen::{self, SimulationDesign};

fn run_variant(name: &str, folds: usize, grid: &[f64], max_iter: usize) {
    let t0 = std::time::Instant::now();
    let opts = SolverOptions {
        max_iter,
        ..SolverOptions::default()
    };
    let cutoff = 1e-3;
    let mut pl_wins = 0usize;
    let mut f1_pl_sum = 0.0;
    let mut f1_ts_sum = 0.0;
    let mut mse_pl_sum = 0.0;
    let mut mse_ts_sum = 0.0;
    for rep in 0..20u64 {
        let design = SimulationDesign::default_dgp(50, 200, 0.0, seed::derive_seed(0xacc0_0006, rep));
        let (data, truth) = simgen::gen_proposed(&design).unwrap();
        let std = standardize(&data).unwrap();
        let k = std.k();
        let to_raw = std.r_scale() / std.z_scale();
        let truth_ab = Array1::from_iter(
            truth
                .a_true
                .iter()
                .zip(truth.b_true.iter())
                .map(|(a, b)| a * b),
        );
        let fold_seed = seed::derive_seed(0xacc0_6006, rep);

        let run = |specs: &[PenaltySpec]| {
            let cv = eval::cross_validate(&std, specs, folds, fold_seed, &opts).unwrap();
            let path = admm::fit_path(&std, specs, &opts).unwrap();
            let fit = &path.fits[cv.chosen];
            let ab = fit.pathway_effects();
            let sel = eval::select_pathways(&ab, cutoff).selected;
            let f1 = eval::f1_score(&sel, &truth.true_set).unwrap();
            let mse = eval::mse_ab(&(&ab * to_raw), &truth_ab).unwrap();
            (f1, mse, cv.chosen, sel.len(), fit.converged)
        };

        let pl_specs: Vec<PenaltySpec> = grid
            .iter()
            .map(|&l| PenaltySpec::with_unit_weights(k, l, 2.0, 0.0))
            .collect();
        let (pl_f1, pl_mse, pl_idx, pl_sel, pl_conv) = run(&pl_specs);

        let ts_specs: Vec<PenaltySpec> = grid
            .iter()
            .map(|&w| PenaltySpec::with_unit_weights(k, 0.0, 2.0, w))
            .collect();
        let (ts_f1, ts_mse, ts_idx, ts_sel, ts_conv) = run(&ts_specs);

        if pl_mse < ts_mse {
            pl_wins += 1;
        }
        f1_pl_sum += pl_f1;
        f1_ts_sum += ts_f1;
        mse_pl_sum += pl_mse;
        mse_ts_sum += ts_mse;
        println!(
            "  rep {rep:2}: PL lam={:.3} |S|={pl_sel:3} f1={pl_f1:.3} mse={pl_mse:8.3} conv={pl_conv} | TS om={:.3} |S|={ts_sel:3} f1={ts_f1:.3} mse={ts_mse:8.3} conv={ts_conv} {}",
            grid[pl_idx],
            grid[ts_idx],
            if pl_mse < ts_mse { "WIN" } else { "LOSS" },
        );
    }
    println!(
        "{name}: F1 {:.3} vs {:.3} (ratio {:.2}), MSE {:.2} vs {:.2}, wins {pl_wins}/20, {:.0?}",
        f1_pl_sum / 20.0,
        f1_ts_sum / 20.0,
        f1_pl_sum / f1_ts_sum,
        mse_pl_sum / 20.0,
        mse_ts_sum / 20.0,
        t0.elapsed()
    );
}

#[test]
fn probe_cv_protocols() {
    let grid_base = admm::log_grid(0.03, 10.0, 10).unwrap();
    run_variant("pathfinal f5 g10 mi3000", 5, &grid_base, 3000);
    run_variant("pathfinal f10 g10 mi3000", 10, &grid_base, 3000);
}
