//! Rehearsal of the corpus-gated acceptance comparisons on an
//! Adult-shaped synthetic dataset: 104 features arranged as continuous
//! columns plus one-hot blocks, rows normalized to the unit ball,
//! labels drawn from a noisy planted logistic model (not separable).
//! Prints the criterion-9 and criterion-11 quantities.

use dpadmm::data::{partition, split_train_test, Dataset};
use dpadmm::loss::{sigmoid, LossSpec, RegSpec};
use dpadmm::privacy::PrivacyBudget;
use dpadmm::solver::{
    run_admm, run_dpadmm, run_dpsgd, run_dvp, run_pvp, EvalSpec, HyperParams, InnerSolverParams,
    NoiseMode, Schedule,
};
use dpadmm::ModelMatrix;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

const BLOCKS: [usize; 8] = [7, 16, 7, 14, 6, 5, 2, 41];
const CONTINUOUS: usize = 6;

fn census_like(rows: usize, seed: u64) -> Dataset {
    let d: usize = CONTINUOUS + BLOCKS.iter().sum::<usize>();
    let mut rng = dpadmm::rng::substream(seed, &[991]);
    let plant: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut features = Array2::zeros((rows, d));
    let mut labels = Array1::zeros(rows);
    for r in 0..rows {
        let mut row = vec![0.0; d];
        for c in row.iter_mut().take(CONTINUOUS) {
            *c = rng.random::<f64>();
        }
        let mut offset = CONTINUOUS;
        for &levels in &BLOCKS {
            row[offset + rng.random_range(0..levels)] = 1.0;
            offset += levels;
        }
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut row {
            *x /= norm.max(1.0);
        }
        let score: f64 = row.iter().zip(plant.iter()).map(|(x, w)| x * w).sum();
        let p = sigmoid(4.0 * score);
        labels[r] = if rng.random::<f64>() < p { 1.0 } else { -1.0 };
        features.row_mut(r).assign(&Array1::from_vec(row));
    }
    Dataset { features, labels }
}

fn frob(m: &ModelMatrix) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn main() {
    let corpus = census_like(45_222, 7);
    println!(
        "corpus: {} rows, d = {}, max row norm {:.4}, positive fraction {:.4}",
        corpus.len(),
        corpus.dim(),
        corpus.max_row_norm(),
        corpus.labels.iter().filter(|&&b| b == 1.0).count() as f64 / corpus.len() as f64
    );

    let loss = LossSpec::binary_logistic();
    let reg = RegSpec::l2(1e-6 * 100.0, 100);
    let hp = |eps: f64| HyperParams {
        rho: 0.1,
        t: 100,
        c_w: 89.0,
        budget: Some(PrivacyBudget::new(eps, 1e-3).unwrap()),
    };
    let inner = InnerSolverParams::default();

    let mut table: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    let mut timing: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    for seed in [1u64, 2] {
        let (train, test) = split_train_test(&corpus, 40_000, seed).unwrap();
        let shards = partition(&train, 100, seed).unwrap();
        let eval = EvalSpec { test: Some(&test) };

        for (tag, eps) in [("dpadmm e=0.05", 0.05), ("dpadmm e=0.1", 0.1), ("dpadmm e=0.2", 0.2)] {
            let tr = run_dpadmm(
                &shards, &loss, &reg, &hp(eps), Schedule::Smooth, NoiseMode::Calibrated, eval, seed,
            )
            .unwrap();
            assert!(tr.max_dual_sum_norm <= 1e-10);
            table.entry(tag).or_default().push(tr.final_record().empirical_loss);
            if eps == 0.1 {
                timing.entry("dpadmm").or_default().push(tr.solver_seconds());
                let majority = test.labels.iter().filter(|&&b| b == 1.0).count() as f64
                    / test.len() as f64;
                println!(
                    "  seed {seed}: dpadmm eps=0.1 test error {:.4} (majority rate {:.4}), consensus spread {:.2e}",
                    tr.final_record().test_error,
                    majority.min(1.0 - majority),
                    tr.final_agent_avgs
                        .iter()
                        .map(|a| frob(&(a - &tr.final_global_avg)))
                        .fold(0.0, f64::max),
                );
            }
        }
        let tr = run_admm(
            &shards, &loss, &reg,
            &HyperParams { rho: 0.1, t: 100, c_w: 89.0, budget: None },
            &inner, eval,
        )
        .unwrap();
        table.entry("admm").or_default().push(tr.final_record().empirical_loss);
        timing.entry("admm").or_default().push(tr.solver_seconds());
        println!("  seed {seed}: admm inner iterations {}", tr.inner_iterations);

        let tr = run_pvp(
            &shards, &loss, &reg, &hp(0.1), &inner, NoiseMode::Calibrated, eval, seed,
        )
        .unwrap();
        table.entry("pvp e=0.1").or_default().push(tr.final_record().empirical_loss);
        timing.entry("pvp").or_default().push(tr.solver_seconds());
        println!("  seed {seed}: pvp inner iterations {}", tr.inner_iterations);

        let tr = run_dvp(
            &shards, &loss, &reg, &hp(0.1), &inner, NoiseMode::Calibrated, eval, seed,
        )
        .unwrap();
        table.entry("dvp e=0.1").or_default().push(tr.final_record().empirical_loss);

        let tr = run_dpsgd(
            &shards, &loss, &reg, &hp(0.1), 0.1, 1.0, NoiseMode::Calibrated, eval, seed,
        )
        .unwrap();
        table.entry("dpsgd e=0.1").or_default().push(tr.final_record().empirical_loss);
    }

    println!("\nfinal empirical loss (mean over seeds):");
    for (tag, values) in &table {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        println!("  {tag:<14} {mean:.5}  {values:.5?}");
    }
    println!("\nsolver seconds (mean over seeds):");
    for (tag, values) in &timing {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        println!("  {tag:<14} {mean:.3}");
    }
}
