//! Synthetic shards with a planted linear separator.
//!
//! Features are drawn uniformly from the unit ball, labeled by the sign
//! of a planted unit-norm weight vector, and then shifted along that
//! vector by a controllable amount before being rescaled back into the
//! ball. Larger `separation` widens the margin; `separation = 0` keeps
//! the raw draws (still linearly separable, with no margin guarantee).

use super::{AgentShard, DataError, Dataset};
use crate::rng::{self, tag};
use crate::ModelMatrix;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

/// Planted-separator shards plus the separator itself, kept so tests and
/// harnesses can draw matching evaluation data or verify separability.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub shards: Vec<AgentShard>,
    /// The unit-norm `d x 1` weight vector whose sign generated every
    /// label.
    pub planted: ModelMatrix,
}

fn unit_ball_point(d: usize, rng: &mut impl Rng) -> Array1<f64> {
    loop {
        let g = Array1::from_shape_fn(d, |_| rng.sample::<f64, _>(StandardNormal));
        let norm = g.dot(&g).sqrt();
        if norm > 1e-12 {
            let radius: f64 = rng.random::<f64>().powf(1.0 / d as f64);
            return g.mapv(|x| x * radius / norm);
        }
    }
}

fn planted_rows(
    m: usize,
    plant: &Array1<f64>,
    separation: f64,
    rng: &mut impl Rng,
) -> (Array2<f64>, Array1<f64>) {
    let d = plant.len();
    let mut features = Array2::zeros((m, d));
    let mut labels = Array1::zeros(m);
    for j in 0..m {
        let (x, y) = loop {
            let x = unit_ball_point(d, rng);
            let score = plant.dot(&x);
            if score.abs() > 1e-9 {
                break (x, score.signum());
            }
        };
        // ||x + separation * y * plant|| <= 1 + separation, so dividing
        // keeps the row inside the unit ball while pushing it away from
        // the separating hyperplane.
        let row = (&x + &plant.mapv(|w| separation * y * w)) / (1.0 + separation);
        features.row_mut(j).assign(&row);
        labels[j] = y;
    }
    (features, labels)
}

/// Generates `n_agents` shards of `m_per_agent` samples each in
/// dimension `d`, deterministic in `seed`.
pub fn make_synthetic(
    n_agents: usize,
    m_per_agent: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> Result<SyntheticData, DataError> {
    if n_agents == 0 || m_per_agent == 0 || d == 0 {
        return Err(DataError::Argument(
            "agent count, shard size, and dimension must be positive".into(),
        ));
    }
    if separation.is_nan() || separation < 0.0 {
        return Err(DataError::Argument(format!(
            "separation must be non-negative, got {separation}"
        )));
    }
    let mut plant_rng = rng::substream(seed, &[tag::SYNTHETIC, 0]);
    let plant = loop {
        let g = Array1::from_shape_fn(d, |_| plant_rng.sample::<f64, _>(StandardNormal));
        let norm = g.dot(&g).sqrt();
        if norm > 1e-12 {
            break g.mapv(|x| x / norm);
        }
    };

    let shards = (0..n_agents)
        .map(|i| {
            let mut rng = rng::substream(seed, &[tag::SYNTHETIC, 1 + i as u64]);
            let (features, labels) = planted_rows(m_per_agent, &plant, separation, &mut rng);
            Dataset { features, labels }
        })
        .collect();

    let mut planted = ModelMatrix::zeros((d, 1));
    planted.column_mut(0).assign(&plant);
    Ok(SyntheticData { shards, planted })
}

impl SyntheticData {
    /// Shard dimensions `(n_agents, m_per_agent, d)` of the generated data.
    pub fn shape(&self) -> (usize, usize, usize) {
        (
            self.shards.len(),
            self.shards.first().map_or(0, Dataset::len),
            self.planted.nrows(),
        )
    }

    /// Draws `m` fresh samples from the same planted separator, for use
    /// as held-out evaluation data. The stream is independent of the
    /// shard streams for any `salt`.
    pub fn sample(&self, m: usize, separation: f64, seed: u64, salt: u64) -> Dataset {
        let plant = self.planted.column(0).to_owned();
        let mut rng = rng::substream(seed, &[tag::SYNTHETIC, u64::MAX - salt]);
        let (features, labels) = planted_rows(m, &plant, separation, &mut rng);
        Dataset { features, labels }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_sizes_and_invariants() {
        let data = make_synthetic(5, 200, 10, 2.0, 7).unwrap();
        assert_eq!(data.shape(), (5, 200, 10));
        for shard in &data.shards {
            assert_eq!(shard.len(), 200);
            assert!(shard.max_row_norm() <= 1.0 + 1e-12);
            assert!(shard.labels.iter().all(|&b| b == 1.0 || b == -1.0));
        }
    }

    #[test]
    fn planted_separator_classifies_training_data_perfectly() {
        // With a positive separation, the plant itself achieves zero
        // training error, so a linear classifier exists that does.
        let data = make_synthetic(3, 100, 8, 1.5, 99).unwrap();
        let w = data.planted.column(0);
        for shard in &data.shards {
            for (row, &label) in shard.features.rows().into_iter().zip(shard.labels.iter()) {
                let margin = label * w.dot(&row);
                assert!(margin > 0.0, "sample on the wrong side, margin {margin}");
                // Margin scales like separation / (1 + separation).
                assert!(margin >= 1.5 / 2.5 - 1e-9);
            }
        }
    }

    #[test]
    fn same_seed_reproduces_bytes() {
        let a = make_synthetic(2, 50, 4, 0.5, 13).unwrap();
        let b = make_synthetic(2, 50, 4, 0.5, 13).unwrap();
        for (x, y) in a.shards.iter().zip(b.shards.iter()) {
            assert_eq!(x, y);
        }
        let c = make_synthetic(2, 50, 4, 0.5, 14).unwrap();
        assert_ne!(a.shards[0], c.shards[0]);
    }

    #[test]
    fn held_out_sample_uses_same_plant_but_fresh_stream() {
        let data = make_synthetic(2, 30, 6, 1.0, 21).unwrap();
        let test = data.sample(40, 1.0, 21, 0);
        assert_eq!(test.len(), 40);
        assert_ne!(test, data.shards[0]);
        let w = data.planted.column(0);
        for (row, &label) in test.features.rows().into_iter().zip(test.labels.iter()) {
            assert!(label * w.dot(&row) > 0.0);
        }
    }

    #[test]
    fn rejects_degenerate_arguments() {
        assert!(make_synthetic(0, 10, 3, 1.0, 1).is_err());
        assert!(make_synthetic(2, 0, 3, 1.0, 1).is_err());
        assert!(make_synthetic(2, 10, 0, 1.0, 1).is_err());
        assert!(make_synthetic(2, 10, 3, -1.0, 1).is_err());
    }
}
