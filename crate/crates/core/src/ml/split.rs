use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::MlError;
use crate::beacon::{Dataset, Label};

/// Per-class shuffled holdout.
///
/// Each class contributes `round_half_up(test_fraction * count)` samples to
/// the test partition. Both partitions keep the original row order.
pub fn stratified_split(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), MlError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(MlError::InvalidFraction(test_fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; dataset.len()];

    for label in [Label::Authentic, Label::Unauthorized] {
        let mut members: Vec<usize> = dataset
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == label)
            .map(|(i, _)| i)
            .collect();
        let count = members.len();
        let test = (test_fraction * count as f64 + 0.5).floor() as usize;
        if test == 0 || test >= count {
            return Err(MlError::DegenerateSplit {
                label,
                train: count.saturating_sub(test),
                test,
            });
        }
        members.shuffle(&mut rng);
        for &i in &members[..test] {
            in_test[i] = true;
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (sample, &t) in dataset.samples.iter().zip(&in_test) {
        if t {
            test.push(sample.clone());
        } else {
            train.push(sample.clone());
        }
    }
    Ok((
        Dataset::new(train, dataset.provenance),
        Dataset::new(test, dataset.provenance),
    ))
}
