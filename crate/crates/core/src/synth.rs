//! Seeded synthetic datasets: one hidden motif per class, buried in noise.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::seq::SequenceDataset;

/// Motif tokens per motif position; motifs are drawn from `m0..`.
pub const MOTIF_ALPHABET_FACTOR: usize = 2;
/// Size of the shared noise alphabet `n0..`.
pub const NOISE_ALPHABET: usize = 8;

/// `classes * per_class` instances named `c0, c1, ...`, grouped by class.
///
/// Every class gets its own motif of `motif_len` tokens (no two classes share
/// a motif). An instance is its class motif with `noise_len` noise tokens
/// inserted at uniformly random positions, so the motif stays a subsequence.
pub fn synth_gen(
    classes: usize,
    per_class: usize,
    motif_len: usize,
    noise_len: usize,
    seed: u64,
) -> Result<SequenceDataset> {
    if classes == 0 || per_class == 0 || motif_len == 0 {
        return Err(Error::invalid("classes, per_class and motif_len must be positive"));
    }
    let motif_alpha = MOTIF_ALPHABET_FACTOR * motif_len;
    let possible = (motif_alpha as f64).powi(motif_len.min(64) as i32);
    if possible < classes as f64 {
        return Err(Error::invalid("too many classes for distinct motifs"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut motifs: Vec<Vec<String>> = Vec::with_capacity(classes);
    while motifs.len() < classes {
        let m: Vec<String> = (0..motif_len)
            .map(|_| format!("m{}", rng.random_range(0..motif_alpha)))
            .collect();
        if !motifs.contains(&m) {
            motifs.push(m);
        }
    }
    let mut ds = SequenceDataset::new();
    for (c, motif) in motifs.iter().enumerate() {
        let label = format!("c{c}");
        for _ in 0..per_class {
            let total = motif_len + noise_len;
            let mut is_noise = vec![false; total];
            is_noise[..noise_len].iter_mut().for_each(|b| *b = true);
            is_noise.shuffle(&mut rng);
            let mut next_motif = motif.iter();
            let tokens: Vec<String> = is_noise
                .into_iter()
                .map(|noise| {
                    if noise {
                        format!("n{}", rng.random_range(0..NOISE_ALPHABET))
                    } else {
                        next_motif.next().expect("motif slot").clone()
                    }
                })
                .collect();
            ds.push_tokens(&label, tokens.iter().map(String::as_str));
        }
    }
    Ok(ds)
}

/// Copy of `ds` with labels permuted uniformly at random (a null control).
pub fn shuffle_labels(ds: &SequenceDataset, seed: u64) -> SequenceDataset {
    let mut labels = ds.labels();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = ds.clone();
    for (inst, l) in out.instances.iter_mut().zip(labels) {
        inst.label = l;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::is_subsequence;

    #[test]
    fn shape_and_labels() {
        let ds = synth_gen(2, 20, 4, 6, 3).unwrap();
        assert_eq!(ds.len(), 40);
        assert_eq!(ds.classes, vec!["c0", "c1"]);
        assert!(ds.instances.iter().all(|d| d.sequence.len() == 10));
    }

    #[test]
    fn seeded() {
        assert_eq!(synth_gen(3, 5, 4, 6, 9).unwrap(), synth_gen(3, 5, 4, 6, 9).unwrap());
        assert_ne!(synth_gen(3, 5, 4, 6, 9).unwrap(), synth_gen(3, 5, 4, 6, 10).unwrap());
    }

    #[test]
    fn no_noise_gives_the_motif() {
        let ds = synth_gen(3, 4, 5, 0, 1).unwrap();
        for c in 0..3 {
            let seqs: Vec<_> = ds.instances.iter().filter(|d| d.label == c).collect();
            assert!(seqs.iter().all(|d| d.sequence == seqs[0].sequence));
        }
        assert_ne!(ds.instances[0].sequence, ds.instances[4].sequence);
    }

    #[test]
    fn motif_survives_noise() {
        let ds = synth_gen(2, 10, 5, 10, 4).unwrap();
        for d in &ds.instances {
            let motif: Vec<_> = d
                .sequence
                .iter()
                .copied()
                .filter(|&i| ds.alphabet.token(i).unwrap().starts_with('m'))
                .collect();
            assert_eq!(motif.len(), 5);
            assert!(is_subsequence(&motif, &d.sequence));
        }
    }

    #[test]
    fn rejects_zero_counts() {
        assert!(synth_gen(0, 1, 1, 1, 0).is_err());
        assert!(synth_gen(1, 0, 1, 1, 0).is_err());
        assert!(synth_gen(1, 1, 0, 1, 0).is_err());
        assert!(synth_gen(3, 1, 1, 1, 0).is_err());
    }

    #[test]
    fn shuffled_labels_keep_counts() {
        let ds = synth_gen(2, 10, 3, 3, 0).unwrap();
        let sh = shuffle_labels(&ds, 5);
        let count = |d: &SequenceDataset| d.labels().iter().filter(|&&l| l == 0).count();
        assert_eq!(count(&ds), count(&sh));
        assert_ne!(ds.labels(), sh.labels());
    }
}
