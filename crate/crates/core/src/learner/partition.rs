//! Stratified partitioning of the UE population and the learn/exploit split.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Splits `0..labels.len()` into `parts` disjoint sets covering every row.
/// Each class is shuffled and dealt round-robin, so every partition holds
/// within one row of its share of each class.
pub fn stratified_partition<R: Rng + ?Sized>(labels: &[bool], parts: usize, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    if parts == 0 {
        return Err(Error::Config("need at least one partition".into()));
    }
    if labels.len() < parts {
        return Err(Error::InsufficientData(format!("{} rows cannot fill {parts} partitions", labels.len())));
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    pos.shuffle(rng);
    neg.shuffle(rng);
    let mut out = vec![Vec::with_capacity(labels.len() / parts + 1); parts];
    for (k, idx) in pos.into_iter().chain(neg).enumerate() {
        out[k % parts].push(idx);
    }
    for p in &mut out {
        p.shuffle(rng);
    }
    Ok(out)
}

/// `⌈(1 - q) n⌉`, tolerant of floating-point noise in `1 - q`.
pub fn learning_size(n: usize, q_exploitation: f64) -> usize {
    let raw = (1.0 - q_exploitation) * n as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Draws the learning set uniformly without replacement; the rest is the
/// exploitation set. Both keep the partition's original order.
pub fn split_learn_exploit<R: Rng + ?Sized>(
    partition: &[usize],
    q_exploitation: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(q_exploitation > 0.0 && q_exploitation < 1.0) {
        return Err(Error::Config(format!("exploitation split {q_exploitation} outside (0, 1)")));
    }
    let n_learn = learning_size(partition.len(), q_exploitation);
    let chosen = rand::seq::index::sample(rng, partition.len(), n_learn);
    let mut is_learn = vec![false; partition.len()];
    for i in chosen.iter() {
        is_learn[i] = true;
    }
    let (learn, exploit): (Vec<_>, Vec<_>) = partition.iter().zip(&is_learn).partition(|(_, &l)| l);
    Ok((learn.into_iter().map(|(&i, _)| i).collect(), exploit.into_iter().map(|(&i, _)| i).collect()))
}
