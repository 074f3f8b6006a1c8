//! Causal factorization of time-ordered words and gluing consistency.
//!
//! A word is an ordering of the point indices of a configuration. A split
//! `W = U V` is admissible when no point of U lies in the causal past of a
//! point of V; then the time-ordered product factorizes across the split.

use crate::minkowski::{classify_pair, in_causal_past, CausalVerdict, PointConfig};
use rand::seq::SliceRandom;
use rand::Rng;

/// An ordering of the points `0..n` of a configuration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TOWord(pub Vec<usize>);

/// A maximal admissible factorization: contiguous blocks of a word such
/// that each block precedes later blocks causally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub blocks: Vec<Vec<usize>>,
}

/// `U` may stand left of `V`: no u ∈ U lies in J^-(v) for v ∈ V.
pub fn split_admissible(config: &PointConfig, left: &[usize], right: &[usize]) -> bool {
    left.iter().all(|&u| {
        right
            .iter()
            .all(|&v| !in_causal_past(&config.points[u], &config.points[v]))
    })
}

fn mutually_spacelike(config: &PointConfig, a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|&u| {
        b.iter().all(|&v| {
            classify_pair(&config.points[u], &config.points[v]) == CausalVerdict::Spacelike
        })
    })
}

/// Factor a set of points into the canonical block sequence.
///
/// Blocks are produced greedily: the first block is the smallest admissible
/// left part, chosen as the lexicographically least subset (by sorted index
/// list) among those of minimal size. Adjacent blocks that are mutually
/// spacelike are then sorted by their minimal element, which makes the
/// result independent of arbitrary choices and lets gluing checks compare
/// factorizations literally.
pub fn causal_factorize(config: &PointConfig, indices: &[usize]) -> Factorization {
    let mut blocks = Vec::new();
    let mut rest: Vec<usize> = indices.to_vec();
    rest.sort_unstable();
    while !rest.is_empty() {
        let block = least_admissible_prefix(config, &rest);
        rest.retain(|i| !block.contains(i));
        blocks.push(block);
    }
    normalize_blocks(config, &mut blocks);
    Factorization { blocks }
}

/// The lexicographically least minimal-size proper subset U of `rest` with
/// `U` admissible to the left of its complement; falls back to the whole
/// set when no proper split exists.
fn least_admissible_prefix(config: &PointConfig, rest: &[usize]) -> Vec<usize> {
    let n = rest.len();
    if n == 1 {
        return rest.to_vec();
    }
    debug_assert!(n <= 20, "exhaustive split scan supports blocks up to 20 points");
    for size in 1..n {
        let mut best: Option<Vec<usize>> = None;
        let mut subset = (1u32 << size) - 1;
        let limit = 1u32 << n;
        while subset < limit {
            let left: Vec<usize> = (0..n).filter(|&k| subset & (1 << k) != 0).collect();
            let left: Vec<usize> = left.into_iter().map(|k| rest[k]).collect();
            let right: Vec<usize> = rest.iter().copied().filter(|i| !left.contains(i)).collect();
            if split_admissible(config, &left, &right)
                && best.as_ref().map_or(true, |b| left < *b)
            {
                best = Some(left);
            }
            subset = next_same_popcount(subset);
        }
        if let Some(b) = best {
            return b;
        }
    }
    rest.to_vec()
}

/// Gosper's hack: next integer with the same number of set bits.
fn next_same_popcount(v: u32) -> u32 {
    let c = v & v.wrapping_neg();
    let r = v + c;
    if c == 0 || r == 0 {
        return u32::MAX;
    }
    (((r ^ v) >> 2) / c) | r
}

/// Trace normal form of a block sequence: blocks that are not mutually
/// spacelike keep their causally forced order; commuting blocks are placed
/// by smallest element. Implemented as the lexicographically least
/// topological order of the dependency graph, which is the same for every
/// admissible sequence over the same atoms.
fn normalize_blocks(config: &PointConfig, blocks: &mut Vec<Vec<usize>>) {
    let n = blocks.len();
    // before[i][j]: block i is forced to stand left of block j
    let mut before = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j || mutually_spacelike(config, &blocks[i], &blocks[j]) {
                continue;
            }
            let ij = split_admissible(config, &blocks[i], &blocks[j]);
            let ji = split_admissible(config, &blocks[j], &blocks[i]);
            match (ij, ji) {
                (true, false) => before[i][j] = true,
                (false, true) => before[j][i] = true,
                // unordered but non-commuting: keep the given sequence order
                _ => before[i.min(j)][i.max(j)] = true,
            }
        }
    }
    let mut placed = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let next = (0..n)
            .filter(|&i| !placed[i])
            .filter(|&i| (0..n).all(|j| placed[j] || !before[j][i]))
            .min_by_key(|&i| blocks[i].first().copied())
            .expect("dependency graph of an admissible sequence is acyclic");
        placed[next] = true;
        out.push(blocks[next].clone());
    }
    *blocks = out;
}

/// Same factorization, but blocks are discovered in a shuffled split order.
/// Confluence means this always normalizes to `causal_factorize`.
pub fn causal_factorize_randomized<R: Rng>(
    config: &PointConfig,
    indices: &[usize],
    rng: &mut R,
) -> Factorization {
    let mut blocks = Vec::new();
    let mut rest: Vec<usize> = indices.to_vec();
    rest.sort_unstable();
    while !rest.is_empty() {
        let candidates = admissible_prefixes(config, &rest);
        let block = candidates
            .choose(rng)
            .cloned()
            .unwrap_or_else(|| rest.clone());
        rest.retain(|i| !block.contains(i));
        blocks.push(block);
    }
    // split nested blocks that a greedy minimal choice would have separated
    let mut refined = Vec::new();
    for b in blocks {
        refined.extend(causal_factorize(config, &b).blocks);
    }
    let mut refined = refined;
    normalize_blocks(config, &mut refined);
    Factorization { blocks: refined }
}

fn admissible_prefixes(config: &PointConfig, rest: &[usize]) -> Vec<Vec<usize>> {
    let n = rest.len();
    let mut out = Vec::new();
    if n == 1 {
        return vec![rest.to_vec()];
    }
    for subset in 1..((1u32 << n) - 1) {
        let left: Vec<usize> = (0..n)
            .filter(|&k| subset & (1 << k) != 0)
            .map(|k| rest[k])
            .collect();
        let right: Vec<usize> = rest.iter().copied().filter(|i| !left.contains(i)).collect();
        if split_admissible(config, &left, &right) {
            out.push(left);
        }
    }
    if out.is_empty() {
        out.push(rest.to_vec());
    }
    out
}

/// Gluing consistency: on overlaps `C_I ∩ C_J` the two factorizations
/// prescribe the same product. Checked by comparing the canonical
/// factorizations induced from both subsets.
pub fn glue_consistent(config: &PointConfig, subset_i: u32, subset_j: u32) -> bool {
    let n = config.n();
    let via = |subset: u32| -> Factorization {
        let left: Vec<usize> = (0..n).filter(|&k| subset & (1 << k) != 0).collect();
        let right: Vec<usize> = (0..n).filter(|&k| subset & (1 << k) == 0).collect();
        let mut blocks = Vec::new();
        blocks.extend(causal_factorize(config, &left).blocks);
        blocks.extend(causal_factorize(config, &right).blocks);
        let mut blocks = blocks;
        normalize_blocks(config, &mut blocks);
        Factorization { blocks }
    };
    via(subset_i) == via(subset_j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::c_i_member;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_point_factorization_orders_by_time() {
        let cfg = PointConfig::from_i64(2, &[&[0, 0], &[5, 0]]).unwrap();
        let f = causal_factorize(&cfg, &[0, 1]);
        assert_eq!(f.blocks, vec![vec![1], vec![0]]);
    }

    #[test]
    fn spacelike_points_normalize_by_index() {
        let cfg = PointConfig::from_i64(2, &[&[0, 10], &[0, 0], &[0, -10]]).unwrap();
        let f = causal_factorize(&cfg, &[0, 1, 2]);
        assert_eq!(f.blocks, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn timelike_chain_has_no_reordering() {
        let cfg = PointConfig::from_i64(2, &[&[0, 0], &[2, 0], &[4, 0]]).unwrap();
        let f = causal_factorize(&cfg, &[0, 1, 2]);
        assert_eq!(f.blocks, vec![vec![2], vec![1], vec![0]]);
    }

    #[test]
    fn coincident_points_stay_in_one_block() {
        let cfg = PointConfig::from_i64(2, &[&[0, 0], &[0, 0], &[5, 0]]).unwrap();
        let f = causal_factorize(&cfg, &[0, 1, 2]);
        assert_eq!(f.blocks, vec![vec![2], vec![0, 1]]);
    }

    #[test]
    fn lightlike_pair_is_ordered_not_merged() {
        let cfg = PointConfig::from_i64(2, &[&[1, 1], &[0, 0]]).unwrap();
        let f = causal_factorize(&cfg, &[0, 1]);
        assert_eq!(f.blocks, vec![vec![0], vec![1]]);
    }

    #[test]
    fn randomized_factorization_is_confluent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cfg = PointConfig::from_i64(
            2,
            &[&[0, 0], &[3, 0], &[0, 9], &[-2, 9], &[3, 1]],
        )
        .unwrap();
        let canon = causal_factorize(&cfg, &[0, 1, 2, 3, 4]);
        for _ in 0..50 {
            let f = causal_factorize_randomized(&cfg, &[0, 1, 2, 3, 4], &mut rng);
            assert_eq!(f, canon);
        }
    }

    #[test]
    fn gluing_on_pair_overlaps() {
        let cfg = PointConfig::from_i64(2, &[&[4, 0], &[0, 0], &[0, 9]]).unwrap();
        let n = cfg.n();
        for i in 1..((1u32 << n) - 1) {
            for j in 1..((1u32 << n) - 1) {
                if c_i_member(&cfg, i) && c_i_member(&cfg, j) {
                    assert!(glue_consistent(&cfg, i, j), "subsets {i:b} vs {j:b}");
                }
            }
        }
    }
}
