//! Multi-index helpers shared by the distribution and extension code.

pub type MultiIndex = Vec<usize>;

pub fn order(alpha: &[usize]) -> usize {
    alpha.iter().sum()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// alpha! = prod_i alpha_i!
pub fn multi_factorial(alpha: &[usize]) -> f64 {
    alpha.iter().map(|&k| factorial(k)).product()
}

/// All multi-indices in `d` variables with |alpha| <= max_order, ordered by
/// total order then lexicographically.
pub fn multi_indices_up_to(d: usize, max_order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for total in 0..=max_order {
        let mut cur = vec![0usize; d];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<MultiIndex>, cur: &mut MultiIndex, pos: usize, remaining: usize) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        cur[pos] = k;
        fill(out, cur, pos + 1, remaining - k);
        cur[pos] = 0;
    }
}

/// Number of multi-indices with |alpha| <= rho in d variables: C(rho + d, d).
pub fn count_up_to(d: usize, rho: usize) -> usize {
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 1..=d {
        num *= (rho + i) as u128;
        den *= i as u128;
    }
    (num / den) as usize
}

pub fn leq(a: &[usize], b: &[usize]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

pub fn sub(a: &[usize], b: &[usize]) -> MultiIndex {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn addm(a: &[usize], b: &[usize]) -> MultiIndex {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Binomial coefficient product C(beta, gamma) = prod_i C(beta_i, gamma_i).
pub fn multi_binomial(beta: &[usize], gamma: &[usize]) -> f64 {
    beta.iter()
        .zip(gamma)
        .map(|(&b, &g)| factorial(b) / (factorial(g) * factorial(b - g)))
        .product()
}
