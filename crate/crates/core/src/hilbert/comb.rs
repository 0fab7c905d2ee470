//! Small combinatorics used throughout: binomials, subsets, permutations,
//! multisets.

/// Binomial coefficient as f64; zero outside `0 ≤ k ≤ n`.
pub fn binom(n: i64, k: i64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `C(t,c) / 2^t`.
pub fn binomial_pmf(t: usize, c: usize) -> f64 {
    if c > t {
        return 0.0;
    }
    binom(t as i64, c as i64) / 2f64.powi(t as i32)
}

/// All size-`c` subsets of `0..t`, lexicographic.
pub fn subsets(t: usize, c: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if c > t {
        return out;
    }
    let mut cur: Vec<usize> = (0..c).collect();
    loop {
        out.push(cur.clone());
        let mut i = c;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < t - c + i {
                cur[i] += 1;
                for j in i + 1..c {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// All permutations of `0..k`, lexicographic.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..k).collect();
    loop {
        out.push(p.clone());
        // next lexicographic permutation
        let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..k).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

/// Distinct rearrangements of a sequence (multiset permutations), lexicographic.
pub fn distinct_arrangements(items: &[usize]) -> Vec<Vec<usize>> {
    let mut p = items.to_vec();
    p.sort_unstable();
    let k = p.len();
    let mut out = Vec::new();
    loop {
        out.push(p.clone());
        let Some(i) = (0..k.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            return out;
        };
        let j = (i + 1..k).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
    }
}

/// All size-`t` multisets over `lo..=hi`, as sorted vectors.
pub fn multisets(lo: usize, hi: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if hi < lo {
        if t == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    let mut cur = vec![lo; t];
    loop {
        out.push(cur.clone());
        let mut i = t;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < hi {
                cur[i] += 1;
                for j in i + 1..t {
                    cur[j] = cur[i];
                }
                break;
            }
        }
    }
}

/// Mixed-radix decomposition, most significant digit first.
pub fn digits(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (slot, &d) in out.iter_mut().zip(dims).rev() {
        *slot = idx % d;
        idx /= d;
    }
    out
}

pub fn undigits(digs: &[usize], dims: &[usize]) -> usize {
    digs.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}
