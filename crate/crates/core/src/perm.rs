//! Permutations of `0..n` in lexicographic order.

pub fn factorial(n: usize) -> usize {
    (1..=n).product()
}

pub fn is_permutation(sigma: &[usize], n: usize) -> bool {
    if sigma.len() != n {
        return false;
    }
    let mut seen = 0u64;
    for &s in sigma {
        if s >= n || seen >> s & 1 == 1 {
            return false;
        }
        seen |= 1 << s;
    }
    true
}

/// Lexicographic rank via the Lehmer code.
pub fn rank(sigma: &[usize]) -> usize {
    let n = sigma.len();
    let mut r = 0;
    for i in 0..n {
        let smaller = sigma[i + 1..].iter().filter(|&&s| s < sigma[i]).count();
        r = r * (n - i) + smaller;
    }
    r
}

/// Lexicographic iterator over all permutations of `0..n`.
pub struct Permutations {
    next: Option<Vec<usize>>,
}

impl Permutations {
    pub fn new(n: usize) -> Self {
        Permutations {
            next: Some((0..n).collect()),
        }
    }
}

impl Iterator for Permutations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let n = succ.len();
        if n > 1 {
            if let Some(i) = (0..n - 1).rev().find(|&i| succ[i] < succ[i + 1]) {
                let j = (i + 1..n).rev().find(|&j| succ[j] > succ[i]).unwrap();
                succ.swap(i, j);
                succ[i + 1..].reverse();
                self.next = Some(succ);
            }
        }
        Some(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_in_rank_order() {
        for n in 0..=6 {
            let all: Vec<_> = Permutations::new(n).collect();
            assert_eq!(all.len(), factorial(n));
            for (r, p) in all.iter().enumerate() {
                assert!(is_permutation(p, n));
                assert_eq!(rank(p), r);
            }
        }
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(!is_permutation(&[0, 0], 2));
        assert!(!is_permutation(&[0, 2], 2));
        assert!(!is_permutation(&[0], 2));
    }
}
