/// Kahan–Babuška (Neumaier) compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Scatters the low bits of `compact` onto the set bits of `mask`, lowest first.
#[inline]
pub fn deposit_bits(mut compact: u32, mut mask: u32) -> u32 {
    let mut out = 0;
    while mask != 0 && compact != 0 {
        let low = mask & mask.wrapping_neg();
        if compact & 1 == 1 {
            out |= low;
        }
        compact >>= 1;
        mask ^= low;
    }
    out
}

/// Submasks of `mask` ordered by cardinality, ascending mask value within a cardinality.
pub fn submasks_by_size(mask: u32) -> impl Iterator<Item = u32> {
    let r = mask.count_ones();
    (0..=r).flat_map(move |c| {
        // Gosper's hack over the compact index space keeps ascending order
        // after depositing onto `mask`.
        let first: u64 = (1u64 << c) - 1;
        let limit: u64 = 1u64 << r;
        std::iter::successors(Some(first), move |&x| {
            if x == 0 {
                return None;
            }
            let low = x & x.wrapping_neg();
            let ripple = x + low;
            let next = (((ripple ^ x) >> 2) / low) | ripple;
            Some(next)
        })
        .take_while(move |&x| x < limit)
        .map(move |x| deposit_bits(x as u32, mask))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-13).abs() < 1e-25);
    }

    #[test]
    fn submask_order() {
        let mask = 0b10110;
        let got: Vec<u32> = submasks_by_size(mask).collect();
        let mut expected: Vec<u32> = (0..=mask).filter(|k| k & !mask == 0).collect();
        expected.sort_by_key(|k| (k.count_ones(), *k));
        assert_eq!(got, expected);
        assert_eq!(submasks_by_size(0).collect::<Vec<_>>(), vec![0]);
    }
}
