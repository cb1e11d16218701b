//! Structure functions over subsets of `[n]`.
//!
//! A subset `S` of the components is a bitmask with bit `i` set iff
//! component `i + 1` belongs to `S`. Truth tables and real-valued set
//! functions are dense arrays indexed by the mask value.

use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::{submasks_by_size, CompensatedSum};

/// Largest component count accepted anywhere in the crate (`2^20` table entries).
pub const MAX_COMPONENTS: usize = 20;

pub(crate) fn check_arity(n: usize) -> Result<()> {
    if n == 0 || n > MAX_COMPONENTS {
        return Err(Error::TooManyComponents {
            n,
            max: MAX_COMPONENTS,
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn full_mask(n: usize) -> u32 {
    if n == 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Binomial coefficient, exact for every `n <= 62`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// Masks of `[n]` grouped by cardinality, each group in ascending mask order.
pub fn masks_by_level(n: usize) -> Vec<Vec<u32>> {
    let mut levels = vec![Vec::new(); n + 1];
    for m in 0..=full_mask(n) {
        levels[m.count_ones() as usize].push(m);
    }
    levels
}

/// Masks of cardinality `k` in ascending order.
pub fn masks_of_size(n: usize, k: usize) -> impl Iterator<Item = u32> {
    (0..=full_mask(n)).filter(move |m| m.count_ones() as usize == k)
}

/// A subset of the components `[n]`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask {
    bits: u32,
    n: u8,
}

impl SubsetMask {
    pub fn new(n: usize, bits: u32) -> Result<Self> {
        check_arity(n)?;
        if bits & !full_mask(n) != 0 {
            return Err(Error::InvalidArgument(format!(
                "mask {bits:#b} has bits beyond component {n}"
            )));
        }
        Ok(SubsetMask { bits, n: n as u8 })
    }

    /// Builds a subset from 1-based component indices.
    pub fn from_components(n: usize, components: &[usize]) -> Result<Self> {
        check_arity(n)?;
        let mut bits = 0u32;
        for &c in components {
            if c == 0 || c > n {
                return Err(Error::InvalidArgument(format!(
                    "component index {c} outside 1..={n}"
                )));
            }
            bits |= 1 << (c - 1);
        }
        Ok(SubsetMask { bits, n: n as u8 })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    pub fn full(n: usize) -> Result<Self> {
        Self::new(n, full_mask(n))
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn n(self) -> usize {
        self.n as usize
    }

    /// Cardinality `|S|`.
    #[inline]
    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    /// Membership of the 0-based component `i`.
    #[inline]
    pub fn contains(self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }

    pub fn is_subset_of(self, other: SubsetMask) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn complement(self) -> SubsetMask {
        SubsetMask {
            bits: !self.bits & full_mask(self.n()),
            n: self.n,
        }
    }

    /// 0-based member indices in ascending order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let bits = self.bits;
        (0..32).filter(move |i| bits >> i & 1 == 1)
    }

    /// 1-based component indices, as used in file formats.
    pub fn to_components(self) -> Vec<usize> {
        self.members().map(|i| i + 1).collect()
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (j, c) in self.to_components().iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

/// Boolean structure function stored as a packed truth table.
#[derive(Clone, PartialEq, Eq)]
pub struct StructureFunction {
    n: usize,
    words: Vec<u64>,
}

impl fmt::Debug for StructureFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.n <= 6 {
            write!(f, "StructureFunction(n={}, {})", self.n, self.to_bit_string())
        } else {
            write!(f, "StructureFunction(n={})", self.n)
        }
    }
}

impl StructureFunction {
    pub fn from_fn(n: usize, mut phi: impl FnMut(u32) -> bool) -> Result<Self> {
        check_arity(n)?;
        let size = 1usize << n;
        let mut words = vec![0u64; size.div_ceil(64)];
        for m in 0..size {
            if phi(m as u32) {
                words[m / 64] |= 1 << (m % 64);
            }
        }
        Ok(StructureFunction { n, words })
    }

    pub fn from_table(n: usize, table: &[bool]) -> Result<Self> {
        check_arity(n)?;
        if table.len() != 1 << n {
            return Err(Error::InvalidStructure(format!(
                "truth table has {} entries, expected 2^{n} = {}",
                table.len(),
                1usize << n
            )));
        }
        Self::from_fn(n, |m| table[m as usize])
    }

    /// Parses a `'0'`/`'1'` string whose character at index `m` is `φ(m)`.
    pub fn from_bit_string(n: usize, bits: &str) -> Result<Self> {
        let table = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidStructure(format!(
                    "truth table character {other:?} is not 0 or 1"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_table(n, &table)
    }

    pub fn to_bit_string(&self) -> String {
        (0..1u32 << self.n)
            .map(|m| if self.value(m) { '1' } else { '0' })
            .collect()
    }

    /// Works iff at least `n - k + 1` components work, i.e. fails at the `k`th failure.
    pub fn k_out_of_n(n: usize, k: usize) -> Result<Self> {
        check_arity(n)?;
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!(
                "k = {k} outside 1..={n} for a k-out-of-n system"
            )));
        }
        Self::from_fn(n, |m| m.count_ones() as usize > n - k)
    }

    pub fn series(n: usize) -> Result<Self> {
        Self::k_out_of_n(n, 1)
    }

    pub fn parallel(n: usize) -> Result<Self> {
        Self::k_out_of_n(n, n)
    }

    /// The five-component bridge with minimal paths {1,4}, {2,5}, {1,3,5}, {2,3,4}.
    pub fn bridge() -> Self {
        let paths = PathSetSystem::from_components(
            5,
            &[vec![1, 4], vec![2, 5], vec![1, 3, 5], vec![2, 3, 4]],
        )
        .expect("bridge paths are a valid antichain");
        Self::from_path_sets(&paths)
    }

    /// `φ(S) = 1` iff some minimal path set is contained in `S`.
    pub fn from_path_sets(paths: &PathSetSystem) -> Self {
        let n = paths.n();
        let masks: Vec<u32> = paths.paths().iter().map(|p| p.bits()).collect();
        Self::from_fn(n, |m| masks.iter().any(|&p| p & !m == 0))
            .expect("path set system has valid arity")
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Unchecked lookup by raw mask.
    #[inline]
    pub fn value(&self, mask: u32) -> bool {
        let m = mask as usize;
        self.words[m / 64] >> (m % 64) & 1 == 1
    }

    pub fn evaluate(&self, s: SubsetMask) -> Result<bool> {
        if s.n() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: s.n(),
            });
        }
        Ok(self.value(s.bits()))
    }

    /// Checks boundary conditions and monotonicity over every covering pair.
    pub fn semicoherence_report(&self) -> SemicoherenceReport {
        let full = full_mask(self.n);
        let violation = if self.value(0) {
            Some(Violation::EmptySetWorks)
        } else if !self.value(full) {
            Some(Violation::FullSetFails)
        } else {
            (0..=full)
                .filter(|&m| self.value(m))
                .find_map(|m| {
                    (0..self.n)
                        .filter(|&i| m >> i & 1 == 0)
                        .find(|&i| !self.value(m | 1 << i))
                        .map(|i| Violation::NotMonotone {
                            lower: SubsetMask {
                                bits: m,
                                n: self.n as u8,
                            },
                            upper: SubsetMask {
                                bits: m | 1 << i,
                                n: self.n as u8,
                            },
                        })
                })
        };
        SemicoherenceReport { violation }
    }

    pub fn is_semicoherent(&self) -> bool {
        self.semicoherence_report().is_semicoherent()
    }

    pub(crate) fn require_semicoherent(&self) -> Result<()> {
        match self.semicoherence_report().violation {
            None => Ok(()),
            Some(v) => Err(Error::NotSemicoherent(v.to_string())),
        }
    }

    /// Minimal sets `S` with `φ(S) = 1`.
    ///
    /// Single pass over masks in increasing cardinality, keeping a working
    /// mask when no previously kept path is a subset of it. Worst case is
    /// `O(4^n)` subset tests, which is acceptable for display and simulation
    /// setup at `n <= 20`.
    pub fn minimal_path_sets(&self) -> Result<PathSetSystem> {
        self.require_semicoherent()?;
        let mut paths: Vec<u32> = Vec::new();
        for level in masks_by_level(self.n) {
            for m in level {
                if self.value(m) && !paths.iter().any(|&p| p & !m == 0) {
                    paths.push(m);
                }
            }
        }
        let n = self.n as u8;
        Ok(PathSetSystem {
            n: self.n,
            paths: paths.into_iter().map(|bits| SubsetMask { bits, n }).collect(),
        })
    }

    /// The truth table as a real-valued set function with values 0 and 1.
    pub fn to_set_function(&self) -> SetFunction {
        SetFunction::from_fn(self.n, |m| if self.value(m) { 1.0 } else { 0.0 })
            .expect("structure function has valid arity")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptySetWorks,
    FullSetFails,
    NotMonotone {
        lower: SubsetMask,
        upper: SubsetMask,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptySetWorks => write!(f, "boundary violated: phi(empty set) = 1"),
            Violation::FullSetFails => write!(f, "boundary violated: phi([n]) = 0"),
            Violation::NotMonotone { lower, upper } => write!(
                f,
                "monotonicity violated: phi({lower}) = 1 but phi({upper}) = 0"
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SemicoherenceReport {
    pub violation: Option<Violation>,
}

impl SemicoherenceReport {
    pub fn is_semicoherent(&self) -> bool {
        self.violation.is_none()
    }
}

/// Antichain of minimal path sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSetSystem {
    n: usize,
    paths: Vec<SubsetMask>,
}

impl PathSetSystem {
    pub fn new(n: usize, paths: Vec<SubsetMask>) -> Result<Self> {
        check_arity(n)?;
        if paths.is_empty() {
            return Err(Error::InvalidStructure("path set list is empty".into()));
        }
        for (j, p) in paths.iter().enumerate() {
            if p.n() != n {
                return Err(Error::ArityMismatch {
                    expected: n,
                    got: p.n(),
                });
            }
            if p.is_empty() {
                return Err(Error::InvalidStructure(format!("path {} is empty", j + 1)));
            }
            for (l, other) in paths.iter().enumerate() {
                if l != j && p.is_subset_of(*other) && (p != other || l > j) {
                    return Err(Error::InvalidStructure(format!(
                        "path {p} is contained in path {other}; paths must be minimal"
                    )));
                }
            }
        }
        Ok(PathSetSystem { n, paths })
    }

    /// Builds from lists of 1-based component indices.
    pub fn from_components(n: usize, paths: &[Vec<usize>]) -> Result<Self> {
        let masks = paths
            .iter()
            .map(|p| SubsetMask::from_components(n, p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, masks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn paths(&self) -> &[SubsetMask] {
        &self.paths
    }

    /// System lifetime `max_j min_{i in P_j} x_i` and the component realizing it.
    ///
    /// Ties are resolved towards the smallest component index.
    pub fn lifetime(&self, x: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for p in &self.paths {
            let mut worst = (f64::INFINITY, usize::MAX);
            for i in p.members() {
                if x[i] < worst.0 {
                    worst = (x[i], i);
                }
            }
            if worst.0 > best.0 || (worst.0 == best.0 && worst.1 < best.1) {
                best = worst;
            }
        }
        best
    }
}

/// Boolean order statistic `os_{k:n}`: 1 iff `|x| >= n - k + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrderStatisticFunction {
    n: usize,
    k: usize,
}

impl OrderStatisticFunction {
    /// `k` ranges over `0..=n+1`; `k = 0` is identically 0 and `k = n + 1` identically 1.
    pub fn new(n: usize, k: usize) -> Result<Self> {
        check_arity(n)?;
        if k > n + 1 {
            return Err(Error::InvalidArgument(format!(
                "order statistic rank {k} outside 0..={}",
                n + 1
            )));
        }
        Ok(OrderStatisticFunction { n, k })
    }

    #[inline]
    pub fn value(&self, mask: u32) -> bool {
        self.k > 0 && mask.count_ones() as usize + self.k > self.n
    }

    pub fn to_set_function(&self) -> SetFunction {
        SetFunction::from_fn(self.n, |m| if self.value(m) { 1.0 } else { 0.0 })
            .expect("valid arity")
    }
}

/// Dense real-valued set function `f: 2^[n] -> R`.
#[derive(Clone, Debug, PartialEq)]
pub struct SetFunction {
    n: usize,
    values: Vec<f64>,
}

impl SetFunction {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        check_arity(n)?;
        if values.len() != 1 << n {
            return Err(Error::InvalidArgument(format!(
                "set function has {} values, expected {}",
                values.len(),
                1usize << n
            )));
        }
        Ok(SetFunction { n, values })
    }

    pub fn from_fn(n: usize, f: impl FnMut(u32) -> f64) -> Result<Self> {
        check_arity(n)?;
        Ok(SetFunction {
            n,
            values: (0..=full_mask(n)).map(f).collect(),
        })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::from_fn(n, |_| c)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, mask: u32) -> f64 {
        self.values[mask as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Whether the value depends on the mask only through its cardinality.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let mut reference: Vec<Option<f64>> = vec![None; self.n + 1];
        self.values.iter().enumerate().all(|(m, &v)| {
            let level = (m as u32).count_ones() as usize;
            match reference[level] {
                None => {
                    reference[level] = Some(v);
                    true
                }
                Some(r) => (v - r).abs() <= tol,
            }
        })
    }
}

/// Single-coordinate difference `f(x | x_i = 1) - f(x | x_i = 0)` on a dense table.
fn difference_in(values: &mut [f64], i: usize) {
    let bit = 1usize << i;
    for m in 0..values.len() {
        if m & bit == 0 {
            let d = values[m | bit] - values[m];
            values[m] = d;
            values[m | bit] = d;
        }
    }
}

/// The `S`-difference `Δ^S f`, eliminating the members of `S` in ascending order.
pub fn s_difference(f: &SetFunction, s: SubsetMask) -> Result<SetFunction> {
    if s.n() != f.n() {
        return Err(Error::ArityMismatch {
            expected: f.n(),
            got: s.n(),
        });
    }
    let order: Vec<usize> = s.members().collect();
    s_difference_in_order(f, &order)
}

/// `Δ^S f` applying the single-coordinate differences in the given order.
pub fn s_difference_in_order(f: &SetFunction, order: &[usize]) -> Result<SetFunction> {
    let mut seen = 0u32;
    for &i in order {
        if i >= f.n() || seen >> i & 1 == 1 {
            return Err(Error::InvalidArgument(format!(
                "difference order {order:?} is not a list of distinct components below {}",
                f.n()
            )));
        }
        seen |= 1 << i;
    }
    let mut values = f.values.clone();
    for &i in order {
        difference_in(&mut values, i);
    }
    Ok(SetFunction { n: f.n, values })
}

/// Pointwise `(Δ^S f)(x)` for a set function given as a fallible callback.
///
/// Only arguments of the form `(x \ S) ∪ K` with `K ⊆ S` are queried, so a
/// function with a pole outside that range is never touched there.
pub fn s_difference_at(
    f: impl Fn(u32) -> Result<f64>,
    s: SubsetMask,
    x: SubsetMask,
) -> Result<f64> {
    if s.n() != x.n() {
        return Err(Error::ArityMismatch {
            expected: s.n(),
            got: x.n(),
        });
    }
    let base = x.bits() & !s.bits();
    let size = s.len();
    let mut acc = CompensatedSum::new();
    for k in submasks_by_size(s.bits()) {
        let v = f(base | k)?;
        // sign (-1)^{|S| - |K|}
        if (size - k.count_ones() as usize).is_multiple_of(2) {
            acc.add(v);
        } else {
            acc.add(-v);
        }
    }
    Ok(acc.value())
}
