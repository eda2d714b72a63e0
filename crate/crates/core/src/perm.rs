//! Permutations of `{0, .., p-1}` and their cycle statistics.
//!
//! Composition follows the usual right-to-left convention:
//! `(a * b)(x) = a(b(x))`.

use std::fmt;

use crate::error::{Error, Result};

/// A bijection of `{0, .., p-1}` stored as its image sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

/// Integer partition of `p`, stored non-increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleType(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let p = images.len();
        let mut seen = vec![false; p];
        for &x in &images {
            if x >= p || seen[x] {
                return Err(Error::InvalidParameter(format!(
                    "{images:?} is not a permutation of 0..{p}"
                )));
            }
            seen[x] = true;
        }
        Ok(Self { images })
    }

    pub fn identity(p: usize) -> Self {
        Self {
            images: (0..p).collect(),
        }
    }

    /// Builds a permutation from disjoint cycles (0-based points).
    pub fn from_cycles(p: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut images: Vec<usize> = (0..p).collect();
        for c in cycles {
            for (i, &x) in c.iter().enumerate() {
                if x >= p {
                    return Err(Error::InvalidParameter(format!("point {x} outside 0..{p}")));
                }
                images[x] = c[(i + 1) % c.len()];
            }
        }
        Self::new(images)
    }

    /// The full cycle `(p, p-1, .., 2, 1)`, i.e. `l -> l-1` with `1 -> p`.
    pub fn reverse_full_cycle(p: usize) -> Self {
        Self {
            images: (0..p).map(|i| (i + p - 1) % p).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, x: usize) -> usize {
        self.images[x]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &x) in self.images.iter().enumerate() {
            inv[x] = i;
        }
        Self { images: inv }
    }

    /// `self * other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.degree(), other.degree(), "degree mismatch in compose");
        Self {
            images: other.images.iter().map(|&x| self.images[x]).collect(),
        }
    }

    /// Lengths of all cycles, fixed points included, in order of first point.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        cycle_lengths_of(&self.images)
    }

    /// `#σ`.
    pub fn cycle_count(&self) -> usize {
        cycle_count_of(&self.images)
    }

    /// `|σ|`, the minimal number of transpositions whose product is `σ`.
    pub fn length(&self) -> usize {
        self.degree() - self.cycle_count()
    }

    pub fn cycle_type(&self) -> CycleType {
        CycleType::from_lengths(self.cycle_lengths())
    }

    /// Möbius function of the non-crossing partition lattice, extended
    /// multiplicatively over cycles: `prod_c (-1)^{|c|-1} Cat_{|c|-1}`.
    pub fn moebius(&self) -> i64 {
        self.cycle_type().moebius()
    }
}

impl fmt::Display for Permutation {
    /// Cycle notation on 1-based points, fixed points omitted.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.degree();
        let mut seen = vec![false; p];
        let mut wrote = false;
        for start in 0..p {
            if seen[start] || self.images[start] == start {
                seen[start] = true;
                continue;
            }
            write!(f, "(")?;
            let mut x = start;
            let mut first = true;
            while !seen[x] {
                seen[x] = true;
                if !first {
                    write!(f, " ")?;
                }
                write!(f, "{}", x + 1)?;
                first = false;
                x = self.images[x];
            }
            write!(f, ")")?;
            wrote = true;
        }
        if !wrote {
            write!(f, "id")?;
        }
        Ok(())
    }
}

pub(crate) fn cycle_lengths_of(images: &[usize]) -> Vec<usize> {
    let p = images.len();
    let mut seen = [false; 64];
    let mut seen_vec;
    let seen: &mut [bool] = if p <= 64 {
        &mut seen[..p]
    } else {
        seen_vec = vec![false; p];
        &mut seen_vec
    };
    let mut lengths = Vec::new();
    for start in 0..p {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut x = start;
        while !seen[x] {
            seen[x] = true;
            x = images[x];
            len += 1;
        }
        lengths.push(len);
    }
    lengths
}

pub(crate) fn cycle_count_of(images: &[usize]) -> usize {
    let p = images.len();
    let mut seen = 0u64;
    let mut count = 0;
    debug_assert!(p <= 64);
    for start in 0..p {
        if seen & (1 << start) != 0 {
            continue;
        }
        count += 1;
        let mut x = start;
        while seen & (1 << x) == 0 {
            seen |= 1 << x;
            x = images[x];
        }
    }
    count
}

impl CycleType {
    pub fn from_lengths(mut lengths: Vec<usize>) -> Self {
        lengths.retain(|&l| l > 0);
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        Self(lengths)
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn cycle_count(&self) -> usize {
        self.0.len()
    }

    pub fn length(&self) -> usize {
        self.size() - self.cycle_count()
    }

    pub fn moebius(&self) -> i64 {
        self.0
            .iter()
            .map(|&l| {
                let sign = if (l - 1) % 2 == 0 { 1 } else { -1 };
                sign * catalan(l - 1) as i64
            })
            .product()
    }

    /// A permutation with this cycle type (consecutive points per cycle).
    pub fn representative(&self) -> Permutation {
        let p = self.size();
        let mut images = vec![0; p];
        let mut start = 0;
        for &l in &self.0 {
            for i in 0..l {
                images[start + i] = start + (i + 1) % l;
            }
            start += l;
        }
        Permutation { images }
    }

    /// All partitions of `p`, in reverse lexicographic order (`[p]` first).
    pub fn partitions(p: usize) -> Vec<CycleType> {
        fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<CycleType>) {
            if rest == 0 {
                out.push(CycleType(cur.clone()));
                return;
            }
            for part in (1..=max.min(rest)).rev() {
                cur.push(part);
                rec(rest - part, part, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(p, p, &mut Vec::new(), &mut out);
        out
    }

    /// Number of permutations with this cycle type: `p! / prod_l (l^{m_l} m_l!)`.
    pub fn class_size(&self) -> u64 {
        let p = self.size() as u64;
        let mut denom = 1u64;
        let mut i = 0;
        while i < self.0.len() {
            let l = self.0[i] as u64;
            let mut m = 0u64;
            while i < self.0.len() && self.0[i] as u64 == l {
                m += 1;
                i += 1;
            }
            denom *= l.pow(m as u32) * factorial(m);
        }
        factorial(p) / denom
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

pub fn catalan(n: usize) -> u64 {
    // C_n = binom(2n, n) / (n + 1), exact for the small n used here.
    let mut c: u64 = 1;
    for i in 0..n as u64 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

pub fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

/// Every permutation of `{0, .., p-1}` in lexicographic order.
pub fn all_permutations(p: usize) -> Vec<Permutation> {
    let mut cur: Vec<usize> = (0..p).collect();
    let mut out = Vec::with_capacity(factorial(p as u64) as usize);
    loop {
        out.push(Permutation {
            images: cur.clone(),
        });
        // next lexicographic permutation
        let Some(i) = (1..p).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..p).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}
