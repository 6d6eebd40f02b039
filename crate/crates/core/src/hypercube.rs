//! Fourier analysis over the boolean hypercube `H_n` and its q-fold products.
//!
//! Points of `H_n^q` are flat indices in `0..2^(n*q)`: the bits of a point are
//! the concatenation of its q blocks with block 0 in the top bits, and within
//! a block coordinate 0 is the most significant bit. Characters, transforms,
//! and Hamming balls all use this one layout, so serialized tables and form
//! indices are reproducible bit-for-bit.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Coefficients below this are treated as zero Fourier support.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Largest table exponent we will allocate (2^22 doubles = 32 MiB).
const MAX_TABLE_BITS: usize = 22;

/// An element of `H_n`, stored as an n-bit integer with coordinate 0 in the
/// most significant position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    len: usize,
    bits: u32,
}

impl BitString {
    pub fn new(len: usize, bits: u32) -> Result<Self> {
        if len == 0 || len > 31 {
            return Err(Error::Parameter(format!("bit string length {len} out of range")));
        }
        if bits >> len != 0 {
            return Err(Error::Parameter(format!(
                "value {bits:#b} does not fit in {len} bits"
            )));
        }
        Ok(Self { len, bits })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Canonical integer encoding (coordinate 0 most significant).
    pub fn value(&self) -> u32 {
        self.bits
    }

    pub fn weight(&self) -> usize {
        self.bits.count_ones() as usize
    }

    /// Coordinate `pos` (0-based from the front of the string).
    pub fn bit(&self, pos: usize) -> bool {
        debug_assert!(pos < self.len);
        (self.bits >> (self.len - 1 - pos)) & 1 == 1
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len != other.len {
            return Err(Error::Dimension(format!(
                "xor of bit strings of lengths {} and {}",
                self.len, other.len
            )));
        }
        Ok(BitString { len: self.len, bits: self.bits ^ other.bits })
    }
}

impl std::fmt::Display for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for pos in 0..self.len {
            write!(f, "{}", u8::from(self.bit(pos)))?;
        }
        Ok(())
    }
}

/// Character evaluation: (-1)^(u.x) for same-length strings.
pub fn char_eval(u: &BitString, x: &BitString) -> Result<f64> {
    if u.len() != x.len() {
        return Err(Error::Dimension(format!(
            "character of length {} applied to point of length {}",
            u.len(),
            x.len()
        )));
    }
    Ok(char_eval_flat(u.value() as usize, x.value() as usize))
}

/// Character evaluation on flat indices (any common layout).
pub fn char_eval_flat(u: usize, x: usize) -> f64 {
    if (u & x).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// The Hamming ball `B_{n,m}`: all n-bit strings of weight at most m, ordered
/// ascending as canonical integers. The position of a string in this list is
/// its rank, used as the flat Fourier index by the forms layer.
#[derive(Debug, Clone)]
pub struct HammingBall {
    n: usize,
    radius: usize,
    members: Vec<BitString>,
    rank_of: Vec<Option<u32>>,
}

impl HammingBall {
    pub fn new(n: usize, radius: usize) -> Result<Self> {
        if n == 0 || n > 20 {
            return Err(Error::Parameter(format!("ball dimension {n} out of range")));
        }
        if radius > n {
            return Err(Error::Parameter(format!(
                "ball radius {radius} exceeds dimension {n}"
            )));
        }
        let mut members = Vec::new();
        let mut rank_of = vec![None; 1 << n];
        for bits in 0u32..(1 << n) {
            if (bits.count_ones() as usize) <= radius {
                rank_of[bits as usize] = Some(members.len() as u32);
                members.push(BitString { len: n, bits });
            }
        }
        Ok(Self { n, radius, members, rank_of })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[BitString] {
        &self.members
    }

    pub fn member(&self, rank: usize) -> &BitString {
        &self.members[rank]
    }

    /// Rank of a canonical value inside the ball, if its weight qualifies.
    pub fn rank(&self, bits: u32) -> Option<usize> {
        self.rank_of.get(bits as usize).copied().flatten().map(|r| r as usize)
    }
}

/// Sum of binomial coefficients C(n,0) + ... + C(n,m) as a float, for the
/// bound calculators where n is far too large to enumerate.
pub fn choose_sum(n: u64, m: u64) -> f64 {
    let m = m.min(n);
    let mut term = 1.0_f64;
    let mut total = 1.0_f64;
    for l in 0..m {
        term *= (n - l) as f64 / (l + 1) as f64;
        total += term;
    }
    total
}

/// A real-valued function on `H_n^q` tabulated over all `2^(n*q)` points,
/// with its Fourier transform computed on demand and cached.
#[derive(Debug)]
pub struct FunctionTable {
    n: usize,
    q: usize,
    values: Vec<f64>,
    fourier: OnceLock<Vec<f64>>,
}

impl Clone for FunctionTable {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            q: self.q,
            values: self.values.clone(),
            fourier: OnceLock::new(),
        }
    }
}

impl FunctionTable {
    pub fn new(n: usize, q: usize, values: Vec<f64>) -> Result<Self> {
        let bits = table_bits(n, q)?;
        if values.len() != 1 << bits {
            return Err(Error::Dimension(format!(
                "table over H_{n}^{q} needs {} values, got {}",
                1usize << bits,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| v.abs() > 1.0 + 1e-9 || !v.is_finite()) {
            return Err(Error::Contract(format!("table value {v} outside [-1, 1]")));
        }
        Ok(Self { n, q, values, fourier: OnceLock::new() })
    }

    pub fn from_fn(n: usize, q: usize, f: impl FnMut(usize) -> f64) -> Result<Self> {
        let bits = table_bits(n, q)?;
        Self::new(n, q, (0..1usize << bits).map(f).collect())
    }

    pub fn constant(n: usize, q: usize, c: f64) -> Result<Self> {
        Self::from_fn(n, q, |_| c)
    }

    /// The character x -> (-1)^(u.x) as a table, u given as a flat index.
    pub fn character(n: usize, q: usize, u: usize) -> Result<Self> {
        Self::from_fn(n, q, |x| char_eval_flat(u, x))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn num_points(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, point: usize) -> f64 {
        self.values[point]
    }

    /// Value at a tuple of symbols, one per block.
    pub fn value_at_symbols(&self, symbols: &[u32]) -> f64 {
        debug_assert_eq!(symbols.len(), self.q);
        self.values[flatten_blocks(self.n, symbols)]
    }

    /// Fourier coefficients over all of `H_n^q`, indexed like the values.
    /// Computed once by the fast Walsh-Hadamard recursion.
    pub fn fourier(&self) -> &[f64] {
        self.fourier.get_or_init(|| {
            let mut coeffs = self.values.clone();
            fwht(&mut coeffs);
            let scale = 1.0 / self.values.len() as f64;
            for c in &mut coeffs {
                *c *= scale;
            }
            coeffs
        })
    }

    /// Smallest d such that every coefficient with some block of weight > d
    /// vanishes (within `SUPPORT_TOL`).
    pub fn degree(&self) -> usize {
        let mask = (1usize << self.n) - 1;
        let mut deg = 0;
        for (u, c) in self.fourier().iter().enumerate() {
            if c.abs() <= SUPPORT_TOL {
                continue;
            }
            for j in 0..self.q {
                let block = (u >> (self.n * (self.q - 1 - j))) & mask;
                deg = deg.max(block.count_ones() as usize);
            }
        }
        deg
    }
}

fn table_bits(n: usize, q: usize) -> Result<usize> {
    if n == 0 || q == 0 {
        return Err(Error::Parameter("table needs n >= 1 and q >= 1".into()));
    }
    let bits = n * q;
    if bits > MAX_TABLE_BITS {
        return Err(Error::Resource(format!(
            "table over H_{n}^{q} has 2^{bits} entries, budget is 2^{MAX_TABLE_BITS}"
        )));
    }
    Ok(bits)
}

/// Flat index of a point of `H_n^q` from its blocks (block 0 most significant).
pub fn flatten_blocks(n: usize, symbols: &[u32]) -> usize {
    let mut idx = 0usize;
    for &s in symbols {
        debug_assert!((s as usize) < (1 << n));
        idx = (idx << n) | s as usize;
    }
    idx
}

/// Block `j` of a flat point of `H_n^q`.
pub fn block_of(n: usize, q: usize, point: usize, j: usize) -> u32 {
    ((point >> (n * (q - 1 - j))) & ((1 << n) - 1)) as u32
}

/// In-place unnormalized Walsh-Hadamard transform; applying it twice
/// multiplies by the length.
pub fn fwht(values: &mut [f64]) {
    let len = values.len();
    assert!(len.is_power_of_two(), "FWHT length must be a power of two");
    let mut h = 1;
    while h < len {
        for chunk in values.chunks_exact_mut(2 * h) {
            let (a, b) = chunk.split_at_mut(h);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (s, d) = (*x + *y, *x - *y);
                *x = s;
                *y = d;
            }
        }
        h *= 2;
    }
}

/// The spec-level transform: f_hat(u) = E_x[f(x) chi_u(x)] for every u.
pub fn fourier_transform(table: &FunctionTable) -> Vec<f64> {
    table.fourier().to_vec()
}
