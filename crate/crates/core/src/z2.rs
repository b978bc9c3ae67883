//! Exact linear algebra over the two-element field.
//!
//! Vectors and matrices are bit-packed into `u64` words. Addition is xor,
//! multiplication is and; nothing here touches floating point.
//!
//! [`Reducer`] is the workhorse: an incrementally built echelon basis that
//! also tracks, for every stored vector, which tagged generators it is a sum
//! of. Rank, kernels, span membership and coordinate solving all go through it.

use std::fmt;

const WORD: usize = 64;

fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD)
}

/// A vector in Z2^n.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Z2Vector {
    len: usize,
    words: Vec<u64>,
}

impl Z2Vector {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; words_for(len)],
        }
    }

    pub fn unit(len: usize, index: usize) -> Self {
        let mut v = Self::zeros(len);
        v.set(index, true);
        v
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    /// Vector whose bit `i` is bit `i` of `mask`. Used to enumerate small spaces.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        assert!(len <= WORD, "from_mask supports at most 64 coordinates");
        let mut v = Self::zeros(len);
        if len > 0 {
            let keep = if len == WORD { u64::MAX } else { (1u64 << len) - 1 };
            v.words[0] = mask & keep;
        }
        v
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v = Self::zeros(len);
        for i in indices {
            v.flip(i);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        let bit = 1u64 << (i % WORD);
        if value {
            self.words[i / WORD] |= bit;
        } else {
            self.words[i / WORD] &= !bit;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn lowest_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(k, w)| k * WORD + w.trailing_zeros() as usize)
    }

    /// Indices of the nonzero coordinates, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let t = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(k * WORD + t)
                }
            })
        })
    }

    pub fn xor_assign(&mut self, other: &Z2Vector) {
        assert_eq!(self.len, other.len, "length mismatch in vector addition");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn dot(&self, other: &Z2Vector) -> bool {
        assert_eq!(self.len, other.len, "length mismatch in dot product");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            % 2
            == 1
    }

    /// Concatenate `parts` into one vector.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Z2Vector>) -> Z2Vector {
        let parts: Vec<&Z2Vector> = parts.into_iter().collect();
        let len = parts.iter().map(|p| p.len).sum();
        let mut out = Z2Vector::zeros(len);
        let mut offset = 0;
        for p in parts {
            for i in p.ones() {
                out.set(offset + i, true);
            }
            offset += p.len;
        }
        out
    }

    /// Coordinates `start..start+len`.
    pub fn slice(&self, start: usize, len: usize) -> Z2Vector {
        assert!(start + len <= self.len);
        Z2Vector::from_indices(
            len,
            self.ones()
                .filter(|&i| i >= start && i < start + len)
                .map(|i| i - start),
        )
    }

    pub fn truncated(&self, len: usize) -> Z2Vector {
        self.slice(0, len.min(self.len))
    }
}

impl std::ops::Add for &Z2Vector {
    type Output = Z2Vector;

    fn add(self, rhs: &Z2Vector) -> Z2Vector {
        let mut out = self.clone();
        out.xor_assign(rhs);
        out
    }
}

impl fmt::Debug for Z2Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.len {
            write!(f, "{}", u8::from(self.get(i)))?;
        }
        write!(f, "]")
    }
}

/// A dense matrix over Z2, stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Z2Matrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl Z2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        Self {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Build from row-major 0/1 entries. Panics if rows are ragged.
    pub fn from_rows(rows: &[&[u8]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "ragged matrix rows");
            for (j, &b) in row.iter().enumerate() {
                if b & 1 == 1 {
                    m.set(i, j, true);
                }
            }
        }
        m
    }

    /// Matrix whose columns are `cols`, each of length `rows`.
    pub fn from_columns(rows: usize, cols: &[Z2Vector]) -> Self {
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "column {j} has wrong length");
            for i in c.ones() {
                m.set(i, j, true);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        (self.data[i * self.stride + j / WORD] >> (j % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        assert!(i < self.rows && j < self.cols, "entry ({i},{j}) out of range");
        let bit = 1u64 << (j % WORD);
        let w = &mut self.data[i * self.stride + j / WORD];
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize, j: usize) {
        assert!(i < self.rows && j < self.cols, "entry ({i},{j}) out of range");
        self.data[i * self.stride + j / WORD] ^= 1u64 << (j % WORD);
    }

    fn row_words(&self, i: usize) -> &[u64] {
        &self.data[i * self.stride..(i + 1) * self.stride]
    }

    pub fn row(&self, i: usize) -> Z2Vector {
        Z2Vector {
            len: self.cols,
            words: self.row_words(i).to_vec(),
        }
    }

    pub fn column(&self, j: usize) -> Z2Vector {
        let mut v = Z2Vector::zeros(self.rows);
        for i in 0..self.rows {
            if self.get(i, j) {
                v.set(i, true);
            }
        }
        v
    }

    pub fn columns(&self) -> Vec<Z2Vector> {
        self.transpose().row_vectors()
    }

    fn row_vectors(&self) -> Vec<Z2Vector> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn transpose(&self) -> Z2Matrix {
        let mut t = Z2Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            let row = Z2Vector {
                len: self.cols,
                words: self.row_words(i).to_vec(),
            };
            for j in row.ones() {
                t.set(j, i, true);
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&w| w == 0)
    }

    pub fn mul_vec(&self, v: &Z2Vector) -> Z2Vector {
        assert_eq!(self.cols, v.len(), "shape mismatch in matrix-vector product");
        let mut out = Z2Vector::zeros(self.rows);
        for i in 0..self.rows {
            let parity = self
                .row_words(i)
                .iter()
                .zip(&v.words)
                .map(|(a, b)| (a & b).count_ones())
                .sum::<u32>();
            if parity % 2 == 1 {
                out.set(i, true);
            }
        }
        out
    }

    /// `self * rhs`.
    pub fn mul(&self, rhs: &Z2Matrix) -> Z2Matrix {
        assert_eq!(
            self.cols, rhs.rows,
            "shape mismatch in matrix product: {:?} * {:?}",
            self.shape(),
            rhs.shape()
        );
        let mut out = Z2Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let row = Z2Vector {
                len: self.cols,
                words: self.row_words(i).to_vec(),
            };
            for k in row.ones() {
                let src = k * rhs.stride;
                let dst = i * out.stride;
                for w in 0..out.stride {
                    out.data[dst + w] ^= rhs.data[src + w];
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        let mut r = Reducer::new(self.rows, 0);
        for c in self.columns() {
            r.insert(c, Z2Vector::zeros(0));
        }
        r.rank()
    }

    /// Basis of the null space, one vector per dependent column in column order.
    pub fn kernel(&self) -> Vec<Z2Vector> {
        let mut r = Reducer::new(self.rows, self.cols);
        let mut basis = Vec::new();
        for (j, c) in self.columns().into_iter().enumerate() {
            if let Insertion::Dependent(combo) = r.insert(c, Z2Vector::unit(self.cols, j)) {
                basis.push(combo);
            }
        }
        basis
    }

    /// Echelon basis of the column space, tagged by column index.
    pub fn column_space(&self) -> Reducer {
        let mut r = Reducer::new(self.rows, self.cols);
        for (j, c) in self.columns().into_iter().enumerate() {
            r.insert(c, Z2Vector::unit(self.cols, j));
        }
        r
    }

    /// Horizontal block `[self | rhs]`.
    pub fn hstack(&self, rhs: &Z2Matrix) -> Z2Matrix {
        assert_eq!(self.rows, rhs.rows, "row mismatch in hstack");
        let mut out = Z2Matrix::zeros(self.rows, self.cols + rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    out.set(i, j, true);
                }
            }
            for j in 0..rhs.cols {
                if rhs.get(i, j) {
                    out.set(i, self.cols + j, true);
                }
            }
        }
        out
    }
}

impl fmt::Debug for Z2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Z2Matrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                write!(f, "{}", u8::from(self.get(i, j)))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Outcome of [`Reducer::insert`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Insertion {
    /// The vector enlarged the span.
    Independent,
    /// The vector was already in the span; the payload is the tag sum that
    /// reproduces the inserted (vector, tag) pair as zero.
    Dependent(Z2Vector),
}

/// Incremental echelon basis with tags.
///
/// Every stored vector has a distinct lowest set bit (its pivot). Each stored
/// vector carries a tag recording which inserted generators it is a sum of,
/// so reducing a vector to zero also yields the combination that produced it.
#[derive(Clone, Debug)]
pub struct Reducer {
    dim: usize,
    tag_len: usize,
    by_pivot: Vec<Option<usize>>,
    vectors: Vec<Z2Vector>,
    tags: Vec<Z2Vector>,
}

impl Reducer {
    pub fn new(dim: usize, tag_len: usize) -> Self {
        Self {
            dim,
            tag_len,
            by_pivot: vec![None; dim],
            vectors: Vec::new(),
            tags: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn tag_len(&self) -> usize {
        self.tag_len
    }

    /// Reduce `v` against the basis, returning the remainder and the tag of
    /// the basis vectors that were added to it.
    pub fn reduce(&self, v: &Z2Vector) -> (Z2Vector, Z2Vector) {
        assert_eq!(v.len(), self.dim, "vector length does not match reducer");
        let mut rem = v.clone();
        let mut tag = Z2Vector::zeros(self.tag_len);
        let mut from = 0;
        loop {
            let next = rem.words[from / WORD..]
                .iter()
                .enumerate()
                .find_map(|(k, &w)| {
                    let base = (from / WORD + k) * WORD;
                    let masked = if k == 0 { w & (u64::MAX << (from % WORD)) } else { w };
                    (masked != 0).then(|| base + masked.trailing_zeros() as usize)
                });
            let Some(p) = next else { break };
            match self.by_pivot[p] {
                Some(idx) => {
                    rem.xor_assign(&self.vectors[idx]);
                    tag.xor_assign(&self.tags[idx]);
                }
                None => {
                    from = p + 1;
                    if from >= self.dim {
                        break;
                    }
                }
            }
        }
        (rem, tag)
    }

    pub fn contains(&self, v: &Z2Vector) -> bool {
        self.reduce(v).0.is_zero()
    }

    /// Tag combination producing `v` exactly, if `v` is in the span.
    pub fn solve(&self, v: &Z2Vector) -> Option<Z2Vector> {
        let (rem, tag) = self.reduce(v);
        rem.is_zero().then_some(tag)
    }

    pub fn insert(&mut self, v: Z2Vector, tag: Z2Vector) -> Insertion {
        assert_eq!(tag.len(), self.tag_len, "tag length does not match reducer");
        let (rem, acc) = self.reduce(&v);
        let tag = &tag + &acc;
        match rem.lowest_one() {
            None => Insertion::Dependent(tag),
            Some(p) => {
                self.by_pivot[p] = Some(self.vectors.len());
                self.vectors.push(rem);
                self.tags.push(tag);
                Insertion::Independent
            }
        }
    }
}
