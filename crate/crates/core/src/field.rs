//! Finite-field arithmetic over GF(p) and GF(2^8), plus dense matrices over
//! those fields and their text serialization.
//!
//! Hot paths work on raw `u32` symbols through the `*_raw` methods of
//! [`FieldSpec`]; [`FieldElement`] is the checked wrapper that refuses to mix
//! elements of different fields.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// AES reduction polynomial x^8 + x^4 + x^3 + x + 1.
pub const AES_MODULUS: u16 = 0x11B;

/// Largest supported prime; keeps every product below 2^62.
pub const MAX_PRIME: u32 = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Prime,
    BinaryExtension,
}

/// Compact identity of a field. Two specs describe the same field iff their
/// ids are equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldId(u64);

struct Gf256Tables {
    mul: Vec<u8>,
    inv: [u8; 256],
}

impl Gf256Tables {
    fn build(modulus: u16) -> Result<Self> {
        let mut mul = vec![0u8; 256 * 256];
        for a in 0..256u16 {
            for b in a..256u16 {
                let p = clmul_reduce(a as u8, b as u8, modulus);
                mul[(a as usize) << 8 | b as usize] = p;
                mul[(b as usize) << 8 | a as usize] = p;
            }
        }
        // An irreducible modulus makes every nonzero element invertible.
        let mut inv = [0u8; 256];
        for a in 1..256usize {
            match (1..256usize).find(|&b| mul[a << 8 | b] == 1) {
                Some(b) => inv[a] = b as u8,
                None => return Err(Error::ReducibleModulus(modulus)),
            }
        }
        Ok(Self { mul, inv })
    }
}

/// Carry-less multiply then reduce by `modulus` (degree-8, bit 8 set).
fn clmul_reduce(a: u8, b: u8, modulus: u16) -> u8 {
    let mut acc: u16 = 0;
    for i in 0..8 {
        if (b >> i) & 1 == 1 {
            acc ^= (a as u16) << i;
        }
    }
    for bit in (8..16).rev() {
        if (acc >> bit) & 1 == 1 {
            acc ^= modulus << (bit - 8);
        }
    }
    acc as u8
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Arithmetic domain GF(q). Cheap to clone; GF(2^8) tables are shared.
#[derive(Clone)]
pub struct FieldSpec {
    kind: FieldKind,
    q: u32,
    modulus: u16,
    tables: Option<Arc<Gf256Tables>>,
}

impl FieldSpec {
    /// GF(p) for a prime p, verified by trial division.
    pub fn prime(p: u32) -> Result<Self> {
        if !is_prime(p as u64) {
            return Err(Error::NotPrime(p as u64));
        }
        if p >= MAX_PRIME {
            return Err(Error::UnsupportedField(format!("prime {p} exceeds 2^31")));
        }
        Ok(Self { kind: FieldKind::Prime, q: p, modulus: 0, tables: None })
    }

    /// GF(2^8) with the AES polynomial.
    pub fn gf256() -> Self {
        Self::gf256_with_modulus(AES_MODULUS).expect("AES polynomial is irreducible")
    }

    pub fn gf256_with_modulus(modulus: u16) -> Result<Self> {
        if modulus & 0xFF00 != 0x100 {
            return Err(Error::ReducibleModulus(modulus));
        }
        let tables = Gf256Tables::build(modulus)?;
        Ok(Self { kind: FieldKind::BinaryExtension, q: 256, modulus, tables: Some(Arc::new(tables)) })
    }

    /// Field of cardinality `q`: 256 selects GF(2^8) with the AES polynomial,
    /// anything else must be prime.
    pub fn from_q(q: u32) -> Result<Self> {
        if q == 256 {
            Ok(Self::gf256())
        } else if is_prime(q as u64) {
            Self::prime(q)
        } else {
            Err(Error::UnsupportedField(format!("q = {q} is neither prime nor 256")))
        }
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn modulus(&self) -> Option<u16> {
        match self.kind {
            FieldKind::Prime => None,
            FieldKind::BinaryExtension => Some(self.modulus),
        }
    }

    pub fn id(&self) -> FieldId {
        let tag = match self.kind {
            FieldKind::Prime => 0u64,
            FieldKind::BinaryExtension => 1u64,
        };
        FieldId(tag << 63 | (self.modulus as u64) << 32 | self.q as u64)
    }

    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if value >= self.q {
            return Err(Error::OutOfRange { value: value as u64, q: self.q });
        }
        Ok(FieldElement { value, field: self.id() })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { value: 0, field: self.id() }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { value: 1, field: self.id() }
    }

    pub(crate) fn ensure_same(&self, other: &FieldSpec) -> Result<()> {
        if self.id() != other.id() {
            return Err(Error::FieldMismatch { left: self.to_string(), right: other.to_string() });
        }
        Ok(())
    }

    fn check(&self, a: FieldElement) -> Result<u32> {
        if a.field != self.id() {
            return Err(Error::FieldMismatch { left: self.to_string(), right: format!("{:?}", a.field) });
        }
        Ok(a.value)
    }

    fn wrap(&self, value: u32) -> FieldElement {
        FieldElement { value, field: self.id() }
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.wrap(self.add_raw(self.check(a)?, self.check(b)?)))
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.wrap(self.sub_raw(self.check(a)?, self.check(b)?)))
    }

    pub fn neg(&self, a: FieldElement) -> Result<FieldElement> {
        Ok(self.wrap(self.neg_raw(self.check(a)?)))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.wrap(self.mul_raw(self.check(a)?, self.check(b)?)))
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        Ok(self.wrap(self.inv_raw(self.check(a)?)?))
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        let b_inv = self.inv_raw(self.check(b)?)?;
        Ok(self.wrap(self.mul_raw(self.check(a)?, b_inv)))
    }

    #[inline]
    pub fn add_raw(&self, a: u32, b: u32) -> u32 {
        match self.kind {
            FieldKind::Prime => {
                let s = a as u64 + b as u64;
                let q = self.q as u64;
                (if s >= q { s - q } else { s }) as u32
            }
            FieldKind::BinaryExtension => a ^ b,
        }
    }

    #[inline]
    pub fn neg_raw(&self, a: u32) -> u32 {
        match self.kind {
            FieldKind::Prime => {
                if a == 0 {
                    0
                } else {
                    self.q - a
                }
            }
            FieldKind::BinaryExtension => a,
        }
    }

    #[inline]
    pub fn sub_raw(&self, a: u32, b: u32) -> u32 {
        self.add_raw(a, self.neg_raw(b))
    }

    #[inline]
    pub fn mul_raw(&self, a: u32, b: u32) -> u32 {
        match &self.tables {
            None => ((a as u64 * b as u64) % self.q as u64) as u32,
            Some(t) => t.mul[(a as usize) << 8 | b as usize] as u32,
        }
    }

    pub fn inv_raw(&self, a: u32) -> Result<u32> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        match &self.tables {
            Some(t) => Ok(t.inv[a as usize] as u32),
            None => {
                // extended Euclid over i64
                let (mut r0, mut r1) = (self.q as i64, a as i64);
                let (mut t0, mut t1) = (0i64, 1i64);
                while r1 != 0 {
                    let k = r0 / r1;
                    (r0, r1) = (r1, r0 - k * r1);
                    (t0, t1) = (t1, t0 - k * t1);
                }
                Ok(t0.rem_euclid(self.q as i64) as u32)
            }
        }
    }

    #[inline]
    pub fn div_raw(&self, a: u32, b: u32) -> Result<u32> {
        Ok(self.mul_raw(a, self.inv_raw(b)?))
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.id() == other.id()
    }
}

impl Eq for FieldSpec {}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FieldKind::Prime => write!(f, "GF({})", self.q),
            FieldKind::BinaryExtension => write!(f, "GF(2^8)/{:#x}", self.modulus),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    field: FieldId,
}

impl FieldElement {
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn field(&self) -> FieldId {
        self.field
    }
}

/// Dense row-major matrix over a finite field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
    field: FieldSpec,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldMatrix")
            .field("field", &self.field)
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .field("data", &self.data)
            .finish()
    }
}

impl FieldMatrix {
    pub fn new(field: FieldSpec, rows: usize, cols: usize, data: Vec<u32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!("empty {rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!("{} entries for a {rows}x{cols} matrix", data.len())));
        }
        if let Some(&bad) = data.iter().find(|&&v| v >= field.q()) {
            return Err(Error::OutOfRange { value: bad as u64, q: field.q() });
        }
        Ok(Self { rows, cols, data, field })
    }

    pub fn zeros(field: FieldSpec, rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols], field }
    }

    pub fn identity(field: FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows(field: FieldSpec, rows: &[Vec<u32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(field, rows.len(), cols, rows.concat())
    }

    pub(crate) fn from_parts_unchecked(field: FieldSpec, rows: usize, cols: usize, data: Vec<u32>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data, field }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        assert!(v < self.field.q());
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn zero_count(&self) -> usize {
        self.data.iter().filter(|&&v| v == 0).count()
    }

    /// Fraction of zero entries.
    pub fn sparsity(&self) -> f64 {
        self.zero_count() as f64 / self.data.len() as f64
    }

    fn ensure_same_shape(&self, other: &Self, op: &str) -> Result<()> {
        self.field.ensure_same(&other.field)?;
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!("{op}: {:?} vs {:?}", self.dims(), other.dims())));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.ensure_same_shape(other, "add")?;
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.add_raw(a, b)).collect();
        Ok(Self::from_parts_unchecked(f.clone(), self.rows, self.cols, data))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.ensure_same_shape(other, "sub")?;
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.sub_raw(a, b)).collect();
        Ok(Self::from_parts_unchecked(f.clone(), self.rows, self.cols, data))
    }

    pub fn scale(&self, c: u32) -> Self {
        let f = &self.field;
        let data = self.data.iter().map(|&a| f.mul_raw(a, c)).collect();
        Self::from_parts_unchecked(f.clone(), self.rows, self.cols, data)
    }

    /// `self + c * other`, entrywise.
    pub fn add_scaled(&self, other: &Self, c: u32) -> Result<Self> {
        self.ensure_same_shape(other, "add_scaled")?;
        let f = &self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.add_raw(a, f.mul_raw(c, b))).collect();
        Ok(Self::from_parts_unchecked(f.clone(), self.rows, self.cols, data))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.field.ensure_same(&other.field)?;
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!("matmul: {:?} x {:?}", self.dims(), other.dims())));
        }
        let f = &self.field;
        let (m, n, l) = (self.rows, self.cols, other.cols);
        let mut out = vec![0u32; m * l];
        for i in 0..m {
            let acc = &mut out[i * l..(i + 1) * l];
            for j in 0..n {
                let a = self.data[i * n + j];
                if a == 0 {
                    continue;
                }
                let brow = &other.data[j * l..(j + 1) * l];
                for (c, &b) in acc.iter_mut().zip(brow) {
                    *c = f.add_raw(*c, f.mul_raw(a, b));
                }
            }
        }
        Ok(Self::from_parts_unchecked(f.clone(), m, l, out))
    }

    /// Split into `parts` equal row blocks.
    pub fn row_blocks(&self, parts: usize) -> Result<Vec<Self>> {
        if parts == 0 || !self.rows.is_multiple_of(parts) {
            return Err(Error::Divisibility(format!("{parts} must divide row count {}", self.rows)));
        }
        let h = self.rows / parts;
        Ok((0..parts)
            .map(|p| {
                let data = self.data[p * h * self.cols..(p + 1) * h * self.cols].to_vec();
                Self::from_parts_unchecked(self.field.clone(), h, self.cols, data)
            })
            .collect())
    }

    /// Split into `parts` equal column blocks.
    pub fn col_blocks(&self, parts: usize) -> Result<Vec<Self>> {
        if parts == 0 || !self.cols.is_multiple_of(parts) {
            return Err(Error::Divisibility(format!("{parts} must divide column count {}", self.cols)));
        }
        let w = self.cols / parts;
        Ok((0..parts)
            .map(|p| {
                let mut data = Vec::with_capacity(self.rows * w);
                for r in 0..self.rows {
                    data.extend_from_slice(&self.row(r)[p * w..(p + 1) * w]);
                }
                Self::from_parts_unchecked(self.field.clone(), self.rows, w, data)
            })
            .collect())
    }

    /// Stack blocks vertically.
    pub fn vstack(blocks: &[Self]) -> Result<Self> {
        let first = blocks.first().ok_or_else(|| Error::DimensionMismatch("vstack of nothing".into()))?;
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            first.field.ensure_same(&b.field)?;
            if b.cols != first.cols {
                return Err(Error::DimensionMismatch("vstack: column counts differ".into()));
            }
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        Ok(Self::from_parts_unchecked(first.field.clone(), rows, first.cols, data))
    }

    /// Serialize as `q <q> rows <m> cols <n>` followed by one line per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("q {} rows {} cols {}\n", self.field.q(), self.rows, self.cols);
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(u32::to_string).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let (q, rows, cols) = parse_matrix_header(header, hline + 1)?;
        let field = FieldSpec::from_q(q)?;
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (ln, line) = lines
                .next()
                .ok_or(Error::Parse { line: hline + 2 + r, msg: format!("expected {rows} rows, found {r}") })?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: u64 =
                    tok.parse().map_err(|_| Error::Parse { line: ln + 1, msg: format!("not an integer: {tok:?}") })?;
                if v >= q as u64 {
                    return Err(Error::Parse { line: ln + 1, msg: format!("entry {v} out of range [0, {q})") });
                }
                data.push(v as u32);
            }
            if data.len() - before != cols {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: format!("expected {cols} entries, found {}", data.len() - before),
                });
            }
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::Parse { line: ln + 1, msg: "trailing data after matrix".into() });
        }
        Self::new(field, rows, cols, data)
    }
}

pub(crate) fn parse_matrix_header(header: &str, line: usize) -> Result<(u32, usize, usize)> {
    let toks: Vec<&str> = header.split_whitespace().collect();
    let bad = || Error::Parse { line, msg: format!("expected `q <q> rows <m> cols <n>`, got {header:?}") };
    if toks.len() != 6 || toks[0] != "q" || toks[2] != "rows" || toks[4] != "cols" {
        return Err(bad());
    }
    let q = toks[1].parse().map_err(|_| bad())?;
    let rows = toks[3].parse().map_err(|_| bad())?;
    let cols = toks[5].parse().map_err(|_| bad())?;
    Ok((q, rows, cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gf(q: u32) -> FieldSpec {
        FieldSpec::from_q(q).unwrap()
    }

    #[test]
    fn add_examples() {
        let f = gf(89);
        assert_eq!(f.add(f.element(88).unwrap(), f.one()).unwrap().value(), 0);
        let g = FieldSpec::gf256();
        let x = g.element(0x53).unwrap();
        assert_eq!(g.add(x, x).unwrap().value(), 0);
        let h = gf(5081);
        let y = h.element(5080).unwrap();
        assert_eq!(h.add(y, y).unwrap().value(), 5079);
    }

    #[test]
    fn mul_examples() {
        let f = gf(89);
        for x in 0..89 {
            assert_eq!(f.mul(f.one(), f.element(x).unwrap()).unwrap().value(), x);
        }
        assert_eq!(f.mul_raw(30, 3), 1);
        let g = FieldSpec::gf256();
        assert_eq!(g.mul_raw(0x53, 0xCA), 0x01);
    }

    #[test]
    fn inv_examples() {
        let f = gf(89);
        assert_eq!(f.inv(f.one()).unwrap().value(), 1);
        assert_eq!(f.inv_raw(3).unwrap(), 30);
        assert!(matches!(f.inv(f.zero()), Err(Error::ZeroInverse)));
        assert_eq!(FieldSpec::gf256().inv_raw(0x53).unwrap(), 0xCA);
    }

    #[test]
    fn field_mismatch_rejected() {
        let f = gf(89);
        let g = gf(5081);
        assert!(matches!(f.add(f.one(), g.one()), Err(Error::FieldMismatch { .. })));
        let a = FieldMatrix::identity(f, 2);
        let b = FieldMatrix::identity(g, 2);
        assert!(a.matmul(&b).is_err());
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(FieldSpec::prime(91), Err(Error::NotPrime(91))));
        assert!(FieldSpec::from_q(100).is_err());
        // x^8 + 1 = (x + 1)^8 over GF(2)
        assert!(matches!(FieldSpec::gf256_with_modulus(0x101), Err(Error::ReducibleModulus(_))));
        assert!(FieldSpec::gf256_with_modulus(0x11D).is_ok());
        assert!(f_element_out_of_range());
    }

    fn f_element_out_of_range() -> bool {
        gf(7).element(7).is_err()
    }

    #[test]
    fn gf256_table_matches_repeated_addition() {
        let g = FieldSpec::gf256();
        // a * b as the sum of a * x^i over the set bits of b, where a * x is
        // computed by shift-and-conditional-xor (the repeated-doubling definition).
        let xtime = |v: u32| {
            let s = v << 1;
            if s & 0x100 != 0 {
                s ^ AES_MODULUS as u32
            } else {
                s
            }
        };
        for a in 0..256u32 {
            let mut pow = [0u32; 8];
            pow[0] = a;
            for i in 1..8 {
                pow[i] = xtime(pow[i - 1]);
            }
            for b in 0..256u32 {
                let expect = (0..8).filter(|i| (b >> i) & 1 == 1).fold(0, |acc, i| acc ^ pow[i]);
                assert_eq!(g.mul_raw(a, b), expect, "{a} * {b}");
            }
        }
    }

    #[test]
    fn matmul_examples() {
        let f = gf(89);
        let a = FieldMatrix::from_rows(f.clone(), &[vec![1, 2], vec![3, 4]]).unwrap();
        let b = FieldMatrix::from_rows(f.clone(), &[vec![5, 6], vec![7, 8]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.data(), &[19, 22, 43, 50]);
        assert_eq!(FieldMatrix::identity(f.clone(), 2).matmul(&b).unwrap(), b);
        let z = FieldMatrix::zeros(f.clone(), 2, 2);
        assert_eq!(z.matmul(&b).unwrap(), z);
        let wide = FieldMatrix::zeros(f, 3, 3);
        assert!(matches!(a.matmul(&wide), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn blocks_roundtrip() {
        let f = gf(7);
        let m = FieldMatrix::new(f, 4, 6, (0..24).map(|v| v % 7).collect()).unwrap();
        let rb = m.row_blocks(2).unwrap();
        assert_eq!(FieldMatrix::vstack(&rb).unwrap(), m);
        let cb = m.col_blocks(3).unwrap();
        assert_eq!(cb[1].row(0), &[2, 3]);
        assert!(m.row_blocks(3).is_err());
    }

    #[test]
    fn text_format() {
        let f = gf(89);
        let m = FieldMatrix::from_rows(f, &[vec![0, 88, 3], vec![4, 0, 0]]).unwrap();
        let t = m.to_text();
        assert_eq!(t, "q 89 rows 2 cols 3\n0 88 3\n4 0 0\n");
        assert_eq!(FieldMatrix::from_text(&t).unwrap(), m);
        assert!(FieldMatrix::from_text("q 89 rows 1 cols 2\n0 89\n").is_err());
        assert!(FieldMatrix::from_text("q 89 rows 2 cols 2\n0 1\n").is_err());
        assert!(FieldMatrix::from_text("q 89 rows 1 cols 2\n0 1 2\n").is_err());
        assert!(FieldMatrix::from_text("rows 1 cols 2\n0 1\n").is_err());
        let g = FieldMatrix::from_text("q 256 rows 1 cols 2\n255 17\n").unwrap();
        assert_eq!(g.field().kind(), FieldKind::BinaryExtension);
    }

    fn field_strategy() -> impl Strategy<Value = u32> {
        prop_oneof![Just(5u32), Just(89), Just(256), Just(5081)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn field_axioms(q in field_strategy(), a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
            let f = FieldSpec::from_q(q).unwrap();
            let (a, b, c) = (a % q, b % q, c % q);
            prop_assert_eq!(f.add_raw(f.add_raw(a, b), c), f.add_raw(a, f.add_raw(b, c)));
            prop_assert_eq!(
                f.mul_raw(a, f.add_raw(b, c)),
                f.add_raw(f.mul_raw(a, b), f.mul_raw(a, c))
            );
            prop_assert_eq!(f.sub_raw(f.add_raw(a, b), b), a);
            if a != 0 {
                prop_assert_eq!(f.mul_raw(a, f.inv_raw(a).unwrap()), 1);
            }
        }
    }
}
