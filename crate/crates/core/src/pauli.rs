//! Weighted sums of Pauli strings with exact phase bookkeeping.
//!
//! Qubit 0 is the leftmost label character and the most significant bit of a
//! computational-basis index, so `XZ` acts as `X ⊗ Z` with `X` on qubit 0.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{DvqeError, Result};

/// Coefficients with magnitude below this are dropped by [`PauliSum::simplify`].
pub const DROP_TOLERANCE: f64 = 1e-12;

/// Largest register for which [`PauliSum::to_dense`] will allocate.
pub const MAX_DENSE_QUBITS: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Product `self · other` as `(i^quarter_turns, pauli)`.
    pub fn mul(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, X) => (3, Z),
            (Y, Z) => (1, X),
            (Z, Y) => (3, X),
            (Z, X) => (1, Y),
            (X, Z) => (3, Y),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// 2×2 matrix in the computational basis.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

fn quarter_phase(turns: u8) -> Complex64 {
    match turns % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Tensor product of single-qubit Paulis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    labels: Vec<Pauli>,
}

impl PauliString {
    pub fn new(labels: Vec<Pauli>) -> Self {
        Self { labels }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            labels: vec![Pauli::I; n],
        }
    }

    /// `p` on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut s = Self::identity(n);
        s.labels[q] = p;
        s
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Pauli] {
        &self.labels
    }

    pub fn is_identity(&self) -> bool {
        self.labels.iter().all(|&p| p == Pauli::I)
    }

    /// Qubits carrying a non-identity label.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&q| self.labels[q] != Pauli::I)
            .collect()
    }

    pub fn count(&self, p: Pauli) -> usize {
        self.labels.iter().filter(|&&l| l == p).count()
    }

    /// Bit masks over basis indices (qubit `q` ↦ bit `n−1−q`): flipped bits and
    /// bits contributing a `(−1)^b` sign. `Y = iXZ` appears in both.
    pub fn masks(&self) -> (u64, u64) {
        let n = self.n();
        let mut x = 0u64;
        let mut z = 0u64;
        for (q, &p) in self.labels.iter().enumerate() {
            let bit = 1u64 << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit
                }
                Pauli::Z => z |= bit,
            }
        }
        (x, z)
    }

    /// `self · other = phase · out`.
    pub fn multiply(&self, other: &PauliString) -> Result<(Complex64, PauliString)> {
        if self.n() != other.n() {
            return Err(DvqeError::dim(self.n(), other.n()));
        }
        let mut turns = 0u8;
        let labels = self
            .labels
            .iter()
            .zip(&other.labels)
            .map(|(&a, &b)| {
                let (t, p) = a.mul(b);
                turns = (turns + t) % 4;
                p
            })
            .collect();
        Ok((quarter_phase(turns), PauliString { labels }))
    }

    /// Sign `s` with `Pᵀ = s·P`; only `Y` is antisymmetric.
    pub fn transpose_sign(&self) -> f64 {
        if self.count(Pauli::Y) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn tensor(&self, other: &PauliString) -> PauliString {
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        PauliString { labels }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.labels {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = DvqeError;

    fn from_str(s: &str) -> Result<Self> {
        let labels = s
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| DvqeError::Parse(format!("bad Pauli label {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if labels.is_empty() {
            return Err(DvqeError::Parse("empty Pauli string".into()));
        }
        Ok(PauliString { labels })
    }
}

/// Complex-weighted sum of Pauli strings on `n` qubits, kept simplified:
/// one term per string, sorted by label, no coefficient below [`DROP_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<(Complex64, PauliString)>,
}

impl PauliSum {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            terms: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_string(Complex64::new(1.0, 0.0), PauliString::identity(n))
    }

    pub fn from_string(c: Complex64, s: PauliString) -> Self {
        let n = s.n();
        Self::from_terms(n, vec![(c, s)]).expect("single term has consistent size")
    }

    /// `c · p_q` on an `n`-qubit register.
    pub fn single(n: usize, q: usize, p: Pauli, c: Complex64) -> Self {
        Self::from_string(c, PauliString::single(n, q, p))
    }

    pub fn from_terms(n: usize, terms: Vec<(Complex64, PauliString)>) -> Result<Self> {
        if let Some((_, s)) = terms.iter().find(|(_, s)| s.n() != n) {
            return Err(DvqeError::dim(n, s.n()));
        }
        Ok(Self { n, terms }.simplify())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Complex64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Merge duplicate strings, drop negligible coefficients, sort by label.
    pub fn simplify(self) -> Self {
        let mut acc: HashMap<PauliString, Complex64> = HashMap::with_capacity(self.terms.len());
        for (c, s) in self.terms {
            *acc.entry(s).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        let mut terms: Vec<_> = acc
            .into_iter()
            .filter(|(_, c)| c.norm() >= DROP_TOLERANCE)
            .map(|(s, c)| (c, s))
            .collect();
        terms.sort_by(|a, b| a.1.cmp(&b.1));
        Self { n: self.n, terms }
    }

    pub fn coefficient(&self, s: &PauliString) -> Complex64 {
        self.terms
            .binary_search_by(|(_, t)| t.cmp(s))
            .map(|i| self.terms[i].0)
            .unwrap_or_default()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(a, s)| (a * c, s.clone())).collect(),
        }
        .simplify()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(c, s)| (c.conj(), s.clone())).collect(),
        }
    }

    /// Entrywise complex conjugate. `Y* = −Y`, so strings with an odd number of
    /// `Y` labels pick up a sign besides the conjugated coefficient.
    pub fn conjugate(&self) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(c, s)| (c.conj() * s.transpose_sign(), s.clone()))
                .collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(c, s)| (c * s.transpose_sign(), s.clone()))
                .collect(),
        }
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &PauliSum) -> Result<PauliSum> {
        if self.n != other.n {
            return Err(DvqeError::dim(self.n, other.n));
        }
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for (a, sa) in &self.terms {
            for (b, sb) in &other.terms {
                let (phase, s) = sa.multiply(sb)?;
                terms.push((a * b * phase, s));
            }
        }
        Ok(Self { n: self.n, terms }.simplify())
    }

    /// `self ⊗ other`, with `self` on the leading qubits.
    pub fn tensor(&self, other: &PauliSum) -> PauliSum {
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for (a, sa) in &self.terms {
            for (b, sb) in &other.terms {
                terms.push((a * b, sa.tensor(sb)));
            }
        }
        Self {
            n: self.n + other.n,
            terms,
        }
        .simplify()
    }

    /// `A ⊗ Bᵀ` on `2N` qubits: the vectorized form of `ρ ↦ AρB`, with the
    /// physical register on qubits `0..N` and the ancillary one on `N..2N`.
    pub fn embed_left_right(a: &PauliSum, b: &PauliSum) -> Result<PauliSum> {
        if a.n != b.n {
            return Err(DvqeError::dim(a.n, b.n));
        }
        Ok(a.tensor(&b.transpose()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(c, _)| c.im.abs() <= tol)
    }

    /// Drop imaginary parts after checking they are below `tol`.
    pub fn into_hermitian(self, tol: f64) -> Result<PauliSum> {
        if !self.is_hermitian(tol) {
            return Err(DvqeError::arg("operator is not Hermitian"));
        }
        Ok(Self {
            n: self.n,
            terms: self
                .terms
                .into_iter()
                .map(|(c, s)| (Complex64::new(c.re, 0.0), s))
                .collect(),
        }
        .simplify())
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(DvqeError::Capacity {
                what: "dense Pauli sum",
                limit: MAX_DENSE_QUBITS,
                requested: self.n,
            });
        }
        let dim = 1usize << self.n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (c, s) in &self.terms {
            let (x, z) = s.masks();
            let base = c * quarter_phase((s.count(Pauli::Y) % 4) as u8);
            for col in 0..dim {
                let sign = if (col as u64 & z).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                let row = (col as u64 ^ x) as usize;
                m[(row, col)] += base * sign;
            }
        }
        Ok(m)
    }

    /// Pauli-basis decomposition `Σ_P Tr(P M)/2^n · P` of a dense matrix.
    pub fn from_dense(m: &DMatrix<Complex64>) -> Result<PauliSum> {
        let dim = m.nrows();
        if dim != m.ncols() || !dim.is_power_of_two() || dim == 0 {
            return Err(DvqeError::arg("matrix must be square with power-of-two size"));
        }
        let n = dim.trailing_zeros() as usize;
        if n > 7 {
            return Err(DvqeError::Capacity {
                what: "dense Pauli decomposition",
                limit: 7,
                requested: n,
            });
        }
        let all = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
        let mut terms = Vec::new();
        for code in 0..(1usize << (2 * n)) {
            let labels = (0..n)
                .map(|q| all[(code >> (2 * (n - 1 - q))) & 3])
                .collect::<Vec<_>>();
            let s = PauliString::new(labels);
            let (x, z) = s.masks();
            let phase = quarter_phase((s.count(Pauli::Y) % 4) as u8);
            // Tr(P M) = Σ_col P[col^x, col] · M[col, col^x]
            let mut tr = Complex64::new(0.0, 0.0);
            for col in 0..dim {
                let sign = if (col as u64 & z).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                let row = (col as u64 ^ x) as usize;
                tr += phase * sign * m[(col, row)];
            }
            terms.push((tr / dim as f64, s));
        }
        PauliSum::from_terms(n, terms)
    }

    /// One term per line as `(<re>,<im>) <labels>`.
    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return format!("(0,0) {}\n", PauliString::identity(self.n));
        }
        let mut out = String::new();
        for (c, s) in &self.terms {
            out.push_str(&format!("({},{}) {}\n", c.re, c.im, s));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<PauliSum> {
        let mut terms = Vec::new();
        let mut n = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || DvqeError::Parse(format!("line {}: cannot parse {raw:?}", lineno + 1));
            let rest = line.strip_prefix('(').ok_or_else(bad)?;
            let (coef, label) = rest.split_once(')').ok_or_else(bad)?;
            let (re, im) = coef.split_once(',').ok_or_else(bad)?;
            let re: f64 = re.trim().parse().map_err(|_| bad())?;
            let im: f64 = im.trim().parse().map_err(|_| bad())?;
            let s: PauliString = label.trim().parse()?;
            match n {
                None => n = Some(s.n()),
                Some(k) if k != s.n() => return Err(DvqeError::dim(k, s.n())),
                _ => {}
            }
            terms.push((Complex64::new(re, im), s));
        }
        let n = n.ok_or_else(|| DvqeError::Parse("no terms".into()))?;
        PauliSum::from_terms(n, terms)
    }

    fn merged(mut self, other: &PauliSum, sign: f64) -> PauliSum {
        assert_eq!(self.n, other.n, "Pauli sums act on different registers");
        self.terms
            .extend(other.terms.iter().map(|(c, s)| (c * sign, s.clone())));
        self.simplify()
    }
}

impl Add<&PauliSum> for PauliSum {
    type Output = PauliSum;
    fn add(self, rhs: &PauliSum) -> PauliSum {
        self.merged(rhs, 1.0)
    }
}

impl Add for PauliSum {
    type Output = PauliSum;
    fn add(self, rhs: PauliSum) -> PauliSum {
        self.merged(&rhs, 1.0)
    }
}

impl Sub<&PauliSum> for PauliSum {
    type Output = PauliSum;
    fn sub(self, rhs: &PauliSum) -> PauliSum {
        self.merged(rhs, -1.0)
    }
}

impl Sub for PauliSum {
    type Output = PauliSum;
    fn sub(self, rhs: PauliSum) -> PauliSum {
        self.merged(&rhs, -1.0)
    }
}

impl Mul<Complex64> for PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: Complex64) -> PauliSum {
        self.scale(rhs)
    }
}

impl Mul<f64> for PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: f64) -> PauliSum {
        self.scale(Complex64::new(rhs, 0.0))
    }
}

impl Neg for PauliSum {
    type Output = PauliSum;
    fn neg(self) -> PauliSum {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn sum(terms: &[(Complex64, &str)]) -> PauliSum {
        let n = terms[0].1.len();
        PauliSum::from_terms(n, terms.iter().map(|(c, s)| (*c, ps(s))).collect()).unwrap()
    }

    fn max_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn single_qubit_products() {
        assert_eq!(ps("X").multiply(&ps("Y")).unwrap(), (c(0.0, 1.0), ps("Z")));
        assert_eq!(ps("IZ").multiply(&ps("XZ")).unwrap(), (c(1.0, 0.0), ps("XI")));
    }

    #[test]
    fn two_qubit_product_matches_dense() {
        let (phase, out) = ps("YX").multiply(&ps("ZZ")).unwrap();
        assert_eq!(out, ps("XY"));
        assert_eq!(phase, c(1.0, 0.0));
        let a = PauliSum::from_string(c(1.0, 0.0), ps("YX")).to_dense().unwrap();
        let b = PauliSum::from_string(c(1.0, 0.0), ps("ZZ")).to_dense().unwrap();
        let prod = PauliSum::from_string(phase, out).to_dense().unwrap();
        assert!(max_diff(&(a * b), &prod) < 1e-15);
    }

    #[test]
    fn multiply_size_mismatch() {
        assert!(matches!(
            ps("X").multiply(&ps("XX")),
            Err(DvqeError::Dimension { .. })
        ));
    }

    #[test]
    fn adjoint_conjugates_coefficients() {
        let s = sum(&[(c(2.0, 1.0), "X")]);
        assert_eq!(s.adjoint(), sum(&[(c(2.0, -1.0), "X")]));
        let h = sum(&[(c(0.5, 0.0), "XZ"), (c(-1.0, 0.0), "YY")]);
        assert_eq!(h.adjoint(), h);
        let g = sum(&[(c(0.3, -0.7), "XY"), (c(1.0, 2.0), "ZI")]);
        assert_eq!(g.adjoint().adjoint(), g);
    }

    #[test]
    fn compose_against_dense() {
        let a = sum(&[(c(1.0, 0.0), "X"), (c(1.0, 0.0), "Z")]);
        let b = sum(&[(c(1.0, 0.0), "X"), (c(-1.0, 0.0), "Z")]);
        let ab = a.compose(&b).unwrap();
        let dense = a.to_dense().unwrap() * b.to_dense().unwrap();
        assert!(max_diff(&ab.to_dense().unwrap(), &dense) < 1e-14);
        // (X+Z)(X−Z) = −XZ + ZX = 2·ZX = 2iY
        assert_eq!(ab, sum(&[(c(0.0, 2.0), "Y")]));
        let id = PauliSum::identity(1);
        assert_eq!(a.compose(&id).unwrap(), a);
    }

    #[test]
    fn gram_form_is_psd() {
        let s = sum(&[(c(0.4, 0.2), "XY"), (c(-1.0, 0.5), "ZI"), (c(0.1, 0.0), "YY")]);
        let g = s.adjoint().compose(&s).unwrap();
        assert!(g.is_hermitian(1e-14));
        let eig = g.to_dense().unwrap().symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e >= -1e-10));
    }

    #[test]
    fn embed_examples() {
        let x = PauliSum::single(1, 0, Pauli::X, c(1.0, 0.0));
        let y = PauliSum::single(1, 0, Pauli::Y, c(1.0, 0.0));
        assert_eq!(
            PauliSum::embed_left_right(&x, &y).unwrap(),
            sum(&[(c(-1.0, 0.0), "XY")])
        );
        assert_eq!(
            PauliSum::embed_left_right(&x, &PauliSum::identity(1)).unwrap(),
            sum(&[(c(1.0, 0.0), "XI")])
        );
        assert!(PauliSum::embed_left_right(&x, &PauliSum::identity(2)).is_err());
    }

    #[test]
    fn embed_vec_identity_single_qubit() {
        // vec(ZρZ) = (Z ⊗ Zᵀ) vec(ρ) with row-major flattening.
        let z = PauliSum::single(1, 0, Pauli::Z, c(1.0, 0.0));
        let rho = DMatrix::from_row_slice(2, 2, &[c(0.3, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.7, 0.0)]);
        let zd = z.to_dense().unwrap();
        let lhs = &zd * &rho * &zd;
        let sup = PauliSum::embed_left_right(&z, &z).unwrap().to_dense().unwrap();
        let flat = nalgebra::DVector::from_iterator(4, rho.transpose().iter().copied());
        let rhs = sup * flat;
        let lhs_flat: Vec<_> = lhs.transpose().iter().copied().collect();
        for (a, b) in lhs_flat.iter().zip(rhs.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn dense_examples() {
        let x = PauliSum::single(1, 0, Pauli::X, c(1.0, 0.0)).to_dense().unwrap();
        assert_eq!(x, DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]));
        let proj = sum(&[(c(0.5, 0.0), "I"), (c(0.5, 0.0), "Z")]).to_dense().unwrap();
        assert_eq!(proj, DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]));
        let big = PauliSum::identity(15);
        assert!(matches!(big.to_dense(), Err(DvqeError::Capacity { .. })));
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        // X on qubit 0 of two qubits flips |00⟩ (index 0) to |10⟩ (index 2).
        let m = PauliSum::single(2, 0, Pauli::X, c(1.0, 0.0)).to_dense().unwrap();
        assert_eq!(m[(2, 0)], c(1.0, 0.0));
    }

    #[test]
    fn dense_round_trip() {
        let s = sum(&[(c(0.25, -1.0), "XY"), (c(2.0, 0.0), "IZ"), (c(0.0, 0.5), "YY")]);
        let back = PauliSum::from_dense(&s.to_dense().unwrap()).unwrap();
        for ((a, sa), (b, sb)) in s.terms().iter().zip(back.terms()) {
            assert_eq!(sa, sb);
            assert!((a - b).norm() < 1e-14);
        }
        assert_eq!(s.len(), back.len());
    }

    #[test]
    fn conjugate_matches_dense() {
        let s = sum(&[(c(0.25, -1.0), "XY"), (c(2.0, 0.3), "YZ"), (c(0.0, 0.5), "YY")]);
        let d = s.to_dense().unwrap().map(|z| z.conj());
        assert!(max_diff(&s.conjugate().to_dense().unwrap(), &d) < 1e-15);
        let t = s.to_dense().unwrap().transpose();
        assert!(max_diff(&s.transpose().to_dense().unwrap(), &t) < 1e-15);
    }

    #[test]
    fn text_round_trip() {
        let s = sum(&[(c(0.5, 0.0), "XIZ"), (c(-1.0 / 3.0, 1e-7), "YYI")]);
        let text = s.to_text();
        assert!(text.contains("(0.5,0) XIZ"));
        assert_eq!(PauliSum::from_text(&text).unwrap(), s);
        let z = PauliSum::zero(3);
        assert_eq!(PauliSum::from_text(&z.to_text()).unwrap(), z);
        assert!(PauliSum::from_text("(1,0) XQ").is_err());
        assert!(PauliSum::from_text("(1,0) X\n(1,0) XX").is_err());
    }

    #[test]
    fn simplify_drops_and_merges() {
        let s = PauliSum::from_terms(
            1,
            vec![
                (c(1.0, 0.0), ps("X")),
                (c(-1.0, 0.0), ps("X")),
                (c(1e-13, 0.0), ps("Z")),
                (c(0.5, 0.0), ps("Y")),
                (c(0.5, 0.0), ps("Y")),
            ],
        )
        .unwrap();
        assert_eq!(s, sum(&[(c(1.0, 0.0), "Y")]));
        assert_eq!(s.clone().simplify(), s);
    }

    #[test]
    fn hermitian_check() {
        assert!(sum(&[(c(1.0, 1e-3), "X")]).into_hermitian(1e-10).is_err());
        assert!(sum(&[(c(1.0, 0.0), "X")]).into_hermitian(1e-10).is_ok());
    }
}
