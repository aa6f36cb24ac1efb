//! Finite-dimensional C*-algebras presented as direct sums of full matrix
//! blocks `M_{n_1}(C) ⊕ … ⊕ M_{n_N}(C)`, their elements as block-diagonal
//! complex matrices, and the canonical normalized trace `Tr/K` of the
//! embedding algebra `M_K(C)` with `K = Σ n_j`.

use serde::{Deserialize, Serialize};

use crate::error::{CovError, Result};
use crate::linalg::{cr, frobenius_norm, operator_norm, CMat, C64};

/// Block structure of the algebra: an ordered list of matrix block dimensions.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AlgebraShape {
    block_dims: Vec<usize>,
    total_dim: usize,
}

impl AlgebraShape {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(CovError::InvalidInput("shape needs at least one block".into()));
        }
        if block_dims.contains(&0) {
            return Err(CovError::InvalidInput("block dimensions must be positive".into()));
        }
        let total_dim = block_dims.iter().sum();
        Ok(AlgebraShape { block_dims, total_dim })
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// `K`, the dimension of the embedding space.
    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// `Σ n_j²`, the complex dimension of the algebra itself.
    pub fn algebra_dim(&self) -> usize {
        self.block_dims.iter().map(|&n| n * n).sum()
    }

    /// Row/column offset of block `j` inside the `K×K` embedding.
    pub fn block_offset(&self, j: usize) -> usize {
        self.block_dims[..j].iter().sum()
    }

    /// Shape of the direct sum algebra `self ⊕ other`.
    pub fn concat(&self, other: &AlgebraShape) -> AlgebraShape {
        let mut dims = self.block_dims.clone();
        dims.extend_from_slice(&other.block_dims);
        AlgebraShape { total_dim: self.total_dim + other.total_dim, block_dims: dims }
    }

    /// Parse a comma-separated block list, e.g. `"1,2"`.
    pub fn parse(s: &str) -> Result<Self> {
        let dims = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| CovError::InvalidInput(format!("bad block dimension '{t}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        AlgebraShape::new(dims)
    }
}

impl std::fmt::Display for AlgebraShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.block_dims.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// An element of the algebra: one dense complex matrix per block.
#[derive(Clone, PartialEq, Debug)]
pub struct AlgebraElement {
    shape: AlgebraShape,
    blocks: Vec<CMat>,
}

impl AlgebraElement {
    pub fn from_blocks(shape: AlgebraShape, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != shape.num_blocks() {
            return Err(CovError::ShapeMismatch(format!(
                "expected {} blocks, got {}",
                shape.num_blocks(),
                blocks.len()
            )));
        }
        for (j, (b, &n)) in blocks.iter().zip(shape.block_dims()).enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(CovError::ShapeMismatch(format!(
                    "block {j} is {}x{}, expected {n}x{n}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(AlgebraElement { shape, blocks })
    }

    pub fn zero(shape: &AlgebraShape) -> Self {
        let blocks = shape.block_dims().iter().map(|&n| CMat::zeros(n, n)).collect();
        AlgebraElement { shape: shape.clone(), blocks }
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        let blocks = shape.block_dims().iter().map(|&n| CMat::identity(n, n)).collect();
        AlgebraElement { shape: shape.clone(), blocks }
    }

    /// The matrix unit `e_{rs}` of block `j` (zero elsewhere).
    pub fn matrix_unit(shape: &AlgebraShape, block: usize, r: usize, s: usize) -> Result<Self> {
        let n = *shape
            .block_dims()
            .get(block)
            .ok_or_else(|| CovError::InvalidInput(format!("no block {block}")))?;
        if r >= n || s >= n {
            return Err(CovError::InvalidInput(format!(
                "unit index ({r},{s}) outside block of size {n}"
            )));
        }
        let mut e = AlgebraElement::zero(shape);
        e.blocks[block][(r, s)] = cr(1.0);
        Ok(e)
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }

    pub fn block(&self, j: usize) -> &CMat {
        &self.blocks[j]
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block_mut(&mut self, j: usize) -> &mut CMat {
        &mut self.blocks[j]
    }

    /// Blockwise product. Errors when the shapes differ.
    pub fn try_mul(&self, rhs: &AlgebraElement) -> Result<AlgebraElement> {
        if self.shape != rhs.shape {
            return Err(CovError::ShapeMismatch(format!(
                "cannot multiply elements of shapes [{}] and [{}]",
                self.shape, rhs.shape
            )));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&rhs.blocks)
            .map(|(a, b)| a * b)
            .collect();
        Ok(AlgebraElement { shape: self.shape.clone(), blocks })
    }

    pub fn try_add(&self, rhs: &AlgebraElement) -> Result<AlgebraElement> {
        if self.shape != rhs.shape {
            return Err(CovError::ShapeMismatch(format!(
                "cannot add elements of shapes [{}] and [{}]",
                self.shape, rhs.shape
            )));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(&rhs.blocks)
            .map(|(a, b)| a + b)
            .collect();
        Ok(AlgebraElement { shape: self.shape.clone(), blocks })
    }

    pub fn try_sub(&self, rhs: &AlgebraElement) -> Result<AlgebraElement> {
        self.try_add(&rhs.scale(cr(-1.0)))
    }

    /// Blockwise conjugate transpose.
    pub fn adjoint(&self) -> AlgebraElement {
        let blocks = self.blocks.iter().map(|b| b.adjoint()).collect();
        AlgebraElement { shape: self.shape.clone(), blocks }
    }

    pub fn scale(&self, z: C64) -> AlgebraElement {
        let blocks = self.blocks.iter().map(|b| b * z).collect();
        AlgebraElement { shape: self.shape.clone(), blocks }
    }

    /// The block-diagonal `K×K` embedding.
    pub fn embed(&self) -> CMat {
        let k = self.shape.total_dim();
        let mut m = CMat::zeros(k, k);
        for (j, b) in self.blocks.iter().enumerate() {
            let off = self.shape.block_offset(j);
            let n = b.nrows();
            m.view_mut((off, off), (n, n)).copy_from(b);
        }
        m
    }

    /// Extract the diagonal blocks of a `K×K` matrix, discarding off-block entries.
    pub fn from_embedded(shape: &AlgebraShape, m: &CMat) -> Result<Self> {
        let k = shape.total_dim();
        if m.nrows() != k || m.ncols() != k {
            return Err(CovError::ShapeMismatch(format!(
                "embedded matrix is {}x{}, expected {k}x{k}",
                m.nrows(),
                m.ncols()
            )));
        }
        let blocks = (0..shape.num_blocks())
            .map(|j| {
                let off = shape.block_offset(j);
                let n = shape.block_dims()[j];
                m.view((off, off), (n, n)).into_owned()
            })
            .collect();
        Ok(AlgebraElement { shape: shape.clone(), blocks })
    }

    /// The canonical normalized trace `(1/K) Σ_j Tr(a_j)`.
    pub fn trace(&self) -> C64 {
        let sum: C64 = self
            .blocks
            .iter()
            .map(|b| (0..b.nrows()).map(|i| b[(i, i)]).sum::<C64>())
            .sum();
        sum / cr(self.shape.total_dim() as f64)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| frobenius_norm(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Operator norm; the embedding is block diagonal so this is the blockwise max.
    pub fn operator_norm(&self) -> f64 {
        self.blocks.iter().map(operator_norm).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.blocks
            .iter()
            .all(|b| frobenius_norm(&(b - b.adjoint())) <= tol * (1.0 + frobenius_norm(b)))
    }

    pub fn hermitian_part(&self) -> AlgebraElement {
        let blocks = self.blocks.iter().map(|b| (b + b.adjoint()) * cr(0.5)).collect();
        AlgebraElement { shape: self.shape.clone(), blocks }
    }

    pub fn commutator_norm(&self, rhs: &AlgebraElement) -> Result<f64> {
        let ab = self.try_mul(rhs)?;
        let ba = rhs.try_mul(self)?;
        Ok(ab.try_sub(&ba)?.frobenius_norm())
    }

    /// Direct sum `a ⊕ b` on the concatenated shape.
    pub fn direct_sum(&self, rhs: &AlgebraElement) -> AlgebraElement {
        let shape = self.shape.concat(&rhs.shape);
        let mut blocks = self.blocks.clone();
        blocks.extend(rhs.blocks.iter().cloned());
        AlgebraElement { shape, blocks }
    }
}

/// The canonical faithful tracial state `τ = Tr/K` on the embedding algebra.
#[derive(Clone, Debug)]
pub struct CanonicalTrace {
    shape: AlgebraShape,
}

impl CanonicalTrace {
    pub fn new(shape: AlgebraShape) -> Self {
        CanonicalTrace { shape }
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }

    pub fn normalization(&self) -> f64 {
        1.0 / self.shape.total_dim() as f64
    }

    pub fn eval(&self, a: &AlgebraElement) -> Result<C64> {
        if a.shape() != &self.shape {
            return Err(CovError::ShapeMismatch("trace applied to foreign element".into()));
        }
        Ok(a.trace())
    }
}

#[derive(Serialize, Deserialize)]
struct ElementJson {
    shape: Vec<usize>,
    /// Row-major `[re, im]` pairs, one flat list per block.
    blocks: Vec<Vec<[f64; 2]>>,
}

impl Serialize for AlgebraElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let n = b.nrows();
                let mut flat = Vec::with_capacity(n * n);
                for r in 0..n {
                    for c in 0..n {
                        let z = b[(r, c)];
                        flat.push([z.re, z.im]);
                    }
                }
                flat
            })
            .collect();
        ElementJson { shape: self.shape.block_dims().to_vec(), blocks }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlgebraElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ElementJson::deserialize(d)?;
        let shape = AlgebraShape::new(raw.shape).map_err(serde::de::Error::custom)?;
        if raw.blocks.len() != shape.num_blocks() {
            return Err(serde::de::Error::custom("block count does not match shape"));
        }
        let mut blocks = Vec::with_capacity(raw.blocks.len());
        for (j, flat) in raw.blocks.iter().enumerate() {
            let n = shape.block_dims()[j];
            if flat.len() != n * n {
                return Err(serde::de::Error::custom(format!(
                    "block {j} has {} entries, expected {}",
                    flat.len(),
                    n * n
                )));
            }
            let mut m = CMat::zeros(n, n);
            for r in 0..n {
                for c in 0..n {
                    let [re, im] = flat[r * n + c];
                    m[(r, c)] = C64::new(re, im);
                }
            }
            blocks.push(m);
        }
        Ok(AlgebraElement { shape, blocks })
    }
}

impl std::ops::Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.try_add(rhs).expect("shape mismatch in +")
    }
}

impl std::ops::Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.try_sub(rhs).expect("shape mismatch in -")
    }
}

impl std::ops::Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        self.try_mul(rhs).expect("shape mismatch in *")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};

    fn shape(dims: &[usize]) -> AlgebraShape {
        AlgebraShape::new(dims.to_vec()).unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let sh = shape(&[2, 1]);
        let id = AlgebraElement::identity(&sh);
        let a = AlgebraElement::matrix_unit(&sh, 0, 0, 1).unwrap();
        assert_eq!(id.try_mul(&a).unwrap(), a);
        assert_eq!(a.try_mul(&id).unwrap(), a);
    }

    #[test]
    fn scalar_blocks_multiply_componentwise() {
        let sh = shape(&[1, 1]);
        let a = AlgebraElement::from_blocks(
            sh.clone(),
            vec![CMat::from_element(1, 1, cr(1.0)), CMat::from_element(1, 1, cr(2.0))],
        )
        .unwrap();
        let b = AlgebraElement::from_blocks(
            sh,
            vec![CMat::from_element(1, 1, cr(3.0)), CMat::from_element(1, 1, cr(4.0))],
        )
        .unwrap();
        let ab = a.try_mul(&b).unwrap();
        assert_eq!(ab.block(0)[(0, 0)], cr(3.0));
        assert_eq!(ab.block(1)[(0, 0)], cr(8.0));
    }

    #[test]
    fn matrix_units_compose() {
        let sh = shape(&[2]);
        let e12 = AlgebraElement::matrix_unit(&sh, 0, 0, 1).unwrap();
        let e21 = AlgebraElement::matrix_unit(&sh, 0, 1, 0).unwrap();
        let e11 = AlgebraElement::matrix_unit(&sh, 0, 0, 0).unwrap();
        assert_eq!(e12.try_mul(&e21).unwrap(), e11);
    }

    #[test]
    fn mul_shape_mismatch_errors() {
        let a = AlgebraElement::identity(&shape(&[2]));
        let b = AlgebraElement::identity(&shape(&[1, 1]));
        assert!(matches!(a.try_mul(&b), Err(CovError::ShapeMismatch(_))));
    }

    #[test]
    fn adjoint_swaps_units_and_conjugates() {
        let sh = shape(&[2]);
        let e12 = AlgebraElement::matrix_unit(&sh, 0, 0, 1).unwrap();
        let e21 = AlgebraElement::matrix_unit(&sh, 0, 1, 0).unwrap();
        assert_eq!(e12.adjoint(), e21);
        let i_id = AlgebraElement::identity(&sh).scale(C64::new(0.0, 1.0));
        assert_eq!(i_id.adjoint(), AlgebraElement::identity(&sh).scale(C64::new(0.0, -1.0)));
        let h = &e12 + &e21;
        assert_eq!(h.adjoint(), h);
    }

    #[test]
    fn embed_is_block_diagonal_and_multiplicative() {
        let sh = shape(&[1, 1]);
        let a = AlgebraElement::from_blocks(
            sh.clone(),
            vec![CMat::from_element(1, 1, cr(1.0)), CMat::from_element(1, 1, cr(2.0))],
        )
        .unwrap();
        let m = a.embed();
        assert_eq!(m[(0, 0)], cr(1.0));
        assert_eq!(m[(1, 1)], cr(2.0));
        assert_eq!(m[(0, 1)], ZERO);

        let sh2 = shape(&[2, 1]);
        let id = AlgebraElement::identity(&sh2);
        assert_eq!(id.embed(), CMat::identity(3, 3));
    }

    #[test]
    fn embed_of_adjoint_is_adjoint_of_embed() {
        let sh = shape(&[2, 1]);
        let a = AlgebraElement::matrix_unit(&sh, 0, 0, 1)
            .unwrap()
            .scale(C64::new(1.5, -0.25));
        assert_eq!(a.adjoint().embed(), a.embed().adjoint());
    }

    #[test]
    fn normalized_trace_values() {
        let sh = shape(&[2]);
        assert_eq!(AlgebraElement::identity(&sh).trace(), ONE);
        let e11 = AlgebraElement::matrix_unit(&sh, 0, 0, 0).unwrap();
        assert_eq!(e11.trace(), cr(0.5));

        // shape [1,2]: (1, 0_{2x2}) has trace 1/3
        let sh2 = shape(&[1, 2]);
        let a = AlgebraElement::from_blocks(
            sh2,
            vec![CMat::from_element(1, 1, cr(1.0)), CMat::zeros(2, 2)],
        )
        .unwrap();
        assert!((a.trace() - cr(1.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn trace_struct_checks_shape() {
        let tr = CanonicalTrace::new(shape(&[2]));
        assert!((tr.normalization() - 0.5).abs() < 1e-15);
        let foreign = AlgebraElement::identity(&shape(&[3]));
        assert!(tr.eval(&foreign).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let sh = shape(&[2, 1]);
        let mut a = AlgebraElement::zero(&sh);
        a.block_mut(0)[(0, 1)] = C64::new(0.1 + 1e-17, -3.25e-9);
        a.block_mut(1)[(0, 0)] = C64::new(f64::MIN_POSITIVE, 1.0 / 3.0);
        let text = serde_json::to_string(&a).unwrap();
        let back: AlgebraElement = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);
    }
}
