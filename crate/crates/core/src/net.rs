//! The subspace network: a tanh MLP whose last (subspace) layer outputs `M`
//! basis functions `φ_j`, combined linearly as `N = Σ ω_j φ_j`.
//!
//! Spatial derivatives are propagated layer by layer as jets
//! `(value, ∂x, ∂y, ∂xx, ∂xy, ∂yy)`, batched over points so every layer is one
//! matrix product. The reverse pass through that jet computation gives exact
//! parameter gradients of losses built from second spatial derivatives.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::linalg::gemm;

/// Number of jet components.
pub const JET_LEN: usize = 6;

pub const VALUE: usize = 0;
pub const DX: usize = 1;
pub const DY: usize = 2;
pub const DXX: usize = 3;
pub const DXY: usize = 4;
pub const DYY: usize = 5;

/// Value, gradient and (symmetric) Hessian of a scalar field at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl Jet2 {
    pub fn from_components(c: [f64; JET_LEN]) -> Self {
        Self { value: c[VALUE], grad: [c[DX], c[DY]], hess: [[c[DXX], c[DXY]], [c[DXY], c[DYY]]] }
    }

    pub fn components(&self) -> [f64; JET_LEN] {
        [self.value, self.grad[0], self.grad[1], self.hess[0][0], self.hess[0][1], self.hess[1][1]]
    }

    pub fn laplacian(&self) -> f64 {
        self.hess[0][0] + self.hess[1][1]
    }

    /// Derivative along `x/|x|` at the point `x`.
    pub fn radial_derivative(&self, at: Point) -> f64 {
        let r = at[0].hypot(at[1]);
        (at[0] * self.grad[0] + at[1] * self.grad[1]) / r
    }

    pub fn directional_derivative(&self, dir: Point) -> f64 {
        dir[0] * self.grad[0] + dir[1] * self.grad[1]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_components(self.components().map(|v| v * s))
    }

    pub fn add(&self, other: &Jet2) -> Self {
        let a = self.components();
        let b = other.components();
        Self::from_components(std::array::from_fn(|i| a[i] + b[i]))
    }
}

/// Jets of one scalar field at a batch of points, stored component-major:
/// component `c` of point `p` lives at `c * len + p`.
#[derive(Debug, Clone, PartialEq)]
pub struct JetField {
    len: usize,
    data: Vec<f64>,
}

impl JetField {
    pub fn zeros(len: usize) -> Self {
        Self { len, data: vec![0.0; JET_LEN * len] }
    }

    pub fn from_jets(jets: &[Jet2]) -> Self {
        let mut out = Self::zeros(jets.len());
        for (p, j) in jets.iter().enumerate() {
            out.set(p, j);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.len..(c + 1) * self.len]
    }

    pub fn values(&self) -> &[f64] {
        self.component(VALUE)
    }

    pub fn jet(&self, p: usize) -> Jet2 {
        Jet2::from_components(std::array::from_fn(|c| self.data[c * self.len + p]))
    }

    pub fn set(&mut self, p: usize, jet: &Jet2) {
        for (c, v) in jet.components().into_iter().enumerate() {
            self.data[c * self.len + p] = v;
        }
    }

    pub fn jets(&self) -> Vec<Jet2> {
        (0..self.len).map(|p| self.jet(p)).collect()
    }

    /// Copy of the points `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> JetField {
        let mut out = JetField::zeros(len);
        for c in 0..JET_LEN {
            out.component_mut(c).copy_from_slice(&self.component(c)[start..start + len]);
        }
        out
    }

    /// Concatenates fields point-wise, preserving order.
    pub fn concat(parts: &[&JetField]) -> JetField {
        let len = parts.iter().map(|f| f.len).sum();
        let mut out = JetField::zeros(len);
        let mut offset = 0;
        for part in parts {
            for c in 0..JET_LEN {
                out.component_mut(c)[offset..offset + part.len].copy_from_slice(part.component(c));
            }
            offset += part.len;
        }
        out
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

impl Activation {
    fn id(self) -> u32 {
        match self {
            Activation::Tanh => 0,
        }
    }

    fn from_id(id: u32) -> Result<Self> {
        match id {
            0 => Ok(Activation::Tanh),
            other => Err(Error::Snapshot(format!("unknown activation id {other}"))),
        }
    }
}

/// Hidden widths followed by the subspace width `M`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkShape {
    pub hidden: Vec<usize>,
    pub subspace: usize,
}

impl NetworkShape {
    pub fn new(hidden: Vec<usize>, subspace: usize) -> Self {
        Self { hidden, subspace }
    }

    fn widths(&self) -> Vec<usize> {
        let mut w = vec![2];
        w.extend_from_slice(&self.hidden);
        w.push(self.subspace);
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    weights: usize,
    biases: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceNetwork {
    widths: Vec<usize>,
    layers: Vec<Layer>,
    params: Vec<f64>,
    seed: u64,
    activation: Activation,
}

fn layout(widths: &[usize]) -> (Vec<Layer>, usize) {
    let mut offset = 0;
    let layers = widths
        .windows(2)
        .map(|w| {
            let l = Layer { fan_in: w[0], fan_out: w[1], weights: offset, biases: offset + w[0] * w[1] };
            offset += w[0] * w[1] + w[1];
            l
        })
        .collect();
    (layers, offset)
}

impl SubspaceNetwork {
    /// Glorot-uniform weights and fan-in scaled uniform biases, deterministic in `seed`.
    pub fn init(seed: u64, shape: &NetworkShape) -> Result<Self> {
        if shape.subspace == 0 || shape.hidden.contains(&0) {
            return Err(Error::InvalidShape(format!("all widths must be positive, got {shape:?}")));
        }
        let widths = shape.widths();
        let (layers, n_params) = layout(&widths);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = vec![0.0; n_params];
        for l in &layers {
            let limit = (6.0 / (l.fan_in + l.fan_out) as f64).sqrt();
            for w in &mut params[l.weights..l.biases] {
                *w = rng.random_range(-limit..limit);
            }
            let bias_limit = 1.0 / (l.fan_in as f64).sqrt();
            for b in &mut params[l.biases..l.biases + l.fan_out] {
                *b = rng.random_range(-bias_limit..bias_limit);
            }
        }
        Ok(Self { widths, layers, params, seed, activation: Activation::Tanh })
    }

    pub fn shape(&self) -> NetworkShape {
        NetworkShape { hidden: self.widths[1..self.widths.len() - 1].to_vec(), subspace: self.subspace_width() }
    }

    pub fn subspace_width(&self) -> usize {
        *self.widths.last().expect("widths are never empty")
    }

    pub fn depth(&self) -> usize {
        self.widths.len() - 2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Number of entries in θ (weights and biases of every layer, excluding ω).
    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::LengthMismatch { what: "θ", expected: self.params.len(), found: params.len() });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Forward jet propagation at a batch of points; the tape keeps everything
    /// the reverse pass needs.
    pub fn forward(&self, points: &[Point]) -> ForwardTape {
        let mut tape = ForwardTape::default();
        self.forward_into(points, &mut tape);
        tape
    }

    /// As [`forward`](Self::forward), reusing the buffers of `tape`.
    pub fn forward_into(&self, points: &[Point], tape: &mut ForwardTape) {
        let p = points.len();
        let cols = JET_LEN * p;
        tape.points = p;
        tape.outputs.resize_with(self.layers.len() + 1, Vec::new);
        tape.pre.resize_with(self.layers.len(), Vec::new);

        let input = &mut tape.outputs[0];
        input.clear();
        input.resize(2 * cols, 0.0);
        for (q, pt) in points.iter().enumerate() {
            input[q] = pt[0];
            input[cols + q] = pt[1];
        }
        input[DX * p..(DX + 1) * p].fill(1.0);
        input[cols + DY * p..cols + (DY + 1) * p].fill(1.0);

        for (k, layer) in self.layers.iter().enumerate() {
            let (before, after) = tape.outputs.split_at_mut(k + 1);
            let y_in = &before[k];
            let z = &mut tape.pre[k];
            z.resize(layer.fan_out * cols, 0.0);
            let w = &self.params[layer.weights..layer.biases];
            gemm(z, w, y_in, layer.fan_out, layer.fan_in, cols, false, false, false);
            let b = &self.params[layer.biases..layer.biases + layer.fan_out];
            let y_out = &mut after[0];
            y_out.resize(layer.fan_out * cols, 0.0);
            for (unit, (zu, yu)) in z.chunks_exact_mut(cols).zip(y_out.chunks_exact_mut(cols)).enumerate() {
                activate_unit(zu, yu, p, b[unit]);
            }
        }
    }

    /// Jets of every basis function at one point.
    pub fn eval_jets(&self, x: Point) -> Vec<Jet2> {
        let tape = self.forward(&[x]);
        (0..self.subspace_width()).map(|j| tape.basis_jet(j, 0)).collect()
    }

    /// Reverse pass. `adjoint` is `∂L/∂(jets of N = Σ ω_j φ_j)`; the gradient
    /// with respect to θ is accumulated into `grad`, and the gradient with
    /// respect to ω into `grad_omega` when given.
    pub fn backward(
        &self,
        tape: &mut ForwardTape,
        omega: &[f64],
        adjoint: &JetField,
        grad: &mut [f64],
        grad_omega: Option<&mut [f64]>,
    ) {
        let p = tape.points;
        let cols = JET_LEN * p;
        let m = self.subspace_width();
        assert_eq!(omega.len(), m, "ω length");
        assert_eq!(adjoint.len(), p, "adjoint length");
        assert_eq!(grad.len(), self.params.len(), "gradient length");

        if let Some(go) = grad_omega {
            let top = &tape.outputs[self.layers.len()];
            for (j, g) in go.iter_mut().enumerate() {
                *g += top[j * cols..(j + 1) * cols].iter().zip(&adjoint.data).map(|(a, b)| a * b).sum::<f64>();
            }
        }

        let mut ybar = std::mem::take(&mut tape.scratch_y);
        let mut zbar = std::mem::take(&mut tape.scratch_z);
        let n_layers = self.layers.len();
        for k in (0..n_layers).rev() {
            let layer = self.layers[k];
            zbar.resize(layer.fan_out * cols, 0.0);
            let z = &tape.pre[k];
            if k + 1 == n_layers {
                for (unit, (zu, zbu)) in z.chunks_exact(cols).zip(zbar.chunks_exact_mut(cols)).enumerate() {
                    activation_adjoint(zu, zbu, p, |c, q| omega[unit] * adjoint.data[c * p + q]);
                }
            } else {
                for ((zu, zbu), ybu) in z.chunks_exact(cols).zip(zbar.chunks_exact_mut(cols)).zip(ybar.chunks_exact(cols)) {
                    activation_adjoint(zu, zbu, p, |c, q| ybu[c * p + q]);
                }
            }
            let y_in = &tape.outputs[k];
            let gw = &mut grad[layer.weights..layer.biases];
            gemm(gw, &zbar, y_in, layer.fan_out, cols, layer.fan_in, false, true, true);
            let gb = &mut grad[layer.biases..layer.biases + layer.fan_out];
            for (unit, g) in gb.iter_mut().enumerate() {
                *g += zbar[unit * cols..unit * cols + p].iter().sum::<f64>();
            }
            if k > 0 {
                ybar.resize(layer.fan_in * cols, 0.0);
                let w = &self.params[layer.weights..layer.biases];
                gemm(&mut ybar, w, &zbar, layer.fan_in, layer.fan_out, cols, true, false, false);
            }
        }
        tape.scratch_y = ybar;
        tape.scratch_z = zbar;
    }

    /// Value of `loss` at the combined field `N = Σ ω_j φ_j` over `points`,
    /// and its exact gradient with respect to θ.
    pub fn param_gradient<F>(&self, points: &[Point], omega: &[f64], loss: F) -> (f64, Vec<f64>)
    where
        F: FnOnce(&JetField) -> (f64, JetField),
    {
        let mut tape = self.forward(points);
        let field = tape.combine(omega);
        let (value, adjoint) = loss(&field);
        let mut grad = vec![0.0; self.params.len()];
        self.backward(&mut tape, omega, &adjoint, &mut grad, None);
        (value, grad)
    }

    const MAGIC: [u8; 4] = *b"SNNP";
    const VERSION: u32 = 1;

    /// Little-endian snapshot: magic `SNNP`, version, activation id, seed,
    /// layer count and widths (u32), parameter count (u64), parameters (f64).
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&Self::MAGIC)?;
        w.write_all(&Self::VERSION.to_le_bytes())?;
        w.write_all(&self.activation.id().to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.widths.len() as u32).to_le_bytes())?;
        for &width in &self.widths {
            w.write_all(&(width as u32).to_le_bytes())?;
        }
        w.write_all(&(self.params.len() as u64).to_le_bytes())?;
        for v in &self.params {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != Self::MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != Self::VERSION {
            return Err(Error::Snapshot(format!("unsupported version {version}")));
        }
        let activation = Activation::from_id(read_u32(&mut r)?)?;
        let seed = read_u64(&mut r)?;
        let n_widths = read_u32(&mut r)? as usize;
        if !(2..=64).contains(&n_widths) {
            return Err(Error::Snapshot(format!("implausible layer count {n_widths}")));
        }
        let widths = (0..n_widths).map(|_| read_u32(&mut r).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
        if widths[0] != 2 || widths.contains(&0) {
            return Err(Error::Snapshot(format!("invalid widths {widths:?}")));
        }
        let (layers, expected) = layout(&widths);
        let count = read_u64(&mut r)? as usize;
        if count != expected {
            return Err(Error::Snapshot(format!("parameter count {count} does not match widths ({expected})")));
        }
        let mut params = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            params.push(f64::from_le_bytes(buf));
        }
        Ok(Self { widths, layers, params, seed, activation })
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// tanh jet map for one unit. On return `z` holds `tanh(z)` in its value block
/// (the backward pass needs `t`, not `z`) and its derivative blocks unchanged.
#[inline]
fn activate_unit(z: &mut [f64], y: &mut [f64], p: usize, bias: f64) {
    let (z0, zr) = z.split_at_mut(p);
    let (z1, zr) = zr.split_at(p);
    let (z2, zr) = zr.split_at(p);
    let (z3, zr) = zr.split_at(p);
    let (z4, z5) = zr.split_at(p);
    let (y0, yr) = y.split_at_mut(p);
    let (y1, yr) = yr.split_at_mut(p);
    let (y2, yr) = yr.split_at_mut(p);
    let (y3, yr) = yr.split_at_mut(p);
    let (y4, y5) = yr.split_at_mut(p);
    for q in 0..p {
        let t = (z0[q] + bias).tanh();
        let s = 1.0 - t * t;
        let sp = -2.0 * t * s;
        let (a, b) = (z1[q], z2[q]);
        z0[q] = t;
        y0[q] = t;
        y1[q] = s * a;
        y2[q] = s * b;
        y3[q] = s * z3[q] + sp * a * a;
        y4[q] = s * z4[q] + sp * a * b;
        y5[q] = s * z5[q] + sp * b * b;
    }
}

/// Reverse of [`activate_unit`]: writes `∂L/∂z` given `∂L/∂y` through `ybar(c, q)`.
#[inline]
fn activation_adjoint(z: &[f64], zbar: &mut [f64], p: usize, ybar: impl Fn(usize, usize) -> f64) {
    for q in 0..p {
        let t = z[q];
        let (z1, z2, z3, z4, z5) = (z[p + q], z[2 * p + q], z[3 * p + q], z[4 * p + q], z[5 * p + q]);
        let s = 1.0 - t * t;
        let sp = -2.0 * t * s;
        let spp = 2.0 * s * (3.0 * t * t - 1.0);
        let (b0, b1, b2, b3, b4, b5) = (ybar(0, q), ybar(1, q), ybar(2, q), ybar(3, q), ybar(4, q), ybar(5, q));
        zbar[q] = b0 * s
            + sp * (b1 * z1 + b2 * z2 + b3 * z3 + b4 * z4 + b5 * z5)
            + spp * (b3 * z1 * z1 + b4 * z1 * z2 + b5 * z2 * z2);
        zbar[p + q] = b1 * s + sp * (2.0 * b3 * z1 + b4 * z2);
        zbar[2 * p + q] = b2 * s + sp * (2.0 * b5 * z2 + b4 * z1);
        zbar[3 * p + q] = b3 * s;
        zbar[4 * p + q] = b4 * s;
        zbar[5 * p + q] = b5 * s;
    }
}

/// Intermediate jets of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardTape {
    points: usize,
    /// `outputs[k]` holds the jets leaving layer `k` (`outputs[0]` is the input).
    outputs: Vec<Vec<f64>>,
    /// Pre-activation jets per layer, value block replaced by `tanh`.
    pre: Vec<Vec<f64>>,
    scratch_y: Vec<f64>,
    scratch_z: Vec<f64>,
}

impl ForwardTape {
    pub fn points(&self) -> usize {
        self.points
    }

    /// Basis jets, `M` rows of `6 × points` (component-major within a row).
    pub fn basis(&self) -> BasisView<'_> {
        let data = self.outputs.last().map(Vec::as_slice).unwrap_or(&[]);
        let cols = JET_LEN * self.points;
        BasisView { data, points: self.points, width: data.len().checked_div(cols).unwrap_or(0) }
    }

    pub fn basis_jet(&self, j: usize, p: usize) -> Jet2 {
        self.basis().jet(j, p)
    }

    /// Jets of `Σ ω_j φ_j`.
    pub fn combine(&self, omega: &[f64]) -> JetField {
        self.basis().combine(omega)
    }
}

/// Borrowed basis jets of a batch: `width` functions at `points` points.
#[derive(Debug, Clone, Copy)]
pub struct BasisView<'a> {
    data: &'a [f64],
    points: usize,
    width: usize,
}

impl<'a> BasisView<'a> {
    /// Wraps `width` rows of `6 × points` jets laid out as in [`ForwardTape::basis`].
    pub fn new(data: &'a [f64], points: usize, width: usize) -> Result<Self> {
        if data.len() != width * JET_LEN * points {
            return Err(Error::LengthMismatch { what: "basis data", expected: width * JET_LEN * points, found: data.len() });
        }
        Ok(Self { data, points, width })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Component `c` of basis `j` at all points.
    pub fn component(&self, j: usize, c: usize) -> &'a [f64] {
        let cols = JET_LEN * self.points;
        &self.data[j * cols + c * self.points..j * cols + (c + 1) * self.points]
    }

    pub fn jet(&self, j: usize, p: usize) -> Jet2 {
        Jet2::from_components(std::array::from_fn(|c| self.component(j, c)[p]))
    }

    pub fn combine(&self, omega: &[f64]) -> JetField {
        assert_eq!(omega.len(), self.width, "ω length");
        let cols = JET_LEN * self.points;
        let mut out = JetField::zeros(self.points);
        gemm(&mut out.data, omega, self.data, 1, self.width, cols, false, false, false);
        out
    }
}

/// `Σ ω_j jets[j]`.
pub fn combine(jets: &[Jet2], omega: &[f64]) -> Result<Jet2> {
    if jets.len() != omega.len() {
        return Err(Error::LengthMismatch { what: "ω", expected: jets.len(), found: omega.len() });
    }
    let mut acc = [0.0; JET_LEN];
    for (jet, &w) in jets.iter().zip(omega) {
        for (a, v) in acc.iter_mut().zip(jet.components()) {
            *a += w * v;
        }
    }
    Ok(Jet2::from_components(acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SubspaceNetwork {
        SubspaceNetwork::init(7, &NetworkShape::new(vec![5, 4], 3)).unwrap()
    }

    #[test]
    fn deterministic_init() {
        let shape = NetworkShape::new(vec![40, 40, 40], 600);
        let a = SubspaceNetwork::init(11, &shape).unwrap();
        let b = SubspaceNetwork::init(11, &shape).unwrap();
        assert_eq!(a.params(), b.params());
        assert_ne!(a.params(), SubspaceNetwork::init(12, &shape).unwrap().params());
        // θ only; ω adds another M.
        assert_eq!(a.n_params() + 600, 2 * 40 + 40 + 2 * (40 * 40 + 40) + 40 * 600 + 600 + 600);
    }

    #[test]
    fn rejects_zero_width() {
        assert!(matches!(SubspaceNetwork::init(0, &NetworkShape::new(vec![4, 0], 3)), Err(Error::InvalidShape(_))));
        assert!(matches!(SubspaceNetwork::init(0, &NetworkShape::new(vec![], 0)), Err(Error::InvalidShape(_))));
    }

    #[test]
    fn zero_parameters_give_zero_basis() {
        let mut net = small();
        net.params_mut().fill(0.0);
        for x in [[0.3, -0.2], [0.9, 0.1]] {
            assert!(net.eval_jets(x).iter().all(|j| *j == Jet2::default()));
        }
    }

    #[test]
    fn combine_rules() {
        let net = small();
        let jets = net.eval_jets([0.4, 0.6]);
        assert_eq!(combine(&jets, &[0.0; 3]).unwrap(), Jet2::default());
        assert_eq!(combine(&jets, &[0.0, 1.0, 0.0]).unwrap(), jets[1]);
        let a = combine(&jets, &[0.3, -1.2, 2.0]).unwrap();
        let b = combine(&jets, &[1.1, 0.5, -0.7]).unwrap();
        let ab = combine(&jets, &[1.4, -0.7, 1.3]).unwrap();
        for (x, y) in a.add(&b).components().iter().zip(ab.components()) {
            assert!((x - y).abs() < 1e-13);
        }
        assert!(matches!(combine(&jets, &[1.0]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn batch_and_single_point_agree() {
        let net = small();
        let pts = [[0.1, 0.2], [-0.7, 0.5], [0.6, -0.9]];
        let tape = net.forward(&pts);
        for (p, &x) in pts.iter().enumerate() {
            let single = net.eval_jets(x);
            for (j, jet) in single.iter().enumerate() {
                assert_eq!(*jet, tape.basis_jet(j, p));
            }
        }
    }

    #[test]
    fn snapshot_roundtrip_and_corruption() {
        let net = small();
        let mut buf = Vec::new();
        net.write_snapshot(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"SNNP");
        let back = SubspaceNetwork::read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, net);
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(SubspaceNetwork::read_snapshot(bad.as_slice()), Err(Error::Snapshot(_))));
        assert!(SubspaceNetwork::read_snapshot(&buf[..buf.len() - 3]).is_err());
    }
}
