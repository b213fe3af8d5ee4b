//! The coupled least-squares problem for `(ω_Re, ω_Im)`.
//!
//! Unknowns are stacked as `[ω_Re; ω_Im]`. Rows come in six blocks: Helmholtz,
//! obstacle and TBC residuals, each split into a real and an imaginary part.
//! The TBC rows couple the two halves because `h_n` is complex.

use std::io::Write;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::ScatterProblem;
use crate::net::{BasisView, DX, DXX, DY, DYY, VALUE};
use crate::oracle::BoundaryCondition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowBlock {
    PdeRe,
    PdeIm,
    BcRe,
    BcIm,
    TbcRe,
    TbcIm,
}

/// Singular values below `cutoff · σ_max` are discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cutoff {
    /// Machine epsilon (the SciPy `lstsq` default).
    #[default]
    Epsilon,
    /// `max(rows, cols)` times machine epsilon.
    DimensionScaled,
}

impl Cutoff {
    pub fn relative(self, rows: usize, cols: usize) -> f64 {
        match self {
            Cutoff::Epsilon => f64::EPSILON,
            Cutoff::DimensionScaled => rows.max(cols) as f64 * f64::EPSILON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Scale every row family by `1/sqrt(count)` so the objective matches the
    /// mean-based training losses.
    pub row_scaling: bool,
    /// Divide each column by its norm before solving (undone afterwards).
    pub column_equilibration: bool,
    pub cutoff: Cutoff,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { row_scaling: true, column_equilibration: false, cutoff: Cutoff::Epsilon }
    }
}

/// Dense row-major system `A ω ≈ b`.
#[derive(Debug, Clone)]
pub struct DesignSystem {
    pub rows: usize,
    pub cols: usize,
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Half-open row ranges of each block, in row order.
    pub blocks: Vec<(RowBlock, std::ops::Range<usize>)>,
    pub options: AssemblyOptions,
}

impl DesignSystem {
    pub fn block_of(&self, row: usize) -> Option<RowBlock> {
        self.blocks.iter().find(|(_, r)| r.contains(&row)).map(|(b, _)| *b)
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.cols + col]
    }

    /// `A ω − b`.
    pub fn residual(&self, omega: &[f64]) -> Result<Vec<f64>> {
        if omega.len() != self.cols {
            return Err(Error::LengthMismatch { what: "ω", expected: self.cols, found: omega.len() });
        }
        Ok(self
            .matrix
            .chunks_exact(self.cols)
            .zip(&self.rhs)
            .map(|(row, b)| row.iter().zip(omega).map(|(a, w)| a * w).sum::<f64>() - b)
            .collect())
    }

    /// `‖A ω − b‖²`.
    pub fn objective(&self, omega: &[f64]) -> Result<f64> {
        Ok(self.residual(omega)?.iter().map(|r| r * r).sum())
    }

    /// Little-endian dump: magic `AOLS`, version, rows and columns (u64), then
    /// `A` row-major and `b`, all f64.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"AOLS")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.cols as u64).to_le_bytes())?;
        for v in self.matrix.iter().chain(&self.rhs) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Builds the design system from the basis jets of both networks at
/// [`crate::geometry::CollocationSet::all_points`].
pub fn assemble(re: BasisView<'_>, im: BasisView<'_>, problem: &ScatterProblem, options: AssemblyOptions) -> Result<DesignSystem> {
    let set = &problem.set;
    let (n_int, n_obs, n_tbc) = (set.n_interior(), set.n_obstacle(), set.n_tbc());
    for b in [&re, &im] {
        if b.points() != set.len() {
            return Err(Error::LengthMismatch { what: "basis points", expected: set.len(), found: b.points() });
        }
    }
    if re.width() == 0 || im.width() == 0 {
        return Err(Error::EmptySet("basis"));
    }
    let (m_re, m_im) = (re.width(), im.width());
    let cols = m_re + m_im;
    let rows = 2 * (n_int + n_obs + n_tbc);
    let mut matrix = vec![0.0; rows * cols];
    let mut rhs = vec![0.0; rows];
    let scale = |n: usize| if options.row_scaling { 1.0 / (n as f64).sqrt() } else { 1.0 };
    let k2 = problem.kappa * problem.kappa;

    let pde_re = 0..n_int;
    let pde_im = n_int..2 * n_int;
    let bc_re = 2 * n_int..2 * n_int + n_obs;
    let bc_im = bc_re.end..bc_re.end + n_obs;
    let tbc_re = bc_im.end..bc_im.end + n_tbc;
    let tbc_im = tbc_re.end..rows;

    // Each basis with the index of its first column.
    let columns = [(re, 0usize), (im, m_re)];

    let s = scale(n_int);
    for (basis, off) in columns {
        let row0 = if off == 0 { pde_re.start } else { pde_im.start };
        for j in 0..basis.width() {
            let (v, xx, yy) = (basis.component(j, VALUE), basis.component(j, DXX), basis.component(j, DYY));
            for p in 0..n_int {
                matrix[(row0 + p) * cols + off + j] = s * (xx[p] + yy[p] + k2 * v[p]);
            }
        }
    }

    let s = scale(n_obs);
    for (i, g) in problem.g.iter().enumerate() {
        rhs[bc_re.start + i] = s * g.re;
        rhs[bc_im.start + i] = s * g.im;
    }
    for (basis, off) in columns {
        let is_re = off == 0;
        for j in 0..basis.width() {
            let (v, dx, dy) = (basis.component(j, VALUE), basis.component(j, DX), basis.component(j, DY));
            for (i, b) in set.obstacle.iter().enumerate() {
                let p = n_int + i;
                let dn = b.normal[0] * dx[p] + b.normal[1] * dy[p];
                let (in_re, in_im) = match problem.bc {
                    BoundaryCondition::SoundSoft => if is_re { (v[p], 0.0) } else { (0.0, v[p]) },
                    BoundaryCondition::SoundHard => if is_re { (dn, 0.0) } else { (0.0, dn) },
                    // Real part ∂nφR − λφI, imaginary part ∂nφI + λφR.
                    BoundaryCondition::Impedance { lambda } => {
                        if is_re { (dn, lambda * v[p]) } else { (-lambda * v[p], dn) }
                    }
                };
                matrix[(bc_re.start + i) * cols + off + j] = s * in_re;
                matrix[(bc_im.start + i) * cols + off + j] = s * in_im;
            }
        }
    }

    let s = scale(n_tbc);
    let offset = n_int + n_obs;
    let radial: Vec<[f64; 2]> = set
        .tbc
        .iter()
        .map(|t| {
            let r = t.point[0].hypot(t.point[1]);
            [t.point[0] / r, t.point[1] / r]
        })
        .collect();
    for (basis, off) in columns {
        let is_re = off == 0;
        for j in 0..basis.width() {
            let v = &basis.component(j, VALUE)[offset..offset + n_tbc];
            let (dx, dy) = (&basis.component(j, DX)[offset..], &basis.component(j, DY)[offset..]);
            let f = problem.dtn.apply_real(v)?;
            for i in 0..n_tbc {
                let dr = radial[i][0] * dx[i] + radial[i][1] * dy[i];
                // Residual ∂_r N − F_N[N] for N = φ (real part) or N = iφ.
                let r = if is_re { Complex64::new(dr, 0.0) - f[i] } else { Complex64::new(0.0, dr) - Complex64::i() * f[i] };
                matrix[(tbc_re.start + i) * cols + off + j] = s * r.re;
                matrix[(tbc_im.start + i) * cols + off + j] = s * r.im;
            }
        }
    }

    if matrix.iter().any(|v| !v.is_finite()) || rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix"));
    }
    let blocks = vec![
        (RowBlock::PdeRe, pde_re),
        (RowBlock::PdeIm, pde_im),
        (RowBlock::BcRe, bc_re),
        (RowBlock::BcIm, bc_im),
        (RowBlock::TbcRe, tbc_re),
        (RowBlock::TbcIm, tbc_im),
    ];
    Ok(DesignSystem { rows, cols, matrix, rhs, blocks, options })
}

/// Minimum-norm least-squares solution with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsqSolution {
    /// The stacked solution `[ω_Re; ω_Im]`.
    pub omega: Vec<f64>,
    pub split: usize,
    pub residual_norm: f64,
    /// `σ_max / σ_min` over the retained singular values.
    pub cond_estimate: f64,
    pub omega_norm: f64,
    pub rank: usize,
}

impl LsqSolution {
    pub fn omega_re(&self) -> &[f64] {
        &self.omega[..self.split]
    }

    pub fn omega_im(&self) -> &[f64] {
        &self.omega[self.split..]
    }
}

/// Solves `min ‖Aω − b‖` by a thin SVD, discarding singular values below
/// the cutoff of `sys.options`.
pub fn solve(sys: &DesignSystem) -> Result<LsqSolution> {
    solve_split(sys, sys.cols / 2)
}

/// As [`solve`], recording where the real block of ω ends.
pub fn solve_split(sys: &DesignSystem, split: usize) -> Result<LsqSolution> {
    let (m, n) = (sys.rows, sys.cols);
    if m < n {
        return Err(Error::Underdetermined { rows: m, cols: n });
    }
    if sys.matrix.iter().chain(&sys.rhs).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design system"));
    }
    let mut col_scale = vec![1.0; n];
    if sys.options.column_equilibration {
        for (j, cs) in col_scale.iter_mut().enumerate() {
            let norm = (0..m).map(|i| sys.matrix[i * n + j].powi(2)).sum::<f64>().sqrt();
            if norm > 0.0 {
                *cs = 1.0 / norm;
            }
        }
    }
    let a = Mat::from_fn(m, n, |i, j| sys.matrix[i * n + j] * col_scale[j]);
    let svd = a.thin_svd().map_err(|e| Error::InvalidParameter { what: "svd", detail: format!("{e:?}") })?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let sigma_max = (0..n).map(|i| s[i]).fold(0.0, f64::max);
    let cutoff = sys.options.cutoff.relative(m, n) * sigma_max;
    let mut omega = vec![0.0; n];
    let (mut rank, mut sigma_min) = (0, f64::INFINITY);
    for k in 0..n {
        let sk = s[k];
        if !(sk > cutoff) || sk == 0.0 {
            continue;
        }
        rank += 1;
        sigma_min = sigma_min.min(sk);
        let coef = (0..m).map(|i| u[(i, k)] * sys.rhs[i]).sum::<f64>() / sk;
        for (j, w) in omega.iter_mut().enumerate() {
            *w += coef * v[(j, k)];
        }
    }
    for (w, cs) in omega.iter_mut().zip(&col_scale) {
        *w *= cs;
    }
    let residual_norm = sys.objective(&omega)?.sqrt();
    let omega_norm = omega.iter().map(|w| w * w).sum::<f64>().sqrt();
    let cond_estimate = if rank == 0 { f64::INFINITY } else { sigma_max / sigma_min };
    Ok(LsqSolution { omega, split, residual_norm, cond_estimate, omega_norm, rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtn::DtnOperator;
    use crate::geometry::{generate_collocation, AnnulusDomain, CollocationCounts};
    use crate::specfun::dtn_symbol;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(rows: usize, cols: usize, seed: u64) -> DesignSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let matrix = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        DesignSystem { rows, cols, matrix, rhs: vec![0.0; rows], blocks: vec![], options: AssemblyOptions::default() }
    }

    #[test]
    fn recovers_planted_solution() {
        let mut sys = random_system(60, 20, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let star: Vec<f64> = (0..20).map(|_| rng.random_range(-2.0..2.0)).collect();
        sys.rhs = sys.residual(&star).unwrap();
        let sol = solve(&sys).unwrap();
        assert!(sol.cond_estimate <= 1e6);
        let norm = star.iter().map(|w| w * w).sum::<f64>().sqrt();
        let err = sol.omega.iter().zip(&star).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * norm);
    }

    #[test]
    fn zero_rhs_and_errors() {
        let sys = random_system(10, 4, 1);
        let sol = solve(&sys).unwrap();
        assert!(sol.omega.iter().all(|&w| w == 0.0));
        assert_eq!(sol.residual_norm, 0.0);
        assert!(matches!(solve(&random_system(3, 4, 1)), Err(Error::Underdetermined { .. })));
        let mut bad = random_system(6, 2, 1);
        bad.matrix[3] = f64::NAN;
        assert!(matches!(solve(&bad), Err(Error::NonFinite(_))));
    }

    #[test]
    fn rank_deficient_gives_minimum_norm() {
        let mut sys = random_system(30, 6, 9);
        for i in 0..30 {
            let v = sys.matrix[i * 6];
            sys.matrix[i * 6 + 5] = v;
            sys.rhs[i] = v;
        }
        let sol = solve(&sys).unwrap();
        assert_eq!(sol.rank, 5);
        assert!((sol.omega[0] - 0.5).abs() < 1e-12 && (sol.omega[5] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tbc_rows_for_single_mode() {
        let (kappa, radius) = (5.0, 1.0);
        let d = AnnulusDomain::new(0.5, radius).unwrap();
        let c = CollocationCounts { n_radial: 4, n_angular: 4, n_obstacle: 4, n_tbc: 16 };
        let set = generate_collocation(d, c).unwrap();
        let dtn = DtnOperator::new(kappa, radius, 4, 16).unwrap();
        let g = vec![Complex64::default(); 4];
        let problem = ScatterProblem::new(kappa, BoundaryCondition::SoundSoft, set.clone(), g, dtn).unwrap();
        // Basis φ = cos θ · r (real part of r e^{iθ}); its radial derivative on r = 1 is cos θ.
        let pts = set.all_points();
        let mut data = vec![0.0; 6 * pts.len()];
        let p = pts.len();
        for (q, x) in pts.iter().enumerate() {
            data[q] = x[0];
            data[p + q] = 1.0;
        }
        let view = BasisView::new(&data, p, 1).unwrap();
        let sys = assemble(view, view, &problem, AssemblyOptions { row_scaling: false, ..AssemblyOptions::default() }).unwrap();
        let h1 = dtn_symbol(1, kappa * radius).unwrap() / radius;
        let range = sys.blocks[4].1.clone();
        for (i, t) in set.tbc.iter().enumerate() {
            // F[cos θ] = Re(h1) cos θ since h_1 = h_{-1}.
            let expect = Complex64::new(t.angle.cos(), 0.0) - h1 * t.angle.cos();
            let row = range.start + i;
            assert!((sys.entry(row, 0) - expect.re).abs() < 1e-12);
            assert!((sys.entry(row + 16, 0) - expect.im).abs() < 1e-12);
            // The imaginary-network column carries i·(…).
            assert!((sys.entry(row, 1) + expect.im).abs() < 1e-12);
            assert!((sys.entry(row + 16, 1) - expect.re).abs() < 1e-12);
        }
        assert_eq!(sys.block_of(0), Some(RowBlock::PdeRe));
        // Sound-soft rows: identity in the matching part only.
        let bc = sys.blocks[2].1.start;
        assert_eq!(sys.entry(bc, 0), pts[set.n_interior()][0]);
        assert_eq!(sys.entry(bc + 4, 0), 0.0);
    }
}
