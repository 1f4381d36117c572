//! Small dense semidefinite solver (primal-dual interior point, HKM direction
//! with a Mehrotra-style centering heuristic).
//!
//! Solves
//!
//! ```text
//! minimize   Σ <C_k, X_k> + c_lp·x + c_free·f
//! subject to Σ <A_ik, X_k> + a_i·x + g_i·f = b_i
//!            X_k ⪰ 0, x ≥ 0, f free
//! ```
//!
//! Results are floating point and untrusted; callers must verify anything
//! they derive from them.

use nalgebra::{DMatrix, DVector};

/// Symmetric sparse entry `(i, j, v)`: `v` is placed at `(i, j)` and `(j, i)`.
pub type SymEntry = (usize, usize, f64);

#[derive(Clone, Debug, Default)]
pub struct SdpConstraint {
    /// `(block, i, j, value)` with `i <= j`.
    pub blocks: Vec<(usize, usize, usize, f64)>,
    pub lp: Vec<(usize, f64)>,
    pub free: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default)]
pub struct SdpProblem {
    pub block_sizes: Vec<usize>,
    pub n_lp: usize,
    pub n_free: usize,
    pub constraints: Vec<SdpConstraint>,
    pub c_blocks: Vec<Vec<SymEntry>>,
    pub c_lp: Vec<f64>,
    pub c_free: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x_blocks: Vec<DMatrix<f64>>,
    pub x_lp: DVector<f64>,
    pub x_free: DVector<f64>,
    pub y: DVector<f64>,
    pub primal_objective: f64,
    pub iterations: usize,
    pub primal_residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SdpOptions {
    pub max_iterations: usize,
    /// Relative duality gap.
    pub tolerance: f64,
    /// Relative primal and dual residuals.
    pub feasibility: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { max_iterations: 80, tolerance: 1e-9, feasibility: 1e-8 }
    }
}

impl SdpProblem {
    pub fn new(block_sizes: Vec<usize>, n_lp: usize, n_free: usize) -> Self {
        let nb = block_sizes.len();
        SdpProblem {
            block_sizes,
            n_lp,
            n_free,
            constraints: Vec::new(),
            c_blocks: vec![Vec::new(); nb],
            c_lp: vec![0.0; n_lp],
            c_free: vec![0.0; n_free],
        }
    }

    fn apply(&self, x: &[DMatrix<f64>], lp: &DVector<f64>, free: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints.iter().map(|c| {
                let mut s = 0.0;
                for &(k, i, j, v) in &c.blocks {
                    s += if i == j { v * x[k][(i, i)] } else { 2.0 * v * x[k][(i, j)] };
                }
                for &(l, v) in &c.lp {
                    s += v * lp[l];
                }
                for &(l, v) in &c.free {
                    s += v * free[l];
                }
                s
            }),
        )
    }

    fn apply_blocks(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        let zl = DVector::zeros(self.n_lp);
        let zf = DVector::zeros(self.n_free);
        self.apply(x, &zl, &zf)
    }

    /// `Σ y_i A_i` split per cone.
    fn adjoint(&self, y: &DVector<f64>) -> (Vec<DMatrix<f64>>, DVector<f64>, DVector<f64>) {
        let mut blocks: Vec<DMatrix<f64>> = self.block_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        let mut lp = DVector::zeros(self.n_lp);
        let mut free = DVector::zeros(self.n_free);
        for (c, yi) in self.constraints.iter().zip(y.iter()) {
            for &(k, i, j, v) in &c.blocks {
                blocks[k][(i, j)] += yi * v;
                if i != j {
                    blocks[k][(j, i)] += yi * v;
                }
            }
            for &(l, v) in &c.lp {
                lp[l] += yi * v;
            }
            for &(l, v) in &c.free {
                free[l] += yi * v;
            }
        }
        (blocks, lp, free)
    }

    fn c_dense(&self) -> Vec<DMatrix<f64>> {
        self.block_sizes
            .iter()
            .zip(&self.c_blocks)
            .map(|(&n, entries)| {
                let mut m = DMatrix::zeros(n, n);
                for &(i, j, v) in entries {
                    m[(i, j)] += v;
                    if i != j {
                        m[(j, i)] += v;
                    }
                }
                m
            })
            .collect()
    }
}

fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    if x.nrows() == 0 {
        return f64::INFINITY;
    }
    let Some(ch) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = ch.l();
    let Some(linv) = l.clone().try_inverse() else {
        return 0.0;
    };
    let w = &linv * dx * linv.transpose();
    let w = (&w + w.transpose()) * 0.5;
    let min = w.symmetric_eigenvalues().min();
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

fn max_step_lp(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(f64::INFINITY, f64::min)
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

struct Iterate {
    x: Vec<DMatrix<f64>>,
    xl: DVector<f64>,
    f: DVector<f64>,
    y: DVector<f64>,
    z: Vec<DMatrix<f64>>,
    zl: DVector<f64>,
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dxl: DVector<f64>,
    df: DVector<f64>,
    dy: DVector<f64>,
    dz: Vec<DMatrix<f64>>,
    dzl: DVector<f64>,
}

pub fn solve(p: &SdpProblem, opts: &SdpOptions) -> SdpSolution {
    let m = p.constraints.len();
    let cone_dim: usize = p.block_sizes.iter().sum::<usize>() + p.n_lp;
    let c = p.c_dense();
    let c_lp = DVector::from_vec(p.c_lp.clone());
    let c_free = DVector::from_vec(p.c_free.clone());
    let b = DVector::from_iterator(m, p.constraints.iter().map(|c| c.rhs));
    let b_norm = 1.0 + b.norm();
    let c_norm = 1.0 + c.iter().map(|m| m.norm()).sum::<f64>() + c_lp.norm() + c_free.norm();

    let mut it = Iterate {
        x: p.block_sizes.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        xl: DVector::from_element(p.n_lp, 1.0),
        f: DVector::zeros(p.n_free),
        y: DVector::zeros(m),
        z: p.block_sizes.iter().map(|&n| DMatrix::identity(n, n)).collect(),
        zl: DVector::from_element(p.n_lp, 1.0),
    };
    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;
    let mut primal_residual = f64::INFINITY;

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        let rp = &b - p.apply(&it.x, &it.xl, &it.f);
        let (aty, aty_lp, aty_free) = p.adjoint(&it.y);
        let rd: Vec<DMatrix<f64>> = c.iter().zip(&it.z).zip(&aty).map(|((c, z), a)| c - z - a).collect();
        let rd_lp = &c_lp - &it.zl - &aty_lp;
        let rf = &c_free - &aty_free;
        let gap: f64 = it.x.iter().zip(&it.z).map(|(x, z)| x.dot(z)).sum::<f64>() + it.xl.dot(&it.zl);
        let mu = if cone_dim > 0 { gap / cone_dim as f64 } else { 0.0 };
        primal_residual = rp.norm() / b_norm;
        let dual_res = (rd.iter().map(|r| r.norm()).sum::<f64>() + rd_lp.norm() + rf.norm()) / c_norm;
        let pobj = objective(&c, &c_lp, &c_free, &it);
        if primal_residual < opts.feasibility && dual_res < opts.feasibility && gap < opts.tolerance * (1.0 + pobj.abs()) {
            status = SdpStatus::Optimal;
            break;
        }

        let zinv: Vec<DMatrix<f64>> = match it.z.iter().map(|z| z.clone().try_inverse().map(sym)).collect::<Option<Vec<_>>>() {
            Some(v) => v,
            None => {
                status = SdpStatus::NumericalFailure;
                break;
            }
        };
        let ratio: DVector<f64> = it.xl.component_div(&it.zl);

        // Schur complement.
        let mut schur = DMatrix::zeros(m + p.n_free, m + p.n_free);
        let mut g_cache: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(m);
        for j in 0..m {
            let mut per_block: Vec<DMatrix<f64>> = p.block_sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
            for &(k, a, bb, v) in &p.constraints[j].blocks {
                // X A Zinv, A = v (e_a e_b^T + e_b e_a^T)
                let xk = &it.x[k];
                let zk = &zinv[k];
                let n = p.block_sizes[k];
                for r in 0..n {
                    for s in 0..n {
                        let mut t = xk[(r, a)] * zk[(bb, s)];
                        if a != bb {
                            t += xk[(r, bb)] * zk[(a, s)];
                        }
                        per_block[k][(r, s)] += v * t;
                    }
                }
            }
            g_cache.push(per_block);
        }
        for i in 0..m {
            for j in 0..m {
                let g = &g_cache[j];
                let mut s = 0.0;
                for &(k, a, bb, v) in &p.constraints[i].blocks {
                    s += if a == bb { v * g[k][(a, a)] } else { v * (g[k][(a, bb)] + g[k][(bb, a)]) };
                }
                schur[(i, j)] = s;
            }
        }
        for i in 0..m {
            for &(l, vi) in &p.constraints[i].lp {
                for j in 0..m {
                    for &(l2, vj) in &p.constraints[j].lp {
                        if l == l2 {
                            schur[(i, j)] += vi * ratio[l] * vj;
                        }
                    }
                }
            }
            for &(l, v) in &p.constraints[i].free {
                schur[(i, m + l)] += v;
                schur[(m + l, i)] += v;
            }
        }
        for i in 0..m {
            let d = schur[(i, i)];
            schur[(i, i)] += 1e-13 * d.abs();
        }
        let lu = schur.lu();

        let direction = |sigma_mu: f64, corr: Option<&Direction>| -> Option<Direction> {
            // T_k = σμ Zinv − X − X Rd Zinv (− ΔX_aff ΔZ_aff Zinv as corrector)
            let t: Vec<DMatrix<f64>> = (0..it.x.len())
                .map(|k| {
                    let mut t = &zinv[k] * sigma_mu - &it.x[k] - &it.x[k] * &rd[k] * &zinv[k];
                    if let Some(d) = corr {
                        t -= &d.dx[k] * &d.dz[k] * &zinv[k];
                    }
                    sym(t)
                })
                .collect();
            let mut tl = DVector::from_iterator(
                p.n_lp,
                (0..p.n_lp).map(|l| sigma_mu / it.zl[l] - it.xl[l] - ratio[l] * rd_lp[l]),
            );
            if let Some(d) = corr {
                for l in 0..p.n_lp {
                    tl[l] -= d.dxl[l] * d.dzl[l] / it.zl[l];
                }
            }
            let zf = DVector::zeros(p.n_free);
            let at = p.apply(&t, &tl, &zf);
            let mut rhs = DVector::zeros(m + p.n_free);
            rhs.rows_mut(0, m).copy_from(&(&rp - at));
            rhs.rows_mut(m, p.n_free).copy_from(&rf);
            let sol = lu.solve(&rhs)?;
            let dy = sol.rows(0, m).into_owned();
            let df = sol.rows(m, p.n_free).into_owned();
            let (a_dy, a_dy_lp, _) = p.adjoint(&dy);
            let dz: Vec<DMatrix<f64>> = rd.iter().zip(&a_dy).map(|(r, a)| sym(r - a)).collect();
            let dzl = &rd_lp - &a_dy_lp;
            let dx: Vec<DMatrix<f64>> = (0..it.x.len())
                .map(|k| sym(&t[k] + &it.x[k] * (&rd[k] - &dz[k]) * &zinv[k]))
                .collect();
            let dxl = DVector::from_iterator(p.n_lp, (0..p.n_lp).map(|l| tl[l] + ratio[l] * (rd_lp[l] - dzl[l])));
            if dy.iter().any(|v| !v.is_finite()) {
                return None;
            }
            Some(Direction { dx, dxl, df, dy, dz, dzl })
        };

        let steps = |d: &Direction| -> (f64, f64) {
            let mut ap = max_step_lp(&it.xl, &d.dxl);
            let mut ad = max_step_lp(&it.zl, &d.dzl);
            for k in 0..it.x.len() {
                ap = ap.min(max_step(&it.x[k], &d.dx[k]));
                ad = ad.min(max_step(&it.z[k], &d.dz[k]));
            }
            (ap.min(1.0), ad.min(1.0))
        };

        let Some(aff) = direction(0.0, None) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let (ap, ad) = steps(&aff);
        let gap_aff: f64 = (0..it.x.len())
            .map(|k| (&it.x[k] + &aff.dx[k] * ap).dot(&(&it.z[k] + &aff.dz[k] * ad)))
            .sum::<f64>()
            + (&it.xl + &aff.dxl * ap).dot(&(&it.zl + &aff.dzl * ad));
        let sigma = if gap > 0.0 { (gap_aff / gap).clamp(0.0, 1.0).powi(3) } else { 0.0 };
        let Some(d) = direction(sigma * mu, Some(&aff)) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let (ap, ad) = steps(&d);
        let (ap, ad) = ((0.95 * ap).min(1.0), (0.95 * ad).min(1.0));
        for k in 0..it.x.len() {
            it.x[k] = sym(&it.x[k] + &d.dx[k] * ap);
            it.z[k] = sym(&it.z[k] + &d.dz[k] * ad);
        }
        it.xl += &d.dxl * ap;
        it.f += &d.df * ap;
        it.zl += &d.dzl * ad;
        it.y += &d.dy * ad;
        if ap < 1e-12 && ad < 1e-12 {
            status = SdpStatus::NumericalFailure;
            break;
        }
    }
    let primal_objective = objective(&c, &c_lp, &c_free, &it);
    SdpSolution {
        status,
        x_blocks: it.x,
        x_lp: it.xl,
        x_free: it.f,
        y: it.y,
        primal_objective,
        iterations,
        primal_residual,
    }
}

fn objective(c: &[DMatrix<f64>], c_lp: &DVector<f64>, c_free: &DVector<f64>, it: &Iterate) -> f64 {
    c.iter().zip(&it.x).map(|(c, x)| c.dot(x)).sum::<f64>() + c_lp.dot(&it.xl) + c_free.dot(&it.f)
}

/// Residual `b − A(X)` for a candidate block assignment, used by tests.
pub fn block_residual(p: &SdpProblem, x: &[DMatrix<f64>]) -> DVector<f64> {
    let b = DVector::from_iterator(p.constraints.len(), p.constraints.iter().map(|c| c.rhs));
    b - p.apply_blocks(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_minimization_on_fixed_diagonal_sum() {
        // min tr(X) s.t. X_00 + X_11 = 2, X_01 = 1/2  -> X = [[1, .5],[.5, 1]] optimal value 2.
        let mut p = SdpProblem::new(vec![2], 0, 0);
        p.c_blocks[0] = vec![(0, 0, 1.0), (1, 1, 1.0)];
        p.constraints.push(SdpConstraint { blocks: vec![(0, 0, 0, 1.0), (0, 1, 1, 1.0)], rhs: 2.0, ..Default::default() });
        p.constraints.push(SdpConstraint { blocks: vec![(0, 0, 1, 0.5)], rhs: 0.5, ..Default::default() });
        let s = solve(&p, &SdpOptions::default());
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_objective - 2.0).abs() < 1e-6);
        assert!((s.x_blocks[0][(0, 1)] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn maximizes_smallest_eigenvalue_with_lp_and_free_parts() {
        // max t s.t. X = [[2,1],[1,2]] - t I ⪰ 0 with t = f (free) and t <= 5 via slack.
        let mut p = SdpProblem::new(vec![2], 1, 1);
        p.c_free = vec![-1.0];
        for (i, j, v) in [(0, 0, 2.0), (1, 1, 2.0), (0, 1, 1.0)] {
            let mut c = SdpConstraint { blocks: vec![(0, i, j, if i == j { 1.0 } else { 0.5 })], rhs: v, ..Default::default() };
            if i == j {
                c.free.push((0, 1.0));
            }
            p.constraints.push(c);
        }
        p.constraints.push(SdpConstraint { free: vec![(0, 1.0)], lp: vec![(0, 1.0)], rhs: 5.0, ..Default::default() });
        let s = solve(&p, &SdpOptions::default());
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.x_free[0] - 1.0).abs() < 1e-6, "{}", s.x_free[0]);
    }
}
