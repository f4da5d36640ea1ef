//! Seven-point operator assembly and preconditioned conjugate gradients.

use std::sync::OnceLock;

use rayon::prelude::*;

use super::grid::{RectilinearGrid, NO_NET};
use super::{SolverError, SolverSettings};
use crate::geometry::Axis;

// Modified incomplete Cholesky parameters.
const MIC_TAU: f64 = 0.97;
const MIC_SIGMA: f64 = 0.25;
const REDUCTION_CHUNK: usize = 1 << 14;

/// Flux coefficients (units of length; multiply by eps0 for farads) of the
/// edges from each node to its +x, +y and +z neighbors.
#[derive(Debug)]
pub(crate) struct Operator {
    pub dims: [usize; 3],
    pub c: [Vec<f64>; 3],
    pub diag: Vec<f64>,
    /// Conductor nodes and nodes on grounded outer faces.
    pub fixed: Vec<bool>,
    mic: OnceLock<Vec<f64>>,
}

impl Operator {
    pub fn assemble(grid: &RectilinearGrid) -> Self {
        let dims = grid.dims();
        let [nx, ny, nz] = dims;
        let n = nx * ny * nz;
        let g = grid.geometry();
        let eps: Vec<f64> = (0..grid.cell_count())
            .map(|c| g.epsilon(grid.cell_material(c)))
            .collect();
        let hx: Vec<f64> = (0..nx - 1).map(|i| grid.width(Axis::X, i)).collect();
        let hy: Vec<f64> = (0..ny - 1).map(|j| grid.width(Axis::Y, j)).collect();
        let hz: Vec<f64> = (0..nz - 1).map(|k| grid.width(Axis::Z, k)).collect();
        let cell = |i: usize, j: usize, k: usize| eps[(i * (ny - 1) + j) * (nz - 1) + k];
        // Neighboring cell indices (and half widths) around node index `i` along one axis.
        let around = |i: usize, len: usize, h: &[f64]| -> [(usize, f64); 2] {
            let lo = if i > 0 { (i - 1, 0.5 * h[i - 1]) } else { (0, 0.0) };
            let hi = if i + 1 < len { (i, 0.5 * h[i]) } else { (0, 0.0) };
            [lo, hi]
        };

        let mut c = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        let [cx, cy, cz] = &mut c;
        cx.par_chunks_mut(ny * nz)
            .zip(cy.par_chunks_mut(ny * nz))
            .zip(cz.par_chunks_mut(ny * nz))
            .enumerate()
            .for_each(|(i, ((cx, cy), cz))| {
                for j in 0..ny {
                    for k in 0..nz {
                        let local = j * nz + k;
                        if i + 1 < nx {
                            let mut s = 0.0;
                            for (jj, wy) in around(j, ny, &hy) {
                                for (kk, wz) in around(k, nz, &hz) {
                                    if wy > 0.0 && wz > 0.0 {
                                        s += cell(i, jj, kk) * wy * wz;
                                    }
                                }
                            }
                            cx[local] = s / hx[i];
                        }
                        if j + 1 < ny {
                            let mut s = 0.0;
                            for (ii, wx) in around(i, nx, &hx) {
                                for (kk, wz) in around(k, nz, &hz) {
                                    if wx > 0.0 && wz > 0.0 {
                                        s += cell(ii, j, kk) * wx * wz;
                                    }
                                }
                            }
                            cy[local] = s / hy[j];
                        }
                        if k + 1 < nz {
                            let mut s = 0.0;
                            for (ii, wx) in around(i, nx, &hx) {
                                for (jj, wy) in around(j, ny, &hy) {
                                    if wx > 0.0 && wy > 0.0 {
                                        s += cell(ii, jj, k) * wx * wy;
                                    }
                                }
                            }
                            cz[local] = s / hz[k];
                        }
                    }
                }
            });

        let strides = [ny * nz, nz, 1];
        let mut diag = vec![0.0; n];
        diag.par_iter_mut().enumerate().for_each(|(node, d)| {
            let mut s = 0.0;
            for a in 0..3 {
                s += c[a][node];
                if node >= strides[a] && has_lower(node, a, dims) {
                    s += c[a][node - strides[a]];
                }
            }
            *d = s;
        });

        let nets = grid.raw_node_nets();
        let mut fixed = vec![false; n];
        fixed.par_chunks_mut(ny * nz).enumerate().for_each(|(i, f)| {
            for j in 0..ny {
                for k in 0..nz {
                    let node = (i * ny + j) * nz + k;
                    f[j * nz + k] = nets[node] != NO_NET || grid.on_grounded_boundary(i, j, k);
                }
            }
        });

        Self {
            dims,
            c,
            diag,
            fixed,
            mic: OnceLock::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn strides(&self) -> [usize; 3] {
        [self.dims[1] * self.dims[2], self.dims[2], 1]
    }

    /// MIC factors for the standard Dirichlet set.
    pub fn mic(&self) -> &[f64] {
        self.mic.get_or_init(|| self.build_mic(&self.fixed))
    }

    pub fn build_mic(&self, fixed: &[bool]) -> Vec<f64> {
        let n = self.len();
        let st = self.strides();
        let mut precon = vec![0.0; n];
        // Coupling to the +axis neighbor, zero when either end is fixed.
        let free_c = |a: usize, m: usize| -> f64 {
            if fixed[m] || fixed[m + st[a]] {
                0.0
            } else {
                self.c[a][m]
            }
        };
        for node in 0..n {
            if fixed[node] {
                continue;
            }
            let d = self.diag[node];
            let mut e = d;
            for a in 0..3 {
                if !has_lower(node, a, self.dims) {
                    continue;
                }
                let m = node - st[a];
                let cm = free_c(a, m);
                if cm == 0.0 {
                    continue;
                }
                let pm = precon[m];
                e -= (cm * pm).powi(2);
                let mut others = 0.0;
                for b in 0..3 {
                    if b != a && has_upper(m, b, self.dims) {
                        others += free_c(b, m);
                    }
                }
                e -= MIC_TAU * cm * others * pm * pm;
            }
            if e < MIC_SIGMA * d {
                e = d;
            }
            precon[node] = 1.0 / e.sqrt();
        }
        precon
    }

    /// `y = A x` on free rows; fixed rows of `y` are zero.
    fn apply(&self, fixed: &[bool], x: &[f64], y: &mut [f64]) {
        let [nx, ny, nz] = self.dims;
        let [sx, sy, _] = self.strides();
        let [cx, cy, cz] = &self.c;
        y.par_chunks_mut(sx).enumerate().for_each(|(i, ys)| {
            for j in 0..ny {
                for k in 0..nz {
                    let node = (i * ny + j) * nz + k;
                    let yn = &mut ys[j * nz + k];
                    if fixed[node] {
                        *yn = 0.0;
                        continue;
                    }
                    let mut s = self.diag[node] * x[node];
                    if i + 1 < nx {
                        s -= cx[node] * x[node + sx];
                    }
                    if i > 0 {
                        s -= cx[node - sx] * x[node - sx];
                    }
                    if j + 1 < ny {
                        s -= cy[node] * x[node + sy];
                    }
                    if j > 0 {
                        s -= cy[node - sy] * x[node - sy];
                    }
                    if k + 1 < nz {
                        s -= cz[node] * x[node + 1];
                    }
                    if k > 0 {
                        s -= cz[node - 1] * x[node - 1];
                    }
                    *yn = s;
                }
            }
        });
    }

    /// Row `node` of `A x`, fixed rows included. Used for fluxes.
    pub fn apply_row(&self, x: &[f64], node: usize) -> f64 {
        let st = self.strides();
        let mut s = self.diag[node] * x[node];
        for a in 0..3 {
            if has_upper(node, a, self.dims) {
                s -= self.c[a][node] * x[node + st[a]];
            }
            if has_lower(node, a, self.dims) {
                s -= self.c[a][node - st[a]] * x[node - st[a]];
            }
        }
        s
    }

    fn apply_mic(&self, precon: &[f64], fixed: &[bool], r: &[f64], z: &mut [f64]) {
        let [nx, ny, nz] = self.dims;
        let [sx, sy, _] = self.strides();
        let [cx, cy, cz] = &self.c;
        // Forward substitution; z holds zeros on fixed nodes so they drop out.
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let node = (i * ny + j) * nz + k;
                    if fixed[node] {
                        z[node] = 0.0;
                        continue;
                    }
                    let mut t = r[node];
                    if i > 0 {
                        let m = node - sx;
                        t += cx[m] * precon[m] * z[m];
                    }
                    if j > 0 {
                        let m = node - sy;
                        t += cy[m] * precon[m] * z[m];
                    }
                    if k > 0 {
                        let m = node - 1;
                        t += cz[m] * precon[m] * z[m];
                    }
                    z[node] = t * precon[node];
                }
            }
        }
        for i in (0..nx).rev() {
            for j in (0..ny).rev() {
                for k in (0..nz).rev() {
                    let node = (i * ny + j) * nz + k;
                    if fixed[node] {
                        continue;
                    }
                    let mut t = z[node];
                    let pn = precon[node];
                    if i + 1 < nx {
                        t += cx[node] * pn * z[node + sx];
                    }
                    if j + 1 < ny {
                        t += cy[node] * pn * z[node + sy];
                    }
                    if k + 1 < nz {
                        t += cz[node] * pn * z[node + 1];
                    }
                    z[node] = t * pn;
                }
            }
        }
    }
}

#[inline]
fn has_lower(node: usize, axis: usize, dims: [usize; 3]) -> bool {
    coord(node, axis, dims) > 0
}

#[inline]
fn has_upper(node: usize, axis: usize, dims: [usize; 3]) -> bool {
    coord(node, axis, dims) + 1 < dims[axis]
}

#[inline]
fn coord(node: usize, axis: usize, dims: [usize; 3]) -> usize {
    match axis {
        0 => node / (dims[1] * dims[2]),
        1 => (node / dims[2]) % dims[1],
        _ => node % dims[2],
    }
}

pub(crate) enum Preconditioner<'a> {
    Mic(&'a [f64]),
    Owned(Vec<f64>),
    Jacobi,
}

fn dot(a: &[f64], b: &[f64], deterministic: bool) -> f64 {
    if deterministic {
        let partial: Vec<f64> = a
            .par_chunks(REDUCTION_CHUNK)
            .zip(b.par_chunks(REDUCTION_CHUNK))
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
            .collect();
        partial.iter().sum()
    } else {
        a.par_iter().zip(b.par_iter()).map(|(p, q)| p * q).sum()
    }
}

/// Preconditioned CG on the free nodes. On entry `x` holds the Dirichlet
/// values on fixed nodes and the initial guess elsewhere. Returns the
/// iteration count and the final true relative residual.
pub(crate) fn pcg(
    op: &Operator,
    fixed: &[bool],
    precon: &Preconditioner<'_>,
    x: &mut [f64],
    settings: &SolverSettings,
) -> Result<(usize, f64), SolverError> {
    let n = op.len();
    let det = settings.deterministic;
    // Split x into the Dirichlet lift and the free part u.
    let lift: Vec<f64> = (0..n).map(|i| if fixed[i] { x[i] } else { 0.0 }).collect();
    let mut u: Vec<f64> = (0..n).map(|i| if fixed[i] { 0.0 } else { x[i] }).collect();
    let mut b = vec![0.0; n];
    op.apply(fixed, &lift, &mut b);
    b.par_iter_mut().for_each(|v| *v = -*v);
    let bnorm = dot(&b, &b, det).sqrt();
    if bnorm == 0.0 {
        x.par_iter_mut().zip(&lift).for_each(|(xi, l)| *xi = *l);
        return Ok((0, 0.0));
    }

    let mut r = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut z = vec![0.0; n];
    let residual = |u: &[f64], r: &mut [f64], q: &mut [f64]| {
        op.apply(fixed, u, q);
        r.par_iter_mut()
            .zip(b.par_iter().zip(q.par_iter()))
            .for_each(|(ri, (bi, qi))| *ri = bi - qi);
    };
    let precondition = |r: &[f64], z: &mut [f64]| match precon {
        Preconditioner::Mic(p) => op.apply_mic(p, fixed, r, z),
        Preconditioner::Owned(p) => op.apply_mic(p, fixed, r, z),
        Preconditioner::Jacobi => z
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, zi)| *zi = if fixed[i] { 0.0 } else { r[i] / op.diag[i] }),
    };

    residual(&u, &mut r, &mut q);
    let mut rel = dot(&r, &r, det).sqrt() / bnorm;
    let mut iterations = 0;
    // Restart with a freshly computed residual if recurrence drift hides a
    // true residual above tolerance.
    while rel > settings.tolerance {
        precondition(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z, det);
        loop {
            if iterations >= settings.max_iter {
                return Err(SolverError::NoConvergence {
                    iterations,
                    residual: rel,
                });
            }
            iterations += 1;
            op.apply(fixed, &p, &mut q);
            let pq = dot(&p, &q, det);
            if pq <= 0.0 {
                break;
            }
            let alpha = rz / pq;
            u.par_iter_mut().zip(p.par_iter()).for_each(|(ui, pi)| *ui += alpha * pi);
            r.par_iter_mut().zip(q.par_iter()).for_each(|(ri, qi)| *ri -= alpha * qi);
            rel = dot(&r, &r, det).sqrt() / bnorm;
            if rel <= settings.tolerance {
                break;
            }
            precondition(&r, &mut z);
            let rz_new = dot(&r, &z, det);
            let beta = rz_new / rz;
            rz = rz_new;
            p.par_iter_mut().zip(z.par_iter()).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
        residual(&u, &mut r, &mut q);
        rel = dot(&r, &r, det).sqrt() / bnorm;
    }
    x.par_iter_mut()
        .zip(lift.par_iter().zip(u.par_iter()))
        .for_each(|(xi, (l, ui))| *xi = l + ui);
    Ok((iterations, rel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{validate, Cuboid, DeviceGeometry, Material, Solid};
    use std::sync::Arc;

    fn layered_grid() -> RectilinearGrid {
        let mut g = DeviceGeometry::new(Cuboid::new([0.0; 3], [4.0, 3.0, 5.0]));
        g.materials.push(Material::dielectric("d", 7.0));
        g.solids.push(Solid::new(Cuboid::new([0.0, 0.0, 0.0], [4.0, 3.0, 2.0]), "d", None));
        let g = Arc::new(validate(g).unwrap());
        let lines = [
            vec![0.0, 0.5, 1.5, 4.0],
            vec![0.0, 1.0, 3.0],
            vec![0.0, 1.0, 2.0, 2.5, 5.0],
        ];
        RectilinearGrid::from_lines(g, lines, [0.0; 3]).unwrap()
    }

    #[test]
    fn operator_is_symmetric_with_zero_row_sums() {
        let grid = layered_grid();
        let op = Operator::assemble(&grid);
        let n = op.len();
        // Dense reconstruction from matrix-vector products on unit vectors.
        let none = vec![false; n];
        let mut dense = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let mut col = vec![0.0; n];
            op.apply(&none, &e, &mut col);
            for i in 0..n {
                dense[i][j] = col[i];
            }
        }
        for i in 0..n {
            let row: f64 = dense[i].iter().sum();
            assert!(row.abs() < 1e-18, "row {i} sums to {row}");
            for j in 0..n {
                assert!((dense[i][j] - dense[j][i]).abs() < 1e-20);
            }
        }
    }

    #[test]
    fn layered_column_coefficients_are_series_exact() {
        let grid = layered_grid();
        let op = Operator::assemble(&grid);
        // Total z-coupling across any plane equals eps * area / h of the layer.
        let st = op.strides();
        let d = op.dims;
        for k in 0..d[2] - 1 {
            let mut total = 0.0;
            for i in 0..d[0] {
                for j in 0..d[1] {
                    total += op.c[2][i * st[0] + j * st[1] + k];
                }
            }
            let h = grid.width(Axis::Z, k);
            let eps = if grid.lines(Axis::Z)[k + 1] <= 2.0e-6 + 1e-15 { 7.0 } else { 1.0 };
            let expect = eps * 4e-6 * 3e-6 / h;
            assert!(((total - expect) / expect).abs() < 1e-12);
        }
    }
}
