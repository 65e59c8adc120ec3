use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pml::{AxisCoefficients, PmlSpec};
use crate::error::{Error, Result};
use crate::geometry::DielectricMap;

/// Courant safety factor applied to the 3D stability limit.
pub const COURANT_SAFETY: f64 = 0.95;

/// Treatment of the outer faces along one axis.
///
/// Indices wrap around in both cases; a perfect electric conductor is the
/// wrapped grid with the tangential E components on the index-0 plane pinned
/// to zero, so that no information crosses that plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Pec,
    Periodic,
}

/// Field component on the Yee lattice.
///
/// `Ex` lives at `(i+½, j, k)`, `Hx` at `(i, j+½, k+½)`, and cyclically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    Ex,
    Ey,
    Ez,
    Hx,
    Hy,
    Hz,
}

impl Component {
    pub fn axis(self) -> usize {
        match self {
            Component::Ex | Component::Hx => 0,
            Component::Ey | Component::Hy => 1,
            Component::Ez | Component::Hz => 2,
        }
    }

    pub fn is_electric(self) -> bool {
        matches!(self, Component::Ex | Component::Ey | Component::Ez)
    }

    pub fn electric(axis: usize) -> Self {
        [Component::Ex, Component::Ey, Component::Ez][axis]
    }

    pub fn magnetic(axis: usize) -> Self {
        [Component::Hx, Component::Hy, Component::Hz][axis]
    }

    /// Offset of the sample point from the cell corner, in cells.
    pub fn offset(self) -> [f64; 3] {
        let a = self.axis();
        let mut o = if self.is_electric() { [0.0; 3] } else { [0.5; 3] };
        o[a] = if self.is_electric() { 0.5 } else { 0.0 };
        o
    }
}

/// Electromagnetic state on a staggered Yee grid.
///
/// Internal units: cell size Δ = 1, c = 1, ε0 = μ0 = 1; time is measured in
/// Δ/c. The state holds `E` at integer time `n·dt` and `H` at `(n − ½)·dt`.
pub struct YeeState {
    pub(crate) dims: [usize; 3],
    pub(crate) cell_size: f64,
    pub(crate) dt: f64,
    pub(crate) step: u64,
    pub(crate) e: [Vec<f64>; 3],
    pub(crate) h: [Vec<f64>; 3],
    pub(crate) e_aux: [Vec<f64>; 3],
    pub(crate) h_aux: [Vec<f64>; 3],
    inv_eps: [Vec<f64>; 3],
    coeffs: [AxisCoefficients; 3],
    fwd: [Vec<isize>; 3],
    bwd: [Vec<isize>; 3],
    boundary: [Boundary; 3],
    pml: PmlSpec,
    interior: [(usize, usize); 3],
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for YeeState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("YeeState")
            .field("dims", &self.dims)
            .field("cell_size", &self.cell_size)
            .field("dt", &self.dt)
            .field("step", &self.step)
            .field("boundary", &self.boundary)
            .field("pml", &self.pml)
            .finish_non_exhaustive()
    }
}

fn offsets(n: usize, stride: usize) -> (Vec<isize>, Vec<isize>) {
    let s = stride as isize;
    let wrap = (n as isize - 1) * s;
    let fwd = (0..n).map(|x| if x + 1 < n { s } else { -wrap }).collect();
    let bwd = (0..n).map(|x| if x > 0 { -s } else { wrap }).collect();
    (fwd, bwd)
}

impl YeeState {
    /// Build a state over `map`, with a PML shell of `pml.thickness_cells`
    /// on every face of the axes marked [`Boundary::Pec`].
    pub fn new(map: &DielectricMap, pml: PmlSpec, boundary: [Boundary; 3]) -> Result<Self> {
        let [nx, ny, nz] = map.dims;
        for (a, &n) in map.dims.iter().enumerate() {
            if boundary[a] == Boundary::Pec && n < 2 * pml.thickness_cells + 2 {
                return Err(Error::config(format!(
                    "axis {a}: {n} cells cannot host two PML layers of {} cells",
                    pml.thickness_cells
                )));
            }
        }
        let dt = COURANT_SAFETY / 3f64.sqrt();
        let len = nx * ny * nz;

        let mut inv_eps = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let idx = map.index(i, j, k);
                    for (a, inv) in inv_eps.iter_mut().enumerate() {
                        inv[idx] = 1.0 / map.edge_permittivity(a, i, j, k);
                    }
                }
            }
        }

        let strides = [1, nx, nx * ny];
        let mut fwd: [Vec<isize>; 3] = Default::default();
        let mut bwd: [Vec<isize>; 3] = Default::default();
        let mut interior = [(0, 0); 3];
        let coeffs = std::array::from_fn(|a| {
            let absorbing = boundary[a] == Boundary::Pec;
            AxisCoefficients::new(&pml, map.dims[a], dt, absorbing)
        });
        for a in 0..3 {
            let (f, b) = offsets(map.dims[a], strides[a]);
            fwd[a] = f;
            bwd[a] = b;
            let t = if boundary[a] == Boundary::Pec { pml.thickness_cells } else { 0 };
            interior[a] = (t, map.dims[a] - t);
        }

        let zeros = || [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        Ok(YeeState {
            dims: map.dims,
            cell_size: map.cell_size,
            dt,
            step: 0,
            e: zeros(),
            h: zeros(),
            e_aux: zeros(),
            h_aux: zeros(),
            inv_eps,
            coeffs,
            fwd,
            bwd,
            boundary,
            pml,
            interior,
            pool: None,
        })
    }

    /// Homogeneous medium of relative permittivity `eps`.
    pub fn uniform(dims: [usize; 3], cell_size: f64, eps: f64, pml: PmlSpec, boundary: [Boundary; 3]) -> Result<Self> {
        let map = DielectricMap {
            permittivity: vec![eps; dims[0] * dims[1] * dims[2]],
            dims,
            cell_size,
            center: [dims[0] / 2, dims[1] / 2, dims[2] / 2],
            pml_cells: pml.thickness_cells,
            slab_index: eps.sqrt(),
        };
        Self::new(&map, pml, boundary)
    }

    /// Run field updates on a dedicated pool of `threads` workers.
    pub fn set_threads(&mut self, threads: usize) -> Result<()> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
        self.pool = Some(Arc::new(pool));
        Ok(())
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time step in seconds.
    pub fn dt_seconds(&self) -> f64 {
        self.dt * self.cell_size / crate::units::SPEED_OF_LIGHT
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    /// Time of the electric field, in units of Δ/c.
    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn pml(&self) -> PmlSpec {
        self.pml
    }

    pub fn boundary(&self) -> [Boundary; 3] {
        self.boundary
    }

    /// Non-PML cell range along each axis.
    pub fn interior(&self) -> [(usize, usize); 3] {
        self.interior
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn field(&self, c: Component) -> &[f64] {
        let a = c.axis();
        if c.is_electric() {
            &self.e[a]
        } else {
            &self.h[a]
        }
    }

    pub fn field_mut(&mut self, c: Component) -> &mut [f64] {
        let a = c.axis();
        if c.is_electric() {
            &mut self.e[a]
        } else {
            &mut self.h[a]
        }
    }

    pub fn get(&self, c: Component, i: usize, j: usize, k: usize) -> f64 {
        self.field(c)[self.index(i, j, k)]
    }

    /// Relative permittivity seen by the E component of `axis` at `idx`.
    pub fn permittivity(&self, axis: usize, idx: usize) -> f64 {
        1.0 / self.inv_eps[axis][idx]
    }

    /// Add a current density sample to an E component: `E −= dt J / ε`.
    pub fn inject(&mut self, axis: usize, idx: usize, current: f64) {
        self.e[axis][idx] -= self.dt * self.inv_eps[axis][idx] * current;
    }

    /// Advance one time step.
    pub fn step(&mut self) -> Result<()> {
        self.advance(false).map(|_| ())
    }

    /// Advance one step and return the discrete electromagnetic energy of the
    /// non-PML region at the starting time,
    /// `½ Σ (ε Eⁿ·Eⁿ + H^{n−½}·H^{n+½})`, which a lossless closed grid
    /// conserves exactly.
    pub fn step_with_energy(&mut self) -> Result<f64> {
        self.advance(true).map(|u| u.unwrap_or(0.0))
    }

    fn advance(&mut self, energy: bool) -> Result<Option<f64>> {
        let pool = self.pool.clone();
        let run = |s: &mut Self| {
            let ue = if energy { s.electric_energy() } else { 0.0 };
            let uh = s.update_h(energy);
            s.update_e();
            s.apply_pec();
            ue + 0.5 * uh
        };
        let u = match pool {
            Some(p) => p.install(|| run(self)),
            None => run(self),
        };
        self.step += 1;
        if self.step % 64 == 0 || !u.is_finite() {
            self.check_finite()?;
        }
        Ok(energy.then_some(u))
    }

    /// `½ Σ ε E²` over the non-PML region (cell volume 1).
    pub fn electric_energy(&self) -> f64 {
        let [nx, ny, _] = self.dims;
        let [(x0, x1), (y0, y1), (z0, z1)] = self.interior;
        let mut per_slab = vec![0.0; z1 - z0];
        per_slab.par_iter_mut().enumerate().for_each(|(dk, acc)| {
            let k = z0 + dk;
            let mut s = 0.0;
            for a in 0..3 {
                for j in y0..y1 {
                    let base = nx * (j + ny * k);
                    for i in x0..x1 {
                        let v = self.e[a][base + i];
                        s += v * v / self.inv_eps[a][base + i];
                    }
                }
            }
            *acc = s;
        });
        0.5 * per_slab.iter().sum::<f64>()
    }

    /// `½ Σ H²` over the non-PML region using the stored half-step H.
    pub fn magnetic_energy(&self) -> f64 {
        let [nx, ny, _] = self.dims;
        let [(x0, x1), (y0, y1), (z0, z1)] = self.interior;
        let mut s = 0.0;
        for k in z0..z1 {
            for a in 0..3 {
                for j in y0..y1 {
                    let base = nx * (j + ny * k);
                    s += self.h[a][base + x0..base + x1].iter().map(|v| v * v).sum::<f64>();
                }
            }
        }
        0.5 * s
    }

    fn update_h(&mut self, accumulate: bool) -> f64 {
        self.update_h_comp::<0, 1, 2>(accumulate)
            + self.update_h_comp::<1, 2, 0>(accumulate)
            + self.update_h_comp::<2, 0, 1>(accumulate)
    }

    /// `H_c −= dt (∂_p E_q − ∂_q E_p)` with forward differences.
    fn update_h_comp<const C: usize, const P: usize, const Q: usize>(&mut self, accumulate: bool) -> f64 {
        let [nx, ny, nz] = self.dims;
        let slab = nx * ny;
        let dt = self.dt;
        let (eq, ep) = (&self.e[Q], &self.e[P]);
        let (cp, cq) = (&self.coeffs[P], &self.coeffs[Q]);
        let (fp, fq) = (&self.fwd[P], &self.fwd[Q]);
        let interior = self.interior;
        let inside = |i: usize, j: usize, k: usize| {
            let [x, y, z] = interior;
            i >= x.0 && i < x.1 && j >= y.0 && j < y.1 && k >= z.0 && k < z.1
        };
        let mut sums = vec![0.0; nz];
        self.h[C]
            .par_chunks_mut(slab)
            .zip(self.h_aux[C].par_chunks_mut(slab))
            .zip(sums.par_iter_mut())
            .enumerate()
            .for_each(|(k, ((hs, aux), acc))| {
                let mut s = 0.0;
                for j in 0..ny {
                    let row = nx * j;
                    let base = slab * k + row;
                    for i in 0..nx {
                        let coord = [i, j, k];
                        let (xp, xq) = (coord[P], coord[Q]);
                        let idx = base + i;
                        let dp = eq[(idx as isize + fp[xp]) as usize] - eq[idx];
                        let dq = ep[(idx as isize + fq[xq]) as usize] - ep[idx];
                        let (dcp, dcq) = (cp.decay_half[xp], cq.decay_half[xq]);
                        let old = hs[row + i];
                        let new = if dcp == 1.0 && dcq == 1.0 {
                            old - dt * (dp - dq)
                        } else {
                            let a_old = aux[row + i];
                            let a_new = dcp * a_old - cp.gain_half[xp] * dp;
                            let r_new = dcq * (old - a_old) + cq.gain_half[xq] * dq;
                            aux[row + i] = a_new;
                            a_new + r_new
                        };
                        if accumulate && inside(i, j, k) {
                            s += old * new;
                        }
                        hs[row + i] = new;
                    }
                }
                *acc = s;
            });
        sums.iter().sum()
    }

    fn update_e(&mut self) {
        self.update_e_comp::<0, 1, 2>();
        self.update_e_comp::<1, 2, 0>();
        self.update_e_comp::<2, 0, 1>();
    }

    /// `E_c += dt/ε (∂_p H_q − ∂_q H_p)` with backward differences.
    fn update_e_comp<const C: usize, const P: usize, const Q: usize>(&mut self) {
        let [nx, ny, _] = self.dims;
        let slab = nx * ny;
        let dt = self.dt;
        let (hq, hp) = (&self.h[Q], &self.h[P]);
        let (cp, cq) = (&self.coeffs[P], &self.coeffs[Q]);
        let (bp, bq) = (&self.bwd[P], &self.bwd[Q]);
        let inv_eps = &self.inv_eps[C];
        self.e[C]
            .par_chunks_mut(slab)
            .zip(self.e_aux[C].par_chunks_mut(slab))
            .enumerate()
            .for_each(|(k, (es, aux))| {
                for j in 0..ny {
                    let row = nx * j;
                    let base = slab * k + row;
                    for i in 0..nx {
                        let coord = [i, j, k];
                        let (xp, xq) = (coord[P], coord[Q]);
                        let idx = base + i;
                        let ie = inv_eps[idx];
                        let dp = hq[idx] - hq[(idx as isize + bp[xp]) as usize];
                        let dq = hp[idx] - hp[(idx as isize + bq[xq]) as usize];
                        let (dcp, dcq) = (cp.decay_int[xp], cq.decay_int[xq]);
                        let old = es[row + i];
                        es[row + i] = if dcp == 1.0 && dcq == 1.0 {
                            old + dt * ie * (dp - dq)
                        } else {
                            let a_old = aux[row + i];
                            let a_new = dcp * a_old + cp.gain_int[xp] * ie * dp;
                            let r_new = dcq * (old - a_old) - cq.gain_int[xq] * ie * dq;
                            aux[row + i] = a_new;
                            a_new + r_new
                        };
                    }
                }
            });
    }

    fn apply_pec(&mut self) {
        let [nx, ny, nz] = self.dims;
        for wall in 0..3 {
            if self.boundary[wall] != Boundary::Pec {
                continue;
            }
            for c in (0..3).filter(|&c| c != wall) {
                let f = &mut self.e[c];
                match wall {
                    0 => (0..ny * nz).for_each(|r| f[r * nx] = 0.0),
                    1 => (0..nz).for_each(|k| f[k * nx * ny..k * nx * ny + nx].fill(0.0)),
                    _ => f[..nx * ny].fill(0.0),
                }
            }
        }
    }

    fn check_finite(&self) -> Result<()> {
        for (name, f) in ["Ex", "Ey", "Ez"].iter().zip(&self.e).chain(["Hx", "Hy", "Hz"].iter().zip(&self.h)) {
            if let Some(pos) = f.iter().position(|v| !v.is_finite()) {
                return Err(Error::Unstable {
                    step: self.step,
                    detail: format!("{name} is not finite at flat index {pos}; check dt and material data"),
                });
            }
        }
        Ok(())
    }

    /// Net outward Poynting flux `∮ (E × H)·n dA` through the faces of the box
    /// of nodes `lo..=hi`, using the stored E and H (cell area 1).
    pub fn poynting_flux(&self, lo: [usize; 3], hi: [usize; 3]) -> f64 {
        let mut total = 0.0;
        for n in 0..3 {
            let (t1, t2) = ((n + 1) % 3, (n + 2) % 3);
            for (plane, sign) in [(lo[n], -1.0), (hi[n], 1.0)] {
                let mut s = 0.0;
                for u in lo[t1]..hi[t1] {
                    for v in lo[t2]..hi[t2] {
                        let mut at = [0usize; 3];
                        at[n] = plane;
                        // E_t1 sample at (plane, u+½, v) and E_t2 at (plane, u, v+½)
                        at[t1] = u;
                        at[t2] = v;
                        let idx = self.index(at[0], at[1], at[2]);
                        let mut below = at;
                        below[n] = plane - 1;
                        let idx_b = self.index(below[0], below[1], below[2]);
                        // H_t2 at (plane±½, u+½, v): average across the plane
                        let h_t2 = 0.5 * (self.h[t2][idx] + self.h[t2][idx_b]);
                        let h_t1 = 0.5 * (self.h[t1][idx] + self.h[t1][idx_b]);
                        s += self.e[t1][idx] * h_t2 - self.e[t2][idx] * h_t1;
                    }
                }
                total += sign * s;
            }
        }
        total
    }

    /// Zero every field and auxiliary array and reset the step counter.
    pub fn clear(&mut self) {
        for f in self.e.iter_mut().chain(self.h.iter_mut()).chain(self.e_aux.iter_mut()).chain(self.h_aux.iter_mut()) {
            f.fill(0.0);
        }
        self.step = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_fields_stay_zero() {
        let mut s = YeeState::uniform([12, 12, 12], 1e-8, 2.0, PmlSpec::new(3), [Boundary::Pec; 3]).unwrap();
        for _ in 0..20 {
            s.step().unwrap();
        }
        assert!(s.e.iter().chain(&s.h).all(|f| f.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn closed_box_conserves_energy() {
        let mut s = YeeState::uniform([16, 14, 12], 1e-8, 1.0, PmlSpec::none(), [Boundary::Pec; 3]).unwrap();
        let idx = s.index(7, 6, 5);
        s.e[2][idx] = 1.0;
        let u0 = s.step_with_energy().unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let u = s.step_with_energy().unwrap();
            worst = worst.max((u - u0).abs() / u0);
        }
        assert!(worst < 1e-10, "relative drift {worst}");
    }

    #[test]
    fn nan_aborts_with_stability_error() {
        let mut s = YeeState::uniform([10, 10, 10], 1e-8, 1.0, PmlSpec::none(), [Boundary::Pec; 3]).unwrap();
        let idx = s.index(5, 5, 5);
        s.e[0][idx] = f64::NAN;
        let err = (0..64).try_for_each(|_| s.step()).unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
    }

    #[test]
    fn pec_walls_pin_tangential_e() {
        let mut s = YeeState::uniform([10, 10, 10], 1e-8, 1.0, PmlSpec::none(), [Boundary::Pec; 3]).unwrap();
        let idx = s.index(1, 1, 1);
        s.h[2][idx] = 1.0;
        for _ in 0..30 {
            s.step().unwrap();
        }
        for j in 0..10 {
            for k in 0..10 {
                assert_eq!(s.get(Component::Ey, 0, j, k), 0.0);
                assert_eq!(s.get(Component::Ez, 0, j, k), 0.0);
            }
        }
    }
}
