//! Agent-based model: `N` self-propelled rods in a periodic square box with
//! nematic alignment, angle-dependent multiplicative noise and optional
//! density-dependent reversals.
//!
//! Neighbor sums use a uniform cell grid swept row by row: cells lying
//! entirely inside an interaction disc contribute through row prefix sums,
//! and only cells cut by the circle are scanned particle by particle.

use std::f64::consts::PI;

use thiserror::Error;

use crate::angle::{wrap_angle, wrap_line};
use crate::gvm::{sample, GvmParams, Side};
use crate::numerics::RngStream;

/// `|J|` below this marks an isotropic neighborhood.
pub const ISOTROPY_FLOOR: f64 = 1e-12;
/// `|cos(Θ - Θ̄)|` at or below this counts as the boundary line, where the
/// alignment drift vanishes.
pub const BOUNDARY_COS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParticleError {
    #[error("SimParams invariant violated: {0}")]
    InvalidParams(String),
    #[error("ParticleState invariant violated: {0}")]
    InvalidState(String),
}

/// How the multiplicative noise is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseConvention {
    /// Adds the noise-induced drift `-d sin 2(Θ - Θ̄)` so that the
    /// stationary law of the angle is the GVM distribution.
    #[default]
    Kinetic,
    /// Plain Itô increments.
    Ito,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub n: usize,
    pub box_length: f64,
    pub radius: f64,
    pub v0: f64,
    pub nu: f64,
    pub d_noise: f64,
    pub dt: f64,
    pub reversals: bool,
    pub lambda0: f64,
    pub lambda1: f64,
    pub seed: u64,
    pub noise: NoiseConvention,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            n: 1000,
            box_length: 1.0,
            radius: 0.1,
            v0: 1.0,
            nu: 1.0,
            d_noise: 0.5,
            dt: 0.01,
            reversals: false,
            lambda0: 0.0,
            lambda1: 0.0,
            seed: 0,
            noise: NoiseConvention::Kinetic,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), ParticleError> {
        let bad = |m: String| Err(ParticleError::InvalidParams(m));
        let finite_nonneg = [
            ("v0", self.v0),
            ("nu", self.nu),
            ("d_noise", self.d_noise),
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
        ];
        for (name, v) in finite_nonneg {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and >= 0 (got {v})"));
            }
        }
        if !(self.box_length.is_finite() && self.box_length > 0.0) {
            return bad(format!("box_length must be > 0 (got {})", self.box_length));
        }
        if !(self.radius.is_finite() && self.radius > 0.0 && self.radius < 0.5 * self.box_length) {
            return bad(format!(
                "radius must satisfy 0 < R < box_length/2 (got R={}, L={})",
                self.radius, self.box_length
            ));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be > 0 (got {})", self.dt));
        }
        if self.nu * self.dt > 0.1 {
            return bad(format!("nu*dt must be <= 0.1 (got {})", self.nu * self.dt));
        }
        if self.n == 0 {
            return bad("n must be >= 1".into());
        }
        Ok(())
    }

    /// Effective concentration `κ = ν/d`.
    pub fn kappa_eff(&self) -> f64 {
        self.nu / self.d_noise
    }

    /// Area `πR²` of the interaction disc.
    pub fn disc_area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    /// Reversal frequency `λ(ρ) = λ1 ρ² + λ0`.
    pub fn reversal_rate(&self, rho: f64) -> f64 {
        self.lambda1 * rho * rho + self.lambda0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub positions: Vec<[f64; 2]>,
    pub angles: Vec<f64>,
    pub time: f64,
    /// Number of steps taken; keys the per-step random streams.
    pub steps: u64,
}

fn wrap_coord(x: f64, l: f64) -> f64 {
    let r = x.rem_euclid(l);
    if r >= l {
        0.0
    } else {
        r
    }
}

impl ParticleState {
    pub fn new(positions: Vec<[f64; 2]>, angles: Vec<f64>, box_length: f64) -> Result<Self, ParticleError> {
        if positions.len() != angles.len() {
            return Err(ParticleError::InvalidState(format!(
                "{} positions but {} angles",
                positions.len(),
                angles.len()
            )));
        }
        if positions.iter().flatten().chain(&angles).any(|v| !v.is_finite()) {
            return Err(ParticleError::InvalidState("non-finite coordinate".into()));
        }
        Ok(Self {
            positions: positions
                .into_iter()
                .map(|[x, y]| [wrap_coord(x, box_length), wrap_coord(y, box_length)])
                .collect(),
            angles: angles.into_iter().map(wrap_angle).collect(),
            time: 0.0,
            steps: 0,
        })
    }

    /// Uniform positions, angles drawn from the GVM mixture with a fraction
    /// `plus_fraction` on the `cos(θ - θ0) > 0` side.
    pub fn homogeneous(params: &SimParams, gvm: GvmParams, plus_fraction: f64, rng: &mut RngStream) -> Self {
        let n = params.n;
        let n_plus = ((plus_fraction.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
        let mut angles = sample(gvm, Side::Plus, n_plus, rng);
        angles.extend(sample(gvm, Side::Minus, n - n_plus, rng));
        let l = params.box_length;
        let positions = (0..n).map(|_| [rng.uniform() * l, rng.uniform() * l]).collect();
        Self {
            positions,
            angles,
            time: 0.0,
            steps: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Mean line angle `θ̄` with `v(2θ̄) = J/|J|`, `J = Σ v(2θ_k)`; `None` when
/// `|J|` vanishes.
pub fn nematic_mean_angle(angles: &[f64]) -> Option<f64> {
    let (c, s) = angles
        .iter()
        .fold((0.0, 0.0), |(c, s), &t| (c + (2.0 * t).cos(), s + (2.0 * t).sin()));
    mean_from_current(c, s, angles.len() as f64)
}

fn mean_from_current(jx: f64, jy: f64, count: f64) -> Option<f64> {
    if jx.hypot(jy) < ISOTROPY_FLOOR * count.max(1.0) {
        None
    } else {
        Some(wrap_line(0.5 * jy.atan2(jx)))
    }
}

/// `|Σ v(2θ_k)| / N`.
pub fn nematic_order(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return 0.0;
    }
    let (c, s) = angles
        .iter()
        .fold((0.0, 0.0), |(c, s), &t| (c + (2.0 * t).cos(), s + (2.0 * t).sin()));
    c.hypot(s) / angles.len() as f64
}

/// Neighborhood data of one particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalField {
    /// Nematic current `Σ v(2Θ_k)` over neighbors, self included.
    pub current: [f64; 2],
    pub neighbors: usize,
    pub theta_bar: Option<f64>,
    /// `(ρ+, ρ-)`, only filled when densities were requested.
    pub densities: Option<(f64, f64)>,
}

#[inline]
fn min_image(d: f64, l: f64) -> f64 {
    if d > 0.5 * l {
        d - l
    } else if d < -0.5 * l {
        d + l
    } else {
        d
    }
}

/// Sums of `(cos 2Θ, sin 2Θ, 1)` over the points within `√r2` of `(ox, oy)`.
#[inline]
fn rim_sum(pts: &[[f64; 4]], ox: f64, oy: f64, r2: f64) -> [f64; 3] {
    let mut acc = [[0.0f64; 3]; 2];
    let mut pairs = pts.chunks_exact(2);
    for pair in &mut pairs {
        for (a, p) in acc.iter_mut().zip(pair) {
            let (dx, dy) = (p[0] - ox, p[1] - oy);
            let w = if dx * dx + dy * dy <= r2 { 1.0 } else { 0.0 };
            a[0] += w * p[2];
            a[1] += w * p[3];
            a[2] += w;
        }
    }
    for p in pairs.remainder() {
        let (dx, dy) = (p[0] - ox, p[1] - oy);
        let w = if dx * dx + dy * dy <= r2 { 1.0 } else { 0.0 };
        acc[0][0] += w * p[2];
        acc[0][1] += w * p[3];
        acc[0][2] += w;
    }
    [acc[0][0] + acc[1][0], acc[0][1] + acc[1][1], acc[0][2] + acc[1][2]]
}

/// Cell grid over the periodic box.
///
/// Each particle's interaction disc is swept row by row. In a row of cells
/// the columns whose cells lie entirely inside the disc form one chord and
/// are summed from row prefix sums; only the cells cut by the circle are
/// checked particle by particle, with the periodic image fixed by the row
/// and column offsets.
#[derive(Debug, Clone)]
pub struct NeighborGrid {
    m: usize,
    h: f64,
    l: f64,
    r: f64,
    start: Vec<usize>,
    order: Vec<usize>,
    /// `(x, y, cos 2Θ, sin 2Θ)` per particle in cell order.
    packed: Vec<[f64; 4]>,
    /// Row prefix sums of `cos 2Θ`, `sin 2Θ` and counts, `m + 1` per row.
    pc: Vec<f64>,
    ps: Vec<f64>,
    pn: Vec<usize>,
}

/// Shrink factor on inner chords so that rounding never promotes a cell
/// cut by the circle to a fully covered one.
const CHORD_SAFETY: f64 = 1.0 - 1e-12;

impl NeighborGrid {
    /// Cells per side giving roughly ten particles per cell, which balances
    /// per-row bookkeeping against exact distance checks on the rim.
    pub fn default_cells(params: &SimParams) -> usize {
        ((params.n as f64).sqrt() / 3.0).ceil().clamp(1.0, 1024.0) as usize
    }

    pub fn build(state: &ParticleState, params: &SimParams, m: usize) -> Self {
        let m = m.max(1);
        let l = params.box_length;
        let h = l / m as f64;
        let cell_of = |p: &[f64; 2]| {
            let cx = ((p[0] / h) as usize).min(m - 1);
            let cy = ((p[1] / h) as usize).min(m - 1);
            cy * m + cx
        };
        let mut start = vec![0usize; m * m + 1];
        for p in &state.positions {
            start[cell_of(p) + 1] += 1;
        }
        for i in 0..m * m {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut order = vec![0; state.len()];
        for (i, p) in state.positions.iter().enumerate() {
            let c = cell_of(p);
            order[fill[c]] = i;
            fill[c] += 1;
        }
        let xs: Vec<f64> = order.iter().map(|&i| state.positions[i][0]).collect();
        let ys: Vec<f64> = order.iter().map(|&i| state.positions[i][1]).collect();
        let c2: Vec<f64> = order.iter().map(|&i| (2.0 * state.angles[i]).cos()).collect();
        let s2: Vec<f64> = order.iter().map(|&i| (2.0 * state.angles[i]).sin()).collect();

        let mut pc = vec![0.0; m * (m + 1)];
        let mut ps = vec![0.0; m * (m + 1)];
        let mut pn = vec![0usize; m * (m + 1)];
        for y in 0..m {
            let base = y * (m + 1);
            for x in 0..m {
                let c = y * m + x;
                let (cs, ss) = (start[c]..start[c + 1]).fold((0.0, 0.0), |(a, b), k| (a + c2[k], b + s2[k]));
                pc[base + x + 1] = pc[base + x] + cs;
                ps[base + x + 1] = ps[base + x] + ss;
                pn[base + x + 1] = pn[base + x] + (start[c + 1] - start[c]);
            }
        }
        Self {
            m,
            h,
            l,
            r: params.radius,
            start,
            order,
            packed: (0..xs.len()).map(|k| [xs[k], ys[k], c2[k], s2[k]]).collect(),
            pc,
            ps,
            pn,
        }
    }

    /// Wrapped index and image shift of a signed cell coordinate.
    #[inline]
    fn wrap(&self, c: i64) -> (usize, f64) {
        let m = self.m as i64;
        let (mut c, mut shift) = (c, 0.0);
        while c < 0 {
            c += m;
            shift -= self.l;
        }
        while c >= m {
            c -= m;
            shift += self.l;
        }
        (c as usize, shift)
    }

    /// Aggregates over the signed column range `lo..=hi` of row `y`
    /// (at most `m` columns).
    #[inline]
    fn row_sum(&self, y: usize, lo: i64, hi: i64) -> (f64, f64, usize) {
        let base = y * (self.m + 1);
        let seg = |a: usize, b: usize| {
            (
                self.pc[base + b] - self.pc[base + a],
                self.ps[base + b] - self.ps[base + a],
                self.pn[base + b] - self.pn[base + a],
            )
        };
        let (a, _) = self.wrap(lo);
        let len = (hi - lo + 1) as usize;
        if a + len <= self.m {
            seg(a, a + len)
        } else {
            let (c1, s1, n1) = seg(a, self.m);
            let (c2, s2, n2) = seg(0, a + len - self.m);
            (c1 + c2, s1 + s2, n1 + n2)
        }
    }

    /// Particle index ranges covering the signed column range `lo..=hi` of
    /// row `y`.
    #[inline]
    fn row_ranges(&self, y: usize, lo: i64, hi: i64) -> [(usize, usize); 2] {
        let row = y * self.m;
        let (a, _) = self.wrap(lo);
        let len = (hi - lo + 1) as usize;
        if a + len <= self.m {
            [(self.start[row + a], self.start[row + a + len]), (0, 0)]
        } else {
            [
                (self.start[row + a], self.start[row + self.m]),
                (self.start[row], self.start[row + a + len - self.m]),
            ]
        }
    }

    /// Sweep the disc around `(x, y)`. `inside(row, lo, hi)` receives fully
    /// covered column ranges; `rim(q0, q1, ox, oy)` receives the particle
    /// range of a cut cell together with the disc center expressed in that
    /// cell's image.
    #[inline]
    fn sweep<I: FnMut(usize, i64, i64), B: FnMut(usize, usize, f64, f64)>(&self, x: f64, y: f64, mut inside: I, mut rim: B) {
        let (h, r) = (self.h, self.r);
        let r2 = r * r;
        let row_lo = ((y - r) / h).floor() as i64;
        let row_hi = ((y + r) / h).floor() as i64;
        for ry in row_lo..=row_hi {
            let (row, shift_y) = self.wrap(ry);
            let (y0, y1) = (ry as f64 * h, (ry + 1) as f64 * h);
            let near = if y < y0 {
                y0 - y
            } else if y > y1 {
                y - y1
            } else {
                0.0
            };
            if near > r {
                continue;
            }
            let far = (y - y0).abs().max((y1 - y).abs());
            let w_out = (r2 - near * near).sqrt();
            let (co0, co1) = (((x - w_out) / h).floor() as i64, ((x + w_out) / h).floor() as i64);
            let (a, b) = if far < r {
                let w_in = (r2 - far * far).sqrt() * CHORD_SAFETY;
                (((x - w_in) / h).ceil() as i64, ((x + w_in) / h).floor() as i64 - 1)
            } else {
                (co1 + 1, co1)
            };
            if a <= b {
                inside(row, a, b);
            }
            let mut check = |cx: i64| {
                let (col, shift_x) = self.wrap(cx);
                let t = row * self.m + col;
                rim(self.start[t], self.start[t + 1], x - shift_x, y - shift_y);
            };
            if a <= b {
                (co0..a).for_each(&mut check);
                (b + 1..=co1).for_each(&mut check);
            } else {
                (co0..=co1).for_each(&mut check);
            }
        }
    }

    /// Neighborhood data for every particle, indexed like the state. With
    /// `densities` the `ρ±` counts against each particle's own `θ̄` are
    /// added, which needs a full neighbor enumeration.
    pub fn fields(&self, state: &ParticleState, params: &SimParams, densities: bool) -> Vec<LocalField> {
        let mut out = vec![
            LocalField {
                current: [0.0; 2],
                neighbors: 0,
                theta_bar: None,
                densities: None,
            };
            state.len()
        ];
        let (cos_t, sin_t): (Vec<f64>, Vec<f64>) = if densities {
            self.order.iter().map(|&i| (state.angles[i].cos(), state.angles[i].sin())).unzip()
        } else {
            (Vec::new(), Vec::new())
        };
        let area = params.disc_area();
        let r2 = self.r * self.r;
        for k in 0..self.order.len() {
            let [x, y, _, _] = self.packed[k];
            let (mut c, mut s, mut n) = (0.0, 0.0, 0usize);
            let mut rim_c = 0.0;
            let mut rim_s = 0.0;
            let mut rim_n = 0.0;
            self.sweep(
                x,
                y,
                |row, lo, hi| {
                    let (dc, ds, dn) = self.row_sum(row, lo, hi);
                    c += dc;
                    s += ds;
                    n += dn;
                },
                |q0, q1, ox, oy| {
                    let [dc, ds, dn] = rim_sum(&self.packed[q0..q1], ox, oy, r2);
                    rim_c += dc;
                    rim_s += ds;
                    rim_n += dn;
                },
            );
            let rim_n = rim_n as usize;
            let (c, s, n) = (c + rim_c, s + rim_s, n + rim_n);
            let theta_bar = mean_from_current(c, s, n as f64);
            let dens = densities.then(|| {
                let (cb, sb) = theta_bar.map_or((1.0, 0.0), |t| (t.cos(), t.sin()));
                let plus_side = |q: usize| cos_t[q] * cb + sin_t[q] * sb >= 0.0;
                let mut plus_in = 0usize;
                let mut plus_rim = 0usize;
                let mut inner = 0usize;
                self.sweep(
                    x,
                    y,
                    |row, lo, hi| {
                        for (q0, q1) in self.row_ranges(row, lo, hi) {
                            plus_in += (q0..q1).filter(|&q| plus_side(q)).count();
                        }
                    },
                    |q0, q1, ox, oy| {
                        for q in q0..q1 {
                            let (dx, dy) = (self.packed[q][0] - ox, self.packed[q][1] - oy);
                            let hit = dx * dx + dy * dy <= r2;
                            inner += usize::from(hit);
                            plus_rim += usize::from(hit & plus_side(q));
                        }
                    },
                );
                let plus = plus_in + plus_rim;
                debug_assert_eq!(inner, rim_n);
                (plus as f64 / area, (n - plus) as f64 / area)
            });
            out[self.order[k]] = LocalField {
                current: [c, s],
                neighbors: n,
                theta_bar,
                densities: dens,
            };
        }
        out
    }
}

/// Neighborhood data by direct `O(N²)` enumeration.
pub fn brute_force_fields(state: &ParticleState, params: &SimParams, densities: bool) -> Vec<LocalField> {
    let l = params.box_length;
    let r2 = params.radius * params.radius;
    let area = params.disc_area();
    let near = |i: usize, k: usize| {
        let dx = min_image(state.positions[k][0] - state.positions[i][0], l);
        let dy = min_image(state.positions[k][1] - state.positions[i][1], l);
        dx * dx + dy * dy <= r2
    };
    (0..state.len())
        .map(|i| {
            let nb: Vec<usize> = (0..state.len()).filter(|&k| near(i, k)).collect();
            let (c, s) = nb.iter().fold((0.0, 0.0), |(c, s), &k| {
                (c + (2.0 * state.angles[k]).cos(), s + (2.0 * state.angles[k]).sin())
            });
            let theta_bar = mean_from_current(c, s, nb.len() as f64);
            let dens = densities.then(|| {
                let tb = theta_bar.unwrap_or(0.0);
                let plus = nb.iter().filter(|&&k| (state.angles[k] - tb).cos() >= 0.0).count();
                (plus as f64 / area, (nb.len() - plus) as f64 / area)
            });
            LocalField {
                current: [c, s],
                neighbors: nb.len(),
                theta_bar,
                densities: dens,
            }
        })
        .collect()
}

/// `(ρ+_i, ρ-_i)` for particle `i`.
pub fn local_densities(state: &ParticleState, params: &SimParams, i: usize) -> (f64, f64) {
    let l = params.box_length;
    let r2 = params.radius * params.radius;
    let near: Vec<usize> = (0..state.len())
        .filter(|&k| {
            let dx = min_image(state.positions[k][0] - state.positions[i][0], l);
            let dy = min_image(state.positions[k][1] - state.positions[i][1], l);
            dx * dx + dy * dy <= r2
        })
        .collect();
    let (c, s) = near.iter().fold((0.0, 0.0), |(c, s), &k| {
        (c + (2.0 * state.angles[k]).cos(), s + (2.0 * state.angles[k]).sin())
    });
    let tb = mean_from_current(c, s, near.len() as f64).unwrap_or(0.0);
    let plus = near.iter().filter(|&&k| (state.angles[k] - tb).cos() >= 0.0).count();
    let area = params.disc_area();
    (plus as f64 / area, (near.len() - plus) as f64 / area)
}

/// Single-particle Euler–Maruyama update from a frozen neighborhood.
fn advance_angle(theta: f64, field: &LocalField, params: &SimParams, rng: &mut RngStream) -> f64 {
    let xi = rng.normal();
    let u = rng.uniform();
    let dt = params.dt;
    let mut next = match field.theta_bar {
        Some(tb) => {
            let (s, c) = (theta - tb).sin_cos();
            let sign = if c.abs() <= BOUNDARY_COS { 0.0 } else { c.signum() };
            let mut drift = -params.nu * sign * s;
            if params.noise == NoiseConvention::Kinetic {
                drift -= params.d_noise * 2.0 * s * c;
            }
            theta + drift * dt + (2.0 * params.d_noise * dt).sqrt() * c.abs() * xi
        }
        None => theta + (2.0 * params.d_noise * dt).sqrt() * xi,
    };
    if params.reversals {
        let opposing = match (field.theta_bar, field.densities) {
            (Some(tb), Some((plus, minus))) => {
                if (theta - tb).cos() >= 0.0 {
                    minus
                } else {
                    plus
                }
            }
            _ => 0.0,
        };
        if u < -(-params.reversal_rate(opposing) * dt).exp_m1() {
            next += PI;
        }
    }
    wrap_angle(next)
}

fn finish_step(state: &ParticleState, params: &SimParams, fields: &[LocalField]) -> ParticleState {
    let l = params.box_length;
    let mut angles = Vec::with_capacity(state.len());
    let mut positions = Vec::with_capacity(state.len());
    for (i, field) in fields.iter().enumerate() {
        let mut rng = RngStream::keyed(params.seed, i as u64, state.steps);
        let theta = advance_angle(state.angles[i], field, params, &mut rng);
        let [x, y] = state.positions[i];
        let (s, c) = theta.sin_cos();
        positions.push([
            wrap_coord(x + params.v0 * c * params.dt, l),
            wrap_coord(y + params.v0 * s * params.dt, l),
        ]);
        angles.push(theta);
    }
    ParticleState {
        positions,
        angles,
        time: state.time + params.dt,
        steps: state.steps + 1,
    }
}

/// One time step. All neighborhood data is taken from `state`.
pub fn step(state: &ParticleState, params: &SimParams) -> ParticleState {
    let grid = NeighborGrid::build(state, params, NeighborGrid::default_cells(params));
    let fields = grid.fields(state, params, params.reversals);
    finish_step(state, params, &fields)
}

/// [`step`] using the brute-force neighborhood.
pub fn step_reference(state: &ParticleState, params: &SimParams) -> ParticleState {
    let fields = brute_force_fields(state, params, params.reversals);
    finish_step(state, params, &fields)
}

/// Per-slab coarse-grained fields along `x₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabField {
    pub x: f64,
    pub count: usize,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub theta_bar: Option<f64>,
}

pub fn measure_fields(state: &ParticleState, params: &SimParams, n_bins: usize) -> Vec<SlabField> {
    let n_bins = n_bins.max(1);
    let l = params.box_length;
    let w = l / n_bins as f64;
    let mut bins: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for (p, &t) in state.positions.iter().zip(&state.angles) {
        bins[((p[0] / w) as usize).min(n_bins - 1)].push(t);
    }
    let area = w * l;
    bins.iter()
        .enumerate()
        .map(|(b, angles)| {
            let theta_bar = nematic_mean_angle(angles);
            let plus = theta_bar.map_or(0, |tb| angles.iter().filter(|&&t| (t - tb).cos() >= 0.0).count());
            let minus = if theta_bar.is_some() { angles.len() - plus } else { 0 };
            SlabField {
                x: (b as f64 + 0.5) * w,
                count: angles.len(),
                rho_plus: plus as f64 / area,
                rho_minus: minus as f64 / area,
                theta_bar,
            }
        })
        .collect()
}

/// Slab fields with the sides fixed by a common line `theta_ref` instead
/// of each slab's own mean.
pub fn measure_fields_against(state: &ParticleState, params: &SimParams, n_bins: usize, theta_ref: f64) -> Vec<SlabField> {
    let n_bins = n_bins.max(1);
    let l = params.box_length;
    let w = l / n_bins as f64;
    let mut plus = vec![0usize; n_bins];
    let mut count = vec![0usize; n_bins];
    let mut angles: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for (p, &t) in state.positions.iter().zip(&state.angles) {
        let b = ((p[0] / w) as usize).min(n_bins - 1);
        count[b] += 1;
        angles[b].push(t);
        if (t - theta_ref).cos() >= 0.0 {
            plus[b] += 1;
        }
    }
    let area = w * l;
    (0..n_bins)
        .map(|b| SlabField {
            x: (b as f64 + 0.5) * w,
            count: count[b],
            rho_plus: plus[b] as f64 / area,
            rho_minus: (count[b] - plus[b]) as f64 / area,
            theta_bar: nematic_mean_angle(&angles[b]),
        })
        .collect()
}
