//! Uniform periodic meshes over `[-π, π)^d` and the discrete calculus used by
//! every other module.
//!
//! Nodes sit at `x_j = (j - n/2)·h` with `h = 2π/n`, so `x_0 = -π`, the node
//! `j = n/2` is exactly the origin and `+π` is not stored (it is identified
//! with `-π`). Only even `n` is accepted: a node-sampled kernel can then be
//! evaluated at every pairwise node displacement, which is what circular
//! convolution needs.
//!
//! Values are laid out component-planar, and within a component row-major
//! with axis 0 slowest.

mod csv;
mod spectral;

pub use self::csv::{read_csv, write_csv};
pub use self::spectral::{
    circular_convolve_direct, spectral_divergence, spectral_gradient, spectral_laplacian,
    Convolver, SpectralPlan,
};

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PeriodicMesh {
    dim: usize,
    n: usize,
}

impl PeriodicMesh {
    pub fn new(dim: usize, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidMesh(format!("dim must be 1 or 2, got {dim}")));
        }
        if points_per_axis < 4 || points_per_axis % 2 != 0 {
            return Err(Error::InvalidMesh(format!(
                "points per axis must be even and at least 4, got {points_per_axis}"
            )));
        }
        Ok(PeriodicMesh {
            dim,
            n: points_per_axis,
        })
    }

    pub fn line(n: usize) -> Result<Self> {
        Self::new(1, n)
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(2, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    /// Total number of nodes, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `h^dim`, the quadrature weight of every node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Domain measure `(2π)^dim`.
    pub fn volume(&self) -> f64 {
        TAU.powi(self.dim as i32)
    }

    /// Coordinate of node `j` along any axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn axis_coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coordinate(j)).collect()
    }

    /// Per-axis indices of a flat node index (unused axes are 0).
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.n, idx % self.n],
        }
    }

    pub fn ravel(&self, ij: [usize; 2]) -> usize {
        match self.dim {
            1 => ij[0],
            _ => ij[0] * self.n + ij[1],
        }
    }

    /// Coordinates of a flat node index; unused axes are 0.
    pub fn node(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.unravel(idx);
        match self.dim {
            1 => [self.coordinate(i), 0.0],
            _ => [self.coordinate(i), self.coordinate(j)],
        }
    }

    /// Flat index of the node mirrored through the origin (`x → -x`).
    pub fn mirror(&self, idx: usize) -> usize {
        let [i, j] = self.unravel(idx);
        let n = self.n;
        self.ravel([(n - i) % n, (n - j) % n])
    }

    /// Flat index of the node `shift` steps away along `axis`, wrapping.
    pub fn shifted(&self, idx: usize, axis: usize, shift: isize) -> usize {
        let mut ij = self.unravel(idx);
        let n = self.n as isize;
        ij[axis] = (ij[axis] as isize + shift).rem_euclid(n) as usize;
        self.ravel(ij)
    }

    pub(crate) fn describe(&self) -> String {
        format!("dim={} n={}", self.dim, self.n)
    }

    pub(crate) fn ensure_same(&self, other: &PeriodicMesh) -> Result<()> {
        if self != other {
            return Err(Error::MeshMismatch {
                left: self.describe(),
                right: other.describe(),
            });
        }
        Ok(())
    }
}

/// A field sampled on a [`PeriodicMesh`]: scalar (`components == 1`) or vector
/// (`components == dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    mesh: PeriodicMesh,
    components: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(mesh: PeriodicMesh, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::Shape(
                "a grid function needs at least one component".into(),
            ));
        }
        if values.len() != mesh.len() * components {
            return Err(Error::Shape(format!(
                "expected {} values ({} nodes x {} components), got {}",
                mesh.len() * components,
                mesh.len(),
                components,
                values.len()
            )));
        }
        Ok(GridFunction {
            mesh,
            components,
            values,
        })
    }

    pub fn scalar(mesh: PeriodicMesh, values: Vec<f64>) -> Result<Self> {
        Self::new(mesh, 1, values)
    }

    /// Builds a vector field from one array per component.
    pub fn from_components(mesh: PeriodicMesh, comps: Vec<Vec<f64>>) -> Result<Self> {
        let c = comps.len();
        let values = comps.into_iter().flatten().collect();
        Self::new(mesh, c, values)
    }

    pub fn zeros(mesh: PeriodicMesh, components: usize) -> Self {
        GridFunction {
            mesh,
            components: components.max(1),
            values: vec![0.0; mesh.len() * components.max(1)],
        }
    }

    pub fn constant(mesh: PeriodicMesh, value: f64) -> Self {
        GridFunction {
            mesh,
            components: 1,
            values: vec![value; mesh.len()],
        }
    }

    /// Samples a scalar function at every node. The closure receives the node
    /// coordinates (length `dim`).
    pub fn from_fn(mesh: PeriodicMesh, f: impl Fn(&[f64]) -> f64) -> Self {
        let d = mesh.dim();
        let values = (0..mesh.len()).map(|idx| f(&mesh.node(idx)[..d])).collect();
        GridFunction {
            mesh,
            components: 1,
            values,
        }
    }

    /// Samples a vector function with `components` outputs at every node.
    pub fn vector_from_fn(
        mesh: PeriodicMesh,
        components: usize,
        f: impl Fn(&[f64], &mut [f64]),
    ) -> Self {
        let len = mesh.len();
        let d = mesh.dim();
        let mut values = vec![0.0; len * components];
        let mut out = vec![0.0; components];
        for idx in 0..len {
            f(&mesh.node(idx)[..d], &mut out);
            for (c, v) in out.iter().enumerate() {
                values[c * len + idx] = *v;
            }
        }
        GridFunction {
            mesh,
            components,
            values,
        }
    }

    pub fn mesh(&self) -> &PeriodicMesh {
        &self.mesh
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_scalar(&self) -> bool {
        self.components == 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let len = self.mesh.len();
        &self.values[c * len..(c + 1) * len]
    }

    pub fn component_field(&self, c: usize) -> GridFunction {
        GridFunction {
            mesh: self.mesh,
            components: 1,
            values: self.component(c).to_vec(),
        }
    }

    /// Value of component `c` at flat node `idx`.
    pub fn at(&self, idx: usize, c: usize) -> f64 {
        self.values[c * self.mesh.len() + idx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            mesh: self.mesh,
            components: self.components,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(
        &self,
        other: &GridFunction,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<GridFunction> {
        self.mesh.ensure_same(&other.mesh)?;
        if self.components != other.components {
            return Err(Error::Shape(format!(
                "component mismatch: {} vs {}",
                self.components, other.components
            )));
        }
        Ok(GridFunction {
            mesh: self.mesh,
            components: self.components,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, s: f64) -> GridFunction {
        self.map(|v| v * s)
    }

    pub fn shifted(&self, s: f64) -> GridFunction {
        self.map(|v| v + s)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L² norm over the domain, all components combined.
    pub fn l2_norm(&self) -> f64 {
        (self.mesh.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Index and value of the smallest entry of the first component.
    pub fn argmin(&self) -> (usize, f64) {
        self.component(0)
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, v)| if v < acc.1 { (i, v) } else { acc },
            )
    }

    pub(crate) fn ensure_scalar(&self, what: &str) -> Result<()> {
        if !self.is_scalar() {
            return Err(Error::Shape(format!(
                "{what} expects a scalar field, got {} components",
                self.components
            )));
        }
        Ok(())
    }
}

/// Periodic wrap of a scalar displacement into `[-π, π)`.
#[inline]
pub fn wrap(d: f64) -> f64 {
    // differences of wrapped points need at most one shift
    let v = if d >= PI {
        d - TAU
    } else if d < -PI {
        d + TAU
    } else {
        return d;
    };
    if (-PI..PI).contains(&v) {
        v
    } else {
        (d + PI).rem_euclid(TAU) - PI
    }
}

/// Relative position of `x` seen from `y` on the torus: componentwise
/// `(x - y + π) mod 2π - π`.
#[inline]
pub fn wrap_displacement<const D: usize>(x: [f64; D], y: [f64; D]) -> [f64; D] {
    let mut out = [0.0; D];
    for k in 0..D {
        out[k] = wrap(x[k] - y[k]);
    }
    out
}

/// Second-order central difference along `axis` with periodic wrap.
pub fn derivative(f: &GridFunction, axis: usize) -> Result<GridFunction> {
    f.ensure_scalar("derivative")?;
    let mesh = *f.mesh();
    if axis >= mesh.dim() {
        return Err(Error::param(
            "axis",
            format!("{axis} out of range for dim {}", mesh.dim()),
        ));
    }
    let inv = 1.0 / (2.0 * mesh.spacing());
    let v = f.values();
    let out = (0..mesh.len())
        .map(|idx| (v[mesh.shifted(idx, axis, 1)] - v[mesh.shifted(idx, axis, -1)]) * inv)
        .collect();
    GridFunction::scalar(mesh, out)
}

/// Riemann sum `h^d Σ f`.
pub fn integral(f: &GridFunction) -> f64 {
    let mesh = f.mesh();
    mesh.cell_volume() * f.component(0).iter().sum::<f64>()
}

/// Cumulative trapezoidal antiderivative anchored at `-π` with value 0.
///
/// Only periodic when `integral(f) == 0`; otherwise the last node does not
/// connect back to the first.
pub fn antiderivative(f: &GridFunction) -> Result<GridFunction> {
    f.ensure_scalar("antiderivative")?;
    if f.mesh().dim() != 1 {
        return Err(Error::InvalidMesh(
            "antiderivative is one-dimensional".into(),
        ));
    }
    let out = cumulative_trapezoid(f.values(), f.mesh().spacing());
    GridFunction::scalar(*f.mesh(), out)
}

pub(crate) fn cumulative_trapezoid(v: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in v.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Circular convolution `∫ kernel(x - y) ρ(y) dy` on the mesh (spectral route).
pub fn circular_convolve(kernel: &GridFunction, density: &GridFunction) -> Result<GridFunction> {
    kernel.mesh().ensure_same(density.mesh())?;
    density.ensure_scalar("circular_convolve density")?;
    let conv = Convolver::new(kernel);
    let comps = conv.apply(density.values());
    GridFunction::from_components(*density.mesh(), comps)
}

/// Multilinear interpolation with periodic wrap; returns one value per
/// component.
pub fn interpolate(f: &GridFunction, x: &[f64]) -> Vec<f64> {
    (0..f.components())
        .map(|c| interpolate_component(f, c, x))
        .collect()
}

pub fn interpolate_component(f: &GridFunction, c: usize, x: &[f64]) -> f64 {
    let mesh = f.mesh();
    let n = mesh.points_per_axis();
    let h = mesh.spacing();
    let vals = f.component(c);
    // fractional node position relative to x_0 = -π
    let locate = |xi: f64| -> (usize, usize, f64) {
        let mut s = wrap(xi) / h + (n / 2) as f64;
        // snap queries that sit on a node up to rounding
        if (s - s.round()).abs() < 1e-9 {
            s = s.round();
        }
        let i0 = s.floor();
        let t = s - i0;
        let i0 = (i0 as isize).rem_euclid(n as isize) as usize;
        (i0, (i0 + 1) % n, t)
    };
    match mesh.dim() {
        1 => {
            let (i0, i1, t) = locate(x[0]);
            if t == 0.0 {
                vals[i0]
            } else {
                (1.0 - t) * vals[i0] + t * vals[i1]
            }
        }
        _ => {
            let (i0, i1, s) = locate(x[0]);
            let (j0, j1, t) = locate(x[1]);
            let v = |i: usize, j: usize| vals[i * n + j];
            (1.0 - s) * ((1.0 - t) * v(i0, j0) + t * v(i0, j1))
                + s * ((1.0 - t) * v(i1, j0) + t * v(i1, j1))
        }
    }
}

/// Solves `∇²φ = rhs` spectrally with zero-mean normalization.
pub fn spectral_solve_poisson(rhs: &GridFunction) -> Result<GridFunction> {
    rhs.ensure_scalar("spectral_solve_poisson")?;
    let mesh = *rhs.mesh();
    let mean_integral = integral(rhs);
    let norm = rhs.l2_norm();
    if mean_integral.abs() > 1e-8 * norm {
        return Err(Error::NonZeroMean {
            mean: mean_integral / mesh.volume(),
            norm,
        });
    }
    let plan = SpectralPlan::new(mesh);
    let mut buf = plan.forward_real(rhs.values());
    plan.for_each_mode(|idx, k| {
        let k2 = k[0] * k[0] + k[1] * k[1];
        buf[idx] = if k2 == 0.0 {
            0.0.into()
        } else {
            -buf[idx] / k2
        };
    });
    let phi = plan.inverse_real(&mut buf);
    GridFunction::scalar(mesh, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(n: usize) -> PeriodicMesh {
        PeriodicMesh::line(n).unwrap()
    }

    #[test]
    fn mesh_spacing_and_nodes() {
        let m = line(500);
        assert!((m.spacing() * 500.0 - TAU).abs() <= 4.0 * f64::EPSILON * TAU);
        assert!((m.coordinate(0) + PI).abs() < 1e-14);
        assert_eq!(m.coordinate(250), 0.0);
        assert!(m.coordinate(499) < PI);
        for j in 1..500 {
            assert_eq!(m.coordinate(j), -m.coordinate(500 - j));
        }
        assert!(PeriodicMesh::line(7).is_err());
        assert!(PeriodicMesh::new(3, 8).is_err());
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_displacement([0.0], [0.0]), [0.0]);
        let d = wrap_displacement([PI - 0.1], [-PI + 0.1]);
        assert!((d[0] + 0.2).abs() < 1e-12);
        let d = wrap_displacement([PI - 0.1, 0.0], [-PI + 0.1, 0.5]);
        assert!((d[0] + 0.2).abs() < 1e-12 && (d[1] + 0.5).abs() < 1e-12);
        assert_eq!(wrap(PI), -PI);
    }

    #[test]
    fn derivative_of_constant_is_exactly_zero() {
        let f = GridFunction::constant(line(64), 1.0);
        assert!(derivative(&f, 0)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn derivative_of_sin_and_cos2x() {
        let m = line(500);
        let h = m.spacing();
        let f = GridFunction::from_fn(m, |x| x[0].sin());
        let df = derivative(&f, 0).unwrap();
        let err = df
            .values()
            .iter()
            .zip(m.axis_coordinates())
            .map(|(d, x)| (d - x.cos()).abs())
            .fold(0.0, f64::max);
        assert!(err <= h * h, "{err}");

        let f = GridFunction::from_fn(m, |x| (2.0 * x[0]).cos());
        let df = derivative(&f, 0).unwrap();
        let err = df
            .values()
            .iter()
            .zip(m.axis_coordinates())
            .map(|(d, x)| (d + 2.0 * (2.0 * x).sin()).abs())
            .fold(0.0, f64::max);
        // Taylor: |f'''| h²/6 = 8h²/6
        assert!(err <= 8.0 * h * h / 6.0 * 1.01, "{err}");
    }

    #[test]
    fn integral_examples() {
        let m = line(500);
        let u = GridFunction::constant(m, 1.0 / TAU);
        assert!((integral(&u) - 1.0).abs() < 1e-12);
        let s = GridFunction::from_fn(m, |x| x[0].sin());
        assert!(integral(&s).abs() < 1e-12);
    }

    #[test]
    fn antiderivative_examples() {
        let m = line(500);
        let h = m.spacing();
        let z = antiderivative(&GridFunction::constant(m, 0.0)).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));

        let c = GridFunction::from_fn(m, |x| x[0].cos());
        let p = antiderivative(&c).unwrap();
        for (j, v) in p.values().iter().enumerate() {
            let x = m.coordinate(j);
            assert!((v - (x.sin() - (-PI).sin())).abs() <= h * h, "{j}");
        }

        let ramp = antiderivative(&GridFunction::constant(m, 1.0)).unwrap();
        assert_eq!(ramp.values()[0], 0.0);
        let last = *ramp.values().last().unwrap();
        assert!((last - TAU * (1.0 - 1.0 / 500.0)).abs() < 1e-12);
    }

    #[test]
    fn convolution_odd_kernel_kills_constants() {
        let m = line(64);
        let k = GridFunction::from_fn(m, |x| x[0].sin() + 0.3 * (3.0 * x[0]).sin());
        let c = GridFunction::constant(m, 0.7);
        let v = circular_convolve(&k, &c).unwrap();
        assert!(v.sup_norm() < 1e-10);
    }

    #[test]
    fn convolution_mesh_mismatch() {
        let k = GridFunction::constant(line(8), 1.0);
        let r = GridFunction::constant(line(16), 1.0);
        assert!(matches!(
            circular_convolve(&k, &r),
            Err(Error::MeshMismatch { .. })
        ));
    }

    #[test]
    fn interpolation_examples() {
        let m = line(500);
        let f = GridFunction::from_fn(m, |x| x[0].sin());
        for j in [0, 17, 250, 499] {
            assert_eq!(interpolate(&f, &[m.coordinate(j)])[0], f.values()[j]);
        }
        let lin = GridFunction::from_fn(m, |x| 3.0 * x[0] + 1.0);
        let mid = 0.5 * (m.coordinate(10) + m.coordinate(11));
        let got = interpolate(&lin, &[mid])[0];
        assert!((got - 0.5 * (lin.values()[10] + lin.values()[11])).abs() < 1e-12);
        let h = m.spacing();
        assert!((interpolate(&f, &[0.123])[0] - 0.123f64.sin()).abs() <= h * h);
        // wrap: +π is the -π node
        assert!((interpolate(&f, &[PI])[0] - f.values()[0]).abs() < 1e-12);
    }

    #[test]
    fn interpolation_2d_bilinear() {
        let m = PeriodicMesh::square(16).unwrap();
        let f = GridFunction::from_fn(m, |x| 2.0 * x[0] - x[1]);
        let x = [
            m.coordinate(3) + 0.25 * m.spacing(),
            m.coordinate(7) + 0.5 * m.spacing(),
        ];
        let got = interpolate(&f, &x)[0];
        assert!((got - (2.0 * x[0] - x[1])).abs() < 1e-12);
    }

    #[test]
    fn poisson_examples() {
        let m = line(64);
        let zero = spectral_solve_poisson(&GridFunction::constant(m, 0.0)).unwrap();
        assert!(zero.sup_norm() == 0.0);
        let rhs = GridFunction::from_fn(m, |x| -x[0].cos());
        let phi = spectral_solve_poisson(&rhs).unwrap();
        for (j, v) in phi.values().iter().enumerate() {
            assert!((v - m.coordinate(j).cos()).abs() < 1e-10);
        }
        let sq = PeriodicMesh::square(32).unwrap();
        let rhs = GridFunction::from_fn(sq, |x| x[0].cos() * x[1].cos());
        let phi = spectral_solve_poisson(&rhs).unwrap();
        for idx in 0..sq.len() {
            let [a, b] = sq.node(idx);
            assert!((phi.values()[idx] + 0.5 * a.cos() * b.cos()).abs() < 1e-10);
        }
        let bad = GridFunction::constant(m, 1.0);
        assert!(matches!(
            spectral_solve_poisson(&bad),
            Err(Error::NonZeroMean { .. })
        ));
    }

    fn smooth_periodic(coeffs: &[(f64, f64)]) -> impl Fn(&[f64]) -> f64 + '_ {
        move |x: &[f64]| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let k = (k + 1) as f64;
                    a * (k * x[0]).cos() + b * (k * x[0]).sin()
                })
                .sum()
        }
    }

    proptest! {
        #[test]
        fn integral_of_derivative_vanishes(coeffs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..6), c0 in -2.0..2.0f64) {
            let m = line(128);
            let g = smooth_periodic(&coeffs);
            let f = GridFunction::from_fn(m, |x| c0 + g(x));
            let d = derivative(&f, 0).unwrap();
            prop_assert!(integral(&d).abs() < 1e-10);
        }

        #[test]
        fn antiderivative_inverts_derivative(coeffs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..4)) {
            let m = line(500);
            let h = m.spacing();
            let g = smooth_periodic(&coeffs);
            let f = GridFunction::from_fn(m, &g);
            let back = antiderivative(&derivative(&f, 0).unwrap()).unwrap();
            let f0 = f.values()[0];
            // O(h²) with a constant bounded by Σ k³|c_k|
            let bound: f64 = coeffs.iter().enumerate().map(|(k, (a, b))| ((k + 1) as f64).powi(3) * (a.abs() + b.abs())).sum::<f64>() * h * h * 8.0;
            for (j, v) in back.values().iter().enumerate() {
                prop_assert!((v - (f.values()[j] - f0)).abs() <= bound.max(1e-12));
            }
        }

        #[test]
        fn poisson_residual(coeffs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..6)) {
            let m = PeriodicMesh::square(32).unwrap();
            let rhs = GridFunction::from_fn(m, |x| {
                coeffs.iter().enumerate().map(|(k, (a, b))| {
                    let k = (k + 1) as f64;
                    a * (k * x[0]).cos() * (x[1]).sin() + b * (k * x[1]).sin()
                }).sum()
            });
            let phi = spectral_solve_poisson(&rhs).unwrap();
            let lap = spectral_laplacian(&phi).unwrap();
            let res = lap.zip_map(&rhs, |a, b| a - b).unwrap();
            prop_assert!(res.l2_norm() <= 1e-8 * rhs.l2_norm().max(1e-300));
            prop_assert!(integral(&phi).abs() < 1e-10);
        }
    }
}
