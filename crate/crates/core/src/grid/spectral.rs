use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{GridFunction, PeriodicMesh};
use crate::error::{Error, Result};

/// Forward/inverse DFT over every axis of a mesh (row-column for d=2).
#[derive(Clone)]
pub struct SpectralPlan {
    mesh: PeriodicMesh,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("mesh", &self.mesh)
            .finish()
    }
}

impl SpectralPlan {
    pub fn new(mesh: PeriodicMesh) -> Self {
        let mut planner = FftPlanner::new();
        let n = mesh.points_per_axis();
        SpectralPlan {
            mesh,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn mesh(&self) -> &PeriodicMesh {
        &self.mesh
    }

    fn transform(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.mesh.points_per_axis();
        fft.process(buf);
        if self.mesh.dim() == 2 {
            transpose_square(buf, n);
            fft.process(buf);
            transpose_square(buf, n);
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.fwd);
    }

    /// Inverse transform including the `1/N` normalization.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.inv);
        let s = 1.0 / self.mesh.len() as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform, keeping the real part. Consumes `buf` as scratch.
    pub fn inverse_real(&self, buf: &mut [Complex64]) -> Vec<f64> {
        self.inverse(buf);
        buf.iter().map(|z| z.re).collect()
    }

    /// Signed integer wavenumber of DFT index `i`, in `[-n/2, n/2)`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        let n = self.mesh.points_per_axis();
        if i < n / 2 {
            i as f64
        } else {
            i as f64 - n as f64
        }
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.mesh.points_per_axis() / 2
    }

    /// Visits every mode as `(flat index, [k0, k1])`; `k1 = 0` in 1D.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, [f64; 2])) {
        for idx in 0..self.mesh.len() {
            let [i, j] = self.mesh.unravel(idx);
            let k1 = if self.mesh.dim() == 2 {
                self.wavenumber(j)
            } else {
                0.0
            };
            f(idx, [self.wavenumber(i), k1]);
        }
    }
}

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Reorders a node-sampled kernel so that entry `m` holds the kernel at the
/// displacement `m·h` (wrapped). Node `(m + n/2) mod n` sits at that
/// displacement.
fn displacement_order(mesh: &PeriodicMesh, values: &[f64]) -> Vec<f64> {
    let n = mesh.points_per_axis();
    let half = n / 2;
    (0..mesh.len())
        .map(|idx| {
            let [a, b] = mesh.unravel(idx);
            let src = mesh.ravel([(a + half) % n, (b + half) % n]);
            values[src]
        })
        .collect()
}

/// Circular convolution against a fixed kernel, with the kernel spectrum
/// computed once.
#[derive(Debug, Clone)]
pub struct Convolver {
    plan: SpectralPlan,
    spectra: Vec<Vec<Complex64>>,
}

impl Convolver {
    pub fn new(kernel: &GridFunction) -> Self {
        let mesh = *kernel.mesh();
        let plan = SpectralPlan::new(mesh);
        let w = mesh.cell_volume();
        let spectra = (0..kernel.components())
            .map(|c| {
                let mut s = plan.forward_real(&displacement_order(&mesh, kernel.component(c)));
                s.iter_mut().for_each(|z| *z *= w);
                s
            })
            .collect();
        Convolver { plan, spectra }
    }

    pub fn mesh(&self) -> &PeriodicMesh {
        self.plan.mesh()
    }

    pub fn components(&self) -> usize {
        self.spectra.len()
    }

    /// Kernel spectrum of component `c`, already scaled by `h^d`.
    pub fn spectrum(&self, c: usize) -> &[Complex64] {
        &self.spectra[c]
    }

    pub fn plan(&self) -> &SpectralPlan {
        &self.plan
    }

    /// One output array per kernel component.
    pub fn apply(&self, density: &[f64]) -> Vec<Vec<f64>> {
        let rho = self.plan.forward_real(density);
        self.spectra
            .iter()
            .map(|spec| {
                let mut buf: Vec<Complex64> = rho.iter().zip(spec).map(|(a, b)| a * b).collect();
                self.plan.inverse_real(&mut buf)
            })
            .collect()
    }

    pub fn apply_field(&self, density: &GridFunction) -> Result<GridFunction> {
        self.mesh().ensure_same(density.mesh())?;
        density.ensure_scalar("convolution density")?;
        GridFunction::from_components(*density.mesh(), self.apply(density.values()))
    }
}

/// O(N²) reference convolution, `h^d Σ_j f(x_i − x_j) ρ_j`.
pub fn circular_convolve_direct(
    kernel: &GridFunction,
    density: &GridFunction,
) -> Result<GridFunction> {
    kernel.mesh().ensure_same(density.mesh())?;
    density.ensure_scalar("circular_convolve_direct density")?;
    let mesh = *density.mesh();
    let n = mesh.points_per_axis();
    let half = n / 2;
    let w = mesh.cell_volume();
    let rho = density.values();
    let comps = (0..kernel.components())
        .map(|c| {
            let f = kernel.component(c);
            (0..mesh.len())
                .map(|i| {
                    let [ia, ib] = mesh.unravel(i);
                    let mut acc = 0.0;
                    for (j, r) in rho.iter().enumerate() {
                        let [ja, jb] = mesh.unravel(j);
                        let node = mesh.ravel([(ia + n - ja + half) % n, (ib + n - jb + half) % n]);
                        acc += f[node] * r;
                    }
                    w * acc
                })
                .collect()
        })
        .collect();
    GridFunction::from_components(mesh, comps)
}

/// Spectral gradient of a scalar field; the Nyquist mode is dropped so the
/// result stays real.
pub fn spectral_gradient(f: &GridFunction) -> Result<GridFunction> {
    f.ensure_scalar("spectral_gradient")?;
    let mesh = *f.mesh();
    let plan = SpectralPlan::new(mesh);
    let spec = plan.forward_real(f.values());
    let comps = (0..mesh.dim())
        .map(|axis| {
            let mut buf = spec.clone();
            for (idx, z) in buf.iter_mut().enumerate() {
                let i = mesh.unravel(idx)[axis];
                *z = if plan.is_nyquist(i) {
                    Complex64::new(0.0, 0.0)
                } else {
                    *z * Complex64::new(0.0, plan.wavenumber(i))
                };
            }
            plan.inverse_real(&mut buf)
        })
        .collect();
    GridFunction::from_components(mesh, comps)
}

/// Spectral divergence of a vector field with `dim` components.
pub fn spectral_divergence(v: &GridFunction) -> Result<GridFunction> {
    let mesh = *v.mesh();
    if v.components() != mesh.dim() {
        return Err(Error::Shape(format!(
            "divergence needs {} components, got {}",
            mesh.dim(),
            v.components()
        )));
    }
    let plan = SpectralPlan::new(mesh);
    let mut acc = vec![Complex64::new(0.0, 0.0); mesh.len()];
    for axis in 0..mesh.dim() {
        let spec = plan.forward_real(v.component(axis));
        for (idx, (a, z)) in acc.iter_mut().zip(spec).enumerate() {
            let i = mesh.unravel(idx)[axis];
            if !plan.is_nyquist(i) {
                *a += z * Complex64::new(0.0, plan.wavenumber(i));
            }
        }
    }
    GridFunction::scalar(mesh, plan.inverse_real(&mut acc))
}

/// Spectral Laplacian, `-|k|²` on every mode including Nyquist.
pub fn spectral_laplacian(f: &GridFunction) -> Result<GridFunction> {
    f.ensure_scalar("spectral_laplacian")?;
    let mesh = *f.mesh();
    let plan = SpectralPlan::new(mesh);
    let mut buf = plan.forward_real(f.values());
    plan.for_each_mode(|idx, k| buf[idx] *= -(k[0] * k[0] + k[1] * k[1]));
    GridFunction::scalar(mesh, plan.inverse_real(&mut buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{circular_convolve, integral};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(mesh: PeriodicMesh, comps: usize, rng: &mut impl Rng) -> GridFunction {
        let v = (0..mesh.len() * comps)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        GridFunction::new(mesh, comps, v).unwrap()
    }

    #[test]
    fn spectral_matches_direct_on_32_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = PeriodicMesh::line(32).unwrap();
        let k = random_field(m, 1, &mut rng);
        let r = random_field(m, 1, &mut rng);
        let a = circular_convolve(&k, &r).unwrap();
        let b = circular_convolve_direct(&k, &r).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-12, "{x} {y}");
        }
    }

    #[test]
    fn displacement_indexing_is_x_minus_y() {
        // kernel = indicator of displacement +h: result at i equals h·ρ(i-1)
        let m = PeriodicMesh::line(8).unwrap();
        let mut kv = vec![0.0; 8];
        kv[5] = 1.0; // node 5 sits at +h
        let k = GridFunction::scalar(m, kv).unwrap();
        let r = GridFunction::scalar(m, (0..8).map(|j| j as f64).collect()).unwrap();
        let v = circular_convolve_direct(&k, &r).unwrap();
        let h = m.spacing();
        for i in 0..8 {
            assert!((v.values()[i] - h * ((i + 7) % 8) as f64).abs() < 1e-12);
        }
        let s = circular_convolve(&k, &r).unwrap();
        for i in 0..8 {
            assert!((s.values()[i] - v.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_divergence_laplacian_agree() {
        let m = PeriodicMesh::square(16).unwrap();
        let f = GridFunction::from_fn(m, |x| x[0].sin() * (2.0 * x[1]).cos());
        let g = spectral_gradient(&f).unwrap();
        for idx in 0..m.len() {
            let [a, b] = m.node(idx);
            assert!((g.at(idx, 0) - a.cos() * (2.0 * b).cos()).abs() < 1e-12);
            assert!((g.at(idx, 1) + 2.0 * a.sin() * (2.0 * b).sin()).abs() < 1e-12);
        }
        let d = spectral_divergence(&g).unwrap();
        let l = spectral_laplacian(&f).unwrap();
        for (x, y) in d.values().iter().zip(l.values()) {
            assert!((x - y).abs() < 1e-11);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn spectral_and_direct_agree(seed in any::<u64>(), half in 2usize..=32, two_d in any::<bool>(), comps in 1usize..=2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = if two_d { 2 * (half % 8 + 2) } else { 2 * half };
            let m = PeriodicMesh::new(if two_d { 2 } else { 1 }, n).unwrap();
            let k = random_field(m, comps, &mut rng);
            let r = random_field(m, 1, &mut rng);
            let a = circular_convolve(&k, &r).unwrap();
            let b = circular_convolve_direct(&k, &r).unwrap();
            let scale = b.sup_norm().max(1e-300);
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn odd_kernel_result_has_zero_integral(seed in any::<u64>(), half in 2usize..=32) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = PeriodicMesh::line(2 * half).unwrap();
            let raw = random_field(m, 1, &mut rng);
            let odd: Vec<f64> = (0..m.len()).map(|j| 0.5 * (raw.values()[j] - raw.values()[m.mirror(j)])).collect();
            let k = GridFunction::scalar(m, odd).unwrap();
            let rho = GridFunction::scalar(m, (0..m.len()).map(|_| rng.random_range(0.0..2.0)).collect()).unwrap();
            let v = circular_convolve(&k, &rho).unwrap();
            prop_assert!(integral(&v).abs() <= 1e-9);
        }
    }
}
