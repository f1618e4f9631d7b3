//! Independent reference implementations used as test oracles. Nothing in
//! here calls into the solver paths it is used to check.

#![allow(dead_code)]

use isac_jam::rng::{complex_gaussian, complex_gaussian_matrix, rng_from_seed};
use isac_jam::signal::{ComplexMatrix, ComplexVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> ComplexVector {
    complex_gaussian_matrix(rng, n, 1, 1.0)
        .column(0)
        .into_owned()
}

/// Direct double-sum convolution.
pub fn brute_convolve(v: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    let n = v.len() + y.len() - 1;
    let mut out = vec![c(0.0, 0.0); n];
    for i in 0..n {
        for k in 0..v.len() {
            if i >= k && i - k < y.len() {
                out[i] += v[k] * y[i - k];
            }
        }
    }
    out
}

/// Steering vector written out from its definition.
pub fn brute_steering(n: usize, theta: f64) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let ph = std::f64::consts::PI * k as f64 * theta.sin();
            c(ph.cos(), ph.sin()) / (n as f64).sqrt()
        })
        .collect()
}

/// Combiner output `(aᴴ X)ᵀ` by explicit sums.
pub fn brute_combine(x: &ComplexMatrix, a: &[Complex64]) -> Vec<Complex64> {
    (0..x.ncols())
        .map(|p| (0..x.nrows()).map(|m| a[m].conj() * x[(m, p)]).sum())
        .collect()
}

/// (b, d, z) of the design model for one angle, by brute force.
pub fn brute_outputs(
    x: &ComplexMatrix,
    v: &[Complex64],
    theta: f64,
    mask: &[f64],
) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let a = brute_steering(x.nrows(), theta);
    let yt = brute_combine(x, &a);
    let yj: Vec<_> = yt.iter().zip(mask).map(|(y, g)| y * g).collect();
    let b = brute_convolve(v, &yt);
    let d = brute_convolve(v, &yj);
    let z = b.iter().zip(&d).map(|(p, q)| p + q).collect();
    (b, d, z)
}

pub struct TinyXProblem {
    pub h: ComplexMatrix,
    pub s: ComplexMatrix,
    pub angles: Vec<f64>,
    pub mask: Vec<f64>,
    pub filters: Vec<Vec<Complex64>>,
    pub t_main: Vec<Complex64>,
    pub t_jam: Vec<Complex64>,
    pub t_side: Vec<Vec<Complex64>>,
    pub rho: f64,
    pub power: f64,
}

impl TinyXProblem {
    pub fn random(seed: u64, nt: usize, m: usize, p: usize, l: usize) -> Self {
        let mut rng = rng_from_seed(seed);
        let angles = (0..l).map(|_| rng.random_range(-1.2..1.2)).collect();
        let mask = (0..p)
            .map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 })
            .collect();
        let filters = (0..l)
            .map(|_| {
                let v = random_vector(&mut rng, p);
                let n = v.norm();
                v.iter().map(|e| e / n).collect()
            })
            .collect();
        Self {
            h: complex_gaussian_matrix(&mut rng, m, nt, 1.0),
            s: complex_gaussian_matrix(&mut rng, m, p, 1.0),
            angles,
            mask,
            filters,
            t_main: (0..l).map(|_| complex_gaussian(&mut rng, 0.3)).collect(),
            t_jam: (0..l).map(|_| complex_gaussian(&mut rng, 0.01)).collect(),
            t_side: (0..l)
                .map(|_| {
                    (0..2 * p - 1)
                        .map(|_| complex_gaussian(&mut rng, 0.001))
                        .collect()
                })
                .collect(),
            rho: 1.0,
            power: 0.5,
        }
    }

    /// Exact objective ‖HX − S‖ + ρ/2 Σ penalties.
    pub fn objective(&self, x: &ComplexMatrix) -> f64 {
        let xi = (&self.h * x - &self.s).norm();
        let p = x.ncols();
        let mut pen = 0.0;
        for l in 0..self.angles.len() {
            let (b, d, z) = brute_outputs(x, &self.filters[l], self.angles[l], &self.mask);
            pen += (b[p - 1] - self.t_main[l]).norm_sqr();
            pen += (d[p - 1] - self.t_jam[l]).norm_sqr();
            pen += z
                .iter()
                .zip(&self.t_side[l])
                .map(|(a, t)| (a - t).norm_sqr())
                .sum::<f64>();
        }
        xi + 0.5 * self.rho * pen
    }

    /// A subgradient, assembled from adjoint formulas.
    pub fn subgradient(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let (nt, p) = (x.nrows(), x.ncols());
        let xi = &self.h * x - &self.s;
        let nrm = xi.norm();
        let mut g = if nrm > 0.0 {
            self.h.adjoint() * &xi / c(nrm, 0.0)
        } else {
            ComplexMatrix::zeros(nt, p)
        };
        for l in 0..self.angles.len() {
            let a = brute_steering(nt, self.angles[l]);
            let v = &self.filters[l];
            let (b, d, z) = brute_outputs(x, v, self.angles[l], &self.mask);
            let rb = b[p - 1] - self.t_main[l];
            let rd = d[p - 1] - self.t_jam[l];
            let rz: Vec<_> = z.iter().zip(&self.t_side[l]).map(|(a, t)| a - t).collect();
            for pp in 0..p {
                let vr = v[p - 1 - pp];
                // (Cᴴ r_z)[pp] = Σ_k conj(v[k]) r_z[pp + k]
                let corr: Complex64 = (0..p).map(|k| v[k].conj() * rz[pp + k]).sum();
                let coeff =
                    rb * vr.conj() + rd * vr.conj() * self.mask[pp] + corr * (1.0 + self.mask[pp]);
                for m in 0..nt {
                    g[(m, pp)] += a[m] * coeff * self.rho;
                }
            }
        }
        g
    }

    pub fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = x.clone();
        for mut col in out.column_iter_mut() {
            let n = col.norm();
            if n * n > self.power {
                col *= c(self.power.sqrt() / n, 0.0);
            }
        }
        out
    }

    /// Best objective of projected subgradient descent with diminishing,
    /// normalized steps over several random restarts.
    pub fn subgradient_oracle(&self, iters: usize, restarts: usize, seed: u64) -> f64 {
        let (nt, p) = (self.h.ncols(), self.s.ncols());
        let mut rng = rng_from_seed(seed);
        let radius = (p as f64 * self.power).sqrt();
        let mut best = f64::INFINITY;
        for _ in 0..restarts {
            let mut x = self.project(&complex_gaussian_matrix(&mut rng, nt, p, self.power));
            for k in 0..iters {
                let f = self.objective(&x);
                best = best.min(f);
                let g = self.subgradient(&x);
                let gn = g.norm();
                if gn == 0.0 {
                    break;
                }
                let step = 0.2 * radius / ((k + 1) as f64).sqrt();
                x = self.project(&(x - g * c(step / gn, 0.0)));
            }
            best = best.min(self.objective(&x));
        }
        best
    }
}
