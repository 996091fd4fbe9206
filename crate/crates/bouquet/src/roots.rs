//! Newton iteration helpers used by the catalog and the attractor finder.

use num_complex::Complex64;

/// Rectangle in the complex plane used to seed and confine root searches.
#[derive(Clone, Copy, Debug)]
pub struct BoxRegion {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl BoxRegion {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Self {
        BoxRegion {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    pub fn centered(half_width: f64) -> Self {
        BoxRegion::new(-half_width, half_width, -half_width, half_width)
    }

    pub fn around(center: Complex64, half_width: f64) -> Self {
        BoxRegion::new(
            center.re - half_width,
            center.re + half_width,
            center.im - half_width,
            center.im + half_width,
        )
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// Uniform `n x n` grid of seed points over the box.
    pub fn seed_grid(&self, n: usize) -> Vec<Complex64> {
        let mut seeds = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let re = self.re_min + (self.re_max - self.re_min) * (j as f64 + 0.5) / n as f64;
                let im = self.im_min + (self.im_max - self.im_min) * (i as f64 + 0.5) / n as f64;
                seeds.push(Complex64::new(re, im));
            }
        }
        seeds
    }
}

/// Newton iteration on `f` with derivative `df` from a single seed.
///
/// Returns the root when `|f|` drops below `tol` and the step has settled;
/// `None` on divergence, derivative blow-down, or leaving a sane range.
pub fn newton<F, G>(f: F, df: G, seed: Complex64, tol: f64, max_iter: usize) -> Option<Complex64>
where
    F: Fn(Complex64) -> Complex64,
    G: Fn(Complex64) -> Complex64,
{
    let mut z = seed;
    for _ in 0..max_iter {
        let fz = f(z);
        if !fz.re.is_finite() || !fz.im.is_finite() {
            return None;
        }
        let dz = df(z);
        if dz.norm() < 1e-300 {
            return None;
        }
        let step = fz / dz;
        z -= step;
        if z.norm() > 1e6 {
            return None;
        }
        if step.norm() < tol {
            let residual = f(z).norm();
            if residual < tol.max(1e-10) {
                return Some(z);
            }
        }
    }
    None
}

/// Collect distinct roots from a seed grid, deduplicating within `dedupe_tol`.
pub fn newton_all<F, G>(
    f: &F,
    df: &G,
    region: &BoxRegion,
    grid: usize,
    tol: f64,
    dedupe_tol: f64,
) -> Vec<Complex64>
where
    F: Fn(Complex64) -> Complex64,
    G: Fn(Complex64) -> Complex64,
{
    let mut roots: Vec<Complex64> = Vec::new();
    for seed in region.seed_grid(grid) {
        if let Some(root) = newton(f, df, seed, tol, 80) {
            if region.contains(root) && !roots.iter().any(|r| (r - root).norm() < dedupe_tol) {
                roots.push(root);
            }
        }
    }
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_roots() {
        // 2 + z - 2z^2, roots (1 +- sqrt(17))/4
        let f = |z: Complex64| Complex64::new(2.0, 0.0) + z - 2.0 * z * z;
        let df = |z: Complex64| Complex64::new(1.0, 0.0) - 4.0 * z;
        let roots = newton_all(&f, &df, &BoxRegion::centered(3.0), 20, 1e-12, 1e-8);
        assert_eq!(roots.len(), 2);
        let lo = (1.0 - 17.0f64.sqrt()) / 4.0;
        let hi = (1.0 + 17.0f64.sqrt()) / 4.0;
        assert!((roots[0].re - lo).abs() < 1e-10 && roots[0].im.abs() < 1e-10);
        assert!((roots[1].re - hi).abs() < 1e-10 && roots[1].im.abs() < 1e-10);
    }

    #[test]
    fn diverging_seed_rejected() {
        let f = |z: Complex64| z.exp();
        let df = |z: Complex64| z.exp();
        assert!(newton(f, df, Complex64::new(0.0, 0.0), 1e-12, 60).is_none());
    }
}
