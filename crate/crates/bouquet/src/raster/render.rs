//! Per-pixel orbit classification into escaping set, attractor basins, and
//! the undecided remainder (which approximates the Julia set).

use super::grid::RasterGrid;
use crate::catalog::FunctionSpec;
use crate::dynamics::Attractor;
use crate::numeric::{LogSafe, Magnitude};
use rayon::prelude::*;

/// Pixels whose orbit stayed bounded without entering a certified basin.
pub const CODE_JULIA: u8 = 0;
/// Pixels whose orbit passed the escape horizon.
pub const CODE_ESCAPING: u8 = 1;

const TILE: usize = 64;
const ESCAPE_HORIZON: f64 = 1.0e12;

/// Fixed palette for classification rasters: black for the undecided set,
/// white for escape, a rotating color list for basins.
#[derive(Clone, Copy, Debug, Default)]
pub struct BasinPalette;

impl BasinPalette {
    pub fn color(&self, code: u8) -> [u8; 3] {
        match code {
            CODE_JULIA => [0, 0, 0],
            CODE_ESCAPING => [255, 255, 255],
            c => {
                const BASIN_COLORS: [[u8; 3]; 6] = [
                    [66, 135, 245],
                    [240, 160, 40],
                    [90, 200, 120],
                    [200, 80, 190],
                    [230, 220, 70],
                    [120, 220, 230],
                ];
                BASIN_COLORS[(c as usize - 2) % BASIN_COLORS.len()]
            }
        }
    }
}

/// Largest certified capture radius for each attractor, from a short ladder
/// of candidates.  Attractors with no certifiable ball never capture.
fn capture_radii(spec: &FunctionSpec, attractors: &[Attractor]) -> Vec<Option<f64>> {
    attractors
        .iter()
        .map(|a| {
            [1e-1, 1e-2, 1e-3]
                .into_iter()
                .find(|&r| a.certify_ball(spec, r, 64))
        })
        .collect()
}

fn classify_pixel(
    spec: &FunctionSpec,
    z0: num_complex::Complex64,
    attractors: &[Attractor],
    radii: &[Option<f64>],
    budget: usize,
    horizon: Magnitude,
) -> u8 {
    let mut value = LogSafe::Plain(z0);
    for _ in 0..budget {
        if value.log_modulus() > horizon {
            return CODE_ESCAPING;
        }
        if let Some(z) = value.as_complex() {
            for (idx, (a, r)) in attractors.iter().zip(radii.iter()).enumerate() {
                if let Some(r) = r {
                    if a.cycle.iter().any(|c| (z - c).norm() < *r) {
                        return 2 + idx as u8;
                    }
                }
            }
        }
        value = match spec.advance(&value) {
            Some(v) => v,
            // Direction is only lost far past the horizon.
            None => return CODE_ESCAPING,
        };
    }
    if value.log_modulus() > horizon {
        CODE_ESCAPING
    } else {
        CODE_JULIA
    }
}

/// Fill the labels of a window-shaped grid by classifying every pixel center.
/// Work is tiled and the tiles are assembled by position, so the output is
/// independent of the thread count.
pub fn render_classification(
    spec: &FunctionSpec,
    template: &RasterGrid,
    attractors: &[Attractor],
    budget: usize,
) -> RasterGrid {
    let radii = capture_radii(spec, attractors);
    let horizon = Magnitude::from_value(ESCAPE_HORIZON);
    let mut grid = template.clone();

    let mut tiles = Vec::new();
    let mut i0 = 0;
    while i0 < grid.height {
        let mut j0 = 0;
        while j0 < grid.width {
            tiles.push((i0, j0));
            j0 += TILE;
        }
        i0 += TILE;
    }

    let computed: Vec<((usize, usize), Vec<u8>)> = tiles
        .into_par_iter()
        .map(|(i0, j0)| {
            let h = TILE.min(grid.height - i0);
            let w = TILE.min(grid.width - j0);
            let mut block = Vec::with_capacity(h * w);
            for i in i0..i0 + h {
                for j in j0..j0 + w {
                    block.push(classify_pixel(
                        spec,
                        grid.center(i, j),
                        attractors,
                        &radii,
                        budget,
                        horizon,
                    ));
                }
            }
            ((i0, j0), block)
        })
        .collect();

    for ((i0, j0), block) in computed {
        let h = TILE.min(grid.height - i0);
        let w = TILE.min(grid.width - j0);
        for di in 0..h {
            for dj in 0..w {
                grid.set(i0 + di, j0 + dj, block[di * w + dj]);
            }
        }
    }

    grid.legend.insert(CODE_JULIA, "undecided".to_string());
    grid.legend.insert(CODE_ESCAPING, "escaping".to_string());
    for (idx, a) in attractors.iter().enumerate() {
        grid.legend.insert(
            2 + idx as u8,
            format!("basin of cycle at {:.4}", a.cycle[0]),
        );
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::find_attractors;
    use crate::roots::BoxRegion;
    use num_complex::Complex64;

    fn quadexp(lambda: f64) -> FunctionSpec {
        FunctionSpec::quad_exp(lambda).unwrap()
    }

    fn window() -> RasterGrid {
        RasterGrid::new(
            Complex64::new(-0.35, 1.2),
            Complex64::new(2.23, -1.2),
            80,
            67,
        )
    }

    #[test]
    fn near_origin_lands_in_superattracting_basin() {
        let spec = quadexp(0.995);
        let attractors = find_attractors(&spec, &BoxRegion::around(Complex64::new(0.5, 0.0), 3.0), 2);
        assert!(!attractors.is_empty());
        let zero_idx = attractors
            .iter()
            .position(|a| a.cycle[0].norm() < 1e-6)
            .expect("origin attractor");
        let grid = render_classification(&spec, &window(), &attractors, 200);
        let (i, j) = grid.pixel_of(Complex64::new(0.1, 0.0)).unwrap();
        assert_eq!(grid.get(i, j), 2 + zero_idx as u8);
    }

    #[test]
    fn parabolic_point_stays_undecided() {
        let spec = quadexp(1.0);
        let attractors = find_attractors(&spec, &BoxRegion::centered(0.5), 1);
        // single pixel whose center is exactly the parabolic fixed point 1;
        // no basin certificate exists there, so it must stay undecided
        let cell = RasterGrid::new(Complex64::new(0.0, 1.0), Complex64::new(2.0, -1.0), 1, 1);
        assert_eq!(cell.center(0, 0), Complex64::new(1.0, 0.0));
        let grid = render_classification(&spec, &cell, &attractors, 200);
        assert_eq!(grid.get(0, 0), CODE_JULIA);
    }

    #[test]
    fn attractor_pixel_gets_its_own_code() {
        let spec = quadexp(0.995);
        let attractors = find_attractors(&spec, &BoxRegion::centered(0.5), 1);
        let zero_idx = attractors
            .iter()
            .position(|a| a.cycle[0].norm() < 1e-6)
            .expect("origin attractor");
        let grid = render_classification(&spec, &window(), &attractors, 200);
        let (i, j) = grid.pixel_of(Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(grid.get(i, j), 2 + zero_idx as u8);
        assert!(grid.legend.contains_key(&(2 + zero_idx as u8)));
    }

    #[test]
    fn far_real_axis_escapes() {
        let spec = quadexp(1.1);
        let grid = render_classification(&spec, &window(), &[], 200);
        // For lambda > 1 the escaping set meets this window.
        let mut found_escape = false;
        'outer: for i in 0..grid.height {
            for j in 0..grid.width {
                if grid.get(i, j) == CODE_ESCAPING {
                    found_escape = true;
                    break 'outer;
                }
            }
        }
        assert!(found_escape);
    }
}
