//! Separation witness: label pixels of a log-coordinate window by the first
//! depth at which the iterated transform drops below an exponential ladder
//! while staying inside the tracts; the unlabeled set separates the plane
//! and the component of its complement around a query point is an island.

use super::grid::RasterGrid;
use super::RasterError;
use crate::numeric::{LogSafe, Magnitude};
use crate::transform::TransformSetup;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Pixels where the ladder condition holds at every tested depth.
pub const CODE_B: u8 = 0;

#[derive(Clone, Debug)]
pub struct WitnessParams {
    pub eps: f64,
    pub r_prime: f64,
    pub k_depth: usize,
    /// Log-coordinate point whose island is reported.
    pub query: Complex64,
    pub top_left: Complex64,
    pub bottom_right: Complex64,
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IslandReport {
    pub pixel_count: usize,
    /// The island does not touch the window frame.
    pub bounded: bool,
    /// Every in-window pixel 4-adjacent to the island carries the ladder
    /// label.
    pub boundary_in_b: bool,
}

/// `tau^k(r)` for `tau(r) = exp(eps * r)`.
pub fn tau_ladder(eps: f64, r: f64, k: usize) -> f64 {
    let mut t = r;
    for _ in 0..k {
        t = (eps * t).exp();
    }
    t
}

/// Label for one pixel: `CODE_B`, or `1 + k` for the least depth `k` at
/// which the iterate sits in a tract with real part below `tau^k(r')`.
fn label_pixel(setup: &TransformSetup, params: &WitnessParams, w: Complex64) -> u8 {
    // z_k = exp of the k-th transform iterate; only its log-modulus (the
    // iterate's real part) and tract membership matter.
    let mut z = if w.re <= 700.0 {
        LogSafe::Plain(w.exp())
    } else {
        LogSafe::from_log_polar(w.re, w.im)
    };
    let tract_floor = Magnitude::from_value((setup.center.norm() + setup.rho).ln().max(0.0) + 1.0);
    for k in 0..=params.k_depth {
        let re_iterate = z.log_modulus();
        let fz = setup.spec.advance(&z);
        let in_tract = match &fz {
            Some(LogSafe::Plain(v)) => (v - setup.center).norm() > setup.rho,
            // values too large for f64 are far outside the disc
            Some(other) => other.log_modulus() > tract_floor,
            // direction loss only happens at astronomical modulus
            None => true,
        };
        let tall_enough = re_iterate >= Magnitude::from_value(tau_ladder(params.eps, params.r_prime, k));
        if in_tract && !tall_enough {
            return 1 + k as u8;
        }
        if !in_tract {
            // the orbit left the tracts; deeper conditions hold vacuously
            return CODE_B;
        }
        z = match fz {
            Some(v) => v,
            None => return CODE_B,
        };
    }
    CODE_B
}

/// Label the window and extract the connected non-ladder component around
/// the query point.
pub fn separation_witness(
    setup: &TransformSetup,
    params: &WitnessParams,
) -> Result<(RasterGrid, IslandReport), RasterError> {
    let mut grid = RasterGrid::new(
        params.top_left,
        params.bottom_right,
        params.width,
        params.height,
    );
    for i in 0..grid.height {
        for j in 0..grid.width {
            let code = label_pixel(setup, params, grid.center(i, j));
            grid.set(i, j, code);
        }
    }
    grid.legend.insert(CODE_B, "ladder holds at all depths".to_string());
    for k in 0..=params.k_depth {
        grid.legend
            .insert(1 + k as u8, format!("ladder first fails at depth {k}"));
    }

    let (qi, qj) = grid
        .pixel_of(params.query)
        .ok_or(RasterError::QueryOutsideWindow)?;
    if grid.get(qi, qj) == CODE_B {
        return Err(RasterError::QueryInB);
    }

    // 4-connected flood over non-ladder pixels
    let (w, h) = (grid.width, grid.height);
    let mut in_island = vec![false; w * h];
    let mut queue = VecDeque::new();
    in_island[qi * w + qj] = true;
    queue.push_back((qi, qj));
    let mut bounded = true;
    let mut boundary_in_b = true;
    let mut pixel_count = 0usize;
    while let Some((i, j)) = queue.pop_front() {
        pixel_count += 1;
        if i == 0 || i + 1 == h || j == 0 || j + 1 == w {
            bounded = false;
        }
        let neighbors = [
            (i.wrapping_sub(1), j),
            (i + 1, j),
            (i, j.wrapping_sub(1)),
            (i, j + 1),
        ];
        for (ni, nj) in neighbors {
            if ni >= h || nj >= w {
                continue;
            }
            let k = ni * w + nj;
            if in_island[k] {
                continue;
            }
            if grid.get(ni, nj) == CODE_B {
                continue;
            }
            in_island[k] = true;
            queue.push_back((ni, nj));
        }
    }
    // every in-window neighbor of the island outside it must be B; this is
    // structural for a maximal component but recorded as evidence
    'outer: for i in 0..h {
        for j in 0..w {
            if !in_island[i * w + j] {
                continue;
            }
            for (ni, nj) in [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)] {
                if ni < h && nj < w && !in_island[ni * w + nj] && grid.get(ni, nj) != CODE_B {
                    boundary_in_b = false;
                    break 'outer;
                }
            }
        }
    }

    Ok((
        grid,
        IslandReport {
            pixel_count,
            bounded,
            boundary_in_b,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::FunctionSpec;

    fn setup() -> TransformSetup {
        let spec = FunctionSpec::parse("scaled:base=expaffine:a=-2,L=10").unwrap();
        TransformSetup::new(spec, 1.0).unwrap()
    }

    fn params() -> WitnessParams {
        WitnessParams {
            eps: 0.1,
            r_prime: 20.0,
            k_depth: 12,
            // lift of the repelling fixed point z of (e^z - 2)/10 = z
            query: Complex64::new(3.650_5_f64.ln(), 0.0),
            top_left: Complex64::new(-2.0, 4.0),
            bottom_right: Complex64::new(30.0, -4.0),
            width: 256,
            height: 256,
        }
    }

    #[test]
    fn tau_ladder_closed_form() {
        let (eps, r) = (0.1, 20.0);
        assert!((tau_ladder(eps, r, 0) - r).abs() < 1e-15);
        assert!((tau_ladder(eps, r, 1) - (eps * r).exp()).abs() < 1e-12);
        let tau2 = (eps * (eps * r).exp()).exp();
        assert!((tau_ladder(eps, r, 2) - tau2).abs() < 1e-12);
    }

    #[test]
    fn far_left_pixel_is_outside_tracts_hence_b() {
        let code = label_pixel(&setup(), &params(), Complex64::new(-1.5, 0.0));
        assert_eq!(code, CODE_B);
    }

    #[test]
    fn deep_tract_pixel_is_b() {
        // real part 25 beats the whole ladder and the iterates only grow
        let code = label_pixel(&setup(), &params(), Complex64::new(25.0, 0.0));
        assert_eq!(code, CODE_B);
    }

    #[test]
    fn island_around_lifted_fixed_point_is_bounded() {
        let (grid, report) = separation_witness(&setup(), &params()).unwrap();
        assert!(report.pixel_count > 0);
        assert!(report.bounded, "island touches the frame");
        assert!(report.boundary_in_b);
        // the query pixel failed the ladder at depth 0
        let (i, j) = grid.pixel_of(params().query).unwrap();
        assert_eq!(grid.get(i, j), 1);
    }
}
