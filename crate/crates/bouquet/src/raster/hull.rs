//! Topological hull on rasters: foreground plus all bounded complement
//! components.  Foreground is 8-connected, background 4-connected.

use super::grid::RasterGrid;
use std::collections::VecDeque;

/// Hull of a boolean mask: background is flooded 4-connected from the frame;
/// unreached background becomes foreground.
pub fn hull_mask(mask: &[bool], width: usize, height: usize) -> Vec<bool> {
    assert_eq!(mask.len(), width * height);
    let mut outside = vec![false; mask.len()];
    let mut queue = VecDeque::new();
    let seed = |i: usize, j: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<_>| {
        let k = i * width + j;
        if !mask[k] && !outside[k] {
            outside[k] = true;
            queue.push_back((i, j));
        }
    };
    for j in 0..width {
        seed(0, j, &mut outside, &mut queue);
        seed(height - 1, j, &mut outside, &mut queue);
    }
    for i in 0..height {
        seed(i, 0, &mut outside, &mut queue);
        seed(i, width - 1, &mut outside, &mut queue);
    }
    while let Some((i, j)) = queue.pop_front() {
        if i > 0 {
            seed(i - 1, j, &mut outside, &mut queue);
        }
        if i + 1 < height {
            seed(i + 1, j, &mut outside, &mut queue);
        }
        if j > 0 {
            seed(i, j - 1, &mut outside, &mut queue);
        }
        if j + 1 < width {
            seed(i, j + 1, &mut outside, &mut queue);
        }
    }
    outside.iter().map(|&o| !o).collect()
}

/// Hull of the pixels carrying `foreground_code`; filled pixels receive the
/// same code, everything else is preserved.
pub fn topological_hull(grid: &RasterGrid, foreground_code: u8) -> RasterGrid {
    let mask: Vec<bool> = grid.labels.iter().map(|&c| c == foreground_code).collect();
    let hull = hull_mask(&mask, grid.width, grid.height);
    let mut out = grid.clone();
    for (k, &h) in hull.iter().enumerate() {
        if h {
            out.labels[k] = foreground_code;
        }
    }
    out
}

/// One-pixel 8-connected dilation, used for boundary-containment checks.
pub fn dilate_mask(mask: &[bool], width: usize, height: usize) -> Vec<bool> {
    let mut out = mask.to_vec();
    for i in 0..height {
        for j in 0..width {
            if mask[i * width + j] {
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni >= 0 && nj >= 0 && (ni as usize) < height && (nj as usize) < width {
                            out[ni as usize * width + nj as usize] = true;
                        }
                    }
                }
            }
        }
    }
    out
}
