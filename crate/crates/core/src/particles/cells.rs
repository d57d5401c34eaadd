//! Periodic cell lists for closed-ball neighbor queries.

/// Particles bucketed into cubic cells of side >= R; queries visit the
/// 3^d surrounding cells in a fixed order.
#[derive(Debug, Clone)]
pub struct CellList {
    d: usize,
    l: f64,
    r: f64,
    ncell: usize,
    /// Start offsets into `order`, one per cell plus a sentinel.
    start: Vec<usize>,
    /// Particle indices sorted by cell, ascending within each cell.
    order: Vec<usize>,
    cell_of: Vec<usize>,
}

/// Minimum-image squared distance in a periodic box of side `l`.
#[inline]
pub fn min_image_dist2(a: &[f64], b: &[f64], l: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut dx = y - x;
            dx -= l * (dx / l).round();
            dx * dx
        })
        .sum()
}

impl CellList {
    /// `x` holds N points of dimension `d`, row-major, inside [0, l)^d.
    pub fn build(x: &[f64], d: usize, l: f64, r: f64) -> Self {
        let n = x.len() / d;
        let ncell = ((l / r).floor() as usize).max(1);
        let total = ncell.pow(d as u32);
        let side = l / ncell as f64;
        let cell_of: Vec<usize> = (0..n)
            .map(|i| {
                let mut c = 0;
                for k in (0..d).rev() {
                    let ck = ((x[i * d + k] / side) as usize).min(ncell - 1);
                    c = c * ncell + ck;
                }
                c
            })
            .collect();
        let mut count = vec![0usize; total + 1];
        for &c in &cell_of {
            count[c + 1] += 1;
        }
        for c in 0..total {
            count[c + 1] += count[c];
        }
        let start = count.clone();
        let mut fill = count;
        let mut order = vec![0; n];
        for (i, &c) in cell_of.iter().enumerate() {
            order[fill[c]] = i;
            fill[c] += 1;
        }
        Self { d, l, r, ncell, start, order, cell_of }
    }

    /// Calls `visit(j)` for every j with minimum-image |x_j - x_i| <= R, i included.
    pub fn for_each_neighbor(&self, x: &[f64], i: usize, mut visit: impl FnMut(usize)) {
        let d = self.d;
        let xi = &x[i * d..(i + 1) * d];
        let r2 = self.r * self.r;
        if self.ncell < 3 {
            // neighborhoods would overlap themselves: scan everything
            for j in 0..x.len() / d {
                if min_image_dist2(xi, &x[j * d..(j + 1) * d], self.l) <= r2 {
                    visit(j);
                }
            }
            return;
        }
        let nc = self.ncell as isize;
        let mut coords = [0isize; 3];
        let mut c = self.cell_of[i];
        for k in 0..d {
            coords[k] = (c % self.ncell) as isize;
            c /= self.ncell;
        }
        let reach = 3usize.pow(d as u32);
        for m in 0..reach {
            let mut cell = 0usize;
            let mut mm = m;
            for k in (0..d).rev() {
                let off = (mm % 3) as isize - 1;
                mm /= 3;
                let ck = (coords[k] + off).rem_euclid(nc) as usize;
                cell = cell * self.ncell + ck;
            }
            for &j in &self.order[self.start[cell]..self.start[cell + 1]] {
                if min_image_dist2(xi, &x[j * d..(j + 1) * d], self.l) <= r2 {
                    visit(j);
                }
            }
        }
    }

    /// Sorted neighbor indices of particle `i`.
    pub fn neighbors(&self, x: &[f64], i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_neighbor(x, i, |j| out.push(j));
        out.sort_unstable();
        out
    }
}

/// O(N^2) reference for neighbor sets.
pub fn brute_force_neighbors(x: &[f64], d: usize, l: f64, r: f64, i: usize) -> Vec<usize> {
    let xi = &x[i * d..(i + 1) * d];
    (0..x.len() / d).filter(|&j| min_image_dist2(xi, &x[j * d..(j + 1) * d], l) <= r * r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for d in [2, 3] {
            for &(l, r) in &[(10.0, 1.0), (10.0, 3.2), (5.0, 2.4), (7.0, 0.3)] {
                let x: Vec<f64> = (0..200 * d).map(|_| rng.random_range(0.0..l)).collect();
                let cl = CellList::build(&x, d, l, r);
                for i in 0..200 {
                    assert_eq!(cl.neighbors(&x, i), brute_force_neighbors(&x, d, l, r, i));
                }
            }
        }
    }

    #[test]
    fn closed_ball_and_self() {
        let x = vec![1.0, 1.0, 2.0, 1.0, 9.5, 1.0];
        let cl = CellList::build(&x, 2, 10.0, 1.0);
        assert_eq!(cl.neighbors(&x, 0), vec![0, 1]);
        assert_eq!(cl.neighbors(&x, 1), vec![0, 1]);
        // wraps around the boundary: |9.5 - 1.0| = 1.5 > 1 but min image 1.5
        assert_eq!(cl.neighbors(&x, 2), vec![2]);
        let single = vec![0.5, 0.5, 0.5];
        assert_eq!(CellList::build(&single, 3, 4.0, 1.0).neighbors(&single, 0), vec![0]);
    }
}
