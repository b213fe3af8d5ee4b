//! The annulus `a < |x| < R` around a circular obstacle and its collocation points.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusDomain {
    obstacle_radius: f64,
    tbc_radius: f64,
}

impl AnnulusDomain {
    pub fn new(obstacle_radius: f64, tbc_radius: f64) -> Result<Self> {
        if !(obstacle_radius > 0.0 && obstacle_radius < tbc_radius && tbc_radius.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "need 0 < a < R, got a = {obstacle_radius}, R = {tbc_radius}"
            )));
        }
        Ok(Self { obstacle_radius, tbc_radius })
    }

    pub fn obstacle_radius(&self) -> f64 {
        self.obstacle_radius
    }

    pub fn tbc_radius(&self) -> f64 {
        self.tbc_radius
    }

    /// Open annulus membership.
    pub fn contains(&self, p: Point) -> bool {
        let r = p[0].hypot(p[1]);
        r > self.obstacle_radius && r < self.tbc_radius
    }
}

/// Point on the obstacle boundary with the unit normal pointing out of the
/// obstacle, into the computational domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub point: Point,
    pub normal: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbcPoint {
    pub point: Point,
    pub angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollocationCounts {
    pub n_radial: usize,
    pub n_angular: usize,
    pub n_obstacle: usize,
    pub n_tbc: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollocationSet {
    pub domain: AnnulusDomain,
    pub interior: Vec<Point>,
    pub obstacle: Vec<BoundaryPoint>,
    pub tbc: Vec<TbcPoint>,
}

/// Angles `2πi/n`, `i = 0..n`.
pub fn uniform_angles(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| TAU * i as f64 / n as f64)
}

/// Builds the three point families: a polar tensor grid at cell-midpoint radii
/// for the interior, and uniform angles on both circles.
pub fn generate_collocation(domain: AnnulusDomain, counts: CollocationCounts) -> Result<CollocationSet> {
    for (what, value, min) in [
        ("n_radial", counts.n_radial, 1),
        ("n_angular", counts.n_angular, 4),
        ("n_obstacle", counts.n_obstacle, 4),
        ("n_tbc", counts.n_tbc, 4),
    ] {
        if value < min {
            return Err(Error::InvalidCount { what, value, min });
        }
    }
    let a = domain.obstacle_radius;
    let big_r = domain.tbc_radius;
    let dr = (big_r - a) / counts.n_radial as f64;
    let angular: Vec<(f64, f64)> = uniform_angles(counts.n_angular).map(f64::sin_cos).collect();
    let mut interior = Vec::with_capacity(counts.n_radial * counts.n_angular);
    for i in 0..counts.n_radial {
        let r = a + (i as f64 + 0.5) * dr;
        interior.extend(angular.iter().map(|&(s, c)| [r * c, r * s]));
    }
    let obstacle = uniform_angles(counts.n_obstacle)
        .map(|t| {
            let (s, c) = t.sin_cos();
            BoundaryPoint { point: [a * c, a * s], normal: [c, s] }
        })
        .collect();
    let tbc = uniform_angles(counts.n_tbc)
        .map(|angle| {
            let (s, c) = angle.sin_cos();
            TbcPoint { point: [big_r * c, big_r * s], angle }
        })
        .collect();
    Ok(CollocationSet { domain, interior, obstacle, tbc })
}

impl CollocationSet {
    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_obstacle(&self) -> usize {
        self.obstacle.len()
    }

    pub fn n_tbc(&self) -> usize {
        self.tbc.len()
    }

    pub fn len(&self) -> usize {
        self.n_interior() + self.n_obstacle() + self.n_tbc()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points in the fixed order interior, obstacle, TBC circle.
    pub fn all_points(&self) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.interior);
        out.extend(self.obstacle.iter().map(|b| b.point));
        out.extend(self.tbc.iter().map(|t| t.point));
        out
    }

    pub fn obstacle_normals(&self) -> Vec<Point> {
        self.obstacle.iter().map(|b| b.normal).collect()
    }

    pub fn tbc_points(&self) -> Vec<Point> {
        self.tbc.iter().map(|t| t.point).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(n_radial: usize, n_angular: usize, n_obstacle: usize, n_tbc: usize) -> CollocationCounts {
        CollocationCounts { n_radial, n_angular, n_obstacle, n_tbc }
    }

    #[test]
    fn small_grid() {
        let d = AnnulusDomain::new(0.5, 1.0).unwrap();
        let set = generate_collocation(d, counts(2, 4, 8, 16)).unwrap();
        assert_eq!(set.interior.len(), 8);
        assert!(set.interior.iter().all(|&p| d.contains(p)));
        let expected: Vec<f64> = (0..16).map(|i| i as f64 * std::f64::consts::PI / 8.0).collect();
        let angles: Vec<f64> = set.tbc.iter().map(|t| t.angle).collect();
        assert_eq!(angles, expected);
        assert_eq!(set.obstacle[0].normal, [1.0, 0.0]);
        assert_eq!(set.obstacle[0].point, [0.5, 0.0]);
    }

    #[test]
    fn invariants() {
        let d = AnnulusDomain::new(0.3, 1.7).unwrap();
        let set = generate_collocation(d, counts(7, 13, 21, 40)).unwrap();
        for b in &set.obstacle {
            assert!((b.point[0].hypot(b.point[1]) - 0.3).abs() <= 1e-12);
            assert!((b.normal[0].hypot(b.normal[1]) - 1.0).abs() <= 1e-15);
        }
        for t in &set.tbc {
            assert!((t.point[0].hypot(t.point[1]) - 1.7).abs() <= 1e-12);
        }
        let boundary: Vec<Point> = set.all_points()[set.n_interior()..].to_vec();
        assert!(set.interior.iter().all(|p| !boundary.contains(p)));
        assert_eq!(set, generate_collocation(d, counts(7, 13, 21, 40)).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(AnnulusDomain::new(1.0, 0.5), Err(Error::InvalidDomain(_))));
        assert!(matches!(AnnulusDomain::new(0.0, 0.5), Err(Error::InvalidDomain(_))));
        let d = AnnulusDomain::new(0.5, 1.0).unwrap();
        assert!(matches!(
            generate_collocation(d, counts(0, 8, 8, 8)),
            Err(Error::InvalidCount { what: "n_radial", .. })
        ));
        assert!(matches!(
            generate_collocation(d, counts(2, 3, 8, 8)),
            Err(Error::InvalidCount { what: "n_angular", .. })
        ));
    }
}
