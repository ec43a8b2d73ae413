use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SystemConfig;

/// Node positions of one drop. The RIS grid lies in the vertical `y–z`
/// plane through `ris_position`; all other nodes are at height zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub ap_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
    pub ris_position: [f64; 2],
    pub ris_element_positions: Vec<[f64; 3]>,
}

/// Drops APs and users uniformly in the square of half-width
/// `area_half_m`; the RIS sits at the center.
///
/// The number of draws depends only on `N` and `K`, so changing the RIS size
/// leaves AP and user positions untouched for the same seed.
pub fn generate_topology<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Topology {
    let a = config.area_half_m;
    let point = |rng: &mut R| [rng.gen_range(-a..=a), rng.gen_range(-a..=a)];
    let ap_positions = (0..config.n_aps).map(|_| point(rng)).collect();
    let user_positions = (0..config.n_users).map(|_| point(rng)).collect();
    let ris_position = [0.0, 0.0];
    let ris_element_positions = ris_grid(
        ris_position,
        config.ris_grid_side(),
        config.ris_element_spacing_m,
    );
    Topology {
        ap_positions,
        user_positions,
        ris_position,
        ris_element_positions,
    }
}

/// `side × side` grid centered on `center`, row-major over (y, z).
pub fn ris_grid(center: [f64; 2], side: usize, spacing: f64) -> Vec<[f64; 3]> {
    let offset = (side as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            out.push([
                center[0],
                center[1] + (col as f64 - offset) * spacing,
                (row as f64 - offset) * spacing,
            ]);
        }
    }
    out
}

pub(crate) fn distance2(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub(crate) fn distance3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn positions_inside_area() {
        let c = SystemConfig::default();
        let t = generate_topology(&c, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(t.ap_positions.len(), 3);
        assert_eq!(t.user_positions.len(), 14);
        for p in t.ap_positions.iter().chain(&t.user_positions) {
            assert!(p[0].abs() <= 250.0 && p[1].abs() <= 250.0);
        }
        assert_eq!(t.ris_position, [0.0, 0.0]);
        assert_eq!(t.ris_element_positions.len(), 196);
    }

    #[test]
    fn two_by_two_grid_has_exact_spacing() {
        let s = 0.025;
        let g = ris_grid([0.0, 0.0], 2, s);
        assert_eq!(g.len(), 4);
        // neighbors: (0,1), (0,2), (1,3), (2,3)
        for (i, j) in [(0, 1), (0, 2), (1, 3), (2, 3)] {
            assert!((distance3(g[i], g[j]) - s).abs() < 1e-15);
        }
        let cy: f64 = g.iter().map(|p| p[1]).sum::<f64>() / 4.0;
        let cz: f64 = g.iter().map(|p| p[2]).sum::<f64>() / 4.0;
        assert!(cy.abs() < 1e-15 && cz.abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_topology() {
        let c = SystemConfig::default();
        let a = generate_topology(&c, &mut ChaCha8Rng::seed_from_u64(11));
        let b = generate_topology(&c, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }

    #[test]
    fn ris_size_does_not_move_nodes() {
        let c = SystemConfig::default();
        let small = SystemConfig {
            n_ris_elements: 4,
            ..c.clone()
        };
        let a = generate_topology(&c, &mut ChaCha8Rng::seed_from_u64(5));
        let b = generate_topology(&small, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a.ap_positions, b.ap_positions);
        assert_eq!(a.user_positions, b.user_positions);
    }
}
