use super::{DiscreteSpace, ModelParams};

/// Conditionals derived from the joint by exact summation and division.
///
/// Slices conditioned on a zero-mass outcome (or observation) are zeroed and
/// the outcome is recorded in `zero_mass_outcomes`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSet {
    pub space: DiscreteSpace,
    /// `P(x, y, z)`, `[x][y][z]`.
    pub joint: Vec<f64>,
    /// `P(y)`.
    pub p_y: Vec<f64>,
    /// `P(x)`.
    pub p_x: Vec<f64>,
    /// `P(x, z | y)`, laid out `[x][y][z]` like the joint.
    pub p_xz_given_y: Vec<f64>,
    /// `P(x | y)`, `[x][y]`.
    pub p_x_given_y: Vec<f64>,
    /// `P(z | y)`, `[y][z]`.
    pub p_z_given_y: Vec<f64>,
    /// `P(y | x)`, `[x][y]`.
    pub p_y_given_x: Vec<f64>,
    pub zero_mass_outcomes: Vec<usize>,
}

impl ConditionalSet {
    pub fn from_model(model: &ModelParams) -> Self {
        let joint = model.joint();
        Self::from_joint_values(model.space, joint.values)
    }

    pub fn from_joint_values(space: DiscreteSpace, joint: Vec<f64>) -> Self {
        let s = space;
        let mut p_y = vec![0.0; s.n_y];
        let mut p_x = vec![0.0; s.n_x];
        let mut p_xy = vec![0.0; s.n_x * s.n_y];
        let mut p_yz = vec![0.0; s.n_y * s.n_z];
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                for z in 0..s.n_z {
                    let p = joint[s.xyz(x, y, z)];
                    p_xy[x * s.n_y + y] += p;
                    p_yz[y * s.n_z + z] += p;
                }
            }
        }
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                p_x[x] += p_xy[x * s.n_y + y];
            }
        }
        for y in 0..s.n_y {
            for z in 0..s.n_z {
                p_y[y] += p_yz[y * s.n_z + z];
            }
        }
        let zero_mass_outcomes: Vec<usize> = (0..s.n_y).filter(|&y| p_y[y] <= 0.0).collect();

        let div = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
        let mut p_xz_given_y = vec![0.0; s.joint_len()];
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                for z in 0..s.n_z {
                    let i = s.xyz(x, y, z);
                    p_xz_given_y[i] = div(joint[i], p_y[y]);
                }
            }
        }
        let mut p_x_given_y = vec![0.0; s.n_x * s.n_y];
        let mut p_y_given_x = vec![0.0; s.n_x * s.n_y];
        for x in 0..s.n_x {
            for y in 0..s.n_y {
                let i = x * s.n_y + y;
                p_x_given_y[i] = div(p_xy[i], p_y[y]);
                p_y_given_x[i] = div(p_xy[i], p_x[x]);
            }
        }
        let mut p_z_given_y = vec![0.0; s.n_y * s.n_z];
        for y in 0..s.n_y {
            for z in 0..s.n_z {
                let i = y * s.n_z + z;
                p_z_given_y[i] = div(p_yz[i], p_y[y]);
            }
        }
        Self { space, joint, p_y, p_x, p_xz_given_y, p_x_given_y, p_z_given_y, p_y_given_x, zero_mass_outcomes }
    }

    #[inline]
    pub fn xz_given_y(&self, x: usize, z: usize, y: usize) -> f64 {
        self.p_xz_given_y[self.space.xyz(x, y, z)]
    }

    #[inline]
    pub fn x_given_y(&self, x: usize, y: usize) -> f64 {
        self.p_x_given_y[x * self.space.n_y + y]
    }

    #[inline]
    pub fn z_given_y(&self, z: usize, y: usize) -> f64 {
        self.p_z_given_y[y * self.space.n_z + z]
    }

    #[inline]
    pub fn y_given_x(&self, y: usize, x: usize) -> f64 {
        self.p_y_given_x[x * self.space.n_y + y]
    }

    /// `P(x | y, z)`; zero when `(y, z)` has zero mass.
    pub fn x_given_yz(&self, x: usize, y: usize, z: usize) -> f64 {
        let pz = self.z_given_y(z, y);
        if pz > 0.0 {
            self.xz_given_y(x, z, y) / pz
        } else {
            0.0
        }
    }

    pub fn is_degenerate(&self, y: usize) -> bool {
        self.zero_mass_outcomes.contains(&y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::Error;

    fn space(nx: usize) -> DiscreteSpace {
        DiscreteSpace::new(nx, 2, 2, 2).unwrap()
    }

    #[test]
    fn uniform_model_has_balanced_z_given_y() {
        let c = ModelParams::uniform(space(2)).conditional_tables().unwrap();
        for y in 0..2 {
            for z in 0..2 {
                assert_eq!(c.z_given_y(z, y), 0.5);
            }
        }
    }

    #[test]
    fn conditional_independence_by_construction() {
        // x independent of z, and y depends on x only
        let m = ModelParams::new(
            space(3),
            vec![0.4, 0.6],
            vec![vec![0.2, 0.3, 0.5]; 2],
            vec![vec![vec![0.1, 0.9]; 2], vec![vec![0.7, 0.3]; 2], vec![vec![0.45, 0.55]; 2]],
        )
        .unwrap();
        let c = m.conditional_tables().unwrap();
        for x in 0..3 {
            for y in 0..2 {
                for z in 0..2 {
                    let lhs = c.xz_given_y(x, z, y);
                    let rhs = c.x_given_y(x, y) * c.z_given_y(z, y);
                    assert!((lhs - rhs).abs() < 1e-15, "{lhs} vs {rhs}");
                }
            }
        }
    }

    /// Independent oracle: enumerate P(z) P(x|z) P(y|x,z) directly from the
    /// factor tables and normalize by brute-force sums.
    #[test]
    fn random_tables_match_enumeration_oracle() {
        let mut rng = rng_from_seed(21);
        let m = ModelParams::random(space(3), &mut rng);
        let c = m.conditional_tables().unwrap();
        let j = |x: usize, y: usize, z: usize| m.p_z[z] * m.p_x_given_z[z][x] * m.p_y_given_xz[x][z][y];
        for y in 0..2 {
            let py: f64 = (0..3).flat_map(|x| (0..2).map(move |z| (x, z))).map(|(x, z)| j(x, y, z)).sum();
            for x in 0..3 {
                let pxy: f64 = (0..2).map(|z| j(x, y, z)).sum();
                let px: f64 = (0..2).flat_map(|yy| (0..2).map(move |z| (yy, z))).map(|(yy, z)| j(x, yy, z)).sum();
                assert!((c.x_given_y(x, y) - pxy / py).abs() < 1e-12);
                assert!((c.y_given_x(y, x) - pxy / px).abs() < 1e-12);
                for z in 0..2 {
                    assert!((c.xz_given_y(x, z, y) - j(x, y, z) / py).abs() < 1e-12);
                }
            }
            for z in 0..2 {
                let pyz: f64 = (0..3).map(|x| j(x, y, z)).sum();
                assert!((c.z_given_y(z, y) - pyz / py).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn marginalization_identities_hold() {
        let mut rng = rng_from_seed(8);
        for _ in 0..20 {
            let m = ModelParams::random(DiscreteSpace::new(5, 3, 2, 2).unwrap(), &mut rng);
            let c = m.conditional_tables().unwrap();
            for y in 0..3 {
                let total: f64 =
                    c.p_xz_given_y.iter().enumerate().filter(|(i, _)| (i / 2) % 3 == y).map(|(_, p)| p).sum();
                assert!((total - 1.0).abs() < 1e-12);
                for z in 0..2 {
                    let sx: f64 = (0..5).map(|x| c.xz_given_y(x, z, y)).sum();
                    assert!((sx - c.z_given_y(z, y)).abs() < 1e-12);
                }
                for x in 0..5 {
                    let sz: f64 = (0..2).map(|z| c.xz_given_y(x, z, y)).sum();
                    assert!((sz - c.x_given_y(x, y)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_mass_outcome_is_signalled() {
        let m = ModelParams::new(space(2), vec![0.5, 0.5], vec![vec![0.5, 0.5]; 2], vec![vec![vec![1.0, 0.0]; 2]; 2])
            .unwrap();
        assert!(matches!(m.conditional_tables(), Err(Error::DegenerateOutcome { outcome: 1 })));
        let lenient = ConditionalSet::from_model(&m);
        assert_eq!(lenient.zero_mass_outcomes, vec![1]);
        assert!(lenient.p_xz_given_y.iter().all(|p| p.is_finite()));
    }
}
