use serde::{Deserialize, Serialize};

use super::delta::{balance_deviation, check_policy_model};
use super::NormExponent;
use crate::model::{ConditionalSet, ModelParams};
use crate::policy::Policy;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// `sum_{a,y,z} |P(y, z | a) - P(y | a) P(z | a)|` over actions with mass.
    pub value: f64,
    /// Actions with zero induced mass, excluded from `value`.
    pub skipped_actions: Vec<usize>,
}

/// Induced `q(a, y, z) = sum_x pi(a | x) P(x, y, z)`, flat `[a][y][z]`.
fn induced_ayz(policy: &Policy, c: &ConditionalSet) -> Vec<f64> {
    let s = c.space;
    let n_a = policy.space().n_a;
    let mut q = vec![0.0; n_a * s.n_y * s.n_z];
    for x in 0..s.n_x {
        for a in 0..n_a {
            let w = policy.prob(x, a);
            for y in 0..s.n_y {
                for z in 0..s.n_z {
                    q[(a * s.n_y + y) * s.n_z + z] += w * c.joint[s.xyz(x, y, z)];
                }
            }
        }
    }
    q
}

pub fn calibration_deviation(policy: &Policy, model: &ModelParams) -> Result<CalibrationReport> {
    check_policy_model(policy, model)?;
    let c = ConditionalSet::from_model(model);
    let (n_a, n_y, n_z) = (policy.space().n_a, model.space.n_y, model.space.n_z);
    let q = induced_ayz(policy, &c);
    let mut value = 0.0;
    let mut skipped_actions = Vec::new();
    for a in 0..n_a {
        let block = &q[a * n_y * n_z..(a + 1) * n_y * n_z];
        let pa: f64 = block.iter().sum();
        if pa <= 0.0 {
            skipped_actions.push(a);
            continue;
        }
        let py: Vec<f64> = (0..n_y).map(|y| block[y * n_z..(y + 1) * n_z].iter().sum::<f64>() / pa).collect();
        let pz: Vec<f64> = (0..n_z).map(|z| (0..n_y).map(|y| block[y * n_z + z]).sum::<f64>() / pa).collect();
        for y in 0..n_y {
            for z in 0..n_z {
                value += (block[y * n_z + z] / pa - py[y] * pz[z]).abs();
            }
        }
    }
    if skipped_actions.len() == n_a {
        return Err(Error::DegeneratePolicy);
    }
    Ok(CalibrationReport { value, skipped_actions })
}

/// Joint evaluation of calibration and balance against the escape clauses of
/// the impossibility result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpossibilityReport {
    pub tol: f64,
    pub calibration: f64,
    pub balance: f64,
    pub calibrated: bool,
    pub balanced: bool,
    /// `P(z | y)` constant in `y` for every `z`.
    pub z_y_independent: bool,
    /// Some `(a, y)` with `P(y | a) = 0` or `P(a | y) = 0`.
    pub perfect_slice: bool,
    /// `calibrated && balanced` implies one of the escape clauses.
    pub consistent: bool,
}

pub fn impossibility_check(policy: &Policy, model: &ModelParams, tol: f64) -> Result<ImpossibilityReport> {
    check_policy_model(policy, model)?;
    let c = ConditionalSet::from_model(model);
    let (n_a, n_y, n_z) = (policy.space().n_a, model.space.n_y, model.space.n_z);

    let calibration = match calibration_deviation(policy, model) {
        Ok(r) => r.value,
        Err(Error::DegeneratePolicy) => 0.0,
        Err(e) => return Err(e),
    };
    let balance = balance_deviation(policy, model, NormExponent::One)?.aggregate_p;

    let live_y: Vec<usize> = (0..n_y).filter(|&y| c.p_y[y] > 0.0).collect();
    let z_y_independent = live_y.split_first().is_none_or(|(&y0, rest)| {
        rest.iter().all(|&y| (0..n_z).all(|z| (c.z_given_y(z, y) - c.z_given_y(z, y0)).abs() <= tol))
    });

    let q = induced_ayz(policy, &c);
    let q_ay = |a: usize, y: usize| q[(a * n_y + y) * n_z..(a * n_y + y + 1) * n_z].iter().sum::<f64>();
    let p_a: Vec<f64> = (0..n_a).map(|a| (0..n_y).map(|y| q_ay(a, y)).sum()).collect();
    let mut perfect_slice = false;
    for a in 0..n_a {
        for &y in &live_y {
            let joint = q_ay(a, y);
            let y_given_a = if p_a[a] > 0.0 { joint / p_a[a] } else { 0.0 };
            let a_given_y = joint / c.p_y[y];
            if y_given_a <= tol || a_given_y <= tol {
                perfect_slice = true;
            }
        }
    }

    let calibrated = calibration <= tol;
    let balanced = balance <= tol;
    Ok(ImpossibilityReport {
        tol,
        calibration,
        balance,
        calibrated,
        balanced,
        z_y_independent,
        perfect_slice,
        consistent: !(calibrated && balanced) || z_y_independent || perfect_slice,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DiscreteSpace;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn space(nx: usize) -> DiscreteSpace {
        DiscreteSpace::new(nx, 2, 2, 2).unwrap()
    }

    fn dependent_model(nx: usize, seed: u64) -> ModelParams {
        ModelParams::random(space(nx), &mut rng_from_seed(seed))
    }

    #[test]
    fn independent_y_z_with_trivial_policy_is_calibrated() {
        // y and z independent: P(y | x, z) independent of x and z, x independent of z
        let m = ModelParams::new(space(2), vec![0.4, 0.6], vec![vec![0.3, 0.7]; 2], vec![vec![vec![0.2, 0.8]; 2]; 2])
            .unwrap();
        let p = Policy::trivial(space(2), &[0.5, 0.5]).unwrap();
        assert!(calibration_deviation(&p, &m).unwrap().value < 1e-15);
        let r = impossibility_check(&p, &m, 1e-9).unwrap();
        assert!(r.calibrated && r.balanced && r.z_y_independent && r.consistent);
    }

    /// Oracle: with x independent of (y, z) every action sees the
    /// unconditional (y, z) joint, so each action with mass contributes
    /// `sum |P(y, z) - P(y) P(z)|`.
    #[test]
    fn bijective_rule_on_uninformative_x() {
        let s = space(2);
        let m = ModelParams::new(
            s,
            vec![0.35, 0.65],
            vec![vec![0.4, 0.6]; 2],
            vec![vec![vec![0.7, 0.3], vec![0.2, 0.8]]; 2],
        )
        .unwrap();
        let j = m.joint();
        let pyz = |y: usize, z: usize| j.get(0, y, z) + j.get(1, y, z);
        let py = |y: usize| pyz(y, 0) + pyz(y, 1);
        let pz = |z: usize| pyz(0, z) + pyz(1, z);
        let per_action: f64 =
            (0..2).flat_map(|y| (0..2).map(move |z| (y, z))).map(|(y, z)| (pyz(y, z) - py(y) * pz(z)).abs()).sum();
        let p = Policy::deterministic(s, &[1, 0]).unwrap();
        let got = calibration_deviation(&p, &m).unwrap().value;
        assert!((got - 2.0 * per_action).abs() < 1e-12, "{got} vs {}", 2.0 * per_action);
    }

    #[test]
    fn calibration_matches_enumeration_oracle() {
        let s = DiscreteSpace::new(3, 2, 2, 3).unwrap();
        let m = ModelParams::random(s, &mut rng_from_seed(50));
        let mut rng = rng_from_seed(51);
        let logits: Vec<f64> = (0..9).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p = Policy::from_logits(s, logits).unwrap();
        let j = m.joint();
        let mut expected = 0.0;
        for a in 0..3 {
            let q = |y: usize, z: usize| (0..3).map(|x| p.prob(x, a) * j.get(x, y, z)).sum::<f64>();
            let pa: f64 = (0..2).flat_map(|y| (0..2).map(move |z| (y, z))).map(|(y, z)| q(y, z)).sum();
            for y in 0..2 {
                for z in 0..2 {
                    let py = (q(y, 0) + q(y, 1)) / pa;
                    let pz = (q(0, z) + q(1, z)) / pa;
                    expected += (q(y, z) / pa - py * pz).abs();
                }
            }
        }
        let got = calibration_deviation(&p, &m).unwrap().value;
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_actions_are_skipped() {
        let s = space(2);
        let m = dependent_model(2, 3);
        let p = Policy::deterministic(s, &[0, 0]).unwrap();
        assert_eq!(calibration_deviation(&p, &m).unwrap().skipped_actions, vec![1]);
    }

    #[test]
    fn trivial_rule_is_balanced_not_calibrated() {
        let m = dependent_model(4, 60);
        let p = Policy::trivial(space(4), &[0.3, 0.7]).unwrap();
        let r = impossibility_check(&p, &m, 1e-6).unwrap();
        assert!(r.balanced);
        assert!(!r.calibrated);
        assert!(!r.z_y_independent);
        assert!(r.consistent);
    }

    #[test]
    fn random_policies_never_calibrated_and_balanced() {
        let m = dependent_model(4, 61);
        let mut rng = rng_from_seed(62);
        for _ in 0..100 {
            let logits: Vec<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
            let p = Policy::from_logits(space(4), logits).unwrap();
            let r = impossibility_check(&p, &m, 1e-6).unwrap();
            assert!(!(r.calibrated && r.balanced));
            assert!(r.consistent);
        }
    }
}
