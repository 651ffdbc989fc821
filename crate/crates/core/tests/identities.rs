//! Distributional identities checked through the public API.

use bipoisson::bridge::{bridge_log_mass, BridgeQuery};
use bipoisson::kernel::{marginal_log_mass, reduce_params};
use bipoisson::trajectory::{x_to_z, z_to_x};
use bipoisson::verify::{joint_log_mgf, JointMgfQuery};
use bipoisson::{forward_kernel, KernelQuery, ProcessParams, State};
use proptest::prelude::*;

fn p(theta: f64) -> ProcessParams {
    ProcessParams::new(theta).unwrap()
}

#[test]
fn marginal_masses_match_oracle() {
    // scipy.stats.nbinom.pmf(3, 4, 0.7): theta = 0.5 gives r0 = 4, p = 1 - t.
    let v = marginal_log_mass(&p(0.5), 0.3, State::Count(3)).unwrap();
    assert!((v.exp() - 0.129_654).abs() < 1e-15);
    // mpmath: log NB(1; r0 = 1/4, p = (t-1)/t) at theta = 2, t = 3.
    let v = marginal_log_mass(&p(2.0), 3.0, State::Count(1)).unwrap();
    assert!((v - (-2.586_272_926_815_041_4)).abs() < 1e-14, "{v}");
}

#[test]
fn birth_bridge_matches_oracle() {
    // Binomial(2, 1/3) at 1, from scipy.
    let q = BridgeQuery::new(0.2, 0.4, 0.6, State::Count(0), State::Count(2)).unwrap();
    let v = bridge_log_mass(&p(1.0), &q, 1).unwrap();
    assert!((v.exp() - 4.0 / 9.0).abs() < 1e-15);
}

#[test]
fn single_time_mgf_matches_oracle() {
    // theta = 1: X_2 = Z_2 - 1 with Z_2 ~ NB(1, 1/2); mpmath value.
    let q = JointMgfQuery::new(1.0, vec![2.0], vec![0.3]).unwrap();
    let v = joint_log_mgf(&q).unwrap();
    assert!((v - 0.130_565_720_567_268_7).abs() < 1e-14, "{v}");
}

#[test]
fn reduction_is_canonical() {
    let r = reduce_params(2.0, 0.5).unwrap();
    assert_eq!(r.params.theta(), 1.0);
}

/// `Σ_z P(Z_s = z) P(Z_t = y | Z_s = z)` summed until the tail is negligible.
fn propagated(params: &ProcessParams, s: f64, t: f64, y: u64) -> f64 {
    let mut total = 0.0;
    for z in 0..5_000u64 {
        let w = marginal_log_mass(params, s, State::Count(z)).unwrap().exp();
        if w == 0.0 && z > 100 {
            break;
        }
        let k = forward_kernel(params, &KernelQuery::new(s, t, State::Count(z)).unwrap()).unwrap();
        let m = k.log_mass(State::Count(y)).unwrap();
        if m.is_finite() {
            total += w * m.exp();
        }
    }
    total
}

fn time_off_one() -> impl Strategy<Value = f64> {
    prop_oneof![0.05f64..0.95, 1.05f64..6.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernels_carry_marginals_forward(
        theta in 0.6f64..2.0,
        a in time_off_one(),
        b in time_off_one(),
        y in 0u64..6,
    ) {
        prop_assume!((a - b).abs() > 0.05);
        let (s, t) = if a < b { (a, b) } else { (b, a) };
        let params = p(theta);
        let direct = marginal_log_mass(&params, t, State::Count(y)).unwrap().exp();
        prop_assert!((propagated(&params, s, t, y) - direct).abs() < 1e-10);
    }

    #[test]
    fn inversion_identifies_marginals(theta in 0.3f64..3.0, t in 0.05f64..0.95, z in 0u64..20) {
        let params = p(theta);
        let a = marginal_log_mass(&params, t, State::Count(z)).unwrap();
        let b = marginal_log_mass(&params, 1.0 / t, State::Count(z)).unwrap();
        prop_assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
    }

    #[test]
    fn x_and_z_round_trip(theta in 0.2f64..5.0, t in time_off_one(), z in 0u64..1_000) {
        let params = p(theta);
        let x = z_to_x(&params, t, State::Count(z)).unwrap();
        prop_assert_eq!(x_to_z(&params, t, x).unwrap(), State::Count(z));
    }
}
