use std::f64::consts::PI;

use proptest::prelude::*;
use scatterkit::masking::{masking_term, MaskingKind, MaskingOptions};
use scatterkit::medium::hapke_k_of;
use scatterkit::segment::{segterm_dp_lambdas, segterm_recursive_lambdas};
use scatterkit::smith::{lambda, sample_visible_normal, vndf};
use scatterkit::special::gen_beta_symmetry_check;
use scatterkit::wet::eval_single_r;
use scatterkit::{
    brdf, BlendedPhase, Error, FresnelSpec, GenBetaArgs, MediumSpec, ParticleSpec, PhaseFit, Rgb,
    RoughnessParams, Vec3, WetBsdfParams,
};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 128,
        ..ProptestConfig::default()
    }
}

fn roughness() -> impl Strategy<Value = RoughnessParams> {
    (0.02f64..1.5, 0.02f64..1.5).prop_map(|(x, y)| RoughnessParams::new(x, y).unwrap())
}

/// Direction with `cos θ` in `[lo, hi]`.
fn direction(lo: f64, hi: f64) -> impl Strategy<Value = Vec3> {
    (lo..hi, 0.0..2.0 * PI).prop_map(|(c, phi)| Vec3::from_cos_theta(c, phi))
}

fn path(k: usize) -> impl Strategy<Value = (RoughnessParams, Vec<Vec3>)> {
    (
        roughness(),
        direction(-1.0, -1e-3),
        prop::collection::vec(
            direction(-1.0, 1.0).prop_filter("off horizon", |d| d.z.abs() > 1e-3),
            k - 1,
        ),
        direction(1e-3, 1.0),
    )
        .prop_map(|(r, first, mid, last)| {
            let mut v = vec![first];
            v.extend(mid);
            v.push(last);
            (r, v)
        })
}

fn wet_params() -> WetBsdfParams {
    let particle = ParticleSpec::new(0.8, 0.3, 1.5, Rgb([0.9, 0.7, 0.5]), 1.0).unwrap();
    let medium = MediumSpec::new(1.5, 0.6, 0.4, 8.0, Rgb([0.1, 0.3, 0.6]), 1.33, vec![particle]).unwrap();
    let phase = BlendedPhase::single(PhaseFit {
        w1: 0.7,
        mu1: 0.3,
        sigma1: 0.4,
        w2: 0.3,
        mu2: 2.6,
        sigma2: 0.5,
    })
    .unwrap();
    WetBsdfParams::new(medium, phase).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn lambda_of_reversed_direction(r in roughness(), d in direction(-0.999, 0.999)) {
        let sum = lambda(d, &r) + lambda(-d, &r);
        prop_assert!((sum + 1.0).abs() < 1e-12 * (1.0 + lambda(d, &r).abs()));
    }

    #[test]
    fn lambda_sign_follows_hemisphere(r in roughness(), d in direction(-0.999, 0.999)) {
        let l = lambda(d, &r);
        if d.z > 0.0 {
            prop_assert!(l >= 0.0);
        } else {
            prop_assert!(l <= -1.0);
        }
    }

    #[test]
    fn dp_equals_recursion((r, dirs) in (1usize..9).prop_flat_map(path)) {
        let l: Vec<f64> = dirs.iter().map(|&d| lambda(d, &r)).collect();
        let dp = segterm_dp_lambdas(&l).unwrap();
        let rec = segterm_recursive_lambdas(&l);
        prop_assert!(dp >= 0.0);
        prop_assert!((dp - rec).abs() <= 1e-12 * rec.abs());
    }

    #[test]
    fn masking_terms_are_nonnegative(kind_idx in 0usize..8, (r, dirs) in path(3)) {
        let kind = MaskingKind::ALL[kind_idx];
        let n = kind.bounces();
        let mut d: Vec<Vec3> = dirs[..n].to_vec();
        d.push(dirs[3]);
        let l: Vec<f64> = d.iter().map(|&v| lambda(v, &r)).collect();
        match masking_term(kind, &l, &MaskingOptions::default()) {
            Ok(v) => prop_assert!(v.value.is_finite() && v.value >= 0.0, "{} = {}", v.branch_id, v.value),
            Err(Error::UndefinedBranch(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn hapke_k_is_at_least_one_and_increasing(x in 0.0f64..0.999, dx in 1e-6f64..1e-3) {
        let k = hapke_k_of(x);
        prop_assert!(k >= 1.0);
        if x + dx < 1.0 {
            prop_assert!(hapke_k_of(x + dx) > k);
        }
    }

    #[test]
    fn transmittance_is_multiplicative_up_to_k(a in 0.0f64..3.0, b in 0.0f64..3.0) {
        let m = wet_params().medium;
        let k = m.hapke_k();
        let lhs = m.transmittance(a + b) * k;
        let rhs = m.transmittance(a) * m.transmittance(b);
        for c in 0..3 {
            prop_assert!((lhs[c] - rhs[c]).abs() <= 1e-12 * rhs[c].max(1e-300));
        }
    }

    #[test]
    fn wet_reflection_is_reciprocal(wi in direction(0.05, 1.0), wo in direction(0.05, 1.0)) {
        let p = wet_params();
        let a = eval_single_r(wi, wo, &p).unwrap();
        let b = eval_single_r(wo, wi, &p).unwrap();
        for c in 0..3 {
            prop_assert!((a[c] - b[c]).abs() <= 1e-12 * a[c].abs().max(1e-300));
        }
    }

    #[test]
    fn blended_phase_is_nonnegative(theta in 0.0f64..PI, w in 0.0f64..1.0) {
        let fits = vec![
            PhaseFit { w1: 0.7, mu1: 0.3, sigma1: 0.4, w2: 0.3, mu2: 2.6, sigma2: 0.5 },
            PhaseFit::single(1.0, 1.2, 0.8),
        ];
        let phase = BlendedPhase::new(fits, vec![w, 1.0 - w]).unwrap();
        prop_assert!(phase.eval_normalized(theta) >= 0.0);
    }

    #[test]
    fn single_bounce_is_reciprocal(r in roughness(), wi in direction(0.02, 1.0), wo in direction(0.02, 1.0)) {
        let f = FresnelSpec::constant(Rgb([0.9, 0.5, 0.2])).unwrap();
        let a = brdf::single_bounce(wi, wo, &r, &f);
        let b = brdf::single_bounce(wo, wi, &r, &f);
        for c in 0..3 {
            prop_assert!((a[c] - b[c]).abs() <= 1e-12 * a[c].abs().max(1e-300));
        }
    }

    #[test]
    fn visible_normals_face_the_view(r in roughness(), v in direction(-0.99, 0.99), u1 in 0.0f64..1.0, u2 in 0.0f64..1.0) {
        let h = sample_visible_normal(v, &r, u1, u2);
        prop_assert!((h.length() - 1.0).abs() < 1e-9);
        prop_assert!(h.z >= 0.0);
        prop_assert!(v.dot(h) >= -1e-9);
        prop_assert!(vndf(v, h, &r) >= 0.0);
    }

    #[test]
    fn second_order_beta_symmetry(a1 in 0.2f64..4.0, a2 in 0.2f64..4.0, b1 in 0.2f64..4.0, b2 in 0.2f64..4.0) {
        let rep = gen_beta_symmetry_check(&GenBetaArgs::new(&[a1, a2], &[b1, b2]).unwrap()).unwrap();
        prop_assert!(rep.rel_err < 1e-6);
    }
}
