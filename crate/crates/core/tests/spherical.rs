use std::f64::consts::PI;

use bgain::kernel::{AngularKernel, XiMeasure};
use bgain::quad::QuadSpec;
use bgain::radial::{ExponentTriple, RadialProfile};
use bgain::spherical::*;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn one() -> AngularKernel {
    AngularKernel::constant(1.0).unwrap()
}

fn mild() -> AngularKernel {
    AngularKernel::power(1.0, 0.1, 0.05).unwrap()
}

fn quad() -> QuadSpec {
    QuadSpec::default()
}

/// Same function without the radial metadata, forcing the generic code paths.
fn opaque(f: &VelocityFunction) -> VelocityFunction {
    let g = f.clone();
    VelocityFunction::from_fn(
        f.n(),
        format!("opaque({f})"),
        f.center().to_vec(),
        f.extent(),
        f.is_compact(),
        move |v| g.eval(v),
    )
    .unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn collision_pair_examples() {
    let (p, m) = post_collision_pair(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
    assert_eq!(p, vec![1.0, 0.0, 0.0]);
    assert_eq!(m, vec![0.0, 0.0, 0.0]);
    let (p, m) = post_collision_pair(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
    assert_eq!(p, vec![0.5, 0.5, 0.0]);
    assert_eq!(m, vec![0.5, -0.5, 0.0]);
    assert!(post_collision_pair(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn collision_geometry(k in prop::array::uniform3(-5.0f64..5.0), w in prop::array::uniform3(-1.0f64..1.0)) {
        let wn = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
        let kn2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        prop_assume!(wn > 1e-3 && kn2 > 1e-6);
        let omega: Vec<f64> = w.iter().map(|x| x / wn).collect();
        let (p, m) = post_collision_pair(&k, &omega).unwrap();
        let dot: f64 = p.iter().zip(&m).map(|(a, b)| a * b).sum();
        let e: f64 = p.iter().chain(&m).map(|x| x * x).sum();
        for i in 0..3 {
            prop_assert!((p[i] + m[i] - k[i]).abs() < 1e-12);
        }
        prop_assert!((e - kn2).abs() < 1e-12 * kn2.max(1.0));
        prop_assert!(dot.abs() < 1e-12 * kn2.max(1.0));
    }
}

#[test]
fn sphere_rule_exactness() {
    // ∫_{S²} ω_1² ω_2⁴ dω = 4π/35 and ∫_{S²} ω_1⁶ = 4π/7
    let r = SphereRule::new(3, 6).unwrap();
    let mut a = 0.0;
    let mut b = 0.0;
    for i in 0..r.len() {
        let w = r.node(i);
        a += r.weights()[i] * w[1].powi(2) * w[2].powi(4);
        b += r.weights()[i] * w[0].powi(6);
    }
    assert!(rel(a, 4.0 * PI / 35.0) < 1e-13);
    assert!(rel(b, 4.0 * PI / 7.0) < 1e-13);
    let k = SphereRule::with_kernel(3, 8, &mild()).unwrap();
    let m = XiMeasure::new(mild(), 3).unwrap();
    let cut = m.grad_cutoff(&quad()).unwrap().value().unwrap();
    assert!(rel(k.total_weight(), cut) < 1e-12);
}

#[test]
fn operator_p_examples() {
    let rule = SphereRule::new(3, 16).unwrap();
    let c = VelocityFunction::constant(3, 1.0).unwrap();
    let v = operator_p(&c, &c, &[0.3, -1.0, 2.0], &one(), &rule).unwrap();
    assert!(rel(v, 4.0 * PI) < 1e-13);
    let v = operator_p(&opaque(&c), &opaque(&c), &[0.3, -1.0, 2.0], &one(), &rule).unwrap();
    assert!(rel(v, 4.0 * PI) < 1e-13);

    // ĝ(k) = π^{3/2} e^{-|k|²/4}
    let ghat = VelocityFunction::gaussian(3, 0.25).unwrap().scaled(PI.powf(1.5));
    let oracle = 4.0 * PI.powi(4) * (-0.25f64).exp();
    let k = [0.6, 0.0, 0.8];
    for g in [ghat.clone(), opaque(&ghat)] {
        let v = operator_p(&g, &g, &k, &one(), &rule).unwrap();
        assert!(rel(v, oracle) < 1e-12, "{v} vs {oracle}");
    }
    assert!((oracle - 303.44).abs() < 0.01);
}

#[test]
fn radial_reduction_examples() {
    let m = XiMeasure::new(one(), 3).unwrap();
    let c = RadialProfile::constant(1.0);
    assert!(rel(radial_reduce_p(&c, &c, 2.0, &m, &quad()).unwrap(), 4.0 * PI) < 1e-13);
    let ind = RadialProfile::indicator(0.0, 1.0).unwrap();
    assert!(rel(radial_reduce_p(&ind, &ind, 1.5, &m, &quad()).unwrap(), 4.0 * PI / 3.0) < 1e-12);
}

#[test]
fn operator_p_matches_radial_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..20 {
        let n = if case % 3 == 0 { 2 } else { 3 };
        let kern = if case % 2 == 0 { one() } else { mild() };
        let g = if case % 4 == 1 {
            VelocityFunction::bump(n, rng.random_range(1.5..3.0)).unwrap()
        } else {
            VelocityFunction::gaussian(n, rng.random_range(0.3..2.0)).unwrap()
        };
        let h = VelocityFunction::gaussian(n, rng.random_range(0.3..2.0)).unwrap();
        let s: f64 = rng.random_range(0.01..2.0);
        let rule = SphereRule::new(n, 40).unwrap();
        let mut k = vec![0.0; n];
        k[n - 1] = s.sqrt();
        let direct = operator_p(&g, &h, &k, &kern, &rule).unwrap();
        let m = XiMeasure::new(kern.clone(), n).unwrap();
        let reduced = radial_reduce_p(g.radial().unwrap(), h.radial().unwrap(), s, &m, &quad()).unwrap();
        assert!(rel(direct, reduced) < 1e-8, "case {case}: {direct} vs {reduced}");
        // the full sphere rule agrees with the collapsed one
        let full = operator_p(&opaque(&g), &opaque(&h), &k, &kern, &rule).unwrap();
        assert!(
            rel(full, reduced) < 1e-8,
            "case {case} (full rule): {full} vs {reduced}"
        );
    }
}

#[test]
fn radiality_and_rotation_equivariance() {
    let rule = SphereRule::new(3, 20).unwrap();
    let g = VelocityFunction::gaussian(3, 0.7).unwrap();
    let h = VelocityFunction::bump(3, 2.0).unwrap();
    let (go, ho) = (opaque(&g), opaque(&h));
    let dirs = RotationSampler::new(8, 5).unwrap().directions(3);
    let vals: Vec<f64> = dirs
        .iter()
        .map(|d| {
            let k: Vec<f64> = d.iter().map(|x| 1.3 * x).collect();
            operator_p(&go, &ho, &k, &mild(), &rule).unwrap()
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    for v in &vals {
        assert!(rel(*v, mean) < 1e-9);
    }

    let gs = VelocityFunction::parse("shifted:gaussian:1,0.3,-0.2,0.5", 3).unwrap();
    let hs = VelocityFunction::parse("linearmod:shifted:gaussian:0.8,-0.4,0.1,0", 3).unwrap();
    let k = DVector::from_vec(vec![0.4, 0.9, -0.3]);
    for q in RotationSampler::new(4, 9).unwrap().rotations(3) {
        let (qa, qb) = (q.clone(), q.clone());
        let (g1, h1) = (gs.clone(), hs.clone());
        let g_rot = VelocityFunction::from_fn(3, "g∘R", vec![0.0; 3], 8.0, false, move |v| {
            let w = &qa * DVector::from_column_slice(v);
            g1.eval(w.as_slice())
        })
        .unwrap();
        let h_rot = VelocityFunction::from_fn(3, "h∘R", vec![0.0; 3], 8.0, false, move |v| {
            let w = &qb * DVector::from_column_slice(v);
            h1.eval(w.as_slice())
        })
        .unwrap();
        let lhs = operator_p(&g_rot, &h_rot, k.as_slice(), &one(), &rule).unwrap();
        let rk = &q * &k;
        let rhs = operator_p(&gs, &hs, rk.as_slice(), &one(), &rule).unwrap();
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }
}

#[test]
fn weighted_norms() {
    let m = NuMeasure::new(3, 0.0).unwrap();
    let g = VelocityFunction::gaussian(3, 1.0).unwrap();
    let oracle = (PI / 2.0).powf(0.75);
    assert!(rel(weighted_lp_norm(&g, 2.0, &m, &quad()).unwrap(), oracle) < 1e-10);
    assert!((oracle - 1.403104).abs() < 1e-6);
    let z = VelocityFunction::zero(3).unwrap();
    assert_eq!(weighted_lp_norm(&z, 2.0, &m, &quad()).unwrap(), 0.0);
    for (f, p, alpha) in [
        (VelocityFunction::gaussian(3, 0.6).unwrap(), 1.5, 1.0),
        (VelocityFunction::bump(3, 1.2).unwrap(), 3.0, -1.0),
        (VelocityFunction::bump(2, 1.0).unwrap(), 2.0, 0.5),
    ] {
        let m = NuMeasure::new(f.n(), alpha).unwrap();
        let radial = weighted_lp_norm(&f, p, &m, &quad()).unwrap();
        let generic = weighted_lp_norm(&opaque(&f), p, &m, &quad()).unwrap();
        assert!(rel(generic, radial) < 1e-8, "{f}: {generic} vs {radial}");
    }
}

#[test]
fn symmetrization_examples() {
    let sampler = RotationSampler::default();
    let g = VelocityFunction::gaussian(3, 1.0).unwrap().scaled(-2.0);
    let gs = symmetrize(&g, 2.0, &sampler).unwrap();
    for v in [[0.0, 0.0, 0.0], [0.3, 0.4, 0.5]] {
        assert_eq!(gs.eval(&v), g.eval(&v).abs());
    }
    let bump = VelocityFunction::bump(3, 2.0).unwrap();
    let f = VelocityFunction::linear_mod(&opaque(&bump)).unwrap();
    let fs = symmetrize(&f, 2.0, &RotationSampler::new(100_000, 1).unwrap()).unwrap();
    for r in [0.3f64, 0.8, 1.4] {
        let want = r / 3f64.sqrt() * bump.eval(&[r, 0.0, 0.0]);
        let got = fs.eval(&[0.0, r, 0.0]);
        assert!(rel(got, want) < 0.01, "r={r}: {got} vs {want}");
    }
    let m = NuMeasure::new(3, 0.0).unwrap();
    let fs = symmetrize(&f, 2.0, &sampler).unwrap();
    let a = weighted_lp_norm(&f, 2.0, &m, &quad()).unwrap();
    let b = weighted_lp_norm(&fs, 2.0, &m, &quad()).unwrap();
    assert!(
        rel(b, a) < 3.0 * fs.stat_error() + 1e-6,
        "{a} vs {b} (se {})",
        fs.stat_error()
    );
}

#[test]
fn symmetrization_properties() {
    let sampler = RotationSampler::new(4096, 21).unwrap();
    let f = VelocityFunction::parse("shifted:bump:1.5,0.6,0.2,-0.3", 3).unwrap();
    let fs = symmetrize(&f, 3.0, &sampler).unwrap();
    let fss = symmetrize(&opaque(&fs), 3.0, &sampler).unwrap();
    for r in [0.1, 0.5, 1.0, 1.6] {
        let (a, b) = (fs.eval(&[r, 0.0, 0.0]), fss.eval(&[0.0, 0.0, r]));
        assert!((a - b).abs() <= 1e-6 * (1.0 + a), "r={r}: {a} vs {b}");
    }
    // (f·g)★ = f★·g for radial g
    let g = VelocityFunction::gaussian(3, 0.5).unwrap();
    let fg = symmetrize(&f.product(&g).unwrap(), 2.0, &sampler).unwrap();
    let f2 = symmetrize(&f, 2.0, &sampler).unwrap();
    for r in [0.2, 0.7, 1.3] {
        let v = [r, 0.0, 0.0];
        let (a, b) = (fg.eval(&v), f2.eval(&v) * g.eval(&v));
        assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "r={r}: {a} vs {b}");
    }
}

fn random_bump(rng: &mut ChaCha8Rng, n: usize, linear: bool) -> VelocityFunction {
    let base = VelocityFunction::bump(n, rng.random_range(1.0..1.8)).unwrap();
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
    let f = VelocityFunction::shifted(&base, &c).unwrap();
    if linear {
        VelocityFunction::linear_mod(&f).unwrap()
    } else {
        f
    }
}

#[test]
fn pairing_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (n, count, order) in [(3, 2, 12), (2, 3, 24)] {
        let rule = SphereRule::new(n, order).unwrap();
        for i in 0..count {
            let f = random_bump(&mut rng, n, i % 2 == 1);
            let g = random_bump(&mut rng, n, false);
            let h = random_bump(&mut rng, n, i == 2);
            let (l, r) = lemma21_pairing(&f, &g, &h, &one(), &rule, &quad()).unwrap();
            assert!(rel(l, r) <= 1e-4, "n={n} case {i}: {l} vs {r}");
        }
    }
    let rule = SphereRule::new(3, 10).unwrap();
    let b = VelocityFunction::bump(3, 1.0).unwrap();
    let z = VelocityFunction::zero(3).unwrap();
    let (l, r) = lemma21_pairing(&b, &b, &z, &one(), &rule, &quad()).unwrap();
    assert_eq!((l, r), (0.0, 0.0));
}

#[test]
fn pairing_identity_power_kernel() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let rule = SphereRule::new(3, 14).unwrap();
    let kern = AngularKernel::power(1.0, 0.25, 0.1).unwrap();
    let (f, g, h) = (
        random_bump(&mut rng, 3, false),
        random_bump(&mut rng, 3, false),
        random_bump(&mut rng, 3, true),
    );
    let (l, r) = lemma21_pairing(&f, &g, &h, &kern, &rule, &quad()).unwrap();
    assert!(rel(l, r) <= 1e-4, "{l} vs {r}");
}

#[test]
fn symmetrization_inequality() {
    let rule = SphereRule::new(3, 12).unwrap();
    let q = QuadSpec::default().with_rel_tol(1e-8);
    for seed in 0..4u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_bump(&mut rng, 3, seed % 2 == 0);
        let g = random_bump(&mut rng, 3, false);
        let h = random_bump(&mut rng, 3, seed % 2 == 1);
        let sampler = RotationSampler::new(4096, seed).unwrap();
        for e in [(3.0, 3.0, 3.0), (2.0, 4.0, 4.0)] {
            let rep = lemma22_check(&f, &g, &h, e, &one(), &rule, &sampler, &q, 1e-4).unwrap();
            assert!(rep.pass, "seed {seed} {e:?}: {rep:?}");
        }
    }
    let (f, g, h) = (
        VelocityFunction::bump(3, 1.5).unwrap(),
        VelocityFunction::bump(3, 1.2).unwrap(),
        VelocityFunction::gaussian(3, 2.0).unwrap(),
    );
    let rep = lemma22_check(
        &f,
        &g,
        &h,
        (3.0, 3.0, 3.0),
        &one(),
        &rule,
        &RotationSampler::default(),
        &q,
        1e-4,
    )
    .unwrap();
    assert!(rel(rep.lhs, rep.rhs) < 1e-4, "{rep:?}");
    let rep = lemma22_check(
        &f.scaled(-1.0),
        &g,
        &h,
        (3.0, 3.0, 3.0),
        &one(),
        &rule,
        &RotationSampler::default(),
        &q,
        1e-4,
    )
    .unwrap();
    assert!(rep.pass);
}

#[test]
fn theorem1_examples() {
    let rule = SphereRule::new(3, 16).unwrap();
    let m = NuMeasure::new(3, 0.0).unwrap();
    let e = ExponentTriple::holder(2.0, 2.0).unwrap();
    let g = VelocityFunction::gaussian(3, 1.0).unwrap();
    let rep = theorem1_check(&g, &g, &e, &m, &one(), &rule, &quad(), 1e-4).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(
        rel(rep.constant, 4.0 * PI * 7.416298709205487) < 1e-10,
        "{}",
        rep.constant
    );

    let z = VelocityFunction::zero(3).unwrap();
    let rep = theorem1_check(&z, &g, &e, &m, &one(), &rule, &quad(), 1e-4).unwrap();
    assert_eq!(rep.lhs, 0.0);
    assert!(rep.pass);

    let eps = 1e-3;
    let ge = VelocityFunction::from_radial(3, RadialProfile::extremizer(eps, 2.0, 3, 0.0).unwrap()).unwrap();
    let rep = theorem1_check(&ge, &ge, &e, &m, &one(), &rule, &quad(), 1e-4).unwrap();
    assert!(rep.pass && rep.ratio >= 0.995, "{rep:?}");
}

#[test]
fn theorem1_non_radial_inputs() {
    let rule = SphereRule::new(3, 12).unwrap();
    let q = QuadSpec::default().with_rel_tol(1e-8);
    let g = VelocityFunction::parse("shifted:bump:1.5,0.4,0,0", 3).unwrap();
    let h = VelocityFunction::parse("linearmod:shifted:bump:1.2,0,-0.3,0.2", 3).unwrap();
    for (p, qq, alpha) in [(2.0, 2.0, 0.0), (4.0, 4.0 / 3.0, -2.0)] {
        let e = ExponentTriple::holder(p, qq).unwrap();
        let m = NuMeasure::new(3, alpha).unwrap();
        let rep = theorem1_check(&g, &h, &e, &m, &mild(), &rule, &q, 1e-4).unwrap();
        assert!(rep.pass && rep.ratio < 1.0, "{rep:?}");
    }
    // generic and radial evaluations of ‖𝒫(g,h)‖ agree
    let g = VelocityFunction::bump(3, 1.4).unwrap();
    let h = VelocityFunction::gaussian(3, 1.5).unwrap();
    let e = ExponentTriple::holder(2.0, 2.0).unwrap();
    let m = NuMeasure::new(3, 0.0).unwrap();
    let a = theorem1_check(&g, &h, &e, &m, &one(), &rule, &q, 1e-4).unwrap();
    let b = theorem1_check(&opaque(&g), &opaque(&h), &e, &m, &one(), &rule, &q, 1e-4).unwrap();
    assert!(rel(b.lhs, a.lhs) < 1e-5, "{} vs {}", b.lhs, a.lhs);
}
