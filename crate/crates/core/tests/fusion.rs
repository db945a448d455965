mod common;

use actionvlad::fusion::{concat_fuse, early_fuse, late_fuse, multicrop_pool, score_fuse_external};
use actionvlad::{actionvlad_descriptor, actionvlad_forward, FeatureMap, ScoreVector};
use common::*;
use rand::Rng;

#[test]
fn early_fusion_sums_unnormalized_aggregates() {
    let mut r = rng(30);
    for _ in 0..20 {
        let d = r.random_range(1..=6);
        let (ta, tb) = (r.random_range(1..=4), r.random_range(1..=4));
        let (na, nb) = (r.random_range(1..=5), r.random_range(1..=5));
        let a = random_map(&mut r, ta, na, d);
        let b = random_map(&mut r, tb, nb, d);
        let k = r.random_range(1..=4);
        let cb = random_codebook(&mut r, k, d, 3.0);
        let fused = early_fuse(&a, &b).unwrap();
        assert_eq!(fused.len(), a.len() + b.len());
        let va = actionvlad_forward(&a, &cb).unwrap();
        let vb = actionvlad_forward(&b, &cb).unwrap();
        let sum: Vec<f64> = va.as_slice().iter().zip(vb.as_slice()).map(|(x, y)| x + y).collect();
        let v = actionvlad_forward(&fused, &cb).unwrap();
        assert!(max_abs_diff(v.as_slice(), &sum) <= 1e-12);

        let crops = [a.clone(), b.clone(), a.clone()];
        let pooled = actionvlad_forward(&multicrop_pool(&crops).unwrap(), &cb).unwrap();
        let sum3: Vec<f64> = sum.iter().zip(va.as_slice()).map(|(x, y)| x + y).collect();
        assert!(max_abs_diff(pooled.as_slice(), &sum3) <= 1e-12);
    }
}

#[test]
fn concat_preserves_each_stream() {
    let mut r = rng(31);
    for _ in 0..10 {
        let (t, n) = (r.random_range(1..=4), r.random_range(1..=5));
        let (da, db) = (r.random_range(1..=4), r.random_range(1..=4));
        let a = random_map(&mut r, t, n, da);
        let b = random_map(&mut r, t, n, db);
        let c = concat_fuse(&a, &b).unwrap();
        assert_eq!(c.dim(), da + db);
        for ti in 0..t {
            for i in 0..n {
                let x = c.descriptor(ti, i);
                assert_eq!(&x[..da], a.descriptor(ti, i));
                assert_eq!(&x[da..], b.descriptor(ti, i));
            }
        }
    }
}

#[test]
fn duplicated_crops_leave_descriptor_unchanged() {
    let mut r = rng(32);
    for _ in 0..20 {
        let f = random_map(&mut r, 3, 4, 5);
        let cb = random_codebook(&mut r, 3, 5, 2.0);
        let single = actionvlad_descriptor(&multicrop_pool(std::slice::from_ref(&f)).unwrap(), &cb).unwrap();
        assert_eq!(single, actionvlad_descriptor(&f, &cb).unwrap());
        let double = actionvlad_descriptor(&multicrop_pool(&[f.clone(), f.clone()]).unwrap(), &cb).unwrap();
        assert!(max_abs_diff(single.values(), double.values()) <= 1e-12);
    }
}

#[test]
fn five_crops_of_25_frames() {
    let crops: Vec<FeatureMap> = (0..5).map(|_| FeatureMap::new(25, 4, 2, vec![0.5; 200]).unwrap()).collect();
    let pooled = multicrop_pool(&crops).unwrap();
    assert_eq!(pooled.frames(), 125);
    assert_eq!(pooled.len(), 125 * 4);
}

fn probs(r: &mut impl Rng, c: usize) -> ScoreVector {
    let raw: Vec<f64> = (0..c).map(|_| r.random_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    ScoreVector::probabilities(raw.iter().map(|x| x / s).collect()).unwrap()
}

#[test]
fn late_fusion_properties() {
    let mut r = rng(33);
    for _ in 0..100 {
        let c = r.random_range(2..10);
        let (a, b) = (probs(&mut r, c), probs(&mut r, c));
        let w = r.random_range(0.0..=1.0);
        let fused = late_fuse(&a, &b, w).unwrap();
        for i in 0..c {
            let expected = w * a.values()[i] + (1.0 - w) * b.values()[i];
            assert_eq!(fused.values()[i], expected);
        }
        let s = r.random_range(0.1..10.0);
        let scale = |v: &ScoreVector| ScoreVector::raw(v.values().iter().map(|x| x * s).collect()).unwrap();
        assert_eq!(late_fuse(&scale(&a), &scale(&b), w).unwrap().argmax(), fused.argmax());
        assert_eq!(late_fuse(&a, &b, 0.5).unwrap(), late_fuse(&b, &a, 0.5).unwrap());
    }
}

#[test]
fn external_fusion_matches_direct_formula() {
    let mut r = rng(34);
    for _ in 0..100 {
        let c = r.random_range(2..10);
        let m = uniform(&mut r, c, 3.0);
        let e = uniform(&mut r, c, 50.0);
        let w = r.random_range(0.0..=1.0);
        let fused = score_fuse_external(
            &ScoreVector::raw(m.clone()).unwrap(),
            &ScoreVector::raw(e.clone()).unwrap(),
            w,
        )
        .unwrap();
        let mm = |v: &[f64]| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            v.iter().map(|x| (x - lo) / (hi - lo)).collect::<Vec<_>>()
        };
        let (nm, ne) = (mm(&m), mm(&e));
        let expected: Vec<f64> = (0..c).map(|i| w * nm[i] + (1.0 - w) * ne[i]).collect();
        assert!(max_abs_diff(fused.values(), &expected) <= 1e-15);
    }
}
