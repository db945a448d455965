use actionvlad_demo::{anchor_color, compare_pooling, field_rgba, fit_anchors};
use serde_json::Value;

#[test]
fn field_has_one_rgba_pixel_per_cell() {
    let img = field_rgba(&[-1.0, 0.0, 1.0, 0.0], 50.0, 8, 4, 2.0).unwrap();
    assert_eq!(img.len(), 8 * 4 * 4);
    assert!(img.chunks(4).all(|px| px[3] == 255));
    // Sharp assignment: the left edge takes anchor 0's color, the right edge anchor 1's.
    assert_eq!(&img[..3], &anchor_color(0));
    assert_eq!(&img[4 * 7..4 * 7 + 3], &anchor_color(1));
}

#[test]
fn single_anchor_field_is_uniform() {
    let img = field_rgba(&[0.3, -0.2], 1.0, 5, 5, 1.0).unwrap();
    assert!(img.chunks(4).all(|px| px[..3] == anchor_color(0)));
}

#[test]
fn pooling_report_shapes_and_norms() {
    let pts = [-1.0, 0.1, -0.9, -0.1, 1.0, 0.2, 1.2, 0.0, 0.9, -0.3];
    let v: Value = serde_json::from_str(&compare_pooling(&pts, &[-1.0, 0.0, 1.0, 0.0], 10.0).unwrap()).unwrap();
    let vlad: Vec<f64> = serde_json::from_value(v["vlad"].clone()).unwrap();
    assert_eq!(vlad.len(), 4);
    assert!((vlad.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    let assignments: Vec<usize> = serde_json::from_value(v["assignments"].clone()).unwrap();
    assert_eq!(assignments, vec![0, 0, 1, 1, 1]);
    let mass: Vec<f64> = serde_json::from_value(v["mass"].clone()).unwrap();
    assert!((mass.iter().sum::<f64>() - 5.0).abs() < 1e-12);
    assert_eq!(v["avg"].as_array().unwrap().len(), 2);
    assert_eq!(v["residuals"].as_array().unwrap().len(), 2);
}

#[test]
fn odd_coordinate_counts_are_rejected() {
    assert!(compare_pooling(&[0.0, 1.0, 2.0], &[0.0, 0.0], 1.0).is_err());
    assert!(field_rgba(&[0.0], 1.0, 2, 2, 1.0).is_err());
    assert!(fit_anchors(&[0.0, 1.0, 2.0], 1, 0).is_err());
}

#[test]
fn kmeans_recovers_two_clusters() {
    let pts = [-5.0, 0.0, -5.1, 0.1, -4.9, -0.1, 5.0, 0.0, 5.1, 0.1, 4.9, -0.1];
    let mut c = fit_anchors(&pts, 2, 3).unwrap();
    if c[0] > c[2] {
        c.rotate_left(2);
    }
    assert!((c[0] + 5.0).abs() < 1e-12 && c[1].abs() < 1e-12);
    assert!((c[2] - 5.0).abs() < 1e-12 && c[3].abs() < 1e-12);
}
