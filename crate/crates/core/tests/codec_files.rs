use featgrind::features::{generate_features, load_features, save_features, FeatureKind, FeatureLayout};
use featgrind::kmeans::Metric;
use featgrind::vq::{vq_compression_ratio, CodeLayout};
use featgrind::{
    dequantize_sq, encode_vq, fit_sq, fit_vq, quantize_sq, AnyCodec, Error, Features, Features64,
    Rows, SqCodec, VqCodecF32, VqParams,
};

#[test]
fn fmat_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.fmat");
    let f = Features::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
    save_features(&f, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let back: Features = load_features(&path, FeatureLayout::Fmat1).unwrap();
    assert_eq!(back, f);
    assert_eq!(back.to_fmat_bytes(), bytes);

    std::fs::write(&path, &bytes[..bytes.len() - 2]).unwrap();
    assert!(matches!(
        load_features::<f32>(&path, FeatureLayout::Fmat1),
        Err(Error::SizeMismatch { .. })
    ));

    let mut nan = bytes.clone();
    let at = 32 + 4;
    nan[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
    std::fs::write(&path, &nan).unwrap();
    assert!(matches!(
        load_features::<f32>(&path, FeatureLayout::Fmat1),
        Err(Error::NonFinite { row: 0, col: 1 })
    ));
}

#[test]
fn sq_file_and_gather() {
    let dir = tempfile::tempdir().unwrap();
    let f: Features = generate_features(FeatureKind::LogNormal { mu: 0.0, sigma: 2.0 }, 50, 12, 3).unwrap();
    let p = fit_sq(&f, 3, 0.005).unwrap();
    let c = quantize_sq(&f, &p).unwrap();
    let path = dir.path().join("x.sqf");
    c.save(&path).unwrap();
    assert_eq!(SqCodec::load(&path).unwrap(), c);

    let any = AnyCodec::load(&path).unwrap();
    let all: Features = dequantize_sq(&c, Rows::All).unwrap();
    let picked = any.gather(&[2, 0, 2]).unwrap();
    assert_eq!(picked.row(0), all.row(2));
    assert_eq!(picked.row(1), all.row(0));
    assert_eq!(picked.row(2), all.row(2));
    assert!(matches!(any.gather(&[50]), Err(Error::RowOutOfRange { row: 50, n: 50 })));
}

#[test]
fn sq_precision_generic() {
    let f: Features64 = generate_features(FeatureKind::LogNormal { mu: -1.0, sigma: 1.5 }, 64, 8, 1).unwrap();
    let p = fit_sq(&f, 8, 0.0).unwrap();
    let c = quantize_sq(&f, &p).unwrap();
    let g: Features64 = dequantize_sq(&c, Rows::All).unwrap();
    let half = p.bucket_width() / 2.0;
    for (x, y) in f.values().iter().zip(g.values()) {
        assert_eq!(x.signum(), y.signum());
        assert!((x.abs().log2() - y.abs().log2()).abs() <= half + 1e-12);
    }
    // Same codes whether the matrix is held as f32 or f64.
    let c32 = quantize_sq(&f.cast::<f32>().unwrap(), &p).unwrap();
    assert_eq!(c32.codes().len(), c.codes().len());
}

#[test]
fn vq_one_hot_is_lossless_and_persists() {
    let f: Features = generate_features(FeatureKind::OneHot { classes: 8 }, 200, 8, 4).unwrap();
    let mut p = VqParams::new(4, 8, Metric::Euclidean);
    p.seed = 9;
    let fitted = fit_vq(&f, &p).unwrap();
    let c = encode_vq(&f, &fitted).unwrap();
    let back = featgrind::decode_vq(&c, Rows::All).unwrap();
    assert_eq!(back, f);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.vqf");
    c.save(&path).unwrap();
    let loaded = VqCodecF32::load(&path).unwrap();
    assert_eq!(loaded.codes(), c.codes());
    assert_eq!(loaded.to_vqf_bytes(), c.to_vqf_bytes());
    let any = AnyCodec::load(&path).unwrap();
    assert_eq!(any.gather(&[7, 3]).unwrap().row(0), f.row(7));
}

#[test]
fn vq_ratios() {
    let f: Features = generate_features(FeatureKind::Gaussian { mean: 0.0, std: 1.0 }, 300, 32, 2).unwrap();
    let mut p = VqParams::new(16, 256, Metric::Cosine);
    p.restarts = 1;
    let c = encode_vq(&f, &fit_vq(&f, &p).unwrap()).unwrap();
    let r = vq_compression_ratio(&c, 32);
    assert!((r.theoretical - 64.0).abs() < 1e-12);
    assert!((r.realized - 64.0).abs() < 1e-12);
    assert_eq!(c.layout, CodeLayout::Packed);
    assert_eq!(r.codebook_bytes, 2 * 256 * 16 * 4);
}
