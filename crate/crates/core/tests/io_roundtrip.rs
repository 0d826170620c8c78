use saliency_bench::engine::{mini_vgg, Conv2d, Layer, ModelSpec};
use saliency_bench::error::Error;
use saliency_bench::fixture::{generate_fixture, lesion_detector, FixtureSpec};
use saliency_bench::io::*;
use saliency_bench::saliency::{MethodId, SaliencyMap};

#[test]
fn model_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for model in [mini_vgg(64, 1).unwrap(), lesion_detector(64).unwrap()] {
        let path = dir.path().join("m.smdl");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);
        for (a, b) in model.layers().iter().zip(back.layers()) {
            if let (Layer::Conv2d(x), Layer::Conv2d(y)) = (a, b) {
                assert!(x
                    .weights
                    .iter()
                    .zip(&y.weights)
                    .all(|(p, q)| p.to_bits() == q.to_bits()));
            }
        }
    }
}

#[test]
fn header_blob_mismatch_is_reported() {
    // Header says Conv 3->8, blob holds weights for 3->16.
    let narrow = ModelSpec::new(
        [3, 8, 8],
        vec![Layer::Conv2d(Conv2d::zeros(3, 8, 3, 1, 1)), Layer::GlobalMaxPool],
    )
    .unwrap();
    let wide = ModelSpec::new(
        [3, 8, 8],
        vec![Layer::Conv2d(Conv2d::zeros(3, 16, 3, 1, 1)), Layer::GlobalMaxPool],
    )
    .unwrap();
    let a = encode_model(&narrow);
    let b = encode_model(&wide);
    let header_len = |m: &[u8]| 8 + u32::from_le_bytes(m[4..8].try_into().unwrap()) as usize;
    let mut spliced = a[..header_len(&a)].to_vec();
    spliced.extend_from_slice(&b[header_len(&b)..]);
    match decode_model(&spliced) {
        Err(Error::CountMismatch { layer: 0, kind, .. }) => assert_eq!(kind, "Conv2D"),
        other => panic!("expected CountMismatch, got {other:?}"),
    }
}

#[test]
fn salm_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<f64> = (0..35).map(|i| (i as f32 * 0.37 - 4.0) as f64).collect();
    let map = SaliencyMap::new(7, 5, values, MethodId::CompositeLrp, 1).unwrap();
    let path = dir.path().join("m.salm");
    write_salm(&map, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"SALM");
    assert_eq!(bytes.len(), 16 + 35 * 4);
    let back = read_salm(&path).unwrap().into_map(MethodId::CompositeLrp, 1).unwrap();
    assert!(back
        .values()
        .iter()
        .zip(map.values())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn fixture_files_are_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let spec = FixtureSpec {
        width: 512,
        height: 256,
        lesion_count: 4,
        ..Default::default()
    };
    let mut outputs = Vec::new();
    for run in 0..2 {
        let f = generate_fixture(99, &spec).unwrap();
        let png = dir.path().join(format!("s{run}.png"));
        let json = dir.path().join(format!("a{run}.json"));
        write_slide_png(&f.slide, &png).unwrap();
        write_annotations(&f.polygons, &json).unwrap();
        outputs.push((std::fs::read(&png).unwrap(), std::fs::read(&json).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let f = generate_fixture(99, &spec).unwrap();
    let slide = read_slide_png(dir.path().join("s0.png")).unwrap();
    assert_eq!(slide.pixels(), f.slide.pixels());
    assert_eq!(read_annotations(dir.path().join("a0.json")).unwrap(), f.polygons);
}

#[test]
fn annotation_json_shape() {
    let polygons = parse_annotations(r#"{"polygons": [[[1, 2], [3.5, 4], [5, 0]]]}"#).unwrap();
    assert_eq!(polygons, vec![vec![[1.0, 2.0], [3.5, 4.0], [5.0, 0.0]]]);
    assert!(parse_annotations(r#"{"polygons": [[[1, 2, 3]]]}"#).is_err());
    let empty = generate_fixture(
        1,
        &FixtureSpec {
            lesion_count: 0,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(annotations_json(&empty.polygons), r#"{"polygons":[]}"#);
}

#[test]
fn heatmap_png_written() {
    let dir = tempfile::tempdir().unwrap();
    let map = SaliencyMap::new(3, 2, vec![0.0, 1.0, -1.0, 0.5, 0.0, 0.0], MethodId::Cam, 0).unwrap();
    let path = dir.path().join("h.png");
    render_heatmap(&map, &path).unwrap();
    let img = read_slide_png(&path).unwrap();
    assert_eq!(img.rgb(1, 0), [255, 0, 0]);
    assert_eq!(img.rgb(2, 0), [0, 0, 255]);
    assert_eq!(img.rgb(0, 0), [255, 255, 255]);
}
