use bandswitch::channel::BandConfig;
use bandswitch::config::ScenarioConfig;
use bandswitch::dataset::{
    load_channel_file, read_channel_file, write_channel_file, BlockageModel, ChannelFileHeader, ChannelSource,
    SyntheticScene, SyntheticSceneConfig,
};
use bandswitch::Error;

fn bands() -> (BandConfig, BandConfig) {
    ScenarioConfig::default().bands()
}

fn scene(cfg: SyntheticSceneConfig) -> SyntheticScene {
    let (s, m) = bands();
    SyntheticScene::new(cfg, &s, &m).unwrap()
}

fn small(seed: u64) -> SyntheticSceneConfig {
    SyntheticSceneConfig {
        grid_length: 30.0,
        grid_width: 6.0,
        grid_spacing: 1.0,
        ue_count: Some(50),
        rng_seed: seed,
        ..Default::default()
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Shadowing of both bands on a coarse lattice much wider than the
/// correlation distance, so the samples are close to independent.
fn band_shadowing(c: f64) -> (Vec<f64>, Vec<f64>) {
    let sc = scene(SyntheticSceneConfig { cross_band_coefficient: c, ..small(3) });
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for i in 0..100 {
        for j in 0..100 {
            let (s, m) = sc.shadowing_db(i as f64 * 37.0, j as f64 * 37.0);
            a.push(s);
            b.push(m);
        }
    }
    (a, b)
}

#[test]
fn fully_shared_shadowing_is_identical_across_bands() {
    let (a, b) = band_shadowing(1.0);
    assert!(pearson(&a, &b) > 0.9);
    assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
}

#[test]
fn independent_shadowing_is_uncorrelated() {
    let (a, b) = band_shadowing(0.0);
    let r = pearson(&a, &b);
    assert!(r.abs() < 0.05, "{r}");
}

#[test]
fn partial_sharing_sets_the_correlation() {
    let (a, b) = band_shadowing(0.7);
    let r = pearson(&a, &b);
    assert!((r - 0.7).abs() < 0.1, "{r}");
}

#[test]
fn shadowing_has_the_configured_spread() {
    let (a, _) = band_shadowing(0.7);
    let n = a.len() as f64;
    let mean = a.iter().sum::<f64>() / n;
    let std = (a.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!((std - 5.0).abs() < 0.5, "{std}");
}

#[test]
fn spatial_correlation_decays_with_distance() {
    let sc = scene(small(4));
    let corr_at = |d: f64| {
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for i in 0..60 {
            for j in 0..60 {
                let (x, y) = (i as f64 * 41.0, j as f64 * 41.0);
                a.push(sc.shadowing_db(x, y).0);
                b.push(sc.shadowing_db(x + d, y).0);
            }
        }
        pearson(&a, &b)
    };
    let lags = [1.0, 5.0, 10.0, 20.0, 40.0];
    let corr: Vec<f64> = lags.iter().map(|&d| corr_at(d)).collect();
    assert!(corr.windows(2).all(|w| w[0] > w[1]), "{corr:?}");
    // Exponential kernel with a 10 m scale.
    for (d, r) in lags.iter().zip(&corr) {
        assert!((r - (-d / 10.0f64).exp()).abs() < 0.12, "lag {d}: {r}");
    }
}

#[test]
fn blockage_fraction_matches_probability() {
    let m = BlockageModel::new(0.4, 17).unwrap();
    let blocked = (0..100_000u64).filter(|&id| m.is_blocked(id)).count();
    let frac = blocked as f64 / 1e5;
    assert!((frac - 0.4).abs() < 0.01, "{frac}");
}

#[test]
fn blockage_sets_are_nested_in_probability() {
    let lo = BlockageModel::new(0.2, 5).unwrap();
    let hi = BlockageModel::new(0.6, 5).unwrap();
    assert!((0..10_000u64).all(|id| !lo.is_blocked(id) || hi.is_blocked(id)));
}

#[test]
fn blockage_probability_is_validated() {
    assert!(BlockageModel::new(-0.1, 0).is_err());
    assert!(BlockageModel::new(1.5, 0).is_err());
    assert!(BlockageModel::new(f64::NAN, 0).is_err());
}

#[test]
fn blocked_channel_is_weaker() {
    let sc = scene(small(6));
    for i in 0..sc.len() {
        let s = sc.sample(i);
        assert!(s.h_mm_b.norm_sqr() < s.h_mm_nb.norm_sqr());
    }
}

#[test]
fn scene_is_deterministic_in_its_seed() {
    let a = scene(small(8)).samples();
    assert_eq!(a, scene(small(8)).samples());
    assert_ne!(a, scene(small(9)).samples());
}

#[test]
fn scene_respects_ue_count_and_grid() {
    let sc = scene(small(1));
    assert_eq!(sc.len(), 50);
    let samples = sc.samples();
    assert!(samples.windows(2).all(|w| w[0].ue_id < w[1].ue_id));
    for s in &samples {
        assert!((0.0..=30.0).contains(&s.coords[0]) && (0.0..=6.0).contains(&s.coords[1]));
        assert_eq!(s.coords[2], 2.0);
    }
}

#[test]
fn channel_file_roundtrip() {
    let (s6, mm) = bands();
    let sc = scene(small(2));
    let samples = sc.samples();
    let header = ChannelFileHeader { bs_position: Some([1.0, 2.0, 3.0]), ..ChannelFileHeader::new(&s6, &mm) };
    let mut buf = Vec::new();
    write_channel_file(&mut buf, &header, &samples).unwrap();
    let back = read_channel_file(buf.as_slice()).unwrap();
    assert_eq!(back.header, header);
    assert_eq!(back.samples, samples);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ch.jsonl");
    std::fs::write(&path, &buf).unwrap();
    assert_eq!(load_channel_file(&path, &s6, &mm).unwrap().samples.len(), 50);
    let other = BandConfig { antennas_y: s6.antennas_y * 2, ..s6.clone() };
    assert!(load_channel_file(&path, &other, &mm).is_err());
    let shifted = BandConfig { center_frequency_hz: s6.center_frequency_hz * 1.1, ..s6 };
    assert!(load_channel_file(&path, &shifted, &mm).is_err());
}

fn written(samples_from: u64) -> Vec<String> {
    let (s6, mm) = bands();
    let mut buf = Vec::new();
    write_channel_file(&mut buf, &ChannelFileHeader::new(&s6, &mm), &scene(small(samples_from)).samples()[..3])
        .unwrap();
    String::from_utf8(buf).unwrap().lines().map(String::from).collect()
}

#[test]
fn duplicate_ids_are_a_schema_error() {
    let lines = written(0);
    let text = [lines[0].clone(), lines[1].clone(), lines[1].clone()].join("\n");
    assert!(matches!(read_channel_file(text.as_bytes()), Err(Error::Schema { row: 1, .. })));
}

#[test]
fn varying_height_is_a_schema_error() {
    let mut lines = written(0);
    lines[2] = lines[2].replace("\"z\":2.0", "\"z\":3.0");
    assert!(matches!(read_channel_file(lines.join("\n").as_bytes()), Err(Error::Schema { row: 1, .. })));
}

#[test]
fn bad_header_and_rows_are_parse_errors() {
    let lines = written(0);
    let cases = [
        String::new(),
        "{}".to_string(),
        lines[0].replace("bandswitch-channels", "other"),
        lines[0].replace("\"version\":1", "\"version\":2"),
        format!("{}\n{}\n[1,2", lines[0], lines[1]),
    ];
    for text in &cases {
        assert!(matches!(read_channel_file(text.as_bytes()), Err(Error::Parse { .. })), "{text:.60}");
    }
    match read_channel_file(cases[4].as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
}

#[test]
fn blank_lines_are_skipped() {
    let lines = written(0);
    let text = format!("\n{}\n\n{}\n\n{}\n", lines[0], lines[1], lines[2]);
    assert_eq!(read_channel_file(text.as_bytes()).unwrap().samples.len(), 2);
}
