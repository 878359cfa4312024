use hypertime::data::{load_csv_multivariate, load_ucr_tsv, save_csv_multivariate, save_ucr_tsv, synth_corpus, Dataset, Preset};
use hypertime::hypertime::{HyperTimeModel, TrainConfig};
use hypertime::inr::{init_params, InrModel, MlpSpec};
use hypertime::{Error, TimeSeries};

#[test]
fn ucr_file_roundtrip_keeps_raw_values() {
    let dir = tempfile::tempdir().unwrap();
    let d = synth_corpus(Preset::AmChirp, 5, 40, 2).unwrap();
    let path = dir.path().join("c.tsv");
    save_ucr_tsv(&d, &path).unwrap();
    let back = load_ucr_tsv(&path).unwrap();
    assert_eq!(back.len(), 5);
    for (a, b) in d.series.iter().zip(&back.series) {
        for (x, y) in a.denormalized()[0].iter().zip(&b.denormalized()[0]) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}

#[test]
fn multichannel_csv_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let series: Vec<TimeSeries> = (0..3)
        .map(|k| {
            let c0 = (0..12).map(|i| (i * k) as f64 * 0.25).collect();
            let c1 = (0..12).map(|i| 4.0 - i as f64 * 0.5 + k as f64).collect();
            TimeSeries::from_raw(vec![c0, c1]).unwrap()
        })
        .collect();
    let d = Dataset::new("mc", series, None).unwrap();
    let path = dir.path().join("mc.csv");
    save_csv_multivariate(&d, &path).unwrap();
    let back = load_csv_multivariate(&path, 2).unwrap();
    assert_eq!(back.channels(), Some(2));
    for (a, b) in d.series.iter().zip(&back.series) {
        assert_eq!(a.denormalized(), b.denormalized());
    }
}

#[test]
fn model_files_roundtrip_and_reject_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let inr = InrModel {
        params: init_params(&MlpSpec::siren(1), 4),
        scale: synth_corpus(Preset::Multisine, 2, 16, 0).unwrap().series[0].scale().to_vec(),
    };
    let p = dir.path().join("m.inr");
    inr.save(&p).unwrap();
    assert_eq!(InrModel::load(&p).unwrap(), inr);

    let cfg = TrainConfig {
        encoder_hidden: vec![4],
        hyper_hidden: vec![4],
        hypo_hidden: vec![4],
        latent_dim: 3,
        ..TrainConfig::default()
    };
    let hyt = HyperTimeModel::init(2, &cfg, 1).unwrap();
    let q = dir.path().join("m.hyt");
    hyt.save(&q).unwrap();
    assert_eq!(HyperTimeModel::load(&q).unwrap(), hyt);

    let bytes = std::fs::read(&q).unwrap();
    assert!(matches!(HyperTimeModel::from_bytes(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
    assert!(InrModel::from_bytes(&bytes).is_err());
}
