use super::*;
use crate::complexity::WiScheme;
use crate::est_conv::EstContext;
use crate::est_dl::{FrameInfo, PreStage};
use crate::link::simulate_frame;

fn small(estimators: &[&str]) -> Scenario {
    Scenario {
        frames: 4,
        snr_db: vec![10.0, 30.0],
        estimators: estimators.iter().map(|s| s.to_string()).collect(),
        phy: PhySpec {
            n_symbols: 10,
            modulation: Modulation::Qpsk,
        },
        ..Default::default()
    }
}

fn identity(ctx: &EstContext) -> impl FnMut(Pipeline) -> Result<Vec<crate::nn::Net>> + '_ {
    move |p| p.identity_nets(ctx)
}

#[test]
fn scenario_toml_defaults_and_errors() {
    let s = Scenario::from_toml(
        r#"
        seed = 7
        estimators = ["DPA", "STA-FNN"]
        [channel]
        model = "VTV-UC"
        "#,
    )
    .unwrap();
    assert_eq!(s.seed, 7);
    assert_eq!(s.frames, 200);
    assert_eq!(
        s.snr_db,
        vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]
    );
    assert_eq!(s.phy.n_symbols, 100);
    assert_eq!(s.channel_model().unwrap().doppler_hz, 250.0);
    for bad in [
        "frames = 0",
        "bogus = 1",
        "estimators = [\"XYZ\"]",
        "[channel]\nmodel = \"nowhere\"",
    ] {
        assert!(
            matches!(Scenario::from_toml(bad), Err(Error::Config(_))),
            "{bad}"
        );
    }
}

#[test]
fn estimator_names_parse() {
    assert_eq!(
        "genie".parse::<EstimatorSpec>().unwrap(),
        EstimatorSpec::Genie
    );
    assert_eq!(
        "LS".parse::<EstimatorSpec>().unwrap(),
        EstimatorSpec::LsHeld
    );
    assert_eq!(
        "lmmse".parse::<EstimatorSpec>().unwrap(),
        EstimatorSpec::Lmmse(LmmseFrame::Comb)
    );
    assert_eq!(
        "LMMSE-FP".parse::<EstimatorSpec>().unwrap(),
        EstimatorSpec::Lmmse(LmmseFrame::Fp)
    );
    assert_eq!(
        "STA".parse::<EstimatorSpec>().unwrap(),
        EstimatorSpec::Conventional(CountTarget::Sta)
    );
    assert_eq!(
        "WI-FP-ALS".parse::<EstimatorSpec>().unwrap(),
        EstimatorSpec::Conventional(CountTarget::Wi(WiScheme::FpAls))
    );
    assert_eq!(
        "sta-fnn".parse::<EstimatorSpec>().unwrap(),
        EstimatorSpec::Learned(Pipeline::StaFnn)
    );
    assert!("nope".parse::<EstimatorSpec>().is_err());
}

#[test]
fn genie_has_zero_nmse_and_no_errors_without_noise() {
    let mut s = small(&["Genie"]);
    s.snr_db = vec![f64::INFINITY];
    let ctx = EstContext::new(&s.phy_config());
    let r = Evaluator::new(&s, identity(&ctx)).unwrap().run(1).unwrap();
    assert_eq!(r.rows[0].nmse, 0.0);
    assert_eq!(r.rows[0].ber, 0.0);
    assert_eq!(r.rows[0].frames, 4);
}

#[test]
fn identity_pipelines_report_like_their_conventional_stage() {
    let pairs = [
        ("STA", "STA-FNN"),
        ("TRFI", "TRFI-FNN"),
        ("DPA", "LSTM-FNN-DPA"),
        ("RBF", "ChannelNet"),
        ("ADD-TT", "TS-ChannelNet"),
        ("WI-FP-ALS", "FP-ALS-DN-CNN"),
    ];
    let names: Vec<&str> = pairs.iter().flat_map(|(a, b)| [*a, *b]).collect();
    let s = small(&names);
    let ctx = EstContext::new(&s.phy_config());
    let r = Evaluator::new(&s, identity(&ctx)).unwrap().run(1).unwrap();
    for (conv, dl) in pairs {
        let (a, b) = (r.series(conv), r.series(dl));
        assert_eq!(a.len(), 2);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(
                (x.ber, x.nmse, x.stderr_ber, x.stderr_nmse),
                (y.ber, y.nmse, y.stderr_ber, y.stderr_nmse),
                "{dl}"
            );
        }
    }
}

#[test]
fn worker_count_does_not_change_bytes() {
    let s = small(&["LS", "DPA", "STA", "LMMSE"]);
    let ctx = EstContext::new(&s.phy_config());
    let ev = Evaluator::new(&s, identity(&ctx)).unwrap();
    let one = ev.run(1).unwrap().to_csv().unwrap();
    assert_eq!(one, ev.run(3).unwrap().to_csv().unwrap());
    assert_eq!(one, ev.run(1).unwrap().to_csv().unwrap());
}

#[test]
fn lmmse_beats_ls_held_constant() {
    let mut s = small(&["LS", "LMMSE"]);
    s.snr_db = vec![30.0];
    let ctx = EstContext::new(&s.phy_config());
    let r = Evaluator::new(&s, identity(&ctx)).unwrap().run(1).unwrap();
    assert!(r.rows[1].nmse < r.rows[0].nmse, "{:?}", r.rows);
}

#[test]
fn csv_round_trip_and_row_count() {
    let rows: Vec<MetricRow> = ["A", "B"]
        .iter()
        .flat_map(|e| {
            (0..9).map(move |i| MetricRow {
                estimator: e.to_string(),
                snr_db: 5.0 * i as f64,
                ber: 0.1 / (i + 1) as f64,
                nmse: 1.0 / 3.0 / (i + 1) as f64,
                stderr_ber: 1e-3,
                stderr_nmse: 2e-4,
                frames: 200,
            })
        })
        .collect();
    let r = MetricsReport::new(rows).unwrap();
    let csv = r.to_csv().unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "estimator,snr_db,ber,nmse,stderr_ber,stderr_nmse,frames"
    );
    assert_eq!(lines.count(), 18);
    assert_eq!(MetricsReport::from_csv(&csv).unwrap(), r);
    assert!(MetricsReport::new(vec![]).is_err());
    let svg = r.ber_svg("t");
    assert!(svg.starts_with("<svg") && svg.matches("<polyline").count() == 2);
}

#[test]
fn missing_model_names_the_pipeline() {
    let mut s = small(&["STA-FNN"]);
    s.models_dir = std::env::temp_dir().join("ddce-no-such-dir");
    let e = run_montecarlo(&s).unwrap_err();
    assert!(
        matches!(&e, Error::Config(m) if m.contains("STA-FNN")),
        "{e}"
    );
}

#[test]
fn models_round_trip_through_files() {
    let s = small(&["ChannelNet"]);
    let ctx = EstContext::new(&s.phy_config());
    let dir = tempfile::tempdir().unwrap();
    let nets = Pipeline::ChannelNet.identity_nets(&ctx).unwrap();
    let paths = save_models(dir.path(), Pipeline::ChannelNet, &nets, &[vec![1.0, 0.5]]).unwrap();
    assert_eq!(paths.len(), 2);
    assert!(paths[0].to_string_lossy().ends_with("channelnet-sr.ddcn"));
    assert!(dir.path().join("channelnet-sr.loss.csv").exists());
    let back = load_models(dir.path(), Pipeline::ChannelNet).unwrap();
    assert_eq!(back[1].params(), nets[1].params());
}

#[test]
fn dataset_counts_and_file_round_trip() {
    let s = small(&[]);
    let d = gen_dataset(&s, Pipeline::StaFnn, 10, 40.0).unwrap();
    assert_eq!(d.len(), 10);
    assert_eq!(d.n_train, 8);
    assert_eq!(d.inputs.shape, vec![10, 104]);
    let mut buf = Vec::new();
    d.write(&mut buf).unwrap();
    let back = Dataset::read(&mut buf.as_slice()).unwrap();
    assert_eq!(back, d);
    assert_eq!(back.split(DatasetSplit::Test).0.batch(), 2);

    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(
        Dataset::read(&mut bad.as_slice()),
        Err(Error::Config(_))
    ));
    let cut = &buf[..buf.len() - 3];
    assert!(matches!(
        Dataset::read(&mut &cut[..]),
        Err(Error::Io { .. })
    ));
}

#[test]
fn dataset_targets_are_the_true_channel() {
    let s = small(&[]);
    let d = gen_dataset(&s, Pipeline::ChannelNet, 3, 40.0).unwrap();
    let cfg = s.phy_config();
    let m = s.channel_model().unwrap();
    // Record 1 is the second training frame.
    let f = simulate_frame(
        &cfg,
        &m,
        &PilotLayout::Comb,
        DatasetSplit::Train.seed(s.seed),
        1,
        0,
        40.0,
    )
    .unwrap();
    let want: Vec<f64> = crate::est_dl::grid_to_image(&f.truth)
        .iter()
        .map(|&v| v as f32 as f64)
        .collect();
    assert_eq!(d.targets.item(1), want.as_slice());
}

#[test]
fn dataset_pairs_have_the_pre_stage_nmse() {
    let mut s = small(&[]);
    s.phy.n_symbols = 20;
    let d = gen_dataset(&s, Pipeline::StaFnn, 400, 20.0).unwrap();
    let (x, y) = (&d.inputs.data, &d.targets.data);
    let stored = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        / y.iter().map(|b| b * b).sum::<f64>();

    // The same training frames through the standalone estimator in f64.
    let cfg = s.phy_config();
    let ctx = EstContext::new(&cfg);
    let m = s.channel_model().unwrap();
    let pre = PreStage::new(Pipeline::StaFnn, s.pipeline.clone());
    let (mut err, mut pow) = (0.0, 0.0);
    for i in 0..16 {
        let f = simulate_frame(
            &cfg,
            &m,
            &PilotLayout::Comb,
            DatasetSplit::Train.seed(s.seed),
            i,
            0,
            20.0,
        )
        .unwrap();
        let info = FrameInfo {
            noise_var: f.noise_var,
            doppler_hz: m.doppler_hz,
        };
        let h = pre.estimate(&f.rx, &ctx, &info).unwrap().h;
        err += h.distance_sqr(&f.truth);
        pow += f.truth.energy();
    }
    let test_frames = 4;
    for i in 0..test_frames {
        let f = simulate_frame(
            &cfg,
            &m,
            &PilotLayout::Comb,
            DatasetSplit::Test.seed(s.seed),
            i,
            0,
            20.0,
        )
        .unwrap();
        let info = FrameInfo {
            noise_var: f.noise_var,
            doppler_hz: m.doppler_hz,
        };
        let h = pre.estimate(&f.rx, &ctx, &info).unwrap().h;
        err += h.distance_sqr(&f.truth);
        pow += f.truth.energy();
    }
    let standalone = err / pow;
    assert!(
        (stored / standalone - 1.0).abs() < 0.02,
        "{stored} vs {standalone}"
    );
}

#[test]
fn recurrent_records_hold_whole_frames() {
    assert_eq!(records_for_samples(Pipeline::LstmDpaTa, 20_000, 100), 200);
    assert_eq!(records_for_samples(Pipeline::LstmDpaTa, 150, 100), 2);
    assert_eq!(records_for_samples(Pipeline::StaFnn, 150, 100), 150);
    assert_eq!(records_for_samples(Pipeline::ChannelNet, 7, 100), 7);
}

#[test]
fn lmmse_on_the_wi_frame_bounds_wi() {
    let mut s = small(&["LMMSE", "LMMSE-FP", "WI-FP-ALS", "LMMSE-LP", "WI-LP"]);
    s.phy.n_symbols = 40;
    s.snr_db = vec![30.0];
    let ctx = EstContext::new(&s.phy_config());
    let r = Evaluator::new(&s, identity(&ctx)).unwrap().run(1).unwrap();
    let nmse = |e: &str| r.get(e, 30.0).unwrap().nmse;
    assert!(nmse("LMMSE-FP") < nmse("WI-FP-ALS"));
    assert!(nmse("LMMSE-FP") < nmse("LMMSE"));
    assert!(nmse("LMMSE-LP") < nmse("WI-LP"));
}
