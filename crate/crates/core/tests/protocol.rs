use dpshare_core::classifiers::ClassifierKind;
use dpshare_core::dataset::{Attribute, Dataset, Record, Schema};
use dpshare_core::evaluation::Averaging;
use dpshare_core::partition::{partition, PartitionSpec};
use dpshare_core::pipeline::{self, TrainSpec};
use dpshare_core::privacy::{privatize, NoiseConfig};
use dpshare_core::protocol::{OwnerState, Payload, Party, Schedule, Simulation, TraceLog};
use dpshare_core::rng;
use rand::Rng;

/// A 303-row stand-in with the shape of a cardiology table.
fn cardio(n: usize, seed: u64) -> Dataset<f64> {
    let mut s = rng::stream(seed);
    let schema = Schema::new(vec![
        Attribute::numeric("age"),
        Attribute::categorical("sex", ["0", "1"]),
        Attribute::numeric("trestbps"),
        Attribute::numeric("chol"),
        Attribute::numeric("thalach"),
        Attribute::label("num", ["0", "1"]),
    ])
    .unwrap();
    let records = (0..n)
        .map(|_| {
            let y = s.random_range(0..2usize);
            let shift = y as f64;
            Record::new(
                vec![
                    (29 + s.random_range(0..48)) as f64,
                    s.random_range(0..2) as f64,
                    120.0 + 10.0 * shift + s.random_range(-15.0..15.0),
                    230.0 + 20.0 * shift + s.random_range(-40.0..40.0),
                    160.0 - 20.0 * shift + s.random_range(-20.0..20.0),
                ],
                y,
            )
        })
        .collect();
    Dataset::new("cardio", schema, records).unwrap()
}

fn sensitive() -> PartitionSpec {
    PartitionSpec::Column { sensitive_columns: vec!["age".into(), "sex".into()] }
}

fn split_owners(ds: &Dataset<f64>, parts: usize, noise: &NoiseConfig) -> Vec<OwnerState<f64>> {
    let per = ds.len() / parts;
    (0..parts)
        .map(|i| {
            let idx: Vec<usize> = (i * per..(i + 1) * per).collect();
            OwnerState::new(i, ds.subset(&idx), sensitive(), noise.clone().with_seed(rng::derive_seed(5, &[i as u64])))
        })
        .collect()
}

#[test]
fn three_owners_pool_all_rows() {
    let ds = cardio(303, 1);
    let mut sim = Simulation::new(split_owners(&ds, 3, &NoiseConfig::default()), Schedule::RoundRobin).unwrap();
    sim.upload_round().unwrap();
    sim.train(&TrainSpec::new(ClassifierKind::Nb, 2, 3)).unwrap();
    assert_eq!(sim.csp.pooled().unwrap().len(), 303);
    let uploaded: usize = sim
        .trace()
        .messages()
        .filter_map(|m| match &m.payload {
            Payload::UploadSanitized { dataset } => Some(dataset.len()),
            _ => None,
        })
        .sum();
    assert_eq!(uploaded, 303);
    let split = sim.csp.split().unwrap();
    assert_eq!((split.train.len(), split.test.len()), (272, 31));
}

#[test]
fn one_owner_without_noise_is_the_plain_pipeline() {
    let ds = cardio(150, 2);
    let mut sim = Simulation::new(split_owners(&ds, 1, &NoiseConfig::disabled()), Schedule::RoundRobin).unwrap();
    sim.upload_round().unwrap();
    for kind in ClassifierKind::ALL {
        let mut spec = TrainSpec::new(kind, 4, 6);
        spec.config.rf.n_trees = 10;
        spec.config.ann.epochs = 20;
        sim.train(&spec).unwrap();
        assert_eq!(sim.csp.pooled().unwrap().records(), ds.records());
        let direct = pipeline::fit(&ds, &spec).unwrap();
        assert_eq!(sim.csp.model().unwrap(), &direct.model);
        let averaging = Averaging::default_for(2);
        assert_eq!(sim.csp.evaluate(averaging).unwrap(), pipeline::score(&ds, &direct, averaging).unwrap());
    }
}

#[test]
fn protocol_model_equals_pipeline_model_on_pooled_sanitized_data() {
    let ds = cardio(303, 3);
    let noise = NoiseConfig::default();
    let owners = split_owners(&ds, 3, &noise);
    // what each owner would upload, computed outside the protocol
    let sanitized: Vec<Dataset<f64>> = owners
        .iter()
        .map(|o| privatize(&partition(o.data(), &o.spec).unwrap(), &o.noise, o.noise.seed).unwrap().data)
        .collect();
    let pooled = Dataset::concat("pooled", &sanitized).unwrap();

    let mut sim = Simulation::new(owners, Schedule::RoundRobin).unwrap();
    sim.upload_round().unwrap();
    let spec = TrainSpec::new(ClassifierKind::Svm, 8, 9);
    sim.train(&spec).unwrap();
    let direct = pipeline::fit(&pooled, &spec).unwrap();

    let (probe, _) = pooled.select(&direct.split.test);
    let probe: Vec<Vec<f64>> = probe.into_iter().cycle().take(50).collect();
    let via_protocol = sim.query(2, probe.clone()).unwrap();
    assert_eq!(via_protocol, direct.model.predict(&probe).unwrap());
    assert!(sim.leakage_scan().is_clean(), "{:?}", sim.leakage_scan());
}

#[test]
fn seeded_schedule_changes_pool_order_only() {
    let ds = cardio(90, 4);
    let noise = NoiseConfig::default();
    let mut a = Simulation::new(split_owners(&ds, 3, &noise), Schedule::RoundRobin).unwrap();
    let mut b = Simulation::new(split_owners(&ds, 3, &noise), Schedule::Seeded { seed: 3 }).unwrap();
    assert_eq!(a.upload_order(), vec![0, 1, 2]);
    assert_ne!(b.upload_order(), vec![0, 1, 2]);
    a.upload_round().unwrap();
    b.upload_round().unwrap();
    assert_eq!(a.csp.received(), b.csp.received());
}

#[test]
fn traces_are_deterministic_and_replayable() {
    let run = || {
        let ds = cardio(120, 5);
        let mut sim = Simulation::new(split_owners(&ds, 3, &NoiseConfig::default()), Schedule::Seeded { seed: 1 }).unwrap();
        sim.upload_round().unwrap();
        sim.train(&TrainSpec::new(ClassifierKind::Knn, 0, 0)).unwrap();
        sim.query(1, vec![vec![50.0, 1.0, 130.0, 250.0, 150.0]]).unwrap();
        let mut out = Vec::new();
        sim.trace().write_jsonl(&mut out).unwrap();
        (out, serde_json::to_vec(&sim.csp).unwrap())
    };
    let (t1, c1) = run();
    let (t2, c2) = run();
    assert_eq!(t1, t2);
    assert_eq!(c1, c2);
    let replayed = TraceLog::<f64>::read_jsonl(&t1[..]).unwrap().replay().unwrap();
    assert_eq!(serde_json::to_vec(&replayed).unwrap(), c1);
}

#[test]
fn noise_log_never_leaves_the_owner() {
    let ds = cardio(60, 6);
    let mut sim = Simulation::new(split_owners(&ds, 2, &NoiseConfig::default()), Schedule::RoundRobin).unwrap();
    sim.upload_round().unwrap();
    let mut trace = Vec::new();
    sim.trace().write_jsonl(&mut trace).unwrap();
    let text = String::from_utf8(trace).unwrap();
    for owner in &sim.owners {
        let log = owner.noise_log().unwrap();
        // a distinctive noise value would only appear if the log itself had been sent
        let probe = log.noise[0][0].to_string();
        assert!(!text.contains(&format!("[{probe},")), "noise value {probe} found in trace");
    }
    assert!(sim.trace().messages().all(|m| m.receiver == Party::Csp));
}

#[test]
fn redraw_changes_noise_between_rounds() {
    let ds = cardio(40, 7);
    let once = NoiseConfig::default();
    let redraw = NoiseConfig { redraw_per_upload: true, ..NoiseConfig::default() };
    for (cfg, same) in [(once, true), (redraw, false)] {
        let mut sim = Simulation::new(split_owners(&ds, 1, &cfg), Schedule::RoundRobin).unwrap();
        sim.upload_round().unwrap();
        let first = sim.csp.received()[&0].clone();
        sim.upload_round().unwrap();
        assert_eq!(sim.csp.received()[&0] == first, same);
    }
}
