use satqkd::netsim::{classical_transfer_time, validate_scenario, ClassicalChannel, Direction, PassModel, Scenario};
use satqkd::orbit_link::{generate_pass, LinkBudget};
use satqkd::post_processing::{process_pass, PostParams};
use satqkd::quantum_layer::{run_pass, PassConfig, ReceiverModel, SimMode, SourceConfig};
use satqkd::Parallelism;

fn paper2017() -> Scenario {
    Scenario::load(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/paper2017.toml")).unwrap()
}

#[test]
fn reference_scenario_is_valid_and_round_trips() {
    let s = paper2017();
    assert_eq!(validate_scenario(&s), Vec::<String>::new());
    assert_eq!(s.stations.len(), 3);
    assert_eq!(s.passes.len(), 9);
    assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s);
}

#[test]
fn one_megabyte_downlink() {
    let rf = ClassicalChannel::default();
    assert_eq!(classical_transfer_time(1_000_000, &rf, Direction::Downlink), 2.0);
}

/// Distillation traffic of a ~900 kb sifted pass, summed message by
/// message, fits the default post-pass RF budget.
#[test]
fn cascade_traffic_for_a_900_kb_pass_fits_the_contact_budget() {
    let s = paper2017();
    let station = s.station("graz").unwrap().clone();
    let geom = generate_pass(&s.orbit, &station, 31.2, 1.0, 10.0).unwrap();
    let cfg = PassConfig {
        receiver: ReceiverModel::from_station(&station, &LinkBudget::default(), 1e-9, 0.01).unwrap(),
        station,
        budget: LinkBudget::default(),
        source: SourceConfig::default(),
        mode: SimMode::Aggregated,
        parallelism: Parallelism::Rayon,
    };
    let log = run_pass(&geom, &cfg, 900).unwrap();
    let out = process_pass("g900", &log, &cfg.source, &PostParams::default(), 900);
    let sifted = out.row.n_sifted;
    assert!((800_000..1_000_000).contains(&sifted), "{sifted}");
    let r = out.result.as_ref().expect("pass yields key");

    let clicks = log.receiver.len() as u64;
    let sample = (0.1 * sifted as f64).round() as u64;
    let n = sifted - sample;
    // up: measured bases, Bob's parities; down: sift flags, sampled bits and
    // positions, Alice's parities, hash, Toeplitz seed.
    let up = clicks + r.leak_ec;
    let down = clicks + 2 * sample + r.leak_ec + 64 + (n + r.final_length - 1);
    assert_eq!(out.traffic.uplink_bits, up);
    assert_eq!(out.traffic.downlink_bits, down);

    let rf = s.rf;
    let t = classical_transfer_time(up.div_ceil(8), &rf, Direction::Uplink)
        + classical_transfer_time(down.div_ceil(8), &rf, Direction::Downlink);
    assert!(t < PassModel::default().contact_budget_s, "{t} s");
}
