//! End-to-end properties of the online simulator.

use vne_core::scenario::{generate_scenario, ScenarioConfig, SliceSpec, SubstrateSpec};
use vne_core::sim::{feasibility_oracle, run_on, run_scenario};
use vne_core::{AlgoConfig, Algorithm, RewardKind, Scenario};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn busy(seed: u64, count: usize) -> Scenario {
    generate_scenario(&ScenarioConfig {
        substrate: SubstrateSpec::Waxman { nodes: 30, alpha: 0.5, beta: 0.2 },
        slices: SliceSpec { count, ..SliceSpec::default() },
        arrival_rate: 0.1,
        seed,
        ..ScenarioConfig::default()
    })
    .unwrap()
}

fn light(alg: Algorithm) -> AlgoConfig {
    let mut cfg = AlgoConfig::new(alg);
    cfg.iterations = 3;
    cfg.uct.budget = 60;
    cfg
}

#[test]
fn every_algorithm_passes_the_oracle() {
    let sc = busy(1, 60);
    for alg in Algorithm::ALL {
        for reward in [RewardKind::Rc, RewardKind::Afbd] {
            let cfg = AlgoConfig { reward, ..light(alg) };
            let rep = run_scenario::<f64>(&sc, &cfg, 4).unwrap();
            assert!(rep.accepted > 0 && rep.accepted < rep.arrived, "{alg} accepted {}", rep.accepted);
            assert_eq!(feasibility_oracle(&sc.substrate, &sc.requests, &rep), vec![], "{alg} {reward:?}");
            assert!((0.0..=1.0).contains(&rep.rtc_sum) && (0.0..=1.0).contains(&rep.rtc_mean));
            assert_eq!(rep.acceptance_ratio, rep.accepted as f64 / rep.arrived as f64);
        }
    }
}

#[test]
fn residuals_return_to_capacity_once_all_have_left() {
    let sc = busy(2, 40);
    let mut net = sc.substrate.pristine();
    let rep = run_on::<f64, _>(&mut net, &sc.requests, &light(Algorithm::Nepa), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    // the live slices are exactly the accepted ones departing after the last arrival
    let last = sc.requests.last().unwrap().t_arrive;
    let expect = rep.records.iter().zip(&sc.requests).filter(|(r, s)| r.accepted && s.t_depart > last).count();
    assert_eq!(rep.live_at_end, expect);
    assert_eq!(net.release_all(), expect);
    assert_eq!(net.total_cpu_occupied(), 0);
    assert_eq!(net.total_bw_occupied(), 0);
}

#[test]
fn reports_are_seed_deterministic() {
    let sc = busy(3, 30);
    let cfg = light(Algorithm::Nepa);
    let strip = |seed| {
        let r = run_scenario::<f64>(&sc, &cfg, seed).unwrap();
        r.records.into_iter().map(|x| (x.accepted, x.hosts, x.link_map, x.reward)).collect::<Vec<_>>()
    };
    assert_eq!(strip(5), strip(5));
}

#[test]
fn single_precision_runs_are_feasible() {
    let sc = busy(4, 30);
    let rep = run_scenario::<f32>(&sc, &light(Algorithm::Nepa), 1).unwrap();
    assert!(rep.accepted > 0);
    assert_eq!(feasibility_oracle(&sc.substrate, &sc.requests, &rep), vec![]);
}

#[test]
fn scenario_files_round_trip_through_disk() {
    let sc = busy(5, 10);
    let dir = std::env::temp_dir().join(format!("vne-sim-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("s.json");
    sc.save(&path).unwrap();
    let back = Scenario::load(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    let cfg = light(Algorithm::Uct);
    let a = run_scenario::<f64>(&sc, &cfg, 2).unwrap();
    let b = run_scenario::<f64>(&back, &cfg, 2).unwrap();
    assert_eq!(a.accepted, b.accepted);
    assert_eq!(a.rtc_sum, b.rtc_sum);
}
