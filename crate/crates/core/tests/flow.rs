use ladderbus_core::appgraph::{generate_synthetic, max_edges};
use ladderbus_core::controlgen::decode_programs;
use ladderbus_core::costmodel::{calibrate, fpga_observations};
use ladderbus_core::grouping::{Algorithm, Unlimited};
use ladderbus_core::pipeline::{run_flow, FlowConfig};
use proptest::prelude::*;

fn algorithm() -> impl Strategy<Value = Algorithm> {
    prop_oneof![Just(Algorithm::Greedy), Just(Algorithm::MaxClique)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flow_is_sound_on_small_graphs(
        n in 2usize..14,
        fill in 0.0f64..0.4,
        seed in any::<u64>(),
        algo in algorithm(),
        frames in 1usize..4,
        extra_tiles in 0usize..4,
    ) {
        let edges = (fill * max_edges(n) as f64) as usize;
        let g = generate_synthetic(n, edges, seed).unwrap();
        let cfg = FlowConfig {
            algorithm: algo,
            seed,
            frames,
            n_tiles: Some(n.max(2) + extra_tiles),
            ..FlowConfig::default()
        };
        let k = calibrate(&fpga_observations()).unwrap();
        let f = run_flow(&g, &cfg, &k, &mut Unlimited).unwrap();

        prop_assert_eq!(f.paths.len(), edges);
        prop_assert!(f.scenarios.len() >= g.max_total_degree());
        f.scenarios.validate(&f.paths).unwrap();
        prop_assert!(f.sim.is_clean());
        prop_assert!(f.sim.delivered.iter().all(|&d| d == frames as u64));
        prop_assert_eq!(f.sim.frame_latency, f.scenarios.len());
        prop_assert_eq!(f.sim.steps, frames * f.scenarios.len());
        prop_assert_eq!(&decode_programs(&f.topology, &f.programs).unwrap()[..], f.scenarios.switch_vectors());
        prop_assert!((0.0..=1.0).contains(&f.cost.control_fraction));
    }

    #[test]
    fn flow_is_deterministic(n in 2usize..12, seed in any::<u64>(), algo in algorithm()) {
        let g = generate_synthetic(n, max_edges(n) / 4, seed).unwrap();
        let cfg = FlowConfig { algorithm: algo, seed, ..FlowConfig::default() };
        let k = calibrate(&fpga_observations()).unwrap();
        let a = run_flow(&g, &cfg, &k, &mut Unlimited).unwrap();
        let b = run_flow(&g, &cfg, &k, &mut Unlimited).unwrap();
        prop_assert_eq!(a, b);
    }
}
