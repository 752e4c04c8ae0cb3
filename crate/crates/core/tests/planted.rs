use lplsh_core::{generate_planted, linear_scan_nn, Error, LpSpace, PlantedConfig};

fn config(n: usize, d: usize, planted: usize, seed: u64) -> PlantedConfig {
    PlantedConfig {
        n,
        d,
        planted_count: planted,
        seed,
        ..PlantedConfig::default()
    }
}

#[test]
fn planted_neighbor_is_the_unique_point_within_cr() {
    for (p, d) in [(1.5, 16), (1.2, 8), (2.0, 32)] {
        let cfg = PlantedConfig {
            p,
            ..config(800, d, 25, 7)
        };
        let inst = generate_planted(&cfg).unwrap();
        let space = LpSpace::new(p, d).unwrap();
        let far = cfg.c * cfg.r;
        for (j, (_, q)) in inst.queries.iter().enumerate() {
            let (nn, dist) = linear_scan_nn(&inst.data, q, &space).unwrap();
            assert_eq!(nn, inst.truth[j]);
            assert!((dist - cfg.r).abs() < 1e-12, "p={p} query {j}: {dist}");
            let close = inst
                .data
                .iter()
                .filter(|(_, x)| space.distance(x, q).unwrap() < far)
                .count();
            assert_eq!(close, 1, "p={p} query {j}");
        }
    }
}

#[test]
fn single_point_instance() {
    let inst = generate_planted(&config(1, 3, 1, 2)).unwrap();
    assert_eq!(inst.truth, vec![0]);
    let space = LpSpace::new(1.5, 3).unwrap();
    let (id, dist) = linear_scan_nn(&inst.data, inst.queries.point(0), &space).unwrap();
    assert_eq!(id, 0);
    assert!((dist - 1.0).abs() < 1e-12);
}

#[test]
fn same_seed_same_instance() {
    let a = generate_planted(&config(300, 5, 10, 11)).unwrap();
    let b = generate_planted(&config(300, 5, 10, 11)).unwrap();
    let c = generate_planted(&config(300, 5, 10, 12)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.data, c.data);
}

#[test]
fn crowded_geometry_fails_explicitly() {
    let cfg = PlantedConfig {
        r: 50.0,
        max_attempts: 200,
        ..config(100, 4, 3, 1)
    };
    assert!(matches!(generate_planted(&cfg), Err(Error::InfeasibleGeometry(_))));
    assert!(generate_planted(&config(5, 4, 6, 1)).is_err());
    assert!(generate_planted(&config(0, 4, 0, 1)).is_err());
}
