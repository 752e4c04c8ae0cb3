use lplsh_core::index::auto_k_l;
use lplsh_core::stats::binomial_sigma;
use lplsh_core::{
    derive_params, generate_planted, linear_scan_nn, success_bound, IndexParams, LpSpace, PlantedConfig, RadiusLadder,
    SchemeConfig,
};

#[test]
fn ladder_answers_within_c_squared_of_the_oracle() {
    let (d, queries) = (12, 60);
    let inst = generate_planted(&PlantedConfig {
        n: 1_000,
        d,
        p: 1.5,
        r: 0.5,
        c: 2.0,
        planted_count: queries,
        spread: 1.0,
        seed: 4,
        max_attempts: 10_000,
    })
    .unwrap();
    let mut cfg = SchemeConfig::new(2.0, 1.5);
    cfg.knobs.kappa_w = 0.96;
    cfg.threshold_samples = 200_000;
    let scheme = derive_params(&cfg).unwrap();
    let auto = auto_k_l(&scheme, d, inst.data.len(), 3.0, 50_000, 1_000_000, 9).unwrap();
    let ladder = RadiusLadder::build(&inst.data, &scheme, IndexParams::new(auto.k, auto.l, 21), 0.5, 8.0).unwrap();
    assert_eq!(ladder.radii(), &[0.5, 1.0, 2.0, 4.0, 8.0]);

    let space = LpSpace::new(1.5, d).unwrap();
    let mut at_first_rung = 0;
    for (j, (_, q)) in inst.queries.iter().enumerate() {
        let res = ladder.query(q).unwrap();
        assert_eq!(res.effective_c, 4.0);
        let (_, nn) = linear_scan_nn(&inst.data, q, &space).unwrap();
        let Some(rung) = res.rung else { continue };
        let a = res.result.answer.unwrap();
        assert!(a.distance <= 4.0 * nn + 1e-12, "query {j}: {} vs oracle {nn}", a.distance);
        assert!(a.distance <= 2.0 * res.radius.unwrap() + 1e-12);
        if rung == 0 {
            assert_eq!(a.id, inst.truth[j]);
            at_first_rung += 1;
        }
    }
    // planted distance is exactly r_min, so rung 0 succeeds at the single-index rate
    let bound = success_bound(auto.estimate.p1.p_hat, auto.k, auto.l);
    let rate = at_first_rung as f64 / queries as f64;
    assert!(
        rate >= bound - 3.0 * binomial_sigma(bound, queries as u64),
        "rung-0 rate {rate} vs predicted {bound}"
    );
}
