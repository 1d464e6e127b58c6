use bandinv_core::experiments::{
    generate_instance, rank_k_sample, rank_k_sweep, run_sweep, run_sweep_on, tridiagonal, InstanceKind, RankKOutput,
    SweepConfig,
};
use bandinv_core::partition::BlockPartition;
use bandinv_core::sharp::{sharp_estimate, BlockInstance};

fn config(eps: Vec<f64>) -> SweepConfig {
    SweepConfig {
        seed: 7,
        m: 20,
        p: 1,
        n: 10,
        eps_list: eps,
        samples_per_eps: 16,
        k: 0,
        kind: InstanceKind::BandedDominant,
    }
}

#[test]
fn tridiagonal_sweep_is_first_order() {
    let out = run_sweep_on(&tridiagonal(20, 4.0, 1.0), &config(vec![1e-2, 1e-3, 1e-4])).unwrap();
    assert!(out.fit.slope.unwrap() >= 0.9);
    assert!((out.rows[2].ratio - 1.0).abs() <= 0.01);
    assert!(out.rows.iter().all(|r| r.valid && r.worst_case_converged && r.ratio > 0.0));
}

#[test]
fn analytic_column_is_sharp_estimate() {
    let cfg = config(vec![1e-3]);
    let out = run_sweep(&cfg).unwrap();
    let k0 = generate_instance(cfg.seed, cfg.m, cfg.p, cfg.kind).unwrap();
    let part = BlockPartition::new(cfg.m, cfg.n, cfg.p).unwrap();
    let s = sharp_estimate(&part.a(&k0), &part.d(&k0)).unwrap();
    assert_eq!(out.rows[0].analytic, s.first_order);
}

#[test]
fn csv_is_byte_identical() {
    let a = run_sweep(&config(vec![1e-2, 1e-3])).unwrap().to_csv();
    let b = run_sweep(&config(vec![1e-2, 1e-3])).unwrap().to_csv();
    assert_eq!(a, b);
}

#[test]
fn large_eps_rows_are_flagged() {
    let out = run_sweep_on(&tridiagonal(20, 4.0, 1.0), &config(vec![0.3, 1e-3, 1e-4, 1e-5])).unwrap();
    assert!(!out.rows[0].valid);
    assert!(out.rows[1..].iter().all(|r| r.valid));
    assert_eq!(out.fit.valid_rows, 3);
}

#[test]
fn rank_one_sweep_is_finite() {
    let mut cfg = config(vec![1e-3]);
    cfg.m = 14;
    cfg.n = 6;
    cfg.k = 1;
    cfg.samples_per_eps = 100;
    match rank_k_sweep(&cfg).unwrap() {
        RankKOutput::RankK(rows) => {
            assert_eq!(rows.len(), 100);
            for r in rows {
                let ratio = r.ratio.unwrap();
                assert!(ratio.is_finite() && ratio > 0.0);
                assert_eq!(r.b_leading.len(), 1);
            }
        }
        RankKOutput::Main(_) => panic!("k = 1 must run the rank-k study"),
    }
}

#[test]
fn rank_zero_delegates_to_main_sweep() {
    let cfg = config(vec![1e-3, 1e-4]);
    let main = run_sweep(&cfg).unwrap();
    match rank_k_sweep(&cfg).unwrap() {
        RankKOutput::Main(out) => {
            assert_eq!(out.rows, main.rows);
            let c = out.fit.constant.unwrap();
            for r in &out.rows {
                assert!((r.ratio - 1.0).abs() <= c * r.eps * (1.0 + 1e-12));
            }
        }
        RankKOutput::RankK(_) => panic!("k = 0 must delegate"),
    }
}

#[test]
fn exact_rank_k_over_seeds() {
    let k0 = generate_instance(3, 18, 2, InstanceKind::BandedDominant).unwrap();
    let inst = BlockInstance::from_matrix(&k0, 7, 2).unwrap();
    for seed in 0..10 {
        for k in 1..=3 {
            let row = rank_k_sample(&inst, k, 0.0, seed, 0).unwrap();
            assert!(row.c_tail_relative <= 1e-10);
        }
    }
}
