//! Batch statistic: sampled points are generic for the bulk S-matrix solve.

use qab::config::RunConfig;
use qab::sampling::{point_rng, sample_kinematics};
use qab_core::smatrix::{null_dimension, INTERTWINER_GENERATORS};

#[test]
fn at_least_95_of_100_m2_samples_give_a_one_dimensional_null_space() {
    let cfg = RunConfig::default();
    let p = cfg.params().unwrap();
    let generic = (0..100)
        .filter(|&s| {
            let k1 = sample_kinematics(2, &p, &mut point_rng(9, s, 0)).unwrap();
            let k2 = sample_kinematics(2, &p, &mut point_rng(9, s, 1)).unwrap();
            null_dimension(&k1, &k2, &p, &INTERTWINER_GENERATORS).is_ok_and(|d| d.dim == 1)
        })
        .count();
    assert!(generic >= 95, "{generic}/100 generic");
}
