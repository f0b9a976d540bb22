mod common;

use common::*;
use maxprob_core::enumerate::enumerate_working_set;
use maxprob_core::model::{relative_entropy, shannon_entropy, PriorGenerator, WorkingSetSpec};
use maxprob_core::rational::to_real;
use maxprob_core::solve::{
    expoc, log_multinomial_prob, maxprob, rem_solve, stationarity_residual, RemOptions, SolveOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn argmax_dominates_every_member() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let opts = SolveOptions::default();
    let mut checked = 0;
    while checked < 60 {
        let inst = random_instance(&mut rng, 4, 60);
        let q = PriorGenerator::<f64>::from_rationals(&inst.q).unwrap();
        let Ok(res) = maxprob(&inst.spec, &q, &opts) else { continue };
        assert!(inst.spec.contains(&res.argmax));
        for v in enumerate_working_set(&inst.spec).unwrap() {
            let s = log_multinomial_prob(&v, &q).unwrap();
            assert!(s <= res.log_prob + 1e-9, "{v:?} beats {:?}", res.argmax);
        }
        checked += 1;
    }
}

#[test]
fn exact_argmax_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let opts = SolveOptions::default();
    for _ in 0..200 {
        let inst = random_instance(&mut rng, 3, 15);
        let q = PriorGenerator::<f64>::from_rationals(&inst.q).unwrap();
        let exact = exact_argmax_set(&naive_working_set(&inst.spec), &inst.q);
        match maxprob(&inst.spec, &q, &opts) {
            Ok(res) => {
                assert_eq!(res.tied, exact, "{:?}", inst.spec);
                assert_eq!(res.argmax, exact[0]);
            }
            Err(e) => assert!(e.is_infeasible() && exact.is_empty(), "{e}"),
        }
    }
}

#[test]
fn expoc_matches_exact_rational_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let opts = SolveOptions::default();
    for _ in 0..60 {
        let inst = random_instance(&mut rng, 4, 14);
        let set = naive_working_set(&inst.spec);
        if set.is_empty() {
            continue;
        }
        let weights: Vec<_> = set.iter().map(|v| exact_prob(v.counts(), &inst.q)).collect();
        let total: maxprob_core::Rational = weights.iter().cloned().sum();
        let q = PriorGenerator::<f64>::from_rationals(&inst.q).unwrap();
        let res = expoc(&inst.spec, &q, &opts).unwrap();
        for i in 0..inst.spec.m {
            let mean: maxprob_core::Rational = set
                .iter()
                .zip(&weights)
                .map(|(v, w)| w * maxprob_core::rational::from_u64(v.counts()[i]))
                .sum::<maxprob_core::Rational>()
                / &total;
            let want: f64 = to_real(&mean);
            assert!((res.mean[i] - want).abs() <= 1e-10 * want.abs().max(1.0), "cell {i}: {} vs {want}", res.mean[i]);
        }
    }
}

#[test]
fn expoc_mean_stays_on_the_constraint_plane() {
    let opts = SolveOptions::default();
    for (label, q) in [("q", reference_prior()), ("uniform", PriorGenerator::uniform(4).unwrap())] {
        for n in [10u64, 100, 700] {
            let res = expoc(&reference_spec(n), &q, &opts).unwrap();
            let total: f64 = res.mean.iter().sum();
            let moment: f64 = res.mean.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
            assert!((total - n as f64).abs() < 1e-9 * n as f64, "{label} n={n}");
            assert!((moment - 3.2 * n as f64).abs() < 1e-9 * n as f64, "{label} n={n}");
        }
    }
}

#[test]
fn serial_and_parallel_agree_bit_for_bit() {
    for q in [reference_prior(), PriorGenerator::uniform(4).unwrap()] {
        let spec = reference_spec(400);
        let a = maxprob(&spec, &q, &SolveOptions::serial()).unwrap();
        let b = maxprob(&spec, &q, &SolveOptions::default()).unwrap();
        assert_eq!(a.argmax, b.argmax);
        assert_eq!(a.log_prob.to_bits(), b.log_prob.to_bits());
        let a = expoc(&spec, &q, &SolveOptions::serial()).unwrap();
        let b = expoc(&spec, &q, &SolveOptions::default()).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.mean), bits(&b.mean));
    }
}

#[test]
fn uniform_prior_rem_is_shannon_maxent() {
    let q = PriorGenerator::<f64>::uniform(4).unwrap();
    let res = rem_solve(&q, &[reference_constraint()], &RemOptions::default()).unwrap();
    let h = relative_entropy(&res.p_hat, &q).unwrap();
    assert!((h - (shannon_entropy(&res.p_hat) - 4f64.ln())).abs() < 1e-13);
    // Shannon maxent under a mean constraint is geometric in x.
    let p = res.p_hat.as_slice();
    let r1 = p[1] / p[0];
    for i in 1..3 {
        assert!((p[i + 1] / p[i] - r1).abs() < 1e-10);
    }
}

#[test]
fn rem_matches_frequency_limits() {
    // The large-n maxprob and expoc frequencies close in on p̂.
    for q in [reference_prior(), PriorGenerator::uniform(4).unwrap()] {
        let p = rem_solve(&q, &[reference_constraint()], &RemOptions::default()).unwrap().p_hat;
        let e = expoc(&reference_spec(1000), &q, &SolveOptions::default()).unwrap().frequency();
        let m = maxprob(&reference_spec(1000), &q, &SolveOptions::default()).unwrap().frequency();
        assert!(sup_diff(&e, p.as_slice()) < 5e-4);
        assert!(sup_diff(&m, p.as_slice()) < 1e-3);
    }
}

#[test]
fn stationarity_residual_shrinks_with_n() {
    let opts = SolveOptions::default();
    let c = [reference_constraint()];
    let residual = |q: &PriorGenerator<f64>, n: u64| {
        let v = maxprob(&reference_spec(n), q, &opts).unwrap().argmax;
        let v: Vec<f64> = v.counts().iter().map(|&k| k as f64).collect();
        stationarity_residual(&v, q, &c)
    };
    let u = PriorGenerator::uniform(4).unwrap();
    assert!(residual(&u, 1000).unwrap() < residual(&u, 10).unwrap());
    // [1, 0, 5, 4] has an empty cell on the support, where the gradient is undefined.
    let q = reference_prior();
    assert!(residual(&q, 10).is_err());
    assert!(residual(&q, 1000).unwrap() < residual(&q, 50).unwrap());
}

#[test]
fn rem_stationarity_is_exact() {
    for q in [reference_prior(), PriorGenerator::uniform(4).unwrap()] {
        let p = rem_solve(&q, &[reference_constraint()], &RemOptions::default()).unwrap().p_hat;
        let r = stationarity_residual(p.as_slice(), &q, &[reference_constraint()]).unwrap();
        assert!(r < 1e-10, "{r}");
    }
}

#[test]
fn rem_dominates_random_feasible_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 5, 30);
        if inst.spec.constraints.len() != 1 || inst.spec.m < 2 {
            continue;
        }
        let c = &inst.spec.constraints[0];
        let x: Vec<f64> = c.coefficients();
        let mu: f64 = to_real(&c.target);
        let vertices = feasible_vertices(&x, mu);
        let q = PriorGenerator::<f64>::from_rationals(&inst.q).unwrap();
        let Ok(res) = rem_solve(&q, &inst.spec.constraints, &RemOptions::default()) else {
            assert!(vertices.is_empty());
            continue;
        };
        let best = relative_entropy(&res.p_hat, &q).unwrap();
        for _ in 0..20 {
            let p = maxprob_core::model::ProbabilityVector::new(random_mixture(&mut rng, &vertices)).unwrap();
            assert!(relative_entropy(&p, &q).unwrap() <= best + 1e-10);
        }
    }
}

#[test]
fn working_set_mass_is_one_without_constraints() {
    let q = PriorGenerator::<f64>::new(vec![0.5, 0.3, 0.2]).unwrap();
    let spec = WorkingSetSpec::new(3, 30, Vec::new()).unwrap();
    let res = expoc(&spec, &q, &SolveOptions::default()).unwrap();
    assert!(res.log_total_prob.abs() < 1e-12);
    for (mean, qi) in res.mean.iter().zip(q.q()) {
        assert!((mean - 30.0 * qi).abs() < 1e-10);
    }
}
